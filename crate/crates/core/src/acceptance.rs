//! End-to-end acceptance checks. Each criterion runs at its stated tolerance
//! and reports a measured value; nothing here is tuned to pass.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::time::Instant;

use crate::amplitudes::SingleKernel;
use crate::error::{Error, Result};
use crate::model::{random_graded_model, GenericCavityModel, LambdaAtomParams, Sector};
use crate::linalg::CMatrix;
use crate::oracle::{
    build_hamiltonian, compare_two_photon, evolve, extract_out, mode_grid, prepare_one_photon, prepare_two_photon,
    DiscreteWaveguide, Integrator, DEFAULT_DIM_CAP,
};
use crate::real::cplx;
use crate::scattering::experiments::{fig1_experiment, t_norm_sweep, Colour, Fig1Options, PhotonClass, PlaneGrid, PulseOrder};
use crate::scattering::smear::amplitude_row;
use crate::scattering::{
    apply_smatrix, make_in_state, order_exchange_defect, sequential_prediction, Axis, Envelope, InStateSpec, OutGrid,
    Shape, SmearOptions,
};
use crate::spectral::{effective_hamiltonian, model_spectra, EigenOptions};
use crate::twophoton::{full_kernel, raw_kernel_lambda, s0_kernel, t_kernel_generic, t_kernel_lambda, KernelOptions};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub id: u8,
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{tag}] {:>2} {}: {} ({:.1} s)", self.id, self.name, self.detail, self.seconds)
    }
}

pub const CRITERIA: [(u8, &str); 11] = [
    (1, "single-photon unitarity"),
    (2, "resonant conversion"),
    (3, "closed form vs spectral sums"),
    (4, "raw form equals S0 + iT"),
    (5, "degenerate collapse"),
    (6, "cluster decomposition"),
    (7, "sequential scattering"),
    (8, "two-colour ordering"),
    (9, "oracle equivalence"),
    (10, "two-photon flux conservation"),
    (11, "spectral residuals"),
];

/// Run one criterion. Numerical failures inside a check are reported as a
/// failed outcome rather than an error.
pub fn run(id: u8) -> Result<Outcome> {
    let name = CRITERIA
        .iter()
        .find(|(i, _)| *i == id)
        .map(|(_, n)| n.to_string())
        .ok_or_else(|| Error::Usage(format!("no acceptance criterion {id}; valid ids are 1 to 11")))?;
    let t = Instant::now();
    let res = match id {
        1 => unitarity(),
        2 => resonant_conversion(),
        3 => closed_vs_generic(),
        4 => raw_equals_full(),
        5 => degenerate_collapse(),
        6 => cluster_decomposition(),
        7 => sequential(),
        8 => ordering(),
        9 => oracle_equivalence(),
        10 => flux(),
        _ => spectral_residuals(),
    };
    let (passed, detail) = res.unwrap_or_else(|e| (false, format!("error: {e}")));
    Ok(Outcome { id, name, passed, detail, seconds: t.elapsed().as_secs_f64() })
}

pub fn run_all() -> Vec<Outcome> {
    CRITERIA.iter().map(|(id, _)| run(*id).expect("listed criterion")).collect()
}

type Check = Result<(bool, String)>;

fn linspace(a: f64, b: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| a + (b - a) * i as f64 / (n - 1) as f64)
}

fn unitarity() -> Check {
    let p = LambdaAtomParams::new(0.7, 1.3, 3.0, -2.0, 0.0)?;
    let single = SingleKernel::lambda(p)?;
    let g = p.big_gamma();
    let mut worst: f64 = 0.0;
    for k in linspace(p.delta2 - 20.0 * g, p.delta1 + 20.0 * g, 1000) {
        for nu in 0..2 {
            worst = worst.max(single.unitarity_defect(k, nu));
        }
    }
    Ok((worst <= 1e-12, format!("max |1 - Σ|t|²| = {worst:.2e} (limit 1e-12)")))
}

fn resonant_conversion() -> Check {
    let p: LambdaAtomParams<f64> = LambdaAtomParams::new(1.0, 1.0, 2.0, -1.0, 0.0)?;
    let t21 = crate::amplitudes::t_lambda(p.delta1, 1, 0, &p);
    let t11 = crate::amplitudes::t_lambda(p.delta1, 0, 0, &p);
    let (d21, d11): (f64, f64) = ((t21.norm() - 1.0).abs(), t11.norm());
    Ok((d21.max(d11) <= 1e-12, format!("||t21| - 1| = {d21:.2e}, |t11| = {d11:.2e} (limit 1e-12)")))
}

fn closed_vs_generic() -> Check {
    let p = LambdaAtomParams::new(0.8, 1.7, 2.5, -1.5, 0.4)?;
    let closed = SingleKernel::lambda(p)?;
    let generic = SingleKernel::generic(&p.to_generic()?, &EigenOptions::default())?;
    let mut dt: f64 = 0.0;
    for k in linspace(-15.0, 15.0, 1000) {
        for mu in 0..2 {
            for nu in 0..2 {
                dt = dt.max((closed.t(k, mu, nu) - generic.t(k, mu, nu)).norm());
            }
        }
    }
    let e = [p.ground_energy(0), p.ground_energy(1)];
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut dk: f64 = 0.0;
    let mut pair_terms = 0;
    for nu in 0..2 {
        let a = t_kernel_lambda(&p, nu);
        let b = t_kernel_generic(&generic, nu)?;
        // the two-excitation pole term carries a K = k₁ + k₂ factor
        pair_terms += b.terms.iter().flatten().filter(|t| t.factors.len() == 3 && t.factors[2].arg.coeffs[2] == 1 && t.factors[2].arg.coeffs[3] == 1).count();
        for mu in 0..2 {
            for _ in 0..200 {
                let (p1, p2, k1) = (rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
                let x = [p1, p2, k1, p1 + p2 + e[mu] - e[nu] - k1];
                let va = a.one_delta_density(mu, &x);
                let vb = b.one_delta_density(mu, &x);
                dk = dk.max((va - vb).norm() / va.norm().max(1.0));
            }
        }
    }
    let passed = dt <= 1e-12 && dk <= 1e-10 && pair_terms == 0;
    Ok((passed, format!("t: {dt:.2e} (limit 1e-12), T: {dk:.2e} (limit 1e-10), two-excitation terms: {pair_terms}")))
}

fn random_lorentz_spec<R: Rng>(rng: &mut R, p: &LambdaAtomParams<f64>) -> InStateSpec {
    let span = (p.delta2 - 1.0)..(p.delta1 + 1.0);
    InStateSpec {
        kbar1: rng.gen_range(span.clone()),
        kbar2: rng.gen_range(span),
        alpha1: rng.gen_range(0.2..1.0),
        alpha2: rng.gen_range(0.2..1.0),
        l: rng.gen_range(0.0..5.0),
        nu: rng.gen_range(0..2),
        shape: Shape::Lorentzian,
    }
}

fn raw_equals_full() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let d1 = rng.gen_range(0.5..3.0);
        let p = LambdaAtomParams::new(rng.gen_range(0.3..1.5), rng.gen_range(0.3..1.5), d1, d1 - rng.gen_range(0.5..4.0), rng.gen_range(-0.5..0.5))?;
        let spec = random_lorentz_spec(&mut rng, &p);
        let state = make_in_state(&spec, None)?;
        let single = SingleKernel::lambda(p)?;
        let raw = raw_kernel_lambda(&p, spec.nu);
        let full = full_kernel(&single, spec.nu, &KernelOptions::default())?;
        let lo = p.delta2.min(spec.kbar1.min(spec.kbar2)) - 2.0;
        let hi = p.delta1.max(spec.kbar1.max(spec.kbar2)) + 2.0;
        let pts: Vec<[f64; 2]> = (0..100).map(|_| [rng.gen_range(lo..hi), rng.gen_range(lo..hi)]).collect();
        for mu in 0..2 {
            let a = amplitude_row(&raw, &state, mu, &pts, false, &SmearOptions::residue())?;
            let b = amplitude_row(&full, &state, mu, &pts, false, &SmearOptions::residue())?;
            let num: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).norm_sqr()).sum();
            let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
            worst = worst.max((num / den).sqrt());
        }
    }
    Ok((worst <= 1e-8, format!("max relative error over 5 scenarios {worst:.2e} (limit 1e-8)")))
}

/// Λ atom whose two ground states share one energy.
pub fn degenerate_lambda(g1: f64, g2: f64, omega: f64) -> Result<GenericCavityModel<f64>> {
    let c = |x: f64| cplx(x, 0.0);
    let g = g1 + g2;
    GenericCavityModel::new(
        g,
        vec![
            Sector::new(vec!["g1".into(), "g2".into()], CMatrix::from_diag(&[c(0.0), c(0.0)])),
            Sector::new(vec!["e".into()], CMatrix::from_diag(&[c(omega)])),
            Sector::empty(),
        ],
        vec![CMatrix::from_fn(2, 1, |i, _| c(([g1, g2][i] / g).sqrt())), CMatrix::zeros(1, 0)],
    )
}

/// Kerr-type single-mode cavity with one ground state.
pub fn kerr_cavity(omega: f64, u: f64) -> Result<GenericCavityModel<f64>> {
    let c = |x: f64| cplx(x, 0.0);
    GenericCavityModel::new(
        1.0,
        vec![
            Sector::new(vec!["0".into()], CMatrix::from_diag(&[c(0.0)])),
            Sector::new(vec!["1".into()], CMatrix::from_diag(&[c(omega)])),
            Sector::new(vec!["2".into()], CMatrix::from_diag(&[c(2.0 * omega + u)])),
        ],
        vec![CMatrix::from_diag(&[c(1.0)]), CMatrix::from_diag(&[c(2f64.sqrt())])],
    )
}

fn lorentz(k1: f64, k2: f64, a1: f64, a2: f64, l: f64, nu: usize) -> InStateSpec {
    InStateSpec { kbar1: k1, kbar2: k2, alpha1: a1, alpha2: a2, l, nu, shape: Shape::Lorentzian }
}

fn degenerate_collapse() -> Check {
    let single = SingleKernel::generic(&degenerate_lambda(0.9, 0.5, 0.7)?, &EigenOptions::default())?;
    let state = make_in_state(&lorentz(0.4, 1.1, 0.3, 0.2, 3.0, 0), None)?;
    let pts: Vec<[f64; 2]> = linspace(-1.0, 2.5, 40).flat_map(|a| linspace(-1.0, 2.5, 10).map(move |b| [a, b])).collect();
    let pred = sequential_prediction(&state, &single, &OutGrid::scattered(pts.clone()));
    let mut prod: f64 = 0.0;
    for collapse in [true, false] {
        let k = s0_kernel(&single, 0, &KernelOptions { collapse_degenerate: collapse, ..Default::default() });
        for mu in 0..2 {
            let a = amplitude_row(&k, &state, mu, &pts, false, &SmearOptions::residue())?;
            let num: f64 = a.iter().zip(&pred.amplitudes[mu]).map(|(x, y)| (x - y).norm_sqr()).sum();
            let den: f64 = pred.amplitudes[mu].iter().map(|y| y.norm_sqr()).sum();
            prod = prod.max((num / den).sqrt());
        }
    }
    // one ground state: swapping which pulse leads changes nothing once
    // the pulses are apart
    let single = SingleKernel::generic(&kerr_cavity(0.5, 0.8)?, &EigenOptions::default())?;
    let full = full_kernel(&single, 0, &KernelOptions::default())?;
    let pts: Vec<[f64; 2]> = linspace(0.0, 1.4, 20).flat_map(|a| linspace(0.0, 1.4, 5).map(move |b| [a, b])).collect();
    let a = make_in_state(&lorentz(0.3, 0.9, 0.2, 0.2, 200.0, 0), None)?;
    let b = make_in_state(&lorentz(0.9, 0.3, 0.2, 0.2, 200.0, 0), None)?;
    let fa = amplitude_row(&full, &a, 0, &pts, false, &SmearOptions::residue())?;
    let fb = amplitude_row(&full, &b, 0, &pts, false, &SmearOptions::residue())?;
    let num: f64 = fa.iter().zip(&fb).map(|(x, y)| (x.norm() - y.norm()).powi(2)).sum();
    let den: f64 = fa.iter().map(|x| x.norm_sqr()).sum();
    let order = (num / den).sqrt();
    Ok((
        prod <= 1e-8 && order <= 1e-8,
        format!("S0 vs product {prod:.2e}, ordering {order:.2e} (limit 1e-8)"),
    ))
}

fn cluster_decomposition() -> Check {
    let p = LambdaAtomParams::new(1.0, 1.0, 1.0, -1.0, 0.0)?;
    let single = SingleKernel::lambda(p)?;
    let alpha = 0.2;
    let base = lorentz(1.0, 1.0, alpha, alpha, 0.0, 0);
    let grid = PlaneGrid { k_center: 2.0, k_scale: 0.4, r_center: 0.0, r_scale: 2.0, k_panels: 16, r_panels: 16, order: 8 };
    let al = [0.0, 3.0, 5.0, 8.0, 12.0, 16.0, 20.0];
    let ls: Vec<f64> = al.iter().map(|x| x / alpha).collect();
    let v = t_norm_sweep(&base, &ls, &single, &grid)?;
    let ratio = v[6] / v[0];
    let monotone = v[1..].windows(2).all(|w| w[1] < w[0]);
    let list: Vec<String> = v.iter().map(|x| format!("{x:.2e}")).collect();
    Ok((
        ratio <= 1e-3 && monotone && v[0] > 0.0,
        format!("ratio at αL=20 {ratio:.2e} (limit 1e-3), monotone from αL=3: {monotone}, values [{}]", list.join(", ")),
    ))
}

fn fig1(order: PulseOrder) -> Result<crate::scattering::experiments::Fig1Result> {
    let p = LambdaAtomParams::new(1.0, 1.0, 10.0, -10.0, 0.0)?;
    let alpha = p.big_gamma() / 50.0;
    fig1_experiment(order, &p, alpha, 40.0 / alpha, &Fig1Options::default())
}

fn sequential() -> Check {
    let mut worst: f64 = 1.0;
    for order in [PulseOrder::RedFirst, PulseOrder::BlueFirst] {
        worst = worst.min(fig1(order)?.fidelity_sequential);
    }
    Ok((worst >= 0.99, format!("min fidelity {worst:.10} (limit 0.99)")))
}

fn ordering() -> Check {
    let rf = fig1(PulseOrder::RedFirst)?;
    let bf = fig1(PulseOrder::BlueFirst)?;
    let defect = order_exchange_defect(rf.scatter.as_ref().expect("kept"), bf.scatter.as_ref().expect("kept"));
    let ok_rf = rf.populations[1] >= 0.95 && rf.final_ground == 1 && rf.class == PhotonClass::BothRed;
    let ok_bf = bf.populations[0] >= 0.95
        && bf.final_ground == 0
        && bf.class == PhotonClass::OneEach
        && bf.leading == Some(Colour::Red);
    Ok((
        ok_rf && ok_bf && defect > 0.5,
        format!(
            "red first: P(g2) {:.4}, {:?}; blue first: P(g1) {:.4}, {:?}, leading {:?}; defect {defect:.3} (limit 0.5)",
            rf.populations[1], rf.class, bf.populations[0], bf.class, bf.leading
        ),
    ))
}

/// Two-photon oracle scenario: Λ atom with Γ = 1 and Δ = ±2, two resonant
/// Gaussian pulses of width α = Γ, mode spacing 2π/30.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleScenario {
    pub l: f64,
    pub t_before: f64,
    pub t_after: f64,
}

pub const ORACLE_SCENARIOS: [OracleScenario; 2] =
    [OracleScenario { l: 0.0, t_before: 5.0, t_after: 14.0 }, OracleScenario { l: 6.0, t_before: 10.0, t_after: 12.0 }];

pub const ORACLE_MODES: [usize; 3] = [128, 256, 512];

fn oracle_lambda() -> Result<LambdaAtomParams<f64>> {
    LambdaAtomParams::new(1.0, 1.0, 2.0, -2.0, 0.0)
}

fn oracle_waveguide(modes: usize) -> Result<DiscreteWaveguide> {
    DiscreteWaveguide::new(0.0, 2.0 * PI / 30.0, modes)
}

/// Conversion probability g₁ → g₂ for one resonant Gaussian photon, from
/// the oracle and from |t₂₁|² smeared over the envelope.
pub fn oracle_single_photon(modes: usize) -> Result<(f64, f64)> {
    let p = oracle_lambda()?;
    let f = Envelope::new(Shape::Gaussian, p.delta1, 1.0)?;
    let wg = oracle_waveguide(modes)?;
    let sys = build_hamiltonian(&p.to_generic()?, &wg, 1, DEFAULT_DIM_CAP)?;
    let x0 = prepare_one_photon(&sys, &f, 0, 5.0)?;
    let (x1, _) = evolve(&sys, &x0, 19.0, 2.0, Integrator::Chebyshev)?;
    let out = extract_out(&sys, &x1)?;
    let single = SingleKernel::lambda(p)?;
    let ax = Axis::tan_mapped(p.delta1, 1.0, 200, 8);
    let analytic = ax.nodes.iter().zip(&ax.weights).map(|(k, w)| w * single.t(*k, 1, 0).norm_sqr() * f.eval(*k).powi(2)).sum();
    Ok((out.populations[1], analytic))
}

/// (max population delta, spectral L2) of one two-photon scenario.
pub fn oracle_two_photon(s: &OracleScenario, modes: usize) -> Result<(f64, f64)> {
    let p = oracle_lambda()?;
    let spec = InStateSpec { kbar1: p.delta1, kbar2: p.delta1, alpha1: 1.0, alpha2: 1.0, l: s.l, nu: 0, shape: Shape::Gaussian };
    let state = make_in_state(&spec, None)?;
    let wg = oracle_waveguide(modes)?;
    let sys = build_hamiltonian(&p.to_generic()?, &wg, 2, DEFAULT_DIM_CAP)?;
    let x0 = prepare_two_photon(&sys, &state, s.t_before)?;
    let (x1, _) = evolve(&sys, &x0, s.t_before + s.t_after, 2.0, Integrator::Chebyshev)?;
    let out = extract_out(&sys, &x1)?;
    let kernel = full_kernel(&SingleKernel::lambda(p)?, 0, &KernelOptions::default())?;
    let analytic = apply_smatrix(&kernel, &state, &mode_grid(&wg), &SmearOptions::default())?;
    let c = compare_two_photon(&out, &analytic)?;
    Ok((c.max_population_delta, c.spectral_l2))
}

fn decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

fn oracle_equivalence() -> Check {
    let mut ok = true;
    let mut parts = Vec::new();
    let single: Vec<f64> =
        ORACLE_MODES.iter().map(|&m| oracle_single_photon(m).map(|(o, a)| (o - a).abs())).collect::<Result<_>>()?;
    ok &= single[2] <= 2e-2 && decreasing(&single);
    parts.push(format!("one photon |ΔP| {:.1e}/{:.1e}/{:.1e}", single[0], single[1], single[2]));
    for s in &ORACLE_SCENARIOS {
        let r: Vec<(f64, f64)> = ORACLE_MODES.iter().map(|&m| oracle_two_photon(s, m)).collect::<Result<_>>()?;
        let dp: Vec<f64> = r.iter().map(|x| x.0).collect();
        let l2: Vec<f64> = r.iter().map(|x| x.1).collect();
        ok &= dp[2] <= 3e-2 && l2[2] <= 5e-2 && decreasing(&dp) && decreasing(&l2);
        parts.push(format!(
            "L={}: |ΔP| {:.1e}/{:.1e}/{:.1e}, L2 {:.1e}/{:.1e}/{:.1e}",
            s.l, dp[0], dp[1], dp[2], l2[0], l2[1], l2[2]
        ));
    }
    Ok((ok, format!("M=128/256/512 {} (limits 2e-2, 3e-2, 5e-2)", parts.join("; "))))
}

/// Default whole-plane grid for the flux check and its panel doublings.
pub const FLUX_GRID: PlaneGrid =
    PlaneGrid { k_center: 0.0, k_scale: 1.5, r_center: 0.0, r_scale: 3.0, k_panels: 6, r_panels: 6, order: 8 };

/// |Σ_μ P_μ − 1| on the flux grid refined by 1, 2 and 4.
pub fn flux_defects() -> Result<Vec<f64>> {
    let p = LambdaAtomParams::new(1.0, 1.0, 1.0, -1.0, 0.0)?;
    let single = SingleKernel::lambda(p)?;
    let spec = InStateSpec { kbar1: 1.0, kbar2: -1.0, alpha1: 0.5, alpha2: 0.5, l: 2.0, nu: 0, shape: Shape::Gaussian };
    let state = make_in_state(&spec, None)?;
    let k = full_kernel(&single, 0, &KernelOptions::default())?;
    [1, 2, 4]
        .iter()
        .map(|&f| Ok((apply_smatrix(&k, &state, &FLUX_GRID.refined(f).build(), &SmearOptions::default())?.total - 1.0).abs()))
        .collect()
}

fn flux() -> Check {
    let d = flux_defects()?;
    let order = (d[0] / d[1]).log2();
    Ok((
        d[0] <= 1e-3 && order >= 2.0,
        format!("defects {:.2e}/{:.2e}/{:.2e} (limit 1e-3), observed order {order:.2} (limit 2)", d[0], d[1], d[2]),
    ))
}

fn spectral_residuals() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let opts = EigenOptions::default();
    let (mut worst, mut imag, mut failures): (f64, f64, usize) = (0.0, 0.0, 0);
    for _ in 0..1000 {
        let m = random_graded_model(&mut rng, 5);
        let sp = match model_spectra(&m, &opts) {
            Ok(s) => s,
            Err(_) => {
                failures += 1;
                continue;
            }
        };
        for n in 0..3 {
            let r = sp.sector(n).residuals(&effective_hamiltonian(&m, n));
            worst = worst.max(r.right).max(r.left).max(r.biorthonormality).max(r.completeness).max(r.reconstruction);
        }
        imag = sp.sector(0).eigenvalues.iter().fold(imag, |a, z| a.max(z.im.abs()));
    }
    Ok((
        worst <= 1e-10 && imag <= 1e-12 && failures == 0,
        format!("max residual {worst:.2e} (limit 1e-10), max |Im E0| {imag:.2e} (limit 1e-12), decomposition failures {failures}"),
    ))
}
