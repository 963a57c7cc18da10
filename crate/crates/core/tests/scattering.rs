use num_complex::Complex64;
use wqed::amplitudes::SingleKernel;
use wqed::linalg::CMatrix;
use wqed::model::{GenericCavityModel, LambdaAtomParams, Sector};
use wqed::scattering::experiments::{alias_free_spacing, out_centers};
use wqed::scattering::smear::amplitude_row;
use wqed::scattering::*;
use wqed::spectral::EigenOptions;
use wqed::twophoton::{full_kernel, raw_kernel_lambda, s0_kernel, t_kernel, KernelOptions};

fn lorentz_spec(k1: f64, k2: f64, a1: f64, a2: f64, l: f64, nu: usize) -> InStateSpec {
    InStateSpec { kbar1: k1, kbar2: k2, alpha1: a1, alpha2: a2, l, nu, shape: Shape::Lorentzian }
}

fn kerr(u: f64) -> GenericCavityModel<f64> {
    let c = |x: f64| Complex64::new(x, 0.0);
    GenericCavityModel::new(
        1.0,
        vec![
            Sector::new(vec!["0".into()], CMatrix::from_diag(&[c(0.0)])),
            Sector::new(vec!["1".into()], CMatrix::from_diag(&[c(0.5)])),
            Sector::new(vec!["2".into()], CMatrix::from_diag(&[c(1.0 + u)])),
        ],
        vec![CMatrix::from_diag(&[c(1.0)]), CMatrix::from_diag(&[c(2f64.sqrt())])],
    )
    .unwrap()
}

/// Λ atom with both ground states at energy 0 and the excited state at Ω.
fn degenerate_lambda(g1: f64, g2: f64, omega: f64) -> GenericCavityModel<f64> {
    let c = |x: f64| Complex64::new(x, 0.0);
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
    .unwrap()
}

fn patch_grid(state: &TwoPhotonState, energies: &[f64], half: f64, h: f64) -> OutGrid {
    // lattice offset from the pulse centres so no node sits on a resonance
    let c = out_centers(&[state.spec.kbar1, state.spec.kbar2], energies);
    OutGrid::square(Axis::lattice_patches(&c, half, h, state.spec.kbar1 + 0.5 * h).unwrap())
}

#[test]
fn weak_coupling_returns_the_in_state() {
    let p = LambdaAtomParams::new(1e-10, 1e-10, 2.0, -2.0, 0.0).unwrap();
    let single = SingleKernel::lambda(p).unwrap();
    let state = make_in_state(&lorentz_spec(2.0, -2.0, 0.1, 0.1, 5.0, 0), None).unwrap();
    let e = [p.ground_energy(0), p.ground_energy(1)];
    let grid = patch_grid(&state, &e, 2.0, alias_free_spacing(0.04, 5.0));
    let k = full_kernel(&single, 0, &KernelOptions::default()).unwrap();
    let out = apply_smatrix(&k, &state, &grid, &SmearOptions::residue()).unwrap();
    let inn = in_state_on_grid(&state, &e, &grid);
    assert!(out.fidelity(&inn).unwrap() >= 1.0 - 1e-8, "{}", out.fidelity(&inn).unwrap());
    assert!((out.total - inn.total).abs() < 1e-8);
}

#[test]
fn numerical_and_residue_evaluators_agree() {
    let p = LambdaAtomParams::new(1.0, 0.7, 1.5, -1.0, 0.0).unwrap();
    let single = SingleKernel::lambda(p).unwrap();
    let state = make_in_state(&lorentz_spec(1.4, -0.8, 0.5, 0.3, 1.5, 1), None).unwrap();
    let k = full_kernel(&single, 1, &KernelOptions::default()).unwrap();
    let pts = [[1.3, -0.7], [0.2, 0.9], [-2.0, 1.1], [3.1, -1.0]];
    let num = SmearOptions { evaluator: Evaluator::Numerical { nodes_per_width: 12.0, tail_tol: 1e-9 }, prune_tol: 1e-9 };
    for mu in 0..2 {
        let a = amplitude_row(&k, &state, mu, &pts, false, &SmearOptions::residue()).unwrap();
        let b = amplitude_row(&k, &state, mu, &pts, false, &num).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).norm() < 2e-4 * x.norm().max(1e-2), "{x} vs {y}");
        }
    }
}

#[test]
fn raw_form_equals_s0_plus_t() {
    let p = LambdaAtomParams::new(0.8, 1.2, 1.0, -0.5, 0.3).unwrap();
    let single = SingleKernel::lambda(p).unwrap();
    for nu in 0..2 {
        let state = make_in_state(&lorentz_spec(0.9, -0.3, 0.4, 0.6, 2.0, nu), None).unwrap();
        let raw = raw_kernel_lambda(&p, nu);
        let full = full_kernel(&single, nu, &KernelOptions::default()).unwrap();
        let pts: Vec<[f64; 2]> = (0..25).map(|i| [-1.5 + 0.13 * i as f64, 1.0 - 0.09 * i as f64]).collect();
        for mu in 0..2 {
            let a = amplitude_row(&raw, &state, mu, &pts, false, &SmearOptions::residue()).unwrap();
            let b = amplitude_row(&full, &state, mu, &pts, false, &SmearOptions::residue()).unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).norm() <= 1e-10 * x.norm().max(y.norm()), "{x} vs {y}");
            }
        }
    }
}

#[test]
fn degenerate_s0_is_product_of_single_scatterings() {
    let single = SingleKernel::generic(&degenerate_lambda(0.9, 0.5, 0.7), &EigenOptions::default()).unwrap();
    let state = make_in_state(&lorentz_spec(0.4, 1.1, 0.3, 0.2, 3.0, 0), None).unwrap();
    let pts: Vec<[f64; 2]> = (0..30).map(|i| [0.1 + 0.05 * i as f64, 1.6 - 0.04 * i as f64]).collect();
    let grid = OutGrid::scattered(pts.clone());
    let pred = sequential_prediction(&state, &single, &grid);
    for collapse in [true, false] {
        let k = s0_kernel(&single, 0, &KernelOptions { collapse_degenerate: collapse, ..Default::default() });
        for mu in 0..2 {
            let a = amplitude_row(&k, &state, mu, &pts, false, &SmearOptions::residue()).unwrap();
            for (x, y) in a.iter().zip(&pred.amplitudes[mu]) {
                assert!((x - y).norm() <= 1e-10 * y.norm().max(1e-3), "{collapse} {x} vs {y}");
            }
        }
    }
}

#[test]
fn single_ground_state_scattering_ignores_pulse_order() {
    // exact for the non-interacting part; for the full S once the pulses
    // are far apart (αL = 40)
    let m = kerr(0.8);
    let single = SingleKernel::generic(&m, &EigenOptions::default()).unwrap();
    let pts: Vec<[f64; 2]> = (0..20).map(|i| [0.2 + 0.06 * i as f64, 1.0 - 0.03 * i as f64]).collect();
    let s0 = s0_kernel(&single, 0, &KernelOptions::default());
    let full = full_kernel(&single, 0, &KernelOptions::default()).unwrap();
    for (kernel, l, tol) in [(&s0, 2.5, 1e-12), (&full, 200.0, 1e-8)] {
        let a = make_in_state(&lorentz_spec(0.3, 0.9, 0.2, 0.2, l, 0), None).unwrap();
        let b = make_in_state(&lorentz_spec(0.9, 0.3, 0.2, 0.2, l, 0), None).unwrap();
        let fa = amplitude_row(kernel, &a, 0, &pts, false, &SmearOptions::residue()).unwrap();
        let fb = amplitude_row(kernel, &b, 0, &pts, false, &SmearOptions::residue()).unwrap();
        for (x, y) in fa.iter().zip(&fb) {
            assert!((x.norm() - y.norm()).abs() <= tol * x.norm().max(1e-3), "{x} vs {y}");
        }
    }
}

#[test]
fn order_resolved_halves_add_up() {
    let p = LambdaAtomParams::new(1.0, 1.0, 1.0, -1.0, 0.0).unwrap();
    let single = SingleKernel::lambda(p).unwrap();
    let state = make_in_state(&lorentz_spec(1.0, -1.0, 0.3, 0.3, 4.0, 0), None).unwrap();
    let k = full_kernel(&single, 0, &KernelOptions::default()).unwrap();
    let pts = [[1.0, -1.0], [0.5, 0.2], [-1.2, 3.0]];
    let whole = amplitude_row(&k, &state, 1, &pts, false, &SmearOptions::residue()).unwrap();
    let h1 = amplitude_row(&k, &state.part(&[0]), 1, &pts, false, &SmearOptions::residue()).unwrap();
    let h2 = amplitude_row(&k, &state.part(&[1]), 1, &pts, false, &SmearOptions::residue()).unwrap();
    for i in 0..pts.len() {
        assert!((whole[i] - h1[i] - h2[i]).norm() < 1e-13);
    }
}

#[test]
fn interaction_vanishes_for_separated_pulses() {
    let p = LambdaAtomParams::new(1.0, 1.0, 1.0, -1.0, 0.0).unwrap();
    let single = SingleKernel::lambda(p).unwrap();
    let base = lorentz_spec(1.0, 1.0, 0.2, 0.2, 0.0, 0);
    let grid = PlaneGrid { k_center: 2.0, k_scale: 0.4, r_center: 0.0, r_scale: 2.0, k_panels: 16, r_panels: 16, order: 8 };
    let ls = [0.0, 15.0, 30.0, 60.0];
    let v = t_norm_sweep(&base, &ls, &single, &grid).unwrap();
    assert!(v[0] > 1e-3, "{v:?}");
    for w in v.windows(2) {
        assert!(w[1] < w[0], "{v:?}");
    }
    assert!(v[3] < 1e-3 * v[0], "{v:?}");
}

#[test]
fn flux_and_energy_are_conserved() {
    let p = LambdaAtomParams::new(1.0, 1.0, 1.0, -1.0, 0.0).unwrap();
    let single = SingleKernel::lambda(p).unwrap();
    let state = make_in_state(&InStateSpec { shape: Shape::Gaussian, ..lorentz_spec(1.0, -1.0, 0.5, 0.5, 2.0, 0) }, None)
        .unwrap();
    let k = full_kernel(&single, 0, &KernelOptions::default()).unwrap();
    let grid = PlaneGrid { k_center: 0.0, k_scale: 1.5, r_center: 0.0, r_scale: 3.0, k_panels: 12, r_panels: 12, order: 8 }
        .build();
    let out = apply_smatrix(&k, &state, &grid, &SmearOptions::default()).unwrap();
    assert!((out.total - 1.0).abs() < 1e-3, "{}", out.total);
    let e = [p.ground_energy(0), p.ground_energy(1)];
    let inn = in_state_on_grid(&state, &e, &grid);
    assert!((out.mean_energy() - inn.mean_energy()).abs() < 1e-3, "{} vs {}", out.mean_energy(), inn.mean_energy());
}

#[test]
fn t_part_of_linear_cavity_is_zero() {
    let m = wqed::model::optomech_model(1.0, 0.0, 0.0, 0.7, 0).unwrap();
    let single = SingleKernel::generic(&m, &EigenOptions::default()).unwrap();
    let t = t_kernel(&single, 0).unwrap();
    let state = make_in_state(&lorentz_spec(1.0, 1.0, 0.2, 0.2, 0.0, 0), None).unwrap();
    let v = amplitude_row(&t, &state, 0, &[[1.0, 1.0], [0.7, 1.2]], false, &SmearOptions::residue()).unwrap();
    assert!(v.iter().all(|x| x.norm() < 1e-10), "{v:?}");
}

#[test]
fn interaction_decays_at_twice_the_pulse_width() {
    // Lorentzian pulses have e^{-α|x|} tails, so the overlap that feeds T
    // falls off as e^{-2αL}.
    let p = LambdaAtomParams::new(1.0, 1.0, 1.0, -1.0, 0.0).unwrap();
    let single = SingleKernel::lambda(p).unwrap();
    let alpha = 0.2;
    let base = lorentz_spec(1.0, 1.0, alpha, alpha, 0.0, 0);
    let grid = PlaneGrid { k_center: 2.0, k_scale: 0.4, r_center: 0.0, r_scale: 2.0, k_panels: 16, r_panels: 16, order: 8 };
    let al = [8.0, 12.0, 16.0];
    let ls: Vec<f64> = al.iter().map(|x| x / alpha).collect();
    let v = t_norm_sweep(&base, &ls, &single, &grid).unwrap();
    let rates: Vec<f64> = (0..2).map(|i| (v[i] / v[i + 1]).ln() / (al[i + 1] - al[i])).collect();
    println!("decay rate of ||T psi||^2 per unit alpha*L: {rates:?}");
    assert!(rates[0] < rates[1], "{rates:?}");
    assert!((rates[1] - 1.95).abs() < 0.03, "{rates:?}");
}
