//! Command arguments (shared by flags and `run --config`) and their
//! implementations.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use wqed::acceptance;
use wqed::amplitudes::SingleKernel;
use wqed::model::ModelSpec;
use wqed::oracle::{self, DiscreteWaveguide, Integrator};
use wqed::scattering::experiments::{alias_free_spacing, out_centers, Fig1Options, PulseOrder};
use wqed::scattering::{
    apply_smatrix, fig1_experiment, make_in_state, order_exchange_defect, sequential_prediction, t_norm_sweep, Axis,
    AxisSpec, Evaluator, InStateSpec, OutGrid, PlaneGrid, ScatterResult, Shape, SmearOptions,
};
use wqed::spectral::{model_spectra, EigenOptions};
use wqed::twophoton::{full_kernel, raw_kernel_lambda, report_terms, s0_kernel, t_kernel, KernelOptions};

use crate::io::{csv, emit, read_json, to_json, CliError, CliResult};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Units {
    /// Frequencies as written in the model file.
    #[default]
    Absolute,
    /// Frequencies, widths and inverse lengths in units of Γ (half the
    /// total decay rate); the model is rescaled on load.
    Gamma,
}

/// A model read from disk, rescaled to the requested units.
pub struct Loaded {
    pub raw: Value,
    pub spec: ModelSpec,
    pub generic: wqed::CavityModel,
    /// Γ in model units when `units = gamma`, else 1.
    pub unit: f64,
    pub units: Units,
}

impl Loaded {
    pub fn single(&self) -> CliResult<wqed::SingleAmplitudes> {
        Ok(match self.spec.lambda() {
            Some(p) => SingleKernel::lambda(*p)?,
            None => SingleKernel::generic(&self.generic, &EigenOptions::default())?,
        })
    }

    pub fn energies(&self, single: &wqed::SingleAmplitudes) -> Vec<f64> {
        (0..single.n_ground()).map(|m| single.ground_energy(m)).collect()
    }

    pub fn unit_label(&self) -> &'static str {
        match self.units {
            Units::Absolute => "model units",
            Units::Gamma => "Gamma",
        }
    }

    pub fn units_record(&self) -> Value {
        json!({ "units": self.units, "gamma_in_model_units": self.unit })
    }
}

fn half_decay(spec: &ModelSpec) -> f64 {
    match spec {
        ModelSpec::LambdaAtom(p) => p.big_gamma(),
        ModelSpec::Generic(g) => 0.5 * g.gamma,
        ModelSpec::Optomech(o) => 0.5 * o.gamma,
    }
}

fn rescale(spec: &mut ModelSpec, s: f64) {
    match spec {
        ModelSpec::LambdaAtom(p) => {
            for x in [&mut p.gamma1, &mut p.gamma2, &mut p.delta1, &mut p.delta2, &mut p.omega] {
                *x /= s;
            }
        }
        ModelSpec::Generic(g) => {
            g.gamma /= s;
            for sec in g.sectors.iter_mut() {
                for e in sec.h.iter_mut() {
                    e[0] /= s;
                    e[1] /= s;
                }
            }
        }
        ModelSpec::Optomech(o) => {
            for x in [&mut o.omega_c, &mut o.omega_m, &mut o.g0, &mut o.gamma] {
                *x /= s;
            }
        }
    }
}

pub fn load_model(path: &Path, units: Units) -> CliResult<Loaded> {
    let raw: Value = read_json(path)?;
    let mut spec: ModelSpec =
        serde_json::from_value(raw.clone()).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
    if let Some(p) = spec.lambda() {
        p.check()?;
    }
    let unit = match units {
        Units::Absolute => 1.0,
        Units::Gamma => {
            let g = half_decay(&spec);
            if !(g > 0.0 && g.is_finite()) {
                return Err(CliError::Invalid("--units gamma needs a positive decay rate".into()));
            }
            g
        }
    };
    rescale(&mut spec, unit);
    let generic = spec.to_generic()?;
    Ok(Loaded { raw, spec, generic, unit, units })
}

fn provenance<A: Serialize>(command: &str, args: &A, model: &Loaded, input: Option<&Value>) -> Value {
    json!({
        "command": command,
        "args": args,
        "model": model.raw,
        "input": input,
        "units": model.units_record(),
        "version": env!("CARGO_PKG_VERSION"),
    })
}

fn check_ground(idx: usize, n: usize, what: &str) -> CliResult<()> {
    if idx >= n {
        return Err(CliError::Invalid(format!("{what} = {idx} out of range; the model has {n} ground states (0-based)")));
    }
    Ok(())
}

// ---------------------------------------------------------------- spectrum

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumArgs {
    /// Model JSON.
    #[arg(long)]
    pub model: PathBuf,
    /// Output CSV (stdout if omitted).
    #[arg(long)]
    #[serde(default)]
    pub out: Option<PathBuf>,
}

pub fn spectrum(a: &SpectrumArgs, units: Units) -> CliResult<()> {
    let m = load_model(&a.model, units)?;
    let sp = model_spectra(&m.generic, &EigenOptions::default())?;
    let u = m.unit_label();
    let header = vec!["N".into(), "lambda".into(), format!("re [{u}]"), format!("im [{u}]")];
    let mut rows = Vec::new();
    for n in 0..3 {
        for (l, z) in sp.sector(n).eigenvalues.iter().enumerate() {
            rows.push(vec![n.to_string(), l.to_string(), z.re.to_string(), z.im.to_string()]);
        }
    }
    emit(a.out.as_deref(), &csv(&header, &rows))
}

// ------------------------------------------------------------------ single

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SingleArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Initial ground state (0-based).
    #[arg(long)]
    pub nu: usize,
    #[arg(long, allow_hyphen_values = true)]
    pub kmin: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub kmax: f64,
    /// Number of k points, endpoints included.
    #[arg(long)]
    pub steps: usize,
    #[arg(long)]
    #[serde(default)]
    pub out: Option<PathBuf>,
}

pub fn single(a: &SingleArgs, units: Units) -> CliResult<()> {
    let m = load_model(&a.model, units)?;
    let s = m.single()?;
    let g = s.n_ground();
    check_ground(a.nu, g, "nu")?;
    if a.steps < 2 || !(a.kmax > a.kmin) {
        return Err(CliError::Invalid(format!("need steps ≥ 2 and kmax > kmin, got {} on [{}, {}]", a.steps, a.kmin, a.kmax)));
    }
    let u = m.unit_label();
    let mut header = vec![format!("k [{u}]")];
    for mu in 0..g {
        header.push(format!("re_t{mu}{} [1]", a.nu));
        header.push(format!("im_t{mu}{} [1]", a.nu));
    }
    header.push("unitarity_defect [1]".into());
    let rows: Vec<Vec<String>> = (0..a.steps)
        .map(|i| {
            let k = a.kmin + (a.kmax - a.kmin) * i as f64 / (a.steps - 1) as f64;
            let mut r = vec![k.to_string()];
            for mu in 0..g {
                let t = s.t(k, mu, a.nu);
                r.push(t.re.to_string());
                r.push(t.im.to_string());
            }
            r.push(s.unitarity_defect(k, a.nu).to_string());
            r
        })
        .collect();
    emit(a.out.as_deref(), &csv(&header, &rows))
}

// ------------------------------------------------------------------ kernel

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Part {
    Full,
    S0,
    T,
    Raw,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub mu: usize,
    #[arg(long)]
    pub nu: usize,
    #[arg(long, value_enum)]
    pub part: Part,
    /// Evaluation point p1,p2,k1,k2.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub at: Vec<f64>,
    #[arg(long)]
    #[serde(default)]
    pub out: Option<PathBuf>,
}

fn build_kernel(m: &Loaded, single: &wqed::SingleAmplitudes, nu: usize, part: Part) -> CliResult<wqed::Kernel> {
    let opts = KernelOptions::default();
    Ok(match part {
        Part::Full => full_kernel(single, nu, &opts)?,
        Part::S0 => s0_kernel(single, nu, &opts),
        Part::T => t_kernel(single, nu)?,
        Part::Raw => match m.spec.lambda() {
            Some(p) => raw_kernel_lambda(p, nu),
            None => return Err(CliError::Invalid("the raw form exists for the Λ atom only".into())),
        },
    })
}

pub fn kernel(a: &KernelArgs, units: Units) -> CliResult<()> {
    let m = load_model(&a.model, units)?;
    let s = m.single()?;
    check_ground(a.mu, s.n_ground(), "mu")?;
    check_ground(a.nu, s.n_ground(), "nu")?;
    let x: [f64; 4] =
        a.at.as_slice().try_into().map_err(|_| CliError::Invalid("--at needs four values p1,p2,k1,k2".into()))?;
    let k = build_kernel(&m, &s, a.nu, a.part)?;
    let out = json!({ "config": provenance("kernel", a, &m, None), "terms": report_terms(&k, a.mu, &x) });
    emit(a.out.as_deref(), &to_json(&out)?)
}

// ----------------------------------------------------------------- scatter

/// Out-grid choice in an input file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GridSpec {
    /// Whole plane in K = p₁ + p₂ and r = p₁ − p₂, tan-mapped Gauss panels.
    Plane {
        k_center: f64,
        k_scale: f64,
        r_center: f64,
        r_scale: f64,
        k_panels: usize,
        r_panels: usize,
        order: usize,
    },
    /// Lattice patches around every out-frequency centre; both values in
    /// units of the narrower pulse width.
    Patches { half_width: f64, spacing: f64 },
    /// Uniform square grid.
    Square { kmin: f64, kmax: f64, n: usize },
    /// The modes of a discretized waveguide, for oracle comparison.
    Modes { k_center: f64, dk: f64, modes: usize },
}

/// Contents of `in.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputFile {
    pub kbar1: f64,
    pub kbar2: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    #[serde(rename = "L")]
    pub l: f64,
    pub nu: usize,
    #[serde(default)]
    pub shape: Shape,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub evaluator: Option<Evaluator>,
    #[serde(default)]
    pub prune_tol: Option<f64>,
}

impl InputFile {
    pub fn spec(&self) -> InStateSpec {
        InStateSpec {
            kbar1: self.kbar1,
            kbar2: self.kbar2,
            alpha1: self.alpha1,
            alpha2: self.alpha2,
            l: self.l,
            nu: self.nu,
            shape: self.shape,
        }
    }

    pub fn smear(&self) -> SmearOptions {
        let evaluator = self.evaluator.unwrap_or(match self.shape {
            Shape::Lorentzian => Evaluator::Residue,
            Shape::Gaussian => Evaluator::numerical(),
        });
        SmearOptions { evaluator, prune_tol: self.prune_tol.unwrap_or(SmearOptions::default().prune_tol) }
    }
}

/// Default whole-plane grid sized from the pulses and ground splittings.
pub fn default_plane(spec: &InStateSpec, energies: &[f64]) -> PlaneGrid {
    let amax = spec.alpha1.max(spec.alpha2);
    let emin = energies.iter().cloned().fold(f64::INFINITY, f64::min);
    let emax = energies.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mean = 0.5 * (emin + emax);
    PlaneGrid {
        k_center: spec.kbar1 + spec.kbar2 + energies[spec.nu] - mean,
        k_scale: 2.0 * amax + 0.5 * (emax - emin),
        r_center: 0.0,
        r_scale: (spec.kbar1 - spec.kbar2).abs() + (emax - emin) + 3.0 * amax,
        k_panels: 12,
        r_panels: 12,
        order: 8,
    }
}

fn build_grid(input: &InputFile, energies: &[f64]) -> CliResult<(OutGrid, Option<AxisSpec>)> {
    let spec = input.spec();
    let amin = spec.alpha1.min(spec.alpha2);
    let grid = input.grid.clone().unwrap_or(match spec.shape {
        Shape::Lorentzian => GridSpec::Patches { half_width: 30.0, spacing: 0.5 },
        Shape::Gaussian => {
            let p = default_plane(&spec, energies);
            GridSpec::Plane {
                k_center: p.k_center,
                k_scale: p.k_scale,
                r_center: p.r_center,
                r_scale: p.r_scale,
                k_panels: p.k_panels,
                r_panels: p.r_panels,
                order: p.order,
            }
        }
    });
    Ok(match grid {
        GridSpec::Plane { k_center, k_scale, r_center, r_scale, k_panels, r_panels, order } => {
            if k_panels == 0 || r_panels == 0 || order == 0 || !(k_scale > 0.0 && r_scale > 0.0) {
                return Err(CliError::Invalid("plane grid needs positive scales, panels and order".into()));
            }
            (PlaneGrid { k_center, k_scale, r_center, r_scale, k_panels, r_panels, order }.build(), None)
        }
        GridSpec::Patches { half_width, spacing } => {
            let h = alias_free_spacing(spacing * amin, spec.l);
            let centers = out_centers(&[spec.kbar1, spec.kbar2], energies);
            (OutGrid::square(Axis::lattice_patches(&centers, half_width * amin, h, spec.kbar1 + 0.5 * h)?), None)
        }
        GridSpec::Square { kmin, kmax, n } => {
            (OutGrid::square(Axis::uniform(kmin, kmax, n)?), Some(AxisSpec { kmin, kmax, n }))
        }
        GridSpec::Modes { k_center, dk, modes } => {
            let wg = DiscreteWaveguide::new(k_center, dk, modes)?;
            let (lo, hi) = wg.window();
            (oracle::mode_grid(&wg), Some(AxisSpec { kmin: lo, kmax: hi, n: modes }))
        }
    })
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScatterArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// In-state JSON: kbar1, kbar2, alpha1, alpha2, L, nu, optional shape,
    /// grid, evaluator, prune_tol.
    #[arg(long = "in")]
    #[serde(rename = "in")]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = Part::Full)]
    #[serde(default = "default_part")]
    pub part: Part,
    #[arg(long)]
    #[serde(default)]
    pub out: Option<PathBuf>,
}

fn default_part() -> Part {
    Part::Full
}

pub fn scatter(a: &ScatterArgs, units: Units) -> CliResult<()> {
    let m = load_model(&a.model, units)?;
    let raw_input: Value = read_json(&a.input)?;
    let input: InputFile = serde_json::from_value(raw_input.clone())
        .map_err(|e| CliError::Invalid(format!("{}: {e}", a.input.display())))?;
    let s = m.single()?;
    check_ground(input.nu, s.n_ground(), "nu")?;
    let energies = m.energies(&s);
    let (grid, axis) = build_grid(&input, &energies)?;
    let state = make_in_state(&input.spec(), axis.as_ref())?;
    let kernel = build_kernel(&m, &s, input.nu, a.part)?;
    let result = apply_smatrix(&kernel, &state, &grid, &input.smear())?;
    let sequential = if a.part == Part::Full {
        let pred = sequential_prediction(&state, &s, &grid);
        Some(json!({ "fidelity": result.fidelity(&pred)?, "populations": pred.populations }))
    } else {
        None
    };
    let density: Vec<Vec<f64>> = result.amplitudes.iter().map(|v| v.iter().map(|z| z.norm_sqr()).collect()).collect();
    let out = json!({
        "config": provenance("scatter", a, &m, Some(&raw_input)),
        "populations": result.populations,
        "total": result.total,
        "sequential": sequential,
        "warnings": result.warnings,
        "density": density,
        "result": result,
    });
    emit(a.out.as_deref(), &to_json(&out)?)
}

// ------------------------------------------------------------------- tnorm

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TnormArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// In-state JSON (Lorentzian; its L is ignored). A plane grid in it
    /// replaces the default.
    #[arg(long = "in")]
    #[serde(rename = "in")]
    pub input: PathBuf,
    #[arg(long = "Lmax")]
    #[serde(rename = "Lmax")]
    pub lmax: f64,
    /// Number of separations from 0 to Lmax inclusive.
    #[arg(long)]
    pub steps: usize,
    #[arg(long)]
    #[serde(default)]
    pub out: Option<PathBuf>,
}

pub fn tnorm(a: &TnormArgs, units: Units) -> CliResult<()> {
    let m = load_model(&a.model, units)?;
    let input: InputFile = read_json(&a.input)?;
    let s = m.single()?;
    check_ground(input.nu, s.n_ground(), "nu")?;
    if input.shape != Shape::Lorentzian {
        return Err(CliError::Invalid("tnorm uses the residue evaluator and needs Lorentzian pulses".into()));
    }
    if a.steps < 2 || !(a.lmax > 0.0) {
        return Err(CliError::Invalid("need steps ≥ 2 and Lmax > 0".into()));
    }
    let grid = match &input.grid {
        Some(GridSpec::Plane { k_center, k_scale, r_center, r_scale, k_panels, r_panels, order }) => PlaneGrid {
            k_center: *k_center,
            k_scale: *k_scale,
            r_center: *r_center,
            r_scale: *r_scale,
            k_panels: *k_panels,
            r_panels: *r_panels,
            order: *order,
        },
        None => default_plane(&input.spec(), &m.energies(&s)),
        Some(_) => return Err(CliError::Invalid("tnorm needs a plane grid".into())),
    };
    let ls: Vec<f64> = (0..a.steps).map(|i| a.lmax * i as f64 / (a.steps - 1) as f64).collect();
    let v = t_norm_sweep(&input.spec(), &ls, &s, &grid)?;
    let u = m.unit_label();
    let header = vec![format!("L [1/{u}]"), "tnorm [1]".into()];
    let rows: Vec<Vec<String>> = ls.iter().zip(&v).map(|(l, t)| vec![l.to_string(), t.to_string()]).collect();
    emit(a.out.as_deref(), &csv(&header, &rows))
}

// -------------------------------------------------------------------- fig1

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fig1Args {
    /// Λ-atom model JSON.
    #[arg(long)]
    pub model: PathBuf,
    /// Pulse width α.
    #[arg(long)]
    pub alpha: f64,
    /// Pulse separation L.
    #[arg(long = "L")]
    #[serde(rename = "L")]
    pub l: f64,
    /// Patch half-width in units of α.
    #[arg(long, default_value_t = 30.0)]
    #[serde(default = "d_half")]
    pub half_width: f64,
    /// Target lattice spacing in units of α.
    #[arg(long, default_value_t = 0.5)]
    #[serde(default = "d_spacing")]
    pub spacing: f64,
    /// Classification window half-width in units of α.
    #[arg(long, default_value_t = 3.0)]
    #[serde(default = "d_window")]
    pub window: f64,
    #[arg(long)]
    #[serde(default)]
    pub out: Option<PathBuf>,
}

fn d_half() -> f64 {
    30.0
}
fn d_spacing() -> f64 {
    0.5
}
fn d_window() -> f64 {
    3.0
}

pub fn fig1(a: &Fig1Args, units: Units) -> CliResult<()> {
    let m = load_model(&a.model, units)?;
    let p = *m.spec.lambda().ok_or_else(|| CliError::Invalid("fig1 needs a lambda_atom model".into()))?;
    let opts = Fig1Options { half_width: a.half_width, spacing: a.spacing, window: a.window };
    let rf = fig1_experiment(PulseOrder::RedFirst, &p, a.alpha, a.l, &opts)?;
    let bf = fig1_experiment(PulseOrder::BlueFirst, &p, a.alpha, a.l, &opts)?;
    let defect = order_exchange_defect(
        rf.scatter.as_ref().expect("scatter kept"),
        bf.scatter.as_ref().expect("scatter kept"),
    );
    let out = json!({
        "config": provenance("fig1", a, &m, None),
        "red_first": rf,
        "blue_first": bf,
        "order_exchange_defect": defect,
    });
    emit(a.out.as_deref(), &to_json(&out)?)
}

// ------------------------------------------------------------------ oracle

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// In-state JSON (same fields as for scatter; grid is ignored).
    #[arg(long = "in")]
    #[serde(rename = "in")]
    pub input: PathBuf,
    /// Number of waveguide modes M.
    #[arg(long)]
    pub modes: usize,
    /// Total evolution time.
    #[arg(long)]
    pub tend: f64,
    /// Free backward propagation applied to the in-state before evolving,
    /// so the pulses start upstream of the emitter.
    #[arg(long)]
    pub tbefore: f64,
    /// Time step (RK4) or longest Chebyshev interval.
    #[arg(long)]
    pub dt: f64,
    /// Mode spacing; default 2π·0.85/tend keeps tend below 0.9 of the
    /// recurrence time.
    #[arg(long)]
    #[serde(default)]
    pub dk: Option<f64>,
    /// Window centre; default the mean of the out-frequency centres.
    #[arg(long, allow_hyphen_values = true)]
    #[serde(default)]
    pub k_center: Option<f64>,
    /// One photon (kbar1, alpha1) or the two-photon state.
    #[arg(long, default_value_t = 2)]
    #[serde(default = "d_photons")]
    pub photons: usize,
    #[arg(long, value_enum, default_value_t = IntegratorArg::Rk4)]
    #[serde(default)]
    pub integrator: IntegratorArg,
    #[arg(long, default_value_t = oracle::DEFAULT_DIM_CAP)]
    #[serde(default = "d_cap")]
    pub dim_cap: usize,
    #[arg(long)]
    #[serde(default)]
    pub out: Option<PathBuf>,
}

fn d_photons() -> usize {
    2
}
fn d_cap() -> usize {
    oracle::DEFAULT_DIM_CAP
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum IntegratorArg {
    #[default]
    Rk4,
    Chebyshev,
}

pub fn run_oracle(a: &OracleArgs, units: Units) -> CliResult<()> {
    let m = load_model(&a.model, units)?;
    let raw_input: Value = read_json(&a.input)?;
    let input: InputFile = serde_json::from_value(raw_input.clone())
        .map_err(|e| CliError::Invalid(format!("{}: {e}", a.input.display())))?;
    let s = m.single()?;
    check_ground(input.nu, s.n_ground(), "nu")?;
    if !(a.tend > 0.0 && a.tbefore >= 0.0 && a.tbefore <= a.tend) {
        return Err(CliError::Invalid("need tend > 0 and 0 ≤ tbefore ≤ tend".into()));
    }
    let energies = m.energies(&s);
    let kbars: Vec<f64> = if a.photons == 1 { vec![input.kbar1] } else { vec![input.kbar1, input.kbar2] };
    let centers = out_centers(&kbars, &energies);
    let k_center = a.k_center.unwrap_or(centers.iter().sum::<f64>() / centers.len() as f64);
    let dk = a.dk.unwrap_or(2.0 * std::f64::consts::PI * 0.85 / a.tend);
    let wg = DiscreteWaveguide::new(k_center, dk, a.modes)?;
    if a.tend >= 0.9 * wg.recurrence_time() {
        return Err(CliError::Invalid(format!(
            "tend = {} must stay below 0.9 of the recurrence time {:.4}; reduce dk",
            a.tend,
            wg.recurrence_time()
        )));
    }
    let (lo, hi) = wg.window();
    let mut warnings = Vec::new();
    let gamma_half = 0.5 * m.generic.gamma;
    if centers.iter().any(|c| c - lo < 10.0 * gamma_half || hi - c < 10.0 * gamma_half) {
        warnings.push(format!("window [{lo:.4}, {hi:.4}] leaves less than 10Γ margin around the resonances"));
    }
    let method = match a.integrator {
        IntegratorArg::Rk4 => Integrator::Rk4,
        IntegratorArg::Chebyshev => Integrator::Chebyshev,
    };
    let sys = oracle::build_hamiltonian(&m.generic, &wg, a.photons, a.dim_cap)?;
    let x0 = match a.photons {
        1 => {
            let f = wqed::scattering::Envelope::new(input.shape, input.kbar1, input.alpha1)?;
            if f.mass_outside(lo, hi) > 1e-6 {
                return Err(CliError::Invalid(format!("pulse tail outside the window [{lo:.4}, {hi:.4}] exceeds 1e-6")));
            }
            oracle::prepare_one_photon(&sys, &f, input.nu, a.tbefore)?
        }
        _ => {
            let state = make_in_state(&input.spec(), Some(&AxisSpec { kmin: lo, kmax: hi, n: a.modes }))?;
            oracle::prepare_two_photon(&sys, &state, a.tbefore)?
        }
    };
    let (x1, report) = oracle::evolve(&sys, &x0, a.tend, a.dt, method)?;
    let result = oracle::extract_out(&sys, &x1)?;
    let out = json!({
        "config": provenance("oracle", a, &m, Some(&raw_input)),
        "waveguide": wg,
        "dimension": sys.dim(),
        "report": report,
        "warnings": warnings,
        "result": result,
    });
    emit(a.out.as_deref(), &to_json(&out)?)
}

// ----------------------------------------------------------------- compare

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareArgs {
    /// Output of `scatter` on a `modes` grid.
    #[arg(long)]
    pub analytic: PathBuf,
    /// Output of `oracle` with the same waveguide.
    #[arg(long)]
    pub oracle: PathBuf,
    #[arg(long, default_value_t = 3e-2)]
    #[serde(default = "d_pop_tol")]
    pub population_tol: f64,
    #[arg(long, default_value_t = 5e-2)]
    #[serde(default = "d_l2_tol")]
    pub spectral_tol: f64,
    #[arg(long)]
    #[serde(default)]
    pub out: Option<PathBuf>,
}

fn d_pop_tol() -> f64 {
    3e-2
}
fn d_l2_tol() -> f64 {
    5e-2
}

pub fn compare(a: &CompareArgs) -> CliResult<()> {
    let an: Value = read_json(&a.analytic)?;
    let or: Value = read_json(&a.oracle)?;
    let res: ScatterResult = serde_json::from_value(an["result"].clone())
        .map_err(|e| CliError::Invalid(format!("{}: not a scatter result: {e}", a.analytic.display())))?;
    let o: oracle::OracleOut = serde_json::from_value(or["result"].clone())
        .map_err(|e| CliError::Invalid(format!("{}: not an oracle result: {e}", a.oracle.display())))?;
    if o.photons != 2 {
        return Err(CliError::Invalid("compare needs a two-photon oracle run".into()));
    }
    let modes_match = res.grid.len() == o.momenta.len() * o.momenta.len()
        && res.grid.points.iter().enumerate().all(|(i, p)| {
            let m = o.momenta.len();
            (p[0] - o.momenta[i / m]).abs() <= 1e-12 * (1.0 + p[0].abs())
                && (p[1] - o.momenta[i % m]).abs() <= 1e-12 * (1.0 + p[1].abs())
        });
    if !modes_match {
        return Err(CliError::Invalid("the analytic grid is not the oracle mode grid; use grid kind \"modes\"".into()));
    }
    let c = oracle::compare_two_photon(&o, &res)?;
    let passed = c.max_population_delta <= a.population_tol && c.spectral_l2 <= a.spectral_tol;
    let out = json!({
        "config": { "command": "compare", "args": a, "version": env!("CARGO_PKG_VERSION") },
        "comparison": c,
        "thresholds": { "population": a.population_tol, "spectral_l2": a.spectral_tol },
        "passed": passed,
    });
    emit(a.out.as_deref(), &to_json(&out)?)?;
    if passed {
        Ok(())
    } else {
        Err(CliError::Failed(format!(
            "oracle and analytic results differ: population {:.3e}, spectral L2 {:.3e}",
            c.max_population_delta, c.spectral_l2
        )))
    }
}

// -------------------------------------------------------------- acceptance

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcceptanceArgs {
    /// "all" or a comma-separated list of criterion numbers.
    #[arg(long, default_value = "all")]
    #[serde(default = "d_suite")]
    pub suite: String,
    /// Optional JSON report.
    #[arg(long)]
    #[serde(default)]
    pub out: Option<PathBuf>,
}

fn d_suite() -> String {
    "all".into()
}

pub fn run_acceptance(a: &AcceptanceArgs) -> CliResult<()> {
    let ids: Vec<u8> = if a.suite == "all" {
        acceptance::CRITERIA.iter().map(|(i, _)| *i).collect()
    } else {
        a.suite
            .split(',')
            .map(|s| s.trim().parse::<u8>().map_err(|_| CliError::Invalid(format!("bad criterion id {s:?}"))))
            .collect::<CliResult<_>>()?
    };
    let mut outcomes = Vec::new();
    for id in ids {
        let o = acceptance::run(id)?;
        println!("{o}");
        outcomes.push(o);
    }
    if let Some(p) = &a.out {
        let out = json!({ "config": { "command": "acceptance", "args": a }, "outcomes": outcomes });
        crate::io::write_atomic(p, to_json(&out)?.as_bytes())?;
    }
    let failed: Vec<u8> = outcomes.iter().filter(|o| !o.passed).map(|o| o.id).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Failed(format!("criteria failed: {failed:?}")))
    }
}
