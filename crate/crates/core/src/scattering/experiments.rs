//! Ready-made scattering experiments: interaction decay with pulse
//! separation and the two-colour ordering experiment on a Λ atom.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::envelope::Shape;
use super::grid::{Axis, OutGrid};
use super::observables::{apply_smatrix, sequential_prediction, ScatterResult};
use super::smear::{amplitude_row, SmearOptions};
use super::state::{make_in_state, InStateSpec, TwoPhotonState};
use crate::amplitudes::SingleKernel;
use crate::error::{Error, Result};
use crate::model::LambdaAtomParams;
use crate::twophoton::{full_kernel, t_kernel, KernelOptions, TwoPhotonKernel};

/// Rotated whole-plane grid: K = p₁ + p₂ and r = p₁ − p₂ both tan-mapped.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlaneGrid {
    pub k_center: f64,
    pub k_scale: f64,
    pub r_center: f64,
    pub r_scale: f64,
    pub k_panels: usize,
    pub r_panels: usize,
    pub order: usize,
}

impl PlaneGrid {
    pub fn build(&self) -> OutGrid {
        OutGrid::rotated(
            Axis::tan_mapped(self.k_center, self.k_scale, self.k_panels, self.order),
            Axis::tan_mapped(self.r_center, self.r_scale, self.r_panels, self.order),
        )
    }

    pub fn refined(&self, factor: usize) -> Self {
        Self { k_panels: self.k_panels * factor, r_panels: self.r_panels * factor, ..*self }
    }
}

/// Distinct single-photon out-frequency centres k̄ + E₀^a − E₀^b.
pub fn out_centers(kbars: &[f64], energies: &[f64]) -> Vec<f64> {
    let mut c = Vec::new();
    for &k in kbars {
        for &a in energies {
            for &b in energies {
                c.push(k + a - b);
            }
        }
    }
    c.sort_by(f64::total_cmp);
    c.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    c
}

/// ‖T|ψ_L⟩‖² for each separation, on a whole-plane grid with the residue
/// evaluator (Lorentzian pulses).
pub fn t_norm_sweep(
    base: &InStateSpec,
    ls: &[f64],
    single: &SingleKernel<f64>,
    grid: &PlaneGrid,
) -> Result<Vec<f64>> {
    if ls.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Validation("separations must be ascending".into()));
    }
    let kernel = t_kernel(single, base.nu)?;
    let out = grid.build();
    let opts = SmearOptions::residue();
    ls.iter()
        .map(|&l| {
            let state = make_in_state(&InStateSpec { l, ..*base }, None)?;
            let r = apply_smatrix(&kernel, &state, &out, &opts)?;
            Ok(r.total)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PulseOrder {
    RedFirst,
    BlueFirst,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Colour {
    Red,
    Blue,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhotonClass {
    BothRed,
    BothBlue,
    OneEach,
    Elsewhere,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fig1Result {
    pub order: PulseOrder,
    pub spec: InStateSpec,
    pub populations: Vec<f64>,
    pub total: f64,
    pub fidelity_sequential: f64,
    /// Dominant final ground state.
    pub final_ground: usize,
    pub class: PhotonClass,
    /// [both red, both blue, one each] mass in the dominant ground state.
    pub class_mass: [f64; 3],
    /// Conjugate-position means of the red and blue photon in the
    /// one-each sector (larger is further ahead).
    pub position_red: Option<f64>,
    pub position_blue: Option<f64>,
    pub leading: Option<Colour>,
    pub warnings: Vec<String>,
    #[serde(skip)]
    pub scatter: Option<ScatterResult>,
}

/// Lattice spacing near `target` with hL an odd multiple of π, so cross
/// terms oscillating like e^{−i(p₁−p₂)L} alternate in sign across the grid.
pub fn alias_free_spacing(target: f64, l: f64) -> f64 {
    if l * target < PI {
        return target;
    }
    let m = ((l * target / PI - 1.0) / 2.0).round().max(0.0);
    (2.0 * m + 1.0) * PI / l
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fig1Options {
    /// Patch half-width in units of α.
    pub half_width: f64,
    /// Target lattice spacing in units of α.
    pub spacing: f64,
    /// Classification window half-width in units of α.
    pub window: f64,
}

impl Default for Fig1Options {
    fn default() -> Self {
        Self { half_width: 30.0, spacing: 0.5, window: 3.0 }
    }
}

pub fn fig1_regime_warnings(p: &LambdaAtomParams<f64>, alpha: f64) -> Vec<String> {
    let mut w = Vec::new();
    let g = p.big_gamma();
    if (p.gamma1 - p.gamma2).abs() > 1e-9 * g {
        w.push(format!("γ₁ = {} differs from γ₂ = {}", p.gamma1, p.gamma2));
    }
    if alpha > 0.1 * g {
        w.push(format!("pulse width α = {alpha} is not small against Γ = {g}"));
    }
    if p.delta1 - p.delta2 < 10.0 * g {
        w.push(format!("splitting Δ₁ − Δ₂ = {} is not large against Γ = {g}", p.delta1 - p.delta2));
    }
    w
}

/// Two pulses at Δ₂ (red) and Δ₁ (blue) on a Λ atom starting in g₁.
pub fn fig1_experiment(
    order: PulseOrder,
    p: &LambdaAtomParams<f64>,
    alpha: f64,
    l: f64,
    opts: &Fig1Options,
) -> Result<Fig1Result> {
    let warnings = fig1_regime_warnings(p, alpha);
    let (red, blue) = (p.delta2, p.delta1);
    let (k1, k2) = match order {
        PulseOrder::RedFirst => (red, blue),
        PulseOrder::BlueFirst => (blue, red),
    };
    let spec = InStateSpec { kbar1: k1, kbar2: k2, alpha1: alpha, alpha2: alpha, l, nu: 0, shape: Shape::Lorentzian };
    let state = make_in_state(&spec, None)?;
    let single = SingleKernel::lambda(*p)?;
    let energies = [p.ground_energy(0), p.ground_energy(1)];
    let h = alias_free_spacing(opts.spacing * alpha, l);
    let axis = Axis::lattice_patches(&out_centers(&[k1, k2], &energies), opts.half_width * alpha, h, red)?;
    let grid = OutGrid::square(axis);
    let kernel = full_kernel(&single, 0, &KernelOptions::default())?;
    let smear = SmearOptions::residue();
    let mut scatter = apply_smatrix(&kernel, &state, &grid, &smear)?;
    let pred = sequential_prediction(&state, &single, &grid);
    let fidelity_sequential = scatter.fidelity(&pred)?;

    let final_ground = if scatter.populations[1] > scatter.populations[0] { 1 } else { 0 };
    let wr = (red - opts.window * alpha, red + opts.window * alpha);
    let wb = (blue - opts.window * alpha, blue + opts.window * alpha);
    let class_mass = [
        scatter.window_mass(final_ground, wr, wr),
        scatter.window_mass(final_ground, wb, wb),
        scatter.window_mass(final_ground, wr, wb) + scatter.window_mass(final_ground, wb, wr),
    ];
    let best = (0..3).max_by(|&a, &b| class_mass[a].total_cmp(&class_mass[b])).unwrap();
    let class = if class_mass[best] < 0.5 * scatter.populations[final_ground] {
        PhotonClass::Elsewhere
    } else {
        [PhotonClass::BothRed, PhotonClass::BothBlue, PhotonClass::OneEach][best]
    };
    let (mut position_red, mut position_blue, mut leading) = (None, None, None);
    if class == PhotonClass::OneEach {
        let (xr, xb) = mean_positions(&kernel, &state, final_ground, &grid, wr, wb, l, &smear)?;
        position_red = Some(xr);
        position_blue = Some(xb);
        leading = Some(if xr > xb { Colour::Red } else { Colour::Blue });
    }
    scatter.warnings.extend(warnings.iter().cloned());
    Ok(Fig1Result {
        order,
        spec,
        populations: scatter.populations.clone(),
        total: scatter.total,
        fidelity_sequential,
        final_ground,
        class,
        class_mass,
        position_red,
        position_blue,
        leading,
        warnings,
        scatter: Some(scatter),
    })
}

/// ⟨x⟩ = −∫∫ Im(ψ* ∂ψ) / ∫∫|ψ|² for the photon in window A (slot p₁) and
/// the one in window B (slot p₂), over the region p₁ ∈ A, p₂ ∈ B.
#[allow(clippy::too_many_arguments)]
pub fn mean_positions(
    kernel: &TwoPhotonKernel<f64>,
    state: &TwoPhotonState,
    mu: usize,
    grid: &OutGrid,
    a: (f64, f64),
    b: (f64, f64),
    l: f64,
    opts: &SmearOptions,
) -> Result<(f64, f64)> {
    let pts: Vec<([f64; 2], f64)> = grid
        .points
        .iter()
        .zip(&grid.weights)
        .filter(|(p, _)| p[0] >= a.0 && p[0] <= a.1 && p[1] >= b.0 && p[1] <= b.1)
        .map(|(p, w)| (*p, *w))
        .collect();
    if pts.is_empty() {
        return Err(Error::Usage("classification window holds no grid points".into()));
    }
    let eps = 1e-3 * (a.1 - a.0).min(1.0 / l.max(1e-300));
    let mut shifted = Vec::with_capacity(5 * pts.len());
    for (p, _) in &pts {
        shifted.push(*p);
        shifted.push([p[0] + eps, p[1]]);
        shifted.push([p[0] - eps, p[1]]);
        shifted.push([p[0], p[1] + eps]);
        shifted.push([p[0], p[1] - eps]);
    }
    let v = amplitude_row(kernel, state, mu, &shifted, false, opts)?;
    let (mut norm, mut xa, mut xb) = (0.0, 0.0, 0.0);
    for (i, (_, w)) in pts.iter().enumerate() {
        let c: &[Complex64] = &v[5 * i..5 * i + 5];
        let da = (c[1] - c[2]) / (2.0 * eps);
        let db = (c[3] - c[4]) / (2.0 * eps);
        norm += w * c[0].norm_sqr();
        xa -= w * (c[0].conj() * da).im;
        xb -= w * (c[0].conj() * db).im;
    }
    Ok((xa / norm, xb / norm))
}
