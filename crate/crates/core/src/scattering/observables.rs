//! Out-state records, populations and derived observables.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::grid::{Layout, OutGrid};
use super::smear::{amplitudes_on_grid, SmearOptions};
use super::state::TwoPhotonState;
use crate::amplitudes::SingleKernel;
use crate::error::{Error, Result};
use crate::twophoton::TwoPhotonKernel;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScatterResult {
    pub nu: usize,
    pub label: String,
    pub ground_energies: Vec<f64>,
    pub grid: OutGrid,
    /// `amplitudes[μ][i]` at `grid.points[i]`.
    pub amplitudes: Vec<Vec<Complex64>>,
    pub populations: Vec<f64>,
    pub total: f64,
    /// ⟨p₁ + p₂⟩ within each final ground state (None when unpopulated).
    pub mean_total_momentum: Vec<Option<f64>>,
    pub warnings: Vec<String>,
}

impl ScatterResult {
    pub fn from_amplitudes(
        nu: usize,
        label: &str,
        ground_energies: Vec<f64>,
        grid: OutGrid,
        amplitudes: Vec<Vec<Complex64>>,
    ) -> Self {
        let mut populations = Vec::with_capacity(amplitudes.len());
        let mut means = Vec::with_capacity(amplitudes.len());
        for a in &amplitudes {
            let (mut pop, mut mom) = (0.0, 0.0);
            for ((v, w), p) in a.iter().zip(&grid.weights).zip(&grid.points) {
                let d = w * v.norm_sqr();
                pop += d;
                mom += d * (p[0] + p[1]);
            }
            populations.push(pop);
            means.push((pop > 0.0).then(|| mom / pop));
        }
        let total = populations.iter().sum();
        Self {
            nu,
            label: label.into(),
            ground_energies,
            grid,
            amplitudes,
            populations,
            total,
            mean_total_momentum: means,
            warnings: Vec::new(),
        }
    }

    fn check_grid(&self, other: &Self) -> Result<()> {
        if self.grid.points != other.grid.points || self.amplitudes.len() != other.amplitudes.len() {
            return Err(Error::Usage("results live on different grids".into()));
        }
        Ok(())
    }

    /// Σ_μ ∫∫ conj(self_μ) other_μ.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        self.check_grid(other)?;
        let mut acc = Complex64::new(0.0, 0.0);
        for (a, b) in self.amplitudes.iter().zip(&other.amplitudes) {
            for ((x, y), w) in a.iter().zip(b).zip(&self.grid.weights) {
                acc += x.conj() * y * *w;
            }
        }
        Ok(acc)
    }

    /// |⟨a|b⟩|² / (‖a‖²‖b‖²).
    pub fn fidelity(&self, other: &Self) -> Result<f64> {
        let ab = self.inner(other)?;
        Ok(ab.norm_sqr() / (self.total * other.total))
    }

    /// Σ_μ P_μ(⟨p₁ + p₂⟩_μ + E₀^μ).
    pub fn mean_energy(&self) -> f64 {
        let mut acc = 0.0;
        for (mu, p) in self.populations.iter().enumerate() {
            if let Some(m) = self.mean_total_momentum[mu] {
                acc += p * (m + self.ground_energies[mu]);
            }
        }
        acc / self.total
    }

    /// Single-photon spectrum n_μ(p) = ∫ |ψ_μ(p, p′)|² dp′ on a tensor grid;
    /// integrates to P_μ.
    pub fn marginal(&self, mu: usize) -> Option<(Vec<f64>, Vec<f64>)> {
        let Layout::Tensor { a, b } = &self.grid.layout else {
            return None;
        };
        let nb = b.len();
        let dens = (0..a.len())
            .map(|i| (0..nb).map(|j| b.weights[j] * self.amplitudes[mu][i * nb + j].norm_sqr()).sum())
            .collect();
        Some((a.nodes.clone(), dens))
    }

    /// Mass of ground μ with p₁ ∈ A and p₂ ∈ B.
    pub fn window_mass(&self, mu: usize, a: (f64, f64), b: (f64, f64)) -> f64 {
        let inside = |x: f64, w: (f64, f64)| x >= w.0 && x <= w.1;
        self.grid
            .points
            .iter()
            .zip(&self.grid.weights)
            .zip(&self.amplitudes[mu])
            .filter(|((p, _), _)| inside(p[0], a) && inside(p[1], b))
            .map(|((_, w), v)| w * v.norm_sqr())
            .sum()
    }
}

/// ⟨p₁p₂, g_μ|S|ψ⟩ on `grid` for every μ.
pub fn apply_smatrix(
    kernel: &TwoPhotonKernel<f64>,
    state: &TwoPhotonState,
    grid: &OutGrid,
    opts: &SmearOptions,
) -> Result<ScatterResult> {
    let amps = amplitudes_on_grid(kernel, state, grid, opts)?;
    let label = format!("{:?}", kernel.tag).to_lowercase();
    Ok(ScatterResult::from_amplitudes(kernel.nu, &label, kernel.ground_energies.clone(), grid.clone(), amps))
}

/// The in-state itself as a result record (ground ν populated).
pub fn in_state_on_grid(state: &TwoPhotonState, energies: &[f64], grid: &OutGrid) -> ScatterResult {
    let amps = (0..energies.len())
        .map(|mu| {
            if mu == state.nu {
                grid.points.iter().map(|p| state.eval(p[0], p[1])).collect()
            } else {
                vec![Complex64::new(0.0, 0.0); grid.len()]
            }
        })
        .collect();
    ScatterResult::from_amplitudes(state.nu, "in", energies.to_vec(), grid.clone(), amps)
}

/// Independent single-photon scatterings of the two pulses in arrival
/// order: the phase-carrying (leading) photon scatters ν → λ first, then
/// the trailing photon λ → μ.
pub fn sequential_prediction(state: &TwoPhotonState, single: &SingleKernel<f64>, grid: &OutGrid) -> ScatterResult {
    let g = single.n_ground();
    let e: Vec<f64> = (0..g).map(|m| single.ground_energy(m)).collect();
    let nu = state.nu;
    let amps = (0..g)
        .map(|mu| {
            grid.points
                .iter()
                .map(|p| {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for c in &state.components {
                        let lead = c.phase_slot;
                        let trail = 1 - lead;
                        for lam in 0..g {
                            let x = p[lead] + e[lam] - e[nu];
                            let y = p[trail] + e[mu] - e[lam];
                            let amp = single.t(y, mu, lam) * single.t(x, lam, nu);
                            acc += c.weight
                                * amp
                                * c.env[lead].eval(x)
                                * c.env[trail].eval(y)
                                * Complex64::new(0.0, -x * c.l).exp();
                        }
                    }
                    acc
                })
                .collect()
        })
        .collect();
    ScatterResult::from_amplitudes(nu, "sequential", e, grid.clone(), amps)
}

/// Lower bound on ‖a − R̂b‖ from populations: R̂ only relabels photon
/// order, so ‖a_μ − R̂b_μ‖ ≥ |‖a_μ‖ − ‖b_μ‖|.
pub fn order_exchange_defect(a: &ScatterResult, b: &ScatterResult) -> f64 {
    a.populations
        .iter()
        .zip(&b.populations)
        .map(|(x, y)| (x.max(0.0).sqrt() - y.max(0.0).sqrt()).powi(2))
        .sum::<f64>()
        .sqrt()
}
