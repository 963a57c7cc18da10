//! Two-photon in-states built from ordered single-photon pulses.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::contour::{integrate_line, Pole, Rational};
use super::envelope::{Envelope, Shape};
use crate::error::{Error, Result};

/// Pulse-pair parameters: photon 1 (centre `kbar1`) leads by distance `l`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InStateSpec {
    pub kbar1: f64,
    pub kbar2: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    #[serde(rename = "L")]
    pub l: f64,
    pub nu: usize,
    #[serde(default)]
    pub shape: Shape,
}

/// Uniform sampling axis shared by both photon slots.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSpec {
    pub kmin: f64,
    pub kmax: f64,
    pub n: usize,
}

impl AxisSpec {
    pub fn spacing(&self) -> f64 {
        (self.kmax - self.kmin) / (self.n - 1) as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.n).map(|i| self.kmin + i as f64 * h).collect()
    }
}

/// weight · f_a(k₁) f_b(k₂) · e^{−i k_s L}, s = `phase_slot`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub weight: Complex64,
    pub env: [Envelope; 2],
    pub phase_slot: usize,
    pub l: f64,
}

impl Component {
    pub fn eval(&self, k1: f64, k2: f64) -> Complex64 {
        let k = [k1, k2];
        self.weight * self.env[0].eval(k1) * self.env[1].eval(k2) * Complex64::new(0.0, -k[self.phase_slot] * self.l).exp()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampledState {
    pub axis: AxisSpec,
    /// Row-major ψ(k_i, k_j).
    pub amplitude: Vec<Complex64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoPhotonState {
    pub nu: usize,
    pub spec: InStateSpec,
    pub components: Vec<Component>,
    /// ∫ f₁ f₂ e^{−ikL} dk.
    pub overlap: Complex64,
    pub sampled: Option<SampledState>,
}

/// Largest αL accepted without an explicit phase-resolving grid.
pub const MAX_ALPHA_L: f64 = 1e4;
/// Tail mass allowed outside a sampling grid.
pub const GRID_TAIL_TOL: f64 = 1e-6;

/// ∫ f_a(k) f_b(k) e^{−ikL} dk in closed form.
pub fn envelope_overlap(a: &Envelope, b: &Envelope, l: f64) -> Result<Complex64> {
    match (a.shape, b.shape) {
        (Shape::Lorentzian, Shape::Lorentzian) => {
            let fa = lorentz_rational(a);
            let fb = lorentz_rational(b);
            Ok(integrate_line(&[fa, fb], l))
        }
        (Shape::Gaussian, Shape::Gaussian) => {
            let (sa, sb) = (a.width * a.width, b.width * b.width);
            let aa = 1.0 / (4.0 * sa) + 1.0 / (4.0 * sb);
            let bb = Complex64::new(a.center / (2.0 * sa) + b.center / (2.0 * sb), -l);
            let cc = -a.center * a.center / (4.0 * sa) - b.center * b.center / (4.0 * sb);
            Ok(a.norm * b.norm * (PI / aa).sqrt() * (bb * bb / (4.0 * aa) + cc).exp())
        }
        _ => Err(Error::Usage("both pulses must have the same envelope shape".into())),
    }
}

fn lorentz_rational(e: &Envelope) -> Rational {
    let pf = e.partial_fractions(e.center).expect("Lorentzian");
    Rational { constant: Complex64::new(0.0, 0.0), poles: pf.iter().map(|&(z, r)| Pole::off_axis(z, r)).collect() }
}

/// ψ = N/√2 [f₂(k₁) f₁(k₂) e^{−ik₂L} + f₁(k₁) f₂(k₂) e^{−ik₁L}],
/// N = (1 + |I|²)^{-1/2}; photon 1 is the leading pulse.
pub fn make_in_state(spec: &InStateSpec, grid: Option<&AxisSpec>) -> Result<TwoPhotonState> {
    if !(spec.l >= 0.0 && spec.l.is_finite()) {
        return Err(Error::Validation(format!("L must be finite and ≥ 0, got {}", spec.l)));
    }
    let f1 = Envelope::new(spec.shape, spec.kbar1, spec.alpha1)?;
    let f2 = Envelope::new(spec.shape, spec.kbar2, spec.alpha2)?;
    let alpha_l = spec.alpha1.min(spec.alpha2) * spec.l;
    if alpha_l > MAX_ALPHA_L {
        let ok = grid.is_some_and(|g| g.spacing() * spec.l <= PI);
        if !ok {
            return Err(Error::Accuracy(format!(
                "αL = {alpha_l:.3e} exceeds {MAX_ALPHA_L:e}; supply a sampling grid with spacing ≤ π/L = {:.3e}",
                PI / spec.l
            )));
        }
    }
    let overlap = envelope_overlap(&f1, &f2, spec.l)?;
    let n = 1.0 / (1.0 + overlap.norm_sqr()).sqrt();
    let w = Complex64::new(n / std::f64::consts::SQRT_2, 0.0);
    let components = vec![
        Component { weight: w, env: [f2, f1], phase_slot: 1, l: spec.l },
        Component { weight: w, env: [f1, f2], phase_slot: 0, l: spec.l },
    ];
    let mut state = TwoPhotonState { nu: spec.nu, spec: *spec, components, overlap, sampled: None };
    if let Some(g) = grid {
        if g.n < 2 || !(g.kmax > g.kmin) {
            return Err(Error::Validation("sampling grid needs n ≥ 2 and kmax > kmin".into()));
        }
        for f in [&f1, &f2] {
            let tail = f.mass_outside(g.kmin, g.kmax);
            if tail > GRID_TAIL_TOL {
                let w = f.cutoff(GRID_TAIL_TOL);
                return Err(Error::Accuracy(format!(
                    "grid [{}, {}] leaves tail mass {tail:.2e} of the pulse at {}; need at least [{}, {}]",
                    g.kmin,
                    g.kmax,
                    f.center,
                    f.center - w,
                    f.center + w
                )));
            }
        }
        let ks = g.nodes();
        let mut amp = vec![Complex64::new(0.0, 0.0); g.n * g.n];
        for i in 0..g.n {
            for j in i..g.n {
                let v = state.eval(ks[i], ks[j]);
                amp[i * g.n + j] = v;
                amp[j * g.n + i] = v;
            }
        }
        state.sampled = Some(SampledState { axis: *g, amplitude: amp });
    }
    Ok(state)
}

impl TwoPhotonState {
    pub fn eval(&self, k1: f64, k2: f64) -> Complex64 {
        self.components.iter().map(|c| c.eval(k1, k2)).sum()
    }

    /// Analytic norm ‖ψ‖² from the component envelopes.
    pub fn norm_sqr(&self) -> Result<f64> {
        let mut acc = Complex64::new(0.0, 0.0);
        for a in &self.components {
            for b in &self.components {
                acc += a.weight.conj() * b.weight * component_overlap(a, b)?;
            }
        }
        Ok(acc.re)
    }

    /// Trapezoid norm on the sampling grid, if sampled.
    pub fn grid_norm_sqr(&self) -> Option<f64> {
        let s = self.sampled.as_ref()?;
        let h = s.axis.spacing();
        let n = s.axis.n;
        let w = |i: usize| if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += w(i) * w(j) * s.amplitude[i * n + j].norm_sqr();
            }
        }
        Some(acc * h * h)
    }

    /// ⟨self|other⟩ from closed-form envelope overlaps.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        let mut acc = Complex64::new(0.0, 0.0);
        for a in &self.components {
            for b in &other.components {
                acc += a.weight.conj() * b.weight * component_overlap(a, b)?;
            }
        }
        Ok(acc)
    }

    /// State made of a subset of the components (order-resolved halves).
    pub fn part(&self, idx: &[usize]) -> Self {
        let components = idx.iter().map(|&i| self.components[i]).collect();
        Self { components, sampled: None, ..self.clone() }
    }
}

/// ∫∫ conj(a) b without weights.
fn component_overlap(a: &Component, b: &Component) -> Result<Complex64> {
    let mut v = Complex64::new(1.0, 0.0);
    for slot in 0..2 {
        // e^{+ikL_a} on a's phase slot, e^{−ikL_b} on b's
        let la = if a.phase_slot == slot { a.l } else { 0.0 };
        let lb = if b.phase_slot == slot { b.l } else { 0.0 };
        v *= envelope_overlap(&a.env[slot], &b.env[slot], lb - la)?;
    }
    Ok(v)
}
