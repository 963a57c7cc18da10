//! Brute-force time-domain reference: the waveguide discretized into M
//! modes, the one- or two-excitation Schrödinger equation integrated
//! directly, and scattering outcomes read off the final state.
//!
//! Basis for two photons: |g; j ≤ j′⟩ ⊕ |s; j⟩ ⊕ |d⟩ with g in sector 0,
//! s in sector 1, d in sector 2. Sector 0 is used in its energy eigenbasis
//! so ground labels match the analytic path.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::model::GenericCavityModel;
use crate::scattering::grid::{Axis, OutGrid};
use crate::scattering::observables::ScatterResult;
use crate::scattering::state::TwoPhotonState;
use crate::scattering::Envelope;
use crate::spectral::hermitian_eigensystem;

type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);

/// M modes k_j = k_c + (j − M/2)δk coupled with g = √(γδk/2π).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscreteWaveguide {
    pub k_center: f64,
    pub dk: f64,
    pub modes: usize,
}

impl DiscreteWaveguide {
    pub fn new(k_center: f64, dk: f64, modes: usize) -> Result<Self> {
        if modes < 2 || !(dk > 0.0 && dk.is_finite()) || !k_center.is_finite() {
            return Err(Error::Validation(format!("waveguide needs ≥ 2 modes and δk > 0, got {modes}, {dk}")));
        }
        Ok(Self { k_center, dk, modes })
    }

    pub fn momentum(&self, j: usize) -> f64 {
        self.k_center + (j as f64 - (self.modes / 2) as f64) * self.dk
    }

    pub fn momenta(&self) -> Vec<f64> {
        (0..self.modes).map(|j| self.momentum(j)).collect()
    }

    pub fn coupling(&self, gamma: f64) -> f64 {
        (gamma * self.dk / (2.0 * PI)).sqrt()
    }

    pub fn window(&self) -> (f64, f64) {
        (self.momentum(0) - 0.5 * self.dk, self.momentum(self.modes - 1) + 0.5 * self.dk)
    }

    /// Revival time 2π/δk of the periodic discrete dynamics.
    pub fn recurrence_time(&self) -> f64 {
        2.0 * PI / self.dk
    }

    /// Modes as a quadrature axis (weights δk).
    pub fn axis(&self) -> Axis {
        Axis { nodes: self.momenta(), weights: vec![self.dk; self.modes] }
    }
}

/// Default cap on the basis dimension.
pub const DEFAULT_DIM_CAP: usize = 500_000;

/// Matrix-free Hermitian Hamiltonian of the discretized problem.
#[derive(Clone, Debug)]
pub struct OracleSystem {
    pub wg: DiscreteWaveguide,
    pub photons: usize,
    pub ground_energies: Vec<f64>,
    h1: CMatrix<f64>,
    h2: CMatrix<f64>,
    /// ⟨g|a|s⟩ with g in the ground eigenbasis.
    a1: CMatrix<f64>,
    /// ⟨s|a|d⟩.
    a2: CMatrix<f64>,
    g: f64,
    k: Vec<f64>,
    /// Constant removed from the diagonal (global phase only).
    shift: f64,
}

impl OracleSystem {
    fn n_ground(&self) -> usize {
        self.ground_energies.len()
    }

    fn pairs(&self) -> usize {
        self.wg.modes * (self.wg.modes + 1) / 2
    }

    /// Index of the pair j ≤ j′ within one ground block.
    pub fn pair_index(&self, j: usize, jp: usize) -> usize {
        let (a, b) = if j <= jp { (j, jp) } else { (jp, j) };
        a * self.wg.modes - a * a.saturating_sub(1) / 2 + (b - a)
    }

    /// Number of basis states in the photon-bearing blocks.
    fn photon_block(&self) -> usize {
        match self.photons {
            1 => self.n_ground() * self.wg.modes,
            _ => self.n_ground() * self.pairs(),
        }
    }

    fn sector1_block(&self) -> usize {
        match self.photons {
            1 => self.h1.rows(),
            _ => self.h1.rows() * self.wg.modes,
        }
    }

    pub fn dim(&self) -> usize {
        self.photon_block() + self.sector1_block() + if self.photons == 2 { self.h2.rows() } else { 0 }
    }

    /// y = (H − shift) x.
    pub fn apply(&self, x: &[C64], y: &mut [C64]) {
        let (nb, n1) = (self.photon_block(), self.sector1_block());
        let (y0, rest) = y.split_at_mut(nb);
        let (y1, y2) = rest.split_at_mut(n1);
        let (x0, xrest) = x.split_at(nb);
        let (x1, x2) = xrest.split_at(n1);
        let m = self.wg.modes;
        let s1 = self.h1.rows();
        let gc = self.g;
        let sqrt2 = std::f64::consts::SQRT_2;
        if self.photons == 1 {
            y0.par_chunks_mut(m).enumerate().for_each(|(gi, row)| {
                for (j, out) in row.iter_mut().enumerate() {
                    let mut v = x0[gi * m + j] * (self.k[j] + self.ground_energies[gi] - self.shift);
                    for s in 0..s1 {
                        v += gc * self.a1[(gi, s)] * x1[s];
                    }
                    *out = v;
                }
            });
            for s in 0..s1 {
                let mut v = -self.shift * x1[s];
                for t in 0..s1 {
                    v += self.h1[(s, t)] * x1[t];
                }
                for gi in 0..self.n_ground() {
                    let a = self.a1[(gi, s)].conj();
                    let mut acc = ZERO;
                    for j in 0..m {
                        acc += x0[gi * m + j];
                    }
                    v += gc * a * acc;
                }
                y1[s] = v;
            }
            return;
        }
        let p = self.pairs();
        // photon pairs: row j of each ground block is contiguous
        let row_start = |j: usize| j * m - j * j.saturating_sub(1) / 2;
        y0.par_chunks_mut(p).enumerate().for_each(|(gi, block)| {
            let e = self.ground_energies[gi] - self.shift;
            for j in 0..m {
                let start = row_start(j);
                for jp in j..m {
                    let idx = start + (jp - j);
                    let mut v = x0[gi * p + idx] * (self.k[j] + self.k[jp] + e);
                    for s in 0..s1 {
                        let a = gc * self.a1[(gi, s)];
                        if j == jp {
                            v += a * sqrt2 * x1[s * m + j];
                        } else {
                            v += a * (x1[s * m + j] + x1[s * m + jp]);
                        }
                    }
                    block[idx] = v;
                }
            }
        });
        let s2 = self.h2.rows();
        y1.par_chunks_mut(m).enumerate().for_each(|(s, row)| {
            for (j, out) in row.iter_mut().enumerate() {
                let mut v = x1[s * m + j] * (self.k[j] - self.shift);
                for t in 0..s1 {
                    v += self.h1[(s, t)] * x1[t * m + j];
                }
                for gi in 0..self.n_ground() {
                    let a = gc * self.a1[(gi, s)].conj();
                    let base = gi * p;
                    let mut acc = ZERO;
                    for jp in 0..m {
                        let (lo, hi) = if jp < j { (jp, j) } else { (j, jp) };
                        let c = x0[base + row_start(lo) + (hi - lo)];
                        acc += if jp == j { c * sqrt2 } else { c };
                    }
                    v += a * acc;
                }
                for d in 0..s2 {
                    v += gc * self.a2[(s, d)] * x2[d];
                }
                *out = v;
            }
        });
        for d in 0..s2 {
            let mut v = -self.shift * x2[d];
            for e in 0..s2 {
                v += self.h2[(d, e)] * x2[e];
            }
            let mut acc = ZERO;
            for s in 0..s1 {
                let a = self.a2[(s, d)].conj();
                for j in 0..m {
                    acc += a * x1[s * m + j];
                }
            }
            y2[d] = v + gc * acc;
        }
    }

    /// Bounds on the spectrum of H − shift: block diagonals by Gershgorin,
    /// plus ‖V‖ ≤ 2g√(nM)·max‖a‖_F for the waveguide coupling.
    pub fn spectral_bounds(&self) -> (f64, f64) {
        let (kmin, kmax) = self.k.iter().fold((f64::MAX, f64::MIN), |(a, b), &k| (a.min(k), b.max(k)));
        let (emin, emax) = self.ground_energies.iter().fold((f64::MAX, f64::MIN), |(a, b), &e| (a.min(e), b.max(e)));
        let gersh = |h: &CMatrix<f64>| -> Option<(f64, f64)> {
            (0..h.rows())
                .map(|r| {
                    let off: f64 = (0..h.cols()).filter(|&c| c != r).map(|c| h[(r, c)].norm()).sum();
                    (h[(r, r)].re - off, h[(r, r)].re + off)
                })
                .reduce(|a, b| (a.0.min(b.0), a.1.max(b.1)))
        };
        let n = self.photons as f64;
        let mut lo = n * kmin + emin;
        let mut hi = n * kmax + emax;
        if let Some((a, b)) = gersh(&self.h1) {
            lo = lo.min((n - 1.0) * kmin + a);
            hi = hi.max((n - 1.0) * kmax + b);
        }
        if self.photons == 2 {
            if let Some((a, b)) = gersh(&self.h2) {
                lo = lo.min(a);
                hi = hi.max(b);
            }
        }
        let amax = self.a1.norm_fro().max(self.a2.norm_fro());
        let v = 2.0 * self.g * (n * self.wg.modes as f64).sqrt() * amax;
        (lo - self.shift - v, hi - self.shift + v)
    }

    /// max |⟨u, Hv⟩ − conj⟨v, Hu⟩| over a few deterministic vectors.
    pub fn hermiticity_residual(&self) -> f64 {
        let n = self.dim();
        let vec_of = |seed: u64| -> Vec<C64> {
            let mut s = seed.wrapping_mul(0x9E3779B97F4A7C15) | 1;
            (0..n)
                .map(|_| {
                    s ^= s << 13;
                    s ^= s >> 7;
                    s ^= s << 17;
                    let a = (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
                    s ^= s << 13;
                    s ^= s >> 7;
                    s ^= s << 17;
                    let b = (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
                    C64::new(a, b)
                })
                .collect()
        };
        let mut worst: f64 = 0.0;
        for (a, b) in [(1, 2), (3, 4)] {
            let (u, v) = (vec_of(a), vec_of(b));
            let mut hu = vec![ZERO; n];
            let mut hv = vec![ZERO; n];
            self.apply(&u, &mut hu);
            self.apply(&v, &mut hv);
            let uhv: C64 = u.iter().zip(&hv).map(|(a, b)| a.conj() * b).sum();
            let vhu: C64 = v.iter().zip(&hu).map(|(a, b)| a.conj() * b).sum();
            let scale = uhv.norm().max(1.0);
            worst = worst.max((uhv - vhu.conj()).norm() / scale);
        }
        worst
    }
}

/// Assemble the discretized Hamiltonian for `photons` ∈ {1, 2}.
pub fn build_hamiltonian(
    model: &GenericCavityModel<f64>,
    wg: &DiscreteWaveguide,
    photons: usize,
    dim_cap: usize,
) -> Result<OracleSystem> {
    if !(1..=2).contains(&photons) {
        return Err(Error::Validation(format!("oracle supports one or two photons, got {photons}")));
    }
    let g0 = model.dim(0);
    let s1 = model.dim(1);
    let s2 = model.dim(2);
    let m = wg.modes;
    let dim = if photons == 1 { g0 * m + s1 } else { g0 * m * (m + 1) / 2 + s1 * m + s2 };
    if dim > dim_cap {
        // largest M within the cap for two photons: G M²/2 ≲ cap
        let suggest = if photons == 1 {
            (dim_cap - s1) / g0.max(1)
        } else {
            ((2.0 * dim_cap as f64 / g0.max(1) as f64).sqrt() as usize).saturating_sub(1)
        };
        return Err(Error::Validation(format!(
            "oracle dimension {dim} exceeds the cap {dim_cap}; use at most about {suggest} modes"
        )));
    }
    let ground = hermitian_eigensystem(&model.sectors[0].h, 0)?;
    let ground_energies: Vec<f64> = ground.eigenvalues.iter().map(|e| e.re).collect();
    let a1 = ground.right.adjoint().matmul(model.lowering(1));
    let a2 = if s2 > 0 { model.lowering(2).clone() } else { CMatrix::zeros(s1, 0) };
    let k = wg.momenta();
    let shift = photons as f64 * wg.k_center;
    Ok(OracleSystem {
        wg: *wg,
        photons,
        ground_energies,
        h1: model.sectors[1].h.clone(),
        h2: model.sectors[2].h.clone(),
        a1,
        a2,
        g: wg.coupling(model.gamma),
        k,
        shift,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FewExcitationState {
    pub amplitudes: Vec<C64>,
}

impl FewExcitationState {
    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }
}

/// Sample a two-photon wavepacket on the modes, move it back freely by
/// `t_before` (so it is still incoming), and renormalize.
pub fn prepare_two_photon(sys: &OracleSystem, state: &TwoPhotonState, t_before: f64) -> Result<FewExcitationState> {
    if sys.photons != 2 {
        return Err(Error::Usage("two-photon state needs a two-photon oracle".into()));
    }
    if state.nu >= sys.n_ground() {
        return Err(Error::Validation(format!("initial ground {} out of range", state.nu)));
    }
    let m = sys.wg.modes;
    let p = sys.pairs();
    let mut amps = vec![ZERO; sys.dim()];
    let base = state.nu * p;
    let k = &sys.k;
    let mut idx = 0;
    for j in 0..m {
        for jp in j..m {
            let psi = state.eval(k[j], k[jp]);
            let c = if j == jp { 1.0 } else { std::f64::consts::SQRT_2 };
            let phase = C64::new(0.0, (k[j] + k[jp]) * t_before).exp();
            amps[base + idx] = psi * phase * c * sys.wg.dk;
            idx += 1;
        }
    }
    normalize(amps)
}

/// Single photon with envelope `f` in ground ν, moved back by `t_before`.
pub fn prepare_one_photon(sys: &OracleSystem, f: &Envelope, nu: usize, t_before: f64) -> Result<FewExcitationState> {
    if sys.photons != 1 {
        return Err(Error::Usage("one-photon state needs a one-photon oracle".into()));
    }
    let m = sys.wg.modes;
    let mut amps = vec![ZERO; sys.dim()];
    for j in 0..m {
        let k = sys.k[j];
        amps[nu * m + j] = C64::new(0.0, k * t_before).exp() * f.eval(k) * sys.wg.dk.sqrt();
    }
    normalize(amps)
}

fn normalize(mut amps: Vec<C64>) -> Result<FewExcitationState> {
    let n = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if n == 0.0 {
        return Err(Error::Validation("wavepacket vanishes on the mode window".into()));
    }
    amps.iter_mut().for_each(|a| *a /= n);
    Ok(FewExcitationState { amplitudes: amps })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    /// Classical fourth-order Runge–Kutta with fixed step.
    Rk4,
    /// Chebyshev expansion of e^{−iHΔt}.
    Chebyshev,
}

/// Norm drift beyond which evolution aborts.
pub const INSTABILITY_DRIFT: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolveReport {
    pub steps: usize,
    pub matvecs: usize,
    pub norm_drift: f64,
}

/// Propagate for time `t`. For RK4 `dt` is the step and must satisfy
/// dt·‖H‖ ≤ 0.1; for Chebyshev `dt` caps the expansion interval.
pub fn evolve(
    sys: &OracleSystem,
    state: &FewExcitationState,
    t: f64,
    dt: f64,
    method: Integrator,
) -> Result<(FewExcitationState, EvolveReport)> {
    if !(t >= 0.0 && dt > 0.0) {
        return Err(Error::Validation(format!("need t ≥ 0 and dt > 0, got {t}, {dt}")));
    }
    let (lo, hi) = sys.spectral_bounds();
    let hnorm = lo.abs().max(hi.abs());
    let n0 = state.norm_sqr();
    let steps = (t / dt).ceil().max(1.0) as usize;
    let h = t / steps as f64;
    let mut x = state.amplitudes.clone();
    let mut matvecs = 0;
    match method {
        Integrator::Rk4 => {
            if h * hnorm > 0.1 * (1.0 + 1e-12) {
                return Err(Error::Validation(format!(
                    "step {h:.3e} too large for ‖H‖ ≈ {hnorm:.3e}; need dt·‖H‖ ≤ 0.1"
                )));
            }
            let n = x.len();
            let (mut k1, mut k2, mut k3, mut k4) = (vec![ZERO; n], vec![ZERO; n], vec![ZERO; n], vec![ZERO; n]);
            let mut tmp = vec![ZERO; n];
            let mi = C64::new(0.0, -1.0);
            for step in 0..steps {
                sys.apply(&x, &mut k1);
                scale_inplace(&mut k1, mi);
                axpy_into(&mut tmp, &x, &k1, 0.5 * h);
                sys.apply(&tmp, &mut k2);
                scale_inplace(&mut k2, mi);
                axpy_into(&mut tmp, &x, &k2, 0.5 * h);
                sys.apply(&tmp, &mut k3);
                scale_inplace(&mut k3, mi);
                axpy_into(&mut tmp, &x, &k3, h);
                sys.apply(&tmp, &mut k4);
                scale_inplace(&mut k4, mi);
                x.par_iter_mut().enumerate().for_each(|(i, v)| {
                    *v += (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) * (h / 6.0);
                });
                matvecs += 4;
                if step % 64 == 63 {
                    check_drift(&x, n0)?;
                }
            }
        }
        Integrator::Chebyshev => {
            let a = 0.5 * (hi - lo);
            let b = 0.5 * (hi + lo);
            let coeffs = chebyshev_coefficients(a * h);
            for _ in 0..steps {
                x = chebyshev_step(sys, &x, a, b, h, &coeffs);
                matvecs += coeffs.len() - 1;
                check_drift(&x, n0)?;
            }
        }
    }
    let drift = (x.iter().map(|a| a.norm_sqr()).sum::<f64>() - n0).abs();
    if drift > INSTABILITY_DRIFT {
        return Err(Error::NoConvergence(format!("norm drift {drift:.3e} during evolution")));
    }
    Ok((FewExcitationState { amplitudes: x }, EvolveReport { steps, matvecs, norm_drift: drift }))
}

fn check_drift(x: &[C64], n0: f64) -> Result<()> {
    let d = (x.iter().map(|a| a.norm_sqr()).sum::<f64>() - n0).abs();
    if d > INSTABILITY_DRIFT || !d.is_finite() {
        return Err(Error::NoConvergence(format!("evolution unstable: norm drift {d:.3e}")));
    }
    Ok(())
}

fn scale_inplace(v: &mut [C64], s: C64) {
    v.par_iter_mut().for_each(|x| *x *= s);
}

fn axpy_into(out: &mut [C64], x: &[C64], y: &[C64], a: f64) {
    out.par_iter_mut().enumerate().for_each(|(i, o)| *o = x[i] + y[i] * a);
}

/// J_n(x) for n = 0..N, N chosen where the terms fall below 1e-16, by
/// downward recurrence normalized with J₀ + 2ΣJ_{2k} = 1.
pub fn bessel_j_sequence(x: f64) -> Vec<f64> {
    if x == 0.0 {
        return vec![1.0];
    }
    let n_keep = (x + 12.0 * x.cbrt() + 30.0).ceil() as usize;
    let start = n_keep + 40 + (x.sqrt() as usize) * 2;
    let mut j = vec![0.0; start + 2];
    j[start] = 1e-300;
    for n in (1..=start).rev() {
        j[n - 1] = 2.0 * n as f64 / x * j[n] - j[n + 1];
        if j[n - 1].abs() > 1e250 {
            for v in j.iter_mut().skip(n - 1) {
                *v *= 1e-250;
            }
        }
    }
    let norm = j[0] + 2.0 * j.iter().skip(2).step_by(2).sum::<f64>();
    let mut out: Vec<f64> = j.iter().take(n_keep + 1).map(|v| v / norm).collect();
    while out.len() > 1 && out.last().unwrap().abs() < 1e-18 {
        out.pop();
    }
    out
}

fn chebyshev_coefficients(x: f64) -> Vec<C64> {
    bessel_j_sequence(x)
        .iter()
        .enumerate()
        .map(|(n, jn)| {
            let c = if n == 0 { 1.0 } else { 2.0 };
            // (−i)^n
            let ph = match n % 4 {
                0 => C64::new(1.0, 0.0),
                1 => C64::new(0.0, -1.0),
                2 => C64::new(-1.0, 0.0),
                _ => C64::new(0.0, 1.0),
            };
            ph * c * *jn
        })
        .collect()
}

/// e^{−iHh} x = e^{−ibh} Σ c_n T_n((H − b)/a) x.
fn chebyshev_step(sys: &OracleSystem, x: &[C64], a: f64, b: f64, h: f64, c: &[C64]) -> Vec<C64> {
    let n = x.len();
    let mut t_prev = x.to_vec();
    let mut acc: Vec<C64> = x.iter().map(|v| v * c[0]).collect();
    if c.len() == 1 {
        return acc;
    }
    let mut hx = vec![ZERO; n];
    sys.apply(x, &mut hx);
    let mut t_cur: Vec<C64> = hx.iter().zip(x).map(|(hv, v)| (hv - v * b) / a).collect();
    acc.par_iter_mut().zip(&t_cur).for_each(|(o, t)| *o += c[1] * t);
    for cn in c.iter().skip(2) {
        sys.apply(&t_cur, &mut hx);
        // T_{n+1} = 2H̃T_n − T_{n−1}, written over t_prev
        t_prev.par_iter_mut().enumerate().for_each(|(i, tp)| {
            *tp = 2.0 * (hx[i] - t_cur[i] * b) / a - *tp;
        });
        std::mem::swap(&mut t_prev, &mut t_cur);
        acc.par_iter_mut().zip(&t_cur).for_each(|(o, t)| *o += cn * t);
    }
    let ph = C64::new(0.0, -b * h).exp();
    acc.iter_mut().for_each(|v| *v *= ph);
    acc
}

/// Excited-sector population above which the interaction is unfinished.
pub const RESIDUAL_LIMIT: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleOut {
    pub photons: usize,
    pub populations: Vec<f64>,
    pub residual: f64,
    pub momenta: Vec<f64>,
    /// Two photons: `density[μ][i·M + j]` = |ψ_μ(k_i, k_j)|² (continuum
    /// normalization, ∫∫ = P_μ). One photon: `density[μ][j]`.
    pub density: Vec<Vec<f64>>,
}

/// Populations and spectral densities after the interaction is over.
pub fn extract_out(sys: &OracleSystem, state: &FewExcitationState) -> Result<OracleOut> {
    let nb = sys.photon_block();
    let residual: f64 = state.amplitudes[nb..].iter().map(|a| a.norm_sqr()).sum();
    if residual > RESIDUAL_LIMIT {
        return Err(Error::Accuracy(format!(
            "excited population {residual:.3e} remains; extend the evolution time"
        )));
    }
    let m = sys.wg.modes;
    let dk = sys.wg.dk;
    let g = sys.n_ground();
    let mut populations = vec![0.0; g];
    let mut density = Vec::with_capacity(g);
    if sys.photons == 1 {
        for (mu, pop) in populations.iter_mut().enumerate() {
            let d: Vec<f64> = (0..m).map(|j| state.amplitudes[mu * m + j].norm_sqr() / dk).collect();
            *pop = d.iter().sum::<f64>() * dk;
            density.push(d);
        }
    } else {
        let p = sys.pairs();
        for (mu, pop) in populations.iter_mut().enumerate() {
            let mut d = vec![0.0; m * m];
            let mut idx = 0;
            for j in 0..m {
                for jp in j..m {
                    let a = state.amplitudes[mu * p + idx];
                    idx += 1;
                    *pop += a.norm_sqr();
                    // |ψ(k,k′)|² from the pair amplitude
                    let v = if j == jp { a.norm_sqr() / (dk * dk) } else { a.norm_sqr() / (2.0 * dk * dk) };
                    d[j * m + jp] = v;
                    d[jp * m + j] = v;
                }
            }
            density.push(d);
        }
    }
    Ok(OracleOut { photons: sys.photons, populations, residual, momenta: sys.k.clone(), density })
}

/// Cross-path agreement of an oracle run with an analytic result.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub population_delta: Vec<f64>,
    pub max_population_delta: f64,
    /// Relative L2 distance of the unit-mass joint spectra, all μ together.
    pub spectral_l2: f64,
}

/// Compare against an analytic two-photon result evaluated on the mode
/// grid (`OutGrid::square(wg.axis())`).
pub fn compare_two_photon(o: &OracleOut, a: &ScatterResult) -> Result<Comparison> {
    let m = o.momenta.len();
    if a.grid.len() != m * m || a.amplitudes.len() != o.populations.len() {
        return Err(Error::Usage("analytic result is not on the oracle mode grid".into()));
    }
    let ana: Vec<Vec<f64>> = a.amplitudes.iter().map(|v| v.iter().map(|x| x.norm_sqr()).collect()).collect();
    let population_delta: Vec<f64> = o.populations.iter().zip(&a.populations).map(|(x, y)| x - y).collect();
    let max_population_delta = population_delta.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    let spectral_l2 = relative_l2(&o.density, &ana);
    Ok(Comparison { population_delta, max_population_delta, spectral_l2 })
}

/// ‖ρ̂_o − ρ̂_a‖₂/‖ρ̂_a‖₂ with each density normalized to unit mass.
pub fn relative_l2(o: &[Vec<f64>], a: &[Vec<f64>]) -> f64 {
    let so: f64 = o.iter().flatten().sum();
    let sa: f64 = a.iter().flatten().sum();
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in o.iter().flatten().zip(a.iter().flatten()) {
        num += (x / so - y / sa).powi(2);
        den += (y / sa).powi(2);
    }
    (num / den).sqrt()
}

/// Square out-grid on the oracle modes, for analytic comparison.
pub fn mode_grid(wg: &DiscreteWaveguide) -> OutGrid {
    OutGrid::square(wg.axis())
}
