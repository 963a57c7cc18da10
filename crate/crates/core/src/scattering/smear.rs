//! Smearing of kernel terms against in-state components.
//!
//! On a one-delta term the total-energy constraint leaves k₁ = K − q, k₂ = q
//! with K = p₁ + p₂ + E₀^μ − E₀^ν, and
//! ψ_out(p) = ½ ∫ dq S(p; K − q, q) ψ(K − q, q).
//! Real-axis poles are split as 1/(x + i0⁺) = P(1/x) − iπδ(x).

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::contour::{integrate_line, Pole, Rational};
use super::envelope::Shape;
use super::grid::OutGrid;
use super::state::{Component, TwoPhotonState};
use crate::amplitudes::PoleExpansion;
use crate::error::{Error, Result};
use crate::twophoton::{KernelTerm, LinearForm, TermKind, TwoPhotonKernel, K1, K2};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case", deny_unknown_fields)]
pub enum Evaluator {
    /// Contour closure on the known pole set; Lorentzian pulses only.
    Residue,
    /// Trapezoid over the truncated pulse support, offset-midpoint nodes
    /// symmetric about real poles.
    Numerical { nodes_per_width: f64, tail_tol: f64 },
}

impl Evaluator {
    pub fn numerical() -> Self {
        Self::Numerical { nodes_per_width: 16.0, tail_tol: 1e-12 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmearOptions {
    pub evaluator: Evaluator,
    /// Components whose pulse product has tail mass below this at the
    /// required total momentum are skipped.
    pub prune_tol: f64,
}

impl Default for SmearOptions {
    fn default() -> Self {
        Self { evaluator: Evaluator::numerical(), prune_tol: 1e-9 }
    }
}

impl SmearOptions {
    pub fn residue() -> Self {
        Self { evaluator: Evaluator::Residue, ..Default::default() }
    }
}

/// Factor restricted to the line: pf(s·q + b).
struct LineFactor<'a> {
    slope: f64,
    base: f64,
    pf: &'a PoleExpansion<f64>,
}

struct Prepared<'a> {
    term: &'a KernelTerm<f64>,
    /// Indices of factors constant along the line.
    flat: Vec<usize>,
    /// Factors varying along the line.
    along: Vec<usize>,
    /// Line integral depends on p only through K.
    shareable: bool,
}

fn p_free(f: &LinearForm<f64>) -> bool {
    f.coeffs[0] == 0 && f.coeffs[1] == 0
}

fn prepare(term: &KernelTerm<f64>) -> Result<Prepared<'_>> {
    if term.kind != TermKind::TwoDelta {
        let c = &term.constraints[0];
        if term.constraints.len() != 1 || c.coeffs[K1] != -1 || c.coeffs[K2] != -1 {
            return Err(Error::Usage(format!("one-delta term with non-total constraint {:?}", c.coeffs)));
        }
    }
    let (mut flat, mut along) = (Vec::new(), Vec::new());
    for (i, f) in term.factors.iter().enumerate() {
        if f.arg.coeffs[K1] == f.arg.coeffs[K2] {
            flat.push(i);
        } else {
            along.push(i);
        }
    }
    let shareable = along.iter().all(|&i| p_free(&term.factors[i].arg)) && term.pole.as_ref().is_none_or(p_free);
    Ok(Prepared { term, flat, along, shareable })
}

/// K from the total constraint: p₁ + p₂ + offset.
fn total_k(term: &KernelTerm<f64>, p: [f64; 2]) -> f64 {
    term.constraints[0].eval(&[p[0], p[1], 0.0, 0.0])
}

fn line_factors<'a>(pr: &Prepared<'a>, p: [f64; 2], kk: f64) -> Vec<LineFactor<'a>> {
    pr.along
        .iter()
        .map(|&i| {
            let f = &pr.term.factors[i];
            let (slope, base) = f.arg.along_line(p, kk);
            LineFactor { slope, base, pf: &f.pf }
        })
        .collect()
}

fn line_pole(pr: &Prepared, p: [f64; 2], kk: f64) -> Option<(f64, f64)> {
    pr.term.pole.as_ref().map(|f| f.along_line(p, kk))
}

/// Component with its truncation half-widths precomputed.
struct Pulse<'a> {
    c: &'a Component,
    /// Pruning half-widths of the two envelopes.
    prune: [f64; 2],
    /// Quadrature truncation half-widths.
    support: [f64; 2],
}

fn pulses<'a>(state: &'a TwoPhotonState, opts: &SmearOptions) -> Vec<Pulse<'a>> {
    let tail = match opts.evaluator {
        Evaluator::Numerical { tail_tol, .. } => tail_tol,
        Evaluator::Residue => opts.prune_tol,
    };
    state
        .components
        .iter()
        .map(|c| Pulse {
            c,
            prune: [c.env[0].cutoff(opts.prune_tol), c.env[1].cutoff(opts.prune_tol)],
            support: [c.env[0].cutoff(tail), c.env[1].cutoff(tail)],
        })
        .collect()
}

/// ∫ dq Π f(s q + b) [1/(s_p q + b_p + i0)] f_a(K − q) f_b(q) e^{−ik_sL}.
fn line_integral(fs: &[LineFactor], pole: Option<(f64, f64)>, pulse: &Pulse, kk: f64, ev: &Evaluator) -> Result<Complex64> {
    let c = pulse.c;
    let (e0, e1) = (&c.env[0], &c.env[1]);
    match *ev {
        Evaluator::Residue => {
            let w = pulse.prune[0] + pulse.prune[1];
            if (kk - e0.center - e1.center).abs() > w {
                return Ok(Complex64::new(0.0, 0.0));
            }
            let mut rs = Vec::with_capacity(fs.len() + 3);
            for f in fs {
                let mut poles = Vec::with_capacity(f.pf.poles.len());
                for &(z, r) in &f.pf.poles {
                    let w = (z - f.base) / f.slope;
                    if w.im == 0.0 {
                        return Err(Error::Accuracy("amplitude pole on the real axis".into()));
                    }
                    poles.push(Pole::off_axis(w, r / f.slope));
                }
                rs.push(Rational { constant: f.pf.constant, poles });
            }
            if let Some((s, b)) = pole {
                if s == 0.0 {
                    return Err(Error::Usage("pole constant along the energy shell".into()));
                }
                let z = Complex64::new(-b / s, 0.0);
                rs.push(Rational {
                    constant: Complex64::new(0.0, 0.0),
                    poles: vec![Pole { z, r: Complex64::new(1.0 / s, 0.0), upper: s < 0.0 }],
                });
            }
            for (env, cq) in [(e0, kk - e0.center), (e1, e1.center)] {
                let pf = env
                    .partial_fractions(cq)
                    .ok_or_else(|| Error::Usage("residue evaluator needs Lorentzian pulses".into()))?;
                rs.push(Rational {
                    constant: Complex64::new(0.0, 0.0),
                    poles: pf.iter().map(|&(z, r)| Pole::off_axis(z, r)).collect(),
                });
            }
            let (omega, phase) = if c.phase_slot == 0 {
                (-c.l, Complex64::new(0.0, -kk * c.l).exp())
            } else {
                (c.l, Complex64::new(1.0, 0.0))
            };
            Ok(phase * integrate_line(&rs, omega))
        }
        Evaluator::Numerical { nodes_per_width, .. } => {
            let [w0, w1] = pulse.support;
            let lo = (e1.center - w1).max(kk - e0.center - w0);
            let hi = (e1.center + w1).min(kk - e0.center + w0);
            let h = e0.width.min(e1.width) / nodes_per_width;
            let g = |q: f64| -> Complex64 {
                let mut v = Complex64::new(e0.eval(kk - q) * e1.eval(q), 0.0);
                for f in fs {
                    v *= f.pf.eval(Complex64::new(f.slope * q + f.base, 0.0));
                }
                let k = if c.phase_slot == 0 { kk - q } else { q };
                v * Complex64::new(0.0, -k * c.l).exp()
            };
            match pole {
                None => {
                    if lo >= hi {
                        return Ok(Complex64::new(0.0, 0.0));
                    }
                    Ok(trapezoid(lo, hi, h, |q| g(q)))
                }
                Some((s, b)) => {
                    if s == 0.0 {
                        return Err(Error::Usage("pole constant along the energy shell".into()));
                    }
                    let q0 = -b / s;
                    let delta = Complex64::new(0.0, -PI / s.abs()) * g(q0);
                    if lo >= hi {
                        return Ok(delta);
                    }
                    let margin = 0.25 * (hi - lo);
                    let pv = if q0 > lo - margin && q0 < hi + margin {
                        let half = (q0 - lo).max(hi - q0);
                        let n = (half / h).ceil() as i64;
                        let mut acc = Complex64::new(0.0, 0.0);
                        for j in -n..n {
                            let q = q0 + (j as f64 + 0.5) * h;
                            acc += g(q) / (s * (q - q0));
                        }
                        acc * h
                    } else {
                        trapezoid(lo, hi, h, |q| g(q) / (s * (q - q0)))
                    };
                    Ok(pv + delta)
                }
            }
        }
    }
}

fn trapezoid(lo: f64, hi: f64, h: f64, f: impl Fn(f64) -> Complex64) -> Complex64 {
    let n = ((hi - lo) / h).ceil().max(1.0) as usize;
    let step = (hi - lo) / n as f64;
    let mut acc = 0.5 * (f(lo) + f(hi));
    for j in 1..n {
        acc += f(lo + j as f64 * step);
    }
    acc * step
}

fn two_delta(term: &KernelTerm<f64>, state: &TwoPhotonState, p: [f64; 2]) -> Result<Complex64> {
    let (a, b) = (&term.constraints[0], &term.constraints[1]);
    let m = [[a.coeffs[K1] as f64, a.coeffs[K2] as f64], [b.coeffs[K1] as f64, b.coeffs[K2] as f64]];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if det == 0.0 {
        return Err(Error::Usage("dependent delta constraints".into()));
    }
    let ra = -a.eval(&[p[0], p[1], 0.0, 0.0]);
    let rb = -b.eval(&[p[0], p[1], 0.0, 0.0]);
    let k1 = (ra * m[1][1] - m[0][1] * rb) / det;
    let k2 = (m[0][0] * rb - m[1][0] * ra) / det;
    Ok(0.5 * term.coefficient(&[p[0], p[1], k1, k2]) * state.eval(k1, k2) / det.abs())
}

/// Out amplitudes ⟨p₁p₂, g_μ|S|ψ⟩ at a run of points. With `shared_k` all
/// points share p₁ + p₂, which lets K-only line integrals be reused.
pub fn amplitude_row(
    kernel: &TwoPhotonKernel<f64>,
    state: &TwoPhotonState,
    mu: usize,
    points: &[[f64; 2]],
    shared_k: bool,
    opts: &SmearOptions,
) -> Result<Vec<Complex64>> {
    if kernel.nu != state.nu {
        return Err(Error::Usage(format!("kernel starts in ground {} but the state in {}", kernel.nu, state.nu)));
    }
    if matches!(opts.evaluator, Evaluator::Residue) && state.spec.shape != Shape::Lorentzian {
        return Err(Error::Usage("residue evaluator needs Lorentzian pulses".into()));
    }
    let prepared = kernel.terms[mu].iter().map(prepare).collect::<Result<Vec<_>>>()?;
    let pulses = pulses(state, opts);
    let mut cache: Vec<Option<Complex64>> = vec![None; prepared.len()];
    let mut out = Vec::with_capacity(points.len());
    for &p in points {
        let mut acc = Complex64::new(0.0, 0.0);
        for (ti, pr) in prepared.iter().enumerate() {
            let term = pr.term;
            if term.kind == TermKind::TwoDelta {
                acc += two_delta(term, state, p)?;
                continue;
            }
            let kk = total_k(term, p);
            let smeared = match cache[ti] {
                Some(v) if shared_k && pr.shareable => v,
                _ => {
                    let fs = line_factors(pr, p, kk);
                    let pole = line_pole(pr, p, kk);
                    let mut v = Complex64::new(0.0, 0.0);
                    for pulse in &pulses {
                        v += pulse.c.weight * line_integral(&fs, pole, pulse, kk, &opts.evaluator)?;
                    }
                    if shared_k && pr.shareable {
                        cache[ti] = Some(v);
                    }
                    v
                }
            };
            let x = [p[0], p[1], kk, 0.0];
            let flat = pr.flat.iter().fold(term.prefactor, |a, &i| a * term.factors[i].eval(&x));
            acc += 0.5 * flat * smeared;
        }
        out.push(acc);
    }
    Ok(out)
}

/// Amplitudes for every final ground state on a grid; rows in parallel.
pub fn amplitudes_on_grid(
    kernel: &TwoPhotonKernel<f64>,
    state: &TwoPhotonState,
    grid: &OutGrid,
    opts: &SmearOptions,
) -> Result<Vec<Vec<Complex64>>> {
    let shared = grid.shares_row_sum();
    let rows: Vec<_> = grid.rows().collect();
    (0..kernel.n_ground())
        .map(|mu| {
            let parts = rows
                .par_iter()
                .map(|r| amplitude_row(kernel, state, mu, &grid.points[r.clone()], shared, opts))
                .collect::<Result<Vec<_>>>()?;
            Ok(parts.concat())
        })
        .collect()
}
