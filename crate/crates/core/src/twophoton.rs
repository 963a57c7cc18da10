//! Two-photon S-matrix kernels as symbolic term lists.
//!
//! Momenta are ordered (p₁, p₂, k₁, k₂). Every term is a product of
//! partial-fraction factors in linear forms of these momenta, times delta
//! constraints and at most one real-axis pole carrying the +i0⁺ prescription.
//! The kernel tagged `T` stores the terms of iT, so `S = S0 + T` term-wise.

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::amplitudes::{PoleExpansion, SingleKernel};
use crate::error::{Error, Result};
use crate::real::{cplx, re, Real, C};

pub const P1: usize = 0;
pub const P2: usize = 1;
pub const K1: usize = 2;
pub const K2: usize = 3;

/// Σ coeffs[i]·x[i] + offset with exact integer coefficients.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct LinearForm<T: Real> {
    pub coeffs: [i32; 4],
    pub offset: T,
}

impl<T: Real> LinearForm<T> {
    pub fn var(i: usize) -> Self {
        let mut coeffs = [0; 4];
        coeffs[i] = 1;
        Self { coeffs, offset: T::zero() }
    }

    pub fn plus(mut self, o: Self) -> Self {
        for i in 0..4 {
            self.coeffs[i] += o.coeffs[i];
        }
        self.offset += o.offset;
        self
    }

    pub fn minus(mut self, o: Self) -> Self {
        for i in 0..4 {
            self.coeffs[i] -= o.coeffs[i];
        }
        self.offset -= o.offset;
        self
    }

    pub fn shift(mut self, c: T) -> Self {
        self.offset += c;
        self
    }

    pub fn eval(&self, x: &[T; 4]) -> T {
        let mut acc = self.offset;
        for i in 0..4 {
            if self.coeffs[i] != 0 {
                acc += T::from_i32(self.coeffs[i]).unwrap() * x[i];
            }
        }
        acc
    }

    /// Restrict to k₁ = K − q, k₂ = q: returns (slope in q, value at q = 0)
    /// for given out momenta and K.
    pub fn along_line(&self, p: [T; 2], kk: T) -> (T, T) {
        let slope = self.coeffs[K2] - self.coeffs[K1];
        let base = self.eval(&[p[0], p[1], kk, T::zero()]);
        (T::from_i32(slope).unwrap(), base)
    }
}

/// One multiplicative factor f(u) with u a linear form of the momenta.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Factor<T: Real> {
    pub arg: LinearForm<T>,
    pub pf: PoleExpansion<T>,
}

impl<T: Real> Factor<T> {
    pub fn eval(&self, x: &[T; 4]) -> C<T> {
        self.pf.eval(re(self.arg.eval(x)))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TermKind {
    TwoDelta,
    PoleOneDelta,
    RegularOneDelta,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct KernelTerm<T: Real> {
    pub kind: TermKind,
    pub prefactor: C<T>,
    pub factors: Vec<Factor<T>>,
    /// One constraint (total energy) or two independent ones.
    pub constraints: Vec<LinearForm<T>>,
    /// Real-axis pole 1/(x + i0⁺), present only for `PoleOneDelta`.
    pub pole: Option<LinearForm<T>>,
}

impl<T: Real> KernelTerm<T> {
    /// Regular coefficient (prefactor times all factors) at a point.
    pub fn coefficient(&self, x: &[T; 4]) -> C<T> {
        self.factors.iter().fold(self.prefactor, |acc, f| acc * f.eval(x))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelTag {
    S0,
    T,
    Raw,
    Full,
}

/// All terms ⟨p₁p₂, g_μ| · |k₁k₂, g_ν⟩ for one initial ground state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct TwoPhotonKernel<T: Real> {
    pub nu: usize,
    pub tag: KernelTag,
    pub ground_energies: Vec<T>,
    /// `terms[μ]` lists the summands for final ground μ.
    pub terms: Vec<Vec<KernelTerm<T>>>,
}

impl<T: Real> TwoPhotonKernel<T> {
    pub fn n_ground(&self) -> usize {
        self.terms.len()
    }

    pub fn count(&self, mu: usize) -> usize {
        self.terms[mu].len()
    }

    /// Union of two kernels with the same ν.
    pub fn combine(&self, other: &Self, tag: KernelTag) -> Result<Self> {
        if self.nu != other.nu || self.n_ground() != other.n_ground() {
            return Err(Error::Usage("kernels with different ground states cannot be combined".into()));
        }
        let terms = self.terms.iter().zip(&other.terms).map(|(a, b)| a.iter().chain(b).cloned().collect()).collect();
        Ok(Self { nu: self.nu, tag, ground_energies: self.ground_energies.clone(), terms })
    }

    /// Sum of one-delta densities at an off-pole point of the constraint
    /// surface (poles evaluated without i0⁺). Two-delta terms are skipped.
    pub fn one_delta_density(&self, mu: usize, x: &[T; 4]) -> C<T> {
        let mut acc = C::<T>::zero();
        for term in &self.terms[mu] {
            match term.kind {
                TermKind::TwoDelta => {}
                TermKind::RegularOneDelta => acc += term.coefficient(x),
                TermKind::PoleOneDelta => {
                    let d = term.pole.as_ref().expect("pole term without pole").eval(x);
                    acc += term.coefficient(x) / re(d);
                }
            }
        }
        acc
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct KernelOptions<T: Real> {
    /// Collapse S0 poles into two-delta terms when the ground manifold is
    /// degenerate and the single-photon amplitudes commute.
    pub collapse_degenerate: bool,
    pub degeneracy_tol: T,
}

impl<T: Real> Default for KernelOptions<T> {
    fn default() -> Self {
        Self { collapse_degenerate: true, degeneracy_tol: T::lit(1e-9) }
    }
}

const PERMS: [[usize; 2]; 2] = [[0, 1], [1, 0]];

fn pvar<T: Real>(q: [usize; 2], slot: usize) -> LinearForm<T> {
    LinearForm::var(P1 + q[slot])
}

fn kvar<T: Real>(p: [usize; 2], slot: usize) -> LinearForm<T> {
    LinearForm::var(K1 + p[slot])
}

fn energies<T: Real>(single: &SingleKernel<T>) -> Vec<T> {
    (0..single.n_ground()).map(|m| single.ground_energy(m)).collect()
}

/// p₁ + p₂ + E₀^μ − k₁ − k₂ − E₀^ν.
pub fn total_constraint<T: Real>(e: &[T], mu: usize, nu: usize) -> LinearForm<T> {
    LinearForm::var(P1).plus(LinearForm::var(P2)).minus(LinearForm::var(K1)).minus(LinearForm::var(K2)).shift(e[mu] - e[nu])
}

fn single_pole<T: Real>(z: C<T>, c: C<T>) -> PoleExpansion<T> {
    PoleExpansion { constant: C::zero(), poles: vec![(z, c)] }
}

fn without_constant<T: Real>(mut pf: PoleExpansion<T>) -> PoleExpansion<T> {
    pf.constant = C::zero();
    pf
}

/// True when the residue matrices of t commute pairwise, so that
/// t(a)t(b) = t(b)t(a) on a degenerate ground manifold.
fn amplitudes_commute<T: Real>(single: &SingleKernel<T>, tol: T) -> bool {
    let g = single.n_ground();
    let npoles = single.pole_expansion(0, 0).poles.len();
    let residue = |rho: usize| -> Vec<C<T>> {
        (0..g * g).map(|i| single.pole_expansion(i / g, i % g).poles[rho].1).collect()
    };
    let mats: Vec<Vec<C<T>>> = (0..npoles).map(residue).collect();
    let scale = mats.iter().flatten().fold(T::one(), |m, z| m.max(z.norm()));
    for a in &mats {
        for b in &mats {
            for mu in 0..g {
                for nu in 0..g {
                    let mut ab = C::<T>::zero();
                    let mut ba = C::<T>::zero();
                    for l in 0..g {
                        ab += a[mu * g + l] * b[l * g + nu];
                        ba += b[mu * g + l] * a[l * g + nu];
                    }
                    if (ab - ba).norm() > tol * scale * scale {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// Non-interacting part S0 for initial ground ν (all final μ).
pub fn s0_kernel<T: Real>(single: &SingleKernel<T>, nu: usize, opts: &KernelOptions<T>) -> TwoPhotonKernel<T> {
    let e = energies(single);
    let g = e.len();
    let spread = e.iter().fold(T::zero(), |m, &x| m.max((x - e[0]).abs()));
    let collapse =
        opts.collapse_degenerate && spread <= opts.degeneracy_tol && amplitudes_commute(single, T::tol(1e-12));
    let i_over_2pi = cplx(T::zero(), T::one() / T::TAU());
    let mut terms = vec![Vec::new(); g];
    for (mu, list) in terms.iter_mut().enumerate() {
        let total = total_constraint(&e, mu, nu);
        for q in PERMS {
            if collapse && q != PERMS[0] {
                continue;
            }
            for p in PERMS {
                for lam in 0..g {
                    let factors = vec![
                        Factor { arg: kvar(p, 1), pf: single.pole_expansion(mu, lam) },
                        Factor { arg: kvar(p, 0), pf: single.pole_expansion(lam, nu) },
                    ];
                    let x = pvar::<T>(q, 1).minus(kvar(p, 1)).shift(e[mu] - e[lam]);
                    if collapse {
                        list.push(KernelTerm {
                            kind: TermKind::TwoDelta,
                            prefactor: C::one(),
                            factors,
                            constraints: vec![x, total],
                            pole: None,
                        });
                    } else {
                        list.push(KernelTerm {
                            kind: TermKind::PoleOneDelta,
                            prefactor: i_over_2pi,
                            factors,
                            constraints: vec![total],
                            pole: Some(x),
                        });
                    }
                }
            }
        }
    }
    TwoPhotonKernel { nu, tag: KernelTag::S0, ground_energies: e, terms }
}

/// Closed-form iT for the Λ atom.
pub fn t_kernel_lambda<T: Real>(p: &crate::model::LambdaAtomParams<T>, nu: usize) -> TwoPhotonKernel<T> {
    let e: Vec<T> = (0..2).map(|m| p.ground_energy(m)).collect();
    let gam = p.big_gamma();
    let pole = |m: usize| cplx(p.detuning(m), -gam);
    let sq = |a: usize, b: usize| cplx(T::zero(), -(p.rate(a) * p.rate(b)).sqrt());
    let pre = cplx(T::zero(), -T::one() / T::TAU());
    let mut terms = vec![Vec::new(); 2];
    for (mu, list) in terms.iter_mut().enumerate() {
        let total = total_constraint(&e, mu, nu);
        for q in PERMS {
            for pp in PERMS {
                for lam in 0..2 {
                    list.push(KernelTerm {
                        kind: TermKind::RegularOneDelta,
                        prefactor: pre,
                        factors: vec![
                            Factor { arg: pvar(q, 0), pf: single_pole(pole(mu), C::one()) },
                            Factor { arg: kvar(pp, 1), pf: single_pole(pole(lam), sq(mu, lam)) },
                            Factor { arg: kvar(pp, 0), pf: single_pole(pole(nu), sq(lam, nu)) },
                        ],
                        constraints: vec![total],
                        pole: None,
                    });
                }
            }
        }
    }
    TwoPhotonKernel { nu, tag: KernelTag::T, ground_energies: e, terms }
}

/// iT from the biorthogonal spectral data of a generic cavity.
pub fn t_kernel_generic<T: Real>(single: &SingleKernel<T>, nu: usize) -> Result<TwoPhotonKernel<T>> {
    let (gamma, sp) = match single {
        SingleKernel::Generic { gamma, spectra } => (*gamma, spectra),
        SingleKernel::Lambda(_) => {
            return Err(Error::Usage("t_kernel_generic needs spectral data; convert the model first".into()))
        }
    };
    let e = energies(single);
    let g = e.len();
    let s1 = sp.sector(1);
    let s2 = sp.sector(2);
    let mut terms = vec![Vec::new(); g];
    if gamma == T::zero() {
        return Ok(TwoPhotonKernel { nu, tag: KernelTag::T, ground_energies: e, terms });
    }
    let minus_i_gamma = cplx(T::zero(), -gamma);
    let chain_pre = re(T::one() / (T::TAU() * gamma));
    let pair_pre = cplx(T::zero(), T::one() / T::TAU());
    for (mu, list) in terms.iter_mut().enumerate() {
        let total = total_constraint(&e, mu, nu);
        for q in PERMS {
            for pp in PERMS {
                // single-excitation chain
                for lam in 0..g {
                    let s_lam_nu = without_constant(single.pole_expansion(lam, nu));
                    for rho in 0..s1.dim() {
                        let z = s1.eigenvalues[rho];
                        let w = sp.a1_ground_right[(mu, rho)] * sp.a1dag_left_ground[(rho, lam)];
                        list.push(KernelTerm {
                            kind: TermKind::RegularOneDelta,
                            prefactor: chain_pre * w,
                            factors: vec![
                                Factor { arg: pvar(q, 0), pf: single_pole(z - re(e[mu]), minus_i_gamma) },
                                Factor { arg: kvar(pp, 1), pf: single_pole(z - re(e[lam]), minus_i_gamma) },
                                Factor { arg: kvar(pp, 0), pf: s_lam_nu.clone() },
                            ],
                            constraints: vec![total],
                            pole: None,
                        });
                    }
                }
                // two-excitation pole
                for lam in 0..s2.dim() {
                    let out = PoleExpansion {
                        constant: C::zero(),
                        poles: (0..s1.dim())
                            .map(|rho| {
                                let w = sp.a1_ground_right[(mu, rho)] * sp.a2_left_right[(rho, lam)];
                                (s1.eigenvalues[rho] - re(e[mu]), minus_i_gamma * w)
                            })
                            .collect(),
                    };
                    let inn = PoleExpansion {
                        constant: C::zero(),
                        poles: (0..s1.dim())
                            .map(|sig| {
                                let w = sp.a2dag_left_right[(lam, sig)] * sp.a1dag_left_ground[(sig, nu)];
                                (s1.eigenvalues[sig] - re(e[nu]), minus_i_gamma * w)
                            })
                            .collect(),
                    };
                    let ksum = LinearForm::var(K1).plus(LinearForm::var(K2));
                    list.push(KernelTerm {
                        kind: TermKind::RegularOneDelta,
                        prefactor: pair_pre,
                        factors: vec![
                            Factor { arg: pvar(q, 0), pf: out },
                            Factor { arg: kvar(pp, 0), pf: inn },
                            Factor { arg: ksum, pf: single_pole(s2.eigenvalues[lam] - re(e[nu]), C::one()) },
                        ],
                        constraints: vec![total],
                        pole: None,
                    });
                }
            }
        }
    }
    Ok(TwoPhotonKernel { nu, tag: KernelTag::T, ground_energies: e, terms })
}

/// iT using the closed form for Λ backends and spectral sums otherwise.
pub fn t_kernel<T: Real>(single: &SingleKernel<T>, nu: usize) -> Result<TwoPhotonKernel<T>> {
    match single {
        SingleKernel::Lambda(p) => Ok(t_kernel_lambda(p, nu)),
        SingleKernel::Generic { .. } => t_kernel_generic(single, nu),
    }
}

/// Untransformed input-output form for the Λ atom: identity, one photon
/// scattered while the other passes, and the correlated pole term.
pub fn raw_kernel_lambda<T: Real>(p: &crate::model::LambdaAtomParams<T>, nu: usize) -> TwoPhotonKernel<T> {
    let e: Vec<T> = (0..2).map(|m| p.ground_energy(m)).collect();
    let gam = p.big_gamma();
    let pole = |m: usize| cplx(p.detuning(m), -gam);
    let sq = |a: usize, b: usize| cplx(T::zero(), -(p.rate(a) * p.rate(b)).sqrt());
    let i_over_2pi = cplx(T::zero(), T::one() / T::TAU());
    let mut terms = vec![Vec::new(); 2];
    for (mu, list) in terms.iter_mut().enumerate() {
        let total = total_constraint(&e, mu, nu);
        for q in PERMS {
            for pp in PERMS {
                if mu == nu {
                    list.push(KernelTerm {
                        kind: TermKind::TwoDelta,
                        prefactor: re(T::lit(0.5)),
                        factors: Vec::new(),
                        constraints: vec![pvar::<T>(q, 0).minus(kvar(pp, 0)), pvar::<T>(q, 1).minus(kvar(pp, 1))],
                        pole: None,
                    });
                }
                list.push(KernelTerm {
                    kind: TermKind::TwoDelta,
                    prefactor: C::one(),
                    factors: vec![Factor { arg: kvar(pp, 0), pf: single_pole(pole(nu), sq(mu, nu)) }],
                    constraints: vec![
                        pvar::<T>(q, 1).minus(kvar(pp, 1)),
                        pvar::<T>(q, 0).minus(kvar(pp, 0)).shift(e[mu] - e[nu]),
                    ],
                    pole: None,
                });
                for lam in 0..2 {
                    list.push(KernelTerm {
                        kind: TermKind::PoleOneDelta,
                        prefactor: i_over_2pi,
                        factors: vec![
                            Factor { arg: pvar(q, 1), pf: single_pole(pole(mu), sq(lam, mu)) },
                            Factor { arg: kvar(pp, 0), pf: single_pole(pole(nu), sq(lam, nu)) },
                        ],
                        constraints: vec![total],
                        pole: Some(pvar::<T>(q, 1).minus(kvar(pp, 1)).shift(e[mu] - e[lam])),
                    });
                }
            }
        }
    }
    TwoPhotonKernel { nu, tag: KernelTag::Raw, ground_energies: e, terms }
}

/// S = S0 + iT.
pub fn full_kernel<T: Real>(single: &SingleKernel<T>, nu: usize, opts: &KernelOptions<T>) -> Result<TwoPhotonKernel<T>> {
    s0_kernel(single, nu, opts).combine(&t_kernel(single, nu)?, KernelTag::Full)
}

/// Value, pole distance and constraint residuals of each term at a point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermReport {
    pub kind: TermKind,
    pub coefficient: [f64; 2],
    pub pole_distance: Option<f64>,
    pub constraint_residuals: Vec<f64>,
}

pub fn report_terms<T: Real>(kernel: &TwoPhotonKernel<T>, mu: usize, x: &[T; 4]) -> Vec<TermReport> {
    kernel.terms[mu]
        .iter()
        .map(|t| {
            let c = t.coefficient(x);
            TermReport {
                kind: t.kind,
                coefficient: [c.re.to_f64_lossy(), c.im.to_f64_lossy()],
                pole_distance: t.pole.map(|p| p.eval(x).to_f64_lossy()),
                constraint_residuals: t.constraints.iter().map(|f| f.eval(x).to_f64_lossy()).collect(),
            }
        })
        .collect()
}
