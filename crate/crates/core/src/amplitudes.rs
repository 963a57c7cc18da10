//! Single-photon transmission amplitudes t_{μν}(k).
//!
//! A photon with momentum k scattering the emitter from ground ν to μ leaves
//! with momentum p = k + E₀^ν − E₀^μ.

use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{GenericCavityModel, LambdaAtomParams};
use crate::real::{cplx, re, Real, C};
use crate::spectral::{model_spectra, EigenOptions, Spectra};

/// Closed-form Λ amplitude δ_{μν} − i√(γ_μγ_ν)/(k − Δ_ν + iΓ).
pub fn t_lambda<T: Real>(k: T, mu: usize, nu: usize, p: &LambdaAtomParams<T>) -> C<T> {
    let delta = if mu == nu { C::<T>::one() } else { C::<T>::zero() };
    delta + s_lambda(k, mu, nu, p)
}

/// Breit–Wigner part s_{μν}(k) = −i√(γ_μγ_ν)/(k − Δ_ν + iΓ).
pub fn s_lambda<T: Real>(k: T, mu: usize, nu: usize, p: &LambdaAtomParams<T>) -> C<T> {
    let num = cplx(T::zero(), -(p.rate(mu) * p.rate(nu)).sqrt());
    num / cplx(k - p.detuning(nu), p.big_gamma())
}

/// s_ν^ρ(k) = −iγ/(k + E₀^ν − 𝓔₁^ρ).
pub fn s_generic<T: Real>(k: T, nu: usize, rho: usize, gamma: T, spectra: &Spectra<T>) -> C<T> {
    let z = spectra.sectors[1].eigenvalues[rho];
    cplx(T::zero(), -gamma) / (re(k + spectra.ground_energy(nu)) - z)
}

/// Spectral-sum amplitude δ_{μν} + Σ_ρ s_ν^ρ(k)⟨g_μ|a|ρ⟩⟨ρ̄|a†|g_ν⟩.
pub fn t_generic<T: Real>(k: T, mu: usize, nu: usize, gamma: T, spectra: &Spectra<T>) -> C<T> {
    let mut t = if mu == nu { C::<T>::one() } else { C::<T>::zero() };
    for rho in 0..spectra.sectors[1].dim() {
        t += s_generic(k, nu, rho, gamma, spectra) * spectra.a1_ground_right[(mu, rho)] * spectra.a1dag_left_ground[(rho, nu)];
    }
    t
}

/// t_{μν}(k) = constant + Σ (c / (k − z)) with Im z < 0 for lossy couplings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct PoleExpansion<T: Real> {
    pub constant: C<T>,
    pub poles: Vec<(C<T>, C<T>)>,
}

impl<T: Real> PoleExpansion<T> {
    pub fn eval(&self, k: C<T>) -> C<T> {
        self.poles.iter().fold(self.constant, |acc, &(z, c)| acc + c / (k - z))
    }
}

/// Either backend for single-photon scattering, sharing one interface.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub enum SingleKernel<T: Real> {
    Lambda(LambdaAtomParams<T>),
    Generic { gamma: T, spectra: Spectra<T> },
}

impl<T: Real> SingleKernel<T> {
    pub fn lambda(p: LambdaAtomParams<T>) -> Result<Self> {
        p.check()?;
        Ok(SingleKernel::Lambda(p))
    }

    pub fn generic(model: &GenericCavityModel<T>, opts: &EigenOptions<T>) -> Result<Self> {
        Ok(SingleKernel::Generic { gamma: model.gamma, spectra: model_spectra(model, opts)? })
    }

    pub fn n_ground(&self) -> usize {
        match self {
            SingleKernel::Lambda(_) => 2,
            SingleKernel::Generic { spectra, .. } => spectra.n_ground(),
        }
    }

    pub fn ground_energy(&self, mu: usize) -> T {
        match self {
            SingleKernel::Lambda(p) => p.ground_energy(mu),
            SingleKernel::Generic { spectra, .. } => spectra.ground_energy(mu),
        }
    }

    pub fn gamma(&self) -> T {
        match self {
            SingleKernel::Lambda(p) => p.gamma(),
            SingleKernel::Generic { gamma, .. } => *gamma,
        }
    }

    pub fn t(&self, k: T, mu: usize, nu: usize) -> C<T> {
        match self {
            SingleKernel::Lambda(p) => t_lambda(k, mu, nu, p),
            SingleKernel::Generic { gamma, spectra } => t_generic(k, mu, nu, *gamma, spectra),
        }
    }

    /// Out momentum k + E₀^ν − E₀^μ.
    pub fn out_momentum(&self, k: T, mu: usize, nu: usize) -> T {
        k + (self.ground_energy(nu) - self.ground_energy(mu))
    }

    /// |1 − Σ_μ |t_{μν}(k)|²|.
    pub fn unitarity_defect(&self, k: T, nu: usize) -> T {
        let total = (0..self.n_ground()).fold(T::zero(), |acc, mu| acc + self.t(k, mu, nu).norm_sqr());
        (T::one() - total).abs()
    }

    /// Partial-fraction form of t_{μν} in k.
    pub fn pole_expansion(&self, mu: usize, nu: usize) -> PoleExpansion<T> {
        let constant = if mu == nu { C::<T>::one() } else { C::<T>::zero() };
        match self {
            SingleKernel::Lambda(p) => {
                let c = cplx(T::zero(), -(p.rate(mu) * p.rate(nu)).sqrt());
                PoleExpansion { constant, poles: vec![(cplx(p.detuning(nu), -p.big_gamma()), c)] }
            }
            SingleKernel::Generic { gamma, spectra } => {
                let poles = (0..spectra.sectors[1].dim())
                    .map(|rho| {
                        let z = spectra.sectors[1].eigenvalues[rho] - re(spectra.ground_energy(nu));
                        let c = cplx(T::zero(), -*gamma)
                            * spectra.a1_ground_right[(mu, rho)]
                            * spectra.a1dag_left_ground[(rho, nu)];
                        (z, c)
                    })
                    .collect();
                PoleExpansion { constant, poles }
            }
        }
    }

    /// Evaluate t_{μν} over a caller-supplied grid, preserving order.
    pub fn t_on_grid(&self, ks: &[T], mu: usize, nu: usize) -> Vec<C<T>> {
        ks.par_iter().map(|&k| self.t(k, mu, nu)).collect()
    }
}

/// Fit t(k) = c0 + R/(k − z) from samples by linear least squares on
/// 1/(t − c0) = (k − z)/R. Returns (z, R).
pub fn fit_simple_pole<T: Real>(ks: &[T], ts: &[C<T>], c0: C<T>) -> Result<(C<T>, C<T>)> {
    if ks.len() < 2 || ks.len() != ts.len() {
        return Err(Error::Usage("pole fit needs at least two samples".into()));
    }
    let n = T::from_usize(ks.len()).unwrap();
    let ys: Vec<C<T>> = ts.iter().map(|&t| C::<T>::one() / (t - c0)).collect();
    let kbar = ks.iter().fold(T::zero(), |a, &k| a + k) / n;
    let ybar = ys.iter().fold(C::<T>::zero(), |a, &y| a + y) / re(n);
    let mut sxx = T::zero();
    let mut sxy = C::<T>::zero();
    for (&k, &y) in ks.iter().zip(&ys) {
        sxx += (k - kbar) * (k - kbar);
        sxy += (y - ybar) * re(k - kbar);
    }
    if sxx == T::zero() {
        return Err(Error::Usage("pole fit needs distinct momenta".into()));
    }
    let slope = sxy / re(sxx);
    let intercept = ybar - slope * re(kbar);
    let r = C::<T>::one() / slope;
    Ok((-intercept * r, r))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lam(g1: f64, g2: f64, d1: f64, d2: f64) -> LambdaAtomParams<f64> {
        LambdaAtomParams::new(g1, g2, d1, d2, 0.0).unwrap()
    }

    #[test]
    fn resonant_conversion_equal_couplings() {
        let p = lam(1.0, 1.0, 3.0, -2.0);
        assert!(t_lambda(3.0, 0, 0, &p).norm() < 1e-15);
        assert!((t_lambda(3.0, 1, 0, &p) - cplx(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn one_linewidth_detuned() {
        let p = lam(1.0, 1.0, 3.0, -2.0);
        let t11 = t_lambda(4.0, 0, 0, &p);
        let t21 = t_lambda(4.0, 1, 0, &p);
        assert!((t11 - cplx(0.5, -0.5)).norm() < 1e-15);
        assert!((t21 - cplx(-0.5, -0.5)).norm() < 1e-15);
        assert!((t11.norm_sqr() + t21.norm_sqr() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn decoupled_ground_state() {
        let p = lam(1.0, 0.0, 1.0, 0.0);
        for k in [-3.0, 0.0, 1.0, 2.5] {
            assert_eq!(t_lambda(k, 1, 0, &p), cplx(0.0, 0.0));
            let two_level = cplx(k - 1.0, -0.5) / cplx(k - 1.0, 0.5);
            assert!((t_lambda(k, 0, 0, &p) - two_level).norm() < 1e-15);
        }
    }

    #[test]
    fn generic_matches_closed_form() {
        let p = lam(0.3, 1.1, 2.0, -1.5);
        let g = SingleKernel::generic(&p.to_generic().unwrap(), &EigenOptions::default()).unwrap();
        for i in 0..1000 {
            let k = -25.0 + 0.05 * i as f64;
            for mu in 0..2 {
                for nu in 0..2 {
                    assert!((g.t(k, mu, nu) - t_lambda(k, mu, nu, &p)).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn empty_sector_one_is_identity() {
        use crate::linalg::CMatrix;
        use crate::model::Sector;
        let m = GenericCavityModel::new(
            1.0,
            vec![
                Sector::new(vec!["a".into(), "b".into()], CMatrix::from_diag(&[re(0.0), re(1.0)])),
                Sector::empty(),
                Sector::empty(),
            ],
            vec![CMatrix::zeros(2, 0), CMatrix::zeros(0, 0)],
        )
        .unwrap();
        let g = SingleKernel::generic(&m, &EigenOptions::default()).unwrap();
        assert_eq!(g.t(0.3, 0, 0), cplx(1.0, 0.0));
        assert_eq!(g.t(0.3, 1, 0), cplx(0.0, 0.0));
    }

    #[test]
    fn weak_coupling_limit() {
        let m = crate::model::optomech_model(1.0, 0.4, 0.1, 1e-9, 2).unwrap();
        let g = SingleKernel::generic(&m, &EigenOptions::default()).unwrap();
        for mu in 0..3 {
            let t = g.t(3.3, mu, 0);
            let want = if mu == 0 { 1.0 } else { 0.0 };
            assert!((t - cplx(want, 0.0)).norm() < 1e-6);
        }
    }

    #[test]
    fn pole_fit_recovers_resonance() {
        let p = lam(0.6, 1.0, 2.0, -1.0);
        let k = SingleKernel::lambda(p).unwrap();
        let ks: Vec<f64> = (0..41).map(|i| -5.0 + 0.25 * i as f64).collect();
        let ts = k.t_on_grid(&ks, 1, 0);
        let (z, _) = fit_simple_pole(&ks, &ts, cplx(0.0, 0.0)).unwrap();
        assert!((z - cplx(2.0, -0.8)).norm() < 1e-8, "{z}");
    }

    #[test]
    fn expansion_matches_direct() {
        let m = crate::model::optomech_model(1.0, 0.4, 0.2, 0.3, 3).unwrap();
        let g = SingleKernel::generic(&m, &EigenOptions::default()).unwrap();
        let e = g.pole_expansion(1, 0);
        for k in [-1.0, 0.7, 1.4] {
            assert!((e.eval(re(k)) - g.t(k, 1, 0)).norm() < 1e-13);
        }
    }

    #[test]
    fn f32_backend() {
        let p = LambdaAtomParams::<f32>::new(1.0, 1.0, 3.0, -2.0, 0.0).unwrap();
        let t = t_lambda(4.0f32, 0, 0, &p);
        assert!((t - cplx(0.5f32, -0.5)).norm() < 1e-6);
    }
}
