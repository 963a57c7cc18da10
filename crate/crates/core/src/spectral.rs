//! Per-sector effective Hamiltonians and their biorthogonal eigensystems.

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, schur, schur_eigenvectors, vec_norm, CMatrix};
use crate::model::{GenericCavityModel, GroundLabel};
use crate::real::{Real, C};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct EigenOptions<T: Real> {
    /// Upper bound on ‖R‖_F ‖L‖_F for the eigenvector matrices.
    pub cond_bound: T,
    /// Eigenvalues closer than this (relative to max(‖A‖, 1)) count as clustered.
    pub cluster_tol: T,
    /// Biorthonormality tolerance used to validate the left/right pairing.
    pub pairing_tol: T,
}

impl<T: Real> Default for EigenOptions<T> {
    fn default() -> Self {
        Self { cond_bound: T::lit(1e8), cluster_tol: T::tol(1e-9), pairing_tol: T::tol(1e-8) }
    }
}

/// Eigenvalues with right vectors (columns of `right`) and left vectors (rows
/// of `left`) normalized so that `left * right = I`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct BiorthEigensystem<T: Real> {
    pub sector: usize,
    pub eigenvalues: Vec<C<T>>,
    pub right: CMatrix<T>,
    pub left: CMatrix<T>,
}

/// Residual summary for a decomposition against its source matrix.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EigenResiduals {
    pub right: f64,
    pub left: f64,
    pub biorthonormality: f64,
    pub completeness: f64,
    pub reconstruction: f64,
    pub trace: f64,
}

impl<T: Real> BiorthEigensystem<T> {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn right_vector(&self, k: usize) -> Vec<C<T>> {
        self.right.column(k)
    }

    pub fn left_vector(&self, k: usize) -> Vec<C<T>> {
        self.left.row(k).to_vec()
    }

    /// Max-norm residuals; eigen residuals are relative to max(‖A‖_F, 1).
    pub fn residuals(&self, a: &CMatrix<T>) -> EigenResiduals {
        let n = self.dim();
        let scale = a.norm_fro().max(T::one());
        let mut r = EigenResiduals::default();
        for k in 0..n {
            let lam = self.eigenvalues[k];
            let rv = self.right_vector(k);
            let av = a.matvec(&rv);
            let res = av.iter().zip(&rv).map(|(x, y)| (*x - lam * y).norm_sqr()).fold(T::zero(), |s, v| s + v).sqrt();
            r.right = r.right.max((res / scale).to_f64_lossy());
            let lv = self.left_vector(k);
            let la = a.vecmat(&lv);
            let res = la.iter().zip(&lv).map(|(x, y)| (*x - lam * y).norm_sqr()).fold(T::zero(), |s, v| s + v).sqrt();
            r.left = r.left.max((res / scale / vec_norm(&lv).max(T::one())).to_f64_lossy());
        }
        let lr = self.left.matmul(&self.right);
        r.biorthonormality = lr.sub(&CMatrix::identity(n)).max_abs().to_f64_lossy();
        let rl = self.right.matmul(&self.left);
        r.completeness = rl.sub(&CMatrix::identity(n)).max_abs().to_f64_lossy();
        let rebuilt = self.right.matmul(&CMatrix::from_diag(&self.eigenvalues)).matmul(&self.left);
        r.reconstruction = (rebuilt.sub(a).max_abs() / scale).to_f64_lossy();
        let tr = self.eigenvalues.iter().fold(C::<T>::zero(), |s, &z| s + z);
        r.trace = ((tr - a.trace()).norm() / scale).to_f64_lossy();
        r
    }
}

/// H_c^N − i(γ/2) a_N† a_N.
pub fn effective_hamiltonian<T: Real>(model: &GenericCavityModel<T>, n: usize) -> CMatrix<T> {
    let h = &model.sectors[n].h;
    if n == 0 {
        return h.clone();
    }
    let half_gamma = C::new(T::zero(), -model.gamma * T::lit(0.5));
    h.add(&model.number_block(n).scale(half_gamma))
}

fn empty<T: Real>(sector: usize) -> BiorthEigensystem<T> {
    BiorthEigensystem { sector, eigenvalues: Vec::new(), right: CMatrix::zeros(0, 0), left: CMatrix::zeros(0, 0) }
}

/// Hermitian path: orthonormal eigenvectors, ascending real parts, ties kept
/// in Schur order. Degenerate eigenvalues are allowed.
pub fn hermitian_eigensystem<T: Real>(a: &CMatrix<T>, sector: usize) -> Result<BiorthEigensystem<T>> {
    let n = a.rows();
    if n == 0 {
        return Ok(empty(sector));
    }
    let s = schur(a)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| s.t[(i, i)].re.partial_cmp(&s.t[(j, j)].re).unwrap().then(i.cmp(&j)));
    let eigenvalues = order.iter().map(|&i| s.t[(i, i)]).collect();
    let right = CMatrix::from_fn(n, n, |r, c| s.z[(r, order[c])]);
    let left = right.adjoint();
    Ok(BiorthEigensystem { sector, eigenvalues, right, left })
}

/// General (non-Hermitian) biorthogonal decomposition.
pub fn biorth_eigen<T: Real>(a: &CMatrix<T>, sector: usize, opts: &EigenOptions<T>) -> Result<BiorthEigensystem<T>> {
    if !a.is_square() {
        return Err(Error::Dimension(format!("sector matrix is {}x{}", a.rows(), a.cols())));
    }
    let n = a.rows();
    if n == 0 {
        return Ok(empty(sector));
    }
    let scale = a.norm_fro().max(T::one());

    let rs = schur(a)?;
    let mut rvals: Vec<C<T>> = (0..n).map(|k| rs.t[(k, k)]).collect();
    let mut rvecs = schur_eigenvectors(&rs);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        let (a, b) = (rvals[i], rvals[j]);
        a.re.partial_cmp(&b.re).unwrap().then(a.im.partial_cmp(&b.im).unwrap())
    });
    rvals = order.iter().map(|&i| rvals[i]).collect();
    rvecs = order.iter().map(|&i| rvecs[i].clone()).collect();

    for i in 0..n {
        for j in i + 1..n {
            if (rvals[i] - rvals[j]).norm() <= opts.cluster_tol * scale {
                return Err(Error::NearDefective(format!(
                    "sector {sector}: eigenvalues {} and {} are clustered (|Δ| = {:e})",
                    rvals[i],
                    rvals[j],
                    (rvals[i] - rvals[j]).norm().to_f64_lossy()
                )));
            }
        }
    }

    // Left vectors from an independent solve of A^H, paired greedily.
    let ls = schur(&a.adjoint())?;
    let lvals: Vec<C<T>> = (0..n).map(|k| ls.t[(k, k)].conj()).collect();
    let lvecs = schur_eigenvectors(&ls);
    let mut used = vec![false; n];
    let mut left = CMatrix::zeros(n, n);
    let mut right = CMatrix::zeros(n, n);
    for (i, lam) in rvals.iter().enumerate() {
        let j = (0..n)
            .filter(|&j| !used[j])
            .min_by(|&x, &y| (lvals[x] - lam).norm().partial_cmp(&(lvals[y] - lam).norm()).unwrap())
            .expect("unpaired left eigenvector");
        used[j] = true;
        let l: Vec<C<T>> = lvecs[j].iter().map(|z| z.conj()).collect();
        let ov = dot(&l, &rvecs[i]);
        if ov.norm() < T::min_positive_value().sqrt() {
            return Err(Error::NearDefective(format!(
                "sector {sector}: eigenvalue {lam} has vanishing left/right overlap"
            )));
        }
        for r in 0..n {
            right[(r, i)] = rvecs[i][r];
            left[(i, r)] = l[r] / ov;
        }
    }

    let lr = left.matmul(&right);
    let defect = lr.sub(&CMatrix::identity(n)).max_abs();
    if defect > opts.pairing_tol {
        return Err(Error::NearDefective(format!(
            "sector {sector}: left/right pairing failed, biorthonormality defect {:e}",
            defect.to_f64_lossy()
        )));
    }
    let cond = right.norm_fro() * left.norm_fro();
    if !(cond <= opts.cond_bound) {
        return Err(Error::NearDefective(format!(
            "sector {sector}: eigenvector condition number {:e} exceeds {:e}; eigenvalues {:?}",
            cond.to_f64_lossy(),
            opts.cond_bound.to_f64_lossy(),
            rvals
        )));
    }
    Ok(BiorthEigensystem { sector, eigenvalues: rvals, right, left })
}

/// Spectral data for all three sectors plus the ground labels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Spectra<T: Real> {
    pub sectors: Vec<BiorthEigensystem<T>>,
    pub grounds: Vec<GroundLabel<T>>,
    /// ⟨g_μ|a_1|ρ⟩ in the eigenbases: rows μ, columns ρ.
    pub a1_ground_right: CMatrix<T>,
    /// ⟨ρ̄|a_1†|g_ν⟩: rows ρ, columns ν.
    pub a1dag_left_ground: CMatrix<T>,
    /// ⟨ρ̄|a_2|λ⟩ (sector-1 left, sector-2 right).
    pub a2_left_right: CMatrix<T>,
    /// ⟨λ̄|a_2†|σ⟩ (sector-2 left, sector-1 right).
    pub a2dag_left_right: CMatrix<T>,
}

impl<T: Real> Spectra<T> {
    pub fn ground_energy(&self, mu: usize) -> T {
        self.grounds[mu].energy
    }

    pub fn n_ground(&self) -> usize {
        self.grounds.len()
    }

    pub fn sector(&self, n: usize) -> &BiorthEigensystem<T> {
        &self.sectors[n]
    }
}

pub fn model_spectra<T: Real>(model: &GenericCavityModel<T>, opts: &EigenOptions<T>) -> Result<Spectra<T>> {
    let diag = model.validate();
    if !diag.all_passed() {
        let f = &diag.failures()[0];
        return Err(Error::Validation(format!("{}: {}", f.name, f.detail)));
    }
    let s0 = hermitian_eigensystem(&model.sectors[0].h, 0)?;
    let s1 = biorth_eigen(&effective_hamiltonian(model, 1), 1, opts)?;
    let s2 = biorth_eigen(&effective_hamiltonian(model, 2), 2, opts)?;
    let grounds = s0.eigenvalues.iter().enumerate().map(|(i, e)| GroundLabel { index: i, energy: e.re }).collect();
    let a1 = model.lowering(1);
    let a2 = model.lowering(2);
    let g_adj = &s0.left;
    let a1_ground_right = g_adj.matmul(a1).matmul(&s1.right);
    let a1dag_left_ground = s1.left.matmul(&a1.adjoint()).matmul(&s0.right);
    let a2_left_right = s1.left.matmul(a2).matmul(&s2.right);
    let a2dag_left_right = s2.left.matmul(&a2.adjoint()).matmul(&s1.right);
    Ok(Spectra { sectors: vec![s0, s1, s2], grounds, a1_ground_right, a1dag_left_ground, a2_left_right, a2dag_left_right })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{optomech_model, LambdaAtomParams};
    use crate::real::cplx;

    fn c(re: f64, im: f64) -> C<f64> {
        cplx(re, im)
    }

    #[test]
    fn lambda_sector_one() {
        let p = LambdaAtomParams::<f64>::new(0.7, 0.3, 2.0, -1.0, 0.4).unwrap();
        let h = effective_hamiltonian(&p.to_generic().unwrap(), 1);
        assert_eq!(h.rows(), 1);
        assert!((h[(0, 0)] - c(0.4, -0.5)).norm() < 1e-15);
    }

    #[test]
    fn ground_sector_unchanged() {
        let m = optomech_model(1.0, 0.3, 0.2, 0.5, 2).unwrap();
        assert_eq!(effective_hamiltonian(&m, 0), m.sectors[0].h);
    }

    #[test]
    fn optomech_decoupled_effective() {
        let m = optomech_model(1.0, 0.3, 0.0, 0.5, 2).unwrap();
        let h = effective_hamiltonian(&m, 1);
        for k in 0..3 {
            assert!((h[(k, k)] - c(1.0 + 0.3 * k as f64, -0.25)).norm() < 1e-15);
        }
    }

    #[test]
    fn one_by_one() {
        let a = CMatrix::from_diag(&[c(1.5, -0.2)]);
        let e = biorth_eigen(&a, 1, &EigenOptions::default()).unwrap();
        assert_eq!(e.eigenvalues, vec![c(1.5, -0.2)]);
        assert!((e.right[(0, 0)] * e.left[(0, 0)] - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn diagonal_input() {
        let a = CMatrix::from_diag(&[c(1.0, 0.0), c(2.0, -0.3)]);
        let e = biorth_eigen(&a, 1, &EigenOptions::default()).unwrap();
        assert_eq!(e.eigenvalues, vec![c(1.0, 0.0), c(2.0, -0.3)]);
        assert!((e.right[(0, 0)].norm() - 1.0).abs() < 1e-15);
        assert!(e.right[(1, 0)].norm() < 1e-15);
    }

    #[test]
    fn upper_triangular_biorthogonality() {
        let mut a = CMatrix::from_diag(&[c(1.0, 0.0), c(2.0, -0.3)]);
        a[(0, 1)] = c(0.5, -0.1);
        let e = biorth_eigen(&a, 1, &EigenOptions::default()).unwrap();
        let r = e.residuals(&a);
        assert!(r.right < 1e-14 && r.left < 1e-14, "{r:?}");
        assert!(r.biorthonormality < 1e-14 && r.completeness < 1e-14, "{r:?}");
        // Left and right vectors differ for a non-normal matrix.
        let l1: Vec<_> = e.left_vector(1).iter().map(|z| z.conj()).collect();
        let r1 = e.right_vector(1);
        let cosang = dot(&l1.iter().map(|z| z.conj()).collect::<Vec<_>>(), &r1).norm() / (vec_norm(&l1) * vec_norm(&r1));
        assert!(cosang < 0.999);
    }

    #[test]
    fn defective_rejected() {
        let mut a = CMatrix::from_diag(&[c(1.0, -0.5), c(1.0, -0.5)]);
        a[(0, 1)] = c(1.0, 0.0);
        let err = biorth_eigen(&a, 1, &EigenOptions::default()).unwrap_err();
        assert!(matches!(err, Error::NearDefective(_)), "{err}");
        assert!(err.to_string().contains("clustered"));
    }

    #[test]
    fn hermitian_input_left_is_conjugate_right() {
        let a = CMatrix::from_fn(3, 3, |i, j| {
            let base = c((i + j) as f64 * 0.3, (i as f64 - j as f64) * 0.2);
            if i == j {
                c(i as f64, 0.0)
            } else {
                base
            }
        });
        let e = biorth_eigen(&a, 1, &EigenOptions::default()).unwrap();
        for k in 0..3 {
            assert!(e.eigenvalues[k].im.abs() < 1e-12);
            let l = e.left_vector(k);
            let r = e.right_vector(k);
            // l = phase * r^H for an orthonormal basis
            let phase = l[0] / r[0].conj();
            for i in 0..3 {
                assert!((l[i] - phase * r[i].conj()).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn spectra_matrix_elements_lambda() {
        let p = LambdaAtomParams::<f64>::new(1.0, 3.0, 1.0, -1.0, 0.0).unwrap();
        let s = model_spectra(&p.to_generic().unwrap(), &EigenOptions::default()).unwrap();
        assert_eq!(s.grounds[0].energy, -1.0);
        assert_eq!(s.grounds[1].energy, 1.0);
        let prod0 = s.a1_ground_right[(0, 0)] * s.a1dag_left_ground[(0, 0)];
        assert!((prod0 - c(0.25, 0.0)).norm() < 1e-15);
        assert_eq!(s.sectors[2].dim(), 0);
    }
}
