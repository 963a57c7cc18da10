//! Physical systems: the three-level Λ atom and generic excitation-graded cavities.

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::real::{cplx, re, Real, C};

/// Λ atom with two ground states coupled to one excited state.
///
/// Detunings are Δ_μ = Ω − Ẽ_μ, so the ground energies are Ω − Δ_μ. Index 0
/// is the lower ground state g₁ and requires `delta1 > delta2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", deny_unknown_fields)]
pub struct LambdaAtomParams<T: Real> {
    pub gamma1: T,
    pub gamma2: T,
    pub delta1: T,
    pub delta2: T,
    #[serde(default)]
    pub omega: T,
}

impl<T: Real> LambdaAtomParams<T> {
    pub fn new(gamma1: T, gamma2: T, delta1: T, delta2: T, omega: T) -> Result<Self> {
        let p = Self { gamma1, gamma2, delta1, delta2, omega };
        p.check()?;
        Ok(p)
    }

    pub fn check(&self) -> Result<()> {
        let all = [self.gamma1, self.gamma2, self.delta1, self.delta2, self.omega];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(Error::Validation("Λ atom parameters must be finite".into()));
        }
        if self.gamma1 < T::zero() || self.gamma2 < T::zero() {
            return Err(Error::Validation("decay rates must be non-negative".into()));
        }
        if self.gamma1 + self.gamma2 <= T::zero() {
            return Err(Error::Validation("gamma1 + gamma2 must be positive".into()));
        }
        if self.delta1 <= self.delta2 {
            return Err(Error::Validation(format!(
                "ground-state ordering requires delta1 > delta2 (got {} <= {})",
                self.delta1, self.delta2
            )));
        }
        Ok(())
    }

    /// Total decay rate γ₁ + γ₂.
    pub fn gamma(&self) -> T {
        self.gamma1 + self.gamma2
    }

    /// Half-width Γ = (γ₁ + γ₂)/2.
    pub fn big_gamma(&self) -> T {
        self.gamma() * T::lit(0.5)
    }

    pub fn rate(&self, mu: usize) -> T {
        match mu {
            0 => self.gamma1,
            1 => self.gamma2,
            _ => panic!("Λ atom has two ground states, got index {mu}"),
        }
    }

    pub fn detuning(&self, mu: usize) -> T {
        match mu {
            0 => self.delta1,
            1 => self.delta2,
            _ => panic!("Λ atom has two ground states, got index {mu}"),
        }
    }

    pub fn ground_energy(&self, mu: usize) -> T {
        self.omega - self.detuning(mu)
    }

    /// Complex single-excitation pole Ω − iΓ.
    pub fn excited_pole(&self) -> C<T> {
        cplx(self.omega, -self.big_gamma())
    }

    /// Embed into the generic graded form with γ = γ₁+γ₂ and a = A/√γ.
    pub fn to_generic(&self) -> Result<GenericCavityModel<T>> {
        self.check()?;
        let g = self.gamma();
        let e0 = CMatrix::from_diag(&[re(self.ground_energy(0)), re(self.ground_energy(1))]);
        let e1 = CMatrix::from_diag(&[re(self.omega)]);
        let a1 = CMatrix::from_fn(2, 1, |i, _| re((self.rate(i) / g).sqrt()));
        GenericCavityModel::new(
            g,
            vec![
                Sector::new(vec!["g1".into(), "g2".into()], e0),
                Sector::new(vec!["e".into()], e1),
                Sector::empty(),
            ],
            vec![a1, CMatrix::zeros(1, 0)],
        )
    }
}

/// One excitation sector: basis labels and the cavity Hamiltonian block.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Sector<T: Real> {
    pub labels: Vec<String>,
    pub h: CMatrix<T>,
}

impl<T: Real> Sector<T> {
    pub fn new(labels: Vec<String>, h: CMatrix<T>) -> Self {
        Self { labels, h }
    }

    pub fn empty() -> Self {
        Self { labels: Vec::new(), h: CMatrix::zeros(0, 0) }
    }

    pub fn dim(&self) -> usize {
        self.h.rows()
    }
}

/// Cavity with sectors N = 0, 1, 2 and lowering blocks a_1: 1→0, a_2: 2→1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct GenericCavityModel<T: Real> {
    pub gamma: T,
    pub sectors: Vec<Sector<T>>,
    /// `lowering[N-1]` has shape dim(N-1) × dim(N).
    pub lowering: Vec<CMatrix<T>>,
}

impl<T: Real> GenericCavityModel<T> {
    /// Construct and validate; fails with the first failing diagnostic.
    pub fn new(gamma: T, sectors: Vec<Sector<T>>, lowering: Vec<CMatrix<T>>) -> Result<Self> {
        let m = Self { gamma, sectors, lowering };
        let diag = m.validate();
        if let Some(bad) = diag.checks.iter().find(|c| !c.passed) {
            let kind = if bad.name.contains("dimension") || bad.name.contains("sector count") {
                Error::Dimension
            } else {
                Error::Validation
            };
            return Err(kind(format!("{}: {}", bad.name, bad.detail)));
        }
        Ok(m)
    }

    pub fn dim(&self, n: usize) -> usize {
        self.sectors[n].dim()
    }

    pub fn lowering(&self, n: usize) -> &CMatrix<T> {
        assert!(n == 1 || n == 2, "lowering blocks exist for N = 1, 2");
        &self.lowering[n - 1]
    }

    /// a_N† a_N restricted to sector N.
    pub fn number_block(&self, n: usize) -> CMatrix<T> {
        if n == 0 {
            return CMatrix::zeros(self.dim(0), self.dim(0));
        }
        let a = self.lowering(n);
        a.adjoint().matmul(a)
    }

    /// Structured invariant checks; never fails.
    pub fn validate(&self) -> Diagnostics {
        let mut d = Diagnostics::default();
        d.push("gamma", self.gamma.is_finite() && self.gamma >= T::zero(), format!("gamma = {}", self.gamma));
        let count_ok = self.sectors.len() == 3 && self.lowering.len() == 2;
        d.push(
            "sector count",
            count_ok,
            format!("{} sectors and {} lowering blocks (need 3 and 2)", self.sectors.len(), self.lowering.len()),
        );
        if !count_ok {
            return d;
        }
        for (n, s) in self.sectors.iter().enumerate() {
            let square = s.h.is_square();
            d.push(
                &format!("sector {n} dimension"),
                square && s.labels.len() == s.h.rows(),
                format!("block {}x{}, {} labels", s.h.rows(), s.h.cols(), s.labels.len()),
            );
            let finite = s.h.as_slice().iter().all(|z| z.re.is_finite() && z.im.is_finite());
            d.push(&format!("sector {n} finite"), finite, String::new());
        }
        for n in 1..=2 {
            let a = &self.lowering[n - 1];
            let want = (self.sectors[n - 1].dim(), self.sectors[n].dim());
            d.push(
                &format!("lowering {n} dimension"),
                (a.rows(), a.cols()) == want,
                format!("got {}x{}, need {}x{}", a.rows(), a.cols(), want.0, want.1),
            );
        }
        let h0 = &self.sectors[0].h;
        if h0.is_square() {
            let tol = T::tol(1e-12) * h0.max_abs().max(T::one());
            let defect = h0.hermiticity_defect();
            d.push("ground manifold hermitian", defect <= tol, format!("|H0 - H0^H| = {defect}"));
        }
        d
    }
}

/// Ground state index and energy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct GroundLabel<T: Real> {
    pub index: usize,
    pub energy: T,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub checks: Vec<Check>,
}

impl Diagnostics {
    fn push(&mut self, name: &str, passed: bool, detail: String) {
        self.checks.push(Check { name: name.to_string(), passed, detail });
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }
}

/// Single-mode optomechanical cavity H_c = ω_c a†a + ω_m b†b + g₀ a†a (b + b†)
/// with phonons truncated at `n_phonon_max`.
pub fn optomech_model<T: Real>(
    omega_c: T,
    omega_m: T,
    g0: T,
    gamma: T,
    n_phonon_max: usize,
) -> Result<GenericCavityModel<T>> {
    if [omega_c, omega_m, g0, gamma].iter().any(|x| !x.is_finite() || *x < T::zero()) {
        return Err(Error::Validation("optomechanical rates must be finite and non-negative".into()));
    }
    let m = n_phonon_max + 1;
    let block = |n: usize| {
        let nf = T::from_usize(n).unwrap();
        CMatrix::from_fn(m, m, |i, j| {
            if i == j {
                re(nf * omega_c + T::from_usize(i).unwrap() * omega_m)
            } else if i + 1 == j || j + 1 == i {
                re(nf * g0 * T::from_usize(i.max(j)).unwrap().sqrt())
            } else {
                C::zero()
            }
        })
    };
    let labels = |n: usize| (0..m).map(|k| format!("|{n},{k}>")).collect::<Vec<_>>();
    let lower = |n: usize| CMatrix::identity(m).scale(re(T::from_usize(n).unwrap().sqrt()));
    GenericCavityModel::new(
        gamma,
        (0..3).map(|n| Sector::new(labels(n), block(n))).collect(),
        vec![lower(1), lower(2)],
    )
}

/// Random valid model with sector sizes up to `max_dim` (sector 2 may be
/// empty), Hermitian blocks and lowering entries of order one.
pub fn random_graded_model<R: rand::Rng + ?Sized>(rng: &mut R, max_dim: usize) -> GenericCavityModel<f64> {
    let max_dim = max_dim.max(1);
    let dims = [rng.gen_range(1..=max_dim), rng.gen_range(1..=max_dim), rng.gen_range(0..=max_dim)];
    let entry = |rng: &mut R| cplx(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    let sectors = dims
        .iter()
        .enumerate()
        .map(|(n, &d)| {
            let a = CMatrix::from_fn(d, d, |_, _| entry(rng));
            let h = a.add(&a.adjoint()).scale(re(0.5)).add(&CMatrix::identity(d).scale(re(n as f64)));
            Sector::new((0..d).map(|i| format!("{n}.{i}")).collect(), h)
        })
        .collect();
    let lowering = (1..=2).map(|n| CMatrix::from_fn(dims[n - 1], dims[n], |_, _| entry(rng))).collect();
    let gamma = rng.gen_range(0.1..2.0);
    GenericCavityModel::new(gamma, sectors, lowering).expect("random blocks have consistent shapes")
}

/// JSON-facing model description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ModelSpec {
    LambdaAtom(LambdaAtomParams<f64>),
    Generic(GenericModelJson),
    Optomech(OptomechJson),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SectorJson {
    pub labels: Vec<String>,
    /// Row-major entries as [re, im].
    pub h: Vec<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenericModelJson {
    pub gamma: f64,
    pub sectors: Vec<SectorJson>,
    /// Row-major lowering blocks a_1, a_2 as [re, im] entries.
    pub lowering: Vec<Vec<[f64; 2]>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptomechJson {
    pub omega_c: f64,
    pub omega_m: f64,
    pub g0: f64,
    pub gamma: f64,
    pub n_phonon_max: usize,
}

fn to_entries(v: &[[f64; 2]]) -> Vec<C<f64>> {
    v.iter().map(|p| cplx(p[0], p[1])).collect()
}

fn from_matrix(m: &CMatrix<f64>) -> Vec<[f64; 2]> {
    m.as_slice().iter().map(|z| [z.re, z.im]).collect()
}

impl ModelSpec {
    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Validation(format!("model JSON: {e}")))
    }

    pub fn lambda(&self) -> Option<&LambdaAtomParams<f64>> {
        match self {
            ModelSpec::LambdaAtom(p) => Some(p),
            _ => None,
        }
    }

    pub fn to_generic(&self) -> Result<GenericCavityModel<f64>> {
        match self {
            ModelSpec::LambdaAtom(p) => p.to_generic(),
            ModelSpec::Optomech(o) => optomech_model(o.omega_c, o.omega_m, o.g0, o.gamma, o.n_phonon_max),
            ModelSpec::Generic(g) => {
                if g.sectors.len() != 3 || g.lowering.len() != 2 {
                    return Err(Error::Dimension("generic model needs 3 sectors and 2 lowering blocks".into()));
                }
                let mut sectors = Vec::new();
                for (n, s) in g.sectors.iter().enumerate() {
                    let d = s.labels.len();
                    let h = CMatrix::from_row_major(d, d, to_entries(&s.h))
                        .map_err(|e| Error::Dimension(format!("sector {n}: {e}")))?;
                    sectors.push(Sector::new(s.labels.clone(), h));
                }
                let mut lowering = Vec::new();
                for n in 1..=2 {
                    let (r, c) = (sectors[n - 1].dim(), sectors[n].dim());
                    lowering.push(
                        CMatrix::from_row_major(r, c, to_entries(&g.lowering[n - 1]))
                            .map_err(|e| Error::Dimension(format!("lowering {n}: {e}")))?,
                    );
                }
                GenericCavityModel::new(g.gamma, sectors, lowering)
            }
        }
    }

    /// Serialize any generic model back to the JSON form.
    pub fn from_generic(m: &GenericCavityModel<f64>) -> Self {
        ModelSpec::Generic(GenericModelJson {
            gamma: m.gamma,
            sectors: m.sectors.iter().map(|s| SectorJson { labels: s.labels.clone(), h: from_matrix(&s.h) }).collect(),
            lowering: m.lowering.iter().map(from_matrix).collect(),
        })
    }
}

/// Add a common energy offset to every sector (a gauge change).
pub fn shift_gauge<T: Real>(m: &GenericCavityModel<T>, shift: T) -> GenericCavityModel<T> {
    let mut out = m.clone();
    for s in out.sectors.iter_mut() {
        let n = s.dim();
        s.h = s.h.add(&CMatrix::identity(n).scale(re(shift)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::hermitian_eigen;

    #[test]
    fn lambda_embedding() {
        let p = LambdaAtomParams::<f64>::new(0.5, 0.5, 10.0, 5.0, 0.0).unwrap();
        let g = p.to_generic().unwrap();
        assert_eq!(g.gamma, 1.0);
        let a = g.lowering(1);
        assert!((a[(0, 0)].re - 0.70710678).abs() < 1e-8);
        assert!((a[(1, 0)].re - 0.70710678).abs() < 1e-8);
        assert_eq!(g.sectors[0].h[(0, 0)].re, -10.0);
        assert_eq!(g.sectors[0].h[(1, 1)].re, -5.0);
        assert_eq!(g.dim(2), 0);
    }

    #[test]
    fn lambda_decoupled_level() {
        let p = LambdaAtomParams::<f64>::new(1.0, 0.0, 1.0, 0.0, 0.0).unwrap();
        let a = p.to_generic().unwrap().lowering(1).clone();
        assert_eq!(a[(0, 0)].re, 1.0);
        assert_eq!(a[(1, 0)].re, 0.0);
    }

    #[test]
    fn lambda_rejections() {
        assert!(LambdaAtomParams::<f64>::new(0.0, 0.0, 1.0, 0.0, 0.0).is_err());
        assert!(LambdaAtomParams::<f64>::new(1.0, 1.0, 0.0, 0.0, 0.0).is_err());
        assert!(LambdaAtomParams::<f64>::new(1.0, 1.0, -1.0, 0.0, 0.0).is_err());
        assert!(LambdaAtomParams::<f64>::new(-1.0, 1.0, 1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn optomech_decoupled() {
        let m = optomech_model(1.0, 0.25, 0.0, 0.1, 2).unwrap();
        let h1 = &m.sectors[1].h;
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 + 0.25 * i as f64 } else { 0.0 };
                assert_eq!(h1[(i, j)].re, want);
            }
        }
    }

    #[test]
    fn optomech_single_phonon_level() {
        let m = optomech_model(1.5, 0.25, 0.3, 0.1, 0).unwrap();
        assert_eq!(m.sectors[2].h[(0, 0)].re, 3.0);
        assert_eq!(m.lowering(2)[(0, 0)].re, 2f64.sqrt());
    }

    #[test]
    fn optomech_polaron_ladder_matches_dense() {
        // g0 couples neighbours with N g0 sqrt(m+1); check against an explicit
        // tridiagonal build and its eigenvalues.
        let m = optomech_model(0.0f64, 1.0, 0.3, 0.0, 4).unwrap();
        let h1 = &m.sectors[1].h;
        for k in 0..4 {
            assert!((h1[(k, k + 1)].re - 0.3 * ((k + 1) as f64).sqrt()).abs() < 1e-15);
        }
        let (vals, _) = hermitian_eigen(h1).unwrap();
        // Exact polaron shift for the untruncated problem is -g0^2/ω_m; the
        // lowest levels are close to m - 0.09.
        assert!((vals[0] + 0.09).abs() < 1e-3, "{vals:?}");
        assert!((vals[1] - 0.91).abs() < 1e-2, "{vals:?}");
    }

    #[test]
    fn number_operator_bounds() {
        let m = optomech_model(1.0, 0.5, 0.2, 1.0, 3).unwrap();
        for n in 1..=2 {
            let (vals, _) = hermitian_eigen(&m.number_block(n)).unwrap();
            for v in vals {
                assert!((-1e-12..=n as f64 + 1e-12).contains(&v));
            }
        }
    }

    #[test]
    fn validate_reports_failures() {
        let p = LambdaAtomParams::<f64>::new(1.0, 1.0, 1.0, 0.0, 0.0).unwrap();
        assert!(p.to_generic().unwrap().validate().all_passed());

        let mut bad = p.to_generic().unwrap();
        bad.lowering[0] = CMatrix::zeros(3, 1);
        let d = bad.validate();
        assert!(d.failures().iter().any(|c| c.name == "lowering 1 dimension"));

        let mut bad = p.to_generic().unwrap();
        bad.sectors[0].h[(0, 1)] = cplx(0.0, 1.0);
        let d = bad.validate();
        assert!(d.failures().iter().any(|c| c.name == "ground manifold hermitian"));
    }

    #[test]
    fn json_roundtrip() {
        let s = r#"{"type":"lambda_atom","gamma1":0.5,"gamma2":0.5,"delta1":10,"delta2":5}"#;
        let spec = ModelSpec::from_json(s).unwrap();
        let g = spec.to_generic().unwrap();
        let back = ModelSpec::from_generic(&g);
        let text = serde_json::to_string(&back).unwrap();
        let again = ModelSpec::from_json(&text).unwrap().to_generic().unwrap();
        assert_eq!(g, again);
        assert!(ModelSpec::from_json(r#"{"type":"lambda_atom","gamma1":1,"gamma2":1,"delta1":1,"delta2":0,"x":1}"#).is_err());
    }
}
