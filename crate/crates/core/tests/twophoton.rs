use num_complex::Complex64;
use proptest::prelude::*;
use wqed::amplitudes::SingleKernel;
use wqed::model::{optomech_model, LambdaAtomParams};
use wqed::spectral::EigenOptions;
use wqed::twophoton::*;

fn lambda(g1: f64, g2: f64, d1: f64, d2: f64) -> LambdaAtomParams<f64> {
    LambdaAtomParams::new(g1, g2, d1, d2, 0.0).unwrap()
}

/// Point on the energy shell: k₂ determined by the others.
fn on_shell(e: &[f64], mu: usize, nu: usize, p1: f64, p2: f64, k1: f64) -> [f64; 4] {
    [p1, p2, k1, p1 + p2 + e[mu] - e[nu] - k1]
}

#[test]
fn s0_has_eight_terms_for_lambda() {
    let single = SingleKernel::lambda(lambda(1.0, 0.6, 3.0, -1.0)).unwrap();
    let k = s0_kernel(&single, 0, &KernelOptions::default());
    assert_eq!(k.count(0), 8);
    assert_eq!(k.count(1), 8);
    assert!(k.terms.iter().flatten().all(|t| t.kind == TermKind::PoleOneDelta));
}

#[test]
fn t_kernel_has_no_real_poles_or_double_deltas() {
    let p = lambda(1.0, 0.6, 3.0, -1.0);
    let single = SingleKernel::generic(&p.to_generic().unwrap(), &EigenOptions::default()).unwrap();
    for k in [t_kernel_lambda(&p, 0), t_kernel_generic(&single, 1).unwrap()] {
        for t in k.terms.iter().flatten() {
            assert_eq!(t.kind, TermKind::RegularOneDelta);
            assert!(t.pole.is_none());
            assert_eq!(t.constraints.len(), 1);
            for f in &t.factors {
                for (z, _) in &f.pf.poles {
                    assert!(z.im < 0.0, "pole {z} on or above the real axis");
                }
            }
        }
    }
}

#[test]
fn every_term_conserves_energy() {
    let p = lambda(1.0, 0.6, 3.0, -1.0);
    let single = SingleKernel::lambda(p).unwrap();
    let kernels = [
        s0_kernel(&single, 0, &KernelOptions::default()),
        t_kernel_lambda(&p, 1),
        raw_kernel_lambda(&p, 0),
        raw_kernel_lambda(&p, 1),
    ];
    for k in &kernels {
        for mu in 0..2 {
            let total = total_constraint(&k.ground_energies, mu, k.nu);
            for t in &k.terms[mu] {
                // total must lie in the span of the term's constraints
                let ok = match t.constraints.as_slice() {
                    [c] => c == &total,
                    [a, b] => {
                        let s = a.plus(*b);
                        s.coeffs == total.coeffs && (s.offset - total.offset).abs() < 1e-12
                    }
                    _ => false,
                };
                assert!(ok, "{:?}", t.constraints);
            }
        }
    }
}

#[test]
fn t_lambda_equals_t_generic_on_shell() {
    let p = lambda(0.8, 1.7, 2.5, -1.5);
    let single = SingleKernel::generic(&p.to_generic().unwrap(), &EigenOptions::default()).unwrap();
    let e = [p.ground_energy(0), p.ground_energy(1)];
    for nu in 0..2 {
        let a = t_kernel_lambda(&p, nu);
        let b = t_kernel_generic(&single, nu).unwrap();
        for mu in 0..2 {
            for i in 0..50 {
                let x = on_shell(&e, mu, nu, -3.0 + 0.13 * i as f64, 1.0 - 0.07 * i as f64, 0.4 + 0.05 * i as f64);
                let va = a.one_delta_density(mu, &x);
                let vb = b.one_delta_density(mu, &x);
                assert!((va - vb).norm() <= 1e-10 * va.norm().max(1.0), "{va} vs {vb}");
            }
        }
    }
}

#[test]
fn two_level_limit_matches_known_t_matrix() {
    let p = lambda(1.3, 0.0, 0.7, -2.0);
    let k = t_kernel_lambda(&p, 0);
    let g = 1.3;
    let d = 0.7;
    let i = Complex64::i();
    for n in 0..20 {
        let x = [0.3 * n as f64 - 2.0, 1.1 - 0.2 * n as f64, 0.5 + 0.1 * n as f64, 0.0];
        let x = [x[0], x[1], x[2], x[0] + x[1] - x[2]];
        let den = |v: f64| Complex64::new(v - d, g / 2.0);
        let e = x[0] + x[1];
        let want = i * g * g / std::f64::consts::PI * Complex64::new(e - 2.0 * d, g)
            / (den(x[0]) * den(x[1]) * den(x[2]) * den(x[3]));
        let got = k.one_delta_density(0, &x);
        assert!((got - want).norm() < 1e-12 * want.norm().max(1.0), "{got} vs {want}");
        assert!(k.one_delta_density(1, &x).norm() == 0.0);
    }
}

#[test]
fn linear_cavity_has_no_interaction() {
    let m = optomech_model(1.2, 0.0, 0.0, 0.9, 0).unwrap();
    let single = SingleKernel::generic(&m, &EigenOptions::default()).unwrap();
    if let SingleKernel::Generic { spectra, .. } = &single {
        assert!((spectra.sectors[1].eigenvalues[0] - Complex64::new(1.2, -0.45)).norm() < 1e-14);
        assert!((spectra.sectors[2].eigenvalues[0] - Complex64::new(2.4, -0.9)).norm() < 1e-14);
    }
    let k = t_kernel_generic(&single, 0).unwrap();
    for n in 0..30 {
        let x = on_shell(&[0.0], 0, 0, 0.1 * n as f64, 2.0 - 0.05 * n as f64, 1.0 + 0.02 * n as f64);
        assert!(k.one_delta_density(0, &x).norm() < 1e-13);
    }
}

#[test]
fn weak_coupling_t_vanishes() {
    let m = optomech_model(1.0, 0.5, 0.3, 1e-7, 2).unwrap();
    let single = SingleKernel::generic(&m, &EigenOptions::default()).unwrap();
    let k = t_kernel_generic(&single, 0).unwrap();
    let x = on_shell(&[0.0, 0.5, 1.0], 0, 0, 0.7, 1.4, 0.9);
    assert!(k.one_delta_density(0, &x).norm() < 1e-9);
}

#[test]
fn anharmonic_cavity_interacts() {
    // Anharmonic sector 2 gives a nonzero interaction.
    let m = optomech_model(1.0, 0.5, 0.4, 0.6, 3).unwrap();
    let single = SingleKernel::generic(&m, &EigenOptions::default()).unwrap();
    let k = t_kernel_generic(&single, 0).unwrap();
    let x = on_shell(&[0.0, 0.5, 1.0, 1.5], 0, 0, 0.9, 1.1, 1.0);
    assert!(k.one_delta_density(0, &x).norm() > 1e-4);
}

#[test]
fn degenerate_ground_states_collapse() {
    use wqed::linalg::CMatrix;
    use wqed::model::{GenericCavityModel, Sector};
    let c = |x: f64| Complex64::new(x, 0.0);
    let m = GenericCavityModel::new(
        1.0,
        vec![
            Sector::new(vec!["a".into(), "b".into()], CMatrix::from_diag(&[c(0.0), c(0.0)])),
            Sector::new(vec!["e".into()], CMatrix::from_diag(&[c(0.0)])),
            Sector::empty(),
        ],
        vec![CMatrix::from_fn(2, 1, |i, _| c(if i == 0 { 0.6 } else { 0.8 })), CMatrix::zeros(1, 0)],
    )
    .unwrap();
    let single = SingleKernel::generic(&m, &EigenOptions::default()).unwrap();
    let k = s0_kernel(&single, 0, &KernelOptions::default());
    assert!(k.terms.iter().flatten().all(|t| t.kind == TermKind::TwoDelta));
    assert_eq!(k.count(0), 4);
    let kept = s0_kernel(&single, 0, &KernelOptions { collapse_degenerate: false, ..Default::default() });
    assert_eq!(kept.count(0), 8);
}

fn sym_strategy() -> impl Strategy<Value = (f64, f64, f64, f64, f64, f64, f64)> {
    (0.1f64..2.0, 0.1f64..2.0, 0.5f64..5.0, -5.0f64..0.4, -8.0f64..8.0, -8.0f64..8.0, -8.0f64..8.0)
}

proptest! {
    #[test]
    fn t_density_is_bosonic((g1, g2, d1, d2, p1, p2, k1) in sym_strategy()) {
        let p = lambda(g1, g2, d1, d2);
        let e = [p.ground_energy(0), p.ground_energy(1)];
        for nu in 0..2 {
            let k = t_kernel_lambda(&p, nu);
            for mu in 0..2 {
                let x = on_shell(&e, mu, nu, p1, p2, k1);
                let v = k.one_delta_density(mu, &x);
                let swap_p = k.one_delta_density(mu, &[x[1], x[0], x[2], x[3]]);
                let swap_k = k.one_delta_density(mu, &[x[0], x[1], x[3], x[2]]);
                prop_assert!((v - swap_p).norm() <= 1e-12 * v.norm().max(1.0));
                prop_assert!((v - swap_k).norm() <= 1e-12 * v.norm().max(1.0));
            }
        }
    }

    #[test]
    fn s0_density_is_bosonic((g1, g2, d1, d2, p1, p2, k1) in sym_strategy()) {
        let p = lambda(g1, g2, d1, d2);
        let e = [p.ground_energy(0), p.ground_energy(1)];
        let single = SingleKernel::lambda(p).unwrap();
        let k = s0_kernel(&single, 0, &KernelOptions::default());
        for mu in 0..2 {
            let x = on_shell(&e, mu, 0, p1, p2, k1);
            let v = k.one_delta_density(mu, &x);
            let swap_p = k.one_delta_density(mu, &[x[1], x[0], x[2], x[3]]);
            let swap_k = k.one_delta_density(mu, &[x[0], x[1], x[3], x[2]]);
            prop_assert!((v - swap_p).norm() <= 1e-9 * v.norm().max(1.0));
            prop_assert!((v - swap_k).norm() <= 1e-9 * v.norm().max(1.0));
        }
    }
}
