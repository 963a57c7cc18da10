use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use wqed::amplitudes::SingleKernel;
use wqed::model::{random_graded_model, GenericCavityModel};
use wqed::spectral::{biorth_eigen, effective_hamiltonian, model_spectra, EigenOptions};

fn model(seed: u64, max_dim: usize) -> GenericCavityModel<f64> {
    random_graded_model(&mut ChaCha8Rng::seed_from_u64(seed), max_dim)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn decomposition_reconstructs_each_sector(seed in any::<u64>(), max_dim in 1usize..6) {
        let m = model(seed, max_dim);
        for n in 0..3 {
            let h = effective_hamiltonian(&m, n);
            if h.rows() == 0 {
                continue;
            }
            let e = match biorth_eigen(&h, n, &EigenOptions::default()) {
                Ok(e) => e,
                // near-defective draws are refused, never silently accepted
                Err(_) => continue,
            };
            let r = e.residuals(&h);
            prop_assert!(r.right <= 1e-10 && r.left <= 1e-10, "{r:?}");
            prop_assert!(r.biorthonormality <= 1e-8 && r.reconstruction <= 1e-10, "{r:?}");
            prop_assert!(r.trace <= 1e-12, "{r:?}");
        }
    }

    #[test]
    fn excited_sectors_decay(seed in any::<u64>()) {
        let m = model(seed, 4);
        if let Ok(sp) = model_spectra(&m, &EigenOptions::default()) {
            for n in 1..3 {
                for z in &sp.sector(n).eigenvalues {
                    prop_assert!(z.im <= 1e-12, "sector {n}: {z}");
                }
            }
            for z in &sp.sector(0).eigenvalues {
                prop_assert!(z.im.abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn without_decay_left_vectors_are_adjoints(seed in any::<u64>()) {
        let mut m = model(seed, 4);
        m.gamma = 0.0;
        let sp = model_spectra(&m, &EigenOptions::default()).unwrap();
        for n in 0..3 {
            let e = sp.sector(n);
            if e.dim() == 0 {
                continue;
            }
            prop_assert!(e.left.sub(&e.right.adjoint()).max_abs() <= 1e-10);
            for z in &e.eigenvalues {
                prop_assert!(z.im.abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn single_photon_scattering_conserves_flux(seed in any::<u64>(), k in -6.0f64..6.0) {
        let m = model(seed, 3);
        if let Ok(s) = SingleKernel::generic(&m, &EigenOptions::default()) {
            for nu in 0..s.n_ground() {
                prop_assert!(s.unitarity_defect(k, nu) <= 1e-9, "nu {nu}: {}", s.unitarity_defect(k, nu));
            }
        }
    }
}
