use cvdistill::centro::{centro_decompose, check_double_symmetric, reflect, skew_trace};
use cvdistill::fock::{bs_unitary, BeamsplitterCoeffs, BsUnitary, FockCutoff};
use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;

/// S + J S J is symmetric and centrosymmetric for any symmetric S.
fn double_symmetric(n: usize, vals: &[f64]) -> DMatrix<f64> {
    let mut s = DMatrix::zeros(n, n);
    let mut it = vals.iter().cycle();
    for i in 0..n {
        for j in i..n {
            let v = *it.next().unwrap();
            s[(i, j)] = v;
            s[(j, i)] = v;
        }
    }
    &s + reflect(&s)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn split_preserves_spectrum(n in 1usize..12, vals in prop::collection::vec(-1.0f64..1.0, 1..80)) {
        let c = double_symmetric(n, &vals);
        prop_assert!(check_double_symmetric(&c, 1e-14).passed);
        let split = centro_decompose(&c, 1e-12).unwrap();
        let mut full: Vec<f64> = SymmetricEigen::new(c.clone()).eigenvalues.iter().copied().collect();
        full.sort_by(f64::total_cmp);
        let parts = split.eigenvalues();
        prop_assert_eq!(parts.len(), n);
        for (a, b) in full.iter().zip(&parts) {
            prop_assert!((a - b).abs() < 1e-12, "{} vs {}", a, b);
        }
        let signed = split.plus_block.trace() - split.minus_block.trace();
        prop_assert!((signed - skew_trace(&c)).abs() < 1e-12);
    }

    #[test]
    fn beamsplitter_is_unitary(tau in 0.0f64..=1.0, n in 0usize..31) {
        let u = bs_unitary(tau, FockCutoff::new(n)).unwrap();
        prop_assert!(u.unitarity_error() < 1e-12);
        prop_assert!(u.generator_gap() < 1e-12);
    }

    #[test]
    fn xi_rows_are_normalized(tau in 0.0f64..=1.0) {
        let xi = BeamsplitterCoeffs::new(tau, FockCutoff::new(30)).unwrap();
        prop_assert!(xi.row_normalization_error() < 1e-12);
    }
}

#[test]
fn flipped_xi_breaks_unitarity_at_every_interior_tau() {
    for tau in [0.1, 0.5, 0.9] {
        let mut xi = BeamsplitterCoeffs::new(tau, FockCutoff::new(8)).unwrap();
        xi.flip_sign(3, 1);
        let u = BsUnitary::from_coeffs(&xi);
        assert!(u.unitarity_error() > 1e-3);
        assert!(u.generator_gap() > 1e-3);
    }
}
