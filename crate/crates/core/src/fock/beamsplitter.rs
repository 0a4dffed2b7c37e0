//! Beamsplitter coupling V(θ) = exp[θ(a†b − ab†)] in the two-mode Fock basis.
//!
//! With θ = arctan √((1−τ)/τ) we have cos θ = √τ and sin θ = √(1−τ), so τ is
//! exactly the transmittance seen by the first mode.

use nalgebra::DMatrix;

use super::FockCutoff;
use crate::combin::binomial;
use crate::error::{check_range, Result};

/// ξ_{n,m} = (−1)^m √C(n,m) τ^{(n−m)/2} (1−τ)^{m/2}, the amplitude of |n−m, m⟩ in V|n, 0⟩.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamsplitterCoeffs {
    transmittance: f64,
    n_max: usize,
    // row n holds m = 0..=n
    rows: Vec<Vec<f64>>,
}

impl BeamsplitterCoeffs {
    pub fn new(transmittance: f64, cutoff: FockCutoff) -> Result<Self> {
        check_range(
            "τ",
            transmittance,
            (0.0..=1.0).contains(&transmittance),
            "[0, 1]",
        )?;
        let ct = transmittance.sqrt();
        let st = (1.0 - transmittance).sqrt();
        let rows = (0..=cutoff.n_max())
            .map(|n| {
                (0..=n)
                    .map(|m| {
                        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                        sign * binomial(n, m).sqrt() * ct.powi((n - m) as i32) * st.powi(m as i32)
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            transmittance,
            n_max: cutoff.n_max(),
            rows,
        })
    }

    pub fn transmittance(&self) -> f64 {
        self.transmittance
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// ξ_{n,m}; zero when m > n.
    pub fn xi(&self, n: usize, m: usize) -> f64 {
        if m > n {
            0.0
        } else {
            self.rows[n][m]
        }
    }

    /// Max over n of |Σ_m ξ_{n,m}² − 1|.
    pub fn row_normalization_error(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| (r.iter().map(|x| x * x).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Flips the sign of one coefficient. Only meant for mutation checks.
    pub fn flip_sign(&mut self, n: usize, m: usize) {
        if n <= self.n_max && m <= n {
            self.rows[n][m] = -self.rows[n][m];
        }
    }
}

/// V restricted to each fixed-total-photon subspace N = 0..=n_max.
///
/// Block N is (N+1)×(N+1) in the basis |p, N−p⟩, p = 0..=N, and its entry
/// (p, n1) is ⟨p, N−p| V |n1, N−n1⟩.
#[derive(Debug, Clone, PartialEq)]
pub struct BsUnitary {
    transmittance: f64,
    blocks: Vec<DMatrix<f64>>,
    /// Largest |exp-generator column − ξ| seen before the table was copied in.
    generator_gap: f64,
}

impl BsUnitary {
    /// Assembles V from the ξ table.
    ///
    /// On total photon number N, V = exp[θ(a†b − ab†)] with cos θ = √τ acts
    /// through a tridiagonal generator, exponentiated directly; a closed
    /// double sum over ξ cancels badly near τ = ½. The column V|N, 0⟩ is
    /// ξ_{N,m} itself and is copied from the table, so a corrupted table
    /// shows up in both unitarity and the split amplitudes.
    pub fn from_coeffs(xi: &BeamsplitterCoeffs) -> Self {
        let theta = xi.transmittance().sqrt().clamp(0.0, 1.0).acos();
        let mut generator_gap = 0.0f64;
        let blocks = (0..=xi.n_max())
            .map(|total| {
                // basis index = photons in mode a
                let mut g = DMatrix::zeros(total + 1, total + 1);
                for p in 0..total {
                    let c = theta * (((p + 1) * (total - p)) as f64).sqrt();
                    g[(p + 1, p)] = c;
                    g[(p, p + 1)] = -c;
                }
                let mut u = g.exp();
                for m in 0..=total {
                    generator_gap =
                        generator_gap.max((u[(total - m, total)] - xi.xi(total, m)).abs());
                    u[(total - m, total)] = xi.xi(total, m);
                }
                u
            })
            .collect();
        Self {
            transmittance: xi.transmittance(),
            blocks,
            generator_gap,
        }
    }

    pub fn transmittance(&self) -> f64 {
        self.transmittance
    }

    pub fn n_max(&self) -> usize {
        self.blocks.len() - 1
    }

    /// The block acting on total photon number `total`.
    pub fn block(&self, total: usize) -> &DMatrix<f64> {
        &self.blocks[total]
    }

    /// Amplitude of |x−e, e⟩ in V|x, 0⟩.
    pub fn split_amplitude(&self, x: usize, e: usize) -> f64 {
        if e > x {
            0.0
        } else {
            self.blocks[x][(x - e, x)]
        }
    }

    /// Max over blocks of ‖U†U − 1‖_max.
    pub fn unitarity_error(&self) -> f64 {
        self.blocks
            .iter()
            .map(|u| {
                let g = u.transpose() * u;
                let n = g.nrows();
                (g - DMatrix::<f64>::identity(n, n)).amax()
            })
            .fold(0.0, f64::max)
    }

    /// How far the ξ table was from the exponentiated generator.
    pub fn generator_gap(&self) -> f64 {
        self.generator_gap
    }

    /// Max over n, m of |⟨n−m, m|V|n, 0⟩ − ξ_{n,m}|.
    pub fn column_mismatch(&self, xi: &BeamsplitterCoeffs) -> f64 {
        let mut worst = 0.0f64;
        for n in 0..=self.n_max().min(xi.n_max()) {
            for m in 0..=n {
                worst = worst.max((self.split_amplitude(n, m) - xi.xi(n, m)).abs());
            }
        }
        worst
    }
}

/// The beamsplitter unitary of transmittance τ on the truncated two-mode space.
pub fn bs_unitary(transmittance: f64, cutoff: FockCutoff) -> Result<BsUnitary> {
    Ok(BsUnitary::from_coeffs(&BeamsplitterCoeffs::new(
        transmittance,
        cutoff,
    )?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_transmission_is_identity() {
        let u = bs_unitary(1.0, FockCutoff::new(6)).unwrap();
        for total in 0..=6 {
            let b = u.block(total);
            assert_eq!(b, &DMatrix::identity(total + 1, total + 1));
        }
    }

    #[test]
    fn single_photon_splits_with_negative_reflection() {
        let eta: f64 = 0.3;
        let u = bs_unitary(eta, FockCutoff::new(3)).unwrap();
        // |1,0⟩ → √η|1,0⟩ − √(1−η)|0,1⟩
        assert!((u.split_amplitude(1, 0) - eta.sqrt()).abs() < 1e-15);
        assert!((u.split_amplitude(1, 1) + (1.0 - eta).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn unitary_on_every_subspace() {
        for &tau in &[0.0, 0.1, 0.37, 0.5, 0.9, 1.0] {
            let u = bs_unitary(tau, FockCutoff::new(8)).unwrap();
            assert!(
                u.unitarity_error() < 1e-12,
                "τ = {tau}: {}",
                u.unitarity_error()
            );
        }
    }

    #[test]
    fn columns_reproduce_xi_table() {
        let xi = BeamsplitterCoeffs::new(0.42, FockCutoff::new(10)).unwrap();
        let u = BsUnitary::from_coeffs(&xi);
        assert!(u.column_mismatch(&xi) < 1e-14);
        assert!(u.generator_gap() < 1e-13, "{}", u.generator_gap());
        assert!(xi.row_normalization_error() < 1e-14);
    }

    #[test]
    fn sign_flip_breaks_unitarity() {
        let mut xi = BeamsplitterCoeffs::new(0.5, FockCutoff::new(6)).unwrap();
        xi.flip_sign(2, 1);
        assert!(xi.row_normalization_error() < 1e-14);
        assert!(BsUnitary::from_coeffs(&xi).unitarity_error() > 1e-3);
    }

    #[test]
    fn rejects_bad_transmittance() {
        assert!(bs_unitary(1.5, FockCutoff::new(2)).is_err());
    }
}
