//! Double symmetry of the partial-transpose blocks and what follows from it.
//!
//! A symmetric centrosymmetric C (C = Cᵀ = JCJ) is orthogonally similar to
//! diag(A − JB, A + JB) (odd K) or diag(A − JB, [[q, √2xᵀ], [√2x, A + JB]])
//! (even K), where A is the top-left h×h corner, h = ⌊(K+1)/2⌋, B the h×h
//! corner starting at row K+1−h, q the centre entry and x the centre column
//! above it. If the minus part is negative definite and the plus part is
//! positive definite, the trace norm of C is Tr[JC].

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::{anti_identity, skew_diagonal_sum, BlockFamily};
use crate::fock::{negativity_eigen, Negativity, EIGEN_CLAMP_REL};

/// Default tolerance for [`check_double_symmetric`], relative to max|C|.
pub const DOUBLE_SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymmetryCheck {
    pub passed: bool,
    /// max(‖C − Cᵀ‖_max, ‖C − JCJ‖_max) / max|C|.
    pub deviation: f64,
}

/// Whether C is symmetric and centrosymmetric to within `tol` relative to max|C|.
pub fn check_double_symmetric(c: &DMatrix<f64>, tol: f64) -> SymmetryCheck {
    let n = c.nrows();
    assert_eq!(n, c.ncols(), "matrix must be square");
    let scale = c.amax();
    let mut dev = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            dev = dev
                .max((c[(i, j)] - c[(j, i)]).abs())
                .max((c[(i, j)] - c[(n - 1 - i, n - 1 - j)]).abs());
        }
    }
    let deviation = if scale > 0.0 { dev / scale } else { 0.0 };
    SymmetryCheck {
        passed: deviation < tol,
        deviation,
    }
}

/// The two diagonal blocks of the centrosymmetric split.
#[derive(Debug, Clone, PartialEq)]
pub struct CentroSplit {
    /// A − JB, of size ⌊(K+1)/2⌋.
    pub minus_block: DMatrix<f64>,
    /// A + JB, bordered by the centre row and column when K is even.
    pub plus_block: DMatrix<f64>,
}

impl CentroSplit {
    /// Union of the eigenvalues of both parts, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = [&self.minus_block, &self.plus_block]
            .into_iter()
            .filter(|m| m.nrows() > 0)
            .flat_map(|m| {
                SymmetricEigen::new(m.clone())
                    .eigenvalues
                    .iter()
                    .copied()
                    .collect::<Vec<_>>()
            })
            .collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// Minus part ≤ 0 and plus part ≥ 0, up to `clamp`.
    pub fn is_split_definite(&self, clamp: f64) -> bool {
        let extreme = |m: &DMatrix<f64>, max: bool| {
            if m.nrows() == 0 {
                return 0.0;
            }
            let ev = SymmetricEigen::new(m.clone()).eigenvalues;
            if max {
                ev.max()
            } else {
                ev.min()
            }
        };
        extreme(&self.minus_block, true) <= clamp && extreme(&self.plus_block, false) >= -clamp
    }
}

/// Splits a double-symmetric C into its minus and plus parts.
pub fn centro_decompose(c: &DMatrix<f64>, tol: f64) -> Result<CentroSplit> {
    let n = c.nrows();
    let check = check_double_symmetric(c, tol);
    if !check.passed {
        return Err(Error::Symmetry {
            k: n.saturating_sub(1),
            property: "double symmetry",
            deviation: check.deviation,
            tol,
        });
    }
    let h = n / 2;
    let a = c.view((0, 0), (h, h));
    // (JB)_ij = C_{K−i, j}
    let jb = DMatrix::from_fn(h, h, |i, j| c[(n - 1 - i, j)]);
    let minus_block = a - &jb;
    let plus_core = a + &jb;
    let plus_block = if n.is_multiple_of(2) {
        plus_core
    } else {
        let s = std::f64::consts::SQRT_2;
        DMatrix::from_fn(h + 1, h + 1, |i, j| match (i, j) {
            (0, 0) => c[(h, h)],
            (0, j) => s * c[(j - 1, h)],
            (i, 0) => s * c[(i - 1, h)],
            (i, j) => plus_core[(i - 1, j - 1)],
        })
    };
    Ok(CentroSplit {
        minus_block,
        plus_block,
    })
}

/// Result of the skew-trace negativity route.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkewNegativity {
    /// The reported value: skew-trace route, or the eigen route on fallback.
    pub negativity: Negativity,
    /// Σ_K Tr[J C_K].
    pub skew_trace: f64,
    /// Σ_K Tr[C_K]; the success probability for an unnormalized conditioned family.
    pub total_trace: f64,
    /// Whether every block passed the definiteness check.
    pub definite: bool,
    /// |E_N(skew) − E_N(eigen)| when the definiteness check failed.
    pub fallback_discrepancy: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkewOptions {
    pub symmetry_tol: f64,
    pub check_definiteness: bool,
}

impl Default for SkewOptions {
    fn default() -> Self {
        Self {
            symmetry_tol: DOUBLE_SYMMETRY_TOL,
            check_definiteness: true,
        }
    }
}

/// E_N = log₂(Σ Tr[J C_K] / Σ Tr[C_K]).
///
/// Falls back to diagonalizing every block when some split is not definite.
pub fn negativity_skew(family: &BlockFamily, opts: &SkewOptions) -> Result<SkewNegativity> {
    let total_trace = family.total_trace();
    if !(total_trace > 0.0) {
        return Err(Error::Undefined {
            quantity: "negativity",
            reason: "state has zero trace",
        });
    }
    let mut definite = true;
    for c in family.blocks() {
        let split = centro_decompose(c, opts.symmetry_tol)?;
        if opts.check_definiteness && !split.is_split_definite(EIGEN_CLAMP_REL * c.amax()) {
            definite = false;
        }
    }
    let skew_trace = family.skew_trace();
    let skew = Negativity::from_trace_norm(skew_trace / total_trace);
    let (negativity, fallback_discrepancy) = if definite {
        (skew, None)
    } else {
        let eig = negativity_eigen(family)?;
        (eig, Some((eig.log_negativity - skew.log_negativity).abs()))
    };
    Ok(SkewNegativity {
        negativity,
        skew_trace,
        total_trace,
        definite,
        fallback_discrepancy,
    })
}

/// J_K C_K J_K for a single block (used by diagnostics).
pub fn reflect(c: &DMatrix<f64>) -> DMatrix<f64> {
    let j = anti_identity(c.nrows());
    &j * c * &j
}

/// Tr[J C] of a single block.
pub fn skew_trace(c: &DMatrix<f64>) -> f64 {
    skew_diagonal_sum(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym(vals: &[&[f64]]) -> DMatrix<f64> {
        let n = vals.len();
        DMatrix::from_fn(n, n, |i, j| vals[i][j])
    }

    #[test]
    fn anti_identity_is_double_symmetric() {
        assert!(check_double_symmetric(&anti_identity(5), 1e-15).passed);
    }

    #[test]
    fn perturbation_is_detected() {
        let mut c = anti_identity(4);
        c[(0, 1)] += 1e-3;
        let chk = check_double_symmetric(&c, 1e-12);
        assert!(!chk.passed);
        assert!((chk.deviation - 1e-3).abs() < 1e-12);
    }

    #[test]
    fn two_by_two_split() {
        let c = sym(&[&[3.0, 1.0], &[1.0, 3.0]]);
        let s = centro_decompose(&c, 1e-12).unwrap();
        assert_eq!(s.minus_block, sym(&[&[2.0]]));
        assert_eq!(s.plus_block, sym(&[&[4.0]]));
    }

    #[test]
    fn k2_layout() {
        // [[a, x, b], [x, q, x], [b, x, a]]
        let (a, b, x, q) = (5.0, 2.0, 0.5, 7.0);
        let c = sym(&[&[a, x, b], &[x, q, x], &[b, x, a]]);
        let s = centro_decompose(&c, 1e-12).unwrap();
        let r2 = std::f64::consts::SQRT_2;
        assert_eq!(s.minus_block, sym(&[&[a - b]]));
        assert_eq!(s.plus_block, sym(&[&[q, r2 * x], &[r2 * x, a + b]]));
    }

    #[test]
    fn k3_layout() {
        // [[a, b, c, d], [b, e, f, c], [c, f, e, b], [d, c, b, a]]
        let (a, b, c, d, e, f) = (9.0, 1.0, 2.0, 3.0, 8.0, 0.5);
        let m = sym(&[&[a, b, c, d], &[b, e, f, c], &[c, f, e, b], &[d, c, b, a]]);
        let s = centro_decompose(&m, 1e-12).unwrap();
        // JB has rows (C_3,·) and (C_2,·) restricted to the first two columns
        assert_eq!(s.minus_block, sym(&[&[a - d, b - c], &[b - c, e - f]]));
        assert_eq!(s.plus_block, sym(&[&[a + d, b + c], &[b + c, e + f]]));
    }

    #[test]
    fn split_keeps_the_spectrum() {
        let m = sym(&[
            &[4.0, 1.0, 0.3, -0.2, 0.1],
            &[1.0, 3.0, 0.7, 0.4, -0.2],
            &[0.3, 0.7, 2.0, 0.7, 0.3],
            &[-0.2, 0.4, 0.7, 3.0, 1.0],
            &[0.1, -0.2, 0.3, 1.0, 4.0],
        ]);
        let mut direct: Vec<f64> = SymmetricEigen::new(m.clone())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        direct.sort_by(f64::total_cmp);
        let split = centro_decompose(&m, 1e-12).unwrap().eigenvalues();
        for (x, y) in direct.iter().zip(&split) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_asymmetric_input() {
        let m = sym(&[&[1.0, 2.0], &[3.0, 1.0]]);
        assert!(matches!(
            centro_decompose(&m, 1e-12),
            Err(Error::Symmetry { .. })
        ));
    }
}
