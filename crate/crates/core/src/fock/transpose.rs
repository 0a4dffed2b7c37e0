use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::FockDensity;
use crate::error::{Error, Result};
use crate::family::BlockFamily;

/// Tolerated cross-sector mass, relative to the largest entry of ρ.
pub const OFF_BLOCK_TOL: f64 = 1e-12;

/// Eigenvalues below this fraction of max|C_K| are treated as zero.
pub const EIGEN_CLAMP_REL: f64 = 1e-10;

/// Logarithmic negativity together with the trace norm it came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Negativity {
    /// ‖ρ^Γ‖₁ / Tr ρ.
    pub trace_norm: f64,
    /// (‖ρ^Γ‖₁/Tr ρ − 1) / 2.
    pub negativity: f64,
    /// log₂ ‖ρ^Γ‖₁/Tr ρ.
    pub log_negativity: f64,
}

impl Negativity {
    pub fn from_trace_norm(trace_norm: f64) -> Self {
        Self {
            trace_norm,
            negativity: (trace_norm - 1.0) / 2.0,
            log_negativity: trace_norm.log2(),
        }
    }
}

/// Splits ρ^{Γ_B} into blocks C_K, with
/// C_K[i][j] = ⟨i, K−i| ρ^Γ |j, K−j⟩ = ⟨i, K−j| ρ |j, K−i⟩.
///
/// Fails when ρ has coherences between different a − b sectors, since the
/// transpose would then leak outside the blocks.
pub fn partial_transpose_blocks(rho: &FockDensity, tol: f64) -> Result<BlockFamily> {
    let scale = rho.matrix().amax();
    let leak = rho.photon_correlation_violation();
    if leak > tol * scale {
        return Err(Error::Structure {
            mass: leak,
            tol: tol * scale,
        });
    }
    let n = rho.cutoff().n_max();
    let blocks = (0..=2 * n)
        .map(|k| {
            DMatrix::from_fn(k + 1, k + 1, |i, j| {
                if i > n || j > n || k - i > n || k - j > n {
                    0.0
                } else {
                    rho.element(i, k - j, j, k - i)
                }
            })
        })
        .collect();
    Ok(BlockFamily::new(blocks, rho.norm_deficit(), false))
}

/// Trace norm of ρ^Γ from per-block eigenvalues, normalized by Tr ρ.
pub fn negativity_eigen(family: &BlockFamily) -> Result<Negativity> {
    let tr = family.total_trace();
    if !(tr > 0.0) {
        return Err(Error::Undefined {
            quantity: "negativity",
            reason: "state has zero trace",
        });
    }
    let mut norm = 0.0;
    for c in family.blocks() {
        let floor = EIGEN_CLAMP_REL * c.amax();
        if floor == 0.0 {
            continue;
        }
        norm += SymmetricEigen::new(c.clone())
            .eigenvalues
            .iter()
            .filter(|ev| ev.abs() >= floor)
            .map(|ev| ev.abs())
            .sum::<f64>();
    }
    Ok(Negativity::from_trace_norm(norm / tr))
}
