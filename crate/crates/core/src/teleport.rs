//! Coherent-state teleportation fidelity.
//!
//! Averaged over heterodyne outcomes, the fidelity is Tr[ρ O_F] / Tr ρ with
//!
//! O_F = Σ_K Σ_{i,j ≤ K} 2^{−(K+1)} √(C(K,i) C(K,j)) |i, j⟩⟨K−j, K−i|,
//!
//! independent of the input amplitude. Transposing mode A maps the term
//! |i, j⟩⟨K−j, K−i| to |K−j, j⟩⟨i, K−i|, so O_F^Γ is block diagonal and its
//! block K is the rank-one matrix v vᵀ with v_r = √(C(K,r) / 2^{K+1}).
//! Binomials with an index above K vanish, so the sums stop at K.

use nalgebra::{DMatrix, DVector};

use crate::combin::binomial;
use crate::error::{Error, Result};
use crate::family::BlockFamily;
use crate::fock::FockDensity;

/// Block K of O_F^Γ.
#[derive(Debug, Clone, PartialEq)]
pub struct FidelityOperatorBlock {
    pub k: usize,
    pub matrix: DMatrix<f64>,
}

impl FidelityOperatorBlock {
    /// v with O^Γ(K) = v vᵀ.
    pub fn factor(k: usize) -> DVector<f64> {
        let scale = 0.5f64.powi(k as i32 + 1);
        DVector::from_fn(k + 1, |r, _| (binomial(k, r) * scale).sqrt())
    }
}

/// O^Γ(K)_{r,c} = 2^{−(K+1)} √(C(K,r) C(K,c)).
pub fn of_gamma_block(k: usize) -> FidelityOperatorBlock {
    let scale = 0.5f64.powi(k as i32 + 1);
    FidelityOperatorBlock {
        k,
        matrix: DMatrix::from_fn(k + 1, k + 1, |r, c| {
            scale * (binomial(k, r) * binomial(k, c)).sqrt()
        }),
    }
}

/// Σ_K Tr[C_K O^Γ(K)] / Σ_K Tr C_K.
pub fn fidelity_from_blocks(family: &BlockFamily) -> Result<f64> {
    let tr = family.total_trace();
    if !(tr > 0.0) {
        return Err(Error::Undefined {
            quantity: "fidelity",
            reason: "state has zero trace",
        });
    }
    let num: f64 = family
        .blocks()
        .iter()
        .enumerate()
        .map(|(k, c)| {
            // Tr[C v vᵀ] = vᵀ C v
            let v = FidelityOperatorBlock::factor(k);
            (v.transpose() * c * &v)[(0, 0)]
        })
        .sum();
    Ok(num / tr)
}

/// Fidelity evaluated on a truncated density matrix, with an error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FidelityEstimate {
    pub fidelity: f64,
    /// 4√δ / Tr ρ, with δ the norm deficit of the truncated input.
    ///
    /// Truncating the input pure state moves it by at most 2√δ in trace
    /// norm; the channels and the heralding do not increase that distance,
    /// and the ratio Tr[ρO]/Tr ρ with 0 ≤ O ≤ 1 at most doubles it.
    pub cutoff_bound: f64,
}

/// Tr[ρ O_F] / Tr ρ, summing the Fock expansion of O_F directly on ρ.
pub fn fidelity_oracle(rho: &FockDensity) -> Result<FidelityEstimate> {
    let tr = rho.trace();
    if !(tr > 0.0) {
        return Err(Error::Undefined {
            quantity: "fidelity",
            reason: "state has zero trace",
        });
    }
    let n = rho.cutoff().n_max();
    let mut num = 0.0;
    for k in 0..=2 * n {
        let scale = 0.5f64.powi(k as i32 + 1);
        // ⟨K−j, K−i| ρ |i, j⟩, every index within the cutoff
        for i in k.saturating_sub(n)..=k.min(n) {
            for j in k.saturating_sub(n)..=k.min(n) {
                let coef = scale * (binomial(k, i) * binomial(k, j)).sqrt();
                num += coef * rho.element(k - j, k - i, i, j);
            }
        }
    }
    Ok(FidelityEstimate {
        fidelity: num / tr,
        cutoff_bound: 4.0 * rho.norm_deficit().sqrt() / tr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{make_tmss, FockCutoff};
    use nalgebra::SymmetricEigen;

    #[test]
    fn small_blocks() {
        assert_eq!(of_gamma_block(0).matrix, DMatrix::from_element(1, 1, 0.5));
        assert!((of_gamma_block(1).matrix.add_scalar(-0.25)).amax() < 1e-16);
    }

    #[test]
    fn blocks_are_rank_one_with_half_trace() {
        for k in 0..=20 {
            let m = of_gamma_block(k).matrix;
            assert!((m.trace() - 0.5).abs() < 1e-12);
            let mut ev: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
            ev.sort_by(f64::total_cmp);
            assert!((ev[k] - 0.5).abs() < 1e-12);
            assert!(ev[..k].iter().all(|e| e.abs() < 1e-12));
        }
    }

    #[test]
    fn pure_tmss_fidelity() {
        let rho = FockDensity::pure(&make_tmss(0.5, FockCutoff::new(40)).unwrap());
        let f = fidelity_oracle(&rho).unwrap();
        assert!((f.fidelity - 0.75).abs() < 1e-8, "{}", f.fidelity);
        let vac = FockDensity::pure(&make_tmss(0.0, FockCutoff::new(3)).unwrap());
        assert_eq!(fidelity_oracle(&vac).unwrap().fidelity, 0.5);
    }
}
