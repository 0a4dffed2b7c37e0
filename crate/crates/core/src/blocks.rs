//! Series evaluation of the partial-transpose blocks C_K.
//!
//! All three scenarios share one kernel. With γ, δ the photon numbers seen
//! by the detectors on arms A and B,
//!
//! C_ij = (1−λ²) T^K √(C(K,i) C(K,j)) / K! · Σ_γ Σ_n η^K (ηR)^γ (1−η)^n
//!        λ^{i+j+2n+2γ} (i+n+γ)! (j+n+γ)! / (n! γ!) · D(M),   M = n+i+j+γ−K,
//!
//! D(M) = Σ_δ (ηR)^δ (1−η)^{M−δ} / (δ! (M−δ)!) over the allowed δ ≤ M.
//! Before subtraction γ = δ = 0; on-off takes γ, δ ≥ 1; PNR fixes γ = δ = ℓ.
//! The δ sum is done in closed form by the binomial theorem, e.g.
//! D(M) = (R̃^M − (1−η)^M) / M! for on-off, with R̃ = 1 − ηT.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::combin::{ln0, ln_binomial, ln_factorial, ln_pow};
use crate::detector::{DetectorKind, DetectorModel, Scenario};
use crate::error::{check_range, Error, Result};
use crate::family::BlockFamily;
use crate::params::{ProtocolParams, SeriesTolerance};

/// Which block series to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockKind {
    Before,
    OnOff,
    Pnr(usize),
}

impl BlockKind {
    /// The analytic series for a scenario, if one exists.
    ///
    /// Only ideal on-off and PNR detectors have block series; threshold
    /// detectors and finite efficiencies go through the Fock oracle.
    pub fn for_scenario(s: &Scenario) -> Result<Self> {
        match s {
            Scenario::Before => Ok(BlockKind::Before),
            Scenario::Distilled(d) => Self::for_detector(d),
        }
    }

    pub fn for_detector(d: &DetectorModel) -> Result<Self> {
        if !d.is_ideal() {
            return Err(Error::Unsupported(format!(
                "detector {d} with finite efficiency"
            )));
        }
        match d.kind {
            DetectorKind::OnOff => Ok(BlockKind::OnOff),
            DetectorKind::Pnr(l) => Ok(BlockKind::Pnr(l)),
            DetectorKind::Threshold(_) => Err(Error::Unsupported(format!("detector {d}"))),
        }
    }

    fn min_count(&self) -> usize {
        match *self {
            BlockKind::Before => 0,
            BlockKind::OnOff => 1,
            BlockKind::Pnr(l) => l,
        }
    }
}

/// Parameters that are fixed for every entry of every block.
struct Kernel {
    kind: BlockKind,
    ln_lambda: f64,
    ln_eta: f64,
    ln_loss: f64,
    ln_eta_r: f64,
    ln_t: f64,
    ln_norm: f64,
    eta: f64,
    eta_r: f64,
    loss: f64,
    tol: SeriesTolerance,
}

impl Kernel {
    fn new(kind: BlockKind, p: &ProtocolParams, tol: SeriesTolerance) -> Self {
        let eta = p.eta();
        let eta_r = eta * p.r();
        Self {
            kind,
            ln_lambda: ln0(p.lambda()),
            ln_eta: ln0(eta),
            ln_loss: ln0(1.0 - eta),
            ln_eta_r: ln0(eta_r),
            ln_t: ln0(p.t()),
            ln_norm: (1.0 - p.lambda() * p.lambda()).ln(),
            eta,
            eta_r,
            loss: 1.0 - eta,
            tol,
        }
    }

    /// The conditioned state is identically zero.
    fn vanishes(&self) -> bool {
        self.kind != BlockKind::Before && (self.ln_lambda == f64::NEG_INFINITY || self.eta_r == 0.0)
    }

    /// ln D(M), or −∞ when no δ is allowed.
    fn ln_d(&self, m: usize) -> f64 {
        match self.kind {
            BlockKind::Before => ln_pow(self.ln_loss, m as f64) - ln_factorial(m),
            BlockKind::OnOff => {
                if m == 0 {
                    return f64::NEG_INFINITY;
                }
                let ln_rt = (self.loss + self.eta_r).ln();
                let diff = if self.loss == 0.0 {
                    m as f64 * ln_rt
                } else {
                    // ln(a^M − b^M) = M ln a + ln(1 − (b/a)^M), a = R̃, b/a = 1/(1 + ηR/(1−η))
                    let ln_ratio = -(self.eta_r / self.loss).ln_1p();
                    m as f64 * ln_rt + (-(m as f64 * ln_ratio).exp_m1()).ln()
                };
                diff - ln_factorial(m)
            }
            BlockKind::Pnr(l) => {
                if m < l {
                    return f64::NEG_INFINITY;
                }
                l as f64 * self.ln_eta_r + ln_pow(self.ln_loss, (m - l) as f64)
                    - ln_factorial(l)
                    - ln_factorial(m - l)
            }
        }
    }

    /// Σ_n for fixed (K, i, j, γ), without the entry prefactor.
    fn n_series(&self, k: usize, i: usize, j: usize, gamma: usize) -> Result<f64> {
        let dmin = self.kind.min_count();
        let n0 = (k + dmin).saturating_sub(i + j + gamma);
        let head = ln_pow(self.ln_eta_r, gamma as f64) - ln_factorial(gamma);
        let term = |n: usize| -> Result<f64> {
            let m = n + i + j + gamma - k;
            let ln = head
                + ln_pow(self.ln_loss, n as f64)
                + ln_pow(self.ln_lambda, (i + j + 2 * n + 2 * gamma) as f64)
                + ln_factorial(i + n + gamma)
                + ln_factorial(j + n + gamma)
                - ln_factorial(n)
                + self.ln_d(m);
            Ok(ln.exp())
        };
        sum_series(n0, &self.tol, term, || {
            format!("block series in n (K={k}, i={i}, j={j}, γ={gamma})")
        })
    }

    fn entry(&self, k: usize, i: usize, j: usize) -> Result<f64> {
        let pre = self.ln_norm
            + ln_pow(self.ln_t, k as f64)
            + ln_pow(self.ln_eta, k as f64)
            + 0.5 * (ln_binomial(k, i) + ln_binomial(k, j))
            - ln_factorial(k);
        let sum = match self.kind {
            BlockKind::Before => self.n_series(k, i, j, 0)?,
            BlockKind::Pnr(l) => self.n_series(k, i, j, l)?,
            BlockKind::OnOff => {
                // at η = 1 only n = 0 survives, which needs γ ≥ K+1−i−j
                let g0 = if self.eta == 1.0 {
                    (k + 1).saturating_sub(i + j).max(1)
                } else {
                    1
                };
                sum_series(
                    g0,
                    &self.tol,
                    |g| self.n_series(k, i, j, g),
                    || format!("block series in γ (K={k}, i={i}, j={j})"),
                )?
            }
        };
        Ok(if sum == 0.0 {
            0.0
        } else {
            (pre + sum.ln()).exp()
        })
    }

    fn block(&self, k: usize) -> Result<DMatrix<f64>> {
        let mut c = DMatrix::zeros(k + 1, k + 1);
        if self.vanishes() {
            return Ok(c);
        }
        for j in 0..=k {
            for i in 0..=j {
                let v = self.entry(k, i, j)?;
                c[(i, j)] = v;
                c[(j, i)] = v;
            }
        }
        Ok(c)
    }
}

/// Sums non-negative terms from `start` until `consecutive_small` successive
/// terms fall below `term_rel_tol` times the running sum. A vanishing first
/// term means the whole series vanishes.
fn sum_series(
    start: usize,
    tol: &SeriesTolerance,
    mut term: impl FnMut(usize) -> Result<f64>,
    context: impl Fn() -> String,
) -> Result<f64> {
    let first = term(start)?;
    if first == 0.0 {
        return Ok(0.0);
    }
    let mut sum = first;
    let mut small = 0;
    let mut last = first;
    for n in start + 1..start + tol.max_terms {
        last = term(n)?;
        sum += last;
        if last <= tol.term_rel_tol * sum {
            small += 1;
            if small >= tol.consecutive_small {
                return Ok(sum);
            }
        } else {
            small = 0;
        }
    }
    Err(Error::Convergence {
        context: context(),
        terms: tol.max_terms,
        last_term: last,
        partial_sum: sum,
    })
}

fn check_params(p: &ProtocolParams) -> Result<()> {
    let x = p.lambda() * (1.0 - p.eta());
    check_range("λ(1−η)", x, x < 1.0, "[0, 1)")
}

/// C_K of the lossy state before subtraction. Normalized: Σ_K Tr C_K = 1.
pub fn block_before(k: usize, p: &ProtocolParams, tol: &SeriesTolerance) -> Result<DMatrix<f64>> {
    check_params(p)?;
    Kernel::new(BlockKind::Before, p, *tol).block(k)
}

/// Unnormalized C_K after both ideal on-off detectors click.
pub fn block_onoff(k: usize, p: &ProtocolParams, tol: &SeriesTolerance) -> Result<DMatrix<f64>> {
    check_params(p)?;
    Kernel::new(BlockKind::OnOff, p, *tol).block(k)
}

/// Unnormalized C_K after both ideal PNR detectors count exactly ℓ photons.
pub fn block_pnr(
    k: usize,
    l: usize,
    p: &ProtocolParams,
    tol: &SeriesTolerance,
) -> Result<DMatrix<f64>> {
    check_range("ℓ", l as f64, l >= 1, "ℓ ≥ 1")?;
    check_params(p)?;
    Kernel::new(BlockKind::Pnr(l), p, *tol).block(k)
}

/// How far [`block_family`] grows K.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilyOptions {
    /// A block is negligible when its trace is below `eps_k` times the cumulative trace.
    pub eps_k: f64,
    /// Stop after this many negligible blocks in a row.
    pub consecutive: usize,
    /// Hard cap on K.
    pub k_cap: usize,
    pub series: SeriesTolerance,
}

impl Default for FamilyOptions {
    fn default() -> Self {
        Self {
            eps_k: 1e-14,
            consecutive: 3,
            k_cap: 200,
            series: SeriesTolerance::default(),
        }
    }
}

/// All blocks C_0, C_1, … for a scenario, grown until the traces die out.
pub fn block_family(
    p: &ProtocolParams,
    scenario: &Scenario,
    opts: &FamilyOptions,
) -> Result<BlockFamily> {
    let kind = BlockKind::for_scenario(scenario)?;
    check_params(p)?;
    let kernel = Kernel::new(kind, p, opts.series);
    let mut blocks = Vec::new();
    let mut cumulative = 0.0;
    let mut small = 0;
    for k in 0..=opts.k_cap {
        let c = kernel.block(k)?;
        let tr = c.trace();
        cumulative += tr;
        blocks.push(c);
        if tr <= opts.eps_k * cumulative {
            small += 1;
            if small >= opts.consecutive {
                let tail = geometric_tail(&blocks);
                while blocks.len() > 1 && blocks.last().is_some_and(|b| b.iter().all(|&x| x == 0.0))
                {
                    blocks.pop();
                }
                return Ok(BlockFamily::new(blocks, tail, kind == BlockKind::Before));
            }
        } else {
            small = 0;
        }
    }
    let last = blocks.last().map_or(0.0, |b| b.trace());
    Err(Error::Convergence {
        context: format!("block family for {scenario} at λ = {}", p.lambda()),
        terms: opts.k_cap + 1,
        last_term: last,
        partial_sum: cumulative,
    })
}

/// Trace beyond the last block, extrapolating the last trace ratio geometrically.
fn geometric_tail(blocks: &[DMatrix<f64>]) -> f64 {
    let n = blocks.len();
    if n < 2 {
        return 0.0;
    }
    let a = blocks[n - 2].trace();
    let b = blocks[n - 1].trace();
    if a <= 0.0 || b <= 0.0 || b >= a {
        return b;
    }
    let r = b / a;
    b * r / (1.0 - r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> SeriesTolerance {
        SeriesTolerance::default()
    }

    #[test]
    fn vacuum_corner_entry() {
        // ⟨0,0|ρ|0,0⟩ = (1−λ²) / (1 − λ²(1−η)²)
        let p = ProtocolParams::before(0.6, 0.3).unwrap();
        let c = block_before(0, &p, &tol()).unwrap();
        let x: f64 = 0.6 * 0.7;
        assert!((c[(0, 0)] - 0.64 / (1.0 - x * x)).abs() < 1e-15);
        let vac = block_before(0, &ProtocolParams::before(0.0, 0.3).unwrap(), &tol()).unwrap();
        assert_eq!(vac[(0, 0)], 1.0);
    }

    #[test]
    fn lossless_tmss_blocks() {
        // ρ^Γ of Σ α_n|n,n⟩: C_K has α_i α_{K−i} on the anti-diagonal only
        let lambda: f64 = 0.4;
        let p = ProtocolParams::before(lambda, 1.0).unwrap();
        let c = block_before(3, &p, &tol()).unwrap();
        let alpha = |n: i32| (1.0 - lambda * lambda).sqrt() * lambda.powi(n);
        for i in 0..4 {
            for j in 0..4 {
                let want = if i + j == 3 {
                    alpha(i as i32) * alpha(3 - i as i32)
                } else {
                    0.0
                };
                assert!((c[(i, j)] - want).abs() < 1e-16);
            }
        }
    }

    #[test]
    fn before_family_is_normalized() {
        let p = ProtocolParams::before(0.7, 0.5).unwrap();
        let f = block_family(&p, &Scenario::Before, &FamilyOptions::default()).unwrap();
        assert!((f.total_trace() - 1.0).abs() < 1e-12);
        assert!(f.is_normalized());
    }

    #[test]
    fn zero_squeezing_family_is_the_vacuum() {
        let p = ProtocolParams::before(0.0, 0.5).unwrap();
        let f = block_family(&p, &Scenario::Before, &FamilyOptions::default()).unwrap();
        assert_eq!(f.len(), 1);
        assert_eq!(f.block(0).unwrap()[(0, 0)], 1.0);
    }

    #[test]
    fn conditioned_blocks_vanish_without_photons() {
        let p = ProtocolParams::new(0.0, 0.5, 0.9).unwrap();
        assert_eq!(block_onoff(2, &p, &tol()).unwrap().amax(), 0.0);
        assert_eq!(block_pnr(2, 1, &p, &tol()).unwrap().amax(), 0.0);
        let p = ProtocolParams::new(0.5, 0.5, 1.0).unwrap();
        assert_eq!(block_onoff(1, &p, &tol()).unwrap().amax(), 0.0);
    }

    #[test]
    fn blocks_are_centrosymmetric() {
        let p = ProtocolParams::new(0.5, 0.5, 0.9).unwrap();
        for k in 0..6 {
            for c in [
                block_before(k, &p, &tol()).unwrap(),
                block_onoff(k, &p, &tol()).unwrap(),
                block_pnr(k, 2, &p, &tol()).unwrap(),
            ] {
                let n = k + 1;
                let scale = c.amax();
                for i in 0..n {
                    for j in 0..n {
                        assert!((c[(i, j)] - c[(n - 1 - i, n - 1 - j)]).abs() <= 1e-13 * scale);
                    }
                }
            }
        }
    }

    #[test]
    fn threshold_has_no_series() {
        let s = Scenario::Distilled(DetectorModel::threshold(2).unwrap());
        let p = ProtocolParams::new(0.5, 0.5, 0.9).unwrap();
        assert!(matches!(
            block_family(&p, &s, &FamilyOptions::default()),
            Err(Error::Unsupported(_))
        ));
    }
}
