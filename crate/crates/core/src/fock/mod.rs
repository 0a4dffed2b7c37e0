//! Brute-force truncated Fock-space path.
//!
//! States live on two modes A, B with at most `n_max` photons each. Loss and
//! subtraction beamsplitters mix each arm with a vacuum ancilla; because the
//! ancilla starts empty, an arm photon number x can only split into
//! (x−e) signal photons plus e ancilla photons. Each arm step is therefore a
//! Kraus map K_e|x⟩ = ⟨x−e, e|V|x, 0⟩ |x−e⟩ weighted by the ancilla POVM,
//! applied to the dense two-mode density matrix one mode at a time.

mod beamsplitter;
mod povm;
mod transpose;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

pub use beamsplitter::{bs_unitary, BeamsplitterCoeffs, BsUnitary};
pub use povm::{make_povm, Povm};
pub use transpose::{
    negativity_eigen, partial_transpose_blocks, Negativity, EIGEN_CLAMP_REL, OFF_BLOCK_TOL,
};

use crate::detector::Scenario;
use crate::error::{check_range, Error, Result};
use crate::family::BlockFamily;
use crate::params::ProtocolParams;

/// Default requested tail tolerance on the TMSS norm deficit.
pub const DEFAULT_TAIL_TOL: f64 = 1e-6;
/// Default floor below which a heralded branch counts as empty.
pub const DEFAULT_PROB_FLOOR: f64 = 1e-300;

/// Largest per-mode cutoff the dense engine accepts.
pub const MAX_N_MAX: usize = 60;

/// Maximum photon number per mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FockCutoff(usize);

impl FockCutoff {
    pub const DEFAULT: FockCutoff = FockCutoff(30);

    pub fn new(n_max: usize) -> Self {
        Self(n_max)
    }

    pub fn n_max(&self) -> usize {
        self.0
    }

    /// Per-mode dimension n_max + 1.
    pub fn dim(&self) -> usize {
        self.0 + 1
    }

    /// λ^{2(n_max+1)}: the TMSS weight beyond the cutoff.
    pub fn tmss_deficit(&self, lambda: f64) -> f64 {
        lambda.powi(2 * (self.0 as i32 + 1))
    }

    /// The default cutoff (30) when it meets `tail_tol`, otherwise the
    /// smallest cutoff that does. Refuses beyond [`MAX_N_MAX`].
    pub fn for_lambda(lambda: f64, tail_tol: f64) -> Result<Self> {
        let mut c = Self::DEFAULT;
        while c.tmss_deficit(lambda) > tail_tol {
            if c.0 >= MAX_N_MAX {
                return Err(Error::Truncation {
                    n_max: c.0,
                    achieved: c.tmss_deficit(lambda),
                    requested: tail_tol,
                });
            }
            c.0 += 1;
        }
        Ok(c)
    }
}

/// Real amplitudes ψ(n_A, n_B) of a truncated two-mode pure state.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoModePure {
    amplitudes: Vec<f64>,
    cutoff: FockCutoff,
    norm_deficit: f64,
}

impl TwoModePure {
    pub fn cutoff(&self) -> FockCutoff {
        self.cutoff
    }

    pub fn amplitude(&self, a: usize, b: usize) -> f64 {
        self.amplitudes[a * self.cutoff.dim() + b]
    }

    /// Squared norm dropped by the truncation.
    pub fn norm_deficit(&self) -> f64 {
        self.norm_deficit
    }

    pub fn squared_norm(&self) -> f64 {
        self.amplitudes.iter().map(|x| x * x).sum()
    }
}

/// Σ_n √(1−λ²) λⁿ |n, n⟩ truncated at the cutoff.
pub fn make_tmss(lambda: f64, cutoff: FockCutoff) -> Result<TwoModePure> {
    check_range("λ", lambda, (0.0..1.0).contains(&lambda), "[0, 1)")?;
    let d = cutoff.dim();
    let mut amplitudes = vec![0.0; d * d];
    let norm = (1.0 - lambda * lambda).sqrt();
    for n in 0..d {
        amplitudes[n * d + n] = norm * lambda.powi(n as i32);
    }
    Ok(TwoModePure {
        amplitudes,
        cutoff,
        norm_deficit: cutoff.tmss_deficit(lambda),
    })
}

/// Dense two-mode density matrix with row/column index a·(n_max+1) + b.
#[derive(Debug, Clone, PartialEq)]
pub struct FockDensity {
    matrix: DMatrix<f64>,
    cutoff: FockCutoff,
    norm_deficit: f64,
}

impl FockDensity {
    /// # Panics
    /// If `matrix` is not (n_max+1)² square.
    pub fn from_matrix(matrix: DMatrix<f64>, cutoff: FockCutoff, norm_deficit: f64) -> Self {
        let d2 = cutoff.dim() * cutoff.dim();
        assert_eq!(matrix.shape(), (d2, d2), "density matrix has wrong shape");
        Self {
            matrix,
            cutoff,
            norm_deficit,
        }
    }

    /// |ψ⟩⟨ψ|.
    pub fn pure(state: &TwoModePure) -> Self {
        let v = nalgebra::DVector::from_column_slice(&state.amplitudes);
        Self::from_matrix(&v * v.transpose(), state.cutoff, state.norm_deficit)
    }

    pub fn cutoff(&self) -> FockCutoff {
        self.cutoff
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Upper bound on the probability mass lost to truncation upstream.
    pub fn norm_deficit(&self) -> f64 {
        self.norm_deficit
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace()
    }

    pub fn index(&self, a: usize, b: usize) -> usize {
        a * self.cutoff.dim() + b
    }

    /// ⟨a, b| ρ |a2, b2⟩.
    pub fn element(&self, a: usize, b: usize, a2: usize, b2: usize) -> f64 {
        self.matrix[(self.index(a, b), self.index(a2, b2))]
    }

    /// ‖ρ − ρᵀ‖_max.
    pub fn asymmetry(&self) -> f64 {
        let m = &self.matrix;
        let n = m.nrows();
        let mut worst = 0.0f64;
        for c in 0..n {
            for r in 0..c {
                worst = worst.max((m[(r, c)] - m[(c, r)]).abs());
            }
        }
        worst
    }

    /// Largest |⟨a,b|ρ|a2,b2⟩| with a − a2 ≠ b − b2.
    pub fn photon_correlation_violation(&self) -> f64 {
        let d = self.cutoff.dim();
        let mut worst = 0.0f64;
        for a2 in 0..d {
            for b2 in 0..d {
                let col = self.index(a2, b2);
                for a in 0..d {
                    for b in 0..d {
                        if a as isize - a2 as isize != b as isize - b2 as isize {
                            worst = worst.max(self.matrix[(self.index(a, b), col)].abs());
                        }
                    }
                }
            }
        }
        worst
    }

    /// Smallest eigenvalue. Diagonalizes per sector a − b when the state
    /// has no cross-sector coherences, densely otherwise.
    pub fn min_eigenvalue(&self) -> f64 {
        if self.photon_correlation_violation() > 0.0 {
            return SymmetricEigen::new(self.matrix.clone()).eigenvalues.min();
        }
        let d = self.cutoff.dim() as isize;
        let mut lowest = f64::INFINITY;
        for s in -(d - 1)..d {
            let idx: Vec<usize> = (0..d)
                .filter_map(|a| {
                    let b = a - s;
                    (0..d)
                        .contains(&b)
                        .then(|| self.index(a as usize, b as usize))
                })
                .collect();
            let sub = DMatrix::from_fn(idx.len(), idx.len(), |i, j| self.matrix[(idx[i], idx[j])]);
            lowest = lowest.min(SymmetricEigen::new(sub).eigenvalues.min());
        }
        lowest
    }

    /// Copy rescaled to unit trace.
    pub fn normalized(&self) -> Result<Self> {
        let tr = self.trace();
        if tr <= 0.0 {
            return Err(Error::Undefined {
                quantity: "normalized state",
                reason: "trace is not positive",
            });
        }
        Ok(Self {
            matrix: &self.matrix / tr,
            cutoff: self.cutoff,
            norm_deficit: self.norm_deficit / tr,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Arm {
    A,
    B,
}

/// Applies ρ → Σ_e w_e K_e ρ K_eᵀ on one arm, with K_e|x⟩ = ⟨x−e, e|V|x, 0⟩ |x−e⟩.
fn apply_arm(
    rho: &DMatrix<f64>,
    d: usize,
    arm: Arm,
    u: &BsUnitary,
    weights: &[f64],
) -> DMatrix<f64> {
    let n = d * d;
    // kraus[e][x]
    let kraus: Vec<Vec<f64>> = (0..d)
        .map(|e| (0..d).map(|x| u.split_amplitude(x, e)).collect())
        .collect();
    let src = rho.as_slice();
    let mut out = DMatrix::<f64>::zeros(n, n);
    let dst = out.as_mut_slice();
    for (e, &w) in weights.iter().enumerate().take(d) {
        if w == 0.0 {
            continue;
        }
        let k = &kraus[e];
        for a2 in 0..d {
            for b2 in 0..d {
                let col = a2 * d + b2;
                match arm {
                    Arm::A => {
                        if a2 + e >= d {
                            continue;
                        }
                        let kc = w * k[a2 + e];
                        let src_col = ((a2 + e) * d + b2) * n;
                        for a in 0..d - e {
                            let ka = kc * k[a + e];
                            if ka == 0.0 {
                                continue;
                            }
                            let s = src_col + (a + e) * d;
                            let t = col * n + a * d;
                            for b in 0..d {
                                dst[t + b] += ka * src[s + b];
                            }
                        }
                    }
                    Arm::B => {
                        if b2 + e >= d {
                            continue;
                        }
                        let kc = w * k[b2 + e];
                        let src_col = (a2 * d + b2 + e) * n;
                        for a in 0..d {
                            let s = src_col + a * d + e;
                            let t = col * n + a * d;
                            for b in 0..d - e {
                                dst[t + b] += kc * k[b + e] * src[s + b];
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

/// Sends both arms of `state` through a lossy channel of transmittance η.
///
/// Refuses when the truncated input already misses more than `tail_tol` of
/// its norm.
pub fn lossy_channel_state(state: &TwoModePure, eta: f64, tail_tol: f64) -> Result<FockDensity> {
    let u = bs_unitary(eta, state.cutoff)?;
    lossy_channel_with(state, &u, tail_tol)
}

/// [`lossy_channel_state`] with an explicit loss beamsplitter.
pub fn lossy_channel_with(
    state: &TwoModePure,
    loss: &BsUnitary,
    tail_tol: f64,
) -> Result<FockDensity> {
    if state.norm_deficit > tail_tol {
        return Err(Error::Truncation {
            n_max: state.cutoff.n_max(),
            achieved: state.norm_deficit,
            requested: tail_tol,
        });
    }
    let d = state.cutoff.dim();
    let trace_out = vec![1.0; d];
    let rho = FockDensity::pure(state);
    let m = apply_arm(&rho.matrix, d, Arm::A, loss, &trace_out);
    let m = apply_arm(&m, d, Arm::B, loss, &trace_out);
    Ok(FockDensity::from_matrix(
        m,
        state.cutoff,
        state.norm_deficit,
    ))
}

/// Couples each arm to a vacuum ancilla on a transmittance-T beamsplitter,
/// projects the ancillas on `povm_c` ⊗ `povm_d` and traces them out.
///
/// Returns the unnormalized conditional state and its trace (the heralding
/// probability).
pub fn subtract_photons(
    rho: &FockDensity,
    t: f64,
    povm_c: &Povm,
    povm_d: &Povm,
    prob_floor: f64,
) -> Result<(FockDensity, f64)> {
    check_range("T", t, t > 0.0 && t <= 1.0, "(0, 1]")?;
    let u = bs_unitary(t, rho.cutoff)?;
    subtract_photons_with(rho, &u, povm_c, povm_d, prob_floor)
}

/// [`subtract_photons`] with an explicit subtraction beamsplitter.
pub fn subtract_photons_with(
    rho: &FockDensity,
    subtraction: &BsUnitary,
    povm_c: &Povm,
    povm_d: &Povm,
    prob_floor: f64,
) -> Result<(FockDensity, f64)> {
    let d = rho.cutoff.dim();
    let m = apply_arm(&rho.matrix, d, Arm::A, subtraction, povm_c.weights());
    let m = apply_arm(&m, d, Arm::B, subtraction, povm_d.weights());
    let out = FockDensity::from_matrix(m, rho.cutoff, rho.norm_deficit);
    let p = out.trace();
    if !(p >= prob_floor) {
        return Err(Error::EmptyBranch {
            probability: p,
            floor: prob_floor,
        });
    }
    Ok((out, p))
}

/// Settings for a full oracle run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub cutoff: FockCutoff,
    pub tail_tol: f64,
    pub prob_floor: f64,
}

impl OracleConfig {
    pub fn new(cutoff: FockCutoff) -> Self {
        Self {
            cutoff,
            tail_tol: DEFAULT_TAIL_TOL,
            prob_floor: DEFAULT_PROB_FLOOR,
        }
    }

    /// Default cutoff for λ, see [`FockCutoff::for_lambda`].
    pub fn for_lambda(lambda: f64) -> Result<Self> {
        Ok(Self::new(FockCutoff::for_lambda(lambda, DEFAULT_TAIL_TOL)?))
    }
}

/// Everything the oracle path produces for one protocol point.
#[derive(Debug, Clone)]
pub struct OracleOutcome {
    /// Unnormalized heralded state (the lossy state itself for [`Scenario::Before`]).
    pub state: FockDensity,
    /// Heralding probability; the state trace for [`Scenario::Before`].
    pub probability: f64,
    pub blocks: BlockFamily,
    pub negativity: Negativity,
}

/// TMSS → lossy channel → (optional) heralded subtraction → eigen negativity.
pub fn run_oracle(
    p: &ProtocolParams,
    scenario: &Scenario,
    cfg: &OracleConfig,
) -> Result<OracleOutcome> {
    let loss = bs_unitary(p.eta(), cfg.cutoff)?;
    let sub = bs_unitary(p.t(), cfg.cutoff)?;
    run_oracle_with(p, scenario, cfg, &loss, &sub)
}

/// [`run_oracle`] with explicit beamsplitters.
pub fn run_oracle_with(
    p: &ProtocolParams,
    scenario: &Scenario,
    cfg: &OracleConfig,
    loss: &BsUnitary,
    subtraction: &BsUnitary,
) -> Result<OracleOutcome> {
    let tmss = make_tmss(p.lambda(), cfg.cutoff)?;
    let mixed = lossy_channel_with(&tmss, loss, cfg.tail_tol)?;
    let (state, probability) = match scenario {
        Scenario::Before => {
            let tr = mixed.trace();
            (mixed, tr)
        }
        Scenario::Distilled(det) => {
            let povm = make_povm(det, det.herald(), cfg.cutoff)?;
            subtract_photons_with(&mixed, subtraction, &povm, &povm, cfg.prob_floor)?
        }
    };
    let blocks = partial_transpose_blocks(&state, OFF_BLOCK_TOL)?;
    let negativity = negativity_eigen(&blocks)?;
    Ok(OracleOutcome {
        state,
        probability,
        blocks,
        negativity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detector::{DetectorModel, Outcome};

    #[test]
    fn vacuum_at_zero_squeezing() {
        let s = make_tmss(0.0, FockCutoff::new(5)).unwrap();
        assert_eq!(s.amplitude(0, 0), 1.0);
        assert_eq!(s.squared_norm(), 1.0);
        assert_eq!(s.norm_deficit(), 0.0);
    }

    #[test]
    fn tmss_deficit_is_geometric_tail() {
        let s = make_tmss(0.5, FockCutoff::new(10)).unwrap();
        assert!((s.norm_deficit() - 0.5f64.powi(22)).abs() < 1e-20);
        assert!((1.0 - s.squared_norm() - s.norm_deficit()).abs() < 1e-15);
        assert!(make_tmss(1.0, FockCutoff::new(10)).is_err());
    }

    #[test]
    fn lossless_channel_keeps_the_projector() {
        let s = make_tmss(0.4, FockCutoff::new(8)).unwrap();
        let rho = lossy_channel_state(&s, 1.0, 1e-6).unwrap();
        let pure = FockDensity::pure(&s);
        assert!((rho.matrix() - pure.matrix()).amax() < 1e-15);
    }

    #[test]
    fn lossy_state_is_a_valid_density() {
        let s = make_tmss(0.6, FockCutoff::new(12)).unwrap();
        let rho = lossy_channel_state(&s, 0.3, 1e-4).unwrap();
        assert!(rho.asymmetry() < 1e-15);
        assert!(rho.photon_correlation_violation() < 1e-14);
        assert!(rho.min_eigenvalue() > -1e-10);
        assert!((rho.trace() - (1.0 - s.norm_deficit())).abs() < 1e-13);
    }

    #[test]
    fn refuses_unattainable_tail() {
        let s = make_tmss(0.9, FockCutoff::new(5)).unwrap();
        match lossy_channel_state(&s, 0.5, 1e-6) {
            Err(Error::Truncation { achieved, .. }) => {
                assert!((achieved - 0.9f64.powi(12)).abs() < 1e-15)
            }
            other => panic!("expected truncation error, got {other:?}"),
        }
        assert!(FockCutoff::for_lambda(0.99, 1e-6).is_err());
        assert_eq!(FockCutoff::for_lambda(0.8, 1e-6).unwrap().n_max(), 30);
    }

    #[test]
    fn nothing_reflected_at_unit_transmittance() {
        let c = FockCutoff::new(10);
        let rho = lossy_channel_state(&make_tmss(0.5, c).unwrap(), 0.7, 1e-4).unwrap();
        let on = make_povm(&DetectorModel::on_off(), Outcome::On, c).unwrap();
        match subtract_photons(&rho, 1.0, &on, &on, 1e-300) {
            Err(Error::EmptyBranch { probability, .. }) => assert_eq!(probability, 0.0),
            other => panic!("expected empty branch, got {other:?}"),
        }
    }

    #[test]
    fn outcome_probabilities_sum_to_input_trace() {
        let c = FockCutoff::new(14);
        let rho = lossy_channel_state(&make_tmss(0.5, c).unwrap(), 0.6, 1e-6).unwrap();
        let det = DetectorModel::on_off();
        let mut total = 0.0;
        for lc in det.outcomes(c.n_max()) {
            for ld in det.outcomes(c.n_max()) {
                let pc = make_povm(&det, lc, c).unwrap();
                let pd = make_povm(&det, ld, c).unwrap();
                let (_, p) = subtract_photons(&rho, 0.8, &pc, &pd, 0.0).unwrap();
                total += p;
            }
        }
        assert!((total - rho.trace()).abs() < 1e-12);
    }
}
