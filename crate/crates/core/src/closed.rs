//! Truncation-free closed forms, plus the Gaussian covariance-matrix route
//! for the lossy state before distillation.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::{Matrix2, Matrix4};
use serde::{Deserialize, Serialize};

use crate::combin::{binomial, ln_binomial};
use crate::error::{check_range, Error, Result};
use crate::params::SeriesTolerance;

/// Which closed form produced a value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FormulaId {
    EnBefore,
    POnOff,
    EnOnOff,
    EnPure,
    PPure,
    TlOnOff,
    PPnr,
    EnPnr,
    PMixed,
    FBefore,
    GaussianEn,
}

impl fmt::Display for FormulaId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FormulaId::EnBefore => "en_before",
            FormulaId::POnOff => "p_onoff",
            FormulaId::EnOnOff => "en_onoff",
            FormulaId::EnPure => "en_pure",
            FormulaId::PPure => "p_pure",
            FormulaId::TlOnOff => "tl_onoff_closed",
            FormulaId::PPnr => "p_pnr",
            FormulaId::EnPnr => "en_pnr",
            FormulaId::PMixed => "p_mixed",
            FormulaId::FBefore => "f_before",
            FormulaId::GaussianEn => "gaussian_en",
        };
        f.write_str(s)
    }
}

/// A closed-form value tagged with the formula it came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormResult {
    pub value: f64,
    pub formula: FormulaId,
}

impl ClosedFormResult {
    pub fn new(formula: FormulaId, value: Result<f64>) -> Result<Self> {
        let value = value?;
        if !value.is_finite() {
            return Err(Error::Undefined {
                quantity: "closed form",
                reason: "evaluated to a non-finite value",
            });
        }
        Ok(Self { value, formula })
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    check_range("λ", lambda, (0.0..1.0).contains(&lambda), "[0, 1)")
}

fn check_eta(eta: f64) -> Result<()> {
    check_range("η", eta, (0.0..=1.0).contains(&eta), "[0, 1]")
}

fn check_t(t: f64) -> Result<()> {
    check_range("T", t, t > 0.0 && t <= 1.0, "(0, 1]")
}

fn check_count(name: &'static str, n: usize) -> Result<()> {
    check_range(name, n as f64, n >= 1, "≥ 1")
}

/// The heralded state exists only when some photon can reach the detectors.
fn require_branch(lambda: f64, eta: f64, t: f64) -> Result<()> {
    if lambda == 0.0 || eta == 0.0 || t == 1.0 {
        Err(Error::Undefined {
            quantity: "conditional state",
            reason: "the heralding probability vanishes",
        })
    } else {
        Ok(())
    }
}

/// log₂[(1+λ) / (1 − λ(2η−1))].
pub fn en_before(lambda: f64, eta: f64) -> Result<f64> {
    check_lambda(lambda)?;
    check_eta(eta)?;
    Ok(((1.0 + lambda) / (1.0 - lambda * (2.0 * eta - 1.0))).log2())
}

/// Probability that both on-off detectors click.
pub fn p_onoff(lambda: f64, eta: f64, t: f64) -> Result<f64> {
    check_lambda(lambda)?;
    check_eta(eta)?;
    check_t(t)?;
    let l2 = lambda * lambda;
    let tt = 1.0 - eta * (1.0 - t);
    let er = 1.0 - tt;
    Ok(l2 * er * er * (1.0 + l2 * tt) / ((1.0 - l2 * tt) * (1.0 - l2 * tt * tt)))
}

/// E_N of the state heralded by two on-off clicks.
pub fn en_onoff(lambda: f64, eta: f64, t: f64) -> Result<f64> {
    check_lambda(lambda)?;
    check_eta(eta)?;
    check_t(t)?;
    require_branch(lambda, eta, t)?;
    let (l, e) = (lambda, eta);
    let l2 = l * l;
    let r = 1.0 - t;
    let tt = 1.0 - e * r;
    let rt = 1.0 - e * t;
    let loss = 1.0 - e;
    let d = (1.0 - l * e * t).powi(2);
    let first = (1.0 - l2) * e * r / (d - l2 * loss * rt);
    let second = rt / ((1.0 - l) * (1.0 - l * (2.0 * e * t - 1.0))) - loss / (d - l2 * loss * loss);
    let third = (1.0 - l2 * tt) * (1.0 - l2 * tt * tt) / ((1.0 - tt).powi(2) * (1.0 + l2 * tt));
    Ok(first.log2() + second.log2() + third.log2())
}

/// [`en_onoff`] at η = 1.
pub fn en_pure(lambda: f64, t: f64) -> Result<f64> {
    check_lambda(lambda)?;
    check_t(t)?;
    require_branch(lambda, 1.0, t)?;
    let l = lambda;
    let r = 1.0 - t;
    let num = (1.0 + l) * (1.0 - l * l * t) * (1.0 + l * t);
    let den = (1.0 - l * t) * (1.0 + l * l * t) * (1.0 - l * t + l * r);
    Ok((num / den).log2())
}

/// [`p_onoff`] at η = 1.
pub fn p_pure(lambda: f64, t: f64) -> Result<f64> {
    check_lambda(lambda)?;
    check_t(t)?;
    let l2 = lambda * lambda;
    let r = 1.0 - t;
    Ok(l2 * r * r * (1.0 + l2 * t) / ((1.0 - l2 * t) * (1.0 - l2 * t * t)))
}

/// Minimal on-off subtraction transmittance that still raises E_N, at η = 1.
///
/// Root of a cubic in trigonometric form; the arccos argument is clamped to
/// [−1, 1] when it drifts out by at most 1e−12.
pub fn tl_onoff_closed(lambda: f64) -> Result<f64> {
    check_range("λ", lambda, lambda > 0.0 && lambda < 1.0, "(0, 1)")?;
    let l = lambda;
    let (l2, l3) = (l * l, l * l * l);
    let xi = l2 * (l2 * l2 + 2.0 * l3 - 4.0 * l2 + 4.0 * l + 1.0);
    let zeta = l * (l3 + 8.0 * l2 - 3.0 * l + 2.0);
    let c = l2 + l - 1.0;
    let arg = (3.0 * l3 * zeta - 2.0 * l * c * xi) / (2.0 * xi * xi.sqrt());
    if arg.abs() > 1.0 + 1e-12 {
        return Err(Error::Domain {
            name: "arccos argument",
            value: arg,
            domain: "[-1, 1]",
        });
    }
    let theta = arg.clamp(-1.0, 1.0).acos();
    Ok((l * c + 2.0 * xi.sqrt() * (PI / 6.0 - theta / 3.0).sin()) / (3.0 * l3))
}

/// Σ_k C(ℓ,k)² x^{2k}.
fn binomial_square_sum(l: usize, x: f64) -> f64 {
    (0..=l)
        .map(|k| binomial(l, k).powi(2) * x.powi(2 * k as i32))
        .sum()
}

/// Probability that both PNR detectors count exactly ℓ photons.
pub fn p_pnr(lambda: f64, eta: f64, t: f64, l: usize) -> Result<f64> {
    check_lambda(lambda)?;
    check_eta(eta)?;
    check_t(t)?;
    check_count("ℓ", l)?;
    let l2 = lambda * lambda;
    let r = 1.0 - t;
    let tt = 1.0 - eta * r;
    let den = 1.0 - l2 * tt * tt;
    let x = lambda * eta * r / den;
    Ok((1.0 - l2) / den * x.powi(2 * l as i32) * binomial_square_sum(l, lambda * tt))
}

/// E_N of the state heralded by ℓ counts on both PNR detectors.
pub fn en_pnr(lambda: f64, eta: f64, t: f64, l: usize) -> Result<f64> {
    check_lambda(lambda)?;
    check_eta(eta)?;
    check_t(t)?;
    check_count("ℓ", l)?;
    require_branch(lambda, eta, t)?;
    let r = 1.0 - t;
    let tt = 1.0 - eta * r;
    let lead = ((1.0 + lambda * tt) / (1.0 - lambda * (eta * t + eta - 1.0))).log2();
    let a = lambda * (1.0 - eta);
    let b = 1.0 - lambda * eta * t;
    let num: f64 = (0..=l)
        .map(|k| binomial(l, k).powi(2) * a.powi(2 * k as i32) * b.powi(2 * (l - k) as i32))
        .sum();
    Ok((2 * l + 1) as f64 * lead + num.log2() - binomial_square_sum(l, lambda * tt).log2())
}

/// Success probability for threshold detectors that report "on" at ≥ m counts.
///
/// (1−λ²) Σ_{n≥m} λ^{2n} P(Bin(n, ηR) ≥ m)², with the binomial tail summed
/// directly (ηR + T̃ = 1) so nothing cancels.
pub fn p_mixed(lambda: f64, eta: f64, t: f64, m: usize, tol: &SeriesTolerance) -> Result<f64> {
    check_lambda(lambda)?;
    check_eta(eta)?;
    check_t(t)?;
    check_count("m", m)?;
    let er = eta * (1.0 - t);
    if lambda == 0.0 || er == 0.0 {
        return Ok(0.0);
    }
    let (ln_er, ln_tt) = (er.ln(), (1.0 - er).ln());
    let ln_l2 = 2.0 * lambda.ln();
    let tail = |n: usize| -> f64 {
        (m..=n)
            .map(|k| {
                let ln_tt_pow = if n == k { 0.0 } else { (n - k) as f64 * ln_tt };
                (ln_binomial(n, k) + k as f64 * ln_er + ln_tt_pow).exp()
            })
            .sum::<f64>()
            .min(1.0)
    };
    let mut sum = 0.0;
    let mut small = 0;
    let mut last = 0.0;
    for n in m..m + tol.max_terms {
        let q = tail(n);
        last = (n as f64 * ln_l2).exp() * q * q;
        sum += last;
        if last <= tol.term_rel_tol * sum {
            small += 1;
            if small >= tol.consecutive_small {
                return Ok((1.0 - lambda * lambda) * sum);
            }
        } else {
            small = 0;
        }
    }
    Err(Error::Convergence {
        context: format!("threshold success probability at λ = {lambda}"),
        terms: tol.max_terms,
        last_term: last,
        partial_sum: sum,
    })
}

/// Average coherent-state teleportation fidelity with the lossy state as resource.
pub fn f_before(lambda: f64, eta: f64) -> Result<f64> {
    check_lambda(lambda)?;
    check_eta(eta)?;
    let (l, e) = (lambda, eta);
    let le = l * e;
    let num = (1.0 + l) * (2.0 - le.powi(3) + le * le * (l + 3.0) - le * (l + 4.0));
    let den = 2.0 * (2.0 - 2.0 * le - l * le + le * le) * (1.0 - le) * (1.0 + l - le);
    Ok(num / den)
}

/// E_N of the lossy state from its covariance matrix (vacuum variance 1).
///
/// The TMSS has blocks a·1 and c·Z with a = (1+λ²)/(1−λ²), c = 2λ/(1−λ²);
/// loss maps σ → ησ + (1−η)·1. Transposing mode A flips its momentum, and
/// the smaller symplectic eigenvalue ν̃ of the result gives
/// E_N = max(0, −log₂ ν̃).
pub fn gaussian_en(lambda: f64, eta: f64) -> Result<f64> {
    check_lambda(lambda)?;
    check_eta(eta)?;
    let l2 = lambda * lambda;
    let a = (1.0 + l2) / (1.0 - l2);
    let c = 2.0 * lambda / (1.0 - l2);
    #[rustfmt::skip]
    let tmss = Matrix4::new(
        a, 0.0, c, 0.0,
        0.0, a, 0.0, -c,
        c, 0.0, a, 0.0,
        0.0, -c, 0.0, a,
    );
    let sigma = tmss * eta + Matrix4::identity() * (1.0 - eta);
    let flip = Matrix4::from_diagonal(&nalgebra::Vector4::new(1.0, -1.0, 1.0, 1.0));
    let st = flip * sigma * flip;
    let block = |r: usize, c: usize| -> Matrix2<f64> { st.fixed_view::<2, 2>(r, c).into_owned() };
    let delta =
        block(0, 0).determinant() + block(2, 2).determinant() + 2.0 * block(0, 2).determinant();
    let det = st.determinant();
    // ν² = (Δ − √(Δ² − 4 det))/2, rewritten to avoid cancellation
    let nu2 = 2.0 * det / (delta + (delta * delta - 4.0 * det).max(0.0).sqrt());
    Ok((-0.5 * nu2.log2()).max(0.0))
}
