//! Threshold transmittance T_L and optimal squeezing λ_opt.

use serde::{Deserialize, Serialize};

use super::eval::{en_after, EvalOptions};
use crate::closed::en_before;
use crate::detector::Scenario;
use crate::error::{check_range, Error, Result};
use crate::params::ProtocolParams;

/// Bisection stops once the bracket is this narrow.
pub const TL_BRACKET_WIDTH: f64 = 1e-12;
/// Largest transmittance probed; T = 1 heralds nothing.
pub const T_CEILING: f64 = 1.0 - 1e-9;
/// Initial lower end of the T bracket.
pub const T_FLOOR: f64 = 0.05;
/// Points of the coarse sign scan over T.
const SCAN_POINTS: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundMethod {
    ClosedForm,
    Bisection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundResult {
    pub t_l: f64,
    pub method: BoundMethod,
    pub bracket: (f64, f64),
    /// |E_N after(T_L) − E_N before|.
    pub residual: f64,
    /// Whether the coarse scan saw a single sign change.
    pub single_crossing: bool,
}

/// Smallest subtraction transmittance that still raises E_N.
///
/// The gain g(T) = E_N after(T) − E_N before is scanned on a coarse grid
/// first so the bracket is verified rather than assumed; the root is then
/// bisected to [`TL_BRACKET_WIDTH`].
pub fn find_tl(
    lambda: f64,
    eta: f64,
    scenario: &Scenario,
    opts: &EvalOptions,
) -> Result<BoundResult> {
    check_range("λ", lambda, lambda > 0.0 && lambda < 1.0, "(0, 1)")?;
    check_range("η", eta, eta > 0.0 && eta <= 1.0, "(0, 1]")?;
    if *scenario == Scenario::Before {
        return Err(Error::InvalidSpec("T_L needs a detector".into()));
    }
    let before = en_before(lambda, eta)?;
    let g = |t: f64| -> Result<f64> {
        Ok(en_after(&ProtocolParams::new(lambda, eta, t)?, scenario, opts)? - before)
    };
    let no_window = |detail: String| Error::NoDistillationWindow {
        lambda,
        eta,
        detail,
    };

    let hi = T_CEILING;
    let g_hi = g(hi)?;
    if !(g_hi > 0.0) {
        return Err(no_window(format!("gain at T = {hi} is {g_hi:e}")));
    }
    let mut lo = T_FLOOR;
    while g(lo)? >= 0.0 {
        lo /= 2.0;
        if lo < 1e-9 {
            return Err(no_window("gain stays positive down to T = 1e-9".into()));
        }
    }

    let mut crossings = 0;
    let mut prev = g(lo)?;
    for i in 1..=SCAN_POINTS {
        let t = lo + (hi - lo) * i as f64 / SCAN_POINTS as f64;
        let v = g(t)?;
        if (v >= 0.0) != (prev >= 0.0) {
            crossings += 1;
        }
        prev = v;
    }

    let (mut a, mut b) = (lo, hi);
    while b - a > TL_BRACKET_WIDTH {
        let m = 0.5 * (a + b);
        if g(m)? >= 0.0 {
            b = m;
        } else {
            a = m;
        }
    }
    let t_l = 0.5 * (a + b);
    Ok(BoundResult {
        t_l,
        method: BoundMethod::Bisection,
        bracket: (a, b),
        residual: g(t_l)?.abs(),
        single_crossing: crossings == 1,
    })
}

/// The η = 1 on-off bound from its closed form, in the same result shape.
pub fn tl_closed_form(lambda: f64) -> Result<BoundResult> {
    let t_l = crate::closed::tl_onoff_closed(lambda)?;
    let residual = (crate::closed::en_pure(lambda, t_l)? - en_before(lambda, 1.0)?).abs();
    Ok(BoundResult {
        t_l,
        method: BoundMethod::ClosedForm,
        bracket: (t_l, t_l),
        residual,
        single_crossing: true,
    })
}

/// Number of coarse grid points in λ.
pub const LAMBDA_GRID: usize = 64;
/// Golden-section stopping width in λ.
pub const LAMBDA_TOL: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaOpt {
    pub lambda_opt: f64,
    pub en_max: f64,
    /// Set when the objective is flat across the grid.
    pub plateau: Option<(f64, f64)>,
}

/// Coarse grid λ_i = (i + ½)/64.
pub fn lambda_grid() -> Vec<f64> {
    (0..LAMBDA_GRID)
        .map(|i| (i as f64 + 0.5) / LAMBDA_GRID as f64)
        .collect()
}

/// Squeezing that maximizes E_N after distillation at fixed (η, T).
pub fn find_lambda_opt(
    eta: f64,
    t: f64,
    scenario: &Scenario,
    opts: &EvalOptions,
) -> Result<LambdaOpt> {
    check_range("η", eta, eta > 0.0 && eta <= 1.0, "(0, 1]")?;
    check_range("T", t, t > 0.0 && t < 1.0, "(0, 1)")?;
    let f = |l: f64| -> Result<f64> { en_after(&ProtocolParams::new(l, eta, t)?, scenario, opts) };
    let grid = lambda_grid();
    let values = grid.iter().map(|&l| f(l)).collect::<Result<Vec<_>>>()?;
    // first maximum wins, so ties go to the smaller λ
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    let lowest = values.iter().copied().fold(f64::INFINITY, f64::min);
    if values[best] - lowest <= 1e-12 * values[best].abs().max(1e-300) {
        return Ok(LambdaOpt {
            lambda_opt: grid[0],
            en_max: values[best],
            plateau: Some((grid[0], grid[LAMBDA_GRID - 1])),
        });
    }
    let mut a = if best == 0 { 1e-9 } else { grid[best - 1] };
    let mut b = if best + 1 == LAMBDA_GRID {
        1.0 - 1e-9
    } else {
        grid[best + 1]
    };
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while b - a > LAMBDA_TOL {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d)?;
        }
    }
    let mut lambda_opt = 0.5 * (a + b);
    let mut en_max = f(lambda_opt)?;
    if values[best] > en_max {
        lambda_opt = grid[best];
        en_max = values[best];
    }
    Ok(LambdaOpt {
        lambda_opt,
        en_max,
        plateau: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed::tl_onoff_closed;
    use crate::detector::DetectorModel;

    fn onoff() -> Scenario {
        Scenario::Distilled(DetectorModel::on_off())
    }

    #[test]
    fn bisection_matches_closed_form() {
        let r = find_tl(0.5, 1.0, &onoff(), &EvalOptions::default()).unwrap();
        assert!((r.t_l - tl_onoff_closed(0.5).unwrap()).abs() < 1e-9);
        assert!(r.residual < 1e-9);
        assert!(r.single_crossing);
    }

    #[test]
    fn pnr_bound_sits_near_its_small_squeezing_limit() {
        let s = Scenario::Distilled(DetectorModel::pnr(2).unwrap());
        let r = find_tl(0.05, 1.0, &s, &EvalOptions::default()).unwrap();
        assert!((r.t_l - 1.0 / 3.0).abs() < 0.02, "{}", r.t_l);
    }

    #[test]
    fn optimum_is_interior() {
        let r = find_lambda_opt(1.0, 0.9, &onoff(), &EvalOptions::default()).unwrap();
        assert!(r.lambda_opt > 0.5 && r.lambda_opt < 1.0);
        assert!(r.en_max > 10f64.log2());
        assert!(r.plateau.is_none());
    }
}
