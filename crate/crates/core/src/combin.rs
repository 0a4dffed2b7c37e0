//! Log-space factorials and powers shared by the series evaluators.

use std::sync::OnceLock;

const TABLE_LEN: usize = 2048;

fn table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        (0..TABLE_LEN as u64)
            .map(statrs::function::factorial::ln_factorial)
            .collect()
    })
}

/// ln(k!).
pub fn ln_factorial(k: usize) -> f64 {
    if k < TABLE_LEN {
        table()[k]
    } else {
        statrs::function::factorial::ln_factorial(k as u64)
    }
}

/// ln C(n, k); −∞ when k > n.
pub fn ln_binomial(n: usize, k: usize) -> f64 {
    if k > n {
        f64::NEG_INFINITY
    } else {
        ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
    }
}

/// C(n, k) as a float.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        0.0
    } else if n <= 60 {
        // exact in u128 for this range
        let k = k.min(n - k);
        let mut acc: u128 = 1;
        for i in 0..k {
            acc = acc * (n - i) as u128 / (i + 1) as u128;
        }
        acc as f64
    } else {
        ln_binomial(n, k).exp()
    }
}

/// `exponent · ln(base)` with the convention 0⁰ = 1.
pub fn ln_pow(ln_base: f64, exponent: f64) -> f64 {
    if exponent == 0.0 {
        0.0
    } else {
        exponent * ln_base
    }
}

/// ln(x) with ln(0) = −∞.
pub fn ln0(x: f64) -> f64 {
    if x == 0.0 {
        f64::NEG_INFINITY
    } else {
        x.ln()
    }
}
