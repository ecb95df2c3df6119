use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};

use super::{ComplexityError, Result};

/// Binary entropy in bits, with `h(0) = h(1) = 0`.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(ComplexityError::Domain(format!("probability {p} outside [0, 1]")));
    }
    let term = |x: f64| if x == 0.0 { 0.0 } else { -x * x.log2() };
    Ok(term(p) + term(1.0 - p))
}

/// `log2 C(n, k)` from the exact binomial coefficient.
pub fn log_binomial(n: u64, k: u64) -> Result<f64> {
    if k > n {
        return Err(ComplexityError::Domain(format!("k = {k} exceeds n = {n}")));
    }
    let k = k.min(n - k);
    let mut c = BigUint::one();
    for i in 0..k {
        c = c * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    Ok(log2_big(&c))
}

fn log2_big(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().expect("fits in f64").log2();
    }
    // Keep the top 64 bits; the rest only shifts the exponent.
    let shift = bits - 64;
    let top = (x >> shift).to_f64().expect("64-bit value");
    top.log2() + shift as f64
}
