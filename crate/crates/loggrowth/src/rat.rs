//! Small helpers around exact rationals.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Q = BigRational;

pub fn q(num: i64, den: i64) -> Q {
    Q::new(BigInt::from(num), BigInt::from(den))
}

pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn to_f64(x: &Q) -> f64 {
    match (x.numer().to_f64(), x.denom().to_f64()) {
        (Some(n), Some(d)) if n.is_finite() && d.is_finite() => n / d,
        _ => {
            // Fall back to a scaled division for huge operands.
            let shift = x.numer().bits().max(x.denom().bits()) as i64 - 900;
            let n = (x.numer() >> shift.max(0) as usize).to_f64().unwrap_or(0.0);
            let d = (x.denom() >> shift.max(0) as usize).to_f64().unwrap_or(1.0);
            n / d
        }
    }
}

pub fn floor_i64(x: &Q) -> i64 {
    x.floor().to_integer().to_i64().expect("rational floor out of i64 range")
}

pub fn ceil_i64(x: &Q) -> i64 {
    x.ceil().to_integer().to_i64().expect("rational ceil out of i64 range")
}

/// Renders `a/b` or `a` when the denominator is one.
pub fn fmt_q(x: &Q) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

pub fn parse_q(s: &str) -> Option<Q> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once('/') {
        let a: BigInt = a.trim().parse().ok()?;
        let b: BigInt = b.trim().parse().ok()?;
        if b.is_zero() {
            return None;
        }
        Some(Q::new(a, b))
    } else {
        let a: BigInt = s.parse().ok()?;
        Some(Q::from_integer(a))
    }
}

/// Best rational approximation of `x` with denominator at most `max_den`.
pub fn snap(x: f64, max_den: u64) -> Q {
    let mut best = qi(x.round() as i64);
    let mut best_err = (x - x.round()).abs();
    for d in 1..=max_den.max(1) {
        let n = (x * d as f64).round() as i64;
        let err = (x - n as f64 / d as f64).abs();
        if err + 1e-12 < best_err {
            best = q(n, d as i64);
            best_err = err;
        }
    }
    best
}

pub fn abs_q(x: &Q) -> Q {
    x.abs()
}

pub fn gcd_i64(a: i64, b: i64) -> i64 {
    a.gcd(&b)
}

pub fn is_integer(x: &Q) -> bool {
    x.denom().is_one()
}

pub fn zero() -> Q {
    Q::zero()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snapping_prefers_small_denominators() {
        assert_eq!(snap(0.98, 4), qi(1));
        assert_eq!(snap(0.51, 4), q(1, 2));
        assert_eq!(snap(0.0, 8), qi(0));
        assert_eq!(snap(0.74, 4), q(3, 4));
    }

    #[test]
    fn parse_and_format_round_trip() {
        for s in ["3", "-1/2", "7/4"] {
            assert_eq!(fmt_q(&parse_q(s).unwrap()), s);
        }
        assert!(parse_q("1/0").is_none());
    }
}
