//! Small helpers around `BigRational`: parsing, the "num/den" wire format,
//! floors and ceilings.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{HaloError, Result};

pub type Q = BigRational;

pub fn q(n: i64, d: i64) -> Q {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn qi(n: i64) -> Q {
    BigRational::from_integer(BigInt::from(n))
}

/// Always "num/den", also for integers.
pub fn fmt(x: &Q) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

/// Accepts "a", "a/b", and decimal-free signed forms.
pub fn parse(s: &str) -> Result<Q> {
    let s = s.trim();
    let bad = || HaloError::Config(format!("not a rational: {s:?}"));
    match s.split_once('/') {
        Some((a, b)) => {
            let a: BigInt = a.trim().parse().map_err(|_| bad())?;
            let b: BigInt = b.trim().parse().map_err(|_| bad())?;
            if b.is_zero() {
                return Err(bad());
            }
            Ok(BigRational::new(a, b))
        }
        None => Ok(BigRational::from_integer(s.parse().map_err(|_| bad())?)),
    }
}

pub fn floor(x: &Q) -> BigInt {
    x.numer().div_floor(x.denom())
}

pub fn ceil(x: &Q) -> BigInt {
    -((-x.numer()).div_floor(x.denom()))
}

pub fn floor_i64(x: &Q) -> i64 {
    floor(x).to_i64().expect("floor fits in i64")
}

pub fn ceil_i64(x: &Q) -> i64 {
    ceil(x).to_i64().expect("ceil fits in i64")
}

pub fn to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

pub fn binom(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

pub fn factorial(n: u64) -> BigInt {
    (1..=n).fold(BigInt::one(), |a, k| a * BigInt::from(k))
}

pub fn is_positive(x: &Q) -> bool {
    x.is_positive()
}
