//! Residues modulo p^N packed in a `u128`.
//!
//! Odd moduli use Montgomery reduction with R = 2^128; powers of two reduce by
//! masking. The modulus must stay below 2^126 so sums of two residues never
//! overflow.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};

#[derive(Clone, Debug, PartialEq, Eq)]
enum Reducer {
    Mask(u128),
    Mont { inv: u128, r2: u128 },
}

/// The ring Z/p^N.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Zpn {
    p: u64,
    digits: u32,
    m: u128,
    red: Reducer,
}

#[inline]
fn mul_wide(a: u128, b: u128) -> (u128, u128) {
    let (a0, a1) = (a as u64 as u128, a >> 64);
    let (b0, b1) = (b as u64 as u128, b >> 64);
    let p00 = a0 * b0;
    let p01 = a0 * b1;
    let p10 = a1 * b0;
    let p11 = a1 * b1;
    let mid = (p00 >> 64) + (p01 as u64 as u128) + (p10 as u64 as u128);
    let lo = (p00 as u64 as u128) | (mid << 64);
    let hi = p11 + (p01 >> 64) + (p10 >> 64) + (mid >> 64);
    (hi, lo)
}

fn slow_mulmod(mut a: u128, mut b: u128, m: u128) -> u128 {
    let mut acc = 0u128;
    a %= m;
    while b > 0 {
        if b & 1 == 1 {
            acc = (acc + a) % m;
        }
        a = (a + a) % m;
        b >>= 1;
    }
    acc
}

/// Largest N with p^N < 2^126.
pub fn max_digits(p: u64) -> u32 {
    let mut n = 0u32;
    let mut v: u128 = 1;
    while let Some(next) = v.checked_mul(p as u128) {
        if next >= (1u128 << 126) {
            break;
        }
        v = next;
        n += 1;
    }
    n
}

impl Zpn {
    /// Panics if p^digits does not fit below 2^126.
    pub fn new(p: u64, digits: u32) -> Self {
        assert!(p >= 2, "p must be at least 2");
        assert!(
            digits >= 1 && digits <= max_digits(p),
            "precision {digits} out of range for p={p}"
        );
        let m = (p as u128).pow(digits);
        let red = if p == 2 {
            Reducer::Mask(m - 1)
        } else {
            // Newton iteration for m^{-1} mod 2^128.
            let mut x: u128 = 1;
            for _ in 0..7 {
                x = x.wrapping_mul(2u128.wrapping_sub(m.wrapping_mul(x)));
            }
            let inv = x.wrapping_neg();
            let r1 = (u128::MAX % m + 1) % m;
            let r2 = slow_mulmod(r1, r1, m);
            Reducer::Mont { inv, r2 }
        };
        Zpn { p, digits, m, red }
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn digits(&self) -> u32 {
        self.digits
    }

    pub fn modulus(&self) -> u128 {
        self.m
    }

    #[inline]
    fn redc(&self, hi: u128, lo: u128, inv: u128) -> u128 {
        let u = lo.wrapping_mul(inv);
        let (uh, ul) = mul_wide(u, self.m);
        // lo + ul is 0 mod 2^128, so it carries exactly when lo != 0.
        let _ = ul;
        let carry = u128::from(lo != 0);
        let mut t = hi + uh + carry;
        if t >= self.m {
            t -= self.m;
        }
        t
    }

    #[inline]
    pub fn mul(&self, a: u128, b: u128) -> u128 {
        match self.red {
            Reducer::Mask(mask) => a.wrapping_mul(b) & mask,
            Reducer::Mont { inv, r2 } => {
                let (h, l) = mul_wide(a, b);
                let x = self.redc(h, l, inv);
                let (h2, l2) = mul_wide(x, r2);
                self.redc(h2, l2, inv)
            }
        }
    }

    #[inline]
    pub fn add(&self, a: u128, b: u128) -> u128 {
        let s = a + b;
        if s >= self.m {
            s - self.m
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(&self, a: u128, b: u128) -> u128 {
        if a >= b {
            a - b
        } else {
            a + self.m - b
        }
    }

    #[inline]
    pub fn neg(&self, a: u128) -> u128 {
        if a == 0 {
            0
        } else {
            self.m - a
        }
    }

    pub fn pow(&self, mut a: u128, mut e: u64) -> u128 {
        let mut acc = 1 % self.m;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, a);
            }
            a = self.mul(a, a);
            e >>= 1;
        }
        acc
    }

    pub fn from_i128(&self, x: i128) -> u128 {
        let m = self.m as i128;
        let r = x % m;
        if r < 0 {
            (r + m) as u128
        } else {
            r as u128
        }
    }

    pub fn from_u64(&self, x: u64) -> u128 {
        (x as u128) % self.m
    }

    pub fn from_bigint(&self, x: &BigInt) -> u128 {
        let m = BigInt::from(self.m);
        let r = x.mod_floor(&m);
        r.to_u128().expect("residue fits")
    }

    /// Centered lift in (-m/2, m/2].
    pub fn to_signed(&self, a: u128) -> BigInt {
        if a > self.m / 2 {
            BigInt::from(a) - BigInt::from(self.m)
        } else {
            BigInt::from(a)
        }
    }

    /// p-adic valuation of a residue, `None` for zero.
    pub fn val(&self, mut a: u128) -> Option<u32> {
        if a == 0 {
            return None;
        }
        let p = self.p as u128;
        let mut v = 0;
        while a % p == 0 {
            a /= p;
            v += 1;
        }
        Some(v)
    }

    /// Inverse of a unit; `None` when `a` is divisible by p.
    pub fn inv(&self, a: u128) -> Option<u128> {
        if a % (self.p as u128) == 0 {
            return None;
        }
        // Hensel: x <- x(2 - a x), doubling correct digits each step.
        let p = self.p as u128;
        let mut x = (1..p).find(|&c| (c * (a % p)) % p == 1).unwrap();
        let mut correct = 1u32;
        while correct < self.digits {
            let ax = self.mul(a, x);
            x = self.mul(x, self.sub(2 % self.m, ax));
            correct *= 2;
        }
        Some(x)
    }

    /// Exact division by p^k of a residue known to be divisible by p^k; the
    /// result is only meaningful modulo p^(N-k).
    pub fn div_p_pow(&self, a: u128, k: u32) -> u128 {
        let d = (self.p as u128).pow(k);
        debug_assert!(a % d == 0, "not divisible by p^{k}");
        a / d
    }

    /// Reduce into a ring of lower precision.
    pub fn reduce_to(&self, a: u128, other: &Zpn) -> u128 {
        debug_assert_eq!(self.p, other.p);
        a % other.m
    }

    pub fn bigint_is_divisible(x: &BigInt, p: u64, k: u32) -> bool {
        let d = BigInt::from(p).pow(k);
        x.is_zero() || (x.abs() % d).is_zero()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn montgomery_matches_bigint() {
        for &(p, n) in &[(3u64, max_digits(3)), (5, max_digits(5)), (7, 40), (3, 5)] {
            let r = Zpn::new(p, n);
            let m = BigInt::from(r.modulus());
            let mut a: u128 = 123456789123456789;
            for i in 0..200u128 {
                a = a.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407 + i) % r.modulus();
                let b = a.rotate_left(17) % r.modulus();
                let want = (BigInt::from(a) * BigInt::from(b)) % &m;
                assert_eq!(BigInt::from(r.mul(a, b)), want);
            }
        }
    }

    #[test]
    fn mask_ring() {
        let r = Zpn::new(2, 100);
        let a = (1u128 << 99) + 12345;
        let b = 98765u128;
        let m = BigInt::from(r.modulus());
        assert_eq!(
            BigInt::from(r.mul(a, b)),
            (BigInt::from(a) * BigInt::from(b)) % m
        );
    }

    #[test]
    fn inverse() {
        let r = Zpn::new(5, 30);
        for a in [1u128, 2, 3, 4, 6, 123456789] {
            let i = r.inv(a).unwrap();
            assert_eq!(r.mul(a, i), 1);
        }
        assert!(r.inv(10).is_none());
    }
}
