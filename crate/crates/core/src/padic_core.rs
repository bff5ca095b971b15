//! Truncated arithmetic in Z_p[ζ_{p^c}] with certified valuations.
//!
//! Elements are coefficient vectors against powers of the uniformizer
//! π = ζ_{p^c} − 1 (or π = p when c = 0), with coefficients in Z/p^P. The
//! valuation of a nonzero representation is a coefficient scan because the
//! terms a_i π^i have pairwise distinct fractional valuations.

use std::cmp::Ordering;
use std::fmt;
use std::ops::Add;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{pre, Result};
use crate::rational::Q;
use crate::zp::Zpn;

/// A p-adic valuation normalised by v(p) = 1.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Valuation {
    Finite(Q),
    Infinity,
}

impl Valuation {
    pub fn int(v: i64) -> Self {
        Valuation::Finite(BigRational::from_integer(v.into()))
    }

    pub fn ratio(n: i64, d: i64) -> Self {
        Valuation::Finite(BigRational::new(n.into(), d.into()))
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Valuation::Infinity)
    }

    pub fn finite(&self) -> Option<&Q> {
        match self {
            Valuation::Finite(q) => Some(q),
            Valuation::Infinity => None,
        }
    }

    pub fn min(self, other: Self) -> Self {
        if self <= other {
            self
        } else {
            other
        }
    }

    pub fn max(self, other: Self) -> Self {
        if self >= other {
            self
        } else {
            other
        }
    }

    /// "num/den" or "inf".
    pub fn to_wire(&self) -> String {
        match self {
            Valuation::Finite(q) => crate::rational::fmt(q),
            Valuation::Infinity => "inf".into(),
        }
    }
}

impl PartialOrd for Valuation {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Valuation {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Valuation::Infinity, Valuation::Infinity) => Ordering::Equal,
            (Valuation::Infinity, _) => Ordering::Greater,
            (_, Valuation::Infinity) => Ordering::Less,
            (Valuation::Finite(a), Valuation::Finite(b)) => a.cmp(b),
        }
    }
}

impl Add for Valuation {
    type Output = Valuation;
    fn add(self, rhs: Valuation) -> Valuation {
        match (self, rhs) {
            (Valuation::Finite(a), Valuation::Finite(b)) => Valuation::Finite(a + b),
            _ => Valuation::Infinity,
        }
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Valuation::Finite(q) => write!(f, "{q}"),
            Valuation::Infinity => write!(f, "∞"),
        }
    }
}

/// Outcome of reading a valuation off a truncated element.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ValReading {
    Exact(Valuation),
    /// Only a lower bound is certified.
    Floor(Valuation),
}

impl ValReading {
    pub fn value(&self) -> &Valuation {
        match self {
            ValReading::Exact(v) | ValReading::Floor(v) => v,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, ValReading::Exact(_))
    }
}

/// The ring Z_p[ζ_{p^c}] modulo p^P, plus the tame and wild data used to
/// evaluate weight characters in it.
#[derive(Debug)]
pub struct CycloContext {
    p: u64,
    q: u64,
    level: u32,
    tame_order: u64,
    e: usize,
    ring: Zpn,
    /// pi_pows[j] = coefficients of π^(e+j), j < e.
    pi_pows: Vec<Vec<u128>>,
    /// zeta_pows[j] = ζ_{p^c}^j for j < p^c.
    zeta_pows: Vec<Vec<u128>>,
}

fn poly_mul_big(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    let mut out = vec![BigInt::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Coefficients of Φ_{p^c}(1 + X), low degree first.
pub fn eisenstein_poly(p: u64, c: u32) -> Vec<BigInt> {
    assert!(c >= 1);
    // Y = (1+X)^{p^{c-1}}
    let m = p.pow(c - 1);
    let y: Vec<BigInt> = (0..=m).map(|k| crate::rational::binom(m, k)).collect();
    let mut acc = vec![BigInt::one()];
    let mut pw = vec![BigInt::one()];
    for _ in 1..p {
        pw = poly_mul_big(&pw, &y);
        let len = acc.len().max(pw.len());
        acc.resize(len, BigInt::zero());
        for (i, c) in pw.iter().enumerate() {
            acc[i] += c;
        }
    }
    acc
}

pub fn ramification(p: u64, level: u32) -> usize {
    if level == 0 {
        1
    } else {
        (p.pow(level - 1) * (p - 1)) as usize
    }
}

impl CycloContext {
    /// Context for Q_p(ζ_{p^level}) keeping at least `k` powers of π.
    pub fn new(p: u64, level: u32, k: u32) -> Result<Arc<Self>> {
        if p < 2 || !is_prime(p) {
            return pre(format!("{p} is not prime"));
        }
        if k == 0 {
            return pre("working precision must be positive");
        }
        let e = ramification(p, level);
        if e > 4096 {
            return pre("cyclotomic level too large");
        }
        let digits = (k as usize).div_ceil(e) as u32;
        if digits > crate::zp::max_digits(p) {
            return pre(format!(
                "precision {digits} digits exceeds the 126-bit limit for p={p}"
            ));
        }
        let ring = Zpn::new(p, digits);
        // π^e expressed in lower powers.
        let top: Vec<u128> = if level == 0 {
            vec![ring.from_u64(p)]
        } else {
            let f = eisenstein_poly(p, level);
            debug_assert_eq!(f.len(), e + 1);
            f[..e].iter().map(|c| ring.from_bigint(&-c)).collect()
        };
        let mut pi_pows = Vec::with_capacity(e);
        let mut cur = top.clone();
        for _ in 0..e {
            pi_pows.push(cur.clone());
            // multiply cur by π
            let carry = cur[e - 1];
            let mut next = vec![0u128; e];
            for i in (1..e).rev() {
                next[i] = cur[i - 1];
            }
            for i in 0..e {
                next[i] = ring.add(next[i], ring.mul(carry, top[i]));
            }
            cur = next;
        }
        let mut ctx = CycloContext {
            p,
            q: if p == 2 { 4 } else { p },
            level,
            tame_order: if p == 2 { 2 } else { p - 1 },
            e,
            ring,
            pi_pows,
            zeta_pows: Vec::new(),
        };
        let order = p.pow(level);
        if order <= 1 << 14 {
            let zeta = if level == 0 {
                ctx.one_raw()
            } else if e == 1 {
                // p = 2, level 1: π = ζ_2 − 1 = −2.
                vec![ctx.ring.from_i128(-1)]
            } else {
                let mut z = ctx.one_raw();
                z[1] = 1;
                z
            };
            let mut acc = ctx.one_raw();
            let mut table = Vec::with_capacity(order as usize);
            for _ in 0..order {
                table.push(acc.clone());
                acc = ctx.mul_raw(&acc, &zeta);
            }
            debug_assert_eq!(acc, ctx.one_raw());
            ctx.zeta_pows = table;
        }
        Ok(Arc::new(ctx))
    }

    /// Smallest context evaluating wild characters of the given conductor.
    pub fn for_conductor(p: u64, conductor: u32, k: u32) -> Result<Arc<Self>> {
        Self::new(p, wild_level_for_conductor(p, conductor), k)
    }

    pub fn p(&self) -> u64 {
        self.p
    }
    pub fn q(&self) -> u64 {
        self.q
    }
    pub fn wild_level(&self) -> u32 {
        self.level
    }
    pub fn tame_order(&self) -> u64 {
        self.tame_order
    }
    pub fn e(&self) -> usize {
        self.e
    }
    /// Powers of π retained.
    pub fn precision(&self) -> u32 {
        self.ring.digits() * self.e as u32
    }
    /// Coefficient digits P; the ring is exact modulo p^P.
    pub fn digits(&self) -> u32 {
        self.ring.digits()
    }
    pub fn ring(&self) -> &Zpn {
        &self.ring
    }

    pub fn zero_raw(&self) -> Vec<u128> {
        vec![0; self.e]
    }

    pub fn one_raw(&self) -> Vec<u128> {
        let mut v = vec![0; self.e];
        v[0] = 1 % self.ring.modulus();
        v
    }

    pub fn int_raw(&self, x: &BigInt) -> Vec<u128> {
        let mut v = vec![0; self.e];
        v[0] = self.ring.from_bigint(x);
        v
    }

    pub fn add_raw(&self, a: &[u128], b: &[u128]) -> Vec<u128> {
        a.iter().zip(b).map(|(x, y)| self.ring.add(*x, *y)).collect()
    }

    pub fn sub_raw(&self, a: &[u128], b: &[u128]) -> Vec<u128> {
        a.iter().zip(b).map(|(x, y)| self.ring.sub(*x, *y)).collect()
    }

    pub fn neg_raw(&self, a: &[u128]) -> Vec<u128> {
        a.iter().map(|x| self.ring.neg(*x)).collect()
    }

    pub fn scale_raw(&self, a: &[u128], s: u128) -> Vec<u128> {
        a.iter().map(|x| self.ring.mul(*x, s)).collect()
    }

    /// Fold a product polynomial of length ≤ 2e−1 back to length e.
    pub fn reduce_poly(&self, c: &[u128]) -> Vec<u128> {
        let e = self.e;
        let mut out: Vec<u128> = c.iter().take(e).copied().collect();
        out.resize(e, 0);
        for (j, &hi) in c.iter().enumerate().skip(e) {
            if hi == 0 {
                continue;
            }
            let row = &self.pi_pows[j - e];
            for i in 0..e {
                out[i] = self.ring.add(out[i], self.ring.mul(hi, row[i]));
            }
        }
        out
    }

    /// acc += a·b as an unreduced polynomial of length 2e−1.
    #[inline]
    pub fn mul_acc_poly(&self, acc: &mut [u128], a: &[u128], b: &[u128]) {
        if self.e == 1 {
            acc[0] = self.ring.add(acc[0], self.ring.mul(a[0], b[0]));
            return;
        }
        for (i, &x) in a.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.iter().enumerate() {
                if y != 0 {
                    acc[i + j] = self.ring.add(acc[i + j], self.ring.mul(x, y));
                }
            }
        }
    }

    pub fn mul_raw(&self, a: &[u128], b: &[u128]) -> Vec<u128> {
        let mut acc = vec![0u128; 2 * self.e - 1];
        self.mul_acc_poly(&mut acc, a, b);
        self.reduce_poly(&acc)
    }

    pub fn pow_raw(&self, a: &[u128], mut k: u64) -> Vec<u128> {
        let mut base = a.to_vec();
        let mut acc = self.one_raw();
        while k > 0 {
            if k & 1 == 1 {
                acc = self.mul_raw(&acc, &base);
            }
            base = self.mul_raw(&base, &base);
            k >>= 1;
        }
        acc
    }

    /// Inverse of a unit by Newton iteration x ← x(2 − ax).
    pub fn inv_raw(&self, a: &[u128]) -> Option<Vec<u128>> {
        let a0 = self.ring.inv(a[0])?;
        let mut x = self.zero_raw();
        x[0] = a0;
        let two = self.int_raw(&BigInt::from(2));
        // each step doubles the π-adic precision; start is exact mod π.
        let mut prec = 1u32;
        while prec < self.precision() {
            let ax = self.mul_raw(a, &x);
            x = self.mul_raw(&x, &self.sub_raw(&two, &ax));
            prec *= 2;
        }
        Some(x)
    }

    /// Valuation of a raw vector: Some(v) when nonzero modulo p^P.
    pub fn val_raw(&self, a: &[u128]) -> Option<Q> {
        let e = self.e as i64;
        a.iter()
            .enumerate()
            .filter_map(|(i, &x)| {
                self.ring
                    .val(x)
                    .map(|v| BigRational::new(BigInt::from(v as i64 * e + i as i64), e.into()))
            })
            .min()
    }

    /// Valuation in units of 1/e: the smallest i + e·v_p(a_i).
    pub fn val_raw_scaled(&self, a: &[u128]) -> Option<u64> {
        let e = self.e as u64;
        a.iter()
            .enumerate()
            .filter_map(|(i, &x)| self.ring.val(x).map(|v| v as u64 * e + i as u64))
            .min()
    }

    /// ζ_{p^level}^j with the context's fixed choice of root.
    pub fn zeta_pow(&self, j: u64) -> Vec<u128> {
        let order = self.p.pow(self.level);
        let j = j % order;
        if !self.zeta_pows.is_empty() {
            return self.zeta_pows[j as usize].clone();
        }
        let zeta = if self.e == 1 {
            vec![self.ring.from_i128(-1)]
        } else {
            let mut z = self.one_raw();
            z[1] = self.ring.add(z[1], 1);
            z
        };
        self.pow_raw(&zeta, j)
    }

    /// Drop to lower precision: result lives in a context with the same
    /// level and at most `k` powers of π.
    pub fn with_precision(&self, k: u32) -> Result<Arc<Self>> {
        Self::new(self.p, self.level, k)
    }
}

pub fn is_prime(n: u64) -> bool {
    n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0)
}

/// Cyclotomic level whose roots of unity carry characters of this conductor.
pub fn wild_level_for_conductor(p: u64, conductor: u32) -> u32 {
    let off = if p == 2 { 2 } else { 1 };
    conductor.saturating_sub(off)
}

/// An element of the truncated ring with a certified valuation floor.
#[derive(Clone, Debug)]
pub struct TruncatedElement {
    ctx: Arc<CycloContext>,
    coeffs: Vec<u128>,
    val_floor: Valuation,
    exact: bool,
}

impl TruncatedElement {
    /// From a raw vector known only modulo p^P.
    pub fn from_raw(ctx: &Arc<CycloContext>, coeffs: Vec<u128>, floor: Valuation) -> Self {
        assert_eq!(coeffs.len(), ctx.e);
        let mut x = TruncatedElement {
            ctx: ctx.clone(),
            coeffs,
            val_floor: floor,
            exact: false,
        };
        x.normalize();
        x
    }

    /// An element whose valuation is known to be exactly `val`.
    pub fn from_raw_exact(ctx: &Arc<CycloContext>, coeffs: Vec<u128>, val: Valuation) -> Self {
        let mut x = TruncatedElement {
            ctx: ctx.clone(),
            coeffs,
            val_floor: val,
            exact: true,
        };
        x.normalize();
        x
    }

    pub fn from_int(ctx: &Arc<CycloContext>, x: impl Into<BigInt>) -> Self {
        let x: BigInt = x.into();
        let v = if x.is_zero() {
            Valuation::Infinity
        } else {
            Valuation::int(vp_big(&x, ctx.p) as i64)
        };
        Self::from_raw_exact(ctx, ctx.int_raw(&x), v)
    }

    pub fn zero(ctx: &Arc<CycloContext>) -> Self {
        Self::from_int(ctx, 0)
    }

    pub fn one(ctx: &Arc<CycloContext>) -> Self {
        Self::from_int(ctx, 1)
    }

    /// The uniformizer π.
    pub fn uniformizer(ctx: &Arc<CycloContext>) -> Self {
        let mut c = ctx.zero_raw();
        if ctx.e == 1 {
            c[0] = if ctx.level == 0 {
                ctx.ring.from_u64(ctx.p)
            } else {
                ctx.ring.from_i128(-2)
            };
        } else {
            c[1] = 1;
        }
        Self::from_raw_exact(ctx, c, Valuation::ratio(1, ctx.e as i64))
    }

    /// ζ_{p^level}^j.
    pub fn root_of_unity(ctx: &Arc<CycloContext>, j: u64) -> Self {
        Self::from_raw_exact(ctx, ctx.zeta_pow(j), Valuation::int(0))
    }

    pub fn context(&self) -> &Arc<CycloContext> {
        &self.ctx
    }

    pub fn coeffs(&self) -> &[u128] {
        &self.coeffs
    }

    pub fn val_floor(&self) -> &Valuation {
        &self.val_floor
    }

    pub fn is_exact(&self) -> bool {
        self.exact
    }

    fn cap(&self) -> Valuation {
        Valuation::int(self.ctx.digits() as i64)
    }

    fn normalize(&mut self) {
        match self.ctx.val_raw(&self.coeffs) {
            Some(v) => {
                self.val_floor = Valuation::Finite(v);
                self.exact = true;
            }
            None => {
                if !self.exact {
                    self.val_floor = self.val_floor.clone().max(self.cap());
                }
            }
        }
    }

    pub fn valuation(&self) -> ValReading {
        if self.exact {
            ValReading::Exact(self.val_floor.clone())
        } else {
            ValReading::Floor(self.val_floor.clone())
        }
    }

    pub fn is_zero_repr(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0)
    }

    pub fn mul(&self, other: &Self) -> Self {
        let coeffs = self.ctx.mul_raw(&self.coeffs, &other.coeffs);
        let mut x = TruncatedElement {
            ctx: self.ctx.clone(),
            coeffs,
            val_floor: self.val_floor.clone() + other.val_floor.clone(),
            exact: self.exact && other.exact,
        };
        x.normalize();
        x
    }

    pub fn add(&self, other: &Self) -> Self {
        let coeffs = self.ctx.add_raw(&self.coeffs, &other.coeffs);
        self.combine(other, coeffs)
    }

    pub fn sub(&self, other: &Self) -> Self {
        let coeffs = self.ctx.sub_raw(&self.coeffs, &other.coeffs);
        self.combine(other, coeffs)
    }

    fn combine(&self, other: &Self, coeffs: Vec<u128>) -> Self {
        let floor = self.val_floor.clone().min(other.val_floor.clone());
        let exact = self.exact
            && other.exact
            && (self.val_floor != other.val_floor || floor.is_infinite());
        let mut x = TruncatedElement {
            ctx: self.ctx.clone(),
            coeffs,
            val_floor: floor,
            exact,
        };
        x.normalize();
        x
    }

    pub fn neg(&self) -> Self {
        TruncatedElement {
            ctx: self.ctx.clone(),
            coeffs: self.ctx.neg_raw(&self.coeffs),
            val_floor: self.val_floor.clone(),
            exact: self.exact,
        }
    }

    pub fn pow(&self, k: u64) -> Self {
        let mut acc = Self::one(&self.ctx);
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            k >>= 1;
        }
        acc
    }

    /// Value as an integer, when the element lies in Z_p.
    pub fn as_int(&self) -> Option<BigInt> {
        if self.coeffs[1..].iter().any(|&c| c != 0) {
            return None;
        }
        Some(BigInt::from(self.coeffs[0]))
    }

    /// Exact equality of representations.
    pub fn same_repr(&self, other: &Self) -> bool {
        self.coeffs == other.coeffs
    }
}

/// v_p of a nonzero integer.
pub fn vp_big(x: &BigInt, p: u64) -> u32 {
    assert!(!x.is_zero());
    let pb = BigInt::from(p);
    let mut x = x.abs();
    let mut v = 0;
    while (&x % &pb).is_zero() {
        x /= &pb;
        v += 1;
    }
    v
}

pub fn vp_u64(mut x: u64, p: u64) -> u32 {
    assert!(x != 0);
    let mut v = 0;
    while x % p == 0 {
        x /= p;
        v += 1;
    }
    v
}

fn inv_mod_big(a: &BigInt, m: &BigInt) -> BigInt {
    let g = a.extended_gcd(m);
    assert!(g.gcd.is_one(), "not invertible");
    g.x.mod_floor(m)
}

/// log(x) modulo p^n for x ≡ 1 mod q.
pub fn log_one_unit(p: u64, x: &BigInt, n: u32) -> Result<BigInt> {
    let q = if p == 2 { 4 } else { p };
    let y = x - BigInt::one();
    if !(y.mod_floor(&BigInt::from(q))).is_zero() {
        return pre("argument of log is not a one-unit");
    }
    let pn = BigInt::from(p).pow(n);
    if y.is_zero() {
        return Ok(BigInt::zero());
    }
    let s = vp_big(&y, p).min(n + 1) as u64;
    // terms y^k/k with ks − v_p(k) < n; k − log2(k) ≥ n past this bound
    let kmax = (n as u64 + 8) / s + 64 - (n as u64 + 8).leading_zeros() as u64;
    let extra = (1..=kmax).map(|k| vp_u64(k, p)).max().unwrap_or(0);
    let big_m = BigInt::from(p).pow(n + extra);
    let mut acc = BigInt::zero();
    let mut ypow = BigInt::one();
    for k in 1..=kmax {
        ypow = (&ypow * &y).mod_floor(&big_m);
        let a = vp_u64(k, p);
        let kp = k / p.pow(a);
        let num = &ypow / BigInt::from(p).pow(a);
        let term = (num * inv_mod_big(&BigInt::from(kp), &pn)).mod_floor(&pn);
        if k % 2 == 1 {
            acc += term;
        } else {
            acc -= term;
        }
    }
    Ok(acc.mod_floor(&pn))
}

/// exp(y) modulo p^n for v(y) ≥ v(q).
pub fn exp_small(p: u64, y: &BigInt, n: u32) -> Result<BigInt> {
    let q = if p == 2 { 4 } else { p };
    if !(y.mod_floor(&BigInt::from(q))).is_zero() {
        return pre("argument of exp outside the convergence disc");
    }
    let pn = BigInt::from(p).pow(n);
    if y.is_zero() {
        return Ok(BigInt::one().mod_floor(&pn));
    }
    let s = vp_big(y, p) as f64;
    // v(y^k/k!) ≥ k(s − 1/(p−1))
    let rate = s - 1.0 / (p as f64 - 1.0);
    let kmax = ((n as f64) / rate).ceil() as u64 + 2;
    let mut vfact = 0u32;
    let mut extra = 0u32;
    for k in 1..=kmax {
        vfact += vp_u64(k, p);
        extra = extra.max(vfact);
    }
    let big_m = BigInt::from(p).pow(n + extra);
    let mut acc = BigInt::one();
    let mut ypow = BigInt::one();
    let mut unit_fact = BigInt::one();
    let mut vf = 0u32;
    for k in 1..=kmax {
        ypow = (&ypow * y).mod_floor(&big_m);
        let a = vp_u64(k, p);
        vf += a;
        unit_fact = (unit_fact * BigInt::from(k / p.pow(a))).mod_floor(&pn);
        let num = &ypow / BigInt::from(p).pow(vf);
        acc += num * inv_mod_big(&unit_fact, &pn);
    }
    Ok(acc.mod_floor(&pn))
}

/// exp(q) modulo p^n.
pub fn exp_q(p: u64, n: u32) -> BigInt {
    let q = if p == 2 { 4 } else { p };
    exp_small(p, &BigInt::from(q), n).expect("q is in the disc")
}

/// A finite-order character of 1 + qZ_p, fixed by χ(exp(q)) = ζ_{p^level}^k.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct WildChar {
    pub level: u32,
    pub k: u64,
}

impl WildChar {
    pub fn trivial() -> Self {
        WildChar { level: 0, k: 0 }
    }

    /// Exponent r with χ(exp(q)) of exact order p^r.
    pub fn order_exp(&self, p: u64) -> u32 {
        let order = p.pow(self.level);
        let k = self.k % order;
        if k == 0 {
            0
        } else {
            self.level - vp_u64(k, p)
        }
    }

    pub fn is_trivial(&self, p: u64) -> bool {
        self.order_exp(p) == 0
    }

    /// Re-express over ζ_{p^level'}, level' ≥ level.
    pub fn lift(&self, p: u64, level: u32) -> Self {
        assert!(level >= self.level);
        WildChar {
            level,
            k: (self.k % p.pow(self.level)) * p.pow(level - self.level),
        }
    }

    /// The canonical character of order p^r.
    pub fn of_order(_p: u64, r: u32) -> Self {
        WildChar {
            level: r,
            k: if r == 0 { 0 } else { 1 },
        }
    }

    pub fn ratio(&self, other: &Self, p: u64) -> Self {
        let level = self.level.max(other.level);
        let a = self.lift(p, level);
        let b = other.lift(p, level);
        let order = p.pow(level);
        WildChar {
            level,
            k: (a.k % order + order - b.k % order) % order,
        }
    }
}

/// χ(u) for a rational one-unit u ≡ 1 mod q.
pub fn eval_wild_char(
    ctx: &Arc<CycloContext>,
    chi: &WildChar,
    u: &TruncatedElement,
) -> Result<TruncatedElement> {
    let p = ctx.p;
    let r = chi.order_exp(p);
    if r > ctx.level {
        return pre(format!(
            "character of order p^{r} needs wild level {r}, context has {}",
            ctx.level
        ));
    }
    let uz = match u.as_int() {
        Some(x) => x,
        None => return pre("eval_wild_char expects an element of Z_p"),
    };
    if r == 0 {
        if !(uz.clone() - 1u32).mod_floor(&BigInt::from(ctx.q)).is_zero() {
            return pre("argument is not a one-unit");
        }
        return Ok(TruncatedElement::one(ctx));
    }
    let vq = if p == 2 { 2 } else { 1 };
    if ctx.digits() < r + vq {
        return pre(format!(
            "χ(u) depends on u mod p^{}, context keeps only {} digits",
            r + vq,
            ctx.digits()
        ));
    }
    // x = log(u)/q modulo p^r gives u = exp(q)^x in (1+qZ_p)/(1+q p^r Z_p).
    let lg = log_one_unit(p, &uz, r + vq)?;
    let x = (lg / BigInt::from(ctx.q)).mod_floor(&BigInt::from(p.pow(r)));
    let x = x.to_u64().expect("small");
    // χ(exp(q)) as a power of the context root.
    let kr = (chi.k % p.pow(chi.level)) / p.pow(chi.level - r);
    let kk = (kr as u128) * (p.pow(ctx.level - r) as u128);
    let order = p.pow(ctx.level) as u128;
    let j = (kk % order) * (x as u128) % order;
    Ok(TruncatedElement::root_of_unity(ctx, j as u64))
}

/// The (p−1)-st root of unity congruent to a mod p.
pub fn teichmuller(ctx: &Arc<CycloContext>, a: i64) -> Result<TruncatedElement> {
    let p = ctx.p as i64;
    if a.rem_euclid(p) == 0 {
        return pre(format!("{a} is not a unit mod {p}"));
    }
    let r = ctx.ring();
    let mut x = r.from_i128(a as i128);
    for _ in 0..=ctx.digits() {
        x = r.pow(x, ctx.p);
    }
    let mut c = ctx.zero_raw();
    c[0] = x;
    Ok(TruncatedElement::from_raw_exact(ctx, c, Valuation::int(0)))
}

/// Root of unity of order dividing φ(q) attached to a unit: the Teichmüller
/// lift for odd p, ±1 according to a mod 4 for p = 2.
pub fn tame_root(ctx: &CycloContext, a: &BigInt) -> u128 {
    let r = ctx.ring();
    if ctx.p == 2 {
        if a.mod_floor(&BigInt::from(4)) == BigInt::from(1) {
            1 % r.modulus()
        } else {
            r.from_i128(-1)
        }
    } else {
        let mut x = r.from_bigint(a);
        for _ in 0..=ctx.digits() {
            x = r.pow(x, ctx.p);
        }
        x
    }
}
