//! Plücker coordinates and the Iwahori action on ball-wise truncated power
//! series in the lower-unipotent coordinates z_ij.
//!
//! A function is stored ball by ball: on the ball z_ij ∈ b_ij + p^{R_j}Z_p
//! it is Σ_e c_e y^e with z_ij = b_ij + p^{R_j} y_ij and |e| ≤ D.

use std::collections::HashMap;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::error::{pre, HaloError, Result};
use crate::padic_core::{CycloContext, TruncatedElement, Valuation};
use crate::weight_space::{forced_radius, shape_predicates, HalfMatrix, WeightCharacter};
use crate::zp::Zpn;

/// Exponent vectors of total degree ≤ D in v variables, graded then
/// reverse-lexicographic, with a truncated product table.
#[derive(Clone, Debug)]
pub struct Monomials {
    pub nvars: usize,
    pub degree: u32,
    pub exps: Vec<Vec<u32>>,
    index: HashMap<Vec<u32>, usize>,
    /// products[i] = list of (j, k) with exps[i] + exps[j] = exps[k].
    products: Vec<Vec<(usize, usize)>>,
}

impl Monomials {
    pub fn new(nvars: usize, degree: u32) -> Self {
        let mut exps = Vec::new();
        for d in 0..=degree {
            let mut cur = vec![0u32; nvars];
            fn rec(pos: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
                if pos + 1 == cur.len() {
                    cur[pos] = left;
                    out.push(cur.clone());
                    return;
                }
                for x in (0..=left).rev() {
                    cur[pos] = x;
                    rec(pos + 1, left - x, cur, out);
                }
            }
            if nvars == 0 {
                if d == 0 {
                    exps.push(vec![]);
                }
                continue;
            }
            rec(0, d, &mut cur, &mut exps);
        }
        let index: HashMap<Vec<u32>, usize> =
            exps.iter().enumerate().map(|(i, e)| (e.clone(), i)).collect();
        let mut products = vec![Vec::new(); exps.len()];
        for (i, a) in exps.iter().enumerate() {
            for (j, b) in exps.iter().enumerate() {
                let s: Vec<u32> = a.iter().zip(b).map(|(x, y)| x + y).collect();
                if let Some(&k) = index.get(&s) {
                    products[i].push((j, k));
                }
            }
        }
        Monomials { nvars, degree, exps, index, products }
    }

    pub fn len(&self) -> usize {
        self.exps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exps.is_empty()
    }

    pub fn total_degree(&self, i: usize) -> u32 {
        self.exps[i].iter().sum()
    }

    pub fn index_of(&self, e: &[u32]) -> Option<usize> {
        self.index.get(e).copied()
    }

    /// Index of the single variable y_v.
    pub fn var(&self, v: usize) -> usize {
        let mut e = vec![0; self.nvars];
        e[v] = 1;
        self.index[&e]
    }
}

/// Truncated multivariate series over Z/p^N.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Series {
    pub c: Vec<u128>,
}

/// Arithmetic on `Series` for a fixed monomial table and scalar ring.
pub struct SeriesRing<'a> {
    pub mons: &'a Monomials,
    pub r: &'a Zpn,
}

impl<'a> SeriesRing<'a> {
    pub fn zero(&self) -> Series {
        Series { c: vec![0; self.mons.len()] }
    }

    pub fn constant(&self, x: u128) -> Series {
        let mut s = self.zero();
        s.c[0] = x;
        s
    }

    pub fn add(&self, a: &Series, b: &Series) -> Series {
        Series { c: a.c.iter().zip(&b.c).map(|(x, y)| self.r.add(*x, *y)).collect() }
    }

    pub fn sub(&self, a: &Series, b: &Series) -> Series {
        Series { c: a.c.iter().zip(&b.c).map(|(x, y)| self.r.sub(*x, *y)).collect() }
    }

    pub fn scale(&self, a: &Series, s: u128) -> Series {
        Series { c: a.c.iter().map(|x| self.r.mul(*x, s)).collect() }
    }

    pub fn mul(&self, a: &Series, b: &Series) -> Series {
        let mut out = self.zero();
        for (i, &x) in a.c.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for &(j, k) in &self.mons.products[i] {
                let y = b.c[j];
                if y != 0 {
                    out.c[k] = self.r.add(out.c[k], self.r.mul(x, y));
                }
            }
        }
        out
    }

    /// Inverse of a series with unit constant term.
    pub fn inv(&self, a: &Series) -> Result<Series> {
        let c0 = self
            .r
            .inv(a.c[0])
            .ok_or_else(|| HaloError::Precondition("series constant term is not a unit".into()))?;
        // a = c0 (1 + u), 1/(1+u) = Σ (−u)^k
        let mut u = self.scale(a, c0);
        u.c[0] = 0;
        let neg_u = Series { c: u.c.iter().map(|x| self.r.neg(*x)).collect() };
        let mut acc = self.constant(1);
        let mut term = self.constant(1);
        for _ in 0..self.mons.degree {
            term = self.mul(&term, &neg_u);
            acc = self.add(&acc, &term);
        }
        Ok(self.scale(&acc, c0))
    }

    /// (1 + w)^t for w without constant term and any integer t.
    pub fn binomial_pow(&self, w: &Series, t: i64) -> Series {
        debug_assert_eq!(w.c[0], 0);
        let mut acc = self.constant(1);
        let mut term = self.constant(1);
        let mut coeff = BigInt::one();
        for k in 1..=self.mons.degree as i64 {
            // binom(t, k) = binom(t, k−1)·(t − k + 1)/k
            coeff = coeff * BigInt::from(t - k + 1) / BigInt::from(k);
            term = self.mul(&term, w);
            if coeff.is_zero() {
                break;
            }
            let c = self.r.from_bigint(&coeff);
            acc = self.add(&acc, &self.scale(&term, c));
        }
        acc
    }

    pub fn pow(&self, a: &Series, k: u32) -> Series {
        let mut acc = self.constant(1);
        for _ in 0..k {
            acc = self.mul(&acc, a);
        }
        acc
    }
}

/// Determinant by permutation expansion; sizes here are at most 4.
fn det_generic<T: Clone>(
    m: &[Vec<T>],
    rows: &[usize],
    cols: &[usize],
    one: &T,
    mul: &dyn Fn(&T, &T) -> T,
    add: &dyn Fn(&T, &T) -> T,
    neg: &dyn Fn(&T) -> T,
    zero: &T,
) -> T {
    let k = rows.len();
    let perms = crate::rep_theory::permutations(k);
    let mut acc = zero.clone();
    for p in perms {
        let mut inv = 0;
        for i in 0..k {
            for j in i + 1..k {
                if p[i] > p[j] {
                    inv += 1;
                }
            }
        }
        let mut term = one.clone();
        for i in 0..k {
            term = mul(&term, &m[rows[i]][cols[p[i]]]);
        }
        if inv % 2 == 1 {
            term = neg(&term);
        }
        acc = add(&acc, &term);
    }
    acc
}

/// Plücker coordinate Z_{j,σ}(x): the minor on rows σ (0-based) and the
/// first j columns.
pub fn plucker(x: &[Vec<TruncatedElement>], j: usize, sigma: &[usize]) -> Result<TruncatedElement> {
    if sigma.len() != j {
        return pre("|σ| must equal j");
    }
    let ctx = x[0][0].context().clone();
    let cols: Vec<usize> = (0..j).collect();
    Ok(det_generic(
        x,
        sigma,
        &cols,
        &TruncatedElement::one(&ctx),
        &|a, b| a.mul(b),
        &|a, b| a.add(b),
        &|a| a.neg(),
        &TruncatedElement::zero(&ctx),
    ))
}

/// Σ_{i>j} (a_j − a_i) e_ij, the p-power by which u^a scales z^e.
pub fn scale_exponents(a: &[i64], e: &[u32]) -> Result<u64> {
    let n = a.len();
    if e.len() != n * (n - 1) / 2 {
        return pre("multidegree has the wrong length");
    }
    let mut total = 0i64;
    for (k, (i, j)) in HalfMatrix::positions(n).into_iter().enumerate() {
        let d = a[j - 1] - a[i - 1];
        if d < 0 {
            return pre("negative exponent: a is not nonincreasing");
        }
        total += d * e[k] as i64;
    }
    Ok(total as u64)
}

/// Smallest gap a_j − a_{j+1}; rows of degree m carry p^{gap·m}.
pub fn min_gap(a: &[i64]) -> i64 {
    a.windows(2).map(|w| w[0] - w[1]).min().unwrap_or(0)
}

/// Balls B(b, R): residues b_ij modulo p^{R_j}, in mixed-radix order.
#[derive(Clone, Debug)]
pub struct Balls {
    pub p: u64,
    pub radius: HalfMatrix,
    pub moduli: Vec<u64>,
    pub list: Vec<Vec<u64>>,
}

impl Balls {
    pub fn new(p: u64, radius: &HalfMatrix) -> Result<Self> {
        let moduli: Vec<u64> = radius.entries.iter().map(|&r| p.pow(r)).collect();
        let count = moduli.iter().try_fold(1u64, |a, &m| a.checked_mul(m));
        let count = match count {
            Some(c) if c <= 1 << 20 => c,
            _ => return pre("too many balls for this radius"),
        };
        let mut list = Vec::with_capacity(count as usize);
        for mut idx in 0..count {
            let mut b = vec![0u64; moduli.len()];
            for k in (0..moduli.len()).rev() {
                b[k] = idx % moduli[k];
                idx /= moduli[k];
            }
            list.push(b);
        }
        Ok(Balls { p, radius: radius.clone(), moduli, list })
    }

    pub fn len(&self) -> usize {
        self.list.len()
    }

    pub fn is_empty(&self) -> bool {
        self.list.is_empty()
    }

    pub fn index_of(&self, b: &[u64]) -> usize {
        let mut idx = 0u64;
        for (k, &m) in self.moduli.iter().enumerate() {
            idx = idx * m + b[k] % m;
        }
        idx as usize
    }
}

/// An integer matrix with entries taken modulo p^K where needed.
pub type IntMat = Vec<Vec<BigInt>>;

pub fn identity(n: usize) -> IntMat {
    (0..n)
        .map(|i| (0..n).map(|j| BigInt::from((i == j) as i32)).collect())
        .collect()
}

/// True when x is upper triangular mod p with unit diagonal.
pub fn in_iwahori(x: &IntMat, p: u64) -> bool {
    let pb = BigInt::from(p);
    let n = x.len();
    (0..n).all(|i| {
        (0..n).all(|j| {
            let r = x[i][j].mod_floor(&pb);
            if i == j {
                !r.is_zero()
            } else if i > j {
                r.is_zero()
            } else {
                true
            }
        })
    })
}

/// Inverse of an Iwahori matrix modulo p^k.
pub fn iwahori_inverse(x: &IntMat, p: u64, k: u32) -> Result<IntMat> {
    if !in_iwahori(x, p) {
        return pre("matrix is not in the Iwahori group");
    }
    let n = x.len();
    let m = BigInt::from(p).pow(k);
    let mut a: Vec<Vec<BigInt>> = x.iter().map(|r| r.iter().map(|v| v.mod_floor(&m)).collect()).collect();
    let mut inv = identity(n);
    for c in 0..n {
        let g = a[c][c].extended_gcd(&m);
        let pi = g.x.mod_floor(&m);
        for j in 0..n {
            a[c][j] = (&a[c][j] * &pi).mod_floor(&m);
            inv[c][j] = (&inv[c][j] * &pi).mod_floor(&m);
        }
        for i in 0..n {
            if i != c && !a[i][c].is_zero() {
                let f = a[i][c].clone();
                for j in 0..n {
                    let t = (&a[i][j] - &f * &a[c][j]).mod_floor(&m);
                    a[i][j] = t;
                    let t = (&inv[i][j] - &f * &inv[c][j]).mod_floor(&m);
                    inv[i][j] = t;
                }
            }
        }
    }
    Ok(inv)
}

pub fn int_matmul(a: &IntMat, b: &IntMat) -> IntMat {
    let n = a.len();
    (0..n)
        .map(|i| (0..n).map(|j| (0..n).map(|k| &a[i][k] * &b[k][j]).sum()).collect())
        .collect()
}

/// A term f ↦ f(g · u^{-a} N(y0)^{-1} N̄(z) u^a) of a Hecke-type operator,
/// where N(y0) is upper unipotent.
#[derive(Clone, Debug)]
pub struct Term {
    pub g: IntMat,
    pub a: Vec<i64>,
    /// Entries y0_ij, i < j, in the order (1,2),(1,3),(2,3),….
    pub y0: Vec<BigInt>,
}

impl Term {
    pub fn translation(g: IntMat) -> Self {
        let n = g.len();
        Term { g, a: vec![0; n], y0: vec![BigInt::zero(); n * (n - 1) / 2] }
    }
}

/// Positions (i, j), i < j, 1-based, in the order (1,2),(1,3),(2,3),….
pub fn upper_positions(n: usize) -> Vec<(usize, usize)> {
    HalfMatrix::positions(n).into_iter().map(|(i, j)| (j, i)).collect()
}

/// The image of every input monomial on one output ball under one term.
pub struct BallImage {
    pub in_ball: usize,
    /// Weight constant Π s_j(d_j(0)) in the context ring.
    pub weight_const: Vec<u128>,
    /// block[f][e]: coefficient of y^f in W(y)·y'(y)^e, over Z/p^P.
    pub block: Vec<Vec<u128>>,
}

/// Shared data for computing images on one weight/radius/degree setup.
pub struct ActionSetup {
    pub weight: WeightCharacter,
    pub radius: HalfMatrix,
    pub balls: Balls,
    pub mons: Monomials,
    pub ctx: Arc<CycloContext>,
    /// Scalar ring for the geometric series, with guard digits.
    pub work: Zpn,
    /// Digits certified in the output blocks.
    pub out_digits: u32,
}

type SMat = Vec<Vec<Series>>;

impl ActionSetup {
    /// `digits` is the certified p-adic precision wanted for matrix entries.
    pub fn new(weight: &WeightCharacter, radius: HalfMatrix, degree: u32, digits: u32) -> Result<Self> {
        let n = weight.n();
        let p = weight.p;
        if radius.n != n {
            return pre("radius has the wrong size");
        }
        let shape = shape_predicates(&radius, &[]);
        if !shape.analytic_shaped {
            return pre("radius must be analytic-shaped");
        }
        let forced = forced_radius(weight);
        if radius.entries.iter().zip(&forced.entries).any(|(r, f)| r < f) {
            return pre(format!(
                "radius {:?} is smaller than the forced radius {:?}",
                radius.entries, forced.entries
            ));
        }
        let rmax = radius.entries.iter().copied().max().unwrap_or(0);
        // two Plücker divisions by p, one by p^R, plus slack
        let guard = 2 * (1 + rmax) + 2;
        let work_digits = digits + guard;
        if work_digits > crate::zp::max_digits(p) {
            return Err(HaloError::Certification(format!(
                "precision {digits} plus {guard} guard digits exceeds the 126-bit limit for p={p}; attainable {}",
                crate::zp::max_digits(p).saturating_sub(guard)
            )));
        }
        let level = weight.wild_level();
        let e = crate::padic_core::ramification(p, level) as u32;
        let ctx = CycloContext::new(p, level, digits * e)?;
        let balls = Balls::new(p, &radius)?;
        let mons = Monomials::new(n * (n - 1) / 2, degree);
        Ok(ActionSetup {
            weight: weight.clone(),
            radius,
            balls,
            mons,
            ctx,
            work: Zpn::new(p, work_digits),
            out_digits: digits,
        })
    }

    pub fn n(&self) -> usize {
        self.weight.n()
    }

    fn sr(&self) -> SeriesRing<'_> {
        SeriesRing { mons: &self.mons, r: &self.work }
    }

    fn nbar(&self, z: &[Series]) -> SMat {
        let n = self.n();
        let sr = self.sr();
        let p = self.work.from_u64(self.weight.p);
        let mut m: SMat = vec![vec![sr.zero(); n]; n];
        for i in 0..n {
            m[i][i] = sr.constant(1);
        }
        for (v, &(i, j)) in HalfMatrix::positions(n).iter().enumerate() {
            m[i - 1][j - 1] = sr.scale(&z[v], p);
        }
        m
    }

    /// Lower coordinates z*_ij = Z_{j,σ_ij}(X)/(p t_j) and diagonal ratios
    /// d_j = t_j/t_{j−1} of X ∈ Iw.
    fn decompose(&self, x: &SMat) -> Result<(Vec<Series>, Vec<Series>)> {
        let n = self.n();
        let sr = self.sr();
        let one = sr.constant(1);
        let zero = sr.zero();
        let det = |rows: &[usize], cols: &[usize]| -> Series {
            det_generic(
                x,
                rows,
                cols,
                &one,
                &|a, b| sr.mul(a, b),
                &|a, b| sr.add(a, b),
                &|a| sr.sub(&zero, a),
                &zero,
            )
        };
        let mut t: Vec<Series> = vec![sr.constant(1)];
        for j in 1..=n {
            let idx: Vec<usize> = (0..j).collect();
            t.push(det(&idx, &idx));
        }
        let mut t_inv = Vec::with_capacity(n + 1);
        for s in &t {
            t_inv.push(sr.inv(s)?);
        }
        let mut z = Vec::new();
        for &(i, j) in &HalfMatrix::positions(n) {
            let mut rows: Vec<usize> = (0..j - 1).collect();
            rows.push(i - 1);
            let cols: Vec<usize> = (0..j).collect();
            let num = divide_p_pow(&self.work, &det(&rows, &cols), 1).ok_or_else(|| {
                HaloError::Precondition("element is not in the Iwahori group".into())
            })?;
            z.push(sr.mul(&num, &t_inv[j]));
        }
        let d = (1..=n).map(|j| sr.mul(&t[j], &t_inv[j - 1])).collect();
        Ok((z, d))
    }

    /// Image data of `term` on output ball `ball`.
    pub fn ball_image(&self, term: &Term, ball: usize) -> Result<BallImage> {
        let n = self.n();
        let p = self.weight.p;
        let sr = self.sr();
        let r = &self.work;
        let pos = HalfMatrix::positions(n);
        let b = &self.balls.list[ball];
        // z_ij = b_ij + p^{R_j} y_ij
        let mut z: Vec<Series> = Vec::with_capacity(pos.len());
        for (v, &(i, j)) in pos.iter().enumerate() {
            let mut s = sr.constant(r.from_u64(b[v]));
            if self.mons.degree > 0 {
                s.c[self.mons.var(v)] = r.pow(r.from_u64(p), self.radius.get(i, j) as u64);
            }
            z.push(s);
        }
        let mut d_total: Vec<Series> = vec![sr.constant(1); n];
        let trivial_step = term.a.iter().all(|&x| x == term.a[0]) && term.y0.iter().all(|y| y.is_zero());
        if !trivial_step {
            // Y = N(y0)^{-1} N̄(z) = N̄(z1) T N', then u^{-a} N̄(z1) u^a.
            let mut nu: IntMat = identity(n);
            for (v, &(i, j)) in upper_positions(n).iter().enumerate() {
                nu[i - 1][j - 1] = term.y0[v].clone();
            }
            let nu_t: IntMat = (0..n).map(|i| (0..n).map(|j| nu[j][i].clone()).collect()).collect();
            let inv_t = unipotent_inverse(&nu_t);
            let nz = self.nbar(&z);
            let mut y: SMat = vec![vec![sr.zero(); n]; n];
            for i in 0..n {
                for j in 0..n {
                    let mut acc = sr.zero();
                    for k in 0..n {
                        let c = r.from_bigint(&inv_t[k][i]);
                        if c != 0 {
                            acc = sr.add(&acc, &sr.scale(&nz[k][j], c));
                        }
                    }
                    y[i][j] = acc;
                }
            }
            let (z1, d1) = self.decompose(&y)?;
            for (v, &(i, j)) in pos.iter().enumerate() {
                let sh = term.a[j - 1] - term.a[i - 1];
                if sh < 0 {
                    return pre("a must be nonincreasing");
                }
                z[v] = sr.scale(&z1[v], r.pow(r.from_u64(p), sh as u64));
            }
            d_total = d1;
        }
        let nz = self.nbar(&z);
        let mut x: SMat = vec![vec![sr.zero(); n]; n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = sr.zero();
                for k in j..n {
                    let c = r.from_bigint(&term.g[i][k]);
                    if c != 0 {
                        acc = sr.add(&acc, &sr.scale(&nz[k][j], c));
                    }
                }
                x[i][j] = acc;
            }
        }
        let (z2, d2) = self.decompose(&x)?;
        for j in 0..n {
            d_total[j] = sr.mul(&d_total[j], &d2[j]);
        }
        // y'_ij = (z_ij − b'_ij) / p^{R_j}
        let mut in_ball = vec![0u64; pos.len()];
        let mut yprime: Vec<Series> = Vec::with_capacity(pos.len());
        for (v, &(i, j)) in pos.iter().enumerate() {
            let rj = self.radius.get(i, j);
            let res = z2[v].c[0] % (p as u128).pow(rj);
            in_ball[v] = res as u64;
            let mut shifted = z2[v].clone();
            shifted.c[0] = r.sub(shifted.c[0], res);
            let y = divide_p_pow(r, &shifted, rj).ok_or_else(|| {
                HaloError::Precondition(
                    "image leaves its ball: radius is not preserved by this element".into(),
                )
            })?;
            yprime.push(y);
        }
        // weight: Π_j s_j(d_j(0)) · (1 + w_j)^{t_j}
        let ctx = &self.ctx;
        let mut wconst = ctx.one_raw();
        let mut wser = sr.constant(1);
        for j in 1..=n {
            let d = &d_total[j - 1];
            let d0 = d.c[0];
            let d0_inv = r.inv(d0).expect("unit");
            let mut wj = sr.scale(d, d0_inv);
            wj.c[0] = 0;
            // χ_j is trivial on 1 + p^{R+1}Z_p, so only the algebraic part
            // of s_j varies across the ball.
            let val = self.weight.eval_component(ctx, j - 1, &BigInt::from(d0))?;
            wconst = ctx.mul_raw(&wconst, &val);
            let tj = self.weight.t[j - 1];
            if tj != 0 {
                wser = sr.mul(&wser, &sr.binomial_pow(&wj, tj));
            }
        }
        // block[f][e] = coefficient of y^f in wser · y'^e
        let nm = self.mons.len();
        let mut block = vec![vec![0u128; nm]; nm];
        // powers of each y'_v up to degree D
        let mut ypows: Vec<Vec<Series>> = Vec::with_capacity(pos.len());
        for y in &yprime {
            let mut pw = vec![sr.constant(1)];
            for _ in 0..self.mons.degree {
                let nx = sr.mul(pw.last().unwrap(), y);
                pw.push(nx);
            }
            ypows.push(pw);
        }
        for (e_idx, e) in self.mons.exps.iter().enumerate() {
            let mut s = wser.clone();
            for (v, &k) in e.iter().enumerate() {
                if k > 0 {
                    s = sr.mul(&s, &ypows[v][k as usize]);
                }
            }
            for f in 0..nm {
                block[f][e_idx] = s.c[f];
            }
        }
        Ok(BallImage {
            in_ball: self.balls.index_of(&in_ball),
            weight_const: wconst,
            block,
        })
    }
}

/// Exact division of every coefficient by p^k; `None` if some coefficient
/// is not divisible. The result is meaningful modulo p^(N−k).
fn divide_p_pow(r: &Zpn, s: &Series, k: u32) -> Option<Series> {
    if k == 0 {
        return Some(s.clone());
    }
    let d = (r.p() as u128).pow(k);
    let mut out = s.clone();
    for c in out.c.iter_mut() {
        if *c % d != 0 {
            return None;
        }
        *c /= d;
    }
    Some(out)
}

fn unipotent_inverse(l: &IntMat) -> IntMat {
    let n = l.len();
    let mut inv = identity(n);
    for i in 0..n {
        for j in 0..i {
            let mut s = BigInt::zero();
            for k in j..i {
                s += &l[i][k] * &inv[k][j];
            }
            inv[i][j] = -s;
        }
    }
    inv
}

/// A truncated locally analytic function on the Iwahori group, stored as
/// coefficient blocks per ball.
#[derive(Clone, Debug)]
pub struct TruncatedFunction {
    pub weight: WeightCharacter,
    pub radius: HalfMatrix,
    pub degree_cap: u32,
    /// coeffs[ball][monomial] in the context ring.
    pub coeffs: Vec<Vec<Vec<u128>>>,
    pub ctx: Arc<CycloContext>,
}

impl TruncatedFunction {
    pub fn zero(setup: &ActionSetup) -> Self {
        TruncatedFunction {
            weight: setup.weight.clone(),
            radius: setup.radius.clone(),
            degree_cap: setup.mons.degree,
            coeffs: vec![vec![setup.ctx.zero_raw(); setup.mons.len()]; setup.balls.len()],
            ctx: setup.ctx.clone(),
        }
    }

    /// The monomial y^e on one ball.
    pub fn monomial(setup: &ActionSetup, ball: usize, e: &[u32]) -> Result<Self> {
        let mut f = Self::zero(setup);
        let idx = setup
            .mons
            .index_of(e)
            .ok_or_else(|| HaloError::Precondition("monomial above the degree cap".into()))?;
        f.coeffs[ball][idx] = setup.ctx.one_raw();
        Ok(f)
    }

    /// Smallest coefficient valuation (the sup norm).
    pub fn norm_val(&self) -> Valuation {
        self.coeffs
            .iter()
            .flatten()
            .filter_map(|c| self.ctx.val_raw(c))
            .min()
            .map(Valuation::Finite)
            .unwrap_or(Valuation::Infinity)
    }

    /// Value at a point z (entries in storage order), as a ring element.
    pub fn eval(&self, setup: &ActionSetup, z: &[BigInt]) -> Vec<u128> {
        let p = BigInt::from(setup.weight.p);
        let pos = HalfMatrix::positions(setup.n());
        let mut ball = Vec::with_capacity(pos.len());
        let mut ys = Vec::with_capacity(pos.len());
        for (v, &(i, j)) in pos.iter().enumerate() {
            let m = p.pow(self.radius.get(i, j));
            let b = z[v].mod_floor(&m);
            ys.push((&z[v] - &b) / &m);
            ball.push(b.try_into().unwrap_or(0u64));
        }
        let bi = setup.balls.index_of(&ball);
        let ctx = &self.ctx;
        let r = ctx.ring();
        let mut acc = ctx.zero_raw();
        for (k, e) in setup.mons.exps.iter().enumerate() {
            let mut m = BigInt::one();
            for (v, &x) in e.iter().enumerate() {
                m *= ys[v].pow(x);
            }
            let mv = r.from_bigint(&m);
            acc = ctx.add_raw(&acc, &ctx.scale_raw(&self.coeffs[bi][k], mv));
        }
        acc
    }
}

/// Applies one term to f: out(z) = f(g·u^{-a}N̄(z0)^{-1}N̄(z)u^a) with the
/// weight factor from the Iwahori decomposition.
pub fn apply_term(setup: &ActionSetup, term: &Term, f: &TruncatedFunction) -> Result<TruncatedFunction> {
    let ctx = &setup.ctx;
    let mut out = TruncatedFunction::zero(setup);
    let out_ring = ctx.ring();
    for ball in 0..setup.balls.len() {
        let img = setup.ball_image(term, ball)?;
        let src = &f.coeffs[img.in_ball];
        for (fi, row) in img.block.iter().enumerate() {
            let mut acc = ctx.zero_raw();
            for (ei, &g) in row.iter().enumerate() {
                let g = g % out_ring.modulus();
                if g != 0 && src[ei].iter().any(|&c| c != 0) {
                    acc = ctx.add_raw(&acc, &ctx.scale_raw(&src[ei], g));
                }
            }
            out.coeffs[ball][fi] = ctx.mul_raw(&acc, &img.weight_const);
        }
    }
    Ok(out)
}

/// (u·f)(N̄(z)) = f(u^{-1}N̄(z)).
pub fn act(setup: &ActionSetup, u: &IntMat, f: &TruncatedFunction) -> Result<TruncatedFunction> {
    let p = setup.weight.p;
    let g = iwahori_inverse(u, p, setup.work.digits())?;
    apply_term(setup, &Term::translation(g), f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::padic_core::ValReading;

    #[test]
    fn monomial_table() {
        let m = Monomials::new(3, 2);
        assert_eq!(m.len(), 10);
        assert_eq!(m.total_degree(0), 0);
        let m1 = Monomials::new(1, 5);
        assert_eq!(m1.exps.len(), 6);
    }

    #[test]
    fn scale_examples() {
        assert_eq!(scale_exponents(&[0, 0, 0], &[3, 1, 2]).unwrap(), 0);
        assert_eq!(scale_exponents(&[1, 0], &[7]).unwrap(), 7);
        assert_eq!(scale_exponents(&[2, 1, 0], &[1, 1, 1]).unwrap(), 4);
        assert!(scale_exponents(&[0, 1], &[1]).is_err());
    }

    #[test]
    fn plucker_examples() {
        let ctx = CycloContext::new(3, 0, 20).unwrap();
        let el = |x: i64| TruncatedElement::from_int(&ctx, x);
        let id: Vec<Vec<TruncatedElement>> =
            (0..3).map(|i| (0..3).map(|j| el((i == j) as i64)).collect()).collect();
        for j in 1..=3 {
            let s: Vec<usize> = (0..j).collect();
            assert!(plucker(&id, j, &s).unwrap().same_repr(&el(1)));
        }
        let (z21, z31, z32) = (2, 5, 7);
        let nb = vec![
            vec![el(1), el(0), el(0)],
            vec![el(3 * z21), el(1), el(0)],
            vec![el(3 * z31), el(3 * z32), el(1)],
        ];
        assert!(plucker(&nb, 1, &[2]).unwrap().same_repr(&el(3 * z31)));
        let v = plucker(&nb, 2, &[1, 2]).unwrap();
        assert!(v.same_repr(&el(9 * z21 * z32 - 3 * z31)));
        assert_eq!(
            plucker(&nb, 1, &[1]).unwrap().valuation(),
            ValReading::Exact(Valuation::int(1))
        );
    }

    #[test]
    fn identity_acts_trivially() {
        let w = WeightCharacter::from_conductors(3, vec![2, 0], &[2, 1], &[]).unwrap();
        let setup = ActionSetup::new(&w, forced_radius(&w), 4, 10).unwrap();
        let f = TruncatedFunction::monomial(&setup, 1, &[2]).unwrap();
        let g = act(&setup, &identity(2), &f).unwrap();
        assert_eq!(g.coeffs, f.coeffs);
    }
}
