//! Independent oracles shared by the integration tests. Nothing here calls
//! into the library's arithmetic.
#![allow(dead_code)]

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};

pub type Q = BigRational;

pub fn q(n: i64, d: i64) -> Q {
    Q::new(n.into(), d.into())
}

pub fn vp(x: &BigInt, p: u64) -> Option<u32> {
    if x.is_zero() {
        return None;
    }
    let p = BigInt::from(p);
    let mut x = x.clone();
    let mut v = 0;
    while (&x % &p).is_zero() {
        x /= &p;
        v += 1;
    }
    Some(v)
}

pub fn vp_rat(x: &Q, p: u64) -> Option<i64> {
    Some(vp(x.numer(), p)? as i64 - vp(x.denom(), p).unwrap() as i64)
}

pub fn pow_mod(b: &BigInt, e: u64, m: &BigInt) -> BigInt {
    b.modpow(&BigInt::from(e), m)
}

pub fn inv_mod(a: &BigInt, m: &BigInt) -> BigInt {
    let g = a.extended_gcd(m);
    assert!(g.gcd.is_one(), "not a unit");
    g.x.mod_floor(m)
}

/// A p-integral rational reduced modulo p^k.
pub fn rat_mod(x: &Q, p: u64, k: u32) -> BigInt {
    let m = BigInt::from(p).pow(k);
    (x.numer() * inv_mod(&x.denom().mod_floor(&m), &m)).mod_floor(&m)
}

/// exp(q) modulo p^k by summing q^j/j! term by term.
pub fn exp_q_mod(p: u64, k: u32) -> BigInt {
    let qq: i64 = if p == 2 { 4 } else { p as i64 };
    let m = BigInt::from(p).pow(k);
    let mut acc = Q::zero();
    let mut term = Q::one();
    let mut j = 0i64;
    loop {
        acc += &term;
        j += 1;
        term = term * Q::from_integer(qq.into()) / Q::from_integer(j.into());
        // v(q^j/j!) ≥ j − j/(p−1) grows past k eventually
        if let Some(v) = vp_rat(&term, p) {
            if v >= k as i64 + 4 && j > 4 {
                break;
            }
        }
    }
    rat_mod(&acc, p, k) % m
}

/// v(T) for T = χ(exp q)·exp(q)^t − 1 via the norm from Q_p(ζ_{p^r}):
/// N(ζu − 1) = ±u^φ Φ_{p^r}(u^{-1}), and v(T) = v_p(N)/φ(p^r).
pub fn t_valuation_by_norm(p: u64, r: u32, t: i64, k: u32) -> Option<Q> {
    let m = BigInt::from(p).pow(k);
    let e = exp_q_mod(p, k);
    let u = if t >= 0 {
        pow_mod(&e, t as u64, &m)
    } else {
        inv_mod(&pow_mod(&e, (-t) as u64, &m), &m)
    };
    if r == 0 {
        let d = (&u - BigInt::one()).mod_floor(&m);
        return vp(&d, p).map(|v| q(v as i64, 1));
    }
    let x = inv_mod(&u, &m);
    let step = p.pow(r - 1);
    let mut phi_val = BigInt::zero();
    for i in 0..p {
        phi_val += pow_mod(&x, i * step, &m);
    }
    let phi_val = phi_val.mod_floor(&m);
    let v = vp(&phi_val, p).expect("norm vanished modulo p^k; raise k");
    assert!(v < k);
    let deg = (p - 1) * step;
    Some(q(v as i64, deg as i64))
}

/// Number of Gelfand–Tsetlin patterns with top row t.
pub fn gt_count(top: &[i64]) -> u64 {
    if top.len() <= 1 {
        return 1;
    }
    // interlacing rows below: top[i] ≥ row[i] ≥ top[i+1]
    let mut total = 0;
    let mut row = vec![0i64; top.len() - 1];
    fn rec(top: &[i64], i: usize, row: &mut Vec<i64>, total: &mut u64) {
        if i == row.len() {
            *total += gt_count(row);
            return;
        }
        for x in top[i + 1]..=top[i] {
            row[i] = x;
            rec(top, i + 1, row, total);
        }
    }
    rec(top, 0, &mut row, &mut total);
    total
}

/// Slopes of the lower convex hull of (x, y) points, y = None meaning +∞.
pub fn hull_slopes(pts: &[(u64, Option<Q>)]) -> Vec<(Q, u64)> {
    let fin: Vec<(u64, Q)> = pts.iter().filter_map(|(x, y)| y.clone().map(|y| (*x, y))).collect();
    let mut hull: Vec<(u64, Q)> = Vec::new();
    for pt in fin {
        while hull.len() >= 2 {
            let (x1, y1) = &hull[hull.len() - 2];
            let (x2, y2) = &hull[hull.len() - 1];
            // drop the middle point if it is on or above the chord
            let lhs = (y2 - y1) * Q::from_integer(BigInt::from(pt.0 - x1));
            let rhs = (&pt.1 - y1) * Q::from_integer(BigInt::from(x2 - x1));
            if lhs >= rhs {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(pt);
    }
    hull.windows(2)
        .map(|w| ((&w[1].1 - &w[0].1) / Q::from_integer(BigInt::from(w[1].0 - w[0].0)), w[1].0 - w[0].0))
        .collect()
}

pub type RatMat = Vec<Vec<Q>>;

pub fn rat_mat(m: &[Vec<BigInt>]) -> RatMat {
    m.iter().map(|r| r.iter().map(|x| Q::from_integer(x.clone())).collect()).collect()
}

pub fn rat_mul(a: &RatMat, b: &RatMat) -> RatMat {
    let n = a.len();
    (0..n)
        .map(|i| (0..n).map(|j| (0..n).map(|k| &a[i][k] * &b[k][j]).sum()).collect())
        .collect()
}

/// X = L·D·U with L lower unipotent, D diagonal, U upper unipotent.
/// Returns (L, diag of D); None if a leading minor vanishes.
pub fn ldu(x: &RatMat) -> Option<(RatMat, Vec<Q>)> {
    let n = x.len();
    let mut a = x.clone();
    let mut l: RatMat = (0..n).map(|i| (0..n).map(|j| if i == j { Q::one() } else { Q::zero() }).collect()).collect();
    for k in 0..n {
        if a[k][k].is_zero() {
            return None;
        }
        for i in k + 1..n {
            let f = &a[i][k] / &a[k][k];
            l[i][k] = f.clone();
            for j in k..n {
                let t = &f * &a[k][j];
                a[i][j] -= t;
            }
        }
    }
    Some((l, (0..n).map(|i| a[i][i].clone()).collect()))
}

/// g ∈ Iw: p-integral, unit diagonal, entries below the diagonal in pZ_p.
pub fn rat_in_iwahori(g: &RatMat, p: u64) -> bool {
    let n = g.len();
    for i in 0..n {
        for j in 0..n {
            match vp_rat(&g[i][j], p) {
                None => {
                    if i == j {
                        return false;
                    }
                }
                Some(v) => {
                    let need = if i > j { 1 } else { 0 };
                    if (i == j && v != 0) || v < need {
                        return false;
                    }
                }
            }
        }
    }
    true
}

pub fn rat_inv(m: &RatMat) -> Option<RatMat> {
    let n = m.len();
    let mut a: RatMat = m
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut r = r.clone();
            r.extend((0..n).map(|j| if i == j { Q::one() } else { Q::zero() }));
            r
        })
        .collect();
    for c in 0..n {
        let piv = (c..n).find(|&r| !a[r][c].is_zero())?;
        a.swap(c, piv);
        let inv = Q::one() / &a[c][c];
        for x in a[c].iter_mut() {
            *x *= &inv;
        }
        for r in 0..n {
            if r != c && !a[r][c].is_zero() {
                let f = a[r][c].clone();
                for k in 0..2 * n {
                    let t = &f * &a[c][k];
                    a[r][k] -= t;
                }
            }
        }
    }
    Some(a.into_iter().map(|r| r[n..].to_vec()).collect())
}

/// Lower-unipotent N̄(z) with (i, j) entry p·z_ij, z in the order
/// (2,1),(3,1),(3,2),….
pub fn nbar(n: usize, p: u64, z: &[BigInt]) -> RatMat {
    let mut m: RatMat = (0..n).map(|i| (0..n).map(|j| if i == j { Q::one() } else { Q::zero() }).collect()).collect();
    for (v, &(i, j)) in lower_positions(n).iter().enumerate() {
        m[i - 1][j - 1] = Q::from_integer(&z[v] * BigInt::from(p));
    }
    m
}

/// (i, j), i > j, 1-based, in the order (2,1),(3,1),(3,2),(4,1),….
pub fn lower_positions(n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 2..=n {
        for j in 1..i {
            out.push((i, j));
        }
    }
    out
}

