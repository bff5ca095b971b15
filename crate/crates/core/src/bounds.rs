//! Lower-bound point sequence, the upper-bound point and its Wan iterates.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{pre, HaloError, Result};
use crate::newton::PowerLaw;
use crate::padic_core::{CycloContext, Valuation};
use crate::rational::{binom, fmt, q, Q};
use crate::rep_theory::{slope_budget, weyl_dim};
use crate::weight_space::{roche_subgroup, t_coordinates, WeightCharacter};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundKind {
    Lower,
    Upper,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundPoint {
    pub x: Q,
    pub y: Q,
    pub kind: BoundKind,
}

impl BoundPoint {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({ "x": fmt(&self.x), "y": fmt(&self.y), "kind": self.kind })
    }
}

/// Points (h Σ_{N≤M} b_N, h Σ_{N≤M} b_N (N − ⌊N/p⌋)·vTa) with
/// b_N = binom(N+d−1, d−1), d = n(n−1)/2.
pub fn lower_bound_points(n: usize, p: u64, h: u64, v_ta: &Q, m_max: u64) -> Result<Vec<BoundPoint>> {
    if !v_ta.is_positive() || *v_ta >= Q::one() {
        return pre("v(T_a) must lie strictly between 0 and 1");
    }
    if n < 2 {
        return pre("n must be at least 2");
    }
    let d = (n * (n - 1) / 2) as u64;
    let hb = BigInt::from(h);
    let mut x = BigInt::zero();
    let mut y = BigInt::zero();
    let mut out = Vec::with_capacity(m_max as usize + 1);
    for nn in 0..=m_max {
        let b = binom(nn + d - 1, d - 1);
        y += &b * BigInt::from(nn - nn / p);
        x += b;
        out.push(BoundPoint {
            x: Q::from_integer(&hb * &x),
            y: Q::from_integer(&hb * &y) * v_ta,
            kind: BoundKind::Lower,
        });
    }
    Ok(out)
}

/// Fit of the lower-bound points by y = (A_1 x^γ − C)·vTa, γ = 1 + 1/d.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LowerConstants {
    pub a1: Q,
    pub c: Q,
    /// γ = (d+1)/d as (d+1, d).
    pub exponent: (u32, u32),
}

impl LowerConstants {
    /// A_1 x^γ − C ≤ y, compared exactly through d-th powers.
    pub fn curve_below(&self, x: &Q, y: &Q) -> bool {
        let (num, den) = self.exponent;
        let rhs = y + &self.c;
        if rhs.is_negative() {
            return false;
        }
        let pw = |v: &Q, k: u32| -> Q { (0..k).fold(Q::one(), |acc, _| acc * v) };
        pw(&self.a1, den) * pw(x, num) <= pw(&rhs, den)
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        let (num, den) = self.exponent;
        crate::rational::to_f64(&self.a1) * x.powf(num as f64 / den as f64) - crate::rational::to_f64(&self.c)
    }
}

const FIT_M: u64 = 50;

/// A_1 from the ratio y(M)/x(M)^γ at M = 50; C the least shift on a 10^-6
/// grid that puts the curve below every point up to M = 50. Both are in
/// units of vTa.
pub fn lower_bound_constants(n: usize, p: u64, h: u64) -> Result<LowerConstants> {
    let pts = lower_bound_points(n, p, h, &q(1, 2), FIT_M)?;
    // undo vTa = 1/2
    let pts: Vec<(Q, Q)> = pts.into_iter().map(|b| (b.x, b.y * q(2, 1))).collect();
    let d = (n * (n - 1) / 2) as u32;
    let gamma = (d + 1) as f64 / d as f64;
    let (xl, yl) = pts.last().unwrap();
    let a1f = crate::rational::to_f64(yl) / crate::rational::to_f64(xl).powf(gamma);
    let scale = 1_000_000i64;
    let a1 = Q::new(BigInt::from((a1f * scale as f64).floor() as i64), BigInt::from(scale));
    let cf = pts
        .iter()
        .map(|(x, y)| crate::rational::to_f64(&a1) * crate::rational::to_f64(x).powf(gamma) - crate::rational::to_f64(y))
        .fold(0.0f64, f64::max);
    let mut c = Q::new(BigInt::from((cf * scale as f64).ceil() as i64), BigInt::from(scale));
    let mut lc = LowerConstants { a1, c: c.clone(), exponent: (d + 1, d) };
    // float rounding may leave a point just below the curve
    while !pts.iter().all(|(x, y)| lc.curve_below(x, y)) {
        c += Q::new(BigInt::one(), BigInt::from(scale));
        lc.c = c.clone();
    }
    Ok(lc)
}

#[derive(Clone, Debug, PartialEq)]
pub struct UpperPoint {
    pub point: BoundPoint,
    pub j_index: u32,
    pub d_t: BigInt,
    pub l_t: Q,
    /// Π v(T_(i))^{2i/(n(n−1))}, conductors sorted ascending.
    pub t_product: Option<f64>,
    /// y / (t_product · x^γ) when the ε-regularity holds.
    pub a2: Option<f64>,
    /// Exact forms: t_product^{n(n−1)} and a2^{n(n−1)} are rational.
    pub exact_power: u32,
    pub t_product_pow: Option<Q>,
    pub a2_pow: Option<Q>,
}

fn qpow(x: &Q, k: u32) -> Q {
    (0..k).fold(Q::one(), |acc, _| acc * x)
}

/// t_product^{n(n−1)} = Π v(T_(i))^{2i}, exactly.
pub fn t_product_pow(w: &WeightCharacter) -> Result<Option<Q>> {
    let n = w.n();
    let ctx = CycloContext::new(w.p, w.wild_level(), 1)?;
    let tc = t_coordinates(w, &ctx)?;
    let mut items: Vec<(u32, Valuation)> = (0..n - 1).map(|i| (w.conductor(i), tc.vals[i].clone())).collect();
    items.sort_by_key(|(c, _)| *c);
    let mut acc = Q::one();
    for (k, (_, v)) in items.iter().enumerate() {
        match v {
            Valuation::Infinity => return Ok(None),
            Valuation::Finite(x) => acc *= qpow(x, 2 * (k as u32 + 1)),
        }
    }
    Ok(Some(acc))
}

/// Weighted product of v(T_(i)) over χ_1..χ_{n−1} ordered by conductor.
pub fn t_product(w: &WeightCharacter) -> Result<Option<f64>> {
    let n = w.n();
    let ctx = CycloContext::new(w.p, w.wild_level(), 1)?;
    let tc = t_coordinates(w, &ctx)?;
    let mut items: Vec<(u32, Valuation)> = (0..n - 1).map(|i| (w.conductor(i), tc.vals[i].clone())).collect();
    items.sort_by_key(|(c, _)| *c);
    let tot = (n * (n - 1)) as f64;
    let mut acc = 1.0f64;
    for (k, (_, v)) in items.iter().enumerate() {
        match v {
            Valuation::Infinity => return Ok(None),
            Valuation::Finite(x) => acc *= crate::rational::to_f64(x).powf(2.0 * (k as f64 + 1.0) / tot),
        }
    }
    Ok(Some(acc))
}

/// x = h p^{j(χ)} d_t, y = x·l(t) with l(t) the slope budget for
/// a = (n−1, …, 1, 0).
pub fn upper_bound_point(w: &WeightCharacter, h: u64, eps: Option<&Q>) -> Result<UpperPoint> {
    let n = w.n();
    if w.t.windows(2).any(|x| x[0] < x[1]) {
        return pre("t must be dominant");
    }
    let roche = roche_subgroup(w)?;
    let d_t = weyl_dim(&w.t)?;
    let a: Vec<i64> = (0..n as i64).rev().collect();
    let m = w.m();
    let l_t = slope_budget(&a, &m, None)?.value;
    let x = Q::from_integer(BigInt::from(h) * BigInt::from(w.p).pow(roche.j_index) * &d_t);
    let y = &x * &l_t;
    let tp = t_product(w)?;
    let regular = match eps {
        None => false,
        Some(e) => {
            let gaps: Vec<Q> = (0..n - 1).map(|i| q(w.t[i] - w.t[i + 1], 1)).collect();
            gaps.iter().enumerate().all(|(i, gi)| {
                gaps.iter().enumerate().all(|(j, gj)| i == j || *gi >= e * gj)
            })
        }
    };
    let power = (n * (n - 1)) as u32;
    let tpp = t_product_pow(w)?;
    // a2^{2d} = y^{2d} / (t_product^{2d} · x^{2d+2})
    let a2_pow = match (regular, &tpp) {
        (true, Some(t)) if t.is_positive() && !x.is_zero() => Some(qpow(&y, power) / (t * qpow(&x, power + 2))),
        _ => None,
    };
    let a2 = match (regular, tp) {
        (true, Some(prod)) if prod > 0.0 => {
            let d = (n * (n - 1) / 2) as f64;
            let xf = crate::rational::to_f64(&x);
            Some(crate::rational::to_f64(&y) / (prod * xf.powf(1.0 + 1.0 / d)))
        }
        _ => None,
    };
    Ok(UpperPoint {
        point: BoundPoint { x, y, kind: BoundKind::Upper },
        j_index: roche.j_index,
        d_t,
        l_t,
        t_product: tp,
        a2,
        exact_power: power,
        t_product_pow: tpp,
        a2_pow,
    })
}

/// Result of the Wan iteration: the points and the weights they belong to.
#[derive(Clone, Debug, PartialEq)]
pub struct IteratedBounds {
    pub points: Vec<BoundPoint>,
    pub weights: Vec<Vec<i64>>,
    /// Set when the iteration stopped early on the integer budget.
    pub halted: Option<String>,
}

/// Largest exponent of p allowed in the t-increments.
pub const M_NU_BUDGET: u64 = 40;

/// t^{(k+1)}_i = t^{(k)}_i + (n−i)·p^{m_ν(l(t^{(k)}))+1}·φ(q), with
/// ν(x) = A_1 x^{2/(n(n−1))}·min v(T_i). A negative l gives m_ν = 0.
pub fn iterated_upper_bounds(w: &WeightCharacter, h: u64, k_max: u64, a1: &Q) -> Result<IteratedBounds> {
    let n = w.n();
    let p = w.p;
    let ctx = CycloContext::new(p, w.wild_level(), 1)?;
    let vmin = t_coordinates(w, &ctx)?.v_ta();
    let vmin = match vmin {
        Valuation::Finite(v) => v,
        Valuation::Infinity => return pre("weight has no finite T-coordinate"),
    };
    let d = (n * (n - 1) / 2) as u32;
    let nu = PowerLaw::new(a1 * &vmin, 1, d)?;
    let qv = if p == 2 { 4u64 } else { p };
    let phi_q = qv - qv / p;
    let mut cur = w.clone();
    let mut points = vec![upper_bound_point(&cur, h, None)?.point];
    let mut weights = vec![cur.t.clone()];
    let mut halted = None;
    for _ in 0..k_max {
        let a: Vec<i64> = (0..n as i64).rev().collect();
        let l = slope_budget(&a, &cur.m(), None)?.value;
        let m_nu = nu.m_nu(&l);
        let m_nu = match m_nu.to_u64() {
            Some(v) if v < M_NU_BUDGET => v,
            _ => {
                halted = Some(format!("m_ν = {m_nu} exceeds the budget {M_NU_BUDGET}"));
                break;
            }
        };
        let step = BigInt::from(p).pow(m_nu as u32 + 1) * BigInt::from(phi_q);
        let Some(step) = step.to_i64() else {
            halted = Some("t increment overflows".into());
            break;
        };
        let mut t = cur.t.clone();
        for (i, ti) in t.iter_mut().enumerate() {
            let add = step.checked_mul((n - 1 - i) as i64).and_then(|s| ti.checked_add(s));
            match add {
                Some(v) => *ti = v,
                None => {
                    halted = Some("t increment overflows".into());
                    break;
                }
            }
        }
        if halted.is_some() {
            break;
        }
        debug_assert!(t.iter().zip(&w.t).all(|(a, b)| (a - b).mod_floor(&(phi_q as i64)) == 0));
        cur = WeightCharacter { t, ..cur };
        points.push(upper_bound_point(&cur, h, None)?.point);
        weights.push(cur.t.clone());
    }
    if let Some(msg) = &halted {
        if points.len() == 1 && k_max > 0 {
            return Err(HaloError::Budget(msg.clone()));
        }
    }
    Ok(IteratedBounds { points, weights, halted })
}
