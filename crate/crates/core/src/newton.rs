//! Lower convex hulls of (index, valuation) point sets, with exact slopes.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde_json::{json, Value};

use crate::error::{pre, HaloError, Result};
use crate::padic_core::Valuation;
use crate::rational::{fmt, Q};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NewtonPolygon {
    pub vertices: Vec<(u64, Q)>,
    pub slopes: Vec<(Q, u64)>,
}

fn qint(x: u64) -> Q {
    BigRational::from_integer(BigInt::from(x))
}

/// Cross product sign of (b−a)×(c−a); ≤ 0 means b is not strictly below ac.
fn turn(a: &(u64, Q), b: &(u64, Q), c: &(u64, Q)) -> Q {
    let (ax, bx, cx) = (qint(a.0), qint(b.0), qint(c.0));
    (bx - &ax) * (&c.1 - &a.1) - (&b.1 - &a.1) * (cx - ax)
}

pub fn lower_hull(points: &[(u64, Valuation)]) -> Result<NewtonPolygon> {
    let mut pts: Vec<(u64, Q)> = points
        .iter()
        .filter_map(|(x, v)| v.finite().map(|q| (*x, q.clone())))
        .collect();
    pts.sort();
    pts.dedup_by(|b, a| a.0 == b.0);
    match pts.first() {
        Some((0, y)) if y.is_zero() => {}
        _ => return pre("lower_hull needs the anchor point (0, 0)"),
    }
    let mut hull: Vec<(u64, Q)> = Vec::with_capacity(pts.len());
    for p in pts {
        while hull.len() >= 2 && !turn(&hull[hull.len() - 2], &hull[hull.len() - 1], &p).is_positive() {
            hull.pop();
        }
        hull.push(p);
    }
    Ok(NewtonPolygon::from_vertices(hull))
}

impl NewtonPolygon {
    fn from_vertices(vertices: Vec<(u64, Q)>) -> Self {
        let slopes = vertices
            .windows(2)
            .map(|w| {
                let dx = w[1].0 - w[0].0;
                ((&w[1].1 - &w[0].1) / qint(dx), dx)
            })
            .collect();
        NewtonPolygon { vertices, slopes }
    }

    pub fn extent(&self) -> u64 {
        self.vertices.last().map(|v| v.0).unwrap_or(0)
    }

    /// Polygon height at x, `None` beyond the last vertex.
    pub fn eval(&self, x: &Q) -> Option<Q> {
        if x.is_negative() || *x > qint(self.extent()) {
            return None;
        }
        for w in self.vertices.windows(2) {
            let (x0, x1) = (qint(w[0].0), qint(w[1].0));
            if *x <= x1 {
                return Some(&w[0].1 + (x - &x0) * (&w[1].1 - &w[0].1) / (x1 - x0));
            }
        }
        Some(self.vertices[0].1.clone())
    }

    /// Slopes with multiplicity, expanded.
    pub fn slope_list(&self) -> Vec<Q> {
        self.slopes
            .iter()
            .flat_map(|(s, m)| std::iter::repeat(s.clone()).take(*m as usize))
            .collect()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "vertices": self.vertices.iter().map(|(x, y)| json!([x, fmt(y)])).collect::<Vec<_>>(),
            "slopes": self.slopes.iter().map(|(s, m)| json!([fmt(s), m])).collect::<Vec<_>>(),
        })
    }
}

/// Number of slopes strictly below alpha and the vertex they end at.
pub fn slopes_below(np: &NewtonPolygon, alpha: &Q) -> (u64, (u64, Q)) {
    let mut count = 0;
    let mut end = np.vertices[0].clone();
    for (i, (s, m)) in np.slopes.iter().enumerate() {
        if s >= alpha {
            break;
        }
        count += m;
        end = np.vertices[i + 1].clone();
    }
    (count, end)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AboveReport {
    pub holds: bool,
    pub witness: Option<Q>,
    /// Bound points beyond the polygon's extent, which cannot be judged.
    pub unchecked: usize,
}

/// Whether the polygon lies on or above the piecewise-linear bound curve on
/// the common x-range.
pub fn lies_above(np: &NewtonPolygon, bound: &[(Q, Q)]) -> AboveReport {
    let ext = qint(np.extent());
    let mut unchecked = 0;
    for (x, y) in bound {
        match np.eval(x) {
            Some(v) if v < *y => {
                return AboveReport { holds: false, witness: Some(x.clone()), unchecked }
            }
            Some(_) => {}
            None => unchecked += 1,
        }
    }
    // Between bound points the polygon is convex and the bound linear, so the
    // polygon vertices also need checking.
    for w in bound.windows(2) {
        let (x0, y0) = &w[0];
        let (x1, y1) = &w[1];
        for (vx, vy) in &np.vertices {
            let vx = qint(*vx);
            if vx > *x0 && vx < *x1 && vx <= ext {
                let line = y0 + (&vx - x0) * (y1 - y0) / (x1 - x0);
                if *vy < line {
                    return AboveReport { holds: false, witness: Some(vx), unchecked };
                }
            }
        }
    }
    AboveReport { holds: true, witness: None, unchecked }
}

/// ν(x) = coeff · x^(num/den).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PowerLaw {
    pub coeff: Q,
    pub num: u32,
    pub den: u32,
}

fn qpow(x: &Q, k: u32) -> Q {
    let mut acc = Q::one();
    for _ in 0..k {
        acc *= x;
    }
    acc
}

impl PowerLaw {
    pub fn new(coeff: Q, num: u32, den: u32) -> Result<Self> {
        if !coeff.is_positive() || num == 0 || den == 0 {
            return pre("ν must be strictly increasing (positive coefficient and exponent)");
        }
        Ok(PowerLaw { coeff, num, den })
    }

    /// ν(x) ≤ y, exactly: c^den x^num ≤ y^den.
    pub fn at_most(&self, x: &Q, y: &Q) -> bool {
        if y.is_negative() {
            return false;
        }
        qpow(&self.coeff, self.den) * qpow(x, self.num) <= qpow(y, self.den)
    }

    /// x·ν(x) ≤ y.
    pub fn x_nu_at_most(&self, x: &Q, y: &Q) -> bool {
        if x.is_zero() {
            return !y.is_negative();
        }
        self.at_most(x, &(y / x))
    }

    /// An upper bound for ν^{-1}(y), exact when num = 1.
    pub fn inverse_upper(&self, y: &Q) -> Q {
        if !y.is_positive() {
            return Q::zero();
        }
        let base = y / &self.coeff;
        if self.num == 1 {
            return qpow(&base, self.den);
        }
        // ν(x) ≤ y iff x ≤ ν^{-1}(y); bisect on that predicate.
        let mut lo = Q::zero();
        let mut hi = Q::one();
        while self.at_most(&hi, y) {
            hi *= BigRational::from_integer(2.into());
        }
        let tol = BigRational::new(1.into(), BigInt::from(10u64).pow(9));
        while &hi - &lo > tol {
            let mid = (&lo + &hi) / BigRational::from_integer(2.into());
            if self.at_most(&mid, y) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }

    /// m_ν(α) = ⌊α ν^{-1}(α)⌋, rounded up when ν^{-1} is only bracketed.
    pub fn m_nu(&self, alpha: &Q) -> BigInt {
        let inv = self.inverse_upper(alpha);
        crate::rational::floor(&(alpha * inv)).max(BigInt::zero())
    }
}

/// Checks Wan's coincidence conclusion under its hypotheses.
///
/// `diff_vals[N]` is the valuation of the difference of the N-th
/// coefficients. Returns `Ok(true)` when the sides of slope ≤ alpha agree.
pub fn wan_coincide(
    v1: &[Valuation],
    v2: &[Valuation],
    diff_vals: &[Valuation],
    nu: &PowerLaw,
    alpha: &Q,
) -> Result<bool> {
    if v1.first() != Some(&Valuation::int(0)) || v2.first() != Some(&Valuation::int(0)) {
        return pre("both series must start with a unit constant term");
    }
    let pts = |v: &[Valuation]| -> Vec<(u64, Valuation)> {
        v.iter().enumerate().map(|(i, x)| (i as u64, x.clone())).collect()
    };
    let h1 = lower_hull(&pts(v1))?;
    let h2 = lower_hull(&pts(v2))?;
    for h in [&h1, &h2] {
        let one = Q::one();
        let mut checks: Vec<(Q, Q)> = h
            .vertices
            .iter()
            .filter(|(x, _)| *x >= 1)
            .map(|(x, y)| (qint(*x), y.clone()))
            .collect();
        if let Some(y1) = h.eval(&one) {
            checks.push((one, y1));
        }
        for (x, y) in checks {
            if !nu.x_nu_at_most(&x, &y) {
                return Err(HaloError::Precondition(format!(
                    "hull below x·ν(x) at x = {}",
                    fmt(&x)
                )));
            }
        }
    }
    let m = nu.m_nu(alpha);
    let need = Valuation::Finite(BigRational::from_integer(m + 1));
    if let Some(i) = diff_vals.iter().position(|d| *d < need) {
        return Err(HaloError::Precondition(format!(
            "coefficients {i} not congruent modulo p^(m_ν(α)+1)"
        )));
    }
    let sides = |h: &NewtonPolygon| -> Vec<(Q, u64)> {
        h.slopes.iter().filter(|(s, _)| s <= alpha).cloned().collect()
    };
    Ok(sides(&h1) == sides(&h2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    fn vals(v: &[i64]) -> Vec<(u64, Valuation)> {
        v.iter().enumerate().map(|(i, &x)| (i as u64, Valuation::int(x))).collect()
    }

    #[test]
    fn hull_examples() {
        let np = lower_hull(&vals(&[0, 2, 1, 3])).unwrap();
        assert_eq!(np.vertices, vec![(0, q(0, 1)), (2, q(1, 1)), (3, q(3, 1))]);
        assert_eq!(np.slopes, vec![(q(1, 2), 2), (q(2, 1), 1)]);
        let np = lower_hull(&[
            (0, Valuation::int(0)),
            (1, Valuation::Infinity),
            (2, Valuation::int(3)),
        ])
        .unwrap();
        assert_eq!(np.slopes, vec![(q(3, 2), 2)]);
        let np = lower_hull(&vals(&[0, 1, 2, 3])).unwrap();
        assert_eq!(np.slopes, vec![(q(1, 1), 3)]);
        assert!(lower_hull(&[(1, Valuation::int(0))]).is_err());
    }

    #[test]
    fn below_and_above() {
        let np = lower_hull(&vals(&[0, 2, 1, 3])).unwrap();
        assert_eq!(slopes_below(&np, &q(1, 1)), (2, (2, q(1, 1))));
        assert_eq!(slopes_below(&np, &q(0, 1)).0, 0);
        let flat = lower_hull(&vals(&[0, 0, 0, 0, 1])).unwrap();
        assert_eq!(slopes_below(&flat, &q(1, 2)).0, 3);
        let one = lower_hull(&vals(&[0, 1, 2, 3, 4, 5])).unwrap();
        assert!(lies_above(&one, &[(q(0, 1), q(0, 1)), (q(5, 1), q(4, 1))]).holds);
        let zero = lower_hull(&vals(&[0, 0, 0, 0, 0, 0])).unwrap();
        let r = lies_above(&zero, &[(q(5, 1), q(1, 1))]);
        assert!(!r.holds);
        assert_eq!(r.witness, Some(q(5, 1)));
        assert!(lies_above(&zero, &[]).holds);
    }

    #[test]
    fn wan_example() {
        let nu = PowerLaw::new(q(1, 1), 1, 1).unwrap();
        assert_eq!(nu.m_nu(&q(2, 1)), BigInt::from(4));
        let v: Vec<Valuation> = [0, 1, 4, 9, 16].iter().map(|&x| Valuation::int(x)).collect();
        let d = vec![Valuation::Infinity; 5];
        assert!(wan_coincide(&v, &v, &d, &nu, &q(2, 1)).unwrap());
        let mut bad = d.clone();
        bad[3] = Valuation::int(4);
        assert!(wan_coincide(&v, &v, &bad, &nu, &q(2, 1)).is_err());
    }

    #[test]
    fn fractional_inverse_is_upper() {
        let nu = PowerLaw::new(q(1, 1), 2, 3).unwrap();
        // ν^{-1}(4) = 4^{3/2} = 8
        let inv = nu.inverse_upper(&q(4, 1));
        assert!(inv >= q(8, 1) && inv < q(8, 1) + q(1, 1_000_000));
    }
}
