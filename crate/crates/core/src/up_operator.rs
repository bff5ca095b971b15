//! Synthetic global data, coset representatives of Iw u^a Iw, the matrix of
//! U_p^a on truncated ball-wise monomial bases, and its characteristic series.

use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{pre, HaloError, Result};
use crate::iwahori::{identity, in_iwahori, min_gap, upper_positions, ActionSetup, IntMat, Term};
use crate::newton::{lower_hull, NewtonPolygon};
use crate::padic_core::{vp_u64, CycloContext, Valuation};
use crate::rational::Q;
use crate::weight_space::{forced_radius, HalfMatrix, WeightCharacter};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GluingEntry {
    pub rep: usize,
    pub component: usize,
    pub target: usize,
    pub twist: Vec<Vec<i64>>,
}

/// Class-set size h and, per (coset representative, component), the target
/// component and Iwahori twist. Missing entries mean target = component and
/// twist = identity.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GlobalData {
    pub h: usize,
    #[serde(default)]
    pub gluing: Vec<GluingEntry>,
}

impl GlobalData {
    pub fn trivial(h: usize) -> Self {
        GlobalData { h, gluing: Vec::new() }
    }

    pub fn validate(&self, n: usize, p: u64) -> Result<()> {
        if self.h == 0 {
            return Err(HaloError::Config("h must be positive".into()));
        }
        for g in &self.gluing {
            if g.component >= self.h || g.target >= self.h {
                return Err(HaloError::Config(format!(
                    "gluing entry (rep {}, component {}) points outside 0..{}",
                    g.rep, g.component, self.h
                )));
            }
            if g.twist.len() != n || g.twist.iter().any(|r| r.len() != n) {
                return Err(HaloError::Config(format!("twist for rep {} is not {n}x{n}", g.rep)));
            }
            let m: IntMat = g.twist.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect();
            if !in_iwahori(&m, p) {
                return Err(HaloError::Config(format!(
                    "twist for (rep {}, component {}) is not in the Iwahori group mod {p}",
                    g.rep, g.component
                )));
            }
        }
        Ok(())
    }

    /// (target component, twist) for a coset representative and component.
    pub fn lookup(&self, rep: usize, component: usize, n: usize) -> (usize, IntMat) {
        for g in &self.gluing {
            if g.rep == rep && g.component == component {
                let m = g.twist.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect();
                return (g.target, m);
            }
        }
        (component, identity(n))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| HaloError::Config(e.to_string()))
    }
}

/// A left coset N(y)·u^a of Iw u^a Iw.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CosetRep {
    /// Upper entries y_ij, i < j, in the order (1,2),(1,3),(2,3),….
    pub y: Vec<BigInt>,
    pub matrix: Vec<Vec<Q>>,
}

/// N(y)·u^a with y_ij ranging over residues mod p^{a_i − a_j}, i < j.
pub fn coset_reps(n: usize, p: u64, a: &[i64]) -> Result<Vec<CosetRep>> {
    if a.len() != n {
        return pre("a must have length n");
    }
    if a.windows(2).any(|w| w[0] < w[1]) {
        return pre("a must be nonincreasing");
    }
    let ups = upper_positions(n);
    let moduli: Vec<u64> = ups.iter().map(|&(i, j)| p.pow((a[i - 1] - a[j - 1]) as u32)).collect();
    let count = moduli.iter().try_fold(1u64, |x, &m| x.checked_mul(m));
    let count = match count {
        Some(c) if c <= 1 << 20 => c,
        _ => return Err(HaloError::Budget("too many coset representatives".into())),
    };
    let pq = |k: i64| -> Q {
        if k >= 0 {
            Q::from_integer(BigInt::from(p).pow(k as u32))
        } else {
            Q::new(BigInt::one(), BigInt::from(p).pow((-k) as u32))
        }
    };
    let mut out = Vec::with_capacity(count as usize);
    for mut idx in 0..count {
        let mut y = vec![BigInt::zero(); ups.len()];
        for k in (0..ups.len()).rev() {
            y[k] = BigInt::from(idx % moduli[k]);
            idx /= moduli[k];
        }
        let mut m = vec![vec![Q::zero(); n]; n];
        for i in 0..n {
            m[i][i] = pq(a[i]);
        }
        for (k, &(i, j)) in ups.iter().enumerate() {
            m[i - 1][j - 1] = Q::from_integer(y[k].clone()) * pq(a[j - 1]);
        }
        out.push(CosetRep { y, matrix: m });
    }
    Ok(out)
}

fn rat_matmul(a: &[Vec<Q>], b: &[Vec<Q>]) -> Vec<Vec<Q>> {
    let n = a.len();
    (0..n)
        .map(|i| (0..n).map(|j| (0..n).map(|k| &a[i][k] * &b[k][j]).sum()).collect())
        .collect()
}

/// Inverse by Gauss-Jordan over Q.
pub fn rat_inverse(m: &[Vec<Q>]) -> Option<Vec<Vec<Q>>> {
    let n = m.len();
    let mut a: Vec<Vec<Q>> = m.to_vec();
    let mut inv: Vec<Vec<Q>> =
        (0..n).map(|i| (0..n).map(|j| if i == j { Q::one() } else { Q::zero() }).collect()).collect();
    for c in 0..n {
        let piv = (c..n).find(|&r| !a[r][c].is_zero())?;
        a.swap(c, piv);
        inv.swap(c, piv);
        let f = a[c][c].clone();
        for j in 0..n {
            a[c][j] = &a[c][j] / &f;
            inv[c][j] = &inv[c][j] / &f;
        }
        for r in 0..n {
            if r != c && !a[r][c].is_zero() {
                let f = a[r][c].clone();
                for j in 0..n {
                    let t = &a[r][j] - &f * &a[c][j];
                    a[r][j] = t;
                    let t = &inv[r][j] - &f * &inv[c][j];
                    inv[r][j] = t;
                }
            }
        }
    }
    Some(inv)
}

/// Membership of a rational matrix in the Iwahori group.
pub fn rat_in_iwahori(m: &[Vec<Q>], p: u64) -> bool {
    let pb = BigInt::from(p);
    let n = m.len();
    for i in 0..n {
        for j in 0..n {
            let x = &m[i][j];
            if (x.denom() % &pb).is_zero() {
                return false;
            }
            let num_div = (x.numer() % &pb).is_zero();
            if i == j && num_div {
                return false;
            }
            if i > j && !num_div {
                return false;
            }
        }
    }
    true
}

/// True when the representatives lie in pairwise distinct left Iw-cosets.
pub fn distinct_cosets(reps: &[CosetRep], p: u64) -> bool {
    for (i, r) in reps.iter().enumerate() {
        let Some(ri) = rat_inverse(&r.matrix) else { return false };
        for s in &reps[i + 1..] {
            if rat_in_iwahori(&rat_matmul(&ri, &s.matrix), p) {
                return false;
            }
        }
    }
    true
}

/// Index of a basis vector: component, ball, monomial.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct BasisLabel {
    pub component: usize,
    pub ball: usize,
    pub monomial: usize,
    pub degree: u32,
}

/// Matrix of U_p^a on the truncated basis. Entries are exact modulo p^digits.
pub struct UpMatrix {
    pub dim: usize,
    pub ctx: Arc<CycloContext>,
    /// Row-major ring elements.
    pub entries: Vec<Vec<Vec<u128>>>,
    pub basis: Vec<BasisLabel>,
    /// Valuation floor of every entry in the row, in p-units.
    pub row_floor: Vec<u64>,
    /// Row floors are gap·|e|; at most 1 for a non-central a.
    pub gap: u64,
    pub degree_cap: u32,
    pub digits: u32,
    pub radius: HalfMatrix,
    /// False when the matrix is the whole operator (no excluded basis).
    pub truncated: bool,
}

impl UpMatrix {
    /// A finite integer matrix viewed as a complete operator over Z_p.
    pub fn from_int_matrix(p: u64, rows: &[Vec<i64>], digits: u32) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return pre("matrix must be square");
        }
        let ctx = CycloContext::new(p, 0, digits)?;
        let entries = rows
            .iter()
            .map(|r| r.iter().map(|&x| ctx.int_raw(&BigInt::from(x))).collect())
            .collect();
        let basis = (0..dim)
            .map(|i| BasisLabel { component: 0, ball: 0, monomial: i, degree: 0 })
            .collect();
        Ok(UpMatrix {
            dim,
            ctx,
            entries,
            basis,
            row_floor: vec![0; dim],
            gap: 0,
            degree_cap: 0,
            digits,
            radius: HalfMatrix::constant(1, 0),
            truncated: false,
        })
    }

    /// Floors of all rows of the untruncated operator, sorted; the first
    /// `count` of them.
    pub fn smallest_floors(&self, count: usize) -> Vec<u64> {
        let mut f = self.row_floor.clone();
        f.sort_unstable();
        f.truncate(count);
        f
    }

    pub fn entry_val(&self, r: usize, c: usize) -> Valuation {
        match self.ctx.val_raw(&self.entries[r][c]) {
            Some(v) => Valuation::Finite(v),
            None => Valuation::Infinity,
        }
    }
}

/// Options for `assemble_up`.
#[derive(Clone, Debug)]
pub struct AssembleOptions {
    pub degree: u32,
    pub digits: u32,
    pub radius: Option<HalfMatrix>,
}

pub fn assemble_up(w: &WeightCharacter, g: &GlobalData, a: &[i64], opts: &AssembleOptions) -> Result<UpMatrix> {
    let n = w.n();
    let p = w.p;
    g.validate(n, p)?;
    let radius = opts.radius.clone().unwrap_or_else(|| forced_radius(w));
    let setup = ActionSetup::new(w, radius.clone(), opts.degree, opts.digits)?;
    let reps = coset_reps(n, p, a)?;
    let central = a.iter().all(|&x| x == a[0]);
    let nb = setup.balls.len();
    let nm = setup.mons.len();
    let dim = g.h * nb * nm;
    let idx = |comp: usize, ball: usize, mon: usize| (comp * nb + ball) * nm + mon;
    let mut basis = Vec::with_capacity(dim);
    for comp in 0..g.h {
        for ball in 0..nb {
            for mon in 0..nm {
                basis.push(BasisLabel { component: comp, ball, monomial: mon, degree: setup.mons.total_degree(mon) });
            }
        }
    }
    // The coset translation acts after the scaling, so an output monomial of
    // degree r only inherits p^{gap + (r−1)} from it, not p^{gap·r}. One power
    // of p per degree is what survives for every gap ≥ 1.
    let gap = if central { 0 } else { min_gap(a).min(1) as u64 };
    let ctx = setup.ctx.clone();
    let out_mod = ctx.ring().modulus();
    // rows grouped by (component, ball) are independent
    let blocks: Vec<Result<Vec<(usize, usize, Vec<u128>)>>> = (0..g.h * nb)
        .into_par_iter()
        .map(|cb| {
            let (comp, ball) = (cb / nb, cb % nb);
            let mut acc: std::collections::BTreeMap<(usize, usize), Vec<u128>> = Default::default();
            for (ri, rep) in reps.iter().enumerate() {
                let (target, twist) = if central { (comp, identity(n)) } else { g.lookup(ri, comp, n) };
                let term = Term { g: twist, a: a.to_vec(), y0: rep.y.clone() };
                let img = setup.ball_image(&term, ball)?;
                for f in 0..nm {
                    for e in 0..nm {
                        let x = img.block[f][e] % out_mod;
                        if x == 0 {
                            continue;
                        }
                        let v = ctx.scale_raw(&img.weight_const, x);
                        let key = (idx(comp, ball, f), idx(target, img.in_ball, e));
                        let slot = acc.entry(key).or_insert_with(|| ctx.zero_raw());
                        *slot = ctx.add_raw(slot, &v);
                    }
                }
            }
            Ok(acc.into_iter().map(|((r, c), v)| (r, c, v)).collect())
        })
        .collect();
    let mut entries = vec![vec![ctx.zero_raw(); dim]; dim];
    for b in blocks {
        for (r, c, v) in b? {
            entries[r][c] = v;
        }
    }
    let row_floor: Vec<u64> = basis.iter().map(|b| gap * b.degree as u64).collect();
    // the row floors are a theorem about the operator; check them anyway
    for (r, row) in entries.iter().enumerate() {
        for x in row {
            if let Some(v) = ctx.val_raw(x) {
                if v < Q::from_integer(BigInt::from(row_floor[r])) {
                    return Err(HaloError::Precondition(format!(
                        "row {r} has an entry of valuation {v} below its floor {}",
                        row_floor[r]
                    )));
                }
            }
        }
    }
    Ok(UpMatrix {
        dim,
        ctx,
        entries,
        basis,
        row_floor,
        gap,
        degree_cap: opts.degree,
        digits: opts.digits,
        radius,
        truncated: true,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CharCoeff {
    pub index: u64,
    pub coeff: Vec<u128>,
    /// Exact valuation when certified, otherwise a floor.
    pub valuation: Valuation,
    pub certified: bool,
    /// min(B_N, working precision): the level below which values are exact.
    pub cut: Q,
}

#[derive(Clone, Debug)]
pub struct CharSeries {
    pub ctx: Arc<CycloContext>,
    pub coeffs: Vec<CharCoeff>,
}

/// Runs `f` on a pool sized by HALO_THREADS when set.
pub fn with_pool<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    match std::env::var("HALO_THREADS").ok().and_then(|s| s.parse::<usize>().ok()) {
        Some(k) if k > 0 => match rayon::ThreadPoolBuilder::new().num_threads(k).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        },
        _ => f(),
    }
}

fn matmul(ctx: &CycloContext, a: &[Vec<Vec<u128>>], b: &[Vec<Vec<u128>>]) -> Vec<Vec<Vec<u128>>> {
    let dim = a.len();
    let e = ctx.e();
    a.par_iter()
        .map(|row| {
            let mut out = vec![vec![0u128; 2 * e - 1]; dim];
            for (k, x) in row.iter().enumerate() {
                if x.iter().all(|&c| c == 0) {
                    continue;
                }
                for (j, slot) in out.iter_mut().enumerate() {
                    ctx.mul_acc_poly(slot, x, &b[k][j]);
                }
            }
            out.iter().map(|c| ctx.reduce_poly(c)).collect()
        })
        .collect()
}

/// tr(A B) for square matrices.
fn trace_prod(ctx: &CycloContext, a: &[Vec<Vec<u128>>], b: &[Vec<Vec<u128>>]) -> Vec<u128> {
    let e = ctx.e();
    let dim = a.len();
    let parts: Vec<Vec<u128>> = (0..dim)
        .into_par_iter()
        .map(|r| {
            let mut acc = vec![0u128; 2 * e - 1];
            for c in 0..dim {
                ctx.mul_acc_poly(&mut acc, &a[r][c], &b[c][r]);
            }
            acc
        })
        .collect();
    let mut acc = vec![0u128; 2 * e - 1];
    for p in parts {
        acc = acc.iter().zip(&p).map(|(x, y)| ctx.ring().add(*x, *y)).collect();
    }
    ctx.reduce_poly(&acc)
}

/// Coefficients c_1..c_{N_max} of det(1 − X·M) with certification.
///
/// c_N is certified when its computed valuation is below both the
/// truncation cut B_N = gap·(D+1) + (sum of the N−1 smallest row floors) and
/// the precision left after the Newton-identity divisions.
pub fn char_series(m: &UpMatrix, n_max: usize) -> Result<CharSeries> {
    let ctx = m.ctx.clone();
    let p = ctx.p();
    let dim = m.dim;
    let half = n_max.div_ceil(2).max(1);
    let powers = with_pool(|| {
        let mut pw: Vec<Vec<Vec<Vec<u128>>>> = vec![m.entries.clone()];
        for _ in 1..half.min(n_max) {
            let next = matmul(&ctx, pw.last().unwrap(), &m.entries);
            pw.push(next);
        }
        pw
    });
    // p_k = tr(M^k) = tr(M^i M^j), i + j = k
    let mut traces = Vec::with_capacity(n_max);
    for k in 1..=n_max {
        let t = if k <= powers.len() {
            let i = k / 2;
            if i == 0 {
                trace_prod(&ctx, &powers[0], &ident(&ctx, dim))
            } else {
                trace_prod(&ctx, &powers[i - 1], &powers[k - i - 1])
            }
        } else {
            let i = k / 2;
            trace_prod(&ctx, &powers[i - 1], &powers[k - i - 1])
        };
        traces.push(t);
    }
    let ring = ctx.ring();
    let e_ram = ctx.e() as i64;
    // elementary symmetric e_N by Newton's identities
    let mut es: Vec<Vec<u128>> = vec![ctx.one_raw()];
    let mut loss = 0u32;
    let mut out = Vec::with_capacity(n_max);
    let floors = m.smallest_floors(n_max);
    for nn in 1..=n_max {
        let mut acc = ctx.zero_raw();
        for i in 1..=nn {
            let term = ctx.mul_raw(&es[nn - i], &traces[i - 1]);
            acc = if i % 2 == 1 { ctx.add_raw(&acc, &term) } else { ctx.sub_raw(&acc, &term) };
        }
        let v = vp_u64(nn as u64, p);
        let unit = (nn as u64) / p.pow(v);
        let mut en = acc;
        if v > 0 {
            let d = (p as u128).pow(v);
            for c in en.iter_mut() {
                if *c % d != 0 {
                    return Err(HaloError::Certification(format!(
                        "Newton identity at N={nn} is not divisible by {p}^{v}; precision exhausted"
                    )));
                }
                *c /= d;
            }
            loss += v;
        }
        let uinv = ring.inv(ring.from_u64(unit)).expect("unit");
        en = ctx.scale_raw(&en, uinv);
        es.push(en.clone());
        let cn = if nn % 2 == 1 { ctx.neg_raw(&en) } else { en };
        let prec_left = m.digits.saturating_sub(loss) as i64;
        let cut_int = if m.truncated {
            let b_n: u64 = m.gap * (m.degree_cap as u64 + 1) + floors.iter().take(nn - 1).sum::<u64>();
            (b_n as i64).min(prec_left)
        } else {
            prec_left
        };
        let cut = Q::from_integer(BigInt::from(cut_int));
        // val of the representative, ignoring digits that are already garbage
        let reduced: Vec<u128> = cn.iter().map(|&x| x % (p as u128).pow(prec_left.max(0) as u32)).collect();
        let val = ctx
            .val_raw_scaled(&reduced)
            .map(|s| Q::new(BigInt::from(s as i64), BigInt::from(e_ram)));
        let (valuation, certified) = match val {
            _ if !m.truncated && nn > dim => (Valuation::Infinity, true),
            Some(v) if v < cut => (Valuation::Finite(v), true),
            _ => (Valuation::Finite(cut.clone()), false),
        };
        out.push(CharCoeff { index: nn as u64, coeff: cn, valuation, certified, cut });
    }
    Ok(CharSeries { ctx, coeffs: out })
}

fn ident(ctx: &CycloContext, dim: usize) -> Vec<Vec<Vec<u128>>> {
    (0..dim)
        .map(|i| (0..dim).map(|j| if i == j { ctx.one_raw() } else { ctx.zero_raw() }).collect())
        .collect()
}

impl CharSeries {
    /// Points (N, v(c_N)) with c_0 = 1; uncertified points carry floors.
    pub fn points(&self) -> Vec<(u64, Valuation)> {
        let mut pts = vec![(0, Valuation::int(0))];
        pts.extend(self.coeffs.iter().map(|c| (c.index, c.valuation.clone())));
        pts
    }

    /// The Newton polygon on its certified prefix: the hull of all points
    /// (floors included) cut at the last x up to which every vertex is a
    /// certified point. Beyond that x the true polygon may differ.
    pub fn certified_polygon(&self) -> Result<(NewtonPolygon, u64)> {
        let hull = lower_hull(&self.points())?;
        let certified = |x: u64| x == 0 || self.coeffs.get(x as usize - 1).is_some_and(|c| c.certified);
        let mut last = 0;
        for (x, _) in &hull.vertices {
            if certified(*x) {
                last = *x;
            } else {
                break;
            }
        }
        let pts: Vec<(u64, Valuation)> = self
            .points()
            .into_iter()
            .filter(|(x, _)| *x <= last)
            .collect();
        Ok((lower_hull(&pts)?, last))
    }

    /// The full hull, treating floors as values (valid as a lower bound only
    /// where uncertified).
    pub fn floor_polygon(&self) -> Result<NewtonPolygon> {
        lower_hull(&self.points())
    }

    pub fn all_certified(&self) -> bool {
        self.coeffs.iter().all(|c| c.certified)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Array(
            self.coeffs
                .iter()
                .map(|c| {
                    serde_json::json!({
                        "n": c.index,
                        "valuation": c.valuation.to_wire(),
                        "certified": c.certified,
                        "cut": crate::rational::fmt(&c.cut),
                    })
                })
                .collect(),
        )
    }
}

/// Integer value of an e=1 ring element, signed.
pub fn as_signed_int(ctx: &CycloContext, x: &[u128]) -> Option<BigInt> {
    if x[1..].iter().any(|&c| c != 0) {
        return None;
    }
    Some(ctx.ring().to_signed(x[0]))
}
