//! Locally algebraic weights, their T-coordinates, Roche subgroups and the
//! shape predicates on radius data.

use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{pre, HaloError, Result};
use crate::padic_core::{
    exp_q, log_one_unit, tame_root, vp_big, CycloContext, Valuation, WildChar,
};

/// A character (d_1..d_n) ↦ Π ω(d_i)^{tame_i} χ_i(⟨d_i⟩) d_i^{t_i}.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightCharacter {
    pub p: u64,
    pub t: Vec<i64>,
    pub tame: Vec<u64>,
    pub wild: Vec<WildChar>,
    /// Caller asserts cond(χ_i χ_j^{-1}) = max(c_i, c_j) for all i ≠ j.
    pub assume_condition1: bool,
    pub last_trivial: bool,
}

/// Wire format of a weight.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct WeightSpec {
    pub n: usize,
    pub t: Vec<i64>,
    pub conductors: Vec<u32>,
    #[serde(default)]
    pub tame: Vec<u64>,
}

fn tame_order(p: u64) -> u64 {
    if p == 2 {
        2
    } else {
        p - 1
    }
}

impl WeightCharacter {
    pub fn new(p: u64, t: Vec<i64>, tame: Vec<u64>, wild: Vec<WildChar>) -> Result<Self> {
        let n = t.len();
        if n == 0 || tame.len() != n || wild.len() != n {
            return pre("t, tame and wild must have the same positive length");
        }
        if !crate::padic_core::is_prime(p) {
            return pre(format!("{p} is not prime"));
        }
        if t.windows(2).any(|w| w[0] < w[1]) {
            return pre("t must be dominant (nonincreasing)");
        }
        let to = tame_order(p);
        let tame = tame.into_iter().map(|x| x % to).collect::<Vec<_>>();
        let last_trivial = t[n - 1] == 0 && tame[n - 1] == 0 && wild[n - 1].is_trivial(p);
        Ok(WeightCharacter {
            p,
            t,
            tame,
            wild,
            assume_condition1: false,
            last_trivial,
        })
    }

    /// Canonical characters with the given conductors; condition 1 is
    /// asserted rather than derived.
    pub fn from_conductors(p: u64, t: Vec<i64>, conductors: &[u32], tame: &[u64]) -> Result<Self> {
        let n = t.len();
        if conductors.len() != n {
            return pre("conductor vector has the wrong length");
        }
        let mut tame_v = if tame.is_empty() { vec![0; n] } else { tame.to_vec() };
        if tame_v.len() != n {
            return pre("tame vector has the wrong length");
        }
        let mut wild: Vec<WildChar> = Vec::with_capacity(n);
        for (i, &c) in conductors.iter().enumerate() {
            if c == 0 {
                return pre("conductors are at least 1");
            }
            let r = match p {
                2 => {
                    if c == 2 {
                        if tame_v[i] % 2 == 0 {
                            if tame.is_empty() {
                                tame_v[i] = 1;
                            } else {
                                return pre("p = 2 conductor 2 needs an odd tame part");
                            }
                        }
                    } else if c == 1 && tame_v[i] % 2 == 1 {
                        return pre("p = 2 conductor 1 needs an even tame part");
                    }
                    c.saturating_sub(2)
                }
                _ => c - 1,
            };
            // same-level characters differ mod p so their ratio keeps the
            // full conductor, as far as p − 1 residues allow
            let mut x = WildChar::of_order(p, r);
            if r > 0 {
                let seen = wild.iter().filter(|y| y.level == r).count() as u64;
                x.k = 1 + seen % (p - 1).max(1);
            }
            wild.push(x);
        }
        let mut w = Self::new(p, t, tame_v, wild)?;
        w.assume_condition1 = true;
        Ok(w)
    }

    pub fn from_spec(p: u64, spec: &WeightSpec) -> Result<Self> {
        if spec.t.len() != spec.n {
            return Err(HaloError::Config("weight t has the wrong length".into()));
        }
        Self::from_conductors(p, spec.t.clone(), &spec.conductors, &spec.tame)
    }

    pub fn n(&self) -> usize {
        self.t.len()
    }

    /// m_i = t_i − t_{i+1}, m_n = t_n.
    pub fn m(&self) -> Vec<i64> {
        let n = self.n();
        (0..n)
            .map(|i| if i + 1 < n { self.t[i] - self.t[i + 1] } else { self.t[n - 1] })
            .collect()
    }

    fn cond_of(&self, wild: &WildChar, tame: u64) -> u32 {
        let r = wild.order_exp(self.p);
        if self.p == 2 {
            if r > 0 {
                r + 2
            } else if tame % 2 == 1 {
                2
            } else {
                1
            }
        } else if r > 0 {
            r + 1
        } else {
            1
        }
    }

    pub fn conductor(&self, i: usize) -> u32 {
        self.cond_of(&self.wild[i], self.tame[i])
    }

    pub fn conductors(&self) -> Vec<u32> {
        (0..self.n()).map(|i| self.conductor(i)).collect()
    }

    /// cond(χ_i χ_j^{-1}).
    pub fn ratio_conductor(&self, i: usize, j: usize) -> u32 {
        if i == j {
            return 1;
        }
        if self.assume_condition1 {
            return self.conductor(i).max(self.conductor(j));
        }
        let to = tame_order(self.p);
        let w = self.wild[i].ratio(&self.wild[j], self.p);
        self.cond_of(&w, (self.tame[i] + to - self.tame[j]) % to)
    }

    pub fn max_conductor(&self) -> u32 {
        self.conductors().into_iter().max().unwrap_or(1)
    }

    /// Wild level needed to evaluate every χ_i.
    pub fn wild_level(&self) -> u32 {
        self.wild.iter().map(|w| w.order_exp(self.p)).max().unwrap_or(0)
    }

    /// s_i(d) in the context ring for a unit d.
    pub fn eval_component(&self, ctx: &Arc<CycloContext>, i: usize, d: &BigInt) -> Result<Vec<u128>> {
        let p = self.p;
        if (d % BigInt::from(p)).is_zero() {
            return pre("weight evaluated at a non-unit");
        }
        let ring = ctx.ring();
        let omega = tame_root(ctx, d);
        let mut out = ctx.zero_raw();
        // tame part
        let mut val = ring.pow(omega, self.tame[i]);
        // algebraic part d^{t_i}
        let dd = ring.from_bigint(d);
        let tpow = if self.t[i] >= 0 {
            ring.pow(dd, self.t[i] as u64)
        } else {
            ring.pow(ring.inv(dd).expect("unit"), (-self.t[i]) as u64)
        };
        val = ring.mul(val, tpow);
        out[0] = val;
        let r = self.wild[i].order_exp(p);
        if r == 0 {
            return Ok(out);
        }
        if r > ctx.wild_level() {
            return pre("context wild level too small for this weight");
        }
        // ⟨d⟩ = d / ω(d), a one-unit.
        let m = BigInt::from(p).pow(r + 2);
        let om = BigInt::from(ring.reduce_to(omega, &crate::zp::Zpn::new(p, r + 2)));
        let inv_om = om.modpow(&(BigInt::from(p).pow(r + 1) * BigInt::from(tame_order(p)) - 1), &m);
        let one_unit = (d * inv_om).mod_floor(&m);
        let vq = if p == 2 { 2 } else { 1 };
        let lg = log_one_unit(p, &one_unit, r + vq)?;
        let q = if p == 2 { 4 } else { p };
        let x = (lg / BigInt::from(q)).mod_floor(&BigInt::from(p.pow(r)));
        let x = x.to_u64().expect("small");
        let w = &self.wild[i];
        let kr = (w.k % p.pow(w.level)) / p.pow(w.level - r);
        let j = (kr * x % p.pow(r)) * p.pow(ctx.wild_level() - r);
        Ok(ctx.mul_raw(&out, &ctx.zeta_pow(j)))
    }

    /// Exponents of χ_i(d) for d a unit modulo p^C: (tame exponent against a
    /// fixed generator, wild exponent in Z/p^{level}).
    pub fn char_exponents(&self, i: usize, d: u64, gen: u64) -> (u64, u64) {
        let p = self.p;
        let to = tame_order(p);
        let tame_e = if p == 2 {
            if d % 4 == 3 {
                self.tame[i] % 2
            } else {
                0
            }
        } else {
            let mut x = 1u64;
            let mut k = 0;
            while x != d % p {
                x = x * gen % p;
                k += 1;
            }
            k * self.tame[i] % to
        };
        let r = self.wild[i].order_exp(p);
        if r == 0 {
            return (tame_e, 0);
        }
        let dd = BigInt::from(d);
        let m = BigInt::from(p).pow(r + 2);
        let omega = if p == 2 {
            if d % 4 == 1 {
                BigInt::from(1)
            } else {
                BigInt::from(-1)
            }
        } else {
            let mut x = dd.mod_floor(&m);
            for _ in 0..r + 3 {
                x = x.modpow(&BigInt::from(p), &m);
            }
            x
        };
        let inv_om = omega.modpow(&(BigInt::from(p).pow(r + 1) * BigInt::from(to) - 1), &m);
        let one_unit = (dd * inv_om).mod_floor(&m);
        let vq = if p == 2 { 2 } else { 1 };
        let lg = log_one_unit(p, &one_unit, r + vq).expect("one-unit");
        let q = if p == 2 { 4 } else { p };
        let x = (lg / BigInt::from(q)).mod_floor(&BigInt::from(p.pow(r))).to_u64().unwrap();
        let w = &self.wild[i];
        let kr = (w.k % p.pow(w.level)) / p.pow(w.level - r);
        let lvl = self.wild_level();
        (tame_e, (kr * x % p.pow(r)) * p.pow(lvl - r))
    }
}

/// Valuations v(T_1), …, v(T_n).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TCoords {
    pub vals: Vec<Valuation>,
}

impl TCoords {
    /// min_i v(T_i) over the first n−1 coordinates (the last is normalised
    /// away when trivial).
    pub fn v_ta(&self) -> Valuation {
        let k = if self.vals.len() > 1 { self.vals.len() - 1 } else { 1 };
        self.vals[..k].iter().cloned().min().unwrap_or(Valuation::Infinity)
    }
}

pub fn t_coordinates(w: &WeightCharacter, ctx: &CycloContext) -> Result<TCoords> {
    if ctx.p() != w.p {
        return pre("context prime does not match the weight");
    }
    let p = w.p;
    let q = ctx.q();
    let mut vals = Vec::with_capacity(w.n());
    for i in 0..w.n() {
        let r = w.wild[i].order_exp(p);
        if r > ctx.wild_level() {
            return pre("conductor exceeds the context's wild level");
        }
        let v = if r == 0 {
            if w.t[i] == 0 {
                Valuation::Infinity
            } else {
                Valuation::int(vp_big(&BigInt::from(w.t[i] * q as i64), p) as i64)
            }
        } else {
            // q / (p^{c−1}(p−1)) with c the conductor
            let c = w.conductor(i);
            Valuation::ratio(q as i64, (p.pow(c - 1) * (p - 1)) as i64)
        };
        vals.push(v);
    }
    Ok(TCoords { vals })
}

/// The Roche data c̲ and j(χ).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RocheData {
    /// Full n×n matrix, zero diagonal, 0-based indices.
    pub c_matrix: Vec<Vec<u32>>,
    /// log_p of the index of J in the Iwahori group.
    pub j_index: u32,
    /// The displayed formula c_(1) + 2c_(2) + … − n(n−1)/2 on sorted
    /// conductors of χ_1..χ_{n−1}.
    pub j_displayed: i64,
}

pub fn roche_subgroup(w: &WeightCharacter) -> Result<RocheData> {
    let n = w.n();
    let mut c = vec![vec![0u32; n]; n];
    let mut j_index = 0;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let cond = w.ratio_conductor(i, j);
            c[i][j] = if i < j { cond / 2 } else { cond.div_ceil(2) };
            if i < j {
                j_index += cond - 1;
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                if c[i][j] > c[i][k] + c[k][j] {
                    return Err(HaloError::Precondition(format!(
                        "Roche matrix fails the group condition at ({},{}) via {}",
                        i + 1,
                        j + 1,
                        k + 1
                    )));
                }
            }
        }
    }
    let mut conds: Vec<u32> = (0..n.saturating_sub(1)).map(|i| w.conductor(i)).collect();
    conds.sort_unstable();
    let j_displayed = conds
        .iter()
        .enumerate()
        .map(|(k, &c)| (k as i64 + 1) * c as i64)
        .sum::<i64>()
        - (n * (n - 1) / 2) as i64;
    Ok(RocheData { c_matrix: c, j_index, j_displayed })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimpleReport {
    pub simple: bool,
    pub failures: Vec<String>,
}

/// Conditions 1 and 2, evaluated on χ·χ_n^{-1} so that the last component
/// is trivial. The twist changes neither the ratios χ_i/χ_j nor the
/// irreducibility of the induced type.
pub fn is_simple(w: &WeightCharacter) -> SimpleReport {
    let n = w.n();
    let mut failures = Vec::new();
    let cond: Vec<u32> = (0..n).map(|i| w.ratio_conductor(i, n - 1)).collect();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let m = cond[i].max(cond[j]);
                if w.ratio_conductor(i, j) != m {
                    failures.push(format!(
                        "condition 1: cond(χ{}/χ{}) = {} ≠ {}",
                        i + 1,
                        j + 1,
                        w.ratio_conductor(i, j),
                        m
                    ));
                }
            }
        }
    }
    for i in 0..n.saturating_sub(1) {
        for j in 0..n.saturating_sub(1) {
            if i != j && cond[i] >= 2 * cond[j] {
                failures.push(format!(
                    "condition 2: cond(χ{}) = {} ≥ 2·cond(χ{}) = {}",
                    i + 1,
                    cond[i],
                    j + 1,
                    2 * cond[j]
                ));
            }
        }
    }
    SimpleReport { simple: failures.is_empty(), failures }
}

/// Entries c_ij for n ≥ i > j ≥ 1, stored in the order (2,1),(3,1),(3,2),….
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct HalfMatrix {
    pub n: usize,
    pub entries: Vec<u32>,
}

impl HalfMatrix {
    pub fn new(n: usize, entries: Vec<u32>) -> Result<Self> {
        if entries.len() != n * (n - 1) / 2 {
            return pre(format!("half matrix for n={n} needs {} entries", n * (n - 1) / 2));
        }
        Ok(HalfMatrix { n, entries })
    }

    pub fn constant(n: usize, v: u32) -> Self {
        HalfMatrix { n, entries: vec![v; n * (n - 1) / 2] }
    }

    /// Position of (i, j), 1-based, i > j.
    pub fn index(i: usize, j: usize) -> usize {
        debug_assert!(i > j && j >= 1);
        (i - 1) * (i - 2) / 2 + (j - 1)
    }

    /// c_ij with c_ab = 0 for a ≤ b, 1-based.
    pub fn get(&self, i: usize, j: usize) -> u32 {
        if i <= j {
            0
        } else {
            self.entries[Self::index(i, j)]
        }
    }

    /// Pairs (i, j) in storage order, 1-based.
    pub fn positions(n: usize) -> Vec<(usize, usize)> {
        let mut v = Vec::new();
        for i in 2..=n {
            for j in 1..i {
                v.push((i, j));
            }
        }
        v
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShapeReport {
    pub group_shaped: bool,
    pub analytic_shaped: bool,
    /// c_j ≤ min over entries in or left of column j.
    pub compatible: bool,
    /// c_i ≤ min({c_ij : j < i} ∪ {c_ji : j > i}).
    pub compatible_rowcol: bool,
}

pub fn shape_predicates(c: &HalfMatrix, conds: &[u32]) -> ShapeReport {
    let n = c.n;
    let mut group = true;
    for i in 1..=n {
        for j in 1..=n {
            for k in 1..=n {
                if c.get(i, j) > c.get(i, k) + c.get(k, j) {
                    group = false;
                }
            }
        }
    }
    let mut analytic = true;
    for j in 1..n {
        for i in j + 2..=n {
            if c.get(i, j) != c.get(j + 1, j) {
                analytic = false;
            }
        }
        if j + 1 < n && c.get(n, j) < c.get(n, j + 1) {
            analytic = false;
        }
    }
    let cond = |j: usize| conds.get(j - 1).copied().unwrap_or(0);
    let mut compatible = true;
    for j in 1..=n {
        let mut m = u32::MAX;
        for l in 1..=j {
            for k in l + 1..=n {
                m = m.min(c.get(k, l));
            }
        }
        if cond(j) > m {
            compatible = false;
        }
    }
    let mut rowcol = true;
    for i in 1..=n {
        let mut m = u32::MAX;
        for j in 1..i {
            m = m.min(c.get(i, j));
        }
        for j in i + 1..=n {
            m = m.min(c.get(j, i));
        }
        if cond(i) > m {
            rowcol = false;
        }
    }
    ShapeReport {
        group_shaped: group,
        analytic_shaped: analytic,
        compatible,
        compatible_rowcol: rowcol,
    }
}

/// Ball radius used for the weight: column j has radius max_{l ≥ j}(c_l − 1),
/// the last column also absorbing c_n − 1.
pub fn forced_radius(w: &WeightCharacter) -> HalfMatrix {
    let n = w.n();
    let ell: Vec<u32> = w.conductors().iter().map(|c| c.saturating_sub(1)).collect();
    let mut col = vec![0u32; n];
    let mut run = 0;
    for j in (0..n).rev() {
        run = run.max(ell[j]);
        col[j] = run;
    }
    let entries = HalfMatrix::positions(n).iter().map(|&(_, j)| col[j - 1]).collect();
    HalfMatrix { n, entries }
}

/// v(χ(exp q)·exp(t q) − 1) computed in the ring, for cross-checks.
pub fn t_valuation_in_ring(w: &WeightCharacter, ctx: &Arc<CycloContext>, i: usize) -> Result<Valuation> {
    let e = exp_q(w.p, ctx.digits() + 4);
    let mut s = w.clone();
    s.tame = vec![0; w.n()];
    let val = s.eval_component(ctx, i, &e)?;
    let d = ctx.sub_raw(&val, &ctx.one_raw());
    Ok(match ctx.val_raw(&d) {
        Some(v) => Valuation::Finite(v),
        None => Valuation::Infinity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::padic_core::CycloContext;

    #[test]
    fn t_coordinate_examples() {
        let ctx = CycloContext::for_conductor(5, 2, 20).unwrap();
        let w = WeightCharacter::from_conductors(5, vec![3, 0], &[1, 1], &[]).unwrap();
        let tc = t_coordinates(&w, &ctx).unwrap();
        assert_eq!(tc.vals[0], Valuation::int(1));
        assert_eq!(tc.vals[1], Valuation::Infinity);
        let w = WeightCharacter::from_conductors(5, vec![2, 0], &[2, 1], &[]).unwrap();
        assert_eq!(t_coordinates(&w, &ctx).unwrap().vals[0], Valuation::ratio(1, 4));
    }

    #[test]
    fn roche_examples() {
        let w = WeightCharacter::from_conductors(3, vec![0, 0], &[2, 1], &[]).unwrap();
        let r = roche_subgroup(&w).unwrap();
        assert_eq!(r.c_matrix, vec![vec![0, 1], vec![1, 0]]);
        assert_eq!(r.j_index, 1);
        let w = WeightCharacter::from_conductors(3, vec![0, 0, 0], &[1, 2, 1], &[]).unwrap();
        let r = roche_subgroup(&w).unwrap();
        assert_eq!((r.j_index, r.j_displayed), (2, 2));
        let w = WeightCharacter::from_conductors(5, vec![0, 0, 0], &[1, 1, 1], &[]).unwrap();
        let r = roche_subgroup(&w).unwrap();
        assert_eq!(r.j_index, 0);
        assert_eq!(r.c_matrix[1][0], 1);
        assert_eq!(r.c_matrix[0][1], 0);
    }

    #[test]
    fn simple_examples() {
        let w = WeightCharacter::from_conductors(5, vec![0; 4], &[2, 3, 2, 1], &[]).unwrap();
        assert!(is_simple(&w).simple);
        let w = WeightCharacter::from_conductors(5, vec![0; 3], &[1, 3, 1], &[]).unwrap();
        let r = is_simple(&w);
        assert!(!r.simple);
        assert!(r.failures.iter().any(|f| f.starts_with("condition 2")));
        let w = WeightCharacter::from_conductors(5, vec![0; 2], &[3, 1], &[]).unwrap();
        assert!(is_simple(&w).simple);
        // χ_1 = χ_2 nontrivial: trivial after normalising χ_2 away
        let chi = crate::padic_core::WildChar { level: 1, k: 1 };
        let w = WeightCharacter::new(3, vec![0, 0], vec![0, 0], vec![chi.clone(), chi]).unwrap();
        assert!(is_simple(&w).simple);
    }

    #[test]
    fn shape_examples() {
        let c = HalfMatrix::new(3, vec![2, 2, 1]).unwrap();
        let r = shape_predicates(&c, &[0, 0, 0]);
        assert!(r.group_shaped && r.analytic_shaped);
        let c = HalfMatrix::new(3, vec![1, 3, 1]).unwrap();
        assert!(!shape_predicates(&c, &[0, 0, 0]).group_shaped);
        let c = HalfMatrix::constant(3, 0);
        let r = shape_predicates(&c, &[0, 0, 0]);
        assert!(r.group_shaped && r.analytic_shaped && r.compatible && r.compatible_rowcol);
    }

    #[test]
    fn ring_t_valuation_agrees() {
        let w = WeightCharacter::from_conductors(3, vec![4, 0], &[3, 1], &[]).unwrap();
        let ctx = CycloContext::for_conductor(3, 3, 60).unwrap();
        assert_eq!(
            t_valuation_in_ring(&w, &ctx, 0).unwrap(),
            t_coordinates(&w, &ctx).unwrap().vals[0]
        );
    }
}
