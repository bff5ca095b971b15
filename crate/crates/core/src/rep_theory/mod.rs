//! Dimensions, slope budgets, λ/ψ conversion, classicality and the Mackey
//! brute force for a weight.

mod mackey;

pub use mackey::{iwahori_index_bruteforce, mackey_bruteforce, MackeyReport};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{pre, Result};
use crate::padic_core::Valuation;
use crate::rational::{factorial, q, Q};

/// Weyl dimension Π_{i<j} (t_i − t_j + j − i)/(j − i).
pub fn weyl_dim(t: &[i64]) -> Result<BigInt> {
    if t.windows(2).any(|w| w[0] < w[1]) {
        return pre("weyl_dim needs a dominant weight");
    }
    let n = t.len();
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for i in 0..n {
        for j in i + 1..n {
            num *= BigInt::from(t[i] - t[j] + (j - i) as i64);
            den *= BigInt::from((j - i) as i64);
        }
    }
    Ok(num / den)
}

/// Counts multichains of column subsets (semistandard tableaux read column
/// by column) of shape t; an independent route to the dimension.
pub fn chain_poset_count(t: &[i64]) -> Result<BigInt> {
    if t.windows(2).any(|w| w[0] < w[1]) {
        return pre("chain count needs a dominant weight");
    }
    let n = t.len();
    // columns of length j appear m_j = t_j − t_{j+1} times (j < n); full
    // columns of length n contribute nothing.
    let mut cols: Vec<usize> = Vec::new();
    for j in (1..n).rev() {
        let m = t[j - 1] - t[j];
        for _ in 0..m {
            cols.push(j);
        }
    }
    // Tableau columns left to right have nonincreasing length; reversing the
    // list above puts long columns first.
    cols.reverse();
    cols.sort_by(|a, b| b.cmp(a));
    let subsets = |k: usize| -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut cur = Vec::new();
        fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if cur.len() == k {
                out.push(cur.clone());
                return;
            }
            for x in start..n {
                cur.push(x);
                rec(x + 1, n, k, cur, out);
                cur.pop();
            }
        }
        rec(0, n, k, &mut cur, &mut out);
        out
    };
    if cols.is_empty() {
        return Ok(BigInt::one());
    }
    let mut prev_sets = subsets(cols[0]);
    let mut counts: Vec<BigInt> = vec![BigInt::one(); prev_sets.len()];
    for &len in &cols[1..] {
        let sets = subsets(len);
        let mut next = vec![BigInt::zero(); sets.len()];
        for (si, s) in sets.iter().enumerate() {
            for (pi, ps) in prev_sets.iter().enumerate() {
                if (0..len).all(|k| ps[k] <= s[k]) {
                    next[si] += &counts[pi];
                }
            }
        }
        prev_sets = sets;
        counts = next;
    }
    Ok(counts.into_iter().sum())
}

/// E_i = (n−1)/2 − i + 1 − (m_n + … + m_{n−i+1}), i = 1..n.
pub fn lambda_shifts(m: &[i64]) -> Vec<Q> {
    let n = m.len();
    (1..=n)
        .map(|i| {
            let tail: i64 = m[n - i..].iter().sum();
            q(n as i64 - 1, 2) - q(i as i64 - 1, 1) - q(tail, 1)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    PsiToLambda,
    LambdaToPsi,
}

/// Valuations v(λ_i) ↔ v(ψ_i(p)).
pub fn lambda_psi_convert(m: &[i64], input: &[Valuation], dir: Direction) -> Result<Vec<Q>> {
    if input.len() != m.len() {
        return pre("input length must equal n");
    }
    let shifts = lambda_shifts(m);
    input
        .iter()
        .zip(shifts)
        .map(|(v, s)| match v {
            Valuation::Infinity => pre("zero eigenvalue (infinite slope)"),
            Valuation::Finite(x) => Ok(match dir {
                Direction::PsiToLambda => x + s,
                Direction::LambdaToPsi => x - s,
            }),
        })
        .collect()
}

/// All permutations of 0..n in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..n).collect();
    loop {
        out.push(cur.clone());
        let Some(i) = (1..n).rev().find(|&i| cur[i - 1] < cur[i]) else {
            break;
        };
        let j = (i..n).rev().find(|&j| cur[j] > cur[i - 1]).unwrap();
        cur.swap(i - 1, j);
        cur[i..].reverse();
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SlopeBudget {
    pub a: Vec<i64>,
    /// Σ_w v(a_p^w), with Πψ_i(p) eliminated through Πλ_i = 1.
    pub value: Q,
    /// Per companion: the permutation w and v(a_p^w). Without ψ data only
    /// the p-power exponent is recorded.
    pub per_w: Vec<(Vec<usize>, Q)>,
    /// Σ of per_w; equals `value` once ψ data satisfy Σ v(ψ_i(p)) = M.
    pub per_w_sum: Q,
    /// The closed form (n−1)!(…) as displayed alongside the proof.
    pub closed_form: Q,
    /// Same product with λ_i raised to a_i instead of a_{n−i+1}.
    pub alt_convention: Q,
}

impl SlopeBudget {
    pub fn closed_form_mismatch(&self) -> bool {
        self.closed_form != self.value
    }
}

/// M = n m_n + (n−1) m_{n−1} + … + m_1.
pub fn weighted_m(m: &[i64]) -> i64 {
    m.iter().enumerate().map(|(i, x)| (i as i64 + 1) * x).sum()
}

pub fn slope_budget(a: &[i64], m: &[i64], psi_vals: Option<&[Q]>) -> Result<SlopeBudget> {
    let n = a.len();
    if m.len() != n {
        return pre("a and m must have the same length");
    }
    if a.windows(2).any(|w| w[0] < w[1]) {
        return pre("a must be nonincreasing");
    }
    if m[..n - 1].iter().any(|&x| x < 0) {
        return pre("m must be nonnegative");
    }
    if let Some(ps) = psi_vals {
        if ps.len() != n {
            return pre("psi_vals must have length n");
        }
    }
    let e = lambda_shifts(m);
    let big_a: i64 = a.iter().sum();
    let big_m = weighted_m(m);
    let nf = BigRational::from_integer(factorial(n as u64));
    let n1f = BigRational::from_integer(factorial(n as u64 - 1));
    // p-power part of one companion: Σ_i a_{n−i+1} E_i
    let s: Q = (0..n).map(|i| q(a[n - 1 - i], 1) * &e[i]).sum();
    let s_alt: Q = (0..n).map(|i| q(a[i], 1) * &e[i]).sum();
    let value = &nf * &s + &n1f * q(big_a * big_m, 1);
    let alt_convention = &nf * &s_alt + &n1f * q(big_a * big_m, 1);
    let mut per_w = Vec::new();
    for w in permutations(n) {
        let mut v = s.clone();
        if let Some(ps) = psi_vals {
            for i in 0..n {
                v += q(a[n - 1 - i], 1) * &ps[w[i]];
            }
        }
        per_w.push((w, v));
    }
    let per_w_sum = per_w.iter().map(|(_, v)| v.clone()).sum();
    // displayed closed form
    let mut inner: Q = (0..n)
        .map(|i| q(a[n - 1 - i], 1) * (q(n as i64 - 1, 2) - q(i as i64, 1)))
        .sum();
    let mut prefix = 0i64;
    for j in 0..n {
        prefix += a[j];
        inner -= q(m[j] * prefix, 1);
        inner += q((j as i64 + 1) * m[j] * big_a, 1);
    }
    let closed_form = n1f * inner;
    Ok(SlopeBudget {
        a: a.to_vec(),
        value,
        per_w,
        per_w_sum,
        closed_form,
        alt_convention,
    })
}

/// v(λ_1…λ_i) < t_i − t_{i+1} + 1 for i = 1..n−1.
pub fn classicality_check(lambda_vals: &[Q], t: &[i64]) -> Result<bool> {
    if t.windows(2).any(|w| w[0] < w[1]) {
        return pre("t must be dominant");
    }
    let mut acc = Q::zero();
    for i in 0..t.len().saturating_sub(1) {
        acc += lambda_vals.get(i).cloned().unwrap_or_default();
        if acc >= q(t[i] - t[i + 1] + 1, 1) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The modulus character exponents ((n−1)/2, …, (1−n)/2).
pub fn delta_half_exponents(n: usize) -> Vec<Q> {
    (0..n).map(|i| q(n as i64 - 1 - 2 * i as i64, 2)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weyl_examples() {
        assert_eq!(weyl_dim(&[0, 0, 0]).unwrap(), BigInt::from(1));
        assert_eq!(weyl_dim(&[5, 0]).unwrap(), BigInt::from(6));
        assert_eq!(weyl_dim(&[2, 1, 0]).unwrap(), BigInt::from(8));
        assert!(weyl_dim(&[0, 1]).is_err());
    }

    #[test]
    fn chain_count_matches_small_cases() {
        // degree-m binary forms
        for m in 0..6 {
            assert_eq!(chain_poset_count(&[m, 0]).unwrap(), BigInt::from(m + 1));
        }
        assert_eq!(chain_poset_count(&[2, 1, 0]).unwrap(), BigInt::from(8));
        assert_eq!(chain_poset_count(&[1, 0, 0, 0]).unwrap(), BigInt::from(4));
    }

    #[test]
    fn budget_rank_two() {
        for m1 in 0..6 {
            let b = slope_budget(&[1, 0], &[m1, 0], None).unwrap();
            assert_eq!(b.value, q(-1 - m1, 1));
            assert_eq!(b.alt_convention, q(1 + m1, 1));
            assert_eq!(b.closed_form, q(-1, 2));
        }
        let b = slope_budget(&[0, 0, 0], &[3, 1, 0], None).unwrap();
        assert_eq!(b.value, Q::zero());
    }

    #[test]
    fn conversion_examples() {
        let v = lambda_psi_convert(&[4, 0], &[Valuation::int(0), Valuation::int(0)], Direction::PsiToLambda).unwrap();
        assert_eq!(v[0], q(1, 2));
        let (m1, m2) = (3, 2);
        let v = lambda_psi_convert(&[m1, m2], &[Valuation::int(0), Valuation::int(0)], Direction::PsiToLambda).unwrap();
        assert_eq!(&v[0] + &v[1], q(-(2 * m2 + m1), 1));
        assert!(lambda_psi_convert(&[0, 0], &[Valuation::Infinity, Valuation::int(0)], Direction::PsiToLambda).is_err());
    }

    #[test]
    fn classicality_examples() {
        assert!(classicality_check(&[q(0, 1), q(0, 1)], &[4, 0]).unwrap());
        assert!(!classicality_check(&[q(2, 1), q(0, 1)], &[1, 0]).unwrap());
        assert!(classicality_check(&[q(0, 1), q(1, 1), q(0, 1)], &[3, 1, 0]).unwrap());
    }

    #[test]
    fn perms() {
        assert_eq!(permutations(3).len(), 6);
        assert_eq!(permutations(1), vec![vec![0]]);
    }
}
