//! Disconnectedness certificate (slope lattice) and the ordinary degree.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

use crate::error::{pre, Result};
use crate::padic_core::Valuation;
use crate::rational::{ceil, floor, fmt, Q};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DisconnectCertificate {
    pub alpha: Q,
    pub n: usize,
    pub a1: Q,
    /// Nonzero solution of αx = A_1 x^{1+2/(n(n−1))}.
    pub d_alpha: Q,
    /// v(T_a) must be strictly below this.
    pub nu_alpha: Q,
    pub lattice: BTreeSet<Q>,
    /// Distance from α to the nearest other lattice point, if any.
    pub gap: Option<Q>,
}

fn qpow(x: &Q, k: usize) -> Q {
    (0..k).fold(Q::from_integer(1.into()), |acc, _| acc * x)
}

pub fn disconnect_certificate(alpha: &Q, n: usize, a1: &Q) -> Result<DisconnectCertificate> {
    if !alpha.is_positive() {
        return pre("alpha must be positive");
    }
    if !a1.is_positive() {
        return pre("A_1 must be positive");
    }
    if n < 2 {
        return pre("n must be at least 2");
    }
    let d = n * (n - 1) / 2;
    let d_alpha = qpow(&(alpha / a1), d);
    let nu_alpha = Q::from_integer(1.into()) / (alpha * &d_alpha);
    // integers in [0, α d(α)]
    let lam_max = floor(&(alpha * &d_alpha));
    let den_max = ceil(&d_alpha);
    let mut lattice = BTreeSet::new();
    let mut k = -lam_max.clone();
    while k <= lam_max {
        let mut m = BigInt::from(1);
        while m <= den_max {
            lattice.insert(Q::new(k.clone(), m.clone()));
            m += 1;
        }
        k += 1;
    }
    let gap = lattice
        .iter()
        .filter(|x| *x != alpha)
        .map(|x| (x - alpha).abs())
        .min();
    Ok(DisconnectCertificate {
        alpha: alpha.clone(),
        n,
        a1: a1.clone(),
        d_alpha,
        nu_alpha,
        lattice,
        gap,
    })
}

impl DisconnectCertificate {
    /// Slopes s with s/vTa < α that miss the lattice; empty means trapped.
    pub fn untrapped(&self, slopes: &[Q], v_ta: &Q) -> Vec<Q> {
        slopes
            .iter()
            .map(|s| s / v_ta)
            .filter(|r| *r < self.alpha && !self.lattice.contains(r))
            .collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "alpha": fmt(&self.alpha),
            "n": self.n,
            "A_1": fmt(&self.a1),
            "d_alpha": fmt(&self.d_alpha),
            "nu_alpha": fmt(&self.nu_alpha),
            "nu_alpha_strict": true,
            "lattice_size": self.lattice.len(),
            "lattice": self.lattice.iter().map(fmt).collect::<Vec<_>>(),
            "gap": self.gap.as_ref().map(fmt),
            "scope": "slope-lattice trapping only; disconnectedness of the rigid space is not verified",
        })
    }
}

/// The largest N with v(c_N) = 0.
pub fn ordinary_degree(c_vals: &[(u64, Valuation)]) -> Result<u64> {
    match c_vals.iter().find(|(n, _)| *n == 0) {
        Some((_, v)) if *v == Valuation::int(0) => {}
        _ => return pre("c_0 must be a unit"),
    }
    Ok(c_vals
        .iter()
        .filter(|(_, v)| v.finite().is_some_and(|x| x.is_zero()))
        .map(|(n, _)| *n)
        .max()
        .unwrap_or(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    #[test]
    fn rank_two_example() {
        let c = disconnect_certificate(&q(2, 1), 2, &q(1, 1)).unwrap();
        assert_eq!(c.d_alpha, q(2, 1));
        assert_eq!(c.nu_alpha, q(1, 4));
        for x in [q(0, 1), q(1, 2), q(1, 1), q(3, 2), q(2, 1), q(4, 1)] {
            assert!(c.lattice.contains(&x));
        }
        assert!(!c.lattice.contains(&q(1, 3)));
        assert_eq!(c.gap, Some(q(1, 2)));
        assert!(disconnect_certificate(&q(0, 1), 2, &q(1, 1)).is_err());
    }

    #[test]
    fn small_alpha() {
        let c = disconnect_certificate(&q(1, 1000), 3, &q(1, 1)).unwrap();
        assert!(c.d_alpha < q(1, 1000));
        assert_eq!(c.lattice.iter().cloned().collect::<Vec<_>>(), vec![q(0, 1)]);
        let mut prev = q(0, 1);
        for k in 1..6 {
            let d = disconnect_certificate(&q(k, 4), 3, &q(1, 1)).unwrap().d_alpha;
            assert!(d > prev);
            prev = d;
        }
    }

    #[test]
    fn ordinary() {
        let v = |xs: &[i64]| -> Vec<(u64, Valuation)> {
            xs.iter().enumerate().map(|(i, &x)| (i as u64, Valuation::int(x))).collect()
        };
        assert_eq!(ordinary_degree(&v(&[0, 0, 1, 0, 2, 3])).unwrap(), 3);
        assert_eq!(ordinary_degree(&v(&[0, 1, 2])).unwrap(), 0);
        assert!(ordinary_degree(&v(&[1, 0])).is_err());
    }
}
