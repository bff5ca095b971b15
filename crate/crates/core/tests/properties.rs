mod common;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use proptest::prelude::*;

use halo_core::bounds::{lower_bound_points, t_product, t_product_pow, upper_bound_point};
use halo_core::geometry::{disconnect_certificate, ordinary_degree};
use halo_core::newton::{lower_hull, slopes_below};
use halo_core::padic_core::{eval_wild_char, ramification, teichmuller, ValReading, WildChar};
use halo_core::rep_theory::{lambda_psi_convert, lambda_shifts, weighted_m, weyl_dim, Direction};
use halo_core::up_operator::{as_signed_int, char_series, UpMatrix};
use halo_core::weight_space::{is_simple, roche_subgroup, t_coordinates};
use halo_core::{CycloContext, TruncatedElement, Valuation, WeightCharacter};

use common::*;

fn cfg(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, ..ProptestConfig::default() }
}

fn qpow(x: &Q, k: u32) -> Q {
    (0..k).fold(Q::one(), |a, _| a * x)
}

// --- p-adic arithmetic -----------------------------------------------------

fn element(ctx: &std::sync::Arc<CycloContext>, raw: &[u64], shift: u32) -> TruncatedElement {
    let m = ctx.ring().modulus();
    let pk = (ctx.p() as u128).pow(shift);
    let coeffs = (0..ctx.e()).map(|i| (raw[i % raw.len()] as u128 * pk) % m).collect();
    TruncatedElement::from_raw(ctx, coeffs, Valuation::int(ctx.digits() as i64))
}

proptest! {
    #![proptest_config(cfg(128))]

    #[test]
    fn valuation_is_additive_and_ultrametric(
        pi in 0usize..3,
        raw_a in prop::collection::vec(0u64..1000, 1..8),
        raw_b in prop::collection::vec(0u64..1000, 1..8),
        sa in 0u32..3,
        sb in 0u32..3,
    ) {
        let (p, level) = [(3u64, 2u32), (5, 1), (2, 3)][pi];
        let ctx = CycloContext::new(p, level, 10).unwrap();
        let a = element(&ctx, &raw_a, sa);
        let b = element(&ctx, &raw_b, sb);
        let (va, vb) = (a.valuation(), b.valuation());
        let ab = a.mul(&b);
        if let (ValReading::Exact(x), ValReading::Exact(y)) = (&va, &vb) {
            let sum = x.clone() + y.clone();
            if sum < Valuation::int(ctx.digits() as i64) {
                prop_assert_eq!(ab.valuation(), ValReading::Exact(sum));
            }
        }
        let s = a.add(&b);
        let lo = va.value().clone().min(vb.value().clone());
        prop_assert!(*s.valuation().value() >= lo);
        if va.is_exact() && vb.is_exact() && va.value() != vb.value() {
            prop_assert_eq!(s.valuation(), ValReading::Exact(lo));
        }
    }

    #[test]
    fn wild_character_is_multiplicative(pi in 0usize..3, k in 0u64..1000, x in 0u64..100_000, y in 0u64..100_000) {
        let (p, level) = [(3u64, 2u32), (5, 2), (2, 3)][pi];
        let ctx = CycloContext::new(p, level, 6 * ramification(p, level) as u32).unwrap();
        let qv = if p == 2 { 4 } else { p };
        let m = BigInt::from(p).pow(ctx.digits());
        let u = (BigInt::one() + BigInt::from(qv * x)).mod_floor(&m);
        let w = (BigInt::one() + BigInt::from(qv * y)).mod_floor(&m);
        let uw = (&u * &w).mod_floor(&m);
        let chi = WildChar { level, k: k % p.pow(level) };
        let f = |z: &BigInt| eval_wild_char(&ctx, &chi, &TruncatedElement::from_int(&ctx, z.clone())).unwrap();
        prop_assert!(f(&uw).same_repr(&f(&u).mul(&f(&w))));
    }
}

#[test]
fn teichmuller_has_order_dividing_p_minus_1() {
    for p in [3u64, 5, 7, 11] {
        let ctx = CycloContext::new(p, 0, 12).unwrap();
        for a in 1..p as i64 {
            let t = teichmuller(&ctx, a).unwrap();
            assert!(t.pow(p - 1).same_repr(&TruncatedElement::one(&ctx)), "p={p} a={a}");
            assert_eq!(t.coeffs()[0] % p as u128, a as u128);
        }
    }
}

// --- Newton polygons -------------------------------------------------------

/// min over chords through x of the interpolated height, as (num, den).
fn brute_hull_at(pts: &[(u64, i64)], x: u64) -> (i128, i128) {
    let mut best: Option<(i128, i128)> = None;
    for &(xi, yi) in pts {
        for &(xj, yj) in pts {
            if xi > x || xj < x {
                continue;
            }
            let (num, den) = if xi == xj {
                (yi as i128, 1)
            } else {
                let d = (xj - xi) as i128;
                (yi as i128 * (xj - x) as i128 + yj as i128 * (x - xi) as i128, d)
            };
            best = match best {
                Some((bn, bd)) if bn * den <= num * bd => Some((bn, bd)),
                _ => Some((num, den)),
            };
        }
    }
    best.unwrap()
}

fn point_set() -> impl Strategy<Value = Vec<(u64, i64)>> {
    prop::collection::vec((1u64..300, -20i64..60), 0..200).prop_map(|mut v| {
        v.push((0, 0));
        v
    })
}

proptest! {
    #![proptest_config(cfg(48))]

    #[test]
    fn hull_matches_bruteforce(pts in point_set()) {
        let vals: Vec<(u64, Valuation)> = pts.iter().map(|&(x, y)| (x, Valuation::int(y))).collect();
        let np = lower_hull(&vals).unwrap();
        prop_assert_eq!(np.extent(), pts.iter().map(|p| p.0).max().unwrap());
        for w in np.slopes.windows(2) {
            prop_assert!(w[0].0 < w[1].0);
        }
        for &(x, _) in &pts {
            let (n, d) = brute_hull_at(&pts, x);
            let want = Q::new(BigInt::from(n), BigInt::from(d));
            prop_assert_eq!(np.eval(&q(x as i64, 1)), Some(want));
        }
    }

    #[test]
    fn hull_is_idempotent_and_slopes_below_covers(pts in point_set()) {
        let vals: Vec<(u64, Valuation)> = pts.iter().map(|&(x, y)| (x, Valuation::int(y))).collect();
        let np = lower_hull(&vals).unwrap();
        let again: Vec<(u64, Valuation)> = np.vertices.iter().map(|(x, y)| (*x, Valuation::Finite(y.clone()))).collect();
        prop_assert_eq!(&lower_hull(&again).unwrap(), &np);
        let (count, end) = slopes_below(&np, &q(1_000_000, 1));
        prop_assert_eq!(count, np.extent());
        prop_assert_eq!(end.0, np.extent());
    }

    #[test]
    fn ordinary_degree_is_slope_zero_multiplicity(vals in prop::collection::vec(prop::option::weighted(0.8, 0i64..4), 1..30)) {
        let mut pts = vec![(0u64, Valuation::int(0))];
        for (i, v) in vals.iter().enumerate() {
            pts.push((i as u64 + 1, v.map(Valuation::int).unwrap_or(Valuation::Infinity)));
        }
        let np = lower_hull(&pts).unwrap();
        let zero_mult: u64 = np.slopes.iter().filter(|(s, _)| s.is_zero()).map(|(_, m)| *m).sum();
        prop_assert_eq!(ordinary_degree(&pts).unwrap(), zero_mult);
    }
}

// --- weight space ----------------------------------------------------------

fn conductor_vec() -> impl Strategy<Value = (u64, Vec<u32>)> {
    (prop::sample::select(vec![2u64, 3, 5]), 2usize..5)
        .prop_flat_map(|(p, n)| (Just(p), prop::collection::vec(1u32..5, n)))
}

proptest! {
    #![proptest_config(cfg(500))]

    #[test]
    fn roche_matrix_is_group_shaped((p, conds) in conductor_vec()) {
        let n = conds.len();
        let w = WeightCharacter::from_conductors(p, vec![0; n], &conds, &[]).unwrap();
        let c = roche_subgroup(&w).unwrap().c_matrix;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    prop_assert!(c[i][j] <= c[i][k] + c[k][j]);
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(cfg(200))]

    #[test]
    fn lowering_largest_conductor_keeps_simple((p, conds) in conductor_vec()) {
        let n = conds.len();
        let simple = |c: &[u32]| is_simple(&WeightCharacter::from_conductors(p, vec![0; n], c, &[]).unwrap()).simple;
        let imax = (0..n).max_by_key(|&i| (conds[i], i)).unwrap();
        let second = (0..n).filter(|&i| i != imax).map(|i| conds[i]).max().unwrap();
        let mut c = conds.clone();
        let mut prev = simple(&c);
        while c[imax] > second {
            c[imax] -= 1;
            let now = simple(&c);
            prop_assert!(!prev || now, "{:?} simple but {:?} not", conds, c);
            prev = now;
        }
    }

    #[test]
    fn simple_predicate_ignores_common_twist(
        ks in prop::collection::vec(0u64..9, 2..4),
        tame in prop::collection::vec(0u64..2, 2..4),
        twist in 0u64..9,
        tame_twist in 0u64..2,
    ) {
        let n = ks.len().min(tame.len());
        let build = |dk: u64, dt: u64| {
            let wild = (0..n).map(|i| WildChar { level: 2, k: (ks[i] + dk) % 9 }).collect();
            let tm = (0..n).map(|i| (tame[i] + dt) % 2).collect();
            WeightCharacter::new(3, vec![0; n], tm, wild).unwrap()
        };
        prop_assert_eq!(is_simple(&build(0, 0)).simple, is_simple(&build(twist, tame_twist)).simple);
    }
}

// --- representation theory -------------------------------------------------

proptest! {
    #![proptest_config(cfg(64))]

    #[test]
    fn weyl_dim_counts_gelfand_tsetlin_patterns(m in prop::collection::vec(0i64..4, 1..4), base in -3i64..3) {
        let mut t = vec![base];
        for x in m.iter().rev() {
            let last = *t.last().unwrap();
            t.push(last + x);
        }
        t.reverse();
        prop_assert_eq!(weyl_dim(&t).unwrap(), BigInt::from(gt_count(&t)));
    }

    #[test]
    fn lambda_psi_roundtrip(m in prop::collection::vec(0i64..6, 2..5), last in -4i64..5, vals in prop::collection::vec((-20i64..20, 1i64..6), 5)) {
        let mut m = m;
        *m.last_mut().unwrap() = last;
        let n = m.len();
        let input: Vec<Valuation> = vals[..n].iter().map(|&(a, b)| Valuation::ratio(a, b)).collect();
        let lam = lambda_psi_convert(&m, &input, Direction::PsiToLambda).unwrap();
        let back: Vec<Valuation> = lam.iter().cloned().map(Valuation::Finite).collect();
        let psi = lambda_psi_convert(&m, &back, Direction::LambdaToPsi).unwrap();
        prop_assert_eq!(psi.into_iter().map(Valuation::Finite).collect::<Vec<_>>(), input);
        let total: Q = lambda_shifts(&m).into_iter().sum();
        prop_assert_eq!(total, q(-weighted_m(&m), 1));
    }
}

#[test]
fn lambda_shifts_rank_two() {
    for m1 in 0..5 {
        for m2 in -3..4 {
            let e = lambda_shifts(&[m1, m2]);
            assert_eq!(e[0], q(1, 2) - q(m2, 1));
            assert_eq!(e[1], q(-1, 2) - q(m1 + m2, 1));
            assert_eq!(&e[0] + &e[1], q(-(2 * m2 + m1), 1));
        }
    }
}

// --- bounds ----------------------------------------------------------------

proptest! {
    #![proptest_config(cfg(64))]

    #[test]
    fn lower_points_convex_with_hockey_stick_x(n in 2usize..5, p in prop::sample::select(vec![2u64, 3, 5, 7]), h in 1u64..4, num in 1i64..20, m_max in 1u64..15) {
        let v = q(num, 20);
        let pts = lower_bound_points(n, p, h, &v, m_max).unwrap();
        let d = (n * (n - 1) / 2) as u64;
        for (mm, pt) in pts.iter().enumerate() {
            let want = binom_oracle(mm as u64 + d, d) * h;
            prop_assert_eq!(&pt.x, &q(want as i64, 1));
            prop_assert!(!pt.x.is_negative());
        }
        let steps: Vec<Q> = pts.windows(2).map(|w| (&w[1].y - &w[0].y) / (&w[1].x - &w[0].x)).collect();
        for s in steps.windows(2) {
            prop_assert!(s[0] <= s[1]);
        }
        for w in pts.windows(2) {
            prop_assert!(w[0].x < w[1].x && w[0].y <= w[1].y);
        }
    }

    #[test]
    fn upper_slope_is_linear_in_each_m(n in 2usize..5, m in prop::collection::vec(0i64..5, 4), axis in 0usize..4) {
        let axis = axis % n;
        let ratio = |bump: i64| {
            let mut mm = m[..n].to_vec();
            mm[axis] += bump;
            let mut t = vec![0i64; n];
            t[n - 1] = mm[n - 1];
            for i in (0..n - 1).rev() {
                t[i] = t[i + 1] + mm[i];
            }
            let w = WeightCharacter::from_conductors(3, t, &vec![1; n], &[]).unwrap();
            let u = upper_bound_point(&w, 1, None).unwrap();
            &u.point.y / &u.point.x
        };
        let (f0, f1, f2) = (ratio(0), ratio(1), ratio(2));
        prop_assert_eq!(&f2 - &f1 * q(2, 1) + &f0, Q::zero());
    }

    #[test]
    fn t_product_at_most_max_coordinate(p in prop::sample::select(vec![3u64, 5]), conds in prop::collection::vec(2u32..4, 1..3), t in prop::collection::vec(-3i64..4, 3)) {
        let n = conds.len() + 1;
        let mut c = conds.clone();
        c.push(1);
        let mut tt = t[..n].to_vec();
        tt.sort_unstable_by(|a, b| b.cmp(a));
        let last = tt[n - 1];
        tt.iter_mut().for_each(|x| *x -= last);
        let w = WeightCharacter::from_conductors(p, tt, &c, &[]).unwrap();
        let ctx = CycloContext::new(p, w.wild_level(), 1).unwrap();
        let vals = t_coordinates(&w, &ctx).unwrap().vals;
        let vmax = vals[..n - 1].iter().filter_map(|v| v.finite().cloned()).max().unwrap();
        let power = (n * (n - 1)) as u32;
        let exact = t_product_pow(&w).unwrap().unwrap();
        prop_assert!(exact <= qpow(&vmax, power));
        let approx = t_product(&w).unwrap().unwrap();
        let back = approx.powi(power as i32);
        let exact_f = halo_core::rational::to_f64(&exact);
        prop_assert!((back - exact_f).abs() <= 1e-9 * exact_f.max(1.0));
    }

    #[test]
    fn d_alpha_is_increasing(n in 2usize..4, a in 1i64..20, b in 1i64..20, a1 in 1i64..4) {
        prop_assume!(a != b);
        let (lo, hi) = (a.min(b), a.max(b));
        let c_lo = disconnect_certificate(&q(lo, 10), n, &q(a1, 1)).unwrap();
        let c_hi = disconnect_certificate(&q(hi, 10), n, &q(a1, 1)).unwrap();
        prop_assert!(c_lo.d_alpha < c_hi.d_alpha);
    }
}

fn binom_oracle(n: u64, k: u64) -> u64 {
    let mut r = 1u64;
    for i in 0..k {
        r = r * (n - i) / (i + 1);
    }
    r
}

// --- characteristic series --------------------------------------------------

fn det(m: &[Vec<BigInt>]) -> BigInt {
    // Bareiss elimination
    let n = m.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut a = m.to_vec();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if a[k][k].is_zero() {
            match (k + 1..n).find(|&r| !a[r][k].is_zero()) {
                Some(r) => {
                    a.swap(k, r);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = (&a[i][j] * &a[k][k] - &a[i][k] * &a[k][j]) / &prev;
            }
        }
        prev = a[k][k].clone();
    }
    sign * &a[n - 1][n - 1]
}

/// c_N of det(1 − XM) = (−1)^N · (sum of principal N×N minors).
fn char_coeffs(rows: &[Vec<i64>]) -> Vec<BigInt> {
    let n = rows.len();
    let mut out = vec![BigInt::zero(); n + 1];
    for mask in 0u32..(1 << n) {
        let idx: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
        let sub: Vec<Vec<BigInt>> = idx.iter().map(|&i| idx.iter().map(|&j| BigInt::from(rows[i][j])).collect()).collect();
        let k = idx.len();
        let d = det(&sub);
        out[k] += if k % 2 == 0 { d } else { -d };
    }
    out
}

proptest! {
    #![proptest_config(cfg(64))]

    #[test]
    fn char_series_matches_determinant(p in prop::sample::select(vec![2u64, 3, 5]), dim in 1usize..6, entries in prop::collection::vec(-30i64..30, 36)) {
        let rows: Vec<Vec<i64>> = (0..dim).map(|i| entries[i * dim..(i + 1) * dim].to_vec()).collect();
        let digits = 30;
        let m = UpMatrix::from_int_matrix(p, &rows, digits).unwrap();
        let cs = char_series(&m, dim).unwrap();
        let want = char_coeffs(&rows);
        prop_assert_eq!(cs.coeffs.len(), dim);
        prop_assert_eq!(cs.coeffs[0].index, 1);
        for c in &cs.coeffs {
            let n = c.index as usize;
            let exact = &want[n];
            let got = as_signed_int(&cs.ctx, &c.coeff).unwrap();
            // Newton's identities divide by N, so only the cut is reliable
            let cut = halo_core::rational::floor(&c.cut);
            prop_assert!(cut >= BigInt::from(digits - 4));
            let modulus = BigInt::from(p).pow(cut.try_into().unwrap());
            prop_assert_eq!((&got - exact).mod_floor(&modulus), BigInt::zero(), "c_{}", n);
            if c.certified {
                let v = match vp(exact, p) {
                    Some(v) => Valuation::int(v as i64),
                    None => Valuation::Infinity,
                };
                prop_assert_eq!(&c.valuation, &v, "c_{}", n);
            } else {
                prop_assert!(vp(exact, p).map_or(true, |v| Valuation::int(v as i64) >= c.valuation));
            }
        }
    }
}
