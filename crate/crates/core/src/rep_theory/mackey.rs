//! Finite-group brute force over Iw/Γ(C): Iwahori indices of Roche
//! subgroups and Mackey's irreducibility criterion.

use std::collections::{HashMap, HashSet, VecDeque};

use crate::error::{pre, HaloError, Result};
use crate::weight_space::{roche_subgroup, WeightCharacter};

const BUDGET: u64 = 10_000_000;

type Mat = Vec<u64>;

struct ModRing {
    p: u64,
    m: u64,
}

impl ModRing {
    fn mul(&self, a: u64, b: u64) -> u64 {
        ((a as u128 * b as u128) % self.m as u128) as u64
    }
    fn add(&self, a: u64, b: u64) -> u64 {
        (a + b) % self.m
    }
    fn sub(&self, a: u64, b: u64) -> u64 {
        (a + self.m - b) % self.m
    }
    fn val(&self, mut a: u64, cap: u32) -> u32 {
        if a == 0 {
            return cap;
        }
        let mut v = 0;
        while a % self.p == 0 {
            a /= self.p;
            v += 1;
        }
        v
    }
    fn inv(&self, a: u64) -> u64 {
        // a is a unit; a^{φ(m)−1}
        let phi = self.m / self.p * (self.p - 1);
        let mut acc = 1u64;
        let mut b = a % self.m;
        let mut e = phi - 1;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, b);
            }
            b = self.mul(b, b);
            e >>= 1;
        }
        acc
    }
    fn matmul(&self, n: usize, a: &Mat, b: &Mat) -> Mat {
        let mut out = vec![0; n * n];
        for i in 0..n {
            for k in 0..n {
                let x = a[i * n + k];
                if x == 0 {
                    continue;
                }
                for j in 0..n {
                    out[i * n + j] = self.add(out[i * n + j], self.mul(x, b[k * n + j]));
                }
            }
        }
        out
    }
}

/// Generators of Iw modulo Γ(C).
fn iwahori_generators(n: usize, r: &ModRing) -> Vec<Mat> {
    let p = r.p;
    let mut gens = Vec::new();
    let mut unit_gens = Vec::new();
    if p == 2 {
        unit_gens.push(r.m - 1);
        unit_gens.push(5 % r.m);
    } else {
        // a primitive root mod p that is also primitive mod p^2 generates
        // (Z/p^C)^×
        let g = (2..p.max(3))
            .find(|&g| {
                let ord_p = (1..p).find(|&k| mod_pow(g, k, p) == 1).unwrap_or(p - 1);
                ord_p == p - 1 && mod_pow(g, p - 1, p * p) != 1
            })
            .unwrap_or(2);
        unit_gens.push(g % r.m);
    }
    let ident = |n: usize| -> Mat {
        let mut m = vec![0; n * n];
        for i in 0..n {
            m[i * n + i] = 1 % r.m;
        }
        m
    };
    for i in 0..n {
        for &u in &unit_gens {
            let mut g = ident(n);
            g[i * n + i] = u;
            gens.push(g);
        }
    }
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let mut g = ident(n);
                g[i * n + j] = if i < j { 1 % r.m } else { p % r.m };
                gens.push(g);
            }
        }
    }
    gens
}

fn mod_pow(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = ((acc as u128 * b as u128) % m as u128) as u64;
        }
        b = ((b as u128 * b as u128) % m as u128) as u64;
        e >>= 1;
    }
    acc
}

/// Canonical Hermite form of the Z_p-lattice spanned by the columns of
/// `gens` together with p^C Z_p^n.
fn hermite_key(n: usize, r: &ModRing, cap: u32, mut gens: Vec<Vec<u64>>) -> Vec<u64> {
    let mut basis: Vec<Vec<u64>> = vec![Vec::new(); n];
    let mut diag = vec![cap; n];
    for row in (0..n).rev() {
        let best = gens
            .iter()
            .enumerate()
            .map(|(k, g)| (r.val(g[row], cap), k))
            .min();
        let Some((v, k)) = best else {
            basis[row] = {
                let mut e = vec![0; n];
                e[row] = 0;
                e
            };
            continue;
        };
        if v >= cap {
            basis[row] = vec![0; n];
            continue;
        }
        let mut piv = gens.swap_remove(k);
        let unit = piv[row] / r.p.pow(v);
        let ui = r.inv(unit);
        for x in piv.iter_mut() {
            *x = r.mul(*x, ui);
        }
        for g in gens.iter_mut() {
            let f = g[row] / r.p.pow(v);
            if f != 0 {
                for i in 0..n {
                    g[i] = r.sub(g[i], r.mul(f, piv[i]));
                }
            }
        }
        // p^{cap−v}·piv has a vanishing row entry modulo p^cap
        let sh = r.p.pow(cap - v) % r.m;
        let extra: Vec<u64> = piv.iter().map(|&x| r.mul(x, sh)).collect();
        if extra.iter().any(|&x| x != 0) {
            gens.push(extra);
        }
        diag[row] = v;
        basis[row] = piv;
    }
    // reduce entries above the diagonal
    for col in 0..n {
        for i in (0..col).rev() {
            let d = r.p.pow(diag[i]);
            if diag[i] >= cap {
                continue;
            }
            let qf = basis[col][i] / d;
            if qf != 0 {
                let bi = basis[i].clone();
                for k in 0..n {
                    basis[col][k] = r.sub(basis[col][k], r.mul(qf % r.m, bi[k]));
                }
            }
        }
    }
    let mut key = Vec::with_capacity(n * n + n);
    for col in 0..n {
        key.push(diag[col] as u64);
        if diag[col] < cap {
            key.extend_from_slice(&basis[col][..col]);
        }
    }
    key
}

/// |Iw : J| by breadth-first search over cosets gJ, J being the Roche
/// subgroup. Cosets are keyed by the lattices g·Λ_j,
/// Λ_j = ⊕_i p^{c_ij} Z_p e_i, whose joint stabiliser is J.
pub fn iwahori_index_bruteforce(w: &WeightCharacter) -> Result<u64> {
    let n = w.n();
    let p = w.p;
    let rd = roche_subgroup(w)?;
    let cap = w.max_conductor().max(1);
    let r = ModRing { p, m: p.pow(cap) };
    let key_of = |g: &Mat| -> Vec<u64> {
        let mut key = Vec::new();
        for j in 0..n {
            let cols: Vec<Vec<u64>> = (0..n)
                .map(|k| {
                    let s = r.p.pow(rd.c_matrix[k][j]) % r.m;
                    (0..n).map(|i| r.mul(g[i * n + k], s)).collect()
                })
                .collect();
            key.extend(hermite_key(n, &r, cap, cols));
            key.push(u64::MAX);
        }
        key
    };
    let gens = iwahori_generators(n, &r);
    let mut id = vec![0; n * n];
    for i in 0..n {
        id[i * n + i] = 1 % r.m;
    }
    let mut seen: HashSet<Vec<u64>> = HashSet::new();
    let mut queue = VecDeque::new();
    seen.insert(key_of(&id));
    queue.push_back(id);
    while let Some(g) = queue.pop_front() {
        for h in &gens {
            let hg = r.matmul(n, h, &g);
            let k = key_of(&hg);
            if seen.insert(k) {
                if seen.len() as u64 > BUDGET {
                    return Err(HaloError::Budget("coset enumeration".into()));
                }
                queue.push_back(hg);
            }
        }
    }
    Ok(seen.len() as u64)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MackeyReport {
    pub irreducible: bool,
    pub intertwiner_dim: u64,
    pub induced_dim: u64,
    pub group_order: u64,
    pub double_cosets: u64,
}

struct Group {
    n: usize,
    p: u64,
    c: u32,
    r: ModRing,
}

impl Group {
    fn radices(&self) -> Vec<u64> {
        let pc = self.p.pow(self.c);
        let units = pc / self.p * (self.p - 1);
        let mut v = Vec::new();
        for i in 0..self.n {
            for j in 0..self.n {
                v.push(if i == j {
                    units
                } else if i < j {
                    pc
                } else {
                    pc / self.p
                });
            }
        }
        v
    }

    fn order(&self) -> Option<u64> {
        self.radices().iter().try_fold(1u64, |a, &b| a.checked_mul(b))
    }

    fn encode(&self, g: &Mat) -> u64 {
        let mut idx = 0u64;
        for (k, rad) in self.radices().into_iter().enumerate() {
            let (i, j) = (k / self.n, k % self.n);
            let x = g[k];
            let d = if i == j {
                x - x / self.p - 1
            } else if i < j {
                x
            } else {
                x / self.p
            };
            idx = idx * rad + d;
        }
        idx
    }

    fn decode(&self, mut idx: u64) -> Mat {
        let rads = self.radices();
        let mut g = vec![0; self.n * self.n];
        for k in (0..rads.len()).rev() {
            let d = idx % rads[k];
            idx /= rads[k];
            let (i, j) = (k / self.n, k % self.n);
            g[k] = if i == j {
                // d-th unit in [1, p^c)
                let q = d / (self.p - 1);
                let rem = d % (self.p - 1);
                q * self.p + rem + 1
            } else if i < j {
                d
            } else {
                d * self.p
            };
        }
        g
    }
}

fn find(parent: &mut [u32], mut x: u32) -> u32 {
    while parent[x as usize] != x {
        parent[x as usize] = parent[parent[x as usize] as usize];
        x = parent[x as usize];
    }
    x
}

/// Diagonal of the LDU factorisation (torus part of the Iwahori
/// decomposition) of a matrix in J.
fn torus_part(n: usize, r: &ModRing, g: &Mat) -> Vec<u64> {
    // Gaussian elimination without pivoting; pivots are units in Iw.
    let mut a = g.clone();
    let mut d = Vec::with_capacity(n);
    for k in 0..n {
        let piv = a[k * n + k];
        d.push(piv);
        let pinv = r.inv(piv);
        for i in k + 1..n {
            let f = r.mul(a[i * n + k], pinv);
            if f == 0 {
                continue;
            }
            for j in k..n {
                a[i * n + j] = r.sub(a[i * n + j], r.mul(f, a[k * n + j]));
            }
        }
    }
    d
}

/// Induces χ from J to Iw/Γ(C) and counts intertwiners by Mackey's formula.
pub fn mackey_bruteforce(w: &WeightCharacter) -> Result<MackeyReport> {
    let n = w.n();
    let p = w.p;
    if !(2..=3).contains(&n) {
        return pre("mackey_bruteforce supports n ∈ {2, 3}");
    }
    let rd = roche_subgroup(w)?;
    let c = w.max_conductor().max(1);
    let grp = Group { n, p, c, r: ModRing { p, m: p.pow(c) } };
    let order = match grp.order() {
        Some(o) if o <= BUDGET => o,
        _ => return Err(HaloError::Budget(format!("|Iw/Γ({c})| exceeds {BUDGET}"))),
    };
    let r = &grp.r;
    let in_j = |g: &Mat| -> bool {
        (0..n).all(|i| {
            (0..n).all(|j| i == j || r.val(g[i * n + j], c) >= rd.c_matrix[i][j])
        })
    };
    // χ values as exponent pairs, tabulated on units mod p^c.
    let gen = if p == 2 {
        1
    } else {
        (2..p).find(|&g| (1..p - 1).all(|k| mod_pow(g, k, p) != 1)).unwrap_or(1)
    };
    let pc = p.pow(c);
    let mut table: Vec<Vec<(u64, u64)>> = vec![vec![(0, 0); pc as usize]; n];
    for (i, row) in table.iter_mut().enumerate() {
        for d in 1..pc {
            if d % p != 0 {
                row[d as usize] = w.char_exponents(i, d, gen);
            }
        }
    }
    let tame_mod = if p == 2 { 2 } else { p - 1 };
    let wild_mod = p.pow(w.wild_level());
    let chi = |g: &Mat| -> (u64, u64) {
        let d = torus_part(n, r, g);
        let mut acc = (0u64, 0u64);
        for (i, &x) in d.iter().enumerate() {
            let (a, b) = table[i][x as usize];
            acc = ((acc.0 + a) % tame_mod, (acc.1 + b) % wild_mod);
        }
        acc
    };
    // J as a list.
    let mut j_elems: Vec<Mat> = Vec::new();
    for idx in 0..order {
        let g = grp.decode(idx);
        if in_j(&g) {
            j_elems.push(g);
        }
    }
    let j_order = j_elems.len() as u64;
    // χ must be a homomorphism on J; check on a sample of pairs.
    let step = (j_elems.len() / 37).max(1);
    for a in j_elems.iter().step_by(step) {
        for b in j_elems.iter().step_by(step * 3) {
            let ab = r.matmul(n, a, b);
            let (x, y) = (chi(a), chi(b));
            let z = chi(&ab);
            if z != ((x.0 + y.0) % tame_mod, (x.1 + y.1) % wild_mod) {
                return Err(HaloError::Precondition(
                    "χ does not extend to a character of J".into(),
                ));
            }
        }
    }
    // Double cosets via union-find under left and right multiplication by
    // generators of J.
    let mut jgens: Vec<Mat> = Vec::new();
    for g in iwahori_generators(n, r) {
        let mut h = g.clone();
        // scale off-diagonal generators into J
        for i in 0..n {
            for j in 0..n {
                if i != j && h[i * n + j] != 0 {
                    h[i * n + j] = p.pow(rd.c_matrix[i][j]) % pc;
                }
            }
        }
        jgens.push(h);
    }
    let mut parent: Vec<u32> = (0..order as u32).collect();
    for idx in 0..order {
        let g = grp.decode(idx);
        for h in &jgens {
            for prod in [r.matmul(n, h, &g), r.matmul(n, &g, h)] {
                let k = grp.encode(&prod);
                let (a, b) = (find(&mut parent, idx as u32), find(&mut parent, k as u32));
                if a != b {
                    parent[a as usize] = b;
                }
            }
        }
    }
    let mut reps: HashMap<u32, u64> = HashMap::new();
    for idx in 0..order {
        let root = find(&mut parent, idx as u32);
        reps.entry(root).or_insert(idx);
    }
    let mut reps: Vec<u64> = reps.into_values().collect();
    reps.sort_unstable();
    let mut dim = 0;
    for &s_idx in &reps {
        let s = grp.decode(s_idx);
        let s_inv = mat_inv(n, r, &s);
        let mut ok = true;
        for x in &j_elems {
            let y = r.matmul(n, &s_inv, &r.matmul(n, x, &s));
            if in_j(&y) && chi(x) != chi(&y) {
                ok = false;
                break;
            }
        }
        if ok {
            dim += 1;
        }
    }
    Ok(MackeyReport {
        irreducible: dim == 1,
        intertwiner_dim: dim,
        induced_dim: order / j_order,
        group_order: order,
        double_cosets: reps.len() as u64,
    })
}

fn mat_inv(n: usize, r: &ModRing, g: &Mat) -> Mat {
    // Gauss–Jordan; Iwahori matrices have unit leading pivots.
    let mut a = g.clone();
    let mut inv = vec![0; n * n];
    for i in 0..n {
        inv[i * n + i] = 1 % r.m;
    }
    for k in 0..n {
        let piv = (k..n)
            .find(|&i| a[i * n + k] % r.p != 0)
            .expect("invertible");
        if piv != k {
            for j in 0..n {
                a.swap(k * n + j, piv * n + j);
                inv.swap(k * n + j, piv * n + j);
            }
        }
        let pi = r.inv(a[k * n + k]);
        for j in 0..n {
            a[k * n + j] = r.mul(a[k * n + j], pi);
            inv[k * n + j] = r.mul(inv[k * n + j], pi);
        }
        for i in 0..n {
            if i != k {
                let f = a[i * n + k];
                if f != 0 {
                    for j in 0..n {
                        a[i * n + j] = r.sub(a[i * n + j], r.mul(f, a[k * n + j]));
                        inv[i * n + j] = r.sub(inv[i * n + j], r.mul(f, inv[k * n + j]));
                    }
                }
            }
        }
    }
    inv
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn encode_roundtrip() {
        let g = Group { n: 2, p: 3, c: 2, r: ModRing { p: 3, m: 9 } };
        let o = g.order().unwrap();
        assert_eq!(o, 6 * 6 * 9 * 3);
        for idx in [0, 1, 17, o - 1] {
            assert_eq!(g.encode(&g.decode(idx)), idx);
        }
    }

    #[test]
    fn index_matches_formula_small() {
        let w = WeightCharacter::from_conductors(3, vec![0, 0], &[2, 1], &[]).unwrap();
        assert_eq!(iwahori_index_bruteforce(&w).unwrap(), 3);
        let w = WeightCharacter::from_conductors(3, vec![0, 0, 0], &[1, 2, 1], &[]).unwrap();
        assert_eq!(iwahori_index_bruteforce(&w).unwrap(), 9);
    }

    #[test]
    fn mackey_small() {
        let w = WeightCharacter::from_conductors(3, vec![0, 0], &[2, 1], &[]).unwrap();
        let r = mackey_bruteforce(&w).unwrap();
        assert_eq!(r.induced_dim, 3);
        assert!(r.irreducible);
        let w = WeightCharacter::from_conductors(3, vec![0, 0], &[1, 1], &[1, 0]).unwrap();
        let r = mackey_bruteforce(&w).unwrap();
        assert_eq!(r.induced_dim, 1);
        assert!(r.irreducible);
    }
}
