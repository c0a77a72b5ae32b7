//! Group algebras of finite p-groups, filtered by powers of the augmentation ideal.

use super::{adapted_basis, induced_subalgebra, AlgebraError, AlgebraMorphism, FilteredAlgebra, SparseVec};
use crate::linalg::{Coordinates, Echelon, Fp};

/// Multiplication table of `Z/n` (element `k` is `g^k`).
pub fn cyclic_group_table(n: usize) -> Vec<Vec<usize>> {
    (0..n).map(|a| (0..n).map(|b| (a + b) % n).collect()).collect()
}

/// Direct product; element `(a, b)` has index `a·|H| + b`.
pub fn product_table(g: &[Vec<usize>], h: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let (m, n) = (g.len(), h.len());
    (0..m * n)
        .map(|x| (0..m * n).map(|y| g[x / n][y / n] * n + h[x % n][y % n]).collect())
        .collect()
}

pub fn abelian_group_table(orders: &[usize]) -> Vec<Vec<usize>> {
    orders.iter().fold(vec![vec![0]], |acc, &n| product_table(&acc, &cyclic_group_table(n)))
}

/// `F_p[G]` on an adapted basis, with the change of basis to group elements.
#[derive(Clone, Debug)]
pub struct GroupAlgebra {
    pub algebra: FilteredAlgebra,
    /// `basis[k]` in group-element coordinates.
    pub basis: Vec<Vec<u32>>,
    coords: Coordinates,
    table: Vec<Vec<usize>>,
}

impl GroupAlgebra {
    pub fn order(&self) -> usize {
        self.table.len()
    }

    /// Group-element vector to adapted coordinates.
    pub fn from_group_vec(&self, v: &[u32]) -> Vec<u32> {
        self.coords.coords(v).expect("the adapted basis spans F_p[G]")
    }

    pub fn element(&self, g: usize) -> Vec<u32> {
        let mut v = vec![0; self.order()];
        v[g] = 1;
        self.from_group_vec(&v)
    }

    /// `F_p[H] ↪ F_p[G]` for the subgroup `H` (element indices), with the
    /// filtration induced from `F_p[G]`.
    pub fn subgroup(&self, elements: &[usize]) -> Result<(FilteredAlgebra, AlgebraMorphism), AlgebraError> {
        let n = self.order();
        for &a in elements {
            for &b in elements {
                if !elements.contains(&self.table[a][b]) {
                    return Err(AlgebraError::Morphism("element list is not closed under multiplication".into()));
                }
            }
        }
        let span: Vec<Vec<u32>> = elements.iter().filter(|&&g| g < n).map(|&g| self.element(g)).collect();
        induced_subalgebra(&self.algebra, &span)
    }
}

fn is_power_of(mut n: usize, p: usize) -> bool {
    if n == 0 {
        return false;
    }
    while n % p == 0 {
        n /= p;
    }
    n == 1
}

/// `F_p[G]` from a multiplication table with identity at index 0.
/// The filtration is by powers of the augmentation ideal `I`; the basis of
/// `I^k / I^{k+1}` is picked greedily from `u·(h−1)` with `u` running over the
/// chosen basis of `I^{k-1}`, so for `Z/p^r` it is `(g−1)^k`.
pub fn group_algebra(p: u64, table: &[Vec<usize>]) -> Result<GroupAlgebra, AlgebraError> {
    let fp = Fp::new(p)?;
    let n = table.len();
    if n == 0 || table.iter().any(|r| r.len() != n || r.iter().any(|&x| x >= n)) {
        return Err(super::malformed("table", "not a square table of element indices"));
    }
    if (0..n).any(|g| table[0][g] != g || table[g][0] != g) {
        return Err(super::malformed("table", "element 0 is not the identity"));
    }
    for a in 0..n {
        if (0..n).map(|b| table[a][b]).collect::<std::collections::BTreeSet<_>>().len() != n {
            return Err(super::malformed("table", "rows are not permutations"));
        }
    }
    if !is_power_of(n, p as usize) {
        return Err(AlgebraError::NotAPGroup { order: n, p });
    }
    let mulg = |u: &[u32], v: &[u32]| -> Vec<u32> {
        let mut out = vec![0; n];
        for (a, &x) in u.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (b, &y) in v.iter().enumerate() {
                if y != 0 {
                    let c = table[a][b];
                    out[c] = fp.add(out[c], fp.mul(x, y));
                }
            }
        }
        out
    };
    let minus_one = |h: usize| {
        let mut v = vec![0; n];
        v[h] = fp.add(v[h], 1);
        v[0] = fp.sub(v[0], 1);
        v
    };
    // powers I^k as spans, and candidate lists in the greedy order
    let mut levels: Vec<Vec<Vec<u32>>> = vec![(0..n).map(|g| super::unit_vector(n, g)).collect()];
    let mut candidates: Vec<Vec<Vec<u32>>> = vec![vec![super::unit_vector(n, 0)]];
    let mut prev: Vec<Vec<u32>> = vec![super::unit_vector(n, 0)];
    loop {
        let mut next = Vec::new();
        let mut e = Echelon::new(fp, n);
        for u in &prev {
            for h in 1..n {
                let v = mulg(u, &minus_one(h));
                if e.insert(&v) {
                    next.push(v);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        levels.push(e.basis());
        candidates.push(next.clone());
        prev = next;
    }
    // adapted basis with the candidate order taking precedence over echelon order
    let top = levels.len();
    let mut acc = Echelon::new(fp, n);
    let mut chosen: Vec<(Vec<u32>, i64)> = Vec::new();
    for w in (0..top).rev() {
        for v in &candidates[w] {
            if acc.insert(v) {
                chosen.push((v.clone(), w as i64));
            }
        }
    }
    debug_assert_eq!(acc.rank(), n);
    chosen.sort_by_key(|(_, w)| *w);
    // sanity: matches the generic adapted basis dimensions
    debug_assert_eq!(adapted_basis(fp, n, &levels, Some(&super::unit_vector(n, 0))).map(|b| b.len()).ok(), Some(n));
    let vectors: Vec<Vec<u32>> = chosen.iter().map(|(v, _)| v.clone()).collect();
    let weights: Vec<i64> = chosen.iter().map(|(_, w)| *w).collect();
    let coords = Coordinates::new(fp, n, vectors.clone()).expect("basis");
    let mut mul: Vec<SparseVec> = Vec::with_capacity(n * n);
    for a in &vectors {
        for b in &vectors {
            mul.push(super::to_sparse(&coords.coords(&mulg(a, b)).expect("closed")));
        }
    }
    let aug = vectors.iter().map(|v| v.iter().fold(0, |s, &x| fp.add(s, x))).collect();
    let mut counters = vec![0usize; top];
    let names = weights
        .iter()
        .map(|&w| {
            let k = counters[w as usize];
            counters[w as usize] += 1;
            if w == 0 {
                "1".to_string()
            } else {
                format!("w{w}.{k}")
            }
        })
        .collect();
    let algebra = FilteredAlgebra::from_parts(fp, names, 0, mul, aug, weights)?;
    Ok(GroupAlgebra { algebra, basis: vectors, coords, table: table.to_vec() })
}
