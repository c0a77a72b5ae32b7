//! Builders for monomial, truncated-polynomial and exterior algebras.

use std::collections::HashMap;

use super::{AlgebraError, FilteredAlgebra, GradedAlgebra, SparseVec};
use crate::linalg::Fp;

fn monomial_name(exps: &[u32]) -> String {
    let parts: Vec<String> = exps
        .iter()
        .enumerate()
        .filter(|(_, &e)| e > 0)
        .map(|(i, &e)| if e == 1 { format!("x{i}") } else { format!("x{i}^{e}") })
        .collect();
    if parts.is_empty() {
        "1".into()
    } else {
        parts.join("*")
    }
}

/// `F_p[x_0..x_{k-1}] / (monomials not kept)`; `keep` must describe an order
/// ideal (closed under division). Variable `i` has degree `degrees[i]`.
/// Basis: kept monomials sorted by (degree, exponent vector).
pub fn monomial_algebra(
    p: u64,
    degrees: &[i64],
    max_exponent: u32,
    keep: impl Fn(&[u32]) -> bool,
) -> Result<GradedAlgebra, AlgebraError> {
    let fp = Fp::new(p)?;
    let k = degrees.len();
    let mut monos: Vec<Vec<u32>> = Vec::new();
    let mut cur = vec![0u32; k];
    loop {
        if keep(&cur) {
            monos.push(cur.clone());
        }
        let mut i = 0;
        loop {
            if i == k {
                break;
            }
            cur[i] += 1;
            if cur[i] <= max_exponent {
                break;
            }
            cur[i] = 0;
            i += 1;
        }
        if i == k {
            break;
        }
    }
    let deg = |m: &[u32]| m.iter().zip(degrees).map(|(&e, &d)| e as i64 * d).sum::<i64>();
    monos.sort_by(|a, b| (deg(a), a.iter().rev().collect::<Vec<_>>()).cmp(&(deg(b), b.iter().rev().collect::<Vec<_>>())));
    let index: HashMap<Vec<u32>, u32> = monos.iter().enumerate().map(|(i, m)| (m.clone(), i as u32)).collect();
    let d = monos.len();
    let mut mul: Vec<SparseVec> = Vec::with_capacity(d * d);
    for a in &monos {
        for b in &monos {
            let s: Vec<u32> = a.iter().zip(b).map(|(x, y)| x + y).collect();
            mul.push(index.get(&s).map_or(vec![], |&t| vec![(t, 1)]));
        }
    }
    let unit = index[&vec![0u32; k]] as usize;
    let aug = (0..d).map(|i| u32::from(i == unit)).collect();
    let weights = monos.iter().map(|m| deg(m)).collect();
    let names = monos.iter().map(|m| monomial_name(m)).collect();
    let a = FilteredAlgebra::from_parts(fp, names, unit, mul, aug, weights)?;
    GradedAlgebra::new(a)
}

/// `F_p[x_0..x_{k-1}] / (monomials of degree > max_degree)`.
pub fn truncated_polynomial(p: u64, degrees: &[i64], max_degree: i64) -> Result<GradedAlgebra, AlgebraError> {
    let min = degrees.iter().copied().min().unwrap_or(1).max(1);
    let cap = (max_degree / min).max(0) as u32;
    let degs = degrees.to_vec();
    monomial_algebra(p, degrees, cap, move |m| {
        m.iter().zip(&degs).map(|(&e, &d)| e as i64 * d).sum::<i64>() <= max_degree
    })
}

/// Exterior algebra on `k` generators of degree 1.
pub fn exterior_algebra(p: u64, k: usize) -> Result<GradedAlgebra, AlgebraError> {
    let fp = Fp::new(p)?;
    let mut subsets: Vec<u32> = (0..1u32 << k).collect();
    subsets.sort_by_key(|s| (s.count_ones(), *s));
    let index: HashMap<u32, u32> = subsets.iter().enumerate().map(|(i, &s)| (s, i as u32)).collect();
    let d = subsets.len();
    let mut mul = Vec::with_capacity(d * d);
    for &a in &subsets {
        for &b in &subsets {
            if a & b != 0 {
                mul.push(vec![]);
                continue;
            }
            // sign of merging: count pairs (i in a, j in b) with i > j
            let mut inv = 0u32;
            for i in 0..k {
                if a >> i & 1 == 1 {
                    inv += (b & ((1u32 << i) - 1)).count_ones();
                }
            }
            mul.push(vec![(index[&(a | b)], fp.sign(inv as usize))]);
        }
    }
    let names = subsets
        .iter()
        .map(|&s| {
            if s == 0 {
                "1".into()
            } else {
                (0..k).filter(|i| s >> i & 1 == 1).map(|i| format!("e{i}")).collect::<Vec<_>>().join("^")
            }
        })
        .collect();
    let aug = (0..d).map(|i| u32::from(i == 0)).collect();
    let weights = subsets.iter().map(|s| s.count_ones() as i64).collect();
    let a = FilteredAlgebra::from_parts(fp, names, 0, mul, aug, weights)?;
    GradedAlgebra::new(a)
}

/// A polynomial algebra `F_p[x_0..x_{k-1}]` with positive variable degrees.
/// Infinite-dimensional: the bar side only ever sees truncations, the
/// resolution side uses its Koszul complex.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolynomialAlgebra {
    pub p: u64,
    pub degrees: Vec<i64>,
}

impl PolynomialAlgebra {
    pub fn new(p: u64, degrees: Vec<i64>) -> Result<Self, AlgebraError> {
        Fp::new(p)?;
        if degrees.iter().any(|&d| d <= 0) {
            return Err(super::malformed("degrees", "variable degrees must be positive"));
        }
        Ok(PolynomialAlgebra { p, degrees })
    }

    pub fn standard(p: u64, vars: usize) -> Result<Self, AlgebraError> {
        Self::new(p, vec![1; vars])
    }

    pub fn vars(&self) -> usize {
        self.degrees.len()
    }

    /// Agrees with the polynomial algebra in degrees `<= max_degree`.
    pub fn truncation(&self, max_degree: i64) -> Result<GradedAlgebra, AlgebraError> {
        truncated_polynomial(self.p, &self.degrees, max_degree)
    }

    /// Tensor product is again polynomial on the union of the variables.
    pub fn tensor(&self, other: &PolynomialAlgebra) -> PolynomialAlgebra {
        let mut degrees = self.degrees.clone();
        degrees.extend(&other.degrees);
        PolynomialAlgebra { p: self.p, degrees }
    }
}
