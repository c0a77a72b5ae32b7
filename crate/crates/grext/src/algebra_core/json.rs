//! JSON description format, shared by algebras and modules:
//! `{p, basis, unit, mul: [[i, j, [[k, c], …]], …], aug, weights}`.
//! For a module `i` indexes the algebra, `j` and `k` the module, `aug` is empty
//! and `unit` is absent. A filtration may be given instead of `weights` as
//! `filtration: [Fil^1 spanning vectors, Fil^2 …]`; it is then re-based.

use serde::{Deserialize, Serialize};

use super::{malformed, AlgebraError, FilteredAlgebra, FilteredModule, SparseVec};
use crate::linalg::Fp;

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct Description {
    pub p: u64,
    pub basis: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<usize>,
    pub mul: Vec<(usize, usize, Vec<(usize, u64)>)>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub aug: Vec<u64>,
    #[serde(default)]
    pub weights: Vec<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filtration: Option<Vec<Vec<Vec<u64>>>>,
}

fn constants(
    fp: Fp,
    rows: usize,
    cols: usize,
    target: usize,
    mul: &[(usize, usize, Vec<(usize, u64)>)],
) -> Result<Vec<SparseVec>, AlgebraError> {
    let mut out: Vec<SparseVec> = vec![Vec::new(); rows * cols];
    let mut seen = vec![false; rows * cols];
    for (i, j, terms) in mul {
        if *i >= rows || *j >= cols {
            return Err(malformed("mul", format!("pair ({i}, {j}) out of range")));
        }
        let slot = i * cols + j;
        if seen[slot] {
            return Err(malformed("mul", format!("pair ({i}, {j}) listed twice")));
        }
        seen[slot] = true;
        let mut v: SparseVec = Vec::new();
        for &(k, c) in terms {
            if k >= target {
                return Err(malformed("mul", format!("index {k} out of range in ({i}, {j})")));
            }
            if c >= fp.p() as u64 {
                return Err(malformed("mul", format!("coefficient {c} not reduced mod {}", fp.p())));
            }
            if c != 0 {
                v.push((k as u32, c as u32));
            }
        }
        v.sort_unstable();
        if v.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(malformed("mul", format!("repeated index in ({i}, {j})")));
        }
        out[slot] = v;
    }
    Ok(out)
}

fn encode(rows: usize, cols: usize, data: &[SparseVec]) -> Vec<(usize, usize, Vec<(usize, u64)>)> {
    let mut out = Vec::new();
    for i in 0..rows {
        for j in 0..cols {
            let v = &data[i * cols + j];
            if !v.is_empty() {
                out.push((i, j, v.iter().map(|&(k, c)| (k as usize, c as u64)).collect()));
            }
        }
    }
    out
}

pub(super) fn algebra_to_description(a: &FilteredAlgebra) -> Description {
    let d = a.dim();
    Description {
        p: a.p() as u64,
        basis: a.names.clone(),
        unit: Some(a.unit),
        mul: encode(d, d, &a.mul),
        aug: a.aug.iter().map(|&x| x as u64).collect(),
        weights: a.weights.clone(),
        filtration: None,
    }
}

pub(super) fn algebra_from_description(desc: &Description) -> Result<FilteredAlgebra, AlgebraError> {
    let fp = Fp::new(desc.p)?;
    let d = desc.basis.len();
    let unit = desc.unit.ok_or_else(|| malformed("unit", "missing"))?;
    let mul = constants(fp, d, d, d, &desc.mul)?;
    if desc.aug.len() != d {
        return Err(malformed("aug", format!("expected {d} values, got {}", desc.aug.len())));
    }
    if desc.aug.iter().any(|&x| x >= fp.p() as u64) {
        return Err(malformed("aug", "value not reduced mod p"));
    }
    let aug: Vec<u32> = desc.aug.iter().map(|&x| x as u32).collect();
    match (&desc.filtration, desc.weights.is_empty()) {
        (Some(_), false) => Err(malformed("filtration", "give either weights or a filtration, not both")),
        (Some(levels), true) => {
            let flat = FilteredAlgebra::from_parts(fp, desc.basis.clone(), unit, mul, aug, vec![0; d])?;
            flat.validate()?;
            let mut lv = Vec::with_capacity(levels.len());
            for level in levels {
                let mut vs = Vec::with_capacity(level.len());
                for v in level {
                    if v.len() != d || v.iter().any(|&x| x >= fp.p() as u64) {
                        return Err(malformed("filtration", "vector of wrong length or unreduced entry"));
                    }
                    vs.push(v.iter().map(|&x| x as u32).collect());
                }
                lv.push(vs);
            }
            flat.rebase(&lv)
        }
        (None, _) => {
            let weights = if desc.weights.is_empty() { vec![0; d] } else { desc.weights.clone() };
            FilteredAlgebra::new(fp, desc.basis.clone(), unit, mul, aug, weights)
        }
    }
}

pub(super) fn module_to_description(m: &FilteredModule) -> Description {
    Description {
        p: m.fp.p() as u64,
        basis: m.names.clone(),
        unit: None,
        mul: encode(m.alg_dim, m.dim(), &m.act),
        aug: Vec::new(),
        weights: m.weights.clone(),
        filtration: None,
    }
}

pub(super) fn module_from_description(a: &FilteredAlgebra, desc: &Description) -> Result<FilteredModule, AlgebraError> {
    if desc.p != a.p() as u64 {
        return Err(malformed("p", "module and algebra primes differ"));
    }
    if desc.filtration.is_some() {
        return Err(malformed("filtration", "modules take explicit weights"));
    }
    let dm = desc.basis.len();
    let act = constants(a.field(), a.dim(), dm, dm, &desc.mul)?;
    let weights = if desc.weights.is_empty() { vec![0; dm] } else { desc.weights.clone() };
    FilteredModule::new(a, desc.basis.clone(), act, weights)
}
