//! Finite-dimensional augmented algebras with weight filtrations, their graded
//! counterparts, modules, the associated graded functor and amplitude.
//!
//! An algebra is stored on a basis `b_0..b_{D-1}` with sparse structure
//! constants. Filtrations are always *adapted*: `Fil^i` is the span of the
//! basis vectors of weight `>= i`. A filtration given by arbitrary subspaces
//! is re-based on construction (see [`adapted_basis`]).

mod build;
mod group;
mod json;
pub mod random;

use std::fmt;

use thiserror::Error;

use crate::linalg::{Coordinates, Echelon, Fp, LinalgError};

pub use build::{exterior_algebra, monomial_algebra, truncated_polynomial, PolynomialAlgebra};
pub use group::{
    abelian_group_table, cyclic_group_table, group_algebra, product_table, GroupAlgebra,
};
pub use json::Description;

/// Sparse vector: `(index, coefficient)` pairs, strictly increasing index, no zeros.
pub type SparseVec = Vec<(u32, u32)>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axiom {
    Unit,
    Associativity,
    FiltrationMultiplicativity,
    Augmentation,
    ModuleAction,
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Axiom::Unit => "unit",
            Axiom::Associativity => "associativity",
            Axiom::FiltrationMultiplicativity => "filtration-multiplicativity",
            Axiom::Augmentation => "augmentation",
            Axiom::ModuleAction => "module-action",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AlgebraError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("malformed description: field `{field}`: {msg}")]
    Malformed { field: &'static str, msg: String },
    #[error("{which} axiom violated: {witness}")]
    AxiomViolation { which: Axiom, witness: String },
    #[error("not a p-group: order {order} is not a power of {p}")]
    NotAPGroup { order: usize, p: u64 },
    #[error("not graded: {0}")]
    NotGraded(String),
    #[error("invalid morphism: {0}")]
    Morphism(String),
}

pub(crate) fn malformed(field: &'static str, msg: impl Into<String>) -> AlgebraError {
    AlgebraError::Malformed { field, msg: msg.into() }
}

fn violation(which: Axiom, witness: impl Into<String>) -> AlgebraError {
    AlgebraError::AxiomViolation { which, witness: witness.into() }
}

pub(crate) fn axpy(fp: Fp, acc: &mut [u32], f: u32, v: &[(u32, u32)]) {
    if f == 0 {
        return;
    }
    for &(k, c) in v {
        let k = k as usize;
        acc[k] = fp.add(acc[k], fp.mul(f, c));
    }
}

pub(crate) fn to_sparse(v: &[u32]) -> SparseVec {
    v.iter().enumerate().filter(|(_, &c)| c != 0).map(|(k, &c)| (k as u32, c)).collect()
}

/// A finite-dimensional augmented algebra with an adapted weight filtration.
#[derive(Clone, PartialEq, Eq)]
pub struct FilteredAlgebra {
    fp: Fp,
    names: Vec<String>,
    unit: usize,
    mul: Vec<SparseVec>,
    aug: Vec<u32>,
    weights: Vec<i64>,
}

impl fmt::Debug for FilteredAlgebra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FilteredAlgebra(p={}, dim={}, weights={:?})", self.p(), self.dim(), self.weights)
    }
}

impl FilteredAlgebra {
    /// Builds and validates. Validation order: unit, associativity,
    /// filtration multiplicativity, augmentation; the first failure is reported.
    pub fn new(
        fp: Fp,
        names: Vec<String>,
        unit: usize,
        mul: Vec<SparseVec>,
        aug: Vec<u32>,
        weights: Vec<i64>,
    ) -> Result<Self, AlgebraError> {
        let a = Self::from_parts(fp, names, unit, mul, aug, weights)?;
        a.validate()?;
        Ok(a)
    }

    /// Shape checks only; the axioms are trusted. Used by internal builders
    /// whose output is covered by tests.
    pub(crate) fn from_parts(
        fp: Fp,
        names: Vec<String>,
        unit: usize,
        mul: Vec<SparseVec>,
        aug: Vec<u32>,
        weights: Vec<i64>,
    ) -> Result<Self, AlgebraError> {
        let d = names.len();
        if d == 0 {
            return Err(malformed("basis", "empty basis"));
        }
        if unit >= d {
            return Err(malformed("unit", format!("index {unit} out of range")));
        }
        if mul.len() != d * d {
            return Err(malformed("mul", "wrong number of products"));
        }
        if aug.len() != d {
            return Err(malformed("aug", format!("expected {d} values, got {}", aug.len())));
        }
        if weights.len() != d {
            return Err(malformed("weights", format!("expected {d} values, got {}", weights.len())));
        }
        if let Some(w) = weights.iter().find(|&&w| w < 0) {
            return Err(malformed("weights", format!("negative algebra weight {w}")));
        }
        for v in &mul {
            if v.iter().any(|&(k, c)| k as usize >= d || c == 0 || c >= fp.p()) {
                return Err(malformed("mul", "coefficient or index out of range"));
            }
        }
        if aug.iter().any(|&c| c >= fp.p()) {
            return Err(malformed("aug", "coefficient out of range"));
        }
        Ok(FilteredAlgebra { fp, names, unit, mul, aug, weights })
    }

    pub fn validate(&self) -> Result<(), AlgebraError> {
        let d = self.dim();
        let u = self.unit;
        for i in 0..d {
            let e: SparseVec = vec![(i as u32, 1)];
            if self.mul[u * d + i] != e || self.mul[i * d + u] != e {
                return Err(violation(Axiom::Unit, format!("{} is not a two-sided unit for {}", self.names[u], self.names[i])));
            }
        }
        for i in 0..d {
            for j in 0..d {
                let ij = self.mul_basis_vec(i, j);
                for k in 0..d {
                    let left = self.mul_dense_basis(&ij, k);
                    let jk = self.mul_basis_vec(j, k);
                    let right = self.mul_basis_dense(i, &jk);
                    if left != right {
                        return Err(violation(
                            Axiom::Associativity,
                            format!("({}·{})·{} ≠ {}·({}·{})", self.names[i], self.names[j], self.names[k], self.names[i], self.names[j], self.names[k]),
                        ));
                    }
                }
            }
        }
        for i in 0..d {
            for j in 0..d {
                let lo = self.weights[i] + self.weights[j];
                if let Some(&(k, _)) = self.mul[i * d + j].iter().find(|&&(k, _)| self.weights[k as usize] < lo) {
                    return Err(violation(
                        Axiom::FiltrationMultiplicativity,
                        format!("{}·{} has a component on {} of weight {} < {}", self.names[i], self.names[j], self.names[k as usize], self.weights[k as usize], lo),
                    ));
                }
            }
        }
        let fp = self.fp;
        if self.aug[u] != 1 {
            return Err(violation(Axiom::Augmentation, "ε(1) ≠ 1"));
        }
        for i in 0..d {
            if self.weights[i] >= 1 && self.aug[i] != 0 {
                return Err(violation(Axiom::Augmentation, format!("ε({}) ≠ 0 on Fil^1", self.names[i])));
            }
            for j in 0..d {
                let lhs = self.mul[i * d + j].iter().fold(0, |s, &(k, c)| fp.add(s, fp.mul(c, self.aug[k as usize])));
                if lhs != fp.mul(self.aug[i], self.aug[j]) {
                    return Err(violation(Axiom::Augmentation, format!("ε({}·{}) ≠ ε({})ε({})", self.names[i], self.names[j], self.names[i], self.names[j])));
                }
            }
        }
        Ok(())
    }

    #[inline]
    pub fn field(&self) -> Fp {
        self.fp
    }
    #[inline]
    pub fn p(&self) -> u32 {
        self.fp.p()
    }
    #[inline]
    pub fn dim(&self) -> usize {
        self.names.len()
    }
    #[inline]
    pub fn unit(&self) -> usize {
        self.unit
    }
    pub fn names(&self) -> &[String] {
        &self.names
    }
    pub fn weights(&self) -> &[i64] {
        &self.weights
    }
    #[inline]
    pub fn weight(&self, i: usize) -> i64 {
        self.weights[i]
    }
    pub fn aug(&self) -> &[u32] {
        &self.aug
    }
    #[inline]
    pub fn mul_basis(&self, i: usize, j: usize) -> &SparseVec {
        &self.mul[i * self.dim() + j]
    }
    pub fn max_weight(&self) -> i64 {
        *self.weights.iter().max().unwrap()
    }

    fn mul_basis_vec(&self, i: usize, j: usize) -> Vec<u32> {
        let mut v = vec![0; self.dim()];
        axpy(self.fp, &mut v, 1, self.mul_basis(i, j));
        v
    }

    fn mul_dense_basis(&self, a: &[u32], k: usize) -> Vec<u32> {
        let mut out = vec![0; self.dim()];
        for (i, &c) in a.iter().enumerate() {
            axpy(self.fp, &mut out, c, self.mul_basis(i, k));
        }
        out
    }

    fn mul_basis_dense(&self, i: usize, b: &[u32]) -> Vec<u32> {
        let mut out = vec![0; self.dim()];
        for (j, &c) in b.iter().enumerate() {
            axpy(self.fp, &mut out, c, self.mul_basis(i, j));
        }
        out
    }

    /// Product of two dense elements.
    pub fn mul(&self, a: &[u32], b: &[u32]) -> Vec<u32> {
        let fp = self.fp;
        let mut out = vec![0; self.dim()];
        for (i, &x) in a.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.iter().enumerate() {
                if y != 0 {
                    axpy(fp, &mut out, fp.mul(x, y), self.mul_basis(i, j));
                }
            }
        }
        out
    }

    pub fn unit_vec(&self) -> Vec<u32> {
        let mut v = vec![0; self.dim()];
        v[self.unit] = 1;
        v
    }

    pub fn augment(&self, a: &[u32]) -> u32 {
        let fp = self.fp;
        a.iter().zip(&self.aug).fold(0, |s, (&x, &e)| fp.add(s, fp.mul(x, e)))
    }

    /// Number of basis vectors of each weight `0..=max_weight`.
    pub fn graded_dims(&self) -> Vec<usize> {
        let mut v = vec![0; self.max_weight() as usize + 1];
        for &w in &self.weights {
            v[w as usize] += 1;
        }
        v
    }

    /// Structure constants are weight-homogeneous.
    pub fn is_homogeneous(&self) -> bool {
        let d = self.dim();
        (0..d).all(|i| {
            (0..d).all(|j| {
                self.mul[i * d + j]
                    .iter()
                    .all(|&(k, _)| self.weights[k as usize] == self.weights[i] + self.weights[j])
            })
        })
    }

    /// Is `v` in `Fil^w`?
    pub fn in_fil(&self, v: &[u32], w: i64) -> bool {
        v.iter().enumerate().all(|(k, &c)| c == 0 || self.weights[k] >= w)
    }

    /// Same algebra, new weights (the caller guarantees the axioms).
    pub fn with_weights(&self, weights: Vec<i64>) -> Result<Self, AlgebraError> {
        let a = Self::from_parts(self.fp, self.names.clone(), self.unit, self.mul.clone(), self.aug.clone(), weights)?;
        a.validate()?;
        Ok(a)
    }

    /// Re-bases onto the adapted basis of the filtration `levels[i-1] = Fil^i`
    /// (spanning vectors, `i >= 1`). The unit stays first.
    pub fn rebase(&self, levels: &[Vec<Vec<u32>>]) -> Result<Self, AlgebraError> {
        let d = self.dim();
        let mut subspaces = vec![(0..d).map(|k| unit_vector(d, k)).collect::<Vec<_>>()];
        subspaces.extend(levels.iter().cloned());
        let basis = adapted_basis(self.fp, d, &subspaces, Some(&self.unit_vec()))?;
        let vectors: Vec<Vec<u32>> = basis.iter().map(|(v, _)| v.clone()).collect();
        let weights: Vec<i64> = basis.iter().map(|(_, w)| *w).collect();
        let names = (0..vectors.len()).map(|k| format!("f{k}")).collect();
        let out = self.change_basis(&vectors, names, weights)?;
        out.validate()?;
        Ok(out)
    }

    /// Algebra on a new basis `vectors` (given in current coordinates) spanning
    /// a subalgebra containing the unit as `vectors[0]`.
    pub(crate) fn change_basis(
        &self,
        vectors: &[Vec<u32>],
        names: Vec<String>,
        weights: Vec<i64>,
    ) -> Result<Self, AlgebraError> {
        let fp = self.fp;
        let d = self.dim();
        let coords = Coordinates::new(fp, d, vectors.to_vec())
            .ok_or_else(|| malformed("basis", "basis vectors are dependent"))?;
        let n = vectors.len();
        let mut mul = Vec::with_capacity(n * n);
        for a in vectors {
            for b in vectors {
                let prod = self.mul(a, b);
                let c = coords
                    .coords(&prod)
                    .ok_or_else(|| malformed("basis", "span is not closed under multiplication"))?;
                mul.push(to_sparse(&c));
            }
        }
        let aug = vectors.iter().map(|v| self.augment(v)).collect();
        Self::from_parts(fp, names, 0, mul, aug, weights)
    }

    pub fn to_description(&self) -> Description {
        json::algebra_to_description(self)
    }

    pub fn from_description(desc: &Description) -> Result<Self, AlgebraError> {
        json::algebra_from_description(desc)
    }
}

pub(crate) fn unit_vector(d: usize, k: usize) -> Vec<u32> {
    let mut v = vec![0; d];
    v[k] = 1;
    v
}

/// Adapted basis for a descending chain `subspaces[0] ⊇ subspaces[1] ⊇ …`
/// (each a spanning set; `subspaces[i]` is `Fil^i`). Returns `(vector, weight)`
/// sorted by weight, with `first` (if given) as the first weight-0 vector.
/// Within a weight, vectors come from the reduced echelon basis of that level.
pub fn adapted_basis(
    fp: Fp,
    len: usize,
    subspaces: &[Vec<Vec<u32>>],
    first: Option<&[u32]>,
) -> Result<Vec<(Vec<u32>, i64)>, AlgebraError> {
    let top = subspaces.len();
    let mut acc = Echelon::new(fp, len);
    let mut chosen: Vec<(Vec<u32>, i64)> = Vec::new();
    for w in (0..top).rev() {
        let mut level = Echelon::new(fp, len);
        for v in &subspaces[w] {
            level.insert(v);
        }
        // must contain the deeper level
        if w + 1 < top {
            for (v, _) in &chosen {
                if !level.contains(v) {
                    return Err(malformed("filtration", format!("Fil^{} is not contained in Fil^{}", w + 1, w)));
                }
            }
        }
        let mut here = Vec::new();
        if w == 0 {
            if let Some(f) = first {
                if acc.insert(f) {
                    here.push(f.to_vec());
                }
            }
        }
        for v in level.basis() {
            if acc.insert(&v) {
                here.push(v);
            }
        }
        for v in here {
            chosen.push((v, w as i64));
        }
    }
    if acc.rank() != {
        let mut e = Echelon::new(fp, len);
        for v in &subspaces[0] {
            e.insert(v);
        }
        e.rank()
    } {
        return Err(malformed("filtration", "levels do not span the whole space"));
    }
    // weight ascending, keep within-level order
    chosen.sort_by_key(|(_, w)| *w);
    Ok(chosen)
}

/// A connected-or-not graded algebra: a filtered algebra whose structure
/// constants are homogeneous in the weights (now called degrees).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GradedAlgebra {
    inner: FilteredAlgebra,
    connected: bool,
}

impl GradedAlgebra {
    pub fn new(a: FilteredAlgebra) -> Result<Self, AlgebraError> {
        if !a.is_homogeneous() {
            return Err(AlgebraError::NotGraded("structure constants are not degree-additive".into()));
        }
        let zero_deg = a.weights.iter().filter(|&&w| w == 0).count();
        let connected = zero_deg == 1 && a.weights[a.unit] == 0;
        Ok(GradedAlgebra { inner: a, connected })
    }

    pub fn filtered(&self) -> &FilteredAlgebra {
        &self.inner
    }
    pub fn into_filtered(self) -> FilteredAlgebra {
        self.inner
    }
    pub fn is_connected(&self) -> bool {
        self.connected
    }
    pub fn degree(&self, i: usize) -> i64 {
        self.inner.weights[i]
    }
    pub fn dim(&self) -> usize {
        self.inner.dim()
    }
    pub fn field(&self) -> Fp {
        self.inner.fp
    }
    pub fn top_degree(&self) -> i64 {
        self.inner.max_weight()
    }
    /// Basis indices grouped by degree.
    pub fn by_degree(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.top_degree() as usize + 1];
        for (i, &w) in self.inner.weights.iter().enumerate() {
            out[w as usize].push(i);
        }
        out
    }
}

/// gr A: keep only the weight-homogeneous part of every product.
pub fn associated_graded(a: &FilteredAlgebra) -> GradedAlgebra {
    let d = a.dim();
    let mul = (0..d * d)
        .map(|ij| {
            let (i, j) = (ij / d, ij % d);
            let w = a.weights[i] + a.weights[j];
            a.mul[ij].iter().copied().filter(|&(k, _)| a.weights[k as usize] == w).collect()
        })
        .collect();
    let g = FilteredAlgebra {
        fp: a.fp,
        names: a.names.clone(),
        unit: a.unit,
        mul,
        aug: a.aug.clone(),
        weights: a.weights.clone(),
    };
    GradedAlgebra::new(g).expect("homogeneous by construction")
}

/// `a ⊗ b` with basis pairs `(i, j) ↦ i·dim(b) + j` and additive degrees.
pub fn tensor_graded(a: &GradedAlgebra, b: &GradedAlgebra) -> Result<GradedAlgebra, AlgebraError> {
    let t = tensor_filtered(a.filtered(), b.filtered())?;
    GradedAlgebra::new(t)
}

pub fn tensor_filtered(a: &FilteredAlgebra, b: &FilteredAlgebra) -> Result<FilteredAlgebra, AlgebraError> {
    if a.fp != b.fp {
        return Err(malformed("p", "tensor factors over different primes"));
    }
    let fp = a.fp;
    let (da, db) = (a.dim(), b.dim());
    let n = da * db;
    let mut names = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    let mut aug = Vec::with_capacity(n);
    for i in 0..da {
        for j in 0..db {
            names.push(match (i == a.unit, j == b.unit) {
                (true, true) => "1".to_string(),
                (false, true) => a.names[i].clone(),
                (true, false) => b.names[j].clone(),
                _ => format!("{}⊗{}", a.names[i], b.names[j]),
            });
            weights.push(a.weights[i] + b.weights[j]);
            aug.push(fp.mul(a.aug[i], b.aug[j]));
        }
    }
    let mut mul = Vec::with_capacity(n * n);
    for x in 0..n {
        let (i, j) = (x / db, x % db);
        for y in 0..n {
            let (k, l) = (y / db, y % db);
            let mut v: SparseVec = Vec::new();
            for &(s, c) in a.mul_basis(i, k) {
                for &(t, e) in b.mul_basis(j, l) {
                    v.push((s * db as u32 + t, fp.mul(c, e)));
                }
            }
            v.sort_unstable();
            mul.push(v);
        }
    }
    FilteredAlgebra::from_parts(fp, names, a.unit * db + b.unit, mul, aug, weights)
}

/// A unital, augmented, filtration-preserving algebra map `src → tgt`, stored
/// as the images of the source basis in target coordinates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AlgebraMorphism {
    images: Vec<Vec<u32>>,
    tgt_dim: usize,
}

impl AlgebraMorphism {
    pub fn new(src: &FilteredAlgebra, tgt: &FilteredAlgebra, images: Vec<Vec<u32>>) -> Result<Self, AlgebraError> {
        let bad = |m: String| AlgebraError::Morphism(m);
        if src.fp != tgt.fp {
            return Err(bad("different primes".into()));
        }
        if images.len() != src.dim() || images.iter().any(|v| v.len() != tgt.dim()) {
            return Err(bad("image matrix has the wrong shape".into()));
        }
        if images[src.unit] != tgt.unit_vec() {
            return Err(bad("unit is not preserved".into()));
        }
        for (i, v) in images.iter().enumerate() {
            if tgt.augment(v) != src.aug[i] {
                return Err(bad(format!("augmentation not preserved on {}", src.names[i])));
            }
            if !tgt.in_fil(v, src.weights[i]) {
                return Err(bad(format!("{} leaves Fil^{}", src.names[i], src.weights[i])));
            }
        }
        let fp = src.fp;
        for i in 0..src.dim() {
            for j in 0..src.dim() {
                let mut lhs = vec![0; tgt.dim()];
                for &(k, c) in src.mul_basis(i, j) {
                    for (t, &x) in images[k as usize].iter().enumerate() {
                        lhs[t] = fp.add(lhs[t], fp.mul(c, x));
                    }
                }
                if lhs != tgt.mul(&images[i], &images[j]) {
                    return Err(bad(format!("not multiplicative on ({}, {})", src.names[i], src.names[j])));
                }
            }
        }
        Ok(AlgebraMorphism { images, tgt_dim: tgt.dim() })
    }

    pub fn identity(a: &FilteredAlgebra) -> Self {
        AlgebraMorphism { images: (0..a.dim()).map(|k| unit_vector(a.dim(), k)).collect(), tgt_dim: a.dim() }
    }

    pub fn images(&self) -> &[Vec<u32>] {
        &self.images
    }
    pub fn src_dim(&self) -> usize {
        self.images.len()
    }
    pub fn tgt_dim(&self) -> usize {
        self.tgt_dim
    }

    /// `other ∘ self` (first `self`, then `other`).
    pub fn then(&self, other: &AlgebraMorphism, fp: Fp) -> AlgebraMorphism {
        let images = self
            .images
            .iter()
            .map(|v| {
                let mut out = vec![0; other.tgt_dim];
                for (k, &c) in v.iter().enumerate() {
                    if c != 0 {
                        for (t, &x) in other.images[k].iter().enumerate() {
                            out[t] = fp.add(out[t], fp.mul(c, x));
                        }
                    }
                }
                out
            })
            .collect();
        AlgebraMorphism { images, tgt_dim: other.tgt_dim }
    }

    /// gr f: the weight-preserving component of each image.
    pub fn associated_graded(&self, src: &FilteredAlgebra, tgt: &FilteredAlgebra) -> AlgebraMorphism {
        let images = self
            .images
            .iter()
            .enumerate()
            .map(|(i, v)| {
                v.iter()
                    .enumerate()
                    .map(|(k, &c)| if tgt.weights[k] == src.weights[i] { c } else { 0 })
                    .collect()
            })
            .collect();
        AlgebraMorphism { images, tgt_dim: self.tgt_dim }
    }
}

/// The subalgebra spanned by `span` (target coordinates) with the induced
/// filtration `Fil^i ∩ S`, on an adapted basis, together with its inclusion.
pub fn induced_subalgebra(
    a: &FilteredAlgebra,
    span: &[Vec<u32>],
) -> Result<(FilteredAlgebra, AlgebraMorphism), AlgebraError> {
    let fp = a.fp;
    let d = a.dim();
    let mut e = Echelon::new(fp, d);
    for v in span {
        e.insert(v);
    }
    let s_basis = e.basis();
    if !e.contains(&a.unit_vec()) {
        return Err(AlgebraError::Morphism("span does not contain the unit".into()));
    }
    let top = a.max_weight() as usize;
    let mut levels = Vec::with_capacity(top + 1);
    for w in 0..=top as i64 {
        // x = Σ c_i s_i with all coordinates of weight < w vanishing
        let low: Vec<usize> = (0..d).filter(|&k| a.weights[k] < w).collect();
        let cols: Vec<Vec<u32>> = s_basis.iter().map(|s| low.iter().map(|&k| s[k]).collect()).collect();
        let m = crate::linalg::FpMatrix::from_columns(fp, low.len(), &cols);
        let level: Vec<Vec<u32>> = m
            .kernel_basis()
            .into_iter()
            .map(|c| {
                let mut x = vec![0; d];
                for (i, &ci) in c.iter().enumerate() {
                    if ci != 0 {
                        axpy(fp, &mut x, ci, &to_sparse(&s_basis[i]));
                    }
                }
                x
            })
            .collect();
        levels.push(level);
    }
    let basis = adapted_basis(fp, d, &levels, Some(&a.unit_vec()))?;
    let vectors: Vec<Vec<u32>> = basis.iter().map(|(v, _)| v.clone()).collect();
    let weights: Vec<i64> = basis.iter().map(|(_, w)| *w).collect();
    let names = vectors
        .iter()
        .map(|v| {
            let nz: Vec<usize> = (0..d).filter(|&k| v[k] != 0).collect();
            if nz.len() == 1 && v[nz[0]] == 1 {
                a.names[nz[0]].clone()
            } else {
                let terms: Vec<String> = nz.iter().map(|&k| format!("{}{}", if v[k] == 1 { String::new() } else { v[k].to_string() }, a.names[k])).collect();
                terms.join("+")
            }
        })
        .collect();
    let sub = a.change_basis(&vectors, names, weights)?;
    sub.validate()?;
    let f = AlgebraMorphism::new(&sub, a, vectors)?;
    Ok((sub, f))
}

/// A left module over a filtered algebra with `ℤ`-indexed adapted filtration.
#[derive(Clone, PartialEq, Eq)]
pub struct FilteredModule {
    fp: Fp,
    names: Vec<String>,
    alg_dim: usize,
    act: Vec<SparseVec>,
    weights: Vec<i64>,
}

impl fmt::Debug for FilteredModule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FilteredModule(dim={}, weights={:?})", self.dim(), self.weights)
    }
}

impl FilteredModule {
    pub fn new(
        a: &FilteredAlgebra,
        names: Vec<String>,
        act: Vec<SparseVec>,
        weights: Vec<i64>,
    ) -> Result<Self, AlgebraError> {
        let m = Self::from_parts(a, names, act, weights)?;
        m.validate(a)?;
        Ok(m)
    }

    pub(crate) fn from_parts(
        a: &FilteredAlgebra,
        names: Vec<String>,
        act: Vec<SparseVec>,
        weights: Vec<i64>,
    ) -> Result<Self, AlgebraError> {
        let dm = names.len();
        if dm == 0 {
            return Err(malformed("basis", "module must be nonzero"));
        }
        if act.len() != a.dim() * dm {
            return Err(malformed("mul", "wrong number of action entries"));
        }
        if weights.len() != dm {
            return Err(malformed("weights", format!("expected {dm} values, got {}", weights.len())));
        }
        for v in &act {
            if v.iter().any(|&(k, c)| k as usize >= dm || c == 0 || c >= a.p()) {
                return Err(malformed("mul", "coefficient or index out of range"));
            }
        }
        Ok(FilteredModule { fp: a.fp, names, alg_dim: a.dim(), act, weights })
    }

    pub fn validate(&self, a: &FilteredAlgebra) -> Result<(), AlgebraError> {
        if a.dim() != self.alg_dim || a.fp != self.fp {
            return Err(malformed("mul", "module does not match the algebra"));
        }
        let dm = self.dim();
        for j in 0..dm {
            if self.act[a.unit * dm + j] != vec![(j as u32, 1)] {
                return Err(violation(Axiom::ModuleAction, format!("1·{} ≠ {}", self.names[j], self.names[j])));
            }
        }
        let fp = self.fp;
        for i in 0..a.dim() {
            for k in 0..a.dim() {
                let ik = a.mul_basis(i, k);
                for j in 0..dm {
                    let mut lhs = vec![0; dm];
                    for &(t, c) in ik {
                        axpy(fp, &mut lhs, c, self.action(t as usize, j));
                    }
                    let mut rhs = vec![0; dm];
                    for &(t, c) in self.action(k, j) {
                        axpy(fp, &mut rhs, c, self.action(i, t as usize));
                    }
                    if lhs != rhs {
                        return Err(violation(
                            Axiom::ModuleAction,
                            format!("({}·{})·{} ≠ {}·({}·{})", a.names[i], a.names[k], self.names[j], a.names[i], a.names[k], self.names[j]),
                        ));
                    }
                }
            }
        }
        for i in 0..a.dim() {
            for j in 0..dm {
                let lo = a.weights[i] + self.weights[j];
                if let Some(&(k, _)) = self.action(i, j).iter().find(|&&(k, _)| self.weights[k as usize] < lo) {
                    return Err(violation(
                        Axiom::FiltrationMultiplicativity,
                        format!("{}·{} has a component on {} below weight {}", a.names[i], self.names[j], self.names[k as usize], lo),
                    ));
                }
            }
        }
        Ok(())
    }

    /// The trivial module `k` (action through ε) placed in weight `w`.
    pub fn trivial(a: &FilteredAlgebra, w: i64) -> Self {
        let act = a.aug.iter().map(|&e| if e == 0 { vec![] } else { vec![(0, e)] }).collect();
        FilteredModule { fp: a.fp, names: vec!["m".into()], alg_dim: a.dim(), act, weights: vec![w] }
    }

    /// `k^r` with trivial action and the given weights.
    pub fn trivial_with_weights(a: &FilteredAlgebra, weights: &[i64]) -> Self {
        let r = weights.len();
        let mut act = Vec::with_capacity(a.dim() * r);
        for i in 0..a.dim() {
            for j in 0..r {
                act.push(if a.aug[i] == 0 { vec![] } else { vec![(j as u32, a.aug[i])] });
            }
        }
        let names = (0..r).map(|j| format!("m{j}")).collect();
        FilteredModule { fp: a.fp, names, alg_dim: a.dim(), act, weights: weights.to_vec() }
    }

    /// The regular left module.
    pub fn regular(a: &FilteredAlgebra) -> Self {
        FilteredModule {
            fp: a.fp,
            names: a.names.clone(),
            alg_dim: a.dim(),
            act: a.mul.clone(),
            weights: a.weights.clone(),
        }
    }

    /// `A / J` for the left ideal generated by `gens`, with induced filtration.
    pub fn quotient(a: &FilteredAlgebra, gens: &[Vec<u32>], shift: i64) -> Result<Self, AlgebraError> {
        let fp = a.fp;
        let d = a.dim();
        let mut ideal = Echelon::new(fp, d);
        for g in gens {
            for i in 0..d {
                ideal.insert(&a.mul(&unit_vector(d, i), g));
            }
        }
        // left ideal: also closed under repeated multiplication
        loop {
            let before = ideal.rank();
            for v in ideal.basis() {
                for i in 0..d {
                    ideal.insert(&a.mul(&unit_vector(d, i), &v));
                }
            }
            if ideal.rank() == before {
                break;
            }
        }
        // greedy adapted basis: from the highest weight down
        let mut acc = ideal.clone();
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by_key(|&k| (std::cmp::Reverse(a.weights[k]), k));
        let mut chosen = Vec::new();
        for k in order {
            if acc.insert(&unit_vector(d, k)) {
                chosen.push(k);
            }
        }
        chosen.sort_by_key(|&k| (a.weights[k], k));
        let mut full = ideal.basis();
        let jdim = full.len();
        full.extend(chosen.iter().map(|&k| unit_vector(d, k)));
        let coords = Coordinates::new(fp, d, full).expect("independent by construction");
        let mut act = Vec::with_capacity(d * chosen.len());
        for i in 0..d {
            for &k in &chosen {
                let prod = a.mul(&unit_vector(d, i), &unit_vector(d, k));
                let c = coords.coords(&prod).expect("spans");
                act.push(to_sparse(&c[jdim..]));
            }
        }
        let names = chosen.iter().map(|&k| format!("[{}]", a.names[k])).collect();
        let weights = chosen.iter().map(|&k| a.weights[k] + shift).collect();
        let m = Self::from_parts(a, names, act, weights)?;
        m.validate(a)?;
        Ok(m)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.names.len()
    }
    pub fn field(&self) -> Fp {
        self.fp
    }
    pub fn names(&self) -> &[String] {
        &self.names
    }
    pub fn weights(&self) -> &[i64] {
        &self.weights
    }
    #[inline]
    pub fn weight(&self, j: usize) -> i64 {
        self.weights[j]
    }
    /// `b_i · m_j`.
    #[inline]
    pub fn action(&self, i: usize, j: usize) -> &SparseVec {
        &self.act[i * self.dim() + j]
    }
    pub fn alg_dim(&self) -> usize {
        self.alg_dim
    }

    /// Smallest `i` with `Fil^i M = 0`.
    pub fn mu(&self) -> i64 {
        self.weights.iter().max().unwrap() + 1
    }
    /// Largest `i` with `Fil^i M = M`.
    pub fn nu(&self) -> i64 {
        *self.weights.iter().min().unwrap()
    }

    pub fn shifted(&self, c: i64) -> Self {
        let mut m = self.clone();
        m.weights.iter_mut().for_each(|w| *w += c);
        m
    }

    /// Does every non-unit basis element of positive weight act by zero?
    pub fn is_trivial_action(&self, a: &FilteredAlgebra) -> bool {
        (0..a.dim()).all(|i| {
            (0..self.dim()).all(|j| {
                let expect: SparseVec = if a.aug[i] == 0 { vec![] } else { vec![(j as u32, a.aug[i])] };
                self.act[i * self.dim() + j] == expect
            })
        })
    }

    /// Restriction of scalars along `f: src → a`.
    pub fn restrict(&self, src: &FilteredAlgebra, f: &AlgebraMorphism) -> Result<Self, AlgebraError> {
        let fp = self.fp;
        let dm = self.dim();
        let mut act = Vec::with_capacity(src.dim() * dm);
        for img in f.images() {
            for j in 0..dm {
                let mut v = vec![0; dm];
                for (k, &c) in img.iter().enumerate() {
                    axpy(fp, &mut v, c, self.action(k, j));
                }
                act.push(to_sparse(&v));
            }
        }
        let m = Self::from_parts(src, self.names.clone(), act, self.weights.clone())?;
        m.validate(src)?;
        Ok(m)
    }

    pub fn to_description(&self) -> Description {
        json::module_to_description(self)
    }

    pub fn from_description(a: &FilteredAlgebra, desc: &Description) -> Result<Self, AlgebraError> {
        json::module_from_description(a, desc)
    }
}

/// `μ − ν`, the length of the filtration.
pub fn amplitude(m: &FilteredModule) -> i64 {
    m.mu() - m.nu()
}

/// gr M over gr A: homogeneous part of the action.
pub fn associated_graded_module(a: &FilteredAlgebra, m: &FilteredModule) -> FilteredModule {
    let dm = m.dim();
    let act = (0..a.dim() * dm)
        .map(|x| {
            let (i, j) = (x / dm, x % dm);
            let w = a.weights[i] + m.weights[j];
            m.act[x].iter().copied().filter(|&(k, _)| m.weights[k as usize] == w).collect()
        })
        .collect();
    FilteredModule { act, ..m.clone() }
}

/// External tensor product `ma ⊠ mb` over `a ⊗ b`.
pub fn tensor_modules(
    a: &FilteredAlgebra,
    ma: &FilteredModule,
    b: &FilteredAlgebra,
    mb: &FilteredModule,
) -> FilteredModule {
    let fp = a.fp;
    let (da, db) = (a.dim(), b.dim());
    let (ra, rb) = (ma.dim(), mb.dim());
    let mut act = Vec::with_capacity(da * db * ra * rb);
    for i in 0..da {
        for j in 0..db {
            for s in 0..ra {
                for t in 0..rb {
                    let mut v: SparseVec = Vec::new();
                    for &(x, c) in ma.action(i, s) {
                        for &(y, e) in mb.action(j, t) {
                            v.push((x * rb as u32 + y, fp.mul(c, e)));
                        }
                    }
                    v.sort_unstable();
                    act.push(v);
                }
            }
        }
    }
    let mut names = Vec::new();
    let mut weights = Vec::new();
    for s in 0..ra {
        for t in 0..rb {
            names.push(format!("{}⊠{}", ma.names[s], mb.names[t]));
            weights.push(ma.weights[s] + mb.weights[t]);
        }
    }
    FilteredModule { fp, names, alg_dim: da * db, act, weights }
}

#[cfg(test)]
mod tests;
