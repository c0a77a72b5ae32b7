//! Exact linear algebra over a prime field F_p.
//!
//! Everything downstream (Hom spaces, differentials, restriction maps) is a
//! matrix here. Storage is dense up to [`DENSE_COL_LIMIT`] columns and
//! row-sparse beyond; every operation behaves identically on both.

use std::fmt;

use thiserror::Error;

pub const DENSE_COL_LIMIT: usize = 512;

const NONE: u32 = u32::MAX;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinalgError {
    #[error("modulus {0} is not a prime below 2^31")]
    NotPrime(u64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

pub fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= p {
        if p % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Arithmetic in F_p. `p` is validated once, so the helpers never check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Fp {
    p: u32,
}

impl Fp {
    pub fn new(p: u64) -> Result<Self, LinalgError> {
        if p >= (1 << 31) || !is_prime(p) {
            return Err(LinalgError::NotPrime(p));
        }
        Ok(Fp { p: p as u32 })
    }

    #[inline]
    pub fn p(self) -> u32 {
        self.p
    }

    #[inline]
    pub fn reduce(self, x: i64) -> u32 {
        x.rem_euclid(self.p as i64) as u32
    }

    #[inline]
    pub fn add(self, a: u32, b: u32) -> u32 {
        let s = a + b;
        if s >= self.p {
            s - self.p
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(self, a: u32, b: u32) -> u32 {
        if a >= b {
            a - b
        } else {
            a + self.p - b
        }
    }

    #[inline]
    pub fn neg(self, a: u32) -> u32 {
        if a == 0 {
            0
        } else {
            self.p - a
        }
    }

    #[inline]
    pub fn mul(self, a: u32, b: u32) -> u32 {
        ((a as u64 * b as u64) % self.p as u64) as u32
    }

    pub fn pow(self, mut a: u32, mut e: u64) -> u32 {
        let mut r = 1u32 % self.p;
        while e > 0 {
            if e & 1 == 1 {
                r = self.mul(r, a);
            }
            a = self.mul(a, a);
            e >>= 1;
        }
        r
    }

    /// Inverse of a nonzero element.
    pub fn inv(self, a: u32) -> u32 {
        debug_assert!(a != 0);
        self.pow(a, self.p as u64 - 2)
    }

    /// `(-1)^k` as a field element.
    #[inline]
    pub fn sign(self, k: usize) -> u32 {
        if k % 2 == 0 {
            1 % self.p
        } else {
            self.p - 1
        }
    }
}

#[derive(Clone, PartialEq, Eq)]
enum Storage {
    Dense(Vec<u32>),
    Sparse(Vec<Vec<(u32, u32)>>),
}

/// A `rows × cols` matrix over F_p.
#[derive(Clone, PartialEq, Eq)]
pub struct FpMatrix {
    fp: Fp,
    rows: usize,
    cols: usize,
    data: Storage,
}

/// Serialized as a list of rows.
impl serde::Serialize for FpMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        (0..self.rows()).map(|r| self.row_dense(r)).collect::<Vec<_>>().serialize(s)
    }
}

impl fmt::Debug for FpMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "FpMatrix(p={}, {}x{})", self.fp.p, self.rows, self.cols)?;
        if self.rows * self.cols <= 400 {
            for r in 0..self.rows {
                writeln!(f, "  {:?}", self.row_dense(r))?;
            }
        }
        Ok(())
    }
}

impl FpMatrix {
    pub fn zeros(p: u64, rows: usize, cols: usize) -> Result<Self, LinalgError> {
        Ok(Self::zeros_in(Fp::new(p)?, rows, cols))
    }

    pub fn zeros_in(fp: Fp, rows: usize, cols: usize) -> Self {
        let data = if cols <= DENSE_COL_LIMIT {
            Storage::Dense(vec![0; rows * cols])
        } else {
            Storage::Sparse(vec![Vec::new(); rows])
        };
        FpMatrix { fp, rows, cols, data }
    }

    pub fn identity(p: u64, n: usize) -> Result<Self, LinalgError> {
        Ok(Self::identity_in(Fp::new(p)?, n))
    }

    pub fn identity_in(fp: Fp, n: usize) -> Self {
        let mut m = Self::zeros_in(fp, n, n);
        for i in 0..n {
            m.set(i, i, 1);
        }
        m
    }

    /// Builds a matrix from signed integer rows, reducing mod p.
    pub fn from_rows(p: u64, rows: &[Vec<i64>]) -> Result<Self, LinalgError> {
        let fp = Fp::new(p)?;
        let cols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != cols) {
            return Err(LinalgError::DimensionMismatch("ragged rows".into()));
        }
        let mut m = Self::zeros_in(fp, rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            for (j, &x) in r.iter().enumerate() {
                m.set(i, j, fp.reduce(x));
            }
        }
        Ok(m)
    }

    /// Builds a matrix whose columns are the given vectors (all of length `rows`).
    pub fn from_columns(fp: Fp, rows: usize, columns: &[Vec<u32>]) -> Self {
        let mut m = Self::zeros_in(fp, rows, columns.len());
        for (j, c) in columns.iter().enumerate() {
            debug_assert_eq!(c.len(), rows);
            for (i, &x) in c.iter().enumerate() {
                if x != 0 {
                    m.set(i, j, x);
                }
            }
        }
        m
    }

    /// Sums duplicate entries.
    pub fn from_triplets(
        fp: Fp,
        rows: usize,
        cols: usize,
        entries: impl IntoIterator<Item = (usize, usize, u32)>,
    ) -> Self {
        let mut m = Self::zeros_in(fp, rows, cols);
        for (r, c, v) in entries {
            if v != 0 {
                m.add_to(r, c, v);
            }
        }
        m
    }

    #[inline]
    pub fn field(&self) -> Fp {
        self.fp
    }
    #[inline]
    pub fn p(&self) -> u32 {
        self.fp.p
    }
    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }
    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.data, Storage::Sparse(_))
    }

    pub fn get(&self, r: usize, c: usize) -> u32 {
        assert!(r < self.rows && c < self.cols, "index out of range");
        match &self.data {
            Storage::Dense(d) => d[r * self.cols + c],
            Storage::Sparse(s) => match s[r].binary_search_by_key(&(c as u32), |e| e.0) {
                Ok(k) => s[r][k].1,
                Err(_) => 0,
            },
        }
    }

    pub fn set(&mut self, r: usize, c: usize, v: u32) {
        assert!(r < self.rows && c < self.cols, "index out of range");
        let v = v % self.fp.p;
        match &mut self.data {
            Storage::Dense(d) => d[r * self.cols + c] = v,
            Storage::Sparse(s) => {
                let row = &mut s[r];
                match row.binary_search_by_key(&(c as u32), |e| e.0) {
                    Ok(k) if v == 0 => {
                        row.remove(k);
                    }
                    Ok(k) => row[k].1 = v,
                    Err(k) if v != 0 => row.insert(k, (c as u32, v)),
                    Err(_) => {}
                }
            }
        }
    }

    pub fn add_to(&mut self, r: usize, c: usize, v: u32) {
        let cur = self.get(r, c);
        let fp = self.fp;
        self.set(r, c, fp.add(cur, v % fp.p));
    }

    /// Nonzero entries of row `r` in increasing column order.
    pub fn row_entries(&self, r: usize) -> Vec<(usize, u32)> {
        match &self.data {
            Storage::Dense(d) => d[r * self.cols..(r + 1) * self.cols]
                .iter()
                .enumerate()
                .filter(|(_, &v)| v != 0)
                .map(|(c, &v)| (c, v))
                .collect(),
            Storage::Sparse(s) => s[r].iter().map(|&(c, v)| (c as usize, v)).collect(),
        }
    }

    pub fn row_dense(&self, r: usize) -> Vec<u32> {
        match &self.data {
            Storage::Dense(d) => d[r * self.cols..(r + 1) * self.cols].to_vec(),
            Storage::Sparse(s) => {
                let mut out = vec![0; self.cols];
                for &(c, v) in &s[r] {
                    out[c as usize] = v;
                }
                out
            }
        }
    }

    pub fn column(&self, c: usize) -> Vec<u32> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn nnz(&self) -> usize {
        match &self.data {
            Storage::Dense(d) => d.iter().filter(|&&v| v != 0).count(),
            Storage::Sparse(s) => s.iter().map(|r| r.len()).sum(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.nnz() == 0
    }

    pub fn transpose(&self) -> FpMatrix {
        let mut t = FpMatrix::zeros_in(self.fp, self.cols, self.rows);
        for r in 0..self.rows {
            for (c, v) in self.row_entries(r) {
                t.set(c, r, v);
            }
        }
        t
    }

    pub fn mul(&self, other: &FpMatrix) -> Result<FpMatrix, LinalgError> {
        if self.cols != other.rows || self.fp != other.fp {
            return Err(LinalgError::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let fp = self.fp;
        let mut out = FpMatrix::zeros_in(fp, self.rows, other.cols);
        let other_rows: Vec<Vec<(usize, u32)>> =
            (0..other.rows).map(|k| other.row_entries(k)).collect();
        let mut acc = vec![0u64; other.cols];
        let bound = (u64::MAX / 2) / ((fp.p as u64) * (fp.p as u64)).max(1);
        for r in 0..self.rows {
            acc.iter_mut().for_each(|a| *a = 0);
            let mut pending = 0u64;
            for (k, a) in self.row_entries(r) {
                for &(c, b) in &other_rows[k] {
                    acc[c] += a as u64 * b as u64;
                }
                pending += 1;
                if pending >= bound {
                    acc.iter_mut().for_each(|x| *x %= fp.p as u64);
                    pending = 0;
                }
            }
            for (c, &x) in acc.iter().enumerate() {
                let v = (x % fp.p as u64) as u32;
                if v != 0 {
                    out.set(r, c, v);
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[u32]) -> Result<Vec<u32>, LinalgError> {
        if v.len() != self.cols {
            return Err(LinalgError::DimensionMismatch(format!(
                "vector of length {} against {} columns",
                v.len(),
                self.cols
            )));
        }
        let fp = self.fp;
        Ok((0..self.rows)
            .map(|r| {
                let s: u64 = self
                    .row_entries(r)
                    .into_iter()
                    .map(|(c, a)| (a as u64 * v[c] as u64) % fp.p as u64)
                    .sum();
                (s % fp.p as u64) as u32
            })
            .collect())
    }

    pub fn select_rows(&self, idx: &[usize]) -> FpMatrix {
        let mut out = FpMatrix::zeros_in(self.fp, idx.len(), self.cols);
        for (i, &r) in idx.iter().enumerate() {
            for (c, v) in self.row_entries(r) {
                out.set(i, c, v);
            }
        }
        out
    }

    pub fn select_cols(&self, idx: &[usize]) -> FpMatrix {
        let mut map = vec![NONE; self.cols];
        for (j, &c) in idx.iter().enumerate() {
            map[c] = j as u32;
        }
        let mut out = FpMatrix::zeros_in(self.fp, self.rows, idx.len());
        for r in 0..self.rows {
            for (c, v) in self.row_entries(r) {
                if map[c] != NONE {
                    out.set(r, map[c] as usize, v);
                }
            }
        }
        out
    }

    /// `[self | other]`.
    pub fn hstack(&self, other: &FpMatrix) -> Result<FpMatrix, LinalgError> {
        if self.rows != other.rows {
            return Err(LinalgError::DimensionMismatch("hstack row counts".into()));
        }
        let mut out = FpMatrix::zeros_in(self.fp, self.rows, self.cols + other.cols);
        for r in 0..self.rows {
            for (c, v) in self.row_entries(r) {
                out.set(r, c, v);
            }
            for (c, v) in other.row_entries(r) {
                out.set(r, self.cols + c, v);
            }
        }
        Ok(out)
    }

    pub fn vstack(&self, other: &FpMatrix) -> Result<FpMatrix, LinalgError> {
        if self.cols != other.cols {
            return Err(LinalgError::DimensionMismatch("vstack column counts".into()));
        }
        let mut out = FpMatrix::zeros_in(self.fp, self.rows + other.rows, self.cols);
        for r in 0..self.rows {
            for (c, v) in self.row_entries(r) {
                out.set(r, c, v);
            }
        }
        for r in 0..other.rows {
            for (c, v) in other.row_entries(r) {
                out.set(self.rows + r, c, v);
            }
        }
        Ok(out)
    }

    fn echelon(&self) -> Echelon {
        let mut e = Echelon::new(self.fp, self.cols);
        for r in 0..self.rows {
            e.insert_sparse(&self.row_entries(r));
        }
        e
    }

    /// Rank and the (strictly increasing) pivot columns of the reduced row echelon form.
    pub fn rank_profile(&self) -> (usize, Vec<usize>) {
        let e = self.echelon();
        let piv = e.pivot_columns();
        (piv.len(), piv)
    }

    pub fn rank(&self) -> usize {
        self.echelon().rank()
    }

    /// A basis of the null space `{v : self·v = 0}`, one vector per free column,
    /// ordered by free column.
    pub fn kernel_basis(&self) -> Vec<Vec<u32>> {
        self.echelon().kernel()
    }

    /// Some `x` with `self·x = rhs`, or `None` when the system is inconsistent.
    pub fn solve(&self, rhs: &[u32]) -> Result<Option<Vec<u32>>, LinalgError> {
        if rhs.len() != self.rows {
            return Err(LinalgError::DimensionMismatch(format!(
                "rhs of length {} for {} rows",
                rhs.len(),
                self.rows
            )));
        }
        let fp = self.fp;
        let mut e = Echelon::new(fp, self.cols + 1);
        for r in 0..self.rows {
            let mut row = self.row_entries(r);
            if rhs[r] % fp.p != 0 {
                row.push((self.cols, rhs[r] % fp.p));
            }
            e.insert_sparse(&row);
        }
        let mut x = vec![0; self.cols];
        for (k, &c) in e.pivots.iter().enumerate() {
            if c == self.cols {
                return Ok(None);
            }
            x[c] = e.rows[k]
                .iter()
                .find(|&&(cc, _)| cc as usize == self.cols)
                .map_or(0, |&(_, v)| v);
        }
        Ok(Some(x))
    }
}

/// Incremental reduced row echelon form with sparse pivot rows.
///
/// Every stored row is fully reduced against every other pivot, so a vector
/// reduces in one pass over the pivot columns.
#[derive(Clone, Debug)]
pub struct Echelon {
    fp: Fp,
    cols: usize,
    rows: Vec<Vec<(u32, u32)>>,
    pivots: Vec<usize>,
    pivot_row: Vec<u32>,
}

impl Echelon {
    pub fn new(fp: Fp, cols: usize) -> Self {
        Echelon { fp, cols, rows: Vec::new(), pivots: Vec::new(), pivot_row: vec![NONE; cols] }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn pivot_columns(&self) -> Vec<usize> {
        let mut p = self.pivots.clone();
        p.sort_unstable();
        p
    }

    /// Reduces `v` in place against the current rows.
    fn reduce_dense(&self, v: &mut [u32]) {
        let fp = self.fp;
        for (k, &c) in self.pivots.iter().enumerate() {
            let a = v[c];
            if a != 0 {
                let f = fp.neg(a);
                for &(cc, x) in &self.rows[k] {
                    let cc = cc as usize;
                    v[cc] = fp.add(v[cc], fp.mul(f, x));
                }
            }
        }
    }

    /// The remainder of `v` modulo the row space.
    pub fn reduce(&self, v: &[u32]) -> Vec<u32> {
        let mut w = v.to_vec();
        self.reduce_dense(&mut w);
        w
    }

    pub fn contains(&self, v: &[u32]) -> bool {
        self.reduce(v).iter().all(|&x| x == 0)
    }

    /// Inserts a dense vector; returns whether the rank grew.
    pub fn insert(&mut self, v: &[u32]) -> bool {
        debug_assert_eq!(v.len(), self.cols);
        let mut w = v.to_vec();
        self.reduce_dense(&mut w);
        self.absorb(w)
    }

    pub fn insert_sparse(&mut self, v: &[(usize, u32)]) -> bool {
        let mut w = vec![0u32; self.cols];
        for &(c, x) in v {
            w[c] = self.fp.add(w[c], x % self.fp.p);
        }
        self.reduce_dense(&mut w);
        self.absorb(w)
    }

    fn absorb(&mut self, mut w: Vec<u32>) -> bool {
        let fp = self.fp;
        let Some(lead) = w.iter().position(|&x| x != 0) else {
            return false;
        };
        let s = fp.inv(w[lead]);
        for x in w.iter_mut() {
            *x = fp.mul(*x, s);
        }
        let new_row: Vec<(u32, u32)> = w
            .iter()
            .enumerate()
            .filter(|(_, &x)| x != 0)
            .map(|(c, &x)| (c as u32, x))
            .collect();
        // clear the new pivot column from the existing rows
        for row in self.rows.iter_mut() {
            if let Ok(pos) = row.binary_search_by_key(&(lead as u32), |e| e.0) {
                let f = fp.neg(row[pos].1);
                *row = axpy_sparse(fp, row, f, &new_row);
            }
        }
        self.pivot_row[lead] = self.rows.len() as u32;
        self.rows.push(new_row);
        self.pivots.push(lead);
        true
    }

    /// Rows of the reduced echelon form, sorted by pivot column.
    pub fn basis(&self) -> Vec<Vec<u32>> {
        let mut order: Vec<usize> = (0..self.rows.len()).collect();
        order.sort_by_key(|&k| self.pivots[k]);
        order
            .into_iter()
            .map(|k| {
                let mut v = vec![0; self.cols];
                for &(c, x) in &self.rows[k] {
                    v[c as usize] = x;
                }
                v
            })
            .collect()
    }

    pub fn kernel(&self) -> Vec<Vec<u32>> {
        let fp = self.fp;
        let mut out = Vec::new();
        for f in 0..self.cols {
            if self.pivot_row[f] != NONE {
                continue;
            }
            let mut v = vec![0u32; self.cols];
            v[f] = 1;
            for (k, &c) in self.pivots.iter().enumerate() {
                if let Ok(pos) = self.rows[k].binary_search_by_key(&(f as u32), |e| e.0) {
                    v[c] = fp.neg(self.rows[k][pos].1);
                }
            }
            out.push(v);
        }
        out
    }
}

fn axpy_sparse(fp: Fp, a: &[(u32, u32)], f: u32, b: &[(u32, u32)]) -> Vec<(u32, u32)> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let ca = a.get(i).map_or(u32::MAX, |e| e.0);
        let cb = b.get(j).map_or(u32::MAX, |e| e.0);
        if ca < cb {
            out.push(a[i]);
            i += 1;
        } else if cb < ca {
            let v = fp.mul(f, b[j].1);
            if v != 0 {
                out.push((cb, v));
            }
            j += 1;
        } else {
            let v = fp.add(a[i].1, fp.mul(f, b[j].1));
            if v != 0 {
                out.push((ca, v));
            }
            i += 1;
            j += 1;
        }
    }
    out
}

/// Coordinates with respect to a fixed list of linearly independent vectors.
///
/// Picks rows where the basis is invertible once; each lookup is then a
/// small matrix–vector product followed by a membership check.
#[derive(Clone, Debug)]
pub struct Coordinates {
    fp: Fp,
    len: usize,
    basis: Vec<Vec<u32>>,
    rows: Vec<usize>,
    inverse: Vec<Vec<u32>>,
}

impl Coordinates {
    /// Returns `None` when the vectors are dependent.
    pub fn new(fp: Fp, len: usize, basis: Vec<Vec<u32>>) -> Option<Self> {
        let k = basis.len();
        let mut e = Echelon::new(fp, len);
        for b in &basis {
            if !e.insert(b) {
                return None;
            }
        }
        let rows = e.pivot_columns();
        // square block B[rows, :], invert via echelon on [B | I]
        let mut aug = Echelon::new(fp, 2 * k);
        for (i, &r) in rows.iter().enumerate() {
            let mut v = vec![0u32; 2 * k];
            for (j, b) in basis.iter().enumerate() {
                v[j] = b[r];
            }
            v[k + i] = 1;
            aug.insert(&v);
        }
        let inverse = aug.basis().into_iter().map(|v| v[k..].to_vec()).collect();
        Some(Coordinates { fp, len, basis, rows, inverse })
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Vec<u32>] {
        &self.basis
    }

    /// `x` with `Σ x_j basis_j = v`, or `None` when `v` is outside the span.
    pub fn coords(&self, v: &[u32]) -> Option<Vec<u32>> {
        debug_assert_eq!(v.len(), self.len);
        let fp = self.fp;
        let k = self.basis.len();
        let x: Vec<u32> = (0..k)
            .map(|j| {
                let mut s = 0u32;
                for (i, &r) in self.rows.iter().enumerate() {
                    s = fp.add(s, fp.mul(self.inverse[j][i], v[r]));
                }
                s
            })
            .collect();
        let mut check = vec![0u32; self.len];
        for (j, b) in self.basis.iter().enumerate() {
            if x[j] != 0 {
                for (c, &bv) in b.iter().enumerate() {
                    if bv != 0 {
                        check[c] = fp.add(check[c], fp.mul(x[j], bv));
                    }
                }
            }
        }
        (check == v).then_some(x)
    }
}

/// Subquotient `Z / B` with `B ⊆ Z`, given by spanning sets. The complement
/// representatives are chosen greedily in the order of `z_span`.
#[derive(Clone, Debug)]
pub struct Subquotient {
    reps: Vec<Vec<u32>>,
    coords: Coordinates,
    b_dim: usize,
}

impl Subquotient {
    pub fn new(fp: Fp, len: usize, z_span: &[Vec<u32>], b_span: &[Vec<u32>]) -> Self {
        let mut e = Echelon::new(fp, len);
        let mut b_basis = Vec::new();
        for b in b_span {
            if e.insert(b) {
                b_basis.push(b.clone());
            }
        }
        let mut reps = Vec::new();
        for z in z_span {
            if e.insert(z) {
                reps.push(z.clone());
            }
        }
        let b_dim = b_basis.len();
        let mut all = b_basis;
        all.extend(reps.iter().cloned());
        let coords = Coordinates::new(fp, len, all).expect("independent by construction");
        Subquotient { reps, coords, b_dim }
    }

    pub fn dim(&self) -> usize {
        self.reps.len()
    }

    pub fn reps(&self) -> &[Vec<u32>] {
        &self.reps
    }

    /// Class of `v` in the quotient; `None` if `v ∉ Z`.
    pub fn class_of(&self, v: &[u32]) -> Option<Vec<u32>> {
        self.coords.coords(v).map(|x| x[self.b_dim..].to_vec())
    }
}

/// Row-sparse matrix used for large differentials. Each row is sorted by column.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparseMat {
    fp: Fp,
    cols: usize,
    rows: Vec<Vec<(u32, u32)>>,
}

impl SparseMat {
    pub fn new(fp: Fp, rows: usize, cols: usize) -> Self {
        SparseMat { fp, cols, rows: vec![Vec::new(); rows] }
    }

    /// Sums duplicates and drops zeros.
    pub fn from_triplets(fp: Fp, rows: usize, cols: usize, entries: impl IntoIterator<Item = (usize, usize, u32)>) -> Self {
        let mut data: Vec<Vec<(u32, u32)>> = vec![Vec::new(); rows];
        for (r, c, v) in entries {
            debug_assert!(c < cols);
            if v != 0 {
                data[r].push((c as u32, v));
            }
        }
        for row in data.iter_mut() {
            row.sort_unstable_by_key(|e| e.0);
            let mut out: Vec<(u32, u32)> = Vec::with_capacity(row.len());
            for &(c, v) in row.iter() {
                match out.last_mut() {
                    Some(last) if last.0 == c => last.1 = fp.add(last.1, v),
                    _ => out.push((c, v)),
                }
            }
            out.retain(|e| e.1 != 0);
            *row = out;
        }
        SparseMat { fp, cols, rows: data }
    }

    pub fn field(&self) -> Fp {
        self.fp
    }
    pub fn rows(&self) -> usize {
        self.rows.len()
    }
    pub fn cols(&self) -> usize {
        self.cols
    }
    pub fn row(&self, r: usize) -> &[(u32, u32)] {
        &self.rows[r]
    }
    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }
    pub fn is_zero(&self) -> bool {
        self.rows.iter().all(Vec::is_empty)
    }

    pub fn apply(&self, v: &[u32]) -> Vec<u32> {
        debug_assert_eq!(v.len(), self.cols);
        let fp = self.fp;
        self.rows
            .iter()
            .map(|row| row.iter().fold(0, |s, &(c, x)| fp.add(s, fp.mul(x, v[c as usize]))))
            .collect()
    }

    pub fn transpose(&self) -> SparseMat {
        let mut t: Vec<Vec<(u32, u32)>> = vec![Vec::new(); self.cols];
        for (r, row) in self.rows.iter().enumerate() {
            for &(c, x) in row {
                t[c as usize].push((r as u32, x));
            }
        }
        SparseMat { fp: self.fp, cols: self.rows.len(), rows: t }
    }

    /// `self · other`.
    pub fn compose(&self, other: &SparseMat) -> SparseMat {
        assert_eq!(self.cols, other.rows.len());
        let fp = self.fp;
        let mut acc = vec![0u32; other.cols];
        let mut touched: Vec<u32> = Vec::new();
        let rows = self
            .rows
            .iter()
            .map(|row| {
                for &(k, x) in row {
                    for &(c, y) in &other.rows[k as usize] {
                        if acc[c as usize] == 0 {
                            touched.push(c);
                        }
                        acc[c as usize] = fp.add(acc[c as usize], fp.mul(x, y));
                    }
                }
                touched.sort_unstable();
                touched.dedup();
                let out: Vec<(u32, u32)> =
                    touched.iter().filter(|&&c| acc[c as usize] != 0).map(|&c| (c, acc[c as usize])).collect();
                for &c in &touched {
                    acc[c as usize] = 0;
                }
                touched.clear();
                out
            })
            .collect();
        SparseMat { fp, cols: other.cols, rows }
    }

    /// Null space of the submatrix on the rows with `keep_row` and the given
    /// columns, returned in the coordinates of `cols` (local indexing).
    pub fn kernel_of_block(&self, keep_row: impl Fn(usize) -> bool, cols: &[usize]) -> Vec<Vec<u32>> {
        let mut local = vec![NONE; self.cols];
        for (k, &c) in cols.iter().enumerate() {
            local[c] = k as u32;
        }
        let mut e = Echelon::new(self.fp, cols.len());
        let mut buf: Vec<(usize, u32)> = Vec::new();
        for (r, row) in self.rows.iter().enumerate() {
            if e.rank() == cols.len() {
                break;
            }
            if !keep_row(r) {
                continue;
            }
            buf.clear();
            buf.extend(row.iter().filter(|e| local[e.0 as usize] != NONE).map(|&(c, x)| (local[c as usize] as usize, x)));
            if !buf.is_empty() {
                e.insert_sparse(&buf);
            }
        }
        e.kernel()
    }

    pub fn to_dense(&self) -> FpMatrix {
        FpMatrix::from_triplets(
            self.fp,
            self.rows.len(),
            self.cols,
            self.rows.iter().enumerate().flat_map(|(r, row)| row.iter().map(move |&(c, x)| (r, c as usize, x))),
        )
    }

    pub fn from_dense(m: &FpMatrix) -> SparseMat {
        SparseMat {
            fp: m.field(),
            cols: m.cols(),
            rows: (0..m.rows()).map(|r| m.row_entries(r).into_iter().map(|(c, x)| (c as u32, x)).collect()).collect(),
        }
    }

    pub fn rank(&self) -> usize {
        let mut e = Echelon::new(self.fp, self.cols);
        for row in &self.rows {
            if e.rank() == self.cols {
                break;
            }
            let v: Vec<(usize, u32)> = row.iter().map(|&(c, x)| (c as usize, x)).collect();
            e.insert_sparse(&v);
        }
        e.rank()
    }
}
