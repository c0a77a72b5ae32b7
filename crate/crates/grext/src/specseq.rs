//! The spectral sequence of a filtered cochain complex, and the vanishing
//! certificates built on it.
//!
//! Pages use the convention
//! `Z_r^{i}(n) = Fil^i K^n ∩ d⁻¹(Fil^{i+r} K^{n+1})` and
//! `E_r^{i,n−i} = Z_r^i(n) / (Z_{r−1}^{i+1}(n) + d Z_{r−1}^{i−r+1}(n−1))`,
//! which gives `E_0 = gr K` without special cases. Everything is computed on
//! adapted coordinates, so `Fil^i` is a set of basis vectors.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::algebra_core::{amplitude, associated_graded, AlgebraMorphism, FilteredAlgebra, FilteredModule, GroupAlgebra};
pub use crate::bar_complex::FilteredCochainComplex;
use crate::bar_complex::{
    cochain_restriction, ext_via_bar, graded_restriction_map, restriction_on_ext, BarError, BarExt, HomComplex,
};
use crate::linalg::{Coordinates, Echelon, FpMatrix, Subquotient};
use crate::minres::{is_koszul, minimal_resolution, KoszulVerdict};

pub fn build_filtered_hom_complex(
    a: &FilteredAlgebra,
    m: &FilteredModule,
    n_max: usize,
    cap: usize,
) -> Result<FilteredCochainComplex, BarError> {
    Ok(HomComplex::new(a, m, n_max, cap)?.complex)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PageEntry {
    pub i: i64,
    pub j: i64,
    pub dim: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PageDifferential {
    pub from: (i64, i64),
    pub to: (i64, i64),
    pub rank: usize,
    #[serde(skip)]
    pub matrix: FpMatrix,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SpectralPage {
    pub r: i64,
    pub entries: Vec<PageEntry>,
    pub differentials: Vec<PageDifferential>,
}

impl SpectralPage {
    pub fn dim(&self, i: i64, j: i64) -> usize {
        self.entries.iter().find(|e| e.i == i && e.j == j).map_or(0, |e| e.dim)
    }
    /// `Σ_i dim E^{i, n−i}`.
    pub fn total(&self, n: i64) -> usize {
        self.entries.iter().filter(|e| e.i + e.j == n).map(|e| e.dim).sum()
    }
}

fn weight_span(c: &FilteredCochainComplex, n: usize) -> Option<(i64, i64)> {
    let w = c.weights(n);
    Some((*w.iter().min()?, *w.iter().max()?))
}

/// `E_r^{i, n−i}` with chosen representatives, for `n < top`.
pub fn e_term(c: &FilteredCochainComplex, n: usize, i: i64, r: i64) -> Subquotient {
    let z = c.z_r(n, i, r);
    let mut b = c.z_r(n, i + 1, r - 1);
    if n >= 1 {
        let dn = c.diff(n - 1);
        for x in c.z_r(n - 1, i - r + 1, r - 1) {
            b.push(dn.apply(&x));
        }
    }
    Subquotient::new(c.field(), c.dim(n), &z, &b)
}

/// The `r`-th page on degrees `n < top`, with `d_r` where its target is
/// also computable (`n + 1 < top`).
pub fn page(c: &FilteredCochainComplex, r: i64) -> SpectralPage {
    page_impl(c, r, true)
}

/// Dimensions only.
pub fn page_dims(c: &FilteredCochainComplex, r: i64) -> SpectralPage {
    page_impl(c, r, false)
}

fn page_impl(c: &FilteredCochainComplex, r: i64, with_d: bool) -> SpectralPage {
    assert!(r >= 0, "pages start at r = 0");
    let mut terms: BTreeMap<(usize, i64), Subquotient> = BTreeMap::new();
    for n in 0..c.top() {
        if let Some((lo, hi)) = weight_span(c, n) {
            for i in lo..=hi {
                let e = e_term(c, n, i, r);
                if e.dim() > 0 {
                    terms.insert((n, i), e);
                }
            }
        }
    }
    let entries = terms.iter().map(|(&(n, i), e)| PageEntry { i, j: n as i64 - i, dim: e.dim() }).collect();
    let mut differentials = Vec::new();
    if with_d {
        for (&(n, i), e) in &terms {
            let Some(tgt) = terms.get(&(n + 1, i + r)) else { continue };
            if n + 1 >= c.top() {
                continue;
            }
            let dn = c.diff(n);
            let cols: Vec<Vec<u32>> = e
                .reps()
                .iter()
                .map(|z| tgt.class_of(&dn.apply(z)).expect("d maps Z_r into Z_r"))
                .collect();
            let matrix = FpMatrix::from_columns(c.field(), tgt.dim(), &cols);
            differentials.push(PageDifferential {
                from: (i, n as i64 - i),
                to: (i + r, n as i64 + 1 - i - r),
                rank: matrix.rank(),
                matrix,
            });
        }
    }
    SpectralPage { r, entries, differentials }
}

/// A page index past which nothing changes.
pub fn stable_r(c: &FilteredCochainComplex) -> i64 {
    c.weight_range().map_or(1, |(lo, hi)| hi - lo + 2)
}

pub fn e_infinity(c: &FilteredCochainComplex) -> SpectralPage {
    page_dims(c, stable_r(c))
}

/// Checks `dim E_{r+1} = dim ker d_r − dim im d_r` at every position where
/// both differentials are available; returns the failing positions.
pub fn check_page_transition(c: &FilteredCochainComplex, r: i64) -> Vec<(i64, i64)> {
    let cur = page(c, r);
    let next = page_dims(c, r + 1);
    let mut bad = Vec::new();
    for n in 0..c.top().saturating_sub(1) {
        let Some((lo, hi)) = weight_span(c, n) else { continue };
        for i in lo..=hi {
            let j = n as i64 - i;
            let out = cur.differentials.iter().find(|d| d.from == (i, j)).map_or(0, |d| d.rank);
            let inn = cur.differentials.iter().find(|d| d.to == (i, j)).map_or(0, |d| d.rank);
            if next.dim(i, j) + out + inn != cur.dim(i, j) {
                bad.push((i, j));
            }
        }
    }
    bad
}

/// `dim Fil^i H^n` with `Fil^i H^n = im(H^n(Fil^i K) → H^n(K))`, for `n < top`.
pub fn fil_ext_dims(c: &FilteredCochainComplex, n: usize) -> BTreeMap<i64, usize> {
    let mut out = BTreeMap::new();
    let Some((lo, hi)) = weight_span(c, n) else { return out };
    let b = c.coboundaries(n);
    let top_r = c.weight_range().map_or(1, |(l, h)| h - l + 2);
    for i in lo..=hi + 1 {
        let mut e = Echelon::new(c.field(), c.dim(n));
        for x in &b {
            e.insert(x);
        }
        let base = e.rank();
        for z in c.z_r(n, i, top_r + (hi - i).abs() + 1) {
            e.insert(&z);
        }
        out.insert(i, e.rank() - base);
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BookkeepingRow {
    pub n: usize,
    pub e_infinity: usize,
    pub ext: usize,
    /// `dim gr^i Ext^n = dim E_∞^{i, n−i}` for every `i`.
    pub graded_pieces_match: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BookkeepingReport {
    pub rows: Vec<BookkeepingRow>,
    pub stable_r: i64,
    pub stabilized: bool,
    pub pass: bool,
}

/// `Σ_i dim E_∞^{i, n−i} = dim Ext^n_A(k, M)` for `n < n_max`, with Ext from
/// an independent cocycle/coboundary computation.
pub fn e_infinity_bookkeeping(
    a: &FilteredAlgebra,
    m: &FilteredModule,
    n_max: usize,
    cap: usize,
) -> Result<BookkeepingReport, BarError> {
    let ext = ext_via_bar(a, m, n_max, cap)?;
    let c = &ext.hom.complex;
    let r = stable_r(c);
    let inf = page_dims(c, r);
    let stabilized = inf == SpectralPage { r, ..page_dims(c, r + 1) };
    let mut rows = Vec::new();
    for n in 0..n_max {
        let fil = fil_ext_dims(c, n);
        let graded_pieces_match = fil.iter().all(|(&i, &d)| {
            let next = fil.get(&(i + 1)).copied().unwrap_or(0);
            d - next == inf.dim(i, n as i64 - i)
        });
        rows.push(BookkeepingRow { n, e_infinity: inf.total(n as i64), ext: ext.groups[n].dim(), graded_pieces_match });
    }
    let pass = stabilized && rows.iter().all(|x| x.e_infinity == x.ext && x.graded_pieces_match);
    Ok(BookkeepingReport { rows, stable_r: r, stabilized, pass })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BandReport {
    pub nu: i64,
    pub mu: i64,
    /// Nonzero `E_1^{i,j}` outside `ν ≤ 2i + j < μ`.
    pub violations: Vec<PageEntry>,
    pub pass: bool,
}

/// The Koszul band on `E_1` of the Hom complex of `(A, M)`.
pub fn koszul_band_check(c: &FilteredCochainComplex, m: &FilteredModule) -> BandReport {
    let (nu, mu) = (m.nu(), m.mu());
    let e1 = page_dims(c, 1);
    let violations: Vec<PageEntry> =
        e1.entries.into_iter().filter(|e| !(nu <= 2 * e.i + e.j && 2 * e.i + e.j < mu)).collect();
    BandReport { nu, mu, pass: violations.is_empty(), violations }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShiftVerdict {
    Verified,
    HypothesisFailed,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ShiftLevel {
    pub i: i64,
    pub fil_dim: usize,
    pub shifted: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FilShiftReport {
    pub n: usize,
    pub graded_restriction_rank: usize,
    pub levels: Vec<ShiftLevel>,
    pub verdict: ShiftVerdict,
}

/// Whether cocycles in `Fil^i` restrict into `Fil^{i+1} K′ + im d′`, per `i`.
fn shift_levels(f: &AlgebraMorphism, ext_a: &BarExt, ext_s: &BarExt, n: usize) -> Vec<ShiftLevel> {
    let (ca, cs) = (&ext_a.hom.complex, &ext_s.hom.complex);
    let r = cochain_restriction(f, ext_a.hom.dim_m(), n, ca.field());
    let fil = fil_ext_dims(ca, n);
    let b = cs.coboundaries(n);
    let big = stable_r(ca) + stable_r(cs);
    let mut out = Vec::new();
    for (&i, &fil_dim) in &fil {
        let mut e = Echelon::new(cs.field(), cs.dim(n));
        for x in &b {
            e.insert(x);
        }
        for (k, &w) in cs.weights(n).iter().enumerate() {
            if w > i {
                e.insert(&crate::algebra_core::unit_vector(cs.dim(n), k));
            }
        }
        let shifted = ca.z_r(n, i, big).iter().all(|z| e.contains(&r.apply(z)));
        out.push(ShiftLevel { i, fil_dim, shifted });
    }
    out
}

/// If the graded restriction on `Ext^n` vanishes, restriction raises the
/// Ext filtration by one: checked on cocycle representatives.
pub fn graded_shift_check(
    f: &AlgebraMorphism,
    src: &FilteredAlgebra,
    a: &FilteredAlgebra,
    m: &FilteredModule,
    n: usize,
    cap: usize,
) -> Result<FilShiftReport, BarError> {
    let graded_restriction_rank = graded_restriction_map(f, src, a, m, n, cap)?.rank();
    if graded_restriction_rank != 0 {
        return Ok(FilShiftReport { n, graded_restriction_rank, levels: vec![], verdict: ShiftVerdict::HypothesisFailed });
    }
    let ms = m.restrict(src, f)?;
    let ext_a = ext_via_bar(a, m, n + 1, cap)?;
    let ext_s = ext_via_bar(src, &ms, n + 1, cap)?;
    let levels = shift_levels(f, &ext_a, &ext_s, n);
    let verdict = if levels.iter().all(|l| l.shifted) { ShiftVerdict::Verified } else { ShiftVerdict::Failed };
    Ok(FilShiftReport { n, graded_restriction_rank, levels, verdict })
}

/// `A_0 ⟵ A_1 ⟵ … ⟵ A_len`; `links[k]` maps `A_{k+1} → A_k`.
#[derive(Clone, Debug)]
pub struct AlgebraChain {
    pub algebras: Vec<FilteredAlgebra>,
    pub links: Vec<AlgebraMorphism>,
}

impl AlgebraChain {
    pub fn new(algebras: Vec<FilteredAlgebra>, links: Vec<AlgebraMorphism>) -> Result<Self, BarError> {
        if algebras.len() != links.len() + 1 {
            return Err(BarError::NotAComplex("a chain needs one more algebra than links".into()));
        }
        for (k, f) in links.iter().enumerate() {
            if f.src_dim() != algebras[k + 1].dim() || f.tgt_dim() != algebras[k].dim() {
                return Err(BarError::NotAComplex(format!("link {} has the wrong shape", k + 1)));
            }
        }
        Ok(AlgebraChain { algebras, links })
    }

    /// `F_p[G] ⊃ F_p[H_1] ⊃ …` for a descending list of subgroups (element
    /// indices), each with the filtration induced from `F_p[G]`.
    pub fn from_subgroups(g: &GroupAlgebra, subgroups: &[Vec<usize>]) -> Result<Self, BarError> {
        let fp = g.algebra.field();
        let mut algebras = vec![g.algebra.clone()];
        let mut links = Vec::new();
        let mut prev: Option<AlgebraMorphism> = None;
        for (k, h) in subgroups.iter().enumerate() {
            let (alg, f) = g.subgroup(h)?;
            let link = match &prev {
                None => f.clone(),
                Some(up) => {
                    let c = Coordinates::new(fp, g.order(), up.images().to_vec()).expect("independent images");
                    let images: Option<Vec<_>> = f.images().iter().map(|v| c.coords(v)).collect();
                    let images = images.ok_or_else(|| BarError::NotAComplex(format!("subgroup {} is not inside the previous one", k + 1)))?;
                    AlgebraMorphism::new(&alg, &algebras[k], images)?
                }
            };
            links.push(link);
            algebras.push(alg);
            prev = Some(f);
        }
        AlgebraChain::new(algebras, links)
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }
    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    /// `A_k → A_0`.
    pub fn composed(&self, k: usize) -> AlgebraMorphism {
        let fp = self.algebras[0].field();
        let mut f = AlgebraMorphism::identity(&self.algebras[k]);
        for j in (0..k).rev() {
            f = f.then(&self.links[j], fp);
        }
        f
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LinkVerdict {
    pub link: usize,
    pub graded_restriction_rank: usize,
    pub hypothesis_holds: bool,
    pub fil_shift: Option<ShiftVerdict>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CertVerdict {
    Certified,
    HypothesisFailed { link: usize },
    ChainTooShort { required: usize, have: usize },
    /// Hypotheses hold but the composed restriction is nonzero at `m*`.
    Refuted,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// `gr A` Koszul: vanishing at the uniform depth `m*`.
    UniformBound,
    /// Not Koszul (or not decidable): only eventual vanishing is claimed.
    EventuallyZero,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct KozCertificate {
    pub n: usize,
    pub amplitude: i64,
    pub m_star: usize,
    pub chain_length: usize,
    pub koszul: KoszulVerdict,
    pub regime: Regime,
    pub links: Vec<LinkVerdict>,
    /// Rank of `Ext^n_{A_0} → Ext^n_{A_k}` for `k = 1..`; computed only when
    /// the hypotheses hold along the way.
    pub composed_ranks: Vec<usize>,
    pub restriction_rank: Option<usize>,
    pub eventually_zero_at: Option<usize>,
    pub verdict: CertVerdict,
    /// The uniform claim is asserted (and then checked).
    pub claim_asserted: bool,
}

/// Checks the vanishing of `Ext^n_A(k, M) → Ext^n_{A^{(m*)}}(k, M)` at
/// `m* = amp(M) + n + 1`, link hypotheses first.
pub fn koz_certificate(chain: &AlgebraChain, m: &FilteredModule, n: usize, cap: usize) -> Result<KozCertificate, BarError> {
    let amp = amplitude(m);
    let m_star = (amp + n as i64 + 1).max(0) as usize;
    let a0 = &chain.algebras[0];
    let gr0 = associated_graded(a0);
    let koszul = if gr0.is_connected() {
        let d_max = (n as i64 + 3) * gr0.top_degree().max(1) + 1;
        minimal_resolution(&gr0, n + 2, d_max).map(|r| is_koszul(&r)).unwrap_or(KoszulVerdict::Inconclusive { n: 0 })
    } else {
        KoszulVerdict::Inconclusive { n: 0 }
    };
    let regime = if koszul == KoszulVerdict::Koszul { Regime::UniformBound } else { Regime::EventuallyZero };
    // modules along the chain
    let mut mods = vec![m.clone()];
    for k in 0..chain.len() {
        let next = mods[k].restrict(&chain.algebras[k + 1], &chain.links[k])?;
        mods.push(next);
    }
    let mut links = Vec::new();
    for k in 0..chain.len() {
        let (tgt, src) = (&chain.algebras[k], &chain.algebras[k + 1]);
        let f = &chain.links[k];
        let rank = graded_restriction_map(f, src, tgt, &mods[k], n, cap)?.rank();
        let fil_shift = if rank == 0 {
            let ext_t = ext_via_bar(tgt, &mods[k], n + 1, cap)?;
            let ext_s = ext_via_bar(src, &mods[k + 1], n + 1, cap)?;
            let levels = shift_levels(f, &ext_t, &ext_s, n);
            Some(if levels.iter().all(|l| l.shifted) { ShiftVerdict::Verified } else { ShiftVerdict::Failed })
        } else {
            None
        };
        links.push(LinkVerdict { link: k + 1, graded_restriction_rank: rank, hypothesis_holds: rank == 0, fil_shift });
    }
    let first_fail = links.iter().take(m_star.max(1)).find(|l| !l.hypothesis_holds).map(|l| l.link);
    let mut composed_ranks = Vec::new();
    if first_fail.is_none() {
        let ext0 = ext_via_bar(a0, m, n + 1, cap)?;
        for k in 1..=chain.len().min(m_star) {
            let f = chain.composed(k);
            let ext_k = ext_via_bar(&chain.algebras[k], &mods[k], n + 1, cap)?;
            composed_ranks.push(restriction_on_ext(&f, &ext0, &ext_k, n).rank());
        }
    }
    let restriction_rank = if chain.len() >= m_star && first_fail.is_none() { composed_ranks.get(m_star.wrapping_sub(1)).copied() } else { None };
    let eventually_zero_at = composed_ranks.iter().position(|&r| r == 0).map(|k| k + 1);
    let verdict = if let Some(link) = first_fail {
        CertVerdict::HypothesisFailed { link }
    } else if chain.len() < m_star {
        CertVerdict::ChainTooShort { required: m_star, have: chain.len() }
    } else if restriction_rank == Some(0) {
        CertVerdict::Certified
    } else {
        CertVerdict::Refuted
    };
    let claim_asserted = verdict == CertVerdict::Certified && regime == Regime::UniformBound;
    Ok(KozCertificate {
        n,
        amplitude: amp,
        m_star,
        chain_length: chain.len(),
        koszul,
        regime,
        links,
        composed_ranks,
        restriction_rank,
        eventually_zero_at,
        verdict,
        claim_asserted,
    })
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::algebra_core::{cyclic_group_table, group_algebra, monomial_algebra, random, GroupAlgebra};
    use crate::bar_complex::DEFAULT_CAP;
    use crate::linalg::{Fp, SparseMat};
    use crate::minres::graded_ext;

    fn cyclic(n: usize) -> GroupAlgebra {
        group_algebra(3, &cyclic_group_table(n)).unwrap()
    }

    #[test]
    fn zero_differential_degenerates_at_e1() {
        let fp = Fp::new(3).unwrap();
        let weights = vec![vec![0, 1], vec![0, 2, 2], vec![1]];
        let diffs = vec![SparseMat::new(fp, 3, 2), SparseMat::new(fp, 1, 3)];
        let c = FilteredCochainComplex::new(fp, weights, diffs).unwrap();
        let e0 = page_dims(&c, 0);
        assert_eq!(page_dims(&c, 1).entries, e0.entries);
        assert_eq!(e_infinity(&c).entries, e0.entries);
        assert_eq!(e0.dim(1, -1), 1);
        assert_eq!(e0.dim(2, -1), 2);
    }

    #[test]
    fn trivial_filtration_gives_cohomology_at_e1() {
        let a = monomial_algebra(3, &[1], 3, |m| m[0] < 3).unwrap().into_filtered();
        let flat = a.with_weights(vec![0; 3]).unwrap();
        let k = FilteredModule::trivial(&flat, 0);
        let c = build_filtered_hom_complex(&flat, &k, 3, DEFAULT_CAP).unwrap();
        let e1 = page_dims(&c, 1);
        assert_eq!((0..3).map(|n| e1.total(n)).collect::<Vec<_>>(), vec![1, 1, 1]);
        assert_eq!(page_dims(&c, 2).entries, e1.entries);
    }

    #[test]
    fn trivial_algebra_filtration() {
        let a = monomial_algebra(5, &[1], 1, |m| m[0] < 1).unwrap().into_filtered();
        let c = build_filtered_hom_complex(&a, &FilteredModule::trivial(&a, 0), 2, DEFAULT_CAP).unwrap();
        assert_eq!(c.fil_dim(0, 1), 0);
    }

    #[test]
    fn cyclic_bookkeeping() {
        for n in [3, 9] {
            let g = cyclic(n).algebra;
            let k = FilteredModule::trivial(&g, 0);
            let rep = e_infinity_bookkeeping(&g, &k, 3, DEFAULT_CAP).unwrap();
            assert!(rep.pass, "{rep:?}");
            assert_eq!(rep.rows.iter().map(|r| r.ext).collect::<Vec<_>>(), vec![1, 1, 1]);
        }
    }

    #[test]
    fn e1_matches_graded_ext_for_z9() {
        let g = cyclic(9).algebra;
        let k = FilteredModule::trivial(&g, 0);
        let c = build_filtered_hom_complex(&g, &k, 3, DEFAULT_CAP).unwrap();
        let e1 = page_dims(&c, 1);
        let gr = associated_graded(&g);
        let r = minimal_resolution(&gr, 3, 60).unwrap();
        let ext = graded_ext(&r, &FilteredModule::trivial(gr.filtered(), 0)).unwrap();
        for e in &e1.entries {
            assert_eq!(ext.dim(e.i, e.j), e.dim);
        }
        assert_eq!((0..3).map(|n| e1.total(n)).collect::<Vec<_>>(), ext.totals[..3].to_vec());
    }

    #[test]
    fn page_transitions_are_cohomology() {
        let g = cyclic(9).algebra;
        let k = FilteredModule::trivial(&g, 0);
        let c = build_filtered_hom_complex(&g, &k, 3, DEFAULT_CAP).unwrap();
        for r in 0..=stable_r(&c) {
            assert!(check_page_transition(&c, r).is_empty(), "r={r}");
        }
    }

    #[test]
    fn shift_examples() {
        let g = cyclic(9);
        let a = &g.algebra;
        let k = FilteredModule::trivial(a, 0);
        let id = AlgebraMorphism::identity(a);
        assert_eq!(graded_shift_check(&id, a, a, &k, 1, DEFAULT_CAP).unwrap().verdict, ShiftVerdict::HypothesisFailed);
        let (sub, f) = g.subgroup(&[0, 3, 6]).unwrap();
        let rep = graded_shift_check(&f, &sub, a, &k, 1, DEFAULT_CAP).unwrap();
        assert_eq!(rep.verdict, ShiftVerdict::Verified);
        // target Ext vanishes: trivial subgroup, n = 1
        let (triv, t) = g.subgroup(&[0]).unwrap();
        assert_eq!(graded_shift_check(&t, &triv, a, &k, 1, DEFAULT_CAP).unwrap().verdict, ShiftVerdict::Verified);
    }

    fn chain27(extend: bool) -> AlgebraChain {
        let g = cyclic(27);
        let elems = |step: usize| (0..27).step_by(step).collect::<Vec<_>>();
        let mut subs = vec![elems(3), elems(9)];
        if extend {
            subs.push(vec![0]);
        }
        AlgebraChain::from_subgroups(&g, &subs).unwrap()
    }

    fn chain27_by_hand(extend: bool) -> AlgebraChain {
        let g = cyclic(27);
        let a = g.algebra.clone();
        let elems = |step: usize| (0..27).step_by(step).collect::<Vec<_>>();
        let (a1, f1) = g.subgroup(&elems(3)).unwrap();
        let (a2, f2) = g.subgroup(&elems(9)).unwrap();
        let fp = a.field();
        let down = |f_small: &AlgebraMorphism, f_big: &AlgebraMorphism, small: &FilteredAlgebra, big: &FilteredAlgebra| {
            let c = crate::linalg::Coordinates::new(fp, 27, f_big.images().to_vec()).unwrap();
            AlgebraMorphism::new(small, big, f_small.images().iter().map(|v| c.coords(v).unwrap()).collect()).unwrap()
        };
        let l2 = down(&f2, &f1, &a2, &a1);
        let mut algebras = vec![a, a1.clone(), a2.clone()];
        let mut links = vec![f1.clone(), l2];
        if extend {
            let (a3, f3) = g.subgroup(&[0]).unwrap();
            links.push(down(&f3, &f2, &a3, &a2));
            algebras.push(a3);
        }
        AlgebraChain::new(algebras, links).unwrap()
    }

    #[test]
    fn subgroup_chain_matches_hand_built_links() {
        let (a, b) = (chain27(true), chain27_by_hand(true));
        assert_eq!(a.len(), 3);
        for k in 0..a.len() {
            assert_eq!(a.links[k].images(), b.links[k].images());
            assert_eq!(a.algebras[k + 1].to_description(), b.algebras[k + 1].to_description());
        }
        let g = cyclic(27);
        assert!(AlgebraChain::from_subgroups(&g, &[(0..27).step_by(9).collect(), (0..27).step_by(3).collect()]).is_err());
    }

    #[test]
    fn koz_certificate_on_cyclic_chain() {
        let chain = chain27(true);
        let k = FilteredModule::trivial(&chain.algebras[0], 0);
        let c1 = koz_certificate(&chain, &k, 1, DEFAULT_CAP).unwrap();
        assert_eq!(c1.m_star, 3);
        assert!(c1.links.iter().all(|l| l.hypothesis_holds && l.fil_shift == Some(ShiftVerdict::Verified)));
        assert_eq!(c1.verdict, CertVerdict::Certified);
        assert_eq!(c1.restriction_rank, Some(0));
        assert_eq!(c1.eventually_zero_at, Some(1));
        assert!(matches!(c1.koszul, KoszulVerdict::NotKoszul { .. }));
        assert_eq!(c1.regime, Regime::EventuallyZero);

        let c2 = koz_certificate(&chain, &k, 2, DEFAULT_CAP).unwrap();
        assert_eq!(c2.verdict, CertVerdict::HypothesisFailed { link: 1 });
        assert!(c2.links[0].graded_restriction_rank > 0);

        let short = chain27(false);
        let c3 = koz_certificate(&short, &k, 1, DEFAULT_CAP).unwrap();
        assert_eq!(c3.verdict, CertVerdict::ChainTooShort { required: 3, have: 2 });
    }

    #[test]
    fn band_holds_for_koszul_dual_numbers() {
        let a = monomial_algebra(3, &[1], 2, |m| m[0] < 2).unwrap().into_filtered();
        for m in [FilteredModule::trivial(&a, 0), FilteredModule::regular(&a).shifted(2)] {
            let c = build_filtered_hom_complex(&a, &m, 4, DEFAULT_CAP).unwrap();
            assert!(koszul_band_check(&c, &m).pass);
        }
        // not Koszul: x^3 = 0 puts Ext^2 outside the band
        let b = monomial_algebra(3, &[1], 3, |m| m[0] < 3).unwrap().into_filtered();
        let k = FilteredModule::trivial(&b, 0);
        let c = build_filtered_hom_complex(&b, &k, 3, DEFAULT_CAP).unwrap();
        assert!(!koszul_band_check(&c, &k).pass);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn bookkeeping_on_random_filtered_algebras(seed in 0u64..5000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random::filtered_algebra(&mut rng, 3, 5);
            let m = random::filtered_module(&mut rng, &a, 3);
            let rep = e_infinity_bookkeeping(&a, &m, 3, DEFAULT_CAP).unwrap();
            prop_assert!(rep.pass, "{:?}", rep);
            let c = build_filtered_hom_complex(&a, &m, 3, DEFAULT_CAP).unwrap();
            for r in 0..3 {
                prop_assert!(check_page_transition(&c, r).is_empty());
            }
        }
    }
}
