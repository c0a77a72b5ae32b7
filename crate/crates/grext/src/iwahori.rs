//! Congruence subgroups of `GL_n`, their Iwahori factorization, the
//! conjugates `K ∩ s N^{p^m} s⁻¹` indexed by dominant cocharacters, and the
//! certificates assembled from them.
//!
//! The graded side of every group is a polynomial algebra on `E ⊗ gr H`
//! (after the abelianizing perturbation), split as `Ū × T × U`. Restrictions
//! on Ext between such algebras are computed through Koszul resolutions.

use std::collections::{HashMap, HashSet};

use num_rational::Rational64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::algebra_core::{amplitude, group_algebra, AlgebraError, FilteredModule, GradedAlgebra, PolynomialAlgebra};
use crate::lazard::{
    graded_group, ldu, linear_substitution, pi_inclusion, pm_power_subgroup, Family, InstanceConfig, LazardError, Mat,
    PValuedGroup, Part, Zpr,
};
use crate::linalg::{Fp, FpMatrix};
use crate::minres::{exterior_power_transpose, graded_ext, koszul_resolution, koszul_subsets, restriction_via_lifting};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IwahoriError {
    #[error(transparent)]
    Lazard(#[from] LazardError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error("resolution: {0}")]
    Resolution(String),
}

fn res_err(e: impl ToString) -> IwahoriError {
    IwahoriError::Resolution(e.to_string())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CongruenceInstance {
    pub n: usize,
    pub p: u64,
    pub r: u32,
    pub precision: u32,
    /// `N = K_r` with the entry valuation.
    pub group: PValuedGroup,
}

impl CongruenceInstance {
    pub fn new(n: usize, p: u64, r: u32, precision: u32) -> Result<Self, IwahoriError> {
        Ok(CongruenceInstance { n, p, r, precision, group: PValuedGroup::congruence(n, p, r, precision)? })
    }

    pub fn from_config(cfg: &InstanceConfig) -> Result<Self, IwahoriError> {
        if cfg.family != Family::GlN {
            return Err(LazardError::Config("`family` must be \"gl_n\" here".into()).into());
        }
        let group = PValuedGroup::from_config(cfg)?;
        Ok(CongruenceInstance { n: cfg.n, p: cfg.p, r: cfg.r, precision: cfg.precision, group })
    }

    pub fn ring(&self) -> Zpr {
        self.group.ring()
    }

    pub fn dim_u(&self) -> usize {
        self.n * (self.n - 1) / 2
    }
}

/// `g = ū·t·u` inside `group`, each factor in the matching part.
pub fn factorize_in(g: &Mat, group: &PValuedGroup) -> Result<(Mat, Mat, Mat), IwahoriError> {
    if !group.contains(g) {
        return Err(LazardError::NotInSubgroup.into());
    }
    let (l, t, u) = ldu(group.ring(), g).expect("pivots of a congruence element are units");
    debug_assert!(group.part(Part::Lower).contains(&l) && group.part(Part::Torus).contains(&t));
    Ok((l, t, u))
}

pub fn iwahori_factorize(g: &Mat, c: &CongruenceInstance) -> Result<(Mat, Mat, Mat), IwahoriError> {
    factorize_in(g, &c.group)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FactorizationReport {
    pub exhaustive: bool,
    pub checked: usize,
    pub failures: usize,
    /// `(N∩Ū) × (N∩T) × (N∩U) → N` is a bijection (exhaustive cases only).
    pub bijective: Option<bool>,
    pub pass: bool,
}

/// Round trip `ū·t·u = g` with factors in the parts: on all of `group` if it
/// has at most `limit` elements, else on `samples` seeded samples.
pub fn factorization_check(group: &PValuedGroup, samples: usize, seed: u64, limit: usize) -> FactorizationReport {
    let ring = group.ring();
    let (lo, to, up) = (group.part(Part::Lower), group.part(Part::Torus), group.part(Part::Upper));
    let one = |g: &Mat| -> bool {
        match factorize_in(g, group) {
            Ok((l, t, u)) => {
                lo.contains(&l) && to.contains(&t) && up.contains(&u) && ring.mat_mul(&ring.mat_mul(&l, &t), &u) == *g
            }
            Err(_) => false,
        }
    };
    let (elems, exhaustive) = match group.enumerate(limit) {
        Some(all) => (all, true),
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            ((0..samples).map(|_| group.sample(&mut rng)).collect(), false)
        }
    };
    let failures = elems.iter().filter(|g| !one(g)).count();
    let bijective = if exhaustive {
        let parts: Option<Vec<Vec<Mat>>> = [&lo, &to, &up].iter().map(|p| p.enumerate(limit)).collect();
        parts.map(|ps| {
            let mut seen = HashSet::new();
            for l in &ps[0] {
                for t in &ps[1] {
                    for u in &ps[2] {
                        let g = ring.mat_mul(&ring.mat_mul(l, t), u);
                        if !group.contains(&g) || !seen.insert(g) {
                            return false;
                        }
                    }
                }
            }
            seen.len() == elems.len()
        })
    } else {
        None
    };
    FactorizationReport {
        exhaustive,
        checked: elems.len(),
        failures,
        pass: failures == 0 && bijective != Some(false),
        bijective,
    }
}

/// Monotone tuples `a_1 >= … >= a_n >= 0` with `a_1 <= bound`, in
/// lexicographic order; with `modulo_center`, only those with `a_n = 0`.
pub fn dominant_cocharacters(n: usize, bound: u32, modulo_center: bool) -> Vec<Vec<u32>> {
    fn rec(n: usize, max: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for a in 0..=max {
            cur.push(a);
            rec(n, a, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, bound, &mut vec![], &mut out);
    if modulo_center {
        out.retain(|a| a.last() == Some(&0));
    }
    out.sort();
    out
}

/// `s g s⁻¹` (or `s⁻¹ g s` with `inverse`) for `s = diag(p^{a_i})`; only
/// defined when no entry needs a division by `p`.
pub fn conjugate_by(ring: Zpr, g: &Mat, a: &[u32], inverse: bool) -> Result<Mat, IwahoriError> {
    let mut out = g.clone();
    for i in 0..g.n {
        for j in 0..g.n {
            let mut e = a[i] as i64 - a[j] as i64;
            if inverse {
                e = -e;
            }
            let x = g.get(i, j);
            if e < 0 && x != 0 {
                return Err(LazardError::PrecisionExhausted("conjugation would divide by p".into()).into());
            }
            out.set(i, j, ring.mul(x, ring.p_pow(e.max(0) as u32)));
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SConjReport {
    pub s: Vec<u32>,
    pub checked: usize,
    /// `s(N∩U)s⁻¹ ⊆ N∩U`.
    pub cond_ii: bool,
    /// `s(N∩Ū)s⁻¹ ⊇ N∩Ū`, checked as `s⁻¹(N∩Ū)s ⊆ N∩Ū`.
    pub cond_iii: bool,
    pub witnesses: Vec<Mat>,
}

pub fn s_conjugation_check(c: &CongruenceInstance, s: &[u32], samples: usize, seed: u64) -> Result<SConjReport, IwahoriError> {
    if s.len() != c.n || s.windows(2).any(|w| w[0] < w[1]) {
        return Err(LazardError::Config("cocharacter must be a dominant tuple of length n".into()).into());
    }
    if s.iter().any(|&a| a >= c.precision) {
        return Err(LazardError::PrecisionExhausted(format!("R = {} leaves no headroom for {s:?}", c.precision)).into());
    }
    let ring = c.ring();
    let (up, lo) = (c.group.part(Part::Upper), c.group.part(Part::Lower));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gens = |h: &PValuedGroup| -> Vec<Mat> { h.basis_elements().into_iter().map(|b| b.1).collect() };
    let mut us = gens(&up);
    us.extend((0..samples).map(|_| up.sample(&mut rng)));
    let mut ls = gens(&lo);
    ls.extend((0..samples).map(|_| lo.sample(&mut rng)));
    let mut witnesses = Vec::new();
    let mut cond_ii = true;
    for u in &us {
        if !up.contains(&conjugate_by(ring, u, s, false)?) {
            cond_ii = false;
            witnesses.push(u.clone());
        }
    }
    let mut cond_iii = true;
    for l in &ls {
        if !lo.contains(&conjugate_by(ring, l, s, true)?) {
            cond_iii = false;
            witnesses.push(l.clone());
        }
    }
    Ok(SConjReport { s: s.to_vec(), checked: us.len() + ls.len(), cond_ii, cond_iii, witnesses })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OmegaMinReport {
    pub tested: usize,
    pub skipped_precision: usize,
    pub violations: Vec<Mat>,
    pub pass: bool,
}

/// `ω(g) = min{ω(ū), ω(t), ω(u)}` on seeded samples (identity factors drop out).
pub fn omega_min_formula_check(group: &PValuedGroup, samples: usize, seed: u64) -> OmegaMinReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tested = 0;
    let mut skipped = 0;
    let mut violations = Vec::new();
    for _ in 0..samples {
        let g = group.sample(&mut rng);
        let Ok(w) = group.omega(&g) else { continue };
        let (l, t, u) = factorize_in(&g, group).expect("sampled from the group");
        let mut parts = Vec::new();
        let mut inexact = !w.exact;
        for f in [&l, &t, &u] {
            match group.omega(f) {
                Ok(v) => {
                    inexact |= !v.exact;
                    parts.push(v.value);
                }
                Err(LazardError::Identity) => {}
                Err(_) => inexact = true,
            }
        }
        if inexact {
            skipped += 1;
            continue;
        }
        tested += 1;
        if parts.iter().min() != Some(&w.value) {
            violations.push(g);
        }
    }
    OmegaMinReport { tested, skipped_precision: skipped, pass: violations.is_empty(), violations }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SConjugateGroup {
    pub group: PValuedGroup,
    /// Every sampled element factors into `(K ∩ sN^{p^m}s⁻¹ ∩ Ū) × (N∩T)^{p^m} × (sNs⁻¹∩U)^{p^m}`,
    /// and products of sampled factors land back in the group.
    pub factors_ok: bool,
}

/// `K ∩ s N^{p^m} s⁻¹` with `ω_s(sns⁻¹) = ω(n)`.
pub fn s_conjugate_group(c: &CongruenceInstance, s: &[u32], m: u32) -> Result<SConjugateGroup, IwahoriError> {
    let group = pm_power_subgroup(&c.group, m)?.conjugate(s)?;
    let lower = pm_power_subgroup(&c.group.part(Part::Lower), m)?.conjugate(s)?;
    let torus = pm_power_subgroup(&c.group.part(Part::Torus), m)?;
    let upper = pm_power_subgroup(&c.group.conjugate(s)?.part(Part::Upper), m)?;
    let ring = c.ring();
    let mut rng = ChaCha8Rng::seed_from_u64(m as u64 ^ 0x5eed);
    let mut ok = true;
    for _ in 0..40 {
        let g = group.sample(&mut rng);
        let (l, t, u) = factorize_in(&g, &group)?;
        ok &= lower.contains(&l) && torus.contains(&t) && upper.contains(&u);
        let (l2, t2, u2) = (lower.sample(&mut rng), torus.sample(&mut rng), upper.sample(&mut rng));
        ok &= group.contains(&ring.mat_mul(&ring.mat_mul(&l2, &t2), &u2));
    }
    Ok(SConjugateGroup { group, factors_ok: ok })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GriwaReport {
    pub s: Vec<u32>,
    pub total_rank: usize,
    /// `gr(N∩Ū)`, `gr(N∩T)`, `gr(N∩U)`.
    pub ranks: [usize; 3],
    pub degrees_match: bool,
    pub lower_degrees: Vec<String>,
    pub upper_degrees: Vec<String>,
    pub pass: bool,
}

/// `gr N = gr(N∩Ū) ⊕ gr(N∩T) ⊕ gr(N∩U)` as graded `F_p[π]`-modules: ranks
/// add up and degree multisets concatenate, for `K ∩ sNs⁻¹`.
pub fn griwa_check(c: &CongruenceInstance, s: &[u32]) -> Result<GriwaReport, IwahoriError> {
    let h = c.group.conjugate(s)?;
    let total = graded_group(&h)?;
    let parts: Vec<_> =
        [Part::Lower, Part::Torus, Part::Upper].iter().map(|&p| graded_group(&h.part(p))).collect::<Result<_, _>>()?;
    let mut concat: Vec<Rational64> = parts.iter().flat_map(|g| g.degrees.clone()).collect();
    let mut all = total.degrees.clone();
    concat.sort();
    all.sort();
    let ranks = [parts[0].rank, parts[1].rank, parts[2].rank];
    let degrees_match = concat == all;
    let show = |g: &crate::lazard::GradedGroupModule| g.degrees.iter().map(ToString::to_string).collect();
    Ok(GriwaReport {
        s: s.to_vec(),
        total_rank: total.rank,
        pass: degrees_match && ranks.iter().sum::<usize>() == total.rank && total.rank == c.n * c.n,
        ranks,
        degrees_match,
        lower_degrees: show(&parts[0]),
        upper_degrees: show(&parts[2]),
    })
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// `rank Λ^q(L)` for `q = 0..=n`.
fn wedge_ranks(p: u64, l: &FpMatrix, n: usize) -> Vec<usize> {
    let fp = Fp::new(p).expect("prime");
    let (rows, cols) = (l.rows(), l.cols());
    (0..=n)
        .map(|q| {
            if q == 0 {
                return 1;
            }
            if q > rows.min(cols) {
                return 0;
            }
            let src = koszul_subsets(&PolynomialAlgebra::standard(p, cols).expect("prime"), q);
            let tgt = koszul_subsets(&PolynomialAlgebra::standard(p, rows).expect("prime"), q);
            exterior_power_transpose(fp, l, &src, &tgt).rank()
        })
        .collect()
}

/// The graded Ū-factor algebra: the polynomial algebra on `dim U` degree-1
/// variables, truncated as in its Koszul resolution. Modules for
/// [`achk_certificate`] live over this algebra.
pub fn ubar_factor_algebra(c: &CongruenceInstance) -> GradedAlgebra {
    let poly = PolynomialAlgebra::standard(c.p, c.dim_u()).expect("prime");
    koszul_resolution(&poly, 0).algebra().clone()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct KunnethTotals {
    pub total: Vec<usize>,
    pub convolution: Vec<usize>,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AchkVerdict {
    Certified,
    /// `n <= dim U`: the bound does not apply.
    Inapplicable,
    HypothesisFailed { ingredient: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AchkReport {
    pub s: Vec<u32>,
    pub n: usize,
    pub dim_u: usize,
    /// Ranks of `gr` of the `Ū`, `T`, `U` factors of `K ∩ sNs⁻¹`.
    pub factor_ranks: [usize; 3],
    /// `dim Ext^q_{S(Ū)}(k, M)`, `q = 0..=n`.
    pub a_factor_ext: Vec<usize>,
    pub a_factor_vanishes: bool,
    /// `E ⊗ gr` of the inclusions of the `T` and `U` factors of `K ∩ sN^p s⁻¹`.
    pub pi_zero: [bool; 2],
    /// Restriction ranks on `Ext^q(k, k)`, `q = 1..=n`, by chain-map lifting.
    pub torus_restriction_ranks: Vec<usize>,
    pub upper_restriction_ranks: Vec<usize>,
    pub kunneth: KunnethTotals,
    /// `Σ_{q1+q2+q3=n} dim Ext^{q1}_a · rank_b(q2) · rank_c(q3)`.
    pub restriction_rank_bound: usize,
    pub verdict: AchkVerdict,
}

/// Restriction ranks on `Ext^q(k,k)` of a polynomial algebra along `L`, by lifting.
fn lifted_ranks(p: u64, l: &FpMatrix, n: usize) -> Result<Vec<usize>, IwahoriError> {
    let poly = PolynomialAlgebra::standard(p, l.rows())?;
    let res = koszul_resolution(&poly, n);
    let f = linear_substitution(res.algebra(), res.algebra(), l)?;
    (1..=n).map(|q| restriction_via_lifting(&f, &res, &res, q).map(|m| m.rank()).map_err(res_err)).collect()
}

fn part_inclusion(sub: &PValuedGroup, sup: &PValuedGroup, part: Part) -> Result<FpMatrix, IwahoriError> {
    let elems: Vec<Mat> = sub.part(part).basis_elements().into_iter().map(|b| b.1).collect();
    Ok(pi_inclusion(&elems, &sup.part(part))?.matrix)
}

/// Vanishing of the graded restriction
/// `Ext^n_{gr(K∩sNs⁻¹)}(k, M ⊠ k ⊠ k) → Ext^n_{gr(K∩sN^p s⁻¹)}` for `n > dim U`,
/// from Künneth over `Ū × T × U`, zero restriction on the `T`, `U` factors,
/// and the cohomological dimension of the `Ū` factor.
pub fn achk_certificate(c: &CongruenceInstance, s: &[u32], m: &FilteredModule, n: usize) -> Result<AchkReport, IwahoriError> {
    let p = c.p;
    let a = c.dim_u();
    let h = s_conjugate_group(c, s, 0)?.group;
    let hp = s_conjugate_group(c, s, 1)?.group;
    let factor_ranks = [h.part(Part::Lower).dim(), h.part(Part::Torus).dim(), h.part(Part::Upper).dim()];
    let l_t = part_inclusion(&hp, &h, Part::Torus)?;
    let l_u = part_inclusion(&hp, &h, Part::Upper)?;
    let pi_zero = [l_t.is_zero(), l_u.is_zero()];
    let torus_restriction_ranks = lifted_ranks(p, &l_t, n)?;
    let upper_restriction_ranks = lifted_ranks(p, &l_u, n)?;

    // the Ū factor with coefficients in M
    let poly_a = PolynomialAlgebra::standard(p, a)?;
    let res_a = koszul_resolution(&poly_a, n + 1);
    let ext_a = graded_ext(&res_a, m).map_err(res_err)?;
    let a_factor_ext: Vec<usize> = ext_a.totals.iter().take(n + 1).copied().collect();
    let a_factor_vanishes = (a + 1..=n).all(|q| a_factor_ext.get(q).copied().unwrap_or(0) == 0);

    // Künneth on dimensions: S(Ū ⊕ T ⊕ U) with M pulled back along the projection
    let (b, cc) = (factor_ranks[1], factor_ranks[2]);
    let poly_d = poly_a.tensor(&PolynomialAlgebra::standard(p, b + cc)?);
    let res_d = koszul_resolution(&poly_d, n + 1);
    let proj = FpMatrix::from_triplets(Fp::new(p).expect("prime"), a, a + b + cc, (0..a).map(|i| (i, i, 1)));
    let f = linear_substitution(res_d.algebra(), res_a.algebra(), &proj)?;
    let m_total = m.restrict(res_d.algebra().filtered(), &f)?;
    let total: Vec<usize> = graded_ext(&res_d, &m_total).map_err(res_err)?.totals.into_iter().take(n + 1).collect();
    let trivial_ext = |k: usize| -> Vec<usize> { (0..=n).map(|q| binomial(k, q)).collect() };
    let (eb, ec) = (trivial_ext(b), trivial_ext(cc));
    let convolution: Vec<usize> = (0..=n)
        .map(|q| (0..=q).map(|i| (0..=q - i).map(|j| a_factor_ext[i] * eb[j] * ec[q - i - j]).sum::<usize>()).sum())
        .collect();
    let kunneth = KunnethTotals { pass: total == convolution, total, convolution };

    let rank_of = |v: &[usize], q: usize| if q == 0 { 1 } else { v[q - 1] };
    let mut bound = 0;
    for q1 in 0..=n {
        for q2 in 0..=n - q1 {
            let q3 = n - q1 - q2;
            bound += a_factor_ext[q1] * rank_of(&torus_restriction_ranks, q2) * rank_of(&upper_restriction_ranks, q3);
        }
    }
    let failed = |s: &str| AchkVerdict::HypothesisFailed { ingredient: s.into() };
    let verdict = if n <= a {
        AchkVerdict::Inapplicable
    } else if factor_ranks[0] != a {
        failed("lower-rank")
    } else if !pi_zero.iter().all(|&z| z) || torus_restriction_ranks.iter().chain(&upper_restriction_ranks).any(|&r| r != 0) {
        failed("lemma-ext")
    } else if !a_factor_vanishes {
        failed("cohomological-dimension")
    } else if !kunneth.pass {
        failed("kunneth")
    } else if bound != 0 {
        failed("restriction")
    } else {
        AchkVerdict::Certified
    };
    Ok(AchkReport {
        s: s.to_vec(),
        n,
        dim_u: a,
        factor_ranks,
        a_factor_ext,
        a_factor_vanishes,
        pi_zero,
        torus_restriction_ranks,
        upper_restriction_ranks,
        kunneth,
        restriction_rank_bound: bound,
        verdict,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DimuLevel {
    pub k: usize,
    /// Bound for the single link `H_k ⊂ H_{k−1}` on `Ext^n`.
    pub link_rank_bound: usize,
    /// Bound for the composed restriction `H_k ⊂ H_0` on `Ext^n`.
    pub composed_rank_bound: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DimuReport {
    pub s: Vec<u32>,
    pub n: usize,
    pub amplitude: i64,
    pub m_star: usize,
    pub achk: AchkVerdict,
    pub levels: Vec<DimuLevel>,
    /// Composed `E ⊗ gr` maps equal the products of the link maps.
    pub composition_consistent: bool,
    pub pass: bool,
}

/// Along `H_k = K ∩ s N^{p^k} s⁻¹`, `k = 0..=m*` with `m* = amp(M) + n + 1`:
/// the restriction on graded `Ext^n` factors as `Λ^{q1}(L_Ū)^T ⊗ id_M ⊗
/// Λ^{q2}(L_T)^T ⊗ Λ^{q3}(L_U)^T` over the Künneth summands; its rank is
/// bounded by the products of the factor ranks.
pub fn dimu_pipeline(c: &CongruenceInstance, s: &[u32], m: &FilteredModule, n: usize) -> Result<DimuReport, IwahoriError> {
    let amp = amplitude(m);
    let m_star = (amp + n as i64 + 1).max(1) as usize;
    let achk = achk_certificate(c, s, m, n)?;
    let a = c.dim_u();
    let poly_a = PolynomialAlgebra::standard(c.p, a)?;
    let ext_a: Vec<usize> = graded_ext(&koszul_resolution(&poly_a, n + 1), m).map_err(res_err)?.totals;
    let groups: Vec<PValuedGroup> =
        (0..=m_star).map(|k| s_conjugate_group(c, s, k as u32).map(|g| g.group)).collect::<Result<_, _>>()?;
    let parts = [Part::Lower, Part::Torus, Part::Upper];
    let bound_for = |ls: &[FpMatrix]| -> usize {
        let wa = wedge_ranks(c.p, &ls[0], n);
        let wb = wedge_ranks(c.p, &ls[1], n);
        let wc = wedge_ranks(c.p, &ls[2], n);
        let mut total = 0;
        for q1 in 0..=n {
            let ra = ext_a[q1].min(wa[q1] * m.dim());
            for q2 in 0..=n - q1 {
                total += ra * wb[q2] * wc[n - q1 - q2];
            }
        }
        total
    };
    let fp = Fp::new(c.p).expect("prime");
    let mut levels = Vec::new();
    let mut consistent = true;
    let mut composed_prev: Option<Vec<FpMatrix>> = None;
    for k in 1..=m_star {
        let link: Vec<FpMatrix> =
            parts.iter().map(|&pt| part_inclusion(&groups[k], &groups[k - 1], pt)).collect::<Result<_, _>>()?;
        let composed: Vec<FpMatrix> =
            parts.iter().map(|&pt| part_inclusion(&groups[k], &groups[0], pt)).collect::<Result<_, _>>()?;
        if let Some(prev) = &composed_prev {
            for i in 0..3 {
                consistent &= prev[i].mul(&link[i]).expect("shapes") == composed[i];
            }
        }
        let _ = fp;
        levels.push(DimuLevel { k, link_rank_bound: bound_for(&link), composed_rank_bound: bound_for(&composed) });
        composed_prev = Some(composed);
    }
    let at_star = levels.last().map_or(0, |l| l.composed_rank_bound);
    let pass = consistent && (achk.verdict != AchkVerdict::Certified || at_star == 0);
    Ok(DimuReport { s: s.to_vec(), n, amplitude: amp, m_star, achk: achk.verdict, levels, composition_consistent: consistent, pass })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct UnifEntry {
    pub s: Vec<u32>,
    /// Order of the image of `K ∩ sNs⁻¹ ∩ Ū` in `GL_n(F_p)`.
    pub image_order: usize,
    pub amplitude: i64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct UnifReport {
    pub entries: Vec<UnifEntry>,
    pub uniform: bool,
}

/// The standard representation `F_p^n` (trivial on `N`), filtered by
/// `w(e_i) = i`, as a module over `F_p[image of K ∩ sNs⁻¹ ∩ Ū]` for each `s`;
/// its amplitude is the same for every `s`.
pub fn amplitude_uniformity(c: &CongruenceInstance, cochars: &[Vec<u32>]) -> Result<UnifReport, IwahoriError> {
    let p = c.p;
    let n = c.n;
    let mut entries = Vec::new();
    for s in cochars {
        // positions where K ∩ sNs⁻¹ allows unit entries below the diagonal
        let free: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| (0..i).map(move |j| (i, j)))
            .filter(|&(i, j)| c.r as i64 + s[i] as i64 - s[j] as i64 <= 0)
            .collect();
        let count = (p as usize).pow(free.len() as u32);
        let elems: Vec<Vec<u64>> = (0..count)
            .map(|mut x| {
                let mut g = vec![0u64; n * n];
                for i in 0..n {
                    g[i * n + i] = 1;
                }
                for &(i, j) in &free {
                    g[i * n + j] = (x % p as usize) as u64;
                    x /= p as usize;
                }
                g
            })
            .collect();
        let index: HashMap<&Vec<u64>, usize> = elems.iter().enumerate().map(|(k, g)| (g, k)).collect();
        let mulp = |a: &[u64], b: &[u64]| -> Vec<u64> {
            (0..n * n).map(|ij| (0..n).map(|k| a[ij / n * n + k] * b[k * n + ij % n]).sum::<u64>() % p).collect()
        };
        let table: Vec<Vec<usize>> =
            elems.iter().map(|a| elems.iter().map(|b| index[&mulp(a, b)]).collect()).collect();
        let ga = group_algebra(p, &table)?;
        let fp = ga.algebra.field();
        let mut act = Vec::with_capacity(ga.algebra.dim() * n);
        for coeffs in &ga.basis {
            let mut mat = vec![0u32; n * n];
            for (g, &cg) in coeffs.iter().enumerate() {
                if cg == 0 {
                    continue;
                }
                for (k, &x) in elems[g].iter().enumerate() {
                    mat[k] = fp.add(mat[k], fp.mul(cg, x as u32));
                }
            }
            for j in 0..n {
                act.push((0..n).filter(|&i| mat[i * n + j] != 0).map(|i| (i as u32, mat[i * n + j])).collect());
            }
        }
        let names = (1..=n).map(|i| format!("e{i}")).collect();
        let module = FilteredModule::new(&ga.algebra, names, act, (0..n as i64).collect())?;
        entries.push(UnifEntry { s: s.clone(), image_order: count, amplitude: amplitude(&module) });
    }
    let uniform = entries.windows(2).all(|w| w[0].amplitude == w[1].amplitude);
    Ok(UnifReport { entries, uniform })
}
