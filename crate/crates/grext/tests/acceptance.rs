//! One PASS/FAIL line per acceptance criterion, with wall time against its
//! budget; the lines bypass output capture.

use std::io::Write;
use std::path::PathBuf;
use std::process::Command as Proc;
use std::time::{Duration, Instant};

use grext::algebra_core::random::{filtered_algebra, filtered_module};
use grext::algebra_core::{
    abelian_group_table, associated_graded, exterior_algebra, group_algebra, truncated_polynomial, FilteredAlgebra,
    FilteredModule, GradedAlgebra, PolynomialAlgebra,
};
use grext::bar_complex::{ext_via_bar, gr_bar_compare, gr_hom_compare, graded_restriction_map, DEFAULT_CAP};
use grext::iwahori::{
    achk_certificate, amplitude_uniformity, dimu_pipeline, dominant_cocharacters, factorization_check, griwa_check,
    omega_min_formula_check, s_conjugation_check, ubar_factor_algebra, AchkVerdict, CongruenceInstance,
};
use grext::lazard::{lemma_ext_check, pi_cokernel_restriction, InstanceConfig, PValuedGroup};
use grext::minres::{graded_ext, is_koszul, koszul_dual_check, minimal_resolution, KoszulVerdict};
use grext::specseq::{
    build_filtered_hom_complex, e_infinity_bookkeeping, koszul_band_check, koz_certificate, AlgebraChain, CertVerdict,
    ShiftVerdict,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn criterion(k: usize, budget: Option<u64>, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = f();
    let took = start.elapsed();
    let in_time = budget.is_none_or(|b| took <= Duration::from_secs(b));
    let pass = out.pass && in_time;
    let limit = budget.map_or(String::new(), |b| format!(" / {b}s"));
    // written past the harness's capture so the lines land in plain `cargo test` output
    let line = format!(
        "criterion {k:>2}: {} ({:.2}s{limit}) {}{}",
        if pass { "PASS" } else { "FAIL" },
        took.as_secs_f64(),
        out.detail.trim_end_matches("; "),
        if in_time { "" } else { " [over budget]" }
    );
    std::io::stdout().write_all(format!("{line}\n").as_bytes()).unwrap();
    pass
}

/// Graded algebras of dimension ≤ 6.
fn graded_battery() -> Vec<(String, GradedAlgebra)> {
    let mut out = Vec::new();
    for k in 1..=5 {
        out.push((format!("F3[x]/x^{}", k + 1), truncated_polynomial(3, &[1], k).unwrap()));
    }
    out.push(("F2[x]/x^4".into(), truncated_polynomial(2, &[1], 3).unwrap()));
    out.push(("F5[x]/x^5".into(), truncated_polynomial(5, &[1], 4).unwrap()));
    out.push(("F3[x]/x^3, |x|=2".into(), truncated_polynomial(3, &[2], 4).unwrap()));
    out.push(("F3[x,y]/(deg>=3)".into(), truncated_polynomial(3, &[1, 1], 2).unwrap()));
    out.push(("F3[x,y]/(deg>=4), |y|=2".into(), truncated_polynomial(3, &[1, 2], 3).unwrap()));
    out.push(("Λ_F3(1)".into(), exterior_algebra(3, 1).unwrap()));
    out.push(("Λ_F3(2)".into(), exterior_algebra(3, 2).unwrap()));
    out.push(("Λ_F2(2)".into(), exterior_algebra(2, 2).unwrap()));
    let g = group_algebra(2, &abelian_group_table(&[2, 2])).unwrap();
    out.push(("gr F2[Z/2×Z/2]".into(), associated_graded(&g.algebra)));
    out
}

/// Random filtered algebras (dim ≤ 5) with random modules (dim ≤ 3).
fn filtered_battery() -> Vec<(String, FilteredAlgebra, FilteredModule)> {
    (0..12u64)
        .map(|seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = [2, 3, 5][seed as usize % 3];
            let a = filtered_algebra(&mut rng, p, 5);
            let m = filtered_module(&mut rng, &a, 3);
            (format!("random#{seed} (p={p}, dim {}/{})", a.dim(), m.dim()), a, m)
        })
        .collect()
}

fn resolution_ext(g: &GradedAlgebra, m: &FilteredModule, n: usize) -> Option<Vec<usize>> {
    let d_max = (n as i64 + 2) * g.top_degree().max(1) + 2;
    let r = minimal_resolution(g, n + 1, d_max).ok()?;
    let e = graded_ext(&r, m).ok()?;
    e.complete[..=n].iter().all(|&c| c).then(|| e.totals[..=n].to_vec())
}

fn c1() -> Outcome {
    let reps: Vec<_> = (1..=3).map(|d| koszul_dual_check(3, d, d + 2)).collect();
    let pass = reps.iter().all(|r| r.pass);
    let detail = reps.iter().map(|r| format!("d={}: {:?}", r.vars, r.betti)).collect::<Vec<_>>().join(", ");
    Outcome { pass, detail }
}

fn c2() -> Outcome {
    let battery = graded_battery();
    let mut bad = Vec::new();
    for (name, g) in &battery {
        let k = FilteredModule::trivial(g.filtered(), 0);
        let bar = ext_via_bar(g.filtered(), &k, 3, DEFAULT_CAP).map(|e| e.dims()).ok();
        let res = resolution_ext(g, &k, 2);
        if bar.is_none() || bar != res {
            bad.push(format!("{name}: bar {bar:?} vs minres {res:?}"));
        }
    }
    Outcome { pass: bad.is_empty() && battery.len() >= 10, detail: format!("{} algebras; {}", battery.len(), bad.join("; ")) }
}

fn c3() -> Outcome {
    let battery = filtered_battery();
    let mut checks = 0;
    let mut bad = Vec::new();
    for (name, a, m) in &battery {
        for n in 0..=2 {
            match (gr_bar_compare(a, n, DEFAULT_CAP), gr_hom_compare(a, m, n, DEFAULT_CAP)) {
                (Ok(b), Ok(h)) => {
                    checks += b.len() + h.len();
                    if !b.iter().all(|r| r.pass) || !h.iter().all(|r| r.pass) {
                        bad.push(format!("{name} n={n}"));
                    }
                }
                (b, h) => bad.push(format!("{name} n={n}: {:?} {:?}", b.err(), h.err())),
            }
        }
    }
    Outcome { pass: bad.is_empty(), detail: format!("{} pairs, {checks} (n,i,s) equalities; {}", battery.len(), bad.join("; ")) }
}

fn c4() -> Outcome {
    let mut cases: Vec<(String, FilteredAlgebra, FilteredModule)> = filtered_battery();
    for orders in [vec![3], vec![9], vec![3, 3]] {
        let g = group_algebra(3, &abelian_group_table(&orders)).unwrap();
        let k = FilteredModule::trivial(&g.algebra, 0);
        cases.push((format!("F3[{orders:?}]"), g.algebra, k));
    }
    let mut bad = Vec::new();
    for (name, a, m) in &cases {
        match e_infinity_bookkeeping(a, m, 3, DEFAULT_CAP) {
            Ok(r) if r.pass => {}
            r => bad.push(format!("{name}: {r:?}")),
        }
    }
    Outcome { pass: bad.is_empty(), detail: format!("{} cases; {}", cases.len(), bad.join("; ")) }
}

fn c5() -> Outcome {
    let mut koszul = 0;
    let mut bad = Vec::new();
    for (name, g) in graded_battery() {
        let d_max = 4 * g.top_degree().max(1);
        let Ok(r) = minimal_resolution(&g, 3, d_max) else { continue };
        if is_koszul(&r) != KoszulVerdict::Koszul {
            continue;
        }
        koszul += 1;
        for m in [FilteredModule::trivial(g.filtered(), 0), FilteredModule::regular(g.filtered())] {
            let c = build_filtered_hom_complex(g.filtered(), &m, 3, DEFAULT_CAP).unwrap();
            let band = koszul_band_check(&c, &m);
            if !band.pass {
                bad.push(format!("{name}: {:?}", band.violations));
            }
        }
    }
    Outcome { pass: koszul > 0 && bad.is_empty(), detail: format!("{koszul} Koszul instances × 2 modules; {}", bad.join("; ")) }
}

fn additive(n: usize) -> PValuedGroup {
    let cfg: InstanceConfig =
        serde_json::from_str(&format!(r#"{{"family": "additive", "n": {n}, "p": 3, "r": 1, "R": 4}}"#)).unwrap();
    PValuedGroup::from_config(&cfg).unwrap()
}

fn c6() -> Outcome {
    let mut bad = Vec::new();
    for n in 1..=4 {
        let h = additive(n);
        let pi = pi_cokernel_restriction(&h).unwrap();
        let rep = lemma_ext_check(&h, 3).unwrap();
        if !pi.matrix.is_zero() || pi.matrix.rows() != n || !rep.pass || rep.ext_restriction_ranks != vec![0; 3] {
            bad.push(format!("rank {n}: {rep:?}"));
        }
    }
    Outcome { pass: bad.is_empty(), detail: format!("ranks 1..4, Ext^1..3; {}", bad.join("; ")) }
}

fn c7() -> Outcome {
    let g = group_algebra(3, &abelian_group_table(&[27])).unwrap();
    let step = |s: usize| (0..27).step_by(s).collect::<Vec<usize>>();
    let chain = AlgebraChain::from_subgroups(&g, &[step(3), step(9), vec![0]]).unwrap();
    let k = FilteredModule::trivial(&g.algebra, 0);
    let n1 = koz_certificate(&chain, &k, 1, DEFAULT_CAP).unwrap();
    let n2 = koz_certificate(&chain, &k, 2, DEFAULT_CAP).unwrap();
    let links_ok = n1.links.iter().all(|l| l.hypothesis_holds && l.fil_shift == Some(ShiftVerdict::Verified));
    // brute-force control: the graded H² restriction along the first link, by bar cochains
    let h2 = graded_restriction_map(&chain.links[0], &chain.algebras[1], &chain.algebras[0], &k, 2, DEFAULT_CAP).unwrap();
    let pass = n1.verdict == CertVerdict::Certified
        && links_ok
        && n1.m_star == 3
        && n1.restriction_rank == Some(0)
        && n2.verdict == CertVerdict::HypothesisFailed { link: 1 }
        && h2.rank() > 0;
    Outcome {
        pass,
        detail: format!(
            "n=1: {:?}, m*={}, rank {:?}; n=2: {:?}, graded H² rank {}",
            n1.verdict,
            n1.m_star,
            n1.restriction_rank,
            n2.verdict,
            h2.rank()
        ),
    }
}

fn c8() -> Outcome {
    let mut bad = Vec::new();
    let exhaustive = factorization_check(&CongruenceInstance::new(2, 3, 1, 2).unwrap().group, 0, 0, 10_000);
    if !(exhaustive.exhaustive && exhaustive.pass && exhaustive.checked == 81) {
        bad.push(format!("exhaustive GL2: {exhaustive:?}"));
    }
    let mut tested = 0;
    for (n, prec, rank) in [(2, 4, 4), (3, 3, 9)] {
        let c = CongruenceInstance::new(n, 3, 1, prec).unwrap();
        let f = factorization_check(&c.group, 200, 7, 0);
        if !(f.pass && f.checked == 200) {
            bad.push(format!("GL{n} factorization"));
        }
        for s in dominant_cocharacters(n, 2, false) {
            let r = s_conjugation_check(&c, &s, 200, 7).unwrap();
            if !(r.cond_ii && r.cond_iii) {
                bad.push(format!("GL{n} s={s:?}"));
            }
        }
        let w = omega_min_formula_check(&c.group, 200, 7);
        tested += w.tested;
        if !w.pass {
            bad.push(format!("GL{n} min formula: {:?}", w.violations));
        }
        let g = griwa_check(&c, &vec![0; n]).unwrap();
        if !(g.pass && g.total_rank == rank && g.ranks.iter().sum::<usize>() == rank) {
            bad.push(format!("GL{n} griwa {g:?}"));
        }
    }
    Outcome { pass: bad.is_empty(), detail: format!("81 exhaustive, 2×200 sampled, {tested} min-formula samples; {}", bad.join("; ")) }
}

fn c9() -> Outcome {
    let mut bad = Vec::new();
    let mut certified = 0;
    for (n_mat, n) in [(2, 2), (3, 4)] {
        let c = CongruenceInstance::new(n_mat, 3, 1, 6).unwrap();
        let k = FilteredModule::trivial(ubar_factor_algebra(&c).filtered(), 0);
        let ss = dominant_cocharacters(n_mat, 2, false);
        for s in &ss {
            let r = achk_certificate(&c, s, &k, n).unwrap();
            if r.verdict == AchkVerdict::Certified {
                certified += 1;
            } else {
                bad.push(format!("GL{n_mat} s={s:?}: {:?}", r.verdict));
            }
        }
        let u = amplitude_uniformity(&c, &ss).unwrap();
        if !u.uniform {
            bad.push(format!("GL{n_mat} amplitudes {:?}", u.entries.iter().map(|e| e.amplitude).collect::<Vec<_>>()));
        }
    }
    // assembly: the composed bound vanishes at m* along the conjugate chain
    let c = CongruenceInstance::new(2, 3, 1, 9).unwrap();
    let k = FilteredModule::trivial(ubar_factor_algebra(&c).filtered(), 0);
    let d = dimu_pipeline(&c, &[1, 0], &k, 2).unwrap();
    if !d.pass {
        bad.push(format!("dimu {d:?}"));
    }
    Outcome { pass: bad.is_empty(), detail: format!("{certified} certificates, dimu m*={}; {}", d.m_star, bad.join("; ")) }
}

fn jobs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("jobs")
}

fn c10() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_grext");
    let runs = [
        ("validate", "ext_z3.json"),
        ("gr", "z9.json"),
        ("ext", "ext_z3.json"),
        ("minres", "exterior2.json"),
        ("betti", "koszul_sym2.json"),
        ("koszul", "koszul_sym2.json"),
        ("ss-pages", "z9.json"),
        ("ss-bookkeeping", "z9.json"),
        ("restrict", "restrict_z27.json"),
        ("fil-shift", "restrict_z27.json"),
        ("koz-cert", "koz_z27_n1.json"),
        ("pval-check", "heisenberg.json"),
        ("iwahori-verify", "gl2.json"),
        ("griwa", "gl3.json"),
        ("achk-cert", "achk_gl3.json"),
        ("dimu-pipeline", "dimu_gl2.json"),
    ];
    let mut bad = Vec::new();
    for (cmd, file) in runs {
        let out = |threads: &str| {
            Proc::new(bin)
                .args([cmd, "--seed", "17", "--input"])
                .arg(jobs_dir().join(file))
                .env("GREXT_THREADS", threads)
                .output()
                .unwrap()
        };
        let (a, b, c) = (out("1"), out("1"), out("4"));
        if a.stdout.is_empty() || a.stdout != b.stdout || a.stdout != c.stdout || a.stderr != c.stderr {
            bad.push(cmd);
        }
    }
    Outcome { pass: bad.is_empty(), detail: format!("{} commands × 3 runs (1 and 4 threads); {}", runs.len(), bad.join(", ")) }
}

#[test]
fn acceptance() {
    let results = [
        criterion(1, Some(5), c1),
        criterion(2, Some(60), c2),
        criterion(3, Some(60), c3),
        criterion(4, Some(120), c4),
        criterion(5, None, c5),
        criterion(6, Some(5), c6),
        criterion(7, Some(30), c7),
        criterion(8, Some(120), c8),
        criterion(9, Some(120), c9),
        criterion(10, None, c10),
    ];
    let failed: Vec<usize> = results.iter().enumerate().filter(|(_, &ok)| !ok).map(|(k, _)| k + 1).collect();
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}

#[test]
fn polynomial_ring_resolves_through_koszul_complex() {
    let poly = PolynomialAlgebra::standard(3, 2).unwrap();
    let r = grext::minres::koszul_resolution(&poly, 3);
    assert_eq!(is_koszul(&r), KoszulVerdict::Koszul);
}
