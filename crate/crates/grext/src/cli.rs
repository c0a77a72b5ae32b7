//! Batch driver: one JSON job in, one JSON report (sorted keys, versioned
//! schema) plus an aligned text table out.
//!
//! Exit status: 0 when every asserted property holds, 2 on a
//! hypothesis-failed verdict, 1 on engine errors, malformed input, or a
//! refuted assertion.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::algebra_core::{
    abelian_group_table, associated_graded, exterior_algebra, group_algebra, Description,
    FilteredAlgebra, FilteredModule, GradedAlgebra, GroupAlgebra, PolynomialAlgebra,
};
use crate::bar_complex::{
    ext_via_bar, gr_bar_compare, gr_hom_compare, graded_restriction_map, restriction_map, DEFAULT_CAP, DEFAULT_N_MAX,
};
use crate::iwahori::{
    achk_certificate, amplitude_uniformity, dimu_pipeline, dominant_cocharacters, factorization_check, griwa_check,
    omega_min_formula_check, s_conjugation_check, ubar_factor_algebra, AchkVerdict, CongruenceInstance,
};
use crate::lazard::{pvaluation_check, InstanceConfig, PValuedGroup};
use crate::minres::{graded_ext, is_koszul, koszul_dual_check, koszul_resolution, minimal_resolution, KoszulVerdict, MinimalResolution};
use crate::specseq::{
    build_filtered_hom_complex, check_page_transition, e_infinity_bookkeeping, graded_shift_check, koszul_band_check,
    koz_certificate, page_dims, stable_r, AlgebraChain, CertVerdict, ShiftVerdict,
};

pub const SCHEMA: &str = "grext/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Validate,
    Gr,
    Ext,
    Minres,
    Betti,
    Koszul,
    SsPages,
    SsBookkeeping,
    Restrict,
    FilShift,
    KozCert,
    PvalCheck,
    IwahoriVerify,
    Griwa,
    AchkCert,
    DimuPipeline,
}

impl Command {
    pub fn name(self) -> String {
        self.to_possible_value().expect("no skipped variants").get_name().to_string()
    }

    /// Identifier of the statement a report certifies.
    pub fn anchor(self) -> &'static str {
        match self {
            Command::Validate => "Def-filalg",
            Command::Gr => "Lem-bgr",
            Command::Ext => "Def-ext",
            Command::Minres | Command::Betti => "Def-minres",
            Command::Koszul => "Thm-koz",
            Command::SsPages => "Prop-ss",
            Command::SsBookkeeping => "Cor-spec",
            Command::Restrict => "Lem-van",
            Command::FilShift => "Cor-fil",
            Command::KozCert => "Thm-koz",
            Command::PvalCheck => "Lem-pval",
            Command::IwahoriVerify => "Lem-val",
            Command::Griwa => "Lem-griwa",
            Command::AchkCert => "Lem-achk",
            Command::DimuPipeline => "Prop-dimu",
        }
    }
}

#[derive(Parser, Debug, Clone)]
#[command(name = "grext", about = "Exact filtered/graded Ext computations and certificates over F_p")]
pub struct Args {
    /// Subcommand (alternatively `--command`).
    #[arg(value_enum)]
    pub subcommand: Option<Command>,
    #[arg(long, value_enum)]
    pub command: Option<Command>,
    /// JSON job files; several are run independently.
    #[arg(long)]
    pub input: Vec<PathBuf>,
    /// Where to write the JSON report (default: stdout, table to stderr).
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Bar cochains are built through this degree.
    #[arg(long, default_value_t = DEFAULT_N_MAX)]
    pub max_bar_degree: usize,
    /// Largest cochain space (entries) the bar engine may allocate.
    #[arg(long, default_value_t = DEFAULT_CAP)]
    pub max_dim: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JobConfig {
    pub command: Command,
    pub inputs: Vec<PathBuf>,
    pub max_bar_degree: usize,
    pub max_dim: usize,
    pub seed: u64,
    pub output: Option<PathBuf>,
}

impl JobConfig {
    pub fn from_args(args: Args) -> Result<Self, String> {
        let command = match (args.subcommand, args.command) {
            (Some(a), Some(b)) if a != b => return Err("field `command`: given twice with different values".into()),
            (Some(c), _) | (None, Some(c)) => c,
            (None, None) => return Err("field `command`: missing".into()),
        };
        if args.max_bar_degree == 0 {
            return Err("field `max-bar-degree`: must be positive".into());
        }
        if args.max_dim == 0 {
            return Err("field `max-dim`: must be positive".into());
        }
        if args.input.is_empty() {
            return Err("field `input`: at least one job file is required".into());
        }
        Ok(JobConfig {
            command,
            inputs: args.input,
            max_bar_degree: args.max_bar_degree,
            max_dim: args.max_dim,
            seed: args.seed,
            output: args.output,
        })
    }
}

#[derive(Deserialize, Clone, Debug)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum AlgebraSpec {
    Description(Description),
    /// `F_p[Z/o_1 × … × Z/o_k]` with the augmentation filtration.
    Group { p: u64, orders: Vec<usize> },
    /// Polynomial algebra on variables of the given degrees. Resolution
    /// commands resolve it through its Koszul complex; with `max_degree` it is
    /// truncated there instead (bar commands need a finite algebra).
    Polynomial {
        p: u64,
        degrees: Vec<i64>,
        #[serde(default)]
        max_degree: Option<i64>,
    },
    Exterior { p: u64, vars: usize },
}

#[derive(Deserialize, Clone, Debug)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ModuleSpec {
    Trivial,
    Regular,
    Description(Description),
}

/// Contents of a job file; each command reads the fields it needs.
#[derive(Deserialize, Clone, Debug, Default)]
#[serde(deny_unknown_fields)]
pub struct Job {
    pub algebra: Option<AlgebraSpec>,
    pub module: Option<ModuleSpec>,
    pub n: Option<usize>,
    /// Last spectral-sequence page to print (default: the stable page).
    pub page: Option<i64>,
    /// Subgroup as a list of element indices of the group.
    pub subgroup: Option<Vec<usize>>,
    /// Descending chain of subgroups below the whole group.
    pub chain: Option<Vec<Vec<usize>>>,
    pub instance: Option<InstanceConfig>,
    pub s: Option<Vec<u32>>,
    /// Cocharacters of height up to this bound when `s` is absent.
    pub height: Option<u32>,
    pub samples: Option<usize>,
}

#[derive(Debug)]
pub enum Outcome {
    Pass,
    HypothesisFailed,
    Failed,
}

impl Outcome {
    fn code(&self) -> i32 {
        match self {
            Outcome::Pass => 0,
            Outcome::HypothesisFailed => 2,
            Outcome::Failed => 1,
        }
    }
    fn label(&self) -> &'static str {
        match self {
            Outcome::Pass => "pass",
            Outcome::HypothesisFailed => "hypothesis-failed",
            Outcome::Failed => "failed",
        }
    }
    fn from_bool(ok: bool) -> Self {
        if ok {
            Outcome::Pass
        } else {
            Outcome::Failed
        }
    }
}

/// A finished job: JSON body, table and outcome.
pub struct Report {
    pub body: Value,
    pub table: Table,
    pub outcome: Outcome,
}

#[derive(Default, Clone, Debug)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: vec![] }
    }
    fn row(&mut self, cells: Vec<String>) {
        self.rows.push(cells);
    }

    pub fn render(&self) -> String {
        let cols = self.header.len();
        let mut width = vec![0; cols];
        for r in std::iter::once(&self.header).chain(&self.rows) {
            for (w, c) in width.iter_mut().zip(r) {
                *w = (*w).max(c.chars().count());
            }
        }
        let line = |r: &[String]| {
            let mut s = String::new();
            for (k, (c, w)) in r.iter().zip(&width).enumerate() {
                if k > 0 {
                    s.push_str("  ");
                }
                let _ = write!(s, "{c:<w$}");
            }
            s.trim_end().to_string() + "\n"
        };
        let mut out = line(&self.header);
        out += &line(&width.iter().map(|&w| "-".repeat(w)).collect::<Vec<_>>());
        for r in &self.rows {
            out += &line(r);
        }
        out
    }
}

fn need<T: Clone>(v: &Option<T>, field: &str) -> Result<T, String> {
    v.clone().ok_or_else(|| format!("field `{field}`: missing"))
}

fn to_value<T: Serialize>(t: &T) -> Value {
    serde_json::to_value(t).expect("reports serialize")
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

struct Loaded {
    algebra: FilteredAlgebra,
    group: Option<GroupAlgebra>,
    /// Untruncated polynomial algebra.
    poly: Option<PolynomialAlgebra>,
}

fn load_algebra(job: &Job) -> Result<Loaded, String> {
    match need(&job.algebra, "algebra")? {
        AlgebraSpec::Description(d) => Ok(Loaded { algebra: FilteredAlgebra::from_description(&d).map_err(err)?, group: None, poly: None }),
        AlgebraSpec::Group { p, orders } => {
            if orders.is_empty() || orders.contains(&0) {
                return Err("field `orders`: needs positive cyclic orders".into());
            }
            let g = group_algebra(p, &abelian_group_table(&orders)).map_err(err)?;
            Ok(Loaded { algebra: g.algebra.clone(), group: Some(g), poly: None })
        }
        AlgebraSpec::Polynomial { p, degrees, max_degree } => {
            let poly = PolynomialAlgebra::new(p, degrees).map_err(err)?;
            let top = max_degree.unwrap_or(2 * poly.degrees.iter().max().copied().unwrap_or(1));
            let algebra = poly.truncation(top).map_err(err)?.into_filtered();
            Ok(Loaded { algebra, group: None, poly: max_degree.is_none().then_some(poly) })
        }
        AlgebraSpec::Exterior { p, vars } => {
            Ok(Loaded { algebra: exterior_algebra(p, vars).map_err(err)?.into_filtered(), group: None, poly: None })
        }
    }
}

fn load_module(job: &Job, a: &FilteredAlgebra) -> Result<FilteredModule, String> {
    match job.module.clone().unwrap_or(ModuleSpec::Trivial) {
        ModuleSpec::Trivial => Ok(FilteredModule::trivial(a, 0)),
        ModuleSpec::Regular => Ok(FilteredModule::regular(a)),
        ModuleSpec::Description(d) => FilteredModule::from_description(a, &d).map_err(err),
    }
}

fn graded(a: &FilteredAlgebra) -> Result<GradedAlgebra, String> {
    GradedAlgebra::new(a.clone()).map_err(|e| format!("field `algebra`: {e}"))
}

fn group_of(l: &Loaded) -> Result<&GroupAlgebra, String> {
    l.group.as_ref().ok_or_else(|| "field `algebra`: this command needs a `group` algebra".to_string())
}

fn instance(job: &Job) -> Result<InstanceConfig, String> {
    need(&job.instance, "instance")
}

fn cochars(job: &Job, n: usize) -> Result<Vec<Vec<u32>>, String> {
    match &job.s {
        Some(s) if s.len() != n => Err(format!("field `s`: expected {n} entries")),
        Some(s) => Ok(vec![s.clone()]),
        None => Ok(dominant_cocharacters(n, job.height.unwrap_or(2), false)),
    }
}

fn show<T: std::fmt::Debug>(x: T) -> String {
    format!("{x:?}")
}

/// Runs one job (already parsed). `Err` is an engine or input error.
pub fn run_job(cfg: &JobConfig, job: &Job) -> Result<Report, String> {
    let cap = cfg.max_dim;
    let nb = cfg.max_bar_degree;
    match cfg.command {
        Command::Validate => {
            let l = load_algebra(job)?;
            let a = &l.algebra;
            let m = job.module.as_ref().map(|_| load_module(job, a)).transpose()?;
            let mut t = Table::new(&["object", "dim", "weights"]);
            t.row(vec!["algebra".into(), a.dim().to_string(), show(a.weights())]);
            if let Some(m) = &m {
                t.row(vec!["module".into(), m.dim().to_string(), show(m.weights())]);
            }
            let body = json!({
                "valid": true,
                "algebra": to_value(&a.to_description()),
                "module": m.as_ref().map(|m| to_value(&m.to_description())),
            });
            Ok(Report { body, table: t, outcome: Outcome::Pass })
        }
        Command::Gr => {
            let l = load_algebra(job)?;
            let a = &l.algebra;
            let n = job.n.unwrap_or(2);
            let g = associated_graded(a);
            let bar = gr_bar_compare(a, n, cap).map_err(err)?;
            let m = load_module(job, a)?;
            let hom: Vec<_> = (0..=n).map(|k| gr_hom_compare(a, &m, k, cap)).collect::<Result<Vec<_>, _>>().map_err(err)?;
            let hom: Vec<_> = hom.into_iter().flatten().collect();
            let mut t = Table::new(&["check", "n", "i/s", "filtered", "graded", "pass"]);
            for r in &bar {
                t.row(vec!["bar".into(), r.n.to_string(), r.i.to_string(), r.filtered_dim.to_string(), r.convolution_dim.to_string(), r.pass.to_string()]);
            }
            for r in &hom {
                t.row(vec!["hom".into(), r.n.to_string(), r.s.to_string(), r.filtered_dim.to_string(), r.graded_dim.to_string(), r.pass.to_string()]);
            }
            let pass = bar.iter().all(|r| r.pass) && hom.iter().all(|r| r.pass);
            let body = json!({"graded": to_value(&g.filtered().to_description()), "bar": to_value(&bar), "hom": to_value(&hom)});
            Ok(Report { body, table: t, outcome: Outcome::from_bool(pass) })
        }
        Command::Ext => {
            let l = load_algebra(job)?;
            let m = load_module(job, &l.algebra)?;
            let n = job.n.unwrap_or(nb.saturating_sub(1));
            let ext = ext_via_bar(&l.algebra, &m, n + 1, cap).map_err(err)?;
            let dims = ext.dims();
            let mut t = Table::new(&["n", "dim Ext^n"]);
            for (k, d) in dims.iter().enumerate() {
                t.row(vec![k.to_string(), d.to_string()]);
            }
            Ok(Report { body: json!({"dims": dims}), table: t, outcome: Outcome::Pass })
        }
        Command::Minres | Command::Betti | Command::Koszul => {
            let l = load_algebra(job)?;
            let n = job.n.unwrap_or(nb);
            let r = match &l.poly {
                Some(poly) => koszul_resolution(poly, n),
                None => {
                    let g = graded(&l.algebra)?;
                    let d_max = (n as i64 + 1) * g.top_degree().max(1);
                    minimal_resolution(&g, n, d_max).map_err(err)?
                }
            };
            resolution_report(cfg.command, job, &l, &r, n, cap)
        }
        Command::SsPages => {
            let l = load_algebra(job)?;
            let m = load_module(job, &l.algebra)?;
            let c = build_filtered_hom_complex(&l.algebra, &m, job.n.unwrap_or(2) + 1, cap).map_err(err)?;
            let last = job.page.unwrap_or_else(|| stable_r(&c));
            let pages: Vec<_> = (0..=last).map(|r| page_dims(&c, r)).collect();
            let transitions: Vec<_> = (0..last).map(|r| check_page_transition(&c, r)).collect();
            let mut t = Table::new(&["r", "i", "j", "dim"]);
            for p in &pages {
                for e in &p.entries {
                    t.row(vec![p.r.to_string(), e.i.to_string(), e.j.to_string(), e.dim.to_string()]);
                }
            }
            let pass = transitions.iter().all(Vec::is_empty);
            let body = json!({"pages": to_value(&pages), "transition_failures": to_value(&transitions)});
            Ok(Report { body, table: t, outcome: Outcome::from_bool(pass) })
        }
        Command::SsBookkeeping => {
            let l = load_algebra(job)?;
            let m = load_module(job, &l.algebra)?;
            let rep = e_infinity_bookkeeping(&l.algebra, &m, job.n.unwrap_or(2) + 1, cap).map_err(err)?;
            let mut t = Table::new(&["n", "sum E_inf", "dim Ext", "graded pieces"]);
            for r in &rep.rows {
                t.row(vec![r.n.to_string(), r.e_infinity.to_string(), r.ext.to_string(), r.graded_pieces_match.to_string()]);
            }
            Ok(Report { body: to_value(&rep), table: t, outcome: Outcome::from_bool(rep.pass) })
        }
        Command::Restrict | Command::FilShift => {
            let l = load_algebra(job)?;
            let g = group_of(&l)?;
            let sub = g.subgroup(&need(&job.subgroup, "subgroup")?).map_err(|e| format!("field `subgroup`: {e}"))?;
            let m = load_module(job, &l.algebra)?;
            let n = job.n.unwrap_or(1);
            if cfg.command == Command::FilShift {
                let rep = graded_shift_check(&sub.1, &sub.0, &l.algebra, &m, n, cap).map_err(err)?;
                let mut t = Table::new(&["i", "dim Fil^i", "shifted"]);
                for lv in &rep.levels {
                    t.row(vec![lv.i.to_string(), lv.fil_dim.to_string(), lv.shifted.to_string()]);
                }
                let outcome = match rep.verdict {
                    ShiftVerdict::Verified => Outcome::Pass,
                    ShiftVerdict::HypothesisFailed => Outcome::HypothesisFailed,
                    ShiftVerdict::Failed => Outcome::Failed,
                };
                return Ok(Report { body: to_value(&rep), table: t, outcome });
            }
            let mut rows = Vec::new();
            let mut t = Table::new(&["n", "rank", "graded rank"]);
            for k in 0..=n {
                let full = restriction_map(&sub.1, &sub.0, &l.algebra, &m, k, cap).map_err(err)?.rank();
                let gr = graded_restriction_map(&sub.1, &sub.0, &l.algebra, &m, k, cap).map_err(err)?.rank();
                t.row(vec![k.to_string(), full.to_string(), gr.to_string()]);
                rows.push(json!({"n": k, "rank": full, "graded_rank": gr}));
            }
            Ok(Report { body: json!({"restriction": rows}), table: t, outcome: Outcome::Pass })
        }
        Command::KozCert => {
            let l = load_algebra(job)?;
            let g = group_of(&l)?;
            let mut subs = need(&job.chain, "chain")?;
            // the chain always ends at the trivial subgroup
            if subs.last().is_none_or(|h| h.len() > 1) {
                subs.push(vec![0]);
            }
            let chain = AlgebraChain::from_subgroups(g, &subs).map_err(|e| format!("field `chain`: {e}"))?;
            let m = load_module(job, &l.algebra)?;
            let cert = koz_certificate(&chain, &m, job.n.unwrap_or(1), cap).map_err(err)?;
            let mut t = Table::new(&["link", "graded rank", "hypothesis", "fil shift"]);
            for lv in &cert.links {
                t.row(vec![lv.link.to_string(), lv.graded_restriction_rank.to_string(), lv.hypothesis_holds.to_string(), lv.fil_shift.map_or("-".into(), show)]);
            }
            t.row(vec!["m*".into(), cert.m_star.to_string(), "verdict".into(), show(&cert.verdict)]);
            let outcome = match cert.verdict {
                CertVerdict::Certified => Outcome::Pass,
                CertVerdict::HypothesisFailed { .. } | CertVerdict::ChainTooShort { .. } => Outcome::HypothesisFailed,
                CertVerdict::Refuted => Outcome::Failed,
            };
            Ok(Report { body: to_value(&cert), table: t, outcome })
        }
        Command::PvalCheck => {
            let g = PValuedGroup::from_config(&instance(job)?).map_err(err)?;
            let rep = pvaluation_check(&g, job.samples.unwrap_or(200), cfg.seed);
            let mut t = Table::new(&["axiom", "tested"]);
            for (k, n) in rep.tested.iter().enumerate() {
                t.row(vec![(k + 1).to_string(), n.to_string()]);
            }
            t.row(vec!["violations".into(), rep.violations.len().to_string()]);
            Ok(Report { body: to_value(&rep), table: t, outcome: Outcome::from_bool(rep.pass) })
        }
        Command::IwahoriVerify => {
            let c = CongruenceInstance::from_config(&instance(job)?).map_err(err)?;
            let samples = job.samples.unwrap_or(200);
            let fact = factorization_check(&c.group, samples, cfg.seed, 10_000);
            let conj: Vec<_> = cochars(job, c.n)?
                .par_iter()
                .map(|s| s_conjugation_check(&c, s, samples, cfg.seed))
                .collect::<Result<_, _>>()
                .map_err(err)?;
            let omega = omega_min_formula_check(&c.group, samples, cfg.seed);
            let mut t = Table::new(&["check", "detail", "pass"]);
            t.row(vec!["factorization".into(), format!("{} elements", fact.checked), fact.pass.to_string()]);
            for r in &conj {
                t.row(vec!["conjugation".into(), show(&r.s), (r.cond_ii && r.cond_iii).to_string()]);
            }
            t.row(vec!["min formula".into(), format!("{} tested", omega.tested), omega.pass.to_string()]);
            let pass = fact.pass && conj.iter().all(|r| r.cond_ii && r.cond_iii) && omega.pass;
            let body = json!({"factorization": to_value(&fact), "conjugation": to_value(&conj), "min_formula": to_value(&omega)});
            Ok(Report { body, table: t, outcome: Outcome::from_bool(pass) })
        }
        Command::Griwa => {
            let c = CongruenceInstance::from_config(&instance(job)?).map_err(err)?;
            let s = job.s.clone().unwrap_or_else(|| vec![0; c.n]);
            let rep = griwa_check(&c, &s).map_err(err)?;
            let mut t = Table::new(&["part", "rank"]);
            for (name, r) in ["lower", "torus", "upper"].iter().zip(rep.ranks) {
                t.row(vec![name.to_string(), r.to_string()]);
            }
            t.row(vec!["total".into(), rep.total_rank.to_string()]);
            Ok(Report { body: to_value(&rep), table: t, outcome: Outcome::from_bool(rep.pass) })
        }
        Command::AchkCert | Command::DimuPipeline => {
            let c = CongruenceInstance::from_config(&instance(job)?).map_err(err)?;
            let alg = ubar_factor_algebra(&c);
            let m = load_module(job, alg.filtered())?;
            let n = job.n.unwrap_or(c.dim_u() + 1);
            let ss = cochars(job, c.n)?;
            let unif = amplitude_uniformity(&c, &ss).map_err(err)?;
            if cfg.command == Command::AchkCert {
                let reps: Vec<_> =
                    ss.par_iter().map(|s| achk_certificate(&c, s, &m, n)).collect::<Result<_, _>>().map_err(err)?;
                let mut t = Table::new(&["s", "ext (U-bar factor)", "bound", "verdict"]);
                for r in &reps {
                    t.row(vec![show(&r.s), show(&r.a_factor_ext), r.restriction_rank_bound.to_string(), show(&r.verdict)]);
                }
                t.row(vec!["amplitude".into(), "uniform".into(), String::new(), unif.uniform.to_string()]);
                let outcome = if !unif.uniform {
                    Outcome::Failed
                } else if reps.iter().all(|r| r.verdict == AchkVerdict::Certified) {
                    Outcome::Pass
                } else {
                    Outcome::HypothesisFailed
                };
                let body = json!({"certificates": to_value(&reps), "uniformity": to_value(&unif)});
                return Ok(Report { body, table: t, outcome });
            }
            let reps: Vec<_> =
                ss.par_iter().map(|s| dimu_pipeline(&c, s, &m, n)).collect::<Result<_, _>>().map_err(err)?;
            let mut t = Table::new(&["s", "k", "link bound", "composed bound"]);
            for r in &reps {
                for lv in &r.levels {
                    t.row(vec![show(&r.s), lv.k.to_string(), lv.link_rank_bound.to_string(), lv.composed_rank_bound.to_string()]);
                }
            }
            let outcome = if !unif.uniform || reps.iter().any(|r| !r.pass) {
                Outcome::Failed
            } else if reps.iter().all(|r| r.achk == AchkVerdict::Certified) {
                Outcome::Pass
            } else {
                Outcome::HypothesisFailed
            };
            let body = json!({"pipelines": to_value(&reps), "uniformity": to_value(&unif)});
            Ok(Report { body, table: t, outcome })
        }
    }
}

fn resolution_report(
    cmd: Command,
    job: &Job,
    l: &Loaded,
    r: &MinimalResolution,
    n: usize,
    cap: usize,
) -> Result<Report, String> {
    let betti = r.betti();
    let degrees: Vec<Vec<i64>> = (0..=n).map(|k| r.generator_degrees(k).to_vec()).collect();
    let statuses = r.statuses().to_vec();
    match cmd {
        Command::Minres => {
            let problems = r.check();
            let mut t = Table::new(&["n", "rank", "degrees", "status"]);
            for k in 0..=n {
                t.row(vec![k.to_string(), betti[k].to_string(), show(&degrees[k]), show(statuses[k])]);
            }
            let body = json!({"betti": betti, "generator_degrees": degrees, "statuses": to_value(&statuses), "problems": problems});
            Ok(Report { body, table: t, outcome: Outcome::from_bool(problems.is_empty()) })
        }
        Command::Betti => {
            let mut t = Table::new(&["n", "degree", "count"]);
            let mut cells = Vec::new();
            for (k, ds) in degrees.iter().enumerate() {
                let mut counts = std::collections::BTreeMap::new();
                for &d in ds {
                    *counts.entry(d).or_insert(0usize) += 1;
                }
                for (d, c) in counts {
                    t.row(vec![k.to_string(), d.to_string(), c.to_string()]);
                    cells.push(json!({"n": k, "degree": d, "count": c}));
                }
            }
            let body = json!({"betti": betti, "table": cells, "statuses": to_value(&statuses)});
            Ok(Report { body, table: t, outcome: Outcome::Pass })
        }
        _ => {
            let verdict = is_koszul(r);
            let m = load_module(job, &l.algebra)?;
            let ext = graded_ext(r, &m).map_err(err)?;
            let mut body = json!({
                "koszul": verdict == KoszulVerdict::Koszul,
                "verdict": to_value(&verdict),
                "ext": ext.entries().iter().map(|&(i, j, d)| json!({"i": i, "j": j, "dim": d})).collect::<Vec<_>>(),
            });
            let mut t = Table::new(&["property", "value"]);
            t.row(vec!["koszul".into(), (verdict == KoszulVerdict::Koszul).to_string()]);
            let mut pass = true;
            // the band lives on the bar side, so only for finite Koszul algebras
            if verdict == KoszulVerdict::Koszul && l.poly.is_none() {
                let c = build_filtered_hom_complex(&l.algebra, &m, n.min(3) + 1, cap).map_err(err)?;
                let band = koszul_band_check(&c, &m);
                t.row(vec!["band".into(), format!("{} <= 2i+j < {}: {}", band.nu, band.mu, band.pass)]);
                pass &= band.pass;
                body["band"] = to_value(&band);
            }
            if let Some(poly) = l.poly.as_ref().filter(|q| q.degrees.iter().all(|&d| d == 1)) {
                let dual = koszul_dual_check(poly.p, poly.vars(), n);
                t.row(vec!["dual betti".into(), show(&dual.betti)]);
                pass &= dual.pass;
                body["dual"] = to_value(&dual);
            }
            Ok(Report { body, table: t, outcome: Outcome::from_bool(pass) })
        }
    }
}

/// Reads and runs one job file, producing the versioned JSON envelope.
/// Errors become a report with `"status": "error"` and exit code 1.
pub fn run_file(cfg: &JobConfig, path: &PathBuf) -> (Value, String, i32) {
    let parsed = std::fs::read_to_string(path)
        .map_err(|e| format!("field `input`: cannot read {}: {e}", path.display()))
        .and_then(|s| serde_json::from_str::<Job>(&s).map_err(|e| format!("malformed input: {e}")));
    let mut env = json!({
        "schema": SCHEMA,
        "command": cfg.command.name(),
        "anchor": cfg.command.anchor(),
        "seed": cfg.seed,
        "input": path.file_name().map(|f| f.to_string_lossy().to_string()),
    });
    match parsed.and_then(|job| run_job(cfg, &job)) {
        Ok(rep) => {
            env["status"] = json!(rep.outcome.label());
            env["pass"] = json!(matches!(rep.outcome, Outcome::Pass));
            env["report"] = rep.body;
            (env, rep.table.render(), rep.outcome.code())
        }
        Err(e) => {
            env["status"] = json!("error");
            env["pass"] = json!(false);
            env["error"] = json!(e);
            (env, format!("error: {e}\n"), 1)
        }
    }
}

/// Runs every input; returns the JSON text, the tables and the exit code
/// (worst over jobs: engine error, then hypothesis failure).
pub fn run(cfg: &JobConfig) -> (String, String, i32) {
    let results: Vec<_> = cfg.inputs.par_iter().map(|p| run_file(cfg, p)).collect();
    let code = results.iter().map(|r| r.2).fold(0, |acc, c| match (acc, c) {
        (1, _) | (_, 1) => 1,
        (2, _) | (_, 2) => 2,
        _ => 0,
    });
    let tables: String = results.iter().map(|r| r.1.clone()).collect::<Vec<_>>().join("\n");
    let json = if results.len() == 1 {
        results.into_iter().next().expect("one").0
    } else {
        json!({"schema": SCHEMA, "reports": results.into_iter().map(|r| r.0).collect::<Vec<_>>()})
    };
    (serde_json::to_string_pretty(&json).expect("json") + "\n", tables, code)
}

/// Sizes the global thread pool from `GREXT_THREADS`, if set.
pub fn init_threads() {
    if let Some(n) = std::env::var("GREXT_THREADS").ok().and_then(|v| v.parse::<usize>().ok()).filter(|&n| n > 0) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}
