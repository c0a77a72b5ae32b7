//! Cross-module invariants on random inputs.

use grext::algebra_core::random::{filtered_algebra, filtered_module};
use grext::algebra_core::{truncated_polynomial, FilteredModule};
use grext::bar_complex::{ext_via_bar, DEFAULT_CAP};
use grext::cli::{run_job, Command, Job, JobConfig};
use grext::minres::{graded_ext, minimal_resolution};
use grext::specseq::e_infinity_bookkeeping;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn bar_and_minimal_resolution_agree(p in prop::sample::select(vec![2u64, 3, 5]), deg in 1i64..3, top in 1i64..6) {
        let g = truncated_polynomial(p, &[deg], top * deg).unwrap();
        prop_assume!(g.dim() <= 6);
        let k = FilteredModule::trivial(g.filtered(), 0);
        let bar = ext_via_bar(g.filtered(), &k, 3, DEFAULT_CAP).unwrap().dims();
        let r = minimal_resolution(&g, 3, 4 * g.top_degree() + 2).unwrap();
        let e = graded_ext(&r, &k).unwrap();
        prop_assert_eq!(bar, e.totals[..3].to_vec());
    }

    #[test]
    fn e_infinity_adds_up_to_ext(seed in 0u64..5000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = filtered_algebra(&mut rng, 3, 4);
        let m = filtered_module(&mut rng, &a, 2);
        prop_assert!(e_infinity_bookkeeping(&a, &m, 3, DEFAULT_CAP).unwrap().pass);
    }

    #[test]
    fn reports_depend_only_on_job_and_seed(seed in 0u64..1000) {
        let job: Job = serde_json::from_str(r#"{"instance": {"family": "gl_n", "n": 2, "p": 3, "r": 1, "R": 4}, "samples": 20}"#).unwrap();
        let cfg = JobConfig { command: Command::PvalCheck, inputs: vec![], max_bar_degree: 4, max_dim: DEFAULT_CAP, seed, output: None };
        let a = run_job(&cfg, &job).unwrap();
        let b = run_job(&cfg, &job).unwrap();
        prop_assert_eq!(a.body.to_string(), b.body.to_string());
        prop_assert_eq!(a.table.render(), b.table.render());
    }
}
