use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;

fn trunc_x(p: u64, n: u32) -> GradedAlgebra {
    monomial_algebra(p, &[1], n, |m| m[0] < n).unwrap()
}

fn desc_x3(eps_x: u64) -> Description {
    Description {
        p: 3,
        basis: vec!["1".into(), "x".into(), "x2".into()],
        unit: Some(0),
        mul: vec![
            (0, 0, vec![(0, 1)]),
            (0, 1, vec![(1, 1)]),
            (0, 2, vec![(2, 1)]),
            (1, 0, vec![(1, 1)]),
            (1, 1, vec![(2, 1)]),
            (2, 0, vec![(2, 1)]),
        ],
        aug: vec![1, eps_x, 0],
        weights: vec![0, 1, 2],
        filtration: None,
    }
}

#[test]
fn truncated_monomial_algebra_is_accepted() {
    let a = FilteredAlgebra::from_description(&desc_x3(0)).unwrap();
    assert_eq!(a.dim(), 3);
    assert_eq!(a.weights(), &[0, 1, 2]);
}

#[test]
fn nonzero_augmentation_on_fil1_is_rejected() {
    let err = FilteredAlgebra::from_description(&desc_x3(1)).unwrap_err();
    match err {
        AlgebraError::AxiomViolation { which, .. } => assert_eq!(which, Axiom::Augmentation),
        e => panic!("unexpected {e:?}"),
    }
    assert!(err.to_string().contains("augmentation axiom"));
}

#[test]
fn associativity_and_filtration_violations() {
    let mut d = desc_x3(0);
    // x·x2 = 1 breaks associativity: (x·x)·x = x2·x = 0 but x·(x·x) = x·x2 = 1
    d.mul.push((1, 2, vec![(0, 1)]));
    let e = FilteredAlgebra::from_description(&d).unwrap_err();
    assert!(matches!(e, AlgebraError::AxiomViolation { which: Axiom::Associativity, .. }), "{e}");

    let mut d = desc_x3(0);
    d.weights = vec![0, 2, 2];
    let e = FilteredAlgebra::from_description(&d).unwrap_err();
    assert!(matches!(e, AlgebraError::AxiomViolation { which: Axiom::FiltrationMultiplicativity, .. }), "{e}");
}

#[test]
fn malformed_fields_are_named() {
    let mut d = desc_x3(0);
    d.aug.pop();
    assert!(FilteredAlgebra::from_description(&d).unwrap_err().to_string().contains("`aug`"));
    let mut d = desc_x3(0);
    d.mul[0].2[0].1 = 5;
    assert!(FilteredAlgebra::from_description(&d).unwrap_err().to_string().contains("`mul`"));
    let mut d = desc_x3(0);
    d.p = 4;
    assert!(FilteredAlgebra::from_description(&d).is_err());
}

#[test]
fn cyclic_group_algebras() {
    let g3 = group_algebra(3, &cyclic_group_table(3)).unwrap();
    assert_eq!(g3.algebra.weights(), &[0, 1, 2]);
    let gr = associated_graded(&g3.algebra);
    assert_eq!(gr.filtered().to_description().mul, trunc_x(3, 3).filtered().to_description().mul);

    let g9 = group_algebra(3, &cyclic_group_table(9)).unwrap();
    assert_eq!(g9.algebra.weights(), &(0..9).collect::<Vec<i64>>()[..]);
    let gr9 = associated_graded(&g9.algebra);
    assert_eq!(gr9.filtered().to_description().mul, trunc_x(3, 9).filtered().to_description().mul);
    // basis really is (g-1)^i: (g-1) = -1 + g in group coordinates
    assert_eq!(g9.basis[1][..2], [2, 1]);

    let triv = group_algebra(5, &cyclic_group_table(1)).unwrap();
    assert_eq!(triv.algebra.dim(), 1);
    assert_eq!(triv.algebra.weights(), &[0]);
}

#[test]
fn non_p_group_is_rejected() {
    let e = group_algebra(3, &cyclic_group_table(6)).unwrap_err();
    assert_eq!(e, AlgebraError::NotAPGroup { order: 6, p: 3 });
}

#[test]
fn amplitude_examples() {
    let a = trunc_x(3, 3).into_filtered();
    assert_eq!(amplitude(&FilteredModule::trivial(&a, 0)), 1);
    assert_eq!(amplitude(&FilteredModule::trivial_with_weights(&a, &[3, 3])), 1);
    let m = FilteredModule::regular(&a);
    assert_eq!((m.mu(), m.nu()), (3, 0));
    assert_eq!(amplitude(&m), 3);
}

#[test]
fn tensor_examples() {
    let a = trunc_x(3, 3);
    let k = trunc_x(3, 1);
    let ak = tensor_graded(&a, &k).unwrap();
    assert_eq!(ak.filtered().to_description().mul, a.filtered().to_description().mul);
    let b = tensor_graded(&trunc_x(5, 2), &trunc_x(5, 2)).unwrap();
    let mut degs = b.filtered().weights().to_vec();
    degs.sort();
    assert_eq!(degs, vec![0, 1, 1, 2]);
}

/// (F_3[x]/x^3)^{⊗2} ≅ gr F_3[Z/3 × Z/3]: send x^i y^j to the leading
/// component of (a-1)^i (b-1)^j and check this is a bijective algebra map.
#[test]
fn tensor_square_matches_graded_group_algebra() {
    let g = group_algebra(3, &abelian_group_table(&[3, 3])).unwrap();
    let gr = associated_graded(&g.algebra);
    let t = tensor_graded(&trunc_x(3, 3), &trunc_x(3, 3)).unwrap();
    let fp = g.algebra.field();
    let a1 = {
        let mut v = g.element(3);
        v[0] = fp.sub(v[0], 1);
        v
    };
    let b1 = {
        let mut v = g.element(1);
        v[0] = fp.sub(v[0], 1);
        v
    };
    let pow = |x: &[u32], e: usize| (0..e).fold(g.algebra.unit_vec(), |acc, _| g.algebra.mul(&acc, x));
    let images: Vec<Vec<u32>> = (0..9)
        .map(|idx| {
            let (i, j) = (idx / 3, idx % 3);
            let w = (i + j) as i64;
            let v = g.algebra.mul(&pow(&a1, i), &pow(&b1, j));
            v.iter().enumerate().map(|(k, &c)| if g.algebra.weight(k) == w { c } else { 0 }).collect()
        })
        .collect();
    let f = AlgebraMorphism::new(t.filtered(), gr.filtered(), images.clone()).unwrap();
    let m = crate::linalg::FpMatrix::from_columns(fp, 9, f.images());
    assert_eq!(m.rank(), 9);
}

#[test]
fn rebase_non_adapted_filtration() {
    // F_3[Z/3] on the group basis 1, g, g^2
    let d = Description {
        p: 3,
        basis: vec!["1".into(), "g".into(), "g2".into()],
        unit: Some(0),
        mul: (0..3).flat_map(|i| (0..3).map(move |j| (i, j, vec![((i + j) % 3, 1)]))).collect(),
        aug: vec![1, 1, 1],
        weights: vec![],
        filtration: Some(vec![
            vec![vec![2, 1, 0], vec![2, 0, 1]], // g-1, g^2-1
            vec![vec![1, 1, 1]],                 // (g-1)^2
        ]),
    };
    let a = FilteredAlgebra::from_description(&d).unwrap();
    assert_eq!(a.weights(), &[0, 1, 2]);
    let gr = associated_graded(&a);
    assert!(gr.is_connected());
    assert_eq!(gr.filtered().graded_dims(), vec![1, 1, 1]);
    // x·x is a nonzero multiple of x^2 in gr
    assert_eq!(gr.filtered().mul_basis(1, 1).len(), 1);
    assert_eq!(gr.filtered().mul_basis(1, 1)[0].0, 2);
}

#[test]
fn subgroup_inclusion_has_induced_weights() {
    let g = group_algebra(3, &cyclic_group_table(9)).unwrap();
    let (sub, f) = g.subgroup(&[0, 3, 6]).unwrap();
    assert_eq!(sub.weights(), &[0, 3, 6]);
    assert_eq!(f.images()[1], crate::algebra_core::unit_vector(9, 3));
}

#[test]
fn morphism_validation_catches_bad_maps() {
    let a = trunc_x(3, 3).into_filtered();
    // x ↦ 1 breaks the augmentation
    let bad = vec![vec![1, 0, 0], vec![1, 0, 0], vec![1, 0, 0]];
    assert!(AlgebraMorphism::new(&a, &a, bad).is_err());
    // x ↦ x^2 is fine (filtration-preserving), x^2 ↦ 0
    let ok = vec![vec![1, 0, 0], vec![0, 0, 1], vec![0, 0, 0]];
    assert!(AlgebraMorphism::new(&a, &a, ok).is_ok());
    // x ↦ x + x^2 is fine, x ↦ 1 + x not augmented
    let bad2 = vec![vec![1, 0, 0], vec![1, 1, 0], vec![1, 2, 1]];
    assert!(AlgebraMorphism::new(&a, &a, bad2).is_err());
}

#[test]
fn json_round_trip_is_bit_exact() {
    let g = group_algebra(3, &cyclic_group_table(9)).unwrap();
    let s1 = serde_json::to_string(&g.algebra.to_description()).unwrap();
    let back = FilteredAlgebra::from_description(&serde_json::from_str(&s1).unwrap()).unwrap();
    assert_eq!(back, g.algebra);
    assert_eq!(serde_json::to_string(&back.to_description()).unwrap(), s1);

    let m = FilteredModule::regular(&g.algebra).shifted(-2);
    let s2 = serde_json::to_string(&m.to_description()).unwrap();
    let mb = FilteredModule::from_description(&g.algebra, &serde_json::from_str(&s2).unwrap()).unwrap();
    assert_eq!(mb, m);
    assert_eq!(serde_json::to_string(&mb.to_description()).unwrap(), s2);
}

#[test]
fn exterior_algebra_is_graded_commutative() {
    let e = exterior_algebra(3, 2).unwrap();
    e.filtered().validate().unwrap();
    let x = e.filtered().mul_basis(1, 2).clone();
    let y = e.filtered().mul_basis(2, 1).clone();
    assert_eq!(x[0].0, y[0].0);
    assert_eq!(e.field().add(x[0].1, y[0].1), 0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_filtered_algebras_are_valid(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random::filtered_algebra(&mut rng, 3, 5);
        prop_assert!(a.validate().is_ok());
        let m = random::filtered_module(&mut rng, &a, 3);
        prop_assert!(m.validate(&a).is_ok());
        // gr preserves the weight multiset and is a valid graded algebra
        let gr = associated_graded(&a);
        prop_assert!(gr.filtered().validate().is_ok());
        prop_assert_eq!(gr.filtered().weights(), a.weights());
        let grm = associated_graded_module(&a, &m);
        prop_assert!(grm.validate(gr.filtered()).is_ok());
    }

    #[test]
    fn gr_is_idempotent_on_graded_input(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random::filtered_algebra(&mut rng, 5, 5);
        let gr = associated_graded(&a);
        let again = associated_graded(gr.filtered());
        prop_assert_eq!(&again, &gr);
    }

    #[test]
    fn amplitude_is_shift_invariant(seed in 0u64..10_000, c in -5i64..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random::filtered_algebra(&mut rng, 3, 5);
        let m = random::filtered_module(&mut rng, &a, 3);
        prop_assert_eq!(amplitude(&m.shifted(c)), amplitude(&m));
    }

    #[test]
    fn cyclic_gr_is_truncated_polynomial(r in 1u32..4, p in prop::sample::select(vec![2u64, 3])) {
        let n = p.pow(r) as usize;
        let g = group_algebra(p, &cyclic_group_table(n)).unwrap();
        let gr = associated_graded(&g.algebra);
        prop_assert_eq!(gr.filtered().to_description().mul, trunc_x(p, n as u32).filtered().to_description().mul);
    }
}
