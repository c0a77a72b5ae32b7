//! Seeded generators of small filtered algebras and modules, for the
//! property suites and the acceptance battery.
//!
//! Algebras are quotients `F_p[x, y] / (I + m^4)` by a random ideal, with
//! generator weights in {1, 2} and the filtration induced from the monomial
//! weights. The constants are generally not homogeneous, so these are
//! genuinely filtered rather than graded.

use rand::Rng;

use super::{to_sparse, unit_vector, FilteredAlgebra, FilteredModule, SparseVec};
use crate::linalg::{Coordinates, Echelon, Fp};

pub fn filtered_algebra<R: Rng>(rng: &mut R, p: u64, max_dim: usize) -> FilteredAlgebra {
    let fp = Fp::new(p).expect("prime");
    loop {
        let wx = rng.gen_range(1..=2i64);
        let wy = rng.gen_range(1..=2i64);
        let monos: Vec<(u32, u32)> = (0..=3u32).flat_map(|t| (0..=t).map(move |a| (t - a, a))).collect();
        let n = monos.len();
        let idx = |a: u32, b: u32| monos.iter().position(|&m| m == (a, b));
        let weight = |k: usize| monos[k].0 as i64 * wx + monos[k].1 as i64 * wy;
        let mulp = |u: &[u32], v: &[u32]| {
            let mut out = vec![0; n];
            for (i, &x) in u.iter().enumerate() {
                for (j, &y) in v.iter().enumerate() {
                    if x != 0 && y != 0 {
                        if let Some(k) = idx(monos[i].0 + monos[j].0, monos[i].1 + monos[j].1) {
                            out[k] = fp.add(out[k], fp.mul(x, y));
                        }
                    }
                }
            }
            out
        };
        // ideal generated by 1–2 random elements of the maximal ideal
        let mut ideal = Echelon::new(fp, n);
        for _ in 0..rng.gen_range(1..=2) {
            let mut f = vec![0u32; n];
            for x in f.iter_mut().skip(1) {
                if rng.gen_bool(0.4) {
                    *x = rng.gen_range(1..fp.p());
                }
            }
            for k in 0..n {
                ideal.insert(&mulp(&unit_vector(n, k), &f));
            }
        }
        let quotient_dim = n - ideal.rank();
        if !(2..=max_dim).contains(&quotient_dim) {
            continue;
        }
        let mut acc = ideal.clone();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&k| (std::cmp::Reverse(weight(k)), k));
        let mut chosen: Vec<usize> = order.into_iter().filter(|&k| acc.insert(&unit_vector(n, k))).collect();
        chosen.sort_by_key(|&k| (weight(k), k));
        let mut full = ideal.basis();
        let jd = full.len();
        full.extend(chosen.iter().map(|&k| unit_vector(n, k)));
        let coords = Coordinates::new(fp, n, full).expect("independent");
        let d = chosen.len();
        let mut mul: Vec<SparseVec> = Vec::with_capacity(d * d);
        for &a in &chosen {
            for &b in &chosen {
                let c = coords.coords(&mulp(&unit_vector(n, a), &unit_vector(n, b))).expect("spans");
                mul.push(to_sparse(&c[jd..]));
            }
        }
        let names = chosen
            .iter()
            .map(|&k| match monos[k] {
                (0, 0) => "1".to_string(),
                (a, 0) => if a == 1 { "x".into() } else { format!("x^{a}") },
                (0, b) => if b == 1 { "y".into() } else { format!("y^{b}") },
                (a, b) => format!("x^{a}y^{b}"),
            })
            .collect();
        let aug = (0..d).map(|i| u32::from(i == 0)).collect();
        let weights = chosen.iter().map(|&k| weight(k)).collect();
        let alg = FilteredAlgebra::from_parts(fp, names, 0, mul, aug, weights).expect("shape");
        alg.validate().expect("quotient of a filtered algebra is filtered");
        return alg;
    }
}

/// A module of dimension `<= max_dim`: trivial, a truncation `A / Fil^j`, or a
/// cyclic quotient `A / A·f`, shifted by a random weight in `-1..=1`.
pub fn filtered_module<R: Rng>(rng: &mut R, a: &FilteredAlgebra, max_dim: usize) -> FilteredModule {
    let shift = rng.gen_range(-1..=1i64);
    let d = a.dim();
    for _ in 0..50 {
        let m = match rng.gen_range(0..3) {
            0 => return FilteredModule::trivial(a, shift),
            1 => {
                let j = rng.gen_range(1..=a.max_weight() + 1);
                let gens: Vec<Vec<u32>> = (0..d).filter(|&k| a.weight(k) >= j).map(|k| unit_vector(d, k)).collect();
                FilteredModule::quotient(a, &gens, shift)
            }
            _ => {
                let mut f = vec![0u32; d];
                for (k, x) in f.iter_mut().enumerate() {
                    if a.weight(k) >= 1 && rng.gen_bool(0.5) {
                        *x = rng.gen_range(1..a.p());
                    }
                }
                FilteredModule::quotient(a, &[f], shift)
            }
        };
        if let Ok(m) = m {
            if m.dim() <= max_dim {
                return m;
            }
        }
    }
    FilteredModule::trivial(a, shift)
}
