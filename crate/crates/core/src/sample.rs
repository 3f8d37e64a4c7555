//! Seeded random generators for potentials, measures, kernels and small
//! groupoids. Sampling is a falsification device for one-sided bounds, so
//! every draw is reproducible from an explicit seed.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::groupoid::{
    FiniteGroupoid, Kernel, Measure, PointSpace, Potential, TransverseFunction,
};
use crate::transfer::{invariant_from_seed, normalize};

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A potential with values uniform in `[-scale, scale]`.
pub fn random_potential(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Potential {
    let values = (0..n).map(|_| rng.gen_range(-scale..scale)).collect();
    Potential::new(values).unwrap()
}

/// A Haar-normalized potential: unconstrained draw pushed through `normalize`.
pub fn random_normalized(
    rng: &mut ChaCha8Rng,
    nu_hat: &TransverseFunction,
    g: &FiniteGroupoid,
) -> Potential {
    let u = random_potential(rng, g.n_points(), 1.0);
    normalize(&u, nu_hat, g)
}

/// A strictly positive probability on `n` points.
pub fn random_probability(rng: &mut ChaCha8Rng, n: usize) -> Measure {
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
    let sum: f64 = raw.iter().sum();
    Measure::new(raw.into_iter().map(|w| w / sum).collect()).unwrap()
}

/// A random partition groupoid with at most `max_points` points and
/// `max_classes` classes, together with a random probability transverse
/// function with strictly positive weights.
pub fn random_groupoid(
    rng: &mut ChaCha8Rng,
    max_points: usize,
    max_classes: usize,
) -> (FiniteGroupoid, TransverseFunction) {
    let n_classes = rng.gen_range(1..=max_classes);
    let n_points = rng.gen_range(n_classes..=max_points.max(n_classes));
    let labels: Vec<String> = (0..n_points).map(|i| format!("p{}", i + 1)).collect();
    let space = PointSpace::new(labels).unwrap();
    // one point per class, then scatter the rest
    let mut classes: Vec<Vec<crate::groupoid::PointId>> =
        (0..n_classes).map(|c| vec![crate::groupoid::PointId(c)]).collect();
    for p in n_classes..n_points {
        let c = rng.gen_range(0..n_classes);
        classes[c].push(crate::groupoid::PointId(p));
    }
    let g = FiniteGroupoid::from_partition(space, classes).unwrap();
    let per_class = g
        .classes()
        .map(|c| {
            let raw: Vec<f64> = g.members(c).iter().map(|_| rng.gen_range(0.1..1.0)).collect();
            let sum: f64 = raw.iter().sum();
            raw.into_iter().map(|w| w / sum).collect()
        })
        .collect();
    let nu_hat = TransverseFunction::new(&g, per_class).unwrap();
    (g, nu_hat)
}

/// A nonnegative transverse function with weights in `[0, scale)`.
pub fn random_transverse(rng: &mut ChaCha8Rng, g: &FiniteGroupoid, scale: f64) -> TransverseFunction {
    let per_class = g
        .classes()
        .map(|c| g.members(c).iter().map(|_| rng.gen_range(0.0..scale)).collect())
        .collect();
    TransverseFunction::new(g, per_class).unwrap()
}

/// A kernel supported on classes whose rows all have total mass 1.
pub fn random_unit_row_kernel(rng: &mut ChaCha8Rng, g: &FiniteGroupoid) -> Kernel {
    let n = g.n_points();
    let mut rows = vec![vec![0.0; n]; n];
    for y in g.space().points() {
        let members = g.members(g.class_of(y));
        let raw: Vec<f64> = members.iter().map(|_| rng.gen_range(0.05..1.0)).collect();
        let sum: f64 = raw.iter().sum();
        for (&x, w) in members.iter().zip(raw) {
            rows[y.0][x.0] = w / sum;
        }
    }
    Kernel::from_rows(rows)
}

/// A consistent `(V, M)` pair: `V` random normalized, `M` Haar-invariant
/// built from a random probability seed.
pub fn random_invariant_pair(
    rng: &mut ChaCha8Rng,
    nu_hat: &TransverseFunction,
    g: &FiniteGroupoid,
) -> (Potential, Measure) {
    let v = random_normalized(rng, nu_hat, g);
    let seed = random_probability(rng, g.n_points());
    let m = invariant_from_seed(&v, &seed, nu_hat, g).unwrap();
    (v, m)
}
