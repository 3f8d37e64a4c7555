//! Shared fixtures for tests and examples.

use crate::groupoid::{FiniteGroupoid, PointSpace, Potential, TransverseFunction};

/// Four points p1..p4 split into two 2-point classes, uniform reference weights.
pub fn g4() -> (FiniteGroupoid, TransverseFunction) {
    let space = PointSpace::new(["p1", "p2", "p3", "p4"]).unwrap();
    let g = FiniteGroupoid::from_labelled_partition(
        space,
        &[
            vec!["p1".into(), "p2".into()],
            vec!["p3".into(), "p4".into()],
        ],
    )
    .unwrap();
    let nu_hat = TransverseFunction::uniform(&g);
    (g, nu_hat)
}

/// The potential with `exp(U) = (2, 4, 1, 1)` on the g4 fixture.
pub fn g4_potential() -> Potential {
    Potential::new(vec![2f64.ln(), 4f64.ln(), 0.0, 0.0]).unwrap()
}
