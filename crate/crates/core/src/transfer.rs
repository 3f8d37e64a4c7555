//! The transfer operator `H_U(f)(y) = sum_{x in [y]} e^{U(x)} f(x) nu_hat(x)`,
//! potential normalization, and Haar-invariant probabilities as fixed points of
//! the dual operator.

use crate::error::{Error, Result};
use crate::groupoid::{
    ClassId, FiniteGroupoid, Measure, ModularFunction, PointId, Potential, TransverseFunction,
};

/// Tolerance for the checked "Haar-normalized" property.
pub const NORMALIZED_TOL: f64 = 1e-9;

/// A real function constant on classes, stored once per class.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassFunction {
    values: Vec<f64>,
}

impl ClassFunction {
    pub fn new(values: Vec<f64>) -> Self {
        ClassFunction { values }
    }

    pub fn value(&self, c: ClassId) -> f64 {
        self.values[c.0]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Lifts to a point function: value at `x` is the value on `[x]`.
    pub fn lift(&self, g: &FiniteGroupoid) -> Vec<f64> {
        g.space()
            .points()
            .map(|p| self.values[g.class_of(p).0])
            .collect()
    }
}

/// `U~(C) = sum_{x in C} e^{U(x)} nu_hat(x)`, the eigenvalue function of `H_U`.
pub fn u_tilde(
    u: &Potential,
    nu_hat: &TransverseFunction,
    g: &FiniteGroupoid,
) -> ClassFunction {
    let values = g
        .classes()
        .map(|c| {
            g.members(c)
                .iter()
                .zip(nu_hat.class_weights(c))
                .map(|(&p, &w)| u.exp_value(p) * w)
                .sum()
        })
        .collect();
    ClassFunction::new(values)
}

/// `V = U - log(U~)`, Haar-normalized for `(G, nu_hat)`.
pub fn normalize(
    u: &Potential,
    nu_hat: &TransverseFunction,
    g: &FiniteGroupoid,
) -> Potential {
    let ut = u_tilde(u, nu_hat, g);
    let values = g
        .space()
        .points()
        .map(|p| u.value(p) - ut.value(g.class_of(p)).ln())
        .collect();
    Potential::new(values).expect("normalized potential stays finite")
}

/// Maximum per-class residual of `sum e^V nu_hat - 1`.
pub fn normalization_residual(
    v: &Potential,
    nu_hat: &TransverseFunction,
    g: &FiniteGroupoid,
) -> f64 {
    u_tilde(v, nu_hat, g)
        .values()
        .iter()
        .map(|t| (t - 1.0).abs())
        .fold(0.0, f64::max)
}

fn require_normalized(
    v: &Potential,
    nu_hat: &TransverseFunction,
    g: &FiniteGroupoid,
) -> Result<()> {
    let ut = u_tilde(v, nu_hat, g);
    for c in g.classes() {
        let residual = (ut.value(c) - 1.0).abs();
        if residual > NORMALIZED_TOL {
            return Err(Error::NotNormalized {
                class: g.class_label(c),
                residual,
            });
        }
    }
    Ok(())
}

/// Applies `H_U` to a point function; the output is constant on classes.
pub fn apply_h(
    u: &Potential,
    f: &[f64],
    nu_hat: &TransverseFunction,
    g: &FiniteGroupoid,
) -> ClassFunction {
    let values = g
        .classes()
        .map(|c| {
            g.members(c)
                .iter()
                .zip(nu_hat.class_weights(c))
                .map(|(&p, &w)| u.exp_value(p) * f[p.0] * w)
                .sum()
        })
        .collect();
    ClassFunction::new(values)
}

/// The dual operator `H_V^*`: mass at `x` becomes `e^{V(x)} nu_hat(x) M([x])`.
///
/// Requires `V` Haar-normalized (checked within [`NORMALIZED_TOL`]).
pub fn dual_apply(
    v: &Potential,
    m: &Measure,
    nu_hat: &TransverseFunction,
    g: &FiniteGroupoid,
) -> Result<Measure> {
    require_normalized(v, nu_hat, g)?;
    let class_mass: Vec<f64> = g.classes().map(|c| m.class_mass(g, c)).collect();
    let mass = g
        .space()
        .points()
        .map(|p| v.exp_value(p) * nu_hat.weight(g, p) * class_mass[g.class_of(p).0])
        .collect();
    Measure::new(mass)
}

/// The unique Haar-invariant probability with Jacobian `e^V` agreeing with the
/// seed on class-constant functions: `M = H_V^*(mu)`.
pub fn invariant_from_seed(
    v: &Potential,
    seed: &Measure,
    nu_hat: &TransverseFunction,
    g: &FiniteGroupoid,
) -> Result<Measure> {
    seed.require_probability(1e-12)?;
    dual_apply(v, seed, nu_hat, g)
}

/// A bounded function on the groupoid, stored densely as `f(x, y)`.
#[derive(Debug, Clone)]
pub struct PairFunction {
    values: Vec<Vec<f64>>,
}

impl PairFunction {
    pub fn new(values: Vec<Vec<f64>>) -> Self {
        PairFunction { values }
    }

    /// The indicator of the single ordered pair `(a, b)`.
    pub fn indicator(n: usize, a: PointId, b: PointId) -> Self {
        let mut values = vec![vec![0.0; n]; n];
        values[a.0][b.0] = 1.0;
        PairFunction { values }
    }

    pub fn eval(&self, x: PointId, y: PointId) -> f64 {
        self.values[x.0][y.0]
    }
}

fn invariance_residual_for(
    m: &Measure,
    weight: impl Fn(PointId, PointId) -> f64, // weight on (y, x) for the LHS integrand
    rweight: impl Fn(PointId, PointId) -> f64, // weight on (y, x) for the RHS integrand
    f: &PairFunction,
    g: &FiniteGroupoid,
) -> f64 {
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for y in g.space().points() {
        let my = m.mass(y);
        if my == 0.0 {
            continue;
        }
        for &x in g.members(g.class_of(y)) {
            lhs += my * f.eval(y, x) * weight(y, x);
            rhs += my * f.eval(x, y) * rweight(y, x);
        }
    }
    (lhs - rhs).abs()
}

/// Max residual of the Haar-invariance identity
/// `iint f(y,x) e^{V(x)} nu_hat^y(dx) dM(y) = iint f(x,y) e^{V(x)} nu_hat^y(dx) dM(y)`
/// over the given test family, or over all in-class pair indicators when
/// `test_functions` is `None` (exhaustive and complete for atomic measures).
pub fn verify_haar_invariance(
    m: &Measure,
    v: &Potential,
    nu_hat: &TransverseFunction,
    g: &FiniteGroupoid,
    test_functions: Option<&[PairFunction]>,
) -> Result<f64> {
    require_normalized(v, nu_hat, g)?;
    let w = |_y: PointId, x: PointId| v.exp_value(x) * nu_hat.weight(g, x);
    let mut max = 0.0f64;
    match test_functions {
        Some(fns) => {
            for f in fns {
                max = max.max(invariance_residual_for(m, w, w, f, g));
            }
        }
        None => {
            // pair indicator f = 1_{(a,b)}: residual is
            // |e^{V(b)} nu_hat(b) M(a) - e^{V(a)} nu_hat(a) M(b)|
            for c in g.classes() {
                for &a in g.members(c) {
                    for &b in g.members(c) {
                        let lhs = v.exp_value(b) * nu_hat.weight(g, b) * m.mass(a);
                        let rhs = v.exp_value(a) * nu_hat.weight(g, a) * m.mass(b);
                        max = max.max((lhs - rhs).abs());
                    }
                }
            }
        }
    }
    Ok(max)
}

/// Max residual of the quasi-invariance identity
/// `iint f(y,x) nu_hat^y(dx) dM(y) = iint f(x,y) delta(x,y)^{-1} nu_hat^y(dx) dM(y)`.
pub fn verify_quasi_invariance(
    m: &Measure,
    delta: &ModularFunction,
    nu_hat: &TransverseFunction,
    g: &FiniteGroupoid,
    test_functions: Option<&[PairFunction]>,
) -> Result<f64> {
    let mut max = 0.0f64;
    match test_functions {
        Some(fns) => {
            for f in fns {
                let mut lhs = 0.0;
                let mut rhs = 0.0;
                for y in g.space().points() {
                    let my = m.mass(y);
                    if my == 0.0 {
                        continue;
                    }
                    for &x in g.members(g.class_of(y)) {
                        let w = nu_hat.weight(g, x);
                        lhs += my * f.eval(y, x) * w;
                        rhs += my * f.eval(x, y) * w / delta.eval(g, x, y)?;
                    }
                }
                max = max.max((lhs - rhs).abs());
            }
        }
        None => {
            // pair indicator f = 1_{(a,b)}:
            // LHS = nu_hat(b) M(a), RHS = delta(a,b)^{-1} nu_hat(a) M(b)
            for c in g.classes() {
                for &a in g.members(c) {
                    for &b in g.members(c) {
                        let lhs = nu_hat.weight(g, b) * m.mass(a);
                        let rhs = nu_hat.weight(g, a) * m.mass(b) / delta.eval(g, a, b)?;
                        max = max.max((lhs - rhs).abs());
                    }
                }
            }
        }
    }
    Ok(max)
}
