//! Fiber groupoids of finite maps and Markov subshifts: conditional
//! disintegration of an invariant measure over fibers, the per-fiber
//! Jacobian, and the Kolmogorov-Sinai entropy computed from it.
//!
//! Everything here is at atomic scale: fibers are finite sets, conditionals
//! are exact ratios, and the Jacobian cylinder-ratio limit stabilizes at
//! depth one for Markov measures.

use crate::error::{Error, Result};
use crate::groupoid::{ClassId, FiniteGroupoid, Measure, PointId};

/// A finite-state Markov chain with a stationary distribution.
#[derive(Debug, Clone)]
pub struct MarkovSpec {
    transition: Vec<Vec<f64>>,
    stationary: Vec<f64>,
}

const ROW_TOL: f64 = 1e-12;
const STATIONARY_TOL: f64 = 1e-12;

impl MarkovSpec {
    /// Validates row-stochasticity; when `stationary` is absent it is
    /// computed by damped fixed-point iteration, otherwise `pi P = pi` is
    /// checked within 1e-12.
    pub fn new(transition: Vec<Vec<f64>>, stationary: Option<Vec<f64>>) -> Result<Self> {
        let d = transition.len();
        for (row, r) in transition.iter().enumerate() {
            if r.len() != d {
                return Err(Error::Invalid(format!(
                    "transition row {row} has length {}, expected {d}",
                    r.len()
                )));
            }
            if r.iter().any(|&p| p < 0.0 || !p.is_finite()) {
                return Err(Error::Invalid(format!(
                    "transition row {row} has a negative or non-finite entry"
                )));
            }
            let sum: f64 = r.iter().sum();
            if (sum - 1.0).abs() > ROW_TOL {
                return Err(Error::RowNotStochastic { row, sum });
            }
        }
        let stationary = match stationary {
            Some(pi) => {
                if pi.len() != d {
                    return Err(Error::Invalid(format!(
                        "stationary vector has length {}, expected {d}",
                        pi.len()
                    )));
                }
                if pi.iter().any(|&p| p < 0.0 || !p.is_finite()) {
                    return Err(Error::Invalid(
                        "stationary vector has a negative or non-finite entry".into(),
                    ));
                }
                let total: f64 = pi.iter().sum();
                if (total - 1.0).abs() > STATIONARY_TOL {
                    return Err(Error::NotProbability { total });
                }
                for state in 0..d {
                    let image: f64 = (0..d).map(|i| pi[i] * transition[i][state]).sum();
                    let residual = (image - pi[state]).abs();
                    if residual > STATIONARY_TOL {
                        return Err(Error::NotStationary { state, residual });
                    }
                }
                pi
            }
            None => stationary_fixed_point(&transition)?,
        };
        Ok(MarkovSpec {
            transition,
            stationary,
        })
    }

    pub fn d(&self) -> usize {
        self.transition.len()
    }

    pub fn transition(&self) -> &[Vec<f64>] {
        &self.transition
    }

    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }

    /// Mass of the cylinder `[w_0 .. w_n]` under the stationary Markov measure.
    pub fn cylinder_mass(&self, word: &[usize]) -> f64 {
        if word.is_empty() {
            return 1.0;
        }
        let mut mass = self.stationary[word[0]];
        for pair in word.windows(2) {
            mass *= self.transition[pair[0]][pair[1]];
        }
        mass
    }
}

/// Damped iteration `pi <- (pi + pi P) / 2`; the damping averages out the
/// cyclic behaviour of periodic chains so the iteration always converges.
fn stationary_fixed_point(transition: &[Vec<f64>]) -> Result<Vec<f64>> {
    let d = transition.len();
    let mut pi = vec![1.0 / d as f64; d];
    let max_iters = 200_000;
    let mut residual = f64::INFINITY;
    for _ in 0..max_iters {
        let mut next = vec![0.0; d];
        for i in 0..d {
            for j in 0..d {
                next[j] += pi[i] * transition[i][j];
            }
        }
        residual = 0.0;
        for j in 0..d {
            next[j] = 0.5 * (pi[j] + next[j]);
            residual = residual.max((next[j] - pi[j]).abs());
        }
        pi = next;
        if residual <= 1e-15 {
            let total: f64 = pi.iter().sum();
            for p in &mut pi {
                *p /= total;
            }
            return Ok(pi);
        }
    }
    Err(Error::NonConvergence {
        iters: max_iters,
        residual,
    })
}

/// Conditional measures of `M` over the classes of a fiber groupoid.
#[derive(Debug, Clone)]
pub struct Disintegration {
    /// Per class, the conditional masses over its members in class order.
    pub conditionals: Vec<Vec<f64>>,
    /// Classes of zero total mass, where the uniform conditional was chosen.
    pub uniform_fallback_classes: Vec<ClassId>,
    /// Worst atom residual of `int f dM = int int f dmu^x dM(x)` over
    /// indicator test functions.
    pub identity_residual: f64,
}

impl Disintegration {
    /// Conditional mass at `p` given its own class.
    pub fn conditional_at(&self, g: &FiniteGroupoid, p: PointId) -> f64 {
        self.conditionals[g.class_of(p).0][g.position_in_class(p)]
    }
}

/// Checks that `map` is a self-map whose fibers are exactly the classes of
/// `g`, then that `M` is invariant: `M(T^{-1}{y}) = M({y})` for every atom.
pub fn check_map_invariance(
    map: &[PointId],
    m: &Measure,
    g: &FiniteGroupoid,
) -> Result<()> {
    let n = g.n_points();
    if map.len() != n || m.len() != n {
        return Err(Error::GroupoidMismatch {
            left: map.len().max(m.len()),
            right: n,
        });
    }
    for p in g.space().points() {
        if map[p.0].0 >= n {
            return Err(Error::MapOutsideSpace(g.space().label(p).to_string()));
        }
    }
    for c in g.classes() {
        let members = g.members(c);
        let image = map[members[0].0];
        if members.iter().any(|&x| map[x.0] != image) {
            return Err(Error::Invalid(format!(
                "class {} is not a fiber of the map: images differ",
                g.class_label(c)
            )));
        }
    }
    for y in g.space().points() {
        let preimage: f64 = g
            .space()
            .points()
            .filter(|&x| map[x.0] == y)
            .map(|x| m.mass(x))
            .sum();
        let residual = (preimage - m.mass(y)).abs();
        if residual > 1e-10 {
            return Err(Error::NotInvariant {
                atom: g.space().label(y).to_string(),
                residual,
            });
        }
    }
    Ok(())
}

/// Disintegrates `M` over the classes of `g`: `mu^x = M(. cap [x]) / M([x])`
/// on classes of positive mass, uniform on classes of zero mass (any choice
/// is M-a.e. equivalent). When `map` is supplied, `M` must be invariant for
/// it and the classes of `g` must be its fibers.
pub fn disintegrate(
    map: Option<&[PointId]>,
    m: &Measure,
    g: &FiniteGroupoid,
) -> Result<Disintegration> {
    if m.len() != g.n_points() {
        return Err(Error::GroupoidMismatch {
            left: m.len(),
            right: g.n_points(),
        });
    }
    if let Some(map) = map {
        check_map_invariance(map, m, g)?;
    }
    let mut conditionals: Vec<Vec<f64>> = Vec::with_capacity(g.n_classes());
    let mut uniform_fallback_classes = Vec::new();
    for c in g.classes() {
        let members = g.members(c);
        let total = m.class_mass(g, c);
        if total > 0.0 {
            conditionals.push(members.iter().map(|&x| m.mass(x) / total).collect());
        } else {
            let k = members.len() as f64;
            conditionals.push(members.iter().map(|_| 1.0 / k).collect());
            uniform_fallback_classes.push(c);
        }
    }
    // reconstruction identity on every atom indicator:
    // sum_x M(x) mu^x({z}) must equal M(z)
    let mut identity_residual: f64 = 0.0;
    for c in g.classes() {
        let members = g.members(c);
        let total = m.class_mass(g, c);
        for (pos, &z) in members.iter().enumerate() {
            let reconstructed = total * conditionals[c.0][pos];
            identity_residual = identity_residual.max((reconstructed - m.mass(z)).abs());
        }
    }
    if identity_residual > 1e-12 {
        return Err(Error::Invalid(format!(
            "disintegration reconstruction residual {identity_residual:e} exceeds 1e-12"
        )));
    }
    Ok(Disintegration {
        conditionals,
        uniform_fallback_classes,
        identity_residual,
    })
}

/// Per-point Jacobian `J(z) = mu^z({z})`; sums to 1 over every fiber.
pub fn haar_jacobian(
    map: Option<&[PointId]>,
    m: &Measure,
    g: &FiniteGroupoid,
) -> Result<Vec<f64>> {
    let dis = disintegrate(map, m, g)?;
    Ok(g.space()
        .points()
        .map(|p| dis.conditional_at(g, p))
        .collect())
}

/// The Markov-subshift Jacobian `J(x0, x1) = pi(x0) P(x0, x1) / pi(x1)`.
///
/// This is the stabilized value of the cylinder ratio
/// `M([x0..xn]) / M([x1..xn])`, which for a Markov measure is independent
/// of `n >= 1`. Column sums over `x0` are 1 by stationarity.
#[allow(clippy::needless_range_loop)]
pub fn markov_jacobian(spec: &MarkovSpec) -> Result<Vec<Vec<f64>>> {
    let d = spec.d();
    for state in 0..d {
        if spec.stationary()[state] <= 0.0 {
            return Err(Error::ZeroStationaryMass { state });
        }
    }
    let mut j = vec![vec![0.0; d]; d];
    for x0 in 0..d {
        for x1 in 0..d {
            j[x0][x1] = spec.stationary()[x0] * spec.transition()[x0][x1] / spec.stationary()[x1];
        }
    }
    Ok(j)
}

/// Kolmogorov-Sinai entropy `-sum pi(x0) P(x0,x1) log J(x0,x1)`, with the
/// convention `0 log 0 := 0`. Equals the classical Markov entropy rate
/// `-sum pi_i P_ij log P_ij` because the stationary factors telescope.
#[allow(clippy::needless_range_loop)]
pub fn ks_entropy_via_jacobian(spec: &MarkovSpec) -> Result<f64> {
    let j = markov_jacobian(spec)?;
    let d = spec.d();
    let mut h = 0.0;
    for x0 in 0..d {
        for x1 in 0..d {
            let w = spec.stationary()[x0] * spec.transition()[x0][x1];
            if w > 0.0 {
                h -= w * j[x0][x1].ln();
            }
        }
    }
    Ok(h)
}
