//! Entropy of Haar-invariant transverse probabilities, pressure of transverse
//! functions, equilibrium construction, the Legendre involution, and the
//! pair/trivial closed forms.
//!
//! Suprema over infinite families are handled two ways: closed forms where
//! they are attained at constructible elements, and finite seeded families
//! used only to test one-sided bounds.

use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::groupoid::{
    ClassId, FiniteGroupoid, Measure, PointId, Potential, SignedTransverseFunction,
    TransverseFunction,
};
use crate::sample;
use crate::transfer::{
    invariant_from_seed, normalization_residual, normalize, u_tilde, verify_haar_invariance,
    NORMALIZED_TOL,
};
use crate::transverse::TransverseMeasure;

/// A finite family of Haar-normalized potentials with recorded provenance.
#[derive(Debug, Clone)]
pub struct NormalizedFamily {
    pub members: Vec<Potential>,
    /// Seed used for the random draws, if any.
    pub seed: Option<u64>,
}

impl NormalizedFamily {
    pub fn from_members(members: Vec<Potential>) -> Self {
        NormalizedFamily {
            members,
            seed: None,
        }
    }

    /// Closed-form candidates plus `n_draws` random normalized potentials.
    pub fn with_draws(
        mut closed_form: Vec<Potential>,
        n_draws: usize,
        seed: u64,
        nu_hat: &TransverseFunction,
        g: &FiniteGroupoid,
    ) -> Self {
        let mut rng: ChaCha8Rng = sample::rng_from_seed(seed);
        for _ in 0..n_draws {
            closed_form.push(sample::random_normalized(&mut rng, nu_hat, g));
        }
        NormalizedFamily {
            members: closed_form,
            seed: Some(seed),
        }
    }

    /// Max residual of the normalization check over the family.
    pub fn worst_residual(&self, nu_hat: &TransverseFunction, g: &FiniteGroupoid) -> f64 {
        self.members
            .iter()
            .map(|v| normalization_residual(v, nu_hat, g))
            .fold(0.0, f64::max)
    }
}

/// Closed-form entropy `h(Lambda) = -int V dM`; always <= 0.
pub fn entropy(lam: &TransverseMeasure) -> f64 {
    -lam.base().integrate(lam.modulus().values())
}

/// Sampled variational entropy `-max_F Lambda(F nu_hat)` over a finite family.
///
/// Always >= `entropy(lam)`, with equality when the modulus is in the family.
pub fn entropy_sup_estimate(
    lam: &TransverseMeasure,
    family: &NormalizedFamily,
    nu_hat: &TransverseFunction,
    g: &FiniteGroupoid,
) -> Result<f64> {
    let mut best = f64::NEG_INFINITY;
    for f in &family.members {
        let nu = SignedTransverseFunction::from_density(f.values(), nu_hat, g)?;
        best = best.max(lam.eval_signed(&nu, g));
    }
    Ok(-best)
}

/// Pressure of `nu = U nu_hat` with the set of argmax classes.
#[derive(Debug, Clone)]
pub struct PressureResult {
    pub value: f64,
    /// All classes attaining the max within 1e-12 (the tie set).
    pub argmax_classes: Vec<ClassId>,
}

/// Closed-form pressure `P(U nu_hat) = max_C log U~(C)`.
pub fn pressure(
    u: &Potential,
    nu_hat: &TransverseFunction,
    g: &FiniteGroupoid,
) -> PressureResult {
    let ut = u_tilde(u, nu_hat, g);
    let logs: Vec<f64> = ut.values().iter().map(|t| t.ln()).collect();
    let value = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let argmax_classes = g
        .classes()
        .filter(|c| (logs[c.0] - value).abs() <= 1e-12)
        .collect();
    PressureResult {
        value,
        argmax_classes,
    }
}

/// Pressure of a general transverse function via its density with respect
/// to `nu_hat` (which exists on finite classes with positive weights).
pub fn pressure_of_transverse(
    nu: &SignedTransverseFunction,
    nu_hat: &TransverseFunction,
    g: &FiniteGroupoid,
) -> Result<PressureResult> {
    let density = nu.density(nu_hat, g)?;
    Ok(pressure(&Potential::new(density)?, nu_hat, g))
}

/// Sampled variational pressure `max_i [Lambda_i(U nu_hat) + h(Lambda_i)]`
/// over consistent `(V, M)` sample pairs. Always <= `pressure(u)`.
pub fn pressure_variational_estimate(
    u: &Potential,
    nu_hat: &TransverseFunction,
    g: &FiniteGroupoid,
    samples: &[(Potential, Measure)],
) -> Result<f64> {
    let mut best = f64::NEG_INFINITY;
    for (index, (v, m)) in samples.iter().enumerate() {
        let res = normalization_residual(v, nu_hat, g);
        if res > NORMALIZED_TOL {
            return Err(Error::InconsistentSample {
                index,
                what: "sample potential is not Haar-normalized".into(),
                residual: res,
            });
        }
        let res = verify_haar_invariance(m, v, nu_hat, g, None)?;
        if res > 1e-9 {
            return Err(Error::InconsistentSample {
                index,
                what: "sample measure is not Haar-invariant for its potential".into(),
                residual: res,
            });
        }
        let lam = TransverseMeasure::from_parts_unchecked(v.clone(), m.clone());
        let nu = SignedTransverseFunction::from_density(u.values(), nu_hat, g)?;
        best = best.max(lam.eval_signed(&nu, g) + entropy(&lam));
    }
    Ok(best)
}

/// An equilibrium transverse measure together with the tie report.
#[derive(Debug, Clone)]
pub struct Equilibrium {
    pub lam: TransverseMeasure,
    /// Classes tied for the pressure max; the representative is the lowest id.
    pub ties: Vec<ClassId>,
    pub seed_point: PointId,
}

/// Builds the equilibrium for `U nu_hat`: `V = U - log U~` and
/// `M = H_V^*(delta_{y*})` with `y*` in the argmax class of lowest id.
pub fn equilibrium_for(
    u: &Potential,
    nu_hat: &TransverseFunction,
    g: &FiniteGroupoid,
) -> Result<Equilibrium> {
    let v = normalize(u, nu_hat, g);
    let p = pressure(u, nu_hat, g);
    let best_class = p.argmax_classes[0];
    let seed_point = g.members(best_class)[0];
    let m = invariant_from_seed(&v, &Measure::dirac(g.n_points(), seed_point), nu_hat, g)?;
    Ok(Equilibrium {
        lam: TransverseMeasure::from_parts_unchecked(v, m),
        ties: p.argmax_classes,
        seed_point,
    })
}

/// Legendre involution residual
/// `min_nu [-Lambda(nu) + P(nu)] - h(Lambda)` over the candidate set.
///
/// Nonnegative up to roundoff; zero when `V nu_hat` is among the candidates.
pub fn involution_check(
    lam: &TransverseMeasure,
    candidates: &[SignedTransverseFunction],
    nu_hat: &TransverseFunction,
    g: &FiniteGroupoid,
) -> Result<f64> {
    let mut best = f64::INFINITY;
    for nu in candidates {
        let p = pressure_of_transverse(nu, nu_hat, g)?;
        best = best.min(-lam.eval_signed(nu, g) + p.value);
    }
    Ok(best - entropy(lam))
}

/// The candidate `V nu_hat` at which the involution infimum is attained.
pub fn modulus_candidate(
    lam: &TransverseMeasure,
    nu_hat: &TransverseFunction,
    g: &FiniteGroupoid,
) -> Result<SignedTransverseFunction> {
    SignedTransverseFunction::from_density(lam.modulus().values(), nu_hat, g)
}

/// Which extremal groupoid a closed form applies to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtremalCase {
    /// Single class: every point related to every other.
    Pair,
    /// Singleton classes: points related only to themselves.
    Trivial,
}

/// Closed-form entropy and pressure for an extremal case, cross-checked
/// against the generic code paths on the same data.
#[derive(Debug, Clone)]
pub struct ExtremalReport {
    pub case_kind: ExtremalCase,
    pub closed_pressure: f64,
    pub generic_pressure: f64,
    pub closed_entropy: f64,
    pub generic_entropy: f64,
    /// Gibbs density `P = e^V` for the pair case.
    pub gibbs: Option<Vec<f64>>,
    pub pressure_residual: f64,
    pub entropy_residual: f64,
}

/// For [`ExtremalCase::Pair`], `data` is the potential `U` and `nu_hat` the
/// probability `m` on the single class; the closed forms are
/// `P = log sum e^U m` and `h = -sum P log P m` with `P = e^V`.
///
/// For [`ExtremalCase::Trivial`], `data` holds the transverse function's
/// value at each point; the closed forms are `P = max_y nu(y)` and `h = 0`.
pub fn extremal_closed_forms(
    case: ExtremalCase,
    data: &[f64],
    nu_hat: &TransverseFunction,
    g: &FiniteGroupoid,
) -> Result<ExtremalReport> {
    if data.len() != g.n_points() {
        return Err(Error::GroupoidMismatch {
            left: data.len(),
            right: g.n_points(),
        });
    }
    match case {
        ExtremalCase::Pair => {
            if g.n_classes() != 1 {
                return Err(Error::CaseMismatch {
                    case: "pair".into(),
                    requirement: "a single-class groupoid".into(),
                });
            }
            let u = Potential::new(data.to_vec())?;
            let closed_pressure: f64 = g
                .space()
                .points()
                .map(|p| u.exp_value(p) * nu_hat.weight(g, p))
                .sum::<f64>()
                .ln();
            let v = normalize(&u, nu_hat, g);
            let gibbs: Vec<f64> = v.exp_values().to_vec();
            let closed_entropy: f64 = -g
                .space()
                .points()
                .map(|p| gibbs[p.0] * gibbs[p.0].ln() * nu_hat.weight(g, p))
                .sum::<f64>();
            let generic_pressure = pressure(&u, nu_hat, g).value;
            let eq = equilibrium_for(&u, nu_hat, g)?;
            let generic_entropy = entropy(&eq.lam);
            Ok(ExtremalReport {
                case_kind: case,
                closed_pressure,
                generic_pressure,
                closed_entropy,
                generic_entropy,
                gibbs: Some(gibbs),
                pressure_residual: (closed_pressure - generic_pressure).abs(),
                entropy_residual: (closed_entropy - generic_entropy).abs(),
            })
        }
        ExtremalCase::Trivial => {
            if g.classes().any(|c| g.members(c).len() != 1) {
                return Err(Error::CaseMismatch {
                    case: "trivial".into(),
                    requirement: "singleton classes only".into(),
                });
            }
            let closed_pressure = data.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let closed_entropy = 0.0;
            let nu = SignedTransverseFunction::from_density(data, nu_hat, g)?;
            let generic_pressure = pressure_of_transverse(&nu, nu_hat, g)?.value;
            // the only normalized potential is V = 0, so every Lambda has h = 0
            let v = Potential::zero(g.n_points());
            let m = invariant_from_seed(&v, &Measure::uniform(g.n_points()), nu_hat, g)?;
            let generic_entropy = entropy(&TransverseMeasure::from_parts_unchecked(v, m));
            Ok(ExtremalReport {
                case_kind: case,
                closed_pressure,
                generic_pressure,
                closed_entropy,
                generic_entropy,
                gibbs: None,
                pressure_residual: (closed_pressure - generic_pressure).abs(),
                entropy_residual: (closed_entropy - generic_entropy).abs(),
            })
        }
    }
}
