//! Transverse measures represented canonically as a pair (Haar-normalized `V`,
//! Haar-invariant `M`), with the linear evaluator on transverse functions and
//! the invariance-axiom checker.

use crate::error::{Error, Result};
use crate::groupoid::{
    kernel_convolve, validate_transverse, FiniteGroupoid, Kernel, Measure,
    Potential, SignedTransverseFunction, TransverseFunction,
};
use crate::transfer::verify_haar_invariance;

/// A Haar-invariant transverse probability, stored as `(V, M)`.
///
/// The evaluator is `Lambda(nu) = sum_y M(y) sum_{x in [y]} e^{V(x)} nu(x)`,
/// with `Lambda(nu_hat) = 1` by the normalization of `V`.
#[derive(Debug, Clone)]
pub struct TransverseMeasure {
    modulus: Potential,
    base: Measure,
}

impl TransverseMeasure {
    /// Builds `Lambda` from its canonical pair, checking that `V` is
    /// Haar-normalized, `M` is a probability, and `M` is Haar-invariant
    /// with Jacobian `e^V`.
    pub fn new(
        modulus: Potential,
        base: Measure,
        nu_hat: &TransverseFunction,
        g: &FiniteGroupoid,
    ) -> Result<Self> {
        base.require_probability(1e-9)?;
        let residual = verify_haar_invariance(&base, &modulus, nu_hat, g, None)?;
        if residual > 1e-9 {
            return Err(Error::InconsistentSample {
                index: 0,
                what: "Haar invariance of base measure".into(),
                residual,
            });
        }
        Ok(TransverseMeasure { modulus, base })
    }

    /// Builds the pair without the invariance check. For constructions that
    /// guarantee it (e.g. `invariant_from_seed`).
    pub fn from_parts_unchecked(modulus: Potential, base: Measure) -> Self {
        TransverseMeasure { modulus, base }
    }

    pub fn modulus(&self) -> &Potential {
        &self.modulus
    }

    pub fn base(&self) -> &Measure {
        &self.base
    }

    /// `Lambda(nu)` via the Jacobian form `iint e^{V(x)} nu^y(dx) dM(y)`.
    pub fn eval(&self, nu: &TransverseFunction, g: &FiniteGroupoid) -> f64 {
        self.eval_weights(|c, i| nu.class_weights(c)[i], g)
    }

    /// `Lambda(nu)` via the cocycle form `iint e^{V(x)-V(y)} nu^y(dx) dM(y)`.
    ///
    /// Agrees with [`eval`](Self::eval) whenever `M` is Haar-invariant.
    pub fn eval_cocycle_form(&self, nu: &TransverseFunction, g: &FiniteGroupoid) -> f64 {
        let mut total = 0.0;
        for y in g.space().points() {
            let my = self.base.mass(y);
            if my == 0.0 {
                continue;
            }
            let c = g.class_of(y);
            let inner: f64 = g
                .members(c)
                .iter()
                .zip(nu.class_weights(c))
                .map(|(&x, &w)| self.modulus.exp_value(x) * w)
                .sum();
            total += my * inner / self.modulus.exp_value(y);
        }
        total
    }

    /// `Lambda` extended to signed transverse functions by Hahn-Jordan split.
    pub fn eval_signed(&self, nu: &SignedTransverseFunction, g: &FiniteGroupoid) -> f64 {
        let (pos, neg) = nu.split();
        self.eval(&pos, g) - self.eval(&neg, g)
    }

    fn eval_weights(
        &self,
        weight: impl Fn(crate::groupoid::ClassId, usize) -> f64,
        g: &FiniteGroupoid,
    ) -> f64 {
        let mut total = 0.0;
        for c in g.classes() {
            let class_mass = self.base.class_mass(g, c);
            if class_mass == 0.0 {
                continue;
            }
            let inner: f64 = g
                .members(c)
                .iter()
                .enumerate()
                .map(|(i, &x)| self.modulus.exp_value(x) * weight(c, i))
                .sum();
            total += class_mass * inner;
        }
        total
    }
}

/// Residual of the density identity `Lambda(F nu_hat) = int F dM`.
pub fn density_identity_check(
    lam: &TransverseMeasure,
    f: &[f64],
    nu_hat: &TransverseFunction,
    g: &FiniteGroupoid,
) -> Result<f64> {
    let nu = SignedTransverseFunction::from_density(f, nu_hat, g)?;
    let lhs = lam.eval_signed(&nu, g);
    let rhs = lam.base().integrate(f);
    Ok((lhs - rhs).abs())
}

/// Recovers the base measure from an opaque linear evaluator via
/// `M(x) = Lambda(1_x nu_hat)`.
///
/// The evaluator must send `nu_hat` to 1 (checked within `tol`).
pub fn measure_from_transverse<E>(
    eval: E,
    nu_hat: &TransverseFunction,
    g: &FiniteGroupoid,
    tol: f64,
) -> Result<Measure>
where
    E: Fn(&TransverseFunction) -> f64,
{
    let unit = eval(nu_hat);
    if (unit - 1.0).abs() > tol {
        return Err(Error::EvaluatorNotNormalized { got: unit });
    }
    let mut mass = vec![0.0; g.n_points()];
    for x in g.space().points() {
        let c = g.class_of(x);
        let per_class: Vec<Vec<f64>> = g
            .classes()
            .map(|cc| {
                if cc == c {
                    g.members(cc)
                        .iter()
                        .enumerate()
                        .map(|(i, &p)| {
                            if p == x {
                                nu_hat.class_weights(cc)[i]
                            } else {
                                0.0
                            }
                        })
                        .collect()
                } else {
                    vec![0.0; g.members(cc).len()]
                }
            })
            .collect();
        let indicator = TransverseFunction::new(g, per_class)?;
        mass[x.0] = eval(&indicator);
    }
    Measure::new(mass)
}

/// Checks the transverse-measure axiom for one unit-row kernel:
/// computes `nu2 = nu1 * (delta lambda)` with
/// `(delta lambda)^x(ds) = e^{V(x)-V(s)} lambda^x(ds)`, verifies that `nu2`
/// is transverse, and returns `|Lambda(nu1) - Lambda(nu2)|`.
pub fn coco_invariance_check(
    lam: &TransverseMeasure,
    nu1: &TransverseFunction,
    kernel: &Kernel,
    g: &FiniteGroupoid,
) -> Result<f64> {
    kernel.validate_support(g)?;
    kernel.validate_unit_rows(g, 1e-12)?;
    let v = lam.modulus();
    let n = g.n_points();
    // weighted kernel (delta lambda)^x(s) = delta(s, x) lambda^x(s)
    let mut rows = vec![vec![0.0; n]; n];
    for x in g.space().points() {
        for &s in g.members(g.class_of(x)) {
            rows[x.0][s.0] = (v.value(x) - v.value(s)).exp() * kernel.mass(x, s);
        }
    }
    let weighted = Kernel::from_rows(rows);
    let nu2_kernel = kernel_convolve(&nu1.as_kernel(g), &weighted, g)?;
    let report = validate_transverse(&nu2_kernel, g);
    if !report.passed {
        return Err(Error::Invalid(format!(
            "convolved kernel is not transverse (row discrepancy {:e})",
            report.max_row_discrepancy
        )));
    }
    let per_class = g
        .classes()
        .map(|c| {
            let y = g.members(c)[0];
            g.members(c)
                .iter()
                .map(|&s| nu2_kernel.mass(y, s))
                .collect()
        })
        .collect();
    let nu2 = TransverseFunction::new(g, per_class)?;
    Ok((lam.eval(nu1, g) - lam.eval(&nu2, g)).abs())
}

/// The structured kernel `lambda^y(dx) = e^{V(x)} nu_hat^y(dx)`; unit-row
/// when `V` is Haar-normalized.
pub fn jacobian_kernel(
    v: &Potential,
    nu_hat: &TransverseFunction,
    g: &FiniteGroupoid,
) -> Kernel {
    let n = g.n_points();
    let mut rows = vec![vec![0.0; n]; n];
    for y in g.space().points() {
        let c = g.class_of(y);
        for (&x, &w) in g.members(c).iter().zip(nu_hat.class_weights(c)) {
            rows[y.0][x.0] = v.exp_value(x) * w;
        }
    }
    Kernel::from_rows(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groupoid::{FiniteGroupoid, PointId, PointSpace};
    use crate::test_util::{g4, g4_potential};
    use crate::transfer::{invariant_from_seed, normalize};

    fn g4_lambda() -> (FiniteGroupoid, TransverseFunction, TransverseMeasure) {
        let (g, nu) = g4();
        let v = normalize(&g4_potential(), &nu, &g);
        let m = invariant_from_seed(&v, &Measure::dirac(4, PointId(0)), &nu, &g).unwrap();
        let lam = TransverseMeasure::new(v, m, &nu, &g).unwrap();
        (g, nu, lam)
    }

    #[test]
    fn lambda_of_reference_is_one() {
        let (g, nu, lam) = g4_lambda();
        assert!((lam.eval(&nu, &g) - 1.0).abs() < 1e-14);
        assert!((lam.eval_cocycle_form(&nu, &g) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn lambda_density_fixture() {
        let (g, nu, lam) = g4_lambda();
        let f = [1.0, 2.0, 3.0, 4.0];
        let scaled = SignedTransverseFunction::from_density(&f, &nu, &g).unwrap();
        let val = lam.eval_signed(&scaled, &g);
        assert!((val - 5.0 / 3.0).abs() < 1e-14);
        assert!(density_identity_check(&lam, &f, &nu, &g).unwrap() <= 1e-14);
    }

    #[test]
    fn both_forms_agree() {
        let (g, nu, lam) = g4_lambda();
        let arbitrary = TransverseFunction::new(&g, vec![vec![0.4, 2.1], vec![0.0, 3.3]]).unwrap();
        let a = lam.eval(&arbitrary, &g);
        let b = lam.eval_cocycle_form(&arbitrary, &g);
        assert!((a - b).abs() < 1e-12);
        let _ = nu;
    }

    #[test]
    fn signed_eval_is_difference_of_parts() {
        let (g, nu, lam) = g4_lambda();
        let f = [1.0, -2.0, 3.0, -4.0];
        let signed = SignedTransverseFunction::from_density(&f, &nu, &g).unwrap();
        let (pos, neg) = signed.split();
        let direct = lam.eval_signed(&signed, &g);
        assert!((direct - (lam.eval(&pos, &g) - lam.eval(&neg, &g))).abs() < 1e-15);
    }

    #[test]
    fn density_identity_constant_one() {
        let (g, nu, lam) = g4_lambda();
        assert!(density_identity_check(&lam, &[1.0; 4], &nu, &g).unwrap() <= 1e-14);
    }

    #[test]
    fn measure_roundtrip() {
        let (g, nu, lam) = g4_lambda();
        let recovered =
            measure_from_transverse(|t| lam.eval(t, &g), &nu, &g, 1e-12).unwrap();
        for p in 0..4 {
            assert!((recovered.masses()[p] - lam.base().masses()[p]).abs() <= 1e-14);
        }
    }

    #[test]
    fn measure_from_transverse_rejects_unnormalized() {
        let (g, nu, lam) = g4_lambda();
        let err =
            measure_from_transverse(|t| 2.0 * lam.eval(t, &g), &nu, &g, 1e-12).unwrap_err();
        assert!(matches!(err, Error::EvaluatorNotNormalized { .. }));
    }

    #[test]
    fn trivial_groupoid_lambda_is_integration() {
        let space = PointSpace::new(["a", "b", "c"]).unwrap();
        let g = FiniteGroupoid::from_fibers(
            space,
            &[PointId(0), PointId(1), PointId(2)],
        )
        .unwrap();
        let nu_hat = TransverseFunction::uniform(&g);
        let m = Measure::new(vec![0.5, 0.3, 0.2]).unwrap();
        let lam = TransverseMeasure::new(Potential::zero(3), m.clone(), &nu_hat, &g).unwrap();
        // Lambda(nu) = sum nu(y) M(y)
        let nu = TransverseFunction::new(&g, vec![vec![2.0], vec![1.0], vec![4.0]]).unwrap();
        let expect = 2.0 * 0.5 + 1.0 * 0.3 + 4.0 * 0.2;
        assert!((lam.eval(&nu, &g) - expect).abs() < 1e-15);
        let recovered = measure_from_transverse(|t| lam.eval(t, &g), &nu_hat, &g, 1e-12).unwrap();
        for p in 0..3 {
            assert!((recovered.masses()[p] - m.masses()[p]).abs() < 1e-15);
        }
    }

    #[test]
    fn pair_groupoid_measure_is_exp_v_dm() {
        // single class: M(x) = e^{V(x)} m(x)
        let space = PointSpace::new(["a", "b"]).unwrap();
        let g = FiniteGroupoid::from_labelled_partition(
            space,
            &[vec!["a".into(), "b".into()]],
        )
        .unwrap();
        let m_weights = TransverseFunction::uniform(&g);
        let u = Potential::new(vec![2f64.ln(), 4f64.ln()]).unwrap();
        let v = normalize(&u, &m_weights, &g);
        let base = invariant_from_seed(&v, &Measure::dirac(2, PointId(0)), &m_weights, &g).unwrap();
        let lam = TransverseMeasure::new(v.clone(), base, &m_weights, &g).unwrap();
        let recovered =
            measure_from_transverse(|t| lam.eval(t, &g), &m_weights, &g, 1e-12).unwrap();
        for p in g.space().points() {
            let expect = v.exp_value(p) * m_weights.weight(&g, p);
            assert!((recovered.mass(p) - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn coco_invariance_with_reference_kernel() {
        let (g, nu, lam) = g4_lambda();
        let res = coco_invariance_check(&lam, &nu, &nu.as_kernel(&g), &g).unwrap();
        assert!(res <= 1e-12);
    }

    #[test]
    fn coco_identity_kernel_constant_modulus() {
        let (g, nu) = g4();
        let v = Potential::zero(4);
        let m = invariant_from_seed(&v, &Measure::uniform(4), &nu, &g).unwrap();
        let lam = TransverseMeasure::new(v, m, &nu, &g).unwrap();
        let nu1 = TransverseFunction::new(&g, vec![vec![0.2, 0.8], vec![1.5, 0.5]]).unwrap();
        let res = coco_invariance_check(&lam, &nu1, &Kernel::identity(4), &g).unwrap();
        assert_eq!(res, 0.0);
    }

    #[test]
    fn coco_jacobian_kernel_collapses_to_reference() {
        let (g, nu, lam) = g4_lambda();
        let k = jacobian_kernel(lam.modulus(), &nu, &g);
        k.validate_unit_rows(&g, 1e-12).unwrap();
        let nu1 = TransverseFunction::new(&g, vec![vec![0.7, 0.1], vec![0.4, 1.1]]).unwrap();
        let res = coco_invariance_check(&lam, &nu1, &k, &g).unwrap();
        assert!(res <= 1e-12);
        // nu1 * (delta lambda) = C nu_hat with C(y) = sum e^V nu1 over [y]
        let v = lam.modulus();
        let weighted = {
            let mut rows = vec![vec![0.0; 4]; 4];
            for x in g.space().points() {
                for &s in g.members(g.class_of(x)) {
                    rows[x.0][s.0] = (v.value(x) - v.value(s)).exp() * k.mass(x, s);
                }
            }
            Kernel::from_rows(rows)
        };
        let nu2 = kernel_convolve(&nu1.as_kernel(&g), &weighted, &g).unwrap();
        for c in g.classes() {
            let cconst: f64 = g
                .members(c)
                .iter()
                .zip(nu1.class_weights(c))
                .map(|(&x, &w)| v.exp_value(x) * w)
                .sum();
            for &y in g.members(c) {
                for (i, &s) in g.members(c).iter().enumerate() {
                    let expect = cconst * nu.class_weights(c)[i];
                    assert!((nu2.mass(y, s) - expect).abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn coco_rejects_non_unit_rows() {
        let (g, nu, lam) = g4_lambda();
        let mut rows = nu.as_kernel(&g);
        let mut raw: Vec<Vec<f64>> = (0..4).map(|y| rows.row(PointId(y)).to_vec()).collect();
        raw[0][0] += 0.5;
        rows = Kernel::from_rows(raw);
        let err = coco_invariance_check(&lam, &nu, &rows, &g).unwrap_err();
        assert!(matches!(err, Error::RowNotUnitMass { .. }));
    }
}
