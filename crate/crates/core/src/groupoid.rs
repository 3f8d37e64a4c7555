//! Finite equivalence-relation groupoids, kernels, transverse functions and
//! modular functions, together with their axiom checkers.
//!
//! A groupoid here is a finite point set partitioned into classes; every
//! integral over a class becomes a finite sum in fixed point-index order.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// Index of a point inside a [`PointSpace`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PointId(pub usize);

/// Index of an equivalence class inside a [`FiniteGroupoid`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClassId(pub usize);

/// An ordered set of distinct point labels with a dense integer index.
#[derive(Debug, Clone)]
pub struct PointSpace {
    labels: Vec<String>,
    index: HashMap<String, usize>,
}

impl PointSpace {
    pub fn new<I, S>(labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        let mut index = HashMap::with_capacity(labels.len());
        for (i, l) in labels.iter().enumerate() {
            if index.insert(l.clone(), i).is_some() {
                return Err(Error::DuplicatePoint(l.clone()));
            }
        }
        Ok(PointSpace { labels, index })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn id(&self, label: &str) -> Option<PointId> {
        self.index.get(label).copied().map(PointId)
    }

    pub fn label(&self, p: PointId) -> &str {
        &self.labels[p.0]
    }

    pub fn points(&self) -> impl Iterator<Item = PointId> {
        (0..self.labels.len()).map(PointId)
    }
}

/// A finite point set partitioned into equivalence classes.
///
/// Reflexivity, symmetry and transitivity hold by construction: membership in
/// the same block of the partition is the relation.
#[derive(Debug, Clone)]
pub struct FiniteGroupoid {
    space: PointSpace,
    class_of: Vec<ClassId>,
    pos_in_class: Vec<usize>,
    classes: Vec<Vec<PointId>>,
}

impl FiniteGroupoid {
    /// Builds the groupoid from an explicit partition.
    pub fn from_partition(space: PointSpace, classes: Vec<Vec<PointId>>) -> Result<Self> {
        let n = space.len();
        let mut class_of = vec![usize::MAX; n];
        let mut pos_in_class = vec![0usize; n];
        for (c, members) in classes.iter().enumerate() {
            for (pos, &p) in members.iter().enumerate() {
                if p.0 >= n {
                    return Err(Error::UnknownPoint(format!("#{}", p.0)));
                }
                if class_of[p.0] != usize::MAX {
                    return Err(Error::OverlappingPoint(space.label(p).to_owned()));
                }
                class_of[p.0] = c;
                pos_in_class[p.0] = pos;
            }
        }
        if let Some(p) = class_of.iter().position(|&c| c == usize::MAX) {
            return Err(Error::UncoveredPoint(space.label(PointId(p)).to_owned()));
        }
        if classes.iter().any(|m| m.is_empty()) {
            return Err(Error::Invalid("empty class in partition".into()));
        }
        Ok(FiniteGroupoid {
            space,
            class_of: class_of.into_iter().map(ClassId).collect(),
            pos_in_class,
            classes,
        })
    }

    /// Builds the groupoid from labelled class lists.
    pub fn from_labelled_partition(space: PointSpace, classes: &[Vec<String>]) -> Result<Self> {
        let classes = classes
            .iter()
            .map(|members| {
                members
                    .iter()
                    .map(|l| space.id(l).ok_or_else(|| Error::UnknownPoint(l.clone())))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_partition(space, classes)
    }

    /// Builds the fiber groupoid of a total map: `x ~ y` iff `T(x) = T(y)`.
    ///
    /// Classes are the nonempty fibers, ordered by first appearance.
    pub fn from_fibers(space: PointSpace, map: &[PointId]) -> Result<Self> {
        let n = space.len();
        if map.len() != n {
            return Err(Error::Invalid(format!(
                "map has {} entries for {} points",
                map.len(),
                n
            )));
        }
        for (x, &y) in map.iter().enumerate() {
            if y.0 >= n {
                return Err(Error::MapOutsideSpace(space.label(PointId(x)).to_owned()));
            }
        }
        let mut fiber_of_target: HashMap<usize, usize> = HashMap::new();
        let mut classes: Vec<Vec<PointId>> = Vec::new();
        for (x, &y) in map.iter().enumerate() {
            let c = *fiber_of_target.entry(y.0).or_insert_with(|| {
                classes.push(Vec::new());
                classes.len() - 1
            });
            classes[c].push(PointId(x));
        }
        Self::from_partition(space, classes)
    }

    pub fn space(&self) -> &PointSpace {
        &self.space
    }

    pub fn n_points(&self) -> usize {
        self.space.len()
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn class_of(&self, p: PointId) -> ClassId {
        self.class_of[p.0]
    }

    pub fn position_in_class(&self, p: PointId) -> usize {
        self.pos_in_class[p.0]
    }

    pub fn members(&self, c: ClassId) -> &[PointId] {
        &self.classes[c.0]
    }

    pub fn classes(&self) -> impl Iterator<Item = ClassId> {
        (0..self.classes.len()).map(ClassId)
    }

    pub fn same_class(&self, x: PointId, y: PointId) -> bool {
        self.class_of[x.0] == self.class_of[y.0]
    }

    /// Display name for a class ("C1", "C2", ... in construction order).
    pub fn class_label(&self, c: ClassId) -> String {
        format!("C{}", c.0 + 1)
    }

    pub fn class_by_label(&self, label: &str) -> Option<ClassId> {
        let idx: usize = label.strip_prefix('C')?.parse().ok()?;
        if idx >= 1 && idx <= self.classes.len() {
            Some(ClassId(idx - 1))
        } else {
            None
        }
    }
}

/// A kernel: one finite measure row per point, supported on the point's class.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    rows: Vec<Vec<f64>>,
}

impl Kernel {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        Kernel { rows }
    }

    /// The identity kernel: unit mass at the base point of each row.
    pub fn identity(n: usize) -> Self {
        let mut rows = vec![vec![0.0; n]; n];
        for (y, row) in rows.iter_mut().enumerate() {
            row[y] = 1.0;
        }
        Kernel { rows }
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, y: PointId) -> &[f64] {
        &self.rows[y.0]
    }

    pub fn mass(&self, y: PointId, x: PointId) -> f64 {
        self.rows[y.0][x.0]
    }

    /// Checks the support invariant: row at `y` vanishes outside `[y]`.
    pub fn validate_support(&self, g: &FiniteGroupoid) -> Result<()> {
        if self.rows.len() != g.n_points() {
            return Err(Error::GroupoidMismatch {
                left: self.rows.len(),
                right: g.n_points(),
            });
        }
        for y in g.space().points() {
            for x in g.space().points() {
                let mass = self.rows[y.0][x.0];
                if mass != 0.0 && !g.same_class(x, y) {
                    return Err(Error::SupportViolation {
                        y: g.space().label(y).to_owned(),
                        x: g.space().label(x).to_owned(),
                        mass,
                    });
                }
            }
        }
        Ok(())
    }

    /// Checks that every row has total mass 1.
    pub fn validate_unit_rows(&self, g: &FiniteGroupoid, tol: f64) -> Result<()> {
        for y in g.space().points() {
            let sum: f64 = self.rows[y.0].iter().sum();
            if (sum - 1.0).abs() > tol {
                return Err(Error::RowNotUnitMass {
                    y: g.space().label(y).to_owned(),
                    sum,
                });
            }
        }
        Ok(())
    }
}

/// Convolution of two kernels: `(l1 * l2)^y(s) = sum_x l1^y(x) l2^x(s)`.
pub fn kernel_convolve(l1: &Kernel, l2: &Kernel, g: &FiniteGroupoid) -> Result<Kernel> {
    l1.validate_support(g)?;
    l2.validate_support(g)?;
    let n = g.n_points();
    let mut rows = vec![vec![0.0; n]; n];
    for y in g.space().points() {
        let c = g.class_of(y);
        // both factors are supported on [y], so only in-class x and s contribute
        for &x in g.members(c) {
            let w = l1.mass(y, x);
            if w == 0.0 {
                continue;
            }
            for &s in g.members(c) {
                rows[y.0][s.0] += w * l2.mass(x, s);
            }
        }
    }
    Ok(Kernel { rows })
}

/// A kernel constant on classes, stored once per class.
///
/// Weights are aligned with the member order of each class. The probability
/// case (each class summing to 1) plays the role of the a priori measure.
#[derive(Debug, Clone, PartialEq)]
pub struct TransverseFunction {
    per_class: Vec<Vec<f64>>,
}

impl TransverseFunction {
    pub fn new(g: &FiniteGroupoid, per_class: Vec<Vec<f64>>) -> Result<Self> {
        if per_class.len() != g.n_classes() {
            return Err(Error::GroupoidMismatch {
                left: per_class.len(),
                right: g.n_classes(),
            });
        }
        for c in g.classes() {
            if per_class[c.0].len() != g.members(c).len() {
                return Err(Error::Invalid(format!(
                    "class {} has {} members but {} weights",
                    g.class_label(c),
                    g.members(c).len(),
                    per_class[c.0].len()
                )));
            }
            if per_class[c.0].iter().any(|&w| w < 0.0 || !w.is_finite()) {
                return Err(Error::Invalid(format!(
                    "negative or non-finite weight in class {}",
                    g.class_label(c)
                )));
            }
        }
        Ok(TransverseFunction { per_class })
    }

    /// The uniform probability transverse function: weight `1/|C|` per member.
    pub fn uniform(g: &FiniteGroupoid) -> Self {
        let per_class = g
            .classes()
            .map(|c| {
                let k = g.members(c).len();
                vec![1.0 / k as f64; k]
            })
            .collect();
        TransverseFunction { per_class }
    }

    /// Normalizes each class's weights to sum to 1.
    pub fn into_probability(mut self, g: &FiniteGroupoid) -> Result<Self> {
        for c in g.classes() {
            let sum: f64 = self.per_class[c.0].iter().sum();
            if sum <= 0.0 {
                return Err(Error::Invalid(format!(
                    "class {} has zero total weight, cannot normalize",
                    g.class_label(c)
                )));
            }
            for w in &mut self.per_class[c.0] {
                *w /= sum;
            }
        }
        Ok(self)
    }

    pub fn weight(&self, g: &FiniteGroupoid, p: PointId) -> f64 {
        self.per_class[g.class_of(p).0][g.position_in_class(p)]
    }

    pub fn class_weights(&self, c: ClassId) -> &[f64] {
        &self.per_class[c.0]
    }

    pub fn is_probability(&self, tol: f64) -> bool {
        self.per_class
            .iter()
            .all(|w| (w.iter().sum::<f64>() - 1.0).abs() <= tol)
    }

    /// Views the transverse function as a kernel (one identical row per class member).
    pub fn as_kernel(&self, g: &FiniteGroupoid) -> Kernel {
        let n = g.n_points();
        let mut rows = vec![vec![0.0; n]; n];
        for y in g.space().points() {
            let c = g.class_of(y);
            for (&x, &w) in g.members(c).iter().zip(&self.per_class[c.0]) {
                rows[y.0][x.0] = w;
            }
        }
        Kernel { rows }
    }
}

/// Class-member weights allowed to be negative; evaluated by Hahn-Jordan split.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedTransverseFunction {
    per_class: Vec<Vec<f64>>,
}

impl SignedTransverseFunction {
    pub fn new(g: &FiniteGroupoid, per_class: Vec<Vec<f64>>) -> Result<Self> {
        if per_class.len() != g.n_classes() {
            return Err(Error::GroupoidMismatch {
                left: per_class.len(),
                right: g.n_classes(),
            });
        }
        for c in g.classes() {
            if per_class[c.0].len() != g.members(c).len() {
                return Err(Error::Invalid(format!(
                    "class {} weight count mismatch",
                    g.class_label(c)
                )));
            }
        }
        Ok(SignedTransverseFunction { per_class })
    }

    /// The density kernel `F(x) nu_hat^y(dx)` for a point function `F`.
    pub fn from_density(
        f: &[f64],
        nu_hat: &TransverseFunction,
        g: &FiniteGroupoid,
    ) -> Result<Self> {
        if f.len() != g.n_points() {
            return Err(Error::GroupoidMismatch {
                left: f.len(),
                right: g.n_points(),
            });
        }
        let per_class = g
            .classes()
            .map(|c| {
                g.members(c)
                    .iter()
                    .zip(nu_hat.class_weights(c))
                    .map(|(&p, &w)| f[p.0] * w)
                    .collect()
            })
            .collect();
        Ok(SignedTransverseFunction { per_class })
    }

    pub fn weight(&self, g: &FiniteGroupoid, p: PointId) -> f64 {
        self.per_class[g.class_of(p).0][g.position_in_class(p)]
    }

    /// Hahn-Jordan decomposition into nonnegative parts.
    pub fn split(&self) -> (TransverseFunction, TransverseFunction) {
        let pos = self
            .per_class
            .iter()
            .map(|w| w.iter().map(|&v| v.max(0.0)).collect())
            .collect();
        let neg = self
            .per_class
            .iter()
            .map(|w| w.iter().map(|&v| (-v).max(0.0)).collect())
            .collect();
        (
            TransverseFunction { per_class: pos },
            TransverseFunction { per_class: neg },
        )
    }

    /// Recovers the density `F` with respect to `nu_hat`, when it exists.
    pub fn density(
        &self,
        nu_hat: &TransverseFunction,
        g: &FiniteGroupoid,
    ) -> Result<Vec<f64>> {
        let mut f = vec![0.0; g.n_points()];
        for p in g.space().points() {
            let w = nu_hat.weight(g, p);
            let m = self.weight(g, p);
            if w == 0.0 {
                if m != 0.0 {
                    return Err(Error::NoDensity {
                        point: g.space().label(p).to_owned(),
                        mass: m,
                    });
                }
            } else {
                f[p.0] = m / w;
            }
        }
        Ok(f)
    }
}

impl From<TransverseFunction> for SignedTransverseFunction {
    fn from(t: TransverseFunction) -> Self {
        SignedTransverseFunction {
            per_class: t.per_class,
        }
    }
}

/// A bounded real function on points, natural-log scale.
///
/// `exp` is computed once at construction; all operators consume it from here.
#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    values: Vec<f64>,
    exp: Vec<f64>,
}

impl Potential {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("potential has non-finite value".into()));
        }
        let exp = values.iter().map(|v| v.exp()).collect();
        Ok(Potential { values, exp })
    }

    pub fn zero(n: usize) -> Self {
        Potential {
            values: vec![0.0; n],
            exp: vec![1.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn value(&self, p: PointId) -> f64 {
        self.values[p.0]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn exp_value(&self, p: PointId) -> f64 {
        self.exp[p.0]
    }

    pub fn exp_values(&self) -> &[f64] {
        &self.exp
    }
}

/// A positive cocycle on in-class pairs.
#[derive(Debug, Clone)]
pub enum ModularFunction {
    /// `delta(x, y) = exp(V(y) - V(x))`, a cocycle by construction.
    Exp(Potential),
    /// Explicit table over in-class ordered pairs.
    Table(HashMap<(PointId, PointId), f64>),
}

impl ModularFunction {
    pub fn eval(&self, g: &FiniteGroupoid, x: PointId, y: PointId) -> Result<f64> {
        match self {
            ModularFunction::Exp(v) => Ok((v.value(y) - v.value(x)).exp()),
            ModularFunction::Table(t) => {
                t.get(&(x, y))
                    .copied()
                    .ok_or_else(|| Error::MissingModularEntry {
                        x: g.space().label(x).to_owned(),
                        y: g.space().label(y).to_owned(),
                    })
            }
        }
    }
}

/// A nonnegative finite measure on points.
#[derive(Debug, Clone, PartialEq)]
pub struct Measure {
    mass: Vec<f64>,
    total: f64,
}

impl Measure {
    pub fn new(mass: Vec<f64>) -> Result<Self> {
        if mass.iter().any(|&m| m < 0.0 || !m.is_finite()) {
            return Err(Error::Invalid("measure has negative or non-finite mass".into()));
        }
        let total = mass.iter().sum();
        Ok(Measure { mass, total })
    }

    /// The point mass at `p`.
    pub fn dirac(n: usize, p: PointId) -> Self {
        let mut mass = vec![0.0; n];
        mass[p.0] = 1.0;
        Measure { mass, total: 1.0 }
    }

    pub fn uniform(n: usize) -> Self {
        Measure {
            mass: vec![1.0 / n as f64; n],
            total: 1.0,
        }
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    pub fn mass(&self, p: PointId) -> f64 {
        self.mass[p.0]
    }

    pub fn masses(&self) -> &[f64] {
        &self.mass
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn is_probability(&self, tol: f64) -> bool {
        (self.total - 1.0).abs() <= tol
    }

    pub fn require_probability(&self, tol: f64) -> Result<()> {
        if self.is_probability(tol) {
            Ok(())
        } else {
            Err(Error::NotProbability { total: self.total })
        }
    }

    pub fn class_mass(&self, g: &FiniteGroupoid, c: ClassId) -> f64 {
        g.members(c).iter().map(|&p| self.mass[p.0]).sum()
    }

    /// `integral of f dM` in fixed point-index order.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        self.mass.iter().zip(f).map(|(m, v)| m * v).sum()
    }
}

/// Result of checking a kernel against the transverse-function axiom.
#[derive(Debug, Clone)]
pub struct TransverseReport {
    pub passed: bool,
    /// First in-class pair whose rows disagree, if any.
    pub first_violation: Option<(PointId, PointId)>,
    pub max_row_discrepancy: f64,
    /// First (y, x) with mass outside the class of y, if any.
    pub support_violation: Option<(PointId, PointId)>,
}

/// Checks `nu^x = nu^y` for all in-class pairs, and the support condition.
pub fn validate_transverse(nu: &Kernel, g: &FiniteGroupoid) -> TransverseReport {
    let mut support_violation = None;
    'outer: for y in g.space().points() {
        for x in g.space().points() {
            if nu.mass(y, x) != 0.0 && !g.same_class(x, y) {
                support_violation = Some((y, x));
                break 'outer;
            }
        }
    }
    let mut first_violation = None;
    let mut max_disc = 0.0f64;
    for c in g.classes() {
        let members = g.members(c);
        let base = members[0];
        for &y in &members[1..] {
            let disc = (0..g.n_points())
                .map(|x| (nu.mass(base, PointId(x)) - nu.mass(y, PointId(x))).abs())
                .fold(0.0f64, f64::max);
            if disc > 0.0 && first_violation.is_none() {
                first_violation = Some((base, y));
            }
            max_disc = max_disc.max(disc);
        }
    }
    TransverseReport {
        passed: first_violation.is_none() && support_violation.is_none(),
        first_violation,
        max_row_discrepancy: max_disc,
        support_violation,
    }
}

/// Result of checking the cocycle identity of a modular function.
#[derive(Debug, Clone)]
pub struct ModularReport {
    pub passed: bool,
    pub worst_triple: Option<(PointId, PointId, PointId)>,
    pub max_rel_error: f64,
}

/// Checks `delta(x,y) delta(y,z) = delta(x,z)` over all in-class triples.
pub fn validate_modular(
    delta: &ModularFunction,
    g: &FiniteGroupoid,
    tol: f64,
) -> Result<ModularReport> {
    let mut worst = None;
    let mut max_rel = 0.0f64;
    for c in g.classes() {
        let members = g.members(c);
        for &x in members {
            for &y in members {
                for &z in members {
                    let lhs = delta.eval(g, x, y)? * delta.eval(g, y, z)?;
                    let rhs = delta.eval(g, x, z)?;
                    let rel = (lhs - rhs).abs() / rhs.abs().max(1.0);
                    if rel > max_rel {
                        max_rel = rel;
                        worst = Some((x, y, z));
                    }
                }
            }
        }
    }
    Ok(ModularReport {
        passed: max_rel <= tol,
        worst_triple: if max_rel > tol { worst } else { None },
        max_rel_error: max_rel,
    })
}

/// Result of the saturation condition `M(B)=0 => M(S[B])=0`.
#[derive(Debug, Clone)]
pub struct SaturationReport {
    pub passed: bool,
    pub witness_class: Option<ClassId>,
}

/// For atomic measures on finite classes the saturation condition is
/// equivalent to: every class has either all-positive or all-zero masses.
pub fn saturation_check(m: &Measure, g: &FiniteGroupoid) -> SaturationReport {
    for c in g.classes() {
        let masses: Vec<f64> = g.members(c).iter().map(|&p| m.mass(p)).collect();
        let any_zero = masses.contains(&0.0);
        let any_positive = masses.iter().any(|&v| v > 0.0);
        if any_zero && any_positive {
            return SaturationReport {
                passed: false,
                witness_class: Some(c),
            };
        }
    }
    SaturationReport {
        passed: true,
        witness_class: None,
    }
}
