//! Finite-alphabet XY models: the Ruelle operator with an a priori
//! probability, its leading eigen-data, the eigenprobability on cylinders,
//! the limit-quotient integral representation, potential normalization,
//! and quasi-invariance certification for the modular function
//! `delta(x, y) = e^{V(y) - V(x)}`.
//!
//! Potentials are locally constant of depth `k`; every integral against the
//! a priori probability is an exact finite sum, so residual bounds here are
//! pure floating-point roundoff.

use crate::error::{Error, Result};

/// A finite-alphabet XY model: a priori weights `m`, a depth-`k` potential
/// table, and the base symbol defining the reference point `z0 = (k0)^inf`.
#[derive(Debug, Clone)]
pub struct XySpec {
    alphabet: Vec<String>,
    a_priori: Vec<f64>,
    depth: usize,
    /// `e^{V}` over depth-k words in lexicographic order, first symbol most
    /// significant.
    exp_potential: Vec<f64>,
    potential: Vec<f64>,
    base_symbol: usize,
}

const A_PRIORI_TOL: f64 = 1e-12;
const EIGEN_TOL: f64 = 1e-13;
const MAX_EIGEN_ITERS: usize = 100_000;

/// Index of a word in lexicographic table order, first symbol most
/// significant: `idx(a_1 .. a_j) = sum a_i d^{j-i}`.
pub fn word_index(word: &[usize], d: usize) -> usize {
    word.iter().fold(0, |acc, &a| acc * d + a)
}

/// All words of the given length in lexicographic order.
pub fn enumerate_words(d: usize, len: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|w| {
                (0..d).map(move |a| {
                    let mut w2 = w.clone();
                    w2.push(a);
                    w2
                })
            })
            .collect();
    }
    out
}

impl XySpec {
    /// `potential` holds `V` over depth-k words in lexicographic order.
    pub fn new(
        alphabet: Vec<String>,
        a_priori: Vec<f64>,
        depth: usize,
        potential: Vec<f64>,
        base_symbol: usize,
    ) -> Result<Self> {
        let d = alphabet.len();
        if d == 0 {
            return Err(Error::Invalid("alphabet must be non-empty".into()));
        }
        if depth == 0 {
            return Err(Error::Invalid("potential depth must be at least 1".into()));
        }
        if a_priori.len() != d {
            return Err(Error::Invalid(format!(
                "a priori weights have length {}, expected {d}",
                a_priori.len()
            )));
        }
        let sum: f64 = a_priori.iter().sum();
        if a_priori.iter().any(|&w| w < 0.0) || (sum - 1.0).abs() > A_PRIORI_TOL {
            return Err(Error::BadAPriori { sum });
        }
        let expected = d.pow(depth as u32);
        if potential.len() != expected {
            return Err(Error::BadTableLength {
                got: potential.len(),
                expected,
                depth,
            });
        }
        if potential.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("potential table has a non-finite entry".into()));
        }
        if base_symbol >= d {
            return Err(Error::Invalid(format!(
                "base symbol {base_symbol} is outside the alphabet of size {d}"
            )));
        }
        let exp_potential = potential.iter().map(|v| v.exp()).collect();
        Ok(XySpec {
            alphabet,
            a_priori,
            depth,
            exp_potential,
            potential,
            base_symbol,
        })
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn d(&self) -> usize {
        self.alphabet.len()
    }

    pub fn k(&self) -> usize {
        self.depth
    }

    pub fn a_priori(&self) -> &[f64] {
        &self.a_priori
    }

    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    pub fn base_symbol(&self) -> usize {
        self.base_symbol
    }

    /// `V` at a word with at least `k` coordinates (extra coordinates are
    /// ignored: the potential is locally constant).
    pub fn v(&self, word: &[usize]) -> f64 {
        self.potential[word_index(&word[..self.depth], self.d())]
    }

    /// `e^V` at a word with at least `k` coordinates.
    pub fn exp_v(&self, word: &[usize]) -> f64 {
        self.exp_potential[word_index(&word[..self.depth], self.d())]
    }

    /// The first `len` coordinates of `z0 = (k0)^inf`.
    pub fn z0(&self, len: usize) -> Vec<usize> {
        vec![self.base_symbol; len]
    }
}

/// A function of finitely many leading coordinates, stored as a dense table
/// over depth-`j` words. Depth 0 is a constant.
#[derive(Debug, Clone, PartialEq)]
pub struct CylinderFunction {
    d: usize,
    depth: usize,
    table: Vec<f64>,
}

impl CylinderFunction {
    pub fn new(d: usize, depth: usize, table: Vec<f64>) -> Result<Self> {
        let expected = d.pow(depth as u32);
        if table.len() != expected {
            return Err(Error::BadTableLength {
                got: table.len(),
                expected,
                depth,
            });
        }
        Ok(CylinderFunction { d, depth, table })
    }

    pub fn constant(d: usize, value: f64) -> Self {
        CylinderFunction {
            d,
            depth: 0,
            table: vec![value],
        }
    }

    /// Indicator of the cylinder fixing the leading coordinates to `word`.
    pub fn indicator(d: usize, word: &[usize]) -> Self {
        let mut table = vec![0.0; d.pow(word.len() as u32)];
        table[word_index(word, d)] = 1.0;
        CylinderFunction {
            d,
            depth: word.len(),
            table,
        }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    /// Value at any word with at least `depth` coordinates.
    pub fn eval(&self, word: &[usize]) -> f64 {
        self.table[word_index(&word[..self.depth], self.d)]
    }

    fn scale(&mut self, s: f64) {
        for v in &mut self.table {
            *v *= s;
        }
    }

    fn sup_norm(&self) -> f64 {
        self.table.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }
}

/// One application of the Ruelle operator:
/// `(L f)(w) = sum_a m(a) e^{V(a, w_1..w_{k-1})} f(a, w_1..w_{j-1})`.
/// The output depends on `max(k-1, j-1)` leading coordinates.
pub fn ruelle_apply(spec: &XySpec, f: &CylinderFunction) -> CylinderFunction {
    let d = spec.d();
    let out_depth = (spec.k() - 1).max(f.depth.saturating_sub(1));
    let mut table = Vec::with_capacity(d.pow(out_depth as u32));
    for w in enumerate_words(d, out_depth) {
        let mut extended = Vec::with_capacity(w.len() + 1);
        extended.push(0);
        extended.extend_from_slice(&w);
        let mut acc = 0.0;
        for a in 0..d {
            extended[0] = a;
            acc += spec.a_priori[a] * spec.exp_v(&extended) * f.eval(&extended);
        }
        table.push(acc);
    }
    CylinderFunction {
        d,
        depth: out_depth,
        table,
    }
}

/// Leading eigen-data of the Ruelle operator: the Perron eigenvalue `c` and
/// a positive eigenfunction of depth `k-1`, normalized so that its integral
/// against the eigenprobability is 1.
pub fn leading_eigen(spec: &XySpec) -> Result<(f64, CylinderFunction)> {
    let d = spec.d();
    let t = spec.k() - 1;
    let mut phi = CylinderFunction::new(d, t, vec![1.0; d.pow(t as u32)])?;
    let mut c = 0.0;
    let mut residual = f64::INFINITY;
    let mut converged = false;
    for _ in 0..MAX_EIGEN_ITERS {
        let next = ruelle_apply(spec, &phi);
        let norm = next.sup_norm();
        c = norm;
        residual = next
            .table
            .iter()
            .zip(&phi.table)
            .map(|(g, p)| (g - c * p).abs())
            .fold(0.0, f64::max);
        let mut next = next;
        next.scale(1.0 / norm);
        phi = next;
        if residual <= EIGEN_TOL * c {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NonConvergence {
            iters: MAX_EIGEN_ITERS,
            residual,
        });
    }
    // second pass: scale so that int phi d rho = 1
    let rho = eigenprob(spec, t)?;
    let integral = rho.integrate(&phi)?;
    phi.scale(1.0 / integral);
    Ok((c, phi))
}

/// Cylinder weights of a probability on the sequence space: a dense table
/// over depth-`n` words summing to 1.
#[derive(Debug, Clone)]
pub struct CylinderMeasure {
    d: usize,
    depth: usize,
    weights: Vec<f64>,
}

impl CylinderMeasure {
    pub fn new(d: usize, depth: usize, weights: Vec<f64>) -> Result<Self> {
        let expected = d.pow(depth as u32);
        if weights.len() != expected {
            return Err(Error::BadTableLength {
                got: weights.len(),
                expected,
                depth,
            });
        }
        Ok(CylinderMeasure { d, depth, weights })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn mass(&self, word: &[usize]) -> f64 {
        self.weights[word_index(word, self.d)]
    }

    /// Integral of a cylinder function whose depth does not exceed ours.
    pub fn integrate(&self, f: &CylinderFunction) -> Result<f64> {
        if f.depth > self.depth {
            return Err(Error::DepthExceeded {
                requested: f.depth,
                available: self.depth,
            });
        }
        Ok(enumerate_words(self.d, self.depth)
            .iter()
            .zip(&self.weights)
            .map(|(w, rho)| rho * f.eval(w))
            .sum())
    }

    /// Marginal on the first `depth` coordinates (sums out the trailing ones).
    pub fn marginal(&self, depth: usize) -> Result<CylinderMeasure> {
        if depth > self.depth {
            return Err(Error::DepthExceeded {
                requested: depth,
                available: self.depth,
            });
        }
        let block = self.d.pow((self.depth - depth) as u32);
        let weights = self
            .weights
            .chunks(block)
            .map(|c| c.iter().sum())
            .collect();
        CylinderMeasure::new(self.d, depth, weights)
    }
}

/// Left Perron data: eigenvalue and the depth-(k-1) weights of the
/// eigenprobability, normalized to total mass 1.
fn left_eigen(spec: &XySpec) -> Result<(f64, Vec<f64>)> {
    let d = spec.d();
    let k = spec.k();
    if k == 1 {
        let c: f64 = (0..d).map(|a| spec.a_priori[a] * spec.exp_potential[a]).sum();
        return Ok((c, vec![1.0]));
    }
    let t = k - 1;
    let words = enumerate_words(d, t);
    let mut psi = vec![1.0 / words.len() as f64; words.len()];
    let mut residual = f64::INFINITY;
    for _ in 0..MAX_EIGEN_ITERS {
        // (L* psi)[w] = m(w_1) sum_t e^{V(w, t)} psi[w_2.. w_{k-1}, t]
        let mut next = vec![0.0; psi.len()];
        for (i, w) in words.iter().enumerate() {
            let mut extended = Vec::with_capacity(k);
            extended.extend_from_slice(w);
            extended.push(0);
            let mut shifted = Vec::with_capacity(t);
            shifted.extend_from_slice(&w[1..]);
            shifted.push(0);
            let mut acc = 0.0;
            for a in 0..d {
                extended[k - 1] = a;
                shifted[t - 1] = a;
                acc += spec.exp_v(&extended) * psi[word_index(&shifted, d)];
            }
            next[i] = spec.a_priori[w[0]] * acc;
        }
        let total: f64 = next.iter().sum();
        let c = total;
        residual = next
            .iter()
            .zip(&psi)
            .map(|(g, p)| (g - c * p).abs())
            .fold(0.0, f64::max);
        for v in &mut next {
            *v /= total;
        }
        psi = next;
        if residual <= EIGEN_TOL * c {
            return Ok((c, psi));
        }
    }
    Err(Error::NonConvergence {
        iters: MAX_EIGEN_ITERS,
        residual,
    })
}

/// The eigenprobability of the adjoint Ruelle operator, materialized on
/// depth-`n` cylinders. Weights at different depths are projectively
/// consistent: summing out the last coordinate recovers the shallower table.
pub fn eigenprob(spec: &XySpec, n: usize) -> Result<CylinderMeasure> {
    let d = spec.d();
    let k = spec.k();
    let (c, psi) = left_eigen(spec)?;
    let base_depth = k - 1;
    if n < base_depth {
        return CylinderMeasure::new(d, base_depth, psi)?.marginal(n);
    }
    // rho[b_1..b_n] = c^{-(n-k+1)} prod_j m(b_j) e^{V(b_j..b_{j+k-1})}
    //                 * psi[b_{n-k+2}..b_n]
    let words = enumerate_words(d, n);
    let mut weights = Vec::with_capacity(words.len());
    for w in &words {
        let mut mass = psi[word_index(&w[n - base_depth..], d)];
        for j in 0..(n + 1 - k) {
            mass *= spec.a_priori[w[j]] * spec.exp_v(&w[j..]) / c;
        }
        weights.push(mass);
    }
    CylinderMeasure::new(d, n, weights)
}

/// `L^n h(z0) / L^n 1(z0)`; converges geometrically to the integral of `h`
/// against the eigenprobability.
pub fn limit_quotient(spec: &XySpec, h: &CylinderFunction, n: usize) -> Result<f64> {
    if n < h.depth {
        return Err(Error::DepthExceeded {
            requested: h.depth,
            available: n,
        });
    }
    let mut num = h.clone();
    let mut den = CylinderFunction::constant(spec.d(), 1.0);
    for _ in 0..n {
        num = ruelle_apply(spec, &num);
        den = ruelle_apply(spec, &den);
        // shared rescale keeps both iterates in range without moving the ratio
        let s = 1.0 / den.sup_norm();
        num.scale(s);
        den.scale(s);
    }
    let z_num = spec.z0(num.depth);
    let z_den = spec.z0(den.depth);
    Ok(num.eval(&z_num) / den.eval(&z_den))
}

/// Normalized potential `U = V + log phi - log(phi o shift) - log c`; the
/// Ruelle operator of `U` fixes the constant 1.
pub fn ruelle_normalize(spec: &XySpec, c: f64, phi: &CylinderFunction) -> Result<XySpec> {
    let d = spec.d();
    let k = spec.k();
    let log_c = c.ln();
    let mut table = Vec::with_capacity(spec.potential.len());
    for w in enumerate_words(d, k) {
        let u = spec.v(&w) + phi.eval(&w).ln() - phi.eval(&w[1..]).ln() - log_c;
        table.push(u);
    }
    XySpec::new(
        spec.alphabet.clone(),
        spec.a_priori.clone(),
        k,
        table,
        spec.base_symbol,
    )
}

/// Max residual of `L_U(1) = 1` over the depth-(k-1) table.
pub fn normalization_residual(spec: &XySpec) -> f64 {
    let one = CylinderFunction::constant(spec.d(), 1.0);
    ruelle_apply(spec, &one)
        .table
        .iter()
        .map(|v| (v - 1.0).abs())
        .fold(0.0, f64::max)
}

/// Quasi-invariance residual of a cylinder measure for the modular function
/// `e^{V(y) - V(x)}`, over exhaustive pair-cylinder indicators at the given
/// depth. With `use_modular = false` the modular factor is replaced by 1,
/// which serves as a negative control for nonconstant potentials.
///
/// Two points are equivalent when their tails agree past the first
/// coordinate, so a pair indicator fixes a shared tail and the two leading
/// symbols; both sides of the invariance identity reduce to finite sums.
pub fn xy_quasi_invariance_check(
    spec: &XySpec,
    rho: &CylinderMeasure,
    depth: usize,
    use_modular: bool,
) -> Result<f64> {
    let d = spec.d();
    if depth < spec.k() {
        return Err(Error::DepthExceeded {
            requested: spec.k(),
            available: depth,
        });
    }
    if depth > rho.depth() {
        return Err(Error::DepthExceeded {
            requested: depth,
            available: rho.depth(),
        });
    }
    let rho = rho.marginal(depth)?;
    let mut residual: f64 = 0.0;
    let mut left = vec![0; depth];
    let mut right = vec![0; depth];
    for tail in enumerate_words(d, depth - 1) {
        left[1..].copy_from_slice(&tail);
        right[1..].copy_from_slice(&tail);
        for b in 0..d {
            left[0] = b;
            for b2 in 0..d {
                right[0] = b2;
                let lhs = spec.a_priori[b2] * rho.mass(&left);
                let modular = if use_modular {
                    spec.exp_v(&left) / spec.exp_v(&right)
                } else {
                    1.0
                };
                let rhs = spec.a_priori[b] * modular * rho.mass(&right);
                residual = residual.max((lhs - rhs).abs());
            }
        }
    }
    Ok(residual)
}

/// Max difference between the class-sum transfer operator (integrating the
/// first coordinate against the a priori weights) and the Ruelle operator
/// composed with the shift, over all depth-`depth` cylinders.
pub fn h_vs_ruelle_check(spec: &XySpec, f: &CylinderFunction, depth: usize) -> Result<f64> {
    let d = spec.d();
    let needed = spec.k().max(f.depth);
    if depth < needed {
        return Err(Error::DepthExceeded {
            requested: needed,
            available: depth,
        });
    }
    let lf = ruelle_apply(spec, f);
    let mut residual: f64 = 0.0;
    for y in enumerate_words(d, depth) {
        // groupoid side: sum over the class of y, i.e. over the first symbol
        let mut extended = Vec::with_capacity(depth);
        extended.push(0);
        extended.extend_from_slice(&y[1..]);
        let mut h_side = 0.0;
        for a in 0..d {
            extended[0] = a;
            h_side += spec.a_priori[a] * spec.exp_v(&extended) * f.eval(&extended);
        }
        let ruelle_side = lf.eval(&y[1..]);
        residual = residual.max((h_side - ruelle_side).abs());
    }
    Ok(residual)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat_spec(d: usize) -> XySpec {
        XySpec::new(
            (0..d).map(|i| format!("s{i}")).collect(),
            vec![1.0 / d as f64; d],
            1,
            vec![0.0; d],
            0,
        )
        .unwrap()
    }

    /// d = 2, m uniform, depth 2, e^V = [[2, 1], [4, 3]] (row = first symbol).
    fn asym_spec() -> XySpec {
        XySpec::new(
            vec!["a".into(), "b".into()],
            vec![0.5, 0.5],
            2,
            vec![2f64.ln(), 1f64.ln(), 4f64.ln(), 3f64.ln()],
            0,
        )
        .unwrap()
    }

    /// Perron data of A[x1][a] = m(a) e^{V(a, x1)} from the characteristic
    /// polynomial; the independent oracle for the power iteration.
    fn dense_2x2_perron(spec: &XySpec) -> (f64, [f64; 2]) {
        assert_eq!(spec.d(), 2);
        let m = spec.a_priori();
        let a = |row: usize, col: usize| m[col] * spec.exp_v(&[col, row]);
        let tr = a(0, 0) + a(1, 1);
        let det = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
        let c = 0.5 * (tr + (tr * tr - 4.0 * det).sqrt());
        // (A - cI) v = 0 row-wise; pick the numerically safer row
        let v = if a(0, 1).abs() > a(1, 0).abs() {
            [a(0, 1), c - a(0, 0)]
        } else {
            [c - a(1, 1), a(1, 0)]
        };
        (c, v)
    }

    #[test]
    fn spec_validation() {
        let err = XySpec::new(
            vec!["a".into(), "b".into()],
            vec![0.5, 0.6],
            1,
            vec![0.0, 0.0],
            0,
        )
        .unwrap_err();
        assert!(matches!(err, Error::BadAPriori { .. }));
        let err = XySpec::new(
            vec!["a".into(), "b".into()],
            vec![0.5, 0.5],
            2,
            vec![0.0; 3],
            0,
        )
        .unwrap_err();
        assert!(matches!(err, Error::BadTableLength { expected: 4, .. }));
    }

    #[test]
    fn ruelle_fixes_one_for_zero_potential() {
        for d in [2, 3] {
            let spec = flat_spec(d);
            let one = CylinderFunction::constant(d, 1.0);
            let lf = ruelle_apply(&spec, &one);
            for &v in lf.table() {
                assert!((v - 1.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn ruelle_matches_matrix_product() {
        let spec = asym_spec();
        let f = CylinderFunction::new(2, 1, vec![0.3, -1.2]).unwrap();
        let lf = ruelle_apply(&spec, &f);
        for x1 in 0..2 {
            let expect: f64 = (0..2)
                .map(|a| 0.5 * spec.exp_v(&[a, x1]) * f.table()[a])
                .sum();
            assert!((lf.eval(&[x1]) - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn ruelle_factors_shift_composition() {
        // f = g o shift: L(g o shift) = g * L(1)
        let spec = asym_spec();
        let g = [0.7, -0.4];
        let f = CylinderFunction::new(2, 2, vec![g[0], g[1], g[0], g[1]]).unwrap();
        let lf = ruelle_apply(&spec, &f);
        let l1 = ruelle_apply(&spec, &CylinderFunction::constant(2, 1.0));
        for x1 in 0..2 {
            assert!((lf.eval(&[x1]) - g[x1] * l1.eval(&[x1])).abs() < 1e-15);
        }
    }

    #[test]
    fn eigen_zero_potential() {
        let spec = flat_spec(3);
        let (c, phi) = leading_eigen(&spec).unwrap();
        assert!((c - 1.0).abs() < 1e-12);
        for &v in phi.table() {
            assert!((v - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn eigen_matches_dense_2x2() {
        let spec = asym_spec();
        let (c_oracle, v) = dense_2x2_perron(&spec);
        let (c, phi) = leading_eigen(&spec).unwrap();
        assert!((c - c_oracle).abs() < 1e-10);
        let ratio = phi.table()[0] / phi.table()[1];
        assert!((ratio - v[0] / v[1]).abs() < 1e-9);
        // normalization: int phi d rho = 1
        let rho = eigenprob(&spec, 1).unwrap();
        assert!((rho.integrate(&phi).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eigen_depth_one_potential() {
        let spec = XySpec::new(
            vec!["a".into(), "b".into()],
            vec![0.25, 0.75],
            1,
            vec![0.4, -0.9],
            0,
        )
        .unwrap();
        let (c, phi) = leading_eigen(&spec).unwrap();
        let expect = 0.25 * 0.4f64.exp() + 0.75 * (-0.9f64).exp();
        assert!((c - expect).abs() < 1e-13);
        assert_eq!(phi.depth(), 0);
        assert!((phi.table()[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eigen_residual_bound_d3() {
        let spec = XySpec::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec![0.2, 0.3, 0.5],
            2,
            vec![0.3, -0.7, 1.1, 0.0, 0.5, -0.2, 0.9, -1.3, 0.4],
            1,
        )
        .unwrap();
        let (c, phi) = leading_eigen(&spec).unwrap();
        let lphi = ruelle_apply(&spec, &phi);
        let res = lphi
            .table()
            .iter()
            .zip(phi.table())
            .map(|(g, p)| (g - c * p).abs())
            .fold(0.0, f64::max);
        assert!(res <= 1e-10 * c);
    }

    #[test]
    fn eigenprob_bernoulli_for_zero_potential() {
        let spec = XySpec::new(
            vec!["a".into(), "b".into()],
            vec![0.3, 0.7],
            1,
            vec![0.0, 0.0],
            0,
        )
        .unwrap();
        let rho = eigenprob(&spec, 3).unwrap();
        for w in enumerate_words(2, 3) {
            let expect: f64 = w.iter().map(|&a| spec.a_priori()[a]).product();
            assert!((rho.mass(&w) - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn eigenprob_matches_dense_left_eigen() {
        let spec = asym_spec();
        let (c, _) = dense_2x2_perron(&spec);
        // left eigenvector of B[w][t] = m(w) e^{V(w, t)}
        let b = |row: usize, col: usize| spec.a_priori()[row] * spec.exp_v(&[row, col]);
        // (B psi)[w] = sum_t B[w][t] psi[t] = c psi[w]
        let psi0 = b(0, 1);
        let psi1 = c - b(0, 0);
        let total = psi0 + psi1;
        let rho = eigenprob(&spec, 1).unwrap();
        assert!((rho.mass(&[0]) - psi0 / total).abs() < 1e-10);
        assert!((rho.mass(&[1]) - psi1 / total).abs() < 1e-10);
    }

    #[test]
    fn eigenprob_projective_consistency() {
        let spec = asym_spec();
        for n in 2..=4 {
            let fine = eigenprob(&spec, n).unwrap();
            let coarse = eigenprob(&spec, n - 1).unwrap();
            for w in enumerate_words(2, n - 1) {
                let sum: f64 = (0..2)
                    .map(|a| {
                        let mut wa = w.clone();
                        wa.push(a);
                        fine.mass(&wa)
                    })
                    .sum();
                assert!((sum - coarse.mass(&w)).abs() < 1e-13);
            }
            let total: f64 = fine.weights().iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn limit_quotient_bernoulli() {
        let spec = XySpec::new(
            vec!["a".into(), "b".into()],
            vec![0.3, 0.7],
            1,
            vec![0.0, 0.0],
            0,
        )
        .unwrap();
        let h = CylinderFunction::indicator(2, &[1]);
        for n in 1..=5 {
            let q = limit_quotient(&spec, &h, n).unwrap();
            assert!((q - 0.7).abs() < 1e-14);
        }
    }

    #[test]
    fn limit_quotient_of_one_is_one() {
        let spec = asym_spec();
        let one = CylinderFunction::constant(2, 1.0);
        for n in [1, 10, 40] {
            assert!((limit_quotient(&spec, &one, n).unwrap() - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn limit_quotient_matches_eigenprob_integral() {
        let spec = asym_spec();
        let h = CylinderFunction::new(2, 1, vec![1.0, -0.5]).unwrap();
        let rho = eigenprob(&spec, 1).unwrap();
        let exact = rho.integrate(&h).unwrap();
        let q = limit_quotient(&spec, &h, 50).unwrap();
        assert!((q - exact).abs() < 1e-10);
        // geometric convergence: the gap shrinks with n
        let early = (limit_quotient(&spec, &h, 3).unwrap() - exact).abs();
        let late = (limit_quotient(&spec, &h, 12).unwrap() - exact).abs();
        assert!(late < early);
    }

    #[test]
    fn normalize_zero_potential_is_identity() {
        let spec = flat_spec(2);
        let (c, phi) = leading_eigen(&spec).unwrap();
        let u = ruelle_normalize(&spec, c, &phi).unwrap();
        for &v in u.potential() {
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn normalized_potential_fixes_one() {
        let spec = asym_spec();
        let (c, phi) = leading_eigen(&spec).unwrap();
        let u = ruelle_normalize(&spec, c, &phi).unwrap();
        assert!(normalization_residual(&u) <= 1e-10);
    }

    #[test]
    fn equilibrium_is_fixed_by_normalized_adjoint() {
        // mu = phi rho satisfies mu[w] = m(w_1) e^{U(w_1..w_k)} mu[w_2..w_n]
        let spec = asym_spec();
        let (c, phi) = leading_eigen(&spec).unwrap();
        let u = ruelle_normalize(&spec, c, &phi).unwrap();
        for n in 2..=4 {
            let rho = eigenprob(&spec, n).unwrap();
            let rho_prev = eigenprob(&spec, n - 1).unwrap();
            for w in enumerate_words(2, n) {
                let mu = phi.eval(&w) * rho.mass(&w);
                let mu_tail = phi.eval(&w[1..]) * rho_prev.mass(&w[1..]);
                let rhs = spec.a_priori()[w[0]] * u.exp_v(&w) * mu_tail;
                assert!((mu - rhs).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn quasi_invariance_zero_potential() {
        let spec = flat_spec(2);
        let rho = eigenprob(&spec, 3).unwrap();
        let res = xy_quasi_invariance_check(&spec, &rho, 3, true).unwrap();
        assert!(res <= 1e-12);
    }

    #[test]
    fn quasi_invariance_depth_two_fixture() {
        let spec = asym_spec();
        let rho = eigenprob(&spec, 3).unwrap();
        let res = xy_quasi_invariance_check(&spec, &rho, 3, true).unwrap();
        assert!(res <= 1e-9);
    }

    #[test]
    fn quasi_invariance_negative_control() {
        let spec = asym_spec();
        let rho = eigenprob(&spec, 3).unwrap();
        let res = xy_quasi_invariance_check(&spec, &rho, 3, false).unwrap();
        assert!(res > 1e-3);
    }

    #[test]
    fn quasi_invariance_depth_errors() {
        let spec = asym_spec();
        let rho = eigenprob(&spec, 2).unwrap();
        let err = xy_quasi_invariance_check(&spec, &rho, 1, true).unwrap_err();
        assert!(matches!(err, Error::DepthExceeded { .. }));
        let err = xy_quasi_invariance_check(&spec, &rho, 3, true).unwrap_err();
        assert!(matches!(err, Error::DepthExceeded { .. }));
    }

    #[test]
    fn h_agrees_with_ruelle_after_shift() {
        let spec = asym_spec();
        let f = CylinderFunction::new(2, 1, vec![0.8, -0.3]).unwrap();
        assert!(h_vs_ruelle_check(&spec, &f, 2).unwrap() <= 1e-12);
        assert!(h_vs_ruelle_check(&spec, &f, 3).unwrap() <= 1e-12);
        let one = CylinderFunction::constant(2, 1.0);
        let (c, phi) = leading_eigen(&spec).unwrap();
        let u = ruelle_normalize(&spec, c, &phi).unwrap();
        assert!(h_vs_ruelle_check(&u, &one, 2).unwrap() <= 1e-12);
    }
}
