//! Casimir invariants of the coadjoint action.
//!
//! A smooth `C` on `g*` is invariant iff `Σ_j S_ij(ξ) ∂C/∂ξ_j = 0` with the
//! structure matrix `S_ij(ξ) = c_ij^k ξ_k`. [`fit_casimirs`] solves this
//! linear system for polynomial `C` by sampling `ξ` and taking the nullspace
//! of the stacked equations.
//!
//! Level sets of the Casimirs are unions of orbits; nothing here checks
//! which connected component of a level set a point lies on.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::algebra::LieAlgebra;
use crate::coadjoint::DualVector;

/// Relative singular-value threshold for the sampled nullspace.
pub const NULLSPACE_REL_TOL: f64 = 1e-8;

/// Relative tolerance for accepting a fitted Casimir on fresh samples.
pub const VERIFY_REL_TOL: f64 = 1e-8;

const SAMPLE_BOX: f64 = 2.0;
const CENTRAL_EXCLUSION: f64 = 0.1;
const MAX_ATTEMPTS: u64 = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InvariantError {
    #[error("point has {got} coordinates, algebra has dimension {dim}")]
    Dimension { dim: usize, got: usize },
    #[error("degree cap must be at least 1")]
    DegreeCap,
    #[error("{given} samples given, need at least {required} (5 per monomial)")]
    TooFewSamples { given: usize, required: usize },
    #[error("fitted invariants failed verification after {0} sampling attempts")]
    DegenerateSampling(u64),
}

/// `S(ξ)` with `entries[(i, j)] = Σ_k c_ij^k ξ_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureMatrix {
    pub at: Vec<f64>,
    pub entries: DMatrix<f64>,
}

pub fn structure_matrix(algebra: &LieAlgebra, xi: &[f64]) -> Result<StructureMatrix, InvariantError> {
    let n = algebra.dim();
    if xi.len() != n {
        return Err(InvariantError::Dimension { dim: n, got: xi.len() });
    }
    let mut entries = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let value: f64 = (0..n).map(|k| algebra.constant(i, j, k) * xi[k]).sum();
            entries[(i, j)] = value;
            entries[(j, i)] = -value;
        }
    }
    Ok(StructureMatrix {
        at: xi.to_vec(),
        entries,
    })
}

/// Rank of `S(ξ)`: the number of singular values at least `tol` times the largest.
pub fn symplectic_rank(algebra: &LieAlgebra, xi: &[f64], tol: f64) -> Result<usize, InvariantError> {
    let s = structure_matrix(algebra, xi)?.entries;
    let sv = s.singular_values();
    let top = sv.max();
    if top == 0.0 {
        return Ok(0);
    }
    Ok(sv.iter().filter(|&&x| x >= tol * top).count())
}

/// Exponent vector of a monomial in the dual coordinates.
pub type Exponents = Vec<u32>;

/// Polynomial in the dual coordinates `ξ_0 .. ξ_{n-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualPolynomial {
    terms: Vec<(Exponents, f64)>,
}

impl DualPolynomial {
    pub fn new(terms: Vec<(Exponents, f64)>) -> Self {
        let mut out = Self { terms: Vec::new() };
        for (e, c) in terms {
            out.add_term(e, c);
        }
        out
    }

    fn add_term(&mut self, e: Exponents, c: f64) {
        match self.terms.iter_mut().find(|(x, _)| *x == e) {
            Some((_, v)) => *v += c,
            None => self.terms.push((e, c)),
        }
        self.terms.retain(|(_, c)| *c != 0.0);
        self.terms.sort_by(|a, b| a.0.cmp(&b.0));
    }

    pub fn terms(&self) -> &[(Exponents, f64)] {
        &self.terms
    }

    pub fn coefficient(&self, e: &[u32]) -> f64 {
        self.terms.iter().find(|(x, _)| x == e).map_or(0.0, |(_, c)| *c)
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|(e, _)| e.iter().sum()).max().unwrap_or(0)
    }

    pub fn eval(&self, xi: &[f64]) -> f64 {
        self.terms.iter().map(|(e, c)| c * monomial_value(e, xi)).sum()
    }

    pub fn gradient(&self, xi: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; xi.len()];
        for (e, c) in &self.terms {
            for (j, slot) in g.iter_mut().enumerate() {
                *slot += c * monomial_derivative(e, xi, j);
            }
        }
        g
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self { terms: Vec::new() };
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let e = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                out.add_term(e, c1 * c2);
            }
        }
        out
    }

    /// Writes the polynomial using `labels` for the variables.
    pub fn display<'a>(&'a self, labels: &'a [String]) -> impl fmt::Display + 'a {
        DisplayPoly { poly: self, labels }
    }
}

struct DisplayPoly<'a> {
    poly: &'a DualPolynomial,
    labels: &'a [String],
}

impl fmt::Display for DisplayPoly<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.poly.terms.is_empty() {
            return write!(f, "0");
        }
        for (n, (e, c)) in self.poly.terms.iter().enumerate() {
            if n > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{c}*{}", monomial_label(e, self.labels))?;
        }
        Ok(())
    }
}

/// Human-readable monomial such as `m*h` or `k^2`.
pub fn monomial_label(e: &[u32], labels: &[String]) -> String {
    let parts: Vec<String> = e
        .iter()
        .zip(labels)
        .filter(|(d, _)| **d > 0)
        .map(|(d, l)| if *d == 1 { l.clone() } else { format!("{l}^{d}") })
        .collect();
    if parts.is_empty() {
        "1".to_string()
    } else {
        parts.join("*")
    }
}

fn monomial_value(e: &[u32], xi: &[f64]) -> f64 {
    e.iter().zip(xi).map(|(&d, &x)| x.powi(d as i32)).product()
}

fn monomial_derivative(e: &[u32], xi: &[f64], j: usize) -> f64 {
    if e[j] == 0 {
        return 0.0;
    }
    let mut value = e[j] as f64;
    for (i, (&d, &x)) in e.iter().zip(xi).enumerate() {
        let d = if i == j { d - 1 } else { d };
        value *= x.powi(d as i32);
    }
    value
}

/// All exponent vectors in `dim` variables with total degree in
/// `1..=degree`, sorted lexicographically.
pub fn monomials(dim: usize, degree: u32) -> Vec<Exponents> {
    fn rec(prefix: &mut Exponents, left: usize, budget: u32, out: &mut Vec<Exponents>) {
        if left == 0 {
            out.push(prefix.clone());
            return;
        }
        for d in 0..=budget {
            prefix.push(d);
            rec(prefix, left - 1, budget - d, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), dim, degree, &mut out);
    out.retain(|e| e.iter().sum::<u32>() > 0);
    out.sort();
    out
}

/// Polynomial Casimirs that are algebraically independent up to the degree cap.
#[derive(Debug, Clone, PartialEq)]
pub struct CasimirBasis {
    /// Monomial order used for `coefficients` columns.
    pub monomials: Vec<Exponents>,
    /// One row per Casimir, scaled so the largest `|coefficient|` is 1.
    pub coefficients: DMatrix<f64>,
    pub casimirs: Vec<DualPolynomial>,
    /// Seed of the sampling attempt that produced the basis.
    pub seed: u64,
}

impl CasimirBasis {
    pub fn len(&self) -> usize {
        self.casimirs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.casimirs.is_empty()
    }

    pub fn eval(&self, xi: &[f64]) -> Vec<f64> {
        self.casimirs.iter().map(|c| c.eval(xi)).collect()
    }
}

/// Fits polynomial Casimirs of total degree `1..=degree_cap`.
///
/// Products of lower-degree Casimirs are Casimirs too; these are projected
/// out degree by degree so that the result only holds new, independent
/// generators (for Newton-Hooke with cap 2: `m` and `C2`, not `m²`).
pub fn fit_casimirs(
    algebra: &LieAlgebra,
    degree_cap: u32,
    sample_count: usize,
    seed: u64,
) -> Result<CasimirBasis, InvariantError> {
    if degree_cap == 0 {
        return Err(InvariantError::DegreeCap);
    }
    let dim = algebra.dim();
    let all = monomials(dim, degree_cap);
    let required = 5 * all.len();
    if sample_count < required {
        return Err(InvariantError::TooFewSamples {
            given: sample_count,
            required,
        });
    }
    let central = algebra.center(1e-12);

    for attempt in 0..MAX_ATTEMPTS {
        let attempt_seed = seed.wrapping_add(attempt);
        let mut rng = ChaCha8Rng::seed_from_u64(attempt_seed);
        let samples = draw_samples(&mut rng, dim, &central, sample_count);
        let casimirs = graded_casimirs(algebra, &all, degree_cap, &samples);
        let fresh = draw_samples(&mut rng, dim, &central, sample_count);
        if casimirs.iter().all(|c| verify(algebra, c, &fresh)) {
            let coefficients = DMatrix::from_fn(casimirs.len(), all.len(), |r, c| casimirs[r].coefficient(&all[c]));
            return Ok(CasimirBasis {
                monomials: all,
                coefficients,
                casimirs,
                seed: attempt_seed,
            });
        }
    }
    Err(InvariantError::DegenerateSampling(MAX_ATTEMPTS))
}

/// Uniform in `[-2, 2]^dim`, rejecting points with a central coordinate
/// closer to zero than 0.1.
fn draw_samples(rng: &mut ChaCha8Rng, dim: usize, central: &[usize], count: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let xi: Vec<f64> = (0..dim).map(|_| rng.random_range(-SAMPLE_BOX..SAMPLE_BOX)).collect();
        if central.iter().all(|&i| xi[i].abs() >= CENTRAL_EXCLUSION) {
            out.push(xi);
        }
    }
    out
}

/// Orthonormal basis (as columns) of the sampled nullspace restricted to
/// the given monomials.
fn sampled_nullspace(algebra: &LieAlgebra, basis: &[Exponents], samples: &[Vec<f64>]) -> DMatrix<f64> {
    let dim = algebra.dim();
    let rows = samples.len() * dim;
    let mut system = DMatrix::zeros(rows, basis.len());
    for (s, xi) in samples.iter().enumerate() {
        let st = structure_matrix(algebra, xi)
            .expect("sample has algebra dimension")
            .entries;
        for (c, e) in basis.iter().enumerate() {
            let grad: Vec<f64> = (0..dim).map(|j| monomial_derivative(e, xi, j)).collect();
            for i in 0..dim {
                system[(s * dim + i, c)] = (0..dim).map(|j| st[(i, j)] * grad[j]).sum();
            }
        }
    }
    let svd = system.svd(false, true);
    let v_t = svd.v_t.expect("requested V");
    let top = svd.singular_values.max();
    let null: Vec<DVector<f64>> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| top == 0.0 || s <= NULLSPACE_REL_TOL * top)
        .map(|(r, _)| v_t.row(r).transpose())
        .collect();
    // v_t has min(rows, cols) rows; rows ≥ cols is guaranteed by the sample count.
    if null.is_empty() {
        DMatrix::zeros(basis.len(), 0)
    } else {
        DMatrix::from_columns(&null)
    }
}

fn graded_casimirs(
    algebra: &LieAlgebra,
    all: &[Exponents],
    degree_cap: u32,
    samples: &[Vec<f64>],
) -> Vec<DualPolynomial> {
    let mut found: Vec<(DualPolynomial, u32)> = Vec::new();
    for degree in 1..=degree_cap {
        let basis: Vec<Exponents> = all
            .iter()
            .filter(|e| e.iter().sum::<u32>() <= degree)
            .cloned()
            .collect();
        let null = sampled_nullspace(algebra, &basis, samples);
        if null.ncols() == 0 {
            continue;
        }

        let generated: Vec<DVector<f64>> = products_up_to(&found, degree)
            .iter()
            .map(|p| DVector::from_iterator(basis.len(), basis.iter().map(|e| p.coefficient(e))))
            .collect();
        let complement = match orthonormal_columns(&generated) {
            Some(q) => &null - &q * (q.transpose() * &null),
            None => null,
        };
        if let Some(span) = column_basis(&complement, 1e-6) {
            for v in span.column_iter() {
                let poly = DualPolynomial::new(basis.iter().cloned().zip(v.iter().copied()).collect());
                found.push((normalize(poly), degree));
            }
        }
    }
    found.into_iter().map(|(p, _)| p).collect()
}

/// All products (with repetition, at least one factor) of known Casimirs
/// with total degree at most `degree`.
fn products_up_to(found: &[(DualPolynomial, u32)], degree: u32) -> Vec<DualPolynomial> {
    let mut out: Vec<(DualPolynomial, u32, usize)> =
        found.iter().enumerate().map(|(i, (p, d))| (p.clone(), *d, i)).collect();
    let mut frontier = out.clone();
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for (p, d, last) in &frontier {
            for (i, (q, dq)) in found.iter().enumerate().skip(*last) {
                if d + dq <= degree {
                    next.push((p.mul(q), d + dq, i));
                }
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out.into_iter().map(|(p, _, _)| p).collect()
}

fn orthonormal_columns(vectors: &[DVector<f64>]) -> Option<DMatrix<f64>> {
    if vectors.is_empty() {
        return None;
    }
    let a = DMatrix::from_columns(vectors);
    let top = a.column_iter().map(|c| c.norm()).fold(0.0, f64::max);
    column_basis(&a, 1e-10 * top)
}

/// Orthonormal basis of the directions along which `a` has singular value
/// above `threshold`. Goes through the eigenvectors of the small Gram matrix
/// `aᵀa`; the left singular vectors from a direct SVD are not reliable
/// enough when `a` is rank deficient.
fn column_basis(a: &DMatrix<f64>, threshold: f64) -> Option<DMatrix<f64>> {
    let eigen = (a.transpose() * a).symmetric_eigen();
    let cols: Vec<DVector<f64>> = eigen
        .eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, &l)| l > threshold * threshold)
        .map(|(c, _)| a * eigen.eigenvectors.column(c))
        .collect();
    if cols.is_empty() {
        return None;
    }
    let n = cols.len();
    Some(DMatrix::from_columns(&cols).qr().q().columns(0, n).into_owned())
}

fn normalize(poly: DualPolynomial) -> DualPolynomial {
    let (_, lead) = poly.terms().iter().fold(
        (0.0, 1.0),
        |(best, lead), (_, c)| if c.abs() > best { (c.abs(), *c) } else { (best, lead) },
    );
    DualPolynomial::new(poly.terms().iter().map(|(e, c)| (e.clone(), c / lead)).collect())
}

fn verify(algebra: &LieAlgebra, casimir: &DualPolynomial, samples: &[Vec<f64>]) -> bool {
    samples.iter().all(|xi| {
        let st = structure_matrix(algebra, xi)
            .expect("sample has algebra dimension")
            .entries;
        let grad = DVector::from_vec(casimir.gradient(xi));
        let residual = (&st * &grad).amax();
        let scale = st.amax() * grad.amax();
        residual <= VERIFY_REL_TOL * scale.max(f64::MIN_POSITIVE)
    })
}

/// The closed-form invariants `(C1, C2)` of the Newton-Hooke coadjoint action:
/// `C1 = m`, `C2 = k² − 2mh/ω² + p²/ω²`.
pub fn orbit_invariants(xi: &DualVector, omega: f64) -> (f64, f64) {
    let w2 = omega * omega;
    (xi.m, xi.k * xi.k - 2.0 * xi.m * xi.h / w2 + xi.p * xi.p / w2)
}

/// The single invariant `k² + p²/ω²` that survives on the `m = 0` stratum.
pub fn massless_invariant(xi: &DualVector, omega: f64) -> f64 {
    xi.k * xi.k + xi.p * xi.p / (omega * omega)
}

/// Principal angles (radians, ascending) between the column spans of `a` and `b`.
pub fn principal_angles(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Vec<f64> {
    let qa = a.clone().qr().q();
    let qb = b.clone().qr().q();
    // Singular values of (I - Qb Qbᵀ) Qa are the sines of the angles, which
    // stay accurate for small angles where the cosines would not.
    let residual = &qa - &qb * (qb.transpose() * &qa);
    let mut angles: Vec<f64> = residual.singular_values().iter().map(|s| s.min(1.0).asin()).collect();
    angles.sort_by(|x, y| x.partial_cmp(y).expect("finite angles"));
    angles
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::nh_algebra;

    #[test]
    fn structure_matrix_at_sample_point() {
        let a = nh_algebra(1.0).unwrap();
        let s = structure_matrix(&a, &[1.0, 0.5, 0.0, 1.0]).unwrap().entries;
        #[rustfmt::skip]
        let expected = DMatrix::from_row_slice(4, 4, &[
            0.0, 0.0, 0.0, 0.0,
            0.0, 0.0, 1.0, 0.0,
            0.0, -1.0, 0.0, -1.0,
            0.0, 0.0, 1.0, 0.0,
        ]);
        assert_eq!(s, expected);
    }

    #[test]
    fn structure_matrix_general_point() {
        let w = 1.5;
        let a = nh_algebra(w).unwrap();
        let (m, h, p, k) = (0.3, -1.1, 0.7, 2.0);
        let s = structure_matrix(&a, &[m, h, p, k]).unwrap().entries;
        assert_eq!(s[(1, 2)], w * w * k);
        assert_eq!(s[(1, 3)], -p);
        assert_eq!(s[(2, 3)], -m);
        assert_eq!(s, -s.transpose());
        assert_eq!(s.row(0).amax(), 0.0);
    }

    #[test]
    fn structure_matrix_vanishes() {
        let a = nh_algebra(1.0).unwrap();
        assert_eq!(structure_matrix(&a, &[0.0; 4]).unwrap().entries, DMatrix::zeros(4, 4));
        assert_eq!(
            structure_matrix(&a, &[0.0, 3.0, 0.0, 0.0]).unwrap().entries,
            DMatrix::zeros(4, 4)
        );
        assert!(matches!(
            structure_matrix(&a, &[1.0]),
            Err(InvariantError::Dimension { dim: 4, got: 1 })
        ));
    }

    #[test]
    fn ranks() {
        let a = nh_algebra(1.0).unwrap();
        assert_eq!(symplectic_rank(&a, &[1.0, 0.2, -0.3, 0.4], 1e-10).unwrap(), 2);
        assert_eq!(symplectic_rank(&a, &[0.0; 4], 1e-10).unwrap(), 0);
        assert_eq!(symplectic_rank(&a, &[0.0, 1.0, 0.5, 0.0], 1e-10).unwrap(), 2);
    }

    #[test]
    fn invariant_values() {
        assert_eq!(orbit_invariants(&DualVector::new(1.0, 0.5, 0.0, 1.0), 1.0), (1.0, 0.0));
        assert_eq!(orbit_invariants(&DualVector::new(3.0, 0.0, 0.0, 0.0), 2.0), (3.0, 0.0));
        assert_eq!(
            orbit_invariants(&DualVector::new(2.0, 3.0, 1.0, 1.0), 1.0),
            (2.0, -10.0)
        );
        assert_eq!(massless_invariant(&DualVector::new(0.0, 5.0, 2.0, 1.0), 2.0), 2.0);
    }

    #[test]
    fn monomial_enumeration() {
        let m = monomials(4, 2);
        assert_eq!(m.len(), 14);
        assert_eq!(m[0], vec![0, 0, 0, 1]);
        assert_eq!(*m.last().unwrap(), vec![2, 0, 0, 0]);
        assert!(m.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn polynomial_gradient_matches_finite_differences() {
        let p = DualPolynomial::new(vec![
            (vec![1, 1, 0, 0], -2.0),
            (vec![0, 0, 2, 0], 1.0),
            (vec![0, 0, 0, 2], 4.0),
        ]);
        let xi = [0.7, -0.3, 1.1, 0.4];
        let g = p.gradient(&xi);
        let h = 1e-6;
        for j in 0..4 {
            let mut up = xi;
            let mut down = xi;
            up[j] += h;
            down[j] -= h;
            let fd = (p.eval(&up) - p.eval(&down)) / (2.0 * h);
            assert!((fd - g[j]).abs() < 1e-8);
        }
    }

    #[test]
    fn abelian_coordinates_are_casimirs() {
        let a = LieAlgebra::abelian(2).unwrap();
        let basis = fit_casimirs(&a, 1, 10, 7).unwrap();
        assert_eq!(basis.len(), 2);
        let expected = DMatrix::identity(2, 2);
        let angles = principal_angles(&basis.coefficients.transpose(), &expected);
        assert!(angles.iter().all(|&x| x < 1e-12));
    }

    #[test]
    fn fit_rejects_bad_arguments() {
        let a = nh_algebra(1.0).unwrap();
        assert_eq!(fit_casimirs(&a, 0, 100, 1), Err(InvariantError::DegreeCap));
        assert_eq!(
            fit_casimirs(&a, 2, 69, 1),
            Err(InvariantError::TooFewSamples {
                given: 69,
                required: 70
            })
        );
    }

    #[test]
    fn principal_angles_of_known_planes() {
        let a = DMatrix::from_column_slice(3, 1, &[1.0, 0.0, 0.0]);
        let b = DMatrix::from_column_slice(3, 1, &[1.0, 1.0, 0.0]);
        let angles = principal_angles(&a, &b);
        assert!((angles[0] - std::f64::consts::FRAC_PI_4).abs() < 1e-15);
    }
}
