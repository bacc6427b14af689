//! Phase-space polynomials in `(p, k)` under the mass-scaled canonical
//! bracket, and recovery of structure constants from a closed set of
//! generators.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::algebra::{default_labels, LieAlgebra};

/// Highest total degree accepted for generators.
pub const MAX_GENERATOR_DEGREE: u32 = 4;

/// Default residual threshold separating closure from non-closure.
pub const DEFAULT_CLOSURE_TOL: f64 = 1e-10;

/// Polynomial in the phase-space coordinates `(p, k)`, keyed by
/// `(deg_p, deg_k)`. Zero coefficients are never stored.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PhasePolynomial {
    terms: BTreeMap<(u32, u32), f64>,
}

impl PhasePolynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(value: f64) -> Self {
        Self::monomial(value, 0, 0)
    }

    /// `coefficient * p^deg_p * k^deg_k`
    pub fn monomial(coefficient: f64, deg_p: u32, deg_k: u32) -> Self {
        let mut out = Self::zero();
        out.add_term((deg_p, deg_k), coefficient);
        out
    }

    pub fn p() -> Self {
        Self::monomial(1.0, 1, 0)
    }

    pub fn k() -> Self {
        Self::monomial(1.0, 0, 1)
    }

    pub fn from_terms(terms: impl IntoIterator<Item = ((u32, u32), f64)>) -> Self {
        let mut out = Self::zero();
        for (exps, c) in terms {
            out.add_term(exps, c);
        }
        out
    }

    fn add_term(&mut self, exps: (u32, u32), c: f64) {
        let entry = self.terms.entry(exps).or_insert(0.0);
        *entry += c;
        if *entry == 0.0 {
            self.terms.remove(&exps);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = ((u32, u32), f64)> + '_ {
        self.terms.iter().map(|(&e, &c)| (e, c))
    }

    pub fn coefficient(&self, deg_p: u32, deg_k: u32) -> f64 {
        self.terms.get(&(deg_p, deg_k)).copied().unwrap_or(0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree; the zero polynomial has degree 0.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|(a, b)| a + b).max().unwrap_or(0)
    }

    /// Largest absolute coefficient.
    pub fn max_abs_coefficient(&self) -> f64 {
        self.terms.values().fold(0.0, |acc, c| acc.max(c.abs()))
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self::from_terms(self.terms().map(|(e, c)| (e, c * factor)))
    }

    pub fn eval(&self, p: f64, k: f64) -> f64 {
        self.terms()
            .map(|((a, b), c)| c * p.powi(a as i32) * k.powi(b as i32))
            .sum()
    }

    pub fn d_dp(&self) -> Self {
        Self::from_terms(
            self.terms()
                .filter(|((a, _), _)| *a > 0)
                .map(|((a, b), c)| ((a - 1, b), c * a as f64)),
        )
    }

    pub fn d_dk(&self) -> Self {
        Self::from_terms(
            self.terms()
                .filter(|((_, b), _)| *b > 0)
                .map(|((a, b), c)| ((a, b - 1), c * b as f64)),
        )
    }
}

impl Add for &PhasePolynomial {
    type Output = PhasePolynomial;
    fn add(self, rhs: &PhasePolynomial) -> PhasePolynomial {
        let mut out = self.clone();
        for (e, c) in rhs.terms() {
            out.add_term(e, c);
        }
        out
    }
}

impl Sub for &PhasePolynomial {
    type Output = PhasePolynomial;
    fn sub(self, rhs: &PhasePolynomial) -> PhasePolynomial {
        self + &(-rhs)
    }
}

impl Neg for &PhasePolynomial {
    type Output = PhasePolynomial;
    fn neg(self) -> PhasePolynomial {
        self.scale(-1.0)
    }
}

impl Mul for &PhasePolynomial {
    type Output = PhasePolynomial;
    fn mul(self, rhs: &PhasePolynomial) -> PhasePolynomial {
        let mut out = PhasePolynomial::zero();
        for ((a1, b1), c1) in self.terms() {
            for ((a2, b2), c2) in rhs.terms() {
                out.add_term((a1 + a2, b1 + b2), c1 * c2);
            }
        }
        out
    }
}

impl fmt::Display for PhasePolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for ((a, b), c) in self.terms() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{c}")?;
            for (name, e) in [("p", a), ("k", b)] {
                match e {
                    0 => {}
                    1 => write!(f, "*{name}")?,
                    _ => write!(f, "*{name}^{e}")?,
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RealizationError {
    #[error("mass scale must be finite and strictly positive, got {0}")]
    MassScale(f64),
    #[error("no generators given")]
    Empty,
    #[error("generator {index} has degree {degree}, above the supported {MAX_GENERATOR_DEGREE}")]
    DegreeTooHigh { index: usize, degree: u32 },
    #[error("generators are linearly dependent (rank {rank} of {count})")]
    Dependent { rank: usize, count: usize },
    #[error(transparent)]
    Closure(#[from] ClosureFailure),
}

/// A bracket of two generators that does not lie in their span.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("bracket of generators {} and {} leaves the span (residual {residual_norm:e}: {residual})", .pair.0 + 1, .pair.1 + 1)]
pub struct ClosureFailure {
    /// 0-based generator indices, `pair.0 < pair.1`.
    pub pair: (usize, usize),
    pub residual: PhasePolynomial,
    pub residual_norm: f64,
}

/// Scale `m` of the bracket `{F, G} = m (∂F/∂k ∂G/∂p − ∂F/∂p ∂G/∂k)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BracketSpec {
    mass_scale: f64,
}

impl BracketSpec {
    pub fn new(mass_scale: f64) -> Result<Self, RealizationError> {
        if mass_scale.is_finite() && mass_scale > 0.0 {
            Ok(Self { mass_scale })
        } else {
            Err(RealizationError::MassScale(mass_scale))
        }
    }

    /// The unscaled canonical bracket.
    pub fn canonical() -> Self {
        Self { mass_scale: 1.0 }
    }

    pub fn mass_scale(&self) -> f64 {
        self.mass_scale
    }
}

pub fn poisson_bracket(f: &PhasePolynomial, g: &PhasePolynomial, spec: &BracketSpec) -> PhasePolynomial {
    let first = &f.d_dk() * &g.d_dp();
    let second = &f.d_dp() * &g.d_dk();
    (&first - &second).scale(spec.mass_scale)
}

/// `p²/2m + ω²k²/2m`, the oscillator energy with `k = m x`.
pub fn oscillator_hamiltonian(mass: f64, omega: f64) -> PhasePolynomial {
    PhasePolynomial::from_terms([((2, 0), 0.5 / mass), ((0, 2), 0.5 * omega * omega / mass)])
}

/// The realized Newton-Hooke generators `(m, h(p,k), p, k)`.
pub fn nh_generators(mass: f64, omega: f64) -> Vec<PhasePolynomial> {
    vec![
        PhasePolynomial::constant(mass),
        oscillator_hamiltonian(mass, omega),
        PhasePolynomial::p(),
        PhasePolynomial::k(),
    ]
}

/// Fits `{J_i, J_j} = c_ij^k J_k` for every pair by least squares on the
/// monomial coefficients. Fails on the first pair (in index order) whose
/// bracket leaves the span by more than `tol`.
pub fn extract_structure_constants(
    generators: &[PhasePolynomial],
    spec: &BracketSpec,
    tol: f64,
) -> Result<LieAlgebra, RealizationError> {
    let n = generators.len();
    if n == 0 {
        return Err(RealizationError::Empty);
    }
    if let Some((index, g)) = generators
        .iter()
        .enumerate()
        .find(|(_, g)| g.degree() > MAX_GENERATOR_DEGREE)
    {
        return Err(RealizationError::DegreeTooHigh {
            index,
            degree: g.degree(),
        });
    }

    let monomials: Vec<(u32, u32)> = generators
        .iter()
        .flat_map(|g| g.terms().map(|(e, _)| e))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let basis = DMatrix::from_fn(monomials.len(), n, |r, c| {
        let (a, b) = monomials[r];
        generators[c].coefficient(a, b)
    });

    let singular_values = basis.singular_values();
    let sigma_max = singular_values.max();
    let rank = singular_values
        .iter()
        .filter(|&&s| s > sigma_max * 1e-12 * monomials.len().max(n) as f64)
        .count();
    if rank < n {
        return Err(RealizationError::Dependent { rank, count: n });
    }
    let qr = basis.qr();
    let (q, r) = (qr.q(), qr.r());

    let mut constants = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let bracket = poisson_bracket(&generators[i], &generators[j], spec);
            let rhs = DVector::from_fn(monomials.len(), |r, _| {
                let (a, b) = monomials[r];
                bracket.coefficient(a, b)
            });
            let mut coeffs = r
                .solve_upper_triangular(&(q.transpose() * rhs))
                .expect("full column rank");
            // rounding noise from the solve; the residual check below still applies
            let noise = 64.0 * f64::EPSILON * coeffs.amax();
            coeffs.iter_mut().filter(|c| c.abs() <= noise).for_each(|c| *c = 0.0);
            let fitted = generators
                .iter()
                .zip(coeffs.iter())
                .fold(PhasePolynomial::zero(), |acc, (g, &c)| &acc + &g.scale(c));
            let residual = &bracket - &fitted;
            let residual_norm = residual.max_abs_coefficient();
            if residual_norm > tol {
                return Err(ClosureFailure {
                    pair: (i, j),
                    residual,
                    residual_norm,
                }
                .into());
            }
            for (k, &c) in coeffs.iter().enumerate() {
                if c != 0.0 {
                    constants.push((i, j, k, c));
                }
            }
        }
    }
    Ok(LieAlgebra::from_constants(&default_labels(n), &constants)
        .expect("fitted constants are finite and indexed in range"))
}
