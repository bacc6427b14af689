//! Coadjoint action of the Newton-Hooke group on the dual `g*`.
//!
//! Dual vectors are row vectors `ξ = [m, h, p, k]` and a group element acts
//! by right multiplication, `ξ' = ξ · M(g)`, where for
//! `g = e^{ηM} e^{bH} e^{aP} e^{vK}`
//!
//! ```text
//! M(g) = e^{-v ad_K} e^{-a ad_P} e^{-b ad_H} e^{-η ad_M}.
//! ```
//!
//! Composition of several group elements is only exposed through products
//! of these matrices; there is no abstract group law here.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::algebra::{nh, LieAlgebra};

/// Default truncation tolerance for [`matrix_exp`].
pub const DEFAULT_EXP_TOL: f64 = 1e-13;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoadjointError {
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("algebra has dimension {0}, expected 4 with basis (M, H, P, K)")]
    Dimension(usize),
}

/// Coordinates `(η, b, a, v)` of `g = e^{ηM} e^{bH} e^{aP} e^{vK}`.
///
/// `b` is a time, `a` a length and `v` a velocity.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GroupCoords {
    pub eta: f64,
    pub b: f64,
    pub a: f64,
    pub v: f64,
}

impl GroupCoords {
    pub fn new(eta: f64, b: f64, a: f64, v: f64) -> Self {
        Self { eta, b, a, v }
    }

    pub fn identity() -> Self {
        Self::default()
    }

    /// `exp(τ H)`: time evolution by `τ`.
    pub fn time_shift(tau: f64) -> Self {
        Self {
            b: tau,
            ..Self::default()
        }
    }

    /// `exp(l P)`: displacement by `l`.
    pub fn space_shift(l: f64) -> Self {
        Self {
            a: l,
            ..Self::default()
        }
    }

    /// `exp(u K)`: boost by velocity `u`.
    pub fn boost(u: f64) -> Self {
        Self {
            v: u,
            ..Self::default()
        }
    }

    /// `exp(η M)`, which acts trivially.
    pub fn central(eta: f64) -> Self {
        Self { eta, ..Self::default() }
    }

    pub fn is_finite(&self) -> bool {
        [self.eta, self.b, self.a, self.v].iter().all(|x| x.is_finite())
    }
}

/// A point `[m, h, p, k]` of the dual of the Newton-Hooke algebra.
///
/// `m` is a mass, `h` an energy, `p` a momentum and `k = m x`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DualVector {
    pub m: f64,
    pub h: f64,
    pub p: f64,
    pub k: f64,
}

impl DualVector {
    pub fn new(m: f64, h: f64, p: f64, k: f64) -> Self {
        Self { m, h, p, k }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.m, self.h, self.p, self.k]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    /// Euclidean norm of the four components.
    pub fn norm(&self) -> f64 {
        self.to_array().iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.to_array()
            .iter()
            .zip(other.to_array())
            .fold(0.0, |acc, (a, b)| acc.max((a - b).abs()))
    }

    /// `ξ · M` for a 4x4 matrix acting on the right.
    pub fn act(&self, matrix: &DMatrix<f64>) -> Self {
        let x = self.to_array();
        let mut out = [0.0; 4];
        for (col, slot) in out.iter_mut().enumerate() {
            *slot = (0..4).map(|row| x[row] * matrix[(row, col)]).sum();
        }
        Self::from_array(out)
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|x| x.is_finite())
    }
}

/// Matrix exponential by scaling and squaring with a truncated Taylor series.
///
/// The matrix is scaled by `2^-s` with `s = max(0, ⌈log2 ‖A‖₁⌉)`, the series
/// is summed until the remainder bound drops below `min(tol, ε)` relative to
/// the partial sum, and the result is squared `s` times.
pub fn matrix_exp(a: &DMatrix<f64>, tol: f64) -> Result<DMatrix<f64>, CoadjointError> {
    let (rows, cols) = a.shape();
    if rows != cols {
        return Err(CoadjointError::NotSquare { rows, cols });
    }
    let n = rows;
    let identity = DMatrix::<f64>::identity(n, n);
    let norm = one_norm(a);
    if norm == 0.0 {
        return Ok(identity);
    }

    let squarings = if norm > 1.0 { norm.log2().ceil() as i32 } else { 0 };
    let scaled = a * 2f64.powi(-squarings);
    let scaled_norm = norm * 2f64.powi(-squarings);

    let mut sum = identity.clone();
    let mut term = identity;
    let mut order = 0u32;
    loop {
        order += 1;
        term = &term * &scaled / order as f64;
        if term.iter().all(|&x| x == 0.0) {
            break;
        }
        sum += &term;
        // tail after T_N is bounded by ‖T_N‖ (x/(N+1)) / (1 - x/(N+2)), x = ‖A_s‖ ≤ 1
        let n = order as f64;
        let remainder = one_norm(&term) * (scaled_norm / (n + 1.0)) / (1.0 - scaled_norm / (n + 2.0));
        if remainder <= tol.min(f64::EPSILON) * one_norm(&sum) || order >= 40 {
            break;
        }
    }

    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    Ok(sum)
}

fn one_norm(a: &DMatrix<f64>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn check_dim(algebra: &LieAlgebra) -> Result<(), CoadjointError> {
    if algebra.dim() == 4 {
        Ok(())
    } else {
        Err(CoadjointError::Dimension(algebra.dim()))
    }
}

fn ad(algebra: &LieAlgebra, i: usize) -> DMatrix<f64> {
    algebra.ad_matrix(i).expect("dimension checked").entries
}

/// `e^{-v ad_K} e^{-a ad_P} e^{-b ad_H} e^{-η ad_M}`, built from matrix
/// exponentials of the adjoint matrices of `algebra`.
pub fn coad_matrix(algebra: &LieAlgebra, g: &GroupCoords) -> Result<DMatrix<f64>, CoadjointError> {
    check_dim(algebra)?;
    let factor = |i: usize, t: f64| matrix_exp(&(ad(algebra, i) * -t), DEFAULT_EXP_TOL);
    Ok(factor(nh::K, g.v)? * factor(nh::P, g.a)? * factor(nh::H, g.b)? * factor(nh::M, g.eta)?)
}

/// The coadjoint matrix of `g⁻¹`: the factors of [`coad_matrix`] negated
/// and in reverse order.
pub fn coad_matrix_inverse(algebra: &LieAlgebra, g: &GroupCoords) -> Result<DMatrix<f64>, CoadjointError> {
    check_dim(algebra)?;
    let factor = |i: usize, t: f64| matrix_exp(&(ad(algebra, i) * t), DEFAULT_EXP_TOL);
    Ok(factor(nh::M, g.eta)? * factor(nh::H, g.b)? * factor(nh::P, g.a)? * factor(nh::K, g.v)?)
}

/// `ξ · coad_matrix(g)`.
pub fn coad_apply_matrix(algebra: &LieAlgebra, xi: &DualVector, g: &GroupCoords) -> Result<DualVector, CoadjointError> {
    Ok(xi.act(&coad_matrix(algebra, g)?))
}

/// Closed-form coadjoint action of the Newton-Hooke group with frequency `omega`.
pub fn coad_apply_closed(xi: &DualVector, g: &GroupCoords, omega: f64) -> DualVector {
    let DualVector { m, h, p, k } = *xi;
    let GroupCoords { a, b, v, .. } = *g;
    let (sin, cos) = (b * omega).sin_cos();
    let w2 = omega * omega;
    let moving_p = p - m * v;
    let shifted_k = m * a + k;
    DualVector {
        m,
        h: h + 0.5 * m * v * v + 0.5 * m * a * a * w2 - v * p + a * w2 * k,
        p: moving_p * cos - omega * shifted_k * sin,
        k: shifted_k * cos + moving_p / omega * sin,
    }
}
