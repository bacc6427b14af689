//! Finite-dimensional real Lie algebras given by structure constants.
//!
//! A basis `J_0 .. J_{n-1}` is fixed and the bracket is encoded as
//! `[J_i, J_j] = c[i][j][k] J_k`, stored densely. Indices are 0-based in
//! the API; the text format and the CLI use 1-based indices.

use std::fmt;

use nalgebra::DMatrix;
use thiserror::Error;

/// Default absolute tolerance for antisymmetry and Jacobi residuals.
pub const DEFAULT_JACOBI_TOL: f64 = 1e-12;

/// Basis positions of the Newton-Hooke generators.
pub mod nh {
    pub const M: usize = 0;
    pub const H: usize = 1;
    pub const P: usize = 2;
    pub const K: usize = 3;
    pub const LABELS: [&str; 4] = ["M", "H", "P", "K"];
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlgebraError {
    #[error("dimension must be positive")]
    ZeroDimension,
    #[error("tensor has {got} entries, expected {expected} for dimension {dim}")]
    Shape { dim: usize, expected: usize, got: usize },
    #[error("expected {expected} labels, got {got}")]
    LabelCount { expected: usize, got: usize },
    #[error("basis index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("structure constant c[{i}][{j}][{k}] is not finite")]
    NonFinite { i: usize, j: usize, k: usize },
    #[error("bracket of a generator with itself must vanish, got c[{i}][{i}][{k}] = {value}")]
    Diagonal { i: usize, k: usize, value: f64 },
    #[error("structure constant for ({i}, {j}, {k}) given twice")]
    Duplicate { i: usize, j: usize, k: usize },
    #[error("frequency must be finite and strictly positive, got {0}")]
    Frequency(f64),
}

/// A real Lie algebra in a fixed basis.
#[derive(Debug, Clone, PartialEq)]
pub struct LieAlgebra {
    labels: Vec<String>,
    c: Vec<f64>,
    frequency: Option<f64>,
}

impl LieAlgebra {
    /// Builds an algebra from its nonzero constants `(i, j, k, c_ij^k)`;
    /// the partner `c_ji^k = -c_ij^k` is filled in automatically.
    pub fn from_constants<S: AsRef<str>>(
        labels: &[S],
        constants: &[(usize, usize, usize, f64)],
    ) -> Result<Self, AlgebraError> {
        let dim = labels.len();
        if dim == 0 {
            return Err(AlgebraError::ZeroDimension);
        }
        let mut c = vec![0.0; dim * dim * dim];
        let mut seen = vec![false; dim * dim * dim];
        for &(i, j, k, value) in constants {
            for index in [i, j, k] {
                if index >= dim {
                    return Err(AlgebraError::IndexOutOfRange { index, dim });
                }
            }
            if !value.is_finite() {
                return Err(AlgebraError::NonFinite { i, j, k });
            }
            if i == j {
                if value != 0.0 {
                    return Err(AlgebraError::Diagonal { i, k, value });
                }
                continue;
            }
            let ij = (i * dim + j) * dim + k;
            let ji = (j * dim + i) * dim + k;
            if seen[ij] {
                return Err(AlgebraError::Duplicate { i, j, k });
            }
            seen[ij] = true;
            seen[ji] = true;
            c[ij] = value;
            c[ji] = -value;
        }
        Ok(Self {
            labels: labels.iter().map(|s| s.as_ref().to_string()).collect(),
            c,
            frequency: None,
        })
    }

    /// Wraps a raw dense tensor without enforcing antisymmetry, so that
    /// [`LieAlgebra::validate`] can report on arbitrary input.
    pub fn from_tensor<S: AsRef<str>>(labels: &[S], c: Vec<f64>) -> Result<Self, AlgebraError> {
        let dim = labels.len();
        if dim == 0 {
            return Err(AlgebraError::ZeroDimension);
        }
        let expected = dim * dim * dim;
        if c.len() != expected {
            return Err(AlgebraError::Shape {
                dim,
                expected,
                got: c.len(),
            });
        }
        if let Some(pos) = c.iter().position(|x| !x.is_finite()) {
            let (i, j, k) = (pos / (dim * dim), (pos / dim) % dim, pos % dim);
            return Err(AlgebraError::NonFinite { i, j, k });
        }
        Ok(Self {
            labels: labels.iter().map(|s| s.as_ref().to_string()).collect(),
            c,
            frequency: None,
        })
    }

    /// The abelian algebra of the given dimension, labels `J1 .. Jn`.
    pub fn abelian(dim: usize) -> Result<Self, AlgebraError> {
        Self::from_constants(&default_labels(dim), &[])
    }

    pub fn with_labels<S: AsRef<str>>(mut self, labels: &[S]) -> Result<Self, AlgebraError> {
        if labels.len() != self.dim() {
            return Err(AlgebraError::LabelCount {
                expected: self.dim(),
                got: labels.len(),
            });
        }
        self.labels = labels.iter().map(|s| s.as_ref().to_string()).collect();
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// The oscillator frequency, for algebras built by [`nh_algebra`].
    pub fn frequency(&self) -> Option<f64> {
        self.frequency
    }

    /// `c_ij^k`. Panics on out-of-range indices.
    pub fn constant(&self, i: usize, j: usize, k: usize) -> f64 {
        let n = self.dim();
        assert!(i < n && j < n && k < n, "basis index out of range");
        self.c[(i * n + j) * n + k]
    }

    /// Overwrites a single entry, leaving its antisymmetric partner alone.
    pub fn set_constant(&mut self, i: usize, j: usize, k: usize, value: f64) {
        let n = self.dim();
        assert!(i < n && j < n && k < n, "basis index out of range");
        self.c[(i * n + j) * n + k] = value;
        self.frequency = None;
    }

    pub fn tensor(&self) -> &[f64] {
        &self.c
    }

    /// Nonzero constants with `i < j`, in index order.
    pub fn nonzero_constants(&self) -> Vec<(usize, usize, usize, f64)> {
        let n = self.dim();
        let mut out = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                for k in 0..n {
                    let value = self.constant(i, j, k);
                    if value != 0.0 {
                        out.push((i, j, k, value));
                    }
                }
            }
        }
        out
    }

    /// Checks antisymmetry and the Jacobi identity.
    pub fn validate(&self, tol: f64) -> ValidationReport {
        let n = self.dim();
        let mut antisymmetry_residual = 0.0;
        let mut antisymmetry_at = None;
        for i in 0..n {
            for j in i..n {
                for k in 0..n {
                    let r = (self.constant(i, j, k) + self.constant(j, i, k)).abs();
                    if r > antisymmetry_residual {
                        antisymmetry_residual = r;
                        antisymmetry_at = Some((i, j, k));
                    }
                }
            }
        }

        // For an antisymmetric tensor the cyclic sum is totally antisymmetric
        // in (i, j, k), but the tensor may not be antisymmetric here, so scan
        // every ordered triple and keep the first worst one.
        let mut jacobi_residual = 0.0;
        let mut jacobi_at = None;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let r = self.jacobi_sum(i, j, k, l).abs();
                        if r > jacobi_residual {
                            jacobi_residual = r;
                            jacobi_at = Some((i, j, k, l));
                        }
                    }
                }
            }
        }

        ValidationReport {
            passed: antisymmetry_residual <= tol && jacobi_residual <= tol,
            tol,
            antisymmetry_residual,
            antisymmetry_at,
            jacobi_residual,
            jacobi_at,
        }
    }

    fn jacobi_sum(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        (0..self.dim())
            .map(|m| {
                self.constant(i, j, m) * self.constant(m, k, l)
                    + self.constant(j, k, m) * self.constant(m, i, l)
                    + self.constant(k, i, m) * self.constant(m, j, l)
            })
            .sum()
    }

    /// Matrix of `ad(J_i)` with `entries[(j, k)] = c_ik^j`.
    pub fn ad_matrix(&self, i: usize) -> Result<AdMatrix, AlgebraError> {
        let n = self.dim();
        if i >= n {
            return Err(AlgebraError::IndexOutOfRange { index: i, dim: n });
        }
        let entries = DMatrix::from_fn(n, n, |j, k| self.constant(i, k, j));
        Ok(AdMatrix { generator: i, entries })
    }

    /// Indices whose adjoint matrix vanishes within `tol`.
    pub fn center(&self, tol: f64) -> Vec<usize> {
        (0..self.dim())
            .filter(|&i| {
                let ad = self.ad_matrix(i).expect("index in range");
                ad.entries.amax() <= tol
            })
            .collect()
    }

    /// Serializes into the line-oriented algebra format read by [`parse_algebra`].
    pub fn to_text(&self) -> String {
        let mut out = format!("dim {}\nlabels {}\n", self.dim(), self.labels.join(" "));
        for (i, j, k, value) in self.nonzero_constants() {
            out.push_str(&format!("{} {} {} {:?}\n", i + 1, j + 1, k + 1, value));
        }
        out
    }
}

/// The (1+1) Newton-Hooke algebra in the basis (M, H, P, K):
/// `[H,P] = ω² K`, `[H,K] = -P`, `[P,K] = -M`, with M central.
pub fn nh_algebra(omega: f64) -> Result<LieAlgebra, AlgebraError> {
    if !(omega.is_finite() && omega > 0.0) {
        return Err(AlgebraError::Frequency(omega));
    }
    use nh::*;
    let mut algebra =
        LieAlgebra::from_constants(&LABELS, &[(H, P, K, omega * omega), (H, K, P, -1.0), (P, K, M, -1.0)])?;
    algebra.frequency = Some(omega);
    Ok(algebra)
}

pub(crate) fn default_labels(dim: usize) -> Vec<String> {
    (1..=dim).map(|i| format!("J{i}")).collect()
}

/// The adjoint matrix of one basis generator.
#[derive(Debug, Clone, PartialEq)]
pub struct AdMatrix {
    pub generator: usize,
    pub entries: DMatrix<f64>,
}

/// Outcome of [`LieAlgebra::validate`]. Index tuples are 0-based.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub passed: bool,
    pub tol: f64,
    pub antisymmetry_residual: f64,
    /// `(i, j, k)` of the largest `|c_ij^k + c_ji^k|`.
    pub antisymmetry_at: Option<(usize, usize, usize)>,
    pub jacobi_residual: f64,
    /// `(i, j, k, l)` of the largest Jacobi sum.
    pub jacobi_at: Option<(usize, usize, usize, usize)>,
}

impl ValidationReport {
    pub fn antisymmetry_ok(&self) -> bool {
        self.antisymmetry_residual <= self.tol
    }

    pub fn jacobi_ok(&self) -> bool {
        self.jacobi_residual <= self.tol
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} (antisymmetry residual {:e}, jacobi residual {:e}, tol {:e})",
            if self.passed { "PASS" } else { "FAIL" },
            self.antisymmetry_residual,
            self.jacobi_residual,
            self.tol
        )
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

/// Reads the algebra text format:
///
/// ```text
/// dim 4
/// labels M H P K
/// 2 3 4 1.0
/// ```
///
/// Indices are 1-based; `#` starts a comment.
pub fn parse_algebra(text: &str) -> Result<LieAlgebra, ParseError> {
    let err = |line: usize, message: String| ParseError { line, message };
    let mut dim: Option<(usize, usize)> = None;
    let mut labels: Option<Vec<String>> = None;
    let mut constants: Vec<(usize, usize, usize, f64)> = Vec::new();
    let mut origin: Vec<usize> = Vec::new();

    for (number, raw) in text.lines().enumerate() {
        let line_no = number + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        match fields[0] {
            "dim" => {
                if dim.is_some() {
                    return Err(err(line_no, "repeated `dim` line".into()));
                }
                if fields.len() != 2 {
                    return Err(err(line_no, "expected `dim <n>`".into()));
                }
                let n: usize = fields[1]
                    .parse()
                    .map_err(|_| err(line_no, format!("invalid dimension `{}`", fields[1])))?;
                if n == 0 {
                    return Err(err(line_no, "dimension must be positive".into()));
                }
                dim = Some((n, line_no));
            }
            "labels" => {
                let Some((n, _)) = dim else {
                    return Err(err(line_no, "`labels` before `dim`".into()));
                };
                if labels.is_some() || !constants.is_empty() {
                    return Err(err(line_no, "`labels` must directly follow `dim`".into()));
                }
                if fields.len() - 1 != n {
                    return Err(err(line_no, format!("expected {n} labels, got {}", fields.len() - 1)));
                }
                labels = Some(fields[1..].iter().map(|s| s.to_string()).collect());
            }
            _ => {
                let Some((n, _)) = dim else {
                    return Err(err(line_no, "first line must be `dim <n>`".into()));
                };
                if fields.len() != 4 {
                    return Err(err(line_no, "expected `<i> <j> <k> <value>`".into()));
                }
                let mut idx = [0usize; 3];
                for (slot, field) in idx.iter_mut().zip(&fields[..3]) {
                    let v: usize = field
                        .parse()
                        .map_err(|_| err(line_no, format!("invalid index `{field}`")))?;
                    if v == 0 || v > n {
                        return Err(err(line_no, format!("index {v} outside 1..={n}")));
                    }
                    *slot = v - 1;
                }
                let value: f64 = fields[3]
                    .parse()
                    .map_err(|_| err(line_no, format!("invalid value `{}`", fields[3])))?;
                constants.push((idx[0], idx[1], idx[2], value));
                origin.push(line_no);
            }
        }
    }

    let Some((n, _)) = dim else {
        return Err(err(1, "missing `dim <n>` line".into()));
    };
    let labels = labels.unwrap_or_else(|| default_labels(n));
    LieAlgebra::from_constants(&labels, &constants).map_err(|e| {
        let line = match &e {
            AlgebraError::Duplicate { i, j, k } => constants
                .iter()
                .zip(&origin)
                .filter(|((a, b, c, _), _)| *c == *k && ((*a == *i && *b == *j) || (*a == *j && *b == *i)))
                .map(|(_, &l)| l)
                .nth(1),
            AlgebraError::Diagonal { i, k, .. } => constants
                .iter()
                .zip(&origin)
                .find(|((a, b, c, _), _)| a == i && b == i && c == k)
                .map(|(_, &l)| l),
            AlgebraError::NonFinite { i, j, k } => constants
                .iter()
                .zip(&origin)
                .find(|((a, b, c, _), _)| a == i && b == j && c == k)
                .map(|(_, &l)| l),
            _ => None,
        };
        err(line.unwrap_or(0), e.to_string())
    })
}
