//! The damped oscillator `ẍ + 2γẋ + ω0²x = 0` and its canonical map onto an
//! autonomous oscillator.
//!
//! Starting from the time-dependent Hamiltonian
//! `h = 𝒫² e^{−2γt}/2m + ½ m ω0² e^{2γt} x²`, the time-dependent linear map
//!
//! ```text
//! [𝒫]   [e^{γt}  −mγ e^{γt}] [P]        [P]   [e^{−γt}  mγ e^{γt}] [𝒫]
//! [x] = [0        e^{−γt}  ] [Q],       [Q] = [0         e^{γt}  ] [x]
//! ```
//!
//! (generated by `F2 = e^{γt} x P − ½ m γ e^{2γt} x²`) takes `h` to
//! `H = h + ∂F2/∂t = P²/2m + ½ m (ω0² − γ²) Q²`, which realizes the same
//! Newton-Hooke algebra as an undamped oscillator of frequency
//! `ω = sqrt(ω0² − γ²)`.

use std::io::{self, Write};

use thiserror::Error;

use crate::algebra::LieAlgebra;
use crate::csv::fmt_f64;
use crate::orbit::{hamiltonian_vector_field, make_orbit, midpoint_step, rk4_step, Method, OrbitChart, OrbitError};
use crate::realization::{
    extract_structure_constants, poisson_bracket, BracketSpec, PhasePolynomial, RealizationError,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DampedError {
    #[error("mass must be finite and positive, got {0}")]
    Mass(f64),
    #[error("friction coefficient must be finite and non-negative, got {0}")]
    Friction(f64),
    #[error("undamped frequency must be finite and positive, got {0}")]
    Frequency(f64),
    #[error(
        "not underdamped: ω0 = {omega0} must exceed γ = β/2m = {gamma}; \
         critical and overdamped motion has no real oscillation frequency"
    )]
    NotUnderdamped { omega0: f64, gamma: f64 },
    #[error("initial state must be finite")]
    InitialState,
    #[error(transparent)]
    Orbit(#[from] OrbitError),
}

/// Mass `m`, friction `β` and undamped frequency `ω0`; `γ = β/2m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DampedParams {
    m: f64,
    beta: f64,
    omega0: f64,
}

impl DampedParams {
    pub fn new(m: f64, beta: f64, omega0: f64) -> Result<Self, DampedError> {
        if !(m.is_finite() && m > 0.0) {
            return Err(DampedError::Mass(m));
        }
        if !(beta.is_finite() && beta >= 0.0) {
            return Err(DampedError::Friction(beta));
        }
        if !(omega0.is_finite() && omega0 > 0.0) {
            return Err(DampedError::Frequency(omega0));
        }
        let gamma = beta / (2.0 * m);
        if omega0 <= gamma {
            return Err(DampedError::NotUnderdamped { omega0, gamma });
        }
        Ok(Self { m, beta, omega0 })
    }

    /// Parameters from the damping rate `γ` instead of `β = 2mγ`.
    pub fn from_gamma(m: f64, gamma: f64, omega0: f64) -> Result<Self, DampedError> {
        Self::new(m, 2.0 * m * gamma, omega0)
    }

    pub fn mass(&self) -> f64 {
        self.m
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    pub fn gamma(&self) -> f64 {
        self.beta / (2.0 * self.m)
    }

    /// Effective frequency `sqrt(ω0² − γ²)`.
    pub fn omega(&self) -> f64 {
        let g = self.gamma();
        (self.omega0 * self.omega0 - g * g).sqrt()
    }

    /// `[[e^{γt}, −mγe^{γt}], [0, e^{−γt}]]`, old `(𝒫, x)` from new `(P, Q)`.
    pub fn old_from_new(&self, t: f64) -> [[f64; 2]; 2] {
        let g = self.gamma();
        let up = (g * t).exp();
        [[up, -self.m * g * up], [0.0, 1.0 / up]]
    }

    /// `[[e^{−γt}, mγe^{γt}], [0, e^{γt}]]`, new `(P, Q)` from old `(𝒫, x)`.
    pub fn new_from_old(&self, t: f64) -> [[f64; 2]; 2] {
        let g = self.gamma();
        let up = (g * t).exp();
        [[1.0 / up, self.m * g * up], [0.0, up]]
    }
}

/// `(t, x, 𝒫)` with the canonical momentum `𝒫 = m ẋ e^{2γt}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DampedState {
    pub t: f64,
    pub x: f64,
    pub momentum: f64,
}

/// `(t, Q, P)` in the transformed chart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewState {
    pub t: f64,
    pub q: f64,
    pub momentum: f64,
}

pub fn damped_hamiltonian(params: &DampedParams, s: &DampedState) -> f64 {
    let m = params.m;
    let e = (2.0 * params.gamma() * s.t).exp();
    s.momentum * s.momentum / (2.0 * m * e) + 0.5 * m * params.omega0 * params.omega0 * e * s.x * s.x
}

pub fn to_new(params: &DampedParams, s: &DampedState) -> NewState {
    let a = params.new_from_old(s.t);
    NewState {
        t: s.t,
        momentum: a[0][0] * s.momentum + a[0][1] * s.x,
        q: a[1][0] * s.momentum + a[1][1] * s.x,
    }
}

pub fn from_new(params: &DampedParams, n: &NewState) -> DampedState {
    let a = params.old_from_new(n.t);
    DampedState {
        t: n.t,
        momentum: a[0][0] * n.momentum + a[0][1] * n.q,
        x: a[1][0] * n.momentum + a[1][1] * n.q,
    }
}

/// Determinant of the `(𝒫, x) → (P, Q)` Jacobian and its deviation from 1.
/// In one degree of freedom the map is canonical iff the determinant is 1.
pub fn canonicity_check(params: &DampedParams, t: f64) -> (f64, f64) {
    let a = params.new_from_old(t);
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    (det, (det - 1.0).abs())
}

pub fn transformed_hamiltonian(params: &DampedParams, n: &NewState) -> f64 {
    let w = params.omega();
    n.momentum * n.momentum / (2.0 * params.m) + 0.5 * params.m * w * w * n.q * n.q
}

/// `∂F2/∂t = γQP − mγ²Q²`, the difference `H − h` at corresponding states.
pub fn generating_function_rate(params: &DampedParams, n: &NewState) -> f64 {
    let g = params.gamma();
    g * n.q * n.momentum - params.m * g * g * n.q * n.q
}

/// Brackets of the naive realization `{m, h(𝒫, k, t), 𝒫, k}` with `k = m x`:
/// `{h, 𝒫} = a k`, `{h, k} = b 𝒫`, `{k, 𝒫} = c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BracketTable {
    pub t: f64,
    /// `a = ω0² e^{2γt}`
    pub h_momentum: f64,
    /// `b = −e^{−2γt}`
    pub h_k: f64,
    /// `c = m`
    pub k_momentum: f64,
}

impl BracketTable {
    /// Largest relative difference between two tables' coefficients.
    pub fn max_relative_difference(&self, other: &Self) -> f64 {
        [
            (self.h_momentum, other.h_momentum),
            (self.h_k, other.h_k),
            (self.k_momentum, other.k_momentum),
        ]
        .iter()
        .map(|(a, b)| (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max)
    }
}

/// Evaluates the brackets of the time-dependent realization at time `t`.
/// Tables at different times differ unless `γ = 0`, so these generators do
/// not define a Lie algebra with constant structure constants.
pub fn bracket_table(params: &DampedParams, t: f64) -> BracketTable {
    let m = params.m;
    let e = (2.0 * params.gamma() * t).exp();
    // h in (𝒫, k), stored in the p/k slots of a phase polynomial
    let h = PhasePolynomial::from_terms([
        ((2, 0), 1.0 / (2.0 * m * e)),
        ((0, 2), params.omega0 * params.omega0 * e / (2.0 * m)),
    ]);
    let spec = BracketSpec::new(m).expect("mass validated");
    let momentum = PhasePolynomial::p();
    let k = PhasePolynomial::k();
    BracketTable {
        t,
        h_momentum: poisson_bracket(&h, &momentum, &spec).coefficient(0, 1),
        h_k: poisson_bracket(&h, &k, &spec).coefficient(1, 0),
        k_momentum: poisson_bracket(&k, &momentum, &spec).coefficient(0, 0),
    }
}

/// `H = h + ∂F2/∂t` as a polynomial in `(P, Q)` (stored in the p/k slots),
/// obtained by substituting the coordinate map into `h` at time `t`.
pub fn transformed_hamiltonian_polynomial(params: &DampedParams, t: f64) -> PhasePolynomial {
    let (m, g) = (params.m, params.gamma());
    let a = params.old_from_new(t);
    let momentum_old = &PhasePolynomial::p().scale(a[0][0]) + &PhasePolynomial::k().scale(a[0][1]);
    let x_old = PhasePolynomial::k().scale(a[1][1]);
    let e = (2.0 * g * t).exp();
    let h = &(&momentum_old * &momentum_old).scale(1.0 / (2.0 * m * e))
        + &(&x_old * &x_old).scale(0.5 * m * params.omega0 * params.omega0 * e);
    let rate = &PhasePolynomial::monomial(g, 1, 1) - &PhasePolynomial::monomial(m * g * g, 0, 2);
    &h + &rate
}

/// Generators `{m, H(P, k), P, k}` with `k = mQ`, for the mass-scaled bracket.
pub fn transformed_generators(params: &DampedParams, t: f64) -> Vec<PhasePolynomial> {
    let m = params.m;
    let hamiltonian = PhasePolynomial::from_terms(
        transformed_hamiltonian_polynomial(params, t)
            .terms()
            .map(|((a, b), c)| ((a, b), c / m.powi(b as i32))),
    );
    vec![
        PhasePolynomial::constant(m),
        hamiltonian,
        PhasePolynomial::p(),
        PhasePolynomial::k(),
    ]
}

/// Structure constants of the transformed realization at time `t`.
pub fn transformed_algebra(params: &DampedParams, t: f64, tol: f64) -> Result<LieAlgebra, RealizationError> {
    let spec = BracketSpec::new(params.m)?;
    extract_structure_constants(&transformed_generators(params, t), &spec, tol)
}

/// One sample of a mapped-back damped trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DampedSample {
    pub t: f64,
    pub x: f64,
    pub xdot: f64,
    /// Transformed momentum `P`.
    pub momentum: f64,
    /// Transformed coordinate `Q`.
    pub q: f64,
    /// `|ẍ + 2γẋ + ω0²x|`
    pub residual: f64,
}

/// Solves the damped motion from `x(t0) = x0`, `ẋ(t0) = v0` by integrating the
/// undamped orbit dynamics in `(P, k = mQ)` at frequency `ω` and mapping each
/// sample back to `(𝒫, x)`.
///
/// The residual uses analytic derivatives of the mapped solution for
/// [`Method::Exact`]; for the numerical integrators it uses central
/// differences with step `dt/10`, taken by sub-stepping the same integrator.
pub fn damped_trajectory(
    params: &DampedParams,
    x0: f64,
    v0: f64,
    t0: f64,
    t1: f64,
    dt: f64,
    method: Method,
) -> Result<Vec<DampedSample>, DampedError> {
    if !(x0.is_finite() && v0.is_finite()) {
        return Err(DampedError::InitialState);
    }
    let m = params.m;
    let start = DampedState {
        t: t0,
        x: x0,
        momentum: m * v0 * (2.0 * params.gamma() * t0).exp(),
    };
    let n0 = to_new(params, &start);
    // H(P, Q) = (p² + ω²k²)/2m is h̃ on the C2 = 0 orbit.
    let chart = make_orbit(m, 0.0, params.omega())?;
    let traj = crate::orbit::integrate(&chart, n0.momentum, m * n0.q, t0, t1, dt, method)?;

    let fd_step = dt / 10.0;
    Ok(traj
        .times
        .iter()
        .zip(&traj.points)
        .map(|(&t, xi)| {
            let n = NewState {
                t,
                momentum: xi.p,
                q: xi.k / m,
            };
            let old = from_new(params, &n);
            let xdot = old.momentum * (-2.0 * params.gamma() * t).exp() / m;
            let residual = match method {
                Method::Exact => analytic_residual(params, &chart, &n),
                Method::Rk4 | Method::Midpoint => fd_residual(params, &chart, &n, fd_step, method),
            };
            DampedSample {
                t,
                x: old.x,
                xdot,
                momentum: n.momentum,
                q: n.q,
                residual,
            }
        })
        .collect())
}

fn analytic_residual(params: &DampedParams, chart: &OrbitChart, n: &NewState) -> f64 {
    let (m, g, w0) = (params.m, params.gamma(), params.omega0);
    let (p_dot, k_dot) = hamiltonian_vector_field(chart, n.momentum, m * n.q);
    let q = n.q;
    let q_dot = k_dot / m;
    let q_ddot = p_dot / m;
    let decay = (-g * n.t).exp();
    let x = decay * q;
    let x_dot = decay * (q_dot - g * q);
    let x_ddot = decay * (q_ddot - 2.0 * g * q_dot + g * g * q);
    (x_ddot + 2.0 * g * x_dot + w0 * w0 * x).abs()
}

fn fd_residual(params: &DampedParams, chart: &OrbitChart, n: &NewState, h: f64, method: Method) -> f64 {
    let m = params.m;
    let g = params.gamma();
    let step = |dh: f64| {
        let (p, k) = match method {
            Method::Rk4 => rk4_step(chart, n.momentum, m * n.q, dh),
            _ => midpoint_step(chart, n.momentum, m * n.q, dh),
        };
        from_new(
            params,
            &NewState {
                t: n.t + dh,
                momentum: p,
                q: k / m,
            },
        )
        .x
    };
    let x = from_new(params, n).x;
    let (x_plus, x_minus) = (step(h), step(-h));
    let x_ddot = (x_plus - 2.0 * x + x_minus) / (h * h);
    let x_dot = (x_plus - x_minus) / (2.0 * h);
    (x_ddot + 2.0 * g * x_dot + params.omega0 * params.omega0 * x).abs()
}

/// Writes `t,x,xdot,P,Q,residual` rows with 17 significant digits.
pub fn write_damped_csv<W: Write>(samples: &[DampedSample], out: &mut W) -> io::Result<()> {
    writeln!(out, "t,x,xdot,P,Q,residual")?;
    for s in samples {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            fmt_f64(s.t),
            fmt_f64(s.x),
            fmt_f64(s.xdot),
            fmt_f64(s.momentum),
            fmt_f64(s.q),
            fmt_f64(s.residual)
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parameter_validation() {
        assert!(matches!(DampedParams::new(0.0, 0.1, 1.0), Err(DampedError::Mass(_))));
        assert!(matches!(
            DampedParams::new(1.0, -0.1, 1.0),
            Err(DampedError::Friction(_))
        ));
        assert!(matches!(
            DampedParams::new(1.0, 0.1, 0.0),
            Err(DampedError::Frequency(_))
        ));
        assert!(matches!(
            DampedParams::new(1.0, 2.0, 1.0),
            Err(DampedError::NotUnderdamped { .. })
        ));
        assert!(matches!(
            DampedParams::new(1.0, 3.0, 1.0),
            Err(DampedError::NotUnderdamped { .. })
        ));
        let p = DampedParams::new(2.0, 0.8, 1.0).unwrap();
        assert_eq!(p.gamma(), 0.2);
        assert!((p.omega() - 0.96f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn hamiltonian_values() {
        let p = DampedParams::from_gamma(1.0, 0.5, 1.0).unwrap();
        let s = DampedState {
            t: 0.0,
            x: 1.0,
            momentum: 0.0,
        };
        assert_eq!(damped_hamiltonian(&p, &s), 0.5);
        let s = DampedState {
            t: 2f64.ln() / (2.0 * 0.5),
            ..s
        };
        assert!((damped_hamiltonian(&p, &s) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn undamped_hamiltonian_is_the_oscillator() {
        let p = DampedParams::new(1.7, 0.0, 1.3).unwrap();
        let s = DampedState {
            t: 4.2,
            x: 0.3,
            momentum: -0.8,
        };
        let expected = s.momentum * s.momentum / (2.0 * 1.7) + 0.5 * 1.7 * 1.3 * 1.3 * s.x * s.x;
        assert_eq!(damped_hamiltonian(&p, &s), expected);
    }

    #[test]
    fn bracket_tables() {
        let p = DampedParams::from_gamma(1.0, 0.5, 2.0).unwrap();
        let t0 = bracket_table(&p, 0.0);
        assert!((t0.h_momentum - 4.0).abs() < 1e-15);
        assert!((t0.h_k + 1.0).abs() < 1e-15);
        assert_eq!(t0.k_momentum, 1.0);
        let t1 = bracket_table(&p, 1.0);
        assert!((t1.h_momentum - 4.0 * 1f64.exp()).abs() < 1e-14);
        assert!((t1.h_k + (-1f64).exp()).abs() < 1e-15);
        assert!(t0.max_relative_difference(&t1) > 0.5);

        let undamped = DampedParams::new(3.0, 0.0, 2.0).unwrap();
        let a = bracket_table(&undamped, 0.0);
        let b = bracket_table(&undamped, 5.0);
        assert_eq!((a.h_momentum, a.h_k, a.k_momentum), (4.0, -1.0, 3.0));
        assert_eq!(a.max_relative_difference(&b), 0.0);
    }

    #[test]
    fn maps_at_time_zero() {
        let p = DampedParams::from_gamma(1.5, 0.3, 2.0).unwrap();
        let n = NewState {
            t: 0.0,
            q: 0.7,
            momentum: -0.4,
        };
        let old = from_new(&p, &n);
        assert!((old.momentum - (n.momentum - 1.5 * 0.3 * n.q)).abs() < 1e-15);
        assert_eq!(old.x, n.q);
    }

    #[test]
    fn undamped_maps_are_identity() {
        let p = DampedParams::new(1.0, 0.0, 1.0).unwrap();
        let s = DampedState {
            t: 3.0,
            x: 0.4,
            momentum: -1.2,
        };
        let n = to_new(&p, &s);
        assert_eq!((n.q, n.momentum), (s.x, s.momentum));
        assert_eq!(from_new(&p, &n), s);
    }

    #[test]
    fn matrices_are_mutually_inverse() {
        let p = DampedParams::from_gamma(2.0, 0.7, 3.0).unwrap();
        for t in [-3.0, 0.0, 2.3] {
            let a = p.old_from_new(t);
            let b = p.new_from_old(t);
            let prod = [
                [
                    a[0][0] * b[0][0] + a[0][1] * b[1][0],
                    a[0][0] * b[0][1] + a[0][1] * b[1][1],
                ],
                [
                    a[1][0] * b[0][0] + a[1][1] * b[1][0],
                    a[1][0] * b[0][1] + a[1][1] * b[1][1],
                ],
            ];
            for (v, expected) in prod.iter().flatten().zip([1.0, 0.0, 0.0, 1.0]) {
                assert!((v - expected).abs() < 1e-13, "t = {t}");
            }
        }
    }

    #[test]
    fn canonicity_determinant() {
        let p = DampedParams::from_gamma(1.0, 0.7, 1.0).unwrap();
        let (det, dev) = canonicity_check(&p, 2.3);
        assert!((det - 1.0).abs() < 1e-14);
        assert!(dev < 1e-14);
        let p = DampedParams::new(1.0, 0.0, 1.0).unwrap();
        assert_eq!(canonicity_check(&p, 7.0), (1.0, 0.0));
    }

    #[test]
    fn transformed_hamiltonian_values() {
        let p = DampedParams::from_gamma(1.0, 1.0, 2.0).unwrap();
        assert!(
            (transformed_hamiltonian(
                &p,
                &NewState {
                    t: 0.0,
                    q: 1.0,
                    momentum: 0.0
                }
            ) - 1.5)
                .abs()
                < 1e-15
        );
        assert_eq!(
            transformed_hamiltonian(
                &p,
                &NewState {
                    t: 0.0,
                    q: 0.0,
                    momentum: 0.0
                }
            ),
            0.0
        );
    }

    #[test]
    fn substituted_hamiltonian_is_autonomous() {
        let p = DampedParams::from_gamma(1.3, 0.4, 1.1).unwrap();
        let w2 = p.omega() * p.omega();
        for t in [-2.0, 0.0, 0.5, 3.0] {
            let h = transformed_hamiltonian_polynomial(&p, t);
            assert!((h.coefficient(2, 0) - 0.5 / 1.3).abs() < 1e-14);
            assert!((h.coefficient(0, 2) - 0.5 * 1.3 * w2).abs() < 1e-13, "t = {t}");
            assert!(h.coefficient(1, 1).abs() < 1e-14, "t = {t}");
        }
    }

    #[test]
    fn critically_damped_trajectory_rejected() {
        assert!(DampedParams::from_gamma(1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn pure_cosine_case() {
        let p = DampedParams::from_gamma(1.0, 0.1, 1.0).unwrap();
        let w = 0.99f64.sqrt();
        let samples = damped_trajectory(&p, 1.0, -0.1, 0.0, 20.0, 0.05, Method::Exact).unwrap();
        for s in &samples {
            let expected = (-0.1 * s.t).exp() * (w * s.t).cos();
            assert!((s.x - expected).abs() < 1e-13, "t = {}", s.t);
            assert!(s.residual <= 1e-9);
        }
    }

    #[test]
    fn fd_residuals_are_small() {
        let p = DampedParams::new(1.0, 0.2, 1.0).unwrap();
        for method in [Method::Rk4, Method::Midpoint] {
            let samples = damped_trajectory(&p, 1.0, 0.0, 0.0, 10.0, 0.01, method).unwrap();
            let worst = samples.iter().map(|s| s.residual).fold(0.0, f64::max);
            assert!(worst <= 1e-6, "{method}: {worst}");
        }
    }

    #[test]
    fn envelope_bounds_the_maxima() {
        let gamma = 0.15;
        let p = DampedParams::from_gamma(1.0, gamma, 2.0).unwrap();
        let samples = damped_trajectory(&p, 1.0, 0.0, 0.0, 30.0, 0.001, Method::Exact).unwrap();
        let peaks: Vec<&DampedSample> = samples
            .windows(3)
            .filter(|w| w[1].x.abs() >= w[0].x.abs() && w[1].x.abs() >= w[2].x.abs() && w[1].x.abs() > 1e-6)
            .map(|w| &w[1])
            .collect();
        assert!(peaks.len() > 10);
        for pair in peaks.windows(2) {
            let (first, next) = (pair[0], pair[1]);
            let bound = first.x.abs() * (-gamma * (next.t - first.t)).exp();
            // sampled peaks sit within dt of the true ones
            assert!(next.x.abs() <= bound * (1.0 + 1e-3), "t = {}", next.t);
        }
    }
}
