//! Dynamics on a single coadjoint orbit `O^{C1,C2}` of the Newton-Hooke group.
//!
//! The orbit is charted globally by `(p, k)` through
//! `φ(p, k) = (C1, h̃(p, k), p, k)` with the reduced Hamiltonian
//! `h̃ = p²/2m + ω²k²/2m − ω²C2/2m`. The Poisson tensor in this chart is
//! `Λ = [[0, −m], [m, 0]]`, giving `ṗ = −ω²k`, `k̇ = p`.

use std::f64::consts::PI;
use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use thiserror::Error;

use crate::coadjoint::DualVector;
use crate::csv::fmt_f64;
use crate::invariants::orbit_invariants;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OrbitError {
    #[error(
        "C1 = m = 0 lies on the singular stratum (orbits there are flattened cylinders \
         with the single invariant k² + p²/ω²); choose m ≠ 0"
    )]
    SingularStratum,
    #[error("orbit parameters must be finite, with ω > 0 (got C1 = {c1}, C2 = {c2}, ω = {omega})")]
    Parameters { c1: f64, c2: f64, omega: f64 },
    #[error("step size must be finite and positive, got {0}")]
    Step(f64),
    #[error("end time {t1} precedes start time {t0}")]
    TimeSpan { t0: f64, t1: f64 },
    #[error("initial state must be finite")]
    InitialState,
    #[error("{method} integration produced a non-finite state at t = {t}")]
    NonFinite { method: Method, t: f64 },
}

/// Integration scheme for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Closed-form rotation in the `(p, k)` plane.
    Exact,
    /// Classical fourth-order Runge-Kutta.
    Rk4,
    /// Implicit midpoint rule (symplectic).
    Midpoint,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::Rk4 => "rk4",
            Method::Midpoint => "midpoint",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" => Ok(Method::Exact),
            "rk4" => Ok(Method::Rk4),
            "midpoint" => Ok(Method::Midpoint),
            other => Err(format!("unknown method `{other}` (expected exact, rk4 or midpoint)")),
        }
    }
}

/// The `(p, k)` chart of the orbit with invariants `(C1, C2) = (m, c2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitChart {
    m: f64,
    omega: f64,
    c2: f64,
}

pub fn make_orbit(c1: f64, c2: f64, omega: f64) -> Result<OrbitChart, OrbitError> {
    if !(c1.is_finite() && c2.is_finite() && omega.is_finite() && omega > 0.0) {
        return Err(OrbitError::Parameters { c1, c2, omega });
    }
    if c1 == 0.0 {
        return Err(OrbitError::SingularStratum);
    }
    Ok(OrbitChart { m: c1, omega, c2 })
}

impl OrbitChart {
    pub fn mass(&self) -> f64 {
        self.m
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn c2(&self) -> f64 {
        self.c2
    }

    pub fn period(&self) -> f64 {
        2.0 * PI / self.omega
    }

    pub fn reduced_hamiltonian(&self, p: f64, k: f64) -> f64 {
        let w2 = self.omega * self.omega;
        (p * p + w2 * k * k - w2 * self.c2) / (2.0 * self.m)
    }

    /// `∇h̃ = (∂h̃/∂p, ∂h̃/∂k)`.
    pub fn hamiltonian_gradient(&self, p: f64, k: f64) -> (f64, f64) {
        (p / self.m, self.omega * self.omega * k / self.m)
    }

    pub fn poisson_tensor(&self) -> [[f64; 2]; 2] {
        [[0.0, -self.m], [self.m, 0.0]]
    }

    /// `φ(p, k)`, the point of `g*` on this orbit above `(p, k)`.
    pub fn embed(&self, p: f64, k: f64) -> DualVector {
        DualVector::new(self.m, self.reduced_hamiltonian(p, k), p, k)
    }

    /// Exact flow of the equations of motion for time `tau` (any sign).
    pub fn flow(&self, p: f64, k: f64, tau: f64) -> (f64, f64) {
        let w = self.omega;
        let (s, c) = (w * tau).sin_cos();
        (p * c - w * k * s, k * c + p / w * s)
    }
}

/// `(ṗ, k̇) = (−ω²k, p)`.
///
/// This is `Λ ∇h̃`; the `m` in `Λ` cancels the `1/m` in the gradient.
pub fn hamiltonian_vector_field(chart: &OrbitChart, p: f64, k: f64) -> (f64, f64) {
    (-chart.omega * chart.omega * k, p)
}

/// Samples of a trajectory embedded in `g*`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub points: Vec<DualVector>,
    /// `h̃(p, k)` at each sample.
    pub energies: Vec<f64>,
    /// `C2` recomputed from each embedded point.
    pub casimirs: Vec<f64>,
    pub method: Method,
    pub dt: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<&DualVector> {
        self.points.last()
    }

    /// Writes `t,m,h,p,k,c2` rows with 17 significant digits.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "t,m,h,p,k,c2")?;
        for ((t, xi), c2) in self.times.iter().zip(&self.points).zip(&self.casimirs) {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                fmt_f64(*t),
                fmt_f64(xi.m),
                fmt_f64(xi.h),
                fmt_f64(xi.p),
                fmt_f64(xi.k),
                fmt_f64(*c2)
            )?;
        }
        Ok(())
    }
}

/// Sample times `t0, t0 + dt, …` ending exactly at `t1`; the last step is
/// shortened when `dt` does not divide the span.
pub fn sample_times(t0: f64, t1: f64, dt: f64) -> Vec<f64> {
    let ratio = (t1 - t0) / dt;
    let nearest = ratio.round();
    let steps = if (ratio - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest
    } else {
        ratio.ceil()
    } as usize;
    let mut times: Vec<f64> = (0..steps).map(|i| t0 + i as f64 * dt).collect();
    times.push(t1);
    times
}

pub fn integrate(
    chart: &OrbitChart,
    p0: f64,
    k0: f64,
    t0: f64,
    t1: f64,
    dt: f64,
    method: Method,
) -> Result<Trajectory, OrbitError> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(OrbitError::Step(dt));
    }
    if !(t0.is_finite() && t1.is_finite()) || t1 < t0 {
        return Err(OrbitError::TimeSpan { t0, t1 });
    }
    if !(p0.is_finite() && k0.is_finite()) {
        return Err(OrbitError::InitialState);
    }

    let times = sample_times(t0, t1, dt);
    let mut states = Vec::with_capacity(times.len());
    states.push((p0, k0));
    for pair in times.windows(2) {
        let (p, k) = *states.last().expect("seeded with the initial state");
        let next = match method {
            Method::Exact => chart.flow(p0, k0, pair[1] - t0),
            Method::Rk4 => rk4_step(chart, p, k, pair[1] - pair[0]),
            Method::Midpoint => midpoint_step(chart, p, k, pair[1] - pair[0]),
        };
        if !(next.0.is_finite() && next.1.is_finite()) {
            return Err(OrbitError::NonFinite { method, t: pair[1] });
        }
        states.push(next);
    }

    let points: Vec<DualVector> = states.iter().map(|&(p, k)| chart.embed(p, k)).collect();
    let energies = points.iter().map(|xi| xi.h).collect();
    let casimirs = points.iter().map(|xi| orbit_invariants(xi, chart.omega).1).collect();
    Ok(Trajectory {
        times,
        points,
        energies,
        casimirs,
        method,
        dt,
    })
}

pub(crate) fn rk4_step(chart: &OrbitChart, p: f64, k: f64, h: f64) -> (f64, f64) {
    let f = |p: f64, k: f64| hamiltonian_vector_field(chart, p, k);
    let (a1, b1) = f(p, k);
    let (a2, b2) = f(p + 0.5 * h * a1, k + 0.5 * h * b1);
    let (a3, b3) = f(p + 0.5 * h * a2, k + 0.5 * h * b2);
    let (a4, b4) = f(p + h * a3, k + h * b3);
    (
        p + h * (a1 + 2.0 * a2 + 2.0 * a3 + a4) / 6.0,
        k + h * (b1 + 2.0 * b2 + 2.0 * b3 + b4) / 6.0,
    )
}

/// `(I − hA/2) z' = (I + hA/2) z` for the linear field `A = [[0, −ω²], [1, 0]]`,
/// solved by Cramer's rule.
pub(crate) fn midpoint_step(chart: &OrbitChart, p: f64, k: f64, h: f64) -> (f64, f64) {
    let w2 = chart.omega * chart.omega;
    let half = 0.5 * h;
    let rhs_p = p - half * w2 * k;
    let rhs_k = k + half * p;
    let det = 1.0 + half * half * w2;
    ((rhs_p - half * w2 * rhs_k) / det, (rhs_k + half * rhs_p) / det)
}

/// Relative sup-norm drift of energy and `C2` along a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftReport {
    pub energy: f64,
    pub casimir: f64,
}

/// Drift relative to the initial value; an initial value of zero falls
/// back to the absolute drift.
pub fn drift_report(traj: &Trajectory) -> DriftReport {
    fn relative(values: &[f64]) -> f64 {
        let Some(&first) = values.first() else {
            return 0.0;
        };
        let scale = if first != 0.0 { first.abs() } else { 1.0 };
        values.iter().fold(0.0_f64, |acc, v| acc.max((v - first).abs())) / scale
    }
    DriftReport {
        energy: relative(&traj.energies),
        casimir: relative(&traj.casimirs),
    }
}
