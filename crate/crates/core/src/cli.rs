//! Command-line front end.
//!
//! Exit codes: 0 success, 1 domain or validation failure, 2 malformed input.

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::algebra::{nh, nh_algebra, parse_algebra, LieAlgebra, DEFAULT_JACOBI_TOL};
use crate::coadjoint::{coad_apply_closed, coad_apply_matrix, DualVector, GroupCoords};
use crate::csv::fmt_f64;
use crate::damped::{bracket_table, damped_trajectory, write_damped_csv, DampedParams};
use crate::invariants::{fit_casimirs, monomial_label, monomials, orbit_invariants};
use crate::orbit::{integrate, make_orbit, Method};
use crate::realization::{extract_structure_constants, nh_generators, BracketSpec, DEFAULT_CLOSURE_TOL};

#[derive(Debug, Parser)]
#[command(
    name = "orbitkit",
    version,
    about = "Coadjoint orbits of the (1+1) Newton-Hooke group"
)]
pub struct Cli {
    /// Write output to this file instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for randomized sampling.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    /// Tolerance override for the selected subcommand.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check antisymmetry and the Jacobi identity of an algebra file.
    Validate(ValidateArgs),
    /// Derive structure constants from the phase-space realization (m, h, p, k).
    #[command(allow_negative_numbers = true)]
    Derive(DeriveArgs),
    /// Apply a group element to a dual vector, in closed form and by matrix exponentials.
    #[command(allow_negative_numbers = true)]
    Coad(CoadArgs),
    /// Fit polynomial Casimir invariants.
    #[command(allow_negative_numbers = true)]
    Invariants(InvariantsArgs),
    /// Integrate the test trajectory on its coadjoint orbit.
    #[command(allow_negative_numbers = true)]
    Simulate(SimulateArgs),
    /// Emit the data behind the generator-action illustration.
    #[command(allow_negative_numbers = true)]
    Figure(FigureArgs),
    /// Solve the damped oscillator through the canonical map.
    #[command(allow_negative_numbers = true)]
    Damped(DampedArgs),
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    pub algebra_file: PathBuf,
}

#[derive(Debug, Args)]
pub struct DeriveArgs {
    #[arg(long, default_value_t = 1.0)]
    pub omega: f64,
    #[arg(long, default_value_t = 1.0)]
    pub mass: f64,
    /// Drop the constant generator m, which breaks closure.
    #[arg(long)]
    pub without_constant: bool,
}

#[derive(Debug, Args)]
pub struct CoadArgs {
    #[arg(long, default_value_t = 1.0)]
    pub omega: f64,
    #[arg(long, default_value_t = 1.0)]
    pub m: f64,
    #[arg(long, default_value_t = 0.0)]
    pub h: f64,
    #[arg(long, default_value_t = 0.0)]
    pub p: f64,
    #[arg(long, default_value_t = 1.0)]
    pub k: f64,
    #[arg(long, default_value_t = 0.0)]
    pub eta: f64,
    #[arg(long, default_value_t = 0.0)]
    pub b: f64,
    #[arg(long, default_value_t = 0.0)]
    pub a: f64,
    #[arg(long, default_value_t = 0.0)]
    pub v: f64,
}

#[derive(Debug, Args)]
pub struct InvariantsArgs {
    /// Algebra file; defaults to the Newton-Hooke algebra with --omega.
    #[arg(long)]
    pub algebra: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    pub omega: f64,
    #[arg(long, default_value_t = 2)]
    pub degree: u32,
    /// Number of sample points; defaults to ten per monomial.
    #[arg(long)]
    pub samples: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 1.0)]
    pub omega: f64,
    #[arg(long, default_value_t = 1.0)]
    pub m: f64,
    /// Amplitude of the test trajectory p = −mωA sin ωt, k = mA cos ωt.
    #[arg(long = "A", default_value_t = 1.0)]
    pub amplitude: f64,
    /// Second invariant of the orbit.
    #[arg(long, default_value_t = 0.0)]
    pub c2: f64,
    #[arg(long, default_value_t = 0.0)]
    pub t0: f64,
    /// End time; defaults to one period after t0.
    #[arg(long)]
    pub t1: Option<f64>,
    /// Step; defaults to a thousandth of the period.
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long, default_value = "exact")]
    pub method: Method,
}

#[derive(Debug, Args)]
pub struct FigureArgs {
    #[arg(long, default_value_t = 1.0)]
    pub omega: f64,
    #[arg(long, default_value_t = 1.0)]
    pub m: f64,
    #[arg(long = "A", default_value_t = 1.0)]
    pub amplitude: f64,
    #[arg(long, default_value_t = 0.0)]
    pub c2: f64,
    /// Spatial shift l taking A to B.
    #[arg(long, default_value_t = 0.5)]
    pub shift: f64,
    /// Boost u taking C to D.
    #[arg(long, default_value_t = 0.5)]
    pub boost: f64,
    /// Evolution time from A to C; defaults to a quarter period.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Samples per orbit locus.
    #[arg(long, default_value_t = 200)]
    pub points: usize,
    /// Emit a gnuplot script for the data instead of the data itself.
    #[arg(long)]
    pub gnuplot: bool,
    /// Data file name referenced by the gnuplot script.
    #[arg(long, default_value = "figure.csv")]
    pub data: String,
}

#[derive(Debug, Args)]
pub struct DampedArgs {
    #[arg(long, default_value_t = 1.0)]
    pub m: f64,
    #[arg(long, default_value_t = 0.2)]
    pub beta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub omega0: f64,
    #[arg(long, default_value_t = 1.0)]
    pub x0: f64,
    #[arg(long, default_value_t = 0.0)]
    pub v0: f64,
    #[arg(long, default_value_t = 0.0)]
    pub t0: f64,
    #[arg(long, default_value_t = 20.0)]
    pub t1: f64,
    #[arg(long, default_value_t = 0.01)]
    pub dt: f64,
    #[arg(long, default_value = "exact")]
    pub method: Method,
    /// Print the naive bracket coefficients at two times instead of a trajectory.
    #[arg(long, num_args = 2, value_names = ["T1", "T2"])]
    pub bracket_table: Option<Vec<f64>>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Domain(String),
    #[error("{0}")]
    Input(String),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Domain(_) | CliError::Io(_) => 1,
            CliError::Input(_) => 2,
        }
    }
}

fn domain(e: impl std::fmt::Display) -> CliError {
    CliError::Domain(e.to_string())
}

fn finite(name: &str, values: &[f64]) -> Result<(), CliError> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(CliError::Domain(format!(
            "{name}: all numeric parameters must be finite"
        )))
    }
}

fn positive(name: &str, value: f64) -> Result<(), CliError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(CliError::Domain(format!(
            "--{name} must be finite and positive, got {value}"
        )))
    }
}

fn read_algebra(path: &PathBuf) -> Result<LieAlgebra, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    parse_algebra(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Runs a parsed command line, writing its output to `out`.
pub fn run<W: Write>(cli: &Cli, out: &mut W) -> Result<(), CliError> {
    match &cli.command {
        Command::Validate(args) => cmd_validate(args, cli.tol, out),
        Command::Derive(args) => cmd_derive(args, cli.tol, out),
        Command::Coad(args) => cmd_coad(args, out),
        Command::Invariants(args) => cmd_invariants(args, cli.seed, out),
        Command::Simulate(args) => cmd_simulate(args, out),
        Command::Figure(args) => cmd_figure(args, out),
        Command::Damped(args) => cmd_damped(args, out),
    }
}

pub fn cmd_validate<W: Write>(args: &ValidateArgs, tol: Option<f64>, out: &mut W) -> Result<(), CliError> {
    let algebra = read_algebra(&args.algebra_file)?;
    let report = algebra.validate(tol.unwrap_or(DEFAULT_JACOBI_TOL));
    writeln!(out, "{report}")?;
    if report.passed {
        return Ok(());
    }
    let labels = algebra.labels();
    let failure = if !report.antisymmetry_ok() {
        let (i, j, k) = report.antisymmetry_at.expect("residual above tol has a location");
        format!(
            "antisymmetry fails at ({},{},{}) = ({},{},{}): residual {:e}",
            i + 1,
            j + 1,
            k + 1,
            labels[i],
            labels[j],
            labels[k],
            report.antisymmetry_residual
        )
    } else {
        let (i, j, k, l) = report.jacobi_at.expect("residual above tol has a location");
        format!(
            "jacobi identity fails for triple ({},{},{}) = ({},{},{}), component {} ({}): residual {:e}",
            i + 1,
            j + 1,
            k + 1,
            labels[i],
            labels[j],
            labels[k],
            l + 1,
            labels[l],
            report.jacobi_residual
        )
    };
    writeln!(out, "{failure}")?;
    Err(CliError::Domain(failure))
}

pub fn cmd_derive<W: Write>(args: &DeriveArgs, tol: Option<f64>, out: &mut W) -> Result<(), CliError> {
    positive("omega", args.omega)?;
    positive("mass", args.mass)?;
    let spec = BracketSpec::new(args.mass).map_err(domain)?;
    let mut generators = nh_generators(args.mass, args.omega);
    let mut labels: Vec<&str> = nh::LABELS.to_vec();
    if args.without_constant {
        generators.remove(0);
        labels.remove(0);
    }
    for (label, g) in labels.iter().zip(&generators) {
        writeln!(out, "# {label} = {g}")?;
    }
    let algebra = extract_structure_constants(&generators, &spec, tol.unwrap_or(DEFAULT_CLOSURE_TOL))
        .map_err(domain)?
        .with_labels(&labels)
        .map_err(domain)?;
    write!(out, "{}", algebra.to_text())?;
    writeln!(out, "# {}", algebra.validate(DEFAULT_JACOBI_TOL))?;
    Ok(())
}

pub fn cmd_coad<W: Write>(args: &CoadArgs, out: &mut W) -> Result<(), CliError> {
    positive("omega", args.omega)?;
    finite(
        "coad",
        &[args.m, args.h, args.p, args.k, args.eta, args.b, args.a, args.v],
    )?;
    let xi = DualVector::new(args.m, args.h, args.p, args.k);
    let g = GroupCoords::new(args.eta, args.b, args.a, args.v);
    let closed = coad_apply_closed(&xi, &g, args.omega);
    let algebra = nh_algebra(args.omega).map_err(domain)?;
    let product = coad_apply_matrix(&algebra, &xi, &g).map_err(domain)?;
    let deviation = DualVector::from_array({
        let (a, b) = (closed.to_array(), product.to_array());
        [
            (a[0] - b[0]).abs(),
            (a[1] - b[1]).abs(),
            (a[2] - b[2]).abs(),
            (a[3] - b[3]).abs(),
        ]
    });
    writeln!(out, "row,m,h,p,k")?;
    for (name, v) in [
        ("input", xi),
        ("closed", closed),
        ("exponential", product),
        ("abs_deviation", deviation),
    ] {
        writeln!(
            out,
            "{name},{},{},{},{}",
            fmt_f64(v.m),
            fmt_f64(v.h),
            fmt_f64(v.p),
            fmt_f64(v.k)
        )?;
    }
    Ok(())
}

pub fn cmd_invariants<W: Write>(args: &InvariantsArgs, seed: u64, out: &mut W) -> Result<(), CliError> {
    let algebra = match &args.algebra {
        Some(path) => read_algebra(path)?,
        None => {
            positive("omega", args.omega)?;
            nh_algebra(args.omega).map_err(domain)?
        }
    };
    let count = monomials(algebra.dim(), args.degree.max(1)).len();
    let samples = args.samples.unwrap_or(10 * count);
    let basis = fit_casimirs(&algebra, args.degree, samples, seed).map_err(domain)?;
    let coords: Vec<String> = algebra.labels().iter().map(|l| l.to_lowercase()).collect();
    let header: Vec<String> = basis.monomials.iter().map(|e| monomial_label(e, &coords)).collect();
    writeln!(out, "casimir,{}", header.join(","))?;
    for r in 0..basis.len() {
        let row: Vec<String> = basis.coefficients.row(r).iter().map(|&c| fmt_f64(c)).collect();
        writeln!(out, "C{},{}", r + 1, row.join(","))?;
    }
    Ok(())
}

pub fn cmd_simulate<W: Write>(args: &SimulateArgs, out: &mut W) -> Result<(), CliError> {
    positive("omega", args.omega)?;
    finite("simulate", &[args.m, args.amplitude, args.c2, args.t0])?;
    let chart = make_orbit(args.m, args.c2, args.omega).map_err(domain)?;
    let period = chart.period();
    let t1 = args.t1.unwrap_or(args.t0 + period);
    let dt = args.dt.unwrap_or(period / 1000.0);
    let (s, c) = (args.omega * args.t0).sin_cos();
    let p0 = -args.m * args.omega * args.amplitude * s;
    let k0 = args.m * args.amplitude * c;
    let traj = integrate(&chart, p0, k0, args.t0, t1, dt, args.method).map_err(domain)?;
    traj.write_csv(out)?;
    Ok(())
}

/// Points A..D and the two energy loci through A and B.
#[derive(Debug, Clone, PartialEq)]
pub struct FigureData {
    pub omega: f64,
    /// `(series, evolution time, point)`
    pub rows: Vec<(String, f64, DualVector)>,
}

impl FigureData {
    pub fn point(&self, label: &str) -> Option<DualVector> {
        self.rows.iter().find(|(s, _, _)| s == label).map(|(_, _, xi)| *xi)
    }
}

pub fn figure_data(args: &FigureArgs) -> Result<FigureData, CliError> {
    positive("omega", args.omega)?;
    finite("figure", &[args.m, args.amplitude, args.c2, args.shift, args.boost])?;
    if args.points < 2 {
        return Err(CliError::Domain("--points must be at least 2".into()));
    }
    let chart = make_orbit(args.m, args.c2, args.omega).map_err(domain)?;
    let tau = args.tau.unwrap_or(chart.period() / 4.0);
    finite("figure", &[tau])?;
    let w = args.omega;

    let a = chart.embed(0.0, args.m * args.amplitude);
    let c = coad_apply_closed(&a, &GroupCoords::time_shift(tau), w);
    let b = coad_apply_closed(&a, &GroupCoords::space_shift(args.shift), w);
    let d = coad_apply_closed(&c, &GroupCoords::boost(args.boost), w);

    let mut rows = Vec::new();
    for (series, start) in [("locus_A", a), ("locus_B", b)] {
        for i in 0..args.points {
            let t = chart.period() * i as f64 / (args.points - 1) as f64;
            rows.push((
                series.to_string(),
                t,
                coad_apply_closed(&start, &GroupCoords::time_shift(t), w),
            ));
        }
    }
    rows.push(("A".into(), 0.0, a));
    rows.push(("B".into(), 0.0, b));
    rows.push(("C".into(), tau, c));
    rows.push(("D".into(), tau, d));
    Ok(FigureData { omega: w, rows })
}

pub fn cmd_figure<W: Write>(args: &FigureArgs, out: &mut W) -> Result<(), CliError> {
    let data = figure_data(args)?;
    if args.gnuplot {
        write!(out, "{}", gnuplot_script(&args.data))?;
        return Ok(());
    }
    writeln!(out, "series,t,m,h,p,k,c1,c2")?;
    for (series, t, xi) in &data.rows {
        let (c1, c2) = orbit_invariants(xi, data.omega);
        writeln!(
            out,
            "{series},{},{},{},{},{},{},{}",
            fmt_f64(*t),
            fmt_f64(xi.m),
            fmt_f64(xi.h),
            fmt_f64(xi.p),
            fmt_f64(xi.k),
            fmt_f64(c1),
            fmt_f64(c2)
        )?;
    }
    Ok(())
}

fn gnuplot_script(data: &str) -> String {
    let select = |series: &str, col: u32| format!("(strcol(1) eq '{series}' ? ${col} : NaN)");
    let mut s = String::new();
    s.push_str("set datafile separator ','\n");
    s.push_str("set key autotitle columnhead\n");
    s.push_str("set xlabel 'k = m x'\nset ylabel 'p'\nset size ratio -1\n");
    s.push_str(&format!(
        "plot '{data}' using {}:{} with lines title 'energy level through A', \\\n",
        select("locus_A", 6),
        select("locus_A", 5)
    ));
    s.push_str(&format!(
        "     '{data}' using {}:{} with lines title 'energy level through B', \\\n",
        select("locus_B", 6),
        select("locus_B", 5)
    ));
    for (i, label) in ["A", "B", "C", "D"].iter().enumerate() {
        let sep = if i == 3 { "\n" } else { ", \\\n" };
        s.push_str(&format!(
            "     '{data}' using {}:{} with points pt 7 title '{label}'{sep}",
            select(label, 6),
            select(label, 5)
        ));
    }
    s
}

pub fn cmd_damped<W: Write>(args: &DampedArgs, out: &mut W) -> Result<(), CliError> {
    finite("damped", &[args.x0, args.v0, args.t0, args.t1, args.dt])?;
    let params = DampedParams::new(args.m, args.beta, args.omega0).map_err(domain)?;
    if let Some(times) = &args.bracket_table {
        finite("damped", times)?;
        let a = bracket_table(&params, times[0]);
        let b = bracket_table(&params, times[1]);
        writeln!(out, "coefficient,first,second")?;
        writeln!(out, "t,{},{}", fmt_f64(a.t), fmt_f64(b.t))?;
        writeln!(out, "h_P_on_k,{},{}", fmt_f64(a.h_momentum), fmt_f64(b.h_momentum))?;
        writeln!(out, "h_k_on_P,{},{}", fmt_f64(a.h_k), fmt_f64(b.h_k))?;
        writeln!(out, "k_P,{},{}", fmt_f64(a.k_momentum), fmt_f64(b.k_momentum))?;
        return Ok(());
    }
    let samples =
        damped_trajectory(&params, args.x0, args.v0, args.t0, args.t1, args.dt, args.method).map_err(domain)?;
    write_damped_csv(&samples, out)?;
    Ok(())
}
