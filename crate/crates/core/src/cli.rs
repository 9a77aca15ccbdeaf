// SPDX-License-Identifier: Apache-2.0

//! Command-line front end.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::conditions::{self, ConditionResiduals};
use crate::error::{Error, Result};
use crate::format::fmt_g17;
use crate::kinematics::{self, min_steps};
use crate::pulse::PulseSpec;
use crate::solver::{self, AmplitudeSearch, SolveConfig};
use crate::tables;
use crate::verifier::{self, BathSpec};

/// Seed used by every randomized command unless `--seed` is given.
pub const DEFAULT_SEED: u64 = 20_130_501;

#[derive(Debug, Parser)]
#[command(name = "fmpulse", version, about = "Frequency-modulated decoupling pulses: solve, check, verify, export")]
struct Cli {
    /// Suppress iteration logs on standard error.
    #[arg(short, long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Find a pulse that satisfies the decoupling conditions.
    Solve(SolveArgs),
    /// Evaluate the residuals of a pulse.
    Check(CheckArgs),
    /// Measure the decoupling order on an explicit spin bath.
    Verify(VerifyArgs),
    /// Write the rotation trajectory or lab-frame waveform as CSV.
    Export(ExportArgs),
    /// Print the built-in published pulses.
    Tables,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[arg(long, value_parser = parse_order)]
    order: u8,
    /// Target angle: `pi` or `pi2`.
    #[arg(long, value_parser = parse_angle)]
    angle: f64,
    /// Minimize V0 over one extra coefficient.
    #[arg(long, requires = "extra")]
    minimize: bool,
    /// Extra coefficient for `--minimize`, e.g. `b14`.
    #[arg(long, value_parser = parse_index, requires = "minimize")]
    extra: Option<usize>,
    #[arg(long, default_value_t = 4096)]
    grid: usize,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Random starting points in addition to the published pulses
    /// [default: 64, or 0 with --minimize].
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    max_iter: usize,
    /// Pulse file to write.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct CheckArgs {
    /// Built-in pulse name or pulse file.
    #[arg(long)]
    pulse: String,
    #[arg(long, value_parser = parse_order)]
    order: u8,
    #[arg(long, default_value_t = 4096)]
    grid: usize,
    /// Largest acceptable residual.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long)]
    pulse: String,
    /// Bath file; defaults to the one-spin noncommuting bath.
    #[arg(long)]
    bath: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-3)]
    tau_min: f64,
    #[arg(long, default_value_t = 1e-1)]
    tau_max: f64,
    #[arg(long, default_value_t = 8)]
    points: usize,
    #[arg(long, default_value_t = 4096)]
    steps: usize,
    /// Verification CSV to write.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ExportArgs {
    #[arg(long)]
    pulse: String,
    /// Integration steps; defaults to max(1024, 32·V0).
    #[arg(long)]
    grid: Option<usize>,
    /// Larmor frequency; switches the output to the lab-frame waveform.
    #[arg(long)]
    larmor: Option<f64>,
    #[arg(long)]
    out: PathBuf,
    /// Also write the pulse definition to this file.
    #[arg(long)]
    pulse_out: Option<PathBuf>,
}

fn parse_order(s: &str) -> std::result::Result<u8, String> {
    match s {
        "1" => Ok(1),
        "2" => Ok(2),
        _ => Err(format!("order must be 1 or 2, got `{s}`")),
    }
}

fn parse_angle(s: &str) -> std::result::Result<f64, String> {
    match s.to_ascii_lowercase().as_str() {
        "pi" => Ok(PI),
        "pi2" | "pi/2" => Ok(FRAC_PI_2),
        _ => Err(format!("angle must be `pi` or `pi2`, got `{s}`")),
    }
}

fn parse_index(s: &str) -> std::result::Result<usize, String> {
    let digits = s.strip_prefix('b').or_else(|| s.strip_prefix('B')).unwrap_or(s);
    match digits.parse::<usize>() {
        Ok(k) if k >= 1 => Ok(k),
        _ => Err(format!("expected a coefficient such as `b14`, got `{s}`")),
    }
}

/// Failure classes mapped to exit codes 1 and 2.
enum Failure {
    Domain(String),
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Domain(e.to_string())
    }
}

type Outcome = std::result::Result<(), Failure>;

/// Built-in name or path to a pulse file.
pub fn load_pulse(spec: &str) -> Result<PulseSpec> {
    if let Some(p) = tables::builtin(spec) {
        return Ok(p);
    }
    let path = Path::new(spec);
    if !path.exists() {
        return Err(Error::Config(format!("`{spec}` is neither a built-in pulse nor a file")));
    }
    let text = std::fs::read_to_string(path)?;
    let mut p = PulseSpec::parse(&text)?;
    if p.label.is_empty() {
        p.label = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    }
    Ok(p)
}

fn load_input(spec: &str) -> std::result::Result<PulseSpec, Failure> {
    load_pulse(spec).map_err(|e| Failure::Usage(e.to_string()))
}

fn write_file(path: &Path, text: &str) -> Outcome {
    std::fs::write(path, text).map_err(|e| Failure::Domain(format!("cannot write {}: {e}", path.display())))
}

/// Runs one command; returns the process exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                2
            } else {
                let _ = write!(out, "{text}");
                0
            };
        }
    };
    let quiet = cli.quiet;
    let result = match cli.command {
        Command::Solve(a) => solve(a, quiet, out, err),
        Command::Check(a) => check(a, out),
        Command::Verify(a) => verify(a, out),
        Command::Export(a) => export(a, out),
        Command::Tables => {
            let _ = write!(out, "{}", tables_text());
            Ok(())
        }
    };
    match result {
        Ok(()) => 0,
        Err(Failure::Domain(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            1
        }
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}\n\nFor more information, try '--help'.");
            2
        }
    }
}

fn solve(a: SolveArgs, quiet: bool, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    let mut cfg = SolveConfig::new(a.order, a.angle).with_table_seeds();
    cfg.grid = a.grid;
    cfg.tol = a.tol;
    cfg.max_iter = a.max_iter;
    let random = a.seeds.unwrap_or(if a.minimize { 0 } else { 64 });
    cfg = cfg.with_random_seeds(random, a.seed);
    if a.minimize && a.order != 2 {
        return Err(Failure::Usage("--minimize needs --order 2".into()));
    }
    let res = match a.extra.filter(|_| a.minimize) {
        Some(k) => solver::minimize_amplitude(&cfg, &AmplitudeSearch::new(k)),
        None => solver::solve_pulse(&cfg),
    }
    .map_err(|e| match e {
        Error::Config(m) => Failure::Usage(m),
        other => other.into(),
    })?;

    if !quiet {
        let _ = writeln!(err, "iter,max_residual,V0,step_norm");
        for rec in &res.trace {
            let _ = writeln!(err, "{}", rec.csv_line());
        }
        for p in &res.search {
            let v0 = p.v0.map_or("failed".to_owned(), |v| format!("{v:.10}"));
            let _ = writeln!(err, "# b{}={:.8},V0={v0}", a.extra.unwrap_or(0), p.value);
        }
    }
    let _ = write!(out, "{}", res.residuals.report(&res.pulse.label, a.order, a.grid));
    let _ = writeln!(out, "distinct roots: {}", res.roots.len().max(usize::from(res.converged)));
    if !res.converged {
        return Err(Failure::Domain(format!(
            "no start converged; best max residual {:.3e}",
            res.residuals.max_abs(a.order)
        )));
    }
    write_file(&a.out, &res.pulse.serialize())?;
    let _ = writeln!(out, "wrote {}", a.out.display());
    Ok(())
}

fn residuals_for(pulse: &PulseSpec, grid: usize) -> std::result::Result<ConditionResiduals, Failure> {
    let traj = kinematics::propagate_su2(pulse, grid).map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(conditions::evaluate(&traj)?)
}

fn check(a: CheckArgs, out: &mut dyn Write) -> Outcome {
    let pulse = load_input(&a.pulse)?;
    let res = residuals_for(&pulse, a.grid)?;
    let label = if pulse.label.is_empty() { a.pulse.as_str() } else { pulse.label.as_str() };
    let _ = write!(out, "{}", res.report(label, a.order, a.grid));
    let _ = writeln!(out, "{}", ConditionResiduals::CSV_HEADER);
    let _ = writeln!(out, "{}", res.csv_row(label, a.order));
    let worst = res.max_abs(a.order);
    if worst <= a.tol {
        let _ = writeln!(out, "PASS max_abs {worst:.3e} <= {:.1e}", a.tol);
        Ok(())
    } else {
        Err(Failure::Domain(format!("check failed: max_abs {worst:.6e} > {:.1e}", a.tol)))
    }
}

fn verify(a: VerifyArgs, out: &mut dyn Write) -> Outcome {
    let pulse = load_input(&a.pulse)?;
    let bath = match &a.bath {
        None => BathSpec::default_noncommuting(),
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
            BathSpec::parse(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?
        }
    };
    if !(a.tau_min > 0.0 && a.tau_max > a.tau_min) {
        return Err(Failure::Usage("need 0 < --tau-min < --tau-max".into()));
    }
    let taus = verifier::log_spaced(a.tau_min, a.tau_max, a.points);
    let report = verifier::scaling_exponent(&pulse, &bath, &taus, a.steps).map_err(|e| match e {
        Error::Config(m) | Error::InvalidSteps { reason: m, .. } => Failure::Usage(m),
        other => other.into(),
    })?;
    write_file(&a.out, &report.to_csv())?;
    let kept = report.excluded.iter().filter(|x| !**x).count();
    let _ = writeln!(
        out,
        "{}: slope {:.4} over tau in [{:.4e}, {:.4e}] ({kept} of {} points)",
        pulse.label,
        report.slope,
        report.slope_window.0,
        report.slope_window.1,
        report.taus.len()
    );
    let _ = writeln!(out, "wrote {}", a.out.display());
    Ok(())
}

fn export(a: ExportArgs, out: &mut dyn Write) -> Outcome {
    let pulse = load_input(&a.pulse)?;
    let grid = a.grid.unwrap_or_else(|| min_steps(pulse.v0()).max(1024));
    let text = match a.larmor {
        Some(w) => {
            let samples = pulse.lab_frame_waveform(w, grid + 1).map_err(|e| Failure::Usage(e.to_string()))?;
            let mut s = String::from("t,hx,hy\n");
            for x in samples {
                let _ = writeln!(s, "{},{},{}", fmt_g17(x.t), fmt_g17(x.hx + 0.0), fmt_g17(x.hy + 0.0));
            }
            s
        }
        None => kinematics::propagate_su2(&pulse, grid).map_err(|e| Failure::Usage(e.to_string()))?.to_csv(),
    };
    write_file(&a.out, &text)?;
    if let Some(p) = &a.pulse_out {
        write_file(p, &pulse.serialize())?;
    }
    let _ = writeln!(out, "wrote {} ({} samples)", a.out.display(), grid + 1);
    Ok(())
}

/// The published pulses with coefficients at table precision.
pub fn tables_text() -> String {
    let mut s = String::new();
    for (p, order) in tables::all() {
        let angle = if (p.chi() - PI).abs() < 1e-12 { "pi" } else { "pi/2" };
        let _ = writeln!(s, "{}  order {order}  chi = {angle}  V0 = {:.8}", p.label, p.v0());
        for (k, b) in p.coeffs() {
            let _ = writeln!(s, "  b{k:<2} = {b:+.8}");
        }
        s.push('\n');
    }
    s
}
