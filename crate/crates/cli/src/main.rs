//! `sqfock`: amplitudes, parameter sweeps, null solutions and self-checks
//! for multi-crystal squeezing interferometers.

mod config;
mod expr;
mod validate;

use std::collections::HashMap;
use std::f64::consts::PI;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use sqfock::closed_forms::{
    four_crystal_null_r3, four_crystal_phi0_null_r1, three_crystal_null, three_crystal_t3_window,
};
use sqfock::zeros::{Axis, SweepGrid, NULL_TOLERANCE};
use sqfock::{amplitude, standard_circuit, AmplitudeResult, CircuitKind, OccupationVector};

use config::{auto_policy, Config, ConfigError};
use validate::Suite;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("{path}:{source}")]
    ConfigFile { path: String, source: ConfigError },
    #[error("{0}")]
    Sim(#[from] sqfock::Error),
    #[error("{0}")]
    Validation(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Config(_) | CliError::ConfigFile { .. } => 1,
            CliError::Validation(_) => 2,
            CliError::Sim(e) if e.is_numerical() => 3,
            CliError::Sim(_) => 1,
        }
    }

    fn in_file(self, path: &Path) -> CliError {
        match self {
            CliError::Config(source) => CliError::ConfigFile {
                path: path.display().to_string(),
                source,
            },
            other => other,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Parser)]
#[command(
    name = "sqfock",
    version,
    about = "Fock-basis simulator for squeezing interferometers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Amplitude of one output pattern.
    Amp {
        config: PathBuf,
        /// Output occupation pattern, e.g. 1,1.
        #[arg(long)]
        pattern: Option<String>,
        /// Override a variable: name=value.
        #[arg(long = "set", value_name = "NAME=VALUE")]
        sets: Vec<String>,
    },
    /// Amplitude over a grid of one or two variables, written as CSV.
    Sweep {
        config: PathBuf,
        /// First (slowest) axis: name=lo:hi:count or name=v1,v2,...
        #[arg(long)]
        vary: String,
        /// Optional second axis, same syntax.
        #[arg(long)]
        vary2: Option<String>,
        #[arg(long)]
        pattern: Option<String>,
        #[arg(long = "set", value_name = "NAME=VALUE")]
        sets: Vec<String>,
        /// Output file; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parameters that cancel the detection amplitude of a standard geometry.
    Zeros {
        #[arg(long, value_enum)]
        solve: Solve,
        /// Config whose policy settings are used for the residual check.
        #[arg(long)]
        config: Option<PathBuf>,
        /// three_crystal: r1 r2 r3; four_crystal_pi: r1; four_crystal_phi0: r3 r4.
        #[arg(required = true, allow_negative_numbers = true)]
        params: Vec<String>,
    },
    /// Compare the engine with independent computations.
    Validate {
        #[arg(long, value_enum, default_value = "all")]
        suite: Suite,
        /// Tolerance for every check; each suite has its own default.
        #[arg(long)]
        tol: Option<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
enum Solve {
    ThreeCrystal,
    FourCrystalPi,
    FourCrystalPhi0,
}

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn literal(text: &str, what: &str) -> Result<f64> {
    let e = expr::parse(text.trim()).map_err(|e| CliError::Usage(format!("{what}: column {}: {}", e.col, e.msg)))?;
    let mut names = Vec::new();
    e.vars(&mut names);
    if let Some((n, _)) = names.first() {
        return Err(CliError::Usage(format!("{what}: '{n}' is not a number")));
    }
    let v = e.eval(&HashMap::new());
    if !v.is_finite() {
        return Err(CliError::Usage(format!("{what}: value is {v}")));
    }
    Ok(v)
}

fn load(path: &Path) -> Result<Config> {
    let src = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    Config::parse(&src).map_err(|e| CliError::from(e).in_file(path))
}

fn overrides(cfg: &Config, sets: &[String]) -> Result<HashMap<String, f64>> {
    let mut out = HashMap::new();
    for s in sets {
        let Some((name, value)) = s.split_once('=') else {
            return Err(CliError::Usage(format!("--set expects name=value, got '{s}'")));
        };
        let name = name.trim();
        if !cfg.has_var(name) {
            return Err(CliError::Usage(format!(
                "--set: '{name}' is not a variable of the config"
            )));
        }
        out.insert(name.to_string(), literal(value, &format!("--set {name}"))?);
    }
    Ok(out)
}

fn pattern(cfg: &Config, flag: Option<&str>) -> Result<OccupationVector> {
    match flag {
        Some(p) => p
            .parse::<OccupationVector>()
            .map_err(|e| CliError::Usage(format!("--pattern: {e}"))),
        None => cfg
            .pattern()
            .ok_or_else(|| CliError::Usage("no pattern: set 'pattern' in the config or pass --pattern".into())),
    }
}

fn evaluate(cfg: &Config, env: &HashMap<String, f64>, pattern: &OccupationVector) -> Result<AmplitudeResult> {
    let circuit = cfg.circuit(env)?;
    let policy = cfg.policy(&circuit);
    Ok(amplitude(&circuit, pattern, &policy)?)
}

fn cmd_amp(path: &Path, flag: Option<&str>, sets: &[String]) -> Result<()> {
    let cfg = load(path)?;
    let env = overrides(&cfg, sets)?;
    let pat = pattern(&cfg, flag)?;
    let a = evaluate(&cfg, &env, &pat).map_err(|e| e.in_file(path))?;
    println!(
        "re={} im={} abs={} prob={} tail_bound={}",
        fmt(a.amplitude.re),
        fmt(a.amplitude.im),
        fmt(a.amplitude.norm()),
        fmt(a.probability()),
        fmt(a.error_bound)
    );
    Ok(())
}

fn parse_axis(spec: &str, cfg: &Config) -> Result<Axis> {
    let Some((name, range)) = spec.split_once('=') else {
        return Err(CliError::Usage(format!(
            "axis '{spec}': expected name=lo:hi:count or name=v1,v2,..."
        )));
    };
    let name = name.trim();
    if !cfg.has_var(name) {
        return Err(CliError::Usage(format!(
            "axis '{name}' is not a variable of the config"
        )));
    }
    let what = format!("axis {name}");
    let parts: Vec<&str> = range.split(':').collect();
    let axis = match parts.as_slice() {
        [lo, hi, count] => {
            let count = count
                .trim()
                .parse::<usize>()
                .map_err(|_| CliError::Usage(format!("{what}: count '{count}' is not a whole number")))?;
            Axis::linspace(name, literal(lo, &what)?, literal(hi, &what)?, count)
        }
        [list] => {
            let values = list
                .split(',')
                .map(|v| literal(v, &what))
                .collect::<Result<Vec<f64>>>()?;
            Axis::list(name, values)
        }
        _ => return Err(CliError::Usage(format!("{what}: expected lo:hi:count or a comma list"))),
    };
    axis.map_err(|e| CliError::Usage(e.to_string()))
}

fn cmd_sweep(
    path: &Path,
    vary: &str,
    vary2: Option<&str>,
    flag: Option<&str>,
    sets: &[String],
    out: Option<&Path>,
) -> Result<()> {
    let cfg = load(path)?;
    let base = overrides(&cfg, sets)?;
    let pat = pattern(&cfg, flag)?;
    let mut axes = vec![parse_axis(vary, &cfg)?];
    if let Some(v) = vary2 {
        axes.push(parse_axis(v, &cfg)?);
    }
    if axes.len() == 2 && axes[0].name == axes[1].name {
        return Err(CliError::Usage(format!("both axes vary '{}'", axes[0].name)));
    }
    let grid = SweepGrid::new(axes)?;
    let names: Vec<String> = grid.names().iter().map(|s| s.to_string()).collect();
    let rows: Vec<(Vec<f64>, AmplitudeResult)> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let point = grid.point(i);
            let mut env = base.clone();
            for (n, v) in names.iter().zip(&point) {
                env.insert(n.clone(), *v);
            }
            let a = evaluate(&cfg, &env, &pat).map_err(|e| e.in_file(path))?;
            Ok((point, a))
        })
        .collect::<Result<_>>()?;

    let sink: Box<dyn Write> = match out {
        Some(p) => Box::new(std::fs::File::create(p).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?),
        None => Box::new(std::io::stdout().lock()),
    };
    let mut w = csv::Writer::from_writer(sink);
    let io = |e: csv::Error| CliError::Usage(format!("writing CSV: {e}"));
    let mut header = names.clone();
    header.extend(["re", "im", "prob", "tail_bound"].map(String::from));
    w.write_record(&header).map_err(io)?;
    for (point, a) in rows {
        let mut rec: Vec<String> = point.iter().map(|v| fmt(*v)).collect();
        rec.extend([a.amplitude.re, a.amplitude.im, a.probability(), a.error_bound].map(fmt));
        w.write_record(&rec).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::Usage(format!("writing CSV: {e}")))?;
    Ok(())
}

fn residual(kind: CircuitKind, params: &[f64], cfg: Option<&Config>) -> Result<AmplitudeResult> {
    let c = standard_circuit(kind, params)?;
    let policy = cfg.map_or_else(|| auto_policy(&c), |cfg| cfg.policy(&c));
    Ok(amplitude(&c, &kind.detection_pattern(), &policy)?)
}

fn cmd_zeros(solve: Solve, config: Option<&Path>, params: &[String]) -> Result<()> {
    let cfg = config.map(load).transpose()?;
    let want = match solve {
        Solve::ThreeCrystal => ["r1", "r2", "r3"].as_slice(),
        Solve::FourCrystalPi => ["r1"].as_slice(),
        Solve::FourCrystalPhi0 => ["r3", "r4"].as_slice(),
    };
    if params.len() != want.len() {
        return Err(CliError::Usage(format!(
            "{} takes {} parameter(s): {}",
            solve.to_possible_value().expect("no skipped variants").get_name(),
            want.len(),
            want.join(" ")
        )));
    }
    let p = params
        .iter()
        .zip(want)
        .map(|(s, n)| literal(s, n))
        .collect::<Result<Vec<f64>>>()?;
    let mut worst: f64 = 0.0;
    let mut report = |label: String, a: AmplitudeResult| {
        worst = worst.max(a.amplitude.norm());
        println!(
            "{label} residual={} tail_bound={}",
            fmt(a.amplitude.norm()),
            fmt(a.error_bound)
        );
    };
    match solve {
        Solve::ThreeCrystal => {
            let sols = three_crystal_null(p[0], p[1], p[2])?;
            if !sols[0].feasible {
                let (lo, hi) = three_crystal_t3_window(p[0], p[1]);
                println!(
                    "infeasible: tanh(r3) = {} lies outside [{}, {}]",
                    fmt(p[2].tanh()),
                    fmt(lo),
                    fmt(hi)
                );
                return Ok(());
            }
            for s in sols {
                let a = residual(
                    CircuitKind::ThreeCrystal,
                    &[p[0], p[1], p[2], s.phi1, s.phi2],
                    cfg.as_ref(),
                )?;
                report(format!("phi1={} phi2={}", fmt(s.phi1), fmt(s.phi2)), a);
            }
        }
        Solve::FourCrystalPi => {
            let r3 = four_crystal_null_r3(p[0])?;
            let a = residual(CircuitKind::FourCrystal, &[p[0], p[0], r3, r3, PI], cfg.as_ref())?;
            report(format!("r3=r4={}", fmt(r3)), a);
        }
        Solve::FourCrystalPhi0 => match four_crystal_phi0_null_r1(p[0], p[1])? {
            Some(r1) => {
                let a = residual(CircuitKind::FourCrystal, &[r1, r1, p[0], p[1], 0.0], cfg.as_ref())?;
                report(format!("r1=r2={}", fmt(r1)), a);
            }
            None => {
                println!(
                    "infeasible: |r3 - r4| = {} must exceed asinh(1) = {}",
                    fmt((p[0] - p[1]).abs()),
                    fmt(1f64.asinh())
                );
                return Ok(());
            }
        },
    }
    if worst >= NULL_TOLERANCE {
        return Err(CliError::Validation(format!(
            "largest residual {worst:.3e} exceeds {NULL_TOLERANCE:e}"
        )));
    }
    Ok(())
}

fn cmd_validate(suite: Suite, tol: Option<f64>) -> Result<()> {
    if let Some(t) = tol {
        if !(t > 0.0 && t.is_finite()) {
            return Err(CliError::Usage(format!("--tol must be positive, got {t}")));
        }
    }
    let checks = validate::run_suite(suite)?;
    let mut failed = 0;
    for c in &checks {
        let limit = tol.unwrap_or_else(|| Suite::from_str(c.suite, true).expect("suite name").default_tol());
        let ok = c.deviation <= limit;
        failed += usize::from(!ok);
        println!(
            "{:<10} {:<16} max deviation {:.3e}  tol {:.0e}  {}",
            c.suite,
            c.name,
            c.deviation,
            limit,
            if ok { "ok" } else { "FAIL" }
        );
    }
    if failed > 0 {
        return Err(CliError::Validation(format!(
            "{failed} of {} checks failed",
            checks.len()
        )));
    }
    println!("all {} checks passed", checks.len());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Amp { config, pattern, sets } => cmd_amp(config, pattern.as_deref(), sets),
        Command::Sweep {
            config,
            vary,
            vary2,
            pattern,
            sets,
            out,
        } => cmd_sweep(config, vary, vary2.as_deref(), pattern.as_deref(), sets, out.as_deref()),
        Command::Zeros { solve, config, params } => cmd_zeros(*solve, config.as_deref(), params),
        Command::Validate { suite, tol } => cmd_validate(*suite, *tol),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
