use clap::{Args, Parser, Subcommand};
use ffaba::bethe::chi_residual;
use ffaba::harness::config::{format_complex, parse_complex, ConfigError, RunConfig};
use ffaba::harness::report::{Report, EXIT_INTERNAL, EXIT_PASS, EXIT_TOLERANCE, EXIT_USAGE};
use ffaba::harness::{run_checks, RunOptions, Suite};
use ffaba::sampling::{SampleError, Sampler};
use ffaba::theta::ModularContext;
use ffaba::vertex::couplings;
use ffaba::C64;
use serde_json::json;
use std::io::Write;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "ffaba", version, about = "Free-fermion eight-vertex Bethe ansatz: evaluation and verification")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// JSON run configuration ("schema": 1)
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<String>,
    /// overrides the seed in the config
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// worker threads
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    jobs: Option<u64>,
    /// run only checks whose id contains PATTERN
    #[arg(long, global = true, value_name = "PATTERN")]
    only: Option<String>,
    /// also run N = 6
    #[arg(long, global = true)]
    slow: bool,
    /// also run N = 6 and N = 8
    #[arg(long, global = true)]
    very_slow: bool,
    /// output file (report or roots); stdout if absent
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<String>,
    /// record wall-clock times (makes reports non-reproducible)
    #[arg(long, global = true)]
    timings: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a Jacobi theta function
    Theta(ThetaArgs),
    /// Describe the model for each configured N
    Model,
    /// Solve the Bethe equations and write a roots file
    SolveBethe,
    /// Scalar-product checks for the configured imbalances
    ScalarProduct,
    /// Run the full verification suite
    Verify,
}

#[derive(Args)]
struct ThetaArgs {
    /// 1, 2, 3 or 4
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
    kind: u8,
    #[arg(long, allow_hyphen_values = true, value_parser = parse_complex)]
    u: C64,
    #[arg(long, allow_hyphen_values = true, value_parser = parse_complex)]
    tau: C64,
    /// evaluate at modulus k*tau
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
    scale: u8,
    /// first derivative in u
    #[arg(long)]
    derivative: bool,
}

enum Failure {
    Usage(String),
    Internal(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn load_config(g: &Global) -> Result<RunConfig, Failure> {
    let mut cfg = match &g.config {
        Some(path) => RunConfig::from_path(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = g.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn sizes(cfg: &RunConfig, g: &Global) -> Vec<usize> {
    let mut out = cfg.sizes.clone();
    if g.slow || g.very_slow {
        out.push(6);
    }
    if g.very_slow {
        out.push(8);
    }
    out.sort_unstable();
    out.dedup();
    out
}

fn emit(text: &str, g: &Global, cfg: &RunConfig) -> Result<(), Failure> {
    match g.out.as_ref().or(cfg.out.as_ref()) {
        Some(path) => std::fs::write(path, text).map_err(|e| Failure::Usage(format!("cannot write {path}: {e}"))),
        None => {
            let mut out = std::io::stdout().lock();
            match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Failure::Internal(format!("stdout: {e}"))),
                _ => Ok(()),
            }
        }
    }
}

fn cmd_theta(a: &ThetaArgs) -> Result<i32, Failure> {
    let usage = |e: ffaba::theta::ThetaError| Failure::Usage(e.to_string());
    let ctx = ModularContext::new(a.tau).map_err(usage)?;
    let value = if a.derivative { ctx.eval_theta_derivative(a.kind, a.u, a.scale) } else { ctx.eval_theta(a.kind, a.u, a.scale) }.map_err(usage)?;
    println!("{}", format_complex(value));
    Ok(EXIT_PASS)
}

fn pair(z: C64) -> [f64; 2] {
    [z.re, z.im]
}

fn cmd_model(g: &Global) -> Result<i32, Failure> {
    let cfg = load_config(g)?;
    let mut text = String::new();
    for n in sizes(&cfg, g) {
        let mut s = Sampler::new(cfg.seed);
        let p = cfg.model(n, &mut s).map_err(|e| Failure::Internal(e.to_string()))?;
        let gauge = cfg.gauge(&p, &mut s).map_err(|e| Failure::Internal(e.to_string()))?;
        let (jx, jy, jz) = couplings(&p);
        let line = json!({
            "N": n,
            "dim": p.dim(),
            "tau": pair(p.ctx().tau()),
            "eta": cfg.eta,
            "xi": p.xi().iter().map(|&z| pair(z)).collect::<Vec<_>>(),
            "gauge": {"s": pair(gauge.s), "t": pair(gauge.t), "x": pair(gauge.x()), "y": pair(gauge.y())},
            "couplings": {"Jx": pair(jx), "Jy": pair(jy), "Jz": pair(jz)},
        });
        text.push_str(&line.to_string());
        text.push('\n');
    }
    emit(&text, g, &cfg)?;
    Ok(EXIT_PASS)
}

const ROOT_TOL: f64 = 1e-9;

fn cmd_solve_bethe(g: &Global) -> Result<i32, Failure> {
    let cfg = load_config(g)?;
    let mut runs = Vec::new();
    let mut worst: f64 = 0.0;
    for n in sizes(&cfg, g) {
        let sc = cfg.scenario(n, cfg.seed).map_err(|e| match e {
            SampleError::Bethe(b) => Failure::Internal(format!("N = {n}: {b} (current grid {})", cfg.grid)),
            other => Failure::Internal(format!("N = {n}: {other}")),
        })?;
        let r = &sc.roots;
        let chi: Vec<f64> = r.roots.iter().map(|&z| chi_residual(r.nu, z, &sc.params)).collect();
        worst = chi.iter().fold(worst, |a, &b| if b.is_nan() { b } else { a.max(b) });
        runs.push(json!({
            "N": n,
            "nu": r.nu,
            "tau": pair(sc.params.ctx().tau()),
            "xi": sc.params.xi().iter().map(|&z| pair(z)).collect::<Vec<_>>(),
            "gauge": {"s": pair(sc.gauge.s), "t": pair(sc.gauge.t)},
            "roots": r.roots.iter().map(|&z| pair(z)).collect::<Vec<_>>(),
            "chi_residuals": chi,
            "twin_pairs": r.twin_pairs,
            "selected": r.selected.iter().map(|&z| pair(z)).collect::<Vec<_>>(),
            "contour_count": r.contour_count,
        }));
    }
    let doc = json!({"schema": ffaba::harness::config::SCHEMA, "seed": cfg.seed, "runs": runs});
    let mut text = serde_json::to_string_pretty(&doc).map_err(|e| Failure::Internal(e.to_string()))?;
    text.push('\n');
    emit(&text, g, &cfg)?;
    if worst <= ROOT_TOL {
        Ok(EXIT_PASS)
    } else {
        eprintln!("largest |chi| residual {worst:e} exceeds {ROOT_TOL:e}");
        Ok(EXIT_TOLERANCE)
    }
}

fn cmd_report(g: &Global, suite: Suite) -> Result<i32, Failure> {
    let cfg = load_config(g)?;
    let opts = RunOptions { only: g.only.clone(), jobs: g.jobs.map(|j| j as usize), timings: g.timings };
    let report: Report = run_checks(&cfg, &sizes(&cfg, g), suite, &opts);
    emit(&report.to_jsonl(), g, &cfg)?;
    let s = &report.summary;
    eprintln!("{} checks: {} passed, {} failed, {} errors", s.total, s.passed, s.failed, s.errors);
    if let Some(r) = report.first_problem() {
        let why = r.error.clone().unwrap_or_else(|| format!("residual {:?} > tolerance {:e}", r.residual, r.tolerance));
        eprintln!("first problem: {} ({why})", r.check_id);
    }
    if s.total == 0 {
        eprintln!("no checks matched");
    }
    Ok(report.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Theta(a) => cmd_theta(a),
        Command::Model => cmd_model(&cli.global),
        Command::SolveBethe => cmd_solve_bethe(&cli.global),
        Command::ScalarProduct => cmd_report(&cli.global, Suite::ScalarProduct),
        Command::Verify => cmd_report(&cli.global, Suite::Verify),
    };
    let code = match result {
        Ok(c) => c,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            EXIT_USAGE
        }
        Err(Failure::Internal(m)) => {
            eprintln!("error: {m}");
            EXIT_INTERNAL
        }
    };
    ExitCode::from(code as u8)
}
