//! Verification harness: configuration, the check registry and the report.

pub mod checks;
pub mod config;
pub mod report;

use checks::{Check, Job, Sizes, CHECKS};
use config::{format_complex, RunConfig, Source};
use rayon::prelude::*;
use report::{derive_seed, digest, Record, Report, Status};
use serde::Serialize;
use std::time::Instant;

/// One scheduled evaluation of a check.
struct Task<'a> {
    check: &'a Check,
    n_sites: Option<usize>,
    id: String,
}

#[derive(Serialize)]
struct DigestInputs<'a> {
    check_id: &'a str,
    n_sites: Option<usize>,
    tau: String,
    eta: &'a str,
    nu: i64,
    seed: u64,
    xi: &'a Source<Vec<[f64; 2]>>,
    gauge: &'a Source<config::GaugeSpec>,
    grid: usize,
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Substring filter on check ids.
    pub only: Option<String>,
    pub jobs: Option<usize>,
    pub timings: bool,
}

/// Which checks a run evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    /// every registered check
    Verify,
    /// scalar-product checks for the configured imbalances, plus requested sectors
    ScalarProduct,
}

fn selected(check: &Check, cfg: &RunConfig, suite: Suite) -> bool {
    match suite {
        Suite::Verify => true,
        Suite::ScalarProduct => {
            let key = check.key();
            key == "scalar.selection-rule" || cfg.kappa.iter().any(|&k| checks::scalar_keys_for_kappa(k).contains(&key.as_str()))
        }
    }
}

fn plan(cfg: &RunConfig, sizes: &[usize], suite: Suite, only: Option<&str>) -> Vec<Task<'static>> {
    let mut out = Vec::new();
    for check in CHECKS.iter().filter(|c| selected(c, cfg, suite)) {
        let ns: Vec<Option<usize>> = match check.sizes {
            Sizes::Global => vec![None],
            Sizes::AtLeast(_) => sizes.iter().copied().filter(|&n| check.applies(n)).map(Some).collect(),
        };
        for n in ns {
            let id = check.id(n);
            if only.is_none_or(|pat| id.contains(pat)) {
                out.push(Task { check, n_sites: n, id });
            }
        }
    }
    out
}

fn finish(base: Record, outcome: Result<checks::Measured, checks::CheckError>) -> Record {
    match outcome {
        Ok(m) => {
            let pass = m.residual <= base.tolerance;
            Record {
                residual: Some(m.residual).filter(|r| r.is_finite()),
                pass,
                status: if pass { Status::Pass } else { Status::Fail },
                flag: m.flag.map(Into::into),
                ..base
            }
        }
        Err(e) => Record { error: Some(e.to_string()), ..base },
    }
}

fn blank(id: &str, group: &str, identity: &str, n_sites: Option<usize>, inputs_digest: String, tolerance: f64) -> Record {
    Record {
        check_id: id.into(),
        group: group.into(),
        identity: identity.into(),
        n_sites,
        inputs_digest,
        residual: None,
        tolerance,
        pass: false,
        status: Status::Error,
        flag: None,
        error: None,
        wall_time_ms: None,
    }
}

fn digest_for(cfg: &RunConfig, id: &str, n_sites: Option<usize>, seed: u64) -> String {
    digest(&DigestInputs {
        check_id: id,
        n_sites,
        tau: format_complex(cfg.tau()),
        eta: &cfg.eta,
        nu: cfg.nu,
        seed,
        xi: &cfg.xi,
        gauge: &cfg.gauge,
        grid: cfg.grid,
    })
}

fn record(cfg: &RunConfig, task: &Task, timings: bool) -> Record {
    let seed = derive_seed(cfg.seed, &task.id);
    let tolerance = cfg.tolerances.get(&task.check.key()).copied().unwrap_or(task.check.tolerance);
    let base = blank(&task.id, task.check.group, task.check.identity, task.n_sites, digest_for(cfg, &task.id, task.n_sites, seed), tolerance);
    let job = Job { cfg, n_sites: task.n_sites.unwrap_or(2), seed };
    let start = Instant::now();
    let outcome = task.check.run(&job);
    let wall = timings.then(|| start.elapsed().as_secs_f64() * 1e3);
    finish(Record { wall_time_ms: wall, ..base }, outcome)
}

fn requested_record(cfg: &RunConfig, n_sites: usize, kappa: i64, lambda: i64, timings: bool) -> Record {
    let id = format!("scalar.requested-sector.N{n_sites}.kappa{kappa:+}.lambda{lambda}");
    let seed = derive_seed(cfg.seed, &id);
    let default = if kappa == 0 { 1e-8 } else { 1e-10 };
    let tolerance = cfg.tolerances.get("scalar.requested-sector").copied().unwrap_or(default);
    let identity = "requested sector: vanishing if the selection rule forbids it, else closed form against brute force";
    let base = blank(&id, "scalar", identity, Some(n_sites), digest_for(cfg, &id, Some(n_sites), seed), tolerance);
    let start = Instant::now();
    let outcome = checks::requested_sector(&Job { cfg, n_sites, seed }, kappa, lambda);
    let wall = timings.then(|| start.elapsed().as_secs_f64() * 1e3);
    finish(Record { wall_time_ms: wall, ..base }, outcome)
}

/// Ids that a run with `sizes` and `only` would evaluate.
pub fn planned_ids(cfg: &RunConfig, sizes: &[usize], suite: Suite, only: Option<&str>) -> Vec<String> {
    plan(cfg, sizes, suite, only).into_iter().map(|t| t.id).collect()
}

/// Runs the checks of `suite` at every chain length in `sizes`.
pub fn run_checks(cfg: &RunConfig, sizes: &[usize], suite: Suite, opts: &RunOptions) -> Report {
    let start = Instant::now();
    let tasks = plan(cfg, sizes, suite, opts.only.as_deref());
    let work = || -> Vec<Record> {
        let mut records: Vec<Record> = tasks.par_iter().map(|t| record(cfg, t, opts.timings)).collect();
        if let Some(lambda) = cfg.lambda {
            let extra: Vec<(usize, i64)> =
                sizes.iter().flat_map(|&n| cfg.kappa.iter().map(move |&k| (n, k))).filter(|&(n, k)| checks::requested_applies(n, cfg.nu, k, lambda)).collect();
            records.extend(
                extra
                    .par_iter()
                    .map(|&(n, k)| requested_record(cfg, n, k, lambda, opts.timings))
                    .filter(|r| opts.only.as_deref().is_none_or(|p| r.check_id.contains(p)))
                    .collect::<Vec<_>>(),
            );
        }
        records
    };
    let records = match opts.jobs {
        Some(j) => match rayon::ThreadPoolBuilder::new().num_threads(j.max(1)).build() {
            Ok(pool) => pool.install(work),
            Err(_) => work(),
        },
        None => work(),
    };
    let wall = opts.timings.then(|| start.elapsed().as_secs_f64() * 1e3);
    Report::new(records, cfg, sizes.to_vec(), wall)
}
