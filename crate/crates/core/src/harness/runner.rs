use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::checks::{run_point, CheckEnv, Record};
use super::report::{Provenance, Report, Summary, TOOL_NAME, TOOL_VERSION};
use super::sampling::{prepare, PreparedPoint};
use super::scenario::{parse, validate, HVectorInput};
use super::HarnessError;
use crate::hvector::KropinaField;
use crate::jet::ScalarField;

/// Command-line overrides of a scenario.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub jobs: Option<usize>,
    pub seed: Option<u64>,
    pub tol_rel: Option<f64>,
    pub tol_abs: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitStatus {
    Pass = 0,
    CheckFailure = 1,
    InvalidInput = 2,
}

pub struct RunOutcome {
    pub status: ExitStatus,
    pub report: Report,
}

fn empty_report(src: &str, seed: u64, error: String) -> Report {
    Report {
        scenario: None,
        provenance: provenance(src, seed),
        metrics: Vec::new(),
        points: Vec::new(),
        records: Vec::new(),
        summary: Summary::default(),
        error: Some(error),
    }
}

fn provenance(src: &str, seed: u64) -> Provenance {
    Provenance { scenario_sha256: hex::encode(Sha256::digest(src.as_bytes())), seed, tool: TOOL_NAME, tool_version: TOOL_VERSION }
}

pub fn run_file(path: &Path, opts: &RunOptions) -> RunOutcome {
    match std::fs::read_to_string(path) {
        Ok(src) => run_str(&src, opts),
        Err(e) => RunOutcome {
            status: ExitStatus::InvalidInput,
            report: empty_report("", opts.seed.unwrap_or(0), format!("cannot read {}: {e}", path.display())),
        },
    }
}

/// Parses, validates and runs a scenario. A report is produced in every case.
pub fn run_str(src: &str, opts: &RunOptions) -> RunOutcome {
    let start = Instant::now();
    let invalid =
        |seed: u64, e: HarnessError| RunOutcome { status: ExitStatus::InvalidInput, report: empty_report(src, seed, e.to_string()) };
    let mut scenario = match parse(src) {
        Ok(s) => s,
        Err(e) => return invalid(opts.seed.unwrap_or(0), e),
    };
    if let Some(s) = opts.seed {
        scenario.seed = s;
    }
    if let Some(t) = opts.tol_rel {
        scenario.tolerances.tol_rel = Some(t);
    }
    if let Some(t) = opts.tol_abs {
        scenario.tolerances.tol_abs = t;
    }
    let seed = scenario.seed;
    let v = match validate(scenario) {
        Ok(v) => v,
        Err(e) => return invalid(seed, e),
    };
    let sc = &v.scenario;
    let fields: Vec<Option<KropinaField>> = match &sc.hvector {
        HVectorInput::Spec(s) if s.is_field() => {
            match v.metrics.iter().map(|m| KropinaField::new(m.clone(), s).map(Some)).collect::<Result<Vec<_>, _>>() {
                Ok(f) => f,
                Err(e) => return invalid(seed, HarnessError::Invalid(e.to_string())),
            }
        }
        _ => vec![None; v.metrics.len()],
    };

    // Point preparation is sequential so that sampling is order-stable.
    let mut points: Vec<PreparedPoint> = Vec::new();
    let mut rejected = 0;
    for (k, m) in v.metrics.iter().enumerate() {
        match prepare(&sc.hvector, &sc.points, m, k, seed) {
            Ok(p) => {
                rejected += p.rejected;
                points.extend(p.points);
            }
            Err(e) => return invalid(seed, e),
        }
    }

    let mut checks = sc.checks.clone();
    checks.dedup();
    let envs: Vec<CheckEnv<'_>> = v
        .metrics
        .iter()
        .zip(&fields)
        .map(|(metric, field)| CheckEnv { metric, field: field.as_ref(), tol: sc.tolerances, geodesic: sc.geodesic })
        .collect();
    let eval = || -> Vec<Result<Vec<Record>, HarnessError>> {
        points
            .par_iter()
            .map(|p| run_point(&envs[p.metric], p, &checks).map_err(|e| HarnessError::domain(p.metric, p.index, &p.x, &p.y, e.to_string())))
            .collect()
    };
    let results = match opts.jobs {
        Some(j) => match rayon::ThreadPoolBuilder::new().num_threads(j).build() {
            Ok(pool) => pool.install(eval),
            Err(e) => return invalid(seed, HarnessError::Invalid(format!("cannot start {j} workers: {e}"))),
        },
        None => eval(),
    };

    let mut records = Vec::new();
    let mut error = None;
    for r in results {
        match r {
            Ok(mut recs) => records.append(&mut recs),
            Err(e) => {
                error = Some(e.to_string());
                break;
            }
        }
    }
    let mut summary = Summary::from_records(&records, points.len(), rejected);
    summary.wall_time_s = start.elapsed().as_secs_f64();
    let status = if error.is_some() {
        ExitStatus::InvalidInput
    } else if summary.failed > 0 {
        ExitStatus::CheckFailure
    } else {
        ExitStatus::Pass
    };
    let report = Report {
        scenario: sc.name.clone(),
        provenance: provenance(src, seed),
        metrics: v.metrics.iter().map(|m| format!("{} (dim {})", m.label(), m.dim())).collect(),
        points,
        records,
        summary,
        error,
    };
    RunOutcome { status, report }
}
