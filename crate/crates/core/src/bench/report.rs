use std::io::{Read, Write};

use crate::algorithms::Algorithm;
use crate::error::{Error, Result};
use crate::hardness::HardnessProfile;

pub const CSV_HEADER: [&str; 9] = [
    "instance",
    "algo",
    "budget",
    "trials",
    "errors",
    "error_rate",
    "ci_lo",
    "ci_hi",
    "mean_trial_ms",
];

/// Two-sided 95% normal quantile.
pub const WILSON_Z: f64 = 1.959963984540054;

/// Wilson score interval for `errors` successes out of `trials`, clamped to
/// `[0, 1]` and widened if rounding would leave the point estimate outside.
pub fn wilson_interval(errors: usize, trials: usize) -> (f64, f64) {
    let n = trials as f64;
    let p = errors as f64 / n;
    let z2 = WILSON_Z * WILSON_Z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = WILSON_Z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).clamp(0.0, 1.0).min(p), (center + half).clamp(0.0, 1.0).max(p))
}

/// One (instance, algorithm, budget) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub instance: String,
    pub algorithm: Algorithm,
    pub budget: u64,
    pub trials: usize,
    /// `None` when the cell failed.
    pub errors: Option<usize>,
    pub error_rate: Option<f64>,
    pub ci: Option<(f64, f64)>,
    pub mean_trial_ms: Option<f64>,
    pub failure: Option<String>,
}

impl CellResult {
    pub fn new(
        instance: &str,
        algorithm: Algorithm,
        budget: u64,
        trials: usize,
        errors: usize,
        mean_trial_ms: Option<f64>,
    ) -> Self {
        Self {
            instance: instance.to_string(),
            algorithm,
            budget,
            trials,
            errors: Some(errors),
            error_rate: Some(errors as f64 / trials as f64),
            ci: Some(wilson_interval(errors, trials)),
            mean_trial_ms,
            failure: None,
        }
    }

    pub fn failed(instance: &str, algorithm: Algorithm, budget: u64, trials: usize, reason: String) -> Self {
        Self {
            instance: instance.to_string(),
            algorithm,
            budget,
            trials,
            errors: None,
            error_rate: None,
            ci: None,
            mean_trial_ms: None,
            failure: Some(reason),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BenchReport {
    pub cells: Vec<CellResult>,
    /// Hardness per instance label, averaged over draws for generators.
    pub hardness: Vec<(String, Option<HardnessProfile>)>,
}

impl BenchReport {
    pub fn failures(&self) -> impl Iterator<Item = &CellResult> {
        self.cells.iter().filter(|c| c.failure.is_some())
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_csv<W: Write>(report: &BenchReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for c in &report.cells {
        w.write_record([
            c.instance.clone(),
            c.algorithm.name().to_string(),
            c.budget.to_string(),
            c.trials.to_string(),
            opt(c.errors),
            opt(c.error_rate),
            opt(c.ci.map(|ci| ci.0)),
            opt(c.ci.map(|ci| ci.1)),
            opt(c.mean_trial_ms),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads cells back. Failure reasons are not stored in the CSV, so failed
/// rows come back with an empty reason.
pub fn read_csv<R: Read>(input: R) -> Result<BenchReport> {
    let mut reader = csv::Reader::from_reader(input);
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header != CSV_HEADER {
        return Err(Error::Parse {
            line: 1,
            msg: format!("unexpected header {header:?}"),
        });
    }
    let mut cells = Vec::new();
    for record in reader.records() {
        let record = record?;
        if record.len() != CSV_HEADER.len() {
            return Err(Error::Parse {
                line: record.position().map_or(0, |p| p.line() as usize),
                msg: format!("expected {} fields, found {}", CSV_HEADER.len(), record.len()),
            });
        }
        let line = record.position().map_or(0, |p| p.line() as usize);
        let bad = |i: usize| Error::Parse {
            line,
            msg: format!("bad {} `{}`", CSV_HEADER[i], &record[i]),
        };
        let num = |i: usize| -> Result<Option<f64>> {
            match &record[i] {
                "" => Ok(None),
                s => s.parse().map(Some).map_err(|_| bad(i)),
            }
        };
        let algorithm: Algorithm = record[1].parse().map_err(|_| bad(1))?;
        let budget = record[2].parse().map_err(|_| bad(2))?;
        let trials = record[3].parse().map_err(|_| bad(3))?;
        let errors: Option<usize> = match &record[4] {
            "" => None,
            s => Some(s.parse().map_err(|_| bad(4))?),
        };
        let error_rate = num(5)?;
        let ci = num(6)?.zip(num(7)?);
        let mean_trial_ms = num(8)?;
        cells.push(CellResult {
            instance: record[0].to_string(),
            algorithm,
            budget,
            trials,
            errors,
            error_rate,
            ci,
            mean_trial_ms,
            failure: errors.is_none().then(String::new),
        });
    }
    Ok(BenchReport {
        cells,
        hardness: Vec::new(),
    })
}
