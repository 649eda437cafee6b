use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::algorithms::Algorithm;
use crate::error::{Error, Result};
use crate::instances::io::parse_key_values;
use crate::instances::InstanceSpec;

use super::BudgetSpec;

/// Benchmark settings read from a flat `key = value` file.
///
/// `instance`, `algo` and `budget` accumulate over repeated lines, and `algo`
/// and `budget` also accept comma lists. Every other key may appear once.
/// Dashes and underscores in keys are interchangeable.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BenchFile {
    pub instances: Vec<InstanceSpec>,
    pub algorithms: Vec<Algorithm>,
    pub budgets: Vec<BudgetSpec>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub out_csv: Option<PathBuf>,
    pub out_plot: Option<PathBuf>,
    pub log_y: Option<bool>,
    pub timing: Option<bool>,
    pub eps: Option<f64>,
    pub prior_scale: Option<f64>,
}

fn scalar<T: FromStr>(slot: &mut Option<T>, key: &str, value: &str, line: usize) -> Result<()> {
    if slot.is_some() {
        return Err(Error::Parse {
            line,
            msg: format!("`{key}` given twice"),
        });
    }
    *slot = Some(value.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("bad value `{value}` for `{key}`"),
    })?);
    Ok(())
}

fn list<T: FromStr<Err = Error>>(out: &mut Vec<T>, value: &str, line: usize) -> Result<()> {
    for item in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        out.push(item.parse().map_err(|e: Error| Error::Parse {
            line,
            msg: e.to_string(),
        })?);
    }
    Ok(())
}

impl BenchFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = BenchFile::default();
        for (line, key, value) in parse_key_values(text)? {
            let key = key.replace('-', "_");
            match key.as_str() {
                "instance" | "instances" => {
                    cfg.instances.push(value.parse().map_err(|e: Error| Error::Parse {
                        line,
                        msg: e.to_string(),
                    })?)
                }
                "algo" | "algos" | "algorithm" | "algorithms" => list(&mut cfg.algorithms, &value, line)?,
                "budget" | "budgets" => list(&mut cfg.budgets, &value, line)?,
                "trials" => scalar(&mut cfg.trials, &key, &value, line)?,
                "seed" => scalar(&mut cfg.seed, &key, &value, line)?,
                "jobs" => scalar(&mut cfg.jobs, &key, &value, line)?,
                "out_csv" => scalar(&mut cfg.out_csv, &key, &value, line)?,
                "out_plot" => scalar(&mut cfg.out_plot, &key, &value, line)?,
                "log_y" => scalar(&mut cfg.log_y, &key, &value, line)?,
                "timing" => scalar(&mut cfg.timing, &key, &value, line)?,
                "eps" => scalar(&mut cfg.eps, &key, &value, line)?,
                "prior_scale" => scalar(&mut cfg.prior_scale, &key, &value, line)?,
                _ => {
                    return Err(Error::Parse {
                        line,
                        msg: format!("unknown key `{key}`"),
                    })
                }
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }
}
