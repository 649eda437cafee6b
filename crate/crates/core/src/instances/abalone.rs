//! The UCI Abalone data as a linear bandit.
//!
//! Each row is `sex, 7 measurements, rings`. Sex is encoded as one number
//! and an intercept coordinate `1` is appended, giving `d = 9`. `theta*` is the
//! least-squares fit of rings on all rows; the arms are the `top_n` rows with
//! the most rings, ties kept in file order.

use std::fs;
use std::io::Read;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::arms::ArmSet;
use crate::bandit::{LinearBanditInstance, TIE_TOL};
use crate::error::{Error, Result};

const FEATURES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbaloneOptions {
    pub top_n: usize,
    pub noise_std: f64,
    /// Codes for `M`, `F` and `I`.
    pub sex_codes: [f64; 3],
}

impl Default for AbaloneOptions {
    fn default() -> Self {
        Self {
            top_n: 400,
            noise_std: 10.0,
            sex_codes: [1.0, 2.0, 3.0],
        }
    }
}

/// Minimum-norm least squares through the SVD.
pub fn fit_least_squares(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    if x.nrows() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.nrows(),
            found: y.len(),
        });
    }
    let svd = crate::geometry::checked_svd(x)?;
    let tol = svd.singular_values.max() * 1e-12 * x.nrows().max(x.ncols()) as f64;
    let theta = svd.solve(y, tol).map_err(|e| Error::invalid(e.to_string()))?;
    if theta.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("least-squares fit"));
    }
    Ok(theta)
}

fn parse_sex(field: &str, codes: &[f64; 3], line: usize) -> Result<f64> {
    match field.to_ascii_uppercase().as_str() {
        "M" => Ok(codes[0]),
        "F" => Ok(codes[1]),
        "I" => Ok(codes[2]),
        other => other.parse().map_err(|_| Error::Parse {
            line,
            msg: format!("unknown sex `{field}`"),
        }),
    }
}

fn read_rows<R: Read>(input: R, opts: &AbaloneOptions) -> Result<(Vec<[f64; FEATURES + 1]>, Vec<f64>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut features = Vec::new();
    let mut rings = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record?;
        let line = record.position().map_or(idx + 1, |p| p.line() as usize);
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        if record.len() != FEATURES + 1 {
            return Err(Error::Parse {
                line,
                msg: format!("expected {} fields, found {}", FEATURES + 1, record.len()),
            });
        }
        let last = &record[FEATURES];
        if idx == 0 && last.parse::<f64>().is_err() {
            continue;
        }
        let mut row = [1.0; FEATURES + 1];
        row[0] = parse_sex(&record[0], &opts.sex_codes, line)?;
        for (slot, field) in row[1..FEATURES].iter_mut().zip(record.iter().skip(1)) {
            *slot = field.parse().map_err(|_| Error::Parse {
                line,
                msg: format!("`{field}` is not a number"),
            })?;
        }
        let target: f64 = last.parse().map_err(|_| Error::Parse {
            line,
            msg: format!("`{last}` is not a number"),
        })?;
        if row.iter().chain([&target]).any(|v| !v.is_finite()) {
            return Err(Error::Parse {
                line,
                msg: "non-finite value".into(),
            });
        }
        features.push(row);
        rings.push(target);
    }
    Ok((features, rings))
}

pub(crate) fn abalone_from_reader<R: Read>(
    input: R,
    opts: &AbaloneOptions,
) -> Result<LinearBanditInstance> {
    let (rows, rings) = read_rows(input, opts)?;
    let n = rows.len();
    if n < FEATURES + 1 || n < opts.top_n || opts.top_n < 2 {
        return Err(Error::invalid(format!(
            "{n} data rows cannot give {} arms in {} dimensions",
            opts.top_n,
            FEATURES + 1
        )));
    }
    let x = DMatrix::from_fn(n, FEATURES + 1, |i, j| rows[i][j]);
    let theta = fit_least_squares(&x, &DVector::from_vec(rings.clone()))?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| rings[b].total_cmp(&rings[a]));
    order.truncate(opts.top_n);

    // keep only the first arm attaining the top expected reward
    let reward = |i: usize| x.row(i).dot(&theta.transpose());
    let top = order.iter().map(|&i| reward(i)).fold(f64::NEG_INFINITY, f64::max);
    let tol = TIE_TOL * top.abs().max(1.0);
    let mut seen_top = false;
    order.retain(|&i| {
        if top - reward(i) > tol {
            return true;
        }
        !std::mem::replace(&mut seen_top, true)
    });

    let arms: Vec<Vec<f64>> = order.iter().map(|&i| rows[i].to_vec()).collect();
    let labels = order.iter().map(|i| format!("row{}", i + 1)).collect();
    LinearBanditInstance::new(ArmSet::new(&arms)?, theta, opts.noise_std)?.with_labels(labels)
}

pub fn load_abalone(path: &Path, opts: &AbaloneOptions) -> Result<LinearBanditInstance> {
    abalone_from_reader(fs::File::open(path)?, opts)
}
