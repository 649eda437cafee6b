//! Instance CSV files and their key-value sidecars.
//!
//! The CSV holds an optional `theta,<d floats>` row followed by
//! `arm,<d floats>` rows. Rows of bare numbers are read as arms. The sidecar
//! `<stem>.cfg` next to it carries `noise_std` and `seed`.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use nalgebra::DVector;

use crate::arms::ArmSet;
use crate::bandit::LinearBanditInstance;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceFile {
    pub arms: ArmSet,
    pub theta: Option<DVector<f64>>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Sidecar {
    pub noise_std: Option<f64>,
    pub seed: Option<u64>,
}

pub fn write_instance_csv<W: Write>(instance: &LinearBanditInstance, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let row = |tag: &str, values: &mut dyn Iterator<Item = f64>| {
        std::iter::once(tag.to_string())
            .chain(values.map(|v| v.to_string()))
            .collect::<Vec<_>>()
    };
    w.write_record(row("theta", &mut instance.theta().iter().copied()))?;
    for a in instance.arms().matrix().row_iter() {
        w.write_record(row("arm", &mut a.iter().copied()))?;
    }
    w.flush()?;
    Ok(())
}

fn parse_float(field: &str, line: usize) -> Result<f64> {
    let v: f64 = field.trim().parse().map_err(|_| Error::Parse {
        line,
        msg: format!("`{}` is not a number", field.trim()),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            line,
            msg: format!("non-finite value `{}`", field.trim()),
        });
    }
    Ok(v)
}

pub fn read_instance_csv<R: Read>(input: R) -> Result<InstanceFile> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(input);
    let mut theta: Option<Vec<f64>> = None;
    let mut arms: Vec<Vec<f64>> = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let tag = record.get(0).unwrap_or_default().to_ascii_lowercase();
        let (is_theta, skip) = match tag.as_str() {
            "theta" => (true, 1),
            "arm" => (false, 1),
            _ => (false, 0),
        };
        let values = record.iter().skip(skip);
        let values = values
            .map(|f| parse_float(f, line))
            .collect::<Result<Vec<_>>>()?;
        if values.is_empty() {
            return Err(Error::Parse {
                line,
                msg: "row has no values".into(),
            });
        }
        if let Some(expected) = theta.as_ref().map(Vec::len).or(arms.first().map(Vec::len)) {
            if values.len() != expected {
                return Err(Error::Parse {
                    line,
                    msg: format!("expected {expected} values, found {}", values.len()),
                });
            }
        }
        if is_theta {
            if theta.is_some() {
                return Err(Error::Parse {
                    line,
                    msg: "more than one theta row".into(),
                });
            }
            theta = Some(values);
        } else {
            arms.push(values);
        }
    }
    if arms.is_empty() {
        return Err(Error::Parse {
            line: 0,
            msg: "no arm rows".into(),
        });
    }
    Ok(InstanceFile {
        arms: ArmSet::new(&arms)?,
        theta: theta.map(DVector::from_vec),
    })
}

/// `<path without extension>.cfg`.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("cfg")
}

pub fn write_sidecar(path: &Path, sidecar: &Sidecar) -> Result<()> {
    let mut text = String::new();
    if let Some(s) = sidecar.noise_std {
        text.push_str(&format!("noise_std = {s}\n"));
    }
    if let Some(s) = sidecar.seed {
        text.push_str(&format!("seed = {s}\n"));
    }
    fs::write(path, text)?;
    Ok(())
}

/// `key = value` lines; `#` starts a comment and `[section]` headers are ignored.
pub(crate) fn parse_key_values(text: &str) -> Result<Vec<(usize, String, String)>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or_default().trim();
        if line.is_empty() || (line.starts_with('[') && line.ends_with(']')) {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: idx + 1,
            msg: format!("expected `key = value`, found `{line}`"),
        })?;
        out.push((idx + 1, key.trim().to_ascii_lowercase(), value.trim().to_string()));
    }
    Ok(out)
}

pub fn read_sidecar(path: &Path) -> Result<Sidecar> {
    let text = fs::read_to_string(path)?;
    let mut sidecar = Sidecar::default();
    for (line, key, value) in parse_key_values(&text)? {
        let bad = |msg: String| Error::Parse { line, msg };
        match key.as_str() {
            "noise_std" | "sigma" => {
                let v = parse_float(&value, line)?;
                if v < 0.0 {
                    return Err(bad(format!("noise_std must be nonnegative, got {v}")));
                }
                sidecar.noise_std = Some(v);
            }
            "seed" => {
                sidecar.seed = Some(value.parse().map_err(|_| bad(format!("bad seed `{value}`")))?);
            }
            _ => return Err(bad(format!("unknown key `{key}`"))),
        }
    }
    Ok(sidecar)
}

/// Instance from a CSV file plus its sidecar, if present. Noise defaults to 1.
pub fn load_instance(path: &Path) -> Result<LinearBanditInstance> {
    let file = read_instance_csv(fs::File::open(path)?)?;
    let theta = file.theta.ok_or_else(|| {
        Error::invalid(format!("{} has no theta row", path.display()))
    })?;
    if theta.len() != file.arms.dim() {
        return Err(Error::DimensionMismatch {
            expected: file.arms.dim(),
            found: theta.len(),
        });
    }
    let side = sidecar_path(path);
    let noise_std = if side.exists() {
        read_sidecar(&side)?.noise_std.unwrap_or(1.0)
    } else {
        1.0
    };
    LinearBanditInstance::new(file.arms, theta, noise_std)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::gen_hard_instance;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_trip_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let inst = gen_hard_instance(30, 0.3, &mut rng).unwrap();
        let mut buf = Vec::new();
        write_instance_csv(&inst, &mut buf).unwrap();
        let back = read_instance_csv(buf.as_slice()).unwrap();
        assert_eq!(&back.arms, inst.arms());
        assert_eq!(back.theta.as_ref(), Some(inst.theta()));
    }

    #[test]
    fn plain_rows_and_comments() {
        let text = "# two arms\n1, 0\n0.5,0.5\n";
        let f = read_instance_csv(text.as_bytes()).unwrap();
        assert_eq!(f.arms.to_vecs(), vec![vec![1.0, 0.0], vec![0.5, 0.5]]);
        assert!(f.theta.is_none());
    }

    #[test]
    fn malformed_rows_name_the_line() {
        let text = "theta,1,0\narm,1,0\narm,zz,1\n";
        match read_instance_csv(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let ragged = "arm,1,0\narm,1\n";
        assert!(matches!(read_instance_csv(ragged.as_bytes()), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn sidecar_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let csv_path = dir.path().join("inst.csv");
        let side = sidecar_path(&csv_path);
        assert_eq!(side.file_name().unwrap(), "inst.cfg");
        let sc = Sidecar {
            noise_std: Some(10.0),
            seed: Some(42),
        };
        write_sidecar(&side, &sc).unwrap();
        assert_eq!(read_sidecar(&side).unwrap(), sc);

        fs::write(&csv_path, "theta,1,0\narm,1,0\narm,0,1\n").unwrap();
        let inst = load_instance(&csv_path).unwrap();
        assert_eq!(inst.noise_std(), 10.0);
        assert_eq!(inst.best_arm(), 0);
    }

    #[test]
    fn key_values() {
        let kv = parse_key_values("[bench]\n a = 1 # note\n\nB=two\n").unwrap();
        assert_eq!(
            kv,
            vec![(2, "a".into(), "1".into()), (4, "b".into(), "two".into())]
        );
        assert!(parse_key_values("novalue\n").is_err());
    }
}
