use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rand::Rng;

use crate::bandit::LinearBanditInstance;
use crate::error::{Error, Result};

use super::{
    gen_hard_instance, gen_mab_embedding, gen_sphere_instance, load_abalone, load_instance,
    AbaloneOptions, DEFAULT_PHI_STD,
};

/// Where an instance comes from, written `kind:key=value;key=value`.
///
/// ```text
/// dataset1:K=50;phi_std=0.3;sigma=1
/// sphere:d=3;c=2;sigma=1
/// mab:means=0.9/0.5;pad=5;sigma=1
/// abalone:data/abalone.data;top_n=400;sigma=10
/// file:instances/foo.csv        (or just the path)
/// ```
#[derive(Debug, Clone, PartialEq)]
pub enum InstanceSpec {
    Dataset1 {
        num_arms: usize,
        phi_std: f64,
        noise_std: f64,
    },
    Sphere {
        dim: usize,
        c: usize,
        noise_std: f64,
    },
    Mab {
        means: Vec<f64>,
        pad_to: Option<usize>,
        noise_std: f64,
    },
    Abalone {
        path: PathBuf,
        top_n: usize,
        noise_std: f64,
    },
    File {
        path: PathBuf,
    },
}

impl InstanceSpec {
    /// Random generators give a fresh instance per draw.
    pub fn is_random(&self) -> bool {
        matches!(self, InstanceSpec::Dataset1 { .. } | InstanceSpec::Sphere { .. })
    }

    pub fn build<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<LinearBanditInstance> {
        match self {
            InstanceSpec::Dataset1 {
                num_arms,
                phi_std,
                noise_std,
            } => gen_hard_instance(*num_arms, *phi_std, rng)?.with_noise_std(*noise_std),
            InstanceSpec::Sphere { dim, c, noise_std } => {
                gen_sphere_instance(*dim, *c, rng)?.with_noise_std(*noise_std)
            }
            InstanceSpec::Mab {
                means,
                pad_to,
                noise_std,
            } => gen_mab_embedding(means, *pad_to)?.with_noise_std(*noise_std),
            InstanceSpec::Abalone {
                path,
                top_n,
                noise_std,
            } => load_abalone(
                path,
                &AbaloneOptions {
                    top_n: *top_n,
                    noise_std: *noise_std,
                    ..AbaloneOptions::default()
                },
            ),
            InstanceSpec::File { path } => load_instance(path),
        }
    }
}

type Pair = (String, String);

fn number<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::invalid(format!("bad value `{value}` for `{key}`")))
}

impl FromStr for InstanceSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let Some((kind, rest)) = s.split_once(':') else {
            return match s {
                "dataset1" | "sphere" | "mab" | "abalone" => {
                    Err(Error::invalid(format!("`{s}` needs parameters, e.g. `{s}:...`")))
                }
                _ => Ok(InstanceSpec::File { path: s.into() }),
            };
        };
        let mut parts = rest.split(';').map(str::trim).filter(|p| !p.is_empty());
        let kind = kind.to_ascii_lowercase();
        let path_kind = matches!(kind.as_str(), "abalone" | "file");
        let path = if path_kind { parts.next().map(PathBuf::from) } else { None };
        let mut pairs = Vec::new();
        for part in parts {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::invalid(format!("expected `key=value`, found `{part}`")))?;
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }
        let mut take = |names: &[&str]| -> Option<Pair> {
            let pos = pairs.iter().position(|(k, _)| names.contains(&k.as_str()))?;
            Some(pairs.remove(pos))
        };

        let sigma = |t: &mut dyn FnMut(&[&str]) -> Option<Pair>, default: f64| {
            t(&["sigma", "noise", "noise_std"])
                .map(|(k, v)| number::<f64>(&k, &v))
                .unwrap_or(Ok(default))
        };

        let spec = match kind.as_str() {
            "dataset1" => {
                let (k, v) = take(&["K", "k"])
                    .ok_or_else(|| Error::invalid("dataset1 needs K"))?;
                let num_arms = number(&k, &v)?;
                let phi_std = match take(&["phi_std"]) {
                    Some((k, v)) => number(&k, &v)?,
                    None => DEFAULT_PHI_STD,
                };
                InstanceSpec::Dataset1 {
                    num_arms,
                    phi_std,
                    noise_std: sigma(&mut take, 1.0)?,
                }
            }
            "sphere" => {
                let (dk, dv) = take(&["d"]).ok_or_else(|| Error::invalid("sphere needs d"))?;
                let (ck, cv) = take(&["c"]).ok_or_else(|| Error::invalid("sphere needs c"))?;
                InstanceSpec::Sphere {
                    dim: number(&dk, &dv)?,
                    c: number(&ck, &cv)?,
                    noise_std: sigma(&mut take, 1.0)?,
                }
            }
            "mab" => {
                let (_, v) = take(&["means"]).ok_or_else(|| Error::invalid("mab needs means"))?;
                let means = v
                    .split('/')
                    .map(|m| number::<f64>("means", m.trim()))
                    .collect::<Result<Vec<_>>>()?;
                let pad_to = match take(&["pad", "pad_to"]) {
                    Some((k, v)) => Some(number(&k, &v)?),
                    None => None,
                };
                InstanceSpec::Mab {
                    means,
                    pad_to,
                    noise_std: sigma(&mut take, 1.0)?,
                }
            }
            "abalone" => {
                let path = path.ok_or_else(|| Error::invalid("abalone needs a data path"))?;
                let top_n = match take(&["top_n"]) {
                    Some((k, v)) => number(&k, &v)?,
                    None => AbaloneOptions::default().top_n,
                };
                InstanceSpec::Abalone {
                    path,
                    top_n,
                    noise_std: sigma(&mut take, AbaloneOptions::default().noise_std)?,
                }
            }
            "file" => InstanceSpec::File {
                path: path.ok_or_else(|| Error::invalid("file needs a path"))?,
            },
            _ => return Ok(InstanceSpec::File { path: s.into() }),
        };
        if let Some((k, _)) = pairs.first() {
            return Err(Error::invalid(format!("unknown parameter `{k}` for {kind}")));
        }
        Ok(spec)
    }
}

impl fmt::Display for InstanceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InstanceSpec::Dataset1 {
                num_arms,
                phi_std,
                noise_std,
            } => write!(f, "dataset1:K={num_arms};phi_std={phi_std};sigma={noise_std}"),
            InstanceSpec::Sphere { dim, c, noise_std } => {
                write!(f, "sphere:d={dim};c={c};sigma={noise_std}")
            }
            InstanceSpec::Mab {
                means,
                pad_to,
                noise_std,
            } => {
                let joined: Vec<String> = means.iter().map(|m| m.to_string()).collect();
                write!(f, "mab:means={}", joined.join("/"))?;
                if let Some(p) = pad_to {
                    write!(f, ";pad={p}")?;
                }
                write!(f, ";sigma={noise_std}")
            }
            InstanceSpec::Abalone {
                path,
                top_n,
                noise_std,
            } => write!(f, "abalone:{};top_n={top_n};sigma={noise_std}", path.display()),
            InstanceSpec::File { path } => write!(f, "file:{}", path.display()),
        }
    }
}
