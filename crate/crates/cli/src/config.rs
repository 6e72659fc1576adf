//! Plain-text run configuration: `key = value` lines grouped under optional
//! `[section]` headers, `#` comments. Keys may appear before any header.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use bhwave_core::geometry::{critical_exponents, theorem_exponent};
use bhwave_core::{Error, GeometryParams, Nonlinearity, Result};
use serde::{Deserialize, Serialize};

/// Every accepted key with its section, default and meaning.
pub const KEYS: &[(&str, &str, &str, &str)] = &[
    ("geometry", "n", "3", "spatial dimension"),
    ("geometry", "M", "1", "black-hole mass"),
    ("geometry", "mu1", "0", "damping strength, D = mu1 r^-beta"),
    ("geometry", "beta", "2", "damping decay exponent (> 1)"),
    ("geometry", "mu2", "0", "potential strength, V = mu2 r^-gamma"),
    ("geometry", "gamma", "3", "potential decay exponent (> 2)"),
    ("equation", "p", "2", "nonlinearity power"),
    ("equation", "kind", "u", "nonlinearity |u|^p (u) or |u_t|^p (ut)"),
    ("equation", "eps", "0.5", "data amplitude for solve"),
    ("grid", "R", "2", "data support radius in s"),
    ("grid", "ds", "0.02", "tortoise spacing"),
    ("grid", "cfl", "0.9", "dt / ds, at most 1"),
    ("grid", "t_max", "64", "final time for solve"),
    ("grid", "threshold", "1e10", "blow-up amplitude"),
    ("grid", "output_stride", "0", "steps between diagnostics (0: automatic)"),
    ("grid", "refine", "true", "repeat at ds/2 and extrapolate T_blow"),
    ("sweep", "eps0", "0.5", "largest amplitude"),
    ("sweep", "ratio", "0.5", "ladder ratio"),
    ("sweep", "count", "8", "number of amplitudes"),
    ("sweep", "t_max_factor", "4", "horizon as a multiple of the calibrated law"),
    ("sweep", "pilot_t_max", "32", "first horizon of the pilot run"),
    ("sweep", "t_max_cap", "100000", "largest horizon of any run"),
    ("sweep", "lambda0", "0", "lambda_0 for the C3 check (0: 1.1 x 4/(M p (p-1)))"),
    ("sweep", "slack", "0.2", "relative slack of the theorem comparison"),
    ("sweep", "tolerance", "0.15", "allowed excess of the fitted exponent"),
    ("output", "out_dir", "out", "output directory (env BHWAVE_OUT_DIR overrides)"),
    ("output", "verbosity", "0", "0 quiet, 1 progress, 2 debug"),
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridPolicy {
    pub support_radius: f64,
    pub ds: f64,
    pub cfl: f64,
    pub t_max: f64,
    pub threshold: f64,
    pub output_stride: Option<usize>,
    pub refine: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPolicy {
    pub eps0: f64,
    pub ratio: f64,
    pub count: usize,
    pub t_max_factor: f64,
    pub pilot_t_max: f64,
    pub t_max_cap: f64,
    pub lambda0: Option<f64>,
    pub slack: f64,
    pub tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Config {
    pub geometry: GeometryParams,
    pub p: f64,
    pub kind: Nonlinearity,
    pub eps: f64,
    pub grid: GridPolicy,
    pub sweep: SweepPolicy,
    pub out_dir: PathBuf,
    pub verbosity: u8,
}

/// Raw `key -> (value, origin)` assignments before typing.
#[derive(Clone, Debug, Default)]
pub struct Assignments {
    values: BTreeMap<String, (String, String)>,
}

fn section_of(key: &str) -> Option<&'static str> {
    KEYS.iter().find(|k| k.1 == key).map(|k| k.0)
}

impl Assignments {
    /// Parses a config file body; `origin` names the file in error locations.
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut out = Self::default();
        let mut section: Option<String> = None;
        for (i, raw) in text.lines().enumerate() {
            let location = format!("{origin}:{}", i + 1);
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| Error::Parse {
                    location: location.clone(),
                    message: format!("unterminated section header {line:?}"),
                })?;
                let name = name.trim();
                if !KEYS.iter().any(|k| k.0 == name) {
                    return Err(Error::Parse {
                        location,
                        message: format!("unknown section [{name}]"),
                    });
                }
                section = Some(name.to_string());
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                location: location.clone(),
                message: format!("expected `key = value`, found {line:?}"),
            })?;
            out.set(key.trim(), value.trim(), &location, section.as_deref())?;
        }
        Ok(out)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Records one assignment; later calls override earlier ones.
    pub fn set(&mut self, key: &str, value: &str, origin: &str, section: Option<&str>) -> Result<()> {
        let owner = section_of(key).ok_or_else(|| Error::Parse {
            location: origin.to_string(),
            message: format!("unknown key {key:?}"),
        })?;
        if let Some(s) = section {
            if s != owner {
                return Err(Error::Parse {
                    location: origin.to_string(),
                    message: format!("key {key:?} belongs to [{owner}], not [{s}]"),
                });
            }
        }
        if value.is_empty() {
            return Err(Error::Parse {
                location: origin.to_string(),
                message: format!("empty value for {key:?}"),
            });
        }
        self.values.insert(key.to_string(), (value.to_string(), origin.to_string()));
        Ok(())
    }

    fn raw(&self, key: &str) -> (String, String) {
        self.values.get(key).cloned().unwrap_or_else(|| {
            let default = KEYS.iter().find(|k| k.1 == key).map_or("", |k| k.2);
            (default.to_string(), "default".to_string())
        })
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        let (value, origin) = self.raw(key);
        value.parse::<T>().map_err(|e| Error::Parse {
            location: origin,
            message: format!("{key} = {value:?}: {e}"),
        })
    }

    /// Types and validates the assignments; `env_out_dir` overrides the file's
    /// `out_dir` unless it was given as a flag.
    pub fn resolve(&self, env_out_dir: Option<&str>) -> Result<Config> {
        let geometry = GeometryParams {
            dim: self.get("n")?,
            mass: self.get("M")?,
            mu1: self.get("mu1")?,
            beta: self.get("beta")?,
            mu2: self.get("mu2")?,
            gamma: self.get("gamma")?,
        };
        let stride: usize = self.get("output_stride")?;
        let lambda0: f64 = self.get("lambda0")?;
        let (dir, origin) = self.raw("out_dir");
        let out_dir = match env_out_dir {
            Some(env) if !origin.starts_with("flag") && !env.is_empty() => PathBuf::from(env),
            _ => PathBuf::from(dir),
        };
        let config = Config {
            geometry,
            p: self.get("p")?,
            kind: self.get("kind")?,
            eps: self.get("eps")?,
            grid: GridPolicy {
                support_radius: self.get("R")?,
                ds: self.get("ds")?,
                cfl: self.get("cfl")?,
                t_max: self.get("t_max")?,
                threshold: self.get("threshold")?,
                output_stride: (stride > 0).then_some(stride),
                refine: self.get("refine")?,
            },
            sweep: SweepPolicy {
                eps0: self.get("eps0")?,
                ratio: self.get("ratio")?,
                count: self.get("count")?,
                t_max_factor: self.get("t_max_factor")?,
                pilot_t_max: self.get("pilot_t_max")?,
                t_max_cap: self.get("t_max_cap")?,
                lambda0: (lambda0 > 0.0).then_some(lambda0),
                slack: self.get("slack")?,
                tolerance: self.get("tolerance")?,
            },
            out_dir,
            verbosity: self.get("verbosity")?,
        };
        config.validate()?;
        Ok(config)
    }
}

impl Config {
    /// Re-checks every module-level invariant.
    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        critical_exponents(self.geometry.dim)?;
        if !(self.p > 1.0) {
            return Err(Error::Validation(format!("p > 1 required (got {})", self.p)));
        }
        theorem_exponent(self.geometry.dim, self.p, self.kind, self.geometry.potential_vanishes())
            .map_err(|e| Error::Validation(e.to_string()))?;
        if !(self.grid.cfl > 0.0 && self.grid.cfl <= 1.0) {
            return Err(Error::Cfl(self.grid.cfl));
        }
        let positive = [
            ("eps", self.eps),
            ("R", self.grid.support_radius),
            ("ds", self.grid.ds),
            ("t_max", self.grid.t_max),
            ("threshold", self.grid.threshold),
            ("eps0", self.sweep.eps0),
            ("pilot_t_max", self.sweep.pilot_t_max),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Validation(format!("{name} > 0 required (got {v})")));
            }
        }
        if !(self.sweep.ratio > 0.0 && self.sweep.ratio < 1.0) {
            return Err(Error::Validation(format!("0 < ratio < 1 required (got {})", self.sweep.ratio)));
        }
        if self.sweep.count == 0 {
            return Err(Error::Validation("count >= 1 required".into()));
        }
        if !(self.sweep.t_max_factor >= 1.0) {
            return Err(Error::Validation(format!("t_max_factor >= 1 required (got {})", self.sweep.t_max_factor)));
        }
        if !(self.sweep.t_max_cap >= self.sweep.pilot_t_max) {
            return Err(Error::Validation("t_max_cap >= pilot_t_max required".into()));
        }
        if !(self.sweep.slack >= 0.0 && self.sweep.tolerance >= 0.0) {
            return Err(Error::Validation("slack and tolerance must be nonnegative".into()));
        }
        Ok(())
    }

    /// Defaults for every key.
    pub fn defaults() -> Self {
        Assignments::default().resolve(None).expect("defaults are valid")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).unwrap_or_default()
    }
}

/// Key listing for `--help`.
pub fn key_help() -> String {
    let mut out = String::from("Config keys ([section] key = default: meaning):\n");
    for (section, key, default, meaning) in KEYS {
        out.push_str(&format!("  [{section}] {key} = {default}: {meaning}\n"));
    }
    out
}
