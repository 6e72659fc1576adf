use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certificates::{initial_functionals, lambda0_bound, make_cutoffs, InitialOptions};
use crate::error::{Error, Result};
use crate::geometry::{theorem_exponent, GeometryParams, LifespanLaw, Nonlinearity};
use crate::solver::{make_initial_data, run, run_refined, Grid1D, RunOptions};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub params: GeometryParams,
    pub kind: Nonlinearity,
    pub p: f64,
    /// Strictly decreasing amplitudes.
    pub eps_list: Vec<f64>,
    pub ds: f64,
    pub cfl: f64,
    /// Repeat every run at `ds / 2` and extrapolate.
    pub refine: bool,
    pub support_radius: f64,
    /// `t_max` as a multiple of the calibrated law.
    pub t_max_factor: f64,
    /// First horizon tried by the pilot run; doubled until blow-up.
    pub pilot_t_max: f64,
    /// Largest horizon any run may use.
    pub t_max_cap: f64,
    pub threshold: f64,
    /// `lambda_0` for the `C3 > 0` check of derivative-type runs; `None` uses `1.1` times the bound.
    pub lambda0: Option<f64>,
}

impl SweepConfig {
    pub fn new(params: GeometryParams, kind: Nonlinearity, p: f64, eps_list: Vec<f64>) -> Self {
        Self {
            params,
            kind,
            p,
            eps_list,
            ds: 0.02,
            cfl: 0.9,
            refine: true,
            support_radius: 2.0,
            t_max_factor: 4.0,
            pilot_t_max: 32.0,
            t_max_cap: 1e5,
            threshold: 1e10,
            lambda0: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.eps_list.is_empty() {
            return Err(Error::Validation("eps_list must not be empty".into()));
        }
        if !self.eps_list.iter().all(|e| *e > 0.0 && e.is_finite()) {
            return Err(Error::Validation("every epsilon must be positive".into()));
        }
        if !self.eps_list.windows(2).all(|w| w[1] < w[0]) {
            return Err(Error::Validation("eps_list must be strictly decreasing".into()));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::Cfl(self.cfl));
        }
        if !(self.ds > 0.0 && self.support_radius > 0.0) {
            return Err(Error::Validation("ds > 0 and support radius > 0 required".into()));
        }
        if !(self.t_max_factor >= 1.0 && self.pilot_t_max > 0.0 && self.t_max_cap >= self.pilot_t_max) {
            return Err(Error::Validation(
                "t_max factor >= 1 and 0 < pilot t_max <= t_max cap required".into(),
            ));
        }
        self.law().map(|_| ())
    }

    pub fn law(&self) -> Result<LifespanLaw> {
        theorem_exponent(self.params.dim, self.p, self.kind, self.params.potential_vanishes())
    }

    pub fn lambda0(&self) -> f64 {
        self.lambda0.unwrap_or(1.1 * lambda0_bound(self.params.mass, self.p))
    }
}

/// Geometric ladder `eps0 * ratio^k`, `k = 0..count`.
pub fn eps_ladder(eps0: f64, ratio: f64, count: usize) -> Vec<f64> {
    (0..count).map(|k| eps0 * ratio.powi(k as i32)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub epsilon: f64,
    pub t_blow: Option<f64>,
    pub uncertainty: Option<f64>,
    /// `(ds, dt)` of the finest run.
    pub resolution: (f64, f64),
    pub t_max: f64,
    /// Reached `t_max` without blowing up.
    pub censored: bool,
    pub cone_passed: bool,
    /// `C3` per unit amplitude, derivative-type runs only.
    pub c3: Option<f64>,
    pub error: Option<String>,
}

impl SweepRecord {
    /// Usable in a lifespan fit: blew up, cone respected, no error.
    pub fn usable(&self) -> bool {
        self.error.is_none() && !self.censored && self.cone_passed && self.t_blow.is_some()
    }
}

/// Horizon for an amplitude given the law calibrated at the pilot.
fn t_max_for(config: &SweepConfig, law: &LifespanLaw, c: f64, eps: f64) -> f64 {
    let log_t = law.log_lifespan(eps, c) + config.t_max_factor.ln();
    log_t.exp().clamp(config.pilot_t_max, config.t_max_cap)
}

/// Constant `C` with `law(eps; C) = T`.
pub fn calibrate(law: &LifespanLaw, eps: f64, t_blow: f64) -> f64 {
    match *law {
        LifespanLaw::Polynomial { exponent } => t_blow * eps.powf(exponent),
        LifespanLaw::Exponential { exponent } => t_blow.ln() * eps.powf(exponent),
    }
}

fn single_run(config: &SweepConfig, eps: f64, t_max: f64, c3: Option<f64>) -> SweepRecord {
    let mut rec = SweepRecord {
        epsilon: eps,
        t_blow: None,
        uncertainty: None,
        resolution: (config.ds, f64::NAN),
        t_max,
        censored: false,
        cone_passed: false,
        c3,
        error: None,
    };
    let outcome = (|| {
        let grid = Grid1D::for_cone(config.ds, config.cfl, t_max, config.support_radius)?;
        let data = make_initial_data(eps, config.support_radius, None)?;
        let mut opts = RunOptions::new(config.kind, config.p);
        opts.threshold = config.threshold;
        if config.refine {
            run_refined(&config.params, &grid, &data, &opts)
        } else {
            run(&config.params, &grid, &data, &opts)
        }
    })();
    match outcome {
        Ok(res) => {
            rec.t_blow = res.t_blow;
            rec.uncertainty = res.uncertainty;
            rec.resolution = res.resolution;
            rec.censored = !res.blew_up;
            rec.cone_passed = res.cone.is_some_and(|c| c.passed());
        }
        Err(e) => rec.error = Some(e.to_string()),
    }
    rec
}

/// `C3` per unit amplitude for the sweep's data at its `lambda_0`.
pub fn sweep_c3(config: &SweepConfig) -> Result<f64> {
    let data = make_initial_data(1.0, config.support_radius, None)?;
    let cut = make_cutoffs(36.0 * config.support_radius, config.p)?;
    let opts = InitialOptions::new(config.p);
    let [_, _, c3] = initial_functionals(&config.params, &data, config.lambda0(), &cut, &opts)?;
    Ok(c3.value)
}

fn read_records(path: &Path) -> Result<BTreeMap<u64, SweepRecord>> {
    let mut out = BTreeMap::new();
    if !path.exists() {
        return Ok(out);
    }
    for (i, line) in BufReader::new(File::open(path)?).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: SweepRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            location: format!("{}:{}", path.display(), i + 1),
            message: e.to_string(),
        })?;
        out.insert(rec.epsilon.to_bits(), rec);
    }
    Ok(out)
}

fn append_record(path: &Path, rec: &SweepRecord) -> Result<()> {
    let mut line = serde_json::to_string(rec)?;
    line.push('\n');
    let mut f = OpenOptions::new().create(true).append(true).open(path)?;
    f.write_all(line.as_bytes())?;
    Ok(())
}

/// Runs one blow-up simulation per amplitude, largest first as the calibration pilot.
///
/// With `store`, every finished record is appended as one JSON line and records
/// already present for an amplitude are reused. Per-run failures become records
/// with `error` set. Derivative-type sweeps first require `C3 > 0`.
pub fn run_sweep(config: &SweepConfig, store: Option<&Path>) -> Result<Vec<SweepRecord>> {
    config.validate()?;
    let law = config.law()?;
    let c3 = match config.kind {
        Nonlinearity::DerivativePower => {
            let c3 = sweep_c3(config)?;
            if !(c3 > 0.0) {
                return Err(Error::Certificate(format!(
                    "C3 = {c3} is not positive at lambda_0 = {}",
                    config.lambda0()
                )));
            }
            Some(c3)
        }
        Nonlinearity::Power => None,
    };
    let mut done = match store {
        Some(p) => read_records(p)?,
        None => BTreeMap::new(),
    };
    let persist = |rec: &SweepRecord| -> Result<()> {
        match store {
            Some(p) => append_record(p, rec),
            None => Ok(()),
        }
    };

    let eps0 = config.eps_list[0];
    let pilot = match done.get(&eps0.to_bits()) {
        Some(r) => r.clone(),
        None => {
            let mut t_max = config.pilot_t_max;
            let rec = loop {
                let rec = single_run(config, eps0, t_max, c3);
                if !rec.censored || rec.error.is_some() || t_max >= config.t_max_cap {
                    break rec;
                }
                t_max = (2.0 * t_max).min(config.t_max_cap);
            };
            persist(&rec)?;
            done.insert(eps0.to_bits(), rec.clone());
            rec
        }
    };
    let c = match (pilot.usable(), pilot.t_blow) {
        (true, Some(t)) => calibrate(&law, eps0, t),
        _ => {
            return Err(Error::PilotCensored {
                epsilon: eps0,
                t_max: pilot.t_max,
            })
        }
    };

    let todo: Vec<f64> = config.eps_list[1..]
        .iter()
        .copied()
        .filter(|e| !done.contains_key(&e.to_bits()))
        .collect();
    let store_lock = std::sync::Mutex::new(());
    let fresh: Vec<Result<SweepRecord>> = todo
        .par_iter()
        .map(|&eps| {
            let rec = single_run(config, eps, t_max_for(config, &law, c, eps), c3);
            let _guard = store_lock.lock().unwrap_or_else(|e| e.into_inner());
            persist(&rec)?;
            Ok(rec)
        })
        .collect();
    for rec in fresh {
        let rec = rec?;
        done.insert(rec.epsilon.to_bits(), rec);
    }
    Ok(config
        .eps_list
        .iter()
        .filter_map(|e| done.get(&e.to_bits()).cloned())
        .collect())
}
