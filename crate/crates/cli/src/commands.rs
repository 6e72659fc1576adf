//! Subcommand bodies. Each writes machine-readable artifacts under the output
//! directory (full precision, resolved config embedded) and a short rounded
//! summary to stdout.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use bhwave_core::certificates::{certificate_suite, SuiteOptions};
use bhwave_core::experiments::{compare_theorem, eps_ladder, fit_lifespan, run_sweep, LawKind, SweepConfig, SweepRecord};
use bhwave_core::geometry::{critical_exponents, rw_potential_at, theorem_exponent, RadialPoint};
use bhwave_core::solver::{make_initial_data, run, run_refined, Grid1D, RunOptions};
use bhwave_core::testfuncs::{
    build_ba, phi_start_point, psi_lambda, solve_phi_lambda, solve_psi0, verify_ba_bounds, BaOptions, PhiOptions,
    Psi0Options, SchwarzschildPsi,
};
use bhwave_core::{geometry, Error, Result, Schwarzschild};
use serde::Serialize;

use crate::config::Config;

/// Exit status of a finished command: 0 success, 2 certificate failure.
pub type Status = i32;

fn out_path(config: &Config, name: &str) -> Result<PathBuf> {
    fs::create_dir_all(&config.out_dir)?;
    Ok(config.out_dir.join(name))
}

#[derive(Serialize)]
struct Artifact<'a, T: Serialize> {
    config: &'a Config,
    result: &'a T,
}

fn write_json<T: Serialize>(path: &Path, config: &Config, result: &T) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut f, &Artifact { config, result })?;
    writeln!(f)?;
    Ok(())
}

fn csv_header(out: &mut impl Write, config: &Config) -> std::io::Result<()> {
    writeln!(out, "# config: {}", config.to_json())
}

fn progress(config: &Config, msg: impl AsRef<str>) {
    if config.verbosity > 0 {
        eprintln!("{}", msg.as_ref());
    }
}

/// `r, s, F, Q, J, D, V` on radii log-spaced in `r - 2M`.
pub fn geometry_probe(config: &Config, r_min: Option<f64>, r_max: f64, points: usize, out: &mut impl Write) -> Result<Status> {
    let g = &config.geometry;
    let r_min = r_min.unwrap_or(g.horizon() * (1.0 + 1e-3));
    if !(r_min > g.horizon() && r_max > r_min && points >= 2) {
        return Err(Error::Validation(format!(
            "need 2M < r_min < r_max and at least two points (got r_min = {r_min}, r_max = {r_max}, points = {points})"
        )));
    }
    csv_header(out, config)?;
    writeln!(out, "r,s,F,Q,J,D,V")?;
    let (lo, hi) = ((r_min - g.horizon()).ln(), (r_max - g.horizon()).ln());
    for i in 0..points {
        let x = lo + (hi - lo) * i as f64 / (points - 1) as f64;
        let pt = RadialPoint::from_r(g, g.horizon() + x.exp())?;
        let (d, v) = geometry::profiles(g, pt.r)?;
        let j = pt.r.powf(-g.half_dim());
        writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            pt.r,
            pt.s,
            pt.lapse,
            rw_potential_at(g, &pt),
            j,
            d,
            v
        )?;
    }
    Ok(0)
}

#[derive(Serialize)]
struct ExponentReport {
    strauss: f64,
    glassey: f64,
    law: Option<geometry::LifespanLaw>,
    law_error: Option<String>,
}

pub fn geometry_exponents(config: &Config, out: &mut impl Write) -> Result<Status> {
    let c = critical_exponents(config.geometry.dim)?;
    let law = theorem_exponent(config.geometry.dim, config.p, config.kind, config.geometry.potential_vanishes());
    let report = ExponentReport {
        strauss: c.strauss,
        glassey: c.glassey,
        law: law.as_ref().ok().copied(),
        law_error: law.err().map(|e| e.to_string()),
    };
    serde_json::to_writer_pretty(&mut *out, &Artifact { config, result: &report })?;
    writeln!(out)?;
    Ok(0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TestFn {
    Phi,
    Psi,
    Psi0,
    Ba,
}

#[derive(Clone, Debug)]
pub struct TestFnArgs {
    pub which: TestFn,
    pub lambda: f64,
    pub s_min: f64,
    pub s_max: f64,
    pub r_max: f64,
    pub a: f64,
    pub t_list: Vec<f64>,
    pub s_points: usize,
}

/// Tabulates one test function as CSV and its certificate as JSON.
pub fn testfn(config: &Config, args: &TestFnArgs) -> Result<Status> {
    let g = &config.geometry;
    let bg = Schwarzschild::new(*g);
    let (stem, table, report): (String, Option<bhwave_core::TestFunction>, serde_json::Value) = match args.which {
        TestFn::Phi | TestFn::Psi => {
            let start = phi_start_point(&bg, args.lambda, 1e-12).min(args.s_min);
            let opts = PhiOptions {
                band_window: Some((args.s_min, args.s_max)),
                ..PhiOptions::default()
            };
            let phi = solve_phi_lambda(&bg, args.lambda, start, args.s_max, &opts)?;
            if args.which == TestFn::Phi {
                let report = serde_json::json!({ "lambda": args.lambda, "band": phi.band, "s_start": start });
                (format!("phi_lambda_{}", args.lambda), Some(phi), report)
            } else {
                let (psi, zero_v) = psi_lambda(&bg, args.lambda, &phi)?;
                let min_dr = psi.dvalues.iter().copied().fold(f64::INFINITY, f64::min);
                let report = serde_json::json!({
                    "lambda": args.lambda,
                    "band": psi.band,
                    "derivative_constant": psi.derivative_constant,
                    "zero_potential_constant": zero_v,
                    "min_normalized_dr": min_dr,
                });
                (format!("psi_lambda_{}", args.lambda), Some(psi), report)
            }
        }
        TestFn::Psi0 => {
            let psi0 = solve_psi0(g, args.r_max, &Psi0Options::default())?;
            let report = serde_json::json!({ "band": psi0.band, "derivative_constant": psi0.derivative_constant });
            ("psi0".to_string(), Some(psi0), report)
        }
        TestFn::Ba => {
            if args.t_list.is_empty() || args.s_points < 2 {
                return Err(Error::Validation("b_a needs a nonempty t list and at least two s points".into()));
            }
            let t_max = args.t_list.iter().copied().fold(f64::MIN, f64::max);
            let split = g.regime_split();
            let hi = t_max + config.grid.support_radius;
            let s: Vec<f64> = (0..args.s_points)
                .map(|i| split + (hi - split) * i as f64 / (args.s_points - 1) as f64)
                .collect();
            let family = SchwarzschildPsi::new(bg);
            let table = build_ba(&family, args.a, config.grid.support_radius, &args.t_list, &s, &BaOptions::default())?;
            let cert = verify_ba_bounds(&table, g)?;
            let path = out_path(config, &format!("b_a_{}.csv", args.a))?;
            let mut f = BufWriter::new(File::create(&path)?);
            csv_header(&mut f, config)?;
            writeln!(f, "t,s,value,dt_value,dr_value")?;
            for (i, t) in table.t_grid.iter().enumerate() {
                for (j, sv) in table.s_grid.iter().enumerate() {
                    writeln!(
                        f,
                        "{t:.16e},{sv:.16e},{:.16e},{:.16e},{:.16e}",
                        table.values[i][j], table.dt_values[i][j], table.dr_values[i][j]
                    )?;
                }
            }
            f.flush()?;
            let report = serde_json::json!({ "certificate": cert, "order": table.order, "quadrature_error": table.quadrature_error });
            (format!("b_a_{}", args.a), None, report)
        }
    };
    if let Some(table) = table {
        let path = out_path(config, &format!("{stem}.csv"))?;
        let mut f = BufWriter::new(File::create(&path)?);
        csv_header(&mut f, config)?;
        table.write_csv(&mut f)?;
        f.flush()?;
    }
    let json = out_path(config, &format!("{stem}.json"))?;
    write_json(&json, config, &report)?;
    println!("{stem}: {}", serde_json::to_string(&report)?);
    Ok(0)
}

/// One blow-up run at `config.eps`; refined when `grid.refine` is set.
pub fn solve(config: &Config) -> Result<Status> {
    let grid = Grid1D::for_cone(config.grid.ds, config.grid.cfl, config.grid.t_max, config.grid.support_radius)?;
    let data = make_initial_data(config.eps, config.grid.support_radius, None)?;
    let mut opts = RunOptions::new(config.kind, config.p);
    opts.threshold = config.grid.threshold;
    opts.output_stride = config.grid.output_stride;
    progress(config, format!("solving on {} nodes, {} steps", grid.len(), grid.steps));
    let res = if config.grid.refine {
        run_refined(&config.geometry, &grid, &data, &opts)?
    } else {
        run(&config.geometry, &grid, &data, &opts)?
    };
    write_json(&out_path(config, "solve.json")?, config, &res)?;
    let mut f = BufWriter::new(File::create(out_path(config, "diagnostics.csv")?)?);
    csv_header(&mut f, config)?;
    writeln!(f, "t,max_amp,energy,support")?;
    for row in &res.diagnostics {
        writeln!(f, "{:.16e},{:.16e},{:.16e},{:.16e}", row.t, row.max_amp, row.energy, row.support)?;
    }
    f.flush()?;
    match res.t_blow {
        Some(t) => println!(
            "blow-up at T = {t:.6} +- {:.6} (ds = {:.6}, dt = {:.6}{})",
            res.uncertainty.unwrap_or(0.0),
            res.resolution.0,
            res.resolution.1,
            if res.nan_triggered { ", non-finite" } else { "" }
        ),
        None => println!("no blow-up before t = {:.6}", res.t_end),
    }
    res.ensure_cone()?;
    Ok(0)
}

pub fn sweep_config(config: &Config) -> SweepConfig {
    let s = &config.sweep;
    let mut sc = SweepConfig::new(config.geometry, config.kind, config.p, eps_ladder(s.eps0, s.ratio, s.count));
    sc.ds = config.grid.ds;
    sc.cfl = config.grid.cfl;
    sc.refine = config.grid.refine;
    sc.support_radius = config.grid.support_radius;
    sc.t_max_factor = s.t_max_factor;
    sc.pilot_t_max = s.pilot_t_max;
    sc.t_max_cap = s.t_max_cap;
    sc.threshold = config.grid.threshold;
    sc.lambda0 = s.lambda0;
    sc
}

pub fn records_path(config: &Config) -> PathBuf {
    config.out_dir.join("records.jsonl")
}

/// Amplitude sweep: records as JSON lines (resumable), summary CSV and a
/// two-column `eps T` file for log-log plots.
pub fn sweep(config: &Config, fresh: bool) -> Result<Status> {
    let sc = sweep_config(config);
    let store = out_path(config, "records.jsonl")?;
    if fresh && store.exists() {
        fs::remove_file(&store)?;
    }
    progress(config, format!("sweeping {} amplitudes", sc.eps_list.len()));
    let records = run_sweep(&sc, Some(&store))?;
    write_json(&out_path(config, "sweep.json")?, config, &sc)?;
    let mut f = BufWriter::new(File::create(out_path(config, "summary.csv")?)?);
    csv_header(&mut f, config)?;
    writeln!(f, "epsilon,T_blow,uncertainty,censored,cone_passed")?;
    let mut plot = BufWriter::new(File::create(out_path(config, "lifespan.dat")?)?);
    writeln!(plot, "# epsilon T_blow (usable records)")?;
    for r in &records {
        writeln!(
            f,
            "{:.16e},{},{},{},{}",
            r.epsilon,
            r.t_blow.map_or("nan".into(), |t| format!("{t:.16e}")),
            r.uncertainty.map_or("nan".into(), |t| format!("{t:.16e}")),
            r.censored,
            r.cone_passed
        )?;
        if let (true, Some(t)) = (r.usable(), r.t_blow) {
            writeln!(plot, "{:.16e} {t:.16e}", r.epsilon)?;
        }
        let status = match (&r.error, r.censored, r.cone_passed) {
            (Some(e), _, _) => format!("error: {e}"),
            (None, true, _) => "censored".to_string(),
            (None, false, false) => "cone violation (excluded)".to_string(),
            _ => format!("T = {:.6}", r.t_blow.unwrap_or(f64::NAN)),
        };
        println!("eps = {:.6e}: {status}", r.epsilon);
    }
    f.flush()?;
    plot.flush()?;
    Ok(0)
}

pub fn read_records(path: &Path) -> Result<Vec<SweepRecord>> {
    let text = fs::read_to_string(path)?;
    let mut out: Vec<SweepRecord> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: SweepRecord = serde_json::from_str(line).map_err(|e| Error::Parse {
            location: format!("{}:{}", path.display(), i + 1),
            message: e.to_string(),
        })?;
        out.retain(|r| r.epsilon != rec.epsilon);
        out.push(rec);
    }
    out.sort_by(|a, b| b.epsilon.total_cmp(&a.epsilon));
    Ok(out)
}

#[derive(Serialize)]
struct FitReport {
    fit: bhwave_core::FitResult,
    verdict: bhwave_core::Verdict,
}

/// Fits the lifespan law to stored records and compares with the theorem.
pub fn fit(config: &Config, records: Option<&Path>, law: Option<LawKind>) -> Result<Status> {
    let path = records.map(Path::to_path_buf).unwrap_or_else(|| records_path(config));
    let recs = read_records(&path)?;
    let theory = theorem_exponent(config.geometry.dim, config.p, config.kind, config.geometry.potential_vanishes())?;
    let kind = law.unwrap_or(LawKind::of(&theory));
    let fit = fit_lifespan(&recs, kind, Some(theory), config.sweep.tolerance)?;
    let verdict = compare_theorem(&recs, theory, config.sweep.slack)?;
    for eps in &fit.excluded {
        eprintln!("warning: record eps = {eps:e} excluded (censored, cone violation or error)");
    }
    println!(
        "{:?} fit: exponent {:.6} +- {:.6}, R^2 {:.6}; theorem {:.6}; consistent: {}; bound check: {}",
        fit.law,
        fit.exponent,
        fit.exponent_se,
        fit.r_squared,
        theory.exponent(),
        fit.consistent.map_or("n/a".to_string(), |c| c.to_string()),
        if verdict.pass { "PASS" } else { "FAIL" }
    );
    for eps in &verdict.failures {
        println!("  exceeds calibrated bound at eps = {eps:e}");
    }
    write_json(&out_path(config, "fit.json")?, config, &FitReport { fit, verdict })?;
    Ok(0)
}

/// Full certificate suite; status 2 when any check fails.
pub fn verify(config: &Config) -> Result<Status> {
    let opts = SuiteOptions {
        lambda0: config.sweep.lambda0,
        support_radius: config.grid.support_radius,
        ..SuiteOptions::default()
    };
    let report = certificate_suite(&config.geometry, config.p, config.kind, &opts)?;
    write_json(&out_path(config, "verify.json")?, config, &report)?;
    for c in &report.checks {
        println!(
            "{} {}: {:.6e} (bound {:.6e})",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.bound
        );
    }
    Ok(if report.passed { 0 } else { 2 })
}
