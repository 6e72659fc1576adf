use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{GeometryParams, Nonlinearity};

use super::grid::{schwarzschild_tables, Grid1D, InitialData, Tables};

/// Right-hand side of the reduced equation at one node.
///
/// `fj` is the precomputed `F J^{p-1}`; returns `fj |v|^p` or `fj |v_t|^p`.
#[inline]
pub fn rhs_nonlinearity(kind: Nonlinearity, p: f64, fj: f64, v: f64, vt: f64) -> f64 {
    let x = match kind {
        Nonlinearity::Power => v,
        Nonlinearity::DerivativePower => vt,
    };
    if x == 0.0 {
        0.0
    } else {
        fj * x.abs().powf(p)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotOptions {
    /// Steps between stored slices; `max(1, floor(t_max / (512 dt)))` when `None`.
    pub time_stride: Option<usize>,
    pub space_stride: usize,
    /// Stored tortoise window; the whole mesh when `None`.
    pub window: Option<(f64, f64)>,
}

impl Default for SnapshotOptions {
    fn default() -> Self {
        Self {
            time_stride: None,
            space_stride: 1,
            window: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    pub kind: Nonlinearity,
    pub p: f64,
    /// Blow-up is declared once `max |v|` reaches this.
    pub threshold: f64,
    /// Steps between diagnostic rows; `max(1, floor(t_max / (512 dt)))` when `None`.
    pub output_stride: Option<usize>,
    /// Relative amplitude below which a node counts as outside the support.
    pub support_tol: f64,
    pub snapshots: Option<SnapshotOptions>,
}

impl RunOptions {
    pub fn new(kind: Nonlinearity, p: f64) -> Self {
        Self {
            kind,
            p,
            threshold: 1e10,
            output_stride: None,
            support_tol: 1e-12,
            snapshots: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticRow {
    pub t: f64,
    pub max_amp: f64,
    /// Discrete energy of the linear part between this level and the previous one.
    pub energy: f64,
    pub support: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeViolation {
    pub t: f64,
    pub extent: f64,
    pub bound: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeCheck {
    pub checked: usize,
    /// Largest `extent - bound` seen; negative when the support stayed inside.
    pub worst_margin: f64,
    pub first_violation: Option<ConeViolation>,
}

impl ConeCheck {
    pub fn passed(&self) -> bool {
        self.first_violation.is_none()
    }
}

/// Stored slices of `v` and the centred `v_t` on a sub-sampled window.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct SolutionHistory {
    pub times: Vec<f64>,
    pub s: Vec<f64>,
    pub v: Vec<Vec<f64>>,
    pub vt: Vec<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Refinement {
    pub coarse: f64,
    pub fine: f64,
    pub coarse_ds: f64,
    pub fine_ds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub blew_up: bool,
    pub nan_triggered: bool,
    pub t_blow: Option<f64>,
    /// `|T(ds) - T(ds/2)|` for refined runs.
    pub uncertainty: Option<f64>,
    pub t_end: f64,
    pub steps: usize,
    /// `(ds, dt)` of the run (the finest one for refined runs).
    pub resolution: (f64, f64),
    pub diagnostics: Vec<DiagnosticRow>,
    pub cone: Option<ConeCheck>,
    pub refinement: Option<Refinement>,
    #[serde(skip)]
    pub final_v: Vec<f64>,
    #[serde(skip)]
    pub history: Option<SolutionHistory>,
}

impl RunResult {
    /// Turns a recorded cone violation into an error.
    pub fn ensure_cone(&self) -> Result<()> {
        match self.cone.and_then(|c| c.first_violation) {
            Some(v) => Err(Error::ConeViolation {
                t: v.t,
                extent: v.extent,
                bound: v.bound,
            }),
            None => Ok(()),
        }
    }
}

/// `E^{m+1/2} = 1/2 sum [((v^{m+1} - v^m)/dt)^2 + D+v^{m+1} D+v^m + Q v^{m+1} v^m] ds`.
///
/// Exactly conserved by the linear undamped scheme and non-increasing under damping.
pub fn energy(next: &[f64], cur: &[f64], q: &[f64], ds: f64, dt: f64) -> f64 {
    let n = next.len();
    let mut acc = 0.0;
    for i in 0..n {
        let vt = (next[i] - cur[i]) / dt;
        acc += vt * vt + q[i] * next[i] * cur[i];
        if i + 1 < n {
            acc += (next[i + 1] - next[i]) * (cur[i + 1] - cur[i]) / (ds * ds);
        }
    }
    0.5 * acc * ds
}

/// Largest `|s|` with `|v| > tol max |v|`; zero for the zero state.
pub fn support_extent(s: &[f64], v: &[f64], tol: f64) -> f64 {
    let amp = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if amp == 0.0 {
        return 0.0;
    }
    let cut = tol * amp;
    s.iter()
        .zip(v)
        .filter(|(_, x)| x.abs() > cut)
        .fold(0.0, |m, (s, _)| m.max(s.abs()))
}

fn default_stride(grid: &Grid1D) -> usize {
    ((grid.t_max / (512.0 * grid.dt)).floor() as usize).max(1)
}

struct Recorder {
    stride: usize,
    idx: Vec<usize>,
    history: SolutionHistory,
}

impl Recorder {
    fn new(grid: &Grid1D, opts: &SnapshotOptions) -> Self {
        let stride = opts.time_stride.unwrap_or_else(|| default_stride(grid)).max(1);
        let (lo, hi) = opts.window.unwrap_or((grid.s_lo, grid.s_hi));
        let idx: Vec<usize> = (0..grid.len())
            .step_by(opts.space_stride.max(1))
            .filter(|&i| {
                let s = grid.node(i);
                s >= lo && s <= hi
            })
            .collect();
        let s = idx.iter().map(|&i| grid.node(i)).collect();
        Self {
            stride,
            idx,
            history: SolutionHistory {
                s,
                ..Default::default()
            },
        }
    }

    fn push(&mut self, t: f64, v: &[f64], vt: impl Fn(usize) -> f64) {
        self.history.times.push(t);
        self.history.v.push(self.idx.iter().map(|&i| v[i]).collect());
        self.history.vt.push(self.idx.iter().map(|&i| vt(i)).collect());
    }
}

/// Leapfrog update on `lo..=hi` with the damping taken semi-implicitly.
#[allow(clippy::too_many_arguments)]
#[inline]
fn leapfrog(
    next: &mut [f64],
    cur: &[f64],
    prev: &[f64],
    tables: &Tables,
    forcing: impl Fn(usize) -> f64,
    lo: usize,
    hi: usize,
    ds: f64,
    dt: f64,
) {
    let r2 = (dt / ds) * (dt / ds);
    let dt2 = dt * dt;
    for i in lo..=hi {
        let sigma = 0.5 * dt * tables.fd[i];
        let lap = r2 * (cur[i + 1] - 2.0 * cur[i] + cur[i - 1]);
        next[i] = (2.0 * cur[i] - (1.0 - sigma) * prev[i] + lap + dt2 * (forcing(i) - tables.q[i] * cur[i])) / (1.0 + sigma);
    }
}

/// Evolves `v(0) = v0`, `v_t(0) = v1` on prepared coefficient tables.
///
/// When `support_radius` is given, the support of every recorded level is
/// checked against `t + R + 2 ds`.
pub fn run_with_tables(
    grid: &Grid1D,
    tables: &Tables,
    v0: &[f64],
    v1: &[f64],
    support_radius: Option<f64>,
    opts: &RunOptions,
) -> Result<RunResult> {
    if grid.cfl > 1.0 {
        return Err(Error::Cfl(grid.cfl));
    }
    if let Some(r) = support_radius {
        grid.validate(r)?;
    }
    if !(opts.p > 1.0) {
        return Err(Error::invalid(format!("p > 1 required (got {})", opts.p)));
    }
    if !(opts.threshold > 0.0) {
        return Err(Error::invalid(format!("threshold > 0 required (got {})", opts.threshold)));
    }
    let n = grid.len();
    if v0.len() != n || v1.len() != n || tables.q.len() != n {
        return Err(Error::invalid("data and coefficient tables must match the mesh"));
    }
    let (ds, dt, p, kind) = (grid.ds, grid.dt, opts.p, opts.kind);
    let s = &tables.s;
    let stride = opts.output_stride.unwrap_or_else(|| default_stride(grid)).max(1);

    let mut prev2 = vec![0.0; n];
    let mut prev = v0.to_vec();
    let mut cur = vec![0.0; n];
    let mut next = vec![0.0; n];
    prev[0] = 0.0;
    prev[n - 1] = 0.0;

    // Nodes outside lo..=hi are exactly zero: the stencil widens by one cell per step.
    let nonzero = |x: &[f64]| x.iter().position(|v| *v != 0.0).zip(x.iter().rposition(|v| *v != 0.0));
    let (mut lo, mut hi) = match (nonzero(v0), nonzero(v1)) {
        (Some(a), Some(b)) => (a.0.min(b.0), a.1.max(b.1)),
        (Some(a), None) | (None, Some(a)) => a,
        (None, None) => (1, 1),
    };
    let widen = |lo: usize, hi: usize| (lo.saturating_sub(1).max(1), (hi + 1).min(n - 2));
    (lo, hi) = widen(lo, hi);

    // Second-order Taylor start.
    let r2 = (dt / ds) * (dt / ds);
    for i in lo..=hi {
        let lap = r2 * (prev[i + 1] - 2.0 * prev[i] + prev[i - 1]);
        let acc = rhs_nonlinearity(kind, p, tables.fj[i], prev[i], v1[i]) - tables.q[i] * prev[i] - tables.fd[i] * v1[i];
        cur[i] = prev[i] + dt * v1[i] + 0.5 * lap + 0.5 * dt * dt * acc;
    }

    let mut recorder = opts.snapshots.as_ref().map(|o| Recorder::new(grid, o));
    if let Some(rec) = recorder.as_mut() {
        rec.push(0.0, &prev, |i| v1[i]);
    }

    let mut diagnostics = Vec::new();
    let mut cone = support_radius.map(|_| ConeCheck {
        checked: 0,
        worst_margin: f64::NEG_INFINITY,
        first_violation: None,
    });
    let mut blow: Option<(f64, bool)> = None;
    let mut last_amp = prev.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut m = 0usize;

    // Invariant at the top of the loop: `cur` holds level m+1, `prev` level m, `prev2` level m-1.
    loop {
        let t_next = (m + 1) as f64 * dt;
        let amp = cur[lo - 1..=hi + 1].iter().fold(0.0f64, |acc, x| if x.is_finite() { acc.max(x.abs()) } else { f64::NAN });
        if !amp.is_finite() || amp >= opts.threshold {
            let nan = !amp.is_finite();
            let t = if nan || !(last_amp > 0.0) {
                t_next
            } else {
                let frac = (opts.threshold.ln() - last_amp.ln()) / (amp.ln() - last_amp.ln());
                t_next - dt + dt * frac.clamp(0.0, 1.0)
            };
            blow = Some((t, nan));
            break;
        }
        last_amp = amp;

        let at_output = (m + 1) % stride == 0 || m + 1 == grid.steps;
        if at_output {
            let e = energy(&cur[lo - 1..=hi + 1], &prev[lo - 1..=hi + 1], &tables.q[lo - 1..=hi + 1], ds, dt);
            let extent = support_extent(&s[lo - 1..=hi + 1], &cur[lo - 1..=hi + 1], opts.support_tol);
            diagnostics.push(DiagnosticRow {
                t: t_next,
                max_amp: amp,
                energy: e,
                support: extent,
            });
            if let (Some(c), Some(r)) = (cone.as_mut(), support_radius) {
                let bound = t_next + r + 2.0 * ds;
                c.checked += 1;
                c.worst_margin = c.worst_margin.max(extent - bound);
                if extent > bound && c.first_violation.is_none() {
                    c.first_violation = Some(ConeViolation {
                        t: t_next,
                        extent,
                        bound,
                    });
                }
            }
        }
        if m + 1 == grid.steps {
            break;
        }

        // Advance to level m+2.
        (lo, hi) = widen(lo, hi);
        match kind {
            Nonlinearity::Power => {
                let f = |i: usize| rhs_nonlinearity(kind, p, tables.fj[i], cur[i], 0.0);
                leapfrog(&mut next, &cur, &prev, tables, f, lo, hi, ds, dt);
            }
            Nonlinearity::DerivativePower => {
                let lagged = |i: usize| {
                    if m == 0 {
                        (cur[i] - prev[i]) / dt
                    } else {
                        (cur[i] - prev2[i]) / (2.0 * dt)
                    }
                };
                let f = |i: usize| rhs_nonlinearity(kind, p, tables.fj[i], 0.0, lagged(i));
                leapfrog(&mut next, &cur, &prev, tables, f, lo, hi, ds, dt);
                let predicted = next.clone();
                let f = |i: usize| rhs_nonlinearity(kind, p, tables.fj[i], 0.0, (predicted[i] - prev[i]) / (2.0 * dt));
                leapfrog(&mut next, &cur, &prev, tables, f, lo, hi, ds, dt);
            }
        }

        if let Some(rec) = recorder.as_mut() {
            if (m + 1) % rec.stride == 0 {
                rec.push(t_next, &cur, |i| (next[i] - prev[i]) / (2.0 * dt));
            }
        }

        std::mem::swap(&mut prev2, &mut prev);
        std::mem::swap(&mut prev, &mut cur);
        std::mem::swap(&mut cur, &mut next);
        m += 1;
    }

    let (blew_up, nan_triggered, t_blow) = match blow {
        Some((t, nan)) => (true, nan, Some(t)),
        None => (false, false, None),
    };
    Ok(RunResult {
        blew_up,
        nan_triggered,
        t_blow,
        uncertainty: None,
        t_end: if blew_up { (m + 1) as f64 * dt } else { grid.t_max },
        steps: m + 1,
        resolution: (ds, dt),
        diagnostics,
        cone,
        refinement: None,
        final_v: cur,
        history: recorder.map(|r| r.history),
    })
}

/// Runs the reduced Schwarzschild problem with bump data.
pub fn run(params: &GeometryParams, grid: &Grid1D, data: &InitialData, opts: &RunOptions) -> Result<RunResult> {
    let tables = schwarzschild_tables(params, grid, opts.p)?;
    let (v0, v1) = data.sample(grid);
    run_with_tables(grid, &tables, &v0, &v1, Some(data.radius), opts)
}

/// Runs at `ds` and `ds / 2` (same CFL ratio and horizon) and Richardson-extrapolates
/// the blow-up time. Diagnostics come from the fine run.
pub fn run_refined(params: &GeometryParams, grid: &Grid1D, data: &InitialData, opts: &RunOptions) -> Result<RunResult> {
    let coarse = run(params, grid, data, opts)?;
    let fine_grid = Grid1D::for_cone(0.5 * grid.ds, grid.cfl, grid.t_max, data.radius)?;
    let mut fine = run(params, &fine_grid, data, opts)?;
    if let (Some(tc), Some(tf)) = (coarse.t_blow, fine.t_blow) {
        fine.t_blow = Some(tf + (tf - tc) / 3.0);
        fine.uncertainty = Some((tf - tc).abs());
        fine.refinement = Some(Refinement {
            coarse: tc,
            fine: tf,
            coarse_ds: grid.ds,
            fine_ds: fine_grid.ds,
        });
    } else if let Some(tf) = fine.t_blow {
        fine.uncertainty = Some((grid.t_max - tf).abs());
    }
    if let (Some(cf), Some(cc)) = (fine.cone.as_mut(), coarse.cone) {
        cf.checked += cc.checked;
        cf.worst_margin = cf.worst_margin.max(cc.worst_margin);
        if cf.first_violation.is_none() {
            cf.first_violation = cc.first_violation;
        }
    }
    Ok(fine)
}
