use serde::{Deserialize, Serialize};

use crate::background::{Background, Schwarzschild};
use crate::error::{Error, Result};
use crate::geometry::GeometryParams;
use crate::ode::OdeOptions;
use crate::quadrature::{quadratic_piece, simpson_uniform, trapezoid};
use crate::solver::SolutionHistory;
use crate::testfuncs::{phi_integrate as integrate_phi, phi_start_point};

use super::cutoffs::Cutoffs;
use super::initial::sphere_area;
use super::{FunctionalName, FunctionalReport};

/// Spatial weights on the stored tortoise nodes of a [`SolutionHistory`].
#[derive(Clone, Debug, PartialEq)]
pub struct SpatialWeights {
    pub s: Vec<f64>,
    /// `F J^{p-1}`
    pub fj: Vec<f64>,
    /// `r^{(n-1)/2}`
    pub r_half: Vec<f64>,
    /// `phi_{lambda_0} e^{-lambda_0 s}` when a `lambda_0` is attached.
    pub phi_normalized: Option<Vec<f64>>,
    pub lambda0: Option<f64>,
    pub sphere: f64,
}

impl SpatialWeights {
    pub fn new(params: &GeometryParams, s: &[f64], p: f64, lambda0: Option<f64>) -> Result<Self> {
        params.validate()?;
        let bg = Schwarzschild::new(*params);
        let k = params.half_dim();
        let mut fj = Vec::with_capacity(s.len());
        let mut r_half = Vec::with_capacity(s.len());
        for &x in s {
            let c = bg.coefficients(x);
            fj.push(c.lapse * c.r.powf(-k * (p - 1.0)));
            r_half.push(c.r.powf(k));
        }
        let phi_normalized = match lambda0 {
            Some(l) if !s.is_empty() => {
                let s_min = phi_start_point(&bg, l, 1e-12).min(s[0] - 1.0);
                Some(integrate_phi(&bg, l, s_min, s, &OdeOptions::default())?.iter().map(|y| y[0]).collect())
            }
            _ => None,
        };
        Ok(Self {
            s: s.to_vec(),
            fj,
            r_half,
            phi_normalized,
            lambda0,
            sphere: sphere_area(params.dim),
        })
    }
}

/// `int_lo^hi I(t) dt` from samples on a uniform time lattice: Simpson on the
/// interior slices, local quadratics on the partial end intervals.
fn time_integral(times: &[f64], values: &[f64], lo: f64, hi: f64) -> Option<f64> {
    let j0 = times.iter().position(|&t| t >= lo)?;
    let j1 = times.iter().rposition(|&t| t <= hi)?;
    if j1 < j0 + 2 {
        return None;
    }
    let h = times[1] - times[0];
    let mut total = simpson_uniform(h, &values[j0..=j1]);
    let piece = |j: usize, a: f64, b: f64| {
        quadratic_piece(
            [times[j], times[j + 1], times[j + 2]],
            [values[j], values[j + 1], values[j + 2]],
            a,
            b,
        )
    };
    if j0 > 0 && times[j0] > lo {
        total += piece(j0 - 1, lo, times[j0]);
    }
    if j1 + 1 < times.len() && times[j1] < hi {
        total += piece(j1 - 1, times[j1], hi);
    }
    Some(total)
}

/// Space-time functional of a stored solution at horizon `T = cutoffs.horizon`.
///
/// * `L = |S^{n-1}| int_0^T int |v|^p F J^{p-1} r^{(n-1)/2} eta_T^{2p'} ds dt`
///   (the radial `int |u|^p eta_T^{2p'} r^{n-1} dr`), and `L_inf`, `L_2M` with the
///   extra factors `alpha_T^{2p'}(s)` and `1 - alpha_T^{2p'}(s)`;
/// * `X = int_{T/3}^T int |v_t|^p phi_{lambda_0} e^{-lambda_0 t} eta_T^{2p'} F J^{p-1} ds dt`.
///
/// The value is reported together with the relative change against the same
/// quadrature on every other slice; fewer than 9 slices in the time window is an error.
pub fn solution_functional(
    history: &SolutionHistory,
    weights: &SpatialWeights,
    cutoffs: &Cutoffs,
    which: FunctionalName,
) -> Result<FunctionalReport> {
    let p = cutoffs.p;
    let horizon = cutoffs.horizon;
    if weights.s != history.s {
        return Err(Error::invalid("spatial weights were built for a different node set"));
    }
    let lo = match which {
        FunctionalName::L | FunctionalName::LInf | FunctionalName::L2M => 0.0,
        FunctionalName::X => horizon / 3.0,
        other => return Err(Error::invalid(format!("{other:?} is not a space-time functional"))),
    };
    let inside = history.times.iter().filter(|&&t| t >= lo && t <= horizon).count();
    if inside < 9 {
        return Err(Error::InsufficientSnapshots(format!(
            "{inside} slices in [{lo}, {horizon}]; at least 9 needed"
        )));
    }
    if history.times.last().copied().unwrap_or(0.0) < horizon * (1.0 - 1e-12) {
        return Err(Error::InsufficientSnapshots(format!(
            "history ends at t = {} before T = {horizon}",
            history.times.last().copied().unwrap_or(0.0)
        )));
    }

    let spatial: Vec<f64> = match which {
        FunctionalName::X => {
            let phi = weights
                .phi_normalized
                .as_ref()
                .ok_or_else(|| Error::invalid("X(T) needs weights built with lambda_0"))?;
            let l = weights.lambda0.unwrap_or(0.0);
            weights.s.iter().zip(&weights.fj).zip(phi).map(|((&s, fj), w)| fj * w * (l * s).exp()).collect()
        }
        FunctionalName::LInf => spatial_l(weights, |s| cutoffs.alpha_pow(s).value),
        FunctionalName::L2M => spatial_l(weights, |s| 1.0 - cutoffs.alpha_pow(s).value),
        _ => spatial_l(weights, |_| 1.0),
    };
    let time_factor = |t: f64| -> f64 {
        let e = cutoffs.eta_pow(t).value;
        match which {
            FunctionalName::X => e * (-weights.lambda0.unwrap_or(0.0) * t).exp(),
            _ => e * weights.sphere,
        }
    };
    let slices: Vec<f64> = history
        .times
        .iter()
        .enumerate()
        .map(|(j, &t)| {
            let field = if which == FunctionalName::X { &history.vt[j] } else { &history.v[j] };
            let integrand: Vec<f64> = field.iter().zip(&spatial).map(|(v, w)| if *v == 0.0 { 0.0 } else { v.abs().powf(p) * w }).collect();
            time_factor(t) * trapezoid(&weights.s, &integrand)
        })
        .collect();

    let value = time_integral(&history.times, &slices, lo, horizon)
        .ok_or_else(|| Error::InsufficientSnapshots("time window does not contain two slices".into()))?;
    let half_times: Vec<f64> = history.times.iter().step_by(2).copied().collect();
    let half_slices: Vec<f64> = slices.iter().step_by(2).copied().collect();
    let coarse = time_integral(&half_times, &half_slices, lo, horizon).unwrap_or(f64::NAN);
    let change = if value == 0.0 { (coarse - value).abs() } else { ((coarse - value) / value).abs() };
    Ok(FunctionalReport {
        name: which,
        value,
        horizon: Some(horizon),
        quadrature_change: change,
    })
}

fn spatial_l(weights: &SpatialWeights, cut: impl Fn(f64) -> f64) -> Vec<f64> {
    weights
        .s
        .iter()
        .zip(&weights.fj)
        .zip(&weights.r_half)
        .map(|((&s, fj), rh)| fj * rh * cut(s))
        .collect()
}

/// Trace of the comparison ODE `T Z' >= Z^p`, `Z = C3 eps + Y`, `Y(T) = int X(tau) d tau / tau`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZReport {
    pub horizons: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    /// `T Z'(T) / Z(T)^p = X(T) / Z(T)^p`; `None` where `X = 0`.
    pub rho: Vec<Option<f64>>,
    pub running_min: Vec<Option<f64>>,
    /// Set when `X` vanishes identically, leaving `rho` undefined.
    pub degenerate: bool,
}

impl ZReport {
    pub fn min_rho(&self) -> Option<f64> {
        self.running_min.iter().rev().find_map(|x| *x)
    }
}

/// Builds `Y`, `Z` and the ratio `rho` from `X` sampled on an increasing horizon grid
/// starting at 3 (the lower limit of `Y`).
pub fn glassey_ode_monitor(horizons: &[f64], x: &[f64], p: f64, c3_eps: f64) -> Result<ZReport> {
    if horizons.len() != x.len() || horizons.is_empty() {
        return Err(Error::invalid("X samples and horizons must be nonempty and of equal length"));
    }
    if !horizons.windows(2).all(|w| w[1] > w[0]) || horizons[0] < 3.0 {
        return Err(Error::invalid("horizons must increase and start at T >= 3"));
    }
    let logs: Vec<f64> = horizons.iter().map(|t| t.ln()).collect();
    let mut y = vec![0.0; horizons.len()];
    for i in 1..horizons.len() {
        y[i] = y[i - 1] + 0.5 * (logs[i] - logs[i - 1]) * (x[i] + x[i - 1]);
    }
    let z: Vec<f64> = y.iter().map(|v| c3_eps + v).collect();
    let degenerate = x.iter().all(|&v| v == 0.0);
    let rho: Vec<Option<f64>> = x
        .iter()
        .zip(&z)
        .map(|(&xv, &zv)| (xv != 0.0 && zv > 0.0).then(|| xv / zv.powf(p)))
        .collect();
    let mut best: Option<f64> = None;
    let running_min = rho
        .iter()
        .map(|r| {
            if let Some(v) = r {
                best = Some(best.map_or(*v, |b: f64| b.min(*v)));
            }
            best
        })
        .collect();
    Ok(ZReport {
        horizons: horizons.to_vec(),
        y,
        z,
        rho,
        running_min,
        degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_x_gives_logarithm() {
        let t: Vec<f64> = (0..50).map(|i| 3.0 * 1.1f64.powi(i)).collect();
        let x = vec![0.7; t.len()];
        let rep = glassey_ode_monitor(&t, &x, 2.0, 0.1).unwrap();
        for (ti, yi) in t.iter().zip(&rep.y) {
            assert!((yi - 0.7 * (ti / 3.0).ln()).abs() < 1e-10);
        }
        assert!(!rep.degenerate);
    }

    #[test]
    fn zero_x_is_flagged() {
        let rep = glassey_ode_monitor(&[3.0, 4.0, 5.0], &[0.0; 3], 2.0, 0.2).unwrap();
        assert!(rep.degenerate);
        assert!(rep.z.iter().all(|&z| z == 0.2));
        assert!(rep.rho.iter().all(Option::is_none));
    }

    #[test]
    fn time_integral_partial_ends() {
        let t: Vec<f64> = (0..=20).map(|i| i as f64 * 0.5).collect();
        let v: Vec<f64> = t.iter().map(|x| x * x - 2.0 * x + 1.0).collect();
        let got = time_integral(&t, &v, 1.2, 8.7).unwrap();
        let prim = |x: f64| x * x * x / 3.0 - x * x + x;
        let exact = prim(8.7) - prim(1.2);
        assert!((got - exact).abs() < 1e-12);
    }
}
