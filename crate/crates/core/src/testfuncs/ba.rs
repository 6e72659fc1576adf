use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::background::Background;
use crate::error::{Error, Result};
use crate::geometry::GeometryParams;
use crate::ode::OdeOptions;
use crate::quadrature::{composite, dyadic_panels, GaussRule};

use super::phi::{integrate_phi, phi_start_point};

/// A one-parameter family `lambda -> psi_lambda` sampled on a tortoise grid.
pub trait PsiFamily: Sync {
    /// Returns `(psi_lambda e^{-lambda s}, e^{-lambda s} d_r psi_lambda)` at the sorted nodes `s`.
    fn sample(&self, lambda: f64, s: &[f64]) -> Result<(Vec<f64>, Vec<f64>)>;
}

/// The stub family `psi_lambda == 1`.
#[derive(Clone, Copy, Debug, Default)]
pub struct UnitPsi;

impl PsiFamily for UnitPsi {
    fn sample(&self, lambda: f64, s: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        Ok((s.iter().map(|&x| (-lambda * x).exp()).collect(), vec![0.0; s.len()]))
    }
}

/// `psi_lambda` built from `phi_lambda` on a background.
#[derive(Clone, Copy, Debug)]
pub struct SchwarzschildPsi<B> {
    pub background: B,
    pub ode: OdeOptions,
    pub placement_tol: f64,
}

impl<B: Background> SchwarzschildPsi<B> {
    pub fn new(background: B) -> Self {
        Self {
            background,
            ode: OdeOptions::default(),
            placement_tol: 1e-12,
        }
    }
}

impl<B: Background> PsiFamily for SchwarzschildPsi<B> {
    fn sample(&self, lambda: f64, s: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let bg = &self.background;
        let s_min = phi_start_point(bg, lambda, self.placement_tol).min(s[0] - 1.0);
        let states = integrate_phi(bg, lambda, s_min, s, &self.ode)?;
        let k = bg.half_dim();
        let mut psi = Vec::with_capacity(s.len());
        let mut dpsi = Vec::with_capacity(s.len());
        for (&x, y) in s.iter().zip(&states) {
            let c = bg.coefficients(x);
            let weight = c.r.powf(-k);
            psi.push(y[0] * weight);
            dpsi.push(weight / c.lapse * (y[1] + lambda * y[0] - k * y[0] * c.lapse / c.r));
        }
        Ok((psi, dpsi))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaOptions {
    /// Gauss–Legendre order per panel on the first pass.
    pub min_order: usize,
    pub max_order: usize,
    /// Largest relative change between successive orders that counts as converged.
    pub rel_tol: f64,
    /// Dyadic levels added below the decay scale `tau ~ span^{-a}`.
    pub extra_levels: u32,
}

impl Default for BaOptions {
    fn default() -> Self {
        Self {
            min_order: 8,
            max_order: 64,
            rel_tol: 1e-8,
            extra_levels: 8,
        }
    }
}

/// `b_a(t, s) = int_0^1 e^{-lambda t} psi_lambda(r(s)) lambda^{a-1} d lambda` on a tensor grid.
///
/// Rows are indexed by `t_grid`, columns by `s_grid`. Entries outside the cone
/// `s <= t + R` are NaN.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaTable {
    pub a: f64,
    pub support_radius: f64,
    pub lambda_nodes: Vec<f64>,
    pub t_grid: Vec<f64>,
    pub s_grid: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    pub dt_values: Vec<Vec<f64>>,
    pub dr_values: Vec<Vec<f64>>,
    pub order: usize,
    pub panels: usize,
    /// Relative change observed at the last order doubling.
    pub quadrature_error: f64,
}

impl BaTable {
    fn in_cone(&self, i: usize, j: usize) -> bool {
        self.s_grid[j] <= self.t_grid[i] + self.support_radius
    }
}

fn sorted(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] > w[0]) && xs.iter().all(|x| x.is_finite())
}

type Tables = (Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<Vec<f64>>);

fn assemble<P: PsiFamily + ?Sized>(
    family: &P,
    a: f64,
    support_radius: f64,
    t_grid: &[f64],
    s_grid: &[f64],
    nodes: &[(f64, f64)],
) -> Result<(Tables, Vec<f64>)> {
    let samples: Vec<(f64, f64, Vec<f64>, Vec<f64>)> = nodes
        .par_iter()
        .map(|&(tau, weight)| {
            let lambda = tau.powf(1.0 / a);
            family.sample(lambda, s_grid).map(|(p, d)| (lambda, weight / a, p, d))
        })
        .collect::<Result<_>>()?;

    let blank = || vec![vec![f64::NAN; s_grid.len()]; t_grid.len()];
    let (mut values, mut dt_values, mut dr_values) = (blank(), blank(), blank());
    for (i, &t) in t_grid.iter().enumerate() {
        for (j, &s) in s_grid.iter().enumerate() {
            if s > t + support_radius {
                continue;
            }
            let (mut v, mut dt, mut dr) = (0.0, 0.0, 0.0);
            for (lambda, w, psi, dpsi) in &samples {
                let e = w * (-lambda * (t - s)).exp();
                v += e * psi[j];
                dt -= e * lambda * psi[j];
                dr += e * dpsi[j];
            }
            values[i][j] = v;
            dt_values[i][j] = dt;
            dr_values[i][j] = dr;
        }
    }
    let lambdas = samples.iter().map(|x| x.0).collect();
    Ok(((values, dt_values, dr_values), lambdas))
}

fn max_relative_change(new: &[Vec<f64>], old: &[Vec<f64>]) -> f64 {
    new.iter()
        .flatten()
        .zip(old.iter().flatten())
        .filter(|(n, _)| n.is_finite())
        .map(|(n, o)| ((n - o) / n).abs())
        .fold(0.0, f64::max)
}

/// Tabulates `b_a`, `d_t b_a` and `d_r b_a`.
///
/// The substitution `lambda = tau^{1/a}` turns the weight `lambda^{a-1} d lambda`
/// into `d tau / a`; the `tau` integral runs over dyadic panels reaching below the
/// scale where `e^{-lambda (t - s)}` switches off, with the per-panel order
/// doubled until successive tables agree to `rel_tol`.
pub fn build_ba<P: PsiFamily + ?Sized>(
    family: &P,
    a: f64,
    support_radius: f64,
    t_grid: &[f64],
    s_grid: &[f64],
    opts: &BaOptions,
) -> Result<BaTable> {
    if !(a > 0.0) {
        return Err(Error::invalid(format!("a > 0 required (got {a})")));
    }
    if !(support_radius >= 0.0) {
        return Err(Error::invalid(format!("support radius must be nonnegative (got {support_radius})")));
    }
    if t_grid.is_empty() || s_grid.is_empty() || !sorted(t_grid) || !sorted(s_grid) {
        return Err(Error::invalid("t and s grids must be nonempty and strictly increasing"));
    }
    let span = (t_grid[t_grid.len() - 1] - s_grid[0] + support_radius).abs().max(1.0) + 1.0;
    let levels = (a * span.log2()).ceil() as u32 + opts.extra_levels;
    let panels = dyadic_panels(levels);

    let mut order = opts.min_order.max(1);
    let mut previous: Option<Tables> = None;
    loop {
        let nodes = composite(&GaussRule::new(order)?, &panels);
        let (tables, lambda_nodes) = assemble(family, a, support_radius, t_grid, s_grid, &nodes)?;
        if let Some(prev) = previous.as_ref() {
            let change = max_relative_change(&tables.0, &prev.0).max(max_relative_change(&tables.1, &prev.1));
            if change < opts.rel_tol {
                let (values, dt_values, dr_values) = tables;
                return Ok(BaTable {
                    a,
                    support_radius,
                    lambda_nodes,
                    t_grid: t_grid.to_vec(),
                    s_grid: s_grid.to_vec(),
                    values,
                    dt_values,
                    dr_values,
                    order,
                    panels: panels.len(),
                    quadrature_error: change,
                });
            }
            if order * 2 > opts.max_order {
                return Err(Error::Quadrature(format!(
                    "b_a (a = {a}) not converged at order {order}: relative change {change:e}"
                )));
            }
        }
        previous = Some(tables);
        order *= 2;
    }
}

/// Measured constants of the two-sided `b_a` bound and the `b_{a+1}` upper bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaCertificate {
    pub a: f64,
    pub dim: u32,
    /// Extrema of `b_a (t + R)^a` over the region.
    pub band: (f64, f64),
    pub band_ratio: f64,
    /// Sup of `b_{a+1} (t+R)^{(n-1)/2} (t+R+1-s)^{a+1-(n-1)/2}`, when `a + 1 > (n-1)/2`.
    pub upper_sup: Option<f64>,
    /// Sup of `|d_r b_a| / b_{a+1}`.
    pub derivative_sup: f64,
    pub points_checked: usize,
}

/// Checks the `b_a` bounds on `regime_split <= s <= t + R`, using
/// `b_{a+1} = -d_t b_a` from the same table.
pub fn verify_ba_bounds(table: &BaTable, params: &GeometryParams) -> Result<BaCertificate> {
    params.validate()?;
    let k = params.half_dim();
    let a = table.a;
    if !(a > 0.0 && a < k) {
        return Err(Error::invalid(format!("two-sided b_a bound needs 0 < a < (n-1)/2 = {k} (got a = {a})")));
    }
    let split = params.regime_split();
    let r = table.support_radius;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut upper: f64 = 0.0;
    let mut deriv: f64 = 0.0;
    let mut count = 0;
    for (i, &t) in table.t_grid.iter().enumerate() {
        for (j, &s) in table.s_grid.iter().enumerate() {
            if s < split || !table.in_cone(i, j) {
                continue;
            }
            let b = table.values[i][j];
            let b1 = -table.dt_values[i][j];
            if !(b.is_finite() && b > 0.0 && b1.is_finite() && b1 > 0.0) {
                return Err(Error::Certificate(format!(
                    "b_a or b_(a+1) not positive at (t, s) = ({t}, {s}): {b:e}, {b1:e}"
                )));
            }
            let scaled = b * (t + r).powf(a);
            lo = lo.min(scaled);
            hi = hi.max(scaled);
            upper = upper.max(b1 * (t + r).powf(k) * (t + r + 1.0 - s).powf(a + 1.0 - k));
            deriv = deriv.max(table.dr_values[i][j].abs() / b1);
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::invalid("no table entries in the region s >= 4M + e, s <= t + R"));
    }
    if !(hi.is_finite() && upper.is_finite() && deriv.is_finite()) {
        return Err(Error::Certificate("b_a bound constants are not finite".into()));
    }
    Ok(BaCertificate {
        a,
        dim: params.dim,
        band: (lo, hi),
        band_ratio: hi / lo,
        upper_sup: (a + 1.0 > k).then_some(upper),
        derivative_sup: deriv,
        points_checked: count,
    })
}

/// Largest relative defect of `d_t b_a + b_{a+1}` between two independently
/// built tables on the same grid.
pub fn check_time_derivative(table_a: &BaTable, table_next: &BaTable) -> Result<f64> {
    if table_a.t_grid != table_next.t_grid
        || table_a.s_grid != table_next.s_grid
        || table_a.support_radius != table_next.support_radius
    {
        return Err(Error::invalid("b_a and b_(a+1) tables must share grids and support radius"));
    }
    if (table_next.a - table_a.a - 1.0).abs() > 1e-12 {
        return Err(Error::invalid(format!(
            "second table has a = {}, expected {}",
            table_next.a,
            table_a.a + 1.0
        )));
    }
    let mut worst: f64 = 0.0;
    for i in 0..table_a.t_grid.len() {
        for j in 0..table_a.s_grid.len() {
            if !table_a.in_cone(i, j) {
                continue;
            }
            let next = table_next.values[i][j];
            worst = worst.max(((table_a.dt_values[i][j] + next) / next).abs());
        }
    }
    Ok(worst)
}
