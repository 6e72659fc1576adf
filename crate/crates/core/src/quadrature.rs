//! Composite Gauss–Legendre rules on graded panels.

use gauss_quad::GaussLegendre;

use crate::error::{Error, Result};

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct GaussRule {
    pairs: Vec<(f64, f64)>,
}

impl GaussRule {
    pub fn new(order: usize) -> Result<Self> {
        let rule = GaussLegendre::new(order)
            .map_err(|e| Error::Quadrature(format!("Gauss-Legendre rule of order {order}: {e}")))?;
        let mut pairs = rule.into_node_weight_pairs();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(Self { pairs })
    }

    pub fn order(&self) -> usize {
        self.pairs.len()
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn on(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.pairs.iter().map(move |&(x, w)| (mid + half * x, half * w))
    }

    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.on(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

/// Panels `[0, 2^-levels], [2^-levels, 2^-(levels-1)], ..., [1/2, 1]`.
pub fn dyadic_panels(levels: u32) -> Vec<(f64, f64)> {
    let mut panels = Vec::with_capacity(levels as usize + 1);
    let mut lo = 0.0;
    for k in (0..=levels).rev() {
        let hi = 0.5f64.powi(k as i32);
        panels.push((lo, hi));
        lo = hi;
    }
    panels
}

/// Composite rule over the given panels, sorted by node.
pub fn composite(rule: &GaussRule, panels: &[(f64, f64)]) -> Vec<(f64, f64)> {
    panels.iter().flat_map(|&(a, b)| rule.on(a, b).collect::<Vec<_>>()).collect()
}

/// Trapezoid rule on a non-uniform grid.
pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1]))
        .sum()
}

/// Composite Simpson rule on equally spaced samples, exact for cubics at any
/// sample count from 3 up.
pub fn simpson_uniform(h: f64, y: &[f64]) -> f64 {
    let n = y.len();
    match n {
        0 | 1 => return 0.0,
        2 => return 0.5 * h * (y[0] + y[1]),
        4 => return 3.0 * h / 8.0 * (y[0] + 3.0 * y[1] + 3.0 * y[2] + y[3]),
        _ => {}
    }
    // An odd number of intervals closes with the 3/8 rule on the last three.
    let even_end = if (n - 1) % 2 == 0 { n - 1 } else { n - 4 };
    let mut acc = y[0] + y[even_end];
    for (i, v) in y.iter().enumerate().take(even_end).skip(1) {
        acc += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    let mut total = acc * h / 3.0;
    if even_end != n - 1 {
        let t = &y[n - 4..];
        total += 3.0 * h / 8.0 * (t[0] + 3.0 * t[1] + 3.0 * t[2] + t[3]);
    }
    total
}

/// `int_a^b` of the quadratic interpolating `(x[i], y[i])`, `i = 0..3`.
pub fn quadratic_piece(x: [f64; 3], y: [f64; 3], a: f64, b: f64) -> f64 {
    // Newton form about x[0]: y0 + d1 (t - x0) + d2 (t - x0)(t - x1).
    let d1 = (y[1] - y[0]) / (x[1] - x[0]);
    let d2 = ((y[2] - y[1]) / (x[2] - x[1]) - d1) / (x[2] - x[0]);
    let prim = |t: f64| {
        let u = t - x[0];
        y[0] * u + 0.5 * d1 * u * u + d2 * (u * u * u / 3.0 - 0.5 * (x[1] - x[0]) * u * u)
    };
    prim(b) - prim(a)
}
