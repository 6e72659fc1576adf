//! Embedded Dormand–Prince 5(4) integrator with continuous output.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OdeOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub initial_step: Option<f64>,
    pub max_step: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            initial_step: None,
            max_step: f64::INFINITY,
            max_steps: 2_000_000,
        }
    }
}

impl OdeOptions {
    pub fn with_tolerance(tol: f64) -> Self {
        Self {
            abs_tol: tol,
            rel_tol: tol,
            ..Self::default()
        }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Continuous extension of one accepted step.
#[derive(Clone, Copy, Debug)]
pub struct DenseStep<const N: usize> {
    pub t0: f64,
    pub h: f64,
    r: [[f64; N]; 5],
}

impl<const N: usize> DenseStep<N> {
    pub fn eval(&self, t: f64) -> [f64; N] {
        let theta = (t - self.t0) / self.h;
        let theta1 = 1.0 - theta;
        let mut out = [0.0; N];
        for i in 0..N {
            let r = &self.r;
            out[i] = r[0][i] + theta * (r[1][i] + theta1 * (r[2][i] + theta * (r[3][i] + theta1 * r[4][i])));
        }
        out
    }

    pub fn end(&self) -> f64 {
        self.t0 + self.h
    }
}

struct Stepper<F, const N: usize> {
    rhs: F,
    opts: OdeOptions,
    t: f64,
    y: [f64; N],
    k1: [f64; N],
    h: f64,
    steps: usize,
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (coef, k) in terms {
        for i in 0..N {
            out[i] += h * coef * k[i];
        }
    }
    out
}

impl<F, const N: usize> Stepper<F, N>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    fn new(mut rhs: F, t0: f64, y0: [f64; N], span: f64, opts: OdeOptions) -> Self {
        let k1 = rhs(t0, &y0);
        let h = opts
            .initial_step
            .unwrap_or_else(|| initial_step(&y0, &k1, span, &opts))
            .min(opts.max_step);
        Self {
            rhs,
            opts,
            t: t0,
            y: y0,
            k1,
            h,
            steps: 0,
        }
    }

    /// Takes one accepted step not exceeding `t_limit`.
    fn step(&mut self, t_limit: f64) -> Result<DenseStep<N>> {
        loop {
            self.steps += 1;
            if self.steps > self.opts.max_steps {
                return Err(Error::Integration {
                    at: self.t,
                    reason: format!("exceeded {} steps", self.opts.max_steps),
                });
            }
            let remaining = t_limit - self.t;
            let last = self.h >= remaining;
            let h = if last { remaining } else { self.h };
            if !(h > 1e-14 * (1.0 + self.t.abs())) && !last {
                return Err(Error::Integration {
                    at: self.t,
                    reason: format!("step size underflow (h = {h:e})"),
                });
            }
            let (t, y, k1) = (self.t, self.y, self.k1);
            let rhs = &mut self.rhs;
            let k2 = rhs(t + C2 * h, &axpy(&y, h, &[(A21, &k1)]));
            let k3 = rhs(t + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]));
            let k4 = rhs(t + C4 * h, &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
            let k5 = rhs(t + C5 * h, &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
            let k6 = rhs(
                t + h,
                &axpy(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
            );
            let y_new = axpy(&y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
            let k7 = rhs(t + h, &y_new);

            let mut err_sq = 0.0;
            for i in 0..N {
                let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let scale = self.opts.abs_tol + self.opts.rel_tol * y[i].abs().max(y_new[i].abs());
                err_sq += (e / scale).powi(2);
            }
            let err = (err_sq / N as f64).sqrt();

            if !err.is_finite() {
                self.h = 0.25 * h;
                continue;
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if err <= 1.0 {
                let mut r = [[0.0; N]; 5];
                for i in 0..N {
                    let dy = y_new[i] - y[i];
                    let bspl = h * k1[i] - dy;
                    r[0][i] = y[i];
                    r[1][i] = dy;
                    r[2][i] = bspl;
                    r[3][i] = dy - h * k7[i] - bspl;
                    r[4][i] = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
                }
                self.t = if last { t_limit } else { t + h };
                self.y = y_new;
                self.k1 = k7;
                // A clipped final step says nothing about the natural step size.
                if !last {
                    self.h = (h * factor).min(self.opts.max_step);
                }
                return Ok(DenseStep { t0: t, h, r });
            }
            self.h = h * factor.min(1.0);
        }
    }
}

fn initial_step<const N: usize>(y0: &[f64; N], f0: &[f64; N], span: f64, opts: &OdeOptions) -> f64 {
    let mut d0 = 0.0;
    let mut d1 = 0.0;
    for i in 0..N {
        let sc = opts.abs_tol + opts.rel_tol * y0[i].abs();
        d0 += (y0[i] / sc).powi(2);
        d1 += (f0[i] / sc).powi(2);
    }
    let (d0, d1) = ((d0 / N as f64).sqrt(), (d1 / N as f64).sqrt());
    let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h.min(span.abs()).max(1e-12 * span.abs().max(1.0))
}

/// Integrates forward from `t0` and returns the state at every point of
/// `outputs` (sorted, all `>= t0`).
pub fn solve_at<F, const N: usize>(rhs: F, t0: f64, y0: [f64; N], outputs: &[f64], opts: &OdeOptions) -> Result<Vec<[f64; N]>>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let Some(&t_end) = outputs.last() else {
        return Ok(Vec::new());
    };
    if outputs.windows(2).any(|w| w[1] < w[0]) || outputs[0] < t0 {
        return Err(Error::invalid("output abscissae must be sorted and start at or after t0"));
    }
    let mut out = Vec::with_capacity(outputs.len());
    let mut idx = 0;
    while idx < outputs.len() && outputs[idx] == t0 {
        out.push(y0);
        idx += 1;
    }
    if idx == outputs.len() {
        return Ok(out);
    }
    let mut stepper = Stepper::new(rhs, t0, y0, t_end - t0, *opts);
    while idx < outputs.len() {
        let dense = stepper.step(t_end)?;
        let end = dense.end();
        while idx < outputs.len() && outputs[idx] <= end {
            out.push(if outputs[idx] == end { stepper.y } else { dense.eval(outputs[idx]) });
            idx += 1;
        }
        if stepper.t >= t_end {
            break;
        }
    }
    while out.len() < outputs.len() {
        out.push(stepper.y);
    }
    Ok(out)
}

/// Outcome of [`solve_until`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StopOutcome<const N: usize> {
    /// The predicate fired first at this time (located by bisection on the dense output).
    Stopped { t: f64, y: [f64; N] },
    Reached { t: f64, y: [f64; N] },
}

/// Integrates until `stop(t, y)` becomes true or `t_end` is reached.
pub fn solve_until<F, P, const N: usize>(
    rhs: F,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    opts: &OdeOptions,
    mut stop: P,
) -> Result<StopOutcome<N>>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
    P: FnMut(f64, &[f64; N]) -> bool,
{
    if stop(t0, &y0) {
        return Ok(StopOutcome::Stopped { t: t0, y: y0 });
    }
    let mut stepper = Stepper::new(rhs, t0, y0, t_end - t0, *opts);
    while stepper.t < t_end {
        let dense = stepper.step(t_end)?;
        if stop(stepper.t, &stepper.y) {
            let (mut lo, mut hi) = (dense.t0, dense.end());
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if stop(mid, &dense.eval(mid)) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            let y = if hi == dense.end() { stepper.y } else { dense.eval(hi) };
            return Ok(StopOutcome::Stopped { t: hi, y });
        }
    }
    Ok(StopOutcome::Reached {
        t: stepper.t,
        y: stepper.y,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_growth_dense_output() {
        let outs: Vec<f64> = (0..=100).map(|i| i as f64 * 0.05).collect();
        let sol = solve_at(|_, y: &[f64; 1]| [y[0]], 0.0, [1.0], &outs, &OdeOptions::default()).unwrap();
        for (t, y) in outs.iter().zip(&sol) {
            assert!((y[0] - t.exp()).abs() <= 1e-8 * t.exp(), "t={t}");
        }
    }

    #[test]
    fn harmonic_oscillator() {
        let outs: Vec<f64> = (1..=40).map(|i| i as f64 * 0.7).collect();
        let sol = solve_at(|_, y: &[f64; 2]| [y[1], -y[0]], 0.0, [0.0, 1.0], &outs, &OdeOptions::with_tolerance(1e-12)).unwrap();
        for (t, y) in outs.iter().zip(&sol) {
            assert!((y[0] - t.sin()).abs() < 1e-9);
            assert!((y[1] - t.cos()).abs() < 1e-9);
        }
    }

    #[test]
    fn stop_event_is_located() {
        // y' = y^2, y(0) = 1 blows up at t = 1; y = 1e4 at t = 1 - 1e-4.
        let out = solve_until(
            |_, y: &[f64; 1]| [y[0] * y[0]],
            0.0,
            [1.0],
            2.0,
            &OdeOptions::with_tolerance(1e-12),
            |_, y| y[0] >= 1e4,
        )
        .unwrap();
        match out {
            StopOutcome::Stopped { t, .. } => assert!((t - (1.0 - 1e-4)).abs() < 1e-9, "t = {t}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_unsorted_outputs() {
        assert!(solve_at(|_, y: &[f64; 1]| [y[0]], 0.0, [1.0], &[1.0, 0.5], &OdeOptions::default()).is_err());
    }
}
