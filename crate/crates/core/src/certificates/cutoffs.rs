use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `exp(-1/x)` for `x > 0`, else 0, with its first two derivatives.
fn mollifier(x: f64) -> (f64, f64, f64) {
    if x <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let f = (-1.0 / x).exp();
    let x2 = x * x;
    (f, f / x2, f * (1.0 - 2.0 * x) / (x2 * x2))
}

/// Smooth step `S(x) = f(x) / (f(x) + f(1 - x))`: 0 for `x <= 0`, 1 for `x >= 1`,
/// returned with `S'` and `S''`.
pub fn smooth_step(x: f64) -> (f64, f64, f64) {
    if x <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    if x >= 1.0 {
        return (1.0, 0.0, 0.0);
    }
    let (a, a1, a2) = mollifier(x);
    let (b, b1, b2) = mollifier(1.0 - x);
    let g = a + b;
    let g1 = a1 - b1;
    let g2 = a2 + b2;
    let s = a / g;
    let s1 = (a1 * g - a * g1) / (g * g);
    let s2 = (a2 * g - a * g2) / (g * g) - 2.0 * g1 * s1 / g;
    (s, s1, s2)
}

/// Value, first and second derivative of a scalar function at a point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Jet {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Jet {
    fn scaled(self, scale: f64) -> Self {
        Self {
            value: self.value,
            d1: self.d1 / scale,
            d2: self.d2 / (scale * scale),
        }
    }

    fn falling((s, s1, s2): (f64, f64, f64), width: f64) -> Self {
        Self {
            value: 1.0 - s,
            d1: -s1 / width,
            d2: -s2 / (width * width),
        }
    }

    fn rising((s, s1, s2): (f64, f64, f64), width: f64) -> Self {
        Self {
            value: s,
            d1: s1 / width,
            d2: s2 / (width * width),
        }
    }

    /// `c^q` and its derivatives.
    pub fn pow(self, q: f64) -> Self {
        let c = self.value;
        if c == 0.0 {
            return Self { value: 0.0, d1: 0.0, d2: 0.0 };
        }
        Self {
            value: c.powf(q),
            d1: q * c.powf(q - 1.0) * self.d1,
            d2: q * (q - 1.0) * c.powf(q - 2.0) * self.d1 * self.d1 + q * c.powf(q - 1.0) * self.d2,
        }
    }
}

/// Time cutoff: 1 on `[0, 1/3]`, 0 on `[1, inf)`.
pub fn eta(t: f64) -> Jet {
    Jet::falling(smooth_step((t - 1.0 / 3.0) / (2.0 / 3.0)), 2.0 / 3.0)
}

/// Space cutoff: 0 on `(-inf, 1/8]`, 1 on `[1/4, inf)`.
pub fn alpha(s: f64) -> Jet {
    Jet::rising(smooth_step((s - 0.125) / 0.125), 0.125)
}

/// Cone cutoff: 1 on `[0, 3/4]`, 0 on `[5/6, inf)`.
pub fn chi(rho: f64) -> Jet {
    Jet::falling(smooth_step((rho - 0.75) / (1.0 / 12.0)), 1.0 / 12.0)
}

/// The three cutoffs rescaled by `T` and raised to `2p'`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cutoffs {
    pub horizon: f64,
    pub p: f64,
    /// `2p' = 2p / (p - 1)`.
    pub power: f64,
}

impl Cutoffs {
    pub fn eta(&self, t: f64) -> Jet {
        eta(t / self.horizon).scaled(self.horizon)
    }

    pub fn alpha(&self, s: f64) -> Jet {
        alpha(s / self.horizon).scaled(self.horizon)
    }

    pub fn chi(&self, rho: f64) -> Jet {
        chi(rho / self.horizon).scaled(self.horizon)
    }

    pub fn eta_pow(&self, t: f64) -> Jet {
        self.eta(t).pow(self.power)
    }

    pub fn alpha_pow(&self, s: f64) -> Jet {
        self.alpha(s).pow(self.power)
    }

    pub fn chi_pow(&self, rho: f64) -> Jet {
        self.chi(rho).pow(self.power)
    }

    /// Largest `T |d_t eta_T^{2p'}| / eta_T^{2p'-2}` and `T^2 |d_t^2 eta_T^{2p'}| / eta_T^{2p'-2}`
    /// over `samples` points of `(0, T)`.
    pub fn derivative_loss(&self, samples: usize) -> (f64, f64) {
        let (mut c1, mut c2) = (0.0f64, 0.0f64);
        for i in 1..samples {
            let t = self.horizon * i as f64 / samples as f64;
            let base = self.eta(t).value;
            if base == 0.0 {
                continue;
            }
            let jet = self.eta_pow(t);
            let denom = base.powf(self.power - 2.0);
            c1 = c1.max(self.horizon * jet.d1.abs() / denom);
            c2 = c2.max(self.horizon * self.horizon * jet.d2.abs() / denom);
        }
        (c1, c2)
    }
}

pub fn make_cutoffs(horizon: f64, p: f64) -> Result<Cutoffs> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::invalid(format!("cutoff horizon T > 0 required (got {horizon})")));
    }
    if !(p > 1.0) {
        return Err(Error::invalid(format!("p > 1 required (got {p})")));
    }
    Ok(Cutoffs {
        horizon,
        p,
        power: 2.0 * p / (p - 1.0),
    })
}
