use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::LifespanLaw;

use super::sweep::{calibrate, SweepRecord};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LawKind {
    /// `ln T` against `ln(1/eps)`.
    Polynomial,
    /// `ln ln T` against `ln(1/eps)`.
    Exponential,
}

impl LawKind {
    pub fn of(law: &LifespanLaw) -> Self {
        match law {
            LifespanLaw::Polynomial { .. } => LawKind::Polynomial,
            LifespanLaw::Exponential { .. } => LawKind::Exponential,
        }
    }
}

impl std::str::FromStr for LawKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "polynomial" | "poly" => Ok(LawKind::Polynomial),
            "exponential" | "exp" => Ok(LawKind::Exponential),
            other => Err(Error::invalid(format!("unknown law {other:?} (polynomial|exponential)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub slope_se: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares `y = intercept + slope x`.
pub fn ols(x: &[f64], y: &[f64]) -> Result<LineFit> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return Err(Error::invalid("least squares needs at least two paired points"));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("abscissae are all equal"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let slope_se = if n > 2 { (sse / (nf - 2.0) / sxx).sqrt() } else { f64::NAN };
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - sse / syy };
    Ok(LineFit {
        slope,
        slope_se,
        intercept,
        r_squared,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub law: LawKind,
    pub exponent: f64,
    pub exponent_se: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// `R^2` of the polynomial and exponential candidates on the same records.
    pub r_squared_polynomial: Option<f64>,
    pub r_squared_exponential: Option<f64>,
    pub theoretical: Option<LifespanLaw>,
    /// `exponent <= theoretical + tolerance`; the theorems give upper bounds only.
    pub consistent: Option<bool>,
    pub tolerance: f64,
    pub used: usize,
    pub excluded: Vec<f64>,
}

fn transformed(records: &[(f64, f64)], law: LawKind) -> Option<(Vec<f64>, Vec<f64>)> {
    let x = records.iter().map(|(e, _)| -e.ln()).collect();
    let y: Vec<f64> = match law {
        LawKind::Polynomial => records.iter().map(|(_, t)| t.ln()).collect(),
        LawKind::Exponential => {
            if records.iter().any(|(_, t)| *t <= 1.0) {
                return None;
            }
            records.iter().map(|(_, t)| t.ln().ln()).collect()
        }
    };
    Some((x, y))
}

/// Fits the lifespan law to the usable records (blew up, cone passed, no error).
///
/// Requires at least 4 usable records spanning 1.5 decades in `eps`.
pub fn fit_lifespan(
    records: &[SweepRecord],
    law: LawKind,
    theoretical: Option<LifespanLaw>,
    tolerance: f64,
) -> Result<FitResult> {
    let mut pts = Vec::new();
    let mut excluded = Vec::new();
    for r in records {
        match (r.usable(), r.t_blow) {
            (true, Some(t)) => pts.push((r.epsilon, t)),
            _ => excluded.push(r.epsilon),
        }
    }
    if pts.len() < 4 {
        return Err(Error::InsufficientSpan(format!("{} usable records; at least 4 needed", pts.len())));
    }
    let hi = pts.iter().map(|p| p.0).fold(f64::MIN, f64::max);
    let lo = pts.iter().map(|p| p.0).fold(f64::MAX, f64::min);
    let decades = (hi / lo).log10();
    if decades < 1.5 - 1e-12 {
        return Err(Error::InsufficientSpan(format!(
            "usable records span {decades:.3} decades in eps; 1.5 needed"
        )));
    }
    let (x, y) = transformed(&pts, law)
        .ok_or_else(|| Error::invalid("exponential fit needs every T > 1"))?;
    let fit = ols(&x, &y)?;
    let r2 = |k| transformed(&pts, k).and_then(|(x, y)| ols(&x, &y).ok()).map(|f| f.r_squared);
    let consistent = theoretical
        .filter(|t| LawKind::of(t) == law)
        .map(|t| fit.slope <= t.exponent() + tolerance);
    Ok(FitResult {
        law,
        exponent: fit.slope,
        exponent_se: fit.slope_se,
        intercept: fit.intercept,
        r_squared: fit.r_squared,
        r_squared_polynomial: r2(LawKind::Polynomial),
        r_squared_exponential: r2(LawKind::Exponential),
        theoretical,
        consistent,
        tolerance,
        used: pts.len(),
        excluded,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginPoint {
    pub epsilon: f64,
    pub t_blow: f64,
    pub uncertainty: f64,
    /// `C law(eps)` with `C` from the largest amplitude.
    pub bound: f64,
    /// `1 - T / bound`; negative when the measurement exceeds the calibrated law.
    pub margin: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub pass: bool,
    pub law: LifespanLaw,
    pub constant: f64,
    pub slack: f64,
    pub margins: Vec<MarginPoint>,
    /// Amplitudes whose lifespan exceeds the slackened bound.
    pub failures: Vec<f64>,
}

/// Checks `T(eps) <= (1 + slack) C law(eps) + uncertainty` for every usable record,
/// with `C` calibrated on the largest usable amplitude. This tests consistency
/// with an upper bound, not sharpness.
pub fn compare_theorem(records: &[SweepRecord], law: LifespanLaw, slack: f64) -> Result<Verdict> {
    let mut pts: Vec<&SweepRecord> = records.iter().filter(|r| r.usable()).collect();
    pts.sort_by(|a, b| b.epsilon.total_cmp(&a.epsilon));
    let first = pts.first().ok_or_else(|| Error::InsufficientSpan("no usable records".into()))?;
    let constant = calibrate(&law, first.epsilon, first.t_blow.unwrap_or(f64::NAN));
    let mut margins = Vec::with_capacity(pts.len());
    let mut failures = Vec::new();
    for r in pts {
        let t = r.t_blow.unwrap_or(f64::NAN);
        let unc = r.uncertainty.unwrap_or(0.0);
        let bound = law.log_lifespan(r.epsilon, constant).exp();
        // Round-off allowance so records exactly on the law pass at zero slack.
        let pass = t <= ((1.0 + slack) * bound + unc) * (1.0 + 1e-12);
        if !pass {
            failures.push(r.epsilon);
        }
        margins.push(MarginPoint {
            epsilon: r.epsilon,
            t_blow: t,
            uncertainty: unc,
            bound,
            margin: 1.0 - t / bound,
            pass,
        });
    }
    Ok(Verdict {
        pass: failures.is_empty(),
        law,
        constant,
        slack,
        margins,
        failures,
    })
}
