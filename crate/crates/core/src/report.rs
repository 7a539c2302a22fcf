//! Ratio reports and log-log slope fits shared by the experiments.

use serde::Serialize;

/// One point of a parameter sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    /// Swept parameter (`log₂ R`, `s₃ − r`, `s`, ...).
    pub x: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

/// Outcome of an inequality tester or sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioReport {
    pub kind: String,
    pub q: f64,
    pub nu: Option<f64>,
    pub scales: Vec<i64>,
    pub region: String,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    /// Fitted slope of `log₂ ratio` against the swept parameter; only from ≥ 4 points.
    pub exponent: Option<f64>,
    pub seed: u64,
    pub sweep: Vec<SweepPoint>,
    pub warnings: Vec<String>,
    /// Free-form detail such as the maximizing family member.
    pub detail: String,
}

impl RatioReport {
    pub fn new(kind: &str, q: f64, region: String, lhs: f64, rhs: f64, seed: u64) -> Self {
        Self {
            kind: kind.into(),
            q,
            nu: None,
            scales: Vec::new(),
            region,
            lhs,
            rhs,
            ratio: ratio(lhs, rhs),
            exponent: None,
            seed,
            sweep: Vec::new(),
            warnings: Vec::new(),
            detail: String::new(),
        }
    }

    /// Attach a sweep and fit `log₂ ratio` against `x`.
    pub fn with_sweep(mut self, sweep: Vec<SweepPoint>) -> Self {
        let xs: Vec<f64> = sweep.iter().map(|p| p.x).collect();
        let ys: Vec<f64> = sweep.iter().map(|p| p.ratio.log2()).collect();
        self.exponent = fit_slope(&xs, &ys);
        if let Some(last) = sweep.last() {
            self.lhs = last.lhs;
            self.rhs = last.rhs;
            self.ratio = last.ratio;
        }
        self.sweep = sweep;
        self
    }
}

/// `lhs/rhs`, with `0/0 = 0`.
pub fn ratio(lhs: f64, rhs: f64) -> f64 {
    if lhs == 0.0 {
        0.0
    } else {
        lhs / rhs
    }
}

/// Least-squares slope; `None` with fewer than four points or non-finite data.
pub fn fit_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() < 4 || x.len() != y.len() || x.iter().chain(y).any(|v| !v.is_finite()) {
        return None;
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_needs_four_points() {
        assert_eq!(fit_slope(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]), None);
        let s = fit_slope(&[1.0, 2.0, 3.0, 4.0], &[3.0, 1.0, -1.0, -3.0]).unwrap();
        assert!((s + 2.0).abs() < 1e-15);
    }

    #[test]
    fn zero_over_zero_is_zero() {
        assert_eq!(ratio(0.0, 0.0), 0.0);
        assert_eq!(RatioReport::new("t", 4.0, "ball".into(), 0.0, 0.0, 1).ratio, 0.0);
    }
}
