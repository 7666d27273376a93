//! Power-law fits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitModel {
    /// y = prefactor · x^(−exponent), fitted linearly in log space.
    PurePower,
    /// y = prefactor · x^(−exponent) + offset, nonlinear least squares.
    PowerPlusOffset,
    /// y = prefactor · (x − offset)^exponent for x > offset, fitted in log space.
    ShiftedPower,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: FitModel,
    pub exponent: f64,
    pub prefactor: f64,
    pub offset: Option<f64>,
    /// Root-mean-square residual (log space for the log-space models).
    pub residual: f64,
}

impl FitResult {
    pub fn eval(&self, x: f64) -> f64 {
        match self.model {
            FitModel::PurePower => self.prefactor * x.powf(-self.exponent),
            FitModel::PowerPlusOffset => {
                self.prefactor * x.powf(-self.exponent) + self.offset.unwrap_or(0.0)
            }
            FitModel::ShiftedPower => {
                let d = x - self.offset.unwrap_or(0.0);
                if d > 0.0 {
                    self.prefactor * d.powf(self.exponent)
                } else {
                    0.0
                }
            }
        }
    }
}

fn check_inputs(xs: &[f64], ys: &[f64]) -> Result<()> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch(format!("{} x values, {} y values", xs.len(), ys.len())));
    }
    if xs.len() < 3 {
        return Err(Error::Fit(format!("need at least 3 points, got {}", xs.len())));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::Fit("non-finite data".into()));
    }
    Ok(())
}

/// Least-squares line v = c0 + c1 u; returns (c0, c1, rms residual).
fn line_fit(u: &[f64], v: &[f64]) -> (f64, f64, f64) {
    let n = u.len() as f64;
    let mu = u.iter().sum::<f64>() / n;
    let mv = v.iter().sum::<f64>() / n;
    let suu: f64 = u.iter().map(|x| (x - mu) * (x - mu)).sum();
    let suv: f64 = u.iter().zip(v).map(|(x, y)| (x - mu) * (y - mv)).sum();
    let c1 = if suu > 0.0 { suv / suu } else { 0.0 };
    let c0 = mv - c1 * mu;
    let rss: f64 = u.iter().zip(v).map(|(x, y)| (y - c0 - c1 * x).powi(2)).sum();
    (c0, c1, (rss / n).sqrt())
}

/// Golden-section minimization of a unimodal function on [a, b].
pub(crate) fn golden_min(mut a: f64, mut b: f64, tol: f64, f: impl Fn(f64) -> f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Scans a grid, then refines the best cell by golden section.
fn scan_then_refine(lo: f64, hi: f64, points: usize, tol: f64, f: impl Fn(f64) -> f64) -> f64 {
    let step = (hi - lo) / (points - 1) as f64;
    let (mut best, mut best_v) = (lo, f64::INFINITY);
    for i in 0..points {
        let x = lo + step * i as f64;
        let v = f(x);
        if v < best_v {
            best = x;
            best_v = v;
        }
    }
    golden_min((best - step).max(lo), (best + step).min(hi), tol, f)
}

/// Best (a, c) for y ≈ a·x^(−b) + c at fixed b, with the residual sum of squares.
fn offset_projection(xs: &[f64], ys: &[f64], b: f64) -> (f64, f64, f64) {
    let u: Vec<f64> = xs.iter().map(|x| x.powf(-b)).collect();
    let (c, a, rms) = line_fit(&u, ys);
    (a, c, rms * rms * xs.len() as f64)
}

pub fn fit_power_law(xs: &[f64], ys: &[f64], model: FitModel) -> Result<FitResult> {
    check_inputs(xs, ys)?;
    match model {
        FitModel::PurePower => {
            if xs.iter().chain(ys).any(|&v| v <= 0.0) {
                return Err(Error::Fit("log-space fit needs positive x and y".into()));
            }
            let u: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
            let v: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
            let (c0, c1, rms) = line_fit(&u, &v);
            Ok(FitResult { model, exponent: -c1, prefactor: c0.exp(), offset: None, residual: rms })
        }
        FitModel::PowerPlusOffset => {
            if xs.iter().any(|&v| v <= 0.0) {
                return Err(Error::Fit("power-law fit needs positive x".into()));
            }
            // Variable projection: the amplitude and offset are linear for fixed exponent.
            let b = scan_then_refine(1e-3, 8.0, 800, 1e-13, |b| offset_projection(xs, ys, b).2);
            let (a, c, rss) = offset_projection(xs, ys, b);
            Ok(FitResult {
                model,
                exponent: b,
                prefactor: a,
                offset: Some(c),
                residual: (rss / xs.len() as f64).sqrt(),
            })
        }
        FitModel::ShiftedPower => fit_threshold(xs, ys),
    }
}

/// y = c₁(x − x₀)^β over points with y > 0, x₀ below every such x.
pub fn fit_threshold(xs: &[f64], ys: &[f64]) -> Result<FitResult> {
    check_inputs(xs, ys)?;
    let pts: Vec<(f64, f64)> = xs.iter().zip(ys).filter(|(_, &y)| y > 0.0).map(|(&x, &y)| (x, y)).collect();
    if pts.len() < 3 {
        return Err(Error::Fit("threshold fit needs at least 3 points above threshold".into()));
    }
    let xmin = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let xmax = pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let span = (xmax - xmin).max(1e-12);
    let v: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let fit_at = |x0: f64| {
        let u: Vec<f64> = pts.iter().map(|p| (p.0 - x0).ln()).collect();
        line_fit(&u, &v)
    };
    // Search x₀ in a window below the smallest abscissa, stopping short of it.
    let lo = xmin - 10.0 * span;
    let hi = xmin - 1e-9 * span;
    let x0 = scan_then_refine(lo, hi, 2000, 1e-12 * span, |x0| fit_at(x0).2);
    let (c0, c1, rms) = fit_at(x0);
    Ok(FitResult {
        model: FitModel::ShiftedPower,
        exponent: c1,
        prefactor: c0.exp(),
        offset: Some(x0),
        residual: rms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_power_synthetic() {
        let xs: Vec<f64> = (1..=6).map(|k| k as f64 * 3.0).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 / x).collect();
        let f = fit_power_law(&xs, &ys, FitModel::PurePower).unwrap();
        assert!((f.prefactor - 2.0).abs() < 1e-10 && (f.exponent - 1.0).abs() < 1e-10);
        assert!(f.residual < 1e-12);
    }

    #[test]
    fn offset_synthetic() {
        let xs: Vec<f64> = [4.0, 6.0, 8.0, 12.0, 16.0, 24.0, 32.0, 40.0].to_vec();
        let ys: Vec<f64> = xs.iter().map(|x| 3.906 * x.powf(-1.066) + 0.995).collect();
        let f = fit_power_law(&xs, &ys, FitModel::PowerPlusOffset).unwrap();
        assert!((f.prefactor - 3.906).abs() < 1e-4, "{f:?}");
        assert!((f.exponent - 1.066).abs() < 1e-4);
        assert!((f.offset.unwrap() - 0.995).abs() < 1e-4);
    }

    #[test]
    fn threshold_synthetic() {
        let xs: Vec<f64> = vec![0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 5.0];
        let ys: Vec<f64> =
            xs.iter().map(|&x| if x > 1.07 { 0.3 * (x - 1.07f64).powf(0.819) } else { 0.0 }).collect();
        let f = fit_threshold(&xs, &ys).unwrap();
        assert!((f.offset.unwrap() - 1.07).abs() < 1e-5, "{f:?}");
        assert!((f.exponent - 0.819).abs() < 1e-5);
        assert!((f.eval(3.0) - ys[4]).abs() < 1e-8);
    }

    #[test]
    fn rejects_bad_data() {
        assert!(fit_power_law(&[1.0, 2.0], &[1.0, 2.0], FitModel::PurePower).is_err());
        assert!(fit_power_law(&[1.0, 2.0, 3.0], &[1.0, -2.0, 3.0], FitModel::PurePower).is_err());
    }
}
