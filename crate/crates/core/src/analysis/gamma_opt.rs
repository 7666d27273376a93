//! Search for the dephasing rate that maximizes the stationary current.

use serde::{Deserialize, Serialize};

use super::fit::{fit_threshold, FitResult};
use super::{solve_point, SolverOptions};
use crate::error::{invalid, Error, Result};
use crate::model::ChainParameters;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GammaOptOptions {
    /// Coarse grid evaluated before refinement; must start at 0 and increase.
    pub prescan: Vec<f64>,
    /// Bracket width at which the golden-section search stops.
    pub tol: f64,
    /// Relative slack when checking the prescan for a single peak.
    pub unimodal_slack: f64,
}

impl Default for GammaOptOptions {
    fn default() -> Self {
        let mut prescan = vec![0.0];
        prescan.extend((0..8).map(|k| 10f64.powf(-3.0 + 4.0 * k as f64 / 7.0)));
        Self { prescan, tol: 1e-3, unimodal_slack: 1e-9 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaOptResult {
    pub gamma_opt: f64,
    /// max |⟨J⟩| found.
    pub current_max: f64,
    /// |⟨J⟩| at every evaluated γ, sorted by γ.
    pub scan: Vec<(f64, f64)>,
}

/// Maximizes `current(γ)` (already taken in absolute value) over γ ≥ 0.
pub fn find_gamma_opt_by(
    mut current: impl FnMut(f64) -> Result<f64>,
    opts: &GammaOptOptions,
) -> Result<GammaOptResult> {
    let grid = &opts.prescan;
    if grid.len() < 3 || grid[0] != 0.0 || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("prescan must start at 0, increase, and hold at least 3 points"));
    }
    let mut scan: Vec<(f64, f64)> = Vec::new();
    for &g in grid {
        scan.push((g, current(g)?));
    }
    let k = (0..scan.len())
        .max_by(|&a, &b| scan[a].1.partial_cmp(&scan[b].1).expect("finite currents"))
        .expect("non-empty scan");
    let peak = scan[k].1;
    let slack = opts.unimodal_slack * peak.abs().max(f64::MIN_POSITIVE);
    let rising = scan[..=k].windows(2).all(|w| w[1].1 >= w[0].1 - slack);
    let falling = scan[k..].windows(2).all(|w| w[1].1 <= w[0].1 + slack);
    if !(rising && falling) {
        return Err(Error::NonUnimodal {
            message: "|⟨J⟩| is not single-peaked on the prescan grid".into(),
            scan,
        });
    }
    if k + 1 == scan.len() {
        return Err(Error::NonUnimodal {
            message: format!("|⟨J⟩| still rising at γ = {}; extend the prescan", scan[k].0),
            scan,
        });
    }
    let (mut a, mut b) = (scan[k.saturating_sub(1)].0, scan[k + 1].0);
    if k == 0 && b <= opts.tol {
        scan.sort_by(|x, y| x.0.total_cmp(&y.0));
        return Ok(GammaOptResult { gamma_opt: 0.0, current_max: peak, scan });
    }
    // Golden-section maximization inside the bracket around the prescan peak.
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = current(c)?;
    let mut fd = current(d)?;
    scan.push((c, fc));
    scan.push((d, fd));
    while b - a > opts.tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = current(c)?;
            scan.push((c, fc));
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = current(d)?;
            scan.push((d, fd));
        }
    }
    scan.sort_by(|x, y| x.0.total_cmp(&y.0));
    let best = scan
        .iter()
        .copied()
        .max_by(|x, y| x.1.total_cmp(&y.1))
        .expect("non-empty scan");
    // A peak within one tolerance of the γ = 0 edge is the degrading regime.
    let gamma_opt = if k == 0 && best.0 <= opts.tol { 0.0 } else { best.0 };
    let current_max = if gamma_opt == 0.0 { scan[0].1 } else { best.1 };
    Ok(GammaOptResult { gamma_opt, current_max, scan })
}

/// γ_opt for the chain at `base` (its dephasing field is ignored).
pub fn find_gamma_opt(
    base: &ChainParameters,
    solver: &SolverOptions,
    opts: &GammaOptOptions,
) -> Result<GammaOptResult> {
    base.validate()?;
    find_gamma_opt_by(
        |g| {
            let p = base.with_dephasing(g);
            let point = solve_point(&p, solver)?;
            point.report.require_converged()?;
            Ok(point.record.current.abs())
        },
        opts,
    )
}

/// Both estimates of the onset Δ₀ of dephasing enhancement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Delta0Estimate {
    /// Bisection on the γ_opt = 0 boundary.
    pub bisection: f64,
    /// Fit of γ_opt(Δ) = c₁(Δ − Δ₀)^β over the supplied Δ values with γ_opt > 0.
    pub fit: Option<FitResult>,
    /// (Δ, γ_opt) pairs evaluated.
    pub samples: Vec<(f64, f64)>,
}

/// Locates Δ₀ between `lo` (no enhancement) and `hi` (enhancement), and fits
/// the threshold form to γ_opt on `fit_deltas`.
pub fn find_delta0(
    base: &ChainParameters,
    solver: &SolverOptions,
    opts: &GammaOptOptions,
    (mut lo, mut hi): (f64, f64),
    tol: f64,
    fit_deltas: &[f64],
) -> Result<Delta0Estimate> {
    let mut samples = Vec::new();
    let gamma_at = |delta: f64, samples: &mut Vec<(f64, f64)>| -> Result<f64> {
        let g = find_gamma_opt(&base.with_interaction(delta), solver, opts)?.gamma_opt;
        samples.push((delta, g));
        Ok(g)
    };
    if gamma_at(lo, &mut samples)? > 0.0 || gamma_at(hi, &mut samples)? == 0.0 {
        return Err(invalid(format!("[{lo}, {hi}] does not bracket the onset of enhancement")));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if gamma_at(mid, &mut samples)? > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let mut pts = Vec::new();
    for &d in fit_deltas {
        pts.push((d, gamma_at(d, &mut samples)?));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    let fit = fit_threshold(&xs, &ys).ok();
    samples.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(Delta0Estimate { bisection: 0.5 * (lo + hi), fit, samples })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interior_peak() {
        let r = find_gamma_opt_by(|g| Ok(g / (1.0 + g * g / 0.09)), &GammaOptOptions::default()).unwrap();
        assert!((r.gamma_opt - 0.3).abs() < 1e-3, "{r:?}");
    }

    #[test]
    fn boundary_peak_is_zero() {
        let r = find_gamma_opt_by(|g| Ok(1.0 / (1.0 + 7.0 * g)), &GammaOptOptions::default()).unwrap();
        assert_eq!(r.gamma_opt, 0.0);
        assert_eq!(r.current_max, 1.0);
    }

    #[test]
    fn two_peaks_are_rejected() {
        let f = |g: f64| Ok((-(g - 0.01f64).powi(2) / 1e-5).exp() + (-(g - 2.0f64).powi(2)).exp());
        assert!(matches!(
            find_gamma_opt_by(f, &GammaOptOptions::default()),
            Err(Error::NonUnimodal { .. })
        ));
    }
}
