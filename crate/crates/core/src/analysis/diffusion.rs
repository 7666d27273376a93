//! Size scaling of the bulk current-to-gradient ratio.

use serde::{Deserialize, Serialize};

use super::fit::{fit_power_law, FitModel, FitResult};
use super::{solve_point, SolverOptions};
use crate::error::{invalid, Result};
use crate::model::ChainParameters;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiffusionPoint {
    pub n_sites: usize,
    pub current: f64,
    /// ⟨n_2⟩ − ⟨n_{N−1}⟩.
    pub density_drop: f64,
    /// −⟨J⟩ / Δn.
    pub ratio: f64,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiffusionResult {
    pub points: Vec<DiffusionPoint>,
    /// ratio = κ (N − 3)^(−α).
    pub fit: FitResult,
}

/// Ratio for one chain; needs N ≥ 5 so the bulk has at least two bonds.
pub fn diffusion_point(params: &ChainParameters, solver: &SolverOptions) -> Result<DiffusionPoint> {
    if params.n_sites < 5 {
        return Err(invalid(format!("diffusion ratio needs N >= 5, got {}", params.n_sites)));
    }
    let pt = solve_point(params, solver)?;
    let drop = pt.record.bulk_density_drop();
    if drop == 0.0 {
        return Err(invalid("zero bulk density drop; the chain is not driven"));
    }
    Ok(DiffusionPoint {
        n_sites: params.n_sites,
        current: pt.record.current,
        density_drop: drop,
        ratio: -pt.record.current / drop,
        converged: pt.report.converged,
    })
}

/// Solves each size, then fits the ratio against the bulk length N − 3.
pub fn diffusion_check(
    base: &ChainParameters,
    sizes: &[usize],
    solver: &SolverOptions,
) -> Result<DiffusionResult> {
    let points = sizes
        .iter()
        .map(|&n| {
            let mut p = *base;
            p.n_sites = n;
            diffusion_point(&p, solver)
        })
        .collect::<Result<Vec<_>>>()?;
    let xs: Vec<f64> = points.iter().map(|p| (p.n_sites - 3) as f64).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.ratio).collect();
    let fit = fit_power_law(&xs, &ys, FitModel::PurePower)?;
    Ok(DiffusionResult { points, fit })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn short_chain_rejected() {
        let p = ChainParameters::new(4, 1.0, 1.0, 1.0);
        assert!(diffusion_point(&p, &SolverOptions::default()).is_err());
    }
}
