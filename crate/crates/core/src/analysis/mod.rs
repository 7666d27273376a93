//! Parameter sweeps, optimal-dephasing search, fits and scaling checks.

mod correlations;
mod diffusion;
mod fit;
mod gamma_opt;
mod output;
mod sweep;

pub use correlations::{correlation_profile, first_sign_change, CorrelationPoint};
pub use diffusion::{diffusion_check, diffusion_point, DiffusionPoint, DiffusionResult};
pub use fit::{fit_power_law, fit_threshold, FitModel, FitResult};
pub use gamma_opt::{
    find_delta0, find_gamma_opt, find_gamma_opt_by, Delta0Estimate, GammaOptOptions, GammaOptResult,
};
pub use output::{csv_header, with_suffix, write_results, write_table, OutputMetadata, SCHEMA_VERSION};
pub use sweep::{run_sweep, SweepConfig, SweepRow};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::exact::{chain_ness_with, measure, ConvergenceReport, ExactSolveOptions, ObservableRecord};
use crate::model::ChainParameters;
use crate::mpo::{measure_mpo, run_to_ness_mpo, MpoSchedule, TruncationPolicy};

/// Which stationary-state solver handles a point.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverChoice {
    Exact,
    Mpo,
    /// Exact up to `exact_max_sites`, MPO beyond.
    #[default]
    Auto,
}

/// Settings for both solvers plus the size switch between them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverOptions {
    pub solver: SolverChoice,
    pub exact_max_sites: usize,
    pub exact: ExactSolveOptions,
    pub truncation: TruncationPolicy,
    pub schedule: MpoSchedule,
}

impl Default for SolverOptions {
    fn default() -> Self {
        let exact = ExactSolveOptions::default();
        Self {
            solver: SolverChoice::Auto,
            exact_max_sites: exact.nullspace_cap,
            exact,
            truncation: TruncationPolicy::default(),
            schedule: MpoSchedule::default(),
        }
    }
}

impl SolverOptions {
    pub fn uses_exact(&self, n_sites: usize) -> bool {
        match self.solver {
            SolverChoice::Exact => true,
            SolverChoice::Mpo => false,
            SolverChoice::Auto => n_sites <= self.exact_max_sites.min(self.exact.nullspace_cap),
        }
    }
}

/// One solved parameter point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointResult {
    pub params: ChainParameters,
    pub solver: String,
    pub record: ObservableRecord,
    pub report: ConvergenceReport,
}

/// Stationary state and observables at one parameter point.
pub fn solve_point(params: &ChainParameters, opts: &SolverOptions) -> Result<PointResult> {
    params.validate()?;
    if opts.uses_exact(params.n_sites) {
        let (rho, report) = chain_ness_with(params, &opts.exact)?;
        Ok(PointResult {
            params: *params,
            solver: "exact".into(),
            record: measure(&rho, params)?,
            report,
        })
    } else {
        let (state, report) = run_to_ness_mpo(params, &opts.truncation, &opts.schedule)?;
        Ok(PointResult {
            params: *params,
            solver: "mpo".into(),
            record: measure_mpo(&state, params)?,
            report,
        })
    }
}
