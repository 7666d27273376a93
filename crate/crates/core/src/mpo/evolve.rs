//! Long-time evolution to the stationary state.

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::checkpoint::{save_checkpoint, Checkpoint};
use super::gates::TrotterGates;
use super::measure::current_profile;
use super::{mpo_from_densities, mpo_from_product, mpo_identity, MpoState, TruncationPolicy};
use crate::error::{invalid, Error, Result};
use crate::exact::ness::homogeneity;
use crate::exact::ConvergenceReport;
use crate::model::ChainParameters;

/// Starting state of an evolution.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    Identity,
    /// Product of diag(1 − n_j, n_j) with n_j falling linearly across the
    /// chain in the direction the bias pushes particles.
    #[default]
    LinearProfile,
    Product(Vec<bool>),
    Densities(Vec<f64>),
    /// Product state with densities drawn uniformly from [0.05, 0.95].
    Random { seed: u64 },
}

impl InitialState {
    pub fn build(&self, params: &ChainParameters) -> Result<MpoState> {
        let n = params.n_sites;
        let state = match self {
            InitialState::Identity => mpo_identity(n)?,
            InitialState::LinearProfile => {
                let dens: Vec<f64> = (0..n)
                    .map(|j| 0.5 + 0.25 * params.bias * (1.0 - 2.0 * j as f64 / (n - 1) as f64))
                    .collect();
                mpo_from_densities(&dens)?
            }
            InitialState::Product(occ) => mpo_from_product(occ)?,
            InitialState::Densities(d) => mpo_from_densities(d)?,
            InitialState::Random { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let dens: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..0.95)).collect();
                mpo_from_densities(&dens)?
            }
        };
        if state.n_sites() != n {
            return Err(Error::DimensionMismatch(format!(
                "initial state on {} sites for a {n}-site chain",
                state.n_sites()
            )));
        }
        Ok(state)
    }
}

/// Time-step ladder and stopping rules.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MpoSchedule {
    /// Trotter steps, one stage each, run in order from the previous stage's state.
    pub time_steps: Vec<f64>,
    /// Model time between convergence checks.
    pub check_interval: f64,
    /// A stage stops once the probe-current drift per unit time and its
    /// geometric projection of the remaining change both fall below this.
    pub drift_tol: f64,
    /// Minimum model time per stage.
    pub min_time: f64,
    /// Maximum model time per stage.
    pub max_time: f64,
    /// Combine the last two stages as (r²ρ₂ − ρ₁)/(r² − 1), r = dt₁/dt₂,
    /// cancelling the leading O(dt²) splitting error of the fixed point.
    pub richardson: bool,
    pub initial: InitialState,
    /// Accumulated discarded weight beyond which the run is flagged.
    pub truncation_budget: f64,
    pub checkpoint: Option<PathBuf>,
    /// Model time between checkpoint writes.
    pub checkpoint_interval: f64,
}

impl Default for MpoSchedule {
    fn default() -> Self {
        Self {
            time_steps: vec![0.1, 0.05],
            check_interval: 1.0,
            drift_tol: 1e-7,
            min_time: 5.0,
            max_time: 5000.0,
            richardson: true,
            initial: InitialState::default(),
            truncation_budget: 1e-4,
            checkpoint: None,
            checkpoint_interval: 50.0,
        }
    }
}

impl MpoSchedule {
    pub fn validate(&self) -> Result<()> {
        if self.time_steps.is_empty() || self.time_steps.iter().any(|dt| !(dt.is_finite() && *dt > 0.0)) {
            return Err(invalid("time_steps must be a non-empty list of positive steps"));
        }
        if !(self.check_interval > 0.0 && self.max_time > 0.0 && self.drift_tol > 0.0) {
            return Err(invalid("check_interval, max_time and drift_tol must be positive"));
        }
        if self.min_time > self.max_time {
            return Err(invalid("min_time exceeds max_time"));
        }
        Ok(())
    }
}

fn probe_bonds(n_sites: usize) -> Vec<usize> {
    let mut b = vec![0, (n_sites - 1) / 2, n_sites - 2];
    b.dedup();
    b
}

/// Checks spanned by the decay-ratio estimate.
const RATIO_WINDOW: usize = 5;
/// Fraction of `drift_tol` below which the change rate counts as noise.
const NOISE_FLOOR: f64 = 1e-2;

/// Geometric projection c·r/(1 − r) of the change still to come, with the
/// per-check decay ratio r averaged over the last `RATIO_WINDOW` checks.
fn remaining_change(changes: &[f64]) -> f64 {
    let k = changes.len();
    if k <= RATIO_WINDOW {
        return f64::INFINITY;
    }
    let (last, first) = (changes[k - 1], changes[k - 1 - RATIO_WINDOW]);
    if !(first > 0.0 && last < first) {
        return f64::INFINITY;
    }
    let r = (last / first).powf(1.0 / RATIO_WINDOW as f64);
    last * r / (1.0 - r)
}

struct StageOutcome {
    converged: bool,
    time: f64,
    steps: usize,
    drift: f64,
}

fn run_stage(
    state: &mut MpoState,
    params: &ChainParameters,
    policy: &TruncationPolicy,
    schedule: &MpoSchedule,
    dt: f64,
    clock: &mut f64,
) -> Result<StageOutcome> {
    let gates = TrotterGates::new(params, dt)?;
    let per_check = ((schedule.check_interval / dt).round() as usize).max(1);
    let interval = per_check as f64 * dt;
    let probes = probe_bonds(params.n_sites);
    let sample = |s: &MpoState| {
        let profile = current_profile(s);
        probes.iter().map(|&b| profile[b]).collect::<Vec<f64>>()
    };
    let mut prev = sample(state);
    let mut changes: Vec<f64> = Vec::new();
    let (mut time, mut steps) = (0.0, 0usize);
    let mut next_checkpoint = schedule.checkpoint_interval;
    let mut drift = f64::INFINITY;
    while time < schedule.max_time {
        gates.evolve(state, per_check, policy)?;
        time += interval;
        *clock += interval;
        steps += per_check;
        let now = sample(state);
        if now.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidState(format!("MPO evolution diverged at t = {time}")));
        }
        let change = now.iter().zip(&prev).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prev = now;
        changes.push(change);
        let rate = change / interval;
        drift = rate.max(remaining_change(&changes));
        if let Some(path) = &schedule.checkpoint {
            if time >= next_checkpoint {
                save_checkpoint(path, &Checkpoint::new(state, params, policy, dt, *clock))?;
                next_checkpoint += schedule.checkpoint_interval;
            }
        }
        // Truncation noise puts a floor under the per-check change that the
        // tail estimate reads as stalled decay; far below tolerance, accept it.
        let settled = change < 1e-14 || drift < schedule.drift_tol || rate < NOISE_FLOOR * schedule.drift_tol;
        if time >= schedule.min_time && settled {
            return Ok(StageOutcome { converged: true, time, steps, drift });
        }
    }
    Ok(StageOutcome { converged: false, time, steps, drift })
}

/// Evolves from the schedule's initial state until the currents stop drifting.
pub fn run_to_ness_mpo(
    params: &ChainParameters,
    policy: &TruncationPolicy,
    schedule: &MpoSchedule,
) -> Result<(MpoState, ConvergenceReport)> {
    params.validate()?;
    let start = schedule.initial.build(params)?;
    run_to_ness_mpo_from(start, params, policy, schedule)
}

/// As [`run_to_ness_mpo`], starting from a given state (e.g. a checkpoint).
pub fn run_to_ness_mpo_from(
    start: MpoState,
    params: &ChainParameters,
    policy: &TruncationPolicy,
    schedule: &MpoSchedule,
) -> Result<(MpoState, ConvergenceReport)> {
    params.validate()?;
    policy.validate()?;
    schedule.validate()?;
    if start.n_sites() != params.n_sites {
        return Err(Error::DimensionMismatch(format!(
            "state on {} sites for a {}-site chain",
            start.n_sites(),
            params.n_sites
        )));
    }
    let mut state = start;
    state.normalize_trace()?;
    let mut clock = 0.0;
    let mut report = ConvergenceReport { method: "mpo-tebd".into(), ..Default::default() };
    let mut finals: Vec<(f64, MpoState)> = Vec::new();
    let mut converged = true;
    let mut drift = 0.0;
    for &dt in &schedule.time_steps {
        let out = run_stage(&mut state, params, policy, schedule, dt, &mut clock)?;
        report.steps += out.steps;
        report.notes.push(format!(
            "dt = {dt}: {} after t = {:.1}, drift {:.2e}, max bond {}",
            if out.converged { "settled" } else { "not settled" },
            out.time,
            out.drift,
            state.max_bond_dim()
        ));
        converged &= out.converged;
        drift = out.drift;
        finals.push((dt, state.clone()));
    }
    if schedule.richardson && finals.len() >= 2 {
        let (dt1, s1) = &finals[finals.len() - 2];
        let (dt2, s2) = &finals[finals.len() - 1];
        let r2 = (dt1 / dt2).powi(2);
        let mut combined = s2.linear_combination(r2 / (r2 - 1.0), s1, -1.0 / (r2 - 1.0), policy)?;
        combined.normalize_trace()?;
        state = combined;
        report.method = "mpo-tebd+richardson".into();
    }
    let profile = current_profile(&state);
    report.converged = converged;
    report.model_time = clock;
    report.residual = drift;
    report.homogeneity = homogeneity(&profile);
    report.truncation_weight = state.stats().discarded_weight;
    if state.stats().overflows > 0 {
        report.notes.push(format!(
            "chi_max = {} limited {} of {} truncations, worst discarded fraction {:.2e}",
            policy.chi_max,
            state.stats().overflows,
            state.stats().truncations,
            state.stats().max_discarded
        ));
    }
    if report.truncation_weight > schedule.truncation_budget {
        report.notes.push(format!(
            "accuracy loss: discarded weight {:.2e} exceeds budget {:.2e}",
            report.truncation_weight, schedule.truncation_budget
        ));
    }
    if let Some(path) = &schedule.checkpoint {
        let dt = *schedule.time_steps.last().expect("validated");
        save_checkpoint(path, &Checkpoint::new(&state, params, policy, dt, clock))?;
    }
    Ok((state, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::chain_ness;
    use crate::mpo::measure_mpo;

    #[test]
    fn small_chain_matches_exact() {
        let p = ChainParameters::new(4, 2.0, 0.5, 0.1);
        let (exact, _) = chain_ness(&p).unwrap();
        let sched = MpoSchedule {
            time_steps: vec![0.05, 0.025],
            drift_tol: 1e-10,
            ..Default::default()
        };
        let (state, report) = run_to_ness_mpo(&p, &TruncationPolicy::new(64, 1e-14), &sched).unwrap();
        assert!(report.converged, "{report:?}");
        let d = state.to_dense().unwrap().trace_distance(&exact).unwrap();
        assert!(d < 1e-6, "trace distance {d}");
        let jm = measure_mpo(&state, &p).unwrap().current;
        let je = crate::exact::measure(&exact, &p).unwrap().current;
        assert!((jm - je).abs() < 1e-6, "{jm} vs {je}");
    }
}
