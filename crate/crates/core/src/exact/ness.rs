//! Stationary states of a vectorized generator.

use ndarray::{Array1, Array2};
use ndarray_linalg::{FactorizeInto, OperationNorm, ReciprocalConditionNum, Solve, NormType};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::density::DensityMatrix;
use crate::exact::krylov::{gmres, GmresOptions, LinearMap};
use crate::exact::precond::{BorderedGenerator, SchurPreconditioner, SylvesterPreconditioner};
use crate::exact::superop::{
    chain_superoperator, inf_norm, Layout, SparseSuperoperator, DEFAULT_VECTORIZE_CAP,
};
use crate::model::ChainParameters;

/// Default cap on N for stationary-state solves.
pub const DEFAULT_NULLSPACE_CAP: usize = 8;

/// Outcome diagnostics shared by every solver.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub converged: bool,
    pub method: String,
    /// Model time reached (time evolution only).
    pub model_time: f64,
    /// Integrator steps or solver iterations.
    pub steps: usize,
    /// ‖M vec ρ‖∞ of the returned state.
    pub residual: f64,
    /// max_j |⟨J_j⟩ − mean|, zero when no current probes are attached.
    pub homogeneity: f64,
    /// Accumulated discarded weight (MPO runs).
    pub truncation_weight: f64,
    pub notes: Vec<String>,
}

impl ConvergenceReport {
    /// Turns a non-converged report into an error.
    pub fn require_converged(&self) -> Result<()> {
        if self.converged {
            Ok(())
        } else {
            Err(Error::NotConverged(format!(
                "{} stopped at residual {:.3e}, homogeneity {:.3e}",
                self.method, self.residual, self.homogeneity
            )))
        }
    }
}

pub(crate) fn homogeneity(currents: &[f64]) -> f64 {
    if currents.is_empty() {
        return 0.0;
    }
    let mean = currents.iter().sum::<f64>() / currents.len() as f64;
    currents.iter().map(|c| (c - mean).abs()).fold(0.0, f64::max)
}

/// Time-integration controls.
#[derive(Clone, Debug)]
pub struct EvolveOptions {
    /// Fixed step, or the initial step in adaptive mode.
    pub step: f64,
    pub tol: f64,
    pub max_time: f64,
    /// Dormand-Prince 5(4) with error control instead of fixed-step RK4.
    pub adaptive: bool,
    /// Steps between convergence checks (fixed-step mode).
    pub check_every: usize,
    /// Check trace, Hermiticity and positivity at every convergence check.
    pub validate_states: bool,
}

impl EvolveOptions {
    pub fn new(step: f64, tol: f64, max_time: f64) -> Self {
        Self {
            step,
            tol,
            max_time,
            adaptive: false,
            check_every: 10,
            validate_states: false,
        }
    }
}

/// Step bound 0.05 / (‖H‖ scale + Γ + Nγ).
pub fn default_step(params: &ChainParameters) -> f64 {
    0.05 / params.rate_scale()
}

fn axpy(out: &mut [C64], x: &[C64], a: f64, y: &[C64]) {
    for ((o, xi), yi) in out.iter_mut().zip(x).zip(y) {
        *o = xi + yi * a;
    }
}

fn to_state(op: &SparseSuperoperator, v: &[C64]) -> Result<DensityMatrix> {
    DensityMatrix::from_raw(op.space().unvectorize(v))
}

/// Integrates dρ/dt = L(ρ) from ρ0 until ‖M vec ρ‖∞ ≤ tol and the bond
/// currents agree to within tol. Reaching `max_time` first is reported through
/// `converged = false` rather than an error.
pub fn evolve_to_ness(
    op: &SparseSuperoperator,
    rho0: &DensityMatrix,
    opts: &EvolveOptions,
) -> Result<(DensityMatrix, ConvergenceReport)> {
    if !(opts.step > 0.0) || !(opts.tol > 0.0) || !(opts.max_time > 0.0) {
        return Err(Error::InvalidParameter(
            "step, tol and max_time must be positive".into(),
        ));
    }
    rho0.validate()?;
    let mut v = op.space().vectorize(rho0)?;
    let n = v.len();
    let zero = C64::new(0.0, 0.0);
    let mut k = vec![vec![zero; n]; 7];
    let mut tmp = vec![zero; n];
    let mut t = 0.0;
    let mut steps = 0usize;
    let mut h = opts.step;
    let mut report = ConvergenceReport {
        method: if opts.adaptive { "dopri5" } else { "rk4" }.into(),
        ..Default::default()
    };

    let check = |v: &[C64], deriv: &[C64], report: &mut ConvergenceReport| -> Result<bool> {
        report.residual = inf_norm(deriv);
        report.homogeneity = homogeneity(&op.bond_currents(v));
        if opts.validate_states {
            to_state(op, v)?.validate()?;
        }
        Ok(report.residual <= opts.tol && report.homogeneity <= opts.tol)
    };

    op.apply(&v, &mut k[0]);
    if !opts.adaptive {
        loop {
            if steps % opts.check_every.max(1) == 0 || t >= opts.max_time {
                if check(&v, &k[0], &mut report)? {
                    report.converged = true;
                    break;
                }
                if t >= opts.max_time {
                    break;
                }
            }
            axpy(&mut tmp, &v, 0.5 * h, &k[0]);
            op.apply(&tmp, &mut k[1]);
            axpy(&mut tmp, &v, 0.5 * h, &k[1]);
            op.apply(&tmp, &mut k[2]);
            axpy(&mut tmp, &v, h, &k[2]);
            op.apply(&tmp, &mut k[3]);
            for i in 0..n {
                v[i] += (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]) * (h / 6.0);
            }
            t += h;
            steps += 1;
            op.apply(&v, &mut k[0]);
        }
    } else {
        // Dormand-Prince 5(4) tableau; the generator is autonomous so the
        // node times are not needed.
        const A: [[f64; 6]; 7] = [
            [0.0; 6],
            [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
            [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
            [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
            [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
            [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
            [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
        ];
        const E: [f64; 7] = [
            71.0 / 57600.0,
            0.0,
            -71.0 / 16695.0,
            71.0 / 1920.0,
            -17253.0 / 339200.0,
            22.0 / 525.0,
            -1.0 / 40.0,
        ];
        // Error-control noise shows up in the residual amplified by ‖M‖, so
        // the local tolerance sits well below the convergence target.
        let (atol, rtol) = (1e-3 * opts.tol, 1e-10);
        let mut y5 = vec![zero; n];
        loop {
            if check(&v, &k[0], &mut report)? {
                report.converged = true;
                break;
            }
            if t >= opts.max_time {
                break;
            }
            for s in 1..7 {
                for i in 0..n {
                    let mut acc = v[i];
                    for (j, kj) in k.iter().enumerate().take(s) {
                        if A[s][j] != 0.0 {
                            acc += kj[i] * (h * A[s][j]);
                        }
                    }
                    tmp[i] = acc;
                }
                op.apply(&tmp, &mut k[s]);
                if s == 6 {
                    y5.copy_from_slice(&tmp);
                }
            }
            let scale = atol.min(rtol * inf_norm(&v)).max(1e-15);
            let mut err: f64 = 0.0;
            for i in 0..n {
                let mut e = C64::new(0.0, 0.0);
                for (s, ks) in k.iter().enumerate() {
                    e += ks[i] * E[s];
                }
                err = err.max((e * h).norm() / scale);
            }
            if err <= 1.0 {
                t += h;
                steps += 1;
                v.copy_from_slice(&y5);
                let last = k[6].clone();
                k[0].copy_from_slice(&last);
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h = (h * factor).min(opts.max_time.max(h));
        }
    }
    report.model_time = t;
    report.steps = steps;
    let mut rho = to_state(op, &v)?;
    rho.hermitize_normalize()?;
    Ok((rho, report))
}

/// Preconditioner order for the iterative stationary solve.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PreconditionerChoice {
    /// Pick by dephasing strength, falling back to the other one.
    Auto,
    Sylvester,
    Schur,
}

/// Controls for [`ness_nullspace_with`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NullspaceOptions {
    /// Generators up to this dimension are solved by dense LU.
    pub dense_limit: usize,
    /// Relative residual target of the bordered iterative solve.
    pub tol: f64,
    pub restart: usize,
    /// Iteration budget per preconditioner attempt.
    pub max_iter: usize,
    pub preconditioner: PreconditionerChoice,
    /// Above this dimension the sparse-LU fallback is skipped.
    pub direct_limit: usize,
    /// Smallest admissible singular-value estimate of the bordered matrix.
    pub degeneracy_tol: f64,
}

impl Default for NullspaceOptions {
    fn default() -> Self {
        Self {
            dense_limit: 1024,
            tol: 1e-12,
            restart: 60,
            max_iter: 1500,
            preconditioner: PreconditionerChoice::Auto,
            direct_limit: 20_000,
            degeneracy_tol: 1e-10,
        }
    }
}

/// Dephasing rate above which the Schur preconditioner is tried first.
const SCHUR_FIRST_DEPHASING: f64 = 0.2;

/// Unique stationary state, Hermitized and trace-normalized.
pub fn ness_nullspace(op: &SparseSuperoperator) -> Result<(DensityMatrix, ConvergenceReport)> {
    ness_nullspace_with(op, &NullspaceOptions::default())
}

pub fn ness_nullspace_with(
    op: &SparseSuperoperator,
    opts: &NullspaceOptions,
) -> Result<(DensityMatrix, ConvergenceReport)> {
    let (v, mut report) = if op.dim() <= opts.dense_limit {
        dense_bordered_solve(op, opts)?
    } else {
        iterative_bordered_solve(op, opts)?
    };
    let mut rho = to_state(op, &v)?;
    rho.hermitize_normalize()?;
    let vn = op.space().vectorize(&rho)?;
    report.residual = inf_norm(&op.matrix().mul_vec(&vn));
    report.homogeneity = homogeneity(&op.bond_currents(&vn));
    Ok((rho, report))
}

fn dense_bordered_solve(
    op: &SparseSuperoperator,
    opts: &NullspaceOptions,
) -> Result<(Vec<C64>, ConvergenceReport)> {
    let border = BorderedGenerator::new(op);
    let mut m: Array2<C64> = op.dense();
    let w = border.border_weight();
    for &r in border.populations() {
        for &c in border.populations() {
            m[[r, c]] += w;
        }
    }
    let norm1 = m.opnorm(NormType::One)?;
    // getrf only fails on an exactly zero pivot.
    let lu = m
        .factorize_into()
        .map_err(|e| Error::DegenerateKernel(format!("bordered generator is singular ({e})")))?;
    let rcond = lu.rcond()?;
    let sigma_est = rcond * norm1;
    if !(sigma_est > opts.degeneracy_tol) {
        return Err(Error::DegenerateKernel(format!(
            "bordered generator is singular to working accuracy (smallest singular value about {sigma_est:.2e})"
        )));
    }
    let x = lu.solve_into(Array1::from(border.rhs()))?;
    Ok((
        x.to_vec(),
        ConvergenceReport {
            converged: true,
            method: "dense-lu".into(),
            ..Default::default()
        },
    ))
}

fn iterative_bordered_solve(
    op: &SparseSuperoperator,
    opts: &NullspaceOptions,
) -> Result<(Vec<C64>, ConvergenceReport)> {
    let border = BorderedGenerator::new(op);
    let b = border.rhs();
    let mut x = b.clone();
    let order = match opts.preconditioner {
        PreconditionerChoice::Sylvester => [PreconditionerChoice::Sylvester, PreconditionerChoice::Schur],
        PreconditionerChoice::Schur => [PreconditionerChoice::Schur, PreconditionerChoice::Sylvester],
        PreconditionerChoice::Auto => {
            if op.dephasing_rate() >= SCHUR_FIRST_DEPHASING {
                [PreconditionerChoice::Schur, PreconditionerChoice::Sylvester]
            } else {
                [PreconditionerChoice::Sylvester, PreconditionerChoice::Schur]
            }
        }
    };
    let gopts = GmresOptions {
        restart: opts.restart,
        max_iter: opts.max_iter,
        tol: opts.tol,
    };
    let mut report = ConvergenceReport::default();
    let mut total = 0;
    for choice in order {
        let pc: Box<dyn LinearMap> = match choice {
            PreconditionerChoice::Schur => match SchurPreconditioner::new(op) {
                Ok(p) => Box::new(p),
                Err(e) => {
                    report.notes.push(format!("schur setup failed: {e}"));
                    continue;
                }
            },
            _ => match SylvesterPreconditioner::new(op) {
                Ok(p) => Box::new(p),
                Err(e) => {
                    report.notes.push(format!("sylvester setup failed: {e}"));
                    continue;
                }
            },
        };
        let start = x.clone();
        let out = gmres(&border, pc.as_ref(), &b, &mut x, &gopts);
        total += out.iterations;
        let name = match choice {
            PreconditionerChoice::Schur => "gmres-schur",
            _ => "gmres-sylvester",
        };
        if out.converged && x.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            report.converged = true;
            report.method = name.into();
            report.steps = total;
            return Ok((x, report));
        }
        report
            .notes
            .push(format!("{name} stopped after {} iterations at {:.2e}", out.iterations, out.residual));
        if !x.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            x = start;
        }
    }
    if op.dim() <= opts.direct_limit {
        let v = sparse_lu_solve(op)?;
        report.converged = true;
        report.method = "sparse-lu".into();
        report.steps = total;
        return Ok((v, report));
    }
    Err(Error::NotConverged(format!(
        "bordered solve of dimension {} failed: {}",
        op.dim(),
        report.notes.join("; ")
    )))
}

/// Sparse LU with one population equation replaced by the trace condition.
fn sparse_lu_solve(op: &SparseSuperoperator) -> Result<Vec<C64>> {
    use faer::sparse::{SparseColMat, Triplet};
    let space = op.space();
    let dim = op.dim();
    let pivot_row = space.index(0, 0).unwrap();
    let m = op.matrix();
    let mut trip = Vec::with_capacity(m.nnz() + space.hilbert_dim());
    for r in 0..dim {
        if r == pivot_row {
            continue;
        }
        for (c, v) in m.row(r) {
            trip.push(Triplet::new(r, c, v));
        }
    }
    for (k, w) in space.trace_functional() {
        trip.push(Triplet::new(pivot_row, k, w));
    }
    let mat = SparseColMat::<usize, C64>::try_new_from_triplets(dim, dim, &trip)
        .map_err(|e| Error::Linalg(format!("{e:?}")))?;
    let lu = mat
        .sp_lu()
        .map_err(|e| Error::Linalg(format!("sparse LU failed: {e:?}")))?;
    let mut rhs = faer::Col::<C64>::zeros(dim);
    rhs[pivot_row] = C64::new(1.0, 0.0);
    let x = faer::prelude::Solve::solve(&lu, &rhs);
    let out: Vec<C64> = (0..dim).map(|i| x[i]).collect();
    if out.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::DegenerateKernel("sparse LU produced non-finite values".into()));
    }
    Ok(out)
}

/// Caps and solver controls for chain-level stationary solves.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExactSolveOptions {
    pub nullspace_cap: usize,
    pub nullspace: NullspaceOptions,
}

impl Default for ExactSolveOptions {
    fn default() -> Self {
        Self {
            nullspace_cap: DEFAULT_NULLSPACE_CAP,
            nullspace: NullspaceOptions::default(),
        }
    }
}

/// Stationary state of the chain, solved inside the number-diagonal blocks.
pub fn chain_ness(params: &ChainParameters) -> Result<(DensityMatrix, ConvergenceReport)> {
    chain_ness_with(params, &ExactSolveOptions::default())
}

pub fn chain_ness_with(
    params: &ChainParameters,
    opts: &ExactSolveOptions,
) -> Result<(DensityMatrix, ConvergenceReport)> {
    params.validate()?;
    if params.n_sites > opts.nullspace_cap {
        return Err(Error::TooLarge {
            what: "stationary-state solve",
            n_sites: params.n_sites,
            cap: opts.nullspace_cap,
        });
    }
    let op = chain_superoperator(params, Layout::NumberDiagonal, opts.nullspace_cap.max(DEFAULT_VECTORIZE_CAP))?;
    ness_nullspace_with(&op, &opts.nullspace)
}

/// Time evolution of the chain from ρ0 on the full space.
pub fn chain_evolve(
    params: &ChainParameters,
    rho0: &DensityMatrix,
    opts: &EvolveOptions,
) -> Result<(DensityMatrix, ConvergenceReport)> {
    let op = chain_superoperator(params, Layout::Full, DEFAULT_VECTORIZE_CAP)?;
    evolve_to_ness(&op, rho0, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::build_hamiltonian;
    use crate::sparse::SparseMatrix;

    #[test]
    fn unbiased_chain_relaxes_to_identity() {
        let p = ChainParameters::new(3, 1.5, 0.0, 0.2);
        let rho0 = DensityMatrix::random(8, 7);
        let opts = EvolveOptions::new(default_step(&p) * 10.0, 1e-10, 2000.0);
        let (rho, rep) = chain_evolve(&p, &rho0, &opts).unwrap();
        assert!(rep.converged, "{rep:?}");
        let id = DensityMatrix::maximally_mixed(8);
        assert!(rho.trace_distance(&id).unwrap() < 1e-8);
    }

    #[test]
    fn adaptive_and_fixed_agree_with_nullspace() {
        let p = ChainParameters::new(3, 2.0, 0.5, 0.1);
        let (ness, _) = chain_ness(&p).unwrap();
        let rho0 = DensityMatrix::maximally_mixed(8);
        let mut opts = EvolveOptions::new(0.05, 1e-11, 5000.0);
        opts.adaptive = true;
        let (rho, rep) = chain_evolve(&p, &rho0, &opts).unwrap();
        assert!(rep.converged, "{rep:?}");
        assert!(rho.trace_distance(&ness).unwrap() < 1e-8);
    }

    #[test]
    fn dense_and_iterative_paths_agree() {
        let p = ChainParameters::new(5, 2.0, 0.5, 0.1);
        let op = chain_superoperator(&p, Layout::NumberDiagonal, 10).unwrap();
        let (a, ra) = ness_nullspace(&op).unwrap();
        assert_eq!(ra.method, "dense-lu");
        for pc in [PreconditionerChoice::Sylvester, PreconditionerChoice::Schur] {
            let opts = NullspaceOptions {
                dense_limit: 0,
                preconditioner: pc,
                ..Default::default()
            };
            let (b, rb) = ness_nullspace_with(&op, &opts).unwrap();
            assert!(rb.converged);
            assert!(a.trace_distance(&b).unwrap() < 1e-9, "{rb:?}");
        }
        let v = super::sparse_lu_solve(&op).unwrap();
        let mut c = DensityMatrix::from_raw(op.space().unvectorize(&v)).unwrap();
        c.hermitize_normalize().unwrap();
        assert!(a.trace_distance(&c).unwrap() < 1e-9);
    }

    #[test]
    fn degenerate_kernel_is_reported() {
        // Pure dephasing leaves every diagonal state stationary.
        let h = SparseMatrix::zeros(4, 4);
        let l = SparseMatrix::diagonal(&[
            C64::new(1.0, 0.0),
            C64::new(-1.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(-1.0, 0.0),
        ]);
        let op = crate::exact::superop::vectorize(&h, &[l]).unwrap();
        assert!(matches!(ness_nullspace(&op), Err(Error::DegenerateKernel(_))));
    }

    #[test]
    fn caps_are_enforced() {
        let p = ChainParameters::new(9, 1.0, 0.5, 0.1);
        assert!(matches!(chain_ness(&p), Err(Error::TooLarge { .. })));
        let _ = build_hamiltonian(&p).unwrap();
    }
}
