//! Subcommand bodies. Each writes `<stem>.csv` and `<stem>.json`, then prints one summary line.

use std::path::{Path, PathBuf};

use ness_core::analysis::{
    diffusion_check, find_gamma_opt, run_sweep, solve_point, write_results, write_table,
    OutputMetadata, SolverChoice, SweepRow,
};
use ness_core::exact::{dark_state, sector_spectrum};
use ness_core::model::build_hamiltonian;
use ness_core::predictions::{
    delta0_current, delta0_current_model, domain_deviation, localization_length, purity_prediction,
    sector_probs_closed_form, sector_probs_detailed_balance,
};
use ness_core::toy::{toy_closed_form, toy_ness_current};
use ness_core::{Error, ToyParameters};
use serde::Serialize;

use crate::config::{ChainBlock, RunConfig};
use crate::CliError;

fn metadata(cfg: &RunConfig) -> Result<OutputMetadata, CliError> {
    Ok(OutputMetadata::new(serde_json::to_value(cfg).map_err(Error::from)?))
}

fn written(csv: &Path) -> String {
    format!("-> {}", csv.display())
}

pub fn ness_point(cfg: &RunConfig, stem: &Path, exact: bool) -> Result<(), CliError> {
    let params = cfg.chain.resolve(&ChainBlock::default())?;
    let mut solver = cfg.solver.clone();
    solver.solver = if exact { SolverChoice::Exact } else { SolverChoice::Mpo };
    let label = if exact { "exact" } else { "mpo" };
    let row = match solve_point(&params, &solver) {
        Ok(pt) => SweepRow {
            params,
            solver: pt.solver,
            record: Some(pt.record),
            report: Some(pt.report),
            error: None,
        },
        Err(e @ Error::NotConverged(_)) => SweepRow {
            params,
            solver: label.into(),
            record: None,
            report: None,
            error: Some(e.to_string()),
        },
        Err(e) => return Err(e.into()),
    };
    let (csv, _) = write_results(stem, &metadata(cfg)?, std::slice::from_ref(&row))?;
    match (&row.record, &row.report) {
        (Some(r), Some(rep)) => {
            println!(
                "J = {:.6}  purity = {:.6}  S = {:.4}  converged = {} ({})  {}",
                r.current,
                r.purity,
                r.entropy,
                rep.converged,
                rep.method,
                written(&csv)
            );
            if !rep.converged {
                return Err(CliError::NotConverged(format!("residual {:.3e}", rep.residual)));
            }
            Ok(())
        }
        _ => Err(CliError::NotConverged(row.error.unwrap_or_default())),
    }
}

#[derive(Serialize)]
struct ToyRow {
    params: ToyParameters,
    current: f64,
    current_times_delta2: f64,
    closed_form: f64,
}

pub fn toy(cfg: &RunConfig, stem: &Path, grid: bool) -> Result<(), CliError> {
    let base = cfg.toy.resolve()?;
    let points: Vec<ToyParameters> = if grid {
        let mut v = Vec::new();
        for &f in &cfg.toy_grid.bias {
            for &g in &cfg.toy_grid.dephasing {
                let p = ToyParameters { bias: f, dephasing: g, ..base };
                p.validate()?;
                v.push(p);
            }
        }
        v
    } else {
        vec![base]
    };
    let rows = points
        .iter()
        .map(|p| {
            let j = toy_ness_current(p)?;
            Ok(ToyRow {
                params: *p,
                current: j,
                current_times_delta2: j * p.interaction * p.interaction,
                closed_form: toy_closed_form(p),
            })
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let lines: Vec<String> = rows
        .iter()
        .map(|r| {
            let p = &r.params;
            format!(
                "{},{},{},{},{},{},{},{}",
                p.n_levels, p.interaction, p.coupling, p.bias, p.dephasing, r.current, r.current_times_delta2, r.closed_form
            )
        })
        .collect();
    let (csv, _) = write_table(stem, &metadata(cfg)?, "K,delta,Gamma,f,gamma,J,J_delta2,closed_form", &lines, &rows)?;
    if grid {
        println!("{} toy points  {}", rows.len(), written(&csv));
    } else {
        let r = &rows[0];
        println!(
            "J = {:.6e}  J*delta^2 = {:.6e}  closed form = {:.6e}  {}",
            r.current,
            r.current_times_delta2,
            r.closed_form,
            written(&csv)
        );
    }
    Ok(())
}

pub fn sweep(cfg: &RunConfig, stem: &Path) -> Result<(), CliError> {
    let mut sweep = cfg
        .sweep
        .clone()
        .ok_or_else(|| CliError::Config("`sweep` needs a config with a `sweep` block".into()))?;
    sweep.output = if cfg.output.name.is_some() || sweep.output.is_absolute() {
        if sweep.output.is_absolute() && cfg.output.name.is_none() {
            sweep.output.clone()
        } else {
            stem.to_path_buf()
        }
    } else {
        cfg.output.dir.clone().unwrap_or_else(|| PathBuf::from(".")).join(&sweep.output)
    };
    let rows = run_sweep(&sweep)?;
    let failed = rows.iter().filter(|r| !r.converged()).count();
    println!(
        "{} points, {} not converged  {}",
        rows.len(),
        failed,
        written(&ness_core::analysis::with_suffix(&sweep.output, ".csv"))
    );
    if failed > 0 {
        return Err(CliError::NotConverged(format!("{failed} sweep points")));
    }
    Ok(())
}

pub fn gamma_opt(cfg: &RunConfig, stem: &Path) -> Result<(), CliError> {
    let params = cfg.chain.resolve(&ChainBlock::default())?;
    let header = "gamma,abs_J";
    let lines = |scan: &[(f64, f64)]| scan.iter().map(|(g, j)| format!("{g},{j}")).collect::<Vec<_>>();
    match find_gamma_opt(&params, &cfg.solver, &cfg.gamma_opt) {
        Ok(r) => {
            let (csv, _) = write_table(stem, &metadata(cfg)?, header, &lines(&r.scan), &r)?;
            println!("gamma_opt = {:.4}  max |J| = {:.6e}  {}", r.gamma_opt, r.current_max, written(&csv));
            Ok(())
        }
        Err(Error::NonUnimodal { message, scan }) => {
            write_table(stem, &metadata(cfg)?, header, &lines(&scan), &scan)?;
            Err(CliError::Core(Error::NonUnimodal { message, scan }))
        }
        Err(e) => Err(e.into()),
    }
}

pub fn diffusion(cfg: &RunConfig, stem: &Path) -> Result<(), CliError> {
    let first = cfg.diffusion_sizes.first().copied();
    let base = cfg.chain.resolve(&ChainBlock { n_sites: first, ..Default::default() })?;
    let r = diffusion_check(&base, &cfg.diffusion_sizes, &cfg.solver)?;
    let lines: Vec<String> = r
        .points
        .iter()
        .map(|p| format!("{},{},{},{},{}", p.n_sites, p.current, p.density_drop, p.ratio, p.converged))
        .collect();
    let (csv, _) = write_table(stem, &metadata(cfg)?, "N,J,density_drop,ratio,converged", &lines, &r)?;
    println!(
        "alpha = {:.4}  a = {:.4}  c = {:.4}  {}",
        r.fit.exponent,
        r.fit.prefactor,
        r.fit.offset.unwrap_or(0.0),
        written(&csv)
    );
    let failed = r.points.iter().filter(|p| !p.converged).count();
    if failed > 0 {
        return Err(CliError::NotConverged(format!("{failed} chain lengths")));
    }
    Ok(())
}

#[derive(Serialize)]
struct SpectrumOutput {
    particles: usize,
    energies: Vec<f64>,
    dark_state: ness_core::exact::DarkState,
    predicted_deviation: Vec<f64>,
}

pub fn spectrum(cfg: &RunConfig, stem: &Path, sector: Option<usize>) -> Result<(), CliError> {
    let params = cfg.chain.resolve(&ChainBlock { bias: Some(0.0), ..Default::default() })?;
    let n = params.n_sites;
    let particles = sector.unwrap_or(n / 2);
    let spec = sector_spectrum(&build_hamiltonian(&params)?, n, particles)?;
    let ds = dark_state(&spec, params.interaction)?;
    let predicted = (1..=n)
        .map(|j| domain_deviation(particles, n, params.interaction, j))
        .collect::<Result<Vec<_>, Error>>()?;
    let lines: Vec<String> = (0..n)
        .map(|j| format!("{},{},{},{}", j + 1, ds.deviation[j], predicted[j], ds.deviation[j] / predicted[j]))
        .collect();
    let summary = format!(
        "E_D = {:.6}  gap = {:.4}  domain weight = {:.6}",
        ds.shifted_energy, ds.gap, ds.domain_weight
    );
    let out = SpectrumOutput { particles, energies: spec.energies, dark_state: ds, predicted_deviation: predicted };
    let (csv, _) = write_table(stem, &metadata(cfg)?, "j,deviation,predicted,ratio", &lines, &out)?;
    println!("{summary}  {}", written(&csv));
    Ok(())
}

#[derive(Serialize)]
struct Quantity {
    name: &'static str,
    value: Option<f64>,
}

pub fn predict(cfg: &RunConfig, stem: &Path, pn: bool) -> Result<(), CliError> {
    let defaults = ChainBlock { interaction: Some(0.0), bias: Some(1.0), ..Default::default() };
    let p = cfg.chain.resolve(&defaults)?;
    let meta = metadata(cfg)?;
    if pn {
        let closed = sector_probs_closed_form(p.n_sites, p.interaction)?;
        let balance = sector_probs_detailed_balance(p.n_sites, p.interaction)?;
        let lines: Vec<String> =
            closed.iter().zip(&balance).enumerate().map(|(n, (a, b))| format!("{n},{a},{b}")).collect();
        let (csv, _) = write_table(
            stem,
            &meta,
            "n,closed_form,detailed_balance",
            &lines,
            &serde_json::json!({ "closed_form": closed, "detailed_balance": balance }),
        )?;
        let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.4e}")).collect::<Vec<_>>().join(" ");
        println!("p_n closed form: [{}]  detailed balance: [{}]  {}", fmt(&closed), fmt(&balance), written(&csv));
        return Ok(());
    }
    let quantities = vec![
        Quantity { name: "current_delta0", value: Some(delta0_current(p.n_sites, p.bias, p.coupling, p.dephasing)) },
        Quantity {
            name: "current_delta0_model",
            value: Some(delta0_current_model(p.n_sites, p.bias, p.coupling, p.dephasing, p.hopping)),
        },
        Quantity { name: "purity", value: purity_prediction(p.interaction).ok() },
        Quantity { name: "localization_length", value: localization_length(p.interaction).ok() },
    ];
    let lines: Vec<String> = quantities
        .iter()
        .map(|q| format!("{},{}", q.name, q.value.map_or("NaN".to_string(), |v| v.to_string())))
        .collect();
    let (csv, _) = write_table(stem, &meta, "quantity,value", &lines, &quantities)?;
    let show = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.6}"));
    println!(
        "J(delta=0) = {}  model J(delta=0) = {}  purity = {}  xi = {}  {}",
        show(quantities[0].value),
        show(quantities[1].value),
        show(quantities[2].value),
        show(quantities[3].value),
        written(&csv)
    );
    Ok(())
}
