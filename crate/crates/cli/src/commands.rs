use std::path::PathBuf;

use catgate::analysis::{
    bloch_sweep, fidelity, fidelity_curve, process_fidelity, wigner, wigner_grid,
};
use catgate::gate::{balance_window, simulate_gate, GateParams, GateResult};
use catgate::states::{cat, CatParity};
use catgate::tomography::{
    default_phases, maxlik_reconstruct, sample_homodyne, trace_distance, QuadratureDataset,
};
use catgate::{DensityOperator, FockKet};

use crate::config::{RunConfig, TomoSource};
use crate::output::{complex_matrix, csv_row, num, Outputs};
use crate::{Cli, CliError, Command};

const DEFAULT_SEED: u64 = 1;
const DEFAULT_OUT: &str = "out";

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default_with_alpha(0.8),
    };
    if cli.threads == Some(0) {
        return Err(CliError::Config("--threads must be at least 1".into()));
    }
    if cli.dry_run {
        println!("config ok");
        return Ok(());
    }
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let seed = cli.seed.or(cfg.seed).unwrap_or(DEFAULT_SEED);
    let out_dir = cli
        .out
        .clone()
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let params = resolve_params(&cfg)?;

    let mut out = Outputs::default();
    match &cli.command {
        Command::Simulate => simulate(&cfg, &params, &mut out)?,
        Command::Sweep => sweep(&cfg, &params, &mut out)?,
        Command::Curve => curve(&cfg, &mut out)?,
        Command::Wigner => wigner_map(&cfg, &params, &mut out)?,
        Command::ProcessFidelity => {
            let f = process_fidelity(&params)?;
            out.add(
                "process.csv",
                format!("alpha,process_fidelity\n{}", csv_row(&[params.alpha, f])),
            );
        }
        Command::TomoSample => {
            let (_, data) = tomo_data(&cfg, &params, seed)?;
            out.add("quadratures.tsv", data.to_text());
        }
        Command::TomoReconstruct { data } => {
            tomo_reconstruct(&cfg, &params, seed, data.as_ref(), &mut out)?
        }
    }
    for path in out.commit(&out_dir)? {
        println!("{}", path.display());
    }
    Ok(())
}

fn resolve_params(cfg: &RunConfig) -> Result<GateParams, CliError> {
    let params = cfg.gate_params();
    if cfg.detectors.balance {
        let window = balance_window(&params)?;
        return Ok(params.with_window(window));
    }
    Ok(params)
}

fn gate_output(cfg: &RunConfig, params: &GateParams) -> Result<GateResult, CliError> {
    Ok(simulate_gate(params, &cfg.input_spec())?)
}

fn simulate(cfg: &RunConfig, params: &GateParams, out: &mut Outputs) -> Result<(), CliError> {
    let r = gate_output(cfg, params)?;
    let mut csv = String::from(
        "alpha,theta,phi,x0,p_success,fidelity_vs_ideal,target_alpha_opt,fidelity_at_opt\n",
    );
    csv.push_str(&csv_row(&[
        params.alpha,
        cfg.input.theta,
        cfg.input.phi,
        params.detectors.window.x0,
        r.p_success,
        r.fidelity_vs_ideal,
        r.target_alpha_opt,
        r.fidelity_at_opt,
    ]));
    out.add("simulate.csv", csv);
    out.add("rho_out.txt", complex_matrix(&r.rho_out));
    Ok(())
}

fn sweep(cfg: &RunConfig, params: &GateParams, out: &mut Outputs) -> Result<(), CliError> {
    let grid = bloch_sweep(params, &cfg.bloch_grid())?;
    let opt = |v: Option<f64>| v.map(num).unwrap_or_else(|| "nan".into());
    let mut csv = String::from("theta,phi,fidelity,p_success\n");
    for c in &grid.cells {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            num(c.theta),
            num(c.phi),
            opt(c.fidelity),
            opt(c.p_success)
        ));
    }
    csv.push_str(&format!(
        "mean,,{},{}\n",
        num(grid.mean_fidelity()),
        num(grid.mean_p_success())
    ));
    out.add("sweep.csv", csv);
    Ok(())
}

fn curve(cfg: &RunConfig, out: &mut Outputs) -> Result<(), CliError> {
    let rows = fidelity_curve(&cfg.curve.alphas, cfg.curve_model(), cfg.curve_measure())?;
    let mut csv = String::from("alpha,f_ideal,f_squeezed,s_opt\n");
    for r in rows {
        csv.push_str(&csv_row(&[r.alpha, r.f_ideal, r.f_squeezed, r.s_opt]));
    }
    out.add("curve.csv", csv);
    Ok(())
}

fn wigner_map(cfg: &RunConfig, params: &GateParams, out: &mut Outputs) -> Result<(), CliError> {
    let r = gate_output(cfg, params)?;
    let grid = wigner_grid(&r.rho_out, &cfg.wigner_grid())?;
    let mut csv = String::from("x,p,w\n");
    for (j, &p) in grid.ps.iter().enumerate() {
        for (i, &x) in grid.xs.iter().enumerate() {
            csv.push_str(&csv_row(&[x, p, grid.values[(i, j)]]));
        }
    }
    out.add("wigner.csv", csv);
    Ok(())
}

/// Source state for tomography and, for cat sources, its pure form.
fn tomo_source(
    cfg: &RunConfig,
    params: &GateParams,
) -> Result<(DensityOperator, Option<FockKet>), CliError> {
    let t = &cfg.tomography;
    let pure = |parity| -> Result<_, CliError> {
        let ket = cat(t.source_alpha, parity, t.cutoff)?;
        Ok((ket.to_density(), Some(ket)))
    };
    match t.source {
        TomoSource::OddCat => pure(CatParity::Odd),
        TomoSource::EvenCat => pure(CatParity::Even),
        TomoSource::Gate => Ok((gate_output(cfg, params)?.rho_out, None)),
    }
}

fn tomo_data(
    cfg: &RunConfig,
    params: &GateParams,
    seed: u64,
) -> Result<(DensityOperator, QuadratureDataset), CliError> {
    let t = &cfg.tomography;
    let (rho, _) = tomo_source(cfg, params)?;
    let n_per_phase = t.samples.div_ceil(t.phases);
    let data = sample_homodyne(&rho, &default_phases(t.phases), n_per_phase, t.eta, seed)?;
    Ok((rho, data))
}

/// Leading `d × d` block, zero padded or cropped and renormalized.
fn fit(rho: &DensityOperator, d: usize) -> Result<DensityOperator, CliError> {
    if rho.dim() == d {
        return Ok(rho.clone());
    }
    let n = rho.dim().min(d);
    let mut m = nalgebra::DMatrix::zeros(d, d);
    m.view_mut((0, 0), (n, n))
        .copy_from(&rho.matrix().view((0, 0), (n, n)));
    Ok(DensityOperator::single(m)?.normalized()?)
}

fn tomo_reconstruct(
    cfg: &RunConfig,
    params: &GateParams,
    seed: u64,
    data_path: Option<&PathBuf>,
    out: &mut Outputs,
) -> Result<(), CliError> {
    let t = &cfg.tomography;
    let data = match data_path {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
            QuadratureDataset::parse(&text)?
        }
        None => tomo_data(cfg, params, seed)?.1,
    };
    let rep = maxlik_reconstruct(&data, t.cutoff, t.correction, t.max_iter, t.tol)?;
    let (source, ket) = tomo_source(cfg, params)?;
    let td = trace_distance(&rep.rho_hat, &fit(&source, t.cutoff)?)?;
    let f = match &ket {
        Some(k) => fidelity(&rep.rho_hat, k)?,
        None => f64::NAN,
    };
    let w00 = wigner(&rep.rho_hat, 0.0, 0.0)?;
    let final_ll = rep.log_likelihood.last().copied().unwrap_or(f64::NAN);
    let mut csv = String::from(
        "samples,fidelity,trace_distance,wigner_origin,log_likelihood,iterations,converged,diluted_steps,floored_bins,dropped_samples\n",
    );
    csv.push_str(&format!(
        "{},{},{},{},{},{},{},{},{},{}\n",
        data.len(),
        num(f),
        num(td),
        num(w00),
        num(final_ll),
        rep.iterations,
        rep.converged,
        rep.diluted_steps,
        rep.floored_bins,
        rep.dropped_samples
    ));
    let mut ll = String::from("iteration,log_likelihood\n");
    for (k, v) in rep.log_likelihood.iter().enumerate() {
        ll.push_str(&format!("{k},{}\n", num(*v)));
    }
    out.add("reconstruction.csv", csv);
    out.add("rho_hat.txt", complex_matrix(&rep.rho_hat));
    out.add("loglik.csv", ll);
    Ok(())
}
