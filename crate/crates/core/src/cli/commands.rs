//! The five studies behind the subcommands.

use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::evolve::{eigensystem, PeriodicStepper};
use crate::fock::{CVector, QuantumState};
use crate::model::hamiltonian;
use crate::observe::{correlator, occupations};
use crate::scan::{
    basis_for, find_first_peak, find_ubar, first_peak_adaptive, linear_fit, qfi_time_series_with, scaling_study,
    scan_tu, spectrum_sweep, PeakResult,
};

use super::config::RunConfig;
use super::output::{emit_table, num, opt_num, summary_json, write_atomic, PlotKind, Provenance, Table};

/// Where and how to write.
#[derive(Debug, Clone)]
pub struct Sink {
    pub dir: PathBuf,
    pub emit_plot: bool,
}

struct Context<'a> {
    config: &'a RunConfig,
    provenance: Provenance,
    sink: &'a Sink,
}

impl Context<'_> {
    fn new<'a>(command: &str, config: &'a RunConfig, sink: &'a Sink) -> Context<'a> {
        Context {
            config,
            provenance: Provenance::new(command, &config.canonical_json()),
            sink,
        }
    }

    fn table(&self, name: &str, table: &Table, plot: PlotKind) -> Result<Vec<PathBuf>> {
        emit_table(&self.sink.dir, name, table, &self.provenance, self.sink.emit_plot.then_some(&plot))
    }

    fn summary(&self, name: &str, body: Map<String, Value>) -> Result<PathBuf> {
        let config: Value = serde_json::from_str(&self.config.canonical_json()).expect("canonical config is JSON");
        let path = self.sink.dir.join(name);
        write_atomic(&path, &summary_json(&self.provenance, config, body))?;
        Ok(path)
    }

    fn initial_state(&self) -> Result<QuantumState> {
        let basis = basis_for(&self.config.params)?;
        self.config.initial_state.build(&basis)
    }
}

fn object(v: Value) -> Map<String, Value> {
    match v {
        Value::Object(m) => m,
        _ => unreachable!("summary bodies are objects"),
    }
}

fn peak_json(p: &PeakResult) -> Value {
    serde_json::to_value(p).expect("peak serialises")
}

/// Occupations, norm and `𝒢^(N)` along the trajectory.
pub fn cmd_evolve(config: &RunConfig, sink: &Sink) -> Result<Vec<PathBuf>> {
    let ctx = Context::new("evolve", config, sink);
    let psi0 = ctx.initial_state()?;
    let basis = psi0.basis().clone();
    let times = config.time_axis()?;
    let states: Vec<CVector> = if config.model.is_time_dependent() {
        PeriodicStepper::new(config.model, &config.params, &basis, config.steps_per_period)?
            .states_at(psi0.amplitudes(), &times)?
    } else {
        let eig = eigensystem(&hamiltonian(config.model, &config.params, &basis, 0.0)?)?;
        times.iter().map(|&t| eig.propagate(psi0.amplitudes(), t)).collect()
    };

    let m = basis.n_modes();
    let mut header = vec!["t".to_string()];
    header.extend((1..=m).map(|j| format!("n_{j}")));
    header.extend(["norm".to_string(), "G".to_string()]);
    let mut table = Table::new(header);
    for (&t, amps) in times.iter().zip(states) {
        let norm = amps.norm();
        if !norm.is_finite() {
            return Err(Error::numerical(format!("state norm is not finite at t={t}")));
        }
        let psi = QuantumState::from_unitary_image(basis.clone(), amps);
        let mut row = vec![num(t)];
        row.extend(occupations(&psi).into_iter().map(num));
        row.push(num(norm));
        row.push(num(correlator(&psi)));
        table.push(row);
    }
    ctx.table(
        "evolve.csv",
        &table,
        PlotKind::Lines {
            x: 0,
            ys: (1..=m).collect(),
            logscale: false,
        },
    )
}

/// QFI time series with its first peak.
pub fn cmd_qfi(config: &RunConfig, sink: &Sink) -> Result<Vec<PathBuf>> {
    let ctx = Context::new("qfi", config, sink);
    let psi0 = ctx.initial_state()?;
    let options = config.series_options();
    let (series, peak) = match &config.times {
        Some(_) => {
            let s = qfi_time_series_with(config.model, &config.params, &psi0, &config.time_axis()?, config.method, &options)?;
            let peak = if s.times.len() >= 5 { Some(find_first_peak(&s)?) } else { None };
            (s, peak)
        }
        None => {
            let (p, s) = first_peak_adaptive(config.model, &config.params, &psi0, config.method, &config.window, &options)?;
            (s, Some(p))
        }
    };

    let with_parts = series.var_linear.is_some();
    let mut header = vec!["t", "F", "F_over_T2"];
    if with_parts {
        header.extend(["var_L", "var_O"]);
    }
    header.push("G");
    let mut table = Table::new(header);
    for k in 0..series.times.len() {
        let mut row = vec![num(series.times[k]), num(series.qfi[k]), num(series.qfi_over_t2[k])];
        if let (Some(l), Some(o)) = (&series.var_linear, &series.var_oscillating) {
            row.extend([num(l[k]), num(o[k])]);
        }
        row.push(num(series.correlator[k]));
        table.push(row);
    }
    let mut files = ctx.table("qfi.csv", &table, PlotKind::Lines { x: 0, ys: vec![2], logscale: false })?;

    let span = (config.params.n_particles * (config.params.n_modes - 1)) as f64;
    let body = json!({
        "model": config.model,
        "method": config.method,
        "points": series.times.len(),
        "peak": peak.as_ref().map(peak_json),
        "F_max": peak.as_ref().map(|p| p.f_max),
        "tau": peak.as_ref().map(|p| p.tau),
        "ratio_to_heisenberg": peak.as_ref().map(|p| p.f_max / (span * span)),
        "warnings": series.warnings,
    });
    files.push(ctx.summary("qfi_summary.json", object(body))?);
    Ok(files)
}

/// `F/T²` and `𝒢^(N)` over the `T × U` grid, with the optimum `Ū`.
pub fn cmd_scan(config: &RunConfig, sink: &Sink) -> Result<Vec<PathBuf>> {
    let ctx = Context::new("scan", config, sink);
    let psi0 = ctx.initial_state()?;
    let options = config.series_options();
    let t_axis = config.time_axis()?;
    let u_axis = config.interaction_axis()?;
    let grid = scan_tu(config.model, &config.params, &psi0, &t_axis, &u_axis, config.method, &options)?;

    let with_parts = grid.var_linear.is_some();
    let mut header = vec!["T", "U", "F_over_T2", "G"];
    if with_parts {
        header.extend(["var_L", "var_O"]);
    }
    let mut table = Table::new(header);
    for (j, &u) in u_axis.iter().enumerate() {
        for (i, &t) in t_axis.iter().enumerate() {
            let mut row = vec![num(t), num(u), num(grid.values[i][j]), num(grid.correlator[i][j])];
            if let (Some(l), Some(o)) = (&grid.var_linear, &grid.var_oscillating) {
                row.extend([num(l[i][j]), num(o[i][j])]);
            }
            table.push(row);
        }
    }
    let mut files = ctx.table("scan.csv", &table, PlotKind::Map { x: 0, y: 1, z: 2 })?;

    let ubar = find_ubar(config.model, &config.params, &psi0, &u_axis, &config.window, config.method, &options);
    let (ubar_json, ubar_error) = match ubar {
        Ok(r) => (Some(r), None),
        Err(Error::InconclusiveScan(msg)) => {
            eprintln!("warning: {msg}");
            (None, Some(msg))
        }
        Err(e) => return Err(e),
    };
    let body = json!({
        "model": config.model,
        "method": config.method,
        "rows": t_axis.len() * u_axis.len(),
        "U_bar": ubar_json.as_ref().and_then(|r| r.peak.u_bar),
        "F_max": ubar_json.as_ref().map(|r| r.peak.f_max),
        "tau": ubar_json.as_ref().map(|r| r.peak.tau),
        "peak": ubar_json.as_ref().map(|r| peak_json(&r.peak)),
        "per_U": ubar_json.as_ref().map(|r| r.per_u.iter().map(|(u, p)| json!({"U": u, "F_max": p.f_max, "tau": p.tau, "boundary": p.boundary})).collect::<Vec<_>>()),
        "U_bar_error": ubar_error,
        "warnings": grid.warnings,
    });
    files.push(ctx.summary("scan_summary.json", object(body))?);
    Ok(files)
}

/// First-peak table over chain lengths.
pub fn cmd_scaling(config: &RunConfig, sink: &Sink) -> Result<Vec<PathBuf>> {
    let ctx = Context::new("scaling", config, sink);
    let rows = scaling_study(
        config.model,
        &config.params,
        &config.mode_axis(),
        &config.initial_state,
        config.method,
        &config.window,
        &config.series_options(),
    )?;
    let mut table = Table::new(["M", "F_max", "tau", "boundary", "ratio_to_M2", "ratio_to_HL", "error"]);
    for r in &rows {
        table.push(vec![
            r.n_modes.to_string(),
            opt_num(r.peak.as_ref().map(|p| p.f_max)),
            opt_num(r.peak.as_ref().map(|p| p.tau)),
            r.peak.as_ref().map_or_else(String::new, |p| p.boundary.to_string()),
            opt_num(r.ratio_to_two_modes),
            opt_num(r.ratio_to_heisenberg),
            r.error.as_deref().map(|e| format!("\"{}\"", e.replace('"', "'"))).unwrap_or_default(),
        ]);
    }
    let mut files = ctx.table("scaling.csv", &table, PlotKind::Lines { x: 0, ys: vec![4], logscale: true })?;

    let done: Vec<(f64, &PeakResult, Option<f64>)> = rows
        .iter()
        .filter_map(|r| r.peak.as_ref().map(|p| (r.n_modes as f64, p, r.ratio_to_two_modes)))
        .collect();
    let ms: Vec<f64> = done.iter().map(|d| d.0).collect();
    let taus: Vec<f64> = done.iter().map(|d| d.1.tau).collect();
    let tail = done.len().saturating_sub(5);
    let log_m: Vec<f64> = ms[tail..].iter().map(|m| m.ln()).collect();
    let log_r: Vec<f64> = done[tail..].iter().filter_map(|d| d.2.map(f64::ln)).collect();
    let body = json!({
        "model": config.model,
        "method": config.method,
        "rows": serde_json::to_value(&rows).expect("rows serialise"),
        "tau_fit": linear_fit(&ms, &taus).ok(),
        "ratio_loglog_fit": if log_r.len() == log_m.len() { linear_fit(&log_m, &log_r).ok() } else { None },
    });
    files.push(ctx.summary("scaling_summary.json", object(body))?);
    Ok(files)
}

/// Eigenvalues, overlaps with the initial state and the dominant gap over `U`.
pub fn cmd_spectrum(config: &RunConfig, sink: &Sink) -> Result<Vec<PathBuf>> {
    let ctx = Context::new("spectrum", config, sink);
    let psi0 = ctx.initial_state()?;
    let u_axis = config.interaction_axis()?;
    let rows = spectrum_sweep(config.model, &config.params, &psi0, &u_axis)?;
    let dim = psi0.basis().dim();
    let mut header = vec!["U".to_string(), "Omega".into(), "tau_est".into(), "pair_a".into(), "pair_b".into()];
    header.extend((0..dim).map(|k| format!("E_{k}")));
    header.extend((0..dim).map(|k| format!("P_{k}")));
    let mut table = Table::new(header);
    for r in &rows {
        let mut row = vec![
            num(r.u),
            opt_num(r.omega),
            opt_num(r.tau_estimate),
            r.pair.first.to_string(),
            r.pair.second.to_string(),
        ];
        row.extend(r.energies.iter().map(|&e| num(e)));
        row.extend(r.overlaps.iter().map(|&p| num(p)));
        table.push(row);
    }
    ctx.table(
        "spectrum.csv",
        &table,
        PlotKind::Lines {
            x: 0,
            ys: (5..5 + dim).collect(),
            logscale: false,
        },
    )
}

pub fn output_dir(cli_out: Option<&Path>, config: &RunConfig) -> PathBuf {
    cli_out
        .map(Path::to_path_buf)
        .or_else(|| config.out_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}
