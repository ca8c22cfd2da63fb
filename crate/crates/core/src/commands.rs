//! Entry points behind the command-line subcommands. Each writes its human
//! output to the given sink and reports failures as [`Error`]s, which
//! [`exit_code`] and [`error_line`] turn into the process status and message.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::continuation::{run_sweep, SweepReport};
use crate::diagnostics::{energy, vacuum_radius};
use crate::error::{Error, Result};
use crate::io::{
    csv_header, csv_series, emit_plot_script, read_snapshot, write_file, write_json,
    write_snapshot, RunConfig, RunManifest, RunStatus, Snapshot,
};
use crate::regime::{classify_regime, ExactRational, RegimeReport};
use crate::solver::{prepare, run_from_state, Scheme};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_GUARD: i32 = 3;
pub const EXIT_IO: i32 = 4;

pub const SERIES_FILE: &str = "series.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const PLOT_FILE: &str = "plot.gp";
pub const SNAPSHOT_DIR: &str = "snapshots";
pub const SWEEP_FILE: &str = "sweep.json";

/// Short machine-readable class of an error.
pub fn error_kind(err: &Error) -> &'static str {
    match err {
        Error::Domain(_) | Error::Invalid { .. } => "config",
        Error::Parse { .. } => "parse",
        Error::NonPositiveDensity { .. } | Error::Step(_) | Error::Guard { .. } => "guard",
        Error::Io { .. } => "io",
        Error::Format(_) => "format",
    }
}

pub fn exit_code(err: &Error) -> i32 {
    match error_kind(err) {
        "config" | "parse" => EXIT_CONFIG,
        "guard" => EXIT_GUARD,
        _ => EXIT_IO,
    }
}

/// `error code=<exit> kind=<kind> message=<text on one line>`.
pub fn error_line(err: &Error) -> String {
    let message = err.to_string().replace(['\n', '\r'], " ");
    format!(
        "error code={} kind={} message={}",
        exit_code(err),
        error_kind(err),
        message
    )
}

/// Command-line overrides applied on top of a config.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub grid: Option<usize>,
    pub t_end: Option<f64>,
    pub scheme: Option<Scheme>,
}

/// Applies the overrides and revalidates.
pub fn apply_overrides(config: &mut RunConfig, o: &Overrides) -> Result<()> {
    if let Some(out) = &o.out {
        config.output_dir = out.display().to_string();
    }
    if o.grid.is_some() {
        config.model.grid_cells = o.grid;
    }
    if o.t_end.is_some() {
        config.model.t_end = o.t_end;
    }
    if o.scheme.is_some() {
        config.model.scheme = o.scheme;
    }
    config.validate()
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn say(out: &mut dyn Write, quiet: bool, text: &str) -> Result<()> {
    if quiet {
        return Ok(());
    }
    writeln!(out, "{text}").map_err(|e| Error::io("<stdout>", e))
}

/// Runs one simulation into `config.output_dir`: manifest.json (written at
/// start, finalised at the end), series.csv, plot.gp and snapshots/. A guard
/// trip still writes every file and is then returned as the error.
pub fn cmd_run(config: &RunConfig, out: &mut dyn Write, quiet: bool) -> Result<RunManifest> {
    config.validate()?;
    let started = Instant::now();
    let spec = config.initial_data_spec()?;
    let params = config.model_params(&spec)?;
    let dir = PathBuf::from(&config.output_dir);
    create_dir(&dir)?;
    let manifest_path = dir.join(MANIFEST_FILE);
    let mut manifest = RunManifest::new(config, &spec, &params);
    manifest.files.push(MANIFEST_FILE.to_string());
    write_json(&manifest_path, &manifest)?;

    let mut schedule = config.diagnostics.clone();
    schedule.keep_states = config.snapshot_every > 0;
    let result = prepare(&spec, &params).and_then(|(resolved, regime, initial)| {
        manifest.params = resolved.clone();
        manifest.regime = Some(regime);
        let output = run_from_state(initial.clone(), &resolved, &schedule)?;
        Ok((resolved, initial, output))
    });
    let (resolved, initial, output) = match result {
        Ok(x) => x,
        Err(e) => {
            manifest.status = RunStatus::Failed;
            manifest.error = Some(e.to_string());
            manifest.wall_clock_seconds = started.elapsed().as_secs_f64();
            write_json(&manifest_path, &manifest)?;
            return Err(e);
        }
    };

    write_file(
        &dir.join(SERIES_FILE),
        &csv_series(&schedule, &output.samples),
    )?;
    manifest.files.push(SERIES_FILE.to_string());
    let header = csv_header(&schedule).join(",");
    write_file(
        &dir.join(PLOT_FILE),
        &emit_plot_script(SERIES_FILE, &header)?,
    )?;
    manifest.files.push(PLOT_FILE.to_string());

    let snap_dir = dir.join(SNAPSHOT_DIR);
    create_dir(&snap_dir)?;
    let mut snapshot = |name: String, state: &crate::geometry::LagrangianState| -> Result<()> {
        let snap = Snapshot {
            alpha: resolved.alpha,
            gamma: resolved.gamma,
            state: state.clone(),
        };
        write_snapshot(&snap_dir.join(&name), &snap)?;
        manifest.files.push(format!("{SNAPSHOT_DIR}/{name}"));
        Ok(())
    };
    snapshot("initial.snap".to_string(), &initial)?;
    if config.snapshot_every > 0 {
        for (k, state) in output.trajectory.states.iter().enumerate() {
            if k % config.snapshot_every == 0 {
                snapshot(format!("sample_{k:05}.snap"), state)?;
            }
        }
    }
    snapshot("final.snap".to_string(), &output.final_state)?;

    manifest.status = if output.termination.completed() {
        RunStatus::Completed
    } else {
        RunStatus::Guard
    };
    manifest.termination = Some(output.termination.clone());
    manifest.steps = output.steps;
    manifest.retries = output.retries;
    manifest.wall_clock_seconds = started.elapsed().as_secs_f64();
    write_json(&manifest_path, &manifest)?;

    let last = output.samples.last();
    say(
        out,
        quiet,
        &format!(
            "run {}: t={} steps={} retries={} energy={} rho_min={} rho_max={} -> {}",
            if output.termination.completed() {
                "completed"
            } else {
                "stopped by guard"
            },
            output.final_state.time,
            output.steps,
            output.retries,
            last.map_or(f64::NAN, |s| s.energy),
            output.final_state.min_density(),
            output.final_state.max_density(),
            dir.display()
        ),
    )?;
    match output.termination.as_error() {
        Some(e) => Err(e),
        None => Ok(manifest),
    }
}

/// Runs the config's sweep into `config.output_dir`: sweep.json with the
/// report and members/member_XX.json per member (reference.json for the
/// reference run). Fails with a guard error if any member did not complete.
pub fn cmd_sweep(config: &RunConfig, out: &mut dyn Write, quiet: bool) -> Result<SweepReport> {
    config.validate()?;
    let plan = config
        .sweep_plan()?
        .ok_or_else(|| Error::invalid("sweep", "the config has no [sweep] block"))?;
    let dir = PathBuf::from(&config.output_dir);
    let members_dir = dir.join("members");
    create_dir(&members_dir)?;
    let report = run_sweep(&plan)?;
    write_json(&dir.join(SWEEP_FILE), &report)?;
    for (j, m) in report.members.iter().enumerate() {
        write_json(&members_dir.join(format!("member_{j:02}.json")), m)?;
    }
    if let Some(r) = &report.reference {
        write_json(&members_dir.join("reference.json"), r)?;
    }
    if !quiet {
        let mut text = format!("sweep {:?} values {:?}\n", plan.kind, plan.values);
        for (j, row) in report.distances.iter().enumerate() {
            let cells: Vec<String> = row
                .iter()
                .map(|d| d.map_or("-".to_string(), |d| format!("{:.6e}", d.l1_density)))
                .collect();
            text.push_str(&format!(
                "  L1 density {} vs {}: {}\n",
                plan.values[j],
                plan.values[j + 1],
                cells.join(" ")
            ));
        }
        for (j, row) in report.reference_distances.iter().enumerate() {
            let cells: Vec<String> = row
                .iter()
                .map(|d| d.map_or("-".to_string(), |d| format!("{:.6e}", d.l1_density)))
                .collect();
            text.push_str(&format!(
                "  L1 density {} vs reference: {}\n",
                plan.values[j],
                cells.join(" ")
            ));
        }
        text.push_str(&format!(
            "  non-contracting pairs: {}",
            report.non_contraction.len()
        ));
        say(out, quiet, &text)?;
    }
    if !report.all_completed() {
        let failed: Vec<String> = report
            .members
            .iter()
            .chain(report.reference.iter())
            .filter(|m| !m.termination.completed())
            .map(|m| m.value.to_string())
            .collect();
        return Err(Error::Step(format!(
            "sweep member(s) {} did not complete",
            failed.join(", ")
        )));
    }
    Ok(report)
}

/// Prints the regime table for (N, α, γ, p, q).
pub fn cmd_regime(
    dimension: u32,
    alpha: f64,
    gamma: f64,
    p: Option<f64>,
    q: Option<&str>,
    out: &mut dyn Write,
) -> Result<RegimeReport> {
    if dimension != 2 && dimension != 3 {
        return Err(Error::invalid("N", "must be 2 or 3"));
    }
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::invalid("alpha", "must be positive and finite"));
    }
    if !(gamma > 1.0) || !gamma.is_finite() {
        return Err(Error::invalid("gamma", "must exceed 1 and be finite"));
    }
    if let Some(p) = p {
        if !(p > 0.0) || !p.is_finite() {
            return Err(Error::invalid("p", "must be positive and finite"));
        }
    }
    let q: Option<ExactRational> = q
        .map(|s| {
            s.parse::<ExactRational>()
                .map_err(|e| Error::invalid("q", e.to_string()))
        })
        .transpose()?;
    let report = classify_regime(dimension, alpha, gamma, p, q.as_ref());
    write!(out, "{}", report.table()).map_err(|e| Error::io("<stdout>", e))?;
    Ok(report)
}

/// Summary statistics of a snapshot file.
pub fn cmd_inspect(path: &Path, out: &mut dyn Write) -> Result<Snapshot> {
    let snap = read_snapshot(path)?;
    let s = &snap.state;
    let u_max = s.velocity.iter().fold(0.0_f64, |a, u| a.max(u.abs()));
    let text = format!(
        "snapshot {}\n  N={} alpha={} gamma={} cells={} time={}\n  mass={} volume={} radius=[{}, {}]\n  rho_min={} rho_max={} u_max={} energy={} vacuum_radius(1e-4)={}\n",
        path.display(),
        s.dimension,
        snap.alpha,
        snap.gamma,
        s.cells(),
        s.time,
        s.total_mass,
        s.volume(),
        s.radius[0],
        s.radius[s.cells()],
        s.min_density(),
        s.max_density(),
        u_max,
        energy(s, snap.gamma),
        vacuum_radius(s, 1e-4),
    );
    write!(out, "{text}").map_err(|e| Error::io("<stdout>", e))?;
    Ok(snap)
}
