//! Configuration files, run manifests, the CSV series, state snapshots and
//! the plot script.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::continuation::{SweepKind, SweepPlan};
use crate::diagnostics::{DiagnosticSample, DiagnosticSchedule};
use crate::error::{Error, Result};
use crate::geometry::LagrangianState;
use crate::initial_data::{
    preset, Construction, DensityExpr, Exponents, InitialDataSpec, VelocityExpr,
};
use crate::regime::RegimeReport;
use crate::solver::{ModelParams, Scheme, Termination};

/// Version of the CSV column layout; bumped whenever columns change.
pub const CSV_SCHEMA_VERSION: u32 = 1;
/// First token of every snapshot file.
pub const SNAPSHOT_MAGIC: &str = "BDFLOW-SNAPSHOT";
pub const SNAPSHOT_VERSION: u32 = 1;

/// Model parameters that override the values derived from the initial data.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dimension: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta_until: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner_radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_cells: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scheme: Option<Scheme>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt_safety: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density_ceiling: Option<f64>,
}

/// Initial data: a preset, an analytic description, or a preset with
/// individual fields replaced.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialDataConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<DensityExpr>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub velocity: Option<VelocityExpr>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vacuum_floor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vacuum_core: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub core_width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mollify_radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff_inner: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub construction: Option<Construction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalize_mass: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponents: Option<Exponents>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_cells: Option<usize>,
}

/// Continuation sweep; base parameters and data come from the rest of the config.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub kind: SweepKind,
    pub values: Vec<f64>,
    pub comparison_times: Vec<f64>,
    #[serde(default)]
    pub reference: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub model: ModelOverrides,
    pub initial_data: InitialDataConfig,
    #[serde(default)]
    pub diagnostics: DiagnosticSchedule,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default = "default_output_dir")]
    pub output_dir: String,
    /// Write a snapshot at every k-th sample; 0 keeps only the initial and final states.
    #[serde(default)]
    pub snapshot_every: usize,
    /// There are no stochastic components; false is rejected.
    #[serde(default = "default_deterministic")]
    pub deterministic: bool,
}

fn default_output_dir() -> String {
    "bdflow-out".to_string()
}

fn default_deterministic() -> bool {
    true
}

impl RunConfig {
    /// A config running `preset` to `t_end` with every other field defaulted.
    pub fn for_preset(name: &str, t_end: f64) -> RunConfig {
        RunConfig {
            model: ModelOverrides {
                t_end: Some(t_end),
                ..ModelOverrides::default()
            },
            initial_data: InitialDataConfig {
                preset: Some(name.to_string()),
                ..InitialDataConfig::default()
            },
            diagnostics: DiagnosticSchedule::default(),
            sweep: None,
            output_dir: default_output_dir(),
            snapshot_every: 0,
            deterministic: true,
        }
    }

    /// Initial data after applying the overrides to the preset.
    pub fn initial_data_spec(&self) -> Result<InitialDataSpec> {
        let c = &self.initial_data;
        let mut spec = match &c.preset {
            Some(name) => preset(name)?,
            None => {
                let density = c.density.clone().ok_or_else(|| {
                    Error::invalid("initial_data.density", "required when no preset is given")
                })?;
                let exponents = c.exponents.clone().ok_or_else(|| {
                    Error::invalid("initial_data.exponents", "required when no preset is given")
                })?;
                InitialDataSpec {
                    preset: None,
                    density,
                    velocity: VelocityExpr::Zero,
                    vacuum_floor: 0.0,
                    vacuum_core: 0.0,
                    core_width: 0.1,
                    mollify_radius: 0.0,
                    cutoff_inner: 0.0,
                    construction: Construction::Direct,
                    normalize_mass: None,
                    exponents,
                    documented: None,
                    sample_cells: None,
                }
            }
        };
        if let Some(v) = &c.density {
            spec.density = v.clone();
        }
        if let Some(v) = &c.velocity {
            spec.velocity = v.clone();
        }
        if let Some(v) = &c.exponents {
            spec.exponents = v.clone();
        }
        macro_rules! set {
            ($($f:ident),*) => { $(if let Some(v) = c.$f { spec.$f = v; })* };
        }
        set!(
            vacuum_floor,
            vacuum_core,
            core_width,
            mollify_radius,
            cutoff_inner,
            construction
        );
        if c.normalize_mass.is_some() {
            spec.normalize_mass = c.normalize_mass;
        }
        if c.sample_cells.is_some() {
            spec.sample_cells = c.sample_cells;
        }
        spec.validate()?;
        Ok(spec)
    }

    /// Model parameters: those implied by the data's exponents, then the overrides.
    pub fn model_params(&self, spec: &InitialDataSpec) -> Result<ModelParams> {
        let m = &self.model;
        let mut p = spec.model_params();
        macro_rules! set {
            ($($f:ident),*) => { $(if let Some(v) = m.$f { p.$f = v; })* };
        }
        set!(
            dimension,
            alpha,
            gamma,
            eta,
            inner_radius,
            radius,
            grid_cells,
            scheme,
            dt_safety,
            t_end,
            density_ceiling
        );
        if m.delta.is_some() {
            p.delta = m.delta;
        }
        if m.eta_until.is_some() {
            p.eta_until = m.eta_until;
        }
        if m.dt_max.is_some() {
            p.dt_max = m.dt_max;
        }
        p.validate()?;
        Ok(p)
    }

    /// Sweep plan, when the config has a sweep block.
    pub fn sweep_plan(&self) -> Result<Option<SweepPlan>> {
        let Some(s) = &self.sweep else {
            return Ok(None);
        };
        let base_spec = self.initial_data_spec()?;
        let base_params = self.model_params(&base_spec)?;
        let plan = SweepPlan {
            kind: s.kind,
            values: s.values.clone(),
            base_params,
            base_spec,
            comparison_times: s.comparison_times.clone(),
            schedule: self.diagnostics.clone(),
            reference: s.reference,
        };
        plan.validate()?;
        Ok(Some(plan))
    }

    pub fn validate(&self) -> Result<()> {
        if !self.deterministic {
            return Err(Error::invalid(
                "deterministic",
                "must be true; runs have no random components",
            ));
        }
        if self.output_dir.is_empty() {
            return Err(Error::invalid("output_dir", "must not be empty"));
        }
        let spec = self.initial_data_spec()?;
        self.model_params(&spec)?;
        self.diagnostics.validate()?;
        self.sweep_plan()?;
        Ok(())
    }
}

/// 1-based line and column of a byte offset.
fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let offset = offset.min(text.len());
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

/// Parses and validates a TOML config.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let config: RunConfig = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((0, 0), |s| line_column(text, s.start));
        Error::Parse {
            line,
            column,
            message: e.message().to_string(),
        }
    })?;
    config.validate()?;
    Ok(config)
}

/// Canonical TOML text of a config; parsing it gives the same config back.
pub fn config_to_toml(config: &RunConfig) -> Result<String> {
    toml::to_string(config).map_err(|e| Error::Format(format!("cannot serialise config: {e}")))
}

pub fn read_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    Running,
    Completed,
    Guard,
    Failed,
}

/// Record of one run, written when it starts and rewritten when it ends.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub code_version: String,
    pub csv_schema_version: u32,
    pub status: RunStatus,
    pub config: RunConfig,
    pub params: ModelParams,
    pub initial_data: InitialDataSpec,
    pub grid_cells: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regime: Option<RegimeReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub termination: Option<Termination>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub steps: usize,
    pub retries: usize,
    pub wall_clock_seconds: f64,
    /// Files of the run, relative to its directory.
    pub files: Vec<String>,
}

impl RunManifest {
    pub fn new(config: &RunConfig, spec: &InitialDataSpec, params: &ModelParams) -> RunManifest {
        RunManifest {
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            csv_schema_version: CSV_SCHEMA_VERSION,
            status: RunStatus::Running,
            config: config.clone(),
            params: params.clone(),
            initial_data: spec.clone(),
            grid_cells: params.grid_cells,
            regime: None,
            termination: None,
            error: None,
            steps: 0,
            retries: 0,
            wall_clock_seconds: 0.0,
            files: Vec::new(),
        }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Format(e.to_string()))?;
    text.push('\n');
    write_file(path, &text)
}

pub fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Column name fragment for a parameter value (shortest round-trip form).
fn label(x: f64) -> String {
    format!("{x}")
}

/// The CSV header for a schedule. Fixed columns come first, in this order:
/// time, energy, bd_entropy, rho_min, rho_max, u_max, w_max, lp_u_{e}...,
/// l2_grad_u, linf_rho_minus_mean, l2_grad_rho, r_weighted_sup_{ξ}..., volume,
/// r_t, v_t, vacuum_radius, vacuum_bound, particle_{h}...
pub fn csv_header(schedule: &DiagnosticSchedule) -> Vec<String> {
    let mut h: Vec<String> = [
        "time",
        "energy",
        "bd_entropy",
        "rho_min",
        "rho_max",
        "u_max",
        "w_max",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    h.extend(
        schedule
            .lp_exponents
            .iter()
            .map(|&e| format!("lp_u_{}", label(e))),
    );
    h.extend(
        ["l2_grad_u", "linf_rho_minus_mean", "l2_grad_rho"]
            .iter()
            .map(|s| s.to_string()),
    );
    h.extend(
        schedule
            .xi
            .iter()
            .map(|&x| format!("r_weighted_sup_{}", label(x))),
    );
    h.extend(
        ["volume", "r_t", "v_t", "vacuum_radius", "vacuum_bound"]
            .iter()
            .map(|s| s.to_string()),
    );
    h.extend(
        schedule
            .particle_fractions
            .iter()
            .map(|&f| format!("particle_{}", label(f))),
    );
    h
}

/// 17 significant digits.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// CSV text of a series; `w_max` is empty when undefined.
pub fn csv_series(schedule: &DiagnosticSchedule, samples: &[DiagnosticSample]) -> String {
    let mut out = csv_header(schedule).join(",");
    out.push('\n');
    for s in samples {
        let mut row: Vec<String> = vec![
            num(s.time),
            num(s.energy),
            num(s.bd_entropy),
            num(s.rho_min),
            num(s.rho_max),
            num(s.u_max),
            s.w_max.map(num).unwrap_or_default(),
        ];
        row.extend(s.lp_u.iter().map(|&x| num(x)));
        row.extend([
            num(s.l2_grad_u),
            num(s.linf_rho_minus_mean),
            num(s.l2_grad_rho),
        ]);
        row.extend(s.r_weighted_sup.iter().map(|&x| num(x)));
        row.extend([
            num(s.volume),
            num(s.r_t),
            num(s.v_t),
            num(s.vacuum_radius),
            num(s.vacuum_bound),
        ]);
        row.extend(s.particle_radii.iter().map(|&x| num(x)));
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// A state together with the exponents needed to interpret it.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub alpha: f64,
    pub gamma: f64,
    pub state: LagrangianState,
}

/// Text snapshot: a header of `key value` lines, then one line per edge
/// (mass coordinate, radius, velocity) and one per cell (density).
pub fn snapshot_to_string(snap: &Snapshot) -> String {
    let s = &snap.state;
    let mut out = String::new();
    let _ = writeln!(out, "{SNAPSHOT_MAGIC} {SNAPSHOT_VERSION}");
    let _ = writeln!(out, "dimension {}", s.dimension);
    let _ = writeln!(out, "alpha {}", num(snap.alpha));
    let _ = writeln!(out, "gamma {}", num(snap.gamma));
    let _ = writeln!(out, "cells {}", s.cells());
    let _ = writeln!(out, "time {}", num(s.time));
    let _ = writeln!(out, "total_mass {}", num(s.total_mass));
    let _ = writeln!(out, "edges");
    for j in 0..=s.cells() {
        let _ = writeln!(
            out,
            "{} {} {}",
            num(s.mass_edges[j]),
            num(s.radius[j]),
            num(s.velocity[j])
        );
    }
    let _ = writeln!(out, "density");
    for &d in &s.density {
        let _ = writeln!(out, "{}", num(d));
    }
    out
}

fn format_err(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Format(format!("snapshot line {line}: {msg}"))
}

/// Parses a snapshot written by [`snapshot_to_string`].
pub fn snapshot_from_str(text: &str) -> Result<Snapshot> {
    let mut lines = text.lines().enumerate().map(|(k, l)| (k + 1, l));
    let mut next = |what: &str| -> Result<(usize, &str)> {
        lines
            .next()
            .ok_or_else(|| Error::Format(format!("snapshot ends before {what}")))
    };
    let (n, magic) = next("magic")?;
    match magic.split_whitespace().collect::<Vec<_>>()[..] {
        [m, v] if m == SNAPSHOT_MAGIC => {
            if v.parse::<u32>().ok() != Some(SNAPSHOT_VERSION) {
                return Err(format_err(n, format!("unsupported version {v:?}")));
            }
        }
        _ => {
            return Err(format_err(
                n,
                format!("expected \"{SNAPSHOT_MAGIC} {SNAPSHOT_VERSION}\""),
            ))
        }
    }
    fn field<T: std::str::FromStr>(line: (usize, &str), key: &str) -> Result<T> {
        let (n, l) = line;
        let rest = l
            .strip_prefix(key)
            .and_then(|r| r.strip_prefix(' '))
            .ok_or_else(|| format_err(n, format!("expected `{key} <value>`")))?;
        rest.trim()
            .parse()
            .map_err(|_| format_err(n, format!("bad value for {key}: {rest:?}")))
    }
    fn floats(line: (usize, &str), count: usize) -> Result<Vec<f64>> {
        let (n, l) = line;
        let v: Vec<f64> = l
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| format_err(n, e))?;
        if v.len() != count {
            return Err(format_err(
                n,
                format!("expected {count} numbers, found {}", v.len()),
            ));
        }
        Ok(v)
    }
    let dimension: u32 = field(next("dimension")?, "dimension")?;
    let alpha: f64 = field(next("alpha")?, "alpha")?;
    let gamma: f64 = field(next("gamma")?, "gamma")?;
    let cells: usize = field(next("cells")?, "cells")?;
    let time: f64 = field(next("time")?, "time")?;
    let total_mass: f64 = field(next("total_mass")?, "total_mass")?;
    let (n, l) = next("edges")?;
    if l != "edges" {
        return Err(format_err(n, "expected `edges`"));
    }
    let (mut mass_edges, mut radius, mut velocity) = (Vec::new(), Vec::new(), Vec::new());
    for _ in 0..=cells {
        let v = floats(next("edge rows")?, 3)?;
        mass_edges.push(v[0]);
        radius.push(v[1]);
        velocity.push(v[2]);
    }
    let (n, l) = next("density")?;
    if l != "density" {
        return Err(format_err(n, "expected `density`"));
    }
    let mut density = Vec::with_capacity(cells);
    for _ in 0..cells {
        density.push(floats(next("density rows")?, 1)?[0]);
    }
    if let Some((n, _)) = lines.find(|(_, l)| !l.trim().is_empty()) {
        return Err(format_err(n, "trailing content"));
    }
    let state = LagrangianState {
        dimension,
        mass_edges,
        density,
        velocity,
        radius,
        time,
        total_mass,
    };
    state.validate()?;
    Ok(Snapshot {
        alpha,
        gamma,
        state,
    })
}

pub fn write_snapshot(path: &Path, snap: &Snapshot) -> Result<()> {
    write_file(path, &snapshot_to_string(snap))
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    snapshot_from_str(&text)
}

/// Columns the plot script needs.
pub const PLOT_COLUMNS: [&str; 10] = [
    "time",
    "energy",
    "bd_entropy",
    "rho_min",
    "rho_max",
    "linf_rho_minus_mean",
    "l2_grad_u",
    "l2_grad_rho",
    "vacuum_radius",
    "vacuum_bound",
];

/// Gnuplot script for a series with the given header line. `series` is the
/// CSV path as the script should reference it.
pub fn emit_plot_script(series: &str, header: &str) -> Result<String> {
    let columns: Vec<&str> = header.trim_end().split(',').collect();
    let missing: Vec<&str> = PLOT_COLUMNS
        .iter()
        .cloned()
        .filter(|c| !columns.contains(c))
        .collect();
    if !missing.is_empty() {
        return Err(Error::Format(format!(
            "series lacks column(s) {}; expected a header containing {}",
            missing.join(", "),
            PLOT_COLUMNS.join(",")
        )));
    }
    let particles: Vec<&str> = columns
        .iter()
        .cloned()
        .filter(|c| c.starts_with("particle_"))
        .collect();
    let f = series.replace('\'', "");
    let mut s = String::new();
    let _ = writeln!(
        s,
        "# gnuplot script; run with `gnuplot plot.gp` from the run directory"
    );
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set terminal pngcairo size 900,600");
    let _ = writeln!(s, "set xlabel 't'");
    let _ = writeln!(s, "set key outside");
    let _ = writeln!(s, "\nset output 'energy.png'");
    let _ = writeln!(
        s,
        "plot '{f}' using \"time\":\"energy\" with lines title 'energy', \\\n     '{f}' using \"time\":\"bd_entropy\" with lines title 'bd_entropy'"
    );
    let _ = writeln!(s, "\nset output 'density_bounds.png'");
    let _ = writeln!(
        s,
        "plot '{f}' using \"time\":\"rho_min\" with lines title 'rho_min', \\\n     '{f}' using \"time\":\"rho_max\" with lines title 'rho_max'"
    );
    let _ = writeln!(s, "\nset output 'decay.png'");
    let _ = writeln!(s, "set logscale y");
    let _ = writeln!(
        s,
        "plot '{f}' using \"time\":\"linf_rho_minus_mean\" with lines title 'linf_rho_minus_mean', \\\n     '{f}' using \"time\":\"l2_grad_u\" with lines title 'l2_grad_u', \\\n     '{f}' using \"time\":\"l2_grad_rho\" with lines title 'l2_grad_rho'"
    );
    let _ = writeln!(s, "unset logscale y");
    let _ = writeln!(s, "\nset output 'paths.png'");
    let _ = writeln!(s, "set ylabel 'r'");
    let mut parts: Vec<String> = particles
        .iter()
        .map(|c| format!("'{f}' using \"time\":\"{c}\" with lines title '{c}'"))
        .collect();
    parts.push(format!(
        "'{f}' using \"time\":\"vacuum_radius\" with lines lw 2 title 'vacuum_radius'"
    ));
    parts.push(format!(
        "'{f}' using \"time\":\"vacuum_bound\" with lines dt 2 title 'vacuum_bound'"
    ));
    let _ = writeln!(s, "plot {}", parts.join(", \\\n     "));
    Ok(s)
}
