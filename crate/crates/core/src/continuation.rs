//! Parameter sweeps toward the two limits: artificial viscosity η → 0 and
//! annulus inner radius ι → 0, with distances between consecutive runs.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::DiagnosticSchedule;
use crate::error::{Error, Result};
use crate::geometry::{
    shell_volume, sphere_measure, to_eulerian, EulerianProfile, LagrangianState,
};
use crate::initial_data::{Construction, InitialDataSpec};
use crate::solver::{run, ModelParams, Termination};

/// Environment variable capping the number of concurrent member runs.
pub const THREADS_ENV: &str = "BDFLOW_SWEEP_THREADS";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepKind {
    /// Artificial-viscosity approximation on [η, R] with weight η.
    Eta,
    /// Annulus approximation on [ι, R] without artificial viscosity.
    Iota,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPlan {
    pub kind: SweepKind,
    /// Strictly decreasing positive values.
    pub values: Vec<f64>,
    pub base_params: ModelParams,
    pub base_spec: InitialDataSpec,
    pub comparison_times: Vec<f64>,
    pub schedule: DiagnosticSchedule,
    /// Also solve the unregularised system (full ball, direct data) and
    /// report distances of every member to it.
    pub reference: bool,
}

/// `count` values start, start·ratio, start·ratio², ...
pub fn geometric_values(start: f64, ratio: f64, count: usize) -> Vec<f64> {
    (0..count).map(|k| start * ratio.powi(k as i32)).collect()
}

impl SweepPlan {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::invalid("sweep.values", "must not be empty"));
        }
        if self.values.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(Error::invalid(
                "sweep.values",
                "entries must be positive and finite",
            ));
        }
        if self.values.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(Error::invalid(
                "sweep.values",
                "must be strictly decreasing",
            ));
        }
        if self.comparison_times.is_empty() {
            return Err(Error::invalid(
                "sweep.comparison_times",
                "must not be empty",
            ));
        }
        if self
            .comparison_times
            .iter()
            .any(|&t| !(t >= 0.0) || t > self.base_params.t_end)
        {
            return Err(Error::invalid(
                "sweep.comparison_times",
                "must lie in [0, t_end]",
            ));
        }
        self.base_params.validate()?;
        self.base_spec.validate()?;
        self.schedule.validate()
    }

    /// Parameters and initial data of the member with parameter `value`.
    pub fn member(&self, value: f64) -> (ModelParams, InitialDataSpec) {
        let mut params = self.base_params.clone();
        let mut spec = self.base_spec.clone();
        params.inner_radius = value;
        spec.cutoff_inner = value;
        spec.mollify_radius = value / 4.0;
        spec.vacuum_core = 0.0;
        match self.kind {
            SweepKind::Eta => {
                params.eta = value;
                spec.construction = Construction::Weak;
            }
            SweepKind::Iota => {
                params.eta = 0.0;
                spec.construction = Construction::Annulus;
            }
        }
        (params, spec)
    }

    /// The unregularised problem the sweep approaches.
    pub fn reference_member(&self) -> (ModelParams, InitialDataSpec) {
        let mut params = self.base_params.clone();
        let mut spec = self.base_spec.clone();
        params.inner_radius = 0.0;
        params.eta = 0.0;
        spec.construction = Construction::Direct;
        spec.cutoff_inner = 0.0;
        spec.mollify_radius = 0.0;
        if spec.normalize_mass.is_none() {
            spec.normalize_mass = Some(1.0);
        }
        (params, spec)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemberSummary {
    pub value: f64,
    pub params: ModelParams,
    pub termination: Termination,
    pub steps: usize,
    pub final_time: f64,
    /// Comparison times actually reached.
    pub captured_times: Vec<f64>,
    /// Error text when the member could not be set up at all.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub setup_error: Option<String>,
}

/// Distances between two states on their common grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Distance {
    pub time: f64,
    pub l1_density: f64,
    pub l2_density: f64,
    /// L² distance of √ρ u.
    pub l2_momentum: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub kind: SweepKind,
    pub values: Vec<f64>,
    pub comparison_times: Vec<f64>,
    pub members: Vec<MemberSummary>,
    /// `distances[j][k]`: members j and j+1 at comparison time k (None when either run stopped early).
    pub distances: Vec<Vec<Option<Distance>>>,
    /// `ratios[j][k]` = L¹ distance of pair j+1 over pair j at time k.
    pub ratios: Vec<Vec<Option<f64>>>,
    /// (pair index, time) where a ratio is >= 1.
    pub non_contraction: Vec<(usize, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<MemberSummary>,
    /// `reference_distances[j][k]`: member j against the reference at time k.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub reference_distances: Vec<Vec<Option<Distance>>>,
}

impl SweepReport {
    /// Whether every member and the reference completed.
    pub fn all_completed(&self) -> bool {
        self.members
            .iter()
            .all(|m| m.termination.completed() && m.setup_error.is_none())
            && self
                .reference
                .as_ref()
                .is_none_or(|r| r.termination.completed())
    }

    /// Whether the reference distances decrease along the sweep at every time.
    pub fn reference_monotone(&self) -> bool {
        (0..self.comparison_times.len()).all(|k| {
            self.reference_distances
                .windows(2)
                .all(|w| match (w[0][k], w[1][k]) {
                    (Some(a), Some(b)) => b.l1_density < a.l1_density,
                    _ => false,
                })
        })
    }
}

/// Cellwise-constant profile value at radius r with constant inward
/// extension below the inner radius.
fn value_at(profile: &EulerianProfile, values: &[f64], r: f64, inside: f64) -> f64 {
    if r < profile.inner_radius() {
        return inside;
    }
    let k = profile
        .radii
        .partition_point(|&x| x <= r)
        .clamp(1, profile.cells())
        - 1;
    values[k]
}

/// Both states on the union of their edge radii (and the origin). Inside an
/// annulus the density is extended by its innermost value and the velocity
/// by 0, its wall value.
pub fn resample_to_common_grid(
    a: &LagrangianState,
    b: &LagrangianState,
) -> Result<(EulerianProfile, EulerianProfile)> {
    a.validate()?;
    b.validate()?;
    if a.dimension != b.dimension {
        return Err(Error::invalid(
            "dimension",
            "states live in different dimensions",
        ));
    }
    let outer = a.outer_radius().max(b.outer_radius());
    let mut radii: Vec<f64> = a.radius.iter().chain(&b.radius).cloned().collect();
    radii.push(0.0);
    radii.sort_by(f64::total_cmp);
    radii.dedup_by(|x, y| (*x - *y).abs() <= 1e-14 * outer);
    let (pa, pb) = (to_eulerian(a), to_eulerian(b));
    let convert = |p: &EulerianProfile| -> Result<EulerianProfile> {
        let mut density = Vec::with_capacity(radii.len() - 1);
        let mut velocity = Vec::with_capacity(radii.len() - 1);
        for w in radii.windows(2) {
            let c = 0.5 * (w[0] + w[1]);
            density.push(value_at(p, &p.density, c, p.density[0]));
            velocity.push(value_at(p, &p.velocity, c, 0.0));
        }
        EulerianProfile::new(p.dimension, radii.clone(), density, velocity)
    };
    Ok((convert(&pa)?, convert(&pb)?))
}

/// L¹ and L² density distances and the L² distance of √ρ u over the domain.
pub fn state_distance(a: &LagrangianState, b: &LagrangianState) -> Result<Distance> {
    let (pa, pb) = resample_to_common_grid(a, b)?;
    let n = pa.dimension;
    let (mut l1, mut l2, mut lm) = (0.0, 0.0, 0.0);
    for k in 0..pa.cells() {
        let v = shell_volume(n, pa.radii[k], pa.radii[k + 1]);
        let d = pa.density[k] - pb.density[k];
        let m = pa.density[k].max(0.0).sqrt() * pa.velocity[k]
            - pb.density[k].max(0.0).sqrt() * pb.velocity[k];
        l1 += d.abs() * v;
        l2 += d * d * v;
        lm += m * m * v;
    }
    let s = sphere_measure(n);
    Ok(Distance {
        time: a.time,
        l1_density: s * l1,
        l2_density: (s * l2).sqrt(),
        l2_momentum: (s * lm).sqrt(),
    })
}

struct MemberResult {
    summary: MemberSummary,
    /// State at each comparison time, None when not reached.
    states: Vec<Option<LagrangianState>>,
}

fn run_member(
    value: f64,
    params: ModelParams,
    spec: InitialDataSpec,
    schedule: &DiagnosticSchedule,
    times: &[f64],
) -> MemberResult {
    let mut schedule = schedule.clone();
    schedule.capture_times = times.to_vec();
    schedule.keep_states = false;
    schedule.trace_steps = false;
    match run(&spec, &params, &schedule) {
        Ok(out) => {
            let states: Vec<Option<LagrangianState>> = times
                .iter()
                .map(|&t| out.captures.iter().find(|s| s.time == t).cloned())
                .collect();
            MemberResult {
                summary: MemberSummary {
                    value,
                    params: out.params,
                    termination: out.termination,
                    steps: out.steps,
                    final_time: out.final_state.time,
                    captured_times: out.captures.iter().map(|s| s.time).collect(),
                    setup_error: None,
                },
                states,
            }
        }
        Err(e) => MemberResult {
            summary: MemberSummary {
                value,
                params,
                termination: Termination::Guard {
                    time: 0.0,
                    reason: format!("setup failed: {e}"),
                    rho_min: f64::NAN,
                    rho_max: f64::NAN,
                },
                steps: 0,
                final_time: 0.0,
                captured_times: Vec::new(),
                setup_error: Some(e.to_string()),
            },
            states: vec![None; times.len()],
        },
    }
}

fn pair_distances(a: &MemberResult, b: &MemberResult) -> Vec<Option<Distance>> {
    a.states
        .iter()
        .zip(&b.states)
        .map(|(x, y)| match (x, y) {
            (Some(x), Some(y)) => state_distance(x, y).ok(),
            _ => None,
        })
        .collect()
}

/// Thread cap from the environment, if set to a positive integer.
pub fn thread_cap() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

/// Runs every member (concurrently, capped by the environment), then compares
/// consecutive members at each comparison time. Member failures are recorded
/// and do not stop the sweep.
pub fn run_sweep(plan: &SweepPlan) -> Result<SweepReport> {
    plan.validate()?;
    let times = plan.comparison_times.clone();
    let mut jobs: Vec<(f64, ModelParams, InitialDataSpec)> = plan
        .values
        .iter()
        .map(|&v| {
            let (p, s) = plan.member(v);
            (v, p, s)
        })
        .collect();
    if plan.reference {
        let (p, s) = plan.reference_member();
        jobs.push((0.0, p, s));
    }
    let execute = || -> Vec<MemberResult> {
        jobs.par_iter()
            .map(|(v, p, s)| run_member(*v, p.clone(), s.clone(), &plan.schedule, &times))
            .collect()
    };
    let mut results = match thread_cap() {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::invalid(THREADS_ENV, e.to_string()))?
            .install(execute),
        None => execute(),
    };
    let reference = if plan.reference { results.pop() } else { None };
    let distances: Vec<Vec<Option<Distance>>> = results
        .windows(2)
        .map(|w| pair_distances(&w[0], &w[1]))
        .collect();
    let ratios: Vec<Vec<Option<f64>>> = distances
        .windows(2)
        .map(|w| {
            w[0].iter()
                .zip(&w[1])
                .map(|(a, b)| match (a, b) {
                    (Some(a), Some(b)) if a.l1_density > 0.0 => Some(b.l1_density / a.l1_density),
                    _ => None,
                })
                .collect()
        })
        .collect();
    let mut non_contraction = Vec::new();
    for (j, row) in ratios.iter().enumerate() {
        for (k, r) in row.iter().enumerate() {
            if let Some(r) = r {
                if *r >= 1.0 {
                    non_contraction.push((j, times[k]));
                }
            }
        }
    }
    let reference_distances = match &reference {
        Some(r) => results.iter().map(|m| pair_distances(m, r)).collect(),
        None => Vec::new(),
    };
    Ok(SweepReport {
        kind: plan.kind,
        values: plan.values.clone(),
        comparison_times: times,
        members: results.into_iter().map(|m| m.summary).collect(),
        distances,
        ratios,
        non_contraction,
        reference: reference.map(|r| r.summary),
        reference_distances,
    })
}
