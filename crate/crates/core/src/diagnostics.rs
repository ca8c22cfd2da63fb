//! Functionals of a state or a trajectory: energies, the BD entropy, the
//! effective velocity, weighted bounds, decay metrics, particle paths and
//! vacuum analytics. All functions are pure.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{powi, shell_volume, sphere_measure, unit_ball_measure, LagrangianState};
use crate::solver::{Law, ModelParams};

/// ∫(½u² + ρ^{γ−1}/(γ−1)) dy: edge masses carry the kinetic part, cell
/// masses the internal part.
pub fn energy(state: &LagrangianState, gamma: f64) -> f64 {
    kinetic(state) + internal(state, gamma)
}

fn kinetic(state: &LagrangianState) -> f64 {
    (0..=state.cells())
        .map(|j| 0.5 * state.velocity[j] * state.velocity[j] * state.edge_mass(j))
        .sum()
}

fn internal(state: &LagrangianState, gamma: f64) -> f64 {
    (0..state.cells())
        .map(|i| state.cell_mass(i) * state.density[i].powf(gamma - 1.0) / (gamma - 1.0))
        .sum()
}

/// Energy over the physical domain, ∫_Ω(½ρ|u|² + ρ^γ/(γ−1)) dx, computed
/// in r with each cell's kinetic density taken as the mean of the squared
/// edge velocities.
pub fn eulerian_energy(state: &LagrangianState, gamma: f64) -> f64 {
    let n = state.dimension;
    let sum: f64 = (0..state.cells())
        .map(|i| {
            let rho = state.density[i];
            let v = shell_volume(n, state.radius[i], state.radius[i + 1]);
            let u2 = 0.5 * (state.velocity[i].powi(2) + state.velocity[i + 1].powi(2));
            (0.5 * rho * u2 + rho.powf(gamma) / (gamma - 1.0)) * v
        })
        .sum();
    sphere_measure(n) * sum
}

/// ∫_Ω ρ dx.
pub fn domain_mass(state: &LagrangianState) -> f64 {
    sphere_measure(state.dimension) * state.total_mass
}

/// The Lagrangian energy scaled to the physical domain.
pub fn domain_energy(state: &LagrangianState, gamma: f64) -> f64 {
    sphere_measure(state.dimension) * energy(state, gamma)
}

/// BD velocity w = u + r^{N−1}(μ(ρ))_y at every edge, with μ = ρ^α + ηρ^δ.
/// Wall edges mirror the neighbouring cell, so there w = u.
fn bd_velocity(state: &LagrangianState, law: &Law) -> Vec<f64> {
    let g = state.cells();
    let mu: Vec<f64> = state.density.iter().map(|&d| law.mu(d)).collect();
    let mut w = state.velocity.clone();
    for j in 1..g {
        let a = powi(state.radius[j], law.n - 1);
        w[j] += a * (mu[j] - mu[j - 1]) / state.edge_mass(j);
    }
    w
}

fn check_positive(state: &LagrangianState) -> Result<()> {
    for (i, &d) in state.density.iter().enumerate() {
        if !(d > 0.0) {
            return Err(Error::NonPositiveDensity { cell: i, value: d });
        }
    }
    Ok(())
}

/// ∫(½(u + r^{N−1}(ρ^α)_y + ηr^{N−1}(ρ^δ)_y)² + ρ^{γ−1}/(γ−1)) dy, with the
/// artificial term in force at the state's time.
pub fn bd_entropy(state: &LagrangianState, params: &ModelParams) -> Result<f64> {
    check_positive(state)?;
    let law = Law::new(params, state.time)?;
    let w = bd_velocity(state, &law);
    let kin: f64 = (0..=state.cells())
        .map(|j| 0.5 * w[j] * w[j] * state.edge_mass(j))
        .sum();
    Ok(kin + internal(state, params.gamma))
}

/// w = u + r^{N−1}ρ_y at every edge (α = 1). The gradient at a wall edge is
/// the difference of the two nearest cells.
pub fn effective_velocity(state: &LagrangianState, params: &ModelParams) -> Result<Vec<f64>> {
    if params.alpha != 1.0 {
        return Err(Error::invalid(
            "alpha",
            "effective velocity is defined for alpha = 1 only",
        ));
    }
    check_positive(state)?;
    let g = state.cells();
    let rho = &state.density;
    let n = state.dimension;
    let grad =
        |i: usize| (rho[i] - rho[i - 1]) / (0.5 * (state.cell_mass(i - 1) + state.cell_mass(i)));
    let mut w = state.velocity.clone();
    if g < 2 {
        return Ok(w);
    }
    for (j, wj) in w.iter_mut().enumerate() {
        *wj += powi(state.radius[j], n - 1) * grad(j.clamp(1, g - 1));
    }
    Ok(w)
}

/// Density at edge j: mean of the neighbouring cells (the single neighbour at a wall).
fn edge_density(state: &LagrangianState, j: usize) -> f64 {
    let g = state.cells();
    if j == 0 {
        state.density[0]
    } else if j == g {
        state.density[g - 1]
    } else {
        0.5 * (state.density[j - 1] + state.density[j])
    }
}

/// max over edges of ρ^{α−1/2} r^ξ (N = 2) or ρ^{α−1/2} r^{1/2+ξ} (N = 3).
pub fn r_weighted_sup(state: &LagrangianState, alpha: f64, xi: f64) -> f64 {
    let power = if state.dimension == 2 { xi } else { 0.5 + xi };
    (0..=state.cells())
        .map(|j| edge_density(state, j).powf(alpha - 0.5) * state.radius[j].powf(power))
        .fold(0.0, f64::max)
}

/// Σ m̃_j |u_j|^{2p} = ∫|u|^{2p} dy for the given exponent 2p.
pub fn lp_u(state: &LagrangianState, two_p: f64) -> f64 {
    (0..=state.cells())
        .map(|j| state.velocity[j].abs().powf(two_p) * state.edge_mass(j))
        .sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayMetrics {
    /// max_i |ρ_i − ρ̄| with ρ̄ = mass / volume.
    pub linf_rho_minus_mean: f64,
    /// ‖∇u‖_{L²(Ω)}.
    pub l2_grad_u: f64,
    /// ‖∇ρ‖_{L²(Ω)}.
    pub l2_grad_rho: f64,
}

/// Distance to the mean density and the Eulerian gradient norms.
///
/// Per cell, ∂_r u is the edge difference quotient and u/r is recovered
/// from the exact divergence (r^{N−1}u)_r / r^{N−1} minus ∂_r u, so the
/// origin needs no special case. ∇ρ uses differences between cell centres.
pub fn decay_metrics(state: &LagrangianState) -> DecayMetrics {
    let n = state.dimension;
    let g = state.cells();
    let s = sphere_measure(n);
    let mean = state.total_mass / state.volume();
    let linf_rho_minus_mean = state
        .density
        .iter()
        .map(|d| (d - mean).abs())
        .fold(0.0, f64::max);
    let nm1 = (n - 1) as f64;
    let mut gu = 0.0;
    for i in 0..g {
        let (r0, r1) = (state.radius[i], state.radius[i + 1]);
        let (u0, u1) = (state.velocity[i], state.velocity[i + 1]);
        let v = shell_volume(n, r0, r1);
        let a = (u1 - u0) / (r1 - r0);
        let div = (powi(r1, n - 1) * u1 - powi(r0, n - 1) * u0) / v;
        let b = (div - a) / nm1;
        gu += v * (a * a + nm1 * b * b);
    }
    let centres: Vec<f64> = state
        .radius
        .windows(2)
        .map(|w| 0.5 * (w[0] + w[1]))
        .collect();
    let mut gr = 0.0;
    for j in 1..g {
        let dr = centres[j] - centres[j - 1];
        let grad = (state.density[j] - state.density[j - 1]) / dr;
        gr += grad * grad * powi(state.radius[j], n - 1) * dr;
    }
    DecayMetrics {
        linf_rho_minus_mean,
        l2_grad_u: (s * gu).sqrt(),
        l2_grad_rho: (s * gr).sqrt(),
    }
}

/// Radius enclosing mass h (0 < h < M), exact inside the crossing cell
/// for cellwise-constant density.
pub fn particle_radius(state: &LagrangianState, h: f64) -> Result<f64> {
    if !(h > 0.0 && h < state.total_mass) {
        return Err(Error::invalid(
            "h",
            format!("must lie in (0, {}), got {h}", state.total_mass),
        ));
    }
    let e = &state.mass_edges;
    let i = (e.partition_point(|&y| y <= h) - 1).min(state.cells() - 1);
    let n = state.dimension;
    let nf = n as f64;
    let r0 = state.radius[i];
    let r = (powi(r0, n) + nf * (h - e[i]) / state.density[i]).powf(1.0 / nf);
    Ok(r.clamp(r0, state.radius[i + 1]))
}

/// Largest radius below which ρ r^{N−1} < threshold holds in every cell from
/// the centre outward, judged with each cell's outer radius; 0 when the first
/// cell already reaches the threshold.
pub fn vacuum_radius(state: &LagrangianState, threshold: f64) -> f64 {
    let n = state.dimension;
    let mut out = 0.0;
    for i in 0..state.cells() {
        let r = state.radius[i + 1];
        if state.density[i] * powi(r, n - 1) < threshold {
            out = r;
        } else {
            break;
        }
    }
    out
}

/// Upper bound (R^N − M₀^{γ/(γ−1)} / (ω_N((γ−1)E₀)^{1/(γ−1)}))^{1/N} on the
/// vacuum radius; 0 when the bracket is negative (no vacuum possible).
pub fn vacuum_boundary_bound(m0: f64, e0: f64, n_dim: u32, gamma: f64, outer: f64) -> Result<f64> {
    if !(gamma > 1.0) {
        return Err(Error::invalid("gamma", "must exceed 1"));
    }
    crate::geometry::check_dimension(n_dim)?;
    let g1 = gamma - 1.0;
    let inner = powi(outer, n_dim)
        - m0.powf(gamma / g1) / (unit_ball_measure(n_dim) * (g1 * e0).powf(1.0 / g1));
    Ok(if inner > 0.0 {
        inner.powf(1.0 / n_dim as f64)
    } else {
        0.0
    })
}

/// What to record during a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagnosticSchedule {
    /// Time between samples; samples are also taken at t = 0 and at the end.
    pub sample_interval: f64,
    /// Exponents 2p for the ∫|u|^{2p} dy columns.
    pub lp_exponents: Vec<f64>,
    /// ξ values for the weighted density bound.
    pub xi: Vec<f64>,
    /// Particle paths, given as fractions of the total mass in (0, 1).
    pub particle_fractions: Vec<f64>,
    pub vacuum_threshold: f64,
    /// Keep the state at every sample time.
    #[serde(skip)]
    pub keep_states: bool,
    /// Extra times at which the state is kept; the integrator lands on them exactly.
    #[serde(skip)]
    pub capture_times: Vec<f64>,
    /// Record energy, BD entropy and volume after every step.
    #[serde(skip)]
    pub trace_steps: bool,
}

impl Default for DiagnosticSchedule {
    fn default() -> Self {
        DiagnosticSchedule {
            sample_interval: 0.1,
            lp_exponents: vec![4.0],
            xi: vec![0.5],
            particle_fractions: vec![0.25, 0.5, 0.75],
            vacuum_threshold: 1e-4,
            keep_states: false,
            capture_times: Vec::new(),
            trace_steps: false,
        }
    }
}

impl DiagnosticSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.sample_interval > 0.0) || !self.sample_interval.is_finite() {
            return Err(Error::invalid("sample_interval", "must be positive"));
        }
        if self
            .lp_exponents
            .iter()
            .any(|&e| !(e > 0.0) || !e.is_finite())
        {
            return Err(Error::invalid("lp_exponents", "entries must be positive"));
        }
        if self.xi.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
            return Err(Error::invalid("xi", "entries must be positive"));
        }
        if self
            .particle_fractions
            .iter()
            .any(|&h| !(h > 0.0 && h < 1.0))
        {
            return Err(Error::invalid(
                "particle_fractions",
                "entries must lie in (0, 1)",
            ));
        }
        if !(self.vacuum_threshold > 0.0) {
            return Err(Error::invalid("vacuum_threshold", "must be positive"));
        }
        Ok(())
    }
}

/// One row of the time series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticSample {
    pub time: f64,
    pub energy: f64,
    pub bd_entropy: f64,
    pub rho_min: f64,
    pub rho_max: f64,
    pub u_max: f64,
    /// max |w|, present for α = 1 only.
    pub w_max: Option<f64>,
    /// Aligned with the schedule's `lp_exponents`.
    pub lp_u: Vec<f64>,
    pub l2_grad_u: f64,
    pub linf_rho_minus_mean: f64,
    pub l2_grad_rho: f64,
    /// Aligned with the schedule's `xi`.
    pub r_weighted_sup: Vec<f64>,
    /// ∫v dy.
    pub volume: f64,
    /// Running sup of ρ_max, plus 1.
    pub r_t: f64,
    /// Running sup of 1/ρ_min, plus 1.
    pub v_t: f64,
    pub vacuum_radius: f64,
    pub vacuum_bound: f64,
    /// Aligned with the schedule's `particle_fractions`.
    pub particle_radii: Vec<f64>,
}

/// Evaluates every functional on one state. `prev` carries the running sups.
pub fn sample(
    state: &LagrangianState,
    params: &ModelParams,
    schedule: &DiagnosticSchedule,
    vacuum_bound: f64,
    prev: Option<&DiagnosticSample>,
) -> Result<DiagnosticSample> {
    let rho_min = state.min_density();
    let rho_max = state.max_density();
    let w_max = if params.alpha == 1.0 {
        Some(
            effective_velocity(state, params)?
                .iter()
                .fold(0.0, |a: f64, w| a.max(w.abs())),
        )
    } else {
        None
    };
    let d = decay_metrics(state);
    let inv_min = if rho_min > 0.0 {
        1.0 / rho_min
    } else {
        f64::INFINITY
    };
    let (r_t, v_t) = match prev {
        Some(p) => (p.r_t.max(rho_max + 1.0), p.v_t.max(inv_min + 1.0)),
        None => (rho_max + 1.0, inv_min + 1.0),
    };
    Ok(DiagnosticSample {
        time: state.time,
        energy: energy(state, params.gamma),
        bd_entropy: bd_entropy(state, params)?,
        rho_min,
        rho_max,
        u_max: state.velocity.iter().fold(0.0, |a: f64, u| a.max(u.abs())),
        w_max,
        lp_u: schedule
            .lp_exponents
            .iter()
            .map(|&e| lp_u(state, e))
            .collect(),
        l2_grad_u: d.l2_grad_u,
        linf_rho_minus_mean: d.linf_rho_minus_mean,
        l2_grad_rho: d.l2_grad_rho,
        r_weighted_sup: schedule
            .xi
            .iter()
            .map(|&x| r_weighted_sup(state, params.alpha, x))
            .collect(),
        volume: state.volume(),
        r_t,
        v_t,
        vacuum_radius: vacuum_radius(state, schedule.vacuum_threshold),
        vacuum_bound,
        particle_radii: schedule
            .particle_fractions
            .iter()
            .map(|&f| particle_radius(state, f * state.total_mass))
            .collect::<Result<_>>()?,
    })
}

/// Stored states of a run, in time order.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub states: Vec<LagrangianState>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParticlePathSeries {
    pub h: f64,
    pub times: Vec<f64>,
    pub radii: Vec<f64>,
}

/// r_h(t) at every stored time.
pub fn particle_path(trajectory: &Trajectory, h: f64) -> Result<ParticlePathSeries> {
    let mut times = Vec::with_capacity(trajectory.states.len());
    let mut radii = Vec::with_capacity(trajectory.states.len());
    for s in &trajectory.states {
        times.push(s.time);
        radii.push(particle_radius(s, h)?);
    }
    Ok(ParticlePathSeries { h, times, radii })
}

/// Running (R_T, V_T) = (sup ρ_max + 1, sup 1/ρ_min + 1) at every stored
/// time; V_T is +∞ once a sample has zero density.
pub fn density_extrema(trajectory: &Trajectory) -> Vec<(f64, f64, f64)> {
    let mut r_t = f64::NEG_INFINITY;
    let mut v_t = f64::NEG_INFINITY;
    trajectory
        .states
        .iter()
        .map(|s| {
            let lo = s.min_density();
            r_t = r_t.max(s.max_density() + 1.0);
            v_t = v_t.max(if lo > 0.0 {
                1.0 / lo + 1.0
            } else {
                f64::INFINITY
            });
            (s.time, r_t, v_t)
        })
        .collect()
}
