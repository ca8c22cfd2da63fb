//! Time integration of the radial system in mass coordinates.
//!
//! Unknowns: cell density ρ_i and edge velocity u_j, with u = 0 at both
//! walls. The edge radius is recovered from the density after each step.
//! The viscosity is μ(ρ) = ρ^α + ηρ^δ with the BD partner λ = ρμ' − μ, so the
//! momentum flux coefficient is c(ρ) = ρ²μ'(ρ) = αρ^{1+α} + ηδρ^{1+δ}.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{check_dimension, powi, reconstruct_radius, LagrangianState};
use crate::regime;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Explicit,
    SemiImplicit,
}

impl FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "explicit" => Ok(Scheme::Explicit),
            "semi-implicit" => Ok(Scheme::SemiImplicit),
            _ => Err(Error::invalid(
                "scheme",
                format!("expected explicit or semi-implicit, got {s:?}"),
            )),
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scheme::Explicit => "explicit",
            Scheme::SemiImplicit => "semi-implicit",
        })
    }
}

fn default_true() -> bool {
    true
}

/// Physical and numerical parameters of one simulation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelParams {
    /// Spatial dimension N (2 or 3).
    pub dimension: u32,
    pub alpha: f64,
    pub gamma: f64,
    /// Artificial-viscosity weight; 0 disables the ηρ^δ term.
    pub eta: f64,
    /// Artificial exponent; chosen automatically from p when absent.
    pub delta: Option<f64>,
    /// The artificial viscosity is switched off from this time on.
    pub eta_until: Option<f64>,
    /// Inner radius of the annulus (0 for the full ball).
    pub inner_radius: f64,
    /// Outer radius R.
    pub radius: f64,
    pub grid_cells: usize,
    pub scheme: Scheme,
    pub dt_safety: f64,
    /// Optional hard cap on the time step.
    pub dt_max: Option<f64>,
    pub t_end: f64,
    /// Runs stop with a guard trip once the maximum density exceeds this value.
    pub density_ceiling: f64,
    /// Test hook: drops the pressure terms when false.
    #[serde(skip, default = "default_true")]
    pub pressure: bool,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            dimension: 2,
            alpha: 1.0,
            gamma: 2.0,
            eta: 0.0,
            delta: None,
            eta_until: None,
            inner_radius: 0.0,
            radius: 1.0,
            grid_cells: 256,
            scheme: Scheme::SemiImplicit,
            dt_safety: 0.5,
            dt_max: None,
            t_end: 1.0,
            density_ceiling: 1e8,
            pressure: true,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        check_dimension(self.dimension)?;
        let finite = |name: &str, x: f64| {
            if x.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(name, "must be finite"))
            }
        };
        finite("alpha", self.alpha)?;
        finite("gamma", self.gamma)?;
        finite("eta", self.eta)?;
        finite("t_end", self.t_end)?;
        if !(self.gamma > 1.0) {
            return Err(Error::invalid("gamma", "must exceed 1"));
        }
        if !(self.alpha > 0.0) {
            return Err(Error::invalid("alpha", "must be positive"));
        }
        if !(self.eta >= 0.0) {
            return Err(Error::invalid("eta", "must be >= 0"));
        }
        if !(self.inner_radius >= 0.0) || !self.inner_radius.is_finite() {
            return Err(Error::invalid("inner_radius", "must be finite and >= 0"));
        }
        if !(self.radius > self.inner_radius) || !self.radius.is_finite() {
            return Err(Error::invalid(
                "radius",
                "must be finite and exceed inner_radius",
            ));
        }
        if self.grid_cells < 8 {
            return Err(Error::invalid("grid_cells", "must be at least 8"));
        }
        if !(self.dt_safety > 0.0 && self.dt_safety <= 1.0) {
            return Err(Error::invalid("dt_safety", "must lie in (0, 1]"));
        }
        if let Some(d) = self.dt_max {
            if !(d > 0.0) {
                return Err(Error::invalid("dt_max", "must be positive"));
            }
        }
        if !(self.t_end >= 0.0) {
            return Err(Error::invalid("t_end", "must be >= 0"));
        }
        if !(self.density_ceiling > 0.0) {
            return Err(Error::invalid("density_ceiling", "must be positive"));
        }
        if let Some(d) = self.delta {
            if !d.is_finite() {
                return Err(Error::invalid("delta", "must be finite"));
            }
        }
        Ok(())
    }

    /// Whether μ + Nλ = (1 + N(α−1))ρ^α is positive.
    pub fn viscosity_positive(&self) -> bool {
        1.0 + self.dimension as f64 * (self.alpha - 1.0) > 0.0
    }

    /// Fills in δ from the admissibility rules for the exponent p when η > 0.
    /// An explicitly given δ is checked against the same rules.
    pub fn resolve_delta(&mut self, p: Option<f64>) -> Result<()> {
        if self.eta == 0.0 {
            return Ok(());
        }
        let p = match p {
            Some(p) => p,
            None if self.delta.is_some() => return Ok(()),
            None => {
                return Err(Error::invalid(
                    "delta",
                    "eta > 0 needs delta or an exponent p to select it",
                ))
            }
        };
        match self.delta {
            None => self.delta = Some(regime::select_delta(self.dimension, p)?),
            Some(d) => {
                if !regime::delta_admissible(self.dimension, p, d)? {
                    let (lo, hi) = regime::delta_interval(self.dimension, p)?;
                    return Err(Error::invalid(
                        "delta",
                        format!(
                            "{d} not admissible for N={}, p={p}: need ({lo}, {hi})",
                            self.dimension
                        ),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Artificial-viscosity weight in force at time t.
    pub fn eta_at(&self, t: f64) -> f64 {
        match self.eta_until {
            Some(t1) if t >= t1 => 0.0,
            _ => self.eta,
        }
    }
}

/// Constitutive laws at one instant.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Law {
    pub n: u32,
    pub alpha: f64,
    pub gamma: f64,
    pub eta: f64,
    pub delta: f64,
    pub pressure: bool,
}

impl Law {
    pub fn new(params: &ModelParams, t: f64) -> Result<Law> {
        let eta = params.eta_at(t);
        let delta = if eta > 0.0 {
            params
                .delta
                .ok_or_else(|| Error::invalid("delta", "unresolved while eta > 0"))?
        } else {
            0.0
        };
        Ok(Law {
            n: params.dimension,
            alpha: params.alpha,
            gamma: params.gamma,
            eta,
            delta,
            pressure: params.pressure,
        })
    }

    pub fn mu(&self, rho: f64) -> f64 {
        let base = rho.powf(self.alpha);
        if self.eta > 0.0 {
            base + self.eta * rho.powf(self.delta)
        } else {
            base
        }
    }

    pub fn dmu(&self, rho: f64) -> f64 {
        let base = self.alpha * rho.powf(self.alpha - 1.0);
        if self.eta > 0.0 {
            base + self.eta * self.delta * rho.powf(self.delta - 1.0)
        } else {
            base
        }
    }

    pub fn c(&self, rho: f64) -> f64 {
        rho * rho * self.dmu(rho)
    }

    pub fn p(&self, rho: f64) -> f64 {
        if self.pressure {
            rho.powf(self.gamma)
        } else {
            0.0
        }
    }

    pub fn dp(&self, rho: f64) -> f64 {
        if self.pressure {
            self.gamma * rho.powf(self.gamma - 1.0)
        } else {
            0.0
        }
    }
}

/// Diagnostics of one accepted step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub dt_used: f64,
    /// max_i |ρ_i^{n+1} − ρ_i^n| / ρ_i^n.
    pub max_density_change: f64,
    /// Newton iterations of the implicit solve (0 for explicit steps).
    pub viscous_solve_iterations: usize,
    /// max_j |(r_j^{n+1} − r_j^n)/dt − u_j^{n+1}|.
    pub kinematic_residual: f64,
    pub positivity_ok: bool,
}

fn check_positive(state: &LagrangianState) -> Result<()> {
    for (i, &d) in state.density.iter().enumerate() {
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::NonPositiveDensity { cell: i, value: d });
        }
    }
    Ok(())
}

fn edge_weights(state: &LagrangianState) -> Vec<f64> {
    let k = state.dimension - 1;
    state.radius.iter().map(|&r| powi(r, k)).collect()
}

/// Volume rate (r^{N−1}u)_y per cell.
fn divergence(a: &[f64], u: &[f64], m: &[f64]) -> Vec<f64> {
    (0..m.len())
        .map(|i| (a[i + 1] * u[i + 1] - a[i] * u[i]) / m[i])
        .collect()
}

/// ∂_τ u at every edge; the two wall entries are 0.
pub fn momentum_rhs(state: &LagrangianState, params: &ModelParams) -> Result<Vec<f64>> {
    check_positive(state)?;
    let law = Law::new(params, state.time)?;
    let g = state.cells();
    let m = state.cell_masses();
    let a = edge_weights(state);
    let div = divergence(&a, &state.velocity, &m);
    let flux: Vec<f64> = (0..g)
        .map(|i| law.c(state.density[i]) * div[i] - law.p(state.density[i]))
        .collect();
    let mu: Vec<f64> = state.density.iter().map(|&d| law.mu(d)).collect();
    let nm1 = (law.n - 1) as f64;
    let mut out = vec![0.0; g + 1];
    for j in 1..g {
        let mt = 0.5 * (m[j - 1] + m[j]);
        let r = state.radius[j];
        let geo = if law.n == 2 { 1.0 } else { r };
        out[j] = a[j] * (flux[j] - flux[j - 1]) / mt
            - nm1 * geo * (mu[j] - mu[j - 1]) / mt * state.velocity[j];
    }
    Ok(out)
}

/// ∂_τ ρ = −ρ²(r^{N−1}u)_y per cell.
pub fn continuity_rhs(state: &LagrangianState, params: &ModelParams) -> Result<Vec<f64>> {
    check_positive(state)?;
    check_dimension(params.dimension)?;
    let m = state.cell_masses();
    let a = edge_weights(state);
    let div = divergence(&a, &state.velocity, &m);
    Ok(state
        .density
        .iter()
        .zip(&div)
        .map(|(&d, &dv)| -d * d * dv)
        .collect())
}

fn finish_step(
    old: &LagrangianState,
    velocity: Vec<f64>,
    density: Vec<f64>,
    dt: f64,
    iterations: usize,
) -> Result<(LagrangianState, StepReport)> {
    let g = old.cells();
    let radius = reconstruct_radius(&density, &old.mass_edges, old.inner_radius(), old.dimension)?;
    let max_density_change = density
        .iter()
        .zip(&old.density)
        .map(|(n, o)| ((n - o) / o).abs())
        .fold(0.0, f64::max);
    let kinematic_residual = (1..g)
        .map(|j| ((radius[j] - old.radius[j]) / dt - velocity[j]).abs())
        .fold(0.0, f64::max);
    let positivity_ok = density.iter().all(|&d| d > 0.0);
    let state = LagrangianState {
        dimension: old.dimension,
        mass_edges: old.mass_edges.clone(),
        density,
        velocity,
        radius,
        time: old.time + dt,
        total_mass: old.total_mass,
    };
    Ok((
        state,
        StepReport {
            dt_used: dt,
            max_density_change,
            viscous_solve_iterations: iterations,
            kinematic_residual,
            positivity_ok,
        },
    ))
}

fn check_dt(dt: f64) -> Result<()> {
    if dt > 0.0 && dt.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(
            "dt",
            format!("must be positive and finite, got {dt}"),
        ))
    }
}

/// Symplectic Euler: velocity from the momentum balance, then specific volume
/// from the new velocity on the old radius map.
pub fn step_explicit(
    state: &LagrangianState,
    params: &ModelParams,
    dt: f64,
) -> Result<(LagrangianState, StepReport)> {
    check_dt(dt)?;
    let rhs = momentum_rhs(state, params)?;
    let g = state.cells();
    let mut u: Vec<f64> = state
        .velocity
        .iter()
        .zip(&rhs)
        .map(|(u, f)| u + dt * f)
        .collect();
    u[0] = 0.0;
    u[g] = 0.0;
    let m = state.cell_masses();
    let a = edge_weights(state);
    let div = divergence(&a, &u, &m);
    let mut density = Vec::with_capacity(g);
    for i in 0..g {
        let v = 1.0 / state.density[i] + dt * div[i];
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::Step(format!(
                "positivity lost in cell {i} at t={} (specific volume {v})",
                state.time
            )));
        }
        density.push(1.0 / v);
    }
    finish_step(state, u, density, dt, 0)
}

/// Solves a tridiagonal system by forward elimination. `lower[0]` and
/// `upper[n-1]` are ignored. A non-positive pivot is reported as an error.
pub fn solve_tridiagonal(
    lower: &[f64],
    diag: &[f64],
    upper: &[f64],
    rhs: &[f64],
) -> Result<Vec<f64>> {
    let n = diag.len();
    if lower.len() != n || upper.len() != n || rhs.len() != n {
        return Err(Error::invalid(
            "tridiagonal",
            "bands and right-hand side must have equal length",
        ));
    }
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut pivot = diag.first().copied().unwrap_or(1.0);
    for i in 0..n {
        if i > 0 {
            pivot = diag[i] - lower[i] * c[i - 1];
        }
        if !(pivot > 0.0) || !pivot.is_finite() {
            return Err(Error::Step(format!(
                "non-positive pivot {pivot} in row {i} of the viscous solve"
            )));
        }
        c[i] = upper[i] / pivot;
        d[i] = if i > 0 {
            (rhs[i] - lower[i] * d[i - 1]) / pivot
        } else {
            rhs[i] / pivot
        };
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        x[i] = if i + 1 < n {
            d[i] - c[i] * x[i + 1]
        } else {
            d[i]
        };
    }
    Ok(x)
}

/// Implicit-step residual F(u) and its tridiagonal Jacobian.
struct ImplicitProblem<'a> {
    law: Law,
    dt: f64,
    m: Vec<f64>,
    mt: Vec<f64>,
    a: Vec<f64>,
    rn0: Vec<f64>,
    v0: Vec<f64>,
    b0: Vec<f64>,
    u0: &'a [f64],
}

struct Evaluation {
    residual: Vec<f64>,
    /// Largest magnitude among the terms of each residual row.
    term_scale: f64,
    density: Vec<f64>,
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
}

impl ImplicitProblem<'_> {
    /// Returns None when the iterate leaves the admissible set (v ≤ 0 or r^N ≤ 0).
    fn evaluate(&self, u: &[f64]) -> Option<Evaluation> {
        let law = &self.law;
        let g = self.m.len();
        let nf = law.n as f64;
        let dt = self.dt;
        let mut rho = vec![0.0; g];
        for i in 0..g {
            let v = self.v0[i] + dt * (self.a[i + 1] * u[i + 1] - self.a[i] * u[i]) / self.m[i];
            if !(v > 0.0) || !v.is_finite() {
                return None;
            }
            rho[i] = 1.0 / v;
        }
        let mu: Vec<f64> = rho.iter().map(|&d| law.mu(d)).collect();
        let dmu: Vec<f64> = rho.iter().map(|&d| law.dmu(d)).collect();
        let p: Vec<f64> = rho.iter().map(|&d| law.p(d)).collect();
        let dp: Vec<f64> = rho.iter().map(|&d| law.dp(d)).collect();
        // dρ_i/du_i and dρ_i/du_{i+1}.
        let pp: Vec<f64> = (0..g)
            .map(|i| rho[i] * rho[i] * dt * self.a[i] / self.m[i])
            .collect();
        let qq: Vec<f64> = (0..g)
            .map(|i| -rho[i] * rho[i] * dt * self.a[i + 1] / self.m[i])
            .collect();
        let n_u = g - 1;
        let mut ev = Evaluation {
            residual: vec![0.0; n_u],
            term_scale: 0.0,
            density: Vec::new(),
            lower: vec![0.0; n_u],
            diag: vec![0.0; n_u],
            upper: vec![0.0; n_u],
        };
        for j in 1..g {
            let rn = self.rn0[j] + nf * dt * self.a[j] * u[j];
            if !(rn > 0.0) {
                return None;
            }
            let r = rn.powf(1.0 / nf);
            let s = rn / r;
            let ds = (nf - 1.0) * dt * self.a[j] / r;
            let mt = self.mt[j];
            let k = dt * self.a[j] / mt;
            let dmu_jump = mu[j] - mu[j - 1];
            let row = j - 1;
            ev.residual[row] =
                u[j] - self.u0[j] + s * dmu_jump / mt - self.b0[j] + k * (p[j] - p[j - 1]);
            let terms = u[j].abs()
                + self.u0[j].abs()
                + s * (mu[j] + mu[j - 1]) / mt
                + self.b0[j].abs()
                + k * (p[j] + p[j - 1]);
            ev.term_scale = ev.term_scale.max(terms);
            let right = s * dmu[j] / mt + k * dp[j];
            let left = s * dmu[j - 1] / mt + k * dp[j - 1];
            ev.lower[row] = -left * pp[j - 1];
            ev.diag[row] = 1.0 + ds * dmu_jump / mt + right * pp[j] - left * qq[j - 1];
            ev.upper[row] = right * qq[j];
        }
        ev.density = rho;
        Some(ev)
    }
}

fn sup_norm(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

const NEWTON_MAX_ITER: usize = 50;
const NEWTON_RTOL: f64 = 1e-13;
const NEWTON_UPDATE_FLOOR: f64 = 1e-14;
const NEWTON_ROUNDING: f64 = 8.0;
const NEWTON_STALL_FACTOR: f64 = 100.0;

/// Implicit step in velocity.
///
/// The new specific volume and radius are affine in the new velocity
/// (v^{n+1} = v^n + dt (r_n^{N−1}u^{n+1})_y, r_{n+1}^N = r_n^N + N dt r_n^{N−1}u^{n+1}),
/// and the momentum balance is imposed in the form
/// u^{n+1} + r^{N−1}(μ^{n+1})_y = u^n + r_n^{N−1}(μ^n)_y − dt r_n^{N−1}(p^{n+1})_y,
/// which carries the full viscous operator. The nonlinear system is solved by
/// Newton's method with a tridiagonal Jacobian and step damping.
pub fn step_semi_implicit(
    state: &LagrangianState,
    params: &ModelParams,
    dt: f64,
) -> Result<(LagrangianState, StepReport)> {
    check_dt(dt)?;
    check_positive(state)?;
    let law = Law::new(params, state.time)?;
    let g = state.cells();
    let m = state.cell_masses();
    let mt: Vec<f64> = (0..=g).map(|j| state.edge_mass(j)).collect();
    let a = edge_weights(state);
    let rn0: Vec<f64> = state.radius.iter().map(|&r| powi(r, law.n)).collect();
    let v0: Vec<f64> = state.density.iter().map(|&d| 1.0 / d).collect();
    let mu0: Vec<f64> = state.density.iter().map(|&d| law.mu(d)).collect();
    let mut b0 = vec![0.0; g + 1];
    for j in 1..g {
        b0[j] = a[j] * (mu0[j] - mu0[j - 1]) / mt[j];
    }
    let problem = ImplicitProblem {
        law,
        dt,
        m,
        mt,
        a,
        rn0,
        v0,
        b0,
        u0: &state.velocity,
    };
    let mut u = state.velocity.clone();
    let mut ev = problem
        .evaluate(&u)
        .ok_or_else(|| Error::Step("initial iterate inadmissible".into()))?;
    let scale = sup_norm(&state.velocity)
        .max(sup_norm(&ev.residual))
        .max(f64::MIN_POSITIVE);
    // The residual cannot drop below the rounding error of its largest terms.
    let tol = (NEWTON_RTOL * scale).max(NEWTON_ROUNDING * f64::EPSILON * ev.term_scale);
    let mut norm = sup_norm(&ev.residual);
    let mut iterations = 0;
    while norm > tol {
        if iterations == NEWTON_MAX_ITER {
            return Err(Error::Step(format!(
                "implicit solve did not converge at t={} (residual {norm:e}, scale {scale:e})",
                state.time
            )));
        }
        iterations += 1;
        let rhs: Vec<f64> = ev.residual.iter().map(|r| -r).collect();
        let delta = solve_tridiagonal(&ev.lower, &ev.diag, &ev.upper, &rhs)?;
        // Updates at the rounding level of u: the residual has hit its floor.
        let floor = sup_norm(&delta) <= NEWTON_UPDATE_FLOOR * sup_norm(&u).max(scale);
        let mut lambda = 1.0;
        loop {
            let mut trial = u.clone();
            for (j, d) in delta.iter().enumerate() {
                trial[j + 1] = u[j + 1] + lambda * d;
            }
            if let Some(next) = problem.evaluate(&trial) {
                let next_norm = sup_norm(&next.residual);
                if next_norm < norm || floor {
                    u = trial;
                    ev = next;
                    norm = next_norm;
                    break;
                }
            }
            lambda *= 0.5;
            if lambda < 1e-10 {
                if norm <= NEWTON_STALL_FACTOR * tol {
                    break;
                }
                return Err(Error::Step(format!(
                    "implicit solve stalled at t={} (residual {norm:e})",
                    state.time
                )));
            }
        }
        if floor || lambda < 1e-10 {
            break;
        }
    }
    finish_step(state, u, ev.density, dt, iterations)
}

/// Largest stable time step times `dt_safety`.
///
/// Per cell, the acoustic bound Δy/(ρ r^{N−1} c) with c = √(γρ^{γ−1}),
/// the cell's own mass Δy and the weight r^{N−1} of its outer edge; the
/// explicit scheme adds Δy²/(2 c_visc r^{2(N−1)}) with c_visc = αρ^{1+α} + ηδρ^{1+δ}.
pub fn stable_dt(state: &LagrangianState, params: &ModelParams) -> f64 {
    let law = match Law::new(params, state.time) {
        Ok(l) => l,
        Err(_) => return f64::MIN_POSITIVE,
    };
    let mut dt = f64::INFINITY;
    for i in 0..state.cells() {
        let rho = state.density[i];
        let a = powi(state.radius[i + 1], law.n - 1);
        let dy = state.cell_mass(i);
        if law.pressure {
            let sound = (law.gamma * rho.powf(law.gamma - 1.0)).sqrt();
            dt = dt.min(dy / (rho * a * sound));
        }
        if params.scheme == Scheme::Explicit {
            dt = dt.min(dy * dy / (2.0 * law.c(rho) * a * a));
        }
    }
    params.dt_safety * dt
}

/// One step with the configured scheme.
pub fn step(
    state: &LagrangianState,
    params: &ModelParams,
    dt: f64,
) -> Result<(LagrangianState, StepReport)> {
    match params.scheme {
        Scheme::Explicit => step_explicit(state, params, dt),
        Scheme::SemiImplicit => step_semi_implicit(state, params, dt),
    }
}

/// Time step limit keeping the relative volume change of every cell below `frac`.
pub fn volume_change_dt(state: &LagrangianState, frac: f64) -> f64 {
    let m = state.cell_masses();
    let a = edge_weights(state);
    let div = divergence(&a, &state.velocity, &m);
    div.iter()
        .zip(&state.density)
        .filter(|(d, _)| d.abs() > 0.0)
        .map(|(d, rho)| frac / (rho * d.abs()))
        .fold(f64::INFINITY, f64::min)
}

/// Why a run stopped.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum Termination {
    Completed,
    Guard {
        time: f64,
        reason: String,
        rho_min: f64,
        rho_max: f64,
    },
}

impl Termination {
    pub fn completed(&self) -> bool {
        matches!(self, Termination::Completed)
    }

    pub fn as_error(&self) -> Option<Error> {
        match self {
            Termination::Completed => None,
            Termination::Guard {
                time,
                reason,
                rho_min,
                rho_max,
            } => Some(Error::Guard {
                time: *time,
                reason: reason.clone(),
                rho_min: *rho_min,
                rho_max: *rho_max,
            }),
        }
    }
}

/// Per-step record kept when the schedule asks for it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepTrace {
    pub time: f64,
    pub dt: f64,
    pub energy: f64,
    pub bd_entropy: f64,
    pub volume: f64,
    pub rho_min: f64,
    pub iterations: usize,
    pub kinematic_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunOutput {
    /// Parameters with δ resolved.
    pub params: ModelParams,
    pub regime: Option<crate::regime::RegimeReport>,
    pub samples: Vec<crate::diagnostics::DiagnosticSample>,
    /// States at sample times when the schedule keeps them.
    pub trajectory: crate::diagnostics::Trajectory,
    /// States at the schedule's capture times.
    pub captures: Vec<LagrangianState>,
    pub step_trace: Vec<StepTrace>,
    pub termination: Termination,
    pub final_state: LagrangianState,
    pub steps: usize,
    pub retries: usize,
    pub max_kinematic_residual: f64,
    /// ∫_Ω ρ₀ dx.
    pub initial_mass: f64,
    /// ∫_Ω (½ρ₀|u₀|² + ρ₀^γ/(γ−1)) dx.
    pub initial_energy: f64,
    pub vacuum_bound: f64,
}

const MAX_RETRIES: usize = 20;
const VOLUME_CHANGE_LIMIT: f64 = 0.2;

/// Resolves δ, classifies the regime and builds the initial state.
pub fn prepare(
    spec: &crate::initial_data::InitialDataSpec,
    params: &ModelParams,
) -> Result<(ModelParams, crate::regime::RegimeReport, LagrangianState)> {
    let mut params = params.clone();
    params.validate()?;
    params.resolve_delta(Some(spec.exponents.p))?;
    let regime = regime::classify_regime(
        params.dimension,
        params.alpha,
        params.gamma,
        Some(spec.exponents.p),
        Some(&spec.exponents.q),
    );
    let state = crate::initial_data::initial_state(spec, &params)?;
    Ok((params, regime, state))
}

/// Builds the initial state from `spec` and integrates it.
///
/// The regime classification is recorded but not enforced.
pub fn run(
    spec: &crate::initial_data::InitialDataSpec,
    params: &ModelParams,
    schedule: &crate::diagnostics::DiagnosticSchedule,
) -> Result<RunOutput> {
    let (params, regime, state) = prepare(spec, params)?;
    let mut out = run_from_state(state, &params, schedule)?;
    out.regime = Some(regime);
    Ok(out)
}

fn guard(state: &LagrangianState, reason: impl Into<String>) -> Termination {
    Termination::Guard {
        time: state.time,
        reason: reason.into(),
        rho_min: state.min_density(),
        rho_max: state.max_density(),
    }
}

/// Integrates a given state to `params.t_end`.
pub fn run_from_state(
    initial: LagrangianState,
    params: &ModelParams,
    schedule: &crate::diagnostics::DiagnosticSchedule,
) -> Result<RunOutput> {
    use crate::diagnostics::{
        domain_energy, domain_mass, sample, vacuum_boundary_bound, Trajectory,
    };
    params.validate()?;
    schedule.validate()?;
    initial.validate()?;
    if initial.dimension != params.dimension {
        return Err(Error::invalid("dimension", "state and parameters disagree"));
    }
    Law::new(params, initial.time)?;
    let initial_mass = domain_mass(&initial);
    let initial_energy = domain_energy(&initial, params.gamma);
    let vacuum_bound = vacuum_boundary_bound(
        initial_mass,
        initial_energy,
        params.dimension,
        params.gamma,
        params.radius,
    )?;
    let mut captures_due: Vec<f64> = schedule
        .capture_times
        .iter()
        .cloned()
        .filter(|&t| t >= initial.time && t <= params.t_end)
        .collect();
    captures_due.sort_by(f64::total_cmp);
    captures_due.dedup();
    let mut out = RunOutput {
        params: params.clone(),
        regime: None,
        samples: Vec::new(),
        trajectory: Trajectory::default(),
        captures: Vec::new(),
        step_trace: Vec::new(),
        termination: Termination::Completed,
        final_state: initial.clone(),
        steps: 0,
        retries: 0,
        max_kinematic_residual: 0.0,
        initial_mass,
        initial_energy,
        vacuum_bound,
    };
    let mut state = initial;
    let record = |out: &mut RunOutput, state: &LagrangianState| -> Result<()> {
        let s = sample(state, params, schedule, vacuum_bound, out.samples.last())?;
        out.samples.push(s);
        if schedule.keep_states {
            out.trajectory.states.push(state.clone());
        }
        Ok(())
    };
    record(&mut out, &state)?;
    let mut capture_idx = 0;
    while capture_idx < captures_due.len() && captures_due[capture_idx] <= state.time {
        out.captures.push(state.clone());
        capture_idx += 1;
    }
    let t_end = params.t_end;
    let mut next_sample_k: u64 = (state.time / schedule.sample_interval).floor() as u64 + 1;
    while state.time < t_end {
        let t = state.time;
        let mut target = (next_sample_k as f64 * schedule.sample_interval).min(t_end);
        if let Some(&c) = captures_due.get(capture_idx) {
            target = target.min(c);
        }
        if let Some(t1) = params.eta_until {
            if t1 > t {
                target = target.min(t1);
            }
        }
        let mut dt = stable_dt(&state, params).min(volume_change_dt(&state, VOLUME_CHANGE_LIMIT));
        if let Some(cap) = params.dt_max {
            dt = dt.min(cap);
        }
        if !(dt > 0.0) {
            out.termination = guard(&state, format!("no admissible time step (dt={dt})"));
            break;
        }
        let mut attempts = 0;
        let accepted = loop {
            let landing = t + dt >= target - 1e-12 * target.abs().max(1.0);
            let this_dt = if landing { target - t } else { dt };
            match step(&state, params, this_dt) {
                Ok((mut next, report)) => {
                    if landing {
                        next.time = target;
                    }
                    break Ok((next, report));
                }
                Err(e) => {
                    attempts += 1;
                    out.retries += 1;
                    if attempts > MAX_RETRIES {
                        break Err(e);
                    }
                    dt = 0.5 * this_dt;
                }
            }
        };
        let (next, report) = match accepted {
            Ok(x) => x,
            Err(e) => {
                out.termination = guard(
                    &state,
                    format!("step rejected after {MAX_RETRIES} retries: {e}"),
                );
                break;
            }
        };
        if !next.is_finite() {
            out.termination = guard(&state, "non-finite field after step");
            break;
        }
        state = next;
        out.steps += 1;
        out.max_kinematic_residual = out.max_kinematic_residual.max(report.kinematic_residual);
        if schedule.trace_steps {
            out.step_trace.push(StepTrace {
                time: state.time,
                dt: report.dt_used,
                energy: crate::diagnostics::energy(&state, params.gamma),
                bd_entropy: crate::diagnostics::bd_entropy(&state, params)?,
                volume: state.volume(),
                rho_min: state.min_density(),
                iterations: report.viscous_solve_iterations,
                kinematic_residual: report.kinematic_residual,
            });
        }
        if state.max_density() > params.density_ceiling {
            out.termination = guard(
                &state,
                format!("density above ceiling {}", params.density_ceiling),
            );
            break;
        }
        let sample_time = (next_sample_k as f64 * schedule.sample_interval).min(t_end);
        if state.time >= sample_time {
            record(&mut out, &state)?;
            while next_sample_k as f64 * schedule.sample_interval <= state.time {
                next_sample_k += 1;
            }
        }
        while capture_idx < captures_due.len() && captures_due[capture_idx] <= state.time {
            out.captures.push(state.clone());
            capture_idx += 1;
        }
    }
    out.final_state = state;
    Ok(out)
}
