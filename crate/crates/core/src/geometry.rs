//! Eulerian radial profiles, Lagrangian mass-coordinate states, and the
//! change of variables between them.
//!
//! Density is a cell quantity; velocity and radius live on edges. The mass of
//! cell `i` is `mass_edges[i+1] - mass_edges[i]`. Grids are uniform in mass
//! unless a caller asks for a dedicated near-vacuum core cell.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Volume of the unit ball: pi in 2D, 4 pi / 3 in 3D.
pub fn unit_ball_measure(n_dim: u32) -> f64 {
    if n_dim == 2 {
        std::f64::consts::PI
    } else {
        4.0 * std::f64::consts::PI / 3.0
    }
}

/// Surface measure of the unit sphere, N times the unit-ball measure.
pub fn sphere_measure(n_dim: u32) -> f64 {
    n_dim as f64 * unit_ball_measure(n_dim)
}

/// Radial shell measure (b^N - a^N)/N, evaluated without cancellation.
pub fn shell_volume(n_dim: u32, a: f64, b: f64) -> f64 {
    if n_dim == 2 {
        0.5 * (b - a) * (b + a)
    } else {
        (b - a) * (b * b + a * b + a * a) / 3.0
    }
}

pub(crate) fn powi(x: f64, k: u32) -> f64 {
    match k {
        0 => 1.0,
        1 => x,
        2 => x * x,
        _ => x.powi(k as i32),
    }
}

pub(crate) fn check_dimension(n_dim: u32) -> Result<()> {
    if n_dim == 2 || n_dim == 3 {
        Ok(())
    } else {
        Err(Error::invalid(
            "dimension",
            format!("must be 2 or 3, got {n_dim}"),
        ))
    }
}

/// Radial profile on an Eulerian grid with cell values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EulerianProfile {
    pub dimension: u32,
    /// Edge radii, strictly increasing, `radii[0]` is the inner radius.
    pub radii: Vec<f64>,
    pub density: Vec<f64>,
    pub velocity: Vec<f64>,
}

impl EulerianProfile {
    pub fn new(
        dimension: u32,
        radii: Vec<f64>,
        density: Vec<f64>,
        velocity: Vec<f64>,
    ) -> Result<Self> {
        let p = EulerianProfile {
            dimension,
            radii,
            density,
            velocity,
        };
        p.validate()?;
        Ok(p)
    }

    /// Samples `rho` and `u` at the centres of `cells` uniform cells on `[inner, outer]`.
    pub fn from_fn(
        dimension: u32,
        inner: f64,
        outer: f64,
        cells: usize,
        rho: impl Fn(f64) -> f64,
        u: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let h = (outer - inner) / cells as f64;
        let mut radii: Vec<f64> = (0..=cells).map(|k| inner + h * k as f64).collect();
        radii[cells] = outer;
        let centres: Vec<f64> = (0..cells)
            .map(|k| 0.5 * (radii[k] + radii[k + 1]))
            .collect();
        let density = centres.iter().map(|&r| rho(r)).collect();
        let velocity = centres.iter().map(|&r| u(r)).collect();
        Self::new(dimension, radii, density, velocity)
    }

    pub fn validate(&self) -> Result<()> {
        check_dimension(self.dimension)?;
        let g = self.density.len();
        if g == 0 || self.radii.len() != g + 1 || self.velocity.len() != g {
            return Err(Error::invalid(
                "profile",
                format!(
                    "need radii of length G+1 and G cell values, got {} radii, {} densities, {} velocities",
                    self.radii.len(),
                    g,
                    self.velocity.len()
                ),
            ));
        }
        if self.radii[0] < 0.0 || self.radii.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid(
                "profile.radii",
                "must be non-negative and strictly increasing",
            ));
        }
        if self.density.iter().any(|d| !d.is_finite()) {
            return Err(Error::invalid("profile.density", "must be finite"));
        }
        Ok(())
    }

    pub fn cells(&self) -> usize {
        self.density.len()
    }

    pub fn inner_radius(&self) -> f64 {
        self.radii[0]
    }

    pub fn outer_radius(&self) -> f64 {
        self.radii[self.radii.len() - 1]
    }

    pub fn centres(&self) -> Vec<f64> {
        self.radii.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    /// Radial mass integral of the piecewise-constant density, ∫ρ r^{N-1} dr.
    pub fn radial_mass(&self) -> f64 {
        (0..self.cells())
            .map(|k| {
                self.density[k] * shell_volume(self.dimension, self.radii[k], self.radii[k + 1])
            })
            .sum()
    }

    /// Evaluates the monotone piecewise-linear interpolant through the cell
    /// centres; constant beyond the first and last centres.
    pub fn interpolate(values: &[f64], centres: &[f64], r: f64) -> f64 {
        let n = centres.len();
        if r <= centres[0] {
            return values[0];
        }
        if r >= centres[n - 1] {
            return values[n - 1];
        }
        let k = centres.partition_point(|&c| c <= r) - 1;
        let t = (r - centres[k]) / (centres[k + 1] - centres[k]);
        values[k] + t * (values[k + 1] - values[k])
    }

    /// Resamples density and velocity onto new edge radii by piecewise-linear
    /// interpolation in r at the new cell centres.
    pub fn resample(&self, radii: &[f64]) -> Result<EulerianProfile> {
        let centres = self.centres();
        let new_centres: Vec<f64> = radii.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let density = new_centres
            .iter()
            .map(|&r| Self::interpolate(&self.density, &centres, r))
            .collect();
        let velocity = new_centres
            .iter()
            .map(|&r| Self::interpolate(&self.velocity, &centres, r))
            .collect();
        EulerianProfile::new(self.dimension, radii.to_vec(), density, velocity)
    }
}

/// Cumulative mass y(r) = ∫ρ s^{N-1} ds at every edge of the profile, and the total.
///
/// The density is cellwise constant, so each cell contributes its density
/// times the exact shell measure; for N = 2 this coincides with the
/// midpoint rule.
pub fn mass_coordinate(profile: &EulerianProfile) -> Result<(Vec<f64>, f64)> {
    profile.validate()?;
    if let Some((k, &d)) = profile.density.iter().enumerate().find(|(_, d)| **d < 0.0) {
        return Err(Error::NonPositiveDensity { cell: k, value: d });
    }
    let mut y = Vec::with_capacity(profile.radii.len());
    y.push(0.0);
    let mut acc = 0.0;
    for k in 0..profile.cells() {
        acc += profile.density[k]
            * shell_volume(profile.dimension, profile.radii[k], profile.radii[k + 1]);
        y.push(acc);
    }
    if !(acc > 0.0) {
        return Err(Error::invalid("profile.density", "total mass is zero"));
    }
    Ok((y, acc))
}

/// Edge radii from cell densities: r_j^N = r_0^N + N Σ_{i<j} m_i / ρ_i.
pub fn reconstruct_radius(
    density: &[f64],
    mass_edges: &[f64],
    inner_radius: f64,
    n_dim: u32,
) -> Result<Vec<f64>> {
    check_dimension(n_dim)?;
    if mass_edges.len() != density.len() + 1 {
        return Err(Error::invalid("mass_edges", "length must be G+1"));
    }
    let nf = n_dim as f64;
    let base = powi(inner_radius, n_dim);
    let mut out = Vec::with_capacity(mass_edges.len());
    out.push(inner_radius);
    let mut vol = 0.0;
    for (i, &rho) in density.iter().enumerate() {
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(Error::NonPositiveDensity {
                cell: i,
                value: rho,
            });
        }
        vol += (mass_edges[i + 1] - mass_edges[i]) / rho;
        out.push((base + nf * vol).powf(1.0 / nf));
    }
    Ok(out)
}

/// Uniform mass grid with `cells` cells on [0, total_mass].
pub fn uniform_mass_edges(total_mass: f64, cells: usize) -> Vec<f64> {
    let mut e: Vec<f64> = (0..=cells)
        .map(|j| total_mass * j as f64 / cells as f64)
        .collect();
    e[cells] = total_mass;
    e
}

/// Mass grid whose first cell holds exactly `core_mass` and whose remaining
/// `cells - 1` cells are uniform. Used to represent a central near-vacuum
/// core by a single Lagrangian cell.
pub fn core_mass_edges(core_mass: f64, total_mass: f64, cells: usize) -> Result<Vec<f64>> {
    if !(core_mass > 0.0 && core_mass < total_mass) || cells < 2 {
        return Err(Error::invalid(
            "core_mass",
            "must lie in (0, total mass) with at least two cells",
        ));
    }
    let rest = total_mass - core_mass;
    let n = cells - 1;
    let mut e = Vec::with_capacity(cells + 1);
    e.push(0.0);
    for j in 0..=n {
        e.push(core_mass + rest * j as f64 / n as f64);
    }
    e[cells] = total_mass;
    Ok(e)
}

/// Solution state in Lagrangian mass coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LagrangianState {
    pub dimension: u32,
    pub mass_edges: Vec<f64>,
    pub density: Vec<f64>,
    pub velocity: Vec<f64>,
    pub radius: Vec<f64>,
    pub time: f64,
    pub total_mass: f64,
}

impl LagrangianState {
    /// Builds a state from cell densities; the radius map is reconstructed.
    pub fn from_density(
        dimension: u32,
        mass_edges: Vec<f64>,
        density: Vec<f64>,
        velocity: Vec<f64>,
        inner_radius: f64,
        time: f64,
    ) -> Result<Self> {
        let radius = reconstruct_radius(&density, &mass_edges, inner_radius, dimension)?;
        let total_mass = mass_edges[mass_edges.len() - 1];
        let s = LagrangianState {
            dimension,
            mass_edges,
            density,
            velocity,
            radius,
            time,
            total_mass,
        };
        s.validate()?;
        Ok(s)
    }

    /// Uniform density `rho` at rest on the annulus [inner, outer].
    pub fn uniform(dimension: u32, cells: usize, inner: f64, outer: f64, rho: f64) -> Result<Self> {
        check_dimension(dimension)?;
        let m = rho * shell_volume(dimension, inner, outer);
        let edges = uniform_mass_edges(m, cells);
        let mut s = Self::from_density(
            dimension,
            edges,
            vec![rho; cells],
            vec![0.0; cells + 1],
            inner,
            0.0,
        )?;
        s.radius[cells] = outer;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        check_dimension(self.dimension)?;
        let g = self.density.len();
        if g < 1
            || self.mass_edges.len() != g + 1
            || self.velocity.len() != g + 1
            || self.radius.len() != g + 1
        {
            return Err(Error::invalid("state", "array lengths inconsistent"));
        }
        if self.mass_edges[0] != 0.0 || self.mass_edges.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid(
                "state.mass_edges",
                "must start at 0 and increase strictly",
            ));
        }
        if self.radius.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("state.radius", "must increase strictly"));
        }
        if self.velocity[0] != 0.0 || self.velocity[g] != 0.0 {
            return Err(Error::invalid(
                "state.velocity",
                "boundary velocities must vanish",
            ));
        }
        if !(self.total_mass > 0.0) {
            return Err(Error::invalid("state.total_mass", "must be positive"));
        }
        Ok(())
    }

    pub fn cells(&self) -> usize {
        self.density.len()
    }

    pub fn inner_radius(&self) -> f64 {
        self.radius[0]
    }

    pub fn outer_radius(&self) -> f64 {
        self.radius[self.radius.len() - 1]
    }

    pub fn cell_mass(&self, i: usize) -> f64 {
        self.mass_edges[i + 1] - self.mass_edges[i]
    }

    pub fn cell_masses(&self) -> Vec<f64> {
        self.mass_edges.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Mass attached to edge j: half of each neighbouring cell.
    pub fn edge_mass(&self, j: usize) -> f64 {
        let g = self.cells();
        let left = if j > 0 { self.cell_mass(j - 1) } else { 0.0 };
        let right = if j < g { self.cell_mass(j) } else { 0.0 };
        0.5 * (left + right)
    }

    /// Radial measure Σ m_i / ρ_i = ∫ v dy.
    pub fn volume(&self) -> f64 {
        (0..self.cells())
            .map(|i| self.cell_mass(i) / self.density[i])
            .sum()
    }

    /// Domain measure (R^N - r_0^N)/N of the current radius map.
    pub fn domain_volume(&self) -> f64 {
        shell_volume(self.dimension, self.inner_radius(), self.outer_radius())
    }

    pub fn min_density(&self) -> f64 {
        self.density.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max_density(&self) -> f64 {
        self.density
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.density
            .iter()
            .chain(&self.velocity)
            .chain(&self.radius)
            .all(|x| x.is_finite())
    }
}

/// Elementwise reciprocal of density.
pub fn specific_volume(state: &LagrangianState) -> Result<Vec<f64>> {
    state
        .density
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            if d > 0.0 {
                Ok(1.0 / d)
            } else {
                Err(Error::NonPositiveDensity { cell: i, value: d })
            }
        })
        .collect()
}

/// The state on its own radius map: density per cell and the mean of the two
/// edge velocities per cell.
pub fn to_eulerian(state: &LagrangianState) -> EulerianProfile {
    let velocity = state
        .velocity
        .windows(2)
        .map(|w| 0.5 * (w[0] + w[1]))
        .collect();
    EulerianProfile {
        dimension: state.dimension,
        radii: state.radius.clone(),
        density: state.density.clone(),
        velocity,
    }
}

/// Projects an Eulerian profile onto the given mass grid.
///
/// Edge radii invert the piecewise mass map exactly, each Lagrangian cell
/// receives its mass over its volume, and edge velocities interpolate the
/// profile's cell velocities (with zero at both walls).
pub fn from_eulerian(profile: &EulerianProfile, mass_edges: &[f64]) -> Result<LagrangianState> {
    let (y, total) = mass_coordinate(profile)?;
    let g = mass_edges.len() - 1;
    if g < 1 || mass_edges[0] != 0.0 {
        return Err(Error::invalid(
            "mass_edges",
            "must start at 0 with at least one cell",
        ));
    }
    if ((mass_edges[g] - total) / total).abs() > 1e-12 {
        return Err(Error::invalid(
            "mass_edges",
            "must end at the profile's total mass",
        ));
    }
    let n_dim = profile.dimension;
    let nf = n_dim as f64;
    let mut radius = Vec::with_capacity(g + 1);
    radius.push(profile.inner_radius());
    for &target in &mass_edges[1..g] {
        // First Eulerian cell whose cumulative mass reaches the target.
        let k = (y.partition_point(|&v| v < target)).clamp(1, profile.cells()) - 1;
        let rho = profile.density[k];
        let rk = profile.radii[k];
        let r = if rho > 0.0 {
            (powi(rk, n_dim) + nf * (target - y[k]) / rho).powf(1.0 / nf)
        } else {
            rk
        };
        radius.push(r.min(profile.radii[k + 1]));
    }
    radius.push(profile.outer_radius());
    let mut density = Vec::with_capacity(g);
    for i in 0..g {
        let v = shell_volume(n_dim, radius[i], radius[i + 1]);
        if !(v > 0.0) {
            return Err(Error::invalid(
                "mass_edges",
                "grid too fine for the profile (empty Lagrangian cell)",
            ));
        }
        density.push((mass_edges[i + 1] - mass_edges[i]) / v);
    }
    let centres = profile.centres();
    let mut velocity: Vec<f64> = radius
        .iter()
        .map(|&r| EulerianProfile::interpolate(&profile.velocity, &centres, r))
        .collect();
    velocity[0] = 0.0;
    velocity[g] = 0.0;
    let mut state = LagrangianState::from_density(
        n_dim,
        mass_edges.to_vec(),
        density,
        velocity,
        profile.inner_radius(),
        0.0,
    )?;
    state.radius[g] = profile.outer_radius();
    Ok(state)
}
