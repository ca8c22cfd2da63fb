//! Initial data: analytic radial profiles, the mollified and floored data of
//! the artificial-viscosity approximation, the annulus data, and presets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    core_mass_edges, from_eulerian, mass_coordinate, shell_volume, sphere_measure,
    uniform_mass_edges, EulerianProfile, LagrangianState,
};
use crate::regime::{ExactRational, Theorem};
use crate::solver::ModelParams;

/// Uniformly spaced cell-centred samples of a radial function on [start, end].
#[derive(Clone, Debug, PartialEq)]
pub struct SampledProfile {
    pub start: f64,
    pub end: f64,
    pub values: Vec<f64>,
}

impl SampledProfile {
    pub fn from_fn(start: f64, end: f64, cells: usize, f: impl Fn(f64) -> f64) -> Self {
        let h = (end - start) / cells as f64;
        let values = (0..cells)
            .map(|k| f(start + (k as f64 + 0.5) * h))
            .collect();
        SampledProfile { start, end, values }
    }

    pub fn step(&self) -> f64 {
        (self.end - self.start) / self.values.len() as f64
    }

    pub fn centre(&self, k: usize) -> f64 {
        self.start + (k as f64 + 0.5) * self.step()
    }

    pub fn centres(&self) -> Vec<f64> {
        (0..self.values.len()).map(|k| self.centre(k)).collect()
    }

    /// Plain integral Σ f_k h.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.step()
    }

    /// Integral over the ball or annulus in N dimensions, with each cell's
    /// value spread over its exact shell.
    pub fn domain_integral(&self, n_dim: u32) -> f64 {
        let h = self.step();
        let sum: f64 = self
            .values
            .iter()
            .enumerate()
            .map(|(k, v)| {
                let a = self.start + k as f64 * h;
                v * shell_volume(n_dim, a, a + h)
            })
            .sum();
        sphere_measure(n_dim) * sum
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        SampledProfile {
            start: self.start,
            end: self.end,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Cells `offset .. offset + len` as a profile of their own.
    pub fn window(&self, offset: usize, len: usize) -> Self {
        let h = self.step();
        SampledProfile {
            start: self.start + offset as f64 * h,
            end: self.start + (offset + len) as f64 * h,
            values: self.values[offset..offset + len].to_vec(),
        }
    }
}

/// The unnormalised standard bump exp(−1/(1−x²)) on (−1, 1).
pub fn bump(x: f64) -> f64 {
    if x.abs() < 1.0 {
        (-1.0 / (1.0 - x * x)).exp()
    } else {
        0.0
    }
}

/// Convolution with the standard mollifier of radius `epsilon`.
///
/// The discrete kernel is the bump sampled at the grid spacing and normalised
/// to unit sum, so the output is a convex combination of inputs. Values
/// beyond the ends are the end values.
pub fn mollify(samples: &SampledProfile, epsilon: f64) -> Result<SampledProfile> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::invalid("epsilon", "must be positive and finite"));
    }
    let h = samples.step();
    let reach = (epsilon / h).floor() as usize;
    let mut w: Vec<f64> = (0..=reach).map(|m| bump(m as f64 * h / epsilon)).collect();
    let total = w[0] + 2.0 * w[1..].iter().sum::<f64>();
    w.iter_mut().for_each(|x| *x /= total);
    let f = &samples.values;
    let n = f.len() as isize;
    let at = |k: isize| f[k.clamp(0, n - 1) as usize];
    let values = (0..n)
        .map(|k| {
            let mut acc = w[0] * f[k as usize];
            for (m, wm) in w.iter().enumerate().skip(1) {
                if *wm == 0.0 {
                    continue;
                }
                let m = m as isize;
                acc += wm * (at(k - m) + at(k + m));
            }
            acc
        })
        .collect();
    Ok(SampledProfile {
        start: samples.start,
        end: samples.end,
        values,
    })
}

fn smoothstep(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    x * x * x * (x * (6.0 * x - 15.0) + 10.0)
}

/// C² cut-off: 0 on [0, 2ι] ∪ [R−ι, R], 1 on [3ι, R−2ι], quintic smoothstep
/// ramps in between (slope at most 15/(8ι)).
pub fn cutoff(r: f64, inner: f64, outer: f64) -> Result<f64> {
    if !(inner > 0.0) || !(5.0 * inner < outer) {
        return Err(Error::invalid(
            "cutoff",
            format!("need 0 < 5*inner < R, got inner={inner}, R={outer}"),
        ));
    }
    let rise = if r >= 3.0 * inner {
        1.0
    } else {
        smoothstep((r - 2.0 * inner) / inner)
    };
    let fall = if r <= outer - 2.0 * inner {
        1.0
    } else {
        smoothstep((outer - inner - r) / inner)
    };
    Ok(rise * fall)
}

/// χ for the T2 velocity: 1 on [0, 1/2], 0 on [2/3, 1] in units of R.
fn chi(x: f64) -> f64 {
    if x <= 0.5 {
        return 1.0;
    }
    1.0 - smoothstep((x - 0.5) * 6.0)
}

/// Density expressions ρ(r) on [0, R].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DensityExpr {
    Constant {
        value: f64,
    },
    /// r^exponent + 1.
    PowerPlusOne {
        exponent: f64,
    },
    /// mean + amplitude cos(π r / R).
    Cosine {
        mean: f64,
        amplitude: f64,
    },
    /// base + amplitude exp(−(r/width)²).
    Gaussian {
        base: f64,
        amplitude: f64,
        width: f64,
    },
    /// intercept + slope r.
    Linear {
        intercept: f64,
        slope: f64,
    },
}

impl DensityExpr {
    pub fn eval(&self, r: f64, outer: f64) -> f64 {
        match *self {
            DensityExpr::Constant { value } => value,
            DensityExpr::PowerPlusOne { exponent } => r.abs().powf(exponent) + 1.0,
            DensityExpr::Cosine { mean, amplitude } => {
                mean + amplitude * (std::f64::consts::PI * r / outer).cos()
            }
            DensityExpr::Gaussian {
                base,
                amplitude,
                width,
            } => base + amplitude * (-(r / width).powi(2)).exp(),
            DensityExpr::Linear { intercept, slope } => intercept + slope * r,
        }
    }
}

/// Velocity expressions u(r) on [0, R].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum VelocityExpr {
    Zero,
    /// r^exponent χ(r/R) with χ = 1 on [0, R/2] and 0 on [2R/3, R].
    PowerCutoff {
        exponent: f64,
    },
    /// amplitude sin(π r / R).
    Sine {
        amplitude: f64,
    },
    /// slope r.
    Linear {
        slope: f64,
    },
}

impl VelocityExpr {
    pub fn eval(&self, r: f64, outer: f64) -> f64 {
        match *self {
            VelocityExpr::Zero => 0.0,
            VelocityExpr::PowerCutoff { exponent } => {
                if r <= 0.0 {
                    0.0
                } else {
                    r.powf(exponent) * chi(r / outer)
                }
            }
            VelocityExpr::Sine { amplitude } => {
                amplitude * (std::f64::consts::PI * r / outer).sin()
            }
            VelocityExpr::Linear { slope } => slope * r,
        }
    }
}

/// How the state is built from (ρ₀, u₀).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Construction {
    /// ρ₀, u₀ sampled as they are.
    Direct,
    /// Mollified, floored density and cut-off velocity for the
    /// artificial-viscosity approximation on the annulus [η, R].
    Weak,
    /// Mollified density and cut-off mollified velocity on the annulus [ι, R].
    Annulus,
}

/// Exponent tuple the data is designed for.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Exponents {
    pub dimension: u32,
    pub alpha: f64,
    pub gamma: f64,
    pub delta: Option<f64>,
    pub p: f64,
    pub q: ExactRational,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialDataSpec {
    /// Preset name this spec came from, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    pub density: DensityExpr,
    pub velocity: VelocityExpr,
    /// Density value inside the near-vacuum core.
    #[serde(default)]
    pub vacuum_floor: f64,
    /// Radius of a central near-vacuum core (0 for none).
    #[serde(default)]
    pub vacuum_core: f64,
    /// Width of the smooth transition out of the core.
    #[serde(default = "default_core_width")]
    pub core_width: f64,
    /// Mollifier radius; 0 selects a quarter of `cutoff_inner`.
    #[serde(default)]
    pub mollify_radius: f64,
    /// The η or ι of the cut-off.
    #[serde(default)]
    pub cutoff_inner: f64,
    #[serde(default = "default_construction")]
    pub construction: Construction,
    /// Total mass ∫ρ dx to normalise to. The weak and annulus
    /// constructions normalise to 1 when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalize_mass: Option<f64>,
    pub exponents: Exponents,
    /// Theorem whose hypotheses the data is designed to satisfy.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub documented: Option<Theorem>,
    /// Resolution of the fine sampling grid (default max(16 G, 8192)).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_cells: Option<usize>,
}

fn default_core_width() -> f64 {
    0.1
}

fn default_construction() -> Construction {
    Construction::Direct
}

/// Names accepted by [`preset`].
pub const PRESET_NAMES: [&str; 6] = [
    "t2-paper",
    "equilibrium",
    "gaussian-bump",
    "sv-smooth",
    "vacuum-annulus",
    "t2-vacuum",
];

fn exps(alpha: f64, gamma: f64, p: f64, q: ExactRational) -> Exponents {
    Exponents {
        dimension: 2,
        alpha,
        gamma,
        delta: None,
        p,
        q,
    }
}

/// Named initial data.
pub fn preset(name: &str) -> Result<InitialDataSpec> {
    let q2 = ExactRational::from_integer(2);
    let base = |density, velocity, exponents, documented| InitialDataSpec {
        preset: Some(name.to_string()),
        density,
        velocity,
        vacuum_floor: 0.0,
        vacuum_core: 0.0,
        core_width: default_core_width(),
        mollify_radius: 0.0,
        cutoff_inner: 0.0,
        construction: Construction::Direct,
        normalize_mass: None,
        exponents,
        documented: Some(documented),
        sample_cells: None,
    };
    let t2 = || {
        base(
            DensityExpr::PowerPlusOne {
                exponent: 2.0 / 3.0,
            },
            VelocityExpr::PowerCutoff { exponent: -0.01 },
            exps(1.0, 2.0, 4.0, q2.clone()),
            Theorem::T2,
        )
    };
    Ok(match name {
        "t2-paper" => t2(),
        "equilibrium" => {
            let mut s = base(
                DensityExpr::Constant { value: 1.0 },
                VelocityExpr::Zero,
                exps(1.0, 2.0, 4.0, q2.clone()),
                Theorem::SvTwoD,
            );
            s.normalize_mass = Some(1.0);
            s
        }
        "gaussian-bump" => {
            let mut s = base(
                DensityExpr::Gaussian {
                    base: 1.0,
                    amplitude: 0.5,
                    width: 0.25,
                },
                VelocityExpr::Zero,
                exps(1.0, 2.0, 4.0, q2.clone()),
                Theorem::Thm3,
            );
            s.normalize_mass = Some(1.0);
            s
        }
        "sv-smooth" => base(
            DensityExpr::Cosine {
                mean: 1.0,
                amplitude: 0.5,
            },
            VelocityExpr::Sine { amplitude: 0.5 },
            exps(1.0, 2.0, 4.0, q2.clone()),
            Theorem::SvTwoD,
        ),
        "vacuum-annulus" => {
            let mut s = base(
                DensityExpr::Constant { value: 1.0 },
                VelocityExpr::Zero,
                exps(1.0, 2.0, 2.0, ExactRational::new(5, 3)?),
                Theorem::Thm5,
            );
            s.vacuum_floor = 1e-6;
            s.vacuum_core = 0.25;
            s
        }
        "t2-vacuum" => {
            let mut s = t2();
            s.vacuum_floor = 1e-6;
            s.vacuum_core = 0.2;
            s
        }
        _ => {
            return Err(Error::invalid(
                "preset",
                format!(
                    "unknown preset {name:?}; known: {}",
                    PRESET_NAMES.join(", ")
                ),
            ))
        }
    })
}

impl InitialDataSpec {
    pub fn validate(&self) -> Result<()> {
        for (field, v) in [
            ("vacuum_floor", self.vacuum_floor),
            ("vacuum_core", self.vacuum_core),
            ("mollify_radius", self.mollify_radius),
            ("cutoff_inner", self.cutoff_inner),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::invalid(field, "must be finite and >= 0"));
            }
        }
        if !(self.core_width > 0.0) || !self.core_width.is_finite() {
            return Err(Error::invalid("core_width", "must be positive"));
        }
        if let Some(m) = self.normalize_mass {
            if !(m > 0.0) || !m.is_finite() {
                return Err(Error::invalid("normalize_mass", "must be positive"));
            }
        }
        if self.construction != Construction::Direct && !(self.cutoff_inner > 0.0) {
            return Err(Error::invalid(
                "cutoff_inner",
                "must be positive for weak and annulus data",
            ));
        }
        Ok(())
    }

    /// Model parameters matching the documented exponents, other fields at defaults.
    pub fn model_params(&self) -> ModelParams {
        ModelParams {
            dimension: self.exponents.dimension,
            alpha: self.exponents.alpha,
            gamma: self.exponents.gamma,
            delta: self.exponents.delta,
            ..ModelParams::default()
        }
    }

    /// Core profile: 1 outside the core transition, 0 inside the core.
    fn core_factor(&self, r: f64) -> f64 {
        if self.vacuum_core > 0.0 {
            smoothstep((r - self.vacuum_core) / self.core_width)
        } else {
            1.0
        }
    }

    /// ρ₀(r) including the vacuum core and floor.
    pub fn rho0(&self, r: f64, outer: f64) -> f64 {
        self.vacuum_floor + self.core_factor(r) * self.density.eval(r, outer)
    }

    /// u₀(r); zero inside the core.
    pub fn u0(&self, r: f64, outer: f64) -> f64 {
        self.core_factor(r) * self.velocity.eval(r, outer)
    }
}

/// Parameters of the mollified approximations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeakParams {
    pub n_dim: u32,
    pub eta: f64,
    pub epsilon: f64,
    pub outer: f64,
    pub alpha: f64,
    pub delta: f64,
    pub q: f64,
    pub p: f64,
    pub target_mass: f64,
}

/// Fine grid on [a, b] with `cells` cells, padded by enough cells on both
/// sides to hold a mollifier of radius `epsilon`. Returns the padded sample
/// of `f` (evaluated with r clamped into [0, outer]) and the padding.
pub fn padded_samples(
    a: f64,
    b: f64,
    cells: usize,
    epsilon: f64,
    outer: f64,
    f: impl Fn(f64) -> f64,
) -> (SampledProfile, usize) {
    let h = (b - a) / cells as f64;
    let pad = (epsilon / h).ceil() as usize + 1;
    let start = a - pad as f64 * h;
    let end = b + pad as f64 * h;
    let s = SampledProfile::from_fn(start, end, cells + 2 * pad, |r| f(r.clamp(0.0, outer)));
    (s, pad)
}

fn normalise(profile: &mut SampledProfile, n_dim: u32, target: f64) -> Result<()> {
    let mass = profile.domain_integral(n_dim);
    if !(mass > 0.0) {
        return Err(Error::invalid("density", "zero total mass"));
    }
    let c = target / mass;
    profile.values.iter_mut().for_each(|v| *v *= c);
    Ok(())
}

/// Mollified and floored density
/// ρ_η = C_η (j_ε * ρ₀^a + η^{a/(α−δ)})^{1/a}, a = α − 1 + 1/(2q),
/// on the unpadded window, with C_η fixing the total mass.
pub fn build_weak_density(
    rho0: &SampledProfile,
    pad: usize,
    wp: &WeakParams,
) -> Result<SampledProfile> {
    if !(wp.alpha > wp.delta) {
        return Err(Error::invalid(
            "delta",
            format!("need alpha > delta, got {} <= {}", wp.alpha, wp.delta),
        ));
    }
    if !(wp.q > 1.0) {
        return Err(Error::invalid("q", "must exceed 1"));
    }
    if !(wp.eta > 0.0) {
        return Err(Error::invalid("eta", "must be positive"));
    }
    let a = wp.alpha - 1.0 + 1.0 / (2.0 * wp.q);
    if !(a > 0.0) {
        return Err(Error::Domain(format!(
            "exponent alpha - 1 + 1/(2q) = {a} must be positive"
        )));
    }
    if rho0.values.iter().any(|&v| !(v >= 0.0)) || !(rho0.max() > 0.0) {
        return Err(Error::invalid("rho0", "must be >= 0 with positive mass"));
    }
    let floor = wp.eta.powf(a / (wp.alpha - wp.delta));
    let powered = rho0.map(|v| v.powf(a));
    let smooth = mollify(&powered, wp.epsilon)?;
    let cells = rho0.values.len() - 2 * pad;
    let mut out = smooth.window(pad, cells).map(|v| (v + floor).powf(1.0 / a));
    normalise(&mut out, wp.n_dim, wp.target_mass)?;
    Ok(out)
}

/// Cut-off velocity
/// u_η = sign(j_ε * m₀) ((1/ρ_η) j_ε * (ρ₀|u₀|^{2p} α_η))^{1/(2p)}
/// on the window of `rho_eta`, where m₀ = ρ₀u₀ and `rho0`, `m0` are padded
/// samples on the same grid.
pub fn build_weak_velocity(
    m0: &SampledProfile,
    rho0: &SampledProfile,
    rho_eta: &SampledProfile,
    pad: usize,
    wp: &WeakParams,
) -> Result<SampledProfile> {
    if !(wp.p > 1.0) {
        return Err(Error::invalid("p", "must exceed 1"));
    }
    let two_p = 2.0 * wp.p;
    let mut integrand = rho0.clone();
    for (k, v) in integrand.values.iter_mut().enumerate() {
        let rho = rho0.values[k];
        let m = m0.values[k];
        let r = rho0.centre(k);
        *v = if rho > 0.0 && m != 0.0 {
            m.abs().powf(two_p) / rho.powf(two_p - 1.0) * cutoff(r, wp.eta, wp.outer)?
        } else {
            0.0
        };
    }
    let smooth = mollify(&integrand, wp.epsilon)?;
    let sign = mollify(m0, wp.epsilon)?;
    let cells = rho_eta.values.len();
    let values = (0..cells)
        .map(|k| {
            let s = smooth.values[k + pad];
            if s <= 0.0 {
                0.0
            } else {
                sign.values[k + pad].signum() * (s / rho_eta.values[k]).powf(1.0 / two_p)
            }
        })
        .collect();
    Ok(SampledProfile {
        start: rho_eta.start,
        end: rho_eta.end,
        values,
    })
}

/// Annulus data: ρ_ι = C_ι j_ε * ρ₀ and u_ι = j_ε * (u₀ α_ι) on the window.
pub fn build_annulus_data(
    rho0: &SampledProfile,
    u0: &SampledProfile,
    pad: usize,
    wp: &WeakParams,
) -> Result<(SampledProfile, SampledProfile)> {
    let cells = rho0.values.len() - 2 * pad;
    let mut rho = mollify(rho0, wp.epsilon)?.window(pad, cells);
    normalise(&mut rho, wp.n_dim, wp.target_mass)?;
    let mut cut = u0.clone();
    for (k, v) in cut.values.iter_mut().enumerate() {
        *v *= cutoff(u0.centre(k), wp.eta, wp.outer)?;
    }
    let u = mollify(&cut, wp.epsilon)?.window(pad, cells);
    Ok((rho, u))
}

/// Mass ∫_{r_0}^{r} ρ s^{N−1} ds of a cellwise-constant profile.
pub fn cumulative_mass_at(profile: &EulerianProfile, r: f64) -> f64 {
    let n = profile.dimension;
    let mut acc = 0.0;
    for k in 0..profile.cells() {
        let (a, b) = (profile.radii[k], profile.radii[k + 1]);
        if a >= r {
            break;
        }
        acc += profile.density[k] * shell_volume(n, a, b.min(r));
    }
    acc
}

/// Fine Eulerian profile of the initial data on [inner_radius, R].
pub fn initial_profile(spec: &InitialDataSpec, params: &ModelParams) -> Result<EulerianProfile> {
    spec.validate()?;
    params.validate()?;
    let n_dim = params.dimension;
    let (a, b) = (params.inner_radius, params.radius);
    let cells = spec
        .sample_cells
        .unwrap_or_else(|| (16 * params.grid_cells).max(8192));
    let rho0 = |r: f64| spec.rho0(r, b);
    let u0 = |r: f64| spec.u0(r, b);
    let (density, velocity) = match spec.construction {
        Construction::Direct => {
            let mut rho = SampledProfile::from_fn(a, b, cells, rho0);
            if let Some(m) = spec.normalize_mass {
                normalise(&mut rho, n_dim, m)?;
            }
            (rho.values, SampledProfile::from_fn(a, b, cells, u0).values)
        }
        Construction::Weak | Construction::Annulus => {
            let eta = spec.cutoff_inner;
            let epsilon = if spec.mollify_radius > 0.0 {
                spec.mollify_radius
            } else {
                eta / 4.0
            };
            let wp = WeakParams {
                n_dim,
                eta,
                epsilon,
                outer: b,
                alpha: params.alpha,
                delta: params.delta.or(spec.exponents.delta).unwrap_or(0.0),
                q: spec.exponents.q.to_f64(),
                p: spec.exponents.p,
                target_mass: spec.normalize_mass.unwrap_or(1.0),
            };
            let (rho_s, pad) = padded_samples(a, b, cells, epsilon, b, rho0);
            let (u_s, _) = padded_samples(a, b, cells, epsilon, b, u0);
            if spec.construction == Construction::Weak {
                let rho_eta = build_weak_density(&rho_s, pad, &wp)?;
                let m_s = SampledProfile {
                    start: rho_s.start,
                    end: rho_s.end,
                    values: rho_s
                        .values
                        .iter()
                        .zip(&u_s.values)
                        .map(|(r, u)| r * u)
                        .collect(),
                };
                let u_eta = build_weak_velocity(&m_s, &rho_s, &rho_eta, pad, &wp)?;
                (rho_eta.values, u_eta.values)
            } else {
                let (rho, u) = build_annulus_data(&rho_s, &u_s, pad, &wp)?;
                (rho.values, u.values)
            }
        }
    };
    let h = (b - a) / cells as f64;
    let mut radii: Vec<f64> = (0..=cells).map(|k| a + k as f64 * h).collect();
    radii[cells] = b;
    EulerianProfile::new(n_dim, radii, density, velocity)
}

/// Lagrangian initial state on `params.grid_cells` cells. With a vacuum core
/// the whole core becomes the first cell and the rest of the mass is split
/// uniformly.
pub fn initial_state(spec: &InitialDataSpec, params: &ModelParams) -> Result<LagrangianState> {
    let profile = initial_profile(spec, params)?;
    let (_, total) = mass_coordinate(&profile)?;
    let g = params.grid_cells;
    let edges = if spec.vacuum_core > params.inner_radius {
        let core = cumulative_mass_at(&profile, spec.vacuum_core);
        core_mass_edges(core, total, g)?
    } else {
        uniform_mass_edges(total, g)
    };
    from_eulerian(&profile, &edges)
}
