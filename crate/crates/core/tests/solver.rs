#![allow(clippy::needless_range_loop)]

use bdflow::diagnostics::DiagnosticSchedule;
use bdflow::geometry::{uniform_mass_edges, LagrangianState};
use bdflow::initial_data::{initial_state, preset};
use bdflow::solver::*;
use proptest::prelude::*;

fn sv_params(g: usize) -> ModelParams {
    ModelParams {
        grid_cells: g,
        ..ModelParams::default()
    }
}

fn sv_state(g: usize) -> (LagrangianState, ModelParams) {
    let spec = preset("sv-smooth").unwrap();
    let mut params = spec.model_params();
    params.grid_cells = g;
    (initial_state(&spec, &params).unwrap(), params)
}

/// State on uniform mass cells with the given cell densities and edge velocities.
fn state_from(n: u32, density: Vec<f64>, velocity: Vec<f64>) -> LagrangianState {
    let g = density.len();
    LagrangianState::from_density(n, uniform_mass_edges(0.5, g), density, velocity, 0.0, 0.0)
        .unwrap()
}

type Matrix = Vec<Vec<f64>>;

fn zeros(r: usize, c: usize) -> Matrix {
    vec![vec![0.0; c]; r]
}

fn mul(a: &Matrix, b: &Matrix) -> Matrix {
    let mut out = zeros(a.len(), b[0].len());
    for i in 0..a.len() {
        for k in 0..b.len() {
            if a[i][k] != 0.0 {
                for j in 0..b[0].len() {
                    out[i][j] += a[i][k] * b[k][j];
                }
            }
        }
    }
    out
}

fn apply(a: &Matrix, x: &[f64]) -> Vec<f64> {
    a.iter()
        .map(|row| row.iter().zip(x).map(|(p, q)| p * q).sum())
        .collect()
}

fn diag(v: &[f64]) -> Matrix {
    let mut m = zeros(v.len(), v.len());
    for (i, &x) in v.iter().enumerate() {
        m[i][i] = x;
    }
    m
}

/// Dense assembly of the momentum operator
/// r^{N−1}∂_y(c(ρ) ∂_y(r^{N−1}u) − p) − (N−1) r^{N−2} (∂_y μ) u
/// from difference matrices: cells take edge differences over m_i, interior
/// edges take cell differences over the edge mass.
fn dense_momentum(state: &LagrangianState, alpha: f64, gamma: f64) -> (Matrix, Vec<f64>) {
    let g = state.cells();
    let n = state.dimension;
    let m = state.cell_masses();
    let mut d_cell = zeros(g, g + 1);
    for i in 0..g {
        d_cell[i][i] = -1.0 / m[i];
        d_cell[i][i + 1] = 1.0 / m[i];
    }
    let mut d_edge = zeros(g + 1, g);
    for j in 1..g {
        let mt = 0.5 * (m[j - 1] + m[j]);
        d_edge[j][j - 1] = -1.0 / mt;
        d_edge[j][j] = 1.0 / mt;
    }
    let a: Vec<f64> = state.radius.iter().map(|r| r.powi(n as i32 - 1)).collect();
    let c: Vec<f64> = state
        .density
        .iter()
        .map(|&d| alpha * d.powf(1.0 + alpha))
        .collect();
    let mu: Vec<f64> = state.density.iter().map(|&d| d.powf(alpha)).collect();
    let p: Vec<f64> = state.density.iter().map(|&d| d.powf(gamma)).collect();
    let viscous = mul(
        &diag(&a),
        &mul(&d_edge, &mul(&diag(&c), &mul(&d_cell, &diag(&a)))),
    );
    let grad_mu = apply(&d_edge, &mu);
    let geo: Vec<f64> = state
        .radius
        .iter()
        .zip(&grad_mu)
        .map(|(r, gm)| (n as f64 - 1.0) * r.powi(n as i32 - 2) * gm)
        .collect();
    let mut op = viscous;
    for j in 0..=g {
        op[j][j] -= geo[j];
    }
    for row in [0, g] {
        op[row].iter_mut().for_each(|x| *x = 0.0);
    }
    let force: Vec<f64> = apply(&d_edge, &p)
        .iter()
        .zip(&a)
        .map(|(dp, a)| -a * dp)
        .collect();
    (op, force)
}

#[test]
fn momentum_rhs_matches_dense_operator() {
    let g = 64;
    let density: Vec<f64> = (0..g)
        .map(|i| 1.0 + 0.01 * (0.3 * i as f64).sin())
        .collect();
    let base = state_from(2, density, vec![0.0; g + 1]);
    let params = sv_params(g);
    let (op, force) = dense_momentum(&base, 1.0, 2.0);
    let rhs0 = momentum_rhs(&base, &params).unwrap();
    for j in 0..=g {
        assert!((rhs0[j] - force[j]).abs() < 1e-12, "edge {j}");
    }
    // Probe with unit vectors: the operator is affine in u.
    for e in 1..g {
        let mut s = base.clone();
        s.velocity[e] = 1.0;
        let rhs = momentum_rhs(&s, &params).unwrap();
        for j in 0..=g {
            let col = rhs[j] - rhs0[j];
            assert!(
                (col - op[j][e]).abs() < 1e-12 * op[j][e].abs().max(1.0),
                "({j},{e})"
            );
        }
    }
    // And a generic velocity.
    let mut s = base.clone();
    for j in 1..g {
        s.velocity[j] = (0.17 * j as f64).cos();
    }
    let rhs = momentum_rhs(&s, &params).unwrap();
    let expect: Vec<f64> = apply(&op, &s.velocity)
        .iter()
        .zip(&force)
        .map(|(a, b)| a + b)
        .collect();
    for j in 0..=g {
        assert!((rhs[j] - expect[j]).abs() < 1e-10 * expect[j].abs().max(1.0));
    }
}

#[test]
fn momentum_rhs_three_dimensional_matches_dense_operator() {
    let g = 32;
    let density: Vec<f64> = (0..g).map(|i| 1.5 + 0.2 * (0.2 * i as f64).cos()).collect();
    let mut s = state_from(3, density, vec![0.0; g + 1]);
    for j in 1..g {
        s.velocity[j] = 0.1 * (0.3 * j as f64).sin();
    }
    let params = ModelParams {
        dimension: 3,
        alpha: 1.3,
        gamma: 1.4,
        grid_cells: g,
        ..ModelParams::default()
    };
    let (op, force) = dense_momentum(&s, 1.3, 1.4);
    let rhs = momentum_rhs(&s, &params).unwrap();
    let expect: Vec<f64> = apply(&op, &s.velocity)
        .iter()
        .zip(&force)
        .map(|(a, b)| a + b)
        .collect();
    for j in 0..=g {
        assert!(
            (rhs[j] - expect[j]).abs() < 1e-10 * expect[j].abs().max(1.0),
            "edge {j}"
        );
    }
}

#[test]
fn equilibrium_has_zero_rhs() {
    let s = LagrangianState::uniform(2, 32, 0.0, 1.0, 1.3).unwrap();
    let p = sv_params(32);
    assert!(momentum_rhs(&s, &p)
        .unwrap()
        .iter()
        .all(|&x| x.abs() < 1e-14));
    assert!(continuity_rhs(&s, &p).unwrap().iter().all(|&x| x == 0.0));
}

#[test]
fn pressure_pushes_toward_low_pressure() {
    let g = 32;
    let density: Vec<f64> = (0..g).map(|i| 1.0 + 0.05 * i as f64).collect();
    let s = state_from(2, density, vec![0.0; g + 1]);
    let rhs = momentum_rhs(&s, &sv_params(g)).unwrap();
    assert!(rhs[1..g].iter().all(|&x| x < 0.0));
    assert_eq!(rhs[0], 0.0);
    assert_eq!(rhs[g], 0.0);
}

#[test]
fn uniform_expansion_has_constant_density_rate() {
    let g = 32;
    let mut s = state_from(2, vec![2.0; g], vec![0.0; g + 1]);
    for j in 0..g {
        s.velocity[j] = s.radius[j];
    }
    let rhs = continuity_rhs(&s, &sv_params(g)).unwrap();
    // The last cell sees the wall; the rest see u = r.
    for &x in &rhs[..g - 1] {
        assert!((x - rhs[0]).abs() < 1e-10 * rhs[0].abs());
        assert!(x < 0.0);
    }
}

#[test]
fn continuity_telescopes() {
    let (mut s, p) = sv_state(64);
    for j in 1..64 {
        s.velocity[j] = (0.4 * j as f64).sin();
    }
    let rhs = continuity_rhs(&s, &p).unwrap();
    let rate: f64 = rhs
        .iter()
        .zip(&s.density)
        .enumerate()
        .map(|(i, (r, d))| -r / (d * d) * s.cell_mass(i))
        .sum();
    assert!(rate.abs() < 1e-12, "{rate}");
}

#[test]
fn equilibrium_steps_are_fixed_points() {
    let s = LagrangianState::uniform(2, 32, 0.0, 1.0, 1.0).unwrap();
    for scheme in [Scheme::Explicit, Scheme::SemiImplicit] {
        let p = ModelParams {
            scheme,
            ..sv_params(32)
        };
        let (n, r) = step(&s, &p, 1e-3).unwrap();
        assert!(r.positivity_ok);
        for (a, b) in n.density.iter().zip(&s.density) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(n.velocity.iter().all(|&u| u.abs() < 1e-15));
        for (a, b) in n.radius.iter().zip(&s.radius) {
            assert!((a - b).abs() < 1e-15);
        }
    }
}

#[test]
fn implicit_viscous_decay_is_dissipative_for_large_dt() {
    // Without pressure only kinetic energy is exchanged, and viscosity removes it.
    let kinetic = |s: &LagrangianState| -> f64 {
        (1..s.cells())
            .map(|j| 0.5 * s.edge_mass(j) * s.velocity[j].powi(2))
            .sum()
    };
    let g = 64;
    let mut s = LagrangianState::uniform(2, g, 0.0, 1.0, 1.0).unwrap();
    for j in 1..g {
        let y = j as f64 / g as f64;
        s.velocity[j] = 1e-3 * (-(y - 0.5f64).powi(2) / 0.01).exp();
    }
    for dt in [10.0, 1.0, 0.1, 0.01] {
        let mut p = sv_params(g);
        p.pressure = false;
        let mut cur = s.clone();
        let mut e = kinetic(&cur);
        for _ in 0..5 {
            let (next, _) = step_semi_implicit(&cur, &p, dt).unwrap();
            let en = kinetic(&next);
            assert!(en < e, "dt={dt}: {en} >= {e}");
            e = en;
            cur = next;
        }
    }
}

fn run_to(
    state: &LagrangianState,
    params: &ModelParams,
    scheme: Scheme,
    dt: f64,
    t_end: f64,
) -> LagrangianState {
    let p = ModelParams {
        scheme,
        dt_max: Some(dt),
        t_end,
        ..params.clone()
    };
    let out = run_from_state(state.clone(), &p, &DiagnosticSchedule::default()).unwrap();
    assert!(out.termination.completed());
    out.final_state
}

#[test]
fn schemes_agree_at_first_order() {
    let (s, p) = sv_state(32);
    let linf = |a: &LagrangianState, b: &LagrangianState| {
        a.velocity
            .iter()
            .zip(&b.velocity)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    };
    let dt = 2e-5;
    let d1 = linf(
        &run_to(&s, &p, Scheme::Explicit, dt, 0.1),
        &run_to(&s, &p, Scheme::SemiImplicit, dt, 0.1),
    );
    let d2 = linf(
        &run_to(&s, &p, Scheme::Explicit, dt / 2.0, 0.1),
        &run_to(&s, &p, Scheme::SemiImplicit, dt / 2.0, 0.1),
    );
    let ratio = d1 / d2;
    assert!(d1 < 1e-3, "{d1}");
    assert!(ratio > 1.6 && ratio < 2.4, "{d1} {d2} {ratio}");
}

#[test]
fn explicit_step_increment_is_linear_in_dt() {
    let (s, p) = sv_state(64);
    let p = ModelParams {
        scheme: Scheme::Explicit,
        ..p
    };
    let change = |dt: f64| {
        let (n, _) = step_explicit(&s, &p, dt).unwrap();
        n.velocity
            .iter()
            .zip(&s.velocity)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    };
    let ratio = change(1e-6) / change(5e-7);
    assert!((ratio - 2.0).abs() < 1e-3, "{ratio}");
}

#[test]
fn kinematic_residual_is_first_order() {
    let (s, p) = sv_state(64);
    let res = |dt: f64| step_semi_implicit(&s, &p, dt).unwrap().1.kinematic_residual;
    let ratio = res(1e-4) / res(5e-5);
    assert!(ratio > 1.8 && ratio < 2.2, "{ratio}");
}

#[test]
fn stable_dt_equilibrium_formula() {
    for n in [2u32, 3] {
        let g = 40;
        let s = LagrangianState::uniform(n, g, 0.0, 1.0, 1.0).unwrap();
        let p = ModelParams {
            dimension: n,
            ..sv_params(g)
        };
        let dy = s.cell_mass(0);
        let expect = p.dt_safety * dy / 2f64.sqrt();
        assert!((stable_dt(&s, &p) - expect).abs() < 1e-14 * expect);
    }
}

#[test]
fn explicit_viscous_bound_quarters_with_grid_doubling() {
    let bound = |g: usize| {
        let s = LagrangianState::uniform(2, g, 0.0, 1.0, 1.0).unwrap();
        let mut p = ModelParams {
            scheme: Scheme::Explicit,
            ..sv_params(g)
        };
        p.pressure = false;
        stable_dt(&s, &p)
    };
    let ratio = bound(64) / bound(128);
    assert!((ratio - 4.0).abs() < 1e-9, "{ratio}");
}

proptest! {
    #[test]
    fn stable_dt_is_positive(rho in prop::collection::vec(0.01f64..50.0, 8..40), explicit in any::<bool>()) {
        let g = rho.len();
        let s = state_from(2, rho, vec![0.0; g + 1]);
        let p = ModelParams {
            scheme: if explicit { Scheme::Explicit } else { Scheme::SemiImplicit },
            ..sv_params(g)
        };
        let dt = stable_dt(&s, &p);
        prop_assert!(dt > 0.0 && dt.is_finite());
    }

    #[test]
    fn tridiagonal_matches_dense_elimination(
        n in 1usize..30,
        seed in prop::collection::vec(-1.0f64..1.0, 120),
    ) {
        let lower: Vec<f64> = (0..n).map(|i| seed[i]).collect();
        let upper: Vec<f64> = (0..n).map(|i| seed[30 + i]).collect();
        let diag: Vec<f64> = (0..n).map(|i| 2.5 + seed[60 + i]).collect();
        let rhs: Vec<f64> = (0..n).map(|i| seed[90 + i]).collect();
        let x = solve_tridiagonal(&lower, &diag, &upper, &rhs).unwrap();
        // Dense Gaussian elimination with partial pivoting.
        let mut a = zeros(n, n + 1);
        for i in 0..n {
            a[i][i] = diag[i];
            if i > 0 { a[i][i - 1] = lower[i]; }
            if i + 1 < n { a[i][i + 1] = upper[i]; }
            a[i][n] = rhs[i];
        }
        for k in 0..n {
            let piv = (k..n).max_by(|&p, &q| a[p][k].abs().total_cmp(&a[q][k].abs())).unwrap();
            a.swap(k, piv);
            for i in k + 1..n {
                let f = a[i][k] / a[k][k];
                for j in k..=n { a[i][j] -= f * a[k][j]; }
            }
        }
        let mut y = vec![0.0; n];
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| a[i][j] * y[j]).sum();
            y[i] = (a[i][n] - s) / a[i][i];
        }
        for i in 0..n {
            prop_assert!((x[i] - y[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn accepted_steps_keep_positivity(amp in 0.0f64..0.9, k in 1usize..6) {
        let g = 32;
        let mut s = LagrangianState::uniform(2, g, 0.0, 1.0, 1.0).unwrap();
        for j in 1..g {
            s.velocity[j] = amp * (k as f64 * std::f64::consts::PI * j as f64 / g as f64).sin();
        }
        let p = sv_params(g);
        let dt = stable_dt(&s, &p);
        if let Ok((n, r)) = step_semi_implicit(&s, &p, dt) {
            prop_assert!(r.positivity_ok);
            prop_assert!(n.min_density() > 0.0);
        }
    }
}

#[test]
fn tridiagonal_reports_bad_pivot() {
    assert!(solve_tridiagonal(&[0.0, 1.0], &[1.0, 1.0], &[1.0, 0.0], &[1.0, 1.0]).is_err());
    assert!(solve_tridiagonal(&[0.0], &[-1.0], &[0.0], &[1.0]).is_err());
    assert!(solve_tridiagonal(&[0.0], &[1.0, 2.0], &[0.0], &[1.0]).is_err());
}

#[test]
fn equilibrium_run_keeps_diagnostics_constant() {
    let spec = preset("equilibrium").unwrap();
    for scheme in [Scheme::Explicit, Scheme::SemiImplicit] {
        let mut params = spec.model_params();
        params.grid_cells = 32;
        params.scheme = scheme;
        params.t_end = 1.0;
        let out = run(&spec, &params, &DiagnosticSchedule::default()).unwrap();
        assert!(out.termination.completed());
        let first = &out.samples[0];
        for s in &out.samples {
            assert!((s.energy - first.energy).abs() < 1e-12 * first.energy);
            assert!((s.rho_min - first.rho_min).abs() < 1e-12);
            assert!((s.rho_max - first.rho_max).abs() < 1e-12);
            assert!(s.u_max < 1e-12);
        }
        assert!((out.final_state.time - 1.0).abs() < 1e-15);
    }
}

#[test]
fn sample_times_are_hit_exactly() {
    let (s, p) = sv_state(32);
    let p = ModelParams { t_end: 0.5, ..p };
    let schedule = DiagnosticSchedule {
        sample_interval: 0.1,
        capture_times: vec![0.25],
        ..DiagnosticSchedule::default()
    };
    let out = run_from_state(s, &p, &schedule).unwrap();
    let times: Vec<f64> = out.samples.iter().map(|s| s.time).collect();
    assert_eq!(times.len(), 6);
    for (k, t) in times.iter().enumerate() {
        assert!((t - 0.1 * k as f64).abs() < 1e-15, "{times:?}");
    }
    assert_eq!(out.captures.len(), 1);
    assert_eq!(out.captures[0].time, 0.25);
}

#[test]
fn density_ceiling_trips_guard() {
    let (s, p) = sv_state(32);
    let p = ModelParams {
        density_ceiling: 1.2,
        ..p
    };
    let out = run_from_state(s, &p, &DiagnosticSchedule::default()).unwrap();
    match &out.termination {
        Termination::Guard {
            reason, rho_max, ..
        } => {
            assert!(reason.contains("ceiling"));
            assert!(*rho_max > 1.2);
        }
        t => panic!("expected a guard, got {t:?}"),
    }
    assert!(out.termination.as_error().is_some());
}

#[test]
fn out_of_regime_runs_never_emit_nan() {
    let spec = preset("gaussian-bump").unwrap();
    let mut params = spec.model_params();
    params.dimension = 3;
    params.alpha = 0.5;
    params.grid_cells = 32;
    params.t_end = 0.5;
    assert!(!params.viscosity_positive());
    let mut spec3 = spec.clone();
    spec3.exponents.dimension = 3;
    spec3.exponents.alpha = 0.5;
    let out = run(&spec3, &params, &DiagnosticSchedule::default()).unwrap();
    for s in &out.samples {
        assert!(s.energy.is_finite() && s.rho_min.is_finite() && s.bd_entropy.is_finite());
    }
    assert!(out.final_state.is_finite());
}

#[test]
fn artificial_viscosity_switches_off() {
    let p = ModelParams {
        eta: 0.1,
        delta: Some(0.7),
        eta_until: Some(0.5),
        ..ModelParams::default()
    };
    assert_eq!(p.eta_at(0.49), 0.1);
    assert_eq!(p.eta_at(0.5), 0.0);
    let mut q = ModelParams {
        eta: 0.1,
        ..ModelParams::default()
    };
    q.resolve_delta(Some(4.0)).unwrap();
    let (lo, hi) = bdflow::regime::delta_interval(2, 4.0).unwrap();
    assert!((q.delta.unwrap() - 0.5 * (lo + hi)).abs() < 1e-15);
    let mut bad = ModelParams {
        eta: 0.1,
        delta: Some(0.99),
        ..ModelParams::default()
    };
    assert!(bad.resolve_delta(Some(4.0)).is_err());
}

#[test]
fn params_validation() {
    let ok = ModelParams::default();
    ok.validate().unwrap();
    for bad in [
        ModelParams {
            t_end: -1.0,
            ..ok.clone()
        },
        ModelParams {
            gamma: 1.0,
            ..ok.clone()
        },
        ModelParams {
            grid_cells: 4,
            ..ok.clone()
        },
        ModelParams {
            dt_safety: 0.0,
            ..ok.clone()
        },
        ModelParams {
            dimension: 4,
            ..ok.clone()
        },
        ModelParams {
            radius: 0.0,
            ..ok.clone()
        },
        ModelParams {
            eta: -0.1,
            ..ok.clone()
        },
    ] {
        assert!(bad.validate().is_err());
    }
    assert_eq!(
        "semi-implicit".parse::<Scheme>().unwrap(),
        Scheme::SemiImplicit
    );
    assert_eq!(Scheme::Explicit.to_string(), "explicit");
    assert!("rk4".parse::<Scheme>().is_err());
}

#[test]
fn runs_are_deterministic() {
    let (s, p) = sv_state(32);
    let p = ModelParams { t_end: 0.3, ..p };
    let a = run_from_state(s.clone(), &p, &DiagnosticSchedule::default()).unwrap();
    let b = run_from_state(s, &p, &DiagnosticSchedule::default()).unwrap();
    assert_eq!(a.samples, b.samples);
    assert_eq!(a.final_state, b.final_state);
}
