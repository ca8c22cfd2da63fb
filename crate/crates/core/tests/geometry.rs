use bdflow::geometry::*;
use bdflow::initial_data::{initial_profile, preset};
use proptest::prelude::*;

#[test]
fn measures() {
    assert_eq!(unit_ball_measure(2), std::f64::consts::PI);
    assert!((unit_ball_measure(3) - 4.0 * std::f64::consts::PI / 3.0).abs() < 1e-15);
    assert!((sphere_measure(3) - 4.0 * std::f64::consts::PI).abs() < 1e-15);
    assert!((shell_volume(2, 0.5, 1.0) - (1.0 - 0.25) / 2.0).abs() < 1e-15);
    assert!((shell_volume(3, 0.5, 1.0) - (1.0 - 0.125) / 3.0).abs() < 1e-15);
}

#[test]
fn constant_mass_map_is_a_power() {
    for n in [2u32, 3] {
        let p = EulerianProfile::from_fn(n, 0.0, 2.0, 64, |_| 3.0, |_| 0.0).unwrap();
        let (y, total) = mass_coordinate(&p).unwrap();
        assert_eq!(y[0], 0.0);
        for (k, &r) in p.radii.iter().enumerate() {
            let expect = (r / 2.0).powi(n as i32);
            assert!((y[k] / total - expect).abs() < 1e-14, "N={n} k={k}");
        }
    }
}

#[test]
fn linear_density_mass_map() {
    let g = 4096;
    let p = EulerianProfile::from_fn(2, 0.0, 1.0, g, |r| r, |_| 0.0).unwrap();
    let (y, _) = mass_coordinate(&p).unwrap();
    for (k, &r) in p.radii.iter().enumerate().step_by(97) {
        assert!((y[k] - r * r * r / 3.0).abs() < 1e-8, "r={r}");
    }
}

#[test]
fn zero_mass_rejected() {
    let p = EulerianProfile::from_fn(2, 0.0, 1.0, 8, |_| 0.0, |_| 0.0).unwrap();
    assert!(mass_coordinate(&p).is_err());
}

#[test]
fn constant_radius_reconstruction() {
    for n in [2u32, 3] {
        let rho = 1.7;
        let edges = uniform_mass_edges(2.5, 40);
        let r = reconstruct_radius(&vec![rho; 40], &edges, 0.0, n).unwrap();
        for (y, r) in edges.iter().zip(&r) {
            let expect = (n as f64 * y / rho).powf(1.0 / n as f64);
            assert!((r - expect).abs() < 1e-13 * expect.max(1.0));
        }
    }
    assert!(reconstruct_radius(&[1.0, 0.0], &[0.0, 1.0, 2.0], 0.0, 2).is_err());
}

#[test]
fn linear_density_radius_inversion() {
    // ρ(r) = r in 2D: y = r³/3, so r(y) = (3y)^{1/3}.
    let g = 4096;
    let p = EulerianProfile::from_fn(2, 0.0, 1.0, g, |r| r, |_| 0.0).unwrap();
    let (_, total) = mass_coordinate(&p).unwrap();
    let edges = uniform_mass_edges(total, 256);
    let s = from_eulerian(&p, &edges).unwrap();
    for (y, r) in s.mass_edges.iter().zip(&s.radius).skip(1) {
        assert!((r - (3.0 * y).cbrt()).abs() < 1e-5, "y={y}");
    }
}

#[test]
fn constant_round_trip_is_exact() {
    for n in [2u32, 3] {
        let p = EulerianProfile::from_fn(n, 0.1, 1.0, 50, |_| 2.0, |_| 0.0).unwrap();
        let (_, total) = mass_coordinate(&p).unwrap();
        let s = from_eulerian(&p, &uniform_mass_edges(total, 50)).unwrap();
        let q = to_eulerian(&s);
        for (y, r) in s.mass_edges.iter().zip(&q.radii) {
            let expect = (0.1f64.powi(n as i32) + n as f64 * y / 2.0).powf(1.0 / n as f64);
            assert!((r - expect).abs() < 1e-10);
        }
        assert!(q.density.iter().all(|&d| (d - 2.0).abs() < 1e-10));
        assert!(s.velocity.iter().all(|&u| u == 0.0));
    }
}

#[test]
fn eulerian_mass_matches_on_t2_preset() {
    let spec = preset("t2-paper").unwrap();
    let mut params = spec.model_params();
    params.grid_cells = 256;
    let profile = initial_profile(&spec, &params).unwrap();
    let (_, total) = mass_coordinate(&profile).unwrap();
    let s = from_eulerian(&profile, &uniform_mass_edges(total, 256)).unwrap();
    let back = to_eulerian(&s);
    assert!((back.radial_mass() - s.total_mass).abs() < 1e-10 * s.total_mass);
}

#[test]
fn specific_volume_and_domain_volume() {
    let s = LagrangianState::uniform(2, 32, 0.0, 1.0, 2.0).unwrap();
    assert!(specific_volume(&s).unwrap().iter().all(|&v| v == 0.5));
    assert!((s.volume() - 0.5).abs() < 1e-14);
    let s3 = LagrangianState::uniform(3, 16, 0.1, 1.0, 2.0).unwrap();
    assert!((s3.volume() - s3.domain_volume()).abs() < 1e-13);
    assert_eq!(s3.outer_radius(), 1.0);
}

#[test]
fn core_grid_first_cell() {
    let e = core_mass_edges(1e-6, 1.0, 5).unwrap();
    assert_eq!(e.len(), 6);
    assert_eq!(e[1], 1e-6);
    assert_eq!(e[5], 1.0);
    assert!(core_mass_edges(2.0, 1.0, 5).is_err());
}

#[test]
fn rejects_bad_profiles() {
    assert!(EulerianProfile::new(2, vec![0.0, 1.0], vec![1.0, 2.0], vec![0.0]).is_err());
    assert!(EulerianProfile::new(2, vec![0.0, 0.0], vec![1.0], vec![0.0]).is_err());
    assert!(EulerianProfile::new(4, vec![0.0, 1.0], vec![1.0], vec![0.0]).is_err());
}

#[test]
fn state_requires_zero_wall_velocity() {
    let mut s = LagrangianState::uniform(2, 8, 0.0, 1.0, 1.0).unwrap();
    s.velocity[8] = 0.1;
    assert!(s.validate().is_err());
}

/// L∞ error of the density round trip for a smooth profile at resolution g.
fn round_trip_error(g: usize) -> f64 {
    let f = |r: f64| 1.0 + 0.5 * (std::f64::consts::PI * r).cos();
    let p = EulerianProfile::from_fn(2, 0.0, 1.0, g, f, |_| 0.0).unwrap();
    let (_, total) = mass_coordinate(&p).unwrap();
    let s = from_eulerian(&p, &uniform_mass_edges(total, g)).unwrap();
    let q = to_eulerian(&s);
    let c = q.centres();
    p.centres()
        .iter()
        .zip(&p.density)
        .map(|(&r, &d)| (EulerianProfile::interpolate(&q.density, &c, r) - d).abs())
        .fold(0.0, f64::max)
}

#[test]
fn round_trip_error_shrinks_with_refinement() {
    let e1 = round_trip_error(128);
    let e2 = round_trip_error(256);
    let e3 = round_trip_error(512);
    assert!(e2 < e1 && e3 < e2, "{e1} {e2} {e3}");
}

proptest! {
    #[test]
    fn radius_increases_and_volume_matches(
        rho in prop::collection::vec(0.01f64..100.0, 2..64),
        inner in 0.0f64..0.5,
        three in any::<bool>(),
    ) {
        let n = if three { 3 } else { 2 };
        let g = rho.len();
        let edges = uniform_mass_edges(1.0, g);
        let s = LagrangianState::from_density(n, edges, rho, vec![0.0; g + 1], inner, 0.0).unwrap();
        prop_assert!(s.radius.windows(2).all(|w| w[1] > w[0]));
        prop_assert_eq!(s.radius[0], inner);
        let rel = (s.volume() - s.domain_volume()).abs() / s.domain_volume();
        prop_assert!(rel < 1e-10);
    }

    #[test]
    fn eulerian_lagrangian_mass_agrees(
        rho in prop::collection::vec(0.05f64..10.0, 4..40),
        three in any::<bool>(),
    ) {
        let n = if three { 3 } else { 2 };
        let g = rho.len();
        let radii: Vec<f64> = (0..=g).map(|k| k as f64 / g as f64).collect();
        let p = EulerianProfile::new(n, radii, rho, vec![0.0; g]).unwrap();
        let (_, total) = mass_coordinate(&p).unwrap();
        let s = from_eulerian(&p, &uniform_mass_edges(total, 2 * g)).unwrap();
        prop_assert!((to_eulerian(&s).radial_mass() - total).abs() < 1e-10 * total);
        prop_assert!((s.outer_radius() - 1.0).abs() < 1e-12);
    }
}
