use bdflow::commands::*;
use bdflow::diagnostics::DiagnosticSchedule;
use bdflow::geometry::{uniform_mass_edges, LagrangianState};
use bdflow::io::*;
use bdflow::regime::Theorem;
use bdflow::solver::Scheme;
use bdflow::Error;
use proptest::prelude::*;

const MINIMAL: &str = r#"
[initial_data]
preset = "equilibrium"
"#;

#[test]
fn minimal_config_parses() {
    let c = parse_config(MINIMAL).unwrap();
    assert_eq!(c.output_dir, "bdflow-out");
    assert!(c.deterministic);
    assert_eq!(c.snapshot_every, 0);
    let spec = c.initial_data_spec().unwrap();
    let p = c.model_params(&spec).unwrap();
    assert_eq!((p.dimension, p.alpha, p.gamma), (2, 1.0, 2.0));
}

#[test]
fn unknown_key_is_located() {
    let text =
        "[model]\ngrid_cells = 64\n\n[initial_data]\nalpah = 1.0\npreset = \"equilibrium\"\n";
    match parse_config(text) {
        Err(Error::Parse {
            line,
            column,
            message,
        }) => {
            assert_eq!((line, column), (5, 1));
            assert!(message.contains("alpah"), "{message}");
        }
        other => panic!("expected a parse error, got {other:?}"),
    }
}

#[test]
fn invalid_values_are_config_errors() {
    for text in [
        "[model]\nt_end = -1.0\n[initial_data]\npreset = \"equilibrium\"\n",
        "deterministic = false\n[initial_data]\npreset = \"equilibrium\"\n",
        "[initial_data]\npreset = \"nope\"\n",
        "[model]\ngrid_cells = 2\n[initial_data]\npreset = \"equilibrium\"\n",
        "[initial_data]\npreset = \"equilibrium\"\n[sweep]\nkind = \"eta\"\nvalues = [0.01, 0.1]\ncomparison_times = [0.1]\n",
    ] {
        let e = parse_config(text).unwrap_err();
        assert_eq!(exit_code(&e), EXIT_CONFIG, "{text}: {e}");
    }
    assert_eq!(exit_code(&parse_config("x = [").unwrap_err()), EXIT_CONFIG);
}

#[test]
fn full_config_round_trips() {
    let text = r#"
output_dir = "out/a"
snapshot_every = 3

[model]
dimension = 2
alpha = 1.0
gamma = 2.0
eta = 0.01
eta_until = 0.1
grid_cells = 64
scheme = "explicit"
dt_safety = 0.4
t_end = 0.5

[initial_data]
preset = "t2-vacuum"
vacuum_floor = 1e-5

[diagnostics]
sample_interval = 0.05
lp_exponents = [4.0, 6.0]
xi = [0.25]
particle_fractions = [0.5]
vacuum_threshold = 1e-3

[sweep]
kind = "iota"
values = [0.1, 0.05]
comparison_times = [0.25, 0.5]
reference = true
"#;
    let c = parse_config(text).unwrap();
    assert_eq!(c.model.scheme, Some(Scheme::Explicit));
    assert_eq!(c.diagnostics.lp_exponents, vec![4.0, 6.0]);
    let canonical = config_to_toml(&c).unwrap();
    let back = parse_config(&canonical).unwrap();
    assert_eq!(back, c);
    assert_eq!(config_to_toml(&back).unwrap(), canonical);
    assert!(c.sweep_plan().unwrap().is_some());
}

#[test]
fn analytic_initial_data_needs_exponents() {
    let text = r#"
[initial_data]
density = { kind = "constant", value = 2.0 }
velocity = { kind = "zero" }
"#;
    assert!(parse_config(text).is_err());
}

#[test]
fn csv_header_layout() {
    let schedule = DiagnosticSchedule {
        lp_exponents: vec![4.0, 6.5],
        xi: vec![0.5],
        particle_fractions: vec![0.25, 0.75],
        ..DiagnosticSchedule::default()
    };
    let h = csv_header(&schedule);
    assert_eq!(h[0], "time");
    assert_eq!(
        &h[1..7],
        [
            "energy",
            "bd_entropy",
            "rho_min",
            "rho_max",
            "u_max",
            "w_max"
        ]
    );
    assert!(h.contains(&"lp_u_4".to_string()));
    assert!(h.contains(&"lp_u_6.5".to_string()));
    assert!(h.contains(&"r_weighted_sup_0.5".to_string()));
    assert_eq!(h.last().unwrap(), "particle_0.75");
    let body = csv_series(&schedule, &[]);
    assert_eq!(body.lines().next().unwrap(), h.join(","));
}

#[test]
fn plot_script_requires_columns() {
    let header = csv_header(&DiagnosticSchedule::default()).join(",");
    let script = emit_plot_script("series.csv", &header).unwrap();
    for png in ["energy.png", "density_bounds.png", "decay.png", "paths.png"] {
        assert!(script.contains(png));
    }
    let without = header.replace("bd_entropy,", "");
    match emit_plot_script("series.csv", &without) {
        Err(e @ Error::Format(_)) => {
            assert!(e.to_string().contains("bd_entropy"));
            assert_eq!(exit_code(&e), EXIT_IO);
        }
        other => panic!("expected a format error, got {other:?}"),
    }
    for c in PLOT_COLUMNS {
        assert!(header.split(',').any(|h| h == c), "{c}");
    }
}

fn arb_snapshot() -> impl Strategy<Value = Snapshot> {
    (
        prop::collection::vec(1e-6f64..1e3, 2..24),
        prop::collection::vec(-10.0f64..10.0, 24),
        0.0f64..0.5,
        0.0f64..100.0,
        any::<bool>(),
    )
        .prop_map(|(rho, u, inner, time, three)| {
            let g = rho.len();
            let mut velocity = u[..=g].to_vec();
            velocity[0] = 0.0;
            velocity[g] = 0.0;
            let n = if three { 3 } else { 2 };
            let state = LagrangianState::from_density(
                n,
                uniform_mass_edges(0.7, g),
                rho,
                velocity,
                inner,
                time,
            )
            .unwrap();
            Snapshot {
                alpha: 1.0 / 3.0,
                gamma: 1.4,
                state,
            }
        })
}

proptest! {
    #[test]
    fn snapshot_round_trip_is_exact(snap in arb_snapshot()) {
        let text = snapshot_to_string(&snap);
        let back = snapshot_from_str(&text).unwrap();
        prop_assert_eq!(&back, &snap);
        prop_assert_eq!(snapshot_to_string(&back), text);
    }
}

#[test]
fn malformed_snapshots_are_rejected() {
    let snap = Snapshot {
        alpha: 1.0,
        gamma: 2.0,
        state: LagrangianState::uniform(2, 4, 0.0, 1.0, 1.0).unwrap(),
    };
    let text = snapshot_to_string(&snap);
    assert!(text.starts_with("BDFLOW-SNAPSHOT 1\n"));
    assert!(snapshot_from_str(&text.replace("BDFLOW-SNAPSHOT", "OTHER")).is_err());
    assert!(snapshot_from_str(&format!("{text}1.0\n")).is_err());
    let truncated: String = text.lines().take(10).map(|l| format!("{l}\n")).collect();
    assert!(snapshot_from_str(&truncated).is_err());
    let e = snapshot_from_str("").unwrap_err();
    assert_eq!(exit_code(&e), EXIT_IO);
}

#[test]
fn snapshot_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("a.snap");
    let snap = Snapshot {
        alpha: 1.0,
        gamma: 2.0,
        state: LagrangianState::uniform(3, 6, 0.1, 1.0, 2.0).unwrap(),
    };
    write_snapshot(&path, &snap).unwrap();
    assert_eq!(read_snapshot(&path).unwrap(), snap);
    let e = read_snapshot(&dir.path().join("missing.snap")).unwrap_err();
    assert_eq!(exit_code(&e), EXIT_IO);
}

fn config_in(dir: &std::path::Path, preset: &str, t_end: f64) -> RunConfig {
    let mut c = RunConfig::for_preset(preset, t_end);
    c.model.grid_cells = Some(32);
    c.output_dir = dir.display().to_string();
    c
}

#[test]
fn equilibrium_run_writes_flat_series() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = config_in(dir.path(), "equilibrium", 0.5);
    c.snapshot_every = 2;
    let mut out = Vec::new();
    let manifest = cmd_run(&c, &mut out, false).unwrap();
    assert_eq!(manifest.status, RunStatus::Completed);
    assert!(String::from_utf8(out).unwrap().contains("completed"));
    let csv = std::fs::read_to_string(dir.path().join(SERIES_FILE)).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap();
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 6);
    for r in &rows {
        assert!((r[col("energy")] - rows[0][col("energy")]).abs() < 1e-12);
        assert!(r[col("u_max")] < 1e-12);
    }
    for f in [
        MANIFEST_FILE,
        PLOT_FILE,
        "snapshots/initial.snap",
        "snapshots/final.snap",
        "snapshots/sample_00004.snap",
    ] {
        assert!(dir.path().join(f).exists(), "{f}");
        assert!(manifest.files.iter().any(|m| m == f), "{f}");
    }
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join(MANIFEST_FILE)).unwrap())
            .unwrap();
    assert_eq!(json["status"], "completed");
    assert_eq!(json["csv_schema_version"], 1);
    let snap = cmd_inspect(&dir.path().join("snapshots/final.snap"), &mut Vec::new()).unwrap();
    assert_eq!(snap.state.time, 0.5);
}

#[test]
fn runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        cmd_run(
            &config_in(d.path(), "sv-smooth", 0.2),
            &mut Vec::new(),
            true,
        )
        .unwrap();
    }
    for f in [SERIES_FILE, "snapshots/final.snap"] {
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn guard_trip_still_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = config_in(dir.path(), "sv-smooth", 1.0);
    c.model.density_ceiling = Some(1.2);
    let e = cmd_run(&c, &mut Vec::new(), true).unwrap_err();
    assert_eq!(exit_code(&e), EXIT_GUARD);
    assert!(error_line(&e).starts_with("error code=3 kind=guard message="));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join(MANIFEST_FILE)).unwrap())
            .unwrap();
    assert_eq!(json["status"], "guard");
    assert!(dir.path().join(SERIES_FILE).exists());
}

#[test]
fn overrides_are_revalidated() {
    let mut c = RunConfig::for_preset("equilibrium", 1.0);
    apply_overrides(
        &mut c,
        &Overrides {
            grid: Some(48),
            scheme: Some(Scheme::Explicit),
            ..Overrides::default()
        },
    )
    .unwrap();
    assert_eq!(c.model.grid_cells, Some(48));
    let e = apply_overrides(
        &mut c,
        &Overrides {
            t_end: Some(-1.0),
            ..Overrides::default()
        },
    )
    .unwrap_err();
    assert_eq!(exit_code(&e), EXIT_CONFIG);
}

#[test]
fn regime_command_reports_verdicts() {
    let mut out = Vec::new();
    let r = cmd_regime(2, 1.0, 2.0, Some(4.0), Some("2"), &mut out).unwrap();
    assert!(r.satisfied(Theorem::SvTwoD));
    assert!(!out.is_empty());
    assert!(cmd_regime(4, 1.0, 2.0, None, None, &mut Vec::new()).is_err());
    assert!(cmd_regime(2, 1.0, 1.0, None, None, &mut Vec::new()).is_err());
    assert!(cmd_regime(2, 1.0, 2.0, None, Some("x/y"), &mut Vec::new()).is_err());
}

#[test]
fn sweep_command_writes_members() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = config_in(dir.path(), "gaussian-bump", 0.2);
    c.sweep = Some(SweepConfig {
        kind: bdflow::continuation::SweepKind::Iota,
        values: vec![0.1, 0.05],
        comparison_times: vec![0.2],
        reference: true,
    });
    let mut out = Vec::new();
    let report = cmd_sweep(&c, &mut out, false).unwrap();
    assert!(report.all_completed());
    assert!(dir.path().join(SWEEP_FILE).exists());
    assert!(dir.path().join("members/member_00.json").exists());
    assert!(dir.path().join("members/member_01.json").exists());
    assert!(dir.path().join("members/reference.json").exists());
    let no_sweep = config_in(dir.path(), "gaussian-bump", 0.2);
    assert_eq!(
        exit_code(&cmd_sweep(&no_sweep, &mut Vec::new(), true).unwrap_err()),
        EXIT_CONFIG
    );
}
