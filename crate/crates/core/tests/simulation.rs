use std::fs;

use rand::Rng;

use pinning::conditions::QuadCertificate;
use pinning::model::{Chua, CouplingFunction, Dynamics, LinearDecay, NetworkSystem};
use pinning::random::{case_rng, irreducible_coupling, symmetric_coupling};
use pinning::report::run_scenario;
use pinning::scenario::{builtin, CouplingSpec, ScenarioConfig, BUILTIN_SCENARIOS};
use pinning::simulate::{
    integrate, lyapunov_monitor, metrics, step_halving_check, DEFAULT_TOL_RATE,
};

fn decay_system(rate: f64) -> NetworkSystem {
    NetworkSystem::new(
        pinning::model::validate_coupling(&[[0.0]]).unwrap(),
        Dynamics::LinearDecay(LinearDecay { rate, dim: 1 }),
        CouplingFunction::Identity,
        1.0,
    )
    .unwrap()
}

#[test]
fn rk4_is_fourth_order_on_exponential_decay() {
    let sys = decay_system(1.0);
    let err = |dt: f64| {
        let traj = integrate(&sys, &[1.0], &[0.0], dt, 1.0).unwrap();
        (traj.final_state()[0] - (-1f64).exp()).abs()
    };
    let (e1, e2, e3) = (err(0.1), err(0.05), err(0.025));
    assert!(e1 / e2 >= 15.0, "{}", e1 / e2);
    assert!(e2 / e3 >= 15.0, "{}", e2 / e3);
}

#[test]
fn rk4_order_holds_for_random_rates() {
    for case in 0..1000 {
        let mut rng = case_rng(21, case);
        let rate = rng.gen_range(0.2..3.0);
        let x0 = rng.gen_range(-5.0..5.0);
        let sys = decay_system(rate);
        let err = |dt: f64| {
            let traj = integrate(&sys, &[x0], &[0.0], dt, 1.0).unwrap();
            (traj.final_state()[0] - x0 * (-rate).exp()).abs()
        };
        let (e1, e2, e3) = (err(0.1), err(0.05), err(0.025));
        assert!(
            e1 / e2 >= 15.0 && e2 / e3 >= 15.0,
            "case {case}: rate {rate}"
        );
    }
}

fn random_network(case: u64) -> (NetworkSystem, Vec<f64>) {
    let mut rng = case_rng(31, case);
    let m = rng.gen_range(2..=6);
    let a = if rng.gen_bool(0.5) {
        symmetric_coupling(&mut rng, m)
    } else {
        irreducible_coupling(&mut rng, m)
    };
    let gfun = if rng.gen_bool(0.5) {
        CouplingFunction::Identity
    } else {
        CouplingFunction::sine(rng.gen_range(0.0..0.9)).unwrap()
    };
    let sys = NetworkSystem::new(
        a,
        Dynamics::Chua(Chua::double_scroll()),
        gfun,
        rng.gen_range(0.5..20.0),
    )
    .unwrap()
    .with_pin(rng.gen_range(1..=m), rng.gen_range(0.1..5.0))
    .unwrap();
    let s0 = vec![
        rng.gen_range(-2.0..2.0),
        rng.gen_range(-0.5..0.5),
        rng.gen_range(-3.0..3.0),
    ];
    (sys, s0)
}

#[test]
fn pinned_manifold_is_invariant() {
    for case in 0..1000 {
        let (sys, s0) = random_network(case);
        let x0: Vec<f64> = (0..sys.nodes()).flat_map(|_| s0.clone()).collect();
        let traj = integrate(&sys, &x0, &s0, 1e-3, 0.2).unwrap();
        for k in 0..traj.len() {
            let s = traj.reference(k);
            let dev: f64 = (0..sys.nodes())
                .map(|i| {
                    traj.node(k, i)
                        .iter()
                        .zip(s)
                        .map(|(x, y)| (x - y) * (x - y))
                        .sum::<f64>()
                        .sqrt()
                })
                .sum();
            assert!(dev <= 1e-10, "case {case}, t = {}", traj.times[k]);
        }
    }
}

#[test]
fn metric_ratios_start_at_one() {
    for case in 0..1000 {
        let (sys, s0) = random_network(case);
        let mut rng = case_rng(41, case);
        let x0: Vec<f64> = (0..sys.nodes() * 3)
            .map(|_| rng.gen_range(-10.0..10.0))
            .collect();
        let traj = integrate(&sys, &x0, &s0, 1e-3, 1e-3).unwrap();
        let series = metrics(&traj, None, &[1.0; 3]).unwrap();
        assert_eq!(series.sync_ratio.unwrap()[0], 1.0);
        assert_eq!(series.pin_ratio.unwrap()[0], 1.0);
    }
}

#[test]
fn undefined_ratios_are_reported_as_such() {
    let (sys, s0) = random_network(0);
    let x0: Vec<f64> = (0..sys.nodes()).flat_map(|_| s0.clone()).collect();
    let traj = integrate(&sys, &x0, &s0, 1e-3, 0.01).unwrap();
    let series = metrics(&traj, None, &[1.0; 3]).unwrap();
    assert!(series.sync_ratio.is_none() && series.pin_ratio.is_none());
    assert!(series.lyapunov.iter().all(|&v| v == 0.0));
    let cert = QuadCertificate::new(vec![1.0; 3], vec![10.0; 3], 0.6218).unwrap();
    let report = lyapunov_monitor(&traj, &cert, None, DEFAULT_TOL_RATE).unwrap();
    assert_eq!(report.violations, 0);
}

#[test]
fn equilibrium_reference_stays_at_origin() {
    let cfg = builtin("fig4-sym-pinned").unwrap();
    let r = cfg.resolve(&Default::default()).unwrap();
    let traj = integrate(&r.system, &r.x0, &[0.0; 3], 1e-3, 5.0).unwrap();
    for k in 0..traj.len() {
        assert!(traj.reference(k).iter().all(|v| v.abs() <= 1e-13));
    }
}

#[test]
fn builtins_pass_step_halving_check() {
    for id in BUILTIN_SCENARIOS {
        let r = builtin(id).unwrap().resolve(&Default::default()).unwrap();
        let rel = step_halving_check(&r.system, &r.x0, &r.s0, r.dt, r.t_max.min(1.0)).unwrap();
        assert!(rel < 1e-6, "{id}: {rel:e}");
    }
}

#[test]
fn csv_output_is_deterministic() {
    let mut cfg = builtin("fig4-sym-pinned").unwrap();
    cfg.integration.t_max = 2.0;
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_scenario(&cfg, a.path()).unwrap();
    run_scenario(&cfg, b.path()).unwrap();
    for file in ["metrics.csv", "trajectory.csv"] {
        let x = fs::read(a.path().join(file)).unwrap();
        let y = fs::read(b.path().join(file)).unwrap();
        assert!(!x.is_empty());
        assert_eq!(x, y, "{file}");
    }
}

#[test]
fn csv_schemas() {
    let mut cfg = builtin("fig5-asym-pinned").unwrap();
    cfg.integration.t_max = 0.01;
    let dir = tempfile::tempdir().unwrap();
    run_scenario(&cfg, dir.path()).unwrap();
    let metrics = fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
    let mut lines = metrics.lines();
    assert_eq!(lines.next(), Some("t,sync_ratio,pin_ratio,lyapunov"));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first.len(), 4);
    assert_eq!(first[1].parse::<f64>().unwrap(), 1.0);
    // 50 steps at dt 2e-4 with stride 5 gives samples 0, 5, ..., 50
    assert_eq!(metrics.lines().count(), 1 + 11);

    let traj = fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    let mut lines = traj.lines();
    assert_eq!(lines.next(), Some("t,node,x1,x2,x3"));
    let nodes: Vec<&str> = lines
        .take(4)
        .map(|l| l.split(',').nth(1).unwrap())
        .collect();
    assert_eq!(nodes, ["0", "1", "2", "3"]);
    // full double precision survives the round trip
    let x: f64 = traj
        .lines()
        .nth(2)
        .unwrap()
        .split(',')
        .nth(2)
        .unwrap()
        .parse()
        .unwrap();
    assert_eq!(x, 40.1);
}

#[test]
fn undefined_ratio_cells_are_empty() {
    let mut cfg = builtin("fig4-sym-pinned").unwrap();
    cfg.initial_states = vec![vec![0.0; 3]; 3];
    cfg.integration.t_max = 0.01;
    let dir = tempfile::tempdir().unwrap();
    let out = run_scenario(&cfg, dir.path()).unwrap();
    assert!(out.summary.final_pin_ratio.is_none());
    let metrics = fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
    let row = metrics.lines().nth(1).unwrap();
    assert!(row.contains(",,,"), "{row}");
}

#[test]
fn divergence_writes_flagged_partial_outputs() {
    let cfg = ScenarioConfig {
        name: "blowup".into(),
        description: None,
        coupling: CouplingSpec::Inline(vec![vec![-1.0, 1.0], vec![1.0, -1.0]]),
        dynamics: pinning::scenario::DynamicsConfig {
            kind: "linear_decay".into(),
            params: [("rate".to_string(), -5.0)].into(),
        },
        coupling_function: Default::default(),
        c: 1.0,
        pin: None,
        certificate: None,
        initial_states: vec![vec![1.0], vec![2.0]],
        reference_initial: vec![0.0],
        integration: pinning::scenario::IntegrationConfig {
            dt: 0.01,
            t_max: 10.0,
        },
        analysis: Default::default(),
        outputs: Default::default(),
        metadata: Default::default(),
    };
    let dir = tempfile::tempdir().unwrap();
    let out = run_scenario(&cfg, dir.path()).unwrap();
    assert!(!out.summary.completed);
    assert_eq!(out.summary.exit_code(), 3);
    let t = out.summary.diverged_at.unwrap();
    assert!(t > 3.0 && t < 5.0, "{t}");
    let summary = fs::read_to_string(dir.path().join("summary.txt")).unwrap();
    assert!(summary.contains("DIVERGED"));
    assert!(dir.path().join("metrics.csv").exists());
}

#[test]
fn certified_runs_have_no_lyapunov_violations() {
    for id in ["fig4-sym-pinned", "fig5-asym-pinned"] {
        let cfg = builtin(id).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let out = run_scenario(&cfg, dir.path()).unwrap();
        assert!(out.summary.check.conditions_hold(), "{id}");
        let l = out.summary.lyapunov.unwrap();
        assert_eq!(l.violations, 0, "{id}: {:?}", l.first_violation);
        assert!(l.checked > 1000);
    }
}

#[test]
fn run_writes_only_under_output_directory() {
    let mut cfg = builtin("reducible-pinned").unwrap();
    cfg.integration.t_max = 0.5;
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("nested/out");
    let out = run_scenario(&cfg, &out_dir).unwrap();
    for f in &out.summary.files {
        assert!(f.starts_with(&out_dir));
    }
    let mut names: Vec<String> = fs::read_dir(&out_dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names, ["metrics.csv", "summary.txt", "trajectory.csv"]);
}
