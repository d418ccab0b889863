use nalgebra::{DMatrix, DVector};

use tvopt::engine::{run_online, StepRecord, Trajectory};
use tvopt::metrics::{normalized_tracking_error, tracking_error};
use tvopt::oracle::{
    brute_force_grid, optimal_trajectory, reference_point, solve_p0, solve_saddle_point, Comparator,
    OracleTrajectory, SaddleOptions,
};
use tvopt::problem::AlgorithmConfig;
use tvopt::scenarios::feeder::sensitivities;
use tvopt::scenarios::{
    random_spd_instance, scenario_feeder, scenario_quadratic_drift, scenario_static, FeederParams,
    QuadraticParams, StaticParams,
};
use tvopt::schedule::Schedule;

fn fixture() -> toml::Table {
    include_str!("fixtures/feeder.toml").parse().unwrap()
}

fn floats(v: &toml::Value) -> Vec<f64> {
    v.as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_float().unwrap())
        .collect()
}

fn matrix(v: &toml::Value) -> DMatrix<f64> {
    let rows: Vec<Vec<f64>> = v.as_array().unwrap().iter().map(floats).collect();
    DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j])
}

#[test]
fn feeder_matrices_match_fixture() {
    let fx = fixture();
    let params = FeederParams::default();
    assert_eq!(fx["matrix_seed"].as_integer().unwrap() as u64, params.matrix_seed);
    let (r, x) = sensitivities(&params);
    assert!((r - matrix(&fx["r"])).amax() < 1e-18);
    assert!((x - matrix(&fx["x"])).amax() < 1e-18);
}

#[test]
fn feeder_constraints_at_zero_injection_match_fixture() {
    let fx = fixture();
    let loads = floats(&fx["loads"]);
    let params = FeederParams {
        loads: loads.iter().map(|l| Schedule::constant(*l)).collect(),
        reference: Schedule::constant(fx["reference"].as_float().unwrap()),
        ..FeederParams::default()
    };
    let (problem, plant) = scenario_feeder(&params).unwrap();
    let x0 = DVector::zeros(problem.n());
    let y = plant.model_output(&x0, 0).unwrap();
    let g = problem.g_values(&y, 0);
    let expect = floats(&fx["g_at_zero"]);
    assert_eq!(g.len(), expect.len());
    for (a, b) in g.iter().zip(&expect) {
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }
    let v = tvopt::scenarios::feeder::zero_injection_voltages(&params, &loads);
    for (a, b) in v.iter().zip(floats(&fx["voltages_at_zero"])) {
        assert!((a - b).abs() < 1e-14);
    }
}

#[test]
fn tracking_error_of_unit_offset_is_one() {
    let record = StepRecord {
        k: 0,
        x: DVector::from_element(1, 1.0),
        lambda: DVector::from_element(1, 0.0),
        y_hat: DVector::zeros(1),
        y_model: DVector::zeros(1),
        h: 0.0,
        g: DVector::zeros(1),
        meas_err: 0.0,
        map_perturbation: 0.0,
    };
    let traj = Trajectory {
        config: AlgorithmConfig::case2(0.1, 0.1, 0.1, 1).unwrap(),
        records: vec![record.clone()],
        realized_e_y: 0.0,
        dual_boundary_hits: 0,
        zero_initial_dual: true,
    };
    let oracle = OracleTrajectory {
        start: 0,
        source: Comparator::Analytic,
        x_star: vec![DVector::zeros(1)],
        lambda_star: vec![DVector::zeros(1)],
        sigma: vec![],
        sigma_bar: vec![],
    };
    assert_eq!(tracking_error(&traj, &oracle).unwrap(), vec![1.0]);
    let at_optimum = OracleTrajectory {
        x_star: vec![record.x.clone()],
        ..oracle
    };
    assert_eq!(tracking_error(&traj, &at_optimum).unwrap(), vec![0.0]);
    assert_eq!(normalized_tracking_error(&traj, &at_optimum).unwrap(), vec![0.0]);
}

#[test]
fn quadratic_reference_points() {
    let (problem, plant) =
        scenario_quadratic_drift(&QuadraticParams::drift(1.0, 0.01).with_box(2.0)).unwrap();
    let cfg = AlgorithmConfig::case1(0.1, 1.0 / 3.0, 10).unwrap();
    let (x, _, src) = reference_point(&problem, &plant, &cfg, 0, 1e-9, None).unwrap();
    assert_eq!(src, Comparator::Analytic);
    assert_eq!(x[0], 0.0);
    let o = optimal_trajectory(&problem, &plant, &cfg, 10).unwrap();
    for (k, s) in o.sigma.iter().enumerate() {
        let expect = ((0.01 * (k + 1) as f64).sin() - (0.01 * k as f64).sin()).abs();
        assert!((s - expect).abs() < 1e-15);
    }
}

#[test]
fn saddle_solver_matches_closed_form_on_static_scenario() {
    let (problem, plant) = scenario_static(&StaticParams::default()).unwrap();
    for (p, d, radius) in [(0.01, 0.01, 10.0), (0.1, 0.5, 10.0), (0.01, 0.01, 0.5)] {
        let opts = SaddleOptions::new(p, d).radius(radius).tol(1e-10);
        let numeric = solve_saddle_point(&problem.without_analytic(), &plant, 0, &opts).unwrap();
        let closed = problem.analytic().unwrap().solve(0, p, d, radius).unwrap();
        assert!(
            (numeric.x[0] - closed.0[0]).abs() < 1e-8,
            "p {p} d {d} R {radius}"
        );
        assert!((numeric.lambda[0] - closed.1[0]).abs() < 1e-7);
    }
}

#[test]
fn unregularized_oracle_agrees_with_grid_and_closed_form() {
    let (problem, plant) = scenario_static(&StaticParams::default()).unwrap();
    let s = solve_p0(&problem.without_analytic(), &plant, 0, 1e-6).unwrap();
    assert!((s.x[0] - 1.0).abs() < 1e-5);
    for seed in [100, 101, 102] {
        let (problem, plant) = random_spd_instance(seed, 2, 1e-3).unwrap();
        let a = solve_p0(&problem, &plant, 0, 1e-6).unwrap();
        let b = brute_force_grid(&problem, &plant, 0, 1e-3).unwrap();
        assert!((a.x - b).amax() <= 2e-3);
    }
}

#[test]
fn engine_reaches_the_closed_form_on_the_static_scenario() {
    let (problem, plant) = scenario_static(&StaticParams::default()).unwrap();
    let cfg = AlgorithmConfig::case2(0.2, 0.01, 0.01, 3000)
        .unwrap()
        .with_dual_radius(10.0)
        .unwrap();
    let t = run_online(&problem, &plant, &cfg, None, None).unwrap();
    let last = t.last().unwrap();
    let x = 1.0 / (1.0 + 0.01 * 1.01);
    assert!((last.x[0] - x).abs() < 1e-9);
    assert!((last.lambda[0] - 1.01 * x).abs() < 1e-9);
}
