mod common;

use entropy_rate_dg::dg::cell_means;
use entropy_rate_dg::experiment::output::{read_table, write_table, ConvergenceRow, EntropySample, Format, SnapshotRow};
use entropy_rate_dg::experiment::problems::{ProblemConfig, ProblemId};
use entropy_rate_dg::experiment::run::{build_scheme, run_problem, RunOptions};
use entropy_rate_dg::experiment::studies::{
    compare_histories, density_errors, l1_to_reference, max_timestep_search, reference_run, SearchSettings,
};
use entropy_rate_dg::time::Scheme;
use entropy_rate_dg::EulerParams;

use common::{exact_riemann, Primitive};

const AIR: EulerParams = EulerParams { gamma: 1.4 };

#[test]
fn shock_tube_stays_within_the_data_range_away_from_the_shock() {
    let config = ProblemConfig::new(ProblemId::Shocktube1, 100, 3);
    let out = run_problem(&config, &RunOptions::default()).unwrap();
    let scheme = build_scheme(&config).unwrap();
    let left: Primitive = config.initial_primitive(0.0);
    let right: Primitive = config.initial_primitive(10.0);
    let star = exact_riemann(left, right, 1.4);
    let x_shock = 5.0 + star.right_shock.unwrap() * config.t_end;

    let dx = 0.1;
    let means = cell_means(&out.final_state, &scheme.element);
    let mut near_shock_min = f64::INFINITY;
    for k in 0..100 {
        let centre = (k as f64 + 0.5) * dx;
        let cell = out.final_state.cell(k);
        if (centre - x_shock).abs() < 2.0 * dx {
            near_shock_min = near_shock_min.min(means[k].rho);
            continue;
        }
        for u in cell {
            assert!((0.12..=1.01).contains(&u.rho), "cell {k}: rho = {}", u.rho);
            assert!(AIR.pressure(u).unwrap() > 0.0);
        }
    }
    // even the shock cells keep admissible means
    assert!(near_shock_min > 0.1);
    assert_eq!(out.summary.final_time, 1.8);
}

#[test]
fn constant_smooth_wave_is_reproduced_to_round_off() {
    let mut config = ProblemConfig::new(ProblemId::Smoothwave, 12, 3);
    config.amplitude = 0.0;
    config.t_end = 0.5;
    let out = run_problem(&config, &RunOptions::default()).unwrap();
    let scheme = build_scheme(&config).unwrap();
    let (l1, l2) = density_errors(&out.final_state, &scheme.element, &config);
    assert!(l1 < 1e-12 && l2 < 1e-12, "{l1} {l2}");
    assert!(out.summary.max_violation < 1e-12);
}

fn shu_osher_density_means(cells: usize) -> Vec<f64> {
    let config = ProblemConfig::new(ProblemId::Shuosher, cells, 3);
    let opts = RunOptions {
        snapshots: false,
        ..RunOptions::default()
    };
    let out = run_problem(&config, &opts).unwrap();
    out.density_means(&build_scheme(&config).unwrap())
}

#[test]
fn shu_osher_improves_monotonically_under_refinement() {
    let [m50, m200, m400] = std::thread::scope(|s| {
        [50, 200, 400].map(|n| s.spawn(move || shu_osher_density_means(n))).map(|h| h.join().unwrap())
    });
    let (d50, d200) = (l1_to_reference(&m50, &m400, 0.0, 10.0), l1_to_reference(&m200, &m400, 0.0, 10.0));
    assert!(d200 < 0.5 * d50, "{d50} {d200}");
}

/// The same comparison against a 30000-cell Lax-Friedrichs solution. First-order
/// LF still flattens the post-shock entropy waves (at 12000 cells its peak density
/// is 4.28, against 4.66 for DG at N = 400), so the distance grows as the DG runs
/// resolve them: 0.16 at N = 50 and 0.33 at N = 200.
#[test]
#[ignore = "the first-order reference is not converged in the entropy-wave region; takes about two minutes"]
fn shu_osher_against_a_fine_lax_friedrichs_reference() {
    let config = ProblemConfig::new(ProblemId::Shuosher, 50, 3);
    let reference = reference_run(&config, 30000).unwrap();
    let reference: Vec<f64> = reference.final_state.averages.iter().map(|u| u.rho).collect();
    let d50 = l1_to_reference(&shu_osher_density_means(50), &reference, 0.0, 10.0);
    let d200 = l1_to_reference(&shu_osher_density_means(200), &reference, 0.0, 10.0);
    assert!(d200 < d50, "{d50} {d200}");
}

#[test]
fn snapshots_have_one_row_per_node_and_land_on_sample_times() {
    let mut config = ProblemConfig::new(ProblemId::Shocktube1, 20, 3);
    config.t_end = 0.3;
    config.sample_dt = Some(0.1);
    let out = run_problem(&config, &RunOptions::default()).unwrap();
    let times: Vec<f64> = out.snapshots.iter().map(|s| s.t).collect();
    assert_eq!(times.len(), 4);
    assert_eq!(times[0], 0.0);
    assert_eq!(times[3], 0.3);
    assert!(out.snapshots.iter().all(|s| s.rows.len() == 20 * 4));
    let xs: Vec<f64> = out.snapshots[0].rows.iter().map(|r| r.x).collect();
    assert!(xs.windows(2).all(|w| w[0] <= w[1]));
    assert_eq!(out.entropy.first().unwrap().t, 0.0);
    assert_eq!(out.entropy.last().unwrap().t, 0.3);
}

#[test]
fn runs_are_reproducible() {
    let mut config = ProblemConfig::new(ProblemId::Shocktube2, 30, 3);
    config.t_end = 0.2;
    let opts = RunOptions {
        diagnostics_every: 5,
        ..RunOptions::default()
    };
    let a = run_problem(&config, &opts).unwrap();
    let b = run_problem(&config, &opts).unwrap();
    assert_eq!(a.final_state, b.final_state);
    assert_eq!(a.entropy, b.entropy);
    assert_eq!(a.diagnostics, b.diagnostics);
}

#[test]
fn tables_round_trip_in_both_formats() {
    let dir = tempfile::tempdir().unwrap();
    let snapshot = vec![
        SnapshotRow { x: 0.0, rho: 1.0, rho_v: 0.0, energy: 2.5 },
        SnapshotRow { x: 0.1, rho: 0.125, rho_v: 0.01, energy: 0.25 },
    ];
    let entropy = vec![EntropySample { t: 0.0, e_total: -1.5, violation_pos: 0.0, residual_min: -0.25 }];
    let convergence = vec![
        ConvergenceRow { cells: 10, l1: 1e-2, l2: 2e-2, order_l1: None, order_l2: None },
        ConvergenceRow { cells: 20, l1: 1.25e-3, l2: 2.5e-3, order_l1: Some(3.0), order_l2: Some(3.0) },
    ];
    for format in [Format::Csv, Format::Json] {
        let path = |stem: &str| dir.path().join(format!("{stem}.{}", format.extension()));
        write_table(&path("snapshot"), &snapshot, format).unwrap();
        write_table(&path("entropy"), &entropy, format).unwrap();
        write_table(&path("convergence"), &convergence, format).unwrap();
        assert_eq!(read_table::<SnapshotRow>(&path("snapshot"), format).unwrap(), snapshot);
        assert_eq!(read_table::<EntropySample>(&path("entropy"), format).unwrap(), entropy);
        assert_eq!(read_table::<ConvergenceRow>(&path("convergence"), format).unwrap(), convergence);
    }
    let header = std::fs::read_to_string(dir.path().join("convergence.csv")).unwrap();
    assert_eq!(header.lines().next().unwrap(), "N,L1,L2,order_L1,order_L2");
}

#[test]
fn constant_state_matches_its_reference_exactly() {
    let mut config = ProblemConfig::new(ProblemId::Smoothwave, 10, 3);
    config.amplitude = 0.0;
    config.t_end = 0.3;
    config.sample_dt = Some(0.1);
    let dg = run_problem(&config, &RunOptions::default()).unwrap();
    let reference = reference_run(&config, 100).unwrap();
    let cmp = compare_histories(&dg, &reference);
    assert_eq!(cmp.rows.len(), 4);
    assert!(cmp.passed());
    assert!(cmp.max_excess.abs() < 1e-10, "{}", cmp.max_excess);
}

#[test]
fn eighth_order_stepper_also_runs() {
    let mut config = ProblemConfig::new(ProblemId::Smoothwave, 10, 5);
    config.scheme = Scheme::Rk8;
    config.t_end = 0.5;
    let out = run_problem(&config, &RunOptions::default()).unwrap();
    let scheme = build_scheme(&config).unwrap();
    let (l1, _) = density_errors(&out.final_state, &scheme.element, &config);
    assert!(l1 < 1e-2, "{l1}");
}

#[test]
fn invalid_configurations_are_rejected_before_running() {
    let mut config = ProblemConfig::new(ProblemId::Shocktube1, 1, 3);
    assert!(run_problem(&config, &RunOptions::default()).unwrap_err().is_setup());
    config.cells = 10;
    config.degree = 0;
    assert!(run_problem(&config, &RunOptions::default()).unwrap_err().is_setup());
}

#[test]
fn time_step_search_brackets_the_stability_limit() {
    let mut config = ProblemConfig::new(ProblemId::Shocktube1, 25, 3);
    config.t_end = 0.5;
    let settings = SearchSettings {
        iterations: 6,
        ..SearchSettings::default()
    };
    let result = max_timestep_search(&config, &settings).unwrap();
    let m = result.multiplier.unwrap();
    assert!(m >= 1.0 && !result.upper_stable);
    assert_eq!(result.doubled_unstable, Some(true));
    // the largest stable trial is the answer and every larger trial failed
    for t in &result.trials {
        assert_eq!(t.stable, t.multiplier <= m, "{t:?}");
    }
    assert!(result.dt.unwrap() > 0.0);
}

#[test]
fn coarser_grid_does_not_lose_stable_time_step() {
    let settings = SearchSettings {
        iterations: 6,
        ..SearchSettings::default()
    };
    // geometric bisection over [1, 64]: six steps resolve a factor 64^(1/64)
    let resolution = 64f64.powf(1.0 / 64.0);
    let search = |cells: usize| {
        let config = ProblemConfig::new(ProblemId::Shocktube1, cells, 3);
        max_timestep_search(&config, &settings).unwrap().multiplier.unwrap()
    };
    let (m50, m100) = std::thread::scope(|s| {
        let a = s.spawn(|| search(50));
        let b = s.spawn(|| search(100));
        (a.join().unwrap(), b.join().unwrap())
    });
    assert!(m50 >= m100 / resolution, "N = 50: {m50}, N = 100: {m100}");
}
