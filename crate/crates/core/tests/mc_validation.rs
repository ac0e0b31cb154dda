mod common;

use common::{simpson, spectrum_2025_tv};
use fishery_core::control::{solve, ControlParams, ControlProblem, Lattice, SolveOptions};
use fishery_core::mc::{estimate_g, simulate_outcomes, simulate_paths, Policy, PolicyGrid, SimulationConfig};
use fishery_core::spectrum::Quantization;

fn race_config(n_paths: usize, seed: u64) -> SimulationConfig {
    let params = ControlParams {
        d: 0.05,
        t0: 161.0,
        ..ControlParams::benchmark(0.6, 0.0)
    };
    let problem = ControlProblem::new(spectrum_2025_tv(), params).unwrap();
    let w_points = problem.spectrum().quantize(181.0, 32, Quantization::BinMean).unwrap();
    SimulationConfig {
        problem,
        policy: Policy::Constant(0.1),
        w_points,
        x0: 40.0,
        n_paths,
        seed,
        dt_sim: 0.01,
    }
}

#[test]
fn single_harvest_race_matches_closed_form() {
    // One arrival empties the stock, so the harvest term is the expected
    // revenue of the first event when it is an arrival.
    let cfg = race_config(40_000, 11);
    let p = &cfg.problem;
    let u = 0.1;
    let c = p.catastrophe_rate(u);
    let horizon = 20.0;
    let exact = simpson(
        &|s: f64| u * (-(u + c) * s).exp() * p.mean_weight(161.0 + s) * cfg.x0,
        0.0,
        horizon,
        1e-10,
    );
    let r = simulate_paths(&cfg).unwrap();
    let err = (r.harvest_term.value - exact).abs();
    assert!(err <= 3.0 * r.harvest_term.se, "mc {} exact {} se {}", r.harvest_term.value, exact, r.harvest_term.se);

    let survive = (-(u + c) * horizon).exp();
    assert!((r.extinction_fraction - (1.0 - survive)).abs() < 0.01);
}

#[test]
fn linear_terminal_term_is_a_plain_average() {
    let cfg = race_config(5_000, 5);
    let r = simulate_paths(&cfg).unwrap();
    let outcomes = simulate_outcomes(&cfg, 161.0, cfg.x0).unwrap();
    let w_bar: f64 = cfg.w_points.iter().map(|w| w.prob * w.weight).sum();
    let mean_x: f64 = outcomes.iter().map(|o| o.x_terminal).sum::<f64>() / outcomes.len() as f64;
    let direct = 0.6 * w_bar * mean_x;
    assert!((r.terminal_term.value - direct).abs() <= 1e-10 * direct.max(1.0));
    assert!((r.terminal_population.mean - mean_x).abs() <= 1e-12);
}

#[test]
fn standard_error_shrinks_with_paths() {
    let small = simulate_paths(&race_config(10_000, 21)).unwrap();
    let large = simulate_paths(&race_config(40_000, 21)).unwrap();
    let ratio = small.j_estimate.se / large.j_estimate.se;
    assert!((ratio - 2.0).abs() <= 0.4, "ratio {ratio}");
}

#[test]
fn same_seed_same_answer() {
    let a = simulate_paths(&race_config(3_000, 99)).unwrap();
    let b = simulate_paths(&race_config(3_000, 99)).unwrap();
    assert_eq!(a, b);
    let c = simulate_paths(&race_config(3_000, 100)).unwrap();
    assert_ne!(a.j_estimate.value, c.j_estimate.value);
}

#[test]
fn equilibrium_policy_reproduces_small_value_function() {
    let params = ControlParams {
        x_bar: 800.0,
        t0: 161.0,
        ..ControlParams::benchmark(0.6, 1.5)
    };
    let problem = ControlProblem::new(spectrum_2025_tv(), params).unwrap();
    let lattice = Lattice::new(&problem, 0.01, 16, Quantization::BinMean).unwrap();
    let out = solve(&problem, &lattice, SolveOptions::default()).unwrap();
    let cfg = SimulationConfig {
        problem,
        policy: Policy::Grid(PolicyGrid::from_solver(&out)),
        w_points: lattice.w_points.clone(),
        x0: 400.0,
        n_paths: 20_000,
        seed: 3,
        dt_sim: 0.01,
    };
    let r = simulate_paths(&cfg).unwrap();
    let phi = out.phi_at(0, 10);
    // The certainty equivalent is nonlinear, so only (t0, x0) is comparable.
    assert!(
        (r.j_estimate.value - phi).abs() <= 3.0 * r.j_estimate.se + 1e-3 * phi,
        "mc {} pde {} se {}",
        r.j_estimate.value,
        phi,
        r.j_estimate.se
    );

    // g at an interior node.
    let i = 1000;
    let (j, q) = (15, 8);
    let g = estimate_g(&cfg, lattice.x(j), lattice.time(i), lattice.w_points[q].weight).unwrap();
    let field = out.g_at(i, j, q).unwrap();
    assert!((g.value - field).abs() <= 3.0 * g.se + 1e-3 * field, "mc {} pde {} se {}", g.value, field, g.se);
}
