//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use firesafe_core::aekf::{
    adapt_covariances, kalman_gain, multi_step_predict, observation_jacobian, observe, posterior_covariance,
    propagate_covariance, transition_jacobian, transition_with_control,
};
use firesafe_core::bounds::{self, horizon_steps};
use firesafe_core::coordination::{self, FireTrack, RouteStop};
use firesafe_core::routing::{self, Tour};
use firesafe_core::sim::{
    compare_controllers, summarize_compare, summarize_safety, sweep_safety, Layout, Simulation,
};
use firesafe_core::{
    Aekf, BoundInputs, Controller, EllipseParams, FilterConfig, FireCase, FleetParams, FullState, Point,
    ScenarioConfig, TrackEstimate, UavMode,
};
use itertools::Itertools;
use nalgebra::{SMatrix, SVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use statrs::distribution::{ContinuousCDF, StudentsT};

type Outcome = Result<String, String>;
type Criterion = (u32, &'static str, fn() -> Outcome);

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    check(elapsed < limit, || format!("took {elapsed:.1?}, limit {limit:?}"))
}

// 1 ------------------------------------------------------------------------

fn random_state(rng: &mut ChaCha8Rng) -> FullState {
    FullState {
        qx: rng.random_range(-500.0..500.0),
        qy: rng.random_range(-500.0..500.0),
        px: rng.random_range(-500.0..500.0),
        py: rng.random_range(-500.0..500.0),
        pz: rng.random_range(10.0..200.0),
        spread_rate: rng.random_range(0.05..2.0),
        wind_speed: rng.random_range(0.5..15.0),
        azimuth: rng.random_range(0.2..std::f64::consts::TAU - 0.2),
    }
}

fn perturbed(s: &FullState, i: usize, h: f64) -> FullState {
    let mut v = s.to_vector();
    v[i] += h;
    FullState::from_vector(&v)
}

fn jacobian_fidelity() -> Outcome {
    let start = Instant::now();
    let params = EllipseParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let h = 1e-6;
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let s = random_state(&mut rng);
        let control = s.uav_pose();
        let f = transition_jacobian(&s, 1.0, &params).map_err(|e| e.to_string())?;
        let hj = observation_jacobian(&s).map_err(|e| e.to_string())?;
        for j in 0..8 {
            let plus = perturbed(&s, j, h);
            let minus = perturbed(&s, j, -h);
            let fp = transition_with_control(&plus, &control, 1.0, &params)
                .unwrap()
                .to_vector();
            let fm = transition_with_control(&minus, &control, 1.0, &params)
                .unwrap()
                .to_vector();
            let zp = observe(&plus).unwrap().to_vector();
            let zm = observe(&minus).unwrap().to_vector();
            for i in 0..8 {
                let n = (fp[i] - fm[i]) / (2.0 * h);
                let err = (f[(i, j)] - n).abs() / n.abs().max(1.0);
                worst = worst.max(err);
                check(err <= 1e-4, || {
                    format!("F[{i},{j}] analytic {} vs numeric {n} at {s:?}", f[(i, j)])
                })?;
            }
            for i in 0..5 {
                let n = (zp[i] - zm[i]) / (2.0 * h);
                let err = (hj[(i, j)] - n).abs() / n.abs().max(1.0);
                worst = worst.max(err);
                check(err <= 1e-4, || {
                    format!("H[{i},{j}] analytic {} vs numeric {n} at {s:?}", hj[(i, j)])
                })?;
            }
        }
    }
    within(start.elapsed(), Duration::from_secs(5))?;
    Ok(format!(
        "100 states, worst relative error {worst:.1e}, {:.2?}",
        start.elapsed()
    ))
}

// 2 ------------------------------------------------------------------------

fn bound_consistency() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut worst_c2 = 0.0f64;
    // the gap is 4ζ(n-1)/v to first order, so keep (n-1)/v below 25
    for _ in 0..200 {
        let fleet = FleetParams {
            speed: rng.random_range(2.0..30.0),
            altitude: rng.random_range(10.0..200.0),
            half_angle: rng.random_range(0.1..1.2),
        };
        let inputs = BoundInputs {
            mst_cost: rng.random_range(1.0..5000.0),
            n_fires: rng.random_range(1..40),
            zeta_alpha: 1e-8,
            fov_width: bounds::fov_width(&fleet),
            alpha_conf: 0.05,
        };
        let c1 = bounds::t_ub_case1(&inputs, &fleet).t_ub;
        let c2 = bounds::t_ub_case2(&inputs, &fleet).t_ub;
        let rel = (c2 - c1).abs() / c1;
        worst_c2 = worst_c2.max(rel);
        check(rel <= 1e-6, || {
            format!("case 2 at tiny speed {c2} vs case 1 {c1}")
        })?;
    }

    let mut accepted = 0;
    let mut worst_residual = 0.0f64;
    let mut tries = 0;
    while accepted < 1000 {
        tries += 1;
        check(tries < 100_000, || "could not draw feasible inputs".into())?;
        let v = rng.random_range(1.0..30.0);
        let fleet = FleetParams {
            speed: v,
            altitude: rng.random_range(10.0..200.0),
            half_angle: rng.random_range(0.1..1.2),
        };
        let n = rng.random_range(1..12usize);
        let g = bounds::fov_width(&fleet);
        let zeta = rng.random_range(0.0..v / (4.0 * n as f64));
        let mst = rng.random_range(0.0..3000.0);
        let inputs = BoundInputs {
            mst_cost: mst,
            n_fires: n,
            zeta_alpha: zeta,
            fov_width: g,
            alpha_conf: 0.05,
        };
        // independent coefficients
        let denom = v / 2.0 - 2.0 * zeta * (n as f64 - 1.0);
        let delta = mst / denom;
        let a = 2.0 * n as f64 * zeta / v;
        let b = 2.0 * zeta / g;
        let disc = (1.0 - a).powi(2) - 4.0 * a * b * delta;
        let c3 = bounds::t_ub_case3(&inputs, &fleet);
        if !(denom > 0.0 && a < 1.0 && disc >= 0.0) {
            check(!c3.feasible, || {
                format!("case 3 reported feasible without a real root: {inputs:?}")
            })?;
            continue;
        }
        check(c3.feasible, || {
            format!("case 3 infeasible with a real root: {inputs:?}")
        })?;
        let c1 = bounds::t_ub_case1(&inputs, &fleet).t_ub;
        let c2 = bounds::t_ub_case2(&inputs, &fleet).t_ub;
        let t = c3.t_ub;
        let residual = (delta + a * t * (b * t + 1.0) - t).abs();
        worst_residual = worst_residual.max(residual / t.max(1.0));
        check(residual <= 1e-9 * t.max(1.0), || {
            format!("fixed-point residual {residual} at T = {t}")
        })?;
        check(c1 <= c2 * (1.0 + 1e-12) && c2 <= t * (1.0 + 1e-12), || {
            format!("order {c1} {c2} {t}")
        })?;
        accepted += 1;
    }
    Ok(format!(
        "case 2→1 worst {worst_c2:.1e}; 1000 feasible inputs, worst scaled residual {worst_residual:.1e}"
    ))
}

// 3 ------------------------------------------------------------------------

/// One case-2 trial: `None` when the feasibility test fails, otherwise
/// whether any fire's realized residual trace exceeded its pre-tour value.
fn urr_trial(seed: u64) -> Option<bool> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let count = rng.random_range(3..=6);
    let positions: Vec<[f64; 2]> = (0..count)
        .map(|_| {
            let r = 60.0 * rng.random::<f64>().sqrt();
            let a = rng.random_range(0.0..std::f64::consts::TAU);
            [500.0 + r * a.cos(), 500.0 + r * a.sin()]
        })
        .collect();
    let mut cfg = ScenarioConfig {
        case: FireCase::Moving,
        seed,
        duration: 10_000,
        ..ScenarioConfig::default()
    };
    cfg.fire.layout = Layout::Explicit { positions };
    cfg.fleet.count = 1;
    cfg.teams.count = 0;

    let mut sim = Simulation::new(&cfg).unwrap();
    for _ in 0..40 {
        sim.step().unwrap();
    }
    let t0 = sim.step_count();
    let pre: Vec<FireTrack> = sim.predicted_tracks().to_vec();
    let refs: Vec<&FireTrack> = pre.iter().collect();
    let report =
        coordination::urr_feasibility_test(&refs, &cfg.fleet.params(), sim.planning_context()).unwrap();
    if !report.pass {
        return None;
    }
    let route: Vec<RouteStop> = report
        .tour
        .order
        .iter()
        .map(|&w| RouteStop::from(report.waypoints[w].clone()))
        .collect();
    let agent = &mut sim.agents_mut()[0];
    agent.mode = UavMode::Safety;
    agent.assign_route(route);

    let horizon = horizon_steps(report.bound.t_ub, cfg.dt);
    let mut revisit: BTreeMap<u64, u64> = BTreeMap::new();
    for _ in 0..2 * horizon + 50 {
        sim.step().unwrap();
        let k = sim.step_count() - t0;
        for t in sim.tracks() {
            if t.estimate.last_update > t0 {
                revisit.entry(t.id).or_insert(k);
            }
        }
        if revisit.len() == pre.len() {
            break;
        }
    }
    let exceeded = pre.iter().any(|t| match revisit.get(&t.id) {
        None => true,
        Some(&k) => {
            let before = t.estimate.current_residual_cov().unwrap().trace();
            let (_, after) = multi_step_predict(&t.estimate, k).unwrap();
            after.trace() > before * (1.0 + 1e-12)
        }
    });
    Some(exceeded)
}

fn urr_guarantee() -> Outcome {
    let start = Instant::now();
    let mut passing = 0usize;
    let mut exceeded = 0usize;
    let mut seed = 0u64;
    while passing < 500 {
        check(seed < 20_000, || {
            format!("only {passing} feasible runs in {seed} seeds")
        })?;
        if let Some(e) = urr_trial(seed) {
            passing += 1;
            exceeded += usize::from(e);
        }
        seed += 1;
    }
    let rate = exceeded as f64 / passing as f64;
    check(rate <= 0.07, || {
        format!("{exceeded}/{passing} runs exceeded ({rate:.3})")
    })?;
    within(start.elapsed(), Duration::from_secs(120))?;
    Ok(format!(
        "{exceeded}/{passing} feasible runs exceeded ({:.1}%), {seed} seeds, {:.1?}",
        100.0 * rate,
        start.elapsed()
    ))
}

// 4 ------------------------------------------------------------------------

fn optimal_tour(nodes: &[Point]) -> f64 {
    let n = nodes.len();
    if n < 3 {
        return routing::cycle_length(&(0..n).collect::<Vec<_>>(), nodes);
    }
    (1..n)
        .permutations(n - 1)
        .map(|rest| {
            let order: Vec<usize> = std::iter::once(0).chain(rest).collect();
            routing::cycle_length(&order, nodes)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Minimum spanning tree weight over all labelled trees (Prüfer codes).
fn optimal_spanning_tree(nodes: &[Point]) -> f64 {
    let n = nodes.len();
    if n < 2 {
        return 0.0;
    }
    if n == 2 {
        return (nodes[0] - nodes[1]).norm();
    }
    std::iter::repeat_n(0..n, n - 2)
        .multi_cartesian_product()
        .map(|code| {
            let mut degree = vec![1usize; n];
            for &c in &code {
                degree[c] += 1;
            }
            let mut total = 0.0;
            for &c in &code {
                let leaf = (0..n).find(|&k| degree[k] == 1).unwrap();
                total += (nodes[leaf] - nodes[c]).norm();
                degree[leaf] -= 1;
                degree[c] -= 1;
            }
            let rest: Vec<usize> = (0..n).filter(|&k| degree[k] == 1).collect();
            total + (nodes[rest[0]] - nodes[rest[1]]).norm()
        })
        .fold(f64::INFINITY, f64::min)
}

fn tsp_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let mut worst_ratio = 0.0f64;
    for inst in 0..200 {
        let n = rng.random_range(2..=9usize);
        let nodes: Vec<Point> = (0..n)
            .map(|_| Point::new(rng.random_range(0.0..1000.0), rng.random_range(0.0..1000.0)))
            .collect();
        let mst = routing::build_mst(&nodes);
        let doubled = routing::tour_from_mst(&nodes, &mst);
        check(doubled.length <= 2.0 * mst.length + 1e-9, || {
            format!("instance {inst}: tour {} > 2·MST {}", doubled.length, mst.length)
        })?;
        let mut shuffled: Vec<usize> = (0..n).collect();
        shuffled.shuffle(&mut rng);
        let random = Tour {
            length: routing::cycle_length(&shuffled, &nodes),
            order: shuffled,
        };
        for start in [&doubled, &random] {
            let improved = routing::k_opt_improve(start, &nodes, 2, routing::DEFAULT_MAX_PASSES).unwrap();
            check(improved.length <= start.length + 1e-9, || {
                format!(
                    "instance {inst}: 2-opt {} > start {}",
                    improved.length, start.length
                )
            })?;
            let best = optimal_tour(&nodes);
            if best > 0.0 {
                worst_ratio = worst_ratio.max(improved.length / best);
            }
            check(improved.length <= 2.0 * best + 1e-9, || {
                format!("instance {inst}: 2-opt {} vs optimum {best}", improved.length)
            })?;
        }
        if n <= 8 {
            let best = optimal_spanning_tree(&nodes);
            check((mst.length - best).abs() <= 1e-9 * best.max(1.0), || {
                format!("instance {inst}: MST {} vs exhaustive {best}", mst.length)
            })?;
        }
    }
    Ok(format!("200 instances, worst 2-opt/optimum {worst_ratio:.3}"))
}

// 5-7 ----------------------------------------------------------------------

fn safety_sweep_ordinal() -> Outcome {
    let start = Instant::now();
    let rows = sweep_safety(&ScenarioConfig::default(), 8, 10).map_err(|e| e.to_string())?;
    let summary = summarize_safety(&rows);
    let mean = |case: u8, teams: usize| {
        summary
            .iter()
            .find(|s| s.0 == case && s.1 == teams)
            .map(|s| s.2.mean)
            .unwrap()
    };
    let mut table = Vec::new();
    for case in 1..=3u8 {
        let means: Vec<f64> = (1..=8).map(|t| mean(case, t)).collect();
        check(means.windows(2).all(|w| w[0] <= w[1]), || {
            format!("case {case} not monotone: {means:?}")
        })?;
        table.push(format!(
            "c{case} {}",
            means.iter().map(|m| format!("{m:.1}")).join(" ")
        ));
    }
    for teams in 1..=8 {
        let per_case: Vec<f64> = (1..=3).map(|c| mean(c, teams)).collect();
        check(per_case.windows(2).all(|w| w[0] <= w[1]), || {
            format!("{teams} teams not monotone over cases: {per_case:?}")
        })?;
    }
    within(start.elapsed(), Duration::from_secs(600))?;
    Ok(format!("{}; {:.1?}", table.join("; "), start.elapsed()))
}

fn fleet_size_ordinal() -> Outcome {
    let sizes = [1, 2, 4, 8];
    let rows = compare_controllers(&ScenarioConfig::default(), &sizes, 10, &[Controller::Proposed])
        .map_err(|e| e.to_string())?;
    let summary = summarize_compare(&rows);
    let mut table = Vec::new();
    for case in 1..=3u8 {
        let means: Vec<f64> = sizes
            .iter()
            .map(|&n| summary.iter().find(|s| s.0 == case && s.2 == n).unwrap().3.mean)
            .collect();
        check(means.windows(2).all(|w| w[1] < w[0]), || {
            format!("case {case} not decreasing: {means:?}")
        })?;
        table.push(format!(
            "c{case} {}",
            means.iter().map(|m| format!("{m:.0}")).join(" ")
        ));
    }
    Ok(table.join("; "))
}

fn controller_comparison() -> Outcome {
    let drones = 4;
    let rows = compare_controllers(&ScenarioConfig::default(), &[drones], 10, &Controller::ALL)
        .map_err(|e| e.to_string())?;
    let mut parts = Vec::new();
    for case in 1..=3u8 {
        let value = |c: Controller, trial: usize| {
            rows.iter()
                .find(|r| r.case == case && r.controller == c && r.trial == trial)
                .unwrap()
                .cum_uncertainty as f64
        };
        let diffs: Vec<f64> = (0..10)
            .map(|k| value(Controller::Gradient, k) - value(Controller::Proposed, k))
            .collect();
        let n = diffs.len() as f64;
        let mean = diffs.iter().sum::<f64>() / n;
        let sd = (diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        let p = if sd == 0.0 {
            if mean > 0.0 {
                0.0
            } else {
                1.0
            }
        } else {
            let t = mean / (sd / n.sqrt());
            1.0 - StudentsT::new(0.0, 1.0, n - 1.0).unwrap().cdf(t)
        };
        check(p < 0.05, || {
            format!("case {case}: mean gain {mean:.1}, p = {p:.3}")
        })?;
        parts.push(format!("c{case} gain {mean:.0} p={p:.1e}"));
    }
    Ok(format!("{drones} UAVs: {}", parts.join("; ")))
}

// 8 ------------------------------------------------------------------------

fn exact_tracking_error() -> f64 {
    let truth = FullState {
        qx: 130.0,
        qy: 85.0,
        px: 100.0,
        py: 100.0,
        pz: 60.0,
        spread_rate: 0.0,
        wind_speed: 5.0,
        azimuth: 0.8,
    };
    // numerically zero noise; adaptation off since there is nothing to estimate
    let config = FilterConfig {
        alpha_forget: 1.0,
        process_cov: [1e-9; 8],
        observation_cov: [1e-12; 5],
        ..FilterConfig::default()
    };
    let filter = Aekf::new(config, EllipseParams::default());
    let z = observe(&truth).unwrap();
    let mut track = TrackEstimate::new(
        FullState {
            qx: truth.qx + 6.0,
            qy: truth.qy - 4.0,
            ..truth
        },
        &filter.config,
    );
    for step in 1..=50 {
        let prior = filter.predict(&track, 1.0, Some(truth.uav_pose())).unwrap();
        track = filter.correct(&prior, &z, step).unwrap().0;
    }
    (track.mean.fire_position() - truth.fire_position()).norm()
}

fn linear_noise_trace(seed: u64, var: &[f64; 5]) -> f64 {
    let h = SMatrix::<f64, 5, 3>::from_row_slice(&[
        1.0, 0.0, 0.0, //
        0.0, 1.0, 0.0, //
        0.0, 0.0, 1.0, //
        1.0, 1.0, 0.0, //
        0.0, 1.0, -1.0,
    ]);
    let f = SMatrix::<f64, 3, 3>::identity();
    let x_true = SVector::<f64, 3>::new(3.0, -1.0, 0.5);
    let mut rng = firesafe_core::rng::substream(seed, &[]);
    let mut x = SVector::<f64, 3>::zeros();
    let mut p = SMatrix::<f64, 3, 3>::identity() * 100.0;
    let mut q = SMatrix::<f64, 3, 3>::identity() * 1e-2;
    let mut r = SMatrix::<f64, 5, 5>::from_diagonal(&SVector::from(*var)) * 10.0;
    for _ in 0..500 {
        let z = h * x_true
            + SVector::<f64, 5>::from_fn(|i, _| Normal::new(0.0, var[i].sqrt()).unwrap().sample(&mut rng));
        let prior = propagate_covariance(&f, &p, &q);
        let k = kalman_gain(&prior, &h, &(h * prior * h.transpose() + r)).unwrap();
        let innovation = z - h * x;
        x += k * innovation;
        p = posterior_covariance(&k, &h, &prior);
        let post_fit = z - h * x;
        (q, r) = adapt_covariances(&q, &r, 0.98, &innovation, &post_fit, &k, &h, &prior);
    }
    r.trace()
}

fn filter_sanity() -> Outcome {
    let err = exact_tracking_error();
    check(err < 1e-6, || {
        format!("position error {err:.3e} m after 50 steps")
    })?;
    let var = [0.04, 0.09, 0.01, 0.16, 0.25];
    let truth: f64 = var.iter().sum();
    let ratios: Vec<f64> = (0..50).map(|s| linear_noise_trace(s, &var) / truth).collect();
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().copied().fold(0.0, f64::max);
    check(lo >= 0.75 && hi <= 1.25, || {
        format!("R trace ratio range [{lo:.3}, {hi:.3}]")
    })?;
    Ok(format!(
        "position error {err:.1e} m; R trace ratio over 50 seeds in [{lo:.3}, {hi:.3}]"
    ))
}

// 9 ------------------------------------------------------------------------

fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect()
}

fn run_cli(args: &[&str], out: &Path) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_firesafe"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .map_err(|e| e.to_string())?;
    check(status.status.success(), || {
        format!("{args:?} failed: {}", String::from_utf8_lossy(&status.stderr))
    })
}

fn cli_determinism() -> Outcome {
    let config: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "configs", "quick.toml"]
        .iter()
        .collect();
    let config = config.to_str().unwrap().to_owned();
    let commands: Vec<Vec<&str>> = vec![
        vec!["simulate", "--config", &config, "--seed", "7", "--format", "csv"],
        vec!["simulate", "--config", &config, "--seed", "7", "--format", "json"],
        vec![
            "sweep-safety",
            "--config",
            &config,
            "--seed",
            "7",
            "--max-teams",
            "2",
            "--trials",
            "2",
        ],
        vec![
            "compare", "--config", &config, "--seed", "7", "--drones", "1,2", "--trials", "2",
        ],
    ];
    let mut compared = 0;
    for args in &commands {
        let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
        for d in &dirs {
            run_cli(args, d.path())?;
        }
        let (a, b) = (files(dirs[0].path()), files(dirs[1].path()));
        check(!a.is_empty(), || format!("{args:?} wrote nothing"))?;
        check(a.keys().eq(b.keys()), || {
            format!("{args:?} wrote different file sets")
        })?;
        for (name, bytes) in &a {
            check(bytes == &b[name], || {
                format!("{args:?}: {name} differs between runs")
            })?;
        }
        compared += a.len();
    }
    Ok(format!(
        "{} commands, {compared} files byte-identical",
        commands.len()
    ))
}

fn main() {
    let criteria: [Criterion; 9] = [
        (1, "Jacobian fidelity", jacobian_fidelity),
        (2, "bound self-consistency", bound_consistency),
        (3, "URR guarantee", urr_guarantee),
        (4, "TSP suite", tsp_suite),
        (5, "minimum drones ordinal", safety_sweep_ordinal),
        (6, "fleet size ordinal", fleet_size_ordinal),
        (7, "proposed vs gradient", controller_comparison),
        (8, "filter sanity", filter_sanity),
        (9, "CLI determinism", cli_determinism),
    ];
    let mut failed = 0;
    for (id, name, run) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("PASS criterion {id} ({name}): {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {id} ({name}): {why}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
