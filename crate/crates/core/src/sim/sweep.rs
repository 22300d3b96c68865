//! Experiment sweeps. Cells run in parallel and are returned in a fixed
//! order, so tables are identical for any thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fire::FireCase;
use crate::rng::trial_seed;

use super::config::{Controller, ScenarioConfig};
use super::run::run_scenario;

/// Minimum drones for one (case, team count, trial) cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SafetyRow {
    pub case: u8,
    pub teams: usize,
    pub trial: usize,
    pub min_drones: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub case: u8,
    pub controller: Controller,
    pub drones: usize,
    pub trial: usize,
    pub cum_uncertainty: u64,
}

/// Mean and standard error of a group of samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation over `sqrt(n)`; 0 for a single sample.
    pub se: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Summary {
        let n = values.len();
        if n == 0 {
            return Summary {
                n,
                mean: f64::NAN,
                se: f64::NAN,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let se = if n > 1 {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        Summary { n, mean, se }
    }
}

/// Configuration of one sweep cell: the base with case, trial seed and
/// the case's default fire speed applied.
pub fn cell_config(base: &ScenarioConfig, case: FireCase, trial: usize) -> ScenarioConfig {
    let mut cfg = base.clone();
    cfg.case = case;
    cfg.fire.speed = None;
    cfg.seed = trial_seed(base.seed, trial as u64);
    cfg
}

/// For every case, team count `1..=max_teams` and trial, the smallest
/// UAV pool that keeps every team's plan feasible throughout the run.
///
/// Each (case, trial) is simulated once with `max_teams` teams in
/// assessment mode (an unlimited virtual pool per team, coverage fleet
/// unaffected). Teams are nested across counts, so the requirement for
/// `k` teams is the peak over evaluation steps of the first `k` teams'
/// recruitment summed.
pub fn sweep_safety(base: &ScenarioConfig, max_teams: usize, trials: usize) -> Result<Vec<SafetyRow>> {
    let cells: Vec<(FireCase, usize)> = FireCase::ALL
        .iter()
        .flat_map(|&c| (0..trials).map(move |t| (c, t)))
        .collect();
    let runs = cells
        .par_iter()
        .map(|&(case, trial)| {
            let mut cfg = cell_config(base, case, trial);
            cfg.controller = Controller::Proposed;
            cfg.teams.count = max_teams;
            cfg.safety.dispatch = false;
            run_scenario(&cfg)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::with_capacity(cells.len() * max_teams);
    for &case in &FireCase::ALL {
        for teams in 1..=max_teams {
            for trial in 0..trials {
                let k = cells
                    .iter()
                    .position(|&c| c == (case, trial))
                    .expect("cell exists");
                rows.push(SafetyRow {
                    case: case.number(),
                    teams,
                    trial,
                    min_drones: runs[k].peak_drones(teams),
                });
            }
        }
    }
    Ok(rows)
}

/// `(case, teams) -> summary of min_drones`, in table order.
pub fn summarize_safety(rows: &[SafetyRow]) -> Vec<(u8, usize, Summary)> {
    let mut keys: Vec<(u8, usize)> = rows.iter().map(|r| (r.case, r.teams)).collect();
    keys.dedup();
    keys.into_iter()
        .map(|(case, teams)| {
            let v: Vec<f64> = rows
                .iter()
                .filter(|r| r.case == case && r.teams == teams)
                .map(|r| f64::from(r.min_drones))
                .collect();
            (case, teams, Summary::of(&v))
        })
        .collect()
}

/// Cumulative uncertainty for every case, controller, fleet size and
/// trial. Both controllers see the same seed in a given trial.
pub fn compare_controllers(
    base: &ScenarioConfig,
    drones: &[usize],
    trials: usize,
    controllers: &[Controller],
) -> Result<Vec<CompareRow>> {
    let mut cells = Vec::new();
    for &case in &FireCase::ALL {
        for &controller in controllers {
            for &n in drones {
                for trial in 0..trials {
                    cells.push((case, controller, n, trial));
                }
            }
        }
    }
    cells
        .par_iter()
        .map(|&(case, controller, n, trial)| {
            let mut cfg = cell_config(base, case, trial);
            cfg.controller = controller;
            cfg.fleet.count = n;
            let metrics = run_scenario(&cfg)?;
            Ok(CompareRow {
                case: case.number(),
                controller,
                drones: n,
                trial,
                cum_uncertainty: metrics.final_cumulative(),
            })
        })
        .collect()
}

/// `(case, controller, drones) -> summary of cumulative uncertainty`.
pub fn summarize_compare(rows: &[CompareRow]) -> Vec<(u8, Controller, usize, Summary)> {
    let mut keys: Vec<(u8, Controller, usize)> =
        rows.iter().map(|r| (r.case, r.controller, r.drones)).collect();
    keys.dedup();
    keys.into_iter()
        .map(|(case, controller, drones)| {
            let v: Vec<f64> = rows
                .iter()
                .filter(|r| r.case == case && r.controller == controller && r.drones == drones)
                .map(|r| r.cum_uncertainty as f64)
                .collect();
            (case, controller, drones, Summary::of(&v))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_values() {
        let s = Summary::of(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        assert!((s.se - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
        assert_eq!(Summary::of(&[7.0]).se, 0.0);
    }
}
