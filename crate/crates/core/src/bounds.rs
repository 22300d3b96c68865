//! Probabilistic traverse-time upper bounds (`T_UB`) for the three fire
//! cases and the uncertainty residual ratio (URR) safety test.
//!
//! Infeasibility is reported as a value (`feasible == false`, `t_ub == ∞`)
//! so callers can branch to recruitment instead of unwinding.

use nalgebra::{DMatrix, SMatrix, Vector2};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::aekf::{self, idx, TrackEstimate};
use crate::error::{Error, Result};
use crate::fire::{self, EllipseParams, FireCase};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FleetParams {
    /// Cruise speed `v` (m/s).
    pub speed: f64,
    /// Flight altitude `pz` (m).
    pub altitude: f64,
    /// Camera half-angle (rad).
    pub half_angle: f64,
}

impl FleetParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.speed > 0.0 && self.speed.is_finite()) {
            return Err(Error::config("fleet.speed", "must be positive"));
        }
        if !(self.altitude > 0.0 && self.altitude.is_finite()) {
            return Err(Error::config("fleet.altitude", "must be positive"));
        }
        if !(self.half_angle > 0.0 && self.half_angle < std::f64::consts::FRAC_PI_2) {
            return Err(Error::config("fleet.half_angle", "must lie in (0, π/2)"));
        }
        Ok(())
    }
}

/// Ground footprint side length `g = 2 pz tan(half_angle)`.
pub fn fov_width(fleet: &FleetParams) -> f64 {
    2.0 * fleet.altitude * fleet.half_angle.tan()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    /// Total MST edge length over the tour nodes (m).
    pub mst_cost: f64,
    /// Number of tour nodes `|Q|`.
    pub n_fires: usize,
    /// Worst-case fire speed at the confidence level (m/s).
    pub zeta_alpha: f64,
    /// FOV width `g` (m).
    pub fov_width: f64,
    pub alpha_conf: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundResult {
    /// Upper bound in seconds; `+∞` when infeasible.
    pub t_ub: f64,
    pub case: FireCase,
    /// Quadratic coefficient `a·b` (case 3).
    pub gamma: f64,
    /// Linear coefficient `1 - a` (case 3).
    pub beta: f64,
    /// Constant term: the case-2 bound the case-3 quadratic is built on.
    pub delta: f64,
    pub feasible: bool,
}

impl BoundResult {
    fn feasible(case: FireCase, t_ub: f64) -> Self {
        BoundResult {
            t_ub,
            case,
            gamma: 0.0,
            beta: 0.0,
            delta: t_ub,
            feasible: true,
        }
    }

    fn infeasible(case: FireCase) -> Self {
        BoundResult {
            t_ub: f64::INFINITY,
            case,
            gamma: 0.0,
            beta: 0.0,
            delta: f64::INFINITY,
            feasible: false,
        }
    }
}

/// Stationary fire: `2 MST / v`.
pub fn t_ub_case1(inputs: &BoundInputs, fleet: &FleetParams) -> BoundResult {
    BoundResult::feasible(FireCase::Stationary, 2.0 * inputs.mst_cost / fleet.speed)
}

/// Moving fire: `MST / (v/2 - 2ζ(|Q| - 1))`, infeasible when the
/// denominator is not positive.
pub fn t_ub_case2(inputs: &BoundInputs, fleet: &FleetParams) -> BoundResult {
    let edges = inputs.n_fires.saturating_sub(1) as f64;
    let denom = fleet.speed / 2.0 - 2.0 * inputs.zeta_alpha * edges;
    if denom <= 0.0 {
        return BoundResult::infeasible(FireCase::Moving);
    }
    BoundResult::feasible(FireCase::Moving, inputs.mst_cost / denom)
}

/// Moving-spreading fire: smallest positive root of `T = δ + aT(bT + 1)`
/// with `a = 2|Q|ζ/v`, `b = 2ζ/g` and `δ` the case-2 bound.
///
/// Rearranged as `ab T² - (1 - a) T + δ = 0`; the root is evaluated as
/// `2δ / ((1 - a) + sqrt((1 - a)² - 4abδ))`, which stays finite as
/// `ab -> 0` and reduces to `δ` when `ζ = 0`.
pub fn t_ub_case3(inputs: &BoundInputs, fleet: &FleetParams) -> BoundResult {
    let c2 = t_ub_case2(inputs, fleet);
    if !c2.feasible {
        return BoundResult::infeasible(FireCase::Spreading);
    }
    let delta = c2.t_ub;
    let zeta = inputs.zeta_alpha;
    let a = 2.0 * inputs.n_fires as f64 * zeta / fleet.speed;
    let b = if zeta == 0.0 {
        0.0
    } else if inputs.fov_width > 0.0 {
        2.0 * zeta / inputs.fov_width
    } else {
        return BoundResult::infeasible(FireCase::Spreading);
    };
    let gamma = a * b;
    let beta = 1.0 - a;
    let disc = beta * beta - 4.0 * gamma * delta;
    if beta <= 0.0 || disc < 0.0 {
        return BoundResult {
            gamma,
            beta,
            delta,
            ..BoundResult::infeasible(FireCase::Spreading)
        };
    }
    let t_ub = if delta == 0.0 {
        0.0
    } else {
        2.0 * delta / (beta + disc.sqrt())
    };
    BoundResult {
        t_ub,
        case: FireCase::Spreading,
        gamma,
        beta,
        delta,
        feasible: true,
    }
}

/// Bound for the given scenario case.
pub fn traverse_bound(case: FireCase, inputs: &BoundInputs, fleet: &FleetParams) -> BoundResult {
    match case {
        FireCase::Stationary => t_ub_case1(inputs, fleet),
        FireCase::Moving => t_ub_case2(inputs, fleet),
        FireCase::Spreading => t_ub_case3(inputs, fleet),
    }
}

/// Joint confidence `(1-α)^n` that every per-fire speed bound holds, and
/// its complement.
pub fn bound_confidence(n_fires: usize, alpha_conf: f64) -> (f64, f64) {
    let joint = (1.0 - alpha_conf).powi(n_fires as i32);
    (joint, 1.0 - joint)
}

/// Upper standard-normal quantile `z_{1-α}`.
pub fn upper_quantile(alpha_conf: f64) -> f64 {
    Normal::standard().inverse_cdf(1.0 - alpha_conf)
}

/// Per-axis speed bounds `|mean q̇| + z σ` for one track, with `σ` from the
/// weather covariance block projected through the velocity Jacobian.
pub fn velocity_bound(track: &TrackEstimate, z: f64, params: &EllipseParams) -> Result<Vector2<f64>> {
    let mean = fire::front_velocity(&track.mean.wind_fuel(), params)?;
    let f = aekf::transition_jacobian(&track.mean, 1.0, params)?;
    let jac = f.fixed_view::<2, 3>(idx::QX, idx::R).into_owned();
    let weather_cov = track.cov.fixed_view::<3, 3>(idx::R, idx::R).into_owned();
    let var = jac * weather_cov * jac.transpose();
    Ok(Vector2::new(
        mean.x.abs() + z * var[(0, 0)].max(0.0).sqrt(),
        mean.y.abs() + z * var[(1, 1)].max(0.0).sqrt(),
    ))
}

/// `ζ^α` from per-fire axis bounds, maximising each axis independently
/// over fires.
pub fn worst_case_speed_from_bounds(bounds: &[Vector2<f64>]) -> f64 {
    let bx = bounds.iter().map(|b| b.x).fold(0.0, f64::max);
    let by = bounds.iter().map(|b| b.y).fold(0.0, f64::max);
    bx.hypot(by)
}

/// Worst-case fire speed `ζ^α` over a set of tracks.
pub fn worst_case_speed(tracks: &[&TrackEstimate], alpha_conf: f64, params: &EllipseParams) -> Result<f64> {
    let z = upper_quantile(alpha_conf);
    let bounds = tracks
        .iter()
        .map(|t| velocity_bound(t, z, params))
        .collect::<Result<Vec<_>>>()?;
    Ok(worst_case_speed_from_bounds(&bounds))
}

/// How residual covariances are reduced to a scalar for the ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UrrMode {
    #[default]
    Trace,
    /// Largest-eigenvalue ratio; stricter than the trace.
    MaxEigenvalue,
}

/// Ratio of a predicted to a current residual covariance.
pub fn residual_ratio<const M: usize>(
    predicted: &SMatrix<f64, M, M>,
    current: &SMatrix<f64, M, M>,
    mode: UrrMode,
) -> f64 {
    match mode {
        UrrMode::Trace => predicted.trace() / current.trace(),
        UrrMode::MaxEigenvalue => {
            let top = |m: &SMatrix<f64, M, M>| {
                DMatrix::from_column_slice(M, M, m.as_slice())
                    .symmetric_eigenvalues()
                    .max()
            };
            top(predicted) / top(current)
        }
    }
}

/// Prediction horizon in whole steps, `max(1, ceil(t_ub / dt))`.
pub fn horizon_steps(t_ub: f64, dt: f64) -> u64 {
    ((t_ub / dt).ceil() as u64).max(1)
}

/// Uncertainty residual ratio `S_{t+r|t} / S_{t|t-1}` for a freshly
/// predicted track; `+∞` when `t_ub` is not finite.
pub fn urr(track: &TrackEstimate, t_ub: f64, dt: f64, mode: UrrMode) -> Result<f64> {
    if !t_ub.is_finite() {
        return Ok(f64::INFINITY);
    }
    let steps = horizon_steps(t_ub, dt);
    let (_, predicted) = aekf::multi_step_predict(track, steps)?;
    let current = track.current_residual_cov()?;
    Ok(residual_ratio(&predicted, &current, mode))
}
