//! Ground-truth firefront propagation under the simplified elliptical spread
//! model: each front moves with velocity `C(R, U) * (sin θ, cos θ)`.

use nalgebra::Vector2;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::rng::{substream, tag};
use crate::FireId;

/// Tolerance below 1 accepted for the length-to-breadth ratio before it is
/// treated as a domain error.
pub const LB_TOLERANCE: f64 = 1e-9;

/// Constants of the length-to-breadth model `LB(U) = a e^{bU} + c e^{-dU} + l`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EllipseParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub l: f64,
}

impl Default for EllipseParams {
    fn default() -> Self {
        EllipseParams {
            a: 0.936,
            b: 0.2566,
            c: 0.461,
            d: 0.1548,
            l: -0.397,
        }
    }
}

impl EllipseParams {
    pub fn length_to_breadth(&self, wind_speed: f64) -> f64 {
        self.a * (self.b * wind_speed).exp() + self.c * (-self.d * wind_speed).exp() + self.l
    }

    /// `dLB/dU`.
    pub fn length_to_breadth_slope(&self, wind_speed: f64) -> f64 {
        self.a * self.b * (self.b * wind_speed).exp() - self.c * self.d * (-self.d * wind_speed).exp()
    }

    /// Checks finiteness and `LB(U) >= 1` on a grid over `[0, max_wind]`.
    pub fn validate(&self, max_wind: f64) -> Result<()> {
        let values = [self.a, self.b, self.c, self.d, self.l];
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("ellipse constants must be finite".into()));
        }
        const GRID: usize = 200;
        for i in 0..=GRID {
            let u = max_wind * i as f64 / GRID as f64;
            let lb = self.length_to_breadth(u);
            if lb < 1.0 - LB_TOLERANCE {
                return Err(Error::Domain(format!(
                    "length-to-breadth ratio {lb} < 1 at wind speed {u}"
                )));
            }
        }
        Ok(())
    }
}

/// Returns `(LB, sqrt(GB))`, clamping `GB = LB² - 1` at zero.
fn lb_and_root_gb(wind_speed: f64, params: &EllipseParams) -> Result<(f64, f64)> {
    let lb = params.length_to_breadth(wind_speed);
    if !(lb >= 1.0 - LB_TOLERANCE) {
        return Err(Error::Domain(format!(
            "length-to-breadth ratio {lb} < 1 at wind speed {wind_speed}"
        )));
    }
    let gb = (lb * lb - 1.0).max(0.0);
    Ok((lb, gb.sqrt()))
}

/// The bracketed factor `1 - LB/(LB + sqrt(GB))`, in `[0, 1)`.
pub fn spread_factor(wind_speed: f64, params: &EllipseParams) -> Result<f64> {
    let (lb, root_gb) = lb_and_root_gb(wind_speed, params)?;
    Ok(1.0 - lb / (lb + root_gb))
}

/// Derivative of [`spread_factor`] with respect to wind speed.
///
/// Closed form `LB'/(sqrt(GB) (LB + sqrt(GB))²)`. It diverges where
/// `GB -> 0`, so `sqrt(GB)` is floored at `1e-6` there.
pub fn spread_factor_slope(wind_speed: f64, params: &EllipseParams) -> Result<f64> {
    let (lb, root_gb) = lb_and_root_gb(wind_speed, params)?;
    let root_gb = root_gb.max(1e-6);
    let denom = lb + root_gb;
    Ok(params.length_to_breadth_slope(wind_speed) / (root_gb * denom * denom))
}

/// Spread coefficient `C(R, U) = R (1 - LB/(LB + sqrt(GB)))` in m/s.
pub fn spread_coefficient(spread_rate: f64, wind_speed: f64, params: &EllipseParams) -> Result<f64> {
    Ok(spread_rate * spread_factor(wind_speed, params)?)
}

/// Spread rate `R` that yields the requested front speed at wind speed `U`.
pub fn spread_rate_for_speed(speed: f64, wind_speed: f64, params: &EllipseParams) -> Result<f64> {
    if speed == 0.0 {
        return Ok(0.0);
    }
    let factor = spread_factor(wind_speed, params)?;
    if factor <= 0.0 {
        return Err(Error::Domain(format!(
            "wind speed {wind_speed} gives zero spread; cannot reach front speed {speed}"
        )));
    }
    Ok(speed / factor)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindFuel {
    /// Fire spread rate `R` (m/s).
    pub spread_rate: f64,
    /// Wind speed `U` (m/s).
    pub wind_speed: f64,
    /// Wind azimuth `θ` in radians, measured from +y towards +x.
    pub azimuth: f64,
}

impl WindFuel {
    pub fn new(spread_rate: f64, wind_speed: f64, azimuth: f64) -> Result<Self> {
        if !(spread_rate >= 0.0) || !(wind_speed >= 0.0) || !azimuth.is_finite() {
            return Err(Error::Domain(format!(
                "invalid wind/fuel state R={spread_rate}, U={wind_speed}, theta={azimuth}"
            )));
        }
        Ok(WindFuel {
            spread_rate,
            wind_speed,
            azimuth: wrap_angle(azimuth),
        })
    }
}

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_angle(theta: f64) -> f64 {
    let w = theta.rem_euclid(std::f64::consts::TAU);
    if w >= std::f64::consts::TAU {
        0.0
    } else {
        w
    }
}

/// Planar front velocity `(C sin θ, C cos θ)`.
pub fn front_velocity(wind_fuel: &WindFuel, params: &EllipseParams) -> Result<Vector2<f64>> {
    let c = spread_coefficient(wind_fuel.spread_rate, wind_fuel.wind_speed, params)?;
    let (s, co) = wind_fuel.azimuth.sin_cos();
    Ok(Vector2::new(c * s, c * co))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FireFront {
    pub id: FireId,
    pub position: Point,
    pub velocity: Vector2<f64>,
    pub born_at: u64,
}

/// Euler step `q + q̇ dt + ω`, then refreshes `q̇` from the wind/fuel state.
///
/// `ω` is drawn per axis from `N(0, process_noise²)` using `rng`.
pub fn propagate_front<R: Rng + ?Sized>(
    front: &FireFront,
    wind_fuel: &WindFuel,
    params: &EllipseParams,
    dt: f64,
    process_noise: f64,
    rng: &mut R,
) -> Result<FireFront> {
    debug_assert!(dt > 0.0);
    let mut position = front.position + front.velocity * dt;
    if process_noise > 0.0 {
        let normal = Normal::new(0.0, process_noise).expect("finite std");
        position.x += normal.sample(rng);
        position.y += normal.sample(rng);
    }
    Ok(FireFront {
        id: front.id,
        position,
        velocity: front_velocity(wind_fuel, params)?,
        born_at: front.born_at,
    })
}

/// Children spawned by `front` over a growth window of length `dt`.
///
/// Draws `k ~ U{0..=spawn_rate_max}` and places each child uniformly in the
/// growth box `±|q̇x| dt × ±|q̇y| dt` around the parent. Ids are assigned
/// sequentially from `next_id`.
pub fn spawn_fronts<R: Rng + ?Sized>(
    front: &FireFront,
    spawn_rate_max: u32,
    dt: f64,
    born_at: u64,
    next_id: FireId,
    rng: &mut R,
) -> Vec<FireFront> {
    if spawn_rate_max == 0 {
        return Vec::new();
    }
    let count = rng.random_range(0..=spawn_rate_max);
    let half = front.velocity.abs() * dt;
    (0..count)
        .map(|i| {
            let ox = if half.x > 0.0 {
                rng.random_range(-half.x..=half.x)
            } else {
                0.0
            };
            let oy = if half.y > 0.0 {
                rng.random_range(-half.y..=half.y)
            } else {
                0.0
            };
            FireFront {
                id: next_id + i as u64,
                position: front.position + Vector2::new(ox, oy),
                velocity: front.velocity,
                born_at,
            }
        })
        .collect()
}

/// The three fire scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum FireCase {
    /// Near-stationary fire.
    Stationary,
    /// Fire moves but does not spawn.
    Moving,
    /// Fire moves and multiplies.
    Spreading,
}

impl FireCase {
    pub const ALL: [FireCase; 3] = [FireCase::Stationary, FireCase::Moving, FireCase::Spreading];

    /// Front speed used in the experiments for this case (m/s).
    pub fn default_speed(self) -> f64 {
        match self {
            FireCase::Stationary => 0.0,
            FireCase::Moving => 0.5,
            FireCase::Spreading => 1.0,
        }
    }

    pub fn number(self) -> u8 {
        self.into()
    }
}

impl TryFrom<u8> for FireCase {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(FireCase::Stationary),
            2 => Ok(FireCase::Moving),
            3 => Ok(FireCase::Spreading),
            _ => Err(format!("fire case must be 1, 2 or 3, got {v}")),
        }
    }
}

impl From<FireCase> for u8 {
    fn from(c: FireCase) -> u8 {
        match c {
            FireCase::Stationary => 1,
            FireCase::Moving => 2,
            FireCase::Spreading => 3,
        }
    }
}

impl std::fmt::Display for FireCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.number())
    }
}

/// A change of wind/fuel conditions taking effect at `step`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindChange {
    pub step: u64,
    pub wind_fuel: WindFuel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FireMap {
    pub fronts: Vec<FireFront>,
    pub wind_fuel: WindFuel,
    pub case: FireCase,
    pub params: EllipseParams,
    pub spawn_rate_max: u32,
    /// Steps between spawn events (case 3 only).
    pub spawn_interval: u64,
    /// Upper limit on the number of fronts; spawning stops once reached.
    pub max_fronts: usize,
    /// Per-axis process noise std (m per step).
    pub process_noise: f64,
    /// Optional piecewise-constant wind/fuel schedule, sorted by step.
    pub schedule: Vec<WindChange>,
    pub step: u64,
    pub next_id: FireId,
    pub seed: u64,
}

impl FireMap {
    /// Fronts at the given positions, all moving with the current wind/fuel velocity.
    pub fn new(
        positions: &[Point],
        wind_fuel: WindFuel,
        case: FireCase,
        params: EllipseParams,
        seed: u64,
    ) -> Result<Self> {
        let velocity = front_velocity(&wind_fuel, &params)?;
        let fronts = positions
            .iter()
            .enumerate()
            .map(|(i, p)| FireFront {
                id: i as FireId,
                position: *p,
                velocity,
                born_at: 0,
            })
            .collect();
        Ok(FireMap {
            fronts,
            wind_fuel,
            case,
            params,
            spawn_rate_max: if case == FireCase::Spreading { 3 } else { 0 },
            spawn_interval: 10,
            max_fronts: usize::MAX,
            process_noise: 0.05,
            schedule: Vec::new(),
            step: 0,
            next_id: positions.len() as FireId,
            seed,
        })
    }

    pub fn front(&self, id: FireId) -> Option<&FireFront> {
        self.fronts.iter().find(|f| f.id == id)
    }
}

/// Advances the whole map by one step of length `dt`.
///
/// Each front draws its noise from a substream keyed by `(seed, id, step)`;
/// spawning (case 3 only) happens every `spawn_interval` steps with ids
/// handed out in parent-id order.
pub fn simulate_step(map: &FireMap, dt: f64) -> Result<FireMap> {
    debug_assert!(dt > 0.0);
    let step = map.step + 1;
    let wind_fuel = map
        .schedule
        .iter()
        .rev()
        .find(|c| c.step <= step)
        .map(|c| c.wind_fuel)
        .unwrap_or(map.wind_fuel);

    let mut fronts = Vec::with_capacity(map.fronts.len());
    for front in &map.fronts {
        let mut rng = substream(map.seed, &[tag::FRONT_NOISE, front.id, step]);
        fronts.push(propagate_front(
            front,
            &wind_fuel,
            &map.params,
            dt,
            map.process_noise,
            &mut rng,
        )?);
    }

    let mut next_id = map.next_id;
    let spawning = map.case == FireCase::Spreading
        && map.spawn_rate_max > 0
        && map.spawn_interval > 0
        && step.is_multiple_of(map.spawn_interval);
    if spawning {
        let window = dt * map.spawn_interval as f64;
        let parents = fronts.clone();
        for parent in &parents {
            if fronts.len() >= map.max_fronts {
                break;
            }
            let mut rng = substream(map.seed, &[tag::SPAWN, parent.id, step]);
            let mut children = spawn_fronts(parent, map.spawn_rate_max, window, step, next_id, &mut rng);
            children.truncate(map.max_fronts - fronts.len());
            next_id += children.len() as u64;
            fronts.extend(children);
        }
    }

    Ok(FireMap {
        fronts,
        wind_fuel,
        step,
        next_id,
        ..map.clone()
    })
}
