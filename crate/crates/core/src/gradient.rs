//! Density-gradient coverage baseline.
//!
//! Each UAV climbs a Gaussian kernel density of the fire points it can
//! sense (bandwidth `h = g/2`) and is pushed away from neighbours inside
//! the separation radius. This is a simplified stand-in for a
//! pixel-density coverage controller, used only for comparison.

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::coordination::UavAgent;
use crate::error::{Error, Result};
use crate::geometry::Point;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GradientConfig {
    /// Dimensionless gain `η` on `h² ∇ρ`.
    pub step_size: f64,
    pub separation_weight: f64,
    /// Repulsion range in metres; `None` uses the FOV width.
    pub separation_radius: Option<f64>,
    /// Range within which fires contribute to the density; `None` uses
    /// four FOV widths.
    pub sensing_range: Option<f64>,
    pub altitude_min: f64,
    pub altitude_max: f64,
}

impl Default for GradientConfig {
    fn default() -> Self {
        GradientConfig {
            step_size: 0.5,
            separation_weight: 0.5,
            separation_radius: None,
            sensing_range: None,
            altitude_min: 10.0,
            altitude_max: 200.0,
        }
    }
}

impl GradientConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size > 0.0) {
            return Err(Error::config("gradient.step_size", "must be positive"));
        }
        if !(self.separation_weight >= 0.0) {
            return Err(Error::config(
                "gradient.separation_weight",
                "must be non-negative",
            ));
        }
        if self.separation_radius.is_some_and(|r| !(r > 0.0)) {
            return Err(Error::config("gradient.separation_radius", "must be positive"));
        }
        if self.sensing_range.is_some_and(|r| !(r > 0.0)) {
            return Err(Error::config("gradient.sensing_range", "must be positive"));
        }
        if !(self.altitude_min > 0.0 && self.altitude_min <= self.altitude_max) {
            return Err(Error::config(
                "gradient.altitude_min",
                "altitude band must satisfy 0 < min <= max",
            ));
        }
        Ok(())
    }
}

/// Deterministic unit vector used to split coincident UAVs `a < b`.
fn split_direction(a: u64) -> Vector2<f64> {
    let angle = a as f64 * 2.399_963_229_728_653;
    Vector2::new(angle.cos(), angle.sin())
}

/// Planar displacement for one agent from an immutable snapshot.
fn displacement(
    agent: &UavAgent,
    agents: &[UavAgent],
    fires: &[Point],
    cfg: &GradientConfig,
    dt: f64,
) -> Vector2<f64> {
    let g = agent.fov_width();
    let h = g / 2.0;
    let sensing = cfg.sensing_range.unwrap_or(4.0 * g);
    let here = agent.position();

    // η h² ∇ρ with ρ(x) = Σ exp(-|x - q|² / 2h²)
    let mut attraction = Vector2::zeros();
    for q in fires {
        let d = q - here;
        if d.norm() <= sensing {
            attraction += d * (-d.norm_squared() / (2.0 * h * h)).exp();
        }
    }
    attraction *= cfg.step_size;

    let radius = cfg.separation_radius.unwrap_or(g);
    let mut repulsion = Vector2::zeros();
    for other in agents.iter().filter(|o| o.id != agent.id) {
        let d = here - other.position();
        let dist = d.norm();
        if dist >= radius {
            continue;
        }
        let dir = if dist > 1e-9 {
            d / dist
        } else if agent.id < other.id {
            split_direction(agent.id)
        } else {
            -split_direction(other.id)
        };
        repulsion += dir * (radius - dist);
    }

    let step = attraction + repulsion * cfg.separation_weight;
    let cap = agent.speed * dt;
    let len = step.norm();
    if len > cap {
        step * (cap / len)
    } else {
        step
    }
}

/// Move every agent one step. Fire positions are the points the fleet can
/// currently sense; each agent only uses those within its sensing range.
pub fn gradient_coverage_step(agents: &mut [UavAgent], fires: &[Point], cfg: &GradientConfig, dt: f64) {
    let moves: Vec<Vector2<f64>> = agents
        .iter()
        .map(|a| displacement(a, agents, fires, cfg, dt))
        .collect();
    for (agent, m) in agents.iter_mut().zip(moves) {
        let z = agent.pose.z.clamp(cfg.altitude_min, cfg.altitude_max);
        agent.pose = Vector3::new(agent.pose.x + m.x, agent.pose.y + m.y, z);
    }
}
