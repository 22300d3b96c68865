//! Scenario configuration.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::aekf::FilterConfig;
use crate::bounds::{FleetParams, UrrMode};
use crate::error::{Error, Result};
use crate::fire::{EllipseParams, FireCase};
use crate::geometry::Point;
use crate::gradient::GradientConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Controller {
    #[default]
    Proposed,
    Gradient,
}

impl Controller {
    pub const ALL: [Controller; 2] = [Controller::Proposed, Controller::Gradient];

    pub fn name(self) -> &'static str {
        match self {
            Controller::Proposed => "proposed",
            Controller::Gradient => "gradient",
        }
    }
}

impl std::fmt::Display for Controller {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Controller {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "proposed" => Ok(Controller::Proposed),
            "gradient" => Ok(Controller::Gradient),
            other => Err(format!(
                "unknown controller `{other}` (expected proposed or gradient)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AreaConfig {
    pub width: f64,
    pub height: f64,
}

impl Default for AreaConfig {
    fn default() -> Self {
        AreaConfig {
            width: 1000.0,
            height: 1000.0,
        }
    }
}

impl AreaConfig {
    pub fn center(&self) -> Point {
        Point::new(self.width / 2.0, self.height / 2.0)
    }
}

/// How the initial fronts are placed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Layout {
    /// Uniform over the area.
    Uniform,
    /// Gaussian blobs around uniformly drawn centres.
    Clusters { count: usize, spread: f64 },
    /// Fixed positions; `initial_count` is ignored.
    Explicit { positions: Vec<[f64; 2]> },
}

impl Default for Layout {
    fn default() -> Self {
        Layout::Clusters {
            count: 3,
            spread: 40.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FireConfig {
    /// Front speed (m/s); defaults to the case speed (0, 0.5, 1).
    pub speed: Option<f64>,
    pub initial_count: usize,
    pub layout: Layout,
    /// Children per front per spawn event, at most (case 3).
    pub spawn_rate_max: u32,
    pub spawn_interval: u64,
    pub max_fronts: usize,
    /// Per-axis positional noise std per step (m).
    pub process_noise: f64,
    pub wind_speed: f64,
    /// Spread azimuth (rad, clockwise from +y).
    pub azimuth: f64,
    pub ellipse: EllipseParams,
}

impl Default for FireConfig {
    fn default() -> Self {
        FireConfig {
            speed: None,
            initial_count: 20,
            layout: Layout::default(),
            spawn_rate_max: 3,
            spawn_interval: 10,
            max_fronts: 60,
            process_noise: 0.05,
            wind_speed: 5.0,
            azimuth: 0.8,
            ellipse: EllipseParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TeamConfig {
    pub count: usize,
    pub vicinity_radius: f64,
    /// Explicit team positions; when empty, teams are placed at `standoff`
    /// metres from a randomly chosen initial front.
    pub positions: Vec<[f64; 2]>,
    pub standoff: f64,
    /// Generated teams keep their offset to the anchor front as it moves.
    pub follow_fire: bool,
}

impl Default for TeamConfig {
    fn default() -> Self {
        TeamConfig {
            count: 0,
            vicinity_radius: 150.0,
            positions: Vec::new(),
            standoff: 50.0,
            follow_fire: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FleetConfig {
    pub count: usize,
    pub speed: f64,
    pub altitude: f64,
    pub half_angle: f64,
}

impl Default for FleetConfig {
    fn default() -> Self {
        FleetConfig {
            count: 4,
            speed: 10.0,
            altitude: 50.0,
            half_angle: 0.5,
        }
    }
}

impl FleetConfig {
    pub fn params(&self) -> FleetParams {
        FleetParams {
            speed: self.speed,
            altitude: self.altitude,
            half_angle: self.half_angle,
        }
    }
}

/// Sensor noise standard deviations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SensingConfig {
    /// Bearing angle noise (rad).
    pub angle: f64,
    pub spread_rate: f64,
    pub wind_speed: f64,
    pub azimuth: f64,
    /// UAV position noise per axis (m).
    pub gps: f64,
    /// Position noise of the initial fire survey (m).
    pub survey: f64,
    /// Hold the UAV-pose block of the process noise at the GPS variance
    /// instead of adapting it (the pose is a measured control input and is
    /// not separately observable from the fire position).
    pub fixed_pose_noise: bool,
}

impl Default for SensingConfig {
    fn default() -> Self {
        SensingConfig {
            angle: 5e-3,
            spread_rate: 0.02,
            wind_speed: 0.2,
            azimuth: 0.02,
            gps: 0.5,
            survey: 5.0,
            fixed_pose_noise: true,
        }
    }
}

impl SensingConfig {
    /// Noise-free sensing, for filter sanity checks.
    pub fn exact() -> Self {
        SensingConfig {
            angle: 0.0,
            spread_rate: 0.0,
            wind_speed: 0.0,
            azimuth: 0.0,
            gps: 0.0,
            survey: 0.0,
            fixed_pose_noise: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SafetyConfig {
    /// Steps between safety evaluations.
    pub interval: u64,
    pub urr_mode: UrrMode,
    /// When false, plans are only assessed against an unlimited virtual
    /// pool and no UAV leaves coverage.
    pub dispatch: bool,
    /// Longest coverage partition lifetime (steps).
    pub max_replan_steps: u64,
}

impl Default for SafetyConfig {
    fn default() -> Self {
        SafetyConfig {
            interval: 10,
            urr_mode: UrrMode::Trace,
            dispatch: true,
            max_replan_steps: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub case: FireCase,
    pub controller: Controller,
    /// Step length (s).
    pub dt: f64,
    /// Number of steps.
    pub duration: u64,
    pub alpha_conf: f64,
    pub area: AreaConfig,
    pub fire: FireConfig,
    pub teams: TeamConfig,
    pub fleet: FleetConfig,
    pub sensing: SensingConfig,
    pub filter: FilterConfig,
    pub safety: SafetyConfig,
    pub gradient: GradientConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            seed: 1,
            case: FireCase::Moving,
            controller: Controller::Proposed,
            dt: 1.0,
            duration: 500,
            alpha_conf: 0.05,
            area: AreaConfig::default(),
            fire: FireConfig::default(),
            teams: TeamConfig::default(),
            fleet: FleetConfig::default(),
            sensing: SensingConfig::default(),
            filter: FilterConfig::default(),
            safety: SafetyConfig::default(),
            gradient: GradientConfig::default(),
        }
    }
}

fn positive(path: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(
            path,
            format!("must be positive and finite, got {v}"),
        ))
    }
}

fn non_negative(path: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(
            path,
            format!("must be non-negative and finite, got {v}"),
        ))
    }
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| {
            let path = e
                .span()
                .map(|s| format!("byte {}..{}", s.start, s.end))
                .unwrap_or_else(|| "<document>".into());
            Error::config(path, e.message().trim())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(path.display().to_string(), e.to_string()))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario config serializes")
    }

    /// Front speed in effect: the configured one or the case default.
    pub fn fire_speed(&self) -> f64 {
        self.fire.speed.unwrap_or_else(|| self.case.default_speed())
    }

    pub fn validate(&self) -> Result<()> {
        positive("dt", self.dt)?;
        if self.duration < 1 {
            return Err(Error::config("duration", "must be at least 1"));
        }
        if !(self.alpha_conf > 0.0 && self.alpha_conf < 1.0) {
            return Err(Error::config("alpha_conf", "must lie in (0, 1)"));
        }
        positive("area.width", self.area.width)?;
        positive("area.height", self.area.height)?;

        if let Some(v) = self.fire.speed {
            non_negative("fire.speed", v)?;
        }
        match &self.fire.layout {
            Layout::Uniform => {}
            Layout::Clusters { count, spread } => {
                if *count == 0 {
                    return Err(Error::config("fire.layout.count", "must be at least 1"));
                }
                non_negative("fire.layout.spread", *spread)?;
            }
            Layout::Explicit { positions } => {
                for (k, p) in positions.iter().enumerate() {
                    if !p.iter().all(|v| v.is_finite()) {
                        return Err(Error::config(
                            format!("fire.layout.positions[{k}]"),
                            "must be finite",
                        ));
                    }
                }
            }
        }
        if self.fire.spawn_interval == 0 {
            return Err(Error::config("fire.spawn_interval", "must be at least 1"));
        }
        if self.fire.max_fronts == 0 {
            return Err(Error::config("fire.max_fronts", "must be at least 1"));
        }
        non_negative("fire.process_noise", self.fire.process_noise)?;
        non_negative("fire.wind_speed", self.fire.wind_speed)?;
        if !self.fire.azimuth.is_finite() {
            return Err(Error::config("fire.azimuth", "must be finite"));
        }
        self.fire
            .ellipse
            .validate(self.fire.wind_speed.max(20.0))
            .map_err(|e| Error::config("fire.ellipse", e.to_string()))?;
        if self.fire_speed() > 0.0 && self.fire.wind_speed == 0.0 {
            return Err(Error::config(
                "fire.wind_speed",
                "a moving fire needs wind_speed > 0",
            ));
        }

        positive("teams.vicinity_radius", self.teams.vicinity_radius)?;
        non_negative("teams.standoff", self.teams.standoff)?;
        if !self.teams.positions.is_empty() && self.teams.positions.len() < self.teams.count {
            return Err(Error::config(
                "teams.positions",
                format!(
                    "{} positions given for {} teams",
                    self.teams.positions.len(),
                    self.teams.count
                ),
            ));
        }

        self.fleet.params().validate()?;
        for (path, v) in [
            ("sensing.angle", self.sensing.angle),
            ("sensing.spread_rate", self.sensing.spread_rate),
            ("sensing.wind_speed", self.sensing.wind_speed),
            ("sensing.azimuth", self.sensing.azimuth),
            ("sensing.gps", self.sensing.gps),
            ("sensing.survey", self.sensing.survey),
        ] {
            non_negative(path, v)?;
        }
        self.filter.validate()?;
        if (self.filter.dt - self.dt).abs() > 1e-12 {
            return Err(Error::config("filter.dt", "must equal dt"));
        }
        if self.safety.interval == 0 {
            return Err(Error::config("safety.interval", "must be at least 1"));
        }
        if self.safety.max_replan_steps == 0 {
            return Err(Error::config("safety.max_replan_steps", "must be at least 1"));
        }
        self.gradient.validate()?;
        Ok(())
    }
}
