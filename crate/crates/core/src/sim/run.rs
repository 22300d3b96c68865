//! Closed-loop driver: fire, sensing, tracking, controllers, metrics.

use std::collections::BTreeMap;
use std::time::Instant;

use nalgebra::Vector3;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::aekf::{
    idx, Aekf, FullState, ObservationVector, StateMatrix, StateVector, TrackEstimate, STATE_DIM,
};
use crate::bounds;
use crate::coordination::{self, FireTrack, HumanTeam, PlanningContext, RouteStop, UavAgent, UavMode};
use crate::error::Result;
use crate::fire::{self, FireMap, WindFuel};
use crate::geometry::Point;
use crate::gradient;
use crate::rng::{substream, tag};
use crate::FireId;

use super::config::{Controller, Layout, ScenarioConfig};

/// Trace of `P` over a fire's lifetime as a track.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSeries {
    pub first_step: u64,
    pub values: Vec<f64>,
}

/// Outcome of one team's safety evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SafetyRecord {
    pub step: u64,
    pub team: u64,
    pub vicinity_fires: u32,
    pub recruited: u32,
    pub feasible: bool,
    /// Joint confidence `(1-α)^n` over the plan's waypoints.
    pub confidence: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RunMetrics {
    /// Ground-truth fronts inside no UAV footprint, per step.
    pub uncovered: Vec<u32>,
    /// Running sum of `uncovered`.
    pub cumulative_uncertainty: Vec<u64>,
    /// Mean `trace(P)` over live tracks, per step (0 without tracks).
    pub mean_trace_p: Vec<f64>,
    pub active_uavs: Vec<u32>,
    pub fire_trace_p: BTreeMap<FireId, TraceSeries>,
    pub safety: Vec<SafetyRecord>,
    /// Updates skipped because the residual covariance was ill-conditioned.
    pub skipped_updates: u64,
    /// Seconds spent per step; not serialized and ignored by `==`.
    #[serde(skip)]
    pub wall_clock: Vec<f64>,
}

impl PartialEq for RunMetrics {
    fn eq(&self, other: &Self) -> bool {
        self.uncovered == other.uncovered
            && self.cumulative_uncertainty == other.cumulative_uncertainty
            && self.mean_trace_p == other.mean_trace_p
            && self.active_uavs == other.active_uavs
            && self.fire_trace_p == other.fire_trace_p
            && self.safety == other.safety
            && self.skipped_updates == other.skipped_updates
    }
}

impl RunMetrics {
    pub fn final_cumulative(&self) -> u64 {
        self.cumulative_uncertainty.last().copied().unwrap_or(0)
    }

    /// Peak over evaluation steps of the UAVs recruited by the first
    /// `teams` teams (by id) together.
    pub fn peak_drones(&self, teams: usize) -> u32 {
        let mut per_step: BTreeMap<u64, u32> = BTreeMap::new();
        for r in self.safety.iter().filter(|r| (r.team as usize) < teams) {
            *per_step.entry(r.step).or_default() += r.recruited;
        }
        per_step.values().copied().max().unwrap_or(0)
    }

    /// Highest number of UAVs any single team needed.
    pub fn drones_recruited(&self) -> BTreeMap<u64, u32> {
        let mut out = BTreeMap::new();
        for r in &self.safety {
            let e = out.entry(r.team).or_insert(0);
            *e = (*e).max(r.recruited);
        }
        out
    }
}

fn normal(std: f64) -> Normal<f64> {
    Normal::new(0.0, std).expect("validated non-negative std")
}

/// One noisy observation of `front` from a UAV at `pose`.
fn observe_front<R: Rng + ?Sized>(
    q: &Point,
    pose: &Vector3<f64>,
    wind_fuel: &WindFuel,
    cfg: &ScenarioConfig,
    rng: &mut R,
) -> ObservationVector {
    let s = &cfg.sensing;
    ObservationVector {
        phi_x: ((q.x - pose.x) / pose.z).atan() + normal(s.angle).sample(rng),
        phi_y: ((q.y - pose.y) / pose.z).atan() + normal(s.angle).sample(rng),
        spread_rate: wind_fuel.spread_rate + normal(s.spread_rate).sample(rng),
        wind_speed: wind_fuel.wind_speed + normal(s.wind_speed).sample(rng),
        azimuth: wind_fuel.azimuth + normal(s.azimuth).sample(rng),
    }
}

/// Initial front positions from the configured layout.
pub fn initial_positions(cfg: &ScenarioConfig) -> Vec<Point> {
    let mut rng = substream(cfg.seed, &[tag::LAYOUT]);
    let (w, h) = (cfg.area.width, cfg.area.height);
    let clamp = |p: Point| Point::new(p.x.clamp(0.0, w), p.y.clamp(0.0, h));
    match &cfg.fire.layout {
        Layout::Explicit { positions } => positions.iter().map(|p| Point::new(p[0], p[1])).collect(),
        Layout::Uniform => (0..cfg.fire.initial_count)
            .map(|_| Point::new(rng.random_range(0.0..=w), rng.random_range(0.0..=h)))
            .collect(),
        Layout::Clusters { count, spread } => {
            let (mx, my) = ((w / 4.0).min(100.0), (h / 4.0).min(100.0));
            let centers: Vec<Point> = (0..*count)
                .map(|_| Point::new(rng.random_range(mx..=w - mx), rng.random_range(my..=h - my)))
                .collect();
            let jitter = normal(*spread);
            (0..cfg.fire.initial_count)
                .map(|i| {
                    let c = centers[i % centers.len()];
                    clamp(Point::new(
                        c.x + jitter.sample(&mut rng),
                        c.y + jitter.sample(&mut rng),
                    ))
                })
                .collect()
        }
    }
}

/// Reset the pose rows and columns of `Q` to the GPS variance.
fn hold_pose_noise(q: &mut StateMatrix, gps: f64) {
    for i in idx::PX..=idx::PZ {
        for j in 0..STATE_DIM {
            q[(i, j)] = 0.0;
            q[(j, i)] = 0.0;
        }
        q[(i, i)] = gps * gps;
    }
}

/// A team and, for generated teams, the front it works beside.
#[derive(Debug, Clone, Copy, PartialEq)]
struct TeamSite {
    team: HumanTeam,
    anchor: Option<(FireId, nalgebra::Vector2<f64>)>,
}

/// Team positions: explicit, or `standoff` metres from a random initial
/// front. Team `k` depends only on `(seed, k)`, so smaller team counts are
/// prefixes of larger ones.
pub fn team_positions(cfg: &ScenarioConfig, fires: &[Point]) -> Vec<HumanTeam> {
    team_sites(cfg, fires).into_iter().map(|s| s.team).collect()
}

fn team_sites(cfg: &ScenarioConfig, fires: &[Point]) -> Vec<TeamSite> {
    (0..cfg.teams.count)
        .map(|k| {
            let (position, anchor) = if let Some(p) = cfg.teams.positions.get(k) {
                (Point::new(p[0], p[1]), None)
            } else if fires.is_empty() {
                (cfg.area.center(), None)
            } else {
                let mut rng = substream(cfg.seed, &[tag::TEAMS, k as u64]);
                let front = rng.random_range(0..fires.len());
                let angle = rng.random_range(0.0..std::f64::consts::TAU);
                let offset = nalgebra::Vector2::new(angle.cos(), angle.sin()) * cfg.teams.standoff;
                (fires[front] + offset, Some((front as FireId, offset)))
            };
            TeamSite {
                team: HumanTeam {
                    id: k as u64,
                    position,
                    vicinity_radius: cfg.teams.vicinity_radius,
                },
                anchor: anchor.filter(|_| cfg.teams.follow_fire),
            }
        })
        .collect()
}

/// UAVs start on a small ring around the area centre.
fn initial_fleet(cfg: &ScenarioConfig) -> Vec<UavAgent> {
    let fleet = cfg.fleet.params();
    let n = cfg.fleet.count;
    (0..n)
        .map(|k| {
            let angle = std::f64::consts::TAU * k as f64 / n.max(1) as f64;
            let offset = if n > 1 { 10.0 } else { 0.0 };
            let p = cfg.area.center() + nalgebra::Vector2::new(angle.cos(), angle.sin()) * offset;
            UavAgent::new(k as u64, p, &fleet)
        })
        .collect()
}

/// A running scenario. [`run_scenario`] drives it to completion; tests and
/// tools can also step it and inspect the state in between.
#[derive(Debug, Clone)]
pub struct Simulation {
    cfg: ScenarioConfig,
    map: FireMap,
    agents: Vec<UavAgent>,
    teams: Vec<TeamSite>,
    /// Posterior tracks, ordered by fire id.
    tracks: Vec<FireTrack>,
    /// Tracks right after this step's prediction.
    predicted: Vec<FireTrack>,
    filter: Aekf,
    ctx: PlanningContext,
    metrics: RunMetrics,
}

impl Simulation {
    pub fn new(cfg: &ScenarioConfig) -> Result<Self> {
        cfg.validate()?;
        let params = cfg.fire.ellipse;
        let speed = cfg.fire_speed();
        let spread_rate = fire::spread_rate_for_speed(speed, cfg.fire.wind_speed, &params)?;
        let wind_fuel = WindFuel::new(spread_rate, cfg.fire.wind_speed, cfg.fire.azimuth)?;
        let positions = initial_positions(cfg);
        let mut map = FireMap::new(&positions, wind_fuel, cfg.case, params, cfg.seed)?;
        map.spawn_rate_max = cfg.fire.spawn_rate_max;
        map.spawn_interval = cfg.fire.spawn_interval;
        map.max_fronts = cfg.fire.max_fronts;
        map.process_noise = cfg.fire.process_noise;

        let filter = Aekf::new(cfg.filter.clone(), params);
        let survey = normal(cfg.sensing.survey);
        let s = &cfg.sensing;
        // the survey's prior matches the noise it was drawn with
        let survey_cov = StateMatrix::from_diagonal(&StateVector::from([
            s.survey.powi(2),
            s.survey.powi(2),
            s.gps.powi(2),
            s.gps.powi(2),
            s.gps.powi(2),
            s.spread_rate.powi(2),
            s.wind_speed.powi(2),
            s.azimuth.powi(2),
        ]));
        let tracks = map
            .fronts
            .iter()
            .map(|f| {
                let mut rng = substream(cfg.seed, &[tag::SURVEY, f.id]);
                let qx = f.position.x + survey.sample(&mut rng);
                let qy = f.position.y + survey.sample(&mut rng);
                let mean = FullState {
                    qx,
                    qy,
                    px: qx,
                    py: qy,
                    pz: cfg.fleet.altitude,
                    spread_rate: (wind_fuel.spread_rate + normal(s.spread_rate).sample(&mut rng)).max(0.0),
                    wind_speed: (wind_fuel.wind_speed + normal(s.wind_speed).sample(&mut rng)).max(0.0),
                    azimuth: fire::wrap_angle(wind_fuel.azimuth + normal(s.azimuth).sample(&mut rng)),
                };
                let mut estimate = TrackEstimate::new(mean, &filter.config);
                estimate.cov = survey_cov;
                FireTrack { id: f.id, estimate }
            })
            .collect::<Vec<_>>();

        let ctx = PlanningContext {
            case: cfg.case,
            alpha_conf: cfg.alpha_conf,
            dt: cfg.dt,
            params,
            urr_mode: cfg.safety.urr_mode,
            max_replan_steps: cfg.safety.max_replan_steps,
        };
        Ok(Simulation {
            teams: team_sites(cfg, &positions),
            agents: initial_fleet(cfg),
            predicted: tracks.clone(),
            tracks,
            map,
            filter,
            ctx,
            metrics: RunMetrics::default(),
            cfg: cfg.clone(),
        })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.cfg
    }

    pub fn fire_map(&self) -> &FireMap {
        &self.map
    }

    pub fn agents(&self) -> &[UavAgent] {
        &self.agents
    }

    pub fn agents_mut(&mut self) -> &mut [UavAgent] {
        &mut self.agents
    }

    pub fn teams(&self) -> Vec<HumanTeam> {
        self.teams.iter().map(|s| s.team).collect()
    }

    pub fn tracks(&self) -> &[FireTrack] {
        &self.tracks
    }

    /// Tracks as they stood after this step's prediction, before updates.
    pub fn predicted_tracks(&self) -> &[FireTrack] {
        &self.predicted
    }

    pub fn planning_context(&self) -> &PlanningContext {
        &self.ctx
    }

    pub fn filter(&self) -> &Aekf {
        &self.filter
    }

    pub fn metrics(&self) -> &RunMetrics {
        &self.metrics
    }

    pub fn step_count(&self) -> u64 {
        self.map.step
    }

    pub fn step(&mut self) -> Result<()> {
        let started = Instant::now();
        self.map = fire::simulate_step(&self.map, self.cfg.dt)?;
        let step = self.map.step;
        for site in &mut self.teams {
            if let Some((front, offset)) = site.anchor {
                if let Some(f) = self.map.front(front) {
                    site.team.position = f.position + offset;
                }
            }
        }

        // Sensing from the poses the UAVs hold at the start of the step.
        let mut measured_pose = Vec::with_capacity(self.agents.len());
        for a in &self.agents {
            let mut rng = substream(self.cfg.seed, &[tag::GPS, step, a.id]);
            let gps = normal(self.cfg.sensing.gps);
            measured_pose.push(a.pose + Vector3::from_fn(|_, _| gps.sample(&mut rng)));
        }
        let mut observations: BTreeMap<FireId, (ObservationVector, Vector3<f64>)> = BTreeMap::new();
        let mut uncovered = 0u32;
        for front in &self.map.fronts {
            let seen_by = self.agents.iter().position(|a| a.sees(&front.position));
            match seen_by {
                Some(k) => {
                    let a = &self.agents[k];
                    let mut rng = substream(self.cfg.seed, &[tag::OBSERVATION, step, a.id, front.id]);
                    let z = observe_front(&front.position, &a.pose, &self.map.wind_fuel, &self.cfg, &mut rng);
                    observations.insert(front.id, (z, measured_pose[k]));
                }
                None => uncovered += 1,
            }
        }

        self.update_tracks(step, &observations)?;

        match self.cfg.controller {
            Controller::Proposed => {
                if !self.teams.is_empty() && step.is_multiple_of(self.cfg.safety.interval) {
                    self.safety_round(step)?;
                }
                let mut rng = substream(self.cfg.seed, &[tag::KMEANS, step]);
                coordination::coverage_step(&mut self.agents, &self.tracks, &self.ctx, step, &mut rng)?;
            }
            Controller::Gradient => {
                let fires: Vec<Point> = self.map.fronts.iter().map(|f| f.position).collect();
                gradient::gradient_coverage_step(&mut self.agents, &fires, &self.cfg.gradient, self.cfg.dt);
            }
        }

        let m = &mut self.metrics;
        let previous = m.cumulative_uncertainty.last().copied().unwrap_or(0);
        m.uncovered.push(uncovered);
        m.cumulative_uncertainty.push(previous + u64::from(uncovered));
        let traces: Vec<f64> = self.tracks.iter().map(|t| t.estimate.cov.trace()).collect();
        m.mean_trace_p.push(if traces.is_empty() {
            0.0
        } else {
            traces.iter().sum::<f64>() / traces.len() as f64
        });
        for (t, tr) in self.tracks.iter().zip(&traces) {
            m.fire_trace_p
                .entry(t.id)
                .or_insert_with(|| TraceSeries {
                    first_step: step,
                    values: Vec::new(),
                })
                .values
                .push(*tr);
        }
        let active = match self.cfg.controller {
            Controller::Proposed => self
                .agents
                .iter()
                .filter(|a| a.mode != UavMode::Idle && !a.route.is_empty())
                .count(),
            Controller::Gradient => self.agents.iter().filter(|a| a.mode != UavMode::Idle).count(),
        };
        m.active_uavs.push(active as u32);
        m.wall_clock.push(started.elapsed().as_secs_f64());
        Ok(())
    }

    fn update_tracks(
        &mut self,
        step: u64,
        observations: &BTreeMap<FireId, (ObservationVector, Vector3<f64>)>,
    ) -> Result<()> {
        let dt = self.cfg.dt;
        let mut predicted = Vec::with_capacity(self.tracks.len());
        let mut posterior = Vec::with_capacity(self.tracks.len());
        for t in &self.tracks {
            let obs = observations.get(&t.id);
            let prior = self.filter.predict(&t.estimate, dt, obs.map(|o| o.1))?;
            let estimate = match obs {
                Some((z, _)) => match self.filter.correct(&prior, z, step) {
                    Ok((mut updated, _)) => {
                        if self.cfg.sensing.fixed_pose_noise {
                            hold_pose_noise(&mut updated.process_cov, self.cfg.sensing.gps);
                        }
                        updated
                    }
                    Err(crate::Error::SingularResidual { .. }) => {
                        self.metrics.skipped_updates += 1;
                        prior.clone()
                    }
                    Err(e) => return Err(e),
                },
                None => prior.clone(),
            };
            predicted.push(FireTrack {
                id: t.id,
                estimate: prior,
            });
            posterior.push(FireTrack { id: t.id, estimate });
        }
        // Fronts seen for the first time (spawned after the survey).
        for (id, (z, pose)) in observations {
            if self.tracks.binary_search_by_key(id, |t| t.id).is_err() {
                let mut estimate = self.filter.initiate(z, pose);
                estimate.last_update = step;
                predicted.push(FireTrack {
                    id: *id,
                    estimate: estimate.clone(),
                });
                posterior.push(FireTrack { id: *id, estimate });
            }
        }
        predicted.sort_by_key(|t| t.id);
        posterior.sort_by_key(|t| t.id);
        self.predicted = predicted;
        self.tracks = posterior;
        Ok(())
    }

    fn safety_round(&mut self, step: u64) -> Result<()> {
        let before: Vec<UavMode> = self.agents.iter().map(|a| a.mode).collect();
        let dispatch = self.cfg.safety.dispatch;
        if dispatch {
            for a in self.agents.iter_mut().filter(|a| a.mode == UavMode::Safety) {
                a.mode = UavMode::Coverage;
                a.team = None;
                a.clear_route();
            }
        }
        let fleet = self.cfg.fleet.params();
        for team in self.teams.iter().map(|s| &s.team) {
            let vicinity = coordination::vicinity_fires(&self.predicted, team);
            let pool: Vec<UavAgent> = if dispatch {
                self.agents
                    .iter()
                    .filter(|a| a.mode != UavMode::Safety)
                    .cloned()
                    .collect()
            } else {
                // an unlimited virtual pool at the team: one UAV per fire always suffices
                (0..vicinity.len().max(1))
                    .map(|k| UavAgent::new(u64::MAX - k as u64, team.position, &fleet))
                    .collect()
            };
            let mut record = SafetyRecord {
                step,
                team: team.id,
                vicinity_fires: vicinity.len() as u32,
                recruited: 0,
                feasible: vicinity.is_empty(),
                confidence: 1.0,
            };
            if !vicinity.is_empty() && !pool.is_empty() {
                let plan = coordination::recruit_and_partition(&vicinity, &pool, team, &self.ctx)?;
                let waypoints: usize = plan.segments.iter().map(|s| s.report.waypoints.len()).sum();
                record.recruited = plan.recruited() as u32;
                record.feasible = plan.feasible;
                record.confidence = bounds::bound_confidence(waypoints, self.cfg.alpha_conf).0;
                if dispatch {
                    for seg in &plan.segments {
                        let agent = self
                            .agents
                            .iter_mut()
                            .find(|a| a.id == seg.uav)
                            .expect("pool member");
                        agent.mode = UavMode::Safety;
                        agent.team = Some(team.id);
                        let route: Vec<RouteStop> = seg
                            .report
                            .tour
                            .order
                            .iter()
                            .map(|&w| RouteStop::from(seg.report.waypoints[w].clone()))
                            .collect();
                        agent.assign_route(route);
                    }
                }
            }
            self.metrics.safety.push(record);
        }
        let after: Vec<UavMode> = self.agents.iter().map(|a| a.mode).collect();
        if before != after {
            coordination::request_repartition(&mut self.agents);
        }
        Ok(())
    }

    pub fn finish(self) -> RunMetrics {
        self.metrics
    }
}

/// Run a scenario for its configured duration.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunMetrics> {
    let mut sim = Simulation::new(cfg)?;
    for _ in 0..cfg.duration {
        sim.step()?;
    }
    Ok(sim.finish())
}
