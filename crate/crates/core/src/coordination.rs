//! Human-safety recruitment and distributed coverage.
//!
//! Both controllers follow a snapshot-and-command contract: they read
//! immutable tracks and agent poses, compute commands, and the commands are
//! applied afterwards in ascending agent id order.

use nalgebra::Vector3;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::aekf::TrackEstimate;
use crate::bounds::{self, BoundInputs, BoundResult, FleetParams, UrrMode};
use crate::error::{Error, Result};
use crate::fire::{EllipseParams, FireCase};
use crate::geometry::{centroid, distance, smallest_enclosing_circle, Point};
use crate::routing::{self, SteinerWaypoint, Tour};
use crate::FireId;

/// URR values up to this far above one still count as safe.
pub const URR_TOLERANCE: f64 = 1e-12;

/// A tracked fire point.
#[derive(Debug, Clone, PartialEq)]
pub struct FireTrack {
    pub id: FireId,
    pub estimate: TrackEstimate,
}

impl FireTrack {
    pub fn position(&self) -> Point {
        self.estimate.mean.fire_position()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HumanTeam {
    pub id: u64,
    pub position: Point,
    pub vicinity_radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UavMode {
    #[default]
    Coverage,
    Safety,
    Idle,
}

/// One stop of a route: the fires it covers and where it was planned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteStop {
    pub members: Vec<FireId>,
    pub position: Point,
}

impl From<SteinerWaypoint> for RouteStop {
    fn from(w: SteinerWaypoint) -> Self {
        RouteStop {
            members: w.members,
            position: w.position,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UavAgent {
    pub id: u64,
    /// `(px, py, pz)` in metres.
    pub pose: Vector3<f64>,
    pub speed: f64,
    pub half_angle: f64,
    pub mode: UavMode,
    /// Closed loop of stops; flown in order and repeated.
    pub route: Vec<RouteStop>,
    pub next_stop: usize,
    /// Step at which the coverage partition is revised.
    pub replan_deadline: u64,
    /// Team served while in safety mode.
    pub team: Option<u64>,
}

impl UavAgent {
    pub fn new(id: u64, position: Point, fleet: &FleetParams) -> Self {
        UavAgent {
            id,
            pose: Vector3::new(position.x, position.y, fleet.altitude),
            speed: fleet.speed,
            half_angle: fleet.half_angle,
            mode: UavMode::Coverage,
            route: Vec::new(),
            next_stop: 0,
            replan_deadline: 0,
            team: None,
        }
    }

    pub fn position(&self) -> Point {
        Point::new(self.pose.x, self.pose.y)
    }

    pub fn fleet(&self) -> FleetParams {
        FleetParams {
            speed: self.speed,
            altitude: self.pose.z,
            half_angle: self.half_angle,
        }
    }

    pub fn fov_width(&self) -> f64 {
        bounds::fov_width(&self.fleet())
    }

    /// Whether `p` lies in the axis-aligned footprint square under the UAV.
    pub fn sees(&self, p: &Point) -> bool {
        in_fov(&self.pose, self.fov_width(), p)
    }

    /// Replace the route, starting from the stop nearest the UAV.
    pub fn assign_route(&mut self, route: Vec<RouteStop>) {
        let here = self.position();
        self.next_stop = route
            .iter()
            .enumerate()
            .min_by(|a, b| {
                distance(&a.1.position, &here)
                    .total_cmp(&distance(&b.1.position, &here))
                    .then(a.0.cmp(&b.0))
            })
            .map_or(0, |(k, _)| k);
        self.route = route;
    }

    pub fn clear_route(&mut self) {
        self.route.clear();
        self.next_stop = 0;
    }
}

/// Footprint test: `|q - p| <= g/2` on both axes.
pub fn in_fov(pose: &Vector3<f64>, g: f64, p: &Point) -> bool {
    let half = g / 2.0;
    (p.x - pose.x).abs() <= half && (p.y - pose.y).abs() <= half
}

/// Settings shared by the safety and coverage controllers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanningContext {
    pub case: FireCase,
    pub alpha_conf: f64,
    pub dt: f64,
    pub params: EllipseParams,
    pub urr_mode: UrrMode,
    /// Longest time between coverage repartitions, in steps.
    pub max_replan_steps: u64,
}

/// Tracks whose estimated position is within the team's vicinity radius.
pub fn vicinity_fires<'a>(tracks: &'a [FireTrack], team: &HumanTeam) -> Vec<&'a FireTrack> {
    tracks
        .iter()
        .filter(|t| distance(&t.position(), &team.position) <= team.vicinity_radius)
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    pub pass: bool,
    /// URR per fire, in input order; `+∞` when the bound is infeasible.
    pub urr: Vec<(FireId, f64)>,
    pub bound: BoundResult,
    pub waypoints: Vec<SteinerWaypoint>,
    /// Cycle over `waypoints`.
    pub tour: Tour,
}

impl FeasibilityReport {
    pub fn worst_urr(&self) -> f64 {
        self.urr.iter().map(|u| u.1).fold(0.0, f64::max)
    }
}

/// Footprint width used to group fires into shared waypoints: `g` less a
/// confidence margin of `z` position standard deviations on each side, so
/// each member stays in view at the planning confidence level.
pub fn grouping_width(tracks: &[&FireTrack], g: f64, alpha_conf: f64) -> f64 {
    let sigma = tracks
        .iter()
        .map(|t| {
            let p = t.estimate.cov.fixed_view::<2, 2>(0, 0).into_owned();
            p.symmetric_eigenvalues().max().max(0.0).sqrt()
        })
        .fold(0.0, f64::max);
    (g - 2.0 * bounds::upper_quantile(alpha_conf) * sigma).max(0.0)
}

/// Plan one UAV's tour over `tracks` and certify it.
///
/// Waypoints come from the Steiner reduction with the UAV's footprint
/// narrowed by [`grouping_width`], the tour from the MST; the case bound gives the revisit time and every fire
/// must keep URR <= 1 over that horizon. Tracks must be fresh from the
/// prediction step.
pub fn urr_feasibility_test(
    tracks: &[&FireTrack],
    fleet: &FleetParams,
    ctx: &PlanningContext,
) -> Result<FeasibilityReport> {
    let g = bounds::fov_width(fleet);
    let fires: Vec<(FireId, Point)> = tracks.iter().map(|t| (t.id, t.position())).collect();
    let waypoints = routing::steiner_reduce(&fires, grouping_width(tracks, g, ctx.alpha_conf));
    let nodes: Vec<Point> = waypoints.iter().map(|w| w.position).collect();
    let mst = routing::build_mst(&nodes);
    let tour = routing::k_opt_improve(
        &routing::tour_from_mst(&nodes, &mst),
        &nodes,
        3,
        routing::DEFAULT_MAX_PASSES,
    )?;

    let estimates: Vec<&TrackEstimate> = tracks.iter().map(|t| &t.estimate).collect();
    let zeta = if ctx.case == FireCase::Stationary {
        0.0
    } else {
        bounds::worst_case_speed(&estimates, ctx.alpha_conf, &ctx.params)?
    };
    let inputs = BoundInputs {
        mst_cost: mst.length,
        n_fires: waypoints.len(),
        zeta_alpha: zeta,
        fov_width: g,
        alpha_conf: ctx.alpha_conf,
    };
    let bound = bounds::traverse_bound(ctx.case, &inputs, fleet);
    let urr = tracks
        .iter()
        .map(|t| Ok((t.id, bounds::urr(&t.estimate, bound.t_ub, ctx.dt, ctx.urr_mode)?)))
        .collect::<Result<Vec<_>>>()?;
    let pass = bound.feasible && urr.iter().all(|u| u.1 <= 1.0 + URR_TOLERANCE);
    Ok(FeasibilityReport {
        pass,
        urr,
        bound,
        waypoints,
        tour,
    })
}

/// One UAV's share of a team's vicinity.
#[derive(Debug, Clone, PartialEq)]
pub struct SafetySegment {
    pub uav: u64,
    pub fires: Vec<FireId>,
    pub report: FeasibilityReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MissionPlan {
    pub team: u64,
    pub segments: Vec<SafetySegment>,
    pub feasible: bool,
}

impl MissionPlan {
    /// UAVs committed to the team.
    pub fn recruited(&self) -> usize {
        self.segments.len()
    }

    /// URR of every vicinity fire, ordered by fire id.
    pub fn urr(&self) -> Vec<(FireId, f64)> {
        let mut all: Vec<(FireId, f64)> = self
            .segments
            .iter()
            .flat_map(|s| s.report.urr.iter().copied())
            .collect();
        all.sort_by_key(|u| u.0);
        all
    }
}

fn nearest_uav(pool: &[UavAgent], taken: &[bool], target: &Point) -> Option<usize> {
    (0..pool.len()).filter(|&k| !taken[k]).min_by(|&a, &b| {
        distance(&pool[a].position(), target)
            .total_cmp(&distance(&pool[b].position(), target))
            .then(pool[a].id.cmp(&pool[b].id))
    })
}

/// Recruit UAVs for one team until every vicinity fire passes its URR test.
///
/// Starts with the UAV nearest the team. While a segment fails and UAVs
/// remain, the segment with the worst URR (ties to the lower segment index)
/// is cut in two along its tour and the second half goes to the idle UAV
/// nearest to it. With no vicinity fires the plan is empty and feasible.
pub fn recruit_and_partition(
    tracks: &[&FireTrack],
    pool: &[UavAgent],
    team: &HumanTeam,
    ctx: &PlanningContext,
) -> Result<MissionPlan> {
    if tracks.is_empty() {
        return Ok(MissionPlan {
            team: team.id,
            segments: Vec::new(),
            feasible: true,
        });
    }
    let mut taken = vec![false; pool.len()];
    let first = nearest_uav(pool, &taken, &team.position).ok_or(Error::NoUavAvailable)?;
    taken[first] = true;

    let by_id = |ids: &[FireId]| -> Vec<&FireTrack> {
        tracks.iter().copied().filter(|t| ids.contains(&t.id)).collect()
    };
    let evaluate = |uav: usize, fires: Vec<FireId>| -> Result<SafetySegment> {
        let report = urr_feasibility_test(&by_id(&fires), &pool[uav].fleet(), ctx)?;
        Ok(SafetySegment {
            uav: pool[uav].id,
            fires,
            report,
        })
    };

    let mut owners = vec![first];
    let mut segments = vec![evaluate(first, tracks.iter().map(|t| t.id).collect())?];
    loop {
        let worst = segments
            .iter()
            .enumerate()
            .filter(|(_, s)| !s.report.pass)
            .max_by(|a, b| {
                a.1.report
                    .worst_urr()
                    .total_cmp(&b.1.report.worst_urr())
                    .then(b.0.cmp(&a.0))
            })
            .map(|(k, _)| k);
        let Some(k) = worst else {
            return Ok(MissionPlan {
                team: team.id,
                segments,
                feasible: true,
            });
        };
        let report = &segments[k].report;
        let nodes: Vec<Point> = report.waypoints.iter().map(|w| w.position).collect();
        let halves = match routing::partition_path(&report.tour, &nodes, 2) {
            Ok(h) => h,
            // a single waypoint cannot be split further
            Err(Error::InvalidSplit { .. }) => break,
            Err(e) => return Err(e),
        };
        let members = |half: &[usize]| -> Vec<FireId> {
            let mut ids: Vec<FireId> = half
                .iter()
                .flat_map(|&w| report.waypoints[w].members.iter().copied())
                .collect();
            ids.sort_unstable();
            ids
        };
        let (keep, give) = (members(&halves[0]), members(&halves[1]));
        let give_center = centroid(halves[1].iter().map(|&w| &nodes[w])).expect("non-empty half");
        let Some(recruit) = nearest_uav(pool, &taken, &give_center) else {
            break;
        };
        taken[recruit] = true;
        segments[k] = evaluate(owners[k], keep)?;
        segments.insert(k + 1, evaluate(recruit, give)?);
        owners.insert(k + 1, recruit);
    }
    Ok(MissionPlan {
        team: team.id,
        segments,
        feasible: false,
    })
}

/// K-means with k-means++ seeding and at most `max_iter` Lloyd iterations.
///
/// Returns the centres and each point's cluster label. `k` is clamped to
/// the number of points.
pub fn kmeans<R: Rng + ?Sized>(
    points: &[Point],
    k: usize,
    max_iter: usize,
    rng: &mut R,
) -> (Vec<Point>, Vec<usize>) {
    let k = k.min(points.len());
    if k == 0 {
        return (Vec::new(), vec![0; points.len()]);
    }
    let mut centers = vec![points[rng.random_range(0..points.len())]];
    while centers.len() < k {
        let d2: Vec<f64> = points
            .iter()
            .map(|p| {
                centers
                    .iter()
                    .map(|c| (p - c).norm_squared())
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut u = rng.random_range(0.0..total);
            let mut chosen = points.len() - 1;
            for (i, w) in d2.iter().enumerate() {
                if u < *w {
                    chosen = i;
                    break;
                }
                u -= w;
            }
            chosen
        } else {
            rng.random_range(0..points.len())
        };
        centers.push(points[pick]);
    }

    let nearest = |p: &Point, centers: &[Point]| -> usize {
        (0..centers.len())
            .min_by(|&a, &b| {
                (p - centers[a])
                    .norm_squared()
                    .total_cmp(&(p - centers[b]).norm_squared())
                    .then(a.cmp(&b))
            })
            .expect("k >= 1")
    };
    let mut labels: Vec<usize> = points.iter().map(|p| nearest(p, &centers)).collect();
    for _ in 0..max_iter {
        for (c, center) in centers.iter_mut().enumerate() {
            if let Some(m) = centroid(
                points
                    .iter()
                    .zip(&labels)
                    .filter(|(_, &l)| l == c)
                    .map(|(p, _)| p),
            ) {
                *center = m;
            }
        }
        let next: Vec<usize> = points.iter().map(|p| nearest(p, &centers)).collect();
        if next == labels {
            break;
        }
        labels = next;
    }
    (centers, labels)
}

/// Minimum-cost assignment of every row to a distinct column
/// (Hungarian method with potentials). Requires `rows <= cols`.
pub fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    let m = cost[0].len();
    assert!(n <= m, "more rows than columns");
    // 1-based arrays as in the classical formulation; column 0 is a sentinel.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut row_of = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=m {
        if row_of[j] > 0 {
            assignment[row_of[j] - 1] = j - 1;
        }
    }
    assignment
}

/// Partition `nodes` among UAVs at `uavs`.
///
/// K-means with `k = |uavs|` (at most the node count), then the cluster
/// centres are matched one-to-one to UAVs minimising total distance.
/// Returns node indices per UAV; UAVs left without a cluster get none.
pub fn cluster_and_assign<R: Rng + ?Sized>(nodes: &[Point], uavs: &[Point], rng: &mut R) -> Vec<Vec<usize>> {
    let mut parts = vec![Vec::new(); uavs.len()];
    if uavs.is_empty() || nodes.is_empty() {
        return parts;
    }
    let (centers, labels) = kmeans(nodes, uavs.len(), 100, rng);
    let cost: Vec<Vec<f64>> = centers
        .iter()
        .map(|c| uavs.iter().map(|u| distance(c, u)).collect())
        .collect();
    let assignment = hungarian(&cost);
    for (node, &label) in labels.iter().enumerate() {
        parts[assignment[label]].push(node);
    }
    parts
}

/// Current target of a stop: the centre of its members' estimates.
fn stop_target(stop: &RouteStop, tracks: &[FireTrack]) -> Point {
    let pts: Vec<Point> = stop
        .members
        .iter()
        .filter_map(|id| tracks.iter().find(|t| t.id == *id))
        .map(FireTrack::position)
        .collect();
    smallest_enclosing_circle(&pts).map_or(stop.position, |c| c.center)
}

/// Mark every coverage agent for repartition on the next coverage step.
pub fn request_repartition(agents: &mut [UavAgent]) {
    for a in agents.iter_mut().filter(|a| a.mode == UavMode::Coverage) {
        a.replan_deadline = 0;
    }
}

/// Re-cluster the tracks over the coverage agents and give each a route.
///
/// Each agent's partition lives for one guaranteed cycle: the flight to its
/// first stop plus the partition's traverse bound, clamped to
/// `[1, max_replan_steps]` steps. Agents left without nodes expire at once.
pub fn plan_coverage<R: Rng + ?Sized>(
    agents: &mut [UavAgent],
    tracks: &[FireTrack],
    ctx: &PlanningContext,
    step: u64,
    rng: &mut R,
) -> Result<()> {
    let members: Vec<usize> = (0..agents.len())
        .filter(|&k| agents[k].mode == UavMode::Coverage)
        .collect();
    let nodes: Vec<Point> = tracks.iter().map(FireTrack::position).collect();
    let positions: Vec<Point> = members.iter().map(|&k| agents[k].position()).collect();
    let parts = cluster_and_assign(&nodes, &positions, rng);
    for (&k, part) in members.iter().zip(parts) {
        let agent = &mut agents[k];
        if part.is_empty() {
            agent.clear_route();
            agent.replan_deadline = step;
            continue;
        }
        let assigned: Vec<&FireTrack> = part.iter().map(|&i| &tracks[i]).collect();
        let report = urr_feasibility_test(&assigned, &agent.fleet(), ctx)?;
        let route = report
            .tour
            .order
            .iter()
            .map(|&w| RouteStop::from(report.waypoints[w].clone()))
            .collect();
        agent.assign_route(route);
        let transit = distance(&agent.position(), &agent.route[agent.next_stop].position) / agent.speed;
        let steps = if report.bound.feasible {
            bounds::horizon_steps(transit + report.bound.t_ub, ctx.dt).min(ctx.max_replan_steps)
        } else {
            ctx.max_replan_steps
        };
        agent.replan_deadline = step + steps.max(1);
    }
    Ok(())
}

/// Pose and stop index after one step along the route.
fn advance(agent: &UavAgent, tracks: &[FireTrack], dt: f64) -> (Vector3<f64>, usize) {
    if agent.mode == UavMode::Idle || agent.route.is_empty() {
        return (agent.pose, agent.next_stop);
    }
    let stop = agent.next_stop % agent.route.len();
    let target = stop_target(&agent.route[stop], tracks);
    let here = agent.position();
    let gap = target - here;
    let reach = agent.speed * dt;
    let dist = gap.norm();
    if dist <= reach {
        let pose = Vector3::new(target.x, target.y, agent.pose.z);
        (pose, (stop + 1) % agent.route.len())
    } else {
        let p = here + gap * (reach / dist);
        (Vector3::new(p.x, p.y, agent.pose.z), stop)
    }
}

/// One coverage step for all agents.
///
/// Repartitions first once every coverage agent's partition has expired, then
/// moves every non-idle agent toward its next stop at speed `v`. Returns
/// whether a repartition happened.
pub fn coverage_step<R: Rng + ?Sized>(
    agents: &mut [UavAgent],
    tracks: &[FireTrack],
    ctx: &PlanningContext,
    step: u64,
    rng: &mut R,
) -> Result<bool> {
    let mut coverage = agents.iter().filter(|a| a.mode == UavMode::Coverage).peekable();
    let due = coverage.peek().is_some() && coverage.all(|a| a.replan_deadline <= step);
    if due {
        plan_coverage(agents, tracks, ctx, step, rng)?;
    }
    let commands: Vec<(Vector3<f64>, usize)> = agents.iter().map(|a| advance(a, tracks, ctx.dt)).collect();
    for (agent, (pose, next)) in agents.iter_mut().zip(commands) {
        agent.pose = pose;
        agent.next_stop = next;
    }
    Ok(due)
}
