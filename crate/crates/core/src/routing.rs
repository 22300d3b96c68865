//! Waypoint reduction and tour construction over a complete Euclidean graph.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{distance, smallest_enclosing_circle, Point};
use crate::FireId;

/// Improvement below this is treated as zero so float noise cannot cycle.
const IMPROVE_EPS: f64 = 1e-9;

/// Default pass budget for [`k_opt_improve`].
pub const DEFAULT_MAX_PASSES: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mst {
    /// Edges as `(smaller index, larger index)`, in insertion order.
    pub edges: Vec<(usize, usize)>,
    pub length: f64,
}

/// Minimum spanning tree (Kruskal). Ties are broken by
/// `(weight, smaller id, larger id)`, so the tree is unique.
pub fn build_mst(nodes: &[Point]) -> Mst {
    let n = nodes.len();
    let mut candidates = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            candidates.push((distance(&nodes[i], &nodes[j]), i, j));
        }
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }

    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    let mut length = 0.0;
    for (w, i, j) in candidates {
        let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
        if ri != rj {
            parent[ri.max(rj)] = ri.min(rj);
            edges.push((i, j));
            length += w;
            if edges.len() + 1 == n {
                break;
            }
        }
    }
    Mst { edges, length }
}

/// A closed cycle visiting every node once, starting at `order[0]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tour {
    pub order: Vec<usize>,
    pub length: f64,
}

impl Tour {
    pub fn new(order: Vec<usize>, nodes: &[Point]) -> Tour {
        let length = cycle_length(&order, nodes);
        Tour { order, length }
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }
}

/// Length of the closed cycle through `order`.
pub fn cycle_length(order: &[usize], nodes: &[Point]) -> f64 {
    if order.len() < 2 {
        return 0.0;
    }
    path_length(order, nodes) + distance(&nodes[order[order.len() - 1]], &nodes[order[0]])
}

/// Length of the open path through `order`.
pub fn path_length(order: &[usize], nodes: &[Point]) -> f64 {
    order
        .windows(2)
        .map(|w| distance(&nodes[w[0]], &nodes[w[1]]))
        .sum()
}

/// Preorder depth-first walk of the tree from node 0, children visited in
/// ascending index order. The shortcut walk is at most twice the MST.
pub fn tour_from_mst(nodes: &[Point], mst: &Mst) -> Tour {
    let n = nodes.len();
    if n == 0 {
        return Tour {
            order: Vec::new(),
            length: 0.0,
        };
    }
    let mut adjacency = vec![Vec::new(); n];
    for &(i, j) in &mst.edges {
        adjacency[i].push(j);
        adjacency[j].push(i);
    }
    for list in &mut adjacency {
        list.sort_unstable();
    }
    let mut seen = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut stack = vec![0usize];
    while let Some(v) = stack.pop() {
        if seen[v] {
            continue;
        }
        seen[v] = true;
        order.push(v);
        stack.extend(adjacency[v].iter().rev().filter(|&&w| !seen[w]));
    }
    Tour::new(order, nodes)
}

/// One first-improvement 2-opt scan. Returns whether anything changed.
fn two_opt_pass(order: &mut [usize], nodes: &[Point]) -> bool {
    let n = order.len();
    let d = |a: usize, b: usize| distance(&nodes[a], &nodes[b]);
    let mut improved = false;
    for i in 0..n.saturating_sub(2) {
        for j in i + 2..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            let (a, b) = (order[i], order[i + 1]);
            let (c, e) = (order[j], order[(j + 1) % n]);
            let delta = d(a, c) + d(b, e) - d(a, b) - d(c, e);
            if delta < -IMPROVE_EPS {
                order[i + 1..=j].reverse();
                improved = true;
            }
        }
    }
    improved
}

/// One first-improvement scan of segment swaps: the pure 3-opt
/// reconnection `A B C -> A C B` that keeps both segments' direction.
fn segment_swap_pass(order: &mut [usize], nodes: &[Point]) -> bool {
    let n = order.len();
    let d = |a: usize, b: usize| distance(&nodes[a], &nodes[b]);
    let mut improved = false;
    for i in 0..n.saturating_sub(3) {
        for j in i + 1..n - 1 {
            for k in j + 1..n {
                let a = order[i];
                let (b1, b2) = (order[i + 1], order[j]);
                let (c1, c2) = (order[j + 1], order[k]);
                let e = order[(k + 1) % n];
                if e == a {
                    continue;
                }
                let delta = d(a, c1) + d(c2, b1) + d(b2, e) - d(a, b1) - d(b2, c1) - d(c2, e);
                if delta < -IMPROVE_EPS {
                    order[i + 1..=k].rotate_left(j - i);
                    improved = true;
                }
            }
        }
    }
    improved
}

/// Local search over the cycle with the first node held fixed.
///
/// `k = 2` runs 2-opt until no improving exchange remains. `k = 3` also
/// polishes with segment swaps, returning to 2-opt after each improving
/// swap scan. Both stop after `max_passes` scans.
pub fn k_opt_improve(tour: &Tour, nodes: &[Point], k: u8, max_passes: usize) -> Result<Tour> {
    if !(2..=3).contains(&k) {
        return Err(Error::Domain(format!("k-opt supports k in {{2, 3}}, got {k}")));
    }
    let mut order = tour.order.clone();
    let mut passes = 0;
    'outer: while passes < max_passes {
        loop {
            if passes >= max_passes {
                break 'outer;
            }
            passes += 1;
            if !two_opt_pass(&mut order, nodes) {
                break;
            }
        }
        if k == 2 || passes >= max_passes {
            break;
        }
        passes += 1;
        if !segment_swap_pass(&mut order, nodes) {
            break;
        }
    }
    let improved = Tour::new(order, nodes);
    // Never hand back something longer than the input, even under float noise.
    Ok(if improved.length <= tour.length {
        improved
    } else {
        tour.clone()
    })
}

/// MST tour polished by 2-opt and a segment-swap pass.
pub fn plan_tour(nodes: &[Point]) -> Tour {
    let mst = build_mst(nodes);
    let tour = tour_from_mst(nodes, &mst);
    k_opt_improve(&tour, nodes, 3, DEFAULT_MAX_PASSES).expect("k = 3 is supported")
}

/// A point whose sensing disk covers several fire points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteinerWaypoint {
    pub position: Point,
    pub members: Vec<FireId>,
}

/// Greedy close-enough reduction.
///
/// Fires are taken in ascending id order; each joins the nearest existing
/// group that can still be enclosed by a circle of radius `g/2`, otherwise
/// starts its own. Waypoints sit at the smallest enclosing circle centre.
pub fn steiner_reduce(fires: &[(FireId, Point)], g: f64) -> Vec<SteinerWaypoint> {
    let radius = g.max(0.0) / 2.0;
    let mut sorted: Vec<(FireId, Point)> = fires.to_vec();
    sorted.sort_by_key(|f| f.0);

    struct Group {
        ids: Vec<FireId>,
        points: Vec<Point>,
        center: Point,
    }
    let mut groups: Vec<Group> = Vec::new();
    for (id, p) in sorted {
        let mut by_distance: Vec<(f64, usize)> = groups
            .iter()
            .enumerate()
            .map(|(k, grp)| (distance(&grp.center, &p), k))
            .collect();
        by_distance.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut joined = false;
        for (_, k) in by_distance {
            let mut trial = groups[k].points.clone();
            trial.push(p);
            let circle = smallest_enclosing_circle(&trial).expect("non-empty");
            if trial.iter().all(|q| distance(q, &circle.center) <= radius) {
                let grp = &mut groups[k];
                grp.ids.push(id);
                grp.points = trial;
                grp.center = circle.center;
                joined = true;
                break;
            }
        }
        if !joined {
            groups.push(Group {
                ids: vec![id],
                points: vec![p],
                center: p,
            });
        }
    }
    groups
        .into_iter()
        .map(|grp| SteinerWaypoint {
            position: grp.center,
            members: grp.ids,
        })
        .collect()
}

/// Cut a cycle into `parts` contiguous open paths of near-equal length.
///
/// Nodes are assigned by their arc position along the cycle (starting at
/// `order[0]`) in units of `length / parts`, adjusted so that no part is
/// left empty. Returned segments hold node indices in walk order.
pub fn partition_path(tour: &Tour, nodes: &[Point], parts: usize) -> Result<Vec<Vec<usize>>> {
    let n = tour.order.len();
    if parts == 0 || parts > n {
        return Err(Error::InvalidSplit { parts, nodes: n });
    }
    let share = tour.length / parts as f64;
    let mut segments = vec![Vec::new(); parts];
    let mut position = 0.0;
    let mut prev = 0usize;
    for (i, &node) in tour.order.iter().enumerate() {
        if i > 0 {
            position += distance(&nodes[tour.order[i - 1]], &nodes[node]);
        }
        let raw = if share > 0.0 {
            // tolerance so a node sitting exactly on a cut opens the next part
            (position / share + 1e-9).floor() as usize
        } else {
            0
        };
        let seg = if i == 0 {
            0
        } else {
            let lo = prev.max((parts + i).saturating_sub(n));
            let hi = (prev + 1).min(parts - 1);
            raw.clamp(lo, hi)
        };
        segments[seg].push(node);
        prev = seg;
    }
    Ok(segments)
}
