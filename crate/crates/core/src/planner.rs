//! Route-planner tool: shortest directed road path to a landmark, reported as
//! one turn direction per junction.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::wrap_angle;
use crate::world::{locate, normalize_name, position_of, LaneLocation, MapGraph, RoadIdx};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TurnDirection {
    Left,
    Right,
    Straight,
    Uturn,
}

impl TurnDirection {
    pub fn label(self) -> &'static str {
        match self {
            TurnDirection::Left => "left",
            TurnDirection::Right => "right",
            TurnDirection::Straight => "straight",
            TurnDirection::Uturn => "uturn",
        }
    }
}

impl fmt::Display for TurnDirection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Counter-clockwise-positive heading change classification.
pub fn classify_turn(inbound: f64, outbound: f64) -> TurnDirection {
    // Snap to a 1e-9 degree grid so exact boundary angles survive the
    // radian round trip.
    let d = (wrap_angle(outbound - inbound).to_degrees() * 1e9).round() / 1e9;
    if d.abs() < 30.0 {
        TurnDirection::Straight
    } else if (30.0..150.0).contains(&d) {
        TurnDirection::Left
    } else if d > -150.0 && d <= -30.0 {
        TurnDirection::Right
    } else {
        TurnDirection::Uturn
    }
}

/// A `plan(...)` tool call; `target == None` is `plan(None)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanCall {
    pub target: Option<String>,
}

/// First `plan(<arg>)` in the text; the keyword is case-insensitive and may
/// be surrounded by prose.
pub fn parse_plan_call(text: &str) -> Option<PlanCall> {
    let lower = text.to_ascii_lowercase();
    let mut from = 0;
    while let Some(i) = lower[from..].find("plan(") {
        let start = from + i;
        // Reject identifiers that merely end in "plan", e.g. "myplan(x)".
        let word_break = lower[..start].chars().next_back().is_none_or(|c| !c.is_alphanumeric() && c != '_');
        let arg_start = start + "plan(".len();
        if let Some(len) = text[arg_start..].find(')') {
            let arg = text[arg_start..arg_start + len].trim().trim_matches(|c| c == '"' || c == '\'').trim();
            if word_break && !arg.is_empty() {
                let target = (!arg.eq_ignore_ascii_case("none")).then(|| arg.to_string());
                return Some(PlanCall { target });
            }
        }
        from = arg_start;
    }
    None
}

pub fn render_plan(directions: &[TurnDirection]) -> String {
    let labels: Vec<&str> = directions.iter().map(|d| d.label()).collect();
    format!("[{}]", labels.join(", "))
}

#[derive(Debug, Error, PartialEq)]
pub enum PlanError {
    #[error("unknown landmark {0:?}")]
    UnknownLandmark(String),
    #[error("landmark {0:?} is unreachable from road {1}")]
    Unreachable(String, String),
    #[error("invalid start location: {0}")]
    InvalidStart(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanOptions {
    /// Allow the route to begin with a U-turn onto the opposing road.
    pub allow_initial_uturn: bool,
    pub uturn_penalty: f64,
}

impl Default for PlanOptions {
    fn default() -> Self {
        Self { allow_initial_uturn: false, uturn_penalty: 40.0 }
    }
}

/// Full planner output: the chosen road sequence and its cost, in addition
/// to the directions.
#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    pub roads: Vec<RoadIdx>,
    pub directions: Vec<TurnDirection>,
    /// Driving distance from the start to the landmark anchor, m.
    pub cost: f64,
    pub initial_uturn: bool,
}

#[derive(Debug, Clone, PartialEq)]
struct Label {
    cost: f64,
    path: Vec<String>,
}

impl Label {
    fn cmp_key(&self, other: &Label) -> Ordering {
        self.cost.total_cmp(&other.cost).then_with(|| self.path.cmp(&other.path))
    }
}

struct HeapItem {
    label: Label,
    node: usize,
}

impl PartialEq for HeapItem {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for HeapItem {}
impl PartialOrd for HeapItem {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for HeapItem {
    fn cmp(&self, o: &Self) -> Ordering {
        o.label.cmp_key(&self.label).then_with(|| o.node.cmp(&self.node))
    }
}

pub fn plan_route(
    map: &MapGraph,
    from: &LaneLocation,
    heading: f64,
    target: &str,
) -> Result<Vec<TurnDirection>, PlanError> {
    plan_route_with(map, from, heading, target, PlanOptions::default()).map(|r| r.directions)
}

/// Dijkstra over road-entry nodes. Entering road `b` from road `a` costs the
/// remaining length of `a`; ties break on the lexicographically smallest
/// road-id sequence.
pub fn plan_route_with(
    map: &MapGraph,
    from: &LaneLocation,
    heading: f64,
    target: &str,
    opts: PlanOptions,
) -> Result<Route, PlanError> {
    let lm = map.landmark(target).ok_or_else(|| PlanError::UnknownLandmark(target.to_string()))?;
    let start =
        map.road_idx(&from.road).ok_or_else(|| PlanError::InvalidStart(format!("unknown road {}", from.road)))?;
    if lm.road == start && lm.s >= from.s {
        return Ok(Route { roads: vec![start], directions: Vec::new(), cost: lm.s - from.s, initial_uturn: false });
    }

    // Seeds: (node entered, label, whether the seed is the U-turn twin).
    let mut seeds: Vec<(RoadIdx, f64, f64, bool)> = vec![(start, from.s, 0.0, false)];
    if opts.allow_initial_uturn {
        if let Some((twin, twin_s)) = opposing_road(map, from, heading) {
            seeds.push((twin, twin_s, opts.uturn_penalty, true));
        }
    }

    let n = map.roads().len();
    let mut best: Option<(Label, Vec<RoadIdx>, bool)> = None;
    for &(seed, seed_s, seed_cost, is_twin) in &seeds {
        if is_twin && lm.road == seed && lm.s >= seed_s {
            let label = Label { cost: seed_cost + (lm.s - seed_s), path: vec![map.road(seed).id.clone()] };
            consider(&mut best, label, vec![seed], true);
            continue;
        }
        // Node k is "entered road k"; the seed road is tracked separately so
        // a route may come back to it.
        let mut dist: Vec<Option<Label>> = vec![None; n];
        let mut prev: Vec<Option<usize>> = vec![None; n];
        let mut done = vec![false; n];
        let mut heap = BinaryHeap::new();
        let first = seed_cost + (map.road(seed).length() - seed_s);
        let seed_path = vec![map.road(seed).id.clone()];
        for &exit in map.exits(seed) {
            let mut path = seed_path.clone();
            path.push(map.road(exit).id.clone());
            let label = Label { cost: first, path };
            if dist[exit.0].as_ref().is_none_or(|d| label.cmp_key(d) == Ordering::Less) {
                dist[exit.0] = Some(label.clone());
                prev[exit.0] = None;
                heap.push(HeapItem { label, node: exit.0 });
            }
        }
        while let Some(HeapItem { label, node }) = heap.pop() {
            if done[node] || dist[node].as_ref() != Some(&label) {
                continue;
            }
            done[node] = true;
            if node == lm.road.0 {
                break;
            }
            let cost = label.cost + map.road(RoadIdx(node)).length();
            for &exit in map.exits(RoadIdx(node)) {
                if done[exit.0] {
                    continue;
                }
                let mut path = label.path.clone();
                path.push(map.road(exit).id.clone());
                let cand = Label { cost, path };
                if dist[exit.0].as_ref().is_none_or(|d| cand.cmp_key(d) == Ordering::Less) {
                    dist[exit.0] = Some(cand.clone());
                    prev[exit.0] = Some(node);
                    heap.push(HeapItem { label: cand, node: exit.0 });
                }
            }
        }
        if let Some(label) = dist[lm.road.0].clone() {
            let mut roads = vec![lm.road];
            let mut cur = lm.road.0;
            while let Some(p) = prev[cur] {
                roads.push(RoadIdx(p));
                cur = p;
            }
            roads.push(seed);
            roads.reverse();
            let total = Label { cost: label.cost + lm.s, path: label.path };
            consider(&mut best, total, roads, is_twin);
        }
    }

    let (label, roads, initial_uturn) =
        best.ok_or_else(|| PlanError::Unreachable(lm.name.clone(), from.road.clone()))?;
    let mut directions = Vec::with_capacity(roads.len());
    if initial_uturn {
        directions.push(TurnDirection::Uturn);
    }
    for w in roads.windows(2) {
        directions.push(classify_turn(map.road(w[0]).end_heading(), map.road(w[1]).start_heading()));
    }
    let mut all_roads = roads;
    if initial_uturn {
        all_roads.insert(0, start);
    }
    Ok(Route { roads: all_roads, directions, cost: label.cost, initial_uturn })
}

fn consider(best: &mut Option<(Label, Vec<RoadIdx>, bool)>, label: Label, roads: Vec<RoadIdx>, twin: bool) {
    let better = match best {
        None => true,
        Some((b, _, b_twin)) => match label.cost.total_cmp(&b.cost) {
            Ordering::Less => true,
            Ordering::Greater => false,
            // Equal cost: prefer the plain route, then the smaller id path.
            Ordering::Equal => (twin, &label.path) < (*b_twin, &b.path),
        },
    };
    if better {
        *best = Some((label, roads, twin));
    }
}

/// Opposing-direction road reachable by a U-turn at the current position.
pub fn opposing_road(map: &MapGraph, from: &LaneLocation, heading: f64) -> Option<(RoadIdx, f64)> {
    let pos = position_of(map, from).ok()?;
    let loc = locate(map, pos, heading + std::f64::consts::PI).ok()?;
    if loc.road == from.road {
        return None;
    }
    map.road_idx(&loc.road).map(|r| (r, loc.s))
}

/// Resolves a free-form goal mention to a landmark name on the map, if any.
pub fn resolve_landmark<'a>(map: &'a MapGraph, mention: &str) -> Option<&'a str> {
    let key = normalize_name(mention);
    map.landmarks().iter().find(|l| normalize_name(&l.name) == key).map(|l| l.name.as_str())
}
