//! Helpers shared by the integration tests: a random road-graph generator,
//! the route oracle, simulator rigs and bundled-story runners.
#![allow(dead_code)]

pub mod motion_rig;
pub mod planner_oracle;

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sdnloop::world::{ConnectionDoc, JunctionDoc, LandmarkDoc, LaneDoc, MapDocument, RoadDoc, RoadEnd, MAP_SCHEMA};

pub const JUNCTION_SETBACK: i64 = 12;
pub const CARRIAGEWAY_SHIFT: f64 = 4.0;
pub const LANE_WIDTH: f64 = 3.5;

/// Plain description of a generated graph, kept next to the JSON document so
/// oracles never need to read the library's parsed map.
#[derive(Debug, Clone)]
pub struct GenRoad {
    pub id: String,
    pub from: usize,
    pub to: usize,
    pub length: i64,
    /// Travel heading in whole degrees (0, 90, 180, 270).
    pub heading_deg: i64,
    pub lanes: usize,
}

#[derive(Debug, Clone)]
pub struct GenLandmark {
    pub name: String,
    pub road: usize,
    pub s: i64,
}

#[derive(Debug, Clone)]
pub struct GenGraph {
    pub roads: Vec<GenRoad>,
    /// Allowed (from road, to road) transitions.
    pub connections: Vec<(usize, usize)>,
    pub landmarks: Vec<GenLandmark>,
    pub junction_count: usize,
    pub doc: MapDocument,
}

impl GenGraph {
    pub fn exits(&self, road: usize) -> Vec<usize> {
        self.connections.iter().filter(|c| c.0 == road).map(|c| c.1).collect()
    }
}

fn strongly_connected(n: usize, conns: &[(usize, usize)]) -> bool {
    let reach = |forward: bool| {
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for &(a, b) in conns {
                let (x, y) = if forward { (a, b) } else { (b, a) };
                if x == u && !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
        seen.into_iter().all(|s| s)
    };
    n > 0 && reach(true) && reach(false)
}

/// Draws a strongly connected Manhattan-style graph with at most
/// `max_junctions` junctions and integer road lengths.
pub fn random_graph(seed: u64, max_junctions: usize) -> GenGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        if let Some(g) = try_graph(&mut rng, max_junctions) {
            return g;
        }
    }
}

fn try_graph(rng: &mut ChaCha8Rng, max_junctions: usize) -> Option<GenGraph> {
    const SIDE: i64 = 8;
    let target = rng.random_range(2..=max_junctions.min((SIDE * SIDE) as usize));
    let xs: Vec<i64> = (0..SIDE)
        .scan(0, |acc, _| {
            *acc += rng.random_range(60..=160);
            Some(*acc)
        })
        .collect();
    let ys: Vec<i64> = (0..SIDE)
        .scan(0, |acc, _| {
            *acc += rng.random_range(60..=160);
            Some(*acc)
        })
        .collect();

    let mut cells: Vec<(i64, i64)> = vec![(rng.random_range(0..SIDE), rng.random_range(0..SIDE))];
    let mut set: BTreeSet<(i64, i64)> = cells.iter().copied().collect();
    while cells.len() < target {
        let &(cx, cy) = &cells[rng.random_range(0..cells.len())];
        let (dx, dy) = [(1, 0), (-1, 0), (0, 1), (0, -1)][rng.random_range(0..4)];
        let nxt = (cx + dx, cy + dy);
        if (0..SIDE).contains(&nxt.0) && (0..SIDE).contains(&nxt.1) && set.insert(nxt) {
            cells.push(nxt);
        }
    }
    let index = |c: (i64, i64)| cells.iter().position(|&d| d == c);

    let mut roads: Vec<GenRoad> = Vec::new();
    let mut twins: Vec<Option<usize>> = Vec::new();
    for (i, &(cx, cy)) in cells.iter().enumerate() {
        for (dx, dy) in [(1i64, 0i64), (0, 1)] {
            let Some(j) = index((cx + dx, cy + dy)) else { continue };
            if rng.random_bool(0.15) {
                continue;
            }
            let mode = rng.random_range(0..10);
            let mut ids = Vec::new();
            for (a, b, forward) in [(i, j, true), (j, i, false)] {
                if (mode == 8 && !forward) || (mode == 9 && forward) {
                    continue;
                }
                let heading_deg = match ((dx, dy), forward) {
                    ((1, 0), true) => 0,
                    ((1, 0), false) => 180,
                    ((0, 1), true) => 90,
                    _ => 270,
                };
                let span = if dx == 1 {
                    xs[(cx + 1) as usize] - xs[cx as usize]
                } else {
                    ys[(cy + 1) as usize] - ys[cy as usize]
                };
                ids.push(roads.len());
                roads.push(GenRoad {
                    id: format!("r{}", roads.len()),
                    from: a,
                    to: b,
                    length: span - 2 * JUNCTION_SETBACK,
                    heading_deg,
                    lanes: rng.random_range(1..=2),
                });
                twins.push(None);
            }
            if ids.len() == 2 {
                twins[ids[0]] = Some(ids[1]);
                twins[ids[1]] = Some(ids[0]);
            }
        }
    }
    if roads.len() < 2 {
        return None;
    }

    let mut connections = Vec::new();
    for (a, ra) in roads.iter().enumerate() {
        let outs: Vec<usize> = (0..roads.len()).filter(|&b| roads[b].from == ra.to).collect();
        let only_twin = outs.iter().all(|&b| Some(b) == twins[a]);
        for b in outs {
            if Some(b) != twins[a] || only_twin || rng.random_bool(0.3) {
                connections.push((a, b));
            }
        }
    }
    let used: BTreeSet<usize> = roads.iter().flat_map(|r| [r.from, r.to]).collect();
    if used.len() != cells.len() || !strongly_connected(roads.len(), &connections) {
        return None;
    }

    let mut landmarks = Vec::new();
    for k in 0..rng.random_range(2..=6) {
        let road = rng.random_range(0..roads.len());
        let s = rng.random_range(5..=roads[road].length - 5);
        landmarks.push(GenLandmark { name: format!("Landmark {k}"), road, s });
    }

    let pos = |c: usize| (xs[cells[c].0 as usize] as f64, ys[cells[c].1 as usize] as f64);
    let point = |r: &GenRoad, s: f64, offset: f64| {
        let (x0, y0) = pos(r.from);
        let th = (r.heading_deg as f64).to_radians();
        let (dx, dy) = (th.cos().round(), th.sin().round());
        let (nx, ny) = (dy, -dx);
        let along = JUNCTION_SETBACK as f64 + s;
        let lateral = CARRIAGEWAY_SHIFT + offset;
        [x0 + dx * along + nx * lateral, y0 + dy * along + ny * lateral]
    };
    let lane1 = |r: &GenRoad| -((r.lanes as f64) - 1.0) / 2.0 * LANE_WIDTH;

    let doc = MapDocument {
        schema: MAP_SCHEMA.to_string(),
        id: "random".into(),
        streets: vec!["Main".into()],
        roads: roads
            .iter()
            .map(|r| RoadDoc {
                id: r.id.clone(),
                street: "Main".into(),
                centerline: vec![point(r, 0.0, 0.0), point(r, r.length as f64, 0.0)],
                lanes: vec![LaneDoc { width: LANE_WIDTH }; r.lanes],
                length_m: None,
            })
            .collect(),
        junctions: (0..cells.len())
            .map(|j| JunctionDoc {
                id: format!("J{j}"),
                position: Some(pos(j).into()),
                connections: connections
                    .iter()
                    .filter(|c| roads[c.0].to == j)
                    .map(|&(a, b)| ConnectionDoc {
                        from_road: roads[a].id.clone(),
                        from_end: RoadEnd::End,
                        to_road: roads[b].id.clone(),
                        to_end: RoadEnd::Start,
                    })
                    .collect(),
            })
            .collect(),
        landmarks: landmarks
            .iter()
            .map(|l| {
                let r = &roads[l.road];
                LandmarkDoc { name: l.name.clone(), anchor: point(r, l.s as f64, lane1(r)) }
            })
            .collect(),
        lights: Vec::new(),
        signs: Vec::new(),
    };
    Some(GenGraph { roads, connections, landmarks, junction_count: cells.len(), doc })
}

/// Bundled story with its map, ready to start a session.
pub fn bundled(name: &str) -> (std::sync::Arc<sdnloop::world::MapGraph>, sdnloop::scenario::Storyboard) {
    let story =
        sdnloop::scenario::Storyboard::from_json(sdnloop::scenario::bundled_story(name).expect("bundled story"))
            .expect("story parses");
    let map = sdnloop::assets::load_bundled_map(&story.map).expect("bundled map").expect("map loads");
    (std::sync::Arc::new(map), story)
}

/// Runs the oracle agent on a bundled story.
pub fn oracle_log(name: &str, cfg: sdnloop::config::SimConfig) -> sdnloop::scenario::SessionLog {
    let (map, story) = bundled(name);
    let session = sdnloop::harness::Session::new(map.clone(), story, cfg.clone(), "builtin:oracle", None).unwrap();
    let mut agent = sdnloop::harness::OracleAgent::new(map, cfg);
    sdnloop::harness::run_closed_loop(session, &mut agent).unwrap()
}
