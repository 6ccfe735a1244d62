//! Brute-force route oracle: array-scan Dijkstra over entered roads with
//! the same lexicographic road-id tie-break, plus the degree-based turn rule.

use sdnloop::planner::{plan_route_with, PlanOptions, TurnDirection};
use sdnloop::world::{LaneLocation, MapGraph, RoadEnd};

use super::{random_graph, GenGraph};

/// Plain road record for the oracle: length, start and end headings in
/// degrees, and allowed successors.
pub struct OracleRoad {
    pub id: String,
    pub length: f64,
    pub start_deg: f64,
    pub end_deg: f64,
    pub exits: Vec<usize>,
}

pub fn classify_deg(inbound: f64, outbound: f64) -> &'static str {
    let mut d = (outbound - inbound) % 360.0;
    if d <= -180.0 {
        d += 360.0;
    }
    if d > 180.0 {
        d -= 360.0;
    }
    let d = (d * 1e6).round() / 1e6;
    if d.abs() < 30.0 {
        "straight"
    } else if (30.0..150.0).contains(&d) {
        "left"
    } else if d > -150.0 && d <= -30.0 {
        "right"
    } else {
        "uturn"
    }
}

/// Array-scan Dijkstra over "entered road" nodes with (cost, id path) labels.
pub fn oracle(
    roads: &[OracleRoad],
    start: usize,
    start_s: f64,
    target: usize,
    target_s: f64,
) -> Option<(Vec<&'static str>, f64)> {
    if start == target && target_s >= start_s {
        return Some((Vec::new(), target_s - start_s));
    }
    let n = roads.len();
    let mut label: Vec<Option<(f64, Vec<String>, Vec<usize>)>> = vec![None; n];
    let mut fixed = vec![false; n];
    let better = |a: &(f64, Vec<String>, Vec<usize>), b: &Option<(f64, Vec<String>, Vec<usize>)>| match b {
        None => true,
        Some(b) => a.0 < b.0 || (a.0 == b.0 && a.1 < b.1),
    };
    for &e in &roads[start].exits {
        let cand = (roads[start].length - start_s, vec![roads[start].id.clone(), roads[e].id.clone()], vec![start, e]);
        if better(&cand, &label[e]) {
            label[e] = Some(cand);
        }
    }
    loop {
        let mut pick: Option<usize> = None;
        for v in 0..n {
            if fixed[v] || label[v].is_none() {
                continue;
            }
            if pick.is_none_or(|p| better(label[v].as_ref().unwrap(), &label[p])) {
                pick = Some(v);
            }
        }
        let u = pick?;
        fixed[u] = true;
        let (cost, ids, seq) = label[u].clone().unwrap();
        if u == target {
            let dirs = seq.windows(2).map(|w| classify_deg(roads[w[0]].end_deg, roads[w[1]].start_deg)).collect();
            return Some((dirs, cost + target_s));
        }
        for &e in &roads[u].exits {
            if fixed[e] {
                continue;
            }
            let mut ids2 = ids.clone();
            ids2.push(roads[e].id.clone());
            let mut seq2 = seq.clone();
            seq2.push(e);
            let cand = (cost + roads[u].length, ids2, seq2);
            if better(&cand, &label[e]) {
                label[e] = Some(cand);
            }
        }
    }
}

pub fn oracle_roads_from_gen(g: &GenGraph) -> Vec<OracleRoad> {
    g.roads
        .iter()
        .enumerate()
        .map(|(i, r)| OracleRoad {
            id: r.id.clone(),
            length: r.length as f64,
            start_deg: r.heading_deg as f64,
            end_deg: r.heading_deg as f64,
            exits: g.exits(i),
        })
        .collect()
}

pub fn oracle_roads_from_map(map: &MapGraph) -> Vec<OracleRoad> {
    let doc = map.document();
    let idx = |id: &str| doc.roads.iter().position(|r| r.id == id).unwrap();
    let deg = |a: [f64; 2], b: [f64; 2]| (b[1] - a[1]).atan2(b[0] - a[0]).to_degrees();
    doc.roads
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let c = &r.centerline;
            let mut exits: Vec<usize> = doc
                .junctions
                .iter()
                .flat_map(|j| j.connections.iter())
                .filter(|c| c.from_road == r.id && c.from_end == RoadEnd::End)
                .map(|c| idx(&c.to_road))
                .collect();
            exits.sort();
            exits.dedup();
            OracleRoad {
                id: r.id.clone(),
                length: map.roads()[i].length(),
                start_deg: deg(c[0], c[1]),
                end_deg: deg(c[c.len() - 2], c[c.len() - 1]),
                exits,
            }
        })
        .collect()
}

pub fn labels(d: &[TurnDirection]) -> Vec<&'static str> {
    d.iter().map(|t| t.label()).collect()
}

pub fn at(road: &str, s: f64) -> LaneLocation {
    LaneLocation { road: road.into(), lane: 1, s, offset: 0.0 }
}

/// Runs one random instance and returns whether it matched the oracle.
pub fn random_case(seed: u64) -> Result<(), String> {
    let g = random_graph(seed, 50);
    assert!(g.junction_count <= 50);
    let map = MapGraph::from_document(g.doc.clone()).map_err(|e| format!("seed {seed}: {e}"))?;
    let roads = oracle_roads_from_gen(&g);
    let mut rng_state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    let mut next = |m: u64| {
        rng_state = rng_state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (rng_state >> 33) % m
    };
    let start = next(g.roads.len() as u64) as usize;
    let start_s = 1 + next((g.roads[start].length - 1) as u64) as i64;
    let lm = &g.landmarks[next(g.landmarks.len() as u64) as usize];
    let heading = (g.roads[start].heading_deg as f64).to_radians();
    let route =
        plan_route_with(&map, &at(&g.roads[start].id, start_s as f64), heading, &lm.name, PlanOptions::default())
            .map_err(|e| format!("seed {seed}: {e}"))?;
    let (dirs, cost) = oracle(&roads, start, start_s as f64, lm.road, lm.s as f64)
        .ok_or(format!("seed {seed}: oracle unreachable"))?;
    if labels(&route.directions) != dirs {
        return Err(format!("seed {seed}: got {:?}, oracle {:?}", labels(&route.directions), dirs));
    }
    if (route.cost - cost).abs() > 1e-6 {
        return Err(format!("seed {seed}: cost {} vs oracle {cost}", route.cost));
    }
    if route.directions.len() != route.roads.len() - 1 {
        return Err(format!("seed {seed}: one direction per junction violated"));
    }
    Ok(())
}
