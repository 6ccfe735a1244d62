//! Road-graph map: document schema, validation and lookups.
//!
//! Every road is a directed carriageway. Its lanes all travel in the
//! direction of the centerline and are numbered from the left starting at 1.
//! Two-way streets are two roads. Junction connections always leave a road
//! at its `end` and enter the next road at its `start`.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::WorldError;
use crate::geometry::{Polyline, Vec2};

pub const MAP_SCHEMA: &str = "sdnloop-map/1";

/// Landmarks must lie within this distance of some lane centerline.
pub const MAX_ANCHOR_DISTANCE: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RoadEnd {
    Start,
    End,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapDocument {
    pub schema: String,
    #[serde(default)]
    pub id: String,
    pub streets: Vec<String>,
    pub roads: Vec<RoadDoc>,
    pub junctions: Vec<JunctionDoc>,
    pub landmarks: Vec<LandmarkDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub lights: Vec<LightDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub signs: Vec<SignDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoadDoc {
    pub id: String,
    pub street: String,
    pub centerline: Vec<[f64; 2]>,
    pub lanes: Vec<LaneDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length_m: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaneDoc {
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JunctionDoc {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position: Option<[f64; 2]>,
    pub connections: Vec<ConnectionDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConnectionDoc {
    pub from_road: String,
    pub from_end: RoadEnd,
    pub to_road: String,
    pub to_end: RoadEnd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LandmarkDoc {
    pub name: String,
    pub anchor: [f64; 2],
}

/// Traffic light at the end of `road`, cycling green then red.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LightDoc {
    pub id: String,
    pub road: String,
    pub green_s: f64,
    pub red_s: f64,
    #[serde(default)]
    pub offset_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignDoc {
    pub name: String,
    pub state: String,
    pub road: String,
    pub s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RoadIdx(pub usize);

#[derive(Debug, Clone, PartialEq)]
pub struct Lane {
    pub width: f64,
    /// Offset of the lane center from the road centerline, positive right.
    pub center_offset: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Road {
    pub id: String,
    pub street: String,
    pub lanes: Vec<Lane>,
    pub centerline: Polyline,
}

impl Road {
    pub fn length(&self) -> f64 {
        self.centerline.length()
    }

    /// Lane by 1-based index from the left.
    pub fn lane(&self, index: u32) -> Option<&Lane> {
        (index as usize).checked_sub(1).and_then(|i| self.lanes.get(i))
    }

    pub fn lane_count(&self) -> u32 {
        self.lanes.len() as u32
    }

    /// Lane whose band contains `lateral` (offset from centerline, positive
    /// right). Points beyond the road edges map to the edge lane.
    pub fn lane_for_lateral(&self, lateral: f64) -> u32 {
        for (i, lane) in self.lanes.iter().enumerate() {
            if lateral < lane.center_offset + lane.width / 2.0 {
                return i as u32 + 1;
            }
        }
        self.lane_count()
    }

    pub fn start_heading(&self) -> f64 {
        self.centerline.heading_at(0.0)
    }

    pub fn end_heading(&self) -> f64 {
        self.centerline.heading_at(self.length())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Junction {
    pub id: String,
    pub position: Vec2,
    pub connections: Vec<(RoadIdx, RoadIdx)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Landmark {
    pub name: String,
    pub anchor: Vec2,
    /// Road carrying the lane point nearest to the anchor.
    pub road: RoadIdx,
    /// Arc length of that nearest point.
    pub s: f64,
}

/// Validated, immutable road graph.
#[derive(Debug, Clone)]
pub struct MapGraph {
    id: String,
    roads: Vec<Road>,
    junctions: Vec<Junction>,
    landmarks: Vec<Landmark>,
    streets: Vec<String>,
    road_index: BTreeMap<String, RoadIdx>,
    exits: Vec<Vec<RoadIdx>>,
    start_junction: Vec<Option<usize>>,
    end_junction: Vec<Option<usize>>,
    document: MapDocument,
}

/// Case-insensitive, whitespace-normalized landmark key.
pub fn normalize_name(name: &str) -> String {
    name.split_whitespace().map(|w| w.to_lowercase()).collect::<Vec<_>>().join(" ")
}

fn schema_err(msg: impl Into<String>) -> WorldError {
    WorldError::Schema(msg.into())
}

impl MapGraph {
    /// Parses and validates a JSON map document.
    pub fn from_json(text: &str) -> Result<Self, WorldError> {
        let doc: MapDocument = serde_json::from_str(text).map_err(|e| WorldError::Schema(e.to_string()))?;
        Self::from_document(doc)
    }

    pub fn from_document(doc: MapDocument) -> Result<Self, WorldError> {
        if doc.schema != MAP_SCHEMA {
            return Err(schema_err(format!("schema: expected \"{MAP_SCHEMA}\", found \"{}\"", doc.schema)));
        }
        let streets: BTreeSet<&str> = doc.streets.iter().map(String::as_str).collect();
        if streets.len() != doc.streets.len() {
            return Err(schema_err("streets: duplicate street name"));
        }

        let mut roads = Vec::with_capacity(doc.roads.len());
        let mut road_index = BTreeMap::new();
        for (i, r) in doc.roads.iter().enumerate() {
            if r.id.is_empty() {
                return Err(schema_err(format!("roads[{i}].id: empty")));
            }
            if road_index.insert(r.id.clone(), RoadIdx(i)).is_some() {
                return Err(schema_err(format!("roads[{i}].id: duplicate road id {}", r.id)));
            }
            if !streets.contains(r.street.as_str()) {
                return Err(schema_err(format!("roads[{i}].street: \"{}\" not listed in streets", r.street)));
            }
            if r.lanes.is_empty() {
                return Err(schema_err(format!("roads[{i}].lanes: road {} has no lanes", r.id)));
            }
            if let Some(j) = r.lanes.iter().position(|l| !(l.width > 0.0) || !l.width.is_finite()) {
                return Err(schema_err(format!("roads[{i}].lanes[{j}].width: must be > 0")));
            }
            let pts: Vec<Vec2> = r.centerline.iter().map(|&p| Vec2::from(p)).collect();
            if pts.iter().any(|p| !p.is_finite()) {
                return Err(schema_err(format!("roads[{i}].centerline: non-finite coordinate")));
            }
            let centerline = Polyline::new(pts).ok_or_else(|| {
                schema_err(format!("roads[{i}].centerline: need at least two distinct consecutive points"))
            })?;
            if let Some(len) = r.length_m {
                if (len - centerline.length()).abs() > 1e-6 {
                    return Err(schema_err(format!(
                        "roads[{i}].length_m: {len} disagrees with centerline arc length {}",
                        centerline.length()
                    )));
                }
            }
            let total: f64 = r.lanes.iter().map(|l| l.width).sum();
            let mut left = -total / 2.0;
            let lanes = r
                .lanes
                .iter()
                .map(|l| {
                    let lane = Lane { width: l.width, center_offset: left + l.width / 2.0 };
                    left += l.width;
                    lane
                })
                .collect();
            roads.push(Road { id: r.id.clone(), street: r.street.clone(), lanes, centerline });
        }

        let lookup = |field: String, id: &str| -> Result<RoadIdx, WorldError> {
            road_index.get(id).copied().ok_or_else(|| schema_err(format!("{field}: unknown road \"{id}\"")))
        };

        let mut junctions = Vec::with_capacity(doc.junctions.len());
        let mut junction_ids = BTreeSet::new();
        let mut exits: Vec<BTreeSet<RoadIdx>> = vec![BTreeSet::new(); roads.len()];
        let mut start_junction: Vec<Option<usize>> = vec![None; roads.len()];
        let mut end_junction: Vec<Option<usize>> = vec![None; roads.len()];
        for (ji, j) in doc.junctions.iter().enumerate() {
            if !junction_ids.insert(j.id.clone()) {
                return Err(schema_err(format!("junctions[{ji}].id: duplicate junction id {}", j.id)));
            }
            let mut conns = Vec::with_capacity(j.connections.len());
            for (ci, c) in j.connections.iter().enumerate() {
                let at = format!("junctions[{ji}].connections[{ci}]");
                let from = lookup(format!("{at}.from_road"), &c.from_road)?;
                let to = lookup(format!("{at}.to_road"), &c.to_road)?;
                if c.from_end != RoadEnd::End {
                    return Err(schema_err(format!("{at}.from_end: roads are left at their end, got start")));
                }
                if c.to_end != RoadEnd::Start {
                    return Err(schema_err(format!("{at}.to_end: roads are entered at their start, got end")));
                }
                for (slot, road, role) in [(&mut end_junction, from, "end"), (&mut start_junction, to, "start")] {
                    match slot[road.0] {
                        Some(other) if other != ji => {
                            return Err(schema_err(format!(
                                "{at}: road {} {role} attached to junctions {} and {}",
                                roads[road.0].id, doc.junctions[other].id, j.id
                            )))
                        }
                        _ => slot[road.0] = Some(ji),
                    }
                }
                exits[from.0].insert(to);
                conns.push((from, to));
            }
            let position = match j.position {
                Some(p) => Vec2::from(p),
                None => junction_centroid(&roads, &conns),
            };
            junctions.push(Junction { id: j.id.clone(), position, connections: conns });
        }
        // Exits sorted by road id so tie-breaks are stable.
        let exits: Vec<Vec<RoadIdx>> = exits
            .into_iter()
            .map(|set| {
                let mut v: Vec<RoadIdx> = set.into_iter().collect();
                v.sort_by(|a, b| roads[a.0].id.cmp(&roads[b.0].id));
                v
            })
            .collect();

        let mut map = MapGraph {
            id: doc.id.clone(),
            roads,
            junctions,
            landmarks: Vec::new(),
            streets: doc.streets.clone(),
            road_index,
            exits,
            start_junction,
            end_junction,
            document: doc,
        };

        map.check_connectivity()?;

        let mut seen = BTreeSet::new();
        let mut landmarks = Vec::new();
        for (i, l) in map.document.landmarks.iter().enumerate() {
            let key = normalize_name(&l.name);
            if key.is_empty() {
                return Err(schema_err(format!("landmarks[{i}].name: empty")));
            }
            if !seen.insert(key) {
                return Err(schema_err(format!("landmarks[{i}].name: duplicate landmark {}", l.name)));
            }
            let anchor = Vec2::from(l.anchor);
            let (road, s, dist) = map.nearest_lane_point(anchor);
            if dist > MAX_ANCHOR_DISTANCE {
                return Err(WorldError::AnchorTooFar { landmark: l.name.clone(), distance: dist });
            }
            landmarks.push(Landmark { name: l.name.clone(), anchor, road, s });
        }
        map.landmarks = landmarks;

        for (i, l) in map.document.lights.iter().enumerate() {
            map.road_idx(&l.road)
                .ok_or_else(|| schema_err(format!("lights[{i}].road: unknown road \"{}\"", l.road)))?;
            if !(l.green_s > 0.0 && l.red_s > 0.0) {
                return Err(schema_err(format!("lights[{i}]: phase durations must be > 0")));
            }
        }
        for (i, s) in map.document.signs.iter().enumerate() {
            let r = map
                .road_idx(&s.road)
                .ok_or_else(|| schema_err(format!("signs[{i}].road: unknown road \"{}\"", s.road)))?;
            if s.state.is_empty() {
                return Err(schema_err(format!("signs[{i}].state: empty")));
            }
            if !(0.0..=map.roads[r.0].length()).contains(&s.s) {
                return Err(schema_err(format!("signs[{i}].s: outside road")));
            }
        }
        Ok(map)
    }

    fn check_connectivity(&self) -> Result<(), WorldError> {
        if self.roads.is_empty() {
            return Err(schema_err("roads: map has no roads"));
        }
        let n = self.roads.len();
        let mut rev = vec![Vec::new(); n];
        for (from, outs) in self.exits.iter().enumerate() {
            for to in outs {
                rev[to.0].push(RoadIdx(from));
            }
        }
        let fwd = reach(&self.exits, RoadIdx(0));
        let bwd = reach(&rev, RoadIdx(0));
        let unreachable: Vec<String> =
            (0..n).filter(|&i| !(fwd[i] && bwd[i])).map(|i| self.roads[i].id.clone()).collect();
        if unreachable.is_empty() {
            Ok(())
        } else {
            Err(WorldError::Connectivity { anchor: self.roads[0].id.clone(), unreachable })
        }
    }

    /// Nearest lane-center point over all lanes, ignoring travel direction.
    pub fn nearest_lane_point(&self, p: Vec2) -> (RoadIdx, f64, f64) {
        let mut best = (RoadIdx(0), 0.0, f64::INFINITY);
        for (ri, road) in self.roads.iter().enumerate() {
            for lane in &road.lanes {
                let proj = road.centerline.project(p, lane.center_offset);
                if proj.distance < best.2 {
                    best = (RoadIdx(ri), proj.s, proj.distance);
                }
            }
        }
        best
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn roads(&self) -> &[Road] {
        &self.roads
    }

    pub fn road(&self, idx: RoadIdx) -> &Road {
        &self.roads[idx.0]
    }

    pub fn road_idx(&self, id: &str) -> Option<RoadIdx> {
        self.road_index.get(id).copied()
    }

    pub fn road_by_id(&self, id: &str) -> Option<&Road> {
        self.road_idx(id).map(|i| self.road(i))
    }

    pub fn junctions(&self) -> &[Junction] {
        &self.junctions
    }

    pub fn landmarks(&self) -> &[Landmark] {
        &self.landmarks
    }

    pub fn streets(&self) -> &[String] {
        &self.streets
    }

    pub fn document(&self) -> &MapDocument {
        &self.document
    }

    /// Roads reachable from the end of `road`, sorted by road id.
    pub fn exits(&self, road: RoadIdx) -> &[RoadIdx] {
        &self.exits[road.0]
    }

    pub fn start_junction(&self, road: RoadIdx) -> Option<&Junction> {
        self.start_junction[road.0].map(|j| &self.junctions[j])
    }

    pub fn end_junction(&self, road: RoadIdx) -> Option<&Junction> {
        self.end_junction[road.0].map(|j| &self.junctions[j])
    }

    /// Case-insensitive, whitespace-normalized landmark lookup.
    pub fn landmark(&self, name: &str) -> Option<&Landmark> {
        let key = normalize_name(name);
        self.landmarks.iter().find(|l| normalize_name(&l.name) == key)
    }

    pub fn landmarks_on(&self, road: RoadIdx) -> impl Iterator<Item = &Landmark> {
        self.landmarks.iter().filter(move |l| l.road == road)
    }
}

fn reach(adj: &[Vec<RoadIdx>], start: RoadIdx) -> Vec<bool> {
    let mut seen = vec![false; adj.len()];
    let mut stack = vec![start];
    seen[start.0] = true;
    while let Some(r) = stack.pop() {
        for &n in &adj[r.0] {
            if !seen[n.0] {
                seen[n.0] = true;
                stack.push(n);
            }
        }
    }
    seen
}

fn junction_centroid(roads: &[Road], conns: &[(RoadIdx, RoadIdx)]) -> Vec2 {
    let mut sum = Vec2::default();
    let mut n = 0.0;
    for &(from, to) in conns {
        let f = roads[from.0].centerline.points();
        sum = sum + *f.last().unwrap() + roads[to.0].centerline.points()[0];
        n += 2.0;
    }
    if n == 0.0 {
        sum
    } else {
        sum.scale(1.0 / n)
    }
}
