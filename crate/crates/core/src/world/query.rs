//! Read-only queries against a map and a world snapshot.

use super::map::{MapGraph, RoadIdx};
use super::state::{LaneLocation, WorldState};
use super::WorldError;
use crate::geometry::Vec2;

/// Maximum distance from a lane centerline for a point to count as on-road.
pub const ON_ROAD_TOLERANCE: f64 = 5.0;
/// Forward corridor horizon for `front_object`.
pub const FRONT_HORIZON: f64 = 50.0;
/// Sign visibility horizon along the current road.
pub const SIGN_HORIZON: f64 = 60.0;

/// Nearest direction-compatible lane (travel direction within 90° of
/// `heading`), with projected s and lateral offset.
pub fn locate(map: &MapGraph, position: Vec2, heading: f64) -> Result<LaneLocation, WorldError> {
    let fwd = Vec2::from_heading(heading);
    let mut best: Option<(f64, LaneLocation)> = None;
    for road in map.roads() {
        let max_half = road.lanes.iter().map(|l| l.center_offset.abs() + l.width).fold(0.0, f64::max);
        let (lo, hi) = road.centerline.bounds();
        let pad = ON_ROAD_TOLERANCE + max_half;
        if position.x < lo.x - pad || position.x > hi.x + pad || position.y < lo.y - pad || position.y > hi.y + pad {
            continue;
        }
        for (li, lane) in road.lanes.iter().enumerate() {
            for seg in 0..road.centerline.segment_count() {
                if road.centerline.segment_dir(seg).dot(fwd) <= 0.0 {
                    continue;
                }
                let proj = road.centerline.project_segment(seg, position, lane.center_offset);
                if best.as_ref().is_none_or(|(d, _)| proj.distance < *d) {
                    best = Some((
                        proj.distance,
                        LaneLocation { road: road.id.clone(), lane: li as u32 + 1, s: proj.s, offset: proj.lateral },
                    ));
                }
            }
        }
    }
    match best {
        Some((d, loc)) if d <= ON_ROAD_TOLERANCE => Ok(loc),
        _ => Err(WorldError::OffRoad { x: position.x, y: position.y }),
    }
}

/// Projection onto a specific road (any lane), as used for tracking.
#[derive(Debug, Clone, PartialEq)]
pub struct RoadProjection {
    pub location: LaneLocation,
    /// Arc length without clamping at the road ends.
    pub s_unclamped: f64,
}

pub fn locate_on_road(map: &MapGraph, road: RoadIdx, position: Vec2) -> RoadProjection {
    let r = map.road(road);
    let proj = r.centerline.project(position, 0.0);
    let lane = r.lane_for_lateral(proj.lateral);
    let center = r.lane(lane).expect("lane from band").center_offset;
    RoadProjection {
        location: LaneLocation { road: r.id.clone(), lane, s: proj.s, offset: proj.lateral - center },
        s_unclamped: proj.s_unclamped,
    }
}

/// World position of a lane location.
pub fn position_of(map: &MapGraph, loc: &LaneLocation) -> Result<Vec2, WorldError> {
    let road = map.road_by_id(&loc.road).ok_or_else(|| WorldError::UnknownRoad(loc.road.clone()))?;
    let lane = road.lane(loc.lane).ok_or(WorldError::InvalidLane { road: loc.road.clone(), lane: loc.lane })?;
    Ok(road.centerline.point_at(loc.s, lane.center_offset + loc.offset))
}

pub fn distance_to_road_end(map: &MapGraph, loc: &LaneLocation) -> Result<f64, WorldError> {
    let road = map.road_by_id(&loc.road).ok_or_else(|| WorldError::UnknownRoad(loc.road.clone()))?;
    Ok((road.length() - loc.s).max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LaneAffordances {
    pub lane_number: u32,
    pub can_switch_left: bool,
    pub can_switch_right: bool,
}

/// All lanes of a road share its travel direction, so any neighbour index
/// is a legal switch target.
pub fn lane_affordances(map: &MapGraph, loc: &LaneLocation) -> Result<LaneAffordances, WorldError> {
    let road = map.road_by_id(&loc.road).ok_or_else(|| WorldError::UnknownRoad(loc.road.clone()))?;
    if road.lane(loc.lane).is_none() {
        return Err(WorldError::InvalidLane { road: loc.road.clone(), lane: loc.lane });
    }
    Ok(LaneAffordances {
        lane_number: loc.lane,
        can_switch_left: loc.lane > 1,
        can_switch_right: loc.lane < road.lane_count(),
    })
}

/// Obstacles whose footprint intersects the current lane ahead of the
/// vehicle within the forward horizon, nearest first. Distances are
/// clearances from the ego front bumper to the nearest footprint extent
/// along s, floored at 0.
pub fn front_objects(map: &MapGraph, world: &WorldState) -> Vec<(String, f64)> {
    let loc = &world.vehicle.lane;
    let Some(road) = map.road_by_id(&loc.road) else {
        return Vec::new();
    };
    let Some(lane) = road.lane(loc.lane) else {
        return Vec::new();
    };
    let band = (lane.center_offset - lane.width / 2.0, lane.center_offset + lane.width / 2.0);
    let front = loc.s + world.ego_front_reach;
    let mut hits = Vec::new();
    for o in &world.obstacles {
        let center = road.centerline.project(o.footprint.center, 0.0);
        if center.s_unclamped <= loc.s {
            continue;
        }
        let (mut lo, mut hi, mut rear) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY);
        for c in o.footprint.corners() {
            let p = road.centerline.project(c, 0.0);
            lo = lo.min(p.lateral);
            hi = hi.max(p.lateral);
            rear = rear.min(p.s_unclamped);
        }
        let gap = (rear - front).max(0.0);
        if gap <= FRONT_HORIZON && hi > band.0 && lo < band.1 {
            hits.push((o.kind.clone(), gap));
        }
    }
    hits.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
    hits
}

pub fn front_object(map: &MapGraph, world: &WorldState) -> Option<(String, f64)> {
    front_objects(map, world).into_iter().next()
}

#[derive(Debug, Clone, PartialEq)]
pub struct VisibleSign {
    pub name: String,
    pub state: String,
    pub distance: f64,
}

/// Signs and traffic lights on the current road ahead of the vehicle
/// within the visibility horizon, sorted by distance.
pub fn visible_signs(world: &WorldState) -> Vec<VisibleSign> {
    let loc = &world.vehicle.lane;
    let mut out = Vec::new();
    let ahead = |s: f64| {
        let d = s - loc.s;
        (d >= 0.0 && d <= SIGN_HORIZON).then_some(d)
    };
    for s in world.signs.iter().filter(|s| s.road == loc.road) {
        if let Some(d) = ahead(s.s) {
            out.push(VisibleSign { name: s.name.clone(), state: s.state.clone(), distance: d });
        }
    }
    for l in world.lights.iter().filter(|l| l.road == loc.road) {
        if let Some(d) = ahead(l.s) {
            out.push(VisibleSign {
                name: "traffic light".to_string(),
                state: l.phase.label().to_string(),
                distance: d,
            });
        }
    }
    out.sort_by(|a, b| a.distance.total_cmp(&b.distance).then_with(|| a.name.cmp(&b.name)));
    out
}
