//! Simulator rigs on the bundled test maps.

use std::sync::Arc;

use sdnloop::config::SimConfig;
use sdnloop::geometry::Footprint;
use sdnloop::sim::Simulator;
use sdnloop::world::{LaneLocation, MapGraph, Obstacle, VehicleState, Weather, WorldState};

pub fn sim_on(map_doc: &str, road: &str, lane: u32, s: f64, speed: f64, cfg: SimConfig) -> Simulator {
    let map = Arc::new(MapGraph::from_json(map_doc).unwrap());
    let mut v = VehicleState::on_lane(&map, LaneLocation { road: road.into(), lane, s, offset: 0.0 }, 30.0).unwrap();
    v.speed = speed;
    let world = WorldState::new(&map, v, Weather::Clear);
    Simulator::new(map, world, cfg)
}

pub fn obstacle_with_clearance(sim: &Simulator, clearance: f64) -> Obstacle {
    let v = &sim.world.vehicle;
    let road = sim.map.road_by_id(&v.lane.road).unwrap();
    let off = road.lane(v.lane.lane).unwrap().center_offset;
    let s = v.lane.s + sim.world.ego_front_reach + clearance + 2.3;
    Obstacle {
        kind: "vehicle".into(),
        footprint: Footprint {
            center: road.centerline.point_at(s, off),
            heading: road.centerline.heading_at(s),
            length: 4.6,
            width: 1.9,
        },
        speed: 0.0,
        remove_at: None,
    }
}

pub fn lane_error(sim: &Simulator, lane: u32) -> f64 {
    let v = &sim.world.vehicle;
    let road = sim.map.road_by_id(&v.lane.road).unwrap();
    let p = road.centerline.project(v.position, road.lane(lane).unwrap().center_offset);
    p.lateral.abs()
}
