use std::f64::consts::PI;

use crate::world::{distance_to_road_end, MapGraph, VehicleState};

fn compass(heading: f64) -> &'static str {
    let k = ((heading.rem_euclid(2.0 * PI)) / (PI / 2.0)).round() as i64 % 4;
    ["east", "north", "west", "south"][k as usize]
}

/// One line per road sorted by road id, then a vehicle line.
pub fn render_map_text(map: &MapGraph, vehicle: &VehicleState) -> String {
    let mut roads: Vec<_> = map.roads().iter().enumerate().collect();
    roads.sort_by(|a, b| a.1.id.cmp(&b.1.id));
    let junction = |j: Option<&crate::world::Junction>| j.map(|j| j.id.clone()).unwrap_or_else(|| "open end".into());
    let mut lines = Vec::with_capacity(roads.len() + 1);
    for (i, road) in roads {
        let idx = crate::world::RoadIdx(i);
        let mut lms: Vec<_> = map.landmarks_on(idx).collect();
        lms.sort_by(|a, b| a.s.total_cmp(&b.s).then_with(|| a.name.cmp(&b.name)));
        let names = if lms.is_empty() {
            "none".to_string()
        } else {
            lms.iter().map(|l| l.name.as_str()).collect::<Vec<_>>().join(", ")
        };
        lines.push(format!(
            "{}: {} -> {}, landmarks: {}",
            road.street,
            junction(map.start_junction(idx)),
            junction(map.end_junction(idx)),
            names
        ));
    }
    let loc = &vehicle.lane;
    let vehicle_line = match map.road_idx(&loc.road) {
        Some(idx) => {
            let road = map.road(idx);
            let left = distance_to_road_end(map, loc).unwrap_or(0.0);
            format!(
                "Vehicle: on {} ({} -> {}), lane {}, {:.0} m before {}, heading {}{}",
                road.street,
                junction(map.start_junction(idx)),
                junction(map.end_junction(idx)),
                loc.lane,
                left,
                junction(map.end_junction(idx)),
                compass(vehicle.heading),
                if vehicle.in_junction { ", crossing the junction" } else { "" }
            )
        }
        None => format!(
            "Vehicle: at ({:.0}, {:.0}), heading {}",
            vehicle.position.x,
            vehicle.position.y,
            compass(vehicle.heading)
        ),
    };
    lines.push(vehicle_line);
    lines.join("\n")
}
