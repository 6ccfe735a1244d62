use proptest::prelude::*;

use super::*;
use crate::assets;
use crate::geometry::{Footprint, Vec2};

fn town_a() -> MapGraph {
    MapGraph::from_json(assets::MAP_TOWN_A).unwrap()
}

fn straight() -> MapGraph {
    MapGraph::from_json(assets::MAP_STRAIGHT).unwrap()
}

/// Two opposing 100 m single-lane roads joined at both ends.
const LOOP_100: &str = r#"{
  "schema": "sdnloop-map/1", "id": "loop100", "streets": ["Loop"],
  "roads": [
    {"id": "a", "street": "Loop", "centerline": [[0, 0], [100, 0]], "lanes": [{"width": 3.5}]},
    {"id": "b", "street": "Loop", "centerline": [[100, 10], [0, 10]], "lanes": [{"width": 3.5}]}
  ],
  "junctions": [
    {"id": "E", "connections": [{"from_road": "a", "from_end": "end", "to_road": "b", "to_end": "start"}]},
    {"id": "W", "connections": [{"from_road": "b", "from_end": "end", "to_road": "a", "to_end": "start"}]}
  ],
  "landmarks": []
}"#;

fn loc(road: &str, lane: u32, s: f64) -> LaneLocation {
    LaneLocation { road: road.into(), lane, s, offset: 0.0 }
}

fn world_at(map: &MapGraph, l: LaneLocation) -> WorldState {
    let v = VehicleState::on_lane(map, l, 30.0).unwrap();
    WorldState::new(map, v, Weather::Clear)
}

fn car_ahead(map: &MapGraph, road: &str, lane: u32, s_center: f64) -> Obstacle {
    let r = map.road_by_id(road).unwrap();
    let off = r.lane(lane).unwrap().center_offset;
    Obstacle {
        kind: "vehicle".into(),
        footprint: Footprint {
            center: r.centerline.point_at(s_center, off),
            heading: r.centerline.heading_at(s_center),
            length: 4.6,
            width: 1.9,
        },
        speed: 0.0,
        remove_at: None,
    }
}

#[test]
fn grid_fixture_loads() {
    let m = MapGraph::from_json(assets::MAP_GRID_2X2).unwrap();
    assert_eq!(m.junctions().len(), 4);
    assert_eq!(m.roads().len(), 4);
    assert_eq!(m.landmarks().len(), 2);
    assert_eq!(m.landmark("cafe").unwrap().road, m.road_idx("r1").unwrap());
    assert_eq!(m.landmark("  LIBRARY ").unwrap().road, m.road_idx("r2").unwrap());
}

#[test]
fn far_landmark_is_rejected() {
    let mut doc: serde_json::Value = serde_json::from_str(assets::MAP_GRID_2X2).unwrap();
    doc["landmarks"][0]["anchor"] = serde_json::json!([50.0, -100.0]);
    match MapGraph::from_json(&doc.to_string()) {
        Err(WorldError::AnchorTooFar { landmark, distance }) => {
            assert_eq!(landmark, "Cafe");
            assert!(distance > 90.0);
        }
        other => panic!("expected anchor error, got {other:?}"),
    }
}

#[test]
fn schema_errors_name_the_field() {
    let mut doc: serde_json::Value = serde_json::from_str(assets::MAP_GRID_2X2).unwrap();
    doc["junctions"][1]["connections"][0]["to_road"] = "nowhere".into();
    let err = MapGraph::from_json(&doc.to_string()).unwrap_err().to_string();
    assert!(err.contains("junctions[1].connections[0].to_road"), "{err}");

    let mut doc: serde_json::Value = serde_json::from_str(assets::MAP_GRID_2X2).unwrap();
    doc["junctions"][0]["connections"][0]["from_end"] = "start".into();
    let err = MapGraph::from_json(&doc.to_string()).unwrap_err().to_string();
    assert!(err.contains("from_end"), "{err}");

    let mut doc: serde_json::Value = serde_json::from_str(assets::MAP_GRID_2X2).unwrap();
    doc["roads"][2]["lanes"] = serde_json::json!([]);
    let err = MapGraph::from_json(&doc.to_string()).unwrap_err().to_string();
    assert!(err.contains("roads[2]"), "{err}");

    let mut doc: serde_json::Value = serde_json::from_str(assets::MAP_GRID_2X2).unwrap();
    doc["schema"] = "sdnloop-map/0".into();
    assert!(matches!(MapGraph::from_json(&doc.to_string()), Err(WorldError::Schema(_))));

    assert!(MapGraph::from_json(r#"{"schema": "sdnloop-map/1"}"#).is_err());
}

#[test]
fn connectivity_failure_lists_unreachable_roads() {
    let mut doc: serde_json::Value = serde_json::from_str(LOOP_100).unwrap();
    doc["junctions"][1]["connections"] = serde_json::json!([]);
    match MapGraph::from_json(&doc.to_string()) {
        Err(WorldError::Connectivity { unreachable, .. }) => assert_eq!(unreachable, vec!["b".to_string()]),
        other => panic!("expected connectivity error, got {other:?}"),
    }
}

/// Transitive closure over the raw document connections.
fn closure_oracle(doc: &MapDocument) -> Vec<Vec<bool>> {
    let ids: Vec<&str> = doc.roads.iter().map(|r| r.id.as_str()).collect();
    let n = ids.len();
    let idx = |id: &str| ids.iter().position(|x| *x == id).unwrap();
    let mut r = vec![vec![false; n]; n];
    for (i, row) in r.iter_mut().enumerate() {
        row[i] = true;
    }
    for j in &doc.junctions {
        for c in &j.connections {
            r[idx(&c.from_road)][idx(&c.to_road)] = true;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if r[i][k] && r[k][j] {
                    r[i][j] = true;
                }
            }
        }
    }
    r
}

#[test]
fn bundled_towns_are_strongly_connected() {
    for name in ["townA", "townB", "grid2x2", "track", "straight"] {
        let m = assets::load_bundled_map(name).unwrap().unwrap();
        let r = closure_oracle(m.document());
        assert!(r.iter().all(|row| row.iter().all(|&x| x)), "{name} not strongly connected");
    }
    let a = town_a();
    assert_eq!(a.junctions().len(), 12);
}

#[test]
fn locate_examples() {
    let m = straight();
    let l = locate(&m, Vec2::new(12.5, 0.0), 0.0).unwrap();
    assert_eq!((l.road.as_str(), l.lane), ("east", 2));
    assert!((l.s - 12.5).abs() < 1e-12);
    assert_eq!(l.offset, 0.0);

    // +y is left when heading east.
    let l = locate(&m, Vec2::new(12.5, 1.0), 0.0).unwrap();
    assert_eq!(l.lane, 2);
    assert!((l.offset + 1.0).abs() < 1e-12);

    // Direction filter: the same point heading west has no compatible lane.
    assert!(matches!(locate(&m, Vec2::new(12.5, 0.0), std::f64::consts::PI), Err(WorldError::OffRoad { .. })));
    assert!(locate(&m, Vec2::new(12.5, 15.0), 0.0).is_err());
}

/// Exhaustive projection over every lane segment, written independently of
/// the polyline helpers.
fn locate_oracle(map: &MapGraph, p: Vec2, heading: f64) -> Option<(String, u32, f64, f64)> {
    let (hx, hy) = (heading.cos(), heading.sin());
    let mut best: Option<(f64, String, u32, f64)> = None;
    for road in map.roads() {
        let pts = road.centerline.points();
        for (li, lane) in road.lanes.iter().enumerate() {
            let mut acc = 0.0;
            for k in 0..pts.len() - 1 {
                let (ax, ay, bx, by) = (pts[k].x, pts[k].y, pts[k + 1].x, pts[k + 1].y);
                let len = ((bx - ax).powi(2) + (by - ay).powi(2)).sqrt();
                let (ux, uy) = ((bx - ax) / len, (by - ay) / len);
                let (nx, ny) = (uy, -ux);
                if ux * hx + uy * hy > 0.0 {
                    let (ox, oy) = (ax + nx * lane.center_offset, ay + ny * lane.center_offset);
                    let t = ((p.x - ox) * ux + (p.y - oy) * uy).clamp(0.0, len);
                    let (fx, fy) = (ox + ux * t, oy + uy * t);
                    let d = ((p.x - fx).powi(2) + (p.y - fy).powi(2)).sqrt();
                    if best.as_ref().is_none_or(|b| d < b.0) {
                        best = Some((d, road.id.clone(), li as u32 + 1, acc + t));
                    }
                }
                acc += len;
            }
        }
    }
    best.filter(|b| b.0 <= 5.0).map(|(d, r, l, s)| (r, l, s, d))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn locate_matches_exhaustive_oracle(x in -20.0f64..380.0, y in -20.0f64..260.0, h in -3.2f64..3.2) {
        let m = town_a();
        let p = Vec2::new(x, y);
        let got = locate(&m, p, h).ok();
        let want = locate_oracle(&m, p, h);
        match (got, want) {
            (None, None) => {}
            (Some(g), Some((road, lane, s, _))) => {
                prop_assert_eq!(g.road, road);
                prop_assert_eq!(g.lane, lane);
                prop_assert!((g.s - s).abs() < 1e-6);
            }
            (g, w) => prop_assert!(false, "mismatch {:?} vs {:?}", g, w),
        }
    }

    #[test]
    fn locate_of_synthesized_point_is_idempotent(road_pick in 0usize..1000, lane_pick in 0u32..4, frac in 0.0f64..=1.0, track in any::<bool>()) {
        let m = if track { MapGraph::from_json(assets::MAP_TRACK).unwrap() } else { town_a() };
        let road = &m.roads()[road_pick % m.roads().len()];
        let lane = lane_pick % road.lane_count() + 1;
        let s = frac * road.length();
        let l = loc(&road.id, lane, s);
        let p = position_of(&m, &l).unwrap();
        let back = locate(&m, p, road.centerline.heading_at(s)).unwrap();
        prop_assert_eq!(&back.road, &road.id);
        prop_assert_eq!(back.lane, lane);
        prop_assert!((back.s - s).abs() < 1e-6);
        let d = distance_to_road_end(&m, &back).unwrap();
        prop_assert_eq!(d + back.s, road.length());
    }

    #[test]
    fn front_distance_is_monotone_when_approaching(start in 0.0f64..100.0, steps in proptest::collection::vec(0.0f64..3.0, 1..30)) {
        let m = straight();
        let mut w = world_at(&m, loc("east", 2, start));
        w.obstacles.push(car_ahead(&m, "east", 2, start + 100.0));
        let mut last = front_object(&m, &w).map(|o| o.1).unwrap_or(f64::INFINITY);
        let mut s = start;
        for ds in steps {
            s += ds;
            w.vehicle = VehicleState::on_lane(&m, loc("east", 2, s), 30.0).unwrap();
            let d = front_object(&m, &w).map(|o| o.1).unwrap_or(f64::INFINITY);
            prop_assert!(d <= last);
            last = d;
        }
    }
}

#[test]
fn distance_to_end_examples() {
    let m = MapGraph::from_json(LOOP_100).unwrap();
    assert_eq!(distance_to_road_end(&m, &loc("a", 1, 88.0)).unwrap(), 12.0);
    assert_eq!(distance_to_road_end(&m, &loc("a", 1, 100.0)).unwrap(), 0.0);
}

#[test]
fn curved_road_arc_length_matches_integration() {
    let m = MapGraph::from_json(assets::MAP_TRACK).unwrap();
    let road = m.road_by_id("t1").unwrap();
    // Arc-length oracle: integrate the exact circle for the curved part.
    let p = Vec2::new(100.0 + 21.75 * (0.3f64).cos(), 21.75 * (0.3f64).sin());
    let l = locate(&m, p, 0.3 + std::f64::consts::FRAC_PI_2).unwrap();
    assert_eq!(l.road, "t1");
    let pts = road.centerline.points();
    let mut s_oracle = 0.0;
    let mut best = f64::INFINITY;
    let mut acc = 0.0;
    for w in pts.windows(2) {
        let len = w[0].dist(w[1]);
        let u = (w[1] - w[0]).scale(1.0 / len);
        let t = (p - w[0]).dot(u).clamp(0.0, len);
        let foot = w[0] + u.scale(t);
        let d = (p - foot).norm();
        if d < best - 1e-12 {
            best = d;
            s_oracle = acc + t;
        }
        acc += len;
    }
    assert!((l.s - s_oracle).abs() < 1e-6, "{} vs {}", l.s, s_oracle);
    let d = distance_to_road_end(&m, &l).unwrap();
    assert_eq!(d + l.s, road.length());
    assert!((road.length() - acc).abs() < 1e-9);
}

#[test]
fn affordance_examples() {
    let a = town_a();
    let single = lane_affordances(&a, &loc("elm-n-0", 1, 10.0)).unwrap();
    assert_eq!(single, LaneAffordances { lane_number: 1, can_switch_left: false, can_switch_right: false });
    let s = straight();
    let mid = lane_affordances(&s, &loc("east", 2, 10.0)).unwrap();
    assert_eq!(mid, LaneAffordances { lane_number: 2, can_switch_left: true, can_switch_right: true });
    let right = lane_affordances(&s, &loc("west", 2, 10.0)).unwrap();
    assert_eq!(right, LaneAffordances { lane_number: 2, can_switch_left: true, can_switch_right: false });
    assert!(lane_affordances(&s, &loc("west", 3, 10.0)).is_err());
}

#[test]
fn front_object_examples() {
    let m = straight();
    let reach = DEFAULT_EGO_FRONT_REACH;
    let mut w = world_at(&m, loc("east", 2, 50.0));
    assert_eq!(front_object(&m, &w), None);

    // Rear edge 20 m beyond the front bumper.
    w.obstacles.push(car_ahead(&m, "east", 2, 50.0 + reach + 20.0 + 2.3));
    let (kind, d) = front_object(&m, &w).unwrap();
    assert_eq!(kind, "vehicle");
    assert!((d - 20.0).abs() < 0.5);

    let mut adj = world_at(&m, loc("east", 2, 50.0));
    adj.obstacles.push(car_ahead(&m, "east", 3, 80.0));
    assert_eq!(front_object(&m, &adj), None);

    let mut two = world_at(&m, loc("east", 2, 50.0));
    two.obstacles.push(car_ahead(&m, "east", 2, 50.0 + reach + 30.0 + 2.3));
    two.obstacles.push(car_ahead(&m, "east", 2, 50.0 + reach + 15.0 + 2.3));
    let (_, d) = front_object(&m, &two).unwrap();
    assert!((d - 15.0).abs() < 1e-9);

    let mut behind = world_at(&m, loc("east", 2, 50.0));
    behind.obstacles.push(car_ahead(&m, "east", 2, 30.0));
    assert_eq!(front_object(&m, &behind), None);
}

#[test]
fn visible_sign_examples() {
    let a = town_a();
    let road = a.road_by_id("main-e-0").unwrap();
    let mut w = world_at(&a, loc("main-e-0", 1, road.length() - 10.0));
    for l in &mut w.lights {
        l.phase = LightPhase::Red;
    }
    let signs = visible_signs(&w);
    assert_eq!(signs, vec![VisibleSign { name: "traffic light".into(), state: "red".into(), distance: 10.0 }]);

    let s = straight();
    let w = world_at(&s, loc("east", 1, 310.0));
    assert!(visible_signs(&w).is_empty());

    let mut w = world_at(&s, loc("east", 1, 280.0));
    w.lights.push(TrafficLight {
        id: "X".into(),
        junction: "JE".into(),
        road: "east".into(),
        s: 320.0,
        position: Vec2::new(320.0, 6.0),
        phase: LightPhase::Green,
        green_s: 10.0,
        red_s: 10.0,
        offset_s: 0.0,
    });
    let signs = visible_signs(&w);
    assert_eq!(signs.len(), 2);
    assert_eq!((signs[0].name.as_str(), signs[0].distance), ("speed limit sign", 20.0));
    assert_eq!((signs[1].name.as_str(), signs[1].state.as_str(), signs[1].distance), ("traffic light", "green", 40.0));
}

#[test]
fn step_world_contract() {
    let a = town_a();
    let w = world_at(&a, loc("main-e-0", 1, 20.0));
    assert!(matches!(step_world(&w, 0.0), Err(WorldError::InvalidStep(_))));
    assert!(step_world(&w, -0.05).is_err());

    let mut w = w;
    let mut moving = car_ahead(&a, "main-e-0", 2, 40.0);
    moving.speed = 2.0;
    moving.remove_at = Some(3.0);
    w.obstacles.push(moving);
    let run = |mut w: WorldState| {
        let mut trace = Vec::new();
        for _ in 0..400 {
            w = step_world(&w, 0.05).unwrap();
            trace.push(w.clone());
        }
        trace
    };
    let a1 = run(w.clone());
    let a2 = run(w.clone());
    assert_eq!(a1, a2);
    for pair in a1.windows(2) {
        assert!(pair[1].time >= pair[0].time);
    }
    assert_eq!(a1[399].time, 20.0);
    // Removed at t = 3.0.
    assert_eq!(a1[58].obstacles.len(), 1);
    assert!(a1[59].obstacles.is_empty());
    // L1: green for 15 s then red for 10 s.
    let l1 = |w: &WorldState| w.lights.iter().find(|l| l.id == "L1").unwrap().phase;
    assert_eq!(l1(&a1[200]), LightPhase::Green);
    assert_eq!(l1(&a1[299]), LightPhase::Red);
}
