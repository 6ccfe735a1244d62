mod common;

use std::time::Instant;

use common::planner_oracle::*;
use common::random_graph;
use proptest::prelude::*;
use sdnloop::assets;
use sdnloop::planner::*;
use sdnloop::world::MapGraph;

#[test]
fn random_graphs_match_oracle() {
    let t0 = Instant::now();
    let failures: Vec<String> = (0..1000u64).filter_map(|s| random_case(s).err()).collect();
    assert!(failures.is_empty(), "{} mismatches, first: {:?}", failures.len(), failures.first());
    eprintln!("1000 random graphs in {:?}", t0.elapsed());
}

#[test]
fn bundled_towns_match_oracle() {
    for doc in [assets::MAP_TOWN_A, assets::MAP_TOWN_B, assets::MAP_GRID_2X2] {
        let map = MapGraph::from_json(doc).unwrap();
        let roads = oracle_roads_from_map(&map);
        let mut cases = 0;
        for (i, r) in map.roads().iter().enumerate() {
            for frac in [0.1, 0.5, 0.9] {
                let s = r.length() * frac;
                for lm in map.landmarks() {
                    let got = plan_route_with(&map, &at(&r.id, s), r.start_heading(), &lm.name, PlanOptions::default())
                        .unwrap();
                    let (dirs, cost) = oracle(&roads, i, s, lm.road.0, lm.s).unwrap();
                    assert_eq!(labels(&got.directions), dirs, "{} from {} at {s} to {}", map.id(), r.id, lm.name);
                    assert!((got.cost - cost).abs() < 1e-6);
                    cases += 1;
                }
            }
        }
        assert!(cases > 0);
    }
}

#[test]
fn grid_fixture_examples() {
    let map = MapGraph::from_json(assets::MAP_GRID_2X2).unwrap();
    let names: Vec<&str> = map.landmarks().iter().map(|l| l.name.as_str()).collect();
    for lm in map.landmarks() {
        let road = map.road(lm.road);
        let ahead = plan_route(&map, &at(&road.id, 0.0), road.start_heading(), &lm.name).unwrap();
        assert_eq!(ahead, Vec::new(), "{}", lm.name);
    }
    let r1 = map.road_by_id("r1").unwrap();
    let next = map.landmarks().iter().find(|l| map.road(l.road).id == "r2").expect("landmark on r2");
    let one_block = plan_route(&map, &at("r1", 10.0), r1.start_heading(), &next.name).unwrap();
    assert_eq!(one_block, vec![TurnDirection::Left]);
    assert_eq!(render_plan(&one_block), "[left]");
    assert!(names.len() >= 2);
}

#[test]
fn errors_and_normalization() {
    let map = MapGraph::from_json(assets::MAP_TOWN_A).unwrap();
    let lm = map.landmarks()[0].name.clone();
    let from = at("main-e-0", 10.0);
    let h = map.road_by_id("main-e-0").unwrap().start_heading();
    let a = plan_route(&map, &from, h, &lm).unwrap();
    let shout = format!("  {}  ", lm.to_uppercase().replace(' ', "   "));
    assert_eq!(plan_route(&map, &from, h, &shout).unwrap(), a);
    assert_eq!(plan_route(&map, &from, h, &lm).unwrap(), a);
    assert!(matches!(plan_route(&map, &from, h, "Atlantis"), Err(PlanError::UnknownLandmark(_))));
    assert!(matches!(plan_route(&map, &at("nowhere", 0.0), h, &lm), Err(PlanError::InvalidStart(_))));
}

#[test]
fn initial_uturn_knob() {
    let map = MapGraph::from_json(assets::MAP_TOWN_A).unwrap();
    let road = map.road_by_id("main-e-1").unwrap();
    let from = at("main-e-1", 50.0);
    let behind = map
        .landmarks()
        .iter()
        .find(|l| map.road(l.road).id == "main-w-1" && l.s > 60.0)
        .or_else(|| map.landmarks().iter().find(|l| map.road(l.road).id == "main-w-1"));
    let Some(behind) = behind else { return };
    let plain = plan_route_with(&map, &from, road.start_heading(), &behind.name, PlanOptions::default()).unwrap();
    let opts = PlanOptions { allow_initial_uturn: true, ..PlanOptions::default() };
    let knob = plan_route_with(&map, &from, road.start_heading(), &behind.name, opts).unwrap();
    assert!(knob.cost <= plain.cost);
    if knob.initial_uturn {
        assert_eq!(knob.directions.first(), Some(&TurnDirection::Uturn));
        assert!(knob.cost < plain.cost);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn planner_is_pure(seed in 0u64..10_000) {
        let g = random_graph(seed, 20);
        let map = MapGraph::from_document(g.doc.clone()).unwrap();
        let r = &g.roads[0];
        let h = (r.heading_deg as f64).to_radians();
        for lm in &g.landmarks {
            let a = plan_route_with(&map, &at(&r.id, 1.0), h, &lm.name, PlanOptions::default()).unwrap();
            let b = plan_route_with(&map, &at(&r.id, 1.0), h, &lm.name, PlanOptions::default()).unwrap();
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn classify_turn_matches_degree_rule(a in -720i32..720, d in -179i32..=180) {
        let got = classify_turn((a as f64).to_radians(), ((a + d) as f64).to_radians());
        prop_assert_eq!(got.label(), classify_deg(a as f64, (a + d) as f64));
    }

    #[test]
    fn render_then_count(dirs in proptest::collection::vec(0usize..4, 0..8)) {
        let all = [TurnDirection::Left, TurnDirection::Right, TurnDirection::Straight, TurnDirection::Uturn];
        let d: Vec<TurnDirection> = dirs.iter().map(|&i| all[i]).collect();
        let s = render_plan(&d);
        prop_assert!(s.starts_with('[') && s.ends_with(']'));
        let inner = &s[1..s.len() - 1];
        let n = if inner.is_empty() { 0 } else { inner.split(", ").count() };
        prop_assert_eq!(n, d.len());
    }
}
