//! Acceptance suite: one check per primary criterion, each printing a
//! PASS or FAIL line. Runs as a plain binary so the lines always show in
//! `cargo test` output; exits non-zero if any criterion fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sdnloop::assets::{self, STORIES};
use sdnloop::config::{SimConfig, VehicleParams};
use sdnloop::features::*;
use sdnloop::geometry::Vec2;
use sdnloop::harness::*;
use sdnloop::metrics::*;
use sdnloop::motion::{step_vehicle, ControlCommand, PhysicalAction};
use sdnloop::planner::{plan_route_with, PlanOptions};
use sdnloop::scenario::{replay_session, teacher_forcing_replay};
use sdnloop::verbalizer::{verbalize, GoldenFile};
use sdnloop::world::{front_object, LaneLocation, MapGraph, VehicleState};

use common::motion_rig::{lane_error, obstacle_with_clearance, sim_on};
use common::planner_oracle::{labels, oracle, oracle_roads_from_map, random_case};
use common::{bundled, oracle_log};

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn planner_oracle_equivalence() -> Outcome {
    let t0 = Instant::now();
    let failures: Vec<String> = (0..1000u64).filter_map(|s| random_case(s).err()).collect();
    check(failures.is_empty(), || {
        format!("{} of 1000 random graphs differ, first: {:?}", failures.len(), failures[0])
    })?;
    let mut town_cases = 0;
    for doc in [assets::MAP_TOWN_A, assets::MAP_TOWN_B] {
        let map = MapGraph::from_json(doc).map_err(|e| e.to_string())?;
        let roads = oracle_roads_from_map(&map);
        for (i, r) in map.roads().iter().enumerate() {
            for frac in [0.1, 0.5, 0.9] {
                let s = r.length() * frac;
                let at = LaneLocation { road: r.id.clone(), lane: 1, s, offset: 0.0 };
                for lm in map.landmarks() {
                    let got = plan_route_with(&map, &at, r.start_heading(), &lm.name, PlanOptions::default())
                        .map_err(|e| e.to_string())?;
                    let (dirs, _) = oracle(&roads, i, s, lm.road.0, lm.s).ok_or("oracle found no route")?;
                    check(labels(&got.directions) == dirs, || format!("{} from {} to {}", map.id(), r.id, lm.name))?;
                    town_cases += 1;
                }
            }
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    check(secs < 5.0, || format!("took {secs:.2} s"))?;
    Ok(format!("1000 random graphs + {town_cases} town queries match, {secs:.2} s"))
}

fn closed_loop_soundness() -> Outcome {
    let mut slowest: f64 = 0.0;
    for (name, _) in STORIES {
        let t0 = Instant::now();
        let log = oracle_log(name, SimConfig::default());
        let wall = t0.elapsed().as_secs_f64();
        slowest = slowest.max(wall);
        let (t, ok, reason, _) = log.outcome().map_err(|e| e.to_string())?;
        check(ok, || format!("{name} failed at {t:.1} s: {reason:?}"))?;
        check(wall < 10.0, || format!("{name} took {wall:.2} s"))?;
    }
    let mut failures = Vec::new();
    for name in ["townA_obstacle", "townB_obstacle"] {
        let mut cfg = SimConfig::default();
        cfg.control.auto_safety_stop = false;
        let log = oracle_log(name, cfg);
        let (_, ok, reason, _) = log.outcome().map_err(|e| e.to_string())?;
        let reason = reason.unwrap_or_default().to_string();
        check(!ok && (reason.starts_with("collision") || reason.contains("stalled")), || {
            format!("{name} without the safety stop ended with success={ok}, {reason:?}")
        })?;
        failures.push(reason);
    }
    Ok(format!("{} storyboards succeed (slowest {slowest:.2} s); without safety stop: {failures:?}", STORIES.len()))
}

fn motion_control() -> Outcome {
    let mut sim = sim_on(assets::MAP_TRACK, "t1", 2, 0.0, 30.0 / 3.6, SimConfig::default());
    let mut worst: f64 = 0.0;
    for _ in 0..(90.0 / sim.dt()) as usize {
        sim.step().map_err(|e| e.to_string())?;
        if sim.world.time > 2.0 && !sim.world.vehicle.in_junction {
            worst = worst.max(lane_error(&sim, 2));
        }
    }
    check(worst <= 0.3, || format!("cross-track error {worst:.3} m"))?;

    let mut gaps = Vec::new();
    for auto in [false, true] {
        let mut cfg = SimConfig::default();
        cfg.control.auto_safety_stop = auto;
        let mut sim = sim_on(assets::MAP_STRAIGHT, "east", 2, 50.0, 30.0 / 3.6, cfg);
        let o = obstacle_with_clearance(&sim, 15.0);
        sim.world.obstacles.push(o);
        sim.apply(PhysicalAction::Stop).map_err(|e| e.to_string())?;
        for _ in 0..200 {
            let r = sim.step().map_err(|e| e.to_string())?;
            check(r.collision.is_none(), || "collided with the obstacle".into())?;
        }
        let (_, gap) = front_object(&sim.map, &sim.world).ok_or("obstacle not ahead")?;
        check(sim.world.vehicle.speed == 0.0 && gap >= 2.0, || format!("halted {gap:.2} m short"))?;
        gaps.push(gap);
    }

    let params = VehicleParams::default();
    let steer = 0.5;
    let radius = params.wheelbase / (params.max_steer() * steer).tan();
    let center = Vec2::new(0.0, radius);
    let mut v = VehicleState {
        position: Vec2::new(0.0, 0.0),
        heading: 0.0,
        speed: 5.0,
        cruise_kmh: 18.0,
        lights_on: false,
        lane: LaneLocation { road: "-".into(), lane: 1, s: 0.0, offset: 0.0 },
        in_junction: false,
    };
    let mut rel: f64 = 0.0;
    for _ in 0..(2.0 * std::f64::consts::PI * radius / 5.0 / 0.001) as usize {
        v = step_vehicle(&v, ControlCommand::new(0.0, steer), 0.001, &params).map_err(|e| e.to_string())?;
        rel = rel.max((v.position.dist(center) - radius).abs() / radius);
    }
    check(rel < 0.01, || format!("arc radius error {:.3}%", rel * 100.0))?;
    Ok(format!(
        "cross-track {worst:.3} m, stop gaps {:.2}/{:.2} m, arc radius error {:.4}%",
        gaps[0],
        gaps[1],
        rel * 100.0
    ))
}

fn two_hertz_cadence() -> Outcome {
    let (map, mut story) = bundled("townA_long_horizon");
    story.goals = vec!["Hospital".into()];
    story.events.clear();
    story.timeout_s = 60.0;
    let cfg = SimConfig::default();
    let dt = cfg.dt();
    let mut session = Session::new(map.clone(), story, cfg, "mock", None).map_err(|e| e.to_string())?;
    let mut agent = MockLatency::new(ConstantAgent::lane_follow(), 0.4);
    let mut taus = Vec::new();
    let mut tick_times = vec![session.time()];
    loop {
        session.begin_tick().map_err(|e| e.to_string())?;
        if session.decision_due() {
            let p = session.open_decision(TaskKind::ClosedLoop).map_err(|e| e.to_string())?;
            taus.push(p.tau);
            let r = p.run(&mut agent, &map, 0.4);
            session.submit(&p, r, 0.4);
        }
        let done = session.end_tick().map_err(|e| e.to_string())?;
        tick_times.push(session.time());
        if done.is_some() {
            break;
        }
    }
    check(session.time() >= 60.0 - 1e-9, || format!("run ended at {:.2} s", session.time()))?;
    let worst = taus.windows(2).map(|w| (w[1] - w[0] - 0.5).abs()).fold(0.0, f64::max);
    check(worst <= dt + 1e-9, || format!("decision gap off by {worst:.3} s"))?;
    let max_tick_gap = tick_times.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    check(max_tick_gap <= dt + 1e-9, || format!("control gap {max_tick_gap:.3} s"))?;
    Ok(format!(
        "{} decisions, gaps 0.5 s within {worst:.3} s, max control gap {:.0} tick",
        taus.len(),
        max_tick_gap / dt
    ))
}

fn verbalizer_goldens() -> Outcome {
    let file: GoldenFile = serde_json::from_str(assets::VERBALIZER_GOLDENS).map_err(|e| e.to_string())?;
    check(file.cases.len() == 25, || format!("{} cases", file.cases.len()))?;
    for (i, case) in file.cases.iter().enumerate() {
        let got = verbalize(&case.observation).map_err(|e| e.to_string())?;
        check(got == case.expected, || format!("case {i}: {got:?}"))?;
    }
    let all: String = file.cases.iter().map(|c| c.expected.as_str()).collect();
    check(all.contains("There is a obstacle"), || "missing \"a obstacle\"".into())?;
    check(all.contains("on the 1 lane from the left"), || "missing the numbered-lane phrasing".into())?;
    Ok("25/25 byte-exact".into())
}

fn metric_oracles() -> Outcome {
    let doc: serde_json::Value =
        serde_json::from_str(include_str!("fixtures/toy_corpus.json")).map_err(|e| e.to_string())?;
    let tok = Tokenizer::default();
    let pairs: Vec<TextPair> = doc["pairs"]
        .as_array()
        .ok_or("no pairs")?
        .iter()
        .map(|p| TextPair::new(p["candidate"].as_str().unwrap(), p["reference"].as_str().unwrap(), &tok))
        .collect();
    let want = |k: &str| doc["expected"][k].as_f64().unwrap();
    let bs = bertscore(&pairs, &OneHotProvider::from_corpus(&pairs), false).map_err(|e| e.to_string())?;
    let nums =
        |k: &str| -> Vec<f64> { doc["control"][k].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect() };
    let control = control_metrics(&nums("pred"), &nums("gold"), &nums("thresholds")).map_err(|e| e.to_string())?;
    let mut got = vec![
        ("bleu4", bleu4(&pairs, &BleuConfig::default()).map_err(|e| e.to_string())?),
        ("rouge_l", rouge_l(&pairs, 1.2).map_err(|e| e.to_string())?),
        ("cider_d", cider_d(&pairs, &CiderConfig::default()).map_err(|e| e.to_string())?),
        ("meteor_lite", meteor_lite(&pairs).map_err(|e| e.to_string())?),
        ("bertscore_p", bs.precision),
        ("bertscore_r", bs.recall),
        ("bertscore_f", bs.f1),
        ("rmse", control.rmse),
    ];
    for (key, value) in got.drain(..) {
        check((value - want(key)).abs() <= 1e-6, || format!("{key}: {value} vs oracle {}", want(key)))?;
    }
    for (i, (_, a)) in control.accuracy.iter().enumerate() {
        let w = doc["expected"]["accuracy"][i].as_f64().unwrap();
        check((a - w).abs() <= 1e-6, || format!("A@{i}: {a} vs {w}"))?;
    }
    let three = vec![TextPair::new("turn left now", "turn left now", &tok)];
    let m = meteor_lite(&three).map_err(|e| e.to_string())?;
    check((m - 0.98148).abs() <= 1e-5, || format!("METEOR identical 3 tokens = {m}"))?;
    let r = control_metrics(&[1.0, 3.0], &[0.0, 0.0], &DEFAULT_THRESHOLDS).map_err(|e| e.to_string())?.rmse;
    check((r - 5f64.sqrt()).abs() <= 1e-9, || format!("RMSE = {r}"))?;
    Ok(format!("toy corpus within 1e-6; METEOR(3 identical) = {m:.5}; RMSE = {r:.9}"))
}

fn determinism() -> Outcome {
    let mut hashes = Vec::new();
    for name in ["townA_long_horizon", "townB_goal_change"] {
        let log = oracle_log(name, SimConfig::default());
        let replayed = replay_session(&log).map_err(|e| e.to_string())?;
        check(replayed.log.hash() == log.hash(), || format!("{name}: replay hash differs"))?;
        let again = oracle_log(name, SimConfig::default());
        check(again.hash() == log.hash(), || format!("{name}: rerun hash differs"))?;
        let (map, _) = bundled(name);
        let items = teacher_forcing_replay(&log, &mut OracleAgent::new(map, SimConfig::default()))
            .map_err(|e| e.to_string())?;
        let report = evaluate(&items, &EvalConfig::default()).map_err(|e| e.to_string())?;
        let nfd = report.tasks.iter().find(|t| t.task == "NfD").ok_or("no NfD items")?;
        check(nfd.scores["act_acc"] == 1.0 && nfd.scores["arg_acc"] == 1.0, || {
            format!("{name}: act {} arg {}", nfd.scores["act_acc"], nfd.scores["arg_acc"])
        })?;
        hashes.push(log.hash()[..12].to_string());
    }
    Ok(format!("replay hashes identical ({}); oracle NfD act/arg = 1.0", hashes.join(", ")))
}

fn feature_pipeline() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut worst: f64 = 0.0;
    for _ in 0..500 {
        let (t, h, w, d, k) = (
            rng.random_range(1..=8usize),
            rng.random_range(1..=6usize),
            rng.random_range(1..=6usize),
            rng.random_range(1..=5usize),
            rng.random_range(1..=4usize),
        );
        let data: Vec<f64> = (0..t * h * w * d).map(|_| rng.random_range(-2.0..2.0)).collect();
        let f = FeatureMap::new(t, h, w, d, data.clone()).map_err(|e| e.to_string())?;
        let (v_t, v_s) = (pool_temporal_rep(&f), pool_spatial_rep(&f));
        for cell in 0..h * w {
            for c in 0..d {
                let mean = (0..t).map(|ti| data[(ti * h * w + cell) * d + c]).sum::<f64>() / t as f64;
                worst = worst.max((v_s.get(cell, c) - mean).abs());
            }
        }
        for ti in 0..t {
            for c in 0..d {
                let mean = (0..h * w).map(|cell| data[(ti * h * w + cell) * d + c]).sum::<f64>() / (h * w) as f64;
                worst = worst.max((v_t.get(ti, c) - mean).abs());
            }
        }
        let weight = Matrix::from_rows(d, k, (0..d * k).map(|_| rng.random_range(-1.0..1.0)).collect())
            .map_err(|e| e.to_string())?;
        let weights = ProjectionWeights::new(weight, vec![0.0; k]).map_err(|e| e.to_string())?;
        let out = concat_project(&v_t, &v_s, &weights).map_err(|e| e.to_string())?;
        check(out.rows == t + h * w && out.cols == k, || {
            format!("shape {}x{} for T={t} h={h} w={w}", out.rows, out.cols)
        })?;
    }
    check(worst <= 1e-12, || format!("pooling off by {worst:e}"))?;
    let g = patch_grid(224, 14);
    check(g * g == 256, || format!("{g}x{g} grid"))?;
    Ok(format!("500 draws obey T + h*w, pooling within {worst:.1e}, 224/14 -> {} rows", g * g))
}

fn prompt_fidelity() -> Outcome {
    const SYSTEM_SEGMENT: &str = "You are DriVLMe. You are responsible for safely piloting a car according to the instructions of a passenger. You must communicate with the passenger and make high-level decisions regarding the current navigational goals.";
    const PLANNER_SEGMENT: &str = "You have a planning tool that you can plan your path to the destination. You can call it by plan(destination), and it will return you a plan to get to your destination. If you don't have a destination in your mind, you can return plan(None).";
    let (map, story) = bundled("townA_long_horizon");
    let mut s = Session::new(map, story, SimConfig::default(), "test", None).map_err(|e| e.to_string())?;
    s.begin_tick().map_err(|e| e.to_string())?;
    let mut req = s.open_decision(TaskKind::NfD).map_err(|e| e.to_string())?.request;
    req.frames = None;
    let p = build_prompt(&req, PromptStyle::Drivlme, &[]).map_err(|e| e.to_string())?;
    check(p.starts_with(&format!("(System Message): {SYSTEM_SEGMENT}")), || "system message not first".into())?;
    check(p.contains(PLANNER_SEGMENT), || "planner instruction missing".into())?;
    req.phase = 2;
    req.q1_answer = Some("LaneFollow".into());
    let b = build_prompt(&req, PromptStyle::Gpt4Baseline, &[]).map_err(|e| e.to_string())?;
    let markers = [
        "[Image]",
        "[Header]",
        "[Dialogue History]",
        "[Current Map]",
        "[Physical Action History]",
        "[Planner]",
        "[Question 1]",
        "[Question 2]",
    ];
    let mut at = 0;
    for m in markers {
        let i = b[at..].find(m).ok_or_else(|| format!("{m} missing or out of order"))?;
        at += i + m.len();
    }
    Ok("drivlme segments verbatim; 8 baseline sections in order".into())
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("route-planner oracle equivalence", planner_oracle_equivalence),
        ("closed-loop protocol soundness", closed_loop_soundness),
        ("motion control", motion_control),
        ("2 Hz cadence", two_hertz_cadence),
        ("verbalizer goldens", verbalizer_goldens),
        ("metric oracles", metric_oracles),
        ("determinism", determinism),
        ("feature pipeline", feature_pipeline),
        ("prompt fidelity", prompt_fidelity),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let result = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or(e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default())
        });
        match result {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
