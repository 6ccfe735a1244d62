//! Fixtures shared by the benchmarks in `benches/`.

use std::sync::Arc;

use sdnloop::assets::load_bundled_map;
use sdnloop::features::FeatureMap;
use sdnloop::metrics::{TextPair, Tokenizer};
use sdnloop::scenario::{bundled_story, Storyboard};
use sdnloop::world::MapGraph;

pub fn bundled(name: &str) -> (Arc<MapGraph>, Storyboard) {
    let story = Storyboard::from_json(bundled_story(name).expect("bundled storyboard")).expect("valid storyboard");
    let map = load_bundled_map(&story.map).expect("bundled map").expect("valid map");
    (Arc::new(map), story)
}

const WORDS: [&str; 16] = [
    "turn",
    "left",
    "right",
    "at",
    "the",
    "next",
    "intersection",
    "go",
    "straight",
    "stop",
    "near",
    "shell",
    "please",
    "i",
    "will",
    "now",
];

/// `n` candidate/reference pairs of 6 to 13 tokens built from a fixed
/// vocabulary; pair `i` is fully determined by `i`.
pub fn text_corpus(n: usize) -> Vec<TextPair> {
    let tok = Tokenizer::default();
    let sentence = |seed: usize, len: usize| {
        (0..len).map(|k| WORDS[(seed * 7 + k * 5 + k * k) % WORDS.len()]).collect::<Vec<_>>().join(" ")
    };
    (0..n).map(|i| TextPair::new(&sentence(i, 6 + i % 8), &sentence(i + 3, 6 + (i + 2) % 8), &tok)).collect()
}

/// A `t x h x w x d` feature map with smoothly varying values.
pub fn feature_map(t: usize, h: usize, w: usize, d: usize) -> FeatureMap {
    let data = (0..t * h * w * d).map(|i| ((i as f64) * 0.37).sin()).collect();
    FeatureMap::new(t, h, w, d, data).expect("consistent shape")
}
