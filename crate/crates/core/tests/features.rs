//! Pooling and projection against explicit-loop oracles, the row-count
//! law, window sampling and the feature file container.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sdnloop::features::*;

fn random_map(rng: &mut ChaCha8Rng, t: usize, h: usize, w: usize, d: usize) -> FeatureMap {
    let data = (0..t * h * w * d).map(|_| rng.random_range(-3.0..3.0)).collect();
    FeatureMap::new(t, h, w, d, data).unwrap()
}

/// Index into a T × h × w × D buffer, written out independently of the
/// library's accessor.
fn flat(t: usize, i: usize, j: usize, c: usize, h: usize, w: usize, d: usize) -> usize {
    c + d * (j + w * (i + h * t))
}

fn loop_spatial(f: &FeatureMap) -> Vec<Vec<f64>> {
    let mut rows = Vec::new();
    for i in 0..f.h {
        for j in 0..f.w {
            let mut row = vec![0.0; f.d];
            for (c, slot) in row.iter_mut().enumerate() {
                let mut sum = 0.0;
                for t in 0..f.t {
                    sum += f.data[flat(t, i, j, c, f.h, f.w, f.d)];
                }
                *slot = sum / f.t as f64;
            }
            rows.push(row);
        }
    }
    rows
}

fn loop_temporal(f: &FeatureMap) -> Vec<Vec<f64>> {
    let mut rows = Vec::new();
    for t in 0..f.t {
        let mut row = vec![0.0; f.d];
        for (c, slot) in row.iter_mut().enumerate() {
            let mut sum = 0.0;
            for i in 0..f.h {
                for j in 0..f.w {
                    sum += f.data[flat(t, i, j, c, f.h, f.w, f.d)];
                }
            }
            *slot = sum / (f.h * f.w) as f64;
        }
        rows.push(row);
    }
    rows
}

fn assert_rows(m: &Matrix, rows: &[Vec<f64>], tol: f64) {
    assert_eq!(m.rows, rows.len());
    for (r, want) in rows.iter().enumerate() {
        assert_eq!(m.row(r).len(), want.len());
        for (a, b) in m.row(r).iter().zip(want) {
            assert!((a - b).abs() <= tol, "row {r}: {a} vs {b}");
        }
    }
}

#[test]
fn pooling_matches_loop_oracles() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for (t, h, w, d) in [(3, 2, 2, 3), (1, 4, 3, 2), (5, 1, 1, 4), (7, 3, 5, 6)] {
        let f = random_map(&mut rng, t, h, w, d);
        assert_rows(&pool_spatial_rep(&f), &loop_spatial(&f), 1e-12);
        assert_rows(&pool_temporal_rep(&f), &loop_temporal(&f), 1e-12);
    }
}

#[test]
fn pooling_boundaries() {
    let c = FeatureMap::new(3, 2, 2, 2, vec![1.25; 24]).unwrap();
    assert!(pool_spatial_rep(&c).data.iter().all(|&x| x == 1.25));
    assert!(pool_temporal_rep(&c).data.iter().all(|&x| x == 1.25));
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let single = random_map(&mut rng, 1, 2, 3, 2);
    assert_eq!(pool_spatial_rep(&single).data, single.data);
    let point = random_map(&mut rng, 4, 1, 1, 3);
    assert_eq!(pool_temporal_rep(&point).data, point.data);
}

fn loop_project(v_t: &Matrix, v_s: &Matrix, w: &ProjectionWeights) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for m in [v_t, v_s] {
        for r in 0..m.rows {
            let mut row = Vec::new();
            for k in 0..w.weight.cols {
                let mut acc = w.bias[k];
                for i in 0..m.cols {
                    acc += m.data[r * m.cols + i] * w.weight.data[i * w.weight.cols + k];
                }
                row.push(acc);
            }
            out.push(row);
        }
    }
    out
}

fn random_weights(rng: &mut ChaCha8Rng, d: usize, k: usize) -> ProjectionWeights {
    let weight = Matrix::from_rows(d, k, (0..d * k).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
    ProjectionWeights::new(weight, (0..k).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

#[test]
fn projection_matches_loop_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let f = random_map(&mut rng, 2, 2, 2, 3);
    let (v_t, v_s) = (pool_temporal_rep(&f), pool_spatial_rep(&f));
    let w = random_weights(&mut rng, 3, 5);
    let out = concat_project(&v_t, &v_s, &w).unwrap();
    assert_eq!((out.rows, out.cols), (6, 5));
    assert_rows(&out, &loop_project(&v_t, &v_s, &w), 1e-12);

    let id = concat_project(&v_t, &v_s, &ProjectionWeights::identity(3)).unwrap();
    let stacked: Vec<f64> = v_t.data.iter().chain(&v_s.data).copied().collect();
    assert_eq!(id.data, stacked);
}

#[test]
fn projection_rejects_mismatched_dimensions() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let f = random_map(&mut rng, 2, 2, 2, 3);
    let w = random_weights(&mut rng, 4, 2);
    assert!(matches!(
        concat_project(&pool_temporal_rep(&f), &pool_spatial_rep(&f), &w),
        Err(FeatureError::DimensionMismatch(_))
    ));
    assert!(ProjectionWeights::new(Matrix::zeros(2, 2), vec![0.0]).is_err());
    assert!(FeatureMap::new(0, 1, 1, 1, vec![]).is_err());
    assert!(FeatureMap::new(1, 1, 1, 1, vec![f64::NAN]).is_err());
}

#[test]
fn vit_l14_at_224_gives_256_spatial_rows() {
    let h = patch_grid(224, 14);
    assert_eq!(h, 16);
    let f = FeatureMap::new(20, h, h, 2, vec![0.5; 20 * h * h * 2]).unwrap();
    let v_s = pool_spatial_rep(&f);
    assert_eq!(v_s.rows, 256);
    let out = concat_project(&pool_temporal_rep(&f), &v_s, &ProjectionWeights::identity(2)).unwrap();
    assert_eq!(out.rows, 276);
}

#[test]
fn shape_law_on_500_random_draws() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..500 {
        let (t, h, w, d, k) = (
            rng.random_range(1..=8),
            rng.random_range(1..=6),
            rng.random_range(1..=6),
            rng.random_range(1..=5),
            rng.random_range(1..=4),
        );
        let f = random_map(&mut rng, t, h, w, d);
        let weights = random_weights(&mut rng, d, k);
        let out = concat_project(&pool_temporal_rep(&f), &pool_spatial_rep(&f), &weights).unwrap();
        assert_eq!((out.rows, out.cols), (t + h * w, k));
    }
}

#[test]
fn window_sampling_examples() {
    let ids = |n: usize, t: f64| sample_window(&FrameStream::uniform(n, 10.0, "f"), t, WindowMode::default()).unwrap();
    let hundred = ids(100, 9.9);
    assert_eq!(hundred.len(), 20);
    assert_eq!(hundred.first().unwrap(), "f-000060");
    assert_eq!(hundred[1], "f-000062");
    assert_eq!(ids(5, 0.4), ["f-000000", "f-000002", "f-000004"]);
    assert_eq!(ids(1, 0.0), ["f-000000"]);
    let kept = sample_window(&FrameStream::uniform(100, 10.0, "f"), 9.9, WindowMode::FortyKept).unwrap();
    assert_eq!(kept.len(), 40);
    assert!(matches!(
        sample_window(&FrameStream::default(), 0.0, WindowMode::default()),
        Err(FeatureError::EmptyStream)
    ));
}

#[test]
fn feature_file_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let f = random_map(&mut rng, 3, 2, 2, 4);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("clip.sdnf");
    let ids: Vec<String> = (0..3).map(|i| format!("frame-{i:06}")).collect();
    write_feature_file(&path, &f, DType::F64, &ids).unwrap();
    let (back, manifest) = read_feature_file(&path).unwrap();
    assert_eq!(back, f);
    assert_eq!(manifest.frames.len(), 3);
    assert_eq!(manifest.frames[1].offset - manifest.frames[0].offset, (2 * 2 * 4 * 8) as u64);

    let bytes = encode_feature_map(&f, DType::F32);
    let (narrow, dtype) = decode_feature_map(&bytes).unwrap();
    assert_eq!(dtype, DType::F32);
    for (a, b) in narrow.data.iter().zip(&f.data) {
        assert!((a - b).abs() < 1e-6);
    }
    let mut bad = bytes.clone();
    bad[0] = b'X';
    assert!(decode_feature_map(&bad).is_err());
    assert!(decode_feature_map(&bytes[..bytes.len() - 1]).is_err());
}

fn dims() -> impl Strategy<Value = (usize, usize, usize, usize, u64)> {
    (1usize..6, 1usize..5, 1usize..5, 1usize..5, any::<u64>())
}

fn rel_close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #[test]
    fn projection_is_linear_without_bias((t, h, w, d, seed) in dims(), alpha in -4.0f64..4.0, k in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_map(&mut rng, t, h, w, d);
        let mut weights = random_weights(&mut rng, d, k);
        weights.bias = vec![0.0; k];
        let (v_t, v_s) = (pool_temporal_rep(&f), pool_spatial_rep(&f));
        let scale = |m: &Matrix| Matrix { data: m.data.iter().map(|x| x * alpha).collect(), ..m.clone() };
        let base = concat_project(&v_t, &v_s, &weights).unwrap();
        let scaled = concat_project(&scale(&v_t), &scale(&v_s), &weights).unwrap();
        for (a, b) in scaled.data.iter().zip(&base.data) {
            prop_assert!(rel_close(*a, alpha * b), "{a} vs {}", alpha * b);
        }
    }

    #[test]
    fn global_means_commute((t, h, w, d, seed) in dims()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_map(&mut rng, t, h, w, d);
        let (v_t, v_s) = (pool_temporal_rep(&f), pool_spatial_rep(&f));
        for c in 0..d {
            let all = (0..t * h * w).map(|cell| f.data[cell * d + c]).sum::<f64>() / (t * h * w) as f64;
            let mt = (0..t).map(|r| v_t.get(r, c)).sum::<f64>() / t as f64;
            let ms = (0..h * w).map(|r| v_s.get(r, c)).sum::<f64>() / (h * w) as f64;
            prop_assert!((all - mt).abs() <= 1e-12 && (all - ms).abs() <= 1e-12);
        }
    }

    #[test]
    fn window_is_chronological_and_bounded(n in 1usize..200, frac in 0.0f64..1.0) {
        let stream = FrameStream::uniform(n, 10.0, "f");
        let t = frac * (n as f64 - 1.0) / 10.0;
        let ids = sample_window(&stream, t, WindowMode::default()).unwrap();
        prop_assert!(!ids.is_empty() && ids.len() <= 20);
        let mut sorted = ids.clone();
        sorted.sort();
        prop_assert_eq!(ids, sorted);
    }
}
