//! Frame-window sampling and the pooling/projection arithmetic applied to
//! externally supplied feature maps.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Raw frames covered by one window.
pub const WINDOW_FRAMES: usize = 40;
/// Subsampling step within the window.
pub const WINDOW_STEP: usize = 2;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("frame stream is empty")]
    EmptyStream,
    #[error("frame timestamps must be strictly increasing (index {0})")]
    NonMonotonic(usize),
    #[error("time {t} precedes the first frame at {first}")]
    BeforeStart { t: f64, first: f64 },
    #[error("invalid feature map: {0}")]
    InvalidMap(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("feature file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowMode {
    /// 40 raw frames, every 2nd kept (at most 20 ids).
    #[default]
    SubsampledWithin40,
    /// 40 kept frames spanning 80 raw frames.
    FortyKept,
}

impl WindowMode {
    fn span(self) -> usize {
        match self {
            WindowMode::SubsampledWithin40 => WINDOW_FRAMES,
            WindowMode::FortyKept => WINDOW_FRAMES * WINDOW_STEP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub t: f64,
    pub id: String,
}

/// Chronological frame references, nominally at 10 Hz.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FrameStream {
    frames: Vec<Frame>,
}

impl FrameStream {
    pub fn new(frames: Vec<Frame>) -> Result<Self, FeatureError> {
        for (i, w) in frames.windows(2).enumerate() {
            if !(w[1].t > w[0].t) {
                return Err(FeatureError::NonMonotonic(i + 1));
            }
        }
        Ok(Self { frames })
    }

    /// Frames at `rate_hz` starting at t = 0 with ids `prefix-000000`, ...
    pub fn uniform(count: usize, rate_hz: f64, prefix: &str) -> Self {
        let frames = (0..count).map(|i| Frame { t: i as f64 / rate_hz, id: format!("{prefix}-{i:06}") }).collect();
        Self { frames }
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn push(&mut self, frame: Frame) -> Result<(), FeatureError> {
        if self.frames.last().is_some_and(|l| !(frame.t > l.t)) {
            return Err(FeatureError::NonMonotonic(self.frames.len()));
        }
        self.frames.push(frame);
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

/// Frame ids for the decision at time `t`: the most recent window of
/// frames stamped at or before `t`, then every 2nd from the oldest.
pub fn sample_window(stream: &FrameStream, t: f64, mode: WindowMode) -> Result<Vec<String>, FeatureError> {
    let first = stream.frames.first().ok_or(FeatureError::EmptyStream)?;
    if t < first.t {
        return Err(FeatureError::BeforeStart { t, first: first.t });
    }
    let available = stream.frames.partition_point(|f| f.t <= t);
    let window = &stream.frames[available.saturating_sub(mode.span())..available];
    Ok(window.iter().step_by(WINDOW_STEP).map(|f| f.id.clone()).collect())
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_rows(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, FeatureError> {
        if data.len() != rows * cols {
            return Err(FeatureError::DimensionMismatch(format!("{} values for {rows}x{cols}", data.len())));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }
}

/// Feature tensor of shape T × h × w × D.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    pub t: usize,
    pub h: usize,
    pub w: usize,
    pub d: usize,
    pub data: Vec<f64>,
}

impl FeatureMap {
    pub fn new(t: usize, h: usize, w: usize, d: usize, data: Vec<f64>) -> Result<Self, FeatureError> {
        if t == 0 || h == 0 || w == 0 || d == 0 {
            return Err(FeatureError::InvalidMap(format!("all dims must be >= 1, got {t}x{h}x{w}x{d}")));
        }
        if data.len() != t * h * w * d {
            return Err(FeatureError::InvalidMap(format!("{} values for {t}x{h}x{w}x{d}", data.len())));
        }
        if let Some(i) = data.iter().position(|x| !x.is_finite()) {
            return Err(FeatureError::InvalidMap(format!("non-finite entry at flat index {i}")));
        }
        Ok(Self { t, h, w, d, data })
    }

    pub fn at(&self, t: usize, i: usize, j: usize, c: usize) -> f64 {
        self.data[((t * self.h + i) * self.w + j) * self.d + c]
    }

    fn cell(&self, t: usize, cell: usize) -> &[f64] {
        let start = (t * self.h * self.w + cell) * self.d;
        &self.data[start..start + self.d]
    }
}

/// v_s: mean over T per spatial cell, rows in row-major (i, j) order.
pub fn pool_spatial_rep(f: &FeatureMap) -> Matrix {
    let cells = f.h * f.w;
    let mut out = Matrix::zeros(cells, f.d);
    for cell in 0..cells {
        let row = &mut out.data[cell * f.d..(cell + 1) * f.d];
        for t in 0..f.t {
            for (acc, x) in row.iter_mut().zip(f.cell(t, cell)) {
                *acc += x;
            }
        }
        for acc in row.iter_mut() {
            *acc /= f.t as f64;
        }
    }
    out
}

/// v_t: mean over the h·w cells per frame.
pub fn pool_temporal_rep(f: &FeatureMap) -> Matrix {
    let cells = f.h * f.w;
    let mut out = Matrix::zeros(f.t, f.d);
    for t in 0..f.t {
        let row = &mut out.data[t * f.d..(t + 1) * f.d];
        for cell in 0..cells {
            for (acc, x) in row.iter_mut().zip(f.cell(t, cell)) {
                *acc += x;
            }
        }
        for acc in row.iter_mut() {
            *acc /= cells as f64;
        }
    }
    out
}

/// Linear projection D → K.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionWeights {
    /// D × K, row-major.
    pub weight: Matrix,
    pub bias: Vec<f64>,
}

impl ProjectionWeights {
    pub fn new(weight: Matrix, bias: Vec<f64>) -> Result<Self, FeatureError> {
        if bias.len() != weight.cols {
            return Err(FeatureError::DimensionMismatch(format!("bias {} vs K = {}", bias.len(), weight.cols)));
        }
        if weight.data.iter().chain(&bias).any(|x| !x.is_finite()) {
            return Err(FeatureError::InvalidMap("non-finite projection weights".into()));
        }
        Ok(Self { weight, bias })
    }

    pub fn identity(d: usize) -> Self {
        let mut weight = Matrix::zeros(d, d);
        for i in 0..d {
            weight.data[i * d + i] = 1.0;
        }
        Self { weight, bias: vec![0.0; d] }
    }
}

/// Stacks v_t rows above v_s rows and maps every row by x·W + b.
pub fn concat_project(v_t: &Matrix, v_s: &Matrix, weights: &ProjectionWeights) -> Result<Matrix, FeatureError> {
    let d = weights.weight.rows;
    if v_t.cols != d || v_s.cols != d {
        return Err(FeatureError::DimensionMismatch(format!(
            "v_t has {} columns, v_s has {}, W expects {d}",
            v_t.cols, v_s.cols
        )));
    }
    let k = weights.weight.cols;
    let rows = v_t.rows + v_s.rows;
    let mut out = Matrix::zeros(rows, k);
    for r in 0..rows {
        let x = if r < v_t.rows { v_t.row(r) } else { v_s.row(r - v_t.rows) };
        for c in 0..k {
            let mut acc = weights.bias[c];
            for (i, xi) in x.iter().enumerate() {
                acc += xi * weights.weight.get(i, c);
            }
            out.data[r * k + c] = acc;
        }
    }
    Ok(out)
}

/// Patch-grid side length for a square input of `resolution` pixels.
pub fn patch_grid(resolution: usize, patch: usize) -> usize {
    resolution / patch
}

pub const FEATURE_MAGIC: &[u8; 4] = b"SDNF";
pub const FEATURE_VERSION: u32 = 1;
pub const FEATURE_MANIFEST_SCHEMA: &str = "sdnloop-features/1";
const HEADER_LEN: usize = 4 + 4 + 4 * 4 + 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DType {
    F32,
    F64,
}

impl DType {
    fn code(self) -> u8 {
        match self {
            DType::F32 => 0,
            DType::F64 => 1,
        }
    }

    fn size(self) -> usize {
        match self {
            DType::F32 => 4,
            DType::F64 => 8,
        }
    }
}

/// Sidecar mapping frame ids to byte offsets of their frame slab.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureManifest {
    pub schema: String,
    pub file: String,
    pub dtype: DType,
    pub frames: Vec<ManifestEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub offset: u64,
}

pub fn encode_feature_map(f: &FeatureMap, dtype: DType) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + f.data.len() * dtype.size());
    out.extend_from_slice(FEATURE_MAGIC);
    out.extend_from_slice(&FEATURE_VERSION.to_le_bytes());
    for dim in [f.t, f.h, f.w, f.d] {
        out.extend_from_slice(&(dim as u32).to_le_bytes());
    }
    out.extend_from_slice(&[dtype.code(), 0, 0, 0]);
    for x in &f.data {
        match dtype {
            DType::F32 => out.extend_from_slice(&(*x as f32).to_le_bytes()),
            DType::F64 => out.extend_from_slice(&x.to_le_bytes()),
        }
    }
    out
}

pub fn decode_feature_map(bytes: &[u8]) -> Result<(FeatureMap, DType), FeatureError> {
    if bytes.len() < HEADER_LEN || &bytes[..4] != FEATURE_MAGIC {
        return Err(FeatureError::Format("missing SDNF magic".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes"));
    let version = u32_at(4);
    if version != FEATURE_VERSION {
        return Err(FeatureError::Format(format!("unsupported version {version}")));
    }
    let (t, h, w, d) = (u32_at(8) as usize, u32_at(12) as usize, u32_at(16) as usize, u32_at(20) as usize);
    let dtype = match bytes[24] {
        0 => DType::F32,
        1 => DType::F64,
        c => return Err(FeatureError::Format(format!("unknown dtype code {c}"))),
    };
    let n = t
        .checked_mul(h)
        .and_then(|x| x.checked_mul(w))
        .and_then(|x| x.checked_mul(d))
        .ok_or_else(|| FeatureError::Format("dimension overflow".into()))?;
    let body = &bytes[HEADER_LEN..];
    if body.len() != n * dtype.size() {
        return Err(FeatureError::Format(format!("expected {} data bytes, found {}", n * dtype.size(), body.len())));
    }
    let data = match dtype {
        DType::F32 => body.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64).collect(),
        DType::F64 => body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect(),
    };
    Ok((FeatureMap::new(t, h, w, d, data)?, dtype))
}

/// Writes `<path>` and its sidecar `<path>.json`.
pub fn write_feature_file(path: &Path, f: &FeatureMap, dtype: DType, frame_ids: &[String]) -> Result<(), FeatureError> {
    if frame_ids.len() != f.t {
        return Err(FeatureError::DimensionMismatch(format!("{} frame ids for T = {}", frame_ids.len(), f.t)));
    }
    std::fs::File::create(path)?.write_all(&encode_feature_map(f, dtype))?;
    let slab = (f.h * f.w * f.d * dtype.size()) as u64;
    let manifest = FeatureManifest {
        schema: FEATURE_MANIFEST_SCHEMA.to_string(),
        file: path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
        dtype,
        frames: frame_ids
            .iter()
            .enumerate()
            .map(|(i, id)| ManifestEntry { id: id.clone(), offset: HEADER_LEN as u64 + i as u64 * slab })
            .collect(),
    };
    std::fs::write(sidecar_path(path), serde_json::to_string_pretty(&manifest)?)?;
    Ok(())
}

pub fn read_feature_file(path: &Path) -> Result<(FeatureMap, FeatureManifest), FeatureError> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    let (map, dtype) = decode_feature_map(&bytes)?;
    let manifest: FeatureManifest = serde_json::from_str(&std::fs::read_to_string(sidecar_path(path))?)?;
    if manifest.schema != FEATURE_MANIFEST_SCHEMA {
        return Err(FeatureError::Format(format!("manifest schema {:?}", manifest.schema)));
    }
    if manifest.dtype != dtype || manifest.frames.len() != map.t {
        return Err(FeatureError::Format("manifest does not match feature header".into()));
    }
    Ok((map, manifest))
}

fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    s.into()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_counts() {
        let s = FrameStream::uniform(100, 10.0, "f");
        let ids = sample_window(&s, 9.9, WindowMode::default()).unwrap();
        assert_eq!(ids.len(), 20);
        assert_eq!(ids[0], "f-000060");
        assert_eq!(ids[1], "f-000062");
        assert_eq!(ids[19], "f-000098");

        let s5 = FrameStream::uniform(5, 10.0, "f");
        let ids = sample_window(&s5, 0.4, WindowMode::default()).unwrap();
        assert_eq!(ids, vec!["f-000000", "f-000002", "f-000004"]);

        let s1 = FrameStream::uniform(1, 10.0, "f");
        assert_eq!(sample_window(&s1, 0.0, WindowMode::default()).unwrap(), vec!["f-000000"]);

        let ids = sample_window(&s, 9.9, WindowMode::FortyKept).unwrap();
        assert_eq!(ids.len(), 40);
        assert_eq!(ids[0], "f-000020");
    }

    #[test]
    fn window_errors() {
        assert!(matches!(
            sample_window(&FrameStream::default(), 0.0, WindowMode::default()),
            Err(FeatureError::EmptyStream)
        ));
        let s = FrameStream::uniform(3, 10.0, "f");
        assert!(sample_window(&s, -1.0, WindowMode::default()).is_err());
        assert!(FrameStream::new(vec![Frame { t: 1.0, id: "a".into() }, Frame { t: 1.0, id: "b".into() }]).is_err());
    }

    #[test]
    fn dtype_roundtrip() {
        let f = FeatureMap::new(2, 1, 2, 2, vec![0.5, -1.25, 3.0, 4.0, 5.5, 6.0, 7.0, 8.0]).unwrap();
        for dtype in [DType::F32, DType::F64] {
            let (g, dt) = decode_feature_map(&encode_feature_map(&f, dtype)).unwrap();
            assert_eq!(dt, dtype);
            assert_eq!(g, f);
        }
        assert!(decode_feature_map(b"NOPE").is_err());
    }
}
