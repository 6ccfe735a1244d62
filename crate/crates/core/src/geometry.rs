//! Planar geometry helpers: points, angles, polylines with arc-length
//! parameterization, and oriented-box overlap tests.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// A 2D point or vector in meters. Right-handed frame, headings CCW from +x.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl From<[f64; 2]> for Vec2 {
    fn from(a: [f64; 2]) -> Self {
        Vec2::new(a[0], a[1])
    }
}

impl From<Vec2> for [f64; 2] {
    fn from(v: Vec2) -> Self {
        [v.x, v.y]
    }
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn from_heading(heading: f64) -> Self {
        Self::new(heading.cos(), heading.sin())
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product; positive when `o` is left of `self`.
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, o: Vec2) -> f64 {
        (self - o).norm()
    }

    pub fn scale(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }

    pub fn heading(self) -> f64 {
        self.y.atan2(self.x)
    }

    /// Unit normal pointing to the right of this direction.
    pub fn right_normal(self) -> Vec2 {
        let n = self.norm();
        Vec2::new(self.y / n, -self.x / n)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl std::ops::Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl std::ops::Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

/// Wrap an angle to (-π, π].
pub fn wrap_angle(a: f64) -> f64 {
    let mut r = a % (2.0 * PI);
    if r <= -PI {
        r += 2.0 * PI;
    } else if r > PI {
        r -= 2.0 * PI;
    }
    r
}

/// Polyline with cumulative arc length at every vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    points: Vec<Vec2>,
    cum: Vec<f64>,
}

/// Result of projecting a point onto a polyline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub segment: usize,
    /// Arc length of the foot point, clamped to the polyline.
    pub s: f64,
    /// Signed perpendicular offset, positive to the right of travel.
    pub lateral: f64,
    /// Euclidean distance from the point to the (clamped) foot point.
    pub distance: f64,
    /// Arc length without clamping on the first and last segment.
    pub s_unclamped: f64,
}

impl Polyline {
    /// Builds a polyline. Returns `None` with fewer than two points or a
    /// zero-length segment.
    pub fn new(points: Vec<Vec2>) -> Option<Self> {
        if points.len() < 2 {
            return None;
        }
        let mut cum = Vec::with_capacity(points.len());
        cum.push(0.0);
        for w in points.windows(2) {
            let d = w[0].dist(w[1]);
            if !(d > 1e-9) || !d.is_finite() {
                return None;
            }
            cum.push(cum.last().unwrap() + d);
        }
        Some(Self { points, cum })
    }

    pub fn points(&self) -> &[Vec2] {
        &self.points
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.cum
    }

    pub fn length(&self) -> f64 {
        *self.cum.last().unwrap()
    }

    pub fn segment_count(&self) -> usize {
        self.points.len() - 1
    }

    pub fn segment_dir(&self, i: usize) -> Vec2 {
        let d = self.points[i + 1] - self.points[i];
        d.scale(1.0 / d.norm())
    }

    /// Segment index containing arc length `s` (clamped).
    pub fn segment_at(&self, s: f64) -> usize {
        let n = self.segment_count();
        if s <= 0.0 {
            return 0;
        }
        match self.cum.binary_search_by(|c| c.total_cmp(&s)) {
            Ok(i) => i.min(n - 1),
            Err(i) => (i - 1).min(n - 1),
        }
    }

    /// Point at arc length `s` shifted `offset` meters to the right of the
    /// segment direction. Values outside [0, length] extrapolate linearly
    /// along the first or last segment.
    pub fn point_at(&self, s: f64, offset: f64) -> Vec2 {
        let i = self.segment_at(s);
        let dir = self.segment_dir(i);
        let base = self.points[i] + dir.scale(s - self.cum[i]);
        base + dir.right_normal().scale(offset)
    }

    pub fn heading_at(&self, s: f64) -> f64 {
        self.segment_dir(self.segment_at(s)).heading()
    }

    /// Projects `p` onto the polyline shifted `offset` meters to the right.
    /// Ties between segments resolve to the lowest segment index.
    pub fn project(&self, p: Vec2, offset: f64) -> Projection {
        let mut best: Option<Projection> = None;
        let last = self.segment_count() - 1;
        for i in 0..=last {
            let proj = self.project_segment(i, p, offset);
            if best.is_none_or(|b| proj.distance < b.distance) {
                best = Some(proj);
            }
        }
        let mut best = best.unwrap();
        if best.segment == 0 || best.segment == last {
            let seg = best.segment;
            let dir = self.segment_dir(seg);
            let a = self.points[seg] + dir.right_normal().scale(offset);
            let along = (p - a).dot(dir);
            let unclamped = self.cum[seg] + along;
            if (seg == 0 && unclamped < 0.0) || (seg == last && unclamped > self.length()) {
                best.s_unclamped = unclamped;
            }
        }
        best
    }

    pub fn project_segment(&self, i: usize, p: Vec2, offset: f64) -> Projection {
        let dir = self.segment_dir(i);
        let n = dir.right_normal();
        let a = self.points[i] + n.scale(offset);
        let len = self.cum[i + 1] - self.cum[i];
        let along = (p - a).dot(dir).clamp(0.0, len);
        let foot = a + dir.scale(along);
        let s = self.cum[i] + along;
        Projection { segment: i, s, lateral: (p - a).dot(n), distance: p.dist(foot), s_unclamped: s }
    }

    /// Axis-aligned bounding box (min, max).
    pub fn bounds(&self) -> (Vec2, Vec2) {
        let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in &self.points {
            lo.x = lo.x.min(p.x);
            lo.y = lo.y.min(p.y);
            hi.x = hi.x.max(p.x);
            hi.y = hi.y.max(p.y);
        }
        (lo, hi)
    }
}

/// Cubic Hermite curve sampled into a polyline, used for junction connectors
/// and U-turn paths.
pub fn hermite(p0: Vec2, h0: f64, p1: Vec2, h1: f64, tangent: f64, samples: usize) -> Polyline {
    let m0 = Vec2::from_heading(h0).scale(tangent);
    let m1 = Vec2::from_heading(h1).scale(tangent);
    let mut pts = Vec::with_capacity(samples + 1);
    for k in 0..=samples {
        let t = k as f64 / samples as f64;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        let p = p0.scale(h00) + m0.scale(h10) + p1.scale(h01) + m1.scale(h11);
        if pts.last().is_none_or(|q: &Vec2| q.dist(p) > 1e-6) {
            pts.push(p);
        }
    }
    if pts.len() < 2 {
        pts = vec![p0, p0 + Vec2::from_heading(h0).scale(0.1)];
    }
    Polyline::new(pts).expect("hermite samples are distinct")
}

/// Oriented rectangle footprint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Footprint {
    pub center: Vec2,
    pub heading: f64,
    pub length: f64,
    pub width: f64,
}

impl Footprint {
    pub fn corners(&self) -> [Vec2; 4] {
        let f = Vec2::from_heading(self.heading);
        let l = Vec2::new(-f.y, f.x);
        let hf = f.scale(self.length / 2.0);
        let hl = l.scale(self.width / 2.0);
        [self.center + hf + hl, self.center + hf - hl, self.center - hf - hl, self.center - hf + hl]
    }

    /// Separating-axis overlap test.
    pub fn overlaps(&self, other: &Footprint) -> bool {
        let a = self.corners();
        let b = other.corners();
        let axes = [
            Vec2::from_heading(self.heading),
            Vec2::from_heading(self.heading + PI / 2.0),
            Vec2::from_heading(other.heading),
            Vec2::from_heading(other.heading + PI / 2.0),
        ];
        axes.iter().all(|ax| {
            let (amin, amax) = extent(&a, *ax);
            let (bmin, bmax) = extent(&b, *ax);
            amax >= bmin && bmax >= amin
        })
    }
}

fn extent(pts: &[Vec2; 4], axis: Vec2) -> (f64, f64) {
    pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        let d = p.dot(axis);
        (lo.min(d), hi.max(d))
    })
}
