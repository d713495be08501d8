use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::EnvError;
use crate::math::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    /// Centripetal Catmull-Rom through the control points.
    #[default]
    CatmullRom,
    /// Straight segments between control points.
    Linear,
}

fn default_samples() -> usize {
    1024
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSpec {
    pub control_points: Vec<Vec3>,
    #[serde(default)]
    pub closed: bool,
    /// Approximate number of arc-length table entries for the whole path.
    #[serde(default = "default_samples")]
    pub sample_count: usize,
    #[serde(default)]
    pub interpolation: Interpolation,
}

impl PathSpec {
    pub fn new(control_points: Vec<Vec3>, closed: bool) -> Self {
        PathSpec {
            control_points,
            closed,
            sample_count: default_samples(),
            interpolation: Interpolation::CatmullRom,
        }
    }

    pub fn linear(mut self) -> Self {
        self.interpolation = Interpolation::Linear;
        self
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        let pts = &self.control_points;
        let min = if self.closed { 3 } else { 2 };
        if pts.len() < min {
            return Err(EnvError::TooFewPoints {
                found: pts.len(),
                required: min,
            });
        }
        if pts.iter().any(|p| !p.is_finite()) {
            return Err(EnvError::InvalidSpec("control points must be finite"));
        }
        for i in 1..pts.len() {
            if pts[i] == pts[i - 1] {
                return Err(EnvError::DuplicatePoint(i));
            }
        }
        if self.closed && pts[0] == pts[pts.len() - 1] {
            return Err(EnvError::DuplicatePoint(0));
        }
        if self.sample_count == 0 {
            return Err(EnvError::InvalidSpec("sample_count must be positive"));
        }
        Ok(())
    }

    fn segment_count(&self) -> usize {
        if self.closed {
            self.control_points.len()
        } else {
            self.control_points.len() - 1
        }
    }

    /// The four points that shape segment `i` (from point `i` to `i + 1`).
    fn segment_points(&self, i: usize) -> [Vec3; 4] {
        let p = &self.control_points;
        let n = p.len();
        if self.closed {
            [p[(i + n - 1) % n], p[i % n], p[(i + 1) % n], p[(i + 2) % n]]
        } else {
            let p1 = p[i];
            let p2 = p[i + 1];
            let p0 = if i == 0 { p1 * 2.0 - p2 } else { p[i - 1] };
            let p3 = if i + 2 < n { p[i + 2] } else { p2 * 2.0 - p1 };
            [p0, p1, p2, p3]
        }
    }
}

/// Cubic Hermite form of one centripetal Catmull-Rom segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct Segment {
    p1: Vec3,
    p2: Vec3,
    m1: Vec3,
    m2: Vec3,
}

impl Segment {
    fn catmull_rom([p0, p1, p2, p3]: [Vec3; 4]) -> Segment {
        let knot = |a: Vec3, b: Vec3| libm::sqrt(a.distance(b)).max(1e-12);
        let d01 = knot(p0, p1);
        let d12 = knot(p1, p2);
        let d23 = knot(p2, p3);
        let m1 = ((p1 - p0) / d01 - (p2 - p0) / (d01 + d12) + (p2 - p1) / d12) * d12;
        let m2 = ((p2 - p1) / d12 - (p3 - p1) / (d12 + d23) + (p3 - p2) / d23) * d12;
        Segment { p1, p2, m1, m2 }
    }

    fn linear(p1: Vec3, p2: Vec3) -> Segment {
        let d = p2 - p1;
        Segment {
            p1,
            p2,
            m1: d,
            m2: d,
        }
    }

    fn position(&self, t: f64) -> Vec3 {
        let t2 = t * t;
        let t3 = t2 * t;
        self.p1 * (2.0 * t3 - 3.0 * t2 + 1.0)
            + self.m1 * (t3 - 2.0 * t2 + t)
            + self.p2 * (-2.0 * t3 + 3.0 * t2)
            + self.m2 * (t3 - t2)
    }

    fn derivative(&self, t: f64) -> Vec3 {
        let t2 = t * t;
        self.p1 * (6.0 * t2 - 6.0 * t)
            + self.m1 * (3.0 * t2 - 4.0 * t + 1.0)
            + self.p2 * (-6.0 * t2 + 6.0 * t)
            + self.m2 * (3.0 * t2 - 2.0 * t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathSample {
    pub s: f64,
    pub position: Vec3,
    pub tangent: Vec3,
}

/// Arc-length parameterization of a [`PathSpec`].
///
/// Queries interpolate the curve parameter from the table and evaluate the
/// curve itself, so returned positions lie exactly on the curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathTable {
    pub total_length: f64,
    pub closed: bool,
    pub samples: Vec<PathSample>,
    params: Vec<f64>,
    segments: Vec<Segment>,
}

// 5-point Gauss-Legendre nodes/weights on [-1, 1].
const GL_NODES: [f64; 5] = [
    0.0,
    -0.538_469_310_105_683_1,
    0.538_469_310_105_683_1,
    -0.906_179_845_938_664,
    0.906_179_845_938_664,
];
const GL_WEIGHTS: [f64; 5] = [
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
    0.236_926_885_056_189_1,
];

pub fn build_path(spec: &PathSpec) -> Result<PathTable, EnvError> {
    spec.validate()?;
    let nseg = spec.segment_count();
    let segments: Vec<Segment> = (0..nseg)
        .map(|i| match spec.interpolation {
            Interpolation::CatmullRom => Segment::catmull_rom(spec.segment_points(i)),
            Interpolation::Linear => {
                let [_, p1, p2, _] = spec.segment_points(i);
                Segment::linear(p1, p2)
            }
        })
        .collect();

    let per_segment = match spec.interpolation {
        Interpolation::Linear => 1,
        Interpolation::CatmullRom => spec.sample_count.div_ceil(nseg).max(1),
    };
    let mut params = Vec::with_capacity(nseg * per_segment + 1);
    let mut samples = Vec::with_capacity(nseg * per_segment + 1);
    let mut s = 0.0;
    let push = |u: f64, s: f64, params: &mut Vec<f64>, samples: &mut Vec<PathSample>| {
        let (seg, t) = locate(&segments, u);
        params.push(u);
        samples.push(PathSample {
            s,
            position: segments[seg].position(t),
            tangent: unit_tangent(&segments[seg], t),
        });
    };
    push(0.0, 0.0, &mut params, &mut samples);
    for (i, seg) in segments.iter().enumerate() {
        for k in 0..per_segment {
            let a = k as f64 / per_segment as f64;
            let b = (k + 1) as f64 / per_segment as f64;
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            let len: f64 = GL_NODES
                .iter()
                .zip(GL_WEIGHTS)
                .map(|(x, w)| w * seg.derivative(mid + half * x).norm())
                .sum::<f64>()
                * half;
            s += len;
            push(i as f64 + b, s, &mut params, &mut samples);
        }
    }
    Ok(PathTable {
        total_length: s,
        closed: spec.closed,
        samples,
        params,
        segments,
    })
}

fn locate(segments: &[Segment], u: f64) -> (usize, f64) {
    let n = segments.len();
    let i = (libm::floor(u) as usize).min(n - 1);
    (i, (u - i as f64).clamp(0.0, 1.0))
}

fn unit_tangent(seg: &Segment, t: f64) -> Vec3 {
    seg.derivative(t)
        .normalized()
        .or_else(|| (seg.p2 - seg.p1).normalized())
        .unwrap_or(Vec3::Z)
}

impl PathTable {
    fn param_at(&self, s: f64) -> f64 {
        let idx = self.samples.partition_point(|x| x.s <= s);
        if idx == 0 {
            return self.params[0];
        }
        if idx >= self.samples.len() {
            return *self.params.last().unwrap();
        }
        let (a, b) = (&self.samples[idx - 1], &self.samples[idx]);
        let w = if b.s > a.s {
            (s - a.s) / (b.s - a.s)
        } else {
            0.0
        };
        self.params[idx - 1] + w * (self.params[idx] - self.params[idx - 1])
    }

    /// Wraps (closed) or range-checks (open) an arc length.
    pub fn normalize_s(&self, s: f64) -> Result<f64, EnvError> {
        if !s.is_finite() {
            return Err(EnvError::OutOfRange {
                s,
                length: self.total_length,
            });
        }
        if self.closed {
            let mut r = libm::fmod(s, self.total_length);
            if r < 0.0 {
                r += self.total_length;
            }
            Ok(if r >= self.total_length { 0.0 } else { r })
        } else if (-1e-9..=self.total_length + 1e-9).contains(&s) {
            Ok(s.clamp(0.0, self.total_length))
        } else {
            Err(EnvError::OutOfRange {
                s,
                length: self.total_length,
            })
        }
    }

    /// Position and unit tangent at arc length `s`.
    pub fn pose_at(&self, s: f64) -> Result<(Vec3, Vec3), EnvError> {
        let s = self.normalize_s(s)?;
        let (seg, t) = locate(&self.segments, self.param_at(s));
        let seg = &self.segments[seg];
        Ok((seg.position(t), unit_tangent(seg, t)))
    }

    /// Position at curve parameter `u` in `[0, segments]`; exposed for tests
    /// that compare against an independent curve evaluation.
    pub fn position_at_param(&self, u: f64) -> Vec3 {
        let (seg, t) = locate(&self.segments, u);
        self.segments[seg].position(t)
    }

    pub fn segment_count(&self) -> usize {
        self.segments.len()
    }
}
