//! Planar geometry primitives shared by the simulator, the planners and the
//! collision queries.
//!
//! Every convex shape is represented as a *core* (a point, a segment or a
//! convex quadrilateral) swept by a radius. Distances between shapes reduce
//! to distances between cores minus the radii.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

/// Two distances closer than this are considered touching.
pub const CONTACT_EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl From<[f64; 2]> for Vec2 {
    fn from(v: [f64; 2]) -> Self {
        Vec2::new(v[0], v[1])
    }
}

impl From<Vec2> for [f64; 2] {
    fn from(v: Vec2) -> Self {
        [v.x, v.y]
    }
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn from_angle(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self::new(c, s)
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn dist(self, o: Vec2) -> f64 {
        (self - o).norm()
    }

    pub fn normalized(self) -> Vec2 {
        let n = self.norm();
        if n > 0.0 {
            self * (1.0 / n)
        } else {
            self
        }
    }

    /// Counter-clockwise rotation by `theta`.
    pub fn rotate(self, theta: f64) -> Vec2 {
        let (s, c) = theta.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn lerp(self, o: Vec2, t: f64) -> Vec2 {
        self + (o - self) * t
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Wraps an angle to (-pi, pi].
pub fn wrap_angle(theta: f64) -> f64 {
    let mut a = theta % (2.0 * PI);
    if a <= -PI {
        a += 2.0 * PI;
    } else if a > PI {
        a -= 2.0 * PI;
    }
    a
}

/// Rigid planar transform: translation plus heading.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Pose2 {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose2 {
    pub const fn new(x: f64, y: f64, theta: f64) -> Self {
        Self { x, y, theta }
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    /// Maps a point expressed in this frame into the parent frame.
    pub fn transform_point(&self, p: Vec2) -> Vec2 {
        self.position() + p.rotate(self.theta)
    }

    /// Maps a parent-frame point into this frame.
    pub fn inverse_transform_point(&self, p: Vec2) -> Vec2 {
        (p - self.position()).rotate(-self.theta)
    }

    /// `self * other`: `other` is expressed in this frame.
    pub fn compose(&self, other: &Pose2) -> Pose2 {
        let p = self.transform_point(other.position());
        Pose2::new(p.x, p.y, self.theta + other.theta)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Vec2,
    pub max: Vec2,
}

impl Aabb {
    pub fn new(min: Vec2, max: Vec2) -> Self {
        Self { min, max }
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn center(&self) -> Vec2 {
        (self.min + self.max) * 0.5
    }

    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn contains_box(&self, o: &Aabb) -> bool {
        self.contains(o.min) && self.contains(o.max)
    }

    pub fn is_valid(&self) -> bool {
        self.min.is_finite() && self.max.is_finite() && self.min.x <= self.max.x && self.min.y <= self.max.y
    }

    /// Corners in counter-clockwise order.
    pub fn corners(&self) -> [Vec2; 4] {
        [
            self.min,
            Vec2::new(self.max.x, self.min.y),
            self.max,
            Vec2::new(self.min.x, self.max.y),
        ]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub a: Vec2,
    pub b: Vec2,
}

impl Segment {
    pub fn new(a: Vec2, b: Vec2) -> Self {
        Self { a, b }
    }

    pub fn length(&self) -> f64 {
        self.a.dist(self.b)
    }
}

/// Rectangle with arbitrary heading.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrientedBox {
    pub center: Vec2,
    pub half_extents: Vec2,
    pub yaw: f64,
}

impl OrientedBox {
    /// Corners in counter-clockwise order.
    pub fn corners(&self) -> [Vec2; 4] {
        let h = self.half_extents;
        [
            Vec2::new(-h.x, -h.y),
            Vec2::new(h.x, -h.y),
            Vec2::new(h.x, h.y),
            Vec2::new(-h.x, h.y),
        ]
        .map(|c| self.center + c.rotate(self.yaw))
    }

    pub fn contains(&self, p: Vec2) -> bool {
        let l = (p - self.center).rotate(-self.yaw);
        l.x.abs() <= self.half_extents.x && l.y.abs() <= self.half_extents.y
    }

    /// Maps unit-square coordinates in [0,1]^2 onto the box.
    pub fn point_at(&self, u: f64, v: f64) -> Vec2 {
        let l = Vec2::new(
            (2.0 * u - 1.0) * self.half_extents.x,
            (2.0 * v - 1.0) * self.half_extents.y,
        );
        self.center + l.rotate(self.yaw)
    }

    pub fn bounding_box(&self) -> Aabb {
        let c = self.corners();
        let mut min = c[0];
        let mut max = c[0];
        for p in &c[1..] {
            min = Vec2::new(min.x.min(p.x), min.y.min(p.y));
            max = Vec2::new(max.x.max(p.x), max.y.max(p.y));
        }
        Aabb::new(min, max)
    }
}

/// Axis-aligned ellipse.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ellipse {
    pub center: Vec2,
    pub semi_axes: Vec2,
}

impl Ellipse {
    pub fn contains(&self, p: Vec2) -> bool {
        let d = p - self.center;
        (d.x / self.semi_axes.x).powi(2) + (d.y / self.semi_axes.y).powi(2) <= 1.0
    }

    pub fn bounding_box(&self) -> Aabb {
        Aabb::new(self.center - self.semi_axes, self.center + self.semi_axes)
    }

    /// Uniform sample from two uniforms in [0,1).
    pub fn point_at(&self, u: f64, v: f64) -> Vec2 {
        let r = u.sqrt();
        let a = 2.0 * PI * v;
        self.center + Vec2::new(r * a.cos() * self.semi_axes.x, r * a.sin() * self.semi_axes.y)
    }
}

/// A convex shape used in clearance and collision queries.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Shape {
    Point { p: Vec2 },
    Circle { center: Vec2, radius: f64 },
    Segment { a: Vec2, b: Vec2 },
    Capsule { a: Vec2, b: Vec2, radius: f64 },
    Rect(OrientedBox),
}

/// Up to four core vertices; one = point, two = segment, four = quad (CCW).
#[derive(Clone, Copy, Debug)]
pub struct Core {
    pts: [Vec2; 4],
    len: usize,
}

impl Core {
    pub fn point(p: Vec2) -> Self {
        Self { pts: [p; 4], len: 1 }
    }

    pub fn segment(a: Vec2, b: Vec2) -> Self {
        Self { pts: [a, b, b, b], len: 2 }
    }

    pub fn quad(c: [Vec2; 4]) -> Self {
        Self { pts: c, len: 4 }
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.pts[..self.len]
    }

    fn edge_count(&self) -> usize {
        match self.len {
            1 | 2 => 1,
            n => n,
        }
    }

    fn edge(&self, i: usize) -> (Vec2, Vec2) {
        match self.len {
            1 => (self.pts[0], self.pts[0]),
            2 => (self.pts[0], self.pts[1]),
            n => (self.pts[i], self.pts[(i + 1) % n]),
        }
    }

    fn is_polygon(&self) -> bool {
        self.len >= 3
    }

    /// Inclusive containment for a CCW convex polygon.
    fn polygon_contains(&self, p: Vec2) -> bool {
        (0..self.len).all(|i| {
            let (a, b) = self.edge(i);
            (b - a).cross(p - a) >= 0.0
        })
    }
}

impl Shape {
    pub fn core(&self) -> (Core, f64) {
        match *self {
            Shape::Point { p } => (Core::point(p), 0.0),
            Shape::Circle { center, radius } => (Core::point(center), radius),
            Shape::Segment { a, b } => (Core::segment(a, b), 0.0),
            Shape::Capsule { a, b, radius } => (Core::segment(a, b), radius),
            Shape::Rect(r) => (Core::quad(r.corners()), 0.0),
        }
    }
}

pub fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b - a;
    let len_sq = ab.norm_sq();
    if len_sq == 0.0 {
        return p.dist(a);
    }
    let t = ((p - a).dot(ab) / len_sq).clamp(0.0, 1.0);
    p.dist(a + ab * t)
}

/// Closest-point parameter in [0,1] of `p` on segment `ab`, and the distance.
pub fn project_on_segment(p: Vec2, a: Vec2, b: Vec2) -> (f64, f64) {
    let ab = b - a;
    let len_sq = ab.norm_sq();
    if len_sq == 0.0 {
        return (0.0, p.dist(a));
    }
    let t = ((p - a).dot(ab) / len_sq).clamp(0.0, 1.0);
    (t, p.dist(a + ab * t))
}

fn segments_cross(p1: Vec2, p2: Vec2, q1: Vec2, q2: Vec2) -> bool {
    let d = p2 - p1;
    let e = q2 - q1;
    let o1 = d.cross(q1 - p1);
    let o2 = d.cross(q2 - p1);
    let o3 = e.cross(p1 - q1);
    let o4 = e.cross(p2 - q1);
    o1 * o2 < 0.0 && o3 * o4 < 0.0
}

pub fn segment_segment_distance(p1: Vec2, p2: Vec2, q1: Vec2, q2: Vec2) -> f64 {
    if segments_cross(p1, p2, q1, q2) {
        return 0.0;
    }
    point_segment_distance(p1, q1, q2)
        .min(point_segment_distance(p2, q1, q2))
        .min(point_segment_distance(q1, p1, p2))
        .min(point_segment_distance(q2, p1, p2))
}

/// Euclidean distance between two cores; zero when they overlap.
pub fn core_distance(a: &Core, b: &Core) -> f64 {
    if (b.is_polygon() && b.polygon_contains(a.pts[0])) || (a.is_polygon() && a.polygon_contains(b.pts[0])) {
        return 0.0;
    }
    let mut best = f64::INFINITY;
    for i in 0..a.edge_count() {
        let (a1, a2) = a.edge(i);
        for j in 0..b.edge_count() {
            let (b1, b2) = b.edge(j);
            best = best.min(segment_segment_distance(a1, a2, b1, b2));
            if best == 0.0 {
                return 0.0;
            }
        }
    }
    best
}

pub fn shape_core_distance(shape: &Shape, other: &Core) -> f64 {
    let (core, radius) = shape.core();
    (core_distance(&core, other) - radius).max(0.0)
}

/// Distance along a ray to a segment, if it is hit.
pub fn ray_segment(origin: Vec2, dir: Vec2, a: Vec2, b: Vec2) -> Option<f64> {
    let e = b - a;
    let denom = dir.cross(e);
    let ao = a - origin;
    if denom.abs() < 1e-15 {
        // Parallel: only a collinear segment can be hit.
        if ao.cross(dir).abs() > 1e-12 * (1.0 + ao.norm()) {
            return None;
        }
        let ta = ao.dot(dir);
        let tb = (b - origin).dot(dir);
        if ta <= 0.0 && tb >= 0.0 || tb <= 0.0 && ta >= 0.0 {
            return Some(0.0);
        }
        let t = ta.min(tb);
        return (t >= 0.0).then_some(t);
    }
    let t = ao.cross(e) / denom;
    let u = ao.cross(dir) / denom;
    (t >= 0.0 && (0.0..=1.0).contains(&u)).then_some(t)
}

/// Slab test; an origin inside (or on) the box yields zero.
pub fn ray_aabb(origin: Vec2, dir: Vec2, b: &Aabb) -> Option<f64> {
    if b.contains(origin) {
        return Some(0.0);
    }
    let mut t_min = 0.0f64;
    let mut t_max = f64::INFINITY;
    for (o, d, lo, hi) in [(origin.x, dir.x, b.min.x, b.max.x), (origin.y, dir.y, b.min.y, b.max.y)] {
        if d.abs() < 1e-300 {
            if o < lo || o > hi {
                return None;
            }
        } else {
            let inv = 1.0 / d;
            let (t0, t1) = {
                let t0 = (lo - o) * inv;
                let t1 = (hi - o) * inv;
                if t0 <= t1 {
                    (t0, t1)
                } else {
                    (t1, t0)
                }
            };
            t_min = t_min.max(t0);
            t_max = t_max.min(t1);
            if t_min > t_max {
                return None;
            }
        }
    }
    Some(t_min)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_angle_range() {
        assert_eq!(wrap_angle(PI), PI);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-15);
        assert!((wrap_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(0.5 + 4.0 * PI) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn ray_hits_wall() {
        let t = ray_segment(Vec2::ZERO, Vec2::new(1.0, 0.0), Vec2::new(2.0, -5.0), Vec2::new(2.0, 5.0));
        assert_eq!(t, Some(2.0));
        let miss = ray_segment(Vec2::ZERO, Vec2::new(0.0, 1.0), Vec2::new(2.0, -5.0), Vec2::new(2.0, 5.0));
        assert_eq!(miss, None);
    }

    #[test]
    fn collinear_ray() {
        let t = ray_segment(Vec2::ZERO, Vec2::new(1.0, 0.0), Vec2::new(3.0, 0.0), Vec2::new(2.0, 0.0));
        assert_eq!(t, Some(2.0));
        let inside = ray_segment(Vec2::ZERO, Vec2::new(1.0, 0.0), Vec2::new(-1.0, 0.0), Vec2::new(2.0, 0.0));
        assert_eq!(inside, Some(0.0));
    }

    #[test]
    fn ray_box_slab() {
        let b = Aabb::new(Vec2::new(1.0, -1.0), Vec2::new(2.0, 1.0));
        assert_eq!(ray_aabb(Vec2::ZERO, Vec2::new(1.0, 0.0), &b), Some(1.0));
        assert_eq!(ray_aabb(Vec2::ZERO, Vec2::new(-1.0, 0.0), &b), None);
        assert_eq!(ray_aabb(Vec2::new(1.5, 0.0), Vec2::new(1.0, 0.0), &b), Some(0.0));
    }

    #[test]
    fn quad_contains_point_core() {
        let b = Core::quad(Aabb::new(Vec2::new(-1.0, -1.0), Vec2::new(1.0, 1.0)).corners());
        assert_eq!(core_distance(&Core::point(Vec2::ZERO), &b), 0.0);
        assert!((core_distance(&Core::point(Vec2::new(3.0, 0.0)), &b) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn crossing_segments_touch() {
        assert_eq!(
            segment_segment_distance(
                Vec2::new(-1.0, 0.0),
                Vec2::new(1.0, 0.0),
                Vec2::new(0.0, -1.0),
                Vec2::new(0.0, 1.0)
            ),
            0.0
        );
    }

    #[test]
    fn pose_roundtrip() {
        let pose = Pose2::new(1.0, -2.0, 0.7);
        let p = Vec2::new(0.3, 0.9);
        let q = pose.inverse_transform_point(pose.transform_point(p));
        assert!((q - p).norm() < 1e-12);
    }
}
