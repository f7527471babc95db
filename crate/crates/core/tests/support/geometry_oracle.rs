//! Brute-force reference answers for ray and clearance queries, written
//! independently of the library routines.
#![allow(dead_code)]

use rand::Rng;
use wbc_core::geometry::{Aabb, Ellipse, OrientedBox, Shape, Vec2};
use wbc_core::world::{BodyShape, Height, Layer, Line, Obstacle, WorldModel};

/// Ray/segment hit by solving `o + t d = a + u (b - a)` with Cramer's rule.
pub fn ray_hits_segment(o: [f64; 2], d: [f64; 2], a: [f64; 2], b: [f64; 2]) -> Option<f64> {
    // Columns: [d, -(b - a)], right-hand side a - o.
    let (m11, m12) = (d[0], a[0] - b[0]);
    let (m21, m22) = (d[1], a[1] - b[1]);
    let (r1, r2) = (a[0] - o[0], a[1] - o[1]);
    let det = m11 * m22 - m12 * m21;
    if det.abs() < 1e-14 {
        return None;
    }
    let t = (r1 * m22 - m12 * r2) / det;
    let u = (m11 * r2 - r1 * m21) / det;
    (t >= 0.0 && (0.0..=1.0).contains(&u)).then_some(t)
}

fn box_edges(min: Vec2, max: Vec2) -> [([f64; 2], [f64; 2]); 4] {
    let (x0, y0, x1, y1) = (min.x, min.y, max.x, max.y);
    [
        ([x0, y0], [x1, y0]),
        ([x1, y0], [x1, y1]),
        ([x1, y1], [x0, y1]),
        ([x0, y1], [x0, y0]),
    ]
}

pub fn raycast(world: &WorldModel, origin: Vec2, dir: Vec2, max_range: f64) -> f64 {
    let o = [origin.x, origin.y];
    let d = [dir.x, dir.y];
    let mut best = max_range;
    for obs in &world.obstacles {
        match *obs {
            Obstacle::Box { min, max, .. } => {
                if (min.x..=max.x).contains(&origin.x) && (min.y..=max.y).contains(&origin.y) {
                    return 0.0;
                }
                for (a, b) in box_edges(min, max) {
                    if let Some(t) = ray_hits_segment(o, d, a, b) {
                        best = best.min(t);
                    }
                }
            }
            Obstacle::Segment { a, b, .. } => {
                if let Some(t) = ray_hits_segment(o, d, [a.x, a.y], [b.x, b.y]) {
                    best = best.min(t);
                }
            }
        }
    }
    best
}

/// Convex point set (1, 2 or 4 vertices) plus a Minkowski radius.
struct Convex {
    verts: Vec<[f64; 2]>,
    radius: f64,
}

fn convex_of_shape(s: &Shape) -> Convex {
    match *s {
        Shape::Point { p } => Convex { verts: vec![[p.x, p.y]], radius: 0.0 },
        Shape::Circle { center, radius } => Convex { verts: vec![[center.x, center.y]], radius },
        Shape::Segment { a, b } => Convex { verts: vec![[a.x, a.y], [b.x, b.y]], radius: 0.0 },
        Shape::Capsule { a, b, radius } => Convex { verts: vec![[a.x, a.y], [b.x, b.y]], radius },
        Shape::Rect(r) => {
            let (c, s) = (r.yaw.cos(), r.yaw.sin());
            let verts = [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)]
                .iter()
                .map(|&(u, v)| {
                    let lx = u * r.half_extents.x;
                    let ly = v * r.half_extents.y;
                    [r.center.x + c * lx - s * ly, r.center.y + s * lx + c * ly]
                })
                .collect();
            Convex { verts, radius: 0.0 }
        }
    }
}

fn convex_of_obstacle(o: &Obstacle) -> Convex {
    match *o {
        Obstacle::Box { min, max, .. } => Convex {
            verts: vec![[min.x, min.y], [max.x, min.y], [max.x, max.y], [min.x, max.y]],
            radius: 0.0,
        },
        Obstacle::Segment { a, b, .. } => Convex { verts: vec![[a.x, a.y], [b.x, b.y]], radius: 0.0 },
    }
}

/// Distance between two convex hulls as the largest support gap over all
/// candidate separating directions (edge normals and vertex differences).
/// Overlapping sets give a nonpositive gap, clamped to zero.
fn hull_distance(p: &[[f64; 2]], q: &[[f64; 2]]) -> f64 {
    let mut dirs: Vec<[f64; 2]> = Vec::new();
    for set in [p, q] {
        for i in 0..set.len() {
            let a = set[i];
            let b = set[(i + 1) % set.len()];
            let (ex, ey) = (b[0] - a[0], b[1] - a[1]);
            if ex != 0.0 || ey != 0.0 {
                dirs.push([ey, -ex]);
                dirs.push([-ey, ex]);
            }
        }
    }
    for a in p {
        for b in q {
            dirs.push([b[0] - a[0], b[1] - a[1]]);
        }
    }
    let mut best = f64::NEG_INFINITY;
    for d in dirs {
        let n = (d[0] * d[0] + d[1] * d[1]).sqrt();
        if n == 0.0 {
            continue;
        }
        let (nx, ny) = (d[0] / n, d[1] / n);
        let max_p = p.iter().map(|v| v[0] * nx + v[1] * ny).fold(f64::NEG_INFINITY, f64::max);
        let min_q = q.iter().map(|v| v[0] * nx + v[1] * ny).fold(f64::INFINITY, f64::min);
        best = best.max(min_q - max_p);
    }
    if best == f64::NEG_INFINITY {
        // Coincident points.
        return 0.0;
    }
    best.max(0.0)
}

pub fn min_clearance(world: &WorldModel, shapes: &[BodyShape]) -> f64 {
    let mut best = f64::INFINITY;
    for o in &world.obstacles {
        let oc = convex_of_obstacle(o);
        for s in shapes {
            if s.layer == Layer::Arm && o.height() == Height::Low {
                continue;
            }
            let sc = convex_of_shape(&s.shape);
            let d = (hull_distance(&sc.verts, &oc.verts) - sc.radius - oc.radius).max(0.0);
            best = best.min(d);
        }
    }
    if best <= 1e-9 {
        0.0
    } else {
        best
    }
}

fn rand_point(rng: &mut impl Rng, lo: f64, hi: f64) -> Vec2 {
    Vec2::new(rng.random_range(lo..hi), rng.random_range(lo..hi))
}

/// Unstructured obstacle soup in `[-5, 5]^2`.
pub fn random_world(rng: &mut impl Rng) -> WorldModel {
    let n = rng.random_range(1..=12);
    let obstacles = (0..n)
        .map(|_| {
            let height = if rng.random_bool(0.3) { Height::Low } else { Height::Full };
            if rng.random_bool(0.5) {
                let c = rand_point(rng, -5.0, 5.0);
                let h = Vec2::new(rng.random_range(0.05..1.5), rng.random_range(0.05..1.5));
                Obstacle::Box { min: c - h, max: c + h, height }
            } else {
                Obstacle::Segment { a: rand_point(rng, -5.0, 5.0), b: rand_point(rng, -5.0, 5.0), height }
            }
        })
        .collect();
    WorldModel {
        obstacles,
        corridor_axis: Line { origin: Vec2::ZERO, direction: Vec2::new(1.0, 0.0) },
        corridor_width: 10.0,
        goal_region: OrientedBox { center: Vec2::ZERO, half_extents: Vec2::new(0.1, 0.1), yaw: 0.0 },
        spawn_region: Ellipse { center: Vec2::ZERO, semi_axes: Vec2::new(0.1, 0.1) },
        spawn_heading: 0.0,
        spawn_heading_spread: 0.0,
        bounds: Aabb::new(Vec2::new(-6.0, -6.0), Vec2::new(6.0, 6.0)),
    }
}

pub fn random_body(rng: &mut impl Rng) -> BodyShape {
    let layer = if rng.random_bool(0.5) { Layer::Base } else { Layer::Arm };
    let p = rand_point(rng, -5.0, 5.0);
    let shape = match rng.random_range(0..5) {
        0 => Shape::Point { p },
        1 => Shape::Circle { center: p, radius: rng.random_range(0.0..0.5) },
        2 => Shape::Segment { a: p, b: p + rand_point(rng, -1.0, 1.0) },
        3 => Shape::Capsule { a: p, b: p + rand_point(rng, -1.0, 1.0), radius: rng.random_range(0.0..0.3) },
        _ => Shape::Rect(OrientedBox {
            center: p,
            half_extents: Vec2::new(rng.random_range(0.05..0.6), rng.random_range(0.05..0.6)),
            yaw: rng.random_range(-3.2..3.2),
        }),
    };
    BodyShape { shape, layer }
}
