//! End-effector reference paths for reward shaping.
//!
//! Paths come from 8-connected A* on an occupancy grid whose cells are
//! blocked when their center is closer than `inflation` to an obstacle,
//! followed by greedy line-of-sight shortcutting against the exact geometry.

use crate::geometry::{project_on_segment, Vec2};
use crate::world::{Layer, WorldModel};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use thiserror::Error;

pub const CELL_SIZE: f64 = 0.05;
pub const DEFAULT_INFLATION: f64 = 0.10;

#[derive(Debug, Error, PartialEq)]
pub enum PathError {
    #[error("start is closer than the inflation radius to an obstacle")]
    StartBlocked,
    #[error("goal is closer than the inflation radius to an obstacle")]
    GoalBlocked,
    #[error("start or goal lies outside the world bounds")]
    OutOfBounds,
    #[error("grid search exhausted without reaching the goal")]
    NoPath,
    #[error("path has zero length")]
    Degenerate,
}

/// Polyline with an arc-length table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefPath {
    pub waypoints: Vec<Vec2>,
    pub cum_length: Vec<f64>,
    pub total_length: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Projection {
    /// Arc length of the closest point.
    pub s: f64,
    /// Distance to the closest point.
    pub d: f64,
}

impl RefPath {
    /// Drops repeated points; fails when fewer than two distinct points remain.
    pub fn from_waypoints(points: Vec<Vec2>) -> Result<Self, PathError> {
        let mut waypoints: Vec<Vec2> = Vec::with_capacity(points.len());
        for p in points {
            if waypoints.last().is_none_or(|q| q.dist(p) > 1e-12) {
                waypoints.push(p);
            }
        }
        if waypoints.len() < 2 {
            return Err(PathError::Degenerate);
        }
        let mut cum_length = Vec::with_capacity(waypoints.len());
        let mut acc = 0.0;
        cum_length.push(0.0);
        for w in waypoints.windows(2) {
            acc += w[0].dist(w[1]);
            cum_length.push(acc);
        }
        Ok(Self { waypoints, cum_length, total_length: acc })
    }

    /// Closest point on the polyline. Ties go to the larger arc length.
    pub fn project(&self, pt: Vec2) -> Projection {
        let mut best = Projection { s: 0.0, d: f64::INFINITY };
        for (i, w) in self.waypoints.windows(2).enumerate() {
            let (t, d) = project_on_segment(pt, w[0], w[1]);
            let s = self.cum_length[i] + t * (self.cum_length[i + 1] - self.cum_length[i]);
            if d < best.d - 1e-12 || (d <= best.d + 1e-12 && s > best.s) {
                best = Projection { s, d };
            }
        }
        best.s = best.s.clamp(0.0, self.total_length);
        best
    }

    /// Point at arc length `s`, clamped to the path.
    pub fn point_at(&self, s: f64) -> Vec2 {
        let s = s.clamp(0.0, self.total_length);
        let i = match self.cum_length.binary_search_by(|c| c.total_cmp(&s)) {
            Ok(i) => return self.waypoints[i],
            Err(i) => i.clamp(1, self.waypoints.len() - 1),
        };
        let (s0, s1) = (self.cum_length[i - 1], self.cum_length[i]);
        self.waypoints[i - 1].lerp(self.waypoints[i], (s - s0) / (s1 - s0))
    }
}

/// Plans an end-effector path; only full-height obstacles block the arm plane.
pub fn plan_ee_path(world: &WorldModel, start: Vec2, goal: Vec2, inflation: f64) -> Result<RefPath, PathError> {
    plan_path(world, start, goal, inflation, Layer::Arm)
}

pub fn plan_path(world: &WorldModel, start: Vec2, goal: Vec2, inflation: f64, layer: Layer) -> Result<RefPath, PathError> {
    if !world.bounds.contains(start) || !world.bounds.contains(goal) {
        return Err(PathError::OutOfBounds);
    }
    if world.point_clearance(start, layer) < inflation {
        return Err(PathError::StartBlocked);
    }
    if world.point_clearance(goal, layer) < inflation {
        return Err(PathError::GoalBlocked);
    }
    if start.dist(goal) <= 1e-12 {
        return Err(PathError::Degenerate);
    }
    let grid = Grid::build(world, inflation, layer);
    let s = grid.cell_of(start);
    let g = grid.cell_of(goal);
    let cells = grid.astar(s, g).ok_or(PathError::NoPath)?;

    let mut raw = Vec::with_capacity(cells.len() + 2);
    raw.push(start);
    // Endpoint cells are replaced by the exact endpoints.
    raw.extend(cells[1..cells.len().saturating_sub(1)].iter().map(|&c| grid.center(c)));
    raw.push(goal);
    let smooth = shortcut(&raw, |a, b| world.segment_clearance(a, b, layer) >= inflation);
    RefPath::from_waypoints(smooth)
}

/// Greedy string pulling: from each anchor, advance while line of sight holds.
pub fn shortcut(points: &[Vec2], mut visible: impl FnMut(Vec2, Vec2) -> bool) -> Vec<Vec2> {
    if points.len() <= 2 {
        return points.to_vec();
    }
    let mut out = vec![points[0]];
    let mut i = 0;
    while i < points.len() - 1 {
        let mut j = i + 1;
        while j + 1 < points.len() && visible(points[i], points[j + 1]) {
            j += 1;
        }
        out.push(points[j]);
        i = j;
    }
    out
}

struct Grid {
    origin: Vec2,
    nx: usize,
    ny: usize,
    free: Vec<bool>,
}

#[derive(Copy, Clone, PartialEq)]
struct Open {
    f: f64,
    g: f64,
    idx: usize,
}

impl Eq for Open {}

impl Ord for Open {
    // Min-heap on f, then prefer deeper nodes, then the lower index.
    fn cmp(&self, o: &Self) -> Ordering {
        o.f.total_cmp(&self.f)
            .then_with(|| self.g.total_cmp(&o.g))
            .then_with(|| o.idx.cmp(&self.idx))
    }
}

impl PartialOrd for Open {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl Grid {
    fn build(world: &WorldModel, inflation: f64, layer: Layer) -> Self {
        let b = world.bounds;
        let nx = ((b.width() / CELL_SIZE).ceil() as usize).max(1);
        let ny = ((b.height() / CELL_SIZE).ceil() as usize).max(1);
        let mut grid = Grid { origin: b.min, nx, ny, free: vec![false; nx * ny] };
        for iy in 0..ny {
            for ix in 0..nx {
                let idx = iy * nx + ix;
                grid.free[idx] = world.point_clearance(grid.center(idx), layer) >= inflation;
            }
        }
        grid
    }

    fn center(&self, idx: usize) -> Vec2 {
        let (ix, iy) = (idx % self.nx, idx / self.nx);
        self.origin + Vec2::new((ix as f64 + 0.5) * CELL_SIZE, (iy as f64 + 0.5) * CELL_SIZE)
    }

    fn cell_of(&self, p: Vec2) -> usize {
        let ix = (((p.x - self.origin.x) / CELL_SIZE).floor() as isize).clamp(0, self.nx as isize - 1) as usize;
        let iy = (((p.y - self.origin.y) / CELL_SIZE).floor() as isize).clamp(0, self.ny as isize - 1) as usize;
        iy * self.nx + ix
    }

    fn heuristic(&self, a: usize, b: usize) -> f64 {
        let dx = (a % self.nx).abs_diff(b % self.nx) as f64;
        let dy = (a / self.nx).abs_diff(b / self.nx) as f64;
        let (lo, hi) = if dx < dy { (dx, dy) } else { (dy, dx) };
        (hi - lo + lo * std::f64::consts::SQRT_2) * CELL_SIZE
    }

    fn astar(&self, start: usize, goal: usize) -> Option<Vec<usize>> {
        let n = self.nx * self.ny;
        let is_free = |i: usize| i == start || i == goal || self.free[i];
        let mut g = vec![f64::INFINITY; n];
        let mut parent = vec![usize::MAX; n];
        let mut closed = vec![false; n];
        let mut open = BinaryHeap::new();
        g[start] = 0.0;
        open.push(Open { f: self.heuristic(start, goal), g: 0.0, idx: start });
        while let Some(Open { idx, .. }) = open.pop() {
            if closed[idx] {
                continue;
            }
            if idx == goal {
                let mut path = vec![goal];
                let mut c = goal;
                while c != start {
                    c = parent[c];
                    path.push(c);
                }
                path.reverse();
                return Some(path);
            }
            closed[idx] = true;
            let (ix, iy) = ((idx % self.nx) as isize, (idx / self.nx) as isize);
            for dy in -1isize..=1 {
                for dx in -1isize..=1 {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    let (jx, jy) = (ix + dx, iy + dy);
                    if jx < 0 || jy < 0 || jx >= self.nx as isize || jy >= self.ny as isize {
                        continue;
                    }
                    let j = jy as usize * self.nx + jx as usize;
                    if closed[j] || !is_free(j) {
                        continue;
                    }
                    // No corner cutting through blocked cells.
                    if dx != 0 && dy != 0 {
                        let a = iy as usize * self.nx + jx as usize;
                        let b = jy as usize * self.nx + ix as usize;
                        if !is_free(a) || !is_free(b) {
                            continue;
                        }
                    }
                    let step = if dx != 0 && dy != 0 { std::f64::consts::SQRT_2 } else { 1.0 } * CELL_SIZE;
                    let cand = g[idx] + step;
                    if cand < g[j] {
                        g[j] = cand;
                        parent[j] = idx;
                        open.push(Open { f: cand + self.heuristic(j, goal), g: cand, idx: j });
                    }
                }
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Aabb, Ellipse, OrientedBox};
    use crate::world::{Height, Line, Obstacle};

    fn world_with(obstacles: Vec<Obstacle>) -> WorldModel {
        WorldModel {
            obstacles,
            corridor_axis: Line { origin: Vec2::ZERO, direction: Vec2::new(1.0, 0.0) },
            corridor_width: 2.0,
            goal_region: OrientedBox { center: Vec2::new(4.0, 0.0), half_extents: Vec2::new(0.1, 0.1), yaw: 0.0 },
            spawn_region: Ellipse { center: Vec2::ZERO, semi_axes: Vec2::new(0.2, 0.2) },
            spawn_heading: 0.0,
            spawn_heading_spread: 0.0,
            bounds: Aabb::new(Vec2::new(-1.0, -1.5), Vec2::new(5.0, 1.5)),
        }
    }

    #[test]
    fn straight_corridor_is_straight() {
        let w = world_with(vec![
            Obstacle::wall(Vec2::new(-1.0, 1.0), Vec2::new(5.0, 1.0)),
            Obstacle::wall(Vec2::new(-1.0, -1.0), Vec2::new(5.0, -1.0)),
        ]);
        let p = plan_ee_path(&w, Vec2::ZERO, Vec2::new(4.0, 0.0), DEFAULT_INFLATION).unwrap();
        assert!(p.total_length >= 4.0 && p.total_length <= 4.05, "{}", p.total_length);
        assert_eq!(p.waypoints[0], Vec2::ZERO);
        assert_eq!(*p.waypoints.last().unwrap(), Vec2::new(4.0, 0.0));
    }

    #[test]
    fn sealed_goal_has_no_path() {
        let w = world_with(vec![
            Obstacle::wall(Vec2::new(3.0, -1.5), Vec2::new(3.0, 1.5)),
        ]);
        assert_eq!(plan_ee_path(&w, Vec2::ZERO, Vec2::new(4.0, 0.0), DEFAULT_INFLATION), Err(PathError::NoPath));
    }

    #[test]
    fn blocked_endpoints_rejected() {
        let w = world_with(vec![Obstacle::wall(Vec2::new(-1.0, 0.05), Vec2::new(5.0, 0.05))]);
        assert_eq!(plan_ee_path(&w, Vec2::ZERO, Vec2::new(4.0, -0.5), 0.1), Err(PathError::StartBlocked));
        assert_eq!(plan_ee_path(&w, Vec2::new(0.0, -0.5), Vec2::new(4.0, 0.0), 0.1), Err(PathError::GoalBlocked));
    }

    #[test]
    fn low_obstacles_do_not_block_the_arm() {
        let w = world_with(vec![Obstacle::Box {
            min: Vec2::new(1.5, -1.5),
            max: Vec2::new(2.5, 1.5),
            height: Height::Low,
        }]);
        let p = plan_ee_path(&w, Vec2::ZERO, Vec2::new(4.0, 0.0), 0.1).unwrap();
        assert!((p.total_length - 4.0).abs() < 1e-12);
        assert_eq!(plan_path(&w, Vec2::ZERO, Vec2::new(4.0, 0.0), 0.1, Layer::Base), Err(PathError::NoPath));
    }

    #[test]
    fn detour_around_box() {
        let w = world_with(vec![Obstacle::Box {
            min: Vec2::new(1.5, -0.5),
            max: Vec2::new(2.5, 0.5),
            height: Height::Full,
        }]);
        let p = plan_ee_path(&w, Vec2::ZERO, Vec2::new(4.0, 0.0), 0.1).unwrap();
        assert!(p.total_length >= 4.0);
        let mut s = 0.0;
        while s <= p.total_length {
            let c = w.point_clearance(p.point_at(s), Layer::Arm);
            assert!(c >= 0.1 - CELL_SIZE * std::f64::consts::SQRT_2, "clearance {c} at s={s}");
            s += 0.01;
        }
    }

    #[test]
    fn projection_examples() {
        let p = RefPath::from_waypoints(vec![Vec2::ZERO, Vec2::new(2.0, 0.0), Vec2::new(2.0, 2.0)]).unwrap();
        let on = p.project(Vec2::new(2.0, 0.0));
        assert_eq!(on.d, 0.0);
        assert_eq!(on.s, 2.0);
        let off = p.project(Vec2::new(1.0, 0.3));
        assert!((off.d - 0.3).abs() < 1e-15 && (off.s - 1.0).abs() < 1e-15);
        let past = p.project(Vec2::new(2.0, 3.0));
        assert_eq!(past.s, 4.0);
        assert!((past.d - 1.0).abs() < 1e-15);
    }

    #[test]
    fn corner_tie_prefers_larger_arc_length() {
        let p = RefPath::from_waypoints(vec![Vec2::ZERO, Vec2::new(1.0, 0.0), Vec2::new(1.0, 1.0)]).unwrap();
        // Equidistant to both segments' interiors near the corner.
        let pr = p.project(Vec2::new(0.5, 0.5));
        assert!((pr.d - 0.5).abs() < 1e-15);
        assert!((pr.s - 1.5).abs() < 1e-15);
    }

    #[test]
    fn degenerate_waypoints() {
        assert_eq!(RefPath::from_waypoints(vec![Vec2::ZERO, Vec2::ZERO]), Err(PathError::Degenerate));
    }

    #[test]
    fn shortcut_keeps_endpoints() {
        let pts = vec![Vec2::ZERO, Vec2::new(1.0, 0.0), Vec2::new(2.0, 0.0), Vec2::new(3.0, 1.0)];
        let s = shortcut(&pts, |_, _| true);
        assert_eq!(s, vec![Vec2::ZERO, Vec2::new(3.0, 1.0)]);
        let s = shortcut(&pts, |a, b| a.dist(b) < 1.5);
        assert_eq!(s, pts);
    }
}
