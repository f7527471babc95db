//! Randomized corridor worlds and the geometric queries the simulator asks of
//! them: ray casts for the LIDARs, clearance for the safety margin and
//! collision checks for termination.
//!
//! Obstacles live on one of two height classes. `Full` obstacles (walls,
//! door frames) block everything. `Low` obstacles (shelves) block the base
//! and the scanners but sit below the arm plane, so the arm can reach over
//! them onto the shelf surface.

use crate::geometry::{
    ray_aabb, ray_segment, shape_core_distance, Aabb, Core, Ellipse, OrientedBox, Shape, Vec2, CONTACT_EPS,
};
use crate::pathref;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

pub const MAX_GENERATION_ATTEMPTS: u32 = 100;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Height {
    #[default]
    Full,
    Low,
}

/// Which part of the robot a shape belongs to. Arm shapes only collide with
/// full-height obstacles.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layer {
    Base,
    Arm,
}

impl Layer {
    pub fn blocked_by(self, h: Height) -> bool {
        match self {
            Layer::Base => true,
            Layer::Arm => h == Height::Full,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BodyShape {
    pub shape: Shape,
    pub layer: Layer,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Obstacle {
    Box {
        min: Vec2,
        max: Vec2,
        #[serde(default)]
        height: Height,
    },
    Segment {
        a: Vec2,
        b: Vec2,
        #[serde(default)]
        height: Height,
    },
}

impl Obstacle {
    pub fn wall(a: Vec2, b: Vec2) -> Self {
        Obstacle::Segment { a, b, height: Height::Full }
    }

    pub fn height(&self) -> Height {
        match *self {
            Obstacle::Box { height, .. } | Obstacle::Segment { height, .. } => height,
        }
    }

    pub fn core(&self) -> Core {
        match *self {
            Obstacle::Box { min, max, .. } => Core::quad(Aabb::new(min, max).corners()),
            Obstacle::Segment { a, b, .. } => Core::segment(a, b),
        }
    }

    pub fn bounding_box(&self) -> Aabb {
        match *self {
            Obstacle::Box { min, max, .. } => Aabb::new(min, max),
            Obstacle::Segment { a, b, .. } => Aabb::new(
                Vec2::new(a.x.min(b.x), a.y.min(b.y)),
                Vec2::new(a.x.max(b.x), a.y.max(b.y)),
            ),
        }
    }

    fn ray(&self, origin: Vec2, dir: Vec2) -> Option<f64> {
        match *self {
            Obstacle::Box { min, max, .. } => ray_aabb(origin, dir, &Aabb::new(min, max)),
            Obstacle::Segment { a, b, .. } => ray_segment(origin, dir, a, b),
        }
    }

    fn is_valid(&self) -> bool {
        match *self {
            Obstacle::Box { min, max, .. } => Aabb::new(min, max).is_valid(),
            Obstacle::Segment { a, b, .. } => a.is_finite() && b.is_finite(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub origin: Vec2,
    pub direction: Vec2,
}

/// A static planar environment. Immutable once built.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorldModel {
    pub obstacles: Vec<Obstacle>,
    pub corridor_axis: Line,
    pub corridor_width: f64,
    /// The shelf compartment setpoints are drawn from.
    pub goal_region: OrientedBox,
    pub spawn_region: Ellipse,
    /// Nominal base heading at spawn and the half-width of its spread.
    #[serde(default)]
    pub spawn_heading: f64,
    #[serde(default)]
    pub spawn_heading_spread: f64,
    pub bounds: Aabb,
}

#[derive(Debug, Error)]
pub enum WorldError {
    #[error("world generation failed after {0} attempts")]
    GenerationFailed(u32),
    #[error("invalid scenario spec: {0}")]
    InvalidSpec(String),
    #[error("invalid world layout: {0}")]
    InvalidLayout(String),
    #[error("malformed world JSON: {0}")]
    Json(#[from] serde_json::Error),
}

impl WorldModel {
    pub fn from_json(text: &str) -> Result<Self, WorldError> {
        let w: WorldModel = serde_json::from_str(text)?;
        w.validate()?;
        Ok(w)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("world serializes")
    }

    pub fn validate(&self) -> Result<(), WorldError> {
        let bad = |m: &str| Err(WorldError::InvalidLayout(m.to_string()));
        if !self.bounds.is_valid() {
            return bad("bounds are not a valid box");
        }
        if let Some(i) = self.obstacles.iter().position(|o| !o.is_valid()) {
            return Err(WorldError::InvalidLayout(format!("obstacle {i} is malformed")));
        }
        let g = &self.goal_region;
        if !(g.center.is_finite() && g.half_extents.x > 0.0 && g.half_extents.y > 0.0 && g.yaw.is_finite()) {
            return bad("goal region is degenerate");
        }
        if !self.bounds.contains_box(&g.bounding_box()) {
            return bad("goal region leaves the bounds");
        }
        let s = &self.spawn_region;
        if !(s.center.is_finite() && s.semi_axes.x > 0.0 && s.semi_axes.y > 0.0) {
            return bad("spawn region is degenerate");
        }
        if !self.bounds.contains_box(&s.bounding_box()) {
            return bad("spawn region leaves the bounds");
        }
        if !(self.corridor_width.is_finite() && self.corridor_width >= 0.0) {
            return bad("corridor width must be finite and nonnegative");
        }
        if !(self.spawn_heading.is_finite() && self.spawn_heading_spread.is_finite() && self.spawn_heading_spread >= 0.0) {
            return bad("spawn heading must be finite");
        }
        Ok(())
    }

    /// Distance to the first obstacle along a ray, capped at `max_range`.
    /// Returns 0 when the origin lies inside or on an obstacle.
    pub fn raycast(&self, origin: Vec2, direction: Vec2, max_range: f64) -> f64 {
        let mut best = max_range;
        for o in &self.obstacles {
            if let Some(t) = o.ray(origin, direction) {
                if t < best {
                    best = t;
                }
            }
        }
        best
    }

    /// Smallest distance between any shape and any obstacle on its layer.
    /// Contact within [`CONTACT_EPS`] reports 0; no relevant obstacles reports
    /// `f64::INFINITY`.
    pub fn min_clearance(&self, shapes: &[BodyShape]) -> f64 {
        let mut best = f64::INFINITY;
        for o in &self.obstacles {
            let h = o.height();
            let core = o.core();
            for s in shapes {
                if !s.layer.blocked_by(h) {
                    continue;
                }
                let d = shape_core_distance(&s.shape, &core);
                if d < best {
                    best = d;
                    if best <= CONTACT_EPS {
                        return 0.0;
                    }
                }
            }
        }
        best
    }

    pub fn in_collision(&self, shapes: &[BodyShape]) -> bool {
        self.min_clearance(shapes) == 0.0
    }

    pub fn point_clearance(&self, p: Vec2, layer: Layer) -> f64 {
        self.min_clearance(&[BodyShape { shape: Shape::Point { p }, layer }])
    }

    /// Exact clearance of a straight segment, used for line-of-sight checks.
    pub fn segment_clearance(&self, a: Vec2, b: Vec2, layer: Layer) -> f64 {
        self.min_clearance(&[BodyShape { shape: Shape::Segment { a, b }, layer }])
    }
}

/// Inclusive `[min, max]` range serialized as a two-element array.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

impl From<[f64; 2]> for Range {
    fn from(v: [f64; 2]) -> Self {
        Range { min: v[0], max: v[1] }
    }
}

impl From<Range> for [f64; 2] {
    fn from(r: Range) -> Self {
        [r.min, r.max]
    }
}

impl Range {
    pub const fn new(min: f64, max: f64) -> Self {
        Self { min, max }
    }

    pub const fn fixed(v: f64) -> Self {
        Self { min: v, max: v }
    }

    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        if self.max > self.min {
            rng.random_range(self.min..=self.max)
        } else {
            self.min
        }
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.min && v <= self.max
    }

    fn valid(&self) -> bool {
        self.min.is_finite() && self.max.is_finite() && self.min >= 0.0 && self.min <= self.max
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "[u32; 2]", into = "[u32; 2]")]
pub struct CountRange {
    pub min: u32,
    pub max: u32,
}

impl From<[u32; 2]> for CountRange {
    fn from(v: [u32; 2]) -> Self {
        CountRange { min: v[0], max: v[1] }
    }
}

impl From<CountRange> for [u32; 2] {
    fn from(r: CountRange) -> Self {
        [r.min, r.max]
    }
}

impl CountRange {
    pub const fn new(min: u32, max: u32) -> Self {
        Self { min, max }
    }

    pub fn sample(&self, rng: &mut impl Rng) -> u32 {
        rng.random_range(self.min..=self.max)
    }
}

/// Distributions the corridor generator draws from. All lengths in meters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSpec {
    pub corridor_width_range: Range,
    pub corridor_length_range: Range,
    pub shelf_count_range: CountRange,
    /// Shelf extent perpendicular to the wall.
    pub shelf_depth_range: Range,
    /// Shelf extent along the wall.
    pub shelf_width_range: Range,
    pub door_count_range: CountRange,
    pub door_width_range: Range,
    /// Short full-height wall stubs protruding into the corridor.
    pub wall_stub_count_range: CountRange,
    pub wall_stub_length_range: Range,
    /// Along-axis distance between the spawn ellipse center and the goal shelf.
    pub spawn_distance_range: Range,
    pub spawn_semi_axes: Vec2,
    /// Half-width of the spawn heading spread, rad.
    pub spawn_heading_spread: f64,
    /// Depth of the goal strip behind the shelf front face.
    pub goal_depth: f64,
    /// Margin between the goal strip and the shelf edges.
    pub goal_inset: f64,
    /// Clearance the spawn ellipse center must have.
    pub spawn_clearance: f64,
    /// Clearance for the base-center reachability check.
    pub base_clearance: f64,
    /// Inflation for the end-effector reachability check.
    pub ee_inflation: f64,
    pub fixed_layout: Option<WorldModel>,
    /// When false every seed maps to the same world.
    pub seedable: bool,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        Self {
            corridor_width_range: Range::new(1.5, 3.0),
            corridor_length_range: Range::new(8.0, 14.0),
            shelf_count_range: CountRange::new(1, 3),
            shelf_depth_range: Range::new(0.3, 0.6),
            shelf_width_range: Range::new(0.8, 2.0),
            door_count_range: CountRange::new(0, 2),
            door_width_range: Range::new(0.8, 1.2),
            wall_stub_count_range: CountRange::new(0, 1),
            wall_stub_length_range: Range::new(0.1, 0.3),
            spawn_distance_range: Range::new(2.0, 5.0),
            spawn_semi_axes: Vec2::new(0.5, 0.15),
            spawn_heading_spread: 0.5,
            goal_depth: 0.2,
            goal_inset: 0.05,
            spawn_clearance: 0.45,
            base_clearance: 0.42,
            ee_inflation: pathref::DEFAULT_INFLATION,
            fixed_layout: None,
            seedable: true,
        }
    }
}

impl ScenarioSpec {
    /// Fixed-width corridor with a single shelf and no doors or stubs.
    pub fn simple_corridor() -> Self {
        Self {
            corridor_width_range: Range::fixed(2.2),
            corridor_length_range: Range::new(7.0, 8.0),
            shelf_count_range: CountRange::new(1, 1),
            shelf_depth_range: Range::fixed(0.4),
            shelf_width_range: Range::fixed(1.2),
            door_count_range: CountRange::new(0, 0),
            wall_stub_count_range: CountRange::new(0, 0),
            spawn_distance_range: Range::new(1.0, 2.5),
            spawn_semi_axes: Vec2::new(0.3, 0.15),
            spawn_heading_spread: 0.3,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), WorldError> {
        let ranges = [
            ("corridor_width_range", self.corridor_width_range),
            ("corridor_length_range", self.corridor_length_range),
            ("shelf_depth_range", self.shelf_depth_range),
            ("shelf_width_range", self.shelf_width_range),
            ("door_width_range", self.door_width_range),
            ("wall_stub_length_range", self.wall_stub_length_range),
            ("spawn_distance_range", self.spawn_distance_range),
        ];
        for (name, r) in ranges {
            if !r.valid() {
                return Err(WorldError::InvalidSpec(format!("{name} must satisfy 0 <= min <= max")));
            }
        }
        for (name, r) in [
            ("shelf_count_range", self.shelf_count_range),
            ("door_count_range", self.door_count_range),
            ("wall_stub_count_range", self.wall_stub_count_range),
        ] {
            if r.min > r.max {
                return Err(WorldError::InvalidSpec(format!("{name} must satisfy min <= max")));
            }
        }
        if self.fixed_layout.is_none() && self.shelf_count_range.min == 0 {
            return Err(WorldError::InvalidSpec("at least one shelf is needed to host the goal".into()));
        }
        if self.corridor_width_range.min <= 0.0 || self.corridor_length_range.min <= 0.0 {
            return Err(WorldError::InvalidSpec("corridor dimensions must be positive".into()));
        }
        let positive = [
            ("spawn_semi_axes.x", self.spawn_semi_axes.x),
            ("spawn_semi_axes.y", self.spawn_semi_axes.y),
            ("goal_depth", self.goal_depth),
            ("ee_inflation", self.ee_inflation),
            ("base_clearance", self.base_clearance),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(WorldError::InvalidSpec(format!("{name} must be positive")));
            }
        }
        for (name, v) in [
            ("goal_inset", self.goal_inset),
            ("spawn_clearance", self.spawn_clearance),
            ("spawn_heading_spread", self.spawn_heading_spread),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(WorldError::InvalidSpec(format!("{name} must be nonnegative")));
            }
        }
        if let Some(layout) = &self.fixed_layout {
            layout.validate()?;
        }
        Ok(())
    }
}

/// Builds a world for `(spec, seed)`; identical inputs give identical worlds.
pub fn generate_world(spec: &ScenarioSpec, seed: u64) -> Result<WorldModel, WorldError> {
    spec.validate()?;
    if let Some(layout) = &spec.fixed_layout {
        return Ok(layout.clone());
    }
    let seed = if spec.seedable { seed } else { 0 };
    for attempt in 0..MAX_GENERATION_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(attempt as u64);
        if let Some(world) = try_generate(spec, &mut rng) {
            if reachable(spec, &world) {
                return Ok(world);
            }
        }
    }
    Err(WorldError::GenerationFailed(MAX_GENERATION_ATTEMPTS))
}

#[derive(Clone, Copy)]
struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    fn overlaps(&self, o: &Interval, margin: f64) -> bool {
        self.lo < o.hi + margin && o.lo < self.hi + margin
    }
}

/// Splits the wall `[0, length]` at the door gaps on that side.
fn wall_pieces(length: f64, gaps: &[Interval]) -> Vec<Interval> {
    let mut gaps = gaps.to_vec();
    gaps.sort_by(|a, b| a.lo.total_cmp(&b.lo));
    let mut out = Vec::new();
    let mut x = 0.0;
    for g in gaps {
        if g.lo > x {
            out.push(Interval { lo: x, hi: g.lo });
        }
        x = x.max(g.hi);
    }
    if x < length {
        out.push(Interval { lo: x, hi: length });
    }
    out
}

fn try_generate(spec: &ScenarioSpec, rng: &mut ChaCha8Rng) -> Option<WorldModel> {
    let width = spec.corridor_width_range.sample(rng);
    let length = spec.corridor_length_range.sample(rng);
    let half = width / 2.0;
    let sides = [1.0f64, -1.0];

    // Doors: gaps in either side wall, kept clear of the end caps.
    let mut doors: [Vec<Interval>; 2] = [Vec::new(), Vec::new()];
    for _ in 0..spec.door_count_range.sample(rng) {
        let w = spec.door_width_range.sample(rng);
        if length - w - 2.0 <= 1.0 {
            return None;
        }
        let side = rng.random_range(0..2usize);
        let lo = rng.random_range(1.0..length - w - 1.0);
        let gap = Interval { lo, hi: lo + w };
        if doors[side].iter().any(|d| d.overlaps(&gap, 0.3)) {
            return None;
        }
        doors[side].push(gap);
    }

    let mut obstacles = Vec::new();
    for (side, sign) in sides.iter().enumerate() {
        for piece in wall_pieces(length, &doors[side]) {
            obstacles.push(Obstacle::wall(Vec2::new(piece.lo, sign * half), Vec2::new(piece.hi, sign * half)));
        }
    }
    obstacles.push(Obstacle::wall(Vec2::new(0.0, -half), Vec2::new(0.0, half)));
    obstacles.push(Obstacle::wall(Vec2::new(length, -half), Vec2::new(length, half)));

    // Shelves stand against a wall section, never overlapping each other along
    // the axis so a passage always remains.
    let n_shelves = spec.shelf_count_range.sample(rng) as usize;
    let mut shelves: Vec<(usize, Interval, f64)> = Vec::new();
    for _ in 0..n_shelves {
        let mut placed = false;
        for _ in 0..50 {
            let depth = spec.shelf_depth_range.sample(rng);
            let w = spec.shelf_width_range.sample(rng);
            if length - w - 1.0 <= 0.5 {
                return None;
            }
            let side = rng.random_range(0..2usize);
            let lo = rng.random_range(0.5..length - w - 0.5);
            let iv = Interval { lo, hi: lo + w };
            let clash = shelves.iter().any(|(_, o, _)| o.overlaps(&iv, 0.3))
                || doors[side].iter().any(|d| d.overlaps(&iv, 0.0))
                || depth >= width - 0.5;
            if !clash {
                shelves.push((side, iv, depth));
                placed = true;
                break;
            }
        }
        if !placed {
            return None;
        }
    }
    for &(side, iv, depth) in &shelves {
        let sign = sides[side];
        let (y0, y1) = if sign > 0.0 { (half - depth, half) } else { (-half, -half + depth) };
        obstacles.push(Obstacle::Box {
            min: Vec2::new(iv.lo, y0),
            max: Vec2::new(iv.hi, y1),
            height: Height::Low,
        });
    }

    let goal_idx = rng.random_range(0..shelves.len());
    let (g_side, g_iv, g_depth) = shelves[goal_idx];
    let g_sign = sides[g_side];

    // Wall stubs: short full-height segments perpendicular to a wall, kept
    // away from shelves and doors.
    for _ in 0..spec.wall_stub_count_range.sample(rng) {
        let len = spec.wall_stub_length_range.sample(rng);
        let side = rng.random_range(0..2usize);
        let x = rng.random_range(0.5..length - 0.5);
        let iv = Interval { lo: x, hi: x };
        if shelves.iter().any(|(_, s, _)| s.overlaps(&iv, 0.2)) || doors[side].iter().any(|d| d.overlaps(&iv, 0.2)) {
            continue;
        }
        let sign = sides[side];
        obstacles.push(Obstacle::wall(Vec2::new(x, sign * half), Vec2::new(x, sign * (half - len))));
    }

    let depth = spec.goal_depth.min(g_depth - spec.goal_inset);
    let half_w = (g_iv.hi - g_iv.lo) / 2.0 - spec.goal_inset;
    if depth <= 0.0 || half_w <= 0.0 {
        return None;
    }
    let front_y = g_sign * (half - g_depth);
    let goal_region = OrientedBox {
        center: Vec2::new((g_iv.lo + g_iv.hi) / 2.0, front_y + g_sign * depth / 2.0),
        half_extents: Vec2::new(half_w, depth / 2.0),
        yaw: 0.0,
    };

    let dist = spec.spawn_distance_range.sample(rng);
    let dir = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    let shelf_cx = (g_iv.lo + g_iv.hi) / 2.0;
    let margin = spec.spawn_semi_axes.x + 0.6;
    let mut cx = shelf_cx - dir * dist;
    if cx < margin || cx > length - margin {
        cx = shelf_cx + dir * dist;
        if cx < margin || cx > length - margin {
            return None;
        }
    }
    let semi_y = spec.spawn_semi_axes.y.min((half - 0.45).max(0.02));
    let spawn_region = Ellipse {
        center: Vec2::new(cx, 0.0),
        semi_axes: Vec2::new(spec.spawn_semi_axes.x, semi_y),
    };
    let spawn_heading = if shelf_cx >= cx { 0.0 } else { PI };

    let world = WorldModel {
        obstacles,
        corridor_axis: Line { origin: Vec2::ZERO, direction: Vec2::new(1.0, 0.0) },
        corridor_width: width,
        goal_region,
        spawn_region,
        spawn_heading,
        spawn_heading_spread: spec.spawn_heading_spread,
        bounds: Aabb::new(Vec2::new(-1.0, -half - 1.5), Vec2::new(length + 1.0, half + 1.5)),
    };
    world.validate().ok()?;
    Some(world)
}

/// The spawn center must be clear, the base must be able to drive next to
/// the goal shelf and the end effector must have a path to the goal.
fn reachable(spec: &ScenarioSpec, world: &WorldModel) -> bool {
    let spawn = world.spawn_region.center;
    if world.point_clearance(spawn, Layer::Base) < spec.spawn_clearance {
        return false;
    }
    let g = &world.goal_region;
    // Shelf front face, then into the corridor by the base clearance.
    let inward = if g.center.y > 0.0 { -1.0 } else { 1.0 };
    let front = g.center.y + inward * g.half_extents.y;
    let approach = Vec2::new(g.center.x, front + inward * (spec.base_clearance + 0.05));
    if pathref::plan_path(world, spawn, approach, spec.base_clearance, Layer::Base).is_err() {
        return false;
    }
    pathref::plan_ee_path(world, spawn, g.center, spec.ee_inflation).is_ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_walls() -> WorldModel {
        WorldModel {
            obstacles: vec![
                Obstacle::wall(Vec2::new(-5.0, 1.0), Vec2::new(5.0, 1.0)),
                Obstacle::wall(Vec2::new(-5.0, -1.0), Vec2::new(5.0, -1.0)),
            ],
            corridor_axis: Line { origin: Vec2::ZERO, direction: Vec2::new(1.0, 0.0) },
            corridor_width: 2.0,
            goal_region: OrientedBox { center: Vec2::new(3.0, 0.0), half_extents: Vec2::new(0.2, 0.2), yaw: 0.0 },
            spawn_region: Ellipse { center: Vec2::new(-3.0, 0.0), semi_axes: Vec2::new(0.3, 0.2) },
            spawn_heading: 0.0,
            spawn_heading_spread: 0.0,
            bounds: Aabb::new(Vec2::new(-6.0, -2.0), Vec2::new(6.0, 2.0)),
        }
    }

    fn empty_world() -> WorldModel {
        WorldModel { obstacles: vec![], ..two_walls() }
    }

    #[test]
    fn fixed_layout_passthrough() {
        let spec = ScenarioSpec { fixed_layout: Some(two_walls()), ..ScenarioSpec::default() };
        for seed in [0, 1, 99] {
            let w = generate_world(&spec, seed).unwrap();
            assert_eq!(w.obstacles.len(), 2);
            assert_eq!(w, two_walls());
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = ScenarioSpec::default();
        for seed in 0..5 {
            let a = generate_world(&spec, seed).unwrap();
            let b = generate_world(&spec, seed).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.to_json(), b.to_json());
        }
    }

    #[test]
    fn raycast_examples() {
        let w = empty_world();
        assert_eq!(w.raycast(Vec2::ZERO, Vec2::new(0.6, 0.8), 5.0), 5.0);
        let wall = WorldModel {
            obstacles: vec![Obstacle::wall(Vec2::new(2.0, -5.0), Vec2::new(2.0, 5.0))],
            ..empty_world()
        };
        assert_eq!(wall.raycast(Vec2::ZERO, Vec2::new(1.0, 0.0), 5.0), 2.0);
        assert_eq!(wall.raycast(Vec2::ZERO, Vec2::new(0.0, 1.0), 5.0), 5.0);
    }

    #[test]
    fn raycast_from_inside_box_is_zero() {
        let w = WorldModel {
            obstacles: vec![Obstacle::Box { min: Vec2::new(-1.0, -1.0), max: Vec2::new(1.0, 1.0), height: Height::Low }],
            ..empty_world()
        };
        assert_eq!(w.raycast(Vec2::ZERO, Vec2::new(1.0, 0.0), 5.0), 0.0);
    }

    #[test]
    fn clearance_examples() {
        let w = two_walls();
        let p = |p| BodyShape { shape: Shape::Point { p }, layer: Layer::Base };
        assert!((w.min_clearance(&[p(Vec2::ZERO)]) - 1.0).abs() < 1e-15);
        let straddle = BodyShape {
            shape: Shape::Rect(OrientedBox { center: Vec2::new(0.0, 1.0), half_extents: Vec2::new(0.3, 0.2), yaw: 0.3 }),
            layer: Layer::Base,
        };
        assert_eq!(w.min_clearance(&[straddle]), 0.0);
        assert!(w.in_collision(&[straddle]));
        assert_eq!(empty_world().min_clearance(&[p(Vec2::ZERO)]), f64::INFINITY);
        assert!(!w.in_collision(&[p(Vec2::ZERO)]));
    }

    #[test]
    fn tangent_contact_counts_as_collision() {
        let w = two_walls();
        let c = BodyShape { shape: Shape::Circle { center: Vec2::ZERO, radius: 1.0 - 5e-10 }, layer: Layer::Base };
        assert!(w.in_collision(&[c]));
        let c = BodyShape { shape: Shape::Circle { center: Vec2::ZERO, radius: 1.0 - 1e-6 }, layer: Layer::Base };
        assert!(!w.in_collision(&[c]));
    }

    #[test]
    fn arm_layer_ignores_low_obstacles() {
        let w = WorldModel {
            obstacles: vec![Obstacle::Box { min: Vec2::new(-1.0, -1.0), max: Vec2::new(1.0, 1.0), height: Height::Low }],
            ..empty_world()
        };
        let arm = BodyShape { shape: Shape::Point { p: Vec2::ZERO }, layer: Layer::Arm };
        let base = BodyShape { layer: Layer::Base, ..arm };
        assert!(!w.in_collision(&[arm]));
        assert!(w.in_collision(&[base]));
    }

    #[test]
    fn widths_respect_range() {
        let spec = ScenarioSpec { corridor_width_range: Range::new(1.5, 3.0), ..ScenarioSpec::default() };
        for seed in 0..200 {
            let w = generate_world(&spec, seed).unwrap();
            assert!(spec.corridor_width_range.contains(w.corridor_width), "seed {seed}: {}", w.corridor_width);
        }
    }

    #[test]
    fn invalid_spec_rejected() {
        let spec = ScenarioSpec { corridor_width_range: Range::new(3.0, 1.0), ..ScenarioSpec::default() };
        assert!(matches!(generate_world(&spec, 0), Err(WorldError::InvalidSpec(_))));
    }

    #[test]
    fn impossible_spec_fails_generation() {
        // Shelves deeper than the corridor can never be placed.
        let spec = ScenarioSpec {
            corridor_width_range: Range::fixed(1.0),
            shelf_depth_range: Range::fixed(0.9),
            ..ScenarioSpec::default()
        };
        assert!(matches!(generate_world(&spec, 3), Err(WorldError::GenerationFailed(100))));
    }

    #[test]
    fn layout_json_roundtrip() {
        let w = generate_world(&ScenarioSpec::default(), 11).unwrap();
        let back = WorldModel::from_json(&w.to_json()).unwrap();
        assert_eq!(w, back);
    }
}
