//! Top-down frames of a recorded episode.

use crate::canvas::{Canvas, BLACK, BLUE, GRAY, GREEN, LIGHT, ORANGE, PINK, RED};
use image::RgbImage;
use std::path::Path;
use wbc_core::geometry::{Shape, Vec2};
use wbc_core::robot::{arm_points, collision_shapes, forward_kinematics};
use wbc_core::trace::{TraceHeader, TraceRecord, TraceStep};
use wbc_core::world::{Height, Obstacle};

/// Pixels per meter.
pub const SCALE: f64 = 80.0;

/// World-to-pixel mapping for one scene.
#[derive(Clone, Copy, Debug)]
pub struct View {
    origin: Vec2,
    height_px: f64,
}

impl View {
    pub fn for_header(h: &TraceHeader) -> (Self, u32, u32) {
        let b = h.world.bounds;
        let w = (b.width() * SCALE).ceil().clamp(1.0, 8000.0) as u32;
        let hp = (b.height() * SCALE).ceil().clamp(1.0, 8000.0) as u32;
        (Self { origin: b.min, height_px: hp as f64 }, w, hp)
    }

    pub fn px(&self, p: Vec2) -> (f64, f64) {
        ((p.x - self.origin.x) * SCALE, self.height_px - (p.y - self.origin.y) * SCALE)
    }
}

/// What a frame shows, for cross-checking against the trace.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameInfo {
    pub step: usize,
    /// End effector recomputed from the recorded joint state, world frame.
    pub ee: Vec2,
    pub ee_px: (f64, f64),
}

fn draw_scene(c: &mut Canvas, v: &View, h: &TraceHeader) {
    for o in &h.world.obstacles {
        match *o {
            Obstacle::Box { min, max, height } => {
                let (a, b) = (v.px(min), v.px(max));
                c.fill_rect(a.0, a.1, b.0, b.1, if height == Height::Low { LIGHT } else { GRAY });
                c.polygon(&[a, (b.0, a.1), b, (a.0, b.1)], 1, BLACK);
            }
            Obstacle::Segment { a, b, height } => {
                let (a, b) = (v.px(a), v.px(b));
                c.line(a.0, a.1, b.0, b.1, 3, if height == Height::Low { GRAY } else { BLACK });
            }
        }
    }
    let pts: Vec<(f64, f64)> = h.path.waypoints.iter().map(|&p| v.px(p)).collect();
    for w in pts.windows(2) {
        c.line(w[0].0, w[0].1, w[1].0, w[1].1, 1, GREEN);
    }
    let g = v.px(h.goal);
    c.circle(g.0, g.1, h.tolerance * SCALE, RED);
    c.dot(g.0, g.1, 2, RED);
}

/// Renders the robot, its scans and the scene at one step.
pub fn render_step(h: &TraceHeader, s: &TraceStep) -> (RgbImage, FrameInfo) {
    let (v, w, hp) = View::for_header(h);
    let mut c = Canvas::new(w, hp);
    draw_scene(&mut c, &v, h);
    for (lidar, ranges) in h.lidars.iter().zip(&s.scans) {
        let pose = lidar.world_pose(&s.state.base);
        for (i, &r) in ranges.iter().enumerate() {
            if r < lidar.max_range {
                let hit = pose.position() + Vec2::from_angle(pose.theta + lidar.beam_offset(i)) * r;
                let p = v.px(hit);
                c.dot(p.0, p.1, 1, PINK);
            }
        }
    }
    let shapes = collision_shapes(&s.state, &h.robot);
    if let Shape::Rect(b) = shapes[0].shape {
        let corners: Vec<(f64, f64)> = b.corners().iter().map(|&p| v.px(p)).collect();
        c.polygon(&corners, 2, BLUE);
    }
    let [mount, elbow, ee] = arm_points(&s.state, &h.robot);
    let (m, e, t) = (v.px(mount), v.px(elbow), v.px(ee));
    let link_w = (2.0 * h.robot.link_radius * SCALE).round().max(1.0) as i64;
    c.line(m.0, m.1, e.0, e.1, link_w, ORANGE);
    c.line(e.0, e.1, t.0, t.1, link_w, ORANGE);
    c.dot(t.0, t.1, 3, BLACK);
    c.text(6, 6, &format!("STEP {}", s.step), 2, BLACK);
    let fk = forward_kinematics(&s.state, &h.robot).position();
    (c.img, FrameInfo { step: s.step, ee: fk, ee_px: v.px(fk) })
}

/// Writes `frame_NNNNN.png` per step record into `dir`. Step records before
/// the first header are skipped. Returns one info per written frame.
pub fn render_trace(records: &[TraceRecord], dir: &Path) -> image::ImageResult<Vec<FrameInfo>> {
    let mut header: Option<&TraceHeader> = None;
    let mut out = Vec::new();
    for r in records {
        match r {
            TraceRecord::Header(h) => header = Some(h),
            TraceRecord::Step(s) => {
                let Some(h) = header else {
                    log::warn!("step {} precedes any trace header; skipped", s.step);
                    continue;
                };
                let (img, info) = render_step(h, s);
                img.save(dir.join(format!("frame_{:05}.png", out.len())))?;
                out.push(info);
            }
        }
    }
    Ok(out)
}
