//! Training-curve analysis and the reward / success / tolerance plots.

use crate::canvas::{Canvas, BLACK, BLUE, GRAY, LIGHT, RED};
use serde::Serialize;
use std::path::Path;
use wbc_agent::trainer::UpdateStats;

/// Exponential moving average; the first value seeds the average.
pub fn ema(values: &[f64], alpha: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = None;
    for &v in values {
        let next = match acc {
            None => v,
            Some(a) => a + alpha * (v - a),
        };
        acc = Some(next);
        out.push(next);
    }
    out
}

/// Fraction of consecutive, non-overlapping `window`-long spans of `series`
/// over which the value strictly increases from the first to the last point.
/// Returns `(fraction, number of windows)`.
pub fn increasing_fraction(series: &[f64], window: usize) -> (f64, usize) {
    assert!(window >= 1);
    let n = series.len().saturating_sub(1) / window;
    if n == 0 {
        return (0.0, 0);
    }
    let up = (0..n).filter(|&k| series[(k + 1) * window] > series[k * window]).count();
    (up as f64 / n as f64, n)
}

/// Per-update mean episode reward with updates that finished no episode
/// carrying the previous value forward. Leading gaps are dropped.
pub fn reward_series(log: &[UpdateStats]) -> Vec<(u64, f64)> {
    let mut out = Vec::new();
    let mut last = None;
    for s in log {
        last = s.mean_episode_reward.or(last);
        if let Some(r) = last {
            out.push((s.steps, r));
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LearningSummary {
    pub updates: usize,
    pub steps: u64,
    /// Success rate pooled over the most recent updates holding at least
    /// `window` episodes.
    pub recent_success: f64,
    pub recent_episodes: usize,
    /// Largest tolerance in force during those updates, m.
    pub recent_tolerance: f64,
    pub initial_d_h: f64,
    pub final_d_h: f64,
    /// Share of update windows over which the smoothed reward rose.
    pub reward_rise_fraction: f64,
    pub reward_windows: usize,
}

pub fn learning_summary(log: &[UpdateStats], episode_window: usize, alpha: f64, update_window: usize) -> Option<LearningSummary> {
    let last = log.last()?;
    let (mut succ, mut eps, mut tol) = (0.0, 0usize, 0.0f64);
    for s in log.iter().rev() {
        if eps >= episode_window {
            break;
        }
        if let Some(r) = s.success_rate {
            succ += r * s.episodes as f64;
            eps += s.episodes;
            tol = tol.max(s.d_h);
        }
    }
    let rewards: Vec<f64> = reward_series(log).into_iter().map(|(_, r)| r).collect();
    let (frac, windows) = increasing_fraction(&ema(&rewards, alpha), update_window);
    Some(LearningSummary {
        updates: log.len(),
        steps: last.steps,
        recent_success: if eps > 0 { succ / eps as f64 } else { 0.0 },
        recent_episodes: eps,
        recent_tolerance: tol,
        initial_d_h: log[0].d_h,
        final_d_h: last.d_h_next,
        reward_rise_fraction: frac,
        reward_windows: windows,
    })
}

fn nice_label(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e5 {
        format!("{:.1}M", v / 1e6)
    } else if v.abs() >= 100.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

/// Line plot of `raw` (thin, light) with `smooth` drawn over it.
pub fn plot_series(path: &Path, title: &str, xs: &[f64], raw: &[f64], smooth: &[f64]) -> image::ImageResult<()> {
    const W: u32 = 720;
    const H: u32 = 400;
    let (l, r, t, b) = (70.0, 20.0, 40.0, 40.0);
    let mut c = Canvas::new(W, H);
    c.text(l as i64, 12, title, 3, BLACK);
    let finite = |v: &&f64| v.is_finite();
    let x_lo = xs.iter().filter(finite).cloned().fold(f64::INFINITY, f64::min);
    let x_hi = xs.iter().filter(finite).cloned().fold(f64::NEG_INFINITY, f64::max);
    let y_lo = raw.iter().chain(smooth).filter(finite).cloned().fold(f64::INFINITY, f64::min);
    let y_hi = raw.iter().chain(smooth).filter(finite).cloned().fold(f64::NEG_INFINITY, f64::max);
    let (x_lo, x_hi) = if x_lo < x_hi { (x_lo, x_hi) } else { (x_lo - 1.0, x_lo + 1.0) };
    let (y_lo, y_hi) = if y_lo < y_hi { (y_lo, y_hi) } else { (y_lo - 1.0, y_lo + 1.0) };
    let (pw, ph) = (W as f64 - l - r, H as f64 - t - b);
    let px = |x: f64| l + (x - x_lo) / (x_hi - x_lo) * pw;
    let py = |y: f64| t + ph - (y - y_lo) / (y_hi - y_lo) * ph;
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let (gx, gy) = (l + f * pw, t + ph - f * ph);
        c.line(gx, t, gx, t + ph, 1, LIGHT);
        c.line(l, gy, l + pw, gy, 1, LIGHT);
        let ylab = nice_label(y_lo + f * (y_hi - y_lo));
        c.text(l as i64 - 8 - Canvas::text_width(&ylab, 2), gy as i64 - 5, &ylab, 2, BLACK);
        let xlab = nice_label(x_lo + f * (x_hi - x_lo));
        c.text(gx as i64 - Canvas::text_width(&xlab, 2) / 2, (t + ph) as i64 + 10, &xlab, 2, BLACK);
    }
    c.polygon(&[(l, t), (l + pw, t), (l + pw, t + ph), (l, t + ph)], 1, BLACK);
    for (series, color, width) in [(raw, GRAY, 1), (smooth, BLUE, 3)] {
        for i in 1..series.len().min(xs.len()) {
            c.line(px(xs[i - 1]), py(series[i - 1]), px(xs[i]), py(series[i]), width, color);
        }
    }
    if xs.len() == 1 {
        c.dot(px(xs[0]), py(smooth[0]), 3, RED);
    }
    c.img.save(path)
}

/// Writes `reward.png`, `success.png` and `tolerance.png` into `dir`.
pub fn write_training_plots(log: &[UpdateStats], dir: &Path, alpha: f64) -> image::ImageResult<()> {
    let rewards = reward_series(log);
    let xs: Vec<f64> = rewards.iter().map(|(s, _)| *s as f64).collect();
    let rs: Vec<f64> = rewards.iter().map(|(_, r)| *r).collect();
    plot_series(&dir.join("reward.png"), "EPISODE REWARD", &xs, &rs, &ema(&rs, alpha))?;

    let succ: Vec<(f64, f64)> = log.iter().filter_map(|s| s.success_rate.map(|v| (s.steps as f64, v))).collect();
    let xs: Vec<f64> = succ.iter().map(|p| p.0).collect();
    let ss: Vec<f64> = succ.iter().map(|p| p.1).collect();
    plot_series(&dir.join("success.png"), "SUCCESS RATE", &xs, &ss, &ema(&ss, alpha))?;

    let xs: Vec<f64> = log.iter().map(|s| s.steps as f64).collect();
    let dh: Vec<f64> = log.iter().map(|s| s.d_h).collect();
    plot_series(&dir.join("tolerance.png"), "TOLERANCE D_H (M)", &xs, &dh, &dh)
}
