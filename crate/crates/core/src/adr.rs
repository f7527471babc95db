//! Curriculum on the setpoint tolerance: the sphere shrinks geometrically
//! whenever a full window of recent episodes reaches the success threshold.

use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdrConfig {
    /// Number of pooled episode outcomes per decision.
    pub window: usize,
    /// Success rate needed to shrink the tolerance.
    pub threshold: f64,
    /// Multiplicative shrink factor.
    pub decay: f64,
    /// Initial tolerance radius, m.
    pub d_h_max: f64,
    /// Final tolerance radius, m.
    pub d_h_min: f64,
}

impl Default for AdrConfig {
    fn default() -> Self {
        Self { window: 100, threshold: 0.7, decay: 0.9, d_h_max: 0.5, d_h_min: 0.07 }
    }
}

impl AdrConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.window == 0 {
            return Err("window must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err("threshold must lie in [0, 1]".into());
        }
        if !(self.decay > 0.0 && self.decay < 1.0) {
            return Err("decay must lie in (0, 1)".into());
        }
        if !(self.d_h_min > 0.0 && self.d_h_min <= self.d_h_max && self.d_h_max.is_finite()) {
            return Err("tolerance bounds must satisfy 0 < d_h_min <= d_h_max".into());
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdrState {
    pub config: AdrConfig,
    /// Current tolerance radius, m.
    pub d_h: f64,
    /// Most recent outcomes, oldest first.
    pub outcomes: VecDeque<bool>,
}

impl AdrState {
    pub fn new(config: AdrConfig) -> Self {
        Self { d_h: config.d_h_max, outcomes: VecDeque::with_capacity(config.window), config }
    }

    /// Records one episode; returns true if the tolerance shrank.
    pub fn update(&mut self, success: bool) -> bool {
        if self.outcomes.len() == self.config.window {
            self.outcomes.pop_front();
        }
        self.outcomes.push_back(success);
        if self.outcomes.len() < self.config.window || self.success_rate() < self.config.threshold {
            return false;
        }
        self.d_h = (self.d_h * self.config.decay).max(self.config.d_h_min);
        self.outcomes.clear();
        true
    }

    pub fn success_rate(&self) -> f64 {
        if self.outcomes.is_empty() {
            return 0.0;
        }
        self.outcomes.iter().filter(|&&s| s).count() as f64 / self.outcomes.len() as f64
    }

    pub fn at_minimum(&self) -> bool {
        self.d_h <= self.config.d_h_min
    }
}
