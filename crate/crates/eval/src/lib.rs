//! Evaluation harness: the four task scenes, paired agent/baseline runs,
//! metrics CSV and summaries, training plots and replay rendering.

pub mod canvas;
pub mod curves;
pub mod metrics;
pub mod render;
pub mod run;
pub mod tasks;

pub use metrics::{summarize, MetricsRow, SummaryRow};
pub use run::{run_eval, run_eval_with, EvalOptions, Method};
pub use tasks::TaskSpec;
