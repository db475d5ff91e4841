//! Impulse detection, tolerance matching against ground-truth onsets, and
//! detection-rate scoring with binomial margins.

mod matching;
mod scoring;
mod stalta;

pub use matching::{combined_detect, match_detections, MatchResult};
pub use scoring::{margin_of_error, score_rates, scores_csv, Condition, DetectionScore, SnrBin};
pub use stalta::{detect_impulses, default_tolerance, Detection, StaLtaConfig};
