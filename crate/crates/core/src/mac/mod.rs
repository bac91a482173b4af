//! Wake-up signalling and the base-station policies.
//!
//! An event is first reported by devices that happened to be sensing. The
//! base station then runs up to a few wake-up rounds: each round sends a
//! wake-up signal (to one device, or to a group of `⌈√N⌉` devices), and the
//! woken devices sense and transmit. Two policies choose the targets:
//!
//! - [`benchmark_policy`] ranks sleepers purely by spatial proximity to the
//!   estimated epicenter.
//! - [`intelligent_policy`] drops sleepers whose predicted battery cannot
//!   pay for a report and ranks the rest by a k-nearest-neighbour estimate of
//!   their chance to report in time. Its companion [`plan_duty_cycles`]
//!   manages each device's duty cycle from the same battery predictions.

mod knn;
mod policy;
mod round;
mod timing;

use thiserror::Error;

pub use knn::{Features, KnnPredictor, SuccessScorer};
pub use policy::{
    benchmark_policy, intelligent_policy, plan_duty_cycles, DeviceSummary, DutyCyclePlan, DutyState, EventReport,
    PolicyDecision, SignalPlan, SignalTarget, WakeupSignal, WusMode,
};
pub use round::{detection_success, resolve_event_round, EventTimeline, Report, ReportOrigin, WakeOutcome};
pub use timing::TimingConstants;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MacError {
    #[error("invalid timing: {0}")]
    InvalidTiming(String),
    #[error("invalid predictor: {0}")]
    InvalidPredictor(String),
    #[error("predictor holds {have} samples but k = {k}")]
    Untrained { have: usize, k: usize },
}
