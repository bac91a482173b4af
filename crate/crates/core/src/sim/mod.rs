//! Scenario description, replication driver and parameter sweeps.
//!
//! Each replication owns four random streams derived from the master seed
//! and the replication index (placement, events, harvesting, activation).
//! The streams do not depend on the policy, so comparing policies on the
//! same seed is a paired comparison.

mod engine;
mod stats;

use std::path::PathBuf;

use thiserror::Error;

pub use engine::{replicate, replicate_with_timelines};
pub use stats::{wilson_interval, Tally, Z95};

use crate::energy::{DutyCycle, EnergyModel};
use crate::mac::{DutyCyclePlan, SignalPlan, TimingConstants, WusMode};
use crate::spatial::{Arena, DevicePlacement, Point, SpatialError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PolicyKind {
    Benchmark,
    Intelligent,
}

impl PolicyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PolicyKind::Benchmark => "benchmark",
            PolicyKind::Intelligent => "intelligent",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PlacementSpec {
    /// Fresh uniform positions in every replication.
    Uniform,
    /// Fixed near-square grid.
    Grid,
    /// Fixed positions read from a `device_id,x,y` CSV file.
    File(PathBuf),
}

/// Complete description of one experiment cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub arena: Arena,
    pub placement: PlacementSpec,
    pub devices: usize,
    /// Share of devices fitted with a wake-up receiver.
    pub wur_fraction: f64,
    pub energy: EnergyModel,
    /// Duty cycle every device starts with; the benchmark never changes it.
    pub duty: DutyCycle,
    pub timing: TimingConstants,
    pub policy: PolicyKind,
    pub wus_mode: WusMode,
    /// Group signal size; `None` means `⌈√N⌉`.
    pub group_size: Option<usize>,
    /// Distinct relevant reports needed for a detection.
    pub k_req: usize,
    pub knn_k: usize,
    pub knn_window: usize,
    /// Candidates scored per target, nearest first.
    pub candidate_factor: usize,
    pub conserve_duty: DutyCycle,
    pub conserve_below: f64,
    pub resume_above: f64,
    /// Slots between duty-cycle controller passes.
    pub control_interval: u64,
    /// Per-slot probability that an event starts while none is active.
    pub p_event: f64,
    /// Fixed epicenter; `None` draws one uniformly per event.
    pub epicenter: Option<Point>,
    pub horizon: u64,
    /// Slots simulated before events and device-slots are counted.
    pub warmup: u64,
    pub seed: u64,
    pub replications: u64,
    /// Index of the first replication, for splitting a run across jobs.
    pub first_replication: u64,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            arena: Arena::new(10.0, 10.0, 1.5).expect("valid arena"),
            placement: PlacementSpec::Uniform,
            devices: 100,
            wur_fraction: 1.0,
            energy: EnergyModel::default(),
            duty: DutyCycle::new(1, 3).expect("valid duty"),
            timing: TimingConstants::default(),
            policy: PolicyKind::Intelligent,
            wus_mode: WusMode::Group,
            group_size: None,
            k_req: 3,
            knn_k: 5,
            knn_window: 2000,
            candidate_factor: 3,
            conserve_duty: DutyCycle::new(1, 16).expect("valid duty"),
            conserve_below: 20.0,
            resume_above: 40.0,
            control_interval: 10,
            p_event: 0.1,
            epicenter: None,
            horizon: 200_000,
            warmup: 5_000,
            seed: 1,
            replications: 8,
            first_replication: 0,
        }
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidScenario(m));
        if self.devices == 0 {
            return bad("device count must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.wur_fraction) {
            return bad(format!("wur_fraction must lie in [0, 1], got {}", self.wur_fraction));
        }
        if !(0.0..=1.0).contains(&self.p_event) {
            return bad(format!("p_event must lie in [0, 1], got {}", self.p_event));
        }
        if self.horizon < self.timing.deadline_slots() + 1 {
            return bad(format!("horizon {} is shorter than one event window", self.horizon));
        }
        if self.warmup >= self.horizon {
            return bad(format!("warmup {} must be below the horizon {}", self.warmup, self.horizon));
        }
        if self.replications == 0 {
            return bad("replications must be at least 1".into());
        }
        if self.first_replication.checked_add(self.replications).is_none_or(|end| end > 1 << 61) {
            return bad("replication indices must stay below 2^61".into());
        }
        if self.k_req == 0 {
            return bad("k_req must be at least 1".into());
        }
        if self.knn_k == 0 || self.knn_window < self.knn_k {
            return bad(format!("need 1 <= knn_k <= knn_window, got {} and {}", self.knn_k, self.knn_window));
        }
        if self.candidate_factor == 0 {
            return bad("candidate_factor must be at least 1".into());
        }
        if self.group_size == Some(0) {
            return bad("group_size must be at least 1".into());
        }
        if self.control_interval == 0 {
            return bad("control_interval must be at least 1".into());
        }
        if self.duty_plan().is_none() {
            return bad(format!(
                "need conserve_below <= resume_above, got {} and {}",
                self.conserve_below, self.resume_above
            ));
        }
        if let Some(p) = self.epicenter {
            if !self.arena.contains(&p) {
                return Err(SimError::Spatial(SpatialError::OutsideArena { index: 0, x: p.x, y: p.y }));
            }
        }
        Ok(())
    }

    pub fn signal_plan(&self) -> SignalPlan {
        match (self.wus_mode, self.group_size) {
            (WusMode::Dedicated, _) => SignalPlan::dedicated(),
            (WusMode::Group, None) => SignalPlan::group_for(self.devices),
            (WusMode::Group, Some(g)) => SignalPlan::group_of(g),
        }
    }

    pub fn duty_plan(&self) -> Option<DutyCyclePlan> {
        DutyCyclePlan::new(self.duty, self.conserve_duty, self.conserve_below, self.resume_above)
    }

    /// Fixed placement for grid and file layouts; `None` for uniform.
    fn fixed_placement(&self) -> Result<Option<DevicePlacement>, SimError> {
        let p = match &self.placement {
            PlacementSpec::Uniform => return Ok(None),
            PlacementSpec::Grid => DevicePlacement::grid(&self.arena, self.devices)?,
            PlacementSpec::File(path) => DevicePlacement::load_csv(&self.arena, path)?,
        };
        if p.len() != self.devices {
            return Err(SimError::InvalidScenario(format!(
                "placement holds {} devices but the scenario asks for {}",
                p.len(),
                self.devices
            )));
        }
        Ok(Some(p))
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error(transparent)]
    Spatial(#[from] SpatialError),
    #[error("empty sweep: no device counts given")]
    EmptySweep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Replications on the rayon pool; sequential when built without the
    /// `parallel` feature. Results are identical to [`Execution::Sequential`].
    #[default]
    Parallel,
}

/// Pooled outcome of all replications of one scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunResult {
    pub tally: Tally,
    /// `successes / events`; NaN when no event was observed.
    pub detection_probability: f64,
    pub ci95_lo: f64,
    pub ci95_hi: f64,
    pub events: u64,
    /// Distinct relevant reports per event; NaN without events.
    pub mean_reports: f64,
    /// Share of post-warm-up device-slots spent with an empty battery.
    pub depletion_fraction: f64,
}

impl RunResult {
    pub fn from_tally(tally: Tally) -> Self {
        let events = tally.events;
        let (p, lo, hi, mean) = match wilson_interval(tally.successes, events, Z95) {
            Some((lo, hi)) => {
                (tally.successes as f64 / events as f64, lo, hi, tally.relevant_reports as f64 / events as f64)
            }
            None => (f64::NAN, f64::NAN, f64::NAN, f64::NAN),
        };
        let depletion = if tally.device_slots == 0 {
            f64::NAN
        } else {
            tally.depleted_device_slots as f64 / tally.device_slots as f64
        };
        Self {
            tally,
            detection_probability: p,
            ci95_lo: lo,
            ci95_hi: hi,
            events,
            mean_reports: mean,
            depletion_fraction: depletion,
        }
    }

    /// Flag for runs that saw no event at all.
    pub fn no_events(&self) -> bool {
        self.events == 0
    }

    pub fn ci95_halfwidth(&self) -> f64 {
        (self.ci95_hi - self.ci95_lo) / 2.0
    }
}

pub fn run(scenario: &Scenario) -> Result<RunResult, SimError> {
    run_with(scenario, Execution::default())
}

pub fn run_with(scenario: &Scenario, execution: Execution) -> Result<RunResult, SimError> {
    scenario.validate()?;
    let fixed = scenario.fixed_placement()?;
    let reps = scenario.first_replication..scenario.first_replication + scenario.replications;
    let one = |rep: u64| engine::replicate_inner(scenario, fixed.as_ref(), rep, None);
    let tally: Tally = match execution {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            reps.into_par_iter().map(one).reduce(Tally::default, |a, b| a + b)
        }
        _ => reps.map(one).sum(),
    };
    Ok(RunResult::from_tally(tally))
}

/// One cell of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub devices: usize,
    pub policy: PolicyKind,
    pub wus_mode: WusMode,
    pub result: RunResult,
}

/// Policy and mode combinations in output order.
pub const SWEEP_CELLS: [(PolicyKind, WusMode); 4] = [
    (PolicyKind::Benchmark, WusMode::Dedicated),
    (PolicyKind::Benchmark, WusMode::Group),
    (PolicyKind::Intelligent, WusMode::Dedicated),
    (PolicyKind::Intelligent, WusMode::Group),
];

/// Runs all four policy × mode cells for every device count, in input order.
pub fn sweep(base: &Scenario, n_values: &[usize], execution: Execution) -> Result<Vec<SweepRow>, SimError> {
    if n_values.is_empty() {
        return Err(SimError::EmptySweep);
    }
    let mut rows = Vec::with_capacity(n_values.len() * SWEEP_CELLS.len());
    for &n in n_values {
        for (policy, mode) in SWEEP_CELLS {
            let s = Scenario { devices: n, policy, wus_mode: mode, ..base.clone() };
            rows.push(SweepRow { devices: n, policy, wus_mode: mode, result: run_with(&s, execution)? });
        }
    }
    Ok(rows)
}
