//! Pooled counters and the binomial interval.

use std::ops::{Add, AddAssign};

/// Two-sided 95% standard normal quantile.
pub const Z95: f64 = 1.959963984540054;

/// Raw counts from one or more replications. Pooling is plain addition, so
/// the order in which replications are combined never matters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Tally {
    pub events: u64,
    pub successes: u64,
    /// Distinct relevant devices heard in time, summed over events.
    pub relevant_reports: u64,
    pub depleted_device_slots: u64,
    pub device_slots: u64,
}

impl Add for Tally {
    type Output = Tally;

    fn add(mut self, rhs: Tally) -> Tally {
        self += rhs;
        self
    }
}

impl AddAssign for Tally {
    fn add_assign(&mut self, rhs: Tally) {
        self.events += rhs.events;
        self.successes += rhs.successes;
        self.relevant_reports += rhs.relevant_reports;
        self.depleted_device_slots += rhs.depleted_device_slots;
        self.device_slots += rhs.device_slots;
    }
}

impl std::iter::Sum for Tally {
    fn sum<I: Iterator<Item = Tally>>(iter: I) -> Tally {
        iter.fold(Tally::default(), Add::add)
    }
}

/// Wilson score interval for `successes` out of `trials` at normal quantile `z`.
///
/// Returns `None` for zero trials.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> Option<(f64, f64)> {
    if trials == 0 {
        return None;
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    // the closed form is exact at the boundaries; clamp only rounding noise
    let lo = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if successes == trials { 1.0 } else { (center + half).min(1.0) };
    Some((lo, hi))
}
