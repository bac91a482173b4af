//! Redundant-path delivery (frame replication and elimination).
//!
//! A frame is replicated over independent paths. Path `i` delivers its copy
//! with probability `p_i` and, when it does, after a delay drawn from a
//! discrete distribution over whole slots. The merge point keeps the first
//! copy and discards the rest, so the frame is on time when at least one
//! copy is delivered within the deadline.

use crate::prob::any_of;
use crate::{DependabilityError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DelayedPath {
    pub delivery: f64,
    /// `delay[s]` is the probability that a delivered copy takes `s` slots.
    pub delay: Vec<f64>,
}

impl DelayedPath {
    pub fn new(delivery: f64, delay: Vec<f64>) -> Self {
        Self { delivery, delay }
    }

    fn on_time(&self, deadline: usize) -> f64 {
        let mass: f64 = self.delay.iter().take(deadline + 1).sum();
        (self.delivery * mass).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RedundantPathSet {
    paths: Vec<DelayedPath>,
}

impl RedundantPathSet {
    pub fn new(paths: Vec<DelayedPath>) -> Result<Self> {
        let bad = |m: String| Err(DependabilityError::MalformedPaths(m));
        if paths.is_empty() {
            return bad("at least one path required".into());
        }
        for (i, p) in paths.iter().enumerate() {
            if !(0.0..=1.0).contains(&p.delivery) {
                return bad(format!("path {i}: delivery probability {} outside [0, 1]", p.delivery));
            }
            if p.delay.is_empty() || p.delay.iter().any(|x| !(0.0..=1.0).contains(x)) {
                return bad(format!("path {i}: delay distribution must be non-empty probabilities"));
            }
            let total: f64 = p.delay.iter().sum();
            if (total - 1.0).abs() > 1e-12 {
                return bad(format!("path {i}: delay distribution sums to {total}, not 1"));
            }
        }
        Ok(Self { paths })
    }

    pub fn paths(&self) -> &[DelayedPath] {
        &self.paths
    }

    fn max_delay(&self) -> usize {
        self.paths.iter().map(|p| p.delay.len() - 1).max().unwrap_or(0)
    }
}

/// Probability that at least one copy arrives within `deadline` slots.
pub fn frer_delivery(paths: &RedundantPathSet, deadline: usize) -> f64 {
    any_of(paths.paths.iter().map(|p| p.on_time(deadline)))
}

/// Distribution of the first-arrival slot after duplicate elimination.
#[derive(Debug, Clone, PartialEq)]
pub struct LatencyProfile {
    /// `first_arrival[s]` = probability the earliest copy lands at slot `s`.
    pub first_arrival: Vec<f64>,
    /// Probability that no copy is delivered at all.
    pub loss: f64,
}

impl LatencyProfile {
    /// Mean first-arrival delay given the frame is delivered.
    pub fn mean_delay(&self) -> Option<f64> {
        let delivered = 1.0 - self.loss;
        (delivered > 0.0)
            .then(|| self.first_arrival.iter().enumerate().map(|(s, p)| s as f64 * p).sum::<f64>() / delivered)
    }
}

pub fn frer_latency(paths: &RedundantPathSet) -> LatencyProfile {
    let horizon = paths.max_delay();
    let mut first_arrival = Vec::with_capacity(horizon + 1);
    let mut prev = 0.0;
    for s in 0..=horizon {
        let cdf = frer_delivery(paths, s);
        first_arrival.push((cdf - prev).max(0.0));
        prev = cdf;
    }
    LatencyProfile { first_arrival, loss: (1.0 - prev).clamp(0.0, 1.0) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn instant(p: f64) -> DelayedPath {
        DelayedPath::new(p, vec![1.0])
    }

    #[test]
    fn delivery_examples() {
        let two = RedundantPathSet::new(vec![instant(0.9), instant(0.9)]).unwrap();
        assert_abs_diff_eq!(frer_delivery(&two, 0), 0.99, epsilon = 1e-15);

        // enumerate the 2^3 outcomes: only all-fail misses
        let brute: f64 = (0u32..8).filter(|m| *m != 0).map(|_| 0.125).sum();
        let three = RedundantPathSet::new(vec![instant(0.5); 3]).unwrap();
        assert_abs_diff_eq!(frer_delivery(&three, 4), brute, epsilon = 1e-15);
        assert_abs_diff_eq!(brute, 0.875, epsilon = 1e-15);

        let late = RedundantPathSet::new(vec![DelayedPath::new(0.9, vec![0.0, 0.0, 0.0, 1.0])]).unwrap();
        assert_eq!(frer_delivery(&late, 2), 0.0);
        assert_abs_diff_eq!(frer_delivery(&late, 3), 0.9, epsilon = 1e-15);
    }

    #[test]
    fn latency_profile_sums_to_one() {
        let set = RedundantPathSet::new(vec![
            DelayedPath::new(0.8, vec![0.5, 0.5]),
            DelayedPath::new(0.6, vec![0.0, 0.2, 0.8]),
        ])
        .unwrap();
        let prof = frer_latency(&set);
        let total: f64 = prof.first_arrival.iter().sum::<f64>() + prof.loss;
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(prof.loss, 0.2 * 0.4, epsilon = 1e-12);
        assert_abs_diff_eq!(prof.first_arrival[0], 0.4, epsilon = 1e-12);
        assert!(prof.mean_delay().unwrap() > 0.0);
    }

    #[test]
    fn malformed_sets() {
        assert!(RedundantPathSet::new(vec![]).is_err());
        assert!(RedundantPathSet::new(vec![DelayedPath::new(1.1, vec![1.0])]).is_err());
        assert!(RedundantPathSet::new(vec![DelayedPath::new(0.5, vec![0.5, 0.4])]).is_err());
        assert!(RedundantPathSet::new(vec![DelayedPath::new(0.5, vec![])]).is_err());
    }
}
