use crate::{DependabilityError, Result};

/// Mean uptime and mean downtime of a repairable item.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AvailabilityRecord {
    mean_uptime: f64,
    mean_downtime: f64,
}

impl AvailabilityRecord {
    pub fn new(mean_uptime: f64, mean_downtime: f64) -> Result<Self> {
        for (name, v) in [("mean_uptime", mean_uptime), ("mean_downtime", mean_downtime)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(DependabilityError::InvalidParameter {
                    name,
                    reason: format!("must be finite and >= 0, got {v}"),
                });
            }
        }
        if mean_uptime + mean_downtime <= 0.0 {
            return Err(DependabilityError::InvalidParameter {
                name: "mean_uptime",
                reason: "uptime and downtime cannot both be zero".into(),
            });
        }
        Ok(Self { mean_uptime, mean_downtime })
    }

    pub fn mean_uptime(&self) -> f64 {
        self.mean_uptime
    }

    pub fn mean_downtime(&self) -> f64 {
        self.mean_downtime
    }
}

/// Long-run fraction of time the item is operational.
pub fn steady_state_availability(rec: &AvailabilityRecord) -> f64 {
    rec.mean_uptime / (rec.mean_uptime + rec.mean_downtime)
}
