use super::MacError;

/// Slot timing of one event window.
///
/// The first spontaneous reports land `initial_report_slots` after the
/// onset. Each wake-up round then takes `wakeup_round_slots`: one for the
/// request and one for the woken device to sense and transmit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimingConstants {
    slot_ms: f64,
    deadline_ms: f64,
    initial_report_slots: u32,
    wakeup_round_slots: u32,
    max_rounds: u32,
}

impl Default for TimingConstants {
    fn default() -> Self {
        Self::new(1.0, 5.0, 1, 2, 2).expect("default timing is valid")
    }
}

impl TimingConstants {
    pub fn new(
        slot_ms: f64,
        deadline_ms: f64,
        initial_report_slots: u32,
        wakeup_round_slots: u32,
        max_rounds: u32,
    ) -> Result<Self, MacError> {
        let bad = |m: String| Err(MacError::InvalidTiming(m));
        if !(slot_ms.is_finite() && slot_ms > 0.0) {
            return bad(format!("slot_ms must be > 0, got {slot_ms}"));
        }
        if !(deadline_ms.is_finite() && deadline_ms > 0.0) {
            return bad(format!("deadline_ms must be > 0, got {deadline_ms}"));
        }
        if initial_report_slots == 0 || wakeup_round_slots == 0 {
            return bad("initial_report_slots and wakeup_round_slots must be positive".into());
        }
        let t = Self { slot_ms, deadline_ms, initial_report_slots, wakeup_round_slots, max_rounds };
        if t.deadline_slots() < u64::from(initial_report_slots) {
            return bad(format!(
                "deadline_ms {deadline_ms} is shorter than the initial report ({initial_report_slots} slots of {slot_ms} ms)"
            ));
        }
        Ok(t)
    }

    pub fn slot_ms(&self) -> f64 {
        self.slot_ms
    }

    pub fn deadline_ms(&self) -> f64 {
        self.deadline_ms
    }

    pub fn initial_report_slots(&self) -> u32 {
        self.initial_report_slots
    }

    pub fn wakeup_round_slots(&self) -> u32 {
        self.wakeup_round_slots
    }

    pub fn max_rounds(&self) -> u32 {
        self.max_rounds
    }

    /// Whole slots that fit in the deadline.
    pub fn deadline_slots(&self) -> u64 {
        (self.deadline_ms / self.slot_ms + 1e-9).floor() as u64
    }

    /// Wake-up rounds whose reports can still land by the deadline, capped by
    /// `max_rounds`.
    pub fn rounds_available(&self) -> u32 {
        let spare = self.deadline_slots() - u64::from(self.initial_report_slots);
        let fit = spare / u64::from(self.wakeup_round_slots);
        self.max_rounds.min(u32::try_from(fit).unwrap_or(u32::MAX))
    }

    pub fn initial_report_slot(&self, onset: u64) -> u64 {
        onset + u64::from(self.initial_report_slots)
    }

    /// Slot in which round `round` (1-based) sends its wake-up signal.
    pub fn round_request_slot(&self, onset: u64, round: u32) -> u64 {
        self.initial_report_slot(onset) + u64::from(round - 1) * u64::from(self.wakeup_round_slots)
    }

    /// Slot in which reports woken in round `round` land.
    pub fn round_report_slot(&self, onset: u64, round: u32) -> u64 {
        self.initial_report_slot(onset) + u64::from(round) * u64::from(self.wakeup_round_slots)
    }

    pub fn deadline_slot(&self, onset: u64) -> u64 {
        onset + self.deadline_slots()
    }
}
