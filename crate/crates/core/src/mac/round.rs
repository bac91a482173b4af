//! Per-event timeline of reports and the success test.

use std::collections::BTreeSet;

use super::policy::WakeupSignal;
use super::timing::TimingConstants;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportOrigin {
    Spontaneous,
    Woken { round: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Report {
    pub device: usize,
    pub origin: ReportOrigin,
    pub arrival_slot: u64,
    /// Sender lies within the relevance radius of the true epicenter.
    pub relevant: bool,
}

/// What happened to one device addressed by a wake-up round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WakeOutcome {
    pub device: usize,
    /// The device was asleep with a working wake-up receiver.
    pub received: bool,
    pub relevant: bool,
    /// The battery paid for reception, sensing and transmission.
    pub energy_ok: bool,
}

/// Reports collected for a single event, plus the signals that caused them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventTimeline {
    onset: u64,
    reports: Vec<Report>,
    spontaneous: BTreeSet<usize>,
    /// `(round, device)` pairs that were sent a wake-up signal.
    signalled: BTreeSet<(u32, usize)>,
    discarded: usize,
}

impl EventTimeline {
    pub fn new(onset: u64) -> Self {
        Self { onset, reports: Vec::new(), spontaneous: BTreeSet::new(), signalled: BTreeSet::new(), discarded: 0 }
    }

    pub fn onset(&self) -> u64 {
        self.onset
    }

    pub fn reports(&self) -> &[Report] {
        &self.reports
    }

    /// Reports dropped because they would have arrived after the deadline.
    pub fn discarded(&self) -> usize {
        self.discarded
    }

    /// Records a report from a device that was sensing when the event hit.
    pub fn add_spontaneous(&mut self, device: usize, relevant: bool, timing: &TimingConstants) {
        self.spontaneous.insert(device);
        self.reports.push(Report {
            device,
            origin: ReportOrigin::Spontaneous,
            arrival_slot: timing.initial_report_slot(self.onset),
            relevant,
        });
    }

    pub fn spontaneous(&self) -> &BTreeSet<usize> {
        &self.spontaneous
    }

    pub fn record_signal(&mut self, round: u32, signal: &WakeupSignal) {
        self.signalled.extend(signal.devices().iter().map(|&d| (round, d)));
    }

    pub fn was_signalled(&self, round: u32, device: usize) -> bool {
        self.signalled.contains(&(round, device))
    }

    /// Number of distinct relevant devices heard by the deadline.
    pub fn relevant_in_time(&self, timing: &TimingConstants) -> usize {
        let deadline = timing.deadline_slot(self.onset);
        self.reports
            .iter()
            .filter(|r| r.relevant && r.arrival_slot <= deadline)
            .map(|r| r.device)
            .collect::<BTreeSet<_>>()
            .len()
    }

    /// Checks that every report has a cause and arrived in time.
    pub fn audit(&self, timing: &TimingConstants) -> Result<(), String> {
        let deadline = timing.deadline_slot(self.onset);
        for r in &self.reports {
            let caused = match r.origin {
                ReportOrigin::Spontaneous => self.spontaneous.contains(&r.device),
                ReportOrigin::Woken { round } => self.was_signalled(round, r.device),
            };
            if !caused {
                return Err(format!("phantom report from device {} ({:?})", r.device, r.origin));
            }
            if r.arrival_slot > deadline {
                return Err(format!(
                    "report from device {} at slot {} after deadline {deadline}",
                    r.device, r.arrival_slot
                ));
            }
        }
        Ok(())
    }
}

/// Adds the reports produced by wake-up round `round`.
///
/// A woken device reports only if it received the signal, lies within the
/// relevance radius and could pay for the report. Reports landing after the
/// deadline are discarded; arriving exactly at the deadline counts.
pub fn resolve_event_round(
    timeline: &mut EventTimeline,
    round: u32,
    outcomes: &[WakeOutcome],
    timing: &TimingConstants,
) {
    let arrival = timing.round_report_slot(timeline.onset, round);
    let deadline = timing.deadline_slot(timeline.onset);
    for o in outcomes {
        if !(o.received && o.relevant && o.energy_ok) {
            continue;
        }
        if arrival > deadline {
            timeline.discarded += 1;
            continue;
        }
        timeline.reports.push(Report {
            device: o.device,
            origin: ReportOrigin::Woken { round },
            arrival_slot: arrival,
            relevant: true,
        });
    }
}

/// True iff at least `k_req` distinct relevant devices reported in time.
pub fn detection_success(timeline: &EventTimeline, k_req: usize, timing: &TimingConstants) -> bool {
    timeline.relevant_in_time(timing) >= k_req
}
