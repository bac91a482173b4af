//! Target selection for wake-up signals, and the duty-cycle controller.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use super::knn::{Features, SuccessScorer};
use crate::energy::{DutyCycle, EnergyModel};
use crate::spatial::Point;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum WusMode {
    Dedicated,
    Group,
}

impl WusMode {
    pub fn as_str(self) -> &'static str {
        match self {
            WusMode::Dedicated => "dedicated",
            WusMode::Group => "group",
        }
    }
}

/// How many devices one wake-up signal addresses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SignalPlan {
    mode: WusMode,
    group_size: usize,
}

impl SignalPlan {
    pub fn dedicated() -> Self {
        Self { mode: WusMode::Dedicated, group_size: 1 }
    }

    /// Group signal of `⌈√population⌉` devices.
    pub fn group_for(population: usize) -> Self {
        Self::group_of(crate::ceil_sqrt(population).max(1))
    }

    /// Group signal with an explicit size (at least 1).
    pub fn group_of(size: usize) -> Self {
        Self { mode: WusMode::Group, group_size: size.max(1) }
    }

    pub fn mode(&self) -> WusMode {
        self.mode
    }

    pub fn targets_per_signal(&self) -> usize {
        match self.mode {
            WusMode::Dedicated => 1,
            WusMode::Group => self.group_size,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SignalTarget {
    Dedicated(usize),
    Group(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WakeupSignal {
    pub target: SignalTarget,
    pub issue_slot: u64,
}

impl WakeupSignal {
    pub fn devices(&self) -> &[usize] {
        match &self.target {
            SignalTarget::Dedicated(d) => std::slice::from_ref(d),
            SignalTarget::Group(g) => g,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PolicyDecision {
    pub signals: Vec<WakeupSignal>,
    pub duty_cycle_overrides: BTreeMap<usize, DutyCycle>,
}

impl PolicyDecision {
    pub fn targets(&self) -> impl Iterator<Item = usize> + '_ {
        self.signals.iter().flat_map(|s| s.devices().iter().copied())
    }
}

/// What the base station knows about the event when it plans a round.
#[derive(Debug, Clone, PartialEq)]
pub struct EventReport {
    /// Centroid of the spontaneous reporters.
    pub epicenter_estimate: Point,
    pub issue_slot: u64,
}

/// Base-station view of one device.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviceSummary {
    pub id: usize,
    pub position: Point,
    pub asleep: bool,
    pub has_wur: bool,
    /// Already reported or already woken during the current event.
    pub engaged: bool,
    pub predicted_battery: f64,
    pub slots_since_activity: u64,
}

impl DeviceSummary {
    pub fn eligible(&self) -> bool {
        self.asleep && self.has_wur && !self.engaged
    }

    pub fn features(&self, estimate: &Point) -> Features {
        Features {
            distance: self.position.distance(estimate),
            predicted_battery: self.predicted_battery,
            slots_since_activity: self.slots_since_activity as f64,
        }
    }
}

fn signal_for(ranked: Vec<usize>, plan: &SignalPlan, slot: u64) -> PolicyDecision {
    if ranked.is_empty() {
        return PolicyDecision::default();
    }
    let target = match plan.mode {
        WusMode::Dedicated => SignalTarget::Dedicated(ranked[0]),
        WusMode::Group => SignalTarget::Group(ranked),
    };
    PolicyDecision { signals: vec![WakeupSignal { target, issue_slot: slot }], duty_cycle_overrides: BTreeMap::new() }
}

/// Eligible devices as `(distance, id)`, nearest first.
fn by_distance(
    report: &EventReport,
    devices: &[DeviceSummary],
    keep: impl Fn(&DeviceSummary) -> bool,
) -> Vec<(f64, usize)> {
    let mut v: Vec<(f64, usize)> = devices
        .iter()
        .filter(|d| d.eligible() && keep(d))
        .map(|d| (d.position.distance(&report.epicenter_estimate), d.id))
        .collect();
    v.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    v
}

/// Wakes the eligible sleepers closest to the estimated epicenter.
///
/// Ranking by distance is ranking by `e^{−d}`; ties go to the lower id.
pub fn benchmark_policy(report: &EventReport, devices: &[DeviceSummary], plan: &SignalPlan) -> PolicyDecision {
    let ranked: Vec<usize> =
        by_distance(report, devices, |_| true).into_iter().take(plan.targets_per_signal()).map(|(_, id)| id).collect();
    signal_for(ranked, plan, report.issue_slot)
}

/// Wakes the eligible sleepers most likely to report in time.
///
/// Devices whose predicted battery is below [`EnergyModel::report_cost`]
/// are skipped. The `candidate_factor × targets` nearest survivors are
/// scored and ranked by (score desc, distance asc, id asc). An untrained
/// scorer falls back to [`benchmark_policy`].
pub fn intelligent_policy<S: SuccessScorer + ?Sized>(
    report: &EventReport,
    devices: &[DeviceSummary],
    scorer: &S,
    energy: &EnergyModel,
    plan: &SignalPlan,
    candidate_factor: usize,
) -> PolicyDecision {
    if !scorer.ready() {
        return benchmark_policy(report, devices, plan);
    }
    let need = f64::from(energy.report_cost());
    let per_signal = plan.targets_per_signal();
    let pool = per_signal.saturating_mul(candidate_factor.max(1));
    let mut candidates = by_distance(report, devices, |d| d.predicted_battery >= need);
    candidates.truncate(pool);
    let index: BTreeMap<usize, &DeviceSummary> = devices.iter().map(|d| (d.id, d)).collect();
    let queries: Vec<Features> =
        candidates.iter().map(|&(_, id)| index[&id].features(&report.epicenter_estimate)).collect();
    let scores = scorer.score_batch(&queries);
    let mut ranked: Vec<(f64, f64, usize)> =
        candidates.iter().zip(scores).map(|(&(dist, id), s)| (s, dist, id)).collect();
    ranked.sort_by(|a, b| match b.0.total_cmp(&a.0) {
        Ordering::Equal => a.1.total_cmp(&b.1).then(a.2.cmp(&b.2)),
        o => o,
    });
    let chosen = ranked.into_iter().take(per_signal).map(|(_, _, id)| id).collect();
    signal_for(chosen, plan, report.issue_slot)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DutyState {
    Nominal,
    Conserve,
}

/// Hysteresis controller between a nominal and a conserving duty cycle.
///
/// A device drops to `conserve` once its predicted battery falls below
/// `conserve_below` and returns to `nominal` above `resume_above`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DutyCyclePlan {
    pub nominal: DutyCycle,
    pub conserve: DutyCycle,
    pub conserve_below: f64,
    pub resume_above: f64,
}

impl DutyCyclePlan {
    pub fn new(nominal: DutyCycle, conserve: DutyCycle, conserve_below: f64, resume_above: f64) -> Option<Self> {
        (conserve_below.is_finite() && resume_above.is_finite() && conserve_below <= resume_above).then_some(Self {
            nominal,
            conserve,
            conserve_below,
            resume_above,
        })
    }

    pub fn duty(&self, state: DutyState) -> DutyCycle {
        match state {
            DutyState::Nominal => self.nominal,
            DutyState::Conserve => self.conserve,
        }
    }
}

/// State changes for `(id, current state, predicted battery)` triples.
pub fn plan_duty_cycles(
    plan: &DutyCyclePlan,
    devices: impl IntoIterator<Item = (usize, DutyState, f64)>,
) -> BTreeMap<usize, DutyState> {
    devices
        .into_iter()
        .filter_map(|(id, state, predicted)| match state {
            DutyState::Nominal if predicted < plan.conserve_below => Some((id, DutyState::Conserve)),
            DutyState::Conserve if predicted > plan.resume_above => Some((id, DutyState::Nominal)),
            _ => None,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mac::KnnPredictor;
    use proptest::prelude::*;

    struct Constant(f64);

    impl SuccessScorer for Constant {
        fn ready(&self) -> bool {
            true
        }
        fn score_batch(&self, q: &[Features]) -> Vec<f64> {
            vec![self.0; q.len()]
        }
    }

    fn dev(id: usize, x: f64, battery: f64) -> DeviceSummary {
        DeviceSummary {
            id,
            position: Point::new(x, 0.0),
            asleep: true,
            has_wur: true,
            engaged: false,
            predicted_battery: battery,
            slots_since_activity: 0,
        }
    }

    fn report() -> EventReport {
        EventReport { epicenter_estimate: Point::new(0.0, 0.0), issue_slot: 7 }
    }

    #[test]
    fn nothing_to_wake() {
        let mut ds = vec![dev(0, 1.0, 50.0), dev(1, 2.0, 50.0)];
        for d in &mut ds {
            d.asleep = false;
        }
        assert!(benchmark_policy(&report(), &ds, &SignalPlan::group_for(2)).signals.is_empty());
    }

    #[test]
    fn dedicated_picks_the_nearest() {
        let ds = vec![dev(0, 2.0, 50.0), dev(1, 0.1, 50.0)];
        let d = benchmark_policy(&report(), &ds, &SignalPlan::dedicated());
        assert_eq!(d.signals, vec![WakeupSignal { target: SignalTarget::Dedicated(1), issue_slot: 7 }]);
    }

    #[test]
    fn group_of_ten_for_hundred_devices() {
        let ds: Vec<_> = (0..100).map(|i| dev(i, i as f64 * 0.01, 50.0)).collect();
        let d = benchmark_policy(&report(), &ds, &SignalPlan::group_for(100));
        assert_eq!(d.signals[0].devices(), &(0..10).collect::<Vec<_>>()[..]);
    }

    #[test]
    fn untrained_intelligent_equals_benchmark() {
        let ds: Vec<_> = (0..30).map(|i| dev(i, (i * 7 % 11) as f64, (i % 4) as f64)).collect();
        let knn = KnnPredictor::new(5, 100).unwrap();
        let e = EnergyModel::default();
        for plan in [SignalPlan::dedicated(), SignalPlan::group_for(30)] {
            assert_eq!(intelligent_policy(&report(), &ds, &knn, &e, &plan, 3), benchmark_policy(&report(), &ds, &plan));
        }
    }

    #[test]
    fn infeasible_devices_are_skipped() {
        let ds = vec![dev(0, 0.5, 2.0), dev(1, 1.0, 0.0)];
        let d =
            intelligent_policy(&report(), &ds, &Constant(1.0), &EnergyModel::default(), &SignalPlan::group_for(4), 3);
        assert!(d.signals.is_empty());
    }

    #[test]
    fn far_full_device_beats_near_empty_one() {
        // Trained so that low battery means failure regardless of distance.
        let mut knn = KnnPredictor::new(3, 100).unwrap();
        for i in 0..20 {
            let d = f64::from(i % 5);
            knn.train(Features { distance: d, predicted_battery: 2.0, slots_since_activity: 10.0 }, false);
            knn.train(Features { distance: d, predicted_battery: 90.0, slots_since_activity: 10.0 }, true);
        }
        let mut near = dev(0, 0.2, 3.0);
        let mut far = dev(1, 3.0, 95.0);
        near.slots_since_activity = 10;
        far.slots_since_activity = 10;
        let ds = vec![near.clone(), far.clone()];
        let e = EnergyModel::default();
        let d = intelligent_policy(&report(), &ds, &knn, &e, &SignalPlan::dedicated(), 3);
        // oracle: score both directly and take the argmax
        let est = report().epicenter_estimate;
        let s_near = knn.knn_score(&near.features(&est)).unwrap();
        let s_far = knn.knn_score(&far.features(&est)).unwrap();
        assert!(s_far > s_near);
        assert_eq!(d.signals[0].target, SignalTarget::Dedicated(1));
    }

    #[test]
    fn controller_hysteresis() {
        let plan =
            DutyCyclePlan::new(DutyCycle::new(1, 2).unwrap(), DutyCycle::new(1, 16).unwrap(), 20.0, 40.0).unwrap();
        let changes = plan_duty_cycles(
            &plan,
            [
                (0, DutyState::Nominal, 10.0),
                (1, DutyState::Nominal, 30.0),
                (2, DutyState::Conserve, 30.0),
                (3, DutyState::Conserve, 41.0),
            ],
        );
        assert_eq!(changes, BTreeMap::from([(0, DutyState::Conserve), (3, DutyState::Nominal)]));
        assert!(DutyCyclePlan::new(plan.nominal, plan.conserve, 50.0, 40.0).is_none());
    }

    fn summaries() -> impl Strategy<Value = Vec<DeviceSummary>> {
        prop::collection::vec((0.0f64..10.0, 0.0f64..10.0, 0.0f64..100.0, any::<bool>(), any::<bool>()), 1..60)
            .prop_map(|v| {
                v.into_iter()
                    .enumerate()
                    .map(|(id, (x, y, b, asleep, wur))| DeviceSummary {
                        id,
                        position: Point::new(x, y),
                        asleep,
                        has_wur: wur,
                        engaged: false,
                        predicted_battery: b,
                        slots_since_activity: id as u64,
                    })
                    .collect()
            })
    }

    proptest! {
        #[test]
        fn group_size_is_exact_when_enough_sleepers(ds in summaries()) {
            let plan = SignalPlan::group_for(ds.len());
            let d = benchmark_policy(&report(), &ds, &plan);
            let eligible = ds.iter().filter(|d| d.eligible()).count();
            let sent = d.targets().count();
            prop_assert_eq!(sent, eligible.min(plan.targets_per_signal()));
            for id in d.targets() {
                prop_assert!(ds[id].eligible());
            }
        }

        #[test]
        fn intelligent_respects_the_energy_floor(ds in summaries(), score in 0.0f64..=1.0) {
            let e = EnergyModel::default();
            let d = intelligent_policy(&report(), &ds, &Constant(score), &e, &SignalPlan::group_for(ds.len()), 3);
            for id in d.targets() {
                prop_assert!(ds[id].eligible());
                prop_assert!(ds[id].predicted_battery >= f64::from(e.cost_sense() + e.cost_tx()));
            }
        }

        #[test]
        fn constant_score_reduces_to_spatial_ranking(mut ds in summaries()) {
            for d in &mut ds {
                d.predicted_battery = 100.0;
            }
            let e = EnergyModel::default();
            for plan in [SignalPlan::dedicated(), SignalPlan::group_for(ds.len())] {
                let a = intelligent_policy(&report(), &ds, &Constant(1.0), &e, &plan, 3);
                prop_assert_eq!(a, benchmark_policy(&report(), &ds, &plan));
            }
        }
    }
}
