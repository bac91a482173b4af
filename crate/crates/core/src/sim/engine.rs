//! One replication: the slot loop.

use rand::distr::{Bernoulli, Distribution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::stats::Tally;
use super::{PolicyKind, Scenario, SimError};
use crate::energy::{duty_cycle_phase, predict_battery, step_energy, Action, ActionSet, Device, Phase};
use crate::mac::{
    benchmark_policy, detection_success, intelligent_policy, plan_duty_cycles, resolve_event_round, DeviceSummary,
    DutyState, EventReport, EventTimeline, Features, KnnPredictor, WakeOutcome,
};
use crate::spatial::{sample_activations, DevicePlacement, EventEpicenter, Point};

const STREAM_PLACEMENT: u64 = 0;
const STREAM_EVENTS: u64 = 1;
const STREAM_DEVICES: u64 = 2;
const STREAM_ACTIVATION: u64 = 3;

fn stream(seed: u64, rep: u64, purpose: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((rep << 2) | purpose);
    rng
}

/// Runs replication `rep` of `scenario`.
pub fn replicate(scenario: &Scenario, rep: u64) -> Result<Tally, SimError> {
    scenario.validate()?;
    let fixed = scenario.fixed_placement()?;
    Ok(replicate_inner(scenario, fixed.as_ref(), rep, None))
}

/// Like [`replicate`], also returning the timeline of every counted event.
pub fn replicate_with_timelines(scenario: &Scenario, rep: u64) -> Result<(Tally, Vec<EventTimeline>), SimError> {
    scenario.validate()?;
    let fixed = scenario.fixed_placement()?;
    let mut sink = Vec::new();
    let t = replicate_inner(scenario, fixed.as_ref(), rep, Some(&mut sink));
    Ok((t, sink))
}

/// Base-station bookkeeping for one device.
#[derive(Debug, Clone, Copy)]
struct Known {
    battery: f64,
    at: u64,
    activity: u64,
    state: DutyState,
}

struct PendingSample {
    device: usize,
    features: Features,
}

struct ActiveEvent {
    epicenter: EventEpicenter,
    timeline: EventTimeline,
    estimate: Option<Point>,
    engaged: Vec<usize>,
    samples: Vec<PendingSample>,
}

pub(super) fn replicate_inner(
    sc: &Scenario,
    fixed: Option<&DevicePlacement>,
    rep: u64,
    mut sink: Option<&mut Vec<EventTimeline>>,
) -> Tally {
    let n = sc.devices;
    let mut place_rng = stream(sc.seed, rep, STREAM_PLACEMENT);
    let mut event_rng = stream(sc.seed, rep, STREAM_EVENTS);
    let mut device_rng = stream(sc.seed, rep, STREAM_DEVICES);
    let mut act_rng = stream(sc.seed, rep, STREAM_ACTIVATION);

    let placement = match fixed {
        Some(p) => p.clone(),
        None => DevicePlacement::uniform(&sc.arena, n, &mut place_rng).expect("validated arena"),
    };
    let wur = Bernoulli::new(sc.wur_fraction).expect("validated fraction");
    let mut devices: Vec<Device> = placement
        .positions()
        .iter()
        .enumerate()
        .map(|(id, &position)| Device {
            id,
            position,
            battery: sc.energy.capacity(),
            duty: sc.duty,
            phase_shift: place_rng.random_range(0..1u32 << 16),
            has_wur: wur.sample(&mut place_rng),
        })
        .collect();
    let capacity = f64::from(sc.energy.capacity());
    let mut known = vec![Known { battery: capacity, at: 0, activity: 0, state: DutyState::Nominal }; n];

    let event_start = Bernoulli::new(sc.p_event).expect("validated p_event");
    let timing = sc.timing;
    let deadline = timing.deadline_slots();
    let rounds = timing.rounds_available();
    let plan = sc.signal_plan();
    let duty_plan = sc.duty_plan().expect("validated duty plan");
    let r_max = sc.arena.relevance_radius();
    let intelligent = sc.policy == PolicyKind::Intelligent;
    let mut knn = KnnPredictor::new(sc.knn_k, sc.knn_window).expect("validated predictor");

    let mut overrides: Vec<Option<ActionSet>> = vec![None; n];
    let mut touched: Vec<usize> = Vec::new();
    let mut woken: Vec<(usize, bool)> = Vec::new();
    // overridden devices that paid for every requested action this slot
    let mut paid: Vec<usize> = Vec::new();
    let mut active: Option<ActiveEvent> = None;
    let mut tally = Tally::default();

    let predicted = |d: &Device, k: &Known, slot: u64| {
        predict_battery(k.battery, slot - k.at, &sc.energy, d.duty.idle_cost(&sc.energy))
    };

    for slot in 0..sc.horizon {
        // event onset
        if active.is_none() && slot + deadline < sc.horizon && event_start.sample(&mut event_rng) {
            let pos = sc.epicenter.unwrap_or_else(|| sc.arena.sample_point(&mut event_rng));
            let epicenter = EventEpicenter::new(&sc.arena, pos, slot).expect("epicenter inside arena");
            let hit = sample_activations(
                &epicenter,
                &placement,
                |i| duty_cycle_phase(&devices[i], slot) == Phase::Active,
                &mut act_rng,
            );
            for i in hit {
                overrides[i] = Some(ActionSet::SENSE_AND_TRANSMIT);
                touched.push(i);
            }
            active = Some(ActiveEvent {
                epicenter,
                timeline: EventTimeline::new(slot),
                estimate: None,
                engaged: Vec::new(),
                samples: Vec::new(),
            });
        }

        // wake-up round requests
        let mut round_now = None;
        if let Some(ev) = active.as_mut() {
            let onset = ev.timeline.onset();
            if slot == timing.initial_report_slot(onset) {
                ev.estimate = Point::centroid(ev.timeline.spontaneous().iter().map(|&i| devices[i].position));
            }
            if let Some(est) = ev.estimate {
                if let Some(r) = (1..=rounds).find(|&r| timing.round_request_slot(onset, r) == slot) {
                    round_now = Some(r);
                    let summaries: Vec<DeviceSummary> = devices
                        .iter()
                        .zip(&known)
                        .map(|(d, k)| DeviceSummary {
                            id: d.id,
                            position: d.position,
                            asleep: duty_cycle_phase(d, slot) == Phase::Sleep,
                            has_wur: d.has_wur,
                            engaged: ev.engaged.contains(&d.id),
                            predicted_battery: predicted(d, k, slot),
                            slots_since_activity: slot - k.activity,
                        })
                        .collect();
                    let report = EventReport { epicenter_estimate: est, issue_slot: slot };
                    let decision = if intelligent {
                        intelligent_policy(&report, &summaries, &knn, &sc.energy, &plan, sc.candidate_factor)
                    } else {
                        benchmark_policy(&report, &summaries, &plan)
                    };
                    let center = ev.epicenter.position();
                    for signal in &decision.signals {
                        ev.timeline.record_signal(r, signal);
                        for &i in signal.devices() {
                            let relevant = devices[i].position.distance(&center) <= r_max;
                            let mut acts = ActionSet::of(&[Action::WakeupRx, Action::Sense]);
                            if relevant {
                                acts = acts.with(Action::Transmit);
                            }
                            overrides[i] = Some(acts);
                            touched.push(i);
                            woken.push((i, relevant));
                            ev.engaged.push(i);
                            ev.samples.push(PendingSample { device: i, features: summaries[i].features(&est) });
                            known[i].activity = slot;
                        }
                    }
                }
            }
        }

        // devices
        let counting = slot >= sc.warmup;
        for d in devices.iter_mut() {
            let acts = overrides[d.id].unwrap_or(if duty_cycle_phase(d, slot) == Phase::Active {
                ActionSet::SENSE
            } else {
                ActionSet::EMPTY
            });
            let out = step_energy(d, acts, &sc.energy, &mut device_rng);
            if overrides[d.id].is_some() && out.refused.is_empty() {
                paid.push(d.id);
                if out.executed.contains(Action::Transmit) {
                    // the report carries the current battery level
                    known[d.id].battery = f64::from(d.battery);
                    known[d.id].at = slot;
                    known[d.id].activity = slot;
                }
            }
            if counting && d.battery == 0 {
                tally.depleted_device_slots += 1;
            }
        }
        if counting {
            tally.device_slots += n as u64;
        }

        // collect this slot's reports
        if let Some(ev) = active.as_mut() {
            if let Some(r) = round_now {
                let outcomes: Vec<WakeOutcome> = woken
                    .iter()
                    .map(|&(i, relevant)| WakeOutcome {
                        device: i,
                        received: true,
                        relevant,
                        energy_ok: paid.contains(&i),
                    })
                    .collect();
                resolve_event_round(&mut ev.timeline, r, &outcomes, &timing);
            } else if slot == ev.timeline.onset() {
                let center = ev.epicenter.position();
                for &i in &paid {
                    let relevant = devices[i].position.distance(&center) <= r_max;
                    ev.timeline.add_spontaneous(i, relevant, &timing);
                    ev.engaged.push(i);
                }
            }
        }
        for &i in &touched {
            overrides[i] = None;
        }
        touched.clear();
        woken.clear();
        paid.clear();

        // deadline: score the event and learn from it
        if let Some(ev) = active.as_ref() {
            if slot == timing.deadline_slot(ev.timeline.onset()) {
                let ev = active.take().expect("checked above");
                let tl = ev.timeline;
                if tl.onset() >= sc.warmup {
                    tally.events += 1;
                    tally.successes += u64::from(detection_success(&tl, sc.k_req, &timing));
                    tally.relevant_reports += tl.relevant_in_time(&timing) as u64;
                }
                if intelligent {
                    for s in ev.samples {
                        let ok = tl.reports().iter().any(|r| r.device == s.device && r.relevant);
                        knn.train(s.features, ok);
                    }
                }
                if let Some(sink) = sink.as_deref_mut() {
                    if tl.onset() >= sc.warmup {
                        sink.push(tl);
                    }
                }
            }
        }

        // duty-cycle controller
        if intelligent && slot % sc.control_interval == 0 {
            let changes = plan_duty_cycles(
                &duty_plan,
                devices.iter().zip(&known).map(|(d, k)| (d.id, k.state, predicted(d, k, slot))),
            );
            for (i, state) in changes {
                let p = predicted(&devices[i], &known[i], slot);
                known[i] = Known { battery: p, at: slot, state, ..known[i] };
                devices[i].duty = duty_plan.duty(state);
            }
        }
    }
    tally
}
