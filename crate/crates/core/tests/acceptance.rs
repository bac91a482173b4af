//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Every oracle here is computed independently of the library code it
//! checks (exhaustive enumeration, closed forms, quadrature, Monte Carlo).

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::Instant;

use iwcn_core::dependability::{
    frer_delivery, fta_top_event, markov_steady_state, markov_transient, rbd_reliability, rbd_to_fault_tree, Block,
    DelayedPath, FailureModel, MarkovAvailabilityModel, RedundantPathSet, StructureModel,
};
use iwcn_core::energy::{step_energy, Action, ActionSet, Device, DutyCycle, EnergyModel};
use iwcn_core::mac::WusMode;
use iwcn_core::report::write_sweep_csv;
use iwcn_core::sim::{run, sweep, Execution, PolicyKind, RunResult, Scenario};
use iwcn_core::spatial::Point;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

// ---------------------------------------------------------------- Fig. 5

struct Fig5 {
    n_values: Vec<usize>,
    cells: BTreeMap<(usize, PolicyKind, WusMode), RunResult>,
}

fn fig5_runs() -> Fig5 {
    let base = Scenario::default();
    let n_values = iwcn_core::config::DEFAULT_N_VALUES.to_vec();
    let mut cells = BTreeMap::new();
    for &n in &n_values {
        let mut wanted = vec![(PolicyKind::Intelligent, WusMode::Group), (PolicyKind::Intelligent, WusMode::Dedicated)];
        if (25..=200).contains(&n) {
            wanted.push((PolicyKind::Benchmark, WusMode::Group));
        }
        for (policy, mode) in wanted {
            let s = Scenario { devices: n, policy, wus_mode: mode, ..base.clone() };
            let r = run(&s).expect("default scenario runs");
            eprintln!(
                "  N={n:<4} {:<11} {:<9} p={:.4e} CI=[{:.4e}, {:.4e}] events={}",
                policy.as_str(),
                mode.as_str(),
                r.detection_probability,
                r.ci95_lo,
                r.ci95_hi,
                r.events
            );
            cells.insert((n, policy, mode), r);
        }
    }
    Fig5 { n_values, cells }
}

fn fig5_directional(f: &Fig5) -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;
    let ns = [25, 50, 100, 200];
    for n in ns {
        let i = &f.cells[&(n, PolicyKind::Intelligent, WusMode::Group)];
        let b = &f.cells[&(n, PolicyKind::Benchmark, WusMode::Group)];
        let ok = i.events >= 100_000 && b.events >= 100_000 && i.ci95_lo > b.ci95_hi;
        pass &= ok;
        if !ok {
            notes.push(format!("N={n}: intelligent CI lo {:.3e} vs benchmark CI hi {:.3e}", i.ci95_lo, b.ci95_hi));
        }
    }
    let i = &f.cells[&(200, PolicyKind::Intelligent, WusMode::Group)];
    let b = &f.cells[&(200, PolicyKind::Benchmark, WusMode::Group)];
    let ratio = i.detection_probability / b.detection_probability;
    pass &= ratio >= 10.0;
    notes.push(format!("ratio at N=200 = {ratio:.1}"));
    outcome(pass, notes.join("; "))
}

fn gap_trend(f: &Fig5) -> Outcome {
    // Each gap must be CI-separated (group CI entirely above dedicated CI)
    // and the point estimates must not decrease from one N to the next.
    let mut pass = true;
    let mut gaps = Vec::new();
    for &n in &f.n_values {
        let g = &f.cells[&(n, PolicyKind::Intelligent, WusMode::Group)];
        let d = &f.cells[&(n, PolicyKind::Intelligent, WusMode::Dedicated)];
        pass &= g.ci95_lo > d.ci95_hi;
        gaps.push((n, g.detection_probability - d.detection_probability));
    }
    pass &= gaps.windows(2).all(|w| w[1].1 >= w[0].1);
    let shown: Vec<String> = gaps.iter().map(|(n, g)| format!("{n}:{g:.4}")).collect();
    outcome(pass, format!("gaps {}", shown.join(" ")))
}

// ---------------------------------------------------------------- RBD

fn random_block(rng: &mut ChaCha8Rng, ids: &mut Vec<String>, budget: usize, depth: u32, allow_kofn: bool) -> Block {
    if budget == 1 || depth >= 4 || rng.random_bool(0.3) {
        // occasionally reuse an existing component to exercise sharing
        if !ids.is_empty() && rng.random_bool(0.1) {
            let pick = ids[rng.random_range(0..ids.len())].clone();
            return Block::Component(pick);
        }
        let id = format!("c{}", ids.len());
        ids.push(id.clone());
        return Block::Component(id);
    }
    let arity = rng.random_range(2..=budget.min(4));
    let mut remaining = budget;
    let mut children = Vec::with_capacity(arity);
    for i in 0..arity {
        let left = arity - i - 1;
        let share = if left == 0 { remaining } else { rng.random_range(1..=remaining - left) };
        remaining -= share;
        children.push(random_block(rng, ids, share, depth + 1, allow_kofn));
    }
    let kind = rng.random_range(0..if allow_kofn { 3 } else { 2 });
    match kind {
        0 => Block::Series(children),
        1 => Block::Parallel(children),
        _ => {
            let k = rng.random_range(1..=children.len());
            Block::KofN { k, children }
        }
    }
}

fn random_structure(rng: &mut ChaCha8Rng, allow_kofn: bool) -> (StructureModel, BTreeMap<String, f64>) {
    loop {
        let mut ids = Vec::new();
        let leaves = rng.random_range(1..=14);
        let root = random_block(rng, &mut ids, leaves, 0, allow_kofn);
        if ids.len() > 12 {
            continue;
        }
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        count_leaves(&root, &mut counts);
        let shared: Vec<String> = counts.iter().filter(|(_, &c)| c > 1).map(|(id, _)| id.clone()).collect();
        let model = StructureModel::with_shared(root, shared).expect("generated structure is valid");
        let probs = ids.into_iter().map(|id| (id, rng.random::<f64>())).collect();
        return (model, probs);
    }
}

fn count_leaves(b: &Block, counts: &mut BTreeMap<String, usize>) {
    match b {
        Block::Component(id) => *counts.entry(id.clone()).or_default() += 1,
        Block::Series(c) | Block::Parallel(c) | Block::KofN { children: c, .. } => {
            c.iter().for_each(|x| count_leaves(x, counts))
        }
    }
}

fn works(b: &Block, up: &BTreeMap<&str, bool>) -> bool {
    match b {
        Block::Component(id) => up[id.as_str()],
        Block::Series(c) => c.iter().all(|x| works(x, up)),
        Block::Parallel(c) => c.iter().any(|x| works(x, up)),
        Block::KofN { k, children } => children.iter().filter(|x| works(x, up)).count() >= *k,
    }
}

fn enumerate(model: &StructureModel, probs: &BTreeMap<String, f64>) -> f64 {
    let ids: Vec<&str> = probs.keys().map(String::as_str).collect();
    let mut total = 0.0;
    for mask in 0u32..(1 << ids.len()) {
        let mut weight = 1.0;
        let mut up = BTreeMap::new();
        for (i, id) in ids.iter().enumerate() {
            let on = mask >> i & 1 == 1;
            weight *= if on { probs[*id] } else { 1.0 - probs[*id] };
            up.insert(*id, on);
        }
        if works(model.root(), &up) {
            total += weight;
        }
    }
    total
}

fn rbd_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let (model, probs) = random_structure(&mut rng, true);
        let got = rbd_reliability(&model, &probs).expect("evaluates");
        worst = worst.max((got - enumerate(&model, &probs)).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(worst <= 1e-10 && secs <= 30.0, format!("max |err| = {worst:.2e}, {secs:.1} s"))
}

fn rbd_fta_duality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let (model, probs) = random_structure(&mut rng, false);
        assert!(model.is_kofn_free());
        let r = rbd_reliability(&model, &probs).expect("evaluates");
        let tree = rbd_to_fault_tree(&model, &probs).expect("converts");
        let q = fta_top_event(&tree).expect("evaluates");
        worst = worst.max((q + r - 1.0).abs());
    }
    outcome(worst <= 1e-12, format!("max |Q + R - 1| = {worst:.2e}"))
}

// ---------------------------------------------------------------- Markov

fn markov_closed_form() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0003);
    let mut worst_ss: f64 = 0.0;
    let mut worst_tr: f64 = 0.0;
    for _ in 0..100 {
        let lambda = 10f64.powf(rng.random_range(-3.0..2.0));
        let mu = 10f64.powf(rng.random_range(-3.0..2.0));
        let m = MarkovAvailabilityModel::two_state(lambda, mu).expect("valid rates");
        let a_inf = mu / (lambda + mu);
        let ss = markov_steady_state(&m).expect("irreducible");
        worst_ss = worst_ss.max((ss.availability - a_inf).abs());
        for scale in [0.0, 0.1, 1.0, 3.0, 10.0] {
            let t = scale / (lambda + mu) * rng.random_range(0.5..1.5);
            let exact = a_inf + lambda / (lambda + mu) * (-(lambda + mu) * t).exp();
            let got = markov_transient(&m, t).expect("solves");
            worst_tr = worst_tr.max((got.availability - exact).abs());
        }
    }
    outcome(
        worst_ss <= 1e-10 && worst_tr <= 1e-8,
        format!("steady max err {worst_ss:.2e}, transient max err {worst_tr:.2e}"),
    )
}

// ---------------------------------------------------------------- Weibull

/// Tanh-sinh quadrature on `[0, b]`; copes with integrable endpoint
/// singularities such as `t^{k−1}` for `k < 1`.
fn tanh_sinh(f: impl Fn(f64) -> f64, b: f64) -> f64 {
    let half = b / 2.0;
    let h = 1.0 / 64.0;
    let mut sum = 0.0;
    let n = (6.0 / h) as i64;
    for j in -n..=n {
        let t = j as f64 * h;
        let s = std::f64::consts::FRAC_PI_2 * t.sinh();
        let cosh_s = s.cosh();
        let w = std::f64::consts::FRAC_PI_2 * t.cosh() / (cosh_s * cosh_s);
        // distance from the nearer endpoint, computed without cancellation
        let tail = 1.0 / (s.abs().exp() * cosh_s);
        let x = if s < 0.0 { half * tail } else { b - half * tail };
        if x <= 0.0 || x >= b || w == 0.0 {
            continue;
        }
        sum += w * f(x);
    }
    sum * half * h
}

fn weibull_consistency() -> Outcome {
    let mut worst: f64 = 0.0;
    for k in [0.5, 0.8, 1.0, 1.5, 2.0, 3.5] {
        for eta in [0.5, 1.0, 10.0] {
            let m = FailureModel::new(k, eta).expect("valid");
            for t in [0.1, 1.0, 3.0, 10.0] {
                let integral = tanh_sinh(|x| m.hazard_at(x).expect("x > 0"), t);
                let got = m.reliability_at(t).expect("t >= 0");
                worst = worst.max((got - (-integral).exp()).abs());
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0004);
    let mut worst_mem: f64 = 0.0;
    for _ in 0..1000 {
        let m = FailureModel::new(1.0, rng.random_range(0.1..100.0)).expect("valid");
        let s = rng.random_range(0.0..50.0);
        let t = rng.random_range(0.0..50.0);
        let lhs = m.reliability_at(s + t).expect("ok");
        let rhs = m.reliability_at(s).expect("ok") * m.reliability_at(t).expect("ok");
        worst_mem = worst_mem.max((lhs - rhs).abs());
    }
    outcome(
        worst <= 1e-8 && worst_mem <= 1e-12,
        format!("quadrature max err {worst:.2e}, memoryless max err {worst_mem:.2e}"),
    )
}

// ---------------------------------------------------------------- FRER

fn frer_monte_carlo() -> Outcome {
    const DRAWS: u32 = 1_000_000;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0005);
    let mut worst_z: f64 = 0.0;
    for _ in 0..100 {
        let n_paths = rng.random_range(1..=4);
        let paths: Vec<DelayedPath> = (0..n_paths)
            .map(|_| {
                let len = rng.random_range(1..=6);
                let raw: Vec<f64> = (0..len).map(|_| rng.random::<f64>() + 0.01).collect();
                let total: f64 = raw.iter().sum();
                DelayedPath::new(rng.random(), raw.iter().map(|x| x / total).collect())
            })
            .collect();
        let deadline = rng.random_range(0..6);
        let set = RedundantPathSet::new(paths.clone()).expect("valid paths");
        let p = frer_delivery(&set, deadline);
        let mut hits = 0u32;
        for _ in 0..DRAWS {
            let delivered = paths.iter().any(|path| {
                if !rng.random_bool(path.delivery) {
                    return false;
                }
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut slot = path.delay.len() - 1;
                for (s, &q) in path.delay.iter().enumerate() {
                    acc += q;
                    if u < acc {
                        slot = s;
                        break;
                    }
                }
                slot <= deadline
            });
            hits += u32::from(delivered);
        }
        let est = f64::from(hits) / f64::from(DRAWS);
        let se = (p * (1.0 - p) / f64::from(DRAWS)).sqrt();
        let z = if se == 0.0 {
            if est == p {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (est - p).abs() / se
        };
        worst_z = worst_z.max(z);
    }
    outcome(worst_z <= 3.0, format!("max |analytic - MC| = {worst_z:.2} SE"))
}

// ---------------------------------------------------------------- determinism

fn determinism() -> Outcome {
    let base = Scenario { horizon: 20_000, warmup: 1_000, replications: 3, seed: 42, ..Scenario::default() };
    let csv = |exec| {
        let rows = sweep(&base, &[10, 30], exec).expect("sweep runs");
        let mut buf = Vec::new();
        write_sweep_csv(&rows, &mut buf).expect("in-memory write");
        buf
    };
    let a = csv(Execution::Parallel);
    let b = csv(Execution::Parallel);
    let c = csv(Execution::Sequential);
    let mut fixed = base.clone();
    fixed.epicenter = Some(Point::new(5.0, 5.0));
    let d1 = run(&fixed).expect("runs");
    let d2 = run(&fixed).expect("runs");
    outcome(
        a == b && a == c && d1.tally == d2.tally,
        format!("{} bytes, repeat/sequential identical: {}/{}", a.len(), a == b, a == c),
    )
}

// ---------------------------------------------------------------- energy

fn energy_safety() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0006);
    let mut violations = 0u64;
    let mut steps = 0u64;
    for _ in 0..10_000 {
        let capacity = rng.random_range(1..=200u32);
        let costs: [u32; 3] = std::array::from_fn(|_| rng.random_range(0..=capacity.min(10)));
        let model = EnergyModel::new(capacity, rng.random(), costs[1], costs[2], costs[0]).expect("valid model");
        let mut dev = Device {
            id: 0,
            position: Point::default(),
            battery: rng.random_range(0..=capacity),
            duty: DutyCycle::new(1, 1).expect("valid"),
            phase_shift: 0,
            has_wur: true,
        };
        for _ in 0..rng.random_range(1..=200) {
            let chosen: Vec<Action> = Action::ORDER.into_iter().filter(|_| rng.random_bool(0.5)).collect();
            let before = dev.battery;
            let out = step_energy(&mut dev, ActionSet::of(&chosen), &model, &mut rng);
            steps += 1;
            let mut level = (before + u32::from(out.harvested)).min(capacity);
            for a in Action::ORDER {
                if out.executed.contains(a) {
                    if model.cost(a) > level {
                        violations += 1;
                    }
                    level = level.saturating_sub(model.cost(a));
                }
            }
            if dev.battery != level || dev.battery > capacity {
                violations += 1;
            }
        }
    }
    outcome(violations == 0, format!("{steps} steps over 10000 sequences, {violations} violations"))
}

type Check = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let checks: [Check; 7] = [
        ("rbd-oracle-equivalence", rbd_oracle),
        ("rbd-fta-duality", rbd_fta_duality),
        ("markov-closed-form", markov_closed_form),
        ("weibull-consistency", weibull_consistency),
        ("frer-vs-monte-carlo", frer_monte_carlo),
        ("sweep-determinism", determinism),
        ("energy-safety", energy_safety),
    ];
    let mut failed = 0;
    let mut report = |name: &str, o: Outcome| {
        println!("{} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    };
    for (name, check) in checks {
        report(name, check());
    }
    let start = Instant::now();
    let fig5 = fig5_runs();
    eprintln!("  Fig. 5 runs took {:.0} s", start.elapsed().as_secs_f64());
    report("fig5-directional", fig5_directional(&fig5));
    report("gap-widening-trend", gap_trend(&fig5));
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
