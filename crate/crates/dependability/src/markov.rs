//! Continuous-time Markov availability models.
//!
//! States are flagged operational or failed; availability is the
//! probability mass on operational states. The steady state solves the
//! balance equations directly. Transient distributions use uniformization:
//! with `Λ ≥ max_i |q_ii|` and `P = I + Q/Λ`,
//!
//! ```text
//! π(t) = Σ_n  e^{−Λt} (Λt)^n / n!  ·  π(0) Pⁿ
//! ```
//!
//! truncated once the Poisson tail bound drops below the requested error.
//! Long horizons are split into chunks with `Λ·h ≤ 32` so the leading
//! Poisson weight never underflows.

#![allow(clippy::needless_range_loop)]

use crate::{DependabilityError, Result};

/// Total-variation error budget for transient solutions.
pub const TRANSIENT_TOLERANCE: f64 = 1e-10;
/// Max-norm residual accepted for the balance equations (relative to the
/// largest exit rate).
pub const STEADY_STATE_RESIDUAL: f64 = 1e-10;

const MAX_CHUNK_RATE_TIME: f64 = 32.0;

#[derive(Debug, Clone, PartialEq)]
pub struct MarkovState {
    pub label: String,
    pub operational: bool,
}

impl MarkovState {
    pub fn up(label: impl Into<String>) -> Self {
        Self { label: label.into(), operational: true }
    }

    pub fn down(label: impl Into<String>) -> Self {
        Self { label: label.into(), operational: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarkovAvailabilityModel {
    states: Vec<MarkovState>,
    /// Off-diagonal transition rates, row = from, column = to.
    rates: Vec<Vec<f64>>,
    initial: Vec<f64>,
}

/// A distribution over states and the availability it implies.
#[derive(Debug, Clone, PartialEq)]
pub struct StateDistribution {
    pub probabilities: Vec<f64>,
    pub availability: f64,
}

impl MarkovAvailabilityModel {
    pub fn new(states: Vec<MarkovState>, rates: Vec<Vec<f64>>, initial: Vec<f64>) -> Result<Self> {
        let n = states.len();
        let bad = |msg: String| Err(DependabilityError::MalformedMarkov(msg));
        if !states.iter().any(|s| s.operational) || states.iter().all(|s| s.operational) {
            return bad("need at least one operational and one failed state".into());
        }
        if rates.len() != n || rates.iter().any(|r| r.len() != n) {
            return bad(format!("rate matrix must be {n}x{n}"));
        }
        for (i, row) in rates.iter().enumerate() {
            for (j, &r) in row.iter().enumerate() {
                if i == j && r != 0.0 {
                    return bad(format!("diagonal rate for `{}` must be zero", states[i].label));
                }
                if !(r.is_finite() && r >= 0.0) {
                    return bad(format!(
                        "rate {} -> {} must be finite and >= 0, got {r}",
                        states[i].label, states[j].label
                    ));
                }
            }
        }
        if initial.len() != n || initial.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return bad("initial vector must hold one probability per state".into());
        }
        let total: f64 = initial.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return bad(format!("initial vector sums to {total}, not 1"));
        }
        Ok(Self { states, rates, initial })
    }

    /// Single item with exponential failure (`fail_rate`) and repair
    /// (`repair_rate`), starting operational.
    pub fn two_state(fail_rate: f64, repair_rate: f64) -> Result<Self> {
        Self::new(
            vec![MarkovState::up("up"), MarkovState::down("down")],
            vec![vec![0.0, fail_rate], vec![repair_rate, 0.0]],
            vec![1.0, 0.0],
        )
    }

    pub fn states(&self) -> &[MarkovState] {
        &self.states
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    fn exit_rate(&self, i: usize) -> f64 {
        self.rates[i].iter().sum()
    }

    fn availability_of(&self, pi: &[f64]) -> f64 {
        self.states.iter().zip(pi).filter(|(s, _)| s.operational).map(|(_, p)| p).sum::<f64>().clamp(0.0, 1.0)
    }

    fn distribution(&self, probabilities: Vec<f64>) -> StateDistribution {
        let availability = self.availability_of(&probabilities);
        StateDistribution { probabilities, availability }
    }

    /// Index of a state not mutually reachable with state 0, if any.
    fn unreachable_state(&self) -> Option<usize> {
        let n = self.states.len();
        let reach = |forward: bool| {
            let mut seen = vec![false; n];
            let mut stack = vec![0];
            seen[0] = true;
            while let Some(i) = stack.pop() {
                for j in 0..n {
                    let r = if forward { self.rates[i][j] } else { self.rates[j][i] };
                    if r > 0.0 && !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
            seen
        };
        let (fw, bw) = (reach(true), reach(false));
        (0..n).find(|&i| !(fw[i] && bw[i]))
    }
}

/// Long-run state distribution of an irreducible chain.
pub fn markov_steady_state(model: &MarkovAvailabilityModel) -> Result<StateDistribution> {
    if let Some(i) = model.unreachable_state() {
        return Err(DependabilityError::Reducible(model.states[i].label.clone()));
    }
    let n = model.states.len();
    // πQ = 0 written as Qᵀπᵀ = 0, last equation replaced by Σπ = 1.
    let mut a = vec![vec![0.0; n + 1]; n];
    for (i, row) in a.iter_mut().enumerate().take(n - 1) {
        for j in 0..n {
            row[j] = if i == j { -model.exit_rate(j) } else { model.rates[j][i] };
        }
    }
    for j in 0..n {
        a[n - 1][j] = 1.0;
    }
    a[n - 1][n] = 1.0;
    let mut pi = solve_augmented(a).ok_or(DependabilityError::NonConvergence(f64::NAN))?;

    for p in &mut pi {
        if *p < 0.0 {
            *p = 0.0;
        }
    }
    let total: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|p| *p /= total);

    let scale = (0..n).map(|i| model.exit_rate(i)).fold(1.0, f64::max);
    let residual = (0..n)
        .map(|j| {
            let inflow: f64 = (0..n).map(|i| pi[i] * model.rates[i][j]).sum();
            (inflow - pi[j] * model.exit_rate(j)).abs()
        })
        .fold(0.0, f64::max)
        / scale;
    if residual.is_nan() || residual >= STEADY_STATE_RESIDUAL {
        return Err(DependabilityError::NonConvergence(residual));
    }
    Ok(model.distribution(pi))
}

/// Gaussian elimination with partial pivoting on an `n × (n+1)` system.
fn solve_augmented(mut a: Vec<Vec<f64>>) -> Option<Vec<f64>> {
    let n = a.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for k in col..=n {
                    a[row][k] -= f * a[col][k];
                }
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| a[i][k] * x[k]).sum();
        x[i] = (a[i][n] - s) / a[i][i];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// State distribution at time `t` starting from the model's initial vector.
pub fn markov_transient(model: &MarkovAvailabilityModel, t: f64) -> Result<StateDistribution> {
    if t.is_nan() || t < 0.0 {
        return Err(DependabilityError::NegativeTime(t));
    }
    let n = model.states.len();
    let lambda = (0..n).map(|i| model.exit_rate(i)).fold(0.0, f64::max);
    if t == 0.0 || lambda == 0.0 {
        return Ok(model.distribution(model.initial.clone()));
    }
    if !t.is_finite() {
        return markov_steady_state(model);
    }

    // P = I + Q/Λ
    let p: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { 1.0 - model.exit_rate(i) / lambda } else { model.rates[i][j] / lambda })
                .collect()
        })
        .collect();

    let chunks = (lambda * t / MAX_CHUNK_RATE_TIME).ceil().max(1.0);
    let h = t / chunks;
    let chunks = chunks as u64;
    let eps = TRANSIENT_TOLERANCE / chunks as f64;

    let mut pi = model.initial.clone();
    for _ in 0..chunks {
        let next = uniformized_step(&pi, &p, lambda * h, eps);
        let moved: f64 = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum();
        pi = next;
        if moved < 1e-16 {
            // stationary to machine precision; further chunks change nothing
            break;
        }
    }
    let total: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|x| *x /= total);
    Ok(model.distribution(pi))
}

fn uniformized_step(pi0: &[f64], p: &[Vec<f64>], rate_time: f64, eps: f64) -> Vec<f64> {
    let n = pi0.len();
    let mut weight = (-rate_time).exp();
    let mut term = pi0.to_vec();
    let mut acc: Vec<f64> = term.iter().map(|x| x * weight).collect();
    let mut k = 0u64;
    loop {
        k += 1;
        let mut next = vec![0.0; n];
        for (i, &ti) in term.iter().enumerate() {
            if ti != 0.0 {
                for j in 0..n {
                    next[j] += ti * p[i][j];
                }
            }
        }
        term = next;
        weight *= rate_time / k as f64;
        for (a, x) in acc.iter_mut().zip(&term) {
            *a += weight * x;
        }
        // Past the mode the Poisson tail is bounded by a geometric series.
        let ratio = rate_time / (k + 1) as f64;
        if ratio < 1.0 && weight * ratio / (1.0 - ratio) <= eps {
            return acc;
        }
    }
}
