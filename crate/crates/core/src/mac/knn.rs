//! k-nearest-neighbour estimate of a device's chance to report in time.

#![allow(clippy::needless_range_loop)]

use std::collections::VecDeque;

use super::MacError;

/// Query point for the predictor, in the order the model stores them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Features {
    /// Distance from the device to the estimated epicenter.
    pub distance: f64,
    /// Battery level predicted by the base station.
    pub predicted_battery: f64,
    /// Slots since the base station last heard from or woke the device.
    pub slots_since_activity: f64,
}

impl Features {
    fn to_array(self) -> [f64; 3] {
        [self.distance, self.predicted_battery, self.slots_since_activity]
    }
}

/// Anything that maps features to a probability of a timely report.
pub trait SuccessScorer {
    /// Whether scores can be produced yet.
    fn ready(&self) -> bool;

    /// One score in `[0, 1]` per query. Only called when [`ready`](Self::ready).
    fn score_batch(&self, queries: &[Features]) -> Vec<f64>;
}

/// Sliding-window kNN classifier over three standardized features.
///
/// Distances are Euclidean after dividing every feature by its standard
/// deviation over the current window. Equal distances are resolved in
/// favour of the older sample, which keeps scores reproducible.
#[derive(Debug, Clone)]
pub struct KnnPredictor {
    k: usize,
    window: usize,
    points: VecDeque<[f64; 3]>,
    labels: VecDeque<bool>,
    next_index: u64,
    sum: [f64; 3],
    sum_sq: [f64; 3],
    since_refresh: usize,
}

impl KnnPredictor {
    pub fn new(k: usize, window: usize) -> Result<Self, MacError> {
        if k == 0 || window < k {
            return Err(MacError::InvalidPredictor(format!("need 1 <= k <= window, got k = {k}, window = {window}")));
        }
        Ok(Self {
            k,
            window,
            points: VecDeque::with_capacity(window),
            labels: VecDeque::with_capacity(window),
            next_index: 0,
            sum: [0.0; 3],
            sum_sq: [0.0; 3],
            since_refresh: 0,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn is_trained(&self) -> bool {
        self.points.len() >= self.k
    }

    /// Adds a labelled sample, evicting the oldest once the window is full.
    pub fn train(&mut self, features: Features, reported_in_time: bool) {
        if self.points.len() == self.window {
            let old = self.points.pop_front().expect("window is non-empty");
            self.labels.pop_front();
            for j in 0..3 {
                self.sum[j] -= old[j];
                self.sum_sq[j] -= old[j] * old[j];
            }
        }
        let x = features.to_array();
        for j in 0..3 {
            self.sum[j] += x[j];
            self.sum_sq[j] += x[j] * x[j];
        }
        self.points.push_back(x);
        self.labels.push_back(reported_in_time);
        self.next_index += 1;
        self.since_refresh += 1;
        if self.since_refresh >= self.window {
            self.refresh_stats();
        }
    }

    /// Recomputes the running sums exactly so rounding cannot accumulate.
    fn refresh_stats(&mut self) {
        self.sum = [0.0; 3];
        self.sum_sq = [0.0; 3];
        for x in &self.points {
            for j in 0..3 {
                self.sum[j] += x[j];
                self.sum_sq[j] += x[j] * x[j];
            }
        }
        self.since_refresh = 0;
    }

    /// Per-feature `1/σ`; constant features get weight 1.
    fn inverse_scales(&self) -> [f64; 3] {
        let n = self.points.len() as f64;
        let mut w = [1.0; 3];
        for j in 0..3 {
            let mean = self.sum[j] / n;
            let var = (self.sum_sq[j] / n - mean * mean).max(0.0);
            let sd = var.sqrt();
            if sd.is_finite() && sd > 1e-12 {
                w[j] = 1.0 / sd;
            }
        }
        w
    }

    /// Fraction of the `k` nearest samples labelled "reported in time".
    pub fn knn_score(&self, features: &Features) -> Result<f64, MacError> {
        if !self.is_trained() {
            return Err(MacError::Untrained { have: self.points.len(), k: self.k });
        }
        Ok(self.score_one(features.to_array(), &self.inverse_scales()))
    }

    fn score_one(&self, q: [f64; 3], w: &[f64; 3]) -> f64 {
        let k = self.k;
        // (squared distance, position in window); position order == age order
        let mut best: Vec<(f64, usize)> = Vec::with_capacity(k + 1);
        let q = [q[0] * w[0], q[1] * w[1], q[2] * w[2]];
        let mut worst = f64::INFINITY;
        for (pos, x) in self.points.iter().enumerate() {
            let d0 = x[0] * w[0] - q[0];
            let d1 = x[1] * w[1] - q[1];
            let d2 = x[2] * w[2] - q[2];
            let d = d0 * d0 + d1 * d1 + d2 * d2;
            // later samples never displace earlier ones at equal distance
            if best.len() < k || d < worst {
                let at = best.partition_point(|&(bd, _)| bd <= d);
                best.insert(at, (d, pos));
                best.truncate(k);
                worst = if best.len() == k { best[k - 1].0 } else { f64::INFINITY };
            }
        }
        let hits = best.iter().filter(|&&(_, pos)| self.labels[pos]).count();
        hits as f64 / k as f64
    }
}

impl SuccessScorer for KnnPredictor {
    fn ready(&self) -> bool {
        self.is_trained()
    }

    fn score_batch(&self, queries: &[Features]) -> Vec<f64> {
        let w = self.inverse_scales();
        queries.iter().map(|q| self.score_one(q.to_array(), &w)).collect()
    }
}
