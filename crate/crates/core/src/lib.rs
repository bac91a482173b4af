//! Slotted Monte Carlo simulator for wake-up-radio event reporting in
//! industrial sensor networks.
//!
//! Devices harvest energy, duty-cycle their sensors and report events
//! whose detection probability decays as `e^{−d}` with distance. The base
//! station can wake sleeping devices through a wake-up radio, choosing
//! targets either by proximity alone or with a kNN estimate of each
//! device's chance to report before the deadline.
//!
//! ```
//! use iwcn_core::sim::{run, Scenario};
//!
//! let mut s = Scenario::default();
//! s.devices = 25;
//! s.horizon = 20_000;
//! s.replications = 2;
//! let r = run(&s).unwrap();
//! assert!(r.events > 0);
//! ```

pub mod config;
pub mod energy;
pub mod mac;
pub mod report;
pub mod sim;
pub mod spatial;

pub use iwcn_dependability as dependability;

/// `⌈√n⌉`, exact for every `usize`.
pub fn ceil_sqrt(n: usize) -> usize {
    if n == 0 {
        return 0;
    }
    let mut r = (n as f64).sqrt() as usize;
    while r.saturating_mul(r) < n {
        r += 1;
    }
    while r > 1 && (r - 1).saturating_mul(r - 1) >= n {
        r -= 1;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::ceil_sqrt;

    #[test]
    fn ceil_sqrt_small_values() {
        let expect = [0, 1, 2, 2, 2, 3, 3, 3, 3, 3, 4];
        for (n, &e) in expect.iter().enumerate() {
            assert_eq!(ceil_sqrt(n), e, "n = {n}");
        }
        assert_eq!(ceil_sqrt(100), 10);
        assert_eq!(ceil_sqrt(101), 11);
        assert_eq!(ceil_sqrt(usize::MAX), 1 << (usize::BITS / 2));
    }
}
