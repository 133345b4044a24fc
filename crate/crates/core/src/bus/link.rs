use crate::rng::{stream_rng2, STREAM_LINK};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkParams {
    /// One-way delay, ms. Calibration value; no source gives backplane figures.
    pub latency_ms: f64,
    /// Uniform additive delay in `[0, jitter_ms)`.
    pub jitter_ms: f64,
}

impl Default for LinkParams {
    fn default() -> Self {
        Self {
            latency_ms: 1.0,
            jitter_ms: 0.0,
        }
    }
}

impl LinkParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.latency_ms >= 0.0 && self.jitter_ms >= 0.0) || !self.latency_ms.is_finite() || !self.jitter_ms.is_finite() {
            return Err("link latency and jitter must be finite and non-negative".into());
        }
        Ok(())
    }
}

/// One direction of a point-to-point link. Times are simulated microseconds.
#[derive(Debug, Clone)]
pub struct Link {
    pub params: LinkParams,
    last_delivery: u64,
    rng: ChaCha8Rng,
}

impl Link {
    pub fn new(params: LinkParams, seed: u64, link_id: u64) -> Self {
        Self {
            params,
            last_delivery: 0,
            rng: stream_rng2(seed, STREAM_LINK, link_id),
        }
    }

    /// Delivery time of a frame sent at `now`. Ordinary frames never
    /// overtake earlier ones; E-stop frames are delivered immediately.
    pub fn deliver(&mut self, now: u64, estop: bool) -> u64 {
        if estop {
            return now;
        }
        let jitter = if self.params.jitter_ms > 0.0 {
            self.rng.random_range(0.0..self.params.jitter_ms)
        } else {
            0.0
        };
        let delay = ((self.params.latency_ms + jitter) * 1000.0).round() as u64;
        let at = (now + delay).max(self.last_delivery);
        self.last_delivery = at;
        at
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_link_is_instant() {
        let mut l = Link::new(
            LinkParams {
                latency_ms: 0.0,
                jitter_ms: 0.0,
            },
            1,
            0,
        );
        assert_eq!(l.deliver(5_000, false), 5_000);
    }

    #[test]
    fn estop_skips_latency() {
        let mut l = Link::new(
            LinkParams {
                latency_ms: 50.0,
                jitter_ms: 0.0,
            },
            1,
            0,
        );
        assert_eq!(l.deliver(1_000, false), 51_000);
        assert_eq!(l.deliver(2_000, true), 2_000);
    }

    #[test]
    fn jitter_never_reorders() {
        let mut l = Link::new(
            LinkParams {
                latency_ms: 1.0,
                jitter_ms: 5.0,
            },
            9,
            3,
        );
        let times: Vec<u64> = (0..1000).map(|i| l.deliver(i * 100, false)).collect();
        assert!(times.windows(2).all(|w| w[0] <= w[1]));
    }
}
