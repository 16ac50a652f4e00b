//! Request pacing and retry schedules, expressed over caller-supplied
//! millisecond timestamps so they can be driven by a real or a mock clock.

use alloc::collections::BTreeMap;
use alloc::string::String;

use serde::{Deserialize, Serialize};

/// Per-host request ceiling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateLimit {
    pub requests_per_second: f64,
}

impl Default for RateLimit {
    fn default() -> Self {
        Self {
            requests_per_second: 1.0,
        }
    }
}

impl RateLimit {
    /// Minimum spacing between two requests to one host, in milliseconds.
    /// A non-positive or non-finite rate disables pacing.
    pub fn interval_ms(&self) -> u64 {
        if self.requests_per_second.is_finite() && self.requests_per_second > 0.0 {
            libm::ceil(1000.0 / self.requests_per_second) as u64
        } else {
            0
        }
    }
}

/// Hands out request slots so that consecutive slots for one host are at
/// least `interval_ms` apart. Hosts are independent.
#[derive(Debug, Clone, Default)]
pub struct HostThrottle {
    interval_ms: u64,
    next_free: BTreeMap<String, u64>,
}

impl HostThrottle {
    pub fn new(limit: RateLimit) -> Self {
        Self {
            interval_ms: limit.interval_ms(),
            next_free: BTreeMap::new(),
        }
    }

    /// Reserves the earliest slot at or after `now_ms` and returns it.
    pub fn reserve(&mut self, host: &str, now_ms: u64) -> u64 {
        let slot = match self.next_free.get(host) {
            Some(&free) => free.max(now_ms),
            None => now_ms,
        };
        self.next_free
            .insert(String::from(host), slot.saturating_add(self.interval_ms));
        slot
    }
}

/// Bounded retries with exponential backoff.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub initial_backoff_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            attempts: 3,
            initial_backoff_ms: 1000,
        }
    }
}

impl RetryPolicy {
    /// Delay before `attempt` (1-based); the first attempt is immediate.
    pub fn backoff_before(&self, attempt: u32) -> u64 {
        if attempt <= 1 {
            0
        } else {
            self.initial_backoff_ms
                .saturating_mul(1u64 << (attempt - 2).min(32))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    #[test]
    fn default_limit_is_one_per_second() {
        assert_eq!(RateLimit::default().interval_ms(), 1000);
        assert_eq!(RateLimit { requests_per_second: 4.0 }.interval_ms(), 250);
        assert_eq!(RateLimit { requests_per_second: 0.0 }.interval_ms(), 0);
    }

    #[test]
    fn slots_for_one_host_are_spaced() {
        let mut throttle = HostThrottle::new(RateLimit::default());
        let slots: Vec<u64> = (0..5).map(|_| throttle.reserve("a.example", 0)).collect();
        assert_eq!(slots, [0, 1000, 2000, 3000, 4000]);
        // another host is not delayed
        assert_eq!(throttle.reserve("b.example", 10), 10);
        // idle host resumes at the current time
        assert_eq!(throttle.reserve("a.example", 9000), 9000);
    }

    #[test]
    fn backoff_doubles_from_one_second() {
        let policy = RetryPolicy::default();
        let delays: Vec<u64> = (1..=3).map(|a| policy.backoff_before(a)).collect();
        assert_eq!(delays, [0, 1000, 2000]);
    }
}
