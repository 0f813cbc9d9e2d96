//! Engine clocks: a deterministic virtual clock for tests, a monotonic one for production.

use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Duration, Instant};

/// Seconds to integer microseconds, rounding to the nearest tick.
pub fn to_micros(seconds: f64) -> i64 {
    (seconds * 1e6).round() as i64
}

pub fn from_micros(micros: i64) -> f64 {
    micros as f64 / 1e6
}

pub trait Clock: Send + Sync {
    /// Seconds since the clock's origin.
    fn now(&self) -> f64;

    /// Consumes compute time (operations call this for their own work).
    fn spend(&self, seconds: f64);

    /// Idles until `t`; returns immediately if `t` has passed.
    fn wait_until(&self, t: f64);

    fn is_virtual(&self) -> bool;
}

/// Time advances only through `spend` and `wait_until`, in whole microseconds.
#[derive(Debug, Default)]
pub struct VirtualClock {
    micros: AtomicU64,
}

impl VirtualClock {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn starting_at(seconds: f64) -> Self {
        Self {
            micros: AtomicU64::new(to_micros(seconds).max(0) as u64),
        }
    }

    pub fn micros(&self) -> u64 {
        self.micros.load(Ordering::SeqCst)
    }
}

impl Clock for VirtualClock {
    fn now(&self) -> f64 {
        self.micros() as f64 / 1e6
    }

    fn spend(&self, seconds: f64) {
        let delta = to_micros(seconds).max(0) as u64;
        self.micros.fetch_add(delta, Ordering::SeqCst);
    }

    fn wait_until(&self, t: f64) {
        let target = to_micros(t).max(0) as u64;
        self.micros.fetch_max(target, Ordering::SeqCst);
    }

    fn is_virtual(&self) -> bool {
        true
    }
}

/// Wall-clock time from `Instant`; `spend` busy-waits so it consumes CPU.
#[derive(Debug, Clone, Copy)]
pub struct MonotonicClock {
    origin: Instant,
}

impl MonotonicClock {
    pub fn new() -> Self {
        Self {
            origin: Instant::now(),
        }
    }
}

impl Default for MonotonicClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for MonotonicClock {
    fn now(&self) -> f64 {
        self.origin.elapsed().as_secs_f64()
    }

    fn spend(&self, seconds: f64) {
        if seconds <= 0.0 {
            return;
        }
        let until = Instant::now() + Duration::from_secs_f64(seconds);
        while Instant::now() < until {
            std::hint::spin_loop();
        }
    }

    fn wait_until(&self, t: f64) {
        let now = self.now();
        if t > now {
            std::thread::sleep(Duration::from_secs_f64(t - now));
        }
    }

    fn is_virtual(&self) -> bool {
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn virtual_clock_is_exact() {
        let c = VirtualClock::new();
        for _ in 0..7 {
            c.spend(0.01);
        }
        assert_eq!(c.micros(), 70_000);
        c.wait_until(10.07);
        assert_eq!(to_micros(c.now()) - 70_000, 10_000_000);
        c.wait_until(1.0);
        assert_eq!(c.micros(), 10_070_000);
    }

    #[test]
    fn monotonic_spend_takes_time() {
        let c = MonotonicClock::new();
        let t0 = c.now();
        c.spend(0.002);
        assert!(c.now() - t0 >= 0.002);
    }
}
