//! Virtual time for the simulator.
//!
//! All timestamps and durations are integer microseconds of simulated time.
//! Nothing in the workspace reads the wall clock; every component that needs
//! "now" receives it explicitly, which is what makes runs replayable.

use std::fmt;
use std::ops::{Add, AddAssign, Sub};

use serde::{Deserialize, Serialize};

const MICROS_PER_SEC: u64 = 1_000_000;

/// A point on the virtual timeline, in microseconds since the run started.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct VirtualTime(pub u64);

/// A span of virtual time, in microseconds.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct VirtualDuration(pub u64);

impl VirtualTime {
    pub const ZERO: VirtualTime = VirtualTime(0);

    pub fn from_secs_f64(secs: f64) -> Self {
        debug_assert!(secs >= 0.0);
        VirtualTime((secs * MICROS_PER_SEC as f64).round() as u64)
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / MICROS_PER_SEC as f64
    }

    pub fn as_micros(self) -> u64 {
        self.0
    }

    /// Time elapsed since `earlier`, saturating at zero.
    pub fn since(self, earlier: VirtualTime) -> VirtualDuration {
        VirtualDuration(self.0.saturating_sub(earlier.0))
    }

    /// The next multiple of `interval` at or after this instant.
    ///
    /// Used to land reconciliation ticks on their fixed grid without
    /// simulating every intermediate no-op tick.
    pub fn next_multiple_of(self, interval: VirtualDuration) -> VirtualTime {
        assert!(interval.0 > 0, "interval must be positive");
        let rem = self.0 % interval.0;
        if rem == 0 {
            self
        } else {
            VirtualTime(self.0 - rem + interval.0)
        }
    }
}

impl VirtualDuration {
    pub const ZERO: VirtualDuration = VirtualDuration(0);

    pub fn from_secs_f64(secs: f64) -> Self {
        debug_assert!(secs >= 0.0);
        VirtualDuration((secs * MICROS_PER_SEC as f64).round() as u64)
    }

    pub fn from_secs(secs: u64) -> Self {
        VirtualDuration(secs * MICROS_PER_SEC)
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / MICROS_PER_SEC as f64
    }

    pub fn as_micros(self) -> u64 {
        self.0
    }
}

impl Add<VirtualDuration> for VirtualTime {
    type Output = VirtualTime;
    fn add(self, rhs: VirtualDuration) -> VirtualTime {
        VirtualTime(self.0 + rhs.0)
    }
}

impl AddAssign<VirtualDuration> for VirtualTime {
    fn add_assign(&mut self, rhs: VirtualDuration) {
        self.0 += rhs.0;
    }
}

impl Sub<VirtualTime> for VirtualTime {
    type Output = VirtualDuration;
    fn sub(self, rhs: VirtualTime) -> VirtualDuration {
        VirtualDuration(self.0.saturating_sub(rhs.0))
    }
}

impl Add for VirtualDuration {
    type Output = VirtualDuration;
    fn add(self, rhs: VirtualDuration) -> VirtualDuration {
        VirtualDuration(self.0 + rhs.0)
    }
}

impl fmt::Display for VirtualTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for VirtualDuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn secs_round_trip() {
        let t = VirtualTime::from_secs_f64(12.345678);
        assert_eq!(t.0, 12_345_678);
        assert!((t.as_secs_f64() - 12.345678).abs() < 1e-9);
    }

    #[test]
    fn next_multiple_lands_on_grid() {
        let tick = VirtualDuration::from_secs(10);
        assert_eq!(
            VirtualTime::from_secs_f64(0.0).next_multiple_of(tick),
            VirtualTime::ZERO
        );
        assert_eq!(
            VirtualTime::from_secs_f64(10.0).next_multiple_of(tick),
            VirtualTime::from_secs_f64(10.0)
        );
        assert_eq!(
            VirtualTime::from_secs_f64(10.000001).next_multiple_of(tick),
            VirtualTime::from_secs_f64(20.0)
        );
    }

    #[test]
    fn since_saturates() {
        let a = VirtualTime(5);
        let b = VirtualTime(9);
        assert_eq!(a.since(b), VirtualDuration::ZERO);
        assert_eq!(b.since(a), VirtualDuration(4));
    }
}
