//! Integer-microsecond simulation clock.
//!
//! All simulation timestamps are unsigned microseconds from run start.
//! Using integers (not floats) keeps event ordering exact and traces
//! byte-identical across runs and platforms.

use std::fmt;
use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};

/// A point in simulated time, in microseconds since run start.
#[derive(
    Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize, Debug,
)]
#[serde(transparent)]
pub struct SimTime(u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);

    pub const fn from_us(us: u64) -> Self {
        SimTime(us)
    }

    pub const fn as_us(self) -> u64 {
        self.0
    }

    /// Microseconds elapsed since `earlier`.
    ///
    /// Panics if `earlier` is later than `self`; negative durations always
    /// indicate an event-ordering bug, which must abort loudly rather than
    /// wrap around.
    pub fn since(self, earlier: SimTime) -> u64 {
        match self.0.checked_sub(earlier.0) {
            Some(d) => d,
            None => panic!(
                "time went backwards: {} is earlier than {} (contract violation)",
                self.0, earlier.0
            ),
        }
    }

    pub fn max(self, other: SimTime) -> SimTime {
        SimTime(self.0.max(other.0))
    }
}

impl Add<u64> for SimTime {
    type Output = SimTime;

    fn add(self, us: u64) -> SimTime {
        SimTime(self.0 + us)
    }
}

impl AddAssign<u64> for SimTime {
    fn add_assign(&mut self, us: u64) {
        self.0 += us;
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}us", self.0)
    }
}
