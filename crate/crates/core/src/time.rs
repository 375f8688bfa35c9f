//! Fixed-point simulation clock.
//!
//! Time is kept as an integer count of micro-units (10⁻⁶ time-units). The
//! trace format prints times with six decimals, so every instant the engine
//! produces is exactly representable in the trace and metrics recomputed from
//! a trace file match the live ones bit for bit.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Sub};
use std::str::FromStr;

/// Ticks per time-unit.
pub const TICKS_PER_UNIT: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SimTime(u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);
    pub const MAX: SimTime = SimTime(u64::MAX);

    pub const fn from_ticks(ticks: u64) -> Self {
        SimTime(ticks)
    }

    pub const fn ticks(self) -> u64 {
        self.0
    }

    /// Rounds a non-negative time-unit quantity to the nearest tick.
    ///
    /// Returns `None` for negative, non-finite or out-of-range inputs.
    pub fn from_units(units: f64) -> Option<Self> {
        if !units.is_finite() || units < 0.0 {
            return None;
        }
        let ticks = (units * TICKS_PER_UNIT as f64).round();
        if ticks >= u64::MAX as f64 {
            return None;
        }
        Some(SimTime(ticks as u64))
    }

    pub fn as_units(self) -> f64 {
        self.0 as f64 / TICKS_PER_UNIT as f64
    }

    pub fn saturating_add(self, rhs: SimTime) -> SimTime {
        SimTime(self.0.saturating_add(rhs.0))
    }
}

impl Add for SimTime {
    type Output = SimTime;
    fn add(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 + rhs.0)
    }
}

impl AddAssign for SimTime {
    fn add_assign(&mut self, rhs: SimTime) {
        self.0 += rhs.0;
    }
}

impl Sub for SimTime {
    type Output = SimTime;
    fn sub(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 - rhs.0)
    }
}

impl Mul<u64> for SimTime {
    type Output = SimTime;
    fn mul(self, rhs: u64) -> SimTime {
        SimTime(self.0 * rhs)
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:06}", self.0 / TICKS_PER_UNIT, self.0 % TICKS_PER_UNIT)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid time literal `{0}`: expected <int>.<6 digits>")]
pub struct ParseTimeError(String);

impl FromStr for SimTime {
    type Err = ParseTimeError;

    /// Parses the canonical trace form `<int>.<6 digits>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseTimeError(s.to_string());
        let (whole, frac) = s.split_once('.').ok_or_else(err)?;
        if whole.is_empty()
            || frac.len() != 6
            || !whole.bytes().all(|b| b.is_ascii_digit())
            || !frac.bytes().all(|b| b.is_ascii_digit())
        {
            return Err(err());
        }
        // Reject leading zeros so the text form stays canonical.
        if whole.len() > 1 && whole.starts_with('0') {
            return Err(err());
        }
        let whole: u64 = whole.parse().map_err(|_| err())?;
        let frac: u64 = frac.parse().map_err(|_| err())?;
        whole.checked_mul(TICKS_PER_UNIT).and_then(|w| w.checked_add(frac)).map(SimTime).ok_or_else(err)
    }
}
