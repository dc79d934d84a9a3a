//! Exact tick arithmetic for clocks that advance by a fixed increment.
//!
//! Readings on a tick grid are handled as integer tick counts; conversion to
//! time goes through `n / (1 / size)` when the inverse is integral so that,
//! e.g., 3 ticks of 0.1 give the double nearest to 0.3 rather than
//! `3.0 * 0.1`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("tick size must be positive and finite, got {0}")]
pub struct InvalidTickSize(pub f64);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct TickGrid {
    size: f64,
    per_unit: Option<f64>,
}

impl TickGrid {
    pub fn new(size: f64) -> Result<Self, InvalidTickSize> {
        if !(size > 0.0 && size.is_finite()) {
            return Err(InvalidTickSize(size));
        }
        let inv = 1.0 / size;
        let per_unit = if (inv - inv.round()).abs() <= 1e-9 * inv.max(1.0) && inv.round() >= 1.0 {
            Some(inv.round())
        } else {
            None
        };
        Ok(TickGrid { size, per_unit })
    }

    pub fn size(&self) -> f64 {
        self.size
    }

    pub fn to_time(&self, ticks: u64) -> f64 {
        match self.per_unit {
            Some(k) => ticks as f64 / k,
            None => ticks as f64 * self.size,
        }
    }

    /// Exact tick count of `t`, or `None` if `t` is not on the grid.
    pub fn to_ticks(&self, t: f64) -> Option<u64> {
        if !(t >= 0.0 && t.is_finite()) {
            return None;
        }
        let n = (t / self.size).round();
        if n > u64::MAX as f64 / 2.0 {
            return None;
        }
        let n = n as u64;
        let back = self.to_time(n);
        ((back - t).abs() <= 1e-9 * t.max(1.0)).then_some(n)
    }

    /// Nearest positive tick count for a duration (at least one tick).
    pub fn round_up_to_one(&self, d: f64) -> u64 {
        ((d / self.size).round() as u64).max(1)
    }
}

impl TryFrom<f64> for TickGrid {
    type Error = InvalidTickSize;
    fn try_from(v: f64) -> Result<Self, Self::Error> {
        TickGrid::new(v)
    }
}

impl From<TickGrid> for f64 {
    fn from(g: TickGrid) -> f64 {
        g.size
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimal_ticks_are_exact() {
        let g = TickGrid::new(0.1).unwrap();
        assert_eq!(g.to_time(3), 0.3);
        assert_eq!(g.to_time(7), 0.7);
        assert_eq!(g.to_ticks(0.3), Some(3));
        assert_eq!(g.to_ticks(0.1 + 0.2), Some(3));
        assert_eq!(g.to_ticks(0.25), None);
        assert_eq!(g.to_ticks(-0.1), None);
    }

    #[test]
    fn non_decimal_grid_falls_back_to_multiplication() {
        let g = TickGrid::new(0.3).unwrap();
        assert_eq!(g.to_ticks(g.to_time(5)), Some(5));
    }

    #[test]
    fn rounding_never_gives_zero_ticks() {
        let g = TickGrid::new(0.1).unwrap();
        assert_eq!(g.round_up_to_one(0.01), 1);
        assert_eq!(g.round_up_to_one(0.26), 3);
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(TickGrid::new(0.0).is_err());
        assert!(TickGrid::new(f64::NAN).is_err());
    }
}
