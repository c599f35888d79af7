use std::fmt::Debug;
use std::ops::{Add, Sub};

use num_rational::Rational64;
use num_traits::Zero;

/// Numeric type usable as a clock value.
///
/// Zones keep integer bounds; valuations may use any ordered field-like
/// type. `Rational64` is the exact runtime choice, `f64` is handy for
/// sampling, `i64` for integer grids.
pub trait ClockValue:
    Clone + Debug + PartialOrd + Zero + Add<Output = Self> + Sub<Output = Self>
{
    fn from_int(i: i64) -> Self;
}

macro_rules! impl_clock_value {
    ($($t:ty => $conv:expr),* $(,)?) => {
        $(
            impl ClockValue for $t {
                fn from_int(i: i64) -> Self {
                    $conv(i)
                }
            }
        )*
    };
}

impl_clock_value!(
    Rational64 => Rational64::from_integer,
    f64 => |i: i64| i as f64,
    i64 => |i: i64| i,
);

/// The set of delays `δ ≥ 0` keeping a point inside a convex set.
#[derive(Clone, Debug, PartialEq)]
pub struct DelayWindow<T> {
    pub lo: T,
    pub lo_strict: bool,
    /// `None` means unbounded.
    pub hi: Option<T>,
    pub hi_strict: bool,
}

impl<T: ClockValue> DelayWindow<T> {
    pub fn contains(&self, d: &T) -> bool {
        let above = if self.lo_strict { *d > self.lo } else { *d >= self.lo };
        let below = match &self.hi {
            None => true,
            Some(h) => {
                if self.hi_strict {
                    d < h
                } else {
                    d <= h
                }
            }
        };
        above && below
    }

    pub fn is_empty(&self) -> bool {
        match &self.hi {
            None => false,
            Some(h) => {
                if self.lo_strict || self.hi_strict {
                    *h <= self.lo
                } else {
                    *h < self.lo
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_membership() {
        let w = DelayWindow { lo: 1i64, lo_strict: true, hi: Some(3), hi_strict: false };
        assert!(!w.contains(&1));
        assert!(w.contains(&3));
        assert!(!w.is_empty());
        let point = DelayWindow { lo: 2i64, lo_strict: false, hi: Some(2), hi_strict: false };
        assert!(!point.is_empty());
        let open = DelayWindow { lo: 2i64, lo_strict: true, hi: Some(2), hi_strict: false };
        assert!(open.is_empty());
    }
}
