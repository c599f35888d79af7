use std::cmp::Ordering;
use std::fmt;

/// A difference bound `(c, ≺)` with `≺ ∈ {<, ≤}`, or `∞`.
///
/// Encoded as `2c + 1` for `≤ c` and `2c` for `< c` so that the natural
/// integer order is the lexicographic bound order.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bound(i64);

impl Bound {
    pub const INF: Bound = Bound(i64::MAX);
    pub const LE_ZERO: Bound = Bound(1);
    pub const LT_ZERO: Bound = Bound(0);

    pub fn le(c: i64) -> Bound {
        Bound((c << 1) | 1)
    }

    pub fn lt(c: i64) -> Bound {
        Bound(c << 1)
    }

    pub fn new(c: i64, strict: bool) -> Bound {
        if strict {
            Bound::lt(c)
        } else {
            Bound::le(c)
        }
    }

    pub fn is_inf(self) -> bool {
        self == Bound::INF
    }

    pub fn constant(self) -> i64 {
        self.0 >> 1
    }

    pub fn is_strict(self) -> bool {
        self.0 & 1 == 0
    }

    pub fn raw(self) -> i64 {
        self.0
    }

    pub fn from_raw(raw: i64) -> Bound {
        Bound(raw)
    }

    pub fn add(self, other: Bound) -> Bound {
        if self.is_inf() || other.is_inf() {
            return Bound::INF;
        }
        Bound((((self.0 >> 1) + (other.0 >> 1)) << 1) | (self.0 & other.0 & 1))
    }

    /// Bound of the complementary constraint on the reversed difference:
    /// `¬(x - y ≤ c)` is `y - x < -c`.
    pub fn negate(self) -> Bound {
        debug_assert!(!self.is_inf());
        Bound(1 - self.0)
    }

    /// Whether `value ≺ c` holds.
    pub fn admits<T: PartialOrd>(self, value: &T, constant: &T) -> bool {
        if self.is_inf() {
            return true;
        }
        match value.partial_cmp(constant) {
            Some(Ordering::Less) => true,
            Some(Ordering::Equal) => !self.is_strict(),
            _ => false,
        }
    }

    /// Textual form used by the file formats: `<=3`, `<-2`, `inf`.
    pub fn to_text(self) -> String {
        if self.is_inf() {
            "inf".to_string()
        } else if self.is_strict() {
            format!("<{}", self.constant())
        } else {
            format!("<={}", self.constant())
        }
    }

    pub fn from_text(s: &str) -> Option<Bound> {
        let s = s.trim();
        if s == "inf" {
            Some(Bound::INF)
        } else if let Some(rest) = s.strip_prefix("<=") {
            rest.trim().parse().ok().map(Bound::le)
        } else if let Some(rest) = s.strip_prefix('<') {
            rest.trim().parse().ok().map(Bound::lt)
        } else {
            None
        }
    }
}

impl fmt::Debug for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordering_is_lexicographic() {
        assert!(Bound::lt(3) < Bound::le(3));
        assert!(Bound::le(2) < Bound::lt(3));
        assert!(Bound::le(-1) < Bound::LT_ZERO);
        assert!(Bound::le(1000) < Bound::INF);
    }

    #[test]
    fn addition_keeps_strictness_only_when_both_weak() {
        assert_eq!(Bound::le(2).add(Bound::le(3)), Bound::le(5));
        assert_eq!(Bound::le(2).add(Bound::lt(3)), Bound::lt(5));
        assert_eq!(Bound::lt(-2).add(Bound::lt(3)), Bound::lt(1));
        assert_eq!(Bound::INF.add(Bound::le(-4)), Bound::INF);
    }

    #[test]
    fn negation_flips() {
        assert_eq!(Bound::le(3).negate(), Bound::lt(-3));
        assert_eq!(Bound::lt(-2).negate(), Bound::le(2));
    }

    #[test]
    fn text_round_trip() {
        for b in [Bound::le(3), Bound::lt(-7), Bound::INF, Bound::LE_ZERO] {
            assert_eq!(Bound::from_text(&b.to_text()), Some(b));
        }
        assert_eq!(Bound::from_text("<=x"), None);
    }
}
