use std::fmt;

use serde::{Deserialize, Serialize};

use super::Bound;

/// Index of a clock in a difference-bound matrix; `0` is the reference clock.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ClockId(pub usize);

impl ClockId {
    pub const ZERO: ClockId = ClockId(0);

    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Rel {
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = ">")]
    Gt,
}

impl Rel {
    pub fn negate(self) -> Rel {
        match self {
            Rel::Lt => Rel::Ge,
            Rel::Le => Rel::Gt,
            Rel::Ge => Rel::Lt,
            Rel::Gt => Rel::Le,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Rel::Lt => "<",
            Rel::Le => "<=",
            Rel::Ge => ">=",
            Rel::Gt => ">",
        }
    }

    pub fn parse(s: &str) -> Option<Rel> {
        match s {
            "<" => Some(Rel::Lt),
            "<=" => Some(Rel::Le),
            ">=" => Some(Rel::Ge),
            ">" => Some(Rel::Gt),
            _ => None,
        }
    }
}

/// `clock - minus ⋈ bound`; `minus = None` compares against zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Constraint {
    pub clock: ClockId,
    pub minus: Option<ClockId>,
    pub rel: Rel,
    pub bound: i64,
}

impl Constraint {
    pub fn new(clock: ClockId, rel: Rel, bound: i64) -> Self {
        Constraint { clock, minus: None, rel, bound }
    }

    pub fn diagonal(clock: ClockId, minus: ClockId, rel: Rel, bound: i64) -> Self {
        Constraint { clock, minus: Some(minus), rel, bound }
    }

    /// Both halves of `clock == bound`.
    pub fn equal(clock: ClockId, bound: i64) -> [Constraint; 2] {
        [Constraint::new(clock, Rel::Le, bound), Constraint::new(clock, Rel::Ge, bound)]
    }

    pub fn is_diagonal(&self) -> bool {
        self.minus.is_some()
    }

    pub fn negate(&self) -> Constraint {
        Constraint { rel: self.rel.negate(), ..*self }
    }

    /// Upper bounds only mention the clock from above (`x < c`, `x <= c`).
    pub fn is_upper_bound(&self) -> bool {
        self.minus.is_none() && matches!(self.rel, Rel::Lt | Rel::Le)
    }

    /// The DBM cell `(row, col)` and bound this constraint tightens.
    pub fn entry(&self) -> (usize, usize, Bound) {
        let x = self.clock.0;
        let y = self.minus.map_or(0, |c| c.0);
        match self.rel {
            Rel::Lt => (x, y, Bound::lt(self.bound)),
            Rel::Le => (x, y, Bound::le(self.bound)),
            Rel::Ge => (y, x, Bound::le(-self.bound)),
            Rel::Gt => (y, x, Bound::lt(-self.bound)),
        }
    }

    /// Renumbers clocks by adding `offset` to every non-reference index.
    pub fn shifted(&self, offset: usize) -> Constraint {
        Constraint {
            clock: ClockId(self.clock.0 + offset),
            minus: self.minus.map(|m| ClockId(m.0 + offset)),
            ..*self
        }
    }

    pub fn max_constant(&self) -> i64 {
        self.bound.abs()
    }

    pub fn display<'a>(&'a self, names: &'a [String]) -> ConstraintDisplay<'a> {
        ConstraintDisplay { c: self, names }
    }
}

pub struct ConstraintDisplay<'a> {
    c: &'a Constraint,
    names: &'a [String],
}

fn clock_name(names: &[String], id: ClockId) -> String {
    names
        .get(id.0.wrapping_sub(1))
        .cloned()
        .unwrap_or_else(|| format!("x{}", id.0))
}

impl fmt::Display for ConstraintDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = self.c;
        write!(f, "{}", clock_name(self.names, c.clock))?;
        if let Some(m) = c.minus {
            write!(f, "-{}", clock_name(self.names, m))?;
        }
        write!(f, "{}{}", c.rel.symbol(), c.bound)
    }
}
