use std::fmt;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::zones::Federation;
use crate::Time;

use super::{Discrete, Move, Network};

/// A network state: one location per component and exact clock values.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ConcreteState {
    pub locs: Discrete,
    pub vals: Vec<Time>,
}

impl ConcreteState {
    pub fn initial(net: &Network) -> ConcreteState {
        ConcreteState { locs: net.initial(), vals: vec![Time::zero(); net.clock_count()] }
    }

    pub fn advanced(&self, d: Time) -> ConcreteState {
        ConcreteState { locs: self.locs.clone(), vals: self.vals.iter().map(|v| v + d).collect() }
    }

    /// Lets `d` time units pass, respecting every invariant.
    pub fn delay(&self, net: &Network, d: Time) -> Result<ConcreteState> {
        let inv = net.invariant(&self.locs);
        let next = self.advanced(d);
        if inv.contains(&next.vals) {
            return Ok(next);
        }
        let max_delay = inv
            .delay_window(&self.vals)
            .and_then(|w| w.hi)
            .unwrap_or_else(Time::zero);
        Err(Error::InvariantViolation { max_delay })
    }

    /// The move among `moves` that a broadcast of `label` takes from this
    /// state, together with the resulting valuation.
    pub fn select<'a>(&self, moves: impl IntoIterator<Item = &'a Move>, label: &str) -> Option<(&'a Move, Vec<Time>)> {
        'next: for m in moves.into_iter().filter(|m| m.label == label) {
            let mut v = self.vals.clone();
            for s in &m.steps {
                if !s.guard.contains(&v) {
                    continue 'next;
                }
                v = s.apply(&v, Time::zero());
            }
            return Some((m, v));
        }
        None
    }

    /// Fires `label` using precomputed moves of `self.locs`.
    pub fn fire_with<'a>(
        &self,
        net: &Network,
        moves: impl IntoIterator<Item = &'a Move>,
        label: &str,
    ) -> Result<(ConcreteState, Move)> {
        let (m, vals) = self.select(moves, label).ok_or_else(|| Error::NotEnabled(label.to_string()))?;
        if !net.invariant(&m.target).contains(&vals) {
            return Err(Error::TargetInvariantViolated(label.to_string()));
        }
        Ok((ConcreteState { locs: m.target.clone(), vals }, m.clone()))
    }

    pub fn fire(&self, net: &Network, label: &str) -> Result<ConcreteState> {
        if !net.alphabet().contains(label) {
            return Err(Error::UnknownLabel(label.to_string()));
        }
        let moves = net.moves(&self.locs);
        self.fire_with(net, &moves, label).map(|(s, _)| s)
    }

    pub fn satisfies(&self, f: &Federation) -> bool {
        f.contains(&self.vals)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    pub delay: Time,
    pub label: String,
}

/// Alternating delays and actions from the initial state, followed by a
/// final delay.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub steps: Vec<TraceStep>,
    pub final_delay: Time,
}

impl Trace {
    /// Replays the trace on `net`, returning every visited post-action state
    /// and the state after the final delay.
    pub fn replay(&self, net: &Network) -> Result<ConcreteState> {
        let mut s = ConcreteState::initial(net);
        for st in &self.steps {
            s = s.delay(net, st.delay)?;
            s = s.fire(net, &st.label)?;
        }
        s.delay(net, self.final_delay)
    }
}

impl fmt::Display for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.steps {
            write!(f, "({}, {}) ", s.delay, s.label)?;
        }
        write!(f, "({})", self.final_delay)
    }
}
