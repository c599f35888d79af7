//! Timed I/O automata, their broadcast networks, and concrete and
//! symbolic semantics.

mod concrete;
mod network;
mod symbolic;

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::zones::{ClockId, Constraint, Federation, Zone};

pub use concrete::{ConcreteState, Trace, TraceStep};
pub use network::{Discrete, Move, Network, StatePredicate, Step};
pub use symbolic::{check_refinement, concretize, pick_delay, reach, reachable, RefinementResult, SymState};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Location {
    pub name: String,
    /// Upper bounds that block time.
    pub invariant: Vec<Constraint>,
    /// Upper bounds that do not block time; exceeding them makes the state
    /// late. Only monitors carry deadlines.
    pub deadline: Vec<Constraint>,
    /// Name of the specification location this one copies, if any.
    pub origin: Option<String>,
}

impl Location {
    pub fn new(name: impl Into<String>) -> Self {
        Location { name: name.into(), invariant: Vec::new(), deadline: Vec::new(), origin: None }
    }

    pub fn with_invariant(mut self, inv: Vec<Constraint>) -> Self {
        self.invariant = inv;
        self
    }

    /// The name alignment checks compare.
    pub fn origin_name(&self) -> &str {
        self.origin.as_deref().unwrap_or(&self.name)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub src: usize,
    pub dst: usize,
    pub label: String,
    pub guard: Vec<Constraint>,
    pub resets: Vec<ClockId>,
    /// Clock permutation applied before resets: the value of clock `i`
    /// moves to clock `swap[i]` (index 0 is the reference clock).
    pub swap: Option<Vec<usize>>,
    /// Fires only as an immediate reaction to a broadcast of this label.
    pub trigger: Option<String>,
    /// Named network predicate that must hold in the pre-state.
    pub when: Option<String>,
}

impl Edge {
    pub fn new(src: usize, label: impl Into<String>, dst: usize) -> Self {
        Edge {
            src,
            dst,
            label: label.into(),
            guard: Vec::new(),
            resets: Vec::new(),
            swap: None,
            trigger: None,
            when: None,
        }
    }

    pub fn guard(mut self, g: Vec<Constraint>) -> Self {
        self.guard = g;
        self
    }

    pub fn resets(mut self, r: Vec<ClockId>) -> Self {
        self.resets = r;
        self
    }

    pub fn when(mut self, p: impl Into<String>) -> Self {
        self.when = Some(p.into());
        self
    }

    pub fn trigger(mut self, t: impl Into<String>) -> Self {
        self.trigger = Some(t.into());
        self
    }
}

/// A timed I/O automaton. Clock `i` (1-based) is `clocks[i - 1]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tioa {
    pub name: String,
    pub clocks: Vec<String>,
    pub locations: Vec<Location>,
    pub initial: usize,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub edges: Vec<Edge>,
    /// Absorbing error location of a monitor.
    pub err: Option<usize>,
}

impl Tioa {
    pub fn new(name: impl Into<String>) -> Self {
        Tioa {
            name: name.into(),
            clocks: Vec::new(),
            locations: Vec::new(),
            initial: 0,
            inputs: Vec::new(),
            outputs: Vec::new(),
            edges: Vec::new(),
            err: None,
        }
    }

    pub fn clock_count(&self) -> usize {
        self.clocks.len()
    }

    pub fn clock(&self, name: &str) -> Option<ClockId> {
        self.clocks.iter().position(|c| c == name).map(|i| ClockId(i + 1))
    }

    pub fn location(&self, name: &str) -> Option<usize> {
        self.locations.iter().position(|l| l.name == name)
    }

    pub fn is_input(&self, label: &str) -> bool {
        self.inputs.iter().any(|l| l == label)
    }

    pub fn is_output(&self, label: &str) -> bool {
        self.outputs.iter().any(|l| l == label)
    }

    pub fn labels(&self) -> impl Iterator<Item = &String> {
        self.inputs.iter().chain(&self.outputs)
    }

    pub fn edges_from<'a>(&'a self, loc: usize, label: &'a str) -> impl Iterator<Item = &'a Edge> + 'a {
        self.edges.iter().filter(move |e| e.src == loc && e.label == label)
    }

    pub fn guard_zone(&self, e: &Edge) -> Zone {
        Zone::from_constraints(self.clock_count(), &e.guard)
    }

    pub fn invariant_zone(&self, loc: usize) -> Zone {
        Zone::from_constraints(self.clock_count(), &self.locations[loc].invariant)
    }

    pub fn deadline_zone(&self, loc: usize) -> Zone {
        Zone::from_constraints(self.clock_count(), &self.locations[loc].deadline)
    }

    /// Valuations at `loc` where `label` has an enabled edge (ignoring
    /// `when` predicates and triggers).
    pub fn enabled(&self, loc: usize, label: &str) -> Federation {
        let mut f = Federation::empty(self.clock_count());
        for e in self.edges_from(loc, label) {
            f.add_zone(self.guard_zone(e));
        }
        f
    }

    /// Largest constant each clock is compared against (index 0 unused).
    pub fn max_constants(&self) -> Vec<i64> {
        let mut k = vec![0; self.clock_count() + 1];
        let mut see = |c: &Constraint| {
            k[c.clock.0] = k[c.clock.0].max(c.bound.abs());
            if let Some(m) = c.minus {
                k[m.0] = k[m.0].max(c.bound.abs());
            }
        };
        for l in &self.locations {
            l.invariant.iter().chain(&l.deadline).for_each(&mut see);
        }
        for e in &self.edges {
            e.guard.iter().for_each(&mut see);
        }
        k
    }

    fn invalid(&self, reason: impl Into<String>) -> Error {
        Error::Validation { model: self.name.clone(), reason: reason.into() }
    }

    /// Structural well-formedness.
    pub fn validate(&self) -> Result<()> {
        let n = self.clock_count();
        if self.locations.is_empty() {
            return Err(self.invalid("no locations"));
        }
        if self.initial >= self.locations.len() {
            return Err(self.invalid("initial location out of range"));
        }
        let mut names = BTreeSet::new();
        for l in &self.locations {
            if !names.insert(&l.name) {
                return Err(self.invalid(format!("duplicate location `{}`", l.name)));
            }
            for c in l.invariant.iter().chain(&l.deadline) {
                if !c.is_upper_bound() {
                    return Err(self.invalid(format!("invariant of `{}` is not an upper bound", l.name)));
                }
            }
        }
        let mut clocks = BTreeSet::new();
        for c in &self.clocks {
            if !clocks.insert(c) {
                return Err(self.invalid(format!("duplicate clock `{c}`")));
            }
        }
        let ins: BTreeSet<_> = self.inputs.iter().collect();
        if ins.len() != self.inputs.len() {
            return Err(self.invalid("duplicate input label"));
        }
        let outs: BTreeSet<_> = self.outputs.iter().collect();
        if outs.len() != self.outputs.len() {
            return Err(self.invalid("duplicate output label"));
        }
        if let Some(l) = ins.intersection(&outs).next() {
            return Err(self.invalid(format!("`{l}` is both input and output")));
        }
        let clock_ok = |c: &Constraint| c.clock.0 >= 1 && c.clock.0 <= n && c.minus.is_none_or(|m| m.0 >= 1 && m.0 <= n);
        for l in &self.locations {
            if !l.invariant.iter().chain(&l.deadline).all(clock_ok) {
                return Err(self.invalid(format!("undeclared clock in invariant of `{}`", l.name)));
            }
        }
        for (i, e) in self.edges.iter().enumerate() {
            if e.src >= self.locations.len() || e.dst >= self.locations.len() {
                return Err(self.invalid(format!("edge {i} refers to a missing location")));
            }
            if !ins.contains(&e.label) && !outs.contains(&e.label) {
                return Err(self.invalid(format!("edge {i} uses undeclared label `{}`", e.label)));
            }
            if !e.guard.iter().all(clock_ok) || e.resets.iter().any(|r| r.0 == 0 || r.0 > n) {
                return Err(self.invalid(format!("edge {i} uses an undeclared clock")));
            }
            if let Some(p) = &e.swap {
                let mut seen = p.clone();
                seen.sort_unstable();
                if p.len() != n + 1 || p[0] != 0 || seen != (0..=n).collect::<Vec<_>>() {
                    return Err(self.invalid(format!("edge {i} has an invalid clock permutation")));
                }
            }
        }
        Ok(())
    }

    /// Edges sharing source and label must have disjoint guards. Edges with
    /// `when` predicates or triggers belong to controllers and are skipped.
    pub fn check_deterministic(&self) -> Result<()> {
        let plain: Vec<&Edge> = self.edges.iter().filter(|e| e.when.is_none() && e.trigger.is_none()).collect();
        for (i, a) in plain.iter().enumerate() {
            for b in &plain[i + 1..] {
                if a.src == b.src && a.label == b.label && !self.guard_zone(a).intersect(&self.guard_zone(b)).is_empty() {
                    return Err(Error::Nondeterministic {
                        model: self.name.clone(),
                        reason: format!(
                            "two `{}` edges from `{}` overlap",
                            a.label, self.locations[a.src].name
                        ),
                    });
                }
            }
        }
        Ok(())
    }

    /// Adds guarded self-loops so every input is enabled at every valuation.
    pub fn complete_inputs(&self) -> Tioa {
        let mut out = self.clone();
        let n = self.clock_count();
        for loc in 0..self.locations.len() {
            for label in &self.inputs {
                let gap = Federation::universe(n).subtract(&self.enabled(loc, label)).reduce();
                for z in gap.zones() {
                    out.edges.push(Edge::new(loc, label.clone(), loc).guard(z.minimal_constraints()));
                }
            }
        }
        out
    }

    /// Renames every output `o` to `o'`.
    pub fn prime(&self) -> Tioa {
        let mut out = self.clone();
        out.name = format!("{}'", self.name);
        for e in &mut out.edges {
            if self.is_output(&e.label) {
                e.label = prime_label(&e.label);
            }
        }
        out.outputs = self.outputs.iter().map(|o| prime_label(o)).collect();
        out
    }
}

pub fn prime_label(l: &str) -> String {
    format!("{l}'")
}

#[cfg(test)]
mod tests;
