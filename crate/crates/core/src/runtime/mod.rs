//! Online execution of synthesised shields over timestamped events.
//!
//! A post-shield session turns system outputs into verdicts (pass, correct,
//! suppress) and emits its own primed outputs when the strategy demands it.
//! A pre-shield session publishes the set of allowed outputs, with whether
//! waiting is allowed and until when the set stays valid.

mod protocol;
mod sim;

pub use protocol::{format_verdict, parse_command, parse_time, Command};
pub use sim::{gen_events, play, pre_play, primed_replay_ok, replay_ok, Play, PlayConfig};

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::DELAY;
use crate::shield::{Shield, ShieldKind, RESYNC};
use crate::tioa::{pick_delay, prime_label, ConcreteState, Move, StatePredicate};
use crate::zones::Federation;
use crate::Time;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Input,
    Output,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub time: Time,
    pub label: String,
    pub direction: Direction,
}

impl Event {
    pub fn input(label: impl Into<String>, time: Time) -> Event {
        Event { time, label: label.into(), direction: Direction::Input }
    }

    pub fn output(label: impl Into<String>, time: Time) -> Event {
        Event { time, label: label.into(), direction: Direction::Output }
    }
}

/// Outputs a pre-shield currently allows.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActSet {
    pub actions: BTreeSet<String>,
    pub delay_allowed: bool,
    /// Absolute time up to which this set stays valid; `None` is forever.
    pub valid_until: Option<Time>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    /// The system output goes through unchanged.
    Pass(String),
    /// The system output is replaced by the given primed output.
    Correct(String),
    /// The system output is dropped.
    Suppress,
    /// The shield emits a primed output on its own at the given time.
    Emit(String, Time),
    Act(ActSet),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RecoveryStatus {
    NotTriggered,
    /// Time since the error so far.
    Recovering(Time),
    Recovered { at: Time, elapsed: Time },
}

#[derive(Clone, Debug)]
struct Segment {
    lo: Time,
    lo_strict: bool,
    hi: Option<Time>,
    piece: usize,
}

/// One event stream run through a shield.
#[derive(Clone, Debug)]
pub struct Session<'a> {
    shield: &'a Shield,
    state: ConcreteState,
    now: Time,
    error_at: Option<Time>,
    recovered_at: Option<Time>,
    live: Vec<bool>,
    error: StatePredicate,
    goal: Option<StatePredicate>,
}

const MAX_ACTIONS_PER_INSTANT: usize = 64;

impl<'a> Session<'a> {
    pub fn open(shield: &'a Shield) -> Result<Session<'a>> {
        let net = shield.network();
        let state = ConcreteState::initial(net);
        let mut s = Session {
            shield,
            state,
            now: Time::from_integer(0),
            error_at: None,
            recovered_at: None,
            live: vec![true; shield.roles.faults.len()],
            error: StatePredicate::MonitorError(shield.roles.monitor),
            goal: shield.recovery_goal(),
        };
        if !shield.solution.is_winning(&s.state.locs, &s.state.vals) {
            return Err(Error::ShieldStateCorrupt("initial state outside the winning region".into()));
        }
        s.observe();
        Ok(s)
    }

    pub fn now(&self) -> Time {
        self.now
    }

    pub fn state(&self) -> &ConcreteState {
        &self.state
    }

    pub fn is_error(&self) -> bool {
        self.error_at.is_some()
    }

    /// One flag per fault model; cleared once its hypothesis is discarded.
    pub fn live_faults(&self) -> &[bool] {
        &self.live
    }

    pub fn recovery_status(&self) -> RecoveryStatus {
        match (self.error_at, self.recovered_at) {
            (None, _) => RecoveryStatus::NotTriggered,
            (Some(e), Some(r)) => RecoveryStatus::Recovered { at: r, elapsed: r - e },
            (Some(e), None) => RecoveryStatus::Recovering(self.now - e),
        }
    }

    /// Location names of every component, for diagnostics.
    pub fn locations(&self) -> Vec<String> {
        self.shield.network().location_names(&self.state.locs)
    }

    fn is_pre(&self) -> bool {
        self.shield.kind == ShieldKind::Pre
    }

    fn holds(&self, p: &StatePredicate) -> bool {
        self.shield.network().eval(p, &self.state.locs).contains(&self.state.vals)
    }

    fn sid(&self) -> Result<usize> {
        self.shield
            .solution
            .state(&self.state.locs)
            .ok_or_else(|| Error::ShieldStateCorrupt(format!("unknown state {:?}", self.locations())))
    }

    fn pieces(&self) -> Result<&'a [(Federation, BTreeSet<String>)]> {
        let s = self.sid()?;
        Ok(&self.shield.solution.strategy.pieces[s])
    }

    /// Actions the strategy allows right now (including `delay`).
    pub fn allowed(&self) -> BTreeSet<String> {
        self.sid()
            .ok()
            .and_then(|s| self.shield.solution.strategy.allowed(s, &self.state.vals))
            .cloned()
            .unwrap_or_default()
    }

    fn observe(&mut self) {
        if self.error_at.is_none() && self.holds(&self.error) {
            self.error_at = Some(self.now);
        }
        for (i, &f) in self.shield.roles.faults.iter().enumerate() {
            if self.live[i] && self.holds(&StatePredicate::MonitorError(f)) {
                self.live[i] = false;
            }
        }
        if self.error_at.is_some() && self.recovered_at.is_none() {
            if let Some(g) = &self.goal {
                if self.holds(g) {
                    self.recovered_at = Some(self.now);
                }
            }
        }
    }

    fn check_time(&self, t: Time) -> Result<()> {
        if t < self.now {
            return Err(Error::TimeRegression { time: t, last: self.now });
        }
        Ok(())
    }

    fn advance_to(&mut self, t: Time) -> Result<()> {
        self.check_time(t)?;
        let d = t - self.now;
        if d == Time::from_integer(0) {
            return Ok(());
        }
        let net = self.shield.network();
        let v = &self.state.vals;
        // Exact instants at which the error starts and the goal is reached
        // inside this delay.
        let mut onset = None;
        if self.error_at.is_none() {
            let err = net.eval(&self.error, &self.state.locs);
            onset = earliest_entry(&err, v, Time::from_integer(0), d);
        }
        let goal_entry = match (&self.goal, self.error_at.map(|_| Time::from_integer(0)).or(onset)) {
            (Some(g), Some(from)) if self.recovered_at.is_none() => {
                earliest_entry(&net.eval(g, &self.state.locs), v, from, d)
            }
            _ => None,
        };
        self.state = self
            .state
            .delay(net, d)
            .map_err(|e| Error::ShieldStateCorrupt(format!("delay of {d} impossible: {e}")))?;
        if let Some(o) = onset {
            self.error_at = Some(self.now + o);
        }
        if let Some(g) = goal_entry {
            self.recovered_at = Some(self.now + g);
        }
        self.now = t;
        self.observe();
        Ok(())
    }

    fn fire(&mut self, label: &str) -> Result<Move> {
        let net = self.shield.network();
        let s = self.sid()?;
        let arena = &self.shield.solution.arena;
        let (next, mv) = match self.state.fire_with(net, arena.moves[s].iter().map(|m| &m.mv), label) {
            Ok(r) => r,
            Err(_) => {
                let moves = net.moves(&self.state.locs);
                self.state.fire_with(net, &moves, label)?
            }
        };
        self.state = next;
        self.observe();
        Ok(mv)
    }

    fn check_label(&self, e: &Event) -> Result<()> {
        let spec = &self.shield.spec;
        let ok = match e.direction {
            Direction::Input => spec.is_input(&e.label),
            Direction::Output => spec.is_output(&e.label),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::UnknownLabel(e.label.clone()))
        }
    }

    /// Processes one event and returns the responses, including any
    /// emissions that fell due before it.
    pub fn feed(&mut self, e: &Event) -> Result<Vec<Verdict>> {
        self.check_time(e.time)?;
        self.check_label(e)?;
        if self.is_pre() {
            self.feed_pre(e)
        } else {
            self.feed_post(e)
        }
    }

    /// Lets time pass up to `now` without events.
    pub fn tick(&mut self, now: Time) -> Result<Vec<Verdict>> {
        self.check_time(now)?;
        let mut out = Vec::new();
        if self.is_pre() {
            self.run_pre(now, &mut out)?;
        } else {
            self.run_post(now, true, &mut out)?;
        }
        Ok(out)
    }

    // ---- post-shields ----

    fn in_control(&self) -> bool {
        let r = &self.shield.roles;
        r.primed.is_some() && self.state.locs[r.ctr] == 1
    }

    fn recovering(&self) -> bool {
        self.goal.is_some() && self.error_at.is_some() && self.recovered_at.is_none()
    }

    /// Valuations of the current location vector where the shield acts.
    fn demand(&self) -> Result<Federation> {
        let recovering = self.recovering();
        let control = self.in_control();
        let mut f = Federation::empty(self.shield.game.clock_count());
        for (fed, labels) in self.pieces()? {
            let acts = labels.iter().any(|l| l != DELAY && l != RESYNC);
            let need = if recovering {
                acts
            } else if control {
                labels.contains(RESYNC) || !labels.contains(DELAY)
            } else {
                !labels.contains(DELAY)
            };
            if need {
                f = f.union(fed);
            }
        }
        Ok(f)
    }

    fn choose(&self) -> Option<String> {
        let allowed = self.allowed();
        if self.in_control() && allowed.contains(RESYNC) && !self.recovering() {
            return Some(RESYNC.to_string());
        }
        allowed
            .iter()
            .find(|l| l.as_str() != DELAY && l.as_str() != RESYNC)
            .or_else(|| allowed.get(RESYNC))
            .cloned()
    }

    fn act_now(&mut self, out: &mut Vec<Verdict>) -> Result<()> {
        for _ in 0..MAX_ACTIONS_PER_INSTANT {
            if !self.demand()?.contains(&self.state.vals) {
                return Ok(());
            }
            let l = self
                .choose()
                .ok_or_else(|| Error::ShieldStateCorrupt(format!("no action allowed at {:?}", self.locations())))?;
            self.fire(&l)?;
            if l != RESYNC {
                out.push(Verdict::Emit(l, self.now));
            }
        }
        Err(Error::ShieldStateCorrupt("too many actions at one instant".into()))
    }

    fn run_post(&mut self, t: Time, inclusive: bool, out: &mut Vec<Verdict>) -> Result<()> {
        self.act_now(out)?;
        loop {
            let demand = self.demand()?;
            let next = if self.recovering() {
                pick_on_grid(&demand, &self.state.vals, self.now)
            } else {
                pick_delay(&demand, &self.state.vals)
            };
            match next {
                Some(d) if self.now + d < t || (inclusive && self.now + d == t) => {
                    self.advance_to(self.now + d)?;
                    self.act_now(out)?;
                }
                _ => break,
            }
        }
        self.advance_to(t)
    }

    fn feed_post(&mut self, e: &Event) -> Result<Vec<Verdict>> {
        let mut out = Vec::new();
        self.run_post(e.time, false, &mut out)?;
        if e.direction == Direction::Input {
            self.fire(&e.label)?;
            self.act_now(&mut out)?;
            return Ok(out);
        }
        let mv = self.fire(&e.label)?;
        let p = prime_label(&e.label);
        if mv.reaction() == Some(p.as_str()) {
            out.push(Verdict::Pass(e.label.clone()));
        } else if self.allowed().contains(&p) && self.fire(&p).is_ok() {
            out.push(Verdict::Pass(e.label.clone()));
        } else {
            let mut own = Vec::new();
            self.act_now(&mut own)?;
            let mut own = own.into_iter();
            match own.next() {
                Some(Verdict::Emit(l, _)) => out.push(Verdict::Correct(l)),
                _ => out.push(Verdict::Suppress),
            }
            out.extend(own);
        }
        self.act_now(&mut out)?;
        Ok(out)
    }

    // ---- pre-shields ----

    fn timeline(&self) -> Result<Vec<Segment>> {
        let mut segs: Vec<Segment> = Vec::new();
        for (i, (fed, _)) in self.pieces()?.iter().enumerate() {
            for z in fed.zones() {
                if let Some(w) = z.delay_window(&self.state.vals).filter(|w| !w.is_empty()) {
                    segs.push(Segment { lo: w.lo, lo_strict: w.lo_strict, hi: w.hi, piece: i });
                }
            }
        }
        segs.sort_by(|a, b| a.lo.cmp(&b.lo).then(a.lo_strict.cmp(&b.lo_strict)));
        let mut merged: Vec<Segment> = Vec::new();
        for s in segs {
            match merged.last_mut() {
                Some(m) if m.piece == s.piece && m.hi.is_some_and(|h| h >= s.lo) => {
                    m.hi = match (m.hi, s.hi) {
                        (Some(a), Some(b)) => Some(a.max(b)),
                        _ => None,
                    };
                }
                _ => merged.push(s),
            }
        }
        Ok(merged)
    }

    fn act_for(&self, seg: &Segment) -> Result<ActSet> {
        let labels = &self.pieces()?[seg.piece].1;
        Ok(ActSet {
            actions: labels.iter().filter(|l| l.as_str() != DELAY).cloned().collect(),
            delay_allowed: labels.contains(DELAY),
            valid_until: seg.hi.map(|h| self.now + h),
        })
    }

    /// The set of outputs allowed at the current instant.
    pub fn act_set(&self) -> Result<ActSet> {
        let segs = self.timeline()?;
        let cur = segs
            .iter()
            .find(|s| s.lo == Time::from_integer(0) && !s.lo_strict)
            .ok_or_else(|| Error::ShieldStateCorrupt(format!("no strategy at {:?}", self.locations())))?;
        self.act_for(cur)
    }

    fn run_pre(&mut self, t: Time, out: &mut Vec<Verdict>) -> Result<()> {
        let d = t - self.now;
        let segs = self.timeline()?;
        let zero = Time::from_integer(0);
        let mut reached = zero;
        for s in &segs {
            if s.lo > d || (s.lo == d && s.lo_strict) {
                break;
            }
            if s.lo > zero || s.lo_strict {
                out.push(Verdict::Act(self.act_for(s)?));
            }
            let act = self.act_for(s)?;
            match s.hi {
                Some(h) if h < d && !act.delay_allowed => return Err(Error::DeadlineMissed(self.now + h)),
                Some(h) => reached = reached.max(h),
                None => reached = d,
            }
        }
        if reached < d {
            return Err(Error::DeadlineMissed(self.now + reached));
        }
        self.advance_to(t)
    }

    fn feed_pre(&mut self, e: &Event) -> Result<Vec<Verdict>> {
        let mut out = Vec::new();
        self.run_pre(e.time, &mut out)?;
        if e.direction == Direction::Output && !self.act_set()?.actions.contains(&e.label) {
            return Err(Error::ActionRejected(e.label.clone()));
        }
        self.fire(&e.label)?;
        out.push(Verdict::Act(self.act_set()?));
        Ok(out)
    }
}

/// Earliest delay reaching `f` at an integer absolute time, per zone; zones
/// without an integer instant fall back to [`pick_delay`].
fn pick_on_grid(f: &Federation, v: &[Time], now: Time) -> Option<Time> {
    f.zones()
        .iter()
        .filter_map(|z| {
            let w = z.delay_window(v).filter(|w| !w.is_empty())?;
            let lo = now + w.lo;
            let mut at = lo.ceil();
            if at == lo && w.lo_strict {
                at += Time::from_integer(1);
            }
            let d = at - now;
            if w.contains(&d) {
                Some(d)
            } else {
                pick_delay(&Federation::from_zone(z.clone()), v)
            }
        })
        .min()
}

/// Smallest delay in `[from, until]` reaching `f` from `v` (infimum when the
/// entry is open).
fn earliest_entry(f: &Federation, v: &[Time], from: Time, until: Time) -> Option<Time> {
    f.zones()
        .iter()
        .filter_map(|z| z.delay_window(v))
        .filter(|w| !w.is_empty())
        .filter_map(|w| {
            let start = if w.lo > from { w.lo } else { from };
            let fits = match w.hi {
                None => true,
                Some(h) => start < h || (start == h && !w.hi_strict),
            };
            (fits && start <= until).then_some(start)
        })
        .min()
}
