//! Randomised plays against shields and replay checks of their output.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::monitor::build_monitor;
use crate::tioa::{prime_label, ConcreteState, Network, StatePredicate, Tioa};
use crate::Time;

use super::{Direction, Event, RecoveryStatus, Session, Verdict};
use crate::shield::Shield;

#[derive(Clone, Debug)]
pub struct PlayConfig {
    /// Number of events generated per play.
    pub steps: usize,
    /// Largest regular gap between events, in time units; gaps are
    /// multiples of 1/2.
    pub max_gap: i64,
    /// Probability that an event is an environment input.
    pub input_rate: f64,
    /// Probability of a long silence of up to four times `max_gap`.
    pub silence_rate: f64,
}

impl Default for PlayConfig {
    fn default() -> Self {
        PlayConfig { steps: 30, max_gap: 4, input_rate: 0.25, silence_rate: 0.1 }
    }
}

#[derive(Clone, Debug)]
pub struct Play {
    /// What the shield received.
    pub events: Vec<Event>,
    pub verdicts: Vec<Verdict>,
    /// Environment inputs and the outputs leaving the shield, in order.
    pub shielded: Vec<Event>,
    pub end: Time,
    pub status: RecoveryStatus,
}

fn half_gap(cfg: &PlayConfig, rng: &mut impl Rng) -> Time {
    let top = if rng.gen_bool(cfg.silence_rate) { 8 * cfg.max_gap } else { 2 * cfg.max_gap };
    Time::new(rng.gen_range(0..=top), 2)
}

/// A random event sequence. With `system`, outputs follow that automaton
/// (which sees the same inputs); without it, any output may occur at any
/// time, so wrong outputs and missed deadlines are both produced.
pub fn gen_events(spec: &Tioa, system: Option<&Tioa>, cfg: &PlayConfig, rng: &mut impl Rng) -> Result<(Vec<Event>, Time)> {
    let net = system.map(|s| Network::new(vec![s.complete_inputs()])).transpose()?;
    let mut sys = net.as_ref().map(ConcreteState::initial);
    let mut now = Time::from_integer(0);
    let mut out = Vec::new();
    for _ in 0..cfg.steps {
        let mut gap = half_gap(cfg, rng);
        if let (Some(net), Some(s)) = (&net, &sys) {
            let inv = net.invariant(&s.locs);
            if let Some(h) = inv.delay_window(&s.vals).and_then(|w| w.hi) {
                gap = gap.min(h);
            }
            sys = Some(s.delay(net, gap)?);
        }
        now += gap;
        let input = !spec.inputs.is_empty() && rng.gen_bool(cfg.input_rate);
        let labels = if input { &spec.inputs } else { &spec.outputs };
        let label = match (&net, &mut sys) {
            (Some(net), Some(s)) => {
                let moves = net.moves(&s.locs);
                let options: Vec<&String> =
                    labels.iter().filter(|l| s.fire_with(net, &moves, l).is_ok()).collect();
                match options.choose(rng) {
                    Some(l) => {
                        *s = s.fire_with(net, &moves, l)?.0;
                        (*l).clone()
                    }
                    None => continue,
                }
            }
            _ => labels.choose(rng).cloned().ok_or(Error::EmptyResult)?,
        };
        out.push(Event {
            time: now,
            label,
            direction: if input { Direction::Input } else { Direction::Output },
        });
    }
    let tail = half_gap(cfg, rng);
    let end = match (&net, &sys) {
        (Some(net), Some(s)) => {
            let h = net.invariant(&s.locs).delay_window(&s.vals).and_then(|w| w.hi);
            now + h.map_or(tail, |h| tail.min(h))
        }
        _ => now + tail,
    };
    Ok((out, end))
}

/// Runs `events` through a post-shield and collects its output stream.
pub fn play(shield: &Shield, events: &[Event], end: Time) -> Result<Play> {
    let mut s = Session::open(shield)?;
    let mut verdicts = Vec::new();
    let mut shielded = Vec::new();
    let emit = |vs: Vec<Verdict>, e: Option<&Event>, shielded: &mut Vec<Event>, verdicts: &mut Vec<Verdict>| {
        for v in vs {
            match &v {
                Verdict::Pass(l) => shielded.push(Event::output(prime_label(l), e.map_or(end, |e| e.time))),
                Verdict::Correct(l) => shielded.push(Event::output(l.clone(), e.map_or(end, |e| e.time))),
                Verdict::Emit(l, t) => shielded.push(Event::output(l.clone(), *t)),
                Verdict::Suppress | Verdict::Act(_) => {}
            }
            verdicts.push(v);
        }
    };
    for e in events {
        let vs = s.feed(e)?;
        if e.direction == Direction::Input {
            // The input reaches the environment side before any reaction.
            let pos = vs.iter().position(|v| matches!(v, Verdict::Emit(_, t) if *t == e.time)).unwrap_or(vs.len());
            let (before, after) = vs.split_at(pos);
            emit(before.to_vec(), Some(e), &mut shielded, &mut verdicts);
            shielded.push(e.clone());
            emit(after.to_vec(), Some(e), &mut shielded, &mut verdicts);
        } else {
            emit(vs, Some(e), &mut shielded, &mut verdicts);
        }
    }
    let vs = s.tick(end)?;
    emit(vs, None, &mut shielded, &mut verdicts);
    Ok(Play { events: events.to_vec(), verdicts, shielded, end, status: s.recovery_status() })
}

/// Whether `stream`, observed until `end`, keeps the monitor of `spec` out of
/// its error region at every event and at the end.
pub fn replay_ok(spec: &Tioa, stream: &[Event], end: Time) -> Result<bool> {
    let net = Network::new(vec![build_monitor(&spec.complete_inputs())?])?;
    let err = StatePredicate::MonitorError(0);
    let bad = |s: &ConcreteState| net.eval(&err, &s.locs).contains(&s.vals);
    let mut s = ConcreteState::initial(&net);
    let mut now = Time::from_integer(0);
    for e in stream {
        if e.time < now {
            return Ok(false);
        }
        s = s.delay(&net, e.time - now)?;
        now = e.time;
        if bad(&s) {
            return Ok(false);
        }
        s = s.fire(&net, &e.label)?;
        if bad(&s) {
            return Ok(false);
        }
    }
    s = s.delay(&net, end - now)?;
    Ok(!bad(&s))
}

/// [`replay_ok`] against the primed copy of `spec`, which is what a
/// post-shield emits.
pub fn primed_replay_ok(spec: &Tioa, stream: &[Event], end: Time) -> Result<bool> {
    replay_ok(&spec.prime(), stream, end)
}

/// A run of a pre-shield against a system that picks uniformly among the
/// allowed outputs or waits when waiting is allowed. Returns the events fed.
pub fn pre_play(shield: &Shield, cfg: &PlayConfig, rng: &mut impl Rng) -> Result<(Vec<Event>, Time)> {
    let mut s = Session::open(shield)?;
    let mut events = Vec::new();
    for _ in 0..cfg.steps {
        let act = s.act_set()?;
        let now = s.now();
        if !shield.spec.inputs.is_empty() && rng.gen_bool(cfg.input_rate) {
            let l = shield.spec.inputs.choose(rng).cloned().ok_or(Error::EmptyResult)?;
            let e = Event::input(l, now);
            s.feed(&e)?;
            events.push(e);
            continue;
        }
        let acts: Vec<&String> = act.actions.iter().collect();
        if !acts.is_empty() && (!act.delay_allowed || rng.gen_bool(0.5)) {
            let e = Event::output(acts.choose(rng).map(|l| (*l).clone()).unwrap_or_default(), now);
            s.feed(&e)?;
            events.push(e);
        } else if act.delay_allowed {
            let gap = half_gap(cfg, rng);
            let t = act.valid_until.map_or(now + gap, |u| u.min(now + gap));
            s.tick(t)?;
        } else {
            return Err(Error::ShieldStateCorrupt("neither an action nor a delay is allowed".into()));
        }
    }
    Ok((events, s.now()))
}
