//! Observation monitors of specifications and fault-model monitors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tioa::{Edge, Location, Tioa};
use crate::zones::{ClockId, Federation, Zone};

/// Default cap on the number of generated fault instances.
pub const DEFAULT_FAULT_CAP: usize = 64;

/// Builds the monitor of a deterministic specification.
///
/// Every label becomes an input. Invariants turn into deadlines: the monitor
/// never blocks time, and a state past its deadline counts as an error.
/// Outputs that no edge allows (before the deadline) lead to `ERR`; observations
/// at `ERR` or past the deadline are ignored, so both are absorbing.
pub fn build_monitor(spec: &Tioa) -> Result<Tioa> {
    spec.validate()?;
    spec.check_deterministic()?;
    let n = spec.clock_count();
    let mut m = Tioa::new(format!("m{}", spec.name));
    m.clocks = spec.clocks.clone();
    m.initial = spec.initial;
    m.inputs = spec.labels().cloned().collect();
    m.locations = spec
        .locations
        .iter()
        .map(|l| {
            let mut deadline = l.deadline.clone();
            deadline.extend(l.invariant.iter().copied());
            Location { name: l.name.clone(), invariant: Vec::new(), deadline, origin: l.origin.clone() }
        })
        .collect();
    let mut err_name = "ERR".to_string();
    while spec.location(&err_name).is_some() {
        err_name.push('_');
    }
    let err = m.locations.len();
    m.locations.push(Location::new(err_name));
    m.err = Some(err);

    for e in &spec.edges {
        let mut guard = e.guard.clone();
        guard.extend(m.locations[e.src].deadline.iter().copied());
        m.edges.push(Edge { guard, trigger: None, when: None, ..e.clone() });
    }
    // Clocks restart on error so that they measure the time spent in ERR.
    let all: Vec<ClockId> = (1..=n).map(ClockId).collect();
    for loc in 0..spec.locations.len() {
        let on_time = Zone::from_constraints(n, &m.locations[loc].deadline);
        for o in &spec.outputs {
            let wrong = spec.enabled(loc, o).complement().intersect_zone(&on_time).reduce();
            for z in wrong.zones() {
                m.edges.push(Edge::new(loc, o.clone(), err).guard(z.minimal_constraints()).resets(all.clone()));
            }
        }
    }
    Ok(m)
}

/// The monitor of the primed specification.
pub fn build_primed_monitor(spec: &Tioa) -> Result<Tioa> {
    build_monitor(&spec.prime())
}

/// A class of transient faults.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaultKind {
    /// The wrong output moves the system to an arbitrary location.
    GoToAnyLocation,
    /// The wrong output moves the system to a valid successor location.
    GoToNextLocation,
    /// The wrong output resets one clock and keeps the location.
    WrongReset,
    /// The wrong output permutes clock values: entry `i` names the clock
    /// receiving the value of clock `i`.
    SwappedClocks(Vec<Vec<String>>),
    /// An output observed outside its guard takes the edge without its resets.
    MissingReset,
}

impl FaultKind {
    pub fn name(&self) -> &'static str {
        match self {
            FaultKind::GoToAnyLocation => "go_to_any_location",
            FaultKind::GoToNextLocation => "go_to_next_location",
            FaultKind::WrongReset => "wrong_reset",
            FaultKind::SwappedClocks(_) => "swapped_clocks",
            FaultKind::MissingReset => "missing_reset",
        }
    }

    pub fn parse(s: &str) -> Option<FaultKind> {
        match s {
            "go_to_any_location" | "any" => Some(FaultKind::GoToAnyLocation),
            "go_to_next_location" | "next" => Some(FaultKind::GoToNextLocation),
            "wrong_reset" => Some(FaultKind::WrongReset),
            "missing_reset" => Some(FaultKind::MissingReset),
            _ => None,
        }
    }
}

/// A pre-fault copy and a post-fault copy of the specification joined by
/// fault edges for one concrete fault instance.
#[derive(Clone, Debug, PartialEq)]
pub struct FaultModel {
    pub kind: FaultKind,
    pub description: String,
    pub tioa: Tioa,
}

struct Instance {
    src: usize,
    label: String,
    dst: usize,
    resets: Vec<ClockId>,
    swap: Option<Vec<usize>>,
    description: String,
}

fn wrong_outputs(spec: &Tioa) -> Vec<(usize, String, Federation)> {
    let mut out = Vec::new();
    for loc in 0..spec.locations.len() {
        let on_time = spec.invariant_zone(loc);
        for o in &spec.outputs {
            let wrong = spec.enabled(loc, o).complement().intersect_zone(&on_time).reduce();
            if !wrong.is_empty() {
                out.push((loc, o.clone(), wrong));
            }
        }
    }
    out
}

fn instances(spec: &Tioa, kind: &FaultKind) -> Result<Vec<(Instance, Federation)>> {
    let loc_name = |l: usize| spec.locations[l].name.clone();
    let mut out = Vec::new();
    let wrong = wrong_outputs(spec);
    match kind {
        FaultKind::GoToAnyLocation => {
            for (src, o, w) in &wrong {
                for dst in 0..spec.locations.len() {
                    let description = format!("{o} at {} goes to {}", loc_name(*src), loc_name(dst));
                    out.push((Instance { src: *src, label: o.clone(), dst, resets: vec![], swap: None, description }, w.clone()));
                }
            }
        }
        FaultKind::GoToNextLocation => {
            for (src, o, w) in &wrong {
                let mut seen: Vec<(usize, Vec<ClockId>)> = Vec::new();
                for e in spec.edges.iter().filter(|e| e.src == *src) {
                    let mut r = e.resets.clone();
                    r.sort();
                    if seen.contains(&(e.dst, r.clone())) {
                        continue;
                    }
                    seen.push((e.dst, r.clone()));
                    let description = format!("{o} at {} continues like {} to {}", loc_name(*src), e.label, loc_name(e.dst));
                    out.push((Instance { src: *src, label: o.clone(), dst: e.dst, resets: r, swap: None, description }, w.clone()));
                }
            }
        }
        FaultKind::WrongReset => {
            for (src, o, w) in &wrong {
                for (i, x) in spec.clocks.iter().enumerate() {
                    let description = format!("{o} at {} resets {x}", loc_name(*src));
                    out.push((
                        Instance { src: *src, label: o.clone(), dst: *src, resets: vec![ClockId(i + 1)], swap: None, description },
                        w.clone(),
                    ));
                }
            }
        }
        FaultKind::SwappedClocks(perms) => {
            for names in perms {
                if names.len() != spec.clock_count() {
                    return Err(Error::Validation {
                        model: spec.name.clone(),
                        reason: format!("permutation {names:?} does not list every clock"),
                    });
                }
                let mut perm = vec![0];
                for n in names {
                    let c = spec.clock(n).ok_or_else(|| Error::Validation {
                        model: spec.name.clone(),
                        reason: format!("unknown clock `{n}` in permutation"),
                    })?;
                    perm.push(c.0);
                }
                for (src, o, w) in &wrong {
                    let description = format!("{o} at {} permutes clocks to {names:?}", loc_name(*src));
                    out.push((
                        Instance { src: *src, label: o.clone(), dst: *src, resets: vec![], swap: Some(perm.clone()), description },
                        w.clone(),
                    ));
                }
            }
        }
        FaultKind::MissingReset => {
            for e in spec.edges.iter().filter(|e| !e.resets.is_empty() && spec.is_output(&e.label)) {
                let Some((_, _, w)) = wrong.iter().find(|(s, o, _)| *s == e.src && *o == e.label) else {
                    continue;
                };
                let description = format!("{} at {} skips its resets", e.label, loc_name(e.src));
                out.push((
                    Instance { src: e.src, label: e.label.clone(), dst: e.dst, resets: vec![], swap: None, description },
                    w.clone(),
                ));
            }
        }
    }
    Ok(out)
}

/// One fault model per concrete fault instance of the requested kinds, in
/// deterministic order (kind, source location, output, target).
pub fn gen_fault_models(spec: &Tioa, kinds: &[FaultKind], cap: usize) -> Result<Vec<FaultModel>> {
    spec.validate()?;
    spec.check_deterministic()?;
    if spec.outputs.is_empty() {
        return Err(Error::EmptyResult);
    }
    let mut all = Vec::new();
    for k in kinds {
        for (inst, wrong) in instances(spec, k)? {
            all.push((k.clone(), inst, wrong));
        }
    }
    if all.len() > cap {
        return Err(Error::FaultCapExceeded { cap, count: all.len() });
    }
    Ok(all
        .into_iter()
        .enumerate()
        .map(|(i, (kind, inst, wrong))| FaultModel {
            kind,
            description: inst.description.clone(),
            tioa: fault_tioa(spec, &format!("{}_f{}", spec.name, i + 1), &inst, &wrong),
        })
        .collect())
}

fn fault_tioa(spec: &Tioa, name: &str, inst: &Instance, wrong: &Federation) -> Tioa {
    let n = spec.locations.len();
    let mut t = Tioa::new(name);
    t.clocks = spec.clocks.clone();
    t.inputs = spec.inputs.clone();
    t.outputs = spec.outputs.clone();
    t.initial = spec.initial;
    for prefix in ["pre", "post"] {
        for l in &spec.locations {
            t.locations.push(Location {
                name: format!("{prefix}.{}", l.name),
                invariant: l.invariant.clone(),
                deadline: l.deadline.clone(),
                origin: Some(l.origin_name().to_string()),
            });
        }
    }
    for shift in [0, n] {
        for e in &spec.edges {
            t.edges.push(Edge { src: e.src + shift, dst: e.dst + shift, ..e.clone() });
        }
    }
    for z in wrong.zones() {
        t.edges.push(Edge {
            resets: inst.resets.clone(),
            swap: inst.swap.clone(),
            ..Edge::new(inst.src, inst.label.clone(), inst.dst + n).guard(z.minimal_constraints())
        });
    }
    t
}

/// Monitors of the fault models; a fault monitor in its error state has
/// its hypothesis discarded.
pub fn build_fault_monitors(fms: &[FaultModel]) -> Result<Vec<Tioa>> {
    fms.iter().map(|f| build_monitor(&f.tioa)).collect()
}
