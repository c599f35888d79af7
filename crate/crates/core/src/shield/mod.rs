//! Shield synthesis: post-shields that correct outputs (optionally
//! recovering from transient faults) and pre-shields that restrict them.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{self, GameNet, Solution, DELAY};
use crate::monitor::{build_fault_monitors, build_monitor, build_primed_monitor, FaultModel};
use crate::tioa::{prime_label, Edge, Location, Network, StatePredicate, SymState, Tioa};
use crate::zones::{Federation, Zone};

/// Name of the controller's internal action that resumes mirroring.
pub const RESYNC: &str = "resync";
pub const CTR: &str = "Ctr";
pub const ERROR: &str = "error";
pub const NO_ERROR: &str = "ok";
pub const RESYNC_OK: &str = "resync_ok";

pub fn last_chance(o: &str) -> String {
    format!("last_chance:{o}")
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShieldKind {
    Post,
    /// Post-shield that also recovers within `bound` time units after a
    /// fault (`bound` is the effective bound used for synthesis).
    Recovering { bound: i64 },
    Pre,
}

/// Which network component plays which part.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Roles {
    pub monitor: usize,
    pub primed: Option<usize>,
    pub faults: Vec<usize>,
    pub ctr: usize,
}

#[derive(Clone, Debug)]
pub struct Shield {
    pub kind: ShieldKind,
    pub spec: Tioa,
    pub game: GameNet,
    pub roles: Roles,
    pub fault_models: Vec<FaultModel>,
    pub solution: Solution,
}

impl Shield {
    pub fn network(&self) -> &Network {
        &self.game.network
    }

    /// The predicate under which the shield has recovered, if it recovers.
    pub fn recovery_goal(&self) -> Option<StatePredicate> {
        match self.kind {
            ShieldKind::Recovering { .. } => {
                Some(game::recovery_goal(&self.roles.faults, self.roles.primed.expect("post shields have a primed monitor")))
            }
            _ => None,
        }
    }
}

/// Controller of a pre-shield: may emit any output at any time.
pub fn build_ctr_pre(spec: &Tioa) -> Tioa {
    let mut ctr = Tioa::new(CTR);
    ctr.locations.push(Location::new("ctr"));
    ctr.outputs = spec.outputs.clone();
    for o in &spec.outputs {
        ctr.edges.push(Edge::new(0, o.clone(), 0));
    }
    ctr
}

/// Controller of a post-shield, with locations `mirror` and `control`.
///
/// In `mirror` every correct output `o` is copied to `o'` immediately. After
/// an error the controller emits primed outputs freely. At the last moment
/// before the primed specification would miss a deadline it may take over
/// (moving to `control`), and it returns to `mirror` once both monitors agree.
pub fn build_ctr_post(spec: &Tioa) -> Tioa {
    let mut ctr = Tioa::new(CTR);
    ctr.locations.push(Location::new("mirror"));
    ctr.locations.push(Location::new("control"));
    ctr.inputs = spec.outputs.clone();
    ctr.outputs = spec.outputs.iter().map(|o| prime_label(o)).collect();
    ctr.outputs.push(RESYNC.to_string());
    for o in &spec.outputs {
        let p = prime_label(o);
        ctr.edges.push(Edge::new(0, p.clone(), 0).trigger(o.clone()).when(NO_ERROR));
        ctr.edges.push(Edge::new(0, p.clone(), 0).when(ERROR));
        ctr.edges.push(Edge::new(0, p.clone(), 1).when(last_chance(o)));
        ctr.edges.push(Edge::new(1, p, 1));
    }
    ctr.edges.push(Edge::new(1, RESYNC, 0).when(RESYNC_OK));
    ctr
}

fn pre_network(spec: &Tioa) -> Result<Network> {
    Network::new(vec![build_monitor(spec)?, build_ctr_pre(spec)])
}

/// Synthesises a pre-shield: the most permissive set of outputs (and
/// whether waiting is allowed) keeping the specification satisfied.
pub fn synth_pre(spec: &Tioa) -> Result<Shield> {
    let net = pre_network(spec)?;
    let controllable = spec.outputs.iter().cloned().collect();
    let game = GameNet::new(net, controllable, StatePredicate::MonitorError(0))?;
    let solution = game::solve_safety(&game)?;
    Ok(Shield {
        kind: ShieldKind::Pre,
        spec: spec.clone(),
        game,
        roles: Roles { monitor: 0, primed: None, faults: vec![], ctr: 1 },
        fault_models: vec![],
        solution,
    })
}

/// Per location of `spec`, the boundary valuations of the pre-shield
/// game where output `o` is allowed.
fn last_chance_regions(spec: &Tioa, pre: &Shield) -> Vec<(String, Vec<Federation>)> {
    let sol = &pre.solution;
    let n = spec.clock_count();
    let bnd = sol.boundary();
    spec.outputs
        .iter()
        .map(|o| {
            let by_location: Vec<Federation> = (0..=spec.locations.len())
                .map(|l| {
                    let Some(s) = sol.state(&vec![l, 0]) else {
                        return Federation::empty(n);
                    };
                    let mut f = Federation::empty(n);
                    for (piece, allowed) in &sol.strategy.pieces[s] {
                        if allowed.contains(o) {
                            f = f.union(&piece.intersect(&bnd[s]));
                        }
                    }
                    f.reduce()
                })
                .collect();
            (o.clone(), by_location)
        })
        .collect()
}

pub(crate) fn post_game(spec: &Tioa, faults: &[Tioa]) -> Result<(GameNet, Roles)> {
    let pre = synth_pre(spec)?;
    let mut comps = vec![build_monitor(spec)?, build_primed_monitor(spec)?];
    comps.extend(faults.iter().cloned());
    let ctr = comps.len();
    comps.push(build_ctr_post(spec));
    let roles = Roles { monitor: 0, primed: Some(1), faults: (2..ctr).collect(), ctr };
    let mut net = Network::new(comps)?
        .with_predicate(ERROR, StatePredicate::MonitorError(0))
        .with_predicate(NO_ERROR, StatePredicate::MonitorError(0).not())
        .with_predicate(
            RESYNC_OK,
            StatePredicate::And(vec![StatePredicate::Aligned(0, 1), StatePredicate::MonitorError(0).not()]),
        );
    for (o, by_location) in last_chance_regions(spec, &pre) {
        let p = StatePredicate::And(vec![
            StatePredicate::Local { component: 1, by_location },
            StatePredicate::MonitorError(0).not(),
        ]);
        net = net.with_predicate(last_chance(&o), p);
    }
    let mut controllable: BTreeSet<String> = spec.outputs.iter().map(|o| prime_label(o)).collect();
    controllable.insert(RESYNC.to_string());
    let game = GameNet::new(net, controllable, StatePredicate::MonitorError(1))?;
    Ok((game, roles))
}

/// Synthesises a post-shield that keeps the corrected output stream
/// within the specification.
pub fn synth_post(spec: &Tioa) -> Result<Shield> {
    let (game, roles) = post_game(spec, &[])?;
    let solution = game::solve_safety(&game)?;
    Ok(Shield { kind: ShieldKind::Post, spec: spec.clone(), game, roles, fault_models: vec![], solution })
}

// The elapsed-time constant shows up inside the trigger region, so only the
// part before any fault is compared.
fn same_outside_trigger(a: &game::Solution, b: &game::Solution) -> bool {
    let (Some(ta), Some(tb)) = (&a.trigger, &b.trigger) else {
        return false;
    };
    a.winning.len() == b.winning.len()
        && (0..a.winning.len()).all(|s| a.winning[s].subtract(&ta[s]).set_eq(&b.winning[s].subtract(&tb[s])))
}

/// Synthesises a post-shield that additionally, after a fault described by
/// one of `fault_models`, reaches a state where every surviving fault
/// hypothesis agrees with the corrected stream, within `bound` time units
/// (or eventually, if `bound` is `None`).
pub fn synth_post_recovery(spec: &Tioa, fault_models: &[FaultModel], bound: Option<i64>) -> Result<Shield> {
    let fms = build_fault_monitors(fault_models)?;
    let (game, roles) = post_game(spec, &fms)?;
    let goal = game::recovery_goal(&roles.faults, 1);
    let trigger = StatePredicate::MonitorError(0);
    let solve = |t: i64| {
        let ok = game::elapsed_within(&game.network, 0, t);
        game::solve_leadsto(&game, &trigger, &goal, Some(&ok))
    };
    let (solution, t) = match bound {
        Some(t) => (solve(t)?, t),
        None => {
            let states = game::Arena::build_reachable(&game)?.len() as i64;
            let small = states * (game.network.max_constant() + 1);
            let large = 2 * small;
            let a = solve(small);
            let b = solve(large);
            match (a, b) {
                (Ok(a), Ok(b)) if same_outside_trigger(&a, &b) => (a, small),
                (Err(Error::InitialStateLosing(s)), Err(Error::InitialStateLosing(_))) => {
                    return Err(Error::InitialStateLosing(s))
                }
                (Ok(_), _) | (Err(Error::InitialStateLosing(_)), _) => {
                    return Err(Error::UnboundedRecoveryUndecided { small, large })
                }
                (Err(e), _) => return Err(e),
            }
        }
    };
    Ok(Shield {
        kind: ShieldKind::Recovering { bound: t },
        spec: spec.clone(),
        game,
        roles,
        fault_models: fault_models.to_vec(),
        solution,
    })
}

/// Splits the time-successors of `s` into maximal convex pieces with a
/// constant set of allowed outputs, ordered by the earliest time they are
/// entered. Waiting is not part of the set.
pub fn enabled_actions_by_zone(shield: &Shield, s: &SymState) -> Result<Vec<(Zone, BTreeSet<String>)>> {
    let net = shield.network();
    let sol = &shield.solution;
    let idx = sol.state(&s.locs).ok_or(Error::EmptyResult)?;
    let future = s.fed.up().intersect_zone(&net.invariant(&s.locs));
    if future.is_empty() {
        return Err(Error::EmptyResult);
    }
    let mut groups: Vec<(BTreeSet<String>, Federation)> = Vec::new();
    let mut add = |set: BTreeSet<String>, f: Federation| {
        if f.is_empty() {
            return;
        }
        match groups.iter_mut().find(|(k, _)| *k == set) {
            Some((_, g)) => *g = g.union(&f),
            None => groups.push((set, f)),
        }
    };
    for (piece, allowed) in &sol.strategy.pieces[idx] {
        let set: BTreeSet<String> = allowed.iter().filter(|a| *a != DELAY).cloned().collect();
        add(set, future.intersect(piece));
    }
    add(BTreeSet::new(), future.subtract(&sol.winning[idx]));
    let mut out: Vec<(Zone, BTreeSet<String>)> = groups
        .into_iter()
        .flat_map(|(set, f)| f.reduce().into_zones().into_iter().map(move |z| (z, set.clone())))
        .collect();
    out.sort_by(|(a, _), (b, _)| entry_key(a).cmp(&entry_key(b)).then_with(|| a.cmp(b)));
    Ok(out)
}

/// Order key: lower bound of the first clock, smaller and non-strict first.
fn entry_key(z: &Zone) -> (i64, bool) {
    if z.dim() < 2 {
        return (0, false);
    }
    let b = z.get(0, 1);
    (-b.constant(), b.is_strict())
}

#[cfg(test)]
mod tests;
