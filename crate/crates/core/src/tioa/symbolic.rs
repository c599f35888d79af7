use std::collections::{HashMap, VecDeque};

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::monitor::build_monitor;
use crate::zones::{Federation, Zone};
use crate::Time;

use super::{ConcreteState, Discrete, Move, Network, StatePredicate, Tioa, Trace, TraceStep};

/// A location vector with a set of clock valuations.
#[derive(Clone, Debug, PartialEq)]
pub struct SymState {
    pub locs: Discrete,
    pub fed: Federation,
}

impl SymState {
    pub fn initial(net: &Network) -> SymState {
        let locs = net.initial();
        let fed = Federation::from_zone(Zone::zero(net.clock_count()).intersect(&net.invariant(&locs)));
        SymState { locs, fed }
    }

    /// Delay closure within the invariants.
    pub fn delay(&self, net: &Network) -> Result<SymState> {
        let fed = self.fed.up().intersect_zone(&net.invariant(&self.locs));
        if fed.is_empty() {
            return Err(Error::EmptyResult);
        }
        Ok(SymState { locs: self.locs.clone(), fed })
    }

    /// Discrete successor under `m`, extrapolated by the network's constants.
    pub fn succ(&self, net: &Network, m: &Move) -> Result<SymState> {
        let fed = net.post(m, &self.fed).extrapolate(&net.max_constants());
        if fed.is_empty() {
            return Err(Error::EmptyResult);
        }
        Ok(SymState { locs: m.target.clone(), fed })
    }

    /// Successors under every move broadcasting `label` first.
    pub fn succ_label(&self, net: &Network, label: &str) -> Vec<SymState> {
        net.moves(&self.locs)
            .iter()
            .filter(|m| m.label == label)
            .filter_map(|m| self.succ(net, m).ok())
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RefinementResult {
    pub holds: bool,
    /// A concrete trace of `impl` that `spec` does not allow.
    pub witness: Option<Trace>,
}

/// Decides `imp <= spec` for a deterministic `spec` by checking that the
/// composition of `imp` with the monitor of `spec` cannot reach the
/// monitor's error (or a missed deadline).
pub fn check_refinement(imp: &Tioa, spec: &Tioa) -> Result<RefinementResult> {
    spec.check_deterministic()?;
    imp.validate()?;
    for o in &imp.outputs {
        if !spec.is_output(o) {
            return Err(Error::Validation {
                model: imp.name.clone(),
                reason: format!("output `{o}` is not an output of `{}`", spec.name),
            });
        }
    }
    let mon = build_monitor(spec)?;
    let net = Network::new(vec![imp.complete_inputs(), mon])?;
    let bad = StatePredicate::MonitorError(1);
    match reach(&net, &bad)? {
        None => Ok(RefinementResult { holds: true, witness: None }),
        Some(path) => Ok(RefinementResult { holds: false, witness: Some(concretize(&net, &path, &bad)?) }),
    }
}

const MAX_STATES: usize = 1_000_000;

/// Forward zone-graph search; returns the moves leading to a state
/// intersecting `target`.
pub fn reach(net: &Network, target: &StatePredicate) -> Result<Option<Vec<Move>>> {
    let k = net.max_constants();
    let init = SymState::initial(net).delay(net)?;
    let mut nodes: Vec<(Discrete, Zone, Option<(usize, Move)>)> = Vec::new();
    let mut passed: HashMap<Discrete, Vec<Zone>> = HashMap::new();
    let mut queue = VecDeque::new();
    let mut move_cache: HashMap<Discrete, Vec<Move>> = HashMap::new();
    let mut target_cache: HashMap<Discrete, Federation> = HashMap::new();
    for z in init.fed.into_zones() {
        let z = z.extrapolate(&k);
        passed.entry(init.locs.clone()).or_default().push(z.clone());
        nodes.push((init.locs.clone(), z, None));
        queue.push_back(nodes.len() - 1);
    }
    while let Some(i) = queue.pop_front() {
        let (d, z) = (nodes[i].0.clone(), nodes[i].1.clone());
        let hit = target_cache.entry(d.clone()).or_insert_with(|| net.eval(target, &d));
        if !hit.intersect_zone(&z).is_empty() {
            let mut path = Vec::new();
            let mut cur = i;
            while let Some((p, m)) = nodes[cur].2.clone() {
                path.push(m);
                cur = p;
            }
            path.reverse();
            return Ok(Some(path));
        }
        let moves = move_cache.entry(d.clone()).or_insert_with(|| net.moves(&d)).clone();
        for m in moves {
            let post = net.post(&m, &Federation::from_zone(z.clone())).up().intersect_zone(&net.invariant(&m.target));
            for nz in post.into_zones() {
                let nz = nz.extrapolate(&k);
                let seen = passed.entry(m.target.clone()).or_default();
                if seen.iter().any(|s| nz.is_subset(s)) {
                    continue;
                }
                seen.retain(|s| !s.is_subset(&nz));
                seen.push(nz.clone());
                if nodes.len() >= MAX_STATES {
                    return Err(Error::NoConvergence(MAX_STATES));
                }
                nodes.push((m.target.clone(), nz, Some((i, m.clone()))));
                queue.push_back(nodes.len() - 1);
            }
        }
    }
    Ok(None)
}

/// Forward zone-graph exploration: the reachable valuations per location
/// vector (over-approximated by extrapolation).
pub fn reachable(net: &Network) -> Result<HashMap<Discrete, Federation>> {
    let k = net.max_constants();
    let init = SymState::initial(net).delay(net)?;
    let mut passed: HashMap<Discrete, Vec<Zone>> = HashMap::new();
    let mut queue = VecDeque::new();
    let mut move_cache: HashMap<Discrete, Vec<Move>> = HashMap::new();
    let mut count = 0;
    for z in init.fed.into_zones() {
        let z = z.extrapolate(&k);
        passed.entry(init.locs.clone()).or_default().push(z.clone());
        queue.push_back((init.locs.clone(), z));
    }
    while let Some((d, z)) = queue.pop_front() {
        let moves = move_cache.entry(d.clone()).or_insert_with(|| net.moves(&d)).clone();
        for m in moves {
            let post = net.post(&m, &Federation::from_zone(z.clone())).up().intersect_zone(&net.invariant(&m.target));
            for nz in post.into_zones() {
                let nz = nz.extrapolate(&k);
                let seen = passed.entry(m.target.clone()).or_default();
                if seen.iter().any(|o| nz.is_subset(o)) {
                    continue;
                }
                seen.retain(|o| !o.is_subset(&nz));
                seen.push(nz.clone());
                count += 1;
                if count >= MAX_STATES {
                    return Err(Error::NoConvergence(MAX_STATES));
                }
                queue.push_back((m.target.clone(), nz));
            }
        }
    }
    let n = net.clock_count();
    Ok(passed.into_iter().map(|(d, zs)| (d, Federation::from_zones(n, zs))).collect())
}

/// Picks a delay inside `f`'s delay window from `v`, preferring the
/// earliest closed endpoint.
pub fn pick_delay(f: &Federation, v: &[Time]) -> Option<Time> {
    let half = Time::new(1, 2);
    f.zones().iter().filter_map(|z| z.delay_window(v)).map(|w| {
        if !w.lo_strict {
            w.lo
        } else {
            match w.hi {
                Some(h) if h - w.lo < Time::from_integer(1) => (w.lo + h) * half,
                _ => w.lo + half,
            }
        }
    }).min()
}

/// Turns a symbolic path ending in `target` into a concrete trace.
pub fn concretize(net: &Network, path: &[Move], target: &StatePredicate) -> Result<Trace> {
    // Exact (non-extrapolated) delay-closed zones along the path.
    let mut exact = vec![SymState::initial(net).delay(net)?];
    for m in path {
        let s = exact.last().expect("non-empty");
        let fed = net.post(m, &s.fed);
        exact.push(SymState { locs: m.target.clone(), fed }.delay(net)?);
    }
    // Backward: states of each exact zone from which the rest of the path works.
    let n = path.len();
    let mut good = vec![Federation::empty(net.clock_count()); n + 1];
    good[n] = exact[n].fed.intersect(&net.eval(target, &exact[n].locs));
    for k in (0..n).rev() {
        let reach_next = good[k + 1].down().intersect_zone(&net.invariant(&path[k].target));
        good[k] = exact[k].fed.intersect(&net.pre(&path[k], &reach_next));
    }
    let mut s = ConcreteState::initial(net);
    let mut steps = Vec::new();
    for (k, m) in path.iter().enumerate() {
        let d = pick_delay(&good[k], &s.vals).ok_or(Error::EmptyResult)?;
        let at = s.advanced(d);
        let mut vals = at.vals.clone();
        for st in &m.steps {
            vals = st.apply(&vals, Time::zero());
        }
        steps.push(TraceStep { delay: d, label: m.label.clone() });
        s = ConcreteState { locs: m.target.clone(), vals };
    }
    let final_delay = pick_delay(&good[n], &s.vals).ok_or(Error::EmptyResult)?;
    Ok(Trace { steps, final_delay })
}
