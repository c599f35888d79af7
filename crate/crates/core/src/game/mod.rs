//! Timed games over broadcast networks: safety fixpoints, boundaries,
//! time-bounded leads-to, and maximally permissive strategies.

mod ops;
pub mod oracle;

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};

use crate::error::{Error, Result};
use crate::tioa::{reachable, Discrete, Move, Network, StatePredicate};
use crate::zones::{ClockId, Constraint, Federation, Rel, Zone};

pub use ops::{delay_interior, pred_t};

/// The pseudo-action standing for letting time pass.
pub const DELAY: &str = "delay";

/// Largest number of discrete states explored.
const MAX_STATES: usize = 200_000;
/// Largest number of fixpoint updates before giving up.
const MAX_UPDATES: usize = 5_000_000;

/// A network with a partition of labels into controllable (listed) and
/// uncontrollable (all others, including environment inputs).
#[derive(Clone, Debug)]
pub struct GameNet {
    pub network: Network,
    pub controllable: BTreeSet<String>,
    pub bad: StatePredicate,
}

impl GameNet {
    pub fn new(network: Network, controllable: BTreeSet<String>, bad: StatePredicate) -> Result<GameNet> {
        network.check_predicates()?;
        for c in &controllable {
            if network.sender(c).is_none() {
                return Err(Error::Validation {
                    model: "game".into(),
                    reason: format!("controllable `{c}` is not an output of any component"),
                });
            }
        }
        Ok(GameNet { network, controllable, bad })
    }

    pub fn is_controllable(&self, label: &str) -> bool {
        self.controllable.contains(label)
    }

    pub fn clock_count(&self) -> usize {
        self.network.clock_count()
    }
}

#[derive(Clone, Debug)]
pub struct ArenaMove {
    pub mv: Move,
    pub target: usize,
    pub controllable: bool,
    /// Leaves location vector and clocks unchanged (e.g. an ignored input).
    pub stutter: bool,
}

/// The discrete skeleton of a game: every location vector reachable while
/// ignoring clocks, with its moves.
#[derive(Clone, Debug)]
pub struct Arena {
    pub states: Vec<Discrete>,
    pub index: HashMap<Discrete, usize>,
    pub moves: Vec<Vec<ArenaMove>>,
    pub inv: Vec<Zone>,
    /// Reachable valuations per state, when the arena was built from a
    /// forward exploration.
    pub reach: Option<Region>,
    preds: Vec<Vec<usize>>,
}

/// One federation per arena state.
pub type Region = Vec<Federation>;

impl Arena {
    pub fn build(game: &GameNet) -> Result<Arena> {
        Arena::explore(game, None)
    }

    /// Like [`Arena::build`] but keeps only states reachable with clocks
    /// taken into account. Sound for games played from the initial state,
    /// since the reachable set is closed under delays and moves.
    pub fn build_reachable(game: &GameNet) -> Result<Arena> {
        let r = reachable(&game.network)?;
        let mut arena = Arena::explore(game, Some(&|d: &Discrete| r.contains_key(d)))?;
        arena.reach = Some(arena.states.iter().map(|d| r[d].clone()).collect());
        Ok(arena)
    }

    /// The arena over exactly the given location vectors (which must include
    /// the initial one), as stored in shield files.
    pub fn restricted(game: &GameNet, keep: &HashSet<Discrete>) -> Result<Arena> {
        Arena::explore(game, Some(&|d: &Discrete| keep.contains(d)))
    }

    fn explore(game: &GameNet, only: Option<&dyn Fn(&Discrete) -> bool>) -> Result<Arena> {
        let net = &game.network;
        let init = net.initial();
        let mut arena =
            Arena { states: vec![], index: HashMap::new(), moves: vec![], inv: vec![], reach: None, preds: vec![] };
        arena.add(net, init);
        let mut i = 0;
        while i < arena.states.len() {
            let d = arena.states[i].clone();
            let mut out = Vec::new();
            for mv in net.moves(&d) {
                if only.is_some_and(|keep| !keep(&mv.target)) {
                    continue;
                }
                let target = match arena.index.get(&mv.target) {
                    Some(&t) => t,
                    None => {
                        if arena.states.len() >= MAX_STATES {
                            return Err(Error::NoConvergence(MAX_STATES));
                        }
                        arena.add(net, mv.target.clone())
                    }
                };
                let controllable = game.is_controllable(&mv.label);
                let stutter = target == i && mv.steps.iter().all(|st| st.resets.is_empty() && st.perm.is_none());
                out.push(ArenaMove { mv, target, controllable, stutter });
            }
            arena.moves[i] = out;
            i += 1;
        }
        for s in 0..arena.states.len() {
            let mut ts: Vec<usize> = arena.moves[s].iter().map(|m| m.target).collect();
            ts.sort_unstable();
            ts.dedup();
            for t in ts {
                arena.preds[t].push(s);
            }
        }
        Ok(arena)
    }

    fn add(&mut self, net: &Network, d: Discrete) -> usize {
        let i = self.states.len();
        self.index.insert(d.clone(), i);
        self.inv.push(net.invariant(&d));
        self.states.push(d);
        self.moves.push(Vec::new());
        self.preds.push(Vec::new());
        i
    }

    /// Valuations satisfying the invariant and not `bad` (and reachable, if known).
    pub(crate) fn safe_start(&self, net: &Network, bad: &StatePredicate) -> Region {
        let bad = self.eval(net, bad);
        (0..self.len())
            .map(|s| {
                let mut f = Federation::from_zone(self.inv[s].clone()).subtract(&bad[s]);
                if let Some(r) = &self.reach {
                    f = f.intersect(&r[s]);
                }
                f.reduce()
            })
            .collect()
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn eval(&self, net: &Network, p: &StatePredicate) -> Region {
        self.states.iter().map(|d| net.eval(p, d)).collect()
    }

    fn pre_state(&self, net: &Network, s: usize, x: &Region, controllable: bool) -> Federation {
        let mut out = Federation::empty(net.clock_count());
        // Stuttering moves never change the state, so they can neither win
        // nor escape (time cannot be blocked by repeating them).
        for m in self.moves[s].iter().filter(|m| m.controllable == controllable && !m.stutter) {
            if x[m.target].is_empty() {
                continue;
            }
            out = out.union(&net.pre(&m.mv, &x[m.target]));
        }
        out
    }

    /// States where some uncontrollable move reaches `x`.
    pub fn upre(&self, net: &Network, x: &Region) -> Region {
        (0..self.len()).map(|s| self.pre_state(net, s, x, false)).collect()
    }

    /// States where some controllable move reaches `x`.
    pub fn cpre(&self, net: &Network, x: &Region) -> Region {
        (0..self.len()).map(|s| self.pre_state(net, s, x, true)).collect()
    }

    /// Valuations at `s` from which controllable moves labelled `label` reach `x`.
    fn label_pre(&self, net: &Network, s: usize, x: &Region) -> BTreeMap<String, Federation> {
        let mut out: BTreeMap<String, Federation> = BTreeMap::new();
        for m in self.moves[s].iter().filter(|m| m.controllable) {
            let p = net.pre(&m.mv, &x[m.target]);
            if p.is_empty() {
                continue;
            }
            let e = out.entry(m.mv.label.clone()).or_insert_with(|| Federation::empty(net.clock_count()));
            *e = e.union(&p);
        }
        out
    }
}

fn complement_all(x: &Region) -> Region {
    x.iter().map(Federation::complement).collect()
}

/// Greatest fixpoint of safe states. `sinks` are winning outright (used for
/// the attractor part of leads-to games).
fn safety_fixpoint(arena: &Arena, net: &Network, init: Region, sinks: Option<&Region>) -> Result<Region> {
    let n = arena.len();
    let mut x = init;
    let mut not_x = complement_all(&x);
    let mut queue: VecDeque<usize> = (0..n).collect();
    let mut queued = vec![true; n];
    let mut updates = 0;
    while let Some(s) = queue.pop_front() {
        queued[s] = false;
        if x[s].is_empty() {
            continue;
        }
        updates += 1;
        if updates > MAX_UPDATES {
            return Err(Error::NoConvergence(MAX_UPDATES));
        }
        let escape = not_x[s].union(&arena.pre_state(net, s, &not_x, false));
        let mut good = arena.pre_state(net, s, &x, true);
        if let Some(a) = sinks {
            good = good.union(&a[s]);
        }
        let forever = escape.union(&Federation::from_zone(arena.inv[s].clone()).complement()).down().complement();
        let mut keep = pred_t(&good, &escape).union(&forever);
        if let Some(a) = sinks {
            keep = keep.union(&a[s]);
        }
        let next = x[s].intersect(&keep);
        if !x[s].is_subset(&next) {
            x[s] = next.reduce();
            not_x[s] = x[s].complement();
            for &p in &arena.preds[s] {
                if !queued[p] {
                    queued[p] = true;
                    queue.push_back(p);
                }
            }
            if !queued[s] {
                queued[s] = true;
                queue.push_back(s);
            }
        }
    }
    Ok(x)
}

/// A memoryless strategy: per arena state, disjoint pieces of the winning
/// region with the controllable labels (and possibly [`DELAY`]) allowed there.
#[derive(Clone, Debug, PartialEq)]
pub struct Strategy {
    pub pieces: Vec<Vec<(Federation, BTreeSet<String>)>>,
}

impl Strategy {
    /// Allowed labels at `(s, v)`, or `None` outside the winning region.
    pub fn allowed<T: crate::ClockValue>(&self, s: usize, v: &[T]) -> Option<&BTreeSet<String>> {
        self.pieces[s].iter().find(|(f, _)| f.contains(v)).map(|(_, a)| a)
    }
}

/// Splits `within` into pieces with constant membership in each named set.
pub fn partition(within: &Federation, sets: &[(String, Federation)]) -> Vec<(Federation, BTreeSet<String>)> {
    let mut pieces = vec![(within.clone(), BTreeSet::new())];
    for (name, f) in sets {
        let mut next = Vec::new();
        for (p, names) in pieces {
            let inside = p.intersect(f).reduce();
            let outside = p.subtract(f).reduce();
            if !inside.is_empty() {
                let mut n2 = names.clone();
                n2.insert(name.clone());
                next.push((inside, n2));
            }
            if !outside.is_empty() {
                next.push((outside, names));
            }
        }
        pieces = next;
    }
    pieces.retain(|(p, _)| !p.is_empty());
    pieces
}

fn safety_pieces(arena: &Arena, net: &Network, s: usize, within: &Federation, w: &Region) -> Vec<(Federation, BTreeSet<String>)> {
    let mut sets: Vec<(String, Federation)> = arena.label_pre(net, s, w).into_iter().collect();
    sets.push((DELAY.to_string(), delay_interior(&w[s])));
    partition(within, &sets)
}

/// A solved game.
#[derive(Clone, Debug)]
pub struct Solution {
    pub arena: Arena,
    pub winning: Region,
    pub strategy: Strategy,
    /// Leads-to games only: the trigger region and its attractor layers.
    pub trigger: Option<Region>,
    pub goal: Option<Region>,
}

impl Solution {
    pub fn state(&self, d: &Discrete) -> Option<usize> {
        self.arena.index.get(d).copied()
    }

    pub fn is_winning<T: crate::ClockValue>(&self, d: &Discrete, v: &[T]) -> bool {
        self.state(d).is_some_and(|s| self.winning[s].contains(v))
    }

    /// Winning states where every positive delay leaves the winning region.
    pub fn boundary(&self) -> Region {
        boundary(&self.winning)
    }
}

pub fn boundary(w: &Region) -> Region {
    w.iter().map(|f| f.subtract(&delay_interior(f)).reduce()).collect()
}

fn initial_check(arena: &Arena, net: &Network, w: &Region) -> Result<()> {
    let zero = Zone::zero(net.clock_count());
    if !w[0].intersect_zone(&zero).is_empty() {
        Ok(())
    } else {
        Err(Error::InitialStateLosing(net.location_names(&arena.states[0]).join(", ")))
    }
}

/// Maximally permissive safety: avoid `game.bad` forever.
pub fn solve_safety(game: &GameNet) -> Result<Solution> {
    let net = &game.network;
    let arena = Arena::build(game)?;
    let init = arena.safe_start(net, &game.bad);
    let w = safety_fixpoint(&arena, net, init, None)?;
    initial_check(&arena, net, &w)?;
    let pieces = (0..arena.len()).map(|s| safety_pieces(&arena, net, s, &w[s], &w)).collect();
    Ok(Solution { arena, winning: w, strategy: Strategy { pieces }, trigger: None, goal: None })
}

/// Attractor layers: `layers[0]` is the goal, each further layer adds the
/// states that can force the previous one.
///
/// The controller answers every uncontrollable move before anything else
/// happens at that instant, so such a move only escapes when it lands where
/// no immediate controllable move leads back into the attractor.
fn attractor(arena: &Arena, net: &Network, goal: &Region, within: &Region) -> Result<Vec<Region>> {
    let n = arena.len();
    let mut layers = vec![goal.clone()];
    let not_within = complement_all(within);
    loop {
        if layers.len() > 100_000 {
            return Err(Error::NoConvergence(layers.len()));
        }
        let y = layers.last().expect("non-empty");
        let cp = arena.cpre(net, y);
        let g: Region = (0..n).map(|s| y[s].union(&cp[s]).intersect(&within[s]).reduce()).collect();
        let answered = complement_all(&g);
        let up = arena.upre(net, &answered);
        let mut next = Vec::with_capacity(n);
        let mut grew = false;
        for s in 0..n {
            let b = up[s].union(&not_within[s]);
            let add = pred_t(&g[s], &b).union(&g[s]).intersect(&within[s]);
            let merged = if add.is_subset(&y[s]) {
                y[s].clone()
            } else {
                grew = true;
                y[s].union(&add).reduce()
            };
            next.push(merged);
        }
        if !grew {
            return Ok(layers);
        }
        layers.push(next);
    }
}

/// Safety for `game.bad` together with: from every reachable `trigger`
/// state, `goal` is forced (within the region `bound_ok`, used to encode a
/// time bound). `trigger` must be closed under delays and moves.
pub fn solve_leadsto(
    game: &GameNet,
    trigger: &StatePredicate,
    goal: &StatePredicate,
    bound_ok: Option<&StatePredicate>,
) -> Result<Solution> {
    let net = &game.network;
    let arena = Arena::build_reachable(game)?;
    let n = arena.len();
    let init = arena.safe_start(net, &game.bad);
    let w_safe = safety_fixpoint(&arena, net, init.clone(), None)?;
    let trig = arena.eval(net, trigger);
    let ok = match bound_ok {
        Some(p) => arena.eval(net, p),
        None => (0..n).map(|_| Federation::universe(net.clock_count())).collect(),
    };
    let within: Region = (0..n).map(|s| trig[s].intersect(&w_safe[s]).intersect(&ok[s]).reduce()).collect();
    let goal_r: Region = arena.eval(net, goal).iter().zip(&within).map(|(g, w)| g.intersect(w).reduce()).collect();
    let layers = attractor(&arena, net, &goal_r, &within)?;
    let attr = layers.last().expect("non-empty").clone();
    let start: Region = (0..n).map(|s| init[s].subtract(&trig[s].subtract(&attr[s]))).collect();
    let w = safety_fixpoint(&arena, net, start, Some(&attr))?;
    initial_check(&arena, net, &w)?;

    let mut pieces = Vec::with_capacity(n);
    for s in 0..n {
        let mut ps = safety_pieces(&arena, net, s, &w[s].subtract(&trig[s]).reduce(), &w);
        // At the goal: stay safe until control is handed back.
        ps.extend(safety_pieces(&arena, net, s, &goal_r[s], &w_safe));
        // Once recovered the time bound no longer applies.
        let after = trig[s].intersect(&w_safe[s]).subtract(&attr[s]).reduce();
        ps.extend(safety_pieces(&arena, net, s, &after, &w_safe));
        for k in 1..layers.len() {
            let ring = layers[k][s].subtract(&layers[k - 1][s]).reduce();
            if ring.is_empty() {
                continue;
            }
            let mut sets: Vec<(String, Federation)> = arena.label_pre(net, s, &layers[k - 1]).into_iter().collect();
            sets.push((DELAY.to_string(), delay_interior(&layers[k][s])));
            ps.extend(partition(&ring, &sets));
        }
        pieces.push(ps);
    }
    Ok(Solution { arena, winning: w, strategy: Strategy { pieces }, trigger: Some(trig), goal: Some(goal_r) })
}

/// `∀i. fm_i in error ∨ fm_i aligned with primed` over the given components.
pub fn recovery_goal(fault_monitors: &[usize], primed: usize) -> StatePredicate {
    StatePredicate::And(
        fault_monitors
            .iter()
            .map(|&f| StatePredicate::Or(vec![StatePredicate::MonitorError(f), StatePredicate::Aligned(f, primed)]))
            .collect(),
    )
}

/// Time elapsed since `monitor` entered its error region is at most `t`.
///
/// Assumes the monitor's error edges reset all its clocks, so at `ERR` the
/// first clock measures the time since the error; past a deadline `x <= c`
/// the lateness is `x - c`.
pub fn elapsed_within(net: &Network, monitor: usize, t: i64) -> StatePredicate {
    let comp = &net.components[monitor];
    let by_location = comp
        .locations
        .iter()
        .enumerate()
        .map(|(l, loc)| {
            let k = comp.clock_count();
            if Some(l) == comp.err {
                if k == 0 {
                    return Federation::universe(0);
                }
                return Federation::from_constraints(k, &[Constraint::new(ClockId(1), Rel::Le, t)]);
            }
            let cs: Vec<Constraint> =
                loc.deadline.iter().map(|c| Constraint::new(c.clock, Rel::Le, c.bound + t)).collect();
            Federation::from_constraints(k, &cs)
        })
        .collect();
    StatePredicate::Local { component: monitor, by_location }
}
