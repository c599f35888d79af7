use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::zones::{ClockId, Constraint, Federation, Rel, Zone};

use super::{Edge, Tioa};

/// One location index per component.
pub type Discrete = Vec<usize>;

/// A symbolic predicate over network states; evaluated per location vector
/// into the federation of clock valuations where it holds.
#[derive(Clone, Debug, PartialEq)]
pub enum StatePredicate {
    True,
    False,
    At { component: usize, location: usize },
    /// The component is in its error location or past a deadline.
    MonitorError(usize),
    /// Both components sit in copies of the same location with equal
    /// clock values (clocks paired positionally).
    Aligned(usize, usize),
    /// Per-location federations over one component's own clocks.
    Local { component: usize, by_location: Vec<Federation> },
    Named(String),
    Not(Box<StatePredicate>),
    And(Vec<StatePredicate>),
    Or(Vec<StatePredicate>),
}

impl StatePredicate {
    pub fn not(self) -> Self {
        StatePredicate::Not(Box::new(self))
    }
}

/// One synchronised discrete step: a broadcast of `label` with every
/// participant's guard, reset and permutation folded together. An empty
/// label marks a pure guard (the case where no reaction fires).
#[derive(Clone, Debug, PartialEq)]
pub struct Step {
    pub label: String,
    pub guard: Federation,
    pub resets: Vec<ClockId>,
    pub perm: Option<Vec<usize>>,
}

impl Step {
    pub fn post(&self, f: &Federation) -> Federation {
        let mut out = f.intersect(&self.guard);
        if let Some(p) = &self.perm {
            out = out.permute(p);
        }
        out.reset(&self.resets)
    }

    pub fn pre(&self, x: &Federation) -> Federation {
        let mut out = x.reset_preimage(&self.resets);
        if let Some(p) = &self.perm {
            out = out.permute(&Zone::inverse_permutation(p));
        }
        out.intersect(&self.guard)
    }

    pub fn apply<T: Clone>(&self, v: &[T], zero: T) -> Vec<T> {
        let mut out = v.to_vec();
        if let Some(p) = &self.perm {
            for (i, val) in v.iter().enumerate() {
                out[p[i + 1] - 1] = val.clone();
            }
        }
        for r in &self.resets {
            out[r.0 - 1] = zero.clone();
        }
        out
    }
}

/// A discrete transition of the network: the initiating broadcast plus an
/// optional triggered reaction.
#[derive(Clone, Debug, PartialEq)]
pub struct Move {
    pub label: String,
    /// Component owning `label` as an output; `None` for environment labels.
    pub sender: Option<usize>,
    pub steps: Vec<Step>,
    pub target: Discrete,
}

impl Move {
    /// Labels broadcast by this move, in order.
    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.steps.iter().map(|s| s.label.as_str()).filter(|l| !l.is_empty())
    }

    /// The label of the triggered reaction, if one fires.
    pub fn reaction(&self) -> Option<&str> {
        self.steps.get(1).map(|s| s.label.as_str()).filter(|l| !l.is_empty())
    }

    pub fn post(&self, f: &Federation) -> Federation {
        self.steps.iter().fold(f.clone(), |acc, s| s.post(&acc))
    }

    pub fn pre(&self, x: &Federation) -> Federation {
        self.steps.iter().rev().fold(x.clone(), |acc, s| s.pre(&acc))
    }
}

/// A broadcast network of timed I/O automata. Global clock `offset(c) + i`
/// is clock `i` of component `c`.
#[derive(Clone, Debug)]
pub struct Network {
    pub components: Vec<Tioa>,
    offsets: Vec<usize>,
    clocks: usize,
    pub predicates: BTreeMap<String, StatePredicate>,
}

struct Part {
    guard: Federation,
    target: Discrete,
    resets: Vec<ClockId>,
    perm: Option<Vec<usize>>,
}

impl Network {
    pub fn new(components: Vec<Tioa>) -> Result<Network> {
        let mut owners: BTreeMap<&str, &str> = BTreeMap::new();
        for c in &components {
            c.validate()?;
            for o in &c.outputs {
                if let Some(prev) = owners.insert(o, &c.name) {
                    return Err(Error::Validation {
                        model: c.name.clone(),
                        reason: format!("output `{o}` is also owned by `{prev}`"),
                    });
                }
            }
        }
        let mut offsets = Vec::with_capacity(components.len());
        let mut clocks = 0;
        for c in &components {
            offsets.push(clocks);
            clocks += c.clock_count();
        }
        Ok(Network { components, offsets, clocks, predicates: BTreeMap::new() })
    }

    pub fn with_predicate(mut self, name: impl Into<String>, p: StatePredicate) -> Self {
        self.predicates.insert(name.into(), p);
        self
    }

    /// Every `when` on an edge must name a predicate.
    pub fn check_predicates(&self) -> Result<()> {
        for c in &self.components {
            for e in &c.edges {
                if let Some(w) = &e.when {
                    if !self.predicates.contains_key(w) {
                        return Err(Error::Validation {
                            model: c.name.clone(),
                            reason: format!("unknown predicate `{w}`"),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn clock_count(&self) -> usize {
        self.clocks
    }

    pub fn offset(&self, component: usize) -> usize {
        self.offsets[component]
    }

    pub fn component(&self, name: &str) -> Option<usize> {
        self.components.iter().position(|c| c.name == name)
    }

    /// Qualified clock names `component.clock`.
    pub fn clock_names(&self) -> Vec<String> {
        self.components
            .iter()
            .flat_map(|c| c.clocks.iter().map(move |x| format!("{}.{}", c.name, x)))
            .collect()
    }

    pub fn initial(&self) -> Discrete {
        self.components.iter().map(|c| c.initial).collect()
    }

    pub fn location_names(&self, d: &Discrete) -> Vec<String> {
        d.iter().zip(&self.components).map(|(&l, c)| c.locations[l].name.clone()).collect()
    }

    /// All labels of the network, sorted.
    pub fn alphabet(&self) -> BTreeSet<String> {
        self.components.iter().flat_map(|c| c.labels().cloned()).collect()
    }

    pub fn sender(&self, label: &str) -> Option<usize> {
        self.components.iter().position(|c| c.is_output(label))
    }

    pub fn lift(&self, component: usize, z: &Zone) -> Zone {
        z.embed(self.clocks, self.offsets[component])
    }

    fn lift_constraints(&self, component: usize, cs: &[Constraint]) -> Zone {
        let off = self.offsets[component];
        let shifted: Vec<Constraint> = cs.iter().map(|c| c.shifted(off)).collect();
        Zone::from_constraints(self.clocks, &shifted)
    }

    pub fn invariant(&self, d: &Discrete) -> Zone {
        let mut cs = Vec::new();
        for (c, &l) in d.iter().enumerate() {
            let off = self.offsets[c];
            cs.extend(self.components[c].locations[l].invariant.iter().map(|k| k.shifted(off)));
        }
        Zone::from_constraints(self.clocks, &cs)
    }

    /// Valuations where component `c` at `loc` has missed its deadline.
    pub fn late(&self, c: usize, loc: usize) -> Federation {
        let dl = &self.components[c].locations[loc].deadline;
        if dl.is_empty() {
            return Federation::empty(self.clocks);
        }
        let off = self.offsets[c];
        Federation::from_zones(
            self.clocks,
            dl.iter().map(|k| Zone::from_constraints(self.clocks, &[k.negate().shifted(off)])),
        )
    }

    /// Largest constant per global clock (index 0 unused), including
    /// constants of local predicates.
    pub fn max_constants(&self) -> Vec<i64> {
        let mut k = vec![0; self.clocks + 1];
        for (c, comp) in self.components.iter().enumerate() {
            let off = self.offsets[c];
            for (i, v) in comp.max_constants().into_iter().enumerate().skip(1) {
                k[off + i] = k[off + i].max(v);
            }
        }
        fn walk(p: &StatePredicate, net: &Network, k: &mut [i64]) {
            match p {
                StatePredicate::Local { component, by_location } => {
                    let off = net.offsets[*component];
                    let m = by_location.iter().map(Federation::max_constant).max().unwrap_or(0);
                    for i in 1..=net.components[*component].clock_count() {
                        k[off + i] = k[off + i].max(m);
                    }
                }
                StatePredicate::Not(q) => walk(q, net, k),
                StatePredicate::And(qs) | StatePredicate::Or(qs) => qs.iter().for_each(|q| walk(q, net, k)),
                _ => {}
            }
        }
        for p in self.predicates.values() {
            walk(p, self, &mut k);
        }
        k
    }

    pub fn max_constant(&self) -> i64 {
        self.max_constants().into_iter().max().unwrap_or(0)
    }

    pub fn eval(&self, p: &StatePredicate, d: &Discrete) -> Federation {
        let n = self.clocks;
        match p {
            StatePredicate::True => Federation::universe(n),
            StatePredicate::False => Federation::empty(n),
            StatePredicate::At { component, location } => {
                if d[*component] == *location {
                    Federation::universe(n)
                } else {
                    Federation::empty(n)
                }
            }
            StatePredicate::MonitorError(c) => {
                let comp = &self.components[*c];
                if comp.err == Some(d[*c]) {
                    Federation::universe(n)
                } else {
                    self.late(*c, d[*c])
                }
            }
            StatePredicate::Aligned(a, b) => {
                let (ca, cb) = (&self.components[*a], &self.components[*b]);
                let (la, lb) = (d[*a], d[*b]);
                if ca.err == Some(la)
                    || cb.err == Some(lb)
                    || ca.clock_count() != cb.clock_count()
                    || ca.locations[la].origin_name() != cb.locations[lb].origin_name()
                {
                    return Federation::empty(n);
                }
                let (oa, ob) = (self.offsets[*a], self.offsets[*b]);
                let cs: Vec<Constraint> = (1..=ca.clock_count())
                    .flat_map(|i| {
                        let (x, y) = (ClockId(oa + i), ClockId(ob + i));
                        [Constraint::diagonal(x, y, Rel::Le, 0), Constraint::diagonal(x, y, Rel::Ge, 0)]
                    })
                    .collect();
                Federation::from_constraints(n, &cs)
            }
            StatePredicate::Local { component, by_location } => by_location
                .get(d[*component])
                .map(|f| f.embed(n, self.offsets[*component]))
                .unwrap_or_else(|| Federation::empty(n)),
            StatePredicate::Named(name) => match self.predicates.get(name) {
                Some(q) => self.eval(q, d),
                None => Federation::empty(n),
            },
            StatePredicate::Not(q) => self.eval(q, d).complement(),
            StatePredicate::And(qs) => {
                let mut acc = Federation::universe(n);
                for q in qs {
                    if acc.is_empty() {
                        break;
                    }
                    acc = acc.intersect(&self.eval(q, d));
                }
                acc
            }
            StatePredicate::Or(qs) => {
                let mut acc = Federation::empty(n);
                for q in qs {
                    acc = acc.union(&self.eval(q, d));
                }
                acc
            }
        }
    }

    fn edge_option(&self, c: usize, e: &Edge, d: &Discrete) -> Part {
        let mut guard = Federation::from_zone(self.lift_constraints(c, &e.guard));
        if let Some(w) = &e.when {
            guard = guard.intersect(&self.eval(&StatePredicate::Named(w.clone()), d));
        }
        let off = self.offsets[c];
        let mut target = d.clone();
        target[c] = e.dst;
        let perm = e.swap.as_ref().map(|s| {
            let mut p: Vec<usize> = (0..=self.clocks).collect();
            for i in 1..s.len() {
                p[off + i] = off + s[i];
            }
            p
        });
        Part { guard, target, resets: e.resets.iter().map(|r| ClockId(off + r.0)).collect(), perm }
    }

    /// Combines `base` with every receiver of `label` (all components other
    /// than `sender` listing it as input); receivers with no enabled edge
    /// ignore the broadcast.
    fn with_receivers(&self, d: &Discrete, label: &str, sender: Option<usize>, base: Part) -> Vec<Part> {
        let mut acc = vec![base];
        for (c, comp) in self.components.iter().enumerate() {
            if Some(c) == sender || !comp.is_input(label) {
                continue;
            }
            let mut opts: Vec<Part> = comp
                .edges_from(d[c], label)
                .filter(|e| e.trigger.is_none())
                .map(|e| self.edge_option(c, e, d))
                .filter(|o| !o.guard.is_empty())
                .collect();
            let mut covered = Federation::empty(self.clocks);
            for o in &opts {
                covered = covered.union(&o.guard);
            }
            let ignore = covered.complement();
            if !ignore.is_empty() {
                opts.push(Part { guard: ignore, target: d.clone(), resets: Vec::new(), perm: None });
            }
            let mut next = Vec::new();
            for a in &acc {
                for o in &opts {
                    let guard = a.guard.intersect(&o.guard);
                    if guard.is_empty() {
                        continue;
                    }
                    let mut target = a.target.clone();
                    target[c] = o.target[c];
                    let mut resets = a.resets.clone();
                    resets.extend(o.resets.iter().copied());
                    let perm = merge_perm(&a.perm, &o.perm);
                    next.push(Part { guard, target, resets, perm });
                }
            }
            acc = next;
        }
        acc
    }

    fn step(label: &str, o: Part) -> (Step, Discrete) {
        let mut resets = o.resets;
        resets.sort();
        resets.dedup();
        (Step { label: label.to_string(), guard: o.guard, resets, perm: o.perm }, o.target)
    }

    /// Reactions triggered by a broadcast of `label` landing in `d`.
    fn reactions(&self, d: &Discrete, label: &str) -> Vec<(Option<Step>, Discrete)> {
        let mut out = Vec::new();
        let mut covered = Federation::empty(self.clocks);
        let mut any = false;
        for (c, comp) in self.components.iter().enumerate() {
            for e in comp.edges.iter().filter(|e| e.src == d[c] && e.trigger.as_deref() == Some(label)) {
                any = true;
                let base = self.edge_option(c, e, d);
                if base.guard.is_empty() {
                    continue;
                }
                covered = covered.union(&base.guard);
                for o in self.with_receivers(d, &e.label, Some(c), base) {
                    let (s, t) = Network::step(&e.label, o);
                    out.push((Some(s), t));
                }
            }
        }
        if !any {
            return vec![(None, d.clone())];
        }
        let rest = covered.complement();
        if !rest.is_empty() {
            out.push((
                Some(Step { label: String::new(), guard: rest, resets: Vec::new(), perm: None }),
                d.clone(),
            ));
        }
        out
    }

    /// All discrete moves from `d`, in deterministic order.
    pub fn moves(&self, d: &Discrete) -> Vec<Move> {
        let mut out = Vec::new();
        for label in self.alphabet() {
            let sender = self.sender(&label);
            let firsts: Vec<Part> = match sender {
                Some(s) => self.components[s]
                    .edges_from(d[s], &label)
                    .filter(|e| e.trigger.is_none())
                    .map(|e| self.edge_option(s, e, d))
                    .filter(|o| !o.guard.is_empty())
                    .flat_map(|o| self.with_receivers(d, &label, Some(s), o))
                    .collect(),
                None => {
                    let base = Part {
                        guard: Federation::universe(self.clocks),
                        target: d.clone(),
                        resets: Vec::new(),
                        perm: None,
                    };
                    self.with_receivers(d, &label, None, base)
                }
            };
            for o in firsts {
                let (first, mid) = Network::step(&label, o);
                for (second, target) in self.reactions(&mid, &label) {
                    let mut steps = vec![first.clone()];
                    if let Some(s) = second {
                        steps.push(s);
                    }
                    out.push(Move { label: label.clone(), sender, steps, target });
                }
            }
        }
        out
    }

    /// Successor valuations of `f` under `m`, restricted to the target invariant.
    pub fn post(&self, m: &Move, f: &Federation) -> Federation {
        m.post(f).intersect_zone(&self.invariant(&m.target))
    }

    /// Valuations from which `m` leads into `x` (and the target invariant).
    pub fn pre(&self, m: &Move, x: &Federation) -> Federation {
        m.pre(&x.intersect_zone(&self.invariant(&m.target)))
    }
}

fn merge_perm(a: &Option<Vec<usize>>, b: &Option<Vec<usize>>) -> Option<Vec<usize>> {
    match (a, b) {
        (None, None) => None,
        (Some(p), None) | (None, Some(p)) => Some(p.clone()),
        (Some(p), Some(q)) => {
            // Components own disjoint clocks, so each moves only its own.
            let mut r = p.clone();
            for (i, &qi) in q.iter().enumerate() {
                if qi != i {
                    r[i] = qi;
                }
            }
            Some(r)
        }
    }
}
