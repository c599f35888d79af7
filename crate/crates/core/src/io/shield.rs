use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{Arena, GameNet, Region, Solution, Strategy};
use crate::monitor::{FaultKind, FaultModel};
use crate::shield::{Roles, Shield, ShieldKind};
use crate::tioa::{Network, StatePredicate};
use crate::zones::{Bound, Federation, Zone};

use super::{component_from_file, component_to_file, to_canonical_json, ComponentFile};

/// Tag written into every shield file.
pub const SHIELD_FORMAT: &str = "tshield-shield/1";

/// A federation as closed DBM rows of raw bounds (`2c + 1` for `≤ c`,
/// `2c` for `< c`, `9223372036854775807` for no bound). Row and column 0
/// belong to the reference clock.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FederationFile {
    pub clocks: usize,
    pub zones: Vec<Vec<Vec<i64>>>,
}

impl FederationFile {
    pub fn from_federation(f: &Federation) -> FederationFile {
        let mut zones: Vec<Vec<Vec<i64>>> =
            f.zones().iter().map(|z| z.rows().iter().map(|r| r.iter().map(|b| b.raw()).collect()).collect()).collect();
        zones.sort();
        zones.dedup();
        FederationFile { clocks: f.clocks(), zones }
    }

    pub fn to_federation(&self, path: &str) -> Result<Federation> {
        let mut zs = Vec::with_capacity(self.zones.len());
        for (i, rows) in self.zones.iter().enumerate() {
            let rows: Vec<Vec<Bound>> = rows.iter().map(|r| r.iter().map(|&b| Bound::from_raw(b)).collect()).collect();
            let z = Zone::from_rows(&rows)
                .filter(|z| z.clocks() == self.clocks)
                .ok_or_else(|| perr(format!("{path}.zones[{i}]"), "malformed DBM"))?;
            zs.push(z);
        }
        Ok(Federation::from_zones(self.clocks, zs))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum PredicateFile {
    True,
    False,
    At { component: usize, location: usize },
    MonitorError(usize),
    Aligned(usize, usize),
    Local { component: usize, by_location: Vec<FederationFile> },
    Named(String),
    Not(Box<PredicateFile>),
    And(Vec<PredicateFile>),
    Or(Vec<PredicateFile>),
}

impl PredicateFile {
    pub fn from_predicate(p: &StatePredicate) -> PredicateFile {
        match p {
            StatePredicate::True => PredicateFile::True,
            StatePredicate::False => PredicateFile::False,
            StatePredicate::At { component, location } => {
                PredicateFile::At { component: *component, location: *location }
            }
            StatePredicate::MonitorError(c) => PredicateFile::MonitorError(*c),
            StatePredicate::Aligned(a, b) => PredicateFile::Aligned(*a, *b),
            StatePredicate::Local { component, by_location } => PredicateFile::Local {
                component: *component,
                by_location: by_location.iter().map(FederationFile::from_federation).collect(),
            },
            StatePredicate::Named(n) => PredicateFile::Named(n.clone()),
            StatePredicate::Not(q) => PredicateFile::Not(Box::new(PredicateFile::from_predicate(q))),
            StatePredicate::And(qs) => PredicateFile::And(qs.iter().map(PredicateFile::from_predicate).collect()),
            StatePredicate::Or(qs) => PredicateFile::Or(qs.iter().map(PredicateFile::from_predicate).collect()),
        }
    }

    pub fn to_predicate(&self, path: &str) -> Result<StatePredicate> {
        let all = |qs: &[PredicateFile]| -> Result<Vec<StatePredicate>> {
            qs.iter().enumerate().map(|(i, q)| q.to_predicate(&format!("{path}[{i}]"))).collect()
        };
        Ok(match self {
            PredicateFile::True => StatePredicate::True,
            PredicateFile::False => StatePredicate::False,
            PredicateFile::At { component, location } => {
                StatePredicate::At { component: *component, location: *location }
            }
            PredicateFile::MonitorError(c) => StatePredicate::MonitorError(*c),
            PredicateFile::Aligned(a, b) => StatePredicate::Aligned(*a, *b),
            PredicateFile::Local { component, by_location } => StatePredicate::Local {
                component: *component,
                by_location: by_location
                    .iter()
                    .enumerate()
                    .map(|(i, f)| f.to_federation(&format!("{path}.by_location[{i}]")))
                    .collect::<Result<_>>()?,
            },
            PredicateFile::Named(n) => StatePredicate::Named(n.clone()),
            PredicateFile::Not(q) => StatePredicate::Not(Box::new(q.to_predicate(path)?)),
            PredicateFile::And(qs) => StatePredicate::And(all(qs)?),
            PredicateFile::Or(qs) => StatePredicate::Or(all(qs)?),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaultModelFile {
    pub kind: FaultKind,
    pub description: String,
    pub model: ComponentFile,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PieceFile {
    pub zone: FederationFile,
    /// Allowed labels; `delay` marks that waiting is allowed.
    pub allowed: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateFile {
    /// One location name per network component.
    pub locations: Vec<String>,
    pub winning: FederationFile,
    pub strategy: Vec<PieceFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trigger: Option<FederationFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub goal: Option<FederationFile>,
}

/// Everything the runtime needs; loading never re-solves the game.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShieldFile {
    pub format: String,
    pub kind: ShieldKind,
    pub spec: ComponentFile,
    #[serde(default)]
    pub fault_models: Vec<FaultModelFile>,
    pub roles: Roles,
    /// Network components in order; their clocks are numbered consecutively.
    pub components: Vec<ComponentFile>,
    pub predicates: BTreeMap<String, PredicateFile>,
    pub controllable: Vec<String>,
    pub bad: PredicateFile,
    pub states: Vec<StateFile>,
}

fn perr(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Parse { path: path.into(), message: message.into() }
}

pub fn shield_to_file(sh: &Shield) -> ShieldFile {
    let net = sh.network();
    let sol = &sh.solution;
    let ff = FederationFile::from_federation;
    let mut states: Vec<StateFile> = sol
        .arena
        .states
        .iter()
        .enumerate()
        .map(|(s, d)| {
            let mut strategy: Vec<PieceFile> = sol.strategy.pieces[s]
                .iter()
                .map(|(f, a)| PieceFile { zone: ff(f), allowed: a.iter().cloned().collect() })
                .collect();
            strategy.sort_by(|a, b| a.zone.zones.cmp(&b.zone.zones).then(a.allowed.cmp(&b.allowed)));
            StateFile {
                locations: net.location_names(d),
                winning: ff(&sol.winning[s]),
                strategy,
                trigger: sol.trigger.as_ref().map(|t| ff(&t[s])),
                goal: sol.goal.as_ref().map(|g| ff(&g[s])),
            }
        })
        .collect();
    // The initial state stays first; the rest are sorted by name.
    states[1..].sort_by(|a, b| a.locations.cmp(&b.locations));
    ShieldFile {
        format: SHIELD_FORMAT.to_string(),
        kind: sh.kind.clone(),
        spec: component_to_file(&sh.spec),
        fault_models: sh
            .fault_models
            .iter()
            .map(|f| FaultModelFile {
                kind: f.kind.clone(),
                description: f.description.clone(),
                model: component_to_file(&f.tioa),
            })
            .collect(),
        roles: sh.roles.clone(),
        components: net.components.iter().map(component_to_file).collect(),
        predicates: net.predicates.iter().map(|(k, p)| (k.clone(), PredicateFile::from_predicate(p))).collect(),
        controllable: sh.game.controllable.iter().cloned().collect(),
        bad: PredicateFile::from_predicate(&sh.game.bad),
        states,
    }
}

pub fn shield_from_file(f: &ShieldFile) -> Result<Shield> {
    if f.format != SHIELD_FORMAT {
        return Err(perr("format", format!("expected `{SHIELD_FORMAT}`, found `{}`", f.format)));
    }
    let spec = component_from_file(&f.spec, "spec", false)?;
    let fault_models = f
        .fault_models
        .iter()
        .enumerate()
        .map(|(i, m)| {
            Ok(FaultModel {
                kind: m.kind.clone(),
                description: m.description.clone(),
                tioa: component_from_file(&m.model, &format!("fault_models[{i}].model"), true)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let comps = f
        .components
        .iter()
        .enumerate()
        .map(|(i, c)| component_from_file(c, &format!("components[{i}]"), true))
        .collect::<Result<Vec<_>>>()?;
    let mut net = Network::new(comps)?;
    for (k, p) in &f.predicates {
        net = net.with_predicate(k.clone(), p.to_predicate(&format!("predicates.{k}"))?);
    }
    let game = GameNet::new(net, f.controllable.iter().cloned().collect(), f.bad.to_predicate("bad")?)?;
    let net = &game.network;
    let roles_ok = f.roles.monitor < net.components.len()
        && f.roles.ctr < net.components.len()
        && f.roles.primed.is_none_or(|p| p < net.components.len())
        && f.roles.faults.iter().all(|&c| c < net.components.len());
    if !roles_ok {
        return Err(perr("roles", "component index out of range"));
    }

    let mut locs = Vec::with_capacity(f.states.len());
    for (i, st) in f.states.iter().enumerate() {
        if st.locations.len() != net.components.len() {
            return Err(perr(format!("states[{i}].locations"), "one location per component expected"));
        }
        let d = st
            .locations
            .iter()
            .zip(&net.components)
            .map(|(n, c)| c.location(n).ok_or_else(|| perr(format!("states[{i}].locations"), format!("unknown location `{n}`"))))
            .collect::<Result<Vec<usize>>>()?;
        locs.push(d);
    }
    let keep: HashSet<_> = locs.iter().cloned().collect();
    if !keep.contains(&net.initial()) {
        return Err(perr("states", "initial state missing"));
    }
    let arena = Arena::restricted(&game, &keep)?;
    let n = arena.len();
    let c = net.clock_count();
    let mut winning: Region = vec![Federation::empty(c); n];
    let mut pieces = vec![Vec::new(); n];
    let has_trigger = f.states.iter().any(|s| s.trigger.is_some());
    let has_goal = f.states.iter().any(|s| s.goal.is_some());
    let mut trigger: Region = vec![Federation::empty(c); n];
    let mut goal: Region = vec![Federation::empty(c); n];
    for (i, (st, d)) in f.states.iter().zip(&locs).enumerate() {
        let path = format!("states[{i}]");
        let s = arena.index[d];
        winning[s] = st.winning.to_federation(&format!("{path}.winning"))?;
        for (j, p) in st.strategy.iter().enumerate() {
            let fed = p.zone.to_federation(&format!("{path}.strategy[{j}].zone"))?;
            pieces[s].push((fed, p.allowed.iter().cloned().collect()));
        }
        if let Some(t) = &st.trigger {
            trigger[s] = t.to_federation(&format!("{path}.trigger"))?;
        }
        if let Some(g) = &st.goal {
            goal[s] = g.to_federation(&format!("{path}.goal"))?;
        }
    }
    let solution = Solution {
        arena,
        winning,
        strategy: Strategy { pieces },
        trigger: has_trigger.then_some(trigger),
        goal: has_goal.then_some(goal),
    };
    Ok(Shield { kind: f.kind.clone(), spec, game, roles: f.roles.clone(), fault_models, solution })
}

pub fn shield_to_string(sh: &Shield) -> String {
    to_canonical_json(&shield_to_file(sh))
}

pub fn parse_shield(text: &str) -> Result<Shield> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let f: ShieldFile = serde_path_to_error::deserialize(de).map_err(|e| perr(e.path().to_string(), e.inner().to_string()))?;
    shield_from_file(&f)
}

pub fn save_shield(path: &std::path::Path, sh: &Shield) -> Result<()> {
    std::fs::write(path, shield_to_string(sh)).map_err(|e| perr(path.display().to_string(), e.to_string()))
}

pub fn load_shield(path: &std::path::Path) -> Result<Shield> {
    let text = std::fs::read_to_string(path).map_err(|e| perr(path.display().to_string(), e.to_string()))?;
    parse_shield(&text)
}
