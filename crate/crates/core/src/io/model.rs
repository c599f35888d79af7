use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tioa::{Edge, Location, Tioa};
use crate::zones::{Constraint, Rel};

/// `clock rel bound`, or `clock - minus rel bound` (internal use only).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintFile {
    pub clock: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub minus: Option<String>,
    pub rel: Rel,
    pub bound: i64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocationFile {
    pub name: String,
    #[serde(default)]
    pub invariant: Vec<ConstraintFile>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub deadline: Vec<ConstraintFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeFile {
    pub src: String,
    #[serde(default)]
    pub guard: Vec<ConstraintFile>,
    pub action: String,
    #[serde(default)]
    pub resets: Vec<String>,
    pub dst: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub swap: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trigger: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub when: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentFile {
    pub name: String,
    #[serde(default)]
    pub clocks: Vec<String>,
    pub locations: Vec<LocationFile>,
    pub initial: String,
    #[serde(default)]
    pub inputs: Vec<String>,
    #[serde(default)]
    pub outputs: Vec<String>,
    #[serde(default)]
    pub edges: Vec<EdgeFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub err: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub components: Vec<ComponentFile>,
}

fn parse_err(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Parse { path: path.into(), message: message.into() }
}

fn constraint_to_file(t: &Tioa, c: &Constraint) -> ConstraintFile {
    let name = |i: usize| t.clocks[i - 1].clone();
    ConstraintFile { clock: name(c.clock.0), minus: c.minus.map(|m| name(m.0)), rel: c.rel, bound: c.bound }
}

fn constraint_from_file(t: &Tioa, c: &ConstraintFile, path: &str, internal: bool) -> Result<Constraint> {
    let clock = t.clock(&c.clock).ok_or_else(|| parse_err(path, format!("unknown clock `{}`", c.clock)))?;
    match &c.minus {
        None => Ok(Constraint::new(clock, c.rel, c.bound)),
        Some(_) if !internal => Err(parse_err(path, "clock differences are not allowed in model files")),
        Some(m) => {
            let minus = t.clock(m).ok_or_else(|| parse_err(path, format!("unknown clock `{m}`")))?;
            Ok(Constraint::diagonal(clock, minus, c.rel, c.bound))
        }
    }
}

pub fn component_to_file(t: &Tioa) -> ComponentFile {
    let loc = |i: usize| t.locations[i].name.clone();
    ComponentFile {
        name: t.name.clone(),
        clocks: t.clocks.clone(),
        locations: t
            .locations
            .iter()
            .map(|l| LocationFile {
                name: l.name.clone(),
                invariant: l.invariant.iter().map(|c| constraint_to_file(t, c)).collect(),
                deadline: l.deadline.iter().map(|c| constraint_to_file(t, c)).collect(),
                origin: l.origin.clone(),
            })
            .collect(),
        initial: loc(t.initial),
        inputs: t.inputs.clone(),
        outputs: t.outputs.clone(),
        edges: t
            .edges
            .iter()
            .map(|e| EdgeFile {
                src: loc(e.src),
                guard: e.guard.iter().map(|c| constraint_to_file(t, c)).collect(),
                action: e.label.clone(),
                resets: e.resets.iter().map(|r| t.clocks[r.0 - 1].clone()).collect(),
                dst: loc(e.dst),
                swap: e.swap.as_ref().map(|p| p[1..].iter().map(|&i| t.clocks[i - 1].clone()).collect()),
                trigger: e.trigger.clone(),
                when: e.when.clone(),
            })
            .collect(),
        err: t.err.map(loc),
    }
}

/// Converts a component; `internal` admits the fields only synthesized
/// artifacts use (deadlines, clock differences, triggers, ...).
pub fn component_from_file(f: &ComponentFile, path: &str, internal: bool) -> Result<Tioa> {
    let mut t = Tioa::new(f.name.clone());
    t.clocks = f.clocks.clone();
    t.inputs = f.inputs.clone();
    t.outputs = f.outputs.clone();
    for (i, l) in f.locations.iter().enumerate() {
        let lp = format!("{path}.locations[{i}]");
        if !internal && (!l.deadline.is_empty() || l.origin.is_some()) {
            return Err(parse_err(&lp, "deadlines and origins are not allowed in model files"));
        }
        let conv = |cs: &[ConstraintFile], what: &str| -> Result<Vec<Constraint>> {
            cs.iter()
                .enumerate()
                .map(|(k, c)| constraint_from_file(&t, c, &format!("{lp}.{what}[{k}]"), internal))
                .collect()
        };
        let invariant = conv(&l.invariant, "invariant")?;
        let deadline = conv(&l.deadline, "deadline")?;
        t.locations.push(Location { name: l.name.clone(), invariant, deadline, origin: l.origin.clone() });
    }
    let loc = |name: &str, p: &str| t.location(name).ok_or_else(|| parse_err(p, format!("unknown location `{name}`")));
    let initial = loc(&f.initial, &format!("{path}.initial"))?;
    let err = match &f.err {
        Some(e) if internal => Some(loc(e, &format!("{path}.err"))?),
        Some(_) => return Err(parse_err(format!("{path}.err"), "error locations are not allowed in model files")),
        None => None,
    };
    let mut edges = Vec::new();
    for (i, e) in f.edges.iter().enumerate() {
        let ep = format!("{path}.edges[{i}]");
        if !internal && (e.swap.is_some() || e.trigger.is_some() || e.when.is_some()) {
            return Err(parse_err(&ep, "swap, trigger and when are not allowed in model files"));
        }
        let src = loc(&e.src, &format!("{ep}.src"))?;
        let dst = loc(&e.dst, &format!("{ep}.dst"))?;
        let guard = e
            .guard
            .iter()
            .enumerate()
            .map(|(k, c)| constraint_from_file(&t, c, &format!("{ep}.guard[{k}]"), internal))
            .collect::<Result<Vec<_>>>()?;
        let resets = e
            .resets
            .iter()
            .map(|r| t.clock(r).ok_or_else(|| parse_err(format!("{ep}.resets"), format!("unknown clock `{r}`"))))
            .collect::<Result<Vec<_>>>()?;
        let swap = match &e.swap {
            None => None,
            Some(names) => {
                let mut p = vec![0];
                for n in names {
                    p.push(t.clock(n).ok_or_else(|| parse_err(format!("{ep}.swap"), format!("unknown clock `{n}`")))?.0);
                }
                Some(p)
            }
        };
        edges.push(Edge {
            src,
            dst,
            label: e.action.clone(),
            guard,
            resets,
            swap,
            trigger: e.trigger.clone(),
            when: e.when.clone(),
        });
    }
    t.edges = edges;
    t.initial = initial;
    t.err = err;
    Ok(t)
}

/// Parses a model document and validates every component.
pub fn parse_model(text: &str) -> Result<Vec<Tioa>> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: ModelFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        parse_err(path, format!("{inner} (line {}, column {})", inner.line(), inner.column()))
    })?;
    let mut out = Vec::new();
    for (i, c) in file.components.iter().enumerate() {
        let t = component_from_file(c, &format!("components[{i}]"), false)?;
        t.validate()?;
        t.check_deterministic()?;
        out.push(t);
    }
    Ok(out)
}

pub fn model_to_string(components: &[Tioa]) -> String {
    let file = ModelFile { components: components.iter().map(component_to_file).collect() };
    super::to_canonical_json(&file)
}

pub fn load_model(path: &std::path::Path) -> Result<Vec<Tioa>> {
    let text = std::fs::read_to_string(path).map_err(|e| parse_err(path.display().to_string(), e.to_string()))?;
    parse_model(&text)
}

pub fn save_model(path: &std::path::Path, components: &[Tioa]) -> Result<()> {
    std::fs::write(path, model_to_string(components)).map_err(|e| parse_err(path.display().to_string(), e.to_string()))
}

/// Loads a model that must contain exactly one component.
pub fn load_single(path: &std::path::Path) -> Result<Tioa> {
    let mut cs = load_model(path)?;
    if cs.len() != 1 {
        return Err(parse_err(path.display().to_string(), format!("expected one component, found {}", cs.len())));
    }
    Ok(cs.remove(0))
}
