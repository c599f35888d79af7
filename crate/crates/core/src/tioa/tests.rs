use super::*;
use crate::error::Error;
use crate::testutil::{model, q, t};
use crate::zones::{Rel, Zone};

fn x() -> ClockId {
    ClockId(1)
}

#[test]
fn completion_adds_on_loop_in_on() {
    let spec = model("lightswitch.json");
    let on = spec.location("ON").unwrap();
    assert_eq!(spec.edges_from(on, "on").count(), 0);
    let done = spec.complete_inputs();
    let loops: Vec<_> = done.edges_from(on, "on").collect();
    assert_eq!(loops.len(), 1);
    assert_eq!(loops[0].dst, on);
    assert!(loops[0].guard.is_empty() && loops[0].resets.is_empty());
    assert_eq!(done.complete_inputs(), done);
    done.check_deterministic().unwrap();
}

#[test]
fn completion_fills_partial_guard() {
    let mut a = Tioa::new("A");
    a.clocks = vec!["x".into()];
    a.locations = vec![Location::new("L")];
    a.inputs = vec!["i".into()];
    a.edges = vec![Edge::new(0, "i", 0).guard(vec![Constraint::new(x(), Rel::Ge, 2)]).resets(vec![x()])];
    let done = a.complete_inputs();
    assert_eq!(done.edges.len(), 2);
    assert_eq!(done.edges[1].guard, vec![Constraint::new(x(), Rel::Lt, 2)]);
    assert!(done.enabled(0, "i").complement().is_empty());
}

#[test]
fn determinism_rejects_overlap() {
    let mut a = Tioa::new("A");
    a.clocks = vec!["x".into()];
    a.locations = vec![Location::new("L"), Location::new("M")];
    a.outputs = vec!["o".into()];
    a.edges = vec![Edge::new(0, "o", 0), Edge::new(0, "o", 1)];
    assert!(matches!(a.check_deterministic(), Err(Error::Nondeterministic { .. })));
    a.edges[0].guard = vec![Constraint::new(x(), Rel::Lt, 1)];
    a.edges[1].guard = vec![Constraint::new(x(), Rel::Ge, 1)];
    a.check_deterministic().unwrap();
    model("lightswitch.json").check_deterministic().unwrap();
    model("spec2.json").check_deterministic().unwrap();
    model("fig7.json").check_deterministic().unwrap();
}

#[test]
fn validate_rejects_lower_bound_invariant() {
    let mut a = model("lightswitch.json");
    a.locations[0].invariant = vec![Constraint::new(x(), Rel::Ge, 1)];
    assert!(matches!(a.validate(), Err(Error::Validation { .. })));
}

fn switch_net() -> Network {
    Network::new(vec![model("lightswitch.json").complete_inputs()]).unwrap()
}

#[test]
fn concrete_delay() {
    let net = switch_net();
    let s = ConcreteState { locs: vec![0], vals: vec![t(1)] };
    assert_eq!(s.delay(&net, t(1)).unwrap().vals, vec![t(2)]);
    assert_eq!(s.delay(&net, t(0)).unwrap(), s);
    let on = ConcreteState { locs: vec![1], vals: vec![t(4)] };
    assert_eq!(on.delay(&net, t(2)), Err(Error::InvariantViolation { max_delay: t(1) }));
}

#[test]
fn concrete_fire() {
    let net = switch_net();
    let s = ConcreteState { locs: vec![0], vals: vec![t(2)] };
    let n = s.fire(&net, "on").unwrap();
    assert_eq!(n, ConcreteState { locs: vec![1], vals: vec![t(0)] });
    let early = ConcreteState { locs: vec![1], vals: vec![q(1, 2)] };
    assert_eq!(early.fire(&net, "off"), Err(Error::NotEnabled("off".into())));
    assert_eq!(s.fire(&net, "nope"), Err(Error::UnknownLabel("nope".into())));
}

#[test]
fn broadcast_drives_all_receivers() {
    let mk = |name: &str, inputs: &[&str], outputs: &[&str], edges: Vec<Edge>| {
        let mut a = Tioa::new(name);
        a.locations = vec![Location::new("A"), Location::new("B")];
        a.inputs = inputs.iter().map(|s| s.to_string()).collect();
        a.outputs = outputs.iter().map(|s| s.to_string()).collect();
        a.edges = edges;
        a
    };
    let s = mk("S", &[], &["go"], vec![Edge::new(0, "go", 1)]);
    let r1 = mk("R1", &["go"], &[], vec![Edge::new(0, "go", 1)]);
    let r2 = mk("R2", &["go"], &[], vec![Edge::new(1, "go", 0)]);
    let net = Network::new(vec![s, r1, r2]).unwrap();
    let st = ConcreteState::initial(&net).fire(&net, "go").unwrap();
    // R2 has no `go` edge in A and ignores the broadcast.
    assert_eq!(st.locs, vec![1, 1, 0]);
    assert!(st.fire(&net, "go").is_err());
}

#[test]
fn output_owned_twice_is_rejected() {
    let a = model("lightswitch.json");
    let mut b = a.clone();
    b.name = "Other".into();
    assert!(matches!(Network::new(vec![a, b]), Err(Error::Validation { .. })));
}

#[test]
fn symbolic_initial_delay() {
    let net = switch_net();
    let s = SymState::initial(&net).delay(&net).unwrap();
    assert_eq!(s.locs, vec![0]);
    assert_eq!(s.fed.zones(), &[Zone::from_constraints(1, &[Constraint::new(x(), Rel::Le, 3)])]);
    let moves = net.moves(&s.locs);
    let off = moves.iter().find(|m| m.label == "off");
    assert!(off.is_none());
    let on = SymState { locs: vec![1], fed: crate::zones::Federation::from_zone(Zone::zero(1)) };
    let early = SymState { locs: vec![1], fed: crate::zones::Federation::from_constraints(1, &[Constraint::new(x(), Rel::Lt, 1)]) };
    assert!(early.succ_label(&net, "off").is_empty());
    assert_eq!(on.delay(&net).unwrap().succ_label(&net, "off").len(), 1);
}

#[test]
fn refinement_examples() {
    let s1 = model("lightswitch.json");
    let s2 = model("spec2.json");
    assert!(check_refinement(&s2, &s1).unwrap().holds);
    assert!(check_refinement(&s1, &s1).unwrap().holds);
    let r = check_refinement(&s1, &s2).unwrap();
    assert!(!r.holds);
    let w = r.witness.unwrap();
    let mon = crate::monitor::build_monitor(&s2).unwrap();
    let net = Network::new(vec![mon]).unwrap();
    let end = w.replay(&net).unwrap();
    assert!(end.satisfies(&net.eval(&StatePredicate::MonitorError(0), &end.locs)), "witness {w}");
}

#[test]
fn refinement_rejects_nondeterministic_spec() {
    let mut s = model("lightswitch.json");
    s.edges.push(Edge::new(0, "blink", 1));
    assert!(matches!(check_refinement(&model("spec2.json"), &s), Err(Error::Nondeterministic { .. })));
}

#[test]
fn prime_renames_outputs_only() {
    let p = model("lightswitch.json").prime();
    assert_eq!(p.inputs, vec!["on".to_string()]);
    assert_eq!(p.outputs, vec!["off'".to_string(), "blink'".to_string()]);
    assert!(p.edges.iter().any(|e| e.label == "on"));
    assert!(p.edges.iter().any(|e| e.label == "blink'"));
}
