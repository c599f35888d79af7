use super::*;
use crate::monitor::{gen_fault_models, FaultKind, DEFAULT_FAULT_CAP};
use crate::testutil::{model, q, t};
use crate::zones::{ClockId, Constraint, Rel};

fn set(xs: &[&str]) -> BTreeSet<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

#[test]
fn ctr_post_shape() {
    let ctr = build_ctr_post(&model("lightswitch.json"));
    assert_eq!(ctr.locations.len(), 2);
    assert!(ctr.is_output("off'") && ctr.is_output("blink'") && ctr.is_output(RESYNC));
    assert_eq!(ctr.edges.iter().filter(|e| e.trigger.is_some()).count(), 2);
    ctr.validate().unwrap();
}

#[test]
fn lightswitch_post_shield_synthesises() {
    let sh = synth_post(&model("lightswitch.json")).unwrap();
    let net = sh.network();
    let init = net.initial();
    assert!(sh.solution.is_winning(&init, &[t(0), t(0)]));
    // After a wrong `off` (monitor in ERR) the primed side is still safe.
    let err = net.components[0].err.unwrap();
    let d = vec![err, 0, 0];
    assert!(sh.solution.is_winning(&d, &[t(0), t(2)]));
}

#[test]
fn last_chance_only_at_boundary() {
    let sh = synth_post(&model("lightswitch.json")).unwrap();
    let net = sh.network();
    let p = StatePredicate::Named(last_chance("off"));
    // mSpec and mSpec' both in ON.
    let f = net.eval(&p, &vec![1, 1, 0]);
    assert!(f.contains(&[t(5), t(5)]));
    assert!(!f.contains(&[t(4), t(4)]));
    let b = net.eval(&StatePredicate::Named(last_chance("blink")), &vec![0, 0, 0]);
    assert!(b.contains(&[t(3), t(3)]));
}

#[test]
fn toggle_recovers_within_six() {
    let spec = model("toggle.json");
    let fms = gen_fault_models(&spec, &[FaultKind::WrongReset], DEFAULT_FAULT_CAP).unwrap();
    assert_eq!(fms.len(), 4);
    let sh = synth_post_recovery(&spec, &fms, Some(6)).unwrap();
    assert_eq!(sh.kind, ShieldKind::Recovering { bound: 6 });
    assert!(matches!(synth_post_recovery(&spec, &fms, Some(5)), Err(Error::InitialStateLosing(_))));
}

#[test]
fn toggle_recovers_eventually() {
    let spec = model("toggle.json");
    let fms = gen_fault_models(&spec, &[FaultKind::WrongReset], DEFAULT_FAULT_CAP).unwrap();
    assert!(synth_post_recovery(&spec, &fms, None).is_ok());
}

// At ON with x=5 the shield must fire off', the environment then sends `on`
// and the system its own (still legal) off, all at the same instant. The
// primed monitor ends in ON while the system is in OFF; after a fault the
// environment can keep the two apart forever by alternating `on` and `off`.
#[test]
fn lightswitch_deadline_race_blocks_recovery() {
    let spec = model("lightswitch.json");
    let mut fms = gen_fault_models(&spec, &[FaultKind::WrongReset], DEFAULT_FAULT_CAP).unwrap();
    fms.retain(|f| f.description.starts_with("off at OFF"));
    for bound in [Some(6), Some(60), None] {
        let r = synth_post_recovery(&spec, &fms, bound);
        assert!(matches!(r, Err(Error::InitialStateLosing(_))), "{bound:?}: {r:?}");
    }
}

#[test]
fn recovery_with_zero_bound_fails() {
    let spec = model("lightswitch.json");
    let fms = gen_fault_models(&spec, &[FaultKind::WrongReset], DEFAULT_FAULT_CAP).unwrap();
    assert!(matches!(synth_post_recovery(&spec, &fms, Some(0)), Err(Error::InitialStateLosing(_))));
}

#[test]
fn never_reset_clock_cannot_recover() {
    let spec = model("neverreset.json");
    let mut fms = gen_fault_models(&spec, &[FaultKind::WrongReset], DEFAULT_FAULT_CAP).unwrap();
    fms.retain(|f| f.description.ends_with("resets z"));
    assert_eq!(fms.len(), 1);
    let r = synth_post_recovery(&spec, &fms, Some(20));
    assert!(matches!(r, Err(Error::InitialStateLosing(_))), "{r:?}");
}

#[test]
fn no_fault_kinds_recovers_trivially() {
    let spec = model("lightswitch.json");
    let sh = synth_post_recovery(&spec, &[], Some(1)).unwrap();
    assert!(sh.roles.faults.is_empty());
}

fn diag(lo: (i64, bool), hi: Option<(i64, bool)>) -> Zone {
    let x = ClockId(1);
    let y = ClockId(2);
    let mut cs = vec![Constraint::diagonal(x, y, Rel::Le, 1), Constraint::diagonal(x, y, Rel::Ge, 1)];
    cs.push(Constraint::new(x, if lo.1 { Rel::Gt } else { Rel::Ge }, lo.0));
    if let Some((h, strict)) = hi {
        cs.push(Constraint::new(x, if strict { Rel::Lt } else { Rel::Le }, h));
    }
    Zone::from_constraints(2, &cs)
}

#[test]
fn choice_partition_along_diagonal() {
    let sh = synth_pre(&model("fig7.json")).unwrap();
    let net = sh.network();
    let start = Zone::from_constraints(
        2,
        &[Constraint::new(ClockId(1), Rel::Le, 2), Constraint::new(ClockId(1), Rel::Ge, 2)]
            .into_iter()
            .chain([Constraint::new(ClockId(2), Rel::Le, 1), Constraint::new(ClockId(2), Rel::Ge, 1)])
            .collect::<Vec<_>>(),
    );
    let s = SymState { locs: net.initial(), fed: Federation::from_zone(start) };
    let parts = enabled_actions_by_zone(&sh, &s).unwrap();
    let expect = vec![
        (diag((2, false), Some((3, false))), set(&[])),
        (diag((3, true), Some((4, false))), set(&["a"])),
        (diag((4, true), Some((5, true))), set(&["a", "b"])),
        (diag((5, false), Some((7, true))), set(&["b"])),
        (diag((7, false), None), set(&[])),
    ];
    assert_eq!(parts, expect);
    let _ = q(1, 2);
}
