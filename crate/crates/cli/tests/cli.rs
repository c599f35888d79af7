use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use tshield::io::{load_shield, load_single};
use tshield::runtime::{format_verdict, gen_events, play, pre_play, primed_replay_ok, replay_ok, Direction, Event, PlayConfig};

const MODELS: [&str; 5] = ["lightswitch.json", "spec2.json", "toggle.json", "neverreset.json", "fig7.json"];

fn model(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../models").join(name)
}

fn tshield(args: &[&str], stdin: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_tshield"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary runs");
    child.stdin.take().expect("piped").write_all(stdin.as_bytes()).expect("stdin open");
    child.wait_with_output().expect("binary exits")
}

fn run(args: &[&str]) -> Output {
    tshield(args, "")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).expect("utf-8")
}

fn error_kind(o: &Output) -> String {
    let v: Value = serde_json::from_slice(&o.stderr).expect("JSON error on stderr");
    v["error"].as_str().expect("error kind").to_string()
}

fn lines(events: &[Event], end: tshield::Time) -> String {
    let mut s = String::new();
    for e in events {
        let dir = if e.direction == Direction::Input { "IN" } else { "OUT" };
        s.push_str(&format!("{dir} {} @ {}\n", e.label, e.time));
    }
    s.push_str(&format!("TICK @ {end}\n"));
    s
}

fn synth(kind: &str, name: &str, out: &Path, extra: &[&str]) -> Output {
    let m = model(name);
    let mut args = vec!["synth", kind, m.to_str().unwrap(), "-o", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    run(&args)
}

#[test]
fn refinement_check_exit_codes() {
    let (s1, s2) = (model("lightswitch.json"), model("spec2.json"));
    let o = run(&["check", s2.to_str().unwrap(), s1.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let o = run(&["--oracle", "check", s1.to_str().unwrap(), s2.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["refines"], false);
    assert_eq!(v["oracle"]["witness_violates_spec"], true);
    assert!(v["witness"]["steps"].is_array());
}

#[test]
fn post_shields_pass_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for name in MODELS {
        let file = dir.path().join(format!("post-{name}"));
        let o = synth("post", name, &file, &[]);
        assert!(o.status.success(), "{name}: {}", String::from_utf8_lossy(&o.stderr));
        let sh = load_shield(&file).unwrap();
        for _ in 0..10 {
            let (events, end) = gen_events(&sh.spec, None, &PlayConfig::default(), &mut rng).unwrap();
            let o = tshield(&["run-shield", file.to_str().unwrap()], &lines(&events, end));
            assert!(o.status.success(), "{name}: {}", String::from_utf8_lossy(&o.stderr));
            let p = play(&sh, &events, end).unwrap();
            let expect: Vec<String> = p.verdicts.iter().map(format_verdict).collect();
            assert_eq!(stdout(&o).lines().collect::<Vec<_>>(), expect, "{name}");
            assert!(primed_replay_ok(&sh.spec, &p.shielded, p.end).unwrap(), "{name}");
        }
    }
}

#[test]
fn pre_shields_accept_their_own_choices() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for name in MODELS {
        let file = dir.path().join(format!("pre-{name}"));
        let o = synth("pre", name, &file, &[]);
        assert!(o.status.success(), "{name}: {}", String::from_utf8_lossy(&o.stderr));
        let sh = load_shield(&file).unwrap();
        for _ in 0..10 {
            let (events, end) = pre_play(&sh, &PlayConfig::default(), &mut rng).unwrap();
            let o = tshield(&["run-shield", file.to_str().unwrap()], &lines(&events, end));
            assert!(o.status.success(), "{name}: {}", String::from_utf8_lossy(&o.stderr));
            assert!(stdout(&o).lines().all(|l| l.starts_with("ACT {")), "{name}");
            assert!(replay_ok(&sh.spec, &events, end).unwrap(), "{name}");
        }
    }
}

#[test]
fn pre_shield_rejects_forbidden_output() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("pre.json");
    assert!(synth("pre", "lightswitch.json", &file, &[]).status.success());
    let o = tshield(&["run-shield", file.to_str().unwrap()], "OUT off @ 1\n");
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_kind(&o), "action_rejected");
}

#[test]
fn recovering_shield_simulation() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("rec.json");
    let o = synth("recover", "toggle.json", &file, &["--faults", "wrong_reset", "--bound", "6"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = run(&["--seed", "5", "simulate", file.to_str().unwrap(), "--plays", "100"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["violations"], 0);
    assert_eq!(v["recovery"]["recovered"], v["recovery"]["triggered"]);
}

#[test]
fn never_reset_clock_is_diagnosed_losing() {
    let dir = tempfile::tempdir().unwrap();
    let o = synth("recover", "neverreset.json", &dir.path().join("x.json"), &["--faults", "wrong_reset:resets z", "--bound", "20"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_kind(&o), "initial_state_losing");
}

#[test]
fn refining_system_is_never_corrected() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("post.json");
    assert!(synth("post", "lightswitch.json", &file, &[]).status.success());
    let sys = model("spec2.json");
    let o = run(&["simulate", file.to_str().unwrap(), "--system", sys.to_str().unwrap(), "--plays", "100"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["violations"], 0);
    assert_eq!(v["verdicts"]["correct"], 0);
    assert_eq!(v["verdicts"]["suppress"], 0);
    assert_eq!(v["verdicts"]["emit"], 0);
}

#[test]
fn oracle_flag_cross_checks_synthesis() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("post.json");
    let o = run(&["--oracle", "synth", "post", model("lightswitch.json").to_str().unwrap(), "-o", file.to_str().unwrap()]);
    assert!(o.status.success());
    let v: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(v["mismatches"], 0);
}

#[test]
fn synthesis_and_experiments_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    for kind in ["post", "pre"] {
        let (a, b) = (dir.path().join(format!("{kind}-a")), dir.path().join(format!("{kind}-b")));
        assert!(synth(kind, "lightswitch.json", &a, &[]).status.success());
        assert!(synth(kind, "lightswitch.json", &b, &[]).status.success());
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    }
    let outs: Vec<PathBuf> = (0..2).map(|i| dir.path().join(format!("pl{i}"))).collect();
    for o in &outs {
        let r = run(&["--seed", "3", "platoon", "train", "--cars", "2", "--episodes", "3", "--runs", "20", "--steps", "300", "--out", o.to_str().unwrap()]);
        assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    }
    for f in ["stats.csv", "curve_2_exec.csv", "curve_2_train_exec.svg"] {
        assert_eq!(std::fs::read(outs[0].join(f)).unwrap(), std::fs::read(outs[1].join(f)).unwrap(), "{f}");
    }
    let stats = std::fs::read_to_string(outs[0].join("stats.csv")).unwrap();
    assert!(stats.starts_with("cars,regime,crashes,mean_time,mean_reward\n"));
    assert_eq!(stats.lines().count(), 4);
}

#[test]
fn errors_are_reported_as_json() {
    let o = run(&["synth", "post", "/nonexistent/model.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!error_kind(&o).is_empty());
    let o = run(&["synth", "recover", model("lightswitch.json").to_str().unwrap()]);
    assert_eq!(error_kind(&o), "usage");
    let o = run(&["synth", "recover", model("lightswitch.json").to_str().unwrap(), "--faults", "sideways"]);
    assert_eq!(error_kind(&o), "usage");
}

#[test]
fn shipped_models_load() {
    for name in MODELS {
        load_single(&model(name)).unwrap();
    }
}
