use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use tshield::game::oracle;
use tshield::io::{load_shield, load_single, save_shield, shield_to_string, to_canonical_json};
use tshield::monitor::{gen_fault_models, FaultKind, FaultModel, DEFAULT_FAULT_CAP};
use tshield::runtime::{
    format_verdict, gen_events, parse_command, play, pre_play, primed_replay_ok, replay_ok, Command, Event, PlayConfig,
    RecoveryStatus, Session, Verdict,
};
use tshield::shield::{synth_post, synth_post_recovery, synth_pre, Shield, ShieldKind};
use tshield::tioa::{check_refinement, Tioa};
use tshield::{Error, Time};

mod platoon;

#[derive(Parser)]
#[command(name = "tshield", version, about = "Shield synthesis for timed I/O specifications")]
struct Cli {
    /// Seed for every randomised command.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Cross-check results with brute-force oracles (small models only).
    #[arg(long, global = true)]
    oracle: bool,
    /// Grid points per time unit used by the `--oracle` game solver.
    #[arg(long, global = true, default_value_t = 2)]
    oracle_resolution: i64,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Decide whether <IMPL> refines <SPEC>; exit 1 with a witness if not.
    Check { imp: PathBuf, spec: PathBuf },
    /// Synthesise a shield for a specification.
    Synth(SynthArgs),
    /// Run a shield over the line protocol on stdin and stdout.
    RunShield { shield: PathBuf },
    /// Play random event streams against a shield and report statistics.
    Simulate(SimArgs),
    /// Platoon experiments with pair shields.
    #[command(subcommand)]
    Platoon(platoon::PlatoonCmd),
}

#[derive(Clone, Copy, ValueEnum)]
enum SynthKind {
    Post,
    Recover,
    Pre,
}

#[derive(Args)]
struct SynthArgs {
    kind: SynthKind,
    spec: PathBuf,
    /// Fault family `kind[:filter]`; repeatable. Kinds: go_to_any_location
    /// (any), go_to_next_location (next), wrong_reset, missing_reset and
    /// swapped_clocks=<clock,...> (one explicit permutation). The filter keeps
    /// instances whose description contains it.
    #[arg(long = "faults")]
    faults: Vec<String>,
    /// Recovery bound in time units; without it recovery must merely happen.
    #[arg(long)]
    bound: Option<i64>,
    #[arg(long, default_value_t = DEFAULT_FAULT_CAP)]
    fault_cap: usize,
    /// Output file; the shield goes to stdout when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SimArgs {
    shield: PathBuf,
    /// Drive system outputs by this automaton instead of a random adversary.
    #[arg(long)]
    system: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    plays: usize,
    /// Events per play.
    #[arg(long, default_value_t = 30)]
    steps: usize,
    /// Largest regular gap between events.
    #[arg(long, default_value_t = 4)]
    max_gap: i64,
}

struct Failure {
    kind: &'static str,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let kind = match &e {
            Error::Validation { .. } => "validation",
            Error::Nondeterministic { .. } => "nondeterministic",
            Error::InvariantViolation { .. } => "invariant_violation",
            Error::NotEnabled(_) => "not_enabled",
            Error::TargetInvariantViolated(_) => "target_invariant_violated",
            Error::EmptyResult => "empty_result",
            Error::UnknownLabel(_) => "unknown_label",
            Error::InitialStateLosing(_) => "initial_state_losing",
            Error::UnboundedRecoveryUndecided { .. } => "unbounded_recovery_undecided",
            Error::FaultCapExceeded { .. } => "fault_cap_exceeded",
            Error::TimeRegression { .. } => "time_regression",
            Error::ActionRejected(_) => "action_rejected",
            Error::DeadlineMissed(_) => "deadline_missed",
            Error::ShieldStateCorrupt(_) => "shield_state_corrupt",
            Error::NoConvergence(_) => "no_convergence",
            Error::EmptyWinningRegion => "empty_winning_region",
            Error::Parse { .. } => "parse",
        };
        Failure { kind, message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure { kind: "io", message: e.to_string() }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { kind: "usage", message: message.into() }
}

type CliResult = Result<ExitCode, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("{}", json!({ "error": f.kind, "message": f.message }));
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> CliResult {
    match &cli.command {
        Cmd::Check { imp, spec } => check(cli, imp, spec),
        Cmd::Synth(a) => synth(cli, a),
        Cmd::RunShield { shield } => run_shield(shield),
        Cmd::Simulate(a) => simulate(cli, a),
        Cmd::Platoon(p) => platoon::run(cli.seed, p),
    }
}

fn print_json(v: &Value) {
    print!("{}", to_canonical_json(v));
}

fn check(cli: &Cli, imp: &Path, spec: &Path) -> CliResult {
    let imp = load_single(imp)?;
    let spec = load_single(spec)?;
    let r = check_refinement(&imp, &spec)?;
    let Some(w) = &r.witness else {
        print_json(&json!({ "refines": true }));
        return Ok(ExitCode::SUCCESS);
    };
    let mut out = json!({ "refines": false, "witness": w });
    if cli.oracle {
        // The witness, read as a stream, must leave the specification.
        let mut now = Time::from_integer(0);
        let mut events = Vec::new();
        for st in &w.steps {
            now += st.delay;
            let e = if spec.is_input(&st.label) { Event::input(st.label.clone(), now) } else { Event::output(st.label.clone(), now) };
            events.push(e);
        }
        let violates = !replay_ok(&spec, &events, now + w.final_delay)?;
        out["oracle"] = json!({ "witness_violates_spec": violates });
        if !violates {
            print_json(&out);
            return Err(Failure { kind: "oracle_mismatch", message: "witness is accepted by the specification".into() });
        }
    }
    print_json(&out);
    Ok(ExitCode::from(1))
}

fn parse_fault(spec: &Tioa, arg: &str, cap: usize) -> Result<Vec<FaultModel>, Failure> {
    let (kind, filter) = match arg.split_once(':') {
        Some((k, f)) => (k, Some(f)),
        None => (arg, None),
    };
    let kind = match kind.split_once('=') {
        Some(("swapped_clocks", perm)) => {
            FaultKind::SwappedClocks(vec![perm.split(',').map(|c| c.trim().to_string()).collect()])
        }
        _ => FaultKind::parse(kind).ok_or_else(|| usage(format!("unknown fault kind `{kind}`")))?,
    };
    let mut fms = gen_fault_models(spec, &[kind], cap)?;
    if let Some(f) = filter {
        fms.retain(|m| m.description.contains(f));
        if fms.is_empty() {
            return Err(usage(format!("no fault instance matches `{f}`")));
        }
    }
    Ok(fms)
}

fn synth(cli: &Cli, a: &SynthArgs) -> CliResult {
    let spec = load_single(&a.spec)?;
    let sh = match a.kind {
        SynthKind::Post => synth_post(&spec)?,
        SynthKind::Pre => synth_pre(&spec)?,
        SynthKind::Recover => {
            if a.faults.is_empty() {
                return Err(usage("`synth recover` needs at least one --faults family"));
            }
            let mut fms = Vec::new();
            for f in &a.faults {
                fms.extend(parse_fault(&spec, f, a.fault_cap)?);
            }
            if fms.len() > a.fault_cap {
                return Err(Error::FaultCapExceeded { cap: a.fault_cap, count: fms.len() }.into());
            }
            synth_post_recovery(&spec, &fms, a.bound)?
        }
    };
    let mut code = ExitCode::SUCCESS;
    if cli.oracle {
        if let ShieldKind::Recovering { .. } = sh.kind {
            eprintln!("{}", json!({ "oracle": "skipped", "reason": "no brute-force solver for recovery games" }));
        } else {
            let (points, bad) = oracle::check_safety(&sh.game, &sh.solution, cli.oracle_resolution)?;
            let sample: Vec<Value> = bad
                .iter()
                .take(5)
                .map(|m| json!({ "locations": sh.network().location_names(&m.locations), "valuation": m.valuation, "oracle": m.oracle }))
                .collect();
            eprintln!("{}", json!({ "oracle": "grid", "points": points, "mismatches": bad.len(), "sample": sample }));
            if !bad.is_empty() {
                code = ExitCode::from(1);
            }
        }
    }
    match &a.output {
        Some(p) => {
            save_shield(p, &sh)?;
            print_json(&summary(&sh));
        }
        None => print!("{}", shield_to_string(&sh)),
    }
    Ok(code)
}

fn summary(sh: &Shield) -> Value {
    let sol = &sh.solution;
    let winning = (0..sol.arena.len()).filter(|&s| !sol.winning[s].is_empty()).count();
    json!({
        "kind": sh.kind,
        "spec": sh.spec.name,
        "fault_models": sh.fault_models.iter().map(|f| f.description.clone()).collect::<Vec<_>>(),
        "states": sol.arena.len(),
        "winning_states": winning,
    })
}

fn run_shield(path: &Path) -> CliResult {
    let sh = load_shield(path)?;
    let mut s = Session::open(&sh)?;
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    if sh.kind == ShieldKind::Pre {
        writeln!(out, "{}", format_verdict(&Verdict::Act(s.act_set()?)))?;
        out.flush()?;
    }
    for line in std::io::stdin().lock().lines() {
        let line = line?;
        let vs = match parse_command(&line)? {
            None => continue,
            Some(Command::Event(e)) => s.feed(&e)?,
            Some(Command::Tick(t)) => s.tick(t)?,
        };
        for v in &vs {
            writeln!(out, "{}", format_verdict(v))?;
        }
        out.flush()?;
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Default)]
struct Tally {
    events: usize,
    pass: usize,
    correct: usize,
    suppress: usize,
    emit: usize,
    violations: usize,
    triggered: usize,
    recovered: usize,
    max_elapsed: Option<Time>,
}

fn simulate(cli: &Cli, a: &SimArgs) -> CliResult {
    let sh = load_shield(&a.shield)?;
    let system = a.system.as_deref().map(load_single).transpose()?;
    let cfg = PlayConfig { steps: a.steps, max_gap: a.max_gap, ..PlayConfig::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
    let mut t = Tally::default();
    for _ in 0..a.plays {
        if sh.kind == ShieldKind::Pre {
            let (events, end) = pre_play(&sh, &cfg, &mut rng)?;
            t.events += events.len();
            if !replay_ok(&sh.spec, &events, end)? {
                t.violations += 1;
            }
            continue;
        }
        let (events, end) = gen_events(&sh.spec, system.as_ref(), &cfg, &mut rng)?;
        let p = play(&sh, &events, end)?;
        t.events += events.len();
        for v in &p.verdicts {
            match v {
                Verdict::Pass(_) => t.pass += 1,
                Verdict::Correct(_) => t.correct += 1,
                Verdict::Suppress => t.suppress += 1,
                Verdict::Emit(..) => t.emit += 1,
                Verdict::Act(_) => {}
            }
        }
        if !primed_replay_ok(&sh.spec, &p.shielded, p.end)? {
            t.violations += 1;
        }
        match p.status {
            RecoveryStatus::NotTriggered => {}
            RecoveryStatus::Recovering(_) => t.triggered += 1,
            RecoveryStatus::Recovered { elapsed, .. } => {
                t.triggered += 1;
                t.recovered += 1;
                t.max_elapsed = Some(t.max_elapsed.map_or(elapsed, |m| m.max(elapsed)));
            }
        }
    }
    let mut out = json!({
        "kind": sh.kind,
        "plays": a.plays,
        "seed": cli.seed,
        "events": t.events,
        "violations": t.violations,
    });
    if sh.kind != ShieldKind::Pre {
        out["verdicts"] = json!({ "pass": t.pass, "correct": t.correct, "suppress": t.suppress, "emit": t.emit });
    }
    if let ShieldKind::Recovering { .. } = sh.kind {
        out["recovery"] = json!({
            "triggered": t.triggered,
            "recovered": t.recovered,
            "max_elapsed": t.max_elapsed.map(|e| e.to_string()),
        });
    }
    print_json(&out);
    Ok(if t.violations == 0 { ExitCode::SUCCESS } else { ExitCode::from(1) })
}
