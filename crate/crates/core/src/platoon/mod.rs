//! Car platoon case study: a leader driving at random, followers choosing
//! accelerations, per-pair distance shields and a tabular learning agent.

mod shield;

pub use shield::{synth_pair_shield, PairConfig, PairShield};

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const V_MAX: i64 = 20;
pub const ACCS: [i64; 3] = [-2, 0, 2];
pub const D_CRASH: f64 = 5.0;
pub const D_LOST: f64 = 200.0;
pub const EPISODE_STEPS: usize = 2000;

#[derive(Clone, Debug, PartialEq)]
pub struct PlatoonState {
    /// Leader first.
    pub velocities: Vec<i64>,
    /// `distances[i]` separates car `i` from car `i + 1`.
    pub distances: Vec<f64>,
}

impl PlatoonState {
    pub fn crashed(&self) -> bool {
        self.distances.iter().any(|&d| d <= D_CRASH)
    }

    pub fn lost(&self) -> bool {
        self.distances.iter().any(|&d| d >= D_LOST)
    }

    /// (distance, front speed, rear speed) of pair `i`.
    pub fn pair(&self, i: usize) -> (f64, i64, i64) {
        (self.distances[i], self.velocities[i], self.velocities[i + 1])
    }
}

/// Per-pair reward on a logarithmic scale: 1 at the crash distance, 0 at the
/// loss distance.
pub fn pair_reward(d: f64) -> f64 {
    (1.0 - (d / D_CRASH).ln() / (D_LOST / D_CRASH).ln()).clamp(0.0, 1.0)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepOutcome {
    pub reward: f64,
    pub crashed: bool,
    pub lost: bool,
}

impl StepOutcome {
    pub fn failed(&self) -> bool {
        self.crashed || self.lost
    }
}

/// One second of the platoon: speeds change first, then distances move by
/// the new speed differences.
pub fn env_step(s: &mut PlatoonState, leader_acc: i64, follower_accs: &[i64]) -> StepOutcome {
    debug_assert_eq!(follower_accs.len() + 1, s.velocities.len());
    for (i, v) in s.velocities.iter_mut().enumerate() {
        let a = if i == 0 { leader_acc } else { follower_accs[i - 1] };
        *v = (*v + a).clamp(0, V_MAX);
    }
    for i in 0..s.distances.len() {
        s.distances[i] += (s.velocities[i] - s.velocities[i + 1]) as f64;
    }
    let crashed = s.crashed();
    let lost = s.lost();
    let reward = if crashed || lost {
        -1.0
    } else {
        s.distances.iter().map(|&d| pair_reward(d)).sum::<f64>() / s.distances.len() as f64
    };
    StepOutcome { reward, crashed, lost }
}

/// Keeps each proposed acceleration the pair shield allows; otherwise takes
/// the allowed one closest to it (the smaller on ties). Returns whether any
/// was replaced. Pairs in losing states keep their proposal.
pub fn shielded_action(shield: &PairShield, s: &PlatoonState, proposed: &[i64]) -> (Vec<i64>, bool) {
    let mut out = proposed.to_vec();
    let mut intervened = false;
    for (i, a) in out.iter_mut().enumerate() {
        let (d, vf, vr) = s.pair(i);
        let allowed = shield.allowed(d, vf, vr);
        if allowed.is_empty() || allowed.contains(a) {
            continue;
        }
        let best = allowed.iter().copied().min_by_key(|&b| ((b - *a).abs(), b)).expect("non-empty");
        *a = best;
        intervened = true;
    }
    (out, intervened)
}

/// Random safe start: distances uniform in [20, 150], speeds uniform, redrawn
/// until every pair is winning for the shield.
pub fn initial_state(cars: usize, shield: &PairShield, rng: &mut impl Rng) -> PlatoonState {
    loop {
        let s = PlatoonState {
            velocities: (0..=cars).map(|_| rng.gen_range(0..=V_MAX)).collect(),
            distances: (0..cars).map(|_| rng.gen_range(20.0..=150.0)).collect(),
        };
        if (0..cars).all(|i| {
            let (d, vf, vr) = s.pair(i);
            shield.is_winning(d, vf, vr)
        }) {
            return s;
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    #[serde(rename = "none")]
    NoShield,
    #[serde(rename = "exec")]
    Exec,
    #[serde(rename = "train+exec")]
    TrainExec,
}

impl Regime {
    pub fn shield_in_training(self) -> bool {
        self == Regime::TrainExec
    }

    pub fn shield_in_execution(self) -> bool {
        self != Regime::NoShield
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::NoShield => "none",
            Regime::Exec => "exec",
            Regime::TrainExec => "train+exec",
        })
    }
}

impl FromStr for Regime {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "none" => Ok(Regime::NoShield),
            "exec" => Ok(Regime::Exec),
            "train+exec" => Ok(Regime::TrainExec),
            _ => Err(format!("unknown regime `{s}` (expected none, exec or train+exec)")),
        }
    }
}

const BUCKETS: usize = 41;
const RELS: usize = (2 * V_MAX + 1) as usize;

/// Action values over (5 m distance bucket, relative speed), shared by all
/// followers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QTable {
    pub values: Vec<[f64; 3]>,
}

impl Default for QTable {
    fn default() -> Self {
        QTable { values: vec![[0.0; 3]; BUCKETS * RELS] }
    }
}

impl QTable {
    fn key(d: f64, vf: i64, vr: i64) -> usize {
        let bucket = ((d / 5.0).floor().max(0.0) as usize).min(BUCKETS - 1);
        bucket * RELS + (vf - vr + V_MAX) as usize
    }

    fn best(&self, k: usize) -> usize {
        let q = &self.values[k];
        (0..3).fold(0, |b, i| if q[i] > q[b] { i } else { b })
    }
}

#[derive(Clone, Copy, Debug)]
pub enum Policy<'a> {
    /// Uniformly random accelerations.
    Random,
    Greedy(&'a QTable),
    /// The first action the shield allows (braking first).
    Safe(&'a PairShield),
}

fn acc_index(a: i64) -> usize {
    ACCS.iter().position(|&x| x == a).expect("known acceleration")
}

fn propose(policy: Policy<'_>, s: &PlatoonState, rng: &mut impl Rng) -> Vec<i64> {
    (0..s.distances.len())
        .map(|i| {
            let (d, vf, vr) = s.pair(i);
            match policy {
                Policy::Random => *ACCS.choose(rng).expect("non-empty"),
                Policy::Greedy(q) => ACCS[q.best(QTable::key(d, vf, vr))],
                Policy::Safe(sh) => sh.allowed(d, vf, vr).first().copied().unwrap_or(ACCS[0]),
            }
        })
        .collect()
}

/// Per-episode random stream, independent of execution order.
pub fn episode_rng(seed: u64, episode: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(episode);
    rng
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct EpisodeResult {
    pub steps: usize,
    pub reward: f64,
    pub crashed: bool,
    pub lost: bool,
    pub interventions: usize,
}

pub fn run_episode(
    cars: usize,
    policy: Policy<'_>,
    shield: Option<&PairShield>,
    sampler: &PairShield,
    steps: usize,
    rng: &mut impl Rng,
) -> EpisodeResult {
    let mut s = initial_state(cars, sampler, rng);
    let mut r = EpisodeResult::default();
    for _ in 0..steps {
        let mut acts = propose(policy, &s, rng);
        if let Some(sh) = shield {
            let (a, changed) = shielded_action(sh, &s, &acts);
            acts = a;
            r.interventions += usize::from(changed);
        }
        let lead = *ACCS.choose(rng).expect("non-empty");
        let o = env_step(&mut s, lead, &acts);
        r.steps += 1;
        r.reward += o.reward;
        if o.failed() {
            r.crashed = o.crashed;
            r.lost = o.lost;
            break;
        }
    }
    r
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpisodeStats {
    pub episodes: usize,
    pub crashes: usize,
    pub lost: usize,
    pub mean_time: f64,
    pub mean_reward: f64,
    /// Mean steps until the first failure, over failed episodes.
    pub mean_steps_to_failure: Option<f64>,
    pub interventions: usize,
}

impl EpisodeStats {
    pub fn from_results(rs: &[EpisodeResult]) -> EpisodeStats {
        let n = rs.len().max(1) as f64;
        let failed: Vec<&EpisodeResult> = rs.iter().filter(|r| r.crashed || r.lost).collect();
        EpisodeStats {
            episodes: rs.len(),
            crashes: rs.iter().filter(|r| r.crashed).count(),
            lost: rs.iter().filter(|r| r.lost).count(),
            mean_time: rs.iter().map(|r| r.steps as f64).sum::<f64>() / n,
            mean_reward: rs.iter().map(|r| r.reward).sum::<f64>() / n,
            mean_steps_to_failure: (!failed.is_empty())
                .then(|| failed.iter().map(|r| r.steps as f64).sum::<f64>() / failed.len() as f64),
            interventions: rs.iter().map(|r| r.interventions).sum(),
        }
    }

    pub const CSV_HEADER: &'static str = "cars,regime,crashes,mean_time,mean_reward";

    pub fn csv_row(&self, cars: usize, regime: Regime) -> String {
        format!("{cars},{regime},{},{:.3},{:.3}", self.crashes, self.mean_time, self.mean_reward)
    }
}

#[derive(Clone, Debug)]
pub struct EvalConfig {
    pub cars: usize,
    pub runs: usize,
    pub steps: usize,
    pub seed: u64,
}

/// Independent episodes in parallel; results do not depend on scheduling.
pub fn evaluate(policy: Policy<'_>, shield: Option<&PairShield>, sampler: &PairShield, cfg: &EvalConfig) -> (EpisodeStats, Vec<EpisodeResult>) {
    let rs: Vec<EpisodeResult> = (0..cfg.runs)
        .into_par_iter()
        .map(|e| {
            let mut rng = episode_rng(cfg.seed, e as u64);
            run_episode(cfg.cars, policy, shield, sampler, cfg.steps, &mut rng)
        })
        .collect();
    (EpisodeStats::from_results(&rs), rs)
}

#[derive(Clone, Debug)]
pub struct TrainConfig {
    pub cars: usize,
    pub episodes: usize,
    pub steps: usize,
    pub alpha: f64,
    pub gamma: f64,
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { cars: 2, episodes: 50, steps: EPISODE_STEPS, alpha: 0.1, gamma: 0.95, epsilon: 0.1, seed: 0 }
    }
}

/// Epsilon-greedy Q-learning. With `shield`, the shielded action is the one
/// executed and learned from.
pub fn train(cfg: &TrainConfig, shield: Option<&PairShield>, sampler: &PairShield) -> (QTable, Vec<EpisodeResult>) {
    let mut q = QTable::default();
    let mut curve = Vec::with_capacity(cfg.episodes);
    for e in 0..cfg.episodes {
        let mut rng = episode_rng(cfg.seed, e as u64);
        let mut s = initial_state(cfg.cars, sampler, &mut rng);
        let mut r = EpisodeResult::default();
        for _ in 0..cfg.steps {
            let keys: Vec<usize> = (0..cfg.cars).map(|i| {
                let (d, vf, vr) = s.pair(i);
                QTable::key(d, vf, vr)
            }).collect();
            let mut acts: Vec<i64> = keys
                .iter()
                .map(|&k| if rng.gen_bool(cfg.epsilon) { *ACCS.choose(&mut rng).expect("non-empty") } else { ACCS[q.best(k)] })
                .collect();
            if let Some(sh) = shield {
                let (a, changed) = shielded_action(sh, &s, &acts);
                acts = a;
                r.interventions += usize::from(changed);
            }
            let lead = *ACCS.choose(&mut rng).expect("non-empty");
            let o = env_step(&mut s, lead, &acts);
            r.steps += 1;
            r.reward += o.reward;
            for (i, &k) in keys.iter().enumerate() {
                let (d, vf, vr) = s.pair(i);
                let next = if o.failed() { 0.0 } else { q.values[QTable::key(d, vf, vr)].iter().cloned().fold(f64::MIN, f64::max) };
                let cell = &mut q.values[k][acc_index(acts[i])];
                *cell += cfg.alpha * (o.reward + cfg.gamma * next - *cell);
            }
            if o.failed() {
                r.crashed = o.crashed;
                r.lost = o.lost;
                break;
            }
        }
        curve.push(r);
    }
    (q, curve)
}

pub const CURVE_HEADER: &str = "episode,reward,steps,crashed,lost,interventions";

pub fn curve_csv(curve: &[EpisodeResult]) -> String {
    let mut s = String::from(CURVE_HEADER);
    s.push('\n');
    for (i, r) in curve.iter().enumerate() {
        s.push_str(&format!("{i},{:.3},{},{},{},{}\n", r.reward, r.steps, u8::from(r.crashed), u8::from(r.lost), r.interventions));
    }
    s
}

/// The learning curve (cumulative reward per episode) as a small SVG.
pub fn curve_svg(curve: &[EpisodeResult]) -> String {
    let (w, h, pad) = (640.0, 320.0, 30.0);
    let max = curve.iter().map(|r| r.reward).fold(1.0f64, f64::max);
    let min = curve.iter().map(|r| r.reward).fold(0.0f64, f64::min);
    let n = curve.len().max(2) - 1;
    let pts: Vec<String> = curve
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let x = pad + (w - 2.0 * pad) * i as f64 / n as f64;
            let y = h - pad - (h - 2.0 * pad) * (r.reward - min) / (max - min);
            format!("{x:.1},{y:.1}")
        })
        .collect();
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{pad}\" y=\"20\" font-size=\"12\">reward per episode ({min:.0} .. {max:.0})</text>\n\
         <polyline fill=\"none\" stroke=\"steelblue\" points=\"{}\"/>\n</svg>\n",
        pts.join(" ")
    )
}
