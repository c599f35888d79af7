use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Subcommand};
use serde_json::json;

use tshield::platoon::{
    curve_csv, curve_svg, evaluate, synth_pair_shield, train, EpisodeStats, EvalConfig, PairConfig, PairShield, Policy,
    Regime, TrainConfig, EPISODE_STEPS,
};

use super::{print_json, CliResult, Failure};

#[derive(Subcommand)]
pub enum PlatoonCmd {
    /// Train Q-learning agents, then evaluate the learned policies.
    Train {
        #[command(flatten)]
        common: Common,
        /// Training episodes per configuration.
        #[arg(long, default_value_t = 50)]
        episodes: usize,
    },
    /// Evaluate a uniformly random policy.
    Eval {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
pub struct Common {
    /// Platoon sizes, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "2")]
    cars: Vec<usize>,
    /// Shield regimes (none, exec, train+exec), comma separated.
    #[arg(long = "shield", value_delimiter = ',', default_value = "none,exec,train+exec")]
    regimes: Vec<Regime>,
    /// Evaluation episodes per configuration.
    #[arg(long, default_value_t = 1000)]
    runs: usize,
    #[arg(long, default_value_t = EPISODE_STEPS)]
    steps: usize,
    #[arg(long)]
    out: PathBuf,
}

fn curve_name(cars: usize, regime: Regime) -> String {
    format!("curve_{cars}_{}", regime.to_string().replace('+', "_"))
}

fn write(dir: &Path, name: &str, text: &str) -> Result<(), Failure> {
    std::fs::write(dir.join(name), text).map_err(Failure::from)
}

pub fn run(seed: u64, cmd: &PlatoonCmd) -> CliResult {
    let common = match cmd {
        PlatoonCmd::Train { common, .. } | PlatoonCmd::Eval { common } => common,
    };
    if common.cars.iter().any(|&c| c < 2) {
        return Err(super::usage("a platoon needs at least two cars"));
    }
    std::fs::create_dir_all(&common.out)?;
    let shield: PairShield = synth_pair_shield(PairConfig::default())?;
    let mut csv = format!("{}\n", EpisodeStats::CSV_HEADER);
    let mut rows = Vec::new();
    for &cars in &common.cars {
        for &regime in &common.regimes {
            let exec = regime.shield_in_execution().then_some(&shield);
            let eval = EvalConfig { cars, runs: common.runs, steps: common.steps, seed };
            let stats = match cmd {
                PlatoonCmd::Eval { .. } => evaluate(Policy::Random, exec, &shield, &eval).0,
                PlatoonCmd::Train { episodes, .. } => {
                    let cfg = TrainConfig { cars, episodes: *episodes, steps: common.steps, seed, ..TrainConfig::default() };
                    let (q, curve) = train(&cfg, regime.shield_in_training().then_some(&shield), &shield);
                    let name = curve_name(cars, regime);
                    write(&common.out, &format!("{name}.csv"), &curve_csv(&curve))?;
                    write(&common.out, &format!("{name}.svg"), &curve_svg(&curve))?;
                    // Evaluation episodes use streams disjoint from training.
                    let eval = EvalConfig { seed: seed.wrapping_add(1), ..eval };
                    evaluate(Policy::Greedy(&q), exec, &shield, &eval).0
                }
            };
            csv.push_str(&stats.csv_row(cars, regime));
            csv.push('\n');
            rows.push(json!({
                "cars": cars,
                "regime": regime,
                "crashes": stats.crashes,
                "lost": stats.lost,
                "mean_time": stats.mean_time,
                "mean_reward": stats.mean_reward,
                "interventions": stats.interventions,
            }));
        }
    }
    write(&common.out, "stats.csv", &csv)?;
    print_json(&json!({ "out": common.out, "results": rows }));
    Ok(ExitCode::SUCCESS)
}
