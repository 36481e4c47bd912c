use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use soccer_core::policy_io::PolicyKind;
use soccer_core::sim::Fidelity;
use soccer_eval::config::AppConfig;
use soccer_eval::experiments::{Arsenal, Experiment, ExperimentKind};
use soccer_eval::roster::Roster;
use soccer_eval::{replay, selftest, training};

#[derive(Parser)]
#[command(name = "soccer", about = "Train, evaluate and replay the soccer sub-policies")]
struct Cli {
    /// TOML run configuration; SOCCER_<SECTION>__<KEY> variables override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Training seed (train) or experiment seed (eval, replay).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (train, eval) or trace file (replay).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one sub-policy, or `all` for the set the experiments use.
    Train {
        #[arg(long)]
        policy: String,
        /// Training fidelity (defaults to the policy's scenario).
        #[arg(long)]
        fidelity: Option<String>,
        /// Override train.total_steps.
        #[arg(long)]
        steps: Option<u64>,
    },
    /// Run an experiment (or `all`) and write report JSON files.
    Eval {
        #[arg(long)]
        experiment: String,
        #[arg(long, default_value = "weights")]
        weights: PathBuf,
        /// Take the attacker's weights and selector overrides from a roster.
        #[arg(long)]
        roster: Option<PathBuf>,
        #[arg(long)]
        episodes: Option<usize>,
    },
    /// Export one episode as a JSON-lines trace, or verify a trace.
    Replay {
        #[arg(long)]
        experiment: Option<String>,
        #[arg(long, default_value = "weights")]
        weights: PathBuf,
        #[arg(long)]
        condition: Option<String>,
        #[arg(long, default_value_t = 0)]
        episode: u64,
        /// Re-simulate an exported trace and check it matches.
        #[arg(long)]
        verify: Option<PathBuf>,
    },
    /// Measure LOW-fidelity simulator throughput.
    Selftest {
        #[arg(long, default_value_t = 200_000)]
        steps: u64,
    },
    /// Print the observation layout of every policy.
    PrintLayouts,
}

fn parse_fidelity(s: &str) -> anyhow::Result<Fidelity> {
    match s.to_ascii_uppercase().as_str() {
        "LOW" => Ok(Fidelity::Low),
        "HIGH" => Ok(Fidelity::High),
        _ => bail!("unknown fidelity `{s}` (LOW or HIGH)"),
    }
}

fn experiments(name: &str) -> anyhow::Result<Vec<ExperimentKind>> {
    if name.eq_ignore_ascii_case("all") {
        return Ok(ExperimentKind::ALL.to_vec());
    }
    Ok(vec![name.parse::<ExperimentKind>().map_err(anyhow::Error::msg)?])
}

fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let mut config = AppConfig::load(cli.config.as_deref(), std::env::vars()).context("loading configuration")?;

    match cli.command {
        Command::Train { policy, fidelity, steps } => {
            let out = cli.out.unwrap_or_else(|| PathBuf::from("weights"));
            if let Some(seed) = cli.seed {
                config.train.seed = seed;
            }
            if let Some(steps) = steps {
                config.train.total_steps = steps;
            }
            let jobs: Vec<(PolicyKind, Option<Fidelity>)> = if policy.eq_ignore_ascii_case("all") {
                training::FULL_SET.to_vec()
            } else {
                let kind: PolicyKind = policy.parse().map_err(anyhow::Error::msg)?;
                let fid = fidelity.as_deref().map(parse_fidelity).transpose()?;
                vec![(kind, fid)]
            };
            for (kind, fid) in jobs {
                let spec = training::recipe(kind, fid);
                log::info!("training {kind} in {} ({})", spec.kind.as_str(), spec.fidelity);
                let start = std::time::Instant::now();
                let t = training::train_policy(&config, kind, fid, &config.train, |row, _| {
                    if row.update % 20 == 0 {
                        log::info!(
                            "update {:>4} steps {:>8} return {:>8.3} goal rate {:.2} entropy {:.3}",
                            row.update,
                            row.steps,
                            row.mean_return,
                            row.goal_rate,
                            row.entropy
                        );
                    }
                })?;
                let path = training::save(&out, kind, fid.or(Some(spec.fidelity)), &t)?;
                println!(
                    "{kind}: {} steps in {:.0}s, final goal rate {:.2}, wrote {} ({})",
                    t.outcome.steps,
                    start.elapsed().as_secs_f64(),
                    t.outcome.final_goal_rate(100),
                    path.display(),
                    t.weights.content_hash()
                );
            }
        }
        Command::Eval {
            experiment,
            weights,
            roster,
            episodes,
        } => {
            let seed = cli.seed.unwrap_or(config.sim.seed);
            let episodes = episodes.unwrap_or(config.eval.episodes);
            let out = cli.out.unwrap_or_else(|| PathBuf::from("reports"));
            std::fs::create_dir_all(&out)?;
            for kind in experiments(&experiment)? {
                let arsenal = load_arsenal(&weights, roster.as_deref(), kind, &mut config)?;
                let report = Experiment::new(kind, &config, &arsenal, seed).run(episodes)?;
                print!("{}", report.table());
                let path = out.join(format!("{}.json", kind.as_str().to_ascii_lowercase()));
                std::fs::write(&path, report.to_json())?;
                println!("report {} (hash {})\n", path.display(), report.hash());
            }
        }
        Command::Replay {
            experiment,
            weights,
            condition,
            episode,
            verify,
        } => {
            if let Some(trace) = verify {
                let (meta, last) = replay::verify(&trace)?;
                println!(
                    "{}: {} ticks replayed identically; outcome {:?}, final events {:?}",
                    trace.display(),
                    meta.result.ticks,
                    meta.result.outcome,
                    last.iter().map(|e| e.kind).collect::<Vec<_>>()
                );
                return Ok(());
            }
            let Some(experiment) = experiment else {
                bail!("replay needs --experiment (to export) or --verify (to check a trace)");
            };
            let kind: ExperimentKind = experiment.parse().map_err(anyhow::Error::msg)?;
            let arsenal = Arsenal::load(&weights, kind)?;
            let seed = cli.seed.unwrap_or(config.sim.seed);
            let exp = Experiment::new(kind, &config, &arsenal, seed);
            let names = exp.condition_names()?;
            let condition = condition.unwrap_or_else(|| names[0].clone());
            let path = cli.out.unwrap_or_else(|| PathBuf::from("trace.jsonl"));
            let meta = replay::export(&exp, &condition, episode, &path)?;
            println!(
                "wrote {} and {}: {} ticks, outcome {:?}",
                path.display(),
                replay::meta_path(&path).display(),
                meta.result.ticks,
                meta.result.outcome
            );
        }
        Command::Selftest { steps } => {
            let t = selftest::measure_throughput(steps)?;
            let rate = t.steps_per_sec();
            let ok = rate >= selftest::TARGET_STEPS_PER_SEC;
            println!(
                "LOW 4-robot step: {rate:.0} steps/s over {} steps ({}; target {:.0})",
                t.steps,
                if ok { "PASS" } else { "FAIL" },
                selftest::TARGET_STEPS_PER_SEC
            );
            if !ok {
                std::process::exit(1);
            }
        }
        Command::PrintLayouts => print!("{}", selftest::layouts()),
    }
    Ok(())
}

fn load_arsenal(dir: &Path, roster: Option<&Path>, kind: ExperimentKind, config: &mut AppConfig) -> anyhow::Result<Arsenal> {
    let Some(roster) = roster else {
        return Ok(Arsenal::load(dir, kind)?);
    };
    if kind != ExperimentKind::Decomposition1v2 {
        bail!("--roster applies to {} only", ExperimentKind::Decomposition1v2);
    }
    let r = Roster::load(roster, config.selector)?;
    let (_, set) = r.robots.first().context("roster lists no robots")?;
    config.selector = r.selector;
    let mut a = Arsenal::new();
    for k in PolicyKind::ALL {
        a.insert(None, set.get(k).expect("roster sets are complete").clone());
    }
    Ok(a)
}
