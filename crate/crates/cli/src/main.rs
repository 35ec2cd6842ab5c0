mod output;
mod verify;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context};
use arctic_core::beliefs::{
    cooperation_condition, cooperation_margin, min_epsilon_for_cooperation, FutureMode, StagePolicy,
};
use arctic_core::config::{metadata_header, set_dotted, ExperimentConfig};
use arctic_core::game::{maximin, Player};
use arctic_core::rl::{evaluate, train, TabularPolicy};
use arctic_core::sim::{tournament, Engine};
use arctic_core::tradeoff::{bound_sweep, TradeoffParams};
use arctic_core::{AgentKind, Error};
use clap::{Args, Parser, Subcommand};
use serde_json::json;
use toml::Value;

use crate::output::Output;

#[derive(Parser, Debug)]
#[command(
    name = "arctic-lab",
    version,
    about = "Risk-capital cooperation experiments for repeated 2x2 games"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

/// Settings shared by every subcommand. Flags win over the config file.
#[derive(Args, Debug, Clone, Default)]
struct Common {
    /// TOML experiment config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Extra `key=value` override; dotted keys reach into sections.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
    /// Directory for artifact files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Game name (pd, stag_hunt) or path to a game file.
    #[arg(long, global = true)]
    game: Option<String>,
    /// Comma-separated agent kinds.
    #[arg(long, value_delimiter = ',', global = true)]
    agents: Option<Vec<String>>,
    #[arg(long, global = true)]
    rounds: Option<u32>,
    #[arg(long, global = true)]
    runs: Option<u32>,
    #[arg(long, global = true)]
    noise: Option<f64>,
    #[arg(long, global = true)]
    gamma: Option<f64>,
    #[arg(long, global = true)]
    x: Option<f64>,
    #[arg(long, global = true)]
    beta: Option<f64>,
    #[arg(long = "epsilon-0", global = true)]
    epsilon_0: Option<f64>,
    /// Risk capital of a mixture belief.
    #[arg(long, global = true)]
    epsilon: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Batch of seeded matches; writes per-round means.
    Simulate {
        /// Also write the full trace of this run index.
        #[arg(long)]
        trace_run: Option<u32>,
    },
    /// Round robin over the agent list, self-play included.
    Tournament,
    /// Cooperation-loss bound sweep over epsilon.
    Bound {
        #[arg(long, value_delimiter = ',')]
        epsilons: Option<Vec<f64>>,
        /// Horizon length T.
        #[arg(long)]
        horizon: Option<u32>,
        /// Return per unit of cooperation (default T - P).
        #[arg(long)]
        d: Option<f64>,
    },
    /// Cooperation condition margin and minimal risk capital.
    CheckCoop {
        /// Cooperation level to test (default x).
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Minimax values of both players.
    Minimax,
    /// Exploitability of a strategy, of a belief's best response, or of a trace.
    VerifySafety {
        #[arg(long, conflicts_with = "trace")]
        alpha: Option<f64>,
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Seat to check, i or j.
        #[arg(long, default_value = "i")]
        player: String,
    },
    /// Train a tabular policy in the shaped environment.
    TrainRl {
        /// partner, arctic, self or zoo:<kind>.
        #[arg(long)]
        opponent: Option<String>,
        #[arg(long)]
        episodes: Option<u64>,
        /// Policy file to write (default <out>/policy.csv).
        #[arg(long)]
        policy: Option<PathBuf>,
    },
    /// Evaluate a trained policy without shaping.
    EvalRl {
        #[arg(long)]
        policy: PathBuf,
        #[arg(long, default_value = "alld")]
        opponent: String,
    },
}

/// Failure classes mapped onto exit codes.
enum Failure {
    Config(anyhow::Error),
    Verification(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        let config = e.chain().any(|cause| {
            matches!(
                cause.downcast_ref::<Error>(),
                Some(
                    Error::Config(_)
                        | Error::InvalidParameter { .. }
                        | Error::InvalidGame(_)
                        | Error::UnknownAgent(_)
                        | Error::ConstantPayoffs
                        | Error::Io { .. }
                        | Error::PolicyFormat(_)
                )
            )
        });
        if config {
            Failure::Config(e)
        } else {
            Failure::Runtime(e)
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        anyhow::Error::new(e).into()
    }
}

type Outcome = std::result::Result<(), Failure>;

fn overrides(common: &Common) -> anyhow::Result<toml::Table> {
    let mut t = toml::Table::new();
    let float = |v: f64| Value::Float(v);
    let mut put = |k: &str, v: Value| set_dotted(&mut t, k, v);
    if let Some(s) = common.seed {
        put(
            "seed",
            Value::Integer(
                i64::try_from(s).context("seed does not fit in a signed 64-bit integer")?,
            ),
        )?;
    }
    if let Some(g) = &common.game {
        put("game", Value::String(g.clone()))?;
    }
    if let Some(a) = &common.agents {
        put(
            "agents",
            Value::Array(a.iter().map(|s| Value::String(s.trim().into())).collect()),
        )?;
    }
    if let Some(r) = common.rounds {
        put("rounds", Value::Integer(r.into()))?;
    }
    if let Some(r) = common.runs {
        put("runs", Value::Integer(r.into()))?;
    }
    for (key, v) in [
        ("noise", common.noise),
        ("gamma", common.gamma),
        ("belief.x", common.x),
        ("belief.beta", common.beta),
        ("epsilon_0", common.epsilon_0),
        ("belief.epsilon", common.epsilon),
    ] {
        if let Some(v) = v {
            put(key, float(v))?;
        }
    }
    Ok(t)
}

fn load_config(common: &Common) -> std::result::Result<ExperimentConfig, Failure> {
    let mut table = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                Failure::Config(
                    Error::Io {
                        path: path.clone(),
                        source: e,
                    }
                    .into(),
                )
            })?;
            text.parse::<toml::Table>().map_err(|e| {
                Failure::Config(anyhow::anyhow!("{}: {}", path.display(), e.message()))
            })?
        }
        None => toml::Table::new(),
    };
    // a top-level x/beta in the file would clash with the flag's belief.* key
    for key in ["x", "beta"] {
        let flag = if key == "x" { common.x } else { common.beta };
        if flag.is_some() {
            table.remove(key);
        }
    }
    let flags = overrides(common).map_err(Failure::Config)?;
    merge(&mut table, flags);
    arctic_core::config::apply_overrides(&mut table, &common.set)
        .map_err(|e| Failure::Config(e.into()))?;
    ExperimentConfig::from_table(table).map_err(|e| Failure::Config(e.into()))
}

fn merge(base: &mut toml::Table, top: toml::Table) {
    for (k, v) in top {
        match (base.get_mut(&k), v) {
            (Some(Value::Table(b)), Value::Table(t)) => merge(b, t),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

fn config_err(e: Error) -> Failure {
    Failure::Config(e.into())
}

fn agent_list(cfg: &ExperimentConfig) -> std::result::Result<Vec<AgentKind>, Failure> {
    cfg.agent_kinds().map_err(config_err)
}

fn simulate(cfg: &ExperimentConfig, out: &Output, trace_run: Option<u32>) -> Outcome {
    let sim = cfg.sim_config().map_err(config_err)?;
    let engine = Engine::new(sim.clone())?;
    let summary = engine.run_batch()?;
    let header = metadata_header("simulate", &sim);
    let path = out.write("simulate.csv", &header, &summary.to_csv())?;
    println!("wrote {}", path.display());
    println!(
        "score_i = {:.4} (se {:.4}), score_j = {:.4} (se {:.4}), runs = {}",
        summary.score_mean_i,
        summary.score_se_i,
        summary.score_mean_j,
        summary.score_se_j,
        summary.runs
    );
    if let Some(k) = trace_run {
        if k >= sim.runs {
            return Err(Failure::Config(anyhow::anyhow!(
                "trace run {k} is not below runs = {}",
                sim.runs
            )));
        }
        let trace = engine.run_match(arctic_core::sim::split_seed(sim.seed, u64::from(k)))?;
        let header = metadata_header("trace", &json!({ "config": sim, "run": k }));
        let path = out.write(&format!("trace_run{k}.csv"), &header, &trace.to_csv())?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn run_tournament(cfg: &ExperimentConfig, out: &Output) -> Outcome {
    let kinds = agent_list(cfg)?;
    let base = cfg
        .sim_config_for(AgentKind::AllD, AgentKind::AllD)
        .map_err(config_err)?;
    let matrix = tournament(&kinds, &base).map_err(|e| match e {
        Error::Config(_) => config_err(e),
        other => other.into(),
    })?;
    let header = metadata_header(
        "tournament",
        &json!({ "config": base, "agents": kinds, "runs": base.runs }),
    );
    let path = out.write("tournament.csv", &header, &matrix.to_csv())?;
    println!("wrote {}", path.display());
    print!("{}", matrix.to_csv());
    Ok(())
}

const DEFAULT_EPSILONS: [f64; 9] = [0.001, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0];

fn bound(
    cfg: &ExperimentConfig,
    out: &Output,
    eps: Option<Vec<f64>>,
    horizon: Option<u32>,
    d: Option<f64>,
) -> Outcome {
    let game = cfg.game().map_err(config_err)?;
    let rounds = horizon.or(cfg.bound.rounds).or(cfg.rounds).unwrap_or(100);
    let mut params = TradeoffParams::for_game(&game, 1.0, rounds).map_err(config_err)?;
    if let Some(d) = d.or(cfg.bound.d) {
        params = TradeoffParams::new(1.0, d, params.p_minus_s, rounds, params.v, params.r)
            .map_err(config_err)?;
    }
    let epsilons = eps
        .or_else(|| cfg.bound.epsilons.clone())
        .unwrap_or_else(|| DEFAULT_EPSILONS.to_vec());
    if let Some(bad) = epsilons.iter().find(|e| !(**e > 0.0 && **e <= 1.0)) {
        return Err(Failure::Config(anyhow::anyhow!(
            "epsilon {bad} is not in (0, 1]"
        )));
    }
    let rows = bound_sweep(&params, &epsilons)?;
    let mut body = String::from("epsilon,switch_index,bound,simulated_gap\n");
    for r in &rows {
        body.push_str(&format!(
            "{:.6},{},{:.6},{:.6}\n",
            r.epsilon, r.switch_index, r.bound, r.simulated_gap
        ));
    }
    let header = metadata_header("bound", &json!({ "params": params, "epsilons": epsilons }));
    let path = out.write("bound.csv", &header, &body)?;
    println!("wrote {}", path.display());
    print!("{body}");
    Ok(())
}

fn check_coop(cfg: &ExperimentConfig, out: &Output, alpha: Option<f64>) -> Outcome {
    let game = cfg.game().map_err(config_err)?;
    let belief = cfg.cooperative_belief().map_err(config_err)?;
    let horizon = cfg.horizon().map_err(config_err)?;
    let alpha = alpha.unwrap_or(belief.x);
    let policy = StagePolicy::tied(alpha).map_err(config_err)?;
    let mut report = String::new();
    report.push_str(&format!(
        "game = {}\nx = {}\nbeta = {}\nbeta_plus = {}\nbeta_minus = {}\ngamma = {}\nfuture_weight = {:.6}\nalpha = {alpha}\n",
        cfg.game_spec().label(),
        belief.x,
        belief.beta,
        belief.beta_plus,
        belief.beta_minus,
        horizon.gamma(),
        horizon.future_weight(),
    ));
    let margin = cooperation_margin(&game, &policy, &belief, &horizon, Player::I);
    report.push_str(&format!("margin_tied = {margin:.9}\n"));
    let ex = cooperation_condition(
        &game,
        alpha,
        &belief,
        &horizon,
        FutureMode::Existential,
        Player::I,
    );
    report.push_str(&format!(
        "margin_existential = {:.9} (alpha_bar = {:.3})\ncooperation_tied = {}\ncooperation_existential = {}\n",
        ex.margin,
        ex.alpha_bar,
        margin >= 0.0,
        ex.holds
    ));
    match min_epsilon_for_cooperation(&game, &policy, &belief, &horizon, Player::I) {
        Ok(eps) => report.push_str(&format!("min_epsilon = {eps:.9}\n")),
        Err(Error::InfeasibleCondition) => report.push_str("min_epsilon = infeasible\n"),
        Err(Error::Domain(m)) => report.push_str(&format!("min_epsilon = undefined ({m})\n")),
        Err(e) => return Err(e.into()),
    }
    print!("{report}");
    out.write_if_requested(
        "check_coop.txt",
        &metadata_header(
            "check-coop",
            &json!({ "game": game, "belief": belief, "gamma": horizon.gamma() }),
        ),
        &report,
    )?;
    Ok(())
}

fn minimax(cfg: &ExperimentConfig, out: &Output) -> Outcome {
    let game = cfg.game().map_err(config_err)?;
    let mut report = String::new();
    for (name, p) in [("i", Player::I), ("j", Player::J)] {
        let m = maximin(&game, p);
        report.push_str(&format!(
            "v_{name} = {}\nstrategy_{name} = {}\n",
            m.value,
            m.strategy.coop_prob()
        ));
    }
    print!("{report}");
    out.write_if_requested(
        "minimax.txt",
        &metadata_header("minimax", &json!({ "game": game })),
        &report,
    )?;
    Ok(())
}

fn train_rl(
    cfg: &ExperimentConfig,
    out: &Output,
    opponent: Option<String>,
    episodes: Option<u64>,
    policy_path: Option<PathBuf>,
) -> Outcome {
    let mut cfg = cfg.clone();
    if opponent.is_some() {
        cfg.rl.opponent = opponent;
    }
    if episodes.is_some() {
        cfg.rl.episodes = episodes;
    }
    let train_cfg = cfg.train_config().map_err(config_err)?;
    let policy = train(&train_cfg)?;
    let text = policy.to_file_string();
    let path = match policy_path {
        Some(p) => {
            output::write_atomic(&p, &text)?;
            p
        }
        None => out.write("policy.csv", "", &text)?,
    };
    println!(
        "wrote {} (fingerprint {})",
        path.display(),
        policy.meta.fingerprint
    );
    Ok(())
}

fn eval_rl(cfg: &ExperimentConfig, out: &Output, policy_path: &Path, opponent: &str) -> Outcome {
    let policy = Arc::new(TabularPolicy::load(policy_path).map_err(config_err)?);
    let opponent: AgentKind = opponent.parse().map_err(config_err)?;
    let sim = cfg
        .sim_config_for(AgentKind::Rl(policy_path.to_path_buf()), opponent.clone())
        .map_err(config_err)?;
    let summary = evaluate(policy.clone(), &opponent, &sim)?;
    let header = metadata_header("eval-rl", &json!({ "config": sim, "policy": policy.meta }));
    let path = out.write("eval.csv", &header, &summary.to_csv())?;
    println!("wrote {}", path.display());
    println!(
        "score_policy = {:.4} (se {:.4}), score_{opponent} = {:.4} (se {:.4}), runs = {}",
        summary.score_mean_i,
        summary.score_se_i,
        summary.score_mean_j,
        summary.score_se_j,
        summary.runs
    );
    Ok(())
}

fn run(cli: Cli) -> Outcome {
    let cfg = load_config(&cli.common)?;
    let out = Output::new(cli.common.out.clone());
    match cli.command {
        Command::Simulate { trace_run } => simulate(&cfg, &out, trace_run),
        Command::Tournament => run_tournament(&cfg, &out),
        Command::Bound {
            epsilons,
            horizon,
            d,
        } => bound(&cfg, &out, epsilons, horizon, d),
        Command::CheckCoop { alpha } => check_coop(&cfg, &out, alpha),
        Command::Minimax => minimax(&cfg, &out),
        Command::VerifySafety {
            alpha,
            trace,
            player,
        } => verify::verify_safety(&cfg, &out, alpha, trace.as_deref(), &player),
        Command::TrainRl {
            opponent,
            episodes,
            policy,
        } => train_rl(&cfg, &out, opponent, episodes, policy),
        Command::EvalRl { policy, opponent } => eval_rl(&cfg, &out, &policy, &opponent),
    }
}

fn init_threads() -> anyhow::Result<()> {
    if let Ok(raw) = std::env::var("ARCTIC_LAB_THREADS") {
        let n: usize = raw
            .parse()
            .with_context(|| format!("ARCTIC_LAB_THREADS={raw:?} is not a count"))?;
        if n == 0 {
            bail!("ARCTIC_LAB_THREADS must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = init_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Verification(msg)) => {
            eprintln!("verification failed: {msg}");
            ExitCode::from(3)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
