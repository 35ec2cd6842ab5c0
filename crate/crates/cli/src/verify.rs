use std::path::Path;

use anyhow::Context;
use arctic_core::beliefs::{best_response_to_belief, exploitability, Horizon};
use arctic_core::config::{metadata_header, ExperimentConfig};
use arctic_core::game::{expected_utility, minimax_value, Action, MixedStrategy, Player};
use arctic_core::MatrixGame;
use serde::Deserialize;
use serde_json::json;

use crate::output::Output;
use crate::{config_err, Failure, Outcome};

const TOL: f64 = 1e-9;

#[derive(Deserialize)]
struct TraceRow {
    round: u32,
    intention_i: f64,
    intention_j: f64,
    action_i: char,
    action_j: char,
}

fn action(c: char) -> anyhow::Result<Action> {
    match c {
        'C' => Ok(Action::C),
        'D' => Ok(Action::D),
        other => anyhow::bail!("action `{other}` is neither C nor D"),
    }
}

fn read_trace(path: &Path) -> anyhow::Result<Vec<TraceRow>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .with_context(|| format!("reading {}", path.display()))?;
    reader
        .deserialize()
        .collect::<Result<Vec<TraceRow>, _>>()
        .with_context(|| format!("parsing {}", path.display()))
}

/// Replays the risk-capital recursion along a trace and checks that every
/// intention stays within the capital available before it.
fn trace_report(
    game: &MatrixGame,
    rows: &[TraceRow],
    player: Player,
    epsilon_0: f64,
) -> anyhow::Result<(String, bool)> {
    let v = minimax_value(game, player);
    let k = game.payoff_range();
    let mut eps = epsilon_0;
    let mut cumulative = 0.0;
    let mut worst_cumulative: f64 = 0.0;
    let mut violations = 0u32;
    let mut worst_excess = f64::NEG_INFINITY;
    let mut body = String::from("round,intention,exploitability,allowance,cumulative_gap\n");
    for row in rows {
        let (alpha, opp) = match player {
            Player::I => (row.intention_i, action(row.action_j)?),
            Player::J => (row.intention_j, action(row.action_i)?),
        };
        let policy = MixedStrategy::new(alpha).map_err(anyhow::Error::new)?;
        let exploit = exploitability(game, policy, player);
        let allowance = k * eps;
        worst_excess = worst_excess.max(exploit - allowance);
        if exploit > allowance + TOL {
            violations += 1;
        }
        let gain = expected_utility(game, policy, opp.into(), player) - v;
        cumulative += gain;
        worst_cumulative = worst_cumulative.min(cumulative);
        eps = (eps + gain / k).clamp(0.0, 1.0);
        body.push_str(&format!(
            "{},{alpha:.6},{exploit:.6},{allowance:.6},{cumulative:.6}\n",
            row.round
        ));
    }
    let summary = format!(
        "rounds = {}\nepsilon_0 = {epsilon_0}\nviolations = {violations}\nworst_excess = {worst_excess:.9}\nworst_cumulative_gap = {worst_cumulative:.9}\n",
        rows.len()
    );
    Ok((format!("{summary}{body}"), violations == 0))
}

fn parse_player(s: &str) -> std::result::Result<Player, Failure> {
    match s {
        "i" => Ok(Player::I),
        "j" => Ok(Player::J),
        other => Err(Failure::Config(anyhow::anyhow!(
            "player `{other}` is neither i nor j"
        ))),
    }
}

pub fn verify_safety(
    cfg: &ExperimentConfig,
    out: &Output,
    alpha: Option<f64>,
    trace: Option<&Path>,
    player: &str,
) -> Outcome {
    let game = cfg.game().map_err(config_err)?;
    let player = parse_player(player)?;
    let k = game.payoff_range();
    let (report, ok) = if let Some(path) = trace {
        let rows = read_trace(path).map_err(Failure::Config)?;
        let epsilon_0 = cfg.epsilon_0.unwrap_or(0.0);
        trace_report(&game, &rows, player, epsilon_0).map_err(Failure::Config)?
    } else {
        let epsilon = cfg.belief.epsilon.unwrap_or(0.0);
        let alpha = match alpha {
            Some(a) => a,
            None => {
                let belief = cfg.belief().map_err(config_err)?;
                let horizon = Horizon::finite(1, cfg.gamma()).map_err(config_err)?;
                best_response_to_belief(&game, &belief, &horizon, true, player).alpha
            }
        };
        let policy = MixedStrategy::new(alpha).map_err(config_err)?;
        let exploit = exploitability(&game, policy, player);
        let ok = exploit <= k * epsilon + TOL;
        (
            format!(
                "alpha = {alpha:.9}\nv = {:.9}\nexploitability = {exploit:.9}\nallowance = {:.9}\nsafe = {ok}\n",
                minimax_value(&game, player),
                k * epsilon
            ),
            ok,
        )
    };
    print!("{report}");
    let header = metadata_header(
        "verify-safety",
        &json!({ "game": game, "trace": trace, "alpha": alpha, "epsilon": cfg.belief.epsilon, "epsilon_0": cfg.epsilon_0 }),
    );
    out.write_if_requested("verify_safety.txt", &header, &report)?;
    if ok {
        Ok(())
    } else {
        Err(Failure::Verification(
            "exploitability exceeds the allowed slack".into(),
        ))
    }
}
