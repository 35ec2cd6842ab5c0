//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

use std::path::Path;
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use arctic_core::agents::{arctic_policy, AgentBlueprint, ArcticState};
use arctic_core::beliefs::{
    belief_distance, best_response_to_belief, forecast, min_epsilon_for_cooperation,
    worst_case_value,
};
use arctic_core::game::{expected_utility, maximin, minimax_value, nash_equilibria};
use arctic_core::rl::{evaluate, train_with_report};
use arctic_core::sim::{run_batch, BatchSummary, Engine};
use arctic_core::tradeoff::{
    cooperation_loss_bound, phi, risk_budget_sequence, simulate_tight_policy, switch_index,
};
use arctic_core::{
    AgentKind, AgentParams, Belief, CooperativeBelief, Horizon, MatrixGame, MixedStrategy, Player,
    SimConfig, StagePolicy, TradeoffParams, TrainConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

struct Suite {
    failures: usize,
}

impl Suite {
    fn run(&mut self, name: &str, budget: Duration, f: impl FnOnce() -> Check) {
        let start = Instant::now();
        let result = f();
        let elapsed = start.elapsed();
        let (ok, detail) = match result {
            Ok(d) if elapsed <= budget => (true, d),
            Ok(d) => (false, format!("{d}; over time budget {budget:?}")),
            Err(d) => (false, d),
        };
        if !ok {
            self.failures += 1;
        }
        println!(
            "{} {name} [{:.2}s] {detail}",
            if ok { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
    }
}

fn verdict(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

fn pd() -> MatrixGame {
    MatrixGame::prisoners_dilemma()
}

fn sh() -> MatrixGame {
    MatrixGame::stag_hunt()
}

fn batch(
    game: MatrixGame,
    i: AgentKind,
    j: AgentKind,
    x: f64,
    beta: f64,
    seed: u64,
) -> BatchSummary {
    let cfg = SimConfig {
        game_name: String::new(),
        game,
        agent_i: i,
        agent_j: j,
        x,
        beta,
        seed,
        ..SimConfig::default()
    };
    run_batch(&cfg).expect("batch runs")
}

const XS: [f64; 3] = [0.1, 0.5, 0.9];
const SEED: u64 = 7;

fn minimax_exactness() -> Check {
    let mut detail = Vec::new();
    let mut ok = true;
    for (name, game) in [("pd", pd()), ("sh", sh())] {
        for p in [Player::I, Player::J] {
            let v = maximin(&game, p).value;
            ok &= (v - 0.25).abs() <= 1e-9;
            detail.push(format!("{name} v={v}"));
        }
        let s = batch(game, AgentKind::AllD, AgentKind::AllD, 0.5, 0.0, SEED);
        let cells_ok =
            (s.score_mean_i - 25.0).abs() <= 0.15 && (s.score_mean_j - 25.0).abs() <= 0.15;
        ok &= cells_ok;
        detail.push(format!(
            "{name} adv-adv {:.2},{:.2}",
            s.score_mean_i, s.score_mean_j
        ));
    }
    verdict(ok, detail.join("; "))
}

fn pd_vs_t4t() -> Check {
    // intention window and expected first round with mean epsilon >= 0.99
    let targets = [(0.1, 40, 15), (0.5, 20, 10), (0.9, 5, 4)];
    let mut ok = true;
    let mut detail = Vec::new();
    for (x, centre, tol) in targets {
        let s = batch(pd(), AgentKind::Arctic, AgentKind::TitForTat, x, 0.0, SEED);
        let within = s.mean_intent_i[..10].iter().any(|m| (m - x).abs() <= 0.05);
        let round = s.first_round_eps_i_reaches(0.99).map(|t| t + 1);
        let eps_ok = round.is_some_and(|r| r.abs_diff(centre) <= tol);
        let max_eps = s.mean_eps_i.iter().copied().fold(0.0, f64::max);
        ok &= within && eps_ok;
        detail.push(format!(
            "x={x}: intent@10 {} eps99 round {:?} (max mean eps {max_eps:.3})",
            if within { "ok" } else { "missed" },
            round
        ));
    }
    verdict(ok, detail.join("; "))
}

fn pd_vs_alld() -> Check {
    let mut ok = true;
    let mut detail = Vec::new();
    for x in XS {
        let s = batch(pd(), AgentKind::Arctic, AgentKind::AllD, x, 0.0, SEED);
        // cooperation is read at the intention level, as in the per-round curves
        let coop = s.mean_intent_i.iter().copied().fold(0.0, f64::max);
        let eps = s.mean_eps_i.iter().copied().fold(0.0, f64::max);
        ok &= coop < 0.1 && eps <= 0.4 && s.score_mean_i >= 24.0;
        detail.push(format!(
            "x={x}: max mean intention {coop:.3} max eps {eps:.3} score {:.2}",
            s.score_mean_i
        ));
    }
    verdict(ok, detail.join("; "))
}

fn pd_self_play() -> Check {
    let mut ok = true;
    let mut detail = Vec::new();
    for x in XS {
        let s = batch(pd(), AgentKind::Arctic, AgentKind::Arctic, x, 0.0, SEED);
        let round = s.first_round_eps_i_reaches(0.99).map(|t| t + 1);
        let max_eps = s.mean_eps_i.iter().copied().fold(0.0, f64::max);
        ok &= round.is_some_and(|r| (80..=100).contains(&r));
        detail.push(format!(
            "x={x}: eps99 round {round:?} (max mean eps {max_eps:.3})"
        ));
    }
    verdict(ok, detail.join("; "))
}

fn stag_hunt() -> Check {
    let (x, beta) = (0.9, 0.9);
    let belief = CooperativeBelief::new(x, beta, 1.0, 0.0).map_err(|e| e.to_string())?;
    let horizon = Horizon::infinite(0.9).map_err(|e| e.to_string())?;
    let policy = StagePolicy::tied(x).map_err(|e| e.to_string())?;
    let eps_min = min_epsilon_for_cooperation(&sh(), &policy, &belief, &horizon, Player::I)
        .map_err(|e| e.to_string())?;
    let vs_pc = batch(
        sh(),
        AgentKind::Arctic,
        AgentKind::PcBestResponder,
        x,
        beta,
        SEED,
    );
    let vs_alld = batch(sh(), AgentKind::Arctic, AgentKind::AllD, x, beta, SEED);
    let final_coop = *vs_pc.mean_intent_i.last().expect("rounds");
    let adv_coop = vs_alld.mean_intent_i.iter().copied().fold(0.0, f64::max);
    verdict(
        final_coop >= 0.9 && adv_coop < 0.1,
        format!("min eps {eps_min:.4}; vs pc final mean intention {final_coop:.3}; vs alld max mean intention {adv_coop:.3}"),
    )
}

fn cooperation_threshold() -> Check {
    let belief = CooperativeBelief::new(0.5, 0.0, 1.0, 0.0).map_err(|e| e.to_string())?;
    let horizon = Horizon::infinite(0.9).map_err(|e| e.to_string())?;
    let policy = StagePolicy::tied(0.5).map_err(|e| e.to_string())?;
    let eps = min_epsilon_for_cooperation(&pd(), &policy, &belief, &horizon, Player::I)
        .map_err(|e| e.to_string())?;
    let expected = 0.125 / 6.75;
    let closed_ok = (eps - expected).abs() <= 1e-6;

    let params = AgentParams::new(pd(), Player::I);
    let mut state = ArcticState::new(&params).map_err(|e| e.to_string())?;
    let mut mismatches = 0;
    for k in 0..=10_000 {
        let e = k as f64 * 1e-4;
        state.epsilon = e;
        let alpha = arctic_policy(&state, &pd()).alpha;
        let want = if e > eps { 0.5 } else { 0.0 };
        if alpha != want {
            mismatches += 1;
        }
    }
    verdict(
        closed_ok && mismatches == 0,
        format!("min eps {eps:.9} vs {expected:.9}; grid mismatches {mismatches}"),
    )
}

fn tradeoff_suite() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut ok = true;
    let mut notes = Vec::new();

    let mut a_bad = 0;
    let mut b_worst: f64 = 0.0;
    for _ in 0..200 {
        let eps: f64 = rng.random_range(1e-6..=1.0);
        let c: f64 = rng.random_range(0.01..=4.0);
        let ph = phi(c);
        b_worst = b_worst.max((ph + c - ph * ph).abs());
        let seq = risk_budget_sequence(eps, c, 201);
        for (t, a) in seq.iter().enumerate() {
            let cap = eps * ph.powi(t as i32);
            if *a > cap * (1.0 + 1e-12) {
                a_bad += 1;
            }
        }
    }
    ok &= a_bad == 0 && b_worst <= 1e-12;
    notes.push(format!(
        "(a) violations {a_bad}; (b) max |phi+C-phi^2| {b_worst:.1e}"
    ));

    let mut c_bad = 0;
    let mut c_cases = 0;
    let mut c_worst = f64::INFINITY;
    for (name, game) in [("pd", pd()), ("sh", sh())] {
        let mut game_bad = 0;
        for rounds in [100, 1000] {
            for k in 1..=100 {
                let eps = k as f64 / 100.0;
                let p = TradeoffParams::for_game(&game, eps, rounds).map_err(|e| e.to_string())?;
                let i = switch_index(eps, p.c(), rounds).map_err(|e| e.to_string())?;
                if i >= rounds {
                    continue;
                }
                c_cases += 1;
                let gap = p.optimal_cooperative_value() - simulate_tight_policy(&p);
                let bound = cooperation_loss_bound(&p).map_err(|e| e.to_string())?;
                c_worst = c_worst.min(gap - bound);
                if gap < bound - 1e-6 {
                    game_bad += 1;
                }
            }
        }
        c_bad += game_bad;
        notes.push(format!("(c) {name} violations {game_bad}"));
    }
    ok &= c_bad == 0;
    notes.push(format!("(c) cases {c_cases}, min gap-bound {c_worst:.4}"));

    let mut d_bad = 0;
    for eps in [0.001, 0.01, 0.1, 0.5] {
        let ratios: Vec<f64> = [100, 1000, 10_000]
            .into_iter()
            .map(|t| {
                let p = TradeoffParams::for_game(&pd(), eps, t).expect("valid params");
                cooperation_loss_bound(&p).expect("bound") / p.optimal_cooperative_value()
            })
            .collect();
        if !(ratios[0] > ratios[1] && ratios[1] > ratios[2]) {
            d_bad += 1;
        }
    }
    ok &= d_bad == 0;
    notes.push(format!("(d) non-monotone epsilons {d_bad}"));
    verdict(ok, notes.join("; "))
}

fn random_normalized_game(rng: &mut ChaCha8Rng) -> MatrixGame {
    let mut m = || {
        [
            [rng.random::<f64>(), rng.random::<f64>()],
            [rng.random::<f64>(), rng.random::<f64>()],
        ]
    };
    let a = m();
    let b = m();
    MatrixGame::new(a, b).expect("finite payoffs")
}

fn random_coop_belief(rng: &mut ChaCha8Rng) -> CooperativeBelief {
    let mut b = [
        rng.random::<f64>(),
        rng.random::<f64>(),
        rng.random::<f64>(),
    ];
    b.sort_by(f64::total_cmp);
    let x = rng.random_range(0.01..=1.0);
    CooperativeBelief::new(x, b[1], b[2], b[0]).expect("ordered belief")
}

fn safety_on_random_games() -> Check {
    const EPS: [f64; 3] = [0.01, 0.1, 0.5];
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut p1_literal = [0usize; 3];
    let mut p1_relative = 0usize;
    let mut p1_cases = 0usize;
    let mut p2_bad = 0usize;
    let mut p3_bad = 0usize;
    let grid: Vec<f64> = (0..=100).map(|k| k as f64 / 100.0).collect();
    let horizon = Horizon::finite(1, 0.9).expect("one round");
    for _ in 0..1000 {
        let game = random_normalized_game(&mut rng);
        for (si, sj) in nash_equilibria(&game) {
            for (player, star) in [(Player::I, si), (Player::J, sj)] {
                let v = minimax_value(&game, player);
                let worst_star = worst_case_value(&game, star, player);
                let min_end = if worst_case_value(&game, MixedStrategy::COOPERATE, player)
                    <= worst_case_value(&game, MixedStrategy::DEFECT, player)
                {
                    1.0
                } else {
                    0.0
                };
                for (k, eps) in EPS.iter().enumerate() {
                    p1_cases += usize::from(k == 0);
                    let mixed = (1.0 - eps) * star.coop_prob() + eps * min_end;
                    let sigma = MixedStrategy::clamped(mixed);
                    let worst = worst_case_value(&game, sigma, player);
                    if worst < v - eps - 1e-9 {
                        p1_literal[k] += 1;
                    }
                    if worst < worst_star - eps - 1e-9 {
                        p1_relative += 1;
                    }
                }
            }
        }
        for eps in EPS {
            let coop = random_coop_belief(&mut rng);
            let mix = Belief::mixture(eps, coop).expect("valid epsilon");
            for player in [Player::I, Player::J] {
                if belief_distance(&game, &mix, &Belief::Adversarial, player) > eps + 1e-9 {
                    p2_bad += 1;
                }
                for &a in &grid {
                    let policy = StagePolicy {
                        alpha: a,
                        alpha_bar: a,
                    };
                    let f_mix = forecast(&game, &mix, &policy, player);
                    let f_adv = forecast(&game, &Belief::Adversarial, &policy, player);
                    let s = MixedStrategy::clamped(a);
                    let u_mix =
                        expected_utility(&game, s, MixedStrategy::clamped(f_mix.beta_now), player);
                    let u_adv =
                        expected_utility(&game, s, MixedStrategy::clamped(f_adv.beta_now), player);
                    if u_mix - u_adv > eps + 1e-9 {
                        p2_bad += 1;
                    }
                }
                let br = best_response_to_belief(&game, &mix, &horizon, true, player);
                let v = minimax_value(&game, player);
                let worst = worst_case_value(&game, MixedStrategy::clamped(br.alpha), player);
                if worst < v - eps - 1e-9 {
                    p3_bad += 1;
                }
            }
        }
    }
    let literal_bad: usize = p1_literal.iter().sum();
    verdict(
        literal_bad == 0 && p1_relative == 0 && p2_bad == 0 && p3_bad == 0,
        format!(
            "equilibrium strategies {p1_cases}: below v-eps per eps {EPS:?} = {p1_literal:?}, below worst(NE)-eps = {p1_relative}; closeness violations {p2_bad}; best-response violations {p3_bad}"
        ),
    )
}

fn cli(args: &[&str], dir: &Path) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_arctic-lab"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!(
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        ))
    }
}

fn body(path: &Path) -> Result<String, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(text
        .lines()
        .skip_while(|l| l.starts_with('#'))
        .collect::<Vec<_>>()
        .join("\n"))
}

fn determinism() -> Check {
    let root = tempfile::tempdir().map_err(|e| e.to_string())?;
    let runs: [(&[&str], &str); 4] = [
        (
            &[
                "simulate",
                "--seed",
                "11",
                "--runs",
                "20",
                "--trace-run",
                "3",
            ],
            "simulate.csv",
        ),
        (
            &[
                "tournament",
                "--seed",
                "11",
                "--runs",
                "10",
                "--agents",
                "arctic,t4t,alld",
            ],
            "tournament.csv",
        ),
        (
            &["train-rl", "--seed", "11", "--episodes", "300"],
            "policy.csv",
        ),
        (
            &[
                "simulate",
                "--seed",
                "11",
                "--runs",
                "20",
                "--trace-run",
                "3",
            ],
            "trace_run3.csv",
        ),
    ];
    let mut compared = 0;
    for (k, (args, file)) in runs.iter().enumerate() {
        let a = root.path().join(format!("a{k}"));
        let b = root.path().join(format!("b{k}"));
        cli(args, &a)?;
        cli(args, &b)?;
        if body(&a.join(file))? != body(&b.join(file))? {
            return Err(format!("{file} differs between runs"));
        }
        compared += 1;
    }
    let policy = root.path().join("a2").join("policy.csv");
    let policy = policy.to_str().ok_or("non-utf8 temp path")?;
    let a = root.path().join("eval_a");
    let b = root.path().join("eval_b");
    let eval = [
        "eval-rl", "--seed", "11", "--runs", "20", "--policy", policy,
    ];
    cli(&eval, &a)?;
    cli(&eval, &b)?;
    if body(&a.join("eval.csv"))? != body(&b.join("eval.csv"))? {
        return Err("eval.csv differs between runs".into());
    }
    compared += 1;
    verdict(true, format!("{compared} artifact pairs byte-identical"))
}

fn rl_lite() -> Check {
    let cfg = TrainConfig::default();
    let start = Instant::now();
    let (policy, report) = train_with_report(&cfg, 20).map_err(|e| e.to_string())?;
    let train_time = start.elapsed();

    let mut shaping_bad = 0;
    for row in &report.shaping_rows {
        let diff = row.shaped_reward - row.raw_reward;
        let shaped = row.other_level >= cfg.coop_threshold;
        let want = if shaped { row.other_reward } else { 0.0 };
        if diff != want || (diff != 0.0 && diff != row.other_reward) {
            shaping_bad += 1;
        }
    }

    let sim = SimConfig {
        agent_i: AgentKind::Rl("trained".into()),
        agent_j: AgentKind::AllD,
        runs: 300,
        seed: 23,
        ..SimConfig::default()
    };
    let policy = Arc::new(policy);
    let start = Instant::now();
    let summary =
        evaluate(Arc::clone(&policy), &AgentKind::AllD, &sim).map_err(|e| e.to_string())?;
    let engine = Engine::with_blueprints(
        sim.clone(),
        AgentBlueprint::Rl(Arc::clone(&policy)),
        AgentBlueprint::Simple(AgentKind::AllD),
    )
    .map_err(|e| e.to_string())?;
    let traces = engine.run_traces().map_err(|e| e.to_string())?;
    let eval_time = start.elapsed();
    let off_matrix = traces
        .iter()
        .flat_map(|t| &t.records)
        .filter(|r| (r.reward_i, r.reward_j) != sim.game.rewards(r.action_i, r.action_j))
        .count();

    verdict(
        summary.score_mean_i >= 24.0
            && shaping_bad == 0
            && !report.shaping_rows.is_empty()
            && off_matrix == 0
            && train_time <= secs(300)
            && eval_time <= secs(60),
        format!(
            "score vs alld {:.2} (se {:.2}); shaping rows {} bad {shaping_bad}; off-matrix rewards {off_matrix}; train {:.1}s eval {:.1}s",
            summary.score_mean_i,
            summary.score_se_i,
            report.shaping_rows.len(),
            train_time.as_secs_f64(),
            eval_time.as_secs_f64()
        ),
    )
}

fn main() {
    let mut suite = Suite { failures: 0 };
    suite.run("minimax exactness", secs(10), minimax_exactness);
    suite.run("pd arctic vs t4t", secs(60), pd_vs_t4t);
    suite.run("pd arctic vs alld", secs(60), pd_vs_alld);
    suite.run("pd arctic self-play", secs(60), pd_self_play);
    suite.run("stag hunt cooperation", secs(120), stag_hunt);
    suite.run("cooperation threshold", secs(1), cooperation_threshold);
    suite.run("trade-off bound suite", secs(5), tradeoff_suite);
    suite.run(
        "safety properties on random games",
        secs(30),
        safety_on_random_games,
    );
    suite.run("cli determinism", secs(120), determinism);
    suite.run("tabular learner", secs(360), rl_lite);
    println!("{} criteria failed", suite.failures);
    if suite.failures > 0 {
        std::process::exit(1);
    }
}
