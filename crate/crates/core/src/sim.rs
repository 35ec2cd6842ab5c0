//! Seeded repeated-game matches, batches and round-robin tournaments.
//!
//! Every run draws from its own ChaCha8 stream seeded with
//! [`split_seed`]`(master_seed, run_index)`. Per round the stream is consumed
//! in a fixed order (sample i, sample j, noise event i, noise draw i, noise
//! event j, noise draw j), so results depend only on the config and the
//! master seed, never on scheduling.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agents::{
    AgentBlueprint, AgentKind, AgentObservation, AgentParams, RoundOutcome, UpdateMode,
};
use crate::error::{Error, Result};
use crate::game::{Action, MatrixGame, Player};

/// How action noise perturbs a sampled action.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseModel {
    /// Replace the action by a uniformly drawn one (half the events change nothing).
    #[default]
    Resample,
    /// Replace the action by the opposite one.
    Flip,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub game_name: String,
    pub game: MatrixGame,
    pub agent_i: AgentKind,
    pub agent_j: AgentKind,
    pub rounds: u32,
    pub noise: f64,
    pub noise_model: NoiseModel,
    pub gamma: f64,
    pub runs: u32,
    pub seed: u64,
    pub epsilon_0: f64,
    pub x: f64,
    pub beta: f64,
    pub beta_plus: f64,
    pub beta_minus: f64,
    pub tie_future: bool,
    pub update_mode: UpdateMode,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            game_name: "pd".into(),
            game: MatrixGame::prisoners_dilemma(),
            agent_i: AgentKind::Arctic,
            agent_j: AgentKind::TitForTat,
            rounds: 100,
            noise: 0.05,
            noise_model: NoiseModel::Resample,
            gamma: 0.9,
            runs: 200,
            seed: 0,
            epsilon_0: 0.0,
            x: 0.5,
            beta: 0.0,
            beta_plus: 1.0,
            beta_minus: 0.0,
            tie_future: true,
            update_mode: UpdateMode::Intention,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rounds == 0 {
            return Err(Error::Config("rounds must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.noise) {
            return Err(Error::Config(format!(
                "noise {} is not in [0, 1)",
                self.noise
            )));
        }
        if self.runs == 0 {
            return Err(Error::EmptyBatch);
        }
        if !(0.0..=1.0).contains(&self.epsilon_0) {
            return Err(Error::Config(format!(
                "epsilon_0 {} is not in [0, 1]",
                self.epsilon_0
            )));
        }
        // surfaces belief and horizon errors before any run starts
        let params = self.agent_params(Player::I);
        params.belief()?;
        params.horizon()?;
        Ok(())
    }

    pub fn agent_params(&self, player: Player) -> AgentParams {
        AgentParams {
            game: self.game,
            player,
            x: self.x,
            beta: self.beta,
            beta_plus: self.beta_plus,
            beta_minus: self.beta_minus,
            gamma: self.gamma,
            epsilon_0: self.epsilon_0,
            tie_future: self.tie_future,
            update_mode: self.update_mode,
        }
    }
}

/// One played round.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RoundRecord {
    pub round: u32,
    pub intention_i: f64,
    pub intention_j: f64,
    pub action_i: Action,
    pub action_j: Action,
    pub reward_i: f64,
    pub reward_j: f64,
    /// Risk capital after this round's update; `None` for agents without one.
    pub epsilon_i: Option<f64>,
    pub epsilon_j: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MatchTrace {
    pub records: Vec<RoundRecord>,
    pub total_i: f64,
    pub total_j: f64,
    pub floor_events_i: u32,
    pub floor_events_j: u32,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "nan".to_string(), |e| format!("{e:.6}"))
}

impl MatchTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "round,intention_i,intention_j,action_i,action_j,reward_i,reward_j,epsilon_i,epsilon_j\n",
        );
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{:.6},{:.6},{},{},{:.6},{:.6},{},{}",
                r.round,
                r.intention_i,
                r.intention_j,
                r.action_i.as_char(),
                r.action_j.as_char(),
                r.reward_i,
                r.reward_j,
                fmt_opt(r.epsilon_i),
                fmt_opt(r.epsilon_j),
            );
        }
        out
    }
}

/// 64-bit mix of a master seed and a run index (splitmix64 finalizer).
pub fn split_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A config with its agent kinds resolved, ready to run many matches.
pub struct Engine {
    config: SimConfig,
    blueprint_i: AgentBlueprint,
    blueprint_j: AgentBlueprint,
}

impl Engine {
    pub fn new(config: SimConfig) -> Result<Self> {
        config.validate()?;
        Ok(Engine {
            blueprint_i: AgentBlueprint::resolve(&config.agent_i)?,
            blueprint_j: AgentBlueprint::resolve(&config.agent_j)?,
            config,
        })
    }

    pub fn with_blueprints(
        config: SimConfig,
        blueprint_i: AgentBlueprint,
        blueprint_j: AgentBlueprint,
    ) -> Result<Self> {
        config.validate()?;
        Ok(Engine {
            config,
            blueprint_i,
            blueprint_j,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    fn perturb(&self, action: Action, event: f64, draw: f64) -> Action {
        if event >= self.config.noise {
            return action;
        }
        match self.config.noise_model {
            NoiseModel::Resample => {
                if draw < 0.5 {
                    Action::C
                } else {
                    Action::D
                }
            }
            NoiseModel::Flip => action.opposite(),
        }
    }

    pub fn run_match(&self, run_seed: u64) -> Result<MatchTrace> {
        let cfg = &self.config;
        let mut agent_i = self.blueprint_i.spawn(&cfg.agent_params(Player::I))?;
        let mut agent_j = self.blueprint_j.spawn(&cfg.agent_params(Player::J))?;
        let mut rng = ChaCha8Rng::seed_from_u64(run_seed);
        let mut obs_i = AgentObservation::first();
        let mut obs_j = AgentObservation::first();
        let mut records = Vec::with_capacity(cfg.rounds as usize);
        let (mut total_i, mut total_j) = (0.0, 0.0);

        for round in 0..cfg.rounds {
            obs_i.round_index = round;
            obs_j.round_index = round;
            let intention_i = agent_i.intend(&obs_i).clamp(0.0, 1.0);
            let intention_j = agent_j.intend(&obs_j).clamp(0.0, 1.0);

            let draws: [f64; 6] = std::array::from_fn(|_| rng.random::<f64>());
            let sampled_i = if draws[0] < intention_i {
                Action::C
            } else {
                Action::D
            };
            let sampled_j = if draws[1] < intention_j {
                Action::C
            } else {
                Action::D
            };
            let action_i = self.perturb(sampled_i, draws[2], draws[3]);
            let action_j = self.perturb(sampled_j, draws[4], draws[5]);

            let (reward_i, reward_j) = cfg.game.rewards(action_i, action_j);
            total_i += reward_i;
            total_j += reward_j;

            agent_i.observe(&RoundOutcome {
                own_intention: intention_i,
                own_action: action_i,
                opp_action: action_j,
                own_reward: reward_i,
            });
            agent_j.observe(&RoundOutcome {
                own_intention: intention_j,
                own_action: action_j,
                opp_action: action_i,
                own_reward: reward_j,
            });

            records.push(RoundRecord {
                round,
                intention_i,
                intention_j,
                action_i,
                action_j,
                reward_i,
                reward_j,
                epsilon_i: agent_i.risk_capital(),
                epsilon_j: agent_j.risk_capital(),
            });

            obs_i = AgentObservation {
                round_index: round + 1,
                own_last_action: Some(action_i),
                opp_last_action: Some(action_j),
                own_last_reward: reward_i,
            };
            obs_j = AgentObservation {
                round_index: round + 1,
                own_last_action: Some(action_j),
                opp_last_action: Some(action_i),
                own_last_reward: reward_j,
            };
        }

        Ok(MatchTrace {
            records,
            total_i,
            total_j,
            floor_events_i: agent_i.floor_events(),
            floor_events_j: agent_j.floor_events(),
        })
    }

    pub fn run_traces(&self) -> Result<Vec<MatchTrace>> {
        let seed = self.config.seed;
        (0..self.config.runs)
            .into_par_iter()
            .map(|k| self.run_match(split_seed(seed, u64::from(k))))
            .collect()
    }

    pub fn run_batch(&self) -> Result<BatchSummary> {
        Ok(BatchSummary::from_traces(
            &self.run_traces()?,
            self.config.rounds,
        ))
    }
}

pub fn run_match(config: &SimConfig, run_seed: u64) -> Result<MatchTrace> {
    Engine::new(config.clone())?.run_match(run_seed)
}

pub fn run_batch(config: &SimConfig) -> Result<BatchSummary> {
    Engine::new(config.clone())?.run_batch()
}

/// Per-round means across runs, plus cumulative score statistics.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BatchSummary {
    pub runs: u32,
    pub mean_intent_i: Vec<f64>,
    pub mean_intent_j: Vec<f64>,
    pub mean_coop_i: Vec<f64>,
    pub mean_coop_j: Vec<f64>,
    /// NaN where the agent keeps no risk capital.
    pub mean_eps_i: Vec<f64>,
    pub mean_eps_j: Vec<f64>,
    pub mean_reward_i: Vec<f64>,
    pub mean_reward_j: Vec<f64>,
    pub score_mean_i: f64,
    pub score_mean_j: f64,
    pub score_se_i: f64,
    pub score_se_j: f64,
    pub floor_events_i: u64,
    pub floor_events_j: u64,
}

fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

impl BatchSummary {
    /// Aggregates traces in the given order; callers pass them sorted by run index.
    pub fn from_traces(traces: &[MatchTrace], rounds: u32) -> Self {
        let n = rounds as usize;
        let runs = traces.len() as f64;
        let mut s = BatchSummary {
            runs: traces.len() as u32,
            mean_intent_i: vec![0.0; n],
            mean_intent_j: vec![0.0; n],
            mean_coop_i: vec![0.0; n],
            mean_coop_j: vec![0.0; n],
            mean_eps_i: vec![0.0; n],
            mean_eps_j: vec![0.0; n],
            mean_reward_i: vec![0.0; n],
            mean_reward_j: vec![0.0; n],
            score_mean_i: 0.0,
            score_mean_j: 0.0,
            score_se_i: 0.0,
            score_se_j: 0.0,
            floor_events_i: 0,
            floor_events_j: 0,
        };
        for trace in traces {
            for (t, r) in trace.records.iter().enumerate() {
                s.mean_intent_i[t] += r.intention_i;
                s.mean_intent_j[t] += r.intention_j;
                s.mean_coop_i[t] += r.action_i.coop_prob();
                s.mean_coop_j[t] += r.action_j.coop_prob();
                s.mean_eps_i[t] += r.epsilon_i.unwrap_or(f64::NAN);
                s.mean_eps_j[t] += r.epsilon_j.unwrap_or(f64::NAN);
                s.mean_reward_i[t] += r.reward_i;
                s.mean_reward_j[t] += r.reward_j;
            }
            s.floor_events_i += u64::from(trace.floor_events_i);
            s.floor_events_j += u64::from(trace.floor_events_j);
        }
        for series in [
            &mut s.mean_intent_i,
            &mut s.mean_intent_j,
            &mut s.mean_coop_i,
            &mut s.mean_coop_j,
            &mut s.mean_eps_i,
            &mut s.mean_eps_j,
            &mut s.mean_reward_i,
            &mut s.mean_reward_j,
        ] {
            series.iter_mut().for_each(|v| *v /= runs);
        }
        let totals_i: Vec<f64> = traces.iter().map(|t| t.total_i).collect();
        let totals_j: Vec<f64> = traces.iter().map(|t| t.total_j).collect();
        (s.score_mean_i, s.score_se_i) = mean_se(&totals_i);
        (s.score_mean_j, s.score_se_j) = mean_se(&totals_j);
        s
    }

    pub fn rounds(&self) -> usize {
        self.mean_intent_i.len()
    }

    /// First round whose mean risk capital of player `i` reaches `level`.
    pub fn first_round_eps_i_reaches(&self, level: f64) -> Option<usize> {
        self.mean_eps_i.iter().position(|&e| e >= level)
    }

    /// CSV body: one row per round, six decimals.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "round,mean_intent_i,mean_intent_j,mean_coop_i,mean_coop_j,mean_eps_i,mean_eps_j,mean_reward_i,mean_reward_j\n",
        );
        let f = |v: f64| {
            if v.is_nan() {
                "nan".to_string()
            } else {
                format!("{v:.6}")
            }
        };
        for t in 0..self.rounds() {
            let _ = writeln!(
                out,
                "{t},{},{},{},{},{},{},{},{}",
                f(self.mean_intent_i[t]),
                f(self.mean_intent_j[t]),
                f(self.mean_coop_i[t]),
                f(self.mean_coop_j[t]),
                f(self.mean_eps_i[t]),
                f(self.mean_eps_j[t]),
                f(self.mean_reward_i[t]),
                f(self.mean_reward_j[t]),
            );
        }
        out
    }
}

/// Mean cumulative scores for every ordered pair of agent kinds.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScoreMatrix {
    pub kinds: Vec<AgentKind>,
    pub runs: u32,
    /// `cells[a][b] = (score of a, score of b)` with `a` as player `i`.
    pub cells: Vec<Vec<(f64, f64)>>,
}

impl ScoreMatrix {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("agent");
        for k in &self.kinds {
            let _ = write!(out, ",{k}");
        }
        out.push('\n');
        for (a, row) in self.kinds.iter().zip(&self.cells) {
            out.push_str(&a.to_string());
            for (si, sj) in row {
                let _ = write!(out, ",{si:.2}|{sj:.2}");
            }
            out.push('\n');
        }
        out
    }
}

/// Full round robin including self-play. Each ordered pair is its own batch
/// seeded with `split_seed(seed, a * n + b)`.
pub fn tournament(kinds: &[AgentKind], config: &SimConfig) -> Result<ScoreMatrix> {
    if kinds.len() < 2 {
        return Err(Error::Config(
            "a tournament needs at least two agent kinds".into(),
        ));
    }
    let n = kinds.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (0..n).map(move |b| (a, b))).collect();
    let scores = pairs
        .par_iter()
        .map(|&(a, b)| {
            let cfg = SimConfig {
                agent_i: kinds[a].clone(),
                agent_j: kinds[b].clone(),
                seed: split_seed(config.seed, (a * n + b) as u64),
                ..config.clone()
            };
            let s = run_batch(&cfg)?;
            Ok((s.score_mean_i, s.score_mean_j))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScoreMatrix {
        kinds: kinds.to_vec(),
        runs: config.runs,
        cells: scores.chunks(n).map(<[_]>::to_vec).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(i: AgentKind, j: AgentKind) -> SimConfig {
        SimConfig {
            agent_i: i,
            agent_j: j,
            noise: 0.0,
            runs: 4,
            seed: 7,
            ..SimConfig::default()
        }
    }

    #[test]
    fn noiseless_classics() {
        let t = run_match(&cfg(AgentKind::AllD, AgentKind::AllD), 1).unwrap();
        assert_eq!((t.total_i, t.total_j), (25.0, 25.0));
        let t = run_match(&cfg(AgentKind::TitForTat, AgentKind::TitForTat), 1).unwrap();
        assert_eq!((t.total_i, t.total_j), (75.0, 75.0));
        let t = run_match(&cfg(AgentKind::AllC, AgentKind::AllD), 1).unwrap();
        assert_eq!((t.total_i, t.total_j), (0.0, 100.0));
        assert_eq!(t.len(), 100);
    }

    #[test]
    fn same_seed_same_trace() {
        let c = SimConfig {
            noise: 0.05,
            ..cfg(AgentKind::Arctic, AgentKind::Random(0.4))
        };
        assert_eq!(
            run_match(&c, 99).unwrap().to_csv(),
            run_match(&c, 99).unwrap().to_csv()
        );
        assert_ne!(
            run_match(&c, 99).unwrap().to_csv(),
            run_match(&c, 100).unwrap().to_csv()
        );
    }

    #[test]
    fn flip_noise_always_changes_action() {
        let c = SimConfig {
            noise: 0.999,
            noise_model: NoiseModel::Flip,
            ..cfg(AgentKind::AllD, AgentKind::AllD)
        };
        let t = run_match(&c, 3).unwrap();
        let coop = t.records.iter().filter(|r| r.action_i == Action::C).count();
        assert!(coop >= 95);
    }

    #[test]
    fn config_validation() {
        let base = cfg(AgentKind::AllD, AgentKind::AllD);
        assert!(SimConfig {
            rounds: 0,
            ..base.clone()
        }
        .validate()
        .is_err());
        assert!(SimConfig {
            noise: 1.0,
            ..base.clone()
        }
        .validate()
        .is_err());
        assert!(matches!(
            SimConfig {
                runs: 0,
                ..base.clone()
            }
            .validate(),
            Err(Error::EmptyBatch)
        ));
        assert!(SimConfig {
            x: 0.0,
            ..base.clone()
        }
        .validate()
        .is_err());
        assert!(SimConfig { gamma: 1.0, ..base }.validate().is_err());
    }

    #[test]
    fn split_seed_spreads_indices() {
        let seeds: std::collections::HashSet<u64> = (0..1000).map(|k| split_seed(42, k)).collect();
        assert_eq!(seeds.len(), 1000);
        assert_ne!(split_seed(1, 0), split_seed(2, 0));
    }

    #[test]
    fn batch_csv_shape() {
        let s = run_batch(&cfg(AgentKind::Arctic, AgentKind::TitForTat)).unwrap();
        let csv = s.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 101);
        assert!(lines[0].starts_with("round,mean_intent_i"));
        assert_eq!(lines[1].split(',').count(), 9);
        // t4t keeps no risk capital
        assert!(lines[1].ends_with(|c: char| c.is_ascii_digit()));
        assert!(lines[1].contains(",nan,"));
    }

    #[test]
    fn tournament_needs_two_kinds() {
        assert!(tournament(&[AgentKind::AllD], &cfg(AgentKind::AllD, AgentKind::AllD)).is_err());
        let m = tournament(
            &[AgentKind::AllC, AgentKind::AllD],
            &cfg(AgentKind::AllD, AgentKind::AllD),
        )
        .unwrap();
        assert_eq!(m.cells[0][1], (0.0, 100.0));
        assert_eq!(m.cells[1][0], (100.0, 0.0));
        let csv = m.to_csv();
        assert_eq!(csv.lines().next(), Some("agent,allc,alld"));
        assert!(csv.contains("allc,75.00|75.00,0.00|100.00"));
    }
}
