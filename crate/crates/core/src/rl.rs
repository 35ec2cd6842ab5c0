//! Tabular learning in the shaped repeated-game environment.
//!
//! A player's cooperation level is a discounted count of rounds in which the
//! *opponent* received more than the game value. While a player's level is at
//! or above the threshold, its opponent's training reward is the sum of both
//! rewards. Policies are trained under shaping and played unshaped through
//! [`crate::sim`].

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agents::{AgentBlueprint, AgentKind, AgentObservation, AgentParams, RoundOutcome};
use crate::error::{Error, Result};
use crate::game::{minimax_value, Action, MatrixGame, Player};
use crate::sim::{BatchSummary, Engine, NoiseModel, SimConfig};

pub const DEFAULT_BUCKETS: u32 = 11;
const JOINT_STATES: u32 = 5;
const POLICY_FORMAT: &str = "arctic-rl-policy/1";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoopLevel {
    pub x_t: f64,
    pub gamma: f64,
    /// Value the indicator compares rewards against.
    pub v: f64,
    pub threshold: f64,
    /// Scale increments by `1 - gamma` so the level stays in `[0, 1]`.
    pub normalized: bool,
}

impl CoopLevel {
    pub fn new(gamma: f64, v: f64, threshold: f64, normalized: bool) -> Result<Self> {
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::param(
                "coop_gamma",
                format!("{gamma} is not in [0, 1)"),
            ));
        }
        if !(threshold > 0.0 && threshold <= 1.0) {
            return Err(Error::param(
                "coop_threshold",
                format!("{threshold} is not in (0, 1]"),
            ));
        }
        Ok(CoopLevel {
            x_t: 0.0,
            gamma,
            v,
            threshold,
            normalized,
        })
    }

    pub fn is_cooperative(&self) -> bool {
        self.x_t >= self.threshold
    }
}

pub fn update_coop_level(level: CoopLevel, r_k: f64) -> CoopLevel {
    let hit = if r_k > level.v { 1.0 } else { 0.0 };
    let step = if level.normalized {
        (1.0 - level.gamma) * hit
    } else {
        hit
    };
    CoopLevel {
        x_t: level.gamma * level.x_t + step,
        ..level
    }
}

/// Training reward of `i`'s opponent: `r_i + r_j` while `i` is cooperative, `r_j` otherwise.
pub fn shaped_reward(r_i: f64, r_j: f64, level_i: &CoopLevel) -> f64 {
    if level_i.is_cooperative() {
        r_i + r_j
    } else {
        r_j
    }
}

/// Last joint action seen from the owner's side, or the start marker.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LastJoint {
    Start,
    Joint(Action, Action),
}

impl LastJoint {
    fn index(self) -> u32 {
        match self {
            LastJoint::Start => 0,
            LastJoint::Joint(own, opp) => 1 + 2 * own.index() as u32 + opp.index() as u32,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnvState {
    pub buckets: u32,
    pub bucket: u32,
    pub last: LastJoint,
    /// Own cooperation level at or above the threshold.
    pub cooperative: bool,
    pub round: u32,
}

pub fn epsilon_bucket(epsilon: f64, buckets: u32) -> u32 {
    let top = buckets.saturating_sub(1);
    ((epsilon.clamp(0.0, 1.0) * f64::from(top)).round() as u32).min(top)
}

impl EnvState {
    pub fn start(buckets: u32, epsilon: f64) -> Self {
        EnvState {
            buckets,
            bucket: epsilon_bucket(epsilon, buckets),
            last: LastJoint::Start,
            cooperative: false,
            round: 0,
        }
    }

    pub fn advance(&self, epsilon: f64, own: Action, opp: Action, cooperative: bool) -> Self {
        EnvState {
            buckets: self.buckets,
            bucket: epsilon_bucket(epsilon, self.buckets),
            last: LastJoint::Joint(own, opp),
            cooperative,
            round: self.round + 1,
        }
    }

    pub fn state_count(buckets: u32) -> usize {
        (buckets * JOINT_STATES * 2) as usize
    }

    pub fn id(&self) -> usize {
        ((self.bucket * JOINT_STATES + self.last.index()) * 2 + u32::from(self.cooperative))
            as usize
    }
}

/// Worst-case loss below the game value from cooperating, in units of the payoff range.
pub fn cooperation_risk(game: &MatrixGame, player: Player) -> f64 {
    let k = game.payoff_range();
    let worst =
        game.payoff(player, Action::C, Action::C)
            .min(game.payoff(player, Action::C, Action::D));
    if k > 0.0 {
        ((minimax_value(game, player) - worst) / k).max(0.0)
    } else {
        0.0
    }
}

pub fn may_cooperate(epsilon: f64, risk: f64) -> bool {
    epsilon + 1e-12 >= risk
}

/// Environment settings a policy was trained under; evaluation reuses the
/// cooperation-level parameters to index the table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyMeta {
    pub format: String,
    pub fingerprint: String,
    pub seed: u64,
    pub buckets: u32,
    pub coop_gamma: f64,
    pub coop_threshold: f64,
    pub normalized: bool,
    pub learning_rate: f64,
    pub exploration: f64,
    pub episodes: u64,
    /// Cooperation is only played while risk capital covers its worst-case loss.
    pub risk_guard: bool,
    pub env: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TabularPolicy {
    pub meta: PolicyMeta,
    q: Vec<[f64; 2]>,
}

impl TabularPolicy {
    fn blank(meta: PolicyMeta) -> Self {
        let n = EnvState::state_count(meta.buckets);
        TabularPolicy {
            meta,
            q: vec![[0.0; 2]; n],
        }
    }

    pub fn buckets(&self) -> u32 {
        self.meta.buckets
    }

    pub fn values(&self, state: &EnvState) -> [f64; 2] {
        self.q[state.id()]
    }

    /// Probability of cooperating: greedy, with an even split on ties.
    pub fn intention(&self, state: &EnvState) -> f64 {
        let [c, d] = self.values(state);
        if c > d {
            1.0
        } else if c < d {
            0.0
        } else {
            0.5
        }
    }

    /// Greedy action with ties going to defect.
    pub fn greedy(&self, state: &EnvState) -> Action {
        let [c, d] = self.values(state);
        if c > d {
            Action::C
        } else {
            Action::D
        }
    }

    /// [`TabularPolicy::intention`] with the risk guard applied when the policy uses one.
    pub fn guarded_intention(&self, state: &EnvState, epsilon: f64, risk: f64) -> f64 {
        if self.meta.risk_guard && !may_cooperate(epsilon, risk) {
            0.0
        } else {
            self.intention(state)
        }
    }

    pub fn coop_level(&self, v: f64) -> Result<CoopLevel> {
        CoopLevel::new(
            self.meta.coop_gamma,
            v,
            self.meta.coop_threshold,
            self.meta.normalized,
        )
    }

    pub fn to_file_string(&self) -> String {
        let mut out = String::new();
        let meta = serde_json::to_string(&self.meta).expect("policy metadata serializes");
        let _ = writeln!(out, "# {meta}");
        out.push_str("state_id,action,value\n");
        for (id, row) in self.q.iter().enumerate() {
            for (a, value) in [Action::C, Action::D].iter().zip(row) {
                let _ = writeln!(out, "{id},{},{value:?}", a.as_char());
            }
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_file_string()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        text.parse()
    }
}

impl FromStr for TabularPolicy {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let bad = |m: String| Error::PolicyFormat(m);
        let mut lines = text.lines();
        let meta_line = lines
            .next()
            .and_then(|l| l.strip_prefix("# "))
            .ok_or_else(|| bad("missing metadata header".into()))?;
        let meta: PolicyMeta =
            serde_json::from_str(meta_line).map_err(|e| bad(format!("metadata: {e}")))?;
        if meta.format != POLICY_FORMAT {
            return Err(bad(format!("unsupported format {:?}", meta.format)));
        }
        if meta.buckets < 2 {
            return Err(bad("need at least two epsilon buckets".into()));
        }
        if lines.next() != Some("state_id,action,value") {
            return Err(bad("missing column header".into()));
        }
        let mut policy = TabularPolicy::blank(meta);
        let mut seen = vec![[false; 2]; policy.q.len()];
        for (n, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let row = n + 3;
            let fields: Vec<&str> = line.split(',').collect();
            let [id, action, value] = fields[..] else {
                return Err(bad(format!("line {row}: expected three fields")));
            };
            let id: usize = id
                .parse()
                .map_err(|_| bad(format!("line {row}: bad state id")))?;
            let a = match action {
                "C" => 0,
                "D" => 1,
                _ => return Err(bad(format!("line {row}: bad action {action:?}"))),
            };
            let value: f64 = value
                .parse()
                .map_err(|_| bad(format!("line {row}: bad value")))?;
            if !value.is_finite() {
                return Err(bad(format!("line {row}: value is not finite")));
            }
            if id >= policy.q.len() {
                return Err(bad(format!("line {row}: state id {id} out of range")));
            }
            if std::mem::replace(&mut seen[id][a], true) {
                return Err(bad(format!("line {row}: duplicate entry")));
            }
            policy.q[id][a] = value;
        }
        if seen.iter().flatten().any(|s| !s) {
            return Err(bad("table is incomplete".into()));
        }
        Ok(policy)
    }
}

/// Who the learner faces during training.
#[derive(Clone, Debug, PartialEq)]
pub enum TrainOpponent {
    /// Cooperates exactly while the learner's cooperation level is at the threshold.
    Partner,
    /// Each round plays as [`TrainOpponent::Partner`] with probability equal to
    /// the learner's risk capital and adversarially otherwise.
    Arctic,
    /// Two seats sharing one table.
    SelfPlay,
    Zoo(AgentKind),
}

impl FromStr for TrainOpponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "partner" => Ok(TrainOpponent::Partner),
            "arctic" => Ok(TrainOpponent::Arctic),
            "self" | "self-play" => Ok(TrainOpponent::SelfPlay),
            _ => match s.strip_prefix("zoo:") {
                Some(kind) => Ok(TrainOpponent::Zoo(kind.parse()?)),
                None => Err(Error::Config(format!(
                    "unknown training opponent {s:?} (partner, arctic, self, zoo:<kind>)"
                ))),
            },
        }
    }
}

impl std::fmt::Display for TrainOpponent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TrainOpponent::Partner => f.write_str("partner"),
            TrainOpponent::Arctic => f.write_str("arctic"),
            TrainOpponent::SelfPlay => f.write_str("self"),
            TrainOpponent::Zoo(kind) => write!(f, "zoo:{kind}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub game: MatrixGame,
    pub opponent: TrainOpponent,
    pub episodes: u64,
    pub rounds: u32,
    pub shaping: bool,
    pub noise: f64,
    pub noise_model: NoiseModel,
    pub buckets: u32,
    pub coop_gamma: f64,
    pub coop_threshold: f64,
    pub normalized: bool,
    pub epsilon_0: f64,
    pub learning_rate: f64,
    /// Return discount of the learner.
    pub discount: f64,
    /// Exploration rate, decayed linearly to `exploration_final` over training.
    pub exploration: f64,
    pub exploration_final: f64,
    pub risk_guard: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            game: MatrixGame::prisoners_dilemma(),
            opponent: TrainOpponent::Arctic,
            episodes: 50_000,
            rounds: 100,
            shaping: true,
            noise: 0.05,
            noise_model: NoiseModel::Resample,
            buckets: DEFAULT_BUCKETS,
            coop_gamma: 0.9,
            coop_threshold: 0.5,
            normalized: true,
            epsilon_0: 0.0,
            learning_rate: 0.1,
            discount: 0.95,
            exploration: 0.1,
            exploration_final: 0.01,
            risk_guard: true,
            seed: 0,
        }
    }
}

fn fnv1a(text: &str) -> u64 {
    text.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3)
    })
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} {v} is not in [0, 1]")))
            }
        };
        unit("exploration", self.exploration)?;
        unit("exploration_final", self.exploration_final)?;
        unit("learning_rate", self.learning_rate)?;
        unit("discount", self.discount)?;
        unit("epsilon_0", self.epsilon_0)?;
        if !(0.0..1.0).contains(&self.noise) {
            return Err(Error::Config(format!(
                "noise {} is not in [0, 1)",
                self.noise
            )));
        }
        if self.rounds == 0 {
            return Err(Error::Config("rounds must be at least 1".into()));
        }
        if self.buckets < 2 {
            return Err(Error::Config("buckets must be at least 2".into()));
        }
        if self.game.payoff_range() <= 0.0 {
            return Err(Error::ConstantPayoffs);
        }
        CoopLevel::new(self.coop_gamma, 0.0, self.coop_threshold, self.normalized)?;
        Ok(())
    }

    /// Canonical description of the training environment.
    pub fn env_description(&self) -> String {
        format!(
            "game={:?};opponent={};rounds={};shaping={};noise={}:{:?};buckets={};coop_gamma={};coop_threshold={};normalized={};epsilon_0={};risk_guard={}",
            self.game.matrix(Player::I),
            self.opponent,
            self.rounds,
            self.shaping,
            self.noise,
            self.noise_model,
            self.buckets,
            self.coop_gamma,
            self.coop_threshold,
            self.normalized,
            self.epsilon_0,
            self.risk_guard,
        )
    }

    fn meta(&self) -> PolicyMeta {
        let env = self.env_description();
        PolicyMeta {
            format: POLICY_FORMAT.into(),
            fingerprint: format!("{:016x}", fnv1a(&env)),
            seed: self.seed,
            buckets: self.buckets,
            coop_gamma: self.coop_gamma,
            coop_threshold: self.coop_threshold,
            normalized: self.normalized,
            learning_rate: self.learning_rate,
            exploration: self.exploration,
            episodes: self.episodes,
            risk_guard: self.risk_guard,
            env,
        }
    }
}

/// One learner step, kept for auditing the reward shaping.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ShapingRow {
    pub episode: u64,
    pub round: u32,
    pub seat: Player,
    pub raw_reward: f64,
    pub other_reward: f64,
    /// The other seat's cooperation level after this round.
    pub other_level: f64,
    pub shaped_reward: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct EpisodeStats {
    /// Fraction of rounds per joint outcome, in the order CC, CD, DC, DD.
    pub joint: [f64; 4],
    pub raw_return: f64,
    /// Rounds the learner entered with its own cooperation level at the threshold.
    pub level_rounds: u32,
    /// Of those, rounds in which it chose to cooperate.
    pub level_cooperations: u32,
}

impl EpisodeStats {
    /// The joint outcome played in every round, if any.
    pub fn absorbing(&self) -> Option<(Action, Action)> {
        let k = self.joint.iter().position(|&f| f == 1.0)?;
        let a = |bit| if bit == 0 { Action::C } else { Action::D };
        Some((a(k / 2), a(k % 2)))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainReport {
    pub episodes: Vec<EpisodeStats>,
    pub shaping_rows: Vec<ShapingRow>,
}

/// A seat at the table: its position in the environment and learner state.
struct Seat {
    player: Player,
    state: EnvState,
    epsilon: f64,
    /// This seat's cooperation level, driven by the other seat's rewards.
    level: CoopLevel,
    v: f64,
    risk: f64,
}

impl Seat {
    fn new(cfg: &TrainConfig, player: Player) -> Result<Self> {
        let v = minimax_value(&cfg.game, player);
        let opp_v = minimax_value(&cfg.game, player.other());
        Ok(Seat {
            player,
            state: EnvState::start(cfg.buckets, cfg.epsilon_0),
            epsilon: cfg.epsilon_0,
            level: CoopLevel::new(cfg.coop_gamma, opp_v, cfg.coop_threshold, cfg.normalized)?,
            v,
            risk: cooperation_risk(&cfg.game, player),
        })
    }

    fn may_cooperate(&self, guard: bool) -> bool {
        !guard || may_cooperate(self.epsilon, self.risk)
    }
}

struct Trainer<'a> {
    cfg: &'a TrainConfig,
    policy: TabularPolicy,
    rng: ChaCha8Rng,
    k: f64,
}

impl Trainer<'_> {
    fn choose(&mut self, seat: &Seat, explore: f64) -> Action {
        let roll: f64 = self.rng.random();
        let pick: f64 = self.rng.random();
        let state = &seat.state;
        if !seat.may_cooperate(self.cfg.risk_guard) {
            Action::D
        } else if roll < explore {
            if pick < 0.5 {
                Action::C
            } else {
                Action::D
            }
        } else {
            let p = self.policy.intention(state);
            if pick < p {
                Action::C
            } else {
                Action::D
            }
        }
    }

    fn noisy(&mut self, action: Action) -> Action {
        let event: f64 = self.rng.random();
        let draw: f64 = self.rng.random();
        if event >= self.cfg.noise {
            return action;
        }
        match self.cfg.noise_model {
            NoiseModel::Resample if draw < 0.5 => Action::C,
            NoiseModel::Resample => Action::D,
            NoiseModel::Flip => action.opposite(),
        }
    }

    fn sample(&mut self, p: f64) -> Action {
        if self.rng.random::<f64>() < p {
            Action::C
        } else {
            Action::D
        }
    }

    /// TD update for the action taken in `from`; `seat` is already advanced.
    fn learn(
        &mut self,
        from: &EnvState,
        seat: &Seat,
        action: Action,
        reward: f64,
        next: &EnvState,
        last: bool,
    ) {
        let cfg = self.cfg;
        let bootstrap = if last {
            0.0
        } else {
            let [c, d] = self.policy.values(next);
            if seat.may_cooperate(cfg.risk_guard) {
                c.max(d)
            } else {
                d
            }
        };
        let cell = &mut self.policy.q[from.id()][action.index()];
        *cell += cfg.learning_rate * (reward + cfg.discount * bootstrap - *cell);
    }

    /// Risk-capital update from the seat's unshaped reward.
    fn settle(&self, seat: &mut Seat, own: Action, opp: Action) {
        let (r_own, _) = rewards_for(&self.cfg.game, seat.player, own, opp);
        seat.epsilon = (seat.epsilon + (r_own - seat.v) / self.k).clamp(0.0, 1.0);
    }
}

fn rewards_for(game: &MatrixGame, player: Player, own: Action, opp: Action) -> (f64, f64) {
    match player {
        Player::I => game.rewards(own, opp),
        Player::J => {
            let (ri, rj) = game.rewards(opp, own);
            (rj, ri)
        }
    }
}

/// Action minimizing `player`'s payoff given its realized action.
fn adversarial_reply(game: &MatrixGame, player: Player, own: Action) -> Action {
    let (c, _) = rewards_for(game, player, own, Action::C);
    let (d, _) = rewards_for(game, player, own, Action::D);
    if c < d {
        Action::C
    } else {
        Action::D
    }
}

pub fn train(cfg: &TrainConfig) -> Result<TabularPolicy> {
    Ok(train_with_report(cfg, 0)?.0)
}

/// Trains and also returns per-episode statistics plus shaping rows for the
/// last `trace_episodes` episodes.
pub fn train_with_report(
    cfg: &TrainConfig,
    trace_episodes: u64,
) -> Result<(TabularPolicy, TrainReport)> {
    cfg.validate()?;
    let mut trainer = Trainer {
        cfg,
        policy: TabularPolicy::blank(cfg.meta()),
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        k: cfg.game.payoff_range(),
    };
    let zoo = match &cfg.opponent {
        TrainOpponent::Zoo(kind) => Some(AgentBlueprint::resolve(kind)?),
        _ => None,
    };
    let mut report = TrainReport {
        episodes: Vec::with_capacity(cfg.episodes as usize),
        shaping_rows: Vec::new(),
    };
    let trace_from = cfg.episodes.saturating_sub(trace_episodes);

    for episode in 0..cfg.episodes {
        let explore = if cfg.episodes > 1 {
            let frac = episode as f64 / (cfg.episodes - 1) as f64;
            cfg.exploration + (cfg.exploration_final - cfg.exploration) * frac
        } else {
            cfg.exploration
        };
        let mut learner = Seat::new(cfg, Player::I)?;
        let mut other = Seat::new(cfg, Player::J)?;
        let mut zoo_agent_j = match &zoo {
            Some(bp) => Some(bp.spawn(&AgentParams::new(cfg.game, Player::J))?),
            None => None,
        };
        let mut obs_j = AgentObservation::first();
        let mut stats = EpisodeStats::default();
        let tracing = episode >= trace_from;

        for round in 0..cfg.rounds {
            let last = round + 1 == cfg.rounds;
            let intended_i = trainer.choose(&learner, explore);
            if learner.level.is_cooperative() {
                stats.level_rounds += 1;
                stats.level_cooperations += u32::from(intended_i == Action::C);
            }
            let (intended_j, intention_j) = match &cfg.opponent {
                TrainOpponent::SelfPlay => {
                    let a = trainer.choose(&other, explore);
                    (a, a.coop_prob())
                }
                TrainOpponent::Partner => {
                    let a = if learner.level.is_cooperative() {
                        Action::C
                    } else {
                        Action::D
                    };
                    (a, a.coop_prob())
                }
                TrainOpponent::Arctic => {
                    let partner = trainer.rng.random::<f64>() < learner.epsilon;
                    let a = if partner {
                        if learner.level.is_cooperative() {
                            Action::C
                        } else {
                            Action::D
                        }
                    } else {
                        adversarial_reply(&cfg.game, Player::I, intended_i)
                    };
                    (a, a.coop_prob())
                }
                TrainOpponent::Zoo(_) => {
                    obs_j.round_index = round;
                    let agent = zoo_agent_j.as_mut().expect("zoo opponent spawned");
                    let p = agent.intend(&obs_j).clamp(0.0, 1.0);
                    (trainer.sample(p), p)
                }
            };
            let a_i = trainer.noisy(intended_i);
            let a_j = trainer.noisy(intended_j);
            let (r_i, r_j) = cfg.game.rewards(a_i, a_j);

            // levels first, so shaping sees the level including this round
            learner.level = update_coop_level(learner.level, r_j);
            other.level = update_coop_level(other.level, r_i);
            let shaped_i = if cfg.shaping {
                shaped_reward(r_j, r_i, &other.level)
            } else {
                r_i
            };
            let shaped_j = if cfg.shaping {
                shaped_reward(r_i, r_j, &learner.level)
            } else {
                r_j
            };

            trainer.settle(&mut learner, a_i, a_j);
            trainer.settle(&mut other, a_j, a_i);
            let next_i =
                learner
                    .state
                    .advance(learner.epsilon, a_i, a_j, learner.level.is_cooperative());
            let next_j = other
                .state
                .advance(other.epsilon, a_j, a_i, other.level.is_cooperative());

            trainer.learn(
                &learner.state,
                &learner,
                intended_i,
                shaped_i,
                &next_i,
                last,
            );
            if cfg.opponent == TrainOpponent::SelfPlay {
                trainer.learn(&other.state, &other, intended_j, shaped_j, &next_j, last);
            }
            if let Some(agent) = zoo_agent_j.as_mut() {
                agent.observe(&RoundOutcome {
                    own_intention: intention_j,
                    own_action: a_j,
                    opp_action: a_i,
                    own_reward: r_j,
                });
                obs_j = AgentObservation {
                    round_index: round + 1,
                    own_last_action: Some(a_j),
                    opp_last_action: Some(a_i),
                    own_last_reward: r_j,
                };
            }
            learner.state = next_i;
            other.state = next_j;

            stats.joint[2 * a_i.index() + a_j.index()] += 1.0;
            stats.raw_return += r_i;
            if tracing {
                report.shaping_rows.push(ShapingRow {
                    episode,
                    round,
                    seat: Player::I,
                    raw_reward: r_i,
                    other_reward: r_j,
                    other_level: other.level.x_t,
                    shaped_reward: shaped_i,
                });
                if cfg.opponent == TrainOpponent::SelfPlay {
                    report.shaping_rows.push(ShapingRow {
                        episode,
                        round,
                        seat: Player::J,
                        raw_reward: r_j,
                        other_reward: r_i,
                        other_level: learner.level.x_t,
                        shaped_reward: shaped_j,
                    });
                }
            }
        }
        stats
            .joint
            .iter_mut()
            .for_each(|f| *f /= f64::from(cfg.rounds));
        report.episodes.push(stats);
    }
    Ok((trainer.policy, report))
}

/// Trains one policy per seed, concurrently.
pub fn train_seeds(cfg: &TrainConfig, seeds: &[u64]) -> Result<Vec<TabularPolicy>> {
    seeds
        .par_iter()
        .map(|&seed| {
            train(&TrainConfig {
                seed,
                ..cfg.clone()
            })
        })
        .collect()
}

/// Plays a frozen policy as player `i` against `opponent` without shaping or learning.
pub fn evaluate(
    policy: Arc<TabularPolicy>,
    opponent: &AgentKind,
    config: &SimConfig,
) -> Result<BatchSummary> {
    let engine = Engine::with_blueprints(
        config.clone(),
        AgentBlueprint::Rl(policy),
        AgentBlueprint::resolve(opponent)?,
    )?;
    let traces = engine.run_traces()?;
    for trace in &traces {
        for r in &trace.records {
            let cell = config.game.rewards(r.action_i, r.action_j);
            assert_eq!(
                (r.reward_i, r.reward_j),
                cell,
                "evaluation reward differs from the payoff matrix"
            );
        }
    }
    Ok(BatchSummary::from_traces(&traces, config.rounds))
}
