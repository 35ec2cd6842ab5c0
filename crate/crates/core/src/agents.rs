//! Round-by-round agents: the fixed-strategy zoo, the cooperation-promoting
//! best responder and the risk-capital (ARCTIC) agent.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::beliefs::{best_response_to_belief, Belief, CooperativeBelief, Horizon, StagePolicy};
use crate::error::{Error, Result};
use crate::game::{expected_utility, minimax_value, Action, MatrixGame, Player};
use crate::rl::{cooperation_risk, update_coop_level, CoopLevel, EnvState, TabularPolicy};

/// What an agent sees before choosing round `round_index`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AgentObservation {
    pub round_index: u32,
    pub own_last_action: Option<Action>,
    pub opp_last_action: Option<Action>,
    pub own_last_reward: f64,
}

impl AgentObservation {
    pub fn first() -> Self {
        AgentObservation {
            round_index: 0,
            own_last_action: None,
            opp_last_action: None,
            own_last_reward: 0.0,
        }
    }
}

/// What an agent learns after a round is played.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RoundOutcome {
    pub own_intention: f64,
    pub own_action: Action,
    pub opp_action: Action,
    pub own_reward: f64,
}

pub trait Agent: Send {
    /// Cooperation probability intended for this round.
    fn intend(&mut self, obs: &AgentObservation) -> f64;

    fn observe(&mut self, _outcome: &RoundOutcome) {}

    /// Current risk capital, for agents that keep one.
    fn risk_capital(&self) -> Option<f64> {
        None
    }

    /// Number of updates that were clamped at zero risk capital.
    fn floor_events(&self) -> u32 {
        0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum AgentKind {
    Arctic,
    PcBestResponder,
    TitForTat,
    AllD,
    AllC,
    Random(f64),
    Rl(PathBuf),
}

impl FromStr for AgentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        Ok(match s {
            "arctic" => AgentKind::Arctic,
            "pc" => AgentKind::PcBestResponder,
            "t4t" => AgentKind::TitForTat,
            "alld" | "adv" => AgentKind::AllD,
            "allc" => AgentKind::AllC,
            _ => {
                if let Some(p) = s.strip_prefix("random:") {
                    let p: f64 = p.parse().map_err(|_| Error::UnknownAgent(s.to_string()))?;
                    if !(0.0..=1.0).contains(&p) {
                        return Err(Error::param("random", format!("{p} is not a probability")));
                    }
                    AgentKind::Random(p)
                } else if let Some(path) = s.strip_prefix("rl:") {
                    if path.is_empty() {
                        return Err(Error::UnknownAgent(s.to_string()));
                    }
                    AgentKind::Rl(PathBuf::from(path))
                } else {
                    return Err(Error::UnknownAgent(s.to_string()));
                }
            }
        })
    }
}

impl TryFrom<String> for AgentKind {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<AgentKind> for String {
    fn from(k: AgentKind) -> String {
        k.to_string()
    }
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AgentKind::Arctic => f.write_str("arctic"),
            AgentKind::PcBestResponder => f.write_str("pc"),
            AgentKind::TitForTat => f.write_str("t4t"),
            AgentKind::AllD => f.write_str("alld"),
            AgentKind::AllC => f.write_str("allc"),
            AgentKind::Random(p) => write!(f, "random:{p}"),
            AgentKind::Rl(path) => write!(f, "rl:{}", path.display()),
        }
    }
}

/// Which own strategy enters the risk-capital update.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateMode {
    /// Own mixed intention against the opponent's realized action.
    #[default]
    Intention,
    /// Own realized action against the opponent's realized action.
    Realized,
}

/// Everything an agent needs to know about the match it is placed in.
#[derive(Clone, Debug, PartialEq)]
pub struct AgentParams {
    pub game: MatrixGame,
    pub player: Player,
    pub x: f64,
    pub beta: f64,
    pub beta_plus: f64,
    pub beta_minus: f64,
    pub gamma: f64,
    pub epsilon_0: f64,
    pub tie_future: bool,
    pub update_mode: UpdateMode,
}

impl AgentParams {
    pub fn new(game: MatrixGame, player: Player) -> Self {
        AgentParams {
            game,
            player,
            x: 0.5,
            beta: 0.0,
            beta_plus: 1.0,
            beta_minus: 0.0,
            gamma: 0.9,
            epsilon_0: 0.0,
            tie_future: true,
            update_mode: UpdateMode::Intention,
        }
    }

    pub fn belief(&self) -> Result<CooperativeBelief> {
        CooperativeBelief::new(self.x, self.beta, self.beta_plus, self.beta_minus)
    }

    pub fn horizon(&self) -> Result<Horizon> {
        Horizon::infinite(self.gamma)
    }
}

pub struct AllD;

impl Agent for AllD {
    fn intend(&mut self, _: &AgentObservation) -> f64 {
        0.0
    }
}

pub struct AllC;

impl Agent for AllC {
    fn intend(&mut self, _: &AgentObservation) -> f64 {
        1.0
    }
}

pub struct RandomAgent(pub f64);

impl Agent for RandomAgent {
    fn intend(&mut self, _: &AgentObservation) -> f64 {
        self.0
    }
}

/// Cooperates first, then copies the opponent's last realized action.
pub struct TitForTat;

impl Agent for TitForTat {
    fn intend(&mut self, obs: &AgentObservation) -> f64 {
        obs.opp_last_action.map_or(1.0, Action::coop_prob)
    }
}

/// Best-responds to the pure cooperation-promoting belief every round.
pub struct PcBestResponder {
    policy: StagePolicy,
}

impl PcBestResponder {
    pub fn new(params: &AgentParams) -> Result<Self> {
        let policy = best_response_to_belief(
            &params.game,
            &Belief::Cooperative(params.belief()?),
            &params.horizon()?,
            params.tie_future,
            params.player,
        );
        Ok(PcBestResponder { policy })
    }

    pub fn policy(&self) -> StagePolicy {
        self.policy
    }
}

impl Agent for PcBestResponder {
    fn intend(&mut self, _: &AgentObservation) -> f64 {
        self.policy.alpha
    }
}

/// Risk-capital state of an ARCTIC agent.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ArcticState {
    pub epsilon: f64,
    pub v: f64,
    pub k: f64,
    pub belief: CooperativeBelief,
    pub horizon: Horizon,
    pub tie_future: bool,
    pub player: Player,
    pub last_policy: StagePolicy,
    pub floor_events: u32,
}

impl ArcticState {
    pub fn new(params: &AgentParams) -> Result<Self> {
        if !(0.0..=1.0).contains(&params.epsilon_0) {
            return Err(Error::param(
                "epsilon_0",
                format!("{} is not in [0, 1]", params.epsilon_0),
            ));
        }
        let k = params.game.payoff_range();
        if k <= 0.0 {
            return Err(Error::ConstantPayoffs);
        }
        Ok(ArcticState {
            epsilon: params.epsilon_0,
            v: minimax_value(&params.game, params.player),
            k,
            belief: params.belief()?,
            horizon: params.horizon()?,
            tie_future: params.tie_future,
            player: params.player,
            last_policy: StagePolicy::defect(),
            floor_events: 0,
        })
    }
}

/// Best response to the `epsilon`-mixture of the adversarial and
/// cooperation-promoting beliefs.
pub fn arctic_policy(state: &ArcticState, game: &MatrixGame) -> StagePolicy {
    let belief = Belief::Mixture {
        epsilon: state.epsilon.clamp(0.0, 1.0),
        cooperative: state.belief,
    };
    best_response_to_belief(
        game,
        &belief,
        &state.horizon,
        state.tie_future,
        state.player,
    )
}

/// `epsilon <- clamp(epsilon + (E[u(alpha, opp_action)] - v) / K, 0, 1)`.
pub fn arctic_update(
    state: &ArcticState,
    own_policy: &StagePolicy,
    opp_action: Action,
    game: &MatrixGame,
) -> ArcticState {
    let payoff = expected_utility(game, own_policy.now(), opp_action.into(), state.player);
    let raw = state.epsilon + (payoff - state.v) / state.k;
    let mut next = *state;
    next.last_policy = *own_policy;
    if raw < 0.0 {
        next.floor_events += 1;
    }
    next.epsilon = raw.clamp(0.0, 1.0);
    next
}

pub struct ArcticAgent {
    state: ArcticState,
    game: MatrixGame,
    update_mode: UpdateMode,
}

impl ArcticAgent {
    pub fn new(params: &AgentParams) -> Result<Self> {
        Ok(ArcticAgent {
            state: ArcticState::new(params)?,
            game: params.game,
            update_mode: params.update_mode,
        })
    }

    pub fn state(&self) -> &ArcticState {
        &self.state
    }
}

impl Agent for ArcticAgent {
    fn intend(&mut self, _: &AgentObservation) -> f64 {
        let policy = arctic_policy(&self.state, &self.game);
        self.state.last_policy = policy;
        policy.alpha
    }

    fn observe(&mut self, outcome: &RoundOutcome) {
        let own = match self.update_mode {
            UpdateMode::Intention => self.state.last_policy,
            UpdateMode::Realized => StagePolicy {
                alpha: outcome.own_action.coop_prob(),
                alpha_bar: self.state.last_policy.alpha_bar,
            },
        };
        let last = self.state.last_policy;
        self.state = arctic_update(&self.state, &own, outcome.opp_action, &self.game);
        self.state.last_policy = last;
    }

    fn risk_capital(&self) -> Option<f64> {
        Some(self.state.epsilon)
    }

    fn floor_events(&self) -> u32 {
        self.state.floor_events
    }
}

/// Plays a frozen tabular policy greedily. Tracks its own risk capital and
/// cooperation level (from the opponent's rewards) to index the table.
pub struct RlAgent {
    policy: Arc<TabularPolicy>,
    state: EnvState,
    level: CoopLevel,
    game: MatrixGame,
    player: Player,
    epsilon: f64,
    v: f64,
    k: f64,
    risk: f64,
}

impl RlAgent {
    pub fn new(policy: Arc<TabularPolicy>, params: &AgentParams) -> Result<Self> {
        let k = params.game.payoff_range();
        if k <= 0.0 {
            return Err(Error::ConstantPayoffs);
        }
        let epsilon = params.epsilon_0;
        let level = policy.coop_level(minimax_value(&params.game, params.player.other()))?;
        Ok(RlAgent {
            state: EnvState::start(policy.buckets(), epsilon),
            policy,
            level,
            game: params.game,
            player: params.player,
            epsilon,
            v: minimax_value(&params.game, params.player),
            k,
            risk: cooperation_risk(&params.game, params.player),
        })
    }
}

impl Agent for RlAgent {
    fn intend(&mut self, _: &AgentObservation) -> f64 {
        self.policy
            .guarded_intention(&self.state, self.epsilon, self.risk)
    }

    fn observe(&mut self, outcome: &RoundOutcome) {
        let opp_reward =
            self.game
                .payoff(self.player.other(), outcome.opp_action, outcome.own_action);
        self.level = update_coop_level(self.level, opp_reward);
        self.epsilon = (self.epsilon + (outcome.own_reward - self.v) / self.k).clamp(0.0, 1.0);
        self.state = self.state.advance(
            self.epsilon,
            outcome.own_action,
            outcome.opp_action,
            self.level.is_cooperative(),
        );
    }

    fn risk_capital(&self) -> Option<f64> {
        Some(self.epsilon)
    }
}

/// An agent kind with any external resources (policy files) loaded once, so
/// that fresh agents can be spawned cheaply for every run.
#[derive(Clone, Debug)]
pub enum AgentBlueprint {
    Simple(AgentKind),
    Rl(Arc<TabularPolicy>),
}

impl AgentBlueprint {
    pub fn resolve(kind: &AgentKind) -> Result<Self> {
        match kind {
            AgentKind::Rl(path) => Ok(AgentBlueprint::Rl(Arc::new(TabularPolicy::load(path)?))),
            other => Ok(AgentBlueprint::Simple(other.clone())),
        }
    }

    pub fn spawn(&self, params: &AgentParams) -> Result<Box<dyn Agent>> {
        Ok(match self {
            AgentBlueprint::Rl(policy) => Box::new(RlAgent::new(Arc::clone(policy), params)?),
            AgentBlueprint::Simple(kind) => match kind {
                AgentKind::Arctic => Box::new(ArcticAgent::new(params)?),
                AgentKind::PcBestResponder => Box::new(PcBestResponder::new(params)?),
                AgentKind::TitForTat => Box::new(TitForTat),
                AgentKind::AllD => Box::new(AllD),
                AgentKind::AllC => Box::new(AllC),
                AgentKind::Random(p) => Box::new(RandomAgent(*p)),
                AgentKind::Rl(path) => {
                    let policy = Arc::new(TabularPolicy::load(path)?);
                    Box::new(RlAgent::new(policy, params)?)
                }
            },
        })
    }
}

/// Builds a single agent; prefer [`AgentBlueprint`] when spawning many.
pub fn zoo_agent(kind: &AgentKind, params: &AgentParams) -> Result<Box<dyn Agent>> {
    AgentBlueprint::resolve(kind)?.spawn(params)
}
