//! Risk-capital cooperation in repeated 2x2 games: games and minimax values,
//! policy-conditioned beliefs, the cooperation/safety trade-off, agents, a
//! seeded simulation engine and a small tabular learner.

pub mod agents;
pub mod beliefs;
pub mod config;
pub mod error;
pub mod game;
pub mod rl;
pub mod sim;
pub mod tradeoff;

pub use agents::{Agent, AgentKind, AgentParams, ArcticAgent, UpdateMode};
pub use beliefs::{Belief, CooperativeBelief, Horizon, StagePolicy};
pub use config::ExperimentConfig;
pub use error::{Error, Result};
pub use game::{Action, MatrixGame, MixedStrategy, Payoffs, Player};
pub use rl::{TabularPolicy, TrainConfig, TrainOpponent};
pub use sim::{BatchSummary, MatchTrace, NoiseModel, ScoreMatrix, SimConfig};
pub use tradeoff::TradeoffParams;
