//! Fixed workloads shared by the benchmarks.

use arctic_core::{AgentKind, SimConfig, TrainConfig};

/// ARCTIC against `opponent` in the default prisoner's dilemma setup.
pub fn batch_config(opponent: AgentKind, runs: u32) -> SimConfig {
    SimConfig {
        agent_j: opponent,
        runs,
        seed: 2024,
        ..SimConfig::default()
    }
}

/// Short training run used to time the learner.
pub fn train_config(episodes: u64) -> TrainConfig {
    TrainConfig {
        episodes,
        seed: 2024,
        ..TrainConfig::default()
    }
}
