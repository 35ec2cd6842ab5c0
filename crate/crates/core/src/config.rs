//! Experiment configuration files.
//!
//! A config is a TOML document. Overrides given as dotted `key=value` pairs
//! are merged into the document before it is checked, so flags and files go
//! through the same validation.
//!
//! ```toml
//! seed = 7
//! game = "pd"            # name, path to a game file, or an inline table
//! agents = ["arctic", "t4t"]
//! rounds = 100
//! noise = 0.05
//!
//! [belief]
//! kind = "mixture"
//! x = 0.5
//! beta = 0.0
//! epsilon = 0.1
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::agents::{AgentKind, UpdateMode};
use crate::beliefs::{Belief, CooperativeBelief, Horizon};
use crate::error::{Error, Result};
use crate::game::MatrixGame;
use crate::rl::{TrainConfig, TrainOpponent, DEFAULT_BUCKETS};
use crate::sim::{NoiseModel, SimConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GameSpec {
    Named(String),
    Inline {
        payoff_i: [[f64; 2]; 2],
        payoff_j: [[f64; 2]; 2],
    },
}

impl Default for GameSpec {
    fn default() -> Self {
        GameSpec::Named("pd".into())
    }
}

impl GameSpec {
    pub fn resolve(&self) -> Result<MatrixGame> {
        match self {
            GameSpec::Named(name) => MatrixGame::resolve(name),
            GameSpec::Inline { payoff_i, payoff_j } => MatrixGame::new(*payoff_i, *payoff_j),
        }
    }

    pub fn label(&self) -> String {
        match self {
            GameSpec::Named(name) => name.clone(),
            GameSpec::Inline { .. } => "inline".into(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BeliefKind {
    Adversarial,
    Cooperative,
    #[default]
    Mixture,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeliefSection {
    pub kind: Option<BeliefKind>,
    pub x: Option<f64>,
    pub beta: Option<f64>,
    pub beta_plus: Option<f64>,
    pub beta_minus: Option<f64>,
    pub epsilon: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundSection {
    pub epsilons: Option<Vec<f64>>,
    pub rounds: Option<u32>,
    pub d: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RlSection {
    pub opponent: Option<String>,
    pub episodes: Option<u64>,
    pub shaping: Option<bool>,
    pub buckets: Option<u32>,
    pub coop_gamma: Option<f64>,
    pub coop_threshold: Option<f64>,
    pub normalized: Option<bool>,
    pub learning_rate: Option<f64>,
    pub discount: Option<f64>,
    pub exploration: Option<f64>,
    pub exploration_final: Option<f64>,
    pub risk_guard: Option<bool>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: Option<u64>,
    pub game: Option<GameSpec>,
    pub agents: Option<Vec<AgentKind>>,
    pub agent_i: Option<AgentKind>,
    pub agent_j: Option<AgentKind>,
    pub rounds: Option<u32>,
    pub noise: Option<f64>,
    pub noise_model: Option<NoiseModel>,
    pub gamma: Option<f64>,
    pub runs: Option<u32>,
    pub epsilon_0: Option<f64>,
    pub x: Option<f64>,
    pub beta: Option<f64>,
    pub tie_future: Option<bool>,
    pub update_mode: Option<UpdateMode>,
    #[serde(default)]
    pub belief: BeliefSection,
    #[serde(default)]
    pub bound: BoundSection,
    #[serde(default)]
    pub rl: RlSection,
}

/// Parses an override value as a TOML value, falling back to a bare string.
fn parse_value(raw: &str) -> Value {
    let wrapped = format!("v = {raw}");
    match wrapped.parse::<Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| Value::String(raw.into())),
        Err(_) => Value::String(raw.into()),
    }
}

/// Sets a dotted key in a table, creating intermediate tables.
pub fn set_dotted(table: &mut Table, key: &str, value: Value) -> Result<()> {
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts
        .pop()
        .filter(|k| !k.is_empty())
        .ok_or_else(|| Error::Config(format!("empty key in {key:?}")))?;
    let mut cur = table;
    for part in parts {
        let entry = cur
            .entry(part.to_string())
            .or_insert_with(|| Value::Table(Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("{part:?} in {key:?} is not a table")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

/// Applies `key=value` overrides.
pub fn apply_overrides(table: &mut Table, overrides: &[String]) -> Result<()> {
    for item in overrides {
        let (key, raw) = item
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override {item:?} is not key=value")))?;
        set_dotted(table, key.trim(), parse_value(raw.trim()))?;
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_table(table: Table) -> Result<Self> {
        Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let table: Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
        Self::from_table(table)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Loads an optional file and merges overrides on top of it.
    pub fn load_with_overrides(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut table = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                text.parse::<Table>()
                    .map_err(|e| Error::Config(format!("{}: {}", p.display(), e.message())))?
            }
            None => Table::new(),
        };
        apply_overrides(&mut table, overrides)?;
        Self::from_table(table)
    }

    pub fn require_seed(&self) -> Result<u64> {
        self.seed
            .ok_or_else(|| Error::Config("a master seed is required (seed = ... or --seed)".into()))
    }

    pub fn game_spec(&self) -> GameSpec {
        self.game.clone().unwrap_or_default()
    }

    pub fn game(&self) -> Result<MatrixGame> {
        self.game_spec().resolve()
    }

    fn pick(name: &str, top: Option<f64>, section: Option<f64>, default: f64) -> Result<f64> {
        match (top, section) {
            (Some(a), Some(b)) if a != b => Err(Error::Config(format!(
                "{name} = {a} conflicts with belief.{name} = {b}"
            ))),
            (a, b) => Ok(b.or(a).unwrap_or(default)),
        }
    }

    pub fn x(&self) -> Result<f64> {
        Self::pick("x", self.x, self.belief.x, 0.5)
    }

    pub fn beta(&self) -> Result<f64> {
        Self::pick("beta", self.beta, self.belief.beta, 0.0)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma.unwrap_or(0.9)
    }

    pub fn cooperative_belief(&self) -> Result<CooperativeBelief> {
        CooperativeBelief::new(
            self.x()?,
            self.beta()?,
            self.belief.beta_plus.unwrap_or(1.0),
            self.belief.beta_minus.unwrap_or(0.0),
        )
    }

    pub fn belief(&self) -> Result<Belief> {
        Ok(match self.belief.kind.unwrap_or_default() {
            BeliefKind::Adversarial => Belief::Adversarial,
            BeliefKind::Cooperative => Belief::Cooperative(self.cooperative_belief()?),
            BeliefKind::Mixture => Belief::mixture(
                self.belief.epsilon.unwrap_or(0.0),
                self.cooperative_belief()?,
            )?,
        })
    }

    /// Finite horizon of `rounds` when given, otherwise the infinite discounted one.
    pub fn horizon(&self) -> Result<Horizon> {
        match self.rounds {
            Some(n) => Horizon::finite(n, self.gamma()),
            None => Horizon::infinite(self.gamma()),
        }
    }

    /// The agent list; defaults to ARCTIC against tit-for-tat.
    pub fn agent_kinds(&self) -> Result<Vec<AgentKind>> {
        match (&self.agents, &self.agent_i, &self.agent_j) {
            (Some(_), Some(_), _) | (Some(_), _, Some(_)) => Err(Error::Config(
                "give either agents or agent_i/agent_j, not both".into(),
            )),
            (Some(list), None, None) => Ok(list.clone()),
            (None, i, j) => Ok(vec![
                i.clone().unwrap_or(AgentKind::Arctic),
                j.clone().unwrap_or(AgentKind::TitForTat),
            ]),
        }
    }

    /// Simulation settings for a two-agent match; needs exactly two agents.
    pub fn sim_config(&self) -> Result<SimConfig> {
        let kinds = self.agent_kinds()?;
        let [agent_i, agent_j] = <[AgentKind; 2]>::try_from(kinds).map_err(|k| {
            Error::Config(format!("a match needs exactly two agents, got {}", k.len()))
        })?;
        self.sim_config_for(agent_i, agent_j)
    }

    pub fn sim_config_for(&self, agent_i: AgentKind, agent_j: AgentKind) -> Result<SimConfig> {
        let d = SimConfig::default();
        let cfg = SimConfig {
            game_name: self.game_spec().label(),
            game: self.game()?,
            agent_i,
            agent_j,
            rounds: self.rounds.unwrap_or(d.rounds),
            noise: self.noise.unwrap_or(d.noise),
            noise_model: self.noise_model.unwrap_or(d.noise_model),
            gamma: self.gamma(),
            runs: self.runs.unwrap_or(d.runs),
            seed: self.require_seed()?,
            epsilon_0: self.epsilon_0.unwrap_or(d.epsilon_0),
            x: self.x()?,
            beta: self.beta()?,
            beta_plus: self.belief.beta_plus.unwrap_or(d.beta_plus),
            beta_minus: self.belief.beta_minus.unwrap_or(d.beta_minus),
            tie_future: self.tie_future.unwrap_or(d.tie_future),
            update_mode: self.update_mode.unwrap_or(d.update_mode),
        };
        cfg.validate().map_err(|e| match e {
            Error::EmptyBatch => Error::Config("runs must be at least 1".into()),
            other => other,
        })?;
        Ok(cfg)
    }

    pub fn train_config(&self) -> Result<TrainConfig> {
        let d = TrainConfig::default();
        let rl = &self.rl;
        let opponent = match &rl.opponent {
            Some(s) => s.parse::<TrainOpponent>()?,
            None => d.opponent,
        };
        let cfg = TrainConfig {
            game: self.game()?,
            opponent,
            episodes: rl.episodes.unwrap_or(d.episodes),
            rounds: self.rounds.unwrap_or(d.rounds),
            shaping: rl.shaping.unwrap_or(d.shaping),
            noise: self.noise.unwrap_or(d.noise),
            noise_model: self.noise_model.unwrap_or(d.noise_model),
            buckets: rl.buckets.unwrap_or(DEFAULT_BUCKETS),
            coop_gamma: rl.coop_gamma.unwrap_or(d.coop_gamma),
            coop_threshold: rl
                .coop_threshold
                .or(self.belief.x)
                .or(self.x)
                .unwrap_or(d.coop_threshold),
            normalized: rl.normalized.unwrap_or(d.normalized),
            epsilon_0: self.epsilon_0.unwrap_or(d.epsilon_0),
            learning_rate: rl.learning_rate.unwrap_or(d.learning_rate),
            discount: rl.discount.unwrap_or(d.discount),
            exploration: rl.exploration.unwrap_or(d.exploration),
            exploration_final: rl.exploration_final.unwrap_or(d.exploration_final),
            risk_guard: rl.risk_guard.unwrap_or(d.risk_guard),
            seed: self.require_seed()?,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// First line of every artifact: a comment holding the resolved settings as JSON.
pub fn metadata_header(command: &str, settings: &impl Serialize) -> String {
    let json = serde_json::to_string(settings).unwrap_or_else(|e| format!("{{\"error\":\"{e}\"}}"));
    format!("# arctic-lab {command} {json}\n")
}
