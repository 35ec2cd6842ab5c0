//! Two-player, two-action matrix games.
//!
//! Each player's payoffs are stored from that player's own perspective: row is
//! the player's own action, column the opponent's, both ordered `C` then `D`.
//! So for either player `[[R, S], [T, P]]` reads off the familiar social
//! dilemma symbols directly.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Action {
    C,
    D,
}

impl Action {
    pub fn index(self) -> usize {
        match self {
            Action::C => 0,
            Action::D => 1,
        }
    }

    pub fn opposite(self) -> Self {
        match self {
            Action::C => Action::D,
            Action::D => Action::C,
        }
    }

    /// Probability mass this pure action puts on `C`.
    pub fn coop_prob(self) -> f64 {
        match self {
            Action::C => 1.0,
            Action::D => 0.0,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Action::C => 'C',
            Action::D => 'D',
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Player {
    I,
    J,
}

impl Player {
    pub fn other(self) -> Self {
        match self {
            Player::I => Player::J,
            Player::J => Player::I,
        }
    }
}

impl fmt::Display for Player {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Player::I => f.write_str("i"),
            Player::J => f.write_str("j"),
        }
    }
}

/// A mixed strategy over `{C, D}`, represented by its cooperation probability.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct MixedStrategy(f64);

impl MixedStrategy {
    pub const COOPERATE: MixedStrategy = MixedStrategy(1.0);
    pub const DEFECT: MixedStrategy = MixedStrategy(0.0);

    pub fn new(coop_prob: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&coop_prob) {
            return Err(Error::param(
                "coop_prob",
                format!("{coop_prob} is not a probability"),
            ));
        }
        Ok(MixedStrategy(coop_prob))
    }

    /// Clamps into `[0, 1]`; for values produced by arithmetic that may drift by an ulp.
    pub fn clamped(coop_prob: f64) -> Self {
        MixedStrategy(coop_prob.clamp(0.0, 1.0))
    }

    pub fn coop_prob(self) -> f64 {
        self.0
    }
}

impl From<Action> for MixedStrategy {
    fn from(action: Action) -> Self {
        MixedStrategy(action.coop_prob())
    }
}

/// The four social-dilemma payoffs seen by one player.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Payoffs {
    pub r: f64,
    pub s: f64,
    pub t: f64,
    pub p: f64,
}

impl Payoffs {
    /// `R + P - S - T`, the interaction coefficient of the bilinear utility.
    pub fn interaction(&self) -> f64 {
        self.r + self.p - self.s - self.t
    }

    pub fn is_ssd(&self) -> bool {
        self.r > self.p
            && self.r > self.s
            && 2.0 * self.r > self.t + self.s
            && (self.t > self.r || self.p > self.s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixGame {
    payoff_i: [[f64; 2]; 2],
    payoff_j: [[f64; 2]; 2],
}

impl MatrixGame {
    pub fn new(payoff_i: [[f64; 2]; 2], payoff_j: [[f64; 2]; 2]) -> Result<Self> {
        if payoff_i
            .iter()
            .chain(payoff_j.iter())
            .flatten()
            .any(|v| !v.is_finite())
        {
            return Err(Error::InvalidGame("payoffs must be finite".into()));
        }
        Ok(MatrixGame { payoff_i, payoff_j })
    }

    /// A symmetric game where both players see the same `R, S, T, P`.
    pub fn symmetric(r: f64, s: f64, t: f64, p: f64) -> Result<Self> {
        let m = [[r, s], [t, p]];
        Self::new(m, m)
    }

    /// Prisoner's Dilemma on `[0, 1]`: R = 3/4, S = 0, T = 1, P = 1/4.
    pub fn prisoners_dilemma() -> Self {
        Self::symmetric(0.75, 0.0, 1.0, 0.25).expect("finite payoffs")
    }

    /// Stag Hunt on `[0, 1]`: R = 1, S = 0, T = 3/4, P = 1/4.
    pub fn stag_hunt() -> Self {
        Self::symmetric(1.0, 0.0, 0.75, 0.25).expect("finite payoffs")
    }

    /// Looks up a built-in game by name (`pd`, `stag_hunt`).
    pub fn named(name: &str) -> Option<Self> {
        match name {
            "pd" | "prisoners_dilemma" => Some(Self::prisoners_dilemma()),
            "stag_hunt" | "sh" => Some(Self::stag_hunt()),
            _ => None,
        }
    }

    /// Resolves either a built-in game name or a path to a game file.
    pub fn resolve(name_or_path: &str) -> Result<Self> {
        if let Some(game) = Self::named(name_or_path) {
            return Ok(game);
        }
        Self::load(name_or_path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        text.parse()
    }

    pub fn matrix(&self, player: Player) -> &[[f64; 2]; 2] {
        match player {
            Player::I => &self.payoff_i,
            Player::J => &self.payoff_j,
        }
    }

    pub fn payoff(&self, player: Player, own: Action, opp: Action) -> f64 {
        self.matrix(player)[own.index()][opp.index()]
    }

    /// Rewards `(reward_i, reward_j)` for a realized joint action.
    pub fn rewards(&self, action_i: Action, action_j: Action) -> (f64, f64) {
        (
            self.payoff(Player::I, action_i, action_j),
            self.payoff(Player::J, action_j, action_i),
        )
    }

    pub fn payoffs(&self, player: Player) -> Payoffs {
        let m = self.matrix(player);
        Payoffs {
            r: m[0][0],
            s: m[0][1],
            t: m[1][0],
            p: m[1][1],
        }
    }

    fn all_payoffs(&self) -> impl Iterator<Item = f64> + '_ {
        self.payoff_i
            .iter()
            .chain(self.payoff_j.iter())
            .flatten()
            .copied()
    }

    pub fn is_normalized(&self) -> bool {
        self.all_payoffs().all(|v| (0.0..=1.0).contains(&v))
    }

    /// Greatest payoff range across the two players.
    pub fn payoff_range(&self) -> f64 {
        [Player::I, Player::J]
            .into_iter()
            .map(|pl| {
                let flat = self.matrix(pl).iter().flatten().copied();
                let (lo, hi) = flat.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                    (lo.min(v), hi.max(v))
                });
                hi - lo
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GameFile {
    payoff_i: [[f64; 2]; 2],
    payoff_j: [[f64; 2]; 2],
}

impl FromStr for MatrixGame {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let file: GameFile =
            toml::from_str(s).map_err(|e| Error::InvalidGame(e.message().to_string()))?;
        MatrixGame::new(file.payoff_i, file.payoff_j)
    }
}

impl MatrixGame {
    /// Serializes to the game file format.
    pub fn to_toml(&self) -> String {
        let row = |m: &[[f64; 2]; 2]| {
            format!(
                "[[{:?}, {:?}], [{:?}, {:?}]]",
                m[0][0], m[0][1], m[1][0], m[1][1]
            )
        };
        format!(
            "payoff_i = {}\npayoff_j = {}\n",
            row(&self.payoff_i),
            row(&self.payoff_j)
        )
    }
}

/// Bilinear expected utility of `player` playing `own` against `opp`.
pub fn expected_utility(
    game: &MatrixGame,
    own: MixedStrategy,
    opp: MixedStrategy,
    player: Player,
) -> f64 {
    let a = own.coop_prob();
    let b = opp.coop_prob();
    let m = game.matrix(player);
    a * b * m[0][0]
        + a * (1.0 - b) * m[0][1]
        + (1.0 - a) * b * m[1][0]
        + (1.0 - a) * (1.0 - b) * m[1][1]
}

/// A maximizer of expected utility against `opp`; ties go to defection.
pub fn best_response(game: &MatrixGame, opp: MixedStrategy, player: Player) -> MixedStrategy {
    let coop = expected_utility(game, MixedStrategy::COOPERATE, opp, player);
    let defect = expected_utility(game, MixedStrategy::DEFECT, opp, player);
    if coop > defect {
        MixedStrategy::COOPERATE
    } else {
        MixedStrategy::DEFECT
    }
}

/// Value and a maximin strategy for one player.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Maximin {
    pub value: f64,
    pub strategy: MixedStrategy,
}

/// Closed-form maximin for a 2x2 game.
///
/// Against a fixed own strategy the opponent's minimizing reply is pure, so the
/// guaranteed payoff is the lower envelope of two lines in the own cooperation
/// probability. Its maximum sits at an endpoint or at the crossing point.
pub fn maximin(game: &MatrixGame, player: Player) -> Maximin {
    let Payoffs { r, s, t, p } = game.payoffs(player);
    // vs opponent C: t + a (r - t); vs opponent D: p + a (s - p)
    let lower = |a: f64| (t + a * (r - t)).min(p + a * (s - p));
    let mut candidates = vec![0.0, 1.0];
    let denom = (r - t) - (s - p);
    if denom != 0.0 {
        let cross = (p - t) / denom;
        if (0.0..=1.0).contains(&cross) {
            candidates.push(cross);
        }
    }
    candidates.sort_by(f64::total_cmp);
    let mut best = Maximin {
        value: f64::NEG_INFINITY,
        strategy: MixedStrategy::DEFECT,
    };
    for a in candidates {
        let v = lower(a);
        if v > best.value {
            best = Maximin {
                value: v,
                strategy: MixedStrategy::clamped(a),
            };
        }
    }
    best
}

pub fn minimax_value(game: &MatrixGame, player: Player) -> f64 {
    maximin(game, player).value
}

/// Grid maximin: a `1e-3` sweep of the own strategy refined to `1e-6` around the best point.
///
/// The inner minimum is taken over the opponent's pure strategies (the grid
/// endpoints), where a bilinear objective attains it.
pub fn minimax_value_grid(game: &MatrixGame, player: Player) -> f64 {
    let worst = |a: f64| {
        let own = MixedStrategy::clamped(a);
        expected_utility(game, own, MixedStrategy::COOPERATE, player).min(expected_utility(
            game,
            own,
            MixedStrategy::DEFECT,
            player,
        ))
    };
    let (mut best_a, mut best_v) = (0.0, f64::NEG_INFINITY);
    for k in 0..=1000 {
        let a = k as f64 / 1000.0;
        let v = worst(a);
        if v > best_v {
            best_a = a;
            best_v = v;
        }
    }
    let lo = (best_a - 1e-3).max(0.0);
    for k in 0..=2000 {
        let a = (lo + k as f64 * 1e-6).min(1.0);
        best_v = best_v.max(worst(a));
    }
    best_v
}

/// Nash equilibria `(sigma_i, sigma_j)` of a 2x2 game: every pure equilibrium,
/// then the completely mixed one when it exists. Degenerate games with a
/// continuum of equilibria report only these isolated points.
pub fn nash_equilibria(game: &MatrixGame) -> Vec<(MixedStrategy, MixedStrategy)> {
    let mut found = Vec::new();
    for a_i in [Action::C, Action::D] {
        for a_j in [Action::C, Action::D] {
            let best_i =
                game.payoff(Player::I, a_i, a_j) >= game.payoff(Player::I, a_i.opposite(), a_j);
            let best_j =
                game.payoff(Player::J, a_j, a_i) >= game.payoff(Player::J, a_j.opposite(), a_i);
            if best_i && best_j {
                found.push((
                    MixedStrategy::clamped(a_i.coop_prob()),
                    MixedStrategy::clamped(a_j.coop_prob()),
                ));
            }
        }
    }
    // each player's mix makes the other indifferent
    let indifference = |player: Player| {
        let Payoffs { r, s, t, p } = game.payoffs(player);
        let denom = (r - t) - (s - p);
        (denom != 0.0).then(|| (p - s) / denom)
    };
    if let (Some(a_i), Some(a_j)) = (indifference(Player::J), indifference(Player::I)) {
        if a_i > 0.0 && a_i < 1.0 && a_j > 0.0 && a_j < 1.0 {
            found.push((MixedStrategy::clamped(a_i), MixedStrategy::clamped(a_j)));
        }
    }
    found
}

/// Social-dilemma payoff inequalities, checked for both players.
pub fn validate_ssd(game: &MatrixGame) -> bool {
    game.payoffs(Player::I).is_ssd() && game.payoffs(Player::J).is_ssd()
}

/// Rescales payoffs into `[0, 1]`.
///
/// Each player's payoffs are shifted by that player's minimum and divided by
/// the common constant `K`, the greatest payoff range across players, so one
/// unit of risk capital means the same thing for both players. Returns the
/// rescaled game and `K`.
pub fn normalize(game: &MatrixGame) -> Result<(MatrixGame, f64)> {
    let k = game.payoff_range();
    if k <= 0.0 {
        return Err(Error::ConstantPayoffs);
    }
    let rescale = |m: &[[f64; 2]; 2]| {
        let lo = m.iter().flatten().copied().fold(f64::INFINITY, f64::min);
        m.map(|row| row.map(|v| (v - lo) / k))
    };
    let scaled = MatrixGame::new(rescale(&game.payoff_i), rescale(&game.payoff_j))?;
    Ok((scaled, k))
}
