//! Policy-conditioned beliefs and best responses to them.
//!
//! A belief maps the player's own two-stage policy `(alpha, alpha_bar)` to a
//! forecast of the opponent's cooperation now and in all later rounds. Three
//! shapes are supported: the adversarial belief (the opponent minimizes our
//! return), the cooperation-promoting belief (the opponent's future
//! cooperation rises when we cooperate at least `x`), and the risk-capital
//! mixture of the two.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{
    expected_utility, minimax_value, validate_ssd, MatrixGame, MixedStrategy, Player,
};

/// Grid resolution used to refine best responses.
pub const GRID_STEPS: usize = 1000;

/// Number of points used when measuring the distance between two beliefs.
pub const CLOSENESS_GRID_POINTS: usize = 101;

fn check_prob(name: &'static str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::param(name, format!("{v} is not in [0, 1]")))
    }
}

/// Intended cooperation probability now (`alpha`) and in every later round (`alpha_bar`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StagePolicy {
    pub alpha: f64,
    pub alpha_bar: f64,
}

impl StagePolicy {
    pub fn new(alpha: f64, alpha_bar: f64) -> Result<Self> {
        check_prob("alpha", alpha)?;
        check_prob("alpha_bar", alpha_bar)?;
        Ok(StagePolicy { alpha, alpha_bar })
    }

    pub fn tied(alpha: f64) -> Result<Self> {
        Self::new(alpha, alpha)
    }

    pub fn defect() -> Self {
        StagePolicy {
            alpha: 0.0,
            alpha_bar: 0.0,
        }
    }

    pub fn now(&self) -> MixedStrategy {
        MixedStrategy::clamped(self.alpha)
    }

    pub fn future(&self) -> MixedStrategy {
        MixedStrategy::clamped(self.alpha_bar)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OpponentForecast {
    pub beta_now: f64,
    pub beta_future: f64,
}

impl OpponentForecast {
    pub fn new(beta_now: f64, beta_future: f64) -> Result<Self> {
        check_prob("beta_now", beta_now)?;
        check_prob("beta_future", beta_future)?;
        Ok(OpponentForecast {
            beta_now,
            beta_future,
        })
    }

    fn sup_distance(&self, other: &OpponentForecast) -> f64 {
        (self.beta_now - other.beta_now)
            .abs()
            .max((self.beta_future - other.beta_future).abs())
    }
}

/// Parameters of the cooperation-promoting belief.
///
/// If the player cooperates with probability at least `x`, the opponent is
/// forecast to play `beta` now and `beta_plus` afterwards; otherwise `beta`
/// now and `beta_minus` afterwards.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CooperativeBelief {
    pub x: f64,
    pub beta: f64,
    pub beta_plus: f64,
    pub beta_minus: f64,
}

impl CooperativeBelief {
    pub fn new(x: f64, beta: f64, beta_plus: f64, beta_minus: f64) -> Result<Self> {
        if !(x > 0.0 && x <= 1.0) {
            return Err(Error::param("x", format!("{x} is not in (0, 1]")));
        }
        check_prob("beta", beta)?;
        check_prob("beta_plus", beta_plus)?;
        check_prob("beta_minus", beta_minus)?;
        if !(beta_minus <= beta && beta <= beta_plus) {
            return Err(Error::param(
                "beta",
                format!(
                    "need beta_minus <= beta <= beta_plus, got {beta_minus}, {beta}, {beta_plus}"
                ),
            ));
        }
        Ok(CooperativeBelief {
            x,
            beta,
            beta_plus,
            beta_minus,
        })
    }

    /// `beta_plus = 1`, `beta_minus = 0`: the initialization used by ARCTIC agents.
    pub fn with_full_swing(x: f64, beta: f64) -> Result<Self> {
        Self::new(x, beta, 1.0, 0.0)
    }

    fn future_for(&self, alpha: f64) -> f64 {
        if alpha >= self.x {
            self.beta_plus
        } else {
            self.beta_minus
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Belief {
    Adversarial,
    Cooperative(CooperativeBelief),
    /// `(1 - epsilon)` adversarial plus `epsilon` cooperative, combined per forecast.
    Mixture {
        epsilon: f64,
        cooperative: CooperativeBelief,
    },
}

impl Belief {
    pub fn mixture(epsilon: f64, cooperative: CooperativeBelief) -> Result<Self> {
        check_prob("epsilon", epsilon)?;
        Ok(Belief::Mixture {
            epsilon,
            cooperative,
        })
    }

    /// The cooperation threshold `x`, for beliefs that have one.
    pub fn threshold(&self) -> Option<f64> {
        match self {
            Belief::Adversarial => None,
            Belief::Cooperative(c) | Belief::Mixture { cooperative: c, .. } => Some(c.x),
        }
    }
}

/// Remaining rounds and discount factor.
///
/// `rounds = None` stands for an unbounded lookahead, which requires `gamma < 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Horizon {
    rounds: Option<u32>,
    gamma: f64,
}

impl Horizon {
    pub fn finite(rounds: u32, gamma: f64) -> Result<Self> {
        if rounds == 0 {
            return Err(Error::param("rounds", "horizon needs at least one round"));
        }
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::param("gamma", format!("{gamma} is not in (0, 1]")));
        }
        Ok(Horizon {
            rounds: Some(rounds),
            gamma,
        })
    }

    pub fn infinite(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::param(
                "gamma",
                format!("an unbounded horizon needs gamma in (0, 1), got {gamma}"),
            ));
        }
        Ok(Horizon {
            rounds: None,
            gamma,
        })
    }

    pub fn rounds(&self) -> Option<u32> {
        self.rounds
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `sum_{t=1}^{n-1} gamma^t`, in closed form.
    pub fn future_weight(&self) -> f64 {
        let g = self.gamma;
        match self.rounds {
            None => g / (1.0 - g),
            Some(n) if g == 1.0 => f64::from(n - 1),
            Some(n) => g * (1.0 - g.powi(n as i32 - 1)) / (1.0 - g),
        }
    }
}

/// The opponent cooperation probability that minimizes the player's payoff
/// against `own`. Ties go to defection.
fn adversarial_reply(game: &MatrixGame, own: f64, player: Player) -> f64 {
    let own = MixedStrategy::clamped(own);
    let vs_c = expected_utility(game, own, MixedStrategy::COOPERATE, player);
    let vs_d = expected_utility(game, own, MixedStrategy::DEFECT, player);
    if vs_c < vs_d {
        1.0
    } else {
        0.0
    }
}

pub fn forecast(
    game: &MatrixGame,
    belief: &Belief,
    policy: &StagePolicy,
    player: Player,
) -> OpponentForecast {
    match belief {
        Belief::Adversarial => OpponentForecast {
            beta_now: adversarial_reply(game, policy.alpha, player),
            beta_future: adversarial_reply(game, policy.alpha_bar, player),
        },
        Belief::Cooperative(c) => OpponentForecast {
            beta_now: c.beta,
            beta_future: c.future_for(policy.alpha),
        },
        Belief::Mixture {
            epsilon,
            cooperative,
        } => {
            let adv = forecast(game, &Belief::Adversarial, policy, player);
            let coop = forecast(game, &Belief::Cooperative(*cooperative), policy, player);
            let mix = |a: f64, c: f64| ((1.0 - epsilon) * a + epsilon * c).clamp(0.0, 1.0);
            OpponentForecast {
                beta_now: mix(adv.beta_now, coop.beta_now),
                beta_future: mix(adv.beta_future, coop.beta_future),
            }
        }
    }
}

/// `E[u(alpha, beta)] + sum_{t=1}^{n-1} gamma^t E[u(alpha_bar, beta_bar)]`.
pub fn discounted_return(
    game: &MatrixGame,
    policy: &StagePolicy,
    forecast: &OpponentForecast,
    horizon: &Horizon,
    player: Player,
) -> f64 {
    let now = expected_utility(
        game,
        policy.now(),
        MixedStrategy::clamped(forecast.beta_now),
        player,
    );
    let later = expected_utility(
        game,
        policy.future(),
        MixedStrategy::clamped(forecast.beta_future),
        player,
    );
    now + horizon.future_weight() * later
}

/// Sorted candidate cooperation levels: a uniform grid plus the structural
/// points where the piecewise-bilinear objective can peak.
fn candidates(extra: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = (0..=GRID_STEPS)
        .map(|k| k as f64 / GRID_STEPS as f64)
        .chain(extra.iter().copied().filter(|v| (0.0..=1.0).contains(v)))
        .collect();
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

/// First maximizer in iteration order, so ascending input breaks ties low.
fn argmax(points: impl Iterator<Item = f64>, f: impl Fn(f64) -> f64) -> Option<(f64, f64)> {
    points.fold(None, |best, a| {
        let v = f(a);
        match best {
            Some((_, bv)) if bv >= v => best,
            _ => Some((a, v)),
        }
    })
}

/// Evaluates the two separable pieces of the discounted return under a belief.
struct Objective<'a> {
    game: &'a MatrixGame,
    belief: &'a Belief,
    player: Player,
}

impl Objective<'_> {
    fn stage(&self, alpha: f64) -> f64 {
        let policy = StagePolicy {
            alpha,
            alpha_bar: alpha,
        };
        let f = forecast(self.game, self.belief, &policy, self.player);
        expected_utility(
            self.game,
            MixedStrategy::clamped(alpha),
            MixedStrategy::clamped(f.beta_now),
            self.player,
        )
    }

    /// Future per-round payoff of `alpha_bar` when the current level falls in
    /// the branch represented by `alpha_branch`.
    fn future(&self, alpha_branch: f64, alpha_bar: f64) -> f64 {
        let policy = StagePolicy {
            alpha: alpha_branch,
            alpha_bar,
        };
        let f = forecast(self.game, self.belief, &policy, self.player);
        expected_utility(
            self.game,
            MixedStrategy::clamped(alpha_bar),
            MixedStrategy::clamped(f.beta_future),
            self.player,
        )
    }
}

/// Best two-stage policy against a belief.
///
/// The objective is bilinear on each side of the threshold `x`, so the search
/// evaluates a `1e-3` grid together with `{0, x, 1}` and the player's maximin
/// level (where the adversarial reply switches). Ties go to the lower `alpha`.
///
/// With `tie_future` unset the policy maximizes the discounted return over
/// `(alpha, alpha_bar)` jointly. With `tie_future` set the player commits to
/// `alpha_bar = alpha`. The best level on each side of the threshold is found
/// from the current-round payoff, and the cooperating level is kept only if it
/// beats defecting now under the same future plan. This is exactly the
/// cooperation condition whose `epsilon` threshold
/// [`min_epsilon_for_cooperation`] solves.
pub fn best_response_to_belief(
    game: &MatrixGame,
    belief: &Belief,
    horizon: &Horizon,
    tie_future: bool,
    player: Player,
) -> StagePolicy {
    let obj = Objective {
        game,
        belief,
        player,
    };
    let weight = horizon.future_weight();
    let kink = crate::game::maximin(game, player).strategy.coop_prob();
    let threshold = belief.threshold();
    let cands = candidates(&[0.0, 1.0, kink, threshold.unwrap_or(0.0)]);

    let Some(x) = threshold else {
        // No threshold: one smooth branch.
        if tie_future {
            let (a, _) = argmax(cands.iter().copied(), |a| {
                obj.stage(a) + weight * obj.future(a, a)
            })
            .expect("non-empty candidates");
            return StagePolicy {
                alpha: a,
                alpha_bar: a,
            };
        }
        let (a, _) = argmax(cands.iter().copied(), |a| obj.stage(a)).expect("non-empty");
        let (abar, _) = argmax(cands.iter().copied(), |b| obj.future(0.0, b)).expect("non-empty");
        return StagePolicy {
            alpha: a,
            alpha_bar: abar,
        };
    };

    let below = argmax(cands.iter().copied().filter(|&a| a < x), |a| obj.stage(a));
    let above = argmax(cands.iter().copied().filter(|&a| a >= x), |a| obj.stage(a))
        .expect("x <= 1 is a candidate");
    let (a_d, f_d) = below.expect("0 < x so 0 is below the threshold");
    let (a_c, f_c) = above;

    if tie_future {
        let cooperate = f_c + weight * obj.future(a_c, a_c);
        let defect = f_d + weight * obj.future(a_d, a_c);
        if cooperate > defect {
            StagePolicy {
                alpha: a_c,
                alpha_bar: a_c,
            }
        } else {
            StagePolicy {
                alpha: a_d,
                alpha_bar: a_d,
            }
        }
    } else {
        let (abar_d, g_d) =
            argmax(cands.iter().copied(), |b| obj.future(a_d, b)).expect("non-empty");
        let (abar_c, g_c) =
            argmax(cands.iter().copied(), |b| obj.future(a_c, b)).expect("non-empty");
        if f_c + weight * g_c > f_d + weight * g_d {
            StagePolicy {
                alpha: a_c,
                alpha_bar: abar_c,
            }
        } else {
            StagePolicy {
                alpha: a_d,
                alpha_bar: abar_d,
            }
        }
    }
}

/// Minimum expected payoff of `policy` over all opponent strategies.
pub fn worst_case_value(game: &MatrixGame, policy: MixedStrategy, player: Player) -> f64 {
    expected_utility(game, policy, MixedStrategy::COOPERATE, player).min(expected_utility(
        game,
        policy,
        MixedStrategy::DEFECT,
        player,
    ))
}

/// `v - worst_case_value`: how much below the minimax value the policy can be pushed.
pub fn exploitability(game: &MatrixGame, policy: MixedStrategy, player: Player) -> f64 {
    minimax_value(game, player) - worst_case_value(game, policy, player)
}

pub fn is_epsilon_safe(
    game: &MatrixGame,
    policy: MixedStrategy,
    epsilon: f64,
    player: Player,
) -> bool {
    exploitability(game, policy, player) <= epsilon + 1e-12
}

/// Sup distance between the current-round forecasts of two beliefs, over a
/// uniform grid of own cooperation levels.
pub fn belief_distance(game: &MatrixGame, a: &Belief, b: &Belief, player: Player) -> f64 {
    (0..CLOSENESS_GRID_POINTS)
        .map(|k| k as f64 / (CLOSENESS_GRID_POINTS - 1) as f64)
        .map(|alpha| {
            let policy = StagePolicy {
                alpha,
                alpha_bar: alpha,
            };
            forecast(game, a, &policy, player).sup_distance(&forecast(game, b, &policy, player))
        })
        .fold(0.0, f64::max)
}

/// Left side minus right side of the cooperation condition for `p^C`:
///
/// `alpha beta (R+P-S-T) + alpha (S-P) + W (beta+ - beta-) [alpha_bar (R+P-S-T) + T - P]`
///
/// with `W = sum_{t=1}^{n-1} gamma^t`. Cooperation is a best response when this is `>= 0`.
pub fn cooperation_margin(
    game: &MatrixGame,
    policy: &StagePolicy,
    belief: &CooperativeBelief,
    horizon: &Horizon,
    player: Player,
) -> f64 {
    let pay = game.payoffs(player);
    let k = pay.interaction();
    let a = policy.alpha;
    a * belief.beta * k
        + a * (pay.s - pay.p)
        + horizon.future_weight()
            * (belief.beta_plus - belief.beta_minus)
            * (policy.alpha_bar * k + pay.t - pay.p)
}

/// How the future cooperation level is chosen when checking the condition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FutureMode {
    /// `alpha_bar = alpha`.
    Tied,
    /// Some `alpha_bar` on a `1e-3` grid.
    Existential,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CooperationCheck {
    pub mode: FutureMode,
    pub holds: bool,
    pub alpha_bar: f64,
    pub margin: f64,
}

pub fn cooperation_condition(
    game: &MatrixGame,
    alpha: f64,
    belief: &CooperativeBelief,
    horizon: &Horizon,
    mode: FutureMode,
    player: Player,
) -> CooperationCheck {
    let eval = |abar: f64| {
        cooperation_margin(
            game,
            &StagePolicy {
                alpha,
                alpha_bar: abar,
            },
            belief,
            horizon,
            player,
        )
    };
    let (alpha_bar, margin) = match mode {
        FutureMode::Tied => (alpha, eval(alpha)),
        FutureMode::Existential => {
            argmax((0..=GRID_STEPS).map(|k| k as f64 / GRID_STEPS as f64), eval)
                .expect("non-empty grid")
        }
    };
    CooperationCheck {
        mode,
        holds: margin >= 0.0,
        alpha_bar,
        margin,
    }
}

/// Smallest `epsilon` in `[0, 1]` for which the mixture belief still makes
/// cooperation at `policy` a best response:
///
/// `alpha (P-S) - eps alpha beta (R+P-S-T) <= W eps (beta+ - beta-) [alpha_bar (R+P-S-T) + T - P]`
pub fn min_epsilon_for_cooperation(
    game: &MatrixGame,
    policy: &StagePolicy,
    belief: &CooperativeBelief,
    horizon: &Horizon,
    player: Player,
) -> Result<f64> {
    if !validate_ssd(game) {
        return Err(Error::Domain("game is not a social dilemma".into()));
    }
    let pay = game.payoffs(player);
    let k = pay.interaction();
    let cost = policy.alpha * (pay.p - pay.s);
    let return_per_eps = policy.alpha * belief.beta * k
        + horizon.future_weight()
            * (belief.beta_plus - belief.beta_minus)
            * (policy.alpha_bar * k + pay.t - pay.p);
    if cost <= 0.0 {
        return Ok(0.0);
    }
    if return_per_eps <= 0.0 {
        return Err(Error::InfeasibleCondition);
    }
    let eps = cost / return_per_eps;
    if eps > 1.0 {
        return Err(Error::InfeasibleCondition);
    }
    Ok(eps)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pd() -> MatrixGame {
        MatrixGame::prisoners_dilemma()
    }

    fn sh() -> MatrixGame {
        MatrixGame::stag_hunt()
    }

    fn half() -> CooperativeBelief {
        CooperativeBelief::new(0.5, 0.0, 1.0, 0.0).unwrap()
    }

    fn long() -> Horizon {
        Horizon::infinite(0.9).unwrap()
    }

    #[test]
    fn forecast_examples() {
        let p = StagePolicy::tied(0.7).unwrap();
        let f = forecast(&pd(), &Belief::Cooperative(half()), &p, Player::I);
        assert_eq!((f.beta_now, f.beta_future), (0.0, 1.0));
        let f = forecast(&pd(), &Belief::mixture(0.2, half()).unwrap(), &p, Player::I);
        assert!((f.beta_now - 0.0).abs() < 1e-15 && (f.beta_future - 0.2).abs() < 1e-15);
        for game in [pd(), sh()] {
            for a in [0.0, 0.3, 0.9] {
                let p = StagePolicy::tied(a).unwrap();
                assert_eq!(
                    forecast(&game, &Belief::mixture(0.0, half()).unwrap(), &p, Player::I),
                    forecast(&game, &Belief::Adversarial, &p, Player::I)
                );
            }
        }
    }

    #[test]
    fn discounted_return_examples() {
        let h2 = Horizon::finite(2, 0.9).unwrap();
        let coop = StagePolicy::tied(1.0).unwrap();
        let f = OpponentForecast::new(1.0, 1.0).unwrap();
        assert!((discounted_return(&pd(), &coop, &f, &h2, Player::I) - 1.425).abs() < 1e-12);

        let h1 = Horizon::finite(1, 0.5).unwrap();
        let p = StagePolicy::new(0.3, 0.9).unwrap();
        let f = OpponentForecast::new(0.6, 0.2).unwrap();
        let stage = expected_utility(
            &pd(),
            MixedStrategy::new(0.3).unwrap(),
            MixedStrategy::new(0.6).unwrap(),
            Player::I,
        );
        assert_eq!(discounted_return(&pd(), &p, &f, &h1, Player::I), stage);

        let h3 = Horizon::finite(3, 1.0).unwrap();
        let f = OpponentForecast::new(0.0, 0.0).unwrap();
        assert!(
            (discounted_return(&pd(), &StagePolicy::defect(), &f, &h3, Player::I) - 0.75).abs()
                < 1e-12
        );
    }

    #[test]
    fn future_weight_closed_form_matches_sum() {
        for (n, g) in [(1, 0.9), (2, 0.9), (10, 0.5), (100, 0.9), (7, 1.0)] {
            let h = Horizon::finite(n, g).unwrap();
            let direct: f64 = (1..n).map(|t| g.powi(t as i32)).sum();
            assert!((h.future_weight() - direct).abs() < 1e-12, "n={n} g={g}");
        }
        assert!((long().future_weight() - 9.0).abs() < 1e-12);
        assert!(Horizon::infinite(1.0).is_err());
        assert!(Horizon::finite(0, 0.9).is_err());
    }

    #[test]
    fn best_response_examples() {
        for h in [long(), Horizon::finite(5, 0.9).unwrap()] {
            for tie in [true, false] {
                assert_eq!(
                    best_response_to_belief(&pd(), &Belief::Adversarial, &h, tie, Player::I),
                    StagePolicy::defect()
                );
            }
        }
        let h100 = Horizon::finite(100, 0.9).unwrap();
        let br =
            best_response_to_belief(&pd(), &Belief::Cooperative(half()), &h100, true, Player::I);
        assert_eq!(br, StagePolicy::tied(0.5).unwrap());
        let br = best_response_to_belief(
            &pd(),
            &Belief::mixture(0.001, half()).unwrap(),
            &h100,
            true,
            Player::I,
        );
        assert_eq!(br, StagePolicy::defect());
    }

    #[test]
    fn untied_best_response_defects_in_future_for_pd() {
        // Future payoff in PD falls with own future cooperation, so the joint
        // optimum cooperates now only to trigger beta_plus.
        let br = best_response_to_belief(
            &pd(),
            &Belief::Cooperative(half()),
            &long(),
            false,
            Player::I,
        );
        assert_eq!(br, StagePolicy::new(0.5, 0.0).unwrap());
    }

    #[test]
    fn worst_case_examples() {
        let wc = |p| worst_case_value(&pd(), MixedStrategy::new(p).unwrap(), Player::I);
        assert_eq!(wc(0.0), 0.25);
        assert!(is_epsilon_safe(
            &pd(),
            MixedStrategy::DEFECT,
            0.0,
            Player::I
        ));
        assert!((wc(0.5) - 0.125).abs() < 1e-15);
        let half = MixedStrategy::new(0.5).unwrap();
        assert!(is_epsilon_safe(&pd(), half, 0.125, Player::I));
        assert!(!is_epsilon_safe(&pd(), half, 0.12, Player::I));
        assert_eq!(
            worst_case_value(&sh(), MixedStrategy::COOPERATE, Player::I),
            0.0
        );
        assert!(!is_epsilon_safe(
            &sh(),
            MixedStrategy::COOPERATE,
            0.24,
            Player::I
        ));
    }

    #[test]
    fn prop4_examples() {
        let infinite = long();
        let full = StagePolicy::tied(1.0).unwrap();
        let m = cooperation_margin(&pd(), &full, &half(), &infinite, Player::I);
        assert!((m - 6.5).abs() < 1e-12);

        let flat = CooperativeBelief::new(0.5, 0.3, 0.3, 0.3).unwrap();
        let m = cooperation_margin(
            &pd(),
            &StagePolicy::tied(0.4).unwrap(),
            &flat,
            &infinite,
            Player::I,
        );
        assert!(m < 0.0);

        let sh_belief = CooperativeBelief::new(0.5, 1.0, 1.0, 0.0).unwrap();
        let h100 = Horizon::finite(100, 0.9).unwrap();
        let m = cooperation_margin(&sh(), &full, &sh_belief, &h100, Player::I);
        assert!(m > 0.25);
        let check = cooperation_condition(
            &sh(),
            1.0,
            &sh_belief,
            &h100,
            FutureMode::Existential,
            Player::I,
        );
        assert!(check.holds);
        assert_eq!(check.alpha_bar, 1.0);
    }

    #[test]
    fn min_epsilon_examples() {
        let p = StagePolicy::tied(0.5).unwrap();
        let eps = min_epsilon_for_cooperation(&pd(), &p, &half(), &long(), Player::I).unwrap();
        assert!((eps - 0.125 / 6.75).abs() < 1e-12);

        let h1 = Horizon::finite(1, 0.9).unwrap();
        assert!(matches!(
            min_epsilon_for_cooperation(&pd(), &p, &half(), &h1, Player::I),
            Err(Error::InfeasibleCondition)
        ));
        assert_eq!(
            min_epsilon_for_cooperation(&pd(), &StagePolicy::defect(), &half(), &h1, Player::I)
                .unwrap(),
            0.0
        );
        let not_ssd = MatrixGame::symmetric(0.5, 0.5, 0.5, 0.5).unwrap();
        assert!(min_epsilon_for_cooperation(&not_ssd, &p, &half(), &long(), Player::I).is_err());
    }

    #[test]
    fn invalid_beliefs_rejected() {
        assert!(CooperativeBelief::new(0.0, 0.0, 1.0, 0.0).is_err());
        assert!(CooperativeBelief::new(0.5, 0.7, 0.5, 0.0).is_err());
        assert!(CooperativeBelief::new(0.5, 0.1, 1.0, 0.2).is_err());
        assert!(Belief::mixture(1.2, half()).is_err());
        assert!(StagePolicy::new(0.5, -0.1).is_err());
    }

    #[test]
    fn mixture_distance_to_adversarial_is_epsilon_in_pd() {
        for eps in [0.0, 0.1, 0.37, 1.0] {
            let d = belief_distance(
                &pd(),
                &Belief::mixture(eps, half()).unwrap(),
                &Belief::Adversarial,
                Player::I,
            );
            assert!((d - eps).abs() < 1e-12);
        }
    }
}
