//! Cooperation/safety trade-off: the loss bound against a cooperation-promoting
//! opponent for an `epsilon`-safe policy, and the tight risk-budget schedule.
//!
//! The schedule indexes rounds `0..T`. Cooperation before the first round is
//! taken as zero, so the first reinvestment of returns shows up at round 2:
//! `a_0 = a_1 = epsilon`, `a_k = min(a_{k-1} + C a_{k-2}, 1)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{minimax_value, MatrixGame, Player};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TradeoffParams {
    /// Safety slack.
    pub epsilon: f64,
    /// Return per unit of last-round cooperation.
    pub d: f64,
    pub p_minus_s: f64,
    pub rounds: u32,
    /// Minimax value.
    pub v: f64,
    /// Mutual-cooperation payoff.
    pub r: f64,
}

impl TradeoffParams {
    pub fn new(epsilon: f64, d: f64, p_minus_s: f64, rounds: u32, v: f64, r: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::param(
                "epsilon",
                format!("{epsilon} is not in [0, 1]"),
            ));
        }
        if d.is_nan() || d <= 0.0 {
            return Err(Error::param("d", format!("{d} must be positive")));
        }
        if p_minus_s.is_nan() || p_minus_s <= 0.0 {
            return Err(Error::param(
                "p_minus_s",
                format!("{p_minus_s} must be positive"),
            ));
        }
        if rounds == 0 {
            return Err(Error::param("rounds", "need at least one round"));
        }
        Ok(TradeoffParams {
            epsilon,
            d,
            p_minus_s,
            rounds,
            v,
            r,
        })
    }

    /// Parameters read off a game for player `i`, with `d = T - P`.
    pub fn for_game(game: &MatrixGame, epsilon: f64, rounds: u32) -> Result<Self> {
        let pay = game.payoffs(Player::I);
        Self::new(
            epsilon,
            pay.t - pay.p,
            pay.p - pay.s,
            rounds,
            minimax_value(game, Player::I),
            pay.r,
        )
    }

    /// `C = d / (P - S)`.
    pub fn c(&self) -> f64 {
        self.d / self.p_minus_s
    }

    /// Best cooperative value over the horizon, `T R`.
    pub fn optimal_cooperative_value(&self) -> f64 {
        f64::from(self.rounds) * self.r
    }

    /// Best safe value over the horizon, `T v`.
    pub fn optimal_safe_value(&self) -> f64 {
        f64::from(self.rounds) * self.v
    }
}

/// `(1 + sqrt(1 + 4C)) / 2`, the positive root of `z^2 = z + C`.
pub fn phi(c: f64) -> f64 {
    (1.0 + (1.0 + 4.0 * c).sqrt()) / 2.0
}

/// `min(ceil(-log_phi(epsilon)), T)`.
pub fn switch_index(epsilon: f64, c: f64, rounds: u32) -> Result<u32> {
    if epsilon == 0.0 {
        return Err(Error::Domain(
            "switch index diverges at epsilon = 0; treat it as T".into(),
        ));
    }
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::param(
            "epsilon",
            format!("{epsilon} is not in (0, 1]"),
        ));
    }
    if c.is_nan() || c <= 0.0 {
        return Err(Error::param("c", format!("{c} must be positive")));
    }
    let raw = -epsilon.ln() / phi(c).ln();
    // exact powers of phi land a rounding error above the integer
    let nearest = raw.round();
    let steps = if (raw - nearest).abs() < 1e-9 {
        nearest
    } else {
        raw.ceil()
    };
    Ok((steps.max(0.0) as u64).min(u64::from(rounds)) as u32)
}

/// `(I/T) Vc - d eps (1 - phi^(I+1)) / (1 - phi)` with `Vc = T R`.
pub fn cooperation_loss_bound(params: &TradeoffParams) -> Result<f64> {
    let c = params.c();
    let i = switch_index(params.epsilon, c, params.rounds)?;
    let ph = phi(c);
    let geometric = (1.0 - ph.powi(i as i32 + 1)) / (1.0 - ph);
    let vc = params.optimal_cooperative_value();
    Ok(f64::from(i) / f64::from(params.rounds) * vc - params.d * params.epsilon * geometric)
}

pub fn risk_budget_sequence(epsilon: f64, c: f64, rounds: u32) -> Vec<f64> {
    let n = rounds as usize;
    let mut seq: Vec<f64> = Vec::with_capacity(n);
    for k in 0..n {
        let next = if k < 2 {
            epsilon.min(1.0)
        } else {
            (seq[k - 1] + c * seq[k - 2]).min(1.0)
        };
        seq.push(next);
    }
    seq
}

/// Cooperative value of the tight schedule under `E[r_t] = d a_{t-1} + v`,
/// summed directly over rounds `0..T` with `a_{-1} = 0`.
pub fn simulate_tight_policy(params: &TradeoffParams) -> f64 {
    let seq = risk_budget_sequence(params.epsilon, params.c(), params.rounds);
    (0..seq.len())
        .map(|t| {
            let prev = if t == 0 { 0.0 } else { seq[t - 1] };
            params.d * prev + params.v
        })
        .sum()
}

/// One row of an epsilon sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundRow {
    pub epsilon: f64,
    pub switch_index: u32,
    pub bound: f64,
    /// `Vc - simulate_tight_policy`.
    pub simulated_gap: f64,
}

pub fn bound_sweep(base: &TradeoffParams, epsilons: &[f64]) -> Result<Vec<BoundRow>> {
    epsilons
        .iter()
        .map(|&epsilon| {
            let params = TradeoffParams { epsilon, ..*base };
            Ok(BoundRow {
                epsilon,
                switch_index: switch_index(epsilon, params.c(), params.rounds)?,
                bound: cooperation_loss_bound(&params)?,
                simulated_gap: params.optimal_cooperative_value() - simulate_tight_policy(&params),
            })
        })
        .collect()
}
