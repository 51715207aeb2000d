//! Brute-force maximization of the Nash product, used to check the closed
//! form. It knows nothing about the solution structure: it only evaluates
//! the two payoff functionals on a grid.

use nalgebra::DVector;

use super::ThreatPoint;
use crate::error::{Error, Result};
use crate::market::{self, AgentParams, Contract, MarketParams};

/// Grid refinement settings.
///
/// The search runs over the portfolio weights and the broker's profit rate;
/// the loan rate of a candidate is `r + profit / q`, so every grid point is
/// an ordinary `(b, rL)` contract with `rL >= r`. Each round scans every
/// coordinate over `points_per_axis` values spanning the current window,
/// centered on the incumbent, and repeats sweeps until no move improves.
/// The windows then shrink by `shrink` for the next round.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleConfig {
    pub points_per_axis: usize,
    pub rounds: usize,
    pub shrink: f64,
    /// Initial weight box, in units of `1/gamma`.
    pub bet_low: f64,
    pub bet_high: f64,
    /// Initial profit window `[0, profit_high]`.
    pub profit_high: f64,
    pub max_sweeps: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            points_per_axis: 101,
            rounds: 7,
            shrink: 10.0,
            bet_low: -5.0,
            bet_high: 10.0,
            profit_high: 1.0,
            max_sweeps: 10_000,
        }
    }
}

fn candidate(n: usize, r: f64, x: &[f64]) -> Option<Contract> {
    let b = DVector::from_column_slice(&x[..n]);
    let q = b.sum() - 1.0;
    if q > 0.0 {
        Some(Contract::new(b, r + x[n] / q))
    } else {
        None
    }
}

/// Search objective: the Nash product inside the gain region, a penalty in
/// (-1, 0] outside it, and at most -1 when the candidate takes no loan.
fn merit(market: &MarketParams, agent: &AgentParams, threat: &ThreatPoint, x: &[f64]) -> f64 {
    let n = market.n();
    let Some(contract) = candidate(n, agent.r, x) else {
        return -2.0 + x[..n].iter().sum::<f64>();
    };
    let sp = market::profit_rate(&contract, agent) - threat.profit;
    let sg = market::growth_rate(market, agent, &contract) - threat.growth;
    if sp > 0.0 && sg > 0.0 {
        sp * sg
    } else {
        // strictly increasing in both surpluses, so no axis sees a plateau
        let z = sp.min(0.0) + sg.min(0.0) - 0.01 * (-(sp + sg)).exp();
        -(1.0 - z.exp())
    }
}

/// Maximizes the Nash product over contracts with `1'b > 1` and `rL >= r`.
pub fn oracle_solve(
    market: &MarketParams,
    agent: &AgentParams,
    threat: &ThreatPoint,
    config: &OracleConfig,
) -> Result<Contract> {
    if config.points_per_axis < 3
        || config.rounds == 0
        || !(config.shrink > 1.0)
        || !(config.bet_high > config.bet_low)
        || !(config.profit_high > 0.0)
    {
        return Err(Error::InvalidParameter("oracle grid settings".into()));
    }
    let validation = market::validate(market, agent)?;
    if !validation.leverage_ok {
        return Err(Error::NoMutuallyBeneficialLoan {
            leverage_index: validation.leverage_index,
            gamma: agent.gamma,
        });
    }

    let n = market.n();
    let inv_gamma = 1.0 / agent.gamma;
    let mut width = vec![(config.bet_high - config.bet_low) * inv_gamma; n];
    width.push(config.profit_high);
    let mut x = vec![0.5 * (config.bet_low + config.bet_high) * inv_gamma; n];
    x.push(0.5 * config.profit_high);

    let mut best = merit(market, agent, threat, &x);
    let steps = config.points_per_axis - 1;

    for _ in 0..config.rounds {
        for _ in 0..config.max_sweeps {
            let mut improved = false;
            for axis in 0..=n {
                let start = x[axis] - 0.5 * width[axis];
                let mut best_value = x[axis];
                for k in 0..=steps {
                    let v = start + width[axis] * k as f64 / steps as f64;
                    // profit below zero means a rate below the call rate
                    if axis == n && v < 0.0 {
                        continue;
                    }
                    x[axis] = v;
                    let m = merit(market, agent, threat, &x);
                    // strict improvement only, so the first incumbent wins ties
                    if m > best {
                        best = m;
                        best_value = v;
                        improved = true;
                    }
                }
                x[axis] = best_value;
            }
            if !improved {
                break;
            }
        }
        for w in width.iter_mut() {
            *w /= config.shrink;
        }
    }

    match candidate(n, agent.r, &x) {
        Some(contract) if best > 0.0 => Ok(contract),
        other => {
            let (surplus_growth, surplus_profit) = match other {
                Some(c) => (
                    market::growth_rate(market, agent, &c) - threat.growth,
                    market::profit_rate(&c, agent) - threat.profit,
                ),
                None => (f64::NAN, f64::NAN),
            };
            Err(Error::ThreatDominates {
                surplus_growth,
                surplus_profit,
            })
        }
    }
}
