//! Nash bargaining between the broker and the client.
//!
//! The negotiated contract maximizes the product of the two surpluses over a
//! threat point. With log (or CRRA) preferences the client ends up betting as
//! if it could borrow at the call rate, the loan rate splits the surplus
//! equally, and the attainable (profit, growth) pairs form a line of slope -1.

mod oracle;

pub use oracle::{oracle_solve, OracleConfig};

use crate::error::{Error, Result};
use crate::market::{self, AgentParams, Contract, MarketParams, Outcome};

/// Relative tolerance for the equal-split check on a solved contract.
const EGALITARIAN_TOLERANCE: f64 = 1e-10;

/// Disagreement payoffs: broker profit rate and client growth rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThreatPoint {
    pub profit: f64,
    pub growth: f64,
}

impl ThreatPoint {
    pub fn new(profit: f64, growth: f64) -> Result<Self> {
        if !profit.is_finite() || !growth.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "threat point must be finite, got ({profit}, {growth})"
            )));
        }
        Ok(ThreatPoint { profit, growth })
    }

    /// Payoffs of an arbitrary disagreement contract.
    pub fn from_contract(market: &MarketParams, agent: &AgentParams, contract: &Contract) -> Self {
        let o = Outcome::evaluate(market, agent, contract);
        ThreatPoint {
            profit: o.profit,
            growth: o.growth,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BargainSolution {
    pub contract: Contract,
    pub outcome: Outcome,
    pub threat: ThreatPoint,
    pub surplus_growth: f64,
    pub surplus_profit: f64,
}

/// `growth = intercept + slope * profit`, with `slope = -1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrontierLine {
    pub intercept: f64,
    pub slope: f64,
}

impl FrontierLine {
    pub fn growth_at(&self, profit: f64) -> f64 {
        self.intercept + self.slope * profit
    }

    /// Profit at which the client's growth falls to `growth`.
    pub fn profit_at(&self, growth: f64) -> f64 {
        (growth - self.intercept) / self.slope
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FinalUtilities {
    pub profit: f64,
    pub growth: f64,
}

/// `(pi - pi_bar) * (Gamma - Gamma_bar)`. Negative outside the gain region.
pub fn nash_product(
    market: &MarketParams,
    agent: &AgentParams,
    contract: &Contract,
    threat: &ThreatPoint,
) -> f64 {
    let profit = market::profit_rate(contract, agent);
    let growth = market::growth_rate(market, agent, contract);
    (profit - threat.profit) * (growth - threat.growth)
}

fn require_leverage(market: &MarketParams, agent: &AgentParams) -> Result<f64> {
    let validation = market::validate(market, agent)?;
    if !validation.leverage_ok {
        return Err(Error::NoMutuallyBeneficialLoan {
            leverage_index: validation.leverage_index,
            gamma: agent.gamma,
        });
    }
    Ok(validation.leverage_index)
}

/// Negotiated loan rate for a given threat point.
pub fn negotiated_rate(market: &MarketParams, agent: &AgentParams, threat: &ThreatPoint) -> Result<f64> {
    let leverage = require_leverage(market, agent)?;
    let r = agent.r;
    let numerator = market.mu_inv_mu() - r * r * market.ones_inv_ones()
        - 2.0 * agent.gamma * (threat.growth - threat.profit);
    Ok(0.5 * r + numerator / (4.0 * (leverage - agent.gamma)))
}

/// Closed-form Nash bargaining solution.
///
/// The bet is `(1/gamma) Sigma^-1 (mu - r 1)` whatever the threat; the rate
/// is chosen so both surpluses are equal. The outcome is evaluated through
/// the market functionals and then checked against the equal-split property.
pub fn solve_nash(market: &MarketParams, agent: &AgentParams, threat: &ThreatPoint) -> Result<BargainSolution> {
    let rate = negotiated_rate(market, agent, threat)?;
    let b = market::optimal_bet(market, agent, agent.r);
    let contract = Contract::new(b, rate);
    let outcome = Outcome::evaluate(market, agent, &contract);
    let surplus_growth = outcome.growth - threat.growth;
    let surplus_profit = outcome.profit - threat.profit;

    if !(surplus_growth.is_finite() && surplus_profit.is_finite()) {
        return Err(Error::Numeric("non-finite surplus".into()));
    }
    let scale = 1.0 + surplus_growth.abs().max(surplus_profit.abs());
    if (surplus_growth - surplus_profit).abs() > EGALITARIAN_TOLERANCE * scale {
        return Err(Error::Numeric(format!(
            "surpluses not equal: growth {surplus_growth:e}, profit {surplus_profit:e}"
        )));
    }
    if surplus_growth <= 0.0 || surplus_profit <= 0.0 {
        return Err(Error::ThreatDominates {
            surplus_growth,
            surplus_profit,
        });
    }

    Ok(BargainSolution {
        contract,
        outcome,
        threat: *threat,
        surplus_growth,
        surplus_profit,
    })
}

/// Negotiated rate against a complete breakdown, single asset, log utility:
/// `(mu + 3r - sigma^2) / 4`.
pub fn rule_of_thumb_rate(market: &MarketParams, agent: &AgentParams) -> Result<f64> {
    if market.n() != 1 || agent.gamma != 1.0 {
        return Err(Error::Unsupported(
            "rule of thumb needs a single asset and log utility".into(),
        ));
    }
    let mu = market.mu()[0];
    let variance = market.sigma()[(0, 0)];
    Ok((mu + 3.0 * agent.r - variance) / 4.0)
}

/// Unlevered portfolio that maximizes growth subject to `1'b = 1`.
pub fn unlevered_optimum(market: &MarketParams, agent: &AgentParams) -> Contract {
    // b = (1/gamma) Sigma^-1 (mu - lambda 1), lambda chosen so 1'b = 1
    let lambda = (market.ones_inv_mu() - agent.gamma) / market.ones_inv_ones();
    let b = market::optimal_bet(market, agent, lambda);
    // loan rate is irrelevant when q = 0; report lambda, the shadow rate
    Contract::new(b, lambda)
}

/// Threat point after a total breakdown: no loan, best unlevered portfolio.
pub fn breakdown_threat(market: &MarketParams, agent: &AgentParams) -> ThreatPoint {
    let b = unlevered_optimum(market, agent).b;
    let growth = market.mu().dot(&b) - 0.5 * agent.gamma * market.portfolio_variance(&b);
    ThreatPoint { profit: 0.0, growth }
}

/// Efficient profit-growth frontier.
pub fn efficient_frontier(market: &MarketParams, agent: &AgentParams) -> FrontierLine {
    FrontierLine {
        intercept: agent.r + market.squared_sharpe(agent.r) / (2.0 * agent.gamma),
        slope: -1.0,
    }
}

/// Closed-form final payoffs: the intersection of the frontier with the
/// 45-degree line through the threat point.
pub fn final_utilities(market: &MarketParams, agent: &AgentParams, threat: &ThreatPoint) -> Result<FinalUtilities> {
    require_leverage(market, agent)?;
    let quarter = market.squared_sharpe(agent.r) / (4.0 * agent.gamma);
    let gap = threat.growth - threat.profit;
    let out = FinalUtilities {
        profit: 0.5 * (agent.r - gap) + quarter,
        growth: 0.5 * (agent.r + gap) + quarter,
    };
    let surplus_growth = out.growth - threat.growth;
    let surplus_profit = out.profit - threat.profit;
    if surplus_growth <= 0.0 || surplus_profit <= 0.0 {
        return Err(Error::ThreatDominates {
            surplus_growth,
            surplus_profit,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::monopoly;
    use nalgebra::DVector;

    fn example() -> (MarketParams, AgentParams) {
        (
            MarketParams::from_growth(0.09, 0.15).unwrap(),
            AgentParams::kelly(0.03).unwrap(),
        )
    }

    #[test]
    fn nash_product_examples() {
        let (m, a) = example();
        let threat_contract = Contract::univariate(2.0833333333333335, 0.054375);
        let threat = ThreatPoint::from_contract(&m, &a, &threat_contract);
        assert_eq!(nash_product(&m, &a, &threat_contract, &threat), 0.0);

        let breakdown = ThreatPoint::new(0.0, 0.09).unwrap();
        let c = Contract::univariate(0.07125 / 0.0225, 0.0421875);
        let n = nash_product(&m, &a, &c, &breakdown);
        // both surpluses equal (2.16667 * 0.0121875)
        let s = (0.07125 / 0.0225 - 1.0) * 0.0121875;
        assert!((n - s * s).abs() < 1e-15);
        assert!((n - 6.973e-4).abs() < 1e-6);

        // more profit than the threat, less growth
        let greedy = Contract::univariate(2.0, 0.09);
        assert!(nash_product(&m, &a, &greedy, &breakdown) < 0.0);
    }

    #[test]
    fn breakdown_example() {
        let (m, a) = example();
        let threat = breakdown_threat(&m, &a);
        assert_eq!(threat.profit, 0.0);
        assert!((threat.growth - 0.09).abs() < 1e-15);
        let s = solve_nash(&m, &a, &threat).unwrap();
        assert!((s.contract.b[0] - 3.1666666666666665).abs() < 1e-12);
        assert!((s.contract.rate - 0.0421875).abs() < 1e-15);
        assert!((s.outcome.nim - 0.0121875).abs() < 1e-15);
        assert!((s.outcome.growth - 0.116406).abs() < 1e-6);
        assert!((s.outcome.profit - 0.026406).abs() < 1e-6);
    }

    #[test]
    fn monopoly_threat_example() {
        let (m, a) = example();
        let threat = ThreatPoint::new(0.0264, 0.1032).unwrap();
        let s = solve_nash(&m, &a, &threat).unwrap();
        assert!((s.contract.b[0] - 3.17).abs() < 5e-3);
        assert!((s.contract.rate - 0.0452).abs() < 1e-4);
        assert!((s.outcome.growth - 0.1098).abs() < 1e-4);
        assert!((s.outcome.profit - 0.0330).abs() < 1e-4);
        assert!((s.surplus_growth - 0.0066).abs() < 1e-4);
    }

    #[test]
    fn bet_ignores_threat() {
        let (m, a) = example();
        let s1 = solve_nash(&m, &a, &breakdown_threat(&m, &a)).unwrap();
        let s2 = solve_nash(&m, &a, &monopoly::monopoly_threat(&m, &a).unwrap()).unwrap();
        assert_eq!(s1.contract.b, s2.contract.b);
    }

    #[test]
    fn rule_of_thumb_examples() {
        let (m, a) = example();
        let rate = rule_of_thumb_rate(&m, &a).unwrap();
        assert!((rate - 0.0421875).abs() < 1e-15);
        let nash = solve_nash(&m, &a, &breakdown_threat(&m, &a)).unwrap();
        assert!((rate - nash.contract.rate).abs() < 1e-12);

        // r equal to nu - sigma^2/2
        let m2 = MarketParams::from_growth(0.09, 0.15).unwrap();
        let a2 = AgentParams::kelly(0.09 - 0.01125).unwrap();
        assert!((rule_of_thumb_rate(&m2, &a2).unwrap() - a2.r).abs() < 1e-15);

        let m3 = MarketParams::from_growth(0.07, 0.20).unwrap();
        let a3 = AgentParams::kelly(0.02).unwrap();
        let hand: f64 = 0.75 * 0.02 + 0.25 * (0.07 - 0.02);
        assert!((hand - 0.0275).abs() < 1e-15);
        let rate3 = rule_of_thumb_rate(&m3, &a3).unwrap();
        assert!((rate3 - hand).abs() < 1e-15);
        let nash3 = solve_nash(&m3, &a3, &breakdown_threat(&m3, &a3)).unwrap();
        assert!((nash3.contract.rate - rate3).abs() < 1e-12);
    }

    #[test]
    fn rule_of_thumb_rejects_general_cases() {
        let (m, _) = example();
        let crra = AgentParams::new(0.03, 2.0).unwrap();
        assert!(matches!(rule_of_thumb_rate(&m, &crra), Err(Error::Unsupported(_))));
        let two = MarketParams::new(vec![0.1, 0.08], vec![vec![0.04, 0.01], vec![0.01, 0.09]]).unwrap();
        assert!(matches!(
            rule_of_thumb_rate(&two, &AgentParams::kelly(0.03).unwrap()),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn breakdown_growth_with_risk_aversion() {
        let (m, _) = example();
        for gamma in [0.5, 1.0, 2.0, 7.0] {
            let a = AgentParams::new(0.03, gamma).unwrap();
            let t = breakdown_threat(&m, &a);
            assert!((t.growth - (0.10125 - gamma * 0.0225 / 2.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn two_asset_breakdown_matches_grid() {
        let m = MarketParams::new(vec![0.10, 0.08], vec![vec![0.04, 0.01], vec![0.01, 0.09]]).unwrap();
        let a = AgentParams::kelly(0.03).unwrap();
        let t = breakdown_threat(&m, &a);
        let unlevered = unlevered_optimum(&m, &a);
        assert!((unlevered.b.sum() - 1.0).abs() < 1e-12);

        let mut best = f64::NEG_INFINITY;
        let steps = 500_000;
        for k in 0..=steps {
            let b1 = -2.0 + 5.0 * k as f64 / steps as f64;
            let b = DVector::from_vec(vec![b1, 1.0 - b1]);
            let g = m.mu().dot(&b) - 0.5 * m.portfolio_variance(&b);
            best = best.max(g);
        }
        assert!((t.growth - best).abs() < 1e-9);
    }

    #[test]
    fn frontier_examples() {
        let (m, a) = example();
        let f = efficient_frontier(&m, &a);
        assert_eq!(f.slope, -1.0);
        assert!((f.intercept - (0.03 + 0.5 * (0.07125_f64 / 0.15).powi(2))).abs() < 1e-15);
        assert!((f.intercept - 0.142813).abs() < 1e-6);

        let huge = AgentParams::new(0.03, 1e9).unwrap();
        assert!((efficient_frontier(&m, &huge).intercept - 0.03).abs() < 1e-9);

        let s = solve_nash(&m, &a, &breakdown_threat(&m, &a)).unwrap();
        assert!((f.growth_at(s.outcome.profit) - s.outcome.growth).abs() < 1e-10);
        assert!((f.profit_at(0.03) - (f.intercept - 0.03)).abs() < 1e-15);
    }

    #[test]
    fn final_utilities_examples() {
        let (m, a) = example();
        let mono = monopoly::monopoly_threat(&m, &a).unwrap();
        let u = final_utilities(&m, &a, &mono).unwrap();
        assert!((u.profit - 0.0330).abs() < 1e-4);
        assert!((u.growth - 0.1098).abs() < 1e-4);

        let brk = breakdown_threat(&m, &a);
        let u = final_utilities(&m, &a, &brk).unwrap();
        assert!((u.profit - 0.026406).abs() < 1e-6);
        assert!((u.growth - 0.116406).abs() < 1e-6);

        let f = efficient_frontier(&m, &a);
        assert!((u.growth + u.profit - f.intercept).abs() < 1e-15);
        assert!((u.growth - u.profit - (brk.growth - brk.profit)).abs() < 1e-15);

        let s = solve_nash(&m, &a, &brk).unwrap();
        assert!((s.outcome.growth - u.growth).abs() < 1e-10);
        assert!((s.outcome.profit - u.profit).abs() < 1e-10);
    }

    #[test]
    fn typed_failures() {
        let m = MarketParams::univariate(0.03, 0.04).unwrap();
        let a = AgentParams::kelly(0.03).unwrap();
        let t = ThreatPoint::new(0.0, 0.0).unwrap();
        assert!(matches!(solve_nash(&m, &a, &t), Err(Error::NoMutuallyBeneficialLoan { .. })));
        assert!(matches!(final_utilities(&m, &a, &t), Err(Error::NoMutuallyBeneficialLoan { .. })));

        let (m, a) = example();
        let greedy = ThreatPoint::new(0.1, 0.1).unwrap();
        assert!(matches!(solve_nash(&m, &a, &greedy), Err(Error::ThreatDominates { .. })));
        assert!(matches!(final_utilities(&m, &a, &greedy), Err(Error::ThreatDominates { .. })));
        assert!(ThreatPoint::new(f64::NAN, 0.0).is_err());
    }
}
