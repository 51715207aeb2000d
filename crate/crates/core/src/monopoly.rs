//! Non-cooperative benchmark: the broker posts a take-it-or-leave-it rate
//! and the client answers with its growth-optimal bet.
//!
//! The client's reaction makes aggregate loan demand linear in the posted
//! rate, so the broker's problem is textbook linear-demand monopoly with
//! constant marginal cost equal to the call rate.

use nalgebra::DVector;

use crate::bargaining::ThreatPoint;
use crate::error::{Error, Result};
use crate::market::{self, AgentParams, Contract, MarketParams};

/// `q(rL) = intercept_q + slope_q * rL`, loans per dollar of equity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemandCurve {
    pub intercept_q: f64,
    pub slope_q: f64,
    pub choke_rate: f64,
}

impl DemandCurve {
    pub fn quantity(&self, rate: f64) -> f64 {
        self.intercept_q + self.slope_q * rate
    }

    /// Inverse demand (marginal value of the `q`-th unit of loans).
    pub fn marginal_value(&self, q: f64) -> f64 {
        (q - self.intercept_q) / self.slope_q
    }

    pub fn marginal_revenue(&self, q: f64) -> f64 {
        (2.0 * q - self.intercept_q) / self.slope_q
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonopolyReport {
    pub demand: DemandCurve,
    pub q_m: f64,
    pub r_m: f64,
    pub b_m: DVector<f64>,
    pub profit_m: f64,
    pub growth_m: f64,
    pub consumer_surplus: f64,
    pub deadweight_loss: f64,
    /// Price elasticity of demand at the monopoly quantity.
    pub elasticity_m: f64,
}

impl MonopolyReport {
    pub fn contract(&self) -> Contract {
        Contract::new(self.b_m.clone(), self.r_m)
    }
}

/// Aggregate loan demand implied by the client's reaction `b(rL)`.
pub fn demand_curve(market: &MarketParams, agent: &AgentParams) -> DemandCurve {
    let intercept_q = market.ones_inv_mu() / agent.gamma - 1.0;
    let slope_q = -market.ones_inv_ones() / agent.gamma;
    DemandCurve {
        intercept_q,
        slope_q,
        choke_rate: intercept_q / -slope_q,
    }
}

/// Price elasticity of loan demand at quantity `q > 0`.
pub fn elasticity(market: &MarketParams, agent: &AgentParams, q: f64) -> Result<f64> {
    if !(q > 0.0) {
        return Err(Error::Domain(format!("elasticity needs q > 0, got {q}")));
    }
    Ok(demand_curve(market, agent).intercept_q / q - 1.0)
}

/// Marginal revenue equals marginal cost (the call rate).
pub fn monopoly_solution(market: &MarketParams, agent: &AgentParams) -> Result<MonopolyReport> {
    market::validate(market, agent)?;
    let demand = demand_curve(market, agent);
    if !(demand.choke_rate > agent.r) {
        return Err(Error::NoViableLoanMarket {
            choke_rate: demand.choke_rate,
            call_rate: agent.r,
        });
    }
    let r = agent.r;
    let q_m = 0.5 * (demand.intercept_q + demand.slope_q * r);
    let r_m = demand.marginal_value(q_m);
    let b_m = market::optimal_bet(market, agent, r_m);
    let contract = Contract::new(b_m.clone(), r_m);
    let profit_m = market::profit_rate(&contract, agent);
    let growth_m = market::growth_rate(market, agent, &contract);

    // area between inverse demand and the posted rate over [0, q_m]
    let consumer_surplus = 0.5 * q_m * (demand.marginal_value(0.0) - r_m);
    // efficient quantity prices loans at marginal cost
    let q_competitive = demand.quantity(r);
    let deadweight_loss = 0.5 * (q_competitive - q_m) * (r_m - r);

    Ok(MonopolyReport {
        demand,
        q_m,
        r_m,
        b_m,
        profit_m,
        growth_m,
        consumer_surplus,
        deadweight_loss,
        elasticity_m: elasticity(market, agent, q_m)?,
    })
}

/// Payoffs when the broker posts the monopoly rate.
pub fn monopoly_threat(market: &MarketParams, agent: &AgentParams) -> Result<ThreatPoint> {
    let report = monopoly_solution(market, agent)?;
    ThreatPoint::new(report.profit_m, report.growth_m)
}
