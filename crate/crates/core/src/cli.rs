//! Command implementations behind the `kelly-margin` binary.
//!
//! Each command returns a human-readable report and a CSV document; the
//! binary decides where they go.

use std::fmt::Write;

use crate::bargaining::{self, ThreatPoint};
use crate::config::{ScenarioConfig, ThreatSpec};
use crate::error::{Error, Result};
use crate::market::{self, AgentParams, MarketParams};
use crate::monopoly;
use crate::simulator;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandOutput {
    pub human: String,
    pub csv: String,
}

/// Drops floating-point noise below 1e-9 so that exact ties such as
/// 4.21875 round the same way whichever formula produced them.
fn settle(x: f64) -> f64 {
    (x * 1e9).round() / 1e9 + 0.0
}

fn pct(x: f64) -> String {
    format!("{:.4} %/yr", settle(100.0 * x))
}

fn ratio(x: f64) -> String {
    format!("{:.4} $/$", settle(x))
}

struct Records {
    csv: String,
}

impl Records {
    fn new(header: &str) -> Self {
        Records {
            csv: format!("{header}\n"),
        }
    }

    fn field(&mut self, name: &str, value: f64, unit: &str) {
        let _ = writeln!(self.csv, "{name},{value},{unit}");
    }
}

/// Threat point named by the scenario.
pub fn resolve_threat(config: &ScenarioConfig, market: &MarketParams) -> Result<ThreatPoint> {
    match config.threat {
        ThreatSpec::Breakdown => Ok(bargaining::breakdown_threat(market, &config.agent)),
        ThreatSpec::Monopoly => monopoly::monopoly_threat(market, &config.agent),
        ThreatSpec::Explicit { profit, growth } => ThreatPoint::new(profit, growth),
    }
}

fn threat_label(spec: &ThreatSpec) -> &'static str {
    match spec {
        ThreatSpec::Breakdown => "breakdown",
        ThreatSpec::Monopoly => "monopoly",
        ThreatSpec::Explicit { .. } => "explicit",
    }
}

fn load(config: &ScenarioConfig) -> Result<(MarketParams, AgentParams, Vec<String>)> {
    let market = config.market_params()?;
    let validation = market::validate(&market, &config.agent)?;
    Ok((market, config.agent, validation.warnings()))
}

fn weight_lines(human: &mut String, rec: &mut Records, prefix: &str, b: &nalgebra::DVector<f64>) {
    if b.len() == 1 {
        let _ = writeln!(human, "  {prefix:<22}{}", ratio(b[0]));
        rec.field(prefix, b[0], "$/$");
    } else {
        for (i, w) in b.iter().enumerate() {
            let name = format!("{prefix}[{}]", i + 1);
            let _ = writeln!(human, "  {name:<22}{}", ratio(*w));
            rec.field(&name, *w, "$/$");
        }
    }
}

pub fn cmd_solve(config: &ScenarioConfig) -> Result<CommandOutput> {
    let (market, agent, warnings) = load(config)?;
    let threat = resolve_threat(config, &market)?;
    let sol = bargaining::solve_nash(&market, &agent, &threat)?;

    let mut human = String::new();
    let mut rec = Records::new("field,value,unit");
    for w in &warnings {
        let _ = writeln!(human, "warning: {w}");
    }
    let _ = writeln!(human, "Nash bargaining solution ({} threat)", threat_label(&config.threat));
    weight_lines(&mut human, &mut rec, "bet b*", &sol.contract.b);
    let rows = [
        ("loan rate rL*", "rate", sol.contract.rate),
        ("net interest margin", "nim", sol.outcome.nim),
        ("client growth", "growth", sol.outcome.growth),
        ("broker profit", "profit", sol.outcome.profit),
        ("growth surplus", "surplus_growth", sol.surplus_growth),
        ("profit surplus", "surplus_profit", sol.surplus_profit),
        ("threat profit", "threat_profit", threat.profit),
        ("threat growth", "threat_growth", threat.growth),
    ];
    let _ = writeln!(human, "  {:<22}{}", "margin loans q*", ratio(sol.outcome.q));
    rec.field("q", sol.outcome.q, "$/$");
    for (label, name, value) in rows {
        let _ = writeln!(human, "  {label:<22}{}", pct(value));
        rec.field(name, value, "1/yr");
    }
    Ok(CommandOutput {
        human,
        csv: rec.csv,
    })
}

pub fn cmd_monopoly(config: &ScenarioConfig) -> Result<CommandOutput> {
    let (market, agent, warnings) = load(config)?;
    let rep = monopoly::monopoly_solution(&market, &agent)?;

    let mut human = String::new();
    let mut rec = Records::new("field,value,unit");
    for w in &warnings {
        let _ = writeln!(human, "warning: {w}");
    }
    let d = rep.demand;
    let _ = writeln!(
        human,
        "Demand for margin loans: q(rL) = {:.4} - {:.4} rL, choke rate {}",
        d.intercept_q,
        -d.slope_q,
        pct(d.choke_rate)
    );
    rec.field("demand_intercept", d.intercept_q, "$/$");
    rec.field("demand_slope", d.slope_q, "$/$ per 1/yr");
    rec.field("choke_rate", d.choke_rate, "1/yr");

    let _ = writeln!(human, "Monopoly benchmark");
    let _ = writeln!(human, "  {:<22}{}", "quantity q_M", ratio(rep.q_m));
    rec.field("q_m", rep.q_m, "$/$");
    let _ = writeln!(human, "  {:<22}{}", "rate r_M", pct(rep.r_m));
    rec.field("r_m", rep.r_m, "1/yr");
    weight_lines(&mut human, &mut rec, "bet b_M", &rep.b_m);
    for (label, name, value) in [
        ("broker profit", "profit_m", rep.profit_m),
        ("client growth", "growth_m", rep.growth_m),
        ("consumer surplus", "consumer_surplus", rep.consumer_surplus),
        ("deadweight loss", "deadweight_loss", rep.deadweight_loss),
    ] {
        let _ = writeln!(human, "  {label:<22}{}", pct(value));
        rec.field(name, value, "1/yr");
    }
    let _ = writeln!(human, "  {:<22}{:.4}", "elasticity at q_M", rep.elasticity_m);
    rec.field("elasticity_m", rep.elasticity_m, "1");
    Ok(CommandOutput {
        human,
        csv: rec.csv,
    })
}

/// Frontier points from zero profit to the profit that leaves the client
/// growing at the call rate, then the threat and negotiated points.
pub fn cmd_frontier(config: &ScenarioConfig, grid: usize) -> Result<CommandOutput> {
    if grid == 0 {
        return Err(Error::InvalidParameter("grid must be at least 1".into()));
    }
    let (market, agent, warnings) = load(config)?;
    let line = bargaining::efficient_frontier(&market, &agent);
    let threat = resolve_threat(config, &market)?;

    let mut human = String::new();
    for w in &warnings {
        let _ = writeln!(human, "warning: {w}");
    }
    let _ = writeln!(
        human,
        "Efficient frontier: growth = {} - profit",
        pct(line.intercept)
    );
    let mut csv = String::from("pi,gamma,label\n");
    let max_profit = line.profit_at(agent.r);
    let points: Vec<f64> = if grid == 1 {
        vec![0.5 * max_profit]
    } else {
        (0..grid)
            .map(|k| max_profit * k as f64 / (grid - 1) as f64)
            .collect()
    };
    for p in points {
        let _ = writeln!(csv, "{},{},frontier", p, line.growth_at(p));
    }
    let _ = writeln!(csv, "{},{},threat", threat.profit, threat.growth);
    let _ = writeln!(
        human,
        "  threat point      profit {}, growth {}",
        pct(threat.profit),
        pct(threat.growth)
    );
    match bargaining::solve_nash(&market, &agent, &threat) {
        Ok(sol) => {
            let _ = writeln!(csv, "{},{},nash", sol.outcome.profit, sol.outcome.growth);
            let _ = writeln!(
                human,
                "  negotiated point  profit {}, growth {}",
                pct(sol.outcome.profit),
                pct(sol.outcome.growth)
            );
        }
        Err(e) if e.is_infeasible() => {
            let _ = writeln!(human, "  no negotiated point: {e}");
        }
        Err(e) => return Err(e),
    }
    Ok(CommandOutput { human, csv })
}

/// Kelly bets at a list of annually compounded loan rates, given in percent.
pub fn cmd_table(config: &ScenarioConfig, apr_percents: &[f64]) -> Result<CommandOutput> {
    let (market, agent, _) = load(config)?;
    if market.n() != 1 {
        return Err(Error::Unsupported("rate table needs a single-asset market".into()));
    }
    let mut human = format!(
        "{:>12} | {:>16} | {:>10}\n",
        "APR", "log(1 + APR)", "Kelly bet"
    );
    let mut csv = String::from("apr,rate_cc,kelly_bet\n");
    for &percent in apr_percents {
        let apr = percent / 100.0;
        let rate = market::apr_to_continuous(apr)?;
        let bet = market::optimal_bet(&market, &agent, rate)[0];
        let _ = writeln!(
            human,
            "{:>10.2} % | {:>11.2} %/yr | {:>10.2}",
            percent,
            100.0 * rate,
            bet
        );
        let _ = writeln!(csv, "{apr},{rate},{bet}");
    }
    Ok(CommandOutput { human, csv })
}

pub fn cmd_simulate(config: &ScenarioConfig) -> Result<CommandOutput> {
    let sim = config.sim.ok_or_else(|| {
        Error::Config(crate::config::ConfigError {
            line: None,
            field: Some("horizon_years".into()),
            message: "simulate needs a simulation section".into(),
        })
    })?;
    let (market, agent, warnings) = load(config)?;
    let threat = resolve_threat(config, &market)?;
    let nash = bargaining::solve_nash(&market, &agent, &threat)?;

    let mut labels = vec!["nash"];
    let mut contracts = vec![nash.contract.clone()];
    if config.threat == ThreatSpec::Monopoly {
        labels.push("monopoly");
        contracts.push(monopoly::monopoly_solution(&market, &agent)?.contract());
    }
    let results = simulator::compare_contracts(&market, &agent, &contracts, &sim)?;

    let log_utility = AgentParams { r: agent.r, gamma: 1.0 };
    let mut human = String::new();
    for w in &warnings {
        let _ = writeln!(human, "warning: {w}");
    }
    let _ = writeln!(
        human,
        "Monte Carlo: {} paths, {} years, dt = {} yr, seed {}",
        sim.n_paths, sim.horizon_years, sim.dt_years, sim.seed
    );
    let mut csv = String::from(
        "label,rate,exposure,analytic_growth,mean_growth,stderr_growth,broker_income_rate,discounted_income\n",
    );
    let mut analytic = Vec::new();
    for ((label, contract), res) in labels.iter().zip(&contracts).zip(&results) {
        let g = market::growth_rate(&market, &log_utility, contract);
        analytic.push(g);
        let _ = writeln!(
            human,
            "  {label:<9} realized {} +/- {} (analytic {}), broker income {}",
            pct(res.mean_growth),
            pct(res.stderr_growth),
            pct(g),
            pct(res.mean_broker_income_rate)
        );
        let _ = writeln!(
            csv,
            "{label},{},{},{g},{},{},{},{}",
            contract.rate,
            contract.b.sum(),
            res.mean_growth,
            res.stderr_growth,
            res.mean_broker_income_rate,
            res.mean_discounted_income
        );
    }
    if results.len() == 2 {
        let paired = simulator::paired_difference(&results[0], &results[1]);
        let gap = analytic[0] - analytic[1];
        let _ = writeln!(
            human,
            "  paired growth gap {} +/- {} (analytic {})",
            pct(paired.mean),
            pct(paired.stderr),
            pct(gap)
        );
        let _ = writeln!(
            csv,
            "nash-monopoly,,,{gap},{},{},,",
            paired.mean, paired.stderr
        );
    }
    Ok(CommandOutput { human, csv })
}
