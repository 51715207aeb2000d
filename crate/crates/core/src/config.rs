//! Scenario files.
//!
//! Line-oriented `key = value` text. Blank lines and anything after `#` are
//! ignored. Numbers may carry a `%` suffix (divided by 100) or be written as
//! a fraction `a/b`.
//!
//! ```text
//! # single asset: geometric growth rate and volatility (mu = nu + sigma^2/2)
//! nu = 9%
//! sigma = 15%
//!
//! # or: explicit drift vector and covariance matrix, one row per line
//! mu = 0.10, 0.08
//! covariance = matrix
//!   0.04, 0.01
//!   0.01, 0.09
//! end
//!
//! r_cc = 3%            # call rate, continuously compounded (or r_apr)
//! gamma = 1            # relative risk aversion, default 1
//! threat = breakdown   # breakdown | monopoly | explicit
//! threat_profit = 0    # explicit threat only
//! threat_growth = 9%
//!
//! horizon_years = 200  # optional simulation section
//! dt_years = 1/252
//! n_paths = 400
//! seed = 7             # default 0
//! ```

use std::collections::HashMap;
use std::fmt::{self, Write};

use thiserror::Error;

use crate::error::Result;
use crate::market::{self, AgentParams, MarketParams};
use crate::simulator::SimConfig;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub field: Option<String>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error")?;
        if let Some(line) = self.line {
            write!(f, " at line {line}")?;
        }
        if let Some(field) = &self.field {
            write!(f, " in `{field}`")?;
        }
        write!(f, ": {}", self.message)
    }
}

fn err(line: Option<usize>, field: Option<&str>, message: impl Into<String>) -> ConfigError {
    ConfigError {
        line,
        field: field.map(str::to_owned),
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MarketSpec {
    /// One asset given by geometric growth rate and volatility.
    Univariate { nu: f64, vol: f64 },
    Explicit { mu: Vec<f64>, covariance: Vec<Vec<f64>> },
}

impl MarketSpec {
    pub fn build(&self) -> Result<MarketParams> {
        match self {
            MarketSpec::Univariate { nu, vol } => MarketParams::from_growth(*nu, *vol),
            MarketSpec::Explicit { mu, covariance } => {
                MarketParams::new(mu.clone(), covariance.clone())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThreatSpec {
    Breakdown,
    Monopoly,
    Explicit { profit: f64, growth: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub market: MarketSpec,
    pub agent: AgentParams,
    pub threat: ThreatSpec,
    pub sim: Option<SimConfig>,
}

struct Entry {
    line: usize,
    value: Value,
}

enum Value {
    Scalar(String),
    Matrix(Vec<(usize, String)>),
}

const KEYS: &[&str] = &[
    "nu",
    "sigma",
    "mu",
    "covariance",
    "r_cc",
    "r_apr",
    "gamma",
    "threat",
    "threat_profit",
    "threat_growth",
    "horizon_years",
    "dt_years",
    "n_paths",
    "seed",
];

fn parse_number(text: &str, line: usize, field: &str) -> std::result::Result<f64, ConfigError> {
    let text = text.trim();
    let bad = || err(Some(line), Some(field), format!("not a number: `{text}`"));
    let (body, scale) = match text.strip_suffix('%') {
        Some(body) => (body.trim(), 100.0),
        None => (text, 1.0),
    };
    let value = match body.split_once('/') {
        Some((num, den)) => {
            let num: f64 = num.trim().parse().map_err(|_| bad())?;
            let den: f64 = den.trim().parse().map_err(|_| bad())?;
            if den == 0.0 {
                return Err(bad());
            }
            num / den
        }
        None => body.parse().map_err(|_| bad())?,
    };
    if !value.is_finite() {
        return Err(bad());
    }
    Ok(value / scale)
}

fn parse_list(text: &str, line: usize, field: &str) -> std::result::Result<Vec<f64>, ConfigError> {
    let items: Vec<&str> = text
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .collect();
    if items.is_empty() {
        return Err(err(Some(line), Some(field), "empty list"));
    }
    items.iter().map(|s| parse_number(s, line, field)).collect()
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> std::result::Result<Self, ConfigError> {
        let mut entries: HashMap<&str, Entry> = HashMap::new();
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));

        while let Some((line, raw)) = lines.next() {
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| err(Some(line), None, format!("expected `key = value`, got `{content}`")))?;
            let key = key.trim();
            let value = value.trim();
            let key = *KEYS
                .iter()
                .find(|k| **k == key)
                .ok_or_else(|| err(Some(line), Some(key), "unknown key"))?;
            if let Some(prev) = entries.get(key) {
                return Err(err(
                    Some(line),
                    Some(key),
                    format!("duplicate key (first set at line {})", prev.line),
                ));
            }

            let value = if value == "matrix" {
                let mut rows = Vec::new();
                loop {
                    let (row_line, row) = lines
                        .next()
                        .ok_or_else(|| err(Some(line), Some(key), "matrix block without `end`"))?;
                    let row = row.split('#').next().unwrap_or("").trim();
                    if row == "end" {
                        break;
                    }
                    if !row.is_empty() {
                        rows.push((row_line, row.to_owned()));
                    }
                }
                Value::Matrix(rows)
            } else {
                Value::Scalar(value.to_owned())
            };
            entries.insert(key, Entry { line, value });
        }

        Self::from_entries(&entries)
    }

    fn from_entries(entries: &HashMap<&str, Entry>) -> std::result::Result<Self, ConfigError> {
        let scalar = |key: &str| -> std::result::Result<Option<(usize, &str)>, ConfigError> {
            match entries.get(key) {
                None => Ok(None),
                Some(Entry { line, value: Value::Scalar(s) }) => Ok(Some((*line, s.as_str()))),
                Some(Entry { line, .. }) => {
                    Err(err(Some(*line), Some(key), "expected a scalar, not a matrix"))
                }
            }
        };
        let number = |key: &str| -> std::result::Result<Option<f64>, ConfigError> {
            scalar(key)?
                .map(|(line, s)| parse_number(s, line, key))
                .transpose()
        };
        let require = |key: &str, why: &str| -> std::result::Result<f64, ConfigError> {
            number(key)?.ok_or_else(|| err(None, Some(key), format!("missing ({why})")))
        };

        // market
        let univariate = entries.contains_key("nu") || entries.contains_key("sigma");
        let explicit = entries.contains_key("mu") || entries.contains_key("covariance");
        let market = match (univariate, explicit) {
            (true, true) => {
                return Err(err(
                    None,
                    Some("market"),
                    "give either nu/sigma or mu/covariance, not both",
                ))
            }
            (false, false) => {
                return Err(err(None, Some("market"), "missing market (nu/sigma or mu/covariance)"))
            }
            (true, false) => MarketSpec::Univariate {
                nu: require("nu", "single-asset market needs nu and sigma")?,
                vol: require("sigma", "single-asset market needs nu and sigma")?,
            },
            (false, true) => {
                let (mu_line, mu_text) = scalar("mu")?
                    .ok_or_else(|| err(None, Some("mu"), "missing (explicit market needs mu)"))?;
                let mu = parse_list(mu_text, mu_line, "mu")?;
                let covariance = match entries.get("covariance") {
                    Some(Entry { value: Value::Matrix(rows), line }) => {
                        if rows.is_empty() {
                            return Err(err(Some(*line), Some("covariance"), "empty matrix"));
                        }
                        rows.iter()
                            .map(|(l, row)| parse_list(row, *l, "covariance"))
                            .collect::<std::result::Result<Vec<_>, _>>()?
                    }
                    Some(Entry { line, .. }) => {
                        return Err(err(
                            Some(*line),
                            Some("covariance"),
                            "expected `covariance = matrix` followed by rows and `end`",
                        ))
                    }
                    None => {
                        return Err(err(None, Some("covariance"), "missing (explicit market needs a covariance matrix)"))
                    }
                };
                if covariance.len() != mu.len() || covariance.iter().any(|r| r.len() != mu.len()) {
                    let line = entries.get("covariance").map(|e| e.line);
                    return Err(err(
                        line,
                        Some("covariance"),
                        format!("must be {n}x{n} to match mu", n = mu.len()),
                    ));
                }
                MarketSpec::Explicit { mu, covariance }
            }
        };

        // agent
        let r = match (number("r_cc")?, scalar("r_apr")?) {
            (Some(_), Some((line, _))) => {
                return Err(err(Some(line), Some("r_apr"), "give r_cc or r_apr, not both"))
            }
            (Some(r), None) => r,
            (None, Some((line, text))) => {
                let apr = parse_number(text, line, "r_apr")?;
                market::apr_to_continuous(apr)
                    .map_err(|e| err(Some(line), Some("r_apr"), e.to_string()))?
            }
            (None, None) => return Err(err(None, Some("r_cc"), "missing call rate (r_cc or r_apr)")),
        };
        let gamma = number("gamma")?.unwrap_or(1.0);
        let agent = AgentParams::new(r, gamma).map_err(|e| {
            let field = if gamma > 0.0 { "r_cc" } else { "gamma" };
            err(None, Some(field), e.to_string())
        })?;

        // threat
        let threat_line = scalar("threat")?.map(|(l, _)| l);
        let has_numbers = entries.contains_key("threat_profit") || entries.contains_key("threat_growth");
        let threat = match scalar("threat")?.map(|(_, s)| s) {
            None | Some("breakdown") | Some("monopoly") if has_numbers => {
                return Err(err(
                    threat_line,
                    Some("threat"),
                    "threat_profit/threat_growth need `threat = explicit`",
                ))
            }
            None | Some("breakdown") => ThreatSpec::Breakdown,
            Some("monopoly") => ThreatSpec::Monopoly,
            Some("explicit") => ThreatSpec::Explicit {
                profit: require("threat_profit", "explicit threat needs both numbers")?,
                growth: require("threat_growth", "explicit threat needs both numbers")?,
            },
            Some(other) => {
                return Err(err(
                    threat_line,
                    Some("threat"),
                    format!("expected breakdown, monopoly or explicit, got `{other}`"),
                ))
            }
        };

        // simulation
        let sim_keys = ["horizon_years", "dt_years", "n_paths", "seed"];
        let sim = if sim_keys.iter().any(|k| entries.contains_key(k)) {
            let horizon = require("horizon_years", "simulation section")?;
            let dt = require("dt_years", "simulation section")?;
            let (paths_line, paths_text) = scalar("n_paths")?
                .ok_or_else(|| err(None, Some("n_paths"), "missing (simulation section)"))?;
            let n_paths: usize = paths_text
                .parse()
                .map_err(|_| err(Some(paths_line), Some("n_paths"), "expected a positive integer"))?;
            let seed: u64 = match scalar("seed")? {
                None => 0,
                Some((line, s)) => s
                    .parse()
                    .map_err(|_| err(Some(line), Some("seed"), "expected an unsigned integer"))?,
            };
            Some(SimConfig::new(horizon, dt, n_paths, seed).map_err(|e| {
                err(None, Some("simulation"), e.to_string())
            })?)
        } else {
            None
        };

        Ok(ScenarioConfig {
            market,
            agent,
            threat,
            sim,
        })
    }

    /// Renders the scenario in the same grammar [`ScenarioConfig::parse`] reads.
    pub fn to_config_string(&self) -> String {
        let mut out = String::new();
        match &self.market {
            MarketSpec::Univariate { nu, vol } => {
                let _ = writeln!(out, "nu = {nu}");
                let _ = writeln!(out, "sigma = {vol}");
            }
            MarketSpec::Explicit { mu, covariance } => {
                let _ = writeln!(out, "mu = {}", join(mu));
                let _ = writeln!(out, "covariance = matrix");
                for row in covariance {
                    let _ = writeln!(out, "  {}", join(row));
                }
                let _ = writeln!(out, "end");
            }
        }
        let _ = writeln!(out, "r_cc = {}", self.agent.r);
        let _ = writeln!(out, "gamma = {}", self.agent.gamma);
        match self.threat {
            ThreatSpec::Breakdown => {
                let _ = writeln!(out, "threat = breakdown");
            }
            ThreatSpec::Monopoly => {
                let _ = writeln!(out, "threat = monopoly");
            }
            ThreatSpec::Explicit { profit, growth } => {
                let _ = writeln!(out, "threat = explicit");
                let _ = writeln!(out, "threat_profit = {profit}");
                let _ = writeln!(out, "threat_growth = {growth}");
            }
        }
        if let Some(sim) = &self.sim {
            let _ = writeln!(out, "horizon_years = {}", sim.horizon_years);
            let _ = writeln!(out, "dt_years = {}", sim.dt_years);
            let _ = writeln!(out, "n_paths = {}", sim.n_paths);
            let _ = writeln!(out, "seed = {}", sim.seed);
        }
        out
    }

    pub fn market_params(&self) -> Result<MarketParams> {
        self.market.build()
    }
}

fn join(xs: &[f64]) -> String {
    xs.iter().map(f64::to_string).collect::<Vec<_>>().join(", ")
}
