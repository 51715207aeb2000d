//! Monte Carlo wealth paths under a fixed contract.
//!
//! Wealth is a geometric Brownian motion, so each step applies the exact
//! log-normal transition: `d log V = g dt + b' L z sqrt(dt)`, with `g` the
//! log-utility growth rate of the contract and `L` the Cholesky factor of
//! the covariance. The step size only affects how finely broker income is
//! sampled, never the growth estimate.
//!
//! Path `i` draws from a ChaCha8 generator seeded with `seed` and switched
//! to stream `i`, so results do not depend on thread count or scheduling.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::market::{self, AgentParams, Contract, MarketParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub horizon_years: f64,
    pub dt_years: f64,
    pub n_paths: usize,
    pub seed: u64,
}

impl SimConfig {
    pub fn new(horizon_years: f64, dt_years: f64, n_paths: usize, seed: u64) -> Result<Self> {
        if !(horizon_years.is_finite() && horizon_years > 0.0) {
            return Err(Error::InvalidParameter("horizon must be positive".into()));
        }
        if !(dt_years.is_finite() && dt_years > 0.0 && dt_years <= horizon_years) {
            return Err(Error::InvalidParameter(
                "step must be positive and no longer than the horizon".into(),
            ));
        }
        if n_paths == 0 {
            return Err(Error::InvalidParameter("need at least one path".into()));
        }
        Ok(SimConfig {
            horizon_years,
            dt_years,
            n_paths,
            seed,
        })
    }

    /// Step lengths covering the horizon; the last step absorbs any remainder.
    fn step_count(&self) -> (usize, f64) {
        let ratio = self.horizon_years / self.dt_years;
        let full = (ratio + 1e-9).floor() as usize;
        let remainder = self.horizon_years - full as f64 * self.dt_years;
        if remainder > 1e-9 * self.dt_years {
            (full + 1, remainder)
        } else {
            (full, self.dt_years)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    /// `(1/T) log(V_T / V_0)` for each path, in path order.
    pub terminal_log_growth: Vec<f64>,
    pub mean_growth: f64,
    pub stderr_growth: f64,
    /// Broker income per unit time per dollar of running equity.
    pub mean_broker_income_rate: f64,
    /// Broker income in dollars (starting equity of $1), discounted at the
    /// call rate, averaged over paths.
    pub mean_discounted_income: f64,
}

/// Mean and standard error of paired per-path differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairedStats {
    pub mean: f64,
    pub stderr: f64,
}

/// The per-path random stream.
pub fn path_rng(seed: u64, path: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path as u64);
    rng
}

/// Generates the log-wealth increments of one path.
pub struct PathStepper {
    drift: f64,
    loading: DVector<f64>,
    rng: ChaCha8Rng,
}

impl PathStepper {
    pub fn new(market: &MarketParams, contract: &Contract, seed: u64, path: usize) -> Self {
        let kelly = AgentParams { r: 0.0, gamma: 1.0 };
        PathStepper {
            drift: market::growth_rate(market, &kelly, contract),
            // b' L z == (L' b) . z
            loading: market.cholesky().lower().transpose() * &contract.b,
            rng: path_rng(seed, path),
        }
    }

    /// Log-utility drift of log wealth.
    pub fn drift(&self) -> f64 {
        self.drift
    }

    /// Increment of log wealth over a step of length `dt`.
    pub fn step(&mut self, dt: f64) -> f64 {
        let mut shock = 0.0;
        for w in self.loading.iter() {
            let z: f64 = StandardNormal.sample(&mut self.rng);
            shock += w * z;
        }
        self.drift * dt + shock * dt.sqrt()
    }
}

struct PathSummary {
    log_growth: f64,
    income_rate: f64,
    discounted_income: f64,
}

fn run_path(
    market: &MarketParams,
    agent: &AgentParams,
    contract: &Contract,
    config: &SimConfig,
    path: usize,
) -> PathSummary {
    let (steps, last_dt) = config.step_count();
    let profit = market::profit_rate(contract, agent);
    let mut stepper = PathStepper::new(market, contract, config.seed, path);

    let mut log_wealth = 0.0_f64;
    let mut t = 0.0_f64;
    let mut income = 0.0_f64;
    let mut equity_time = 0.0_f64;
    let mut discounted = 0.0_f64;
    for k in 0..steps {
        let dt = if k + 1 == steps { last_dt } else { config.dt_years };
        // interest accrues on the loan held over the step at start-of-step equity
        let wealth = log_wealth.exp();
        income += profit * wealth * dt;
        equity_time += wealth * dt;
        discounted += profit * wealth * dt * (-agent.r * t).exp();
        log_wealth += stepper.step(dt);
        t += dt;
    }
    PathSummary {
        log_growth: log_wealth / config.horizon_years,
        income_rate: if equity_time > 0.0 { income / equity_time } else { 0.0 },
        discounted_income: discounted,
    }
}

fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Simulates `config.n_paths` wealth paths under `contract`.
pub fn simulate(
    market: &MarketParams,
    agent: &AgentParams,
    contract: &Contract,
    config: &SimConfig,
) -> Result<SimResult> {
    market::validate(market, agent)?;
    if contract.b.len() != market.n() || !contract.is_finite() {
        return Err(Error::InvalidParameter("contract must be finite and match the market".into()));
    }
    let paths: Vec<PathSummary> = (0..config.n_paths)
        .into_par_iter()
        .map(|i| run_path(market, agent, contract, config, i))
        .collect();

    let terminal_log_growth: Vec<f64> = paths.iter().map(|p| p.log_growth).collect();
    let (mean_growth, stderr_growth) = mean_and_stderr(&terminal_log_growth);
    let n = paths.len() as f64;
    Ok(SimResult {
        terminal_log_growth,
        mean_growth,
        stderr_growth,
        mean_broker_income_rate: paths.iter().map(|p| p.income_rate).sum::<f64>() / n,
        mean_discounted_income: paths.iter().map(|p| p.discounted_income).sum::<f64>() / n,
    })
}

/// Runs every contract on the same random streams.
pub fn compare_contracts(
    market: &MarketParams,
    agent: &AgentParams,
    contracts: &[Contract],
    config: &SimConfig,
) -> Result<Vec<SimResult>> {
    if contracts.is_empty() {
        return Err(Error::InvalidParameter("no contracts to compare".into()));
    }
    contracts
        .iter()
        .map(|c| simulate(market, agent, c, config))
        .collect()
}

/// Statistics of `a - b` path by path. Both runs must share seeds.
pub fn paired_difference(a: &SimResult, b: &SimResult) -> PairedStats {
    assert_eq!(
        a.terminal_log_growth.len(),
        b.terminal_log_growth.len(),
        "paired runs need equal path counts"
    );
    let diffs: Vec<f64> = a
        .terminal_log_growth
        .iter()
        .zip(&b.terminal_log_growth)
        .map(|(x, y)| x - y)
        .collect();
    let (mean, stderr) = mean_and_stderr(&diffs);
    PairedStats { mean, stderr }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example() -> (MarketParams, AgentParams) {
        (
            MarketParams::from_growth(0.09, 0.15).unwrap(),
            AgentParams::kelly(0.03).unwrap(),
        )
    }

    #[test]
    fn config_validation() {
        assert!(SimConfig::new(0.0, 0.1, 1, 0).is_err());
        assert!(SimConfig::new(1.0, 2.0, 1, 0).is_err());
        assert!(SimConfig::new(1.0, 0.1, 0, 0).is_err());
        assert!(SimConfig::new(1.0, -0.1, 1, 0).is_err());
        let c = SimConfig::new(200.0, 1.0 / 252.0, 1, 0).unwrap();
        assert_eq!(c.step_count().0, 50_400);
        let c = SimConfig::new(1.0, 0.3, 1, 0).unwrap();
        let (steps, last) = c.step_count();
        assert_eq!(steps, 4);
        assert!((last - 0.1).abs() < 1e-12);
    }

    #[test]
    fn vanishing_noise_is_deterministic_drift() {
        let m = MarketParams::new(
            vec![0.1, 0.07],
            vec![vec![1e-12, 0.0], vec![0.0, 1e-12]],
        )
        .unwrap();
        let a = AgentParams::kelly(0.02).unwrap();
        let c = Contract::new(DVector::from_vec(vec![1.5, 0.8]), 0.04);
        let cfg = SimConfig::new(10.0, 0.01, 8, 3).unwrap();
        let res = simulate(&m, &a, &c, &cfg).unwrap();
        let drift = market::growth_rate(&m, &a, &c);
        for g in &res.terminal_log_growth {
            assert!((g - drift).abs() < 1e-5);
        }
    }

    #[test]
    fn buy_and_hold_grows_at_nu() {
        let (m, a) = example();
        let cfg = SimConfig::new(50.0, 1.0 / 52.0, 400, 17).unwrap();
        let res = simulate(&m, &a, &Contract::univariate(1.0, 0.2), &cfg).unwrap();
        assert!((res.mean_growth - 0.09).abs() < 3.0 * res.stderr_growth);
        assert_eq!(res.mean_broker_income_rate, 0.0);
    }

    #[test]
    fn broker_income_rate_equals_profit() {
        let (m, a) = example();
        let c = Contract::univariate(2.5, 0.05);
        let cfg = SimConfig::new(5.0, 0.01, 16, 1).unwrap();
        let res = simulate(&m, &a, &c, &cfg).unwrap();
        assert!((res.mean_broker_income_rate - market::profit_rate(&c, &a)).abs() < 1e-12);
        assert!(res.mean_discounted_income > 0.0);
    }

    #[test]
    fn identical_contracts_identical_results() {
        let (m, a) = example();
        let c = Contract::univariate(3.0, 0.045);
        let cfg = SimConfig::new(5.0, 0.05, 32, 99).unwrap();
        let out = compare_contracts(&m, &a, &[c.clone(), c.clone()], &cfg).unwrap();
        assert_eq!(out[0], out[1]);
        let single = compare_contracts(&m, &a, &[c], &cfg).unwrap();
        assert_eq!(single.len(), 1);
        assert!(compare_contracts(&m, &a, &[], &cfg).is_err());
    }

    #[test]
    fn thread_count_does_not_matter() {
        let (m, a) = example();
        let c = Contract::univariate(3.0, 0.045);
        let cfg = SimConfig::new(5.0, 0.05, 64, 7).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let serial = pool.install(|| simulate(&m, &a, &c, &cfg).unwrap());
        let parallel = simulate(&m, &a, &c, &cfg).unwrap();
        assert_eq!(serial, parallel);
    }

    #[test]
    fn single_path_is_reproducible() {
        let (m, a) = example();
        let c = Contract::univariate(3.0, 0.045);
        let cfg = SimConfig::new(10.0, 0.1, 1, 2024).unwrap();
        let x = simulate(&m, &a, &c, &cfg).unwrap();
        let y = simulate(&m, &a, &c, &cfg).unwrap();
        assert_eq!(x.terminal_log_growth, y.terminal_log_growth);
        assert_eq!(x.stderr_growth, 0.0);
    }

    #[test]
    fn rejects_bad_contract() {
        let (m, a) = example();
        let cfg = SimConfig::new(1.0, 0.1, 1, 0).unwrap();
        let c = Contract::new(DVector::from_vec(vec![1.0, 1.0]), 0.03);
        assert!(simulate(&m, &a, &c, &cfg).is_err());
        assert!(simulate(&m, &a, &Contract::univariate(f64::NAN, 0.03), &cfg).is_err());
    }
}
