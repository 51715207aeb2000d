//! Market and agent parameters, contracts, and the growth/profit functionals.
//!
//! All rates are continuously compounded and quoted per year. Quantities
//! such as margin loans and broker profit are normalized per dollar of
//! client equity.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{self, Cholesky};

/// Drift vector and covariance matrix of the risky assets.
///
/// Construction enforces the structural invariants (matching dimensions,
/// finite entries, symmetry, positive definiteness), so every value of this
/// type is usable by the rest of the crate.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketParams {
    mu: DVector<f64>,
    sigma: DMatrix<f64>,
    chol: Cholesky,
    symmetry_defect: f64,
}

impl MarketParams {
    pub fn new(mu: Vec<f64>, sigma: Vec<Vec<f64>>) -> Result<Self> {
        let n = mu.len();
        let rows = sigma.len();
        let cols = sigma.first().map_or(0, Vec::len);
        if n == 0 || rows != n || sigma.iter().any(|row| row.len() != n) {
            return Err(Error::DimensionMismatch {
                drift: n,
                rows,
                cols,
            });
        }
        let flat: Vec<f64> = sigma.into_iter().flatten().collect();
        Self::from_nalgebra(DVector::from_vec(mu), DMatrix::from_row_slice(n, n, &flat))
    }

    pub fn from_nalgebra(mu: DVector<f64>, sigma: DMatrix<f64>) -> Result<Self> {
        if mu.is_empty() || !sigma.is_square() || sigma.nrows() != mu.len() {
            return Err(Error::DimensionMismatch {
                drift: mu.len(),
                rows: sigma.nrows(),
                cols: sigma.ncols(),
            });
        }
        if mu.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("drift has non-finite entries".into()));
        }
        if sigma.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidCovariance("non-finite entries".into()));
        }
        let symmetry_defect = linalg::symmetry_defect(&sigma);
        if symmetry_defect > linalg::SYMMETRY_TOLERANCE {
            return Err(Error::InvalidCovariance(format!(
                "not symmetric (relative defect {symmetry_defect:.3e})"
            )));
        }
        let chol = Cholesky::factor(&sigma).map_err(|e| {
            Error::InvalidCovariance(format!(
                "not positive definite (pivot {} relative size {:.3e})",
                e.index, e.relative_pivot
            ))
        })?;
        Ok(MarketParams {
            mu,
            sigma,
            chol,
            symmetry_defect,
        })
    }

    /// Single asset with drift `mu` and variance `variance`.
    pub fn univariate(mu: f64, variance: f64) -> Result<Self> {
        Self::new(vec![mu], vec![vec![variance]])
    }

    /// Single asset given its geometric growth rate and volatility; the drift
    /// is `nu + vol^2 / 2`.
    pub fn from_growth(nu: f64, vol: f64) -> Result<Self> {
        Self::univariate(nu + 0.5 * vol * vol, vol * vol)
    }

    pub fn n(&self) -> usize {
        self.mu.len()
    }

    pub fn mu(&self) -> &DVector<f64> {
        &self.mu
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    pub fn cholesky(&self) -> &Cholesky {
        &self.chol
    }

    /// Expected geometric growth rate of asset `i`: `mu_i - sigma_ii / 2`.
    pub fn geometric_growth(&self, i: usize) -> f64 {
        self.mu[i] - 0.5 * self.sigma[(i, i)]
    }

    /// `Sigma^-1 v`.
    pub fn solve(&self, v: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(v)
    }

    pub fn ones(&self) -> DVector<f64> {
        DVector::from_element(self.n(), 1.0)
    }

    /// `mu - rate * 1`.
    pub fn excess_drift(&self, rate: f64) -> DVector<f64> {
        self.mu.add_scalar(-rate)
    }

    /// `1' Sigma^-1 1`.
    pub fn ones_inv_ones(&self) -> f64 {
        self.solve(&self.ones()).sum()
    }

    /// `1' Sigma^-1 mu`.
    pub fn ones_inv_mu(&self) -> f64 {
        self.solve(&self.mu).sum()
    }

    /// `mu' Sigma^-1 mu`.
    pub fn mu_inv_mu(&self) -> f64 {
        self.mu.dot(&self.solve(&self.mu))
    }

    /// `1' Sigma^-1 (mu - r 1)`: total exposure of the growth-optimal
    /// portfolio when borrowing at `rate` (log utility).
    pub fn leverage_index(&self, rate: f64) -> f64 {
        self.solve(&self.excess_drift(rate)).sum()
    }

    /// `(mu - r 1)' Sigma^-1 (mu - r 1)`: squared Sharpe ratio of the
    /// tangency portfolio at `rate`.
    pub fn squared_sharpe(&self, rate: f64) -> f64 {
        let x = self.excess_drift(rate);
        x.dot(&self.solve(&x))
    }

    /// `b' Sigma b`.
    pub fn portfolio_variance(&self, b: &DVector<f64>) -> f64 {
        b.dot(&(&self.sigma * b))
    }
}

/// Broker call rate and the client's relative risk aversion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentParams {
    pub r: f64,
    pub gamma: f64,
}

impl AgentParams {
    pub fn new(r: f64, gamma: f64) -> Result<Self> {
        if !r.is_finite() || r < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "call rate must be finite and non-negative, got {r}"
            )));
        }
        if !gamma.is_finite() || gamma <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "risk aversion must be positive, got {gamma}"
            )));
        }
        Ok(AgentParams { r, gamma })
    }

    /// Log-utility (Kelly) client.
    pub fn kelly(r: f64) -> Result<Self> {
        Self::new(r, 1.0)
    }
}

/// A margin loan arrangement: portfolio weights and the loan rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Contract {
    pub b: DVector<f64>,
    pub rate: f64,
}

impl Contract {
    pub fn new(b: DVector<f64>, rate: f64) -> Self {
        Contract { b, rate }
    }

    pub fn univariate(b: f64, rate: f64) -> Self {
        Contract::new(DVector::from_element(1, b), rate)
    }

    /// Margin loans per dollar of equity, `1'b - 1`.
    pub fn loan_quantity(&self) -> f64 {
        self.b.sum() - 1.0
    }

    pub fn is_finite(&self) -> bool {
        self.rate.is_finite() && self.b.iter().all(|x| x.is_finite())
    }
}

/// Analytic consequences of a contract.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcome {
    pub growth: f64,
    pub profit: f64,
    pub q: f64,
    pub nim: f64,
}

impl Outcome {
    pub fn evaluate(market: &MarketParams, agent: &AgentParams, contract: &Contract) -> Self {
        let q = contract.loan_quantity();
        let nim = contract.rate - agent.r;
        Outcome {
            growth: growth_rate(market, agent, contract),
            profit: q * nim,
            q,
            nim,
        }
    }
}

/// Diagnostics from [`validate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Validation {
    pub symmetry_defect: f64,
    pub min_relative_pivot: f64,
    /// `1' Sigma^-1 (mu - r 1)`.
    pub leverage_index: f64,
    /// Whether the client would borrow at the broker's own cost of funds.
    pub leverage_ok: bool,
}

impl Validation {
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.leverage_ok {
            out.push(format!(
                "client will not lever up at the call rate: 1'Sigma^-1(mu - r1) = {:.6} does not exceed gamma",
                self.leverage_index
            ));
        }
        out
    }
}

/// Checks a market/agent pair.
///
/// Structural problems with the covariance are hard errors (they are caught
/// at construction of [`MarketParams`], and re-checked here). Failure of the
/// leverage inequality `1' Sigma^-1 (mu - r 1) > gamma` is reported in the
/// verdict but is not an error.
pub fn validate(market: &MarketParams, agent: &AgentParams) -> Result<Validation> {
    if market.symmetry_defect > linalg::SYMMETRY_TOLERANCE {
        return Err(Error::InvalidCovariance("not symmetric".into()));
    }
    if !(market.chol.min_relative_pivot() > linalg::PIVOT_TOLERANCE) {
        return Err(Error::InvalidCovariance("not positive definite".into()));
    }
    AgentParams::new(agent.r, agent.gamma)?;
    let leverage_index = market.leverage_index(agent.r);
    Ok(Validation {
        symmetry_defect: market.symmetry_defect,
        min_relative_pivot: market.chol.min_relative_pivot(),
        leverage_index,
        leverage_ok: leverage_index > agent.gamma,
    })
}

/// Certainty-equivalent growth rate `rL + (mu - rL 1)'b - (gamma/2) b' Sigma b`.
///
/// With `gamma = 1` this is the almost-sure asymptotic log-growth rate of
/// wealth.
pub fn growth_rate(market: &MarketParams, agent: &AgentParams, contract: &Contract) -> f64 {
    assert_eq!(contract.b.len(), market.n(), "contract and market dimensions differ");
    let rate = contract.rate;
    rate + market.excess_drift(rate).dot(&contract.b)
        - 0.5 * agent.gamma * market.portfolio_variance(&contract.b)
}

/// Broker's profit per dollar of client equity per year, `(1'b - 1)(rL - r)`.
pub fn profit_rate(contract: &Contract, agent: &AgentParams) -> f64 {
    contract.loan_quantity() * (contract.rate - agent.r)
}

/// Growth-optimal weights at loan rate `rate`: `(1/gamma) Sigma^-1 (mu - rate 1)`.
///
/// No clamping is applied; the exposure may be below one.
pub fn optimal_bet(market: &MarketParams, agent: &AgentParams, rate: f64) -> DVector<f64> {
    market.solve(&market.excess_drift(rate)) / agent.gamma
}

/// Annually compounded rate to its continuously compounded equivalent.
pub fn apr_to_continuous(apr: f64) -> Result<f64> {
    if !apr.is_finite() || apr <= -1.0 {
        return Err(Error::Domain(format!("annual rate must exceed -100%, got {apr}")));
    }
    Ok(apr.ln_1p())
}

pub fn continuous_to_apr(rate: f64) -> f64 {
    rate.exp_m1()
}
