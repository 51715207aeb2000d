#![allow(dead_code)]

use kelly_margin::{AgentParams, MarketParams};
use rand::Rng;

pub fn example_market() -> MarketParams {
    MarketParams::from_growth(0.09, 0.15).unwrap()
}

pub fn kelly() -> AgentParams {
    AgentParams::kelly(0.03).unwrap()
}

/// Random covariance with vols in [0.1, 0.35] and moderate correlations.
pub fn random_covariance<R: Rng>(rng: &mut R, n: usize) -> Vec<Vec<f64>> {
    let factors: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    let mut corr = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let dot: f64 = (0..n).map(|k| factors[i][k] * factors[j][k]).sum();
            corr[i][j] = dot + if i == j { 1.0 } else { 0.0 };
        }
    }
    let vols: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..0.35)).collect();
    let mut cov = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let c = corr[i][j] / (corr[i][i] * corr[j][j]).sqrt();
            cov[i][j] = c * vols[i] * vols[j];
        }
    }
    // exact symmetry
    for i in 1..n {
        let (upper, lower) = cov.split_at_mut(i);
        for (j, row) in upper.iter().enumerate() {
            lower[0][j] = row[i];
        }
    }
    cov
}

/// A market in which the agent strictly wants to lever up at the call rate,
/// with the leverage index at least `margin * gamma`.
pub fn random_viable_market<R: Rng>(
    rng: &mut R,
    n: usize,
    gamma: f64,
    margin: f64,
) -> (MarketParams, AgentParams) {
    loop {
        let r = rng.gen_range(0.0..0.05);
        let cov = random_covariance(rng, n);
        let mu: Vec<f64> = (0..n).map(|_| r + rng.gen_range(0.02..0.12)).collect();
        let market = MarketParams::new(mu, cov).unwrap();
        let agent = AgentParams::new(r, gamma).unwrap();
        if market.leverage_index(r) <= margin * gamma {
            continue;
        }
        // keep the negotiated bet inside the oracle's default search box
        let b = kelly_margin::market::optimal_bet(&market, &agent, r);
        if b.iter().all(|x| *x > -4.0 / gamma && *x < 9.0 / gamma) {
            return (market, agent);
        }
    }
}
