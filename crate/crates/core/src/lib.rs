//! Negotiated margin loans between a broker and a continuous-time Kelly
//! (or CRRA) investor.
//!
//! * [`market`]: parameters, contracts, growth and profit functionals.
//! * [`bargaining`]: closed-form Nash bargaining, the efficient frontier,
//!   and a brute-force oracle for the same problem.
//! * [`monopoly`]: the posted-price benchmark used as a threat point.
//! * [`simulator`]: Monte Carlo wealth paths under a fixed contract.
//! * [`config`] and [`cli`]: scenario files and the command-line reports.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bargaining;
pub mod cli;
pub mod config;
pub mod error;
pub mod linalg;
pub mod market;
pub mod monopoly;
pub mod simulator;

pub use bargaining::{BargainSolution, FrontierLine, OracleConfig, ThreatPoint};
pub use error::{Error, Result};
pub use market::{AgentParams, Contract, MarketParams, Outcome};
pub use monopoly::{DemandCurve, MonopolyReport};
pub use simulator::{SimConfig, SimResult};
