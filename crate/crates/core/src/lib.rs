//! Comparison-complexity choice models.
//!
//! Options live in one of three domains (attribute vectors, lotteries, payoff
//! flows). Each domain has a value-dissimilarity ratio that feeds a G curve
//! for binary choice, and a precision map that drives the Bayesian
//! ordinal-signal model of multinomial choice and price-list valuation.

pub mod bayes;
pub mod choice;
pub mod complexity;
pub mod domain;
pub mod error;
pub mod estimation;
pub mod market;
pub mod normal;
pub mod par;

pub use error::{Error, Result};
