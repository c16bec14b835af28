//! Ordinal-signal model of multinomial choice: pairwise Gaussian signals,
//! Bayesian ranking posteriors, and price-list valuation.

pub mod figures;
pub mod pricelist;
pub mod prior;
pub mod structure;

pub use pricelist::{
    build_adapted_list, insertion_posterior, simulate_switching, simulate_switching_tau,
    switching_analytic, valuation_summary, ListKind, ListParams, PriceList, SwitchingDistribution,
    ValuationSummary, TE_GRID_DAYS,
};
pub use prior::{order_stat_means, PriorSpec};
pub use structure::{
    ranking_posterior, simulate_choice, ChoiceEstimate, ComparisonStructure, RankingPosterior,
    SignalDraw,
};

/// Relative tolerance under which two posterior expectations count as tied.
pub const TIE_TOL: f64 = 1e-12;

pub(crate) fn tied(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIE_TOL * 1f64.max(a.abs()).max(b.abs())
}
