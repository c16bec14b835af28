//! Maximum-likelihood fitting of choice models to aggregated binary choice
//! data, plus completeness and restrictiveness measures.

mod data;
mod fit;
mod har;
mod loss;
mod restrict;

pub use data::{ChoiceDataset, ChoiceObservation, PredictionRule, PROB_CLAMP};
pub use fit::{
    fit, fit_targets, warm_start, FitConfig, FitReport, FitResult, FitSpec, FittedParam, ParamDef,
    Transform,
};
pub use har::{har_sample, ConstraintSet, HarConfig, ORDER_MARGIN};
pub use loss::{
    completeness_index, cross_entropy, expected_kl, loss_value, nll, weighted_r2, Loss,
};
pub use restrict::{ratio_of_means, restrictiveness_index, BaseModel, Restrictiveness};
