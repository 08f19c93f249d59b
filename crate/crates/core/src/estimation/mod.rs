//! Inner-model estimation: the constrained fitting loss, its analytic
//! gradient, per-session updates and synthetic prior pretraining.

pub mod data;
pub mod fit;
pub mod loss;
pub mod pretrain;
pub mod priors;

pub use data::{FitData, Predictor};
pub use fit::{fit_session, FitReport, FitState};
pub use loss::{
    loss_dist, loss_fix, loss_gradient, loss_mse, total_loss, FamilyValues, LossBreakdown,
    LossConfig,
};
pub use pretrain::{fit_population, pretrain_priors, Generator, PretrainConfig, Pretrained};
pub use priors::{Prior, PriorDistributions};
