//! The reinforcement-learning tutor: observation encoding, recurrent
//! policy, reward, advantage estimation and clipped-surrogate updates.

pub mod agent;
pub mod embed;
pub mod env;
pub mod gae;
pub mod net;
pub mod ppo;
pub mod reward;
pub mod rollout;

pub use agent::RlTutor;
pub use embed::{embed_dim, embed_item, embed_time, observation_dim, Observation, ProjectionMatrix};
pub use env::{bandit_sanity, BanditEnv, BanditReport, TutoringEnv};
pub use gae::compute_gae;
pub use net::{NetShape, PolicyParams};
pub use ppo::{ppo_loss_and_grad, ppo_update, PpoConfig, PpoLearner, UpdateStats};
pub use reward::reward;
pub use rollout::{collect_rollouts, Environment, TrajectoryBatch, Transition, Worker};
