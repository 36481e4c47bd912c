//! PPO for the soccer sub-policies: a Gaussian tanh-MLP actor-critic with
//! hand-written backpropagation, GAE, vectorized rollouts and a portable
//! weights format.

pub mod gae;
pub mod net;
pub mod ppo;
pub mod train;
pub mod weights;

pub use net::ActorCritic;
pub use ppo::TrainConfig;
pub use train::{evaluate, train, Actor, CurveRow, EpisodeRecord, TrainOutcome};
pub use weights::PolicyWeights;
