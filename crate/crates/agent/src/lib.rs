//! Actor-critic agent: network with exact gradients, factorized categorical
//! policy, binary checkpoints, and a PPO trainer with a tolerance curriculum.

pub mod checkpoint;
pub mod dist;
pub mod network;
pub mod params;
pub mod policy;
pub mod ppo;
pub mod rollout;
pub mod trainer;

pub use params::{NetworkSpec, PolicyParams};
pub use policy::Policy;
