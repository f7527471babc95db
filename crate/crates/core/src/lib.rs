//! Simulation core for a planar mobile manipulator: geometry, procedural
//! corridor worlds, robot kinematics, LIDAR, reference paths, reward and the
//! episode environment.

pub mod adr;
pub mod env;
pub mod geometry;
pub mod pathref;
pub mod reward;
pub mod robot;
pub mod sensors;
pub mod trace;
pub mod world;
