//! Object-goal navigation with an ask-for-feedback teacher.
//!
//! The crate bundles a deterministic grid-world navigation environment, a
//! teacher that answers `Ask` actions with object-in-view masks, the
//! semi-present-teacher training curriculum, a dependency-free PPO
//! actor-critic trainer, and an SR/SPL evaluation harness.

pub mod agent;
pub mod checkpoint;
pub mod config;
pub mod curriculum;
pub mod env;
pub mod error;
pub mod eval;
pub mod net;
pub mod ppo;
pub mod rng;
pub mod selftest;
pub mod teacher;
pub mod train;

pub use error::{Error, Result};
