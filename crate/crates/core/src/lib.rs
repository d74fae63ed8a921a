//! Budgeted action advising for reinforcement-learning students.
//!
//! A teacher holds an acting value function and decides, step by step, when
//! to spend a finite advice budget on a learning student. This crate provides
//! the environments (a configurable gridworld and a small Pac-Man), linear
//! action-specific value functions, Q-Learning / Sarsa(λ) / R-Learning
//! learners, heuristic and learned (Q-Teaching) advising policies, the
//! model-selection statistics used to pick teachers, and a multi-trial
//! experiment harness.
//!
//! All numeric code is generic over [`Scalar`] (`f32` or `f64`). The harness
//! runs in `f64`; the aliases below name the common instantiations.

pub mod advising;
pub mod env;
pub mod error;
pub mod harness;
pub mod learners;
pub mod linear_fa;
pub mod metrics;
pub mod rng;
pub mod scalar;

pub use error::{Error, Result};
pub use rng::RandomStream;
pub use scalar::Scalar;

pub type LinearQ64 = linear_fa::LinearQ<f64>;
pub type LinearQ32 = linear_fa::LinearQ<f32>;
pub type FeatureVector64 = linear_fa::FeatureVector<f64>;
pub type Encoding64 = linear_fa::Encoding<f64>;
pub type LearningParams64 = linear_fa::LearningParams<f64>;
pub type Learner64 = learners::Learner<f64>;
pub type Learner32 = learners::Learner<f32>;
pub type QTeacher64 = advising::QTeacher<f64>;
pub type ScoreSeries64 = metrics::ScoreSeries<f64>;
