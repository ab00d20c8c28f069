//! Algorithm selection, learners and the shared training loop.

mod algorithm;
pub mod learner;
pub mod runner;

pub use algorithm::Algorithm;
pub use learner::{agent_seed, build_learner, DdqnLearner, DdqnScheme, Learner, LearnerConfig, SacLearner, SacScheme, TrainStats};
pub use runner::{run, RunLog, RunOptions};
