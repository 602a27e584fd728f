//! Kernel and linear learners.

mod logreg;
mod svm;

pub use logreg::{logreg_gradient, logreg_log_likelihood, logreg_train, LogRegConfig, LogRegModel};
pub use svm::{dual_objective, svm_decision, svm_train, BiasMode, SvmConfig, SvmModel};
