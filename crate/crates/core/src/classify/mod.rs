//! Linear SVM classification and the stratified k-fold harness that scores
//! embeddings.

mod cv;
mod svm;

pub use cv::{kfold_evaluate, stratified_folds, CvResult};
pub use svm::{svm_train, LinearSvmModel, SvmParams};
