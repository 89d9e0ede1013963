//! Reference compression schemes.

pub mod gem;
pub mod hull;
mod kernel;
mod point;
pub mod svm;
pub mod toy;

pub use gem::{gem_train, GemModel, GemScheme};
pub use hull::{HullModel, HullScheme};
pub use kernel::Kernel;
pub use point::{LabeledExample, Point, Scalar};
pub use svm::{svm_train, svr_train, SolverOptions, SvmModel, SvmScheme, SvrScheme};
pub use toy::{ClosestPairOnCircle, RandomSubset, SecondLargest, Trimming};
