//! Multi-task image classification with collaborative, hierarchical
//! spike-and-slab priors (MICHS).
//!
//! Every test matrix `Y` (one column per view) is explained once per class
//! with a class-specific inclusion prior. A collapsed Gibbs chain picks the
//! contributing atoms, a reduced ridge solve fills in their values and the
//! class with the smallest MAP cost wins. An l1 sparse-representation
//! classifier with majority voting is provided as a baseline.
//!
//! The numerical core is generic over [`Scalar`]; `f64` aliases are exported
//! at the crate root for the common case.

pub mod classifier;
pub mod data;
pub mod error;
pub(crate) mod linalg;
pub mod model;
pub mod rng;
pub mod sampler;
pub mod solver;

use std::fmt::{Debug, Display};
use std::iter::Sum;

use ndarray::ScalarOperand;
use num_traits::{Float, FromPrimitive, ToPrimitive};

pub use error::{Error, Result};

/// Real scalar the numerical core is written against.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + ScalarOperand
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from `f64`; literals and sampled variates go through here.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 is representable")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Scalar for T where
    T: Float
        + FromPrimitive
        + ToPrimitive
        + ScalarOperand
        + Sum
        + Default
        + Debug
        + Display
        + Send
        + Sync
        + 'static
{
}

pub type Dictionary = model::Dictionary<f64>;
pub type PriorParams = model::PriorParams<f64>;
pub type InclusionMatrix = model::InclusionMatrix<f64>;
pub type ObservationMatrix = model::ObservationMatrix<f64>;
pub type CodeMatrix = model::CodeMatrix<f64>;
pub type TaskSolution = solver::TaskSolution<f64>;
pub type ClassSolution = solver::ClassSolution<f64>;
pub type ClassificationResult = classifier::ClassificationResult<f64>;

pub type Dictionary32 = model::Dictionary<f32>;
pub type PriorParams32 = model::PriorParams<f32>;
pub type ObservationMatrix32 = model::ObservationMatrix<f32>;

pub use classifier::{AssignBy, BaselineConfig, Method};
pub use model::{ClassId, SupportMatrix};
pub use sampler::{ChainConfig, ChainTrace};
