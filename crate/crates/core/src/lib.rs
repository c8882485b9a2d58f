//! Near-field inverse scattering in the plane: forward models, factorization-type
//! imaging indicators and a Bayesian index estimator.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bayes;
pub mod born;
pub mod disk;
pub mod error;
pub mod exec;
pub mod experiment;
pub mod field;
pub mod geometry;
pub mod linalg;
pub mod music;
pub mod sampling;
pub mod specfun;

pub use error::{Error, Result};
pub use exec::Exec;
pub use geometry::{Point, SamplingGrid, ScattererSpec, SensorArray};
pub use linalg::{ComplexMatrix, EigenSystem, Regime};
