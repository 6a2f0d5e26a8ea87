//! Data-driven modeling and hybrid control of a two-link hydraulic
//! manipulator.
//!
//! * [`plant`]: boom/arm simulator (rigid body, cylinders, valves, signal
//!   nonlinearities) and a synthetic plant of exact model form.
//! * [`revnm`]: the reversible model with exact forward and inverse maps.
//! * [`training`]: preprocessing, bidirectional loss, backprop and Adam.
//! * [`control`]: PD, backstepping model inversion and the hybrid law.
//! * [`harness`]: excitation, references, metrics and experiment commands.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`). The aliases
//! below fix it to `f64`, which is what the harness and file formats use.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod control;
pub mod error;
pub mod harness;
pub mod mat2;
pub mod plant;
pub mod revnm;
pub mod scalar;
pub mod training;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Plant = plant::Plant<f64>;
pub type PlantState = plant::PlantState<f64>;
pub type PlantConfig = plant::PlantConfig<f64>;
pub type SyntheticPlant = plant::SyntheticPlant<f64>;
pub type RevnmModel = revnm::RevnmModel<f64>;
pub type Mlp = revnm::Mlp<f64>;
