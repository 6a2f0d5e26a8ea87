//! Two-link hydraulic manipulator simulator.

pub mod hydraulics;
pub mod linkage;
pub mod nonlinearity;
pub mod params;
pub mod rigid_body;
pub mod sim;
pub mod synthetic;

pub use hydraulics::{actuator_force, pressure_derivatives, valve_flow, ActuatorParams};
pub use linkage::{LinkageGeometry, LinkageKinematics};
pub use nonlinearity::{
    dead_zone, hysteresis_step, hysteresis_step_branch, HysteresisBranch, HysteresisState,
    NonlinearityParams, SignalPath,
};
pub use params::{JointSpec, PlantConfig, PlantSpec};
pub use rigid_body::{rigid_body_matrices, LinkParams, RigidBodyTerms, GRAVITY};
pub use sim::{Plant, PlantState, PowerBreakdown, StateDerivative};
pub use synthetic::SyntheticPlant;
