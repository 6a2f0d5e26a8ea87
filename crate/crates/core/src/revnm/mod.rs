//! Reversible nonlinear model with exact forward and inverse evaluation.

pub mod io;
pub mod mlp;
pub mod model;
pub mod normalize;

pub use io::{load_model, load_model_expecting, save_model};
pub use mlp::{Mlp, MlpTape};
pub use model::{
    Derivatives, FeatureLayout, Inversion, NetOutputs, RevnmModel, TargetScales, NET_NAMES, S, T1,
    T2, T3,
};
pub use normalize::MinMax;
