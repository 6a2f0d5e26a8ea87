//! Data collection, tracking experiments and metrics.

pub mod collect;
pub mod commands;
pub mod config;
pub mod episode;
pub mod evaluate;
pub mod excitation;
pub mod metrics;
pub mod trajectory;

pub use collect::*;
pub use config::*;
pub use episode::*;
pub use evaluate::*;
pub use excitation::*;
pub use metrics::*;
pub use trajectory::*;
