//! PD, backstepping model inversion and the hybrid controller.

pub mod backstepping;
pub mod hybrid;
pub mod lyapunov;
pub mod pd;

pub use backstepping::{
    collapsed_command, gain_polynomials, inversion_control, stepwise_command, virtual_laws,
    BacksteppingGains, ControllerMemory, ErrorRate, InversionLimits, InversionOutput,
    RateEstimates, Reference, VirtualLaws, COLD_TICKS,
};
pub use hybrid::{hybrid_control, HybridConfig, HybridController, HybridOutput};
pub use lyapunov::{decay_rate, lyapunov_envelope, lyapunov_value};
pub use pd::{pd_comp_control, pd_control, PdGains};
