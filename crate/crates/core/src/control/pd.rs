//! PD control and the dead-zone compensated PD baseline.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plant::NonlinearityParams;
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PdGains<T> {
    pub kp: T,
    pub kd: T,
}

impl<T: Scalar> PdGains<T> {
    pub fn new(kp: T, kd: T) -> Result<Self> {
        let g = Self { kp, kd };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kp >= T::zero() && self.kd >= T::zero() && self.kp.is_finite() && self.kd.is_finite()) {
            return Err(Error::Config(format!("PD gains must be finite and >= 0, got {self:?}")));
        }
        Ok(())
    }

    /// Default boom gains.
    pub fn boom() -> Self {
        Self {
            kp: T::lit(200.0),
            kd: T::lit(0.16),
        }
    }

    /// Default arm gains.
    pub fn arm() -> Self {
        Self {
            kp: T::lit(160.0),
            kd: T::lit(0.2),
        }
    }
}

/// `u = k_P·e + k_D·ė`.
pub fn pd_control<T: Scalar>(e: T, e_dot: T, g: &PdGains<T>) -> T {
    g.kp * e + g.kd * e_dot
}

/// PD plus a static dead-zone inverse: the band edge `D_r` or `D_l` is
/// added according to the sign of the PD command.
pub fn pd_comp_control<T: Scalar>(e: T, e_dot: T, g: &PdGains<T>, nl: &NonlinearityParams<T>) -> T {
    let u = pd_control(e, e_dot, g);
    if u > T::zero() {
        u + nl.dead_right
    } else if u < T::zero() {
        u + nl.dead_left
    } else {
        u
    }
}
