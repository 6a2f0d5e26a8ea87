//! Dead-zone and hysteresis in the valve signal path.
//!
//! The command reaching the spool is `σ(u) = σ2(σ1(u))`: first a dead-zone,
//! then a hysteresis (backlash-style hold after direction reversals).

use serde::{Deserialize, Serialize};

use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonlinearityParams<T> {
    /// Left dead-zone bound `D_l` (≤ 0).
    pub dead_left: T,
    /// Right dead-zone bound `D_r` (≥ 0).
    pub dead_right: T,
    /// Hysteresis width `D_w` (≥ 0).
    pub hysteresis_width: T,
}

impl<T: Scalar> NonlinearityParams<T> {
    pub fn new(dead_left: T, dead_right: T, hysteresis_width: T) -> Result<Self> {
        let p = Self {
            dead_left,
            dead_right,
            hysteresis_width,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dead_left <= T::zero() && T::zero() <= self.dead_right) {
            return Err(Error::Config(format!(
                "dead-zone bounds must satisfy D_l <= 0 <= D_r, got [{}, {}]",
                self.dead_left, self.dead_right
            )));
        }
        if !(self.hysteresis_width >= T::zero()) {
            return Err(Error::Config(format!(
                "hysteresis width must be >= 0, got {}",
                self.hysteresis_width
            )));
        }
        Ok(())
    }

    /// No dead-zone, no hysteresis.
    pub fn linear() -> Self {
        Self {
            dead_left: T::zero(),
            dead_right: T::zero(),
            hysteresis_width: T::zero(),
        }
    }
}

/// Dead-zone `σ1`: zero inside `[D_l, D_r]`, shifted identity outside.
pub fn dead_zone<T: Scalar>(u: T, p: &NonlinearityParams<T>) -> T {
    if u > p.dead_right {
        u - p.dead_right
    } else if u < p.dead_left {
        u - p.dead_left
    } else {
        T::zero()
    }
}

/// Memory of the hysteresis element.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HysteresisState<T> {
    /// Last output; frozen while `holding`.
    pub held: T,
    /// Input at the most recent direction reversal, `u(t0)`.
    pub anchor: T,
    pub last_input: T,
    /// Direction of travel: -1, 0 (never moved) or +1.
    pub direction: i8,
    pub holding: bool,
}

impl<T: Scalar> Default for HysteresisState<T> {
    fn default() -> Self {
        Self {
            held: T::zero(),
            anchor: T::zero(),
            last_input: T::zero(),
            direction: 0,
            holding: false,
        }
    }
}

/// Which branch of the hysteresis law produced an output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HysteresisBranch {
    /// `|u| < D_w/2`: output 0.
    CentralBand,
    /// Moving up along `δ(u, u̇) = u - D_w/2`.
    Rising,
    /// Moving down and more than `D_w` away from the reversal point.
    Falling,
    /// After a reversal, until the input has travelled `D_w` back: output
    /// held at its value at `u(t0)`.
    Hold,
}

fn dir_of<T: Scalar>(x: T) -> i8 {
    if x > T::zero() {
        1
    } else if x < T::zero() {
        -1
    } else {
        0
    }
}

/// `δ(u, u̇) = u - D_w·sign(u̇)/2`.
fn branch_value<T: Scalar>(u: T, direction: i8, width: T) -> T {
    let half = width / T::lit(2.0);
    match direction {
        1 => u - half,
        -1 => u + half,
        _ => u,
    }
}

/// One update of the hysteresis element `σ2`.
///
/// `u_dot` is the caller's estimate of the input slope; a zero slope keeps
/// the previous direction of travel. Returns the new state, the output and
/// the branch taken.
pub fn hysteresis_step_branch<T: Scalar>(
    state: HysteresisState<T>,
    u: T,
    u_dot: T,
    p: &NonlinearityParams<T>,
) -> (HysteresisState<T>, T, HysteresisBranch) {
    let width = p.hysteresis_width;
    let half = width / T::lit(2.0);
    let slope_dir = dir_of(u_dot);
    let mut direction = if slope_dir != 0 {
        slope_dir
    } else {
        state.direction
    };
    if direction == 0 {
        // Never moved: treat as having approached from zero.
        direction = dir_of(u);
    }
    let mut next = state;
    next.last_input = u;
    next.direction = direction;

    if -half < u && u < half {
        next.held = T::zero();
        next.anchor = u;
        next.holding = false;
        return (next, T::zero(), HysteresisBranch::CentralBand);
    }

    if slope_dir != 0 && state.direction != 0 && slope_dir != state.direction {
        next.holding = true;
        next.anchor = state.last_input;
        next.held = state.held;
    }

    // The hold lasts while the input stays within `D_w/2` of the held
    // output; after a single reversal that is exactly the `D_w` of travel
    // back from `u(t0)`. Leaving the band resumes the branch on that side.
    if next.holding {
        if (u - next.held).abs() <= half {
            return (next, next.held, HysteresisBranch::Hold);
        }
        next.holding = false;
        direction = if u > next.held { 1 } else { -1 };
        next.direction = direction;
    }

    let out = branch_value(u, direction, width);
    next.held = out;
    let branch = if direction > 0 {
        HysteresisBranch::Rising
    } else {
        HysteresisBranch::Falling
    };
    (next, out, branch)
}

/// One update of the hysteresis element `σ2`; see [`hysteresis_step_branch`].
pub fn hysteresis_step<T: Scalar>(
    state: HysteresisState<T>,
    u: T,
    u_dot: T,
    p: &NonlinearityParams<T>,
) -> (HysteresisState<T>, T) {
    let (s, out, _) = hysteresis_step_branch(state, u, u_dot, p);
    (s, out)
}

/// State of the full signal path for one valve: the hysteresis memory plus
/// the previous dead-zone output (for the slope estimate).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalPath<T> {
    pub hysteresis: HysteresisState<T>,
    pub last_dead_zone_output: T,
}

impl<T: Scalar> Default for SignalPath<T> {
    fn default() -> Self {
        Self {
            hysteresis: HysteresisState::default(),
            last_dead_zone_output: T::zero(),
        }
    }
}

impl<T: Scalar> SignalPath<T> {
    /// Applies `σ(u) = σ2(σ1(u))` with the slope estimated by backward
    /// difference over `dt`, returning the next state and the output.
    pub fn apply(&self, u: T, dt: T, p: &NonlinearityParams<T>) -> (Self, T) {
        let d = dead_zone(u, p);
        let slope = if dt > T::zero() {
            (d - self.last_dead_zone_output) / dt
        } else {
            T::zero()
        };
        let (h, out) = hysteresis_step(self.hysteresis, d, slope, p);
        (
            Self {
                hysteresis: h,
                last_dead_zone_output: d,
            },
            out,
        )
    }
}
