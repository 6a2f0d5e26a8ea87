//! The boom/arm simulator: state, continuous dynamics and the RK4 stepper.

use serde::{Deserialize, Serialize};

use super::hydraulics::{actuator_force, pressure_derivatives, valve_flow};
use super::nonlinearity::SignalPath;
use super::params::PlantConfig;
use super::rigid_body::{kinetic_energy, potential_energy, rigid_body_matrices};
use crate::{Error, Result, Scalar};

/// Full simulator state. `q̈` is a function of this state and is never stored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantState<T> {
    /// Joint angles (rad).
    pub q: [T; 2],
    /// Joint rates (rad/s).
    pub q_dot: [T; 2],
    /// Cap-chamber pressure per actuator (Pa).
    pub p_cap: [T; 2],
    /// Rod-chamber pressure per actuator (Pa).
    pub p_rod: [T; 2],
    /// Valve signal-path memory per actuator.
    pub signal: [SignalPath<T>; 2],
    /// Simulation time (s).
    pub t: T,
}

/// Time derivative of the continuous part of [`PlantState`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateDerivative<T> {
    pub q_dot: [T; 2],
    pub q_ddot: [T; 2],
    pub p_cap_dot: [T; 2],
    pub p_rod_dot: [T; 2],
}

/// Power flows at one instant, for energy bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerBreakdown<T> {
    /// `Σ (P1·A1 - P2·A2)·ẏ` (W).
    pub pressure: T,
    /// `Σ F_v·ẏ²` (W).
    pub cylinder_friction: T,
    /// `Σ b_z·q̇²` (W).
    pub rotary_damping: T,
}

const N: usize = 8;

impl<T: Scalar> PlantState<T> {
    fn pack(&self) -> [T; N] {
        [
            self.q[0],
            self.q[1],
            self.q_dot[0],
            self.q_dot[1],
            self.p_cap[0],
            self.p_rod[0],
            self.p_cap[1],
            self.p_rod[1],
        ]
    }

    fn unpack(&self, x: &[T; N]) -> Self {
        Self {
            q: [x[0], x[1]],
            q_dot: [x[2], x[3]],
            p_cap: [x[4], x[6]],
            p_rod: [x[5], x[7]],
            signal: self.signal,
            t: self.t,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.pack().iter().all(|v| v.is_finite())
    }
}

impl<T: Scalar> StateDerivative<T> {
    fn pack(&self) -> [T; N] {
        [
            self.q_dot[0],
            self.q_dot[1],
            self.q_ddot[0],
            self.q_ddot[1],
            self.p_cap_dot[0],
            self.p_rod_dot[0],
            self.p_cap_dot[1],
            self.p_rod_dot[1],
        ]
    }
}

/// Deterministic fixed-step simulator of the two-link hydraulic manipulator.
#[derive(Debug, Clone)]
pub struct Plant<T> {
    pub config: PlantConfig<T>,
    limits: [(T, T); 2],
    clamp_events: u64,
}

impl<T: Scalar> Plant<T> {
    pub fn new(config: PlantConfig<T>) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            limits: config.joint_limits()?,
            config,
            clamp_events: 0,
        })
    }

    /// Joint-angle intervals that keep each piston within its stroke.
    pub fn joint_limits(&self) -> [(T, T); 2] {
        self.limits
    }

    /// Number of times a chamber pressure was clamped to `[P_0, P_s]` after a step.
    pub fn clamp_events(&self) -> u64 {
        self.clamp_events
    }

    /// Piston displacement from mid-stroke, its Jacobian and rate, per actuator.
    fn actuator_kinematics(&self, q: [T; 2], q_dot: [T; 2]) -> Result<[(T, T, T); 2]> {
        let mut out = [(T::zero(), T::zero(), T::zero()); 2];
        for j in 0..2 {
            let geo = &self.config.linkages[j];
            let stroke = self.config.actuators[j].stroke;
            let k = geo.kinematics(q[j], q_dot[j])?;
            let (lo, hi) = self.limits[j];
            if !(q[j] >= lo && q[j] <= hi) {
                return Err(Error::Domain(format!(
                    "joint {j} at q = {} drives cylinder length {} outside stroke [{}, {}]",
                    q[j],
                    k.length,
                    geo.min_length(),
                    geo.max_length(stroke)
                )));
            }
            out[j] = (k.length - geo.mid_length(stroke), k.jacobian, k.jacobian_rate);
        }
        Ok(out)
    }

    /// Rest state at joint angles `q` with pressures that hold the arm
    /// against gravity. The lighter-loaded chamber sits at `preload`.
    pub fn equilibrium_state(&self, q: [T; 2], preload: T) -> Result<PlantState<T>> {
        let kin = self.actuator_kinematics(q, [T::zero(); 2])?;
        let rb = rigid_body_matrices(q, [T::zero(); 2], &self.config.links, self.config.gravity);
        let mut p_cap = [T::zero(); 2];
        let mut p_rod = [T::zero(); 2];
        for j in 0..2 {
            let a = &self.config.actuators[j];
            let force = rb.gravity[j] / kin[j].1;
            if force >= T::zero() {
                p_rod[j] = preload;
                p_cap[j] = (force + preload * a.area_rod()) / a.area_cap();
            } else {
                p_cap[j] = preload;
                p_rod[j] = (preload * a.area_cap() - force) / a.area_rod();
            }
            if p_cap[j] > a.supply_pressure || p_rod[j] > a.supply_pressure {
                return Err(Error::Domain(format!(
                    "joint {j} cannot be held at q = {:?} below supply pressure",
                    q
                )));
            }
        }
        Ok(PlantState {
            q,
            q_dot: [T::zero(); 2],
            p_cap,
            p_rod,
            signal: [SignalPath::default(); 2],
            t: T::zero(),
        })
    }

    /// Spool positions for the valve outputs `σ(u)`; the spool travel is
    /// limited to `[-1, 1]`.
    pub fn spool(&self, sigma: [T; 2]) -> [T; 2] {
        let mut out = [T::zero(); 2];
        for j in 0..2 {
            out[j] = (self.config.actuators[j].valve_gain * sigma[j])
                .max(-T::one())
                .min(T::one());
        }
        out
    }

    /// Continuous dynamics for fixed valve outputs `σ(u)`.
    pub fn derivative_with_signal(&self, s: &PlantState<T>, sigma: [T; 2]) -> Result<StateDerivative<T>> {
        let kin = self.actuator_kinematics(s.q, s.q_dot)?;
        let spool = self.spool(sigma);
        let mut tau = [T::zero(); 2];
        let mut p_cap_dot = [T::zero(); 2];
        let mut p_rod_dot = [T::zero(); 2];
        for j in 0..2 {
            let a = &self.config.actuators[j];
            let (x, jac, _) = kin[j];
            let x_dot = jac * s.q_dot[j];
            let (q1, q2) = valve_flow(spool[j], s.p_cap[j], s.p_rod[j], a)?;
            let (d1, d2) = pressure_derivatives(x, x_dot, s.p_cap[j], s.p_rod[j], q1, q2, a)?;
            p_cap_dot[j] = d1;
            p_rod_dot[j] = d2;
            // τ = Jᵀ F with a diagonal linkage Jacobian.
            tau[j] = jac * actuator_force(s.p_cap[j], s.p_rod[j], x_dot, a);
        }
        let q_ddot = self.joint_acceleration_from_torque(s, tau)?;
        Ok(StateDerivative {
            q_dot: s.q_dot,
            q_ddot,
            p_cap_dot,
            p_rod_dot,
        })
    }

    fn joint_acceleration_from_torque(&self, s: &PlantState<T>, tau: [T; 2]) -> Result<[T; 2]> {
        let links = &self.config.links;
        let rb = rigid_body_matrices(s.q, s.q_dot, links, self.config.gravity);
        let cq = rb.coriolis.mul_vec(s.q_dot);
        let rhs = [
            tau[0] - cq[0] - rb.gravity[0] - links[0].damping * s.q_dot[0],
            tau[1] - cq[1] - rb.gravity[1] - links[1].damping * s.q_dot[1],
        ];
        rb.mass
            .solve(rhs)
            .ok_or_else(|| Error::Domain("singular mass matrix".into()))
    }

    /// Joint acceleration `q̈` implied by the state (independent of the input,
    /// since the valve acts on the pressure rates).
    pub fn joint_acceleration(&self, s: &PlantState<T>) -> Result<[T; 2]> {
        let kin = self.actuator_kinematics(s.q, s.q_dot)?;
        let mut tau = [T::zero(); 2];
        for j in 0..2 {
            let a = &self.config.actuators[j];
            tau[j] = kin[j].1 * actuator_force(s.p_cap[j], s.p_rod[j], kin[j].1 * s.q_dot[j], a);
        }
        self.joint_acceleration_from_torque(s, tau)
    }

    /// Valve outputs `σ(u)` the next step would apply, without mutating the
    /// signal-path memory. The slope is the backward difference over `dt`.
    pub fn peek_signal(&self, s: &PlantState<T>, u: [T; 2], dt: T) -> [T; 2] {
        let mut out = [T::zero(); 2];
        for j in 0..2 {
            out[j] = s.signal[j].apply(u[j], dt, &self.config.nonlinearities[j]).1;
        }
        out
    }

    /// State derivative for command `u`: `σ(u)` → spool → flows → pressure
    /// rates and forces → joint accelerations.
    pub fn derivative(&self, s: &PlantState<T>, u: [T; 2]) -> Result<StateDerivative<T>> {
        // A unit dt only fixes the sign of the slope, which is all σ2 uses.
        let sigma = self.peek_signal(s, u, T::one());
        self.derivative_with_signal(s, sigma)
    }

    /// One classical RK4 step of length `dt` with `u` held constant.
    ///
    /// The signal-path memory is advanced once, at the start of the step.
    /// Pressures leaving `[P_0, P_s]` (relief or cavitation) are clamped and
    /// counted.
    pub fn step(&mut self, s: &PlantState<T>, u: [T; 2], dt: T) -> Result<PlantState<T>> {
        if !(dt > T::zero()) {
            return Err(Error::Config(format!("time step must be > 0, got {dt}")));
        }
        if !(u[0].is_finite() && u[1].is_finite()) {
            return Err(Error::NonFinite(format!("plant input {u:?}")));
        }
        let mut signal = s.signal;
        let mut sigma = [T::zero(); 2];
        for j in 0..2 {
            let (next, out) = s.signal[j].apply(u[j], dt, &self.config.nonlinearities[j]);
            signal[j] = next;
            sigma[j] = out;
        }
        let mut next = self.rk4(s, sigma, dt)?;
        next.signal = signal;
        for j in 0..2 {
            let a = &self.config.actuators[j];
            for p in [&mut next.p_cap[j], &mut next.p_rod[j]] {
                let c = a.clamp_pressure(*p);
                if c != *p {
                    self.clamp_events += 1;
                    *p = c;
                }
            }
        }
        if !next.is_finite() {
            return Err(Error::NonFinite(format!("plant state after step at t = {}", s.t)));
        }
        Ok(next)
    }

    fn rk4(&self, s: &PlantState<T>, sigma: [T; 2], dt: T) -> Result<PlantState<T>> {
        let x0 = s.pack();
        let half = dt / T::lit(2.0);
        let eval = |x: &[T; N]| -> Result<[T; N]> {
            Ok(self.derivative_with_signal(&s.unpack(x), sigma)?.pack())
        };
        let axpy = |a: T, k: &[T; N]| -> [T; N] {
            let mut out = x0;
            for i in 0..N {
                out[i] += a * k[i];
            }
            out
        };
        let k1 = eval(&x0)?;
        let k2 = eval(&axpy(half, &k1))?;
        let k3 = eval(&axpy(half, &k2))?;
        let k4 = eval(&axpy(dt, &k3))?;
        let sixth = dt / T::lit(6.0);
        let two = T::lit(2.0);
        let mut x = x0;
        for i in 0..N {
            x[i] += sixth * (k1[i] + two * k2[i] + two * k3[i] + k4[i]);
        }
        let mut next = s.unpack(&x);
        next.t = s.t + dt;
        Ok(next)
    }

    /// Mechanical energy (kinetic + gravitational).
    pub fn mechanical_energy(&self, s: &PlantState<T>) -> T {
        kinetic_energy(s.q, s.q_dot, &self.config.links)
            + potential_energy(s.q, &self.config.links, self.config.gravity)
    }

    pub fn power(&self, s: &PlantState<T>) -> Result<PowerBreakdown<T>> {
        let kin = self.actuator_kinematics(s.q, s.q_dot)?;
        let mut out = PowerBreakdown {
            pressure: T::zero(),
            cylinder_friction: T::zero(),
            rotary_damping: T::zero(),
        };
        for j in 0..2 {
            let a = &self.config.actuators[j];
            let x_dot = kin[j].1 * s.q_dot[j];
            out.pressure += (s.p_cap[j] * a.area_cap() - s.p_rod[j] * a.area_rod()) * x_dot;
            out.cylinder_friction += a.viscous_friction * x_dot * x_dot;
            out.rotary_damping += self.config.links[j].damping * s.q_dot[j] * s.q_dot[j];
        }
        Ok(out)
    }

    /// Tip position of link 2 in the base frame (m).
    pub fn tip_position(&self, q: [T; 2]) -> [T; 2] {
        let l1 = self.config.links[0].length;
        let l2 = self.config.links[1].length;
        [
            l1 * q[0].cos() + l2 * (q[0] + q[1]).cos(),
            l1 * q[0].sin() + l2 * (q[0] + q[1]).sin(),
        ]
    }
}
