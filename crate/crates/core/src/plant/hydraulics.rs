//! Single-rod cylinder and four-way servo valve.

use serde::{Deserialize, Serialize};

use crate::{Error, Result, Scalar};

/// Cylinder, fluid and valve parameters for one actuator (SI units).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActuatorParams<T> {
    /// Piston diameter `D` (m).
    pub piston_diameter: T,
    /// Rod diameter `d` (m).
    pub rod_diameter: T,
    /// Stroke `L` (m).
    pub stroke: T,
    /// Cap-side volume with the piston at mid-stroke, `V01` (m³).
    pub dead_volume_cap: T,
    /// Rod-side volume with the piston at mid-stroke, `V02` (m³).
    pub dead_volume_rod: T,
    /// Effective bulk modulus `β_e` (Pa).
    pub bulk_modulus: T,
    /// Internal leakage coefficient `C_t` (m³/s/Pa).
    pub leakage: T,
    /// Viscous friction `F_v` (N·s/m).
    pub viscous_friction: T,
    /// Lumped orifice term `C_d1·ω1` (m² at full spool).
    pub orifice_cap: T,
    /// Lumped orifice term `C_d2·ω2` (m² at full spool).
    pub orifice_rod: T,
    /// Oil density `ρ` (kg/m³).
    pub density: T,
    /// Supply pressure `P_s` (Pa).
    pub supply_pressure: T,
    /// Tank pressure `P_0` (Pa).
    pub tank_pressure: T,
    /// Valve gain `k_v`: normalized spool position per unit of signal.
    pub valve_gain: T,
}

impl<T: Scalar> ActuatorParams<T> {
    /// Cap-side piston area `A1 = πD²/4`.
    pub fn area_cap(&self) -> T {
        T::PI() * self.piston_diameter.powi(2) / T::lit(4.0)
    }

    /// Rod-side annulus area `A2 = π(D² - d²)/4`.
    pub fn area_rod(&self) -> T {
        T::PI() * (self.piston_diameter.powi(2) - self.rod_diameter.powi(2)) / T::lit(4.0)
    }

    pub fn validate(&self) -> Result<()> {
        let a1 = self.area_cap();
        let a2 = self.area_rod();
        if !(a1 > a2 && a2 > T::zero()) {
            return Err(Error::Config(format!(
                "actuator areas must satisfy A1 > A2 > 0 (A1 = {a1}, A2 = {a2})"
            )));
        }
        if !(self.supply_pressure > self.tank_pressure && self.tank_pressure >= T::zero()) {
            return Err(Error::Config("pressures must satisfy P_s > P_0 >= 0".into()));
        }
        let positive = [
            ("stroke", self.stroke),
            ("bulk modulus", self.bulk_modulus),
            ("density", self.density),
            ("cap dead volume", self.dead_volume_cap),
            ("rod dead volume", self.dead_volume_rod),
        ];
        for (name, v) in positive {
            if !(v > T::zero()) {
                return Err(Error::Config(format!("{name} must be > 0, got {v}")));
            }
        }
        let non_negative = [
            ("leakage", self.leakage),
            ("viscous friction", self.viscous_friction),
            ("cap orifice", self.orifice_cap),
            ("rod orifice", self.orifice_rod),
            ("valve gain", self.valve_gain),
        ];
        for (name, v) in non_negative {
            if !(v >= T::zero()) {
                return Err(Error::Config(format!("{name} must be >= 0, got {v}")));
            }
        }
        // Chamber volumes must stay positive over the full stroke.
        let half = self.stroke / T::lit(2.0);
        if !(self.dead_volume_cap - a1 * half > T::zero() && self.dead_volume_rod - a2 * half > T::zero())
        {
            return Err(Error::Config(
                "dead volumes too small: a chamber empties before the stroke end".into(),
            ));
        }
        Ok(())
    }

    /// Chamber volumes `(V1, V2)` at piston displacement `x` from mid-stroke.
    pub fn chamber_volumes(&self, x: T) -> (T, T) {
        (
            self.dead_volume_cap + self.area_cap() * x,
            self.dead_volume_rod - self.area_rod() * x,
        )
    }

    /// Clamps a pressure into `[P_0, P_s]`.
    pub fn clamp_pressure(&self, p: T) -> T {
        p.max(self.tank_pressure).min(self.supply_pressure)
    }
}

fn checked_sqrt<T: Scalar>(x: T, what: &str) -> Result<T> {
    if x >= T::zero() {
        Ok(x.sqrt())
    } else {
        Err(Error::Domain(format!(
            "negative square-root argument in valve flow ({what} = {x})"
        )))
    }
}

/// Valve flows `(Q1, Q2)` for spool position `y_v`.
///
/// `Q1` is the flow into the cap chamber, `Q2` the flow out of the rod
/// chamber. Pressures are clamped to `[P_0, P_s]` before the square roots.
pub fn valve_flow<T: Scalar>(y_v: T, p1: T, p2: T, p: &ActuatorParams<T>) -> Result<(T, T)> {
    if !(y_v.is_finite() && p1.is_finite() && p2.is_finite()) {
        return Err(Error::NonFinite(format!(
            "valve_flow inputs y_v={y_v}, P1={p1}, P2={p2}"
        )));
    }
    if y_v == T::zero() {
        return Ok((T::zero(), T::zero()));
    }
    let p1 = p.clamp_pressure(p1);
    let p2 = p.clamp_pressure(p2);
    let (phi1, phi2) = if y_v >= T::zero() {
        (
            checked_sqrt(p.supply_pressure - p1, "P_s - P1")?,
            checked_sqrt(p2 - p.tank_pressure, "P2 - P_0")?,
        )
    } else {
        (
            checked_sqrt(p1 - p.tank_pressure, "P1 - P_0")?,
            checked_sqrt(p.supply_pressure - p2, "P_s - P2")?,
        )
    };
    let root_rho = p.density.sqrt();
    Ok((
        p.orifice_cap / root_rho * y_v * phi1,
        p.orifice_rod / root_rho * y_v * phi2,
    ))
}

/// Chamber pressure rates `(Ṗ1, Ṗ2)`.
///
/// `x` is the piston displacement from mid-stroke and `x_dot` its velocity.
pub fn pressure_derivatives<T: Scalar>(
    x: T,
    x_dot: T,
    p1: T,
    p2: T,
    q1: T,
    q2: T,
    p: &ActuatorParams<T>,
) -> Result<(T, T)> {
    let (v1, v2) = p.chamber_volumes(x);
    if !(v1 > T::zero() && v2 > T::zero()) {
        return Err(Error::Domain(format!(
            "non-positive chamber volume (V1 = {v1}, V2 = {v2}) at piston displacement {x}"
        )));
    }
    let leak = p.leakage * (p1 - p2);
    let dp1 = p.bulk_modulus / v1 * (q1 - p.area_cap() * x_dot - leak);
    let dp2 = p.bulk_modulus / v2 * (p.area_rod() * x_dot + leak - q2);
    Ok((dp1, dp2))
}

/// Net rod force `F = P1·A1 - P2·A2 - F_v·ẏ`.
pub fn actuator_force<T: Scalar>(p1: T, p2: T, x_dot: T, p: &ActuatorParams<T>) -> T {
    p1 * p.area_cap() - p2 * p.area_rod() - p.viscous_friction * x_dot
}
