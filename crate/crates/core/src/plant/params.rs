//! Plant parameter sets.
//!
//! [`PlantSpec`] is the human-facing description (datasheet units such as
//! bar, L/min and N·m/(rev/min)) read from config files; [`PlantConfig`] is
//! the SI form the simulator runs on.

use serde::{Deserialize, Serialize};

use super::hydraulics::ActuatorParams;
use super::linkage::LinkageGeometry;
use super::nonlinearity::NonlinearityParams;
use super::rigid_body::{damping_from_rpm, LinkParams, GRAVITY};
use crate::{Result, Scalar};

const BAR: f64 = 1e5;
const LPM: f64 = 1e-3 / 60.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantConfig<T> {
    pub links: [LinkParams<T>; 2],
    pub actuators: [ActuatorParams<T>; 2],
    pub linkages: [LinkageGeometry<T>; 2],
    pub nonlinearities: [NonlinearityParams<T>; 2],
    pub gravity: T,
}

impl<T: Scalar> PlantConfig<T> {
    /// The default 2-link boom/arm excavator.
    pub fn excavator() -> Self {
        PlantSpec::default()
            .to_config()
            .expect("default plant spec is valid")
    }

    pub fn validate(&self) -> Result<()> {
        for j in 0..2 {
            self.links[j].validate()?;
            self.actuators[j].validate()?;
            self.linkages[j].validate(self.actuators[j].stroke)?;
            self.nonlinearities[j].validate()?;
        }
        Ok(())
    }

    /// Joint-angle interval reachable within each cylinder's stroke.
    pub fn joint_limits(&self) -> Result<[(T, T); 2]> {
        Ok([
            self.linkages[0].joint_range(self.actuators[0].stroke)?,
            self.linkages[1].joint_range(self.actuators[1].stroke)?,
        ])
    }

    pub fn map<U: Scalar>(&self) -> PlantConfig<U> {
        let c = |x: T| U::lit(x.as_f64());
        let link = |l: &LinkParams<T>| LinkParams {
            mass: c(l.mass),
            inertia: c(l.inertia),
            length: c(l.length),
            com: c(l.com),
            damping: c(l.damping),
        };
        let act = |a: &ActuatorParams<T>| ActuatorParams {
            piston_diameter: c(a.piston_diameter),
            rod_diameter: c(a.rod_diameter),
            stroke: c(a.stroke),
            dead_volume_cap: c(a.dead_volume_cap),
            dead_volume_rod: c(a.dead_volume_rod),
            bulk_modulus: c(a.bulk_modulus),
            leakage: c(a.leakage),
            viscous_friction: c(a.viscous_friction),
            orifice_cap: c(a.orifice_cap),
            orifice_rod: c(a.orifice_rod),
            density: c(a.density),
            supply_pressure: c(a.supply_pressure),
            tank_pressure: c(a.tank_pressure),
            valve_gain: c(a.valve_gain),
        };
        let geo = |g: &LinkageGeometry<T>| LinkageGeometry {
            base_distance: c(g.base_distance),
            rod_distance: c(g.rod_distance),
            offset: c(g.offset),
            retracted_length: c(g.retracted_length),
        };
        let nl = |n: &NonlinearityParams<T>| NonlinearityParams {
            dead_left: c(n.dead_left),
            dead_right: c(n.dead_right),
            hysteresis_width: c(n.hysteresis_width),
        };
        PlantConfig {
            links: [link(&self.links[0]), link(&self.links[1])],
            actuators: [act(&self.actuators[0]), act(&self.actuators[1])],
            linkages: [geo(&self.linkages[0]), geo(&self.linkages[1])],
            nonlinearities: [nl(&self.nonlinearities[0]), nl(&self.nonlinearities[1])],
            gravity: c(self.gravity),
        }
    }
}

/// Per-joint entries of [`PlantSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointSpec {
    /// Piston diameter `D` (m).
    pub piston_diameter: f64,
    /// Rod diameter `d` (m).
    pub rod_diameter: f64,
    /// Stroke `L` (m).
    pub stroke: f64,
    /// Link length `a` (m).
    pub link_length: f64,
    /// Center-of-mass distance from the joint (m).
    pub com: f64,
    /// Mass `M` (kg).
    pub mass: f64,
    /// Moment of inertia about the center of mass `J` (kg·m²).
    pub inertia: f64,
    /// Dead-zone `[D_l, D_r]` (signal units).
    pub dead_zone: [f64; 2],
    /// Hose and port volume added to each chamber (m³).
    pub hose_volume: f64,
    /// Valve gain `k_v` (spool fraction per signal unit).
    pub valve_gain: f64,
    /// Linkage pivot distances `[a_g, b_g]` (m).
    pub linkage: [f64; 2],
    /// Linkage angle offset (rad).
    pub linkage_offset: f64,
    /// Retracted pin-to-pin cylinder length (m).
    pub retracted_length: f64,
}

/// Plant description in the units of the parameter table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantSpec {
    /// Pump pressure `P_s` (bar).
    pub supply_pressure_bar: f64,
    /// Tank pressure `P_0` (bar).
    pub tank_pressure_bar: f64,
    /// Servo valve maximum flow `Q_max` (L/min) at full spool and
    /// `rated_drop_bar` per metering edge.
    pub max_flow_lpm: f64,
    pub rated_drop_bar: f64,
    /// Viscous friction coefficient (N/(m/s)).
    pub viscous_friction: f64,
    /// Internal leakage coefficient `C_t` (L/min/bar).
    pub leakage_lpm_per_bar: f64,
    /// Rotary damping `b_z` (N·m/(rev/min)).
    pub rotary_damping: f64,
    /// Hysteresis width `D_w` (signal units).
    pub hysteresis_width: f64,
    /// Effective bulk modulus `β_e` (Pa).
    pub bulk_modulus: f64,
    /// Oil density `ρ` (kg/m³).
    pub density: f64,
    pub gravity: f64,
    pub boom: JointSpec,
    pub arm: JointSpec,
}

impl Default for PlantSpec {
    fn default() -> Self {
        Self {
            supply_pressure_bar: 200.0,
            tank_pressure_bar: 2.0,
            max_flow_lpm: 600.0,
            rated_drop_bar: 35.0,
            viscous_friction: 100_000.0,
            leakage_lpm_per_bar: 0.005,
            rotary_damping: 10_000.0,
            hysteresis_width: 0.05,
            bulk_modulus: 7.0e8,
            density: 850.0,
            gravity: GRAVITY,
            boom: JointSpec {
                piston_diameter: 0.35,
                rod_diameter: 0.22,
                stroke: 1.8,
                link_length: 7.2,
                com: 3.6,
                mass: 8000.0,
                inertia: 38_500.0,
                dead_zone: [-0.2, 0.1],
                hose_volume: 0.01,
                valve_gain: 0.05,
                linkage: [3.0, 1.2],
                linkage_offset: 1.355,
                retracted_length: 2.2,
            },
            arm: JointSpec {
                piston_diameter: 0.18,
                rod_diameter: 0.125,
                stroke: 1.7,
                link_length: 2.9,
                com: 1.45,
                mass: 2920.0,
                inertia: 3600.0,
                dead_zone: [-0.1, 0.2],
                hose_volume: 0.004,
                valve_gain: 0.05,
                linkage: [2.8, 1.0],
                linkage_offset: 3.181,
                retracted_length: 1.95,
            },
        }
    }
}

impl PlantSpec {
    pub fn to_config<T: Scalar>(&self) -> Result<PlantConfig<T>> {
        let c = T::lit;
        let orifice = self.max_flow_lpm * LPM * self.density.sqrt() / (self.rated_drop_bar * BAR).sqrt();
        let joint = |j: &JointSpec| {
            let d2 = j.piston_diameter * j.piston_diameter;
            let a1 = std::f64::consts::PI * d2 / 4.0;
            let a2 = std::f64::consts::PI * (d2 - j.rod_diameter * j.rod_diameter) / 4.0;
            let link = LinkParams {
                mass: c(j.mass),
                inertia: c(j.inertia),
                length: c(j.link_length),
                com: c(j.com),
                damping: damping_from_rpm(c(self.rotary_damping)),
            };
            let act = ActuatorParams {
                piston_diameter: c(j.piston_diameter),
                rod_diameter: c(j.rod_diameter),
                stroke: c(j.stroke),
                dead_volume_cap: c(a1 * j.stroke / 2.0 + j.hose_volume),
                dead_volume_rod: c(a2 * j.stroke / 2.0 + j.hose_volume),
                bulk_modulus: c(self.bulk_modulus),
                leakage: c(self.leakage_lpm_per_bar * LPM / BAR),
                viscous_friction: c(self.viscous_friction),
                orifice_cap: c(orifice),
                orifice_rod: c(orifice),
                density: c(self.density),
                supply_pressure: c(self.supply_pressure_bar * BAR),
                tank_pressure: c(self.tank_pressure_bar * BAR),
                valve_gain: c(j.valve_gain),
            };
            let geo = LinkageGeometry {
                base_distance: c(j.linkage[0]),
                rod_distance: c(j.linkage[1]),
                offset: c(j.linkage_offset),
                retracted_length: c(j.retracted_length),
            };
            let nl = NonlinearityParams {
                dead_left: c(j.dead_zone[0]),
                dead_right: c(j.dead_zone[1]),
                hysteresis_width: c(self.hysteresis_width),
            };
            (link, act, geo, nl)
        };
        let (l0, a0, g0, n0) = joint(&self.boom);
        let (l1, a1, g1, n1) = joint(&self.arm);
        let cfg = PlantConfig {
            links: [l0, l1],
            actuators: [a0, a1],
            linkages: [g0, g1],
            nonlinearities: [n0, n1],
            gravity: c(self.gravity),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
