//! One-dimensional stage model: impeller exit, vaneless and pseudo-vaneless
//! march, throat blockage, conical channel, stage totals.
//!
//! Stations: 1 impeller inlet, 2 impeller exit, 3 diffuser leading edge
//! (`R_3a`), 4 diffuser outlet. Between the leading edge and the radius where
//! adjacent pipe walls meet (`R_3b`) the flow is marched like a vaneless space;
//! incidence effects there are carried by the throat blockage term.

mod diffuser;
mod speedline;
mod stations;

pub use diffuser::{
    channel_outlet, design_angle_deg, evaluate_point, stage_performance, throat_state,
    ChannelOutlet, CpSource, DiffuserThroat, PointFlags, PointPerformance, StagePerformance,
    StagePoint, ThroatOutcome,
};
pub use speedline::{performance_map, speedline, PerformanceMap, SpeedLine, DEFAULT_SPEEDS};
pub use stations::{
    flow_angle, impeller_exit_state, vaneless_evolve, vaneless_evolve_steps, StationState,
    MIN_VANELESS_STEPS,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diffusermap::MapError;
use crate::gasdyn::{GasError, GasModel, TotalState};

/// Mass flow at the compressor design point, kg/s.
pub const DESIGN_MDOT: f64 = 0.806;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeanlineError {
    #[error("{quantity} out of domain: {value}")]
    Domain { quantity: &'static str, value: f64 },
    #[error("{operation}: iteration did not converge (residuals {residuals:?})")]
    NonConvergence {
        operation: &'static str,
        residuals: Vec<f64>,
    },
    #[error("{operation}: {detail}")]
    NonPhysical {
        operation: &'static str,
        detail: String,
    },
    #[error("reversed flow: radial velocity {c_r} m/s")]
    ReversedFlow { c_r: f64 },
    #[error("no un-choked point on the {speed_fraction} speed line")]
    EmptySpeedline { speed_fraction: f64 },
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Gas(#[from] GasError),
    #[error(transparent)]
    Map(#[from] MapError),
}

pub(crate) fn domain(quantity: &'static str, value: f64) -> MeanlineError {
    MeanlineError::Domain { quantity, value }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlipModel {
    #[default]
    Wiesner,
}

/// Impeller boundary-condition generator. SI units, angles in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompressorSpec {
    pub omega_design: f64,
    pub d2: f64,
    pub b2: f64,
    pub n_blades: u32,
    pub backsweep: f64,
    pub slip_model: SlipModel,
    pub impeller_poly_eff: f64,
    /// Fraction of the exit area lost to the jet-wake and wall layers.
    pub exit_blockage: f64,
    pub inlet_total: TotalState,
    pub gas: GasModel,
}

impl CompressorSpec {
    /// Impeller tip speed, m/s.
    pub fn tip_speed(&self, speed_fraction: f64) -> f64 {
        std::f64::consts::PI * speed_fraction * self.omega_design / 60.0 * self.d2
    }

    pub fn validate(&self) -> Result<(), MeanlineError> {
        let positive = |name, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(domain(name, v))
            }
        };
        positive("omega_design", self.omega_design)?;
        positive("d2", self.d2)?;
        positive("b2", self.b2)?;
        positive("n_blades", self.n_blades as f64)?;
        if !(self.impeller_poly_eff > 0.0 && self.impeller_poly_eff <= 1.0) {
            return Err(domain("impeller_poly_eff", self.impeller_poly_eff));
        }
        if !(0.0..1.0).contains(&self.exit_blockage) {
            return Err(domain("exit_blockage", self.exit_blockage));
        }
        if !(self.backsweep.abs() < 90.0) {
            return Err(domain("backsweep", self.backsweep));
        }
        TotalState::new(self.inlet_total.p0, self.inlet_total.t0)?;
        Ok(())
    }
}

/// Loss and blockage closures of the diffuser model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Closures {
    pub b_ref: f64,
    /// Blockage growth per squared degree of incidence.
    pub k_inc: f64,
    pub stall_angle_deg: f64,
    pub friction_coeff: f64,
    /// Added to the geometric leading-edge angle to give the zero-incidence angle.
    pub design_angle_offset_deg: f64,
    /// Total-pressure loss between leading edge and throat per unit blockage,
    /// in station-3 dynamic heads.
    pub inlet_loss_coeff: f64,
    /// Channel total-pressure loss per unit of recovery shortfall.
    pub channel_loss_factor: f64,
    /// Fixed channel recovery replacing the map lookup.
    pub cp_override: Option<f64>,
}

/// Stage configuration file. Angles in degrees, SI units elsewhere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageConfig {
    pub omega_rpm: f64,
    pub d2_m: f64,
    pub b2_m: f64,
    pub n_blades: u32,
    pub backsweep_deg: f64,
    pub impeller_poly_eff: f64,
    pub inlet_p0_pa: f64,
    pub inlet_t0_k: f64,
    pub b_ref: f64,
    pub k_inc: f64,
    pub stall_angle_deg: f64,
    pub friction_coeff: f64,
    #[serde(default = "defaults::exit_blockage")]
    pub exit_blockage: f64,
    #[serde(default = "defaults::design_angle_offset_deg")]
    pub design_angle_offset_deg: f64,
    #[serde(default = "defaults::inlet_loss_coeff")]
    pub inlet_loss_coeff: f64,
    #[serde(default = "defaults::channel_loss_factor")]
    pub channel_loss_factor: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cp_override: Option<f64>,
}

mod defaults {
    use super::StageConfig;

    pub fn exit_blockage() -> f64 {
        StageConfig::CALIBRATED.exit_blockage
    }
    pub fn design_angle_offset_deg() -> f64 {
        StageConfig::CALIBRATED.design_angle_offset_deg
    }
    pub fn inlet_loss_coeff() -> f64 {
        StageConfig::CALIBRATED.inlet_loss_coeff
    }
    pub fn channel_loss_factor() -> f64 {
        StageConfig::CALIBRATED.channel_loss_factor
    }
}

/// The shipped calibrated configuration, as a JSON document.
pub const CALIBRATED_CONFIG_JSON: &str = include_str!("../../data/stage_calibrated.json");

impl StageConfig {
    /// Calibrated against the design-point targets (|C2| ≈ 385 m/s, pr_tt 4.33,
    /// eta_tt 81.62 % for P1) and the off-design orderings; see the README.
    pub const CALIBRATED: StageConfig = StageConfig {
        omega_rpm: 70_000.0,
        d2_m: 0.145,
        b2_m: 0.00725,
        n_blades: 16,
        backsweep_deg: 34.34,
        impeller_poly_eff: 0.8755,
        inlet_p0_pa: 100_830.0,
        inlet_t0_k: 288.15,
        b_ref: 0.001161,
        k_inc: 0.001648,
        stall_angle_deg: 78.0,
        friction_coeff: 0.0005,
        exit_blockage: 0.3412,
        design_angle_offset_deg: -5.61,
        inlet_loss_coeff: 1.72,
        channel_loss_factor: 1.194,
        cp_override: None,
    };

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data")
    }

    pub fn compressor_spec(&self) -> Result<CompressorSpec, MeanlineError> {
        let spec = CompressorSpec {
            omega_design: self.omega_rpm,
            d2: self.d2_m,
            b2: self.b2_m,
            n_blades: self.n_blades,
            backsweep: self.backsweep_deg,
            slip_model: SlipModel::Wiesner,
            impeller_poly_eff: self.impeller_poly_eff,
            exit_blockage: self.exit_blockage,
            inlet_total: TotalState::new(self.inlet_p0_pa, self.inlet_t0_k)?,
            gas: GasModel::AIR,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn closures(&self) -> Result<Closures, MeanlineError> {
        let c = Closures {
            b_ref: self.b_ref,
            k_inc: self.k_inc,
            stall_angle_deg: self.stall_angle_deg,
            friction_coeff: self.friction_coeff,
            design_angle_offset_deg: self.design_angle_offset_deg,
            inlet_loss_coeff: self.inlet_loss_coeff,
            channel_loss_factor: self.channel_loss_factor,
            cp_override: self.cp_override,
        };
        for (name, v) in [
            ("b_ref", c.b_ref),
            ("k_inc", c.k_inc),
            ("friction_coeff", c.friction_coeff),
            ("inlet_loss_coeff", c.inlet_loss_coeff),
            ("channel_loss_factor", c.channel_loss_factor),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(domain(name, v));
            }
        }
        if c.b_ref >= 1.0 {
            return Err(domain("b_ref", c.b_ref));
        }
        if !(c.stall_angle_deg > 0.0 && c.stall_angle_deg < 90.0) {
            return Err(domain("stall_angle_deg", c.stall_angle_deg));
        }
        if let Some(cp) = c.cp_override {
            if !(cp.is_finite() && cp < 1.0) {
                return Err(domain("cp_override", cp));
            }
        }
        Ok(c)
    }
}

impl Default for StageConfig {
    fn default() -> Self {
        Self::CALIBRATED
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_file_matches_constant() {
        assert_eq!(
            StageConfig::from_json(CALIBRATED_CONFIG_JSON).unwrap(),
            StageConfig::CALIBRATED
        );
    }

    #[test]
    fn extra_keys_default_and_unknown_rejected() {
        let minimal = r#"{"omega_rpm":70000,"d2_m":0.145,"b2_m":0.00725,"n_blades":16,
            "backsweep_deg":35,"impeller_poly_eff":0.9,"inlet_p0_pa":100830,"inlet_t0_k":288.15,
            "b_ref":0.02,"k_inc":0.001,"stall_angle_deg":78,"friction_coeff":0.002}"#;
        let c = StageConfig::from_json(minimal).unwrap();
        assert_eq!(c.exit_blockage, StageConfig::CALIBRATED.exit_blockage);
        assert_eq!(c.cp_override, None);
        let extra = minimal.replace("\"b_ref\"", "\"bogus\":1,\"b_ref\"");
        assert!(StageConfig::from_json(&extra).is_err());
    }

    #[test]
    fn invalid_values_rejected() {
        let mut c = StageConfig::CALIBRATED;
        c.impeller_poly_eff = 1.2;
        assert!(c.compressor_spec().is_err());
        let mut c = StageConfig::CALIBRATED;
        c.stall_angle_deg = 95.0;
        assert!(c.closures().is_err());
    }
}
