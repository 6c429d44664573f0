use serde::{Deserialize, Serialize};

use super::stations::{flow_angle, impeller_exit_state, vaneless_evolve, StationState};
use super::{domain, Closures, CompressorSpec, MeanlineError};
use crate::diffusermap::{ideal_cp, CpQuery, DiffuserMap};
use crate::gasdyn::{
    mach_from_effective_area, static_from_mach, sutherland_viscosity, Branch, GasError, GasModel,
    ThroatState, TotalState,
};
use crate::geometry::{DerivedGeometry, PipeDiffuserDesign};

/// Where the channel recovery comes from.
#[derive(Debug, Clone, Copy)]
pub enum CpSource<'a> {
    Map(&'a DiffuserMap),
    Fixed(f64),
}

impl<'a> CpSource<'a> {
    /// The closures' override if set, otherwise `map`.
    pub fn resolve(closures: &Closures, map: &'a DiffuserMap) -> Self {
        match closures.cp_override {
            Some(cp) => CpSource::Fixed(cp),
            None => CpSource::Map(map),
        }
    }
}

/// Un-choked throat conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffuserThroat {
    pub throat: ThroatState,
    pub total: TotalState,
    pub static_p: f64,
    pub static_t: f64,
    pub velocity: f64,
    pub incidence_deg: f64,
    pub mdot: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThroatOutcome {
    Open(DiffuserThroat),
    /// The blocked throat cannot pass the requested flow.
    Choked {
        blockage: f64,
        incidence_deg: f64,
        max_mdot: f64,
    },
}

/// Zero-incidence flow angle: the pipe axis angle at the leading edge plus
/// the configured offset, degrees from radial.
pub fn design_angle_deg(derived: &DerivedGeometry, closures: &Closures) -> f64 {
    derived.leading_edge_angle_deg + closures.design_angle_offset_deg
}

/// Throat Mach number from mass flow and effective area. Blockage grows
/// quadratically with incidence at the leading edge and costs
/// `inlet_loss_coeff·B` station-3 dynamic heads of total pressure.
///
/// `state3` is the leading-edge state; `ridge` the state where adjacent pipe
/// walls meet, which carries the total pressure into the throat.
pub fn throat_state(
    state3: &StationState,
    ridge: &StationState,
    design: &PipeDiffuserDesign,
    derived: &DerivedGeometry,
    closures: &Closures,
    gas: &GasModel,
) -> Result<ThroatOutcome, MeanlineError> {
    let incidence_deg = flow_angle(state3)? - design_angle_deg(derived, closures);
    let blockage = closures.b_ref + closures.k_inc * incidence_deg * incidence_deg;
    let mdot = state3.mdot;
    if blockage >= 1.0 {
        return Ok(ThroatOutcome::Choked {
            blockage,
            incidence_deg,
            max_mdot: 0.0,
        });
    }
    let p0 = ridge.total.p0 - closures.inlet_loss_coeff * blockage * state3.dynamic_head();
    if !(p0 > 0.0) {
        return Err(MeanlineError::NonPhysical {
            operation: "throat state",
            detail: format!("inlet loss exhausts total pressure (blockage {blockage})"),
        });
    }
    let total = TotalState {
        p0,
        t0: ridge.total.t0,
    };
    let a_geo = derived.a_th_total * 1e-6;
    let a_eff = a_geo * (1.0 - blockage);
    let mach = match mach_from_effective_area(mdot, &total, a_eff, gas, Branch::Subsonic) {
        Ok(m) => m,
        Err(GasError::Choked { max_mdot, .. }) => {
            return Ok(ThroatOutcome::Choked {
                blockage,
                incidence_deg,
                max_mdot,
            })
        }
        Err(e) => return Err(e.into()),
    };
    let (static_t, static_p) = static_from_mach(&total, mach, gas)?;
    let velocity = mach * gas.speed_of_sound(static_t);
    let d_th = design.d_th * 1e-3;
    let re_d = gas.density(static_p, static_t) * velocity * d_th / sutherland_viscosity(static_t);
    Ok(ThroatOutcome::Open(DiffuserThroat {
        throat: ThroatState {
            mach,
            a_eff,
            a_geo,
            blockage,
            re_d,
        },
        total,
        static_p,
        static_t,
        velocity,
        incidence_deg,
        mdot,
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelOutlet {
    pub station: StationState,
    /// Channel recovery referenced to the throat dynamic head.
    pub cp_channel: f64,
    pub cp_clamped: bool,
}

/// Conical channel from throat to outlet. Static pressure rises by
/// `cp_channel` throat dynamic heads; the recovery shortfall against the
/// isentropic value, scaled by `channel_loss_factor`, is lost as total pressure.
pub fn channel_outlet(
    throat: &DiffuserThroat,
    cp_source: CpSource<'_>,
    design: &PipeDiffuserDesign,
    derived: &DerivedGeometry,
    closures: &Closures,
    gas: &GasModel,
) -> Result<ChannelOutlet, MeanlineError> {
    let area_ratio = derived.ar_actual;
    let ideal = ideal_cp(area_ratio)?;
    let (cp_channel, cp_clamped) = match cp_source {
        CpSource::Fixed(cp) => (cp, false),
        CpSource::Map(map) => {
            let hit = map.lookup_cp(&CpQuery {
                area_ratio,
                l_over_d: derived.length_actual / design.d_th,
                blockage: throat.throat.blockage,
                mach_th: throat.throat.mach,
                re_d: throat.throat.re_d,
            });
            (hit.cp, hit.clamped)
        }
    };
    if !(cp_channel < 1.0) {
        return Err(domain("cp_channel", cp_channel));
    }
    let q_th = throat.total.p0 - throat.static_p;
    let static_p = throat.static_p + cp_channel * q_th;
    let p0 = throat.total.p0 - closures.channel_loss_factor * (ideal - cp_channel).max(0.0) * q_th;
    if !(p0 > static_p) {
        return Err(MeanlineError::NonPhysical {
            operation: "channel outlet",
            detail: format!("outlet total pressure {p0} Pa not above static {static_p} Pa"),
        });
    }
    let total = TotalState {
        p0,
        t0: throat.total.t0,
    };
    let mach = ((2.0 / (gas.gamma - 1.0))
        * ((p0 / static_p).powf(1.0 / gas.pressure_exponent()) - 1.0))
        .sqrt();
    let (static_t, _) = static_from_mach(&total, mach, gas)?;
    let velocity = mach * gas.speed_of_sound(static_t);
    // Flow leaves along the pipe axes.
    let r_tan = design.r_tan();
    let axis_radius = r_tan.hypot(derived.throat_station + derived.length_actual);
    let exit_angle = (r_tan / axis_radius).asin();
    let d_out = derived.outlet_diameter * 1e-3;
    let station = StationState {
        radius: 0.5 * derived.d4_actual * 1e-3,
        flow_area: design.n_pipes as f64 * std::f64::consts::FRAC_PI_4 * d_out * d_out,
        mach,
        static_p,
        static_t,
        velocity,
        c_theta: velocity * exit_angle.sin(),
        c_r: velocity * exit_angle.cos(),
        flow_angle_deg: exit_angle.to_degrees(),
        total,
        mdot: throat.mdot,
    };
    Ok(ChannelOutlet {
        station,
        cp_channel,
        cp_clamped,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StagePerformance {
    pub pr_tt: f64,
    pub eta_tt: f64,
}

/// Total-to-total pressure ratio and isentropic efficiency.
pub fn stage_performance(
    station1_total: &TotalState,
    station4: &StationState,
    gas: &GasModel,
) -> Result<StagePerformance, MeanlineError> {
    let pr_tt = station4.total.p0 / station1_total.p0;
    let tr = station4.total.t0 / station1_total.t0;
    if !(tr > 1.0) {
        return Err(domain("T_t4/T_t1", tr));
    }
    if !(pr_tt > 0.0) {
        return Err(domain("pr_tt", pr_tt));
    }
    let eta_tt = (pr_tt.powf(1.0 / gas.pressure_exponent()) - 1.0) / (tr - 1.0);
    Ok(StagePerformance { pr_tt, eta_tt })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PointFlags {
    pub choked: bool,
    pub surge: bool,
}

/// Performance of an un-choked point. `cp` and `cp0` are referenced to the
/// leading-edge (station 3) dynamic head; pressure ratios to inlet total.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointPerformance {
    pub pr_tt: f64,
    pub eta_tt: f64,
    pub cp: f64,
    pub cp0: f64,
    pub p_s4_ratio: f64,
    pub p_t4_ratio: f64,
    pub mach_th: f64,
    pub re_d: f64,
    pub cp_channel: f64,
    pub cp_clamped: bool,
    /// Total-pressure drop from throat to outlet as a fraction of throat total.
    pub throat_to_outlet_loss: f64,
    pub impeller_exit_velocity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StagePoint {
    pub mdot: f64,
    pub speed_fraction: f64,
    pub flow_angle_deg: f64,
    pub incidence_deg: f64,
    pub b_th: f64,
    pub flags: PointFlags,
    pub performance: Option<PointPerformance>,
}

impl StagePoint {
    pub fn pr_tt(&self) -> Option<f64> {
        self.performance.map(|p| p.pr_tt)
    }

    pub fn eta_tt(&self) -> Option<f64> {
        self.performance.map(|p| p.eta_tt)
    }
}

/// Run the full chain for one operating point.
pub fn evaluate_point(
    spec: &CompressorSpec,
    design: &PipeDiffuserDesign,
    derived: &DerivedGeometry,
    closures: &Closures,
    cp_source: CpSource<'_>,
    mdot: f64,
    speed_fraction: f64,
) -> Result<StagePoint, MeanlineError> {
    let gas = &spec.gas;
    let s2 = impeller_exit_state(spec, mdot, speed_fraction)?;
    let b = design.passage_height * 1e-3;
    let r3 = derived.r_3a * 1e-3;
    let s3 = vaneless_evolve(&s2, r3 / s2.radius, b, closures.friction_coeff, gas)?;
    let r3b = derived.r_3b * 1e-3;
    let ridge = vaneless_evolve(&s3, (r3b / r3).max(1.0), b, closures.friction_coeff, gas)?;
    let flow_angle_deg = flow_angle(&s3)?;

    let throat = match throat_state(&s3, &ridge, design, derived, closures, gas)? {
        ThroatOutcome::Open(t) => t,
        ThroatOutcome::Choked {
            blockage,
            incidence_deg,
            ..
        } => {
            return Ok(StagePoint {
                mdot,
                speed_fraction,
                flow_angle_deg,
                incidence_deg,
                b_th: blockage,
                flags: PointFlags {
                    choked: true,
                    surge: false,
                },
                performance: None,
            })
        }
    };
    let outlet = channel_outlet(&throat, cp_source, design, derived, closures, gas)?;
    let s4 = outlet.station;
    let perf = stage_performance(&spec.inlet_total, &s4, gas)?;
    let q3 = s3.dynamic_head();
    let cp = (s4.static_p - s3.static_p) / q3;
    if !(cp < 1.0) {
        return Err(domain("cp", cp));
    }
    Ok(StagePoint {
        mdot,
        speed_fraction,
        flow_angle_deg,
        incidence_deg: throat.incidence_deg,
        b_th: throat.throat.blockage,
        flags: PointFlags::default(),
        performance: Some(PointPerformance {
            pr_tt: perf.pr_tt,
            eta_tt: perf.eta_tt,
            cp,
            cp0: (s3.total.p0 - s4.total.p0) / q3,
            p_s4_ratio: s4.static_p / spec.inlet_total.p0,
            p_t4_ratio: perf.pr_tt,
            mach_th: throat.throat.mach,
            re_d: throat.throat.re_d,
            cp_channel: outlet.cp_channel,
            cp_clamped: outlet.cp_clamped,
            throat_to_outlet_loss: (throat.total.p0 - s4.total.p0) / throat.total.p0,
            impeller_exit_velocity: s2.velocity,
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffusermap::synthetic_map;
    use crate::geometry::{derive_geometry, presets};
    use crate::meanline::{StageConfig, DESIGN_MDOT};
    use approx::assert_relative_eq;

    fn run(cfg: &StageConfig, mdot: f64, sf: f64) -> StagePoint {
        let design = presets::p1();
        let derived = derive_geometry(&design);
        let closures = cfg.closures().unwrap();
        let map = synthetic_map();
        evaluate_point(
            &cfg.compressor_spec().unwrap(),
            &design,
            &derived,
            &closures,
            CpSource::resolve(&closures, &map),
            mdot,
            sf,
        )
        .unwrap()
    }

    #[test]
    fn blockage_is_reference_without_incidence_growth() {
        let mut cfg = StageConfig::CALIBRATED;
        cfg.k_inc = 0.0;
        cfg.b_ref = 0.05;
        for m in [0.5, 0.65, DESIGN_MDOT] {
            assert_eq!(run(&cfg, m, 1.0).b_th, 0.05);
        }
    }

    #[test]
    fn calibrated_design_blockage() {
        let p = run(&StageConfig::CALIBRATED, DESIGN_MDOT, 1.0);
        assert!((p.b_th - 0.02).abs() < 1e-5, "{}", p.b_th);
    }

    #[test]
    fn lossless_chain_is_isentropic() {
        let derived = derive_geometry(&presets::p1());
        let mut cfg = StageConfig::CALIBRATED;
        cfg.impeller_poly_eff = 1.0;
        cfg.friction_coeff = 0.0;
        cfg.inlet_loss_coeff = 0.0;
        cfg.cp_override = Some(ideal_cp(derived.ar_actual).unwrap());
        for (m, sf) in [(DESIGN_MDOT, 1.0), (0.6, 0.9), (0.3, 0.6)] {
            let perf = run(&cfg, m, sf).performance.unwrap();
            assert_relative_eq!(perf.eta_tt, 1.0, epsilon = 1e-9);
            assert_relative_eq!(perf.throat_to_outlet_loss, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn chokes_above_throat_capacity() {
        let p = run(&StageConfig::CALIBRATED, 0.93, 1.0);
        assert!(p.flags.choked);
        assert!(p.performance.is_none());
    }

    #[test]
    fn zero_channel_recovery_keeps_throat_static_pressure() {
        let design = presets::p1();
        let derived = derive_geometry(&design);
        let mut cfg = StageConfig::CALIBRATED;
        cfg.channel_loss_factor = 0.0;
        let spec = cfg.compressor_spec().unwrap();
        let closures = cfg.closures().unwrap();
        let s2 = impeller_exit_state(&spec, DESIGN_MDOT, 1.0).unwrap();
        let s3 = vaneless_evolve(
            &s2,
            derived.r_3a * 1e-3 / s2.radius,
            design.passage_height * 1e-3,
            closures.friction_coeff,
            &spec.gas,
        )
        .unwrap();
        let ThroatOutcome::Open(throat) =
            throat_state(&s3, &s3, &design, &derived, &closures, &spec.gas).unwrap()
        else {
            panic!("design point chokes");
        };
        let out = channel_outlet(
            &throat,
            CpSource::Fixed(0.0),
            &design,
            &derived,
            &closures,
            &spec.gas,
        )
        .unwrap();
        assert_eq!(out.station.static_p, throat.static_p);
        assert_eq!(out.station.total.p0, throat.total.p0);
        assert_eq!(out.station.mdot, DESIGN_MDOT);
    }

    #[test]
    fn flow_angle_rises_as_flow_falls() {
        let cfg = StageConfig::CALIBRATED;
        let angles: Vec<f64> = [0.9, 0.806, 0.7, 0.65, 0.6]
            .iter()
            .map(|&m| run(&cfg, m, 1.0).flow_angle_deg)
            .collect();
        assert!(angles.windows(2).all(|w| w[1] > w[0]), "{angles:?}");
    }

    #[test]
    fn stage_efficiency_identity() {
        let gas = GasModel::AIR;
        let inlet = TotalState::new(100_000.0, 300.0).unwrap();
        let pr: f64 = 4.0;
        let ideal_t = 300.0 * pr.powf(1.0 / gas.pressure_exponent());
        let actual_t = 300.0 + (ideal_t - 300.0) / 0.8;
        let mut s4 = impeller_exit_state(
            &StageConfig::CALIBRATED.compressor_spec().unwrap(),
            DESIGN_MDOT,
            1.0,
        )
        .unwrap();
        s4.total = TotalState {
            p0: pr * inlet.p0,
            t0: actual_t,
        };
        let perf = stage_performance(&inlet, &s4, &gas).unwrap();
        assert_relative_eq!(perf.pr_tt, 4.0, max_relative = 1e-15);
        assert_relative_eq!(perf.eta_tt, 0.8, max_relative = 1e-12);
        s4.total.t0 = 300.0;
        assert!(stage_performance(&inlet, &s4, &gas).is_err());
    }
}
