use serde::{Deserialize, Serialize};

use super::{domain, CompressorSpec, MeanlineError};
use crate::gasdyn::{GasModel, TotalState};

pub const MIN_VANELESS_STEPS: usize = 200;
const CONTINUITY_TOLERANCE: f64 = 1e-10;
const IMPELLER_MAX_ITER: usize = 500;
const BISECTION_STEPS: usize = 200;

/// Flow state at one station. SI units; angle measured from radial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationState {
    pub radius: f64,
    pub flow_area: f64,
    pub mach: f64,
    pub static_p: f64,
    pub static_t: f64,
    pub velocity: f64,
    pub c_theta: f64,
    pub c_r: f64,
    pub flow_angle_deg: f64,
    pub total: TotalState,
    pub mdot: f64,
}

impl StationState {
    /// Assemble a state from its velocity components and stagnation state.
    pub(crate) fn from_components(
        radius: f64,
        flow_area: f64,
        c_theta: f64,
        c_r: f64,
        total: TotalState,
        mdot: f64,
        gas: &GasModel,
    ) -> Result<Self, MeanlineError> {
        let velocity = c_theta.hypot(c_r);
        let static_t = total.t0 - velocity * velocity / (2.0 * gas.cp());
        if !(static_t > 0.0) {
            return Err(MeanlineError::NonPhysical {
                operation: "station state",
                detail: format!("kinetic energy exceeds stagnation enthalpy ({velocity} m/s)"),
            });
        }
        let static_p = total.p0 * (static_t / total.t0).powf(gas.pressure_exponent());
        Ok(Self {
            radius,
            flow_area,
            mach: velocity / gas.speed_of_sound(static_t),
            static_p,
            static_t,
            velocity,
            c_theta,
            c_r,
            flow_angle_deg: c_theta.atan2(c_r).to_degrees(),
            total,
            mdot,
        })
    }

    pub fn density(&self, gas: &GasModel) -> f64 {
        gas.density(self.static_p, self.static_t)
    }

    /// Mass flow implied by density, radial velocity and flow area.
    pub fn continuity_mdot(&self, gas: &GasModel) -> f64 {
        self.density(gas) * self.c_r * self.flow_area
    }

    /// Stagnation minus static pressure.
    pub fn dynamic_head(&self) -> f64 {
        self.total.p0 - self.static_p
    }
}

/// Flow angle from radial, degrees.
pub fn flow_angle(state: &StationState) -> Result<f64, MeanlineError> {
    if !(state.velocity > 0.0) {
        return Err(domain("velocity", state.velocity));
    }
    if state.c_r <= 0.0 {
        return Err(MeanlineError::ReversedFlow { c_r: state.c_r });
    }
    Ok(state.c_theta.atan2(state.c_r).to_degrees())
}

/// Radial velocity carrying `mdot` through `area` on the subsonic branch.
/// Safeguarded Newton from `guess`, falling back to bisection.
fn solve_radial_velocity(
    total: &TotalState,
    c_theta: f64,
    mdot: f64,
    area: f64,
    gas: &GasModel,
    guess: Option<f64>,
) -> Result<f64, MeanlineError> {
    let cp = gas.cp();
    let g_r = gas.gamma * gas.r_gas;
    let headroom = total.t0 - c_theta * c_theta / (2.0 * cp);
    let stagnation = || MeanlineError::NonPhysical {
        operation: "vaneless march",
        detail: "flow decelerates to stagnation".into(),
    };
    if !(headroom > 0.0) {
        return Err(stagnation());
    }
    // Mass flow minus target, and its slope ρA(1 − Cr²/a²).
    let residual = |c_r: f64| {
        let t = headroom - c_r * c_r / (2.0 * cp);
        let p = total.p0 * (t / total.t0).powf(gas.pressure_exponent());
        let rho_a = p / (gas.r_gas * t) * area;
        (rho_a * c_r - mdot, rho_a * (1.0 - c_r * c_r / (g_r * t)))
    };
    // Mass flux peaks where the radial Mach number reaches one.
    let peak = (g_r * headroom / (1.0 + g_r / (2.0 * cp))).sqrt();
    if residual(peak).0 < 0.0 {
        return Err(stagnation());
    }
    let (mut lo, mut hi) = (0.0, peak);
    let mut x = guess
        .filter(|g| *g > 0.0 && *g < peak)
        .unwrap_or(0.5 * peak);
    for _ in 0..BISECTION_STEPS {
        let (f, df) = residual(x);
        if f < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - f / df;
        let next = if df > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() <= 1e-15 * x || hi - lo <= 1e-15 * hi {
            return Ok(next);
        }
        x = next;
    }
    Ok(x)
}

/// Impeller exit: Euler work with Wiesner slip, polytropic total-pressure
/// rise, and continuity through the blocked exit area.
pub fn impeller_exit_state(
    spec: &CompressorSpec,
    mdot: f64,
    speed_fraction: f64,
) -> Result<StationState, MeanlineError> {
    spec.validate()?;
    if !(mdot.is_finite() && mdot > 0.0) {
        return Err(domain("mdot", mdot));
    }
    if !(speed_fraction > 0.0 && speed_fraction <= 1.1) {
        return Err(domain("speed_fraction", speed_fraction));
    }
    let gas = &spec.gas;
    let cp = gas.cp();
    let inlet = spec.inlet_total;
    let u2 = spec.tip_speed(speed_fraction);
    let backsweep = spec.backsweep.to_radians();
    let slip = 1.0 - backsweep.cos().sqrt() / (spec.n_blades as f64).powf(0.7);
    let area = std::f64::consts::PI * spec.d2 * spec.b2 * (1.0 - spec.exit_blockage);
    let poly_exponent = spec.impeller_poly_eff * gas.pressure_exponent();

    let state_at = |c_r: f64| -> Result<StationState, MeanlineError> {
        let c_theta = slip * u2 - c_r * backsweep.tan();
        let t0 = inlet.t0 + u2 * c_theta / cp;
        let total = TotalState {
            p0: inlet.p0 * (t0 / inlet.t0).powf(poly_exponent),
            t0,
        };
        StationState::from_components(0.5 * spec.d2, area, c_theta, c_r, total, mdot, gas)
    };

    let mut c_r = mdot / (gas.density(inlet.p0, inlet.t0) * area);
    let mut residuals = Vec::new();
    for _ in 0..IMPELLER_MAX_ITER {
        let state = state_at(c_r)?;
        let next = mdot / (state.density(gas) * area);
        let residual = (next - c_r).abs() / c_r;
        residuals.push(residual);
        if residual < CONTINUITY_TOLERANCE {
            return state_at(next);
        }
        c_r = 0.5 * (c_r + next);
    }
    let tail = residuals.len().saturating_sub(10);
    Err(MeanlineError::NonConvergence {
        operation: "impeller continuity",
        residuals: residuals.split_off(tail),
    })
}

/// March from `state2` to `r_ratio·r2` with the default step count.
pub fn vaneless_evolve(
    state2: &StationState,
    r_ratio: f64,
    passage_height: f64,
    friction_coeff: f64,
    gas: &GasModel,
) -> Result<StationState, MeanlineError> {
    vaneless_evolve_steps(
        state2,
        r_ratio,
        passage_height,
        friction_coeff,
        gas,
        MIN_VANELESS_STEPS,
    )
}

/// Angular momentum and stagnation pressure marched in radius with RK4.
/// Wall friction on both end walls removes angular momentum and creates
/// entropy; continuity fixes the radial velocity at every radius.
pub fn vaneless_evolve_steps(
    state2: &StationState,
    r_ratio: f64,
    passage_height: f64,
    friction_coeff: f64,
    gas: &GasModel,
    steps: usize,
) -> Result<StationState, MeanlineError> {
    if !(r_ratio >= 1.0 && r_ratio.is_finite()) {
        return Err(domain("r_ratio", r_ratio));
    }
    if !(passage_height > 0.0) {
        return Err(domain("passage_height", passage_height));
    }
    if !(friction_coeff >= 0.0) {
        return Err(domain("friction_coeff", friction_coeff));
    }
    if steps == 0 {
        return Err(domain("steps", 0.0));
    }
    let t0 = state2.total.t0;
    let mdot = state2.mdot;
    let b = passage_height;
    let area = |r: f64| 2.0 * std::f64::consts::PI * r * b;

    let last_c_r = std::cell::Cell::new(state2.c_r);
    let rhs = |r: f64, y: [f64; 2]| -> Result<[f64; 2], MeanlineError> {
        let c_theta = y[0] / r;
        let total = TotalState { p0: y[1], t0 };
        let c_r = solve_radial_velocity(&total, c_theta, mdot, area(r), gas, Some(last_c_r.get()))?;
        last_c_r.set(c_r);
        if friction_coeff == 0.0 {
            return Ok([0.0, 0.0]);
        }
        let c = c_theta.hypot(c_r);
        let t = t0 - c * c / (2.0 * gas.cp());
        let rho = gas.density(total.p0 * (t / t0).powf(gas.pressure_exponent()), t);
        let d_ang = -friction_coeff * c * c_theta * r / (c_r * b);
        let ds =
            friction_coeff * 0.5 * rho * c.powi(3) * 4.0 * std::f64::consts::PI * r / (mdot * t);
        Ok([d_ang, -y[1] * ds / gas.r_gas])
    };

    let r2 = state2.radius;
    let r3 = r_ratio * r2;
    let h = (r3 - r2) / steps as f64;
    let mut y = [state2.c_theta * r2, state2.total.p0];
    let axpy = |y: [f64; 2], k: [f64; 2], s: f64| [y[0] + s * k[0], y[1] + s * k[1]];
    for i in 0..steps {
        let r = r2 + i as f64 * h;
        let k1 = rhs(r, y)?;
        let k2 = rhs(r + 0.5 * h, axpy(y, k1, 0.5 * h))?;
        let k3 = rhs(r + 0.5 * h, axpy(y, k2, 0.5 * h))?;
        let k4 = rhs(r + h, axpy(y, k3, h))?;
        y = [
            y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        ];
    }
    let total = TotalState { p0: y[1], t0 };
    let c_theta = y[0] / r3;
    let c_r = solve_radial_velocity(&total, c_theta, mdot, area(r3), gas, Some(last_c_r.get()))?;
    StationState::from_components(r3, area(r3), c_theta, c_r, total, mdot, gas)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meanline::{StageConfig, DESIGN_MDOT};
    use approx::assert_relative_eq;

    fn spec() -> CompressorSpec {
        StageConfig::CALIBRATED.compressor_spec().unwrap()
    }

    #[test]
    fn tip_speed() {
        assert_relative_eq!(
            spec().tip_speed(1.0),
            531.452_757_232_273_4,
            max_relative = 1e-15
        );
    }

    #[test]
    fn impeller_exit_continuity_and_isentropic_consistency() {
        let s = impeller_exit_state(&spec(), DESIGN_MDOT, 1.0).unwrap();
        let gas = GasModel::AIR;
        assert_relative_eq!(s.continuity_mdot(&gas), DESIGN_MDOT, max_relative = 1e-9);
        let r = crate::gasdyn::isentropic_ratios(s.mach, &gas).unwrap();
        assert_relative_eq!(s.total.p0 / s.static_p, r.p0_over_p, max_relative = 1e-9);
        assert_relative_eq!(
            s.velocity.powi(2),
            s.c_theta.powi(2) + s.c_r.powi(2),
            max_relative = 1e-12
        );
    }

    #[test]
    fn unbent_infinite_blade_limit_has_no_slip() {
        let mut sp = spec();
        sp.backsweep = 0.0;
        sp.n_blades = u32::MAX;
        sp.exit_blockage = 0.0;
        let s = impeller_exit_state(&sp, 0.5, 0.5).unwrap();
        let u2 = sp.tip_speed(0.5);
        assert!((s.c_theta / u2 - 1.0).abs() < 1e-3);
    }

    #[test]
    fn impeller_rejects_bad_inputs() {
        assert!(impeller_exit_state(&spec(), 0.0, 1.0).is_err());
        assert!(impeller_exit_state(&spec(), 0.8, 1.2).is_err());
    }

    #[test]
    fn frictionless_march_conserves() {
        let gas = GasModel::AIR;
        let s2 = impeller_exit_state(&spec(), DESIGN_MDOT, 1.0).unwrap();
        let s3 = vaneless_evolve(&s2, 1.1, 0.00725, 0.0, &gas).unwrap();
        assert_relative_eq!(
            s3.radius * s3.c_theta,
            s2.radius * s2.c_theta,
            max_relative = 1e-10
        );
        assert_relative_eq!(s3.total.p0, s2.total.p0, max_relative = 1e-10);
        assert_relative_eq!(s3.continuity_mdot(&gas), DESIGN_MDOT, max_relative = 1e-9);
    }

    #[test]
    fn march_is_grid_converged() {
        let gas = GasModel::AIR;
        let s2 = impeller_exit_state(&spec(), DESIGN_MDOT, 1.0).unwrap();
        let coarse = vaneless_evolve_steps(&s2, 1.08, 0.00725, 0.005, &gas, 200).unwrap();
        let fine = vaneless_evolve_steps(&s2, 1.08, 0.00725, 0.005, &gas, 20_000).unwrap();
        assert!((coarse.c_theta - fine.c_theta).abs() / fine.c_theta < 1e-6);
        assert!(coarse.total.p0 < s2.total.p0);
    }

    #[test]
    fn flow_angle_cases() {
        let gas = GasModel::AIR;
        let total = TotalState::new(300_000.0, 450.0).unwrap();
        let s = StationState::from_components(0.1, 0.01, 100.0, 100.0, total, 1.0, &gas).unwrap();
        assert_relative_eq!(flow_angle(&s).unwrap(), 45.0, max_relative = 1e-14);
        let s = StationState::from_components(0.1, 0.01, 0.0, 100.0, total, 1.0, &gas).unwrap();
        assert_eq!(flow_angle(&s).unwrap(), 0.0);
        let s = StationState::from_components(0.1, 0.01, 10.0, -1.0, total, 1.0, &gas).unwrap();
        assert!(matches!(
            flow_angle(&s),
            Err(MeanlineError::ReversedFlow { .. })
        ));
    }

    #[test]
    fn stagnating_flow_is_reported() {
        let gas = GasModel::AIR;
        let s2 = impeller_exit_state(&spec(), DESIGN_MDOT, 1.0).unwrap();
        assert!(matches!(
            vaneless_evolve(&s2, 1.5, 1e-5, 0.0, &gas),
            Err(MeanlineError::NonPhysical { .. })
        ));
    }
}
