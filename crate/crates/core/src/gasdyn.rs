//! One-dimensional isentropic relations for a calorically perfect gas.
//!
//! The throat model works with the isentropic "effective area": the area a
//! loss-free stream would need to pass `mdot` at Mach `M` given the local
//! stagnation state,
//!
//! ```text
//! A_eff = (mdot·√T0 / p0) · √(R/γ) · (1 + (γ−1)/2·M²)^((γ+1)/(2(γ−1))) / M
//! ```
//!
//! and throat blockage is the fraction of the geometric area it leaves unused,
//! `B = 1 − A_eff/A_geo`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative tolerance on the area residual of the Mach inversion.
pub const MACH_AREA_TOLERANCE: f64 = 1e-10;
const MACH_MAX_ITER: usize = 200;
const SUBSONIC_LOWER: f64 = 1e-6;
const SUPERSONIC_UPPER: f64 = 50.0;
/// Areas within this relative distance of the sonic minimum count as sonic.
const SONIC_SLACK: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GasError {
    #[error("{quantity} out of domain: {value}")]
    Domain { quantity: &'static str, value: f64 },
    #[error("effective area {a_eff:e} m² exceeds geometric area {a_geo:e} m²")]
    InfeasibleBlockage { a_eff: f64, a_geo: f64 },
    #[error("choked: sonic area {sonic_area:e} m², max mass flow {max_mdot} kg/s")]
    Choked { sonic_area: f64, max_mdot: f64 },
    #[error("mach inversion did not converge (relative residual {residual:e})")]
    NonConvergence { residual: f64 },
}

fn domain(quantity: &'static str, value: f64) -> GasError {
    GasError::Domain { quantity, value }
}

/// Calorically perfect gas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GasModel {
    pub gamma: f64,
    /// Specific gas constant, J/(kg·K).
    pub r_gas: f64,
}

impl GasModel {
    pub const AIR: GasModel = GasModel {
        gamma: 1.4,
        r_gas: 287.06,
    };

    pub fn new(gamma: f64, r_gas: f64) -> Result<Self, GasError> {
        if !(gamma.is_finite() && gamma > 1.0) {
            return Err(domain("gamma", gamma));
        }
        if !(r_gas.is_finite() && r_gas > 0.0) {
            return Err(domain("r_gas", r_gas));
        }
        Ok(Self { gamma, r_gas })
    }

    /// Specific heat at constant pressure, J/(kg·K).
    pub fn cp(&self) -> f64 {
        self.gamma * self.r_gas / (self.gamma - 1.0)
    }

    pub fn speed_of_sound(&self, t: f64) -> f64 {
        (self.gamma * self.r_gas * t).sqrt()
    }

    pub fn density(&self, p: f64, t: f64) -> f64 {
        p / (self.r_gas * t)
    }

    /// Exponent γ/(γ−1) linking pressure and temperature ratios.
    pub fn pressure_exponent(&self) -> f64 {
        self.gamma / (self.gamma - 1.0)
    }
}

impl Default for GasModel {
    fn default() -> Self {
        Self::AIR
    }
}

/// Stagnation pressure (Pa) and temperature (K).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TotalState {
    pub p0: f64,
    pub t0: f64,
}

impl TotalState {
    pub fn new(p0: f64, t0: f64) -> Result<Self, GasError> {
        if !(p0.is_finite() && p0 > 0.0) {
            return Err(domain("p0", p0));
        }
        if !(t0.is_finite() && t0 > 0.0) {
            return Err(domain("t0", t0));
        }
        Ok(Self { p0, t0 })
    }
}

/// Throat conditions as seen by the blockage model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThroatState {
    pub mach: f64,
    /// Effective (isentropic) flow area, m².
    pub a_eff: f64,
    /// Geometric throat area, m².
    pub a_geo: f64,
    pub blockage: f64,
    /// Reynolds number on throat diameter.
    pub re_d: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsentropicRatios {
    pub p0_over_p: f64,
    pub t0_over_t: f64,
    pub rho0_over_rho: f64,
}

pub fn isentropic_ratios(mach: f64, gas: &GasModel) -> Result<IsentropicRatios, GasError> {
    if !(mach.is_finite() && mach >= 0.0) {
        return Err(domain("mach", mach));
    }
    let g = gas.gamma;
    let t0_over_t = 1.0 + 0.5 * (g - 1.0) * mach * mach;
    Ok(IsentropicRatios {
        p0_over_p: t0_over_t.powf(g / (g - 1.0)),
        t0_over_t,
        rho0_over_rho: t0_over_t.powf(1.0 / (g - 1.0)),
    })
}

/// Isentropic effective area for `mdot` at `mach`.
///
/// Uses `√(R/γ)` for the gas-property factor; the bare `R/γ` sometimes seen in
/// print does not carry units of area.
pub fn effective_area(
    mdot: f64,
    total: &TotalState,
    mach: f64,
    gas: &GasModel,
) -> Result<f64, GasError> {
    if !(mdot.is_finite() && mdot > 0.0) {
        return Err(domain("mdot", mdot));
    }
    if !(mach.is_finite() && mach > 0.0) {
        return Err(domain("mach", mach));
    }
    Ok(area_unchecked(mdot, total, mach, gas))
}

fn area_unchecked(mdot: f64, total: &TotalState, mach: f64, gas: &GasModel) -> f64 {
    let g = gas.gamma;
    let expo = (g + 1.0) / (2.0 * (g - 1.0));
    (mdot * total.t0.sqrt() / total.p0)
        * (gas.r_gas / g).sqrt()
        * (1.0 + 0.5 * (g - 1.0) * mach * mach).powf(expo)
        / mach
}

/// Minimum effective area, reached at M = 1.
pub fn sonic_effective_area(
    mdot: f64,
    total: &TotalState,
    gas: &GasModel,
) -> Result<f64, GasError> {
    effective_area(mdot, total, 1.0, gas)
}

/// Excess of `a_eff` over `a_geo` below this relative size is round-off and
/// reads as zero blockage.
const BLOCKAGE_ROUNDOFF: f64 = 1e-12;

pub fn throat_blockage(a_eff: f64, a_geo: f64) -> Result<f64, GasError> {
    if !(a_eff.is_finite() && a_eff > 0.0) {
        return Err(domain("a_eff", a_eff));
    }
    if !(a_geo.is_finite() && a_geo > 0.0) {
        return Err(domain("a_geo", a_geo));
    }
    if a_eff > a_geo * (1.0 + BLOCKAGE_ROUNDOFF) {
        return Err(GasError::InfeasibleBlockage { a_eff, a_geo });
    }
    Ok((1.0 - a_eff / a_geo).max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Subsonic,
    Supersonic,
}

/// Inverts [`effective_area`] for Mach on the requested branch.
///
/// Plain bisection: the area function has zero slope at M = 1, so Newton-type
/// updates are unusable near the branch point.
pub fn mach_from_effective_area(
    mdot: f64,
    total: &TotalState,
    a_eff: f64,
    gas: &GasModel,
    branch: Branch,
) -> Result<f64, GasError> {
    if !(a_eff.is_finite() && a_eff > 0.0) {
        return Err(domain("a_eff", a_eff));
    }
    let sonic = sonic_effective_area(mdot, total, gas)?;
    if a_eff < sonic * (1.0 - SONIC_SLACK) {
        return Err(GasError::Choked {
            sonic_area: sonic,
            max_mdot: mdot * a_eff / sonic,
        });
    }
    if a_eff <= sonic * (1.0 + SONIC_SLACK) {
        return Ok(1.0);
    }

    // `lo` always sits on the large-area side of the root.
    let (mut lo, mut hi) = match branch {
        Branch::Subsonic => (SUBSONIC_LOWER, 1.0),
        Branch::Supersonic => (SUPERSONIC_UPPER, 1.0),
    };
    if area_unchecked(mdot, total, lo, gas) < a_eff {
        return Err(domain("a_eff (beyond bracket)", a_eff));
    }
    for _ in 0..MACH_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if area_unchecked(mdot, total, mid, gas) > a_eff {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mach = 0.5 * (lo + hi);
    let residual = (area_unchecked(mdot, total, mach, gas) - a_eff).abs() / a_eff;
    if residual < MACH_AREA_TOLERANCE {
        Ok(mach)
    } else {
        Err(GasError::NonConvergence { residual })
    }
}

/// Largest mass flow the blocked throat can pass at the given stagnation state.
pub fn choke_mass_flow(
    a_geo: f64,
    blockage: f64,
    total: &TotalState,
    gas: &GasModel,
) -> Result<f64, GasError> {
    if !(a_geo.is_finite() && a_geo > 0.0) {
        return Err(domain("a_geo", a_geo));
    }
    if !(blockage.is_finite() && (0.0..1.0).contains(&blockage)) {
        return Err(domain("blockage", blockage));
    }
    let g = gas.gamma;
    let expo = (g + 1.0) / (2.0 * (g - 1.0));
    Ok(a_geo
        * (1.0 - blockage)
        * (total.p0 / total.t0.sqrt())
        * (g / gas.r_gas).sqrt()
        * (2.0 / (g + 1.0)).powf(expo))
}

/// Dynamic viscosity of air by Sutherland's law, Pa·s.
pub fn sutherland_viscosity(t: f64) -> f64 {
    const MU_REF: f64 = 1.716e-5;
    const T_REF: f64 = 273.15;
    const S: f64 = 110.4;
    MU_REF * (t / T_REF).powf(1.5) * (T_REF + S) / (t + S)
}

/// Static temperature and pressure from stagnation state and Mach.
pub fn static_from_mach(
    total: &TotalState,
    mach: f64,
    gas: &GasModel,
) -> Result<(f64, f64), GasError> {
    let r = isentropic_ratios(mach, gas)?;
    Ok((total.t0 / r.t0_over_t, total.p0 / r.p0_over_p))
}
