//! Zero-throat-length pitch correlation and the pipe-count limit it implies.
//!
//! Take one pipe with its axis along `x = R_tan` and its throat section a
//! distance `R_tan·tan α` downstream of the tangency point. The smallest
//! angular pitch at which the neighbouring pipe's outer wall still meets
//! this pipe's inner wall no later than the throat is
//!
//! ```text
//! β = atan(R·tanα / (R − D/2)) − acos((R + D/2) / √((R − D/2)² + (R·tanα)²))
//! ```
//!
//! A real pitch requires the arccosine argument ≤ 1, i.e. `tan²α ≥ 2·D/R`.

use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, TAU};

use super::{domain, GeometryError, PipeDiffuserDesign};

const BISECTION_STEPS: usize = 200;

/// Argument of the arccosine term; values above 1 mean no real pitch.
pub fn acos_argument(r_tan: f64, d_th: f64, alpha: f64) -> f64 {
    let inner = r_tan - 0.5 * d_th;
    let lift = r_tan * alpha.tan();
    (r_tan + 0.5 * d_th) / (inner * inner + lift * lift).sqrt()
}

/// Minimum angular pitch of one pipe, radians. `alpha` in radians, lengths in mm.
pub fn angular_pitch(r_tan: f64, d_th: f64, alpha: f64) -> Result<f64, GeometryError> {
    if !(r_tan.is_finite() && r_tan > 0.0) {
        return Err(domain("r_tan", r_tan));
    }
    if !(d_th.is_finite() && d_th > 0.0) {
        return Err(domain("d_th", d_th));
    }
    if r_tan <= 0.5 * d_th {
        return Err(domain("d_th (must be below 2·r_tan)", d_th));
    }
    if !(alpha > 0.0 && alpha < FRAC_PI_2) {
        return Err(domain("alpha", alpha));
    }
    let argument = acos_argument(r_tan, d_th, alpha);
    if argument > 1.0 {
        return Err(GeometryError::AcosDomainViolation { argument });
    }
    let lift = r_tan * alpha.tan();
    let beta = (lift / (r_tan - 0.5 * d_th)).atan() - argument.acos();
    if beta <= 0.0 {
        return Err(GeometryError::NonPositivePitch { beta });
    }
    Ok(beta)
}

/// `⌊2π/β⌋`; an exact divisor counts as fitting.
pub fn max_pipe_count(beta: f64) -> Result<u32, GeometryError> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(domain("beta", beta));
    }
    let n = (TAU / beta).floor();
    // 2π/(2π/N) can land a hair under N in floating point.
    let n = if ((n + 1.0) * beta - TAU).abs() <= 4.0 * f64::EPSILON * TAU {
        n + 1.0
    } else {
        n
    };
    Ok(n.min(u32::MAX as f64) as u32)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeasibilityReason {
    #[serde(rename = "OK")]
    Ok,
    AcosDomainViolation,
    PitchExceedsRequest,
    NonPositivePitch,
}

/// Boundary values at which feasibility is lost, holding the other inputs fixed.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LimitingValues {
    /// Smallest inclination that still works, degrees.
    pub alpha_min_deg: Option<f64>,
    /// Largest throat diameter that still works, mm.
    pub d_th_max_mm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub feasible: bool,
    pub reason: FeasibilityReason,
    pub beta_rad: Option<f64>,
    pub n_max: Option<u32>,
    pub n_pipes: u32,
    pub limiting_values: LimitingValues,
}

/// Bisection for the root of a monotone predicate change on `[lo, hi]`;
/// `ok(lo)` must hold and `ok(hi)` must not (or vice versa).
fn bisect_boundary(mut lo: f64, mut hi: f64, ok: impl Fn(f64) -> bool) -> f64 {
    let ok_lo = ok(lo);
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if ok(mid) == ok_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn count_at(r_tan: f64, d_th: f64, alpha: f64) -> Option<u32> {
    angular_pitch(r_tan, d_th, alpha)
        .ok()
        .and_then(|b| max_pipe_count(b).ok())
}

/// Inclination at which the arccosine argument reaches 1.
fn alpha_acos_boundary(r_tan: f64, d_th: f64) -> f64 {
    bisect_boundary(1e-9, FRAC_PI_2 - 1e-12, |a| {
        acos_argument(r_tan, d_th, a) <= 1.0
    })
}

/// Throat diameter at which the arccosine argument reaches 1.
fn d_th_acos_boundary(r_tan: f64, alpha: f64) -> f64 {
    bisect_boundary(1e-12, 2.0 * r_tan * (1.0 - 1e-12), |d| {
        acos_argument(r_tan, d, alpha) <= 1.0
    })
}

fn pitch_limits(r_tan: f64, d_th: f64, alpha: f64, n_pipes: u32) -> LimitingValues {
    let fits = |a: f64, d: f64| count_at(r_tan, d, a).is_some_and(|n| n >= n_pipes);
    let a_lo = alpha_acos_boundary(r_tan, d_th);
    let a_hi = FRAC_PI_2 - 1e-9;
    let alpha_min_deg = if fits(a_hi, d_th) {
        let a_start = if fits(a_lo, d_th) { None } else { Some(a_lo) };
        Some(match a_start {
            Some(lo) => bisect_boundary(lo, a_hi, |a| fits(a, d_th)),
            None => a_lo,
        })
    } else {
        None
    }
    .map(f64::to_degrees);

    let d_hi = d_th_acos_boundary(r_tan, alpha);
    let d_lo = 1e-9;
    let d_th_max_mm = if fits(alpha, d_lo) {
        if fits(alpha, d_hi) {
            Some(d_hi)
        } else {
            Some(bisect_boundary(d_lo, d_hi, |d| fits(alpha, d)))
        }
    } else {
        None
    };
    LimitingValues {
        alpha_min_deg,
        d_th_max_mm,
    }
}

/// Feasibility of the requested pipe count under the pitch correlation.
///
/// Errors only for inputs outside the correlation's domain (e.g. `d_th ≥ D_tan`).
pub fn check_feasibility(design: &PipeDiffuserDesign) -> Result<FeasibilityReport, GeometryError> {
    design.validate()?;
    let r_tan = design.r_tan();
    let d_th = design.d_th;
    let alpha = design.alpha;
    let n_pipes = design.n_pipes;

    let (beta, reason) = match angular_pitch(r_tan, d_th, alpha) {
        Ok(b) => (Some(b), None),
        Err(GeometryError::AcosDomainViolation { .. }) => {
            (None, Some(FeasibilityReason::AcosDomainViolation))
        }
        Err(GeometryError::NonPositivePitch { .. }) => {
            (None, Some(FeasibilityReason::NonPositivePitch))
        }
        Err(e) => return Err(e),
    };
    let n_max = beta.map(max_pipe_count).transpose()?;

    let reason = reason.unwrap_or(match n_max {
        Some(n) if n_pipes <= n => FeasibilityReason::Ok,
        _ => FeasibilityReason::PitchExceedsRequest,
    });
    let limiting_values = match reason {
        FeasibilityReason::AcosDomainViolation => LimitingValues {
            alpha_min_deg: Some(alpha_acos_boundary(r_tan, d_th).to_degrees()),
            d_th_max_mm: Some(d_th_acos_boundary(r_tan, alpha)),
        },
        FeasibilityReason::NonPositivePitch => LimitingValues::default(),
        FeasibilityReason::Ok | FeasibilityReason::PitchExceedsRequest => {
            pitch_limits(r_tan, d_th, alpha, n_pipes)
        }
    };
    Ok(FeasibilityReport {
        feasible: reason == FeasibilityReason::Ok,
        reason,
        beta_rad: beta,
        n_max,
        n_pipes,
        limiting_values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::presets;
    use std::f64::consts::PI;

    #[test]
    fn pitch_vanishes_with_throat_diameter() {
        let a = 61.7f64.to_radians();
        let b1 = angular_pitch(72.5, 1e-3, a).unwrap();
        let b2 = angular_pitch(72.5, 1e-5, a).unwrap();
        assert!(b2 < b1 && b1 < 1e-3);
    }

    #[test]
    fn low_inclination_has_no_real_pitch() {
        // tan²20° = 0.132 < 2·8/72.5 = 0.221
        let err = angular_pitch(72.5, 8.0, 20f64.to_radians()).unwrap_err();
        assert!(matches!(err, GeometryError::AcosDomainViolation { .. }));
    }

    #[test]
    fn oversized_throat_is_a_domain_error() {
        assert!(matches!(
            angular_pitch(72.5, 145.0, 1.0),
            Err(GeometryError::Domain { .. })
        ));
        let mut d = presets::p2();
        d.d_th = 150.0;
        assert!(check_feasibility(&d).is_err());
    }

    #[test]
    fn pipe_count_floor() {
        assert_eq!(max_pipe_count(PI).unwrap(), 2);
        assert_eq!(max_pipe_count(TAU / 22.0).unwrap(), 22);
        assert_eq!(max_pipe_count(0.27).unwrap(), 23);
        assert!(max_pipe_count(0.0).is_err());
        assert!(max_pipe_count(-1.0).is_err());
    }

    #[test]
    fn near_radial_inclination_exceeds_request() {
        // At 89.9° the pitch is real but tiny only if the geometry allows; compare directly.
        let mut d = presets::p2();
        d.d_tan = 145.0;
        d.alpha = 89.9f64.to_radians();
        let beta = angular_pitch(72.5, 8.0, d.alpha).unwrap();
        let n_max = max_pipe_count(beta).unwrap();
        d.n_pipes = n_max + 1;
        let report = check_feasibility(&d).unwrap();
        assert_eq!(report.reason, FeasibilityReason::PitchExceedsRequest);
        d.n_pipes = n_max;
        assert!(check_feasibility(&d).unwrap().feasible);
    }

    #[test]
    fn acos_boundary_matches_closed_form() {
        let mut d = presets::p2();
        d.alpha = 20f64.to_radians();
        let report = check_feasibility(&d).unwrap();
        assert_eq!(report.reason, FeasibilityReason::AcosDomainViolation);
        let a = report.limiting_values.alpha_min_deg.unwrap().to_radians();
        assert!((a.tan().powi(2) - 2.0 * 8.0 / 72.5).abs() < 1e-9);
        let dmax = report.limiting_values.d_th_max_mm.unwrap();
        assert!((dmax - 72.5 * d.alpha.tan().powi(2) / 2.0).abs() < 1e-9);
    }

    #[test]
    fn pitch_limits_bracket_the_request() {
        let report = check_feasibility(&presets::p1()).unwrap();
        assert!(report.feasible);
        let lv = report.limiting_values;
        let a = lv.alpha_min_deg.unwrap();
        let dmax = lv.d_th_max_mm.unwrap();
        let at = |alpha_deg: f64, d: f64| {
            max_pipe_count(angular_pitch(75.0, d, alpha_deg.to_radians()).unwrap()).unwrap()
        };
        assert!(at(a + 1e-6, 8.0) >= 23);
        assert!(a < 61.7);
        assert!(at(61.7, dmax - 1e-6) >= 23);
        assert!(dmax > 8.0);
    }
}
