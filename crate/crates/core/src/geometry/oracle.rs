//! Sampled ground truth for the pipe-count limit.
//!
//! Two straight pipes of diameter `d_th` sit with their axes tangent to the
//! `R_tan` circle, one pitch apart. The reference pipe's throat section lies
//! `R_tan·tan α` downstream of its tangency point. Walking the neighbour's
//! outer wall at a fixed angular step, we locate where it crosses the
//! reference pipe's inner wall; a pipe count fits when that crossing is at
//! or upstream of the throat section.

use std::f64::consts::{FRAC_PI_2, TAU};

use super::{GeometryError, PipeDiffuserDesign};

pub const MIN_SAMPLES_PER_REVOLUTION: f64 = 64.0;
const MAX_PIPES: u32 = 100_000;

/// Axial station (along the reference axis) of the wall crossing, found by
/// sampling the neighbour's wall in polar angle.
fn sampled_crossing(r_tan: f64, d_th: f64, pitch: f64, step: f64) -> Option<f64> {
    let inner = r_tan - 0.5 * d_th;
    let outer = r_tan + 0.5 * d_th;
    // Neighbour's outer wall: the line at distance `outer` with normal angle `pitch`.
    let wall_point = |theta: f64| {
        let rho = outer / (theta - pitch).cos();
        (rho * theta.cos(), rho * theta.sin())
    };
    let gap = |theta: f64| wall_point(theta).0 - inner;

    let start = pitch - FRAC_PI_2 + 0.5 * step;
    let end = pitch + FRAC_PI_2 - 0.5 * step;
    let mut theta_prev = start;
    let mut gap_prev = gap(start);
    let mut theta = start + step;
    while theta < end {
        let g = gap(theta);
        if (g <= 0.0) != (gap_prev <= 0.0) {
            let t = gap_prev / (gap_prev - g);
            let root = theta_prev + t * (theta - theta_prev);
            let (_, y) = wall_point(root);
            return (y > 0.0).then_some(y);
        }
        theta_prev = theta;
        gap_prev = g;
        theta += step;
    }
    None
}

/// Largest pipe count whose neighbouring walls meet at or before the throat.
///
/// `angular_resolution` is the sampling step in radians; at least
/// [`MIN_SAMPLES_PER_REVOLUTION`] samples per turn are required.
pub fn oracle_max_pipe_count(
    design: &PipeDiffuserDesign,
    angular_resolution: f64,
) -> Result<u32, GeometryError> {
    if !(angular_resolution > 0.0 && TAU / angular_resolution >= MIN_SAMPLES_PER_REVOLUTION) {
        return Err(GeometryError::Config(format!(
            "angular resolution {angular_resolution} rad gives fewer than \
             {MIN_SAMPLES_PER_REVOLUTION} samples per revolution"
        )));
    }
    let r_tan = design.r_tan();
    let d_th = design.d_th;
    if !(d_th > 0.0 && r_tan > 0.5 * d_th) {
        return Err(super::domain("d_th", d_th));
    }
    let throat = r_tan * design.alpha.tan();

    let mut best = 0;
    for n in 2..=MAX_PIPES {
        let pitch = TAU / n as f64;
        let fits =
            sampled_crossing(r_tan, d_th, pitch, angular_resolution).is_some_and(|y| y <= throat);
        if fits {
            best = n;
        } else if best > 0 {
            break;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::presets;

    const RES: f64 = TAU / 3600.0;

    #[test]
    fn coarse_resolution_rejected() {
        let d = presets::p2();
        assert!(oracle_max_pipe_count(&d, TAU / 32.0).is_err());
        assert!(oracle_max_pipe_count(&d, TAU / 64.0).is_ok());
    }

    #[test]
    fn thinner_pipes_pack_tighter() {
        let mut d = presets::p2();
        let wide = oracle_max_pipe_count(&d, RES).unwrap();
        d.d_th *= 0.5;
        let thin = oracle_max_pipe_count(&d, RES).unwrap();
        assert!(thin > wide, "{thin} vs {wide}");
    }

    #[test]
    fn scale_invariant() {
        let mut d = presets::p1();
        let base = oracle_max_pipe_count(&d, RES).unwrap();
        d.d_tan *= 2.0;
        d.d_th *= 2.0;
        assert_eq!(oracle_max_pipe_count(&d, RES).unwrap(), base);
    }

    #[test]
    fn crossing_moves_downstream_as_pitch_shrinks() {
        let a = sampled_crossing(72.5, 8.0, 0.3, RES).unwrap();
        let b = sampled_crossing(72.5, 8.0, 0.1, RES).unwrap();
        assert!(b > a);
    }
}
