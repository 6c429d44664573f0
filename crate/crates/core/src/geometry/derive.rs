use serde::{Deserialize, Serialize};

use super::pitch::{angular_pitch, max_pipe_count};
use super::{Authoritative, PipeDiffuserDesign};

/// Relative mismatch above which a declared value is flagged.
pub const FLAG_TOLERANCE: f64 = 0.02;

/// A declared value that disagrees with the geometry derived from the
/// authoritative inputs. `relative` is measured against the derived value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyFlag {
    pub name: String,
    pub declared: f64,
    pub derived: f64,
    pub relative: f64,
}

/// Quantities following from a design. Lengths mm, areas mm², angles rad
/// unless the field name says otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivedGeometry {
    /// Minimum pitch from the zero-throat-length correlation; `None` when
    /// the correlation has no real solution.
    pub beta: Option<f64>,
    pub n_max: u32,
    pub a_th_total: f64,
    pub ar_actual: f64,
    pub length_actual: f64,
    pub d4_actual: f64,
    /// Leading-edge base circle (tangency circle).
    pub r_3: f64,
    pub r_3a: f64,
    /// Radius where the walls of adjacent pipes meet at the actual pitch.
    pub r_3b: f64,
    /// Distance along the pipe axis from the tangency point to the throat:
    /// where adjacent walls meet at the actual pitch, capped at `R_tan·tan α`.
    pub throat_station: f64,
    pub outlet_diameter: f64,
    /// Angle of the pipe axis from radial at the leading-edge radius, degrees.
    pub leading_edge_angle_deg: f64,
    pub consistency_flags: Vec<ConsistencyFlag>,
}

/// Axial position (from the tangency point) where the outer wall of the
/// neighbour at `pitch` crosses the inner wall of the reference pipe.
pub(crate) fn wall_intersection_station(r_tan: f64, d_th: f64, pitch: f64) -> f64 {
    (r_tan + 0.5 * d_th - (r_tan - 0.5 * d_th) * pitch.cos()) / pitch.sin()
}

pub(crate) fn cone_area_ratio(d_th: f64, length: f64, two_theta: f64) -> f64 {
    let d_out = d_th + 2.0 * length * (0.5 * two_theta).tan();
    (d_out / d_th).powi(2)
}

pub(crate) fn cone_length(d_th: f64, area_ratio: f64, two_theta: f64) -> f64 {
    d_th * (area_ratio.sqrt() - 1.0) / (2.0 * (0.5 * two_theta).tan())
}

fn check(flags: &mut Vec<ConsistencyFlag>, name: &str, declared: Option<f64>, derived: f64) {
    if let Some(declared) = declared {
        let relative = (declared - derived).abs() / derived.abs();
        if relative > FLAG_TOLERANCE {
            flags.push(ConsistencyFlag {
                name: name.to_string(),
                declared,
                derived,
                relative,
            });
        }
    }
}

pub fn derive_geometry(design: &PipeDiffuserDesign) -> DerivedGeometry {
    let r_tan = design.r_tan();
    let d_th = design.d_th;
    let beta = angular_pitch(r_tan, d_th, design.alpha).ok();
    let n_max = beta.and_then(|b| max_pipe_count(b).ok()).unwrap_or(0);

    let a_th_total = design.n_pipes as f64 * std::f64::consts::PI * d_th * d_th / 4.0;
    let (ar_actual, length_actual) = match design.authoritative {
        Authoritative::Length => {
            let l = design.length.expect("validated design");
            (cone_area_ratio(d_th, l, design.two_theta), l)
        }
        Authoritative::AreaRatio => {
            let ar = design.area_ratio.expect("validated design");
            (ar, cone_length(d_th, ar, design.two_theta))
        }
    };

    // With few, widely spaced pipes the walls meet far downstream (or never);
    // the throat then sits at the correlation's station.
    let throat_station =
        wall_intersection_station(r_tan, d_th, design.pitch()).min(r_tan * design.alpha.tan());
    let r_3b = (r_tan - 0.5 * d_th).hypot(throat_station);
    let outlet_diameter = d_th * ar_actual.sqrt();
    let outlet_axis_radius = r_tan.hypot(throat_station + length_actual);
    let d4_actual = 2.0 * (outlet_axis_radius + 0.5 * outlet_diameter);

    let r_3 = r_tan;
    let r_3a = design.r3a_over_r3 * r_3;
    let leading_edge_angle_deg = (r_tan / r_3a).min(1.0).asin().to_degrees();

    let mut consistency_flags = Vec::new();
    match design.authoritative {
        Authoritative::Length => check(
            &mut consistency_flags,
            "area_ratio",
            design.area_ratio,
            ar_actual,
        ),
        Authoritative::AreaRatio => check(
            &mut consistency_flags,
            "length_mm",
            design.length,
            length_actual,
        ),
    }
    check(&mut consistency_flags, "d4_mm", Some(design.d4), d4_actual);

    DerivedGeometry {
        beta,
        n_max,
        a_th_total,
        ar_actual,
        length_actual,
        d4_actual,
        r_3,
        r_3a,
        r_3b,
        throat_station,
        outlet_diameter,
        leading_edge_angle_deg,
        consistency_flags,
    }
}

impl DerivedGeometry {
    pub fn has_flag(&self, name: &str) -> bool {
        self.consistency_flags.iter().any(|f| f.name == name)
    }

    /// Axial distance from the tangency point to where the pipe stops
    /// cutting the solid on the upstream side.
    pub fn upstream_station(&self) -> f64 {
        -(self.r_3a * self.r_3a - self.r_3 * self.r_3)
            .max(0.0)
            .sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::presets;
    use approx::assert_relative_eq;

    #[test]
    fn p3_cone_is_consistent_with_declared_ratio() {
        let g = derive_geometry(&presets::p3());
        // (8 + 90·tan 5°)² / 64
        assert_relative_eq!(g.ar_actual, 3.937_238_001_036_009, max_relative = 1e-12);
        assert!(!g.has_flag("area_ratio"));
    }

    #[test]
    fn p1_cone_conflicts_with_declared_ratio() {
        let g = derive_geometry(&presets::p1());
        assert_relative_eq!(g.ar_actual, 3.051_348_162_388_893, max_relative = 1e-12);
        assert!(g.has_flag("area_ratio"));
    }

    #[test]
    fn straight_pipe_limit() {
        let mut d = presets::p2();
        d.two_theta = 1e-12;
        let g = derive_geometry(&d);
        assert!((g.ar_actual - 1.0).abs() < 1e-9);
    }

    #[test]
    fn area_ratio_mode_inverts_length_mode() {
        let mut d = presets::p2();
        d.authoritative = Authoritative::AreaRatio;
        d.area_ratio = Some(3.5);
        let g = derive_geometry(&d);
        assert_relative_eq!(
            cone_area_ratio(d.d_th, g.length_actual, d.two_theta),
            3.5,
            max_relative = 1e-12
        );
    }

    #[test]
    fn throat_area_total() {
        let g = derive_geometry(&presets::p2());
        assert_relative_eq!(
            g.a_th_total,
            22.0 * std::f64::consts::PI * 16.0,
            max_relative = 1e-15
        );
    }

    #[test]
    fn layout_outlet_diameter_close_to_declared() {
        for (id, d) in presets::all() {
            let g = derive_geometry(&d);
            assert!(!g.has_flag("d4_mm"), "{id}: {g:?}");
        }
    }

    #[test]
    fn idempotent_when_derived_values_declared() {
        for (_, mut d) in presets::all() {
            let g = derive_geometry(&d);
            d.area_ratio = Some(g.ar_actual);
            d.length = Some(g.length_actual);
            d.d4 = g.d4_actual;
            assert!(derive_geometry(&d).consistency_flags.is_empty());
        }
    }
}
