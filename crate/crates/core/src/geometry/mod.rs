//! Pipe-diffuser geometry.
//!
//! Each pipe is a straight drilled passage whose axis is tangent to the
//! circle of radius `R_tan = D_tan/2`. Adjacent pipes overlap near the
//! leading edge; the passage closes (geometric throat) where the walls of
//! neighbouring pipes meet. Lengths are millimetres throughout this module;
//! angles are radians internally and degrees in design files.

mod derive;
mod mesh;
mod oracle;
mod pitch;
mod stl;

pub use derive::{derive_geometry, ConsistencyFlag, DerivedGeometry, FLAG_TOLERANCE};
pub use mesh::{build_surface_mesh, DiffuserSolid, MeshError, TriangleMesh};
pub use oracle::{oracle_max_pipe_count, MIN_SAMPLES_PER_REVOLUTION};
pub use pitch::{
    acos_argument, angular_pitch, check_feasibility, max_pipe_count, FeasibilityReason,
    FeasibilityReport, LimitingValues,
};
pub use stl::{export_stl, parse_stl, StlError};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default diffuser passage height: the impeller exit blade height.
pub const DEFAULT_PASSAGE_HEIGHT_MM: f64 = 7.25;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("{quantity} out of domain: {value}")]
    Domain { quantity: &'static str, value: f64 },
    #[error("arccosine argument {argument} exceeds 1: no real pitch exists")]
    AcosDomainViolation { argument: f64 },
    #[error("non-positive angular pitch {beta} rad")]
    NonPositivePitch { beta: f64 },
    #[error("invalid design: {0}")]
    InvalidDesign(String),
    #[error("configuration error: {0}")]
    Config(String),
}

pub(crate) fn domain(quantity: &'static str, value: f64) -> GeometryError {
    GeometryError::Domain { quantity, value }
}

/// Which of channel length or area ratio fixes the cone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Authoritative {
    Length,
    AreaRatio,
}

/// Declared pipe-diffuser parameters. Angles in radians, lengths in mm.
#[derive(Debug, Clone, PartialEq)]
pub struct PipeDiffuserDesign {
    pub n_pipes: u32,
    pub d_th: f64,
    pub alpha: f64,
    pub two_theta: f64,
    pub length: Option<f64>,
    pub area_ratio: Option<f64>,
    pub authoritative: Authoritative,
    pub d_tan: f64,
    pub r3a_over_r3: f64,
    pub d4: f64,
    pub passage_height: f64,
}

/// On-disk form of [`PipeDiffuserDesign`]; angles in degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignFile {
    pub n_pipes: u32,
    pub d_th_mm: f64,
    pub alpha_deg: f64,
    pub two_theta_deg: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length_mm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub area_ratio: Option<f64>,
    pub authoritative: Authoritative,
    pub d_tan_mm: f64,
    pub r3a_over_r3: f64,
    pub d4_mm: f64,
    #[serde(default = "default_passage_height")]
    pub passage_height_mm: f64,
}

fn default_passage_height() -> f64 {
    DEFAULT_PASSAGE_HEIGHT_MM
}

impl From<&PipeDiffuserDesign> for DesignFile {
    fn from(d: &PipeDiffuserDesign) -> Self {
        DesignFile {
            n_pipes: d.n_pipes,
            d_th_mm: d.d_th,
            alpha_deg: d.alpha.to_degrees(),
            two_theta_deg: d.two_theta.to_degrees(),
            length_mm: d.length,
            area_ratio: d.area_ratio,
            authoritative: d.authoritative,
            d_tan_mm: d.d_tan,
            r3a_over_r3: d.r3a_over_r3,
            d4_mm: d.d4,
            passage_height_mm: d.passage_height,
        }
    }
}

impl TryFrom<DesignFile> for PipeDiffuserDesign {
    type Error = GeometryError;

    fn try_from(f: DesignFile) -> Result<Self, Self::Error> {
        let design = PipeDiffuserDesign {
            n_pipes: f.n_pipes,
            d_th: f.d_th_mm,
            alpha: f.alpha_deg.to_radians(),
            two_theta: f.two_theta_deg.to_radians(),
            length: f.length_mm,
            area_ratio: f.area_ratio,
            authoritative: f.authoritative,
            d_tan: f.d_tan_mm,
            r3a_over_r3: f.r3a_over_r3,
            d4: f.d4_mm,
            passage_height: f.passage_height_mm,
        };
        design.validate()?;
        Ok(design)
    }
}

impl PipeDiffuserDesign {
    /// Parses and validates a design JSON document.
    pub fn from_json(text: &str) -> Result<Self, DesignParseError> {
        let file: DesignFile = serde_json::from_str(text)?;
        Ok(Self::try_from(file)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&DesignFile::from(self)).expect("design serializes")
    }

    pub fn r_tan(&self) -> f64 {
        0.5 * self.d_tan
    }

    pub fn pitch(&self) -> f64 {
        std::f64::consts::TAU / self.n_pipes as f64
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let positive = |name: &'static str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(domain(name, v))
            }
        };
        if self.n_pipes < 2 {
            return Err(domain("n_pipes", self.n_pipes as f64));
        }
        positive("d_th", self.d_th)?;
        positive("d_tan", self.d_tan)?;
        positive("d4", self.d4)?;
        positive("r3a_over_r3", self.r3a_over_r3)?;
        positive("passage_height", self.passage_height)?;
        if !(self.alpha > 0.0 && self.alpha < std::f64::consts::FRAC_PI_2) {
            return Err(domain("alpha", self.alpha.to_degrees()));
        }
        if !(self.two_theta > 0.0 && self.two_theta < 30f64.to_radians()) {
            return Err(domain("two_theta", self.two_theta.to_degrees()));
        }
        if let Some(l) = self.length {
            positive("length", l)?;
        }
        if let Some(ar) = self.area_ratio {
            if !(ar.is_finite() && ar >= 1.0) {
                return Err(domain("area_ratio", ar));
            }
        }
        match self.authoritative {
            Authoritative::Length if self.length.is_none() => Err(GeometryError::InvalidDesign(
                "length is authoritative but length_mm is missing".into(),
            )),
            Authoritative::AreaRatio if self.area_ratio.is_none() => {
                Err(GeometryError::InvalidDesign(
                    "area_ratio is authoritative but area_ratio is missing".into(),
                ))
            }
            _ => Ok(()),
        }
    }

    /// Names accepted by [`PipeDiffuserDesign::with_parameter`].
    pub const PARAMETERS: [&'static str; 10] = [
        "n_pipes",
        "d_th_mm",
        "alpha_deg",
        "two_theta_deg",
        "length_mm",
        "area_ratio",
        "d_tan_mm",
        "r3a_over_r3",
        "d4_mm",
        "passage_height_mm",
    ];

    /// Copy with one file-level parameter replaced (file units).
    pub fn with_parameter(&self, name: &str, value: f64) -> Result<Self, GeometryError> {
        let mut d = self.clone();
        match name {
            "n_pipes" => {
                if value.fract() != 0.0 || value < 0.0 {
                    return Err(domain("n_pipes", value));
                }
                d.n_pipes = value as u32;
            }
            "d_th_mm" => d.d_th = value,
            "alpha_deg" => d.alpha = value.to_radians(),
            "two_theta_deg" => d.two_theta = value.to_radians(),
            "length_mm" => d.length = Some(value),
            "area_ratio" => d.area_ratio = Some(value),
            "d_tan_mm" => d.d_tan = value,
            "r3a_over_r3" => d.r3a_over_r3 = value,
            "d4_mm" => d.d4 = value,
            "passage_height_mm" => d.passage_height = value,
            other => {
                return Err(GeometryError::Config(format!(
                    "unknown parameter `{other}`; valid: {}",
                    Self::PARAMETERS.join(", ")
                )))
            }
        }
        Ok(d)
    }

    /// File-unit value of a parameter, if set.
    pub fn parameter(&self, name: &str) -> Option<f64> {
        match name {
            "n_pipes" => Some(self.n_pipes as f64),
            "d_th_mm" => Some(self.d_th),
            "alpha_deg" => Some(self.alpha.to_degrees()),
            "two_theta_deg" => Some(self.two_theta.to_degrees()),
            "length_mm" => self.length,
            "area_ratio" => self.area_ratio,
            "d_tan_mm" => Some(self.d_tan),
            "r3a_over_r3" => Some(self.r3a_over_r3),
            "d4_mm" => Some(self.d4),
            "passage_height_mm" => Some(self.passage_height),
            _ => None,
        }
    }
}

#[derive(Debug, Error)]
pub enum DesignParseError {
    #[error("malformed design JSON at line {line}, column {column}: {message}")]
    Json {
        line: usize,
        column: usize,
        message: String,
    },
    #[error(transparent)]
    Invalid(#[from] GeometryError),
}

impl From<serde_json::Error> for DesignParseError {
    fn from(e: serde_json::Error) -> Self {
        DesignParseError::Json {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}

/// The four designs of the pipe-diffuser study, length-authoritative.
pub mod presets {
    use super::{Authoritative, PipeDiffuserDesign, DEFAULT_PASSAGE_HEIGHT_MM};

    fn base() -> PipeDiffuserDesign {
        PipeDiffuserDesign {
            n_pipes: 22,
            d_th: 8.0,
            alpha: 61.7f64.to_radians(),
            two_theta: 6f64.to_radians(),
            length: Some(57.0),
            area_ratio: Some(4.0),
            authoritative: Authoritative::Length,
            d_tan: 145.0,
            r3a_over_r3: 1.03,
            d4: 250.0,
            passage_height: DEFAULT_PASSAGE_HEIGHT_MM,
        }
    }

    pub fn p1() -> PipeDiffuserDesign {
        PipeDiffuserDesign {
            n_pipes: 23,
            d_tan: 150.0,
            d4: 255.0,
            ..base()
        }
    }

    pub fn p2() -> PipeDiffuserDesign {
        base()
    }

    pub fn p3() -> PipeDiffuserDesign {
        PipeDiffuserDesign {
            length: Some(45.0),
            two_theta: 10f64.to_radians(),
            d4: 232.0,
            ..base()
        }
    }

    pub fn p4() -> PipeDiffuserDesign {
        PipeDiffuserDesign {
            r3a_over_r3: 1.01,
            ..base()
        }
    }

    /// `(id, design)` pairs in study order.
    pub fn all() -> Vec<(&'static str, PipeDiffuserDesign)> {
        vec![("P1", p1()), ("P2", p2()), ("P3", p3()), ("P4", p4())]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_design_files_match_presets() {
        let root = concat!(env!("CARGO_MANIFEST_DIR"), "/../../designs");
        for (id, preset) in presets::all() {
            let path = format!("{root}/{}.json", id.to_lowercase());
            let d = PipeDiffuserDesign::from_json(&std::fs::read_to_string(path).unwrap()).unwrap();
            assert_eq!(DesignFile::from(&d).n_pipes, preset.n_pipes);
            for name in PipeDiffuserDesign::PARAMETERS {
                let (a, b) = (d.parameter(name), preset.parameter(name));
                assert!(
                    a.zip(b)
                        .map_or(a == b, |(a, b)| (a - b).abs() <= 1e-12 * b.abs()),
                    "{id} {name}"
                );
            }
        }
    }

    #[test]
    fn design_json_round_trip() {
        let d = presets::p1();
        let back = PipeDiffuserDesign::from_json(&d.to_json()).unwrap();
        assert_eq!(back.n_pipes, 23);
        assert!((back.alpha - d.alpha).abs() < 1e-15);
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = r#"{"n_pipes": 22, "d_th_mm": 8, "alpha_deg": 61.7, "two_theta_deg": 6,
            "length_mm": 57, "authoritative": "length", "d_tan_mm": 145, "r3a_over_r3": 1.03,
            "d4_mm": 250, "colour": "red"}"#;
        assert!(matches!(
            PipeDiffuserDesign::from_json(text),
            Err(DesignParseError::Json { .. })
        ));
    }

    #[test]
    fn passage_height_defaults() {
        let text = r#"{"n_pipes": 22, "d_th_mm": 8, "alpha_deg": 61.7, "two_theta_deg": 6,
            "length_mm": 57, "authoritative": "length", "d_tan_mm": 145, "r3a_over_r3": 1.03,
            "d4_mm": 250}"#;
        let d = PipeDiffuserDesign::from_json(text).unwrap();
        assert_eq!(d.passage_height, DEFAULT_PASSAGE_HEIGHT_MM);
    }

    #[test]
    fn missing_authoritative_value_rejected() {
        let text = r#"{"n_pipes": 22, "d_th_mm": 8, "alpha_deg": 61.7, "two_theta_deg": 6,
            "area_ratio": 4, "authoritative": "length", "d_tan_mm": 145, "r3a_over_r3": 1.03,
            "d4_mm": 250}"#;
        assert!(matches!(
            PipeDiffuserDesign::from_json(text),
            Err(DesignParseError::Invalid(GeometryError::InvalidDesign(_)))
        ));
    }

    #[test]
    fn invariants_enforced() {
        let mut d = presets::p2();
        d.alpha = 95f64.to_radians();
        assert!(d.validate().is_err());
        let mut d = presets::p2();
        d.n_pipes = 1;
        assert!(d.validate().is_err());
        let mut d = presets::p2();
        d.two_theta = 31f64.to_radians();
        assert!(d.validate().is_err());
    }

    #[test]
    fn with_parameter_rejects_unknown_name() {
        let err = presets::p2().with_parameter("beta", 1.0).unwrap_err();
        assert!(err.to_string().contains("d_tan_mm"));
    }
}

/// Rewrites `designs/*.json` at the workspace root from the presets; run with
/// `cargo test -- --ignored regenerate_design_files`.
#[cfg(test)]
#[test]
#[ignore]
fn regenerate_design_files() {
    let root = concat!(env!("CARGO_MANIFEST_DIR"), "/../../designs");
    let round = |x: f64| (x * 1e9).round() / 1e9;
    for (id, d) in presets::all() {
        let mut file = DesignFile::from(&d);
        file.alpha_deg = round(file.alpha_deg);
        file.two_theta_deg = round(file.two_theta_deg);
        let path = format!("{root}/{}.json", id.to_lowercase());
        std::fs::write(path, serde_json::to_string_pretty(&file).unwrap() + "\n").unwrap();
    }
}
