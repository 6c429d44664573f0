//! Conical-diffuser pressure-recovery maps.
//!
//! A map is a complete rectilinear grid over area ratio, length-to-diameter
//! ratio, throat blockage, throat Mach number and throat Reynolds number.
//! Lookups interpolate multilinearly, with the Reynolds axis in log10.

use std::collections::HashMap;
use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const HEADER: [&str; 6] = [
    "area_ratio",
    "l_over_d",
    "blockage",
    "mach_th",
    "re_d",
    "cp",
];
const AXES: usize = 5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MapError {
    #[error("{quantity} = {value} is outside the valid domain")]
    Domain { quantity: &'static str, value: f64 },
    #[error("header must be exactly `{}`, found `{found}`", HEADER.join(","))]
    Header { found: String },
    #[error("row {row}: expected 6 columns, found {found}")]
    MissingColumn { row: u64, found: usize },
    #[error("row {row}: column `{column}` is not a number: `{value}`")]
    NonNumeric {
        row: u64,
        column: &'static str,
        value: String,
    },
    #[error("row {row}: {reason}")]
    InvalidEntry { row: u64, reason: String },
    #[error("row {row}: duplicate grid point (first seen on row {first})")]
    Duplicate { row: u64, first: u64 },
    #[error("grid hole: no entry at area_ratio={}, l_over_d={}, blockage={}, mach_th={}, re_d={} ({present} of {expected} grid points present)", .point[0], .point[1], .point[2], .point[3], .point[4])]
    GridHole {
        point: [f64; 5],
        present: usize,
        expected: usize,
    },
    #[error("map has no entries")]
    Empty,
    #[error("CSV read error: {0}")]
    Csv(String),
}

/// Isentropic recovery of a diffuser with area ratio `area_ratio`.
pub fn ideal_cp(area_ratio: f64) -> Result<f64, MapError> {
    if !(area_ratio >= 1.0) {
        return Err(MapError::Domain {
            quantity: "area_ratio",
            value: area_ratio,
        });
    }
    Ok(1.0 - 1.0 / (area_ratio * area_ratio))
}

/// Fraction of the ideal recovery actually achieved.
pub fn effectiveness(cp: f64, area_ratio: f64) -> Result<f64, MapError> {
    if !(area_ratio > 1.0) {
        return Err(MapError::Domain {
            quantity: "area_ratio",
            value: area_ratio,
        });
    }
    Ok(cp / ideal_cp(area_ratio)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffuserMapEntry {
    pub area_ratio: f64,
    pub l_over_d: f64,
    pub blockage: f64,
    pub mach_th: f64,
    pub re_d: f64,
    pub cp: f64,
}

impl DiffuserMapEntry {
    fn key(&self) -> [f64; AXES] {
        [
            self.area_ratio,
            self.l_over_d,
            self.blockage,
            self.mach_th,
            self.re_d,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CpQuery {
    pub area_ratio: f64,
    pub l_over_d: f64,
    pub blockage: f64,
    pub mach_th: f64,
    pub re_d: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CpLookup {
    pub cp: f64,
    /// True when any query coordinate lay outside the grid and was moved
    /// onto its nearest face.
    pub clamped: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiffuserMap {
    /// Sorted node values per axis; Reynolds numbers are stored as given.
    axes: [Vec<f64>; AXES],
    /// Row-major over the axes, last axis fastest.
    cp: Vec<f64>,
}

fn parse_cell(row: u64, column: &'static str, text: &str) -> Result<f64, MapError> {
    text.trim()
        .parse::<f64>()
        .map_err(|_| MapError::NonNumeric {
            row,
            column,
            value: text.to_string(),
        })
}

fn validate_entry(row: u64, e: &DiffuserMapEntry) -> Result<(), MapError> {
    let invalid = |reason: String| Err(MapError::InvalidEntry { row, reason });
    if e.key().iter().chain([&e.cp]).any(|v| !v.is_finite()) {
        return invalid("all values must be finite".into());
    }
    if !(e.area_ratio > 1.0) {
        return invalid(format!("area_ratio {} must exceed 1", e.area_ratio));
    }
    if !(0.0..1.0).contains(&e.cp) {
        return invalid(format!("cp {} must lie in [0, 1)", e.cp));
    }
    if !(e.re_d > 0.0) {
        return invalid(format!("re_d {} must be positive", e.re_d));
    }
    Ok(())
}

/// Parse and validate a map from CSV. Row numbers in errors are file line numbers.
pub fn load_map(reader: impl Read) -> Result<DiffuserMap, MapError> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let header = csv
        .headers()
        .map_err(|e| MapError::Csv(e.to_string()))?
        .clone();
    if header.iter().map(str::trim).ne(HEADER) {
        return Err(MapError::Header {
            found: header.iter().collect::<Vec<_>>().join(","),
        });
    }

    let mut entries = Vec::new();
    let mut seen: HashMap<[u64; AXES], u64> = HashMap::new();
    for record in csv.records() {
        let record = record.map_err(|e| MapError::Csv(e.to_string()))?;
        let row = record.position().map_or(0, |p| p.line());
        if record.len() != HEADER.len() {
            return Err(MapError::MissingColumn {
                row,
                found: record.len(),
            });
        }
        let v: Vec<f64> = HEADER
            .iter()
            .zip(record.iter())
            .map(|(column, text)| parse_cell(row, column, text))
            .collect::<Result<_, _>>()?;
        let entry = DiffuserMapEntry {
            area_ratio: v[0],
            l_over_d: v[1],
            blockage: v[2],
            mach_th: v[3],
            re_d: v[4],
            cp: v[5],
        };
        validate_entry(row, &entry)?;
        if let Some(&first) = seen.get(&entry.key().map(f64::to_bits)) {
            return Err(MapError::Duplicate { row, first });
        }
        seen.insert(entry.key().map(f64::to_bits), row);
        entries.push(entry);
    }
    DiffuserMap::from_entries(&entries)
}

fn sorted_unique(mut values: Vec<f64>) -> Vec<f64> {
    values.sort_by(f64::total_cmp);
    values.dedup();
    values
}

impl DiffuserMap {
    /// Build a map from entries that form a complete grid, in any order.
    pub fn from_entries(entries: &[DiffuserMapEntry]) -> Result<Self, MapError> {
        if entries.is_empty() {
            return Err(MapError::Empty);
        }
        let axes: [Vec<f64>; AXES] =
            std::array::from_fn(|a| sorted_unique(entries.iter().map(|e| e.key()[a]).collect()));
        let expected: usize = axes.iter().map(Vec::len).product();
        let mut cp = vec![f64::NAN; expected];
        for e in entries {
            let key = e.key();
            let idx = (0..AXES).fold(0, |acc, a| {
                let node = axes[a]
                    .binary_search_by(|x| x.total_cmp(&key[a]))
                    .expect("own node");
                acc * axes[a].len() + node
            });
            cp[idx] = e.cp;
        }
        if let Some(hole) = cp.iter().position(|v| v.is_nan()) {
            let mut rest = hole;
            let mut point = [0.0; AXES];
            for a in (0..AXES).rev() {
                point[a] = axes[a][rest % axes[a].len()];
                rest /= axes[a].len();
            }
            return Err(MapError::GridHole {
                point,
                present: entries.len(),
                expected,
            });
        }
        Ok(Self { axes, cp })
    }

    pub fn len(&self) -> usize {
        self.cp.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cp.is_empty()
    }

    pub fn axes(&self) -> &[Vec<f64>; AXES] {
        &self.axes
    }

    pub fn entries(&self) -> Vec<DiffuserMapEntry> {
        let mut out = Vec::with_capacity(self.len());
        for (flat, &cp) in self.cp.iter().enumerate() {
            let mut rest = flat;
            let mut key = [0.0; AXES];
            for a in (0..AXES).rev() {
                key[a] = self.axes[a][rest % self.axes[a].len()];
                rest /= self.axes[a].len();
            }
            out.push(DiffuserMapEntry {
                area_ratio: key[0],
                l_over_d: key[1],
                blockage: key[2],
                mach_th: key[3],
                re_d: key[4],
                cp,
            });
        }
        out
    }

    /// CSV text with the canonical header, rows in grid order.
    pub fn to_csv(&self) -> String {
        let mut out = HEADER.join(",");
        out.push('\n');
        for e in self.entries() {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                e.area_ratio, e.l_over_d, e.blockage, e.mach_th, e.re_d, e.cp
            ));
        }
        out
    }

    /// Multilinear interpolation; out-of-grid coordinates are clamped.
    pub fn lookup_cp(&self, q: &CpQuery) -> CpLookup {
        let coords = [q.area_ratio, q.l_over_d, q.blockage, q.mach_th, q.re_d];
        let mut clamped = false;
        // Per axis: lower node index and weight of the upper node.
        let mut cells = [(0usize, 0.0f64); AXES];
        for a in 0..AXES {
            let nodes = &self.axes[a];
            let log = a == 4;
            let tf = |x: f64| if log { x.log10() } else { x };
            let (lo, hi) = (nodes[0], nodes[nodes.len() - 1]);
            let x = coords[a];
            let x = if x.is_nan() || x < lo {
                clamped = true;
                lo
            } else if x > hi {
                clamped = true;
                hi
            } else {
                x
            };
            if nodes.len() == 1 {
                cells[a] = (0, 0.0);
                continue;
            }
            let upper = nodes.partition_point(|&n| n <= x).clamp(1, nodes.len() - 1);
            let (n0, n1) = (nodes[upper - 1], nodes[upper]);
            let t = ((tf(x) - tf(n0)) / (tf(n1) - tf(n0))).clamp(0.0, 1.0);
            cells[a] = (upper - 1, t);
        }
        let mut cp = 0.0;
        for corner in 0..(1usize << AXES) {
            let mut weight = 1.0;
            let mut flat = 0;
            for (a, &(i0, t)) in cells.iter().enumerate() {
                let up = (corner >> a) & 1 == 1;
                let len = self.axes[a].len();
                if up && len == 1 {
                    weight = 0.0;
                }
                weight *= if up { t } else { 1.0 - t };
                flat = flat * len + (i0 + usize::from(up)).min(len - 1);
            }
            if weight != 0.0 {
                cp += weight * self.cp[flat];
            }
        }
        CpLookup { cp, clamped }
    }
}

pub fn lookup_cp(map: &DiffuserMap, query: &CpQuery) -> CpLookup {
    map.lookup_cp(query)
}

/// Analytic recovery shape used to generate the bundled synthetic map.
///
/// Effectiveness peaks at a 6° cone and falls with blockage, supersonic-leaning
/// throat Mach number and low Reynolds number. The numbers are a plausible
/// demonstration surface, not measured data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticShape {
    pub peak_effectiveness: f64,
    pub optimal_two_theta_deg: f64,
    pub cone_angle_penalty: f64,
    pub blockage_penalty: f64,
    pub mach_penalty: f64,
    pub mach_onset: f64,
    pub reynolds_slope: f64,
}

impl SyntheticShape {
    pub const DEFAULT: Self = Self {
        peak_effectiveness: 0.928,
        optimal_two_theta_deg: 6.0,
        cone_angle_penalty: 0.0017,
        blockage_penalty: 2.894,
        mach_penalty: 0.0,
        mach_onset: 0.5,
        reynolds_slope: 0.01,
    };

    pub fn cp(&self, q: &CpQuery) -> f64 {
        let ideal = ideal_cp(q.area_ratio).unwrap_or(0.0);
        let two_theta = 2.0
            * ((q.area_ratio.sqrt() - 1.0) / (2.0 * q.l_over_d))
                .atan()
                .to_degrees();
        let eff = self.peak_effectiveness
            - self.cone_angle_penalty * (two_theta - self.optimal_two_theta_deg).powi(2)
            - self.blockage_penalty * q.blockage
            - self.mach_penalty * (q.mach_th - self.mach_onset).max(0.0).powi(2)
            + self.reynolds_slope * (q.re_d / 1e5).log10();
        (ideal * eff).clamp(0.0, 0.98 * ideal)
    }

    /// Sample the shape on the bundled grid.
    pub fn tabulate(&self) -> DiffuserMap {
        let mut entries = Vec::new();
        for &area_ratio in SYNTHETIC_GRID.area_ratio {
            for &l_over_d in SYNTHETIC_GRID.l_over_d {
                for &blockage in SYNTHETIC_GRID.blockage {
                    for &mach_th in SYNTHETIC_GRID.mach_th {
                        for &re_d in SYNTHETIC_GRID.re_d {
                            let q = CpQuery {
                                area_ratio,
                                l_over_d,
                                blockage,
                                mach_th,
                                re_d,
                            };
                            entries.push(DiffuserMapEntry {
                                area_ratio,
                                l_over_d,
                                blockage,
                                mach_th,
                                re_d,
                                cp: self.cp(&q),
                            });
                        }
                    }
                }
            }
        }
        DiffuserMap::from_entries(&entries).expect("complete grid")
    }
}

impl Default for SyntheticShape {
    fn default() -> Self {
        Self::DEFAULT
    }
}

struct Grid {
    area_ratio: &'static [f64],
    l_over_d: &'static [f64],
    blockage: &'static [f64],
    mach_th: &'static [f64],
    re_d: &'static [f64],
}

const SYNTHETIC_GRID: Grid = Grid {
    area_ratio: &[1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 5.0],
    l_over_d: &[2.0, 4.0, 6.0, 8.0, 10.0, 12.0, 16.0],
    blockage: &[0.0, 0.04, 0.08, 0.12, 0.16, 0.2, 0.3, 0.4],
    mach_th: &[0.2, 0.4, 0.6, 0.8, 1.0],
    re_d: &[1e4, 1e5, 1e6],
};

/// The bundled synthetic demonstration map.
pub const SYNTHETIC_MAP_CSV: &str = include_str!("../data/synthetic_map.csv");

pub fn synthetic_map() -> DiffuserMap {
    load_map(SYNTHETIC_MAP_CSV.as_bytes()).expect("bundled map is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    const ONE: &str = "area_ratio,l_over_d,blockage,mach_th,re_d,cp\n2,4,0.02,0.5,1e5,0.6\n";

    fn q(area_ratio: f64, l_over_d: f64, blockage: f64, mach_th: f64, re_d: f64) -> CpQuery {
        CpQuery {
            area_ratio,
            l_over_d,
            blockage,
            mach_th,
            re_d,
        }
    }

    #[test]
    fn ideal_recovery() {
        assert_eq!(ideal_cp(1.0).unwrap(), 0.0);
        assert_eq!(ideal_cp(4.0).unwrap(), 0.9375);
        assert!(ideal_cp(0.5).is_err());
        assert!(ideal_cp(1e8).unwrap() < 1.0);
    }

    #[test]
    fn effectiveness_identities() {
        for ar in [1.5, 2.0, 4.0, 8.0] {
            assert!((effectiveness(ideal_cp(ar).unwrap(), ar).unwrap() - 1.0).abs() < 1e-15);
        }
        assert_eq!(effectiveness(0.0, 4.0).unwrap(), 0.0);
        assert!((effectiveness(0.78, 4.0).unwrap() - 0.832).abs() < 1e-12);
        assert!(effectiveness(0.5, 1.0).is_err());
    }

    #[test]
    fn single_entry_map() {
        let map = load_map(ONE.as_bytes()).unwrap();
        assert_eq!(map.len(), 1);
        let hit = map.lookup_cp(&q(2.0, 4.0, 0.02, 0.5, 1e5));
        assert_eq!(
            hit,
            CpLookup {
                cp: 0.6,
                clamped: false
            }
        );
        let off = map.lookup_cp(&q(3.0, 4.0, 0.02, 0.5, 1e5));
        assert_eq!(
            off,
            CpLookup {
                cp: 0.6,
                clamped: true
            }
        );
    }

    #[test]
    fn duplicate_names_rows() {
        let text = format!("{ONE}2,4,0.02,0.5,1e5,0.7\n");
        assert_eq!(
            load_map(text.as_bytes()).unwrap_err(),
            MapError::Duplicate { row: 3, first: 2 }
        );
    }

    #[test]
    fn malformed_rows() {
        let bad = "area_ratio,l_over_d,blockage,mach_th,re_d,cp\n2,4,0.02,0.5,1e5\n";
        assert_eq!(
            load_map(bad.as_bytes()).unwrap_err(),
            MapError::MissingColumn { row: 2, found: 5 }
        );
        let bad = "area_ratio,l_over_d,blockage,mach_th,re_d,cp\n2,x,0.02,0.5,1e5,0.5\n";
        assert!(matches!(
            load_map(bad.as_bytes()).unwrap_err(),
            MapError::NonNumeric {
                row: 2,
                column: "l_over_d",
                ..
            }
        ));
        let bad = "area_ratio,l_over_d,blockage,mach,re_d,cp\n";
        assert!(matches!(
            load_map(bad.as_bytes()).unwrap_err(),
            MapError::Header { .. }
        ));
        let hole = format!("{ONE}3,4,0.02,0.5,1e5,0.7\n3,6,0.02,0.5,1e5,0.7\n");
        assert!(matches!(
            load_map(hole.as_bytes()).unwrap_err(),
            MapError::GridHole { .. }
        ));
    }

    #[test]
    fn midpoint_is_mean() {
        let text = format!("{ONE}3,4,0.02,0.5,1e5,0.8\n");
        let map = load_map(text.as_bytes()).unwrap();
        let mid = map.lookup_cp(&q(2.5, 4.0, 0.02, 0.5, 1e5));
        assert!((mid.cp - 0.7).abs() < 1e-15 && !mid.clamped);
    }

    #[test]
    fn reynolds_axis_is_logarithmic() {
        let text = "area_ratio,l_over_d,blockage,mach_th,re_d,cp\n\
                    2,4,0,0.5,1e4,0.4\n2,4,0,0.5,1e6,0.6\n";
        let map = load_map(text.as_bytes()).unwrap();
        assert!((map.lookup_cp(&q(2.0, 4.0, 0.0, 0.5, 1e5)).cp - 0.5).abs() < 1e-15);
    }

    #[test]
    fn bundled_map_matches_its_generator() {
        let shipped = synthetic_map();
        assert_eq!(shipped, SyntheticShape::DEFAULT.tabulate());
        assert_eq!(SYNTHETIC_MAP_CSV, shipped.to_csv());
    }
}

/// Rewrites the bundled CSV from [`SyntheticShape::DEFAULT`]; run after
/// changing the shape with `cargo test -- --ignored regenerate_bundled_map`.
#[cfg(test)]
#[test]
#[ignore]
fn regenerate_bundled_map() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/synthetic_map.csv");
    std::fs::write(path, SyntheticShape::DEFAULT.tabulate().to_csv()).unwrap();
}
