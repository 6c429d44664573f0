//! One-factor-at-a-time sweeps and multi-design comparison tables.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diffusermap::DiffuserMap;
use crate::geometry::{
    check_feasibility, derive_geometry, DerivedGeometry, FeasibilityReport, GeometryError,
    PipeDiffuserDesign,
};
use crate::meanline::{
    evaluate_point, Closures, CompressorSpec, CpSource, StagePoint, DESIGN_MDOT,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExplorerError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("csv output: {0}")]
    Csv(String),
}

/// Everything shared by the evaluations of one study.
#[derive(Debug, Clone, Copy)]
pub struct StudyContext<'a> {
    pub spec: &'a CompressorSpec,
    pub closures: &'a Closures,
    pub map: &'a DiffuserMap,
    pub mdot: f64,
    pub speed_fraction: f64,
}

impl<'a> StudyContext<'a> {
    /// Design flow at full speed.
    pub fn design_point(
        spec: &'a CompressorSpec,
        closures: &'a Closures,
        map: &'a DiffuserMap,
    ) -> Self {
        Self {
            spec,
            closures,
            map,
            mdot: DESIGN_MDOT,
            speed_fraction: 1.0,
        }
    }
}

/// Feasibility, derived geometry and operating point of one design.
/// `point` is absent for infeasible designs; `error` carries the reason a
/// feasible design could not be evaluated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignEvaluation {
    pub feasibility: Option<FeasibilityReport>,
    pub derived: Option<DerivedGeometry>,
    pub point: Option<StagePoint>,
    pub error: Option<String>,
}

impl DesignEvaluation {
    pub fn feasible(&self) -> bool {
        self.feasibility.as_ref().is_some_and(|f| f.feasible)
    }
}

pub fn evaluate_design(design: &PipeDiffuserDesign, ctx: &StudyContext<'_>) -> DesignEvaluation {
    let feasibility = match check_feasibility(design) {
        Ok(f) => f,
        Err(e) => {
            return DesignEvaluation {
                feasibility: None,
                derived: None,
                point: None,
                error: Some(e.to_string()),
            }
        }
    };
    let derived = derive_geometry(design);
    let (point, error) = if feasibility.feasible {
        match evaluate_point(
            ctx.spec,
            design,
            &derived,
            ctx.closures,
            CpSource::resolve(ctx.closures, ctx.map),
            ctx.mdot,
            ctx.speed_fraction,
        ) {
            Ok(p) => (Some(p), None),
            Err(e) => (None, Some(e.to_string())),
        }
    } else {
        (None, None)
    };
    DesignEvaluation {
        feasibility: Some(feasibility),
        derived: Some(derived),
        point,
        error,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub value: f64,
    #[serde(flatten)]
    pub evaluation: DesignEvaluation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub base_id: String,
    pub parameter: String,
    pub values: Vec<f64>,
    pub mdot: f64,
    pub speed_fraction: f64,
    pub records: Vec<SweepRecord>,
    pub annotations: Vec<String>,
}

/// Vary one declared parameter of `base` over `values` (file units), holding
/// everything else fixed. Records follow the order of `values`.
pub fn ofat_sweep(
    base_id: &str,
    base: &PipeDiffuserDesign,
    parameter: &str,
    values: &[f64],
    ctx: &StudyContext<'_>,
) -> Result<SweepReport, ExplorerError> {
    if !PipeDiffuserDesign::PARAMETERS.contains(&parameter) {
        return Err(ExplorerError::Config(format!(
            "unknown parameter `{parameter}`; valid: {}",
            PipeDiffuserDesign::PARAMETERS.join(", ")
        )));
    }
    if values.is_empty() {
        return Err(ExplorerError::Config("no sweep values given".into()));
    }
    let records: Vec<SweepRecord> = values
        .par_iter()
        .map(|&value| {
            let evaluation = match base.with_parameter(parameter, value) {
                Ok(design) => evaluate_design(&design, ctx),
                Err(e) => DesignEvaluation {
                    feasibility: None,
                    derived: None,
                    point: None,
                    error: Some(e.to_string()),
                },
            };
            SweepRecord { value, evaluation }
        })
        .collect();

    let mut annotations = Vec::new();
    if let Some(b) = base.parameter(parameter) {
        annotations.push(format!("base value {}", sig17(b)));
    }
    for r in &records {
        if r.evaluation
            .feasibility
            .as_ref()
            .is_some_and(|f| !f.feasible)
        {
            annotations.push(format!("{} = {}: infeasible", parameter, sig17(r.value)));
        }
        if r.evaluation.point.is_some_and(|p| p.flags.choked) {
            annotations.push(format!("{} = {}: throat choked", parameter, sig17(r.value)));
        }
    }
    Ok(SweepReport {
        base_id: base_id.to_string(),
        parameter: parameter.to_string(),
        values: values.to_vec(),
        mdot: ctx.mdot,
        speed_fraction: ctx.speed_fraction,
        records,
        annotations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub id: String,
    pub feasible: bool,
    pub eta_tt: Option<f64>,
    pub p_s4_ratio: Option<f64>,
    pub p_t4_ratio: Option<f64>,
    pub b_th: Option<f64>,
    pub cp: Option<f64>,
    pub consistency_flags: usize,
    pub evaluation: DesignEvaluation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub mdot: f64,
    pub speed_fraction: f64,
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonTable {
    pub fn row(&self, id: &str) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.id == id)
    }
}

fn comparison_row(id: &str, evaluation: DesignEvaluation) -> ComparisonRow {
    let perf = evaluation.point.and_then(|p| p.performance);
    ComparisonRow {
        id: id.to_string(),
        feasible: evaluation.feasible(),
        eta_tt: perf.map(|p| p.eta_tt),
        p_s4_ratio: perf.map(|p| p.p_s4_ratio),
        p_t4_ratio: perf.map(|p| p.p_t4_ratio),
        b_th: evaluation.point.map(|p| p.b_th),
        cp: perf.map(|p| p.cp),
        consistency_flags: evaluation
            .derived
            .as_ref()
            .map_or(0, |d| d.consistency_flags.len()),
        evaluation,
    }
}

/// Evaluate every design at the same operating point. Row order follows input.
pub fn design_table(
    designs: &[(String, PipeDiffuserDesign)],
    ctx: &StudyContext<'_>,
) -> Result<ComparisonTable, ExplorerError> {
    if designs.is_empty() {
        return Err(ExplorerError::Config("no designs given".into()));
    }
    let rows = designs
        .par_iter()
        .map(|(id, d)| comparison_row(id, evaluate_design(d, ctx)))
        .collect();
    Ok(ComparisonTable {
        mdot: ctx.mdot,
        speed_fraction: ctx.speed_fraction,
        rows,
    })
}

/// Seventeen significant digits: enough to round-trip any `f64`.
pub fn sig17(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.16e}");
    let exp: i32 = sci[sci.find('e').unwrap() + 1..].parse().unwrap();
    if (-5..17).contains(&exp) {
        format!("{:.*}", (16 - exp).max(0) as usize, x)
    } else {
        sci
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(sig17).unwrap_or_default()
}

fn csv_bytes(header: &[&str], rows: Vec<Vec<String>>) -> Result<Vec<u8>, ExplorerError> {
    let err = |e: csv::Error| ExplorerError::Csv(e.to_string());
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(&r).map_err(err)?;
    }
    w.into_inner()
        .map_err(|e| ExplorerError::Csv(e.to_string()))
}

fn point_columns(e: &DesignEvaluation) -> Vec<String> {
    let perf = e.point.and_then(|p| p.performance);
    vec![
        e.point
            .map_or(String::new(), |p| p.flags.choked.to_string()),
        opt(perf.map(|p| p.pr_tt)),
        opt(perf.map(|p| p.eta_tt)),
        opt(perf.map(|p| p.p_s4_ratio)),
        opt(perf.map(|p| p.p_t4_ratio)),
        opt(e.point.map(|p| p.b_th)),
        opt(perf.map(|p| p.cp)),
        opt(perf.map(|p| p.cp0)),
        opt(e.point.map(|p| p.incidence_deg)),
        e.error.clone().unwrap_or_default(),
    ]
}

const POINT_HEADER: [&str; 10] = [
    "choked",
    "pr_tt",
    "eta_tt",
    "p_s4_ratio",
    "p_t4_ratio",
    "b_th",
    "cp",
    "cp0",
    "incidence_deg",
    "error",
];

fn feasibility_columns(e: &DesignEvaluation) -> Vec<String> {
    let f = e.feasibility.as_ref();
    let d = e.derived.as_ref();
    vec![
        f.map_or(String::new(), |f| f.feasible.to_string()),
        f.map_or(String::new(), |f| {
            serde_json::to_value(f.reason)
                .ok()
                .and_then(|v| v.as_str().map(str::to_string))
                .unwrap_or_default()
        }),
        f.and_then(|f| f.n_max)
            .map_or(String::new(), |n| n.to_string()),
        opt(d.map(|d| d.ar_actual)),
        d.map_or(String::new(), |d| d.consistency_flags.len().to_string()),
    ]
}

const FEASIBILITY_HEADER: [&str; 5] = [
    "feasible",
    "reason",
    "n_max",
    "ar_actual",
    "consistency_flags",
];

impl SweepReport {
    /// One row per value, stable column order.
    pub fn to_csv(&self) -> Result<Vec<u8>, ExplorerError> {
        let mut header = vec!["parameter", "value"];
        header.extend(FEASIBILITY_HEADER);
        header.extend(POINT_HEADER);
        let rows = self
            .records
            .iter()
            .map(|r| {
                let mut row = vec![self.parameter.clone(), sig17(r.value)];
                row.extend(feasibility_columns(&r.evaluation));
                row.extend(point_columns(&r.evaluation));
                row
            })
            .collect();
        csv_bytes(&header, rows)
    }
}

impl ComparisonTable {
    /// One row per design, stable column order.
    pub fn to_csv(&self) -> Result<Vec<u8>, ExplorerError> {
        let mut header = vec!["id"];
        header.extend(FEASIBILITY_HEADER);
        header.extend(POINT_HEADER);
        let rows = self
            .rows
            .iter()
            .map(|r| {
                let mut row = vec![r.id.clone()];
                row.extend(feasibility_columns(&r.evaluation));
                row.extend(point_columns(&r.evaluation));
                row
            })
            .collect();
        csv_bytes(&header, rows)
    }
}
