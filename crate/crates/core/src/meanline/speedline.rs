use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::diffuser::{evaluate_point, CpSource, StagePoint};
use super::{domain, Closures, CompressorSpec, MeanlineError};
use crate::geometry::{DerivedGeometry, PipeDiffuserDesign};

pub const DEFAULT_SPEEDS: [f64; 4] = [0.7, 0.8, 0.9, 1.0];
/// Bisection width for the choke and stall boundaries, kg/s.
const FLOW_TOLERANCE: f64 = 1e-4;
/// Flows probed between the lowest workable flow and choke when locating surge.
const SURGE_SCAN_POINTS: usize = 80;
const START_FLOW_PER_SPEED: f64 = 0.05;
const MAX_FLOW: f64 = 20.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedLine {
    pub speed_fraction: f64,
    pub points: Vec<StagePoint>,
    pub choke_mdot: f64,
    pub surge_mdot: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerformanceMap {
    pub lines: Vec<SpeedLine>,
    /// Speed fractions whose line could not be built, with the reason.
    pub failed: Vec<(f64, String)>,
}

struct Evaluator<'a> {
    spec: &'a CompressorSpec,
    design: &'a PipeDiffuserDesign,
    derived: &'a DerivedGeometry,
    closures: &'a Closures,
    cp_source: CpSource<'a>,
    speed_fraction: f64,
}

impl Evaluator<'_> {
    fn point(&self, mdot: f64) -> Result<StagePoint, MeanlineError> {
        evaluate_point(
            self.spec,
            self.design,
            self.derived,
            self.closures,
            self.cp_source,
            mdot,
            self.speed_fraction,
        )
    }

    /// An un-choked, fully evaluated point, or `None`.
    fn open(&self, mdot: f64) -> Option<StagePoint> {
        self.point(mdot).ok().filter(|p| p.performance.is_some())
    }
}

/// Largest `x` in `[lo, hi]` (to the flow tolerance) for which `pred` holds,
/// given `pred(lo)` and not `pred(hi)`.
fn bisect(mut lo: f64, mut hi: f64, pred: impl Fn(f64) -> bool) -> (f64, f64) {
    while hi - lo > FLOW_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if pred(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo, hi)
}

/// Constant-speed characteristic between the surge and choke limits.
///
/// Choke is the smallest flow the throat (or impeller) cannot pass. Surge is
/// the largest flow below which the pressure-ratio characteristic has
/// non-negative slope or the leading-edge flow angle exceeds the stall angle.
/// Points are spaced uniformly between the two.
#[allow(clippy::too_many_arguments)]
pub fn speedline(
    spec: &CompressorSpec,
    design: &PipeDiffuserDesign,
    derived: &DerivedGeometry,
    closures: &Closures,
    cp_source: CpSource<'_>,
    speed_fraction: f64,
    n_points: usize,
) -> Result<SpeedLine, MeanlineError> {
    if n_points < 3 {
        return Err(domain("n_points", n_points as f64));
    }
    let ev = Evaluator {
        spec,
        design,
        derived,
        closures,
        cp_source,
        speed_fraction,
    };
    let empty = || MeanlineError::EmptySpeedline { speed_fraction };

    // Lowest workable flow.
    let mut start = START_FLOW_PER_SPEED * speed_fraction;
    while ev.open(start).is_none() {
        start *= 1.1;
        if start > MAX_FLOW {
            return Err(empty());
        }
    }
    // Bracket and refine choke.
    let mut open = start;
    let mut closed = start * 1.2;
    while ev.open(closed).is_some() {
        open = closed;
        closed *= 1.2;
        if closed > MAX_FLOW {
            return Err(empty());
        }
    }
    let (last_open, choke_mdot) = bisect(open, closed, |m| ev.open(m).is_some());

    // Surge: scan the workable range.
    let scan: Vec<f64> = (0..SURGE_SCAN_POINTS)
        .map(|i| start + (last_open - start) * i as f64 / (SURGE_SCAN_POINTS - 1) as f64)
        .collect();
    let probes: Vec<Option<StagePoint>> = scan.par_iter().map(|&m| ev.open(m)).collect();
    let mut surge_mdot = start;
    for i in 0..SURGE_SCAN_POINTS - 1 {
        let rising = match (&probes[i], &probes[i + 1]) {
            (Some(a), Some(b)) => b.pr_tt() >= a.pr_tt(),
            _ => true,
        };
        if rising {
            surge_mdot = surge_mdot.max(scan[i + 1]);
        }
    }
    let stalled = |m: f64| {
        ev.open(m)
            .is_none_or(|p| p.flow_angle_deg > closures.stall_angle_deg)
    };
    if let Some(i) = (0..SURGE_SCAN_POINTS).rev().find(|&i| {
        probes[i]
            .as_ref()
            .is_some_and(|p| p.flow_angle_deg > closures.stall_angle_deg)
    }) {
        let boundary = if i + 1 < SURGE_SCAN_POINTS {
            bisect(scan[i], scan[i + 1], stalled).1
        } else {
            last_open
        };
        surge_mdot = surge_mdot.max(boundary);
    }
    if surge_mdot >= last_open {
        return Err(empty());
    }

    let flows: Vec<f64> = (0..n_points)
        .map(|i| surge_mdot + (last_open - surge_mdot) * i as f64 / (n_points - 1) as f64)
        .collect();
    let points = flows
        .par_iter()
        .map(|&m| {
            let mut p = ev.point(m)?;
            p.flags.surge = m <= surge_mdot;
            Ok(p)
        })
        .collect::<Result<Vec<_>, MeanlineError>>()?;
    Ok(SpeedLine {
        speed_fraction,
        points,
        choke_mdot,
        surge_mdot,
    })
}

/// Speed lines for every fraction, in input order. Fails only if all fail.
#[allow(clippy::too_many_arguments)]
pub fn performance_map(
    spec: &CompressorSpec,
    design: &PipeDiffuserDesign,
    derived: &DerivedGeometry,
    closures: &Closures,
    cp_source: CpSource<'_>,
    speed_fractions: &[f64],
    n_points: usize,
) -> Result<PerformanceMap, MeanlineError> {
    if speed_fractions.is_empty() {
        return Err(MeanlineError::Config("no speed fractions given".into()));
    }
    let results: Vec<Result<SpeedLine, MeanlineError>> = speed_fractions
        .par_iter()
        .map(|&sf| speedline(spec, design, derived, closures, cp_source, sf, n_points))
        .collect();
    let mut lines = Vec::new();
    let mut failed = Vec::new();
    let mut first_error = None;
    for (sf, r) in speed_fractions.iter().zip(results) {
        match r {
            Ok(line) => lines.push(line),
            Err(e) => {
                failed.push((*sf, e.to_string()));
                first_error.get_or_insert(e);
            }
        }
    }
    if lines.is_empty() {
        return Err(first_error.expect("at least one speed"));
    }
    Ok(PerformanceMap { lines, failed })
}
