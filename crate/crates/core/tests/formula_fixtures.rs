//! Pitch and effective-area formulas against frozen 50-digit evaluations
//! (regenerate with `tests/fixtures/formula_oracle.py`).

use pipediff::gasdyn::{effective_area, GasModel, TotalState};
use pipediff::geometry::angular_pitch;

const FIXTURE: &str = include_str!("fixtures/formula_oracle.csv");

fn rows() -> Vec<Vec<f64>> {
    FIXTURE
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

#[test]
fn fixture_has_one_hundred_points() {
    assert_eq!(rows().len(), 100);
}

#[test]
fn pitch_matches_extended_precision() {
    for r in rows() {
        let beta = angular_pitch(r[0], r[1], r[2]).unwrap();
        let rel = (beta - r[7]).abs() / r[7];
        assert!(rel <= 1e-9, "{r:?}: {beta} rel {rel:e}");
    }
}

#[test]
fn effective_area_matches_extended_precision() {
    for r in rows() {
        let total = TotalState::new(r[4], r[5]).unwrap();
        let a = effective_area(r[3], &total, r[6], &GasModel::AIR).unwrap();
        let rel = (a - r[8]).abs() / r[8];
        assert!(rel <= 1e-9, "{r:?}: {a} rel {rel:e}");
    }
}
