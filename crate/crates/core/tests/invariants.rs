use proptest::prelude::*;

use pipediff::diffusermap::{synthetic_map, CpQuery};
use pipediff::explorer::sig17;
use pipediff::gasdyn::{
    effective_area, mach_from_effective_area, throat_blockage, Branch, GasModel, TotalState,
};
use pipediff::geometry::{angular_pitch, derive_geometry, max_pipe_count, presets};
use pipediff::meanline::{speedline, CpSource, StageConfig};

proptest! {
    #[test]
    fn blockage_round_trip(
        mdot in 0.05f64..3.0,
        p0 in 5e4f64..8e5,
        t0 in 250.0f64..600.0,
        mach in 0.05f64..0.95,
        b in 0.0f64..0.9,
    ) {
        let gas = GasModel::AIR;
        let total = TotalState::new(p0, t0).unwrap();
        let a_eff = effective_area(mdot, &total, mach, &gas).unwrap();
        let a_geo = a_eff / (1.0 - b);
        let back = throat_blockage(a_eff, a_geo).unwrap();
        prop_assert!((back - b).abs() < 1e-12, "{back} vs {b}");
    }

    #[test]
    fn mach_inversion_round_trip(
        mdot in 0.05f64..3.0,
        p0 in 5e4f64..8e5,
        t0 in 250.0f64..600.0,
        mach in 0.02f64..3.0,
    ) {
        prop_assume!((mach - 1.0).abs() > 1e-3);
        let gas = GasModel::AIR;
        let total = TotalState::new(p0, t0).unwrap();
        let a = effective_area(mdot, &total, mach, &gas).unwrap();
        let branch = if mach < 1.0 { Branch::Subsonic } else { Branch::Supersonic };
        let back = mach_from_effective_area(mdot, &total, a, &gas, branch).unwrap();
        prop_assert!((back - mach).abs() < 1e-8, "{back} vs {mach}");
    }

    #[test]
    fn pitch_grows_with_throat_diameter(
        r in 50.0f64..110.0,
        d in 3.0f64..12.0,
        extra in 0.01f64..2.0,
        alpha in 1.0f64..1.4,
    ) {
        let (Ok(b0), Ok(b1)) = (angular_pitch(r, d, alpha), angular_pitch(r, d + extra, alpha))
        else {
            return Ok(());
        };
        prop_assert!(b1 > b0);
        prop_assert!(max_pipe_count(b1).unwrap() <= max_pipe_count(b0).unwrap());
    }

    #[test]
    fn map_lookup_stays_within_table(
        ar in 0.5f64..10.0,
        ld in 0.0f64..40.0,
        b in -0.1f64..0.4,
        m in 0.0f64..1.6,
        re in 1e3f64..1e7,
    ) {
        let map = synthetic_map();
        let entries = map.entries();
        let lo = entries.iter().map(|e| e.cp).fold(f64::INFINITY, f64::min);
        let hi = entries.iter().map(|e| e.cp).fold(f64::NEG_INFINITY, f64::max);
        let q = CpQuery { area_ratio: ar, l_over_d: ld, blockage: b, mach_th: m, re_d: re };
        let r = map.lookup_cp(&q);
        prop_assert!(r.cp >= lo - 1e-12 && r.cp <= hi + 1e-12);

        let axes = map.axes();
        let coords = [ar, ld, b, m, re];
        let outside = coords
            .iter()
            .zip(axes.iter())
            .any(|(&x, n)| x < n[0] || x > n[n.len() - 1]);
        prop_assert_eq!(r.clamped, outside);

        let c: Vec<f64> = coords
            .iter()
            .zip(axes.iter())
            .map(|(&x, n)| x.clamp(n[0], n[n.len() - 1]))
            .collect();
        let projected = CpQuery {
            area_ratio: c[0], l_over_d: c[1], blockage: c[2], mach_th: c[3], re_d: c[4],
        };
        let inside = map.lookup_cp(&projected);
        prop_assert!(!inside.clamped);
        prop_assert_eq!(inside.cp, r.cp);
    }

    #[test]
    fn seventeen_digit_text_round_trips(x in proptest::num::f64::NORMAL) {
        prop_assert_eq!(sig17(x).parse::<f64>().unwrap(), x);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn speedlines_are_ordered(speed in 0.6f64..1.05) {
        let cfg = StageConfig::CALIBRATED;
        let spec = cfg.compressor_spec().unwrap();
        let closures = cfg.closures().unwrap();
        let map = synthetic_map();
        let design = presets::p2();
        let line = speedline(
            &spec,
            &design,
            &derive_geometry(&design),
            &closures,
            CpSource::resolve(&closures, &map),
            speed,
            12,
        )
        .unwrap();
        prop_assert!(line.surge_mdot < line.choke_mdot);
        for w in line.points.windows(2) {
            prop_assert!(w[1].mdot > w[0].mdot);
            let (a, b) = (w[0].performance.unwrap(), w[1].performance.unwrap());
            prop_assert!(b.pr_tt < a.pr_tt);
        }
        let first = line.points.first().unwrap().mdot;
        let last = line.points.last().unwrap().mdot;
        prop_assert!(first >= line.surge_mdot && last <= line.choke_mdot);
    }
}
