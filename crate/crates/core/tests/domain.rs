mod common;

use common::*;
use ldesmarket::domain::*;
use proptest::prelude::*;

#[test]
fn case_study_catalog_annualizes() {
    // CRF(7 %, 30 y) by direct evaluation of r(1+r)^n / ((1+r)^n − 1)
    let g = 1.07_f64.powi(30);
    assert!((capital_recovery_factor(0.07, 30) - 0.07 * g / (g - 1.0)).abs() < 1e-15);
    assert!((capital_recovery_factor(0.0, 20) - 0.05).abs() < 1e-15);
    let cat = CatalogRecords::case_study().to_catalog();
    assert_eq!(cat.generators.len(), 3);
    assert_eq!(cat.storage.len(), 2);
    for s in &cat.storage {
        assert!(s.charge_efficiency > 0.0 && s.charge_efficiency <= 1.0);
        assert!(s.credit_curve.is_empty());
    }
}

#[test]
fn catalog_records_round_trip_through_toml() {
    let records = CatalogRecords::case_study();
    let text = toml::to_string(&records).unwrap();
    let back: CatalogRecords = toml::from_str(&text).unwrap();
    assert_eq!(back, records);
}

#[test]
fn validation_lists_every_problem() {
    let mut set = day_pair();
    set.scenarios[0].probability = 0.7;
    set.scenarios[1].intervals[3].availability[0] = 1.5;
    let mut cat = small_catalog();
    cat.storage[0].discharge_efficiency = 0.0;
    cat.generators[2].availability_profile_key = Some("sun".into());
    let design = MarketDesign::eom_pc(1000.0, 2000.0, f64::INFINITY);
    let report = validate_inputs(&set, &cat, &design);
    let text = report.to_string();
    for needle in ["probability weights sum", "outside [0, 1]", "discharge efficiency", "'sun'", "price cap"] {
        assert!(text.contains(needle), "missing '{needle}' in\n{text}");
    }
    assert_eq!(report.issues.len(), 5, "{text}");
}

#[test]
fn corrupted_rows_are_all_reported() {
    let text = "scenario_id,interval_id,weight_hours,d_fix_mw,d_flex_mw,wind\n\
                a,0,1,10,1,0.5\n\
                a,1,x,10,1,0.5\n\
                a,2,1,10,1\n\
                a,3,1,-4,1,0.5\n";
    let diags = ScenarioSet::from_csv(text, None, 4.0).unwrap_err();
    let lines: Vec<usize> = diags.iter().map(|d| d.line).collect();
    assert!(lines.contains(&3) && lines.contains(&4), "{diags:?}");
    assert!(diags.len() >= 2);
}

#[test]
fn capacity_curve_integrates_piecewise() {
    let curve = CapacityDemandCurve {
        fixed_price: 90.0,
        fixed_width: 96.5,
        segments: vec![
            CapacitySegment { width: 3.5, start_price: 90.0, end_price: 60.0 },
            CapacitySegment { width: 3.5, start_price: 60.0, end_price: 0.0 },
        ],
    };
    assert!(curve.violations().is_empty());
    assert!((curve.integral(103.5) - 9052.5).abs() < 1e-9);
    assert_eq!(curve.price_at(96.5), 90.0);
    assert_eq!(curve.price_at(100.0), 60.0);
    assert_eq!(curve.price_at(200.0), 0.0);
}

#[test]
fn credit_curve_edges() {
    let f = CreditCurve::from_breakpoints(&[(0.0, 0.2), (4.0, 0.6), (8.0, 0.8)]);
    assert!((f.value(0.0) - 0.2).abs() < 1e-12);
    // beyond the last breakpoint the last slope continues, then clips at 1
    assert!((f.value(12.0) - 1.0).abs() < 1e-12);
    assert!((f.value(10.0) - 0.9).abs() < 1e-12);
    assert!(f.violations().is_empty());
    assert!(f.exceeds_one());
    let convex = CreditCurve::from_breakpoints(&[(0.0, 0.0), (1.0, 0.1), (2.0, 0.5)]);
    assert!(!convex.violations().is_empty());
}

fn small_set() -> impl Strategy<Value = ScenarioSet> {
    let interval = (0.5f64..5.0, 0.0f64..200.0, 0.0f64..10.0, 0.0f64..=1.0);
    (1usize..4, prop::collection::vec(interval, 1..6)).prop_map(|(n, ivs)| {
        let sc: Vec<Vec<(f64, f64, f64, Vec<f64>)>> =
            (0..n).map(|i| ivs.iter().map(|&(w, f, x, a)| (w, f * (1.0 + i as f64 / 10.0), x, vec![a])).collect()).collect();
        scenario_set(&["wind"], &sc)
    })
}

proptest! {
    #[test]
    fn truncation_preserves_total_and_threshold(d_fix in 0.0f64..1e4, d_flex in 0.0f64..1e3, voll in 1.0f64..1e5, frac in 0.01f64..=1.0) {
        let pc = frac * voll;
        let (f, x) = truncate_demand_for_price_cap(d_fix, d_flex, voll, pc).unwrap();
        prop_assert!((f + x - d_fix - d_flex).abs() <= 1e-9 * (1.0 + d_fix + d_flex));
        // the capped curve reaches zero price at the same quantity and
        // starts its slope where the true curve crosses PC
        let crossing = d_fix + d_flex * (1.0 - pc / voll);
        prop_assert!((f - crossing).abs() <= 1e-9 * (1.0 + crossing));
        prop_assert!(x >= -1e-12 && f >= d_fix - 1e-12);
    }

    #[test]
    fn truncation_rejects_caps_outside_range(voll in 1.0f64..1e5, over in 1.0001f64..10.0) {
        prop_assert!(truncate_demand_for_price_cap(1.0, 1.0, voll, voll * over).is_err());
        prop_assert!(truncate_demand_for_price_cap(1.0, 1.0, voll, 0.0).is_err());
    }

    #[test]
    fn concave_curves_stay_monotone_and_bounded(
        slopes in prop::collection::vec(0.0f64..0.5, 1..5),
        widths in prop::collection::vec(0.5f64..10.0, 5),
        start in 0.0f64..0.5,
        k in 0.0f64..2.0,
    ) {
        let mut sorted = slopes.clone();
        sorted.sort_by(|a, b| b.total_cmp(a));
        let mut pts = vec![(0.0, start)];
        for (b, w) in sorted.iter().zip(&widths) {
            let (z, v) = *pts.last().unwrap();
            pts.push((z + w, v + b * w));
        }
        let f = CreditCurve::from_breakpoints(&pts);
        prop_assert!(f.violations().is_empty(), "{:?}", f.violations());
        let g = f.scaled(k);
        let mut prev = 0.0;
        for i in 0..200 {
            let z = i as f64 * 0.25;
            let v = f.value(z);
            prop_assert!((0.0..=1.0).contains(&v));
            prop_assert!(v >= prev - 1e-12);
            prev = v;
            prop_assert!((g.value(z) - (k * f.raw(z)).clamp(0.0, 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn scenario_csv_round_trips(set in small_set()) {
        let text = set.to_csv();
        let back = ScenarioSet::from_csv(&text, Some(&set.probabilities()), set.horizon_hours).unwrap();
        prop_assert_eq!(back, set);
    }

    #[test]
    fn capacity_curve_integral_matches_quadrature(ct in 1.0f64..500.0, nc in 1.0f64..1e5, x in 0.0f64..1.2) {
        let curve = CapacityDemandCurve {
            fixed_price: 1.5 * nc,
            fixed_width: 0.965 * ct,
            segments: vec![
                CapacitySegment { width: 0.035 * ct, start_price: 1.5 * nc, end_price: nc },
                CapacitySegment { width: 0.035 * ct, start_price: nc, end_price: 0.0 },
            ],
        };
        let q = x * ct;
        let n = 4000;
        let h = q / n as f64;
        // midpoint rule on a piecewise-linear integrand
        let quad: f64 = (0..n).map(|i| curve.price_at((i as f64 + 0.5) * h) * h).sum();
        prop_assert!((curve.integral(q) - quad).abs() <= 1e-3 * (1.0 + quad));
    }
}
