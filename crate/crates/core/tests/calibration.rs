mod common;

use common::*;
use ldesmarket::accreditation::baseline_dispatch;
use ldesmarket::calibration::*;
use ldesmarket::domain::*;
use ldesmarket::planner::{assemble, solve_equilibrium};
use proptest::prelude::*;

#[test]
fn demand_curve_breakpoints() {
    let c = build_cm_demand_curve(100.0, 60.0).unwrap();
    let expect = [(96.5, 90.0), (100.0, 60.0), (103.5, 0.0)];
    let got = c.breakpoints();
    assert_eq!(got.len(), 3);
    for (g, w) in got.iter().zip(expect) {
        assert!((g.0 - w.0).abs() < 1e-12 && (g.1 - w.1).abs() < 1e-12, "{g:?} vs {w:?}");
    }
    assert_eq!(c.price_at(96.5), 90.0);
    assert_eq!(c.price_at(50.0), 90.0);
    assert!((c.price_at(101.75) - 30.0).abs() < 1e-12);
    assert_eq!(c.price_at(103.5), 0.0);
    assert!((c.integral(103.5) - 9052.5).abs() < 1e-9);
    assert!(c.violations().is_empty());
}

#[test]
fn nonpositive_inputs_are_rejected() {
    assert_eq!(build_cm_demand_curve(0.0, 60.0).unwrap_err(), CalibrationError::Target(0.0));
    assert_eq!(build_cm_demand_curve(100.0, -1.0).unwrap_err(), CalibrationError::NetCone(-1.0));
    assert!(build_cm_demand_curve(f64::NAN, 60.0).is_err());
    assert!(build_cm_demand_curve(100.0, f64::INFINITY).is_err());
}

fn case_mix() -> FixedCapacities {
    let mut mix = FixedCapacities::default();
    mix.generators.insert("CCGT-CCS".into(), 80.0);
    mix.storage.insert("LDES".into(), StorageCapacity { power: 20.0, energy: 20.0 * 8.0 / 0.5 });
    mix
}

#[test]
fn target_sums_credited_capacity() {
    let catalog = CatalogRecords::case_study().to_catalog();
    let mut credits = Credits::default();
    credits.generators.insert("CCGT-CCS".into(), 1.0);
    credits.storage.insert("LDES".into(), CreditCurve::constant(0.5));
    assert!((capacity_target(&case_mix(), &catalog, &credits).unwrap() - 90.0).abs() < 1e-12);

    let zero = Credits {
        generators: [("CCGT-CCS".to_string(), 0.0)].into(),
        storage: [("LDES".to_string(), CreditCurve::constant(0.0))].into(),
    };
    let ct = capacity_target(&case_mix(), &catalog, &zero).unwrap();
    assert_eq!(ct, 0.0);
    assert_eq!(build_cm_demand_curve(ct, 60.0).unwrap_err(), CalibrationError::Target(0.0));

    credits.storage.clear();
    assert_eq!(capacity_target(&case_mix(), &catalog, &credits).unwrap_err(), CalibrationError::MissingCredit("LDES".into()));
}

#[test]
fn reference_requires_a_full_credit() {
    let set = day_pair();
    let cat = small_catalog();
    let bench = solve_equilibrium(&assemble(&set, &cat, &MarketDesign::eom_voll(3000.0, 200.0, f64::INFINITY)).unwrap(), &tight()).unwrap();
    let mix = bench.mix();
    assert!(mix.generators["Base"] > 1.0);
    let design = MarketDesign::eom_pc(3000.0, 200.0, f64::INFINITY);
    let capped = baseline_dispatch(&mix, &set, &cat, &design, &tight()).unwrap();
    let table = net_cone(&mix, &capped, &cat, "Base", None).unwrap();
    assert_eq!(table.status, NetConeStatus::Ok);
    assert!(table.net_cone_ref > 0.0);
    let base = table.record("Base").unwrap();
    assert_eq!(base.required_credit, Some(1.0));
    assert!((base.gross_cost - base.net_revenue - table.net_cone_ref).abs() < 1e-9 * base.gross_cost);
    for r in &table.records {
        assert_eq!(r.required_credit.is_some(), r.installed_mw > INSTALLED_TOL, "{}", r.technology);
    }
    assert_eq!(net_cone(&mix, &capped, &cat, "Nope", None).unwrap_err(), CalibrationError::UnknownReference("Nope".into()));
}

#[test]
fn reference_without_missing_money_is_flagged() {
    let set = day_pair();
    let cat = small_catalog();
    let bench = solve_equilibrium(&assemble(&set, &cat, &MarketDesign::eom_voll(3000.0, 3000.0, f64::INFINITY)).unwrap(), &tight()).unwrap();
    // at PC = VOLL the benchmark already pays for itself
    let capped = baseline_dispatch(&bench.mix(), &set, &cat, &MarketDesign::eom_pc(3000.0, 3000.0, f64::INFINITY), &tight()).unwrap();
    let table = net_cone(&bench.mix(), &capped, &cat, "Base", None).unwrap();
    assert_eq!(table.status, NetConeStatus::NoMissingMoney);
    assert!(table.records.iter().all(|r| r.required_credit.is_none()));
}

proptest! {
    #[test]
    fn curve_shape_holds_for_any_target(ct in 1e-3f64..1e5, nc in 1e-3f64..1e6) {
        let c = build_cm_demand_curve(ct, nc).unwrap();
        let bp = c.breakpoints();
        prop_assert!((bp[0].0 - 0.965 * ct).abs() <= 1e-12 * ct && (bp[0].1 - 1.5 * nc).abs() <= 1e-9 * nc);
        prop_assert!((bp[1].0 - ct).abs() <= 1e-12 * ct && (bp[1].1 - nc).abs() <= 1e-9 * nc);
        prop_assert!((bp[2].0 - 1.035 * ct).abs() <= 1e-12 * ct && bp[2].1 == 0.0);
        prop_assert!(c.violations().is_empty());
        // 0.965·1.5 + 0.035·(1.5 + 1)/2 + 0.035/2
        let area = ct * nc * (0.965 * 1.5 + 0.035 * 1.25 + 0.0175);
        prop_assert!((c.integral(2.0 * ct) - area).abs() <= 1e-9 * area);
    }
}
