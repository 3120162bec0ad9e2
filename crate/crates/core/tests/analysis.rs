mod common;

use common::*;
use ldesmarket::analysis::*;
use ldesmarket::domain::*;
use ldesmarket::planner::{assemble, solve_equilibrium, EquilibriumSolution};
use proptest::prelude::*;

fn solve(design: &MarketDesign) -> EquilibriumSolution {
    solve_equilibrium(&assemble(&day_pair(), &small_catalog(), design).unwrap(), &tight()).unwrap()
}

#[test]
fn single_price_cycle_books_at_charge_cost() {
    let (eta_ch, eta_dis, p) = (0.8, 0.9, 50.0);
    let d = StorageDispatch {
        storage: "S".into(),
        scenario: 0,
        charge_efficiency: eta_ch,
        discharge_efficiency: eta_dis,
        variable_cost: 0.0,
        initial: 5.0,
        weight_hours: vec![1.0, 2.0, 1.0, 1.0],
        price: vec![p; 4],
        charge: vec![10.0, 0.0, 5.0, 0.0],
        discharge: vec![0.0, 0.9 * 4.0 / 2.0, 0.0, 0.9 * 8.0],
        soc: vec![13.0, 9.0, 13.0, 5.0],
    };
    let b = book_value(&d, BOOK_VALUE_MAX_SWEEPS);
    assert!(b.converged);
    for phi in b.phi.iter().chain([&b.phi_initial]) {
        assert!((phi - p / eta_ch).abs() < 1e-9, "{phi}");
    }
    let pi = storage_net_revenue(&d, &b).unwrap();
    let total: f64 = pi.iter().zip(&d.weight_hours).map(|(x, w)| x * w).sum();
    // the cycle loses the round-trip efficiency and nothing else
    assert!((total - d.arbitrage_margin()).abs() < 1e-9);
    assert!(total < 0.0);
}

#[test]
fn book_values_reconcile_with_the_arbitrage_margin() {
    let sol = solve(&MarketDesign::eom_voll(3000.0, 3000.0, f64::INFINITY));
    assert!(sol.storage_power[0] > 1.0);
    for (d, b) in storage_book_values(&sol).unwrap() {
        assert!(b.converged, "{}", b.residual);
        let pi = storage_net_revenue(&d, &b).unwrap();
        let booked: f64 = pi.iter().zip(&d.weight_hours).map(|(x, w)| x * w).sum();
        let end = *d.soc.last().unwrap();
        let inventory = b.phi.last().unwrap() * end - b.phi_initial * d.initial;
        let scale = d.arbitrage_margin().abs().max(1.0);
        assert!((booked - d.arbitrage_margin() - inventory).abs() <= 1e-6 * scale, "{booked} {} {inventory}", d.arbitrage_margin());
        for phi in &b.phi {
            assert!(*phi >= 0.0 && *phi <= 3000.0 / d.charge_efficiency);
        }
    }
}

#[test]
fn redispatch_changes_nothing_when_the_cap_is_voll() {
    let sol = solve(&MarketDesign::eom_pc(3000.0, 3000.0, f64::INFINITY));
    let pair = redispatch_true_wtp("capped", &sol, &day_pair(), &tight()).unwrap();
    let a = &pair.inefficient_distribution;
    let b = &pair.perfect_rationing;
    assert!((a.welfare - b.welfare).abs() <= 1e-6 * a.welfare.abs(), "{} {}", a.welfare, b.welfare);
    assert!((a.benefit - b.benefit).abs() <= 1e-6 * a.benefit.abs());
    let uncapped = solve(&MarketDesign::eom_voll(3000.0, 3000.0, f64::INFINITY));
    assert!(matches!(redispatch_true_wtp("u", &uncapped, &day_pair(), &tight()), Err(AnalysisError::NotCapped(_))));
}

#[test]
fn redispatch_never_loses_welfare() {
    let bench = solve(&MarketDesign::eom_voll(3000.0, 200.0, f64::INFINITY));
    let design = MarketDesign::dispatch(DemandMode::Capped, 3000.0, 200.0, f64::INFINITY, bench.mix());
    let capped = solve(&design);
    let pair = redispatch_true_wtp("fixed", &capped, &day_pair(), &tight()).unwrap();
    assert!(pair.perfect_rationing.welfare >= pair.inefficient_distribution.welfare - 1e-6 * bench.objective.abs());
    assert!(pair.perfect_rationing.welfare <= welfare_report("bench", &bench).welfare * (1.0 + 1e-9));
}

#[test]
fn free_entry_recovers_generator_costs() {
    let sol = solve(&MarketDesign::eom_voll(3000.0, 3000.0, f64::INFINITY));
    let books = storage_book_values(&sol).unwrap();
    let split = missing_money_split(&sol, &books).unwrap();
    assert_eq!(split.len(), 4);
    for r in split.iter().filter(|r| r.kind == "generator") {
        let margin = sol.energy_margin(&r.technology).unwrap();
        assert!((r.energy_total() - margin).abs() <= 1e-6 * margin.abs().max(1.0), "{}", r.technology);
        if r.installed_mw > 1e-6 {
            let rec = r.recovery().unwrap();
            assert!((rec - 1.0).abs() < 1e-4, "{} {rec}", r.technology);
        }
        assert_eq!(r.capacity_revenue, 0.0);
    }
}

#[test]
fn capped_prices_split_out_scarcity_rent() {
    let bench = solve(&MarketDesign::eom_voll(3000.0, 200.0, f64::INFINITY));
    let capped = solve(&MarketDesign::dispatch(DemandMode::Capped, 3000.0, 200.0, f64::INFINITY, bench.mix()));
    let books = storage_book_values(&capped).unwrap();
    let split = missing_money_split(&capped, &books).unwrap();
    let base = split.iter().find(|r| r.technology == "Base").unwrap();
    assert!(base.recovery().unwrap() < 1.0);
    assert!(base.at_or_above_pc > 0.0);
}

proptest! {
    #[test]
    fn true_benefit_is_monotone_and_concave(d_fix in 0.0f64..1e3, d_flex in 0.0f64..1e2, voll in 1.0f64..1e5, a in 0.0f64..1.2, b in 0.0f64..1.2, t in 0.0f64..=1.0) {
        let total = d_fix + d_flex;
        let (x, y) = (a * total, b * total);
        let f = |s: f64| true_interval_benefit(d_fix, d_flex, voll, s);
        let tol = 1e-9 * voll * (1.0 + total);
        if x <= y {
            prop_assert!(f(x) <= f(y) + tol);
        }
        prop_assert!(f(t * x + (1.0 - t) * y) >= t * f(x) + (1.0 - t) * f(y) - tol);
        prop_assert!((f(x.min(d_fix)) - voll * x.min(d_fix)).abs() <= tol);
        prop_assert!((f(2.0 * total) - voll * (d_fix + d_flex / 2.0)).abs() <= tol);
    }
}
