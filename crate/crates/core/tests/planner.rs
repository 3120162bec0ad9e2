mod common;

use common::*;
use ldesmarket::domain::*;
use ldesmarket::planner::*;
use ldesmarket::qp::{verify_kkt, SolveOptions};

fn solve(set: &ScenarioSet, cat: &TechnologyCatalog, design: &MarketDesign) -> EquilibriumSolution {
    solve_equilibrium(&assemble(set, cat, design).unwrap(), &tight()).unwrap()
}

#[test]
fn single_interval_matches_analytic_kkt() {
    // price = C^V + capacity rent of 100 $/MW over one hour; flexible demand
    // clears where VOLL·(1 − y/D^flex) = λ
    let set = scenario_set(&[], &[vec![(1.0, 10.0, 1.0, vec![])]]);
    let cat = TechnologyCatalog { generators: vec![generator("G", 10.0, 100.0)], storage: vec![] };
    let sol = solve(&set, &cat, &MarketDesign::eom_voll(1000.0, 1000.0, f64::INFINITY));
    let lambda = 110.0;
    let capacity = 10.0 + 1.0 * (1.0 - lambda / 1000.0);
    assert!((sol.energy_price[0] - lambda).abs() < 1e-6, "{}", sol.energy_price[0]);
    assert!((sol.generator_capacity[0] - capacity).abs() < 1e-6, "{}", sol.generator_capacity[0]);
    assert!((sol.generation[0][0] - capacity).abs() < 1e-6);
    assert!(agent_profit(&sol, "G").unwrap().abs() < 1e-6);
    assert!(sol.carbon_price.abs() < 1e-9);
}

#[test]
fn row_counts_by_construction() {
    let set = hourly(&[5.0, 8.0]);
    let cat = TechnologyCatalog { generators: vec![generator("G", 10.0, 100.0)], storage: vec![] };
    let p = assemble(&set, &cat, &MarketDesign::eom_voll(1000.0, 1000.0, f64::INFINITY)).unwrap();
    assert_eq!(p.count_rows(|l| matches!(l, RowLabel::Balance { .. })), 2);
    assert_eq!(p.count_rows(|l| matches!(l, RowLabel::GenCapacity { .. })), 2);
    assert_eq!(p.count_rows(|l| matches!(l, RowLabel::Emission)), 1);
    assert_eq!(p.labels.len(), p.qp.num_rows());

    let mut s = storage("S", 50.0, 5.0, 0.9, 0.9);
    s.credit_curve = CreditCurve::from_breakpoints(&[(0.0, 0.0), (1.0, 0.4), (2.0, 0.7), (4.0, 0.9), (8.0, 1.0)]);
    assert_eq!(s.credit_curve.segments.len(), 4);
    let cat = TechnologyCatalog { generators: cat.generators, storage: vec![s] };
    let curve = CapacityDemandCurve { fixed_price: 150.0, fixed_width: 9.0, segments: vec![CapacitySegment { width: 1.0, start_price: 150.0, end_price: 0.0 }] };
    let p = assemble(&set, &cat, &MarketDesign::e_plus_cm(1000.0, 500.0, f64::INFINITY, curve)).unwrap();
    assert_eq!(p.count_rows(|l| matches!(l, RowLabel::StorageQualification { .. })), 4);
    assert_eq!(p.count_rows(|l| matches!(l, RowLabel::CapacityBalance)), 1);
}

#[test]
fn capacity_market_without_credit_curve_is_rejected() {
    let set = hourly(&[5.0]);
    let cat = TechnologyCatalog { generators: vec![generator("G", 10.0, 100.0)], storage: vec![storage("S", 1.0, 1.0, 1.0, 1.0)] };
    let curve = CapacityDemandCurve { fixed_price: 1.0, fixed_width: 1.0, segments: vec![] };
    let err = assemble(&set, &cat, &MarketDesign::e_plus_cm(1000.0, 500.0, f64::INFINITY, curve)).unwrap_err();
    assert!(matches!(err, PlannerError::Invalid(_)), "{err}");
}

#[test]
fn zero_demand_builds_nothing() {
    let set = hourly(&[0.0, 0.0, 0.0]);
    let sol = solve(&set, &small_catalog_without_profiles(), &MarketDesign::eom_voll(1000.0, 1000.0, f64::INFINITY));
    assert!(sol.generator_capacity.iter().chain(&sol.storage_power).all(|c| c.abs() < 1e-6));
    assert!(sol.objective.abs() < 1e-6);
}

fn small_catalog_without_profiles() -> TechnologyCatalog {
    let mut cat = small_catalog();
    cat.generators.retain(|g| g.availability_profile_key.is_none());
    cat
}

#[test]
fn short_fixed_mix_prices_at_the_cap() {
    let set = scenario_set(&[], &[vec![(1.0, 10.0, 2.0, vec![]), (1.0, 5.0, 1.0, vec![])]]);
    let cat = TechnologyCatalog { generators: vec![generator("G", 10.0, 100.0)], storage: vec![] };
    let mix = FixedCapacities { generators: [("G".to_string(), 8.0)].into(), storage: Default::default() };
    let sol = solve(&set, &cat, &MarketDesign::dispatch(DemandMode::Capped, 1000.0, 400.0, f64::INFINITY, mix));
    assert!((sol.energy_price[0] - 400.0).abs() < 1e-5, "{}", sol.energy_price[0]);
    assert!((sol.served(0) - 8.0).abs() < 1e-6);
    assert!(sol.served_fixed[0] + sol.served_flex[0] < 10.0);
    assert!(sol.energy_price[1] < 400.0);
}

#[test]
fn free_investment_runs_have_zero_profit() {
    let set = day_pair();
    let cat = small_catalog();
    for design in [MarketDesign::eom_voll(3000.0, 3000.0, f64::INFINITY), MarketDesign::eom_pc(3000.0, 1000.0, f64::INFINITY)] {
        let sol = solve(&set, &cat, &design);
        let names = cat.generators.iter().map(|g| &g.name).chain(cat.storage.iter().map(|s| &s.name));
        let caps = sol.generator_capacity.iter().chain(&sol.storage_power);
        for (name, cap) in names.zip(caps) {
            let cost = sol.annual_cost(name).unwrap();
            let profit = agent_profit(&sol, name).unwrap();
            if *cap > 1e-6 {
                assert!(profit.abs() <= 1e-4 * cost, "{} {name}: profit {profit} cost {cost}", design.run_mode);
            } else {
                assert!(profit.abs() <= 1e-6);
            }
        }
    }
}

#[test]
fn prices_are_within_the_ceiling_and_balance_closes() {
    let set = day_pair();
    let cat = small_catalog();
    for design in [MarketDesign::eom_voll(3000.0, 3000.0, f64::INFINITY), MarketDesign::eom_pc(3000.0, 1000.0, f64::INFINITY)] {
        let program = assemble(&set, &cat, &design).unwrap();
        let sol = solve_equilibrium(&program, &tight()).unwrap();
        let ceiling = design.wtp_ceiling();
        let peak = set.peak_fixed_demand();
        for k in 0..sol.num_intervals() {
            assert!(sol.energy_price[k] >= -1e-6 && sol.energy_price[k] <= ceiling * (1.0 + 1e-8), "{}", sol.energy_price[k]);
            let supply: f64 = (0..cat.generators.len()).map(|g| sol.generation[g][k]).sum::<f64>()
                + (0..cat.storage.len()).map(|s| sol.discharge[s][k] - sol.charge[s][k]).sum::<f64>();
            assert!((supply - sol.served(k)).abs() <= 1e-6 * peak);
        }
        for s in 0..cat.storage.len() {
            for k in 0..sol.num_intervals() {
                assert!(sol.soc[s][k] <= sol.storage_energy[s] + 1e-6);
            }
        }
        let res = ldesmarket::qp::solve(&program.qp, &tight()).unwrap();
        assert!(verify_kkt(&program.qp, &res).passes(1e-10));
    }
}

#[test]
fn state_of_charge_telescopes() {
    let set = day_pair();
    let cat = small_catalog();
    let sol = solve(&set, &cat, &MarketDesign::eom_voll(3000.0, 3000.0, f64::INFINITY));
    let spec = &cat.storage[0];
    for w in 0..2 {
        let ks: Vec<usize> = (0..sol.num_intervals()).filter(|&k| sol.layout[k].scenario == w).collect();
        let flow: f64 = ks
            .iter()
            .map(|&k| sol.layout[k].weight_hours * (sol.charge[0][k] * spec.charge_efficiency - sol.discharge[0][k] / spec.discharge_efficiency))
            .sum();
        let end = sol.soc[0][*ks.last().unwrap()];
        assert!((end - sol.storage_initial[0] - flow).abs() < 1e-6);
        assert!(end >= sol.storage_initial[0] - 1e-6);
    }
}

#[test]
fn doubling_demand_doubles_welfare_and_keeps_prices() {
    let set = day_pair();
    let cat = small_catalog();
    let design = MarketDesign::eom_voll(3000.0, 3000.0, f64::INFINITY);
    let one = solve(&set, &cat, &design);
    let two = solve(&set.scale_demand(2.0), &cat, &design);
    assert!((two.objective - 2.0 * one.objective).abs() <= 1e-6 * one.objective.abs());
    for (a, b) in one.energy_price.iter().zip(&two.energy_price) {
        assert!((a - b).abs() <= 1e-4 * a.abs().max(1.0), "{a} vs {b}");
    }
}

#[test]
fn binding_emission_cap_prices_carbon() {
    let set = day_pair();
    let mut cat = small_catalog();
    cat.generators[1].emission_factor = 0.4;
    cat.generators[0].emission_factor = 0.6;
    let free = solve(&set, &cat, &MarketDesign::eom_voll(3000.0, 3000.0, f64::INFINITY));
    assert!(free.carbon_price.abs() < 1e-9);
    let cap = 0.5 * free.expected_emissions();
    let capped = solve(&set, &cat, &MarketDesign::eom_voll(3000.0, 3000.0, cap));
    assert!(capped.carbon_price > 0.0);
    assert!((capped.expected_emissions() - cap).abs() <= 1e-6 * cap);
}

#[test]
fn unknown_technology_has_no_profit() {
    let set = hourly(&[1.0]);
    let cat = TechnologyCatalog { generators: vec![generator("G", 10.0, 100.0)], storage: vec![] };
    let sol = solve(&set, &cat, &MarketDesign::eom_voll(1000.0, 1000.0, f64::INFINITY));
    assert_eq!(agent_profit(&sol, "nope"), Err(PlannerError::UnknownTechnology("nope".into())));
}

#[test]
fn relaxing_solve_accepts_default_tolerance() {
    let set = day_pair();
    let program = assemble(&set, &small_catalog(), &MarketDesign::eom_voll(3000.0, 3000.0, f64::INFINITY)).unwrap();
    let a = solve_equilibrium_relaxing(&program, &SolveOptions::default()).unwrap();
    let b = solve_equilibrium(&program, &SolveOptions::default()).unwrap();
    assert_eq!(a, b);
}
