//! Small hand-built instances shared by the integration tests.

#![allow(dead_code)]

use ldesmarket::domain::*;
use ldesmarket::qp::SolveOptions;

/// One scenario per entry of `scenarios`; each interval is
/// `(weight_hours, d_fix, d_flex, availability)`.
pub fn scenario_set(keys: &[&str], scenarios: &[Vec<(f64, f64, f64, Vec<f64>)>]) -> ScenarioSet {
    let horizon: f64 = scenarios[0].iter().map(|iv| iv.0).sum();
    let p = 1.0 / scenarios.len() as f64;
    ScenarioSet {
        horizon_hours: horizon,
        profile_keys: keys.iter().map(|k| k.to_string()).collect(),
        scenarios: scenarios
            .iter()
            .enumerate()
            .map(|(i, ivs)| Scenario {
                id: format!("w{i}"),
                probability: p,
                intervals: ivs
                    .iter()
                    .map(|(w, f, x, a)| Interval { weight_hours: *w, d_fix: *f, d_flex: *x, availability: a.clone() })
                    .collect(),
            })
            .collect(),
    }
}

/// Hourly intervals without flexible demand or profiles.
pub fn hourly(demand: &[f64]) -> ScenarioSet {
    scenario_set(&[], &[demand.iter().map(|&d| (1.0, d, 0.0, vec![])).collect()])
}

pub fn generator(name: &str, variable_cost: f64, annual_cost: f64) -> GeneratorSpec {
    GeneratorSpec {
        name: name.into(),
        variable_cost,
        annualized_capex: annual_cost,
        fixed_om: 0.0,
        emission_factor: 0.0,
        availability_profile_key: None,
        capacity_credit: 1.0,
    }
}

pub fn storage(name: &str, power_cost: f64, energy_cost: f64, eta_ch: f64, eta_dis: f64) -> StorageSpec {
    StorageSpec {
        name: name.into(),
        power_capex: power_cost,
        power_fixed_om: 0.0,
        energy_capex: energy_cost,
        energy_fixed_om: 0.0,
        charge_efficiency: eta_ch,
        discharge_efficiency: eta_dis,
        variable_cost: 0.0,
        credit_curve: CreditCurve::default(),
    }
}

pub fn tight() -> SolveOptions {
    SolveOptions { tolerance: 1e-10, ..SolveOptions::default() }
}

/// A day of demand with a cheap-to-store trough and an evening peak, two
/// weather years that differ in the peak.
pub fn day_pair() -> ScenarioSet {
    let base = [40.0, 35.0, 30.0, 30.0, 45.0, 70.0, 90.0, 100.0, 80.0, 60.0, 50.0, 45.0];
    let wind_a = [0.9, 0.95, 1.0, 0.9, 0.6, 0.3, 0.1, 0.05, 0.1, 0.3, 0.6, 0.8];
    let wind_b = [0.7, 0.8, 0.9, 0.8, 0.5, 0.2, 0.05, 0.0, 0.05, 0.2, 0.4, 0.6];
    let a: Vec<_> = base.iter().zip(wind_a).map(|(&d, w)| (2.0, d, 0.05 * d, vec![w])).collect();
    let b: Vec<_> = base.iter().zip(wind_b).map(|(&d, w)| (2.0, 1.05 * d, 0.05 * d, vec![w])).collect();
    scenario_set(&["wind"], &[a, b])
}

/// Peaker, baseload, wind and one storage technology; costs per year of a
/// 24 h horizon scaled down accordingly.
pub fn small_catalog() -> TechnologyCatalog {
    let scale = 24.0 / 8760.0;
    let mut wind = generator("Wind", 0.0, 120_000.0 * scale);
    wind.availability_profile_key = Some("wind".into());
    TechnologyCatalog {
        generators: vec![generator("Peaker", 150.0, 50_000.0 * scale), generator("Base", 40.0, 200_000.0 * scale), wind],
        storage: vec![storage("Store", 60_000.0 * scale, 10_000.0 * scale, 0.9, 0.9)],
    }
}
