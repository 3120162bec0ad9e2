//! Typed model inputs and their validation.

use serde::Serialize;

mod catalog;
mod demand;
mod design;
mod scenario;

pub use catalog::{
    capital_recovery_factor, CatalogRecords, CreditCurve, CreditSegment, GeneratorRecord, GeneratorSpec, StorageRecord,
    StorageSpec, TechnologyCatalog,
};
pub use demand::{truncate_demand_for_price_cap, CapacityDemandCurve, CapacitySegment, DemandMode, EnergyDemandCurve};
pub use design::{FixedCapacities, MarketDesign, RunMode, StorageCapacity};
pub use scenario::{Interval, RowDiagnostic, Scenario, ScenarioSet, FIXED_COLUMNS};

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum DomainError {
    #[error("invalid price cap: {0}")]
    PriceCap(String),
    #[error("config: {0}")]
    Config(String),
}

/// One violated invariant, with where it was found.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Issue {
    pub location: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct ValidationReport {
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.issues.is_empty()
    }

    fn push(&mut self, location: impl Into<String>, message: impl Into<String>) {
        self.issues.push(Issue { location: location.into(), message: message.into() });
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.passed() {
            return f.write_str("pass");
        }
        writeln!(f, "fail ({} issues)", self.issues.len())?;
        for i in &self.issues {
            writeln!(f, "  {}: {}", i.location, i.message)?;
        }
        Ok(())
    }
}

/// Checks every documented invariant of the three inputs and lists all
/// violations.
///
/// ```
/// use ldesmarket::domain::*;
/// let mut catalog = TechnologyCatalog::default();
/// let set = ScenarioSet {
///     horizon_hours: 2.0,
///     profile_keys: vec![],
///     scenarios: vec![Scenario {
///         id: "a".into(),
///         probability: 1.0,
///         intervals: vec![Interval { weight_hours: 2.0, d_fix: 1.0, d_flex: 0.0, availability: vec![] }],
///     }],
/// };
/// let design = MarketDesign::eom_voll(1000.0, 1000.0, f64::INFINITY);
/// assert!(validate_inputs(&set, &catalog, &design).passed());
/// catalog.storage.push(StorageRecord { discharge_eff_percent: 0.0, ..CatalogRecords::case_study().storage[0].clone() }.to_spec());
/// let report = validate_inputs(&set, &catalog, &design);
/// assert!(report.issues[0].message.contains("discharge efficiency must be positive"));
/// ```
pub fn validate_inputs(scenarios: &ScenarioSet, catalog: &TechnologyCatalog, design: &MarketDesign) -> ValidationReport {
    let mut r = ValidationReport::default();

    if scenarios.scenarios.is_empty() {
        r.push("scenarios", "no scenarios");
    }
    let total: f64 = scenarios.scenarios.iter().map(|s| s.probability).sum();
    if (total - 1.0).abs() > 1e-9 {
        r.push("scenarios", format!("probability weights sum to {}", round_sig(total)));
    }
    if !(scenarios.horizon_hours > 0.0) {
        r.push("scenarios", "horizon must be positive");
    }
    for s in &scenarios.scenarios {
        if !(s.probability >= 0.0) {
            r.push(format!("scenario {}", s.id), format!("negative probability {}", s.probability));
        }
        if s.intervals.is_empty() {
            r.push(format!("scenario {}", s.id), "no intervals");
        }
        let hours: f64 = s.intervals.iter().map(|iv| iv.weight_hours).sum();
        if (hours - scenarios.horizon_hours).abs() > 1e-6 * scenarios.horizon_hours {
            r.push(format!("scenario {}", s.id), format!("interval weights sum to {hours} h, horizon is {} h", scenarios.horizon_hours));
        }
        for (t, iv) in s.intervals.iter().enumerate() {
            let loc = || format!("scenario {} interval {t}", s.id);
            if !(iv.weight_hours > 0.0 && iv.weight_hours.is_finite()) {
                r.push(loc(), format!("duration must be positive, found {}", iv.weight_hours));
            }
            if !(iv.d_fix >= 0.0 && iv.d_fix.is_finite()) || !(iv.d_flex >= 0.0 && iv.d_flex.is_finite()) {
                r.push(loc(), "demand must be finite and nonnegative");
            }
            if iv.availability.len() != scenarios.profile_keys.len() {
                r.push(loc(), format!("{} availability values for {} profiles", iv.availability.len(), scenarios.profile_keys.len()));
            }
            for (k, a) in iv.availability.iter().enumerate() {
                if !(0.0..=1.0).contains(a) {
                    let key = scenarios.profile_keys.get(k).map_or("?", String::as_str);
                    r.push(loc(), format!("availability '{key}' = {a} outside [0, 1]"));
                }
            }
        }
    }

    let mut names = std::collections::BTreeSet::new();
    for g in &catalog.generators {
        let loc = format!("generator {}", g.name);
        if !names.insert(g.name.clone()) {
            r.push(loc.clone(), "duplicate technology name");
        }
        for (what, v) in [
            ("variable cost", g.variable_cost),
            ("annualized capex", g.annualized_capex),
            ("fixed O&M", g.fixed_om),
            ("emission factor", g.emission_factor),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                r.push(loc.clone(), format!("{what} must be finite and nonnegative, found {v}"));
            }
        }
        if !(0.0..=1.0).contains(&g.capacity_credit) {
            r.push(loc.clone(), format!("capacity credit {} outside [0, 1]", g.capacity_credit));
        }
        if let Some(key) = &g.availability_profile_key {
            if scenarios.profile_index(key).is_none() {
                r.push(loc.clone(), format!("availability profile '{key}' not in scenario set"));
            }
        }
    }
    for s in &catalog.storage {
        let loc = format!("storage {}", s.name);
        if !names.insert(s.name.clone()) {
            r.push(loc.clone(), "duplicate technology name");
        }
        if !(s.discharge_efficiency > 0.0) {
            r.push(loc.clone(), "discharge efficiency must be positive");
        }
        if !(s.charge_efficiency > 0.0) {
            r.push(loc.clone(), "charge efficiency must be positive");
        }
        if s.discharge_efficiency > 1.0 || s.charge_efficiency > 1.0 {
            r.push(loc.clone(), "efficiencies cannot exceed 1");
        }
        for (what, v) in [
            ("power capex", s.power_capex),
            ("power fixed O&M", s.power_fixed_om),
            ("energy capex", s.energy_capex),
            ("energy fixed O&M", s.energy_fixed_om),
            ("variable cost", s.variable_cost),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                r.push(loc.clone(), format!("{what} must be finite and nonnegative, found {v}"));
            }
        }
        for v in s.credit_curve.violations() {
            r.push(format!("{loc} credit curve"), v);
        }
        if design.run_mode == RunMode::EPlusCm && s.credit_curve.is_empty() {
            r.push(loc.clone(), "capacity market run needs a credit curve");
        }
    }

    for v in design.violations() {
        r.push("market design", v);
    }
    if let Some(f) = &design.fixed_capacities {
        for k in f.generators.keys() {
            if catalog.generator(k).is_none() {
                r.push("market design", format!("fixed capacity for unknown generator '{k}'"));
            }
        }
        for k in f.storage.keys() {
            if catalog.storage_unit(k).is_none() {
                r.push("market design", format!("fixed capacity for unknown storage '{k}'"));
            }
        }
    }
    r
}

fn round_sig(v: f64) -> f64 {
    (v * 1e9).round() / 1e9
}
