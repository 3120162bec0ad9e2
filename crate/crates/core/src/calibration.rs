//! Net-CONE, the capacity target and the administrative capacity demand
//! curve built from them.

use std::collections::BTreeMap;
use std::io;
use std::path::Path;

use serde::Serialize;

use crate::accreditation::{Accreditation, CreditFit};
use crate::domain::{CapacityDemandCurve, CapacitySegment, CreditCurve, FixedCapacities, TechnologyCatalog};
use crate::planner::EquilibriumSolution;

/// Technology whose net-CONE anchors the curve unless configured otherwise.
pub const DEFAULT_REFERENCE: &str = "CCGT-CCS";

/// Installed capacity below which a technology counts as absent, MW.
pub const INSTALLED_TOL: f64 = 1e-6;

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum CalibrationError {
    #[error("unknown reference technology '{0}'")]
    UnknownReference(String),
    #[error("no credit for installed technology '{0}'")]
    MissingCredit(String),
    #[error("capacity target must be positive, found {0}")]
    Target(f64),
    #[error("reference net-CONE must be positive, found {0}")]
    NetCone(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum NetConeStatus {
    Ok,
    /// The reference recovers its costs from energy alone, so a capacity
    /// market is unnecessary.
    NoMissingMoney,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NetConeRecord {
    pub technology: String,
    pub kind: &'static str,
    /// MW of generation or storage power in the benchmark mix.
    pub installed_mw: f64,
    /// Annualised investment and fixed cost per installed MW.
    pub gross_cost: f64,
    /// Expected energy-market margin per installed MW under the cap.
    pub net_revenue: f64,
    /// `NC^uc = gross − net`.
    pub net_cone_uncredited: f64,
    /// `NC^uc/CC`, when an estimated credit is known and positive.
    pub net_cone_credited: Option<f64>,
    /// `NC^uc/NC_ref`, only for installed technologies.
    pub required_credit: Option<f64>,
    pub estimated_credit: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NetConeTable {
    pub reference: String,
    pub net_cone_ref: f64,
    pub status: NetConeStatus,
    pub records: Vec<NetConeRecord>,
}

impl NetConeTable {
    pub fn record(&self, name: &str) -> Option<&NetConeRecord> {
        self.records.iter().find(|r| r.technology == name)
    }
}

/// Generator credits and storage credit curves.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Credits {
    pub generators: BTreeMap<String, f64>,
    pub storage: BTreeMap<String, CreditCurve>,
}

impl Credits {
    /// Generator credits from an accreditation pass plus fitted storage
    /// curves.
    pub fn from_accreditation(acc: &Accreditation, fits: &[(String, CreditFit)], catalog: &TechnologyCatalog) -> Credits {
        let generators = catalog.generators.iter().filter_map(|g| acc.generator_credit(&g.name).map(|c| (g.name.clone(), c.clamp(0.0, 1.0)))).collect();
        let storage = fits.iter().map(|(n, f)| (n.clone(), f.curve.clone())).collect();
        Credits { generators, storage }
    }

    /// Storage curves multiplied by `k`; generator credits unchanged.
    pub fn scale_storage(&self, k: f64) -> Credits {
        Credits { generators: self.generators.clone(), storage: self.storage.iter().map(|(n, c)| (n.clone(), c.scaled(k))).collect() }
    }

    /// Catalog with these credits installed, as the capacity market uses
    /// them.
    pub fn apply(&self, catalog: &TechnologyCatalog) -> TechnologyCatalog {
        let mut out = catalog.clone();
        for g in &mut out.generators {
            if let Some(&c) = self.generators.get(&g.name) {
                g.capacity_credit = c;
            }
        }
        for s in &mut out.storage {
            if let Some(c) = self.storage.get(&s.name) {
                s.credit_curve = c.clone();
            }
        }
        out
    }
}

/// Per-technology missing money in the capped dispatch of the benchmark mix.
///
/// Installed technologies are valued by their realised margin per MW. An
/// uninstalled generator is valued by what a marginal MW would have earned;
/// uninstalled storage is reported with zero revenue and no required credit.
pub fn net_cone(
    mix: &FixedCapacities,
    capped: &EquilibriumSolution,
    catalog: &TechnologyCatalog,
    reference: &str,
    credits: Option<&Credits>,
) -> Result<NetConeTable, CalibrationError> {
    if catalog.generator(reference).is_none() {
        return Err(CalibrationError::UnknownReference(reference.to_string()));
    }
    let mut records = Vec::new();
    for spec in &catalog.generators {
        let installed = mix.generators.get(&spec.name).copied().unwrap_or(0.0);
        let gross = spec.annual_cost_per_mw();
        let net_revenue = match capped.generator_index(&spec.name) {
            Some(g) if installed > INSTALLED_TOL => capped.energy_margin(&spec.name).unwrap_or(0.0) / capped.generator_capacity[g],
            _ => marginal_generator_revenue(capped, catalog, &spec.name),
        };
        let est = credits.and_then(|c| c.generators.get(&spec.name).copied());
        records.push(record(&spec.name, "generator", installed, gross, net_revenue, est));
    }
    for spec in &catalog.storage {
        let cap = mix.storage.get(&spec.name).copied();
        let installed = cap.map_or(0.0, |c| c.power);
        let (gross, net_revenue, est) = match (cap, capped.storage_index(&spec.name)) {
            (Some(c), Some(_)) if installed > INSTALLED_TOL => {
                let zeta = spec.duration(c.power, c.energy);
                let est = credits.and_then(|cr| cr.storage.get(&spec.name)).map(|f| f.value(zeta));
                (spec.annual_cost_per_mw(zeta), capped.energy_margin(&spec.name).unwrap_or(0.0) / c.power, est)
            }
            _ => (spec.power_cost_per_mw(), 0.0, None),
        };
        records.push(record(&spec.name, "storage", installed, gross, net_revenue, est));
    }
    let r = records.iter().find(|r| r.technology == reference).expect("reference is a generator");
    let net_cone_ref = r.net_cone_uncredited;
    let status = if net_cone_ref <= 1e-6 * r.gross_cost { NetConeStatus::NoMissingMoney } else { NetConeStatus::Ok };
    if status == NetConeStatus::Ok {
        for r in &mut records {
            if r.installed_mw > INSTALLED_TOL {
                r.required_credit = Some(r.net_cone_uncredited / net_cone_ref);
            }
        }
    }
    Ok(NetConeTable { reference: reference.to_string(), net_cone_ref, status, records })
}

fn record(name: &str, kind: &'static str, installed: f64, gross: f64, net_revenue: f64, est: Option<f64>) -> NetConeRecord {
    let nc = gross - net_revenue;
    NetConeRecord {
        technology: name.to_string(),
        kind,
        installed_mw: installed,
        gross_cost: gross,
        net_revenue,
        net_cone_uncredited: nc,
        net_cone_credited: est.filter(|&c| c > 0.0).map(|c| nc / c),
        required_credit: None,
        estimated_credit: est,
    }
}

/// `Σ w·δ·A·max(0, λ − C^V − λ^CT·EF)`: what one more MW would earn.
fn marginal_generator_revenue(sol: &EquilibriumSolution, catalog: &TechnologyCatalog, name: &str) -> f64 {
    let spec = catalog.generator(name).expect("known generator");
    let mc = spec.variable_cost + sol.carbon_price * spec.emission_factor;
    let g = sol.generator_index(name);
    let avail = |k: usize| g.map_or(1.0, |g| sol.availability[g][k]);
    sol.layout.iter().enumerate().map(|(k, iv)| iv.weight() * avail(k) * (sol.energy_price[k] - mc).max(0.0)).sum()
}

/// `Σ_g CC_g·ċ_g + Σ_s f^CC(ζ̇_s)·ċ^P_s` over installed technologies.
///
/// ```
/// use ldesmarket::calibration::{capacity_target, Credits};
/// use ldesmarket::domain::*;
/// let catalog = CatalogRecords::case_study().to_catalog();
/// let mut mix = FixedCapacities::default();
/// mix.generators.insert("CCGT-CCS".into(), 80.0);
/// mix.storage.insert("LDES".into(), StorageCapacity { power: 20.0, energy: 20.0 * 8.0 / 0.5 });
/// let mut credits = Credits::default();
/// credits.generators.insert("CCGT-CCS".into(), 1.0);
/// credits.storage.insert("LDES".into(), CreditCurve::constant(0.5));
/// assert!((capacity_target(&mix, &catalog, &credits).unwrap() - 90.0).abs() < 1e-12);
/// ```
pub fn capacity_target(mix: &FixedCapacities, catalog: &TechnologyCatalog, credits: &Credits) -> Result<f64, CalibrationError> {
    let mut ct = 0.0;
    for (name, &c) in &mix.generators {
        if c > INSTALLED_TOL {
            let cc = credits.generators.get(name).ok_or_else(|| CalibrationError::MissingCredit(name.clone()))?;
            ct += cc * c;
        }
    }
    for (name, cap) in &mix.storage {
        if cap.power > INSTALLED_TOL {
            let curve = credits.storage.get(name).ok_or_else(|| CalibrationError::MissingCredit(name.clone()))?;
            let spec = catalog.storage_unit(name).ok_or_else(|| CalibrationError::MissingCredit(name.clone()))?;
            ct += curve.value(spec.duration(cap.power, cap.energy)) * cap.power;
        }
    }
    Ok(ct)
}

/// Flat at `1.5·NC` up to `0.965·CT`, then linear to `NC` at `CT` and to
/// zero at `1.035·CT`.
///
/// ```
/// use ldesmarket::calibration::build_cm_demand_curve;
/// let c = build_cm_demand_curve(100.0, 60.0).unwrap();
/// let expect = [(96.5, 90.0), (100.0, 60.0), (103.5, 0.0)];
/// for (got, want) in c.breakpoints().iter().zip(expect) {
///     assert!((got.0 - want.0).abs() < 1e-9 && (got.1 - want.1).abs() < 1e-9);
/// }
/// assert!((c.integral(103.5) - 9052.5).abs() < 1e-9);
/// ```
pub fn build_cm_demand_curve(capacity_target: f64, net_cone_ref: f64) -> Result<CapacityDemandCurve, CalibrationError> {
    if !(capacity_target > 0.0 && capacity_target.is_finite()) {
        return Err(CalibrationError::Target(capacity_target));
    }
    if !(net_cone_ref > 0.0 && net_cone_ref.is_finite()) {
        return Err(CalibrationError::NetCone(net_cone_ref));
    }
    // divide last so round targets give exact breakpoints
    let q1 = capacity_target * 965.0 / 1000.0;
    let q3 = capacity_target * 1035.0 / 1000.0;
    let top = 1.5 * net_cone_ref;
    Ok(CapacityDemandCurve {
        fixed_price: top,
        fixed_width: q1,
        segments: vec![
            CapacitySegment { width: capacity_target - q1, start_price: top, end_price: net_cone_ref },
            CapacitySegment { width: q3 - capacity_target, start_price: net_cone_ref, end_price: 0.0 },
        ],
    })
}

pub const CALIBRATION_COLUMNS: [&str; 10] = [
    "technology",
    "kind",
    "installed_mw",
    "gross_cost_usd_per_mw_yr",
    "energy_net_revenue_usd_per_mw_yr",
    "net_cone_uncredited_usd_per_mw_yr",
    "net_cone_credited_usd_per_mw_yr",
    "required_credit",
    "estimated_credit",
    "is_reference",
];

pub const CM_CURVE_COLUMNS: [&str; 6] = ["piece", "quantity_start_mw", "quantity_end_mw", "price_start_usd_per_mw_yr", "price_end_usd_per_mw_yr", "width_mw"];

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

pub fn write_calibration(path: &Path, table: &NetConeTable) -> io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(CALIBRATION_COLUMNS)?;
    for r in &table.records {
        w.write_record([
            r.technology.clone(),
            r.kind.to_string(),
            r.installed_mw.to_string(),
            r.gross_cost.to_string(),
            r.net_revenue.to_string(),
            r.net_cone_uncredited.to_string(),
            opt(r.net_cone_credited),
            opt(r.required_credit),
            opt(r.estimated_credit),
            (r.technology == table.reference).to_string(),
        ])?;
    }
    w.flush()
}

pub fn write_cm_curve(path: &Path, curve: &CapacityDemandCurve) -> io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(CM_CURVE_COLUMNS)?;
    w.write_record(["flat".to_string(), "0".into(), curve.fixed_width.to_string(), curve.fixed_price.to_string(), curve.fixed_price.to_string(), curve.fixed_width.to_string()])?;
    let mut left = curve.fixed_width;
    for (n, s) in curve.segments.iter().enumerate() {
        w.write_record([
            format!("slope_{}", n + 1),
            left.to_string(),
            (left + s.width).to_string(),
            s.start_price.to_string(),
            s.end_price.to_string(),
            s.width.to_string(),
        ])?;
        left += s.width;
    }
    w.flush()
}
