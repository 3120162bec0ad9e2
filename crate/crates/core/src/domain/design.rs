use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use super::{CapacityDemandCurve, DemandMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RunMode {
    EomVoll,
    EomPc,
    EPlusCm,
    DispatchFixedMix,
}

impl RunMode {
    pub fn as_str(self) -> &'static str {
        match self {
            RunMode::EomVoll => "EOM_VOLL",
            RunMode::EomPc => "EOM_PC",
            RunMode::EPlusCm => "E_PLUS_CM",
            RunMode::DispatchFixedMix => "DISPATCH_FIXED_MIX",
        }
    }
}

impl std::fmt::Display for RunMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for RunMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "EOM_VOLL" => Ok(RunMode::EomVoll),
            "EOM_PC" => Ok(RunMode::EomPc),
            "E_PLUS_CM" => Ok(RunMode::EPlusCm),
            "DISPATCH_FIXED_MIX" => Ok(RunMode::DispatchFixedMix),
            _ => Err(format!("unknown run mode '{s}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StorageCapacity {
    pub power: f64,
    pub energy: f64,
}

/// Installed capacities by technology name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct FixedCapacities {
    #[serde(default)]
    pub generators: BTreeMap<String, f64>,
    #[serde(default)]
    pub storage: BTreeMap<String, StorageCapacity>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketDesign {
    pub run_mode: RunMode,
    pub demand_mode: DemandMode,
    pub voll: f64,
    pub pc: f64,
    /// Expected annual emissions allowed, tCO2; `inf` for no cap.
    pub emission_cap: f64,
    #[serde(default)]
    pub capacity_demand_curve: Option<CapacityDemandCurve>,
    #[serde(default)]
    pub fixed_capacities: Option<FixedCapacities>,
}

impl MarketDesign {
    fn base(run_mode: RunMode, demand_mode: DemandMode, voll: f64, pc: f64, emission_cap: f64) -> Self {
        MarketDesign { run_mode, demand_mode, voll, pc, emission_cap, capacity_demand_curve: None, fixed_capacities: None }
    }

    pub fn eom_voll(voll: f64, pc: f64, emission_cap: f64) -> Self {
        Self::base(RunMode::EomVoll, DemandMode::Uncapped, voll, pc, emission_cap)
    }

    pub fn eom_pc(voll: f64, pc: f64, emission_cap: f64) -> Self {
        Self::base(RunMode::EomPc, DemandMode::Capped, voll, pc, emission_cap)
    }

    pub fn e_plus_cm(voll: f64, pc: f64, emission_cap: f64, curve: CapacityDemandCurve) -> Self {
        let mut d = Self::base(RunMode::EPlusCm, DemandMode::Capped, voll, pc, emission_cap);
        d.capacity_demand_curve = Some(curve);
        d
    }

    pub fn dispatch(demand_mode: DemandMode, voll: f64, pc: f64, emission_cap: f64, mix: FixedCapacities) -> Self {
        let mut d = Self::base(RunMode::DispatchFixedMix, demand_mode, voll, pc, emission_cap);
        d.fixed_capacities = Some(mix);
        d
    }

    /// Ceiling of the active demand function.
    pub fn wtp_ceiling(&self) -> f64 {
        match self.demand_mode {
            DemandMode::Uncapped => self.voll,
            DemandMode::Capped => self.pc,
        }
    }

    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.voll > 0.0) {
            out.push(format!("VOLL must be positive, found {}", self.voll));
        }
        if !(self.pc > 0.0 && self.pc <= self.voll) {
            out.push(format!("price cap {} must lie in (0, VOLL]", self.pc));
        }
        if !(self.emission_cap >= 0.0) {
            out.push(format!("emission cap must be nonnegative, found {}", self.emission_cap));
        }
        let expected = match self.run_mode {
            RunMode::EomVoll => Some(DemandMode::Uncapped),
            RunMode::EomPc | RunMode::EPlusCm => Some(DemandMode::Capped),
            RunMode::DispatchFixedMix => None,
        };
        if let Some(m) = expected {
            if m != self.demand_mode {
                out.push(format!("{} requires {:?} demand", self.run_mode, m));
            }
        }
        match (self.run_mode, &self.capacity_demand_curve) {
            (RunMode::EPlusCm, None) => out.push("E_PLUS_CM requires a capacity demand curve".into()),
            (RunMode::EPlusCm, Some(c)) => out.extend(c.violations()),
            (_, Some(_)) => out.push(format!("{} takes no capacity demand curve", self.run_mode)),
            _ => {}
        }
        match (self.run_mode, &self.fixed_capacities) {
            (RunMode::DispatchFixedMix, None) => out.push("DISPATCH_FIXED_MIX requires fixed capacities".into()),
            (RunMode::DispatchFixedMix, Some(f)) => {
                for (k, v) in &f.generators {
                    if !(*v >= 0.0 && v.is_finite()) {
                        out.push(format!("fixed capacity of '{k}' must be finite and nonnegative"));
                    }
                }
                for (k, v) in &f.storage {
                    if !(v.power >= 0.0 && v.energy >= 0.0 && v.power.is_finite() && v.energy.is_finite()) {
                        out.push(format!("fixed capacity of '{k}' must be finite and nonnegative"));
                    }
                }
            }
            (_, Some(_)) => out.push(format!("{} takes no fixed capacities", self.run_mode)),
            _ => {}
        }
        out
    }
}
