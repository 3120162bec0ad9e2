//! The TOML run configuration and its resolution into model inputs.

use std::path::{Path, PathBuf};

use ldesmarket::accreditation::{AccreditationSettings, Paradigm, DEFAULT_DURATIONS};
use ldesmarket::analysis::SuiteParams;
use ldesmarket::calibration::DEFAULT_REFERENCE;
use ldesmarket::domain::{
    CapacityDemandCurve, CatalogRecords, DemandMode, FixedCapacities, MarketDesign, RunMode, ScenarioSet, TechnologyCatalog,
};
use ldesmarket::qp::SolveOptions;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Diagnostic};
use crate::synth::{generate_synthetic_scenarios, SynthParams};

/// The bundled desk-scale case, used when no `--config` is given.
pub const DESK_CONFIG: &str = include_str!("../configs/desk.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Seed of the synthetic scenario generator.
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Output directory; relative paths resolve against the working
    /// directory.
    #[serde(default)]
    pub out: Option<PathBuf>,
    /// Worker threads; absent or 0 means one per core.
    #[serde(default)]
    pub threads: Option<usize>,
    /// Technology catalog file; the case-study catalog when absent.
    #[serde(default)]
    pub catalog: Option<PathBuf>,
    #[serde(default)]
    pub scenarios: ScenarioSource,
    /// Generator settings, used when `scenarios.path` is absent.
    #[serde(default)]
    pub synth: SynthParams,
    pub design: DesignConfig,
    #[serde(default)]
    pub accreditation: AccreditationConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    /// Directory that relative input paths are read from.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_seed() -> u64 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioSource {
    pub path: Option<PathBuf>,
    /// Scenario weights in order of first appearance; uniform when absent.
    pub probabilities: Option<Vec<f64>>,
    pub horizon_hours: f64,
}

impl Default for ScenarioSource {
    fn default() -> Self {
        ScenarioSource { path: None, probabilities: None, horizon_hours: 8760.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignConfig {
    /// $/MWh.
    pub voll: f64,
    /// Price cap, $/MWh. Give this or `pc_fraction`; VOLL when neither.
    #[serde(default)]
    pub pc: Option<f64>,
    /// Price cap as a fraction of VOLL.
    #[serde(default)]
    pub pc_fraction: Option<f64>,
    /// Annual emission intensity limit, gCO2/kWh of expected demand. No cap
    /// when absent.
    #[serde(default)]
    pub emission_intensity_g_per_kwh: Option<f64>,
    /// Run of the `solve` subcommand.
    #[serde(default = "default_run_mode")]
    pub run_mode: RunMode,
    /// Demand function of a DISPATCH_FIXED_MIX run.
    #[serde(default)]
    pub demand_mode: Option<DemandMode>,
    /// Technology whose net-CONE anchors the capacity demand curve.
    #[serde(default = "default_reference")]
    pub reference: String,
    /// For `solve` in E_PLUS_CM.
    #[serde(default)]
    pub capacity_demand_curve: Option<CapacityDemandCurve>,
    /// For `solve` in DISPATCH_FIXED_MIX, and the mix `accredit` accredits.
    #[serde(default)]
    pub fixed_capacities: Option<FixedCapacities>,
}

fn default_run_mode() -> RunMode {
    RunMode::EomVoll
}

fn default_reference() -> String {
    DEFAULT_REFERENCE.to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AccreditationConfig {
    /// MW.
    pub epsilon: f64,
    /// Hours, increasing.
    pub durations: Vec<f64>,
    pub paradigm: Paradigm,
    pub segment_count: usize,
    pub truncate_at_saturation: bool,
}

impl Default for AccreditationConfig {
    fn default() -> Self {
        AccreditationConfig {
            epsilon: 0.01,
            durations: DEFAULT_DURATIONS.to_vec(),
            paradigm: Paradigm::Unconstrained,
            segment_count: 4,
            truncate_at_saturation: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub scaling: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { tolerance: 1e-10, max_iterations: 200, scaling: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    /// Multipliers on the storage credit curves.
    pub factors: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig { factors: vec![0.8, 1.0, 1.2] }
    }
}

/// Everything a subcommand needs, read and checked.
#[derive(Debug, Clone)]
pub struct Inputs {
    pub scenarios: ScenarioSet,
    pub catalog: TechnologyCatalog,
    pub params: SuiteParams,
    /// The design of `solve`.
    pub design: MarketDesign,
    pub fixed_capacities: Option<FixedCapacities>,
    pub sweep_factors: Vec<f64>,
}

impl RunConfig {
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<RunConfig, CliError> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::config(format!("config: {}", e.message())).with(toml_diagnostic(text, &e)))?;
        cfg.base_dir = base_dir.to_path_buf();
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<RunConfig, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        RunConfig::from_toml(&text, &base)
    }

    /// The bundled desk case.
    pub fn desk() -> RunConfig {
        RunConfig::from_toml(DESK_CONFIG, Path::new(".")).expect("bundled config parses")
    }

    fn resolve_path(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn price_cap(&self) -> Result<f64, CliError> {
        match (self.design.pc, self.design.pc_fraction) {
            (Some(_), Some(_)) => Err(CliError::config("give design.pc or design.pc_fraction, not both")),
            (Some(pc), None) => Ok(pc),
            (None, Some(f)) => Ok(f * self.design.voll),
            (None, None) => Ok(self.design.voll),
        }
    }

    pub fn solve_options(&self) -> SolveOptions {
        SolveOptions { tolerance: self.solver.tolerance, max_iterations: self.solver.max_iterations, scaling: self.solver.scaling }
    }

    pub fn load_scenarios(&self) -> Result<ScenarioSet, CliError> {
        match &self.scenarios.path {
            Some(p) => {
                let path = self.resolve_path(p);
                let text = std::fs::read_to_string(&path).map_err(|e| CliError::config(format!("cannot read scenarios {}: {e}", path.display())))?;
                ScenarioSet::from_csv(&text, self.scenarios.probabilities.as_deref(), self.scenarios.horizon_hours).map_err(|diags| {
                    let mut err = CliError::config(format!("{}: {} malformed rows", path.display(), diags.len()));
                    for d in diags {
                        err = err.with(Diagnostic { location: format!("{}:{}", path.display(), d.line), message: d.message });
                    }
                    err
                })
            }
            None => {
                if self.synth.intervals_per_year < 24 {
                    return Err(CliError::config(format!("synth.intervals_per_year must be at least 24, found {}", self.synth.intervals_per_year)));
                }
                Ok(generate_synthetic_scenarios(self.seed, &self.synth))
            }
        }
    }

    pub fn load_catalog(&self) -> Result<TechnologyCatalog, CliError> {
        let records = match &self.catalog {
            Some(p) => {
                let path = self.resolve_path(p);
                let text = std::fs::read_to_string(&path).map_err(|e| CliError::config(format!("cannot read catalog {}: {e}", path.display())))?;
                toml::from_str::<CatalogRecords>(&text).map_err(|e| {
                    CliError::config(format!("catalog {}: {}", path.display(), e.message())).with(toml_diagnostic(&text, &e))
                })?
            }
            None => CatalogRecords::case_study(),
        };
        Ok(records.to_catalog())
    }

    /// Reads the scenario and catalog files and derives the emission cap.
    pub fn resolve(&self) -> Result<Inputs, CliError> {
        let scenarios = self.load_scenarios()?;
        let catalog = self.load_catalog()?;
        let pc = self.price_cap()?;
        let voll = self.design.voll;
        let emission_cap = match self.design.emission_intensity_g_per_kwh {
            Some(ei) if !(ei >= 0.0) => return Err(CliError::config(format!("emission intensity must be nonnegative, found {ei}"))),
            Some(ei) => ei / 1000.0 * scenarios.expected_demand(),
            None => f64::INFINITY,
        };
        let a = &self.accreditation;
        let mut params = SuiteParams::new(voll, pc, emission_cap);
        params.reference = self.design.reference.clone();
        params.segment_count = a.segment_count;
        params.solve = self.solve_options();
        params.accreditation = AccreditationSettings {
            epsilon: a.epsilon,
            durations: a.durations.clone(),
            paradigm: a.paradigm,
            truncate_at_saturation: a.truncate_at_saturation,
            solve: self.solve_options(),
        };
        let d = &self.design;
        let mut design = match d.run_mode {
            RunMode::EomVoll => MarketDesign::eom_voll(voll, pc, emission_cap),
            RunMode::EomPc => MarketDesign::eom_pc(voll, pc, emission_cap),
            RunMode::EPlusCm => {
                let mut m = MarketDesign::eom_pc(voll, pc, emission_cap);
                m.run_mode = RunMode::EPlusCm;
                m
            }
            RunMode::DispatchFixedMix => {
                let mut m = MarketDesign::eom_voll(voll, pc, emission_cap);
                m.run_mode = RunMode::DispatchFixedMix;
                m.demand_mode = d.demand_mode.unwrap_or(DemandMode::Capped);
                m
            }
        };
        if let Some(mode) = d.demand_mode {
            design.demand_mode = mode;
        }
        design.capacity_demand_curve = d.capacity_demand_curve.clone();
        if d.run_mode == RunMode::DispatchFixedMix {
            design.fixed_capacities = d.fixed_capacities.clone();
        }
        let mut issues = Vec::new();
        if !(a.segment_count >= 1) {
            issues.push("accreditation.segment_count must be at least 1".to_string());
        }
        if a.durations.is_empty() || a.durations.windows(2).any(|w| !(w[1] > w[0])) || a.durations[0] <= 0.0 {
            issues.push("accreditation.durations must be positive and strictly increasing".to_string());
        }
        if !(self.solver.tolerance > 0.0) {
            issues.push(format!("solver.tolerance must be positive, found {}", self.solver.tolerance));
        }
        if let Some(k) = self.sweep.factors.iter().find(|k| !(**k >= 0.0 && k.is_finite())) {
            issues.push(format!("sweep factor {k} must be finite and nonnegative"));
        }
        if !issues.is_empty() {
            let mut err = CliError::config(format!("{} invalid settings", issues.len()));
            for m in issues {
                err = err.with(Diagnostic { location: "config".into(), message: m });
            }
            return Err(err);
        }
        Ok(Inputs {
            scenarios,
            catalog,
            params,
            design,
            fixed_capacities: d.fixed_capacities.clone(),
            sweep_factors: self.sweep.factors.clone(),
        })
    }
}

fn toml_diagnostic(text: &str, e: &toml::de::Error) -> Diagnostic {
    let location = match e.span() {
        Some(span) => format!("line {}", text[..span.start.min(text.len())].matches('\n').count() + 1),
        None => "config".to_string(),
    };
    Diagnostic { location, message: e.message().to_string() }
}
