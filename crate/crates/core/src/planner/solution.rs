use ldesmarket_qp::{solve, Residuals, SolveOptions, Status};
use serde::Serialize;

use super::{PlannerError, PlannerProgram, RowLabel};
use crate::domain::{DemandMode, EnergyDemandCurve, FixedCapacities, RunMode, StorageCapacity, TechnologyCatalog};

/// Position and demand data of one flat interval `k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntervalInfo {
    pub scenario: usize,
    pub t: usize,
    pub weight_hours: f64,
    pub probability: f64,
    /// Raw `D^fix`, before any truncation.
    pub d_fix: f64,
    pub d_flex: f64,
    /// Demand function the program used here.
    pub curve: EnergyDemandCurve,
}

impl IntervalInfo {
    /// `w·δ`
    pub fn weight(&self) -> f64 {
        self.weight_hours * self.probability
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RowDual {
    pub label: RowLabel,
    /// Dual as returned by the solver, per weighted unit.
    pub raw: f64,
}

/// Primal decisions and prices at the optimum.
///
/// Per-interval series are indexed by flat interval `k` (scenarios in order,
/// intervals within). Prices are de-weighted to $/MWh.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumSolution {
    pub run_mode: RunMode,
    pub demand_mode: DemandMode,
    pub voll: f64,
    pub pc: f64,
    pub emission_cap: f64,
    pub catalog: TechnologyCatalog,
    pub layout: Vec<IntervalInfo>,
    pub generator_capacity: Vec<f64>,
    pub storage_power: Vec<f64>,
    pub storage_energy: Vec<f64>,
    pub storage_initial: Vec<f64>,
    pub cm_generator: Vec<f64>,
    pub cm_storage: Vec<f64>,
    /// `d^C`, total capacity procured.
    pub cm_volume: f64,
    /// `A`, `[g][k]`.
    pub availability: Vec<Vec<f64>>,
    /// `[g][k]`
    pub generation: Vec<Vec<f64>>,
    pub charge: Vec<Vec<f64>>,
    pub discharge: Vec<Vec<f64>>,
    pub soc: Vec<Vec<f64>>,
    pub served_fixed: Vec<f64>,
    pub served_flex: Vec<f64>,
    /// `λ^E` in $/MWh.
    pub energy_price: Vec<f64>,
    /// `ν^C/(w·δ)` in $/MWh, `[g][k]`.
    pub generator_rent: Vec<Vec<f64>>,
    /// `λ^CM` in $/MW-yr.
    pub capacity_price: f64,
    /// `λ^CT` in $/tCO2.
    pub carbon_price: f64,
    pub objective: f64,
    pub residuals: Residuals,
    pub iterations: usize,
    pub row_duals: Vec<RowDual>,
}

/// Solves the program and maps the result back to model quantities.
pub fn solve_equilibrium(program: &PlannerProgram, options: &SolveOptions) -> Result<EquilibriumSolution, PlannerError> {
    let res = solve(&program.qp, options).map_err(|e| PlannerError::Solver(e.to_string()))?;
    match res.status {
        Status::Optimal => {}
        Status::Infeasible => {
            return Err(PlannerError::Infeasible(format!("{} (e.g. emission cap unreachable)", program.design.run_mode)))
        }
        Status::Unbounded => return Err(PlannerError::Unbounded(format!("{} (check costs)", program.design.run_mode))),
        Status::NotConverged => {
            return Err(PlannerError::NotConverged { iterations: res.iterations, residual: res.residuals.max() })
        }
    }
    let x = &res.primal;
    let v = &program.vars;
    let val = |s: &super::Slot| s.value(x);
    let series = |rows: &Vec<Vec<super::Slot>>| rows.iter().map(|r| r.iter().map(val).collect()).collect();
    let layout = program.layout.clone();
    let energy_price = program.balance_rows.iter().zip(&layout).map(|(&r, iv)| res.duals[r] / iv.weight()).collect();
    let generator_rent = program
        .gen_capacity_rows
        .iter()
        .map(|rows| rows.iter().zip(&layout).map(|(r, iv)| r.map_or(0.0, |r| res.duals[r] / iv.weight())).collect())
        .collect();
    let cm_volume = v.cm_fixed.map_or(0.0, |j| x[j]) + v.cm_flex.iter().map(|&j| x[j]).sum::<f64>();
    Ok(EquilibriumSolution {
        run_mode: program.design.run_mode,
        demand_mode: program.demand_mode,
        voll: program.design.voll,
        pc: program.design.pc,
        emission_cap: program.design.emission_cap,
        catalog: program.catalog.clone(),
        generator_capacity: v.gen_capacity.iter().map(val).collect(),
        storage_power: v.sto_power.iter().map(val).collect(),
        storage_energy: v.sto_energy.iter().map(val).collect(),
        storage_initial: v.sto_initial.iter().map(val).collect(),
        cm_generator: v.cm_gen.iter().map(|j| j.map_or(0.0, |j| x[j])).collect(),
        cm_storage: v.cm_sto.iter().map(|j| j.map_or(0.0, |j| x[j])).collect(),
        cm_volume,
        availability: program.availability.clone(),
        generation: series(&v.generation),
        charge: series(&v.charge),
        discharge: series(&v.discharge),
        soc: v.soc.iter().map(|r| r.iter().map(|s| s.value(x)).collect()).collect(),
        served_fixed: v.d_fix.iter().map(|&j| x[j]).collect(),
        served_flex: v.d_flex.iter().map(|&j| x[j]).collect(),
        energy_price,
        generator_rent,
        capacity_price: program.capacity_balance_row.map_or(0.0, |r| res.duals[r]),
        carbon_price: res.duals[program.emission_row],
        objective: res.objective,
        residuals: res.residuals,
        iterations: res.iterations,
        row_duals: program.labels.iter().zip(&res.duals).map(|(&label, &raw)| RowDual { label, raw }).collect(),
        layout,
    })
}

/// Tolerance that an unconverged tight solve falls back to.
pub const FALLBACK_TOLERANCE: f64 = 1e-8;

/// As [`solve_equilibrium`]; a solve tighter than [`FALLBACK_TOLERANCE`]
/// that does not converge is retried at that tolerance.
pub fn solve_equilibrium_relaxing(program: &PlannerProgram, options: &SolveOptions) -> Result<EquilibriumSolution, PlannerError> {
    match solve_equilibrium(program, options) {
        Err(PlannerError::NotConverged { .. }) if options.tolerance < FALLBACK_TOLERANCE => {
            solve_equilibrium(program, &SolveOptions { tolerance: FALLBACK_TOLERANCE, ..*options })
        }
        r => r,
    }
}

impl EquilibriumSolution {
    pub fn num_intervals(&self) -> usize {
        self.layout.len()
    }

    pub fn generator_index(&self, name: &str) -> Option<usize> {
        self.catalog.generators.iter().position(|g| g.name == name)
    }

    pub fn storage_index(&self, name: &str) -> Option<usize> {
        self.catalog.storage.iter().position(|s| s.name == name)
    }

    /// Total consumption `d^fix + d^flex` in interval `k`.
    pub fn served(&self, k: usize) -> f64 {
        self.served_fixed[k] + self.served_flex[k]
    }

    /// `Σ w·δ·d`, expected annual served energy.
    pub fn expected_served_energy(&self) -> f64 {
        self.layout.iter().enumerate().map(|(k, iv)| iv.weight() * self.served(k)).sum()
    }

    pub fn expected_emissions(&self) -> f64 {
        let mut e = 0.0;
        for (g, spec) in self.catalog.generators.iter().enumerate() {
            for (k, iv) in self.layout.iter().enumerate() {
                e += iv.weight() * spec.emission_factor * self.generation[g][k];
            }
        }
        e
    }

    /// `η^dis·c^E/c^P` of storage `s`.
    pub fn storage_duration(&self, s: usize) -> f64 {
        self.catalog.storage[s].duration(self.storage_power[s], self.storage_energy[s])
    }

    /// Installed capacities, for fixing them in a later run.
    pub fn mix(&self) -> FixedCapacities {
        FixedCapacities {
            generators: self.catalog.generators.iter().zip(&self.generator_capacity).map(|(g, &c)| (g.name.clone(), c)).collect(),
            storage: self
                .catalog
                .storage
                .iter()
                .enumerate()
                .map(|(s, spec)| (spec.name.clone(), StorageCapacity { power: self.storage_power[s], energy: self.storage_energy[s] }))
                .collect(),
        }
    }

    /// Annualised investment and fixed cost of the installed capacity of a
    /// technology, $/yr.
    pub fn annual_cost(&self, name: &str) -> Result<f64, PlannerError> {
        if let Some(g) = self.generator_index(name) {
            return Ok(self.generator_capacity[g] * self.catalog.generators[g].annual_cost_per_mw());
        }
        if let Some(s) = self.storage_index(name) {
            let spec = &self.catalog.storage[s];
            return Ok(self.storage_power[s] * spec.power_cost_per_mw() + self.storage_energy[s] * spec.energy_cost_per_mwh());
        }
        Err(PlannerError::UnknownTechnology(name.to_string()))
    }

    /// Expected energy-market margin of a technology, net of variable cost
    /// and carbon charges, $/yr.
    pub fn energy_margin(&self, name: &str) -> Result<f64, PlannerError> {
        if let Some(g) = self.generator_index(name) {
            let spec = &self.catalog.generators[g];
            return Ok(self
                .layout
                .iter()
                .enumerate()
                .map(|(k, iv)| {
                    iv.weight()
                        * (self.energy_price[k] - spec.variable_cost - self.carbon_price * spec.emission_factor)
                        * self.generation[g][k]
                })
                .sum());
        }
        if let Some(s) = self.storage_index(name) {
            let spec = &self.catalog.storage[s];
            return Ok(self
                .layout
                .iter()
                .enumerate()
                .map(|(k, iv)| {
                    iv.weight()
                        * (self.energy_price[k] * (self.discharge[s][k] - self.charge[s][k])
                            - spec.variable_cost * self.discharge[s][k])
                })
                .sum());
        }
        Err(PlannerError::UnknownTechnology(name.to_string()))
    }

    /// `c^CM·λ^CM` of a technology.
    pub fn capacity_revenue(&self, name: &str) -> Result<f64, PlannerError> {
        if let Some(g) = self.generator_index(name) {
            return Ok(self.cm_generator[g] * self.capacity_price);
        }
        if let Some(s) = self.storage_index(name) {
            return Ok(self.cm_storage[s] * self.capacity_price);
        }
        Err(PlannerError::UnknownTechnology(name.to_string()))
    }
}

/// Agent objective at the equilibrium: energy margin plus capacity revenue
/// minus annualised investment and fixed costs, $/yr.
///
/// ```
/// use ldesmarket::domain::*;
/// use ldesmarket::planner::{agent_profit, assemble, solve_equilibrium};
/// use ldesmarket_qp::SolveOptions;
///
/// let scenarios = ScenarioSet {
///     horizon_hours: 1.0,
///     profile_keys: vec![],
///     scenarios: vec![Scenario {
///         id: "only".into(),
///         probability: 1.0,
///         intervals: vec![Interval { weight_hours: 1.0, d_fix: 10.0, d_flex: 1.0, availability: vec![] }],
///     }],
/// };
/// let gen = GeneratorSpec {
///     name: "G".into(), variable_cost: 10.0, annualized_capex: 100.0, fixed_om: 0.0,
///     emission_factor: 0.0, availability_profile_key: None, capacity_credit: 1.0,
/// };
/// let catalog = TechnologyCatalog { generators: vec![gen], storage: vec![] };
/// let design = MarketDesign::eom_voll(1000.0, 1000.0, f64::INFINITY);
/// let sol = solve_equilibrium(&assemble(&scenarios, &catalog, &design).unwrap(), &SolveOptions::default()).unwrap();
/// assert!((sol.energy_price[0] - 110.0).abs() < 1e-6);
/// assert!(agent_profit(&sol, "G").unwrap().abs() < 1e-6);
/// ```
pub fn agent_profit(solution: &EquilibriumSolution, technology: &str) -> Result<f64, PlannerError> {
    Ok(solution.energy_margin(technology)? + solution.capacity_revenue(technology)? - solution.annual_cost(technology)?)
}
