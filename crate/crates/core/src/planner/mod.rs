//! The central-planner quadratic program whose optimum is the market
//! equilibrium, and the mapping of its solution back to agents and prices.

mod export;
mod solution;

pub use export::{write_solution_files, SOLUTION_FILES};
pub use solution::{agent_profit, solve_equilibrium, solve_equilibrium_relaxing, EquilibriumSolution, IntervalInfo, RowDual, FALLBACK_TOLERANCE};

use ldesmarket_qp::{ConvexQP, Sense};
use std::collections::BTreeMap;

use crate::domain::{
    validate_inputs, CapacityDemandCurve, DemandMode, EnergyDemandCurve, MarketDesign, RunMode, ScenarioSet,
    TechnologyCatalog,
};

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum PlannerError {
    #[error("inputs failed validation:\n{0}")]
    Invalid(String),
    #[error("pinned quantities violate row {0}")]
    PinnedInfeasible(String),
    #[error("INFEASIBLE: {0}")]
    Infeasible(String),
    #[error("UNBOUNDED: {0}")]
    Unbounded(String),
    #[error("NOT_CONVERGED after {iterations} iterations, max residual {residual:e}")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("solver rejected the program: {0}")]
    Solver(String),
    #[error("unknown technology '{0}'")]
    UnknownTechnology(String),
}

/// A quantity that is either a model variable or pinned to a value and
/// carried as a constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Slot {
    Var(usize),
    Fixed(f64),
}

impl Slot {
    pub fn value(self, x: &[f64]) -> f64 {
        match self {
            Slot::Var(j) => x[j],
            Slot::Fixed(v) => v,
        }
    }
}

/// Dispatch quantities held at given values, per technology name and flat
/// interval index.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DispatchPins {
    pub generation: BTreeMap<String, Vec<f64>>,
    pub charge: BTreeMap<String, Vec<f64>>,
    pub discharge: BTreeMap<String, Vec<f64>>,
    /// Stored energy at the end of each interval.
    pub state_of_charge: BTreeMap<String, Vec<f64>>,
    /// Stored energy at the start of every scenario.
    pub initial_state: BTreeMap<String, f64>,
    /// Overrides the demand function, e.g. to re-value a capped dispatch
    /// with the true willingness to pay.
    pub demand_mode: Option<DemandMode>,
}

/// What a constraint row means; each row has exactly one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowLabel {
    /// `q ≤ A·c`, dual `ν^C`.
    GenCapacity { gen: usize, k: usize },
    Discharge { sto: usize, k: usize },
    Charge { sto: usize, k: usize },
    StateOfCharge { sto: usize, k: usize },
    EnergyCapacity { sto: usize, k: usize },
    EndOfHorizon { sto: usize, scenario: usize },
    /// Energy balance, dual `λ^E·w·δ`.
    Balance { k: usize },
    GenQualification { gen: usize },
    StorageQualification { sto: usize, segment: usize },
    StorageClip { sto: usize },
    /// Capacity balance, dual `λ^CM`.
    CapacityBalance,
    /// Expected emissions, dual `λ^CT`.
    Emission,
}

impl RowLabel {
    pub fn name(&self, layout: &[IntervalInfo]) -> String {
        let at = |k: usize| format!("s{}t{}", layout[k].scenario, layout[k].t);
        match *self {
            RowLabel::GenCapacity { gen, k } => format!("gen_capacity[g{gen},{}]", at(k)),
            RowLabel::Discharge { sto, k } => format!("discharge_limit[s{sto},{}]", at(k)),
            RowLabel::Charge { sto, k } => format!("charge_limit[s{sto},{}]", at(k)),
            RowLabel::StateOfCharge { sto, k } => format!("soc[s{sto},{}]", at(k)),
            RowLabel::EnergyCapacity { sto, k } => format!("energy_limit[s{sto},{}]", at(k)),
            RowLabel::EndOfHorizon { sto, scenario } => format!("end_of_horizon[s{sto},w{scenario}]"),
            RowLabel::Balance { k } => format!("energy_balance[{}]", at(k)),
            RowLabel::GenQualification { gen } => format!("cm_qualification[g{gen}]"),
            RowLabel::StorageQualification { sto, segment } => format!("cm_qualification[s{sto},l{segment}]"),
            RowLabel::StorageClip { sto } => format!("cm_clip[s{sto}]"),
            RowLabel::CapacityBalance => "capacity_balance".into(),
            RowLabel::Emission => "emission_cap".into(),
        }
    }
}

/// Positions of every model quantity.
#[derive(Debug, Clone, PartialEq)]
pub struct VarMap {
    pub gen_capacity: Vec<Slot>,
    pub sto_power: Vec<Slot>,
    pub sto_energy: Vec<Slot>,
    pub sto_initial: Vec<Slot>,
    pub cm_gen: Vec<Option<usize>>,
    pub cm_sto: Vec<Option<usize>>,
    /// `[g][k]`
    pub generation: Vec<Vec<Slot>>,
    pub charge: Vec<Vec<Slot>>,
    pub discharge: Vec<Vec<Slot>>,
    pub soc: Vec<Vec<Slot>>,
    pub d_fix: Vec<usize>,
    pub d_flex: Vec<usize>,
    pub cm_fixed: Option<usize>,
    pub cm_flex: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlannerProgram {
    pub qp: ConvexQP,
    pub labels: Vec<RowLabel>,
    pub vars: VarMap,
    pub layout: Vec<IntervalInfo>,
    pub catalog: TechnologyCatalog,
    pub design: MarketDesign,
    pub demand_mode: DemandMode,
    pub balance_rows: Vec<usize>,
    pub gen_capacity_rows: Vec<Vec<Option<usize>>>,
    /// `A` per generator and flat interval.
    pub availability: Vec<Vec<f64>>,
    pub emission_row: usize,
    pub capacity_balance_row: Option<usize>,
}

impl PlannerProgram {
    pub fn count_rows(&self, pred: impl Fn(&RowLabel) -> bool) -> usize {
        self.labels.iter().filter(|l| pred(l)).count()
    }
}

struct Builder {
    qp: ConvexQP,
    labels: Vec<RowLabel>,
}

impl Builder {
    fn var(&mut self, linear: f64, upper: f64) -> usize {
        self.qp.add_var(linear, upper)
    }

    fn objective(&mut self, slot: Slot, coef: f64) {
        match slot {
            Slot::Var(j) => self.qp.linear[j] += coef,
            Slot::Fixed(v) => self.qp.constant += coef * v,
        }
    }

    /// Adds `Σ coef·slot (sense) rhs`. Rows made only of pinned quantities
    /// are checked and dropped unless `keep` is set.
    fn row(
        &mut self,
        label: RowLabel,
        terms: &[(Slot, f64)],
        sense: Sense,
        rhs: f64,
        keep: bool,
    ) -> Result<Option<usize>, PlannerError> {
        let mut constant = 0.0;
        let mut vars = Vec::with_capacity(terms.len());
        for &(s, c) in terms {
            match s {
                Slot::Var(j) => {
                    if c != 0.0 {
                        vars.push((j, c))
                    }
                }
                Slot::Fixed(v) => constant += c * v,
            }
        }
        if vars.is_empty() && !keep {
            let tol = 1e-6 * (1.0 + rhs.abs().min(1e300) + constant.abs());
            let ok = match sense {
                Sense::Le => constant <= rhs + tol,
                Sense::Eq => (constant - rhs).abs() <= tol,
            };
            if !ok {
                return Err(PlannerError::PinnedInfeasible(format!("{label:?}: {constant} vs {rhs}")));
            }
            return Ok(None);
        }
        let idx = self.qp.add_constraint(vars, sense, rhs - constant);
        self.labels.push(label);
        Ok(Some(idx))
    }
}

/// Builds the welfare-maximisation program for `design` with no pinned
/// dispatch.
pub fn assemble(scenarios: &ScenarioSet, catalog: &TechnologyCatalog, design: &MarketDesign) -> Result<PlannerProgram, PlannerError> {
    assemble_pinned(scenarios, catalog, design, &DispatchPins::default())
}

/// As [`assemble`], with some dispatch quantities held fixed.
pub fn assemble_pinned(
    scenarios: &ScenarioSet,
    catalog: &TechnologyCatalog,
    design: &MarketDesign,
    pins: &DispatchPins,
) -> Result<PlannerProgram, PlannerError> {
    let report = validate_inputs(scenarios, catalog, design);
    if !report.passed() {
        return Err(PlannerError::Invalid(report.to_string()));
    }
    for name in pins.generation.keys() {
        if catalog.generator(name).is_none() {
            return Err(PlannerError::UnknownTechnology(name.clone()));
        }
    }
    for name in pins.charge.keys().chain(pins.discharge.keys()).chain(pins.state_of_charge.keys()).chain(pins.initial_state.keys()) {
        if catalog.storage_unit(name).is_none() {
            return Err(PlannerError::UnknownTechnology(name.clone()));
        }
    }
    let demand_mode = pins.demand_mode.unwrap_or(design.demand_mode);
    let layout = IntervalInfo::layout(scenarios, demand_mode, design)?;
    let nk = layout.len();
    let ng = catalog.generators.len();
    let ns = catalog.storage.len();
    let fixed = design.fixed_capacities.as_ref();
    let cm = design.run_mode == RunMode::EPlusCm;

    let mut b = Builder { qp: ConvexQP::new(), labels: Vec::new() };

    // first stage
    let gen_capacity: Vec<Slot> = catalog
        .generators
        .iter()
        .map(|g| match fixed {
            Some(f) => Slot::Fixed(f.generators.get(&g.name).copied().unwrap_or(0.0)),
            None => Slot::Var(b.var(0.0, f64::INFINITY)),
        })
        .collect();
    let mut sto_power = Vec::with_capacity(ns);
    let mut sto_energy = Vec::with_capacity(ns);
    for s in &catalog.storage {
        match fixed {
            Some(f) => {
                let c = f.storage.get(&s.name).copied().unwrap_or(crate::domain::StorageCapacity { power: 0.0, energy: 0.0 });
                sto_power.push(Slot::Fixed(c.power));
                sto_energy.push(Slot::Fixed(c.energy));
            }
            None => {
                sto_power.push(Slot::Var(b.var(0.0, f64::INFINITY)));
                sto_energy.push(Slot::Var(b.var(0.0, f64::INFINITY)));
            }
        }
    }
    let sto_initial: Vec<Slot> = catalog
        .storage
        .iter()
        .map(|spec| match pins.initial_state.get(&spec.name) {
            Some(&v) => Slot::Fixed(v),
            None => Slot::Var(b.var(0.0, f64::INFINITY)),
        })
        .collect();
    for (g, spec) in catalog.generators.iter().enumerate() {
        b.objective(gen_capacity[g], -spec.annual_cost_per_mw());
    }
    for (s, spec) in catalog.storage.iter().enumerate() {
        b.objective(sto_power[s], -spec.power_cost_per_mw());
        b.objective(sto_energy[s], -spec.energy_cost_per_mwh());
    }

    // second stage
    let pinned = |map: &BTreeMap<String, Vec<f64>>, name: &str, k: usize| map.get(name).map(|v| v[k]);
    for (name, v) in pins.generation.iter().chain(&pins.charge).chain(&pins.discharge).chain(&pins.state_of_charge) {
        if v.len() != nk {
            return Err(PlannerError::Invalid(format!("pinned series for '{name}' has {} values, expected {nk}", v.len())));
        }
    }
    let mut generation = vec![Vec::with_capacity(nk); ng];
    let mut charge = vec![Vec::with_capacity(nk); ns];
    let mut discharge = vec![Vec::with_capacity(nk); ns];
    let mut soc = vec![Vec::with_capacity(nk); ns];
    let mut d_fix = Vec::with_capacity(nk);
    let mut d_flex = Vec::with_capacity(nk);
    for (k, iv) in layout.iter().enumerate() {
        let wd = iv.weight();
        for (g, spec) in catalog.generators.iter().enumerate() {
            let slot = match pinned(&pins.generation, &spec.name, k) {
                Some(v) => Slot::Fixed(v),
                None => Slot::Var(b.var(0.0, f64::INFINITY)),
            };
            b.objective(slot, -wd * spec.variable_cost);
            generation[g].push(slot);
        }
        for (s, spec) in catalog.storage.iter().enumerate() {
            let ch = match pinned(&pins.charge, &spec.name, k) {
                Some(v) => Slot::Fixed(v),
                None => Slot::Var(b.var(0.0, f64::INFINITY)),
            };
            let dis = match pinned(&pins.discharge, &spec.name, k) {
                Some(v) => Slot::Fixed(v),
                None => Slot::Var(b.var(0.0, f64::INFINITY)),
            };
            b.objective(dis, -wd * spec.variable_cost);
            charge[s].push(ch);
            discharge[s].push(dis);
            soc[s].push(match pinned(&pins.state_of_charge, &spec.name, k) {
                Some(v) => Slot::Fixed(v),
                None => Slot::Var(b.var(0.0, f64::INFINITY)),
            });
        }
        let c = iv.curve;
        let jf = b.var(wd * c.wtp_ceiling, c.fixed_width);
        let jx = b.var(wd * c.wtp_ceiling, c.flexible_width);
        if c.flexible_width > 0.0 {
            b.qp.add_quadratic(jx, jx, -wd * c.wtp_ceiling / c.flexible_width);
        }
        d_fix.push(jf);
        d_flex.push(jx);
    }

    // capacity market quantities
    let mut cm_gen = vec![None; ng];
    let mut cm_sto = vec![None; ns];
    let mut cm_fixed = None;
    let mut cm_flex = Vec::new();
    if cm {
        let curve: &CapacityDemandCurve = design.capacity_demand_curve.as_ref().expect("validated");
        for v in cm_gen.iter_mut() {
            *v = Some(b.var(0.0, f64::INFINITY));
        }
        for v in cm_sto.iter_mut() {
            *v = Some(b.var(0.0, f64::INFINITY));
        }
        let j = b.var(curve.fixed_price, curve.fixed_width);
        cm_fixed = Some(j);
        for seg in &curve.segments {
            let j = b.var(seg.start_price, seg.width);
            b.qp.add_quadratic(j, j, -(seg.start_price - seg.end_price) / seg.width);
            cm_flex.push(j);
        }
    }

    // rows
    let mut gen_capacity_rows = vec![Vec::with_capacity(nk); ng];
    let mut availability = vec![Vec::with_capacity(nk); ng];
    let mut balance_rows = Vec::with_capacity(nk);
    let mut first_k = vec![usize::MAX; scenarios.scenarios.len()];
    let mut last_k = vec![0; scenarios.scenarios.len()];
    for (k, iv) in layout.iter().enumerate() {
        first_k[iv.scenario] = first_k[iv.scenario].min(k);
        last_k[iv.scenario] = k;
    }
    for (k, iv) in layout.iter().enumerate() {
        for (g, spec) in catalog.generators.iter().enumerate() {
            let a = match &spec.availability_profile_key {
                Some(key) => scenarios.scenarios[iv.scenario].intervals[iv.t].availability[scenarios.profile_index(key).expect("validated")],
                None => 1.0,
            };
            availability[g].push(a);
            let r = b.row(RowLabel::GenCapacity { gen: g, k }, &[(generation[g][k], 1.0), (gen_capacity[g], -a)], Sense::Le, 0.0, false)?;
            gen_capacity_rows[g].push(r);
        }
        for (s, spec) in catalog.storage.iter().enumerate() {
            b.row(RowLabel::Discharge { sto: s, k }, &[(discharge[s][k], 1.0), (sto_power[s], -1.0)], Sense::Le, 0.0, false)?;
            b.row(RowLabel::Charge { sto: s, k }, &[(charge[s][k], 1.0), (sto_power[s], -1.0)], Sense::Le, 0.0, false)?;
            let prev = if k == first_k[iv.scenario] { sto_initial[s] } else { soc[s][k - 1] };
            b.row(
                RowLabel::StateOfCharge { sto: s, k },
                &[
                    (soc[s][k], 1.0),
                    (prev, -1.0),
                    (charge[s][k], -iv.weight_hours * spec.charge_efficiency),
                    (discharge[s][k], iv.weight_hours / spec.discharge_efficiency),
                ],
                Sense::Eq,
                0.0,
                false,
            )?;
            b.row(RowLabel::EnergyCapacity { sto: s, k }, &[(soc[s][k], 1.0), (sto_energy[s], -1.0)], Sense::Le, 0.0, false)?;
        }
        let mut terms = vec![(Slot::Var(d_fix[k]), 1.0), (Slot::Var(d_flex[k]), 1.0)];
        for g in 0..ng {
            terms.push((generation[g][k], -1.0));
        }
        for s in 0..ns {
            terms.push((discharge[s][k], -1.0));
            terms.push((charge[s][k], 1.0));
        }
        balance_rows.push(b.row(RowLabel::Balance { k }, &terms, Sense::Eq, 0.0, true)?.expect("kept"));
    }
    for s in 0..ns {
        for (w, &kt) in last_k.iter().enumerate() {
            if first_k[w] == usize::MAX {
                continue;
            }
            b.row(RowLabel::EndOfHorizon { sto: s, scenario: w }, &[(sto_initial[s], 1.0), (soc[s][kt], -1.0)], Sense::Le, 0.0, false)?;
        }
    }

    let mut capacity_balance_row = None;
    if cm {
        let curve = design.capacity_demand_curve.as_ref().expect("validated");
        let mut supply = Vec::new();
        for (g, spec) in catalog.generators.iter().enumerate() {
            let j = Slot::Var(cm_gen[g].expect("cm"));
            b.row(RowLabel::GenQualification { gen: g }, &[(j, 1.0), (gen_capacity[g], -spec.capacity_credit)], Sense::Le, 0.0, false)?;
            supply.push((j, -1.0));
        }
        for (s, spec) in catalog.storage.iter().enumerate() {
            let j = Slot::Var(cm_sto[s].expect("cm"));
            for (l, seg) in spec.credit_curve.segments.iter().enumerate() {
                b.row(
                    RowLabel::StorageQualification { sto: s, segment: l },
                    &[(j, 1.0), (sto_power[s], -seg.alpha), (sto_energy[s], -seg.beta * spec.discharge_efficiency)],
                    Sense::Le,
                    0.0,
                    false,
                )?;
            }
            if spec.credit_curve.exceeds_one() {
                b.row(RowLabel::StorageClip { sto: s }, &[(j, 1.0), (sto_power[s], -1.0)], Sense::Le, 0.0, false)?;
            }
            supply.push((j, -1.0));
        }
        let mut terms = vec![(Slot::Var(cm_fixed.expect("cm")), 1.0)];
        terms.extend(cm_flex.iter().map(|&j| (Slot::Var(j), 1.0)));
        terms.extend(supply);
        capacity_balance_row = b.row(RowLabel::CapacityBalance, &terms, Sense::Eq, 0.0, true)?;
        debug_assert!(curve.total_width() > 0.0);
    }

    let mut terms = Vec::new();
    for (k, iv) in layout.iter().enumerate() {
        for (g, spec) in catalog.generators.iter().enumerate() {
            if spec.emission_factor > 0.0 {
                terms.push((generation[g][k], iv.weight() * spec.emission_factor));
            }
        }
    }
    let fixed_emissions: f64 = terms.iter().filter_map(|&(s, c)| if let Slot::Fixed(v) = s { Some(c * v) } else { None }).sum();
    if terms.iter().all(|(s, _)| matches!(s, Slot::Fixed(_)))
        && fixed_emissions > design.emission_cap + 1e-6 * (1.0 + design.emission_cap.abs())
    {
        return Err(PlannerError::PinnedInfeasible(format!("emission cap: {fixed_emissions} > {}", design.emission_cap)));
    }
    // keep the cap row even when nothing emits so its dual is always reported
    let emission_row = b.row(RowLabel::Emission, &terms, Sense::Le, design.emission_cap, true)?.expect("kept");
    if terms.iter().all(|(s, _)| matches!(s, Slot::Fixed(_))) {
        // a pinned overshoot within tolerance must not make the empty row infeasible
        let rhs = &mut b.qp.constraints[emission_row].rhs;
        *rhs = rhs.max(0.0);
    }

    Ok(PlannerProgram {
        qp: b.qp,
        labels: b.labels,
        vars: VarMap {
            gen_capacity,
            sto_power,
            sto_energy,
            sto_initial,
            cm_gen,
            cm_sto,
            generation,
            charge,
            discharge,
            soc,
            d_fix,
            d_flex,
            cm_fixed,
            cm_flex,
        },
        layout,
        catalog: catalog.clone(),
        design: design.clone(),
        demand_mode,
        balance_rows,
        gen_capacity_rows,
        availability,
        emission_row,
        capacity_balance_row,
    })
}

impl IntervalInfo {
    fn layout(scenarios: &ScenarioSet, mode: DemandMode, design: &MarketDesign) -> Result<Vec<IntervalInfo>, PlannerError> {
        let mut out = Vec::with_capacity(scenarios.num_intervals());
        for (w, sc) in scenarios.scenarios.iter().enumerate() {
            for (t, iv) in sc.intervals.iter().enumerate() {
                let curve = EnergyDemandCurve::new(mode, iv.d_fix, iv.d_flex, design.voll, design.pc)
                    .map_err(|e| PlannerError::Invalid(e.to_string()))?;
                out.push(IntervalInfo {
                    scenario: w,
                    t,
                    weight_hours: iv.weight_hours,
                    probability: sc.probability,
                    d_fix: iv.d_fix,
                    d_flex: iv.d_flex,
                    curve,
                });
            }
        }
        Ok(out)
    }
}
