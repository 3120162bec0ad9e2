//! Experiment harness: the four market runs, welfare under the true
//! willingness to pay, the book value of stored energy, missing money, price
//! metrics and the storage credit sensitivity sweep.

use std::io;
use std::path::Path;

use ldesmarket_qp::SolveOptions;
use rayon::prelude::*;
use serde::Serialize;

use crate::accreditation::{
    accredit, baseline_dispatch, fit_credit_curve, unserved_energy, Accreditation, AccreditationError, AccreditationSettings,
    CreditFit, EueConvention, UnservedSeries,
};
use crate::calibration::{build_cm_demand_curve, capacity_target, net_cone, CalibrationError, Credits, NetConeStatus, NetConeTable, DEFAULT_REFERENCE};
use crate::domain::{
    CapacityDemandCurve, CapacitySegment, CreditCurve, DemandMode, FixedCapacities, MarketDesign, ScenarioSet, TechnologyCatalog,
};
use crate::planner::{assemble, assemble_pinned, solve_equilibrium_relaxing, DispatchPins, EquilibriumSolution, PlannerError};

pub const EOM_VOLL: &str = "EOM_VOLL";
pub const EOM_PC_OPT_MIX: &str = "EOM_PC_OPT_MIX";
pub const E_PLUS_CM: &str = "E_PLUS_CM";
pub const EOM_PC: &str = "EOM_PC";
/// Suite runs in the order they are reported.
pub const RUN_NAMES: [&str; 4] = [EOM_VOLL, EOM_PC_OPT_MIX, E_PLUS_CM, EOM_PC];

/// Prices within this fraction of the cap count as at the cap.
pub const AT_CAP_TOL: f64 = 1e-3;
/// Sweeps allowed for the book-value fixed point.
pub const BOOK_VALUE_MAX_SWEEPS: usize = 100;

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum AnalysisError {
    #[error("{run}: {source}")]
    Run { run: String, source: PlannerError },
    #[error(transparent)]
    Accreditation(#[from] AccreditationError),
    #[error(transparent)]
    Calibration(#[from] CalibrationError),
    #[error("{0} is not a price-capped run")]
    NotCapped(String),
    #[error("unknown storage technology '{0}'")]
    UnknownStorage(String),
    #[error("book value of '{storage}' in scenario {scenario} not converged (residual {residual:e})")]
    Unconverged { storage: String, scenario: usize, residual: f64 },
    #[error("credit scale {factor}: {source}")]
    Sweep { factor: f64, source: Box<AnalysisError> },
}

fn tagged(run: &str) -> impl FnOnce(PlannerError) -> AnalysisError + '_ {
    move |source| AnalysisError::Run { run: run.to_string(), source }
}

// ---------------------------------------------------------------- welfare

/// Benefit of consuming `served` MW under the uncapped demand function,
/// serving the highest willingness to pay first, $/h.
///
/// ```
/// use ldesmarket::analysis::true_interval_benefit;
/// assert_eq!(true_interval_benefit(100.0, 2.0, 1000.0, 95.0), 95_000.0);
/// assert_eq!(true_interval_benefit(100.0, 2.0, 1000.0, 102.0), 101_000.0);
/// ```
pub fn true_interval_benefit(d_fix: f64, d_flex: f64, voll: f64, served: f64) -> f64 {
    let x = served.max(0.0);
    let y = (x - d_fix).clamp(0.0, d_flex);
    let quad = if d_flex > 0.0 { y * y / (2.0 * d_flex) } else { 0.0 };
    voll * (x.min(d_fix) + y - quad)
}

/// Social welfare of a dispatch valued at the true willingness to pay.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WelfareReport {
    pub run: String,
    /// $/yr.
    pub benefit: f64,
    /// Annualised investment and fixed cost, $/yr.
    pub investment_cost: f64,
    /// Variable cost of generation and discharge, $/yr.
    pub operating_cost: f64,
    pub welfare: f64,
    /// Shortfall below the price-cap threshold, MWh/yr.
    pub eue: f64,
    pub eue_pct_demand: f64,
    /// Welfare lost against the benchmark, % of its total cost.
    pub welfare_loss_pct: f64,
}

impl WelfareReport {
    pub fn total_cost(&self) -> f64 {
        self.investment_cost + self.operating_cost
    }

    pub fn compared_to(mut self, benchmark: &WelfareReport) -> Self {
        self.welfare_loss_pct = 100.0 * (benchmark.welfare - self.welfare) / benchmark.total_cost();
        self
    }
}

pub fn welfare_report(run: &str, sol: &EquilibriumSolution) -> WelfareReport {
    let mut benefit = 0.0;
    let mut operating = 0.0;
    let mut demand = 0.0;
    for (k, iv) in sol.layout.iter().enumerate() {
        let wd = iv.weight();
        benefit += wd * true_interval_benefit(iv.d_fix, iv.d_flex, sol.voll, sol.served(k));
        demand += wd * (iv.d_fix + iv.d_flex);
        for (g, spec) in sol.catalog.generators.iter().enumerate() {
            operating += wd * spec.variable_cost * sol.generation[g][k];
        }
        for (s, spec) in sol.catalog.storage.iter().enumerate() {
            operating += wd * spec.variable_cost * sol.discharge[s][k];
        }
    }
    let names = sol.catalog.generators.iter().map(|g| &g.name).chain(sol.catalog.storage.iter().map(|s| &s.name));
    let investment: f64 = names.map(|n| sol.annual_cost(n).expect("catalog name")).sum();
    let eue = unserved_energy(sol, EueConvention::Comparable).expect("comparable convention").eue;
    WelfareReport {
        run: run.to_string(),
        benefit,
        investment_cost: investment,
        operating_cost: operating,
        welfare: benefit - investment - operating,
        eue,
        eue_pct_demand: if demand > 0.0 { 100.0 * eue / demand } else { 0.0 },
        welfare_loss_pct: 0.0,
    }
}

/// Welfare of a capped run before and after the storage is re-dispatched
/// against the true willingness to pay.
#[derive(Debug, Clone, PartialEq)]
pub struct RedispatchPair {
    /// The capped dispatch as it is: unserved energy spread without regard
    /// to the willingness to pay above the cap.
    pub inefficient_distribution: WelfareReport,
    /// Generation and charging held, discharge re-optimised.
    pub perfect_rationing: WelfareReport,
    pub redispatched: EquilibriumSolution,
}

/// Holds every generation and charging decision of `sol`, restores the
/// uncapped demand function and re-solves with only discharge free.
pub fn redispatch_true_wtp(
    run: &str,
    sol: &EquilibriumSolution,
    scenarios: &ScenarioSet,
    options: &SolveOptions,
) -> Result<RedispatchPair, AnalysisError> {
    if sol.demand_mode != DemandMode::Capped {
        return Err(AnalysisError::NotCapped(run.to_string()));
    }
    let mut pins = DispatchPins { demand_mode: Some(DemandMode::Uncapped), ..Default::default() };
    for (g, spec) in sol.catalog.generators.iter().enumerate() {
        pins.generation.insert(spec.name.clone(), sol.generation[g].clone());
    }
    for (s, spec) in sol.catalog.storage.iter().enumerate() {
        pins.charge.insert(spec.name.clone(), sol.charge[s].clone());
    }
    let design = MarketDesign::dispatch(DemandMode::Uncapped, sol.voll, sol.pc, sol.emission_cap, sol.mix());
    let label = format!("{run} true-WTP redispatch");
    let program = assemble_pinned(scenarios, &sol.catalog, &design, &pins).map_err(tagged(&label))?;
    let redispatched = solve_equilibrium_relaxing(&program, options).map_err(tagged(&label))?;
    Ok(RedispatchPair {
        inefficient_distribution: welfare_report(run, sol),
        perfect_rationing: welfare_report(run, &redispatched),
        redispatched,
    })
}

// ------------------------------------------------------------- book value

/// Dispatch and prices of one storage technology in one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct StorageDispatch {
    pub storage: String,
    pub scenario: usize,
    pub charge_efficiency: f64,
    pub discharge_efficiency: f64,
    pub variable_cost: f64,
    /// Stored energy before the first interval, MWh.
    pub initial: f64,
    pub weight_hours: Vec<f64>,
    pub price: Vec<f64>,
    pub charge: Vec<f64>,
    pub discharge: Vec<f64>,
    /// Stored energy at the end of each interval, MWh.
    pub soc: Vec<f64>,
}

impl StorageDispatch {
    pub fn from_solution(sol: &EquilibriumSolution, storage: &str, scenario: usize) -> Result<Self, AnalysisError> {
        let s = sol.storage_index(storage).ok_or_else(|| AnalysisError::UnknownStorage(storage.to_string()))?;
        let spec = &sol.catalog.storage[s];
        let ks: Vec<usize> = (0..sol.num_intervals()).filter(|&k| sol.layout[k].scenario == scenario).collect();
        let pick = |v: &[f64]| ks.iter().map(|&k| v[k]).collect::<Vec<f64>>();
        Ok(StorageDispatch {
            storage: storage.to_string(),
            scenario,
            charge_efficiency: spec.charge_efficiency,
            discharge_efficiency: spec.discharge_efficiency,
            variable_cost: spec.variable_cost,
            initial: sol.storage_initial[s],
            weight_hours: ks.iter().map(|&k| sol.layout[k].weight_hours).collect(),
            price: pick(&sol.energy_price),
            charge: pick(&sol.charge[s]),
            discharge: pick(&sol.discharge[s]),
            soc: pick(&sol.soc[s]),
        })
    }

    /// `Σ w·λ·(q^dis − q^ch)`, $ over the scenario.
    pub fn arbitrage_margin(&self) -> f64 {
        (0..self.price.len()).map(|t| self.weight_hours[t] * self.price[t] * (self.discharge[t] - self.charge[t])).sum()
    }
}

/// Average acquisition cost of the stored energy, $/MWh.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BookValueSeries {
    pub storage: String,
    pub scenario: usize,
    /// Book value at the end of each interval.
    pub phi: Vec<f64>,
    /// Value carried into the first interval.
    pub phi_initial: f64,
    pub sweeps: usize,
    /// `|φ_0 − φ_T| / max(1, φ_T)`.
    pub residual: f64,
    pub converged: bool,
}

/// Below this fraction of the largest stored energy the store counts as
/// empty and its book value is carried forward.
const EMPTY_TOL: f64 = 1e-9;

fn book_pass(d: &StorageDispatch, phi0: f64, out: &mut [f64]) -> f64 {
    let scale = d.soc.iter().fold(d.initial, |m, &e| m.max(e)).max(1.0);
    let mut phi = phi0;
    let mut e_prev = d.initial;
    for t in 0..d.soc.len() {
        let w = d.weight_hours[t];
        let e = d.soc[t];
        if e > EMPTY_TOL * scale {
            // kept can dip below zero when an interval both charges and discharges
            let kept = e_prev - w * d.discharge[t] / d.discharge_efficiency;
            phi = ((phi * kept + d.price[t] * w * d.charge[t]) / e).max(0.0);
        }
        out[t] = phi;
        e_prev = e;
    }
    phi
}

/// Runs the book-value recursion over the scenario until the value carried
/// in equals the value carried out, starting from zero.
///
/// ```
/// use ldesmarket::analysis::{book_value, StorageDispatch};
/// let d = StorageDispatch {
///     storage: "S".into(), scenario: 0, charge_efficiency: 0.5, discharge_efficiency: 1.0,
///     variable_cost: 0.0, initial: 0.0, weight_hours: vec![1.0], price: vec![20.0],
///     charge: vec![10.0], discharge: vec![0.0], soc: vec![5.0],
/// };
/// let b = book_value(&d, 100);
/// assert_eq!(b.phi, vec![40.0]);
/// ```
pub fn book_value(d: &StorageDispatch, max_sweeps: usize) -> BookValueSeries {
    let n = d.soc.len();
    let mut phi = vec![0.0; n];
    let close = |x: f64, t: f64| (x - t).abs() <= 1e-6 * t.abs().max(1.0);
    let mut x = 0.0;
    let mut tx = book_pass(d, x, &mut phi);
    let mut sweeps = 1;
    let mut prev: Option<(f64, f64)> = None;
    while !close(x, tx) && sweeps < max_sweeps.max(1) {
        // one pass is affine in φ_0, so the secant through two passes hits the fixed point
        let next = match prev {
            Some((px, pt)) if (px - x).abs() > 0.0 => {
                let slope = (pt - tx) / (px - x);
                if slope < 1.0 - 1e-12 {
                    x + (tx - x) / (1.0 - slope)
                } else {
                    tx
                }
            }
            _ => tx,
        };
        prev = Some((x, tx));
        x = next.max(0.0);
        tx = book_pass(d, x, &mut phi);
        sweeps += 1;
    }
    let residual = (x - tx).abs() / tx.abs().max(1.0);
    BookValueSeries {
        storage: d.storage.clone(),
        scenario: d.scenario,
        phi,
        phi_initial: x,
        sweeps,
        residual,
        converged: residual <= 1e-6,
    }
}

/// `q^dis·(λ − φ_{t−1}/η^dis)` per interval, $/h.
///
/// ```
/// use ldesmarket::analysis::{storage_net_revenue, BookValueSeries, StorageDispatch};
/// let d = StorageDispatch {
///     storage: "S".into(), scenario: 0, charge_efficiency: 1.0, discharge_efficiency: 0.8,
///     variable_cost: 0.0, initial: 50.0, weight_hours: vec![1.0], price: vec![100.0],
///     charge: vec![0.0], discharge: vec![5.0], soc: vec![43.75],
/// };
/// let b = BookValueSeries {
///     storage: "S".into(), scenario: 0, phi: vec![40.0], phi_initial: 40.0,
///     sweeps: 1, residual: 0.0, converged: true,
/// };
/// assert_eq!(storage_net_revenue(&d, &b).unwrap(), vec![250.0]);
/// ```
pub fn storage_net_revenue(d: &StorageDispatch, book: &BookValueSeries) -> Result<Vec<f64>, AnalysisError> {
    if !book.converged {
        return Err(AnalysisError::Unconverged { storage: book.storage.clone(), scenario: book.scenario, residual: book.residual });
    }
    Ok((0..d.soc.len())
        .map(|t| {
            let before = if t == 0 { book.phi_initial } else { book.phi[t - 1] };
            d.discharge[t] * (d.price[t] - before / d.discharge_efficiency)
        })
        .collect())
}

/// Book values of every storage technology in every scenario, storage
/// major.
pub fn storage_book_values(sol: &EquilibriumSolution) -> Result<Vec<(StorageDispatch, BookValueSeries)>, AnalysisError> {
    let mut out = Vec::new();
    for spec in &sol.catalog.storage {
        for w in 0..sol.layout.iter().map(|iv| iv.scenario + 1).max().unwrap_or(0) {
            let d = StorageDispatch::from_solution(sol, &spec.name, w)?;
            let b = book_value(&d, BOOK_VALUE_MAX_SWEEPS);
            out.push((d, b));
        }
    }
    Ok(out)
}

// ---------------------------------------------------------- missing money

/// Expected energy-market net revenue of a technology split by whether the
/// price was below the cap, $/yr.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RevenueSplit {
    pub technology: String,
    pub kind: &'static str,
    pub installed_mw: f64,
    pub below_pc: f64,
    pub at_or_above_pc: f64,
    pub capacity_revenue: f64,
    pub annual_cost: f64,
}

impl RevenueSplit {
    pub fn energy_total(&self) -> f64 {
        self.below_pc + self.at_or_above_pc
    }

    /// Revenue over annualised cost; `None` without installed cost.
    pub fn recovery(&self) -> Option<f64> {
        (self.annual_cost > 0.0).then(|| (self.energy_total() + self.capacity_revenue) / self.annual_cost)
    }
}

/// Generator margins `(λ − C^V − λ^CT·EF)·q` and storage net revenue from
/// the book value, less discharge variable cost, classed by interval price.
pub fn missing_money_split(
    sol: &EquilibriumSolution,
    books: &[(StorageDispatch, BookValueSeries)],
) -> Result<Vec<RevenueSplit>, AnalysisError> {
    let at_cap = |k: usize| sol.energy_price[k] >= sol.pc - AT_CAP_TOL * sol.pc;
    let mut out = Vec::new();
    for (g, spec) in sol.catalog.generators.iter().enumerate() {
        let (mut below, mut above) = (0.0, 0.0);
        for (k, iv) in sol.layout.iter().enumerate() {
            let m = iv.weight()
                * (sol.energy_price[k] - spec.variable_cost - sol.carbon_price * spec.emission_factor)
                * sol.generation[g][k];
            if at_cap(k) {
                above += m
            } else {
                below += m
            }
        }
        out.push(RevenueSplit {
            technology: spec.name.clone(),
            kind: "generator",
            installed_mw: sol.generator_capacity[g],
            below_pc: below,
            at_or_above_pc: above,
            capacity_revenue: sol.capacity_revenue(&spec.name).expect("known"),
            annual_cost: sol.annual_cost(&spec.name).expect("known"),
        });
    }
    for (s, spec) in sol.catalog.storage.iter().enumerate() {
        let (mut below, mut above) = (0.0, 0.0);
        for (d, b) in books.iter().filter(|(d, _)| d.storage == spec.name) {
            let pi = storage_net_revenue(d, b)?;
            let ks = (0..sol.num_intervals()).filter(|&k| sol.layout[k].scenario == d.scenario);
            for (t, k) in ks.enumerate() {
                let m = sol.layout[k].weight() * (pi[t] - d.variable_cost * d.discharge[t]);
                if at_cap(k) {
                    above += m
                } else {
                    below += m
                }
            }
        }
        out.push(RevenueSplit {
            technology: spec.name.clone(),
            kind: "storage",
            installed_mw: sol.storage_power[s],
            below_pc: below,
            at_or_above_pc: above,
            capacity_revenue: sol.capacity_revenue(&spec.name).expect("known"),
            annual_cost: sol.annual_cost(&spec.name).expect("known"),
        });
    }
    Ok(out)
}

// ---------------------------------------------------------- price metrics

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PriceMetrics {
    /// Expected energy price weighted by served energy, $/MWh.
    pub mu_price: f64,
    /// The same weighted by hours.
    pub mu_price_hourly: f64,
    /// Coefficient of variation of the per-scenario average price.
    pub sigma_cv: f64,
    /// Coefficient of variation of the interval prices.
    pub sigma_cv_hourly: f64,
    /// Capacity payments per MWh served.
    pub kappa_ccc: f64,
    /// Carbon rent `λ^CT·cap` per MWh served.
    pub beta_eb: f64,
    pub capacity_price: f64,
    pub carbon_price: f64,
    /// `Σ w·δ·λ·d`, $/yr.
    pub energy_cost: f64,
    /// `λ^CM` times the cleared volume, $/yr.
    pub capacity_cost: f64,
    pub served_energy: f64,
}

/// Annual net revenue of one storage technology in one scenario.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NetRevenueSample {
    pub storage: String,
    pub scenario: String,
    pub energy_margin: f64,
    pub capacity_revenue: f64,
    pub annual_cost: f64,
    pub net_revenue: f64,
    /// Per MW of installed power; zero when none is installed.
    pub net_revenue_per_mw: f64,
}

fn weighted_cv(values: &[(f64, f64)]) -> f64 {
    let total: f64 = values.iter().map(|v| v.1).sum();
    if total <= 0.0 {
        return 0.0;
    }
    let mean = values.iter().map(|(x, w)| x * w).sum::<f64>() / total;
    let var = values.iter().map(|(x, w)| w * (x - mean).powi(2)).sum::<f64>() / total;
    if mean.abs() > 0.0 {
        var.sqrt() / mean.abs()
    } else {
        0.0
    }
}

pub fn price_and_cost_metrics(sol: &EquilibriumSolution, scenarios: &ScenarioSet) -> (PriceMetrics, Vec<NetRevenueSample>) {
    let served = sol.expected_served_energy();
    let mut energy_cost = 0.0;
    let mut hours = 0.0;
    let mut price_hours = 0.0;
    let mut hourly = Vec::with_capacity(sol.num_intervals());
    let nw = scenarios.scenarios.len();
    let mut per_scenario = vec![(0.0, 0.0); nw];
    for (k, iv) in sol.layout.iter().enumerate() {
        let lambda = sol.energy_price[k];
        energy_cost += iv.weight() * lambda * sol.served(k);
        hours += iv.weight();
        price_hours += iv.weight() * lambda;
        hourly.push((lambda, iv.weight()));
        per_scenario[iv.scenario].0 += iv.weight_hours * lambda * sol.served(k);
        per_scenario[iv.scenario].1 += iv.weight_hours * sol.served(k);
    }
    let averages: Vec<(f64, f64)> = per_scenario
        .iter()
        .zip(&scenarios.scenarios)
        .map(|(&(pq, q), sc)| (if q > 0.0 { pq / q } else { 0.0 }, sc.probability))
        .collect();
    let capacity_cost = sol.capacity_price * sol.cm_volume;
    let carbon_rent = if sol.carbon_price != 0.0 && sol.emission_cap.is_finite() { sol.carbon_price * sol.emission_cap } else { 0.0 };
    let per_mwh = |v: f64| if served > 0.0 { v / served } else { 0.0 };
    let metrics = PriceMetrics {
        mu_price: per_mwh(energy_cost),
        mu_price_hourly: if hours > 0.0 { price_hours / hours } else { 0.0 },
        sigma_cv: weighted_cv(&averages),
        sigma_cv_hourly: weighted_cv(&hourly),
        kappa_ccc: per_mwh(capacity_cost),
        beta_eb: per_mwh(carbon_rent),
        capacity_price: sol.capacity_price,
        carbon_price: sol.carbon_price,
        energy_cost,
        capacity_cost,
        served_energy: served,
    };

    let mut samples = Vec::new();
    for (s, spec) in sol.catalog.storage.iter().enumerate() {
        let capacity_revenue = sol.capacity_revenue(&spec.name).expect("known");
        let annual_cost = sol.annual_cost(&spec.name).expect("known");
        for (w, sc) in scenarios.scenarios.iter().enumerate() {
            let energy_margin: f64 = sol
                .layout
                .iter()
                .enumerate()
                .filter(|(_, iv)| iv.scenario == w)
                .map(|(k, iv)| {
                    iv.weight_hours
                        * (sol.energy_price[k] * (sol.discharge[s][k] - sol.charge[s][k]) - spec.variable_cost * sol.discharge[s][k])
                })
                .sum();
            let net = energy_margin + capacity_revenue - annual_cost;
            let power = sol.storage_power[s];
            samples.push(NetRevenueSample {
                storage: spec.name.clone(),
                scenario: sc.id.clone(),
                energy_margin,
                capacity_revenue,
                annual_cost,
                net_revenue: net,
                net_revenue_per_mw: if power > 1e-9 { net / power } else { 0.0 },
            });
        }
    }
    (metrics, samples)
}

// -------------------------------------------------------------- the suite

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteParams {
    pub voll: f64,
    pub pc: f64,
    /// tCO2/yr; infinite for no cap.
    pub emission_cap: f64,
    /// Technology whose net-CONE anchors the capacity demand curve.
    pub reference: String,
    pub accreditation: AccreditationSettings,
    /// Pieces of the storage credit curves.
    pub segment_count: usize,
    pub solve: SolveOptions,
}

impl SuiteParams {
    pub fn new(voll: f64, pc: f64, emission_cap: f64) -> Self {
        SuiteParams {
            voll,
            pc,
            emission_cap,
            reference: DEFAULT_REFERENCE.to_string(),
            accreditation: AccreditationSettings::default(),
            segment_count: 4,
            // book values and credits difference nearly equal quantities
            solve: SolveOptions { tolerance: 1e-10, ..SolveOptions::default() },
        }
    }
}

/// One market run with its adequacy and welfare figures.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub name: String,
    pub solution: EquilibriumSolution,
    pub unserved: UnservedSeries,
    /// Headline welfare: as solved for the uncapped benchmark, after the
    /// true-WTP redispatch for capped runs.
    pub welfare: WelfareReport,
    /// Capped runs only: welfare of the dispatch as solved.
    pub as_dispatched: Option<WelfareReport>,
}

/// Everything that turns the benchmark into a capacity market.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationOutcome {
    /// `None` when the capped benchmark has no scarcity to accredit against.
    pub accreditation: Option<Accreditation>,
    pub fits: Vec<(String, CreditFit)>,
    pub credits: Credits,
    pub net_cone: NetConeTable,
    pub capacity_target: f64,
    pub curve: CapacityDemandCurve,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSuite {
    pub params: SuiteParams,
    pub scenarios: ScenarioSet,
    pub catalog: TechnologyCatalog,
    /// In [`RUN_NAMES`] order.
    pub runs: Vec<RunResult>,
    pub calibration: CalibrationOutcome,
}

impl RunSuite {
    pub fn run(&self, name: &str) -> Option<&RunResult> {
        self.runs.iter().find(|r| r.name == name)
    }

    /// Benchmark mix shared by the two fixed-mix runs.
    pub fn benchmark_mix(&self) -> FixedCapacities {
        self.runs[0].solution.mix()
    }
}

/// Adequacy and welfare of a solved run. Capped runs get the true-WTP
/// redispatch; welfare is not yet compared to a benchmark.
pub fn evaluate_run(name: &str, sol: EquilibriumSolution, scenarios: &ScenarioSet, opts: &SolveOptions) -> Result<RunResult, AnalysisError> {
    let unserved = unserved_energy(&sol, EueConvention::Comparable)?;
    let (welfare, as_dispatched) = if sol.demand_mode == DemandMode::Capped {
        let pair = redispatch_true_wtp(name, &sol, scenarios, opts)?;
        (pair.perfect_rationing, Some(pair.inefficient_distribution))
    } else {
        (welfare_report(name, &sol), None)
    };
    Ok(RunResult { name: name.to_string(), solution: sol, unserved, welfare, as_dispatched })
}

fn solve_run(name: &str, scenarios: &ScenarioSet, catalog: &TechnologyCatalog, design: &MarketDesign, opts: &SolveOptions) -> Result<RunResult, AnalysisError> {
    let program = assemble(scenarios, catalog, design).map_err(tagged(name))?;
    let sol = solve_equilibrium_relaxing(&program, opts).map_err(tagged(name))?;
    evaluate_run(name, sol, scenarios, opts)
}

/// A curve that clears at zero price: the capacity market exists but pays
/// nothing.
fn zero_price_curve(capacity_target: f64) -> CapacityDemandCurve {
    let ct = if capacity_target > 0.0 { capacity_target } else { 1.0 };
    CapacityDemandCurve {
        fixed_price: 0.0,
        fixed_width: 0.965 * ct,
        segments: vec![CapacitySegment { width: 0.07 * ct, start_price: 0.0, end_price: 0.0 }],
    }
}

/// Capacity demand curve for given credits with the reference net-CONE held.
fn curve_for(mix: &FixedCapacities, catalog: &TechnologyCatalog, credits: &Credits, table: &NetConeTable) -> Result<(f64, CapacityDemandCurve), AnalysisError> {
    let ct = capacity_target(mix, catalog, credits)?;
    let curve = match table.status {
        NetConeStatus::Ok => build_cm_demand_curve(ct, table.net_cone_ref)?,
        NetConeStatus::NoMissingMoney => zero_price_curve(ct),
    };
    Ok((ct, curve))
}

/// Credit curve of every accredited storage technology, with up to
/// `segment_count` pieces but never more than the points allow. Returns
/// notes for fits that had to be constrained.
pub fn fit_storage_credits(
    acc: &Accreditation,
    catalog: &TechnologyCatalog,
    segment_count: usize,
) -> Result<(Vec<(String, CreditFit)>, Vec<String>), AnalysisError> {
    let mut fits = Vec::new();
    let mut notes = Vec::new();
    for spec in &catalog.storage {
        let pts = acc.storage_points(&spec.name);
        let curve_fit = match pts.len() {
            0 => None,
            1 => Some(CreditFit { curve: CreditCurve::constant(pts[0].1.clamp(0.0, 1.0)), r_squared: 1.0, knots: vec![], warning: false }),
            n => Some(fit_credit_curve(&pts, segment_count.min(n - 1).max(1))?),
        };
        if let Some(f) = curve_fit {
            if f.warning {
                notes.push(format!("{} credits are not monotone and concave; fitted within the admissible shapes", spec.name));
            }
            fits.push((spec.name.clone(), f));
        }
    }
    Ok((fits, notes))
}

/// Accredits the benchmark `mix` against its capped dispatch `capped`,
/// fits the storage credit curves and builds the capacity demand curve.
pub fn calibrate_capacity_market(
    mix: &FixedCapacities,
    capped: &EquilibriumSolution,
    scenarios: &ScenarioSet,
    catalog: &TechnologyCatalog,
    params: &SuiteParams,
) -> Result<CalibrationOutcome, AnalysisError> {
    let design = MarketDesign::eom_pc(params.voll, params.pc, params.emission_cap);
    let mut notes = Vec::new();
    let (accreditation, fits, credits) = match accredit(mix, scenarios, catalog, &design, &params.accreditation) {
        Ok(acc) => {
            let (fits, fit_notes) = fit_storage_credits(&acc, catalog, params.segment_count)?;
            notes.extend(fit_notes);
            notes.extend(acc.warnings.iter().cloned());
            let credits = Credits::from_accreditation(&acc, &fits, catalog);
            (Some(acc), fits, credits)
        }
        Err(AccreditationError::NoScarcity { eue_0, eue_ref }) => {
            notes.push(format!("no scarcity in the capped benchmark (EUE {eue_0} vs {eue_ref}); catalog credits used"));
            let credits = Credits {
                generators: catalog.generators.iter().map(|g| (g.name.clone(), g.capacity_credit)).collect(),
                storage: catalog.storage.iter().map(|s| (s.name.clone(), s.credit_curve.clone())).collect(),
            };
            (None, Vec::new(), credits)
        }
        Err(e) => return Err(e.into()),
    };
    let table = net_cone(mix, capped, catalog, &params.reference, Some(&credits))?;
    if table.status == NetConeStatus::NoMissingMoney {
        notes.push(format!("{} recovers its costs under the cap; the capacity market clears at zero", params.reference));
    }
    let (ct, curve) = curve_for(mix, catalog, &credits, &table)?;
    Ok(CalibrationOutcome { accreditation, fits, credits, net_cone: table, capacity_target: ct, curve, notes })
}

/// The benchmark, its capped dispatch, accreditation and calibration, then
/// the capacity market and the capped energy-only market.
pub fn run_suite(scenarios: &ScenarioSet, catalog: &TechnologyCatalog, params: &SuiteParams) -> Result<RunSuite, AnalysisError> {
    let opts = &params.solve;
    let bench = solve_run(EOM_VOLL, scenarios, catalog, &MarketDesign::eom_voll(params.voll, params.pc, params.emission_cap), opts)?;
    let mix = bench.solution.mix();
    let eom_pc_design = MarketDesign::eom_pc(params.voll, params.pc, params.emission_cap);

    let (eom_pc, rest) = rayon::join(
        || solve_run(EOM_PC, scenarios, catalog, &eom_pc_design, opts),
        || -> Result<_, AnalysisError> {
            let capped = baseline_dispatch(&mix, scenarios, catalog, &eom_pc_design, opts).map_err(|e| match e {
                AccreditationError::Solve { source, .. } => AnalysisError::Run { run: EOM_PC_OPT_MIX.into(), source },
                e => e.into(),
            })?;
            let calibration = calibrate_capacity_market(&mix, &capped, scenarios, catalog, params)?;
            let opt_mix = evaluate_run(EOM_PC_OPT_MIX, capped, scenarios, opts)?;
            let cm = solve_run(
                E_PLUS_CM,
                scenarios,
                &calibration.credits.apply(catalog),
                &MarketDesign::e_plus_cm(params.voll, params.pc, params.emission_cap, calibration.curve.clone()),
                opts,
            )?;
            Ok((opt_mix, cm, calibration))
        },
    );
    let (opt_mix, cm, calibration) = rest?;
    let eom_pc = eom_pc?;
    let mut runs = vec![bench, opt_mix, cm, eom_pc];
    let benchmark = runs[0].welfare.clone();
    for r in &mut runs {
        r.welfare = r.welfare.clone().compared_to(&benchmark);
        r.as_dispatched = r.as_dispatched.take().map(|w| w.compared_to(&benchmark));
    }
    Ok(RunSuite { params: params.clone(), scenarios: scenarios.clone(), catalog: catalog.clone(), runs, calibration })
}

// ------------------------------------------------------------------ sweep

/// One credit scaling and its effect against the unscaled capacity market.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub factor: f64,
    pub capacity_target: f64,
    pub curve: CapacityDemandCurve,
    pub run: RunResult,
    pub mu_price: f64,
    pub d_mu_price: f64,
    pub capacity_price: f64,
    pub d_capacity_price: f64,
    /// Headline welfare difference, $/yr.
    pub d_welfare: f64,
    /// Welfare loss against the benchmark, % of its total cost.
    pub welfare_loss_pct: f64,
    pub eue: f64,
    pub d_eue: f64,
}

/// Scales the storage credit curves by each factor, recomputes the capacity
/// target with the reference net-CONE unchanged and re-solves the capacity
/// market. Points run in parallel.
pub fn credit_sensitivity_sweep(suite: &RunSuite, factors: &[f64]) -> Result<Vec<SweepPoint>, AnalysisError> {
    let base = suite.run(E_PLUS_CM).expect("suite has a capacity market run");
    let base_mu = price_and_cost_metrics(&base.solution, &suite.scenarios).0.mu_price;
    let benchmark = &suite.runs[0].welfare;
    let mix = suite.benchmark_mix();
    let p = &suite.params;
    factors
        .par_iter()
        .map(|&factor| {
            let point = || -> Result<SweepPoint, AnalysisError> {
                let credits = suite.calibration.credits.scale_storage(factor);
                let (ct, curve) = curve_for(&mix, &suite.catalog, &credits, &suite.calibration.net_cone)?;
                let design = MarketDesign::e_plus_cm(p.voll, p.pc, p.emission_cap, curve.clone());
                let name = format!("{E_PLUS_CM}@{factor}");
                let mut run = solve_run(&name, &suite.scenarios, &credits.apply(&suite.catalog), &design, &p.solve)?;
                run.welfare = run.welfare.clone().compared_to(benchmark);
                run.as_dispatched = run.as_dispatched.take().map(|w| w.compared_to(benchmark));
                let mu = price_and_cost_metrics(&run.solution, &suite.scenarios).0.mu_price;
                Ok(SweepPoint {
                    factor,
                    capacity_target: ct,
                    curve,
                    mu_price: mu,
                    d_mu_price: mu - base_mu,
                    capacity_price: run.solution.capacity_price,
                    d_capacity_price: run.solution.capacity_price - base.solution.capacity_price,
                    d_welfare: run.welfare.welfare - base.welfare.welfare,
                    welfare_loss_pct: run.welfare.welfare_loss_pct,
                    eue: run.unserved.eue,
                    d_eue: run.unserved.eue - base.unserved.eue,
                    run,
                })
            };
            point().map_err(|e| AnalysisError::Sweep { factor, source: Box::new(e) })
        })
        .collect()
}

// ---------------------------------------------------------------- output

fn to_io(e: csv::Error) -> io::Error {
    io::Error::new(io::ErrorKind::Other, e)
}

fn num(v: f64) -> String {
    format!("{v}")
}

pub const SUMMARY_COLUMNS: [&str; 19] = [
    "run",
    "welfare_usd_per_yr",
    "welfare_loss_pct_tc",
    "welfare_as_dispatched_usd_per_yr",
    "welfare_loss_as_dispatched_pct_tc",
    "total_cost_usd_per_yr",
    "eue_mwh_per_yr",
    "eue_pct_demand",
    "mu_price_usd_per_mwh",
    "mu_price_hourly_usd_per_mwh",
    "sigma_cv",
    "sigma_cv_hourly",
    "kappa_ccc_usd_per_mwh",
    "beta_eb_usd_per_mwh",
    "capacity_price_usd_per_mw_yr",
    "carbon_price_usd_per_t",
    "energy_cost_usd_per_yr",
    "capacity_cost_usd_per_yr",
    "objective_usd_per_yr",
];

fn summary_row(r: &RunResult, scenarios: &ScenarioSet) -> Vec<String> {
    let (m, _) = price_and_cost_metrics(&r.solution, scenarios);
    let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
    vec![
        r.name.clone(),
        num(r.welfare.welfare),
        num(r.welfare.welfare_loss_pct),
        opt(r.as_dispatched.as_ref().map(|w| w.welfare)),
        opt(r.as_dispatched.as_ref().map(|w| w.welfare_loss_pct)),
        num(r.welfare.total_cost()),
        num(r.welfare.eue),
        num(r.welfare.eue_pct_demand),
        num(m.mu_price),
        num(m.mu_price_hourly),
        num(m.sigma_cv),
        num(m.sigma_cv_hourly),
        num(m.kappa_ccc),
        num(m.beta_eb),
        num(m.capacity_price),
        num(m.carbon_price),
        num(m.energy_cost),
        num(m.capacity_cost),
        num(r.solution.objective),
    ]
}

/// One row per run: welfare and adequacy, then prices and consumer costs.
pub fn write_suite_summary(path: &Path, suite: &RunSuite) -> io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(SUMMARY_COLUMNS).map_err(to_io)?;
    for r in &suite.runs {
        w.write_record(summary_row(r, &suite.scenarios)).map_err(to_io)?;
    }
    w.flush()
}

/// `metric,value` rows for one run.
pub fn write_run_metrics(path: &Path, run: &RunResult, scenarios: &ScenarioSet) -> io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["metric", "value"]).map_err(to_io)?;
    for (k, v) in SUMMARY_COLUMNS.iter().zip(summary_row(run, scenarios)) {
        w.write_record([*k, v.as_str()]).map_err(to_io)?;
    }
    w.flush()
}

pub const MISSING_MONEY_COLUMNS: [&str; 10] = [
    "technology",
    "kind",
    "installed_mw",
    "revenue_below_pc_usd_per_yr",
    "revenue_at_or_above_pc_usd_per_yr",
    "energy_revenue_usd_per_yr",
    "capacity_revenue_usd_per_yr",
    "annual_cost_usd_per_yr",
    "recovery_below_pc",
    "recovery_total",
];

pub fn write_missing_money(path: &Path, rows: &[RevenueSplit]) -> io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(MISSING_MONEY_COLUMNS).map_err(to_io)?;
    for r in rows {
        let frac = |v: f64| if r.annual_cost > 0.0 { num(v / r.annual_cost) } else { String::new() };
        w.write_record([
            r.technology.clone(),
            r.kind.to_string(),
            num(r.installed_mw),
            num(r.below_pc),
            num(r.at_or_above_pc),
            num(r.energy_total()),
            num(r.capacity_revenue),
            num(r.annual_cost),
            frac(r.below_pc),
            r.recovery().map(num).unwrap_or_default(),
        ])
        .map_err(to_io)?;
    }
    w.flush()
}

pub const DISTRIBUTION_COLUMNS: [&str; 8] = [
    "run",
    "storage",
    "scenario",
    "energy_margin_usd",
    "capacity_revenue_usd",
    "annual_cost_usd",
    "net_revenue_usd",
    "net_revenue_usd_per_mw",
];

/// Per-scenario annual storage net revenue of every run.
pub fn write_net_revenue_distribution(path: &Path, runs: &[&RunResult], scenarios: &ScenarioSet) -> io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(DISTRIBUTION_COLUMNS).map_err(to_io)?;
    for r in runs {
        for s in price_and_cost_metrics(&r.solution, scenarios).1 {
            w.write_record([
                r.name.clone(),
                s.storage,
                s.scenario,
                num(s.energy_margin),
                num(s.capacity_revenue),
                num(s.annual_cost),
                num(s.net_revenue),
                num(s.net_revenue_per_mw),
            ])
            .map_err(to_io)?;
        }
    }
    w.flush()
}

pub const BOOK_VALUE_COLUMNS: [&str; 5] = ["storage", "scenario", "interval_id", "book_value_usd_per_mwh", "net_revenue_usd_per_h"];

pub fn write_book_values(path: &Path, books: &[(StorageDispatch, BookValueSeries)]) -> io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(BOOK_VALUE_COLUMNS).map_err(to_io)?;
    for (d, b) in books {
        let pi = storage_net_revenue(d, b).unwrap_or_else(|_| vec![f64::NAN; d.soc.len()]);
        for t in 0..d.soc.len() {
            w.write_record([d.storage.clone(), d.scenario.to_string(), t.to_string(), num(b.phi[t]), num(pi[t])]).map_err(to_io)?;
        }
    }
    w.flush()
}

pub const SWEEP_COLUMNS: [&str; 11] = [
    "factor",
    "capacity_target_mw",
    "mu_price_usd_per_mwh",
    "d_mu_price_usd_per_mwh",
    "capacity_price_usd_per_mw_yr",
    "d_capacity_price_usd_per_mw_yr",
    "welfare_usd_per_yr",
    "d_welfare_usd_per_yr",
    "welfare_loss_pct_tc",
    "eue_mwh_per_yr",
    "d_eue_mwh_per_yr",
];

pub fn write_sweep(path: &Path, points: &[SweepPoint]) -> io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(SWEEP_COLUMNS).map_err(to_io)?;
    for p in points {
        w.write_record([
            num(p.factor),
            num(p.capacity_target),
            num(p.mu_price),
            num(p.d_mu_price),
            num(p.capacity_price),
            num(p.d_capacity_price),
            num(p.run.welfare.welfare),
            num(p.d_welfare),
            num(p.welfare_loss_pct),
            num(p.eue),
            num(p.d_eue),
        ])
        .map_err(to_io)?;
    }
    w.flush()
}
