//! Expected unserved energy, marginal capacity credits and concave credit
//! curves.
//!
//! Credits follow the marginal method: dispatch the benchmark mix under the
//! price-capped demand function, then add a small capacity `ε` of each
//! resource and compare the drop in EUE with the drop caused by the same
//! amount of a perfect generator.

use std::collections::BTreeMap;
use std::io;
use std::path::Path;

use ldesmarket_qp::SolveOptions;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{
    CreditCurve, CreditSegment, DemandMode, FixedCapacities, GeneratorSpec, MarketDesign, ScenarioSet, StorageCapacity,
    StorageSpec, TechnologyCatalog,
};
use crate::planner::{assemble_pinned, solve_equilibrium_relaxing, DispatchPins, EquilibriumSolution, PlannerError};

/// Credit differences below this are treated as solver noise.
pub const CREDIT_NOISE: f64 = 1e-4;

/// Name under which the perfect reference generator enters perturbation runs.
pub const REFERENCE_NAME: &str = "REFERENCE";

/// Durations tried for storage by default, hours.
pub const DEFAULT_DURATIONS: [f64; 14] = [1.0, 2.0, 4.0, 6.0, 8.0, 12.0, 16.0, 24.0, 32.0, 48.0, 72.0, 96.0, 120.0, 168.0];

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum AccreditationError {
    #[error("{0} demand; pass EueConvention::Comparable to measure EUE against the price-cap threshold anyway")]
    UncappedSolution(String),
    #[error("no scarcity: EUE_0 = {eue_0} and EUE_ref = {eue_ref}; use a larger epsilon or accept that the system is scarcity-free")]
    NoScarcity { eue_0: f64, eue_ref: f64 },
    #[error("epsilon must be positive, found {0}")]
    Epsilon(f64),
    #[error("technology '{0}' clashes with the reference generator name")]
    NameClash(String),
    #[error("{run}: {source}")]
    Solve { run: String, source: PlannerError },
    #[error("fit needs at least {needed} points with strictly increasing durations, found {found}")]
    FitInput { needed: usize, found: usize },
}

/// Whether unserved energy may be measured on an uncapped run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EueConvention {
    /// Only price-capped runs are accepted.
    CappedOnly,
    /// Any run; the price-cap threshold is applied to uncapped runs too so
    /// that EUE is comparable across designs.
    Comparable,
}

/// Per-interval shortfall `l` and its expectation.
#[derive(Debug, Clone, PartialEq)]
pub struct UnservedSeries {
    /// MW, per flat interval.
    pub unserved: Vec<f64>,
    /// `Σ w·δ·l`, MWh per year.
    pub eue: f64,
}

/// `max(0, D^fix + D^flex·(VOLL−PC)/VOLL − d^fix − d^flex)`.
///
/// ```
/// use ldesmarket::accreditation::shortfall;
/// let l = shortfall(100.0, 2.0, 20300.0, 7549.0, 95.0, 0.0);
/// assert!((l - 6.256256).abs() < 1e-6);
/// assert_eq!(shortfall(100.0, 2.0, 20300.0, 7549.0, 100.0, 1.25626), 0.0);
/// ```
pub fn shortfall(d_fix: f64, d_flex: f64, voll: f64, pc: f64, served_fix: f64, served_flex: f64) -> f64 {
    (d_fix + d_flex * (voll - pc) / voll - served_fix - served_flex).max(0.0)
}

pub fn unserved_energy(solution: &EquilibriumSolution, convention: EueConvention) -> Result<UnservedSeries, AccreditationError> {
    if solution.demand_mode == DemandMode::Uncapped && convention == EueConvention::CappedOnly {
        return Err(AccreditationError::UncappedSolution(solution.run_mode.to_string()));
    }
    let unserved: Vec<f64> = solution
        .layout
        .iter()
        .enumerate()
        .map(|(k, iv)| shortfall(iv.d_fix, iv.d_flex, solution.voll, solution.pc, solution.served_fixed[k], solution.served_flex[k]))
        .collect();
    let eue = solution.layout.iter().zip(&unserved).map(|(iv, l)| iv.weight() * l).sum();
    Ok(UnservedSeries { unserved, eue })
}

/// How pre-existing storage may re-dispatch in the perturbation runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Paradigm {
    Unconstrained,
    ChargingFixed,
    ChargingAndDischargingFixed,
}

impl Paradigm {
    pub const ALL: [Paradigm; 3] = [Paradigm::Unconstrained, Paradigm::ChargingFixed, Paradigm::ChargingAndDischargingFixed];

    pub fn as_str(self) -> &'static str {
        match self {
            Paradigm::Unconstrained => "UNCONSTRAINED",
            Paradigm::ChargingFixed => "CHARGING_FIXED",
            Paradigm::ChargingAndDischargingFixed => "CHARGING_AND_DISCHARGING_FIXED",
        }
    }
}

impl std::fmt::Display for Paradigm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Paradigm {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Paradigm::ALL.into_iter().find(|p| p.as_str() == s).ok_or_else(|| format!("unknown paradigm '{s}'"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccreditationSettings {
    /// Size of each perturbation, MW.
    pub epsilon: f64,
    /// Storage durations to accredit, hours, increasing.
    pub durations: Vec<f64>,
    pub paradigm: Paradigm,
    /// Stop a storage technology's grid after two consecutive credits
    /// within [`CREDIT_NOISE`] of 1.
    pub truncate_at_saturation: bool,
    pub solve: SolveOptions,
}

impl Default for AccreditationSettings {
    fn default() -> Self {
        AccreditationSettings {
            epsilon: 0.01,
            durations: DEFAULT_DURATIONS.to_vec(),
            paradigm: Paradigm::Unconstrained,
            truncate_at_saturation: true,
            // credits are differences of nearly equal EUEs
            solve: SolveOptions { tolerance: 1e-10, ..SolveOptions::default() },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CreditEstimate {
    pub resource: String,
    /// Storage duration, hours; `None` for generators.
    pub duration: Option<f64>,
    pub paradigm: Paradigm,
    pub eue_0: f64,
    pub eue_ref: f64,
    pub eue_r: f64,
    pub credit: f64,
}

impl CreditEstimate {
    /// `EUE_0 − EUE_r`, MWh per year.
    pub fn reduction(&self) -> f64 {
        self.eue_0 - self.eue_r
    }
}

/// Output of one accreditation pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Accreditation {
    /// Reference first, then generators in catalog order, then each storage
    /// technology by increasing duration.
    pub estimates: Vec<CreditEstimate>,
    /// Credits above `1 + 1e-3` or falling with duration.
    pub warnings: Vec<String>,
}

impl Accreditation {
    pub fn generator_credit(&self, name: &str) -> Option<f64> {
        self.estimates.iter().find(|e| e.resource == name && e.duration.is_none()).map(|e| e.credit)
    }

    /// `(ζ, CC)` points of one storage technology.
    pub fn storage_points(&self, name: &str) -> Vec<(f64, f64)> {
        self.estimates.iter().filter(|e| e.resource == name).filter_map(|e| e.duration.map(|z| (z, e.credit))).collect()
    }
}

/// A perfectly available generator with no cost and no emissions.
pub fn reference_generator() -> GeneratorSpec {
    GeneratorSpec {
        name: REFERENCE_NAME.into(),
        variable_cost: 0.0,
        annualized_capex: 0.0,
        fixed_om: 0.0,
        emission_factor: 0.0,
        availability_profile_key: None,
        capacity_credit: 1.0,
    }
}

enum Addition<'a> {
    Reference,
    Generator(&'a GeneratorSpec),
    Storage(&'a StorageSpec, f64),
}

struct Runner<'a> {
    scenarios: &'a ScenarioSet,
    catalog: &'a TechnologyCatalog,
    mix: &'a FixedCapacities,
    design: &'a MarketDesign,
    settings: &'a AccreditationSettings,
}

impl Runner<'_> {
    fn dispatch(&self, addition: Option<&Addition>, pins: &DispatchPins, run: String) -> Result<f64, AccreditationError> {
        let eps = self.settings.epsilon;
        let mut catalog = self.catalog.clone();
        let mut mix = self.mix.clone();
        match addition {
            None => {}
            Some(Addition::Reference) => {
                catalog.generators.push(reference_generator());
                mix.generators.insert(REFERENCE_NAME.into(), eps);
            }
            Some(Addition::Generator(g)) => {
                *mix.generators.entry(g.name.clone()).or_insert(0.0) += eps;
            }
            Some(Addition::Storage(s, zeta)) => {
                let mut unit = (*s).clone();
                unit.name = format!("{}@{}h", s.name, zeta);
                mix.storage.insert(unit.name.clone(), StorageCapacity { power: eps, energy: zeta * eps / s.discharge_efficiency });
                catalog.storage.push(unit);
            }
        }
        let design = MarketDesign::dispatch(DemandMode::Capped, self.design.voll, self.design.pc, self.design.emission_cap, mix);
        let program = assemble_pinned(self.scenarios, &catalog, &design, pins).map_err(|source| AccreditationError::Solve { run: run.clone(), source })?;
        let sol = solve_equilibrium_relaxing(&program, &self.settings.solve).map_err(|source| AccreditationError::Solve { run, source })?;
        Ok(unserved_energy(&sol, EueConvention::CappedOnly)?.eue)
    }
}

/// Step 1 of the procedure on its own: the capped dispatch of `mix`.
pub fn baseline_dispatch(
    mix: &FixedCapacities,
    scenarios: &ScenarioSet,
    catalog: &TechnologyCatalog,
    design: &MarketDesign,
    options: &SolveOptions,
) -> Result<EquilibriumSolution, AccreditationError> {
    let d = MarketDesign::dispatch(DemandMode::Capped, design.voll, design.pc, design.emission_cap, mix.clone());
    let program = assemble_pinned(scenarios, catalog, &d, &DispatchPins::default())
        .map_err(|source| AccreditationError::Solve { run: "baseline".into(), source })?;
    solve_equilibrium_relaxing(&program, options).map_err(|source| AccreditationError::Solve { run: "baseline".into(), source })
}

/// Marginal credits of every generator and of every storage technology at
/// each duration, for the fixed benchmark `mix`.
///
/// `design` supplies VOLL, PC and the emission cap; dispatch always uses
/// the price-capped demand function. The perturbation runs are independent
/// and run on the rayon pool; results come back in a fixed order.
pub fn accredit(
    mix: &FixedCapacities,
    scenarios: &ScenarioSet,
    catalog: &TechnologyCatalog,
    design: &MarketDesign,
    settings: &AccreditationSettings,
) -> Result<Accreditation, AccreditationError> {
    if !(settings.epsilon > 0.0) {
        return Err(AccreditationError::Epsilon(settings.epsilon));
    }
    if catalog.generators.iter().map(|g| &g.name).chain(catalog.storage.iter().map(|s| &s.name)).any(|n| n == REFERENCE_NAME) {
        return Err(AccreditationError::NameClash(REFERENCE_NAME.into()));
    }
    let runner = Runner { scenarios, catalog, mix, design, settings };

    let base = baseline_dispatch(mix, scenarios, catalog, design, &settings.solve)?;
    let eue_0 = unserved_energy(&base, EueConvention::CappedOnly)?.eue;
    let pins = paradigm_pins(&base, settings.paradigm);

    let mut jobs: Vec<(String, Option<f64>, Addition)> = vec![(REFERENCE_NAME.into(), None, Addition::Reference)];
    for g in &catalog.generators {
        jobs.push((g.name.clone(), None, Addition::Generator(g)));
    }
    for s in &catalog.storage {
        for &z in &settings.durations {
            jobs.push((s.name.clone(), Some(z), Addition::Storage(s, z)));
        }
    }
    let eues: Vec<Result<f64, AccreditationError>> = jobs
        .par_iter()
        .map(|(name, z, add)| {
            let run = match z {
                Some(z) => format!("{name} at {z} h ({})", settings.paradigm),
                None => format!("{name} ({})", settings.paradigm),
            };
            runner.dispatch(Some(add), &pins, run)
        })
        .collect();
    let eues = eues.into_iter().collect::<Result<Vec<f64>, _>>()?;
    let eue_ref = eues[0];
    if !(eue_0 - eue_ref > 0.0) {
        return Err(AccreditationError::NoScarcity { eue_0, eue_ref });
    }

    let mut estimates = Vec::with_capacity(jobs.len());
    let mut warnings = Vec::new();
    let mut saturated_run: BTreeMap<&str, usize> = BTreeMap::new();
    for ((name, zeta, _), eue_r) in jobs.iter().zip(eues) {
        if zeta.is_some() && settings.truncate_at_saturation && saturated_run.get(name.as_str()).copied().unwrap_or(0) >= 2 {
            continue;
        }
        let credit = if name == REFERENCE_NAME { 1.0 } else { (eue_0 - eue_r) / (eue_0 - eue_ref) };
        if credit > 1.0 + 1e-3 {
            warnings.push(format!("{name}{} credit {credit:.6} exceeds 1 (solver noise)", zeta.map(|z| format!(" at {z} h")).unwrap_or_default()));
        }
        if zeta.is_some() {
            let c = saturated_run.entry(name.as_str()).or_insert(0);
            *c = if credit >= 1.0 - CREDIT_NOISE { *c + 1 } else { 0 };
        }
        estimates.push(CreditEstimate { resource: name.clone(), duration: *zeta, paradigm: settings.paradigm, eue_0, eue_ref, eue_r, credit });
    }
    for s in &catalog.storage {
        let pts: Vec<(f64, f64)> = estimates.iter().filter(|e| e.resource == s.name).filter_map(|e| e.duration.map(|z| (z, e.credit))).collect();
        for w in pts.windows(2) {
            if w[1].1 < w[0].1 - CREDIT_NOISE {
                warnings.push(format!("{} credit falls from {:.6} at {} h to {:.6} at {} h", s.name, w[0].1, w[0].0, w[1].1, w[1].0));
            }
        }
    }
    Ok(Accreditation { estimates, warnings })
}

/// Dispatch of the installed storage held at the step-1 values.
pub fn paradigm_pins(base: &EquilibriumSolution, paradigm: Paradigm) -> DispatchPins {
    let mut pins = DispatchPins::default();
    for (s, spec) in base.catalog.storage.iter().enumerate() {
        if matches!(paradigm, Paradigm::ChargingFixed | Paradigm::ChargingAndDischargingFixed) {
            pins.charge.insert(spec.name.clone(), base.charge[s].clone());
        }
        if paradigm == Paradigm::ChargingAndDischargingFixed {
            pins.discharge.insert(spec.name.clone(), base.discharge[s].clone());
            // with both flows fixed the stored energy is determined; pinning
            // it too avoids a feasible set that is only as wide as roundoff
            pins.state_of_charge.insert(spec.name.clone(), base.soc[s].clone());
            pins.initial_state.insert(spec.name.clone(), base.storage_initial[s]);
        }
    }
    pins
}

/// Least-squares concave piecewise-linear fit.
#[derive(Debug, Clone, PartialEq)]
pub struct CreditFit {
    pub curve: CreditCurve,
    pub r_squared: f64,
    /// Interior breakpoints, hours.
    pub knots: Vec<f64>,
    /// Set when the points themselves are not monotone and concave; the
    /// curve is then the best fit within the admissible shapes.
    pub warning: bool,
}

/// Fits `f(ζ) = a + b·ζ − Σ γ_k (ζ − κ_k)⁺` with `a ≥ 0`, nonnegative last
/// slope and `γ ≥ 0`, i.e. a continuous, monotone, concave curve of
/// `segment_count` pieces.
///
/// Knots are searched over the sample durations and then refined by golden
/// section; for fixed knots the coefficients solve a nonnegative least
/// squares problem exactly.
///
/// ```
/// use ldesmarket::accreditation::fit_credit_curve;
/// let pts: Vec<(f64, f64)> = [1.0, 2.0, 4.0, 8.0, 16.0].iter().map(|&z| (z, f64::min(1.0, 0.1 + 0.1 * z))).collect();
/// let fit = fit_credit_curve(&pts, 2).unwrap();
/// assert!(fit.r_squared > 1.0 - 1e-9);
/// assert!((fit.curve.value(5.0) - 0.6).abs() < 1e-6);
/// ```
pub fn fit_credit_curve(points: &[(f64, f64)], segment_count: usize) -> Result<CreditFit, AccreditationError> {
    let segment_count = segment_count.max(1);
    let n = points.len();
    if n < segment_count + 1 || points.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(AccreditationError::FitInput { needed: segment_count + 1, found: n });
    }
    let zs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    let nk = segment_count - 1;

    let candidates: Vec<f64> = zs[1..n - 1].to_vec();
    let mut best: Option<(f64, Vec<f64>, Vec<f64>)> = None;
    let mut consider = |knots: &[f64]| {
        let (sse, coef) = nnls_fit(&zs, &ys, knots);
        if best.as_ref().map_or(true, |b| sse < b.0 - 1e-15) {
            best = Some((sse, knots.to_vec(), coef));
        }
    };
    if nk == 0 || candidates.len() < nk {
        // too few interior points for distinct knots: spread them evenly
        let knots: Vec<f64> = (1..=nk).map(|i| zs[0] + (zs[n - 1] - zs[0]) * i as f64 / segment_count as f64).collect();
        consider(&knots);
    } else {
        for combo in combinations(candidates.len(), nk) {
            let knots: Vec<f64> = combo.iter().map(|&i| candidates[i]).collect();
            consider(&knots);
        }
    }
    let (mut sse, mut knots, mut coef) = best.expect("at least one candidate");

    // coordinate-wise golden-section refinement of each knot between its neighbours
    for _ in 0..3 {
        for i in 0..nk {
            let lo = if i == 0 { zs[0] } else { knots[i - 1] };
            let hi = if i + 1 == nk { zs[n - 1] } else { knots[i + 1] };
            let f = |x: f64| {
                let mut k = knots.clone();
                k[i] = x;
                nnls_fit(&zs, &ys, &k).0
            };
            let x = golden_min(f, lo, hi, 60);
            let mut k = knots.clone();
            k[i] = x;
            let (s, c) = nnls_fit(&zs, &ys, &k);
            if s < sse {
                sse = s;
                knots = k;
                coef = c;
            }
        }
    }

    let mean = ys.iter().sum::<f64>() / n as f64;
    let sst: f64 = ys.iter().map(|y| (y - mean).powi(2)).sum();
    let r_squared = if sst > 0.0 { 1.0 - sse / sst } else if sse <= 1e-20 { 1.0 } else { 0.0 };

    // coef = [a, s_last, γ_1..γ_nk] with f = a + s_last·ζ + Σ γ_k min(ζ, κ_k)
    let a = coef[0];
    let mut slopes = vec![coef[1]; segment_count];
    for (k, &g) in coef[2..].iter().enumerate() {
        for s in slopes.iter_mut().take(k + 1) {
            *s += g;
        }
    }
    let mut segments = Vec::with_capacity(segment_count);
    let mut alpha = a;
    let mut lower = 0.0;
    for l in 0..segment_count {
        let upper = if l < nk { knots[l] } else { f64::INFINITY };
        segments.push(CreditSegment { alpha, beta: slopes[l], zeta_lower: lower, zeta_upper: upper });
        if l < nk {
            alpha += (slopes[l] - slopes[l + 1]) * knots[l];
            lower = knots[l];
        }
    }
    let warning = !shape_admissible(&ys, &zs);
    Ok(CreditFit { curve: CreditCurve { segments }, r_squared, knots, warning })
}

fn shape_admissible(ys: &[f64], zs: &[f64]) -> bool {
    // slopes with the noise band each one can carry
    let slopes: Vec<(f64, f64)> =
        zs.windows(2).zip(ys.windows(2)).map(|(z, y)| ((y[1] - y[0]) / (z[1] - z[0]), 2.0 * CREDIT_NOISE / (z[1] - z[0]))).collect();
    slopes.iter().all(|&(s, t)| s >= -t) && slopes.windows(2).all(|p| p[1].0 <= p[0].0 + p[0].1 + p[1].1) && ys[0] >= -CREDIT_NOISE
}

/// Exact NNLS by active-set enumeration over the few coefficients.
fn nnls_fit(zs: &[f64], ys: &[f64], knots: &[f64]) -> (f64, Vec<f64>) {
    let p = knots.len() + 2;
    let col = |j: usize, z: f64| match j {
        0 => 1.0,
        1 => z,
        _ => z.min(knots[j - 2]),
    };
    let mut best = (f64::INFINITY, vec![0.0; p]);
    for mask in 0u32..(1 << p) {
        let support: Vec<usize> = (0..p).filter(|&j| mask & (1 << j) != 0).collect();
        let coef_s = match least_squares(zs, ys, &support, &col) {
            Some(c) => c,
            None => continue,
        };
        if coef_s.iter().any(|&c| c < -1e-12) {
            continue;
        }
        let mut coef = vec![0.0; p];
        for (k, &j) in support.iter().enumerate() {
            coef[j] = coef_s[k].max(0.0);
        }
        let sse: f64 = zs
            .iter()
            .zip(ys)
            .map(|(&z, &y)| {
                let f: f64 = (0..p).map(|j| coef[j] * col(j, z)).sum();
                (y - f).powi(2)
            })
            .sum();
        if sse < best.0 {
            best = (sse, coef);
        }
    }
    best
}

fn least_squares(zs: &[f64], ys: &[f64], support: &[usize], col: &dyn Fn(usize, f64) -> f64) -> Option<Vec<f64>> {
    let m = support.len();
    if m == 0 {
        return Some(vec![]);
    }
    let mut ata = vec![vec![0.0; m]; m];
    let mut aty = vec![0.0; m];
    for (&z, &y) in zs.iter().zip(ys) {
        let row: Vec<f64> = support.iter().map(|&j| col(j, z)).collect();
        for a in 0..m {
            aty[a] += row[a] * y;
            for b in 0..m {
                ata[a][b] += row[a] * row[b];
            }
        }
    }
    solve_dense(ata, aty)
}

/// Gaussian elimination with partial pivoting; `None` when singular.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let m = b.len();
    let scale = a.iter().flatten().fold(0.0f64, |s, v| s.max(v.abs())).max(1e-300);
    for c in 0..m {
        let piv = (c..m).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[piv][c].abs() <= 1e-12 * scale {
            return None;
        }
        a.swap(c, piv);
        b.swap(c, piv);
        for r in c + 1..m {
            let f = a[r][c] / a[c][c];
            for k in c..m {
                a[r][k] -= f * a[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = vec![0.0; m];
    for c in (0..m).rev() {
        let s: f64 = (c + 1..m).map(|k| a[c][k] * x[k]).sum();
        x[c] = (b[c] - s) / a[c][c];
    }
    Some(x)
}

fn golden_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, iters: usize) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..iters {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        x1
    } else {
        x2
    }
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

pub const CREDIT_COLUMNS: [&str; 7] = ["resource", "duration_h", "paradigm", "eue_0_mwh", "eue_ref_mwh", "eue_r_mwh", "credit"];
pub const CURVE_COLUMNS: [&str; 7] = ["technology", "segment", "alpha", "beta", "zeta_lower_h", "zeta_upper_h", "r_squared"];

/// Writes `credits.csv` rows for every estimate.
pub fn write_credits(path: &Path, estimates: &[CreditEstimate]) -> io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(CREDIT_COLUMNS)?;
    for e in estimates {
        w.write_record([
            e.resource.clone(),
            e.duration.map(|z| z.to_string()).unwrap_or_default(),
            e.paradigm.to_string(),
            e.eue_0.to_string(),
            e.eue_ref.to_string(),
            e.eue_r.to_string(),
            e.credit.to_string(),
        ])?;
    }
    w.flush()
}

/// Writes the segment table of fitted curves.
pub fn write_credit_curves(path: &Path, fits: &[(String, CreditFit)]) -> io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(CURVE_COLUMNS)?;
    for (name, fit) in fits {
        for (l, s) in fit.curve.segments.iter().enumerate() {
            w.write_record([
                name.clone(),
                l.to_string(),
                s.alpha.to_string(),
                s.beta.to_string(),
                s.zeta_lower.to_string(),
                s.zeta_upper.to_string(),
                fit.r_squared.to_string(),
            ])?;
        }
    }
    w.flush()
}
