//! The subcommands. Each reads a resolved configuration, writes its files
//! into the output directory and returns their paths.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use ldesmarket::accreditation::{accredit as accredit_mix, baseline_dispatch, write_credit_curves, write_credits};
use ldesmarket::analysis::{
    calibrate_capacity_market, credit_sensitivity_sweep, evaluate_run, fit_storage_credits, missing_money_split, run_suite,
    storage_book_values, write_book_values, write_missing_money, write_net_revenue_distribution, write_run_metrics,
    write_suite_summary, write_sweep, CalibrationOutcome, RunResult, RunSuite, EOM_PC_OPT_MIX, EOM_VOLL,
};
use ldesmarket::calibration::{write_calibration, write_cm_curve};
use ldesmarket::domain::{validate_inputs, FixedCapacities, MarketDesign, RunMode, ScenarioSet};
use ldesmarket::planner::{agent_profit, assemble, solve_equilibrium_relaxing, write_solution_files, EquilibriumSolution};
use serde::Serialize;

use crate::config::{Inputs, RunConfig};
use crate::error::{CliError, Diagnostic, ERROR_FILE};

/// Relative size, against annualized cost, of the profit a free-investment
/// run may leave with an installed technology.
pub const ZERO_PROFIT_TOL: f64 = 1e-4;

pub type Written = Vec<PathBuf>;

fn prepare(out: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(out)?;
    let stale = out.join(ERROR_FILE);
    if stale.exists() {
        std::fs::remove_file(stale)?;
    }
    Ok(())
}

fn check_inputs(inputs: &Inputs, designs: &[&MarketDesign]) -> Result<(), CliError> {
    let mut seen = BTreeSet::new();
    let mut diags = Vec::new();
    for d in designs {
        for issue in validate_inputs(&inputs.scenarios, &inputs.catalog, d).issues {
            if seen.insert((issue.location.clone(), issue.message.clone())) {
                diags.push(Diagnostic { location: issue.location, message: issue.message });
            }
        }
    }
    if diags.is_empty() {
        return Ok(());
    }
    let mut err = CliError::config(format!("inputs failed validation with {} issues", diags.len()));
    err.diagnostics = diags;
    Err(err)
}

fn suite_designs(inputs: &Inputs) -> [MarketDesign; 2] {
    let p = &inputs.params;
    [MarketDesign::eom_voll(p.voll, p.pc, p.emission_cap), MarketDesign::eom_pc(p.voll, p.pc, p.emission_cap)]
}

/// Technologies of a free-investment run that keep a profit or loss above
/// [`ZERO_PROFIT_TOL`] of their annualized cost.
pub fn zero_profit_violations(run: &str, sol: &EquilibriumSolution, peak: f64) -> Vec<Diagnostic> {
    if sol.run_mode == RunMode::DispatchFixedMix {
        return Vec::new();
    }
    let threshold = 1e-4 * peak;
    let gens = sol.catalog.generators.iter().zip(&sol.generator_capacity).map(|(g, c)| (&g.name, *c));
    let stos = sol.catalog.storage.iter().zip(&sol.storage_power).map(|(s, c)| (&s.name, *c));
    let mut out = Vec::new();
    for (name, cap) in gens.chain(stos) {
        if cap <= threshold {
            continue;
        }
        let (Ok(profit), Ok(cost)) = (agent_profit(sol, name), sol.annual_cost(name)) else { continue };
        if profit.abs() > ZERO_PROFIT_TOL * cost {
            out.push(Diagnostic { location: format!("{run} {name}"), message: format!("profit {profit:.6e} $/yr against annual cost {cost:.6e}") });
        }
    }
    out
}

fn invariant_result(diags: Vec<Diagnostic>, written: Written) -> Result<Written, CliError> {
    if diags.is_empty() {
        return Ok(written);
    }
    let mut err = CliError::invariant(format!("{} zero-profit violations", diags.len()));
    err.diagnostics = diags;
    Err(err)
}

fn write_run(dir: &Path, run: &RunResult, scenarios: &ScenarioSet, written: &mut Written) -> Result<(), CliError> {
    write_solution_files(&run.solution, dir, "")?;
    for f in ldesmarket::planner::SOLUTION_FILES {
        written.push(dir.join(f));
    }
    let metrics = dir.join("metrics.csv");
    write_run_metrics(&metrics, run, scenarios)?;
    written.push(metrics);
    Ok(())
}

#[derive(Serialize)]
struct ValidationFile<'a> {
    passed: bool,
    scenarios: usize,
    intervals: usize,
    generators: usize,
    storage: usize,
    expected_demand_mwh: f64,
    emission_cap_t: f64,
    issues: &'a [Diagnostic],
}

/// Reads every input and checks every invariant. Writes `validation.toml`
/// either way; any issue is a configuration error.
pub fn validate(cfg: &RunConfig, out: &Path) -> Result<Written, CliError> {
    prepare(out)?;
    let inputs = cfg.resolve()?;
    let [voll, pc] = suite_designs(&inputs);
    let mut designs = vec![&voll, &pc];
    // a capacity market run without a curve gets one from calibration
    if !(inputs.design.run_mode == RunMode::EPlusCm && inputs.design.capacity_demand_curve.is_none()) {
        designs.push(&inputs.design);
    }
    let result = check_inputs(&inputs, &designs);
    let issues = result.as_ref().err().map(|e| e.diagnostics.clone()).unwrap_or_default();
    let file = out.join("validation.toml");
    let report = ValidationFile {
        passed: issues.is_empty(),
        scenarios: inputs.scenarios.scenarios.len(),
        intervals: inputs.scenarios.num_intervals(),
        generators: inputs.catalog.generators.len(),
        storage: inputs.catalog.storage.len(),
        expected_demand_mwh: inputs.scenarios.expected_demand(),
        emission_cap_t: inputs.params.emission_cap,
        issues: &issues,
    };
    std::fs::write(&file, toml::to_string(&report).map_err(std::io::Error::other)?)?;
    result.map(|_| vec![file])
}

/// One run in the configured mode.
pub fn solve(cfg: &RunConfig, out: &Path) -> Result<Written, CliError> {
    prepare(out)?;
    let inputs = cfg.resolve()?;
    check_inputs(&inputs, &[&inputs.design])?;
    let program = assemble(&inputs.scenarios, &inputs.catalog, &inputs.design)?;
    let sol = solve_equilibrium_relaxing(&program, &inputs.params.solve)?;
    let name = inputs.design.run_mode.as_str();
    let run = evaluate_run(name, sol, &inputs.scenarios, &inputs.params.solve)?;
    let mut written = Vec::new();
    write_run(out, &run, &inputs.scenarios, &mut written)?;
    let diags = zero_profit_violations(name, &run.solution, inputs.scenarios.peak_fixed_demand());
    invariant_result(diags, written)
}

/// The mix to accredit: configured fixed capacities, or the benchmark
/// optimum, which is then written under `EOM_VOLL/`.
fn benchmark_mix(inputs: &Inputs, out: &Path, written: &mut Written) -> Result<FixedCapacities, CliError> {
    if let Some(mix) = &inputs.fixed_capacities {
        return Ok(mix.clone());
    }
    let [voll, _] = suite_designs(inputs);
    let program = assemble(&inputs.scenarios, &inputs.catalog, &voll)?;
    let sol = solve_equilibrium_relaxing(&program, &inputs.params.solve)?;
    let run = evaluate_run(EOM_VOLL, sol, &inputs.scenarios, &inputs.params.solve)?;
    write_run(&out.join(EOM_VOLL), &run, &inputs.scenarios, written)?;
    let diags = zero_profit_violations(EOM_VOLL, &run.solution, inputs.scenarios.peak_fixed_demand());
    invariant_result(diags, Vec::new())?;
    Ok(run.solution.mix())
}

/// Marginal credits of the benchmark mix and the fitted storage curves.
pub fn accredit(cfg: &RunConfig, out: &Path) -> Result<Written, CliError> {
    prepare(out)?;
    let inputs = cfg.resolve()?;
    let [voll, pc] = suite_designs(&inputs);
    check_inputs(&inputs, &[&voll, &pc])?;
    let mut written = Vec::new();
    let mix = benchmark_mix(&inputs, out, &mut written)?;
    let acc = accredit_mix(&mix, &inputs.scenarios, &inputs.catalog, &pc, &inputs.params.accreditation)?;
    let (fits, mut notes) = fit_storage_credits(&acc, &inputs.catalog, inputs.params.segment_count)?;
    notes.extend(acc.warnings.iter().cloned());
    let credits = out.join("credits.csv");
    write_credits(&credits, &acc.estimates)?;
    let curves = out.join("credit_curves.csv");
    write_credit_curves(&curves, &fits)?;
    let notes_file = out.join("accreditation_notes.txt");
    std::fs::write(&notes_file, notes.iter().map(|n| format!("{n}\n")).collect::<String>())?;
    written.extend([credits, curves, notes_file]);
    Ok(written)
}

#[derive(Serialize)]
struct CalibrationSummary<'a> {
    reference: &'a str,
    capacity_target_mw: f64,
    net_cone_ref_usd_per_mw_yr: f64,
    status: String,
    notes: &'a [String],
}

fn write_calibration_files(out: &Path, reference: &str, c: &CalibrationOutcome, written: &mut Written) -> Result<(), CliError> {
    if let Some(acc) = &c.accreditation {
        let f = out.join("credits.csv");
        write_credits(&f, &acc.estimates)?;
        written.push(f);
    }
    let f = out.join("credit_curves.csv");
    write_credit_curves(&f, &c.fits)?;
    written.push(f);
    let f = out.join("calibration.csv");
    write_calibration(&f, &c.net_cone)?;
    written.push(f);
    let f = out.join("cm_curve.csv");
    write_cm_curve(&f, &c.curve)?;
    written.push(f);
    let summary = CalibrationSummary {
        reference,
        capacity_target_mw: c.capacity_target,
        net_cone_ref_usd_per_mw_yr: c.net_cone.net_cone_ref,
        status: format!("{:?}", c.net_cone.status),
        notes: &c.notes,
    };
    let f = out.join("calibration_summary.toml");
    std::fs::write(&f, toml::to_string(&summary).map_err(std::io::Error::other)?)?;
    written.push(f);
    Ok(())
}

/// Accreditation, net-CONE and the capacity demand curve for the
/// benchmark mix.
pub fn calibrate(cfg: &RunConfig, out: &Path) -> Result<Written, CliError> {
    prepare(out)?;
    let inputs = cfg.resolve()?;
    let [voll, pc] = suite_designs(&inputs);
    check_inputs(&inputs, &[&voll, &pc])?;
    let mut written = Vec::new();
    let mix = benchmark_mix(&inputs, out, &mut written)?;
    let capped = baseline_dispatch(&mix, &inputs.scenarios, &inputs.catalog, &pc, &inputs.params.solve)?;
    let c = calibrate_capacity_market(&mix, &capped, &inputs.scenarios, &inputs.catalog, &inputs.params)?;
    write_calibration_files(out, &inputs.params.reference, &c, &mut written)?;
    Ok(written)
}

fn write_suite(out: &Path, suite: &RunSuite, written: &mut Written) -> Result<Vec<Diagnostic>, CliError> {
    for run in &suite.runs {
        write_run(&out.join(&run.name), run, &suite.scenarios, written)?;
    }
    let f = out.join("summary.csv");
    write_suite_summary(&f, suite)?;
    written.push(f);
    write_calibration_files(out, &suite.params.reference, &suite.calibration, written)?;

    let opt_mix = &suite.run(EOM_PC_OPT_MIX).expect("suite has the capped benchmark").solution;
    let books = storage_book_values(opt_mix)?;
    let f = out.join("book_values.csv");
    write_book_values(&f, &books)?;
    written.push(f);
    let f = out.join("missing_money.csv");
    write_missing_money(&f, &missing_money_split(opt_mix, &books)?)?;
    written.push(f);
    let f = out.join("net_revenue_distribution.csv");
    write_net_revenue_distribution(&f, &suite.runs.iter().collect::<Vec<_>>(), &suite.scenarios)?;
    written.push(f);

    let peak = suite.scenarios.peak_fixed_demand();
    Ok(suite.runs.iter().flat_map(|r| zero_profit_violations(&r.name, &r.solution, peak)).collect())
}

fn solve_suite(cfg: &RunConfig) -> Result<(Inputs, RunSuite), CliError> {
    let inputs = cfg.resolve()?;
    let designs = suite_designs(&inputs);
    check_inputs(&inputs, &[&designs[0], &designs[1]])?;
    let suite = run_suite(&inputs.scenarios, &inputs.catalog, &inputs.params)?;
    Ok((inputs, suite))
}

/// The four market runs end to end.
pub fn suite(cfg: &RunConfig, out: &Path) -> Result<Written, CliError> {
    prepare(out)?;
    let (_, suite) = solve_suite(cfg)?;
    let mut written = Vec::new();
    let diags = write_suite(out, &suite, &mut written)?;
    invariant_result(diags, written)
}

/// Directory of one sweep point.
pub fn sweep_tag(factor: f64) -> String {
    format!("scale_{factor}")
}

/// The suite, then the capacity market again at each credit scaling.
pub fn sweep(cfg: &RunConfig, out: &Path) -> Result<Written, CliError> {
    prepare(out)?;
    let (inputs, suite) = solve_suite(cfg)?;
    let mut written = Vec::new();
    let mut diags = write_suite(out, &suite, &mut written)?;
    let points = credit_sensitivity_sweep(&suite, &inputs.sweep_factors)?;
    let peak = suite.scenarios.peak_fixed_demand();
    for p in &points {
        let dir = out.join("sweep").join(sweep_tag(p.factor));
        write_run(&dir, &p.run, &suite.scenarios, &mut written)?;
        let f = dir.join("cm_curve.csv");
        write_cm_curve(&f, &p.curve)?;
        written.push(f);
        diags.extend(zero_profit_violations(&p.run.name, &p.run.solution, peak));
    }
    let f = out.join("sweep.csv");
    write_sweep(&f, &points)?;
    written.push(f);
    invariant_result(diags, written)
}

#[derive(Serialize)]
struct SynthSummary {
    seed: u64,
    scenarios: usize,
    intervals: usize,
    peak_fixed_demand_mw: f64,
    expected_demand_mwh: f64,
    /// Hour- and probability-weighted mean availability per profile.
    mean_availability: std::collections::BTreeMap<String, f64>,
}

/// Mean availability of each profile, weighted by interval hours and
/// scenario probability.
pub fn mean_availability(set: &ScenarioSet) -> std::collections::BTreeMap<String, f64> {
    let mut sums = vec![0.0; set.profile_keys.len()];
    let mut hours = 0.0;
    for s in &set.scenarios {
        for iv in &s.intervals {
            let w = s.probability * iv.weight_hours;
            hours += w;
            for (acc, a) in sums.iter_mut().zip(&iv.availability) {
                *acc += w * a;
            }
        }
    }
    set.profile_keys.iter().cloned().zip(sums.into_iter().map(|v| v / hours)).collect()
}

/// Writes the scenario set the configuration describes as `scenarios.csv`.
pub fn synth(cfg: &RunConfig, out: &Path) -> Result<Written, CliError> {
    prepare(out)?;
    let set = cfg.load_scenarios()?;
    let f = out.join("scenarios.csv");
    std::fs::write(&f, set.to_csv())?;
    let summary = SynthSummary {
        seed: cfg.seed,
        scenarios: set.scenarios.len(),
        intervals: set.num_intervals(),
        peak_fixed_demand_mw: set.peak_fixed_demand(),
        expected_demand_mwh: set.expected_demand(),
        mean_availability: mean_availability(&set),
    };
    let g = out.join("synth_summary.toml");
    std::fs::write(&g, toml::to_string(&summary).map_err(std::io::Error::other)?)?;
    Ok(vec![f, g])
}
