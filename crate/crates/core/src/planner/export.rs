use std::io;
use std::path::Path;

use super::EquilibriumSolution;

pub const SOLUTION_FILES: [&str; 5] = ["capacities.csv", "prices.csv", "dispatch.csv", "duals.csv", "run_summary.toml"];

pub(crate) fn csv_writer(path: &Path) -> io::Result<csv::Writer<std::fs::File>> {
    Ok(csv::WriterBuilder::new().from_path(path)?)
}

pub(crate) fn num(v: f64) -> String {
    format!("{v}")
}

fn to_io(e: csv::Error) -> io::Error {
    io::Error::new(io::ErrorKind::Other, e)
}

/// Writes the solution tables and the run summary into `dir`, prefixing
/// each file name with `prefix`.
pub fn write_solution_files(sol: &EquilibriumSolution, dir: &Path, prefix: &str) -> io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let p = |f: &str| dir.join(format!("{prefix}{f}"));
    let scen_id = |k: usize| sol.layout[k].scenario.to_string();

    let mut w = csv_writer(&p("capacities.csv"))?;
    w.write_record(["technology", "kind", "power_mw", "energy_mwh", "duration_h", "cm_mw"]).map_err(to_io)?;
    for (g, spec) in sol.catalog.generators.iter().enumerate() {
        w.write_record([&spec.name, "generator", &num(sol.generator_capacity[g]), "", "", &num(sol.cm_generator[g])])
            .map_err(to_io)?;
    }
    for (s, spec) in sol.catalog.storage.iter().enumerate() {
        w.write_record([
            spec.name.as_str(),
            "storage",
            &num(sol.storage_power[s]),
            &num(sol.storage_energy[s]),
            &num(sol.storage_duration(s)),
            &num(sol.cm_storage[s]),
        ])
        .map_err(to_io)?;
    }
    w.flush()?;

    let mut w = csv_writer(&p("prices.csv"))?;
    w.write_record(["scenario", "interval_id", "weight_hours", "price_usd_per_mwh", "served_fixed_mw", "served_flex_mw"])
        .map_err(to_io)?;
    for (k, iv) in sol.layout.iter().enumerate() {
        w.write_record([
            scen_id(k),
            iv.t.to_string(),
            num(iv.weight_hours),
            num(sol.energy_price[k]),
            num(sol.served_fixed[k]),
            num(sol.served_flex[k]),
        ])
        .map_err(to_io)?;
    }
    w.flush()?;

    let mut w = csv_writer(&p("dispatch.csv"))?;
    w.write_record(["scenario", "interval_id", "technology", "output_mw", "charge_mw", "discharge_mw", "soc_mwh"])
        .map_err(to_io)?;
    for (k, iv) in sol.layout.iter().enumerate() {
        for (g, spec) in sol.catalog.generators.iter().enumerate() {
            w.write_record([scen_id(k), iv.t.to_string(), spec.name.clone(), num(sol.generation[g][k]), String::new(), String::new(), String::new()])
                .map_err(to_io)?;
        }
        for (s, spec) in sol.catalog.storage.iter().enumerate() {
            w.write_record([
                scen_id(k),
                iv.t.to_string(),
                spec.name.clone(),
                String::new(),
                num(sol.charge[s][k]),
                num(sol.discharge[s][k]),
                num(sol.soc[s][k]),
            ])
            .map_err(to_io)?;
        }
    }
    w.flush()?;

    let mut w = csv_writer(&p("duals.csv"))?;
    w.write_record(["row", "raw_dual"]).map_err(to_io)?;
    for d in &sol.row_duals {
        w.write_record([d.label.name(&sol.layout), num(d.raw)]).map_err(to_io)?;
    }
    w.flush()?;

    std::fs::write(p("run_summary.toml"), run_summary(sol))?;
    Ok(())
}

fn run_summary(sol: &EquilibriumSolution) -> String {
    #[derive(serde::Serialize)]
    struct Summary<'a> {
        run_mode: &'a str,
        demand_mode: String,
        objective: f64,
        iterations: usize,
        residual_primal: f64,
        residual_dual: f64,
        residual_complementarity: f64,
        capacity_price: f64,
        carbon_price: f64,
        expected_emissions: f64,
        expected_served_energy: f64,
    }
    let s = Summary {
        run_mode: sol.run_mode.as_str(),
        demand_mode: format!("{:?}", sol.demand_mode).to_uppercase(),
        objective: sol.objective,
        iterations: sol.iterations,
        residual_primal: sol.residuals.primal,
        residual_dual: sol.residuals.dual,
        residual_complementarity: sol.residuals.complementarity,
        capacity_price: sol.capacity_price,
        carbon_price: sol.carbon_price,
        expected_emissions: sol.expected_emissions(),
        expected_served_energy: sol.expected_served_energy(),
    };
    toml::to_string(&s).unwrap_or_default()
}
