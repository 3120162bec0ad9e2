use serde::{Deserialize, Serialize};

/// Capital recovery factor `r(1+r)^n / ((1+r)^n − 1)`.
///
/// ```
/// let crf = ldesmarket::domain::capital_recovery_factor(0.071, 30);
/// assert!((crf - 0.081397).abs() < 1e-6);
/// ```
pub fn capital_recovery_factor(rate: f64, years: u32) -> f64 {
    if rate == 0.0 {
        return 1.0 / years as f64;
    }
    let g = (1.0 + rate).powi(years as i32);
    rate * g / (g - 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub name: String,
    /// `C^V` in $/MWh.
    pub variable_cost: f64,
    /// `Ĩ` in $/MW-yr.
    pub annualized_capex: f64,
    /// `I^F` in $/MW-yr.
    pub fixed_om: f64,
    /// `EF` in tCO2/MWh.
    pub emission_factor: f64,
    /// Availability column in the scenario set; `None` means `A ≡ 1`.
    pub availability_profile_key: Option<String>,
    /// `CC` used by the capacity market.
    pub capacity_credit: f64,
}

impl GeneratorSpec {
    pub fn annual_cost_per_mw(&self) -> f64 {
        self.annualized_capex + self.fixed_om
    }
}

/// One linear piece `α + β·ζ` of a credit curve, nominally used on
/// `[zeta_lower, zeta_upper]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CreditSegment {
    pub alpha: f64,
    pub beta: f64,
    pub zeta_lower: f64,
    pub zeta_upper: f64,
}

/// Concave piecewise-linear capacity credit as a function of duration
/// `ζ = η^dis·c^E/c^P` in hours.
///
/// For a concave curve the value on every range equals the minimum over all
/// pieces, which is how it is evaluated; the result is clipped to `[0, 1]`.
///
/// ```
/// use ldesmarket::domain::CreditCurve;
/// let f = CreditCurve::from_breakpoints(&[(0.0, 0.0), (4.0, 0.8), (12.0, 1.0)]);
/// assert!((f.value(2.0) - 0.4).abs() < 1e-12);
/// assert!((f.value(8.0) - 0.9).abs() < 1e-12);
/// assert_eq!(f.value(100.0), 1.0);
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct CreditCurve {
    pub segments: Vec<CreditSegment>,
}

impl CreditCurve {
    pub fn constant(v: f64) -> Self {
        CreditCurve { segments: vec![CreditSegment { alpha: v, beta: 0.0, zeta_lower: 0.0, zeta_upper: f64::INFINITY }] }
    }

    /// Curve through consecutive `(ζ, value)` breakpoints; the last piece is
    /// extended to infinity.
    pub fn from_breakpoints(points: &[(f64, f64)]) -> Self {
        let mut segments = Vec::new();
        for w in points.windows(2) {
            let beta = (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
            segments.push(CreditSegment { alpha: w[0].1 - beta * w[0].0, beta, zeta_lower: w[0].0, zeta_upper: w[1].0 });
        }
        if let Some(last) = segments.last_mut() {
            last.zeta_upper = f64::INFINITY;
        }
        CreditCurve { segments }
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// Unclipped concave envelope `min_l (α_l + β_l ζ)`.
    pub fn raw(&self, zeta: f64) -> f64 {
        self.segments.iter().map(|s| s.alpha + s.beta * zeta).fold(f64::INFINITY, f64::min)
    }

    pub fn value(&self, zeta: f64) -> f64 {
        if self.segments.is_empty() {
            return 0.0;
        }
        self.raw(zeta).clamp(0.0, 1.0)
    }

    /// True when the unclipped curve rises above 1 for some duration, in
    /// which case the model needs the extra `c^CM ≤ c^P` row.
    pub fn exceeds_one(&self) -> bool {
        match self.segments.last() {
            Some(s) => s.beta > 0.0 || s.alpha > 1.0,
            None => false,
        }
    }

    /// Multiplies the curve by `k`; clipping to `[0, 1]` still applies on
    /// evaluation and in the model.
    pub fn scaled(&self, k: f64) -> CreditCurve {
        CreditCurve {
            segments: self.segments.iter().map(|s| CreditSegment { alpha: s.alpha * k, beta: s.beta * k, ..*s }).collect(),
        }
    }

    /// Violated invariants, if any.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (l, s) in self.segments.iter().enumerate() {
            if !(s.alpha.is_finite() && s.beta.is_finite()) {
                out.push(format!("segment {l} has a non-finite coefficient"));
            }
            if s.beta < 0.0 {
                out.push(format!("segment {l} slope {} is negative", s.beta));
            }
            if s.alpha < 0.0 {
                out.push(format!("segment {l} intercept {} is negative", s.alpha));
            }
        }
        for (l, w) in self.segments.windows(2).enumerate() {
            if w[1].beta > w[0].beta {
                out.push(format!("slopes increase between segments {l} and {}", l + 1));
            }
            let z = w[0].zeta_upper;
            let gap = (w[0].alpha + w[0].beta * z) - (w[1].alpha + w[1].beta * z);
            if gap.abs() > 1e-9 {
                out.push(format!("discontinuity of {gap} at ζ = {z}"));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StorageSpec {
    pub name: String,
    /// `Ĩ^P` in $/MW-yr.
    pub power_capex: f64,
    /// `I^{P.F}` in $/MW-yr.
    pub power_fixed_om: f64,
    /// `Ĩ^E` in $/MWh-yr.
    pub energy_capex: f64,
    /// `I^{E.F}` in $/MWh-yr.
    pub energy_fixed_om: f64,
    pub charge_efficiency: f64,
    pub discharge_efficiency: f64,
    /// Charged per MWh discharged.
    pub variable_cost: f64,
    pub credit_curve: CreditCurve,
}

impl StorageSpec {
    pub fn power_cost_per_mw(&self) -> f64 {
        self.power_capex + self.power_fixed_om
    }

    pub fn energy_cost_per_mwh(&self) -> f64 {
        self.energy_capex + self.energy_fixed_om
    }

    /// Annual cost per MW of power at duration `ζ` (energy `ζ/η^dis` per MW).
    pub fn annual_cost_per_mw(&self, zeta: f64) -> f64 {
        self.power_cost_per_mw() + self.energy_cost_per_mwh() * zeta / self.discharge_efficiency
    }

    /// `ζ = η^dis·c^E/c^P`; zero for an empty unit.
    pub fn duration(&self, power: f64, energy: f64) -> f64 {
        if power <= 0.0 {
            0.0
        } else {
            self.discharge_efficiency * energy / power
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct TechnologyCatalog {
    pub generators: Vec<GeneratorSpec>,
    pub storage: Vec<StorageSpec>,
}

impl TechnologyCatalog {
    pub fn generator(&self, name: &str) -> Option<&GeneratorSpec> {
        self.generators.iter().find(|g| g.name == name)
    }

    pub fn storage_unit(&self, name: &str) -> Option<&StorageSpec> {
        self.storage.iter().find(|s| s.name == name)
    }
}

/// Generator record in the units of the techno-economic table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorRecord {
    pub name: String,
    pub power_capex_per_kw: f64,
    pub fom_per_kw_yr: f64,
    pub fuel_vom_per_mwh: f64,
    pub lifetime_years: u32,
    pub wacc_percent: f64,
    #[serde(default)]
    pub emission_g_per_kwh: f64,
    #[serde(default)]
    pub availability_profile: Option<String>,
    #[serde(default = "one")]
    pub capacity_credit: f64,
}

fn one() -> f64 {
    1.0
}

/// Storage record in the units of the techno-economic table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StorageRecord {
    pub name: String,
    pub power_capex_per_kw: f64,
    pub energy_capex_per_kwh: f64,
    pub fom_per_kw_yr: f64,
    pub energy_fom_per_kwh_yr: f64,
    pub fuel_vom_per_mwh: f64,
    pub charge_eff_percent: f64,
    pub discharge_eff_percent: f64,
    pub lifetime_years: u32,
    pub wacc_percent: f64,
    #[serde(default)]
    pub credit_curve: CreditCurve,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct CatalogRecords {
    #[serde(default, rename = "generator")]
    pub generators: Vec<GeneratorRecord>,
    #[serde(default, rename = "storage")]
    pub storage: Vec<StorageRecord>,
}

impl GeneratorRecord {
    pub fn to_spec(&self) -> GeneratorSpec {
        GeneratorSpec {
            name: self.name.clone(),
            variable_cost: self.fuel_vom_per_mwh,
            annualized_capex: 1000.0 * self.power_capex_per_kw * capital_recovery_factor(self.wacc_percent / 100.0, self.lifetime_years),
            fixed_om: 1000.0 * self.fom_per_kw_yr,
            emission_factor: self.emission_g_per_kwh / 1000.0,
            availability_profile_key: self.availability_profile.clone(),
            capacity_credit: self.capacity_credit,
        }
    }
}

impl StorageRecord {
    pub fn to_spec(&self) -> StorageSpec {
        let crf = capital_recovery_factor(self.wacc_percent / 100.0, self.lifetime_years);
        StorageSpec {
            name: self.name.clone(),
            power_capex: 1000.0 * self.power_capex_per_kw * crf,
            power_fixed_om: 1000.0 * self.fom_per_kw_yr,
            energy_capex: 1000.0 * self.energy_capex_per_kwh * crf,
            energy_fixed_om: 1000.0 * self.energy_fom_per_kwh_yr,
            charge_efficiency: self.charge_eff_percent / 100.0,
            discharge_efficiency: self.discharge_eff_percent / 100.0,
            variable_cost: self.fuel_vom_per_mwh,
            credit_curve: self.credit_curve.clone(),
        }
    }
}

impl CatalogRecords {
    pub fn to_catalog(&self) -> TechnologyCatalog {
        TechnologyCatalog {
            generators: self.generators.iter().map(GeneratorRecord::to_spec).collect(),
            storage: self.storage.iter().map(StorageRecord::to_spec).collect(),
        }
    }

    /// The five technologies of the case study. Solar and wind read the
    /// `solar` and `wind` availability columns.
    pub fn case_study() -> CatalogRecords {
        let gen = |name: &str, capex, fom, vom, wacc, ef, profile: Option<&str>| GeneratorRecord {
            name: name.into(),
            power_capex_per_kw: capex,
            fom_per_kw_yr: fom,
            fuel_vom_per_mwh: vom,
            lifetime_years: 30,
            wacc_percent: wacc,
            emission_g_per_kwh: ef,
            availability_profile: profile.map(str::to_string),
            capacity_credit: 1.0,
        };
        CatalogRecords {
            generators: vec![
                gen("CCGT-CCS", 2500.0, 27.0, 40.0, 7.1, 37.8, None),
                gen("Solar", 895.0, 15.0, 0.5, 6.2, 0.0, Some("solar")),
                gen("Wind", 1335.0, 28.0, 0.5, 6.2, 0.0, Some("wind")),
            ],
            storage: vec![
                StorageRecord {
                    name: "Battery".into(),
                    power_capex_per_kw: 306.0,
                    energy_capex_per_kwh: 223.0,
                    fom_per_kw_yr: 7.6,
                    energy_fom_per_kwh_yr: 5.6,
                    fuel_vom_per_mwh: 0.5,
                    charge_eff_percent: 92.0,
                    discharge_eff_percent: 92.0,
                    lifetime_years: 15,
                    wacc_percent: 7.1,
                    credit_curve: CreditCurve::default(),
                },
                StorageRecord {
                    name: "LDES".into(),
                    power_capex_per_kw: 2000.0,
                    energy_capex_per_kwh: 10.0,
                    fom_per_kw_yr: 40.0,
                    energy_fom_per_kwh_yr: 0.1,
                    fuel_vom_per_mwh: 0.5,
                    charge_eff_percent: 60.0,
                    discharge_eff_percent: 50.0,
                    lifetime_years: 30,
                    wacc_percent: 7.1,
                    credit_curve: CreditCurve::default(),
                },
            ],
        }
    }
}
