//! Synthetic weather-year generator standing in for measured demand and
//! renewable profiles.
//!
//! Intervals are read as consecutive representative days of 24 hourly
//! steps spread over the year. Every year gets one winter window of low wind
//! and sun; its days stand for themselves (weight 1 h per step) while the
//! ordinary days share the rest of the horizon, so the window is a rare event
//! rather than a fixed share of the year.

use ldesmarket::domain::{Interval, Scenario, ScenarioSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthParams {
    pub years: usize,
    pub intervals_per_year: usize,
    pub horizon_hours: f64,
    pub peak_demand_mw: f64,
    pub flexible_demand_mw: f64,
    pub solar_mean_cf: f64,
    pub wind_mean_cf: f64,
    /// Length of the low-renewable window, in days.
    pub drought_days: usize,
    /// Multiplier on wind availability inside the window.
    pub drought_wind_factor: f64,
    /// Multiplier on solar availability inside the window.
    pub drought_solar_factor: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            years: 2,
            intervals_per_year: 336,
            horizon_hours: 8760.0,
            peak_demand_mw: 100.0,
            flexible_demand_mw: 2.0,
            solar_mean_cf: 0.11,
            wind_mean_cf: 0.29,
            drought_days: 2,
            drought_wind_factor: 0.08,
            drought_solar_factor: 0.4,
        }
    }
}

/// Deterministic in `seed`: the same parameters and seed give the same set.
///
/// ```
/// use ldesmarket_cli::synth::{generate_synthetic_scenarios, SynthParams};
/// let p = SynthParams { intervals_per_year: 48, ..Default::default() };
/// let a = generate_synthetic_scenarios(7, &p);
/// assert_eq!(a, generate_synthetic_scenarios(7, &p));
/// assert_eq!(a.peak_fixed_demand(), 100.0);
/// ```
pub fn generate_synthetic_scenarios(seed: u64, p: &SynthParams) -> ScenarioSet {
    assert!(p.intervals_per_year >= 24, "need at least one day of intervals");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = p.intervals_per_year;
    let days = n.div_ceil(24);
    let noise = Normal::new(0.0, 1.0).expect("valid normal");
    let mut scenarios = Vec::with_capacity(p.years);
    for y in 0..p.years {
        // winter is at both ends of the year; put the window in the first or last quarter
        let span = days.saturating_sub(p.drought_days).max(1);
        let quarter = (span / 4).max(1);
        let start_day = if rng.gen_bool(0.5) { rng.gen_range(0..quarter) } else { span - rng.gen_range(0..quarter).min(span - 1) - 1 };
        let drought = |d: usize| d >= start_day && d < start_day + p.drought_days;
        let drought_steps = (0..n).filter(|&t| drought(t / 24)).count();
        let weights: Vec<f64> = if drought_steps < n && (drought_steps as f64) < p.horizon_hours {
            let w_ordinary = (p.horizon_hours - drought_steps as f64) / (n - drought_steps) as f64;
            (0..n).map(|t| if drought(t / 24) { 1.0 } else { w_ordinary }).collect()
        } else {
            vec![p.horizon_hours / n as f64; n]
        };

        let mut demand = Vec::with_capacity(n);
        let mut solar = Vec::with_capacity(n);
        let mut wind = Vec::with_capacity(n);
        let mut wind_state: f64 = 0.0;
        let mut day_cloud = 1.0;
        let mut day_level = 0.0;
        for t in 0..n {
            let (d, h) = (t / 24, (t % 24) as f64);
            let season = 2.0 * PI * (d as f64 + 0.5) / days as f64;
            let winter = season.cos(); // +1 mid-winter, -1 mid-summer
            if t % 24 == 0 {
                day_cloud = rng.gen_range(0.35..1.0);
                day_level = 0.03 * noise.sample(&mut rng);
            }
            let diurnal = 0.12 * (-((h - 8.5) / 2.5).powi(2)).exp() + 0.2 * (-((h - 18.5) / 2.5).powi(2)).exp()
                - 0.12 * (-((h - 3.5) / 3.0).powi(2)).exp();
            let mut dem = 1.0 + 0.22 * winter + diurnal + day_level + 0.01 * noise.sample(&mut rng);
            if drought(d) {
                dem += 0.04;
            }
            demand.push(dem.max(0.05));

            let sun = if (6.0..=18.0).contains(&h) { (PI * (h - 6.0) / 12.0).sin() } else { 0.0 };
            let mut s = sun * (1.0 - 0.45 * winter) * day_cloud;
            wind_state = 0.85 * wind_state + 0.5 * noise.sample(&mut rng);
            let mut wv = 1.0 / (1.0 + (-(wind_state + 0.35 * winter - 0.6)).exp());
            if drought(d) {
                s *= p.drought_solar_factor;
                wv *= p.drought_wind_factor;
            }
            solar.push(s);
            wind.push(wv);
        }
        let peak = demand.iter().cloned().fold(0.0, f64::max);
        let scale_cf = |v: &mut Vec<f64>, target: f64| {
            // rescale to the target hour-weighted mean; clipping at 1 needs a few passes
            for _ in 0..50 {
                let mean = v.iter().zip(&weights).map(|(x, w)| x * w).sum::<f64>() / p.horizon_hours;
                if mean <= 0.0 || (mean - target).abs() < 1e-12 {
                    break;
                }
                for x in v.iter_mut() {
                    *x = (*x * target / mean).min(1.0);
                }
            }
        };
        scale_cf(&mut solar, p.solar_mean_cf);
        scale_cf(&mut wind, p.wind_mean_cf);
        let intervals = (0..n)
            .map(|t| Interval {
                weight_hours: weights[t],
                d_fix: if demand[t] == peak { p.peak_demand_mw } else { p.peak_demand_mw * demand[t] / peak },
                d_flex: p.flexible_demand_mw,
                availability: vec![solar[t], wind[t]],
            })
            .collect();
        scenarios.push(Scenario { id: format!("y{y}"), probability: 1.0 / p.years as f64, intervals });
    }
    ScenarioSet { horizon_hours: p.horizon_hours, profile_keys: vec!["solar".into(), "wind".into()], scenarios }
}
