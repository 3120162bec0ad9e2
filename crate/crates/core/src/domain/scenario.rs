use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

/// One aggregated time interval of a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    /// Duration `w` in hours.
    pub weight_hours: f64,
    /// `D^fix` in MW.
    pub d_fix: f64,
    /// `D^flex` in MW.
    pub d_flex: f64,
    /// Availability per profile key, in the order of [`ScenarioSet::profile_keys`].
    pub availability: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub id: String,
    /// Probability weight `δ`.
    pub probability: f64,
    pub intervals: Vec<Interval>,
}

/// Weighted intervals of every scenario, plus the availability profiles
/// they carry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSet {
    pub horizon_hours: f64,
    pub profile_keys: Vec<String>,
    pub scenarios: Vec<Scenario>,
}

/// A problem found while reading a scenario file. `line` is 1-based and
/// counts the header.
#[derive(Debug, Clone, PartialEq)]
pub struct RowDiagnostic {
    pub line: usize,
    pub message: String,
}

impl std::fmt::Display for RowDiagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

pub const FIXED_COLUMNS: [&str; 5] = ["scenario_id", "interval_id", "weight_hours", "d_fix_mw", "d_flex_mw"];

impl ScenarioSet {
    pub fn num_intervals(&self) -> usize {
        self.scenarios.iter().map(|s| s.intervals.len()).sum()
    }

    pub fn profile_index(&self, key: &str) -> Option<usize> {
        self.profile_keys.iter().position(|k| k == key)
    }

    /// Flat iterator over `(scenario index, interval)` in scenario order.
    pub fn iter_intervals(&self) -> impl Iterator<Item = (usize, &Interval)> {
        self.scenarios
            .iter()
            .enumerate()
            .flat_map(|(w, s)| s.intervals.iter().map(move |iv| (w, iv)))
    }

    /// `Σ w·δ·(D^fix + D^flex)`, the expected annual demand in MWh.
    pub fn expected_demand(&self) -> f64 {
        self.scenarios
            .iter()
            .map(|s| s.probability * s.intervals.iter().map(|iv| iv.weight_hours * (iv.d_fix + iv.d_flex)).sum::<f64>())
            .sum()
    }

    pub fn peak_fixed_demand(&self) -> f64 {
        self.iter_intervals().fold(0.0, |m, (_, iv)| m.max(iv.d_fix))
    }

    /// Multiplies every demand by `k`.
    pub fn scale_demand(&self, k: f64) -> ScenarioSet {
        let mut out = self.clone();
        for s in &mut out.scenarios {
            for iv in &mut s.intervals {
                iv.d_fix *= k;
                iv.d_flex *= k;
            }
        }
        out
    }

    /// Reads the columnar scenario format. Probabilities are not part of the
    /// file; `probabilities` lists them in order of first appearance of each
    /// scenario id, and `None` means uniform.
    ///
    /// Every malformed row is reported; parsing does not stop at the first.
    pub fn from_csv(
        text: &str,
        probabilities: Option<&[f64]>,
        horizon_hours: f64,
    ) -> Result<ScenarioSet, Vec<RowDiagnostic>> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(text.as_bytes());
        let mut diags = Vec::new();
        let headers = match rdr.headers() {
            Ok(h) => h.clone(),
            Err(e) => return Err(vec![RowDiagnostic { line: 1, message: e.to_string() }]),
        };
        for (k, want) in FIXED_COLUMNS.iter().enumerate() {
            if headers.get(k) != Some(want) {
                diags.push(RowDiagnostic {
                    line: 1,
                    message: format!("column {} must be '{}', found '{}'", k + 1, want, headers.get(k).unwrap_or("")),
                });
            }
        }
        if !diags.is_empty() {
            return Err(diags);
        }
        let profile_keys: Vec<String> = headers.iter().skip(FIXED_COLUMNS.len()).map(str::to_string).collect();
        let mut scenarios: Vec<Scenario> = Vec::new();
        let mut last_interval: Vec<i64> = Vec::new();
        for (row, rec) in rdr.records().enumerate() {
            let line = row + 2;
            let rec = match rec {
                Ok(r) => r,
                Err(e) => {
                    diags.push(RowDiagnostic { line, message: e.to_string() });
                    continue;
                }
            };
            if rec.len() != headers.len() {
                diags.push(RowDiagnostic { line, message: format!("expected {} fields, found {}", headers.len(), rec.len()) });
                continue;
            }
            let mut num = |k: usize| -> Option<f64> {
                match rec[k].parse::<f64>() {
                    Ok(v) if v.is_finite() => Some(v),
                    _ => {
                        diags.push(RowDiagnostic { line, message: format!("{}: '{}' is not a finite number", headers[k].to_string(), &rec[k]) });
                        None
                    }
                }
            };
            let w = num(2);
            let dfix = num(3);
            let dflex = num(4);
            let avail: Vec<Option<f64>> = (FIXED_COLUMNS.len()..rec.len()).map(&mut num).collect();
            let interval_id = match rec[1].parse::<i64>() {
                Ok(v) => Some(v),
                Err(_) => {
                    diags.push(RowDiagnostic { line, message: format!("interval_id: '{}' is not an integer", &rec[1]) });
                    None
                }
            };
            let (Some(w), Some(dfix), Some(dflex), Some(interval_id)) = (w, dfix, dflex, interval_id) else { continue };
            if avail.iter().any(Option::is_none) {
                continue;
            }
            let availability: Vec<f64> = avail.into_iter().flatten().collect();
            if w <= 0.0 {
                diags.push(RowDiagnostic { line, message: format!("weight_hours must be positive, found {w}") });
            }
            if dfix < 0.0 || dflex < 0.0 {
                diags.push(RowDiagnostic { line, message: "demand must be nonnegative".into() });
            }
            for (k, a) in availability.iter().enumerate() {
                if !(0.0..=1.0).contains(a) {
                    diags.push(RowDiagnostic { line, message: format!("availability '{}' = {a} outside [0, 1]", profile_keys[k]) });
                }
            }
            let sid = rec[0].to_string();
            let pos = match scenarios.iter().position(|s| s.id == sid) {
                Some(p) => {
                    if p + 1 != scenarios.len() {
                        diags.push(RowDiagnostic { line, message: format!("rows of scenario '{sid}' are not contiguous") });
                    }
                    p
                }
                None => {
                    scenarios.push(Scenario { id: sid, probability: 0.0, intervals: Vec::new() });
                    last_interval.push(i64::MIN);
                    scenarios.len() - 1
                }
            };
            if interval_id <= last_interval[pos] {
                diags.push(RowDiagnostic { line, message: format!("interval_id {interval_id} is not increasing") });
            }
            last_interval[pos] = interval_id;
            scenarios[pos].intervals.push(Interval { weight_hours: w, d_fix: dfix, d_flex: dflex, availability });
        }
        if scenarios.is_empty() && diags.is_empty() {
            diags.push(RowDiagnostic { line: 1, message: "no scenario rows".into() });
        }
        match probabilities {
            Some(p) if p.len() != scenarios.len() => diags.push(RowDiagnostic {
                line: 0,
                message: format!("{} probabilities given for {} scenarios", p.len(), scenarios.len()),
            }),
            Some(p) => {
                for (s, &pi) in scenarios.iter_mut().zip(p) {
                    s.probability = pi;
                }
            }
            None => {
                let n = scenarios.len() as f64;
                for s in &mut scenarios {
                    s.probability = 1.0 / n;
                }
            }
        }
        if diags.is_empty() {
            Ok(ScenarioSet { horizon_hours, profile_keys, scenarios })
        } else {
            Err(diags)
        }
    }

    /// Writes the columnar format read by [`ScenarioSet::from_csv`].
    pub fn to_csv(&self) -> String {
        let mut s = FIXED_COLUMNS.join(",");
        for k in &self.profile_keys {
            s.push(',');
            s.push_str(k);
        }
        s.push('\n');
        for sc in &self.scenarios {
            for (t, iv) in sc.intervals.iter().enumerate() {
                let _ = write!(s, "{},{},{},{},{}", sc.id, t, iv.weight_hours, iv.d_fix, iv.d_flex);
                for a in &iv.availability {
                    let _ = write!(s, ",{a}");
                }
                s.push('\n');
            }
        }
        s
    }

    /// Probabilities in scenario order.
    pub fn probabilities(&self) -> Vec<f64> {
        self.scenarios.iter().map(|s| s.probability).collect()
    }
}
