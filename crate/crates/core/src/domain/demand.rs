use serde::{Deserialize, Serialize};

use super::DomainError;

/// Shifts `D^flex·(VOLL−PC)/VOLL` of the flexible block into the fixed block,
/// so that the linear segment now falls from PC to zero.
///
/// ```
/// use ldesmarket::domain::truncate_demand_for_price_cap;
/// let (fixed, flex) = truncate_demand_for_price_cap(100.0, 2.0, 20300.0, 7549.0).unwrap();
/// assert!((fixed - 101.256256).abs() < 1e-6);
/// assert!((flex - 0.743744).abs() < 1e-6);
/// ```
pub fn truncate_demand_for_price_cap(d_fix: f64, d_flex: f64, voll: f64, pc: f64) -> Result<(f64, f64), DomainError> {
    if !(voll > 0.0) {
        return Err(DomainError::PriceCap(format!("VOLL must be positive, found {voll}")));
    }
    if !(pc > 0.0 && pc <= voll) {
        return Err(DomainError::PriceCap(format!("price cap {pc} must lie in (0, VOLL = {voll}]")));
    }
    let cut = d_flex * (voll - pc) / voll;
    Ok((d_fix + cut, d_flex - cut))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DemandMode {
    /// Willingness to pay rises to VOLL.
    Uncapped,
    /// Willingness to pay capped at PC, demand truncated.
    Capped,
}

/// Effective energy demand function for one interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyDemandCurve {
    pub mode: DemandMode,
    pub wtp_ceiling: f64,
    pub fixed_width: f64,
    pub flexible_width: f64,
}

impl EnergyDemandCurve {
    pub fn new(mode: DemandMode, d_fix: f64, d_flex: f64, voll: f64, pc: f64) -> Result<Self, DomainError> {
        match mode {
            DemandMode::Uncapped => Ok(EnergyDemandCurve { mode, wtp_ceiling: voll, fixed_width: d_fix, flexible_width: d_flex }),
            DemandMode::Capped => {
                let (fixed_width, flexible_width) = truncate_demand_for_price_cap(d_fix, d_flex, voll, pc)?;
                Ok(EnergyDemandCurve { mode, wtp_ceiling: pc, fixed_width, flexible_width })
            }
        }
    }

    /// `∫_0^{d_fix + d_flex} f(x) dx` for a split consumption point.
    pub fn benefit(&self, d_fix: f64, d_flex: f64) -> f64 {
        let quad = if self.flexible_width > 0.0 { d_flex * d_flex / (2.0 * self.flexible_width) } else { 0.0 };
        self.wtp_ceiling * (d_fix + d_flex - quad)
    }
}

/// One downward-sloping piece of the capacity demand curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacitySegment {
    /// `D^{C-flex}_n` in MW.
    pub width: f64,
    /// `B^C_n` in $/MW-yr.
    pub start_price: f64,
    /// `B^C_{n+1}`.
    pub end_price: f64,
}

/// Willingness to pay for capacity: a flat block followed by linear pieces
/// ending at zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityDemandCurve {
    /// `B^C_1`.
    pub fixed_price: f64,
    /// `D^{C-fix}`.
    pub fixed_width: f64,
    pub segments: Vec<CapacitySegment>,
}

impl CapacityDemandCurve {
    pub fn total_width(&self) -> f64 {
        self.fixed_width + self.segments.iter().map(|s| s.width).sum::<f64>()
    }

    /// Price at quantity `x`; zero beyond the total width.
    pub fn price_at(&self, x: f64) -> f64 {
        if x <= self.fixed_width {
            return self.fixed_price;
        }
        let mut left = self.fixed_width;
        for s in &self.segments {
            if x <= left + s.width {
                return s.start_price - (s.start_price - s.end_price) * (x - left) / s.width;
            }
            left += s.width;
        }
        0.0
    }

    /// `∫_0^x f^C`.
    pub fn integral(&self, x: f64) -> f64 {
        let mut area = self.fixed_price * x.min(self.fixed_width).max(0.0);
        let mut left = self.fixed_width;
        for s in &self.segments {
            let y = (x - left).clamp(0.0, s.width);
            area += s.start_price * y - (s.start_price - s.end_price) * y * y / (2.0 * s.width);
            left += s.width;
        }
        area
    }

    /// `(quantity, price)` at the end of each piece, starting with the end of
    /// the flat block.
    pub fn breakpoints(&self) -> Vec<(f64, f64)> {
        let mut out = vec![(self.fixed_width, self.fixed_price)];
        let mut left = self.fixed_width;
        for s in &self.segments {
            left += s.width;
            out.push((left, s.end_price));
        }
        out
    }

    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.total_width() > 0.0) {
            out.push("capacity demand curve has no width".into());
        }
        if self.fixed_width < 0.0 || self.fixed_price < 0.0 {
            out.push("flat block must have nonnegative width and price".into());
        }
        let mut prev = self.fixed_price;
        for (n, s) in self.segments.iter().enumerate() {
            if !(s.width > 0.0) {
                out.push(format!("segment {n} width must be positive"));
            }
            if s.start_price > prev + 1e-9 || s.end_price > s.start_price {
                out.push(format!("prices increase at segment {n}"));
            }
            prev = s.end_price;
        }
        match self.segments.last() {
            Some(s) if s.end_price != 0.0 => out.push("last segment must end at price 0".into()),
            None if self.fixed_price != 0.0 && self.total_width() > 0.0 => {
                out.push("curve without sloped segments never reaches price 0".into())
            }
            _ => {}
        }
        out
    }
}
