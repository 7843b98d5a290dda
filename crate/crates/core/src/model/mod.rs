//! Problem data for day-ahead unit commitment.
//!
//! A [`UCInstance`] bundles the generating units, the hourly demand and the
//! reserve policy. Schedules are a [`CommitmentMatrix`] (ON/OFF per unit-hour)
//! plus a [`DispatchMatrix`] (MW per unit-hour); [`evaluate`] prices a schedule
//! and lists every constraint it breaks.

mod check;
mod cost;
mod validate;

pub use check::{evaluate, ConstraintKind, CostBreakdown, Violation, ViolationReport};
pub use cost::{
    fuel_cost, marginal_cost, reserve_down_capability, reserve_up_capability, startup_cost,
};
pub use validate::{validate_instance, Diagnostic, Severity};

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// Magnitude below which a constraint breach is treated as numerical noise (MW).
pub const VIOLATION_TOL: f64 = 1e-6;

/// One generator's economic and technical data.
///
/// Power quantities are in MW (or kW for distribution-scale instances; the
/// model is unit-agnostic as long as an instance is self-consistent).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitSpec {
    pub id: String,
    /// Constant term of the fuel polynomial, money/h.
    pub cost_a: f64,
    /// Linear term, money/MWh.
    pub cost_b: f64,
    /// Quadratic term, money/MW²h.
    pub cost_c: f64,
    pub p_min: f64,
    pub p_max: f64,
    /// MW/h.
    pub ramp_up: f64,
    /// MW/h.
    pub ramp_down: f64,
    /// MW/min, used for spinning-reserve capability.
    pub ramp_per_min: f64,
    pub min_up: u32,
    pub min_down: u32,
    pub cold_hours: u32,
    pub startup_hot: f64,
    pub startup_cold: f64,
    #[serde(default)]
    pub shutdown_cost: f64,
    /// Hours the unit has been in its pre-horizon state: positive = ON,
    /// negative = OFF. Never zero.
    pub initial_state: i32,
    /// Output in the hour before the horizon (0 when initially OFF).
    #[serde(default)]
    pub initial_power: f64,
}

impl UnitSpec {
    pub fn initially_on(&self) -> bool {
        self.initial_state > 0
    }

    /// Reserve deliverable within `window_min` minutes, ignoring headroom.
    pub fn reserve_window_capability(&self, window_min: f64) -> f64 {
        window_min * self.ramp_per_min
    }

    /// Hours at the start of the horizon whose status is pinned by the
    /// pre-horizon run: `(hours, on)`.
    pub fn pinned_prefix(&self) -> (usize, bool) {
        if self.initial_state > 0 {
            let rem = i64::from(self.min_up) - i64::from(self.initial_state);
            (rem.max(0) as usize, true)
        } else {
            let rem = i64::from(self.min_down) + i64::from(self.initial_state);
            (rem.max(0) as usize, false)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum BalanceMode {
    /// Generation must cover demand; surplus is allowed.
    #[default]
    AtLeast,
    /// Generation must match demand within [`VIOLATION_TOL`].
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReservePolicy {
    /// Spinning reserve up, as a fraction of hourly demand.
    #[serde(default)]
    pub up_fraction: f64,
    /// Spinning reserve down, as a fraction of hourly demand.
    #[serde(default)]
    pub down_fraction: f64,
    /// Delivery window for reserve, minutes.
    #[serde(default = "default_window")]
    pub window_min: f64,
}

fn default_window() -> f64 {
    10.0
}

fn default_penalty() -> f64 {
    1e5
}

impl Default for ReservePolicy {
    fn default() -> Self {
        Self {
            up_fraction: 0.0,
            down_fraction: 0.0,
            window_min: default_window(),
        }
    }
}

/// A complete unit-commitment problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UCInstance {
    pub units: Vec<UnitSpec>,
    /// Demand per hour; its length is the horizon.
    pub demand: Vec<f64>,
    #[serde(default)]
    pub reserve: ReservePolicy,
    /// Money per unit of violation magnitude (MW·h, or hours for run lengths).
    #[serde(default = "default_penalty")]
    pub penalty_weight: f64,
    #[serde(default)]
    pub balance_mode: BalanceMode,
    /// Reserved for bus/line data. Carried through untouched; no solver
    /// reads it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub network: Option<serde_json::Value>,
}

impl UCInstance {
    pub fn n_units(&self) -> usize {
        self.units.len()
    }

    pub fn n_hours(&self) -> usize {
        self.demand.len()
    }

    pub fn reserve_up_requirement(&self, hour: usize) -> f64 {
        self.reserve.up_fraction * self.demand[hour]
    }

    pub fn reserve_down_requirement(&self, hour: usize) -> f64 {
        self.reserve.down_fraction * self.demand[hour]
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| {
            ModelError::InvalidInstance(format!("cannot read {}: {e}", path.display()))
        })?;
        Self::from_json(&text)
    }

    pub(crate) fn check_dims(
        &self,
        what: &'static str,
        units: usize,
        hours: usize,
    ) -> Result<(), ModelError> {
        if units != self.n_units() || hours != self.n_hours() {
            return Err(ModelError::Dimension {
                what,
                units: self.n_units(),
                hours: self.n_hours(),
                found_units: units,
                found_hours: hours,
            });
        }
        Ok(())
    }
}

/// ON/OFF status per unit and hour, stored unit-major (`i * hours + t`).
///
/// The flattened bit order is also the genome layout used by the
/// optimizers and the enumeration order of the oracle.
///
/// Serialized as a list of 0/1 rows, one per unit.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "Vec<Vec<u8>>", try_from = "Vec<Vec<u8>>")]
pub struct CommitmentMatrix {
    units: usize,
    hours: usize,
    bits: Vec<bool>,
}

impl From<CommitmentMatrix> for Vec<Vec<u8>> {
    fn from(m: CommitmentMatrix) -> Self {
        m.rows()
    }
}

impl TryFrom<Vec<Vec<u8>>> for CommitmentMatrix {
    type Error = String;

    fn try_from(rows: Vec<Vec<u8>>) -> Result<Self, String> {
        if rows.iter().flatten().any(|&b| b > 1) {
            return Err("commitment entries must be 0 or 1".into());
        }
        let hours = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != hours) {
            return Err("ragged commitment rows".into());
        }
        Ok(CommitmentMatrix::from_rows(&rows))
    }
}

impl CommitmentMatrix {
    pub fn new(units: usize, hours: usize) -> Self {
        Self {
            units,
            hours,
            bits: vec![false; units * hours],
        }
    }

    pub fn from_bits(units: usize, hours: usize, bits: Vec<bool>) -> Self {
        assert_eq!(
            bits.len(),
            units * hours,
            "bit count must equal units*hours"
        );
        Self { units, hours, bits }
    }

    /// Builds from per-unit rows of 0/1 values.
    pub fn from_rows<R: AsRef<[u8]>>(rows: &[R]) -> Self {
        let units = rows.len();
        let hours = rows.first().map_or(0, |r| r.as_ref().len());
        let mut bits = Vec::with_capacity(units * hours);
        for row in rows {
            let row = row.as_ref();
            assert_eq!(row.len(), hours, "ragged commitment rows");
            bits.extend(row.iter().map(|&b| b != 0));
        }
        Self { units, hours, bits }
    }

    /// Bit `k` of `mask` sets flattened position `k`.
    pub fn from_mask(units: usize, hours: usize, mask: u64) -> Self {
        let bits = (0..units * hours)
            .map(|k| mask.checked_shr(k as u32).is_some_and(|m| m & 1 == 1))
            .collect();
        Self { units, hours, bits }
    }

    pub fn filled(units: usize, hours: usize, on: bool) -> Self {
        Self {
            units,
            hours,
            bits: vec![on; units * hours],
        }
    }

    pub fn n_units(&self) -> usize {
        self.units
    }

    pub fn n_hours(&self) -> usize {
        self.hours
    }

    #[inline]
    pub fn get(&self, unit: usize, hour: usize) -> bool {
        self.bits[unit * self.hours + hour]
    }

    #[inline]
    pub fn set(&mut self, unit: usize, hour: usize, on: bool) {
        self.bits[unit * self.hours + hour] = on;
    }

    pub fn row(&self, unit: usize) -> &[bool] {
        &self.bits[unit * self.hours..(unit + 1) * self.hours]
    }

    pub fn row_mut(&mut self, unit: usize) -> &mut [bool] {
        &mut self.bits[unit * self.hours..(unit + 1) * self.hours]
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn bits_mut(&mut self) -> &mut [bool] {
        &mut self.bits
    }

    pub fn count_on(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Packed form used as a hash key.
    pub fn packed(&self) -> Vec<u64> {
        let mut words = vec![0u64; self.bits.len().div_ceil(64)];
        for (k, &b) in self.bits.iter().enumerate() {
            if b {
                words[k / 64] |= 1 << (k % 64);
            }
        }
        words
    }

    pub fn rows(&self) -> Vec<Vec<u8>> {
        (0..self.units)
            .map(|i| self.row(i).iter().map(|&b| u8::from(b)).collect())
            .collect()
    }
}

impl fmt::Debug for CommitmentMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CommitmentMatrix {}x{}", self.units, self.hours)?;
        for i in 0..self.units {
            let row: String = self
                .row(i)
                .iter()
                .map(|&b| if b { '1' } else { '0' })
                .collect();
            writeln!(f, "  {row}")?;
        }
        Ok(())
    }
}

/// Power per unit-hour plus the per-hour balance and reserve residuals the
/// dispatcher could not close.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispatchMatrix {
    /// `power[unit][hour]`, MW.
    pub power: Vec<Vec<f64>>,
    pub shortfall: Vec<f64>,
    pub overgeneration: Vec<f64>,
    pub reserve_up_short: Vec<f64>,
    pub reserve_down_short: Vec<f64>,
}

impl DispatchMatrix {
    pub fn zeros(units: usize, hours: usize) -> Self {
        Self {
            power: vec![vec![0.0; hours]; units],
            shortfall: vec![0.0; hours],
            overgeneration: vec![0.0; hours],
            reserve_up_short: vec![0.0; hours],
            reserve_down_short: vec![0.0; hours],
        }
    }

    pub fn n_units(&self) -> usize {
        self.power.len()
    }

    pub fn n_hours(&self) -> usize {
        self.shortfall.len()
    }

    pub fn hour_total(&self, hour: usize) -> f64 {
        self.power.iter().map(|row| row[hour]).sum()
    }
}
