use serde::{Deserialize, Serialize};

use super::{
    fuel_cost, reserve_down_capability, reserve_up_capability, startup_cost, BalanceMode,
    CommitmentMatrix, DispatchMatrix, UCInstance, VIOLATION_TOL,
};
use crate::error::ModelError;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub fuel: f64,
    pub startup: f64,
    pub shutdown: f64,
    pub penalty: f64,
    pub total: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintKind {
    Balance,
    Capacity,
    Ramp,
    MinUpDown,
    ReserveUp,
    ReserveDown,
}

impl ConstraintKind {
    pub const ALL: [ConstraintKind; 6] = [
        ConstraintKind::Balance,
        ConstraintKind::Capacity,
        ConstraintKind::Ramp,
        ConstraintKind::MinUpDown,
        ConstraintKind::ReserveUp,
        ConstraintKind::ReserveDown,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ConstraintKind::Balance => "balance",
            ConstraintKind::Capacity => "capacity",
            ConstraintKind::Ramp => "ramp",
            ConstraintKind::MinUpDown => "min_up_down",
            ConstraintKind::ReserveUp => "reserve_up",
            ConstraintKind::ReserveDown => "reserve_down",
        }
    }
}

/// A single breach. `unit` is `None` for system-wide constraints. Hours are
/// zero-based; MinUpDown magnitudes are in hours, all others in MW.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub unit: Option<usize>,
    pub hour: usize,
    pub magnitude: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ViolationReport {
    pub balance: Vec<Violation>,
    pub capacity: Vec<Violation>,
    pub ramp: Vec<Violation>,
    pub min_up_down: Vec<Violation>,
    pub reserve_up: Vec<Violation>,
    pub reserve_down: Vec<Violation>,
}

impl ViolationReport {
    pub fn is_feasible(&self) -> bool {
        ConstraintKind::ALL.iter().all(|&k| self.list(k).is_empty())
    }

    pub fn list(&self, kind: ConstraintKind) -> &[Violation] {
        match kind {
            ConstraintKind::Balance => &self.balance,
            ConstraintKind::Capacity => &self.capacity,
            ConstraintKind::Ramp => &self.ramp,
            ConstraintKind::MinUpDown => &self.min_up_down,
            ConstraintKind::ReserveUp => &self.reserve_up,
            ConstraintKind::ReserveDown => &self.reserve_down,
        }
    }

    fn push(&mut self, kind: ConstraintKind, unit: Option<usize>, hour: usize, magnitude: f64) {
        if magnitude <= VIOLATION_TOL {
            return;
        }
        let v = Violation {
            unit,
            hour,
            magnitude,
        };
        match kind {
            ConstraintKind::Balance => self.balance.push(v),
            ConstraintKind::Capacity => self.capacity.push(v),
            ConstraintKind::Ramp => self.ramp.push(v),
            ConstraintKind::MinUpDown => self.min_up_down.push(v),
            ConstraintKind::ReserveUp => self.reserve_up.push(v),
            ConstraintKind::ReserveDown => self.reserve_down.push(v),
        }
    }

    pub fn total_magnitude(&self) -> f64 {
        ConstraintKind::ALL
            .iter()
            .flat_map(|&k| self.list(k))
            .fold(0.0, |acc, v| acc + v.magnitude)
    }

    pub fn count(&self) -> usize {
        ConstraintKind::ALL
            .iter()
            .map(|&k| self.list(k).len())
            .sum()
    }
}

/// Prices a schedule and checks it against every modelled constraint.
///
/// Fuel is charged on committed unit-hours only. Start-ups are charged on
/// each OFF→ON transition (the OFF run is seeded by `initial_state`),
/// shut-downs on each ON→OFF transition. Ramp limits bind only between two
/// consecutive ON hours; hour 0 is compared with `initial_power` when the
/// unit starts the horizon ON. Run lengths that end inside the horizon are
/// checked against min up/down; the final run is open-ended and never
/// flagged.
pub fn evaluate(
    instance: &UCInstance,
    commitment: &CommitmentMatrix,
    dispatch: &DispatchMatrix,
) -> Result<(CostBreakdown, ViolationReport), ModelError> {
    instance.check_dims("commitment", commitment.n_units(), commitment.n_hours())?;
    instance.check_dims("dispatch", dispatch.n_units(), dispatch.n_hours())?;
    if dispatch
        .power
        .iter()
        .any(|row| row.len() != instance.n_hours())
    {
        return Err(ModelError::InvalidInstance(
            "dispatch power rows do not match the horizon".into(),
        ));
    }

    let hours = instance.n_hours();
    let window = instance.reserve.window_min;
    let mut cost = CostBreakdown::default();
    let mut report = ViolationReport::default();

    for (i, unit) in instance.units.iter().enumerate() {
        let power = &dispatch.power[i];
        let mut prev_on = unit.initially_on();
        let mut prev_power = if prev_on { unit.initial_power } else { 0.0 };
        let mut run_len = unit.initial_state.unsigned_abs();
        let mut run_start = 0usize;

        for (t, &p) in power.iter().enumerate().take(hours) {
            let on = commitment.get(i, t);

            if on {
                cost.fuel += fuel_cost(unit, p);
                let below = unit.p_min - p;
                let above = p - unit.p_max;
                report.push(ConstraintKind::Capacity, Some(i), t, below.max(above));
                if prev_on {
                    report.push(
                        ConstraintKind::Ramp,
                        Some(i),
                        t,
                        p - prev_power - unit.ramp_up,
                    );
                    report.push(
                        ConstraintKind::Ramp,
                        Some(i),
                        t,
                        prev_power - p - unit.ramp_down,
                    );
                }
            } else {
                report.push(ConstraintKind::Capacity, Some(i), t, p.abs());
            }

            if on == prev_on {
                run_len += 1;
            } else {
                let required = if prev_on { unit.min_up } else { unit.min_down };
                if run_len < required {
                    report.push(
                        ConstraintKind::MinUpDown,
                        Some(i),
                        run_start,
                        f64::from(required - run_len),
                    );
                }
                if on {
                    cost.startup += startup_cost(unit, run_len);
                } else {
                    cost.shutdown += unit.shutdown_cost;
                }
                run_len = 1;
                run_start = t;
            }
            prev_on = on;
            prev_power = if on { p } else { 0.0 };
        }
    }

    for t in 0..hours {
        let demand = instance.demand[t];
        let supplied = dispatch.hour_total(t);
        let imbalance = match instance.balance_mode {
            BalanceMode::AtLeast => demand - supplied,
            BalanceMode::Exact => (demand - supplied).abs(),
        };
        report.push(ConstraintKind::Balance, None, t, imbalance);

        let mut up = 0.0;
        let mut down = 0.0;
        for (i, unit) in instance.units.iter().enumerate() {
            if commitment.get(i, t) {
                let p = dispatch.power[i][t];
                up += reserve_up_capability(unit, p, window);
                down += reserve_down_capability(unit, p, window);
            }
        }
        report.push(
            ConstraintKind::ReserveUp,
            None,
            t,
            instance.reserve_up_requirement(t) - up,
        );
        report.push(
            ConstraintKind::ReserveDown,
            None,
            t,
            instance.reserve_down_requirement(t) - down,
        );
    }

    cost.penalty = instance.penalty_weight * report.total_magnitude();
    cost.total = cost.fuel + cost.startup + cost.shutdown + cost.penalty;
    Ok((cost, report))
}
