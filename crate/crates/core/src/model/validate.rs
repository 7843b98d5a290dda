use std::fmt;

use serde::Serialize;

use super::{UCInstance, UnitSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
}

impl Diagnostic {
    fn error(message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Error,
            message: message.into(),
        }
    }

    fn warning(message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Warning,
            message: message.into(),
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{tag}: {}", self.message)
    }
}

fn check_unit(unit: &UnitSpec, out: &mut Vec<Diagnostic>) {
    let id = &unit.id;
    let mut err = |msg: String| out.push(Diagnostic::error(format!("unit {id}: {msg}")));

    let numbers = [
        ("cost_a", unit.cost_a),
        ("cost_b", unit.cost_b),
        ("cost_c", unit.cost_c),
        ("p_min", unit.p_min),
        ("p_max", unit.p_max),
        ("ramp_up", unit.ramp_up),
        ("ramp_down", unit.ramp_down),
        ("ramp_per_min", unit.ramp_per_min),
        ("startup_hot", unit.startup_hot),
        ("startup_cold", unit.startup_cold),
        ("shutdown_cost", unit.shutdown_cost),
        ("initial_power", unit.initial_power),
    ];
    for (name, v) in numbers {
        if !v.is_finite() {
            err(format!("{name} is not finite"));
        }
    }
    if unit.cost_c < 0.0 {
        err(format!(
            "cost_c = {} must be >= 0 (convex cost)",
            unit.cost_c
        ));
    }
    if unit.p_min < 0.0 {
        err(format!("p_min = {} must be >= 0", unit.p_min));
    }
    if unit.p_min > unit.p_max {
        err(format!(
            "p_min = {} exceeds p_max = {}",
            unit.p_min, unit.p_max
        ));
    }
    for (name, v) in [
        ("ramp_up", unit.ramp_up),
        ("ramp_down", unit.ramp_down),
        ("ramp_per_min", unit.ramp_per_min),
    ] {
        if v < 0.0 {
            err(format!("{name} = {v} must be >= 0"));
        }
    }
    if unit.min_up < 1 {
        err("min_up must be >= 1".into());
    }
    if unit.min_down < 1 {
        err("min_down must be >= 1".into());
    }
    if unit.startup_hot < 0.0 {
        err(format!("startup_hot = {} must be >= 0", unit.startup_hot));
    }
    if unit.startup_cold < unit.startup_hot {
        err(format!(
            "startup_cold = {} is below startup_hot = {}",
            unit.startup_cold, unit.startup_hot
        ));
    }
    if unit.shutdown_cost < 0.0 {
        err(format!(
            "shutdown_cost = {} must be >= 0",
            unit.shutdown_cost
        ));
    }
    if unit.initial_state == 0 {
        err("initial_state must be non-zero".into());
    } else if unit.initial_state > 0 {
        if unit.initial_power < unit.p_min || unit.initial_power > unit.p_max {
            err(format!(
                "initial_power = {} outside [{}, {}] for an initially ON unit",
                unit.initial_power, unit.p_min, unit.p_max
            ));
        }
    } else if unit.initial_power != 0.0 {
        err(format!(
            "initial_power = {} must be 0 for an initially OFF unit",
            unit.initial_power
        ));
    }
}

/// Lists every invariant the instance breaks. Errors make the instance
/// unusable; warnings flag hours that no commitment can serve.
pub fn validate_instance(instance: &UCInstance) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    if instance.units.is_empty() {
        out.push(Diagnostic::error("instance has no units"));
    }
    if instance.demand.is_empty() {
        out.push(Diagnostic::error("demand horizon is empty"));
    }
    let mut seen = std::collections::HashSet::new();
    for unit in &instance.units {
        if !seen.insert(unit.id.as_str()) {
            out.push(Diagnostic::error(format!("duplicate unit id {}", unit.id)));
        }
        check_unit(unit, &mut out);
    }
    for (t, &d) in instance.demand.iter().enumerate() {
        if !(d.is_finite() && d >= 0.0) {
            out.push(Diagnostic::error(format!(
                "demand at hour {} is {d}",
                t + 1
            )));
        }
    }
    let r = &instance.reserve;
    for (name, v) in [
        ("up_fraction", r.up_fraction),
        ("down_fraction", r.down_fraction),
    ] {
        if !(0.0..=1.0).contains(&v) {
            out.push(Diagnostic::error(format!(
                "reserve {name} = {v} outside [0, 1]"
            )));
        }
    }
    if !(r.window_min.is_finite() && r.window_min >= 0.0) {
        out.push(Diagnostic::error(format!(
            "reserve window_min = {} must be >= 0",
            r.window_min
        )));
    }
    if !(instance.penalty_weight.is_finite() && instance.penalty_weight >= 0.0) {
        out.push(Diagnostic::error(format!(
            "penalty_weight = {} must be >= 0",
            instance.penalty_weight
        )));
    }

    let capacity: f64 = instance.units.iter().map(|u| u.p_max).sum();
    for (t, &d) in instance.demand.iter().enumerate() {
        if d > capacity {
            out.push(Diagnostic::warning(format!(
                "demand {d} at hour {} exceeds total capacity {capacity}",
                t + 1
            )));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances;

    #[test]
    fn shipped_instances_are_clean() {
        assert!(validate_instance(&instances::case1()).is_empty());
        assert!(validate_instance(&instances::case2()).is_empty());
    }

    #[test]
    fn inverted_limits_is_one_error() {
        let mut inst = instances::case2();
        inst.units[3].p_min = 200.0;
        let d = validate_instance(&inst);
        assert_eq!(d.len(), 1);
        assert!(d[0].is_error());
    }

    #[test]
    fn capacity_short_hour_is_one_warning() {
        let mut inst = instances::case2();
        inst.demand[5] = 5000.0;
        let d = validate_instance(&inst);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].severity, Severity::Warning);
    }

    #[test]
    fn bad_initial_state() {
        let mut inst = instances::case1();
        inst.units[0].initial_state = 0;
        assert_eq!(validate_instance(&inst).len(), 1);
    }
}
