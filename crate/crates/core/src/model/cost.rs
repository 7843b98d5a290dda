use super::UnitSpec;

/// Hourly fuel cost `a + b·p + c·p²`.
#[inline]
pub fn fuel_cost(unit: &UnitSpec, p: f64) -> f64 {
    unit.cost_a + unit.cost_b * p + unit.cost_c * p * p
}

#[inline]
pub fn marginal_cost(unit: &UnitSpec, p: f64) -> f64 {
    unit.cost_b + 2.0 * unit.cost_c * p
}

/// Cost of starting a unit that has been OFF for `down_hours`.
///
/// Hot while the outage is no longer than `min_down + cold_hours`, cold after.
pub fn startup_cost(unit: &UnitSpec, down_hours: u32) -> f64 {
    if down_hours <= unit.min_down + unit.cold_hours {
        unit.startup_hot
    } else {
        unit.startup_cold
    }
}

/// Upward spinning reserve an ON unit at `p` can deliver within the window.
/// Never negative, even for an out-of-range `p`.
#[inline]
pub fn reserve_up_capability(unit: &UnitSpec, p: f64, window_min: f64) -> f64 {
    (unit.p_max - p)
        .min(unit.reserve_window_capability(window_min))
        .max(0.0)
}

/// Downward spinning reserve an ON unit at `p` can deliver within the window.
#[inline]
pub fn reserve_down_capability(unit: &UnitSpec, p: f64, window_min: f64) -> f64 {
    (p - unit.p_min)
        .min(unit.reserve_window_capability(window_min))
        .max(0.0)
}
