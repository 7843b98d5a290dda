//! Economic dispatch for a fixed commitment.
//!
//! Each hour is solved by equal-marginal-cost water-filling. A unit's output
//! as a function of the system price λ is piecewise affine, with kinks where
//! it hits its bounds (quadratic cost) or a jump at λ = b (linear cost). The
//! solver collects these breakpoints, brackets the target demand between two
//! of them and interpolates, which gives the exact equal-λ allocation without
//! iterating on λ. Linear units that tie on price are filled in instance
//! order.
//!
//! [`dispatch_schedule`] runs hours forward, deriving each hour's bounds
//! from the previous allocation through the ramp limits. When the plain
//! allocation leaves too little spinning reserve it re-dispatches with the
//! reserve requirement as a side constraint (see [`dispatch_hour_with_reserve`]).

use serde::{Deserialize, Serialize};

use crate::error::{DispatchError, ModelError};
use crate::model::{
    reserve_down_capability, reserve_up_capability, BalanceMode, CommitmentMatrix, DispatchMatrix,
    UCInstance, UnitSpec,
};

/// Reserve residuals below this are considered met.
const RESERVE_TOL: f64 = 1e-9;

/// Feasible output range for an ON unit in one hour.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HourBounds {
    pub lo: f64,
    pub hi: f64,
}

impl HourBounds {
    pub fn full(unit: &UnitSpec) -> Self {
        Self {
            lo: unit.p_min,
            hi: unit.p_max,
        }
    }
}

/// Output limits for an ON unit given its previous-hour state.
///
/// Ramp limits only apply when the unit was also ON in the previous hour; a
/// unit that is starting may take any value in `[p_min, p_max]`.
pub fn ramp_bounds(
    unit: &UnitSpec,
    prev_on: bool,
    prev_power: f64,
) -> Result<HourBounds, DispatchError> {
    let (lo, hi) = if prev_on {
        (
            unit.p_min.max(prev_power - unit.ramp_down),
            unit.p_max.min(prev_power + unit.ramp_up),
        )
    } else {
        (unit.p_min, unit.p_max)
    };
    if lo > hi {
        return Err(DispatchError::EmptyRange {
            unit: unit.id.clone(),
            lo,
            hi,
        });
    }
    Ok(HourBounds { lo, hi })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HourDispatch {
    pub allocation: Vec<f64>,
    /// Demand left unserved because every unit is at its upper bound.
    pub shortfall: f64,
    /// Surplus forced by lower bounds exceeding demand.
    pub overgeneration: f64,
}

/// Spinning-reserve requirement for one hour.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ReserveTarget {
    pub up: f64,
    pub down: f64,
    pub window_min: f64,
}

/// One segment of a unit's marginal-cost curve, `b + 2c·p` on `[lo, hi]`.
#[derive(Debug, Clone, Copy)]
struct Curve {
    b: f64,
    c: f64,
    lo: f64,
    hi: f64,
}

impl Curve {
    fn new(unit: &UnitSpec, lo: f64, hi: f64) -> Self {
        Self {
            b: unit.cost_b,
            c: unit.cost_c,
            lo,
            hi,
        }
    }

    /// Output at price `lam`; `right` selects the upper limit at a jump.
    #[inline]
    fn at(&self, lam: f64, right: bool) -> f64 {
        if self.c > 0.0 {
            // Compare against the breakpoint prices themselves so that the
            // curve hits its bounds exactly at them.
            if lam >= self.b + 2.0 * self.c * self.hi {
                self.hi
            } else if lam <= self.b + 2.0 * self.c * self.lo {
                self.lo
            } else {
                ((lam - self.b) / (2.0 * self.c)).clamp(self.lo, self.hi)
            }
        } else if lam < self.b || (lam == self.b && !right) {
            self.lo
        } else {
            self.hi
        }
    }
}

fn supply(curves: &[Curve], lam: f64, right: bool) -> f64 {
    curves.iter().map(|c| c.at(lam, right)).sum()
}

/// Fills `out` with the least-cost allocation of `target` over `curves`.
/// Returns `target - Σ out` (positive: shortfall, negative: surplus).
fn waterfill(curves: &[Curve], target: f64, out: &mut [f64]) -> f64 {
    debug_assert_eq!(curves.len(), out.len());
    let total_lo: f64 = curves.iter().map(|c| c.lo).sum();
    let total_hi: f64 = curves.iter().map(|c| c.hi).sum();
    if target <= total_lo {
        for (o, c) in out.iter_mut().zip(curves) {
            *o = c.lo;
        }
        return target - total_lo;
    }
    if target >= total_hi {
        for (o, c) in out.iter_mut().zip(curves) {
            *o = c.hi;
        }
        return target - total_hi;
    }

    let mut prices: Vec<f64> = Vec::with_capacity(2 * curves.len());
    for c in curves {
        if c.c > 0.0 {
            prices.push(c.b + 2.0 * c.c * c.lo);
            prices.push(c.b + 2.0 * c.c * c.hi);
        } else {
            prices.push(c.b);
        }
    }
    prices.sort_by(f64::total_cmp);
    prices.dedup();

    // First breakpoint whose right-limit supply reaches the target. The last
    // breakpoint supplies total_hi > target, so one exists.
    let k = prices
        .partition_point(|&lam| supply(curves, lam, true) < target)
        .min(prices.len() - 1);
    let lam_k = prices[k];
    let left_k = supply(curves, lam_k, false);

    if left_k <= target {
        // Target sits inside the jump at lam_k: ties share it in order.
        let mut gap = target - left_k;
        for (o, c) in out.iter_mut().zip(curves) {
            let lo = c.at(lam_k, false);
            let take = (c.at(lam_k, true) - lo).min(gap).max(0.0);
            *o = lo + take;
            gap -= take;
        }
    } else if k == 0 {
        // Only reachable through round-off: the first breakpoint's left
        // limit is Σ lo < target.
        for (o, c) in out.iter_mut().zip(curves) {
            *o = c.lo;
        }
    } else {
        // Strictly between two breakpoints every output is affine in λ.
        let lam_prev = prices[k - 1];
        let a = supply(curves, lam_prev, true);
        let frac = (target - a) / (left_k - a);
        for (o, c) in out.iter_mut().zip(curves) {
            let from = c.at(lam_prev, true);
            let to = c.at(lam_k, false);
            *o = from + frac * (to - from);
        }
    }
    target - out.iter().sum::<f64>()
}

fn finish(allocation: Vec<f64>, demand: f64) -> HourDispatch {
    let total: f64 = allocation.iter().sum();
    // Summation round-off is not a real gap.
    let mut gap = demand - total;
    if gap.abs() <= 1e-9 * (1.0 + demand.abs()) {
        gap = 0.0;
    }
    HourDispatch {
        allocation,
        shortfall: gap.max(0.0),
        overgeneration: (-gap).max(0.0),
    }
}

/// Least-fuel-cost allocation of `demand` over the ON units.
///
/// When demand is outside `[Σ lo, Σ hi]` every unit sits at the violated
/// side's bound and the gap is reported as shortfall or overgeneration.
pub fn dispatch_hour(on_units: &[(&UnitSpec, HourBounds)], demand: f64) -> HourDispatch {
    let curves: Vec<Curve> = on_units
        .iter()
        .map(|(u, b)| Curve::new(u, b.lo, b.hi))
        .collect();
    let mut alloc = vec![0.0; curves.len()];
    waterfill(&curves, demand, &mut alloc);
    finish(alloc, demand)
}

fn reserve_up(on_units: &[(&UnitSpec, HourBounds)], alloc: &[f64], window: f64) -> f64 {
    on_units
        .iter()
        .zip(alloc)
        .map(|((u, _), &p)| reserve_up_capability(u, p, window))
        .sum()
}

fn reserve_down(on_units: &[(&UnitSpec, HourBounds)], alloc: &[f64], window: f64) -> f64 {
    on_units
        .iter()
        .zip(alloc)
        .map(|((u, _), &p)| reserve_down_capability(u, p, window))
        .sum()
}

/// Up-reserve of a unit is `c − max(0, p − k)` with knee `k = p_max − c`.
/// Splitting each range at its knee gives a "below" and an "above" curve;
/// the above-knee energy is what consumes reserve. With the reserve
/// constraint binding, the above-knee total is pinned and both halves are
/// water-filled separately (each at its own price).
fn redispatch_for_up(
    on_units: &[(&UnitSpec, HourBounds)],
    demand: f64,
    required: f64,
    window: f64,
) -> Vec<f64> {
    let n = on_units.len();
    let mut below = Vec::with_capacity(n);
    let mut above = Vec::with_capacity(n);
    let mut knees = Vec::with_capacity(n);
    let mut budget = -required;
    for (u, b) in on_units {
        let cap = u.reserve_window_capability(window);
        let knee = u.p_max - cap;
        let kc = knee.clamp(b.lo, b.hi);
        budget += cap - (b.lo - knee).max(0.0);
        below.push(Curve::new(u, b.lo, kc));
        above.push(Curve::new(u, kc, b.hi));
        knees.push(kc);
    }
    let sum_lo: f64 = on_units.iter().map(|(_, b)| b.lo).sum();
    let sum_knee: f64 = knees.iter().sum();
    let sum_hi: f64 = on_units.iter().map(|(_, b)| b.hi).sum();

    // Energy placed above the knees.
    let excess = budget
        .max(demand - sum_knee)
        .min(demand - sum_lo)
        .clamp(0.0, sum_hi - sum_knee);

    let mut top = vec![0.0; n];
    waterfill(&above, sum_knee + excess, &mut top);
    let placed: f64 = top.iter().zip(&knees).map(|(p, k)| p - k).sum();
    let mut bottom = vec![0.0; n];
    waterfill(&below, demand - placed, &mut bottom);
    bottom
        .iter()
        .zip(&top)
        .zip(&knees)
        .map(|((x, y), k)| x + y - k)
        .collect()
}

/// Mirror of [`redispatch_for_up`]: down-reserve is `c − max(0, k − p)`
/// with knee `k = p_min + c`, so the energy below the knees is what is kept
/// from falling short.
fn redispatch_for_down(
    on_units: &[(&UnitSpec, HourBounds)],
    demand: f64,
    required: f64,
    window: f64,
) -> Vec<f64> {
    let n = on_units.len();
    let mut below = Vec::with_capacity(n);
    let mut above = Vec::with_capacity(n);
    let mut knees = Vec::with_capacity(n);
    let mut budget = -required;
    for (u, b) in on_units {
        let cap = u.reserve_window_capability(window);
        let knee = u.p_min + cap;
        let kc = knee.clamp(b.lo, b.hi);
        budget += cap - (knee - b.hi).max(0.0);
        below.push(Curve::new(u, b.lo, kc));
        above.push(Curve::new(u, kc, b.hi));
        knees.push(kc);
    }
    let sum_lo: f64 = on_units.iter().map(|(_, b)| b.lo).sum();
    let sum_knee: f64 = knees.iter().sum();

    // Allowed gap between the knees and the below-knee energy.
    let deficit = budget.max(sum_knee - demand).clamp(0.0, sum_knee - sum_lo);

    let mut bottom = vec![0.0; n];
    waterfill(&below, sum_knee - deficit, &mut bottom);
    let placed: f64 = bottom.iter().sum();
    let mut top = vec![0.0; n];
    waterfill(&above, demand - placed + sum_knee, &mut top);
    bottom
        .iter()
        .zip(&top)
        .zip(&knees)
        .map(|((x, y), k)| x + y - k)
        .collect()
}

/// Least-cost allocation that also keeps the hour's spinning reserve at or
/// above `target`, when the bounds allow it.
///
/// Balance takes precedence over reserve, and up-reserve over down-reserve:
/// if both cannot be met the allocation maximises the reserve that can be.
/// Without a binding reserve requirement the result equals [`dispatch_hour`].
pub fn dispatch_hour_with_reserve(
    on_units: &[(&UnitSpec, HourBounds)],
    demand: f64,
    target: ReserveTarget,
) -> HourDispatch {
    let plain = dispatch_hour(on_units, demand);
    if plain.shortfall > 0.0 || plain.overgeneration > 0.0 {
        return plain;
    }
    let window = target.window_min;
    let mut alloc = plain.allocation;
    if reserve_up(on_units, &alloc, window) < target.up - RESERVE_TOL {
        alloc = redispatch_for_up(on_units, demand, target.up, window);
    } else if reserve_down(on_units, &alloc, window) < target.down - RESERVE_TOL {
        alloc = redispatch_for_down(on_units, demand, target.down, window);
    }
    finish(alloc, demand)
}

/// Dispatches every hour of a commitment in time order.
///
/// Each hour is solved by [`dispatch_hour_with_reserve`] within the ramp
/// window left by the previous hour. A purely forward pass can strand a unit
/// low (or high) ahead of an hour that needs it elsewhere, so when the
/// forward pass leaves a balance or reserve residual that ramping caused,
/// the earlier hours get per-unit floors (or ceilings) that keep the needed
/// output reachable, and the pass is repeated. The attempt with the smallest
/// total residual is returned.
pub fn dispatch_schedule(
    instance: &UCInstance,
    commitment: &CommitmentMatrix,
) -> Result<DispatchMatrix, ModelError> {
    instance.check_dims("commitment", commitment.n_units(), commitment.n_hours())?;
    let n = instance.n_units();
    let hours = instance.n_hours();
    let mut limits = Limits {
        floor: vec![vec![f64::NEG_INFINITY; hours]; n],
        ceil: vec![vec![f64::INFINITY; hours]; n],
    };
    let mut best = forward_pass(instance, commitment, &limits);
    let mut best_residual = residual(instance, &best);
    for _ in 0..LOOKAHEAD_ROUNDS {
        if best_residual == 0.0 || !tighten(instance, commitment, &best, &mut limits) {
            break;
        }
        let next = forward_pass(instance, commitment, &limits);
        let r = residual(instance, &next);
        if r < best_residual - RESERVE_TOL {
            best = next;
            best_residual = r;
        } else {
            break;
        }
    }
    Ok(best)
}

const LOOKAHEAD_ROUNDS: usize = 8;

/// Extra per-unit output bounds imposed by the lookahead.
struct Limits {
    floor: Vec<Vec<f64>>,
    ceil: Vec<Vec<f64>>,
}

fn residual(instance: &UCInstance, d: &DispatchMatrix) -> f64 {
    let over = match instance.balance_mode {
        BalanceMode::AtLeast => 0.0,
        BalanceMode::Exact => d.overgeneration.iter().sum(),
    };
    d.shortfall.iter().sum::<f64>()
        + over
        + d.reserve_up_short.iter().sum::<f64>()
        + d.reserve_down_short.iter().sum::<f64>()
}

fn clip(b: HourBounds, floor: f64, ceil: f64) -> HourBounds {
    let hi = b.hi.min(ceil).max(b.lo);
    let lo = b.lo.max(floor).min(hi);
    HourBounds { lo, hi }
}

fn forward_pass(
    instance: &UCInstance,
    commitment: &CommitmentMatrix,
    limits: &Limits,
) -> DispatchMatrix {
    let n = instance.n_units();
    let hours = instance.n_hours();
    let window = instance.reserve.window_min;
    let mut out = DispatchMatrix::zeros(n, hours);

    let mut prev_on: Vec<bool> = instance.units.iter().map(|u| u.initially_on()).collect();
    let mut prev_power: Vec<f64> = instance
        .units
        .iter()
        .map(|u| {
            if u.initially_on() {
                u.initial_power
            } else {
                0.0
            }
        })
        .collect();

    let mut on_units: Vec<(&UnitSpec, HourBounds)> = Vec::with_capacity(n);
    let mut index: Vec<usize> = Vec::with_capacity(n);
    for t in 0..hours {
        on_units.clear();
        index.clear();
        for (i, unit) in instance.units.iter().enumerate() {
            if commitment.get(i, t) {
                // A previous output outside the unit's limits (only possible
                // through a malformed initial state) falls back to full range.
                let bounds = ramp_bounds(unit, prev_on[i], prev_power[i])
                    .unwrap_or_else(|_| HourBounds::full(unit));
                on_units.push((unit, clip(bounds, limits.floor[i][t], limits.ceil[i][t])));
                index.push(i);
            }
        }
        let demand = instance.demand[t];
        let target = ReserveTarget {
            up: instance.reserve_up_requirement(t),
            down: instance.reserve_down_requirement(t),
            window_min: window,
        };
        let hour = dispatch_hour_with_reserve(&on_units, demand, target);
        for (&i, &p) in index.iter().zip(&hour.allocation) {
            out.power[i][t] = p;
        }
        out.shortfall[t] = hour.shortfall;
        out.overgeneration[t] = hour.overgeneration;
        out.reserve_up_short[t] =
            (target.up - reserve_up(&on_units, &hour.allocation, window)).max(0.0);
        out.reserve_down_short[t] =
            (target.down - reserve_down(&on_units, &hour.allocation, window)).max(0.0);

        for i in 0..n {
            prev_on[i] = commitment.get(i, t);
            prev_power[i] = out.power[i][t];
        }
    }
    out
}

/// For every hour with a residual, dispatches it as if ramping from the
/// previous hour were free, then pushes the output that plan needs back
/// through the preceding ON hours as floors and ceilings. Returns false when
/// nothing changed.
fn tighten(
    instance: &UCInstance,
    commitment: &CommitmentMatrix,
    d: &DispatchMatrix,
    limits: &mut Limits,
) -> bool {
    let window = instance.reserve.window_min;
    let mut changed = false;
    for t in 1..instance.n_hours() {
        let over = instance.balance_mode == BalanceMode::Exact && d.overgeneration[t] > 0.0;
        if d.shortfall[t] == 0.0
            && !over
            && d.reserve_up_short[t] == 0.0
            && d.reserve_down_short[t] == 0.0
        {
            continue;
        }
        let mut on_units = Vec::new();
        let mut index = Vec::new();
        for (i, unit) in instance.units.iter().enumerate() {
            if commitment.get(i, t) {
                let b = clip(
                    HourBounds::full(unit),
                    limits.floor[i][t],
                    limits.ceil[i][t],
                );
                on_units.push((unit, b));
                index.push(i);
            }
        }
        let target = ReserveTarget {
            up: instance.reserve_up_requirement(t),
            down: instance.reserve_down_requirement(t),
            window_min: window,
        };
        let plan = dispatch_hour_with_reserve(&on_units, instance.demand[t], target);
        for (&i, &want) in index.iter().zip(&plan.allocation) {
            let unit = &instance.units[i];
            let (mut need_lo, mut need_hi) = (want, want);
            let mut s = t;
            while s > 0 && commitment.get(i, s - 1) {
                need_lo -= unit.ramp_up;
                need_hi += unit.ramp_down;
                let (floor, ceil) = (&mut limits.floor[i][s - 1], &mut limits.ceil[i][s - 1]);
                let mut moved = false;
                if need_lo > unit.p_min
                    && need_lo > *floor + RESERVE_TOL
                    && need_lo > d.power[i][s - 1] + RESERVE_TOL
                {
                    *floor = need_lo;
                    moved = true;
                }
                if need_hi < unit.p_max
                    && need_hi < *ceil - RESERVE_TOL
                    && need_hi < d.power[i][s - 1] - RESERVE_TOL
                {
                    *ceil = need_hi;
                    moved = true;
                }
                if !moved {
                    break;
                }
                changed = true;
                s -= 1;
            }
        }
    }
    changed
}
