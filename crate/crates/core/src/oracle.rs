//! Exhaustive ground truth for small instances.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dispatch::HourBounds;
use crate::error::OracleError;
use crate::fitness::{fitness, EvaluatedSchedule};
use crate::model::{fuel_cost, CommitmentMatrix, UCInstance, UnitSpec};

/// Largest commitment (units × hours) the enumerator accepts.
pub const MAX_ORACLE_BITS: usize = 24;
/// Largest unit count for the dispatch grid search.
pub const MAX_GRID_UNITS: usize = 3;

const PROGRESS_EVERY: u64 = 1 << 20;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleResult {
    pub best: EvaluatedSchedule,
    /// Enumeration index of the optimum (bit `k` = flattened position `k`).
    pub mask: u64,
    /// True when no commitment is feasible; `best` then has least penalty.
    pub infeasible_only: bool,
    pub evaluated: u64,
}

/// Evaluates every commitment matrix and returns the lowest fitness. Ties go
/// to the smallest mask.
pub fn enumerate_optimal(instance: &UCInstance) -> Result<OracleResult, OracleError> {
    let bits = instance.n_units() * instance.n_hours();
    if bits > MAX_ORACLE_BITS {
        return Err(OracleError::TooLarge {
            bits,
            cap: MAX_ORACLE_BITS,
        });
    }
    let (units, hours) = (instance.n_units(), instance.n_hours());
    let count = 1u64 << bits;
    let chunk = PROGRESS_EVERY.min(count);
    let chunks = count.div_ceil(chunk);

    let reduce = |a: (f64, u64, bool), b: (f64, u64, bool)| {
        let (fa, ma, _) = a;
        let (fb, mb, _) = b;
        let feasible = a.2 || b.2;
        let pick = if fb.total_cmp(&fa).then(mb.cmp(&ma)).is_lt() {
            b
        } else {
            a
        };
        (pick.0, pick.1, feasible)
    };
    let (best_fit, mask, any_feasible) = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * chunk;
            let hi = (lo + chunk).min(count);
            let mut acc = (f64::INFINITY, u64::MAX, false);
            for mask in lo..hi {
                let eval = fitness(instance, &CommitmentMatrix::from_mask(units, hours, mask));
                acc = reduce(acc, (eval.fitness, mask, eval.is_feasible()));
            }
            if count > PROGRESS_EVERY {
                log::info!("oracle: finished block {}/{}", c + 1, chunks);
            }
            acc
        })
        .reduce(|| (f64::INFINITY, u64::MAX, false), reduce);
    debug_assert!(best_fit.is_finite());

    let best = fitness(instance, &CommitmentMatrix::from_mask(units, hours, mask));
    Ok(OracleResult {
        best,
        mask,
        infeasible_only: !any_feasible,
        evaluated: count,
    })
}

/// Brute-force economic dispatch on a `step`-MW grid.
///
/// All units but the widest-range one are enumerated on the grid (bounds
/// included); the remaining unit takes the balance when that lies inside its
/// bounds. Demand outside `[Σ lo, Σ hi]` saturates at the violated side.
pub fn dispatch_grid_oracle(
    on_units: &[(&UnitSpec, HourBounds)],
    demand: f64,
    step: f64,
) -> Result<Vec<f64>, OracleError> {
    if on_units.len() > MAX_GRID_UNITS {
        return Err(OracleError::TooManyUnits {
            units: on_units.len(),
            cap: MAX_GRID_UNITS,
        });
    }
    if step.is_nan() || step <= 0.0 {
        return Err(OracleError::BadStep(step));
    }
    let sum_lo: f64 = on_units.iter().map(|(_, b)| b.lo).sum();
    let sum_hi: f64 = on_units.iter().map(|(_, b)| b.hi).sum();
    if demand >= sum_hi {
        return Ok(on_units.iter().map(|(_, b)| b.hi).collect());
    }
    if demand <= sum_lo {
        return Ok(on_units.iter().map(|(_, b)| b.lo).collect());
    }

    let slack = on_units
        .iter()
        .enumerate()
        .max_by(|(_, (_, a)), (_, (_, b))| (a.hi - a.lo).total_cmp(&(b.hi - b.lo)))
        .map(|(i, _)| i)
        .expect("demand inside (Σlo, Σhi) implies at least one unit");
    let grids: Vec<Vec<f64>> = on_units
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != slack)
        .map(|(_, (_, b))| grid_points(b.lo, b.hi, step))
        .collect();

    let others: Vec<&UnitSpec> = on_units
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != slack)
        .map(|(_, (u, _))| *u)
        .collect();
    let mut search = GridSearch {
        grids: &grids,
        others: &others,
        slack: on_units[slack],
        demand,
        current: vec![0.0; grids.len()],
        best: None,
    };
    search.descend(0, 0.0, 0.0);
    let (_, point) = search
        .best
        .ok_or(OracleError::NoFeasiblePoint { demand, step })?;
    let mut rest = point.iter();
    Ok((0..on_units.len())
        .map(|i| {
            if i == slack {
                demand - point.iter().sum::<f64>()
            } else {
                *rest.next().expect("grid arity")
            }
        })
        .collect())
}

struct GridSearch<'a> {
    grids: &'a [Vec<f64>],
    others: &'a [&'a UnitSpec],
    slack: (&'a UnitSpec, HourBounds),
    demand: f64,
    current: Vec<f64>,
    best: Option<(f64, Vec<f64>)>,
}

impl GridSearch<'_> {
    /// Fixes grid coordinates one unit at a time; the last coordinate is
    /// scanned only where the slack unit stays inside its bounds.
    fn descend(&mut self, depth: usize, fixed_power: f64, fixed_cost: f64) {
        let (slack_unit, slack_bounds) = self.slack;
        let rest = self.demand - fixed_power;
        if depth == self.grids.len() {
            if rest >= slack_bounds.lo && rest <= slack_bounds.hi {
                self.offer(fixed_cost + fuel_cost(slack_unit, rest), None);
            }
            return;
        }
        let grid = &self.grids[depth];
        let unit = self.others[depth];
        if depth + 1 < self.grids.len() {
            for &p in grid {
                self.current[depth] = p;
                self.descend(depth + 1, fixed_power + p, fixed_cost + fuel_cost(unit, p));
            }
            return;
        }
        let first = grid.partition_point(|&p| rest - p > slack_bounds.hi);
        let end = grid.partition_point(|&p| rest - p >= slack_bounds.lo);
        let mut local: Option<(f64, f64)> = None;
        for &p in &grid[first..end.max(first)] {
            let cost = fixed_cost + fuel_cost(unit, p) + fuel_cost(slack_unit, rest - p);
            if local.is_none_or(|(c, _)| cost < c) {
                local = Some((cost, p));
            }
        }
        if let Some((cost, p)) = local {
            self.offer(cost, Some((depth, p)));
        }
    }

    fn offer(&mut self, cost: f64, last: Option<(usize, f64)>) {
        if self.best.as_ref().is_none_or(|(c, _)| cost < *c) {
            let mut point = self.current.clone();
            if let Some((d, p)) = last {
                point[d] = p;
            }
            self.best = Some((cost, point));
        }
    }
}

fn grid_points(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).floor() as usize;
    let mut pts: Vec<f64> = (0..=n).map(|k| lo + k as f64 * step).collect();
    if pts.last().is_none_or(|&p| p < hi) {
        pts.push(hi);
    }
    pts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispatch::dispatch_hour;
    use crate::instances::case2_units;
    use crate::model::{BalanceMode, ReservePolicy};

    fn unit(id: &str, b: f64, startup: f64, initial_state: i32) -> UnitSpec {
        UnitSpec {
            id: id.into(),
            cost_a: 0.0,
            cost_b: b,
            cost_c: 0.0,
            p_min: 10.0,
            p_max: 100.0,
            ramp_up: 100.0,
            ramp_down: 100.0,
            ramp_per_min: 10.0,
            min_up: 1,
            min_down: 1,
            cold_hours: 0,
            startup_hot: startup,
            startup_cold: startup,
            shutdown_cost: 0.0,
            initial_state,
            initial_power: if initial_state > 0 { 50.0 } else { 0.0 },
        }
    }

    fn instance(units: Vec<UnitSpec>, demand: Vec<f64>) -> UCInstance {
        UCInstance {
            units,
            demand,
            reserve: ReservePolicy::default(),
            penalty_weight: 1e5,
            balance_mode: BalanceMode::AtLeast,
            network: None,
        }
    }

    #[test]
    fn forced_commitment() {
        let inst = instance(vec![unit("A", 1.0, 5.0, 2)], vec![40.0, 60.0]);
        let r = enumerate_optimal(&inst).unwrap();
        assert_eq!(r.best.commitment.rows(), vec![vec![1, 1]]);
        assert!(!r.infeasible_only);
        assert_eq!(r.evaluated, 4);
    }

    #[test]
    fn keeps_cheap_unit_through_valley() {
        // A is cheap but costly to restart; B is dear but free to start.
        // Hour 2 could be served by B alone, but cycling A costs 500 more
        // than the 10 MW it would save at 1 money/MW.
        let inst = instance(
            vec![unit("A", 1.0, 500.0, 1), unit("B", 2.0, 0.0, -1)],
            vec![80.0, 20.0, 80.0],
        );
        let r = enumerate_optimal(&inst).unwrap();
        assert_eq!(r.evaluated, 64);
        assert_eq!(r.best.commitment.row(0), &[true, true, true]);
        assert!(r.best.is_feasible());
        assert!((r.best.fitness - 180.0).abs() < 1e-9);
    }

    #[test]
    fn zero_demand_all_off() {
        let inst = instance(
            vec![unit("A", 1.0, 5.0, -1), unit("B", 2.0, 5.0, -1)],
            vec![0.0; 3],
        );
        let r = enumerate_optimal(&inst).unwrap();
        assert_eq!(r.mask, 0);
        assert_eq!(r.best.fitness, 0.0);
    }

    #[test]
    fn cap_is_enforced() {
        let inst = instance(vec![unit("A", 1.0, 5.0, -1)], vec![0.0; 25]);
        assert!(matches!(
            enumerate_optimal(&inst),
            Err(OracleError::TooLarge { bits: 25, cap: 24 })
        ));
    }

    #[test]
    fn grid_matches_waterfill_units_3_4() {
        let units = case2_units();
        let on = [
            (&units[2], HourBounds::full(&units[2])),
            (&units[3], HourBounds::full(&units[3])),
        ];
        let grid = dispatch_grid_oracle(&on, 200.0, 0.01).unwrap();
        let exact = dispatch_hour(&on, 200.0);
        let cost =
            |a: &[f64]| -> f64 { on.iter().zip(a).map(|((u, _), &p)| fuel_cost(u, p)).sum() };
        let (g, e) = (cost(&grid), cost(&exact.allocation));
        assert!((g - e).abs() / e < 5e-4);
    }

    #[test]
    fn grid_single_unit_and_saturation() {
        let units = case2_units();
        let b = HourBounds::full(&units[4]);
        let on = [(&units[4], b)];
        let a = dispatch_grid_oracle(&on, 100.0, 0.01).unwrap();
        assert!((a[0] - 100.0).abs() < 1e-9);
        assert_eq!(dispatch_grid_oracle(&on, 10.0, 0.01).unwrap(), vec![25.0]);
        let two = [(&units[4], b), (&units[5], HourBounds::full(&units[5]))];
        assert_eq!(
            dispatch_grid_oracle(&two, 1000.0, 0.01).unwrap(),
            vec![162.0, 80.0]
        );
        assert!(dispatch_grid_oracle(&two, 100.0, 0.0).is_err());
    }
}
