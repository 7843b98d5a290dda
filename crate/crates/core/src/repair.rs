//! Deterministic repair of commitment genomes.
//!
//! Pass A fixes minimum up/down times unit by unit, scanning left to right:
//! the hours pinned by the pre-horizon run are forced, ON runs that end too
//! early are extended to the right and OFF runs that end too early are
//! switched back ON. Only OFF→ON flips happen after the pinned prefix, so
//! the scan terminates and its output is a fixed point.
//!
//! Pass B walks the hours and commits units in priority order (cheapest
//! full-load average cost first) while ON capacity is below demand plus the
//! up-reserve requirement, re-running Pass A on each touched unit. In
//! `Exact` balance mode it also decommits the costliest units whose removal
//! keeps run lengths valid while minimum output exceeds demand. Capacity
//! repair is best effort; anything left is priced by the penalty.

use crate::model::{fuel_cost, BalanceMode, CommitmentMatrix, UCInstance, UnitSpec};

const CAPACITY_TOL: f64 = 1e-9;

/// Units ordered by full-load average cost `fuel_cost(p_max) / p_max`,
/// cheapest first; ties keep instance order.
pub fn priority_order(instance: &UCInstance) -> Vec<usize> {
    let avg = |u: &UnitSpec| {
        if u.p_max > 0.0 {
            fuel_cost(u, u.p_max) / u.p_max
        } else {
            f64::INFINITY
        }
    };
    let mut order: Vec<usize> = (0..instance.n_units()).collect();
    order.sort_by(|&a, &b| {
        avg(&instance.units[a])
            .total_cmp(&avg(&instance.units[b]))
            .then(a.cmp(&b))
    });
    order
}

/// Enforces min up/down on one unit's row. Returns true if anything changed.
pub fn enforce_min_up_down(unit: &UnitSpec, row: &mut [bool]) -> bool {
    let hours = row.len();
    let mut changed = false;
    let (pinned, state) = unit.pinned_prefix();
    for slot in row.iter_mut().take(pinned.min(hours)) {
        if *slot != state {
            *slot = state;
            changed = true;
        }
    }

    'scan: loop {
        let mut prev_on = unit.initially_on();
        let mut run_len = unit.initial_state.unsigned_abs();
        for t in 0..hours {
            if row[t] == prev_on {
                run_len += 1;
                continue;
            }
            if prev_on && run_len < unit.min_up {
                let end = (t + (unit.min_up - run_len) as usize).min(hours);
                row[t..end].fill(true);
                changed = true;
                continue 'scan;
            }
            if !prev_on && run_len < unit.min_down {
                // Too-short OFF runs always start inside the horizon: the
                // pinned prefix covers the pre-horizon one.
                let start = t.saturating_sub(run_len as usize);
                row[start..t].fill(true);
                changed = true;
                continue 'scan;
            }
            prev_on = row[t];
            run_len = 1;
        }
        return changed;
    }
}

/// True when the row already satisfies min up/down.
pub fn row_is_valid(unit: &UnitSpec, row: &[bool]) -> bool {
    let mut probe = row.to_vec();
    !enforce_min_up_down(unit, &mut probe)
}

fn on_capacity(instance: &UCInstance, genome: &CommitmentMatrix, hour: usize) -> f64 {
    instance
        .units
        .iter()
        .enumerate()
        .filter(|(i, _)| genome.get(*i, hour))
        .map(|(_, u)| u.p_max)
        .sum()
}

fn on_minimum(instance: &UCInstance, genome: &CommitmentMatrix, hour: usize) -> f64 {
    instance
        .units
        .iter()
        .enumerate()
        .filter(|(i, _)| genome.get(*i, hour))
        .map(|(_, u)| u.p_min)
        .sum()
}

fn required_capacity(instance: &UCInstance, hour: usize) -> f64 {
    instance.demand[hour] * (1.0 + instance.reserve.up_fraction)
}

/// Commits units in hours that lack capacity. Returns true on change.
fn commit_pass(instance: &UCInstance, genome: &mut CommitmentMatrix, order: &[usize]) -> bool {
    let mut changed = false;
    for t in 0..instance.n_hours() {
        let need = required_capacity(instance, t) - CAPACITY_TOL;
        while on_capacity(instance, genome, t) < need {
            let candidate = order.iter().copied().find(|&i| {
                let (pinned, state) = instance.units[i].pinned_prefix();
                !genome.get(i, t) && !(t < pinned && !state)
            });
            let Some(i) = candidate else { break };
            genome.set(i, t, true);
            enforce_min_up_down(&instance.units[i], genome.row_mut(i));
            changed = true;
        }
    }
    changed
}

/// Removes surplus minimum generation (Exact mode). Returns true on change.
fn decommit_pass(instance: &UCInstance, genome: &mut CommitmentMatrix, order: &[usize]) -> bool {
    let mut changed = false;
    for t in 0..instance.n_hours() {
        let demand = instance.demand[t];
        let need = required_capacity(instance, t) - CAPACITY_TOL;
        while on_minimum(instance, genome, t) > demand + CAPACITY_TOL {
            let capacity = on_capacity(instance, genome, t);
            let candidate = order.iter().rev().copied().find(|&i| {
                if !genome.get(i, t) || capacity - instance.units[i].p_max < need {
                    return false;
                }
                let mut row = genome.row(i).to_vec();
                row[t] = false;
                row_is_valid(&instance.units[i], &row)
            });
            let Some(i) = candidate else { break };
            genome.set(i, t, false);
            changed = true;
        }
    }
    changed
}

/// Repairs `genome` in place. The result always satisfies min up/down.
pub fn repair_in_place(genome: &mut CommitmentMatrix, instance: &UCInstance) {
    for (i, unit) in instance.units.iter().enumerate() {
        enforce_min_up_down(unit, genome.row_mut(i));
    }
    let order = priority_order(instance);
    // Commits only add ON hours and decommits never undercut the capacity
    // target, so this settles quickly; the cap is a backstop.
    for _ in 0..4 * genome.bits().len().max(1) {
        let mut changed = commit_pass(instance, genome, &order);
        if instance.balance_mode == BalanceMode::Exact {
            changed |= decommit_pass(instance, genome, &order);
        }
        if !changed {
            break;
        }
    }
}

pub fn repair(genome: &CommitmentMatrix, instance: &UCInstance) -> CommitmentMatrix {
    let mut out = genome.clone();
    repair_in_place(&mut out, instance);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispatch::dispatch_schedule;
    use crate::instances::{case2, case2_table_v};
    use crate::model::{evaluate, ReservePolicy};

    fn toy_unit(min_up: u32, min_down: u32, initial_state: i32) -> UnitSpec {
        UnitSpec {
            id: "G".into(),
            cost_a: 0.0,
            cost_b: 1.0,
            cost_c: 0.0,
            p_min: 1.0,
            p_max: 10.0,
            ramp_up: 10.0,
            ramp_down: 10.0,
            ramp_per_min: 1.0,
            min_up,
            min_down,
            cold_hours: 0,
            startup_hot: 1.0,
            startup_cold: 1.0,
            shutdown_cost: 0.0,
            initial_state,
            initial_power: if initial_state > 0 { 5.0 } else { 0.0 },
        }
    }

    #[test]
    fn short_on_run_extended_right() {
        let u = toy_unit(3, 1, -2);
        let mut row = [false, true, false, false];
        enforce_min_up_down(&u, &mut row);
        assert_eq!(row, [false, true, true, true]);
    }

    #[test]
    fn short_off_run_filled() {
        let u = toy_unit(1, 3, 1);
        let mut row = [true, false, true, true, false];
        enforce_min_up_down(&u, &mut row);
        assert_eq!(row, [true, true, true, true, false]);
    }

    #[test]
    fn pinned_prefix_honours_initial_state() {
        // ON for 1 h before the horizon with min_up 3: first 2 hours forced ON.
        let u = toy_unit(3, 1, 1);
        let mut row = [false, false, false, false];
        enforce_min_up_down(&u, &mut row);
        assert_eq!(row, [true, true, false, false]);
        // OFF for 1 h with min_down 3: first 2 hours forced OFF.
        let u = toy_unit(1, 3, -1);
        let mut row = [true, true, true, true];
        enforce_min_up_down(&u, &mut row);
        assert_eq!(row, [false, false, true, true]);
    }

    #[test]
    fn table_v_is_a_fixed_point() {
        let inst = case2();
        let c = case2_table_v();
        assert_eq!(repair(&c, &inst), c);
    }

    #[test]
    fn empty_genome_gets_capacity() {
        let inst = case2();
        let r = repair(&CommitmentMatrix::new(10, 24), &inst);
        for t in 0..24 {
            assert!(on_capacity(&inst, &r, t) >= required_capacity(&inst, t) - 1e-9);
        }
        let order = priority_order(&inst);
        // Cheapest full-load unit carries every hour.
        assert!(r.row(order[0]).iter().all(|&b| b));
        let d = dispatch_schedule(&inst, &r).unwrap();
        let (_, report) = evaluate(&inst, &r, &d).unwrap();
        assert!(report.min_up_down.is_empty());
    }

    #[test]
    fn priority_order_case2() {
        // Full-load average cost from the unit table: U2 19.53, U3 21.84,
        // U4 22.00, U1 22.02, ...
        let order = priority_order(&case2());
        assert_eq!(&order[..4], &[1, 2, 3, 0]);
    }

    #[test]
    fn exact_mode_decommits_surplus() {
        let mut a = toy_unit(1, 1, -1);
        a.p_min = 5.0;
        let mut b = a.clone();
        b.id = "H".into();
        b.cost_b = 2.0;
        let inst = UCInstance {
            units: vec![a, b],
            demand: vec![6.0, 6.0],
            reserve: ReservePolicy::default(),
            penalty_weight: 1.0,
            balance_mode: BalanceMode::Exact,
            network: None,
        };
        let r = repair(&CommitmentMatrix::filled(2, 2, true), &inst);
        assert_eq!(r.rows(), vec![vec![1, 1], vec![0, 0]]);
    }
}
