//! Instances shipped with the crate.
//!
//! `case1_3unit.json` is a three-unit distribution system with linear costs;
//! `case2_10unit.json` is the ten-unit system with quadratic costs and a 10%
//! spinning-reserve requirement. Both demand profiles are surrogate data (see
//! the README); the unit tables are exact.

use crate::model::{CommitmentMatrix, UCInstance, UnitSpec};

pub const CASE1_JSON: &str = include_str!("../instances/case1_3unit.json");
pub const CASE2_JSON: &str = include_str!("../instances/case2_10unit.json");
/// Reference day-ahead commitment for case 2 in schedule-CSV form.
pub const CASE2_TABLE_V_CSV: &str = include_str!("../instances/case2_table_v_schedule.csv");

pub fn case1() -> UCInstance {
    UCInstance::from_json(CASE1_JSON).expect("shipped case1 parses")
}

pub fn case2() -> UCInstance {
    UCInstance::from_json(CASE2_JSON).expect("shipped case2 parses")
}

pub fn case1_units() -> Vec<UnitSpec> {
    case1().units
}

pub fn case2_units() -> Vec<UnitSpec> {
    case2().units
}

/// The reference case-2 commitment (10 units x 24 hours).
pub fn case2_table_v() -> CommitmentMatrix {
    let mut rows = vec![Vec::new(); 10];
    for line in CASE2_TABLE_V_CSV.lines().skip(1) {
        for (i, cell) in line.split(',').skip(1).enumerate() {
            rows[i].push(u8::from(cell.trim() == "1"));
        }
    }
    CommitmentMatrix::from_rows(&rows)
}

/// A small synthetic instance in the style of the ten-unit table.
///
/// Units are drawn from the case-2 table with cost coefficients scaled by up
/// to ±10%, minimum up/down times of 1 to 3 hours, a random pre-horizon state
/// and ramp rates of half the capacity. Hourly demand lies between 30% and 80%
/// of installed capacity, with a 10% up-reserve requirement.
pub fn random_instance(seed: u64, units: usize, hours: usize) -> UCInstance {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let table = case2_units();
    let mut picked = Vec::with_capacity(units);
    for k in 0..units {
        let mut u = table[rng.gen_range(0..table.len())].clone();
        u.id = format!("G{}", k + 1);
        u.cost_a *= rng.gen_range(0.9..1.1);
        u.cost_b *= rng.gen_range(0.9..1.1);
        u.cost_c *= rng.gen_range(0.9..1.1);
        u.min_up = rng.gen_range(1..=3);
        u.min_down = rng.gen_range(1..=3);
        u.cold_hours = rng.gen_range(0..=2);
        u.ramp_up = u.p_max / 2.0;
        u.ramp_down = u.p_max / 2.0;
        let run = rng.gen_range(1..=4);
        if rng.gen_bool(0.5) {
            u.initial_state = run;
            u.initial_power = rng.gen_range(u.p_min..=u.p_max);
        } else {
            u.initial_state = -run;
            u.initial_power = 0.0;
        }
        picked.push(u);
    }
    let capacity: f64 = picked.iter().map(|u| u.p_max).sum();
    let demand = (0..hours)
        .map(|_| (capacity * rng.gen_range(0.3..0.8)).round())
        .collect();
    UCInstance {
        units: picked,
        demand,
        reserve: crate::model::ReservePolicy {
            up_fraction: 0.1,
            ..Default::default()
        },
        penalty_weight: 1e5,
        balance_mode: Default::default(),
        network: None,
    }
}
