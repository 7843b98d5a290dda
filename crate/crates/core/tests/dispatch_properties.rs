use proptest::prelude::*;
use uc_core::dispatch::{dispatch_hour, HourBounds};
use uc_core::instances::case2_units;
use uc_core::model::{fuel_cost, marginal_cost, UnitSpec};
use uc_core::oracle::dispatch_grid_oracle;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

/// Up to `max` distinct table units, each with a random sub-range of its
/// limits standing in for ramp bounds.
fn hour_units(max: usize) -> impl Strategy<Value = Vec<(UnitSpec, HourBounds)>> {
    proptest::sample::subsequence((0..10).collect::<Vec<_>>(), 1..=max).prop_flat_map(|picked| {
        let n = picked.len();
        proptest::collection::vec((0.0f64..1.0, 0.0f64..1.0), n).prop_map(move |cuts| {
            let table = case2_units();
            picked
                .iter()
                .zip(cuts)
                .map(|(&k, (a, b))| {
                    let u = table[k].clone();
                    let span = u.p_max - u.p_min;
                    let (x, y) = (a.min(b), a.max(b));
                    let bounds = if y - x < 0.05 {
                        HourBounds::full(&u)
                    } else {
                        HourBounds {
                            lo: u.p_min + x * span,
                            hi: u.p_min + y * span,
                        }
                    };
                    (u, bounds)
                })
                .collect()
        })
    })
}

fn refs(units: &[(UnitSpec, HourBounds)]) -> Vec<(&UnitSpec, HourBounds)> {
    units.iter().map(|(u, b)| (u, *b)).collect()
}

fn demand_in(units: &[(UnitSpec, HourBounds)], f: f64) -> f64 {
    let lo: f64 = units.iter().map(|(_, b)| b.lo).sum();
    let hi: f64 = units.iter().map(|(_, b)| b.hi).sum();
    lo + f * (hi - lo)
}

fn cost(units: &[(&UnitSpec, HourBounds)], alloc: &[f64]) -> f64 {
    units
        .iter()
        .zip(alloc)
        .map(|((u, _), &p)| fuel_cost(u, p))
        .sum()
}

proptest! {
    #![proptest_config(config(1000))]

    #[test]
    fn balance_bounds_and_kkt(units in hour_units(10), f in 0.0f64..=1.0) {
        let on = refs(&units);
        let demand = demand_in(&units, f);
        let h = dispatch_hour(&on, demand);
        let total: f64 = h.allocation.iter().sum();
        prop_assert!((total - demand).abs() <= 1e-6);
        for ((_, b), &p) in on.iter().zip(&h.allocation) {
            prop_assert!(p >= b.lo - 1e-9 && p <= b.hi + 1e-9);
        }
        let free: Vec<f64> = on
            .iter()
            .zip(&h.allocation)
            .filter(|((u, b), &p)| u.cost_c > 0.0 && p > b.lo + 1e-7 && p < b.hi - 1e-7)
            .map(|((u, _), &p)| marginal_cost(u, p))
            .collect();
        for w in free.windows(2) {
            prop_assert!((w[0] - w[1]).abs() <= 1e-4, "{:?}", free);
        }
        // No clamped-low unit is cheaper at the margin than a free one, and
        // no clamped-high unit dearer.
        if let Some(&lam) = free.first() {
            for ((u, b), &p) in on.iter().zip(&h.allocation) {
                if p <= b.lo + 1e-7 {
                    prop_assert!(marginal_cost(u, p) >= lam - 1e-4);
                } else if p >= b.hi - 1e-7 {
                    prop_assert!(marginal_cost(u, p) <= lam + 1e-4);
                }
            }
        }
    }

    #[test]
    fn allocation_is_monotone_in_demand(units in hour_units(10), f in 0.0f64..=1.0, g in 0.0f64..=1.0) {
        let on = refs(&units);
        let a = dispatch_hour(&on, demand_in(&units, f.min(g)));
        let b = dispatch_hour(&on, demand_in(&units, f.max(g)));
        for (x, y) in a.allocation.iter().zip(&b.allocation) {
            prop_assert!(x <= &(y + 1e-7));
        }
    }
}

proptest! {
    #![proptest_config(config(200))]

    #[test]
    fn matches_grid_search(units in hour_units(3), f in 0.0f64..=1.0) {
        let on = refs(&units);
        let demand = demand_in(&units, f);
        let exact = cost(&on, &dispatch_hour(&on, demand).allocation);
        let grid = cost(&on, &dispatch_grid_oracle(&on, demand, 0.01).unwrap());
        prop_assert!(exact <= grid * (1.0 + 1e-9));
        prop_assert!((grid - exact) / exact <= 5e-4);
    }
}
