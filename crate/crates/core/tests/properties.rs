use proptest::prelude::*;

use emdarp_core::charging::charge_curve;
use emdarp_core::generator::{generate, BatteryPreset, GenConfig};
use emdarp_core::graph::expand_graph;
use emdarp_core::io::{decode_values, encode_plan};
use emdarp_core::milp::build_model_on;
use emdarp_core::solver::{branch_and_bound, exhaustive_oracle, BnbConfig, OracleCaps, SolveStatus};
use emdarp_core::validator::validate;

fn config() -> impl Strategy<Value = GenConfig> {
    (any::<u64>(), 1usize..=3, 1usize..=2, 0usize..=1, 0usize..=1, any::<bool>(), any::<bool>(), any::<bool>())
        .prop_map(|(seed, r, k, m, n, high, selective, open)| GenConfig {
            seed,
            n_requests: r,
            n_agents: k,
            n_stations: m,
            duplicate_visits: m * n,
            preset: if high { BatteryPreset::HighDischarge } else { BatteryPreset::Typical },
            selective,
            open_vrp: open,
            ..GenConfig::default()
        })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn branch_and_bound_matches_the_oracle(cfg in config()) {
        let inst = generate(&cfg).unwrap();
        let g = expand_graph(&inst).unwrap();
        let res = branch_and_bound(&inst, &g, &BnbConfig::default());
        let oracle = exhaustive_oracle(&inst, &g, &OracleCaps::default()).unwrap();
        match oracle {
            None => prop_assert_eq!(res.status, SolveStatus::Infeasible),
            Some(o) => {
                prop_assert_eq!(res.status, SolveStatus::Optimal);
                prop_assert!((o.objective - res.objective).abs() <= 1e-6, "oracle {} vs {}", o.objective, res.objective);
            }
        }
    }

    #[test]
    fn optimal_plans_round_trip_through_the_model(cfg in config()) {
        let inst = generate(&cfg).unwrap();
        let g = expand_graph(&inst).unwrap();
        let Some(plan) = branch_and_bound(&inst, &g, &BnbConfig::default()).plan else { return Ok(()) };
        let model = build_model_on(&inst, &g).unwrap();
        let values = encode_plan(&inst, &g, &model, &plan).unwrap();
        prop_assert!(model.violated_rows(&values, 1e-6).is_empty());
        prop_assert!(model.violated_bounds(&values, 1e-6).is_empty());
        prop_assert!((model.objective_value(&values) - plan.objective).abs() <= 1e-6);
        let back = decode_values(&inst, &g, &model, &values).unwrap();
        prop_assert!(validate(&inst, &g, &back, 1e-6).unwrap().is_clean());
        prop_assert!((back.objective - plan.objective).abs() <= 1e-6);
        let routes = |p: &emdarp_core::plan::RoutePlan| p.agents.iter().map(|a| a.route()).collect::<Vec<_>>();
        prop_assert_eq!(routes(&back), routes(&plan));
    }

    #[test]
    fn more_station_duplicates_never_hurt(seed in any::<u64>(), r in 1usize..=3) {
        let base = GenConfig {
            seed,
            n_requests: r,
            n_agents: 1,
            n_stations: 1,
            duplicate_visits: 0,
            preset: BatteryPreset::HighDischarge,
            ..GenConfig::default()
        };
        let solve = |dups: usize| {
            let inst = generate(&GenConfig { duplicate_visits: dups, ..base.clone() }).unwrap();
            let g = expand_graph(&inst).unwrap();
            branch_and_bound(&inst, &g, &BnbConfig::default())
        };
        let one = solve(0);
        let two = solve(1);
        prop_assert!(two.status == SolveStatus::Optimal || one.status == SolveStatus::Infeasible);
        if one.status == SolveStatus::Optimal {
            prop_assert!(two.objective <= one.objective + 1e-6, "{} > {}", two.objective, one.objective);
        }
    }

    #[test]
    fn charging_is_monotone_and_capped(arrival in 0.0f64..=0.85, t in 0.0f64..200.0, dt in 0.0f64..50.0) {
        let b = generate(&GenConfig::default()).unwrap().battery;
        let a = charge_curve(arrival, t, &b).unwrap();
        let later = charge_curve(arrival, t + dt, &b).unwrap();
        prop_assert!(later.final_soc >= a.final_soc);
        prop_assert!(later.final_soc <= 1.0);
        prop_assert!(later.final_soc - a.final_soc <= b.beta1 * dt + 1e-12);
    }
}
