mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;

use common::{erlang_cdf, erlang_chain, fuzz_model, fuzz_subset, FuzzShape};
use subspace_tbr::simulate::relevant_subset;
use subspace_tbr::subspace::sub_model_pair;
use subspace_tbr::{
    parse_model, sample_path, serialize_model, solve_tbr, subspace_tbr, Objective, RngStream,
    SimScheduler, SolverOptions, StateId, SubspaceConfig,
};

fn small() -> FuzzShape {
    FuzzShape {
        max_states: 8,
        ..FuzzShape::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn text_format_round_trips(seed in any::<u64>()) {
        let m = fuzz_model(seed, FuzzShape::default());
        let text = serialize_model(&m);
        let back = parse_model(&text).unwrap();
        prop_assert_eq!(serialize_model(&back), text);
        prop_assert_eq!(back, m);
    }

    #[test]
    fn sub_models_sandwich_the_full_value(seed in any::<u64>(), t in 0.2f64..2.0) {
        let m = fuzz_model(seed, small());
        let explored = fuzz_subset(&m, seed);
        let opts = SolverOptions::new(1e-2);
        let pair = sub_model_pair(&m, &explored).unwrap();
        for obj in [Objective::Maximize, Objective::Minimize] {
            let v = solve_tbr(&m, t, obj, &opts).unwrap().value_at_initial;
            let lo = solve_tbr(&pair.lower.model, t, obj, &opts).unwrap();
            let hi = solve_tbr(&pair.upper.model, t, obj, &opts).unwrap();
            prop_assert!(lo.lower() <= v + 2e-2);
            prop_assert!(v <= hi.upper() + 2e-2);
        }
    }

    #[test]
    fn value_grows_with_the_horizon(seed in any::<u64>(), t in 0.1f64..2.0) {
        let m = fuzz_model(seed, small());
        // same grid width on both horizons, so the long run extends the short one
        let lt = m.max_exit_rate() * t;
        let n = 200u64;
        let eps = lt * lt / (2.0 * n as f64) * (1.0 + 1e-12);
        let eps2 = 2.0 * lt * lt / (2 * n) as f64 * (1.0 + 1e-12);
        prop_assume!(eps2 < 1.0);
        let short = solve_tbr(&m, t, Objective::Maximize, &SolverOptions::new(eps)).unwrap();
        let long = solve_tbr(&m, 2.0 * t, Objective::Maximize, &SolverOptions::new(eps2)).unwrap();
        prop_assert_eq!((short.num_steps, long.num_steps), (n, 2 * n));
        prop_assert!(short.value_at_initial <= long.value_at_initial + 1e-12);
    }

    #[test]
    fn more_explored_states_never_widen_the_bounds(seed in any::<u64>()) {
        let m = fuzz_model(seed, small());
        let small_set = fuzz_subset(&m, seed);
        let mut big_set = small_set.clone();
        big_set.extend(fuzz_subset(&m, seed.wrapping_add(1)));
        let opts = SolverOptions::new(1e-2);
        let bounds = |set: &BTreeSet<StateId>| {
            let p = sub_model_pair(&m, set).unwrap();
            (
                solve_tbr(&p.lower.model, 1.0, Objective::Maximize, &opts).unwrap().value_at_initial,
                solve_tbr(&p.upper.model, 1.0, Objective::Maximize, &opts).unwrap().value_at_initial,
            )
        };
        let (l1, u1) = bounds(&small_set);
        let (l2, u2) = bounds(&big_set);
        prop_assert!(l2 >= l1 - 1e-9 && u2 <= u1 + 1e-9, "{} {} {} {}", l1, l2, u1, u2);
    }

    #[test]
    fn goals_absorbing_keeps_values(seed in any::<u64>()) {
        let m = fuzz_model(seed, small());
        let a = m.make_goals_absorbing();
        let opts = SolverOptions::new(1e-2);
        for obj in [Objective::Maximize, Objective::Minimize] {
            let v = solve_tbr(&m, 1.0, obj, &opts).unwrap();
            let w = solve_tbr(&a, 1.0, obj, &opts).unwrap();
            prop_assert_eq!(v.value_at_initial, w.value_at_initial);
        }
    }

    #[test]
    fn subspace_runs_are_deterministic(seed in any::<u64>()) {
        let m = fuzz_model(seed, small());
        let mut c = SubspaceConfig::new(0.1);
        c.n_sim = 3;
        c.master_seed = seed;
        c.max_iterations = 5;
        let a = subspace_tbr(&m, 1.0, &c).unwrap();
        let b = subspace_tbr(&m, 1.0, &c).unwrap();
        prop_assert_eq!(a.explored, b.explored);
        prop_assert_eq!(a.lower.to_bits(), b.lower.to_bits());
        prop_assert_eq!(a.upper.to_bits(), b.upper.to_bits());
        let s1 = relevant_subset(&m, 1.0, &SimScheduler::Uniform, 20, seed);
        let s2 = relevant_subset(&m, 1.0, &SimScheduler::Uniform, 20, seed);
        prop_assert_eq!(s1, s2);
    }
}

#[test]
fn erlang_values_stay_below_the_oracle() {
    for stages in [1usize, 2, 7] {
        for t in [0.3, 1.0, 4.0] {
            let m = erlang_chain(stages, 3.0);
            let out = solve_tbr(&m, t, Objective::Maximize, &SolverOptions::new(1e-3)).unwrap();
            let exact = erlang_cdf(stages as u32, 3.0, t);
            let diff = exact - out.value_at_initial;
            // a single stage is exact up to rounding
            assert!((-1e-12..=out.apriori_bound).contains(&diff), "{stages} {t}: {diff}");
        }
    }
}

#[test]
fn empirical_sojourn_mean_matches_rate() {
    let m = erlang_chain(1, 4.0);
    let n = 40_000;
    let times: Vec<f64> = (0..n)
        .map(|i| sample_path(&m, 1e6, &SimScheduler::Uniform, RngStream::new(99, i)).sojourns[0])
        .collect();
    let mean = times.iter().sum::<f64>() / n as f64;
    // standard error of the mean is 0.25/200
    assert!((mean - 0.25).abs() < 5.0 * 0.25 / 200.0, "{mean}");
    let below = times.iter().filter(|&&x| x <= 0.25).count() as f64 / n as f64;
    assert!((below - (1.0 - (-1.0f64).exp())).abs() < 0.01, "{below}");
}

#[test]
fn branching_frequencies_follow_rates() {
    let mut d = subspace_tbr::ModelDraft::new(3, 0);
    d.goal(1)
        .goal(2)
        .transition(0, "go", 1, 1.0)
        .transition(0, "go", 2, 3.0)
        .transition(1, "l", 1, 1.0)
        .transition(2, "l", 2, 1.0);
    let m = d.build().unwrap();
    let n = 20_000;
    let hits = (0..n)
        .filter(|&i| sample_path(&m, 1e6, &SimScheduler::Uniform, RngStream::new(5, i)).last() == StateId(2))
        .count() as f64;
    assert!((hits / n as f64 - 0.75).abs() < 0.015);
}
