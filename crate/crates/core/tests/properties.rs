use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;

use stopflow::exact::{compositions, to_decimal, to_f64};
use stopflow::observer::rescan_components;
use stopflow::{run_strategy, Observer, PathPower, Strategy as Rule};

/// `(n, k, arrival order)` with `n` up to 80.
fn graph_and_order() -> impl Strategy<Value = (usize, usize, Vec<usize>)> {
    (2usize..80).prop_flat_map(|n| {
        (
            Just(n),
            1..n,
            Just((1..=n).collect::<Vec<_>>()).prop_shuffle(),
        )
    })
}

proptest! {
    #[test]
    fn observer_tracks_a_full_rescan((n, k, order) in graph_and_order()) {
        let graph = PathPower::new(n, k).unwrap();
        let mut obs = Observer::new(graph);
        let mut met = false;
        for (i, &pos) in order.iter().enumerate() {
            let ev = obs.observe(pos).unwrap();
            prop_assert_eq!(rescan_components(&graph, &order[..=i]), (ev.components, ev.inner));
            if met {
                prop_assert!(ev.condition_met);
                prop_assert!(!ev.is_max);
            }
            met |= ev.condition_met;
        }
        prop_assert!(met);
    }

    #[test]
    fn replaying_a_seed_replays_the_run((n, k, order) in graph_and_order(), p in 0.0f64..=1.0, seed: u64) {
        let graph = PathPower::new(n, k).unwrap();
        for s in [Rule::tau_p_star(p, seed).unwrap(), Rule::tau_n()] {
            let a = run_strategy(&s, &graph, &order).unwrap();
            let b = run_strategy(&s, &graph, &order).unwrap();
            prop_assert_eq!(a, b);
            prop_assert!(a.stop_index >= 1 && a.stop_index <= n);
            prop_assert_eq!(a.chosen_position, order[a.stop_index - 1]);
            prop_assert_eq!(a.win, a.chosen_position == 1);
            if a.win {
                prop_assert!(a.chosen_was_max);
            }
        }
    }

    #[test]
    fn compositions_are_exact_and_sorted(r in 0usize..14, parts in 0usize..5) {
        let all = compositions(r, parts);
        for a in &all {
            prop_assert_eq!(a.len(), parts);
            prop_assert_eq!(a.iter().enumerate().map(|(i, x)| (i + 1) * x).sum::<usize>(), r);
        }
        prop_assert!(all.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn decimal_rendering_is_close(num in 0i64..1_000_000, den in 1i64..1_000_000) {
        let x = BigRational::new(BigInt::from(num), BigInt::from(den));
        let rendered: f64 = to_decimal(&x, 20).parse().unwrap();
        prop_assert!((rendered - to_f64(&x)).abs() <= 1e-12 * to_f64(&x).max(1.0));
    }
}
