use std::sync::Arc;

use proptest::prelude::*;

use ppt_core::ground::{alpha_t, AlphaFamily};
use ppt_core::inequalities::hamming;
use ppt_core::measures::{relative_entropy, tv_distance, DiscreteMeasure};
use ppt_core::processes::{law_tv, poisson_law, thin_law, ConfigurationSpaceIndex};
use ppt_core::transport::{assignment_value, marton_cost, ot_lp, weak_transport};

fn probability(k: usize) -> impl Strategy<Value = DiscreteMeasure> {
    prop::collection::vec(0.01f64..1.0, k).prop_map(|w| DiscreteMeasure::normalized(w).unwrap())
}

fn pair(k: usize) -> impl Strategy<Value = (DiscreteMeasure, DiscreteMeasure)> {
    (probability(k), probability(k))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn entropy_is_nonnegative_and_dominates_tv((a, b) in (2usize..6).prop_flat_map(pair)) {
        let h = relative_entropy(&a, &b).unwrap();
        let tv = tv_distance(&a, &b).unwrap();
        prop_assert!(h >= -1e-12);
        // Pinsker
        prop_assert!(2.0 * tv * tv <= h + 1e-12);
    }

    #[test]
    fn hamming_transport_is_total_variation((a, b) in (2usize..6).prop_flat_map(pair)) {
        let k = a.len();
        let (cost, _) = ot_lp(&hamming(k), &a, &b).unwrap();
        prop_assert!((cost - tv_distance(&a, &b).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn marton_cost_matches_convex_solve((a, b) in (2usize..5).prop_flat_map(pair)) {
        let k = a.len();
        let explicit = marton_cost(&a, &b).unwrap();
        let solved = weak_transport(&AlphaFamily::Square, &hamming(k), &b, &a).unwrap();
        prop_assert!((explicit - solved.value).abs() <= 1e-5 + solved.gap);
    }

    #[test]
    fn weak_cost_bounded_below_by_half_square_of_tv((a, b) in (2usize..5).prop_flat_map(pair), t in 0.05f64..0.95) {
        // α_t(u) ≥ u²/2 and Jensen give T̃ ≥ TV²/2.
        let k = a.len();
        let w = weak_transport(&AlphaFamily::Dembo(t), &hamming(k), &a, &b).unwrap();
        let tv = tv_distance(&a, &b).unwrap();
        prop_assert!(w.value >= tv * tv / 2.0 - 1e-6 - w.gap);
    }

    #[test]
    fn alpha_t_dominates_half_square(t in 0.0f64..=1.0, u in 0.0f64..1.0) {
        prop_assert!(alpha_t(t, u).unwrap() >= u * u / 2.0 - 1e-12);
    }

    #[test]
    fn assignment_is_no_worse_than_identity(
        xs in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..7),
        ys in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 7),
    ) {
        let ys = &ys[..xs.len()];
        let d = |a: &(f64, f64), b: &(f64, f64)| ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt();
        let identity: f64 = xs.iter().zip(ys).map(|(a, b)| d(a, b)).sum();
        let best = assignment_value(d, &xs, ys);
        prop_assert!(best <= identity + 1e-12);
        prop_assert!(best >= 0.0);
    }

    #[test]
    fn thinning_a_poisson_law_scales_its_intensity(l0 in 0.1f64..1.0, l1 in 0.1f64..1.0, t in 0.0f64..=1.0) {
        let index = Arc::new(ConfigurationSpaceIndex::new(2, 12).unwrap());
        let nu = DiscreteMeasure::finite(vec![l0, l1]).unwrap();
        let law = poisson_law(&nu, index.clone()).unwrap();
        let thinned = thin_law(&law, t).unwrap();
        let expected = poisson_law(&nu.scaled(t).unwrap(), index).unwrap();
        // Truncation at 12 points leaves a tail far below this tolerance.
        prop_assert!(law_tv(&thinned, &expected).unwrap() < 1e-6);
    }
}
