use esr_core::bchsh::{conditional_correlations, modified_chsh_value, standard_chsh_lhs, ChshReport};
use esr_core::esr::{
    generalized_correlation, outcome_distribution, sequential_distribution_factored, sequential_distribution_general,
    SequentialDetection,
};
use esr_core::lhv::{micro_observable_expectation, mixture_probabilities, MicrostateEnsemble};
use esr_core::quantum::{
    luders_update, outcome_probabilities, random_direction, random_state, spin_observable, Subsystem,
};
use esr_core::{ChshSetting, DetectionModel, GeneralizedObservable};
use num_rational::Ratio;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn single_distribution_is_normalized(seed in any::<u64>(), rank in 1usize..=4, pd in 0.0f64..=1.0) {
        let mut r = rng(seed);
        let state = random_state::<f64, _>(&mut r, rank);
        let obs = GeneralizedObservable::new(spin_observable(&random_direction(&mut r), Subsystem::First)).unwrap();
        let det = DetectionModel::uniform(pd).unwrap();
        let dist = outcome_distribution(&state, &obs, &det).unwrap();
        prop_assert!((dist.total() - 1.0).abs() < 1e-12);
        for e in dist.entries() {
            prop_assert!((0.0..=1.0).contains(&e.probability));
            prop_assert!((e.probability - e.detection * e.conditional).abs() < 1e-15);
        }
    }

    #[test]
    fn factored_equals_general_for_far_apart_spins(
        seed in any::<u64>(),
        pd_a in 0.0f64..=1.0,
        pd_b in 0.0f64..=1.0,
        a0 in -2.0f64..2.0,
    ) {
        prop_assume!((a0.abs() - 1.0).abs() > 1e-6);
        let mut r = rng(seed);
        let state = random_state::<f64, _>(&mut r, 4);
        let a = GeneralizedObservable::with_no_registration_outcome(
            spin_observable(&random_direction(&mut r), Subsystem::First), a0).unwrap();
        let b = GeneralizedObservable::new(spin_observable(&random_direction(&mut r), Subsystem::Second)).unwrap();
        let det = DetectionModel::uniform(1.0).unwrap()
            .with_entry(state.label(), a.label(), pd_a).unwrap()
            .with_entry(state.label(), b.label(), pd_b).unwrap();
        let factored = sequential_distribution_factored(&state, &a, &b, &det).unwrap();
        let general = sequential_distribution_general(&state, &a, &b, &SequentialDetection {
            first: pd_a,
            second_after_outcome: vec![pd_b; 2],
            second_after_none: pd_b,
            conditional_after_none: outcome_probabilities(&state, b.base()),
        }).unwrap();
        for (x, y) in factored.entries().iter().zip(general.entries()) {
            prop_assert_eq!(x.first, y.first);
            prop_assert_eq!(x.second, y.second);
            prop_assert!((x.probability - y.probability).abs() < 1e-12);
        }
        let corr = generalized_correlation(&state, &a, &b, &det).unwrap();
        prop_assert!((factored.mean() - corr).abs() < 1e-12);
    }

    #[test]
    fn repeated_measurement_confirms_outcome(seed in any::<u64>(), rank in 1usize..=4) {
        let mut r = rng(seed);
        let state = random_state::<f64, _>(&mut r, rank);
        let obs = spin_observable(&random_direction(&mut r), Subsystem::Second);
        let probs = outcome_probabilities(&state, &obs);
        for (i, (p, proj)) in probs.iter().zip(obs.projectors()).enumerate() {
            if *p > 1e-9 {
                let updated = luders_update(&state, proj).unwrap();
                // Repeating the measurement confirms the registered outcome.
                prop_assert!((outcome_probabilities(&updated, &obs)[i] - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn modified_is_bounded_by_weighted_magnitudes(seed in any::<u64>(), p in prop::array::uniform4(0.0f64..=1.0)) {
        let mut r = rng(seed);
        let state = random_state::<f64, _>(&mut r, 2);
        let setting = ChshSetting::new(
            random_direction(&mut r), random_direction(&mut r), random_direction(&mut r), random_direction(&mut r));
        let e = conditional_correlations(&setting, &state).unwrap();
        let report = ChshReport::from_parts(e, p).unwrap();
        let [pa, pap, pb, pbp] = p;
        let weighted = pa * (pb * e[0].abs() + pbp * e[1].abs()) + pap * (pb * e[2].abs() + pbp * e[3].abs());
        prop_assert!(report.modified_lhs <= weighted + 1e-12);
        prop_assert!(report.standard_lhs <= 2.0 * std::f64::consts::SQRT_2 + 1e-9);
        let k = p[0];
        let uniform = modified_chsh_value(e, [k; 4]).unwrap();
        prop_assert!((uniform - k * k * standard_chsh_lhs(e).unwrap()).abs() < 1e-12);
        prop_assert!(uniform <= report.standard_lhs + 1e-12);
    }

    #[test]
    fn exact_mixture_factorization(
        raw in prop::collection::vec((1i64..20, 0i64..=10, any::<bool>()), 1..8),
    ) {
        let total: i64 = raw.iter().map(|(w, _, _)| *w).sum();
        let weights: Vec<Ratio<i64>> = raw.iter().map(|(w, _, _)| Ratio::new(*w, total)).collect();
        let detect: Vec<Ratio<i64>> = raw.iter().map(|(_, d, _)| Ratio::new(*d, 10)).collect();
        let has: Vec<bool> = raw.iter().map(|(_, _, h)| *h).collect();
        let e = MicrostateEnsemble::new(weights.clone(), detect, has.clone()).unwrap();
        match mixture_probabilities(&e) {
            Ok(m) => prop_assert_eq!(m.joint, m.detection * m.conditional),
            Err(_) => prop_assert!(raw.iter().all(|(_, d, _)| *d == 0)),
        }
        let family = vec![has.clone(), has.iter().map(|h| !h).collect()];
        let mean = micro_observable_expectation(&weights, &family, &[Ratio::from(1), Ratio::from(-1)]).unwrap();
        let plus: Ratio<i64> = weights.iter().zip(&has).filter(|(_, h)| **h).map(|(w, _)| *w).sum();
        prop_assert_eq!(mean, plus * 2 - 1);
    }
}
