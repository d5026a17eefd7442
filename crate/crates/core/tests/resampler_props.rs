use fvdlens::resampler::{objective_gradient, resample_indices, weighted_fvd_objective, weighted_stats, WeightVector};
use fvdlens::{compute_fvd, fit_gaussian, FeatureMatrix};
use proptest::prelude::*;

fn rows(n: usize, d: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-3.0f64..3.0, d), n)
}

fn fm(r: &[Vec<f64>]) -> FeatureMatrix {
    FeatureMatrix::from_rows(r, None, "prop").unwrap()
}

fn instance() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<f64>)> {
    (1usize..5, 4usize..16).prop_flat_map(|(d, k)| (rows(12, d), rows(k, d), prop::collection::vec(-2.0f64..2.0, k)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn softmax_ignores_logit_shift(logits in prop::collection::vec(-10.0f64..10.0, 1..20), c in -50.0f64..50.0) {
        let p = WeightVector::new(logits.clone()).unwrap().probabilities();
        let q = WeightVector::new(logits.iter().map(|w| w + c).collect()).unwrap().probabilities();
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for (a, b) in p.iter().zip(&q) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn uniform_weights_reproduce_plain_fit((_, cands, _) in instance()) {
        let w = WeightVector::uniform(cands.len());
        let weighted = weighted_stats(&fm(&cands), &w).unwrap();
        let plain = fit_gaussian(&fm(&cands)).unwrap();
        prop_assert!((&weighted.mean - &plain.mean).abs().max() < 1e-12);
        prop_assert!((&weighted.cov - &plain.cov).abs().max() < 1e-12);
    }

    #[test]
    fn uniform_objective_is_plain_fvd((reference, cands, _) in instance()) {
        let stats = fit_gaussian(&fm(&reference)).unwrap();
        let obj = weighted_fvd_objective(&stats, &fm(&cands), &WeightVector::uniform(cands.len())).unwrap();
        let fvd = compute_fvd(&fm(&reference), &fm(&cands)).unwrap().value;
        prop_assert!((obj - fvd).abs() <= 1e-8 * fvd.max(1.0), "{obj} vs {fvd}");
    }

    #[test]
    fn gradient_is_orthogonal_to_shift((reference, cands, logits) in instance()) {
        let stats = fit_gaussian(&fm(&reference)).unwrap();
        let g = objective_gradient(&stats, &fm(&cands), &WeightVector::new(logits).unwrap()).unwrap();
        let scale = g.iter().map(|v| v.abs()).fold(1.0, f64::max);
        prop_assert!(g.iter().sum::<f64>().abs() < 1e-9 * scale);
    }

    #[test]
    fn resampling_is_seeded(logits in prop::collection::vec(-3.0f64..3.0, 2..30), seed in any::<u64>()) {
        let w = WeightVector::new(logits).unwrap();
        let a = resample_indices(&w, 50, seed).unwrap();
        prop_assert_eq!(&a, &resample_indices(&w, 50, seed).unwrap());
        prop_assert!(a.iter().all(|&i| i < w.len()));
    }
}
