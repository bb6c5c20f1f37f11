use polyloop_core::preference::{std_normal_cdf, Rating};
use polyloop_core::rater::*;
use polyloop_core::render::QualityScore;
use proptest::prelude::*;

fn config(bias: BiasConfig, seed: u64) -> RaterConfig {
    RaterConfig {
        weights: UtilityWeights {
            quality: 1.0,
            reduction: 0.0,
        },
        bias,
        seed,
        ..Default::default()
    }
}

fn obs(u: f64, faulty: bool) -> VariantObservation {
    VariantObservation {
        quality: QualityScore::uniform(u),
        reduction_ratio: 0.0,
        faulty,
    }
}

fn bias_strategy() -> impl Strategy<Value = BiasConfig> {
    (
        0.0f64..=1.0,
        0.0f64..3.0,
        0.0f64..=1.0,
        0.0f64..1.0,
        -0.5f64..0.5,
        0.0f64..0.5,
    )
        .prop_map(|(a, l, g, t, o, p)| BiasConfig {
            anchoring_weight: a,
            loss_aversion: l,
            diminishing_returns: g,
            transient_noise_sd: t,
            level_offset: o,
            pattern_noise_sd: p,
        })
}

proptest! {
    #[test]
    fn unbiased_ratings_are_monotone_in_utility(
        batches in prop::collection::vec(prop::array::uniform4(0.0f64..=1.0), 1..6),
        seed in any::<u64>(),
    ) {
        let mut rater = RaterModel::new(config(BiasConfig::default(), seed)).unwrap();
        for utilities in batches {
            let observations: Vec<_> = utilities.iter().map(|&u| obs(u, false)).collect();
            let ratings = rater.rate_batch(&observations, "fixture");
            for i in 0..4 {
                for j in 0..4 {
                    if utilities[i] >= utilities[j] {
                        prop_assert!(ratings[i] >= ratings[j]);
                    }
                }
            }
        }
    }

    #[test]
    fn ratings_stay_on_the_scale_and_best_seen_never_falls(
        bias in bias_strategy(),
        batches in prop::collection::vec((prop::array::uniform4(0.0f64..=1.0), prop::array::uniform4(any::<bool>())), 1..8),
        seed in any::<u64>(),
    ) {
        let mut rater = RaterModel::new(config(bias, seed)).unwrap();
        let mut last_best = f64::NEG_INFINITY;
        for (utilities, faulty) in batches {
            let observations: Vec<_> = utilities.iter().zip(faulty).map(|(&u, f)| obs(u, f)).collect();
            let ratings = rater.rate_batch(&observations, "fixture");
            prop_assert_eq!(ratings.len(), 4);
            prop_assert!(ratings.iter().all(|r| r.value() <= 5));
            if let Some(best) = rater.memory().best_seen {
                prop_assert!(best >= last_best);
                last_best = best;
            }
            prop_assert_eq!(rater.memory().last_ratings.as_deref(), Some(&ratings[..]));
        }
    }
}

#[test]
fn transient_noise_frequencies_fit_the_normal_model() {
    let (u, sd) = (0.5, 0.2);
    let bias = BiasConfig {
        transient_noise_sd: sd,
        ..Default::default()
    };
    let mut rater = RaterModel::new(config(bias, 99)).unwrap();
    let mut counts = [0f64; 5];
    for _ in 0..250 {
        for r in rater.rate_batch(&[obs(u, false); 4], "fixture") {
            counts[r.value() as usize - 1] += 1.0;
        }
    }
    // Bin k covers scores [0.2(k-1), 0.2k), with the clamp folding the tails into bins 1 and 5.
    let cdf = |x: f64| std_normal_cdf((x - u) / sd);
    let probs = [
        cdf(0.2),
        cdf(0.4) - cdf(0.2),
        cdf(0.6) - cdf(0.4),
        cdf(0.8) - cdf(0.6),
        1.0 - cdf(0.8),
    ];
    let n = 1000.0;
    let chi2: f64 = counts
        .iter()
        .zip(probs)
        .map(|(o, p)| (o - n * p).powi(2) / (n * p))
        .sum();
    // 99th percentile of chi-square with 4 degrees of freedom.
    assert!(chi2 < 13.2767, "chi-square {chi2}, counts {counts:?}");
    // Repeated calls on identical inputs do differ.
    assert!(counts.iter().filter(|&&c| c > 0.0).count() >= 3);
}

#[test]
fn undetected_faults_are_rated_normally() {
    let mut rater = RaterModel::new(RaterConfig {
        detection_probability: 0.0,
        ..config(BiasConfig::default(), 1)
    })
    .unwrap();
    let ratings = rater.rate_batch(&[obs(0.95, true); 4], "fixture");
    assert_eq!(ratings, vec![Rating::MAX; 4]);
}

#[test]
fn detection_rate_matches_the_probability() {
    let mut rater = RaterModel::new(config(BiasConfig::default(), 5)).unwrap();
    let skipped: usize = (0..500)
        .map(|_| {
            rater
                .rate_batch(&[obs(0.95, true); 4], "fixture")
                .iter()
                .filter(|r| r.is_skip())
                .count()
        })
        .sum();
    let rate = skipped as f64 / 2000.0;
    // Binomial(2000, 0.8) has sd ~0.009.
    assert!((rate - DEFAULT_DETECTION_PROBABILITY).abs() < 0.04, "{rate}");
}

#[test]
fn pattern_noise_differs_between_contexts() {
    let rater = RaterModel::new(config(
        BiasConfig {
            pattern_noise_sd: 0.3,
            ..Default::default()
        },
        2,
    ))
    .unwrap();
    let offsets: Vec<f64> = ["box", "torus", "bumpy", "cylinder"]
        .iter()
        .map(|c| rater.pattern_offset(c))
        .collect();
    assert!(offsets.windows(2).all(|w| w[0] != w[1]));
    assert_eq!(rater.pattern_offset("box"), offsets[0]);
}
