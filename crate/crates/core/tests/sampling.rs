use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use vmbcd::sampling::{AliasTable, BlockDistribution, BlockSampler, SamplerKind};

/// Probability of each block implied by the bucket layout.
fn reconstruct(t: &AliasTable) -> Vec<f64> {
    let n = t.len();
    let mut p = vec![0.0; n];
    for b in t.buckets() {
        p[b.lower] += b.threshold / n as f64;
        p[b.upper] += (1.0 - b.threshold) / n as f64;
    }
    p
}

fn weights() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(
        prop_oneof![1e-6..1e-3f64, 0.1..10.0f64, 100.0..1e4f64],
        1..200,
    )
}

proptest! {
    #[test]
    fn alias_table_reproduces_distribution(w in weights()) {
        let d = BlockDistribution::proportional(&w).unwrap();
        let t = AliasTable::new(&d);
        prop_assert_eq!(t.len(), w.len());
        for (a, b) in reconstruct(&t).iter().zip(d.probabilities()) {
            prop_assert!((a - b).abs() <= 1e-12, "{} vs {}", a, b);
        }
        for b in t.buckets() {
            prop_assert!((0.0..=1.0).contains(&b.threshold));
        }
    }

    #[test]
    fn samples_stay_in_range(w in weights(), seed in 0u64..1000) {
        let s = BlockSampler::new(BlockDistribution::proportional(&w).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..200 {
            prop_assert!(s.sample(&mut rng) < w.len());
        }
    }

    #[test]
    fn lipschitz_is_proportional(w in weights()) {
        let d = BlockDistribution::lipschitz(&w).unwrap();
        let total: f64 = w.iter().sum();
        for (p, l) in d.probabilities().iter().zip(&w) {
            prop_assert!((p - l / total).abs() <= 1e-12 * (1.0 + p));
        }
    }

    #[test]
    fn optimal_is_proportional_to_ratio(m in prop::collection::vec(0.1..10.0f64, 1..30), seed in 0u64..100) {
        let a: Vec<f64> = (0..m.len()).map(|k| 0.05 + ((k as u64 * 7919 + seed) % 19) as f64 / 20.0).collect();
        let d = BlockDistribution::optimal(&m, &a).unwrap();
        let w: Vec<f64> = m.iter().zip(&a).map(|(m, a)| m / a).collect();
        let total: f64 = w.iter().sum();
        for (p, v) in d.probabilities().iter().zip(&w) {
            prop_assert!((p - v / total).abs() <= 1e-12);
        }
    }
}

#[test]
fn chi_square_goodness_of_fit() {
    let cases: Vec<Vec<f64>> = vec![
        vec![1.0; 10],
        (1..=20).map(|k| k as f64).collect(),
        vec![1.0, 1.0, 1.0, 50.0],
        (0..16).map(|k| 2f64.powi(k % 5)).collect(),
    ];
    let draws = 200_000;
    for (c, w) in cases.iter().enumerate() {
        let s = BlockSampler::new(BlockDistribution::proportional(w).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(c as u64);
        let mut counts = vec![0usize; w.len()];
        for _ in 0..draws {
            counts[s.sample(&mut rng)] += 1;
        }
        let stat: f64 = counts
            .iter()
            .zip(s.distribution().probabilities())
            .map(|(&o, p)| {
                let e = p * draws as f64;
                (o as f64 - e).powi(2) / e
            })
            .sum();
        let p = 1.0
            - ChiSquared::new((w.len() - 1).max(1) as f64)
                .unwrap()
                .cdf(stat);
        assert!(p > 1e-3, "case {c}: chi2 = {stat}, p = {p}");
    }
}

#[test]
fn single_block_always_returns_it() {
    let s = BlockSampler::new(BlockDistribution::uniform(1).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    assert!((0..100).all(|_| s.sample(&mut rng) == 0));
}

#[test]
fn invalid_distributions_are_rejected() {
    assert!(BlockDistribution::new(vec![]).is_err());
    assert!(BlockDistribution::new(vec![0.5, 0.4]).is_err());
    assert!(BlockDistribution::new(vec![1.0, 0.0]).is_err());
    assert!(BlockDistribution::new(vec![f64::NAN, 1.0]).is_err());
    assert!(BlockDistribution::uniform(0).is_err());
    assert!(BlockDistribution::lipschitz(&[1.0, -1.0]).is_err());
    assert!(BlockDistribution::optimal(&[1.0, 1.0], &[1.0]).is_err());
    assert!(BlockDistribution::optimal(&[1.0], &[0.0]).is_err());
}

#[test]
fn sampler_names_round_trip() {
    for k in [
        SamplerKind::Uniform,
        SamplerKind::Lipschitz,
        SamplerKind::Optimal,
    ] {
        assert_eq!(k.name().parse::<SamplerKind>().unwrap(), k);
    }
    assert!("importance".parse::<SamplerKind>().is_err());
}
