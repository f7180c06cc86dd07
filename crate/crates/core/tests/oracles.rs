mod common;

use std::sync::Arc;

use common::{brute_force_ola, naive_candidates, random_instance};
use decoykit::anonymize::{ola_search, LossMetric};
use decoykit::linkage::Feasibility;

#[test]
fn ola_matches_exhaustive_search() {
    for seed in 0..20u64 {
        let attrs = 1 + (seed % 4) as usize;
        let (data, quasi) = random_instance(seed, 60 + 20 * seed as usize, attrs);
        for (k, limit) in [(2, 0.0), (3, 0.05), (5, 0.1)] {
            let expect = brute_force_ola(&data, &quasi, k, limit).unwrap();
            let view = ola_search(Arc::new(data.clone()), &quasi, k, limit, LossMetric::Precision).unwrap();
            assert_eq!(view.level_vector(), &expect.0, "seed {seed} k {k} limit {limit}");
            assert!((view.loss().precision - expect.1).abs() < 1e-12);
        }
    }
}

#[test]
fn candidates_match_naive_discovery() {
    let mut nonempty = 0;
    for seed in 0..12u64 {
        let (pop, quasi) = random_instance(1000 + seed, 1500, 2 + (seed % 3) as usize);
        let sample = pop.sample_uniform(200, seed).unwrap();
        let view = ola_search(Arc::new(sample), &quasi, 3, 0.05, LossMetric::Precision).unwrap();
        let f = Feasibility::assess(&view, &pop).unwrap();
        let (min_link, expect) = naive_candidates(&pop, &view);
        assert_eq!(f.linkage.min_link, min_link);
        assert_eq!(f.candidates.len(), expect.len());
        for c in &f.candidates {
            let (n, r) = expect[c.tuple()];
            assert_eq!(c.size(), n);
            assert!((c.risk_factor - r).abs() < 1e-12);
        }
        nonempty += usize::from(!expect.is_empty());
    }
    assert!(nonempty > 0, "no instance produced candidates");
}
