//! Cross-module invariants driven by randomized instances. Proptest
//! shrinks on the generator seed; each case derives a full instance
//! (graph, chain, environment) from it.

use mtbrw_core::annealed::{annealed_moment_exact, asymptotic_fit};
use mtbrw_core::chain::SpatialChain;
use mtbrw_core::environment::Environment;
use mtbrw_core::expectation::{expected_population, feynman_kac_path_sum, MeanMatrix};
use mtbrw_core::rng::SplitMix64;
use mtbrw_core::typegraph::{
    cycle_decomposition, enumerate_simple_cycles, girth, TypeGraph, TypePairMeasure,
};
use mtbrw_core::variational::{lambda_lp_oracle, lambda_max_mean_cycle};
use proptest::prelude::*;

/// Random valid graph with up to `max_types` types.
fn random_graph(rng: &mut SplitMix64, max_types: usize) -> TypeGraph {
    loop {
        let n = 1 + rng.next_index(max_types);
        let mut edges = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if rng.next_f64() < 0.5 {
                    edges.push((i, j, 0.05 + 3.0 * rng.next_f64()));
                }
            }
        }
        if let Ok(g) = TypeGraph::build(&edges) {
            if g.n_types() == n {
                return g;
            }
        }
    }
}

fn random_chain(rng: &mut SplitMix64, max_sites: usize) -> SpatialChain {
    let s = 1 + rng.next_index(max_sites);
    if s == 1 {
        return SpatialChain::trivial();
    }
    let rows: Vec<Vec<f64>> = (0..s)
        .map(|_| {
            let mut row: Vec<f64> = (0..s).map(|_| 0.05 + rng.next_f64()).collect();
            let total: f64 = row.iter().sum();
            row.iter_mut().for_each(|v| *v /= total);
            let head: f64 = row[..s - 1].iter().sum();
            row[s - 1] = 1.0 - head;
            row
        })
        .collect();
    SpatialChain::new(rows).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn cycle_measures_satisfy_pair_measure_invariants(seed in any::<u64>()) {
        let mut rng = SplitMix64::new(seed);
        let g = random_graph(&mut rng, 5);
        for c in enumerate_simple_cycles(&g) {
            let mu = TypePairMeasure::from_cycle(&g, &c);
            let total: f64 = mu.weights().iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
            prop_assert!(mu.marginal_gap() < 1e-12);
            // support inside the edge set: the validating constructor accepts it
            prop_assert!(TypePairMeasure::new(&g, mu.weights().to_vec()).is_ok());
        }
    }

    #[test]
    fn random_cycle_mixtures_decompose_and_reconstruct(seed in any::<u64>()) {
        let mut rng = SplitMix64::new(seed);
        let g = random_graph(&mut rng, 5);
        let cycles = enumerate_simple_cycles(&g);
        let n = g.n_types();
        let mut w: Vec<f64> = (0..cycles.len()).map(|_| rng.next_exponential()).collect();
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|v| *v /= total);
        let mut weights = vec![0.0; n * n];
        for (wk, c) in w.iter().zip(&cycles) {
            for (i, j) in c.edge_pairs() {
                weights[i * n + j] += wk / c.len() as f64;
            }
        }
        let mu = TypePairMeasure::new(&g, weights.clone()).unwrap();
        let tol = 1e-9;
        let parts = cycle_decomposition(&g, &mu, tol).unwrap();
        let mut rebuilt = vec![0.0; n * n];
        for (wk, c) in &parts {
            for (i, j) in c.edge_pairs() {
                rebuilt[i * n + j] += wk / c.len() as f64;
            }
        }
        for (a, b) in rebuilt.iter().zip(&weights) {
            prop_assert!((a - b).abs() <= 10.0 * tol);
        }
    }

    #[test]
    fn girth_is_min_cycle_length(seed in any::<u64>()) {
        let mut rng = SplitMix64::new(seed);
        let g = random_graph(&mut rng, 5);
        let min_len = enumerate_simple_cycles(&g).iter().map(|c| c.len()).min().unwrap();
        prop_assert_eq!(girth(&g), min_len);
    }

    #[test]
    fn lambda_routes_agree_and_scale(seed in any::<u64>()) {
        let mut rng = SplitMix64::new(seed);
        let g = random_graph(&mut rng, 5);
        let (karp, optimal) = lambda_max_mean_cycle(&g);
        let lp = lambda_lp_oracle(&g);
        prop_assert!((karp - lp).abs() <= 1e-8 * karp.abs().max(1.0));
        for c in &optimal {
            prop_assert!((c.rho_mean(&g) - karp).abs() <= 1e-8 * karp.abs().max(1.0));
        }
        // doubling is exact in floating point
        let (karp2, optimal2) = lambda_max_mean_cycle(&g.scaled(2.0).unwrap());
        prop_assert_eq!(karp2, 2.0 * karp);
        prop_assert_eq!(optimal.len(), optimal2.len());
        for (a, b) in optimal.iter().zip(&optimal2) {
            prop_assert_eq!(a.vertices(), b.vertices());
        }
    }

    #[test]
    fn representations_agree_on_random_instances(seed in any::<u64>()) {
        let mut rng = SplitMix64::new(seed);
        let g = random_graph(&mut rng, 3);
        let chain = random_chain(&mut rng, 3);
        let env = Environment::sample(&g, chain.n_sites(), rng.next_u64());
        let b = MeanMatrix::new(&env, &chain, &g).unwrap();
        let n = rng.next_index(5);
        let mp = expected_population(&b, 0, 0, n);
        let ps = feynman_kac_path_sum(&env, &chain, &g, 0, 0, n, None).unwrap();
        prop_assert!((ps.raw - mp).abs() <= 1e-10 * mp.abs().max(1.0));
        prop_assert!(ps.relative_gap() <= 1e-12);
    }

    #[test]
    fn fit_remainders_are_finite_and_shift_linearly(seed in any::<u64>()) {
        let mut rng = SplitMix64::new(seed);
        let g = random_graph(&mut rng, 2);
        let chain = SpatialChain::trivial();
        let ns = [2usize, 4, 6];
        let lms: Vec<f64> = ns
            .iter()
            .map(|&n| annealed_moment_exact(&g, &chain, 0, 0, n, None).unwrap())
            .collect();
        let (lambda, _) = lambda_max_mean_cycle(&g);
        let fit = asymptotic_fit(&ns, &lms, lambda).unwrap();
        for &r in &fit.r {
            prop_assert!(r.is_finite());
        }
        let c = 0.37;
        let shifted: Vec<f64> = ns.iter().zip(&lms).map(|(&n, &lm)| lm + c * n as f64).collect();
        let fit2 = asymptotic_fit(&ns, &shifted, lambda).unwrap();
        for (a, b) in fit.r.iter().zip(&fit2.r) {
            prop_assert!((b - a - c).abs() < 1e-12);
        }
    }
}
