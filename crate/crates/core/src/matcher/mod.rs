//! Minimum-weight perfect matching on the job pair graph.

mod blossom;
mod brute;
mod graph;

pub use brute::{brute_force_matching, for_each_perfect_matching, BruteForceResult, BRUTE_FORCE_MAX_N};
pub use graph::{edge_count, PairGraph};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Pairs sorted by their lower vertex, each as `(lower, higher)`.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Matching<T = f64> {
    pub pairs: Vec<(usize, usize)>,
    pub total: T,
}

/// Sum of pair weights, accumulated in the order given.
///
/// Both solvers report totals through this so results compare exactly.
pub fn matching_weight<T: Scalar, D>(g: &PairGraph<T, D>, pairs: &[(usize, usize)]) -> T {
    pairs.iter().fold(T::zero(), |acc, &(i, j)| acc + g.weight(i, j))
}

/// Minimum-weight perfect matching via the blossom algorithm.
///
/// Weights are reflected to `(max + 1) - w` and a maximum-cardinality maximum-weight matching is
/// taken; on a complete graph with even `n` every maximum-cardinality matching is perfect and
/// has `n/2` edges, so the reflection preserves the optimum.
pub fn min_weight_perfect_matching<T: Scalar, D>(g: &PairGraph<T, D>) -> Result<Matching<T>> {
    let n = g.n();
    if !n.is_multiple_of(2) || n == 0 {
        return Err(Error::InvalidGraph(format!("perfect matching needs an even n >= 2, got {n}")));
    }
    let max = g.edges().map(|e| e.2).fold(T::zero(), T::max);
    let offset = max + T::one();
    let edges = g.edges().map(|(i, j, w, _)| (i, j, offset - w)).collect();
    let mate = blossom::Blossom::new(n, edges).solve(true);

    let mut pairs = Vec::with_capacity(n / 2);
    for (v, m) in mate.iter().enumerate() {
        match *m {
            Some(u) if mate[u] != Some(v) => {
                return Err(Error::InvalidGraph(format!("inconsistent mates {v} -> {u}")));
            }
            Some(u) if v < u => pairs.push((v, u)),
            Some(_) => {}
            None => return Err(Error::InvalidGraph(format!("vertex {v} left unmatched"))),
        }
    }
    let total = matching_weight(g, &pairs);
    Ok(Matching { pairs, total })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_graph(n: usize, rng: &mut impl Rng) -> PairGraph<f64, ()> {
        PairGraph::from_fn(n, |_, _| (rng.random_range(0.0..=100.0), ())).unwrap()
    }

    fn assert_partition(m: &Matching, n: usize) {
        let mut seen: Vec<usize> = m.pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
        seen.sort_unstable();
        assert_eq!(seen, (0..n).collect::<Vec<_>>());
    }

    #[test]
    fn two_vertices_take_the_only_edge() {
        let g = PairGraph::from_matrix(&[vec![0.0, 7.0], vec![7.0, 0.0]]).unwrap();
        let m = min_weight_perfect_matching(&g).unwrap();
        assert_eq!(m.pairs, vec![(0, 1)]);
        assert_eq!(m.total, 7.0);
    }

    #[test]
    fn four_vertices_pick_the_cheap_pairs() {
        let mut w = vec![vec![10.0; 4]; 4];
        w[0][1] = 1.0;
        w[1][0] = 1.0;
        w[2][3] = 1.0;
        w[3][2] = 1.0;
        let g = PairGraph::from_matrix(&w).unwrap();
        let m = min_weight_perfect_matching(&g).unwrap();
        assert_eq!(m.pairs, vec![(0, 1), (2, 3)]);
        assert_eq!(m.total, 2.0);
    }

    #[test]
    fn odd_cycle_needs_a_blossom() {
        // Triangle 0-1-2 is cheap inside; each vertex has one outside partner.
        let n = 6;
        let mut w = vec![vec![50.0; n]; n];
        let mut set = |a: usize, b: usize, v: f64| {
            w[a][b] = v;
            w[b][a] = v;
        };
        set(0, 1, 1.0);
        set(1, 2, 1.0);
        set(0, 2, 1.0);
        set(0, 3, 5.0);
        set(1, 4, 4.0);
        set(2, 5, 3.0);
        set(3, 4, 20.0);
        let g = PairGraph::from_matrix(&w).unwrap();
        let m = min_weight_perfect_matching(&g).unwrap();
        let b = brute_force_matching(&g).unwrap();
        assert_eq!(m.total, b.best.total);
    }

    #[test]
    fn zero_and_uniform_weights() {
        for w in [0.0, 3.25] {
            let g = PairGraph::<f64, ()>::from_fn(8, |_, _| (w, ())).unwrap();
            let m = min_weight_perfect_matching(&g).unwrap();
            assert_partition(&m, 8);
            assert_eq!(m.total, 4.0 * w);
        }
    }

    #[test]
    fn odd_n_rejected() {
        // The graph type refuses odd n; the solver checks too.
        assert!(PairGraph::<f64, ()>::from_fn(5, |_, _| (1.0, ())).is_err());
    }

    #[test]
    fn matches_brute_force_on_random_graphs() {
        for n in [2, 4, 6, 8, 10] {
            let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
            for _ in 0..100 {
                let g = random_graph(n, &mut rng);
                let m = min_weight_perfect_matching(&g).unwrap();
                assert_partition(&m, n);
                assert_eq!(m.total, brute_force_matching(&g).unwrap().best.total, "n={n}");
            }
        }
    }

    #[test]
    fn integer_weights_with_many_ties() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for n in [4, 6, 8] {
            for _ in 0..200 {
                let g = PairGraph::<f64, ()>::from_fn(n, |_, _| (f64::from(rng.random_range(0..4u8)), ())).unwrap();
                let m = min_weight_perfect_matching(&g).unwrap();
                assert_partition(&m, n);
                assert_eq!(m.total, brute_force_matching(&g).unwrap().best.total);
            }
        }
    }

    #[test]
    fn works_in_f32() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let g = PairGraph::<f32, ()>::from_fn(8, |_, _| (rng.random_range(0u16..=100) as f32, ())).unwrap();
            let m = min_weight_perfect_matching(&g).unwrap();
            assert_eq!(m.total, brute_force_matching(&g).unwrap().best.total);
        }
    }

    #[test]
    fn deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let g = random_graph(8, &mut rng);
        assert_eq!(min_weight_perfect_matching(&g).unwrap(), min_weight_perfect_matching(&g).unwrap());
    }

    fn weights_strategy() -> impl Strategy<Value = (usize, Vec<f64>)> {
        prop::sample::select(vec![4usize, 6, 8])
            .prop_flat_map(|n| (Just(n), prop::collection::vec(0.0f64..100.0, edge_count(n))))
    }

    proptest! {
        #[test]
        fn scaling_by_power_of_two_scales_total_exactly((n, ws) in weights_strategy(), k in -4i32..6) {
            let lambda = 2f64.powi(k);
            let g = PairGraph::from_edges(n, ws.into_iter().map(|w| (w, ())).collect()).unwrap();
            let scaled = g.map_weights(|w| w * lambda).unwrap();
            let m = min_weight_perfect_matching(&g).unwrap();
            let ms = min_weight_perfect_matching(&scaled).unwrap();
            prop_assert_eq!(ms.total, m.total * lambda);
            prop_assert_eq!(ms.total, brute_force_matching(&scaled).unwrap().best.total);
        }

        #[test]
        fn scaled_result_stays_optimal((n, ws) in weights_strategy(), lambda in 0.01f64..50.0) {
            let g = PairGraph::from_edges(n, ws.into_iter().map(|w| (w, ())).collect()).unwrap();
            let scaled = g.map_weights(|w| w * lambda).unwrap();
            let ms = min_weight_perfect_matching(&scaled).unwrap();
            prop_assert_eq!(ms.total, brute_force_matching(&scaled).unwrap().best.total);
        }

        #[test]
        fn shifted_result_stays_optimal((n, ws) in weights_strategy(), c in 0.0f64..1000.0) {
            let g = PairGraph::from_edges(n, ws.into_iter().map(|w| (w, ())).collect()).unwrap();
            let shifted = g.map_weights(|w| w + c).unwrap();
            let ms = min_weight_perfect_matching(&shifted).unwrap();
            prop_assert_eq!(ms.total, brute_force_matching(&shifted).unwrap().best.total);
            // The same pairs are optimal (up to ties) for the unshifted weights.
            let base = brute_force_matching(&g).unwrap().best.total;
            let unshifted = matching_weight(&g, &ms.pairs);
            prop_assert!((unshifted - base).abs() <= 1e-9 * (1.0 + base));
        }
    }
}
