//! Randomized invariants across the library.

use std::collections::BTreeMap;
use std::sync::Arc;

use proptest::prelude::*;
use treelab::covering::{
    error_ratio, epsilon0, min_error_exact, min_error_local_search, CoveringMatrix, DeltaFunction,
};
use treelab::dist;
use treelab::glauber::{conditional_dist, draw_waking_set};
use treelab::graph::{sample_regular_graph, RegularGraph};
use treelab::kernel::{dobrushin_coefficient, make_potts, spectral_radius, TransitionKernel};
use treelab::local_stats::{
    canonical_ball, dcn_estimate, hausdorff_distance, tv_distance, BallDistribution, CanonicalBall, DcnOptions,
    RootedColoredGraph,
};
use treelab::rng::replica_rng;
use treelab::tree::TruncatedTree;

/// Reversible kernel from a symmetric positive weight matrix:
/// `q(s,t) = w(s,t) / w(s)`, `pi(s) ∝ w(s)`.
fn kernel_from_weights(k: usize, w: &[f64]) -> TransitionKernel<f64> {
    let mut m = vec![vec![0.0; k]; k];
    let mut idx = 0;
    for s in 0..k {
        for t in s..k {
            m[s][t] = w[idx];
            m[t][s] = w[idx];
            idx += 1;
        }
    }
    let rowsum: Vec<f64> = m.iter().map(|r| r.iter().sum()).collect();
    let total: f64 = rowsum.iter().sum();
    let rows = (0..k).map(|s| m[s].iter().map(|x| x / rowsum[s]).collect()).collect();
    TransitionKernel::new(rows, rowsum.iter().map(|r| r / total).collect()).unwrap()
}

fn reversible_kernel(max_k: usize) -> impl Strategy<Value = TransitionKernel<f64>> {
    (2..=max_k).prop_flat_map(|k| {
        prop::collection::vec(0.05f64..1.0, k * (k + 1) / 2).prop_map(move |w| kernel_from_weights(k, &w))
    })
}

fn distribution(n: usize) -> impl Strategy<Value = BallDistribution> {
    prop::collection::vec(0.0f64..1.0, n).prop_map(|w| {
        let total: f64 = w.iter().sum::<f64>() + 1e-9;
        let probs = w
            .iter()
            .enumerate()
            .map(|(i, x)| (CanonicalBall(vec![i as u8]), x / total))
            .collect::<BTreeMap<_, _>>();
        BallDistribution { probs }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn dobrushin_is_relabeling_invariant(kernel in reversible_kernel(4), seed in 0u64..1000, d in 3usize..5) {
        let k = kernel.state_count();
        let mut perm: Vec<usize> = (0..k).collect();
        let mut rng = replica_rng(seed, 0);
        use rand::seq::SliceRandom;
        perm.shuffle(&mut rng);
        let a = dobrushin_coefficient(&kernel, d).unwrap();
        let b = dobrushin_coefficient(&kernel.relabel(&perm).unwrap(), d).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn multi_site_changes_scale_with_dobrushin(kernel in reversible_kernel(3), d in 3usize..5) {
        let k = kernel.state_count();
        let dob = dobrushin_coefficient(&kernel, d).unwrap();
        let total = k.pow(d as u32);
        let decode = |mut i: usize| -> Vec<usize> {
            (0..d).map(|_| { let s = i % k; i /= k; s }).collect()
        };
        for i in 0..total {
            let a = decode(i);
            let la = conditional_dist(&kernel, &a).unwrap();
            for j in i + 1..total {
                let b = decode(j);
                let differ = a.iter().zip(&b).filter(|(x, y)| x != y).count();
                let lb = conditional_dist(&kernel, &b).unwrap();
                prop_assert!(dist::tv(&la, &lb) <= differ as f64 * dob + 1e-12);
            }
        }
    }

    #[test]
    fn spectral_radius_in_unit_interval(kernel in reversible_kernel(6)) {
        let rho = spectral_radius(&kernel);
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&rho));
    }

    #[test]
    fn conditional_law_is_exchangeable(kernel in reversible_kernel(5), omega in prop::collection::vec(0usize..5, 3..5)) {
        let k = kernel.state_count();
        let omega: Vec<usize> = omega.into_iter().map(|s| s % k).collect();
        let law = conditional_dist(&kernel, &omega).unwrap();
        prop_assert!((law.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let mut rotated = omega.clone();
        rotated.rotate_left(1);
        let other = conditional_dist(&kernel, &rotated).unwrap();
        prop_assert!(law.iter().zip(&other).all(|(a, b)| (a - b).abs() < 1e-14));
    }

    #[test]
    fn tv_is_a_metric(a in distribution(5), b in distribution(5), c in distribution(5)) {
        let ab = tv_distance(&a, &b);
        prop_assert!((ab - tv_distance(&b, &a)).abs() < 1e-15);
        prop_assert!(ab <= tv_distance(&a, &c) + tv_distance(&c, &b) + 1e-12);
        prop_assert!(tv_distance(&a, &a) == 0.0);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&ab));
    }

    #[test]
    fn hausdorff_vanishes_only_on_equal_sets(a in distribution(4), b in distribution(4), c in distribution(4)) {
        let x = vec![a.clone(), b.clone()];
        prop_assert_eq!(hausdorff_distance(&x, &[b.clone(), a.clone()]), 0.0);
        let y = vec![a.clone(), b.clone(), c.clone()];
        let h = hausdorff_distance(&x, &y);
        let sep = tv_distance(&c, &a).min(tv_distance(&c, &b));
        prop_assert!((h - sep).abs() < 1e-12);
        prop_assert_eq!(h == 0.0, sep == 0.0);
    }

    #[test]
    fn threshold_certificate_for_generic_matrices(d in 3usize..6, off in 1usize..3) {
        let m = CoveringMatrix::new(vec![vec![d - off, off], vec![off, d - off]]).unwrap();
        let rep = epsilon0(DeltaFunction::for_matrix(&m)).unwrap();
        prop_assert!(rep.epsilon0 > 0.0);
        prop_assert!(rep.certificate_holds());
    }

    #[test]
    fn canonical_code_ignores_vertex_order(seed in 0u64..10_000) {
        let mut rng = replica_rng(seed, 1);
        use rand::Rng;
        use rand::seq::SliceRandom;
        let n = rng.gen_range(2..9);
        let colors: Vec<u32> = (0..n).map(|_| rng.gen_range(0..2)).collect();
        let mut edges: Vec<(usize, usize)> = (1..n).map(|v| (rng.gen_range(0..v), v)).collect();
        for _ in 0..rng.gen_range(0..4) {
            edges.push((rng.gen_range(0..n), rng.gen_range(0..n)));
        }
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        let mut colors2 = vec![0; n];
        for v in 0..n {
            colors2[perm[v]] = colors[v];
        }
        let edges2: Vec<(usize, usize)> = edges.iter().map(|&(a, b)| (perm[b], perm[a])).collect();
        let a = canonical_ball(&RootedColoredGraph::from_edges(0, colors, &edges).unwrap()).unwrap();
        let b = canonical_ball(&RootedColoredGraph::from_edges(perm[0], colors2, &edges2).unwrap()).unwrap();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn delta_bounds_decrease_in_eps() {
    let deltas = [
        DeltaFunction::Dominating { d: 3 },
        DeltaFunction::Bipartite { d: 4 },
        DeltaFunction::Generic { s_count: 3, d: 3, diameter: 2 },
    ];
    for delta in deltas {
        assert!(delta.eval(0.0f64) > 0.0);
        let vals: Vec<f64> = (0..100).map(|i| delta.eval(i as f64 / 200.0)).collect();
        assert!(vals.windows(2).all(|w| w[1] <= w[0]));
    }
}

#[test]
fn potts_in_dobrushin_regime() {
    for d in 3..5 {
        let k = 2 * d + 1;
        let kernel = make_potts(k, 1.0 / k as f64).unwrap();
        assert!(spectral_radius(&kernel) < 1e-10);
        assert!(dobrushin_coefficient(&kernel, d).unwrap() < 1.0 / d as f64);
    }
}

#[test]
fn waking_sets_are_three_separated() {
    let tree = Arc::new(TruncatedTree::build(4, 5).unwrap());
    for seed in 0..100 {
        let mut rng = replica_rng(seed, 0);
        let (_, set) = draw_waking_set(&tree, &mut rng);
        let m: Vec<usize> = set.members().collect();
        for (i, &a) in m.iter().enumerate() {
            for &b in &m[i + 1..] {
                assert!(tree.distance(a, b) >= 3);
            }
        }
    }
}

#[test]
fn exact_covering_is_a_lower_bound() {
    let mut rng = replica_rng(42, 0);
    let m2 = CoveringMatrix::bipartite(3);
    let m1 = CoveringMatrix::dominating(3);
    for _ in 0..5 {
        let g = sample_regular_graph(10, 3, true, 10_000, &mut rng).unwrap();
        for m in [&m1, &m2] {
            let exact = min_error_exact(&g, m).unwrap();
            assert_eq!(error_ratio(&g, &exact.witness, m).unwrap(), exact.ratio);
            use rand::Rng;
            for _ in 0..20 {
                let f: Vec<usize> = (0..10).map(|_| rng.gen_range(0..2)).collect();
                assert!(exact.ratio <= error_ratio(&g, &f, m).unwrap());
            }
            let local = min_error_local_search(&g, m, 10, &mut rng).unwrap();
            assert!(local.ratio >= exact.ratio);
        }
    }
}

#[test]
fn local_search_improves_with_restarts() {
    let g = sample_regular_graph(16, 3, true, 10_000, &mut replica_rng(5, 0)).unwrap();
    let m = CoveringMatrix::dominating(3);
    let mut prev = None;
    for restarts in [1, 2, 4, 8] {
        let r = min_error_local_search(&g, &m, restarts, &mut replica_rng(9, 0)).unwrap().ratio;
        if let Some(p) = prev {
            assert!(r <= p);
        }
        prev = Some(r);
    }
}

#[test]
fn dcn_exact_mode_is_symmetric() {
    let a = RegularGraph::from_edges(6, &[(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3), (0, 3), (1, 4), (2, 5)]).unwrap();
    let b = treelab::graph::complete_bipartite(3).unwrap();
    let opts = DcnOptions { r_max: 2, k_max: 2, coloring_budget: 1 << 8, samples: 0, seed: 1 };
    let ab = dcn_estimate(&a, &b, &opts).unwrap();
    let ba = dcn_estimate(&b, &a, &opts).unwrap();
    assert_eq!(ab.value, ba.value);
    assert!(ab.value > 0.0);
    let sampled = dcn_estimate(&a, &b, &DcnOptions { coloring_budget: 1, samples: 16, ..opts }).unwrap();
    assert_eq!(sampled.mode, treelab::local_stats::DcnMode::Estimate);
    assert!((0.0..=1.0).contains(&sampled.value));
}
