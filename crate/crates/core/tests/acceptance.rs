//! Acceptance suite: one printed PASS/FAIL line per criterion.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::sync::Arc;
use std::time::Instant;

use num_bigint::BigUint;
use num_rational::Ratio;
use rand::Rng;
use treelab::covering::{
    dominating_table, epsilon0, min_error_exact, min_error_local_search, CoveringMatrix, DeltaFunction,
};
use treelab::entropy::{bmc_entropy_report, check_edge_vertex, expander_counterexample, Verdict};
use treelab::glauber::{
    conditional_dist, converge_from_iid, draw_waking_set, estimate_hamming_decay, fixed_point_test,
    maximal_coupling, RunSpec,
};
use treelab::graph::{
    complete_bipartite, complete_graph, for_each_perfect_matching, matching_color_count, matching_pair_law,
    sample_regular_graph, PairLaw, DEFAULT_RETRY_BUDGET,
};
use treelab::kernel::{
    dobrushin_coefficient, make_ising, make_potts, make_uniform, make_walk_kernel, spectral_radius,
    TransitionKernel,
};
use treelab::local_stats::{ball_distribution, dcn_estimate, tv_distance, DcnMode, DcnOptions};
use treelab::rng::replica_rng;
use treelab::tree::{classify_cordec, estimate_correlation, CordecVerdict, Pattern, TruncatedTree};
use treelab::{dist, Error};

/// Criteria that cannot pass as literally stated; each is explained in
/// its printed line and still reported as FAIL.
const KNOWN_UNATTAINABLE: &[usize] = &[4];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn c1_epsilon_table() -> Outcome {
    let start = Instant::now();
    let expected = [(3, 4.38e-5), (4, 6.15e-7), (5, 4.47e-9), (6, 2.08e-11)];
    let mut ok = true;
    let mut got = Vec::new();
    for (d, want) in expected {
        let rep = epsilon0(DeltaFunction::Dominating { d }).unwrap();
        ok &= (rep.epsilon0 / want - 1.0).abs() < 0.02 && rep.certificate_holds();
        got.push(format!("d={d}: {:.3e}", rep.epsilon0));
    }
    let elapsed = start.elapsed().as_secs_f64();
    ok &= elapsed < 1.0;
    outcome(ok, format!("{} in {elapsed:.3}s", got.join(", ")))
}

fn c2_dominating_bound() -> Outcome {
    let row = &dominating_table(3, 3).unwrap()[0];
    let printed = format!("{:.7}", row.ratio_bound);
    outcome(printed == "0.2500438", format!("1/4 + eps0 = {printed}"))
}

fn c3_dobrushin() -> Outcome {
    let ising = dobrushin_coefficient(&make_ising(0.2f64).unwrap(), 3).unwrap();
    let uniform = (2..6)
        .map(|k| dobrushin_coefficient(&make_uniform::<f64>(k).unwrap(), 3).unwrap())
        .fold(0.0f64, f64::max);
    outcome(
        (ising - 0.2).abs() < 1e-12 && uniform < 1e-12,
        format!("ising(0.2), d=3: {ising:.15}; uniform kernels: max {uniform:e}"),
    )
}

fn c4_potts_spectral() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut worst_at = (0, 0.0);
    let mut true_formula: f64 = 0.0;
    for k in 2..=9 {
        for i in 0..=10 {
            let p = i as f64 / 10.0;
            let rho = spectral_radius(&make_potts(k, p).unwrap());
            let stated = (1.0 - p * k as f64 / (k as f64 - 1.0)).abs();
            let exact = (p * k as f64 - 1.0).abs() / (k as f64 - 1.0);
            true_formula = true_formula.max((rho - exact).abs());
            if (rho - stated).abs() > worst {
                worst = (rho - stated).abs();
                worst_at = (k, p);
            }
        }
    }
    outcome(
        worst < 1e-10,
        format!(
            "max |rho - |1 - pk/(k-1)|| = {worst:.4} at (k, p) = {worst_at:?}; the kernel stays with probability p, \
             whose radius is |pk - 1|/(k-1) (max deviation {true_formula:.1e}); the stated formula holds for the \
             move-with-probability-p parametrization"
        ),
    )
}

fn c5_fixed_point() -> Outcome {
    let kernel = make_ising(0.25f64).unwrap();
    let spec = RunSpec { d: 3, depth: 8, sweeps: 50, replicas: 10_000, seed: 0, window: None };
    let start = Instant::now();
    let rep = fixed_point_test(&kernel, spec).unwrap();
    let mut ok = true;
    let mut parts = Vec::new();
    for c in &rep.checks {
        if matches!(c.pattern, Pattern::Vertex | Pattern::Edge) {
            ok &= c.cells_within_3_sigma();
        }
        parts.push(format!("{:?}: max|z| = {:.2}, tv {:.1e} vs floor {:.1e}", c.pattern, c.max_abs_z, c.tv, c.noise_floor));
    }
    outcome(
        ok,
        format!("window depth {}, {} in {:.1}s", rep.window_depth, parts.join(", "), start.elapsed().as_secs_f64()),
    )
}

fn c6_contraction() -> Outcome {
    let kernel = make_ising(0.25f64).unwrap();
    let spec = RunSpec { d: 3, depth: 8, sweeps: 200, replicas: 1000, seed: 20_240_502, window: None };
    let decay = estimate_hamming_decay(&kernel, spec).unwrap();
    let fit = decay.fit.clone().expect("enough points to fit");
    let bound = decay.predicted_rate + 0.02;
    let first = decay.curve[0].mean_distance;
    let last_decay = decay.curve.last().unwrap().mean_distance;
    let conv = converge_from_iid(&kernel, RunSpec { seed: 20_240_503, ..spec }).unwrap();
    let last = conv.curve.last().unwrap();
    let ok = fit.rate <= bound && last_decay < first && last.mean_distance < 0.01;
    outcome(
        ok,
        format!(
            "fitted rate {:.4} (95% CI {:.4}..{:.4}) <= {:.4}; distance from iid after 200 sweeps {:.4} +- {:.4} (window depth {})",
            fit.rate, fit.ci_low, fit.ci_high, bound, last.mean_distance, last.stderr, conv.window_depth
        ),
    )
}

fn c7_counterexample() -> Outcome {
    let mut rng = replica_rng(20_240_507, 0);
    let mut ok = true;
    let mut parts = Vec::new();
    for (k, want) in [(70, Verdict::Fails), (60, Verdict::Passes)] {
        let graph = sample_regular_graph(k, 4, true, DEFAULT_RETRY_BUDGET, &mut rng).unwrap();
        let walk = make_walk_kernel::<f64>(&graph).unwrap();
        let report = bmc_entropy_report(&walk, 3).unwrap();
        let verdict = check_edge_vertex(&report, 3).verdict;
        let arith = expander_counterexample(k, 4, 3).unwrap();
        ok &= verdict == want && arith.nontypical == (want == Verdict::Fails);
        parts.push(format!("k={k}: {:.4} vs {:.4} {:?}", arith.lhs, arith.rhs, verdict));
    }
    outcome(ok, parts.join("; "))
}

/// Colorings of `n` points with `counts[c]` points of color `c`, counted
/// by enumerating all `2^n` colorings.
fn brute_colorings_with_counts(n: usize, counts: &[usize]) -> BigUint {
    let hits = (0..1usize << n)
        .filter(|mask| {
            let ones = mask.count_ones() as usize;
            [n - ones, ones] == counts[..]
        })
        .count();
    BigUint::from(hits)
}

/// Endpoint colorings of the fixed matching `{0,1}, {2,3}, ...` whose
/// directed-edge law equals `nu`.
fn brute_edge_colorings(n: usize, nu: &PairLaw) -> BigUint {
    let partner: Vec<usize> = (0..n).map(|i| i ^ 1).collect();
    let hits = (0..1usize << n)
        .filter(|mask| {
            let f: Vec<usize> = (0..n).map(|i| (mask >> i) & 1).collect();
            matching_pair_law(&f, 2, &partner) == *nu
        })
        .count();
    BigUint::from(hits)
}

fn c8_matching_identity() -> Outcome {
    let mut checked = 0;
    let mut ok = true;
    for n in [4usize, 6] {
        let mut matchings = 0u64;
        for_each_perfect_matching(n, |_| matchings += 1);
        let pm = BigUint::from(matchings);
        // every (mu, nu) produced by some coloring and some matching
        let mut achievable: BTreeMap<(Vec<usize>, PairLaw), Vec<usize>> = BTreeMap::new();
        for mask in 0..1usize << n {
            let f: Vec<usize> = (0..n).map(|i| (mask >> i) & 1).collect();
            let ones = f.iter().sum::<usize>();
            let mu = vec![n - ones, ones];
            for_each_perfect_matching(n, |partner| {
                achievable.entry((mu.clone(), matching_pair_law(&f, 2, partner))).or_insert_with(|| f.clone());
            });
        }
        for ((mu, nu), f) in &achievable {
            let lhs = matching_color_count(f, nu).unwrap() * brute_colorings_with_counts(n, mu);
            let rhs = &pm * brute_edge_colorings(n, nu);
            ok &= lhs == rhs && lhs > BigUint::from(0u32);
            checked += 1;
        }
    }
    outcome(ok, format!("{checked} achievable (mu, nu) pairs at n = 4, 6 satisfy the identity exactly"))
}

fn c9_covering() -> Outcome {
    let m2 = CoveringMatrix::bipartite(3);
    let k33 = complete_bipartite(3).unwrap();
    let k4 = complete_graph(4).unwrap();
    let exact33 = min_error_exact(&k33, &m2).unwrap().ratio;
    let exact4 = min_error_exact(&k4, &m2).unwrap().ratio;
    let mut rng = replica_rng(20_240_509, 0);
    let local33 = min_error_local_search(&k33, &m2, 20, &mut rng).unwrap().ratio;
    let local4 = min_error_local_search(&k4, &m2, 20, &mut rng).unwrap().ratio;
    let ok = exact33 == Ratio::from_integer(0) && exact4 == Ratio::new(3, 4) && local33 == exact33 && local4 == exact4;
    outcome(ok, format!("c(K33, M2) = {exact33} (local {local33}); c(K4, M2) = {exact4} (local {local4})"))
}

fn c10_correlation() -> Outcome {
    let pm = [1.0, -1.0];
    let strong = classify_cordec(&make_ising(0.8f64).unwrap(), 3, &pm, 200).unwrap();
    let weak = classify_cordec(&make_ising(0.3f64).unwrap(), 4, &pm, 200).unwrap();
    let est = estimate_correlation(&make_ising(0.5f64).unwrap(), 2, &pm, 100_000, 20_240_510).unwrap();
    let ok = matches!(strong, CordecVerdict::Violates { witness: 15, .. })
        && weak == CordecVerdict::Consistent { k_max: 200 }
        && est.within(0.25, 3.0);
    outcome(
        ok,
        format!("theta=0.8, d=3: {strong:?}; theta=0.3, d=4: {weak:?}; sampled corr {:.4} +- {:.4}", est.mean, est.stderr),
    )
}

fn c11_local_stats() -> Outcome {
    let mut rng = replica_rng(20_240_511, 0);
    let g = sample_regular_graph(100, 3, true, DEFAULT_RETRY_BUDGET, &mut rng).unwrap();
    // swap two vertex-disjoint edges
    let slots = g.pairing().len();
    let h = loop {
        let s1 = rng.gen_range(0..slots);
        let s2 = rng.gen_range(0..slots);
        let ends = |s: usize| [s / 3, g.pairing()[s] as usize / 3];
        let (a, b) = (ends(s1), ends(s2));
        if a.iter().any(|x| b.contains(x)) {
            continue;
        }
        let h = g.swap_edges(s1, s2).unwrap();
        if h.is_simple() {
            break h;
        }
    };
    let bound = 2.0 * 4.0 / 100.0 * 4.0;
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let f: Vec<usize> = (0..100).map(|_| rng.gen_range(0..2)).collect();
        let tv = tv_distance(&ball_distribution(&g, &f, 1).unwrap(), &ball_distribution(&h, &f, 1).unwrap());
        worst = worst.max(tv);
    }
    let k4 = complete_graph(4).unwrap();
    let relabeled = treelab::graph::RegularGraph::from_edges(4, &[(1, 3), (2, 3), (0, 3), (0, 2), (1, 2), (0, 1)]).unwrap();
    let opts = DcnOptions { r_max: 2, k_max: 2, coloring_budget: 1 << 12, samples: 0, seed: 0 };
    let dcn = dcn_estimate(&k4, &relabeled, &opts).unwrap();
    let ok = worst <= bound && dcn.mode == DcnMode::Exact && dcn.value == 0.0;
    outcome(ok, format!("max TV over 100 colorings {worst:.3} <= {bound:.2}; d_CN of isomorphic K4 copies {}", dcn.value))
}

fn c12_properties() -> Outcome {
    let mut rng = replica_rng(20_240_512, 0);
    let mut notes = Vec::new();
    // waking sets are 3-separated on every draw
    let tree = Arc::new(TruncatedTree::build(3, 7).unwrap());
    let mut separated = true;
    for _ in 0..200 {
        let (_, set) = draw_waking_set(&tree, &mut rng);
        let members: Vec<usize> = set.members().collect();
        for (i, &a) in members.iter().enumerate() {
            separated &= members[i + 1..].iter().all(|&b| tree.distance(a, b) >= 3);
        }
    }
    notes.push(format!("3-separation over 200 draws: {separated}"));
    // maximal coupling disagreement frequency matches exact TV
    let mut coupling_ok = true;
    for _ in 0..10 {
        let mut p: Vec<f64> = (0..4).map(|_| rng.gen::<f64>()).collect();
        let mut q: Vec<f64> = (0..4).map(|_| rng.gen::<f64>()).collect();
        let (sp, sq) = (p.iter().sum::<f64>(), q.iter().sum::<f64>());
        p.iter_mut().for_each(|x| *x /= sp);
        q.iter_mut().for_each(|x| *x /= sq);
        let tv = dist::tv(&p, &q);
        let n = 20_000;
        let diff = (0..n).filter(|_| {
            let (x, y) = maximal_coupling(&p, &q, &mut rng).unwrap();
            x != y
        });
        let freq = diff.count() as f64 / n as f64;
        let sigma = (tv * (1.0 - tv) / n as f64).sqrt();
        coupling_ok &= (freq - tv).abs() <= 3.0 * sigma.max(1e-12);
    }
    notes.push(format!("coupling disagreement within 3 sigma: {coupling_ok}"));
    // conditional laws are normalized and symmetric in the neighbors
    let kernel = make_potts(4, 0.4f64).unwrap();
    let mut cond_ok = true;
    for _ in 0..200 {
        let omega: Vec<usize> = (0..3).map(|_| rng.gen_range(0..4)).collect();
        let law = conditional_dist(&kernel, &omega).unwrap();
        cond_ok &= (law.iter().sum::<f64>() - 1.0).abs() < 1e-12;
        let mut rev = omega.clone();
        rev.reverse();
        let law2 = conditional_dist(&kernel, &rev).unwrap();
        cond_ok &= law.iter().zip(&law2).all(|(a, b)| (a - b).abs() < 1e-15);
    }
    notes.push(format!("conditional laws normalized and permutation invariant: {cond_ok}"));
    // a doubly stochastic but irreversible kernel is rejected
    let cyclic = vec![vec![0.5, 0.5, 0.0], vec![0.0, 0.5, 0.5], vec![0.5, 0.0, 0.5]];
    let rejected = matches!(
        TransitionKernel::<f64>::new(cyclic.clone(), vec![1.0 / 3.0; 3]),
        Err(Error::InvalidKernel(_))
    ) && TransitionKernel::<f64>::from_rows(cyclic).is_err();
    notes.push(format!("irreversible kernel rejected: {rejected}"));
    outcome(separated && coupling_ok && cond_ok && rejected, notes.join("; "))
}

#[test]
fn acceptance() {
    let criteria: Vec<(usize, &str, fn() -> Outcome)> = vec![
        (1, "epsilon0 table for the dominating matrix", c1_epsilon_table),
        (2, "dominating ratio bound for d=3", c2_dominating_bound),
        (3, "Dobrushin coefficient", c3_dobrushin),
        (4, "Potts spectral radius formula", c4_potts_spectral),
        (5, "Glauber fixed point", c5_fixed_point),
        (6, "Glauber contraction and convergence", c6_contraction),
        (7, "entropy counterexample", c7_counterexample),
        (8, "perfect matching counting identity", c8_matching_identity),
        (9, "covering minima", c9_covering),
        (10, "correlation classifier", c10_correlation),
        (11, "local statistics", c11_local_stats),
        (12, "property suites", c12_properties),
    ];
    let mut unexpected = BTreeSet::new();
    for (id, name, run) in criteria {
        let o = run();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        // written to the raw handle so the lines show even when output is captured
        let _ = writeln!(std::io::stderr(), "criterion {id:>2} [{tag}] {name}: {}", o.detail);
        if !o.pass && !KNOWN_UNATTAINABLE.contains(&id) {
            unexpected.insert(id);
        }
    }
    assert!(unexpected.is_empty(), "failing criteria: {unexpected:?}");
}
