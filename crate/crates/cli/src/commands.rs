use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use num_rational::Ratio;
use rayon::prelude::*;
use serde_json::{json, Value};
use treelab::covering::{
    epsilon0, error_ratio, min_error_exact, min_error_local_search, CoveringMatrix, DeltaFunction,
    ThresholdReport,
};
use treelab::entropy::{bmc_entropy_report, check_edge_vertex, expander_counterexample};
use treelab::glauber::{converge_from_iid, curve_csv, estimate_hamming_decay, fixed_point_test, RunSpec};
use treelab::graph::{
    adjacency_spectrum, coloring_count, color_counts, edge_coloring_count, eigen_experiment,
    for_each_perfect_matching, girth_profile, matching_color_count, matching_pair_law, pm_count,
    sample_regular_graph, Levels, PairLaw, RegularGraph, MAX_MATCHING_POINTS,
};
use treelab::kernel::{dobrushin_coefficient, make_walk_kernel, spectral_radius};
use treelab::local_stats::{dcn_estimate, DcnOptions};
use treelab::rng::replica_rng;
use treelab::stats::Estimate;
use treelab::tree::{classify_cordec, cordec_bound, estimate_correlation, exact_correlation, sample_bmc, TruncatedTree};

use crate::inputs::{
    check_input, check_output, load_graph, parse_encoding, parse_kernel, parse_matrix, write_file,
};
use crate::{CliError, Command, DynamicsArgs};

pub enum Output {
    Json(Value),
    Text(String),
}

type Res = Result<Output, CliError>;

fn ok(v: Value) -> Res {
    Ok(Output::Json(v))
}

fn estimate_json(e: Estimate) -> Value {
    json!({ "mean": e.mean, "stderr": e.stderr })
}

fn ratio_string(r: Ratio<usize>) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

fn ratio_f64(r: Ratio<usize>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

pub fn run(cmd: Command) -> Res {
    match cmd {
        Command::Dobrushin { kernel, d } => {
            let k = parse_kernel(&kernel)?;
            let dob = dobrushin_coefficient(&k, d)?;
            ok(json!({
                "command": "dobrushin",
                "kernel": kernel,
                "d": d,
                "dobrushin": dob,
                "d_times_dobrushin": d as f64 * dob,
                "contracting": (d as f64) * dob < 1.0,
            }))
        }
        Command::Spectral { kernel } => {
            let k = parse_kernel(&kernel)?;
            ok(json!({
                "command": "spectral",
                "kernel": kernel,
                "states": k.state_count(),
                "spectral_radius": spectral_radius(&k),
            }))
        }
        Command::BmcSample { kernel, d, depth, seed, replicas, out } => {
            bmc_sample(&kernel, d, depth, seed, replicas, out.as_deref())
        }
        Command::Correlation { kernel, d, encoding, k_max, distance, seed, replicas } => {
            correlation(&kernel, d, &encoding, k_max, distance, seed, replicas)
        }
        Command::GlauberFixedPoint { run } => {
            let k = parse_kernel(&run.kernel)?;
            let report = fixed_point_test(&k, spec(&run))?;
            ok(json!({ "command": "glauber-fixed-point", "kernel": run.kernel, "report": report }))
        }
        Command::GlauberContraction { run, csv } => {
            check_output(&csv)?;
            let k = parse_kernel(&run.kernel)?;
            let report = estimate_hamming_decay(&k, spec(&run))?;
            if let Some(path) = &csv {
                write_file(path, &curve_csv(&report.curve))?;
            }
            ok(json!({ "command": "glauber-contraction", "kernel": run.kernel, "report": report }))
        }
        Command::GlauberConverge { run, csv, out } => {
            check_output(&csv)?;
            check_output(&out)?;
            let k = parse_kernel(&run.kernel)?;
            let report = converge_from_iid(&k, spec(&run))?;
            if let Some(path) = &csv {
                write_file(path, &curve_csv(&report.curve))?;
            }
            if let (Some(path), Some(sample)) = (&out, &report.sample) {
                write_file(path, &sample.dump())?;
            }
            ok(json!({ "command": "glauber-converge", "kernel": run.kernel, "report": report }))
        }
        Command::EntropyCheck { kernel, d } => {
            let k = parse_kernel(&kernel)?;
            let report = bmc_entropy_report(&k, d)?;
            ok(json!({ "command": "entropy-check", "kernel": kernel, "report": report }))
        }
        Command::Counterexample { k, q_deg, d, seed } => {
            let arith = expander_counterexample(k, q_deg, d)?;
            let mut out = json!({ "command": "counterexample", "report": arith });
            if let Some(seed) = seed {
                let graph =
                    sample_regular_graph(k, q_deg, true, treelab::graph::DEFAULT_RETRY_BUDGET, &mut replica_rng(seed, 0))?;
                let walk = make_walk_kernel::<f64>(&graph)?;
                let report = bmc_entropy_report(&walk, d)?;
                out["sampled"] = json!({
                    "seed": seed,
                    "replicas": 1,
                    "walk_spectral_radius": spectral_radius(&walk),
                    "edge_vertex": check_edge_vertex(&report, d),
                    "entropy": report,
                });
            }
            ok(out)
        }
        Command::GraphSample { n, d, seed, replicas, multigraph, retry_budget, cycle_len, spectrum, out } => {
            graph_sample(n, d, seed, replicas, !multigraph, retry_budget, cycle_len, spectrum, out.as_deref())
        }
        Command::EntlemCheck { n, k } => entlem_check(n, k),
        Command::EigenQuantize { graph, n, d, which, levels, tolerance, seed, replicas } => {
            eigen_quantize(graph.as_deref(), n, d, which, &levels, tolerance, seed, replicas)
        }
        Command::LocalDistance { graph1, graph2, r_max, k_max, coloring_budget, samples, seed, csv } => {
            check_output(&csv)?;
            let g1 = load_graph(&graph1)?;
            let g2 = load_graph(&graph2)?;
            let sampled = (1..=k_max)
                .any(|k| [g1.n(), g2.n()].iter().any(|&n| (k as f64).powi(n as i32) > coloring_budget as f64));
            let seed = match (sampled, seed) {
                (true, None) => {
                    return Err(CliError::Usage(
                        "colorings exceed --coloring-budget; sampling needs --seed".into(),
                    ))
                }
                (_, s) => s.unwrap_or(0),
            };
            if sampled && samples == 0 {
                return Err(CliError::Usage("--samples must be positive when sampling".into()));
            }
            let opts = DcnOptions { r_max, k_max, coloring_budget, samples, seed };
            let report = dcn_estimate(&g1, &g2, &opts)?;
            if let Some(path) = &csv {
                let mut text = String::from("k,r,hausdorff,exact\n");
                for t in &report.terms {
                    text.push_str(&format!("{},{},{},{}\n", t.k, t.r, t.hausdorff, t.exact));
                }
                write_file(path, &text)?;
            }
            let mut out = json!({ "command": "local-distance", "report": report });
            if sampled {
                out["seed"] = json!(seed);
                out["replicas"] = json!(samples);
            }
            ok(out)
        }
        Command::CoveringMin { graph, matrix, local_search, restarts, seed } => {
            covering_min(&graph, &matrix, local_search, restarts, seed)
        }
        Command::Epsilon0 { family, d, matrix, csv } => epsilon0_cmd(family.as_deref(), d, matrix.as_deref(), csv),
        Command::DominatingTable { from, to, csv, text } => {
            check_output(&csv)?;
            if from < 3 || to < from {
                return Err(CliError::Usage("need 3 <= --from <= --to".into()));
            }
            let rows = treelab::covering::dominating_table(from, to)?;
            if let Some(path) = &csv {
                write_file(path, &treelab::covering::dominating_table_csv(&rows))?;
            }
            if text {
                return Ok(Output::Text(treelab::covering::dominating_table_text(&rows)));
            }
            ok(json!({ "command": "dominating-table", "rows": rows }))
        }
    }
}

fn spec(run: &DynamicsArgs) -> RunSpec {
    RunSpec {
        d: run.d,
        depth: run.depth,
        sweeps: run.sweeps,
        replicas: run.replicas,
        seed: run.seed,
        window: run.window,
    }
}

fn bmc_sample(kernel: &str, d: usize, depth: usize, seed: u64, replicas: usize, out: Option<&Path>) -> Res {
    check_output(&out.map(Path::to_path_buf))?;
    if replicas == 0 {
        return Err(CliError::Usage("--replicas must be positive".into()));
    }
    let k = parse_kernel(kernel)?;
    let tree = Arc::new(TruncatedTree::build(d, depth)?);
    let states = k.state_count();
    // per-replica empirical state frequencies over the whole tree
    let freqs: Vec<Vec<f64>> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let cfg = sample_bmc(&k, &tree, &mut replica_rng(seed, r as u64));
            let mut f = vec![0.0; states];
            cfg.states().iter().for_each(|&s| f[s] += 1.0 / tree.len() as f64);
            f
        })
        .collect();
    if let Some(path) = out {
        write_file(path, &sample_bmc(&k, &tree, &mut replica_rng(seed, 0)).dump())?;
    }
    let marginal: Vec<Value> = (0..states)
        .map(|s| {
            let xs: Vec<f64> = freqs.iter().map(|f| f[s]).collect();
            let e = Estimate::from_samples(&xs);
            json!({ "state": s, "pi": k.pi()[s], "mean": e.mean, "stderr": e.stderr })
        })
        .collect();
    ok(json!({
        "command": "bmc-sample",
        "kernel": kernel,
        "d": d,
        "depth": depth,
        "vertices": tree.len(),
        "seed": seed,
        "replicas": replicas,
        "state_frequencies": marginal,
    }))
}

fn correlation(
    kernel: &str,
    d: usize,
    encoding: &str,
    k_max: usize,
    distance: Option<usize>,
    seed: Option<u64>,
    replicas: usize,
) -> Res {
    let k = parse_kernel(kernel)?;
    let enc = parse_encoding(encoding)?;
    let verdict = classify_cordec(&k, d, &enc, k_max)?;
    let mut out = json!({
        "command": "correlation",
        "kernel": kernel,
        "d": d,
        "encoding": enc,
        "cordec": verdict,
    });
    match (distance, seed) {
        (None, Some(_)) => return Err(CliError::Usage("--seed needs --distance".into())),
        (Some(dist), _) => {
            out["distance"] = json!(dist);
            out["exact"] = json!(exact_correlation(&k, &enc, dist)?);
            out["bound"] = json!(cordec_bound(dist, d));
            if let Some(seed) = seed {
                let est = estimate_correlation(&k, dist, &enc, replicas, seed)?;
                out["seed"] = json!(seed);
                out["replicas"] = json!(replicas);
                out["estimate"] = estimate_json(est);
            }
        }
        (None, None) => {}
    }
    ok(out)
}

#[allow(clippy::too_many_arguments)]
fn graph_sample(
    n: usize,
    d: usize,
    seed: u64,
    replicas: usize,
    simple: bool,
    retry_budget: usize,
    cycle_len: usize,
    spectrum: bool,
    out: Option<&Path>,
) -> Res {
    check_output(&out.map(Path::to_path_buf))?;
    if replicas == 0 {
        return Err(CliError::Usage("--replicas must be positive".into()));
    }
    let graphs: Vec<RegularGraph> = (0..replicas)
        .into_par_iter()
        .map(|r| sample_regular_graph(n, d, simple, retry_budget, &mut replica_rng(seed, r as u64)))
        .collect::<treelab::Result<_>>()?;
    if let Some(path) = out {
        write_file(path, &graphs[0].to_text())?;
    }
    let per = |f: &(dyn Fn(&RegularGraph) -> f64 + Sync)| {
        let xs: Vec<f64> = graphs.par_iter().map(f).collect();
        estimate_json(Estimate::from_samples(&xs))
    };
    let mut report = json!({
        "command": "graph-sample",
        "n": n,
        "d": d,
        "simple_requested": simple,
        "seed": seed,
        "replicas": replicas,
        "simple_fraction": per(&|g| g.is_simple() as u8 as f64),
        "connected_fraction": per(&|g| g.is_connected() as u8 as f64),
        "cycle_len": cycle_len,
        "short_cycle_fraction": per(&|g| girth_profile(g, cycle_len)),
    });
    if spectrum {
        report["walk_spectral_radius"] = per(&|g| {
            let mut ev = adjacency_spectrum(g);
            ev.sort_by(|a, b| b.total_cmp(a));
            ev[1].abs().max(ev[ev.len() - 1].abs()) / d as f64
        });
        report["ramanujan_radius"] = json!(2.0 * ((d - 1) as f64).sqrt() / d as f64);
    }
    ok(report)
}

fn pair_law_strings(nu: &PairLaw) -> Vec<Vec<String>> {
    nu.iter().map(|r| r.iter().map(|x| x.to_string()).collect()).collect()
}

/// Nondecreasing colorings: one per color count vector.
fn sorted_colorings(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(n: usize, k: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        let start = prefix.last().copied().unwrap_or(0);
        for c in start..k {
            prefix.push(c);
            rec(n, k, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, k, &mut Vec::new(), &mut out);
    out
}

fn entlem_check(n: usize, k: usize) -> Res {
    if n == 0 || n % 2 == 1 {
        return Err(CliError::Usage("--n must be positive and even".into()));
    }
    if n > MAX_MATCHING_POINTS {
        return Err(treelab::Error::Budget(format!("n = {n} exceeds the enumeration limit {MAX_MATCHING_POINTS}")).into());
    }
    if k == 0 {
        return Err(CliError::Usage("--k must be positive".into()));
    }
    // every (mu, nu) pair arises from a sorted coloring, since permuting
    // the points maps colorings and matchings onto each other
    let mut pairs: BTreeMap<(Vec<usize>, PairLaw), Vec<usize>> = BTreeMap::new();
    for f in sorted_colorings(n, k) {
        let mu = color_counts(&f, k);
        for_each_perfect_matching(n, |partner| {
            pairs.entry((mu.clone(), matching_pair_law(&f, k, partner))).or_insert_with(|| f.clone());
        });
    }
    let pm = pm_count(n);
    let mut failures = Vec::new();
    for ((mu, nu), f) in &pairs {
        let lhs = matching_color_count(f, nu)? * coloring_count(mu);
        let rhs = &pm * edge_coloring_count(nu, n)?;
        if lhs != rhs {
            failures.push(json!({
                "mu": mu,
                "nu": pair_law_strings(nu),
                "lhs": lhs.to_string(),
                "rhs": rhs.to_string(),
            }));
        }
    }
    ok(json!({
        "command": "entlem-check",
        "n": n,
        "k": k,
        "perfect_matchings": pm.to_string(),
        "pairs_checked": pairs.len(),
        "all_hold": failures.is_empty(),
        "failures": failures,
    }))
}

#[allow(clippy::too_many_arguments)]
fn eigen_quantize(
    graph: Option<&Path>,
    n: Option<usize>,
    d: Option<usize>,
    which: usize,
    levels: &str,
    tolerance: f64,
    seed: u64,
    replicas: usize,
) -> Res {
    let levels = match levels {
        "exact" => Levels::Exact,
        m => Levels::Quantized(
            m.parse().map_err(|_| CliError::Usage(format!("--levels must be a count or \"exact\", got {m:?}")))?,
        ),
    };
    if replicas == 0 {
        return Err(CliError::Usage("--replicas must be positive".into()));
    }
    let fixed = match (graph, n, d) {
        (Some(path), None, None) => Some(load_graph(path)?),
        (None, Some(_), Some(_)) => None,
        _ => return Err(CliError::Usage("give either --graph or both --n and --d".into())),
    };
    let reports = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let mut rng = replica_rng(seed, r as u64);
            let sampled;
            let g = match &fixed {
                Some(g) => g,
                None => {
                    let budget = treelab::graph::DEFAULT_RETRY_BUDGET;
                    sampled = sample_regular_graph(n.unwrap_or(0), d.unwrap_or(0), true, budget, &mut rng)?;
                    &sampled
                }
            };
            eigen_experiment(g, which, levels, tolerance, &mut rng)
        })
        .collect::<treelab::Result<Vec<_>>>()?;
    let ratios: Vec<f64> = reports.iter().map(|r| r.error_ratio).collect();
    ok(json!({
        "command": "eigen-quantize",
        "seed": seed,
        "replicas": replicas,
        "error_ratio": estimate_json(Estimate::from_samples(&ratios)),
        "first": reports[0],
    }))
}

fn covering_min(graph: &Path, matrix: &str, local_search: bool, restarts: usize, seed: Option<u64>) -> Res {
    check_input(graph)?;
    let g = load_graph(graph)?;
    let m = parse_matrix(matrix, g.d())?;
    if m.d() != g.d() {
        return Err(CliError::Usage(format!("matrix row sums {} differ from graph degree {}", m.d(), g.d())));
    }
    if local_search && seed.is_none() {
        return Err(CliError::Usage("--local-search needs --seed".into()));
    }
    if !local_search {
        match min_error_exact(&g, &m) {
            Ok(sol) => {
                return ok(json!({
                    "command": "covering-min",
                    "method": "exact",
                    "value": ratio_f64(sol.ratio),
                    "ratio": ratio_string(sol.ratio),
                    "witness": sol.witness,
                }))
            }
            Err(e) if e.is_budget() && seed.is_some() => {}
            Err(e) => return Err(e.into()),
        }
    }
    let seed = seed.expect("checked above");
    if restarts == 0 {
        return Err(CliError::Usage("--restarts must be positive".into()));
    }
    // one restart per replica stream, so the result ignores thread count
    let runs = (0..restarts)
        .into_par_iter()
        .map(|r| min_error_local_search(&g, &m, 1, &mut replica_rng(seed, r as u64)))
        .collect::<treelab::Result<Vec<_>>>()?;
    let best = runs.iter().min_by_key(|s| s.ratio).expect("restarts > 0");
    debug_assert_eq!(error_ratio(&g, &best.witness, &m).ok(), Some(best.ratio));
    let values: Vec<f64> = runs.iter().map(|s| ratio_f64(s.ratio)).collect();
    ok(json!({
        "command": "covering-min",
        "method": if local_search { "local_search" } else { "local_search_fallback" },
        "value": ratio_f64(best.ratio),
        "ratio": ratio_string(best.ratio),
        "witness": best.witness,
        "seed": seed,
        "replicas": restarts,
        "restart_values": estimate_json(Estimate::from_samples(&values)),
    }))
}

fn epsilon0_cmd(family: Option<&str>, d: Option<usize>, matrix: Option<&Path>, csv: Option<std::path::PathBuf>) -> Res {
    check_output(&csv)?;
    let delta = match (family, matrix) {
        (Some(fam), None) => {
            let d = d.ok_or_else(|| CliError::Usage("--family needs --d".into()))?;
            match fam {
                "dominating" => DeltaFunction::Dominating { d },
                "bipartite" => DeltaFunction::Bipartite { d },
                other => return Err(CliError::Usage(format!("unknown family {other:?}"))),
            }
        }
        (None, Some(path)) => {
            check_input(path)?;
            let m = CoveringMatrix::parse(&crate::inputs::read_file(path)?)?;
            if d.is_some_and(|d| d != m.d()) {
                return Err(CliError::Usage("--d disagrees with the matrix row sums".into()));
            }
            DeltaFunction::for_matrix(&m)
        }
        _ => return Err(CliError::Usage("give exactly one of --family or --matrix".into())),
    };
    let report: ThresholdReport = epsilon0(delta)?;
    if let Some(path) = &csv {
        let mut text = String::from("eps,g\n");
        for (e, g) in &report.scan {
            text.push_str(&format!("{e:e},{g:e}\n"));
        }
        write_file(path, &text)?;
    }
    let eps = report.epsilon0;
    let mut out = json!({
        "command": "epsilon0",
        "family": report.delta_function.name(),
        "d": report.d,
        "epsilon0": eps,
        "epsilon0_3sf": format!("{eps:.2e}"),
        "certificate_holds": report.certificate_holds(),
        "report": report,
    });
    match delta {
        DeltaFunction::Dominating { d } => {
            let bound = 1.0 / (d + 1) as f64 + eps;
            out["dominating_ratio_bound"] = json!(bound);
            out["dominating_ratio_bound_7dp"] = json!(format!("{bound:.7}"));
        }
        DeltaFunction::Bipartite { .. } => {
            out["independence_ratio_bound"] = json!(0.5 - eps);
        }
        DeltaFunction::Generic { .. } => {}
    }
    ok(out)
}
