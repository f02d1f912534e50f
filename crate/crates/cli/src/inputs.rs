//! Parsing of kernel, graph and matrix arguments.
//!
//! A kernel argument is either an inline constructor or a path to a
//! matrix file:
//!
//! ```text
//! ising(THETA)       two-state kernel, keep with probability (1+THETA)/2
//! potts(K,P)         K states, stay with probability P
//! uniform(K)         every row uniform
//! walk(PATH)         simple random walk on the graph stored at PATH
//! PATH               rows of a stochastic matrix, whitespace separated
//! ```

use std::fs;
use std::path::Path;

use treelab::covering::CoveringMatrix;
use treelab::graph::RegularGraph;
use treelab::kernel::{make_ising, make_potts, make_uniform, make_walk_kernel};
use treelab::Kernel;

use crate::CliError;

pub fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))
}

/// Fails early when an output path cannot possibly be created.
pub fn check_output(path: &Option<std::path::PathBuf>) -> Result<(), CliError> {
    if let Some(p) = path {
        let parent = p.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
        if !parent.is_dir() {
            return Err(CliError::Usage(format!("output directory {} does not exist", parent.display())));
        }
    }
    Ok(())
}

pub fn check_input(path: &Path) -> Result<(), CliError> {
    if !path.is_file() {
        return Err(CliError::Usage(format!("input file {} does not exist", path.display())));
    }
    Ok(())
}

fn call<'a>(spec: &'a str, name: &str) -> Option<Vec<&'a str>> {
    let inner = spec.strip_prefix(name)?.strip_prefix('(')?.strip_suffix(')')?;
    Some(inner.split(',').map(str::trim).collect())
}

fn number<T: std::str::FromStr>(tok: &str, what: &str) -> Result<T, CliError> {
    tok.parse().map_err(|_| CliError::Usage(format!("{what}: cannot parse {tok:?}")))
}

fn arity(args: &[&str], n: usize, name: &str) -> Result<(), CliError> {
    if args.len() != n {
        return Err(CliError::Usage(format!("{name}(...) takes {n} argument(s)")));
    }
    Ok(())
}

pub fn parse_kernel(spec: &str) -> Result<Kernel, CliError> {
    let spec = spec.trim();
    if let Some(args) = call(spec, "ising") {
        arity(&args, 1, "ising")?;
        return Ok(make_ising(number::<f64>(args[0], "ising theta")?)?);
    }
    if let Some(args) = call(spec, "potts") {
        arity(&args, 2, "potts")?;
        return Ok(make_potts(number(args[0], "potts k")?, number::<f64>(args[1], "potts p")?)?);
    }
    if let Some(args) = call(spec, "uniform") {
        arity(&args, 1, "uniform")?;
        return Ok(make_uniform(number(args[0], "uniform k")?)?);
    }
    if let Some(args) = call(spec, "walk") {
        arity(&args, 1, "walk")?;
        let graph = load_graph(Path::new(args[0]))?;
        return Ok(make_walk_kernel(&graph)?);
    }
    let path = Path::new(spec);
    if !path.is_file() {
        return Err(CliError::Usage(format!("{spec:?} is neither an inline kernel nor a readable file")));
    }
    Ok(Kernel::parse(&read_file(path)?)?)
}

pub fn load_graph(path: &Path) -> Result<RegularGraph, CliError> {
    check_input(path)?;
    Ok(RegularGraph::parse(&read_file(path)?)?)
}

/// `dominating`, `bipartite`, or a matrix file. Presets take `d` from the
/// caller.
pub fn parse_matrix(spec: &str, d: usize) -> Result<CoveringMatrix, CliError> {
    match spec {
        "dominating" => Ok(CoveringMatrix::dominating(d)),
        "bipartite" => Ok(CoveringMatrix::bipartite(d)),
        path => {
            let path = Path::new(path);
            check_input(path)?;
            Ok(CoveringMatrix::parse(&read_file(path)?)?)
        }
    }
}

pub fn parse_encoding(spec: &str) -> Result<Vec<f64>, CliError> {
    spec.split(',').map(|t| number(t.trim(), "encoding")).collect()
}
