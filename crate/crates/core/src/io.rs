//! Text formats: edge lists, heatmaps and number formatting.
//!
//! Edge list: a header line `n <count>`, then one `i j w` line per edge with
//! 0-based indices and the weight written with 12 significant digits.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::graph::ComparisonGraph;

/// Significant digits used for every number written to CSV or edge lists.
pub const SIG_DIGITS: usize = 12;

/// Positional decimal with at least [`SIG_DIGITS`] significant digits.
pub fn fmt_sig(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return format!("{:.*}", SIG_DIGITS - 1, 0.0);
    }
    let magnitude = x.abs().log10().floor() as i64;
    let decimals = (SIG_DIGITS as i64 - 1 - magnitude).clamp(0, 340) as usize;
    format!("{x:.decimals$}")
}

pub fn write_edge_list(graph: &ComparisonGraph) -> String {
    let mut out = format!("n {}\n", graph.n());
    for (&(i, j), &w) in graph.edges().iter().zip(graph.weights()) {
        let _ = writeln!(out, "{i} {j} {}", fmt_sig(w));
    }
    out
}

pub fn read_edge_list(text: &str) -> Result<ComparisonGraph> {
    let mut lines = text
        .lines()
        .map(str::trim)
        .enumerate()
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (_, header) = lines.next().ok_or_else(|| Error::Parse("empty edge list".into()))?;
    let n = match header.split_whitespace().collect::<Vec<_>>()[..] {
        ["n", count] => count
            .parse::<usize>()
            .map_err(|e| Error::Parse(format!("bad node count {count:?}: {e}")))?,
        _ => return Err(Error::Parse(format!("expected header `n <count>`, got {header:?}"))),
    };
    let mut edges = Vec::new();
    for (lineno, line) in lines {
        let fields: Vec<_> = line.split_whitespace().collect();
        let bad = || Error::Parse(format!("line {}: expected `i j w`, got {line:?}", lineno + 1));
        if fields.len() != 3 {
            return Err(bad());
        }
        let i = fields[0].parse::<usize>().map_err(|_| bad())?;
        let j = fields[1].parse::<usize>().map_err(|_| bad())?;
        let w = fields[2].parse::<f64>().map_err(|_| bad())?;
        edges.push((i, j, w));
    }
    ComparisonGraph::from_weighted_edges(n, edges)
}

/// `i,j,w` for every pair `i < j`, zero where there is no edge.
pub fn write_heatmap(graph: &ComparisonGraph) -> String {
    let n = graph.n();
    let mut out = String::from("i,j,w\n");
    for i in 0..n {
        for j in i + 1..n {
            let _ = writeln!(out, "{i},{j},{}", fmt_sig(graph.weight(i, j)));
        }
    }
    out
}
