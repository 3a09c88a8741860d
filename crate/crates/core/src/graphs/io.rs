//! GSEQ v1 text format.
//!
//! ```text
//! GSEQ 1 <n> <N> <binary|weighted>
//! T <t> <m>          # t = 1..n in order, m edge lines follow
//! <i> <j> <w>        # 0-based, i < j < N
//! ```
//! Pairs that are not listed have weight 0.

use std::fmt::Write as _;
use std::path::Path;

use super::{GraphSequence, GraphSnapshot};
use crate::error::{Error, Result};

pub fn read_sequence(path: impl AsRef<Path>) -> Result<GraphSequence> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_sequence(&text)
}

pub fn write_sequence(seq: &GraphSequence, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, render_sequence(seq)).map_err(|e| Error::io(path, e))
}

pub fn render_sequence(seq: &GraphSequence) -> String {
    let mode = if seq.is_binary() { "binary" } else { "weighted" };
    let mut out = format!("GSEQ 1 {} {} {mode}\n", seq.len(), seq.n_nodes());
    for (t, g) in seq.iter().enumerate() {
        let _ = writeln!(out, "T {} {}", t + 1, g.edge_count());
        for (i, j, w) in g.edges() {
            let _ = writeln!(out, "{i} {j} {w}");
        }
    }
    out
}

fn parse_usize(tok: &str, line: usize, what: &str) -> Result<usize> {
    tok.parse::<usize>()
        .map_err(|_| Error::format(line, format!("invalid {what} '{tok}'")))
}

pub fn parse_sequence(text: &str) -> Result<GraphSequence> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());

    let (hline, header) = lines.next().ok_or_else(|| Error::format(1, "missing header"))?;
    let toks: Vec<&str> = header.split_whitespace().collect();
    if toks.len() != 5 || toks[0] != "GSEQ" {
        return Err(Error::format(hline, "missing header"));
    }
    if toks[1] != "1" {
        return Err(Error::format(hline, format!("unsupported GSEQ version '{}'", toks[1])));
    }
    let n = parse_usize(toks[2], hline, "sequence length")?;
    let n_nodes = parse_usize(toks[3], hline, "node count")?;
    if n_nodes == 0 {
        return Err(Error::format(hline, "node count must be positive"));
    }
    let binary = match toks[4] {
        "binary" => true,
        "weighted" => false,
        other => return Err(Error::format(hline, format!("unknown graph mode '{other}'"))),
    };

    let mut snapshots = Vec::with_capacity(n);
    for t in 1..=n {
        let (tl, tline) = lines
            .next()
            .ok_or_else(|| Error::format(hline, format!("expected {n} snapshots, found {}", t - 1)))?;
        let tt: Vec<&str> = tline.split_whitespace().collect();
        if tt.len() != 3 || tt[0] != "T" {
            return Err(Error::format(tl, format!("expected snapshot header 'T {t} <m>'")));
        }
        if parse_usize(tt[1], tl, "snapshot index")? != t {
            return Err(Error::format(tl, format!("snapshot index {} out of order, expected {t}", tt[1])));
        }
        let m = parse_usize(tt[2], tl, "edge count")?;
        let mut g = GraphSnapshot::empty(n_nodes).map_err(|e| Error::format(tl, e.to_string()))?;
        let mut seen = std::collections::HashSet::with_capacity(m);
        for _ in 0..m {
            let (el, eline) = lines
                .next()
                .ok_or_else(|| Error::format(tl, format!("snapshot {t}: expected {m} edge lines")))?;
            let et: Vec<&str> = eline.split_whitespace().collect();
            if et.len() != 3 {
                return Err(Error::format(el, "expected '<i> <j> <w>'"));
            }
            let i = parse_usize(et[0], el, "node index")?;
            let j = parse_usize(et[1], el, "node index")?;
            if i >= n_nodes || j >= n_nodes {
                return Err(Error::format(el, format!("node index out of range (N = {n_nodes})")));
            }
            if i >= j {
                return Err(Error::format(el, "edge must satisfy i < j"));
            }
            let w: f64 = et[2]
                .parse()
                .map_err(|_| Error::format(el, format!("invalid weight '{}'", et[2])))?;
            if !w.is_finite() {
                return Err(Error::format(el, "non-finite weight"));
            }
            if binary && w != 0.0 && w != 1.0 {
                return Err(Error::format(el, format!("weight {w} in a binary sequence")));
            }
            if !seen.insert((i, j)) {
                return Err(Error::format(el, format!("duplicate edge ({i},{j})")));
            }
            g.set_weight(i, j, w).map_err(|e| Error::format(el, e.to_string()))?;
        }
        snapshots.push(g);
    }
    if let Some((l, _)) = lines.next() {
        return Err(Error::format(l, "trailing content after last snapshot"));
    }
    GraphSequence::new(snapshots).map_err(|e| Error::format(hline, e.to_string()))
}
