//! Text formats.
//!
//! `idbpp v1` instance files:
//!
//! ```text
//! #idbpp v1 m=2 n=3
//! 1	0	0,1
//! 2	-	1,2
//! ```
//!
//! Each body line is the 1-based character index, the lower list and the
//! upper list, tab separated. A list is `-` when empty, otherwise strictly
//! ascending comma-separated species in `[0, n)`.
//!
//! Solution files hold one phylogeny per line, its `m` sets as tab-separated
//! lists in the same encoding, sorted by [`canonical_key`]. With `m = 0` the
//! single phylogeny is an empty line.
//!
//! `bigraph v1` files start with `#bigraph v1 a=<a> b=<b>` followed by one
//! `u<TAB>v` edge per line.

#![allow(clippy::tabs_in_doc_comments)]

use std::fmt::Write as _;

use crate::reductions::BipartiteGraph;
use crate::{canonical_key, ElementSet, Error, Instance, Phylogeny, Result};

pub fn write_list(set: &ElementSet) -> String {
    if set.is_empty() {
        return "-".to_string();
    }
    let mut out = String::new();
    for (k, e) in set.iter().enumerate() {
        if k > 0 {
            out.push(',');
        }
        let _ = write!(out, "{e}");
    }
    out
}

pub fn parse_list(text: &str, n: usize, line: usize) -> Result<ElementSet> {
    let mut set = ElementSet::new(n);
    if text == "-" {
        return Ok(set);
    }
    let mut prev: Option<usize> = None;
    for part in text.split(',') {
        let e: usize = part
            .parse()
            .map_err(|_| Error::parse(line, format!("bad species index {part:?}")))?;
        if e >= n {
            return Err(Error::parse(line, format!("species {e} out of range (n = {n})")));
        }
        if prev.is_some_and(|p| p >= e) {
            return Err(Error::parse(line, "species list not strictly ascending"));
        }
        prev = Some(e);
        set.insert(e);
    }
    Ok(set)
}

fn header_fields<'a>(line: &'a str, tag: &str, keys: [&str; 2]) -> Option<[&'a str; 2]> {
    let rest = line.strip_prefix(tag)?;
    let mut parts = rest.split(' ');
    if !parts.next()?.is_empty() {
        return None;
    }
    let mut out = [""; 2];
    for (slot, key) in out.iter_mut().zip(keys) {
        *slot = parts.next()?.strip_prefix(key)?.strip_prefix('=')?;
    }
    parts.next().is_none().then_some(out)
}

fn parse_header_numbers(line: &str, tag: &str, keys: [&str; 2]) -> Result<[usize; 2]> {
    let bad = || {
        Error::parse(
            1,
            format!("expected header `{tag} {}=<int> {}=<int>`", keys[0], keys[1]),
        )
    };
    let fields = header_fields(line, tag, keys).ok_or_else(bad)?;
    let a = fields[0].parse().map_err(|_| bad())?;
    let b = fields[1].parse().map_err(|_| bad())?;
    Ok([a, b])
}

pub fn write_instance(inst: &Instance) -> String {
    let mut out = format!("#idbpp v1 m={} n={}\n", inst.m(), inst.n());
    for (i, (l, u)) in inst.lower().iter().zip(inst.upper()).enumerate() {
        let _ = writeln!(out, "{}\t{}\t{}", i + 1, write_list(l), write_list(u));
    }
    out
}

pub fn parse_instance(text: &str) -> Result<Instance> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::parse(1, "empty input"))?;
    let [m, n] = parse_header_numbers(header, "#idbpp v1", ["m", "n"])?;
    let mut lower = Vec::with_capacity(m);
    let mut upper = Vec::with_capacity(m);
    for (idx, body) in lines.enumerate() {
        let line = idx + 2;
        if idx >= m {
            if body.is_empty() {
                continue;
            }
            return Err(Error::parse(line, format!("more than m = {m} character lines")));
        }
        let fields: Vec<&str> = body.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::parse(line, "expected `<i>\\t<lower>\\t<upper>`"));
        }
        if fields[0].parse::<usize>().ok() != Some(idx + 1) {
            return Err(Error::parse(line, format!("expected character index {}", idx + 1)));
        }
        let l = parse_list(fields[1], n, line)?;
        let u = parse_list(fields[2], n, line)?;
        if !l.is_subset(&u) {
            return Err(Error::parse(line, "lower not subset of upper"));
        }
        lower.push(l);
        upper.push(u);
    }
    if lower.len() != m {
        return Err(Error::parse(
            lower.len() + 2,
            format!("expected {m} character lines, found {}", lower.len()),
        ));
    }
    Instance::new(n, lower, upper)
}

/// Writes phylogenies sorted by canonical key.
pub fn write_solutions(solutions: &[Phylogeny]) -> String {
    let mut keyed: Vec<(Vec<u8>, &Phylogeny)> = solutions.iter().map(|p| (canonical_key(p), p)).collect();
    keyed.sort_by(|a, b| a.0.cmp(&b.0));
    let mut out = String::new();
    for (_, p) in keyed {
        let fields: Vec<String> = p.sets.iter().map(write_list).collect();
        out.push_str(&fields.join("\t"));
        out.push('\n');
    }
    out
}

/// Parses a solution file in file order; sorting is left to the caller to check.
pub fn parse_solutions(text: &str, inst: &Instance) -> Result<Vec<Phylogeny>> {
    let (m, n) = (inst.m(), inst.n());
    let mut out = Vec::new();
    for (idx, body) in text.lines().enumerate() {
        let line = idx + 1;
        let sets = if m == 0 {
            if !body.is_empty() {
                return Err(Error::parse(line, "expected an empty line for m = 0"));
            }
            Vec::new()
        } else {
            let fields: Vec<&str> = body.split('\t').collect();
            if fields.len() != m {
                return Err(Error::parse(
                    line,
                    format!("expected {m} fields, found {}", fields.len()),
                ));
            }
            fields
                .into_iter()
                .map(|f| parse_list(f, n, line))
                .collect::<Result<Vec<_>>>()?
        };
        out.push(Phylogeny::new(sets));
    }
    Ok(out)
}

pub fn write_bigraph(g: &BipartiteGraph) -> String {
    let mut out = format!("#bigraph v1 a={} b={}\n", g.a_size(), g.b_size());
    for &(a, b) in g.edges() {
        let _ = writeln!(out, "{a}\t{b}");
    }
    out
}

pub fn parse_bigraph(text: &str) -> Result<BipartiteGraph> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::parse(1, "empty input"))?;
    let [a_size, b_size] = parse_header_numbers(header, "#bigraph v1", ["a", "b"])?;
    let mut edges = Vec::new();
    for (idx, body) in lines.enumerate() {
        let line = idx + 2;
        if body.is_empty() {
            continue;
        }
        let parts: Vec<&str> = body.split('\t').collect();
        let parsed = match parts.as_slice() {
            [u, v] => u.parse::<usize>().ok().zip(v.parse::<usize>().ok()),
            _ => None,
        };
        let (u, v) = parsed.ok_or_else(|| Error::parse(line, "expected `u\\tv`"))?;
        if u >= a_size || v >= b_size {
            return Err(Error::parse(line, format!("edge ({u}, {v}) out of range")));
        }
        edges.push((u, v));
    }
    BipartiteGraph::new(a_size, b_size, edges).map_err(|e| match e {
        Error::Usage(msg) => Error::parse(1, msg),
        other => other,
    })
}
