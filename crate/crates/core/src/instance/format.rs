//! Line-oriented text formats for instances and solutions.
//!
//! Instance files:
//!
//! ```text
//! ldp 1
//! nodes 3
//! frame 1 1          # optional, all-or-none
//! ncost 2 -0.5
//! base s 1 0
//! base 1 2 -1
//! lift 1 3 2
//! ```
//!
//! Solution files carry `objective <value>` followed by one `path` line per
//! active path listing its inner nodes.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use super::{solution_from_paths, EdgeKind, FlowError, FlowSolution, Instance, InstanceBuilder, InstanceError, NodeId};
use crate::scalar::{format_sig, Scalar};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseErrorKind {
    #[error("{0}")]
    Syntax(String),
    #[error(transparent)]
    Invalid(#[from] InstanceError),
    #[error(transparent)]
    Flow(#[from] FlowError),
}

/// A parse or validation failure anchored at a 1-based line and column.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}, column {column}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
}

impl ParseError {
    fn syntax(line: usize, column: usize, msg: impl Into<String>) -> Self {
        ParseError { line, column, kind: ParseErrorKind::Syntax(msg.into()) }
    }
}

struct Token<'a> {
    text: &'a str,
    column: usize,
}

struct Line<'a> {
    number: usize,
    tokens: Vec<Token<'a>>,
}

fn tokenize(text: &str) -> impl Iterator<Item = Line<'_>> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let content = raw.split('#').next().unwrap_or("");
        let mut tokens = Vec::new();
        let mut start = None;
        for (col, ch) in content.char_indices().chain(std::iter::once((content.len(), ' '))) {
            match (ch.is_whitespace(), start) {
                (false, None) => start = Some(col),
                (true, Some(s)) => {
                    let column = content[..s].chars().count() + 1;
                    tokens.push(Token { text: &content[s..col], column });
                    start = None;
                }
                _ => {}
            }
        }
        (!tokens.is_empty()).then_some(Line { number: i + 1, tokens })
    })
}

fn expect_arity(line: &Line<'_>, arity: usize) -> Result<(), ParseError> {
    if line.tokens.len() != arity {
        let col = line.tokens.get(arity).map_or_else(|| line.tokens.last().unwrap().column, |t| t.column);
        return Err(ParseError::syntax(
            line.number,
            col,
            format!("`{}` expects {} fields, found {}", line.tokens[0].text, arity - 1, line.tokens.len() - 1),
        ));
    }
    Ok(())
}

fn parse_scalar<T: Scalar>(line: usize, tok: &Token<'_>) -> Result<T, ParseError> {
    let v: f64 = tok
        .text
        .parse()
        .map_err(|_| ParseError::syntax(line, tok.column, format!("invalid number `{}`", tok.text)))?;
    if !v.is_finite() {
        return Err(ParseError::syntax(line, tok.column, format!("non-finite number `{}`", tok.text)));
    }
    T::from_f64(v).ok_or_else(|| ParseError::syntax(line, tok.column, "number out of range"))
}

fn parse_node(line: usize, tok: &Token<'_>, n: usize) -> Result<NodeId, ParseError> {
    match tok.text {
        "s" => Ok(NodeId::SOURCE),
        "t" => Ok(NodeId::SINK),
        s => {
            let k: usize = s
                .parse()
                .map_err(|_| ParseError::syntax(line, tok.column, format!("invalid node id `{s}`")))?;
            if k == 0 || k > n {
                return Err(ParseError::syntax(line, tok.column, format!("dangling node id {k} (nodes 1..={n})")));
            }
            Ok(NodeId::inner(k))
        }
    }
}

fn parse_inner(line: usize, tok: &Token<'_>, n: usize) -> Result<NodeId, ParseError> {
    let v = parse_node(line, tok, n)?;
    if v.is_terminal() {
        return Err(ParseError::syntax(line, tok.column, "expected an inner node id"));
    }
    Ok(v)
}

/// Parses and validates an instance file.
pub fn parse_instance<T: Scalar>(text: &str) -> Result<Instance<T>, ParseError> {
    let mut lines = tokenize(text);
    let header = lines.next().ok_or_else(|| ParseError::syntax(1, 1, "empty instance file"))?;
    if header.tokens[0].text != "ldp" {
        return Err(ParseError::syntax(header.number, header.tokens[0].column, "expected `ldp 1` header"));
    }
    expect_arity(&header, 2)?;
    if header.tokens[1].text != "1" {
        return Err(ParseError::syntax(
            header.number,
            header.tokens[1].column,
            format!("unsupported format version `{}`", header.tokens[1].text),
        ));
    }
    let nodes_line = lines.next().ok_or_else(|| ParseError::syntax(header.number + 1, 1, "missing `nodes` line"))?;
    if nodes_line.tokens[0].text != "nodes" {
        return Err(ParseError::syntax(nodes_line.number, nodes_line.tokens[0].column, "expected `nodes N`"));
    }
    expect_arity(&nodes_line, 2)?;
    let n: usize = nodes_line.tokens[1]
        .text
        .parse()
        .map_err(|_| ParseError::syntax(nodes_line.number, nodes_line.tokens[1].column, "invalid node count"))?;

    let mut builder = InstanceBuilder::<T>::new(n);
    // first line mentioning each node and the line of each edge, for anchoring
    // semantic errors
    let mut node_line: HashMap<NodeId, (usize, usize)> = HashMap::new();
    let mut edge_line: HashMap<(EdgeKind, NodeId, NodeId), (usize, usize)> = HashMap::new();
    let mut seen_cost = vec![false; n];
    let mut seen_frame = vec![false; n];

    for line in lines {
        let kw = &line.tokens[0];
        let ln = line.number;
        match kw.text {
            "frame" | "ncost" => {
                expect_arity(&line, 3)?;
                let v = parse_inner(ln, &line.tokens[1], n)?;
                node_line.entry(v).or_insert((ln, line.tokens[1].column));
                let i = v.inner_index().unwrap();
                if kw.text == "frame" {
                    let tok = &line.tokens[2];
                    let f: u32 = tok
                        .text
                        .parse()
                        .ok()
                        .filter(|&f| f >= 1)
                        .ok_or_else(|| ParseError::syntax(ln, tok.column, "frame must be a positive integer"))?;
                    if std::mem::replace(&mut seen_frame[i], true) {
                        return Err(ParseError::syntax(ln, kw.column, format!("duplicate frame for node {v}")));
                    }
                    builder.frame(v, f);
                } else {
                    let c = parse_scalar(ln, &line.tokens[2])?;
                    if std::mem::replace(&mut seen_cost[i], true) {
                        return Err(ParseError::syntax(ln, kw.column, format!("duplicate ncost for node {v}")));
                    }
                    builder.node_cost(v, c);
                }
            }
            "base" | "lift" => {
                expect_arity(&line, 4)?;
                let (kind, u, v) = if kw.text == "base" {
                    (EdgeKind::Base, parse_node(ln, &line.tokens[1], n)?, parse_node(ln, &line.tokens[2], n)?)
                } else {
                    (EdgeKind::Lifted, parse_inner(ln, &line.tokens[1], n)?, parse_inner(ln, &line.tokens[2], n)?)
                };
                let c = parse_scalar(ln, &line.tokens[3])?;
                node_line.entry(u).or_insert((ln, line.tokens[1].column));
                node_line.entry(v).or_insert((ln, line.tokens[2].column));
                edge_line.entry((kind, u, v)).or_insert((ln, kw.column));
                match kind {
                    EdgeKind::Base => builder.base(u, v, c),
                    EdgeKind::Lifted => builder.lifted(u, v, c),
                };
            }
            "ldp" | "nodes" => {
                return Err(ParseError::syntax(ln, kw.column, format!("`{}` may appear only once", kw.text)));
            }
            other => return Err(ParseError::syntax(ln, kw.column, format!("unknown keyword `{other}`"))),
        }
    }

    builder.build().map_err(|err| {
        let (line, column) = match &err {
            InstanceError::BadEndpoint { kind, from, to, .. }
            | InstanceError::SelfLoop { kind, from, to }
            | InstanceError::DuplicateEdge { kind, from, to }
            | InstanceError::FrameOrder { kind, from, to } => {
                // duplicates anchor at the second occurrence
                let key = (*kind, *from, *to);
                if matches!(err, InstanceError::DuplicateEdge { .. }) {
                    last_edge_line(text, key).unwrap_or((nodes_line.number, 1))
                } else {
                    edge_line.get(&key).copied().unwrap_or((nodes_line.number, 1))
                }
            }
            InstanceError::Cycle { from, to } => {
                edge_line.get(&(EdgeKind::Base, *from, *to)).copied().unwrap_or((nodes_line.number, 1))
            }
            InstanceError::LiftedNotReachable { from, to } => {
                edge_line.get(&(EdgeKind::Lifted, *from, *to)).copied().unwrap_or((nodes_line.number, 1))
            }
            InstanceError::UnreachableFromSource { node }
            | InstanceError::CannotReachSink { node }
            | InstanceError::MissingFrame { node } => node_line.get(node).copied().unwrap_or((nodes_line.number, 1)),
            InstanceError::NodeOutOfRange { .. } | InstanceError::NonFiniteCost { .. } => (nodes_line.number, 1),
        };
        ParseError { line, column, kind: ParseErrorKind::Invalid(err) }
    })
}

fn last_edge_line(text: &str, key: (EdgeKind, NodeId, NodeId)) -> Option<(usize, usize)> {
    let kw = match key.0 {
        EdgeKind::Base => "base",
        EdgeKind::Lifted => "lift",
    };
    let (a, b) = (key.1.to_string(), key.2.to_string());
    tokenize(text)
        .filter(|l| l.tokens.len() >= 3 && l.tokens[0].text == kw && l.tokens[1].text == a && l.tokens[2].text == b)
        .map(|l| (l.number, l.tokens[0].column))
        .last()
}

/// Canonical serialization; parsing the output reproduces it byte for byte.
pub fn serialize_instance<T: Scalar>(instance: &Instance<T>) -> String {
    let mut out = String::new();
    out.push_str("ldp 1\n");
    let _ = writeln!(out, "nodes {}", instance.inner_count());
    if let Some(frames) = instance.frames() {
        for (i, f) in frames.iter().enumerate() {
            let _ = writeln!(out, "frame {} {}", i + 1, f);
        }
    }
    for (i, c) in instance.node_costs().iter().enumerate() {
        if !c.is_zero() {
            let _ = writeln!(out, "ncost {} {}", i + 1, c);
        }
    }
    for e in instance.base_edges() {
        let _ = writeln!(out, "base {} {} {}", e.from, e.to, e.cost);
    }
    for e in instance.lifted_edges() {
        let _ = writeln!(out, "lift {} {} {}", e.from, e.to, e.cost);
    }
    out
}

/// Writes a solution as `objective` plus one `path` line per active path.
pub fn write_solution<T: Scalar>(objective: T, paths: &[Vec<NodeId>]) -> String {
    let mut out = format!("objective {}\n", format_sig(objective.as_f64()));
    for p in paths {
        out.push_str("path");
        for v in p {
            let _ = write!(out, " {v}");
        }
        out.push('\n');
    }
    out
}

/// Parses a solution file against `instance`. Returns the rebuilt labeling
/// and the objective value stated in the file.
pub fn parse_solution<T: Scalar>(instance: &Instance<T>, text: &str) -> Result<(FlowSolution<T>, T), ParseError> {
    let mut objective = None;
    let mut paths = Vec::new();
    let mut first_path_line = 1;
    for line in tokenize(text) {
        let kw = &line.tokens[0];
        match kw.text {
            "objective" => {
                expect_arity(&line, 2)?;
                if objective.is_some() {
                    return Err(ParseError::syntax(line.number, kw.column, "duplicate objective line"));
                }
                objective = Some(parse_scalar::<T>(line.number, &line.tokens[1])?);
            }
            "path" => {
                if line.tokens.len() < 2 {
                    return Err(ParseError::syntax(line.number, kw.column, "empty path"));
                }
                if paths.is_empty() {
                    first_path_line = line.number;
                }
                let path = line.tokens[1..]
                    .iter()
                    .map(|t| parse_inner(line.number, t, instance.inner_count()))
                    .collect::<Result<Vec<_>, _>>()?;
                paths.push(path);
            }
            other => return Err(ParseError::syntax(line.number, kw.column, format!("unknown keyword `{other}`"))),
        }
    }
    let objective = objective.ok_or_else(|| ParseError::syntax(1, 1, "missing objective line"))?;
    let sol = solution_from_paths(instance, &paths)
        .map_err(|e| ParseError { line: first_path_line, column: 1, kind: ParseErrorKind::Flow(e) })?;
    Ok((sol, objective))
}
