//! Edge-list ingest and the `SUMMARY v1` text format.
//!
//! ```text
//! SUMMARY v1 <|V|> <|E|> <k>
//! N <id> <n_i> <e_i> [member labels...]
//! E <i> <j> <e_ij>
//! ```
//!
//! Supernodes are renumbered `0..k` in order of their smallest member label;
//! member labels are listed ascending; superedges are listed once with
//! `i < j`, sorted. Writing the result of a read reproduces the input bytes.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::summary_graph::{EdgeList, NodeParts, SummaryGraph};

/// Parses a whitespace-separated edge list (`u v` per line, `#` comments).
/// Vertex ids are remapped densely in order of first appearance.
pub fn parse_edge_list<R: BufRead>(reader: R) -> Result<EdgeList> {
    let mut pairs = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = i + 1;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let mut tokens = text.split_whitespace();
        let mut vertex = || -> Result<u64> {
            let tok = tokens.next().ok_or_else(|| Error::Parse {
                line: line_no,
                message: "expected two vertex ids".into(),
            })?;
            tok.parse::<u64>().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("invalid vertex id {tok:?}"),
            })
        };
        let u = vertex()?;
        let v = vertex()?;
        if tokens.next().is_some() {
            return Err(Error::Parse {
                line: line_no,
                message: "expected exactly two vertex ids".into(),
            });
        }
        pairs.push((u, v));
    }
    if pairs.is_empty() {
        return Err(Error::EmptyGraph);
    }
    Ok(EdgeList::from_pairs(pairs))
}

pub fn read_edge_list(path: &Path) -> Result<EdgeList> {
    parse_edge_list(BufReader::new(File::open(path)?))
}

/// Renders the canonical `SUMMARY v1` text of `g`.
pub fn format_summary(g: &SummaryGraph) -> String {
    let mut order: Vec<_> = g.alive_nodes().to_vec();
    order.sort_by_key(|&a| (g.node_unchecked(a).min_label(), a));
    let mut new_id = vec![u32::MAX; g.id_bound()];
    for (i, a) in order.iter().enumerate() {
        new_id[a.index()] = i as u32;
    }

    let mut out = String::new();
    let _ = writeln!(
        out,
        "SUMMARY v1 {} {} {}",
        g.vertex_count(),
        g.edge_count(),
        order.len()
    );
    for (i, &a) in order.iter().enumerate() {
        let node = g.node_unchecked(a);
        let _ = write!(out, "N {i} {} {}", node.size(), node.internal_edges());
        if let Some(members) = node.members() {
            let mut labels: Vec<u64> = members.iter().map(|&v| g.labels()[v as usize]).collect();
            labels.sort_unstable();
            for l in labels {
                let _ = write!(out, " {l}");
            }
        }
        out.push('\n');
    }
    let mut edges: Vec<(u32, u32, u64)> = g
        .superedges()
        .map(|(a, b, e)| {
            let (i, j) = (new_id[a.index()], new_id[b.index()]);
            (i.min(j), i.max(j), e)
        })
        .collect();
    edges.sort_unstable();
    for (i, j, e) in edges {
        let _ = writeln!(out, "E {i} {j} {e}");
    }
    out
}

pub fn write_summary<W: Write>(g: &SummaryGraph, mut writer: W) -> Result<()> {
    writer.write_all(format_summary(g).as_bytes())?;
    writer.flush()?;
    Ok(())
}

pub fn write_summary_to_path(g: &SummaryGraph, path: &Path) -> Result<()> {
    write_summary(g, std::io::BufWriter::new(File::create(path)?))
}

fn field<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| Error::Parse {
        line,
        message: format!("missing {what}"),
    })?;
    tok.parse().map_err(|_| Error::Parse {
        line,
        message: format!("invalid {what} {tok:?}"),
    })
}

/// `(n_i, e_i, member labels)` of one `N` line.
type NodeLine = (u64, u64, Option<Vec<u64>>);

/// Parses and validates a `SUMMARY v1` document.
pub fn read_summary<R: BufRead>(reader: R) -> Result<SummaryGraph> {
    let mut header: Option<(usize, u64, usize)> = None;
    let mut nodes: Vec<Option<NodeLine>> = Vec::new();
    let mut superedges = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let kind = tokens.next().unwrap_or_default();
        match (kind, header) {
            ("SUMMARY", None) => {
                let version: String = field(tokens.next(), line_no, "version")?;
                if version != "v1" {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("unsupported version {version:?}"),
                    });
                }
                let n = field(tokens.next(), line_no, "vertex count")?;
                let m = field(tokens.next(), line_no, "edge count")?;
                let k: usize = field(tokens.next(), line_no, "supernode count")?;
                nodes = vec![None; k];
                header = Some((n, m, k));
            }
            ("SUMMARY", Some(_)) => {
                return Err(Error::Parse {
                    line: line_no,
                    message: "repeated header".into(),
                })
            }
            (_, None) => {
                return Err(Error::Parse {
                    line: line_no,
                    message: "missing SUMMARY header".into(),
                })
            }
            ("N", Some((_, _, k))) => {
                let id: usize = field(tokens.next(), line_no, "supernode id")?;
                let size = field(tokens.next(), line_no, "supernode size")?;
                let internal = field(tokens.next(), line_no, "internal edge count")?;
                let members = tokens
                    .map(|t| field::<u64>(Some(t), line_no, "member label"))
                    .collect::<Result<Vec<_>>>()?;
                let slot = nodes.get_mut(id).ok_or_else(|| Error::Parse {
                    line: line_no,
                    message: format!("supernode id {id} outside 0..{k}"),
                })?;
                if slot.is_some() {
                    return Err(Error::InvalidSummary(format!("duplicate supernode id {id}")));
                }
                *slot = Some((size, internal, (!members.is_empty()).then_some(members)));
            }
            ("E", Some(_)) => {
                let a: u32 = field(tokens.next(), line_no, "superedge endpoint")?;
                let b: u32 = field(tokens.next(), line_no, "superedge endpoint")?;
                let e: u64 = field(tokens.next(), line_no, "superedge edge count")?;
                if tokens.next().is_some() {
                    return Err(Error::Parse {
                        line: line_no,
                        message: "trailing tokens".into(),
                    });
                }
                superedges.push((a, b, e));
            }
            (other, Some(_)) => {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("unknown record type {other:?}"),
                })
            }
        }
    }
    let (n, m, _) = header.ok_or(Error::EmptyGraph)?;
    let mut parts = Vec::with_capacity(nodes.len());
    let mut labels = Vec::new();
    let mut dense = std::collections::HashMap::new();
    for (id, slot) in nodes.into_iter().enumerate() {
        let (size, internal_edges, members) =
            slot.ok_or_else(|| Error::InvalidSummary(format!("supernode {id} missing")))?;
        let (min_label, members) = match members {
            Some(list) => {
                let min = list.iter().copied().min().unwrap_or(u64::MAX);
                let ids = list
                    .into_iter()
                    .map(|l| {
                        *dense.entry(l).or_insert_with(|| {
                            labels.push(l);
                            (labels.len() - 1) as u32
                        })
                    })
                    .collect::<Vec<u32>>();
                (min, Some(ids))
            }
            None => (id as u64, None),
        };
        parts.push(NodeParts {
            size,
            internal_edges,
            min_label,
            members,
        });
    }
    if parts.iter().all(|p| p.members.is_none()) {
        labels = (0..n as u64).collect();
    } else if labels.len() != n {
        return Err(Error::InvalidSummary(format!(
            "members cover {} distinct vertices, header says {n}",
            labels.len()
        )));
    }
    SummaryGraph::from_parts(n, m, labels, parts, &superedges)
}

pub fn read_summary_from_path(path: &Path) -> Result<SummaryGraph> {
    read_summary(BufReader::new(File::open(path)?))
}
