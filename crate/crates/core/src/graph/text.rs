use std::io::{self, BufRead, Write};

use super::{Graph, GraphBuilder, NodeId};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default)]
pub struct LoadOptions {
    /// Read the third column as the edge weight. When false, any third
    /// column is ignored and weights are set to `1 / d_in(v)`.
    pub weighted: bool,
    /// Emit both `u -> v` and `v -> u` for every line.
    pub undirected: bool,
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

/// Reads a whitespace-separated edge list.
///
/// `#` lines are comments. The first other line is the header `n m`, then
/// exactly `m` lines of `u v` or `u v w`.
pub fn load_edge_list<R: BufRead>(reader: R, options: LoadOptions) -> Result<Graph> {
    let mut builder: Option<GraphBuilder> = None;
    let mut declared_m = 0u64;
    let mut seen = 0u64;
    let mut n = 0usize;

    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut fields = trimmed.split_whitespace();

        let Some(b) = builder.as_mut() else {
            let parse = |s: Option<&str>| -> Result<u64> {
                s.ok_or_else(|| parse_err(lineno, "header must be \"n m\""))?
                    .parse::<u64>()
                    .map_err(|e| parse_err(lineno, format!("bad header: {e}")))
            };
            n = parse(fields.next())? as usize;
            declared_m = parse(fields.next())?;
            if fields.next().is_some() {
                return Err(parse_err(lineno, "header must be \"n m\""));
            }
            if n == 0 || n > NodeId::MAX as usize {
                return Err(parse_err(lineno, format!("node count {n} not supported")));
            }
            builder = Some(GraphBuilder::new(n));
            continue;
        };

        let mut id = |name: &str| -> Result<NodeId> {
            let raw = fields
                .next()
                .ok_or_else(|| parse_err(lineno, format!("missing {name}")))?;
            let id: u64 = raw
                .parse()
                .map_err(|_| parse_err(lineno, format!("bad node id {raw:?}")))?;
            if id >= n as u64 {
                return Err(Error::NodeRange {
                    line: lineno,
                    id,
                    n,
                });
            }
            Ok(id as NodeId)
        };
        let u = id("source")?;
        let v = id("target")?;
        let w = match fields.next() {
            Some(raw) if options.weighted => {
                let w: f64 = raw
                    .parse()
                    .map_err(|_| parse_err(lineno, format!("bad weight {raw:?}")))?;
                if !(0.0..=1.0).contains(&w) {
                    return Err(Error::WeightValue {
                        line: lineno,
                        weight: w,
                    });
                }
                w
            }
            None if options.weighted => return Err(parse_err(lineno, "missing weight")),
            _ => 1.0,
        };
        if fields.next().is_some() {
            return Err(parse_err(lineno, "trailing fields"));
        }
        b.add_edge(u, v, w)?;
        if options.undirected {
            b.add_edge(v, u, w)?;
        }
        seen += 1;
    }

    let builder = builder.ok_or_else(|| parse_err(0, "missing \"n m\" header"))?;
    if seen != declared_m {
        return Err(parse_err(
            0,
            format!("header declares {declared_m} edges but {seen} were read"),
        ));
    }
    let g = builder.build();
    Ok(if options.weighted { g } else { g.auto_weight() })
}

/// Writes `graph` as a weighted edge list that [`load_edge_list`] reads back
/// exactly.
pub fn write_edge_list<W: Write>(graph: &Graph, mut writer: W) -> io::Result<()> {
    writeln!(writer, "{} {}", graph.n(), graph.m())?;
    for (u, v, w) in graph.edges() {
        writeln!(writer, "{u} {v} {w}")?;
    }
    writer.flush()
}
