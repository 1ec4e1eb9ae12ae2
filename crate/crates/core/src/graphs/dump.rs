use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::DocGraph;
use crate::error::Result;

/// One line of the JSONL graph dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphRecord {
    pub id: String,
    pub nodes: Vec<String>,
    pub edges: Vec<(usize, usize, f32)>,
    pub label: usize,
}

impl From<&DocGraph> for GraphRecord {
    fn from(g: &DocGraph) -> Self {
        GraphRecord {
            id: g.id.clone(),
            nodes: g.node_words.clone(),
            edges: g.edges(),
            label: g.label,
        }
    }
}

pub fn write_graph_dump<'a, W: Write>(
    mut out: W,
    graphs: impl IntoIterator<Item = &'a DocGraph>,
) -> Result<()> {
    for g in graphs {
        serde_json::to_writer(&mut out, &GraphRecord::from(g))?;
        writeln!(out).map_err(|e| crate::error::Error::io("<graph dump>", e))?;
    }
    Ok(())
}

pub fn read_graph_dump<R: BufRead>(input: R) -> Result<Vec<GraphRecord>> {
    let mut out = Vec::new();
    for line in input.lines() {
        let line = line.map_err(|e| crate::error::Error::io("<graph dump>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line)?);
    }
    Ok(out)
}
