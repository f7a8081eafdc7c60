//! Model files, DOT rendering, the built-in example models, and a seeded
//! random-model generator.
//!
//! Model files are JSON:
//!
//! ```json
//! {"version": 1, "nodes": [
//!   {"name": "X", "outcomes": ["0", "1"], "kind": "probabilistic",
//!    "parents": [], "cpt": [[0.7, 0.3]]},
//!   {"name": "Y", "outcomes": ["0", "1"], "kind": "deterministic",
//!    "parents": ["X"], "function": [1, 0]}
//! ]}
//! ```
//!
//! Rows follow the parent-configuration layout of [`crate::diagram`]
//! (last parent fastest). Unknown fields are rejected.

use std::fmt::Write as _;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::error::Category;

use crate::diagram::{validate, Diagram, NodeKind, NodeSpec, Table};
use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDocument {
    version: u32,
    nodes: Vec<NodeDocument>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeDocument {
    name: String,
    outcomes: Vec<String>,
    kind: KindDocument,
    parents: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cpt: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    function: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum KindDocument {
    Probabilistic,
    Deterministic,
}

fn to_node(doc: NodeDocument) -> Result<NodeSpec> {
    let table = match (doc.kind, doc.cpt, doc.function) {
        (KindDocument::Probabilistic, Some(rows), None) => Table::Cpt(crate::diagram::Cpt { rows }),
        (KindDocument::Deterministic, None, Some(entries)) => Table::Function(crate::diagram::DetTable { entries }),
        (KindDocument::Probabilistic, _, _) => {
            return Err(Error::Schema(format!(
                "probabilistic node `{}` needs `cpt` and no `function`",
                doc.name
            )))
        }
        (KindDocument::Deterministic, _, _) => {
            return Err(Error::Schema(format!(
                "deterministic node `{}` needs `function` and no `cpt`",
                doc.name
            )))
        }
    };
    Ok(NodeSpec {
        name: doc.name,
        outcomes: doc.outcomes,
        parents: doc.parents,
        table,
    })
}

/// Parses and validates a model document.
pub fn load(text: &str) -> Result<Diagram> {
    let diagram = load_unchecked(text)?;
    validate(&diagram).into_result()?;
    Ok(diagram)
}

/// Parses a model document and checks the schema only; the diagram may
/// still violate structural invariants (see [`validate`]).
pub fn load_unchecked(text: &str) -> Result<Diagram> {
    let doc: ModelDocument = serde_json::from_str(text).map_err(|e| match e.classify() {
        Category::Data => Error::Schema(e.to_string()),
        _ => Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        },
    })?;
    if doc.version != FORMAT_VERSION {
        return Err(Error::Schema(format!(
            "unsupported version {}, expected {FORMAT_VERSION}",
            doc.version
        )));
    }
    let nodes = doc.nodes.into_iter().map(to_node).collect::<Result<Vec<_>>>()?;
    Ok(Diagram::from_nodes_unchecked(nodes))
}

/// Serializes `diagram` as a pretty-printed model document. Floats are
/// written in shortest round-trip form, so `load(save(d)) == d`.
pub fn save(diagram: &Diagram) -> String {
    let doc = ModelDocument {
        version: FORMAT_VERSION,
        nodes: diagram
            .nodes()
            .map(|n| {
                let (kind, cpt, function) = match &n.table {
                    Table::Cpt(c) => (KindDocument::Probabilistic, Some(c.rows.clone()), None),
                    Table::Function(f) => (KindDocument::Deterministic, None, Some(f.entries.clone())),
                };
                NodeDocument {
                    name: n.name.clone(),
                    outcomes: n.outcomes.clone(),
                    kind,
                    parents: n.parents.clone(),
                    cpt,
                    function,
                }
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("model documents always serialize")
}

/// Graphviz rendering: probabilistic nodes as ellipses, deterministic
/// nodes as double ovals.
pub fn export_dot(diagram: &Diagram) -> String {
    let mut out = String::from("digraph influence_diagram {\n");
    for n in diagram.nodes() {
        let style = match n.kind() {
            NodeKind::Probabilistic => "shape=ellipse",
            NodeKind::Deterministic => "shape=ellipse, peripheries=2",
        };
        let _ = writeln!(out, "  \"{}\" [{style}];", n.name);
    }
    for (from, to) in diagram.arcs() {
        let _ = writeln!(out, "  \"{from}\" -> \"{to}\";");
    }
    out.push_str("}\n");
    out
}

/// Names accepted by [`builtin_example`].
pub const BUILTIN_NAMES: [&str; 7] = ["fig5", "fig6", "fig7", "fig8", "fig9", "fig10a", "fig10b"];

fn builtin_source(name: &str) -> Option<&'static str> {
    Some(match name {
        "fig5" => include_str!("../../../docs/models/fig5.json"),
        "fig6" => include_str!("../../../docs/models/fig6.json"),
        "fig7" => include_str!("../../../docs/models/fig7.json"),
        "fig8" => include_str!("../../../docs/models/fig8.json"),
        "fig9" => include_str!("../../../docs/models/fig9.json"),
        "fig10a" => include_str!("../../../docs/models/fig10a.json"),
        "fig10b" => include_str!("../../../docs/models/fig10b.json"),
        _ => return None,
    })
}

/// One of the bundled example models. The structures are fixed; the table
/// numbers are illustrative constants kept in `docs/models/`.
///
/// - `fig5`: programming error → deterministic program output
/// - `fig6`: three independent subsystems → deterministic program output
/// - `fig7`: one cause with two conditionally independent effects
/// - `fig8`: two independent causes of one effect
/// - `fig9`: heart failure / nephrotic syndrome diagnosis model
/// - `fig10a`, `fig10b`: the same symptom likelihoods under two different
///   disorder priors
pub fn builtin_example(name: &str) -> Result<Diagram> {
    let src = builtin_source(name).ok_or_else(|| Error::UnknownExample(name.to_string()))?;
    load(src)
}

/// Rows per table above which the generator stops adding parents to a node.
const MAX_GENERATED_ROWS: usize = 1 << 16;

/// Seeded random diagram over nodes `n0..n{k-1}` with outcomes `s0..`.
///
/// Arcs only run from earlier to later nodes, each candidate included with
/// probability `arc_density`. A node with at least one parent is made
/// deterministic with probability `det_fraction`. Probabilities are drawn
/// from [0.05, 1.05) and normalized per row.
pub fn gen_random(node_count: usize, max_outcomes: usize, arc_density: f64, det_fraction: f64, seed: u64) -> Result<Diagram> {
    if node_count < 1 {
        return Err(Error::InvalidParameters("node count must be at least 1".into()));
    }
    if max_outcomes < 2 {
        return Err(Error::InvalidParameters("max outcomes must be at least 2".into()));
    }
    for (what, v) in [("arc density", arc_density), ("deterministic fraction", det_fraction)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::InvalidParameters(format!("{what} {v} is outside [0, 1]")));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cards: Vec<usize> = Vec::with_capacity(node_count);
    let mut nodes = Vec::with_capacity(node_count);
    for i in 0..node_count {
        let card = rng.gen_range(2..=max_outcomes);
        let mut parents = Vec::new();
        let mut rows = 1usize;
        for (j, &pc) in cards.iter().enumerate() {
            let draw: f64 = rng.gen();
            if draw < arc_density && rows * pc <= MAX_GENERATED_ROWS {
                parents.push(format!("n{j}"));
                rows *= pc;
            }
        }
        let det_draw: f64 = rng.gen();
        let outcomes: Vec<String> = (0..card).map(|k| format!("s{k}")).collect();
        let name = format!("n{i}");
        let spec = if !parents.is_empty() && det_draw < det_fraction {
            let entries = (0..rows).map(|_| rng.gen_range(0..card)).collect();
            NodeSpec::deterministic(name, outcomes, parents, entries)
        } else {
            let table = (0..rows)
                .map(|_| {
                    let w: Vec<f64> = (0..card).map(|_| 0.05 + rng.gen::<f64>()).collect();
                    let total: f64 = w.iter().sum();
                    w.into_iter().map(|x| x / total).collect()
                })
                .collect();
            NodeSpec::probabilistic(name, outcomes, parents, table)
        };
        cards.push(card);
        nodes.push(spec);
    }
    Diagram::from_nodes(nodes)
}
