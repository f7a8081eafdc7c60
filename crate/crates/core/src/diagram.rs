//! Diagram representation: variables, node kinds, parent structure and
//! tables, plus structural validation.
//!
//! Tables are indexed by parent configuration with the last declared parent
//! varying fastest. The same layout is used by [`Cpt`], [`DetTable`] and
//! the JSON model format.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use crate::error::{Error, Result};

/// Tolerance on row sums at construction and load time.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

/// Node names must match `[A-Za-z_][A-Za-z0-9_-]*`.
pub fn is_valid_name(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

/// Number of parent configurations for the given cardinalities.
pub fn config_count(cards: &[usize]) -> usize {
    cards.iter().product()
}

/// Row index of a parent configuration (last parent fastest).
pub fn encode_row(values: &[usize], cards: &[usize]) -> usize {
    debug_assert_eq!(values.len(), cards.len());
    values
        .iter()
        .zip(cards)
        .fold(0, |acc, (&v, &card)| acc * card + v)
}

/// Inverse of [`encode_row`].
pub fn decode_row(mut index: usize, cards: &[usize]) -> Vec<usize> {
    let mut values = vec![0; cards.len()];
    for (slot, &card) in values.iter_mut().zip(cards).rev() {
        *slot = index % card;
        index /= card;
    }
    values
}

/// A labelled outcome of a variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub label: String,
    pub index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Probabilistic,
    Deterministic,
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeKind::Probabilistic => f.write_str("probabilistic"),
            NodeKind::Deterministic => f.write_str("deterministic"),
        }
    }
}

/// Conditional probability table: one distribution per parent configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Cpt {
    pub rows: Vec<Vec<f64>>,
}

/// Function table of a deterministic node: one outcome index per parent
/// configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DetTable {
    pub entries: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Table {
    Cpt(Cpt),
    Function(DetTable),
}

/// One chance node of a diagram.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSpec {
    pub name: String,
    pub outcomes: Vec<String>,
    pub parents: Vec<String>,
    pub table: Table,
}

impl NodeSpec {
    pub fn probabilistic<S: Into<String>>(
        name: impl Into<String>,
        outcomes: impl IntoIterator<Item = S>,
        parents: impl IntoIterator<Item = S>,
        rows: Vec<Vec<f64>>,
    ) -> Self {
        NodeSpec {
            name: name.into(),
            outcomes: outcomes.into_iter().map(Into::into).collect(),
            parents: parents.into_iter().map(Into::into).collect(),
            table: Table::Cpt(Cpt { rows }),
        }
    }

    pub fn deterministic<S: Into<String>>(
        name: impl Into<String>,
        outcomes: impl IntoIterator<Item = S>,
        parents: impl IntoIterator<Item = S>,
        entries: Vec<usize>,
    ) -> Self {
        NodeSpec {
            name: name.into(),
            outcomes: outcomes.into_iter().map(Into::into).collect(),
            parents: parents.into_iter().map(Into::into).collect(),
            table: Table::Function(DetTable { entries }),
        }
    }

    pub fn kind(&self) -> NodeKind {
        match self.table {
            Table::Cpt(_) => NodeKind::Probabilistic,
            Table::Function(_) => NodeKind::Deterministic,
        }
    }

    pub fn is_deterministic(&self) -> bool {
        self.kind() == NodeKind::Deterministic
    }

    pub fn cardinality(&self) -> usize {
        self.outcomes.len()
    }

    pub fn row_count(&self) -> usize {
        match &self.table {
            Table::Cpt(cpt) => cpt.rows.len(),
            Table::Function(det) => det.entries.len(),
        }
    }

    /// `P(self = value | parent configuration row)`. Deterministic nodes give
    /// 1 or 0.
    pub fn prob(&self, row: usize, value: usize) -> f64 {
        match &self.table {
            Table::Cpt(cpt) => cpt.rows[row][value],
            Table::Function(det) => {
                if det.entries[row] == value {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Free parameters of the table; deterministic nodes contribute none.
    pub fn free_parameters(&self) -> usize {
        match self.kind() {
            NodeKind::Probabilistic => self.row_count() * (self.cardinality().saturating_sub(1)),
            NodeKind::Deterministic => 0,
        }
    }

    pub fn outcome_index(&self, label: &str) -> Option<usize> {
        self.outcomes.iter().position(|o| o == label)
    }

    pub fn outcome(&self, label: &str) -> Option<Outcome> {
        self.outcome_index(label).map(|index| Outcome {
            label: label.to_string(),
            index,
        })
    }

    /// The same node with its function rewritten as a point-mass Cpt.
    pub fn as_probabilistic(&self) -> NodeSpec {
        let table = match &self.table {
            Table::Cpt(cpt) => Table::Cpt(cpt.clone()),
            Table::Function(det) => Table::Cpt(Cpt {
                rows: det
                    .entries
                    .iter()
                    .map(|&e| {
                        (0..self.cardinality())
                            .map(|v| if v == e { 1.0 } else { 0.0 })
                            .collect()
                    })
                    .collect(),
            }),
        };
        NodeSpec {
            table,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ViolationKind {
    InvalidName,
    DuplicateName,
    TooFewOutcomes,
    InvalidOutcomeLabel,
    DuplicateParent,
    UnknownParent,
    Cycle,
    TableShapeMismatch,
    NormalizationViolation,
    OutcomeOutOfRange,
}

impl ViolationKind {
    pub fn name(self) -> &'static str {
        match self {
            ViolationKind::InvalidName => "InvalidName",
            ViolationKind::DuplicateName => "DuplicateName",
            ViolationKind::TooFewOutcomes => "TooFewOutcomes",
            ViolationKind::InvalidOutcomeLabel => "InvalidOutcomeLabel",
            ViolationKind::DuplicateParent => "DuplicateParent",
            ViolationKind::UnknownParent => "UnknownParent",
            ViolationKind::Cycle => "CycleDetected",
            ViolationKind::TableShapeMismatch => "TableShapeMismatch",
            ViolationKind::NormalizationViolation => "NormalizationViolation",
            ViolationKind::OutcomeOutOfRange => "OutcomeOutOfRange",
        }
    }
}

/// A single broken invariant.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub node: String,
    pub row: Option<usize>,
    pub detail: String,
}

impl Violation {
    fn new(kind: ViolationKind, node: &str, detail: impl Into<String>) -> Self {
        Violation {
            kind,
            node: node.to_string(),
            row: None,
            detail: detail.into(),
        }
    }

    fn at_row(mut self, row: usize) -> Self {
        self.row = Some(row);
        self
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at node `{}`", self.kind.name(), self.node)?;
        if let Some(row) = self.row {
            write!(f, " row {row}")?;
        }
        write!(f, ": {}", self.detail)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        match self.violations.into_iter().next() {
            None => Ok(()),
            Some(v) => Err(Error::Invalid(v)),
        }
    }
}

/// Acyclic directed graph of chance nodes; the factored joint distribution.
///
/// Diagrams are values: every operation returns a new diagram and leaves its
/// input untouched.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagram {
    pub(crate) nodes: Vec<NodeSpec>,
    pub(crate) notes: Vec<String>,
}

impl Diagram {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a diagram without checking any invariant. Use [`validate`] to
    /// inspect the result, or [`Diagram::from_nodes`] to reject bad input.
    pub fn from_nodes_unchecked(nodes: Vec<NodeSpec>) -> Self {
        Diagram {
            nodes,
            notes: Vec::new(),
        }
    }

    pub fn from_nodes(nodes: Vec<NodeSpec>) -> Result<Self> {
        let diagram = Self::from_nodes_unchecked(nodes);
        validate(&diagram).into_result()?;
        Ok(diagram)
    }

    /// Returns a new diagram with `spec` appended.
    pub fn add_node(&self, spec: NodeSpec) -> Result<Diagram> {
        if self.node(&spec.name).is_some() {
            return Err(Error::Invalid(Violation::new(
                ViolationKind::DuplicateName,
                &spec.name,
                "name already in use",
            )));
        }
        if spec.parents.iter().any(|p| p == &spec.name) {
            return Err(Error::CycleWouldForm(spec.name.clone()));
        }
        let cards = |name: &str| self.node(name).map(NodeSpec::cardinality);
        if let Some(v) = check_node(&spec, &cards).into_iter().next() {
            return Err(Error::Invalid(v));
        }
        let mut next = self.clone();
        next.nodes.push(spec);
        Ok(next)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> impl Iterator<Item = &NodeSpec> {
        self.nodes.iter()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.nodes.iter().map(|n| n.name.as_str())
    }

    pub fn node(&self, name: &str) -> Option<&NodeSpec> {
        self.nodes.iter().find(|n| n.name == name)
    }

    pub fn require(&self, name: &str) -> Result<&NodeSpec> {
        self.node(name)
            .ok_or_else(|| Error::UnknownNode(name.to_string()))
    }

    pub(crate) fn position(&self, name: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.name == name)
    }

    /// Notes attached by transforms (for example rows filled with a uniform
    /// distribution because their context has probability zero).
    pub fn notes(&self) -> &[String] {
        &self.notes
    }

    /// Every arc as `(parent, child)`, in node order then parent order.
    pub fn arcs(&self) -> Vec<(String, String)> {
        self.nodes
            .iter()
            .flat_map(|n| n.parents.iter().map(|p| (p.clone(), n.name.clone())))
            .collect()
    }

    pub fn arc_count(&self) -> usize {
        self.nodes.iter().map(|n| n.parents.len()).sum()
    }

    pub fn has_arc(&self, from: &str, to: &str) -> bool {
        self.node(to)
            .map(|n| n.parents.iter().any(|p| p == from))
            .unwrap_or(false)
    }

    pub fn children(&self, name: &str) -> Vec<&str> {
        self.nodes
            .iter()
            .filter(|n| n.parents.iter().any(|p| p == name))
            .map(|n| n.name.as_str())
            .collect()
    }

    /// Parents precede children; nodes at equal depth (longest path from a
    /// root) are ordered by name.
    pub fn topological_order(&self) -> Result<Vec<String>> {
        let parents: BTreeMap<&str, Vec<&str>> = self
            .nodes
            .iter()
            .map(|n| (n.name.as_str(), n.parents.iter().map(String::as_str).collect()))
            .collect();
        for ps in parents.values() {
            if let Some(p) = ps.iter().find(|p| !parents.contains_key(*p)) {
                return Err(Error::UnknownNode(p.to_string()));
            }
        }
        let depth = depths(&parents).ok_or(Error::CycleDetected)?;
        let mut order: Vec<(usize, &str)> = depth.iter().map(|(n, d)| (*d, *n)).collect();
        order.sort();
        Ok(order.into_iter().map(|(_, n)| n.to_string()).collect())
    }
}

/// Longest-path depth of each node, or `None` when the graph has a cycle.
pub(crate) fn depths<'a>(parents: &BTreeMap<&'a str, Vec<&'a str>>) -> Option<HashMap<&'a str, usize>> {
    let mut pending: HashMap<&str, usize> = parents.iter().map(|(n, ps)| (*n, ps.len())).collect();
    let mut children: HashMap<&str, Vec<&str>> = HashMap::new();
    for (n, ps) in parents {
        for p in ps {
            children.entry(*p).or_default().push(*n);
        }
    }
    let mut depth: HashMap<&str, usize> = HashMap::new();
    let mut ready: Vec<&str> = pending
        .iter()
        .filter(|(_, &c)| c == 0)
        .map(|(n, _)| *n)
        .collect();
    while let Some(n) = ready.pop() {
        let d = parents[n].iter().map(|p| depth[p] + 1).max().unwrap_or(0);
        depth.insert(n, d);
        for c in children.get(n).into_iter().flatten() {
            let left = pending.get_mut(c).unwrap();
            *left -= 1;
            if *left == 0 {
                ready.push(c);
            }
        }
    }
    (depth.len() == parents.len()).then_some(depth)
}

/// Checks one node against everything except uniqueness of its name and
/// graph-level acyclicity.
fn check_node(spec: &NodeSpec, cardinality: &dyn Fn(&str) -> Option<usize>) -> Vec<Violation> {
    let mut out = Vec::new();
    let name = spec.name.as_str();
    if !is_valid_name(name) {
        out.push(Violation::new(
            ViolationKind::InvalidName,
            name,
            "names must match [A-Za-z_][A-Za-z0-9_-]*",
        ));
    }
    if spec.outcomes.len() < 2 {
        out.push(Violation::new(
            ViolationKind::TooFewOutcomes,
            name,
            format!("{} outcome(s), at least 2 required", spec.outcomes.len()),
        ));
    }
    let mut seen = BTreeSet::new();
    for label in &spec.outcomes {
        if label.is_empty() || !seen.insert(label.as_str()) {
            out.push(Violation::new(
                ViolationKind::InvalidOutcomeLabel,
                name,
                format!("outcome label `{label}` is empty or repeated"),
            ));
        }
    }
    let mut seen = BTreeSet::new();
    let mut cards = Vec::with_capacity(spec.parents.len());
    for p in &spec.parents {
        if p == name {
            out.push(Violation::new(ViolationKind::Cycle, name, "node is its own parent"));
            continue;
        }
        if !seen.insert(p.as_str()) {
            out.push(Violation::new(
                ViolationKind::DuplicateParent,
                name,
                format!("parent `{p}` listed twice"),
            ));
            continue;
        }
        match cardinality(p) {
            Some(c) => cards.push(c),
            None => out.push(Violation::new(
                ViolationKind::UnknownParent,
                name,
                format!("parent `{p}` does not exist"),
            )),
        }
    }
    if !out.is_empty() {
        return out;
    }

    let expected_rows = config_count(&cards);
    let card = spec.cardinality();
    match &spec.table {
        Table::Cpt(cpt) => {
            if cpt.rows.len() != expected_rows {
                out.push(Violation::new(
                    ViolationKind::TableShapeMismatch,
                    name,
                    format!("{} rows, expected {expected_rows}", cpt.rows.len()),
                ));
                return out;
            }
            for (r, row) in cpt.rows.iter().enumerate() {
                if row.len() != card {
                    out.push(
                        Violation::new(
                            ViolationKind::TableShapeMismatch,
                            name,
                            format!("{} entries, expected {card}", row.len()),
                        )
                        .at_row(r),
                    );
                    continue;
                }
                if row.iter().any(|p| !(0.0..=1.0).contains(p)) {
                    out.push(
                        Violation::new(
                            ViolationKind::NormalizationViolation,
                            name,
                            "entry outside [0, 1]",
                        )
                        .at_row(r),
                    );
                    continue;
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                    out.push(
                        Violation::new(
                            ViolationKind::NormalizationViolation,
                            name,
                            format!("row sums to {sum}"),
                        )
                        .at_row(r),
                    );
                }
            }
        }
        Table::Function(det) => {
            if det.entries.len() != expected_rows {
                out.push(Violation::new(
                    ViolationKind::TableShapeMismatch,
                    name,
                    format!("{} entries, expected {expected_rows}", det.entries.len()),
                ));
                return out;
            }
            for (r, &e) in det.entries.iter().enumerate() {
                if e >= card {
                    out.push(
                        Violation::new(
                            ViolationKind::OutcomeOutOfRange,
                            name,
                            format!("outcome index {e} but only {card} outcomes"),
                        )
                        .at_row(r),
                    );
                }
            }
        }
    }
    out
}

/// Lists every violated invariant; an empty report means the diagram is
/// well formed.
pub fn validate(diagram: &Diagram) -> ValidationReport {
    let mut violations = Vec::new();
    let mut cards: HashMap<&str, usize> = HashMap::new();
    for n in &diagram.nodes {
        if cards.insert(n.name.as_str(), n.cardinality()).is_some() {
            violations.push(Violation::new(
                ViolationKind::DuplicateName,
                &n.name,
                "name used by more than one node",
            ));
        }
    }
    let lookup = |name: &str| cards.get(name).copied();
    for n in &diagram.nodes {
        violations.extend(check_node(n, &lookup));
    }
    if violations.is_empty() {
        let parents: BTreeMap<&str, Vec<&str>> = diagram
            .nodes
            .iter()
            .map(|n| (n.name.as_str(), n.parents.iter().map(String::as_str).collect()))
            .collect();
        if depths(&parents).is_none() {
            violations.push(Violation::new(
                ViolationKind::Cycle,
                &diagram.nodes[0].name,
                "directed cycle among nodes",
            ));
        }
    }
    ValidationReport { violations }
}
