//! Joint-preserving diagram transforms: arc reversal, barren-node removal,
//! summing out, conditioning, and whole-diagram refactoring.
//!
//! Every transform takes a diagram by reference and returns a new one.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use crate::diagram::{config_count, decode_row, depths, encode_row, Cpt, DetTable, Diagram, NodeSpec, Table};
use crate::error::{Error, Result};

/// One primitive action on a diagram.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StepKind {
    Reverse { from: String, to: String },
    SumOut(String),
    RemoveBarren(String),
    Condition { node: String, outcome: String },
}

impl StepKind {
    /// The node the step eliminates, if any.
    pub fn eliminated(&self) -> Option<&str> {
        match self {
            StepKind::Reverse { .. } => None,
            StepKind::SumOut(n) | StepKind::RemoveBarren(n) => Some(n),
            StepKind::Condition { node, .. } => Some(node),
        }
    }
}

/// Textual encoding, also used as the lexicographic tie-break key when
/// ranking actions.
impl fmt::Display for StepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepKind::Reverse { from, to } => write!(f, "reverse({from},{to})"),
            StepKind::SumOut(n) => write!(f, "sumout({n})"),
            StepKind::RemoveBarren(n) => write!(f, "barren({n})"),
            StepKind::Condition { node, outcome } => write!(f, "condition({node}={outcome})"),
        }
    }
}

/// A step as executed, with the number of arcs it introduced. The arc
/// produced by flipping `x -> y` itself is not counted; only inherited
/// arcs are.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransformStep {
    pub kind: StepKind,
    pub added_arcs: usize,
}

/// Anything with named nodes and ordered parent lists.
pub(crate) trait Shape {
    fn node_names(&self) -> Vec<&str>;
    fn parents_of(&self, name: &str) -> &[String];
}

impl Shape for Diagram {
    fn node_names(&self) -> Vec<&str> {
        self.names().collect()
    }

    fn parents_of(&self, name: &str) -> &[String] {
        self.node(name).map(|n| n.parents.as_slice()).unwrap_or(&[])
    }
}

/// Position of every node in the depth-then-name topological order.
pub(crate) fn topo_rank<S: Shape>(s: &S) -> Result<BTreeMap<String, usize>> {
    let parents: BTreeMap<&str, Vec<&str>> = s
        .node_names()
        .into_iter()
        .map(|n| (n, s.parents_of(n).iter().map(String::as_str).collect()))
        .collect();
    let depth = depths(&parents).ok_or(Error::CycleDetected)?;
    let mut order: Vec<(usize, &str)> = depth.iter().map(|(n, d)| (*d, *n)).collect();
    order.sort();
    Ok(order
        .into_iter()
        .enumerate()
        .map(|(i, (_, n))| (n.to_string(), i))
        .collect())
}

pub(crate) fn children_of<'a, S: Shape>(s: &'a S, name: &str) -> Vec<&'a str> {
    s.node_names()
        .into_iter()
        .filter(|c| s.parents_of(c).iter().any(|p| p == name))
        .collect()
}

/// Child of `n` that comes first in topological order.
pub(crate) fn first_child<S: Shape>(s: &S, n: &str) -> Result<Option<String>> {
    let rank = topo_rank(s)?;
    Ok(children_of(s, n)
        .into_iter()
        .min_by_key(|c| rank[*c])
        .map(str::to_string))
}

/// Parent of `n` accepted by `pick` that comes last in topological order.
/// Reversing that arc is always legal: any other path from it into `n`
/// would enter through a later parent.
pub(crate) fn last_parent<S: Shape>(s: &S, n: &str, pick: impl Fn(&str) -> bool) -> Result<Option<String>> {
    let rank = topo_rank(s)?;
    Ok(s.parents_of(n)
        .iter()
        .filter(|p| pick(p))
        .max_by_key(|p| rank[p.as_str()])
        .cloned())
}

/// True if a directed path from `x` to `y` exists that does not use the
/// arc `x -> y` itself.
pub(crate) fn has_other_path<S: Shape>(s: &S, x: &str, y: &str) -> bool {
    let mut stack: Vec<&str> = children_of(s, x).into_iter().filter(|c| *c != y).collect();
    let mut seen: HashSet<&str> = stack.iter().copied().collect();
    while let Some(n) = stack.pop() {
        if n == y {
            return true;
        }
        for c in children_of(s, n) {
            if seen.insert(c) {
                stack.push(c);
            }
        }
    }
    false
}

/// Parent lists after reversing `x -> y`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct ReversalShape {
    pub x_parents: Vec<String>,
    pub y_parents: Vec<String>,
    /// `x` is deterministic: `y` absorbs its function and no arc `y -> x`
    /// is created.
    pub substitution: bool,
    pub added_arcs: usize,
}

pub(crate) fn reversal_shape(
    x: &str,
    x_parents: &[String],
    x_deterministic: bool,
    y: &str,
    y_parents: &[String],
) -> ReversalShape {
    // the joint context: y's other parents first, then x's parents not already present
    let mut context: Vec<String> = y_parents.iter().filter(|p| *p != x).cloned().collect();
    let from_y = context.len();
    for p in x_parents {
        if !context.contains(p) {
            context.push(p.clone());
        }
    }
    let gained_by_y = context.len() - from_y;
    if x_deterministic {
        return ReversalShape {
            x_parents: x_parents.to_vec(),
            y_parents: context,
            substitution: true,
            added_arcs: gained_by_y,
        };
    }
    let gained_by_x = context.iter().filter(|c| !x_parents.contains(c)).count();
    let mut new_x = context.clone();
    new_x.push(y.to_string());
    ReversalShape {
        x_parents: new_x,
        y_parents: context,
        substitution: false,
        added_arcs: gained_by_y + gained_by_x,
    }
}

fn check_reversible<S: Shape>(s: &S, x: &str, y: &str) -> Result<()> {
    if !s.parents_of(y).iter().any(|p| p == x) {
        return Err(Error::NoSuchArc {
            from: x.to_string(),
            to: y.to_string(),
        });
    }
    if has_other_path(s, x, y) {
        return Err(Error::CycleWouldForm(x.to_string()));
    }
    Ok(())
}

/// Reverses the arc `x -> y` by Bayes' theorem.
///
/// Both nodes inherit each other's parents. When `x` is deterministic its
/// function is substituted into `y` instead: `x` keeps its kind and parents
/// and no arc `y -> x` is added. Otherwise both nodes come out
/// probabilistic. Rows of `P(x | y, c)` whose context has probability zero
/// are filled with the uniform distribution and recorded in the diagram's
/// notes.
pub fn reverse_arc(diagram: &Diagram, x: &str, y: &str) -> Result<Diagram> {
    reverse_counted(diagram, x, y).map(|(d, _)| d)
}

pub(crate) fn reverse_counted(diagram: &Diagram, x: &str, y: &str) -> Result<(Diagram, usize)> {
    let xs = diagram.require(x)?;
    let ys = diagram.require(y)?;
    check_reversible(diagram, x, y)?;
    let shape = reversal_shape(x, &xs.parents, xs.is_deterministic(), y, &ys.parents);

    let card = |n: &str| diagram.node(n).map(NodeSpec::cardinality).unwrap();
    let context = &shape.y_parents;
    let ctx_cards: Vec<usize> = context.iter().map(|c| card(c)).collect();
    let slot = |n: &String| context.iter().position(|c| c == n);
    // where each of x's parents sits in the context
    let x_slots: Vec<usize> = xs.parents.iter().map(|p| slot(p).unwrap()).collect();
    let x_cards: Vec<usize> = xs.parents.iter().map(|p| card(p)).collect();
    let y_slots: Vec<Option<usize>> = ys.parents.iter().map(|p| if p == x { None } else { slot(p) }).collect();
    let y_cards: Vec<usize> = ys.parents.iter().map(|p| card(p)).collect();
    let (x_card, y_card) = (xs.cardinality(), ys.cardinality());

    let x_row = |cv: &[usize]| {
        let vals: Vec<usize> = x_slots.iter().map(|&s| cv[s]).collect();
        encode_row(&vals, &x_cards)
    };
    let y_row = |cv: &[usize], xv: usize| {
        let vals: Vec<usize> = y_slots.iter().map(|s| s.map_or(xv, |s| cv[s])).collect();
        encode_row(&vals, &y_cards)
    };

    let rows = config_count(&ctx_cards);
    let mut notes = Vec::new();
    let (new_x, new_y) = if shape.substitution {
        let f = match &xs.table {
            Table::Function(det) => det,
            Table::Cpt(_) => unreachable!("substitution requires a deterministic predecessor"),
        };
        let source_row = |ci: usize| {
            let cv = decode_row(ci, &ctx_cards);
            y_row(&cv, f.entries[x_row(&cv)])
        };
        let table = match &ys.table {
            Table::Function(g) => Table::Function(DetTable {
                entries: (0..rows).map(|ci| g.entries[source_row(ci)]).collect(),
            }),
            Table::Cpt(cpt) => Table::Cpt(Cpt {
                rows: (0..rows).map(|ci| cpt.rows[source_row(ci)].clone()).collect(),
            }),
        };
        (xs.clone(), NodeSpec {
            parents: context.clone(),
            table,
            ..ys.clone()
        })
    } else {
        let mut y_rows = Vec::with_capacity(rows);
        let mut x_rows = Vec::with_capacity(rows * y_card);
        for ci in 0..rows {
            let cv = decode_row(ci, &ctx_cards);
            let xr = x_row(&cv);
            // joint[xv][yv] = P(y | x, c) P(x | c)
            let joint: Vec<Vec<f64>> = (0..x_card)
                .map(|xv| {
                    let px = xs.prob(xr, xv);
                    let yr = y_row(&cv, xv);
                    (0..y_card).map(|yv| ys.prob(yr, yv) * px).collect()
                })
                .collect();
            // rounding can push a sum of products a few ulps past 1
            let marginal: Vec<f64> = (0..y_card)
                .map(|yv| (0..x_card).map(|xv| joint[xv][yv]).sum::<f64>().min(1.0))
                .collect();
            for (yv, &m) in marginal.iter().enumerate() {
                if m > 0.0 {
                    x_rows.push((0..x_card).map(|xv| (joint[xv][yv] / m).min(1.0)).collect());
                } else {
                    x_rows.push(vec![1.0 / x_card as f64; x_card]);
                    notes.push(format!(
                        "reverse {x}->{y}: row {} of {x} set uniform (context has probability zero)",
                        ci * y_card + yv
                    ));
                }
            }
            y_rows.push(marginal);
        }
        (
            NodeSpec {
                parents: shape.x_parents.clone(),
                table: Table::Cpt(Cpt { rows: x_rows }),
                ..xs.clone()
            },
            NodeSpec {
                parents: context.clone(),
                table: Table::Cpt(Cpt { rows: y_rows }),
                ..ys.clone()
            },
        )
    };

    let mut next = diagram.clone();
    let xi = next.position(x).unwrap();
    let yi = next.position(y).unwrap();
    next.nodes[xi] = new_x;
    next.nodes[yi] = new_y;
    next.notes.extend(notes);
    Ok((next, shape.added_arcs))
}

/// Deletes a node with no successors.
pub fn remove_barren(diagram: &Diagram, n: &str) -> Result<Diagram> {
    diagram.require(n)?;
    if !diagram.children(n).is_empty() {
        return Err(Error::HasSuccessors(n.to_string()));
    }
    let mut next = diagram.clone();
    next.nodes.retain(|s| s.name != n);
    Ok(next)
}

/// Marginalizes `n` out of the diagram: reverse its outgoing arcs, children
/// in topological order, then drop it once barren.
pub fn sum_out(diagram: &Diagram, n: &str) -> Result<Diagram> {
    sum_out_counted(diagram, n).map(|(d, _)| d)
}

pub(crate) fn sum_out_counted(diagram: &Diagram, n: &str) -> Result<(Diagram, usize)> {
    diagram.require(n)?;
    let mut current = diagram.clone();
    let mut added = 0;
    while let Some(child) = first_child(&current, n)? {
        let (next, a) = reverse_counted(&current, n, &child)?;
        current = next;
        added += a;
    }
    Ok((remove_barren(&current, n)?, added))
}

/// Instantiates `n` to `outcome`: reverse its incoming arcs until it is a
/// root, then delete it and slice its children's tables. The result
/// represents the joint conditioned on the observation.
pub fn condition(diagram: &Diagram, n: &str, outcome: &str) -> Result<Diagram> {
    condition_counted(diagram, n, outcome).map(|(d, _)| d)
}

pub(crate) fn condition_counted(diagram: &Diagram, n: &str, outcome: &str) -> Result<(Diagram, usize)> {
    let value = diagram
        .require(n)?
        .outcome_index(outcome)
        .ok_or_else(|| Error::UnknownOutcome {
            node: n.to_string(),
            outcome: outcome.to_string(),
        })?;
    let mut current = diagram.clone();
    let mut added = 0;
    while let Some(parent) = last_parent(&current, n, |_| true)? {
        let (next, a) = reverse_counted(&current, &parent, n)?;
        current = next;
        added += a;
    }
    if current.node(n).unwrap().prob(0, value) <= 0.0 {
        return Err(Error::ZeroProbabilityEvidence);
    }

    let card_of = |name: &str| current.node(name).map(NodeSpec::cardinality).unwrap();
    let mut next = current.clone();
    next.nodes.retain(|s| s.name != n);
    for child in next.nodes.iter_mut() {
        let Some(at) = child.parents.iter().position(|p| p == n) else {
            continue;
        };
        let old_cards: Vec<usize> = child.parents.iter().map(|p| card_of(p)).collect();
        let mut new_cards = old_cards.clone();
        new_cards.remove(at);
        let source = |r: usize| {
            let mut vals = decode_row(r, &new_cards);
            vals.insert(at, value);
            encode_row(&vals, &old_cards)
        };
        let rows = config_count(&new_cards);
        child.table = match &child.table {
            Table::Cpt(cpt) => Table::Cpt(Cpt {
                rows: (0..rows).map(|r| cpt.rows[source(r)].clone()).collect(),
            }),
            Table::Function(det) => Table::Function(DetTable {
                entries: (0..rows).map(|r| det.entries[source(r)]).collect(),
            }),
        };
        child.parents.remove(at);
    }
    Ok((next, added))
}

/// Re-expresses the diagram so that `order` is a topological order of the
/// result, by repeated arc reversal. Inherited arcs are kept.
pub fn refactor(diagram: &Diagram, order: &[&str]) -> Result<Diagram> {
    let names: HashSet<&str> = diagram.names().collect();
    let given: HashSet<&str> = order.iter().copied().collect();
    if order.len() != diagram.len() || given != names {
        let missing: Vec<&str> = diagram.names().filter(|n| !given.contains(n)).collect();
        let extra: Vec<&str> = order.iter().copied().filter(|n| !names.contains(n)).collect();
        return Err(Error::NotAPermutation(format!(
            "missing {missing:?}, unknown {extra:?}, {} given for {} nodes",
            order.len(),
            diagram.len()
        )));
    }
    let mut current = diagram.clone();
    for (i, &v) in order.iter().enumerate() {
        let placed: HashSet<&str> = order[..i].iter().copied().collect();
        while let Some(p) = last_parent(&current, v, |p| !placed.contains(p))? {
            current = reverse_arc(&current, &p, v)?;
        }
    }
    Ok(current)
}

/// Drops every parent whose rows are exactly equal across all of that
/// parent's outcomes. Not applied by any other transform.
pub fn prune_redundant_parents(diagram: &Diagram) -> Diagram {
    let cards: BTreeMap<String, usize> = diagram.nodes().map(|n| (n.name.clone(), n.cardinality())).collect();
    let mut next = diagram.clone();
    for node in next.nodes.iter_mut() {
        let mut at = 0;
        while at < node.parents.len() {
            let pc: Vec<usize> = node.parents.iter().map(|p| cards[p]).collect();
            let mut reduced = pc.clone();
            reduced.remove(at);
            let source = |r: usize, v: usize| {
                let mut vals = decode_row(r, &reduced);
                vals.insert(at, v);
                encode_row(&vals, &pc)
            };
            let rows = config_count(&reduced);
            let redundant = (0..rows).all(|r| (1..pc[at]).all(|v| same_row(&node.table, source(r, 0), source(r, v))));
            if redundant {
                node.table = match &node.table {
                    Table::Cpt(cpt) => Table::Cpt(Cpt {
                        rows: (0..rows).map(|r| cpt.rows[source(r, 0)].clone()).collect(),
                    }),
                    Table::Function(det) => Table::Function(DetTable {
                        entries: (0..rows).map(|r| det.entries[source(r, 0)]).collect(),
                    }),
                };
                node.parents.remove(at);
            } else {
                at += 1;
            }
        }
    }
    next
}

fn same_row(table: &Table, a: usize, b: usize) -> bool {
    match table {
        Table::Cpt(cpt) => cpt.rows[a] == cpt.rows[b],
        Table::Function(det) => det.entries[a] == det.entries[b],
    }
}

/// Runs one step and reports how many arcs it added.
pub fn apply_step(diagram: &Diagram, kind: &StepKind) -> Result<(Diagram, TransformStep)> {
    let (next, added_arcs) = match kind {
        StepKind::Reverse { from, to } => reverse_counted(diagram, from, to)?,
        StepKind::SumOut(n) => sum_out_counted(diagram, n)?,
        StepKind::RemoveBarren(n) => (remove_barren(diagram, n)?, 0),
        StepKind::Condition { node, outcome } => condition_counted(diagram, node, outcome)?,
    };
    Ok((
        next,
        TransformStep {
            kind: kind.clone(),
            added_arcs,
        },
    ))
}

/// Structure-only copy of a diagram, used to cost candidate plans without
/// computing tables.
#[derive(Debug, Clone)]
pub(crate) struct Skeleton {
    nodes: Vec<SkeletonNode>,
}

#[derive(Debug, Clone)]
struct SkeletonNode {
    name: String,
    parents: Vec<String>,
    deterministic: bool,
    card: usize,
}

impl Shape for Skeleton {
    fn node_names(&self) -> Vec<&str> {
        self.nodes.iter().map(|n| n.name.as_str()).collect()
    }

    fn parents_of(&self, name: &str) -> &[String] {
        self.get(name).map(|n| n.parents.as_slice()).unwrap_or(&[])
    }
}

/// Cost of one simulated step.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub(crate) struct StepCost {
    pub added_arcs: usize,
    pub parameters_touched: usize,
}

impl Skeleton {
    pub fn of(diagram: &Diagram) -> Self {
        Skeleton {
            nodes: diagram
                .nodes()
                .map(|n| SkeletonNode {
                    name: n.name.clone(),
                    parents: n.parents.clone(),
                    deterministic: n.is_deterministic(),
                    card: n.cardinality(),
                })
                .collect(),
        }
    }

    fn get(&self, name: &str) -> Option<&SkeletonNode> {
        self.nodes.iter().find(|n| n.name == name)
    }

    fn get_mut(&mut self, name: &str) -> &mut SkeletonNode {
        self.nodes.iter_mut().find(|n| n.name == name).unwrap()
    }

    pub fn has_children(&self, name: &str) -> bool {
        self.nodes.iter().any(|n| n.parents.iter().any(|p| p == name))
    }

    pub fn arc_count(&self) -> usize {
        self.nodes.iter().map(|n| n.parents.len()).sum()
    }

    fn params(&self, name: &str) -> usize {
        let n = self.get(name).unwrap();
        if n.deterministic {
            return 0;
        }
        let rows: usize = n.parents.iter().map(|p| self.get(p).unwrap().card).product();
        rows * (n.card - 1)
    }

    pub fn free_parameters(&self) -> usize {
        self.nodes.iter().map(|n| self.params(&n.name)).sum()
    }

    pub fn reverse(&mut self, x: &str, y: &str) -> Result<StepCost> {
        check_reversible(self, x, y)?;
        let xn = self.get(x).unwrap();
        let yn = self.get(y).unwrap();
        let shape = reversal_shape(x, &xn.parents, xn.deterministic, y, &yn.parents);
        if !shape.substitution {
            let xm = self.get_mut(x);
            xm.parents = shape.x_parents.clone();
            xm.deterministic = false;
            self.get_mut(y).deterministic = false;
        }
        self.get_mut(y).parents = shape.y_parents.clone();
        let mut touched = self.params(y);
        if !shape.substitution {
            touched += self.params(x);
        }
        Ok(StepCost {
            added_arcs: shape.added_arcs,
            parameters_touched: touched,
        })
    }

    pub fn remove_barren(&mut self, n: &str) -> Result<StepCost> {
        if self.has_children(n) {
            return Err(Error::HasSuccessors(n.to_string()));
        }
        self.nodes.retain(|s| s.name != n);
        Ok(StepCost::default())
    }

    pub fn sum_out(&mut self, n: &str) -> Result<StepCost> {
        let mut cost = StepCost::default();
        while let Some(child) = first_child(self, n)? {
            let c = self.reverse(n, &child)?;
            cost.added_arcs += c.added_arcs;
            cost.parameters_touched += c.parameters_touched;
        }
        self.remove_barren(n)?;
        Ok(cost)
    }

    pub fn condition(&mut self, n: &str) -> Result<StepCost> {
        let mut cost = StepCost::default();
        while let Some(parent) = last_parent(self, n, |_| true)? {
            let c = self.reverse(&parent, n)?;
            cost.added_arcs += c.added_arcs;
            cost.parameters_touched += c.parameters_touched;
        }
        let children: Vec<String> = children_of(self, n).into_iter().map(str::to_string).collect();
        self.nodes.retain(|s| s.name != n);
        for c in &children {
            self.get_mut(c).parents.retain(|p| p != n);
            cost.parameters_touched += self.params(c);
        }
        Ok(cost)
    }
}
