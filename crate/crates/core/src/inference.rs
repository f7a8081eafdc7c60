//! Usage-direction queries: plan and execute transform sequences that turn
//! an assessment-direction diagram into a posterior, plus graphical
//! independence tests and complexity measurements.

use std::collections::{BTreeSet, HashSet, VecDeque};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::diagram::Diagram;
use crate::error::{Error, Result};
use crate::evidence::Evidence;
use crate::transform::{apply_step, children_of, Shape, Skeleton, StepCost, StepKind, TransformStep};

/// Largest number of elimination steps the exhaustive planner will permute
/// (8! orderings).
pub const MAX_EXHAUSTIVE_STEPS: usize = 8;

/// Seed for the random orderings drawn by [`OrderMode::GreedySample`].
const SAMPLE_SEED: u64 = 0x5eed;
const SAMPLE_COUNT: usize = 32;

/// An ordered list of transform steps answering one query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Plan {
    pub steps: Vec<TransformStep>,
    pub total_added_arcs: usize,
    pub total_parameters_touched: usize,
}

impl Plan {
    /// Step encodings, the lexicographic key used to rank equal-cost plans.
    pub fn encoding(&self) -> Vec<String> {
        self.steps.iter().map(|s| s.kind.to_string()).collect()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct Metrics {
    pub arc_count: usize,
    pub free_parameter_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    Greedy,
    Exhaustive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderMode {
    Exhaustive,
    GreedySample,
}

/// Arc count and free-parameter count of a diagram.
pub fn complexity(diagram: &Diagram) -> Metrics {
    Metrics {
        arc_count: diagram.arc_count(),
        free_parameter_count: diagram.nodes().map(|n| n.free_parameters()).sum(),
    }
}

fn check_query(diagram: &Diagram, target: &str, evidence: &Evidence) -> Result<()> {
    diagram.require(target)?;
    if evidence.contains(target) {
        return Err(Error::EvidenceOnTarget(target.to_string()));
    }
    evidence.resolve(diagram)?;
    Ok(())
}

/// The action that eliminates `node` from the current structure.
fn action_for(s: &Skeleton, node: &str, evidence: &Evidence) -> StepKind {
    if let Some(outcome) = evidence.get(node) {
        StepKind::Condition {
            node: node.to_string(),
            outcome: outcome.to_string(),
        }
    } else if s.has_children(node) {
        StepKind::SumOut(node.to_string())
    } else {
        StepKind::RemoveBarren(node.to_string())
    }
}

fn simulate(s: &mut Skeleton, kind: &StepKind) -> Result<StepCost> {
    match kind {
        StepKind::Reverse { from, to } => s.reverse(from, to),
        StepKind::SumOut(n) => s.sum_out(n),
        StepKind::RemoveBarren(n) => s.remove_barren(n),
        StepKind::Condition { node, .. } => s.condition(node),
    }
}

struct Traced {
    plan: Plan,
    peak: Metrics,
}

/// Simulates eliminating `order` (every non-target node) in sequence.
fn trace(diagram: &Diagram, order: &[&str], evidence: &Evidence) -> Result<Traced> {
    let mut s = Skeleton::of(diagram);
    let mut plan = Plan {
        steps: Vec::with_capacity(order.len()),
        total_added_arcs: 0,
        total_parameters_touched: 0,
    };
    let mut peak = skeleton_metrics(&s);
    for node in order {
        let kind = action_for(&s, node, evidence);
        let cost = simulate(&mut s, &kind)?;
        plan.total_added_arcs += cost.added_arcs;
        plan.total_parameters_touched += cost.parameters_touched;
        plan.steps.push(TransformStep {
            kind,
            added_arcs: cost.added_arcs,
        });
        peak = peak.max(skeleton_metrics(&s));
    }
    Ok(Traced { plan, peak })
}

fn skeleton_metrics(s: &Skeleton) -> Metrics {
    Metrics {
        arc_count: s.arc_count(),
        free_parameter_count: s.free_parameters(),
    }
}

fn nuisance(diagram: &Diagram, target: &str) -> Vec<String> {
    let mut names: Vec<String> = diagram.names().filter(|n| *n != target).map(str::to_string).collect();
    names.sort();
    names
}

fn greedy_order(diagram: &Diagram, target: &str, evidence: &Evidence) -> Result<Vec<String>> {
    let mut s = Skeleton::of(diagram);
    let mut remaining = nuisance(diagram, target);
    let mut order = Vec::with_capacity(remaining.len());
    while !remaining.is_empty() {
        let mut best: Option<(usize, String, usize)> = None;
        for (i, node) in remaining.iter().enumerate() {
            let kind = action_for(&s, node, evidence);
            let cost = simulate(&mut s.clone(), &kind)?.added_arcs;
            let key = kind.to_string();
            let better = match &best {
                None => true,
                Some((c, k, _)) => (cost, &key) < (*c, k),
            };
            if better {
                best = Some((cost, key, i));
            }
        }
        let (_, _, i) = best.unwrap();
        let node = remaining.remove(i);
        let kind = action_for(&s, &node, evidence);
        simulate(&mut s, &kind)?;
        order.push(node);
    }
    Ok(order)
}

/// Depth-first search over elimination orders, children visited in action
/// encoding order so the first minimum found is also the lexicographically
/// smallest.
fn exhaustive_order(diagram: &Diagram, target: &str, evidence: &Evidence) -> Result<Vec<String>> {
    struct Search<'a> {
        evidence: &'a Evidence,
        best: Option<(usize, Vec<String>)>,
    }
    fn visit(search: &mut Search, s: &Skeleton, remaining: &[String], prefix: &mut Vec<String>, cost: usize) -> Result<()> {
        if let Some((b, _)) = &search.best {
            if cost >= *b {
                return Ok(());
            }
        }
        if remaining.is_empty() {
            search.best = Some((cost, prefix.clone()));
            return Ok(());
        }
        let mut options: Vec<(String, usize)> = remaining
            .iter()
            .enumerate()
            .map(|(i, n)| (action_for(s, n, search.evidence).to_string(), i))
            .collect();
        options.sort();
        for (_, i) in options {
            let node = &remaining[i];
            let mut next = s.clone();
            let step = simulate(&mut next, &action_for(s, node, search.evidence))?;
            let rest: Vec<String> = remaining.iter().filter(|n| *n != node).cloned().collect();
            prefix.push(node.clone());
            visit(search, &next, &rest, prefix, cost + step.added_arcs)?;
            prefix.pop();
        }
        Ok(())
    }

    let remaining = nuisance(diagram, target);
    if remaining.len() > MAX_EXHAUSTIVE_STEPS {
        return Err(Error::TooLargeForExhaustive {
            count: remaining.len(),
        });
    }
    let mut search = Search {
        evidence,
        best: None,
    };
    visit(&mut search, &Skeleton::of(diagram), &remaining, &mut Vec::new(), 0)?;
    Ok(search.best.map(|(_, o)| o).unwrap_or_default())
}

/// Chooses the order in which non-target nodes are eliminated. Evidence
/// nodes are conditioned, other nodes with successors are summed out, and
/// childless ones are removed as barren.
///
/// Greedy takes, at each step, the action adding the fewest arcs (ties by
/// action encoding). Exhaustive minimizes the plan's total added arcs.
pub fn plan_reversals(diagram: &Diagram, target: &str, evidence: &Evidence, strategy: Strategy) -> Result<Plan> {
    check_query(diagram, target, evidence)?;
    let order = match strategy {
        Strategy::Greedy => greedy_order(diagram, target, evidence)?,
        Strategy::Exhaustive => exhaustive_order(diagram, target, evidence)?,
    };
    let order: Vec<&str> = order.iter().map(String::as_str).collect();
    Ok(trace(diagram, &order, evidence)?.plan)
}

/// Replays `plan` on `diagram`, returning the final diagram and the steps
/// as actually executed.
pub fn execute_plan(diagram: &Diagram, plan: &Plan) -> Result<(Diagram, Vec<TransformStep>)> {
    let mut current = diagram.clone();
    let mut executed = Vec::with_capacity(plan.steps.len());
    for step in &plan.steps {
        let (next, done) = apply_step(&current, &step.kind)?;
        current = next;
        executed.push(done);
    }
    Ok((current, executed))
}

/// `P(target | evidence)` by transforming the diagram until only the target
/// remains.
pub fn posterior(diagram: &Diagram, target: &str, evidence: &Evidence) -> Result<(Vec<f64>, Plan)> {
    let plan = plan_reversals(diagram, target, evidence, Strategy::Greedy)?;
    let (last, executed) = execute_plan(diagram, &plan)?;
    debug_assert_eq!(executed, plan.steps);
    let node = last.require(target)?;
    debug_assert!(last.len() == 1 && node.parents.is_empty());
    let dist = (0..node.cardinality()).map(|v| node.prob(0, v)).collect();
    Ok((
        dist,
        Plan {
            steps: executed,
            ..plan
        },
    ))
}

/// Candidate plans for one query, ranked by total added arcs then step
/// encoding. Each plan is paired with the peak complexity of the diagrams it
/// passes through.
pub fn compare_orders(diagram: &Diagram, target: &str, evidence: &Evidence, mode: OrderMode) -> Result<Vec<(Plan, Metrics)>> {
    check_query(diagram, target, evidence)?;
    let nodes = nuisance(diagram, target);
    let orders: Vec<Vec<String>> = match mode {
        OrderMode::Exhaustive => {
            if nodes.len() > MAX_EXHAUSTIVE_STEPS {
                return Err(Error::TooLargeForExhaustive { count: nodes.len() });
            }
            permutations(&nodes)
        }
        OrderMode::GreedySample => {
            let mut rng = ChaCha8Rng::seed_from_u64(SAMPLE_SEED);
            let mut orders = vec![greedy_order(diagram, target, evidence)?];
            for _ in 0..SAMPLE_COUNT {
                let mut o = nodes.clone();
                o.shuffle(&mut rng);
                orders.push(o);
            }
            orders
        }
    };
    let mut seen = HashSet::new();
    let mut ranked = Vec::new();
    for order in orders {
        let order: Vec<&str> = order.iter().map(String::as_str).collect();
        let traced = trace(diagram, &order, evidence)?;
        if seen.insert(traced.plan.encoding()) {
            ranked.push((traced.plan, traced.peak));
        }
    }
    ranked.sort_by(|(a, _), (b, _)| {
        a.total_added_arcs
            .cmp(&b.total_added_arcs)
            .then_with(|| a.encoding().cmp(&b.encoding()))
    });
    Ok(ranked)
}

fn permutations(items: &[String]) -> Vec<Vec<String>> {
    if items.is_empty() {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for (i, head) in items.iter().enumerate() {
        let rest: Vec<String> = items.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, s)| s.clone()).collect();
        for mut tail in permutations(&rest) {
            tail.insert(0, head.clone());
            out.push(tail);
        }
    }
    out
}

/// True iff every trail between `a` and `b` is blocked by `given`.
pub fn d_separated(diagram: &Diagram, a: &str, b: &str, given: &BTreeSet<String>) -> Result<bool> {
    diagram.require(a)?;
    diagram.require(b)?;
    for g in given {
        diagram.require(g)?;
    }
    if a == b {
        return Err(Error::SameNode(a.to_string()));
    }
    for end in [a, b] {
        if given.contains(end) {
            return Err(Error::ConditionedEndpoint(end.to_string()));
        }
    }

    // ancestors of the conditioning set, itself included
    let mut ancestral: HashSet<&str> = HashSet::new();
    let mut stack: Vec<&str> = given.iter().map(String::as_str).collect();
    while let Some(n) = stack.pop() {
        if ancestral.insert(n) {
            stack.extend(diagram.parents_of(n).iter().map(String::as_str));
        }
    }

    #[derive(Clone, Copy, PartialEq, Eq, Hash)]
    enum Dir {
        // arrived from a child, moving against arc direction
        Up,
        // arrived from a parent
        Down,
    }
    let mut visited: HashSet<(&str, Dir)> = HashSet::new();
    let mut queue = VecDeque::from([(a, Dir::Up)]);
    while let Some((n, dir)) = queue.pop_front() {
        if !visited.insert((n, dir)) {
            continue;
        }
        let observed = given.contains(n);
        if !observed && n == b {
            return Ok(false);
        }
        match dir {
            Dir::Up if !observed => {
                queue.extend(diagram.parents_of(n).iter().map(|p| (p.as_str(), Dir::Up)));
                queue.extend(children_of(diagram, n).into_iter().map(|c| (c, Dir::Down)));
            }
            Dir::Up => {}
            Dir::Down => {
                if !observed {
                    queue.extend(children_of(diagram, n).into_iter().map(|c| (c, Dir::Down)));
                }
                if ancestral.contains(n) {
                    queue.extend(diagram.parents_of(n).iter().map(|p| (p.as_str(), Dir::Up)));
                }
            }
        }
    }
    Ok(true)
}
