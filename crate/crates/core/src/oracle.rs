//! Ground truth by brute force: materialize the full joint distribution of a
//! diagram and answer queries by summation over it.
//!
//! This is a test instrument. It is deliberately independent of the
//! transforms: nothing here reverses arcs or removes nodes.

use crate::diagram::{config_count, validate, Diagram};
use crate::error::{Error, Result};
use crate::evidence::Evidence;

/// Largest joint state space the oracle will enumerate.
pub const MAX_JOINT_STATES: u128 = 1 << 22;

/// Probability of every full assignment. Variables follow the diagram's
/// topological order; the last variable varies fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTable {
    variables: Vec<String>,
    outcomes: Vec<Vec<String>>,
    cards: Vec<usize>,
    probs: Vec<f64>,
}

impl JointTable {
    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn outcomes(&self, variable: usize) -> &[String] {
        &self.outcomes[variable]
    }

    pub fn cardinalities(&self) -> &[usize] {
        &self.cards
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    fn index_of(&self, name: &str) -> Result<usize> {
        self.variables
            .iter()
            .position(|v| v == name)
            .ok_or_else(|| Error::UnknownNode(name.to_string()))
    }

    /// Probability of one full assignment given in [`Self::variables`] order.
    pub fn prob(&self, assignment: &[usize]) -> f64 {
        self.probs[crate::diagram::encode_row(assignment, &self.cards)]
    }

    /// Sums out every variable not in `keep`; the result lists variables in
    /// the order of `keep`.
    pub fn marginal(&self, keep: &[&str]) -> Result<JointTable> {
        let idx: Vec<usize> = keep.iter().map(|n| self.index_of(n)).collect::<Result<_>>()?;
        let cards: Vec<usize> = idx.iter().map(|&i| self.cards[i]).collect();
        let mut probs = vec![0.0; config_count(&cards)];
        let mut assignment = vec![0usize; self.cards.len()];
        for &p in &self.probs {
            let row = idx.iter().fold(0, |acc, &i| acc * self.cards[i] + assignment[i]);
            probs[row] += p;
            advance(&mut assignment, &self.cards);
        }
        Ok(JointTable {
            variables: idx.iter().map(|&i| self.variables[i].clone()).collect(),
            outcomes: idx.iter().map(|&i| self.outcomes[i].clone()).collect(),
            cards,
            probs,
        })
    }

    /// Entries consistent with `fixed` (variable name, outcome index), with
    /// the fixed variables dropped and the rest renormalized.
    pub fn condition(&self, fixed: &[(String, usize)]) -> Result<JointTable> {
        let fixed_idx: Vec<(usize, usize)> = fixed
            .iter()
            .map(|(n, v)| Ok((self.index_of(n)?, *v)))
            .collect::<Result<_>>()?;
        let keep: Vec<usize> = (0..self.variables.len())
            .filter(|i| !fixed_idx.iter().any(|(f, _)| f == i))
            .collect();
        let cards: Vec<usize> = keep.iter().map(|&i| self.cards[i]).collect();
        let mut probs = vec![0.0; config_count(&cards)];
        let mut assignment = vec![0usize; self.cards.len()];
        for &p in &self.probs {
            if fixed_idx.iter().all(|&(i, v)| assignment[i] == v) {
                let row = keep.iter().fold(0, |acc, &i| acc * self.cards[i] + assignment[i]);
                probs[row] += p;
            }
            advance(&mut assignment, &self.cards);
        }
        let mass: f64 = probs.iter().sum();
        if mass <= 0.0 {
            return Err(Error::ZeroProbabilityEvidence);
        }
        probs.iter_mut().for_each(|p| *p /= mass);
        Ok(JointTable {
            variables: keep.iter().map(|&i| self.variables[i].clone()).collect(),
            outcomes: keep.iter().map(|&i| self.outcomes[i].clone()).collect(),
            cards,
            probs,
        })
    }

    /// Largest entrywise difference after aligning `other` to this table's
    /// variable order. Fails if the two tables range over different
    /// variables or outcome labels.
    pub fn max_abs_diff(&self, other: &JointTable) -> Result<f64> {
        let mut names: Vec<&str> = self.variables.iter().map(String::as_str).collect();
        let mut theirs: Vec<&str> = other.variables.iter().map(String::as_str).collect();
        names.sort_unstable();
        theirs.sort_unstable();
        if names != theirs {
            return Err(Error::InvalidParameters(format!(
                "joint tables range over different variables: {names:?} vs {theirs:?}"
            )));
        }
        let order: Vec<&str> = self.variables.iter().map(String::as_str).collect();
        let aligned = other.marginal(&order)?;
        if aligned.outcomes != self.outcomes {
            return Err(Error::InvalidParameters(
                "joint tables use different outcome labels".into(),
            ));
        }
        Ok(self
            .probs
            .iter()
            .zip(&aligned.probs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

fn advance(assignment: &mut [usize], cards: &[usize]) {
    for (slot, &card) in assignment.iter_mut().zip(cards).rev() {
        *slot += 1;
        if *slot < card {
            return;
        }
        *slot = 0;
    }
}

/// Enumerates the full joint of `diagram`.
pub fn joint_table(diagram: &Diagram) -> Result<JointTable> {
    if let Some(v) = validate(diagram).violations.into_iter().next() {
        return Err(Error::InvalidDiagram(v));
    }
    let states: u128 = diagram.nodes().map(|n| n.cardinality() as u128).product();
    if states > MAX_JOINT_STATES {
        return Err(Error::TooLarge {
            states,
            limit: MAX_JOINT_STATES,
        });
    }
    let order = diagram.topological_order()?;
    let specs: Vec<_> = order.iter().map(|n| diagram.node(n).unwrap()).collect();
    let cards: Vec<usize> = specs.iter().map(|s| s.cardinality()).collect();
    // (position of each parent in `order`, its cardinality) per node
    let parent_slots: Vec<Vec<(usize, usize)>> = specs
        .iter()
        .map(|s| {
            s.parents
                .iter()
                .map(|p| {
                    let i = order.iter().position(|o| o == p).unwrap();
                    (i, cards[i])
                })
                .collect()
        })
        .collect();

    let mut probs = Vec::with_capacity(states as usize);
    let mut assignment = vec![0usize; cards.len()];
    for _ in 0..states {
        let mut p = 1.0;
        for (k, spec) in specs.iter().enumerate() {
            let row = parent_slots[k]
                .iter()
                .fold(0, |acc, &(i, card)| acc * card + assignment[i]);
            p *= spec.prob(row, assignment[k]);
            if p == 0.0 {
                break;
            }
        }
        probs.push(p);
        advance(&mut assignment, &cards);
    }
    Ok(JointTable {
        variables: order,
        outcomes: specs.iter().map(|s| s.outcomes.clone()).collect(),
        cards,
        probs,
    })
}

/// `P(target | evidence)` by enumeration.
pub fn oracle_posterior(diagram: &Diagram, target: &str, evidence: &Evidence) -> Result<Vec<f64>> {
    diagram.require(target)?;
    if evidence.contains(target) {
        return Err(Error::EvidenceOnTarget(target.to_string()));
    }
    let fixed = evidence.resolve(diagram)?;
    let joint = joint_table(diagram)?;
    let conditioned = if fixed.is_empty() {
        joint
    } else {
        joint.condition(&fixed)?
    };
    Ok(conditioned.marginal(&[target])?.probs)
}
