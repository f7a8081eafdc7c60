#![allow(dead_code)]

use std::collections::BTreeSet;

use infdiag::{gen_random, joint_table, Diagram, Evidence, JointTable};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random diagram of 2..=7 nodes with up to 4 outcomes each.
pub fn small_random(seed: u64) -> Diagram {
    gen_random(2 + (seed % 6) as usize, 4, 0.4, 0.2, seed).unwrap()
}

/// A (diagram, target, evidence) query whose evidence has positive
/// probability: the evidence values are read off a full assignment sampled
/// from the oracle joint.
pub fn query_case(seed: u64) -> (Diagram, String, Evidence) {
    let diagram = small_random(seed);
    let joint = joint_table(&diagram).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabcdef);
    let sample = sample_assignment(&joint, rng.gen());
    let names = joint.variables().to_vec();
    let target = names[rng.gen_range(0..names.len())].clone();
    let mut evidence = Evidence::new();
    for (i, name) in names.iter().enumerate() {
        if *name != target && rng.gen_bool(0.4) {
            evidence.insert(name.clone(), joint.outcomes(i)[sample[i]].clone());
        }
    }
    (diagram, target, evidence)
}

/// Inverse-CDF draw from the joint.
pub fn sample_assignment(joint: &JointTable, u: f64) -> Vec<usize> {
    let mut acc = 0.0;
    let cards = joint.cardinalities();
    let mut last_positive = 0;
    for (i, &p) in joint.probabilities().iter().enumerate() {
        if p > 0.0 {
            last_positive = i;
            acc += p;
            if u < acc {
                return decode(i, cards);
            }
        }
    }
    decode(last_positive, cards)
}

fn decode(mut index: usize, cards: &[usize]) -> Vec<usize> {
    let mut out = vec![0; cards.len()];
    for (slot, &c) in out.iter_mut().zip(cards).rev() {
        *slot = index % c;
        index /= c;
    }
    out
}

pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

pub fn joint_diff(a: &Diagram, b: &Diagram) -> f64 {
    joint_table(a).unwrap().max_abs_diff(&joint_table(b).unwrap()).unwrap()
}

/// Every arc whose reversal is legal (no other directed path).
pub fn reversible_arcs(d: &Diagram) -> Vec<(String, String)> {
    d.arcs()
        .into_iter()
        .filter(|(x, y)| infdiag::reverse_arc(d, x, y).is_ok())
        .collect()
}

/// Largest violation of `P(a, b | s) = P(a | s) P(b | s)` over every
/// positive-probability assignment `s` of `given`.
pub fn max_dependence(joint: &JointTable, a: &str, b: &str, given: &BTreeSet<String>) -> f64 {
    let mut keep: Vec<&str> = given.iter().map(String::as_str).collect();
    keep.push(a);
    keep.push(b);
    let m = joint.marginal(&keep).unwrap();
    let cards = m.cardinalities().to_vec();
    let (ca, cb) = (cards[cards.len() - 2], cards[cards.len() - 1]);
    let probs = m.probabilities();
    let mut worst: f64 = 0.0;
    for block in probs.chunks(ca * cb) {
        let ps: f64 = block.iter().sum();
        if ps <= 0.0 {
            continue;
        }
        for va in 0..ca {
            let pa: f64 = (0..cb).map(|vb| block[va * cb + vb]).sum::<f64>() / ps;
            for vb in 0..cb {
                let pb: f64 = (0..ca).map(|x| block[x * cb + vb]).sum::<f64>() / ps;
                let pab = block[va * cb + vb] / ps;
                worst = worst.max((pab - pa * pb).abs());
            }
        }
    }
    worst
}

/// All subsets of `items`.
pub fn subsets(items: &[String]) -> Vec<BTreeSet<String>> {
    (0..1usize << items.len())
        .map(|mask| {
            items
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, s)| s.clone())
                .collect()
        })
        .collect()
}
