//! Acceptance suite: one PASS/FAIL line per criterion. Every numeric check
//! is made against the joint-enumeration oracle, never against the engine's
//! own transforms.

mod common;

use std::path::PathBuf;
use std::process::{Command, ExitCode};

use common::*;
use infdiag::inference::{execute_plan, OrderMode};
use infdiag::*;

const JOINT_TOL: f64 = 1e-12;
const POSTERIOR_TOL: f64 = 1e-10;

type Verdict = std::result::Result<String, String>;
type Check = fn() -> Verdict;

fn ensure(ok: bool, detail: impl Into<String>) -> std::result::Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(detail.into())
    }
}

fn builtin(name: &str) -> Diagram {
    builtin_example(name).unwrap()
}

fn sorted_arcs(d: &Diagram) -> Vec<(String, String)> {
    let mut arcs = d.arcs();
    arcs.sort();
    arcs
}

fn arc_set(pairs: &[(&str, &str)]) -> Vec<(String, String)> {
    let mut arcs: Vec<_> = pairs.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect();
    arcs.sort();
    arcs
}

fn joint_preservation() -> Verdict {
    let mut worst: f64 = 0.0;
    let mut reversals = 0;
    for seed in 0..200 {
        let d = gen_random(7, 4, 0.4, 0.2, seed).map_err(|e| e.to_string())?;
        for (x, y) in reversible_arcs(&d) {
            let r = reverse_arc(&d, &x, &y).map_err(|e| format!("seed {seed} {x}->{y}: {e}"))?;
            ensure(validate(&r).is_valid(), format!("seed {seed} {x}->{y}: result fails validation"))?;
            let diff = joint_diff(&d, &r);
            ensure(diff <= JOINT_TOL, format!("seed {seed} {x}->{y}: max diff {diff:e}"))?;
            worst = worst.max(diff);
            reversals += 1;
        }
    }
    Ok(format!("{reversals} reversals on 200 diagrams, max entry diff {worst:.2e}"))
}

fn all_factorizations() -> Verdict {
    let mut worst: f64 = 0.0;
    for seed in 0..20 {
        let d = gen_random(3, 4, 0.7, 0.2, 1000 + seed).map_err(|e| e.to_string())?;
        let names: Vec<String> = d.names().map(str::to_string).collect();
        for order in orderings(&names) {
            let order: Vec<&str> = order.iter().map(String::as_str).collect();
            let r = refactor(&d, &order).map_err(|e| format!("seed {seed} {order:?}: {e}"))?;
            let diff = joint_diff(&d, &r);
            ensure(diff <= JOINT_TOL, format!("seed {seed} {order:?}: max diff {diff:e}"))?;
            worst = worst.max(diff);
        }
    }
    Ok(format!("20 diagrams x 6 orders, max entry diff {worst:.2e}"))
}

fn orderings(names: &[String]) -> Vec<Vec<String>> {
    if names.len() <= 1 {
        return vec![names.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..names.len() {
        let mut rest = names.to_vec();
        let head = rest.remove(i);
        for mut tail in orderings(&rest) {
            tail.insert(0, head.clone());
            out.push(tail);
        }
    }
    out
}

fn posterior_correctness() -> Verdict {
    let mut worst: f64 = 0.0;
    for seed in 0..100 {
        let (d, target, evidence) = query_case(seed);
        let (got, _) = posterior(&d, &target, &evidence).map_err(|e| format!("case {seed}: {e}"))?;
        let want = oracle_posterior(&d, &target, &evidence).map_err(|e| format!("case {seed}: {e}"))?;
        let tv = total_variation(&got, &want);
        ensure(tv <= POSTERIOR_TOL, format!("case {seed}: total variation {tv:e}"))?;
        worst = worst.max(tv);
    }
    Ok(format!("100 cases, max total variation {worst:.2e}"))
}

fn structural_reversals() -> Verdict {
    let fig7 = refactor(&builtin("fig7"), &["effect_1", "effect_2", "cause"]).map_err(|e| e.to_string())?;
    ensure(fig7.has_arc("effect_1", "effect_2"), "fig7: no effect_1 -> effect_2 arc")?;
    ensure(
        sorted_arcs(&fig7) == arc_set(&[("effect_1", "effect_2"), ("effect_1", "cause"), ("effect_2", "cause")]),
        format!("fig7: arcs {:?}", sorted_arcs(&fig7)),
    )?;

    let fig8 = refactor(&builtin("fig8"), &["effect", "cause_a", "cause_b"]).map_err(|e| e.to_string())?;
    ensure(
        sorted_arcs(&fig8) == arc_set(&[("effect", "cause_a"), ("effect", "cause_b"), ("cause_a", "cause_b")]),
        format!("fig8: arcs {:?}", sorted_arcs(&fig8)),
    )?;

    let order = [
        "xray",
        "frothy_urine",
        "pitting_edema",
        "cardiomegaly",
        "urine_protein",
        "heart_failure",
        "nephrotic_syndrome",
    ];
    let fig9 = refactor(&builtin("fig9"), &order).map_err(|e| e.to_string())?;
    for (from, to) in [
        ("cardiomegaly", "heart_failure"),
        ("pitting_edema", "heart_failure"),
        ("urine_protein", "nephrotic_syndrome"),
        ("pitting_edema", "nephrotic_syndrome"),
        ("heart_failure", "nephrotic_syndrome"),
    ] {
        ensure(fig9.has_arc(from, to), format!("fig9: missing {from} -> {to}"))?;
    }
    for disorder in ["heart_failure", "nephrotic_syndrome"] {
        let children = fig9.children(disorder);
        ensure(
            children.iter().all(|c| *c == "nephrotic_syndrome"),
            format!("fig9: {disorder} still points at findings {children:?}"),
        )?;
    }
    Ok(format!("fig7 {} arcs, fig8 complete, fig9 {} arcs", fig7.arc_count(), fig9.arc_count()))
}

fn deterministic_predecessor() -> Verdict {
    let base = builtin("fig6");
    let subsystem_c = base.node("subsystem_c").unwrap().clone();
    let mut nodes: Vec<NodeSpec> = base.nodes().filter(|n| n.name != "program_output").cloned().collect();
    nodes.push(NodeSpec::deterministic(
        "module_ab",
        ["ok", "faulty"],
        ["subsystem_a", "subsystem_b"],
        vec![0, 1, 1, 1],
    ));
    nodes.push(NodeSpec::deterministic(
        "program_output",
        ["correct", "incorrect"],
        ["module_ab", subsystem_c.name.as_str()],
        vec![0, 1, 1, 1],
    ));
    let extended = Diagram::from_nodes(nodes.clone()).map_err(|e| e.to_string())?;

    let special = reverse_arc(&extended, "module_ab", "program_output").map_err(|e| e.to_string())?;
    ensure(!special.has_arc("program_output", "module_ab"), "special path added program_output -> module_ab")?;
    ensure(special.node("module_ab").unwrap().is_deterministic(), "module_ab is no longer deterministic")?;
    ensure(
        special.arc_count() == extended.arc_count() + 1,
        format!("arc count {} -> {}", extended.arc_count(), special.arc_count()),
    )?;

    let at = nodes.iter().position(|n| n.name == "module_ab").unwrap();
    nodes[at] = nodes[at].as_probabilistic();
    let generic_input = Diagram::from_nodes(nodes).map_err(|e| e.to_string())?;
    let generic = reverse_arc(&generic_input, "module_ab", "program_output").map_err(|e| e.to_string())?;
    let diff = joint_diff(&special, &generic).max(joint_diff(&extended, &special));
    ensure(diff <= JOINT_TOL, format!("special vs generic joint diff {diff:e}"))?;

    let fig5 = reverse_arc(&builtin("fig5"), "programming_error", "computer_output").map_err(|e| e.to_string())?;
    for n in ["programming_error", "computer_output"] {
        ensure(!fig5.node(n).unwrap().is_deterministic(), format!("fig5: {n} is still deterministic"))?;
    }
    Ok(format!("special vs generic max entry diff {diff:.2e}; fig5 endpoints both probabilistic"))
}

fn extension_of_the_conversation() -> Verdict {
    let fig9 = builtin("fig9");
    let summed = sum_out(&fig9, "nephrotic_syndrome").map_err(|e| e.to_string())?;
    let edema = summed.node("pitting_edema").unwrap();
    ensure(
        edema.parents == ["heart_failure"],
        format!("pitting_edema parents {:?}", edema.parents),
    )?;
    let joint = joint_table(&fig9).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for hf in 0..2 {
        let conditioned = joint.condition(&[("heart_failure".to_string(), hf)]).map_err(|e| e.to_string())?;
        let want = conditioned.marginal(&["pitting_edema"]).map_err(|e| e.to_string())?;
        for (v, p) in want.probabilities().iter().enumerate() {
            worst = worst.max((edema.prob(hf, v) - p).abs());
        }
    }
    ensure(worst <= JOINT_TOL, format!("max diff from oracle conditional {worst:e}"))?;
    Ok(format!("P(pitting_edema | heart_failure) max diff {worst:.2e}"))
}

/// Serialized form of one node as it appears in a saved model file.
fn node_json(d: &Diagram, name: &str) -> String {
    let doc: serde_json::Value = serde_json::from_str(&save(d)).unwrap();
    let node = doc["nodes"].as_array().unwrap().iter().find(|n| n["name"] == name).unwrap();
    serde_json::to_string(node).unwrap()
}

fn constant_likelihood() -> Verdict {
    let (a, b) = (builtin("fig10a"), builtin("fig10b"));
    ensure(
        node_json(&a, "symptom") == node_json(&b, "symptom"),
        "symptom tables differ before reversal",
    )?;
    ensure(
        node_json(&a, "disorder") != node_json(&b, "disorder"),
        "priors are identical",
    )?;
    let ra = reverse_arc(&a, "disorder", "symptom").map_err(|e| e.to_string())?;
    let rb = reverse_arc(&b, "disorder", "symptom").map_err(|e| e.to_string())?;
    for n in ["symptom", "disorder"] {
        ensure(
            ra.node(n).unwrap().table != rb.node(n).unwrap().table,
            format!("reversed {n} tables coincide"),
        )?;
    }
    Ok("shared likelihood; both reversed tables patient-specific".into())
}

fn d_separation_soundness() -> Verdict {
    let mut separated = 0;
    let mut worst: f64 = 0.0;
    for seed in 0..100 {
        let (d, _, _) = query_case(seed);
        let joint = joint_table(&d).map_err(|e| e.to_string())?;
        let names: Vec<String> = d.names().map(str::to_string).collect();
        for (i, a) in names.iter().enumerate() {
            for b in &names[i + 1..] {
                let others: Vec<String> = names.iter().filter(|n| *n != a && *n != b).cloned().collect();
                for given in subsets(&others) {
                    if d_separated(&d, a, b, &given).map_err(|e| e.to_string())? {
                        let dep = max_dependence(&joint, a, b, &given);
                        ensure(
                            dep <= POSTERIOR_TOL,
                            format!("case {seed}: {a} _|_ {b} | {given:?} but dependence {dep:e}"),
                        )?;
                        worst = worst.max(dep);
                        separated += 1;
                    }
                }
            }
        }
    }
    ensure(separated > 0, "no separated triples exercised")?;
    Ok(format!("{separated} separated triples, max dependence {worst:.2e}"))
}

fn explaining_away() -> Verdict {
    let d = Diagram::from_nodes(vec![
        NodeSpec::probabilistic("a", ["0", "1"], [], vec![vec![0.9, 0.1]]),
        NodeSpec::probabilistic("b", ["0", "1"], [], vec![vec![0.9, 0.1]]),
        NodeSpec::probabilistic(
            "e",
            ["0", "1"],
            ["a", "b"],
            vec![vec![0.95, 0.05], vec![0.2, 0.8], vec![0.2, 0.8], vec![0.05, 0.95]],
        ),
    ])
    .map_err(|e| e.to_string())?;
    let e1 = Evidence::new().with("e", "1");
    let e1b1 = e1.clone().with("b", "1");
    let (alone, _) = posterior(&d, "a", &e1).map_err(|e| e.to_string())?;
    let (both, _) = posterior(&d, "a", &e1b1).map_err(|e| e.to_string())?;
    for (got, ev) in [(&alone, &e1), (&both, &e1b1)] {
        let want = oracle_posterior(&d, "a", ev).map_err(|e| e.to_string())?;
        let tv = total_variation(got, &want);
        ensure(tv <= POSTERIOR_TOL, format!("posterior off the oracle by {tv:e}"))?;
    }
    ensure(
        both[1] < alone[1],
        format!("P(a=1 | e=1, b=1) = {} is not below P(a=1 | e=1) = {}", both[1], alone[1]),
    )?;
    Ok(format!("P(a=1 | e=1) = {:.6}, P(a=1 | e=1, b=1) = {:.6}", alone[1], both[1]))
}

fn order_matters() -> Verdict {
    let text = std::fs::read_to_string(model_dir().join("order_gap.json")).map_err(|e| e.to_string())?;
    let d = load(&text).map_err(|e| e.to_string())?;
    ensure(
        d == gen_random(4, 2, 0.6, 0.0, 8).unwrap(),
        "committed model no longer matches its generator seed",
    )?;
    let evidence = Evidence::new().with("n3", "s1");
    let ranked = compare_orders(&d, "n0", &evidence, OrderMode::Exhaustive).map_err(|e| e.to_string())?;
    let want = oracle_posterior(&d, "n0", &evidence).map_err(|e| e.to_string())?;
    for (plan, _) in &ranked {
        let (last, replayed) = execute_plan(&d, plan).map_err(|e| e.to_string())?;
        ensure(replayed == plan.steps, "plan did not replay")?;
        let node = last.node("n0").unwrap();
        let got: Vec<f64> = (0..node.cardinality()).map(|v| node.prob(0, v)).collect();
        ensure(total_variation(&got, &want) <= POSTERIOR_TOL, "a ranked plan answers wrongly")?;
    }
    let best = ranked.first().map(|(p, _)| p.total_added_arcs).unwrap_or(0);
    let worst = ranked.iter().map(|(p, _)| p.total_added_arcs).max().unwrap_or(0);
    ensure(worst > best, format!("all plans add {best} arcs"))?;
    Ok(format!("{} legal plans, added arcs range {best}..={worst}", ranked.len()))
}

fn model_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../docs/models")
}

fn cli_query(file: &std::path::Path, target: &str, evidence: &Evidence) -> std::result::Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_infdiag"))
        .arg("query")
        .arg(file)
        .args(["--target", target, "--evidence", &evidence.to_string(), "--format", "json"])
        .output()
        .map_err(|e| e.to_string())?;
    ensure(
        out.status.success(),
        format!("exit {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr)),
    )?;
    Ok(out.stdout)
}

fn cli_end_to_end() -> Verdict {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance-cli");
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for seed in 0..100 {
        let (d, target, evidence) = query_case(seed);
        let file = dir.join(format!("case_{seed}.json"));
        std::fs::write(&file, save(&d)).map_err(|e| e.to_string())?;
        let first = cli_query(&file, &target, &evidence).map_err(|e| format!("case {seed}: {e}"))?;
        let second = cli_query(&file, &target, &evidence).map_err(|e| format!("case {seed}: {e}"))?;
        ensure(first == second, format!("case {seed}: output differs between runs"))?;

        let doc: serde_json::Value = serde_json::from_slice(&first).map_err(|e| e.to_string())?;
        let got: Vec<f64> = doc["distribution"]
            .as_array()
            .ok_or("no distribution")?
            .iter()
            .map(|o| o["probability"].as_f64().unwrap())
            .collect();
        let want = oracle_posterior(&d, &target, &evidence).map_err(|e| e.to_string())?;
        let tv = total_variation(&got, &want);
        ensure(tv <= POSTERIOR_TOL, format!("case {seed}: total variation {tv:e}"))?;
        worst = worst.max(tv);
    }
    Ok(format!("100 saved models, byte-stable output, max total variation {worst:.2e}"))
}

fn main() -> ExitCode {
    let criteria: [(&str, Check); 11] = [
        ("joint preserved by every legal reversal (1e-12)", joint_preservation),
        ("all 3! factorizations agree (1e-12)", all_factorizations),
        ("posterior matches oracle (TV 1e-10)", posterior_correctness),
        ("reversal creates the expected dependencies", structural_reversals),
        ("deterministic predecessor substitution", deterministic_predecessor),
        ("summing out a disorder matches the oracle conditional (1e-12)", extension_of_the_conversation),
        ("shared likelihood becomes patient-specific after reversal", constant_likelihood),
        ("d-separation is sound (1e-10)", d_separation_soundness),
        ("explaining away", explaining_away),
        ("elimination order changes the arcs added", order_matters),
        ("CLI query reproduces the oracle, byte-stable (TV 1e-10)", cli_end_to_end),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("[PASS] {:>2}. {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {:>2}. {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
