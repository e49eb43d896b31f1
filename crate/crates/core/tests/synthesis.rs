mod common;

use std::collections::BTreeMap;
use std::sync::OnceLock;

use common::*;
use sgsynth::io::{parse_schedule, ruleset_to_json};
use sgsynth::iso::is_isomorphic;
use sgsynth::rewrite::{normalize, RewriteSystem};
use sgsynth::synth::{kappa, run_synthesis, sort_schedule, SynthesisOptions, SynthesisParams, SynthesisResult};
use sgsynth::tensor::evaluate;

fn default_run() -> &'static SynthesisResult {
    static RES: OnceLock<SynthesisResult> = OnceLock::new();
    RES.get_or_init(|| {
        let (sig, val) = ghzw();
        let mut runs = parse_schedule(&std::fs::read_to_string(project_dir().join("schedule.json")).unwrap()).unwrap();
        sort_schedule(&mut runs);
        run_synthesis(&runs, &RewriteSystem::new(), &sig, &val, &SynthesisOptions { workers: 4, ..Default::default() })
    })
}

#[test]
fn minted_rules_hold_under_brute_evaluation() {
    let (sig, val) = ghzw();
    let res = default_run();
    assert!(!res.system.is_empty());
    for (i, r) in res.system.rules().iter().enumerate() {
        let l = brute_evaluate(r.rule.lhs(), &sig, &val);
        let rhs = brute_evaluate(r.rule.rhs(), &sig, &val).scale(r.rule.scalar());
        assert!(max_diff(&l, &rhs) <= 1e-9, "rule {i}");
    }
}

#[test]
fn reductions_decrease_the_ordering() {
    let res = default_run();
    assert_eq!(res.system.congruence_count(), 0);
    for (i, r) in res.system.reductions() {
        assert!(kappa(r.lhs()) > kappa(r.rhs()), "rule {i}");
    }
}

#[test]
fn equivalent_graphs_share_a_normal_form() {
    let (sig, val) = ghzw();
    let res = default_run();
    let mut groups: BTreeMap<_, Vec<_>> = BTreeMap::new();
    for run in &res.runs {
        for (g, t, k) in &run.graphs {
            let n = normalize(&res.system, g).unwrap();
            let nt = evaluate(&n.graph, &sig, &val).unwrap().scale(n.scalar);
            assert!(t.approx_eq(&nt, 1e-9), "normalisation changed the value");
            groups.entry(k.clone()).or_default().push(n.graph);
        }
    }
    for members in groups.values() {
        for m in &members[1..] {
            assert!(is_isomorphic(&members[0], m));
        }
    }
}

#[test]
fn worker_count_does_not_change_the_output() {
    let (sig, val) = ghzw();
    let sched = [SynthesisParams::new(0, 0, 2, 2), SynthesisParams::new(1, 1, 2, 2), SynthesisParams::new(0, 2, 2, 2)];
    let go = |workers| {
        let opts = SynthesisOptions { workers, compare: true, ..Default::default() };
        let res = run_synthesis(&sched, &RewriteSystem::new(), &sig, &val, &opts);
        let reports: Vec<_> = res.reports.iter().map(|r| (r.enumerated, r.reductions, r.naive_reductions)).collect();
        (ruleset_to_json(&res.system, &sig), reports)
    };
    let a = go(1);
    assert_eq!(a, go(8));
    assert_eq!(a, go(1));
}
