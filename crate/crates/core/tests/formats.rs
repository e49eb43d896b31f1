mod common;

use common::*;
use sgsynth::io::{graph_to_json, parse_graph, parse_ruleset, parse_schedule, ruleset_to_json, schedule_to_json};
use sgsynth::rewrite::RewriteSystem;
use sgsynth::signature::{parse_signature, parse_valuation};
use sgsynth::synth::{run_synthesis, SynthesisOptions, SynthesisParams};
use sgsynth::tensor::{evaluate, Tensor};

#[test]
fn graphs_survive_json() {
    let (sig, _) = ghzw();
    let mut r = rng(41);
    for _ in 0..500 {
        let g = expand_wires(&random_graph(&sig, &mut r, 4, 4), &mut r);
        let text = graph_to_json(&g, &sig);
        let back = parse_graph(&text, &sig).unwrap();
        assert_eq!(back, g);
        assert_eq!(graph_to_json(&back, &sig), text);
    }
}

#[test]
fn synthesised_rulesets_survive_json() {
    let (sig, val) = ghzw();
    let sched = [SynthesisParams::new(0, 0, 2, 2), SynthesisParams::new(1, 1, 2, 2)];
    let s = run_synthesis(&sched, &RewriteSystem::new(), &sig, &val, &SynthesisOptions::default()).system;
    assert!(s.len() > 10);
    let text = ruleset_to_json(&s, &sig);
    let back = parse_ruleset(&text, &sig).unwrap();
    assert_eq!(back, s);
    assert_eq!(ruleset_to_json(&back, &sig), text);
}

#[test]
fn project_files_survive_json() {
    let (sig, val) = ghzw();
    let sig2 = parse_signature(&sig.to_json()).unwrap();
    assert_eq!(sig2.to_json(), sig.to_json());
    let val2 = parse_valuation(&val.to_json(&sig), &sig2).unwrap();
    for f in sig.morphism_ids() {
        assert_eq!(val.tensor(f), val2.tensor(f));
    }
    let runs = parse_schedule(&std::fs::read_to_string(project_dir().join("schedule.json")).unwrap()).unwrap();
    assert_eq!(runs.len(), 10);
    assert_eq!(parse_schedule(&schedule_to_json(&runs)).unwrap(), runs);
}

#[test]
fn tensors_survive_json() {
    let (sig, val) = ghzw();
    let mut r = rng(42);
    for _ in 0..100 {
        let t = evaluate(&random_graph(&sig, &mut r, 3, 2), &sig, &val).unwrap();
        let back: Tensor = serde_json::from_str(&serde_json::to_string(&t).unwrap()).unwrap();
        assert_eq!(back, t);
    }
    assert!(serde_json::from_str::<Tensor>(r#"{"input_dims":[2],"output_dims":[],"entries":[[1,0]]}"#).is_err());
}

#[test]
fn malformed_inputs_are_rejected() {
    let (sig, _) = ghzw();
    assert!(parse_signature(r#"{"objects":[{"name":"q","dimension":2}],"morphisms":[{"name":"f","dom":["r"],"cod":[]}]}"#).is_err());
    assert!(parse_valuation(r#"{"ghz_mul": [[1, 0]]}"#, &sig).is_err());
    assert!(parse_schedule(r#"{"runs":[{"m":1}]}"#).is_err());
    assert!(parse_ruleset("{}", &sig).is_err());
}
