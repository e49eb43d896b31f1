mod common;

use common::*;
use rand::seq::SliceRandom;
use sgsynth::io::parse_schedule;
use sgsynth::iso::canonical_form;
use sgsynth::rewrite::{check_matching, find_matchings, is_redex, RewriteSystem};
use sgsynth::synth::{enum_irreducible, run_synthesis, sort_schedule, Mode, SynthesisOptions, SynthesisParams};

#[test]
fn smallest_sizes_match_brute_enumeration() {
    let (sig, _) = ghzw();
    let s = RewriteSystem::new();
    for m in 0..=1 {
        for n in 0..=1 {
            for p in 0..=1 {
                for q in 0..=1 {
                    let got = enum_irreducible(&s, &sig, SynthesisParams::new(m, n, p, q), Mode::RedexEliminating);
                    let want = brute_enumerate(&sig, m, n, p, q);
                    assert_eq!(got.len(), want.len(), "size ({m},{n},{p},{q})");
                    for w in &want {
                        assert_eq!(got.iter().filter(|g| brute_isomorphic(g, w)).count(), 1, "({m},{n},{p},{q})");
                    }
                }
            }
        }
    }
}

#[test]
fn two_plug_sizes_match_brute_enumeration() {
    let (sig, _) = ghzw();
    let s = RewriteSystem::new();
    for (m, n, p, q) in [(0, 0, 2, 2), (1, 1, 2, 2), (0, 1, 2, 2)] {
        let got = enum_irreducible(&s, &sig, SynthesisParams::new(m, n, p, q), Mode::Naive);
        let want = brute_enumerate(&sig, m, n, p, q);
        assert_eq!(got.len(), want.len(), "size ({m},{n},{p},{q})");
        for w in &want {
            assert!(got.iter().any(|g| brute_isomorphic(g, w)));
        }
    }
}

#[test]
fn enumeration_has_no_duplicates() {
    let (sig, _) = ghzw();
    let got = enum_irreducible(&RewriteSystem::new(), &sig, SynthesisParams::new(1, 1, 2, 2), Mode::Naive);
    let mut forms: Vec<_> = got.iter().map(canonical_form).collect();
    forms.sort();
    forms.dedup();
    assert_eq!(forms.len(), got.len());
}

#[test]
fn matchings_avoiding_the_plugged_wire_lift() {
    let (sig, _) = ghzw();
    let mut r = rng(17);
    let mut lifted = 0;
    for _ in 0..1500 {
        let g = random_graph(&sig, &mut r, 4, 3);
        let pairs: Vec<_> = g
            .inputs()
            .iter()
            .flat_map(|&x| g.outputs().iter().map(move |&y| (x, y)))
            .filter(|&(x, y)| g.wire_type(x) == g.wire_type(y))
            .collect();
        let Some(&(x, y)) = pairs.choose(&mut r) else { continue };
        let h = g.plug(x, y).unwrap();
        let l = random_graph(&sig, &mut r, 1, 1);
        for m in find_matchings(&l, &h, None) {
            if m.image_contains(y) {
                continue;
            }
            check_matching(&l, &g, &m).unwrap();
            lifted += 1;
        }
    }
    assert!(lifted > 100, "only {lifted} matchings exercised");
}

#[test]
fn local_guard_agrees_with_global_redex_check() {
    let (sig, val) = ghzw();
    let mut runs = parse_schedule(&std::fs::read_to_string(project_dir().join("schedule.json")).unwrap()).unwrap();
    sort_schedule(&mut runs);
    let res = run_synthesis(&runs, &RewriteSystem::new(), &sig, &val, &SynthesisOptions::default());
    for (k, &params) in runs.iter().enumerate() {
        let before: Vec<_> = res.system.rules().iter().filter(|r| r.run.is_some_and(|i| i < k)).cloned().collect();
        let s = RewriteSystem::from_rules(before);
        for (g, _, _) in &res.runs[k].graphs {
            assert!(!is_redex(&s, g), "run {k} saved a redex");
        }
        let naive = enum_irreducible(&s, &sig, params, Mode::Naive);
        let mut want: Vec<_> = naive.iter().filter(|g| !is_redex(&s, g)).map(canonical_form).collect();
        let mut got: Vec<_> = res.runs[k].graphs.iter().map(|(g, _, _)| canonical_form(g)).collect();
        want.sort();
        got.sort();
        assert_eq!(got, want, "run {k}");
    }
}
