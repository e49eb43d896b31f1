mod common;

use std::collections::BTreeMap;

use common::*;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use sgsynth::graph::{Edge, StringGraph, VertexId};
use sgsynth::iso::{canonical_form, is_isomorphic, similar_pluggings};

/// Renames vertices by a random injection, shuffles the edge list and
/// permutes the boundary order.
fn scramble(g: &StringGraph, r: &mut ChaCha8Rng) -> StringGraph {
    let mut ids: Vec<u32> = (0..g.vertex_count() as u32 * 3).collect();
    ids.shuffle(r);
    let map: BTreeMap<VertexId, VertexId> = g.vertices().zip(ids).map(|((v, _), i)| (v, VertexId(i))).collect();
    let vertices = g.vertices().map(|(v, k)| (map[&v], k)).collect();
    let mut edges: Vec<Edge> = g.edges().iter().map(|e| Edge { src: map[&e.src], tgt: map[&e.tgt], ..*e }).collect();
    edges.shuffle(r);
    let mut inputs: Vec<VertexId> = g.inputs().iter().map(|v| map[v]).collect();
    let mut outputs: Vec<VertexId> = g.outputs().iter().map(|v| map[v]).collect();
    inputs.shuffle(r);
    outputs.shuffle(r);
    StringGraph::from_parts(vertices, edges, inputs, outputs)
}

#[test]
fn canonical_form_is_invariant_under_renaming() {
    let (sig, _) = ghzw();
    let mut r = rng(21);
    for _ in 0..500 {
        let g = random_graph(&sig, &mut r, 5, 5);
        let h = scramble(&g, &mut r);
        h.validate(&sig).unwrap();
        assert_eq!(canonical_form(&g), canonical_form(&h));
        assert!(is_isomorphic(&g, &h));
    }
}

#[test]
fn canonical_form_decides_isomorphism() {
    let (sig, _) = ghzw();
    let mut r = rng(22);
    let mut equal = 0;
    for _ in 0..3000 {
        let n = r.gen_range(1..=3);
        let g = random_graph(&sig, &mut r, n, 3);
        let h = random_graph(&sig, &mut r, n, 3);
        let same = brute_isomorphic(&g, &h);
        assert_eq!(canonical_form(&g) == canonical_form(&h), same, "{g:?}\n{h:?}");
        assert_eq!(is_isomorphic(&g, &h), same);
        equal += usize::from(same);
    }
    assert!(equal > 50, "only {equal} isomorphic pairs");
}

#[test]
fn similar_pluggings_give_isomorphic_results() {
    let (sig, _) = ghzw();
    let mut r = rng(23);
    for _ in 0..300 {
        let g = random_graph(&sig, &mut r, 4, 1);
        let pairs: Vec<_> = g
            .inputs()
            .iter()
            .flat_map(|&x| g.outputs().iter().map(move |&y| (x, y)))
            .filter(|&(x, y)| g.wire_type(x) == g.wire_type(y))
            .collect();
        let Some(&(x, y)) = pairs.choose(&mut r) else { continue };
        let a = g.plug(x, y).unwrap();
        let sim = similar_pluggings(&g, (x, y)).unwrap();
        assert!(sim.contains(&(x, y)));
        for (x2, y2) in sim {
            assert!(brute_isomorphic(&a, &g.plug(x2, y2).unwrap()));
        }
    }
}
