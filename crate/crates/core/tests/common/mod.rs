//! Independent oracles and generators shared by the integration tests.
//!
//! Nothing here goes through the library's contraction, canonical form or
//! matcher: each check is recomputed from the raw vertex and edge lists.

#![allow(dead_code, clippy::too_many_arguments)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sgsynth::graph::{Edge, Port, StringGraph, VertexId, VertexKind};
use sgsynth::signature::{bare_wire, generator_graph_by_id, parse_signature, parse_valuation, MorphismId, Signature, Valuation};
use sgsynth::tensor::{compose_oracle, Matrix, Tensor};

pub fn project_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../projects/ghzw")
}

pub fn ghzw() -> (Signature, Valuation) {
    let dir = project_dir();
    let sig = parse_signature(&std::fs::read_to_string(dir.join("signature.json")).unwrap()).unwrap();
    let val = parse_valuation(&std::fs::read_to_string(dir.join("valuation.json")).unwrap(), &sig).unwrap();
    (sig, val)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random wire-reduced graph: a disjoint union of up to `max_nodes`
/// generators and a few bare wires, followed by up to `max_plugs` random
/// type-compatible pluggings.
pub fn random_graph(sig: &Signature, rng: &mut ChaCha8Rng, max_nodes: usize, max_plugs: usize) -> StringGraph {
    let morphisms: Vec<_> = sig.morphism_ids().collect();
    let objects: Vec<_> = sig.object_ids().collect();
    let mut g = StringGraph::new();
    for _ in 0..rng.gen_range(1..=max_nodes.max(1)) {
        g = g.disjoint_union(&generator_graph_by_id(sig, *morphisms.choose(rng).unwrap()));
    }
    for _ in 0..rng.gen_range(0..=1) {
        g = g.disjoint_union(&bare_wire(*objects.choose(rng).unwrap()));
    }
    for _ in 0..rng.gen_range(0..=max_plugs) {
        let pairs: Vec<(VertexId, VertexId)> = g
            .inputs()
            .iter()
            .flat_map(|&x| g.outputs().iter().map(move |&y| (x, y)))
            .filter(|&(x, y)| g.wire_type(x) == g.wire_type(y))
            .collect();
        let Some(&(x, y)) = pairs.choose(rng) else { break };
        g = g.plug(x, y).unwrap();
    }
    g
}

/// Subdivides `k` randomly chosen edges.
pub fn random_subdivisions(g: &StringGraph, rng: &mut ChaCha8Rng, k: usize) -> StringGraph {
    let mut h = g.clone();
    for _ in 0..k {
        // a graph of bare wires only has no edges to split
        if h.edge_count() == 0 {
            break;
        }
        let idx = rng.gen_range(0..h.edge_count());
        h = h.subdivide(idx).unwrap();
    }
    h
}

/// Replaces every wire-vertex by a chain of one to three wire-vertices
/// without touching node ports; isolated wires gain an internal edge.
pub fn expand_wires(g: &StringGraph, rng: &mut ChaCha8Rng) -> StringGraph {
    let mut h = g.clone();
    let mut i = 0;
    while i < h.edge_count() {
        if rng.gen_bool(0.4) {
            h = h.subdivide(i).unwrap();
        }
        i += 1;
    }
    h
}

// ---------------------------------------------------------------------------
// evaluation by summing over all index assignments

/// Maps every wire-vertex to the index of its wire (maximal chain).
fn wire_classes(g: &StringGraph) -> (BTreeMap<VertexId, usize>, Vec<usize>) {
    // plain union-find over wire-to-wire edges
    let ws: Vec<VertexId> = g.vertices().filter(|(_, k)| k.is_wire()).map(|(v, _)| v).collect();
    let mut parent: BTreeMap<VertexId, VertexId> = ws.iter().map(|&v| (v, v)).collect();
    fn find(p: &mut BTreeMap<VertexId, VertexId>, v: VertexId) -> VertexId {
        let u = p[&v];
        if u == v {
            v
        } else {
            let r = find(p, u);
            p.insert(v, r);
            r
        }
    }
    for e in g.edges() {
        if e.src_port == Port::Wire && e.tgt_port == Port::Wire {
            let (a, b) = (find(&mut parent, e.src), find(&mut parent, e.tgt));
            if a != b {
                parent.insert(a, b);
            }
        }
    }
    let mut ids = BTreeMap::new();
    let mut class = BTreeMap::new();
    let mut dims_of_root = Vec::new();
    for &w in &ws {
        let r = find(&mut parent, w);
        let next = ids.len();
        let id = *ids.entry(r).or_insert(next);
        if id == dims_of_root.len() {
            dims_of_root.push(w);
        }
        class.insert(w, id);
    }
    (class, dims_of_root.into_iter().map(|v| v.0 as usize).collect())
}

/// Evaluates `g` by brute-force summation over every assignment of basis
/// indices to its wires. Layout: row-major over outputs, then inputs.
pub fn brute_evaluate(g: &StringGraph, sig: &Signature, val: &Valuation) -> Tensor {
    let (class, reps) = wire_classes(g);
    let dims: Vec<usize> =
        reps.iter().map(|&r| match g.kind(VertexId(r as u32)).unwrap() {
            VertexKind::Wire(t) => sig.dimension(t),
            VertexKind::Node(_) => unreachable!(),
        })
        .collect();
    // for each node: its tensor and the wire index on each input and output port
    let mut nodes = Vec::new();
    for (n, k) in g.vertices() {
        let VertexKind::Node(f) = k else { continue };
        let mt = sig.morphism(f).unwrap();
        let mut ins = vec![usize::MAX; mt.dom.len()];
        let mut outs = vec![usize::MAX; mt.cod.len()];
        for e in g.edges() {
            if e.tgt == n {
                if let Port::In(i) = e.tgt_port {
                    ins[i as usize] = class[&e.src];
                }
            }
            if e.src == n {
                if let Port::Out(j) = e.src_port {
                    outs[j as usize] = class[&e.tgt];
                }
            }
        }
        nodes.push((val.tensor(f).clone(), ins, outs));
    }
    let in_w: Vec<usize> = g.inputs().iter().map(|v| class[v]).collect();
    let out_w: Vec<usize> = g.outputs().iter().map(|v| class[v]).collect();
    let in_dims: Vec<usize> = in_w.iter().map(|&w| dims[w]).collect();
    let out_dims: Vec<usize> = out_w.iter().map(|&w| dims[w]).collect();
    let mut result = Tensor::zeros(in_dims.clone(), out_dims.clone());
    let mut entries = result.entries().to_vec();
    let total: usize = dims.iter().product();
    let mut assign = vec![0usize; dims.len()];
    for mut code in 0..total {
        for (i, &d) in dims.iter().enumerate().rev() {
            assign[i] = code % d;
            code /= d;
        }
        let mut prod = Complex64::new(1.0, 0.0);
        for (t, ins, outs) in &nodes {
            let mut idx = 0;
            for (&w, &d) in outs.iter().zip(t.output_dims()) {
                idx = idx * d + assign[w];
            }
            for (&w, &d) in ins.iter().zip(t.input_dims()) {
                idx = idx * d + assign[w];
            }
            prod *= t.entries()[idx];
            if prod == Complex64::new(0.0, 0.0) {
                break;
            }
        }
        let mut idx = 0;
        for (&w, &d) in out_w.iter().zip(&out_dims) {
            idx = idx * d + assign[w];
        }
        for (&w, &d) in in_w.iter().zip(&in_dims) {
            idx = idx * d + assign[w];
        }
        entries[idx] += prod;
    }
    result = Tensor::new(in_dims, out_dims, entries).unwrap();
    result
}

pub fn max_diff(a: &Tensor, b: &Tensor) -> f64 {
    assert_eq!(a.input_dims(), b.input_dims());
    assert_eq!(a.output_dims(), b.output_dims());
    a.entries().iter().zip(b.entries()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

// ---------------------------------------------------------------------------
// isomorphism by backtracking

type EdgeKey = (VertexId, Port, VertexId, Port);

fn edge_set(g: &StringGraph) -> BTreeMap<EdgeKey, usize> {
    let mut m = BTreeMap::new();
    for e in g.edges() {
        *m.entry((e.src, e.src_port, e.tgt, e.tgt_port)).or_insert(0) += 1;
    }
    m
}

fn signature_of(g: &StringGraph, v: VertexId) -> (VertexKind, usize, usize, bool, bool) {
    let ins = g.edges().iter().filter(|e| e.tgt == v).count();
    let outs = g.edges().iter().filter(|e| e.src == v).count();
    (g.kind(v).unwrap(), ins, outs, g.is_input(v), g.is_output(v))
}

/// Isomorphism respecting kinds, ports and the input/output sets (but not
/// their order), found by exhaustive backtracking.
pub fn brute_isomorphic(g: &StringGraph, h: &StringGraph) -> bool {
    if g.vertex_count() != h.vertex_count() || g.edge_count() != h.edge_count() {
        return false;
    }
    let gv: Vec<VertexId> = g.vertices().map(|(v, _)| v).collect();
    let hv: Vec<VertexId> = h.vertices().map(|(v, _)| v).collect();
    let ge = edge_set(g);
    let he = edge_set(h);
    let gs: BTreeMap<VertexId, _> = gv.iter().map(|&v| (v, signature_of(g, v))).collect();
    let hs: BTreeMap<VertexId, _> = hv.iter().map(|&v| (v, signature_of(h, v))).collect();
    fn rec(
        k: usize,
        gv: &[VertexId],
        hv: &[VertexId],
        gs: &BTreeMap<VertexId, (VertexKind, usize, usize, bool, bool)>,
        hs: &BTreeMap<VertexId, (VertexKind, usize, usize, bool, bool)>,
        ge: &BTreeMap<EdgeKey, usize>,
        he: &BTreeMap<EdgeKey, usize>,
        map: &mut BTreeMap<VertexId, VertexId>,
        used: &mut BTreeSet<VertexId>,
    ) -> bool {
        if k == gv.len() {
            return ge.iter().all(|(&(a, p, b, q), &c)| he.get(&(map[&a], p, map[&b], q)) == Some(&c));
        }
        let v = gv[k];
        for &u in hv {
            if used.contains(&u) || gs[&v] != hs[&u] {
                continue;
            }
            map.insert(v, u);
            // edges between v and already mapped vertices must exist in h
            let ok = ge.iter().all(|(&(a, p, b, q), &c)| {
                if (a == v || b == v) && map.contains_key(&a) && map.contains_key(&b) {
                    he.get(&(map[&a], p, map[&b], q)) == Some(&c)
                } else {
                    true
                }
            });
            if ok {
                used.insert(u);
                if rec(k + 1, gv, hv, gs, hs, ge, he, map, used) {
                    return true;
                }
                used.remove(&u);
            }
            map.remove(&v);
        }
        false
    }
    rec(0, &gv, &hv, &gs, &hs, &ge, &he, &mut BTreeMap::new(), &mut BTreeSet::new())
}

// ---------------------------------------------------------------------------
// matching of wire-reduced graphs, by exhaustive node maps

fn port_wire(g: &StringGraph, n: VertexId, p: Port) -> VertexId {
    g.edges()
        .iter()
        .find_map(|e| match p {
            Port::In(_) if e.tgt == n && e.tgt_port == p => Some(e.src),
            Port::Out(_) if e.src == n && e.src_port == p => Some(e.tgt),
            _ => None,
        })
        .unwrap()
}

fn is_circle(g: &StringGraph, w: VertexId) -> bool {
    g.edges().iter().any(|e| e.src == w && e.tgt == w)
}

/// Number of matchings of a wire-reduced pattern `l` on a wire-reduced host
/// `g`, counted as distinct maps of node-vertices and wire-vertices. A
/// pattern wire between two nodes must land on the host wire joining the
/// image ports; a pattern wire hanging off one node lands on the host wire
/// at the image port; wires with no node end (bare wires, circles) take
/// host wires not otherwise used, circles only on circles.
pub fn brute_count_matchings(l: &StringGraph, g: &StringGraph) -> usize {
    let ln: Vec<VertexId> = l.vertices().filter(|(_, k)| k.is_node()).map(|(v, _)| v).collect();
    let gn: Vec<VertexId> = g.vertices().filter(|(_, k)| k.is_node()).map(|(v, _)| v).collect();
    let lw: Vec<VertexId> = l.vertices().filter(|(_, k)| k.is_wire()).map(|(v, _)| v).collect();
    let gw: Vec<VertexId> = g.vertices().filter(|(_, k)| k.is_wire()).map(|(v, _)| v).collect();
    let mut total = 0;
    let mut map = Vec::new();
    fn nodes(
        l: &StringGraph,
        g: &StringGraph,
        ln: &[VertexId],
        gn: &[VertexId],
        lw: &[VertexId],
        gw: &[VertexId],
        map: &mut Vec<VertexId>,
        total: &mut usize,
    ) {
        if map.len() == ln.len() {
            let f: BTreeMap<VertexId, VertexId> = ln.iter().copied().zip(map.iter().copied()).collect();
            // attached pattern wires
            let mut taken = BTreeSet::new();
            let mut free = Vec::new();
            for &w in lw {
                let src = l.edges().iter().find(|e| e.tgt == w && e.src != w && l.kind(e.src).unwrap().is_node());
                let tgt = l.edges().iter().find(|e| e.src == w && e.tgt != w && l.kind(e.tgt).unwrap().is_node());
                let a = src.map(|e| port_wire(g, f[&e.src], e.src_port));
                let b = tgt.map(|e| port_wire(g, f[&e.tgt], e.tgt_port));
                match (a, b) {
                    (Some(a), Some(b)) if a != b => return,
                    (Some(h), _) | (_, Some(h)) => {
                        taken.insert(h);
                    }
                    (None, None) => free.push(w),
                }
            }
            *total += free_wires(l, g, &free, gw, &mut taken);
            return;
        }
        let v = ln[map.len()];
        for &u in gn {
            if map.contains(&u) || l.kind(v) != g.kind(u) {
                continue;
            }
            map.push(u);
            nodes(l, g, ln, gn, lw, gw, map, total);
            map.pop();
        }
    }
    fn free_wires(l: &StringGraph, g: &StringGraph, free: &[VertexId], gw: &[VertexId], taken: &mut BTreeSet<VertexId>) -> usize {
        let Some((&w, rest)) = free.split_first() else { return 1 };
        let mut n = 0;
        for &h in gw {
            if taken.contains(&h) || l.kind(w) != g.kind(h) || (is_circle(l, w) && !is_circle(g, h)) {
                continue;
            }
            taken.insert(h);
            n += free_wires(l, g, rest, gw, taken);
            taken.remove(&h);
        }
        n
    }
    nodes(l, g, &ln, &gn, &lw, &gw, &mut map, &mut total);
    total
}

// ---------------------------------------------------------------------------
// enumeration by trying every plugging sequence

/// All graphs with `m` inputs and `n` outputs obtained from disjoint unions
/// of generators and bare wires (at most `q` node-vertices) by `p <= pmax`
/// pluggings, one per isomorphism class.
pub fn brute_enumerate(sig: &Signature, m: usize, n: usize, pmax: usize, q: usize) -> Vec<StringGraph> {
    let mut pieces: Vec<(StringGraph, usize, usize, usize)> = Vec::new();
    for o in sig.object_ids() {
        pieces.push((bare_wire(o), 1, 1, 0));
    }
    for f in sig.morphism_ids() {
        let mt = sig.morphism(f).unwrap();
        pieces.push((generator_graph_by_id(sig, f), mt.dom.len(), mt.cod.len(), 1));
    }
    let mut found: Vec<StringGraph> = Vec::new();
    let mut add = |g: StringGraph| {
        if !found.iter().any(|h| brute_isomorphic(h, &g)) {
            found.push(g);
        }
    };
    for p in 0..=pmax {
        // every multiset of pieces with the right boundary
        let mut bases = Vec::new();
        fn multisets(
            pieces: &[(StringGraph, usize, usize, usize)],
            from: usize,
            acc: StringGraph,
            left: (usize, usize, usize),
            out: &mut Vec<StringGraph>,
        ) {
            if left.0 == 0 && left.1 == 0 {
                out.push(acc.clone());
            }
            for i in from..pieces.len() {
                let (ref g, a, b, c) = pieces[i];
                if a <= left.0 && b <= left.1 && c <= left.2 {
                    multisets(pieces, i, acc.disjoint_union(g), (left.0 - a, left.1 - b, left.2 - c), out);
                }
            }
        }
        multisets(&pieces, 0, StringGraph::new(), (m + p, n + p, q), &mut bases);
        for b in bases {
            let mut frontier = vec![b];
            for _ in 0..p {
                let mut next = Vec::new();
                for g in &frontier {
                    for &x in g.inputs() {
                        for &y in g.outputs() {
                            if g.wire_type(x) == g.wire_type(y) {
                                next.push(g.plug(x, y).unwrap());
                            }
                        }
                    }
                }
                frontier = next;
            }
            for g in frontier {
                add(g);
            }
        }
    }
    found
}

// ---------------------------------------------------------------------------
// ladders: layers `id^a ⊗ f ⊗ id^b` composed in sequence

/// Appends one layer to a ladder whose open ends are `ends`.
fn add_layer(sig: &Signature, g: &mut StringGraph, ends: &mut Vec<VertexId>, f: MorphismId, a: usize) {
    let mt = sig.morphism(f).unwrap().clone();
    let n = g.add_node(f);
    for (i, w) in ends.drain(a..a + mt.dom.len()).collect::<Vec<_>>().into_iter().enumerate() {
        g.add_edge(Edge::into_node(w, n, i as u16));
    }
    let outs: Vec<VertexId> = mt
        .cod
        .iter()
        .enumerate()
        .map(|(j, &t)| {
            let w = g.add_wire(t);
            g.add_edge(Edge::from_node(n, j as u16, w));
            w
        })
        .collect();
    ends.splice(a..a, outs);
}

pub fn matrix_diff(a: &Matrix, b: &Matrix) -> f64 {
    a.data.iter().zip(&b.data).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Calls `f` with every ladder of one to `depth` generators over a single
/// object of dimension 2 whose width never exceeds `width`, together with
/// its value as a product of Kronecker-padded matrices.
pub fn for_each_ladder(sig: &Signature, val: &Valuation, depth: usize, width: usize, f: &mut dyn FnMut(StringGraph, Matrix)) {
    fn rec(
        sig: &Signature,
        val: &Valuation,
        depth: usize,
        max: usize,
        start: usize,
        cur: usize,
        steps: &mut Vec<(MorphismId, usize)>,
        f: &mut dyn FnMut(StringGraph, Matrix),
    ) {
        if !steps.is_empty() {
            let q = sig.objects()[0].clone();
            let q = sig.object_id(&q.name).unwrap();
            let mut g = StringGraph::new();
            let inputs: Vec<VertexId> = (0..start).map(|_| g.add_wire(q)).collect();
            let mut ends = inputs.clone();
            let mut ms = Vec::new();
            for &(m, a) in steps.iter() {
                let b = ends.len() - a - sig.morphism(m).unwrap().dom.len();
                add_layer(sig, &mut g, &mut ends, m, a);
                let layer = Matrix::identity(1 << a).kron(&Matrix::from_tensor(val.tensor(m))).kron(&Matrix::identity(1 << b));
                ms.push(layer);
            }
            g.set_boundary(inputs, ends);
            ms.reverse();
            f(g, compose_oracle(&ms).unwrap());
        }
        if steps.len() == depth {
            return;
        }
        for m in sig.morphism_ids() {
            let mt = sig.morphism(m).unwrap();
            let (k, l) = (mt.dom.len(), mt.cod.len());
            if k > cur || cur - k + l > max {
                continue;
            }
            for a in 0..=cur - k {
                steps.push((m, a));
                rec(sig, val, depth, max, start, cur - k + l, steps, f);
                steps.pop();
            }
        }
    }
    for start in 0..=width {
        rec(sig, val, depth, width, start, start, &mut Vec::new(), f);
    }
}
