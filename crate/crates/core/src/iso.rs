//! Canonical forms, isomorphism and similar pluggings.
//!
//! Every vertex of a string graph orders its incident edges by direction and
//! port, so a traversal started at a fixed root visits the component in a
//! fully determined order. The canonical code of a component is the least
//! traversal code over all roots; the graph code is the sorted list of
//! component codes. Boundary order is not part of the form.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use sha2::{Digest, Sha256};

use crate::graph::{GraphError, Port, StringGraph, VertexId, VertexKind};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CanonicalForm(Vec<u8>);

impl CanonicalForm {
    pub fn bytes(&self) -> &[u8] {
        &self.0
    }

    /// SHA-256 of the canonical bytes, hex encoded.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(&self.0))
    }
}

fn kind_word(k: VertexKind) -> u32 {
    match k {
        VertexKind::Wire(t) => 2 * u32::from(t.0),
        VertexKind::Node(f) => 2 * u32::from(f.0) + 1,
    }
}

fn port_word(p: Port) -> u32 {
    match p {
        Port::Wire => 0,
        Port::In(i) => 1 + 2 * u32::from(i),
        Port::Out(j) => 2 + 2 * u32::from(j),
    }
}

/// Incident edges of a vertex as (outgoing?, own port, other port, other end).
type Adj = BTreeMap<VertexId, Vec<(u32, u32, u32, VertexId)>>;

fn adjacency(g: &StringGraph) -> Adj {
    let mut adj: Adj = g.vertices().map(|(v, _)| (v, Vec::new())).collect();
    for e in g.edges() {
        let (sp, tp) = (port_word(e.src_port), port_word(e.tgt_port));
        adj.get_mut(&e.src).unwrap().push((1, sp, tp, e.tgt));
        adj.get_mut(&e.tgt).unwrap().push((0, tp, sp, e.src));
    }
    for list in adj.values_mut() {
        list.sort_unstable();
    }
    adj
}

fn components(g: &StringGraph, adj: &Adj) -> Vec<Vec<VertexId>> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (v, _) in g.vertices() {
        if !seen.insert(v) {
            continue;
        }
        let mut comp = vec![v];
        let mut stack = vec![v];
        while let Some(u) = stack.pop() {
            for &(_, _, _, w) in &adj[&u] {
                if seen.insert(w) {
                    comp.push(w);
                    stack.push(w);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// Traversal code of the component containing `root`, with the visit order.
fn rooted_code(g: &StringGraph, adj: &Adj, root: VertexId) -> (Vec<u32>, Vec<VertexId>) {
    let mut label: BTreeMap<VertexId, u32> = BTreeMap::new();
    let mut order = vec![root];
    label.insert(root, 0);
    let mut queue = VecDeque::from([root]);
    while let Some(u) = queue.pop_front() {
        for &(_, _, _, w) in &adj[&u] {
            if let std::collections::btree_map::Entry::Vacant(e) = label.entry(w) {
                e.insert(order.len() as u32);
                order.push(w);
                queue.push_back(w);
            }
        }
    }
    let mut code = Vec::with_capacity(order.len() * 5);
    code.push(order.len() as u32);
    for &v in &order {
        code.push(kind_word(g.kind(v).unwrap()));
    }
    for &v in &order {
        let outgoing: Vec<_> = adj[&v].iter().filter(|a| a.0 == 1).collect();
        code.push(outgoing.len() as u32);
        for &&(_, mine, theirs, w) in &outgoing {
            code.extend([mine, theirs, label[&w]]);
        }
    }
    (code, order)
}

/// Canonical form together with a canonical vertex order: vertices listed by
/// sorted component, then by traversal from the minimising root.
pub fn canonical_labeling(g: &StringGraph) -> (CanonicalForm, Vec<VertexId>) {
    let adj = adjacency(g);
    let mut comps: Vec<(Vec<u32>, Vec<VertexId>)> = components(g, &adj)
        .into_iter()
        .map(|comp| {
            // only roots of the least vertex kind can produce the least code
            let least = comp.iter().map(|&v| kind_word(g.kind(v).unwrap())).min().unwrap();
            comp.iter()
                .filter(|&&v| kind_word(g.kind(v).unwrap()) == least)
                .map(|&r| rooted_code(g, &adj, r))
                .min()
                .unwrap()
        })
        .collect();
    comps.sort();
    let mut words = vec![comps.len() as u32];
    let mut order = Vec::with_capacity(g.vertex_count());
    for (code, ord) in comps {
        words.extend(code);
        order.extend(ord);
    }
    let bytes = words.iter().flat_map(|w| w.to_le_bytes()).collect();
    (CanonicalForm(bytes), order)
}

pub fn canonical_form(g: &StringGraph) -> CanonicalForm {
    canonical_labeling(g).0
}

/// Rank of every vertex in the canonical order.
pub fn canonical_ranks(g: &StringGraph) -> BTreeMap<VertexId, usize> {
    canonical_labeling(g).1.into_iter().enumerate().map(|(i, v)| (v, i)).collect()
}

pub fn is_isomorphic(g: &StringGraph, h: &StringGraph) -> bool {
    g.vertex_count() == h.vertex_count()
        && g.edge_count() == h.edge_count()
        && canonical_form(g) == canonical_form(h)
}

/// Describes a graph up to isomorphisms that fix every node-vertex. In a
/// wire-reduced graph each wire-vertex is determined, up to such maps, by its
/// type, its attachments to node ports and whether it closes into a circle.
pub fn node_fixed_key(g: &StringGraph) -> Vec<(u32, Option<(VertexId, u32)>, Option<(VertexId, u32)>, bool)> {
    let g = if g.is_wire_reduced() { g.clone() } else { g.normalize_wires() };
    let mut key: Vec<_> = g
        .wire_vertices()
        .map(|w| {
            let src = g.wire_in(w).filter(|e| e.src != w).map(|e| (e.src, port_word(e.src_port)));
            let tgt = g.wire_out(w).filter(|e| e.tgt != w).map(|e| (e.tgt, port_word(e.tgt_port)));
            (kind_word(g.kind(w).unwrap()), src, tgt, g.has_self_loop(w))
        })
        .collect();
    key.sort_unstable();
    key
}

/// All pluggings `(x', y')` of `g` such that `g/(x, y)` and `g/(x', y')` are
/// isomorphic by a map fixing every node-vertex. Always contains `(x, y)`.
pub fn similar_pluggings(
    g: &StringGraph,
    (x, y): (VertexId, VertexId),
) -> Result<Vec<(VertexId, VertexId)>, GraphError> {
    similar_among(g, (x, y), &pluggings(g))
}

/// Like [`similar_pluggings`], restricted to the candidate list `among`.
pub fn similar_among(
    g: &StringGraph,
    (x, y): (VertexId, VertexId),
    among: &[(VertexId, VertexId)],
) -> Result<Vec<(VertexId, VertexId)>, GraphError> {
    let target = node_fixed_key(&g.plug(x, y)?);
    let mut out = Vec::new();
    for &(a, b) in among {
        if (a, b) == (x, y) {
            out.push((a, b));
            continue;
        }
        if let Ok(p) = g.plug(a, b) {
            if node_fixed_key(&p) == target {
                out.push((a, b));
            }
        }
    }
    Ok(out)
}

/// `In(g) × Out(g)` restricted to type-compatible pairs, in boundary order.
pub fn pluggings(g: &StringGraph) -> Vec<(VertexId, VertexId)> {
    let mut out = Vec::new();
    for &x in g.inputs() {
        for &y in g.outputs() {
            if g.wire_type(x) == g.wire_type(y) {
                out.push((x, y));
            }
        }
    }
    out
}
