//! String graphs: typed directed graphs with wire-vertices and node-vertices.
//!
//! A wire-vertex carries an object type and has at most one in-edge and one
//! out-edge. A node-vertex carries a morphism type; its in-edges are labelled
//! `in_0..in_k` and its out-edges `out_0..out_m`, matching the arities of the
//! morphism. Every edge has a wire-vertex on at least one end.
//!
//! Boundary order (`inputs`/`outputs`) is explicit state: tensor evaluation and
//! rule boundaries need a total order on the boundary.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::signature::{MorphismId, ObjectId, Signature};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexId(pub u32);

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VertexKind {
    Wire(ObjectId),
    Node(MorphismId),
}

impl VertexKind {
    pub fn is_wire(self) -> bool {
        matches!(self, VertexKind::Wire(_))
    }

    pub fn is_node(self) -> bool {
        matches!(self, VertexKind::Node(_))
    }
}

/// Edge end label. Wire-vertex ends carry the trivial port.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Port {
    Wire,
    In(u16),
    Out(u16),
}

impl fmt::Display for Port {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Port::Wire => write!(f, "wire"),
            Port::In(i) => write!(f, "in_{i}"),
            Port::Out(j) => write!(f, "out_{j}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    pub src: VertexId,
    pub src_port: Port,
    pub tgt: VertexId,
    pub tgt_port: Port,
}

impl Edge {
    pub fn wire(src: VertexId, tgt: VertexId) -> Self {
        Edge { src, src_port: Port::Wire, tgt, tgt_port: Port::Wire }
    }

    /// Edge from output port `j` of node `node` into wire-vertex `w`.
    pub fn from_node(node: VertexId, j: u16, w: VertexId) -> Self {
        Edge { src: node, src_port: Port::Out(j), tgt: w, tgt_port: Port::Wire }
    }

    /// Edge from wire-vertex `w` into input port `i` of node `node`.
    pub fn into_node(w: VertexId, node: VertexId, i: u16) -> Self {
        Edge { src: w, src_port: Port::Wire, tgt: node, tgt_port: Port::In(i) }
    }

    pub fn touches(&self, v: VertexId) -> bool {
        self.src == v || self.tgt == v
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("unknown vertex {0}")]
    UnknownVertex(VertexId),
    #[error("{0} is not an input")]
    NotAnInput(VertexId),
    #[error("{0} is not an output")]
    NotAnOutput(VertexId),
    #[error("type mismatch between {0} and {1}")]
    TypeMismatch(VertexId, VertexId),
    #[error("vertex {0} appears in more than one plugging")]
    DuplicateVertex(VertexId),
    #[error("invalid edge: {0}")]
    InvalidEdge(String),
    #[error("invalid string graph: {0}")]
    Invalid(String),
}

/// A string graph with an explicit boundary order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StringGraph {
    vertices: BTreeMap<VertexId, VertexKind>,
    edges: Vec<Edge>,
    inputs: Vec<VertexId>,
    outputs: Vec<VertexId>,
}

impl StringGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a graph from parts without checking any invariant; call
    /// [`StringGraph::validate`] afterwards.
    pub fn from_parts(
        vertices: BTreeMap<VertexId, VertexKind>,
        edges: Vec<Edge>,
        inputs: Vec<VertexId>,
        outputs: Vec<VertexId>,
    ) -> Self {
        StringGraph { vertices, edges, inputs, outputs }
    }

    pub fn next_id(&self) -> u32 {
        self.vertices.keys().next_back().map_or(0, |v| v.0 + 1)
    }

    pub fn add_wire(&mut self, ty: ObjectId) -> VertexId {
        let v = VertexId(self.next_id());
        self.vertices.insert(v, VertexKind::Wire(ty));
        v
    }

    pub fn add_node(&mut self, f: MorphismId) -> VertexId {
        let v = VertexId(self.next_id());
        self.vertices.insert(v, VertexKind::Node(f));
        v
    }

    pub fn add_edge(&mut self, e: Edge) {
        self.edges.push(e);
    }

    /// Recomputes the boundary from the edge structure, ordered by vertex id.
    pub fn derive_boundary(&mut self) {
        let mut has_in = BTreeSet::new();
        let mut has_out = BTreeSet::new();
        for e in &self.edges {
            has_out.insert(e.src);
            has_in.insert(e.tgt);
        }
        self.inputs = self
            .wire_vertices()
            .filter(|v| !has_in.contains(v))
            .collect();
        self.outputs = self
            .wire_vertices()
            .filter(|v| !has_out.contains(v))
            .collect();
    }

    pub fn set_boundary(&mut self, inputs: Vec<VertexId>, outputs: Vec<VertexId>) {
        self.inputs = inputs;
        self.outputs = outputs;
    }

    pub fn vertices(&self) -> impl Iterator<Item = (VertexId, VertexKind)> + '_ {
        self.vertices.iter().map(|(&v, &k)| (v, k))
    }

    pub fn vertex_map(&self) -> &BTreeMap<VertexId, VertexKind> {
        &self.vertices
    }

    pub fn wire_vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.vertices.iter().filter(|(_, k)| k.is_wire()).map(|(&v, _)| v)
    }

    pub fn node_vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.vertices.iter().filter(|(_, k)| k.is_node()).map(|(&v, _)| v)
    }

    pub fn kind(&self, v: VertexId) -> Option<VertexKind> {
        self.vertices.get(&v).copied()
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.vertices.contains_key(&v)
    }

    /// Object type of a wire-vertex.
    pub fn wire_type(&self, v: VertexId) -> Option<ObjectId> {
        match self.vertices.get(&v) {
            Some(VertexKind::Wire(t)) => Some(*t),
            _ => None,
        }
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn inputs(&self) -> &[VertexId] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[VertexId] {
        &self.outputs
    }

    /// Inputs and outputs in boundary order. An isolated wire-vertex appears in both.
    pub fn boundary(&self) -> (&[VertexId], &[VertexId]) {
        (&self.inputs, &self.outputs)
    }

    pub fn is_input(&self, v: VertexId) -> bool {
        self.inputs.contains(&v)
    }

    pub fn is_output(&self, v: VertexId) -> bool {
        self.outputs.contains(&v)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn node_count(&self) -> usize {
        self.vertices.values().filter(|k| k.is_node()).count()
    }

    pub fn wire_count(&self) -> usize {
        self.vertices.values().filter(|k| k.is_wire()).count()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn in_edges(&self, v: VertexId) -> impl Iterator<Item = (usize, &Edge)> + '_ {
        self.edges.iter().enumerate().filter(move |(_, e)| e.tgt == v)
    }

    pub fn out_edges(&self, v: VertexId) -> impl Iterator<Item = (usize, &Edge)> + '_ {
        self.edges.iter().enumerate().filter(move |(_, e)| e.src == v)
    }

    /// The unique in-edge of a wire-vertex, if any.
    pub fn wire_in(&self, w: VertexId) -> Option<&Edge> {
        self.edges.iter().find(|e| e.tgt == w)
    }

    /// The unique out-edge of a wire-vertex, if any.
    pub fn wire_out(&self, w: VertexId) -> Option<&Edge> {
        self.edges.iter().find(|e| e.src == w)
    }

    /// The wire-vertex attached to port `p` of node `n`.
    pub fn port_wire(&self, n: VertexId, p: Port) -> Option<VertexId> {
        self.edges.iter().find_map(|e| match p {
            Port::In(_) if e.tgt == n && e.tgt_port == p => Some(e.src),
            Port::Out(_) if e.src == n && e.src_port == p => Some(e.tgt),
            _ => None,
        })
    }

    pub fn has_self_loop(&self, v: VertexId) -> bool {
        self.edges.iter().any(|e| e.src == v && e.tgt == v)
    }

    /// Checks every string graph invariant against `sig`.
    pub fn validate(&self, sig: &Signature) -> Result<(), GraphError> {
        let invalid = |m: String| Err(GraphError::Invalid(m));
        for (&v, &k) in &self.vertices {
            match k {
                VertexKind::Wire(t) if sig.object(t).is_none() => {
                    return invalid(format!("{v} has unknown object type"))
                }
                VertexKind::Node(f) if sig.morphism(f).is_none() => {
                    return invalid(format!("{v} has unknown morphism type"))
                }
                _ => {}
            }
        }
        let mut wire_in = BTreeMap::<VertexId, usize>::new();
        let mut wire_out = BTreeMap::<VertexId, usize>::new();
        let mut node_ports = BTreeSet::<(VertexId, Port)>::new();
        for e in &self.edges {
            let sk = self.kind(e.src).ok_or(GraphError::UnknownVertex(e.src))?;
            let tk = self.kind(e.tgt).ok_or(GraphError::UnknownVertex(e.tgt))?;
            match (sk, tk) {
                (VertexKind::Node(_), VertexKind::Node(_)) => {
                    return invalid(format!("node-to-node edge {} -> {}", e.src, e.tgt))
                }
                (VertexKind::Wire(a), VertexKind::Wire(b)) => {
                    if a != b {
                        return Err(GraphError::TypeMismatch(e.src, e.tgt));
                    }
                    if e.src_port != Port::Wire || e.tgt_port != Port::Wire {
                        return invalid(format!("wire edge {} -> {} carries node ports", e.src, e.tgt));
                    }
                    a
                }
                (VertexKind::Node(f), VertexKind::Wire(t)) => {
                    let Port::Out(j) = e.src_port else {
                        return invalid(format!("edge out of node {} lacks out port", e.src));
                    };
                    if e.tgt_port != Port::Wire {
                        return invalid(format!("wire end {} carries a node port", e.tgt));
                    }
                    let cod = &sig.morphism(f).expect("checked").cod;
                    if usize::from(j) >= cod.len() || cod[usize::from(j)] != t {
                        return Err(GraphError::TypeMismatch(e.src, e.tgt));
                    }
                    if !node_ports.insert((e.src, e.src_port)) {
                        return invalid(format!("port {} of {} used twice", e.src_port, e.src));
                    }
                    t
                }
                (VertexKind::Wire(t), VertexKind::Node(f)) => {
                    let Port::In(i) = e.tgt_port else {
                        return invalid(format!("edge into node {} lacks in port", e.tgt));
                    };
                    if e.src_port != Port::Wire {
                        return invalid(format!("wire end {} carries a node port", e.src));
                    }
                    let dom = &sig.morphism(f).expect("checked").dom;
                    if usize::from(i) >= dom.len() || dom[usize::from(i)] != t {
                        return Err(GraphError::TypeMismatch(e.src, e.tgt));
                    }
                    if !node_ports.insert((e.tgt, e.tgt_port)) {
                        return invalid(format!("port {} of {} used twice", e.tgt_port, e.tgt));
                    }
                    t
                }
            };
            if sk.is_wire() {
                *wire_out.entry(e.src).or_default() += 1;
            }
            if tk.is_wire() {
                *wire_in.entry(e.tgt).or_default() += 1;
            }
        }
        for (&v, &k) in &self.vertices {
            match k {
                VertexKind::Wire(_) => {
                    if wire_in.get(&v).copied().unwrap_or(0) > 1 || wire_out.get(&v).copied().unwrap_or(0) > 1 {
                        return invalid(format!("wire-vertex {v} has more than one in- or out-edge"));
                    }
                }
                VertexKind::Node(f) => {
                    let m = sig.morphism(f).expect("checked");
                    for i in 0..m.dom.len() {
                        if !node_ports.contains(&(v, Port::In(i as u16))) {
                            return invalid(format!("node {v} is missing in_{i}"));
                        }
                    }
                    for j in 0..m.cod.len() {
                        if !node_ports.contains(&(v, Port::Out(j as u16))) {
                            return invalid(format!("node {v} is missing out_{j}"));
                        }
                    }
                }
            }
        }
        let expect_in: BTreeSet<VertexId> =
            self.wire_vertices().filter(|v| !wire_in.contains_key(v)).collect();
        let expect_out: BTreeSet<VertexId> =
            self.wire_vertices().filter(|v| !wire_out.contains_key(v)).collect();
        let got_in: BTreeSet<VertexId> = self.inputs.iter().copied().collect();
        let got_out: BTreeSet<VertexId> = self.outputs.iter().copied().collect();
        if got_in.len() != self.inputs.len() || got_in != expect_in {
            return invalid("input order does not list exactly the inputs".into());
        }
        if got_out.len() != self.outputs.len() || got_out != expect_out {
            return invalid("output order does not list exactly the outputs".into());
        }
        Ok(())
    }

    /// Vertex-disjoint union; `other`'s ids are shifted by the returned offset.
    pub fn disjoint_union_with_offset(&self, other: &StringGraph) -> (StringGraph, u32) {
        let offset = self.next_id();
        let shift = |v: VertexId| VertexId(v.0 + offset);
        let mut g = self.clone();
        g.vertices.extend(other.vertices.iter().map(|(&v, &k)| (shift(v), k)));
        g.edges.extend(other.edges.iter().map(|e| Edge { src: shift(e.src), tgt: shift(e.tgt), ..*e }));
        g.inputs.extend(other.inputs.iter().map(|&v| shift(v)));
        g.outputs.extend(other.outputs.iter().map(|&v| shift(v)));
        (g, offset)
    }

    pub fn disjoint_union(&self, other: &StringGraph) -> StringGraph {
        self.disjoint_union_with_offset(other).0
    }

    /// Identifies input `x` with output `y`. The merged vertex keeps the id
    /// `y`, inherits `y`'s in-edge and `x`'s out-edge, and takes `x`'s place in
    /// the output order when `x` was isolated. Plugging an isolated vertex with
    /// itself closes it into a one-vertex circle.
    pub fn plug(&self, x: VertexId, y: VertexId) -> Result<StringGraph, GraphError> {
        let tx = self.wire_type(x).ok_or(GraphError::NotAnInput(x))?;
        let ty = self.wire_type(y).ok_or(GraphError::NotAnOutput(y))?;
        if !self.is_input(x) {
            return Err(GraphError::NotAnInput(x));
        }
        if !self.is_output(y) {
            return Err(GraphError::NotAnOutput(y));
        }
        if tx != ty {
            return Err(GraphError::TypeMismatch(x, y));
        }
        let mut g = self.clone();
        if x == y {
            g.edges.push(Edge::wire(x, x));
            g.inputs.retain(|&v| v != x);
            g.outputs.retain(|&v| v != x);
            return Ok(g);
        }
        let x_is_output = g.is_output(x);
        g.vertices.remove(&x);
        for e in &mut g.edges {
            if e.src == x {
                e.src = y;
            }
        }
        g.inputs.retain(|&v| v != x);
        g.outputs.retain(|&v| v != y);
        if x_is_output {
            for v in &mut g.outputs {
                if *v == x {
                    *v = y;
                }
            }
        }
        Ok(g)
    }

    /// Plugs `g` and `h` together along `pairs` of boundary vertices. Each
    /// pair joins an input of one side with an output of the other.
    pub fn multi_plug(
        g: &StringGraph,
        h: &StringGraph,
        pairs: &[(VertexId, VertexId)],
    ) -> Result<StringGraph, GraphError> {
        let mut seen = BTreeSet::new();
        for &(a, b) in pairs {
            if !seen.insert((0, a)) {
                return Err(GraphError::DuplicateVertex(a));
            }
            if !seen.insert((1, b)) {
                return Err(GraphError::DuplicateVertex(b));
            }
        }
        let (mut u, offset) = g.disjoint_union_with_offset(h);
        for &(a, b) in pairs {
            if !g.contains(a) {
                return Err(GraphError::UnknownVertex(a));
            }
            if !h.contains(b) {
                return Err(GraphError::UnknownVertex(b));
            }
            let hb = VertexId(b.0 + offset);
            u = if g.is_input(a) && h.is_output(b) {
                u.plug(a, hb)?
            } else if g.is_output(a) && h.is_input(b) {
                u.plug(hb, a)?
            } else if g.is_input(a) || g.is_output(a) {
                return Err(GraphError::TypeMismatch(a, b));
            } else {
                return Err(GraphError::NotAnInput(a));
            };
        }
        Ok(u)
    }

    /// Contracts every wire to a single wire-vertex, returning the map from
    /// each old wire-vertex to the survivor of its wire.
    pub fn normalize_wires_tracked(&self) -> (StringGraph, BTreeMap<VertexId, VertexId>) {
        // union-find over wire-wire edges
        let mut parent: BTreeMap<VertexId, VertexId> =
            self.wire_vertices().map(|v| (v, v)).collect();
        fn find(p: &mut BTreeMap<VertexId, VertexId>, v: VertexId) -> VertexId {
            let mut r = v;
            while p[&r] != r {
                r = p[&r];
            }
            let mut c = v;
            while p[&c] != r {
                let n = p[&c];
                p.insert(c, r);
                c = n;
            }
            r
        }
        let mut pred = BTreeMap::new();
        for e in &self.edges {
            if e.src_port == Port::Wire && e.tgt_port == Port::Wire {
                pred.insert(e.tgt, e.src);
                let a = find(&mut parent, e.src);
                let b = find(&mut parent, e.tgt);
                if a != b {
                    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                    parent.insert(hi, lo);
                }
            }
        }
        let mut classes: BTreeMap<VertexId, Vec<VertexId>> = BTreeMap::new();
        for v in self.wire_vertices() {
            let r = find(&mut parent, v);
            classes.entry(r).or_default().push(v);
        }
        let mut survivor = BTreeMap::new();
        let mut circles = Vec::new();
        for members in classes.values() {
            // the chain head has no wire predecessor; circles have none
            let head = members.iter().copied().find(|v| !pred.contains_key(v));
            let s = head.unwrap_or(members[0]);
            if head.is_none() {
                circles.push(s);
            }
            for &m in members {
                survivor.insert(m, s);
            }
        }
        let mut g = StringGraph::new();
        for (&v, &k) in &self.vertices {
            if k.is_node() || survivor[&v] == v {
                g.vertices.insert(v, k);
            }
        }
        for e in &self.edges {
            if e.src_port == Port::Wire && e.tgt_port == Port::Wire {
                continue;
            }
            let src = survivor.get(&e.src).copied().unwrap_or(e.src);
            let tgt = survivor.get(&e.tgt).copied().unwrap_or(e.tgt);
            g.edges.push(Edge { src, tgt, ..*e });
        }
        for c in circles {
            g.edges.push(Edge::wire(c, c));
        }
        g.inputs = self.inputs.iter().map(|v| survivor[v]).collect();
        g.outputs = self.outputs.iter().map(|v| survivor[v]).collect();
        (g, survivor)
    }

    pub fn normalize_wires(&self) -> StringGraph {
        self.normalize_wires_tracked().0
    }

    /// True when every wire consists of exactly one wire-vertex.
    pub fn is_wire_reduced(&self) -> bool {
        self.edges
            .iter()
            .all(|e| !(e.src_port == Port::Wire && e.tgt_port == Port::Wire) || e.src == e.tgt)
    }

    /// Replaces edge `idx` by two edges through a fresh wire-vertex.
    pub fn subdivide(&self, idx: usize) -> Result<StringGraph, GraphError> {
        let e = *self
            .edges
            .get(idx)
            .ok_or_else(|| GraphError::InvalidEdge(format!("no edge with index {idx}")))?;
        let ty = self
            .wire_type(e.src)
            .or_else(|| self.wire_type(e.tgt))
            .ok_or_else(|| GraphError::InvalidEdge("edge has no wire-vertex endpoint".into()))?;
        let mut g = self.clone();
        let w = g.add_wire(ty);
        g.edges[idx] = Edge { tgt: w, tgt_port: Port::Wire, ..e };
        g.edges.push(Edge { src: w, src_port: Port::Wire, ..e });
        Ok(g)
    }

    /// Wires of the graph: maximal chains of wire-vertices, in chain order.
    /// Circles are listed starting from their least vertex.
    pub fn wires(&self) -> Vec<Wire> {
        let mut next = BTreeMap::new();
        let mut has_pred = BTreeSet::new();
        for e in &self.edges {
            if e.src_port == Port::Wire && e.tgt_port == Port::Wire {
                next.insert(e.src, e.tgt);
                has_pred.insert(e.tgt);
            }
        }
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        let heads: Vec<VertexId> = self.wire_vertices().filter(|v| !has_pred.contains(v)).collect();
        for h in heads {
            let mut chain = vec![h];
            seen.insert(h);
            let mut cur = h;
            while let Some(&n) = next.get(&cur) {
                chain.push(n);
                seen.insert(n);
                cur = n;
            }
            out.push(Wire { vertices: chain, closed: false });
        }
        for v in self.wire_vertices().collect::<Vec<_>>() {
            if seen.contains(&v) {
                continue;
            }
            let mut chain = vec![v];
            seen.insert(v);
            let mut cur = next[&v];
            while cur != v {
                chain.push(cur);
                seen.insert(cur);
                cur = next[&cur];
            }
            out.push(Wire { vertices: chain, closed: true });
        }
        out
    }
}

/// A maximal chain of wire-vertices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Wire {
    pub vertices: Vec<VertexId>,
    pub closed: bool,
}
