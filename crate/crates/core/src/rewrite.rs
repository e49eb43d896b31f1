//! Rewrite rules, matching modulo wire-homeomorphism, DPO rewriting and
//! normalisation.
//!
//! Patterns and hosts are wire-reduced, so every wire is one wire-vertex. A
//! pattern wire-vertex is classified by what it touches inside the pattern:
//!
//! * interior: between two node ports; maps onto the host wire joining the
//!   image ports, which it uses exclusively;
//! * head: leaves a node port and is an output; sits at the source end of
//!   the host wire leaving the image port;
//! * tail: enters a node port and is an input; sits at the target end of the
//!   host wire entering the image port;
//! * isolated: touches no node; may sit on any host wire not used otherwise;
//! * circle: a closed wire; maps onto a host circle used exclusively.
//!
//! A head and a tail may share one host wire (the host wire then runs from
//! an image output port straight back into an image input port). Two
//! isolated pattern wires never share a host wire.

use std::cell::OnceCell;
use std::collections::{BTreeMap, BTreeSet};
use std::ops::ControlFlow;

use num_complex::Complex64;
use thiserror::Error;

use crate::graph::{Edge, GraphError, Port, StringGraph, VertexId, VertexKind};
use crate::iso::{canonical_ranks, is_isomorphic};
use crate::signature::{bare_wire, identity_generator, Signature, SignatureError};
use crate::synth::{kappa, KappaValue};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RewriteError {
    #[error("boundary mismatch: {0}")]
    BoundaryMismatch(String),
    #[error("invalid matching: {0}")]
    InvalidMatching(String),
    #[error("rule {0} does not decrease the reduction ordering")]
    NotDecreasing(usize),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// A rule `lhs ⇒ rhs`. Boundaries are aligned by position: input `i` of the
/// lhs corresponds to input `i` of the rhs, and likewise for outputs. The
/// scalar records `[[lhs]] = scalar · [[rhs]]`.
#[derive(Clone, Debug, PartialEq)]
pub struct RewriteRule {
    lhs: StringGraph,
    rhs: StringGraph,
    scalar: Complex64,
}

/// Boundary correspondence given as (lhs vertex, rhs vertex) pairs.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BoundaryMap {
    pub inputs: Vec<(VertexId, VertexId)>,
    pub outputs: Vec<(VertexId, VertexId)>,
}

impl BoundaryMap {
    /// Pairs boundary vertices by position in the two graphs' orders.
    pub fn positional(l: &StringGraph, r: &StringGraph) -> BoundaryMap {
        BoundaryMap {
            inputs: l.inputs().iter().copied().zip(r.inputs().iter().copied()).collect(),
            outputs: l.outputs().iter().copied().zip(r.outputs().iter().copied()).collect(),
        }
    }
}

fn check_side(
    name: &str,
    pairs: &[(VertexId, VertexId)],
    l_side: &[VertexId],
    r_side: &[VertexId],
    l: &StringGraph,
    r: &StringGraph,
) -> Result<(), RewriteError> {
    let mismatch = |m: String| Err(RewriteError::BoundaryMismatch(m));
    if l_side.len() != r_side.len() {
        return mismatch(format!("{} {name} on the left, {} on the right", l_side.len(), r_side.len()));
    }
    if pairs.len() != l_side.len() {
        return mismatch(format!("{} {name} pairs for {} {name}", pairs.len(), l_side.len()));
    }
    let ls: BTreeSet<_> = pairs.iter().map(|p| p.0).collect();
    let rs: BTreeSet<_> = pairs.iter().map(|p| p.1).collect();
    if ls != l_side.iter().copied().collect() || ls.len() != pairs.len() {
        return mismatch(format!("left {name} not covered exactly once"));
    }
    if rs != r_side.iter().copied().collect() || rs.len() != pairs.len() {
        return mismatch(format!("right {name} not covered exactly once"));
    }
    for &(a, b) in pairs {
        if l.wire_type(a) != r.wire_type(b) {
            return mismatch(format!("{a} and {b} have different types"));
        }
    }
    Ok(())
}

/// Validates `bmap` and builds a rule with wire-reduced sides and aligned
/// boundary orders (the lhs order is kept).
pub fn make_rule(
    l: &StringGraph,
    r: &StringGraph,
    bmap: &BoundaryMap,
    scalar: Complex64,
) -> Result<RewriteRule, RewriteError> {
    check_side("inputs", &bmap.inputs, l.inputs(), r.inputs(), l, r)?;
    check_side("outputs", &bmap.outputs, l.outputs(), r.outputs(), l, r)?;
    let (lr, lmap) = l.normalize_wires_tracked();
    let (mut rr, rmap) = r.normalize_wires_tracked();
    let pos_in: BTreeMap<_, _> = bmap.inputs.iter().copied().collect();
    let pos_out: BTreeMap<_, _> = bmap.outputs.iter().copied().collect();
    let inputs = l.inputs().iter().map(|v| rmap[&pos_in[v]]).collect();
    let outputs = l.outputs().iter().map(|v| rmap[&pos_out[v]]).collect();
    rr.set_boundary(inputs, outputs);
    let mut lr = lr;
    lr.set_boundary(
        l.inputs().iter().map(|v| lmap[v]).collect(),
        l.outputs().iter().map(|v| lmap[v]).collect(),
    );
    Ok(RewriteRule { lhs: lr, rhs: rr, scalar })
}

impl RewriteRule {
    pub fn lhs(&self) -> &StringGraph {
        &self.lhs
    }

    pub fn rhs(&self) -> &StringGraph {
        &self.rhs
    }

    pub fn scalar(&self) -> Complex64 {
        self.scalar
    }

    /// True when both sides are the same graph up to wire-homeomorphism, so
    /// the rule has no effect on wire-reduced graphs.
    pub fn is_homeomorphism(&self) -> bool {
        is_isomorphic(&self.lhs.normalize_wires(), &self.rhs.normalize_wires())
    }
}

/// The wire contraction rule: a two-vertex wire rewrites to one vertex.
pub fn wire_contraction_rule(sig: &Signature, o: &str) -> Result<RewriteRule, SignatureError> {
    let lhs = identity_generator(sig, o)?;
    let t = sig.object_id(o).unwrap();
    let rhs = bare_wire(t);
    Ok(RewriteRule { lhs, rhs, scalar: Complex64::new(1.0, 0.0) })
}

/// The loop contraction rule: a two-vertex circle rewrites to one vertex
/// with a self-loop.
pub fn loop_contraction_rule(sig: &Signature, o: &str) -> Result<RewriteRule, SignatureError> {
    let t = sig.object_id(o).ok_or_else(|| SignatureError::UnknownObject(o.to_string()))?;
    let mut lhs = StringGraph::new();
    let a = lhs.add_wire(t);
    let b = lhs.add_wire(t);
    lhs.add_edge(Edge::wire(a, b));
    lhs.add_edge(Edge::wire(b, a));
    let mut rhs = StringGraph::new();
    let c = rhs.add_wire(t);
    rhs.add_edge(Edge::wire(c, c));
    Ok(RewriteRule { lhs, rhs, scalar: Complex64::new(1.0, 0.0) })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Role {
    Reduction,
    Congruence,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SystemRule {
    pub rule: RewriteRule,
    pub role: Role,
    /// Index of the synthesis run that produced the rule, if any.
    pub run: Option<usize>,
}

/// An ordered list of reductions and congruences.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RewriteSystem {
    rules: Vec<SystemRule>,
}

impl RewriteSystem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_rules(rules: Vec<SystemRule>) -> Self {
        RewriteSystem { rules }
    }

    pub fn push(&mut self, rule: RewriteRule, role: Role, run: Option<usize>) {
        self.rules.push(SystemRule { rule, role, run });
    }

    pub fn rules(&self) -> &[SystemRule] {
        &self.rules
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// Reductions in rule order, with their index in the system.
    pub fn reductions(&self) -> impl Iterator<Item = (usize, &RewriteRule)> + '_ {
        self.rules
            .iter()
            .enumerate()
            .filter(|(_, r)| r.role == Role::Reduction)
            .map(|(i, r)| (i, &r.rule))
    }

    pub fn congruences(&self) -> impl Iterator<Item = (usize, &RewriteRule)> + '_ {
        self.rules
            .iter()
            .enumerate()
            .filter(|(_, r)| r.role == Role::Congruence)
            .map(|(i, r)| (i, &r.rule))
    }

    pub fn reduction_count(&self) -> usize {
        self.reductions().count()
    }

    pub fn congruence_count(&self) -> usize {
        self.congruences().count()
    }
}

/// A matching of a wire-reduced pattern on a wire-reduced host: node-vertices
/// map to node-vertices and pattern wire-vertices to host wire-vertices.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Matching {
    pub nodes: BTreeMap<VertexId, VertexId>,
    pub wires: BTreeMap<VertexId, VertexId>,
}

impl Matching {
    pub fn image(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.nodes.values().chain(self.wires.values()).copied()
    }

    pub fn image_contains(&self, v: VertexId) -> bool {
        self.image().any(|u| u == v)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum WireRole {
    Interior,
    Head,
    Tail,
    Isolated,
    Circle,
}

fn wire_role(l: &StringGraph, w: VertexId) -> WireRole {
    if l.has_self_loop(w) {
        return WireRole::Circle;
    }
    match (l.wire_in(w).is_some(), l.wire_out(w).is_some()) {
        (true, true) => WireRole::Interior,
        (true, false) => WireRole::Head,
        (false, true) => WireRole::Tail,
        (false, false) => WireRole::Isolated,
    }
}

/// The node a node-attached pattern wire leaves from or enters, with the port.
fn wire_anchor(l: &StringGraph, w: VertexId) -> (VertexId, Port) {
    if let Some(e) = l.wire_in(w) {
        (e.src, e.src_port)
    } else {
        let e = l.wire_out(w).unwrap();
        (e.tgt, e.tgt_port)
    }
}

/// Pre-computed search plan for one pattern.
struct Plan {
    /// Node order; each entry optionally names an earlier node and the
    /// ports by which the new node is reached through an interior wire.
    steps: Vec<(VertexId, Option<(VertexId, Port, Port)>)>,
    attached: Vec<(VertexId, WireRole)>,
    free: Vec<(VertexId, WireRole)>,
}

fn plan(l: &StringGraph, first: Option<VertexId>) -> Plan {
    let mut steps = Vec::new();
    let mut placed = BTreeSet::new();
    let roots: Vec<VertexId> = first.into_iter().chain(l.node_vertices()).collect();
    for root in roots {
        if !placed.insert(root) {
            continue;
        }
        steps.push((root, None));
        let mut k = steps.len() - 1;
        while k < steps.len() {
            let n = steps[k].0;
            k += 1;
            for (_, e) in l.out_edges(n) {
                if let Some(f) = l.wire_out(e.tgt) {
                    if l.kind(f.tgt).is_some_and(VertexKind::is_node) && placed.insert(f.tgt) {
                        steps.push((f.tgt, Some((n, e.src_port, f.tgt_port))));
                    }
                }
            }
            for (_, e) in l.in_edges(n) {
                if let Some(f) = l.wire_in(e.src) {
                    if l.kind(f.src).is_some_and(VertexKind::is_node) && placed.insert(f.src) {
                        steps.push((f.src, Some((n, e.tgt_port, f.src_port))));
                    }
                }
            }
        }
    }
    let mut attached = Vec::new();
    let mut free = Vec::new();
    for w in l.wire_vertices() {
        let role = wire_role(l, w);
        match role {
            WireRole::Isolated | WireRole::Circle => free.push((w, role)),
            _ => attached.push((w, role)),
        }
    }
    // circles first: they have fewer candidates
    free.sort_by_key(|&(w, r)| (r != WireRole::Circle, w));
    Plan { steps, attached, free }
}

/// The node at the other end of the host wire on port `p` of node `n`,
/// provided it is attached there by port `q`.
fn follow(g: &StringGraph, n: VertexId, p: Port, q: Port) -> Option<VertexId> {
    let w = g.port_wire(n, p)?;
    let e = match p {
        Port::Out(_) => g.wire_out(w)?,
        _ => g.wire_in(w)?,
    };
    let (other, port) = match p {
        Port::Out(_) => (e.tgt, e.tgt_port),
        _ => (e.src, e.src_port),
    };
    (port == q && g.kind(other).is_some_and(VertexKind::is_node)).then_some(other)
}

struct Search<'a> {
    l: &'a StringGraph,
    g: &'a StringGraph,
    plan: Plan,
    seed: Option<(VertexId, VertexId)>,
    required: Option<VertexId>,
}

impl Search<'_> {
    fn run<B>(&self, visit: &mut dyn FnMut(Matching) -> ControlFlow<B>) -> ControlFlow<B> {
        let mut nodes = BTreeMap::new();
        let mut used = BTreeSet::new();
        self.nodes(0, &mut nodes, &mut used, visit)
    }

    fn nodes<B>(
        &self,
        k: usize,
        nodes: &mut BTreeMap<VertexId, VertexId>,
        used: &mut BTreeSet<VertexId>,
        visit: &mut dyn FnMut(Matching) -> ControlFlow<B>,
    ) -> ControlFlow<B> {
        if k == self.plan.steps.len() {
            return self.wires(nodes, visit);
        }
        let (n, link) = self.plan.steps[k];
        let want = self.l.kind(n);
        let candidates: Vec<VertexId> = match (link, self.seed) {
            (Some((prev, p, q)), _) => follow(self.g, nodes[&prev], p, q).into_iter().collect(),
            (None, Some((s, t))) if s == n => vec![t],
            (None, _) => self.g.node_vertices().collect(),
        };
        for c in candidates {
            if self.g.kind(c) != want || used.contains(&c) {
                continue;
            }
            nodes.insert(n, c);
            used.insert(c);
            self.nodes(k + 1, nodes, used, visit)?;
            used.remove(&c);
            nodes.remove(&n);
        }
        ControlFlow::Continue(())
    }

    fn wires<B>(
        &self,
        nodes: &BTreeMap<VertexId, VertexId>,
        visit: &mut dyn FnMut(Matching) -> ControlFlow<B>,
    ) -> ControlFlow<B> {
        let mut wires = BTreeMap::new();
        let mut taken: BTreeSet<VertexId> = BTreeSet::new();
        for &(w, role) in &self.plan.attached {
            let (n, p) = wire_anchor(self.l, w);
            let Some(h) = self.g.port_wire(nodes[&n], p) else { return ControlFlow::Continue(()) };
            if role == WireRole::Interior {
                let e = self.l.wire_out(w).unwrap();
                if self.g.port_wire(nodes[&e.tgt], e.tgt_port) != Some(h) {
                    return ControlFlow::Continue(());
                }
            }
            wires.insert(w, h);
            taken.insert(h);
        }
        let mut m = Matching { nodes: nodes.clone(), wires };
        self.free(0, &mut m, &mut taken, visit)
    }

    fn free<B>(
        &self,
        k: usize,
        m: &mut Matching,
        taken: &mut BTreeSet<VertexId>,
        visit: &mut dyn FnMut(Matching) -> ControlFlow<B>,
    ) -> ControlFlow<B> {
        if k == self.plan.free.len() {
            if let Some(r) = self.required {
                if !m.image_contains(r) {
                    return ControlFlow::Continue(());
                }
            }
            return visit(m.clone());
        }
        let (w, role) = self.plan.free[k];
        let ty = self.l.wire_type(w);
        let candidates: Vec<VertexId> = match self.seed {
            Some((s, t)) if s == w => vec![t],
            _ => self.g.wire_vertices().collect(),
        };
        for h in candidates {
            if taken.contains(&h) || self.g.wire_type(h) != ty {
                continue;
            }
            if role == WireRole::Circle && !self.g.has_self_loop(h) {
                continue;
            }
            taken.insert(h);
            m.wires.insert(w, h);
            self.free(k + 1, m, taken, visit)?;
            m.wires.remove(&w);
            taken.remove(&h);
        }
        ControlFlow::Continue(())
    }
}

/// Seeds that force the image of some pattern vertex onto `r` or next to it.
fn seeds(l: &StringGraph, g: &StringGraph, r: VertexId) -> Vec<(VertexId, VertexId)> {
    let mut out = Vec::new();
    match g.kind(r) {
        Some(VertexKind::Node(_)) => {
            for n in l.node_vertices() {
                if l.kind(n) == g.kind(r) {
                    out.push((n, r));
                }
            }
        }
        Some(VertexKind::Wire(_)) => {
            // host nodes at either end of r, with the port they use
            let mut ends = Vec::new();
            if let Some(e) = g.wire_in(r).filter(|e| e.src != r) {
                ends.push((e.src, e.src_port));
            }
            if let Some(e) = g.wire_out(r).filter(|e| e.tgt != r) {
                ends.push((e.tgt, e.tgt_port));
            }
            for w in l.wire_vertices() {
                match wire_role(l, w) {
                    WireRole::Isolated | WireRole::Circle => out.push((w, r)),
                    _ => {
                        let (n, p) = wire_anchor(l, w);
                        let wants_src = matches!(p, Port::Out(_));
                        for &(hn, hp) in &ends {
                            if hp == p && wants_src == matches!(hp, Port::Out(_)) && l.kind(n) == g.kind(hn) {
                                out.push((n, hn));
                            }
                        }
                    }
                }
            }
        }
        None => {}
    }
    out.sort_unstable();
    out.dedup();
    out
}

fn search<B>(
    l: &StringGraph,
    g: &StringGraph,
    required: Option<VertexId>,
    visit: &mut dyn FnMut(Matching) -> ControlFlow<B>,
) -> ControlFlow<B> {
    match required {
        None => Search { l, g, plan: plan(l, None), seed: None, required }.run(visit),
        Some(r) => {
            for (s, t) in seeds(l, g, r) {
                let first = l.kind(s).filter(|k| k.is_node()).map(|_| s);
                Search { l, g, plan: plan(l, first), seed: Some((s, t)), required }.run(visit)?;
            }
            ControlFlow::Continue(())
        }
    }
}

/// All matchings of `l` on `g`, sorted. With `required`, only those whose
/// image contains that host vertex.
pub fn find_matchings(l: &StringGraph, g: &StringGraph, required: Option<VertexId>) -> Vec<Matching> {
    let mut found = BTreeSet::new();
    let _ = search::<()>(l, g, required, &mut |m| {
        found.insert(m);
        ControlFlow::Continue(())
    });
    found.into_iter().collect()
}

pub fn has_matching(l: &StringGraph, g: &StringGraph, required: Option<VertexId>) -> bool {
    search(l, g, required, &mut |_| ControlFlow::Break(())).is_break()
}

/// Verifies that `m` is a matching of `l` on `g`.
pub fn check_matching(l: &StringGraph, g: &StringGraph, m: &Matching) -> Result<(), RewriteError> {
    let bad = |s: String| Err(RewriteError::InvalidMatching(s));
    let nodes: BTreeSet<_> = l.node_vertices().collect();
    let wires: BTreeSet<_> = l.wire_vertices().collect();
    if m.nodes.keys().copied().collect::<BTreeSet<_>>() != nodes {
        return bad("node map is not total".into());
    }
    if m.wires.keys().copied().collect::<BTreeSet<_>>() != wires {
        return bad("wire map is not total".into());
    }
    let images: BTreeSet<_> = m.nodes.values().collect();
    if images.len() != m.nodes.len() {
        return bad("node map is not injective".into());
    }
    for (&n, &h) in &m.nodes {
        if l.kind(n) != g.kind(h) {
            return bad(format!("{n} and {h} have different types"));
        }
    }
    let mut heads = BTreeMap::new();
    let mut tails = BTreeMap::new();
    let mut exclusive = BTreeMap::new();
    for (&w, &h) in &m.wires {
        if l.wire_type(w) != g.wire_type(h) {
            return bad(format!("{w} and {h} have different types"));
        }
        let role = wire_role(l, w);
        if matches!(role, WireRole::Interior | WireRole::Head) {
            let e = l.wire_in(w).unwrap();
            if g.port_wire(m.nodes[&e.src], e.src_port) != Some(h) {
                return bad(format!("edge into {w} not preserved"));
            }
        }
        if matches!(role, WireRole::Interior | WireRole::Tail) {
            let e = l.wire_out(w).unwrap();
            if g.port_wire(m.nodes[&e.tgt], e.tgt_port) != Some(h) {
                return bad(format!("edge out of {w} not preserved"));
            }
        }
        if role == WireRole::Circle && !g.has_self_loop(h) {
            return bad(format!("circle {w} mapped onto an open wire"));
        }
        match role {
            WireRole::Head => heads.entry(h).or_insert_with(Vec::new).push(w),
            WireRole::Tail => tails.entry(h).or_insert_with(Vec::new).push(w),
            _ => exclusive.entry(h).or_insert_with(Vec::new).push(w),
        }
    }
    for (h, ws) in &exclusive {
        if ws.len() > 1 || heads.contains_key(h) || tails.contains_key(h) {
            return bad(format!("host wire {h} used more than once"));
        }
    }
    if heads.values().chain(tails.values()).any(|ws| ws.len() > 1) {
        return bad("host wire end used twice".into());
    }
    // every node port in the pattern is wired, so edges at an interior
    // image vertex are all in the image; boundary images may have more
    Ok(())
}

/// The two legal orders in which the glueing pluggings can be performed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GlueOrder {
    Forward,
    Reverse,
}

/// Rewrites `g` with `rule` at `m`: removes the matched interior, leaving a
/// context graph, then plugs the rhs into the context. The result is
/// wire-reduced with the boundary order of `g`.
pub fn apply_rewrite(g: &StringGraph, rule: &RewriteRule, m: &Matching) -> Result<StringGraph, RewriteError> {
    apply_rewrite_with(g, rule, m, GlueOrder::Forward)
}

pub fn apply_rewrite_with(
    g: &StringGraph,
    rule: &RewriteRule,
    m: &Matching,
    order: GlueOrder,
) -> Result<StringGraph, RewriteError> {
    let g = &if g.is_wire_reduced() { g.clone() } else { g.normalize_wires() };
    let (l, lmap) = rule.lhs.normalize_wires_tracked();
    let lin: Vec<VertexId> = rule.lhs.inputs().iter().map(|v| lmap[v]).collect();
    let lout: Vec<VertexId> = rule.lhs.outputs().iter().map(|v| lmap[v]).collect();
    let (r, rmap) = rule.rhs.normalize_wires_tracked();
    let rin: Vec<VertexId> = rule.rhs.inputs().iter().map(|v| rmap[v]).collect();
    let rout: Vec<VertexId> = rule.rhs.outputs().iter().map(|v| rmap[v]).collect();
    check_matching(&l, g, m)?;

    // Items on each host wire, in wire order: head, isolated, tail.
    let mut on_wire: BTreeMap<VertexId, Vec<(u8, VertexId)>> = BTreeMap::new();
    let mut removed: BTreeSet<VertexId> = m.nodes.values().copied().collect();
    for (&w, &h) in &m.wires {
        match wire_role(&l, w) {
            WireRole::Interior | WireRole::Circle => {
                removed.insert(h);
            }
            WireRole::Head => on_wire.entry(h).or_default().push((0, w)),
            WireRole::Isolated => on_wire.entry(h).or_default().push((1, w)),
            WireRole::Tail => on_wire.entry(h).or_default().push((2, w)),
        }
    }

    // Build the context. For each pattern boundary vertex w: `feeds[w]` is the
    // context output that plugs into w's input side, `fed_by[w]` the context
    // input that receives w's output side.
    let mut verts: BTreeMap<VertexId, VertexKind> = BTreeMap::new();
    for (v, k) in g.vertices() {
        if !removed.contains(&v) && !on_wire.contains_key(&v) {
            verts.insert(v, k);
        }
    }
    let mut next = g.next_id();
    let mut fresh = |verts: &mut BTreeMap<VertexId, VertexKind>, k: VertexKind| {
        let v = VertexId(next);
        next += 1;
        verts.insert(v, k);
        v
    };
    let mut edges: Vec<Edge> = Vec::new();
    let mut feeds: BTreeMap<VertexId, VertexId> = BTreeMap::new();
    let mut fed_by: BTreeMap<VertexId, VertexId> = BTreeMap::new();
    // where the host's own boundary vertices end up in the context
    let mut host_in: BTreeMap<VertexId, VertexId> = BTreeMap::new();
    let mut host_out: BTreeMap<VertexId, VertexId> = BTreeMap::new();
    for (&h, items) in &mut on_wire {
        items.sort_unstable();
        let kind = g.kind(h).unwrap();
        let src = g.wire_in(h).filter(|e| e.src != h).copied();
        let tgt = g.wire_out(h).filter(|e| e.tgt != h).copied();
        if g.has_self_loop(h) {
            // isolated item on a circle: one gap closing back onto it
            let gap = fresh(&mut verts, kind);
            let w = items[0].1;
            fed_by.insert(w, gap);
            feeds.insert(w, gap);
            continue;
        }
        let mut prev: Option<VertexId> = None;
        for &(pos, w) in items.iter() {
            if pos == 0 {
                prev = Some(w);
                continue;
            }
            // gap before this item
            let gap = fresh(&mut verts, kind);
            match prev {
                None => match src {
                    Some(e) => edges.push(Edge { tgt: gap, ..e }),
                    None => {
                        host_in.insert(h, gap);
                    }
                },
                Some(p) => {
                    fed_by.insert(p, gap);
                }
            }
            feeds.insert(w, gap);
            prev = Some(w);
        }
        let last = prev.unwrap();
        if items.last().unwrap().0 != 2 {
            let gap = fresh(&mut verts, kind);
            fed_by.insert(last, gap);
            match tgt {
                Some(e) => edges.push(Edge { src: gap, ..e }),
                None => {
                    host_out.insert(h, gap);
                }
            }
        }
    }
    for e in g.edges() {
        let keep = |v: VertexId| !removed.contains(&v) && !on_wire.contains_key(&v);
        if keep(e.src) && keep(e.tgt) {
            edges.push(*e);
        }
    }
    let mut ctx = StringGraph::from_parts(verts, edges, vec![], vec![]);
    ctx.derive_boundary();

    // Glue the rhs in. Pattern boundary position i corresponds to rhs
    // boundary position i.
    let (mut h, off) = ctx.disjoint_union_with_offset(&r);
    let sh = |v: VertexId| VertexId(v.0 + off);
    let mut plugs: Vec<(VertexId, VertexId)> = Vec::new();
    for (i, &w) in lin.iter().enumerate() {
        plugs.push((sh(rin[i]), feeds[&w]));
    }
    for (j, &w) in lout.iter().enumerate() {
        plugs.push((fed_by[&w], sh(rout[j])));
    }
    if order == GlueOrder::Reverse {
        plugs.reverse();
    }
    let mut alias: BTreeMap<VertexId, VertexId> = BTreeMap::new();
    let resolve = |alias: &BTreeMap<VertexId, VertexId>, mut v: VertexId| {
        while let Some(&u) = alias.get(&v) {
            v = u;
        }
        v
    };
    for (x, y) in plugs {
        let (x, y) = (resolve(&alias, x), resolve(&alias, y));
        h = h.plug(x, y)?;
        if x != y {
            alias.insert(x, y);
        }
    }
    let inputs: Vec<VertexId> =
        g.inputs().iter().map(|v| resolve(&alias, host_in.get(v).copied().unwrap_or(*v))).collect();
    let outputs: Vec<VertexId> =
        g.outputs().iter().map(|v| resolve(&alias, host_out.get(v).copied().unwrap_or(*v))).collect();
    h.set_boundary(inputs, outputs);
    let (h, surv) = h.normalize_wires_tracked();
    let mut h = h;
    let inputs = h.inputs().iter().map(|v| surv[v]).collect();
    let outputs = h.outputs().iter().map(|v| surv[v]).collect();
    h.set_boundary(inputs, outputs);
    Ok(h)
}

fn node_counts(g: &StringGraph) -> BTreeMap<VertexKind, usize> {
    let mut m = BTreeMap::new();
    for v in g.node_vertices() {
        *m.entry(g.kind(v).unwrap()).or_insert(0) += 1;
    }
    m
}

/// True when rewriting `g` (whose ordering value is `gk`) with `rule` at `m`
/// gives a graph strictly below `g` in the reduction ordering. Rules that
/// remove node-vertices always do; otherwise the result is compared.
fn descends(g: &StringGraph, gk: &OnceCell<KappaValue>, rule: &RewriteRule, m: &Matching) -> bool {
    if rule.rhs.node_count() < rule.lhs.node_count() {
        return true;
    }
    match apply_rewrite(g, rule, m) {
        Ok(h) => kappa(&h) < *gk.get_or_init(|| kappa(g)),
        Err(_) => false,
    }
}

/// True when some matching of `rule` on `g` (containing `required`, when
/// given) rewrites `g` to a strictly smaller graph. Rules whose left-hand
/// side is not wire-reduced never apply to wire-reduced hosts.
pub fn reduces_at(rule: &RewriteRule, g: &StringGraph, required: Option<VertexId>) -> bool {
    if !rule.lhs.is_wire_reduced() {
        return false;
    }
    let gk = OnceCell::new();
    search(&rule.lhs, g, required, &mut |m| {
        if descends(g, &gk, rule, &m) {
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    })
    .is_break()
}

/// True when some reduction rewrites `g` downwards at a matching whose image
/// contains `v`.
pub fn is_redex_local(s: &RewriteSystem, g: &StringGraph, v: VertexId) -> bool {
    s.reductions().any(|(_, r)| reduces_at(r, g, Some(v)))
}

/// True when some reduction rewrites `g` downwards anywhere.
pub fn is_redex(s: &RewriteSystem, g: &StringGraph) -> bool {
    s.reductions().any(|(_, r)| reduces_at(r, g, None))
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceStep {
    pub rule: usize,
    /// Canonical digest of the graph the rule was applied to.
    pub host: String,
    pub scalar: Complex64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Normalized {
    pub graph: StringGraph,
    pub trace: Vec<TraceStep>,
    /// Product of the scalars along the trace: `[[g]] = scalar · [[graph]]`.
    pub scalar: Complex64,
}

/// Rewrites with reductions until no rewrite descends: the first rule in
/// system order, at its least matching (by the host's canonical vertex
/// order) whose result is smaller than the host. Each step strictly lowers
/// the ordering, so this terminates. Rules that only relate
/// wire-homeomorphic graphs are absorbed by keeping every graph
/// wire-reduced.
pub fn normalize(s: &RewriteSystem, g: &StringGraph) -> Result<Normalized, RewriteError> {
    let live: Vec<(usize, &RewriteRule, BTreeMap<VertexKind, usize>)> = s
        .reductions()
        .filter(|(_, r)| r.lhs.is_wire_reduced())
        .map(|(i, r)| (i, r, node_counts(&r.lhs)))
        .collect();
    let mut cur = g.normalize_wires();
    let mut trace = Vec::new();
    let mut scalar = Complex64::new(1.0, 0.0);
    'outer: loop {
        let have = node_counts(&cur);
        let ck = kappa(&cur);
        for (i, rule, need) in &live {
            if need.iter().any(|(k, &n)| have.get(k).copied().unwrap_or(0) < n) {
                continue;
            }
            let ms = find_matchings(&rule.lhs, &cur, None);
            if ms.is_empty() {
                continue;
            }
            let ranks = canonical_ranks(&cur);
            let key = |m: &Matching| -> Vec<usize> {
                rule.lhs
                    .vertices()
                    .map(|(v, _)| ranks[m.nodes.get(&v).or_else(|| m.wires.get(&v)).unwrap()])
                    .collect()
            };
            let mut ms: Vec<(Vec<usize>, &Matching)> = ms.iter().map(|m| (key(m), m)).collect();
            ms.sort();
            for (_, m) in ms {
                let next = apply_rewrite(&cur, rule, m)?;
                if kappa(&next) >= ck {
                    continue;
                }
                trace.push(TraceStep { rule: *i, host: ck.form.digest(), scalar: rule.scalar() });
                scalar *= rule.scalar();
                cur = next;
                continue 'outer;
            }
        }
        return Ok(Normalized { graph: cur, trace, scalar });
    }
}
