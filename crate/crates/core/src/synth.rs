//! Conjecture synthesis: enumerate irreducible string graphs of a given size,
//! class them by their tensors up to scalars and boundary permutations, and
//! mint rules sending every graph in a class to its least member.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::graph::{StringGraph, VertexId};
use crate::iso::{canonical_form, similar_among, CanonicalForm};
use crate::rewrite::{is_redex, is_redex_local, make_rule, BoundaryMap, RewriteRule, RewriteSystem, Role};
use crate::signature::{bare_wire, generator_graph_by_id, Signature, Valuation};
use crate::tensor::{equiv_key_labeled, evaluate, find_alignment, EquivClassKey, Tensor, TensorError};

/// The reduction ordering: node-vertices, then wire-vertices, then edges,
/// then canonical bytes. Strict on isomorphism classes.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct KappaValue {
    pub nodes: usize,
    pub wires: usize,
    pub edges: usize,
    pub form: CanonicalForm,
}

pub fn kappa(g: &StringGraph) -> KappaValue {
    KappaValue { nodes: g.node_count(), wires: g.wire_count(), edges: g.edge_count(), form: canonical_form(g) }
}

/// Size of a run: `m` inputs, `n` outputs, up to `p` pluggings and up to
/// `q` node-vertices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SynthesisParams {
    pub m: usize,
    pub n: usize,
    pub p: usize,
    pub q: usize,
}

impl SynthesisParams {
    pub fn new(m: usize, n: usize, p: usize, q: usize) -> Self {
        SynthesisParams { m, n, p, q }
    }
}

/// Orders runs by `m + n + p + q`, ties broken lexicographically.
pub fn sort_schedule(schedule: &mut [SynthesisParams]) {
    schedule.sort_by_key(|s| (s.m + s.n + s.p + s.q, *s));
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Plug only when no reduction matches at the plugged wire.
    RedexEliminating,
    /// Enumerate everything; similar-plugging pruning still applies.
    Naive,
}

/// One disjoint union of generators per multiset with `m` inputs, `n`
/// outputs and at most `q` node-vertices. The identity generator appears as
/// a bare wire. Components are laid out in generator order: identities by
/// object, then morphisms in signature order.
pub fn base_graphs(sig: &Signature, m: usize, n: usize, q: usize) -> Vec<StringGraph> {
    let mut gens: Vec<(StringGraph, usize, usize, usize)> = Vec::new();
    for o in sig.object_ids() {
        gens.push((bare_wire(o), 1, 1, 0));
    }
    for f in sig.morphism_ids() {
        let mt = sig.morphism(f).unwrap();
        gens.push((generator_graph_by_id(sig, f), mt.dom.len(), mt.cod.len(), 1));
    }
    let mut out = Vec::new();
    let mut pick = Vec::new();
    fn rec(
        gens: &[(StringGraph, usize, usize, usize)],
        start: usize,
        left: (usize, usize, usize),
        pick: &mut Vec<usize>,
        out: &mut Vec<StringGraph>,
    ) {
        if left.0 == 0 && left.1 == 0 {
            let mut g = StringGraph::new();
            for &i in pick.iter() {
                g = g.disjoint_union(&gens[i].0);
            }
            out.push(g);
        }
        for i in start..gens.len() {
            let (_, a, b, c) = gens[i];
            if a > left.0 || b > left.1 || c > left.2 || (a, b) == (0, 0) && c == 0 {
                continue;
            }
            pick.push(i);
            rec(gens, i, (left.0 - a, left.1 - b, left.2 - c), pick, out);
            pick.pop();
        }
    }
    rec(&gens, 0, (m, n, q), &mut pick, &mut out);
    out
}

struct Enum<'a> {
    /// Reductions that remove node-vertices; any matching of one descends,
    /// whatever the surrounding graph.
    shrinking: &'a RewriteSystem,
    /// The remaining reductions. Whether they descend depends on the whole
    /// graph, so they are only checked on finished graphs.
    rest: &'a RewriteSystem,
    mode: Mode,
}

impl Enum<'_> {
    fn go(&self, pi: Vec<(VertexId, VertexId)>, g: StringGraph, p: usize, out: &mut Vec<StringGraph>) {
        if p == 0 {
            if self.mode == Mode::Naive || !is_redex(self.rest, &g) {
                out.push(g);
            }
            return;
        }
        // every plugging consumes at least one candidate
        if pi.len() < p {
            return;
        }
        let (x, y) = pi[0];
        let plugged = g.plug(x, y).expect("candidate pluggings are valid");
        if self.mode == Mode::Naive || !is_redex_local(self.shrinking, &plugged, y) {
            let rest = remap(&pi[1..], x, y, &plugged);
            self.go(rest, plugged, p - 1, out);
        }
        let similar: BTreeSet<_> = similar_among(&g, (x, y), &pi).expect("valid plugging").into_iter().collect();
        let rest: Vec<_> = pi.iter().copied().filter(|c| !similar.contains(c)).collect();
        self.go(rest, g, p, out);
    }
}

/// Candidate pluggings after `x` was merged into `y`.
fn remap(pi: &[(VertexId, VertexId)], x: VertexId, y: VertexId, g: &StringGraph) -> Vec<(VertexId, VertexId)> {
    let mut out: Vec<(VertexId, VertexId)> = Vec::with_capacity(pi.len());
    for &(a, b) in pi {
        let a = if a == x { y } else { a };
        let b = if b == x { y } else { b };
        if g.is_input(a) && g.is_output(b) && !out.contains(&(a, b)) {
            out.push((a, b));
        }
    }
    out
}

/// Enumerates graphs with `m` inputs and `n` outputs built from base graphs
/// of `D(m + p, n + p, q)` by `p ≤ P` pluggings. In redex-eliminating mode
/// no result can be rewritten downwards by a reduction in `s`. Results are distinct
/// up to isomorphism, in a deterministic order.
pub fn enum_irreducible(s: &RewriteSystem, sig: &Signature, params: SynthesisParams, mode: Mode) -> Vec<StringGraph> {
    let mut tasks = Vec::new();
    for p in 0..=params.p {
        for g in base_graphs(sig, params.m + p, params.n + p, params.q) {
            tasks.push((p, g));
        }
    }
    let (shrinking, rest): (Vec<_>, Vec<_>) = s
        .rules()
        .iter()
        .filter(|r| r.role == Role::Reduction)
        .cloned()
        .partition(|r| r.rule.lhs().node_count() > r.rule.rhs().node_count());
    let (shrinking, rest) = (RewriteSystem::from_rules(shrinking), RewriteSystem::from_rules(rest));
    let e = Enum { shrinking: &shrinking, rest: &rest, mode };
    let found: Vec<Vec<StringGraph>> = tasks
        .into_par_iter()
        .map(|(p, g)| {
            let mut out = Vec::new();
            if mode == Mode::Naive || !is_redex(&shrinking, &g) {
                let pi = crate::iso::pluggings(&g);
                e.go(pi, g, p, &mut out);
            }
            out
        })
        .collect();
    let keyed: Vec<(CanonicalForm, StringGraph)> =
        found.into_iter().flatten().collect::<Vec<_>>().into_par_iter().map(|g| (canonical_form(&g), g)).collect();
    let mut seen = BTreeSet::new();
    keyed.into_iter().filter(|(c, _)| seen.insert(c.clone())).map(|(_, g)| g).collect()
}

/// Boundary type labels of a graph, inputs then outputs.
pub fn boundary_labels(g: &StringGraph) -> (Vec<u32>, Vec<u32>) {
    let lab = |v: &VertexId| u32::from(g.wire_type(*v).unwrap().0);
    (g.inputs().iter().map(lab).collect(), g.outputs().iter().map(lab).collect())
}

pub fn class_key(g: &StringGraph, t: &Tensor, tol: f64) -> EquivClassKey {
    let (ins, outs) = boundary_labels(g);
    equiv_key_labeled(t, &ins, &outs, tol)
}

/// Graphs whose tensors agree up to scalar and boundary permutation.
#[derive(Clone, Debug)]
pub struct Class {
    pub key: EquivClassKey,
    pub members: Vec<(StringGraph, Tensor)>,
}

#[derive(Clone, Debug, Default)]
pub struct Minted {
    pub reductions: Vec<RewriteRule>,
    pub congruences: Vec<RewriteRule>,
    /// Members whose tensor could not be aligned with the representative.
    pub unaligned: usize,
}

/// Builds `from ⇒ to`, with the boundary bijection and scalar read off the
/// tensors.
fn rule_between(from: &(StringGraph, Tensor), to: &(StringGraph, Tensor), tol: f64) -> Option<RewriteRule> {
    let (fi, fo) = boundary_labels(&from.0);
    let (ti, to_) = boundary_labels(&to.0);
    let a = find_alignment(&from.1, (&fi, &fo), &to.1, (&ti, &to_), tol)?;
    let bmap = BoundaryMap {
        inputs: (0..fi.len()).map(|i| (from.0.inputs()[i], to.0.inputs()[a.in_perm[i]])).collect(),
        outputs: (0..fo.len()).map(|j| (from.0.outputs()[j], to.0.outputs()[a.out_perm[j]])).collect(),
    };
    make_rule(&from.0, &to.0, &bmap, a.scalar).ok()
}

/// For each class: drop isomorphic duplicates, take the κ-minimal members
/// `C'` and their least member `G₀`, and mint `G ⇒ G₀` for every member
/// outside `C'` and congruences both ways between `G₀` and the rest of `C'`.
pub fn mint_rules<K: Ord>(classes: &[Class], kappa: impl Fn(&StringGraph) -> K, tol: f64) -> Minted {
    let mut minted = Minted::default();
    for class in classes {
        let mut seen = BTreeSet::new();
        let mut members: Vec<(K, CanonicalForm, &(StringGraph, Tensor))> = class
            .members
            .iter()
            .filter_map(|m| {
                let c = canonical_form(&m.0);
                seen.insert(c.clone()).then(|| (kappa(&m.0), c, m))
            })
            .collect();
        members.sort_by(|a, b| (&a.0, &a.1).cmp(&(&b.0, &b.1)));
        let Some((k0, _, g0)) = members.first() else { continue };
        for (k, _, g) in &members[1..] {
            if k == k0 {
                for (a, b) in [(*g, *g0), (*g0, *g)] {
                    match rule_between(a, b, tol) {
                        Some(r) => minted.congruences.push(r),
                        None => minted.unaligned += 1,
                    }
                }
            } else {
                match rule_between(g, g0, tol) {
                    Some(r) => minted.reductions.push(r),
                    None => minted.unaligned += 1,
                }
            }
        }
    }
    minted
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub params: SynthesisParams,
    pub enumerated: usize,
    pub classes: usize,
    pub reductions: usize,
    pub congruences: usize,
    pub skipped: usize,
    pub naive_enumerated: Option<usize>,
    pub naive_reductions: Option<usize>,
    pub wall_ms: u128,
}

#[derive(Clone, Debug)]
pub struct SynthesisOptions {
    pub mode: Mode,
    pub tolerance: f64,
    /// Also run a naive synthesis alongside and report its counts.
    pub compare: bool,
    pub workers: usize,
}

impl Default for SynthesisOptions {
    fn default() -> Self {
        SynthesisOptions { mode: Mode::RedexEliminating, tolerance: 1e-9, compare: false, workers: 1 }
    }
}

/// The graphs a run saved, with their tensors and class keys.
#[derive(Clone, Debug, Default)]
pub struct RunGraphs {
    pub graphs: Vec<(StringGraph, Tensor, EquivClassKey)>,
}

#[derive(Clone, Debug)]
pub struct SynthesisResult {
    pub system: RewriteSystem,
    pub reports: Vec<RunReport>,
    pub runs: Vec<RunGraphs>,
    /// The naive system, when comparing.
    pub naive: Option<RewriteSystem>,
}

struct RunOutcome {
    graphs: RunGraphs,
    classes: usize,
    minted: Minted,
    skipped: usize,
}

fn one_run(
    s: &RewriteSystem,
    sig: &Signature,
    val: &Valuation,
    params: SynthesisParams,
    mode: Mode,
    tol: f64,
) -> RunOutcome {
    let graphs = enum_irreducible(s, sig, params, mode);
    let evaluated: Vec<Result<(StringGraph, Tensor, EquivClassKey), TensorError>> = graphs
        .into_par_iter()
        .map(|g| {
            let t = evaluate(&g, sig, val)?;
            let k = class_key(&g, &t, tol);
            Ok((g, t, k))
        })
        .collect();
    let mut saved = RunGraphs::default();
    let mut skipped = 0;
    for r in evaluated {
        match r {
            Ok(x) => saved.graphs.push(x),
            Err(e) => {
                warn!("graph skipped: {e}");
                skipped += 1;
            }
        }
    }
    let mut by_key: BTreeMap<EquivClassKey, Vec<(StringGraph, Tensor)>> = BTreeMap::new();
    for (g, t, k) in &saved.graphs {
        by_key.entry(k.clone()).or_default().push((g.clone(), t.clone()));
    }
    let classes: Vec<Class> = by_key.into_iter().map(|(key, members)| Class { key, members }).collect();
    let minted = mint_rules(&classes, kappa, tol);
    if minted.unaligned > 0 {
        warn!("{} class members could not be aligned with their representative", minted.unaligned);
    }
    RunOutcome { graphs: saved, classes: classes.len(), minted, skipped }
}

/// Runs the schedule in the given order, extending the system after each
/// run. With `compare`, a naive synthesis over the same schedule is run
/// alongside; its rules are deduplicated by left-hand side.
pub fn run_synthesis(
    schedule: &[SynthesisParams],
    s0: &RewriteSystem,
    sig: &Signature,
    val: &Valuation,
    opts: &SynthesisOptions,
) -> SynthesisResult {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers.max(1))
        .build()
        .expect("thread pool");
    pool.install(|| {
        let mut s = s0.clone();
        let mut naive = opts.compare.then(|| s0.clone());
        let mut naive_lhs: BTreeSet<CanonicalForm> = BTreeSet::new();
        let mut reports = Vec::new();
        let mut runs = Vec::new();
        for (i, &params) in schedule.iter().enumerate() {
            let start = Instant::now();
            let snapshot = s.clone();
            let out = one_run(&snapshot, sig, val, params, opts.mode, opts.tolerance);
            let (nr, nc) = (out.minted.reductions.len(), out.minted.congruences.len());
            for r in out.minted.reductions {
                s.push(r, Role::Reduction, Some(i));
            }
            for r in out.minted.congruences {
                s.push(r, Role::Congruence, Some(i));
            }
            let mut report = RunReport {
                params,
                enumerated: out.graphs.graphs.len() + out.skipped,
                classes: out.classes,
                reductions: nr,
                congruences: nc,
                skipped: out.skipped,
                naive_enumerated: None,
                naive_reductions: None,
                wall_ms: 0,
            };
            if let Some(ns) = naive.as_mut() {
                let snap = ns.clone();
                let nout = one_run(&snap, sig, val, params, Mode::Naive, opts.tolerance);
                let mut added = 0;
                for r in nout.minted.reductions {
                    if naive_lhs.insert(canonical_form(r.lhs())) {
                        ns.push(r, Role::Reduction, Some(i));
                        added += 1;
                    }
                }
                report.naive_enumerated = Some(nout.graphs.graphs.len() + nout.skipped);
                report.naive_reductions = Some(added);
            }
            report.wall_ms = start.elapsed().as_millis();
            info!(
                "run {i} {:?}: {} graphs, {} classes, {} reductions, {} congruences",
                params, report.enumerated, report.classes, nr, nc
            );
            reports.push(report);
            runs.push(out.graphs);
        }
        SynthesisResult { system: s, reports, runs, naive }
    })
}

/// Scalar recorded on a rule must reproduce `[[lhs]] = λ·[[rhs]]` under the
/// aligned boundary; returns the worst entrywise deviation.
pub fn rule_residual(rule: &RewriteRule, sig: &Signature, val: &Valuation) -> Result<f64, TensorError> {
    let l = evaluate(rule.lhs(), sig, val)?;
    let r = evaluate(rule.rhs(), sig, val)?.scale(rule.scalar());
    Ok(l.entries().iter().zip(r.entries()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
}
