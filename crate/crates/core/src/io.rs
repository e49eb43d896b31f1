//! JSON formats for graphs, rules, rulesets and schedules.
//!
//! Graph: `{"vertices":[{"id","kind","type"}], "edges":[{"src","src_port",
//! "tgt","tgt_port"}], "inputs":[ids], "outputs":[ids]}` where `kind` is
//! `"wire"` or `"node"`, `type` names an object or morphism, and ports are
//! `"wire"`, `"in_i"` or `"out_j"`.
//!
//! Rule: `{"lhs","rhs","boundary_map":[[l,r],...],"scalar":[re,im],"role"}`.
//! The boundary map lists the input pairs first, in lhs input order, then
//! the output pairs in lhs output order.

use std::collections::BTreeMap;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Edge, GraphError, Port, StringGraph, VertexId, VertexKind};
use crate::rewrite::{make_rule, BoundaryMap, RewriteError, RewriteRule, RewriteSystem, Role, SystemRule};
use crate::signature::{Signature, SignatureError};
use crate::synth::SynthesisParams;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Signature(#[from] SignatureError),
    #[error("{0}")]
    Graph(#[from] GraphError),
    #[error("{0}")]
    Rewrite(#[from] RewriteError),
    #[error("{0}")]
    Invalid(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl FormatError {
    /// Whether the error is about the content of an input, as opposed to the
    /// environment.
    pub fn is_validation(&self) -> bool {
        !matches!(self, FormatError::Io { .. })
    }
}

pub fn read_file(path: &Path) -> Result<String, FormatError> {
    std::fs::read_to_string(path).map_err(|source| FormatError::Io { path: path.display().to_string(), source })
}

pub fn write_file(path: &Path, text: &str) -> Result<(), FormatError> {
    std::fs::write(path, text).map_err(|source| FormatError::Io { path: path.display().to_string(), source })
}

#[derive(Serialize, Deserialize, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
enum KindTag {
    Wire,
    Node,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VertexFile {
    id: u32,
    kind: KindTag,
    #[serde(rename = "type")]
    ty: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeFile {
    src: u32,
    src_port: String,
    tgt: u32,
    tgt_port: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphFile {
    vertices: Vec<VertexFile>,
    edges: Vec<EdgeFile>,
    inputs: Vec<u32>,
    outputs: Vec<u32>,
}

fn port_text(p: Port) -> String {
    p.to_string()
}

fn parse_port(s: &str) -> Result<Port, FormatError> {
    let bad = || FormatError::Invalid(format!("bad port label {s:?}"));
    if s == "wire" {
        return Ok(Port::Wire);
    }
    if let Some(i) = s.strip_prefix("in_") {
        return i.parse().map(Port::In).map_err(|_| bad());
    }
    if let Some(j) = s.strip_prefix("out_") {
        return j.parse().map(Port::Out).map_err(|_| bad());
    }
    Err(bad())
}

fn graph_file(g: &StringGraph, sig: &Signature) -> GraphFile {
    GraphFile {
        vertices: g
            .vertices()
            .map(|(v, k)| match k {
                VertexKind::Wire(t) => VertexFile { id: v.0, kind: KindTag::Wire, ty: sig.object(t).unwrap().name.clone() },
                VertexKind::Node(f) => {
                    VertexFile { id: v.0, kind: KindTag::Node, ty: sig.morphism(f).unwrap().name.clone() }
                }
            })
            .collect(),
        edges: g
            .edges()
            .iter()
            .map(|e| EdgeFile { src: e.src.0, src_port: port_text(e.src_port), tgt: e.tgt.0, tgt_port: port_text(e.tgt_port) })
            .collect(),
        inputs: g.inputs().iter().map(|v| v.0).collect(),
        outputs: g.outputs().iter().map(|v| v.0).collect(),
    }
}

fn graph_from_file(f: GraphFile, sig: &Signature) -> Result<StringGraph, FormatError> {
    let mut vertices = BTreeMap::new();
    for v in f.vertices {
        let kind = match v.kind {
            KindTag::Wire => VertexKind::Wire(
                sig.object_id(&v.ty).ok_or_else(|| SignatureError::UnknownObject(v.ty.clone()))?,
            ),
            KindTag::Node => VertexKind::Node(
                sig.morphism_id(&v.ty).ok_or_else(|| SignatureError::UnknownMorphism(v.ty.clone()))?,
            ),
        };
        if vertices.insert(VertexId(v.id), kind).is_some() {
            return Err(FormatError::Invalid(format!("vertex id {} used twice", v.id)));
        }
    }
    let edges = f
        .edges
        .into_iter()
        .map(|e| {
            Ok(Edge {
                src: VertexId(e.src),
                src_port: parse_port(&e.src_port)?,
                tgt: VertexId(e.tgt),
                tgt_port: parse_port(&e.tgt_port)?,
            })
        })
        .collect::<Result<Vec<_>, FormatError>>()?;
    let g = StringGraph::from_parts(
        vertices,
        edges,
        f.inputs.into_iter().map(VertexId).collect(),
        f.outputs.into_iter().map(VertexId).collect(),
    );
    g.validate(sig)?;
    Ok(g)
}

pub fn graph_to_value(g: &StringGraph, sig: &Signature) -> serde_json::Value {
    serde_json::to_value(graph_file(g, sig)).expect("graph serializes")
}

pub fn graph_to_json(g: &StringGraph, sig: &Signature) -> String {
    serde_json::to_string_pretty(&graph_file(g, sig)).expect("graph serializes")
}

pub fn graph_from_value(v: serde_json::Value, sig: &Signature) -> Result<StringGraph, FormatError> {
    graph_from_file(serde_json::from_value(v)?, sig)
}

pub fn parse_graph(text: &str, sig: &Signature) -> Result<StringGraph, FormatError> {
    graph_from_file(serde_json::from_str(text)?, sig)
}

#[derive(Serialize, Deserialize, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
enum RoleTag {
    Reduction,
    Congruence,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RuleFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    id: Option<usize>,
    lhs: GraphFile,
    rhs: GraphFile,
    boundary_map: Vec<[u32; 2]>,
    scalar: [f64; 2],
    role: RoleTag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    run: Option<usize>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RulesetFile {
    rules: Vec<RuleFile>,
}

fn rule_file(id: Option<usize>, r: &SystemRule, sig: &Signature) -> RuleFile {
    let rule = &r.rule;
    let pairs = rule
        .lhs()
        .inputs()
        .iter()
        .zip(rule.rhs().inputs())
        .chain(rule.lhs().outputs().iter().zip(rule.rhs().outputs()))
        .map(|(a, b)| [a.0, b.0])
        .collect();
    RuleFile {
        id,
        lhs: graph_file(rule.lhs(), sig),
        rhs: graph_file(rule.rhs(), sig),
        boundary_map: pairs,
        scalar: [rule.scalar().re, rule.scalar().im],
        role: match r.role {
            Role::Reduction => RoleTag::Reduction,
            Role::Congruence => RoleTag::Congruence,
        },
        run: r.run,
    }
}

fn rule_from_file(f: RuleFile, sig: &Signature) -> Result<SystemRule, FormatError> {
    let lhs = graph_from_file(f.lhs, sig)?;
    let rhs = graph_from_file(f.rhs, sig)?;
    let k = lhs.inputs().len();
    if f.boundary_map.len() != k + lhs.outputs().len() {
        return Err(RewriteError::BoundaryMismatch(format!(
            "{} boundary pairs for {} boundary vertices",
            f.boundary_map.len(),
            k + lhs.outputs().len()
        ))
        .into());
    }
    let pair = |p: &[u32; 2]| (VertexId(p[0]), VertexId(p[1]));
    let bmap = BoundaryMap {
        inputs: f.boundary_map[..k].iter().map(pair).collect(),
        outputs: f.boundary_map[k..].iter().map(pair).collect(),
    };
    let rule = make_rule(&lhs, &rhs, &bmap, Complex64::new(f.scalar[0], f.scalar[1]))?;
    let role = match f.role {
        RoleTag::Reduction => Role::Reduction,
        RoleTag::Congruence => Role::Congruence,
    };
    Ok(SystemRule { rule, role, run: f.run })
}

pub fn rule_to_json(rule: &RewriteRule, role: Role, sig: &Signature) -> String {
    let r = SystemRule { rule: rule.clone(), role, run: None };
    serde_json::to_string_pretty(&rule_file(None, &r, sig)).expect("rule serializes")
}

pub fn parse_rule(text: &str, sig: &Signature) -> Result<SystemRule, FormatError> {
    rule_from_file(serde_json::from_str(text)?, sig)
}

pub fn ruleset_to_json(s: &RewriteSystem, sig: &Signature) -> String {
    let file = RulesetFile { rules: s.rules().iter().enumerate().map(|(i, r)| rule_file(Some(i), r, sig)).collect() };
    let mut text = serde_json::to_string_pretty(&file).expect("ruleset serializes");
    text.push('\n');
    text
}

pub fn parse_ruleset(text: &str, sig: &Signature) -> Result<RewriteSystem, FormatError> {
    let file: RulesetFile = serde_json::from_str(text)?;
    let rules = file.rules.into_iter().map(|r| rule_from_file(r, sig)).collect::<Result<_, _>>()?;
    Ok(RewriteSystem::from_rules(rules))
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScheduleFile {
    runs: Vec<SynthesisParams>,
}

/// Parses `{"runs":[{"m","n","p","q"}, ...]}`.
pub fn parse_schedule(text: &str) -> Result<Vec<SynthesisParams>, FormatError> {
    let f: ScheduleFile = serde_json::from_str(text)?;
    Ok(f.runs)
}

pub fn schedule_to_json(runs: &[SynthesisParams]) -> String {
    serde_json::to_string_pretty(&ScheduleFile { runs: runs.to_vec() }).expect("schedule serializes")
}
