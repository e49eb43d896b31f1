//! Monoidal signatures, their valuations in complex vector spaces, and the
//! generator graphs built from them.

use std::collections::{BTreeMap, HashMap};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Edge, StringGraph};
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ObjectId(pub u16);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MorphismId(pub u16);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ObjectType {
    pub name: String,
    pub dimension: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MorphismType {
    pub name: String,
    pub dom: Vec<ObjectId>,
    pub cod: Vec<ObjectId>,
}

#[derive(Debug, Error)]
pub enum SignatureError {
    #[error("malformed file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("duplicate name `{0}`")]
    Duplicate(String),
    #[error("morphism `{morphism}` refers to unknown object `{object}`")]
    UnknownObjectRef { morphism: String, object: String },
    #[error("object `{0}` must have dimension at least 1")]
    ZeroDimension(String),
    #[error("unknown morphism `{0}`")]
    UnknownMorphism(String),
    #[error("unknown object `{0}`")]
    UnknownObject(String),
    #[error("tensor for `{morphism}` has shape {found}, expected {expected}")]
    Shape { morphism: String, expected: String, found: String },
    #[error("no tensor given for morphism `{0}`")]
    MissingEntry(String),
    #[error("invalid tensor entry for `{0}`")]
    BadEntry(String),
}

impl SignatureError {
    /// True for errors caused by well-formed input that fails validation.
    pub fn is_validation(&self) -> bool {
        !matches!(self, SignatureError::Parse(_))
    }
}

#[derive(Serialize, Deserialize)]
struct ObjectEntry {
    name: String,
    dimension: usize,
}

#[derive(Serialize, Deserialize)]
struct MorphismEntry {
    name: String,
    #[serde(default)]
    dom: Vec<String>,
    #[serde(default)]
    cod: Vec<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SignatureFile {
    objects: Vec<ObjectEntry>,
    #[serde(default)]
    morphisms: Vec<MorphismEntry>,
}

/// A monoidal signature: object types with dimensions and typed generators.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Signature {
    objects: Vec<ObjectType>,
    morphisms: Vec<MorphismType>,
    object_index: HashMap<String, ObjectId>,
    morphism_index: HashMap<String, MorphismId>,
}

impl Signature {
    pub fn new(objects: Vec<ObjectType>, morphisms: Vec<MorphismType>) -> Result<Self, SignatureError> {
        let mut object_index = HashMap::new();
        for (i, o) in objects.iter().enumerate() {
            if o.dimension == 0 {
                return Err(SignatureError::ZeroDimension(o.name.clone()));
            }
            if object_index.insert(o.name.clone(), ObjectId(i as u16)).is_some() {
                return Err(SignatureError::Duplicate(o.name.clone()));
            }
        }
        let mut morphism_index = HashMap::new();
        for (i, m) in morphisms.iter().enumerate() {
            if let Some(bad) = m.dom.iter().chain(&m.cod).find(|o| usize::from(o.0) >= objects.len()) {
                return Err(SignatureError::UnknownObjectRef {
                    morphism: m.name.clone(),
                    object: format!("#{}", bad.0),
                });
            }
            if morphism_index.insert(m.name.clone(), MorphismId(i as u16)).is_some() {
                return Err(SignatureError::Duplicate(m.name.clone()));
            }
        }
        Ok(Signature { objects, morphisms, object_index, morphism_index })
    }

    pub fn objects(&self) -> &[ObjectType] {
        &self.objects
    }

    pub fn morphisms(&self) -> &[MorphismType] {
        &self.morphisms
    }

    pub fn object(&self, id: ObjectId) -> Option<&ObjectType> {
        self.objects.get(usize::from(id.0))
    }

    pub fn morphism(&self, id: MorphismId) -> Option<&MorphismType> {
        self.morphisms.get(usize::from(id.0))
    }

    pub fn object_id(&self, name: &str) -> Option<ObjectId> {
        self.object_index.get(name).copied()
    }

    pub fn morphism_id(&self, name: &str) -> Option<MorphismId> {
        self.morphism_index.get(name).copied()
    }

    pub fn morphism_ids(&self) -> impl Iterator<Item = MorphismId> {
        (0..self.morphisms.len()).map(|i| MorphismId(i as u16))
    }

    pub fn object_ids(&self) -> impl Iterator<Item = ObjectId> {
        (0..self.objects.len()).map(|i| ObjectId(i as u16))
    }

    pub fn dimension(&self, id: ObjectId) -> usize {
        self.objects[usize::from(id.0)].dimension
    }

    pub fn to_json(&self) -> String {
        let file = SignatureFile {
            objects: self
                .objects
                .iter()
                .map(|o| ObjectEntry { name: o.name.clone(), dimension: o.dimension })
                .collect(),
            morphisms: self
                .morphisms
                .iter()
                .map(|m| MorphismEntry {
                    name: m.name.clone(),
                    dom: m.dom.iter().map(|&o| self.object(o).unwrap().name.clone()).collect(),
                    cod: m.cod.iter().map(|&o| self.object(o).unwrap().name.clone()).collect(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("signature serializes")
    }
}

pub fn parse_signature(text: &str) -> Result<Signature, SignatureError> {
    let file: SignatureFile = serde_json::from_str(text)?;
    let objects: Vec<ObjectType> = file
        .objects
        .into_iter()
        .map(|o| ObjectType { name: o.name, dimension: o.dimension })
        .collect();
    let lookup: HashMap<&str, ObjectId> = objects
        .iter()
        .enumerate()
        .map(|(i, o)| (o.name.as_str(), ObjectId(i as u16)))
        .collect();
    let mut morphisms = Vec::with_capacity(file.morphisms.len());
    for m in file.morphisms {
        let resolve = |names: &[String]| -> Result<Vec<ObjectId>, SignatureError> {
            names
                .iter()
                .map(|n| {
                    lookup.get(n.as_str()).copied().ok_or_else(|| SignatureError::UnknownObjectRef {
                        morphism: m.name.clone(),
                        object: n.clone(),
                    })
                })
                .collect()
        };
        let dom = resolve(&m.dom)?;
        let cod = resolve(&m.cod)?;
        morphisms.push(MorphismType { name: m.name, dom, cod });
    }
    Signature::new(objects, morphisms)
}

/// A concrete model: one tensor per generator.
#[derive(Clone, Debug, PartialEq)]
pub struct Valuation {
    tensors: Vec<Tensor>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Entry {
    Real(f64),
    Complex([f64; 2]),
}

impl Valuation {
    /// Checks shapes against `sig` and builds the valuation.
    pub fn new(sig: &Signature, tensors: BTreeMap<String, Tensor>) -> Result<Self, SignatureError> {
        let mut slots: Vec<Option<Tensor>> = vec![None; sig.morphisms().len()];
        for (name, t) in tensors {
            let id = sig.morphism_id(&name).ok_or_else(|| SignatureError::UnknownMorphism(name.clone()))?;
            let m = sig.morphism(id).unwrap();
            let dims = |os: &[ObjectId]| os.iter().map(|&o| sig.dimension(o)).collect::<Vec<_>>();
            if t.input_dims() != dims(&m.dom).as_slice() || t.output_dims() != dims(&m.cod).as_slice() {
                return Err(SignatureError::Shape {
                    morphism: name,
                    expected: format!("{:?} -> {:?}", dims(&m.dom), dims(&m.cod)),
                    found: format!("{:?} -> {:?}", t.input_dims(), t.output_dims()),
                });
            }
            slots[usize::from(id.0)] = Some(t);
        }
        let tensors = slots
            .into_iter()
            .enumerate()
            .map(|(i, t)| t.ok_or_else(|| SignatureError::MissingEntry(sig.morphisms()[i].name.clone())))
            .collect::<Result<_, _>>()?;
        Ok(Valuation { tensors })
    }

    pub fn tensor(&self, f: MorphismId) -> &Tensor {
        &self.tensors[usize::from(f.0)]
    }

    /// Serializes as a map from generator name to its matrix (rows index the
    /// outputs, columns the inputs).
    pub fn to_json(&self, sig: &Signature) -> String {
        let mut map = serde_json::Map::new();
        for f in sig.morphism_ids() {
            let t = self.tensor(f);
            let rows: Vec<serde_json::Value> = t
                .matrix_rows()
                .into_iter()
                .map(|row| {
                    serde_json::Value::Array(
                        row.into_iter()
                            .map(|z| {
                                if z.im == 0.0 {
                                    serde_json::json!(z.re)
                                } else {
                                    serde_json::json!([z.re, z.im])
                                }
                            })
                            .collect(),
                    )
                })
                .collect();
            map.insert(sig.morphism(f).unwrap().name.clone(), serde_json::Value::Array(rows));
        }
        serde_json::to_string_pretty(&serde_json::Value::Object(map)).expect("valuation serializes")
    }
}

/// Parses a valuation file: a JSON object mapping every generator name to a
/// matrix whose rows are indexed by the outputs and columns by the inputs
/// (row-major over the index lists). Entries are numbers or `[re, im]` pairs.
pub fn parse_valuation(text: &str, sig: &Signature) -> Result<Valuation, SignatureError> {
    let raw: BTreeMap<String, Vec<Vec<Entry>>> = serde_json::from_str(text)?;
    let mut tensors = BTreeMap::new();
    for (name, rows) in raw {
        let id = sig.morphism_id(&name).ok_or_else(|| SignatureError::UnknownMorphism(name.clone()))?;
        let m = sig.morphism(id).unwrap();
        let in_dims: Vec<usize> = m.dom.iter().map(|&o| sig.dimension(o)).collect();
        let out_dims: Vec<usize> = m.cod.iter().map(|&o| sig.dimension(o)).collect();
        let want_rows: usize = out_dims.iter().product();
        let want_cols: usize = in_dims.iter().product();
        let cols = rows.first().map_or(0, Vec::len);
        if rows.len() != want_rows || rows.iter().any(|r| r.len() != want_cols) {
            return Err(SignatureError::Shape {
                morphism: name,
                expected: format!("{want_rows}x{want_cols}"),
                found: format!("{}x{}", rows.len(), cols),
            });
        }
        let entries: Vec<Complex64> = rows
            .into_iter()
            .flatten()
            .map(|e| match e {
                Entry::Real(r) => Complex64::new(r, 0.0),
                Entry::Complex([re, im]) => Complex64::new(re, im),
            })
            .collect();
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(SignatureError::BadEntry(name));
        }
        let t = Tensor::new(in_dims, out_dims, entries).map_err(|_| SignatureError::BadEntry(name.clone()))?;
        tensors.insert(name, t);
    }
    Valuation::new(sig, tensors)
}

/// The smallest string graph containing one node-vertex of type `f`, with
/// one wire-vertex per input and output. Boundary order follows dom then cod.
pub fn generator_graph(sig: &Signature, f: &str) -> Result<StringGraph, SignatureError> {
    let id = sig.morphism_id(f).ok_or_else(|| SignatureError::UnknownMorphism(f.to_string()))?;
    Ok(generator_graph_by_id(sig, id))
}

pub fn generator_graph_by_id(sig: &Signature, f: MorphismId) -> StringGraph {
    let m = sig.morphism(f).expect("morphism in signature");
    let mut g = StringGraph::new();
    let n = g.add_node(f);
    let mut inputs = Vec::new();
    let mut outputs = Vec::new();
    for (i, &t) in m.dom.iter().enumerate() {
        let w = g.add_wire(t);
        g.add_edge(Edge::into_node(w, n, i as u16));
        inputs.push(w);
    }
    for (j, &t) in m.cod.iter().enumerate() {
        let w = g.add_wire(t);
        g.add_edge(Edge::from_node(n, j as u16, w));
        outputs.push(w);
    }
    g.set_boundary(inputs, outputs);
    g
}

/// Two wire-vertices of type `o` joined by one edge.
pub fn identity_generator(sig: &Signature, o: &str) -> Result<StringGraph, SignatureError> {
    let t = sig.object_id(o).ok_or_else(|| SignatureError::UnknownObject(o.to_string()))?;
    let mut g = StringGraph::new();
    let a = g.add_wire(t);
    let b = g.add_wire(t);
    g.add_edge(Edge::wire(a, b));
    g.set_boundary(vec![a], vec![b]);
    Ok(g)
}

/// A single isolated wire-vertex: the wire-reduced identity.
pub fn bare_wire(t: ObjectId) -> StringGraph {
    let mut g = StringGraph::new();
    let w = g.add_wire(t);
    g.set_boundary(vec![w], vec![w]);
    g
}
