//! Dense complex tensors, evaluation of string graphs by tensor contraction,
//! and comparison of tensors up to scalar factors and boundary permutations.
//!
//! Entries are stored row-major over `(outputs..., inputs...)`, so a tensor
//! with one output of dimension 2 and two inputs of dimension 2 reads as a
//! 2x4 matrix whose rows index the output.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Port, StringGraph, VertexId, VertexKind};
use crate::signature::{Signature, Valuation};

/// Default cap on the size of any intermediate index space.
pub const DEFAULT_MAX_ENTRIES: usize = 1 << 24;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TensorError {
    #[error("index space of {0} entries exceeds the cap of {1}")]
    DimensionOverflow(usize, usize),
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("graph does not fit the valuation: {0}")]
    BadGraph(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TensorFile", into = "TensorFile")]
pub struct Tensor {
    input_dims: Vec<usize>,
    output_dims: Vec<usize>,
    entries: Vec<Complex64>,
}

#[derive(Serialize, Deserialize)]
struct TensorFile {
    input_dims: Vec<usize>,
    output_dims: Vec<usize>,
    entries: Vec<[f64; 2]>,
}

impl TryFrom<TensorFile> for Tensor {
    type Error = TensorError;
    fn try_from(f: TensorFile) -> Result<Self, TensorError> {
        let entries = f.entries.into_iter().map(|[re, im]| Complex64::new(re, im)).collect();
        Tensor::new(f.input_dims, f.output_dims, entries)
    }
}

impl From<Tensor> for TensorFile {
    fn from(t: Tensor) -> Self {
        TensorFile {
            input_dims: t.input_dims,
            output_dims: t.output_dims,
            entries: t.entries.into_iter().map(|z| [z.re, z.im]).collect(),
        }
    }
}

impl Tensor {
    pub fn new(
        input_dims: Vec<usize>,
        output_dims: Vec<usize>,
        entries: Vec<Complex64>,
    ) -> Result<Self, TensorError> {
        let n: usize = input_dims.iter().chain(&output_dims).product();
        if n != entries.len() {
            return Err(TensorError::DimMismatch(format!("{} entries for {} slots", entries.len(), n)));
        }
        Ok(Tensor { input_dims, output_dims, entries })
    }

    pub fn zeros(input_dims: Vec<usize>, output_dims: Vec<usize>) -> Self {
        let n: usize = input_dims.iter().chain(&output_dims).product();
        Tensor { input_dims, output_dims, entries: vec![Complex64::new(0.0, 0.0); n] }
    }

    pub fn scalar(z: Complex64) -> Self {
        Tensor { input_dims: vec![], output_dims: vec![], entries: vec![z] }
    }

    pub fn identity(d: usize) -> Self {
        let mut t = Tensor::zeros(vec![d], vec![d]);
        for i in 0..d {
            t.entries[i * d + i] = Complex64::new(1.0, 0.0);
        }
        t
    }

    /// Builds a tensor from real matrix rows (outputs by inputs).
    pub fn from_real_rows(input_dims: Vec<usize>, output_dims: Vec<usize>, rows: &[&[f64]]) -> Self {
        let entries = rows.iter().flat_map(|r| r.iter().map(|&x| Complex64::new(x, 0.0))).collect();
        Tensor::new(input_dims, output_dims, entries).expect("row shape matches dims")
    }

    pub fn input_dims(&self) -> &[usize] {
        &self.input_dims
    }

    pub fn output_dims(&self) -> &[usize] {
        &self.output_dims
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn rows(&self) -> usize {
        self.output_dims.iter().product()
    }

    pub fn cols(&self) -> usize {
        self.input_dims.iter().product()
    }

    pub fn matrix_rows(&self) -> Vec<Vec<Complex64>> {
        let c = self.cols();
        self.entries.chunks(c.max(1)).map(<[_]>::to_vec).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.max_abs() <= tol
    }

    pub fn scale(&self, s: Complex64) -> Tensor {
        Tensor { entries: self.entries.iter().map(|&z| z * s).collect(), ..self.clone() }
    }

    pub fn same_shape(&self, other: &Tensor) -> bool {
        self.input_dims == other.input_dims && self.output_dims == other.output_dims
    }

    /// Entrywise comparison with absolute tolerance.
    pub fn approx_eq(&self, other: &Tensor, tol: f64) -> bool {
        self.same_shape(other)
            && self.entries.iter().zip(&other.entries).all(|(a, b)| (a - b).norm() <= tol)
    }

    /// `self ⊗ other`: inputs and outputs concatenated, `self`'s first.
    pub fn tensor_product(&self, other: &Tensor) -> Tensor {
        let (r1, c1) = (self.rows(), self.cols());
        let (r2, c2) = (other.rows(), other.cols());
        let mut entries = vec![Complex64::new(0.0, 0.0); r1 * r2 * c1 * c2];
        for o1 in 0..r1 {
            for o2 in 0..r2 {
                for i1 in 0..c1 {
                    for i2 in 0..c2 {
                        let row = o1 * r2 + o2;
                        let col = i1 * c2 + i2;
                        entries[row * (c1 * c2) + col] =
                            self.entries[o1 * c1 + i1] * other.entries[o2 * c2 + i2];
                    }
                }
            }
        }
        Tensor {
            input_dims: [self.input_dims.clone(), other.input_dims.clone()].concat(),
            output_dims: [self.output_dims.clone(), other.output_dims.clone()].concat(),
            entries,
        }
    }

    /// Reorders the indices: new input `i` is old input `in_perm[i]`, new
    /// output `j` is old output `out_perm[j]`.
    pub fn permuted(&self, in_perm: &[usize], out_perm: &[usize]) -> Tensor {
        let old_dims: Vec<usize> = self.output_dims.iter().chain(&self.input_dims).copied().collect();
        let no = self.output_dims.len();
        // position in the new index list -> position in the old one
        let src: Vec<usize> = out_perm.iter().copied().chain(in_perm.iter().map(|&i| i + no)).collect();
        let new_dims: Vec<usize> = src.iter().map(|&s| old_dims[s]).collect();
        let mut old_strides = vec![1usize; old_dims.len()];
        for k in (0..old_dims.len().saturating_sub(1)).rev() {
            old_strides[k] = old_strides[k + 1] * old_dims[k + 1];
        }
        let mut entries = Vec::with_capacity(self.entries.len());
        let mut idx = vec![0usize; new_dims.len()];
        for _ in 0..self.entries.len() {
            let off: usize = idx.iter().zip(&src).map(|(&x, &s)| x * old_strides[s]).sum();
            entries.push(self.entries[off]);
            for k in (0..idx.len()).rev() {
                idx[k] += 1;
                if idx[k] < new_dims[k] {
                    break;
                }
                idx[k] = 0;
            }
        }
        Tensor {
            input_dims: in_perm.iter().map(|&i| self.input_dims[i]).collect(),
            output_dims: out_perm.iter().map(|&j| self.output_dims[j]).collect(),
            entries,
        }
    }

    /// Sequential composition: `other` first, then `self`.
    pub fn compose(&self, other: &Tensor) -> Result<Tensor, TensorError> {
        if self.input_dims != other.output_dims {
            return Err(TensorError::DimMismatch(format!(
                "{:?} into {:?}",
                other.output_dims, self.input_dims
            )));
        }
        let (r, k, c) = (self.rows(), self.cols(), other.cols());
        let mut entries = vec![Complex64::new(0.0, 0.0); r * c];
        for i in 0..r {
            for m in 0..k {
                let a = self.entries[i * k + m];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..c {
                    entries[i * c + j] += a * other.entries[m * c + j];
                }
            }
        }
        Ok(Tensor { input_dims: other.input_dims.clone(), output_dims: self.output_dims.clone(), entries })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ContractionOrder {
    /// Eliminate the internal index with the smallest combined index space first.
    Greedy,
    /// Eliminate internal indices in a seeded pseudo-random order.
    Shuffled(u64),
}

#[derive(Clone, Copy, Debug)]
pub struct EvalOptions {
    pub order: ContractionOrder,
    pub max_entries: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions { order: ContractionOrder::Greedy, max_entries: DEFAULT_MAX_ENTRIES }
    }
}

struct Factor {
    vars: Vec<usize>,
    data: Vec<Complex64>,
}

fn strides(vars: &[usize], dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; vars.len()];
    for k in (0..vars.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * dims[vars[k + 1]];
    }
    s
}

impl Factor {
    /// Builds a factor from a leg list that may repeat a variable; repeated
    /// legs are restricted to their diagonal.
    fn from_legs(legs: &[usize], dims: &[usize], data: &[Complex64]) -> Factor {
        let mut vars: Vec<usize> = Vec::new();
        for &l in legs {
            if !vars.contains(&l) {
                vars.push(l);
            }
        }
        if vars.len() == legs.len() {
            return Factor { vars, data: data.to_vec() };
        }
        let leg_strides = strides(legs, dims);
        let size: usize = vars.iter().map(|&v| dims[v]).product();
        let mut out = Vec::with_capacity(size);
        let mut assign = vec![0usize; dims.len()];
        let mut idx = vec![0usize; vars.len()];
        for _ in 0..size {
            for (k, &v) in vars.iter().enumerate() {
                assign[v] = idx[k];
            }
            let off: usize = legs.iter().zip(&leg_strides).map(|(&l, &s)| assign[l] * s).sum();
            out.push(data[off]);
            bump(&mut idx, vars.iter().map(|&v| dims[v]));
        }
        Factor { vars, data: out }
    }

    fn offset(&self, strides: &[usize], assign: &[usize]) -> usize {
        self.vars.iter().zip(strides).map(|(&v, &s)| assign[v] * s).sum()
    }
}

fn bump(idx: &mut [usize], dims: impl DoubleEndedIterator<Item = usize> + ExactSizeIterator) {
    for (k, d) in dims.enumerate().rev() {
        idx[k] += 1;
        if idx[k] < d {
            return;
        }
        idx[k] = 0;
    }
}

/// Multiplies `factors` together and sums out `var`.
fn contract(factors: Vec<Factor>, var: usize, dims: &[usize], cap: usize) -> Result<Factor, TensorError> {
    let mut union: Vec<usize> = Vec::new();
    for f in &factors {
        for &v in &f.vars {
            if !union.contains(&v) {
                union.push(v);
            }
        }
    }
    let space: usize = union.iter().map(|&v| dims[v]).product();
    if space > cap {
        return Err(TensorError::DimensionOverflow(space, cap));
    }
    let kept: Vec<usize> = union.iter().copied().filter(|&v| v != var).collect();
    let kept_strides = strides(&kept, dims);
    let fstrides: Vec<Vec<usize>> = factors.iter().map(|f| strides(&f.vars, dims)).collect();
    let out_size: usize = kept.iter().map(|&v| dims[v]).product();
    let mut out = vec![Complex64::new(0.0, 0.0); out_size];
    let mut assign = vec![0usize; dims.len()];
    let mut idx = vec![0usize; union.len()];
    for _ in 0..space {
        for (k, &v) in union.iter().enumerate() {
            assign[v] = idx[k];
        }
        let mut p = Complex64::new(1.0, 0.0);
        for (f, s) in factors.iter().zip(&fstrides) {
            p *= f.data[f.offset(s, &assign)];
            if p == Complex64::new(0.0, 0.0) {
                break;
            }
        }
        let o: usize = kept.iter().zip(&kept_strides).map(|(&v, &s)| assign[v] * s).sum();
        out[o] += p;
        bump(&mut idx, union.iter().map(|&v| dims[v]));
    }
    Ok(Factor { vars: kept, data: out })
}

/// Evaluates `g` as a tensor contraction: wire-vertices are identities,
/// node-vertices are their valuation tensors, and each wire is an index.
/// Inputs follow `g.inputs()` and outputs `g.outputs()`.
pub fn evaluate(g: &StringGraph, sig: &Signature, val: &Valuation) -> Result<Tensor, TensorError> {
    evaluate_with(g, sig, val, EvalOptions::default())
}

pub fn evaluate_with(
    g: &StringGraph,
    sig: &Signature,
    val: &Valuation,
    opts: EvalOptions,
) -> Result<Tensor, TensorError> {
    // one index variable per wire
    let mut var_of: BTreeMap<VertexId, usize> = BTreeMap::new();
    let mut dims: Vec<usize> = Vec::new();
    for w in g.wires() {
        let t = g.wire_type(w.vertices[0]).expect("wire");
        dims.push(sig.dimension(t));
        for v in w.vertices {
            var_of.insert(v, dims.len() - 1);
        }
    }
    let mut factors = Vec::new();
    let mut used = vec![false; dims.len()];
    for (n, k) in g.vertices() {
        let VertexKind::Node(f) = k else { continue };
        let m = sig.morphism(f).ok_or_else(|| TensorError::BadGraph(format!("unknown type at {n}")))?;
        let mut legs = Vec::with_capacity(m.dom.len() + m.cod.len());
        for j in 0..m.cod.len() {
            let w = g
                .port_wire(n, Port::Out(j as u16))
                .ok_or_else(|| TensorError::BadGraph(format!("{n} has no out_{j}")))?;
            legs.push(var_of[&w]);
        }
        for i in 0..m.dom.len() {
            let w = g
                .port_wire(n, Port::In(i as u16))
                .ok_or_else(|| TensorError::BadGraph(format!("{n} has no in_{i}")))?;
            legs.push(var_of[&w]);
        }
        for &l in &legs {
            used[l] = true;
        }
        factors.push(Factor::from_legs(&legs, &dims, val.tensor(f).entries()));
    }
    let slots: Vec<usize> = g
        .outputs()
        .iter()
        .chain(g.inputs())
        .map(|v| var_of.get(v).copied().ok_or_else(|| TensorError::BadGraph(format!("boundary {v}"))))
        .collect::<Result<_, _>>()?;
    let mut free = vec![false; dims.len()];
    for &s in &slots {
        free[s] = true;
    }
    let mut scalar = Complex64::new(1.0, 0.0);
    for v in 0..dims.len() {
        if !used[v] && !free[v] {
            // closed wire with nothing on it: trace of the identity
            scalar *= dims[v] as f64;
        }
    }
    let mut internal: Vec<usize> = (0..dims.len()).filter(|&v| used[v] && !free[v]).collect();
    if let ContractionOrder::Shuffled(seed) = opts.order {
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        for i in (1..internal.len()).rev() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let j = ((state >> 33) as usize) % (i + 1);
            internal.swap(i, j);
        }
    }
    while !internal.is_empty() {
        let pick = match opts.order {
            ContractionOrder::Greedy => {
                let cost = |v: usize| -> usize {
                    let mut u: Vec<usize> = Vec::new();
                    for f in factors.iter().filter(|f| f.vars.contains(&v)) {
                        for &x in &f.vars {
                            if !u.contains(&x) {
                                u.push(x);
                            }
                        }
                    }
                    u.iter().map(|&x| dims[x]).product()
                };
                (0..internal.len()).min_by_key(|&k| (cost(internal[k]), internal[k])).unwrap()
            }
            ContractionOrder::Shuffled(_) => 0,
        };
        let var = internal.remove(pick);
        let (touch, rest): (Vec<Factor>, Vec<Factor>) = factors.into_iter().partition(|f| f.vars.contains(&var));
        factors = rest;
        factors.push(contract(touch, var, &dims, opts.max_entries)?);
    }
    let out_dims: Vec<usize> = g.outputs().iter().map(|v| dims[var_of[v]]).collect();
    let in_dims: Vec<usize> = g.inputs().iter().map(|v| dims[var_of[v]]).collect();
    let size: usize = out_dims.iter().chain(&in_dims).product();
    if size > opts.max_entries {
        return Err(TensorError::DimensionOverflow(size, opts.max_entries));
    }
    let fstrides: Vec<Vec<usize>> = factors.iter().map(|f| strides(&f.vars, &dims)).collect();
    let slot_dims: Vec<usize> = out_dims.iter().chain(&in_dims).copied().collect();
    let mut entries = Vec::with_capacity(size);
    let mut idx = vec![0usize; slots.len()];
    let mut assign = vec![usize::MAX; dims.len()];
    for _ in 0..size {
        let mut consistent = true;
        for &s in &slots {
            assign[s] = usize::MAX;
        }
        for (k, &s) in slots.iter().enumerate() {
            if assign[s] != usize::MAX && assign[s] != idx[k] {
                consistent = false;
                break;
            }
            assign[s] = idx[k];
        }
        let value = if consistent {
            factors
                .iter()
                .zip(&fstrides)
                .fold(scalar, |acc, (f, s)| acc * f.data[f.offset(s, &assign)])
        } else {
            Complex64::new(0.0, 0.0)
        };
        entries.push(value);
        bump(&mut idx, slot_dims.iter().copied());
    }
    Tensor::new(in_dims, out_dims, entries)
}

/// Returns `λ` with `t1 = λ·t2` entrywise within `tol`. The scalar is fixed by
/// the largest-magnitude entry of `t2`. A zero tensor matches only a zero
/// tensor, with `λ = 1`.
pub fn scalar_match(t1: &Tensor, t2: &Tensor, tol: f64) -> Result<Option<Complex64>, TensorError> {
    if !t1.same_shape(t2) {
        return Err(TensorError::DimMismatch(format!(
            "{:?}->{:?} vs {:?}->{:?}",
            t1.input_dims, t1.output_dims, t2.input_dims, t2.output_dims
        )));
    }
    let z1 = t1.is_zero(tol);
    let z2 = t2.is_zero(tol);
    if z1 || z2 {
        return Ok((z1 && z2).then_some(Complex64::new(1.0, 0.0)));
    }
    let k = pivot(&t2.entries);
    let lambda = t1.entries[k] / t2.entries[k];
    let ok = t1.entries.iter().zip(&t2.entries).all(|(a, b)| (a - lambda * b).norm() <= tol);
    Ok(ok.then_some(lambda))
}

/// First entry whose magnitude is within relative 1e-9 of the maximum.
fn pivot(entries: &[Complex64]) -> usize {
    let max = entries.iter().map(|z| z.norm()).fold(0.0, f64::max);
    entries.iter().position(|z| z.norm() >= max * (1.0 - 1e-9)).unwrap_or(0)
}

/// Identifies a tensor's class up to nonzero scalar and independent
/// permutations of inputs and outputs.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EquivClassKey(pub Vec<u8>);

impl EquivClassKey {
    pub fn hex(&self) -> String {
        use sha2::{Digest, Sha256};
        hex::encode(Sha256::digest(&self.0))
    }
}

/// All permutations of `0..n` in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..n).collect();
    loop {
        out.push(cur.clone());
        // next lexicographic permutation
        let Some(i) = (1..n).rev().find(|&i| cur[i - 1] < cur[i]) else { break };
        let j = (i..n).rev().find(|&j| cur[j] > cur[i - 1]).unwrap();
        cur.swap(i - 1, j);
        cur[i..].reverse();
    }
    out
}

fn quantize(x: f64, tol: f64) -> i64 {
    if x.abs() < tol {
        0
    } else {
        (x * 1e12).round() as i64
    }
}

pub fn equiv_key(t: &Tensor, tol: f64) -> EquivClassKey {
    let in_labels: Vec<u32> = t.input_dims.iter().map(|&d| d as u32).collect();
    let out_labels: Vec<u32> = t.output_dims.iter().map(|&d| d as u32).collect();
    equiv_key_labeled(t, &in_labels, &out_labels, tol)
}

/// Class key where boundary indices carry labels (e.g. object types) that any
/// permutation must carry along with them.
pub fn equiv_key_labeled(t: &Tensor, in_labels: &[u32], out_labels: &[u32], tol: f64) -> EquivClassKey {
    let mut bytes = Vec::new();
    if t.is_zero(tol) {
        let mut ins = in_labels.to_vec();
        let mut outs = out_labels.to_vec();
        ins.sort_unstable();
        outs.sort_unstable();
        bytes.push(b'Z');
        encode_labels(&mut bytes, &outs, &ins);
        return EquivClassKey(bytes);
    }
    let mut best: Option<(Vec<u32>, Vec<u32>, Vec<(i64, i64)>)> = None;
    for sigma in permutations(in_labels.len()) {
        for tau in permutations(out_labels.len()) {
            let p = t.permuted(&sigma, &tau);
            let outs: Vec<u32> = tau.iter().map(|&j| out_labels[j]).collect();
            let ins: Vec<u32> = sigma.iter().map(|&i| in_labels[i]).collect();
            if let Some((bo, bi, _)) = &best {
                if (&outs, &ins) > (bo, bi) {
                    continue;
                }
            }
            let piv = p.entries[pivot(&p.entries)];
            let q: Vec<(i64, i64)> = p
                .entries
                .iter()
                .map(|z| {
                    let n = z / piv;
                    (quantize(n.re, tol), quantize(n.im, tol))
                })
                .collect();
            let cand = (outs, ins, q);
            if best.as_ref().is_none_or(|b| cand < *b) {
                best = Some(cand);
            }
        }
    }
    let (outs, ins, q) = best.expect("at least the identity permutation");
    bytes.push(b'T');
    encode_labels(&mut bytes, &outs, &ins);
    for (re, im) in q {
        bytes.extend_from_slice(&re.to_le_bytes());
        bytes.extend_from_slice(&im.to_le_bytes());
    }
    EquivClassKey(bytes)
}

fn encode_labels(bytes: &mut Vec<u8>, outs: &[u32], ins: &[u32]) {
    bytes.extend_from_slice(&(outs.len() as u32).to_le_bytes());
    for l in outs {
        bytes.extend_from_slice(&l.to_le_bytes());
    }
    bytes.extend_from_slice(&(ins.len() as u32).to_le_bytes());
    for l in ins {
        bytes.extend_from_slice(&l.to_le_bytes());
    }
}

/// A witness that `t = scalar · t0.permuted(in_perm, out_perm)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Alignment {
    pub in_perm: Vec<usize>,
    pub out_perm: Vec<usize>,
    pub scalar: Complex64,
}

/// Searches label-preserving permutations of `t0` for one that makes it a
/// scalar multiple of `t`. Permutations are tried in lexicographic order.
pub fn find_alignment(
    t: &Tensor,
    labels: (&[u32], &[u32]),
    t0: &Tensor,
    labels0: (&[u32], &[u32]),
    tol: f64,
) -> Option<Alignment> {
    let (ins, outs) = labels;
    let (ins0, outs0) = labels0;
    if ins.len() != ins0.len() || outs.len() != outs0.len() {
        return None;
    }
    for sigma in permutations(ins0.len()) {
        if sigma.iter().enumerate().any(|(i, &s)| ins[i] != ins0[s]) {
            continue;
        }
        for tau in permutations(outs0.len()) {
            if tau.iter().enumerate().any(|(j, &s)| outs[j] != outs0[s]) {
                continue;
            }
            let p = t0.permuted(&sigma, &tau);
            if let Ok(Some(scalar)) = scalar_match(t, &p, tol) {
                return Some(Alignment { in_perm: sigma, out_perm: tau.clone(), scalar });
            }
        }
    }
    None
}

/// A plain dense matrix for the composition oracle.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Complex64>,
}

impl Matrix {
    pub fn from_tensor(t: &Tensor) -> Matrix {
        Matrix { rows: t.rows(), cols: t.cols(), data: t.entries.clone() }
    }

    pub fn identity(n: usize) -> Matrix {
        let mut data = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            data[i * n + i] = Complex64::new(1.0, 0.0);
        }
        Matrix { rows: n, cols: n, data }
    }

    /// Kronecker product.
    pub fn kron(&self, other: &Matrix) -> Matrix {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        let mut data = vec![Complex64::new(0.0, 0.0); rows * cols];
        for a in 0..self.rows {
            for b in 0..self.cols {
                for c in 0..other.rows {
                    for d in 0..other.cols {
                        data[(a * other.rows + c) * cols + b * other.cols + d] =
                            self.data[a * self.cols + b] * other.data[c * other.cols + d];
                    }
                }
            }
        }
        Matrix { rows, cols, data }
    }
}

/// Ordinary matrix product `ms[0] · ms[1] · ...`, computed without any graph
/// machinery.
pub fn compose_oracle(ms: &[Matrix]) -> Result<Matrix, TensorError> {
    let mut acc = ms
        .first()
        .cloned()
        .ok_or_else(|| TensorError::DimMismatch("empty product".into()))?;
    for m in &ms[1..] {
        if acc.cols != m.rows {
            return Err(TensorError::DimMismatch(format!("{}x{} times {}x{}", acc.rows, acc.cols, m.rows, m.cols)));
        }
        let mut data = vec![Complex64::new(0.0, 0.0); acc.rows * m.cols];
        for i in 0..acc.rows {
            for j in 0..m.cols {
                let mut s = Complex64::new(0.0, 0.0);
                for k in 0..acc.cols {
                    s += acc.data[i * acc.cols + k] * m.data[k * m.cols + j];
                }
                data[i * m.cols + j] = s;
            }
        }
        acc = Matrix { rows: acc.rows, cols: m.cols, data };
    }
    Ok(acc)
}
