//! Derives the GHZ/W valuation from the two multiplications and prints it in
//! the project's valuation format.
//!
//! Units solve `μ ∘ (η ⊗ id) = id`. Each counit is the 0/1 effect whose
//! pairing `ε ∘ μ` is a permutation matrix; the cup is the inverse pairing.
//! Comultiplications are `(μ ⊗ id) ∘ (id ⊗ cup)` and the dualiser is
//! `(cap_GHZ ⊗ id) ∘ (id ⊗ cup_W)`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use sgsynth::tensor::Tensor;

const GHZ_MUL: [[f64; 4]; 2] = [[1., 0., 0., 0.], [0., 0., 0., 1.]];
const W_MUL: [[f64; 4]; 2] = [[0., 1., 1., 0.], [0., 0., 0., 1.]];

fn mul(rows: &[[f64; 4]; 2]) -> Tensor {
    Tensor::from_real_rows(vec![2, 2], vec![2], &[&rows[0], &rows[1]])
}

fn re(t: &Tensor) -> Vec<f64> {
    t.entries().iter().map(|z| z.re).collect()
}

/// `μ(k ⊗ ·)` as a 2×2 matrix, entry `[o][i]`.
fn slice(mu: &Tensor, k: usize) -> [[f64; 2]; 2] {
    let e = re(mu);
    let mut s = [[0.; 2]; 2];
    for (o, row) in s.iter_mut().enumerate() {
        for (i, x) in row.iter_mut().enumerate() {
            *x = e[o * 4 + k * 2 + i];
        }
    }
    s
}

fn unit(mu: &Tensor) -> Tensor {
    // least squares over the four equations Σ_k η_k μ_k = I
    let (a, b) = (slice(mu, 0), slice(mu, 1));
    let id = [[1., 0.], [0., 1.]];
    let dot = |x: &[[f64; 2]; 2], y: &[[f64; 2]; 2]| (0..2).flat_map(|o| (0..2).map(move |i| (o, i))).map(|(o, i)| x[o][i] * y[o][i]).sum::<f64>();
    let (aa, ab, bb) = (dot(&a, &a), dot(&a, &b), dot(&b, &b));
    let (ra, rb) = (dot(&a, &id), dot(&b, &id));
    let det = aa * bb - ab * ab;
    let eta = [(ra * bb - rb * ab) / det, (aa * rb - ab * ra) / det];
    Tensor::from_real_rows(vec![], vec![2], &[&[eta[0]], &[eta[1]]])
}

fn pairing(mu: &Tensor, eps: [f64; 2]) -> [[f64; 2]; 2] {
    let e = re(mu);
    let mut p = [[0.; 2]; 2];
    for (i, row) in p.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            *x = eps[0] * e[i * 2 + j] + eps[1] * e[4 + i * 2 + j];
        }
    }
    p
}

fn is_permutation(p: &[[f64; 2]; 2]) -> bool {
    p == &[[1., 0.], [0., 1.]] || p == &[[0., 1.], [1., 0.]]
}

fn counit(mu: &Tensor) -> ([f64; 2], [[f64; 2]; 2]) {
    let found: Vec<_> = [[1., 0.], [0., 1.], [1., 1.]]
        .into_iter()
        .map(|eps| (eps, pairing(mu, eps)))
        .filter(|(_, p)| is_permutation(p))
        .collect();
    assert_eq!(found.len(), 1, "no unique permutation pairing");
    found[0]
}

/// The inverse of a permutation pairing, as a state on two wires.
fn cup(p: &[[f64; 2]; 2]) -> Tensor {
    let e: Vec<Complex64> = (0..4).map(|k| Complex64::new(p[k % 2][k / 2], 0.0)).collect();
    Tensor::new(vec![], vec![2, 2], e).unwrap()
}

fn cap(p: &[[f64; 2]; 2]) -> Tensor {
    Tensor::from_real_rows(vec![2, 2], vec![], &[&[p[0][0], p[0][1], p[1][0], p[1][1]]])
}

pub fn derive() -> BTreeMap<&'static str, Tensor> {
    let id = Tensor::identity(2);
    let mut out = BTreeMap::new();
    let mut pairings = Vec::new();
    for (name, rows) in [("ghz", &GHZ_MUL), ("w", &W_MUL)] {
        let mu = mul(rows);
        let (eps, p) = counit(&mu);
        let delta = mu.tensor_product(&id).compose(&id.tensor_product(&cup(&p))).unwrap();
        out.insert(if name == "ghz" { "ghz_unit" } else { "w_unit" }, unit(&mu));
        out.insert(if name == "ghz" { "ghz_counit" } else { "w_counit" }, Tensor::from_real_rows(vec![2], vec![], &[&eps]));
        out.insert(if name == "ghz" { "ghz_comul" } else { "w_comul" }, delta);
        out.insert(if name == "ghz" { "ghz_mul" } else { "w_mul" }, mu);
        pairings.push(p);
    }
    let dualiser = cap(&pairings[0]).tensor_product(&id).compose(&id.tensor_product(&cup(&pairings[1]))).unwrap();
    out.insert("dualiser", dualiser);
    out.insert("zero_state", Tensor::zeros(vec![], vec![2]));
    out.insert("zero_effect", Tensor::zeros(vec![2], vec![]));
    out
}

#[allow(dead_code)]
fn main() {
    let doc: serde_json::Map<String, serde_json::Value> = derive()
        .into_iter()
        .map(|(k, t)| {
            let rows: Vec<Vec<f64>> = t.matrix_rows().iter().map(|r| r.iter().map(|z| z.re).collect()).collect();
            (k.to_string(), serde_json::json!(rows))
        })
        .collect();
    println!("{}", serde_json::to_string_pretty(&doc).unwrap());
}
