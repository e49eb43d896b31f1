//! String graphs, DPO rewriting, tensor evaluation and redex-eliminating
//! synthesis of rewrite systems.

pub mod graph;
pub mod signature;
pub mod tensor;
pub mod iso;
pub mod rewrite;
pub mod synth;
pub mod io;
