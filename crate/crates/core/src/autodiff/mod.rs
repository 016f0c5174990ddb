//! Reverse-mode tape and second-order input jets.

mod arith;
mod jet;
mod tape;

pub use arith::{Arith, OnTape, Plain};
pub use jet::{hess_index, jet_eval, Jet2};
pub use tape::{ParamBlock, Primitive, Tape, UnaryFn, Var};
