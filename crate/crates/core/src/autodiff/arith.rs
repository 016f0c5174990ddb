//! Arithmetic backends shared by every forward pass.
//!
//! Network code is written once against [`Arith`]. [`Plain`] evaluates with
//! bare `f64`s; [`OnTape`] records the same operations on a [`Tape`]. Both
//! compute node values with identical floating-point sequences, so a plain
//! evaluation reproduces the taped value bit for bit.

use super::tape::{ParamBlock, Tape, UnaryFn, Var};
use crate::bspline::{KnotVector, LocalBasis};

pub trait Arith {
    type V: Copy;

    fn val(&self, v: Self::V) -> f64;
    fn constant(&mut self, c: f64) -> Self::V;
    fn zero(&mut self) -> Self::V;
    fn one(&mut self) -> Self::V;
    /// Trainable parameter `index` of the bound parameter vector.
    fn param(&mut self, index: usize) -> Self::V;

    fn add(&mut self, a: Self::V, b: Self::V) -> Self::V;
    fn sub(&mut self, a: Self::V, b: Self::V) -> Self::V;
    fn mul(&mut self, a: Self::V, b: Self::V) -> Self::V;
    fn powi(&mut self, a: Self::V, n: i32) -> Self::V;
    /// `f^(order)(x)`.
    fn unary(&mut self, f: UnaryFn, order: u8, x: Self::V) -> Self::V;
    fn affine(&mut self, constant: f64, terms: &[(f64, Self::V)]) -> Self::V;

    fn dot_begin(&mut self);
    fn dot_push(&mut self, a: Self::V, b: Self::V);
    fn dot_end(&mut self) -> Self::V;

    fn knots_handle(&mut self, kv: &KnotVector) -> u32;
    /// `Σ_r θ[coeff_offset + first + r] · B^(deriv)_{first+r}(x)`.
    fn spline(
        &mut self,
        knots: u32,
        x: Self::V,
        basis: &LocalBasis,
        deriv: usize,
        coeff_offset: usize,
    ) -> Self::V;
}

/// Plain `f64` evaluation against a borrowed parameter vector.
pub struct Plain<'a> {
    params: &'a [f64],
    acc: f64,
}

impl<'a> Plain<'a> {
    pub fn new(params: &'a [f64]) -> Self {
        Self { params, acc: 0.0 }
    }
}

impl Arith for Plain<'_> {
    type V = f64;

    #[inline]
    fn val(&self, v: f64) -> f64 {
        v
    }
    #[inline]
    fn constant(&mut self, c: f64) -> f64 {
        c
    }
    #[inline]
    fn zero(&mut self) -> f64 {
        0.0
    }
    #[inline]
    fn one(&mut self) -> f64 {
        1.0
    }
    #[inline]
    fn param(&mut self, index: usize) -> f64 {
        self.params[index]
    }
    #[inline]
    fn add(&mut self, a: f64, b: f64) -> f64 {
        a + b
    }
    #[inline]
    fn sub(&mut self, a: f64, b: f64) -> f64 {
        a - b
    }
    #[inline]
    fn mul(&mut self, a: f64, b: f64) -> f64 {
        a * b
    }
    #[inline]
    fn powi(&mut self, a: f64, n: i32) -> f64 {
        a.powi(n)
    }
    #[inline]
    fn unary(&mut self, f: UnaryFn, order: u8, x: f64) -> f64 {
        f.eval(order, x)
    }
    fn affine(&mut self, constant: f64, terms: &[(f64, f64)]) -> f64 {
        let mut acc = constant;
        for &(c, v) in terms {
            acc += c * v;
        }
        acc
    }
    #[inline]
    fn dot_begin(&mut self) {
        self.acc = 0.0;
    }
    #[inline]
    fn dot_push(&mut self, a: f64, b: f64) {
        self.acc += a * b;
    }
    #[inline]
    fn dot_end(&mut self) -> f64 {
        self.acc
    }
    fn knots_handle(&mut self, _kv: &KnotVector) -> u32 {
        0
    }
    #[inline]
    fn spline(&mut self, _knots: u32, _x: f64, basis: &LocalBasis, deriv: usize, coeff_offset: usize) -> f64 {
        let params = self.params;
        basis.combine(deriv, |i| params[coeff_offset + i])
    }
}

/// Records onto a tape; parameters resolve to a registered [`ParamBlock`].
pub struct OnTape<'t> {
    pub tape: &'t mut Tape,
    params: ParamBlock,
    zero: Option<Var>,
    one: Option<Var>,
}

impl<'t> OnTape<'t> {
    pub fn new(tape: &'t mut Tape, params: ParamBlock) -> Self {
        Self {
            tape,
            params,
            zero: None,
            one: None,
        }
    }

    /// Registers `values` as trainable leaves and binds them.
    pub fn with_params(tape: &'t mut Tape, values: &[f64]) -> Self {
        let block = tape.register_params(values);
        Self::new(tape, block)
    }

    pub fn params(&self) -> ParamBlock {
        self.params
    }
}

impl Arith for OnTape<'_> {
    type V = Var;

    #[inline]
    fn val(&self, v: Var) -> f64 {
        self.tape.value(v)
    }
    fn constant(&mut self, c: f64) -> Var {
        self.tape.constant(c)
    }
    fn zero(&mut self) -> Var {
        match self.zero {
            Some(z) => z,
            None => *self.zero.insert(self.tape.constant(0.0)),
        }
    }
    fn one(&mut self) -> Var {
        match self.one {
            Some(o) => o,
            None => *self.one.insert(self.tape.constant(1.0)),
        }
    }
    #[inline]
    fn param(&mut self, index: usize) -> Var {
        self.params.var(index)
    }
    fn add(&mut self, a: Var, b: Var) -> Var {
        self.tape.add(a, b)
    }
    fn sub(&mut self, a: Var, b: Var) -> Var {
        self.tape.sub(a, b)
    }
    fn mul(&mut self, a: Var, b: Var) -> Var {
        self.tape.mul(a, b)
    }
    fn powi(&mut self, a: Var, n: i32) -> Var {
        self.tape.powi(a, n)
    }
    fn unary(&mut self, f: UnaryFn, order: u8, x: Var) -> Var {
        self.tape.unary(f, order, x)
    }
    fn affine(&mut self, constant: f64, terms: &[(f64, Var)]) -> Var {
        self.tape.affine(constant, terms)
    }
    #[inline]
    fn dot_begin(&mut self) {
        self.tape.dot_begin()
    }
    #[inline]
    fn dot_push(&mut self, a: Var, b: Var) {
        self.tape.dot_push(a, b)
    }
    #[inline]
    fn dot_end(&mut self) -> Var {
        self.tape.dot_end()
    }
    fn knots_handle(&mut self, kv: &KnotVector) -> u32 {
        self.tape.knots_id(kv)
    }
    #[inline]
    fn spline(&mut self, knots: u32, x: Var, basis: &LocalBasis, deriv: usize, coeff_offset: usize) -> Var {
        let block = self.params;
        self.tape
            .spline(knots, x, basis, deriv, |i| block.var(coeff_offset + i))
    }
}
