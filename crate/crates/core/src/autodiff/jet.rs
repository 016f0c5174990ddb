//! Second-order jets over two input coordinates.
//!
//! A [`Jet2`] carries a value with its gradient and Hessian with respect to
//! the two network inputs. When the component type is a tape [`Var`], every
//! coefficient is itself differentiable with respect to the parameters, which
//! is how PDE residuals built from `u_t`, `u_xx`, `∇²u` get parameter
//! gradients from a single reverse sweep.

use super::arith::{Arith, OnTape};
use super::tape::{Tape, UnaryFn, Var};

/// Flattened index into [`Jet2::d2`] for the pair `(a, b)`.
#[inline]
pub const fn hess_index(a: usize, b: usize) -> usize {
    a + b
}

/// Value, first partials `[∂0, ∂1]` and second partials `[∂00, ∂01, ∂11]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet2<V> {
    pub v: V,
    pub d1: [V; 2],
    pub d2: [V; 3],
}

impl<V: Copy> Jet2<V> {
    pub fn constant<A: Arith<V = V>>(ctx: &mut A, c: f64) -> Self {
        let z = ctx.zero();
        Self {
            v: ctx.constant(c),
            d1: [z; 2],
            d2: [z; 3],
        }
    }

    /// Input coordinate `axis` at `value`: unit gradient, zero Hessian.
    pub fn seed<A: Arith<V = V>>(ctx: &mut A, value: f64, axis: usize) -> Self {
        Self::seed_scaled(ctx, value, axis, 1.0)
    }

    /// `scale · x_axis + shift` evaluated at `x_axis`, i.e. an input coordinate
    /// already passed through an affine normalisation.
    pub fn seed_scaled<A: Arith<V = V>>(ctx: &mut A, value: f64, axis: usize, scale: f64) -> Self {
        let z = ctx.zero();
        let s = ctx.constant(scale);
        let mut d1 = [z; 2];
        d1[axis] = s;
        Self {
            v: ctx.constant(value),
            d1,
            d2: [z; 3],
        }
    }

    pub fn add<A: Arith<V = V>>(self, ctx: &mut A, o: Self) -> Self {
        Self {
            v: ctx.add(self.v, o.v),
            d1: [ctx.add(self.d1[0], o.d1[0]), ctx.add(self.d1[1], o.d1[1])],
            d2: [
                ctx.add(self.d2[0], o.d2[0]),
                ctx.add(self.d2[1], o.d2[1]),
                ctx.add(self.d2[2], o.d2[2]),
            ],
        }
    }

    pub fn sub<A: Arith<V = V>>(self, ctx: &mut A, o: Self) -> Self {
        Self {
            v: ctx.sub(self.v, o.v),
            d1: [ctx.sub(self.d1[0], o.d1[0]), ctx.sub(self.d1[1], o.d1[1])],
            d2: [
                ctx.sub(self.d2[0], o.d2[0]),
                ctx.sub(self.d2[1], o.d2[1]),
                ctx.sub(self.d2[2], o.d2[2]),
            ],
        }
    }

    pub fn scale<A: Arith<V = V>>(self, ctx: &mut A, c: f64) -> Self {
        let mut s = |x| ctx.affine(0.0, &[(c, x)]);
        Self {
            v: s(self.v),
            d1: [s(self.d1[0]), s(self.d1[1])],
            d2: [s(self.d2[0]), s(self.d2[1]), s(self.d2[2])],
        }
    }

    pub fn mul<A: Arith<V = V>>(self, ctx: &mut A, o: Self) -> Self {
        let v = ctx.mul(self.v, o.v);
        let mut d1 = [v; 2];
        for (a, slot) in d1.iter_mut().enumerate() {
            ctx.dot_begin();
            ctx.dot_push(self.d1[a], o.v);
            ctx.dot_push(self.v, o.d1[a]);
            *slot = ctx.dot_end();
        }
        let mut d2 = [v; 3];
        for (a, b) in [(0, 0), (0, 1), (1, 1)] {
            let h = hess_index(a, b);
            ctx.dot_begin();
            ctx.dot_push(self.d2[h], o.v);
            ctx.dot_push(self.d1[a], o.d1[b]);
            ctx.dot_push(self.d1[b], o.d1[a]);
            ctx.dot_push(self.v, o.d2[h]);
            d2[h] = ctx.dot_end();
        }
        Self { v, d1, d2 }
    }

    /// Chain rule for a scalar map given its first three derivative nodes
    /// evaluated at `self.v`.
    pub fn compose<A: Arith<V = V>>(self, ctx: &mut A, f0: V, f1: V, f2: V) -> Self {
        let d1 = [ctx.mul(f1, self.d1[0]), ctx.mul(f1, self.d1[1])];
        let mut d2 = [f0; 3];
        for (a, b) in [(0, 0), (0, 1), (1, 1)] {
            let h = hess_index(a, b);
            let gg = ctx.mul(self.d1[a], self.d1[b]);
            ctx.dot_begin();
            ctx.dot_push(f2, gg);
            ctx.dot_push(f1, self.d2[h]);
            d2[h] = ctx.dot_end();
        }
        Self { v: f0, d1, d2 }
    }

    pub fn unary<A: Arith<V = V>>(self, ctx: &mut A, f: UnaryFn) -> Self {
        let f0 = ctx.unary(f, 0, self.v);
        let f1 = ctx.unary(f, 1, self.v);
        let f2 = ctx.unary(f, 2, self.v);
        self.compose(ctx, f0, f1, f2)
    }

    pub fn powi<A: Arith<V = V>>(self, ctx: &mut A, n: i32) -> Self {
        let nf = n as f64;
        let f0 = ctx.powi(self.v, n);
        // Skip the vanishing derivative terms so u^0 and u^1 stay finite at 0.
        let f1 = if n == 0 {
            ctx.zero()
        } else {
            let p1 = ctx.powi(self.v, n - 1);
            ctx.affine(0.0, &[(nf, p1)])
        };
        let f2 = if n == 0 || n == 1 {
            ctx.zero()
        } else {
            let p2 = ctx.powi(self.v, n - 2);
            ctx.affine(0.0, &[(nf * (nf - 1.0), p2)])
        };
        self.compose(ctx, f0, f1, f2)
    }

    pub fn map<W>(self, mut f: impl FnMut(V) -> W) -> Jet2<W> {
        Jet2 {
            v: f(self.v),
            d1: [f(self.d1[0]), f(self.d1[1])],
            d2: [f(self.d2[0]), f(self.d2[1]), f(self.d2[2])],
        }
    }

    /// Laplacian `∂00 + ∂11`.
    pub fn laplacian<A: Arith<V = V>>(&self, ctx: &mut A) -> V {
        ctx.add(self.d2[0], self.d2[2])
    }
}

impl Jet2<Var> {
    pub fn values(&self, tape: &Tape) -> Jet2<f64> {
        self.map(|v| tape.value(v))
    }
}

/// Evaluates `f` on seeded input jets at `x` and returns the output jet.
/// Parameters registered on `tape` before the call are visible to `f`
/// through the backend.
pub fn jet_eval<F>(tape: &mut Tape, x: [f64; 2], f: F) -> Jet2<Var>
where
    F: FnOnce(&mut OnTape<'_>, [Jet2<Var>; 2]) -> Jet2<Var>,
{
    let block = tape.register_params(&[]);
    let mut ctx = OnTape::new(tape, block);
    let inputs = [Jet2::seed(&mut ctx, x[0], 0), Jet2::seed(&mut ctx, x[1], 1)];
    f(&mut ctx, inputs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::arith::Plain;

    #[test]
    fn cube_of_first_coordinate() {
        let mut tape = Tape::new();
        let j = jet_eval(&mut tape, [2.0, 0.0], |ctx, [x, _t]| x.powi(ctx, 3));
        let j = j.values(&tape);
        assert_eq!(j.v, 8.0);
        assert_eq!(j.d1, [12.0, 0.0]);
        assert_eq!(j.d2[0], 12.0);
        assert_eq!(j.d2[1], 0.0);
        assert_eq!(j.d2[2], 0.0);
    }

    #[test]
    fn sine_times_time() {
        let mut tape = Tape::new();
        let j = jet_eval(&mut tape, [0.0, 5.0], |ctx, [x, t]| {
            let s = x.unary(ctx, UnaryFn::Sin);
            s.mul(ctx, t)
        });
        let j = j.values(&tape);
        assert_eq!(j.v, 0.0);
        assert_eq!(j.d1, [5.0, 0.0]);
        assert_eq!(j.d2[hess_index(0, 1)], 1.0);
        assert_eq!(j.d2[0], 0.0);
    }

    #[test]
    fn plain_and_taped_jets_agree() {
        let x = [0.3, -0.7];
        let mut tape = Tape::new();
        let taped = jet_eval(&mut tape, x, |ctx, [a, b]| {
            let p = a.mul(ctx, b).unary(ctx, UnaryFn::Tanh);
            let q = b.powi(ctx, 2).unary(ctx, UnaryFn::Silu);
            p.sub(ctx, q).scale(ctx, 1.5)
        })
        .values(&tape);
        let mut plain = Plain::new(&[]);
        let a = Jet2::seed(&mut plain, x[0], 0);
        let b = Jet2::seed(&mut plain, x[1], 1);
        let p = a.mul(&mut plain, b).unary(&mut plain, UnaryFn::Tanh);
        let q = b.powi(&mut plain, 2).unary(&mut plain, UnaryFn::Silu);
        let direct = p.sub(&mut plain, q).scale(&mut plain, 1.5);
        assert_eq!(taped, direct);
    }
}
