use rand::Rng;
use rand_distr::{Distribution, Normal, Uniform};

mod adjoint;

pub use adjoint::KanScratch;

use super::InputMap;
use crate::autodiff::{Arith, Jet2, UnaryFn};
use crate::bspline::{KnotVector, LocalBasis};
use crate::error::{Error, Result};

/// Every KAN layer uses a spline grid on `[-1, 1]`; hidden activations are
/// tanh-bounded and the first layer sees normalised inputs.
pub const GRID_MIN: f64 = -1.0;
pub const GRID_MAX: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct LayerShape {
    pub n_in: usize,
    pub n_out: usize,
    /// Offset of the layer's first parameter in the flat vector.
    pub offset: usize,
}

/// Parameter locations of one learnable edge activation
/// `φ(x) = w_b·SiLU(x) + Σ_i c_i B_i(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeRef {
    pub coeff_offset: usize,
    pub weight_index: usize,
}

/// Borrowed view of one edge's parameters.
#[derive(Debug, Clone, Copy)]
pub struct KanEdge<'a> {
    pub spline_coeffs: &'a [f64],
    pub basis_weight: f64,
}

/// Borrowed view of one layer: `n_out × n_in` edges plus the residual matrix.
#[derive(Debug, Clone, Copy)]
pub struct KanLayer<'a> {
    net: &'a KanNetwork,
    shape: LayerShape,
}

impl<'a> KanLayer<'a> {
    pub fn n_in(&self) -> usize {
        self.shape.n_in
    }

    pub fn n_out(&self) -> usize {
        self.shape.n_out
    }

    pub fn edge(&self, j: usize, i: usize) -> KanEdge<'a> {
        let r = self.net.edge_ref(self.shape, j, i);
        let nb = self.net.knots.basis_count();
        KanEdge {
            spline_coeffs: &self.net.params[r.coeff_offset..r.coeff_offset + nb],
            basis_weight: self.net.params[r.weight_index],
        }
    }

    /// Residual matrix `W`, row-major `n_out × n_in`.
    pub fn residual_matrix(&self) -> &'a [f64] {
        let start = self.net.residual_offset(self.shape);
        &self.net.params[start..start + self.shape.n_in * self.shape.n_out]
    }

    pub fn knots(&self) -> &'a KnotVector {
        &self.net.knots
    }
}

/// Stack of KAN layers
/// `X⁺ = tanh( Σ_i φ_{j,i}(X_i) + Σ_i W_{j,i} SiLU(X_i) )`, with the final
/// layer left linear.
#[derive(Debug, Clone, PartialEq)]
pub struct KanNetwork {
    widths: Vec<usize>,
    knots: KnotVector,
    input_map: InputMap,
    layers: Vec<LayerShape>,
    params: Vec<f64>,
}

/// Trainable reals of a KAN: `Σ_l n_l n_{l+1} (G + k + 2)`.
pub fn kan_param_count(widths: &[usize], grid_size: usize, degree: usize) -> usize {
    widths
        .windows(2)
        .map(|w| w[0] * w[1] * (grid_size + degree + 2))
        .sum()
}

impl KanNetwork {
    /// Zero-initialised network.
    pub fn new(widths: &[usize], grid_size: usize, degree: usize, input_map: InputMap) -> Result<Self> {
        if widths.len() < 2 || widths.contains(&0) {
            return Err(Error::InvalidSize(format!(
                "KAN widths need at least two positive entries, got {widths:?}"
            )));
        }
        if widths[0] != 2 {
            return Err(Error::InvalidSize(format!(
                "networks take 2 input coordinates, widths start with {}",
                widths[0]
            )));
        }
        let knots = KnotVector::new(GRID_MIN, GRID_MAX, grid_size, degree)?;
        let per_edge = knots.basis_count() + 2;
        let mut offset = 0;
        let layers = widths
            .windows(2)
            .map(|w| {
                let shape = LayerShape {
                    n_in: w[0],
                    n_out: w[1],
                    offset,
                };
                offset += w[0] * w[1] * per_edge;
                shape
            })
            .collect();
        Ok(Self {
            widths: widths.to_vec(),
            knots,
            input_map,
            layers,
            params: vec![0.0; offset],
        })
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn knots(&self) -> &KnotVector {
        &self.knots
    }

    pub fn input_map(&self) -> &InputMap {
        &self.input_map
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }

    pub fn layer(&self, l: usize) -> KanLayer<'_> {
        KanLayer {
            net: self,
            shape: self.layers[l],
        }
    }

    /// Parameter locations of edge `(j ← i)` in layer `l`.
    pub fn edge_at(&self, l: usize, j: usize, i: usize) -> EdgeRef {
        self.edge_ref(self.layers[l], j, i)
    }

    /// Flat index of `W_{j,i}` in layer `l`.
    pub fn residual_index(&self, l: usize, j: usize, i: usize) -> usize {
        let shape = self.layers[l];
        self.residual_offset(shape) + j * shape.n_in + i
    }

    fn edge_ref(&self, shape: LayerShape, j: usize, i: usize) -> EdgeRef {
        let nb = self.knots.basis_count();
        let base = shape.offset + (j * shape.n_in + i) * (nb + 1);
        EdgeRef {
            coeff_offset: base,
            weight_index: base + nb,
        }
    }

    fn residual_offset(&self, shape: LayerShape) -> usize {
        shape.offset + shape.n_in * shape.n_out * (self.knots.basis_count() + 1)
    }

    /// Spline coefficients `~ N(0, 0.1/√(G+k))`; basis weights and residual
    /// matrices Xavier-uniform over the layer's fan-in/fan-out.
    pub fn init_params<R: Rng>(&mut self, rng: &mut R) {
        let nb = self.knots.basis_count();
        let coeff = Normal::new(0.0, 0.1 / (nb as f64).sqrt()).expect("positive std");
        for shape in self.layers.clone() {
            let bound = (6.0 / (shape.n_in + shape.n_out) as f64).sqrt();
            let xavier = Uniform::new_inclusive(-bound, bound).expect("finite bounds");
            for j in 0..shape.n_out {
                for i in 0..shape.n_in {
                    let e = self.edge_ref(shape, j, i);
                    for c in &mut self.params[e.coeff_offset..e.coeff_offset + nb] {
                        *c = coeff.sample(rng);
                    }
                    self.params[e.weight_index] = xavier.sample(rng);
                }
            }
            let start = self.residual_offset(shape);
            for w in &mut self.params[start..start + shape.n_in * shape.n_out] {
                *w = xavier.sample(rng);
            }
        }
    }

    /// Network output at `x` (problem coordinates).
    pub fn forward_value<A: Arith>(&self, ctx: &mut A, x: [f64; 2]) -> A::V {
        let kh = ctx.knots_handle(&self.knots);
        let mut acts: Vec<A::V> = (0..2)
            .map(|a| {
                let v = self.input_map.apply(a, x[a]);
                ctx.constant(v)
            })
            .collect();
        let last = self.layers.len() - 1;
        let mut next = Vec::new();
        for (l, &shape) in self.layers.iter().enumerate() {
            let prep: Vec<(A::V, LocalBasis, A::V)> = acts
                .iter()
                .map(|&v| {
                    let basis = self.knots.local_basis(ctx.val(v), 1);
                    let s0 = ctx.unary(UnaryFn::Silu, 0, v);
                    (v, basis, s0)
                })
                .collect();
            next.clear();
            for j in 0..shape.n_out {
                let z = self.pre_activation_value(ctx, kh, shape, j, &prep);
                next.push(if l == last {
                    z
                } else {
                    ctx.unary(UnaryFn::Tanh, 0, z)
                });
            }
            std::mem::swap(&mut acts, &mut next);
        }
        acts[0]
    }

    fn pre_activation_value<A: Arith>(
        &self,
        ctx: &mut A,
        kh: u32,
        shape: LayerShape,
        j: usize,
        prep: &[(A::V, LocalBasis, A::V)],
    ) -> A::V {
        let splines: Vec<A::V> = prep
            .iter()
            .enumerate()
            .map(|(i, (v, basis, _))| {
                let e = self.edge_ref(shape, j, i);
                ctx.spline(kh, *v, basis, 0, e.coeff_offset)
            })
            .collect();
        let one = ctx.one();
        let res0 = self.residual_offset(shape) + j * shape.n_in;
        ctx.dot_begin();
        for (i, (_, _, s0)) in prep.iter().enumerate() {
            let e = self.edge_ref(shape, j, i);
            let wb = ctx.param(e.weight_index);
            let wr = ctx.param(res0 + i);
            ctx.dot_push(wb, *s0);
            ctx.dot_push(wr, *s0);
            ctx.dot_push(splines[i], one);
        }
        ctx.dot_end()
    }

    /// Output jet (value, gradient and Hessian with respect to the problem
    /// coordinates) at `x`.
    pub fn forward_jet<A: Arith>(&self, ctx: &mut A, x: [f64; 2]) -> Jet2<A::V> {
        let kh = ctx.knots_handle(&self.knots);
        let mut acts: Vec<Jet2<A::V>> = (0..2)
            .map(|a| {
                let v = self.input_map.apply(a, x[a]);
                Jet2::seed_scaled(ctx, v, a, self.input_map.scale[a])
            })
            .collect();
        let last = self.layers.len() - 1;
        let mut next = Vec::new();
        let mut prep = Vec::new();
        for (l, &shape) in self.layers.iter().enumerate() {
            prep.clear();
            for jet in &acts {
                prep.push(InputPrep::new(ctx, &self.knots, *jet));
            }
            next.clear();
            for j in 0..shape.n_out {
                let z = self.pre_activation_jet(ctx, kh, shape, j, &prep);
                next.push(if l == last { z } else { z.unary(ctx, UnaryFn::Tanh) });
            }
            std::mem::swap(&mut acts, &mut next);
        }
        acts[0]
    }

    fn pre_activation_jet<A: Arith>(
        &self,
        ctx: &mut A,
        kh: u32,
        shape: LayerShape,
        j: usize,
        prep: &[InputPrep<A::V>],
    ) -> Jet2<A::V> {
        let mut sp = Vec::with_capacity(prep.len());
        for (i, p) in prep.iter().enumerate() {
            let e = self.edge_ref(shape, j, i);
            let x = p.jet.v;
            sp.push([
                ctx.spline(kh, x, &p.basis, 0, e.coeff_offset),
                ctx.spline(kh, x, &p.basis, 1, e.coeff_offset),
                ctx.spline(kh, x, &p.basis, 2, e.coeff_offset),
            ]);
        }
        let one = ctx.one();
        let res0 = self.residual_offset(shape) + j * shape.n_in;
        let weights: Vec<(A::V, A::V)> = (0..prep.len())
            .map(|i| {
                let e = self.edge_ref(shape, j, i);
                (ctx.param(e.weight_index), ctx.param(res0 + i))
            })
            .collect();

        ctx.dot_begin();
        for (i, p) in prep.iter().enumerate() {
            let (wb, wr) = weights[i];
            ctx.dot_push(wb, p.silu.v);
            ctx.dot_push(wr, p.silu.v);
            ctx.dot_push(sp[i][0], one);
        }
        let v = ctx.dot_end();

        let mut d1 = [v; 2];
        for (a, slot) in d1.iter_mut().enumerate() {
            ctx.dot_begin();
            for (i, p) in prep.iter().enumerate() {
                let (wb, wr) = weights[i];
                ctx.dot_push(wb, p.silu.d1[a]);
                ctx.dot_push(wr, p.silu.d1[a]);
                ctx.dot_push(sp[i][1], p.jet.d1[a]);
            }
            *slot = ctx.dot_end();
        }

        let mut d2 = [v; 3];
        for (h, slot) in d2.iter_mut().enumerate() {
            ctx.dot_begin();
            for (i, p) in prep.iter().enumerate() {
                let (wb, wr) = weights[i];
                ctx.dot_push(wb, p.silu.d2[h]);
                ctx.dot_push(wr, p.silu.d2[h]);
                ctx.dot_push(sp[i][2], p.grad_outer[h]);
                ctx.dot_push(sp[i][1], p.jet.d2[h]);
            }
            *slot = ctx.dot_end();
        }
        Jet2 { v, d1, d2 }
    }

    /// Second-difference roughness `Σ_edges Σ_r (c_{r+1} − 2c_r + c_{r−1})²`
    /// of the spline coefficients and its gradient (accumulated into `grad`,
    /// scaled by `weight`).
    pub fn smoothness_penalty(&self, weight: f64, grad: &mut [f64]) -> f64 {
        let nb = self.knots.basis_count();
        let mut total = 0.0;
        if nb < 3 {
            return 0.0;
        }
        for shape in &self.layers {
            for j in 0..shape.n_out {
                for i in 0..shape.n_in {
                    let e = self.edge_ref(*shape, j, i);
                    let c = &self.params[e.coeff_offset..e.coeff_offset + nb];
                    for r in 1..nb - 1 {
                        let d = c[r + 1] - 2.0 * c[r] + c[r - 1];
                        total += d * d;
                        let g = 2.0 * weight * d;
                        grad[e.coeff_offset + r + 1] += g;
                        grad[e.coeff_offset + r] -= 2.0 * g;
                        grad[e.coeff_offset + r - 1] += g;
                    }
                }
            }
        }
        weight * total
    }
}

/// Per-input quantities shared by all outgoing edges of a layer.
struct InputPrep<V> {
    jet: Jet2<V>,
    basis: LocalBasis,
    silu: Jet2<V>,
    /// `∂_a x · ∂_b x` for the three Hessian slots.
    grad_outer: [V; 3],
}

impl<V: Copy> InputPrep<V> {
    fn new<A: Arith<V = V>>(ctx: &mut A, knots: &KnotVector, jet: Jet2<V>) -> Self {
        let basis = knots.local_basis(ctx.val(jet.v), 3);
        let s0 = ctx.unary(UnaryFn::Silu, 0, jet.v);
        let s1 = ctx.unary(UnaryFn::Silu, 1, jet.v);
        let s2 = ctx.unary(UnaryFn::Silu, 2, jet.v);
        let g = jet.d1;
        let grad_outer = [ctx.mul(g[0], g[0]), ctx.mul(g[0], g[1]), ctx.mul(g[1], g[1])];
        let sd1 = [ctx.mul(s1, g[0]), ctx.mul(s1, g[1])];
        let mut sd2 = [s0; 3];
        for (h, slot) in sd2.iter_mut().enumerate() {
            ctx.dot_begin();
            ctx.dot_push(s2, grad_outer[h]);
            ctx.dot_push(s1, jet.d2[h]);
            *slot = ctx.dot_end();
        }
        Self {
            jet,
            basis,
            silu: Jet2 {
                v: s0,
                d1: sd1,
                d2: sd2,
            },
            grad_outer,
        }
    }
}

/// `φ(x) = w_b·SiLU(x) + Σ c_i B_i(x)` on a jet input. Spline derivatives
/// come from the analytic basis derivatives.
pub fn phi_eval<A: Arith>(ctx: &mut A, knots: &KnotVector, edge: EdgeRef, x: Jet2<A::V>) -> Jet2<A::V> {
    let kh = ctx.knots_handle(knots);
    let p = InputPrep::new(ctx, knots, x);
    let wb = ctx.param(edge.weight_index);
    let s = [
        ctx.spline(kh, x.v, &p.basis, 0, edge.coeff_offset),
        ctx.spline(kh, x.v, &p.basis, 1, edge.coeff_offset),
        ctx.spline(kh, x.v, &p.basis, 2, edge.coeff_offset),
    ];
    let one = ctx.one();
    ctx.dot_begin();
    ctx.dot_push(wb, p.silu.v);
    ctx.dot_push(s[0], one);
    let v = ctx.dot_end();
    let mut d1 = [v; 2];
    for (a, slot) in d1.iter_mut().enumerate() {
        ctx.dot_begin();
        ctx.dot_push(wb, p.silu.d1[a]);
        ctx.dot_push(s[1], x.d1[a]);
        *slot = ctx.dot_end();
    }
    let mut d2 = [v; 3];
    for (h, slot) in d2.iter_mut().enumerate() {
        ctx.dot_begin();
        ctx.dot_push(wb, p.silu.d2[h]);
        ctx.dot_push(s[2], p.grad_outer[h]);
        ctx.dot_push(s[1], x.d2[h]);
        *slot = ctx.dot_end();
    }
    Jet2 { v, d1, d2 }
}

/// Scalar form of [`phi_eval`].
pub fn phi_value<A: Arith>(ctx: &mut A, knots: &KnotVector, edge: EdgeRef, x: A::V) -> A::V {
    let kh = ctx.knots_handle(knots);
    let basis = knots.local_basis(ctx.val(x), 1);
    let s0 = ctx.unary(UnaryFn::Silu, 0, x);
    let wb = ctx.param(edge.weight_index);
    let sp = ctx.spline(kh, x, &basis, 0, edge.coeff_offset);
    let one = ctx.one();
    ctx.dot_begin();
    ctx.dot_push(wb, s0);
    ctx.dot_push(sp, one);
    ctx.dot_end()
}

/// One KAN layer on scalar inputs, `out_j = tanh(Σ_i φ_{j,i}(x_i) + Σ_i W_{j,i} SiLU(x_i))`.
/// Inside a network the final layer skips the tanh.
pub fn kan_layer_forward<A: Arith>(net: &KanNetwork, ctx: &mut A, l: usize, inputs: &[A::V]) -> Vec<A::V> {
    let shape = net.layers[l];
    assert_eq!(
        inputs.len(),
        shape.n_in,
        "layer {l} expects {} inputs",
        shape.n_in
    );
    let kh = ctx.knots_handle(&net.knots);
    let prep: Vec<(A::V, LocalBasis, A::V)> = inputs
        .iter()
        .map(|&v| {
            let basis = net.knots.local_basis(ctx.val(v), 1);
            let s0 = ctx.unary(UnaryFn::Silu, 0, v);
            (v, basis, s0)
        })
        .collect();
    (0..shape.n_out)
        .map(|j| {
            let z = net.pre_activation_value(ctx, kh, shape, j, &prep);
            ctx.unary(UnaryFn::Tanh, 0, z)
        })
        .collect()
}
