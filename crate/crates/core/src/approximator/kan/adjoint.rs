//! Hand-fused forward and reverse pass for KAN output jets.
//!
//! Training only ever needs `∂/∂θ` of a scalar built from the output jet at a
//! single point, so the general tape pays for a lot of bookkeeping it does not
//! need. This module runs the jet forward on plain floats, keeps the per-layer
//! intermediates in a reusable [`KanScratch`], and then pulls an adjoint jet
//! back through the layers by hand. The tape stays the reference
//! implementation; tests compare the two.

use super::{KanNetwork, LayerShape};
use crate::autodiff::{Jet2, UnaryFn};
use crate::bspline::LocalBasis;

/// Per-layer intermediates of one forward pass.
#[derive(Debug, Clone, Default)]
struct LayerCache {
    inputs: Vec<Jet2<f64>>,
    basis: Vec<LocalBasis>,
    /// SiLU and its first three derivatives at each input value.
    silu: Vec<[f64; 4]>,
    /// `∂_a x · ∂_b x` for each input, Hessian slot order.
    outer: Vec<[f64; 3]>,
    /// Per edge `(j, i)`, row-major: the pre-activation's first and second
    /// derivative with respect to input `i`.
    edge_d: Vec<[f64; 2]>,
    /// Pre-activation jets.
    pre: Vec<Jet2<f64>>,
    /// tanh and its first three derivatives at each pre-activation value.
    tanh: Vec<[f64; 4]>,
}

/// Reusable buffers for [`KanNetwork::jet_forward`] / [`KanNetwork::jet_backward`].
#[derive(Debug, Clone, Default)]
pub struct KanScratch {
    layers: Vec<LayerCache>,
    adj_out: Vec<Jet2<f64>>,
    adj_in: Vec<Jet2<f64>>,
}

const ZERO: Jet2<f64> = Jet2 {
    v: 0.0,
    d1: [0.0; 2],
    d2: [0.0; 3],
};

#[inline]
fn outer(g: [f64; 2]) -> [f64; 3] {
    [g[0] * g[0], g[0] * g[1], g[1] * g[1]]
}

/// Adds `w · ∂P_h/∂g` (with `P = outer(g)`) to `out`.
#[inline]
fn outer_pullback(g: [f64; 2], w: [f64; 3], out: &mut [f64; 2]) {
    out[0] += 2.0 * w[0] * g[0] + w[1] * g[1];
    out[1] += 2.0 * w[2] * g[1] + w[1] * g[0];
}

impl KanNetwork {
    /// Output jet at `x`, recording what [`Self::jet_backward`] needs.
    /// Agrees with [`Self::forward_jet`] up to summation order.
    pub fn jet_forward(&self, ws: &mut KanScratch, x: [f64; 2]) -> Jet2<f64> {
        ws.layers.resize_with(self.layers.len(), LayerCache::default);
        let last = self.layers.len() - 1;
        for (l, &shape) in self.layers.iter().enumerate() {
            let (done, rest) = ws.layers.split_at_mut(l);
            let cache = &mut rest[0];
            cache.inputs.clear();
            if l == 0 {
                for a in 0..2 {
                    let mut jet = ZERO;
                    jet.v = self.input_map.apply(a, x[a]);
                    jet.d1[a] = self.input_map.scale[a];
                    cache.inputs.push(jet);
                }
            } else {
                let prev = &done[l - 1];
                for (z, t) in prev.pre.iter().zip(&prev.tanh) {
                    cache.inputs.push(tanh_jet(z, t));
                }
            }
            self.layer_forward(shape, cache, l != last);
        }
        let top = &ws.layers[last];
        top.pre[0]
    }

    fn layer_forward(&self, shape: LayerShape, c: &mut LayerCache, squash: bool) {
        c.basis.clear();
        c.silu.clear();
        c.outer.clear();
        for jet in &c.inputs {
            c.basis.push(self.knots.local_basis(jet.v, 3));
            c.silu.push(UnaryFn::Silu.eval_through_third(jet.v));
            c.outer.push(outer(jet.d1));
        }
        let p = &self.params;
        let res0 = self.residual_offset(shape);
        c.pre.clear();
        c.tanh.clear();
        c.edge_d.clear();
        for j in 0..shape.n_out {
            let mut z = ZERO;
            for i in 0..shape.n_in {
                let e = self.edge_ref(shape, j, i);
                let a = p[e.weight_index] + p[res0 + j * shape.n_in + i];
                let s = spline_sums(&c.basis[i], &p[e.coeff_offset..]);
                let sl = &c.silu[i];
                let d1 = a * sl[1] + s[1];
                let d2 = a * sl[2] + s[2];
                c.edge_d.push([d1, d2]);
                let x = &c.inputs[i];
                z.v += a * sl[0] + s[0];
                z.d1[0] += d1 * x.d1[0];
                z.d1[1] += d1 * x.d1[1];
                for h in 0..3 {
                    z.d2[h] += d2 * c.outer[i][h] + d1 * x.d2[h];
                }
            }
            c.pre.push(z);
            if squash {
                c.tanh.push(UnaryFn::Tanh.eval_through_third(z.v));
            }
        }
    }

    /// Accumulates `Σ seed · ∂(output jet)/∂θ` into `grad`, using the
    /// intermediates from the most recent [`Self::jet_forward`] on `ws`.
    pub fn jet_backward(&self, ws: &mut KanScratch, seed: &Jet2<f64>, grad: &mut [f64]) {
        assert_eq!(grad.len(), self.params.len(), "gradient buffer length");
        let KanScratch {
            layers,
            adj_out,
            adj_in,
        } = ws;
        adj_out.clear();
        adj_out.push(*seed);
        let last = self.layers.len() - 1;
        for l in (0..self.layers.len()).rev() {
            let shape = self.layers[l];
            let c = &layers[l];
            // Pull the adjoint of the layer output back through tanh.
            if l != last {
                for (j, y) in adj_out.iter_mut().enumerate() {
                    *y = tanh_pullback(&c.pre[j], &c.tanh[j], y);
                }
            }
            adj_in.clear();
            adj_in.resize(shape.n_in, ZERO);
            let need_inputs = l > 0;
            let p = &self.params;
            let res0 = self.residual_offset(shape);
            for (j, zb) in adj_out.iter().enumerate() {
                for i in 0..shape.n_in {
                    let e = self.edge_ref(shape, j, i);
                    let wr = res0 + j * shape.n_in + i;
                    let a = p[e.weight_index] + p[wr];
                    let x = &c.inputs[i];
                    let po = &c.outer[i];
                    let sl = &c.silu[i];
                    let d1b = zb.d1[0] * x.d1[0]
                        + zb.d1[1] * x.d1[1]
                        + zb.d2[0] * x.d2[0]
                        + zb.d2[1] * x.d2[1]
                        + zb.d2[2] * x.d2[2];
                    let d2b = zb.d2[0] * po[0] + zb.d2[1] * po[1] + zb.d2[2] * po[2];
                    let ab = zb.v * sl[0] + d1b * sl[1] + d2b * sl[2];
                    grad[e.weight_index] += ab;
                    grad[wr] += ab;
                    let b = &c.basis[i];
                    let coeffs = &mut grad[e.coeff_offset + b.first..e.coeff_offset + b.first + b.len];
                    for (r, g) in coeffs.iter_mut().enumerate() {
                        *g += zb.v * b.ders[0][r] + d1b * b.ders[1][r] + d2b * b.ders[2][r];
                    }
                    if !need_inputs {
                        continue;
                    }
                    let [d1, d2] = c.edge_d[j * shape.n_in + i];
                    let ds = derivative_sums(b, &p[e.coeff_offset..], zb.v, d1b, d2b);
                    let xb = &mut adj_in[i];
                    xb.v += a * (zb.v * sl[1] + d1b * sl[2] + d2b * sl[3]) + ds;
                    xb.d1[0] += zb.d1[0] * d1;
                    xb.d1[1] += zb.d1[1] * d1;
                    outer_pullback(x.d1, [d2 * zb.d2[0], d2 * zb.d2[1], d2 * zb.d2[2]], &mut xb.d1);
                    for h in 0..3 {
                        xb.d2[h] += zb.d2[h] * d1;
                    }
                }
            }
            std::mem::swap(adj_out, adj_in);
        }
    }
}

/// `Σ_r c_r B_r^{(m)}(x)` for `m = 0, 1, 2`.
#[inline]
fn spline_sums(b: &LocalBasis, coeffs: &[f64]) -> [f64; 3] {
    let c = &coeffs[b.first..b.first + b.len];
    let mut s = [0.0; 3];
    for (r, &cr) in c.iter().enumerate() {
        s[0] += cr * b.ders[0][r];
        s[1] += cr * b.ders[1][r];
        s[2] += cr * b.ders[2][r];
    }
    s
}

/// `Σ_r c_r (w0 B'_r + w1 B''_r + w2 B'''_r)`.
#[inline]
fn derivative_sums(b: &LocalBasis, coeffs: &[f64], w0: f64, w1: f64, w2: f64) -> f64 {
    let c = &coeffs[b.first..b.first + b.len];
    let mut acc = 0.0;
    for (r, &cr) in c.iter().enumerate() {
        acc += cr * (w0 * b.ders[1][r] + w1 * b.ders[2][r] + w2 * b.ders[3][r]);
    }
    acc
}

/// `tanh` applied to a jet, given `t = [tanh, tanh', tanh'', tanh''']` at `z.v`.
#[inline]
fn tanh_jet(z: &Jet2<f64>, t: &[f64; 4]) -> Jet2<f64> {
    let q = outer(z.d1);
    let mut y = ZERO;
    y.v = t[0];
    y.d1 = [t[1] * z.d1[0], t[1] * z.d1[1]];
    for h in 0..3 {
        y.d2[h] = t[2] * q[h] + t[1] * z.d2[h];
    }
    y
}

/// Adjoint of [`tanh_jet`] with respect to its input jet.
#[inline]
fn tanh_pullback(z: &Jet2<f64>, t: &[f64; 4], yb: &Jet2<f64>) -> Jet2<f64> {
    let q = outer(z.d1);
    let mut zb = ZERO;
    let mut t1b = yb.d1[0] * z.d1[0] + yb.d1[1] * z.d1[1];
    let mut t2b = 0.0;
    for h in 0..3 {
        zb.d2[h] = yb.d2[h] * t[1];
        t1b += yb.d2[h] * z.d2[h];
        t2b += yb.d2[h] * q[h];
    }
    zb.d1 = [yb.d1[0] * t[1], yb.d1[1] * t[1]];
    outer_pullback(
        z.d1,
        [t[2] * yb.d2[0], t[2] * yb.d2[1], t[2] * yb.d2[2]],
        &mut zb.d1,
    );
    zb.v = yb.v * t[1] + t1b * t[2] + t2b * t[3];
    zb
}
