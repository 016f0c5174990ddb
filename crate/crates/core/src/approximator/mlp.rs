use rand::Rng;
use rand_distr::{Distribution, Uniform};

use super::InputMap;
use crate::autodiff::{Arith, Jet2, UnaryFn};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct DenseShape {
    n_in: usize,
    n_out: usize,
    offset: usize,
}

/// Dense network with tanh hidden layers and a linear output.
/// Parameters per layer: row-major `W` (`n_out × n_in`) followed by `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpNetwork {
    widths: Vec<usize>,
    input_map: InputMap,
    layers: Vec<DenseShape>,
    params: Vec<f64>,
}

/// `Σ_l (n_l n_{l+1} + n_{l+1})`.
pub fn mlp_param_count(widths: &[usize]) -> usize {
    widths.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

impl MlpNetwork {
    pub fn new(widths: &[usize], input_map: InputMap) -> Result<Self> {
        if widths.len() < 2 || widths.contains(&0) {
            return Err(Error::InvalidSize(format!(
                "MLP widths need at least two positive entries, got {widths:?}"
            )));
        }
        if widths[0] != 2 {
            return Err(Error::InvalidSize(format!(
                "networks take 2 input coordinates, widths start with {}",
                widths[0]
            )));
        }
        let mut offset = 0;
        let layers = widths
            .windows(2)
            .map(|w| {
                let s = DenseShape {
                    n_in: w[0],
                    n_out: w[1],
                    offset,
                };
                offset += w[0] * w[1] + w[1];
                s
            })
            .collect();
        Ok(Self {
            widths: widths.to_vec(),
            input_map,
            layers,
            params: vec![0.0; offset],
        })
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
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

    /// Flat index of `W_{j,i}` in layer `l`.
    pub fn weight_index(&self, l: usize, j: usize, i: usize) -> usize {
        let s = self.layers[l];
        s.offset + j * s.n_in + i
    }

    /// Flat index of `b_j` in layer `l`.
    pub fn bias_index(&self, l: usize, j: usize) -> usize {
        let s = self.layers[l];
        s.offset + s.n_in * s.n_out + j
    }

    /// Xavier-uniform weights, zero biases.
    pub fn init_params<R: Rng>(&mut self, rng: &mut R) {
        for s in self.layers.clone() {
            let bound = (6.0 / (s.n_in + s.n_out) as f64).sqrt();
            let xavier = Uniform::new_inclusive(-bound, bound).expect("finite bounds");
            for w in &mut self.params[s.offset..s.offset + s.n_in * s.n_out] {
                *w = xavier.sample(rng);
            }
            let b0 = s.offset + s.n_in * s.n_out;
            self.params[b0..b0 + s.n_out].fill(0.0);
        }
    }

    pub fn forward_value<A: Arith>(&self, ctx: &mut A, x: [f64; 2]) -> A::V {
        let mut acts: Vec<A::V> = (0..2)
            .map(|a| {
                let v = self.input_map.apply(a, x[a]);
                ctx.constant(v)
            })
            .collect();
        let last = self.layers.len() - 1;
        let mut next = Vec::new();
        for (l, s) in self.layers.iter().enumerate() {
            next.clear();
            for j in 0..s.n_out {
                let z = self.affine_value(ctx, *s, j, &acts);
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

    fn affine_value<A: Arith>(&self, ctx: &mut A, s: DenseShape, j: usize, acts: &[A::V]) -> A::V {
        let one = ctx.one();
        let row = s.offset + j * s.n_in;
        let bias = ctx.param(s.offset + s.n_in * s.n_out + j);
        ctx.dot_begin();
        for (i, &x) in acts.iter().enumerate() {
            let w = ctx.param(row + i);
            ctx.dot_push(w, x);
        }
        ctx.dot_push(bias, one);
        ctx.dot_end()
    }

    pub fn forward_jet<A: Arith>(&self, ctx: &mut A, x: [f64; 2]) -> Jet2<A::V> {
        let mut acts: Vec<Jet2<A::V>> = (0..2)
            .map(|a| {
                let v = self.input_map.apply(a, x[a]);
                Jet2::seed_scaled(ctx, v, a, self.input_map.scale[a])
            })
            .collect();
        let last = self.layers.len() - 1;
        let mut next = Vec::new();
        let mut vals = Vec::new();
        for (l, s) in self.layers.iter().enumerate() {
            next.clear();
            vals.clear();
            vals.extend(acts.iter().map(|j| j.v));
            for j in 0..s.n_out {
                let v = self.affine_value(ctx, *s, j, &vals);
                let row = s.offset + j * s.n_in;
                let mut d1 = [v; 2];
                for (a, slot) in d1.iter_mut().enumerate() {
                    ctx.dot_begin();
                    for (i, jet) in acts.iter().enumerate() {
                        let w = ctx.param(row + i);
                        ctx.dot_push(w, jet.d1[a]);
                    }
                    *slot = ctx.dot_end();
                }
                let mut d2 = [v; 3];
                for (h, slot) in d2.iter_mut().enumerate() {
                    ctx.dot_begin();
                    for (i, jet) in acts.iter().enumerate() {
                        let w = ctx.param(row + i);
                        ctx.dot_push(w, jet.d2[h]);
                    }
                    *slot = ctx.dot_end();
                }
                let z = Jet2 { v, d1, d2 };
                next.push(if l == last { z } else { z.unary(ctx, UnaryFn::Tanh) });
            }
            std::mem::swap(&mut acts, &mut next);
        }
        acts[0]
    }
}
