//! Trainable function approximators `u_θ : R² → R`.
//!
//! Two families share one interface: a Kolmogorov–Arnold network with
//! B-spline edge activations ([`KanNetwork`]) and a dense tanh MLP
//! ([`MlpNetwork`]). Both map problem coordinates to `[-1, 1]²` through an
//! [`InputMap`] before the first layer and return either a plain value or a
//! second-order [`Jet2`] with derivatives in the original coordinates.

mod kan;
mod mlp;

use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Arith, Jet2, Plain};
use crate::error::{Error, Result};

pub use kan::{
    kan_layer_forward, kan_param_count, phi_eval, phi_value, EdgeRef, KanEdge, KanLayer, KanNetwork,
    KanScratch, GRID_MAX, GRID_MIN,
};
pub use mlp::{mlp_param_count, MlpNetwork};

/// Per-axis affine map `x ↦ scale·x + shift`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InputMap {
    pub scale: [f64; 2],
    pub shift: [f64; 2],
}

impl InputMap {
    pub fn identity() -> Self {
        Self {
            scale: [1.0; 2],
            shift: [0.0; 2],
        }
    }

    /// Sends the box `[lo₀, hi₀] × [lo₁, hi₁]` onto `[-1, 1]²`.
    pub fn from_box(lo: [f64; 2], hi: [f64; 2]) -> Result<Self> {
        let mut scale = [0.0; 2];
        let mut shift = [0.0; 2];
        for a in 0..2 {
            if !(lo[a].is_finite() && hi[a].is_finite() && lo[a] < hi[a]) {
                return Err(Error::InvalidDomain {
                    min: lo[a],
                    max: hi[a],
                });
            }
            scale[a] = 2.0 / (hi[a] - lo[a]);
            shift[a] = -(hi[a] + lo[a]) / (hi[a] - lo[a]);
        }
        Ok(Self { scale, shift })
    }

    #[inline]
    pub fn apply(&self, axis: usize, x: f64) -> f64 {
        self.scale[axis] * x + self.shift[axis]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Kan,
    Mlp,
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelKind::Kan => "kan",
            ModelKind::Mlp => "mlp",
        })
    }
}

/// Architecture description sufficient to rebuild a network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Architecture {
    pub model: ModelKind,
    pub widths: Vec<usize>,
    /// KAN only; ignored for MLPs.
    pub grid_size: usize,
    /// KAN only; ignored for MLPs.
    pub degree: usize,
    pub input_lo: [f64; 2],
    pub input_hi: [f64; 2],
}

impl Architecture {
    pub fn param_count(&self) -> usize {
        match self.model {
            ModelKind::Kan => kan_param_count(&self.widths, self.grid_size, self.degree),
            ModelKind::Mlp => mlp_param_count(&self.widths),
        }
    }
}

/// Anything that can be evaluated as `u(x)` on an [`Arith`] backend, either
/// as a value or as a second-order jet in the input coordinates.
pub trait Approximator {
    fn value<A: Arith>(&self, ctx: &mut A, x: [f64; 2]) -> A::V;
    fn jet<A: Arith>(&self, ctx: &mut A, x: [f64; 2]) -> Jet2<A::V>;
}

#[derive(Debug, Clone, PartialEq)]
pub enum Network {
    Kan(KanNetwork),
    Mlp(MlpNetwork),
}

impl Network {
    /// Zero-parameter network for `arch`.
    pub fn zeros(arch: &Architecture) -> Result<Self> {
        let map = InputMap::from_box(arch.input_lo, arch.input_hi)?;
        Ok(match arch.model {
            ModelKind::Kan => Network::Kan(KanNetwork::new(&arch.widths, arch.grid_size, arch.degree, map)?),
            ModelKind::Mlp => Network::Mlp(MlpNetwork::new(&arch.widths, map)?),
        })
    }

    /// Network initialised from a ChaCha8 stream seeded with `seed`.
    pub fn seeded(arch: &Architecture, seed: u64) -> Result<Self> {
        let mut net = Self::zeros(arch)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        match &mut net {
            Network::Kan(k) => k.init_params(&mut rng),
            Network::Mlp(m) => m.init_params(&mut rng),
        }
        Ok(net)
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            Network::Kan(_) => ModelKind::Kan,
            Network::Mlp(_) => ModelKind::Mlp,
        }
    }

    pub fn params(&self) -> &[f64] {
        match self {
            Network::Kan(k) => k.params(),
            Network::Mlp(m) => m.params(),
        }
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        match self {
            Network::Kan(k) => k.params_mut(),
            Network::Mlp(m) => m.params_mut(),
        }
    }

    pub fn param_count(&self) -> usize {
        self.params().len()
    }

    pub fn forward_value<A: Arith>(&self, ctx: &mut A, x: [f64; 2]) -> A::V {
        match self {
            Network::Kan(k) => k.forward_value(ctx, x),
            Network::Mlp(m) => m.forward_value(ctx, x),
        }
    }

    pub fn forward_jet<A: Arith>(&self, ctx: &mut A, x: [f64; 2]) -> Jet2<A::V> {
        match self {
            Network::Kan(k) => k.forward_jet(ctx, x),
            Network::Mlp(m) => m.forward_jet(ctx, x),
        }
    }

    /// Plain prediction `u_θ(x)`.
    pub fn eval(&self, x: [f64; 2]) -> f64 {
        let mut ctx = Plain::new(self.params());
        self.forward_value(&mut ctx, x)
    }

    /// Plain prediction jet at `x`.
    pub fn eval_jet(&self, x: [f64; 2]) -> Jet2<f64> {
        let mut ctx = Plain::new(self.params());
        self.forward_jet(&mut ctx, x)
    }

    /// Roughness penalty on spline coefficients; zero for MLPs.
    pub fn smoothness_penalty(&self, weight: f64, grad: &mut [f64]) -> f64 {
        match self {
            Network::Kan(k) if weight != 0.0 => k.smoothness_penalty(weight, grad),
            _ => 0.0,
        }
    }
}

impl Approximator for Network {
    fn value<A: Arith>(&self, ctx: &mut A, x: [f64; 2]) -> A::V {
        self.forward_value(ctx, x)
    }

    fn jet<A: Arith>(&self, ctx: &mut A, x: [f64; 2]) -> Jet2<A::V> {
        self.forward_jet(ctx, x)
    }
}

/// JSON sidecar written next to a parameter blob.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsHeader {
    #[serde(flatten)]
    pub arch: Architecture,
    pub seed: u64,
    pub param_count: usize,
}

/// Writes the parameters as little-endian `f64` to `blob` and the header as
/// JSON to `header`.
pub fn save_params(net: &Network, header: &ParamsHeader, blob: &Path, header_path: &Path) -> Result<()> {
    if header.param_count != net.param_count() {
        return Err(Error::Blob(format!(
            "header declares {} parameters, network has {}",
            header.param_count,
            net.param_count()
        )));
    }
    let mut bytes = Vec::with_capacity(8 * net.param_count());
    for p in net.params() {
        bytes.extend_from_slice(&p.to_le_bytes());
    }
    fs::write(blob, bytes)?;
    fs::write(header_path, serde_json::to_string_pretty(header)?)?;
    Ok(())
}

/// Inverse of [`save_params`]; the result is bit-identical to what was saved.
pub fn load_params(blob: &Path, header_path: &Path) -> Result<(Network, ParamsHeader)> {
    let header: ParamsHeader = serde_json::from_str(&fs::read_to_string(header_path)?)?;
    let expected = header.arch.param_count();
    if expected != header.param_count {
        return Err(Error::Blob(format!(
            "architecture implies {expected} parameters, header says {}",
            header.param_count
        )));
    }
    let bytes = fs::read(blob)?;
    if bytes.len() != 8 * expected {
        return Err(Error::Blob(format!(
            "blob holds {} bytes, expected {}",
            bytes.len(),
            8 * expected
        )));
    }
    let mut net = Network::zeros(&header.arch)?;
    for (dst, chunk) in net.params_mut().iter_mut().zip(bytes.chunks_exact(8)) {
        *dst = f64::from_le_bytes(chunk.try_into().expect("8-byte chunk"));
    }
    Ok((net, header))
}
