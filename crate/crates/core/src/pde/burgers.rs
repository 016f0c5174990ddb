//! Viscous Burgers reference solution via the Cole–Hopf transform.
//!
//! For `u_t + u u_x = ν u_xx` with `u(x, 0) = −sin(πx)` the Cole–Hopf
//! substitution gives
//!
//! ```text
//!            ∫ sin(π(x − η)) · f(x − η) · exp(−η² / 4νt) dη
//! u(x,t) = − ────────────────────────────────────────────────
//!                 ∫ f(x − η) · exp(−η² / 4νt) dη
//! ```
//!
//! with `f(y) = exp(−cos(πy) / 2πν)`. Substituting `η = √(4νt)·z` turns both
//! integrals into Gauss–Hermite form. For small ν the factor `f` spans
//! hundreds of orders of magnitude, so the sums are carried in log space and
//! shifted by their maximum exponent before exponentiation.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Node count used by [`burgers_reference`].
pub const DEFAULT_HERMITE_NODES: usize = 200;

/// Gauss–Hermite rule for weight `e^{−z²}`, stored as the non-negative half
/// of the symmetric node set with log-weights.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussHermite {
    /// Non-negative nodes in decreasing order; a zero node appears last when
    /// the rule size is odd.
    pub half_nodes: Vec<f64>,
    pub half_log_weights: Vec<f64>,
    pub size: usize,
}

impl GaussHermite {
    /// Roots of the degree-`n` Hermite polynomial, bracketed by sign changes
    /// on a fine scan of `[0, √(2n+1) + 1]`, refined by bisection and a
    /// final Newton polish. Weights follow from the orthonormal recurrence.
    pub fn new(n: usize) -> Result<Self> {
        if !(2..=400).contains(&n) {
            return Err(Error::InvalidSize(format!(
                "Gauss-Hermite size must be in 2..=400, got {n}"
            )));
        }
        let pim4 = PI.powf(-0.25);
        let nf = n as f64;
        let upper = (2.0 * nf + 1.0).sqrt() + 1.0;
        // Well below the smallest root spacing π/√(2n+1).
        let step = 0.05 * PI / (2.0 * nf + 1.0).sqrt();
        let mut roots = Vec::with_capacity(n / 2 + 1);
        let mut a = if n % 2 == 1 { step / 2.0 } else { 0.0 };
        let mut fa = orthonormal_hermite(n, a, pim4).0;
        while a < upper {
            let b = a + step;
            let fb = orthonormal_hermite(n, b, pim4).0;
            if fa == 0.0 || fa.signum() != fb.signum() {
                roots.push(refine_root(n, a, b, pim4));
            }
            a = b;
            fa = fb;
        }
        let expected = n / 2;
        if roots.len() != expected {
            return Err(Error::InvalidSize(format!(
                "Gauss-Hermite scan found {} positive roots of {n}, expected {expected}",
                roots.len()
            )));
        }
        if n % 2 == 1 {
            roots.insert(0, 0.0);
        }
        roots.reverse();
        let log_w = roots
            .iter()
            .map(|&z| {
                let pp = (2.0 * nf).sqrt() * orthonormal_hermite(n, z, pim4).1;
                std::f64::consts::LN_2 - 2.0 * pp.abs().ln()
            })
            .collect();
        Ok(Self {
            half_nodes: roots,
            half_log_weights: log_w,
            size: n,
        })
    }

    /// All `(node, log_weight)` pairs in ascending node order.
    pub fn full(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(self.size);
        for (&z, &w) in self.half_nodes.iter().zip(&self.half_log_weights) {
            if z != 0.0 {
                out.push((-z, w));
            }
        }
        out.reverse();
        let mut pos: Vec<(f64, f64)> = self
            .half_nodes
            .iter()
            .zip(&self.half_log_weights)
            .map(|(&z, &w)| (z, w))
            .collect();
        pos.reverse();
        out.extend(pos);
        out
    }
}

/// `(h_n(z), h_{n−1}(z))` for the Hermite polynomials orthonormal under
/// `e^{−z²}`.
fn orthonormal_hermite(n: usize, z: f64, pim4: f64) -> (f64, f64) {
    let mut p1 = pim4;
    let mut p2 = 0.0;
    for j in 1..=n {
        let p3 = p2;
        p2 = p1;
        let jf = j as f64;
        p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
    }
    (p1, p2)
}

fn refine_root(n: usize, mut a: f64, mut b: f64, pim4: f64) -> f64 {
    let mut fa = orthonormal_hermite(n, a, pim4).0;
    for _ in 0..60 {
        let mid = 0.5 * (a + b);
        let fm = orthonormal_hermite(n, mid, pim4).0;
        if fm == 0.0 {
            return mid;
        }
        if fm.signum() == fa.signum() {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    let mut z = 0.5 * (a + b);
    for _ in 0..2 {
        let (p1, p2) = orthonormal_hermite(n, z, pim4);
        let pp = (2.0 * n as f64).sqrt() * p2;
        if pp != 0.0 {
            z -= p1 / pp;
        }
    }
    z
}

/// `sin(πx)` that is exactly zero at integer `x`.
pub fn sin_pi(x: f64) -> f64 {
    if x.fract() == 0.0 {
        0.0
    } else {
        (PI * x).sin()
    }
}

/// Cole–Hopf evaluator for a fixed viscosity.
#[derive(Debug, Clone, PartialEq)]
pub struct BurgersReference {
    nu: f64,
    rule: GaussHermite,
}

impl BurgersReference {
    pub fn new(nu: f64, nodes: usize) -> Result<Self> {
        if !(nu.is_finite() && nu > 0.0) {
            return Err(Error::constraint("nu", "viscosity must be positive and finite"));
        }
        Ok(Self {
            nu,
            rule: GaussHermite::new(nodes)?,
        })
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn eval(&self, x: f64, t: f64) -> f64 {
        cole_hopf(&self.rule, self.nu, x, t)
    }
}

fn cole_hopf(rule: &GaussHermite, nu: f64, x: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return -sin_pi(x);
    }
    let c = (4.0 * nu * t).sqrt();
    let k = 1.0 / (2.0 * PI * nu);
    // Each symmetric node pair is summed together so that odd symmetry in x
    // carries over exactly to the quadrature.
    let mut terms: Vec<(f64, f64, f64, f64)> = Vec::with_capacity(rule.half_nodes.len());
    let mut peak = f64::NEG_INFINITY;
    for (&z, &lw) in rule.half_nodes.iter().zip(&rule.half_log_weights) {
        let (ym, yp) = (x - c * z, x + c * z);
        let lm = lw - k * (PI * ym).cos();
        let lp = if z == 0.0 {
            f64::NEG_INFINITY
        } else {
            lw - k * (PI * yp).cos()
        };
        peak = peak.max(lm).max(lp);
        terms.push((ym, lm, yp, lp));
    }
    let (mut num, mut den) = (0.0, 0.0);
    for &(ym, lm, yp, lp) in &terms {
        let (em, ep) = ((lm - peak).exp(), (lp - peak).exp());
        num += (PI * ym).sin() * em + (PI * yp).sin() * ep;
        den += em + ep;
    }
    -num / den
}

fn default_rule() -> &'static GaussHermite {
    static RULE: OnceLock<GaussHermite> = OnceLock::new();
    RULE.get_or_init(|| GaussHermite::new(DEFAULT_HERMITE_NODES).expect("valid default size"))
}

/// Reference solution `u(x, t)` for viscosity `nu` with the default rule.
pub fn burgers_reference(x: f64, t: f64, nu: f64) -> f64 {
    cole_hopf(default_rule(), nu, x, t)
}
