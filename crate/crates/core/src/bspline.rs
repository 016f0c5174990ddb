//! Uniform B-spline bases on an extended knot vector.
//!
//! A [`KnotVector`] with `G` grid intervals and polynomial degree `k` carries
//! `k` ghost knots on either side of the domain, giving `G + k` basis
//! functions that form a partition of unity on `[domain_min, domain_max]`.
//!
//! Because the knots are uniform, every span sees the same `k + 1` polynomial
//! pieces in the local coordinate `u = (x − t_s)/h`. Those pieces (and their
//! derivatives) are expanded once in the power basis at construction, so the
//! hot [`KnotVector::local_basis`] is a handful of Horner evaluations. The
//! value row is computed by the same operations whether or not derivatives
//! are requested. The triangular Cox–de Boor table is kept for derivative
//! orders beyond [`MAX_TRACKED_DERIV`] and as an independent check.

use crate::error::{Error, Result};

/// Largest supported polynomial degree.
pub const MAX_DEGREE: usize = 7;

/// Highest derivative order tracked by [`LocalBasis`]. Three is enough to
/// differentiate second input derivatives with respect to the input value.
pub const MAX_TRACKED_DERIV: usize = 3;

const WIDTH: usize = MAX_DEGREE + 1;

#[derive(Debug, Clone, PartialEq)]
pub struct KnotVector {
    domain_min: f64,
    domain_max: f64,
    grid_size: usize,
    degree: usize,
    spacing: f64,
    knots: Vec<f64>,
    /// `pieces[d][r][m]`: coefficient of `u^m` in `h^{-d} d^d/du^d` of the
    /// `r`-th active basis function on any span.
    pieces: Box<[[[f64; WIDTH]; WIDTH]; MAX_TRACKED_DERIV + 1]>,
}

/// The `k + 1` basis functions that are active at one point, with their
/// derivatives up to [`MAX_TRACKED_DERIV`].
#[derive(Debug, Clone, Copy)]
pub struct LocalBasis {
    /// Index of the first active basis function.
    pub first: usize,
    /// Number of active functions (`degree + 1`).
    pub len: usize,
    /// `ders[d][r]` is the `d`-th derivative of basis `first + r`.
    pub ders: [[f64; WIDTH]; MAX_TRACKED_DERIV + 1],
}

impl LocalBasis {
    /// `Σ_r coeff(first + r) · B^(deriv)_{first + r}(x)`, accumulated in index order.
    #[inline]
    pub fn combine(&self, deriv: usize, mut coeff: impl FnMut(usize) -> f64) -> f64 {
        let row = &self.ders[deriv];
        let mut acc = 0.0;
        for r in 0..self.len {
            acc += coeff(self.first + r) * row[r];
        }
        acc
    }
}

/// Builds the uniform extended knot vector for `grid_size` intervals on
/// `[domain_min, domain_max]` and basis degree `degree`.
pub fn make_knots(domain_min: f64, domain_max: f64, grid_size: usize, degree: usize) -> Result<KnotVector> {
    KnotVector::new(domain_min, domain_max, grid_size, degree)
}

impl KnotVector {
    pub fn new(domain_min: f64, domain_max: f64, grid_size: usize, degree: usize) -> Result<Self> {
        if !(domain_min.is_finite() && domain_max.is_finite()) || domain_min >= domain_max {
            return Err(Error::InvalidDomain {
                min: domain_min,
                max: domain_max,
            });
        }
        if grid_size < 1 {
            return Err(Error::InvalidSize(format!(
                "grid size must be at least 1, got {grid_size}"
            )));
        }
        if degree > MAX_DEGREE {
            return Err(Error::InvalidSize(format!(
                "spline degree {degree} exceeds the supported maximum {MAX_DEGREE}"
            )));
        }
        let spacing = (domain_max - domain_min) / grid_size as f64;
        let count = grid_size + 2 * degree + 1;
        let knots = (0..count)
            .map(|i| domain_min + (i as f64 - degree as f64) * spacing)
            .collect();
        Ok(Self {
            domain_min,
            domain_max,
            grid_size,
            degree,
            spacing,
            knots,
            pieces: Box::new(uniform_pieces(degree, spacing)),
        })
    }

    pub fn domain_min(&self) -> f64 {
        self.domain_min
    }

    pub fn domain_max(&self) -> f64 {
        self.domain_max
    }

    pub fn grid_size(&self) -> usize {
        self.grid_size
    }

    /// Polynomial degree `k` (the "order" column of the experiment tables).
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Number of basis functions, `G + k`.
    pub fn basis_count(&self) -> usize {
        self.grid_size + self.degree
    }

    /// Knot span index `s` with `t_s <= x < t_{s+1}`, restricted to the
    /// interior intervals; `x == domain_max` maps to the last interval.
    fn span(&self, x: f64) -> usize {
        let k = self.degree;
        let last = k + self.grid_size - 1;
        let guess = ((x - self.domain_min) / self.spacing).floor();
        let mut s = if guess <= 0.0 {
            k
        } else {
            (k + guess as usize).min(last)
        };
        // Rounding in the division can land one interval off.
        while s > k && x < self.knots[s] {
            s -= 1;
        }
        while s < last && x >= self.knots[s + 1] {
            s += 1;
        }
        s
    }

    /// Active basis functions at `x` with derivatives up to `max_deriv`
    /// (at most [`MAX_TRACKED_DERIV`]). Inputs outside the domain are
    /// clamped to the boundary; there the spline is constant, so every
    /// derivative row is zero.
    pub fn local_basis(&self, x: f64, max_deriv: usize) -> LocalBasis {
        let p = self.degree;
        let max_deriv = max_deriv.min(MAX_TRACKED_DERIV);
        let mut out = LocalBasis {
            first: 0,
            len: p + 1,
            ders: [[0.0; WIDTH]; MAX_TRACKED_DERIV + 1],
        };
        if x.is_nan() {
            out.ders[0][..=p].fill(f64::NAN);
            return out;
        }
        let outside = x < self.domain_min || x > self.domain_max;
        let xc = x.clamp(self.domain_min, self.domain_max);
        let span = self.span(xc);
        out.first = span - p;
        let u = (xc - self.knots[span]) / self.spacing;
        let n = if outside { 0 } else { max_deriv.min(p) };
        for d in 0..=n {
            let piece = &self.pieces[d];
            let row = &mut out.ders[d];
            for r in 0..=p {
                let c = &piece[r];
                let mut acc = c[p - d];
                for m in (0..p - d).rev() {
                    acc = acc * u + c[m];
                }
                row[r] = acc;
            }
        }
        out
    }

    /// [`Self::local_basis`] computed from the triangular Cox–de Boor table
    /// (the general non-uniform algorithm); used as an independent check.
    pub fn local_basis_table(&self, x: f64, max_deriv: usize) -> LocalBasis {
        let p = self.degree;
        let max_deriv = max_deriv.min(MAX_TRACKED_DERIV);
        let mut out = LocalBasis {
            first: 0,
            len: p + 1,
            ders: [[0.0; WIDTH]; MAX_TRACKED_DERIV + 1],
        };
        if x.is_nan() {
            out.ders[0][..=p].fill(f64::NAN);
            return out;
        }
        let outside = x < self.domain_min || x > self.domain_max;
        let xc = x.clamp(self.domain_min, self.domain_max);
        let span = self.span(xc);
        out.first = span - p;
        let ndu = self.triangle(xc, span, p);
        for j in 0..=p {
            out.ders[0][j] = ndu[j][p];
        }

        let n = max_deriv.min(p);
        if outside || n == 0 {
            return out;
        }
        let pi = p as isize;
        let mut a = [[0.0f64; WIDTH]; 2];
        for r in 0..=pi {
            let (mut s1, mut s2) = (0usize, 1usize);
            a[0][0] = 1.0;
            for k in 1..=n as isize {
                let mut d = 0.0;
                let rk = r - k;
                let pk = (pi - k) as usize;
                if r >= k {
                    a[s2][0] = a[s1][0] / ndu[pk + 1][rk as usize];
                    d = a[s2][0] * ndu[rk as usize][pk];
                }
                let j1 = if rk >= -1 { 1 } else { -rk };
                let j2 = if r - 1 <= pk as isize { k - 1 } else { pi - r };
                for j in j1..=j2 {
                    let ju = j as usize;
                    let idx = (rk + j) as usize;
                    a[s2][ju] = (a[s1][ju] - a[s1][ju - 1]) / ndu[pk + 1][idx];
                    d += a[s2][ju] * ndu[idx][pk];
                }
                if r <= pk as isize {
                    let ku = k as usize;
                    a[s2][ku] = -a[s1][ku - 1] / ndu[pk + 1][r as usize];
                    d += a[s2][ku] * ndu[r as usize][pk];
                }
                out.ders[k as usize][r as usize] = d;
                std::mem::swap(&mut s1, &mut s2);
            }
        }
        let mut factor = p as f64;
        for k in 1..=n {
            for j in 0..=p {
                out.ders[k][j] *= factor;
            }
            factor *= (p - k) as f64;
        }
        out
    }

    /// All `G + k` basis values at `x` (zero outside the local support).
    pub fn basis_values(&self, x: f64) -> Vec<f64> {
        self.dense(&self.local_basis(x, 0), 0)
    }

    /// The `deriv_order`-th derivative of every basis function at `x`.
    pub fn basis_derivatives(&self, x: f64, deriv_order: usize) -> Result<Vec<f64>> {
        if deriv_order > self.degree {
            return Err(Error::OrderTooHigh {
                order: deriv_order,
                degree: self.degree,
            });
        }
        if deriv_order > MAX_TRACKED_DERIV {
            // Piecewise polynomial of degree k: evaluate via the full table.
            return Ok(self.high_order_derivatives(x, deriv_order));
        }
        Ok(self.dense(&self.local_basis(x, deriv_order), deriv_order))
    }

    fn dense(&self, local: &LocalBasis, deriv: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.basis_count()];
        out[local.first..local.first + local.len].copy_from_slice(&local.ders[deriv][..local.len]);
        out
    }

    /// Derivatives beyond [`MAX_TRACKED_DERIV`] on uniform knots:
    /// `B^(m)_{i,p} = h^(-m) Σ_j (-1)^j C(m,j) B_{i+j,p-m}`.
    fn high_order_derivatives(&self, x: f64, order: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.basis_count()];
        if !(self.domain_min..=self.domain_max).contains(&x) {
            return out;
        }
        let p = self.degree;
        let q = p - order;
        let span = self.span(x);
        let lower = self.triangle(x, span, q);
        // lower[l][q] holds N_{span-q+l, q}.
        let lower_at = |idx: usize| -> f64 {
            if idx + q < span || idx > span {
                0.0
            } else {
                lower[idx + q - span][q]
            }
        };
        let scale = self.spacing.powi(-(order as i32));
        let mut binom = vec![1.0f64; order + 1];
        for j in 1..=order {
            binom[j] = binom[j - 1] * (order + 1 - j) as f64 / j as f64;
        }
        for i in (span - p)..=span {
            let mut acc = 0.0;
            for (j, c) in binom.iter().enumerate() {
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                acc += sign * c * lower_at(i + j);
            }
            out[i] = scale * acc;
        }
        out
    }

    fn triangle(&self, x: f64, span: usize, p: usize) -> [[f64; WIDTH]; WIDTH] {
        let u = &self.knots;
        let mut ndu = [[0.0f64; WIDTH]; WIDTH];
        let mut left = [0.0f64; WIDTH];
        let mut right = [0.0f64; WIDTH];
        ndu[0][0] = 1.0;
        for j in 1..=p {
            left[j] = x - u[span + 1 - j];
            right[j] = u[span + j] - x;
            let mut saved = 0.0;
            for r in 0..j {
                ndu[j][r] = right[r + 1] + left[j - r];
                let temp = ndu[r][j - 1] / ndu[j][r];
                ndu[r][j] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            ndu[j][j] = saved;
        }
        ndu
    }
}

/// Power-basis coefficients of the `p + 1` basis functions active on a span
/// of a uniform knot vector, in `u ∈ [0, 1]`, with their scaled derivatives.
fn uniform_pieces(p: usize, spacing: f64) -> [[[f64; WIDTH]; WIDTH]; MAX_TRACKED_DERIV + 1] {
    // Cox–de Boor in local units: the knots of the span sit at integers,
    // with t_s = 0. At degree q the active functions are N_{s-q+r, q}.
    let mut cur = [[0.0f64; WIDTH]; WIDTH];
    cur[0][0] = 1.0;
    for q in 1..=p {
        let mut next = [[0.0f64; WIDTH]; WIDTH];
        let qf = q as f64;
        for r in 0..=q {
            let left_knot = r as f64 - qf;
            let right_knot = r as f64 + 1.0;
            // (u − t_i)/q · N_{i, q−1}
            if r >= 1 {
                let prev = cur[r - 1];
                for m in 0..q {
                    next[r][m + 1] += prev[m] / qf;
                    next[r][m] -= left_knot * prev[m] / qf;
                }
            }
            // (t_{i+q+1} − u)/q · N_{i+1, q−1}
            if r < q {
                let prev = cur[r];
                for m in 0..q {
                    next[r][m] += right_knot * prev[m] / qf;
                    next[r][m + 1] -= prev[m] / qf;
                }
            }
        }
        cur = next;
    }
    let mut out = [[[0.0f64; WIDTH]; WIDTH]; MAX_TRACKED_DERIV + 1];
    out[0] = cur;
    for d in 1..=MAX_TRACKED_DERIV.min(p) {
        for r in 0..=p {
            for m in 0..=p - d {
                out[d][r][m] = out[d - 1][r][m + 1] * (m + 1) as f64 / spacing;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn basis_count_matches_grid_plus_degree() {
        assert_eq!(make_knots(-1.0, 1.0, 20, 4).unwrap().basis_count(), 24);
        assert_eq!(make_knots(-1.0, 1.0, 1, 0).unwrap().basis_count(), 1);
        let kv = make_knots(0.0, 1.0, 5, 3).unwrap();
        assert_eq!(kv.basis_count(), 8);
        assert_abs_diff_eq!(kv.spacing(), 0.2, epsilon = 1e-15);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(matches!(
            make_knots(1.0, 1.0, 4, 2),
            Err(Error::InvalidDomain { .. })
        ));
        assert!(matches!(
            make_knots(2.0, 1.0, 4, 2),
            Err(Error::InvalidDomain { .. })
        ));
        assert!(matches!(make_knots(0.0, 1.0, 0, 2), Err(Error::InvalidSize(_))));
        assert!(matches!(
            make_knots(0.0, 1.0, 3, MAX_DEGREE + 1),
            Err(Error::InvalidSize(_))
        ));
    }

    #[test]
    fn knots_are_uniform() {
        let kv = make_knots(-1.0, 1.0, 20, 4).unwrap();
        let h = kv.spacing();
        for w in kv.knots().windows(2) {
            assert!((w[1] - w[0] - h).abs() < 1e-12 * h);
        }
        assert_eq!(kv.knots().len(), 20 + 2 * 4 + 1);
    }

    #[test]
    fn degree_zero_is_indicator() {
        let kv = make_knots(-1.0, 1.0, 1, 0).unwrap();
        assert_eq!(kv.basis_values(0.0), vec![1.0]);
        assert_eq!(kv.basis_values(1.0), vec![1.0]);
    }

    #[test]
    fn linear_hats() {
        let kv = make_knots(0.0, 1.0, 2, 1).unwrap();
        let b = kv.basis_values(0.25);
        assert_abs_diff_eq!(b[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(b[1], 0.5, epsilon = 1e-15);
        assert_eq!(b[2], 0.0);
        let d = kv.basis_derivatives(0.25, 1).unwrap();
        let h = kv.spacing();
        assert_abs_diff_eq!(d[0], -1.0 / h, epsilon = 1e-12);
        assert_abs_diff_eq!(d[1], 1.0 / h, epsilon = 1e-12);
        assert_eq!(d[2], 0.0);
    }

    #[test]
    fn derivative_order_above_degree_is_rejected() {
        let kv = make_knots(0.0, 1.0, 4, 2).unwrap();
        assert!(matches!(
            kv.basis_derivatives(0.3, 3),
            Err(Error::OrderTooHigh { order: 3, degree: 2 })
        ));
        assert!(kv.basis_derivatives(0.3, 2).is_ok());
    }

    #[test]
    fn clamps_outside_domain() {
        let kv = make_knots(-1.0, 1.0, 8, 3).unwrap();
        assert_eq!(kv.basis_values(3.0), kv.basis_values(1.0));
        assert_eq!(kv.basis_values(-7.0), kv.basis_values(-1.0));
        assert!(kv.basis_derivatives(3.0, 1).unwrap().iter().all(|&d| d == 0.0));
    }

    #[test]
    fn right_endpoint_uses_last_interval() {
        let kv = make_knots(-1.0, 1.0, 8, 3).unwrap();
        let local = kv.local_basis(1.0, 0);
        assert_eq!(local.first + local.len, kv.basis_count());
        let s: f64 = kv.basis_values(1.0).iter().sum();
        assert_abs_diff_eq!(s, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn power_basis_pieces_match_the_triangle() {
        for (g, k) in [(20, 4), (5, 0), (7, 1), (3, 2), (10, 3), (6, 5), (4, 7)] {
            let kv = make_knots(-1.0, 1.0, g, k).unwrap();
            for i in 0..=200 {
                let x = -1.1 + 2.2 * i as f64 / 200.0;
                let fast = kv.local_basis(x, 3);
                let slow = kv.local_basis_table(x, 3);
                assert_eq!(fast.first, slow.first);
                for d in 0..=MAX_TRACKED_DERIV {
                    let scale = kv.spacing().powi(-(d as i32));
                    for r in 0..=k {
                        let (a, b) = (fast.ders[d][r], slow.ders[d][r]);
                        assert!(
                            (a - b).abs() < 1e-12 * scale,
                            "G={g} k={k} x={x} d={d} r={r}: {a} vs {b}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn high_order_derivative_matches_tracked_path() {
        // Degree 5 lets order 3 go through both code paths.
        let kv = make_knots(-1.0, 1.0, 6, 5).unwrap();
        for &x in &[-0.93, -0.2, 0.0, 0.41, 0.99] {
            let tracked = kv.dense(&kv.local_basis(x, 3), 3);
            let lowered = kv.high_order_derivatives(x, 3);
            for (a, b) in tracked.iter().zip(&lowered) {
                assert!((a - b).abs() < 1e-8 * (1.0 + a.abs()), "{a} vs {b}");
            }
        }
        let fourth = kv.basis_derivatives(0.3, 4).unwrap();
        let sum: f64 = fourth.iter().sum();
        assert!(sum.abs() < 1e-6);
    }

    #[test]
    fn value_bits_do_not_depend_on_derivative_request() {
        let kv = make_knots(-1.0, 1.0, 20, 4).unwrap();
        for i in 0..50 {
            let x = -1.0 + 2.0 * i as f64 / 49.0;
            let a = kv.local_basis(x, 0);
            let b = kv.local_basis(x, 3);
            assert_eq!(a.first, b.first);
            assert_eq!(a.ders[0], b.ders[0]);
        }
    }
}
