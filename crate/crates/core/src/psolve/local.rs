//! Dense Chebyshev coefficient arrays local to a subdivision cell.
//!
//! Every cell carries each system component re-expanded in the Chebyshev
//! basis of the cell itself (the cell maps to [-1,1]^n). Subdividing is a
//! coefficient-space affine substitution u = m + r t carried out by a
//! Clenshaw recurrence on coefficient vectors; range enclosures then come
//! from coefficient sums. Each representation tracks `err`, a sup-norm
//! bound on the drift from the exact polynomial accumulated through
//! truncation and floating-point transforms (a forward-error model with
//! a generous constant; see the range accessors).

use crate::cheb::TensorPoly;

const EPS: f64 = f64::EPSILON;

/// Forward-error slack charged per 1-D coefficient transform.
fn transform_slack(q: usize, mass: f64) -> f64 {
    8.0 * (q as f64 + 2.0) * EPS * mass
}

#[derive(Debug, Clone)]
pub(crate) struct LocalPoly {
    pub dim: usize,
    pub ext: Vec<usize>,
    pub c: Vec<f64>,
    /// sup bound over the cell of |exact - represented|.
    pub err: f64,
    /// Per-axis degree bound of the exact polynomial (Markov factor for
    /// derivative error bounds).
    pub markov_deg: usize,
}

impl LocalPoly {
    /// Re-expands `p` (given on global [-1,1]^n coordinates) over the cell
    /// with the given bounds, so that the cell maps to [-1,1]^n.
    pub fn from_tensor(p: &TensorPoly, lo: &[f64], hi: &[f64]) -> LocalPoly {
        let dense = p.dense();
        let (ext, c) = dense_parts(&dense);
        let mut lp = LocalPoly {
            dim: p.dim(),
            ext,
            c,
            err: 0.0,
            markov_deg: p.degree() as usize,
        };
        for a in 0..lp.dim {
            let m = 0.5 * (lo[a] + hi[a]);
            let r = 0.5 * (hi[a] - lo[a]);
            if m != 0.0 || r != 1.0 {
                lp.transform_axis(a, m, r);
            }
        }
        lp
    }

    pub fn sum_abs(&self) -> f64 {
        self.c.iter().map(|v| v.abs()).sum()
    }

    /// Enclosure of the polynomial's range over the cell:
    /// c_0 +- (sum of |c_k|, k != 0, plus err and summation slack).
    pub fn range(&self) -> super::interval::Interval {
        let c0 = self.c[0];
        let tail: f64 = self.c[1..].iter().map(|v| v.abs()).sum();
        let slack = (self.c.len() as f64) * EPS * (tail + c0.abs()) + self.err;
        super::interval::Interval::from_mid_rad(c0, tail + slack)
    }

    /// Value at the cell center with an enclosure radius.
    pub fn value_center(&self) -> (f64, f64) {
        let v = self.eval(&vec![0.0; self.dim]);
        let rad = self.err + 16.0 * EPS * self.sum_abs();
        (v, rad)
    }

    /// Clenshaw evaluation at local coordinates.
    pub fn eval(&self, t: &[f64]) -> f64 {
        debug_assert_eq!(t.len(), self.dim);
        if self.dim == 0 {
            return self.c[0];
        }
        let last = self.ext[self.dim - 1];
        let rows = self.c.len() / last;
        let mut buf: Vec<f64> = (0..rows)
            .map(|r| crate::cheb::clenshaw_1d(&self.c[r * last..(r + 1) * last], t[self.dim - 1]))
            .collect();
        let mut len = rows;
        for axis in (0..self.dim - 1).rev() {
            let e = self.ext[axis];
            let rows2 = len / e;
            for r in 0..rows2 {
                buf[r] = crate::cheb::clenshaw_1d(&buf[r * e..r * e + e], t[axis]);
            }
            len = rows2;
        }
        buf[0]
    }

    /// Restriction to the sub-box [m - r, m + r] (local coordinates) along
    /// one axis; r > 1 inflates instead, with the error bound grown by the
    /// Chebyshev extremal factor.
    pub fn restrict_axis(&mut self, axis: usize, m: f64, r: f64) {
        if r > 1.0 || m.abs() + r > 1.0 {
            let rho = m.abs() + r;
            self.err *= growth_factor(rho, self.markov_deg);
        }
        self.transform_axis(axis, m, r);
    }

    fn transform_axis(&mut self, axis: usize, m: f64, r: f64) {
        let e = self.ext[axis];
        if e == 1 {
            return;
        }
        let q = e - 1;
        let stride: usize = self.ext[axis + 1..].iter().product();
        let block = stride * e;
        let outers = self.c.len() / block;
        let mut mass_in = 0.0f64;
        let mut mass_out = 0.0f64;
        let mut buf = vec![0.0f64; e];
        let mut b1 = vec![0.0f64; e];
        let mut b2 = vec![0.0f64; e];
        let mut bn = vec![0.0f64; e];
        for outer in 0..outers {
            for inner in 0..stride {
                let base = outer * block + inner;
                for k in 0..e {
                    buf[k] = self.c[base + k * stride];
                }
                mass_in += buf.iter().map(|v| v.abs()).sum::<f64>();
                clenshaw_compose(&buf, m, r, &mut b1, &mut b2, &mut bn);
                mass_out += bn.iter().map(|v| v.abs()).sum::<f64>();
                for k in 0..e {
                    self.c[base + k * stride] = bn[k];
                }
            }
        }
        self.err += transform_slack(q, mass_in.max(mass_out));
    }

    /// Mass of the coefficients that vary along `axis` (index >= 1 there):
    /// the part of the range enclosure a bisection of that axis can shrink.
    pub fn axis_variation(&self, axis: usize) -> f64 {
        let e = self.ext[axis];
        if e <= 1 {
            return 0.0;
        }
        let stride: usize = self.ext[axis + 1..].iter().product();
        let block = stride * e;
        let outers = self.c.len() / block;
        let mut mass = 0.0;
        for outer in 0..outers {
            for k in 1..e {
                let row = outer * block + k * stride;
                mass += self.c[row..row + stride].iter().map(|v| v.abs()).sum::<f64>();
            }
        }
        mass
    }

    /// Drops negligible trailing coefficient planes per axis, charging the
    /// dropped mass to `err`.
    pub fn truncate(&mut self, tol: f64) {
        for a in 0..self.dim {
            let e = self.ext[a];
            if e <= 1 {
                continue;
            }
            let stride: usize = self.ext[a + 1..].iter().product();
            let block = stride * e;
            let outers = self.c.len() / block;
            let mut plane = vec![0.0f64; e];
            for outer in 0..outers {
                for inner in 0..stride {
                    let base = outer * block + inner;
                    for k in 0..e {
                        plane[k] += self.c[base + k * stride].abs();
                    }
                }
            }
            let mut keep = e;
            let mut dropped = 0.0;
            while keep > 1 && dropped + plane[keep - 1] <= tol {
                dropped += plane[keep - 1];
                keep -= 1;
            }
            if keep < e {
                let mut nc = Vec::with_capacity(self.c.len() / e * keep);
                for outer in 0..outers {
                    for k in 0..keep {
                        let row = outer * block + k * stride;
                        nc.extend_from_slice(&self.c[row..row + stride]);
                    }
                }
                self.c = nc;
                self.ext[a] = keep;
                self.err += dropped;
            }
        }
    }

    /// Derivative along one axis in local coordinates. The error bound is
    /// inflated by the Markov factor deg^2 (the drift polynomial has the
    /// same degree bound).
    pub fn derivative(&self, axis: usize) -> LocalPoly {
        let e = self.ext[axis];
        let stride: usize = self.ext[axis + 1..].iter().product();
        let mut out = LocalPoly {
            dim: self.dim,
            ext: self.ext.clone(),
            c: vec![0.0; self.c.len()],
            err: 0.0,
            markov_deg: self.markov_deg,
        };
        if e > 1 {
            let block = stride * e;
            let outers = self.c.len() / block;
            let mut buf = vec![0.0f64; e];
            for outer in 0..outers {
                for inner in 0..stride {
                    let base = outer * block + inner;
                    for k in 0..e {
                        buf[k] = self.c[base + k * stride];
                    }
                    let d = cheb_derivative(&buf);
                    for (k, &v) in d.iter().enumerate() {
                        out.c[base + k * stride] = v;
                    }
                }
            }
        }
        let md = self.markov_deg as f64;
        out.err = self.err * md * md + 4.0 * (e as f64) * EPS * out.sum_abs();
        out
    }
}

/// sup growth of a degree-`deg` polynomial from [-1,1] to [-rho, rho]:
/// the Chebyshev extremal bound T_deg(rho) = cosh(deg acosh(rho)).
pub(crate) fn growth_factor(rho: f64, deg: usize) -> f64 {
    if rho <= 1.0 {
        return 1.0;
    }
    (deg as f64 * rho.acosh()).cosh()
}

fn cheb_derivative(c: &[f64]) -> Vec<f64> {
    let d = c.len() - 1;
    if d == 0 {
        return vec![0.0];
    }
    let mut out = vec![0.0; d];
    let mut next = 0.0;
    let mut next2 = 0.0;
    for k in (1..=d).rev() {
        let v = next2 + 2.0 * k as f64 * c[k];
        next2 = next;
        next = v;
        out[k - 1] = v;
    }
    out[0] *= 0.5;
    out
}

fn dense_parts(d: &crate::cheb::DenseCheb) -> (Vec<usize>, Vec<f64>) {
    (d.ext_vec(), d.coeffs_vec())
}

/// Clenshaw with the polynomial argument m + r t, acting on coefficient
/// vectors: computes the coefficients of a(m + r t) from those of a(u).
/// Writes the result into `bn`; `b1` and `b2` are scratch.
fn clenshaw_compose(a: &[f64], m: f64, r: f64, b1: &mut [f64], b2: &mut [f64], bn: &mut [f64]) {
    let e = a.len();
    let q = e - 1;
    b1.fill(0.0);
    b2.fill(0.0);
    if q == 0 {
        bn[0] = a[0];
        return;
    }
    for k in (1..=q).rev() {
        // bn = a_k e0 + 2 (m b1 + r (t * b1)) - b2
        for j in 0..e {
            let tshift = shift_term(b1, j);
            bn[j] = 2.0 * (m * b1[j] + r * tshift) - b2[j];
        }
        bn[0] += a[k];
        b2.copy_from_slice(b1);
        b1.copy_from_slice(bn);
    }
    for j in 0..e {
        let tshift = shift_term(b1, j);
        bn[j] = m * b1[j] + r * tshift - b2[j];
    }
    bn[0] += a[0];
}

/// Coefficient j of t * v for a Chebyshev series v.
#[inline]
fn shift_term(v: &[f64], j: usize) -> f64 {
    let e = v.len();
    match j {
        0 => {
            if e > 1 {
                0.5 * v[1]
            } else {
                0.0
            }
        }
        1 => v[0] + if e > 2 { 0.5 * v[2] } else { 0.0 },
        _ => {
            let lo = 0.5 * v[j - 1];
            let hi = if j + 1 < e { 0.5 * v[j + 1] } else { 0.0 };
            lo + hi
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cheb::{multi_indices, MultiIndex};
    use rand::prelude::*;

    fn random_poly(n: usize, d: u32, seed: u64) -> TensorPoly {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
        let coeffs: Vec<(MultiIndex, f64)> = multi_indices(n, d)
            .into_iter()
            .map(|i| (i, rng.gen_range(-1.0..1.0)))
            .collect();
        TensorPoly::from_coeffs(n, d, coeffs).unwrap()
    }

    #[test]
    fn identity_cell_matches_global() {
        let p = random_poly(2, 6, 1);
        let lp = LocalPoly::from_tensor(&p, &[-1.0, -1.0], &[1.0, 1.0]);
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(2);
        for _ in 0..30 {
            let t = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            assert!((lp.eval(&t) - p.eval(&t).unwrap()).abs() < 1e-13);
        }
    }

    #[test]
    fn subcell_evaluation_matches() {
        let p = random_poly(2, 8, 3);
        let (lo, hi) = ([-0.25, 0.1], [0.5, 0.9]);
        let lp = LocalPoly::from_tensor(&p, &lo, &hi);
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(4);
        for _ in 0..30 {
            let t = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let x = [
                0.5 * (lo[0] + hi[0]) + 0.5 * (hi[0] - lo[0]) * t[0],
                0.5 * (lo[1] + hi[1]) + 0.5 * (hi[1] - lo[1]) * t[1],
            ];
            assert!((lp.eval(&t) - p.eval(&x).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn nested_restriction_is_consistent() {
        let p = random_poly(1, 12, 5);
        let mut lp = LocalPoly::from_tensor(&p, &[-1.0], &[1.0]);
        // restrict to [0, 1], then to its upper half: physical [0.5, 1]
        lp.restrict_axis(0, 0.5, 0.5);
        lp.restrict_axis(0, 0.5, 0.5);
        for t in [-1.0, -0.3, 0.0, 0.7, 1.0] {
            let x = 0.75 + 0.25 * t;
            assert!((lp.eval(&[t]) - p.eval(&[x]).unwrap()).abs() < 1e-12 + lp.err);
        }
    }

    #[test]
    fn range_encloses_samples() {
        let p = random_poly(2, 10, 7);
        let mut lp = LocalPoly::from_tensor(&p, &[-1.0, -1.0], &[1.0, 1.0]);
        lp.restrict_axis(0, -0.5, 0.5);
        lp.restrict_axis(1, 0.25, 0.75);
        let range = lp.range();
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(8);
        for _ in 0..200 {
            let t = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let v = lp.eval(&t);
            assert!(range.contains(v), "{v} outside {range:?}");
        }
    }

    #[test]
    fn truncation_tracks_error() {
        let p = random_poly(1, 20, 9);
        let mut lp = LocalPoly::from_tensor(&p, &[-1.0], &[1.0]);
        // restriction to a half interval makes high coefficients decay
        lp.restrict_axis(0, -0.5, 0.5);
        lp.restrict_axis(0, -0.5, 0.5);
        lp.restrict_axis(0, -0.5, 0.5);
        let before = lp.ext[0];
        lp.truncate(1e-11);
        assert!(lp.ext[0] < before, "no truncation happened");
        for t in [-0.9, 0.0, 0.42, 1.0] {
            let x = -0.875 + 0.125 * t;
            let diff = (lp.eval(&[t]) - p.eval(&[x]).unwrap()).abs();
            assert!(diff <= lp.err + 1e-13, "diff {diff} > err {}", lp.err);
        }
    }

    #[test]
    fn derivative_matches_global_partial() {
        let p = random_poly(2, 7, 11);
        let dp = p.partial(0).unwrap();
        let (lo, hi) = ([-0.5, -0.25], [0.0, 0.75]);
        let lp = LocalPoly::from_tensor(&p, &lo, &hi);
        let ld = lp.derivative(0);
        let r0 = 0.5 * (hi[0] - lo[0]);
        for t in [[-0.8, 0.3], [0.0, 0.0], [0.9, -0.9]] {
            let x = [
                0.5 * (lo[0] + hi[0]) + r0 * t[0],
                0.5 * (lo[1] + hi[1]) + 0.5 * (hi[1] - lo[1]) * t[1],
            ];
            // local derivative = physical derivative * r0 (chain rule)
            let want = dp.eval(&x).unwrap() * r0;
            assert!((ld.eval(&t) - want).abs() < 1e-11);
        }
    }

    #[test]
    fn growth_factor_monotone() {
        assert_eq!(growth_factor(1.0, 30), 1.0);
        assert!(growth_factor(1.02, 30) > 1.0);
        assert!(growth_factor(1.02, 30) < growth_factor(1.1, 30));
    }
}
