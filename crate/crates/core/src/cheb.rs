//! Tensorized Chebyshev polynomial arithmetic.
//!
//! Polynomials are stored as sparse coefficient maps over the basis
//! `T_{v1}(x1) ... T_{vn}(xn)` truncated at a total degree bound, with
//! evaluation by a per-axis Clenshaw recurrence, differentiation by the
//! classical descending coefficient recurrence, L2 norms with respect to
//! the tensorized Chebyshev (arcsine) measure, and exact conversion to
//! the monomial basis over arbitrary-precision rationals.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Total mass of the univariate Chebyshev measure on [-1, 1].
pub const MU_MASS_1D: f64 = std::f64::consts::PI;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ChebError {
    #[error("dimension mismatch: polynomial has dim {expected}, point has dim {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("axis {axis} out of range for dimension {dim}")]
    AxisOutOfRange { axis: usize, dim: usize },
    #[error("multi-index total {total} exceeds degree bound {bound}")]
    DegreeExceeded { total: u32, bound: u32 },
    #[error("parse error: {0}")]
    Parse(String),
}

/// Exponent vector of one tensor basis element, ordered graded-lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn new(entries: Vec<u32>) -> Self {
        MultiIndex(entries)
    }

    pub fn zeros(n: usize) -> Self {
        MultiIndex(vec![0; n])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.total()
            .cmp(&other.total())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// All multi-indices of dimension `n` with total degree at most `d`, in
/// graded-lex order. The count is `binom(n + d, n)`.
pub fn multi_indices(n: usize, d: u32) -> Vec<MultiIndex> {
    let mut out = Vec::with_capacity(basis_size(n, d));
    let mut cur = vec![0u32; n];
    for total in 0..=d {
        emit_fixed_total(&mut cur, 0, total, &mut out);
    }
    out
}

fn emit_fixed_total(cur: &mut Vec<u32>, axis: usize, remaining: u32, out: &mut Vec<MultiIndex>) {
    if axis + 1 == cur.len() {
        cur[axis] = remaining;
        out.push(MultiIndex(cur.clone()));
        return;
    }
    for v in 0..=remaining {
        cur[axis] = v;
        emit_fixed_total(cur, axis + 1, remaining - v, out);
    }
    cur[axis] = 0;
}

/// `binom(n + d, n)`, the dimension of the space of n-variate polynomials
/// of total degree at most d.
pub fn basis_size(n: usize, d: u32) -> usize {
    let mut acc: u128 = 1;
    for i in 1..=n as u128 {
        acc = acc * (d as u128 + i) / i;
    }
    acc as usize
}

/// An n-variate polynomial in the tensorized Chebyshev basis, truncated at
/// total degree `degree`. Coefficients are kept sparsely, keyed by
/// multi-index in graded-lex order so that serialization is canonical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorPoly {
    dim: usize,
    degree: u32,
    coeffs: BTreeMap<MultiIndex, f64>,
}

impl TensorPoly {
    pub fn zero(dim: usize, degree: u32) -> Self {
        TensorPoly {
            dim,
            degree,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn constant(dim: usize, value: f64) -> Self {
        let mut p = TensorPoly::zero(dim, 0);
        if value != 0.0 {
            p.coeffs.insert(MultiIndex::zeros(dim), value);
        }
        p
    }

    pub fn from_coeffs(
        dim: usize,
        degree: u32,
        coeffs: impl IntoIterator<Item = (MultiIndex, f64)>,
    ) -> Result<Self, ChebError> {
        let mut map = BTreeMap::new();
        for (idx, c) in coeffs {
            if idx.dim() != dim {
                return Err(ChebError::DimensionMismatch {
                    expected: dim,
                    got: idx.dim(),
                });
            }
            if idx.total() > degree {
                return Err(ChebError::DegreeExceeded {
                    total: idx.total(),
                    bound: degree,
                });
            }
            if c != 0.0 {
                map.insert(idx, c);
            }
        }
        Ok(TensorPoly {
            dim,
            degree,
            coeffs: map,
        })
    }

    /// Converts a polynomial given by monomial-basis terms `(exponents, coeff)`
    /// into the tensor Chebyshev basis, using x^k = 2^{1-k} sum' T_j.
    pub fn from_monomial(
        dim: usize,
        degree: u32,
        terms: impl IntoIterator<Item = (Vec<u32>, f64)>,
    ) -> Result<Self, ChebError> {
        // univariate x^k in the T basis, built by the recurrence
        // x * T_j = (T_{j+1} + T_{|j-1|}) / 2
        let mut pow_tables: Vec<Vec<f64>> = vec![vec![1.0]];
        for k in 1..=degree as usize {
            let prev = &pow_tables[k - 1];
            let mut next = vec![0.0; k + 1];
            for (j, &a) in prev.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                next[j + 1] += 0.5 * a;
                if j == 0 {
                    next[1] += 0.5 * a;
                } else {
                    next[j - 1] += 0.5 * a;
                }
            }
            pow_tables.push(next);
        }
        let mut map: BTreeMap<MultiIndex, f64> = BTreeMap::new();
        for (exps, c) in terms {
            if exps.len() != dim {
                return Err(ChebError::DimensionMismatch {
                    expected: dim,
                    got: exps.len(),
                });
            }
            let total: u32 = exps.iter().sum();
            if total > degree {
                return Err(ChebError::DegreeExceeded {
                    total,
                    bound: degree,
                });
            }
            let mut partial: Vec<(Vec<u32>, f64)> = vec![(Vec::new(), c)];
            for &e in &exps {
                let table = &pow_tables[e as usize];
                let mut next = Vec::with_capacity(partial.len() * (e as usize + 1));
                for (idx, w) in &partial {
                    for (j, &t) in table.iter().enumerate() {
                        if t == 0.0 {
                            continue;
                        }
                        let mut idx2 = idx.clone();
                        idx2.push(j as u32);
                        next.push((idx2, w * t));
                    }
                }
                partial = next;
            }
            for (idx, w) in partial {
                *map.entry(MultiIndex(idx)).or_insert(0.0) += w;
            }
        }
        map.retain(|_, v| *v != 0.0);
        Ok(TensorPoly {
            dim,
            degree,
            coeffs: map,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The declared total-degree bound d.
    pub fn degree(&self) -> u32 {
        self.degree
    }

    /// Largest total degree among stored (nonzero) coefficients.
    pub fn actual_degree(&self) -> u32 {
        self.coeffs.keys().map(|k| k.total()).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff(&self, idx: &MultiIndex) -> f64 {
        self.coeffs.get(idx).copied().unwrap_or(0.0)
    }

    pub fn set_coeff(&mut self, idx: MultiIndex, value: f64) -> Result<(), ChebError> {
        if idx.dim() != self.dim {
            return Err(ChebError::DimensionMismatch {
                expected: self.dim,
                got: idx.dim(),
            });
        }
        if idx.total() > self.degree {
            return Err(ChebError::DegreeExceeded {
                total: idx.total(),
                bound: self.degree,
            });
        }
        if value == 0.0 {
            self.coeffs.remove(&idx);
        } else {
            self.coeffs.insert(idx, value);
        }
        Ok(())
    }

    pub fn coeffs(&self) -> impl Iterator<Item = (&MultiIndex, f64)> {
        self.coeffs.iter().map(|(k, &v)| (k, v))
    }

    pub fn num_coeffs(&self) -> usize {
        self.coeffs.len()
    }

    /// Evaluates at a point via nested per-axis Clenshaw recurrences.
    /// Points outside [-1,1]^n are permitted (extrapolation).
    pub fn eval(&self, x: &[f64]) -> Result<f64, ChebError> {
        if x.len() != self.dim {
            return Err(ChebError::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(self.dense().eval(x))
    }

    /// Dense per-axis coefficient array view, for evaluation-heavy loops.
    pub fn dense(&self) -> DenseCheb {
        let ext: Vec<usize> = if self.dim == 0 {
            Vec::new()
        } else {
            let mut e = vec![1usize; self.dim];
            for idx in self.coeffs.keys() {
                for (a, &v) in idx.0.iter().enumerate() {
                    e[a] = e[a].max(v as usize + 1);
                }
            }
            e
        };
        let total: usize = ext.iter().product();
        let mut c = vec![0.0; total.max(1)];
        for (idx, &v) in &self.coeffs {
            let mut flat = 0usize;
            for (a, &e) in idx.0.iter().enumerate() {
                flat = flat * ext[a] + e as usize;
            }
            c[flat] = v;
        }
        DenseCheb {
            dim: self.dim,
            ext,
            c,
        }
    }

    /// Partial derivative along `axis`, by the descending Chebyshev
    /// coefficient recurrence applied slice by slice.
    pub fn partial(&self, axis: usize) -> Result<TensorPoly, ChebError> {
        if axis >= self.dim {
            return Err(ChebError::AxisOutOfRange {
                axis,
                dim: self.dim,
            });
        }
        // group coefficients into 1-D slices along `axis`
        let mut slices: BTreeMap<MultiIndex, Vec<f64>> = BTreeMap::new();
        let da = self.degree as usize;
        for (idx, &v) in &self.coeffs {
            let mut rest = idx.clone();
            let k = rest.0[axis] as usize;
            rest.0[axis] = 0;
            slices.entry(rest).or_insert_with(|| vec![0.0; da + 1])[k] = v;
        }
        let mut map: BTreeMap<MultiIndex, f64> = BTreeMap::new();
        for (rest, c) in slices {
            let dc = cheb_derivative_1d(&c);
            for (k, &v) in dc.iter().enumerate() {
                if v == 0.0 {
                    continue;
                }
                let mut idx = rest.clone();
                idx.0[axis] = k as u32;
                map.insert(idx, v);
            }
        }
        Ok(TensorPoly {
            dim: self.dim,
            degree: self.degree.saturating_sub(1),
            coeffs: map,
        })
    }

    /// L2(mu) norm from coefficients via orthogonality:
    /// ||T_0||^2 = pi and ||T_k||^2 = pi/2 per axis, tensorized.
    pub fn l2_norm_mu(&self) -> f64 {
        let mut acc = 0.0;
        for (idx, &c) in &self.coeffs {
            let mut w = 1.0;
            for &v in &idx.0 {
                w *= if v == 0 { MU_MASS_1D } else { MU_MASS_1D / 2.0 };
            }
            acc += c * c * w;
        }
        acc.sqrt()
    }

    /// Lower bound for the sup norm: max |p| over the res^n tensor
    /// Chebyshev-Lobatto grid (endpoints included, so grids nest along
    /// res -> 2 res - 1 and the bound is monotone along that chain).
    pub fn sup_norm_grid(&self, res: usize) -> f64 {
        assert!(res >= 2, "sup_norm_grid needs res >= 2");
        if self.is_zero() {
            return 0.0;
        }
        let nodes: Vec<f64> = (0..res)
            .map(|j| (j as f64 * std::f64::consts::PI / (res - 1) as f64).cos())
            .collect();
        let dense = self.dense();
        let mut scratch = dense.make_scratch();
        let mut x = vec![0.0; self.dim];
        let mut best = 0.0f64;
        let total = res.pow(self.dim as u32);
        for flat in 0..total {
            let mut rem = flat;
            for a in (0..self.dim).rev() {
                x[a] = nodes[rem % res];
                rem /= res;
            }
            let v = dense.eval_with_scratch(&x, &mut scratch).abs();
            if v > best {
                best = v;
            }
        }
        best
    }

    /// Exact conversion to the monomial basis: every coefficient is taken
    /// as the exact rational value of its double, and the Chebyshev-to-
    /// monomial expansion is carried out over BigRational.
    pub fn to_monomial_exact(&self) -> MonomialPolyExact {
        let d = self.actual_degree() as usize;
        let tables = chebyshev_monomial_tables(d);
        let mut map: BTreeMap<MultiIndex, BigRational> = BTreeMap::new();
        for (idx, &c) in &self.coeffs {
            let cr = BigRational::from_float(c).expect("finite coefficient");
            let mut partial: Vec<(Vec<u32>, BigRational)> = vec![(Vec::new(), cr)];
            for &v in &idx.0 {
                let table = &tables[v as usize];
                let mut next = Vec::with_capacity(partial.len() * table.len());
                for (pref, w) in &partial {
                    for (j, t) in table.iter().enumerate() {
                        if t.is_zero() {
                            continue;
                        }
                        let mut pref2 = pref.clone();
                        pref2.push(j as u32);
                        next.push((pref2, w * t));
                    }
                }
                partial = next;
            }
            for (exps, w) in partial {
                let e = map.entry(MultiIndex(exps)).or_insert_with(BigRational::zero);
                *e += w;
            }
        }
        map.retain(|_, v| !v.is_zero());
        MonomialPolyExact {
            dim: self.dim,
            degree: self.degree,
            coeffs: map,
        }
    }

    /// Clenshaw evaluation carried out exactly over rationals, with the
    /// float coefficients rationalized bit-exactly.
    pub fn eval_exact(&self, x: &[BigRational]) -> Result<BigRational, ChebError> {
        if x.len() != self.dim {
            return Err(ChebError::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        // dense rational tensor, then contract axes by rational Clenshaw
        let d = self.actual_degree() as usize;
        let ext = vec![d + 1; self.dim.max(1)];
        let total: usize = ext.iter().product();
        let mut c = vec![BigRational::zero(); total];
        for (idx, &v) in &self.coeffs {
            let mut flat = 0usize;
            for (a, &e) in idx.0.iter().enumerate() {
                flat = flat * ext[a] + e as usize;
            }
            c[flat] = BigRational::from_float(v).expect("finite coefficient");
        }
        if self.dim == 0 {
            return Ok(c.into_iter().next().unwrap_or_else(BigRational::zero));
        }
        let mut cur = c;
        for axis in (0..self.dim).rev() {
            let rows = cur.len() / ext[axis];
            let mut next = Vec::with_capacity(rows);
            for r in 0..rows {
                let row = &cur[r * ext[axis]..(r + 1) * ext[axis]];
                next.push(clenshaw_exact(row, &x[axis]));
            }
            cur = next;
        }
        Ok(cur.into_iter().next().unwrap())
    }

    pub fn scale(&self, s: f64) -> TensorPoly {
        let mut out = self.clone();
        if s == 0.0 {
            out.coeffs.clear();
            return out;
        }
        for v in out.coeffs.values_mut() {
            *v *= s;
        }
        out
    }

    pub fn add(&self, other: &TensorPoly) -> Result<TensorPoly, ChebError> {
        if other.dim != self.dim {
            return Err(ChebError::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        let mut out = self.clone();
        out.degree = out.degree.max(other.degree);
        for (idx, &v) in &other.coeffs {
            let e = out.coeffs.entry(idx.clone()).or_insert(0.0);
            *e += v;
            if *e == 0.0 {
                out.coeffs.remove(idx);
            }
        }
        Ok(out)
    }

    /// Canonical text form: header `n d`, then one line per nonzero
    /// coefficient `v1 ... vn c` in graded-lex order, 17 significant digits.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{} {}", self.dim, self.degree);
        for (idx, &c) in &self.coeffs {
            for &v in &idx.0 {
                let _ = write!(s, "{} ", v);
            }
            let _ = writeln!(s, "{:.16e}", c);
        }
        s
    }

    pub fn from_text(text: &str) -> Result<TensorPoly, ChebError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| ChebError::Parse("empty input".into()))?;
        let mut it = header.split_whitespace();
        let dim: usize = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| ChebError::Parse("bad header".into()))?;
        let degree: u32 = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| ChebError::Parse("bad header".into()))?;
        let mut coeffs = Vec::new();
        for line in lines {
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != dim + 1 {
                return Err(ChebError::Parse(format!("bad line: {line}")));
            }
            let mut idx = Vec::with_capacity(dim);
            for t in &toks[..dim] {
                idx.push(
                    t.parse()
                        .map_err(|_| ChebError::Parse(format!("bad index: {t}")))?,
                );
            }
            let c: f64 = toks[dim]
                .parse()
                .map_err(|_| ChebError::Parse(format!("bad coefficient: {}", toks[dim])))?;
            coeffs.push((MultiIndex(idx), c));
        }
        TensorPoly::from_coeffs(dim, degree, coeffs)
    }
}

/// Chebyshev coefficients of the derivative of a 1-D series:
/// c'_{k-1} = c'_{k+1} + 2 k c_k descending, then c'_0 halved.
fn cheb_derivative_1d(c: &[f64]) -> Vec<f64> {
    let d = c.len() - 1;
    if d == 0 {
        return vec![0.0];
    }
    let mut out = vec![0.0; d];
    let mut next = 0.0; // c'_{k+1}
    let mut next2 = 0.0; // c'_{k+2}
    for k in (1..=d).rev() {
        let v = if k + 1 <= d { next2 } else { 0.0 } + 2.0 * k as f64 * c[k];
        next2 = next;
        next = v;
        out[k - 1] = v;
    }
    out[0] *= 0.5;
    out
}

fn clenshaw_exact(c: &[BigRational], x: &BigRational) -> BigRational {
    let d = c.len() - 1;
    if d == 0 {
        return c[0].clone();
    }
    let two_x = x * BigRational::from_integer(BigInt::from(2));
    let mut b1 = BigRational::zero();
    let mut b2 = BigRational::zero();
    for k in (1..=d).rev() {
        let b = &c[k] + &two_x * &b1 - &b2;
        b2 = std::mem::replace(&mut b1, b);
    }
    &c[0] + x * &b1 - &b2
}

/// Monomial-basis coefficients of T_0 .. T_d as exact rationals (they are
/// integers; rationals keep downstream arithmetic uniform).
fn chebyshev_monomial_tables(d: usize) -> Vec<Vec<BigRational>> {
    let mut tables: Vec<Vec<BigRational>> = Vec::with_capacity(d + 1);
    tables.push(vec![BigRational::one()]);
    if d >= 1 {
        tables.push(vec![BigRational::zero(), BigRational::one()]);
    }
    for k in 2..=d {
        let mut next = vec![BigRational::zero(); k + 1];
        let two = BigRational::from_integer(BigInt::from(2));
        for (j, v) in tables[k - 1].iter().enumerate() {
            if !v.is_zero() {
                next[j + 1] += &two * v;
            }
        }
        for (j, v) in tables[k - 2].iter().enumerate() {
            if !v.is_zero() {
                next[j] -= v;
            }
        }
        tables.push(next);
    }
    tables
}

/// An n-variate polynomial over the monomial basis with exact rational
/// coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct MonomialPolyExact {
    dim: usize,
    degree: u32,
    coeffs: BTreeMap<MultiIndex, BigRational>,
}

impl MonomialPolyExact {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn coeff(&self, idx: &MultiIndex) -> BigRational {
        self.coeffs
            .get(idx)
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }

    pub fn coeffs(&self) -> impl Iterator<Item = (&MultiIndex, &BigRational)> {
        self.coeffs.iter()
    }

    pub fn num_coeffs(&self) -> usize {
        self.coeffs.len()
    }

    pub fn eval_exact(&self, x: &[BigRational]) -> Result<BigRational, ChebError> {
        if x.len() != self.dim {
            return Err(ChebError::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        let mut acc = BigRational::zero();
        for (idx, c) in &self.coeffs {
            let mut term = c.clone();
            for (a, &e) in idx.0.iter().enumerate() {
                for _ in 0..e {
                    term *= &x[a];
                }
            }
            acc += term;
        }
        Ok(acc)
    }

    /// Approximate float evaluation (for diagnostics).
    pub fn eval_f64(&self, x: &[f64]) -> Result<f64, ChebError> {
        if x.len() != self.dim {
            return Err(ChebError::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        let mut acc = 0.0;
        for (idx, c) in &self.coeffs {
            let mut term = rational_to_f64(c);
            for (a, &e) in idx.0.iter().enumerate() {
                term *= x[a].powi(e as i32);
            }
            acc += term;
        }
        Ok(acc)
    }
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    let n = r.numer();
    let d = r.denom();
    // scale down big integers in tandem to stay in f64 range
    let bits = n.bits().max(d.bits());
    if bits <= 52 {
        let nf: f64 = n.to_string().parse().unwrap_or(f64::NAN);
        let df: f64 = d.to_string().parse().unwrap_or(f64::NAN);
        nf / df
    } else {
        let shift = bits - 52;
        let n2 = n >> shift;
        let d2 = d >> shift;
        let nf: f64 = n2.to_string().parse().unwrap_or(f64::NAN);
        let df: f64 = d2.to_string().parse().unwrap_or(f64::NAN);
        if df == 0.0 {
            if nf == 0.0 {
                0.0
            } else if n.is_negative() {
                f64::NEG_INFINITY
            } else {
                f64::INFINITY
            }
        } else {
            nf / df
        }
    }
}

/// Tensor-product Gauss-Chebyshev quadrature of `g` against the tensorized
/// Chebyshev measure; exact for polynomial integrands of per-axis degree
/// <= 2 * nodes_per_axis - 1.
pub fn quad_mu(dim: usize, mut g: impl FnMut(&[f64]) -> f64, nodes_per_axis: usize) -> f64 {
    assert!(nodes_per_axis >= 1, "need at least one node per axis");
    let m = nodes_per_axis;
    let nodes: Vec<f64> = (0..m)
        .map(|j| ((2 * j + 1) as f64 * std::f64::consts::PI / (2 * m) as f64).cos())
        .collect();
    let w = (MU_MASS_1D / m as f64).powi(dim as i32);
    let total = m.pow(dim as u32);
    let mut x = vec![0.0; dim];
    let mut acc = 0.0;
    for flat in 0..total {
        let mut rem = flat;
        for a in (0..dim).rev() {
            x[a] = nodes[rem % m];
            rem /= m;
        }
        acc += g(&x);
    }
    acc * w
}

/// Values T_0(x) .. T_d(x) by the forward recurrence.
pub fn chebyshev_t_values(x: f64, d: usize) -> Vec<f64> {
    let mut t = Vec::with_capacity(d + 1);
    t.push(1.0);
    if d >= 1 {
        t.push(x);
    }
    for k in 2..=d {
        t.push(2.0 * x * t[k - 1] - t[k - 2]);
    }
    t
}

/// Dense per-axis coefficient tensor for fast repeated evaluation.
/// Layout is row-major with axis 0 slowest.
#[derive(Debug, Clone)]
pub struct DenseCheb {
    dim: usize,
    ext: Vec<usize>,
    c: Vec<f64>,
}

impl DenseCheb {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ext_vec(&self) -> Vec<usize> {
        self.ext.clone()
    }

    pub fn coeffs_vec(&self) -> Vec<f64> {
        self.c.clone()
    }

    pub fn make_scratch(&self) -> Vec<f64> {
        let rows = if self.dim <= 1 {
            1
        } else {
            self.c.len() / self.ext[self.dim - 1]
        };
        vec![0.0; rows.max(1)]
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut scratch = self.make_scratch();
        self.eval_with_scratch(x, &mut scratch)
    }

    /// Contracts the last axis by Clenshaw, then works inward reusing the
    /// scratch buffer.
    pub fn eval_with_scratch(&self, x: &[f64], scratch: &mut [f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        if self.dim == 0 {
            return self.c.first().copied().unwrap_or(0.0);
        }
        let last = self.ext[self.dim - 1];
        let rows = self.c.len() / last;
        for r in 0..rows {
            scratch[r] = clenshaw_1d(&self.c[r * last..(r + 1) * last], x[self.dim - 1]);
        }
        let mut len = rows;
        for axis in (0..self.dim - 1).rev() {
            let e = self.ext[axis];
            let rows2 = len / e;
            for r in 0..rows2 {
                let start = r * e;
                let v = clenshaw_1d(&scratch[start..start + e], x[axis]);
                scratch[r] = v;
            }
            len = rows2;
        }
        scratch[0]
    }
}

pub(crate) fn clenshaw_1d(c: &[f64], x: f64) -> f64 {
    match c.len() {
        0 => 0.0,
        1 => c[0],
        _ => {
            let mut b1 = 0.0;
            let mut b2 = 0.0;
            for k in (1..c.len()).rev() {
                let b = c[k] + 2.0 * x * b1 - b2;
                b2 = b1;
                b1 = b;
            }
            c[0] + x * b1 - b2
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t_k(dim: usize, axis: usize, k: u32) -> TensorPoly {
        let mut idx = vec![0u32; dim];
        idx[axis] = k;
        TensorPoly::from_coeffs(dim, k, [(MultiIndex(idx), 1.0)]).unwrap()
    }

    #[test]
    fn eval_t3_closed_form() {
        let p = t_k(1, 0, 3);
        let x = 0.5;
        let want = 4.0 * x * x * x - 3.0 * x;
        assert!((p.eval(&[x]).unwrap() - want).abs() < 1e-15);
        assert_eq!(want, -1.0);
    }

    #[test]
    fn eval_constant_one() {
        let p = TensorPoly::constant(3, 1.0);
        assert_eq!(p.eval(&[0.3, -0.9, 0.1]).unwrap(), 1.0);
    }

    #[test]
    fn eval_tensor_product() {
        // T2(x1) T1(x2) at (0, 1) = (2*0-1) * 1 = -1
        let p = TensorPoly::from_coeffs(2, 3, [(MultiIndex(vec![2, 1]), 1.0)]).unwrap();
        assert!((p.eval(&[0.0, 1.0]).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn eval_dimension_mismatch() {
        let p = TensorPoly::constant(2, 1.0);
        assert!(matches!(
            p.eval(&[0.0]),
            Err(ChebError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn partial_t2_is_4x() {
        let p = t_k(1, 0, 2);
        let dp = p.partial(0).unwrap();
        assert!((dp.coeff(&MultiIndex(vec![1])) - 4.0).abs() < 1e-15);
        assert!((dp.eval(&[0.25]).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn partial_constant_is_zero() {
        let p = TensorPoly::constant(2, 5.0);
        assert!(p.partial(0).unwrap().is_zero());
        assert!(p.partial(1).unwrap().is_zero());
    }

    #[test]
    fn partial_axis_out_of_range() {
        let p = TensorPoly::constant(2, 1.0);
        assert!(matches!(
            p.partial(2),
            Err(ChebError::AxisOutOfRange { .. })
        ));
    }

    #[test]
    fn partial_matches_finite_differences() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(7);
        let idxs = multi_indices(2, 6);
        let coeffs: Vec<(MultiIndex, f64)> = idxs
            .iter()
            .map(|i| (i.clone(), rng.gen_range(-1.0..1.0)))
            .collect();
        let p = TensorPoly::from_coeffs(2, 6, coeffs).unwrap();
        let dp = p.partial(0).unwrap();
        let h = 1e-5;
        for _ in 0..20 {
            let x = [rng.gen_range(-0.9..0.9), rng.gen_range(-0.9..0.9)];
            let fd = (p.eval(&[x[0] + h, x[1]]).unwrap() - p.eval(&[x[0] - h, x[1]]).unwrap())
                / (2.0 * h);
            let exact = dp.eval(&x).unwrap();
            assert!(
                (fd - exact).abs() <= 1e-6 * (1.0 + exact.abs()),
                "fd {fd} vs exact {exact}"
            );
        }
    }

    #[test]
    fn l2_norm_constant_2d() {
        let p = TensorPoly::constant(2, 1.0);
        assert!((p.l2_norm_mu() - std::f64::consts::PI).abs() < 1e-14);
    }

    #[test]
    fn l2_norm_t1() {
        let p = t_k(1, 0, 1);
        assert!((p.l2_norm_mu() - (std::f64::consts::PI / 2.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn l2_norm_matches_quadrature() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(11);
        let idxs = multi_indices(2, 5);
        let coeffs: Vec<(MultiIndex, f64)> = idxs
            .iter()
            .map(|i| (i.clone(), rng.gen_range(-1.0..1.0)))
            .collect();
        let p = TensorPoly::from_coeffs(2, 5, coeffs).unwrap();
        let via_coeffs = p.l2_norm_mu().powi(2);
        let via_quad = quad_mu(2, |x| p.eval(x).unwrap().powi(2), 8);
        assert!(
            (via_coeffs - via_quad).abs() <= 1e-12 * via_coeffs.abs(),
            "{via_coeffs} vs {via_quad}"
        );
    }

    #[test]
    fn quad_constants() {
        assert!((quad_mu(1, |_| 1.0, 3) - std::f64::consts::PI).abs() < 1e-14);
        assert!((quad_mu(1, |x| x[0] * x[0], 2) - std::f64::consts::PI / 2.0).abs() < 1e-14);
        let want = std::f64::consts::PI * std::f64::consts::PI / 4.0;
        assert!((quad_mu(2, |x| x[0] * x[0] * x[1] * x[1], 2) - want).abs() < 1e-13);
    }

    #[test]
    fn monomial_x_squared() {
        // 0.5 T0 + 0.5 T2 = x^2
        let p = TensorPoly::from_coeffs(
            1,
            2,
            [
                (MultiIndex(vec![0]), 0.5),
                (MultiIndex(vec![2]), 0.5),
            ],
        )
        .unwrap();
        let m = p.to_monomial_exact();
        assert_eq!(m.num_coeffs(), 1);
        assert_eq!(m.coeff(&MultiIndex(vec![2])), BigRational::one());
    }

    #[test]
    fn monomial_bilinear() {
        let p = TensorPoly::from_coeffs(2, 2, [(MultiIndex(vec![1, 1]), 1.0)]).unwrap();
        let m = p.to_monomial_exact();
        assert_eq!(m.num_coeffs(), 1);
        assert_eq!(m.coeff(&MultiIndex(vec![1, 1])), BigRational::one());
    }

    #[test]
    fn monomial_roundtrip_exact() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(3);
        let idxs = multi_indices(2, 8);
        let coeffs: Vec<(MultiIndex, f64)> = idxs
            .iter()
            .map(|i| (i.clone(), rng.gen_range(-1.0..1.0)))
            .collect();
        let p = TensorPoly::from_coeffs(2, 8, coeffs).unwrap();
        let m = p.to_monomial_exact();
        for _ in 0..20 {
            let x = [
                BigRational::new(BigInt::from(rng.gen_range(-99i64..100)), BigInt::from(101)),
                BigRational::new(BigInt::from(rng.gen_range(-99i64..100)), BigInt::from(103)),
            ];
            assert_eq!(p.eval_exact(&x).unwrap(), m.eval_exact(&x).unwrap());
        }
    }

    #[test]
    fn sup_norm_t5() {
        let p = t_k(1, 0, 5);
        let s = p.sup_norm_grid(64);
        assert!((s - 1.0).abs() <= 1e-3, "got {s}");
    }

    #[test]
    fn sup_norm_zero() {
        let p = TensorPoly::zero(2, 4);
        assert_eq!(p.sup_norm_grid(16), 0.0);
    }

    #[test]
    fn sup_norm_product() {
        let p = TensorPoly::from_coeffs(2, 5, [(MultiIndex(vec![3, 2]), 2.0)]).unwrap();
        let s = p.sup_norm_grid(64);
        assert!((s - 2.0).abs() <= 1e-2, "got {s}");
    }

    #[test]
    fn sup_norm_monotone_on_nested_grids() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(5);
        for _ in 0..10 {
            let idxs = multi_indices(2, 7);
            let coeffs: Vec<(MultiIndex, f64)> = idxs
                .iter()
                .map(|i| (i.clone(), rng.gen_range(-1.0..1.0)))
                .collect();
            let p = TensorPoly::from_coeffs(2, 7, coeffs).unwrap();
            let a = p.sup_norm_grid(16);
            let b = p.sup_norm_grid(31);
            let c = p.sup_norm_grid(61);
            assert!(a <= b + 1e-15 && b <= c + 1e-15);
        }
    }

    #[test]
    fn text_roundtrip() {
        let p = TensorPoly::from_coeffs(
            2,
            3,
            [
                (MultiIndex(vec![0, 0]), 0.125),
                (MultiIndex(vec![2, 1]), -1.0 / 3.0),
            ],
        )
        .unwrap();
        let text = p.to_text();
        let q = TensorPoly::from_text(&text).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn basis_size_matches_enumeration() {
        for n in 1..=4usize {
            for d in 0..=6u32 {
                assert_eq!(multi_indices(n, d).len(), basis_size(n, d));
            }
        }
    }

    #[test]
    fn graded_lex_order() {
        let idxs = multi_indices(2, 2);
        let totals: Vec<u32> = idxs.iter().map(|i| i.total()).collect();
        let mut sorted = totals.clone();
        sorted.sort();
        assert_eq!(totals, sorted);
        assert_eq!(idxs[0], MultiIndex(vec![0, 0]));
        assert_eq!(idxs.len(), 6);
    }

    #[test]
    fn from_monomial_matches_eval() {
        // x^2 y + 3 x - 1 on [-1,1]^2
        let p = TensorPoly::from_monomial(
            2,
            3,
            [
                (vec![2, 1], 1.0),
                (vec![1, 0], 3.0),
                (vec![0, 0], -1.0),
            ],
        )
        .unwrap();
        for &(x, y) in &[(0.3, -0.7), (0.0, 0.0), (1.0, 1.0), (-0.5, 0.25)] {
            let want = x * x * y + 3.0 * x - 1.0;
            assert!((p.eval(&[x, y]).unwrap() - want).abs() < 1e-13);
        }
    }
}
