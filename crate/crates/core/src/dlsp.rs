//! Discrete least-squares polynomial approximants in the tensor Chebyshev
//! basis, plus error diagnostics against an oracle.
//!
//! The fit minimizes (1/sqrt k) ||L x - F||_2 where L is the
//! Vandermonde-like design matrix over the basis functions of total degree
//! at most d. The orthogonal route factors L directly; the normal-equation
//! route forms the Gram matrix, and specializes to an exactly diagonal
//! solve on full tensor Chebyshev grids (discrete orthogonality).

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::cheb::{basis_size, chebyshev_t_values, multi_indices, TensorPoly};
use crate::oracle::Oracle;
use crate::sampling::{Provenance, SampleSet};

#[derive(Debug, Error)]
pub enum DlspError {
    #[error("need at least {needed} samples for degree {degree} in dim {dim}, got {got}")]
    NotEnoughSamples {
        needed: usize,
        got: usize,
        degree: u32,
        dim: usize,
    },
    #[error("non-finite value at sample {index}")]
    NonFiniteValue { index: usize },
    #[error("design matrix is rank deficient (condition estimate {cond:.3e})")]
    RankDeficient { cond: f64 },
    #[error("value count {values} does not match sample count {samples}")]
    LengthMismatch { values: usize, samples: usize },
    #[error("operation requires a tensor grid sample set")]
    GridRequired,
    #[error(transparent)]
    Cheb(#[from] crate::cheb::ChebError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FitMethod {
    /// Solve the normal equations L^T L x = L^T F (diagonal on full
    /// tensor Chebyshev grids with more nodes per axis than the degree).
    NormalEq,
    /// Orthogonal factorization of the rectangular least-squares problem.
    Orthogonal,
}

/// Outcome of a least-squares fit.
#[derive(Debug, Clone)]
pub struct FitReport {
    pub poly: TensorPoly,
    /// The minimized objective, (1/sqrt k) ||L x - F||_2.
    pub residual_rms: f64,
    /// Ratio of extreme diagonal entries of the triangular factor; a cheap
    /// estimate of cond(L).
    pub gram_condition_estimate: f64,
    pub basis_size: usize,
    pub samples_used: usize,
}

#[derive(Serialize, Deserialize)]
struct FitReportWire {
    poly_text: String,
    residual_rms: f64,
    gram_condition_estimate: f64,
    basis_size: usize,
    samples_used: usize,
}

impl Serialize for FitReport {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        FitReportWire {
            poly_text: self.poly.to_text(),
            residual_rms: self.residual_rms,
            gram_condition_estimate: self.gram_condition_estimate,
            basis_size: self.basis_size,
            samples_used: self.samples_used,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for FitReport {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let wire = FitReportWire::deserialize(d)?;
        Ok(FitReport {
            poly: TensorPoly::from_text(&wire.poly_text).map_err(D::Error::custom)?,
            residual_rms: wire.residual_rms,
            gram_condition_estimate: wire.gram_condition_estimate,
            basis_size: wire.basis_size,
            samples_used: wire.samples_used,
        })
    }
}

/// The k x D design matrix: row i holds every tensor Chebyshev basis
/// function of total degree <= d evaluated at sample i, columns in
/// graded-lex order.
pub fn assemble_design(samples: &SampleSet, d: u32) -> Result<DMatrix<f64>, DlspError> {
    let n = samples.dim();
    let cols = basis_size(n, d);
    let k = samples.len();
    if k < cols {
        return Err(DlspError::NotEnoughSamples {
            needed: cols,
            got: k,
            degree: d,
            dim: n,
        });
    }
    let idxs = multi_indices(n, d);
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(k);
    (0..k)
        .into_par_iter()
        .map(|i| design_row(samples.point(i), d, &idxs))
        .collect_into_vec(&mut rows);
    let mut l = DMatrix::zeros(k, cols);
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            l[(i, j)] = v;
        }
    }
    Ok(l)
}

fn design_row(x: &[f64], d: u32, idxs: &[crate::cheb::MultiIndex]) -> Vec<f64> {
    let tables: Vec<Vec<f64>> = x.iter().map(|&xi| chebyshev_t_values(xi, d as usize)).collect();
    idxs.iter()
        .map(|idx| {
            idx.0
                .iter()
                .enumerate()
                .map(|(a, &v)| tables[a][v as usize])
                .product()
        })
        .collect()
}

/// Fits the degree-d least-squares approximant to `values` at `samples`.
pub fn fit(
    samples: &SampleSet,
    values: &[f64],
    d: u32,
    method: FitMethod,
) -> Result<FitReport, DlspError> {
    let n = samples.dim();
    let k = samples.len();
    if values.len() != k {
        return Err(DlspError::LengthMismatch {
            values: values.len(),
            samples: k,
        });
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(DlspError::NonFiniteValue { index: i });
    }
    let cols = basis_size(n, d);
    if k < cols {
        return Err(DlspError::NotEnoughSamples {
            needed: cols,
            got: k,
            degree: d,
            dim: n,
        });
    }
    let idxs = multi_indices(n, d);
    let (coeffs, cond) = match method {
        FitMethod::Orthogonal => solve_qr(samples, values, d, cols)?,
        FitMethod::NormalEq => {
            if let Some(m) = diagonal_grid_size(samples, d) {
                solve_diagonal(samples, values, d, &idxs, m)
            } else {
                solve_normal(samples, values, d, cols)?
            }
        }
    };
    let poly = TensorPoly::from_coeffs(
        n,
        d,
        idxs.iter()
            .cloned()
            .zip(coeffs.iter().copied())
            .filter(|(_, c)| *c != 0.0),
    )?;
    let residual_rms = residual_rms(samples, values, &poly);
    Ok(FitReport {
        poly,
        residual_rms,
        gram_condition_estimate: cond,
        basis_size: cols,
        samples_used: k,
    })
}

/// Full tensor Chebyshev grids with more nodes per axis than the degree
/// make the Gram matrix exactly diagonal (discrete orthogonality of the
/// T_k at the roots of T_M).
fn diagonal_grid_size(samples: &SampleSet, d: u32) -> Option<usize> {
    match *samples.provenance() {
        Provenance::Grid { points_per_axis } if points_per_axis as u32 > d => {
            (samples.len() == points_per_axis.pow(samples.dim() as u32))
                .then_some(points_per_axis)
        }
        _ => None,
    }
}

fn solve_diagonal(
    samples: &SampleSet,
    values: &[f64],
    d: u32,
    idxs: &[crate::cheb::MultiIndex],
    m: usize,
) -> (Vec<f64>, f64) {
    let cols = idxs.len();
    // rhs = L^T F accumulated in fixed-size chunks, merged in order so the
    // result does not depend on the thread schedule
    const CHUNK: usize = 4096;
    let k = samples.len();
    let chunk_sums: Vec<Vec<f64>> = (0..k.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let start = c * CHUNK;
            let end = (start + CHUNK).min(k);
            let mut acc = vec![0.0; cols];
            for i in start..end {
                let row = design_row(samples.point(i), d, idxs);
                let y = values[i];
                for (a, r) in acc.iter_mut().zip(&row) {
                    *a += r * y;
                }
            }
            acc
        })
        .collect();
    let mut rhs = vec![0.0; cols];
    for c in &chunk_sums {
        for (a, v) in rhs.iter_mut().zip(c) {
            *a += v;
        }
    }
    let mf = m as f64;
    let mut dmin = f64::INFINITY;
    let mut dmax = 0.0f64;
    let coeffs: Vec<f64> = idxs
        .iter()
        .zip(&rhs)
        .map(|(idx, &b)| {
            let diag: f64 = idx
                .0
                .iter()
                .map(|&v| if v == 0 { mf } else { mf / 2.0 })
                .product();
            dmin = dmin.min(diag);
            dmax = dmax.max(diag);
            b / diag
        })
        .collect();
    (coeffs, (dmax / dmin).sqrt())
}

fn solve_qr(
    samples: &SampleSet,
    values: &[f64],
    d: u32,
    cols: usize,
) -> Result<(Vec<f64>, f64), DlspError> {
    let l = assemble_design(samples, d)?;
    let mut b = DVector::from_column_slice(values);
    let qr = l.qr();
    qr.q_tr_mul(&mut b);
    let r = qr.r();
    let mut rmin = f64::INFINITY;
    let mut rmax = 0.0f64;
    for j in 0..cols {
        let v = r[(j, j)].abs();
        rmin = rmin.min(v);
        rmax = rmax.max(v);
    }
    let cond = if rmin == 0.0 { f64::INFINITY } else { rmax / rmin };
    if !(cond.is_finite()) || rmin <= f64::EPSILON * rmax * 16.0 {
        return Err(DlspError::RankDeficient { cond });
    }
    let rhs = b.rows(0, cols).into_owned();
    let x = r
        .view((0, 0), (cols, cols))
        .solve_upper_triangular(&rhs)
        .ok_or(DlspError::RankDeficient { cond })?;
    Ok((x.as_slice().to_vec(), cond))
}

fn solve_normal(
    samples: &SampleSet,
    values: &[f64],
    d: u32,
    cols: usize,
) -> Result<(Vec<f64>, f64), DlspError> {
    let idxs = multi_indices(samples.dim(), d);
    let k = samples.len();
    const CHUNK: usize = 1024;
    let partials: Vec<(DMatrix<f64>, DVector<f64>)> = (0..k.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let start = c * CHUNK;
            let end = (start + CHUNK).min(k);
            let mut gram = DMatrix::zeros(cols, cols);
            let mut rhs = DVector::zeros(cols);
            for i in start..end {
                let row = design_row(samples.point(i), d, &idxs);
                let y = values[i];
                for a in 0..cols {
                    let ra = row[a];
                    if ra == 0.0 {
                        continue;
                    }
                    rhs[a] += ra * y;
                    for b in a..cols {
                        gram[(a, b)] += ra * row[b];
                    }
                }
            }
            (gram, rhs)
        })
        .collect();
    let mut gram = DMatrix::zeros(cols, cols);
    let mut rhs = DVector::zeros(cols);
    for (g, r) in &partials {
        gram += g;
        rhs += r;
    }
    for a in 0..cols {
        for b in 0..a {
            gram[(a, b)] = gram[(b, a)];
        }
    }
    let chol = gram
        .clone()
        .cholesky()
        .ok_or(DlspError::RankDeficient { cond: f64::INFINITY })?;
    let lfac = chol.l();
    let mut dmin = f64::INFINITY;
    let mut dmax = 0.0f64;
    for j in 0..cols {
        let v = lfac[(j, j)];
        dmin = dmin.min(v);
        dmax = dmax.max(v);
    }
    let x = chol.solve(&rhs);
    Ok((x.as_slice().to_vec(), dmax / dmin))
}

fn residual_rms(samples: &SampleSet, values: &[f64], poly: &TensorPoly) -> f64 {
    let dense = poly.dense();
    let ss: f64 = (0..samples.len())
        .into_par_iter()
        .map(|i| {
            let r = dense.eval(samples.point(i)) - values[i];
            r * r
        })
        .sum();
    (ss / samples.len() as f64).sqrt()
}

/// Riemann-sum estimate of the squared L2(mu) distance between the oracle
/// and `p`, over the cells of a tensor grid: cells are the intervals
/// between adjacent nodes per axis (each of chi-measure pi/M), the
/// integrand is evaluated at cell midpoints with exact oracle calls.
pub fn discrete_l2_error(p: &TensorPoly, o: &Oracle, grid: &SampleSet) -> Result<f64, DlspError> {
    let nodes = grid.grid_nodes().ok_or(DlspError::GridRequired)?;
    let n = grid.dim();
    let m = nodes.len();
    if m < 2 {
        return Err(DlspError::GridRequired);
    }
    // nodes descend in x; midpoints of adjacent pairs
    let mids: Vec<f64> = (0..m - 1).map(|j| 0.5 * (nodes[j] + nodes[j + 1])).collect();
    let cell_measure = (std::f64::consts::PI / m as f64).powi(n as i32);
    let dense = p.dense();
    let cells = (m - 1).pow(n as u32);
    let total: f64 = (0..cells)
        .into_par_iter()
        .map(|flat| {
            let mut x = vec![0.0; n];
            let mut rem = flat;
            for a in (0..n).rev() {
                x[a] = mids[rem % (m - 1)];
                rem /= m - 1;
            }
            let r = o.evaluate(&x, 0.0) - dense.eval(&x);
            r * r
        })
        .sum();
    Ok(total * cell_measure)
}

/// Lower bound of ||f - p||_inf: max deviation over a res^n
/// Chebyshev-Lobatto grid, with exact oracle calls.
pub fn err_infty_estimate(p: &TensorPoly, o: &Oracle, res: usize) -> f64 {
    assert!(res >= 2);
    let n = p.dim();
    let nodes: Vec<f64> = (0..res)
        .map(|j| (j as f64 * std::f64::consts::PI / (res - 1) as f64).cos())
        .collect();
    let dense = p.dense();
    let total = res.pow(n as u32);
    (0..total)
        .into_par_iter()
        .map(|flat| {
            let mut x = vec![0.0; n];
            let mut rem = flat;
            for a in (0..n).rev() {
                x[a] = nodes[rem % res];
                rem /= res;
            }
            (o.evaluate(&x, 0.0) - dense.eval(&x)).abs()
        })
        .reduce(|| 0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cheb::MultiIndex;
    use crate::sampling::{sample_iid, tensor_grid, SampleSet};

    fn values_of(f: impl Fn(&[f64]) -> f64, s: &SampleSet) -> Vec<f64> {
        s.iter().map(|p| f(p)).collect()
    }

    #[test]
    fn design_matrix_1d() {
        // columns T0, T1 at samples {0, 1} -- built by hand through fit
        // machinery on a small iid set is awkward; use the public op
        let s = sample_iid(1, 2, 1);
        let l = assemble_design(&s, 1).unwrap();
        assert_eq!(l.nrows(), 2);
        assert_eq!(l.ncols(), 2);
        for i in 0..2 {
            assert_eq!(l[(i, 0)], 1.0);
            assert!((l[(i, 1)] - s.point(i)[0]).abs() < 1e-15);
        }
    }

    #[test]
    fn design_row_t2() {
        let s = tensor_grid(1, 3); // includes 0.0 as middle node? nodes: cos(pi/6), cos(pi/2), cos(5pi/6)
        let l = assemble_design(&s, 2).unwrap();
        // row at node x: [1, x, 2x^2-1]
        for i in 0..3 {
            let x = s.point(i)[0];
            assert!((l[(i, 2)] - (2.0 * x * x - 1.0)).abs() < 1e-14);
        }
        assert_eq!(l.ncols(), 3);
    }

    #[test]
    fn design_cols_bivariate() {
        let s = tensor_grid(2, 5);
        let l = assemble_design(&s, 3).unwrap();
        assert_eq!(l.ncols(), 10); // binom(5, 2)
    }

    #[test]
    fn rank_deficiency_when_too_few_samples() {
        let s = tensor_grid(1, 2);
        assert!(matches!(
            assemble_design(&s, 4),
            Err(DlspError::NotEnoughSamples { .. })
        ));
    }

    #[test]
    fn fit_recovers_x_squared() {
        let s = tensor_grid(1, 6);
        let vals = values_of(|p| p[0] * p[0], &s);
        for method in [FitMethod::Orthogonal, FitMethod::NormalEq] {
            let rep = fit(&s, &vals, 2, method).unwrap();
            assert!((rep.poly.coeff(&MultiIndex(vec![0])) - 0.5).abs() < 1e-13);
            assert!((rep.poly.coeff(&MultiIndex(vec![2])) - 0.5).abs() < 1e-13);
            assert!(rep.poly.coeff(&MultiIndex(vec![1])).abs() < 1e-13);
            assert!(rep.residual_rms <= 1e-14);
        }
    }

    #[test]
    fn fit_zero_values_gives_zero_poly() {
        let s = tensor_grid(2, 4);
        let vals = vec![0.0; s.len()];
        let rep = fit(&s, &vals, 2, FitMethod::Orthogonal).unwrap();
        assert!(rep.poly.is_zero());
        assert_eq!(rep.residual_rms, 0.0);
    }

    #[test]
    fn fit_rejects_non_finite() {
        let s = tensor_grid(1, 4);
        let mut vals = values_of(|p| p[0], &s);
        vals[2] = f64::NAN;
        assert!(matches!(
            fit(&s, &vals, 1, FitMethod::Orthogonal),
            Err(DlspError::NonFiniteValue { index: 2 })
        ));
    }

    #[test]
    fn polynomial_reproduction() {
        use crate::oracle::random_tensor_poly;
        for n in 1..=3usize {
            let d = 5u32;
            let g = random_tensor_poly(n, d, 17 + n as u64);
            let s = tensor_grid(n, 2 * (d as usize + 1));
            let vals = values_of(|p| g.eval(p).unwrap(), &s);
            let rep = fit(&s, &vals, d, FitMethod::Orthogonal).unwrap();
            for (idx, c) in g.coeffs() {
                assert!(
                    (rep.poly.coeff(idx) - c).abs() <= 1e-10,
                    "n={n} idx {idx:?}"
                );
            }
        }
    }

    #[test]
    fn methods_agree_on_iid_samples() {
        use crate::oracle::random_tensor_poly;
        let g = random_tensor_poly(2, 4, 5);
        let s = sample_iid(2, 400, 33);
        let vals = values_of(|p| g.eval(p).unwrap() + (3.0 * p[0]).sin() * 0.1, &s);
        let a = fit(&s, &vals, 4, FitMethod::Orthogonal).unwrap();
        let b = fit(&s, &vals, 4, FitMethod::NormalEq).unwrap();
        assert!(a.gram_condition_estimate < 1e6);
        let norm: f64 = a.poly.coeffs().map(|(_, c)| c * c).sum::<f64>().sqrt();
        for (idx, c) in a.poly.coeffs() {
            assert!((b.poly.coeff(idx) - c).abs() <= 1e-8 * norm.max(1.0));
        }
    }

    #[test]
    fn diagonal_path_matches_qr_on_grid() {
        use crate::oracle::random_tensor_poly;
        let g = random_tensor_poly(2, 6, 7);
        let s = tensor_grid(2, 14);
        let vals = values_of(|p| g.eval(p).unwrap().tanh(), &s);
        let a = fit(&s, &vals, 6, FitMethod::Orthogonal).unwrap();
        let b = fit(&s, &vals, 6, FitMethod::NormalEq).unwrap();
        for (idx, c) in a.poly.coeffs() {
            assert!((b.poly.coeff(idx) - c).abs() <= 1e-9);
        }
    }

    #[test]
    fn discrete_l2_of_self_is_zero() {
        use crate::oracle::Oracle;
        let g = crate::oracle::random_tensor_poly(2, 4, 2);
        let o = Oracle::from_poly(&g);
        let grid = tensor_grid(2, 40);
        let err = discrete_l2_error(&g, &o, &grid).unwrap();
        assert!(err <= 1e-24, "err {err}");
    }

    #[test]
    fn discrete_l2_total_mass() {
        use crate::oracle::Oracle;
        let zero = TensorPoly::zero(1, 0);
        let o = Oracle::from_fn(1, |_| 1.0);
        let grid = tensor_grid(1, 120);
        let err = discrete_l2_error(&zero, &o, &grid).unwrap();
        assert!((err - std::f64::consts::PI).abs() <= 0.05, "err {err}");
    }

    #[test]
    fn discrete_l2_needs_grid() {
        let zero = TensorPoly::zero(1, 0);
        let o = crate::oracle::Oracle::from_fn(1, |_| 1.0);
        let s = sample_iid(1, 50, 1);
        assert!(matches!(
            discrete_l2_error(&zero, &o, &s),
            Err(DlspError::GridRequired)
        ));
    }

    #[test]
    fn err_infty_of_self_zero_and_truncation() {
        use crate::oracle::Oracle;
        let g = crate::oracle::random_tensor_poly(1, 6, 4);
        let o = Oracle::from_poly(&g);
        assert_eq!(err_infty_estimate(&g, &o, 64), 0.0);
        // f = T6, p = zero truncation at degree 5: dropped top mode has sup 1
        let t6 = TensorPoly::from_coeffs(1, 6, [(MultiIndex(vec![6]), 1.0)]).unwrap();
        let o6 = Oracle::from_poly(&t6);
        let p5 = TensorPoly::zero(1, 5);
        let e = err_infty_estimate(&p5, &o6, 64);
        assert!(e >= 0.99 && e <= 1.0 + 1e-12, "estimate {e}");
    }

    #[test]
    fn residual_optimality() {
        use crate::oracle::random_tensor_poly;
        let g = random_tensor_poly(2, 3, 9);
        let s = tensor_grid(2, 9);
        let vals: Vec<f64> = s.iter().map(|p| g.eval(p).unwrap().sin()).collect();
        let rep = fit(&s, &vals, 3, FitMethod::Orthogonal).unwrap();
        let objective = |poly: &TensorPoly| -> f64 {
            let dense = poly.dense();
            s.iter()
                .zip(&vals)
                .map(|(p, &y)| (dense.eval(p) - y).powi(2))
                .sum()
        };
        let base = objective(&rep.poly);
        for idx in crate::cheb::multi_indices(2, 3) {
            for delta in [1e-6, -1e-6] {
                let mut pert = rep.poly.clone();
                pert.set_coeff(idx.clone(), rep.poly.coeff(&idx) + delta).unwrap();
                assert!(objective(&pert) >= base - 1e-15);
            }
        }
    }

    #[test]
    fn fit_report_json_roundtrip() {
        let s = tensor_grid(1, 5);
        let vals: Vec<f64> = s.iter().map(|p| p[0] * p[0]).collect();
        let rep = fit(&s, &vals, 2, FitMethod::Orthogonal).unwrap();
        let js = serde_json::to_string(&rep).unwrap();
        let back: FitReport = serde_json::from_str(&js).unwrap();
        assert_eq!(back.poly, rep.poly);
        assert_eq!(back.samples_used, rep.samples_used);
    }
}
