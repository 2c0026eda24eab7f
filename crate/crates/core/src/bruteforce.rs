//! Reference root- and minimizer-finding by dense grids and damped
//! Newton, independent of the subdivision solver. Used to generate
//! checked-in reference sets and as the oracle side of solver tests.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::cheb::{DenseCheb, TensorPoly};
use crate::oracle::BoxDomain;

/// Settings for the multistart Newton reference solver.
#[derive(Debug, Clone)]
pub struct RefOptions {
    /// Newton starts per axis.
    pub starts_per_axis: usize,
    /// Residual acceptance threshold relative to the system scale.
    pub residual_tol: f64,
    pub max_iter: usize,
    /// Matching radius when collapsing duplicates.
    pub dedupe_radius: f64,
    /// Points closer than this to the boundary are dropped.
    pub interior_margin: f64,
}

impl Default for RefOptions {
    fn default() -> Self {
        RefOptions {
            starts_per_axis: 81,
            residual_tol: 1e-10,
            max_iter: 80,
            dedupe_radius: 1e-7,
            interior_margin: 1e-7,
        }
    }
}

/// All roots of a square system of callable maps found by damped Newton
/// from a dense grid of starts, deduped and filtered to the box interior.
pub fn newton_multistart(
    n: usize,
    bx: &BoxDomain,
    g: &(dyn Fn(&[f64]) -> Vec<f64> + Sync),
    jac: &(dyn Fn(&[f64]) -> Vec<f64> + Sync),
    opts: &RefOptions,
) -> Vec<Vec<f64>> {
    let m = opts.starts_per_axis;
    let total = m.pow(n as u32);
    let scale: f64 = {
        let mid = bx.from_unit(&vec![0.0; n]);
        g(&mid).iter().map(|v| v.abs()).fold(1.0, f64::max)
    };
    let mut found: Vec<Vec<f64>> = (0..total)
        .into_par_iter()
        .filter_map(|flat| {
            let mut rem = flat;
            let mut x = vec![0.0; n];
            for a in (0..n).rev() {
                let j = rem % m;
                rem /= m;
                let t = -1.0 + 2.0 * (j as f64 + 0.5) / m as f64;
                x[a] = bx.lo()[a] + 0.5 * (t + 1.0) * (bx.hi()[a] - bx.lo()[a]);
            }
            newton_from(n, bx, g, jac, &x, opts, scale)
        })
        .collect();
    found.sort_by(|a, b| a.partial_cmp(b).unwrap());
    dedupe_points(found, opts.dedupe_radius)
        .into_iter()
        .filter(|x| {
            x.iter()
                .zip(bx.lo().iter().zip(bx.hi()))
                .all(|(&xi, (&a, &b))| xi > a + opts.interior_margin && xi < b - opts.interior_margin)
        })
        .collect()
}

fn newton_from(
    n: usize,
    bx: &BoxDomain,
    g: &(dyn Fn(&[f64]) -> Vec<f64> + Sync),
    jac: &(dyn Fn(&[f64]) -> Vec<f64> + Sync),
    start: &[f64],
    opts: &RefOptions,
    scale: f64,
) -> Option<Vec<f64>> {
    let mut x = DVector::from_column_slice(start);
    let norm = |v: &[f64]| v.iter().map(|t| t.abs()).fold(0.0, f64::max);
    let w: Vec<f64> = bx
        .lo()
        .iter()
        .zip(bx.hi())
        .map(|(a, b)| 0.25 * (b - a))
        .collect();
    for _ in 0..opts.max_iter {
        let gv = g(x.as_slice());
        let g0 = norm(&gv);
        if g0 <= opts.residual_tol * scale {
            let inside = x
                .iter()
                .zip(bx.lo().iter().zip(bx.hi()))
                .all(|(&xi, (&a, &b))| xi >= a - 1e-9 && xi <= b + 1e-9);
            return inside.then(|| x.as_slice().to_vec());
        }
        let jv = jac(x.as_slice());
        let j = DMatrix::from_row_slice(n, n, &jv);
        let delta = j.lu().solve(&DVector::from_column_slice(&gv).scale(-1.0))?;
        if !delta.iter().all(|v| v.is_finite()) {
            return None;
        }
        let mut alpha = 1.0f64;
        let mut stepped = false;
        for _ in 0..25 {
            let mut cand = &x + delta.scale(alpha);
            for (a, v) in cand.iter_mut().enumerate() {
                *v = v.clamp(bx.lo()[a] - w[a], bx.hi()[a] + w[a]);
            }
            if norm(&g(cand.as_slice())) < g0 {
                x = cand;
                stepped = true;
                break;
            }
            alpha *= 0.5;
        }
        if !stepped {
            return None;
        }
    }
    let gv = g(x.as_slice());
    if norm(&gv) <= opts.residual_tol * scale {
        let inside = x
            .iter()
            .zip(bx.lo().iter().zip(bx.hi()))
            .all(|(&xi, (&a, &b))| xi >= a - 1e-9 && xi <= b + 1e-9);
        return inside.then(|| x.as_slice().to_vec());
    }
    None
}

pub fn dedupe_points(sorted: Vec<Vec<f64>>, radius: f64) -> Vec<Vec<f64>> {
    let mut kept: Vec<Vec<f64>> = Vec::new();
    for p in sorted {
        if kept.iter().all(|q| euclid(&p, q) > radius) {
            kept.push(p);
        }
    }
    kept
}

pub fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// All critical points of a tensor Chebyshev polynomial inside [-1,1]^n,
/// by exact-gradient multistart Newton seeded both from a coarse grid and
/// from the sign-change cells of a fine grid (2-D only for the latter).
pub fn poly_critical_points(p: &TensorPoly, opts: &RefOptions) -> Vec<Vec<f64>> {
    let n = p.dim();
    let grads: Vec<TensorPoly> = (0..n).map(|a| p.partial(a).unwrap()).collect();
    let grad_dense: Vec<DenseCheb> = grads.iter().map(|g| g.dense()).collect();
    let hess_dense: Vec<DenseCheb> = grads
        .iter()
        .flat_map(|g| (0..n).map(|a| g.partial(a).unwrap().dense()).collect::<Vec<_>>())
        .collect();
    let g = move |x: &[f64]| -> Vec<f64> { grad_dense.iter().map(|d| d.eval(x)).collect() };
    let jac = move |x: &[f64]| -> Vec<f64> { hess_dense.iter().map(|d| d.eval(x)).collect() };
    let bx = BoxDomain::unit(n);
    let mut roots = newton_multistart(n, &bx, &g, &jac, opts);
    if n == 2 {
        let seeds = sign_change_seeds_2d(&grads, 2001);
        let scale = 1.0f64;
        let extra: Vec<Vec<f64>> = seeds
            .par_iter()
            .filter_map(|s| newton_from(n, &bx, &g, &jac, s, opts, scale))
            .collect();
        roots.extend(extra);
        roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
        roots = dedupe_points(roots, opts.dedupe_radius);
        roots.retain(|x| {
            x.iter()
                .all(|&xi| xi > -1.0 + opts.interior_margin && xi < 1.0 - opts.interior_margin)
        });
    }
    roots
}

/// Centers of fine-grid cells where both gradient components change sign.
fn sign_change_seeds_2d(grads: &[TensorPoly], res: usize) -> Vec<Vec<f64>> {
    let d0 = grads[0].dense();
    let d1 = grads[1].dense();
    let nodes: Vec<f64> = (0..res)
        .map(|j| -1.0 + 2.0 * j as f64 / (res - 1) as f64)
        .collect();
    // sign tables, row-major
    let rows: Vec<(Vec<i8>, Vec<i8>)> = nodes
        .par_iter()
        .map(|&y| {
            let mut s0 = Vec::with_capacity(res);
            let mut s1 = Vec::with_capacity(res);
            let mut scratch0 = d0.make_scratch();
            let mut scratch1 = d1.make_scratch();
            for &x in &nodes {
                let v0 = d0.eval_with_scratch(&[x, y], &mut scratch0);
                let v1 = d1.eval_with_scratch(&[x, y], &mut scratch1);
                s0.push(if v0 >= 0.0 { 1 } else { -1 });
                s1.push(if v1 >= 0.0 { 1 } else { -1 });
            }
            (s0, s1)
        })
        .collect();
    let mut seeds = Vec::new();
    for jy in 0..res - 1 {
        let (a0, a1) = &rows[jy];
        let (b0, b1) = &rows[jy + 1];
        for jx in 0..res - 1 {
            let c0 = [a0[jx], a0[jx + 1], b0[jx], b0[jx + 1]];
            let c1 = [a1[jx], a1[jx + 1], b1[jx], b1[jx + 1]];
            let mixed = |c: &[i8; 4]| c.iter().any(|&s| s > 0) && c.iter().any(|&s| s < 0);
            if mixed(&c0) && mixed(&c1) {
                seeds.push(vec![
                    0.5 * (nodes[jx] + nodes[jx + 1]),
                    0.5 * (nodes[jy] + nodes[jy + 1]),
                ]);
            }
        }
    }
    seeds
}

/// Strict local minima of `f` on a res^n uniform value grid over `bx`
/// (each strictly below all axis-aligned and diagonal neighbors), as
/// polish seeds.
pub fn grid_local_minima(
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    bx: &BoxDomain,
    res: usize,
) -> Vec<Vec<f64>> {
    let n = bx.dim();
    let nodes_per_axis: Vec<Vec<f64>> = (0..n)
        .map(|a| {
            (0..res)
                .map(|j| bx.lo()[a] + (bx.hi()[a] - bx.lo()[a]) * j as f64 / (res - 1) as f64)
                .collect()
        })
        .collect();
    let total = res.pow(n as u32);
    let values: Vec<f64> = (0..total)
        .into_par_iter()
        .map(|flat| {
            let mut rem = flat;
            let mut x = vec![0.0; n];
            for a in (0..n).rev() {
                x[a] = nodes_per_axis[a][rem % res];
                rem /= res;
            }
            f(&x)
        })
        .collect();
    let strides: Vec<usize> = (0..n)
        .map(|a| res.pow((n - 1 - a) as u32))
        .collect();
    (0..total)
        .into_par_iter()
        .filter_map(|flat| {
            let mut rem = flat;
            let mut idx = vec![0usize; n];
            for a in (0..n).rev() {
                idx[a] = rem % res;
                rem /= res;
            }
            if idx.iter().any(|&i| i == 0 || i == res - 1) {
                return None;
            }
            let v = values[flat];
            // compare against the full Moore neighborhood
            let mut offsets = vec![-1i64; n];
            loop {
                if offsets.iter().any(|&o| o != 0) {
                    let mut nflat = 0usize;
                    for a in 0..n {
                        nflat += ((idx[a] as i64 + offsets[a]) as usize) * strides[a];
                    }
                    if values[nflat] <= v {
                        return None;
                    }
                }
                let mut a = 0;
                loop {
                    if a == n {
                        break;
                    }
                    offsets[a] += 1;
                    if offsets[a] <= 1 {
                        break;
                    }
                    offsets[a] = -1;
                    a += 1;
                }
                if a == n {
                    break;
                }
            }
            let mut x = vec![0.0; n];
            for a in 0..n {
                x[a] = nodes_per_axis[a][idx[a]];
            }
            Some(x)
        })
        .collect()
}

/// Critical points of a smooth closed-form function by finite-difference
/// gradient multistart Newton over `bx`.
pub fn fd_critical_points(
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    bx: &BoxDomain,
    opts: &RefOptions,
) -> Vec<Vec<f64>> {
    let n = bx.dim();
    let h: Vec<f64> = bx
        .lo()
        .iter()
        .zip(bx.hi())
        .map(|(a, b)| 1e-6 * (b - a).max(1.0))
        .collect();
    let grad = {
        let h = h.clone();
        move |x: &[f64]| -> Vec<f64> {
            (0..n)
                .map(|a| {
                    let mut xp = x.to_vec();
                    let mut xm = x.to_vec();
                    xp[a] += h[a];
                    xm[a] -= h[a];
                    (f(&xp) - f(&xm)) / (2.0 * h[a])
                })
                .collect()
        }
    };
    let jac = {
        let h = h.clone();
        let grad = grad.clone();
        move |x: &[f64]| -> Vec<f64> {
            let mut j = vec![0.0; n * n];
            for a in 0..n {
                let mut xp = x.to_vec();
                let mut xm = x.to_vec();
                xp[a] += h[a] * 50.0;
                xm[a] -= h[a] * 50.0;
                let gp = grad(&xp);
                let gm = grad(&xm);
                for i in 0..n {
                    j[i * n + a] = (gp[i] - gm[i]) / (100.0 * h[a]);
                }
            }
            j
        }
    };
    newton_multistart(n, bx, &grad, &jac, opts)
}

/// Finite-difference Hessian eigenvalues of `f` at `x` (for classifying
/// reference critical points).
pub fn fd_hessian_eigs(f: &dyn Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let n = x.len();
    let mut hess = vec![0.0; n * n];
    let f0 = f(x);
    for i in 0..n {
        for j in i..n {
            let v = if i == j {
                let mut xp = x.to_vec();
                let mut xm = x.to_vec();
                xp[i] += h;
                xm[i] -= h;
                (f(&xp) - 2.0 * f0 + f(&xm)) / (h * h)
            } else {
                let mut xpp = x.to_vec();
                let mut xpm = x.to_vec();
                let mut xmp = x.to_vec();
                let mut xmm = x.to_vec();
                xpp[i] += h;
                xpp[j] += h;
                xpm[i] += h;
                xpm[j] -= h;
                xmp[i] -= h;
                xmp[j] += h;
                xmm[i] -= h;
                xmm[j] -= h;
                (f(&xpp) - f(&xpm) - f(&xmp) + f(&xmm)) / (4.0 * h * h)
            };
            hess[i * n + j] = v;
            hess[j * n + i] = v;
        }
    }
    crate::psolve::jacobi::symmetric_eigenvalues(&hess, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::random_tensor_poly;

    #[test]
    fn finds_separable_roots() {
        // f = (x^2 - 1/4)^2 + (y^2 - 1/4)^2 via its exact gradient
        let f = TensorPoly::from_monomial(
            2,
            4,
            [
                (vec![4, 0], 1.0),
                (vec![2, 0], -0.5),
                (vec![0, 4], 1.0),
                (vec![0, 2], -0.5),
            ],
        )
        .unwrap();
        let pts = poly_critical_points(&f, &RefOptions::default());
        assert_eq!(pts.len(), 9);
    }

    #[test]
    fn random_poly_critical_points_have_small_residual() {
        let p = random_tensor_poly(2, 5, 77);
        let grads: Vec<TensorPoly> = (0..2).map(|a| p.partial(a).unwrap()).collect();
        let pts = poly_critical_points(&p, &RefOptions::default());
        for x in &pts {
            for g in &grads {
                assert!(g.eval(x).unwrap().abs() <= 1e-8);
            }
        }
    }

    #[test]
    fn grid_minima_of_bowl() {
        let bx = BoxDomain::cube(2, -1.0, 1.0).unwrap();
        let f = |x: &[f64]| x[0] * x[0] + x[1] * x[1];
        let m = grid_local_minima(&f, &bx, 41);
        assert_eq!(m.len(), 1);
        assert!(euclid(&m[0], &[0.0, 0.0]) <= 0.1);
    }

    #[test]
    fn fd_hessian_classifies_bowl() {
        let f = |x: &[f64]| x[0] * x[0] + 3.0 * x[1] * x[1];
        let eigs = fd_hessian_eigs(&f, &[0.0, 0.0], 1e-4);
        assert!((eigs[0] - 2.0).abs() < 1e-5);
        assert!((eigs[1] - 6.0).abs() < 1e-5);
    }
}
