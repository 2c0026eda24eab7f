//! Cyclic Jacobi iteration for the eigenvalues of small symmetric
//! matrices (the Hessians here have n <= 4 rows, where Jacobi is
//! unconditionally convergent and simple).

/// Eigenvalues of a symmetric n x n matrix given row-major, sorted
/// ascending. Off-diagonal mass is annihilated to absolute tolerance
/// 1e-12 relative to the matrix scale.
pub fn symmetric_eigenvalues(a: &[f64], n: usize) -> Vec<f64> {
    debug_assert_eq!(a.len(), n * n);
    if n == 0 {
        return Vec::new();
    }
    if n == 1 {
        return vec![a[0]];
    }
    let mut m = a.to_vec();
    // symmetrize defensively; callers pass Hessians assembled entry-wise
    for p in 0..n {
        for q in (p + 1)..n {
            let s = 0.5 * (m[p * n + q] + m[q * n + p]);
            m[p * n + q] = s;
            m[q * n + p] = s;
        }
    }
    let scale = m.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(1e-300);
    let tol = 1e-12 * scale;
    for _sweep in 0..64 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(m[p * n + q].abs());
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq.abs() <= tol * 1e-3 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let tau = (aqq - app) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for i in 0..n {
                    let aip = m[i * n + p];
                    let aiq = m[i * n + q];
                    m[i * n + p] = c * aip - s * aiq;
                    m[i * n + q] = s * aip + c * aiq;
                }
                for i in 0..n {
                    let api = m[p * n + i];
                    let aqi = m[q * n + i];
                    m[p * n + i] = c * api - s * aqi;
                    m[q * n + i] = s * api + c * aqi;
                }
            }
        }
    }
    let mut eigs: Vec<f64> = (0..n).map(|i| m[i * n + i]).collect();
    eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    eigs
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_matrix() {
        let e = symmetric_eigenvalues(&[3.0, 0.0, 0.0, -1.0], 2);
        assert!((e[0] + 1.0).abs() < 1e-12);
        assert!((e[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn known_2x2() {
        // [[2, 1], [1, 2]] has eigenvalues 1 and 3
        let e = symmetric_eigenvalues(&[2.0, 1.0, 1.0, 2.0], 2);
        assert!((e[0] - 1.0).abs() < 1e-12);
        assert!((e[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn known_3x3() {
        // circulant-ish [[2,-1,0],[-1,2,-1],[0,-1,2]]: 2 - sqrt2, 2, 2 + sqrt2
        let e = symmetric_eigenvalues(&[2.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 2.0], 3);
        let r2 = 2.0f64.sqrt();
        assert!((e[0] - (2.0 - r2)).abs() < 1e-12);
        assert!((e[1] - 2.0).abs() < 1e-12);
        assert!((e[2] - (2.0 + r2)).abs() < 1e-12);
    }

    #[test]
    fn random_4x4_trace_and_det() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(12);
        for _ in 0..50 {
            let n = 4;
            let mut a = vec![0.0; n * n];
            for i in 0..n {
                for j in i..n {
                    let v: f64 = rng.gen_range(-2.0..2.0);
                    a[i * n + j] = v;
                    a[j * n + i] = v;
                }
            }
            let e = symmetric_eigenvalues(&a, n);
            let trace: f64 = (0..n).map(|i| a[i * n + i]).sum();
            assert!((e.iter().sum::<f64>() - trace).abs() <= 1e-10 * (1.0 + trace.abs()));
            let det = nalgebra::DMatrix::from_row_slice(n, n, &a).determinant();
            let prod: f64 = e.iter().product();
            assert!((prod - det).abs() <= 1e-9 * (1.0 + det.abs()), "{prod} vs {det}");
        }
    }
}
