//! Evaluation points in [-1,1]^n: i.i.d. draws from the tensorized
//! Chebyshev (arcsine) measure, and deterministic tensor Chebyshev grids.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

/// How a sample set was generated; fully determines the points.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    Iid { seed: u64, k: usize },
    Grid { points_per_axis: usize },
}

/// An ordered list of points in [-1,1]^n with generation provenance.
/// Points are stored flat, `dim` coordinates per point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    dim: usize,
    data: Vec<f64>,
    provenance: Provenance,
}

impl SampleSet {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.data.len() / self.dim
        }
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Per-axis node list when this is a tensor grid.
    pub fn grid_nodes(&self) -> Option<Vec<f64>> {
        match self.provenance {
            Provenance::Grid { points_per_axis } => Some(chebyshev_nodes(points_per_axis)),
            Provenance::Iid { .. } => None,
        }
    }

    /// CSV body, one point per row.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for p in self.iter() {
            let row: Vec<String> = p.iter().map(|v| format!("{v:.17e}")).collect();
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }

    /// JSON sidecar describing the provenance.
    pub fn provenance_json(&self) -> String {
        serde_json::json!({
            "dim": self.dim,
            "count": self.len(),
            "provenance": self.provenance,
        })
        .to_string()
    }
}

/// Roots of T_m: cos((2j+1) pi / (2m)), j = 0..m-1.
pub fn chebyshev_nodes(m: usize) -> Vec<f64> {
    (0..m)
        .map(|j| ((2 * j + 1) as f64 * std::f64::consts::PI / (2 * m) as f64).cos())
        .collect()
}

/// `k` i.i.d. points from the tensorized Chebyshev measure: each
/// coordinate is cos(pi u) with u uniform on (0,1), from a seeded
/// deterministic generator.
pub fn sample_iid(n: usize, k: usize, seed: u64) -> SampleSet {
    assert!(n >= 1, "dimension must be at least 1");
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(n * k);
    for _ in 0..k {
        for _ in 0..n {
            // open-interval uniform keeps coordinates strictly inside (-1, 1)
            let u = (rng.gen::<u64>() >> 11) as f64;
            let u = (u + 0.5) * (1.0 / (1u64 << 53) as f64);
            data.push((std::f64::consts::PI * u).cos());
        }
    }
    SampleSet {
        dim: n,
        data,
        provenance: Provenance::Iid { seed, k },
    }
}

/// The tensor Chebyshev grid with `points_per_axis` nodes per axis,
/// `points_per_axis^n` points total, ordered row-major (axis 0 slowest).
pub fn tensor_grid(n: usize, points_per_axis: usize) -> SampleSet {
    assert!(n >= 1, "dimension must be at least 1");
    assert!(points_per_axis >= 1, "need at least one point per axis");
    let nodes = chebyshev_nodes(points_per_axis);
    let total = points_per_axis.pow(n as u32);
    let mut data = Vec::with_capacity(n * total);
    for flat in 0..total {
        let mut rem = flat;
        let base = data.len();
        data.resize(base + n, 0.0);
        for a in (0..n).rev() {
            data[base + a] = nodes[rem % points_per_axis];
            rem /= points_per_axis;
        }
    }
    SampleSet {
        dim: n,
        data,
        provenance: Provenance::Grid { points_per_axis },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_single_node_is_zero() {
        let s = tensor_grid(1, 1);
        assert_eq!(s.len(), 1);
        assert!(s.point(0)[0].abs() < 1e-16);
    }

    #[test]
    fn grid_two_nodes() {
        let s = tensor_grid(1, 2);
        let want = 0.5f64.sqrt();
        assert!((s.point(0)[0] - want).abs() < 1e-15);
        assert!((s.point(1)[0] + want).abs() < 1e-15);
    }

    #[test]
    fn grid_cardinality_120() {
        let s = tensor_grid(2, 120);
        assert_eq!(s.len(), 14400);
    }

    #[test]
    fn grid_nodes_are_roots_of_tm() {
        for m in [1usize, 2, 7, 32, 120] {
            for &x in &chebyshev_nodes(m) {
                let t = crate::cheb::chebyshev_t_values(x, m);
                assert!(t[m].abs() <= 1e-12, "T_{m}({x}) = {}", t[m]);
            }
        }
    }

    #[test]
    fn iid_empty() {
        let s = sample_iid(2, 0, 1);
        assert!(s.is_empty());
    }

    #[test]
    fn iid_deterministic() {
        let a = sample_iid(3, 100, 42);
        let b = sample_iid(3, 100, 42);
        assert_eq!(a, b);
        let c = sample_iid(3, 100, 43);
        assert_ne!(a, c);
    }

    #[test]
    fn iid_matches_arcsine_cdf() {
        // Kolmogorov-Smirnov distance against F(x) = 1 - acos(x)/pi
        let k = 100_000;
        let s = sample_iid(1, k, 42);
        let mut xs: Vec<f64> = s.iter().map(|p| p[0]).collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut ks = 0.0f64;
        for (i, &x) in xs.iter().enumerate() {
            let f = 1.0 - x.acos() / std::f64::consts::PI;
            let lo = i as f64 / k as f64;
            let hi = (i + 1) as f64 / k as f64;
            ks = ks.max((f - lo).abs()).max((f - hi).abs());
        }
        assert!(ks <= 0.006, "KS statistic {ks}");
    }

    #[test]
    fn iid_transformed_mean_is_uniform() {
        let k = 100_000;
        let s = sample_iid(1, k, 7);
        let mean: f64 = s
            .iter()
            .map(|p| p[0].acos() / std::f64::consts::PI)
            .sum::<f64>()
            / k as f64;
        assert!((0.497..=0.503).contains(&mean), "mean {mean}");
    }

    #[test]
    fn all_coordinates_in_box() {
        let s = sample_iid(2, 1000, 9);
        assert!(s.iter().all(|p| p.iter().all(|v| v.abs() <= 1.0)));
        let g = tensor_grid(3, 5);
        assert!(g.iter().all(|p| p.iter().all(|v| v.abs() <= 1.0)));
    }
}
