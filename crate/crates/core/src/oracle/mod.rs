//! The evaluation-program contract: a black-box oracle mapping a point in
//! [-1,1]^n and a requested noise bound to a value within that bound of
//! the true objective, plus a library of benchmark objectives, affine box
//! rescaling, and controlled noise injection.

pub mod expr;
pub mod subproc;

use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cheb::{multi_indices, MultiIndex, TensorPoly};

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("unknown benchmark name: {0}")]
    UnknownBenchmark(String),
    #[error("dimension mismatch: oracle dim {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("degenerate box: lo {lo} >= hi {hi} on axis {axis}")]
    DegenerateBox { axis: usize, lo: f64, hi: f64 },
}

/// An axis-aligned box with nonempty interior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxDomain {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self, OracleError> {
        assert_eq!(lo.len(), hi.len());
        for (axis, (&a, &b)) in lo.iter().zip(&hi).enumerate() {
            if !(a < b) {
                return Err(OracleError::DegenerateBox { axis, lo: a, hi: b });
            }
        }
        Ok(BoxDomain { lo, hi })
    }

    /// The unit cube [-1,1]^n.
    pub fn unit(n: usize) -> Self {
        BoxDomain {
            lo: vec![-1.0; n],
            hi: vec![1.0; n],
        }
    }

    /// Same half-width interval on every axis.
    pub fn cube(n: usize, lo: f64, hi: f64) -> Result<Self, OracleError> {
        BoxDomain::new(vec![lo; n], vec![hi; n])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    /// Affine image of t in [-1,1]^n inside this box.
    pub fn from_unit(&self, t: &[f64]) -> Vec<f64> {
        t.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(&ti, (&a, &b))| 0.5 * (a + b) + 0.5 * (b - a) * ti)
            .collect()
    }

    /// Inverse of `from_unit`.
    pub fn to_unit(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(&xi, (&a, &b))| (2.0 * xi - (a + b)) / (b - a))
            .collect()
    }

    /// Half-width per axis (the Jacobian of `from_unit` is diag of these).
    pub fn half_widths(&self) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(&a, &b)| 0.5 * (b - a))
            .collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(&xi, (&a, &b))| xi >= a && xi <= b)
    }

    /// Splits into `per_axis^n` congruent sub-boxes, row-major order.
    pub fn split(&self, per_axis: usize) -> Vec<BoxDomain> {
        assert!(per_axis >= 1);
        let n = self.dim();
        let total = per_axis.pow(n as u32);
        let mut out = Vec::with_capacity(total);
        for flat in 0..total {
            let mut rem = flat;
            let mut lo = vec![0.0; n];
            let mut hi = vec![0.0; n];
            for a in (0..n).rev() {
                let cell = rem % per_axis;
                rem /= per_axis;
                let w = (self.hi[a] - self.lo[a]) / per_axis as f64;
                lo[a] = self.lo[a] + cell as f64 * w;
                hi[a] = lo[a] + w;
            }
            out.push(BoxDomain { lo, hi });
        }
        out
    }
}

/// Bounded noise injected into oracle replies. `UniformBounded` draws a
/// deterministic value in [-eta, eta] per (point, seed) pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NoiseModel {
    None,
    UniformBounded { seed: u64 },
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic draw in (-1, 1) from the bit pattern of the point.
fn unit_noise(x: &[f64], seed: u64) -> f64 {
    let mut h = splitmix64(seed ^ 0x5851_F42D_4C95_7F2D);
    for &v in x {
        h = splitmix64(h ^ v.to_bits());
    }
    let u = ((h >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64);
    2.0 * u - 1.0
}

/// The evaluation program: `evaluate(x, eta)` returns a value within `eta`
/// of f(x) (exactly f(x) under `NoiseModel::None`). Inputs live in
/// [-1,1]^n. Thread-safe; the call counter is atomic.
#[derive(Clone)]
pub struct Oracle {
    dim: usize,
    f: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    noise: NoiseModel,
    calls: Arc<AtomicU64>,
}

impl std::fmt::Debug for Oracle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Oracle")
            .field("dim", &self.dim)
            .field("noise", &self.noise)
            .field("calls", &self.call_count())
            .finish()
    }
}

impl Oracle {
    pub fn from_fn(dim: usize, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Oracle {
            dim,
            f: Arc::new(f),
            noise: NoiseModel::None,
            calls: Arc::new(AtomicU64::new(0)),
        }
    }

    /// Wraps a tensor Chebyshev polynomial as an exact oracle.
    pub fn from_poly(p: &TensorPoly) -> Self {
        let dense = p.dense();
        let dim = p.dim();
        Oracle::from_fn(dim, move |x| dense.eval(x))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn call_count(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }

    /// One oracle call. `eta_bar = 0` requests an exact value.
    pub fn evaluate(&self, x: &[f64], eta_bar: f64) -> f64 {
        debug_assert_eq!(x.len(), self.dim, "oracle point dimension");
        self.calls.fetch_add(1, Ordering::Relaxed);
        let y = (self.f)(x);
        match self.noise {
            NoiseModel::None => y,
            NoiseModel::UniformBounded { seed } => {
                if eta_bar > 0.0 {
                    y + eta_bar * unit_noise(x, seed)
                } else {
                    y
                }
            }
        }
    }

    /// Exact value, bypassing the noise model (used by polishing and by
    /// reference computations); still counted as a call.
    pub fn evaluate_exact(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim, "oracle point dimension");
        self.calls.fetch_add(1, Ordering::Relaxed);
        (self.f)(x)
    }
}

/// Built-in benchmark objectives from the experiment suite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Benchmark {
    Trefethen,
    DeJong5,
    Deuflhard2d,
    Deuflhard4d,
    HolderTable2,
    RandomPoly { n: usize, d: u32, seed: u64 },
}

impl Benchmark {
    pub fn dim(&self) -> usize {
        match self {
            Benchmark::Trefethen
            | Benchmark::DeJong5
            | Benchmark::Deuflhard2d
            | Benchmark::HolderTable2 => 2,
            Benchmark::Deuflhard4d => 4,
            Benchmark::RandomPoly { n, .. } => *n,
        }
    }

    /// The conventional study domain for each objective.
    pub fn default_domain(&self) -> BoxDomain {
        match self {
            Benchmark::Trefethen => BoxDomain::cube(2, -0.375, 0.375).unwrap(),
            Benchmark::DeJong5 => BoxDomain::cube(2, -50.0, 50.0).unwrap(),
            Benchmark::Deuflhard2d => BoxDomain::cube(2, -1.1, 1.1).unwrap(),
            Benchmark::Deuflhard4d => BoxDomain::cube(4, -1.1, 1.1).unwrap(),
            Benchmark::HolderTable2 => BoxDomain::cube(2, -10.0, 10.0).unwrap(),
            Benchmark::RandomPoly { n, .. } => BoxDomain::unit(*n),
        }
    }
}

impl FromStr for Benchmark {
    type Err = OracleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "trefethen" => Ok(Benchmark::Trefethen),
            "dejong5" => Ok(Benchmark::DeJong5),
            "deuflhard2d" => Ok(Benchmark::Deuflhard2d),
            "deuflhard4d" => Ok(Benchmark::Deuflhard4d),
            "holder_table2" => Ok(Benchmark::HolderTable2),
            other => {
                if let Some(rest) = other.strip_prefix("random_poly(") {
                    let rest = rest.strip_suffix(')').unwrap_or(rest);
                    let parts: Vec<&str> = rest.split(',').map(|p| p.trim()).collect();
                    if parts.len() == 3 {
                        if let (Ok(n), Ok(d), Ok(seed)) =
                            (parts[0].parse(), parts[1].parse(), parts[2].parse())
                        {
                            return Ok(Benchmark::RandomPoly { n, d, seed });
                        }
                    }
                }
                Err(OracleError::UnknownBenchmark(other.to_string()))
            }
        }
    }
}

pub fn trefethen(x: f64, y: f64) -> f64 {
    (50.0 * x).sin().exp()
        + (60.0 * y.exp()).sin()
        + (70.0 * x.sin()).sin()
        + ((80.0 * y).sin()).sin()
        - (10.0 * (x + y)).sin()
        + (x * x + y * y) / 4.0
}

/// De Jong #5 (Shekel's foxholes): the standard variant with 25 wells on
/// the 5x5 grid {-32,-16,0,16,32}^2.
pub fn dejong5(x: f64, y: f64) -> f64 {
    const A: [f64; 5] = [-32.0, -16.0, 0.0, 16.0, 32.0];
    let mut s = 0.002;
    for j in 0..25 {
        let a1 = A[j % 5];
        let a2 = A[j / 5];
        s += 1.0 / ((j + 1) as f64 + (x - a1).powi(6) + (y - a2).powi(6));
    }
    1.0 / s
}

pub fn deuflhard2d(x: f64, y: f64) -> f64 {
    let r = (x * x + y * y).exp() - 3.0;
    let u = x + y;
    let s = u - (3.0 * u).sin();
    r * r + s * s
}

pub fn deuflhard4d(x: &[f64]) -> f64 {
    deuflhard2d(x[0], x[1]) + deuflhard2d(x[2], x[3])
}

pub fn holder_table2(x: f64, y: f64) -> f64 {
    let r = (x * x + y * y).sqrt();
    -(x.sin() * y.cos() * (1.0 - r / std::f64::consts::PI).abs().exp()).abs()
}

/// Dense random polynomial in the tensor Chebyshev basis with i.i.d.
/// uniform [-1,1] coefficients.
pub fn random_tensor_poly(n: usize, d: u32, seed: u64) -> TensorPoly {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let coeffs: Vec<(MultiIndex, f64)> = multi_indices(n, d)
        .into_iter()
        .map(|i| (i, rng.gen_range(-1.0..1.0)))
        .collect();
    TensorPoly::from_coeffs(n, d, coeffs).expect("valid random polynomial")
}

/// Builds the named benchmark as an oracle on [-1,1]^n, evaluating the
/// closed form after the affine pullback to `domain`.
pub fn make_benchmark(bench: Benchmark, domain: &BoxDomain) -> Result<Oracle, OracleError> {
    if domain.dim() != bench.dim() {
        return Err(OracleError::DimensionMismatch {
            expected: bench.dim(),
            got: domain.dim(),
        });
    }
    let raw = match bench {
        Benchmark::Trefethen => Oracle::from_fn(2, |x| trefethen(x[0], x[1])),
        Benchmark::DeJong5 => Oracle::from_fn(2, |x| dejong5(x[0], x[1])),
        Benchmark::Deuflhard2d => Oracle::from_fn(2, |x| deuflhard2d(x[0], x[1])),
        Benchmark::Deuflhard4d => Oracle::from_fn(4, deuflhard4d),
        Benchmark::HolderTable2 => Oracle::from_fn(2, |x| holder_table2(x[0], x[1])),
        Benchmark::RandomPoly { n, d, seed } => Oracle::from_poly(&random_tensor_poly(n, d, seed)),
    };
    rescale(&raw, domain)
}

/// Composes the oracle with the affine map [-1,1]^n -> box, so that the
/// result reads its argument in [-1,1]^n. Local minimizers correspond
/// bijectively under the map. The call counter starts fresh.
pub fn rescale(o: &Oracle, bx: &BoxDomain) -> Result<Oracle, OracleError> {
    if bx.dim() != o.dim {
        return Err(OracleError::DimensionMismatch {
            expected: o.dim,
            got: bx.dim(),
        });
    }
    let inner = o.f.clone();
    let bx = bx.clone();
    Ok(Oracle {
        dim: o.dim,
        f: Arc::new(move |t: &[f64]| inner(&bx.from_unit(t))),
        noise: o.noise,
        calls: Arc::new(AtomicU64::new(0)),
    })
}

/// Attaches a noise model; values become f(x) + u with |u| <= eta_bar,
/// u deterministic per (point, seed).
pub fn with_noise(o: &Oracle, model: NoiseModel) -> Oracle {
    Oracle {
        dim: o.dim,
        f: o.f.clone(),
        noise: model,
        calls: Arc::new(AtomicU64::new(0)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deuflhard_at_origin() {
        assert!((deuflhard2d(0.0, 0.0) - 4.0).abs() < 1e-15);
    }

    #[test]
    fn holder_at_origin() {
        assert_eq!(holder_table2(0.0, 0.0), 0.0);
    }

    #[test]
    fn trefethen_at_origin() {
        // exp(sin 0) + sin(60 e^0) + sin(70 sin 0) + sin(sin 0) - sin 0 + 0
        let want = 1.0 + 60.0f64.sin();
        let got = trefethen(0.0, 0.0);
        assert!((got - want).abs() < 1e-15);
        assert!((got - 0.6951893).abs() < 1e-6);
    }

    #[test]
    fn rescale_identity_box() {
        let o = make_benchmark(Benchmark::Deuflhard2d, &BoxDomain::cube(2, -1.1, 1.1).unwrap())
            .unwrap();
        let id = rescale(&o, &BoxDomain::unit(2)).unwrap();
        let mut rng = <ChaCha12Rng as rand::SeedableRng>::seed_from_u64(1);
        for _ in 0..10 {
            let x = [
                rand::Rng::gen_range(&mut rng, -1.0..1.0),
                rand::Rng::gen_range(&mut rng, -1.0..1.0),
            ];
            assert_eq!(o.evaluate(&x, 0.0), id.evaluate(&x, 0.0));
        }
    }

    #[test]
    fn rescale_affine_1d() {
        let f = Oracle::from_fn(1, |x| x[0]);
        let g = rescale(&f, &BoxDomain::new(vec![0.0], vec![2.0]).unwrap()).unwrap();
        assert!((g.evaluate(&[-1.0], 0.0) - 0.0).abs() < 1e-15);
        assert!((g.evaluate(&[1.0], 0.0) - 2.0).abs() < 1e-15);
        assert!((g.evaluate(&[0.0], 0.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn box_roundtrip() {
        let bx = BoxDomain::cube(2, -50.0, 50.0).unwrap();
        let pts = [[-32.0, 16.0], [0.0, 0.0], [49.0, -49.0]];
        for p in pts {
            let t = bx.to_unit(&p);
            assert!(t.iter().all(|v| v.abs() <= 1.0));
            let back = bx.from_unit(&t);
            for (a, b) in p.iter().zip(&back) {
                assert!((a - b).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn degenerate_box_rejected() {
        assert!(BoxDomain::new(vec![1.0], vec![1.0]).is_err());
        assert!(BoxDomain::new(vec![2.0], vec![1.0]).is_err());
    }

    #[test]
    fn noise_respects_bound_and_determinism() {
        let o = Oracle::from_fn(2, |x| x[0] + x[1]);
        let noisy = with_noise(&o, NoiseModel::UniformBounded { seed: 5 });
        let mut rng = <ChaCha12Rng as rand::SeedableRng>::seed_from_u64(2);
        for _ in 0..10_000 {
            let x = [
                rand::Rng::gen_range(&mut rng, -1.0..1.0),
                rand::Rng::gen_range(&mut rng, -1.0..1.0),
            ];
            let exact = x[0] + x[1];
            let y = noisy.evaluate(&x, 0.1);
            assert!((y - exact).abs() <= 0.1);
            assert_eq!(y, noisy.evaluate(&x, 0.1), "noise must be reproducible");
        }
        // zero requested noise returns exact values
        assert_eq!(noisy.evaluate(&[0.25, 0.5], 0.0), 0.75);
        // model None is exact everywhere
        let clean = with_noise(&noisy, NoiseModel::None);
        assert_eq!(clean.evaluate(&[0.25, 0.5], 0.1), 0.75);
    }

    #[test]
    fn call_counting() {
        let o = Oracle::from_fn(1, |x| x[0]);
        assert_eq!(o.call_count(), 0);
        o.evaluate(&[0.5], 0.0);
        o.evaluate(&[0.25], 0.0);
        o.evaluate_exact(&[0.1]);
        assert_eq!(o.call_count(), 3);
    }

    #[test]
    fn benchmark_names_parse() {
        assert_eq!("dejong5".parse::<Benchmark>().unwrap(), Benchmark::DeJong5);
        assert_eq!(
            "random_poly(3,6,9)".parse::<Benchmark>().unwrap(),
            Benchmark::RandomPoly { n: 3, d: 6, seed: 9 }
        );
        assert!("nope".parse::<Benchmark>().is_err());
    }

    #[test]
    fn benchmark_dim_mismatch() {
        let bad = make_benchmark(Benchmark::Deuflhard4d, &BoxDomain::unit(2));
        assert!(matches!(bad, Err(OracleError::DimensionMismatch { .. })));
    }

    #[test]
    fn dejong_well_region() {
        // each well sits near its grid node and is far below the plateau
        let plateau = dejong5(-50.0, -50.0);
        assert!(plateau > 400.0);
        assert!(dejong5(-32.0, -32.0) < 2.0);
        assert!(dejong5(16.0, 0.0) < 25.0);
    }
}
