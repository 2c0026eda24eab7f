//! End-to-end pipelines: the one-shot run with a known parameter budget,
//! the adaptive run that escalates the regularity constants until an
//! empirical error check passes, box-splitting, quasi-Newton polishing,
//! and capture metrics against reference point sets.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cheb::TensorPoly;
use crate::dlsp::{self, FitMethod, FitReport};
use crate::oracle::{rescale, BoxDomain, Oracle};
use crate::planner::{self, Plan, PlanError};
use crate::psolve::{
    self, CriticalPoint, IntervalBox, Kind, SolveOptions, SolveStatus,
};
use crate::sampling::{sample_iid, tensor_grid, Provenance, SampleSet};

#[derive(Debug, Error)]
pub enum DriverError {
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Fit(#[from] crate::dlsp::DlspError),
    #[error(transparent)]
    Solve(#[from] crate::psolve::PsolveError),
    #[error("solver did not complete: {status:?} ({unresolved} unresolved boxes)")]
    SolveFailed {
        status: SolveStatus,
        unresolved: usize,
    },
    #[error("adaptive loop exceeded {rounds} rounds (last theta {theta:.3e}, theta' {theta_prime:.3e})")]
    MaxRoundsExceeded {
        rounds: usize,
        theta: f64,
        theta_prime: f64,
    },
    #[error("oracle dimension {oracle} does not match plan dimension {plan}")]
    DimMismatch { oracle: usize, plan: usize },
    #[error("capture statistics need a nonempty {0} set")]
    EmptyPointSet(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SamplingMode {
    Iid { seed: u64 },
    Grid,
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub method: FitMethod,
    pub solve: SolveOptions,
    /// Polish found minimizers with exact-oracle quasi-Newton descent.
    pub polish: bool,
    pub polish_iters: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            method: FitMethod::Orthogonal,
            solve: SolveOptions::default(),
            polish: false,
            polish_iters: 200,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdaptiveRound {
    pub a1: f64,
    pub a2: f64,
    pub lambda: f64,
    pub theta: f64,
    pub theta_prime: f64,
    pub d: u32,
    pub k_planned: u128,
    pub k_used: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunResult {
    /// Locations of Minimizer-kind critical points (centers of eps-balls).
    pub minimizers: Vec<Vec<f64>>,
    /// Quasi-Newton refinements of the minimizers (when polishing is on).
    pub polished: Option<Vec<Vec<f64>>>,
    pub all_critical: Vec<CriticalPoint>,
    pub plan_used: Plan,
    pub fit: FitReport,
    pub oracle_calls: u64,
    pub adaptive_trace: Vec<AdaptiveRound>,
    pub solve_status: SolveStatus,
    pub unresolved_boxes: usize,
}

/// Per-reference-minimizer capture distances.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CaptureStats {
    pub distances: Vec<f64>,
    pub max: f64,
    pub mean: f64,
    pub captured_count: usize,
    pub threshold: f64,
}

fn clamp_k(k: u128) -> u64 {
    u64::try_from(k).unwrap_or(u64::MAX)
}

/// Smallest grid size whose tensor power reaches `k` points.
pub fn grid_side_for(k: u64, n: usize) -> usize {
    let mut m = (k as f64).powf(1.0 / n as f64).floor().max(1.0) as usize;
    while (m as u64).checked_pow(n as u32).map_or(true, |t| t < k) {
        m += 1;
    }
    m
}

fn draw_samples(n: usize, k: u64, mode: SamplingMode, salt: u64) -> SampleSet {
    match mode {
        SamplingMode::Grid => tensor_grid(n, grid_side_for(k, n) + usize::try_from(salt).unwrap_or(0)),
        SamplingMode::Iid { seed } => sample_iid(
            n,
            usize::try_from(k).unwrap_or(usize::MAX),
            seed.wrapping_add(salt.wrapping_mul(0x9E37_79B9_7F4A_7C15)),
        ),
    }
}

fn oracle_values(o: &Oracle, samples: &SampleSet, eta: f64) -> Vec<f64> {
    (0..samples.len())
        .into_par_iter()
        .map(|i| o.evaluate(samples.point(i), eta))
        .collect()
}

/// One-shot pipeline: sample, query, fit at the plan's degree, solve the
/// gradient system at accuracy eps/2, classify, and return the minimizers.
pub fn minimizers_regular(
    o: &Oracle,
    plan: &Plan,
    mode: SamplingMode,
    opts: &RunOptions,
) -> Result<RunResult, DriverError> {
    if o.dim() != plan.n {
        return Err(DriverError::DimMismatch {
            oracle: o.dim(),
            plan: plan.n,
        });
    }
    let calls0 = o.call_count();
    let samples = draw_samples(plan.n, clamp_k(plan.k), mode, 0);
    let values = oracle_values(o, &samples, plan.eta_bar);
    let fit = dlsp::fit(&samples, &values, plan.d, opts.method)?;
    let (points, status, unresolved) = solve_classified(&fit.poly, plan.eps, &opts.solve)?;
    if status != SolveStatus::Complete {
        return Err(DriverError::SolveFailed {
            status,
            unresolved,
        });
    }
    finish_run(
        o,
        plan.clone(),
        fit,
        points,
        status,
        unresolved,
        Vec::new(),
        calls0,
        opts,
    )
}

fn solve_classified(
    w: &TensorPoly,
    eps: f64,
    solve_opts: &SolveOptions,
) -> Result<(Vec<CriticalPoint>, SolveStatus, usize), DriverError> {
    let grads = psolve::gradient(w);
    let out = psolve::solve_with(
        &grads,
        &IntervalBox::unit(w.dim()),
        eps / 2.0,
        solve_opts,
    )?;
    Ok((out.points, out.status, out.unresolved_boxes.len()))
}

#[allow(clippy::too_many_arguments)]
fn finish_run(
    o: &Oracle,
    plan_used: Plan,
    fit: FitReport,
    points: Vec<CriticalPoint>,
    solve_status: SolveStatus,
    unresolved_boxes: usize,
    adaptive_trace: Vec<AdaptiveRound>,
    calls0: u64,
    opts: &RunOptions,
) -> Result<RunResult, DriverError> {
    let minimizers: Vec<Vec<f64>> = points
        .iter()
        .filter(|p| p.kind == Kind::Minimizer)
        .map(|p| p.location.clone())
        .collect();
    let polished = if opts.polish {
        Some(
            minimizers
                .par_iter()
                .map(|x| polish(o, x, opts.polish_iters))
                .collect(),
        )
    } else {
        None
    };
    Ok(RunResult {
        minimizers,
        polished,
        all_critical: points,
        plan_used,
        fit,
        oracle_calls: o.call_count() - calls0,
        adaptive_trace,
        solve_status,
        unresolved_boxes,
    })
}

/// Mass-normalized discrete L2 error of `w` against the oracle over the
/// sample set: a Riemann sum over grid cells when the samples form a
/// tensor grid, the plain mean of squared deviations otherwise.
pub fn error_check(w: &TensorPoly, o: &Oracle, samples: &SampleSet) -> f64 {
    assert!(!samples.is_empty(), "error check needs samples");
    match *samples.provenance() {
        Provenance::Grid { points_per_axis } => {
            let raw = dlsp::discrete_l2_error(w, o, samples).expect("grid provenance");
            // normalize by the mass actually covered by the Riemann cells
            let m = points_per_axis as f64;
            let covered =
                (crate::cheb::MU_MASS_1D * (m - 1.0) / m).powi(samples.dim() as i32);
            raw / covered
        }
        Provenance::Iid { .. } => {
            let dense = w.dense();
            let ss: f64 = (0..samples.len())
                .into_par_iter()
                .map(|i| {
                    let x = samples.point(i);
                    let r = o.evaluate(x, 0.0) - dense.eval(x);
                    r * r
                })
                .sum();
            ss / samples.len() as f64
        }
    }
}

#[derive(Debug, Clone)]
pub struct AdaptiveOptions {
    /// Tolerance of the empirical error stop test (defaults to eps).
    pub tol: Option<f64>,
    pub max_rounds: usize,
    pub delta: f64,
    /// Executability guard on the theorem's sample-count formula, which
    /// grows like D^(4 beta); runs cap the drawn samples at this value.
    pub sample_cap: u64,
    pub mode: SamplingMode,
    pub run: RunOptions,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        AdaptiveOptions {
            tol: None,
            max_rounds: 20,
            delta: 0.5,
            sample_cap: 1_000_000,
            mode: SamplingMode::Grid,
            run: RunOptions::default(),
        }
    }
}

/// Adaptive pipeline: guesses the regularity constants by escalation.
/// Each round plans a budget from the current (lambda, A1, A2), fits the
/// planned degree, measures the error theta on fresh samples and theta'
/// of a degree-(d+1) cross-check fit on twice as many fresh samples at
/// half the noise, and stops once both fall below the tolerance; the
/// constants double (and lambda halves) otherwise. A vanishing gradient
/// is reported as an empty result rather than an error.
pub fn minimizers_adaptive(
    o: &Oracle,
    eps: f64,
    alpha: f64,
    opts: &AdaptiveOptions,
) -> Result<RunResult, DriverError> {
    let n = o.dim();
    let t = opts.tol.unwrap_or(eps);
    let m = 3u32.max((planner::beta() * n as f64 + 1.0).ceil() as u32);
    let calls0 = o.call_count();
    // escalation starts from the cheapest plan (degree clamps to 2) and
    // raises the degree monotonically; see the decisions record for why
    // the loop starts at lambda = 2^16 rather than its reciprocal
    let mut lambda = 65536.0f64;
    let mut a1 = 2.0f64;
    let mut a2 = 2.0f64;
    let mut trace: Vec<AdaptiveRound> = Vec::new();
    for round in 0..opts.max_rounds {
        let plan = planner::plan(n, m, eps, alpha, opts.delta, lambda, a1, a2)?;
        let k_used = clamp_k(plan.k).min(opts.sample_cap);
        let salt = round as u64;
        let fit_samples = draw_samples(n, k_used, opts.mode, salt * 3);
        let values = oracle_values(o, &fit_samples, plan.eta_bar);
        let fit = dlsp::fit(&fit_samples, &values, plan.d, opts.run.method)?;
        let err_samples = draw_samples(n, k_used, opts.mode, salt * 3 + 1);
        let theta = error_check(&fit.poly, o, &err_samples);
        let check_samples = draw_samples(n, 2 * k_used, opts.mode, salt * 3 + 2);
        let check_values = oracle_values(o, &check_samples, plan.eta_bar / 2.0);
        let fit_up = dlsp::fit(&check_samples, &check_values, plan.d + 1, opts.run.method)?;
        let theta_prime = error_check(&fit_up.poly, o, &check_samples);
        trace.push(AdaptiveRound {
            a1,
            a2,
            lambda,
            theta,
            theta_prime,
            d: plan.d,
            k_planned: plan.k,
            k_used: fit_samples.len(),
        });
        if theta < t && theta_prime < t {
            let (points, status, unresolved) = solve_classified(&fit.poly, eps, &opts.run.solve)?;
            match status {
                SolveStatus::Complete => {}
                SolveStatus::FailNonFinite if fit.poly.is_zero() || all_gradients_zero(&fit.poly) => {
                    // constant approximant: no isolated minimizers to report
                    return finish_run(
                        o,
                        plan,
                        fit,
                        Vec::new(),
                        status,
                        unresolved,
                        trace,
                        calls0,
                        &opts.run,
                    );
                }
                _ => {
                    return Err(DriverError::SolveFailed {
                        status,
                        unresolved,
                    })
                }
            }
            return finish_run(
                o,
                plan,
                fit,
                points,
                status,
                unresolved,
                trace,
                calls0,
                &opts.run,
            );
        }
        a1 *= 2.0;
        a2 *= 2.0;
        lambda /= 2.0;
    }
    let last = trace.last();
    Err(DriverError::MaxRoundsExceeded {
        rounds: opts.max_rounds,
        theta: last.map(|r| r.theta).unwrap_or(f64::NAN),
        theta_prime: last.map(|r| r.theta_prime).unwrap_or(f64::NAN),
    })
}

fn all_gradients_zero(w: &TensorPoly) -> bool {
    (0..w.dim()).all(|a| w.partial(a).map(|g| g.is_zero()).unwrap_or(false))
}

/// Quasi-Newton (BFGS) descent on exact oracle values with central
/// finite-difference gradients, projected into [-1,1]^n. Steps are capped
/// so the refinement stays in the starting basin. Stops when the gradient
/// estimate drops to 1e-7 in sup norm or at the iteration cap.
pub fn polish(o: &Oracle, x0: &[f64], iters: usize) -> Vec<f64> {
    let n = x0.len();
    let h = 1e-6;
    let max_step = 0.05;
    let clamp = |x: &mut [f64]| {
        for v in x.iter_mut() {
            *v = v.clamp(-1.0, 1.0);
        }
    };
    let grad = |x: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|a| {
                let mut xp = x.to_vec();
                let mut xm = x.to_vec();
                xp[a] = (x[a] + h).min(1.0);
                xm[a] = (x[a] - h).max(-1.0);
                let dv = xp[a] - xm[a];
                if dv <= 0.0 {
                    return 0.0;
                }
                (o.evaluate_exact(&xp) - o.evaluate_exact(&xm)) / dv
            })
            .collect()
    };
    let mut x = x0.to_vec();
    clamp(&mut x);
    let mut f = o.evaluate_exact(&x);
    let mut g = grad(&x);
    let mut hinv = vec![0.0; n * n];
    let g0n = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    let init_scale = if g0n > 1.0 { 1.0 / g0n } else { 1.0 };
    for i in 0..n {
        hinv[i * n + i] = init_scale;
    }
    for _ in 0..iters {
        let gn = g.iter().map(|v| v.abs()).fold(0.0, f64::max);
        if gn <= 1e-7 {
            break;
        }
        let mut p = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                p[i] -= hinv[i * n + j] * g[j];
            }
        }
        let descent: f64 = p.iter().zip(&g).map(|(a, b)| a * b).sum();
        if descent >= 0.0 {
            for (i, v) in p.iter_mut().enumerate() {
                *v = -g[i] * init_scale;
            }
        }
        let pn = p.iter().map(|v| v * v).sum::<f64>().sqrt();
        if pn > max_step {
            let s = max_step / pn;
            for v in p.iter_mut() {
                *v *= s;
            }
        }
        let mut alpha = 1.0f64;
        let mut stepped = false;
        let gdotp: f64 = g.iter().zip(&p).map(|(a, b)| a * b).sum();
        for _ in 0..40 {
            let mut xn = x.clone();
            for (a, v) in xn.iter_mut().enumerate() {
                *v += alpha * p[a];
            }
            clamp(&mut xn);
            let fn_ = o.evaluate_exact(&xn);
            if fn_ <= f + 1e-4 * alpha * gdotp || fn_ < f {
                let gn_new = grad(&xn);
                // BFGS update on the actually realized step
                let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
                let y: Vec<f64> = gn_new.iter().zip(&g).map(|(a, b)| a - b).collect();
                let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
                let ss: f64 = s.iter().map(|v| v * v).sum::<f64>().sqrt();
                let yy: f64 = y.iter().map(|v| v * v).sum::<f64>().sqrt();
                if sy > 1e-12 * ss * yy {
                    bfgs_update(&mut hinv, &s, &y, sy, n);
                }
                x = xn;
                f = fn_;
                g = gn_new;
                stepped = true;
                break;
            }
            alpha *= 0.5;
        }
        if !stepped {
            break;
        }
    }
    x
}

fn bfgs_update(hinv: &mut [f64], s: &[f64], y: &[f64], sy: f64, n: usize) {
    // H <- (I - s y^T / sy) H (I - y s^T / sy) + s s^T / sy
    let mut hy = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            hy[i] += hinv[i * n + j] * y[j];
        }
    }
    let yhy: f64 = y.iter().zip(&hy).map(|(a, b)| a * b).sum();
    for i in 0..n {
        for j in 0..n {
            hinv[i * n + j] += -(s[i] * hy[j] + hy[i] * s[j]) / sy
                + (1.0 + yhy / sy) * s[i] * s[j] / sy;
        }
    }
}

/// Distance of each reference point to its nearest found point; a
/// reference is captured when that distance is at most `threshold`.
pub fn capture_stats(
    found: &[Vec<f64>],
    reference: &[Vec<f64>],
    threshold: f64,
) -> Result<CaptureStats, DriverError> {
    if reference.is_empty() {
        return Err(DriverError::EmptyPointSet("reference"));
    }
    if found.is_empty() {
        return Err(DriverError::EmptyPointSet("found"));
    }
    let distances: Vec<f64> = reference
        .iter()
        .map(|r| {
            found
                .iter()
                .map(|f| crate::bruteforce::euclid(r, f))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let max = distances.iter().copied().fold(0.0, f64::max);
    let mean = distances.iter().sum::<f64>() / distances.len() as f64;
    let captured_count = distances.iter().filter(|&&d| d <= threshold).count();
    Ok(CaptureStats {
        distances,
        max,
        mean,
        captured_count,
        threshold,
    })
}

/// A split run: the box is divided into `per_axis^n` congruent cells,
/// each fitted and solved independently after affine pullback, and the
/// merged critical points deduped at radius eps/4.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitRun {
    pub merged_critical: Vec<CriticalPoint>,
    pub minimizers: Vec<Vec<f64>>,
    pub polished: Option<Vec<Vec<f64>>>,
    pub oracle_calls: u64,
    pub status: SolveStatus,
    pub cells: Vec<RunResult>,
}

pub fn minimizers_split(
    o: &Oracle,
    plan: &Plan,
    per_axis: usize,
    mode: SamplingMode,
    opts: &RunOptions,
) -> Result<SplitRun, DriverError> {
    assert!(per_axis >= 1);
    let n = plan.n;
    let global = BoxDomain::unit(n);
    let cells_boxes = global.split(per_axis);
    let mut cells = Vec::with_capacity(cells_boxes.len());
    let mut merged: Vec<CriticalPoint> = Vec::new();
    let mut calls = 0u64;
    let mut status = SolveStatus::Complete;
    let margin = opts.solve.boundary_margin;
    // cells overlap by a few percent so critical points that drift across
    // a split plane in one cell's approximant are still recovered
    let overlap = 0.04;
    for cb in &cells_boxes {
        let w: Vec<f64> = cb
            .lo()
            .iter()
            .zip(cb.hi())
            .map(|(a, b)| overlap * 0.5 * (b - a))
            .collect();
        let lo: Vec<f64> = cb.lo().iter().zip(&w).map(|(a, e)| a - e).collect();
        let hi: Vec<f64> = cb.hi().iter().zip(&w).map(|(b, e)| b + e).collect();
        let cbo = BoxDomain::new(lo, hi).expect("overlapped cell");
        let oc = rescale(o, &cbo).expect("cell box dimension");
        let cell_opts = RunOptions {
            polish: false,
            ..opts.clone()
        };
        let run = minimizers_regular(&oc, plan, mode, &cell_opts)?;
        calls += run.oracle_calls;
        if run.solve_status != SolveStatus::Complete {
            status = run.solve_status;
        }
        let hw = cbo.half_widths();
        let min_hw = hw.iter().cloned().fold(f64::INFINITY, f64::min);
        for p in &run.all_critical {
            let loc = cbo.from_unit(&p.location);
            if !IntervalBox::unit(n).contains_with_margin(&loc, margin) {
                continue;
            }
            merged.push(CriticalPoint {
                boundary_proximal: IntervalBox::unit(n).boundary_distance(&loc) < margin,
                location: loc,
                certified_radius: p.certified_radius * min_hw,
                ..p.clone()
            });
        }
        cells.push(run);
    }
    let merged = psolve::dedupe(merged, plan.eps / 4.0);
    let minimizers: Vec<Vec<f64>> = merged
        .iter()
        .filter(|p| p.kind == Kind::Minimizer)
        .map(|p| p.location.clone())
        .collect();
    let polished = if opts.polish {
        Some(
            minimizers
                .par_iter()
                .map(|x| polish(o, x, opts.polish_iters))
                .collect(),
        )
    } else {
        None
    };
    Ok(SplitRun {
        merged_critical: merged,
        minimizers,
        polished,
        oracle_calls: calls,
        status,
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{random_tensor_poly, Oracle};

    #[test]
    fn regular_run_on_1d_square() {
        // f(x) = x^2: single minimizer at the origin
        let o = Oracle::from_fn(1, |x| x[0] * x[0]);
        let plan = Plan::forced(1, 1e-6, 2, 0.0, 16);
        let run =
            minimizers_regular(&o, &plan, SamplingMode::Grid, &RunOptions::default()).unwrap();
        assert_eq!(run.minimizers.len(), 1);
        assert!(run.minimizers[0][0].abs() <= 1e-8);
        assert_eq!(run.solve_status, SolveStatus::Complete);
    }

    #[test]
    fn oracle_budget_is_sample_count() {
        let o = Oracle::from_fn(2, |x| x[0] * x[0] + x[1] * x[1]);
        let plan = Plan::forced(2, 1e-4, 2, 0.0, 100);
        let run =
            minimizers_regular(&o, &plan, SamplingMode::Grid, &RunOptions::default()).unwrap();
        // grid mode rounds the sample budget up to the next tensor grid
        assert_eq!(run.oracle_calls, 100);
        let run2 = minimizers_regular(
            &o,
            &plan,
            SamplingMode::Iid { seed: 3 },
            &RunOptions::default(),
        )
        .unwrap();
        assert_eq!(run2.oracle_calls, 100);
    }

    #[test]
    fn error_check_interpolation_is_tiny() {
        let p = random_tensor_poly(2, 3, 4);
        let o = Oracle::from_poly(&p);
        let s = tensor_grid(2, 12);
        let vals: Vec<f64> = s.iter().map(|x| o.evaluate(x, 0.0)).collect();
        let fit = dlsp::fit(&s, &vals, 3, FitMethod::Orthogonal).unwrap();
        let fresh = tensor_grid(2, 13);
        assert!(error_check(&fit.poly, &o, &fresh) <= 1e-12);
    }

    #[test]
    fn error_check_constant_offset() {
        let w = TensorPoly::zero(1, 0);
        let o = Oracle::from_fn(1, |_| 2.5);
        let s = tensor_grid(1, 60);
        let theta = error_check(&w, &o, &s);
        assert!((theta - 6.25).abs() <= 1e-9, "theta {theta}");
        let s_iid = sample_iid(1, 500, 8);
        let theta2 = error_check(&w, &o, &s_iid);
        assert!((theta2 - 6.25).abs() <= 1e-12);
    }

    #[test]
    fn polish_quadratic_bowl() {
        let o = Oracle::from_fn(2, |x| x[0] * x[0] + x[1] * x[1]);
        let x = polish(&o, &[0.3, -0.2], 100);
        assert!(crate::bruteforce::euclid(&x, &[0.0, 0.0]) <= 1e-6);
        // an exact minimizer stays put
        let y = polish(&o, &[0.0, 0.0], 100);
        assert!(crate::bruteforce::euclid(&y, &[0.0, 0.0]) <= 1e-10);
    }

    #[test]
    fn capture_stats_basics() {
        let a = vec![vec![0.0, 0.0], vec![1.0, 1.0]];
        let s = capture_stats(&a, &a, 0.1).unwrap();
        assert_eq!(s.captured_count, 2);
        assert_eq!(s.max, 0.0);
        assert!(capture_stats(&a, &[], 0.1).is_err());
        assert!(capture_stats(&[], &a, 0.1).is_err());
    }

    #[test]
    fn adaptive_on_cubic_polynomial() {
        // degree-3 objective: the loop escalates until the planned degree
        // reaches 3, where the fit reproduces the objective exactly
        let p = random_tensor_poly(2, 3, 11);
        let o = Oracle::from_poly(&p);
        let opts = AdaptiveOptions {
            tol: Some(1e-6),
            sample_cap: 20_000,
            ..AdaptiveOptions::default()
        };
        let run = minimizers_adaptive(&o, 0.1, 0.05, &opts).unwrap();
        assert!(run.plan_used.d >= 3, "stopped at degree {}", run.plan_used.d);
        assert_eq!(run.solve_status, SolveStatus::Complete);
        // reference minimizers from the brute-force side
        let reference: Vec<Vec<f64>> = crate::bruteforce::poly_critical_points(
            &p,
            &crate::bruteforce::RefOptions::default(),
        )
        .into_iter()
        .filter(|x| {
            let (kind, _) = psolve::classify(&p, x, 1e-8);
            kind == Kind::Minimizer
        })
        .collect();
        if !reference.is_empty() {
            let stats = capture_stats(&run.minimizers, &reference, 1e-6).unwrap();
            assert_eq!(stats.captured_count, reference.len(), "{stats:?}");
        }
    }

    #[test]
    fn adaptive_on_zero_oracle() {
        let o = Oracle::from_fn(2, |_| 0.0);
        let opts = AdaptiveOptions {
            tol: Some(1e-9),
            sample_cap: 5_000,
            ..AdaptiveOptions::default()
        };
        let run = minimizers_adaptive(&o, 0.1, 0.05, &opts).unwrap();
        assert!(run.minimizers.is_empty());
        assert_eq!(run.solve_status, SolveStatus::FailNonFinite);
        assert_eq!(run.adaptive_trace.len(), 1);
    }

    #[test]
    fn split_matches_whole_box_on_separable_objective() {
        // separable quartic: critical points on the split planes are the
        // stress case for merging
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
        let o = Oracle::from_poly(&f);
        let plan = Plan::forced(2, 1e-5, 4, 0.0, 400);
        let whole =
            minimizers_regular(&o, &plan, SamplingMode::Grid, &RunOptions::default()).unwrap();
        let split =
            minimizers_split(&o, &plan, 2, SamplingMode::Grid, &RunOptions::default()).unwrap();
        assert_eq!(whole.minimizers.len(), 4);
        assert_eq!(split.minimizers.len(), 4, "{:?}", split.minimizers);
        for m in &whole.minimizers {
            let d = split
                .minimizers
                .iter()
                .map(|q| crate::bruteforce::euclid(m, q))
                .fold(f64::INFINITY, f64::min);
            assert!(d <= 1e-6, "split/whole disagree at {m:?} by {d}");
        }
    }

    use crate::sampling::{sample_iid, tensor_grid};
}
