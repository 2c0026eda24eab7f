//! Complete enumeration of the real solutions of a square polynomial
//! system inside a box, with interval-Newton (Krawczyk) certification,
//! followed by Hessian classification of critical points.
//!
//! The solver is a branch-and-prune over cells carrying local Chebyshev
//! re-expansions of every component: a cell dies when some component's
//! range enclosure excludes zero, is resolved when the Krawczyk operator
//! contracts strictly (existence and uniqueness certified), and is
//! bisected otherwise. Cells that shrink to the numerical floor without
//! a certificate are clustered and polished by damped Newton, and kept
//! only if the residual validates them.

pub mod interval;
pub mod jacobi;
mod local;

use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cheb::{DenseCheb, TensorPoly};
use interval::Interval;
use local::LocalPoly;

#[derive(Debug, Error)]
pub enum PsolveError {
    #[error("system must be square: {polys} polynomials in {vars} variables")]
    NonSquare { polys: usize, vars: usize },
    #[error("accuracy must be positive, got {0}")]
    BadAccuracy(f64),
    #[error("box does not lie inside [-1,1]^n")]
    InvalidBox,
    #[error(transparent)]
    Cheb(#[from] crate::cheb::ChebError),
}

/// A closed axis-aligned cell inside [-1,1]^n.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl IntervalBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        assert_eq!(lo.len(), hi.len());
        debug_assert!(lo.iter().zip(&hi).all(|(a, b)| a <= b));
        IntervalBox { lo, hi }
    }

    pub fn unit(n: usize) -> Self {
        IntervalBox {
            lo: vec![-1.0; n],
            hi: vec![1.0; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn max_width(&self) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| b - a)
            .fold(0.0, f64::max)
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| 0.5 * (a + b))
            .collect()
    }

    pub fn contains_with_margin(&self, x: &[f64], margin: f64) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(&xi, (&a, &b))| xi >= a - margin && xi <= b + margin)
    }

    /// Distance to the boundary (negative outside).
    pub fn boundary_distance(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(&xi, (&a, &b))| (xi - a).min(b - xi))
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Kind {
    Minimizer,
    Maximizer,
    Saddle,
    Degenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub location: Vec<f64>,
    /// Radius of a ball certified (by the Krawczyk operator) to contain
    /// exactly one solution; 0 for heuristic, residual-validated points.
    pub certified_radius: f64,
    pub kind: Kind,
    /// Hessian eigenvalues sorted ascending.
    pub hess_eigs: Vec<f64>,
    pub boundary_proximal: bool,
    /// Sup-norm of the system at the location.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Complete,
    FailNonFinite,
    BudgetExceeded,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveOutcome {
    pub status: SolveStatus,
    pub points: Vec<CriticalPoint>,
    pub unresolved_boxes: Vec<IntervalBox>,
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Cap on processed cells before aborting with BudgetExceeded.
    pub budget: u64,
    /// Cap on stalled (tiny, uncertified) cells before declaring the
    /// solution set non-finite.
    pub stall_budget: u64,
    /// Roots within this distance of the box boundary are flagged.
    pub boundary_margin: f64,
    /// |eigenvalue| at or below this is treated as zero curvature.
    pub classification_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            budget: 10_000_000,
            stall_budget: 100_000,
            boundary_margin: 1e-9,
            classification_tol: 1e-8,
        }
    }
}

/// The gradient system of `p`: one partial derivative per axis.
pub fn gradient(p: &TensorPoly) -> Vec<TensorPoly> {
    (0..p.dim())
        .map(|a| p.partial(a).expect("axis in range"))
        .collect()
}

/// Classifies a point by the eigenvalue signs of the Hessian of `p`,
/// assembled from repeated differentiation and evaluated entry-wise.
pub fn classify(p: &TensorPoly, x: &[f64], tol: f64) -> (Kind, Vec<f64>) {
    let n = p.dim();
    let firsts = gradient(p);
    let mut h = vec![0.0; n * n];
    for (i, gi) in firsts.iter().enumerate() {
        for j in i..n {
            let v = gi
                .partial(j)
                .expect("axis in range")
                .eval(x)
                .expect("dimension checked");
            h[i * n + j] = v;
            h[j * n + i] = v;
        }
    }
    let eigs = jacobi::symmetric_eigenvalues(&h, n);
    (kind_from_eigs(&eigs, tol), eigs)
}

pub(crate) fn kind_from_eigs(eigs: &[f64], tol: f64) -> Kind {
    if eigs.iter().any(|e| e.abs() <= tol) {
        Kind::Degenerate
    } else if eigs.iter().all(|&e| e > 0.0) {
        Kind::Minimizer
    } else if eigs.iter().all(|&e| e < 0.0) {
        Kind::Maximizer
    } else {
        Kind::Saddle
    }
}

/// Greedy clustering by ascending residual: keeps points pairwise farther
/// apart than `radius`. A zero radius leaves the input unchanged.
pub fn dedupe(points: Vec<CriticalPoint>, radius: f64) -> Vec<CriticalPoint> {
    let mut sorted = points;
    if radius <= 0.0 {
        sorted.sort_by(|a, b| a.location.partial_cmp(&b.location).unwrap());
        return sorted;
    }
    sorted.sort_by(|a, b| {
        a.residual
            .partial_cmp(&b.residual)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| {
                a.location
                    .partial_cmp(&b.location)
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
    });
    let mut kept: Vec<CriticalPoint> = Vec::new();
    for p in sorted {
        if kept
            .iter()
            .all(|q| dist(&p.location, &q.location) > radius)
        {
            kept.push(p);
        }
    }
    kept.sort_by(|a, b| a.location.partial_cmp(&b.location).unwrap());
    kept
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Enumerates all real solutions of the square system inside the box,
/// to accuracy `acc`, with a processed-cell budget.
pub fn solve_in_box(
    system: &[TensorPoly],
    bx: &IntervalBox,
    acc: f64,
    budget: u64,
) -> Result<SolveOutcome, PsolveError> {
    solve_with(
        system,
        bx,
        acc,
        &SolveOptions {
            budget,
            ..SolveOptions::default()
        },
    )
}

struct Ctx<'a> {
    system: &'a [TensorPoly],
    n: usize,
    acc: f64,
    opts: &'a SolveOptions,
    cells: AtomicU64,
    stalled: AtomicU64,
    aborted: AtomicBool,
    nonfinite: AtomicBool,
    trunc_tol: Vec<f64>,
    sys_dense: Vec<DenseCheb>,
    jac_dense: Vec<Vec<DenseCheb>>,
    root: IntervalBox,
}

struct Cell {
    lo: Vec<f64>,
    hi: Vec<f64>,
    polys: Vec<LocalPoly>,
    depth: u32,
}

#[derive(Default)]
struct Harvest {
    certified: Vec<(Vec<f64>, f64)>,
    tiny: Vec<IntervalBox>,
    unresolved: Vec<IntervalBox>,
}

impl Harvest {
    fn merge(mut self, other: Harvest) -> Harvest {
        self.certified.extend(other.certified);
        self.tiny.extend(other.tiny);
        self.unresolved.extend(other.unresolved);
        self
    }
}

pub fn solve_with(
    system: &[TensorPoly],
    bx: &IntervalBox,
    acc: f64,
    opts: &SolveOptions,
) -> Result<SolveOutcome, PsolveError> {
    let n = bx.dim();
    if system.len() != n || system.iter().any(|p| p.dim() != n) {
        return Err(PsolveError::NonSquare {
            polys: system.len(),
            vars: system.first().map(|p| p.dim()).unwrap_or(0),
        });
    }
    if !(acc > 0.0) {
        return Err(PsolveError::BadAccuracy(acc));
    }
    if bx
        .lo
        .iter()
        .zip(&bx.hi)
        .any(|(&a, &b)| a < -1.0 - 1e-9 || b > 1.0 + 1e-9 || a > b)
    {
        return Err(PsolveError::InvalidBox);
    }
    // a vanishing component means a positive-dimensional solution set
    if system.iter().any(|p| p.is_zero()) {
        return Ok(SolveOutcome {
            status: SolveStatus::FailNonFinite,
            points: Vec::new(),
            unresolved_boxes: vec![bx.clone()],
        });
    }
    let sys_dense: Vec<DenseCheb> = system.iter().map(|p| p.dense()).collect();
    let jac_dense: Vec<Vec<DenseCheb>> = system
        .iter()
        .map(|p| (0..n).map(|a| p.partial(a).unwrap().dense()).collect())
        .collect();
    let root_polys: Vec<LocalPoly> = system
        .iter()
        .map(|p| LocalPoly::from_tensor(p, &bx.lo, &bx.hi))
        .collect();
    let trunc_tol: Vec<f64> = root_polys.iter().map(|p| 1e-14 * p.sum_abs()).collect();
    let ctx = Ctx {
        system,
        n,
        acc,
        opts,
        cells: AtomicU64::new(0),
        stalled: AtomicU64::new(0),
        aborted: AtomicBool::new(false),
        nonfinite: AtomicBool::new(false),
        trunc_tol,
        sys_dense,
        jac_dense,
        root: bx.clone(),
    };
    let harvest = process(
        Cell {
            lo: bx.lo.clone(),
            hi: bx.hi.clone(),
            polys: root_polys,
            depth: 0,
        },
        &ctx,
    );
    finish(harvest, &ctx)
}

fn finish(harvest: Harvest, ctx: &Ctx) -> Result<SolveOutcome, PsolveError> {
    let mut status = SolveStatus::Complete;
    let mut unresolved = harvest.unresolved;
    if ctx.nonfinite.load(Ordering::Relaxed) {
        status = SolveStatus::FailNonFinite;
    } else if ctx.aborted.load(Ordering::Relaxed) {
        status = SolveStatus::BudgetExceeded;
    }

    let residual_tol = residual_tolerance(ctx.system);
    let mut raw: Vec<CriticalPoint> = Vec::new();
    for (loc, rad) in harvest.certified {
        if let Some(cp) = finalize_point(ctx, loc, rad, residual_tol) {
            raw.push(cp);
        }
    }
    // cluster stalled cells and recover residual-validated representatives
    if !harvest.tiny.is_empty() && status == SolveStatus::Complete {
        for cluster in cluster_boxes(&harvest.tiny, ctx.acc) {
            let centroid = cluster_centroid(&cluster);
            match polish_newton(ctx, &centroid, 120) {
                Some(x) if residual_at(ctx, &x) <= residual_tol => {
                    if let Some(cp) = finalize_point(ctx, x, 0.0, residual_tol) {
                        raw.push(cp);
                    } else {
                        unresolved.extend(cluster);
                    }
                }
                _ => unresolved.extend(cluster),
            }
        }
    } else {
        unresolved.extend(harvest.tiny);
    }
    let mut points = dedupe(raw, (ctx.acc / 4.0).max(1e-13));
    points.sort_by(|a, b| a.location.partial_cmp(&b.location).unwrap());
    if status == SolveStatus::Complete && !unresolved.is_empty() {
        status = SolveStatus::FailNonFinite;
    }
    Ok(SolveOutcome {
        status,
        points,
        unresolved_boxes: unresolved,
    })
}

fn residual_tolerance(system: &[TensorPoly]) -> f64 {
    let n = system.first().map(|p| p.dim()).unwrap_or(1);
    let res = match n {
        0..=2 => 64,
        3 => 32,
        _ => 16,
    };
    let sup = system
        .iter()
        .map(|g| g.sup_norm_grid(res))
        .fold(0.0, f64::max);
    1e-8 * (1.0 + sup)
}

fn residual_at(ctx: &Ctx, x: &[f64]) -> f64 {
    ctx.sys_dense
        .iter()
        .map(|g| g.eval(x).abs())
        .fold(0.0, f64::max)
}

fn finalize_point(
    ctx: &Ctx,
    loc: Vec<f64>,
    cert_rad: f64,
    residual_tol: f64,
) -> Option<CriticalPoint> {
    let margin = ctx.opts.boundary_margin;
    if !ctx.root.contains_with_margin(&loc, margin) {
        return None;
    }
    let residual = residual_at(ctx, &loc);
    if residual > residual_tol {
        return None;
    }
    let n = ctx.n;
    let mut h = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            h[i * n + j] = ctx.jac_dense[i][j].eval(&loc);
        }
    }
    let eigs = jacobi::symmetric_eigenvalues(&h, n);
    let kind = kind_from_eigs(&eigs, ctx.opts.classification_tol);
    let boundary_proximal = ctx.root.boundary_distance(&loc) < margin;
    Some(CriticalPoint {
        location: loc,
        certified_radius: cert_rad,
        kind,
        hess_eigs: eigs,
        boundary_proximal,
        residual,
    })
}

fn process(mut cell: Cell, ctx: &Ctx) -> Harvest {
    let mut out = Harvest::default();
    if ctx.aborted.load(Ordering::Relaxed) || ctx.nonfinite.load(Ordering::Relaxed) {
        out.unresolved.push(IntervalBox::new(cell.lo, cell.hi));
        return out;
    }
    if ctx.cells.fetch_add(1, Ordering::Relaxed) >= ctx.opts.budget {
        ctx.aborted.store(true, Ordering::Relaxed);
        out.unresolved.push(IntervalBox::new(cell.lo, cell.hi));
        return out;
    }

    let mut saturated = true;
    let mut comp_saturated = vec![false; ctx.n.max(cell.polys.len())];
    for (i, p) in cell.polys.iter_mut().enumerate() {
        p.truncate(ctx.trunc_tol[i]);
        let range = p.range();
        if !range.contains_zero() {
            return out; // no solution in this cell
        }
        if range.rad() > 16.0 * p.err + ctx.trunc_tol[i] {
            saturated = false;
        } else {
            comp_saturated[i] = true;
        }
    }

    let width = cell
        .lo
        .iter()
        .zip(&cell.hi)
        .map(|(a, b)| b - a)
        .fold(0.0, f64::max);

    // contraction loop: Krawczyk either resolves the cell, discards it,
    // or tightens it before we fall back to bisection
    for _round in 0..3 {
        match krawczyk_step(&cell.polys, ctx.n) {
            Krawczyk::Empty => return out,
            Krawczyk::Certified => {
                if let Some((loc, rad)) = refine_certified(ctx, &cell, 1.0) {
                    out.certified.push((loc, rad));
                }
                return out;
            }
            Krawczyk::Contract(bounds) => {
                let shrink = bounds
                    .iter()
                    .map(|(a, b)| 0.5 * (b - a))
                    .fold(0.0f64, f64::max);
                if shrink > 0.8 {
                    break;
                }
                for (a, (tl, th)) in bounds.iter().enumerate() {
                    let m = 0.5 * (tl + th);
                    let r = 0.5 * (th - tl).max(1e-300);
                    let plo = cell.lo[a];
                    let phi = cell.hi[a];
                    let pc = 0.5 * (plo + phi);
                    let pr = 0.5 * (phi - plo);
                    cell.lo[a] = pc + pr * (m - r);
                    cell.hi[a] = pc + pr * (m + r);
                    for p in cell.polys.iter_mut() {
                        p.restrict_axis(a, m, r);
                    }
                }
            }
            Krawczyk::Inconclusive => break,
        }
    }

    // boundary roots never sit strictly inside a cell; a slightly
    // inflated retry certifies them once cells are small
    if width <= 0.25 {
        let infl = 1.0 + (0.05_f64).min(0.25 * ctx.acc / width.max(1e-300)).max(0.02);
        let mut inflated = cell.polys.clone();
        for p in inflated.iter_mut() {
            for a in 0..ctx.n {
                p.restrict_axis(a, 0.0, infl);
            }
        }
        if matches!(krawczyk_step(&inflated, ctx.n), Krawczyk::Certified) {
            let icell = Cell {
                lo: cell
                    .lo
                    .iter()
                    .zip(&cell.hi)
                    .map(|(a, b)| 0.5 * (a + b) - 0.5 * (b - a) * infl)
                    .collect(),
                hi: cell
                    .lo
                    .iter()
                    .zip(&cell.hi)
                    .map(|(a, b)| 0.5 * (a + b) + 0.5 * (b - a) * infl)
                    .collect(),
                polys: inflated,
                depth: cell.depth,
            };
            if let Some((loc, rad)) = refine_certified(ctx, &icell, 1.0) {
                out.certified.push((loc, rad));
            }
            return out;
        }
    }

    // cells keep splitting below the target accuracy while the range
    // enclosures still make progress; only numerical saturation (all
    // components pinned at the error floor) or the depth guard stall them
    if saturated || cell.depth >= 96 {
        if ctx.stalled.fetch_add(1, Ordering::Relaxed) >= ctx.opts.stall_budget {
            ctx.nonfinite.store(true, Ordering::Relaxed);
        }
        out.tiny.push(IntervalBox::new(cell.lo, cell.hi));
        return out;
    }

    // bisect where the still-undecided components have coefficient mass:
    // splitting an axis a component does not depend on cannot sharpen its
    // range, so weight axes by the variation mass of unsaturated components
    let mut benefit = vec![0.0f64; ctx.n];
    for (i, p) in cell.polys.iter().enumerate() {
        if comp_saturated[i] {
            continue;
        }
        for (a, b) in benefit.iter_mut().enumerate() {
            *b += p.axis_variation(a);
        }
    }
    let axis = (0..ctx.n)
        .max_by(|&a, &b| {
            benefit[a]
                .partial_cmp(&benefit[b])
                .unwrap()
                .then_with(|| {
                    (cell.hi[a] - cell.lo[a])
                        .partial_cmp(&(cell.hi[b] - cell.lo[b]))
                        .unwrap()
                })
        })
        .unwrap();
    let mk_child = |half: usize| -> Cell {
        let mut lo = cell.lo.clone();
        let mut hi = cell.hi.clone();
        let mid = 0.5 * (cell.lo[axis] + cell.hi[axis]);
        if half == 0 {
            hi[axis] = mid;
        } else {
            lo[axis] = mid;
        }
        let mut polys = cell.polys.clone();
        let m = if half == 0 { -0.5 } else { 0.5 };
        for p in polys.iter_mut() {
            p.restrict_axis(axis, m, 0.5);
        }
        Cell {
            lo,
            hi,
            polys,
            depth: cell.depth + 1,
        }
    };
    let (left, right) = rayon::join(
        || process(mk_child(0), ctx),
        || process(mk_child(1), ctx),
    );
    out.merge(left).merge(right)
}

enum Krawczyk {
    Certified,
    Empty,
    Contract(Vec<(f64, f64)>),
    Inconclusive,
}

/// One Krawczyk test over the local box [-1,1]^n:
/// K = -Y G(0) + (I - Y [J]) [-1,1]^n with Y the midpoint-Jacobian inverse.
fn krawczyk_step(polys: &[LocalPoly], n: usize) -> Krawczyk {
    let mut g0 = Vec::with_capacity(n);
    for p in polys {
        let (v, rad) = p.value_center();
        g0.push(Interval::from_mid_rad(v, rad));
    }
    let mut jranges = vec![Interval::point(0.0); n * n];
    let mut jmid = DMatrix::zeros(n, n);
    for (i, p) in polys.iter().enumerate() {
        for j in 0..n {
            let d = p.derivative(j);
            let r = d.range();
            jranges[i * n + j] = r;
            jmid[(i, j)] = r.mid();
        }
    }
    let y = match jmid.try_inverse() {
        Some(y) if y.iter().all(|v| v.is_finite()) => y,
        _ => return Krawczyk::Inconclusive,
    };
    let unit = Interval::new(-1.0, 1.0);
    let mut contract = Vec::with_capacity(n);
    let mut all_inside = true;
    for i in 0..n {
        let mut ygi = Interval::point(0.0);
        for k in 0..n {
            ygi = ygi.add(g0[k].scale(y[(i, k)]));
        }
        let mut spread = Interval::point(0.0);
        for j in 0..n {
            let mut yj = Interval::point(0.0);
            for k in 0..n {
                yj = yj.add(jranges[k * n + j].scale(y[(i, k)]));
            }
            let m_ij = Interval::point(if i == j { 1.0 } else { 0.0 }).sub(yj);
            spread = spread.add(m_ij.mul(unit));
        }
        let k_i = ygi.neg().add(spread);
        match k_i.intersect(unit) {
            None => return Krawczyk::Empty,
            Some(t) => {
                if !k_i.inside_interior(unit) {
                    all_inside = false;
                }
                contract.push((t.lo, t.hi));
            }
        }
    }
    if all_inside {
        Krawczyk::Certified
    } else {
        let vol_shrink: f64 = contract
            .iter()
            .map(|(a, b)| 0.5 * (b - a))
            .fold(1.0, |acc, w| acc.min(w));
        if vol_shrink < 0.9 {
            Krawczyk::Contract(contract)
        } else {
            Krawczyk::Inconclusive
        }
    }
}

/// Newton-polishes the certified cell's center and finds the smallest
/// Krawczyk-certifiable ball radius around the converged point.
fn refine_certified(ctx: &Ctx, cell: &Cell, _scale: f64) -> Option<(Vec<f64>, f64)> {
    let center = IntervalBox::new(cell.lo.clone(), cell.hi.clone()).center();
    let x = polish_newton(ctx, &center, 80)?;
    if !ctx.root.contains_with_margin(&x, ctx.opts.boundary_margin) {
        return None;
    }
    let cell_rad = cell
        .lo
        .iter()
        .zip(&cell.hi)
        .map(|(a, b)| 0.5 * (b - a))
        .fold(0.0f64, f64::max);
    let mut r = (ctx.acc * 1e-3).max(1e-12);
    for _ in 0..10 {
        if r > 4.0 * cell_rad.max(1e-12) {
            break;
        }
        if certify_ball(ctx.system, &x, r) {
            return Some((x, r));
        }
        r *= 8.0;
    }
    // cell-level certificate stands even when no tight ball verifies
    Some((x, cell_rad))
}

/// Checks that the Krawczyk operator on the box [c - r, c + r]^n maps it
/// strictly into itself, certifying existence and uniqueness of a root.
pub fn certify_ball(system: &[TensorPoly], center: &[f64], r: f64) -> bool {
    if !(r > 0.0) {
        return false;
    }
    let n = center.len();
    let lo: Vec<f64> = center.iter().map(|c| c - r).collect();
    let hi: Vec<f64> = center.iter().map(|c| c + r).collect();
    let polys: Vec<LocalPoly> = system
        .iter()
        .map(|p| LocalPoly::from_tensor(p, &lo, &hi))
        .collect();
    matches!(krawczyk_step(&polys, n), Krawczyk::Certified)
}

/// Damped Newton iteration on the full system from `start`, staying near
/// the root box. Returns the converged point.
fn polish_newton(ctx: &Ctx, start: &[f64], iters: usize) -> Option<Vec<f64>> {
    let n = ctx.n;
    let mut x = DVector::from_column_slice(start);
    let gnorm = |x: &DVector<f64>| -> f64 {
        ctx.sys_dense
            .iter()
            .map(|g| g.eval(x.as_slice()).abs())
            .fold(0.0, f64::max)
    };
    let mut best = x.clone();
    let mut best_norm = gnorm(&x);
    for _ in 0..iters {
        let g = DVector::from_iterator(n, ctx.sys_dense.iter().map(|d| d.eval(x.as_slice())));
        let mut j = DMatrix::zeros(n, n);
        for i in 0..n {
            for a in 0..n {
                j[(i, a)] = ctx.jac_dense[i][a].eval(x.as_slice());
            }
        }
        let lu = j.lu();
        let delta = match lu.solve(&g.scale(-1.0)) {
            Some(d) if d.iter().all(|v| v.is_finite()) => d,
            _ => break,
        };
        let g0 = gnorm(&x);
        let mut alpha = 1.0;
        let mut moved = false;
        for _ in 0..30 {
            let cand = &x + delta.scale(alpha);
            let clamped = DVector::from_iterator(
                n,
                cand.iter()
                    .enumerate()
                    .map(|(a, &v)| v.clamp(ctx.root.lo[a] - 0.25, ctx.root.hi[a] + 0.25)),
            );
            if gnorm(&clamped) < g0 {
                x = clamped;
                moved = true;
                break;
            }
            alpha *= 0.5;
        }
        if !moved {
            break;
        }
        let cur = gnorm(&x);
        if cur < best_norm {
            best_norm = cur;
            best = x.clone();
        }
        if cur == 0.0 || delta.amax() * alpha <= 1e-16 {
            break;
        }
    }
    best_norm.is_finite().then(|| best.as_slice().to_vec())
}

fn cluster_centroid(boxes: &[IntervalBox]) -> Vec<f64> {
    let n = boxes[0].dim();
    let mut c = vec![0.0; n];
    for b in boxes {
        for (a, v) in b.center().iter().enumerate() {
            c[a] += v;
        }
    }
    for v in c.iter_mut() {
        *v /= boxes.len() as f64;
    }
    c
}

/// Groups boxes whose centers fall in the same or adjacent buckets of a
/// hash grid with pitch 2 * acc (union-find).
fn cluster_boxes(boxes: &[IntervalBox], acc: f64) -> Vec<Vec<IntervalBox>> {
    use std::collections::HashMap;
    let n = boxes[0].dim();
    let pitch = (2.0 * acc).max(boxes.iter().map(|b| b.max_width()).fold(0.0, f64::max) * 1.5);
    let key = |x: &[f64]| -> Vec<i64> {
        x.iter().map(|v| (v / pitch).floor() as i64).collect()
    };
    let mut parent: Vec<usize> = (0..boxes.len()).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        if parent[i] != i {
            let r = find(parent, parent[i]);
            parent[i] = r;
        }
        parent[i]
    }
    let mut buckets: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
    for (i, b) in boxes.iter().enumerate() {
        buckets.entry(key(&b.center())).or_default().push(i);
    }
    let mut neighbor = vec![0i64; n];
    for (i, b) in boxes.iter().enumerate() {
        let k0 = key(&b.center());
        let mut offsets = vec![-1i64; n];
        loop {
            for a in 0..n {
                neighbor[a] = k0[a] + offsets[a];
            }
            if let Some(list) = buckets.get(&neighbor) {
                for &j in list {
                    let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                    if ri != rj {
                        parent[ri] = rj;
                    }
                }
            }
            // advance odometer over {-1, 0, 1}^n
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
    }
    let mut groups: HashMap<usize, Vec<IntervalBox>> = HashMap::new();
    for (i, b) in boxes.iter().enumerate() {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(b.clone());
    }
    let mut out: Vec<Vec<IntervalBox>> = groups.into_values().collect();
    out.sort_by(|a, b| {
        a[0].lo
            .partial_cmp(&b[0].lo)
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cheb::MultiIndex;

    fn poly_1d_x2() -> TensorPoly {
        // x^2 = (T0 + T2)/2
        TensorPoly::from_coeffs(
            1,
            2,
            [(MultiIndex(vec![0]), 0.5), (MultiIndex(vec![2]), 0.5)],
        )
        .unwrap()
    }

    #[test]
    fn gradient_of_x_squared() {
        let g = gradient(&poly_1d_x2());
        assert_eq!(g.len(), 1);
        assert!((g[0].eval(&[0.7]).unwrap() - 1.4).abs() < 1e-14);
    }

    #[test]
    fn solve_linear_1d() {
        let g = gradient(&poly_1d_x2()); // {2x}
        let out = solve_in_box(&g, &IntervalBox::unit(1), 1e-9, 1_000_000).unwrap();
        assert_eq!(out.status, SolveStatus::Complete);
        assert_eq!(out.points.len(), 1);
        let p = &out.points[0];
        assert!(p.location[0].abs() <= 1e-9);
        assert!(p.certified_radius > 0.0);
    }

    #[test]
    fn zero_component_fails_nonfinite() {
        let z = TensorPoly::zero(1, 1);
        let out = solve_in_box(&[z], &IntervalBox::unit(1), 1e-6, 1000).unwrap();
        assert_eq!(out.status, SolveStatus::FailNonFinite);
        assert!(out.points.is_empty());
    }

    #[test]
    fn non_square_rejected() {
        let p = poly_1d_x2();
        let g = gradient(&p);
        assert!(matches!(
            solve_in_box(&g, &IntervalBox::unit(2), 1e-6, 1000),
            Err(PsolveError::NonSquare { .. })
        ));
    }

    #[test]
    fn separable_quartic_nine_points() {
        // f = (x^2 - 1/4)^2 + (y^2 - 1/4)^2; critical points {0, +-1/2}^2
        let f = TensorPoly::from_monomial(
            2,
            4,
            [
                (vec![4, 0], 1.0),
                (vec![2, 0], -0.5),
                (vec![0, 4], 1.0),
                (vec![0, 2], -0.5),
                (vec![0, 0], 0.125),
            ],
        )
        .unwrap();
        let g = gradient(&f);
        let out = solve_in_box(&g, &IntervalBox::unit(2), 1e-8, 1_000_000).unwrap();
        assert_eq!(out.status, SolveStatus::Complete);
        assert_eq!(out.points.len(), 9, "{:?}", out.points);
        let mut mins = 0;
        let mut saddles = 0;
        let mut maxs = 0;
        for p in &out.points {
            for &c in &p.location {
                let nearest = [0.0f64, 0.5, -0.5]
                    .iter()
                    .map(|t| (c - t).abs())
                    .fold(f64::INFINITY, f64::min);
                assert!(nearest <= 1e-7, "coordinate {c}");
            }
            match p.kind {
                Kind::Minimizer => mins += 1,
                Kind::Saddle => saddles += 1,
                Kind::Maximizer => maxs += 1,
                Kind::Degenerate => panic!("unexpected degenerate point"),
            }
        }
        assert_eq!((mins, maxs, saddles), (4, 1, 4));
    }

    #[test]
    fn classify_examples() {
        // x^2 + y^2 at origin
        let bowl = TensorPoly::from_monomial(2, 2, [(vec![2, 0], 1.0), (vec![0, 2], 1.0)]).unwrap();
        let (kind, eigs) = classify(&bowl, &[0.0, 0.0], 1e-8);
        assert_eq!(kind, Kind::Minimizer);
        assert!((eigs[0] - 2.0).abs() < 1e-12 && (eigs[1] - 2.0).abs() < 1e-12);

        let saddle =
            TensorPoly::from_monomial(2, 2, [(vec![2, 0], 1.0), (vec![0, 2], -1.0)]).unwrap();
        let (kind, eigs) = classify(&saddle, &[0.0, 0.0], 1e-8);
        assert_eq!(kind, Kind::Saddle);
        assert!((eigs[0] + 2.0).abs() < 1e-12 && (eigs[1] - 2.0).abs() < 1e-12);

        let degen =
            TensorPoly::from_monomial(2, 4, [(vec![4, 0], 1.0), (vec![0, 2], 1.0)]).unwrap();
        let (kind, eigs) = classify(&degen, &[0.0, 0.0], 1e-8);
        assert_eq!(kind, Kind::Degenerate);
        assert!(eigs[0].abs() <= 1e-8 && (eigs[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_root_recovered_heuristically() {
        // f = x^4 + y^2: gradient (4x^3, 2y), triple root in x at the origin
        let f = TensorPoly::from_monomial(2, 4, [(vec![4, 0], 1.0), (vec![0, 2], 1.0)]).unwrap();
        let g = gradient(&f);
        let out = solve_in_box(&g, &IntervalBox::unit(2), 1e-6, 2_000_000).unwrap();
        assert_eq!(out.points.len(), 1, "{:?}", out.points);
        let p = &out.points[0];
        assert!(dist(&p.location, &[0.0, 0.0]) <= 1e-6);
        assert_eq!(p.kind, Kind::Degenerate);
    }

    #[test]
    fn dedupe_behavior() {
        let mk = |x: f64, y: f64, res: f64| CriticalPoint {
            location: vec![x, y],
            certified_radius: 0.0,
            kind: Kind::Saddle,
            hess_eigs: vec![-1.0, 1.0],
            boundary_proximal: false,
            residual: res,
        };
        // coincident points collapse to the lower residual
        let out = dedupe(vec![mk(0.1, 0.1, 1e-3), mk(0.1, 0.1, 1e-9)], 1e-6);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].residual, 1e-9);
        // radius 0 keeps everything
        let out = dedupe(vec![mk(0.0, 0.0, 1.0), mk(0.0, 0.0, 2.0)], 0.0);
        assert_eq!(out.len(), 2);
        // well-separated lattice is untouched
        let pts: Vec<CriticalPoint> = [-0.5, 0.0, 0.5]
            .iter()
            .flat_map(|&x| [-0.5, 0.0, 0.5].iter().map(move |&y| mk(x, y, 1e-9)))
            .collect();
        assert_eq!(dedupe(pts, 0.1).len(), 9);
    }

    #[test]
    fn certification_soundness_recheck() {
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
        let g = gradient(&f);
        let out = solve_in_box(&g, &IntervalBox::unit(2), 1e-8, 1_000_000).unwrap();
        let mut checked = 0;
        for p in &out.points {
            if p.certified_radius > 0.0 {
                assert!(
                    certify_ball(&g, &p.location, p.certified_radius),
                    "certificate must re-verify at {:?}",
                    p.location
                );
                checked += 1;
            }
        }
        assert!(checked > 0);
    }

    #[test]
    fn boundary_root_found_and_flagged() {
        // gradient system {2(x - 1), 2y}: root exactly on the box boundary
        let f = TensorPoly::from_monomial(
            2,
            2,
            [
                (vec![2, 0], 1.0),
                (vec![1, 0], -2.0),
                (vec![0, 2], 1.0),
            ],
        )
        .unwrap();
        let g = gradient(&f);
        let out = solve_in_box(&g, &IntervalBox::unit(2), 1e-8, 1_000_000).unwrap();
        assert_eq!(out.points.len(), 1, "{:?}", out.points);
        let p = &out.points[0];
        assert!(dist(&p.location, &[1.0, 0.0]) <= 1e-7);
        assert!(p.boundary_proximal);
    }
}
