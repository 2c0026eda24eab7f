//! Parameter budgets for the capture guarantee: given the accuracy and
//! regularity constants, choose the approximant degree d, the oracle
//! noise bound, and the sample count so that both sufficient conditions
//!
//!   (A1 / d^(2m-2) + A2 eta^2) d^(2 beta n) <= lambda^2 eps^4      (degree/noise)
//!   k / (ln k + ln(4/alpha)) >= 2 D^(2 beta) / delta^2             (sample size)
//!
//! hold on every emitted plan, with D = binom(n+d, n).

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PlanError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("plan infeasible: {0}")]
    Infeasible(String),
}

/// beta = ln 3 / (2 ln 2), the exponent of the sup/L2 norm comparison
/// constant D^(2 beta).
pub fn beta() -> f64 {
    3.0f64.ln() / (2.0 * 2.0f64.ln())
}

/// The closed-form regularity constants
/// A1 = 16 (1/pi^n + 2/(1-delta)) C_nm^2 kappa^2 / (pi e)^n and
/// A2 = 16 (1+delta) / ((pi e)^n (1-delta)^2) * (8 delta^2 (1-delta)^4 + 4).
/// `m` only enters through the Jackson constant C_nm supplied by the caller.
pub fn default_constants(
    n: usize,
    _m: u32,
    kappa: f64,
    delta: f64,
    c_nm: f64,
) -> Result<(f64, f64), PlanError> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(PlanError::InvalidParameter(format!(
            "delta must be in (0,1), got {delta}"
        )));
    }
    if kappa <= 0.0 || c_nm <= 0.0 {
        return Err(PlanError::InvalidParameter(
            "kappa and C_nm must be positive".into(),
        ));
    }
    let pi = std::f64::consts::PI;
    let pie_n = (pi * std::f64::consts::E).powi(n as i32);
    let a1 = 16.0 * (1.0 / pi.powi(n as i32) + 2.0 / (1.0 - delta)) * c_nm * c_nm * kappa * kappa
        / pie_n;
    let a2 = 16.0 * (1.0 + delta) / (pie_n * (1.0 - delta) * (1.0 - delta))
        * (8.0 * delta * delta * (1.0 - delta).powi(4) + 4.0);
    Ok((a1, a2))
}

/// The full parameter bundle of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub n: usize,
    pub m: u32,
    pub eps: f64,
    pub alpha: f64,
    pub delta: f64,
    pub lambda: f64,
    pub a1: f64,
    pub a2: f64,
    /// Approximant degree, at least 2.
    pub d: u32,
    /// Oracle noise budget.
    pub eta_bar: f64,
    /// Sample count.
    pub k: u128,
    /// Basis size D = binom(n+d, n).
    pub basis_size: u64,
    /// True when d/k were imposed rather than planned; the two budget
    /// conditions are then not asserted.
    pub forced: bool,
}

impl Plan {
    /// A plan with imposed degree and sample count (noise optional),
    /// bypassing the budget conditions.
    pub fn forced(n: usize, eps: f64, d: u32, eta_bar: f64, k: u128) -> Plan {
        Plan {
            n,
            m: 3,
            eps,
            alpha: 0.05,
            delta: 0.5,
            lambda: 1.0,
            a1: f64::NAN,
            a2: f64::NAN,
            d: d.max(1),
            eta_bar,
            k,
            basis_size: binom_u64(n, d).unwrap_or(u64::MAX),
            forced: true,
        }
    }

    pub fn condition_degree_noise(&self) -> bool {
        condition_degree_noise(
            self.n, self.m, self.lambda, self.eps, self.a1, self.a2, self.d, self.eta_bar,
        )
    }

    pub fn condition_sample_size(&self) -> bool {
        condition_sample_size(self.alpha, self.delta, self.basis_size, self.k)
    }
}

fn binom_u64(n: usize, d: u32) -> Option<u64> {
    let mut acc: u128 = 1;
    for i in 1..=n as u128 {
        acc = acc.checked_mul(d as u128 + i)? / i;
        if acc > u64::MAX as u128 {
            return None;
        }
    }
    Some(acc as u64)
}

/// LHS of the degree/noise condition: (A1/d^(2m-2) + A2 eta^2) d^(2 beta n).
pub fn condition_lhs(n: usize, m: u32, a1: f64, a2: f64, d: u32, eta: f64) -> f64 {
    let df = d as f64;
    (a1 / df.powf(2.0 * m as f64 - 2.0) + a2 * eta * eta) * df.powf(2.0 * beta() * n as f64)
}

fn condition_degree_noise(
    n: usize,
    m: u32,
    lambda: f64,
    eps: f64,
    a1: f64,
    a2: f64,
    d: u32,
    eta: f64,
) -> bool {
    condition_lhs(n, m, a1, a2, d, eta) <= lambda * lambda * eps.powi(4)
}

fn condition_sample_size(alpha: f64, delta: f64, basis_size: u64, k: u128) -> bool {
    let kf = k as f64;
    let need = 2.0 * (basis_size as f64).powf(2.0 * beta()) / (delta * delta);
    kf / (kf.ln() + (4.0 / alpha).ln()) >= need
}

/// Noise budget for a given degree: eta = lambda eps^2 / (2 d^(beta n) sqrt(A2)),
/// which spends a quarter of the budget lambda^2 eps^4 on noise.
pub fn noise_for_degree(n: usize, lambda: f64, eps: f64, a2: f64, d: u32) -> f64 {
    lambda * eps * eps / (2.0 * (d as f64).powf(beta() * n as f64) * a2.sqrt())
}

const MAX_PLANNED_DEGREE: u32 = 2_000_000;

/// Computes the budget (d, eta, k) from the accuracy and regularity
/// parameters. Both budget conditions are re-verified numerically before
/// the plan is returned.
pub fn plan(
    n: usize,
    m: u32,
    eps: f64,
    alpha: f64,
    delta: f64,
    lambda: f64,
    a1: f64,
    a2: f64,
) -> Result<Plan, PlanError> {
    if n == 0 {
        return Err(PlanError::InvalidParameter("n must be positive".into()));
    }
    if !(eps > 0.0) || !(lambda > 0.0) || !(a1 > 0.0) || !(a2 > 0.0) {
        return Err(PlanError::InvalidParameter(
            "eps, lambda, A1, A2 must be positive".into(),
        ));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(PlanError::InvalidParameter(format!(
            "alpha must be in (0,1), got {alpha}"
        )));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(PlanError::InvalidParameter(format!(
            "delta must be in (0,1), got {delta}"
        )));
    }
    let bn = beta() * n as f64;
    if (m as f64) < 3.0 || (m as f64) <= bn + 1.0 {
        return Err(PlanError::InvalidParameter(format!(
            "m must satisfy m >= max(3, beta n + 1) strictly above beta n + 1, got m={m} for n={n}"
        )));
    }
    let budget = lambda * lambda * eps.powi(4);
    // smallest degree whose approximation term fits in 3/4 of the budget,
    // leaving the quarter the noise term spends by construction
    let exponent = 1.0 / (2.0 * (m as f64 - bn - 1.0));
    let d_cont = (4.0 * a1 / (3.0 * budget)).powf(exponent);
    if !d_cont.is_finite() {
        return Err(PlanError::Infeasible(
            "degree formula overflowed".into(),
        ));
    }
    let mut d = (d_cont.ceil() as u64).clamp(2, MAX_PLANNED_DEGREE as u64) as u32;
    let mut eta;
    loop {
        eta = noise_for_degree(n, lambda, eps, a2, d);
        if condition_degree_noise(n, m, lambda, eps, a1, a2, d, eta) {
            break;
        }
        if d >= MAX_PLANNED_DEGREE {
            return Err(PlanError::Infeasible(format!(
                "degree/noise condition unsatisfied at degree cap: lhs {:.3e} > budget {:.3e}",
                condition_lhs(n, m, a1, a2, d, eta),
                budget
            )));
        }
        d += 1;
    }
    let basis_size = binom_u64(n, d).ok_or_else(|| {
        PlanError::Infeasible(format!("basis size overflow at degree {d} in dim {n}"))
    })?;
    let df = basis_size as f64;
    let k_cont = (2.0 * df.powf(2.0 * beta()) / (delta * delta) * (1.0 + (4.0 / alpha).ln())).powi(2);
    if !k_cont.is_finite() || k_cont >= u128::MAX as f64 {
        return Err(PlanError::Infeasible("sample count overflow".into()));
    }
    let k = (k_cont.ceil() as u128).max(basis_size as u128).max(3);
    if !condition_sample_size(alpha, delta, basis_size, k) {
        return Err(PlanError::Infeasible(format!(
            "sample-size condition unsatisfied at k={k}"
        )));
    }
    Ok(Plan {
        n,
        m,
        eps,
        alpha,
        delta,
        lambda,
        a1,
        a2,
        d,
        eta_bar: eta,
        k,
        basis_size,
        forced: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beta_value() {
        assert!((beta() - 0.7924812503605781).abs() <= 1e-12);
        // 2 beta = log2(3)
        assert!((2.0 * beta() - 3.0f64.log2()).abs() <= 1e-15);
        // D^(2 beta) = 3 exactly for D = 2
        assert!((2.0f64.powf(2.0 * beta()) - 3.0).abs() <= 1e-12);
    }

    #[test]
    fn constants_at_half_delta() {
        let (a1, a2) = default_constants(1, 3, 1.0, 0.5, 1.0).unwrap();
        let pie = std::f64::consts::PI * std::f64::consts::E;
        let want_a1 = 16.0 * (1.0 / std::f64::consts::PI + 4.0) / pie;
        assert!((a1 - want_a1).abs() <= 1e-12 * want_a1);
        // frozen from the closed form: 16(1/pi + 4)/(pi e) = 8.0908...
        assert!((a1 - 8.0907621).abs() <= 1e-6, "a1 = {a1}");
        let want_a2 = 16.0 * 1.5 / (pie * 0.25) * (8.0 * 0.25 * 0.0625 + 4.0);
        assert!((a2 - want_a2).abs() <= 1e-12 * want_a2);
        assert!((a2 - 46.371467).abs() <= 1e-5, "a2 = {a2}");
    }

    #[test]
    fn constants_delta_limit() {
        // delta -> 0+: A2 -> 64 / (pi e)
        let (_, a2) = default_constants(1, 3, 1.0, 1e-9, 1.0).unwrap();
        let want = 64.0 / (std::f64::consts::PI * std::f64::consts::E);
        assert!((a2 - want).abs() <= 1e-6 * want);
        assert!(default_constants(1, 3, 1.0, 1.0, 1.0).is_err());
        assert!(default_constants(1, 3, 1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn plan_example_small_eps() {
        // n=1, m=3, lambda=1, eps=0.1, A1=A2=2: the smallest degree whose
        // budget check passes is 69 (the quarter-budget noise term makes
        // 68 overshoot by 0.07%), independently verified by scanning
        let p = plan(1, 3, 0.1, 0.05, 0.5, 1.0, 2.0, 2.0).unwrap();
        let mut d_scan = 2;
        loop {
            let eta = noise_for_degree(1, 1.0, 0.1, 2.0, d_scan);
            if condition_lhs(1, 3, 2.0, 2.0, d_scan, eta) <= 1e-4 {
                break;
            }
            d_scan += 1;
        }
        assert_eq!(p.d, d_scan);
        assert_eq!(p.d, 69);
        assert!(p.condition_degree_noise());
        assert!(p.condition_sample_size());
    }

    #[test]
    fn plan_clamps_degree_to_two() {
        let p = plan(1, 5, 10.0, 0.1, 0.5, 1.0, 1e-6, 1e-6).unwrap();
        assert_eq!(p.d, 2);
    }

    #[test]
    fn sample_count_formula() {
        // D = 10, delta = 1/2, alpha = 0.05 through a real plan is awkward
        // to pin; check the raw inequality on the formula value instead
        let d_: u64 = 10;
        let df = d_ as f64;
        let k = (2.0 * df.powf(2.0 * beta()) / 0.25 * (1.0 + (4.0f64 / 0.05).ln()))
            .powi(2)
            .ceil() as u128;
        assert!(condition_sample_size(0.05, 0.5, d_, k));
    }

    #[test]
    fn monotonicity() {
        let base = plan(2, 4, 0.1, 0.05, 0.5, 1.0, 2.0, 2.0).unwrap();
        let finer = plan(2, 4, 0.05, 0.05, 0.5, 1.0, 2.0, 2.0).unwrap();
        assert!(finer.d >= base.d);
        let stiffer = plan(2, 4, 0.1, 0.05, 0.5, 0.5, 2.0, 2.0).unwrap();
        assert!(stiffer.d >= base.d);
        let surer = plan(2, 4, 0.1, 0.01, 0.5, 1.0, 2.0, 2.0).unwrap();
        assert!(surer.k >= base.k);
    }

    #[test]
    fn degree_growth_law_1d() {
        // halving eps multiplies the planned degree by 4^(1/(m-1-beta))
        for m in [3u32, 4, 5] {
            let p1 = plan(1, m, 0.08, 0.05, 0.5, 1.0, 2.0, 2.0).unwrap();
            let p2 = plan(1, m, 0.04, 0.05, 0.5, 1.0, 2.0, 2.0).unwrap();
            let rho = 4.0f64.powf(1.0 / (m as f64 - 1.0 - beta()));
            assert!(
                (p2.d as f64 - rho * p1.d as f64).abs() <= rho + 1.0,
                "m={m}: {} vs rho*{}",
                p2.d,
                p1.d
            );
        }
    }

    #[test]
    fn invalid_parameters() {
        assert!(plan(1, 3, 0.0, 0.05, 0.5, 1.0, 2.0, 2.0).is_err());
        assert!(plan(1, 3, 0.1, 1.5, 0.5, 1.0, 2.0, 2.0).is_err());
        assert!(plan(1, 3, 0.1, 0.05, 0.0, 1.0, 2.0, 2.0).is_err());
        assert!(plan(1, 2, 0.1, 0.05, 0.5, 1.0, 2.0, 2.0).is_err());
        // n=3: beta n + 1 = 3.38, so m = 3 is too small
        assert!(plan(3, 3, 0.1, 0.05, 0.5, 1.0, 2.0, 2.0).is_err());
        assert!(plan(3, 4, 0.1, 0.05, 0.5, 1.0, 2.0, 2.0).is_ok());
    }

    #[test]
    fn forced_plan_skips_conditions() {
        let p = Plan::forced(2, 1e-2, 18, 0.0, 14400);
        assert!(p.forced);
        assert_eq!(p.basis_size, 190);
    }
}
