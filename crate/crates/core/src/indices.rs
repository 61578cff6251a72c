//! Exponent bookkeeping for the alignment criterion.
//!
//! For an integrability exponent `q > 1` and a Hölder exponent `β = 1 − δ`
//! the estimate of the nonlocal stretching term runs through a chain of
//! Hölder, Gagliardo–Nirenberg and Hardy–Littlewood–Sobolev inequalities
//! indexed by an auxiliary `p ∈ (1, 3)`:
//!
//! ```text
//! λ = 2 + δ,   1/σ + 1/p + λ/3 = 2,   α = 3/2 (1 − 1/p),
//! 1/σ = θ + (1 − θ)/q,   γ = (1 − θ) / (q (1 − α)).
//! ```
//!
//! The estimate closes when `σ ∈ [1, q]`, `θ ∈ [0, 1]`, `α ∈ (0, 1)` and
//! `1 − θ ≤ q(1 − α)`; the last condition is equivalent to
//! `δ ≤ U(p, q) = (3q − 5)(3 − p)/(2p)`.
//!
//! The closed forms are generic so they can run on exact rationals
//! (such as `num_rational::BigRational`) as well as on `f64`.

use std::fmt::Debug;

use num_traits::{FromPrimitive, Num};
use serde::Serialize;

use crate::error::{invalid, Result};

/// Number type accepted by the closed-form index functions.
pub trait Scalar: Num + Clone + PartialOrd + FromPrimitive + Debug {}
impl<T: Num + Clone + PartialOrd + FromPrimitive + Debug> Scalar for T {}

fn c<T: Scalar>(v: i64) -> T {
    T::from_i64(v).expect("small integer")
}

fn ratio<T: Scalar>(a: i64, b: i64) -> T {
    c::<T>(a) / c::<T>(b)
}

fn min_t<T: Scalar>(a: T, b: T) -> T {
    if a <= b {
        a
    } else {
        b
    }
}

fn max_t<T: Scalar>(a: T, b: T) -> T {
    if a >= b {
        a
    } else {
        b
    }
}

/// All derived exponents for one `(q, δ, p)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IndexSolution<T> {
    pub q: T,
    pub delta: T,
    pub lambda_exp: T,
    pub beta: T,
    pub p: T,
    pub sigma: T,
    pub theta: T,
    pub alpha: T,
    pub gamma: T,
    pub closing_ok: bool,
    /// `1 − θ = q(1 − α)`, i.e. `γ = 1`.
    pub closing_equality: bool,
    pub sigma_ok: bool,
    pub theta_ok: bool,
    pub alpha_ok: bool,
    pub feasible: bool,
}

/// `σ = 3p / ((4 − δ)p − 3)`.
pub fn sigma_of<T: Scalar>(delta: &T, p: &T) -> T {
    c::<T>(3) * p.clone() / ((c::<T>(4) - delta.clone()) * p.clone() - c::<T>(3))
}

/// `θ = ((4 − δ)pq − 3(p + q)) / (3p(q − 1))`.
pub fn theta_of<T: Scalar>(q: &T, delta: &T, p: &T) -> T {
    let num = (c::<T>(4) - delta.clone()) * p.clone() * q.clone() - c::<T>(3) * (p.clone() + q.clone());
    num / (c::<T>(3) * p.clone() * (q.clone() - c::<T>(1)))
}

/// `α = 3/2 (1 − 1/p)`, the inverse of `p = 3/(3 − 2α)`.
pub fn alpha_of<T: Scalar>(p: &T) -> T {
    ratio::<T>(3, 2) * (c::<T>(1) - c::<T>(1) / p.clone())
}

/// `1 − θ ≤ q(1 − α)`.
pub fn closing_condition<T: Scalar>(theta: &T, alpha: &T, q: &T) -> bool {
    c::<T>(1) - theta.clone() <= q.clone() * (c::<T>(1) - alpha.clone())
}

/// `U(p, q) = (3q − 5)(3 − p)/(2p)`.
pub fn u_bound<T: Scalar>(p: &T, q: &T) -> T {
    (c::<T>(3) * q.clone() - c::<T>(5)) * (c::<T>(3) - p.clone()) / (c::<T>(2) * p.clone())
}

/// Derives every exponent from `(q, δ, p)`.
///
/// Fails only for `q ≤ 1`, `δ ∉ [0, 1)` or `p ∉ (1, 3)`; violated range
/// conditions on `σ, θ, α` and the closing condition `1 − θ ≤ q(1 − α)` are reported through the flags.
pub fn derive_indices<T: Scalar>(q: T, delta: T, p: T) -> Result<IndexSolution<T>> {
    let one = c::<T>(1);
    if q <= one {
        return Err(invalid("q", format!("must exceed 1, got {q:?}")));
    }
    if delta < c::<T>(0) || delta >= one {
        return Err(invalid("delta", format!("must lie in [0, 1), got {delta:?}")));
    }
    if p <= one || p >= c::<T>(3) {
        return Err(invalid("p", format!("must lie in (1, 3), got {p:?}")));
    }
    let sigma = sigma_of(&delta, &p);
    let theta = theta_of(&q, &delta, &p);
    let alpha = alpha_of(&p);
    let gamma = (one.clone() - theta.clone()) / (q.clone() * (one.clone() - alpha.clone()));
    let sigma_ok = sigma >= one && sigma <= q;
    let theta_ok = theta >= c::<T>(0) && theta <= one;
    let alpha_ok = alpha > c::<T>(0) && alpha < one;
    let closes = closing_condition(&theta, &alpha, &q);
    let equality = one.clone() - theta.clone() == q.clone() * (one.clone() - alpha.clone());
    Ok(IndexSolution {
        lambda_exp: c::<T>(2) + delta.clone(),
        beta: one - delta.clone(),
        q,
        delta,
        p,
        feasible: sigma_ok && theta_ok && alpha_ok && closes,
        sigma,
        theta,
        alpha,
        gamma,
        closing_ok: closes,
        closing_equality: equality,
        sigma_ok,
        theta_ok,
        alpha_ok,
    })
}

/// Admissible `p`: `(1, 3) ∩ [3q/((4 − δ)q − 3), 3)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PRange<T> {
    pub lower: T,
    /// The lower end is attained (it comes from `σ ≤ q`, not from `p > 1`).
    pub lower_closed: bool,
    /// Always 3, never attained.
    pub upper: T,
    pub empty: bool,
}

/// Fails for `q ≤ 1` or `δ ∉ [0, 1)`.
pub fn p_range<T: Scalar>(q: T, delta: T) -> Result<PRange<T>> {
    let one = c::<T>(1);
    if q <= one {
        return Err(invalid("q", format!("must exceed 1, got {q:?}")));
    }
    if delta < c::<T>(0) || delta >= one {
        return Err(invalid("delta", format!("must lie in [0, 1), got {delta:?}")));
    }
    let three = c::<T>(3);
    let formula = three.clone() * q.clone() / ((c::<T>(4) - delta) * q - three.clone());
    let (lower, lower_closed) = if formula > one { (formula, true) } else { (one, false) };
    Ok(PRange {
        empty: lower >= three,
        lower,
        lower_closed,
        upper: three,
    })
}

/// `min{1, 3 − 5/q}` for `q ≥ 5/3`, `None` below. At `q = 5/3` only the
/// closed endpoint `δ = 0` survives.
pub fn delta_max<T: Scalar>(q: T) -> Option<T> {
    if q < ratio::<T>(5, 3) {
        return None;
    }
    Some(max_t(c::<T>(0), min_t(c::<T>(1), c::<T>(3) - c::<T>(5) / q)))
}

/// `max{0, 5/q − 2}`: the admissible Hölder exponents are `β > β_threshold`.
pub fn beta_threshold<T: Scalar>(q: T) -> T {
    max_t(c::<T>(0), c::<T>(5) / q - c::<T>(2))
}

/// Admissibility of `(q, β)` under both endpoint conventions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct BetaFeasibility {
    /// `q > 5/3` and `β ∈ (max{0, 5/q − 2}, 1]`.
    pub open: bool,
    /// `q ≥ 5/3` and `β ∈ [max{0, 5/q − 2}, 1]`, `β > 0`.
    pub closed: bool,
}

pub fn beta_feasibility<T: Scalar>(q: T, beta: T) -> BetaFeasibility {
    let one = c::<T>(1);
    let thr = beta_threshold(q.clone());
    let in_top = beta <= one && beta > c::<T>(0);
    BetaFeasibility {
        open: q > ratio::<T>(5, 3) && beta > thr && in_top,
        closed: q >= ratio::<T>(5, 3) && beta >= thr && in_top,
    }
}

/// Smallest admissible `p`, which maximises `U(p, q)`; the limit `p → 1⁺`
/// is represented by `1 + 1e-6`.
pub fn witness_p(q: f64, delta: f64) -> Result<f64> {
    let r = p_range(q, delta)?;
    Ok(if r.lower_closed { r.lower } else { 1.0 + 1e-6 })
}

/// Brute-force feasibility: scans `p` on a uniform grid of `(1, 3)` plus
/// `p = 1 + 1e-6` and tests every range condition and `1 − θ ≤ q(1 − α)` directly.
pub fn feasible_region_bruteforce(q: f64, delta: f64, grid_steps: usize) -> Result<bool> {
    if grid_steps < 1000 {
        return Err(invalid("grid_steps", format!("need at least 1000, got {grid_steps}")));
    }
    if !(q > 1.0) || !(0.0..1.0).contains(&delta) {
        return Err(invalid("q", format!("need q > 1 and δ in [0, 1), got q={q}, δ={delta}")));
    }
    const EPS: f64 = 1e-12;
    let candidates = std::iter::once(1.0 + 1e-6).chain((1..grid_steps).map(|i| 1.0 + 2.0 * i as f64 / grid_steps as f64));
    for p in candidates {
        let sigma = 3.0 * p / ((4.0 - delta) * p - 3.0);
        let inv_sigma = 1.0 / sigma;
        // θ from 1/σ = θ + (1 − θ)/q
        let theta = (inv_sigma - 1.0 / q) / (1.0 - 1.0 / q);
        let alpha = 1.5 * (1.0 - 1.0 / p);
        let ok = sigma >= 1.0 - EPS
            && sigma <= q + EPS
            && (-EPS..=1.0 + EPS).contains(&theta)
            && alpha > 0.0
            && alpha < 1.0
            && 1.0 - theta <= q * (1.0 - alpha) + EPS;
        if ok {
            return Ok(true);
        }
    }
    Ok(false)
}

/// One row of the feasibility table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FeasibilityRow {
    pub q: f64,
    pub delta: f64,
    pub delta_max: Option<f64>,
    pub beta_threshold: f64,
    /// `δ ≤ δ_max` (closed endpoint).
    pub feasible_closed: bool,
    /// `β > β_threshold` and `q > 5/3` (open endpoint).
    pub feasible_open: bool,
    pub witness_p: f64,
    pub sigma: f64,
    pub theta: f64,
    pub alpha: f64,
    pub gamma: f64,
}

/// Feasibility table over `q_values × delta_values` from the closed forms.
pub fn feasibility_table(q_values: &[f64], delta_values: &[f64]) -> Result<Vec<FeasibilityRow>> {
    let mut rows = Vec::new();
    for &q in q_values {
        for &delta in delta_values {
            let p = witness_p(q, delta)?;
            let s = derive_indices(q, delta, p.min(3.0 - 1e-12))?;
            let dm = delta_max(q);
            let bf = beta_feasibility(q, 1.0 - delta);
            rows.push(FeasibilityRow {
                q,
                delta,
                delta_max: dm,
                beta_threshold: beta_threshold(q),
                feasible_closed: dm.is_some_and(|m| delta <= m + 1e-12),
                feasible_open: bf.open,
                witness_p: p,
                sigma: s.sigma,
                theta: s.theta,
                alpha: s.alpha,
                gamma: s.gamma,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    fn r(a: i64, b: i64) -> BigRational {
        ratio(a, b)
    }

    #[test]
    fn q2_delta_half_exact() {
        let s = derive_indices(r(2, 1), r(1, 2), r(3, 2)).unwrap();
        assert_eq!(s.sigma, r(2, 1));
        assert_eq!(s.theta, r(0, 1));
        assert_eq!(s.alpha, r(1, 2));
        assert_eq!(s.gamma, r(1, 1));
        assert!(s.closing_ok && s.closing_equality && s.feasible);
        assert_eq!(s.lambda_exp, r(5, 2));
    }

    #[test]
    fn q2_delta_zero_exact() {
        let s = derive_indices(r(2, 1), r(0, 1), r(3, 2)).unwrap();
        assert_eq!(s.sigma, r(3, 2));
        assert_eq!(s.theta, r(1, 3));
        assert_eq!(s.gamma, r(2, 3));
        assert!(s.closing_ok && !s.closing_equality);
    }

    #[test]
    fn p_near_three_is_infeasible() {
        let s = derive_indices(2.0, 0.5, 3.0 - 1e-9).unwrap();
        assert!(s.alpha > 0.999 && s.alpha < 1.0);
        assert!(!s.feasible);
        assert!(derive_indices(2.0, 0.5, 3.0).is_err());
        assert!(derive_indices(2.0, 0.5, 1.0).is_err());
    }

    #[test]
    fn closing_condition_examples() {
        assert!(closing_condition(&r(0, 1), &r(1, 2), &r(2, 1)));
        assert!(closing_condition(&1.0, &0.99, &1.5));
        assert!(!closing_condition(&0.0, &0.9, &2.0));
    }

    #[test]
    fn u_bound_examples() {
        assert_eq!(u_bound(&r(3, 2), &r(2, 1)), r(1, 2));
        assert!(u_bound(&(3.0 - 1e-12), &2.0) < 1e-11);
    }

    #[test]
    fn p_range_examples() {
        let pr = p_range(r(2, 1), r(1, 2)).unwrap();
        assert_eq!(pr.lower, r(3, 2));
        assert!(pr.lower_closed && !pr.empty);
        let pr = p_range(4.0, 0.0).unwrap();
        assert_eq!(pr.lower, 1.0);
        assert!(!pr.lower_closed);
        // at q = 5/3 the lower end is 15/(11 − 5δ) < 3 for every δ in [0, 1)
        assert_eq!(p_range(r(5, 3), r(0, 1)).unwrap().lower, r(15, 11));
        assert_eq!(p_range(r(5, 3), r(4, 5)).unwrap().lower, r(15, 7));
        assert!(!p_range(r(5, 3), r(99, 100)).unwrap().empty);
    }

    #[test]
    fn delta_max_and_threshold() {
        assert_eq!(delta_max(r(2, 1)), Some(r(1, 2)));
        assert_eq!(delta_max(r(5, 1)), Some(r(1, 1)));
        assert_eq!(delta_max(r(5, 3)), Some(r(0, 1)));
        assert_eq!(delta_max(r(8, 5)), None);
        assert_eq!(beta_threshold(r(2, 1)), r(1, 2));
        assert_eq!(beta_threshold(r(5, 2)), r(0, 1));
        let near = delta_max(5.0 / 3.0 + 1e-9).unwrap();
        assert!(near > 0.0 && near < 1e-8);
    }

    #[test]
    fn beta_endpoints() {
        let f = beta_feasibility(r(2, 1), r(1, 2));
        assert!(f.closed && !f.open);
        let f = beta_feasibility(r(2, 1), r(51, 100));
        assert!(f.closed && f.open);
        let f = beta_feasibility(r(5, 3), r(1, 1));
        assert!(f.closed && !f.open);
    }

    #[test]
    fn bruteforce_small_grid_is_rejected() {
        assert!(feasible_region_bruteforce(2.0, 0.1, 10).is_err());
    }
}
