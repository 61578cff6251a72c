//! Time series of `Q(t) = ∫|ω|^q` and the terms of its evolution inequality
//!
//! ```text
//! dQ/dt + 4(q−1)/q ν ∫|∇(|ω|^{q/2})|² ≤ q ∫ |ω|^{q−2} S:(ω⊗ω),
//! ```
//!
//! together with the Grönwall bound that closes the estimate.
//!
//! For smooth solutions the inequality is not an equality: the difference is
//! the nonnegative gap `q ν ∫ |ω|^{q−2} (|∇ω|² − |∇|ω||²)` (Kato's inequality
//! `|∇|ω|| ≤ |∇ω|`), which vanishes only when the vorticity direction is
//! locally constant. Records carry this gap so the slack can be checked
//! against it.

use serde::{Deserialize, Serialize};

use crate::alignment::{j_quantity_with, xyz_budget, CutoffParams, RieszKernel};
use crate::error::{invalid, Error, Result};
use crate::field::norm3;
use crate::solver::{energy, enstrophy, SolverState};
use crate::strain::strain_spectral;

/// Every ingredient of the `Q` balance at one time and one exponent `q`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LedgerRecord {
    pub t: f64,
    pub q: f64,
    /// `∫|ω|^q`.
    pub big_q: f64,
    /// `∫|∇(|ω|^{q/2})|²`.
    pub grad_term: f64,
    /// `q ∫|ω|^{q−2} S:(ω⊗ω)`.
    pub rhs: f64,
    /// `q ν ∫|ω|^{q−2}(|∇ω|² − |∇|ω||²) ≥ 0`.
    pub kato_gap: f64,
    pub l1_norm: f64,
    pub energy: f64,
    pub enstrophy: f64,
    pub budget: Option<BudgetTerms>,
}

/// Cutoff splitting and `J` on the same snapshot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BudgetTerms {
    pub x_int: f64,
    pub y_int: f64,
    pub z_int: f64,
    pub j: f64,
}

/// Parameters for the optional [`BudgetTerms`].
#[derive(Clone, Copy, Debug)]
pub struct BudgetOptions {
    pub lambda_threshold: f64,
    pub rho: f64,
    pub lambda_exp: f64,
}

/// Records one snapshot for every `q` in `q_list`.
pub fn record(state: &SolverState, q_list: &[f64], budget: Option<&BudgetOptions>) -> Result<Vec<LedgerRecord>> {
    if let Some(q) = q_list.iter().find(|&&q| !(q > 1.0)) {
        return Err(invalid("q", format!("every exponent must exceed 1, got {q}")));
    }
    let grid = state.grid();
    let h3 = grid.cell_volume();
    let w_hat = state.vorticity_hat();
    let omega = w_hat.to_physical();
    let grads: Vec<_> = w_hat.components().iter().map(|c| c.gradient().to_physical()).collect();
    let strain = strain_spectral(&state.u_hat).to_physical();

    let len = grid.len();
    let mut mag = vec![0.0; len];
    let mut grad_sq = vec![0.0; len];
    let mut grad_mag_sq = vec![0.0; len];
    let mut stretch = vec![0.0; len];
    for idx in 0..len {
        let w = omega.at(idx);
        let m = norm3(w);
        mag[idx] = m;
        let mut g_abs = [0.0; 3];
        let mut gsq = 0.0;
        for (a, g) in grads.iter().enumerate() {
            let ga = g.at(idx);
            for b in 0..3 {
                g_abs[b] += w[a] * ga[b];
                gsq += ga[b] * ga[b];
            }
        }
        grad_sq[idx] = gsq;
        if m > 0.0 {
            grad_mag_sq[idx] = (g_abs[0] * g_abs[0] + g_abs[1] * g_abs[1] + g_abs[2] * g_abs[2]) / (m * m);
            stretch[idx] = strain.contract(idx, w, w) / (m * m);
        }
    }
    let l1 = mag.iter().sum::<f64>() * h3;
    let e = energy(state);
    let z = enstrophy(state);

    let kernel = match budget {
        Some(b) => Some(RieszKernel::new(grid, b.lambda_exp)?),
        None => None,
    };

    let mut out = Vec::with_capacity(q_list.len());
    for &q in q_list {
        let (mut big_q, mut grad_term, mut rhs, mut gap) = (0.0, 0.0, 0.0, 0.0);
        for idx in 0..len {
            let m = mag[idx];
            if m == 0.0 {
                if q == 2.0 {
                    gap += grad_sq[idx];
                }
                continue;
            }
            let mq = m.powf(q);
            let mq2 = mq / (m * m);
            big_q += mq;
            grad_term += mq2 * grad_mag_sq[idx];
            rhs += mq * stretch[idx];
            gap += mq2 * (grad_sq[idx] - grad_mag_sq[idx]);
        }
        let budget_terms = match (budget, &kernel) {
            (Some(b), Some(k)) => {
                let xyz = xyz_budget(&state.u_hat, &CutoffParams::new(b.lambda_threshold)?, q)?;
                Some(BudgetTerms {
                    x_int: xyz.x_int,
                    y_int: xyz.y_int,
                    z_int: xyz.z_int,
                    j: j_quantity_with(k, &omega, q, b.rho)?,
                })
            }
            _ => None,
        };
        out.push(LedgerRecord {
            t: state.time,
            q,
            big_q: big_q * h3,
            grad_term: 0.25 * q * q * grad_term * h3,
            rhs: q * rhs * h3,
            kato_gap: q * state.nu * gap * h3,
            l1_norm: l1,
            energy: e,
            enstrophy: z,
            budget: budget_terms,
        });
    }
    Ok(out)
}

/// Records with exponent `q`, in time order.
pub fn series_for(records: &[LedgerRecord], q: f64) -> Vec<LedgerRecord> {
    let mut v: Vec<_> = records.iter().filter(|r| r.q == q).cloned().collect();
    v.sort_by(|a, b| a.t.total_cmp(&b.t));
    v
}

fn uniform_stride(times: &[f64]) -> Result<f64> {
    let dt = times[1] - times[0];
    for w in times.windows(2) {
        let d = w[1] - w[0];
        if (d - dt).abs() > 1e-9 * dt.abs().max(1e-300) {
            return Err(Error::NonUniformStride { first: dt, other: d });
        }
    }
    Ok(dt)
}

/// Second-order derivative of uniformly spaced samples: centred inside,
/// one-sided three-point at the ends.
pub fn time_derivative(values: &[f64], dt: f64) -> Vec<f64> {
    let n = values.len();
    (0..n)
        .map(|i| {
            if i == 0 {
                (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * dt)
            } else if i == n - 1 {
                (3.0 * values[n - 1] - 4.0 * values[n - 2] + values[n - 3]) / (2.0 * dt)
            } else {
                (values[i + 1] - values[i - 1]) / (2.0 * dt)
            }
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlackPoint {
    pub t: f64,
    pub dq_dt: f64,
    /// `rhs − dQ/dt − 4(q−1)/q ν grad_term`.
    pub slack: f64,
    pub kato_gap: f64,
    /// `slack − kato_gap`: zero for exact solutions of the discrete system up
    /// to time-differencing and quadrature error.
    pub residual: f64,
}

/// Slack of the `Q` inequality along a uniformly recorded series of one `q`.
pub fn qian_slack(series: &[LedgerRecord], nu: f64) -> Result<Vec<SlackPoint>> {
    if series.len() < 3 {
        return Err(Error::TooFewRecords {
            needed: 3,
            got: series.len(),
        });
    }
    let q = series[0].q;
    if series.iter().any(|r| r.q != q) {
        return Err(invalid("series", "records mix several exponents"));
    }
    let times: Vec<f64> = series.iter().map(|r| r.t).collect();
    let dt = uniform_stride(&times)?;
    let qs: Vec<f64> = series.iter().map(|r| r.big_q).collect();
    let dq = time_derivative(&qs, dt);
    let c = 4.0 * (q - 1.0) / q * nu;
    Ok(series
        .iter()
        .zip(dq)
        .map(|(r, d)| {
            let slack = r.rhs - d - c * r.grad_term;
            SlackPoint {
                t: r.t,
                dq_dt: d,
                slack,
                kato_gap: r.kato_gap,
                residual: slack - r.kato_gap,
            }
        })
        .collect())
}

/// Space-time integrals of a `Q(t)` series.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpacetimeNorm {
    /// `∫₀ᵀ Q dt` (trapezoid).
    pub integral: f64,
    /// `‖ω‖_{L^q(Ω×[0,T])} = (∫₀ᵀ Q dt)^{1/q}`.
    pub norm: f64,
    /// `∫₀ᵀ Q^γ dt`.
    pub gamma_integral: f64,
    /// `T^{1−γ} (∫₀ᵀ Q dt)^γ`, which dominates `gamma_integral` by Hölder.
    pub holder_bound: f64,
    pub span: f64,
    /// Set when the series has a single record and every integral is zero.
    pub degenerate: bool,
}

impl SpacetimeNorm {
    pub fn holder_holds(&self) -> bool {
        self.gamma_integral <= self.holder_bound * (1.0 + 1e-12) + 1e-300
    }
}

/// Trapezoid-rule space-time norm of `(t, Q)` samples with uniform spacing.
pub fn spacetime_norm(times: &[f64], big_q: &[f64], q: f64, gamma: f64) -> Result<SpacetimeNorm> {
    if times.len() != big_q.len() {
        return Err(Error::DimensionMismatch {
            expected: times.len(),
            actual: big_q.len(),
        });
    }
    if times.is_empty() {
        return Err(Error::TooFewRecords { needed: 1, got: 0 });
    }
    if !(q > 1.0) || !(gamma > 0.0 && gamma <= 1.0) {
        return Err(invalid("gamma", format!("need q > 1 and 0 < γ <= 1, got q={q}, γ={gamma}")));
    }
    if times.len() == 1 {
        log::warn!("single-record series: space-time integrals are zero");
        return Ok(SpacetimeNorm {
            integral: 0.0,
            norm: 0.0,
            gamma_integral: 0.0,
            holder_bound: 0.0,
            span: 0.0,
            degenerate: true,
        });
    }
    let dt = uniform_stride(times)?;
    let trap = |v: &[f64]| {
        let inner: f64 = v[1..v.len() - 1].iter().sum();
        dt * (inner + 0.5 * (v[0] + v[v.len() - 1]))
    };
    let integral = trap(big_q);
    let powered: Vec<f64> = big_q.iter().map(|v| v.powf(gamma)).collect();
    let span = times[times.len() - 1] - times[0];
    Ok(SpacetimeNorm {
        integral,
        norm: integral.powf(1.0 / q),
        gamma_integral: trap(&powered),
        holder_bound: span.powf(1.0 - gamma) * integral.powf(gamma),
        span,
        degenerate: false,
    })
}

/// Inputs of the closing Grönwall bound. `c_fit` stands in for the
/// non-constructive constant of the estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GronwallParams {
    pub q: f64,
    /// Vorticity threshold `Λ`.
    pub lambda_threshold: f64,
    /// Bound `Γ` on `‖ω(t)‖_{L¹}`.
    pub gamma_l1: f64,
    pub rho: f64,
    pub nu: f64,
    pub theta: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub t_end: f64,
    pub c_fit: f64,
}

impl GronwallParams {
    pub fn validate(&self) -> Result<()> {
        if self.gamma > 1.0 {
            return Err(Error::GammaTooLarge(self.gamma));
        }
        let positive = [
            ("lambda_threshold", self.lambda_threshold),
            ("gamma_l1", self.gamma_l1),
            ("rho", self.rho),
            ("nu", self.nu),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(invalid(name, format!("must be positive, got {v}")));
            }
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(invalid("alpha", format!("must lie in (0, 1), got {}", self.alpha)));
        }
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(invalid("theta", format!("must lie in [0, 1], got {}", self.theta)));
        }
        if !(self.t_end >= 0.0) || !(self.c_fit >= 0.0) || !(self.q > 1.0) || !(self.gamma > 0.0) {
            return Err(invalid("gronwall", format!("{self:?}")));
        }
        Ok(())
    }

    /// `{Λ + ν⁻³Λ²Γ²}`, the linear growth coefficient without `C`.
    pub fn linear_rate(&self) -> f64 {
        self.lambda_threshold + self.nu.powi(-3) * (self.lambda_threshold * self.gamma_l1).powi(2)
    }

    /// `Γ^{θ/(1−α)} ν^{−α/(1−α)} ρ^{−1/α}`, the coefficient of `Q^γ` without `C`.
    pub fn power_coefficient(&self) -> f64 {
        let a = self.alpha;
        self.gamma_l1.powf(self.theta / (1.0 - a)) * self.nu.powf(-a / (1.0 - a)) * self.rho.powf(-1.0 / a)
    }
}

/// Value of the bound and whether it sits on the `γ = 1` boundary.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GronwallBound {
    pub value: f64,
    pub gamma_boundary: bool,
}

/// `Q₀ exp{C(Λ + ν⁻³Λ²Γ²)T + C T^{1−γ} ‖ω‖^{qγ}_{L^q(Ω×[0,T])} Γ^{θ/(1−α)} ν^{−α/(1−α)} ρ^{−1/α}}`.
pub fn gronwall_bound(params: &GronwallParams, q0: f64, spacetime_norm: f64) -> Result<GronwallBound> {
    params.validate()?;
    let p = params;
    let t = p.t_end;
    let exponent = p.c_fit * p.linear_rate() * t
        + p.c_fit * t.powf(1.0 - p.gamma) * spacetime_norm.powf(p.q * p.gamma) * p.power_coefficient();
    let exponent = if t == 0.0 { 0.0 } else { exponent };
    Ok(GronwallBound {
        value: q0 * exponent.exp(),
        gamma_boundary: p.gamma == 1.0,
    })
}

/// Envelope for `dQ/dt ≤ aQ + bQ^{1+γ}`:
/// `Q(T) ≤ Q₀ exp(aT + b T^{1−γ} (∫₀ᵀ Q)^γ)`.
pub fn power_envelope(q0: f64, a: f64, b: f64, gamma: f64, t: f64, integral_q: f64) -> f64 {
    q0 * (a * t + b * t.powf(1.0 - gamma) * integral_q.powf(gamma)).exp()
}

/// Smallest `C ≥ 0` with
/// `dQ/dt + (q−1)/q ν grad ≤ C {Λ + ν⁻³Λ²Γ² + P Q^γ} Q` on every interior
/// record, where `P` is [`GronwallParams::power_coefficient`].
pub fn calibrate_constant(series: &[LedgerRecord], params: &GronwallParams) -> Result<f64> {
    let pts = qian_slack(series, params.nu)?;
    let q = params.q;
    let mut c: f64 = 0.0;
    for (r, s) in series.iter().zip(&pts) {
        let lhs = s.dq_dt + (q - 1.0) / q * params.nu * r.grad_term;
        let rate = (params.linear_rate() + params.power_coefficient() * r.big_q.powf(params.gamma)) * r.big_q;
        if rate > 0.0 {
            c = c.max(lhs / rate);
        }
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> GronwallParams {
        GronwallParams {
            q: 2.0,
            lambda_threshold: 1.0,
            gamma_l1: 2.0,
            rho: 0.5,
            nu: 0.1,
            theta: 0.0,
            alpha: 0.375,
            gamma: 0.8,
            t_end: 1.0,
            c_fit: 0.01,
        }
    }

    #[test]
    fn zero_time_returns_initial_value() {
        let p = GronwallParams { t_end: 0.0, ..params() };
        assert_eq!(gronwall_bound(&p, 3.5, 10.0).unwrap().value, 3.5);
    }

    #[test]
    fn gamma_above_one_is_rejected_and_one_is_flagged() {
        let p = GronwallParams { gamma: 1.2, ..params() };
        assert!(matches!(gronwall_bound(&p, 1.0, 1.0), Err(Error::GammaTooLarge(_))));
        let p = GronwallParams { gamma: 1.0, ..params() };
        let b = gronwall_bound(&p, 1.0, 1.0).unwrap();
        assert!(b.gamma_boundary && b.value.is_finite());
    }

    #[test]
    fn bound_monotonicity() {
        let base = gronwall_bound(&params(), 1.0, 2.0).unwrap().value;
        let up = |p: GronwallParams| gronwall_bound(&p, 1.0, 2.0).unwrap().value;
        assert!(up(GronwallParams { lambda_threshold: 1.5, ..params() }) > base);
        assert!(up(GronwallParams { gamma_l1: 3.0, ..params() }) > base);
        assert!(up(GronwallParams { t_end: 2.0, ..params() }) > base);
        assert!(up(GronwallParams { rho: 1.0, ..params() }) < base);
        assert!(up(GronwallParams { nu: 0.2, ..params() }) < base);
    }

    #[test]
    fn derivative_is_exact_for_quadratics() {
        let v: Vec<f64> = (0..6).map(|i| (0.1 * i as f64).powi(2)).collect();
        let d = time_derivative(&v, 0.1);
        for (i, di) in d.iter().enumerate() {
            assert!((di - 0.2 * i as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn spacetime_norm_of_constant_series() {
        let t = [0.0, 0.5, 1.0, 1.5, 2.0];
        let s = spacetime_norm(&t, &[3.0; 5], 2.0, 0.5).unwrap();
        assert!((s.integral - 6.0).abs() < 1e-12);
        assert!((s.norm - 6f64.sqrt()).abs() < 1e-12);
        assert!(s.holder_holds());
        let single = spacetime_norm(&[0.0], &[1.0], 2.0, 0.5).unwrap();
        assert!(single.degenerate);
    }

    #[test]
    fn nonuniform_stride_is_rejected() {
        assert!(matches!(
            spacetime_norm(&[0.0, 0.1, 0.3], &[1.0; 3], 2.0, 0.5),
            Err(Error::NonUniformStride { .. })
        ));
    }
}
