//! Pseudo-spectral time integration of the incompressible Navier–Stokes
//! equations on the periodic box.
//!
//! The nonlinearity is evaluated in rotational form, `P(u × ω)`, with the
//! two-thirds rule applied to the product; the pressure gradient and the
//! `∇|u|²/2` part are removed by the Leray projection `P`. Time stepping is
//! classical RK4 on the variable `e^{ν|k|²t} û`, so the viscous decay of each
//! mode is integrated exactly.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::field::{cross3, transform_forward, PhysicalVector, VectorField};
use crate::grid::Grid;

#[derive(Clone, Debug)]
pub struct SolverState {
    /// Velocity coefficients; divergence-free and dealiased.
    pub u_hat: VectorField,
    pub time: f64,
    pub nu: f64,
}

impl SolverState {
    pub fn new(u_hat: VectorField, nu: f64) -> Result<Self> {
        if !(nu > 0.0) || !nu.is_finite() {
            return Err(invalid("nu", format!("viscosity must be positive, got {nu}")));
        }
        Ok(SolverState {
            u_hat,
            time: 0.0,
            nu,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.u_hat.grid()
    }

    pub fn vorticity_hat(&self) -> VectorField {
        self.u_hat.curl()
    }

    pub fn velocity(&self) -> PhysicalVector {
        self.u_hat.to_physical()
    }

    pub fn vorticity(&self) -> PhysicalVector {
        self.u_hat.curl().to_physical()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum StepControl {
    Fixed { dt: f64 },
    /// `dt = cfl · h / max|u|`, capped at `dt_max`.
    Cfl { cfl: f64, dt_max: f64 },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    #[default]
    IntegratingFactorRk4,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolverConfig {
    pub step: StepControl,
    pub t_end: f64,
    pub scheme: Scheme,
    pub dealias: bool,
    /// Observer is called every `record_stride` steps (and at t = 0).
    pub record_stride: usize,
    /// Runs stop with [`Error::BlowUp`] once `max|ω|` exceeds this.
    pub vorticity_ceiling: Option<f64>,
}

impl SolverConfig {
    pub fn fixed(dt: f64, t_end: f64) -> Self {
        SolverConfig {
            step: StepControl::Fixed { dt },
            t_end,
            scheme: Scheme::IntegratingFactorRk4,
            dealias: true,
            record_stride: 1,
            vorticity_ceiling: None,
        }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.record_stride = stride;
        self
    }

    pub fn validate(&self) -> Result<()> {
        match self.step {
            StepControl::Fixed { dt } if !(dt > 0.0) => {
                return Err(invalid("dt", format!("must be positive, got {dt}")))
            }
            StepControl::Cfl { cfl, dt_max } if !(cfl > 0.0 && cfl <= 1.0 && dt_max > 0.0) => {
                return Err(invalid("cfl", format!("need 0 < cfl <= 1 and dt_max > 0, got {cfl}, {dt_max}")))
            }
            _ => {}
        }
        if !(self.t_end >= 0.0) {
            return Err(invalid("t_end", format!("must be non-negative, got {}", self.t_end)));
        }
        if self.record_stride == 0 {
            return Err(invalid("record_stride", "must be at least 1"));
        }
        Ok(())
    }
}

/// `P(u × ω)` with `ω = curl u`, dealiased when `dealias` is set. For
/// divergence-free `u` this equals `-P(u·∇)u`.
pub fn nonlinear_term(u_hat: &VectorField, dealias: bool) -> VectorField {
    let u = u_hat.to_physical();
    let w = u_hat.curl().to_physical();
    let grid = u_hat.grid();
    let mut prod = PhysicalVector::zeros(grid);
    for idx in 0..grid.len() {
        prod.set(idx, cross3(u.at(idx), w.at(idx)));
    }
    let mut out = VectorField::from_physical(&prod);
    if dealias {
        out.dealias();
    }
    out.leray_project_in_place();
    out
}

fn decay_factors(grid: &Grid, nu: f64, dt: f64) -> Vec<f64> {
    (0..grid.len())
        .map(|idx| {
            let k = grid.kvec(idx);
            (-nu * (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) * dt).exp()
        })
        .collect()
}

/// `out = e ⊙ (a + s·b)` mode by mode, for every component.
fn combine(e: &[f64], a: &VectorField, s: f64, b: &VectorField) -> VectorField {
    let mut out = a.clone();
    for c in 0..3 {
        let bc = b.component(c).coeffs();
        for (idx, x) in out.component_mut(c).coeffs_mut().iter_mut().enumerate() {
            *x = (*x + bc[idx] * s) * e[idx];
        }
    }
    out
}

/// One integrating-factor RK4 step of size `dt`.
pub fn step(state: &SolverState, dt: f64, dealias: bool) -> Result<SolverState> {
    if !(dt > 0.0) {
        return Err(invalid("dt", format!("must be positive, got {dt}")));
    }
    let grid = state.grid();
    let e_half = decay_factors(grid, state.nu, 0.5 * dt);
    let e_full: Vec<f64> = e_half.iter().map(|e| e * e).collect();
    let ones = vec![1.0; grid.len()];
    let u = &state.u_hat;

    let k1 = nonlinear_term(u, dealias);
    let u2 = combine(&e_half, u, 0.5 * dt, &k1);
    let k2 = nonlinear_term(&u2, dealias);
    let eu = combine(&e_half, u, 0.0, &k2);
    let u3 = combine(&ones, &eu, 0.5 * dt, &k2);
    let k3 = nonlinear_term(&u3, dealias);
    let ek3 = combine(&e_half, &k3, 0.0, &k3);
    let u4 = combine(&ones, &combine(&e_full, u, 0.0, &k3), dt, &ek3);
    let k4 = nonlinear_term(&u4, dealias);

    let mut next = u.clone();
    for c in 0..3 {
        let (c1, c2, c3, c4) = (
            k1.component(c).coeffs(),
            k2.component(c).coeffs(),
            k3.component(c).coeffs(),
            k4.component(c).coeffs(),
        );
        for (idx, x) in next.component_mut(c).coeffs_mut().iter_mut().enumerate() {
            let ef = e_full[idx];
            let eh = e_half[idx];
            *x = ef * *x + (dt / 6.0) * (c1[idx] * ef + (c2[idx] + c3[idx]) * (2.0 * eh) + c4[idx]);
        }
    }
    let time = state.time + dt;
    let finite = next
        .components()
        .iter()
        .all(|c| c.coeffs().iter().all(|z| z.re.is_finite() && z.im.is_finite()));
    if !finite {
        return Err(Error::BlowUp {
            time,
            reason: "non-finite velocity coefficients".into(),
        });
    }
    Ok(SolverState {
        u_hat: next,
        time,
        nu: state.nu,
    })
}

/// Advective time step `cfl · h / max|u|`.
pub fn cfl_dt(state: &SolverState, cfl: f64) -> f64 {
    let umax = state.velocity().max_magnitude();
    if umax == 0.0 {
        f64::INFINITY
    } else {
        cfl * state.grid().spacing() / umax
    }
}

/// Advances `state` to `config.t_end`, calling `observer(state, step_index)`
/// at t = 0, every `record_stride` steps, and at the final time if it does
/// not fall on the stride.
pub fn integrate<F>(mut state: SolverState, config: &SolverConfig, mut observer: F) -> Result<SolverState>
where
    F: FnMut(&SolverState, usize) -> Result<()>,
{
    config.validate()?;
    observer(&state, 0)?;
    let t_end = config.t_end;
    let mut steps = 0usize;
    let mut last_recorded = 0usize;
    let fixed_steps = match config.step {
        StepControl::Fixed { dt } => Some(((t_end - state.time) / dt).round().max(0.0) as usize),
        StepControl::Cfl { .. } => None,
    };
    loop {
        let dt = match (config.step, fixed_steps) {
            (StepControl::Fixed { dt }, Some(total)) => {
                if steps >= total {
                    break;
                }
                if steps + 1 == total {
                    // land exactly on t_end
                    t_end - state.time
                } else {
                    dt
                }
            }
            (StepControl::Cfl { cfl, dt_max }, _) => {
                let remaining = t_end - state.time;
                if remaining <= 1e-12 * t_end.max(1.0) {
                    break;
                }
                cfl_dt(&state, cfl).min(dt_max).min(remaining)
            }
            _ => unreachable!(),
        };
        state = step(&state, dt, config.dealias)?;
        steps += 1;
        if let Some(ceiling) = config.vorticity_ceiling {
            let wmax = state.vorticity().max_magnitude();
            if wmax > ceiling {
                return Err(Error::BlowUp {
                    time: state.time,
                    reason: format!("max|ω| = {wmax:e} exceeds ceiling {ceiling:e}"),
                });
            }
        }
        if steps.is_multiple_of(config.record_stride) {
            observer(&state, steps)?;
            last_recorded = steps;
        }
    }
    if last_recorded != steps {
        observer(&state, steps)?;
    }
    Ok(state)
}

/// `½ ∫ |u|^2`.
pub fn energy(state: &SolverState) -> f64 {
    0.5 * state.u_hat.l2_norm_sq()
}

/// `½ ∫ |ω|^2`.
pub fn enstrophy(state: &SolverState) -> f64 {
    0.5 * state.u_hat.curl().l2_norm_sq()
}

fn state_from_physical(grid: &Arc<Grid>, nu: f64, f: impl Fn(f64, f64, f64) -> [f64; 3]) -> SolverState {
    let mut u = VectorField::from_physical(&PhysicalVector::from_fn(grid, f));
    u.dealias();
    u.leray_project_in_place();
    SolverState { u_hat: u, time: 0.0, nu }
}

/// `u = (cos x sin y sin z, -sin x cos y sin z, 0)`.
pub fn init_taylor_green(grid: &Arc<Grid>, nu: f64) -> SolverState {
    state_from_physical(grid, nu, |x, y, z| {
        [x.cos() * y.sin() * z.sin(), -x.sin() * y.cos() * z.sin(), 0.0]
    })
}

/// Planar Taylor–Green cell `(cos x sin y, -sin x cos y, 0)`; an exact
/// solution decaying as `e^{-2νt}`.
pub fn init_taylor_green_2d(grid: &Arc<Grid>, nu: f64) -> SolverState {
    state_from_physical(grid, nu, |x, y, _| [x.cos() * y.sin(), -x.sin() * y.cos(), 0.0])
}

/// Arnold–Beltrami–Childress flow; `curl u = u`, so it decays as `e^{-νt}`.
pub fn init_abc(grid: &Arc<Grid>, nu: f64, a: f64, b: f64, c: f64) -> SolverState {
    state_from_physical(grid, nu, move |x, y, z| {
        [
            a * z.sin() + c * y.cos(),
            b * x.sin() + a * z.cos(),
            c * y.sin() + b * x.cos(),
        ]
    })
}

/// Parameters of the random solenoidal initial condition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomInit {
    /// Low-wavenumber slope `s` of `E(k) ∝ (k/k_p)^s exp(-(s/2)(k/k_p)^2)`.
    pub spectrum_slope: f64,
    pub k_peak: f64,
    /// Target mean kinetic energy density `⟨|u|^2⟩/2`.
    pub energy_density: f64,
    pub seed: u64,
}

impl Default for RandomInit {
    fn default() -> Self {
        RandomInit {
            spectrum_slope: 4.0,
            k_peak: 2.0,
            energy_density: 0.5,
            seed: 1,
        }
    }
}

fn wavevector_stream(k: [i64; 3]) -> u64 {
    let enc = |v: i64| (v + (1 << 20)) as u64 & ((1 << 21) - 1);
    (enc(k[0]) << 42) | (enc(k[1]) << 21) | enc(k[2])
}

/// Random divergence-free, mean-free, dealiased velocity with the spectrum of
/// [`RandomInit`].
///
/// Each wavevector draws from its own ChaCha8 stream keyed by `(seed, k)`, so
/// the same seed produces the same modes on every grid that resolves them.
pub fn init_random_divfree(grid: &Arc<Grid>, nu: f64, init: &RandomInit) -> Result<SolverState> {
    if !(init.k_peak > 0.0) || !(init.energy_density > 0.0) || !init.spectrum_slope.is_finite() {
        return Err(invalid("random_init", format!("{init:?}")));
    }
    let mut u = VectorField::zeros(grid);
    for idx in 0..grid.len() {
        if !grid.is_retained(idx) {
            continue;
        }
        let [i, j, l] = grid.unravel(idx);
        let k = [grid.wavenumber(i), grid.wavenumber(j), grid.wavenumber(l)];
        // one representative per ±k pair
        let first = k.iter().copied().find(|&c| c != 0);
        if !matches!(first, Some(c) if c > 0) {
            continue;
        }
        let kf = k.map(|c| c as f64);
        let kmag = (kf[0] * kf[0] + kf[1] * kf[1] + kf[2] * kf[2]).sqrt();
        let ratio = kmag / init.k_peak;
        let ek = ratio.powf(init.spectrum_slope) * (-0.5 * init.spectrum_slope * ratio * ratio).exp();
        let amp = (ek / (4.0 * PI * kmag * kmag)).sqrt();

        let mut rng = ChaCha8Rng::seed_from_u64(init.seed);
        rng.set_stream(wavevector_stream(k));
        let mut v = [Complex64::new(0.0, 0.0); 3];
        for c in v.iter_mut() {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *c = Complex64::new(re, im) * amp;
        }
        let kv = (v[0] * kf[0] + v[1] * kf[1] + v[2] * kf[2]) / (kmag * kmag);
        let v = [v[0] - kv * kf[0], v[1] - kv * kf[1], v[2] - kv * kf[2]];
        u.set_coeff(idx, v);
        u.set_coeff(grid.conjugate_index(idx), v.map(|c| c.conj()));
    }
    let current = 0.5 * u.l2_norm_sq() / grid.volume();
    if current == 0.0 {
        return Err(invalid("random_init", "no modes resolved on this grid"));
    }
    let u = u.scaled((init.energy_density / current).sqrt());
    SolverState::new(u, nu)
}

/// Velocity built from a physical sampling; used by tests and examples.
pub fn state_from_samples(grid: &Arc<Grid>, nu: f64, values: [Vec<f64>; 3]) -> Result<SolverState> {
    let comps = values
        .iter()
        .map(|v| transform_forward(grid, v))
        .collect::<Result<Vec<_>>>()?;
    let comps: [_; 3] = comps.try_into().expect("three components");
    let mut u = VectorField::from_components(comps)?;
    u.dealias();
    u.leray_project_in_place();
    SolverState::new(u, nu)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_nonpositive_viscosity() {
        let g = Grid::new(8).unwrap();
        assert!(SolverState::new(VectorField::zeros(&g), 0.0).is_err());
        assert!(SolverState::new(VectorField::zeros(&g), f64::NAN).is_err());
    }

    #[test]
    fn zero_field_stays_zero() {
        let g = Grid::new(8).unwrap();
        let s = SolverState::new(VectorField::zeros(&g), 0.1).unwrap();
        assert_eq!(nonlinear_term(&s.u_hat, true).max_abs_coeff(), 0.0);
        let next = step(&s, 0.1, true).unwrap();
        assert_eq!(next.u_hat.max_abs_coeff(), 0.0);
        assert!((next.time - 0.1).abs() < 1e-15);
    }

    #[test]
    fn taylor_green_is_divergence_free() {
        let g = Grid::new(16).unwrap();
        let s = init_taylor_green(&g, 0.1);
        assert!(s.u_hat.divergence_ratio() < 1e-14);
        let u = s.velocity();
        let (x, y, z) = (g.coord(3), g.coord(5), g.coord(7));
        let v = u.at(g.index(3, 5, 7));
        assert!((v[0] - x.cos() * y.sin() * z.sin()).abs() < 1e-13);
    }

    #[test]
    fn random_init_is_deterministic_and_solenoidal() {
        let g = Grid::new(16).unwrap();
        let init = RandomInit { seed: 42, ..Default::default() };
        let a = init_random_divfree(&g, 0.05, &init).unwrap();
        let b = init_random_divfree(&g, 0.05, &init).unwrap();
        assert_eq!(a.u_hat.max_abs_diff(&b.u_hat), 0.0);
        assert!(a.u_hat.divergence_ratio() < 1e-14);
        assert!(a.u_hat.mean().iter().all(|c| c.norm() == 0.0));
        let e = energy(&a) / g.volume();
        assert!((e - 0.5).abs() < 1e-12);
        let other = init_random_divfree(&g, 0.05, &RandomInit { seed: 43, ..init }).unwrap();
        assert!(other.u_hat.max_abs_diff(&a.u_hat) > 1e-3);
        for c in a.u_hat.components() {
            assert!(c.hermitian_defect() < 1e-15);
        }
    }

    #[test]
    fn random_modes_do_not_depend_on_grid() {
        let init = RandomInit { k_peak: 1.5, ..Default::default() };
        let g1 = Grid::new(16).unwrap();
        let g2 = Grid::new(24).unwrap();
        let a = init_random_divfree(&g1, 0.05, &init).unwrap();
        let b = init_random_divfree(&g2, 0.05, &init).unwrap();
        let ia = g1.index_of_wavevector([1, -2, 1]).unwrap();
        let ib = g2.index_of_wavevector([1, -2, 1]).unwrap();
        let (ca, cb) = (a.u_hat.coeff(ia), b.u_hat.coeff(ib));
        // only the global energy normalisation may differ
        let ratio = ca[0].norm() / cb[0].norm();
        assert!((ratio - 1.0).abs() < 1e-3, "ratio {ratio}");
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::fixed(0.0, 1.0).validate().is_err());
        assert!(SolverConfig::fixed(0.1, -1.0).validate().is_err());
        assert!(SolverConfig::fixed(0.1, 1.0).with_stride(0).validate().is_err());
        let mut c = SolverConfig::fixed(0.1, 1.0);
        c.step = StepControl::Cfl { cfl: 1.5, dt_max: 0.1 };
        assert!(c.validate().is_err());
    }

    #[test]
    fn integrate_records_endpoints() {
        let g = Grid::new(8).unwrap();
        let s = init_abc(&g, 0.1, 1.0, 1.0, 1.0);
        let mut times = Vec::new();
        let cfg = SolverConfig::fixed(0.1, 0.5).with_stride(2);
        let end = integrate(s, &cfg, |st, _| {
            times.push(st.time);
            Ok(())
        })
        .unwrap();
        assert!((end.time - 0.5).abs() < 1e-14);
        assert_eq!(times.len(), 4); // 0, 0.2, 0.4, 0.5
        assert!((times[3] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn ceiling_reports_blow_up() {
        let g = Grid::new(8).unwrap();
        let s = init_abc(&g, 0.1, 1.0, 1.0, 1.0);
        let mut cfg = SolverConfig::fixed(0.1, 0.5);
        cfg.vorticity_ceiling = Some(0.5);
        match integrate(s, &cfg, |_, _| Ok(())) {
            Err(Error::BlowUp { time, .. }) => assert!((time - 0.1).abs() < 1e-12),
            other => panic!("expected blow-up, got {other:?}"),
        }
    }
}
