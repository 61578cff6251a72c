//! Reference values computed by routes independent of the production code,
//! used by the tests and by the `verify` report.

use std::f64::consts::PI;

/// Composite Gauss–Legendre rule on `[a, b]` with `panels` panels of 16 nodes.
fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    // 16-point nodes and weights on [-1, 1], positive half
    const X: [f64; 8] = [
        0.095_012_509_837_637_44,
        0.281_603_550_779_258_9,
        0.458_016_777_657_227_4,
        0.617_876_244_402_643_7,
        0.755_404_408_355_003,
        0.865_631_202_387_831_8,
        0.944_575_023_073_232_6,
        0.989_400_934_991_649_9,
    ];
    const W: [f64; 8] = [
        0.189_450_610_455_068_5,
        0.182_603_415_044_923_6,
        0.169_156_519_395_002_5,
        0.149_595_988_816_576_7,
        0.124_628_971_255_533_9,
        0.095_158_511_682_492_78,
        0.062_253_523_938_647_89,
        0.027_152_459_411_754_09,
    ];
    let h = (b - a) / panels as f64;
    let mut acc = 0.0;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        for (x, w) in X.iter().zip(&W) {
            acc += w * (f(mid - 0.5 * h * x) + f(mid + 0.5 * h * x));
        }
    }
    0.5 * h * acc
}

/// `∫_{[-π,π]^3} |z|^{-λ} dz` for `λ < 3`, integrated in spherical
/// coordinates: the radial integral is `R(Ω)^{3-λ}/(3-λ)` with `R(Ω)` the
/// distance to the cube surface, and the solid angle is reduced to one of the
/// 48 congruent wedges `0 ≤ φ ≤ π/4`, `0 ≤ θ ≤ atan(1/cos φ)`.
pub fn riesz_box_integral(lambda: f64) -> f64 {
    assert!(lambda < 3.0, "kernel not integrable for λ >= 3");
    let e = 3.0 - lambda;
    let wedge = integrate(
        |phi| {
            let theta_max = (1.0 / phi.cos()).atan();
            integrate(|t| t.sin() * (PI / t.cos()).powf(e) / e, 0.0, theta_max, 8)
        },
        0.0,
        PI / 4.0,
        8,
    );
    48.0 * wedge
}

/// Classical RK4 solve of `dQ/dt = a Q + b Q^{1+g}` to time `t`.
pub fn power_ode_rk4(q0: f64, a: f64, b: f64, g: f64, t: f64, dt: f64) -> f64 {
    power_ode_trajectory(q0, a, b, g, t, dt).0
}

/// As [`power_ode_rk4`], also returning `∫₀ᵗ Q` by the trapezoid rule on the
/// RK4 steps. Blow-up gives `(∞, ∞)`.
pub fn power_ode_trajectory(q0: f64, a: f64, b: f64, g: f64, t: f64, dt: f64) -> (f64, f64) {
    let f = |q: f64| a * q + b * q.powf(1.0 + g);
    let steps = (t / dt).round().max(1.0) as usize;
    let h = t / steps as f64;
    let mut q = q0;
    let mut integral = 0.0;
    for _ in 0..steps {
        let k1 = f(q);
        let k2 = f(q + 0.5 * h * k1);
        let k3 = f(q + 0.5 * h * k2);
        let k4 = f(q + h * k3);
        let next = q + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if !next.is_finite() {
            return (f64::INFINITY, f64::INFINITY);
        }
        integral += 0.5 * h * (q + next);
        q = next;
    }
    (q, integral)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_integral_of_unit_kernel_is_volume() {
        assert!((riesz_box_integral(0.0) - (2.0 * PI).powi(3)).abs() < 1e-9);
    }

    #[test]
    fn box_integral_reference_values() {
        for (lam, v) in [(2.0, 48.217_944_56), (2.25, 45.869_079_59), (2.5, 49.136_547_57), (2.75, 70.249_848_11)] {
            let got = riesz_box_integral(lam);
            assert!((got - v).abs() < 1e-6 * v, "λ={lam}: {got} vs {v}");
        }
    }

    #[test]
    fn linear_ode_matches_exponential() {
        let q = power_ode_rk4(0.5, 0.7, 0.0, 0.5, 1.0, 1e-3);
        assert!((q - 0.5 * 0.7f64.exp()).abs() < 1e-12);
    }
}
