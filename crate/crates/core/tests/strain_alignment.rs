use std::sync::Arc;

use proptest::prelude::*;
use vortalign::alignment::*;
use vortalign::field::{norm3, PhysicalVector};
use vortalign::grid::Grid;
use vortalign::solver::{init_abc, init_random_divfree, RandomInit};
use vortalign::strain::*;
use vortalign::verify::d_property_violation;

fn unit(v: [f64; 3]) -> Option<[f64; 3]> {
    let m = norm3(v);
    (m > 1e-3).then(|| v.map(|x| x / m))
}

fn vec3() -> impl Strategy<Value = [f64; 3]> {
    prop::array::uniform3(-1.0f64..1.0)
}

proptest! {
    #[test]
    fn d_factor_is_bounded_by_the_angle(a in vec3(), b in vec3(), c in vec3()) {
        let (Some(e1), Some(e2), Some(e3)) = (unit(a), unit(b), unit(c)) else { return Ok(()) };
        let d = d_factor(e1, e2, e3).unwrap();
        prop_assert!(d.abs() <= sin_angle(e2, e3) + 1e-12);
        prop_assert!(d.abs() <= 1.0 + 1e-12);
    }

    #[test]
    fn d_factor_vanishes_for_parallel_directions(a in vec3(), b in vec3(), flip in any::<bool>()) {
        let (Some(e1), Some(e2)) = (unit(a), unit(b)) else { return Ok(()) };
        let e3 = if flip { e2.map(|x| -x) } else { e2 };
        prop_assert!(d_factor(e1, e2, e3).unwrap().abs() < 1e-12);
    }

    #[test]
    fn chi_stays_in_unit_interval(s in -1.0f64..4.0) {
        let v = chi(s);
        prop_assert!((0.0..=1.0).contains(&v));
        if s <= 1.0 { prop_assert_eq!(v, 1.0); }
        if s >= 2.0 { prop_assert_eq!(v, 0.0); }
    }

    #[test]
    fn decomposition_is_exact_and_small_part_bounded(
        w in prop::collection::vec(vec3(), 512),
        scale in 0.1f64..10.0,
        lambda in 0.05f64..3.0,
    ) {
        let grid = Grid::new(8).unwrap();
        let mut omega = PhysicalVector::zeros(&grid);
        for (i, v) in w.iter().enumerate() {
            omega.set(i, v.map(|x| x * scale));
        }
        let params = CutoffParams::new(lambda).unwrap();
        let (small, big) = decompose(&omega, &params);
        for i in 0..grid.len() {
            let (o, a, b) = (omega.at(i), small.at(i), big.at(i));
            for c in 0..3 {
                prop_assert_eq!(a[c] + b[c], o[c]);
            }
            prop_assert!(norm3(a) <= 2.0 * lambda * (1.0 + 1e-15));
            if norm3(o) <= lambda {
                prop_assert_eq!(b, [0.0; 3]);
            }
        }
    }

    #[test]
    fn spectral_strain_is_symmetric_trace_free(seed in 0u64..1000) {
        let grid = Grid::new(8).unwrap();
        let s = init_random_divfree(&grid, 0.1, &RandomInit { seed, ..RandomInit::default() }).unwrap();
        let strain = strain_spectral(&s.u_hat);
        prop_assert!(strain.trace_ratio() < 1e-12);
        let phys = strain.to_physical();
        for i in (0..grid.len()).step_by(37) {
            let m = phys.at(i);
            prop_assert!(operator_norm(&m) <= frobenius(&m) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn riesz_potential_is_monotone(a in prop::collection::vec(0.0f64..1.0, 512), bump in prop::collection::vec(0.0f64..0.5, 512)) {
        let grid = Grid::new(8).unwrap();
        let b: Vec<f64> = a.iter().zip(&bump).map(|(x, y)| x + y).collect();
        let k = RieszKernel::new(&grid, 2.5).unwrap();
        let (ia, ib) = (k.apply(&a).unwrap(), k.apply(&b).unwrap());
        for (x, y) in ia.iter().zip(&ib) {
            prop_assert!(y >= &(x - 1e-10 * x.abs().max(1.0)));
        }
    }
}

#[test]
fn dropping_the_determinant_breaks_the_d_bound() {
    let (v_sin, _) = d_property_violation(d_factor_unchecked, 20_000, 1);
    assert!(v_sin <= 1e-12);
    let faulty = |e1: [f64; 3], _e2: [f64; 3], e3: [f64; 3]| vortalign::field::dot3(e1, e3);
    let (v_sin, _) = d_property_violation(faulty, 20_000, 1);
    assert!(v_sin > 0.1, "mutation not detected: {v_sin}");
}

fn smooth_state(n: usize) -> vortalign::SolverState {
    let grid = Grid::new(n).unwrap();
    init_random_divfree(&grid, 0.05, &RandomInit::default()).unwrap()
}

#[test]
fn strain_routes_agree_and_converge() {
    let coarse = [[1, 2, 3], [5, 0, 7], [8, 8, 8], [15, 3, 11], [4, 12, 9]];
    let e16 = vortalign::verify::strain_route_error(16, &coarse).unwrap();
    let e32 = vortalign::verify::strain_route_error(32, &coarse).unwrap();
    assert!(e32 < e16, "{e16} -> {e32}");
    assert!(e32 < 0.05, "{e32}");
}

#[test]
fn stretching_routes_agree() {
    let s = smooth_state(32);
    let samples = [[3, 7, 1], [20, 4, 30], [16, 16, 16], [9, 27, 12]];
    let r = stretching_density(&s.u_hat, &samples, Periodization::default()).unwrap();
    let scale = stretching_field(&s.u_hat).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(r.relative_error(scale) < 0.05, "{}", r.relative_error(scale));
}

#[test]
fn minimum_image_periodisation_is_biased() {
    let s = smooth_state(16);
    let omega = s.vorticity();
    let samples = [[0, 0, 0], [5, 9, 2]];
    let reference = strain_spectral(&s.u_hat).to_physical();
    let images = strain_singular_integral(&omega, &samples, Periodization::default()).unwrap();
    let min = strain_singular_integral(&omega, &samples, Periodization::MinimumImage).unwrap();
    assert!(relative_strain_error(&reference, &samples, &images) < relative_strain_error(&reference, &samples, &min));
}

#[test]
fn biot_savart_inverts_the_curl() {
    let s = smooth_state(16);
    let u = biot_savart(&s.vorticity_hat()).unwrap();
    assert!(u.max_abs_diff(&s.u_hat) < 1e-13);
}

#[test]
fn cutoff_above_max_vorticity_leaves_only_x() {
    let s = smooth_state(16);
    let lambda = 2.0 * s.vorticity().max_magnitude();
    let b = xyz_budget(&s.u_hat, &CutoffParams::new(lambda).unwrap(), 3.0).unwrap();
    assert_eq!(b.y_int, 0.0);
    assert_eq!(b.z_int, 0.0);
    assert!((b.x_int - b.k_int).abs() <= 1e-12 * b.k_int.abs().max(1.0));
    assert_eq!(b.super_threshold_points, 0);
}

#[test]
fn x_budget_respects_its_bounds() {
    let s = smooth_state(16);
    let lambda = 0.5 * s.vorticity().max_magnitude();
    for q in [2.0, 3.0, 4.0] {
        let b = xyz_budget(&s.u_hat, &CutoffParams::new(lambda).unwrap(), q).unwrap();
        assert!(b.identity_residual < 1e-10);
        assert!(b.abs_x_int <= b.x_bound_op * (1.0 + 1e-12));
        assert!(b.x_int.abs() <= b.x_bound_frobenius, "q={q}: {} vs {}", b.x_int, b.x_bound_frobenius);
    }
}

#[test]
fn constant_magnitude_field_has_empty_angle_fit() {
    // ABC(1,0,0) has |ω| = 1 everywhere and a direction that turns with x
    let grid = Grid::new(16).unwrap();
    let s = init_abc(&grid, 0.1, 1.0, 0.0, 0.0);
    let omega = s.vorticity();
    let mags = omega.magnitude();
    assert!(mags.iter().all(|m| (m - 1.0).abs() < 1e-12));
    let pairs = sample_angles(&omega, 2000, 0.5, 3).unwrap();
    assert_eq!(pairs.len(), 2000);
    let fit = holder_fit(&pairs, 1.0);
    // |sin φ| ≤ |x − y| for a direction rotating at unit rate
    assert!(fit.rho_hat >= 1.0 - 1e-9, "{}", fit.rho_hat);
    let empty = sample_angles(&omega, 100, 2.0, 3).unwrap();
    assert!(empty.is_empty());
    assert!(holder_fit(&empty, 0.5).rho_hat.is_infinite());
}

#[test]
fn angle_sampling_is_deterministic() {
    let s = smooth_state(16);
    let omega = s.vorticity();
    let lambda = 0.3 * omega.max_magnitude();
    let a = sample_angles(&omega, 500, lambda, 9).unwrap();
    let b = sample_angles(&omega, 500, lambda, 9).unwrap();
    let c = sample_angles(&omega, 500, lambda, 10).unwrap();
    assert_eq!(a.len(), b.len());
    assert!(a.iter().zip(&b).all(|(x, y)| x.x == y.x && x.y == y.y));
    assert!(a.iter().zip(&c).any(|(x, y)| x.x != y.x || x.y != y.y));
}

#[test]
fn riesz_constant_field_matches_box_integral() {
    for lambda in [2.0, 2.25, 2.5] {
        let err = vortalign::verify::riesz_constant_error(32, lambda).unwrap();
        assert!(err < 5e-3, "λ={lambda}: {err}");
    }
}

#[test]
fn j_of_constant_field_has_closed_form() {
    let grid = Grid::new(16).unwrap();
    let c = 1.7;
    let omega = PhysicalVector::from_fn(&grid, |_, _, _| [0.0, c, 0.0]);
    let (q, rho, lambda) = (3.0, 0.8, 2.25);
    let j = j_quantity(&omega, q, rho, lambda).unwrap();
    let closed = c.powf(q + 1.0) * vortalign::oracles::riesz_box_integral(lambda) * grid.volume() / rho;
    assert!((j - closed).abs() < 5e-3 * closed, "{j} vs {closed}");
    assert_eq!(j_quantity(&PhysicalVector::zeros(&grid), q, rho, lambda).unwrap(), 0.0);
}

#[test]
fn hls_ratio_is_flat_under_concentration() {
    let mut ratios = Vec::new();
    for n in [16, 32] {
        let grid: Arc<Grid> = Grid::new(n).unwrap();
        let f = vortalign::verify::concentrated_bump(&grid, 1.5);
        ratios.push(vortalign::verify::hls_ratio(&grid, &f, 2.5, 2.0).unwrap());
    }
    assert!((ratios[1] / ratios[0] - 1.0).abs() < 0.02, "{ratios:?}");
}
