//! Operator checks against kernel oracles and structural properties.

mod common;

use common::*;
use fpme_core::kernels::heat_kernel_h3;
use fpme_core::operators::*;
use fpme_core::spectral::{RadialField, RadialGrid};
use proptest::prelude::*;

#[test]
fn potential_of_narrow_bump_reproduces_green_function() {
    let g = RadialGrid::new(20.0, 32767).unwrap();
    let u = unit_gaussian(g, 0.0, 0.005);
    let pot = inv_frac_laplacian(&u, 0.5).unwrap();
    for r in [0.5, 1.0, 2.0, 4.0, 6.0] {
        let got = interp(&pot, r);
        let want = green_h3_half(r);
        assert!((got / want - 1.0).abs() < 1e-2, "r = {r}: {got} vs {want}");
    }
}

#[test]
fn heat_semigroup_matches_heat_kernel() {
    let g = RadialGrid::new(20.0, 8191).unwrap();
    let u = unit_gaussian(g, 0.0, 0.01);
    let t = 0.5;
    let heat = heat_semigroup(&u, t).unwrap();
    let peak = heat_kernel_h3(t, 0.0).unwrap();
    for r in [0.2, 0.5, 1.0, 2.0, 4.0] {
        let got = interp(&heat, r);
        let want = heat_kernel_h3(t, r).unwrap();
        assert!((got - want).abs() < 1e-3 * peak, "r = {r}: {got} vs {want}");
    }
}

#[test]
fn heat_semigroup_conserves_mass() {
    let g = RadialGrid::new(12.0, 4095).unwrap();
    let u = unit_gaussian(g, 0.5, 0.3);
    for t in [0.01, 0.1, 0.5] {
        let mass = heat_semigroup(&u, t).unwrap().integral();
        assert!((mass - 1.0).abs() < 1e-7, "t = {t}: mass {mass}");
    }
    assert!(heat_semigroup(&u, -1.0).is_err());
}

#[test]
fn fractional_laplacian_is_negative_off_support() {
    let g = RadialGrid::new(12.0, 4095).unwrap();
    let bump = canonical_bump(g);
    for s in [0.25, 0.5, 0.75] {
        let a = frac_laplacian(&bump, s).unwrap();
        for (r, v) in g.radii().iter().zip(a.values()) {
            if (1.2..=6.0).contains(r) {
                assert!(*v < 0.0, "s = {s}, r = {r}: {v}");
            }
        }
    }
}

#[test]
fn potential_is_positive_for_nonnegative_data() {
    let g = RadialGrid::new(12.0, 2047).unwrap();
    let u = unit_gaussian(g, 2.0, 0.2);
    for s in [0.25, 0.5, 0.75] {
        let p = inv_frac_laplacian(&u, s).unwrap();
        let floor = 1e-12 * p.max();
        assert!(p.values().iter().all(|v| *v > -floor), "s = {s}");
    }
}

#[test]
fn subordination_matches_spectral_for_all_orders() {
    let g = RadialGrid::new(20.0, 2047).unwrap();
    let u = unit_gaussian(g, 1.0, 0.8);
    for s in [0.25, 0.75] {
        let a = frac_laplacian(&u, s).unwrap();
        let b = frac_laplacian_subordination(&u, s, 1e-8).unwrap();
        let rel = a.sub(&b).unwrap().lp_norm(2.0) / a.lp_norm(2.0);
        assert!(rel < 1e-4, "s = {s}: {rel}");
    }
}

#[test]
fn strict_mode_rejects_under_resolved_fields() {
    let g = RadialGrid::new(12.0, 255).unwrap();
    let spike = RadialField::from_fn(g, |r| if r < 0.1 { 1.0 } else { 0.0 });
    assert!(frac_laplacian_checked(&spike, 0.5, true).is_err());
    assert!(frac_laplacian_checked(&spike, 0.5, false).is_ok());
    assert!(frac_laplacian(&spike, 1.5).is_err());
}

#[test]
fn w_class_weight_has_green_tail() {
    let g = RadialGrid::new(20.0, 4095).unwrap();
    let w = make_w_weight(g, 0.5, &canonical_bump(g)).unwrap();
    let d = w.diagnostics.unwrap();
    assert!(d.tail_upper / d.tail_lower <= WEIGHT_TAIL_CONDITION);
    assert!(d.phi1_constant.is_finite() && d.phi1_constant > 0.0);
    let neg = canonical_bump(g).scale(-1.0);
    assert!(make_w_weight(g, 0.5, &neg).is_err());
    let wide = RadialField::from_fn(g, |r| if r < 3.0 { 1.0 } else { 0.0 });
    assert!(make_w_weight(g, 0.5, &wide).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn powers_compose(s in 0.05f64..0.95, c in 0.0f64..3.0, w in 0.3f64..1.5) {
        let g = RadialGrid::new(12.0, 511).unwrap();
        let u = unit_gaussian(g, c, w);
        let back = inv_frac_laplacian(&frac_laplacian(&u, s).unwrap(), s).unwrap();
        prop_assert!(back.sub(&u).unwrap().lp_norm(2.0) <= 1e-10 * u.lp_norm(2.0));
    }

    #[test]
    fn heat_semigroup_is_a_semigroup(a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let g = RadialGrid::new(12.0, 511).unwrap();
        let u = unit_gaussian(g, 1.0, 0.5);
        let two = heat_semigroup(&heat_semigroup(&u, a).unwrap(), b).unwrap();
        let one = heat_semigroup(&u, a + b).unwrap();
        prop_assert!(two.sub(&one).unwrap().sup_norm() <= 1e-12 * u.sup_norm());
    }
}
