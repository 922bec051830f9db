//! Frozen reference values and independent oracles.

use std::sync::Arc;

use approx::assert_relative_eq;
use rayleigh::analysis::gamma_bound;
use rayleigh::medium::{
    validate_potential, validate_profile, BoundaryValues, ConstantProfile, FnProfile,
    PolynomialBumpProfile, PotentialSpec, TransformData,
};
use rayleigh::pm_transform::{background_potential, TransformedModel};
use rayleigh::rayleigh_ode::{
    determinant_bundle, homogeneous_delta, propagate_state, theta_phi, unperturbed_jost, Branch,
    DisplacementModel, JostMethod, PropagationOptions,
};
use rayleigh::riemann::{asymptotic_check, quasi_momenta};
use rayleigh::spectral::{find_zeros, Rect, SearchRegion, SpectralOptions, Target};
use rayleigh::{
    CutSide, Error, HalfSpaceConstants, SheetTag, Sign, SpectralModel, SpectralPoint, C64,
};

fn unit() -> HalfSpaceConstants {
    HalfSpaceConstants::new(1.0, 1.0, 1.0, 1.0).unwrap()
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// `xi_R = 1/c_R` with `c_R^2` the root in (0,1) of `3x^3 - 24x^2 + 56x - 32`.
fn rayleigh_root() -> f64 {
    let p = |x: f64| 3.0 * x * x * x - 24.0 * x * x + 56.0 * x - 32.0;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    assert!(p(lo) < 0.0 && p(hi) > 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if p(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    1.0 / (0.5 * (lo + hi)).sqrt()
}

#[test]
fn rayleigh_cubic_oracle() {
    let xi = rayleigh_root();
    assert_relative_eq!(xi, 1.0877, epsilon = 1e-4);
    assert_relative_eq!(1.0 / xi, 0.9194, epsilon = 1e-4);
}

#[test]
#[allow(clippy::approx_constant)] // frozen seven-digit values
fn branch_radii_examples() {
    let (rp, rm) = unit().branch_radii();
    assert_relative_eq!(rp, 0.5773503, epsilon = 1e-7);
    assert_relative_eq!(rm, 1.0, epsilon = 1e-15);
    let (rp, rm) = HalfSpaceConstants::new(4.0, 0.0, 2.0, 1.0).unwrap().branch_radii();
    assert_relative_eq!(rp, 0.7071068, epsilon = 1e-7);
    assert_relative_eq!(rm, 1.0, epsilon = 1e-15);
    let (rp, rm) = HalfSpaceConstants::new(1.0, -0.5, 1.0, 1.0).unwrap().branch_radii();
    assert_relative_eq!(rp, 0.8164966, epsilon = 1e-7);
    assert_relative_eq!(rm, 1.0, epsilon = 1e-15);
}

#[test]
fn bad_constants_are_rejected() {
    assert!(matches!(HalfSpaceConstants::new(0.0, 1.0, 1.0, 1.0), Err(Error::InvalidConstants(_))));
    assert!(matches!(HalfSpaceConstants::new(1.0, -1.0, 1.0, 1.0), Err(Error::InvalidConstants(_))));
    assert!(matches!(HalfSpaceConstants::new(1.0, 1.0, 0.0, 1.0), Err(Error::InvalidConstants(_))));
    assert!(matches!(HalfSpaceConstants::new(1.0, 1.0, 1.0, -2.0), Err(Error::InvalidConstants(_))));
    assert!(HalfSpaceConstants::new(f64::NAN, 1.0, 1.0, 1.0).is_err());
}

#[test]
fn quasi_momenta_examples() {
    let k = unit();
    let q = quasi_momenta(&SpectralPoint::new(c(2.0, 0.0), SheetTag::PP), &k).unwrap();
    assert_relative_eq!(q.qp.im, 1.9148542, epsilon = 1e-7);
    assert_relative_eq!(q.qs.im, 1.7320508, epsilon = 1e-7);
    assert_eq!(q.qp.re, 0.0);
    let q = quasi_momenta(&SpectralPoint::new(c(2.0, 0.0), SheetTag::MM), &k).unwrap();
    assert_relative_eq!(q.qp.im, -1.9148542, epsilon = 1e-7);
    assert_relative_eq!(q.qs.im, -1.7320508, epsilon = 1e-7);
    let q = quasi_momenta(&SpectralPoint::physical(c(0.5, 0.0)), &k).unwrap();
    assert_relative_eq!(q.qp.re, 0.2886751, epsilon = 1e-7);
    assert_relative_eq!(q.qs.re, 0.8660254, epsilon = 1e-7);
    assert_eq!((q.qp.im, q.qs.im), (0.0, 0.0));
}

#[test]
fn branch_points_are_errors() {
    let k = unit();
    for xi in [c(1.0, 0.0), c(-1.0, 0.0), c(1.0 / 3f64.sqrt(), 0.0)] {
        let r = quasi_momenta(&SpectralPoint::physical(xi), &k);
        assert!(matches!(r, Err(Error::BranchPoint(_))), "{xi}: {r:?}");
    }
}

#[test]
fn asymptotic_residual_at_large_xi() {
    let k = unit();
    let r = asymptotic_check(&SpectralPoint::physical(c(100.0, 0.0)), &k).unwrap();
    assert!(r <= 0.011, "{r}");
    let z = C64::from_polar(100.0, -std::f64::consts::FRAC_PI_4);
    let r = asymptotic_check(&SpectralPoint::physical(z), &k).unwrap();
    assert!(r <= 0.011, "{r}");
}

#[test]
fn unperturbed_jost_examples() {
    let k = unit();
    let pt = SpectralPoint::physical(c(2.0, 0.0));
    let f = unperturbed_jost(0.0, &pt, Branch::P, Sign::Plus, &k).unwrap();
    assert_eq!(f.value[0], c(2.0, 0.0));
    assert_relative_eq!(f.value[1].im, 1.9148542, epsilon = 1e-7);
    let f = unperturbed_jost(0.0, &pt, Branch::S, Sign::Minus, &k).unwrap();
    assert_relative_eq!(f.value[0].im, -1.7320508, epsilon = 1e-7);
    assert_eq!(f.value[1], c(-2.0, 0.0));
    let f = unperturbed_jost(-1.0, &pt, Branch::P, Sign::Minus, &k).unwrap();
    let e = (-1.9148542f64).exp();
    assert_relative_eq!(f.value[0].re, 2.0 * e, max_relative = 1e-7);
    assert_relative_eq!(f.value[1].im, -1.9148542 * e, max_relative = 1e-7);
}

#[test]
fn surface_tractions_at_two() {
    // f^- of each branch on the physical sheet, homogeneous medium
    let k = unit();
    let p = ConstantProfile::new(k);
    let q = quasi_momenta(&SpectralPoint::physical(c(2.0, 0.0)), &k).unwrap();
    let opts = PropagationOptions::default();
    let fp = propagate_state(&p, c(2.0, 0.0), &q, Branch::P, Sign::Minus, &opts).unwrap();
    let fs = propagate_state(&p, c(2.0, 0.0), &q, Branch::S, Sign::Minus, &opts).unwrap();
    assert_relative_eq!(fp.a_val.im, -7.0, epsilon = 1e-12);
    assert_relative_eq!(fp.b_val.re, 7.6594168, epsilon = 1e-7);
    assert_relative_eq!(fs.a_val.re, -6.9282032, epsilon = 1e-7);
}

#[test]
fn integrated_jost_matches_closed_form() {
    let k = unit();
    let p = ConstantProfile::new(k);
    let opts = PropagationOptions {
        method: JostMethod::Integrate,
        ..Default::default()
    };
    for xi in [c(2.0, 0.3), c(0.3, -1.2), c(-3.0, 2.0)] {
        let q = quasi_momenta(&SpectralPoint::physical(xi), &k).unwrap();
        for b in [Branch::P, Branch::S] {
            for s in [Sign::Plus, Sign::Minus] {
                let a = propagate_state(&p, xi, &q, b, s, &opts).unwrap();
                let e = propagate_state(&p, xi, &q, b, s, &PropagationOptions::default()).unwrap();
                let diff = [a.phi1 - e.phi1, a.phi3 - e.phi3, a.a_val - e.a_val, a.b_val - e.b_val];
                let err = diff.iter().map(|v| v.norm()).fold(0.0, f64::max);
                assert!(err <= 1e-8 * e.norm(), "{xi} {b:?} {s:?}: {err:e}");
            }
        }
    }
}

#[test]
fn homogeneous_delta_at_two() {
    let k = unit();
    let q = quasi_momenta(&SpectralPoint::physical(c(2.0, 0.0)), &k).unwrap();
    let d = homogeneous_delta(c(2.0, 0.0), &q, &k);
    // q_P q_S = (i sqrt(11/3)) (i sqrt 3) = -sqrt 11
    let oracle = -49.0 + 16.0 * 11f64.sqrt();
    assert_relative_eq!(d.re, oracle, max_relative = 1e-14);
    assert_relative_eq!(d.re, 4.0659966, epsilon = 1e-7);
    assert!(d.im.abs() < 1e-12);
    let model = DisplacementModel::new(Arc::new(ConstantProfile::new(k)));
    let v = model.delta(&SpectralPoint::physical(c(2.0, 0.0))).unwrap();
    assert_relative_eq!(v.re, 4.0659966, epsilon = 1e-7);
}

#[test]
fn homogeneous_delta_vanishes_at_rayleigh_root() {
    let k = unit();
    let model = DisplacementModel::new(Arc::new(ConstantProfile::new(k)));
    let v = model.delta(&SpectralPoint::physical(c(rayleigh_root(), 0.0))).unwrap();
    assert!(v.norm() <= 1e-12, "{v}");
}

#[test]
fn theta_phi_homogeneous_surface_values() {
    let k = unit();
    let p = ConstantProfile::new(k);
    let xi = c(2.0, 0.5);
    let tp = theta_phi(&p, xi, &PropagationOptions::default()).unwrap();
    let close = |a: C64, b: C64| (a - b).norm() <= 1e-13 * (1.0 + b.norm());
    assert!(close(tp.theta_p.phi1, xi) && close(tp.theta_p.phi3, C64::default()));
    assert!(close(tp.phi_p.phi1, C64::default()) && close(tp.phi_p.phi3, c(1.0, 0.0)));
    assert!(close(tp.theta_s.phi1, C64::default()) && close(tp.theta_s.phi3, -xi));
    assert!(close(tp.phi_s.phi1, c(1.0, 0.0)) && close(tp.phi_s.phi3, C64::default()));
}

#[test]
fn d_coefficients_reproduce_closed_form() {
    let k = unit();
    let p = ConstantProfile::new(k);
    let b = determinant_bundle(&p, c(2.0, 0.0), &PropagationOptions::default()).unwrap();
    assert_relative_eq!(b.delta_by_sheet[0].re, 4.0659966, epsilon = 1e-7);
    let product: C64 = b.delta_by_sheet.iter().product();
    assert!((b.f - product).norm() <= 1e-10 * product.norm());
}

#[test]
fn gamma_on_lower_sheet() {
    let k = unit();
    let g = gamma_bound(&SpectralPoint::new(c(2.0, 0.0), SheetTag::MM), &k).unwrap();
    assert_relative_eq!(g, 3.8297084, epsilon = 1e-7);
    let g = gamma_bound(&SpectralPoint::new(c(2.0, 0.0), SheetTag::PM), &k).unwrap();
    assert_eq!(g, 0.0);
}

#[test]
fn background_potential_at_surface() {
    let k = unit();
    let td = TransformData::identity(&k);
    let q0 = background_potential(0.0, &td, &k);
    let want = [[-1.0, 2.0 / 9.0], [0.0, -1.0 / 3.0]];
    for i in 0..2 {
        for j in 0..2 {
            assert_relative_eq!(q0[(i, j)], want[i][j], epsilon = 1e-15);
        }
    }
    let qh = background_potential(1.0, &td, &k);
    assert_eq!(qh[(0, 1)], 0.0);
    assert_eq!(qh[(1, 0)], 0.0);
}

#[test]
fn transform_rejects_non_unimodular() {
    let k = unit();
    let r = TransformData::new([0.9, 0.0, 0.0, 1.0], &k);
    assert!(matches!(r, Err(Error::InvalidTransform(_))), "{r:?}");
}

#[test]
fn profile_validation_examples() {
    let k = unit();
    let r = validate_profile(&ConstantProfile::new(k)).unwrap();
    assert!(r.is_valid() && r.issues.is_empty());

    let quad = PolynomialBumpProfile::new(k, 0.1, 0.1, 2).unwrap();
    let r = validate_profile(&quad).unwrap();
    assert!(r.is_valid(), "{r:?}");
    assert!(r.warnings().count() >= 1, "second-derivative jump should warn: {r:?}");

    let linear = FnProfile::new(k, |z| [1.0 + 0.1 * z, 0.1, 0.0], |z| [1.0 + 0.1 * z, 0.1, 0.0]);
    let r = validate_profile(&linear).unwrap();
    assert!(!r.is_valid());
    assert!(r.errors().any(|i| i.message.contains("not homogeneous below")), "{r:?}");

    let wrong_derivative = FnProfile::new(k, |z| [1.0 + 0.1 * (z + 1.0).max(0.0).powi(3), 0.0, 0.0], |_| [1.0, 0.0, 0.0]);
    assert!(!validate_profile(&wrong_derivative).unwrap().is_valid());
}

#[test]
fn potential_validation_examples() {
    let zero = PotentialSpec::zero(1.0);
    assert!(validate_potential(&zero, false).unwrap().is_valid());
    let bump = PotentialSpec::bump(1.0, 0.5, [[1.0, 1.0], [1.0, 1.0]]).unwrap();
    assert!(validate_potential(&bump, true).unwrap().is_valid());
    // one nonzero component is not generic
    let single = PotentialSpec::bump(1.0, 0.5, [[0.0, 1.0], [0.0, 0.0]]).unwrap();
    assert!(validate_potential(&single, false).unwrap().is_valid());
    assert!(!validate_potential(&single, true).unwrap().is_valid());
    assert!(PotentialSpec::bump(1.0, 1.5, [[1.0, 0.0], [0.0, 0.0]]).is_err());
}

#[test]
fn rayleigh_root_is_found_on_physical_sheet() {
    let k = unit();
    let model = DisplacementModel::new(Arc::new(ConstantProfile::new(k)));
    let region = SearchRegion::new(Rect::new(0.6, 1.4, -0.2, 0.2).unwrap(), Target::Delta(SheetTag::PP));
    let z = find_zeros(&model, &region, &SpectralOptions::default()).unwrap();
    assert_eq!(z.len(), 1, "{z:?}");
    assert_eq!(z[0].multiplicity, 1);
    assert!((z[0].xi - rayleigh_root()).norm() <= 1e-6, "{}", z[0].xi);
}

#[test]
fn transformed_model_agrees_with_closed_form_when_surface_normalized() {
    let k = unit();
    let td = TransformData::surface_identity(&k);
    let m = TransformedModel::new(
        k,
        BoundaryValues::from_profile(&ConstantProfile::new(k)),
        td,
        PotentialSpec::zero(1.0),
        Default::default(),
    )
    .unwrap();
    for xi in [c(2.0, 0.3), c(0.4, 1.1), c(-1.5, -0.7)] {
        let pt = SpectralPoint::physical(xi);
        let q = quasi_momenta(&pt, &k).unwrap();
        let want = homogeneous_delta(xi, &q, &k);
        let got = m.delta(&pt).unwrap();
        assert!((got - want).norm() <= 1e-8 * want.norm(), "{xi}: {got} vs {want}");
    }
}

#[test]
fn cut_side_selects_sign_on_inner_cut() {
    let k = unit();
    let below = quasi_momenta(&SpectralPoint::physical(c(0.3, 0.0)), &k).unwrap();
    let above = quasi_momenta(&SpectralPoint::physical(c(0.3, 0.0)).with_cut_side(CutSide::Above), &k).unwrap();
    assert!(below.qp.re > 0.0 && below.qs.re > 0.0);
    assert_eq!(above.qp, -below.qp);
    assert_eq!(above.qs, -below.qs);
}
