use std::sync::Arc;

use proptest::prelude::*;
use rayleigh::analysis::{forbidden_domain_check, gamma_bound, gamma_max_formula, levinson_counts};
use rayleigh::config::RunConfig;
use rayleigh::medium::{
    BoundaryValues, ConstantProfile, PolynomialBumpProfile, PotentialSpec, TransformData,
};
use rayleigh::pm_transform::{green_kernel, GreenKernelParts, TransformedModel};
use rayleigh::rayleigh_ode::{
    delta_from_d, determinant_bundle, homogeneous_delta, DisplacementModel, PropagationOptions,
};
use rayleigh::riemann::{apply_mapping, classify, conjugate, quasi_momenta, reflect, Mapping};
use rayleigh::spectral::{find_zeros_fn, winding_number, Rect, SpectralOptions, Target};
use rayleigh::{HalfSpaceConstants, SheetTag, SpectralModel, SpectralPoint, C64};

fn unit() -> HalfSpaceConstants {
    HalfSpaceConstants::new(1.0, 1.0, 1.0, 1.0).unwrap()
}

fn constants() -> impl Strategy<Value = HalfSpaceConstants> {
    (0.2f64..5.0, -0.4f64..5.0, 0.2f64..4.0, 0.2f64..3.0)
        .prop_map(|(mu, la, w, h)| HalfSpaceConstants::new(mu, la.max(-0.9 * mu), w, h).unwrap())
}

/// Off the axes so no point lands on a cut.
fn xi() -> impl Strategy<Value = C64> {
    (-4.0f64..4.0, -4.0f64..4.0)
        .prop_filter("off axes", |(a, b)| a.abs() > 1e-3 && b.abs() > 1e-3)
        .prop_map(|(a, b)| C64::new(a, b))
}

fn sheet() -> impl Strategy<Value = SheetTag> {
    (0usize..4).prop_map(|k| SheetTag::ALL[k])
}

fn rel(a: C64, b: C64) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn radii_ordered(c in constants()) {
        let (rp, rm) = c.branch_radii();
        prop_assert!(0.0 < rp && rp < rm);
    }

    #[test]
    fn quasi_momenta_square_and_sign(c in constants(), z in xi(), s in sheet()) {
        let (rp, rm) = c.branch_radii();
        let q = quasi_momenta(&SpectralPoint::new(z, s), &c).unwrap();
        let scale = (z * z).norm() + rm * rm;
        prop_assert!((q.qp * q.qp - (rp * rp - z * z)).norm() <= 1e-14 * scale);
        prop_assert!((q.qs * q.qs - (rm * rm - z * z)).norm() <= 1e-14 * scale);
        if q.qp.im != 0.0 && q.qs.im != 0.0 {
            prop_assert_eq!(classify(&q), Some(s));
        }
    }

    #[test]
    fn mappings_flip_quasi_momenta(z in xi(), s in sheet()) {
        let c = unit();
        let p = SpectralPoint::new(z, s);
        let q = quasi_momenta(&p, &c).unwrap();
        let qp = quasi_momenta(&apply_mapping(&p, Mapping::P), &c).unwrap();
        let qs = quasi_momenta(&apply_mapping(&p, Mapping::S), &c).unwrap();
        let qps = quasi_momenta(&apply_mapping(&p, Mapping::PS), &c).unwrap();
        prop_assert_eq!((qp.qp, qp.qs), (-q.qp, q.qs));
        prop_assert_eq!((qs.qp, qs.qs), (q.qp, -q.qs));
        prop_assert_eq!((qps.qp, qps.qs), (-q.qp, -q.qs));
        for m in [Mapping::P, Mapping::S, Mapping::PS] {
            prop_assert_eq!(apply_mapping(&apply_mapping(&p, m), m), p);
        }
    }

    #[test]
    fn reflection_and_conjugation_keep_sheet(z in xi(), s in sheet()) {
        let c = unit();
        let p = SpectralPoint::new(z, s);
        let q = quasi_momenta(&p, &c).unwrap();
        let r = quasi_momenta(&reflect(&p), &c).unwrap();
        prop_assert!(rel(r.qp, q.qp) <= 1e-14 && rel(r.qs, q.qs) <= 1e-14);
        let cj = conjugate(&p, &c).unwrap();
        prop_assert_eq!(cj.sheet, s);
        let qc = quasi_momenta(&cj, &c).unwrap();
        prop_assert!(rel(qc.qp, -q.qp.conj()) <= 1e-14);
    }

    #[test]
    fn gamma_equals_three_way_max(c in constants(), z in xi(), s in sheet()) {
        let p = SpectralPoint::new(z, s);
        let q = quasi_momenta(&p, &c).unwrap();
        prop_assert_eq!(gamma_bound(&p, &c).unwrap(), gamma_max_formula(&q));
    }

    #[test]
    fn homogeneous_sheet_determinants(c in constants(), z in xi()) {
        let prof = ConstantProfile::new(c);
        let b = determinant_bundle(&prof, z, &PropagationOptions::default()).unwrap();
        for (k, s) in SheetTag::ALL.into_iter().enumerate() {
            let q = b.q.flipped(s);
            let closed = homogeneous_delta(z, &q, &c);
            prop_assert!((b.delta_by_sheet[k] - closed).norm() <= 1e-9 * (1.0 + closed.norm()));
            prop_assert!(rel(delta_from_d(&b.d, &b.q, s), b.delta_by_sheet[k]) <= 1e-10);
        }
    }

    #[test]
    fn kernel_parts_sum_to_identity(x in 0.0f64..1.0, y in 0.0f64..1.0, g11 in 0.5f64..2.0, g12 in -1.0f64..1.0, g21 in -1.0f64..1.0) {
        let c = unit();
        let g22 = (1.0 + g12 * g21) / g11;
        let td = TransformData::new([g11, g12, g21, g22], &c).unwrap();
        let r = GreenKernelParts::new(&td, &c).identity_residual(x, y);
        let scale = 1.0f64.max(g11 * g11).max(g12 * g12).max(g22.abs());
        prop_assert!((r - nalgebra::Matrix2::identity()).amax() <= 1e-14 * scale * 4.0);
    }

    #[test]
    fn kernel_vanishes_on_diagonal(x in 0.0f64..1.0, z in xi(), s in sheet()) {
        let c = unit();
        let td = TransformData::identity(&c);
        let q = quasi_momenta(&SpectralPoint::new(z, s), &c).unwrap();
        let g = green_kernel(x, x, &q, &td, &c);
        prop_assert!(g.iter().all(|v| v.norm() <= 1e-12));
    }

    #[test]
    fn counts_are_monotone_and_within_totals(pts in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 0..40)) {
        let zeros: Vec<_> = pts.iter().map(|&(a, b)| record(C64::new(a, b))).collect();
        let radii: Vec<f64> = (1..=15).map(|k| k as f64).collect();
        let rep = levinson_counts(&zeros, &radii, 1.0);
        prop_assert!(rep.monotone);
        for row in &rep.rows {
            let inside = zeros.iter().filter(|z| z.xi.norm() <= row.radius).count();
            prop_assert_eq!(row.n_plus + row.n_minus + row.n_axis, inside);
        }
    }

    #[test]
    fn forbidden_constant_bounds_every_zero(pts in prop::collection::vec((-5.0f64..5.0, -30.0f64..30.0), 1..30)) {
        let zeros: Vec<C64> = pts.iter().map(|&(a, b)| C64::new(a, b)).collect();
        let rep = forbidden_domain_check(&zeros, 1.0);
        for z in &zeros {
            prop_assert!(z.norm() <= rep.c_fit * (2.0 * z.re.abs()).exp() * (1.0 + 1e-12));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn winding_counts_polynomial_roots(roots in prop::collection::vec((-0.9f64..0.9, -0.9f64..0.9), 1..6)) {
        let roots: Vec<C64> = roots.iter().map(|&(a, b)| C64::new(a, b)).collect();
        let f = |z: C64| -> rayleigh::Result<C64> { Ok(roots.iter().map(|r| z - r).product()) };
        let rect = Rect::new(-1.0, 1.0, -1.0, 1.0).unwrap();
        let opts = SpectralOptions::default();
        prop_assert_eq!(winding_number(&f, &rect, &opts).unwrap(), roots.len() as i64);
        let found = find_zeros_fn(&f, Target::EntireF, &rect, &opts).unwrap();
        let total: usize = found.iter().map(|r| r.multiplicity).sum();
        prop_assert_eq!(total, roots.len());
    }

    #[test]
    fn f_is_even(z in xi()) {
        let c = unit();
        let prof = PolynomialBumpProfile::new(c, 0.1, 0.1, 3).unwrap();
        let o = PropagationOptions::default();
        let a = determinant_bundle(&prof, z, &o).unwrap();
        let b = determinant_bundle(&prof, -z, &o).unwrap();
        let pa: C64 = a.delta_by_sheet.iter().product();
        let pb: C64 = b.delta_by_sheet.iter().product();
        prop_assert!(rel(pb, pa) <= 1e-9);
    }

    #[test]
    fn inhomogeneous_d_coefficients_are_sheet_free(z in xi()) {
        let c = unit();
        let prof = PolynomialBumpProfile::new(c, 0.2, -0.1, 3).unwrap();
        let b = determinant_bundle(&prof, z, &PropagationOptions::default()).unwrap();
        let model = DisplacementModel::new(Arc::new(prof));
        for (k, s) in SheetTag::ALL.into_iter().enumerate() {
            let direct = model.delta(&SpectralPoint::new(z, s)).unwrap();
            prop_assert!(rel(direct, b.delta_by_sheet[k]) <= 1e-10);
            prop_assert!(rel(delta_from_d(&b.d, &b.q, s), direct) <= 1e-10);
        }
    }

    #[test]
    fn transformed_frame_modes_agree(z in xi(), s in sheet()) {
        let c = unit();
        let m = TransformedModel::new(
            c,
            BoundaryValues::from_profile(&ConstantProfile::new(c)),
            TransformData::identity(&c),
            PotentialSpec::bump(1.0, 0.5, [[1.0, 0.5], [-0.5, 1.0]]).unwrap(),
            Default::default(),
        )
        .unwrap();
        let p = SpectralPoint::new(z, s);
        let a = m.frame_with_mode(&p, rayleigh::pm_transform::VolterraMode::Iterates).unwrap();
        let b = m.frame_with_mode(&p, rayleigh::pm_transform::VolterraMode::Ode).unwrap();
        let scale = b.jost_function.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let err = (a.jost_function - b.jost_function).iter().map(|v| v.norm()).fold(0.0, f64::max);
        prop_assert!(err <= 1e-8 * scale, "{err:e} vs {scale:e}");
    }
}

#[test]
fn config_roundtrip_is_stable() {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/test_v.json")).unwrap();
    let cfg: RunConfig = serde_json::from_str(&text).unwrap();
    let again: RunConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
    assert_eq!(serde_json::to_value(&cfg).unwrap(), serde_json::to_value(&again).unwrap());
}

fn record(xi: C64) -> rayleigh::spectral::ResonanceRecord {
    rayleigh::spectral::ResonanceRecord {
        xi,
        target: Target::EntireF,
        sheets: Vec::new(),
        multiplicity: 1,
        residual: 0.0,
        scale: 1.0,
        classification: None,
        cluster: false,
        on_imaginary_axis: xi.re == 0.0,
    }
}
