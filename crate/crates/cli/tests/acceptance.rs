//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use nalgebra::Matrix2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rayleigh::analysis::LeadingTerms;
use rayleigh::config::RunConfig;
use rayleigh::medium::{ConstantProfile, ElasticProfile, TransformData};
use rayleigh::pm_transform::{green_kernel, TransformedModel, VolterraMode};
use rayleigh::rayleigh_ode::{
    delta_from_d, propagate_state, Branch, DisplacementModel, DisplacementState,
    FourColumns, ThetaPhi,
};
use rayleigh::riemann::{apply_mapping, quasi_momenta, Mapping};
use rayleigh::{CutSide, HalfSpaceConstants, SheetTag, Sign, SpectralModel, SpectralPoint, C64};
use rayleigh_cli::{cmd_analyze, cmd_roots, parse_config, AnalyzeReport};

type Outcome = Result<(bool, String), String>;

fn load(name: &str) -> RunConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    parse_config(&std::fs::read_to_string(path).expect("read config"), &[]).expect("parse config")
}

fn unit() -> HalfSpaceConstants {
    HalfSpaceConstants::new(1.0, 1.0, 1.0, 1.0).unwrap()
}

fn rel(a: C64, b: C64) -> f64 {
    let s = a.norm().max(b.norm());
    if s == 0.0 { 0.0 } else { (a - b).norm() / s }
}

fn cmax(m: &Matrix2<C64>) -> f64 {
    m.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// Uniform in a square, kept off the axes.
fn random_xi(rng: &mut ChaCha8Rng, extent: f64) -> C64 {
    loop {
        let z = C64::new(rng.gen_range(-extent..extent), rng.gen_range(-extent..extent));
        if z.re.abs() > 1e-3 * extent && z.im.abs() > 1e-3 * extent {
            return z;
        }
    }
}

fn random_xi_in_disc(rng: &mut ChaCha8Rng, radius: f64) -> C64 {
    loop {
        let z = random_xi(rng, radius);
        if z.norm() <= radius {
            return z;
        }
    }
}

/// Rayleigh root of the unit half-space by bisection on the cubic in
/// `s = 1 / xi^2`.
fn rayleigh_root_unit() -> f64 {
    let p = |s: f64| 3.0 * s * s * s - 24.0 * s * s + 56.0 * s - 32.0;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let m = 0.5 * (lo + hi);
        if p(m) < 0.0 { lo = m } else { hi = m }
    }
    1.0 / (0.5 * (lo + hi)).sqrt()
}

/// `-(omega^2 - 2 mu xi^2)^2 - 4 mu^2 xi^2 qP qS`.
fn closed_delta(xi: C64, qp: C64, qs: C64, c: &HalfSpaceConstants) -> C64 {
    let t = c.omega * c.omega - 2.0 * c.mu_i * xi * xi;
    -(t * t) - 4.0 * c.mu_i * c.mu_i * xi * xi * qp * qs
}

fn criterion_1() -> Outcome {
    let cfg = load("homogeneous.json");
    let start = Instant::now();
    let zeros = cmd_roots(&cfg).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    let xr = rayleigh_root_unit();
    let ok_count = zeros.len() == 1 && zeros[0].multiplicity == 1;
    let err = zeros.first().map(|z| (z.xi - xr).norm()).unwrap_or(f64::INFINITY);
    Ok((
        ok_count && err <= 1e-6 && secs <= 30.0,
        format!("{} zero(s), |xi - xi_R| = {err:.2e} (xi_R = {xr:.10}), {secs:.1} s", zeros.len()),
    ))
}

fn criterion_2(rng: &mut ChaCha8Rng) -> Outcome {
    let c = unit();
    let (_, rm) = c.branch_radii();
    let model = DisplacementModel::new(Arc::new(ConstantProfile::new(c)));
    let mut worst = 0.0f64;
    for k in 0..200 {
        let xi = random_xi(rng, 3.0 * rm);
        let p = SpectralPoint::new(xi, SheetTag::ALL[k % 4]);
        let q = quasi_momenta(&p, &c).map_err(|e| e.to_string())?;
        let sq = ((q.qp * q.qp - (c.omega * c.omega / (c.lambda_i + 2.0 * c.mu_i) - xi * xi)).norm())
            .max((q.qs * q.qs - (c.omega * c.omega / c.mu_i - xi * xi)).norm());
        if sq > 1e-12 * (1.0 + xi.norm_sqr()) {
            return Ok((false, format!("q^2 inconsistent at {xi}: {sq:.2e}")));
        }
        let d = model.delta(&p).map_err(|e| e.to_string())?;
        let closed = closed_delta(xi, q.qp, q.qs, &c);
        worst = worst.max((d - closed).norm() / (1.0 + d.norm()));
    }
    Ok((worst <= 1e-9, format!("max |Delta - closed| / (1 + |Delta|) = {worst:.2e} over 200 points")))
}

fn criterion_3(rng: &mut ChaCha8Rng) -> Outcome {
    let c = unit();
    let (_, rm) = c.branch_radii();
    let literal = TransformedModel::homogeneous(c, TransformData::identity(&c)).map_err(|e| e.to_string())?;
    let surface = TransformedModel::homogeneous(c, TransformData::surface_identity(&c)).map_err(|e| e.to_string())?;
    let (mut err, mut err_surface) = (0.0f64, 0.0f64);
    for _ in 0..50 {
        let xi = random_xi(rng, 3.0 * rm);
        let p = SpectralPoint::physical(xi);
        let q = quasi_momenta(&p, &c).map_err(|e| e.to_string())?;
        let want = closed_delta(xi, q.qp, q.qs, &c);
        err = err.max(rel(literal.bridge_determinant(&p).map_err(|e| e.to_string())?, want));
        err_surface = err_surface.max(rel(surface.bridge_determinant(&p).map_err(|e| e.to_string())?, want));
    }
    Ok((
        err <= 1e-8,
        format!("G^H = I: max rel error {err:.2e}; info: with G(0) = I the error is {err_surface:.2e}"),
    ))
}

fn criterion_4(rng: &mut ChaCha8Rng) -> Outcome {
    let cfg = load("test_v.json");
    let model = cfg.transformed_model().map_err(|e| e.to_string())?;
    let h = cfg.constants.h;
    let mut worst = 0.0f64;
    for sheet in SheetTag::ALL {
        for _ in 0..20 {
            let p = SpectralPoint::new(random_xi_in_disc(rng, 20.0 / h), sheet);
            let a = model.frame_with_mode(&p, VolterraMode::Iterates).map_err(|e| e.to_string())?.jost_function;
            let b = model.frame_with_mode(&p, VolterraMode::Ode).map_err(|e| e.to_string())?.jost_function;
            worst = worst.max((a - b).norm() / b.norm());
        }
    }
    Ok((worst <= 1e-8, format!("max rel difference {worst:.2e} over 80 points")))
}

fn criterion_5(rng: &mut ChaCha8Rng) -> Outcome {
    let c = unit();
    let (_, rm) = c.branch_radii();
    let g12 = 0.3;
    let g21 = -0.4;
    let g11 = 1.2;
    let transforms = [
        TransformData::identity(&c),
        TransformData::new([g11, g12, g21, (1.0 + g12 * g21) / g11], &c).map_err(|e| e.to_string())?,
    ];
    let fd = 1e-6;
    let (mut diag, mut deriv) = (0.0f64, 0.0f64);
    for k in 0..100 {
        let td = &transforms[k % 2];
        let x = rng.gen_range(0.0..c.h);
        let p = SpectralPoint::new(random_xi(rng, 3.0 * rm), SheetTag::ALL[rng.gen_range(0..4)]);
        let q = quasi_momenta(&p, &c).map_err(|e| e.to_string())?;
        diag = diag.max(cmax(&green_kernel(x, x, &q, td, &c)));
        let d = (green_kernel(x + fd, x, &q, td, &c) - green_kernel(x - fd, x, &q, td, &c)) / C64::new(2.0 * fd, 0.0);
        deriv = deriv.max(cmax(&(d - Matrix2::identity())));
    }
    Ok((
        diag <= 1e-12 && deriv <= 1e-8,
        format!("max |G(x,x)| = {diag:.2e}, max |d_x G(x,y)|_(y=x) - I| = {deriv:.2e} (central difference, h = 1e-6)"),
    ))
}

fn half_sum(a: &DisplacementState, b: &DisplacementState) -> DisplacementState {
    let h = C64::new(0.5, 0.0);
    DisplacementState {
        phi1: (a.phi1 + b.phi1) * h,
        phi3: (a.phi3 + b.phi3) * h,
        b_val: (a.b_val + b.b_val) * h,
        a_val: (a.a_val + b.a_val) * h,
    }
}

fn half_diff_over(a: &DisplacementState, b: &DisplacementState, q: C64) -> DisplacementState {
    let s = C64::new(0.5, 0.0) / q;
    DisplacementState {
        phi1: (a.phi1 - b.phi1) * s,
        phi3: (a.phi3 - b.phi3) * s,
        b_val: (a.b_val - b.b_val) * s,
        a_val: (a.a_val - b.a_val) * s,
    }
}

fn state_diff(a: &DisplacementState, b: &DisplacementState) -> f64 {
    [a.phi1 - b.phi1, a.phi3 - b.phi3, a.b_val - b.b_val, a.a_val - b.a_val]
        .iter()
        .map(|v| v.norm_sqr())
        .sum::<f64>()
        .sqrt()
}

fn criterion_6(rng: &mut ChaCha8Rng) -> Outcome {
    let cfg = load("polynomial_bump.json");
    let profile = cfg.profile().map_err(|e| e.to_string())?;
    let p: &dyn ElasticProfile = profile.as_ref();
    let c = *p.constants();
    let (_, rm) = c.branch_radii();
    let opts = cfg.propagation_options();
    let model = DisplacementModel::new(profile.clone());
    let e = |e: rayleigh::Error| e.to_string();
    let (mut parity, mut recon, mut sheet_free, mut from_d) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..100 {
        let xi = random_xi(rng, 3.0 * rm);
        let pt = SpectralPoint::physical(xi);
        let q = quasi_momenta(&pt, &c).map_err(e)?;
        let state = |q: &rayleigh::riemann::QuasiMomenta, b: Branch, s: Sign| propagate_state(p, xi, q, b, s, &opts);

        // f^{-+} with flipped q equals f^{+-} with q
        for (branch, maps) in [(Branch::P, [Mapping::P, Mapping::PS]), (Branch::S, [Mapping::S, Mapping::PS])] {
            for sign in [Sign::Plus, Sign::Minus] {
                let base = state(&q, branch, sign.flip()).map_err(e)?;
                for m in maps {
                    let mq = quasi_momenta(&apply_mapping(&pt, m), &c).map_err(e)?;
                    let mapped = state(&mq, branch, sign).map_err(e)?;
                    parity = parity.max(state_diff(&mapped, &base) / base.norm());
                }
            }
        }

        let cols = FourColumns::compute(p, xi, CutSide::Below, &opts).map_err(e)?;
        let tp = ThetaPhi::from_columns(&cols).map_err(e)?;
        for (theta, phi, qb, plus, minus) in [
            (&tp.theta_p, &tp.phi_p, cols.q.qp, &cols.p_plus, &cols.p_minus),
            (&tp.theta_s, &tp.phi_s, cols.q.qs, &cols.s_plus, &cols.s_minus),
        ] {
            for (s, target) in [(1.0, plus), (-1.0, minus)] {
                let k = qb * s;
                let built = DisplacementState {
                    phi1: theta.phi1 + k * phi.phi1,
                    phi3: theta.phi3 + k * phi.phi3,
                    b_val: theta.b_val + k * phi.b_val,
                    a_val: theta.a_val + k * phi.a_val,
                };
                recon = recon.max(state_diff(&built, target) / target.norm());
            }
        }

        // d_i rebuilt from columns propagated with each mapped pair of q
        let d = tp.d_coefficients();
        let dn = d.iter().map(|v| v.norm()).fold(0.0, f64::max);
        for m in [Mapping::P, Mapping::S, Mapping::PS] {
            let mq = quasi_momenta(&apply_mapping(&pt, m), &c).map_err(e)?;
            let pp = state(&mq, Branch::P, Sign::Plus).map_err(e)?;
            let pm = state(&mq, Branch::P, Sign::Minus).map_err(e)?;
            let sp = state(&mq, Branch::S, Sign::Plus).map_err(e)?;
            let sm = state(&mq, Branch::S, Sign::Minus).map_err(e)?;
            let other = ThetaPhi {
                q: mq,
                theta_p: half_sum(&pp, &pm),
                phi_p: half_diff_over(&pp, &pm, mq.qp),
                theta_s: half_sum(&sp, &sm),
                phi_s: half_diff_over(&sp, &sm, mq.qs),
            }
            .d_coefficients();
            for (a, b) in d.iter().zip(other.iter()) {
                sheet_free = sheet_free.max((a - b).norm() / dn);
            }
        }

        for sheet in SheetTag::ALL {
            let direct = model.delta(&SpectralPoint::new(xi, sheet)).map_err(e)?;
            from_d = from_d.max(rel(delta_from_d(&d, &cols.q, sheet), direct));
        }
    }
    let tol = 1e-10;
    Ok((
        parity <= tol && recon <= tol && sheet_free <= tol && from_d <= tol,
        format!("parity {parity:.2e}, reconstruction {recon:.2e}, d sheet-independence {sheet_free:.2e}, Delta from d {from_d:.2e}"),
    ))
}

/// Largest `|F(z+o) - F(z-o)| / max |F|`, and the same with the smooth part
/// `2 o F'(z)` removed (central difference with step `1e4 o`).
fn jump_test(model: &dyn SpectralModel, points: &[C64], offset: C64) -> Result<(f64, f64), String> {
    let f = |z: C64| model.entire_f(z).map_err(|e| e.to_string());
    let (mut worst, mut corrected) = (0.0f64, 0.0f64);
    for &z in points {
        let a = f(z + offset)?;
        let b = f(z - offset)?;
        let step = offset * 1e4;
        let deriv = (f(z + step)? - f(z - step)?) / (step * 2.0);
        let scale = a.norm().max(b.norm());
        worst = worst.max((a - b).norm() / scale);
        corrected = corrected.max((a - b - offset * 2.0 * deriv).norm() / scale);
    }
    Ok((worst, corrected))
}

fn criterion_7() -> Outcome {
    let eps = 1e-8;
    let mut parts = Vec::new();
    let (mut worst, mut corrected) = (0.0f64, 0.0f64);
    for name in ["polynomial_bump.json", "test_v.json"] {
        let cfg = load(name);
        let model = cfg.model().map_err(|e| e.to_string())?;
        let (rp, rm) = model.constants().branch_radii();
        let mut real = Vec::new();
        for (a, b) in [(-rm, -rp), (-rp, rp), (rp, rm)] {
            real.extend((1..=10).map(|k| C64::new(a + (b - a) * k as f64 / 11.0, 0.0)));
        }
        let imag: Vec<C64> = (1..=10)
            .flat_map(|k| [C64::new(0.0, 0.3 * k as f64), C64::new(0.0, -0.3 * k as f64)])
            .collect();
        let (jr, cr) = jump_test(model.as_ref(), &real, C64::new(0.0, eps))?;
        let (ji, ci) = jump_test(model.as_ref(), &imag, C64::new(eps, 0.0))?;
        worst = worst.max(jr).max(ji);
        corrected = corrected.max(cr).max(ci);
        parts.push(format!("{name}: real cuts {jr:.2e}, imaginary axis {ji:.2e}"));
    }
    Ok((
        worst <= 1e-6,
        format!(
            "max rel jump of F at eps = 1e-8: {}; info: with 2 eps F' removed the jump is {corrected:.2e}",
            parts.join("; ")
        ),
    ))
}

fn criterion_8() -> Outcome {
    let cfg = load("test_v.json");
    let model = cfg.transformed_model().map_err(|e| e.to_string())?;
    let c = cfg.constants;
    let (_, rm) = c.branch_radii();
    let lead = c.mu_i * model.boundary.c0() / c.omega2();
    let xi = C64::new(100.0 * rm, 0.0);
    let det = model
        .frame(&SpectralPoint::physical(xi))
        .map_err(|e| e.to_string())?
        .jost_function
        .determinant();
    let err = (det / (xi * xi * xi) - lead).norm() / lead.abs();
    Ok((err <= 0.02, format!("|det/xi^3 - mu c0/omega^2| / (mu c0/omega^2) = {err:.2e} at xi = 100 r_-")))
}

fn criterion_9() -> Outcome {
    let cfg = load("test_v.json");
    let model = cfg.transformed_model().map_err(|e| e.to_string())?;
    let c = cfg.constants;
    let h = c.h;
    let lead = c.mu_i * model.boundary.c0() / c.omega2();
    let leading = LeadingTerms::new(&model.constants, &model.boundary, &model.transform, &model.potential);
    let mut ratios = Vec::new();
    let mut worst = 0.0f64;
    for two_h_xi in [40.0, 50.0, 60.0, 80.0] {
        let xi = C64::new(two_h_xi / (2.0 * h), 0.0);
        let det = model
            .frame(&SpectralPoint::new(xi, SheetTag::MM))
            .map_err(|e| e.to_string())?
            .jost_function
            .determinant();
        let x3 = xi * xi * xi;
        let ratio = (det - x3 * lead) / (x3 * leading.script_a(xi));
        worst = worst.max((ratio - 1.0).norm());
        ratios.push(format!("{:.4}{:+.4}i", ratio.re, ratio.im));
    }
    Ok((worst <= 0.1, format!("(-,-) leading-term ratios at 2H xi = 40, 50, 60, 80: {}", ratios.join(", "))))
}

fn criterion_10(report: &AnalyzeReport, h: f64) -> Outcome {
    let b8 = 8.0 * h * 1.05;
    let b12 = 12.0 * h * 1.05;
    let real: Vec<f64> = report.growth.rays.iter().filter(|r| r.angle == 0.0).map(|r| r.slope).collect();
    let all_max = report.growth.rays.iter().map(|r| r.slope).fold(f64::NEG_INFINITY, f64::max);
    let real_max = real.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let cw = &report.cartwright;
    let ok = !real.is_empty() && real_max <= b8 && all_max <= b12 && cw.rho_plus <= b8 && cw.rho_minus <= b8;
    Ok((
        ok,
        format!(
            "real-axis slope {real_max:.3} (<= {b8:.2}), max ray slope {all_max:.3} (<= {b12:.2}), rho+ {:.3}, rho- {:.3} (<= {b8:.2})",
            cw.rho_plus, cw.rho_minus
        ),
    ))
}

fn criterion_11(report: &AnalyzeReport, h: f64) -> Outcome {
    let mut ok = report.winding_total == report.multiplicity_total as i64;
    let mut worst = 0.0f64;
    let mut over = Vec::new();
    for row in &report.counts.rows {
        let bound = 1.2 * 8.0 * h * row.radius / std::f64::consts::PI;
        let n = row.n_plus.max(row.n_minus) as f64;
        worst = worst.max(n / bound);
        if n > bound {
            over.push(format!("r = {}: N = {n} > {bound:.2}", row.radius));
        }
    }
    ok &= over.is_empty();
    Ok((
        ok,
        format!(
            "{} zeros (winding {}), max N(r) / (1.2 * 8Hr/pi) = {worst:.3} over r = 1..20; over the bound: [{}]",
            report.multiplicity_total,
            report.winding_total,
            over.join(", ")
        ),
    ))
}

fn criterion_12(report: &AnalyzeReport) -> Outcome {
    let f = &report.forbidden_domain;
    Ok((
        f.violations.is_empty(),
        format!("C_fit = {:.3e}, {} violation(s)", f.c_fit, f.violations.len()),
    ))
}

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let mut results: Vec<(usize, Outcome)> = Vec::new();
    let mut report_line = |n: usize, o: Outcome| {
        match &o {
            Ok((true, d)) => println!("PASS criterion {n}: {d}"),
            Ok((false, d)) => println!("FAIL criterion {n}: {d}"),
            Err(e) => println!("FAIL criterion {n}: error: {e}"),
        }
        results.push((n, o));
    };
    report_line(1, criterion_1());
    report_line(2, criterion_2(&mut rng));
    report_line(3, criterion_3(&mut rng));
    report_line(4, criterion_4(&mut rng));
    report_line(5, criterion_5(&mut rng));
    report_line(6, criterion_6(&mut rng));
    report_line(7, criterion_7());
    report_line(8, criterion_8());
    report_line(9, criterion_9());

    let cfg = load("test_v.json");
    let start = Instant::now();
    match cmd_analyze(&cfg) {
        Ok(report) => {
            eprintln!("analysis of test_v took {:.0} s", start.elapsed().as_secs_f64());
            let h = cfg.constants.h;
            report_line(10, criterion_10(&report, h));
            report_line(11, criterion_11(&report, h));
            report_line(12, criterion_12(&report));
        }
        Err(e) => {
            for n in 10..=12 {
                report_line(n, Err(e.to_string()));
            }
        }
    }

    let failed: Vec<usize> = results.iter().filter(|(_, o)| !matches!(o, Ok((true, _)))).map(|(n, _)| *n).collect();
    println!("acceptance: {} of {} passed", results.len() - failed.len(), results.len());
    if !failed.is_empty() {
        println!("failed: {failed:?}");
        std::process::exit(1);
    }
}
