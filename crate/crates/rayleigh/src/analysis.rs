//! Growth and counting checks on `F`: the exponent `gamma`, the leading
//! integrals of the unphysical-sheet asymptotics, exponential-type fits,
//! Cartwright indices, Levinson counts and the forbidden domain.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::medium::{BoundaryValues, HalfSpaceConstants, PotentialSpec, TransformData};
use crate::model::{log_abs_f_with_error, SpectralModel};
use crate::pm_transform::ThetaMatrix;
use crate::quadrature::Rule;
use crate::riemann::{quasi_momenta, QuasiMomenta, Sign, SpectralPoint, C64};
use crate::spectral::ResonanceRecord;

/// Slack applied to every fitted bound.
pub const FIT_SLACK: f64 = 0.05;
/// Slack standing in for the `o(1)` of the counting asymptotics.
pub const COUNT_SLACK: f64 = 0.2;
/// Largest `|xi| H` at which `F` is sampled.
pub const MAX_XI_H: f64 = 50.0;
/// Largest accepted error estimate of a sampled `log |F|`.
pub const MAX_LOG_ERROR: f64 = 1e-5;

/// `0` on `Xi_{+,.}` and `-2 Im q_P` on `Xi_{-,.}`.
pub fn gamma_bound(point: &SpectralPoint, constants: &HalfSpaceConstants) -> Result<f64> {
    let q = quasi_momenta(point, constants)?;
    Ok(match point.sheet.p {
        Sign::Plus => 0.0,
        Sign::Minus => -2.0 * q.qp.im,
    })
}

/// The three-way maximum defining `gamma`.
pub fn gamma_max_formula(q: &QuasiMomenta) -> f64 {
    let p = q.qp.im;
    let d = (q.qp - q.qs).im;
    let s = (q.qp + q.qs).im;
    (p.abs() - p).max((d.abs() - d) / 2.0).max((s.abs() - s) / 2.0)
}

/// `Im q_P + |Im q_P|`.
pub fn zeta_p(q: &QuasiMomenta) -> f64 {
    q.qp.im + q.qp.im.abs()
}

/// `Im (q_P - q_S) + |Im (q_P - q_S)|`.
pub fn zeta_p_minus_s(q: &QuasiMomenta) -> f64 {
    let d = (q.qp - q.qs).im;
    d + d.abs()
}

/// Data entering the leading terms of the unphysical-sheet determinants.
#[derive(Debug, Clone)]
pub struct LeadingTerms<'a> {
    pub constants: &'a HalfSpaceConstants,
    pub boundary: &'a BoundaryValues,
    pub transform: &'a TransformData,
    pub potential: &'a PotentialSpec,
    pub panels: usize,
    pub nodes: usize,
}

impl<'a> LeadingTerms<'a> {
    pub fn new(
        constants: &'a HalfSpaceConstants,
        boundary: &'a BoundaryValues,
        transform: &'a TransformData,
        potential: &'a PotentialSpec,
    ) -> Self {
        Self {
            constants,
            boundary,
            transform,
            potential,
            panels: 16,
            nodes: 32,
        }
    }

    fn integral(&self, xi: C64, weight: impl Fn([[f64; 2]; 2]) -> f64) -> C64 {
        let rule = Rule::new(self.nodes);
        rule.integrate(0.0, self.constants.h, self.panels, |y| {
            (xi * (2.0 * y)).exp() * weight(self.potential.components(y))
        })
    }

    fn a_weight(&self, v: [[f64; 2]; 2]) -> f64 {
        v[0][0] * self.transform.g11h + v[0][1] * self.transform.g12h
    }

    fn b_weight(&self, v: [[f64; 2]; 2]) -> f64 {
        v[1][0] * self.transform.g11h + v[1][1] * self.transform.g12h
    }

    /// `2 mu_I^2 / (mu(0) omega^2) int_0^H e^{2 xi y} V_12(y) dy`.
    pub fn script_a(&self, xi: C64) -> C64 {
        let c = self.constants;
        let pre = 2.0 * c.mu_i * c.mu_i / (self.boundary.mu0 * c.omega2());
        self.integral(xi, |v| v[0][1]) * pre
    }

    /// `2 mu_I^3 / (mu(0) omega^4) G11 int_0^H e^{2 xi y} a(y) dy`.
    pub fn script_a_p(&self, xi: C64) -> C64 {
        let c = self.constants;
        let pre = 2.0 * c.mu_i.powi(3) / (self.boundary.mu0 * c.omega2() * c.omega2()) * self.transform.g11h;
        self.integral(xi, |v| self.a_weight(v)) * pre
    }

    /// `mu_I^3 / (mu(0) omega^4) int_0^H e^{2 xi y} [(theta_2 G12 - omega^2
    /// G21(0) / mu_I) a(y) - theta_2 G11 b(y)] dy`.
    pub fn script_a_s(&self, xi: C64) -> C64 {
        let c = self.constants;
        let td = self.transform;
        let theta2 = ThetaMatrix::new(self.boundary, c).theta2;
        let ka = theta2 * td.g12h - c.omega2() / c.mu_i * td.g21(0.0);
        let kb = theta2 * td.g11h;
        let pre = c.mu_i.powi(3) / (self.boundary.mu0 * c.omega2() * c.omega2());
        self.integral(xi, |v| ka * self.a_weight(v) - kb * self.b_weight(v)) * pre
    }
}

/// One sample of `log |F|` along a ray.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RaySample {
    pub radius: f64,
    pub xi_re: f64,
    pub xi_im: f64,
    pub log_abs_f: f64,
}

/// Fit of `log |F| = c + s t + p ln t` along `xi = t e^{i angle}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RayFit {
    pub angle: f64,
    /// Exponential rate per unit of `|Re xi|`; the radial rate when the ray
    /// is the imaginary axis.
    pub slope: f64,
    pub radial_slope: f64,
    pub prefactor_exponent: f64,
    /// Rates fitted separately on the lower and upper halves of the radii.
    pub window_slopes: [f64; 2],
    pub confidence_width: f64,
    pub imaginary_axis: bool,
    pub pass_8h: bool,
    pub pass_12h: bool,
    pub samples: Vec<RaySample>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthReport {
    pub h: f64,
    pub bound_8h: f64,
    pub bound_12h: f64,
    pub slack: f64,
    pub rays: Vec<RayFit>,
    pub pass: bool,
}

/// Least squares on the columns `[1, t, ln t]`; returns `(s, p)`.
fn fit_rate(t: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if t.len() < 3 {
        return Err(Error::Config("a growth fit needs at least three radii".into()));
    }
    let a = DMatrix::from_fn(t.len(), 3, |i, j| match j {
        0 => 1.0,
        1 => t[i],
        _ => t[i].ln(),
    });
    let b = DVector::from_column_slice(y);
    let x = a
        .svd(true, true)
        .solve(&b, 1e-12)
        .map_err(|e| Error::Config(format!("growth fit: {e}")))?;
    Ok((x[1], x[2]))
}

/// `log |F|` at each point, in parallel.
pub fn sample_log_abs_f(model: &dyn SpectralModel, points: &[C64]) -> Result<Vec<f64>> {
    let h = model.constants().h;
    if let Some(p) = points.iter().find(|p| p.norm() * h > MAX_XI_H) {
        return Err(Error::Overflow(format!(
            "|xi| H = {} exceeds {MAX_XI_H}; use smaller radii",
            p.norm() * h
        )));
    }
    let out: Vec<f64> = points
        .par_iter()
        .map(|&z| {
            let (v, err) = log_abs_f_with_error(model, z)?;
            if err > MAX_LOG_ERROR {
                return Err(Error::IllConditioned { xi: z, error: err });
            }
            Ok(v)
        })
        .collect::<Result<_>>()?;
    if let Some(i) = out.iter().position(|v| v.is_nan() || *v == f64::INFINITY) {
        return Err(Error::Overflow(format!(
            "log |F| not finite at xi = {}; use smaller radii",
            points[i]
        )));
    }
    Ok(out)
}

/// Exponential-rate fits of `log |F|` along rays `xi = t e^{i angle}`.
pub fn growth_fit(model: &dyn SpectralModel, angles: &[f64], radii: &[f64]) -> Result<GrowthReport> {
    let h = model.constants().h;
    let bound_8h = 8.0 * h * (1.0 + FIT_SLACK);
    let bound_12h = 12.0 * h * (1.0 + FIT_SLACK);
    let mut rays = Vec::with_capacity(angles.len());
    for &angle in angles {
        let dir = C64::from_polar(1.0, angle);
        let points: Vec<C64> = radii.iter().map(|&t| dir * t).collect();
        let logs = sample_log_abs_f(model, &points)?;
        let (s, p) = fit_rate(radii, &logs)?;
        let half = radii.len() / 2;
        let (s_lo, _) = fit_rate(&radii[..half.max(3)], &logs[..half.max(3)])?;
        let lo = (radii.len() - half).min(radii.len() - 3);
        let (s_hi, _) = fit_rate(&radii[lo..], &logs[lo..])?;
        let cos = angle.cos().abs();
        let imaginary_axis = cos < 1e-12;
        let scale = if imaginary_axis { 1.0 } else { 1.0 / cos };
        let slope = s * scale;
        let (pass_8h, pass_12h) = if imaginary_axis {
            (slope.abs() <= FIT_SLACK * 8.0 * h, slope.abs() <= FIT_SLACK * 12.0 * h)
        } else {
            (slope <= bound_8h, slope <= bound_12h)
        };
        rays.push(RayFit {
            angle,
            slope,
            radial_slope: s,
            prefactor_exponent: p,
            window_slopes: [s_lo * scale, s_hi * scale],
            confidence_width: ((s_lo - s_hi) * scale).abs(),
            imaginary_axis,
            pass_8h,
            pass_12h,
            samples: radii
                .iter()
                .zip(&points)
                .zip(&logs)
                .map(|((&t, z), &l)| RaySample {
                    radius: t,
                    xi_re: z.re,
                    xi_im: z.im,
                    log_abs_f: l,
                })
                .collect(),
        });
    }
    let pass = rays.iter().all(|r| r.pass_8h && r.pass_12h);
    Ok(GrowthReport {
        h,
        bound_8h,
        bound_12h,
        slack: FIT_SLACK,
        rays,
        pass,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoissonWindow {
    pub half_width: f64,
    pub integral: f64,
}

/// Cartwright indices in the variable `z = i xi`: `rho_+` is the rate of
/// `log |F|` along `z = i y` (that is `xi = y`), `rho_-` along `z = -i y`
/// (`xi = -y`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CartwrightReport {
    pub rho_plus: f64,
    pub rho_minus: f64,
    pub bound: f64,
    /// `int_{-T}^{T} log+ |F(z)| / (1 + x^2) dx` over real `z = x`.
    pub poisson_windows: Vec<PoissonWindow>,
    pub increments_decreasing: bool,
    pub pass: bool,
}

/// Fitted indices `rho_+-` and truncated Poisson-log integrals.
pub fn cartwright_indices(
    model: &dyn SpectralModel,
    y_schedule: &[f64],
    windows: &[f64],
) -> Result<CartwrightReport> {
    let h = model.constants().h;
    let rate = |sign: f64| -> Result<f64> {
        let points: Vec<C64> = y_schedule.iter().map(|&y| C64::new(sign * y, 0.0)).collect();
        let logs = sample_log_abs_f(model, &points)?;
        Ok(fit_rate(y_schedule, &logs)?.0)
    };
    let rho_plus = rate(1.0)?;
    let rho_minus = rate(-1.0)?;

    // real z = x is xi = -i x
    let rule = Rule::new(16);
    let mut poisson_windows = Vec::with_capacity(windows.len());
    let mut total = 0.0;
    let mut prev = 0.0;
    for &t in windows {
        if t <= prev {
            return Err(Error::Config("Poisson windows must increase".into()));
        }
        let panels = ((t - prev) / 1.0).ceil().max(1.0) as usize;
        let mut xs = Vec::new();
        let mut ws = Vec::new();
        for k in 0..panels {
            let a = prev + (t - prev) * k as f64 / panels as f64;
            let b = prev + (t - prev) * (k + 1) as f64 / panels as f64;
            let (n, w) = rule.on(a, b);
            xs.extend(n);
            ws.extend(w);
        }
        let mut pts = Vec::with_capacity(2 * xs.len());
        for &x in &xs {
            pts.push(C64::new(0.0, -x));
            pts.push(C64::new(0.0, x));
        }
        let logs = sample_log_abs_f(model, &pts)?;
        for (k, (&x, &w)) in xs.iter().zip(&ws).enumerate() {
            let lp = logs[2 * k].max(0.0) + logs[2 * k + 1].max(0.0);
            total += w * lp / (1.0 + x * x);
        }
        poisson_windows.push(PoissonWindow {
            half_width: t,
            integral: total,
        });
        prev = t;
    }
    let incs: Vec<f64> = poisson_windows
        .windows(2)
        .map(|w| w[1].integral - w[0].integral)
        .collect();
    let increments_decreasing = incs.windows(2).all(|w| w[1] <= w[0]);
    let bound = 8.0 * h * (1.0 + FIT_SLACK);
    Ok(CartwrightReport {
        rho_plus,
        rho_minus,
        bound,
        pass: rho_plus <= bound && rho_minus <= bound,
        poisson_windows,
        increments_decreasing,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountRow {
    pub radius: f64,
    /// Zeros with `Re xi > 0` (upper half-plane of `z = i xi`).
    pub n_plus: usize,
    /// Zeros with `Re xi < 0`.
    pub n_minus: usize,
    /// Zeros on the imaginary axis, counted in neither half.
    pub n_axis: usize,
    pub bound: f64,
    /// Zeros farther than `delta` in argument from both `+-pi/2`, for each
    /// `delta` in the report.
    pub sector_exceptions: Vec<usize>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountReport {
    pub convention: String,
    pub deltas: Vec<f64>,
    pub rows: Vec<CountRow>,
    pub monotone: bool,
    pub pass: bool,
}

/// `N_+-(r, F)` over a radius grid, with multiplicities.
pub fn levinson_counts(zeros: &[ResonanceRecord], radii: &[f64], h: f64) -> CountReport {
    let deltas = vec![0.1, 0.2];
    let axis_tol = 1e-9;
    let rows: Vec<CountRow> = radii
        .iter()
        .map(|&r| {
            let inside = zeros.iter().filter(|z| z.xi.norm() <= r);
            let (mut n_plus, mut n_minus, mut n_axis) = (0, 0, 0);
            let mut sector_exceptions = vec![0; deltas.len()];
            for z in inside {
                let m = z.multiplicity;
                if z.xi.re.abs() <= axis_tol * z.xi.norm().max(1.0) {
                    n_axis += m;
                } else if z.xi.re > 0.0 {
                    n_plus += m;
                } else {
                    n_minus += m;
                }
                let arg = z.xi.arg();
                let dist = (arg - std::f64::consts::FRAC_PI_2)
                    .abs()
                    .min((arg + std::f64::consts::FRAC_PI_2).abs());
                for (slot, d) in sector_exceptions.iter_mut().zip(&deltas) {
                    if dist >= *d {
                        *slot += m;
                    }
                }
            }
            let bound = 8.0 * h * r / std::f64::consts::PI;
            let limit = bound * (1.0 + COUNT_SLACK);
            CountRow {
                radius: r,
                n_plus,
                n_minus,
                n_axis,
                bound,
                sector_exceptions,
                pass: n_plus as f64 <= limit && n_minus as f64 <= limit,
            }
        })
        .collect();
    let monotone = rows
        .windows(2)
        .all(|w| w[1].radius < w[0].radius || (w[1].n_plus >= w[0].n_plus && w[1].n_minus >= w[0].n_minus));
    let pass = monotone && rows.iter().all(|r| r.pass);
    CountReport {
        convention: "z = i xi; N_+ counts Im z = Re xi > 0, N_- counts Re xi < 0".into(),
        deltas,
        rows,
        monotone,
        pass,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ForbiddenZero {
    pub xi_re: f64,
    pub xi_im: f64,
    /// `|xi| e^{-2 H |Re xi|}`.
    pub contribution: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ForbiddenDomainReport {
    pub c_fit: f64,
    /// Median contribution among zeros in the top quartile of `|Re xi|`.
    pub tail_median: f64,
    /// Whether `|Re xi|` spans at least a factor 4.
    pub spread_ok: bool,
    pub violations: Vec<ForbiddenZero>,
    pub pass: bool,
}

/// `C_fit = max |xi_n| e^{-2 H |Re xi_n|}` and tail outliers.
pub fn forbidden_domain_check(zeros: &[C64], h: f64) -> ForbiddenDomainReport {
    let contrib = |z: &C64| z.norm() * (-2.0 * h * z.re.abs()).exp();
    let c_fit = zeros.iter().map(contrib).fold(0.0, f64::max);
    let mut res: Vec<f64> = zeros.iter().map(|z| z.re.abs()).collect();
    res.sort_by(f64::total_cmp);
    let positive: Vec<f64> = res.iter().copied().filter(|v| *v > 0.0).collect();
    let spread_ok = match (positive.first(), positive.last()) {
        (Some(lo), Some(hi)) => hi / lo >= 4.0,
        _ => false,
    };
    let (tail_median, violations) = if zeros.is_empty() {
        (0.0, Vec::new())
    } else {
        let cut = res[(3 * res.len()) / 4];
        let tail: Vec<&C64> = zeros.iter().filter(|z| z.re.abs() >= cut).collect();
        let mut tc: Vec<f64> = tail.iter().map(|z| contrib(z)).collect();
        tc.sort_by(f64::total_cmp);
        let median = if tc.len() % 2 == 1 {
            tc[tc.len() / 2]
        } else {
            0.5 * (tc[tc.len() / 2 - 1] + tc[tc.len() / 2])
        };
        let v = tail
            .into_iter()
            .filter(|z| contrib(z) > 3.0 * median)
            .map(|z| ForbiddenZero {
                xi_re: z.re,
                xi_im: z.im,
                contribution: contrib(z),
            })
            .collect();
        (median, v)
    };
    ForbiddenDomainReport {
        c_fit,
        tail_median,
        spread_ok,
        pass: violations.is_empty(),
        violations,
    }
}
