//! Elastic half-space data: deep-medium constants, depth profiles of the
//! Lamé parameters, the transform constants `G^H` and the perturbation
//! potential `V`.

use std::fmt;
use std::sync::Arc;

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Density-normalized constants of the homogeneous medium below `Z = -H`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfSpaceConstants {
    #[serde(rename = "mu_I")]
    pub mu_i: f64,
    #[serde(rename = "lambda_I")]
    pub lambda_i: f64,
    pub omega: f64,
    #[serde(rename = "H")]
    pub h: f64,
}

impl HalfSpaceConstants {
    pub fn new(mu_i: f64, lambda_i: f64, omega: f64, h: f64) -> Result<Self> {
        let c = Self {
            mu_i,
            lambda_i,
            omega,
            h,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.mu_i, self.lambda_i, self.omega, self.h];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConstants("non-finite value".into()));
        }
        if self.mu_i <= 0.0 {
            return Err(Error::InvalidConstants(format!(
                "mu_I must be positive, got {}",
                self.mu_i
            )));
        }
        if self.lambda_i + self.mu_i <= 0.0 {
            return Err(Error::InvalidConstants(format!(
                "lambda_I + mu_I must be positive, got {}",
                self.lambda_i + self.mu_i
            )));
        }
        if self.omega <= 0.0 {
            return Err(Error::InvalidConstants(format!(
                "omega must be positive, got {}",
                self.omega
            )));
        }
        if self.h <= 0.0 {
            return Err(Error::InvalidConstants(format!(
                "H must be positive, got {}",
                self.h
            )));
        }
        Ok(())
    }

    /// `lambda_I + 2 mu_I`.
    pub fn sigma_i(&self) -> f64 {
        self.lambda_i + 2.0 * self.mu_i
    }

    /// `(lambda_I + mu_I) / (lambda_I + 2 mu_I)`.
    pub fn c_i(&self) -> f64 {
        (self.lambda_i + self.mu_i) / self.sigma_i()
    }

    /// `(lambda_I + 3 mu_I) / (lambda_I + 2 mu_I)`.
    pub fn rho(&self) -> f64 {
        (self.lambda_i + 3.0 * self.mu_i) / self.sigma_i()
    }

    pub fn omega2(&self) -> f64 {
        self.omega * self.omega
    }

    /// `(r_plus, r_minus)`, the P and S branch radii.
    pub fn branch_radii(&self) -> (f64, f64) {
        (
            self.omega / self.sigma_i().sqrt(),
            self.omega / self.mu_i.sqrt(),
        )
    }
}

/// Free-function form of [`HalfSpaceConstants::branch_radii`].
pub fn branch_radii(constants: &HalfSpaceConstants) -> (f64, f64) {
    constants.branch_radii()
}

/// A depth profile of the density-normalized Lamé parameters.
///
/// Both callables return `[value, d/dZ, d²/dZ²]` and are defined for all `Z`;
/// only `Z <= 0` is physical.
pub trait ElasticProfile: Send + Sync + fmt::Debug {
    fn constants(&self) -> &HalfSpaceConstants;
    fn mu(&self, z: f64) -> [f64; 3];
    fn lambda(&self, z: f64) -> [f64; 3];

    /// True when the medium is known to be homogeneous everywhere, so the
    /// Jost solutions are available in closed form.
    fn is_homogeneous(&self) -> bool {
        false
    }
}

/// The homogeneous half-space.
#[derive(Debug, Clone)]
pub struct ConstantProfile {
    constants: HalfSpaceConstants,
}

impl ConstantProfile {
    pub fn new(constants: HalfSpaceConstants) -> Self {
        Self { constants }
    }
}

impl ElasticProfile for ConstantProfile {
    fn constants(&self) -> &HalfSpaceConstants {
        &self.constants
    }
    fn mu(&self, _z: f64) -> [f64; 3] {
        [self.constants.mu_i, 0.0, 0.0]
    }
    fn lambda(&self, _z: f64) -> [f64; 3] {
        [self.constants.lambda_i, 0.0, 0.0]
    }
    fn is_homogeneous(&self) -> bool {
        true
    }
}

/// `mu(Z) = mu_I + a (Z + H)^p` above `-H`, likewise for lambda.
#[derive(Debug, Clone)]
pub struct PolynomialBumpProfile {
    constants: HalfSpaceConstants,
    pub mu_amplitude: f64,
    pub lambda_amplitude: f64,
    pub power: i32,
}

impl PolynomialBumpProfile {
    pub fn new(
        constants: HalfSpaceConstants,
        mu_amplitude: f64,
        lambda_amplitude: f64,
        power: i32,
    ) -> Result<Self> {
        if power < 2 {
            return Err(Error::InvalidProfile(format!(
                "polynomial-bump power must be >= 2, got {power}"
            )));
        }
        Ok(Self {
            constants,
            mu_amplitude,
            lambda_amplitude,
            power,
        })
    }

    fn bump(&self, z: f64, base: f64, amp: f64) -> [f64; 3] {
        let s = z + self.constants.h;
        if s <= 0.0 {
            return [base, 0.0, 0.0];
        }
        let p = self.power;
        let pf = p as f64;
        [
            base + amp * s.powi(p),
            amp * pf * s.powi(p - 1),
            amp * pf * (pf - 1.0) * s.powi(p - 2),
        ]
    }
}

impl ElasticProfile for PolynomialBumpProfile {
    fn constants(&self) -> &HalfSpaceConstants {
        &self.constants
    }
    fn mu(&self, z: f64) -> [f64; 3] {
        self.bump(z, self.constants.mu_i, self.mu_amplitude)
    }
    fn lambda(&self, z: f64) -> [f64; 3] {
        self.bump(z, self.constants.lambda_i, self.lambda_amplitude)
    }
}

/// Cubic spline with zero slope at the first knot and a natural right end.
#[derive(Debug, Clone)]
struct ClampedSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl ClampedSpline {
    fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n < 3 || y.len() != n {
            return Err(Error::InvalidProfile(
                "spline table needs at least 3 points of matching length".into(),
            ));
        }
        if x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidProfile(
                "spline abscissae must be strictly increasing".into(),
            ));
        }
        let last = n - 1;
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        // tridiagonal system for the second derivatives, M[last] = 0
        let mut sub = vec![0.0; last];
        let mut diag = vec![0.0; last];
        let mut sup = vec![0.0; last];
        let mut rhs = vec![0.0; last];
        diag[0] = 2.0 * h[0];
        sup[0] = h[0];
        rhs[0] = 6.0 * (y[1] - y[0]) / h[0];
        for i in 1..last {
            sub[i] = h[i - 1];
            diag[i] = 2.0 * (h[i - 1] + h[i]);
            if i + 1 < last {
                sup[i] = h[i];
            }
            rhs[i] = 6.0 * ((y[i + 1] - y[i]) / h[i] - (y[i] - y[i - 1]) / h[i - 1]);
        }
        for i in 1..last {
            let w = sub[i] / diag[i - 1];
            diag[i] -= w * sup[i - 1];
            rhs[i] -= w * rhs[i - 1];
        }
        let mut m = vec![0.0; n];
        m[last - 1] = rhs[last - 1] / diag[last - 1];
        for i in (0..last - 1).rev() {
            m[i] = (rhs[i] - sup[i] * m[i + 1]) / diag[i];
        }
        Ok(Self { x, y, m })
    }

    fn eval(&self, t: f64) -> [f64; 3] {
        let n = self.x.len();
        let i = match self.x.partition_point(|&v| v <= t) {
            0 => 0,
            k if k >= n => n - 2,
            k => k - 1,
        };
        let (x0, x1) = (self.x[i], self.x[i + 1]);
        let h = x1 - x0;
        let (m0, m1) = (self.m[i], self.m[i + 1]);
        let (y0, y1) = (self.y[i], self.y[i + 1]);
        let a = x1 - t;
        let b = t - x0;
        let c0 = y0 / h - m0 * h / 6.0;
        let c1 = y1 / h - m1 * h / 6.0;
        [
            m0 * a.powi(3) / (6.0 * h) + m1 * b.powi(3) / (6.0 * h) + c0 * a + c1 * b,
            -m0 * a * a / (2.0 * h) + m1 * b * b / (2.0 * h) - c0 + c1,
            m0 * a / h + m1 * b / h,
        ]
    }
}

/// Tabulated profile on `[-H, 0]`, interpolated by cubic splines that leave
/// `-H` with zero slope.
#[derive(Debug, Clone)]
pub struct SplineProfile {
    constants: HalfSpaceConstants,
    mu: ClampedSpline,
    lambda: ClampedSpline,
}

impl SplineProfile {
    /// `z` must start at `-H` and end at `0`; the first values must equal the
    /// deep-medium constants.
    pub fn new(
        constants: HalfSpaceConstants,
        z: Vec<f64>,
        mu: Vec<f64>,
        lambda: Vec<f64>,
    ) -> Result<Self> {
        let first = *z.first().ok_or_else(|| Error::InvalidProfile("empty table".into()))?;
        let last = *z.last().unwrap_or(&first);
        if (first + constants.h).abs() > 1e-12 * constants.h || last.abs() > 1e-12 {
            return Err(Error::InvalidProfile(format!(
                "table must span [-H, 0], got [{first}, {last}]"
            )));
        }
        if (mu[0] - constants.mu_i).abs() > 1e-12 * constants.mu_i.abs()
            || (lambda[0] - constants.lambda_i).abs() > 1e-12 * constants.lambda_i.abs().max(1.0)
        {
            return Err(Error::InvalidProfile(
                "table values at -H must equal mu_I and lambda_I".into(),
            ));
        }
        Ok(Self {
            constants,
            mu: ClampedSpline::new(z.clone(), mu)?,
            lambda: ClampedSpline::new(z, lambda)?,
        })
    }
}

impl ElasticProfile for SplineProfile {
    fn constants(&self) -> &HalfSpaceConstants {
        &self.constants
    }
    fn mu(&self, z: f64) -> [f64; 3] {
        if z <= -self.constants.h {
            [self.constants.mu_i, 0.0, 0.0]
        } else {
            self.mu.eval(z)
        }
    }
    fn lambda(&self, z: f64) -> [f64; 3] {
        if z <= -self.constants.h {
            [self.constants.lambda_i, 0.0, 0.0]
        } else {
            self.lambda.eval(z)
        }
    }
}

type ProfileFn = Arc<dyn Fn(f64) -> [f64; 3] + Send + Sync>;

/// A profile given by arbitrary closures.
#[derive(Clone)]
pub struct FnProfile {
    constants: HalfSpaceConstants,
    mu: ProfileFn,
    lambda: ProfileFn,
}

impl FnProfile {
    pub fn new(
        constants: HalfSpaceConstants,
        mu: impl Fn(f64) -> [f64; 3] + Send + Sync + 'static,
        lambda: impl Fn(f64) -> [f64; 3] + Send + Sync + 'static,
    ) -> Self {
        Self {
            constants,
            mu: Arc::new(mu),
            lambda: Arc::new(lambda),
        }
    }
}

impl fmt::Debug for FnProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnProfile")
            .field("constants", &self.constants)
            .finish_non_exhaustive()
    }
}

impl ElasticProfile for FnProfile {
    fn constants(&self) -> &HalfSpaceConstants {
        &self.constants
    }
    fn mu(&self, z: f64) -> [f64; 3] {
        (self.mu)(z)
    }
    fn lambda(&self, z: f64) -> [f64; 3] {
        (self.lambda)(z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Issue {
    pub severity: Severity,
    pub message: String,
}

/// Violated invariants; no errors means valid.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.issues.iter().all(|i| i.severity != Severity::Error)
    }

    pub fn errors(&self) -> impl Iterator<Item = &Issue> {
        self.issues.iter().filter(|i| i.severity == Severity::Error)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &Issue> {
        self.issues.iter().filter(|i| i.severity == Severity::Warning)
    }

    fn error(&mut self, message: String) {
        self.issues.push(Issue {
            severity: Severity::Error,
            message,
        });
    }

    fn warning(&mut self, message: String) {
        self.issues.push(Issue {
            severity: Severity::Warning,
            message,
        });
    }
}

const PROFILE_SAMPLES: usize = 201;

fn check_finite(z: f64, v: &[f64; 3]) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFiniteProfile { depth: z })
    }
}

/// Checks homogeneity below `-H`, positivity on `[-H, 0]`, and consistency of
/// the supplied derivatives with central differences.
pub fn validate_profile(profile: &dyn ElasticProfile) -> Result<ValidationReport> {
    let c = *profile.constants();
    let mut report = ValidationReport::default();
    if let Err(e) = c.validate() {
        report.error(e.to_string());
        return Ok(report);
    }
    let h = c.h;

    let mut deep_ok = true;
    for k in 0..PROFILE_SAMPLES {
        let z = -h - 1.0 + k as f64 / (PROFILE_SAMPLES - 1) as f64;
        let mu = profile.mu(z);
        let la = profile.lambda(z);
        check_finite(z, &mu)?;
        check_finite(z, &la)?;
        let tol = 1e-12 * (c.mu_i.abs() + c.lambda_i.abs());
        if deep_ok && ((mu[0] - c.mu_i).abs() > tol || (la[0] - c.lambda_i).abs() > tol) {
            report.error(format!("not homogeneous below -H (Z = {z})"));
            deep_ok = false;
        }
    }

    let mut positivity_ok = true;
    let mut derivative_ok = true;
    let step = 1e-5;
    for k in 0..PROFILE_SAMPLES {
        let z = -h + h * k as f64 / (PROFILE_SAMPLES - 1) as f64;
        let mu = profile.mu(z);
        let la = profile.lambda(z);
        check_finite(z, &mu)?;
        check_finite(z, &la)?;
        if positivity_ok && (mu[0] <= 0.0 || la[0] + 2.0 * mu[0] <= 0.0) {
            report.error(format!("mu > 0 and lambda + 2 mu > 0 violated at Z = {z}"));
            positivity_ok = false;
        }
        // skip the knot at -H where the one-sided curvature may jump
        if derivative_ok && k > 0 {
            for (name, f) in [("mu", 0usize), ("lambda", 1usize)] {
                let eval = |t: f64| {
                    if f == 0 {
                        profile.mu(t)
                    } else {
                        profile.lambda(t)
                    }
                };
                let v = eval(z);
                let (p, m) = (eval(z + step), eval(z - step));
                let d1 = (p[0] - m[0]) / (2.0 * step);
                let d2 = (p[1] - m[1]) / (2.0 * step);
                let s1 = v[1].abs().max(v[0].abs()).max(1e-300);
                let s2 = v[2].abs().max(v[1].abs()).max(v[0].abs()).max(1e-300);
                if (d1 - v[1]).abs() > 1e-6 * s1 || (d2 - v[2]).abs() > 1e-6 * s2 {
                    report.error(format!(
                        "supplied derivatives of {name} inconsistent with finite differences at Z = {z}"
                    ));
                    derivative_ok = false;
                }
            }
        }
    }

    // curvature continuity at -H is only a warning
    let above = (profile.mu(-h + 1e-9)[2], profile.lambda(-h + 1e-9)[2]);
    if above.0.abs() > 1e-6 || above.1.abs() > 1e-6 {
        report.warning(format!(
            "second derivative jumps at Z = -H (mu'' = {:.3e}, lambda'' = {:.3e})",
            above.0, above.1
        ));
    }
    Ok(report)
}

/// Surface values entering the transformed boundary condition.
///
/// Derivatives are taken with respect to `x = -Z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryValues {
    pub mu0: f64,
    pub dmu0: f64,
    pub lambda0: f64,
    /// `(1/mu)''(0)`.
    pub inv_mu_dd0: f64,
}

impl BoundaryValues {
    pub fn from_profile(profile: &dyn ElasticProfile) -> Self {
        let [m, mz, mzz] = profile.mu(0.0);
        let la = profile.lambda(0.0)[0];
        let mx = -mz;
        Self {
            mu0: m,
            dmu0: mx,
            lambda0: la,
            inv_mu_dd0: (2.0 * mx * mx - m * mzz) / (m * m * m),
        }
    }

    /// `c(0) = (lambda(0) + mu(0)) / (lambda(0) + 2 mu(0))`.
    pub fn c0(&self) -> f64 {
        (self.lambda0 + self.mu0) / (self.lambda0 + 2.0 * self.mu0)
    }
}

/// The unimodular matrix `G^H` with the derived deep-medium constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransformData {
    pub g11h: f64,
    pub g12h: f64,
    pub g21h: f64,
    pub g22h: f64,
    c_i: f64,
    sigma_i: f64,
    rho: f64,
    h: f64,
}

impl TransformData {
    pub fn new(g: [f64; 4], constants: &HalfSpaceConstants) -> Result<Self> {
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidTransform("non-finite entry".into()));
        }
        let det = g[0] * g[3] - g[1] * g[2];
        if (det - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidTransform(format!(
                "unimodularity violated: det G^H = {det}"
            )));
        }
        Ok(Self {
            g11h: g[0],
            g12h: g[1],
            g21h: g[2],
            g22h: g[3],
            c_i: constants.c_i(),
            sigma_i: constants.sigma_i(),
            rho: constants.rho(),
            h: constants.h,
        })
    }

    pub fn identity(constants: &HalfSpaceConstants) -> Self {
        Self::new([1.0, 0.0, 0.0, 1.0], constants).expect("identity is unimodular")
    }

    /// The choice with `G(0) = I`, i.e. `G21H = -c_I H / 2`.
    pub fn surface_identity(constants: &HalfSpaceConstants) -> Self {
        let g21 = -constants.c_i() * constants.h / 2.0;
        Self::new([1.0, 0.0, g21, 1.0], constants).expect("unit lower triangular")
    }

    pub fn c_i(&self) -> f64 {
        self.c_i
    }
    pub fn sigma_i(&self) -> f64 {
        self.sigma_i
    }
    pub fn rho(&self) -> f64 {
        self.rho
    }
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn det(&self) -> f64 {
        self.g11h * self.g22h - self.g12h * self.g21h
    }

    pub fn g21(&self, x: f64) -> f64 {
        -self.c_i / 2.0 * self.g11h * (x - self.h) + self.g21h
    }

    pub fn g22(&self, x: f64) -> f64 {
        -self.c_i / 2.0 * self.g12h * (x - self.h) + self.g22h
    }
}

type PotentialFn = Arc<dyn Fn(f64) -> [[f64; 2]; 2] + Send + Sync>;

/// Shapes of the perturbation potential on `[0, H]`.
#[derive(Clone)]
pub enum PotentialShape {
    Zero,
    /// `amp * 4 (x - start)(H - x) / (H - start)^2` on `[start, H]`.
    Bump {
        start: f64,
        amplitude: [[f64; 2]; 2],
    },
    /// Componentwise polynomial in `x` on `[0, H)`, coefficients in
    /// increasing degree.
    Polynomial { coefficients: [[Vec<f64>; 2]; 2] },
    Custom(PotentialFn),
}

impl fmt::Debug for PotentialShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Zero => write!(f, "Zero"),
            Self::Bump { start, amplitude } => f
                .debug_struct("Bump")
                .field("start", start)
                .field("amplitude", amplitude)
                .finish(),
            Self::Polynomial { coefficients } => f
                .debug_struct("Polynomial")
                .field("coefficients", coefficients)
                .finish(),
            Self::Custom(_) => write!(f, "Custom"),
        }
    }
}

/// A potential supported in `[0, H]`.
#[derive(Debug, Clone)]
pub struct PotentialSpec {
    pub shape: PotentialShape,
    pub h: f64,
    /// Length of the tail `(H - epsilon H, H)` used for the genericity check,
    /// as a fraction of `H`.
    pub epsilon: f64,
}

impl PotentialSpec {
    pub fn zero(h: f64) -> Self {
        Self {
            shape: PotentialShape::Zero,
            h,
            epsilon: 0.1,
        }
    }

    pub fn bump(h: f64, start: f64, amplitude: [[f64; 2]; 2]) -> Result<Self> {
        if !(0.0..h).contains(&start) {
            return Err(Error::InvalidPotential(format!(
                "bump start {start} outside [0, H)"
            )));
        }
        Ok(Self {
            shape: PotentialShape::Bump { start, amplitude },
            h,
            epsilon: 0.1,
        })
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.shape, PotentialShape::Zero)
    }

    pub fn components(&self, x: f64) -> [[f64; 2]; 2] {
        if x >= self.h || x < 0.0 {
            return [[0.0; 2]; 2];
        }
        match &self.shape {
            PotentialShape::Zero => [[0.0; 2]; 2],
            PotentialShape::Bump { start, amplitude } => {
                if x <= *start {
                    return [[0.0; 2]; 2];
                }
                let w = 4.0 * (x - start) * (self.h - x) / (self.h - start).powi(2);
                amplitude.map(|row| row.map(|a| a * w))
            }
            PotentialShape::Polynomial { coefficients } => coefficients
                .clone()
                .map(|row| row.map(|c| c.iter().rev().fold(0.0, |acc, &a| acc * x + a))),
            PotentialShape::Custom(f) => f(x),
        }
    }

    pub fn value(&self, x: f64) -> Matrix2<f64> {
        let v = self.components(x);
        Matrix2::new(v[0][0], v[0][1], v[1][0], v[1][1])
    }

    /// `int_0^H |V(x)|_max dx` by the midpoint rule.
    pub fn l1_norm(&self) -> f64 {
        let n = 2000;
        let dx = self.h / n as f64;
        (0..n)
            .map(|k| {
                let v = self.value((k as f64 + 0.5) * dx);
                v.iter().fold(0.0f64, |m, a| m.max(a.abs()))
            })
            .sum::<f64>()
            * dx
    }
}

/// Checks support, continuity at `H` and, when `generic`, that every component
/// is nonzero with a fixed sign on `(H - epsilon H, H)`.
pub fn validate_potential(spec: &PotentialSpec, generic: bool) -> Result<ValidationReport> {
    let mut report = ValidationReport::default();
    if !(spec.h > 0.0) || !(spec.epsilon > 0.0 && spec.epsilon <= 1.0) {
        report.error(format!(
            "support bound and tail fraction must be positive (H = {}, epsilon = {})",
            spec.h, spec.epsilon
        ));
        return Ok(report);
    }
    let h = spec.h;
    for k in 0..=200 {
        let x = h + 2.0 * h * k as f64 / 200.0;
        let v = spec.components(x);
        if v.iter().flatten().any(|a| !a.is_finite()) {
            return Err(Error::InvalidPotential(format!("non-finite value at x = {x}")));
        }
        if v.iter().flatten().any(|&a| a != 0.0) {
            report.error(format!("V nonzero beyond H at x = {x}"));
            break;
        }
    }
    let mut scale = 0.0f64;
    for k in 0..=400 {
        let x = h * k as f64 / 400.0;
        let v = spec.components(x.min(h * (1.0 - 1e-15)));
        if v.iter().flatten().any(|a| !a.is_finite()) {
            return Err(Error::InvalidPotential(format!("non-finite value at x = {x}")));
        }
        scale = v.iter().flatten().fold(scale, |m, a| m.max(a.abs()));
    }
    let edge = spec.components(h * (1.0 - 1e-9));
    if edge.iter().flatten().any(|a| a.abs() > 1e-6 * scale.max(1e-300)) {
        report.warning("V does not vanish continuously at x = H".into());
    }
    if generic {
        let tail = spec.epsilon * h;
        for i in 0..2 {
            for j in 0..2 {
                let samples: Vec<f64> = (1..50)
                    .map(|k| spec.components(h - tail * k as f64 / 50.0)[i][j])
                    .collect();
                let pos = samples.iter().all(|&a| a > 0.0);
                let neg = samples.iter().all(|&a| a < 0.0);
                if !(pos || neg) {
                    report.error(format!(
                        "V{}{} is not sign-definite and nonzero near H",
                        i + 1,
                        j + 1
                    ));
                }
            }
        }
    }
    Ok(report)
}
