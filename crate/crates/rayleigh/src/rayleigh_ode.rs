//! Displacement-frame Jost solutions, the traction functionals `a`, `b`, the
//! `theta`/`phi` split, the coefficients `d_1..d_4`, the Rayleigh determinant
//! on each sheet, and the entire function `F`.

use std::sync::Arc;

use nalgebra::Matrix2;

use crate::error::{Error, Result};
use crate::medium::{ElasticProfile, HalfSpaceConstants};
use crate::model::{column_condition, SpectralModel};
use crate::ode::{integrate, OdeOptions};
use crate::riemann::{
    physical_quasi_momenta, quasi_momenta, CutSide, QuasiMomenta, SheetTag, Sign, SpectralPoint,
    C64, I,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    P,
    S,
}

/// Displacement components with the traction functionals at one depth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisplacementState {
    pub phi1: C64,
    pub phi3: C64,
    pub b_val: C64,
    pub a_val: C64,
}

impl DisplacementState {
    fn to_array(self) -> [C64; 4] {
        [self.phi1, self.phi3, self.b_val, self.a_val]
    }

    fn from_array(y: [C64; 4]) -> Self {
        Self {
            phi1: y[0],
            phi3: y[1],
            b_val: y[2],
            a_val: y[3],
        }
    }

    fn combine(self, other: Self, alpha: C64, beta: C64) -> Self {
        Self {
            phi1: self.phi1 * alpha + other.phi1 * beta,
            phi3: self.phi3 * alpha + other.phi3 * beta,
            b_val: self.b_val * alpha + other.b_val * beta,
            a_val: self.a_val * alpha + other.a_val * beta,
        }
    }

    pub fn norm(&self) -> f64 {
        self.to_array().iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// Unperturbed Jost solution value and `Z`-derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnperturbedJost {
    pub value: [C64; 2],
    pub derivative: [C64; 2],
}

fn amplitude(xi: C64, q: C64, branch: Branch, sign: Sign, c: &HalfSpaceConstants) -> DisplacementState {
    let s = sign.value();
    let mu = c.mu_i;
    let rayleigh = I * (c.omega2() - 2.0 * mu * xi * xi);
    match branch {
        Branch::P => DisplacementState {
            phi1: xi,
            phi3: q * s,
            b_val: I * 2.0 * mu * xi * q * s,
            a_val: rayleigh,
        },
        Branch::S => DisplacementState {
            phi1: q * s,
            phi3: -xi,
            b_val: rayleigh,
            a_val: -I * 2.0 * mu * xi * q * s,
        },
    }
}

fn branch_q(q: &QuasiMomenta, branch: Branch) -> C64 {
    match branch {
        Branch::P => q.qp,
        Branch::S => q.qs,
    }
}

/// `f_{P,0}^±` or `f_{S,0}^±` at depth `Z` with its `Z`-derivative.
pub fn unperturbed_jost(
    z: f64,
    point: &SpectralPoint,
    branch: Branch,
    sign: Sign,
    constants: &HalfSpaceConstants,
) -> Result<UnperturbedJost> {
    let q = quasi_momenta(point, constants)?;
    let qb = branch_q(&q, branch);
    let amp = amplitude(point.xi, qb, branch, sign, constants);
    let k = I * qb * sign.value();
    let e = (k * z).exp();
    Ok(UnperturbedJost {
        value: [amp.phi1 * e, amp.phi3 * e],
        derivative: [amp.phi1 * e * k, amp.phi3 * e * k],
    })
}

/// The unperturbed state (values and tractions) at depth `Z`.
pub fn unperturbed_state(
    z: f64,
    xi: C64,
    q: &QuasiMomenta,
    branch: Branch,
    sign: Sign,
    constants: &HalfSpaceConstants,
) -> DisplacementState {
    let qb = branch_q(q, branch);
    let e = (I * qb * sign.value() * z).exp();
    let a = amplitude(xi, qb, branch, sign, constants);
    a.combine(a, e, C64::new(0.0, 0.0))
}

/// How Jost solutions are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum JostMethod {
    /// Closed form for homogeneous profiles, integration otherwise.
    #[default]
    Auto,
    Integrate,
}

/// Propagation settings.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PropagationOptions {
    pub method: JostMethod,
    pub ode: OdeOptions,
}

fn rhs(
    profile: &dyn ElasticProfile,
    xi: C64,
    shift: C64,
    z: f64,
    y: &[C64; 4],
) -> [C64; 4] {
    let c = profile.constants();
    let mu = profile.mu(z)[0];
    let la = profile.lambda(z)[0];
    let sigma = la + 2.0 * mu;
    let w2 = c.omega2();
    let xi2 = xi * xi;
    let [p1, p3, b, a] = *y;
    let d1 = b / mu - I * xi * p3;
    let d3 = (a - I * xi * la * p1) / sigma;
    let db = -I * xi * la * d3 + (xi2 * sigma - w2) * p1;
    let da = -I * xi * mu * d1 + (xi2 * mu - w2) * p3;
    [d1 - shift * p1, d3 - shift * p3, db - shift * b, da - shift * a]
}

/// Propagates the Jost solution `f^sign` of the given branch from `Z = -H` to
/// `Z = 0` and returns its state at the surface.
///
/// `q` are the quasi-momenta used for the initial data (any sheet).
pub fn propagate_state(
    profile: &dyn ElasticProfile,
    xi: C64,
    q: &QuasiMomenta,
    branch: Branch,
    sign: Sign,
    opts: &PropagationOptions,
) -> Result<DisplacementState> {
    let c = *profile.constants();
    let amp = amplitude(xi, branch_q(q, branch), branch, sign, &c);
    if opts.method == JostMethod::Auto && profile.is_homogeneous() {
        return Ok(amp);
    }
    // u = y exp(-i sign q Z) removes the leading exponential
    let shift = I * branch_q(q, branch) * sign.value();
    let y = integrate(
        |z, y: &[C64; 4]| rhs(profile, xi, shift, z, y),
        -c.h,
        amp.to_array(),
        0.0,
        &opts.ode,
    )?;
    Ok(DisplacementState::from_array(y))
}

/// Displacement values and tractions of the pair `(f_P^-, f_S^-)` at `Z = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JostFrame {
    pub value: Matrix2<C64>,
    pub tractions: Matrix2<C64>,
}

impl JostFrame {
    fn from_columns(p: &DisplacementState, s: &DisplacementState) -> Self {
        Self {
            value: Matrix2::new(p.phi1, s.phi1, p.phi3, s.phi3),
            tractions: Matrix2::new(p.a_val, s.a_val, p.b_val, s.b_val),
        }
    }

    pub fn determinant(&self) -> C64 {
        traction_det(&self.tractions)
    }
}

fn traction_det(m: &Matrix2<C64>) -> C64 {
    m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]
}

fn pair_det(p: &DisplacementState, s: &DisplacementState) -> C64 {
    p.a_val * s.b_val - s.a_val * p.b_val
}

/// The frame of `(f_P^-, f_S^-)` propagated with the point's sheet-consistent
/// quasi-momenta.
pub fn jost_frame(
    profile: &dyn ElasticProfile,
    point: &SpectralPoint,
    opts: &PropagationOptions,
) -> Result<JostFrame> {
    let q = quasi_momenta(point, profile.constants())?;
    let p = propagate_state(profile, point.xi, &q, Branch::P, Sign::Minus, opts)?;
    let s = propagate_state(profile, point.xi, &q, Branch::S, Sign::Minus, opts)?;
    Ok(JostFrame::from_columns(&p, &s))
}

/// The four Jost states `f_P^±`, `f_S^±` on the physical sheet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourColumns {
    pub q: QuasiMomenta,
    pub p_plus: DisplacementState,
    pub p_minus: DisplacementState,
    pub s_plus: DisplacementState,
    pub s_minus: DisplacementState,
}

impl FourColumns {
    pub fn compute(
        profile: &dyn ElasticProfile,
        xi: C64,
        side: CutSide,
        opts: &PropagationOptions,
    ) -> Result<Self> {
        let q = physical_quasi_momenta(xi, side, profile.constants())?;
        Ok(Self {
            q,
            p_plus: propagate_state(profile, xi, &q, Branch::P, Sign::Plus, opts)?,
            p_minus: propagate_state(profile, xi, &q, Branch::P, Sign::Minus, opts)?,
            s_plus: propagate_state(profile, xi, &q, Branch::S, Sign::Plus, opts)?,
            s_minus: propagate_state(profile, xi, &q, Branch::S, Sign::Minus, opts)?,
        })
    }

    /// `f^-` on the given sheet is the physical `f^{-sign}`.
    pub fn pair(&self, sheet: SheetTag) -> (&DisplacementState, &DisplacementState) {
        let p = match sheet.p {
            Sign::Plus => &self.p_minus,
            Sign::Minus => &self.p_plus,
        };
        let s = match sheet.s {
            Sign::Plus => &self.s_minus,
            Sign::Minus => &self.s_plus,
        };
        (p, s)
    }

    pub fn delta(&self, sheet: SheetTag) -> C64 {
        let (p, s) = self.pair(sheet);
        pair_det(p, s)
    }

    pub fn deltas(&self) -> [C64; 4] {
        SheetTag::ALL.map(|t| self.delta(t))
    }
}

/// `theta = (f^+ + f^-)/2` and `phi = (f^+ - f^-)/(2q)` for both branches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaPhi {
    pub q: QuasiMomenta,
    pub theta_p: DisplacementState,
    pub phi_p: DisplacementState,
    pub theta_s: DisplacementState,
    pub phi_s: DisplacementState,
}

/// Smallest `|q|` for which `phi` is formed by division.
pub const PHI_MIN_Q: f64 = 1e-8;

impl ThetaPhi {
    pub fn from_columns(cols: &FourColumns) -> Result<Self> {
        let q = cols.q;
        let qmin = q.qp.norm().min(q.qs.norm());
        if qmin < PHI_MIN_Q {
            return Err(Error::NearBranchPoint(qmin));
        }
        let half = C64::new(0.5, 0.0);
        Ok(Self {
            q,
            theta_p: cols.p_plus.combine(cols.p_minus, half, half),
            phi_p: cols.p_plus.combine(cols.p_minus, half / q.qp, -half / q.qp),
            theta_s: cols.s_plus.combine(cols.s_minus, half, half),
            phi_s: cols.s_plus.combine(cols.s_minus, half / q.qs, -half / q.qs),
        })
    }

    pub fn d_coefficients(&self) -> [C64; 4] {
        let (tp, fp, ts, fs) = (&self.theta_p, &self.phi_p, &self.theta_s, &self.phi_s);
        [
            pair_det(tp, ts),
            -pair_det(fp, ts),
            -pair_det(tp, fs),
            pair_det(fp, fs),
        ]
    }
}

pub fn theta_phi(
    profile: &dyn ElasticProfile,
    xi: C64,
    opts: &PropagationOptions,
) -> Result<ThetaPhi> {
    ThetaPhi::from_columns(&FourColumns::compute(profile, xi, CutSide::Below, opts)?)
}

pub fn d_coefficients(
    profile: &dyn ElasticProfile,
    xi: C64,
    opts: &PropagationOptions,
) -> Result<[C64; 4]> {
    Ok(theta_phi(profile, xi, opts)?.d_coefficients())
}

/// `d_1 + s_P q_P d_2 + s_S q_S d_3 + s_P s_S q_P q_S d_4`, with `q` the
/// physical-sheet values.
pub fn delta_from_d(d: &[C64; 4], q: &QuasiMomenta, sheet: SheetTag) -> C64 {
    let sp = sheet.p.value();
    let ss = sheet.s.value();
    d[0] + q.qp * d[1] * sp + q.qs * d[2] * ss + q.qp * q.qs * d[3] * (sp * ss)
}

/// Product of the four sheet determinants written as a polynomial in
/// `d_i`, `q_P^2`, `q_S^2`.
pub fn f_from_d(d: &[C64; 4], q: &QuasiMomenta) -> C64 {
    let qp2 = q.qp * q.qp;
    let qs2 = q.qs * q.qs;
    let [d1, d2, d3, d4] = *d;
    let even = d1 * d1 + qs2 * d3 * d3 - qp2 * d2 * d2 - qp2 * qs2 * d4 * d4;
    let odd = d1 * d3 - qp2 * d2 * d4;
    even * even - qs2 * odd * odd * 4.0
}

/// Rayleigh determinant at a point of the surface.
pub fn rayleigh_determinant(
    profile: &dyn ElasticProfile,
    point: &SpectralPoint,
    opts: &PropagationOptions,
) -> Result<C64> {
    Ok(jost_frame(profile, point, opts)?.determinant())
}

/// `d_i`, the four sheet determinants and `F` at one `xi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeterminantBundle {
    pub d: [C64; 4],
    pub q: QuasiMomenta,
    /// Indexed like [`SheetTag::ALL`].
    pub delta_by_sheet: [C64; 4],
    pub f: C64,
}

pub fn determinant_bundle(
    profile: &dyn ElasticProfile,
    xi: C64,
    opts: &PropagationOptions,
) -> Result<DeterminantBundle> {
    let cols = FourColumns::compute(profile, xi, CutSide::Below, opts)?;
    let tp = ThetaPhi::from_columns(&cols)?;
    let d = tp.d_coefficients();
    Ok(DeterminantBundle {
        d,
        q: cols.q,
        delta_by_sheet: cols.deltas(),
        f: f_from_d(&d, &cols.q),
    })
}

/// `F(xi)` from the polynomial in `d_i`; at and near branch points it is
/// extrapolated quadratically from three nearby points.
pub fn entire_f(profile: &dyn ElasticProfile, xi: C64, opts: &PropagationOptions) -> Result<C64> {
    match determinant_bundle(profile, xi, opts) {
        Ok(b) => Ok(b.f),
        Err(Error::BranchPoint(_)) | Err(Error::NearBranchPoint(_)) => {
            let (_, rm) = profile.constants().branch_radii();
            let step = I * (1e-5 * rm);
            let mut v = [C64::new(0.0, 0.0); 3];
            for (k, slot) in v.iter_mut().enumerate() {
                *slot = determinant_bundle(profile, xi + step * (k as f64 + 1.0), opts)?.f;
            }
            Ok(v[0] * 3.0 - v[1] * 3.0 + v[2])
        }
        Err(e) => Err(e),
    }
}

/// `F(xi)` as the direct product of the four sheet determinants.
pub fn entire_f_product(
    profile: &dyn ElasticProfile,
    xi: C64,
    opts: &PropagationOptions,
) -> Result<C64> {
    let cols = FourColumns::compute(profile, xi, CutSide::Below, opts)?;
    Ok(cols.deltas().iter().product())
}

/// The homogeneous closed form `-(w^2 - 2 mu xi^2)^2 - 4 mu^2 xi^2 q_P q_S`.
pub fn homogeneous_delta(xi: C64, q: &QuasiMomenta, c: &HalfSpaceConstants) -> C64 {
    let r = c.omega2() - 2.0 * c.mu_i * xi * xi;
    -(r * r) - xi * xi * q.qp * q.qs * (4.0 * c.mu_i * c.mu_i)
}

/// Displacement-frame model of a profile.
#[derive(Debug, Clone)]
pub struct DisplacementModel {
    pub profile: Arc<dyn ElasticProfile>,
    pub options: PropagationOptions,
}

impl DisplacementModel {
    pub fn new(profile: Arc<dyn ElasticProfile>) -> Self {
        Self {
            profile,
            options: PropagationOptions::default(),
        }
    }

    pub fn with_options(mut self, options: PropagationOptions) -> Self {
        self.options = options;
        self
    }
}

impl SpectralModel for DisplacementModel {
    fn constants(&self) -> &HalfSpaceConstants {
        self.profile.constants()
    }

    fn delta(&self, point: &SpectralPoint) -> Result<C64> {
        rayleigh_determinant(self.profile.as_ref(), point, &self.options)
    }

    fn deltas(&self, xi: C64, side: CutSide) -> Result<[C64; 4]> {
        Ok(FourColumns::compute(self.profile.as_ref(), xi, side, &self.options)?.deltas())
    }

    fn deltas_conditioned(&self, xi: C64, side: CutSide) -> Result<[(C64, f64); 4]> {
        let cols = FourColumns::compute(self.profile.as_ref(), xi, side, &self.options)?;
        Ok(SheetTag::ALL.map(|t| {
            let (p, s) = cols.pair(t);
            let m = Matrix2::new(p.a_val, s.a_val, p.b_val, s.b_val);
            (pair_det(p, s), column_condition(&m))
        }))
    }
}
