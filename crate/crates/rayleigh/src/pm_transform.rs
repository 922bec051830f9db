//! The transformed (matrix Schrodinger) frame: `Theta`, the background
//! potential, the Green kernel, Volterra solution of the Jost system, the
//! Jost function `F_Theta` and the bridge to the traction matrix.

use nalgebra::{Matrix2, Matrix4, Vector2, Vector4};

use crate::error::{Error, Result};
use crate::medium::{BoundaryValues, HalfSpaceConstants, PotentialSpec, TransformData};
use crate::model::{column_condition, SpectralModel};
use crate::ode::{integrate, OdeOptions};
use crate::quadrature::Rule;
use crate::riemann::{quasi_momenta, CutSide, QuasiMomenta, SheetTag, SpectralPoint, C64, I};

type M2 = Matrix2<C64>;
type V2 = Vector2<C64>;

fn cplx(m: &Matrix2<f64>) -> M2 {
    m.map(|v| C64::new(v, 0.0))
}

const ZERO: C64 = C64::new(0.0, 0.0);

/// Coefficients of the Robin matrix `Theta(xi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaMatrix {
    pub theta1: f64,
    pub theta2: f64,
    pub theta3: f64,
    /// `2 mu_I / mu(0)`.
    pub xi2_coefficient: f64,
}

impl ThetaMatrix {
    pub fn new(boundary: &BoundaryValues, constants: &HalfSpaceConstants) -> Self {
        let m0 = boundary.mu0;
        let mi = constants.mu_i;
        Self {
            theta1: mi / m0 * (constants.omega2() / m0 + m0 * boundary.inv_mu_dd0),
            theta2: m0 * m0 / (2.0 * mi * (boundary.lambda0 + 2.0 * m0)),
            theta3: boundary.dmu0 / m0,
            xi2_coefficient: 2.0 * mi / m0,
        }
    }

    pub fn matrix(&self, xi: C64) -> M2 {
        M2::new(
            C64::new(-self.theta3, 0.0),
            C64::new(self.theta2, 0.0),
            xi * xi * self.xi2_coefficient - self.theta1,
            ZERO,
        )
    }
}

/// `Q_0(x)` for `x >= 0`.
pub fn background_potential(x: f64, td: &TransformData, constants: &HalfSpaceConstants) -> Matrix2<f64> {
    let w2 = constants.omega2();
    let pref = w2 * (constants.lambda_i + constants.mu_i) / (constants.mu_i * constants.sigma_i());
    let (g11, g12) = (td.g11h, td.g12h);
    let (g21, g22) = (td.g21(x), td.g22(x));
    Matrix2::new(-w2 / constants.mu_i, 0.0, 0.0, -w2 / constants.sigma_i())
        + Matrix2::new(-g12 * g21, g21 * g11, -g12 * g22, g12 * g21) * pref
}

/// The polynomial matrices `A(x)`, `B(y)` and the constant `C` of the Green
/// kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreenKernelParts {
    td: TransformData,
    mu_i: f64,
}

impl GreenKernelParts {
    pub fn new(td: &TransformData, constants: &HalfSpaceConstants) -> Self {
        Self {
            td: *td,
            mu_i: constants.mu_i,
        }
    }

    pub fn a(&self, x: f64) -> Matrix2<f64> {
        let t = &self.td;
        let (g21, g22) = (t.g21(x), t.g22(x));
        Matrix2::new(-t.g12h * g21, t.g11h * g21, -t.g12h * g22, t.g11h * g22)
    }

    /// `dA/dx`.
    pub fn a_prime(&self) -> Matrix2<f64> {
        let t = &self.td;
        let k = t.c_i() / 2.0;
        Matrix2::new(
            k * t.g12h * t.g11h,
            -k * t.g11h * t.g11h,
            k * t.g12h * t.g12h,
            -k * t.g11h * t.g12h,
        )
    }

    pub fn b(&self, y: f64) -> Matrix2<f64> {
        let t = &self.td;
        let (g21, g22) = (t.g21(y), t.g22(y));
        Matrix2::new(t.g11h * g22, -t.g11h * g21, t.g12h * g22, -t.g12h * g21)
    }

    pub fn c(&self) -> Matrix2<f64> {
        let t = &self.td;
        let m = self.mu_i;
        Matrix2::new(
            m * t.g12h * t.g11h,
            -m * t.g11h * t.g11h,
            m * t.g12h * t.g12h,
            -m * t.g12h * t.g11h,
        )
    }

    /// `A(x) + B(y) + c_I (y - x) / (2 mu_I) C`, which is the identity.
    pub fn identity_residual(&self, x: f64, y: f64) -> Matrix2<f64> {
        self.a(x) + self.b(y) + self.c() * (self.td.c_i() * (y - x) / (2.0 * self.mu_i))
    }
}

/// `sin(z q) / q`, by its series when `q z` is tiny.
fn sinc_q(z: f64, q: C64) -> C64 {
    let t = q * z;
    if t.norm() < 1e-4 {
        let t2 = t * t;
        z * (C64::new(1.0, 0.0) - t2 / 6.0 + t2 * t2 / 120.0)
    } else {
        t.sin() / q
    }
}

/// `G(x, y)` for `0 <= x <= y`, with the quasi-momenta of the point's sheet.
pub fn green_kernel(
    x: f64,
    y: f64,
    q: &QuasiMomenta,
    td: &TransformData,
    constants: &HalfSpaceConstants,
) -> M2 {
    let parts = GreenKernelParts::new(td, constants);
    let z = x - y;
    cplx(&parts.a(x)) * sinc_q(z, q.qp)
        + cplx(&parts.b(y)) * sinc_q(z, q.qs)
        + cplx(&parts.c()) * (((q.qs * z).cos() - (q.qp * z).cos()) / constants.omega2())
}

/// `dG/dx (x, y)`.
pub fn green_kernel_dx(
    x: f64,
    y: f64,
    q: &QuasiMomenta,
    td: &TransformData,
    constants: &HalfSpaceConstants,
) -> M2 {
    let parts = GreenKernelParts::new(td, constants);
    let z = x - y;
    let (sp, ss) = ((q.qp * z).sin(), (q.qs * z).sin());
    cplx(&parts.a_prime()) * sinc_q(z, q.qp)
        + cplx(&parts.a(x)) * (q.qp * z).cos()
        + cplx(&parts.b(y)) * (q.qs * z).cos()
        + cplx(&parts.c()) * ((q.qp * sp - q.qs * ss) / constants.omega2())
}

/// Unperturbed matrix Jost solution `F_0(x)` and its derivative, with the
/// decaying convention `exp(+i q x)`.
pub fn unperturbed_matrix(
    x: f64,
    xi: C64,
    q: &QuasiMomenta,
    td: &TransformData,
    constants: &HalfSpaceConstants,
) -> (M2, M2) {
    let (hp, hs, dhp, dhs) = faddeev_unperturbed(x, xi, q, td, constants);
    let ep = (I * q.qp * x).exp();
    let es = (I * q.qs * x).exp();
    let value = M2::from_columns(&[hp * ep, hs * es]);
    let deriv = M2::from_columns(&[(dhp + hp * (I * q.qp)) * ep, (dhs + hs * (I * q.qs)) * es]);
    (value, deriv)
}

/// Prefactors of the unperturbed columns with the exponentials removed, and
/// their derivatives.
fn faddeev_unperturbed(
    x: f64,
    xi: C64,
    q: &QuasiMomenta,
    td: &TransformData,
    constants: &HalfSpaceConstants,
) -> (V2, V2, V2, V2) {
    let w2 = constants.omega2();
    let mi = constants.mu_i;
    let k = I * q.qp * (mi / w2);
    let hp = V2::new(k * td.g11h + td.g21(x), k * td.g12h + td.g22(x));
    let dhp = V2::new(
        C64::new(-td.c_i() / 2.0 * td.g11h, 0.0),
        C64::new(-td.c_i() / 2.0 * td.g12h, 0.0),
    );
    let s = -xi * (mi / w2);
    let hs = V2::new(s * td.g11h, s * td.g12h);
    (hp, hs, dhp, V2::zeros())
}

/// `F(0)`, `F'(0)` and `F_Theta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformedFrame {
    pub value0: M2,
    pub deriv0: M2,
    pub jost_function: M2,
}

pub fn jost_function(value0: &M2, deriv0: &M2, theta: &ThetaMatrix, xi: C64) -> M2 {
    deriv0 + theta.matrix(xi) * value0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VolterraMode {
    Iterates,
    Ode,
    /// `Ode` beyond the crossover `|xi| H`, `Iterates` otherwise.
    #[default]
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolterraOptions {
    pub mode: VolterraMode,
    pub panels: usize,
    pub nodes: usize,
    /// Relative size of the last iterate at which the Neumann series stops.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// `|xi| H` beyond which `Auto` switches to `Ode`.
    pub crossover: f64,
    pub ode: OdeOptions,
}

impl Default for VolterraOptions {
    fn default() -> Self {
        Self {
            mode: VolterraMode::Auto,
            panels: 16,
            nodes: 32,
            tolerance: 1e-12,
            max_iterations: 60,
            crossover: 30.0,
            ode: OdeOptions {
                rtol: 1e-12,
                atol: 1e-14,
                ..OdeOptions::default()
            },
        }
    }
}

/// Per-node data for partial panel integrals: for each local node `x_i`, a
/// Gauss rule on `[x_i, b]` (offsets from `x_i`) and the Lagrange basis of
/// the panel nodes evaluated there.
#[derive(Debug, Clone)]
struct PanelRules {
    width: f64,
    /// Local node offsets from the panel start.
    nodes: Vec<f64>,
    weights: Vec<f64>,
    sub_offsets: Vec<Vec<f64>>,
    sub_weights: Vec<Vec<f64>>,
    interp: Vec<Vec<Vec<f64>>>,
}

impl PanelRules {
    fn new(width: f64, n: usize) -> Self {
        let rule = Rule::new(n);
        let (nodes, weights) = rule.on(0.0, width);
        let bary: Vec<f64> = (0..n)
            .map(|j| {
                1.0 / (0..n)
                    .filter(|&m| m != j)
                    .map(|m| nodes[j] - nodes[m])
                    .product::<f64>()
            })
            .collect();
        let lagrange = |t: f64| -> Vec<f64> {
            if let Some(j) = nodes.iter().position(|&x| x == t) {
                let mut e = vec![0.0; n];
                e[j] = 1.0;
                return e;
            }
            let terms: Vec<f64> = (0..n).map(|j| bary[j] / (t - nodes[j])).collect();
            let s: f64 = terms.iter().sum();
            terms.into_iter().map(|v| v / s).collect()
        };
        let mut sub_offsets = Vec::with_capacity(n);
        let mut sub_weights = Vec::with_capacity(n);
        let mut interp = Vec::with_capacity(n);
        for &xi in &nodes {
            let (t, w) = rule.on(xi, width);
            interp.push(t.iter().map(|&tk| lagrange(tk)).collect());
            sub_offsets.push(t.iter().map(|tk| tk - xi).collect());
            sub_weights.push(w);
        }
        Self {
            width,
            nodes,
            weights,
            sub_offsets,
            sub_weights,
            interp,
        }
    }

    /// `P[i][j] = int_{x_i}^{b} exp(i r (x_i - y)) l_j(y) dy`.
    fn partial_weights(&self, r: C64) -> Vec<Vec<C64>> {
        let n = self.nodes.len();
        (0..n)
            .map(|i| {
                let e: Vec<C64> = self.sub_offsets[i]
                    .iter()
                    .zip(&self.sub_weights[i])
                    .map(|(s, w)| (-I * r * *s).exp() * *w)
                    .collect();
                (0..n)
                    .map(|j| {
                        e.iter()
                            .zip(&self.interp[i])
                            .map(|(ek, lk)| ek * lk[j])
                            .sum()
                    })
                    .collect()
            })
            .collect()
    }

    /// Full-panel weights `w_j exp(i r (a - y_j))`.
    fn full_weights(&self, r: C64) -> Vec<C64> {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(y, w)| (-I * r * *y).exp() * *w)
            .collect()
    }
}

/// Exponential integral operator data for one rate `r`:
/// `E(x) = int_x^H exp(i r (x - y)) g(y) dy`.
struct RateOp {
    partial: Vec<Vec<C64>>,
    full: Vec<C64>,
    /// `exp(-i r w)`, the shift across one panel.
    shift: C64,
    /// `exp(-i r (b - x_i))` for local nodes.
    to_end: Vec<C64>,
}

impl RateOp {
    fn new(rules: &PanelRules, r: C64) -> Self {
        Self {
            partial: rules.partial_weights(r),
            full: rules.full_weights(r),
            shift: (-I * r * rules.width).exp(),
            to_end: rules
                .nodes
                .iter()
                .map(|x| (-I * r * (rules.width - x)).exp())
                .collect(),
        }
    }
}

/// Nystrom discretisation of the Volterra operator on `[0, H]`.
#[derive(Debug, Clone)]
pub struct Nystrom {
    h: f64,
    panels: usize,
    rules: PanelRules,
}

impl Nystrom {
    pub fn new(h: f64, panels: usize, nodes: usize) -> Self {
        let panels = panels.max(1);
        Self {
            h,
            panels,
            rules: PanelRules::new(h / panels as f64, nodes.max(2)),
        }
    }

    fn node(&self, p: usize, i: usize) -> f64 {
        self.rules.width * p as f64 + self.rules.nodes[i]
    }

    /// Applies `E` to `g` (given on active panels); returns node values on
    /// active panels and the value at `x = 0`.
    fn sweep(&self, op: &RateOp, active: &[usize], g: &[Vec<V2>]) -> (Vec<Vec<V2>>, V2) {
        let n = self.rules.nodes.len();
        let mut out = vec![Vec::new(); active.len()];
        let mut e_b = V2::zeros();
        let mut current = self.panels;
        for (slot, &p) in active.iter().enumerate().rev() {
            // carry across inactive panels
            while current > p + 1 {
                e_b *= op.shift;
                current -= 1;
            }
            let gp = &g[slot];
            let mut vals = Vec::with_capacity(n);
            for i in 0..n {
                let mut acc = e_b * op.to_end[i];
                for j in 0..n {
                    acc += gp[j] * op.partial[i][j];
                }
                vals.push(acc);
            }
            let mut start = e_b * op.shift;
            for j in 0..n {
                start += gp[j] * op.full[j];
            }
            e_b = start;
            current = p;
            out[slot] = vals;
        }
        while current > 0 {
            e_b *= op.shift;
            current -= 1;
        }
        (out, e_b)
    }

    pub fn h(&self) -> f64 {
        self.h
    }
}

/// Everything needed to evaluate the transformed frame at any point.
#[derive(Debug, Clone)]
pub struct TransformedModel {
    pub constants: HalfSpaceConstants,
    pub boundary: BoundaryValues,
    pub transform: TransformData,
    pub potential: PotentialSpec,
    pub theta: ThetaMatrix,
    pub options: VolterraOptions,
    nystrom: Nystrom,
    active: Vec<usize>,
}

impl TransformedModel {
    pub fn new(
        constants: HalfSpaceConstants,
        boundary: BoundaryValues,
        transform: TransformData,
        potential: PotentialSpec,
        options: VolterraOptions,
    ) -> Result<Self> {
        constants.validate()?;
        if (potential.h - constants.h).abs() > 1e-12 * constants.h {
            return Err(Error::InvalidPotential(format!(
                "support bound {} differs from H = {}",
                potential.h, constants.h
            )));
        }
        let nystrom = Nystrom::new(constants.h, options.panels, options.nodes);
        let n = nystrom.rules.nodes.len();
        let active = (0..nystrom.panels)
            .filter(|&p| {
                !potential.is_zero()
                    && (0..n).any(|i| potential.components(nystrom.node(p, i)).iter().flatten().any(|v| *v != 0.0))
            })
            .collect();
        Ok(Self {
            theta: ThetaMatrix::new(&boundary, &constants),
            constants,
            boundary,
            transform,
            potential,
            options,
            nystrom,
            active,
        })
    }

    /// The homogeneous medium with `V = 0`.
    pub fn homogeneous(constants: HalfSpaceConstants, transform: TransformData) -> Result<Self> {
        let boundary = BoundaryValues {
            mu0: constants.mu_i,
            dmu0: 0.0,
            lambda0: constants.lambda_i,
            inv_mu_dd0: 0.0,
        };
        Self::new(
            constants,
            boundary,
            transform,
            PotentialSpec::zero(constants.h),
            VolterraOptions::default(),
        )
    }

    pub fn with_options(mut self, options: VolterraOptions) -> Self {
        self.nystrom = Nystrom::new(self.constants.h, options.panels, options.nodes);
        let n = self.nystrom.rules.nodes.len();
        self.active = (0..self.nystrom.panels)
            .filter(|&p| {
                !self.potential.is_zero()
                    && (0..n).any(|i| {
                        self.potential
                            .components(self.nystrom.node(p, i))
                            .iter()
                            .flatten()
                            .any(|v| *v != 0.0)
                    })
            })
            .collect();
        self.options = options;
        self
    }

    /// Whether the potential is identically zero on `[a, b]`, judged on the
    /// Nystrom nodes.
    fn potential_vanishes_on(&self, a: f64, b: f64) -> bool {
        let ny = &self.nystrom;
        let n = ny.rules.nodes.len();
        !self.active.iter().any(|&p| {
            (0..n).any(|i| {
                let x = ny.node(p, i);
                x >= a && x <= b
            })
        })
    }

    fn resolve_mode(&self, point: &SpectralPoint) -> VolterraMode {
        match self.options.mode {
            VolterraMode::Auto => {
                if point.xi.norm() * self.constants.h > self.options.crossover {
                    VolterraMode::Ode
                } else {
                    VolterraMode::Iterates
                }
            }
            m => m,
        }
    }

    pub fn frame(&self, point: &SpectralPoint) -> Result<TransformedFrame> {
        let mode = self.resolve_mode(point);
        self.frame_with_mode(point, mode)
    }

    pub fn frame_with_mode(&self, point: &SpectralPoint, mode: VolterraMode) -> Result<TransformedFrame> {
        let q = quasi_momenta(point, &self.constants)?;
        let xi = point.xi;
        let (value0, deriv0) = if self.potential.is_zero() || self.active.is_empty() {
            unperturbed_matrix(0.0, xi, &q, &self.transform, &self.constants)
        } else {
            match mode {
                VolterraMode::Ode => self.solve_ode(xi, &q)?,
                _ => self.solve_iterates(xi, &q)?,
            }
        };
        Ok(TransformedFrame {
            value0,
            deriv0,
            jost_function: jost_function(&value0, &deriv0, &self.theta, xi),
        })
    }

    fn solve_ode(&self, xi: C64, q: &QuasiMomenta) -> Result<(M2, M2)> {
        if q.qp.norm().min(q.qs.norm()) < 1e-6 {
            return self.solve_ode_direct(xi, q);
        }
        let h = self.constants.h;
        let (td, c) = (&self.transform, &self.constants);
        let rates = [q.qp, -q.qp, q.qs, -q.qs];
        // columns: the four unperturbed solutions without exponentials,
        // stacked as (value; derivative)
        let basis = |x: f64| -> Matrix4<C64> {
            let mut m = Matrix4::zeros();
            for (k, &r) in rates.iter().enumerate() {
                let kq = QuasiMomenta {
                    qp: if k < 2 { r } else { q.qp },
                    qs: if k < 2 { q.qs } else { r },
                };
                let (hp, _, dhp, _) = faddeev_unperturbed(x, xi, &kq, td, c);
                let (v, d) = if k < 2 {
                    (hp, dhp)
                } else {
                    (V2::new(C64::new(td.g11h, 0.0), C64::new(td.g12h, 0.0)), V2::zeros())
                };
                let d = d + v * (I * r);
                m[(0, k)] = v[0];
                m[(1, k)] = v[1];
                m[(2, k)] = d[0];
                m[(3, k)] = d[1];
            }
            m
        };
        let s = -xi * (c.mu_i / c.omega2());
        let starts = [
            [(I * q.qp * h).exp(), ZERO, ZERO, ZERO],
            [ZERO, ZERO, s * (I * q.qs * h).exp(), ZERO],
        ];
        // coefficients are taken relative to the right end of each piece, so
        // exponential factors stay of order one inside a piece
        let growth = rates.iter().map(|r| r.im.abs()).fold(0.0, f64::max);
        let pieces = self
            .options
            .panels
            .max((2.0 * growth * h).ceil() as usize)
            .max(1);
        let width = h / pieces as f64;
        let mut coeffs = starts;
        for p in (0..pieces).rev() {
            let (a, b) = (width * p as f64, width * (p + 1) as f64);
            let b = if p + 1 == pieces { h } else { b };
            let quiet = (0..=8).all(|k| {
                let v = self.potential.components(a + (b - a) * k as f64 / 8.0);
                v.iter().flatten().all(|x| *x == 0.0)
            }) && self.potential_vanishes_on(a, b);
            for y in coeffs.iter_mut() {
                if !quiet {
                    let rhs = |x: f64, y: &[C64; 4]| -> [C64; 4] {
                        let phi = basis(x);
                        let e: [C64; 4] = rates.map(|r| (I * r * (x - b)).exp());
                        let cv = Vector4::new(y[0] * e[0], y[1] * e[1], y[2] * e[2], y[3] * e[3]);
                        let full = phi * cv;
                        let vf = cplx(&self.potential.value(x)) * V2::new(full[0], full[1]);
                        let w = phi
                            .lu()
                            .solve(&Vector4::new(ZERO, ZERO, vf[0], vf[1]))
                            .unwrap_or_else(|| Vector4::repeat(C64::new(f64::NAN, 0.0)));
                        [w[0] / e[0], w[1] / e[1], w[2] / e[2], w[3] / e[3]]
                    };
                    // the system is linear; normalising keeps the absolute
                    // tolerance meaningful when the coefficients are large
                    let scale = y.iter().map(|v| v.norm()).fold(0.0, f64::max);
                    if scale > 0.0 {
                        let start = y.map(|v| v / scale);
                        *y = integrate(rhs, b, start, a, &self.options.ode)?.map(|v| v * scale);
                    }
                    if y.iter().any(|v| !v.is_finite()) {
                        return Err(Error::Integrator {
                            position: a,
                            reason: "singular unperturbed basis".into(),
                        });
                    }
                }
                // re-reference to the left end
                for (k, r) in rates.iter().enumerate() {
                    y[k] *= (I * r * (a - b)).exp();
                }
            }
        }
        let phi0 = basis(0.0);
        let mut value = M2::zeros();
        let mut deriv = M2::zeros();
        for (col, y) in coeffs.into_iter().enumerate() {
            let full = phi0 * Vector4::new(y[0], y[1], y[2], y[3]);
            value.set_column(col, &V2::new(full[0], full[1]));
            deriv.set_column(col, &V2::new(full[2], full[3]));
        }
        Ok((value, deriv))
    }

    /// Integrates the second-order system directly for the Faddeev factor.
    /// Used only next to branch points, where the unperturbed basis
    /// degenerates.
    fn solve_ode_direct(&self, xi: C64, q: &QuasiMomenta) -> Result<(M2, M2)> {
        let h = self.constants.h;
        let (hp, hs, dhp, dhs) = faddeev_unperturbed(h, xi, q, &self.transform, &self.constants);
        let mut value = M2::zeros();
        let mut deriv = M2::zeros();
        for (col, (kappa, h0, dh0)) in [(q.qp, hp, dhp), (q.qs, hs, dhs)].into_iter().enumerate() {
            let shift = xi * xi + kappa * kappa;
            let rhs = |x: f64, y: &[C64; 4]| -> [C64; 4] {
                let m = cplx(&(background_potential(x, &self.transform, &self.constants)
                    + self.potential.value(x)));
                let u = V2::new(y[0], y[1]);
                let up = V2::new(y[2], y[3]);
                let upp = m * u + u * shift - up * (I * kappa * 2.0);
                [y[2], y[3], upp[0], upp[1]]
            };
            let y = integrate(rhs, h, [h0[0], h0[1], dh0[0], dh0[1]], 0.0, &self.options.ode)?;
            let u = V2::new(y[0], y[1]);
            let up = V2::new(y[2], y[3]);
            value.set_column(col, &u);
            deriv.set_column(col, &(up + u * (I * kappa)));
        }
        Ok((value, deriv))
    }

    fn solve_iterates(&self, xi: C64, q: &QuasiMomenta) -> Result<(M2, M2)> {
        let ny = &self.nystrom;
        let n = ny.rules.nodes.len();
        let parts = GreenKernelParts::new(&self.transform, &self.constants);
        let w2 = self.constants.omega2();
        let c = cplx(&parts.c());
        let a0 = cplx(&parts.a(0.0));
        let ap = cplx(&parts.a_prime());
        let xs: Vec<Vec<f64>> = self
            .active
            .iter()
            .map(|&p| (0..n).map(|i| ny.node(p, i)).collect())
            .collect();
        let vs: Vec<Vec<M2>> = xs
            .iter()
            .map(|row| row.iter().map(|&x| cplx(&self.potential.value(x))).collect())
            .collect();
        let a_nodes: Vec<Vec<M2>> = xs
            .iter()
            .map(|row| row.iter().map(|&x| cplx(&parts.a(x))).collect())
            .collect();
        let b_nodes: Vec<Vec<M2>> = xs
            .iter()
            .map(|row| row.iter().map(|&x| cplx(&parts.b(x))).collect())
            .collect();

        let mut value = M2::zeros();
        let mut deriv = M2::zeros();
        let (_, _, dhp, dhs) = faddeev_unperturbed(0.0, xi, q, &self.transform, &self.constants);
        for col in 0..2 {
            let kappa = if col == 0 { q.qp } else { q.qs };
            let ops = [q.qp - kappa, -q.qp - kappa, q.qs - kappa, -q.qs - kappa]
                .map(|r| RateOp::new(&ny.rules, r));
            let h0 = |x: f64| {
                let (hp, hs, _, _) = faddeev_unperturbed(x, xi, q, &self.transform, &self.constants);
                if col == 0 {
                    hp
                } else {
                    hs
                }
            };
            let mut h_nodes: Vec<Vec<V2>> = xs.iter().map(|row| row.iter().map(|&x| h0(x)).collect()).collect();
            let mut val0 = h0(0.0);
            let mut der0 = (if col == 0 { dhp } else { dhs }) + val0 * (I * kappa);

            let mut converged = false;
            let mut last = 0.0;
            let mut sup_sum = h_nodes
                .iter()
                .flatten()
                .map(|v| v.camax())
                .fold(val0.camax(), f64::max);
            for _ in 0..self.options.max_iterations {
                let g: Vec<Vec<V2>> = h_nodes
                    .iter()
                    .zip(&vs)
                    .map(|(hr, vr)| hr.iter().zip(vr).map(|(h, v)| v * h).collect())
                    .collect();
                let gb: Vec<Vec<V2>> = g
                    .iter()
                    .zip(&b_nodes)
                    .map(|(gr, br)| gr.iter().zip(br).map(|(g, b)| b * g).collect())
                    .collect();
                let (pp, pp0) = ny.sweep(&ops[0], &self.active, &g);
                let (pm, pm0) = ny.sweep(&ops[1], &self.active, &g);
                let (sp, sp0) = ny.sweep(&ops[2], &self.active, &g);
                let (sm, sm0) = ny.sweep(&ops[3], &self.active, &g);
                let (jp, jp0) = ny.sweep(&ops[2], &self.active, &gb);
                let (jm, jm0) = ny.sweep(&ops[3], &self.active, &gb);

                let two_i_qp = I * q.qp * 2.0;
                let two_i_qs = I * q.qs * 2.0;
                let kernel = |a: &M2, pp: V2, pm: V2, sp: V2, sm: V2, jp: V2, jm: V2| -> V2 {
                    a * (pp - pm) / two_i_qp + (jp - jm) / two_i_qs + c * ((sp + sm) - (pp + pm)) / C64::new(2.0 * w2, 0.0)
                };
                let mut next = Vec::with_capacity(h_nodes.len());
                let mut sup_term = 0.0f64;
                for s in 0..h_nodes.len() {
                    let row: Vec<V2> = (0..n)
                        .map(|i| {
                            -kernel(
                                &a_nodes[s][i],
                                pp[s][i],
                                pm[s][i],
                                sp[s][i],
                                sm[s][i],
                                jp[s][i],
                                jm[s][i],
                            )
                        })
                        .collect();
                    sup_term = row.iter().map(|v| v.camax()).fold(sup_term, f64::max);
                    next.push(row);
                }
                let t0 = -kernel(&a0, pp0, pm0, sp0, sm0, jp0, jm0);
                let t0x = -(ap * (pp0 - pm0) / two_i_qp
                    + a0 * (pp0 + pm0) * C64::new(0.5, 0.0)
                    + (jp0 + jm0) * C64::new(0.5, 0.0)
                    + c * ((pp0 - pm0) * q.qp - (sp0 - sm0) * q.qs) / (2.0 * I * w2));
                val0 += t0;
                der0 += t0x;
                sup_term = sup_term.max(t0.camax());
                sup_sum = sup_sum.max(val0.camax());
                for (hr, nr) in h_nodes.iter().zip(&next) {
                    for v in hr.iter().zip(nr).map(|(h, t)| h + t) {
                        sup_sum = sup_sum.max(v.camax());
                    }
                }
                last = sup_term;
                if !sup_term.is_finite() {
                    break;
                }
                h_nodes = next;
                if sup_term <= self.options.tolerance * sup_sum {
                    converged = true;
                    break;
                }
            }
            if !converged {
                return Err(Error::VolterraDivergence {
                    iterations: self.options.max_iterations,
                    last,
                    norm: sup_sum,
                });
            }
            value.set_column(col, &val0);
            deriv.set_column(col, &der0);
        }
        Ok((value, deriv))
    }

    /// `det A_1 det A_2 det F_Theta` on the point's sheet.
    pub fn bridge_determinant(&self, point: &SpectralPoint) -> Result<C64> {
        if point.xi == ZERO {
            return Err(Error::BridgeSingular);
        }
        let f = self.frame(point)?;
        Ok(bridge_factor(point.xi, &self.constants, self.boundary.mu0) * f.jost_function.determinant())
    }
}

/// `det A_1 det A_2 = 2 mu(0) omega^4 / (mu_I xi)`.
pub fn bridge_factor(xi: C64, constants: &HalfSpaceConstants, mu0: f64) -> C64 {
    2.0 * mu0 * constants.omega2() * constants.omega2() / (constants.mu_i * xi)
}

/// `A_1 F_Theta A_2`.
pub fn bridge_boundary_matrix(
    f_theta: &M2,
    xi: C64,
    constants: &HalfSpaceConstants,
    mu0: f64,
    mu0prime: f64,
) -> Result<M2> {
    if xi == ZERO {
        return Err(Error::BridgeSingular);
    }
    let mi = constants.mu_i;
    let w2 = constants.omega2();
    let a1 = M2::new(
        xi * (2.0 * mi),
        ZERO,
        I * (2.0 * mi * mu0prime / mu0),
        -I * mu0,
    );
    let a2 = M2::new(w2 / (I * xi * mi), ZERO, ZERO, -w2 / (xi * mi));
    Ok(a1 * f_theta * a2)
}

impl SpectralModel for TransformedModel {
    fn constants(&self) -> &HalfSpaceConstants {
        &self.constants
    }

    fn delta(&self, point: &SpectralPoint) -> Result<C64> {
        self.bridge_determinant(point)
    }

    fn deltas_conditioned(&self, xi: C64, side: CutSide) -> Result<[(C64, f64); 4]> {
        if xi == ZERO {
            return Err(Error::BridgeSingular);
        }
        let factor = bridge_factor(xi, &self.constants, self.boundary.mu0);
        let mut out = [(ZERO, 1.0); 4];
        for (slot, tag) in out.iter_mut().zip(SheetTag::ALL) {
            let f = self.frame(&SpectralPoint::new(xi, tag).with_cut_side(side))?.jost_function;
            *slot = (factor * f.determinant(), column_condition(&f));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> HalfSpaceConstants {
        HalfSpaceConstants::new(1.0, 1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn background_at_surface() {
        let c = unit();
        let q0 = background_potential(0.0, &TransformData::identity(&c), &c);
        assert!((q0 - Matrix2::new(-1.0, 2.0 / 9.0, 0.0, -1.0 / 3.0)).amax() < 1e-15);
    }

    #[test]
    fn kernel_parts_sum_to_identity() {
        let c = unit();
        let td = TransformData::new([1.3, 0.4, -0.2, 1.0 / 1.3 + 0.4 * -0.2 / 1.3], &c).unwrap();
        let parts = GreenKernelParts::new(&td, &c);
        for (x, y) in [(0.0, 0.3), (0.7, 0.9), (0.2, 2.5)] {
            assert!((parts.identity_residual(x, y) - Matrix2::identity()).amax() < 1e-14);
        }
    }

    #[test]
    fn partial_weights_integrate_exponentials() {
        let rules = PanelRules::new(0.25, 12);
        let r = C64::new(3.0, -2.0);
        let p = rules.partial_weights(r);
        // g = 1: int_{x}^{b} exp(i r (x - y)) dy
        for (i, row) in p.iter().enumerate() {
            let x = rules.nodes[i];
            let exact = (C64::new(1.0, 0.0) - (-I * r * (0.25 - x)).exp()) / (I * r);
            let got: C64 = row.iter().sum();
            assert!((got - exact).norm() < 1e-13);
        }
    }
}
