//! The four-sheeted surface of `(q_P, q_S)`: sheet tags, quasi-momenta with
//! branch-cut conventions, and the involutions acting on points.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::medium::HalfSpaceConstants;

pub type C64 = Complex64;

pub const I: C64 = C64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    fn symbol(self) -> char {
        match self {
            Sign::Plus => '+',
            Sign::Minus => '-',
        }
    }
}

/// `(sign Im q_P, sign Im q_S)`; `(+,+)` is the physical sheet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SheetTag {
    pub p: Sign,
    pub s: Sign,
}

impl SheetTag {
    pub const PP: SheetTag = SheetTag::new(Sign::Plus, Sign::Plus);
    pub const PM: SheetTag = SheetTag::new(Sign::Plus, Sign::Minus);
    pub const MP: SheetTag = SheetTag::new(Sign::Minus, Sign::Plus);
    pub const MM: SheetTag = SheetTag::new(Sign::Minus, Sign::Minus);
    pub const ALL: [SheetTag; 4] = [Self::PP, Self::PM, Self::MP, Self::MM];

    pub const fn new(p: Sign, s: Sign) -> Self {
        Self { p, s }
    }

    pub fn is_physical(self) -> bool {
        self == Self::PP
    }

    pub fn index(self) -> usize {
        Self::ALL.iter().position(|&t| t == self).unwrap_or(0)
    }
}

impl fmt::Display for SheetTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.p.symbol(), self.s.symbol())
    }
}

impl FromStr for SheetTag {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let sign = |c: char| match c {
            '+' => Ok(Sign::Plus),
            '-' => Ok(Sign::Minus),
            _ => Err(Error::Config(format!("invalid sheet tag {s:?}"))),
        };
        let mut chars = s.chars();
        match (chars.next(), chars.next(), chars.next()) {
            (Some(a), Some(b), None) => Ok(Self::new(sign(a)?, sign(b)?)),
            _ => Err(Error::Config(format!("invalid sheet tag {s:?}"))),
        }
    }
}

impl Serialize for SheetTag {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SheetTag {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Side of a cut, in terms of the sign of `Im(xi^2 - r^2)` from which the
/// limit is taken. `Below` makes `q` positive real on the physical sheet,
/// matching the limit `x - i0` for `x > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CutSide {
    Above,
    #[default]
    Below,
}

/// A coordinate on the surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralPoint {
    pub xi: C64,
    pub sheet: SheetTag,
    pub cut_side: CutSide,
}

impl SpectralPoint {
    pub fn new(xi: C64, sheet: SheetTag) -> Self {
        Self {
            xi,
            sheet,
            cut_side: CutSide::Below,
        }
    }

    pub fn physical(xi: C64) -> Self {
        Self::new(xi, SheetTag::PP)
    }

    pub fn with_cut_side(mut self, side: CutSide) -> Self {
        self.cut_side = side;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuasiMomenta {
    pub qp: C64,
    pub qs: C64,
}

impl QuasiMomenta {
    pub fn flipped(self, sheet: SheetTag) -> Self {
        Self {
            qp: self.qp * sheet.p.value(),
            qs: self.qs * sheet.s.value(),
        }
    }
}

/// Branch-point exclusion radius relative to `r_minus`.
pub const BRANCH_POINT_RADIUS: f64 = 1e-12;

fn physical_branch(xi: C64, r: f64, side: CutSide) -> C64 {
    let w = xi * xi - r * r;
    if w.im == 0.0 && w.re < 0.0 {
        let root = (-w.re).sqrt();
        match side {
            CutSide::Below => C64::new(root, 0.0),
            CutSide::Above => C64::new(-root, 0.0),
        }
    } else {
        I * w.sqrt()
    }
}

fn check_branch_points(xi: C64, constants: &HalfSpaceConstants) -> Result<()> {
    let (rp, rm) = constants.branch_radii();
    let eps = BRANCH_POINT_RADIUS * rm;
    for r in [rp, -rp, rm, -rm] {
        if (xi - r).norm() < eps {
            return Err(Error::BranchPoint(xi));
        }
    }
    Ok(())
}

/// Quasi-momenta on the physical sheet, with the cut side deciding values on
/// the cuts.
pub fn physical_quasi_momenta(
    xi: C64,
    side: CutSide,
    constants: &HalfSpaceConstants,
) -> Result<QuasiMomenta> {
    if !(xi.re.is_finite() && xi.im.is_finite()) {
        return Err(Error::Contour(format!("non-finite xi {xi}")));
    }
    check_branch_points(xi, constants)?;
    let (rp, rm) = constants.branch_radii();
    Ok(QuasiMomenta {
        qp: physical_branch(xi, rp, side),
        qs: physical_branch(xi, rm, side),
    })
}

/// `(q_P, q_S)` with `sign Im q` matching the sheet tag.
pub fn quasi_momenta(point: &SpectralPoint, constants: &HalfSpaceConstants) -> Result<QuasiMomenta> {
    Ok(physical_quasi_momenta(point.xi, point.cut_side, constants)?.flipped(point.sheet))
}

/// Whether `xi` lies on the cut of `q_P` or `q_S`.
pub fn on_cut(xi: C64, constants: &HalfSpaceConstants) -> bool {
    let (_, rm) = constants.branch_radii();
    let w = xi * xi - rm * rm;
    w.im == 0.0 && w.re < 0.0
}

/// Whether `xi` lies on the imaginary axis, where sheet tags degenerate.
pub fn on_imaginary_axis(xi: C64) -> bool {
    xi.re == 0.0 && xi.im != 0.0
}

/// The sheet determined by signs of `Im q`, or `None` when one vanishes.
pub fn classify(q: &QuasiMomenta) -> Option<SheetTag> {
    let sign = |v: f64| {
        if v > 0.0 {
            Some(Sign::Plus)
        } else if v < 0.0 {
            Some(Sign::Minus)
        } else {
            None
        }
    };
    Some(SheetTag::new(sign(q.qp.im)?, sign(q.qs.im)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mapping {
    P,
    S,
    PS,
}

/// `w_P`, `w_S`, `w_PS`: same `xi`, flipped sheet signs.
pub fn apply_mapping(point: &SpectralPoint, which: Mapping) -> SpectralPoint {
    let mut out = *point;
    match which {
        Mapping::P => out.sheet.p = out.sheet.p.flip(),
        Mapping::S => out.sheet.s = out.sheet.s.flip(),
        Mapping::PS => {
            out.sheet.p = out.sheet.p.flip();
            out.sheet.s = out.sheet.s.flip();
        }
    }
    out
}

/// `-xi` on the same sheet; the quasi-momenta are unchanged.
pub fn reflect(point: &SpectralPoint) -> SpectralPoint {
    SpectralPoint {
        xi: -point.xi,
        ..*point
    }
}

/// `conj xi` on the sheet with `q(result) = -conj q(point)`.
pub fn conjugate(point: &SpectralPoint, constants: &HalfSpaceConstants) -> Result<SpectralPoint> {
    if on_cut(point.xi, constants) {
        return Err(Error::OnCut(point.xi));
    }
    // -conj keeps the sign of Im q, so the sheet is unchanged
    Ok(SpectralPoint {
        xi: point.xi.conj(),
        ..*point
    })
}

/// `|q_P - s_P i xi| + |q_S - s_S i xi|` for `Re xi >= 0`.
pub fn asymptotic_check(point: &SpectralPoint, constants: &HalfSpaceConstants) -> Result<f64> {
    let q = quasi_momenta(point, constants)?;
    let ixi = I * point.xi;
    Ok((q.qp - point.sheet.p.value() * ixi).norm() + (q.qs - point.sheet.s.value() * ixi).norm())
}
