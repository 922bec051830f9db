//! A common interface over the two frames in which the sheet determinants can
//! be evaluated.

use crate::error::{Error, Result};
use crate::medium::HalfSpaceConstants;
use crate::riemann::{CutSide, SheetTag, SpectralPoint, C64};

pub trait SpectralModel: Send + Sync {
    fn constants(&self) -> &HalfSpaceConstants;

    /// Rayleigh determinant on the point's sheet.
    fn delta(&self, point: &SpectralPoint) -> Result<C64>;

    /// Determinants on all sheets at one `xi`, ordered like [`SheetTag::ALL`].
    fn deltas(&self, xi: C64, side: CutSide) -> Result<[C64; 4]> {
        let mut out = [C64::new(0.0, 0.0); 4];
        for (slot, tag) in out.iter_mut().zip(SheetTag::ALL) {
            *slot = self.delta(&SpectralPoint::new(xi, tag).with_cut_side(side))?;
        }
        Ok(out)
    }

    /// Determinants together with the ratio `|c_1| |c_2| / |det|` of the
    /// column norms to the determinant, which measures the cancellation in
    /// the 2x2 determinant. Models without a column structure report `1`.
    fn deltas_conditioned(&self, xi: C64, side: CutSide) -> Result<[(C64, f64); 4]> {
        Ok(self.deltas(xi, side)?.map(|d| (d, 1.0)))
    }

    /// `F` as the product of the four sheet determinants. At branch points
    /// and at the origin (where the transformed-frame bridge is singular) the
    /// value is extrapolated quadratically from three nearby points.
    fn entire_f(&self, xi: C64) -> Result<C64> {
        match self.deltas(xi, CutSide::Below) {
            Ok(d) => Ok(d.iter().product()),
            Err(e) if is_removable(&e) => {
                let (_, rm) = self.constants().branch_radii();
                let step = C64::from_polar(1e-5 * rm, std::f64::consts::FRAC_PI_4);
                let mut v = [C64::new(0.0, 0.0); 3];
                for (k, slot) in v.iter_mut().enumerate() {
                    let z = xi + step * (k as f64 + 1.0);
                    *slot = self.deltas(z, CutSide::Below)?.iter().product();
                }
                Ok(v[0] * 3.0 - v[1] * 3.0 + v[2])
            }
            Err(e) => Err(e),
        }
    }

    /// `log |F|` as a sum of logs, safe against overflow of the product.
    fn log_abs_f(&self, xi: C64) -> Result<f64> {
        match self.deltas(xi, CutSide::Below) {
            Ok(d) => Ok(d.iter().map(|v| v.norm().ln()).sum()),
            Err(e) if is_removable(&e) => Ok(self.entire_f(xi)?.norm().ln()),
            Err(e) => Err(e),
        }
    }
}

/// `log |F|` and an estimate of its relative error from cancellation in the
/// sheet determinants.
pub fn log_abs_f_with_error(model: &dyn SpectralModel, xi: C64) -> Result<(f64, f64)> {
    match model.deltas_conditioned(xi, CutSide::Below) {
        Ok(d) => {
            let log = d.iter().map(|(v, _)| v.norm().ln()).sum();
            let cond = d.iter().map(|(_, c)| *c).fold(1.0, f64::max);
            Ok((log, f64::EPSILON * cond))
        }
        Err(e) if is_removable(&e) => Ok((model.entire_f(xi)?.norm().ln(), f64::EPSILON)),
        Err(e) => Err(e),
    }
}

/// `|c_1| |c_2| / |det|` for the columns of a 2x2 matrix.
pub fn column_condition(m: &nalgebra::Matrix2<C64>) -> f64 {
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    let prod = m.column(0).norm() * m.column(1).norm();
    if det.norm() > 0.0 {
        prod / det.norm()
    } else {
        f64::INFINITY
    }
}

fn is_removable(e: &Error) -> bool {
    matches!(
        e,
        Error::BranchPoint(_) | Error::NearBranchPoint(_) | Error::BridgeSingular
    )
}
