//! Zeros of the sheet determinants and of `F` in rectangles: argument
//! principle with adaptive edge sampling, quadrisection, Newton refinement
//! and classification into eigenvalues and resonances.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Mutex;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::model::SpectralModel;
use crate::riemann::{on_imaginary_axis, CutSide, SheetTag, SpectralPoint, C64};

/// What is being searched.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Delta(SheetTag),
    EntireF,
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::Delta(t) => write!(f, "{t}"),
            Target::EntireF => write!(f, "all"),
        }
    }
}

/// Evaluates the target at a point.
pub trait TargetFn: Sync {
    fn eval(&self, xi: C64) -> Result<C64>;
}

impl<F: Fn(C64) -> Result<C64> + Sync> TargetFn for F {
    fn eval(&self, xi: C64) -> Result<C64> {
        self(xi)
    }
}

/// A model together with a target.
pub struct ModelTarget<'a> {
    pub model: &'a dyn SpectralModel,
    pub target: Target,
}

impl TargetFn for ModelTarget<'_> {
    fn eval(&self, xi: C64) -> Result<C64> {
        match self.target {
            Target::Delta(tag) => self.model.delta(&SpectralPoint::new(xi, tag)),
            Target::EntireF => self.model.entire_f(xi),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub re: [f64; 2],
    pub im: [f64; 2],
}

impl Rect {
    pub fn new(re0: f64, re1: f64, im0: f64, im1: f64) -> Result<Self> {
        let ok = [re0, re1, im0, im1].iter().all(|v| v.is_finite()) && re0 < re1 && im0 < im1;
        if !ok {
            return Err(Error::Contour(format!(
                "degenerate rectangle [{re0}, {re1}] x [{im0}, {im1}]"
            )));
        }
        Ok(Self {
            re: [re0, re1],
            im: [im0, im1],
        })
    }

    /// Centered square of side `side`.
    pub fn square(center: C64, side: f64) -> Result<Self> {
        let h = side / 2.0;
        Self::new(center.re - h, center.re + h, center.im - h, center.im + h)
    }

    pub fn contains(&self, z: C64) -> bool {
        z.re >= self.re[0] && z.re <= self.re[1] && z.im >= self.im[0] && z.im <= self.im[1]
    }

    fn size(&self) -> f64 {
        (self.re[1] - self.re[0]).max(self.im[1] - self.im[0])
    }
}

/// A rectangle with the function whose zeros are wanted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchRegion {
    pub rect: Rect,
    pub target: Target,
}

impl SearchRegion {
    pub fn new(rect: Rect, target: Target) -> Self {
        Self { rect, target }
    }

    /// Sub-rectangles on which a sheet determinant is analytic: split at
    /// `Re xi = 0`, `Re xi = +-r_minus` and, between those, at `Im xi = 0`.
    /// Edges lying on a cut or through a branch point are moved inward by
    /// `offset`.
    pub fn pieces(&self, r_minus: f64, offset: f64) -> Vec<Rect> {
        let r = self.rect;
        if self.target == Target::EntireF {
            return vec![r];
        }
        let mut xs = vec![r.re[0]];
        for c in [-r_minus, 0.0, r_minus] {
            if c > r.re[0] && c < r.re[1] {
                xs.push(c);
            }
        }
        xs.push(r.re[1]);
        let mut out = Vec::new();
        for w in xs.windows(2) {
            let (x0, x1) = (w[0], w[1]);
            let inside_cut = x0 >= -r_minus && x1 <= r_minus;
            let ys = if inside_cut && r.im[0] < 0.0 && r.im[1] > 0.0 {
                vec![(r.im[0], 0.0), (0.0, r.im[1])]
            } else {
                vec![(r.im[0], r.im[1])]
            };
            for (y0, y1) in ys {
                let mut p = Rect {
                    re: [x0, x1],
                    im: [y0, y1],
                };
                // vertical edges through 0 lie on the cut; those through
                // +-r_minus pass through a branch point
                for c in [-r_minus, 0.0, r_minus] {
                    if p.re[0] == c {
                        p.re[0] += offset;
                    }
                    if p.re[1] == c {
                        p.re[1] -= offset;
                    }
                }
                if inside_cut {
                    if p.im[0] == 0.0 {
                        p.im[0] += offset;
                    }
                    if p.im[1] == 0.0 {
                        p.im[1] -= offset;
                    }
                }
                if p.re[0] < p.re[1] && p.im[0] < p.im[1] {
                    out.push(p);
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralOptions {
    /// Smallest cell side, relative to the region size.
    pub min_cell: f64,
    /// Newton target residual relative to the local scale.
    pub newton_tol: f64,
    /// Acceptance threshold for records.
    pub residual_tol: f64,
    /// Central-difference step relative to `max(1, |xi|)`.
    pub newton_step: f64,
    pub dedupe_radius: f64,
    /// Classification threshold relative to the largest sheet determinant.
    pub classify_tol: f64,
    /// Distance by which edges on a cut are moved inward.
    pub cut_offset: f64,
    pub initial_samples: usize,
    /// Largest phase step accepted between neighbouring samples.
    pub max_phase_step: f64,
    pub max_nudges: usize,
    /// Bound on the growth rate of `log |f|` per unit length (the
    /// exponential type), used to space the initial edge samples so that
    /// the phase cannot alias. `None` uses `initial_samples` alone.
    pub phase_rate: Option<f64>,
    pub parallel: bool,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        Self {
            min_cell: 1e-8,
            newton_tol: 1e-12,
            residual_tol: 1e-9,
            newton_step: 1e-7,
            dedupe_radius: 1e-7,
            classify_tol: 1e-8,
            cut_offset: 1e-10,
            initial_samples: 16,
            max_phase_step: PI / 3.0,
            max_nudges: 8,
            phase_rate: None,
            parallel: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Classification {
    Eigenvalue,
    Resonance,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Classification::Eigenvalue => write!(f, "eigenvalue"),
            Classification::Resonance => write!(f, "resonance"),
        }
    }
}

/// A located zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ResonanceRecord {
    pub xi: C64,
    pub target: Target,
    /// Sheets on which the determinant vanishes (filled by [`classify`] for
    /// zeros of `F`).
    pub sheets: Vec<SheetTag>,
    pub multiplicity: usize,
    /// `|target(xi)|`.
    pub residual: f64,
    /// Modulus of the target at distance `1e-3 max(1, |xi|)`.
    pub scale: f64,
    pub classification: Option<Classification>,
    /// Unresolved cluster at minimum cell size.
    pub cluster: bool,
    /// On the imaginary axis, where sheet tags degenerate.
    pub on_imaginary_axis: bool,
}

impl ResonanceRecord {
    pub fn relative_residual(&self) -> f64 {
        if self.scale > 0.0 {
            self.residual / self.scale
        } else {
            self.residual
        }
    }

    pub fn sheet_label(&self) -> String {
        if self.sheets.is_empty() {
            self.target.to_string()
        } else {
            self.sheets
                .iter()
                .map(|t| t.to_string())
                .collect::<Vec<_>>()
                .join(";")
        }
    }

    pub fn csv_row(&self) -> CsvRow {
        CsvRow {
            re_xi: self.xi.re,
            im_xi: self.xi.im,
            sheet: self.sheet_label(),
            multiplicity: self.multiplicity,
            residual: self.residual,
            classification: match (self.cluster, self.classification) {
                (true, _) => "cluster".into(),
                (false, Some(c)) => c.to_string(),
                (false, None) => String::new(),
            },
        }
    }
}

/// Serialised form of a record.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CsvRow {
    pub re_xi: f64,
    pub im_xi: f64,
    pub sheet: String,
    pub multiplicity: usize,
    pub residual: f64,
    pub classification: String,
}

impl Serialize for ResonanceRecord {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.csv_row().serialize(s)
    }
}

/// Number of integer units spanning a piece along each axis.
const UNITS: u64 = 1 << 50;
/// Phase swings that only resolve below this length mean a zero sits on the edge.
const MIN_SEGMENT: u64 = UNITS >> 30;

type Key = (u64, u64);

/// Cached evaluation on one rectangle in integer coordinates.
struct Grid<'a> {
    f: &'a dyn TargetFn,
    rect: Rect,
    cache: Mutex<HashMap<Key, C64>>,
}

impl<'a> Grid<'a> {
    fn new(f: &'a dyn TargetFn, rect: Rect) -> Self {
        Self {
            f,
            rect,
            cache: Mutex::new(HashMap::new()),
        }
    }

    fn point(&self, k: Key) -> C64 {
        let r = &self.rect;
        C64::new(
            r.re[0] + (r.re[1] - r.re[0]) * (k.0 as f64 / UNITS as f64),
            r.im[0] + (r.im[1] - r.im[0]) * (k.1 as f64 / UNITS as f64),
        )
    }

    fn eval(&self, k: Key) -> Result<C64> {
        if let Some(v) = self.cache.lock().expect("cache lock").get(&k) {
            return Ok(*v);
        }
        let v = self.f.eval(self.point(k))?;
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::Overflow(format!("target not finite at {}", self.point(k))));
        }
        self.cache.lock().expect("cache lock").insert(k, v);
        Ok(v)
    }

    fn rect_of(&self, c: &Cell) -> Rect {
        let a = self.point((c.u0, c.v0));
        let b = self.point((c.u1, c.v1));
        Rect {
            re: [a.re, b.re],
            im: [a.im, b.im],
        }
    }

    /// Phase change along a straight segment between integer points.
    fn segment_phase(&self, a: Key, b: Key, opts: &SpectralOptions) -> Result<f64> {
        let len = a.0.abs_diff(b.0).max(a.1.abs_diff(b.1));
        let mut n = opts.initial_samples as u64;
        if let Some(rate) = opts.phase_rate {
            let length = (self.point(a) - self.point(b)).norm();
            n = n.max((rate * length / (PI / 4.0)).ceil() as u64);
        }
        let n = n.min(len.max(1));
        let keys: Vec<Key> = (0..=n).map(|k| lerp(a, b, k, n)).collect();
        let values: Vec<C64> = if opts.parallel && n > 16 {
            use rayon::prelude::*;
            keys.par_iter().map(|&k| self.eval(k)).collect::<Result<_>>()?
        } else {
            keys.iter().map(|&k| self.eval(k)).collect::<Result<_>>()?
        };
        let mut total = 0.0;
        for i in 0..n as usize {
            total += self.refine(keys[i], values[i], keys[i + 1], values[i + 1], opts, 0)?;
        }
        Ok(total)
    }

    fn refine(&self, a: Key, fa: C64, b: Key, fb: C64, opts: &SpectralOptions, depth: usize) -> Result<f64> {
        if fa == C64::new(0.0, 0.0) || fb == C64::new(0.0, 0.0) {
            return Err(Error::Contour(format!("zero on contour at {}", self.point(a))));
        }
        let step = (fb / fa).arg();
        if step.abs() <= opts.max_phase_step {
            return Ok(step);
        }
        let len = a.0.abs_diff(b.0).max(a.1.abs_diff(b.1));
        if len < MIN_SEGMENT || depth > 60 {
            return Err(Error::Contour(format!(
                "zero on or near contour at {}",
                self.point(a)
            )));
        }
        let m = lerp(a, b, 1, 2);
        let fm = self.eval(m)?;
        Ok(self.refine(a, fa, m, fm, opts, depth + 1)? + self.refine(m, fm, b, fb, opts, depth + 1)?)
    }

    fn winding(&self, c: &Cell, opts: &SpectralOptions) -> Result<i64> {
        let corners = [(c.u0, c.v0), (c.u1, c.v0), (c.u1, c.v1), (c.u0, c.v1)];
        let mut total = 0.0;
        for i in 0..4 {
            total += self.segment_phase(corners[i], corners[(i + 1) % 4], opts)?;
        }
        let w = total / (2.0 * PI);
        let r = w.round();
        if (w - r).abs() > 0.1 {
            return Err(Error::Contour(format!("non-integer winding {w}")));
        }
        Ok(r as i64)
    }
}

fn lerp(a: Key, b: Key, k: u64, n: u64) -> Key {
    let f = |x: u64, y: u64| -> u64 {
        if y >= x {
            x + ((y - x) as u128 * k as u128 / n as u128) as u64
        } else {
            x - ((x - y) as u128 * k as u128 / n as u128) as u64
        }
    };
    (f(a.0, b.0), f(a.1, b.1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Cell {
    u0: u64,
    v0: u64,
    u1: u64,
    v1: u64,
}

/// Split positions tried in turn, in 32nds. Off-centre first so that boxes
/// symmetric about the real axis do not cut along it.
const SPLITS: [u64; 9] = [15, 17, 14, 18, 13, 19, 12, 20, 16];

/// Winding number of `f` around a rectangle.
pub fn winding_number(f: &dyn TargetFn, rect: &Rect, opts: &SpectralOptions) -> Result<i64> {
    let grid = Grid::new(f, *rect);
    grid.winding(
        &Cell {
            u0: 0,
            v0: 0,
            u1: UNITS,
            v1: UNITS,
        },
        opts,
    )
}

/// Winding number of a model target; sheet targets are summed over the
/// analytic pieces of the rectangle.
pub fn region_winding(model: &dyn SpectralModel, region: &SearchRegion, opts: &SpectralOptions) -> Result<i64> {
    let (_, rm) = model.constants().branch_radii();
    let t = ModelTarget {
        model,
        target: region.target,
    };
    let opts = &with_model_rate(model, opts);
    let mut total = 0;
    for p in region.pieces(rm, opts.cut_offset) {
        total += winding_number(&t, &p, opts)?;
    }
    Ok(total)
}

struct Search<'a> {
    grid: Grid<'a>,
    target: Target,
    opts: SpectralOptions,
    min_units: u64,
}

impl Search<'_> {
    fn run(&self, cell: Cell, winding: Option<i64>, nudges: usize) -> Result<Vec<ResonanceRecord>> {
        let w = match winding {
            Some(w) => w,
            None => self.grid.winding(&cell, &self.opts)?,
        };
        if w == 0 {
            return Ok(Vec::new());
        }
        if w < 0 {
            return Err(Error::Contour(format!("negative winding {w}")));
        }
        let rect = self.grid.rect_of(&cell);
        let small = (cell.u1 - cell.u0).max(cell.v1 - cell.v0) <= self.min_units;
        let try_newton = w == 1 || small || rect.size() < 1e-4 * self.grid.rect.size();
        if try_newton {
            let center = C64::new(0.5 * (rect.re[0] + rect.re[1]), 0.5 * (rect.im[0] + rect.im[1]));
            if let Some(rec) = self.newton(center, w as usize, &rect)? {
                return Ok(vec![rec]);
            }
        }
        if small {
            let center = C64::new(0.5 * (rect.re[0] + rect.re[1]), 0.5 * (rect.im[0] + rect.im[1]));
            let v = self.grid.f.eval(center)?;
            return Ok(vec![ResonanceRecord {
                xi: center,
                target: self.target,
                sheets: Vec::new(),
                multiplicity: w as usize,
                residual: v.norm(),
                scale: self.local_scale(center)?,
                classification: None,
                cluster: true,
                on_imaginary_axis: on_imaginary_axis(center),
            }]);
        }
        self.subdivide(cell, w, nudges)
    }

    fn subdivide(&self, cell: Cell, w: i64, nudges: usize) -> Result<Vec<ResonanceRecord>> {
        let mut last_err = None;
        for &s in SPLITS.iter().take(self.opts.max_nudges + 1) {
            let um = cell.u0 + (cell.u1 - cell.u0) * s / 32;
            let vm = cell.v0 + (cell.v1 - cell.v0) * s / 32;
            if um <= cell.u0 || um >= cell.u1 || vm <= cell.v0 || vm >= cell.v1 {
                break;
            }
            let kids = [
                Cell { u0: cell.u0, v0: cell.v0, u1: um, v1: vm },
                Cell { u0: um, v0: cell.v0, u1: cell.u1, v1: vm },
                Cell { u0: cell.u0, v0: vm, u1: um, v1: cell.v1 },
                Cell { u0: um, v0: vm, u1: cell.u1, v1: cell.v1 },
            ];
            let windings: Result<Vec<i64>> = kids.iter().map(|k| self.grid.winding(k, &self.opts)).collect();
            match windings {
                Ok(ws) if ws.iter().sum::<i64>() == w => {
                    let results: Vec<Result<Vec<ResonanceRecord>>> = if self.opts.parallel {
                        use rayon::prelude::*;
                        kids.par_iter()
                            .zip(ws.par_iter())
                            .map(|(k, &wk)| self.run(*k, Some(wk), nudges))
                            .collect()
                    } else {
                        kids.iter()
                            .zip(&ws)
                            .map(|(k, &wk)| self.run(*k, Some(wk), nudges))
                            .collect()
                    };
                    let mut out = Vec::new();
                    for r in results {
                        out.extend(r?);
                    }
                    return Ok(out);
                }
                Ok(ws) => {
                    last_err = Some(Error::Contour(format!(
                        "winding not additive: {} vs {:?}",
                        w, ws
                    )))
                }
                Err(e) => last_err = Some(e),
            }
        }
        Err(last_err.unwrap_or_else(|| Error::Contour("cell cannot be split".into())))
    }

    fn local_scale(&self, z: C64) -> Result<f64> {
        let rho = 1e-3 * z.norm().max(1.0);
        let mut m = 0.0f64;
        for k in 0..8 {
            let p = z + C64::from_polar(rho, PI * k as f64 / 4.0);
            if let Ok(v) = self.grid.f.eval(p) {
                m = m.max(v.norm());
            }
        }
        Ok(m)
    }

    fn newton(&self, start: C64, m: usize, rect: &Rect) -> Result<Option<ResonanceRecord>> {
        let f = self.grid.f;
        let mut z = start;
        let scale_len = z.norm().max(1.0);
        let eval = |z: C64| -> Option<C64> {
            if !rect_expanded(&self.grid.rect, 0.0).contains(z) {
                return None;
            }
            f.eval(z).ok()
        };
        let Some(mut fz) = eval(z) else {
            return Ok(None);
        };
        for _ in 0..60 {
            let h = self.opts.newton_step * z.norm().max(1.0);
            let (Some(fp), Some(fm)) = (eval(z + h), eval(z - h)) else {
                return Ok(None);
            };
            let d = (fp - fm) / (2.0 * h);
            if d == C64::new(0.0, 0.0) {
                break;
            }
            let step = fz / d * m as f64;
            let Some(fnew) = eval(z - step) else {
                return Ok(None);
            };
            z -= step;
            fz = fnew;
            if step.norm() <= 1e-14 * scale_len {
                break;
            }
        }
        if !rect_expanded(rect, 1e-9).contains(z) {
            return Ok(None);
        }
        let scale = self.local_scale(z)?;
        let residual = fz.norm();
        if !(residual <= self.opts.residual_tol * scale) {
            return Ok(None);
        }
        if m > 1 {
            // confirm multiplicity on a tiny square
            let side = (1e-6 * z.norm().max(1.0)).max(4.0 * self.opts.newton_step * z.norm().max(1.0));
            let sq = Rect::square(z, side)?;
            match winding_number(f, &sq, &self.opts) {
                Ok(wk) if wk == m as i64 => {}
                _ => return Ok(None),
            }
        }
        Ok(Some(ResonanceRecord {
            xi: z,
            target: self.target,
            sheets: match self.target {
                Target::Delta(t) => vec![t],
                Target::EntireF => Vec::new(),
            },
            multiplicity: m,
            residual,
            scale,
            classification: match self.target {
                Target::Delta(t) if t.is_physical() => Some(Classification::Eigenvalue),
                Target::Delta(_) => Some(Classification::Resonance),
                Target::EntireF => None,
            },
            cluster: false,
            on_imaginary_axis: on_imaginary_axis(z),
        }))
    }
}

fn rect_expanded(r: &Rect, frac: f64) -> Rect {
    let dx = (r.re[1] - r.re[0]) * frac;
    let dy = (r.im[1] - r.im[0]) * frac;
    Rect {
        re: [r.re[0] - dx, r.re[1] + dx],
        im: [r.im[0] - dy, r.im[1] + dy],
    }
}

/// Zeros of a function in a rectangle, sorted by `(re, im)`.
pub fn find_zeros_fn(
    f: &dyn TargetFn,
    target: Target,
    rect: &Rect,
    opts: &SpectralOptions,
) -> Result<Vec<ResonanceRecord>> {
    let min_units = ((opts.min_cell * UNITS as f64) as u64).max(64);
    let search = Search {
        grid: Grid::new(f, *rect),
        target,
        opts: *opts,
        min_units,
    };
    let mut out = search.run(
        Cell {
            u0: 0,
            v0: 0,
            u1: UNITS,
            v1: UNITS,
        },
        None,
        0,
    )?;
    sort_and_dedupe(&mut out, opts.dedupe_radius);
    Ok(out)
}

fn sort_and_dedupe(records: &mut Vec<ResonanceRecord>, radius: f64) {
    records.sort_by(|a, b| a.xi.re.total_cmp(&b.xi.re).then(a.xi.im.total_cmp(&b.xi.im)));
    let mut kept: Vec<ResonanceRecord> = Vec::with_capacity(records.len());
    for r in records.drain(..) {
        if !kept.iter().any(|k| (k.xi - r.xi).norm() <= radius) {
            kept.push(r);
        }
    }
    *records = kept;
}

/// Fills in the phase rate from the exponential type `8 H` of `F` when unset.
fn with_model_rate(model: &dyn SpectralModel, opts: &SpectralOptions) -> SpectralOptions {
    let mut o = *opts;
    if o.phase_rate.is_none() {
        o.phase_rate = Some(8.0 * model.constants().h);
    }
    o
}

/// Zeros of the region's target.
pub fn find_zeros(
    model: &dyn SpectralModel,
    region: &SearchRegion,
    opts: &SpectralOptions,
) -> Result<Vec<ResonanceRecord>> {
    let (_, rm) = model.constants().branch_radii();
    let t = ModelTarget {
        model,
        target: region.target,
    };
    let opts = &with_model_rate(model, opts);
    let mut out = Vec::new();
    for p in region.pieces(rm, opts.cut_offset) {
        out.extend(find_zeros_fn(&t, region.target, &p, opts)?);
    }
    sort_and_dedupe(&mut out, opts.dedupe_radius);
    Ok(out)
}

/// Assigns sheets to a zero of `F` by evaluating the four determinants.
pub fn classify(
    record: &ResonanceRecord,
    model: &dyn SpectralModel,
    opts: &SpectralOptions,
) -> Result<ResonanceRecord> {
    let xi = record.xi;
    let d = model.deltas(xi, CutSide::Below)?;
    let scale = d.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut sheets = Vec::new();
    for (tag, dv) in SheetTag::ALL.iter().zip(d) {
        if dv.norm() <= opts.classify_tol * scale {
            sheets.push(*tag);
            continue;
        }
        // the F zero is located less precisely than a simple zero of one
        // factor; polish on that factor before deciding
        if dv.norm() <= 1e-4 * scale {
            let f = |z: C64| model.delta(&SpectralPoint::new(z, *tag));
            if let Some(z) = polish(&f, xi, opts) {
                let v = f(z)?;
                if v.norm() <= opts.classify_tol * scale
                    && (z - xi).norm() <= 1e-6 * xi.norm().max(1.0)
                {
                    sheets.push(*tag);
                }
            }
        }
    }
    if sheets.is_empty() {
        return Err(Error::InconsistentZero(xi));
    }
    let mut out = record.clone();
    out.classification = Some(if sheets.contains(&SheetTag::PP) {
        Classification::Eigenvalue
    } else {
        Classification::Resonance
    });
    out.sheets = sheets;
    out.on_imaginary_axis = on_imaginary_axis(xi);
    Ok(out)
}

fn polish(f: &dyn Fn(C64) -> Result<C64>, start: C64, opts: &SpectralOptions) -> Option<C64> {
    let mut z = start;
    for _ in 0..30 {
        let h = opts.newton_step * z.norm().max(1.0);
        let fz = f(z).ok()?;
        let d = (f(z + h).ok()? - f(z - h).ok()?) / (2.0 * h);
        if d == C64::new(0.0, 0.0) {
            return Some(z);
        }
        let step = fz / d;
        z -= step;
        if step.norm() <= 1e-14 * z.norm().max(1.0) {
            break;
        }
    }
    Some(z)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_has_winding_one() {
        let f = |z: C64| -> Result<C64> { Ok(z) };
        let r = Rect::new(-0.5, 0.5, -0.5, 0.5).unwrap();
        assert_eq!(winding_number(&f, &r, &SpectralOptions::default()).unwrap(), 1);
    }

    #[test]
    fn cubic_roots_are_found() {
        let f = |z: C64| -> Result<C64> { Ok((z - 0.3) * (z + C64::new(0.2, 0.4)) * (z - C64::new(0.1, -0.6))) };
        let r = Rect::new(-1.0, 1.0, -1.0, 1.0).unwrap();
        let z = find_zeros_fn(&f, Target::EntireF, &r, &SpectralOptions::default()).unwrap();
        assert_eq!(z.len(), 3);
        assert!((z[0].xi - C64::new(-0.2, -0.4)).norm() < 1e-12);
    }

    #[test]
    fn double_root_reports_multiplicity_two() {
        let f = |z: C64| -> Result<C64> { Ok((z - C64::new(0.1, 0.05)).powi(2) * (z + 0.7)) };
        let r = Rect::new(-1.0, 1.0, -1.0, 1.0).unwrap();
        let z = find_zeros_fn(&f, Target::EntireF, &r, &SpectralOptions::default()).unwrap();
        assert_eq!(z.len(), 2);
        assert_eq!(z[1].multiplicity, 2);
        assert!((z[1].xi - C64::new(0.1, 0.05)).norm() < 1e-7);
    }
}
