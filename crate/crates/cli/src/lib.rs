//! Batch driver for the `rayleigh` library: configuration loading, the
//! `eval`, `verify`, `roots` and `analyze` commands, and artifact writing.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use rayleigh::analysis::{
    cartwright_indices, forbidden_domain_check, growth_fit, levinson_counts, CartwrightReport,
    CountReport, ForbiddenDomainReport, GrowthReport,
};
use rayleigh::config::RunConfig;
use rayleigh::riemann::quasi_momenta;
use rayleigh::spectral::{
    classify, find_zeros, region_winding, Rect, ResonanceRecord, SearchRegion, Target,
};
use rayleigh::{SpectralModel, SpectralPoint, C64};

pub mod verify;

pub use verify::{cmd_verify, Check, VerifyReport};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("input: {0}")]
    Input(String),
    #[error(transparent)]
    Library(#[from] rayleigh::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// `2` for bad input, `1` for failures during computation.
    pub fn exit_code(&self) -> i32 {
        use rayleigh::Error as E;
        match self {
            CliError::Input(_) | CliError::Io(_) | CliError::Json(_) => 2,
            CliError::Library(
                E::Config(_)
                | E::InvalidConstants(_)
                | E::InvalidProfile(_)
                | E::InvalidTransform(_)
                | E::InvalidPotential(_),
            ) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

/// Reads a JSON config and applies `KEY=VALUE` tolerance overrides.
pub fn load_config(path: &Path, overrides: &[String]) -> Result<RunConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text, overrides)
}

pub fn parse_config(text: &str, overrides: &[String]) -> Result<RunConfig> {
    let mut cfg: RunConfig =
        serde_json::from_str(text).map_err(|e| CliError::Input(format!("config: {e}")))?;
    for o in overrides {
        cfg.tolerances
            .apply_override(o)
            .map_err(|e| CliError::Input(e.to_string()))?;
    }
    cfg.validate().map_err(|e| CliError::Input(e.to_string()))?;
    Ok(cfg)
}

/// SHA-256 of the canonical JSON form of the config, output directory
/// excluded.
pub fn config_hash(cfg: &RunConfig) -> String {
    let mut c = cfg.clone();
    c.out = String::new();
    let json = serde_json::to_string(&c).expect("config serializes");
    hex::encode(Sha256::digest(json.as_bytes()))
}

/// First line of every CSV artifact.
pub fn header_line(cfg: &RunConfig) -> String {
    format!("# config_hash={} seed={}\n", config_hash(cfg), cfg.seed)
}

fn csv_text<T: Serialize>(cfg: &RunConfig, rows: &[T], columns: &[&str]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(columns)?;
    for r in rows {
        w.serialize(r)?;
    }
    let body = String::from_utf8(w.into_inner().map_err(|e| CliError::Io(e.into_error()))?)
        .expect("csv is utf-8");
    Ok(header_line(cfg) + &body)
}

/// JSON artifacts carry the hash and seed as top-level fields.
#[derive(Debug, Clone, Serialize)]
pub struct Stamped<'a, T: Serialize> {
    pub config_hash: String,
    pub seed: u64,
    #[serde(flatten)]
    pub body: &'a T,
}

pub fn json_text<T: Serialize>(cfg: &RunConfig, body: &T) -> Result<String> {
    let s = Stamped {
        config_hash: config_hash(cfg),
        seed: cfg.seed,
        body,
    };
    Ok(serde_json::to_string_pretty(&s)? + "\n")
}

pub fn write_artifact(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, contents)?;
    Ok(path)
}

/// One row of `eval` output. Values that cannot be computed are NaN and the
/// reason is in `note`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalRow {
    pub xi_re: f64,
    pub xi_im: f64,
    pub sheet: String,
    #[serde(rename = "qP_re")]
    pub qp_re: f64,
    #[serde(rename = "qP_im")]
    pub qp_im: f64,
    #[serde(rename = "qS_re")]
    pub qs_re: f64,
    #[serde(rename = "qS_im")]
    pub qs_im: f64,
    pub delta_re: f64,
    pub delta_im: f64,
    #[serde(rename = "F_re")]
    pub f_re: f64,
    #[serde(rename = "F_im")]
    pub f_im: f64,
    pub note: String,
}

pub const EVAL_COLUMNS: [&str; 12] = [
    "xi_re", "xi_im", "sheet", "qP_re", "qP_im", "qS_re", "qS_im", "delta_re", "delta_im", "F_re",
    "F_im", "note",
];

const NAN: C64 = C64::new(f64::NAN, f64::NAN);

/// `q`, `Delta` and `F` at every configured point and sheet.
pub fn cmd_eval(cfg: &RunConfig) -> Result<Vec<EvalRow>> {
    let model = cfg.model()?;
    let c = *model.constants();
    let mut rows = Vec::new();
    for xi in cfg.eval_points() {
        let (f, f_note) = match model.entire_f(xi) {
            Ok(v) => (v, None),
            Err(e) => (NAN, Some(e.to_string())),
        };
        for &sheet in &cfg.eval.sheets {
            let point = SpectralPoint::new(xi, sheet);
            let mut notes: Vec<String> = Vec::new();
            let (qp, qs) = match quasi_momenta(&point, &c) {
                Ok(q) => (q.qp, q.qs),
                Err(e) => {
                    notes.push(e.to_string());
                    (NAN, NAN)
                }
            };
            let delta = match model.delta(&point) {
                Ok(v) => v,
                Err(e) => {
                    let m = e.to_string();
                    if !notes.contains(&m) {
                        notes.push(m);
                    }
                    NAN
                }
            };
            if rayleigh::riemann::on_imaginary_axis(xi) {
                notes.push("on imaginary axis".into());
            }
            if let Some(n) = &f_note {
                notes.push(format!("F: {n}"));
            }
            rows.push(EvalRow {
                xi_re: xi.re,
                xi_im: xi.im,
                sheet: sheet.to_string(),
                qp_re: qp.re,
                qp_im: qp.im,
                qs_re: qs.re,
                qs_im: qs.im,
                delta_re: delta.re,
                delta_im: delta.im,
                f_re: f.re,
                f_im: f.im,
                note: notes.join("; "),
            });
        }
    }
    Ok(rows)
}

pub fn eval_csv(cfg: &RunConfig, rows: &[EvalRow]) -> Result<String> {
    csv_text(cfg, rows, &EVAL_COLUMNS)
}

pub const ROOT_COLUMNS: [&str; 6] = [
    "re_xi",
    "im_xi",
    "sheet",
    "multiplicity",
    "residual",
    "classification",
];

/// Zeros of the configured target in the configured region, sorted by
/// `(re, im)`; zeros of `F` are classified by sheet.
pub fn cmd_roots(cfg: &RunConfig) -> Result<Vec<ResonanceRecord>> {
    let model = cfg.model()?;
    let region = cfg.search_region()?;
    roots_in(model.as_ref(), &region, cfg)
}

fn roots_in(model: &dyn SpectralModel, region: &SearchRegion, cfg: &RunConfig) -> Result<Vec<ResonanceRecord>> {
    let opts = cfg.spectral_options();
    let records = find_zeros(model, region, &opts)?;
    if region.target != Target::EntireF {
        return Ok(records);
    }
    records
        .into_iter()
        .map(|r| match classify(&r, model, &opts) {
            Ok(c) => Ok(c),
            Err(rayleigh::Error::InconsistentZero(_)) => Ok(r),
            Err(e) => Err(e.into()),
        })
        .collect()
}

pub fn roots_csv(cfg: &RunConfig, records: &[ResonanceRecord]) -> Result<String> {
    let rows: Vec<_> = records.iter().map(|r| r.csv_row()).collect();
    csv_text(cfg, &rows, &ROOT_COLUMNS)
}

/// Growth fits, Cartwright indices, zero counts and the forbidden-domain
/// check for one configuration.
#[derive(Debug, Clone, Serialize)]
pub struct AnalyzeReport {
    pub growth: GrowthReport,
    pub cartwright: CartwrightReport,
    /// Half-width of the square searched for zeros of `F`.
    pub search_half_width: f64,
    pub zeros: Vec<ResonanceRecord>,
    pub multiplicity_total: usize,
    pub winding_total: i64,
    pub counts: CountReport,
    pub forbidden_domain: ForbiddenDomainReport,
    pub pass: bool,
}

pub fn cmd_analyze(cfg: &RunConfig) -> Result<AnalyzeReport> {
    let model = cfg.model()?;
    let h = cfg.constants.h;
    let a = &cfg.analysis;
    let radii: Vec<f64> = a.radii.iter().map(|r| r / h).collect();
    let growth = growth_fit(model.as_ref(), &a.angles, &radii)?;
    let windows: Vec<f64> = a.poisson_windows.iter().map(|t| t / h).collect();
    let cartwright = cartwright_indices(model.as_ref(), &radii, &windows)?;

    let w = a.zero_search_half_width / h;
    let region = SearchRegion::new(Rect::new(-w, w, -w, w)?, Target::EntireF);
    let zeros = roots_in(model.as_ref(), &region, cfg)?;
    let winding_total = region_winding(model.as_ref(), &region, &cfg.spectral_options())?;
    let multiplicity_total = zeros.iter().map(|z| z.multiplicity).sum();

    let count_radii: Vec<f64> = a.count_radii.iter().map(|r| r / h).collect();
    let counts = levinson_counts(&zeros, &count_radii, h);
    let xis: Vec<C64> = zeros.iter().map(|z| z.xi).collect();
    let forbidden_domain = forbidden_domain_check(&xis, h);
    let pass = growth.pass
        && cartwright.pass
        && counts.pass
        && forbidden_domain.pass
        && winding_total == multiplicity_total as i64;
    Ok(AnalyzeReport {
        growth,
        cartwright,
        search_half_width: w,
        zeros,
        multiplicity_total,
        winding_total,
        counts,
        forbidden_domain,
        pass,
    })
}

#[derive(Debug, Clone, Serialize)]
struct GrowthSampleRow {
    angle: f64,
    radius: f64,
    xi_re: f64,
    xi_im: f64,
    log_abs_f: f64,
}

#[derive(Debug, Clone, Serialize)]
struct CountCsvRow {
    radius: f64,
    n_plus: usize,
    n_minus: usize,
    n_axis: usize,
    bound: f64,
    exceptions_delta_0_1: usize,
    exceptions_delta_0_2: usize,
}

/// The CSV side tables of an analysis: ray samples and count curves.
pub fn analyze_tables(cfg: &RunConfig, report: &AnalyzeReport) -> Result<(String, String)> {
    let samples: Vec<GrowthSampleRow> = report
        .growth
        .rays
        .iter()
        .flat_map(|r| {
            r.samples.iter().map(move |s| GrowthSampleRow {
                angle: r.angle,
                radius: s.radius,
                xi_re: s.xi_re,
                xi_im: s.xi_im,
                log_abs_f: s.log_abs_f,
            })
        })
        .collect();
    let counts: Vec<CountCsvRow> = report
        .counts
        .rows
        .iter()
        .map(|r| CountCsvRow {
            radius: r.radius,
            n_plus: r.n_plus,
            n_minus: r.n_minus,
            n_axis: r.n_axis,
            bound: r.bound,
            exceptions_delta_0_1: r.sector_exceptions.first().copied().unwrap_or(0),
            exceptions_delta_0_2: r.sector_exceptions.get(1).copied().unwrap_or(0),
        })
        .collect();
    Ok((
        csv_text(cfg, &samples, &["angle", "radius", "xi_re", "xi_im", "log_abs_f"])?,
        csv_text(
            cfg,
            &counts,
            &[
                "radius",
                "n_plus",
                "n_minus",
                "n_axis",
                "bound",
                "exceptions_delta_0_1",
                "exceptions_delta_0_2",
            ],
        )?,
    ))
}
