//! Run configuration: the medium, the evaluation and search settings, the
//! tolerances and the seed, with builders for the library objects.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::medium::{
    BoundaryValues, ConstantProfile, ElasticProfile, HalfSpaceConstants, PolynomialBumpProfile,
    PotentialShape, PotentialSpec, SplineProfile, TransformData,
};
use crate::model::SpectralModel;
use crate::ode::OdeOptions;
use crate::pm_transform::{TransformedModel, VolterraMode, VolterraOptions};
use crate::rayleigh_ode::{DisplacementModel, JostMethod, PropagationOptions};
use crate::riemann::{SheetTag, C64};
use crate::spectral::{Rect, SearchRegion, SpectralOptions, Target};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "kebab-case")]
pub enum ProfileConfig {
    #[default]
    Constant,
    PolynomialBump {
        mu_amplitude: f64,
        lambda_amplitude: f64,
        #[serde(default = "default_power")]
        power: i32,
    },
    #[serde(rename = "table+spline")]
    TableSpline {
        z: Vec<f64>,
        mu: Vec<f64>,
        lambda: Vec<f64>,
    },
}

fn default_power() -> i32 {
    3
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformConfig {
    #[serde(rename = "G11H")]
    pub g11h: f64,
    #[serde(rename = "G12H")]
    pub g12h: f64,
    #[serde(rename = "G21H")]
    pub g21h: f64,
    #[serde(rename = "G22H")]
    pub g22h: f64,
}

impl Default for TransformConfig {
    fn default() -> Self {
        Self {
            g11h: 1.0,
            g12h: 0.0,
            g21h: 0.0,
            g22h: 1.0,
        }
    }
}

impl TransformConfig {
    pub fn det(&self) -> f64 {
        self.g11h * self.g22h - self.g12h * self.g21h
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "kebab-case")]
pub enum PotentialShapeConfig {
    Zero,
    /// `amplitude * 4 (x - start)(H - x) / (H - start)^2` on `[start, H]`.
    Bump { start: f64, amplitude: [[f64; 2]; 2] },
    /// Coefficients in increasing degree per component.
    Polynomial { coefficients: [[Vec<f64>; 2]; 2] },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialConfig {
    #[serde(flatten)]
    pub shape: PotentialShapeConfig,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Whether every component is required to be sign-definite near `H`.
    #[serde(default)]
    pub generic: bool,
}

fn default_epsilon() -> f64 {
    0.1
}

impl Default for PotentialConfig {
    fn default() -> Self {
        Self {
            shape: PotentialShapeConfig::Zero,
            epsilon: default_epsilon(),
            generic: false,
        }
    }
}

/// Which frame evaluates the sheet determinants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    /// Displacement frame when `V = 0`, transformed frame otherwise.
    #[default]
    Auto,
    Displacement,
    Transformed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalConfig {
    /// `[re, im]` pairs.
    #[serde(default)]
    pub points: Vec<[f64; 2]>,
    #[serde(default = "all_sheets")]
    pub sheets: Vec<SheetTag>,
}

fn all_sheets() -> Vec<SheetTag> {
    SheetTag::ALL.to_vec()
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            points: Vec::new(),
            sheets: all_sheets(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionConfig {
    pub re: [f64; 2],
    pub im: [f64; 2],
    /// A sheet tag such as `"++"`, or `"all"` for `F`.
    #[serde(with = "target_serde")]
    pub target: Target,
}

impl Default for RegionConfig {
    fn default() -> Self {
        Self {
            re: [0.8, 1.4],
            im: [-0.1, 0.1],
            target: Target::Delta(SheetTag::PP),
        }
    }
}

mod target_serde {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(t: &Target, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(t)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Target, D::Error> {
        let s = String::deserialize(d)?;
        parse_target(&s).map_err(serde::de::Error::custom)
    }
}

pub fn parse_target(s: &str) -> Result<Target> {
    if s == "all" || s == "F" {
        Ok(Target::EntireF)
    } else {
        Ok(Target::Delta(s.parse()?))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Ray angles for the growth fits.
    pub angles: Vec<f64>,
    /// Radii (in units of `1/H`) sampled along each ray.
    pub radii: Vec<f64>,
    pub poisson_windows: Vec<f64>,
    /// Half-width (in units of `1/H`) of the square searched for zeros of `F`.
    pub zero_search_half_width: f64,
    /// Radii (in units of `1/H`) at which zeros are counted.
    pub count_radii: Vec<f64>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            angles: vec![0.0, std::f64::consts::FRAC_PI_4, std::f64::consts::FRAC_PI_2],
            radii: (2..=16).map(f64::from).collect(),
            poisson_windows: vec![10.0, 20.0, 40.0],
            zero_search_half_width: 20.0,
            count_radii: (1..=20).map(f64::from).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureConfig {
    pub panels: usize,
    pub nodes: usize,
    #[serde(with = "mode_serde")]
    pub mode: VolterraMode,
    pub crossover: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        let v = VolterraOptions::default();
        Self {
            panels: v.panels,
            nodes: v.nodes,
            mode: v.mode,
            crossover: v.crossover,
        }
    }
}

mod mode_serde {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &VolterraMode, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(match m {
            VolterraMode::Iterates => "iterates",
            VolterraMode::Ode => "ode",
            VolterraMode::Auto => "auto",
        })
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<VolterraMode, D::Error> {
        match String::deserialize(d)?.as_str() {
            "iterates" => Ok(VolterraMode::Iterates),
            "ode" => Ok(VolterraMode::Ode),
            "auto" => Ok(VolterraMode::Auto),
            other => Err(serde::de::Error::custom(format!("unknown mode {other:?}"))),
        }
    }
}

/// Named tolerances; every one can be overridden by key.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub ode_rtol: f64,
    pub ode_atol: f64,
    pub volterra_tol: f64,
    pub newton_tol: f64,
    pub residual_tol: f64,
    pub newton_step: f64,
    pub dedupe_radius: f64,
    pub classify_tol: f64,
    pub min_cell: f64,
    pub cut_offset: f64,
    /// Relative tolerance of the algebraic identities checked by `verify`.
    pub identity: f64,
    /// Relative tolerance of cross-method comparisons checked by `verify`.
    pub cross_method: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        let s = SpectralOptions::default();
        let o = PropagationOptions::default().ode;
        Self {
            ode_rtol: o.rtol,
            ode_atol: o.atol,
            volterra_tol: VolterraOptions::default().tolerance,
            newton_tol: s.newton_tol,
            residual_tol: s.residual_tol,
            newton_step: s.newton_step,
            dedupe_radius: s.dedupe_radius,
            classify_tol: s.classify_tol,
            min_cell: s.min_cell,
            cut_offset: s.cut_offset,
            identity: 1e-10,
            cross_method: 1e-8,
        }
    }
}

impl Tolerances {
    pub const KEYS: [&'static str; 12] = [
        "ode_rtol",
        "ode_atol",
        "volterra_tol",
        "newton_tol",
        "residual_tol",
        "newton_step",
        "dedupe_radius",
        "classify_tol",
        "min_cell",
        "cut_offset",
        "identity",
        "cross_method",
    ];

    fn slot(&mut self, key: &str) -> Option<&mut f64> {
        Some(match key {
            "ode_rtol" => &mut self.ode_rtol,
            "ode_atol" => &mut self.ode_atol,
            "volterra_tol" => &mut self.volterra_tol,
            "newton_tol" => &mut self.newton_tol,
            "residual_tol" => &mut self.residual_tol,
            "newton_step" => &mut self.newton_step,
            "dedupe_radius" => &mut self.dedupe_radius,
            "classify_tol" => &mut self.classify_tol,
            "min_cell" => &mut self.min_cell,
            "cut_offset" => &mut self.cut_offset,
            "identity" => &mut self.identity,
            "cross_method" => &mut self.cross_method,
            _ => return None,
        })
    }

    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        let slot = self
            .slot(key)
            .ok_or_else(|| Error::Config(format!("unknown tolerance {key:?}; known: {:?}", Self::KEYS)))?;
        *slot = value;
        self.validate()
    }

    /// Applies a `KEY=VALUE` override.
    pub fn apply_override(&mut self, spec: &str) -> Result<()> {
        let (k, v) = spec
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override {spec:?} is not KEY=VALUE")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("override {spec:?}: value is not a number")))?;
        self.set(k.trim(), v)
    }

    pub fn validate(&self) -> Result<()> {
        let mut copy = *self;
        for key in Self::KEYS {
            let v = *copy.slot(key).expect("known key");
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("tolerance {key} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

fn default_seed() -> u64 {
    0
}

fn default_out() -> String {
    "out".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub constants: HalfSpaceConstants,
    #[serde(default)]
    pub profile: ProfileConfig,
    #[serde(default)]
    pub transform: TransformConfig,
    #[serde(default)]
    pub potential: PotentialConfig,
    #[serde(default)]
    pub frame: Frame,
    #[serde(default)]
    pub eval: EvalConfig,
    #[serde(default)]
    pub region: RegionConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out: String,
}

impl RunConfig {
    /// The unit homogeneous medium with defaults everywhere else.
    pub fn homogeneous(constants: HalfSpaceConstants) -> Self {
        Self {
            constants,
            profile: ProfileConfig::Constant,
            transform: TransformConfig::default(),
            potential: PotentialConfig::default(),
            frame: Frame::Auto,
            eval: EvalConfig::default(),
            region: RegionConfig::default(),
            analysis: AnalysisConfig::default(),
            tolerances: Tolerances::default(),
            quadrature: QuadratureConfig::default(),
            seed: default_seed(),
            out: default_out(),
        }
    }

    /// Checks everything that does not need a model.
    pub fn validate(&self) -> Result<()> {
        self.constants.validate()?;
        self.tolerances.validate()?;
        let q = &self.quadrature;
        if q.panels == 0 || q.nodes < 2 || !(q.crossover > 0.0) {
            return Err(Error::Config("quadrature needs panels >= 1, nodes >= 2, crossover > 0".into()));
        }
        Rect::new(self.region.re[0], self.region.re[1], self.region.im[0], self.region.im[1])?;
        Ok(())
    }

    pub fn profile(&self) -> Result<Arc<dyn ElasticProfile>> {
        let c = self.constants;
        Ok(match &self.profile {
            ProfileConfig::Constant => Arc::new(ConstantProfile::new(c)),
            ProfileConfig::PolynomialBump {
                mu_amplitude,
                lambda_amplitude,
                power,
            } => Arc::new(PolynomialBumpProfile::new(c, *mu_amplitude, *lambda_amplitude, *power)?),
            ProfileConfig::TableSpline { z, mu, lambda } => {
                Arc::new(SplineProfile::new(c, z.clone(), mu.clone(), lambda.clone())?)
            }
        })
    }

    pub fn transform(&self) -> Result<TransformData> {
        let t = &self.transform;
        TransformData::new([t.g11h, t.g12h, t.g21h, t.g22h], &self.constants)
    }

    pub fn potential(&self) -> Result<PotentialSpec> {
        let h = self.constants.h;
        let mut spec = match &self.potential.shape {
            PotentialShapeConfig::Zero => PotentialSpec::zero(h),
            PotentialShapeConfig::Bump { start, amplitude } => PotentialSpec::bump(h, *start, *amplitude)?,
            PotentialShapeConfig::Polynomial { coefficients } => PotentialSpec {
                shape: PotentialShape::Polynomial {
                    coefficients: coefficients.clone(),
                },
                h,
                epsilon: default_epsilon(),
            },
        };
        spec.epsilon = self.potential.epsilon;
        Ok(spec)
    }

    pub fn resolved_frame(&self) -> Frame {
        match self.frame {
            Frame::Auto => {
                if matches!(self.potential.shape, PotentialShapeConfig::Zero) {
                    Frame::Displacement
                } else {
                    Frame::Transformed
                }
            }
            f => f,
        }
    }

    pub fn propagation_options(&self) -> PropagationOptions {
        PropagationOptions {
            method: JostMethod::Auto,
            ode: OdeOptions {
                rtol: self.tolerances.ode_rtol,
                atol: self.tolerances.ode_atol,
                ..OdeOptions::default()
            },
        }
    }

    pub fn volterra_options(&self) -> VolterraOptions {
        let d = VolterraOptions::default();
        VolterraOptions {
            mode: self.quadrature.mode,
            panels: self.quadrature.panels,
            nodes: self.quadrature.nodes,
            tolerance: self.tolerances.volterra_tol,
            crossover: self.quadrature.crossover,
            ..d
        }
    }

    pub fn spectral_options(&self) -> SpectralOptions {
        let t = &self.tolerances;
        SpectralOptions {
            min_cell: t.min_cell,
            newton_tol: t.newton_tol,
            residual_tol: t.residual_tol,
            newton_step: t.newton_step,
            dedupe_radius: t.dedupe_radius,
            classify_tol: t.classify_tol,
            cut_offset: t.cut_offset,
            ..SpectralOptions::default()
        }
    }

    pub fn displacement_model(&self) -> Result<DisplacementModel> {
        Ok(DisplacementModel::new(self.profile()?).with_options(self.propagation_options()))
    }

    pub fn transformed_model(&self) -> Result<TransformedModel> {
        let profile = self.profile()?;
        TransformedModel::new(
            self.constants,
            BoundaryValues::from_profile(profile.as_ref()),
            self.transform()?,
            self.potential()?,
            self.volterra_options(),
        )
    }

    /// The model selected by [`RunConfig::resolved_frame`].
    pub fn model(&self) -> Result<Box<dyn SpectralModel>> {
        self.validate()?;
        Ok(match self.resolved_frame() {
            Frame::Transformed => Box::new(self.transformed_model()?),
            _ => Box::new(self.displacement_model()?),
        })
    }

    pub fn search_region(&self) -> Result<SearchRegion> {
        let r = &self.region;
        Ok(SearchRegion::new(Rect::new(r.re[0], r.re[1], r.im[0], r.im[1])?, r.target))
    }

    pub fn eval_points(&self) -> Vec<C64> {
        self.eval.points.iter().map(|p| C64::new(p[0], p[1])).collect()
    }
}
