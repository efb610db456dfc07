//! Run configuration: strict JSON with dotted-path overrides.

use fwdvol::curve::{DriftCurve, NelsonSiegelCurve};
use fwdvol::montecarlo::McConfig;
use fwdvol::pricer::{FourierGrid, ModelSpec, OptionKind, OptionSpec, PricingRequest};
use fwdvol::riccati_jump::{DriftConvention, JumpModelParams};
use fwdvol::riccati_wishart::WishartModelParams;
use fwdvol::BasisSystem;
use serde::Deserialize;
use serde_json::Value;

use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    #[serde(default)]
    pub curve: NelsonSiegelCurve,
    #[serde(default)]
    pub basis: BasisConfig,
    pub pricing: PricingConfig,
    #[serde(default)]
    pub mc: McBlock,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ModelConfig {
    Levy(LevyBlock),
    Bns(BnsBlock),
    Wishart(WishartBlock),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevyBlock {
    pub n: usize,
    pub beta: f64,
    pub d: Option<Vec<f64>>,
    pub y0: Option<Vec<f64>>,
    #[serde(default)]
    pub h0: DriftCurve,
    #[serde(default)]
    pub drift: DriftConvention,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BnsBlock {
    pub n: usize,
    pub beta: f64,
    pub d: Option<Vec<f64>>,
    pub a: Option<Vec<f64>>,
    pub y0: Option<Vec<f64>>,
    #[serde(default)]
    pub h0: DriftCurve,
    #[serde(default)]
    pub drift: DriftConvention,
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WishartPreset {
    #[default]
    Standard,
    MatrixScheme,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WishartBlock {
    pub rank: usize,
    #[serde(default)]
    pub preset: WishartPreset,
    pub dof: Option<f64>,
    pub q: Option<Vec<f64>>,
    pub a: Option<Vec<f64>>,
    pub d: Option<Vec<f64>>,
    pub y0: Option<Vec<f64>>,
    #[serde(default)]
    pub h0: DriftCurve,
    #[serde(default = "no_drift")]
    pub drift: DriftConvention,
    /// Euler steps for the matrix Riccati equation; default scales with the horizon.
    pub steps: Option<usize>,
}

fn no_drift() -> DriftConvention {
    DriftConvention::None
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisConfig {
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Defaults to the model rank.
    pub n_max: Option<usize>,
    #[serde(default = "default_quad_order")]
    pub quad_order: usize,
    #[serde(default = "default_panel_length")]
    pub panel_length: f64,
}

impl Default for BasisConfig {
    fn default() -> Self {
        Self { alpha: default_alpha(), n_max: None, quad_order: default_quad_order(), panel_length: default_panel_length() }
    }
}

fn default_alpha() -> f64 {
    0.1
}
fn default_quad_order() -> usize {
    32
}
fn default_panel_length() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PricingConfig {
    #[serde(rename = "T0")]
    pub t0: f64,
    pub theta: f64,
    #[serde(rename = "K")]
    pub strike: f64,
    #[serde(default = "default_kind")]
    pub kind: OptionKind,
    pub nu: Option<f64>,
    #[serde(default = "default_lambda_max")]
    pub lambda_max: f64,
    #[serde(default = "default_lambda_nodes")]
    pub lambda_nodes: usize,
    #[serde(default = "default_panels")]
    pub panels: usize,
}

fn default_kind() -> OptionKind {
    OptionKind::Call
}
fn default_lambda_max() -> f64 {
    FourierGrid::default().lambda_max
}
fn default_lambda_nodes() -> usize {
    FourierGrid::default().lambda_nodes
}
fn default_panels() -> usize {
    FourierGrid::default().panels
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McBlock {
    #[serde(default = "default_paths")]
    pub paths: usize,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "yes")]
    pub antithetic: bool,
    #[serde(default = "yes")]
    pub clip_psd: bool,
}

impl Default for McBlock {
    fn default() -> Self {
        Self { paths: default_paths(), steps: default_steps(), seed: default_seed(), antithetic: true, clip_psd: true }
    }
}

fn default_paths() -> usize {
    100_000
}
fn default_steps() -> usize {
    252
}
fn default_seed() -> u64 {
    42
}
fn yes() -> bool {
    true
}

/// Reads the config file, applies `section.key=value` overrides and parses strictly.
pub fn load(path: &str, overrides: &[(String, String)]) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::validation(format!("cannot read {path}: {e}")))?;
    let mut value: Value =
        serde_json::from_str(&text).map_err(|e| CliError::validation(format!("{path}: {e}")))?;
    for (key, raw) in overrides {
        set_path(&mut value, key, parse_scalar(raw))?;
    }
    let cfg: RunConfig = serde_json::from_value(value).map_err(|e| CliError::validation(format!("config: {e}")))?;
    cfg.validate()?;
    Ok(cfg)
}

/// JSON literal if it parses as one, otherwise a bare string.
fn parse_scalar(raw: &str) -> Value {
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

fn set_path(root: &mut Value, key: &str, value: Value) -> Result<(), CliError> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::validation(format!("malformed override key `{key}`")));
    }
    let mut node = root;
    for part in &parts[..parts.len() - 1] {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| CliError::validation(format!("override `{key}`: `{part}` is not inside an object")))?;
        node = obj.entry(part.to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    let obj = node
        .as_object_mut()
        .ok_or_else(|| CliError::validation(format!("override `{key}`: parent is not an object")))?;
    obj.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

fn coeffs(name: &str, given: &Option<Vec<f64>>, default: Vec<f64>, n: usize) -> Result<Vec<f64>, CliError> {
    match given {
        None => Ok(default),
        Some(v) if v.len() >= n => Ok(v[..n].to_vec()),
        Some(v) => Err(CliError::validation(format!("model.{name} has {} entries, rank {n} needs {n}", v.len()))),
    }
}

impl ModelConfig {
    pub fn rank(&self) -> usize {
        match self {
            ModelConfig::Levy(b) => b.n,
            ModelConfig::Bns(b) => b.n,
            ModelConfig::Wishart(b) => b.rank,
        }
    }

    /// Model at rank `n` (defaults to the configured rank); coefficient lists may be longer than `n`.
    pub fn build(&self, n: Option<usize>) -> Result<ModelSpec, CliError> {
        let n = n.unwrap_or(self.rank());
        let spec = match self {
            ModelConfig::Levy(b) => {
                let base = JumpModelParams::levy(n, b.beta);
                ModelSpec::Levy(JumpModelParams {
                    d_coeffs: coeffs("d", &b.d, base.d_coeffs.clone(), n)?,
                    y0_coeffs: coeffs("y0", &b.y0, base.y0_coeffs.clone(), n)?,
                    h0: b.h0,
                    drift: b.drift,
                    ..base
                })
            }
            ModelConfig::Bns(b) => {
                let base = JumpModelParams::bns(n, b.beta);
                ModelSpec::Bns(JumpModelParams {
                    d_coeffs: coeffs("d", &b.d, base.d_coeffs.clone(), n)?,
                    a_coeffs: coeffs("a", &b.a, base.a_coeffs.clone(), n)?,
                    y0_coeffs: coeffs("y0", &b.y0, base.y0_coeffs.clone(), n)?,
                    h0: b.h0,
                    drift: b.drift,
                    ..base
                })
            }
            ModelConfig::Wishart(b) => {
                let base = match b.preset {
                    WishartPreset::Standard => WishartModelParams::standard(n),
                    WishartPreset::MatrixScheme => WishartModelParams::matrix_scheme(n),
                };
                let params = WishartModelParams {
                    dof: b.dof.unwrap_or(base.dof),
                    q_coeffs: coeffs("q", &b.q, base.q_coeffs.clone(), n)?,
                    a_coeffs: coeffs("a", &b.a, base.a_coeffs.clone(), n)?,
                    d_coeffs: coeffs("d", &b.d, base.d_coeffs.clone(), n)?,
                    y0_eigs: coeffs("y0", &b.y0, base.y0_eigs.clone(), n)?,
                    h0: b.h0,
                    drift: b.drift,
                };
                ModelSpec::Wishart { params, steps: b.steps }
            }
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        self.curve.validate()?;
        self.basis(None)?;
        self.request(None)?.validate()?;
        self.mc_config().validate()?;
        Ok(())
    }

    pub fn basis(&self, rank: Option<usize>) -> Result<BasisSystem, CliError> {
        let n_max = self.basis.n_max.unwrap_or(rank.unwrap_or(self.model.rank()));
        Ok(BasisSystem::with_quadrature(self.basis.alpha, n_max, self.basis.quad_order, self.basis.panel_length)?)
    }

    pub fn option(&self) -> OptionSpec {
        let p = &self.pricing;
        OptionSpec { t0: p.t0, theta: p.theta, strike: p.strike, kind: p.kind }
    }

    pub fn request(&self, rank: Option<usize>) -> Result<PricingRequest, CliError> {
        let p = &self.pricing;
        Ok(PricingRequest {
            model: self.model.build(rank)?,
            option: self.option(),
            nu: p.nu,
            grid: FourierGrid { lambda_max: p.lambda_max, lambda_nodes: p.lambda_nodes, panels: p.panels },
        })
    }

    pub fn mc_config(&self) -> McConfig {
        let m = &self.mc;
        McConfig { n_paths: m.paths, n_steps: m.steps, seed: m.seed, antithetic: m.antithetic, clip_psd: m.clip_psd }
    }
}
