use std::time::Instant;

use fwdvol::montecarlo::{jump_grid_warning, mc_mgf_wishart, mc_price_jump, mc_price_wishart};
use fwdvol::pricer::{convergence_table, price_option, price_with_parity, Exponent, ModelSpec, SweepKind};
use fwdvol::riccati_wishart::CMatrix;
use fwdvol::Complex64;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::{CliError, SCHEMA_VERSION};

/// A JSON document to print, plus an error that should set the exit code afterwards.
pub struct Output {
    pub value: Value,
    pub failure: Option<CliError>,
}

impl From<Value> for Output {
    fn from(value: Value) -> Self {
        Self { value, failure: None }
    }
}

pub fn price(cfg: &RunConfig) -> Result<Output, CliError> {
    let start = Instant::now();
    let basis = cfg.basis(None)?;
    let req = cfg.request(None)?;
    let r = price_with_parity(&basis, &cfg.curve, &req)?;
    Ok(json!({
        "schema_version": SCHEMA_VERSION,
        "command": "price",
        "model": req.model.name(),
        "nu": req.nu(),
        "price": r.price,
        "integrand_tail": r.integrand_tail,
        "parity_gap": r.parity_gap,
        "n_evals": r.n_evals,
        "instability_warning": r.instability_warning,
        "wall_time_s": start.elapsed().as_secs_f64(),
    })
    .into())
}

pub fn mgf(cfg: &RunConfig, lambdas: &[f64], with_mc: bool) -> Result<Output, CliError> {
    let start = Instant::now();
    let basis = cfg.basis(None)?;
    let req = cfg.request(None)?;
    let (t0, theta, nu) = (cfg.pricing.t0, cfg.pricing.theta, req.nu());
    let exponent = Exponent::new(&basis, &cfg.curve, &req.model, theta, t0)?;
    let wishart = match (&req.model, with_mc) {
        (ModelSpec::Wishart { params, .. }, true) => Some(params),
        (_, true) => return Err(CliError::validation("--mc is available for the wishart model only")),
        _ => None,
    };
    let mc_cfg = cfg.mc_config();
    let mut points = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let m = exponent.mgf(Complex64::new(nu, lambda))?;
        let mut point = json!({ "lambda": lambda, "re": m.re, "im": m.im });
        if let Some(params) = wishart {
            let u2 = CMatrix::zeros(params.rank(), params.rank());
            let est = mc_mgf_wishart(&basis, &cfg.curve, params, nu, lambda, theta, &u2, t0, &mc_cfg)?;
            let e = est.estimate;
            point["mc"] = json!({
                "re": e.mean.re,
                "im": e.mean.im,
                "std_error_re": e.std_error_re,
                "std_error_im": e.std_error_im,
                "z_re": z_score(e.mean.re - m.re, e.std_error_re),
                "z_im": z_score(e.mean.im - m.im, e.std_error_im),
                "clip_fraction": est.clip_fraction,
            });
        }
        points.push(point);
    }
    Ok(json!({
        "schema_version": SCHEMA_VERSION,
        "command": "mgf",
        "model": req.model.name(),
        "nu": nu,
        "points": points,
        "wall_time_s": start.elapsed().as_secs_f64(),
    })
    .into())
}

/// `diff / se`, or 0 when both vanish (a deterministic estimate that matches exactly).
fn z_score(diff: f64, se: f64) -> Option<f64> {
    if se > 0.0 {
        Some(diff / se)
    } else if diff.abs() <= 1e-12 {
        Some(0.0)
    } else {
        None
    }
}

pub fn table(cfg: &RunConfig, sweep: SweepKind, values: &[f64], n_list: &[usize], out: &str) -> Result<Output, CliError> {
    let start = Instant::now();
    let baseline = *n_list.iter().max().ok_or_else(|| CliError::validation("--N must not be empty"))?;
    if n_list.contains(&0) {
        return Err(CliError::validation("--N entries must be at least 1"));
    }
    let basis = cfg.basis(Some(baseline))?;
    let template = cfg.request(Some(baseline))?;
    let t = convergence_table(&basis, &cfg.curve, &template, n_list, sweep, values)?;
    std::fs::write(out, t.to_csv()).map_err(|e| CliError::validation(format!("cannot write {out}: {e}")))?;
    let failure = (!t.failures.is_empty())
        .then(|| CliError::numerical(format!("{} table cell(s) failed: {}", t.failures.len(), t.failures.join("; "))));
    Ok(Output {
        value: json!({
            "schema_version": SCHEMA_VERSION,
            "command": "table",
            "model": template.model.name(),
            "sweep": sweep,
            "baseline_n": t.baseline_n,
            "path": out,
            "failures": t.failures,
            "wall_time_s": start.elapsed().as_secs_f64(),
        }),
        failure,
    })
}

pub fn mc_compare(cfg: &RunConfig) -> Result<Output, CliError> {
    let basis = cfg.basis(None)?;
    let req = cfg.request(None)?;
    let option = cfg.option();
    let mc_cfg = cfg.mc_config();
    let mut warnings = Vec::new();

    let start = Instant::now();
    let affine = price_option(&basis, &cfg.curve, &req)?;
    let affine_time = start.elapsed().as_secs_f64();
    if affine.instability_warning {
        warnings.push("short maturity: Fourier integrand decays slowly".to_string());
    }

    let start = Instant::now();
    let (est, clip_fraction) = match &req.model {
        ModelSpec::Levy(p) | ModelSpec::Bns(p) => {
            warnings.extend(jump_grid_warning(p.beta, option.t0, mc_cfg.n_steps));
            (mc_price_jump(&basis, &cfg.curve, p, &option, &mc_cfg)?, None)
        }
        ModelSpec::Wishart { params, .. } => {
            let r = mc_price_wishart(&basis, &cfg.curve, params, &option, &mc_cfg)?;
            (r.estimate, Some(r.clip_fraction))
        }
    };
    let mc_time = start.elapsed().as_secs_f64();

    Ok(json!({
        "schema_version": SCHEMA_VERSION,
        "command": "mc_compare",
        "model": req.model.name(),
        "affine": { "price": affine.price, "wall_time_s": affine_time },
        "mc": {
            "mean": est.mean,
            "std_error": est.std_error,
            "n_paths": mc_cfg.n_paths,
            "n_steps": mc_cfg.n_steps,
            "seed": mc_cfg.seed,
            "antithetic": mc_cfg.antithetic,
            "clip_fraction": clip_fraction,
            "wall_time_s": mc_time,
        },
        "z_score": z_score(est.mean - affine.price, est.std_error),
        "wall_time_ratio": mc_time / affine_time,
        "warnings": warnings,
    })
    .into())
}
