//! Resolution of solver options: command-line flags override key=value
//! config entries, which override built-in defaults.

use crate::SolverOpts;
use flexgk::error::{Error, Result};
use flexgk::io::read_meta;
use flexgk::restart::{RestartMode, RestartPolicy};
use flexgk::solvers::{Method, RunSettings};
use flexgk::weights::WeightPolicy;

#[derive(Debug, Clone)]
pub struct Resolved {
    pub p: f64,
    pub tau: f64,
    pub k_max: usize,
    pub restart: String,
    pub restart_tol: f64,
    pub max_cycles: usize,
    pub seed: u64,
    pub warm_start: usize,
    pub irls_outer: usize,
    pub irls_inner: usize,
    pub select_by_error: bool,
    pub diagnose: bool,
    pub reorth: bool,
    pub rest1_entrywise: bool,
}

pub fn resolve(opts: &SolverOpts) -> Result<Resolved> {
    let file = match &opts.config {
        Some(path) => read_meta(path)?,
        None => Vec::new(),
    };
    let from_file = |key: &str| file.iter().find(|(k, _)| k == key).map(|(_, v)| v.clone());
    fn parsed<T: std::str::FromStr>(key: &str, v: Option<String>) -> Result<Option<T>> {
        match v {
            None => Ok(None),
            Some(s) => s.parse::<T>().map(Some).map_err(|_| {
                Error::InvalidParameter(format!("config value for '{key}' is invalid: '{s}'"))
            }),
        }
    }

    let resolved = Resolved {
        p: opts.p.or(parsed("p", from_file("p"))?).unwrap_or(1.0),
        tau: opts
            .tau
            .or(parsed("tau", from_file("tau"))?)
            .unwrap_or(1e-2),
        k_max: opts
            .k_max
            .or(parsed("k-max", from_file("k-max"))?)
            .unwrap_or(60),
        restart: opts
            .restart
            .clone()
            .or(from_file("restart"))
            .unwrap_or_else(|| "auto".to_string()),
        restart_tol: opts
            .restart_tol
            .or(parsed("restart-tol", from_file("restart-tol"))?)
            .unwrap_or(0.1),
        max_cycles: opts
            .max_cycles
            .or(parsed("max-cycles", from_file("max-cycles"))?)
            .unwrap_or(10),
        seed: opts
            .seed
            .or(parsed("seed", from_file("seed"))?)
            .unwrap_or(0),
        warm_start: opts
            .warm_start
            .or(parsed("warm-start", from_file("warm-start"))?)
            .unwrap_or(0),
        irls_outer: opts
            .irls_outer
            .or(parsed("irls-outer", from_file("irls-outer"))?)
            .unwrap_or(20),
        irls_inner: opts
            .irls_inner
            .or(parsed("irls-inner", from_file("irls-inner"))?)
            .unwrap_or(10),
        select_by_error: opts.select_by_error
            || parsed::<bool>("select-by-error", from_file("select-by-error"))?.unwrap_or(false),
        diagnose: opts.diagnose
            || parsed::<bool>("diagnose", from_file("diagnose"))?.unwrap_or(false),
        reorth: !(opts.no_reorth
            || parsed::<bool>("no-reorth", from_file("no-reorth"))?.unwrap_or(false)),
        rest1_entrywise: opts.rest1_entrywise
            || parsed::<bool>("rest1-entrywise", from_file("rest1-entrywise"))?.unwrap_or(false),
    };
    if !(resolved.p > 0.0 && resolved.p <= 2.0) {
        return Err(Error::InvalidParameter(format!(
            "--p must lie in (0, 2], got {}",
            resolved.p
        )));
    }
    if !(resolved.tau > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "--tau must be positive, got {}",
            resolved.tau
        )));
    }
    Ok(resolved)
}

pub fn restart_mode(name: &str) -> Result<RestartMode> {
    match name {
        "none" => Ok(RestartMode::None),
        "weights" => Ok(RestartMode::Weights),
        "residual" => Ok(RestartMode::Residual),
        "auto" => Ok(RestartMode::Auto),
        other => Err(Error::InvalidParameter(format!(
            "--restart must be one of none|weights|residual|auto, got '{other}'"
        ))),
    }
}

pub fn to_settings(resolved: &Resolved, method: Method) -> Result<RunSettings> {
    let mut restart = RestartPolicy::new(
        restart_mode(&resolved.restart)?,
        resolved.restart_tol,
        resolved.max_cycles,
    )?;
    restart.entrywise_drift = resolved.rest1_entrywise;
    Ok(RunSettings {
        method,
        policy: WeightPolicy::lp(resolved.p, resolved.tau)?,
        k_max: resolved.k_max,
        restart,
        seed: resolved.seed,
        select_by_error: resolved.select_by_error,
        warm_start: resolved.warm_start,
        irls_outer: resolved.irls_outer,
        irls_inner: resolved.irls_inner,
        diagnose: resolved.diagnose,
        reorth: resolved.reorth,
    })
}
