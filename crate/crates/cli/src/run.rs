//! Dispatch a resolved config to the harness and write its report.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;

use thiserror::Error;
use truncsde::coefficients::{
    check_dissipativity, default_grid, generic_truncation, recommended_truncation, ModelSpec, RadiusVariant,
    TruncationConfig,
};
use truncsde::harness::{self, report, ComparisonSpec, ConvergenceSpec, ErrorMetric, PositivitySpec};
use truncsde::schemes::{SchemeId, SchemeParams};
use truncsde::SdeError;

use crate::config::{Command, ExperimentConfig};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Sde(#[from] SdeError),
    #[error("cannot write {path}: {source}")]
    Output { path: String, source: std::io::Error },
    #[error("every cell failed; first failure: {0}")]
    AllFailed(String),
}

pub fn run(cfg: &ExperimentConfig) -> Result<(), RunError> {
    let model = cfg.model.build()?;
    let params = scheme_params(cfg, &model)?;
    let mut out = Vec::new();
    let workers = cfg.threads.unwrap_or(0);
    match cfg.command {
        Command::Check => check(cfg, &model, &mut out),
        Command::Simulate => {
            let scheme = cfg.schemes[0];
            let dt = cfg.dt[0];
            let sampling = cfg.sampling();
            let paths = harness::with_workers(workers, || {
                harness::simulate_paths(&model, scheme, &params[&scheme], dt, &sampling)
            })??;
            let failed = paths.iter().filter(|p| p.blown_up()).count();
            if failed > 0 {
                eprintln!("warning: {failed} of {} paths failed and stop early", paths.len());
            }
            report::write_paths(&paths, dt, &mut out)?;
        }
        Command::Convergence => {
            let spec = ConvergenceSpec {
                params,
                ref_mode: cfg.ref_mode,
                metric: ErrorMetric::for_model(&model),
                sampling: cfg.sampling(),
                ..ConvergenceSpec::new(model.clone(), cfg.schemes.clone(), cfg.dt.clone())
            };
            let rep = harness::with_workers(workers, || harness::run_convergence(&spec))??;
            for c in rep.cells.iter().filter(|c| c.failure.is_some()) {
                eprintln!("warning: {} at dt = {}: {}", c.scheme, c.dt, c.failure.as_deref().unwrap_or(""));
            }
            report::write_rows(&report::convergence_rows(&rep), &mut out)?;
            emit(cfg, &out)?;
            if rep.all_failed() {
                let first = rep.cells.iter().find_map(|c| c.failure.clone()).unwrap_or_default();
                return Err(RunError::AllFailed(first));
            }
            return Ok(());
        }
        Command::Positivity => {
            if cfg.schemes != [SchemeId::Tem] {
                eprintln!("warning: positivity always measures the TEM iterate; the scheme list is ignored");
            }
            let spec = PositivitySpec {
                model: model.clone(),
                params: params.get(&SchemeId::Tem).copied().unwrap_or(tem_params(cfg, &model)?),
                dt_list: cfg.dt.clone(),
                sampling: cfg.sampling(),
            };
            let est = harness::with_workers(workers, || harness::run_positivity(&spec))??;
            report::write_rows(&report::positivity_rows(&est), &mut out)?;
        }
        Command::Compare => {
            let spec = ComparisonSpec {
                params,
                ref_mode: cfg.ref_mode,
                metric: ErrorMetric::for_model(&model),
                sampling: cfg.sampling(),
                ..ComparisonSpec::new(model.clone(), cfg.schemes.clone(), cfg.dt[0])
            };
            let rep = harness::with_workers(workers, || harness::run_comparison(&spec))??;
            for r in rep.rows.iter().filter(|r| r.failure.is_some()) {
                eprintln!("warning: {}: {}", r.scheme, r.failure.as_deref().unwrap_or(""));
            }
            report::write_rows(&report::comparison_rows(&rep), &mut out)?;
            emit(cfg, &out)?;
            if !rep.rows.is_empty() && rep.rows.iter().all(|r| r.error.is_none()) {
                let first = rep.rows.iter().find_map(|r| r.failure.clone()).unwrap_or_default();
                return Err(RunError::AllFailed(first));
            }
            return Ok(());
        }
    }
    emit(cfg, &out)
}

fn emit(cfg: &ExperimentConfig, bytes: &[u8]) -> Result<(), RunError> {
    match &cfg.output {
        Some(path) => std::fs::write(path, bytes).map_err(|source| RunError::Output {
            path: path.display().to_string(),
            source,
        }),
        None => std::io::stdout().write_all(bytes).map_err(|source| RunError::Output {
            path: "stdout".into(),
            source,
        }),
    }
}

/// TEM/TMil radius: the model's corollary law, or the generic theorem law
/// with a warning when the corollary's precondition fails, then the
/// config's `l1`/`gamma` overrides.
fn truncation_for(cfg: &ExperimentConfig, model: &ModelSpec, scheme: SchemeId) -> Result<TruncationConfig, SdeError> {
    let base = match recommended_truncation(model, scheme, RadiusVariant::Convergence) {
        Ok(t) => t,
        Err(SdeError::Precondition(msg)) => {
            eprintln!("warning: {msg}; {scheme} falls back to the generic truncation exponent");
            generic_truncation(model, scheme, RadiusVariant::Convergence)?
        }
        Err(e) => return Err(e),
    };
    TruncationConfig::two_sided(cfg.l1.unwrap_or(base.l1), cfg.gamma.unwrap_or(base.gamma))
}

fn tem_params(cfg: &ExperimentConfig, model: &ModelSpec) -> Result<SchemeParams, SdeError> {
    Ok(SchemeParams::with_truncation(truncation_for(cfg, model, SchemeId::Tem)?))
}

fn scheme_params(cfg: &ExperimentConfig, model: &ModelSpec) -> Result<BTreeMap<SchemeId, SchemeParams>, SdeError> {
    let mut out = BTreeMap::new();
    for &s in &cfg.schemes {
        let p = match s {
            SchemeId::Tem | SchemeId::Tmil if cfg.command != Command::Check => {
                SchemeParams::with_truncation(truncation_for(cfg, model, s)?)
            }
            _ => SchemeParams::default(),
        };
        out.insert(s, p);
    }
    Ok(out)
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "OK"
    } else {
        "FAILED"
    }
}

fn check(cfg: &ExperimentConfig, model: &ModelSpec, out: &mut Vec<u8>) {
    let mut s = String::new();
    let _ = writeln!(s, "model: {}", cfg.model.family());
    if let Some(p) = model.three_halves_params() {
        let lambda = p.lambda();
        let _ = writeln!(s, "λ = 2 + 2c1/σ² = {lambda}");
        let _ = writeln!(s, "TEM corollary (λ > 6): {}", verdict(p.tem_ok()));
        let _ = writeln!(s, "TMil corollary (λ > 8): {}", verdict(p.tmil_ok()));
    }
    if let Some(p) = model.ait_params() {
        let (lhs, rhs) = (p.kappa + 1.0, 2.0 * p.theta);
        let rel = if p.is_valid() { ">" } else { "<=" };
        let _ = writeln!(s, "κ+1 = {lhs} {rel} 2θ = {rhs}: validity {}", verdict(p.is_valid()));
    }
    if let Some(p) = model.cir_params() {
        let w = p.varpi();
        let rel = if p.lamperti_ok() { ">" } else { "<=" };
        let _ = writeln!(s, "ϖ = 2b1b2/σ² = {w} {rel} 5: Lamperti corollary {}", verdict(p.lamperti_ok()));
        let _ = writeln!(s, "Feller (ϖ > 1): {}", verdict(p.feller()));
        let _ = writeln!(s, "â = (4b1b2 − σ²)/8 = {}", p.a_hat());
        let _ = writeln!(s, "b̂ = −b1/2 = {}", p.b_hat());
    }
    let e = model.exponents();
    let _ = writeln!(
        s,
        "exponents: α = {}, β = {}, α̂ = {}, β̂ = {}",
        e.alpha, e.beta, e.alpha_hat, e.beta_hat
    );
    let q0 = 2.0;
    let d = check_dissipativity(model, q0, &default_grid(), None);
    let _ = write!(
        s,
        "dissipativity (q0 = {q0}): max 2f' + q0·g'² = {} at x = {}",
        d.max_value, d.argmax
    );
    match (d.bound, d.bound_holds) {
        (Some(k), Some(ok)) => {
            let _ = writeln!(s, ", bound K = {k}: {}", verdict(ok));
        }
        _ => {
            let _ = writeln!(s, ", no closed-form bound");
        }
    }
    for scheme in [SchemeId::Tem, SchemeId::Tmil] {
        match truncation_for(cfg, model, scheme) {
            Ok(t) => {
                let _ = writeln!(s, "{scheme} truncation: l1 = {}, γ = {}", t.l1, t.gamma);
            }
            Err(e) => {
                let _ = writeln!(s, "{scheme} truncation: {e}");
            }
        }
    }
    match model.drift_derivative_sup() {
        Some(k) if k > 0.0 => {
            let _ = writeln!(s, "BEM needs dt < 1/sup f' = {}", 1.0 / k);
        }
        Some(k) => {
            let _ = writeln!(s, "BEM: sup f' = {k} <= 0, any dt");
        }
        None => {
            let _ = writeln!(s, "BEM: no bound on f'");
        }
    }
    out.extend_from_slice(s.as_bytes());
}
