//! Strong-error, positivity and moment experiments.
//!
//! Every experiment draws path `j` from the same Brownian stream, simulates
//! it on the fine grid `Δ_ref = 2^{-ref_m}` and on each coarse step by
//! summing fine increments, so all schemes and step sizes see one set of
//! paths. Paths run in parallel; results are stored by path index and
//! reduced in index order, so the output does not depend on the number of
//! workers.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::brownian::{coarsen_into, BrownianTable};
use crate::coefficients::{ModelKind, ModelSpec};
use crate::error::{Result, SdeError};
use crate::harness::stats::{
    binomial_ci, estimate_moments, fit_rate, mean_abs_squared_diff, rmse, MomentEstimate, MomentSign, RateFit,
};
use crate::schemes::{integrate, PathResult, Record, SchemeId, SchemeParams, Stepper};

/// Fine level used by the reference solutions, `Δ_ref = 2^{-12}`.
pub const DEFAULT_REF_M: u32 = 12;

/// Which solution a coarse approximation is compared against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RefMode {
    /// Each scheme against itself on the fine grid.
    #[default]
    SelfScheme,
    /// Every scheme against one scheme on the fine grid.
    CommonFine(SchemeId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ErrorMetric {
    /// `(mean |ref − approx|²)^{1/2}`.
    #[default]
    Rmse,
    /// `mean |ref² − approx²|`, for Lamperti-transformed CIR where the
    /// original variable is the square of the simulated one.
    SquaredBackAbs,
}

impl ErrorMetric {
    /// The metric matching a model's natural error variable.
    pub fn for_model(model: &ModelSpec) -> Self {
        if model.kind() == ModelKind::CirLamperti {
            ErrorMetric::SquaredBackAbs
        } else {
            ErrorMetric::Rmse
        }
    }

    fn evaluate(self, reference: &[f64], approx: &[f64]) -> Result<f64> {
        match self {
            ErrorMetric::Rmse => rmse(reference, approx),
            ErrorMetric::SquaredBackAbs => mean_abs_squared_diff(reference, approx),
        }
    }
}

/// Path count, horizon, seed and fine level shared by every experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sampling {
    pub n_paths: usize,
    pub horizon: f64,
    pub seed: u64,
    pub ref_m: u32,
}

impl Default for Sampling {
    fn default() -> Self {
        Self {
            n_paths: 1000,
            horizon: 2.0,
            seed: 42,
            ref_m: DEFAULT_REF_M,
        }
    }
}

impl Sampling {
    pub fn dt_ref(&self) -> f64 {
        2f64.powi(-(self.ref_m as i32))
    }

    pub(crate) fn table(&self) -> Result<BrownianTable> {
        // paths are regenerated per worker, never materialized
        BrownianTable::generate_with_budget(self.seed, self.n_paths, self.horizon, self.ref_m, 0)
    }

    /// Number of fine increments summed into one step of size `dt`.
    pub fn factor(&self, dt: f64) -> Result<usize> {
        let dt_ref = self.dt_ref();
        let k = dt / dt_ref;
        let n_fine = self.horizon / dt_ref;
        if !(dt > 0.0) || k < 1.0 || k.fract() != 0.0 || n_fine.fract() != 0.0 || (n_fine / k).fract() != 0.0 {
            return Err(SdeError::invalid(
                "dt",
                format!(
                    "dt must be dyadic multiple of reference step 2^-{} dividing T = {}, got {dt}",
                    self.ref_m, self.horizon
                ),
            ));
        }
        Ok(k as usize)
    }
}

/// Per-scheme settings lookup with a shared default.
fn params_for(overrides: &BTreeMap<SchemeId, SchemeParams>, scheme: SchemeId) -> SchemeParams {
    overrides.get(&scheme).copied().unwrap_or_default()
}

#[derive(Debug, Clone)]
pub struct ConvergenceSpec {
    pub model: ModelSpec,
    pub schemes: Vec<SchemeId>,
    /// Settings per scheme; schemes not listed use [`SchemeParams::default`].
    pub params: BTreeMap<SchemeId, SchemeParams>,
    /// Coarse step sizes, strictly decreasing.
    pub dt_list: Vec<f64>,
    pub ref_mode: RefMode,
    pub metric: ErrorMetric,
    pub sampling: Sampling,
}

impl ConvergenceSpec {
    pub fn new(model: ModelSpec, schemes: Vec<SchemeId>, dt_list: Vec<f64>) -> Self {
        let metric = ErrorMetric::for_model(&model);
        Self {
            model,
            schemes,
            params: BTreeMap::new(),
            dt_list,
            ref_mode: RefMode::SelfScheme,
            metric,
            sampling: Sampling::default(),
        }
    }

    pub fn params_for(&self, scheme: SchemeId) -> SchemeParams {
        params_for(&self.params, scheme)
    }

    /// Checks the grid invariants; returns the coarsening factor per dt.
    pub fn validate(&self) -> Result<Vec<usize>> {
        if self.schemes.is_empty() {
            return Err(SdeError::invalid("schemes", "at least one scheme is required"));
        }
        if self.dt_list.is_empty() {
            return Err(SdeError::invalid("dt", "at least one step size is required"));
        }
        if self.dt_list.windows(2).any(|w| w[1] >= w[0]) {
            return Err(SdeError::invalid("dt", "step sizes must be strictly decreasing"));
        }
        self.dt_list.iter().map(|&dt| self.sampling.factor(dt)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositivityEstimate {
    pub dt: f64,
    /// Fraction of paths whose pre-projection TEM iterate reached `≤ 0`.
    pub p_hat: f64,
    pub ci: f64,
    pub n_paths: usize,
}

impl PositivityEstimate {
    fn from_count(dt: f64, hits: usize, n_paths: usize) -> Self {
        let p_hat = if n_paths == 0 { 0.0 } else { hits as f64 / n_paths as f64 };
        Self {
            dt,
            p_hat,
            ci: binomial_ci(p_hat, n_paths),
            n_paths,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellReport {
    pub scheme: SchemeId,
    pub dt: f64,
    /// Value of the spec's [`ErrorMetric`].
    pub error: Option<f64>,
    pub n_used: usize,
    /// Paths dropped because the reference or the approximation failed.
    pub n_excluded: usize,
    /// Why the cell produced no error value.
    pub failure: Option<String>,
    /// TEM cells only.
    pub positivity: Option<PositivityEstimate>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeSummary {
    pub scheme: SchemeId,
    pub rate: Option<RateFit>,
    pub rate_failure: Option<String>,
    /// Filled by timing runs.
    pub seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub metric: ErrorMetric,
    pub n_paths: usize,
    pub cells: Vec<CellReport>,
    pub summaries: Vec<SchemeSummary>,
}

impl ConvergenceReport {
    pub fn cell(&self, scheme: SchemeId, dt: f64) -> Option<&CellReport> {
        self.cells.iter().find(|c| c.scheme == scheme && c.dt == dt)
    }

    pub fn summary(&self, scheme: SchemeId) -> Option<&SchemeSummary> {
        self.summaries.iter().find(|s| s.scheme == scheme)
    }

    pub fn rate(&self, scheme: SchemeId) -> Option<f64> {
        self.summary(scheme).and_then(|s| s.rate).map(|r| r.slope)
    }

    /// Whether every cell failed.
    pub fn all_failed(&self) -> bool {
        !self.cells.is_empty() && self.cells.iter().all(|c| c.error.is_none())
    }
}

#[derive(Debug, Clone, Copy)]
struct Terminal {
    value: Option<f64>,
    min_raw: f64,
}

impl From<&PathResult> for Terminal {
    fn from(r: &PathResult) -> Self {
        Self {
            value: r.terminal_value(),
            min_raw: r.min_raw,
        }
    }
}

fn run_terminal(stepper: &Stepper<'_>, increments: &[f64]) -> Terminal {
    match integrate(stepper, increments.len(), increments, Record::Terminal) {
        Ok(r) => Terminal::from(&r),
        // lengths always match here; treat anything else as a failed path
        Err(_) => Terminal {
            value: None,
            min_raw: f64::NAN,
        },
    }
}

/// Scratch buffers reused by one worker across paths.
struct Scratch {
    fine: Vec<f64>,
    coarse: Vec<f64>,
}

impl Scratch {
    fn new(n_fine: usize) -> Self {
        Self {
            fine: vec![0.0; n_fine],
            coarse: Vec::with_capacity(n_fine),
        }
    }
}

/// Fan out over paths and collect per-path outputs in index order.
fn map_paths<T, F>(table: &BrownianTable, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut Scratch, usize) -> T + Sync + Send,
{
    let n_fine = table.n_fine();
    (0..table.n_paths())
        .into_par_iter()
        .map_init(
            || Scratch::new(n_fine),
            |scratch, j| {
                table.fill_path(j, &mut scratch.fine);
                f(scratch, j)
            },
        )
        .collect()
}

/// Strong errors of every `(scheme, dt)` cell, fitted rates, and TEM
/// positivity frequencies.
pub fn run_convergence(spec: &ConvergenceSpec) -> Result<ConvergenceReport> {
    let factors = spec.validate()?;
    let table = spec.sampling.table()?;
    let dt_ref = spec.sampling.dt_ref();
    let n_dt = spec.dt_list.len();
    let model = &spec.model;

    // Steppers are prepared once; a cell whose stepper cannot be built is
    // reported as failed while the others run.
    let mut cell_steppers: Vec<std::result::Result<Stepper<'_>, String>> = Vec::new();
    let mut ref_steppers: Vec<std::result::Result<Stepper<'_>, String>> = Vec::new();
    for &scheme in &spec.schemes {
        let params = spec.params_for(scheme);
        for &dt in &spec.dt_list {
            cell_steppers.push(Stepper::new(scheme, model, &params, dt).map_err(|e| e.to_string()));
        }
        if spec.ref_mode == RefMode::SelfScheme {
            ref_steppers.push(
                Stepper::new(scheme, model, &params, dt_ref).map_err(|e| format!("reference solution: {e}")),
            );
        }
    }
    if let RefMode::CommonFine(r) = spec.ref_mode {
        ref_steppers
            .push(Stepper::new(r, model, &spec.params_for(r), dt_ref).map_err(|e| format!("reference solution: {e}")));
    }

    let outcomes: Vec<(Vec<Option<f64>>, Vec<Terminal>)> = map_paths(&table, |scratch, _| {
        let refs: Vec<Option<f64>> = ref_steppers
            .iter()
            .map(|s| s.as_ref().ok().and_then(|s| run_terminal(s, &scratch.fine).value))
            .collect();
        let mut cells = Vec::with_capacity(cell_steppers.len());
        for (d, &factor) in factors.iter().enumerate() {
            coarsen_into(&scratch.fine, factor, &mut scratch.coarse).expect("factor validated");
            for s in 0..spec.schemes.len() {
                cells.push(match &cell_steppers[s * n_dt + d] {
                    Ok(st) => run_terminal(st, &scratch.coarse),
                    Err(_) => Terminal {
                        value: None,
                        min_raw: f64::NAN,
                    },
                });
            }
        }
        (refs, cells)
    });
    // cells above are stored dt-major; index helper for (scheme, dt)
    let n_schemes = spec.schemes.len();
    let at = |s: usize, d: usize| d * n_schemes + s;

    let n_paths = spec.sampling.n_paths;
    let mut cells = Vec::with_capacity(n_schemes * n_dt);
    let mut summaries = Vec::with_capacity(n_schemes);
    for (s, &scheme) in spec.schemes.iter().enumerate() {
        let ref_index = if spec.ref_mode == RefMode::SelfScheme { s } else { 0 };
        let mut fit_dts = Vec::new();
        let mut fit_errors = Vec::new();
        for (d, &dt) in spec.dt_list.iter().enumerate() {
            let positivity = (scheme == SchemeId::Tem).then(|| {
                let hits = outcomes.iter().filter(|(_, c)| c[at(s, d)].min_raw <= 0.0).count();
                PositivityEstimate::from_count(dt, hits, n_paths)
            });
            let setup_failure = cell_steppers[s * n_dt + d]
                .as_ref()
                .err()
                .or_else(|| ref_steppers[ref_index].as_ref().err());
            if let Some(reason) = setup_failure {
                cells.push(CellReport {
                    scheme,
                    dt,
                    error: None,
                    n_used: 0,
                    n_excluded: n_paths,
                    failure: Some(reason.clone()),
                    positivity: positivity.filter(|_| cell_steppers[s * n_dt + d].is_ok()),
                });
                continue;
            }
            let mut reference = Vec::with_capacity(n_paths);
            let mut approx = Vec::with_capacity(n_paths);
            for (refs, c) in &outcomes {
                if let (Some(r), Some(a)) = (refs[ref_index], c[at(s, d)].value) {
                    reference.push(r);
                    approx.push(a);
                }
            }
            let n_used = reference.len();
            let (error, failure) = match spec.metric.evaluate(&reference, &approx) {
                Ok(e) => (Some(e), None),
                Err(SdeError::EmptySample) => (None, Some("every path blew up".to_string())),
                Err(e) => (None, Some(e.to_string())),
            };
            if let Some(e) = error {
                fit_dts.push(dt);
                fit_errors.push(e);
            }
            cells.push(CellReport {
                scheme,
                dt,
                error,
                n_used,
                n_excluded: n_paths - n_used,
                failure,
                positivity,
            });
        }
        let (rate, rate_failure) = if fit_dts.len() >= 2 {
            match fit_rate(&fit_dts, &fit_errors) {
                Ok(r) => (Some(r), None),
                Err(e) => (None, Some(e.to_string())),
            }
        } else {
            (None, Some("fewer than two step sizes with an error value".to_string()))
        };
        summaries.push(SchemeSummary {
            scheme,
            rate,
            rate_failure,
            seconds: None,
        });
    }
    Ok(ConvergenceReport {
        metric: spec.metric,
        n_paths,
        cells,
        summaries,
    })
}

#[derive(Debug, Clone)]
pub struct PositivitySpec {
    pub model: ModelSpec,
    /// TEM settings.
    pub params: SchemeParams,
    pub dt_list: Vec<f64>,
    pub sampling: Sampling,
}

/// `P(min_k X_Δ(t_k) ≤ 0)` for the TEM iterate at each step size, on one
/// shared set of paths.
pub fn run_positivity(spec: &PositivitySpec) -> Result<Vec<PositivityEstimate>> {
    let factors: Vec<usize> = spec.dt_list.iter().map(|&dt| spec.sampling.factor(dt)).collect::<Result<_>>()?;
    let steppers: Vec<Stepper<'_>> = spec
        .dt_list
        .iter()
        .map(|&dt| Stepper::new(SchemeId::Tem, &spec.model, &spec.params, dt))
        .collect::<Result<_>>()?;
    let table = spec.sampling.table()?;
    let hits: Vec<Vec<bool>> = map_paths(&table, |scratch, _| {
        factors
            .iter()
            .zip(&steppers)
            .map(|(&factor, st)| {
                coarsen_into(&scratch.fine, factor, &mut scratch.coarse).expect("factor validated");
                run_terminal(st, &scratch.coarse).min_raw <= 0.0
            })
            .collect()
    });
    let n = spec.sampling.n_paths;
    Ok(spec
        .dt_list
        .iter()
        .enumerate()
        .map(|(d, &dt)| PositivityEstimate::from_count(dt, hits.iter().filter(|h| h[d]).count(), n))
        .collect())
}

/// Smallest fine level on which `dt` is a whole number of steps.
pub fn level_of(dt: f64) -> Result<u32> {
    (0..=40u32)
        .find(|&m| (dt * 2f64.powi(m as i32)).fract() == 0.0)
        .ok_or_else(|| SdeError::invalid("dt", format!("dt must be dyadic, got {dt}")))
}

/// Single-step-size positivity estimate, simulated directly at `dt`.
pub fn positivity_probability(
    model: &ModelSpec,
    params: &SchemeParams,
    dt: f64,
    n_paths: usize,
    horizon: f64,
    seed: u64,
) -> Result<PositivityEstimate> {
    let spec = PositivitySpec {
        model: model.clone(),
        params: *params,
        dt_list: vec![dt],
        sampling: Sampling {
            n_paths,
            horizon,
            seed,
            ref_m: level_of(dt)?,
        },
    };
    Ok(run_positivity(&spec)?[0])
}

#[derive(Debug, Clone)]
pub struct MomentSpec {
    pub model: ModelSpec,
    pub scheme: SchemeId,
    pub params: SchemeParams,
    pub dt_list: Vec<f64>,
    pub p_list: Vec<f64>,
    pub signs: Vec<MomentSign>,
    pub sampling: Sampling,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentRow {
    pub dt: f64,
    pub estimates: Vec<MomentEstimate>,
    pub n_excluded: usize,
}

/// Moments `E[Y(T)^{±p}]` of the scheme's positive reading at each step size.
pub fn run_moments(spec: &MomentSpec) -> Result<Vec<MomentRow>> {
    let factors: Vec<usize> = spec.dt_list.iter().map(|&dt| spec.sampling.factor(dt)).collect::<Result<_>>()?;
    let steppers: Vec<Stepper<'_>> = spec
        .dt_list
        .iter()
        .map(|&dt| Stepper::new(spec.scheme, &spec.model, &spec.params, dt))
        .collect::<Result<_>>()?;
    let table = spec.sampling.table()?;
    let terminals: Vec<Vec<Option<f64>>> = map_paths(&table, |scratch, _| {
        factors
            .iter()
            .zip(&steppers)
            .map(|(&factor, st)| {
                coarsen_into(&scratch.fine, factor, &mut scratch.coarse).expect("factor validated");
                run_terminal(st, &scratch.coarse).value
            })
            .collect()
    });
    spec.dt_list
        .iter()
        .enumerate()
        .map(|(d, &dt)| {
            let samples: Vec<f64> = terminals.iter().filter_map(|t| t[d]).collect();
            Ok(MomentRow {
                dt,
                n_excluded: terminals.len() - samples.len(),
                estimates: estimate_moments(&samples, &spec.p_list, &spec.signs)?,
            })
        })
        .collect()
}

/// Full trajectories of `n_paths` paths at step `dt`.
pub fn simulate_paths(
    model: &ModelSpec,
    scheme: SchemeId,
    params: &SchemeParams,
    dt: f64,
    sampling: &Sampling,
) -> Result<Vec<PathResult>> {
    let factor = sampling.factor(dt)?;
    let stepper = Stepper::new(scheme, model, params, dt)?;
    let table = sampling.table()?;
    map_paths(&table, |scratch, _| {
        coarsen_into(&scratch.fine, factor, &mut scratch.coarse).expect("factor validated");
        integrate(&stepper, scratch.coarse.len(), &scratch.coarse, Record::FullPath)
    })
    .into_iter()
    .collect()
}
