//! Wall-clock comparison of schemes on one workload.
//!
//! Timing is single-threaded. Increments for a chunk of paths are prepared
//! outside the timed region, then every scheme integrates the same chunk in
//! turn, so cache and frequency effects hit all schemes alike. One chunk is
//! run untimed as a warmup and the reported time is the median over
//! repetitions.

use std::collections::BTreeMap;
use std::hint::black_box;
use std::time::Instant;

use crate::brownian::coarsen_into;
use crate::coefficients::ModelSpec;
use crate::error::Result;
use crate::harness::experiment::{run_convergence, ConvergenceSpec, ErrorMetric, RefMode, Sampling};
use crate::schemes::{integrate, Record, SchemeId, SchemeParams, Stepper};

#[derive(Debug, Clone)]
pub struct ComparisonSpec {
    pub model: ModelSpec,
    pub schemes: Vec<SchemeId>,
    pub params: BTreeMap<SchemeId, SchemeParams>,
    /// Benchmark step size.
    pub dt: f64,
    pub ref_mode: RefMode,
    pub metric: ErrorMetric,
    pub sampling: Sampling,
    pub repetitions: usize,
    pub chunk: usize,
}

impl ComparisonSpec {
    pub fn new(model: ModelSpec, schemes: Vec<SchemeId>, dt: f64) -> Self {
        let metric = ErrorMetric::for_model(&model);
        Self {
            model,
            schemes,
            params: BTreeMap::new(),
            dt,
            ref_mode: RefMode::SelfScheme,
            metric,
            sampling: Sampling::default(),
            repetitions: 3,
            chunk: 128,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub scheme: SchemeId,
    pub dt: f64,
    pub error: Option<f64>,
    pub n_excluded: usize,
    /// Median wall-clock seconds for all paths.
    pub seconds: f64,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ComparisonReport {
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonReport {
    pub fn row(&self, scheme: SchemeId) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.scheme == scheme)
    }

    /// `seconds(num) / seconds(den)`.
    pub fn time_ratio(&self, num: SchemeId, den: SchemeId) -> Option<f64> {
        Some(self.row(num)?.seconds / self.row(den)?.seconds)
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Errors (against the reference chosen by `ref_mode`) and single-threaded
/// wall-clock times of each scheme at the benchmark step.
pub fn run_comparison(spec: &ComparisonSpec) -> Result<ComparisonReport> {
    let sampling = spec.sampling;
    if sampling.n_paths == 0 || spec.schemes.is_empty() {
        return Ok(ComparisonReport::default());
    }
    let factor = sampling.factor(spec.dt)?;

    let mut conv = ConvergenceSpec::new(spec.model.clone(), spec.schemes.clone(), vec![spec.dt]);
    conv.params = spec.params.clone();
    conv.ref_mode = spec.ref_mode;
    conv.metric = spec.metric;
    conv.sampling = sampling;
    let errors = run_convergence(&conv)?;

    let steppers: Vec<Option<Stepper<'_>>> = spec
        .schemes
        .iter()
        .map(|&s| {
            let params = spec.params.get(&s).copied().unwrap_or_default();
            Stepper::new(s, &spec.model, &params, spec.dt).ok()
        })
        .collect();

    let table = sampling.table()?;
    let n_fine = table.n_fine();
    let n_coarse = n_fine / factor;
    let chunk = spec.chunk.max(1);
    let mut fine = vec![0.0; n_fine];
    let mut coarse = Vec::with_capacity(n_coarse);
    let mut fill_chunk = |start: usize, buf: &mut Vec<f64>| {
        buf.clear();
        for j in start..(start + chunk).min(sampling.n_paths) {
            table.fill_path(j, &mut fine);
            coarsen_into(&fine, factor, &mut coarse).expect("factor validated");
            buf.extend_from_slice(&coarse);
        }
    };
    let run = |st: &Stepper<'_>, buf: &[f64]| {
        for incs in buf.chunks_exact(n_coarse.max(1)) {
            black_box(integrate(st, incs.len(), incs, Record::Terminal).ok());
        }
    };

    let mut buf = Vec::with_capacity(chunk * n_coarse);
    fill_chunk(0, &mut buf);
    for st in steppers.iter().flatten() {
        run(st, &buf);
    }

    let reps = spec.repetitions.max(1);
    let mut samples = vec![Vec::with_capacity(reps); steppers.len()];
    for _ in 0..reps {
        let mut totals = vec![0.0; steppers.len()];
        for start in (0..sampling.n_paths).step_by(chunk) {
            fill_chunk(start, &mut buf);
            for (total, st) in totals.iter_mut().zip(&steppers) {
                if let Some(st) = st {
                    let t0 = Instant::now();
                    run(st, &buf);
                    *total += t0.elapsed().as_secs_f64();
                }
            }
        }
        for (s, t) in samples.iter_mut().zip(totals) {
            s.push(t);
        }
    }

    let rows = spec
        .schemes
        .iter()
        .zip(samples)
        .map(|(&scheme, times)| {
            let cell = errors.cell(scheme, spec.dt).expect("one cell per scheme");
            ComparisonRow {
                scheme,
                dt: spec.dt,
                error: cell.error,
                n_excluded: cell.n_excluded,
                seconds: median(times),
                failure: cell.failure.clone(),
            }
        })
        .collect();
    Ok(ComparisonReport { rows })
}
