//! Path driver: runs a prepared [`Stepper`] over a uniform grid.

use crate::coefficients::ModelSpec;
use crate::error::{Result, SdeError};
use crate::schemes::{SchemeId, SchemeParams, StepState, Stepper};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Record {
    #[default]
    Terminal,
    FullPath,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathResult {
    /// Last successfully computed state (the terminal one when no step failed).
    pub terminal: StepState,
    /// States at `t_0, …, t_n` when recorded; truncated at a failure.
    pub trajectory: Option<Vec<StepState>>,
    /// `min_k x_raw(t_k)`, including `t_0`.
    pub min_raw: f64,
    /// Number of steps whose coefficients were evaluated at a truncated state.
    pub truncations: usize,
    /// Index of the failing step and its error.
    pub failure: Option<(usize, SdeError)>,
}

impl PathResult {
    pub fn blown_up(&self) -> bool {
        self.failure.is_some()
    }

    /// Terminal reading, `None` for a blown-up path.
    pub fn terminal_value(&self) -> Option<f64> {
        (!self.blown_up()).then_some(self.terminal.x_pos)
    }
}

/// Integrate `n_steps` steps driven by `increments` (one Brownian increment
/// per step). A failing step ends the path and is recorded, not returned.
pub fn integrate(stepper: &Stepper<'_>, n_steps: usize, increments: &[f64], record: Record) -> Result<PathResult> {
    if increments.len() != n_steps {
        return Err(SdeError::LengthMismatch {
            expected: n_steps,
            actual: increments.len(),
        });
    }
    let mut state = stepper.initial_state();
    let mut trajectory = match record {
        Record::FullPath => {
            let mut v = Vec::with_capacity(n_steps + 1);
            v.push(state);
            Some(v)
        }
        Record::Terminal => None,
    };
    let mut min_raw = state.x_raw;
    let mut truncations = 0;
    let mut failure = None;
    for (k, &db) in increments.iter().enumerate() {
        truncations += usize::from(stepper.truncation_active(&state));
        match stepper.step(&state, db) {
            Ok(next) => {
                state = next;
                min_raw = min_raw.min(state.x_raw);
                if let Some(t) = trajectory.as_mut() {
                    t.push(state);
                }
            }
            Err(e) => {
                failure = Some((k, e));
                break;
            }
        }
    }
    Ok(PathResult {
        terminal: state,
        trajectory,
        min_raw,
        truncations,
        failure,
    })
}

/// Convenience wrapper that prepares the stepper first.
pub fn integrate_with(
    scheme: SchemeId,
    model: &ModelSpec,
    params: &SchemeParams,
    dt: f64,
    increments: &[f64],
    record: Record,
) -> Result<PathResult> {
    let stepper = Stepper::new(scheme, model, params, dt)?;
    integrate(&stepper, increments.len(), increments, record)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{AitSahaliaParams, CustomModel, ThreeHalvesParams, TruncationConfig};

    fn example_32() -> ModelSpec {
        ModelSpec::three_halves(ThreeHalvesParams::new(4.0, 1.0, 1.0, 2.0).unwrap())
    }

    fn paper_truncation() -> SchemeParams {
        SchemeParams::with_truncation(TruncationConfig::two_sided(50.0, 0.5).unwrap())
    }

    #[test]
    fn zero_steps_returns_initial_state() {
        let m = example_32();
        let r = integrate_with(SchemeId::Tem, &m, &paper_truncation(), 0.1, &[], Record::FullPath).unwrap();
        assert_eq!(r.terminal.x_raw, 2.0);
        assert_eq!(r.min_raw, 2.0);
        assert_eq!(r.trajectory.unwrap().len(), 1);
    }

    #[test]
    fn constant_path_without_drift_and_noise() {
        let m = ModelSpec::custom(CustomModel::additive(0.0, 1.0, 1.5).unwrap());
        // log TEM is left out: its Itô correction moves the state even when dB = 0
        for scheme in [SchemeId::Tem, SchemeId::Tmil, SchemeId::Em, SchemeId::Bem] {
            let r = integrate_with(scheme, &m, &SchemeParams::default(), 0.25, &[0.0; 8], Record::FullPath).unwrap();
            assert!(r.trajectory.unwrap().iter().all(|s| (s.x_pos - 1.5).abs() < 1e-15), "{scheme}");
        }
    }

    #[test]
    fn two_tem_steps_match_manual_unrolling() {
        let m = example_32();
        let dt: f64 = 2f64.powi(-3);
        let r_dt = 50.0 * dt.powf(-0.5);
        let incs = [0.31, -0.57];
        let f = |x: f64| 4.0 * x - 4.0 * x * x;
        let g = |x: f64| x.powf(1.5);
        let clamp = |x: f64| (1.0 / r_dt).max(x.min(r_dt));
        let mut x = 2.0;
        for db in incs {
            let y = clamp(x);
            x = x + f(y) * dt + g(y) * db;
        }
        let r = integrate_with(SchemeId::Tem, &m, &paper_truncation(), dt, &incs, Record::Terminal).unwrap();
        assert!((r.terminal.x_raw - x).abs() < 1e-14);
        assert_eq!(r.terminal.x_pos, clamp(x));
    }

    #[test]
    fn length_mismatch_is_rejected() {
        let m = example_32();
        let s = Stepper::new(SchemeId::Tem, &m, &paper_truncation(), 0.1).unwrap();
        assert!(matches!(integrate(&s, 3, &[0.0; 2], Record::Terminal), Err(SdeError::LengthMismatch { .. })));
    }

    #[test]
    fn em_blow_up_is_recorded() {
        let ait = ModelSpec::ait_sahalia(AitSahaliaParams::new(1.5, 2.0, 1.0, 2.0, 1.0, 4.0, 1.5, 1.0).unwrap());
        // a large negative kick sends EM below zero, then the quartic drift explodes
        let mut incs = vec![-3.0];
        incs.extend(std::iter::repeat_n(0.0, 200));
        let r = integrate_with(SchemeId::Em, &ait, &SchemeParams::default(), 0.5, &incs, Record::Terminal).unwrap();
        assert!(r.blown_up());
        assert!(r.min_raw < 0.0);
        assert_eq!(r.terminal_value(), None);
    }

    #[test]
    fn truncation_activations_are_counted() {
        let m = example_32();
        let dt = 0.25;
        // first step lands exactly on 0 → clamped before the second step
        let r = integrate_with(SchemeId::Tem, &m, &paper_truncation(), dt, &[0.0, 0.0], Record::Terminal).unwrap();
        assert_eq!(r.min_raw, 0.0);
        assert_eq!(r.truncations, 1);
    }
}
