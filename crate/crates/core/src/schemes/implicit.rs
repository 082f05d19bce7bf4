//! Backward Euler–Maruyama.
//!
//! Each step solves `y − f(y)·dt = rhs` with `rhs = Y + g(|Y|)·ΔB`. When
//! `dt · sup f' < 1` the residual is strictly increasing on (0, ∞), so a
//! sign change brackets the unique root. The solver keeps a bracket and
//! takes Newton steps when they stay inside it, bisecting otherwise.

use crate::coefficients::{check_dt, finite, ModelSpec};
use crate::error::{Result, SdeError};
use crate::schemes::{SolverSettings, StepState};

/// Left end of the initial bracket.
const TINY: f64 = 1e-300;
const MAX_DOUBLINGS: usize = 2100;

/// Positive root of `y − f(y)·dt = rhs`, starting the Newton iteration at
/// `guess`.
pub fn solve_bem(model: &ModelSpec, dt: f64, rhs: f64, guess: f64, solver: &SolverSettings) -> Result<f64> {
    let residual = |y: f64| y - model.drift(y) * dt - rhs;
    let fail = |reason: String| SdeError::Solver { rhs, reason };
    let tol = solver.abs_tol + solver.rel_tol * rhs.abs();

    let mut lo = TINY;
    let r_lo = residual(lo);
    if r_lo.is_nan() {
        return Err(fail("residual is NaN at the left bracket end".into()));
    }
    if r_lo > 0.0 {
        return Err(fail("no positive root: residual positive at the left bracket end".into()));
    }
    if r_lo == 0.0 {
        return Ok(lo);
    }

    let mut hi = (2.0 * rhs).max(2.0 * guess).max(1.0);
    let mut doublings = 0;
    loop {
        let r = residual(hi);
        if r.is_nan() {
            return Err(fail(format!("residual is NaN at y = {hi}")));
        }
        if r > 0.0 {
            break;
        }
        if r == 0.0 {
            return Ok(hi);
        }
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > MAX_DOUBLINGS || !hi.is_finite() {
            return Err(fail("bracket expansion did not find a sign change".into()));
        }
    }

    let mut y = if guess > lo && guess < hi { guess } else { 0.5 * (lo + hi) };
    for _ in 0..solver.max_iter {
        let r = residual(y);
        if !r.is_finite() {
            return Err(fail(format!("non-finite residual at y = {y}")));
        }
        if r.abs() <= tol {
            return Ok(y);
        }
        if r < 0.0 {
            lo = y;
        } else {
            hi = y;
        }
        let slope = 1.0 - model.drift_derivative(y) * dt;
        let newton = y - r / slope;
        let next = if slope > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if next == y || hi - lo <= 2.0 * f64::EPSILON * hi {
            // bracket collapsed to adjacent floats
            let (r_lo, r_hi) = (residual(lo).abs(), residual(hi).abs());
            let best = if r_lo <= r_hi { lo } else { hi };
            if residual(best).abs() <= tol {
                return Ok(best);
            }
            return Err(fail(format!(
                "bracket collapsed at y = {best} with residual {} above tolerance {tol}",
                residual(best)
            )));
        }
        y = next;
    }
    Err(fail(format!("no convergence within {} iterations", solver.max_iter)))
}

#[inline]
pub(crate) fn bem_update(model: &ModelSpec, dt: f64, y: f64, db: f64, solver: &SolverSettings) -> Result<StepState> {
    let rhs = y + finite("diffusion", y, model.diffusion(y.abs()))? * db;
    let rhs = finite("bem rhs", y, rhs)?;
    let root = solve_bem(model, dt, rhs, y, solver)?;
    Ok(StepState::new(root))
}

/// One backward Euler–Maruyama step from `state.x_pos`.
pub fn bem_step(model: &ModelSpec, dt: f64, state: &StepState, db: f64, solver: &SolverSettings) -> Result<StepState> {
    check_dt(dt)?;
    solver.validate()?;
    bem_update(model, dt, state.x_pos, db, solver)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{AitSahaliaParams, CustomModel};
    use std::sync::Arc;

    fn linear_decay() -> ModelSpec {
        let mut c = CustomModel::additive(0.0, 0.0, 1.0).unwrap();
        c.drift = Arc::new(|y| -y);
        c.drift_derivative = Arc::new(|_| -1.0);
        ModelSpec::custom(c)
    }

    fn example_ait() -> ModelSpec {
        ModelSpec::ait_sahalia(AitSahaliaParams::new(1.5, 2.0, 1.0, 2.0, 1.0, 4.0, 1.5, 1.0).unwrap())
    }

    /// Plain bisection to 1e-14 on the same residual, used as an oracle.
    fn bisect(model: &ModelSpec, dt: f64, rhs: f64) -> f64 {
        let r = |y: f64| y - model.drift(y) * dt - rhs;
        let (mut lo, mut hi) = (1e-12, 100.0);
        assert!(r(lo) < 0.0 && r(hi) > 0.0);
        while hi - lo > 1e-14 {
            let mid = 0.5 * (lo + hi);
            if r(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn linear_implicit_step_closed_form() {
        let s = bem_step(&linear_decay(), 0.5, &StepState::new(1.0), 0.0, &SolverSettings::default()).unwrap();
        assert!((s.x_pos - 2.0 / 3.0).abs() < 1e-13);
    }

    #[test]
    fn zero_drift_reduces_to_explicit() {
        let m = ModelSpec::custom(CustomModel::additive(0.0, 0.5, 1.0).unwrap());
        let s = bem_step(&m, 0.1, &StepState::new(1.0), 0.2, &SolverSettings::default()).unwrap();
        assert!((s.x_pos - 1.1).abs() < 1e-13);
    }

    #[test]
    fn ait_root_matches_bisection_oracle() {
        let m = example_ait();
        let settings = SolverSettings::default();
        for dt in [2f64.powi(-5), 2f64.powi(-9), 2f64.powi(-12)] {
            let s = bem_step(&m, dt, &StepState::new(1.0), 0.0, &settings).unwrap();
            let residual = s.x_pos - m.drift(s.x_pos) * dt - 1.0;
            assert!(residual.abs() <= settings.abs_tol + settings.rel_tol);
            let oracle = bisect(&m, dt, 1.0);
            assert!((s.x_pos - oracle).abs() < 1e-12, "dt={dt}: {} vs {oracle}", s.x_pos);
        }
    }

    #[test]
    fn negative_rhs_still_has_positive_root_for_singular_drift() {
        let m = example_ait();
        let s = bem_step(&m, 0.01, &StepState::new(0.2), -1.0, &SolverSettings::default()).unwrap();
        assert!(s.x_pos > 0.0);
    }

    #[test]
    fn no_positive_root_is_reported() {
        let m = ModelSpec::custom(CustomModel::additive(0.0, 1.0, 1.0).unwrap());
        let err = bem_step(&m, 0.1, &StepState::new(1.0), -3.0, &SolverSettings::default());
        assert!(matches!(err, Err(SdeError::Solver { .. })));
    }

    #[test]
    fn iteration_cap_is_enforced() {
        let m = example_ait();
        let settings = SolverSettings {
            max_iter: 1,
            ..SolverSettings::default()
        };
        let err = bem_step(&m, 0.1, &StepState::new(5.0), 0.0, &settings);
        assert!(matches!(err, Err(SdeError::Solver { .. })));
    }
}
