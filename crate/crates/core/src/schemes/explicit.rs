//! Truncated EM, truncated Milstein and plain EM.

use crate::coefficients::{finite, ModelSpec, Truncated, TruncationConfig};
use crate::error::Result;
use crate::schemes::StepState;

#[inline]
pub(crate) fn tem_update(t: &Truncated<'_>, dt: f64, x: f64, db: f64) -> Result<StepState> {
    let next = x + t.drift(x)? * dt + t.diffusion(x)? * db;
    let next = finite("tem step", x, next)?;
    Ok(StepState {
        x_raw: next,
        x_pos: t.project(next),
        aux: None,
    })
}

#[inline]
pub(crate) fn tmil_update(t: &Truncated<'_>, dt: f64, x: f64, db: f64) -> Result<StepState> {
    let iterated = 0.5 * (db * db - dt);
    let next = x + t.drift(x)? * dt + t.diffusion(x)? * db + t.levy(x)? * iterated;
    let next = finite("tmil step", x, next)?;
    Ok(StepState {
        x_raw: next,
        x_pos: t.project(next),
        aux: None,
    })
}

#[inline]
pub(crate) fn em_update(model: &ModelSpec, dt: f64, y: f64, db: f64) -> Result<StepState> {
    let drift = finite("drift", y, model.drift(y))?;
    let diffusion = finite("diffusion", y, model.diffusion(y.abs()))?;
    let next = finite("em step", y, y + drift * dt + diffusion * db)?;
    Ok(StepState::new(next))
}

/// One truncated Euler–Maruyama step from `state.x_raw`.
pub fn tem_step(model: &ModelSpec, cfg: &TruncationConfig, dt: f64, state: &StepState, db: f64) -> Result<StepState> {
    let t = Truncated::new(model, cfg.radius(dt)?)?;
    tem_update(&t, dt, state.x_raw, db)
}

/// One truncated Milstein step from `state.x_raw`.
pub fn tmil_step(model: &ModelSpec, cfg: &TruncationConfig, dt: f64, state: &StepState, db: f64) -> Result<StepState> {
    let t = Truncated::new(model, cfg.radius(dt)?)?;
    tmil_update(&t, dt, state.x_raw, db)
}

/// One Euler–Maruyama step; the diffusion is evaluated at `|Y|`.
pub fn em_step(model: &ModelSpec, dt: f64, state: &StepState, db: f64) -> Result<StepState> {
    crate::coefficients::check_dt(dt)?;
    em_update(model, dt, state.x_raw, db)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{CustomModel, ThreeHalvesParams};
    use crate::error::SdeError;
    use std::sync::Arc;

    fn zero_model() -> ModelSpec {
        ModelSpec::custom(CustomModel::additive(0.0, 0.0, 1.0).unwrap())
    }

    fn example_32() -> ModelSpec {
        ModelSpec::three_halves(ThreeHalvesParams::new(4.0, 1.0, 1.0, 2.0).unwrap())
    }

    #[test]
    fn tem_zero_coefficients_is_identity() {
        let cfg = TruncationConfig::two_sided(5.0, 0.5).unwrap();
        let s = StepState::new(1.3);
        let next = tem_step(&zero_model(), &cfg, 0.1, &s, 0.7).unwrap();
        assert_eq!(next.x_raw, 1.3);
        assert_eq!(next.x_pos, 1.3);
    }

    #[test]
    fn tem_hits_zero_and_is_floored() {
        let cfg = TruncationConfig::two_sided(1000.0, 0.5).unwrap();
        let r = cfg.radius(0.25).unwrap();
        let next = tem_step(&example_32(), &cfg, 0.25, &StepState::new(2.0), 0.0).unwrap();
        assert_eq!(next.x_raw, 0.0);
        assert_eq!(next.x_pos, 1.0 / r);
    }

    #[test]
    fn tem_noise_is_odd() {
        let mut c = CustomModel::additive(0.0, 0.0, 1.0).unwrap();
        c.diffusion = Arc::new(|x| 0.3 + x * x);
        let m = ModelSpec::custom(c);
        let cfg = TruncationConfig::two_sided(10.0, 0.5).unwrap();
        let s = StepState::new(1.7);
        for db in [0.01, 0.2, 1.5] {
            let up = tem_step(&m, &cfg, 0.1, &s, db).unwrap().x_raw;
            let down = tem_step(&m, &cfg, 0.1, &s, -db).unwrap().x_raw;
            assert!((up + down - 2.0 * 1.7).abs() < 1e-14);
        }
    }

    #[test]
    fn tmil_equals_tem_when_iterated_integral_vanishes() {
        let m = example_32();
        let cfg = TruncationConfig::two_sided(50.0, 0.5).unwrap();
        let dt: f64 = 0.0625;
        let s = StepState::new(1.4);
        let db = dt.sqrt();
        let a = tem_step(&m, &cfg, dt, &s, db).unwrap();
        let b = tmil_step(&m, &cfg, dt, &s, db).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn tmil_equals_tem_without_levy_term() {
        let m = ModelSpec::custom(CustomModel::additive(0.3, 0.8, 1.0).unwrap());
        let cfg = TruncationConfig::two_sided(5.0, 0.5).unwrap();
        let s = StepState::new(1.1);
        for db in [-0.9, -0.01, 0.0, 0.4] {
            assert_eq!(tem_step(&m, &cfg, 0.1, &s, db).unwrap(), tmil_step(&m, &cfg, 0.1, &s, db).unwrap());
        }
    }

    #[test]
    fn tmil_correction_on_three_halves() {
        let m = example_32();
        let cfg = TruncationConfig::two_sided(50.0, 0.5).unwrap();
        let s = StepState::new(1.0);
        let tem = tem_step(&m, &cfg, 0.25, &s, 0.0).unwrap().x_raw;
        let tmil = tmil_step(&m, &cfg, 0.25, &s, 0.0).unwrap().x_raw;
        // (g'g)(1) = 1.5, I = ½(0 − 0.25)
        assert!((tmil - tem - (-0.1875)).abs() < 1e-15);
    }

    #[test]
    fn em_uses_absolute_value_in_diffusion() {
        let mut c = CustomModel::additive(0.0, 0.0, 1.0).unwrap();
        c.diffusion = Arc::new(|x: f64| x.sqrt());
        let m = ModelSpec::custom(c);
        let next = em_step(&m, 0.1, &StepState::new(-1.0), 0.5).unwrap();
        assert_eq!(next.x_raw, -0.5);
        let zero = em_step(&zero_model(), 0.1, &StepState::new(0.4), 3.0).unwrap();
        assert_eq!(zero.x_raw, 0.4);
    }

    #[test]
    fn em_reaches_zero_without_floor() {
        let next = em_step(&example_32(), 0.25, &StepState::new(2.0), 0.0).unwrap();
        assert_eq!(next.x_raw, 0.0);
        assert_eq!(next.x_pos, 0.0);
    }

    #[test]
    fn em_non_finite_drift_is_an_error() {
        let ait = ModelSpec::ait_sahalia(
            crate::coefficients::AitSahaliaParams::new(1.5, 2.0, 1.0, 2.0, 1.0, 4.0, 1.5, 1.0).unwrap(),
        );
        assert!(matches!(em_step(&ait, 0.1, &StepState::new(0.0), 0.1), Err(SdeError::NonFinite { .. })));
    }
}
