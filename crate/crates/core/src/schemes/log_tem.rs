//! Logarithmic truncated EM.
//!
//! Works on `Z = log Y`, which satisfies
//! `dZ = F(Z) dt + G(Z) dB` with `F(z) = e^{−z} f(e^z) − ½ e^{−2z} g(e^z)²`
//! and `G(z) = e^{−z} g(e^z)`. Coefficients are evaluated at the clamped
//! state `(−R) ∨ Z ∧ R`; the reading `e^Z` is positive by construction.

use crate::coefficients::{finite, project_symmetric, ModelSpec, TruncationConfig, TruncationKind};
use crate::error::{Result, SdeError};
use crate::schemes::StepState;

/// `(F(z), G(z))`.
#[inline]
pub(crate) fn log_coefficients(model: &ModelSpec, z: f64) -> Result<(f64, f64)> {
    let u = z.exp();
    let scaled_g = model.diffusion(u) / u;
    let big_f = model.drift(u) / u - 0.5 * scaled_g * scaled_g;
    Ok((finite("log drift", z, big_f)?, finite("log diffusion", z, scaled_g)?))
}

#[inline]
pub(crate) fn log_tem_update(model: &ModelSpec, radius: f64, dt: f64, z: f64, db: f64) -> Result<StepState> {
    let (big_f, big_g) = log_coefficients(model, project_symmetric(z, radius))?;
    let z_next = finite("log tem step", z, z + big_f * dt + big_g * db)?;
    let y = finite("log tem reading", z_next, z_next.exp())?;
    Ok(StepState {
        x_raw: y,
        x_pos: y,
        aux: Some(z_next),
    })
}

/// One log-TEM step. `state.aux` carries `Z`; if absent `log(x_pos)` is used.
pub fn log_tem_step(model: &ModelSpec, cfg: &TruncationConfig, dt: f64, state: &StepState, db: f64) -> Result<StepState> {
    if cfg.kind != TruncationKind::SymmetricLog {
        return Err(SdeError::invalid("truncation", "log TEM needs a symmetric log truncation"));
    }
    let radius = cfg.radius(dt)?;
    let z = state.aux.unwrap_or_else(|| state.x_pos.ln());
    log_tem_update(model, radius, dt, z, db)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{CustomModel, ThreeHalvesParams};

    fn cfg() -> TruncationConfig {
        TruncationConfig::symmetric_log(1.0, 0.5).unwrap()
    }

    #[test]
    fn transformed_drift_at_origin() {
        let m = ModelSpec::three_halves(ThreeHalvesParams::new(4.0, 1.0, 1.0, 2.0).unwrap());
        let (f, g) = log_coefficients(&m, 0.0).unwrap();
        assert!((f + 0.5).abs() < 1e-15);
        assert!((g - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_coefficients_keep_state() {
        let m = ModelSpec::custom(CustomModel::additive(0.0, 0.0, 1.0).unwrap());
        let s = StepState {
            x_raw: 1.5,
            x_pos: 1.5,
            aux: Some(1.5f64.ln()),
        };
        let n = log_tem_step(&m, &cfg(), 0.1, &s, 0.3).unwrap();
        assert_eq!(n.aux, s.aux);
        assert_eq!(n.x_pos, 1.5f64.ln().exp());
    }

    #[test]
    fn interior_state_uses_raw_coefficients() {
        let m = ModelSpec::three_halves(ThreeHalvesParams::new(4.0, 1.0, 1.0, 2.0).unwrap());
        let z = 0.3;
        let (f, g) = log_coefficients(&m, z).unwrap();
        let n = log_tem_step(&m, &cfg(), 0.1, &StepState { x_raw: 0.0, x_pos: z.exp(), aux: Some(z) }, 0.2).unwrap();
        assert_eq!(n.aux.unwrap(), z + f * 0.1 + g * 0.2);
        assert!(n.x_pos > 0.0);
    }

    #[test]
    fn clamped_state_uses_boundary_coefficients() {
        let m = ModelSpec::three_halves(ThreeHalvesParams::new(4.0, 1.0, 1.0, 2.0).unwrap());
        let c = cfg();
        let r = c.radius(0.1).unwrap();
        let (f, g) = log_coefficients(&m, r).unwrap();
        let z = r + 2.0;
        let n = log_tem_step(&m, &c, 0.1, &StepState { x_raw: 0.0, x_pos: z.exp(), aux: Some(z) }, 0.2).unwrap();
        assert_eq!(n.aux.unwrap(), z + f * 0.1 + g * 0.2);
    }

    #[test]
    fn rejects_two_sided_config() {
        let m = ModelSpec::custom(CustomModel::additive(0.0, 0.0, 1.0).unwrap());
        let two = TruncationConfig::two_sided(1.0, 0.5).unwrap();
        assert!(log_tem_step(&m, &two, 0.1, &StepState::new(1.0), 0.0).is_err());
    }
}
