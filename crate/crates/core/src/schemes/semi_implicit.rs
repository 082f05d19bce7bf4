//! Semi-implicit schemes for the Aït-Sahalia model.
//!
//! Both treat the singular term `a₋₁/Y` implicitly. Writing the explicit part
//! as `c`, the update `Y' = c + a₋₁Δ/Y'` is the quadratic
//! `Y'² − cY' − a₋₁Δ = 0`, whose positive root is taken. STEM tames the
//! super-linear terms by `1 + √Δ Y^κ`; STEM2 truncates their argument at
//! `R = Δ^{−1/(2κ−2)}`.

use crate::coefficients::{check_dt, project_symmetric, AitSahaliaParams, Power};
use crate::error::{Result, SdeError};
use crate::schemes::StepState;

/// Positive root of `y² − c·y − q = 0` for `q > 0`, evaluated without
/// cancellation.
#[inline]
pub fn positive_root(c: f64, q: f64) -> f64 {
    let s = c.hypot(2.0 * q.sqrt());
    if c >= 0.0 {
        0.5 * (c + s)
    } else {
        2.0 * q / (s - c)
    }
}

/// `R = Δ^{−1/(2κ−2)}`.
pub fn stem2_radius(kappa: f64, dt: f64) -> f64 {
    dt.powf(-1.0 / (2.0 * kappa - 2.0))
}

#[derive(Debug, Clone)]
pub(crate) struct AitKernel {
    p: AitSahaliaParams,
    kappa: Power,
    theta: Power,
}

impl AitKernel {
    pub(crate) fn new(p: &AitSahaliaParams) -> Result<Self> {
        if !(p.a_m1 > 0.0) {
            return Err(SdeError::invalid("a_m1", "semi-implicit schemes need a_m1 > 0"));
        }
        Ok(Self {
            p: *p,
            kappa: Power::new(p.kappa),
            theta: Power::new(p.theta),
        })
    }

    #[inline]
    pub(crate) fn stem(&self, dt: f64, y: f64, db: f64) -> StepState {
        let p = &self.p;
        let yk = self.kappa.eval(y);
        let tame = 1.0 + dt.sqrt() * yk;
        let c = y + (-p.a0 + p.a1 * y - p.a2 * yk / tame) * dt + p.b * self.theta.eval(y) / tame * db;
        StepState::new(positive_root(c, p.a_m1 * dt))
    }

    #[inline]
    pub(crate) fn stem2(&self, radius: f64, dt: f64, y: f64, db: f64) -> StepState {
        let p = &self.p;
        let clipped = project_symmetric(y, radius);
        let c = y + (-p.a0 + p.a1 * y - p.a2 * self.kappa.eval(clipped)) * dt + p.b * self.theta.eval(clipped) * db;
        StepState::new(positive_root(c, p.a_m1 * dt))
    }
}

/// One semi-implicit tamed EM step.
pub fn stem_step(p: &AitSahaliaParams, dt: f64, state: &StepState, db: f64) -> Result<StepState> {
    check_dt(dt)?;
    let next = AitKernel::new(p)?.stem(dt, state.x_pos, db);
    if next.x_pos.is_finite() {
        Ok(next)
    } else {
        Err(SdeError::NonFinite {
            what: "stem step",
            x: state.x_pos,
        })
    }
}

/// One semi-implicit truncated EM step.
pub fn stem2_step(p: &AitSahaliaParams, dt: f64, state: &StepState, db: f64) -> Result<StepState> {
    check_dt(dt)?;
    let next = AitKernel::new(p)?.stem2(stem2_radius(p.kappa, dt), dt, state.x_pos, db);
    if next.x_pos.is_finite() {
        Ok(next)
    } else {
        Err(SdeError::NonFinite {
            what: "stem2 step",
            x: state.x_pos,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> AitSahaliaParams {
        AitSahaliaParams::new(1.5, 2.0, 1.0, 2.0, 1.0, 4.0, 1.5, 1.0).unwrap()
    }

    fn relative_residual(y: f64, c: f64, q: f64) -> f64 {
        let scale = y.abs().max(c.abs()).max(q / y);
        (y - c - q / y).abs() / scale
    }

    #[test]
    fn root_at_zero_linear_term() {
        let y = positive_root(0.0, 1.5 * 0.1);
        assert!((y - 0.6f64.sqrt() / 2.0).abs() < 1e-15);
        assert!((y - 0.387_298_334_620_741_7).abs() < 1e-12);
    }

    #[test]
    fn root_degenerates_to_c() {
        let y = positive_root(0.8, 1e-300);
        assert!((y - 0.8).abs() < 1e-15);
        let tiny_negative = positive_root(-0.8, 1e-20);
        assert!(tiny_negative > 0.0 && tiny_negative < 1e-19);
    }

    #[test]
    fn root_satisfies_quadratic() {
        for c in [-1e6, -3.0, -1e-3, 0.0, 1e-8, 0.5, 7.0, 1e9] {
            for q in [1e-9, 1e-4, 0.1, 2.0] {
                let y = positive_root(c, q);
                assert!(y > 0.0);
                assert!(relative_residual(y, c, q) <= 1e-12, "c={c} q={q}");
            }
        }
    }

    #[test]
    fn stem2_radius_example() {
        assert!((stem2_radius(4.0, 2f64.powi(-6)) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn stem2_without_active_truncation_is_untamed_drift() {
        let p = params();
        let (dt, y, db) = (2f64.powi(-6), 1.2, 0.05);
        let s = stem2_step(&p, dt, &StepState::new(y), db).unwrap();
        let c = y + (-p.a0 + p.a1 * y - p.a2 * y.powi(4)) * dt + p.b * y.powf(1.5) * db;
        assert_eq!(s.x_pos, positive_root(c, p.a_m1 * dt));
    }

    #[test]
    fn stem_matches_hand_computation() {
        let p = params();
        let (dt, y, db) = (0.01f64, 0.9f64, -0.03);
        let yk = y.powi(4);
        let tame = 1.0 + 0.1 * yk;
        let c = y + (-2.0 + y - 2.0 * yk / tame) * dt + y.powf(1.5) / tame * db;
        let s = stem_step(&p, dt, &StepState::new(y), db).unwrap();
        assert!((s.x_pos - positive_root(c, 1.5 * dt)).abs() < 1e-15);
        assert!(relative_residual(s.x_pos, c, 1.5 * dt) <= 1e-12);
    }

    #[test]
    fn requires_singular_term() {
        let mut p = params();
        p.a_m1 = 0.0;
        assert!(stem_step(&p, 0.1, &StepState::new(1.0), 0.0).is_err());
    }
}
