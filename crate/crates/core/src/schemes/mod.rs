//! One-step maps and the path driver.
//!
//! | id       | update |
//! |----------|--------|
//! | `tem`    | `X' = X + f(π(X))Δ + g(π(X))ΔB`, reading `π(X')` |
//! | `tmil`   | TEM `+ (g'g)(π(X))·½(ΔB² − Δ)` |
//! | `em`     | `Y' = Y + f(Y)Δ + g(|Y|)ΔB` |
//! | `bem`    | `Y' − f(Y')Δ = Y + g(|Y|)ΔB`, solved for the positive root |
//! | `logtem` | explicit truncated EM on `Z = log Y` with a symmetric clamp |
//! | `stem`   | Aït-Sahalia only: `a₋₁/Y'` implicit, super-linear terms tamed |
//! | `stem2`  | Aït-Sahalia only: `a₋₁/Y'` implicit, super-linear terms truncated |
//!
//! Step functions are pure. [`Stepper`] caches everything that depends only
//! on `(scheme, model, dt)` so that the path driver does no per-step setup.

mod driver;
mod explicit;
mod implicit;
mod log_tem;
mod semi_implicit;

use std::fmt;
use std::str::FromStr;

use crate::coefficients::{
    check_dt, recommended_truncation, ModelKind, ModelSpec, RadiusVariant, Truncated, TruncationConfig,
    TruncationKind,
};
use crate::error::{Result, SdeError};

pub use driver::{integrate, integrate_with, PathResult, Record};
pub use explicit::{em_step, tem_step, tmil_step};
pub use implicit::{bem_step, solve_bem};
pub use log_tem::log_tem_step;
pub use semi_implicit::{positive_root, stem2_radius, stem2_step, stem_step};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SchemeId {
    Tem,
    Tmil,
    Em,
    Bem,
    LogTem,
    Stem,
    Stem2,
}

impl SchemeId {
    pub const ALL: [SchemeId; 7] = [
        SchemeId::Tem,
        SchemeId::Tmil,
        SchemeId::Em,
        SchemeId::Bem,
        SchemeId::LogTem,
        SchemeId::Stem,
        SchemeId::Stem2,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SchemeId::Tem => "tem",
            SchemeId::Tmil => "tmil",
            SchemeId::Em => "em",
            SchemeId::Bem => "bem",
            SchemeId::LogTem => "logtem",
            SchemeId::Stem => "stem",
            SchemeId::Stem2 => "stem2",
        }
    }

    /// Whether `x_pos` is guaranteed positive.
    pub fn preserves_positivity(self) -> bool {
        self != SchemeId::Em
    }

    /// Whether the scheme reads a truncation radius law.
    pub fn uses_truncation(self) -> bool {
        matches!(self, SchemeId::Tem | SchemeId::Tmil | SchemeId::LogTem)
    }

    pub fn supports(self, model: ModelKind) -> bool {
        match self {
            SchemeId::Stem | SchemeId::Stem2 => model == ModelKind::AitSahalia,
            _ => true,
        }
    }
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SchemeId {
    type Err = SdeError;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| !c.is_whitespace() && *c != '-' && *c != '_')
            .collect::<String>()
            .to_ascii_lowercase();
        SchemeId::ALL
            .into_iter()
            .find(|id| id.as_str() == key)
            .ok_or_else(|| SdeError::invalid("scheme", format!("unknown scheme `{s}`")))
    }
}

/// Numerical state carried between steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepState {
    /// Scheme-native state: pre-projection iterate for TEM/TMil, the EM
    /// iterate (possibly ≤ 0), and the positive iterate for the rest.
    pub x_raw: f64,
    /// Positivity-guaranteed reading. Equals `x_raw` for EM, which does not
    /// preserve positivity.
    pub x_pos: f64,
    /// Log-state `Z` for log TEM.
    pub aux: Option<f64>,
}

impl StepState {
    pub fn new(x: f64) -> Self {
        Self {
            x_raw: x,
            x_pos: x,
            aux: None,
        }
    }
}

/// Settings for the backward-EM root solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_iter: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            rel_tol: 1e-12,
            abs_tol: 1e-14,
            max_iter: 200,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) {
            return Err(SdeError::invalid("rel_tol", "must be > 0"));
        }
        if !(self.abs_tol > 0.0) {
            return Err(SdeError::invalid("abs_tol", "must be > 0"));
        }
        if self.max_iter == 0 {
            return Err(SdeError::invalid("max_iter", "must be >= 1"));
        }
        Ok(())
    }
}

/// Scheme-specific settings.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SchemeParams {
    /// Radius law for TEM/TMil/log TEM; the recommended one when `None`.
    pub truncation: Option<TruncationConfig>,
    pub solver: SolverSettings,
}

impl SchemeParams {
    pub fn with_truncation(truncation: TruncationConfig) -> Self {
        Self {
            truncation: Some(truncation),
            ..Self::default()
        }
    }
}

/// A one-step map prepared for a fixed `(scheme, model, dt)`.
#[derive(Debug, Clone)]
pub struct Stepper<'m> {
    scheme: SchemeId,
    model: &'m ModelSpec,
    dt: f64,
    /// Two-sided R for TEM/TMil, symmetric R for log TEM and STEM2,
    /// infinite otherwise.
    radius: f64,
    solver: SolverSettings,
    ait: Option<semi_implicit::AitKernel>,
}

impl<'m> Stepper<'m> {
    pub fn new(scheme: SchemeId, model: &'m ModelSpec, params: &SchemeParams, dt: f64) -> Result<Self> {
        check_dt(dt)?;
        if !scheme.supports(model.kind()) {
            return Err(SdeError::Unsupported {
                model: model.kind(),
                scheme,
            });
        }
        params.solver.validate()?;
        let truncation = if scheme.uses_truncation() {
            Some(match params.truncation {
                Some(t) => t,
                None => recommended_truncation(model, scheme, RadiusVariant::Convergence)?,
            })
        } else {
            None
        };
        let mut radius = f64::INFINITY;
        let mut ait = None;
        match scheme {
            SchemeId::Tem | SchemeId::Tmil => {
                let t = truncation.expect("set above");
                if t.kind != TruncationKind::TwoSided {
                    return Err(SdeError::invalid("truncation", format!("{scheme} needs a two-sided truncation")));
                }
                radius = t.radius_for(model, dt)?;
            }
            SchemeId::LogTem => {
                let t = truncation.expect("set above");
                if t.kind != TruncationKind::SymmetricLog {
                    return Err(SdeError::invalid("truncation", "log TEM needs a symmetric log truncation"));
                }
                radius = t.radius(dt)?;
                let z0 = model.initial_state().ln();
                if z0.abs() > radius {
                    return Err(SdeError::RadiusBelowBound {
                        radius,
                        bound: z0.abs(),
                    });
                }
            }
            SchemeId::Bem => {
                if let Some(sup) = model.drift_derivative_sup() {
                    if !(dt * sup < 1.0) {
                        return Err(SdeError::Precondition(format!(
                            "backward EM needs dt · sup f' < 1 for a unique root, got {dt} · {sup}"
                        )));
                    }
                }
            }
            SchemeId::Stem | SchemeId::Stem2 => {
                let p = model.ait_params().expect("support checked");
                let kernel = semi_implicit::AitKernel::new(p)?;
                if scheme == SchemeId::Stem2 {
                    radius = stem2_radius(p.kappa, dt);
                }
                ait = Some(kernel);
            }
            SchemeId::Em => {}
        }
        Ok(Self {
            scheme,
            model,
            dt,
            radius,
            solver: params.solver,
            ait,
        })
    }

    pub fn scheme(&self) -> SchemeId {
        self.scheme
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn model(&self) -> &'m ModelSpec {
        self.model
    }

    pub fn initial_state(&self) -> StepState {
        let x0 = self.model.initial_state();
        match self.scheme {
            SchemeId::Tem | SchemeId::Tmil => StepState {
                x_raw: x0,
                x_pos: crate::coefficients::clamp_two_sided(x0, self.radius),
                aux: None,
            },
            SchemeId::LogTem => StepState {
                x_raw: x0,
                x_pos: x0,
                aux: Some(x0.ln()),
            },
            _ => StepState::new(x0),
        }
    }

    /// Advance one step with Brownian increment `db`.
    #[inline]
    pub fn step(&self, state: &StepState, db: f64) -> Result<StepState> {
        let dt = self.dt;
        match self.scheme {
            SchemeId::Tem => explicit::tem_update(&self.truncated(), dt, state.x_raw, db),
            SchemeId::Tmil => explicit::tmil_update(&self.truncated(), dt, state.x_raw, db),
            SchemeId::Em => explicit::em_update(self.model, dt, state.x_raw, db),
            SchemeId::Bem => implicit::bem_update(self.model, dt, state.x_pos, db, &self.solver),
            SchemeId::LogTem => {
                let z = state.aux.unwrap_or_else(|| state.x_pos.ln());
                log_tem::log_tem_update(self.model, self.radius, dt, z, db)
            }
            SchemeId::Stem => Ok(self.ait.as_ref().expect("set in new").stem(dt, state.x_pos, db)),
            SchemeId::Stem2 => Ok(self.ait.as_ref().expect("set in new").stem2(self.radius, dt, state.x_pos, db)),
        }
    }

    /// Whether the truncation altered the argument of the coefficients when
    /// stepping from `state`.
    #[inline]
    pub fn truncation_active(&self, state: &StepState) -> bool {
        match self.scheme {
            SchemeId::Tem | SchemeId::Tmil => state.x_pos != state.x_raw,
            SchemeId::LogTem => state.aux.is_some_and(|z| z.abs() > self.radius),
            SchemeId::Stem2 => state.x_pos > self.radius,
            _ => false,
        }
    }

    #[inline]
    fn truncated(&self) -> Truncated<'m> {
        Truncated {
            model: self.model,
            radius: self.radius,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{AitSahaliaParams, ThreeHalvesParams};

    #[test]
    fn scheme_names_round_trip() {
        for id in SchemeId::ALL {
            assert_eq!(id.as_str().parse::<SchemeId>().unwrap(), id);
        }
        assert_eq!("log TEM".parse::<SchemeId>().unwrap(), SchemeId::LogTem);
        assert_eq!("TMil".parse::<SchemeId>().unwrap(), SchemeId::Tmil);
        assert!("rk4".parse::<SchemeId>().is_err());
    }

    #[test]
    fn stem_only_for_ait() {
        let m = ModelSpec::three_halves(ThreeHalvesParams::new(4.0, 1.0, 1.0, 2.0).unwrap());
        let p = SchemeParams::default();
        assert!(matches!(
            Stepper::new(SchemeId::Stem, &m, &p, 0.01),
            Err(SdeError::Unsupported { .. })
        ));
        assert!(Stepper::new(SchemeId::Stem2, &m, &p, 0.01).is_err());
        let ait = ModelSpec::ait_sahalia(AitSahaliaParams::new(1.5, 2.0, 1.0, 2.0, 1.0, 4.0, 1.5, 1.0).unwrap());
        assert!(Stepper::new(SchemeId::Stem, &ait, &p, 0.01).is_ok());
    }

    #[test]
    fn bem_precondition_checked() {
        // sup f' = c1 c2 = 4
        let m = ModelSpec::three_halves(ThreeHalvesParams::new(4.0, 1.0, 1.0, 2.0).unwrap());
        let p = SchemeParams::default();
        assert!(matches!(Stepper::new(SchemeId::Bem, &m, &p, 0.25), Err(SdeError::Precondition(_))));
        assert!(Stepper::new(SchemeId::Bem, &m, &p, 0.125).is_ok());
    }

    #[test]
    fn stepper_rejects_bad_dt_and_small_radius() {
        let m = ModelSpec::three_halves(ThreeHalvesParams::new(4.0, 1.0, 1.0, 2.0).unwrap());
        let p = SchemeParams::default();
        assert!(matches!(Stepper::new(SchemeId::Em, &m, &p, 2.0), Err(SdeError::StepOutOfDomain(_))));
        let tight = SchemeParams::with_truncation(TruncationConfig::two_sided(1.0, 0.01).unwrap());
        assert!(matches!(
            Stepper::new(SchemeId::Tem, &m, &tight, 0.5),
            Err(SdeError::RadiusBelowBound { .. })
        ));
    }
}
