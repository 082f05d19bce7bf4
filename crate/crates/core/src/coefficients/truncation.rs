//! Truncation mapping `π_Δ(x) = (1/R) ∨ (x ∧ R)` with `R(Δ) = L₁Δ^{−γ}`,
//! the truncated coefficients built on it, and the recommended radius
//! settings for each (model, scheme) pair.

use crate::coefficients::model::{finite, ModelKind, ModelSpec};
use crate::error::{Result, SdeError};
use crate::schemes::SchemeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TruncationKind {
    /// Clamp onto `[1/R, R]` with `R = l1 · dt^{−γ}`.
    TwoSided,
    /// Clamp onto `[−R, R]` with `R = l1 + γ · log(1/dt)` (log TEM, where
    /// `l1` plays the role of the additive constant `C`).
    SymmetricLog,
}

/// Truncation radius law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationConfig {
    pub l1: f64,
    pub gamma: f64,
    pub kind: TruncationKind,
}

/// Which radius exponent [`recommended_truncation`] should return for TEM.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RadiusVariant {
    /// Exponent that yields the optimal strong rate.
    #[default]
    Convergence,
    /// `γ = 1/(2(α∨β)+4)`, which additionally bounds moments and inverse
    /// moments of the truncated iterate.
    MomentBound,
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma <= 1.0 {
        Ok(())
    } else {
        Err(SdeError::invalid("gamma", format!("must lie in (0, 1], got {gamma}")))
    }
}

impl TruncationConfig {
    pub fn two_sided(l1: f64, gamma: f64) -> Result<Self> {
        if !(l1 > 0.0 && l1.is_finite()) {
            return Err(SdeError::invalid("l1", format!("must be finite and > 0, got {l1}")));
        }
        check_gamma(gamma)?;
        Ok(Self {
            l1,
            gamma,
            kind: TruncationKind::TwoSided,
        })
    }

    pub fn symmetric_log(c: f64, gamma: f64) -> Result<Self> {
        if !(c >= 0.0 && c.is_finite()) {
            return Err(SdeError::invalid("l1", format!("log constant must be finite and >= 0, got {c}")));
        }
        check_gamma(gamma)?;
        Ok(Self {
            l1: c,
            gamma,
            kind: TruncationKind::SymmetricLog,
        })
    }

    /// Radius at step size `dt`.
    pub fn radius(&self, dt: f64) -> Result<f64> {
        check_dt(dt)?;
        Ok(match self.kind {
            TruncationKind::TwoSided => self.l1 * dt.powf(-self.gamma),
            TruncationKind::SymmetricLog => self.l1 + self.gamma * (1.0 / dt).ln(),
        })
    }

    /// Radius at `dt`, additionally enforcing `R ≥ max(x0, 1/x0)` for a
    /// two-sided truncation attached to `model`.
    pub fn radius_for(&self, model: &ModelSpec, dt: f64) -> Result<f64> {
        let r = self.radius(dt)?;
        if self.kind == TruncationKind::TwoSided {
            let x0 = model.initial_state();
            let bound = x0.max(1.0 / x0);
            if r < bound {
                return Err(SdeError::RadiusBelowBound { radius: r, bound });
            }
        }
        Ok(r)
    }
}

pub(crate) fn check_dt(dt: f64) -> Result<()> {
    if dt > 0.0 && dt <= 1.0 {
        Ok(())
    } else {
        Err(SdeError::StepOutOfDomain(dt))
    }
}

/// `R(Δ)` for `cfg`.
pub fn truncation_radius(cfg: &TruncationConfig, dt: f64) -> Result<f64> {
    cfg.radius(dt)
}

/// `π(x) = (1/R) ∨ (x ∧ R)`.
pub fn project(x: f64, radius: f64) -> Result<f64> {
    if !(radius >= 1.0) {
        return Err(SdeError::DegenerateRadius(radius));
    }
    Ok(clamp_two_sided(x, radius))
}

#[inline]
pub(crate) fn clamp_two_sided(x: f64, radius: f64) -> f64 {
    (1.0 / radius).max(x.min(radius))
}

/// `π̂(x) = (−R) ∨ (x ∧ R)`.
#[inline]
pub fn project_symmetric(x: f64, radius: f64) -> f64 {
    (-radius).max(x.min(radius))
}

/// Model coefficients composed with the two-sided projection at a fixed
/// radius. Defined for every real argument.
#[derive(Debug, Clone, Copy)]
pub struct Truncated<'a> {
    pub model: &'a ModelSpec,
    pub radius: f64,
}

impl<'a> Truncated<'a> {
    pub fn new(model: &'a ModelSpec, radius: f64) -> Result<Self> {
        if !(radius >= 1.0) {
            return Err(SdeError::DegenerateRadius(radius));
        }
        Ok(Self { model, radius })
    }

    #[inline]
    pub fn project(&self, x: f64) -> f64 {
        clamp_two_sided(x, self.radius)
    }

    #[inline]
    pub fn drift(&self, x: f64) -> Result<f64> {
        let y = self.project(x);
        finite("drift", y, self.model.drift(y))
    }

    #[inline]
    pub fn diffusion(&self, x: f64) -> Result<f64> {
        let y = self.project(x);
        finite("diffusion", y, self.model.diffusion(y))
    }

    #[inline]
    pub fn levy(&self, x: f64) -> Result<f64> {
        let y = self.project(x);
        finite("diffusion_levy", y, self.model.diffusion_levy(y))
    }

    #[inline]
    pub fn diffusion_derivative(&self, x: f64) -> Result<f64> {
        let y = self.project(x);
        finite("diffusion_derivative", y, self.model.diffusion_derivative(y))
    }
}

/// `f_Δ(x) = f(π_Δ(x))`.
pub fn truncated_drift(model: &ModelSpec, cfg: &TruncationConfig, dt: f64, x: f64) -> Result<f64> {
    Truncated::new(model, cfg.radius(dt)?)?.drift(x)
}

/// `g_Δ(x) = g(π_Δ(x))`.
pub fn truncated_diffusion(model: &ModelSpec, cfg: &TruncationConfig, dt: f64, x: f64) -> Result<f64> {
    Truncated::new(model, cfg.radius(dt)?)?.diffusion(x)
}

/// `(g'·g)_Δ(x) = (g'·g)(π_Δ(x))`.
pub fn truncated_levy(model: &ModelSpec, cfg: &TruncationConfig, dt: f64, x: f64) -> Result<f64> {
    Truncated::new(model, cfg.radius(dt)?)?.levy(x)
}

/// Smallest admissible `L₁`: `max(x0, 1/x0, 1)`.
pub fn default_l1(model: &ModelSpec) -> f64 {
    let x0 = model.initial_state();
    x0.max(1.0 / x0).max(1.0)
}

/// Default log-TEM constant `C = |log x0| + 1`.
pub fn default_log_constant(model: &ModelSpec) -> f64 {
    model.initial_state().ln().abs() + 1.0
}

/// Generic radius exponent from the convergence theorems, ignoring any
/// model-specific corollary: `1/(2(α∨β))` for TEM and `1/(2(α̂∨β̂))` for
/// TMil, capped at 1.
pub fn generic_truncation(model: &ModelSpec, scheme: SchemeId, variant: RadiusVariant) -> Result<TruncationConfig> {
    let e = model.exponents();
    let gamma = match (scheme, variant) {
        (SchemeId::Tem, RadiusVariant::Convergence) => 1.0 / (2.0 * e.growth()),
        (SchemeId::Tem, RadiusVariant::MomentBound) => 1.0 / (2.0 * e.growth() + 4.0),
        (SchemeId::Tmil, _) => 1.0 / (2.0 * e.milstein_growth()),
        (SchemeId::LogTem, _) => {
            let denom = e.alpha.max(e.beta + 1.0);
            return TruncationConfig::symmetric_log(default_log_constant(model), 1.0 / denom);
        }
        _ => {
            return Err(SdeError::Unsupported {
                model: model.kind(),
                scheme,
            })
        }
    };
    TruncationConfig::two_sided(default_l1(model), gamma.min(1.0))
}

/// Radius law prescribed for `scheme` on `model`.
///
/// Model-specific corollaries take precedence over the generic theorem
/// exponent; their parameter preconditions are enforced. Only TEM, TMil and
/// log TEM use a truncation radius.
pub fn recommended_truncation(
    model: &ModelSpec,
    scheme: SchemeId,
    variant: RadiusVariant,
) -> Result<TruncationConfig> {
    if !matches!(scheme, SchemeId::Tem | SchemeId::Tmil | SchemeId::LogTem) {
        return Err(SdeError::Unsupported {
            model: model.kind(),
            scheme,
        });
    }
    if scheme == SchemeId::LogTem || (scheme == SchemeId::Tem && variant == RadiusVariant::MomentBound) {
        return generic_truncation(model, scheme, variant);
    }
    let tem = scheme == SchemeId::Tem;
    let gamma = match model.kind() {
        ModelKind::ThreeHalves => {
            let p = model.three_halves_params().expect("kind checked");
            let lambda = p.lambda();
            if tem {
                if !p.tem_ok() {
                    return Err(SdeError::Precondition(format!("3/2 TEM needs λ > 6, got λ = {lambda}")));
                }
                1.0 / (lambda - 4.0)
            } else {
                if !p.tmil_ok() {
                    return Err(SdeError::Precondition(format!("3/2 TMil needs λ > 8, got λ = {lambda}")));
                }
                0.5
            }
        }
        ModelKind::AitSahalia => {
            let p = model.ait_params().expect("kind checked");
            if !p.is_valid() {
                return Err(SdeError::Precondition(format!(
                    "Aït-Sahalia needs κ + 1 > 2θ, got κ + 1 = {} and 2θ = {}",
                    p.kappa + 1.0,
                    2.0 * p.theta
                )));
            }
            if tem {
                1.0 / (2.0 * p.kappa + 2.0).max(8.0)
            } else {
                1.0 / (2.0 * p.kappa - 2.0).max(4.0)
            }
        }
        ModelKind::CirLamperti => {
            let p = model.cir_params().expect("kind checked");
            if !p.lamperti_ok() {
                return Err(SdeError::Precondition(format!("Lamperti CIR needs ϖ > 5, got ϖ = {}", p.varpi())));
            }
            if tem {
                0.125
            } else {
                0.25
            }
        }
        ModelKind::Custom => return generic_truncation(model, scheme, variant),
    };
    TruncationConfig::two_sided(default_l1(model), gamma)
}
