//! SDE model catalogue.
//!
//! Every model is a scalar, autonomous SDE `dX = f(X) dt + g(X) dB` on the
//! positive half line. A model exposes the five evaluators the schemes and
//! diagnostics need (`f`, `g`, `g'·g`, `f'`, `g'`) together with the
//! Hölder-type growth exponents that drive the choice of truncation radius.

use std::fmt;
use std::sync::Arc;

use crate::error::{Result, SdeError};

/// Which family a [`ModelSpec`] belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    ThreeHalves,
    AitSahalia,
    CirLamperti,
    Custom,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            ModelKind::ThreeHalves => "three-halves",
            ModelKind::AitSahalia => "ait-sahalia",
            ModelKind::CirLamperti => "cir-lamperti",
            ModelKind::Custom => "custom",
        };
        f.write_str(name)
    }
}

/// Growth exponents of a model.
///
/// `alpha`/`beta` bound the local Lipschitz constant of `f` and `g` by
/// `1 + x^alpha + x^-beta`; `alpha_hat`/`beta_hat` play the same role for
/// second derivatives and govern the Milstein radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exponents {
    pub alpha: f64,
    pub beta: f64,
    pub alpha_hat: f64,
    pub beta_hat: f64,
}

impl Exponents {
    pub fn new(alpha: f64, beta: f64, alpha_hat: f64, beta_hat: f64) -> Result<Self> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(SdeError::invalid("alpha", format!("must be finite and >= 0, got {alpha}")));
        }
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(SdeError::invalid("beta", format!("must be finite and >= 0, got {beta}")));
        }
        if !(alpha_hat >= 1.0 && alpha_hat.is_finite()) {
            return Err(SdeError::invalid(
                "alpha_hat",
                format!("must be finite and >= 1, got {alpha_hat}"),
            ));
        }
        if !(beta_hat >= 0.0 && beta_hat.is_finite()) {
            return Err(SdeError::invalid(
                "beta_hat",
                format!("must be finite and >= 0, got {beta_hat}"),
            ));
        }
        Ok(Self {
            alpha,
            beta,
            alpha_hat,
            beta_hat,
        })
    }

    /// `alpha ∨ beta`.
    pub fn growth(&self) -> f64 {
        self.alpha.max(self.beta)
    }

    /// `alpha_hat ∨ beta_hat`.
    pub fn milstein_growth(&self) -> f64 {
        self.alpha_hat.max(self.beta_hat)
    }
}

/// Real power with a fast path for small integer exponents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Power {
    exp: f64,
    int: Option<i32>,
}

impl Power {
    pub(crate) fn new(exp: f64) -> Self {
        let int = (exp.fract() == 0.0 && exp.abs() <= 64.0).then_some(exp as i32);
        Self { exp, int }
    }

    #[inline]
    pub(crate) fn eval(&self, x: f64) -> f64 {
        match self.int {
            Some(n) => x.powi(n),
            None => x.powf(self.exp),
        }
    }
}

fn require_positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(SdeError::invalid(name, format!("must be finite and > 0, got {v}")))
    }
}

fn require_nonneg(name: &'static str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(SdeError::invalid(name, format!("must be finite and >= 0, got {v}")))
    }
}

/// Heston 3/2 volatility process `dX = c1 X (c2 − X) dt + σ X^{3/2} dB`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThreeHalvesParams {
    pub c1: f64,
    pub c2: f64,
    pub sigma: f64,
    pub x0: f64,
}

impl ThreeHalvesParams {
    pub fn new(c1: f64, c2: f64, sigma: f64, x0: f64) -> Result<Self> {
        require_positive("c1", c1)?;
        require_positive("c2", c2)?;
        require_positive("sigma", sigma)?;
        require_positive("x0", x0)?;
        Ok(Self { c1, c2, sigma, x0 })
    }

    /// Moment threshold `λ = 2 + 2 c1 / σ²`: `E|X|^p < ∞` for `p < λ`.
    pub fn lambda(&self) -> f64 {
        2.0 + 2.0 * self.c1 / (self.sigma * self.sigma)
    }

    pub fn tem_ok(&self) -> bool {
        self.lambda() > 6.0
    }

    pub fn tmil_ok(&self) -> bool {
        self.lambda() > 8.0
    }
}

/// Aït-Sahalia short-rate model
/// `dX = (a₋₁/X − a₀ + a₁X − a₂X^κ) dt + b X^θ dB`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AitSahaliaParams {
    pub a_m1: f64,
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
    pub b: f64,
    pub kappa: f64,
    pub theta: f64,
    pub x0: f64,
}

impl AitSahaliaParams {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        a_m1: f64,
        a0: f64,
        a1: f64,
        a2: f64,
        b: f64,
        kappa: f64,
        theta: f64,
        x0: f64,
    ) -> Result<Self> {
        require_nonneg("a_m1", a_m1)?;
        require_nonneg("a0", a0)?;
        require_nonneg("a1", a1)?;
        require_nonneg("a2", a2)?;
        require_nonneg("b", b)?;
        if !(kappa > 1.0 && kappa.is_finite()) {
            return Err(SdeError::invalid("kappa", format!("must be > 1, got {kappa}")));
        }
        if !(theta > 1.0 && theta.is_finite()) {
            return Err(SdeError::invalid("theta", format!("must be > 1, got {theta}")));
        }
        require_positive("x0", x0)?;
        Ok(Self {
            a_m1,
            a0,
            a1,
            a2,
            b,
            kappa,
            theta,
            x0,
        })
    }

    /// `κ + 1 > 2θ`: strong solution on (0, ∞) with all moments finite.
    pub fn is_valid(&self) -> bool {
        self.kappa + 1.0 > 2.0 * self.theta
    }
}

/// Cox–Ingersoll–Ross process `dX = b1 (b2 − X) dt + σ √X dB`.
///
/// Simulated through the Lamperti transform `Y = √X`, which yields
/// `dY = (â/Y + b̂Y) dt − (σ/2) dB`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CirParams {
    pub b1: f64,
    pub b2: f64,
    pub sigma: f64,
    pub x0: f64,
}

impl CirParams {
    pub fn new(b1: f64, b2: f64, sigma: f64, x0: f64) -> Result<Self> {
        require_positive("b1", b1)?;
        require_positive("b2", b2)?;
        require_positive("sigma", sigma)?;
        require_positive("x0", x0)?;
        Ok(Self { b1, b2, sigma, x0 })
    }

    /// `ϖ = 2 b1 b2 / σ²`.
    pub fn varpi(&self) -> f64 {
        2.0 * self.b1 * self.b2 / (self.sigma * self.sigma)
    }

    pub fn feller(&self) -> bool {
        self.varpi() > 1.0
    }

    /// `ϖ > 5`, required for the Lamperti TEM/TMil convergence results.
    pub fn lamperti_ok(&self) -> bool {
        self.varpi() > 5.0
    }

    pub fn a_hat(&self) -> f64 {
        (4.0 * self.b1 * self.b2 - self.sigma * self.sigma) / 8.0
    }

    pub fn b_hat(&self) -> f64 {
        -self.b1 / 2.0
    }
}

/// `Y = √X`.
pub fn lamperti_forward(x: f64) -> Result<f64> {
    if x > 0.0 {
        Ok(x.sqrt())
    } else {
        Err(SdeError::invalid("x", format!("Lamperti transform needs x > 0, got {x}")))
    }
}

/// `X = Y²`.
pub fn lamperti_back(y: f64) -> f64 {
    y * y
}

pub type Evaluator = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// User-supplied model. All five evaluators and all four exponents are
/// required; nothing is differentiated symbolically.
#[derive(Clone)]
pub struct CustomModel {
    pub drift: Evaluator,
    pub diffusion: Evaluator,
    pub diffusion_levy: Evaluator,
    pub drift_derivative: Evaluator,
    pub diffusion_derivative: Evaluator,
    pub exponents: Exponents,
    pub x0: f64,
    /// Upper bound of `f'` on ℝ₊ when known; enables the backward-EM
    /// uniqueness check.
    pub drift_derivative_sup: Option<f64>,
}

impl fmt::Debug for CustomModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomModel")
            .field("exponents", &self.exponents)
            .field("x0", &self.x0)
            .field("drift_derivative_sup", &self.drift_derivative_sup)
            .finish_non_exhaustive()
    }
}

impl CustomModel {
    /// Constant drift `mu` and constant diffusion `sigma`; the scheme with
    /// these coefficients reproduces `x0 + μt + σB(t)` exactly.
    pub fn additive(mu: f64, sigma: f64, x0: f64) -> Result<Self> {
        require_positive("x0", x0)?;
        Ok(Self {
            drift: Arc::new(move |_| mu),
            diffusion: Arc::new(move |_| sigma),
            diffusion_levy: Arc::new(|_| 0.0),
            drift_derivative: Arc::new(|_| 0.0),
            diffusion_derivative: Arc::new(|_| 0.0),
            exponents: Exponents::new(0.0, 0.0, 1.0, 0.0)?,
            x0,
            drift_derivative_sup: Some(0.0),
        })
    }
}

#[derive(Debug, Clone)]
pub(crate) struct AitCache {
    kappa: Power,
    kappa_m1: Power,
    theta: Power,
    theta_m1: Power,
    levy: Power,
}

/// A named SDE together with its parameter record.
#[derive(Debug, Clone)]
pub struct ModelSpec {
    inner: Inner,
}

#[derive(Debug, Clone)]
enum Inner {
    ThreeHalves(ThreeHalvesParams),
    AitSahalia(AitSahaliaParams, AitCache),
    CirLamperti(CirParams),
    Custom(CustomModel),
}

impl ModelSpec {
    pub fn three_halves(p: ThreeHalvesParams) -> Self {
        Self {
            inner: Inner::ThreeHalves(p),
        }
    }

    pub fn ait_sahalia(p: AitSahaliaParams) -> Self {
        let cache = AitCache {
            kappa: Power::new(p.kappa),
            kappa_m1: Power::new(p.kappa - 1.0),
            theta: Power::new(p.theta),
            theta_m1: Power::new(p.theta - 1.0),
            levy: Power::new(2.0 * p.theta - 1.0),
        };
        Self {
            inner: Inner::AitSahalia(p, cache),
        }
    }

    pub fn cir_lamperti(p: CirParams) -> Self {
        Self {
            inner: Inner::CirLamperti(p),
        }
    }

    pub fn custom(m: CustomModel) -> Self {
        Self {
            inner: Inner::Custom(m),
        }
    }

    pub fn kind(&self) -> ModelKind {
        match &self.inner {
            Inner::ThreeHalves(_) => ModelKind::ThreeHalves,
            Inner::AitSahalia(..) => ModelKind::AitSahalia,
            Inner::CirLamperti(_) => ModelKind::CirLamperti,
            Inner::Custom(_) => ModelKind::Custom,
        }
    }

    pub fn three_halves_params(&self) -> Option<&ThreeHalvesParams> {
        match &self.inner {
            Inner::ThreeHalves(p) => Some(p),
            _ => None,
        }
    }

    pub fn ait_params(&self) -> Option<&AitSahaliaParams> {
        match &self.inner {
            Inner::AitSahalia(p, _) => Some(p),
            _ => None,
        }
    }

    pub fn cir_params(&self) -> Option<&CirParams> {
        match &self.inner {
            Inner::CirLamperti(p) => Some(p),
            _ => None,
        }
    }

    /// Initial state of the simulated equation. For the Lamperti CIR model
    /// this is `√x0`, not the CIR starting value.
    pub fn initial_state(&self) -> f64 {
        match &self.inner {
            Inner::ThreeHalves(p) => p.x0,
            Inner::AitSahalia(p, _) => p.x0,
            Inner::CirLamperti(p) => p.x0.sqrt(),
            Inner::Custom(m) => m.x0,
        }
    }

    pub fn exponents(&self) -> Exponents {
        match &self.inner {
            Inner::ThreeHalves(_) => Exponents {
                alpha: 1.0,
                beta: 0.0,
                alpha_hat: 1.0,
                beta_hat: 0.0,
            },
            Inner::AitSahalia(p, _) => Exponents {
                alpha: p.kappa - 1.0,
                beta: 2.0,
                alpha_hat: p.kappa - 1.0,
                beta_hat: 2.0,
            },
            Inner::CirLamperti(_) => Exponents {
                alpha: 0.0,
                beta: 2.0,
                alpha_hat: 1.0,
                beta_hat: 2.0,
            },
            Inner::Custom(m) => m.exponents,
        }
    }

    /// `f`.
    #[inline]
    pub fn drift(&self, x: f64) -> f64 {
        match &self.inner {
            Inner::ThreeHalves(p) => p.c1 * x * (p.c2 - x),
            Inner::AitSahalia(p, c) => {
                p.a_m1 / x - p.a0 + p.a1 * x - p.a2 * c.kappa.eval(x)
            }
            Inner::CirLamperti(p) => p.a_hat() / x + p.b_hat() * x,
            Inner::Custom(m) => (m.drift)(x),
        }
    }

    /// `g`.
    #[inline]
    pub fn diffusion(&self, x: f64) -> f64 {
        match &self.inner {
            Inner::ThreeHalves(p) => p.sigma * x * x.sqrt(),
            Inner::AitSahalia(p, c) => p.b * c.theta.eval(x),
            Inner::CirLamperti(p) => -0.5 * p.sigma,
            Inner::Custom(m) => (m.diffusion)(x),
        }
    }

    /// `g'·g`.
    #[inline]
    pub fn diffusion_levy(&self, x: f64) -> f64 {
        match &self.inner {
            Inner::ThreeHalves(p) => 1.5 * p.sigma * p.sigma * x * x,
            Inner::AitSahalia(p, c) => p.b * p.b * p.theta * c.levy.eval(x),
            Inner::CirLamperti(_) => 0.0,
            Inner::Custom(m) => (m.diffusion_levy)(x),
        }
    }

    /// `f'`.
    #[inline]
    pub fn drift_derivative(&self, x: f64) -> f64 {
        match &self.inner {
            Inner::ThreeHalves(p) => p.c1 * p.c2 - 2.0 * p.c1 * x,
            Inner::AitSahalia(p, c) => {
                -p.a_m1 / (x * x) + p.a1 - p.a2 * p.kappa * c.kappa_m1.eval(x)
            }
            Inner::CirLamperti(p) => -p.a_hat() / (x * x) + p.b_hat(),
            Inner::Custom(m) => (m.drift_derivative)(x),
        }
    }

    /// `g'`.
    #[inline]
    pub fn diffusion_derivative(&self, x: f64) -> f64 {
        match &self.inner {
            Inner::ThreeHalves(p) => 1.5 * p.sigma * x.sqrt(),
            Inner::AitSahalia(p, c) => p.b * p.theta * c.theta_m1.eval(x),
            Inner::CirLamperti(_) => 0.0,
            Inner::Custom(m) => (m.diffusion_derivative)(x),
        }
    }

    /// `sup_{x>0} f'(x)` when a closed-form bound is known.
    pub fn drift_derivative_sup(&self) -> Option<f64> {
        match &self.inner {
            Inner::ThreeHalves(p) => Some(p.c1 * p.c2),
            Inner::AitSahalia(p, _) => Some(p.a1),
            Inner::CirLamperti(p) => Some(if p.a_hat() >= 0.0 { p.b_hat() } else { f64::INFINITY }),
            Inner::Custom(m) => m.drift_derivative_sup,
        }
    }

    /// Constant `K` of the one-sided bound `2f' + q0 g'² ≤ K` when the model
    /// provides one in closed form (3/2 model: `2 c1 c2`).
    pub fn dissipativity_bound(&self) -> Option<f64> {
        match &self.inner {
            Inner::ThreeHalves(p) => Some(2.0 * p.c1 * p.c2),
            _ => None,
        }
    }
}

/// Evaluate and tag non-finite output.
#[inline]
pub(crate) fn finite(what: &'static str, x: f64, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(SdeError::NonFinite { what, x })
    }
}
