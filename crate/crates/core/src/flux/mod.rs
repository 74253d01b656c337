//! Product-form fluxes `F(x, ρ) = λ(x) h(ρ)` on the periodic unit interval.

mod closure;
mod mollifier;
mod rate;
mod speed;

pub use closure::{closure_from_rate, Closure, ClosureKind, Shape, DEFAULT_RHO_MAX};
pub use mollifier::MollifierKernel;
pub use rate::RateFunction;
pub use speed::{Piece, SpeedField};

pub(crate) use speed::wrap;

use thiserror::Error;

use crate::zrp::EquilibriumError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FluxError {
    #[error("density {rho} outside closure domain [{lo}, {hi}]")]
    Domain { rho: f64, lo: f64, hi: f64 },
    #[error("invalid speed field: {0}")]
    InvalidSpeed(String),
    #[error("invalid rate function: {0}")]
    InvalidRate(String),
    #[error("mollifier scale must be positive and finite, got {0}")]
    InvalidKernel(f64),
    #[error(transparent)]
    Equilibrium(#[from] EquilibriumError),
}

/// Growth envelopes `f(ρ) ≤ |F(x, ρ)| ≤ g(ρ)` for large `ρ`. Carried as
/// metadata; nothing downstream evaluates them.
#[derive(Clone, Copy, Debug)]
pub struct GrowthBounds {
    pub lower: fn(f64) -> f64,
    pub upper: fn(f64) -> f64,
}

#[derive(Clone, Debug)]
pub struct FluxModel {
    speed: SpeedField,
    closure: Closure,
    growth: Option<GrowthBounds>,
}

impl FluxModel {
    pub fn new(speed: SpeedField, closure: Closure) -> Self {
        Self {
            speed,
            closure,
            growth: None,
        }
    }

    /// Model whose closure is the hydrodynamic closure of the rate `g`.
    pub fn for_rate(speed: SpeedField, g: &RateFunction) -> Result<Self, FluxError> {
        Ok(Self::new(speed, Closure::for_rate(g)?))
    }

    pub fn with_growth(mut self, growth: GrowthBounds) -> Self {
        self.growth = Some(growth);
        self
    }

    pub fn growth(&self) -> Option<&GrowthBounds> {
        self.growth.as_ref()
    }

    pub fn speed(&self) -> &SpeedField {
        &self.speed
    }

    pub fn closure(&self) -> &Closure {
        &self.closure
    }

    pub fn is_monotone(&self) -> bool {
        self.closure.is_monotone()
    }

    /// Extremum location `ρ_m(x)` (constant for product fluxes), if any.
    pub fn rho_m(&self) -> Option<f64> {
        match self.closure.shape() {
            Shape::Increasing => None,
            Shape::Convex { rho_m } | Shape::Concave { rho_m } => Some(rho_m),
        }
    }

    /// Flux level `M0 = F(x, ρ_m(x))`, zero for product fluxes with `h(ρ_m) = 0`.
    pub fn m0(&self) -> f64 {
        match self.rho_m() {
            Some(rho_m) => self.closure.h(rho_m) * self.speed.lambda_lo(),
            None => self.closure.h(self.closure.domain().0) * self.speed.lambda_lo(),
        }
    }

    /// `λ(x) h(ρ)` with the closure domain enforced.
    pub fn eval_flux(&self, x: f64, rho: f64) -> Result<f64, FluxError> {
        Ok(self.speed.eval(x) * self.closure.eval(rho)?)
    }

    #[inline]
    pub fn flux(&self, x: f64, rho: f64) -> f64 {
        self.speed.eval(x) * self.closure.h(rho)
    }

    /// The same closure with `λ` replaced by `λ * θ_ε`.
    pub fn mollified(&self, kernel: &MollifierKernel) -> FluxModel {
        FluxModel {
            speed: self.speed.mollify(kernel),
            closure: self.closure.clone(),
            growth: self.growth,
        }
    }
}

/// `(λ * θ_ε)(x)` for the model's speed field.
pub fn mollified_speed(model: &FluxModel, kernel: &MollifierKernel, x: f64) -> f64 {
    model.speed().mollify(kernel).eval(x)
}
