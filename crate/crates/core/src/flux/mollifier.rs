use std::sync::OnceLock;

use crate::quadrature;

use super::FluxError;

/// Unnormalized bump `exp(-1/(1-z^2))` on `(-1, 1)`.
fn raw_bump(z: f64) -> f64 {
    let s = 1.0 - z * z;
    if s <= 0.0 {
        0.0
    } else {
        (-1.0 / s).exp()
    }
}

fn bump_mass() -> f64 {
    static MASS: OnceLock<f64> = OnceLock::new();
    *MASS.get_or_init(|| quadrature::integrate(raw_bump, -1.0, 1.0, 1e-16))
}

/// Smooth compactly supported kernel `θ_ε(y) = θ(y/ε)/ε` with `θ` the
/// normalized standard bump on `[-1, 1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MollifierKernel {
    epsilon: f64,
    norm: f64,
}

impl MollifierKernel {
    pub fn new(epsilon: f64) -> Result<Self, FluxError> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(FluxError::InvalidKernel(epsilon));
        }
        Ok(Self {
            epsilon,
            norm: 1.0 / bump_mass(),
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Unit-scale profile `θ(z)`, unit mass on `[-1, 1]`.
    #[inline]
    pub fn profile(&self, z: f64) -> f64 {
        self.norm * raw_bump(z)
    }

    /// Scaled kernel `θ_ε(y)`.
    #[inline]
    pub fn eval(&self, y: f64) -> f64 {
        self.profile(y / self.epsilon) / self.epsilon
    }

    /// Numerically integrated mass of `θ_ε` over its support.
    pub fn mass(&self) -> f64 {
        let e = self.epsilon;
        quadrature::integrate(|y| self.eval(y), -e, e, 1e-15 / e.max(1.0))
    }
}
