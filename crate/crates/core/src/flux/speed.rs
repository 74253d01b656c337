use std::fmt;
use std::sync::Arc;

use crate::quadrature;

use super::{FluxError, MollifierKernel};

/// Evaluator for one interval of a [`SpeedField`]. Smooth pieces receive the
/// absolute position in `[0, 1)`.
#[derive(Clone)]
pub enum Piece {
    Constant(f64),
    Smooth(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl Piece {
    pub fn smooth<F: Fn(f64) -> f64 + Send + Sync + 'static>(f: F) -> Self {
        Piece::Smooth(Arc::new(f))
    }

    #[inline]
    fn eval(&self, x: f64) -> f64 {
        match self {
            Piece::Constant(c) => *c,
            Piece::Smooth(f) => f(x),
        }
    }
}

impl fmt::Debug for Piece {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Piece::Constant(c) => write!(f, "Constant({c})"),
            Piece::Smooth(_) => f.write_str("Smooth(..)"),
        }
    }
}

#[derive(Clone, Debug)]
enum Repr {
    Piecewise { breakpoints: Vec<f64>, pieces: Vec<Piece> },
    Mollified { base: Arc<SpeedField>, kernel: MollifierKernel },
}

/// Positive speed coefficient `λ(x)` on the periodic domain `[0, 1)`.
///
/// Piece `k` covers `[b_k, b_{k+1})`, the last one wraps around to `b_0 + 1`.
/// At a breakpoint the right limit is returned.
#[derive(Clone, Debug)]
pub struct SpeedField {
    repr: Repr,
    lambda_lo: f64,
    lambda_hi: f64,
}

#[inline]
pub(crate) fn wrap(x: f64) -> f64 {
    let y = x.rem_euclid(1.0);
    // rem_euclid can round up to exactly 1.0 for tiny negative inputs
    if y >= 1.0 {
        0.0
    } else {
        y
    }
}

const SMOOTH_SAMPLES: usize = 1024;

impl SpeedField {
    pub fn constant(value: f64) -> Result<Self, FluxError> {
        Self::piecewise(Vec::new(), vec![Piece::Constant(value)])
    }

    /// `left` on `[0, at)`, `right` on `[at, 1)`; breakpoints `{0, at}`.
    pub fn step(left: f64, right: f64, at: f64) -> Result<Self, FluxError> {
        Self::piecewise_constant(&[(0.0, left), (at, right)])
    }

    /// Piecewise-constant field from `(breakpoint, value on [breakpoint, next))` pairs.
    pub fn piecewise_constant(pairs: &[(f64, f64)]) -> Result<Self, FluxError> {
        let (bps, pieces) = pairs.iter().map(|&(b, v)| (b, Piece::Constant(v))).unzip();
        Self::piecewise(bps, pieces)
    }

    pub fn piecewise(breakpoints: Vec<f64>, pieces: Vec<Piece>) -> Result<Self, FluxError> {
        let expected = breakpoints.len().max(1);
        if pieces.len() != expected {
            return Err(FluxError::InvalidSpeed(format!(
                "{} pieces for {} breakpoints",
                pieces.len(),
                breakpoints.len()
            )));
        }
        if breakpoints.iter().any(|b| !(0.0..1.0).contains(b)) {
            return Err(FluxError::InvalidSpeed("breakpoints must lie in [0, 1)".into()));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(FluxError::InvalidSpeed("breakpoints must be strictly increasing".into()));
        }
        let mut field = SpeedField {
            repr: Repr::Piecewise { breakpoints, pieces },
            lambda_lo: 0.0,
            lambda_hi: 0.0,
        };
        let (lo, hi) = field.sampled_bounds();
        if !(lo > 0.0 && hi.is_finite()) {
            return Err(FluxError::InvalidSpeed(format!("speed range [{lo}, {hi}] not positive and bounded")));
        }
        field.lambda_lo = lo;
        field.lambda_hi = hi;
        Ok(field)
    }

    fn sampled_bounds(&self) -> (f64, f64) {
        let Repr::Piecewise { breakpoints, pieces } = &self.repr else {
            unreachable!()
        };
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (k, piece) in pieces.iter().enumerate() {
            let samples: Vec<f64> = match piece {
                Piece::Constant(c) => vec![*c],
                Piece::Smooth(_) => {
                    let (a, b) = if breakpoints.is_empty() {
                        (0.0, 1.0)
                    } else {
                        let a = breakpoints[k];
                        let b = breakpoints.get(k + 1).copied().unwrap_or(breakpoints[0] + 1.0);
                        (a, b)
                    };
                    (0..=SMOOTH_SAMPLES)
                        .map(|i| {
                            let x = a + (b - a) * i as f64 / SMOOTH_SAMPLES as f64;
                            let x = if i == SMOOTH_SAMPLES { b - 1e-12 * (b - a) } else { x };
                            piece.eval(wrap(x))
                        })
                        .collect()
                }
            };
            for v in samples {
                if v.is_nan() {
                    return (f64::NAN, f64::NAN);
                }
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        (lo, hi)
    }

    /// Convolution with `kernel`; the result is smooth and has no breakpoints.
    pub fn mollify(&self, kernel: &MollifierKernel) -> SpeedField {
        SpeedField {
            repr: Repr::Mollified {
                base: Arc::new(self.clone()),
                kernel: *kernel,
            },
            lambda_lo: self.lambda_lo,
            lambda_hi: self.lambda_hi,
        }
    }

    pub fn lambda_lo(&self) -> f64 {
        self.lambda_lo
    }

    pub fn lambda_hi(&self) -> f64 {
        self.lambda_hi
    }

    pub fn breakpoints(&self) -> &[f64] {
        match &self.repr {
            Repr::Piecewise { breakpoints, .. } => breakpoints,
            Repr::Mollified { .. } => &[],
        }
    }

    /// Mollification scale, if this field is a mollified one.
    pub fn epsilon(&self) -> Option<f64> {
        match &self.repr {
            Repr::Mollified { kernel, .. } => Some(kernel.epsilon()),
            Repr::Piecewise { .. } => None,
        }
    }

    /// Unmollified field underneath (itself for piecewise fields).
    pub fn base(&self) -> &SpeedField {
        match &self.repr {
            Repr::Mollified { base, .. } => base.base(),
            Repr::Piecewise { .. } => self,
        }
    }

    /// Constant value of each piece when the field is piecewise constant.
    pub fn constant_pieces(&self) -> Option<Vec<f64>> {
        match &self.repr {
            Repr::Piecewise { pieces, .. } => pieces
                .iter()
                .map(|p| match p {
                    Piece::Constant(c) => Some(*c),
                    Piece::Smooth(_) => None,
                })
                .collect(),
            Repr::Mollified { .. } => None,
        }
    }

    /// Periodic distance from `x` to the nearest breakpoint (infinite if none).
    pub fn distance_to_breakpoint(&self, x: f64) -> f64 {
        let x = wrap(x);
        self.breakpoints()
            .iter()
            .map(|&b| {
                let d = (x - b).abs();
                d.min(1.0 - d)
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn eval(&self, x: f64) -> f64 {
        match &self.repr {
            Repr::Piecewise { breakpoints, pieces } => {
                let x = wrap(x);
                if breakpoints.is_empty() {
                    return pieces[0].eval(x);
                }
                let k = breakpoints.partition_point(|&b| b <= x);
                let piece = if k == 0 { pieces.last().unwrap() } else { &pieces[k - 1] };
                piece.eval(x)
            }
            Repr::Mollified { base, kernel } => convolve(base, kernel, x),
        }
    }
}

/// `∫ λ(x - εz) θ(z) dz` over `z ∈ [-1, 1]`, split where `x - εz` crosses a
/// breakpoint so each panel integrates a smooth function.
fn convolve(base: &SpeedField, kernel: &MollifierKernel, x: f64) -> f64 {
    let eps = kernel.epsilon();
    let mut cuts = vec![-1.0, 1.0];
    for &b in base.breakpoints() {
        let lo = ((x - eps - b).floor()) as i64;
        let hi = ((x + eps - b).ceil()) as i64;
        for k in lo..=hi {
            let z = (x - b - k as f64) / eps;
            if z > -1.0 && z < 1.0 {
                cuts.push(z);
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let scale = base.lambda_hi();
    let piecewise_constant = base.constant_pieces().is_some();
    cuts.windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            // sample strictly inside (a, b) so the piece is fixed even at panel ends
            let inner = |z: f64| {
                let z = z.clamp(a, b);
                base.eval(x - eps * z) * kernel.profile(z)
            };
            if piecewise_constant {
                let mid = 0.5 * (a + b);
                let value = base.eval(x - eps * mid);
                value * quadrature::integrate(|z| kernel.profile(z), a, b, 1e-14)
            } else {
                quadrature::integrate(inner, a, b, 1e-13 * scale)
            }
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn right_limit_at_breakpoints() {
        let s = SpeedField::step(2.0, 1.0, 0.5).unwrap();
        assert_eq!(s.eval(0.5), 1.0);
        assert_eq!(s.eval(0.0), 2.0);
        assert_eq!(s.eval(0.499_999), 2.0);
        assert_eq!(s.eval(1.0), 2.0);
        assert_eq!(s.eval(-0.25), 1.0);
        assert_eq!((s.lambda_lo(), s.lambda_hi()), (1.0, 2.0));
    }

    #[test]
    fn wrapping_last_piece() {
        let s = SpeedField::piecewise_constant(&[(0.2, 3.0), (0.6, 1.5)]).unwrap();
        assert_eq!(s.eval(0.1), 1.5);
        assert_eq!(s.eval(0.3), 3.0);
        assert_eq!(s.eval(0.9), 1.5);
    }

    #[test]
    fn construction_errors() {
        assert!(SpeedField::constant(0.0).is_err());
        assert!(SpeedField::step(1.0, -1.0, 0.5).is_err());
        assert!(SpeedField::piecewise_constant(&[(0.5, 1.0), (0.2, 1.0)]).is_err());
        assert!(SpeedField::piecewise_constant(&[(1.5, 1.0)]).is_err());
        assert!(SpeedField::piecewise(vec![0.0], vec![]).is_err());
    }

    #[test]
    fn smooth_piece_bounds() {
        let s = SpeedField::piecewise(
            vec![],
            vec![Piece::smooth(|x| 1.5 + 0.5 * (2.0 * std::f64::consts::PI * x).sin())],
        )
        .unwrap();
        assert!((s.lambda_lo() - 1.0).abs() < 1e-4);
        assert!((s.lambda_hi() - 2.0).abs() < 1e-4);
    }

    #[test]
    fn breakpoint_distance_is_periodic() {
        let s = SpeedField::step(2.0, 1.0, 0.5).unwrap();
        assert!((s.distance_to_breakpoint(0.95) - 0.05).abs() < 1e-12);
        assert!((s.distance_to_breakpoint(0.4) - 0.1).abs() < 1e-12);
        assert_eq!(SpeedField::constant(1.0).unwrap().distance_to_breakpoint(0.3), f64::INFINITY);
    }
}
