/// Peak-one bump `exp(1 - 1/(1 - z²))` on `(-1, 1)`.
#[inline]
pub fn bump(z: f64) -> f64 {
    if z.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - z * z)).exp()
    }
}

#[inline]
pub fn bump_prime(z: f64) -> f64 {
    if z.abs() >= 1.0 {
        0.0
    } else {
        let q = 1.0 - z * z;
        -2.0 * z / (q * q) * bump(z)
    }
}

/// `J(t, x) = ψ(t) B((x - c)/w)` with `ψ(t) = B(t/(0.9 T))`, so `J(0, ·)`
/// peaks at one and `J` vanishes for `t ≥ 0.9 T`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TestFunction {
    pub id: usize,
    pub center: f64,
    pub width: f64,
    pub horizon: f64,
}

impl TestFunction {
    pub fn new(id: usize, center: f64, width: f64, horizon: f64) -> Self {
        assert!(width > 0.0 && width < 0.5 && horizon > 0.0, "bad test function geometry");
        Self {
            id,
            center,
            width,
            horizon,
        }
    }

    fn tau(&self) -> f64 {
        0.9 * self.horizon
    }

    fn z(&self, x: f64) -> f64 {
        let mut d = (x - self.center).rem_euclid(1.0);
        if d > 0.5 {
            d -= 1.0;
        }
        d / self.width
    }

    #[inline]
    pub fn time_factor(&self, t: f64) -> f64 {
        if t < 0.0 {
            0.0
        } else {
            bump(t / self.tau())
        }
    }

    #[inline]
    pub fn time_factor_dt(&self, t: f64) -> f64 {
        if t < 0.0 {
            0.0
        } else {
            bump_prime(t / self.tau()) / self.tau()
        }
    }

    #[inline]
    pub fn space_factor(&self, x: f64) -> f64 {
        bump(self.z(x))
    }

    #[inline]
    pub fn space_factor_dx(&self, x: f64) -> f64 {
        bump_prime(self.z(x)) / self.width
    }

    pub fn eval(&self, t: f64, x: f64) -> f64 {
        self.time_factor(t) * self.space_factor(x)
    }

    pub fn dt(&self, t: f64, x: f64) -> f64 {
        self.time_factor_dt(t) * self.space_factor(x)
    }

    pub fn dx(&self, t: f64, x: f64) -> f64 {
        self.time_factor(t) * self.space_factor_dx(x)
    }
}

/// Nine bumps: centres `{0.25, 0.5, 0.75}` × widths `{0.05, 0.1, 0.2}`.
pub fn default_library(horizon: f64) -> Vec<TestFunction> {
    let mut out = Vec::with_capacity(9);
    for c in [0.25, 0.5, 0.75] {
        for w in [0.05, 0.1, 0.2] {
            out.push(TestFunction::new(out.len(), c, w, horizon));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivatives_match_differences() {
        let j = TestFunction::new(0, 0.5, 0.1, 0.4);
        let h = 1e-6;
        for (t, x) in [(0.05, 0.47), (0.2, 0.53), (0.3, 0.5)] {
            let fd_t = (j.eval(t + h, x) - j.eval(t - h, x)) / (2.0 * h);
            let fd_x = (j.eval(t, x + h) - j.eval(t, x - h)) / (2.0 * h);
            assert!((fd_t - j.dt(t, x)).abs() < 1e-6);
            assert!((fd_x - j.dx(t, x)).abs() < 1e-5);
        }
    }

    #[test]
    fn support_and_sign() {
        for j in default_library(0.4) {
            assert_eq!(j.eval(0.0, j.center), 1.0);
            assert_eq!(j.eval(0.36, j.center), 0.0);
            assert_eq!(j.eval(0.1, j.center + j.width), 0.0);
            for k in 0..100 {
                assert!(j.eval(0.003 * k as f64, k as f64 / 100.0) >= 0.0);
            }
        }
    }
}
