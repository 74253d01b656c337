use super::FluxError;

/// Microscopic jump-rate function `g` of the zero range process.
#[derive(Clone, Debug, PartialEq)]
pub enum RateFunction {
    /// `g(k) = 1{k ≥ 1}`.
    Indicator,
    /// `g(k) = k`.
    Identity,
    /// User table `g(0), g(1), ...`, completed to a nondecreasing sequence by
    /// running maxima and extended by its last value.
    Table(Vec<f64>),
}

impl RateFunction {
    pub fn table(values: &[f64]) -> Result<Self, FluxError> {
        if values.len() < 2 {
            return Err(FluxError::InvalidRate("table needs g(0) and at least g(1)".into()));
        }
        if values[0] != 0.0 {
            return Err(FluxError::InvalidRate(format!("g(0) must be 0, got {}", values[0])));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(FluxError::InvalidRate("non-finite table entry".into()));
        }
        let mut completed = Vec::with_capacity(values.len());
        let mut running = 0.0_f64;
        for &v in values {
            running = running.max(v);
            completed.push(running);
        }
        if completed[1] <= 0.0 {
            return Err(FluxError::InvalidRate("g(1) must be positive".into()));
        }
        Ok(RateFunction::Table(completed))
    }

    pub fn tag(&self) -> &'static str {
        match self {
            RateFunction::Indicator => "indicator",
            RateFunction::Identity => "identity",
            RateFunction::Table(_) => "table",
        }
    }

    #[inline]
    pub fn eval(&self, k: u32) -> f64 {
        match self {
            RateFunction::Indicator => {
                if k >= 1 {
                    1.0
                } else {
                    0.0
                }
            }
            RateFunction::Identity => k as f64,
            RateFunction::Table(t) => t.get(k as usize).copied().unwrap_or(*t.last().unwrap()),
        }
    }

    /// Limit value when `g` is constant from some index on.
    pub fn eventual_constant(&self) -> Option<(u32, f64)> {
        match self {
            RateFunction::Indicator => Some((1, 1.0)),
            RateFunction::Identity => None,
            RateFunction::Table(t) => Some(((t.len() - 1) as u32, *t.last().unwrap())),
        }
    }

    /// Checks `g(0)=0`, monotonicity, positivity and `g(K)/K² < 1e-3` at the cap `K`.
    pub fn validate(&self, cap: u32) -> Result<(), FluxError> {
        if self.eval(0) != 0.0 {
            return Err(FluxError::InvalidRate("g(0) != 0".into()));
        }
        let probe = cap.min(1 << 16);
        let mut prev = 0.0;
        for k in 1..=probe {
            let g = self.eval(k);
            if g <= 0.0 || g < prev {
                return Err(FluxError::InvalidRate(format!("g({k}) = {g} breaks positivity or monotonicity")));
            }
            prev = g;
        }
        let k = cap as f64;
        if self.eval(cap) / (k * k) >= 1e-3 {
            return Err(FluxError::InvalidRate(format!("g(K)/K^2 >= 1e-3 at K = {cap}")));
        }
        Ok(())
    }
}
