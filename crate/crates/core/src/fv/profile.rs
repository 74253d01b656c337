use crate::flux::wrap;

/// Piecewise-constant periodic profile from `(start, value)` pairs; each
/// value holds until the next start, the last one wrapping past `1`.
#[derive(Clone, Debug, PartialEq)]
pub struct StepProfile {
    points: Vec<(f64, f64)>,
}

impl StepProfile {
    pub fn new(points: Vec<(f64, f64)>) -> Option<Self> {
        let ok = !points.is_empty()
            && points.iter().all(|&(p, v)| (0.0..1.0).contains(&p) && v.is_finite())
            && points.windows(2).all(|w| w[0].0 < w[1].0);
        ok.then_some(Self { points })
    }

    pub fn constant(value: f64) -> Self {
        Self {
            points: vec![(0.0, value)],
        }
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn jumps(&self) -> Vec<f64> {
        if self.points.len() < 2 {
            return Vec::new();
        }
        self.points.iter().map(|p| p.0).collect()
    }

    pub fn eval(&self, x: f64) -> f64 {
        let x = wrap(x);
        let k = self.points.partition_point(|p| p.0 <= x);
        if k == 0 {
            self.points.last().unwrap().1
        } else {
            self.points[k - 1].1
        }
    }

    pub fn max(&self) -> f64 {
        self.points.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.points.iter().map(|p| p.1).fold(f64::INFINITY, f64::min)
    }
}
