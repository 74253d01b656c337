/// Uniform periodic grid on `[0, 1)` with `n_cells` cells.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Grid1D {
    n_cells: usize,
}

impl Grid1D {
    /// Panics on an empty grid.
    pub fn new(n_cells: usize) -> Self {
        assert!(n_cells > 0, "grid needs at least one cell");
        Self { n_cells }
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    #[inline]
    pub fn dx(&self) -> f64 {
        1.0 / self.n_cells as f64
    }

    /// `x_i = (i + 1/2) dx`.
    #[inline]
    pub fn center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) / self.n_cells as f64
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n_cells).map(|i| self.center(i)).collect()
    }

    /// Values of `f` at the cell centres.
    pub fn sample<F: Fn(f64) -> f64>(&self, f: F) -> Vec<f64> {
        (0..self.n_cells).map(|i| f(self.center(i))).collect()
    }

    /// Cell containing `x`, after wrapping into `[0, 1)`.
    pub fn cell_of(&self, x: f64) -> usize {
        let x = x.rem_euclid(1.0);
        ((x * self.n_cells as f64) as usize).min(self.n_cells - 1)
    }

    /// `Σ v_i dx`.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        values.iter().sum::<f64>() * self.dx()
    }

    /// `Σ |a_i - b_i| dx`.
    pub fn l1_distance(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() * self.dx()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometry() {
        let g = Grid1D::new(4);
        assert_eq!(g.dx(), 0.25);
        assert_eq!(g.centers(), vec![0.125, 0.375, 0.625, 0.875]);
        assert_eq!(g.cell_of(0.5), 2);
        assert_eq!(g.cell_of(-0.1), 3);
        assert_eq!(g.cell_of(1.0), 0);
        assert_eq!(g.dx() * g.n_cells() as f64, 1.0);
    }
}
