use crate::error::{FggmError, Result};

/// Evenly spaced evaluation grid on `[0, 1]` with composite trapezoid weights.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl Grid {
    pub fn new(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(FggmError::InvalidParameter(format!(
                "grid needs at least 2 points, got {d}"
            )));
        }
        let h = 1.0 / (d - 1) as f64;
        let points = (0..d)
            .map(|k| if k == d - 1 { 1.0 } else { k as f64 * h })
            .collect();
        let mut weights = vec![h; d];
        weights[0] = 0.5 * h;
        weights[d - 1] = 0.5 * h;
        Ok(Grid { points, weights })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn spacing(&self) -> f64 {
        1.0 / (self.len() - 1) as f64
    }

    /// Quadrature of `f * g` over the grid indices in `indices`.
    ///
    /// Each grid point contributes its full-grid trapezoid weight, so
    /// integrals over complementary index sets add up to the full-domain
    /// integral exactly.
    pub fn integrate_on(&self, f: &[f64], g: &[f64], indices: &[usize]) -> f64 {
        indices
            .iter()
            .map(|&k| self.weights[k] * f[k] * g[k])
            .sum()
    }

    pub(crate) fn check_len(&self, f: &[f64], what: &str) -> Result<()> {
        if f.len() != self.len() {
            return Err(FggmError::dim(format!(
                "{what} has {} values, grid has {}",
                f.len(),
                self.len()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_one_and_points_span_unit_interval() {
        for d in [2, 3, 7, 50, 144, 1001] {
            let g = Grid::new(d).unwrap();
            let total: f64 = g.weights().iter().sum();
            assert!((total - 1.0).abs() < 1e-12, "d = {d}: {total}");
            assert!(g.weights().iter().all(|&w| w > 0.0));
            assert_eq!(g.points()[0], 0.0);
            assert_eq!(g.points()[d - 1], 1.0);
            assert!(g.points().windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn rejects_degenerate_grid() {
        assert!(Grid::new(1).is_err());
        assert!(Grid::new(0).is_err());
    }
}
