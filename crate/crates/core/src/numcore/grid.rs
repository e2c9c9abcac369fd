use super::Error;

/// Ordered sample nodes on a closed interval with trapezoidal quadrature
/// weights. Nodes are strictly increasing, endpoints coincide with the
/// interval bounds, and the weights sum to the interval length.
#[derive(Debug, Clone)]
pub struct Grid {
    lower: f64,
    upper: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Grid {
    /// Builds `segments + 1` equally spaced nodes on `[lower, upper]` with
    /// composite trapezoid weights: `step/2` at the ends, `step` inside.
    pub fn uniform(lower: f64, upper: f64, segments: usize) -> Result<Self, Error> {
        if !lower.is_finite() || !upper.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "grid bounds must be finite, got [{lower}, {upper}]"
            )));
        }
        if upper <= lower {
            return Err(Error::InvalidArgument(format!(
                "grid upper bound must exceed lower bound, got [{lower}, {upper}]"
            )));
        }
        if segments == 0 {
            return Err(Error::InvalidArgument(
                "grid needs at least one segment".into(),
            ));
        }
        let step = (upper - lower) / segments as f64;
        let mut nodes: Vec<f64> = (0..=segments).map(|i| lower + step * i as f64).collect();
        // pin the right endpoint exactly
        nodes[segments] = upper;
        let mut weights = vec![step; segments + 1];
        weights[0] = step / 2.0;
        weights[segments] = step / 2.0;
        Ok(Grid {
            lower,
            upper,
            nodes,
            weights,
        })
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Number of segments between consecutive nodes.
    pub fn segments(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Grid step, assuming uniform spacing.
    pub fn step(&self) -> f64 {
        (self.upper - self.lower) / self.segments() as f64
    }

    /// Trapezoid approximation of the integral over the whole interval.
    pub fn quad(&self, samples: &[f64]) -> Result<f64, Error> {
        if samples.len() != self.nodes.len() {
            return Err(Error::InvalidArgument(format!(
                "quad expects {} samples, got {}",
                self.nodes.len(),
                samples.len()
            )));
        }
        Ok(self
            .weights
            .iter()
            .zip(samples)
            .map(|(w, s)| w * s)
            .sum())
    }

    /// Trapezoid weight of node `j` for the running integral over
    /// `[nodes[0], nodes[upto]]`. Zero when the sub-interval is empty.
    pub fn prefix_weight(&self, upto: usize, j: usize) -> f64 {
        debug_assert!(j <= upto && upto < self.nodes.len());
        if upto == 0 {
            return 0.0;
        }
        let left = if j == 0 { self.nodes[0] } else { self.nodes[j - 1] };
        let right = if j == upto {
            self.nodes[upto]
        } else {
            self.nodes[j + 1]
        };
        0.5 * (right - left)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn uniform_nodes_are_equally_spaced() {
        let g = Grid::uniform(0.0, 1.0, 4).unwrap();
        assert_eq!(g.nodes(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn trapezoid_weights() {
        let g = Grid::uniform(1.0, 3.0, 2).unwrap();
        assert_eq!(g.nodes(), &[1.0, 2.0, 3.0]);
        assert_eq!(g.weights(), &[0.5, 1.0, 0.5]);
    }

    #[test]
    fn degenerate_inputs_rejected() {
        assert!(Grid::uniform(0.0, 1.0, 0).is_err());
        assert!(Grid::uniform(1.0, 1.0, 4).is_err());
        assert!(Grid::uniform(2.0, 1.0, 4).is_err());
        assert!(Grid::uniform(f64::NAN, 1.0, 4).is_err());
        assert!(Grid::uniform(0.0, f64::INFINITY, 4).is_err());
    }

    #[test]
    fn weights_sum_to_interval_length() {
        for (lo, hi, n) in [(0.0, 1.0, 7), (-2.5, 3.5, 100), (1.0, 1e3, 13)] {
            let g = Grid::uniform(lo, hi, n).unwrap();
            let sum: f64 = g.weights().iter().sum();
            assert_abs_diff_eq!(sum, hi - lo, epsilon = 1e-12 * (hi - lo));
        }
    }

    #[test]
    fn quad_of_constant_is_length() {
        let g = Grid::uniform(0.0, 1.0, 37).unwrap();
        let ones = vec![1.0; g.len()];
        assert_abs_diff_eq!(g.quad(&ones).unwrap(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn quad_exact_on_linear() {
        let g = Grid::uniform(0.0, 1.0, 100).unwrap();
        let samples: Vec<f64> = g.nodes().to_vec();
        assert_abs_diff_eq!(g.quad(&samples).unwrap(), 0.5, epsilon = 1e-14);
    }

    #[test]
    fn quad_quadratic_within_trapezoid_bound() {
        // error bound (b-a) h^2 max|f''| / 12 = 1e-4 * 2 / 12
        let g = Grid::uniform(0.0, 1.0, 100).unwrap();
        let samples: Vec<f64> = g.nodes().iter().map(|t| t * t).collect();
        let q = g.quad(&samples).unwrap();
        assert!((q - 1.0 / 3.0).abs() <= 2e-5, "err = {}", (q - 1.0 / 3.0).abs());
    }

    #[test]
    fn quad_rejects_length_mismatch() {
        let g = Grid::uniform(0.0, 1.0, 4).unwrap();
        assert!(g.quad(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn prefix_weights_match_full_weights_at_the_end() {
        let g = Grid::uniform(0.0, 2.0, 8).unwrap();
        let last = g.len() - 1;
        for j in 0..g.len() {
            assert_abs_diff_eq!(g.prefix_weight(last, j), g.weights()[j], epsilon = 1e-15);
        }
        // empty sub-interval
        assert_eq!(g.prefix_weight(0, 0), 0.0);
    }

    #[test]
    fn quad_is_linear() {
        let g = Grid::uniform(0.0, 1.0, 50).unwrap();
        let f: Vec<f64> = g.nodes().iter().map(|t| t.sin()).collect();
        let h: Vec<f64> = g.nodes().iter().map(|t| t.cos()).collect();
        let (a, b) = (2.5, -1.25);
        let combo: Vec<f64> = f.iter().zip(&h).map(|(x, y)| a * x + b * y).collect();
        let lhs = g.quad(&combo).unwrap();
        let rhs = a * g.quad(&f).unwrap() + b * g.quad(&h).unwrap();
        assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-12 * rhs.abs().max(1.0));
    }
}
