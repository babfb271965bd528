use std::fmt;

use crate::error::{DesignError, Result};

/// Weight-sum tolerance for a valid design.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

/// Probability measure on finitely many points of the standardized region [0, 1].
///
/// Used both for time plans and for stress designs. Zero weights are allowed
/// so that a design can be reported on its full grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ApproximateDesign {
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl ApproximateDesign {
    pub fn new(points: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(DesignError::Config("design has no points".into()));
        }
        if points.len() != weights.len() {
            return Err(DesignError::Config(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        if let Some(p) = points.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(DesignError::Config(format!("design point {p} outside [0, 1]")));
        }
        if points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(DesignError::Config(
                "design points must be strictly increasing".into(),
            ));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(DesignError::Config(format!("negative or non-finite weight {w}")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(DesignError::Config(format!(
                "weights sum to {total}, expected 1"
            )));
        }
        Ok(Self { points, weights })
    }

    /// Equal weights on the given points.
    pub fn uniform(points: Vec<f64>) -> Result<Self> {
        let n = points.len();
        let weights = vec![1.0 / n as f64; n];
        Self::new(points, weights)
    }

    /// Like [`ApproximateDesign::new`] but first rescales the weights to sum to
    /// one; the raw sum must be within `tol` of 1.
    pub fn normalized(points: Vec<f64>, weights: Vec<f64>, tol: f64) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || (total - 1.0).abs() > tol {
            return Err(DesignError::Config(format!(
                "weights sum to {total}, expected 1 within {tol}"
            )));
        }
        let weights = weights.into_iter().map(|w| w / total).collect();
        Self::new(points, weights)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.points.iter().copied().zip(self.weights.iter().copied())
    }

    /// Number of points with strictly positive weight.
    pub fn support_size(&self) -> usize {
        self.weights.iter().filter(|w| **w > 0.0).count()
    }

    /// Drops zero-weight points.
    pub fn support(&self) -> Self {
        let (points, weights) = self.iter().filter(|(_, w)| *w > 0.0).unzip();
        Self { points, weights }
    }

    /// Weight at `x`, matching points within `tol`.
    pub fn weight_at(&self, x: f64, tol: f64) -> f64 {
        self.iter()
            .find(|(p, _)| (p - x).abs() <= tol)
            .map_or(0.0, |(_, w)| w)
    }
}

impl fmt::Display for ApproximateDesign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let body: Vec<String> = self
            .iter()
            .map(|(p, w)| format!("{p:.4}: {w:.4}"))
            .collect();
        write!(f, "{{{}}}", body.join(", "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates_invariants() {
        assert!(ApproximateDesign::new(vec![0.0, 1.0], vec![0.5, 0.5]).is_ok());
        assert!(ApproximateDesign::new(vec![1.0, 0.0], vec![0.5, 0.5]).is_err());
        assert!(ApproximateDesign::new(vec![0.0, 0.0], vec![0.5, 0.5]).is_err());
        assert!(ApproximateDesign::new(vec![0.0, 1.2], vec![0.5, 0.5]).is_err());
        assert!(ApproximateDesign::new(vec![0.0, 1.0], vec![0.6, 0.5]).is_err());
        assert!(ApproximateDesign::new(vec![0.0, 1.0], vec![1.5, -0.5]).is_err());
        assert!(ApproximateDesign::new(vec![], vec![]).is_err());
    }

    #[test]
    fn normalized_accepts_rounded_weights() {
        let d = ApproximateDesign::normalized(vec![0.0, 0.5, 1.0], vec![0.333, 0.333, 0.333], 0.01)
            .unwrap();
        assert!((d.weights().iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(ApproximateDesign::normalized(vec![0.0], vec![0.9], 0.01).is_err());
    }

    #[test]
    fn support_drops_zeros() {
        let d = ApproximateDesign::new(vec![0.0, 0.5, 1.0], vec![0.25, 0.0, 0.75]).unwrap();
        assert_eq!(d.support().points(), &[0.0, 1.0]);
        assert_eq!(d.support_size(), 2);
        assert_eq!(d.weight_at(1.0, 1e-12), 0.75);
    }
}
