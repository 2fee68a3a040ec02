use std::f64::consts::PI;
use std::sync::Arc;

use super::{KnownConstants, Target, TargetModel};
use crate::error::{invalid, Result};

/// `U(x) = ½ Σ λ_i x_i²` with diagonal precision `λ`.
#[derive(Debug, Clone)]
pub struct Gaussian {
    precision: Vec<f64>,
}

impl Gaussian {
    pub fn new(precision: Vec<f64>) -> Result<Self> {
        if precision.is_empty() {
            return Err(invalid("gaussian dimension must be at least 1"));
        }
        if let Some(p) = precision.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
            return Err(invalid(format!("precision entries must be positive, got {p}")));
        }
        Ok(Self { precision })
    }

    pub fn standard(d: usize) -> Self {
        Self { precision: vec![1.0; d] }
    }

    pub fn precision(&self) -> &[f64] {
        &self.precision
    }
}

impl Target for Gaussian {
    fn dim(&self) -> usize {
        self.precision.len()
    }

    fn potential(&self, x: &[f64]) -> f64 {
        0.5 * self.precision.iter().zip(x).map(|(l, v)| l * v * v).sum::<f64>()
    }

    fn gradient_into(&self, x: &[f64], grad: &mut [f64]) {
        for ((g, l), v) in grad.iter_mut().zip(&self.precision).zip(x) {
            *g = l * v;
        }
    }

    fn label(&self) -> String {
        format!("gaussian(d={})", self.dim())
    }

    fn known_constants(&self) -> Option<KnownConstants> {
        let m = self.precision.iter().cloned().fold(0.0, f64::max);
        Some(KnownConstants { m, gradient_norm_bound: None, c3: 0.0, c4: 0.0, tail_rate: None })
    }

    fn quadratic_precision(&self) -> Option<Vec<f64>> {
        Some(self.precision.clone())
    }

    fn log_normalizer(&self) -> Option<f64> {
        Some(self.precision.iter().map(|l| 0.5 * (2.0 * PI / l).ln()).sum())
    }

    fn third_directional(&self, _x: &[f64], _u: &[f64], _v: &[f64], _w: &[f64]) -> Option<f64> {
        Some(0.0)
    }

    fn fourth_directional(&self, _x: &[f64], _u: &[f64]) -> Option<f64> {
        Some(0.0)
    }
}

pub fn make_gaussian(d: usize, precision: &[f64]) -> Result<TargetModel> {
    if precision.len() != d {
        return Err(invalid(format!("precision has length {}, expected {d}", precision.len())));
    }
    Ok(Arc::new(Gaussian::new(precision.to_vec())?))
}

/// `U ≡ value`: a free particle under the leapfrog map.
#[derive(Debug, Clone)]
pub struct Constant {
    pub d: usize,
    pub value: f64,
}

impl Constant {
    pub fn zero(d: usize) -> Self {
        Self { d, value: 0.0 }
    }
}

impl Target for Constant {
    fn dim(&self) -> usize {
        self.d
    }

    fn potential(&self, _x: &[f64]) -> f64 {
        self.value
    }

    fn gradient_into(&self, _x: &[f64], grad: &mut [f64]) {
        grad.fill(0.0);
    }

    fn label(&self) -> String {
        format!("constant(d={})", self.d)
    }

    fn known_constants(&self) -> Option<KnownConstants> {
        Some(KnownConstants { m: 0.0, gradient_norm_bound: Some(0.0), c3: 0.0, c4: 0.0, tail_rate: None })
    }

    fn quadratic_precision(&self) -> Option<Vec<f64>> {
        Some(vec![0.0; self.d])
    }

    fn third_directional(&self, _x: &[f64], _u: &[f64], _v: &[f64], _w: &[f64]) -> Option<f64> {
        Some(0.0)
    }

    fn fourth_directional(&self, _x: &[f64], _u: &[f64]) -> Option<f64> {
        Some(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::targets::testing::gradient_fd_error;
    use rand::SeedableRng;

    #[test]
    fn gaussian_examples() {
        let g = make_gaussian(1, &[1.0]).unwrap();
        assert_eq!(g.potential(&[2.0]), 2.0);
        assert_eq!(g.gradient(&[2.0]), vec![2.0]);

        let g = make_gaussian(3, &[1.0; 3]).unwrap();
        assert_eq!(g.potential(&[0.0; 3]), 0.0);
        assert_eq!(g.gradient(&[0.0; 3]), vec![0.0; 3]);

        let g = make_gaussian(2, &[1.0, 4.0]).unwrap();
        assert_eq!(g.potential(&[1.0, 1.0]), 2.5);
        assert_eq!(g.gradient(&[1.0, 1.0]), vec![1.0, 4.0]);
        assert_eq!(g.known_constants().unwrap().m, 4.0);
    }

    #[test]
    fn rejects_non_positive_precision() {
        assert!(make_gaussian(2, &[1.0, 0.0]).is_err());
        assert!(make_gaussian(1, &[-1.0]).is_err());
        assert!(make_gaussian(2, &[1.0]).is_err());
    }

    #[test]
    fn log_normalizer_standard() {
        let g = Gaussian::standard(2);
        assert!((g.log_normalizer().unwrap() - (2.0 * PI).ln()).abs() < 1e-14);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let g = Gaussian::new(vec![0.5, 1.0, 3.0]).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let x = crate::rng::standard_normal_vec(&mut rng, 3);
            assert!(gradient_fd_error(&g, &x) <= 1e-5);
        }
    }
}
