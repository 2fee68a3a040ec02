use std::sync::Arc;

use super::{KnownConstants, Target, TargetModel};
use crate::error::{invalid, Result};
use crate::vector::scaled;

/// `x ↦ U(s·x)`.
///
/// Regularity constants rescale as: smoothness `m` by `s²`, the gradient-norm
/// bound by `s`, `C3` by `s³` and `C4` by `s⁴`.
pub struct Preconditioned {
    inner: TargetModel,
    scale: f64,
}

impl Preconditioned {
    pub fn inner(&self) -> &TargetModel {
        &self.inner
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }
}

impl Target for Preconditioned {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn potential(&self, x: &[f64]) -> f64 {
        self.inner.potential(&scaled(x, self.scale))
    }

    fn gradient_into(&self, x: &[f64], grad: &mut [f64]) {
        self.inner.gradient_into(&scaled(x, self.scale), grad);
        for g in grad.iter_mut() {
            *g *= self.scale;
        }
    }

    fn label(&self) -> String {
        format!("preconditioned({}, scale={})", self.inner.label(), self.scale)
    }

    fn bad_directions(&self) -> Option<&[Vec<f64>]> {
        self.inner.bad_directions()
    }

    fn known_constants(&self) -> Option<KnownConstants> {
        let s = self.scale;
        self.inner.known_constants().map(|k| KnownConstants {
            m: k.m * s * s,
            gradient_norm_bound: k.gradient_norm_bound.map(|g| g * s),
            c3: k.c3 * s.powi(3),
            c4: k.c4 * s.powi(4),
            tail_rate: k.tail_rate.map(|a| a * s),
        })
    }

    fn quadratic_precision(&self) -> Option<Vec<f64>> {
        let s2 = self.scale * self.scale;
        self.inner.quadratic_precision().map(|p| p.into_iter().map(|l| l * s2).collect())
    }

    fn log_normalizer(&self) -> Option<f64> {
        self.inner.log_normalizer().map(|z| z - self.dim() as f64 * self.scale.ln())
    }

    fn is_nonconvex(&self) -> bool {
        self.inner.is_nonconvex()
    }

    fn third_directional(&self, x: &[f64], u: &[f64], v: &[f64], w: &[f64]) -> Option<f64> {
        self.inner.third_directional(&scaled(x, self.scale), u, v, w).map(|t| t * self.scale.powi(3))
    }

    fn fourth_directional(&self, x: &[f64], u: &[f64]) -> Option<f64> {
        self.inner.fourth_directional(&scaled(x, self.scale), u).map(|t| t * self.scale.powi(4))
    }
}

/// Reparametrizes `target` as `x ↦ U(scale·x)`.
pub fn precondition(target: TargetModel, scale: f64) -> Result<TargetModel> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(invalid(format!("preconditioning scale must be positive, got {scale}")));
    }
    Ok(Arc::new(Preconditioned { inner: target, scale }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use crate::targets::testing::gradient_fd_error;
    use crate::targets::{make_gaussian, make_logistic_regression, sample_sphere_dataset};

    #[test]
    fn identity_and_gaussian_examples() {
        let g = make_gaussian(1, &[1.0]).unwrap();
        let p1 = precondition(g.clone(), 1.0).unwrap();
        for x in [-2.0, 0.3, 5.0] {
            assert_eq!(p1.potential(&[x]), g.potential(&[x]));
        }
        let p2 = precondition(g, 2.0).unwrap();
        assert_eq!(p2.potential(&[1.0]), 2.0);
        assert!(precondition(p2, 0.0).is_err());
    }

    #[test]
    fn chain_rule_and_inverse() {
        let data = sample_sphere_dataset(4, 25, &[0.5; 4], 0.6, 2).unwrap();
        let base = make_logistic_regression(data, 0.5).unwrap();
        let p = precondition(base.clone(), 2.5).unwrap();
        let back = precondition(p.clone(), 1.0 / 2.5).unwrap();
        let mut rng = rng::stream(5, 0);
        for _ in 0..100 {
            let x = rng::standard_normal_vec(&mut rng, 4);
            assert!(gradient_fd_error(p.as_ref(), &x) <= 1e-5);
            let a = base.potential(&x);
            assert!((back.potential(&x) - a).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }
}
