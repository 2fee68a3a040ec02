//! Sums of ridge functions `U(x) = (prior/2)‖x‖² + w Σ_i ℓ(y_i κ X_iᵀx)`.
//!
//! Logistic and sigmoid regression use `w = κ = 1`; the smoothed zero-one
//! objective uses `w = T⁻¹ / r` and `κ = d^{-1/4}`. Here `y_i ∈ {±1}` and `ℓ`
//! is a loss of the margin `t`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Dataset, KnownConstants, Target, TargetModel};
use crate::error::{invalid, Result};
use crate::regularity::incoherence;
use crate::vector::dot;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    /// `ℓ(t) = log(1 + e^{-t})`
    Logistic,
    /// `ℓ(t) = 1 / (1 + e^{t})`, the misclassification probability
    Sigmoid,
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

/// `σ^{(k)}(t)` for k = 1..=4, written in `p = σ(t)`, `q = σ(-t)`.
fn sigmoid_derivatives(t: f64) -> [f64; 4] {
    let p = sigmoid(t);
    let q = sigmoid(-t);
    let s1 = p * q;
    let skew = q - p;
    [s1, s1 * skew, s1 * (1.0 - 6.0 * p * q), s1 * skew * (1.0 - 12.0 * p * q)]
}

impl Loss {
    fn value(self, t: f64) -> f64 {
        match self {
            Loss::Logistic => softplus(-t),
            Loss::Sigmoid => sigmoid(-t),
        }
    }

    /// `ℓ^{(k)}(t)` for k = 1..=4.
    fn derivatives(self, t: f64) -> [f64; 4] {
        let s = sigmoid_derivatives(t);
        match self {
            // ℓ' = σ(t) - 1, so ℓ^{(k)} = σ^{(k-1)} for k ≥ 2
            Loss::Logistic => [sigmoid(t) - 1.0, s[0], s[1], s[2]],
            // ℓ = 1 - σ
            Loss::Sigmoid => [-s[0], -s[1], -s[2], -s[3]],
        }
    }
}

/// A Theorem-3 style empirical target over a [`Dataset`].
#[derive(Debug, Clone)]
pub struct EmpiricalTarget {
    data: Dataset,
    labels: Vec<f64>,
    loss: Loss,
    prior_precision: f64,
    weight: f64,
    slope: f64,
    name: &'static str,
    constants: KnownConstants,
    extra: Option<ZeroOneSchedule>,
}

impl EmpiricalTarget {
    fn build(
        data: Dataset,
        loss: Loss,
        prior_precision: f64,
        weight: f64,
        slope: f64,
        name: &'static str,
    ) -> Result<Self> {
        if !(prior_precision >= 0.0 && prior_precision.is_finite()) {
            return Err(invalid(format!("prior precision must be nonnegative, got {prior_precision}")));
        }
        let labels = (0..data.len()).map(|i| data.sign_label(i)).collect();
        let r = data.len() as f64;
        let phi = if data.is_empty() { 0.0 } else { incoherence(data.features()) };
        // |ℓ''| ≤ 1/4 and |ℓ'''|, |ℓ''''| ≤ 1 for both losses.
        let constants = KnownConstants {
            m: prior_precision + weight * slope * slope * phi / 4.0,
            gradient_norm_bound: if prior_precision == 0.0 { Some(weight * slope * r) } else { None },
            c3: weight * slope.powi(3) * (r * phi).sqrt(),
            c4: weight * slope.powi(4) * r,
            tail_rate: None,
        };
        Ok(Self { data, labels, loss, prior_precision, weight, slope, name, constants, extra: None })
    }

    pub fn dataset(&self) -> &Dataset {
        &self.data
    }

    pub fn loss(&self) -> Loss {
        self.loss
    }

    pub fn prior_precision(&self) -> f64 {
        self.prior_precision
    }

    /// Data term only (no prior), `w Σ ℓ(y_i κ X_iᵀx)`.
    pub fn data_term(&self, x: &[f64]) -> f64 {
        self.weight
            * self
                .data
                .features()
                .iter()
                .zip(&self.labels)
                .map(|(col, y)| self.loss.value(y * self.slope * dot(col, x)))
                .sum::<f64>()
    }

    pub fn zero_one_schedule(&self) -> Option<ZeroOneSchedule> {
        self.extra
    }

    /// `Σ_i c_i ℓ^{(k)}(t_i)` helper: returns per-datum `(k-th derivative
    /// with respect to the projection X_iᵀx)`.
    fn projected_derivative(&self, i: usize, proj: f64, k: usize) -> f64 {
        let y = self.labels[i];
        let t = y * self.slope * proj;
        let scale = (y * self.slope).powi(k as i32);
        self.weight * scale * self.loss.derivatives(t)[k - 1]
    }
}

impl Target for EmpiricalTarget {
    fn dim(&self) -> usize {
        self.data.dim()
    }

    fn potential(&self, x: &[f64]) -> f64 {
        0.5 * self.prior_precision * dot(x, x) + self.data_term(x)
    }

    fn gradient_into(&self, x: &[f64], grad: &mut [f64]) {
        for (g, v) in grad.iter_mut().zip(x) {
            *g = self.prior_precision * v;
        }
        for (i, col) in self.data.features().iter().enumerate() {
            let c = self.projected_derivative(i, dot(col, x), 1);
            for (g, f) in grad.iter_mut().zip(col) {
                *g += c * f;
            }
        }
    }

    fn label(&self) -> String {
        format!("{}(d={}, r={})", self.name, self.data.dim(), self.data.len())
    }

    fn bad_directions(&self) -> Option<&[Vec<f64>]> {
        Some(self.data.features())
    }

    fn known_constants(&self) -> Option<KnownConstants> {
        Some(self.constants)
    }

    fn is_nonconvex(&self) -> bool {
        self.loss == Loss::Sigmoid
    }

    fn third_directional(&self, x: &[f64], u: &[f64], v: &[f64], w: &[f64]) -> Option<f64> {
        let mut s = 0.0;
        for (i, col) in self.data.features().iter().enumerate() {
            s += self.projected_derivative(i, dot(col, x), 3) * dot(col, u) * dot(col, v) * dot(col, w);
        }
        Some(s)
    }

    fn fourth_directional(&self, x: &[f64], u: &[f64]) -> Option<f64> {
        let mut s = 0.0;
        for (i, col) in self.data.features().iter().enumerate() {
            s += self.projected_derivative(i, dot(col, x), 4) * dot(col, u).powi(4);
        }
        Some(s)
    }
}

/// Negative log-posterior of Bayesian logistic regression with a Gaussian
/// prior of the given precision.
pub fn make_logistic_regression(data: Dataset, prior_precision: f64) -> Result<TargetModel> {
    Ok(Arc::new(logistic_regression(data, prior_precision)?))
}

pub(crate) fn logistic_regression(data: Dataset, prior_precision: f64) -> Result<EmpiricalTarget> {
    EmpiricalTarget::build(data, Loss::Logistic, prior_precision, 1.0, 1.0, "logistic")
}

/// Same as [`make_logistic_regression`] with the non-convex sigmoid loss.
pub fn make_sigmoid_regression(data: Dataset, prior_precision: f64) -> Result<TargetModel> {
    Ok(Arc::new(EmpiricalTarget::build(data, Loss::Sigmoid, prior_precision, 1.0, 1.0, "sigmoid")?))
}

/// Inverse temperature and surrogate scale for the zero-one objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZeroOneSchedule {
    pub inverse_temperature: f64,
    pub lambda: f64,
}

impl ZeroOneSchedule {
    pub fn temperature(&self) -> f64 {
        1.0 / self.inverse_temperature
    }

    /// Outer radius `T^{1/2} λ` of the natural annulus constraint.
    pub fn annulus_scale(&self) -> f64 {
        self.temperature().sqrt() * self.lambda
    }
}

/// `T⁻¹ = c1 d^{3/2} / (q0 ε²)` and `λ = 100 √d / (T |log T|)`.
pub fn recommended_schedule(q0: f64, epsilon: f64, d: usize, c1: f64) -> Result<ZeroOneSchedule> {
    if !(q0 > 0.0 && q0 <= 1.0) {
        return Err(invalid(format!("q0 = {q0} outside (0, 1]")));
    }
    // ε = 1/10 itself is admitted: it is the boundary case used by the
    // zero-one pipeline defaults.
    if !(epsilon > 0.0 && epsilon <= 0.1) {
        return Err(invalid(format!("epsilon = {epsilon} outside (0, 1/10]")));
    }
    if d == 0 || !(c1 > 0.0) {
        return Err(invalid("d must be positive and c1 > 0"));
    }
    let df = d as f64;
    let inverse_temperature = c1 * df.powf(1.5) / (q0 * epsilon * epsilon);
    if inverse_temperature <= 1.0 {
        return Err(invalid(format!("inverse temperature {inverse_temperature} ≤ 1 makes log T ≥ 0; increase c1")));
    }
    let t = 1.0 / inverse_temperature;
    let lambda = 100.0 * df.sqrt() / (t * t.ln().abs());
    Ok(ZeroOneSchedule { inverse_temperature, lambda })
}

/// `U(x) = T⁻¹ (1/r) Σ ℓ̂(λ · x / (d^{1/4} λ))`, with `ℓ̂` the sigmoid
/// surrogate of the zero-one loss. The two `λ` factors cancel, so the
/// surrogate is evaluated at `x / d^{1/4}`.
pub fn make_smoothed_zero_one(data: Dataset, inverse_temperature: f64, lambda: f64) -> Result<TargetModel> {
    Ok(Arc::new(smoothed_zero_one(data, inverse_temperature, lambda)?))
}

pub(crate) fn smoothed_zero_one(data: Dataset, inverse_temperature: f64, lambda: f64) -> Result<EmpiricalTarget> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(invalid(format!("lambda must be positive, got {lambda}")));
    }
    if !(inverse_temperature > 0.0 && inverse_temperature.is_finite()) {
        return Err(invalid(format!("inverse temperature must be positive, got {inverse_temperature}")));
    }
    if data.is_empty() {
        return Err(invalid("zero-one surrogate needs at least one datum"));
    }
    let r = data.len() as f64;
    let slope = 1.0 / (data.dim() as f64).powf(0.25);
    let mut t = EmpiricalTarget::build(data, Loss::Sigmoid, 0.0, inverse_temperature / r, slope, "zero_one")?;
    t.extra = Some(ZeroOneSchedule { inverse_temperature, lambda });
    Ok(t)
}

/// Empirical zero-one loss `(1/r) #{i : y_i ≠ sign(X_iᵀx)}`.
pub fn empirical_zero_one(data: &Dataset, x: &[f64]) -> f64 {
    if data.is_empty() {
        return 0.0;
    }
    let wrong = (0..data.len())
        .filter(|&i| {
            let s = dot(&data.features()[i], x);
            let pred = if s >= 0.0 { 1.0 } else { -1.0 };
            pred != data.sign_label(i)
        })
        .count();
    wrong as f64 / data.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use crate::targets::sample_sphere_dataset;
    use crate::targets::testing::gradient_fd_error;

    fn e1_dataset(d: usize, y: f64) -> Dataset {
        let mut e = vec![0.0; d];
        e[0] = 1.0;
        Dataset::new(d, vec![e], vec![y]).unwrap()
    }

    fn empty(d: usize) -> Dataset {
        Dataset::new(d, vec![], vec![]).unwrap()
    }

    #[test]
    fn logistic_examples() {
        let t = make_logistic_regression(empty(3), 1.0).unwrap();
        let x = [1.0, -2.0, 0.5];
        assert!((t.potential(&x) - 0.5 * 5.25).abs() < 1e-15);

        let t = make_logistic_regression(e1_dataset(3, 1.0), 0.0).unwrap();
        assert!((t.potential(&[0.0; 3]) - std::f64::consts::LN_2).abs() < 1e-15);
        // oracle: log(1 + e^{-10}) by its alternating series
        let e = (-10.0f64).exp();
        let oracle = e - e.powi(2) / 2.0 + e.powi(3) / 3.0 - e.powi(4) / 4.0 + e.powi(5) / 5.0;
        let got = t.potential(&[10.0, 0.0, 0.0]);
        assert!((got - oracle).abs() < 1e-15 * oracle, "{got:e} {oracle:e}");
        assert!((oracle - 4.54e-5).abs() < 1e-7);
    }

    #[test]
    fn sigmoid_examples() {
        let t = make_sigmoid_regression(e1_dataset(2, 1.0), 0.0).unwrap();
        assert_eq!(t.potential(&[0.0, 0.0]), 0.5);
        assert!(t.is_nonconvex());

        let t = make_sigmoid_regression(empty(2), 1.0).unwrap();
        assert_eq!(t.potential(&[3.0, 4.0]), 12.5);

        let data = Dataset::new(2, vec![vec![1.0, 0.0], vec![-1.0, 0.0]], vec![1.0, 1.0]).unwrap();
        let t = make_sigmoid_regression(data, 0.0).unwrap();
        assert_eq!(t.potential(&[0.0, 0.0]), 1.0);
    }

    #[test]
    fn zero_and_one_labels_match_signed_labels() {
        let a = make_logistic_regression(e1_dataset(2, 0.0), 0.0).unwrap();
        let b = make_logistic_regression(e1_dataset(2, -1.0), 0.0).unwrap();
        assert_eq!(a.potential(&[0.7, 0.1]), b.potential(&[0.7, 0.1]));
    }

    #[test]
    fn stable_for_large_margins() {
        let data = sample_sphere_dataset(4, 30, &[0.5; 4], 0.8, 1).unwrap();
        for t in
            [make_logistic_regression(data.clone(), 0.0).unwrap(), make_sigmoid_regression(data.clone(), 0.0).unwrap()]
        {
            for scale in [700.0, 1e3, -1e3] {
                let x = [scale, 0.0, -scale, 0.3];
                assert!(t.potential(&x).is_finite());
                assert!(t.gradient(&x).iter().all(|g| g.is_finite()));
            }
        }
    }

    #[test]
    fn closed_form_derivatives_match_finite_differences() {
        for loss in [Loss::Logistic, Loss::Sigmoid] {
            for t in [-3.0, -0.4, 0.0, 0.9, 2.5] {
                let h = 1e-3;
                let d = loss.derivatives(t);
                let dm = loss.derivatives(t - h);
                let dp = loss.derivatives(t + h);
                let fd1 = (loss.value(t + h) - loss.value(t - h)) / (2.0 * h);
                assert!((fd1 - d[0]).abs() < 1e-6);
                for k in 1..4 {
                    let fd = (dp[k - 1] - dm[k - 1]) / (2.0 * h);
                    assert!((fd - d[k]).abs() < 1e-6, "{loss:?} k={k} t={t}");
                }
            }
        }
    }

    #[test]
    fn gradient_fd_consistency() {
        let data = sample_sphere_dataset(5, 20, &[0.0, 0.0, 1.0, 0.0, 0.0], 0.9, 3).unwrap();
        let targets = [
            make_logistic_regression(data.clone(), 1.0).unwrap(),
            make_sigmoid_regression(data.clone(), 0.5).unwrap(),
            make_smoothed_zero_one(data, 50.0, 3.0).unwrap(),
        ];
        let mut rng = rng::stream(9, 0);
        for t in &targets {
            for _ in 0..100 {
                let x = rng::standard_normal_vec(&mut rng, 5);
                assert!(gradient_fd_error(t.as_ref(), &x) <= 1e-5, "{}", t.label());
            }
        }
    }

    #[test]
    fn logistic_with_prior_is_convex_along_lines() {
        let data = sample_sphere_dataset(3, 40, &[1.0, 0.0, 0.0], 0.5, 8).unwrap();
        let t = make_logistic_regression(data, 0.3).unwrap();
        let mut rng = rng::stream(10, 0);
        for _ in 0..200 {
            let x = rng::standard_normal_vec(&mut rng, 3).iter().map(|v| 3.0 * v).collect::<Vec<_>>();
            let y = rng::standard_normal_vec(&mut rng, 3).iter().map(|v| 3.0 * v).collect::<Vec<_>>();
            for s in [0.0, 0.25, 0.5, 0.75] {
                let z: Vec<f64> = x.iter().zip(&y).map(|(a, b)| s * a + (1.0 - s) * b).collect();
                assert!(t.potential(&z) <= s * t.potential(&x) + (1.0 - s) * t.potential(&y) + 1e-9);
            }
        }
    }

    #[test]
    fn schedule_examples() {
        let s = recommended_schedule(1.0, 0.1, 1, 1.0).unwrap();
        assert!((s.inverse_temperature - 100.0).abs() < 1e-9);
        let s = recommended_schedule(0.5, 0.1, 4, 1.0).unwrap();
        assert!((s.inverse_temperature - 1600.0).abs() < 1e-9);
        let t = s.temperature();
        assert!((s.lambda * t * (1.0 / t).ln() - 100.0 * 2.0).abs() < 1e-9);
        assert!(recommended_schedule(1.0, 0.2, 1, 1.0).is_err());
        assert!(recommended_schedule(1.0, 0.05, 1, 1e-4).is_err());
    }

    #[test]
    fn zero_one_examples() {
        let theta = [0.0, 0.0, 1.0];
        let data = sample_sphere_dataset(3, 300, &theta, 1.0, 21).unwrap();
        // relabel consistently with theta*
        let responses = data.features().iter().map(|x| if dot(x, &theta) >= 0.0 { 1.0 } else { -1.0 }).collect();
        let clean = Dataset::with_meta(data.features().to_vec(), responses, data.meta().clone()).unwrap();
        let inv_t = 10.0;
        let t = make_smoothed_zero_one(clean.clone(), inv_t, 1.0).unwrap();
        assert_eq!(empirical_zero_one(&clean, &theta), 0.0);
        let far = [0.0, 0.0, 1e6];
        assert!(t.potential(&far) / inv_t < 1e-6);

        // orthogonal point: every term is σ(0) = 1/2
        let data = Dataset::new(3, vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]], vec![1.0, -1.0]).unwrap();
        let t = make_smoothed_zero_one(data.clone(), 4.0, 2.0).unwrap();
        assert_eq!(t.potential(&[0.0, 0.0, 5.0]), 4.0 * 0.5);

        // λ cancels: compare against direct surrogate at x / d^{1/4}
        let x = [0.3, -1.2, 0.4];
        let k = 3f64.powf(-0.25);
        let direct = 4.0 * 0.5 * (sigmoid(-(x[0] * k)) + sigmoid(x[1] * k));
        for lambda in [0.1, 1.0, 1e4] {
            let t = make_smoothed_zero_one(data.clone(), 4.0, lambda).unwrap();
            assert!((t.potential(&x) - direct).abs() < 1e-12);
        }
        assert!(make_smoothed_zero_one(empty(3), 1.0, 1.0).is_err());
    }
}
