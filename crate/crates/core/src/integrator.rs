//! Phase space, the Hamiltonian `H(x, v) = U(x) + ½‖v‖²`, one leapfrog step
//! and the two equivalent forms of the Metropolis acceptance ratio.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::targets::Target;
use crate::vector::{non_finite_coords, norm_sq, projection_norms};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseState {
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
}

impl PhaseState {
    pub fn new(position: Vec<f64>, velocity: Vec<f64>) -> Result<Self> {
        if position.len() != velocity.len() {
            return Err(invalid(format!(
                "position has length {} but velocity has length {}",
                position.len(),
                velocity.len()
            )));
        }
        Ok(Self { position, velocity })
    }

    pub fn dim(&self) -> usize {
        self.position.len()
    }

    /// `(x, -v)`
    pub fn flipped(&self) -> Self {
        Self { position: self.position.clone(), velocity: self.velocity.iter().map(|v| -v).collect() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeapfrogResult {
    pub proposal: PhaseState,
    pub energy_before: f64,
    pub energy_after: f64,
    /// `energy_after - energy_before`
    pub energy_error: f64,
    pub gradient_evals: u64,
    /// `U(x)` and `U(x̂)` as used in the energies.
    pub potential_before: f64,
    pub potential_after: f64,
}

fn check_dims(target: &dyn Target, state: &PhaseState) -> Result<()> {
    if state.position.len() != target.dim() || state.velocity.len() != target.dim() {
        return Err(invalid(format!(
            "state dimension {} does not match target dimension {}",
            state.position.len(),
            target.dim()
        )));
    }
    Ok(())
}

pub fn kinetic(v: &[f64]) -> f64 {
    0.5 * norm_sq(v)
}

pub fn hamiltonian(target: &dyn Target, state: &PhaseState) -> Result<f64> {
    check_dims(target, state)?;
    Ok(target.potential(&state.position) + kinetic(&state.velocity))
}

fn finite_gradient(target: &dyn Target, x: &[f64]) -> Result<Vec<f64>> {
    let g = target.gradient(x);
    let bad = non_finite_coords(&g);
    if bad.is_empty() {
        Ok(g)
    } else {
        Err(Error::NumericFailure { coords: bad })
    }
}

/// One leapfrog step of size `eta`:
/// `x̂ = x + ηv − ½η²∇U(x)`, `v̂ = v − ½η(∇U(x) + ∇U(x̂))`.
pub fn leapfrog_step(target: &dyn Target, state: &PhaseState, eta: f64) -> Result<LeapfrogResult> {
    check_dims(target, state)?;
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(invalid(format!("step size must be positive, got {eta}")));
    }
    let x = &state.position;
    let v = &state.velocity;
    let g0 = finite_gradient(target, x)?;
    let half_eta_sq = 0.5 * eta * eta;
    let x_hat: Vec<f64> = x.iter().zip(v).zip(&g0).map(|((xi, vi), gi)| xi + eta * vi - half_eta_sq * gi).collect();
    let g1 = finite_gradient(target, &x_hat)?;
    let half_eta = 0.5 * eta;
    let v_hat: Vec<f64> = v.iter().zip(&g0).zip(&g1).map(|((vi, a), b)| vi - half_eta * (a + b)).collect();

    let potential_before = target.potential(x);
    let potential_after = target.potential(&x_hat);
    let energy_before = potential_before + kinetic(v);
    let energy_after = potential_after + kinetic(&v_hat);
    Ok(LeapfrogResult {
        proposal: PhaseState { position: x_hat, velocity: v_hat },
        energy_before,
        energy_after,
        energy_error: energy_after - energy_before,
        gradient_evals: 2,
        potential_before,
        potential_after,
    })
}

/// Closed-form Hamiltonian flow for diagonal quadratic targets.
pub fn exact_quadratic_flow(target: &dyn Target, state: &PhaseState, t: f64) -> Result<PhaseState> {
    check_dims(target, state)?;
    let precision = target
        .quadratic_precision()
        .ok_or_else(|| Error::UnsupportedTarget(format!("{} has no analytic flow", target.label())))?;
    let mut position = Vec::with_capacity(state.dim());
    let mut velocity = Vec::with_capacity(state.dim());
    for ((q0, p0), lam) in state.position.iter().zip(&state.velocity).zip(&precision) {
        if *lam == 0.0 {
            position.push(q0 + p0 * t);
            velocity.push(*p0);
        } else {
            let w = lam.sqrt();
            let (s, c) = (w * t).sin_cos();
            position.push(q0 * c + p0 / w * s);
            velocity.push(p0 * c - q0 * w * s);
        }
    }
    Ok(PhaseState { position, velocity })
}

/// `min(0, -ΔH)`: log acceptance probability from the energy error.
pub fn log_accept_energy(energy_error: f64) -> f64 {
    (-energy_error).min(0.0)
}

/// Log density (up to a constant) of the Langevin proposal `a → b`:
/// `N(b; a − ½η²∇U(a), η² I)`.
fn log_proposal_density(grad_a: &[f64], a: &[f64], b: &[f64], eta: f64) -> f64 {
    let half_eta_sq = 0.5 * eta * eta;
    let sq: f64 = a
        .iter()
        .zip(b)
        .zip(grad_a)
        .map(|((ai, bi), gi)| {
            let r = bi - ai + half_eta_sq * gi;
            r * r
        })
        .sum();
    -sq / (2.0 * eta * eta)
}

/// Metropolis–Hastings log ratio `log[π(x̂) q(x̂→x)] − log[π(x) q(x→x̂)]`,
/// capped at 0.
pub fn log_accept_proposal_form(target: &dyn Target, x: &[f64], x_hat: &[f64], eta: f64) -> Result<f64> {
    if !(eta > 0.0) {
        return Err(invalid(format!("step size must be positive, got {eta}")));
    }
    if x.len() != target.dim() || x_hat.len() != target.dim() {
        return Err(invalid("dimension mismatch"));
    }
    let gx = finite_gradient(target, x)?;
    let gy = finite_gradient(target, x_hat)?;
    let log_ratio = target.potential(x) - target.potential(x_hat) + log_proposal_density(&gy, x_hat, x, eta)
        - log_proposal_density(&gx, x, x_hat, eta);
    Ok(log_ratio.min(0.0))
}

/// `η³ C3 ‖Xᵀv‖∞² ‖Xᵀv‖₂ + η⁴ C4 ‖Xᵀv‖∞⁴`, the kinetic-energy error bound
/// along bad directions `X`.
pub fn kinetic_error_bound(c3: f64, c4: f64, bad_directions: &[Vec<f64>], v: &[f64], eta: f64) -> Result<f64> {
    if c3 < 0.0 || c4 < 0.0 {
        return Err(invalid("C3 and C4 must be nonnegative"));
    }
    let (inf, two) = projection_norms(bad_directions, v);
    Ok(eta.powi(3) * c3 * inf * inf * two + eta.powi(4) * c4 * inf.powi(4))
}
