use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::integrator::{leapfrog_step, log_accept_energy, PhaseState};
use crate::rng::{self, ChainRng};
use crate::targets::{ConstraintSet, Target};
use crate::vector::{non_finite_coords, norm_sq};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerKind {
    Mala,
    Rwm,
    ConstrainedMala,
}

impl SamplerKind {
    pub fn name(self) -> &'static str {
        match self {
            SamplerKind::Mala => "mala",
            SamplerKind::Rwm => "rwm",
            SamplerKind::ConstrainedMala => "constrained-mala",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ChainConfig {
    pub step_size: f64,
    pub iterations: usize,
    pub seed: u64,
    /// ChaCha stream id; replicas of one experiment share `seed` and differ here.
    pub stream: u64,
    /// Stay put with probability ½ before each kernel application.
    pub lazy: bool,
    pub constraint: Option<ConstraintSet>,
    pub record_every: usize,
}

impl ChainConfig {
    pub fn new(step_size: f64, iterations: usize, seed: u64) -> Self {
        Self { step_size, iterations, seed, stream: 0, lazy: false, constraint: None, record_every: 1 }
    }

    pub fn with_constraint(mut self, c: ConstraintSet) -> Self {
        self.constraint = Some(c);
        self
    }

    pub fn lazy(mut self, lazy: bool) -> Self {
        self.lazy = lazy;
        self
    }

    pub fn stream(mut self, stream: u64) -> Self {
        self.stream = stream;
        self
    }

    pub fn record_every(mut self, k: usize) -> Self {
        self.record_every = k;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(invalid(format!("step size must be positive, got {}", self.step_size)));
        }
        if self.iterations == 0 {
            return Err(invalid("iterations must be at least 1"));
        }
        if self.record_every == 0 {
            return Err(invalid("record_every must be at least 1"));
        }
        Ok(())
    }

    pub fn rng(&self) -> ChainRng {
        rng::stream(self.seed, self.stream)
    }
}

/// One transition of a chain. Index 0 of a trace holds the initial state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub index: usize,
    pub state: Vec<f64>,
    pub proposed: Vec<f64>,
    pub energy_error: f64,
    pub log_accept_prob: f64,
    /// The chain moved to `proposed`.
    pub accepted: bool,
    /// A lazy stay-put step: no proposal was made.
    pub lazy: bool,
    /// Constraint membership of the Metropolis output `Z` (constrained chains only).
    pub in_constraint: Option<bool>,
    pub potential: f64,
}

impl StepRecord {
    fn initial(x: &[f64], potential: f64, in_constraint: Option<bool>) -> Self {
        Self {
            index: 0,
            state: x.to_vec(),
            proposed: x.to_vec(),
            energy_error: 0.0,
            log_accept_prob: 0.0,
            accepted: true,
            lazy: false,
            in_constraint,
            potential,
        }
    }

    fn stay(x: &[f64], potential: f64) -> Self {
        Self {
            index: 0,
            state: x.to_vec(),
            proposed: x.to_vec(),
            energy_error: 0.0,
            log_accept_prob: 0.0,
            accepted: false,
            lazy: true,
            in_constraint: None,
            potential,
        }
    }

    /// Whether this record is a kernel proposal (not the initial state, not lazy).
    pub fn is_proposal(&self) -> bool {
        self.index > 0 && !self.lazy
    }
}

#[derive(Debug, Clone)]
pub struct ChainTrace {
    pub kind: SamplerKind,
    pub records: Vec<StepRecord>,
    pub config: ChainConfig,
    pub target_label: String,
    pub gradient_evals: u64,
    pub function_evals: u64,
    /// Iteration index of the smallest potential among all visited states.
    pub argmin_index: usize,
    pub best_state: Vec<f64>,
    pub best_potential: f64,
    pub final_state: Vec<f64>,
}

fn accept<R: Rng + ?Sized>(rng: &mut R, log_accept: f64) -> bool {
    let u: f64 = rng.random();
    log_accept >= 0.0 || u.ln() < log_accept
}

struct Transition {
    record: StepRecord,
    gradient_evals: u64,
    function_evals: u64,
}

fn mala_transition<R: Rng + ?Sized>(
    target: &dyn Target,
    x: &[f64],
    eta: f64,
    rng: &mut R,
    constraint: Option<&ConstraintSet>,
) -> Result<Transition> {
    let v = rng::standard_normal_vec(rng, x.len());
    let lf = leapfrog_step(target, &PhaseState { position: x.to_vec(), velocity: v }, eta)?;
    let log_a = log_accept_energy(lf.energy_error);
    let mh = accept(rng, log_a);
    let in_constraint = constraint.map(|s| !mh || s.contains(&lf.proposal.position));
    let moved = mh && in_constraint.unwrap_or(true);
    let (state, potential) =
        if moved { (lf.proposal.position.clone(), lf.potential_after) } else { (x.to_vec(), lf.potential_before) };
    Ok(Transition {
        record: StepRecord {
            index: 0,
            state,
            proposed: lf.proposal.position,
            energy_error: lf.energy_error,
            log_accept_prob: log_a,
            accepted: moved,
            lazy: false,
            in_constraint,
            potential,
        },
        gradient_evals: lf.gradient_evals,
        function_evals: 2,
    })
}

fn rwm_transition<R: Rng + ?Sized>(
    target: &dyn Target,
    z: &[f64],
    u_z: f64,
    eta: f64,
    rng: &mut R,
) -> Result<Transition> {
    let v = rng::standard_normal_vec(rng, z.len());
    let z_hat: Vec<f64> = z.iter().zip(&v).map(|(a, b)| a + eta * b).collect();
    let u_hat = target.potential(&z_hat);
    if u_hat.is_nan() {
        return Err(crate::Error::NumericFailure { coords: non_finite_coords(&z_hat) });
    }
    let delta = u_hat - u_z;
    let log_a = (-delta).min(0.0);
    let moved = accept(rng, log_a);
    let (state, potential) = if moved { (z_hat.clone(), u_hat) } else { (z.to_vec(), u_z) };
    Ok(Transition {
        record: StepRecord {
            index: 0,
            state,
            proposed: z_hat,
            energy_error: delta,
            log_accept_prob: log_a,
            accepted: moved,
            lazy: false,
            in_constraint: None,
            potential,
        },
        gradient_evals: 0,
        function_evals: 1,
    })
}

/// One MALA transition from `x`: draw `v ~ N(0, I)`, take a leapfrog step and
/// accept with probability `min(1, e^{-ΔH})`. The velocity is discarded.
pub fn mala_step<R: Rng + ?Sized>(target: &dyn Target, x: &[f64], eta: f64, rng: &mut R) -> Result<StepRecord> {
    Ok(mala_transition(target, x, eta, rng, None)?.record)
}

/// One random walk Metropolis transition: propose `z + ηv`, accept with
/// probability `min(1, e^{U(z) − U(ẑ)})`.
pub fn rwm_step<R: Rng + ?Sized>(target: &dyn Target, z: &[f64], eta: f64, rng: &mut R) -> Result<StepRecord> {
    if !(eta > 0.0) {
        return Err(invalid(format!("step size must be positive, got {eta}")));
    }
    let u_z = target.potential(z);
    Ok(rwm_transition(target, z, u_z, eta, rng)?.record)
}

/// Runs `config.iterations` transitions of the given kind from `init`.
pub fn run_chain(kind: SamplerKind, target: &dyn Target, config: &ChainConfig, init: &[f64]) -> Result<ChainTrace> {
    config.validate()?;
    if init.len() != target.dim() {
        return Err(invalid(format!("init has dimension {}, target has {}", init.len(), target.dim())));
    }
    if !non_finite_coords(init).is_empty() {
        return Err(invalid("init must be finite"));
    }
    let constraint = match kind {
        SamplerKind::ConstrainedMala => {
            let c = config.constraint.as_ref().ok_or_else(|| invalid("constrained MALA requires a constraint set"))?;
            if !c.contains(init) {
                return Err(invalid(format!("initial point is outside {}", c.description())));
            }
            Some(c)
        }
        _ => None,
    };

    let mut rng = config.rng();
    let eta = config.step_size;
    let mut x = init.to_vec();
    let mut u_x = target.potential(&x);
    let mut function_evals = 1u64;
    let mut gradient_evals = 0u64;
    let mut records = Vec::with_capacity(config.iterations / config.record_every + 1);
    records.push(StepRecord::initial(&x, u_x, constraint.map(|_| true)));
    let (mut argmin_index, mut best_state, mut best_potential) = (0usize, x.clone(), u_x);

    for i in 1..=config.iterations {
        let mut record = if config.lazy && rng.random::<f64>() < 0.5 {
            StepRecord::stay(&x, u_x)
        } else {
            let t = match kind {
                SamplerKind::Rwm => rwm_transition(target, &x, u_x, eta, &mut rng)?,
                _ => mala_transition(target, &x, eta, &mut rng, constraint)?,
            };
            gradient_evals += t.gradient_evals;
            function_evals += t.function_evals;
            t.record
        };
        record.index = i;
        if record.accepted {
            x.clone_from(&record.state);
            u_x = record.potential;
        }
        if u_x < best_potential {
            argmin_index = i;
            best_potential = u_x;
            best_state.clone_from(&x);
        }
        if i % config.record_every == 0 {
            records.push(record);
        }
    }

    Ok(ChainTrace {
        kind,
        records,
        config: config.clone(),
        target_label: target.label(),
        gradient_evals,
        function_evals,
        argmin_index,
        best_state,
        best_potential,
        final_state: x,
    })
}

/// Advances a bare chain state by `steps` transitions without recording.
#[allow(clippy::too_many_arguments)]
pub(crate) fn advance<R: Rng + ?Sized>(
    kind: SamplerKind,
    target: &dyn Target,
    x: &mut Vec<f64>,
    u_x: &mut f64,
    eta: f64,
    lazy: bool,
    constraint: Option<&ConstraintSet>,
    steps: usize,
    rng: &mut R,
) -> Result<()> {
    for _ in 0..steps {
        if lazy && rng.random::<f64>() < 0.5 {
            continue;
        }
        let t = match kind {
            SamplerKind::Rwm => rwm_transition(target, x, *u_x, eta, rng)?,
            SamplerKind::Mala => mala_transition(target, x, eta, rng, None)?,
            SamplerKind::ConstrainedMala => mala_transition(target, x, eta, rng, constraint)?,
        };
        if t.record.accepted {
            *x = t.record.state;
            *u_x = t.record.potential;
        }
    }
    Ok(())
}

pub fn run_mala(target: &dyn Target, config: &ChainConfig, init: &[f64]) -> Result<ChainTrace> {
    run_chain(SamplerKind::Mala, target, config, init)
}

pub fn run_rwm(target: &dyn Target, config: &ChainConfig, init: &[f64]) -> Result<ChainTrace> {
    run_chain(SamplerKind::Rwm, target, config, init)
}

/// MALA followed by rejection of moves leaving the constraint set.
pub fn run_constrained_mala(target: &dyn Target, config: &ChainConfig, init: &[f64]) -> Result<ChainTrace> {
    run_chain(SamplerKind::ConstrainedMala, target, config, init)
}

/// The visited state with the smallest potential and that potential.
pub fn extract_minimizer(trace: &ChainTrace) -> (Vec<f64>, f64) {
    (trace.best_state.clone(), trace.best_potential)
}

/// `log k(x, y)` for `y ≠ x` of the MALA kernel: Langevin proposal density
/// times the energy-form acceptance probability. The velocity that maps `x`
/// to `y` is recovered and pushed through the leapfrog step.
pub fn mala_transition_log_density(target: &dyn Target, x: &[f64], y: &[f64], eta: f64) -> Result<f64> {
    let d = x.len() as f64;
    let g = target.gradient(x);
    let half_eta_sq = 0.5 * eta * eta;
    let v: Vec<f64> = x.iter().zip(y).zip(&g).map(|((a, b), gi)| (b - a + half_eta_sq * gi) / eta).collect();
    let log_q = -0.5 * norm_sq(&v) - 0.5 * d * (2.0 * PI * eta * eta).ln();
    let lf = leapfrog_step(target, &PhaseState { position: x.to_vec(), velocity: v }, eta)?;
    Ok(log_q + log_accept_energy(lf.energy_error))
}

/// `log k(x, y)` for `y ≠ x` of the random walk Metropolis kernel.
pub fn rwm_transition_log_density(target: &dyn Target, x: &[f64], y: &[f64], eta: f64) -> Result<f64> {
    let d = x.len() as f64;
    let sq: f64 = x.iter().zip(y).map(|(a, b)| (b - a) * (b - a)).sum();
    let log_q = -sq / (2.0 * eta * eta) - 0.5 * d * (2.0 * PI * eta * eta).ln();
    Ok(log_q + (target.potential(x) - target.potential(y)).min(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::targets::{annulus, Constant, Gaussian};

    #[test]
    fn one_iteration_matches_one_step() {
        let g = Gaussian::standard(2);
        let cfg = ChainConfig::new(0.4, 1, 17);
        let trace = run_mala(&g, &cfg, &[0.3, -0.2]).unwrap();
        let mut rng = cfg.rng();
        let step = mala_step(&g, &[0.3, -0.2], 0.4, &mut rng).unwrap();
        let mut rec = trace.records[1].clone();
        rec.index = 0;
        assert_eq!(rec, step);
        assert_eq!(trace.records.len(), 2);
        assert_eq!(trace.gradient_evals, 2);
    }

    #[test]
    fn free_particle_always_accepts() {
        let t = Constant::zero(3);
        let trace = run_mala(&t, &ChainConfig::new(0.5, 500, 1), &[0.0; 3]).unwrap();
        assert!(trace.records.iter().all(|r| r.accepted && r.energy_error == 0.0));
        let trace = run_rwm(&t, &ChainConfig::new(0.5, 500, 1), &[0.0; 3]).unwrap();
        assert!(trace.records.iter().all(|r| r.accepted));
        assert_eq!(trace.gradient_evals, 0);
    }

    #[test]
    fn rejected_steps_keep_state() {
        let g = Gaussian::standard(1);
        let trace = run_mala(&g, &ChainConfig::new(1.9, 2000, 3), &[0.0]).unwrap();
        let mut rejected = 0;
        for w in trace.records.windows(2) {
            assert!(w[1].log_accept_prob <= 0.0);
            assert_eq!(w[1].log_accept_prob, (-w[1].energy_error).min(0.0));
            if !w[1].accepted {
                rejected += 1;
                assert_eq!(w[1].state, w[0].state);
            }
        }
        assert!(rejected > 0);
    }

    #[test]
    fn rwm_acceptance_example() {
        // z = 0, ẑ = 1 on a standard Gaussian: min(1, e^{-1/2})
        let g = Gaussian::standard(1);
        let la = (g.potential(&[0.0]) - g.potential(&[1.0])).min(0.0);
        assert!((la.exp() - 0.60653).abs() < 1e-5);
        let la = (g.potential(&[1.0]) - g.potential(&[0.2])).min(0.0);
        assert_eq!(la, 0.0);
    }

    #[test]
    fn constrained_requires_init_in_set() {
        let g = Gaussian::standard(2);
        let cfg = ChainConfig::new(0.3, 10, 1).with_constraint(annulus(0.5, 1.0).unwrap());
        assert!(run_constrained_mala(&g, &cfg, &[0.0, 0.0]).is_err());
        assert!(run_constrained_mala(&g, &ChainConfig::new(0.3, 10, 1), &[0.7, 0.0]).is_err());
        let trace = run_constrained_mala(&g, &cfg, &[0.7, 0.0]).unwrap();
        assert!(trace.records.iter().all(|r| {
            let n = crate::vector::norm(&r.state);
            (0.5..=1.0).contains(&n)
        }));
    }

    #[test]
    fn vacuous_constraint_reproduces_mala() {
        let g = Gaussian::standard(2);
        let cfg = ChainConfig::new(0.5, 300, 9);
        let a = run_mala(&g, &cfg, &[1.0, 1.0]).unwrap();
        let b =
            run_constrained_mala(&g, &cfg.clone().with_constraint(ConstraintSet::everywhere()), &[1.0, 1.0]).unwrap();
        for (ra, rb) in a.records.iter().zip(&b.records) {
            assert_eq!(ra.state, rb.state);
            assert_eq!(ra.energy_error, rb.energy_error);
        }
    }

    #[test]
    fn minimizer_examples() {
        let g = Gaussian::standard(1);
        let cfg = ChainConfig::new(0.5, 1, 2);
        let t = run_mala(&g, &cfg.clone(), &[0.0]).unwrap();
        // the origin is the global minimizer, so it stays best
        assert_eq!(extract_minimizer(&t), (vec![0.0], 0.0));

        let t = run_mala(&g, &ChainConfig::new(0.3, 400, 4), &[2.0]).unwrap();
        let scan = t.records.iter().min_by(|a, b| a.potential.partial_cmp(&b.potential).unwrap()).unwrap();
        let (x, u) = extract_minimizer(&t);
        assert_eq!(u, scan.potential);
        assert_eq!(x, scan.state);
        assert_eq!(t.records[t.argmin_index].potential, u);
    }

    #[test]
    fn record_stride() {
        let g = Gaussian::standard(1);
        let t = run_mala(&g, &ChainConfig::new(0.5, 100, 4).record_every(10), &[0.0]).unwrap();
        assert_eq!(t.records.len(), 11);
        assert_eq!(t.records[3].index, 30);
        assert!(run_mala(&g, &ChainConfig::new(0.5, 100, 4).record_every(0), &[0.0]).is_err());
        assert!(run_mala(&g, &ChainConfig::new(-0.5, 100, 4), &[0.0]).is_err());
    }
}
