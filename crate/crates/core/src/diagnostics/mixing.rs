use rayon::prelude::*;
use serde::Serialize;

use super::grid::{grid_truth, histogram, tv_distance, GridDistribution};
use crate::error::{invalid, Result};
use crate::rng::{self, ChainRng};
use crate::samplers::{advance, ChainTrace, SamplerKind};
use crate::targets::{ConstraintSet, Target};

/// Starting distribution for replica chains.
#[derive(Debug, Clone)]
pub enum InitDistribution {
    Point(Vec<f64>),
    /// Cell drawn by mass, then a uniform point inside the cell.
    Grid(GridDistribution),
    /// The grid truth itself.
    Stationary,
}

/// Everything a replica-based mixing estimate needs.
#[derive(Clone)]
pub struct MixingSetup<'a> {
    pub target: &'a dyn Target,
    pub kind: SamplerKind,
    pub eta: f64,
    pub init: InitDistribution,
    pub tv_threshold: f64,
    pub replicas: usize,
    pub check_every: usize,
    pub max_iterations: usize,
    pub seed: u64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub bins: Vec<usize>,
    pub constraint: Option<ConstraintSet>,
    pub lazy: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct MixingEstimate {
    /// First checkpoint whose floor-corrected TV is below threshold; `None` if the budget ran out.
    pub iteration: Option<usize>,
    pub floor: f64,
    pub replicas: usize,
    pub seed: u64,
    pub tv_history: Vec<(usize, f64)>,
}

const FLOOR_DRAWS: usize = 20;

fn draw_init(
    init: &InitDistribution,
    truth: &GridDistribution,
    constraint: Option<&ConstraintSet>,
    rng: &mut ChainRng,
) -> Vec<f64> {
    let grid = match init {
        InitDistribution::Point(p) => return p.clone(),
        InitDistribution::Grid(g) => g,
        InitDistribution::Stationary => truth,
    };
    for _ in 0..64 {
        let x = grid.sample(rng);
        if constraint.is_none_or(|s| s.contains(&x)) {
            return x;
        }
    }
    let cell = grid.cell_of(&grid.sample(rng)).unwrap_or(0);
    grid.midpoint(cell)
}

/// Mean TV between the truth and histograms of `replicas` exact draws from it.
pub fn binning_floor(truth: &GridDistribution, replicas: usize, seed: u64) -> Result<f64> {
    let mut total = 0.0;
    for k in 0..FLOOR_DRAWS {
        let mut rng = rng::substream(seed, u64::MAX >> 24, k as u64);
        let draws: Vec<Vec<f64>> = (0..replicas).map(|_| truth.sample(&mut rng)).collect();
        let h = histogram(&draws, truth.lower(), truth.upper(), truth.bins())?;
        total += tv_distance(&h.distribution, truth)?;
    }
    Ok(total / FLOOR_DRAWS as f64)
}

/// Runs `replicas` independent chains in lockstep and returns the first
/// checkpoint (multiples of `check_every`, starting at 0) where the TV between
/// replica histogram and grid truth, minus the binning floor, is at most the threshold.
pub fn mixing_time_estimate(setup: &MixingSetup) -> Result<MixingEstimate> {
    if setup.replicas < 100 {
        return Err(invalid("mixing estimates need at least 100 replicas"));
    }
    if setup.check_every == 0 {
        return Err(invalid("check_every must be positive"));
    }
    if !(setup.eta > 0.0) {
        return Err(invalid(format!("step size must be positive, got {}", setup.eta)));
    }
    let constraint = match setup.kind {
        SamplerKind::ConstrainedMala => {
            Some(setup.constraint.as_ref().ok_or_else(|| invalid("constrained MALA requires a constraint set"))?)
        }
        _ => None,
    };
    let truth = grid_truth(setup.target, &setup.lower, &setup.upper, &setup.bins, setup.constraint.as_ref())?;
    let floor = binning_floor(&truth, setup.replicas, setup.seed)?;

    let mut walkers: Vec<(Vec<f64>, f64, ChainRng)> = (0..setup.replicas)
        .map(|r| {
            let mut rng = rng::stream(setup.seed, r as u64);
            let x = draw_init(&setup.init, &truth, constraint, &mut rng);
            let u = setup.target.potential(&x);
            (x, u, rng)
        })
        .collect();
    if let Some(s) = constraint {
        if walkers.iter().any(|w| !s.contains(&w.0)) {
            return Err(invalid("initial distribution puts replicas outside the constraint"));
        }
    }

    let mut tv_history = Vec::new();
    let mut iteration = 0;
    loop {
        let h = histogram(walkers.iter().map(|w| &w.0), &setup.lower, &setup.upper, &setup.bins)?;
        let tv = tv_distance(&h.distribution, &truth)?;
        tv_history.push((iteration, tv));
        if tv - floor <= setup.tv_threshold {
            return Ok(MixingEstimate {
                iteration: Some(iteration),
                floor,
                replicas: setup.replicas,
                seed: setup.seed,
                tv_history,
            });
        }
        if iteration + setup.check_every > setup.max_iterations {
            return Ok(MixingEstimate {
                iteration: None,
                floor,
                replicas: setup.replicas,
                seed: setup.seed,
                tv_history,
            });
        }
        walkers.par_iter_mut().try_for_each(|(x, u, rng)| {
            advance(setup.kind, setup.target, x, u, setup.eta, setup.lazy, constraint, setup.check_every, rng)
        })?;
        iteration += setup.check_every;
    }
}

/// Index of the first record whose state lies in `set`.
pub fn hitting_time(trace: &ChainTrace, set: &ConstraintSet) -> Option<usize> {
    trace.records.iter().find(|r| set.contains(&r.state)).map(|r| r.index)
}
