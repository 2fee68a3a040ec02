use std::f64::consts::{PI, SQRT_2};
use std::ops::Range;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::erf::erfc;

use super::grid::GridDistribution;
use crate::error::{invalid, Result};
use crate::rng;
use crate::samplers::{mala_transition_log_density, rwm_transition_log_density, SamplerKind};
use crate::targets::Target;

fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

fn require_1d(pi: &GridDistribution) -> Result<()> {
    if pi.dims() != 1 {
        return Err(invalid("only 1D grids are supported here"));
    }
    if pi.len() < 2 {
        return Err(invalid("need at least two cells"));
    }
    Ok(())
}

/// Normalized density `e^{-U}/Z` of a 1D target, with `Z` by midpoint
/// quadrature over the grid of `pi`.
pub fn normalized_density_1d<'a>(target: &'a dyn Target, pi: &GridDistribution) -> impl Fn(f64) -> f64 + 'a {
    let h = pi.cell_width(0);
    let log_w: Vec<f64> = (0..pi.len()).map(|c| -target.potential(&pi.midpoint(c))).collect();
    let top = log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let log_z = top + (h * log_w.iter().map(|l| (l - top).exp()).sum::<f64>()).ln();
    move |t: f64| (-target.potential(&[t]) - log_z).exp()
}

/// Minimum over interior cell edges of `density(edge) / min(Π, 1 − Π)`.
pub fn cheeger_1d(pi: &GridDistribution, density: impl Fn(f64) -> f64) -> Result<f64> {
    require_1d(pi)?;
    let edges = pi.edges();
    let cum = pi.cumulative();
    let mut best = f64::INFINITY;
    for k in 1..pi.len() {
        let side = cum[k].min(1.0 - cum[k]);
        if side <= 0.0 {
            continue;
        }
        best = best.min(density(edges[k]) / side);
    }
    if best.is_infinite() {
        return Err(invalid("no cut separates positive mass"));
    }
    Ok(best)
}

fn check_region(pi: &GridDistribution, region: &Range<usize>) -> Result<()> {
    require_1d(pi)?;
    if region.start >= region.end || region.end > pi.len() {
        return Err(invalid(format!("region {region:?} is not a nonempty cell range of the grid")));
    }
    Ok(())
}

/// Cheeger ratio restricted to intervals of cells inside `region` with positive mass.
/// Edges on the outer grid boundary carry no flow.
pub fn restricted_cheeger_1d(pi: &GridDistribution, density: impl Fn(f64) -> f64, region: Range<usize>) -> Result<f64> {
    check_region(pi, &region)?;
    let edges = pi.edges();
    let cum = pi.cumulative();
    let n = pi.len();
    let edge_density: Vec<f64> = (0..=n).map(|k| if k == 0 || k == n { 0.0 } else { density(edges[k]) }).collect();
    let mut best = f64::INFINITY;
    for a in region.clone() {
        for b in a + 1..=region.end {
            let mass = cum[b] - cum[a];
            if mass > 0.0 {
                best = best.min((edge_density[a] + edge_density[b]) / mass);
            }
        }
    }
    if best.is_infinite() {
        return Err(invalid("region carries no mass"));
    }
    Ok(best)
}

/// A dense row-stochastic kernel on the midpoints of a 1D grid.
#[derive(Debug, Clone, Serialize)]
pub struct TransitionMatrix {
    n: usize,
    data: Vec<f64>,
    /// Largest per-row proposal mass that fell outside the grid.
    pub max_off_grid: f64,
    /// Proposal mass leaving the grid, averaged over rows with the grid's cell masses.
    pub off_grid_mass: f64,
    /// Per-row proposal mass landing on other cells.
    pub proposal_mass: Vec<f64>,
}

impl TransitionMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(invalid("transition matrix must be square and nonempty"));
        }
        let proposal_mass = rows.iter().enumerate().map(|(i, r)| 1.0 - r[i]).collect();
        Ok(Self { n, data: rows.concat(), max_off_grid: 0.0, off_grid_mass: 0.0, proposal_mass })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn max_row_sum_error(&self) -> f64 {
        (0..self.n).map(|i| (self.row(i).iter().sum::<f64>() - 1.0).abs()).fold(0.0, f64::max)
    }

    /// `μ K` for a row vector `μ`.
    pub fn apply_left(&self, mu: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (i, m) in mu.iter().enumerate() {
            if *m != 0.0 {
                for (o, k) in out.iter_mut().zip(self.row(i)) {
                    *o += m * k;
                }
            }
        }
        out
    }

    /// Stationary probability of accepting a proposal that lands on another cell.
    pub fn mean_acceptance(&self, pi: &[f64]) -> f64 {
        let moved: f64 = (0..self.n).map(|i| pi[i] * (1.0 - self.get(i, i))).sum();
        let proposed: f64 = (0..self.n).map(|i| pi[i] * self.proposal_mass[i]).sum();
        moved / proposed
    }
}

/// Discretizes a 1D MALA or RWM kernel on the grid midpoints: off-diagonal
/// entries are `h · k(x_i, x_j)` and rejected or off-grid mass goes on the diagonal.
pub fn transition_matrix_1d(
    target: &dyn Target,
    kind: SamplerKind,
    eta: f64,
    grid: &GridDistribution,
) -> Result<TransitionMatrix> {
    require_1d(grid)?;
    if target.dim() != 1 {
        return Err(invalid("transition matrices need a 1D target"));
    }
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(invalid(format!("step size must be positive, got {eta}")));
    }
    let n = grid.len();
    let h = grid.cell_width(0);
    let (lo, hi) = (grid.lower()[0], grid.upper()[0]);
    let mids: Vec<f64> = (0..n).map(|c| grid.midpoint(c)[0]).collect();
    let rows: Vec<Result<(Vec<f64>, f64, f64)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let x = [mids[i]];
            let mean = match kind {
                SamplerKind::Rwm => x[0],
                _ => x[0] - 0.5 * eta * eta * target.gradient(&x)[0],
            };
            let mut row = vec![0.0; n];
            let mut proposed = 0.0;
            for j in (0..n).filter(|&j| j != i) {
                let y = [mids[j]];
                let z = (y[0] - mean) / eta;
                proposed += h * (-0.5 * z * z).exp() / (2.0 * PI * eta * eta).sqrt();
                let log_k = match kind {
                    SamplerKind::Rwm => rwm_transition_log_density(target, &x, &y, eta)?,
                    _ => mala_transition_log_density(target, &x, &y, eta)?,
                };
                row[j] = h * log_k.exp();
            }
            row[i] = 1.0 - row.iter().sum::<f64>();
            let off = std_normal_cdf((lo - mean) / eta) + std_normal_cdf((mean - hi) / eta);
            Ok((row, proposed, off))
        })
        .collect();
    let mut data = Vec::with_capacity(n * n);
    let mut proposal_mass = Vec::with_capacity(n);
    let mut max_off_grid: f64 = 0.0;
    let mut off_grid_mass = 0.0;
    for (r, w) in rows.into_iter().zip(grid.mass()) {
        let (row, proposed, off) = r?;
        off_grid_mass += w * off;
        if row.iter().any(|k| !k.is_finite()) {
            return Err(crate::Error::NumericFailure { coords: vec![0] });
        }
        data.extend(row);
        proposal_mass.push(proposed);
        max_off_grid = max_off_grid.max(off);
    }
    if off_grid_mass > 1e-6 {
        log::warn!("stationary proposal mass {off_grid_mass:.3e} leaves the grid; folded into the diagonal");
    }
    let k = TransitionMatrix { n, data, max_off_grid, off_grid_mass, proposal_mass };
    if (0..n).any(|i| k.get(i, i) < -1e-9) {
        return Err(invalid(format!("step size {eta} is too small for cell width {h}: rows overshoot")));
    }
    Ok(k)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DetailedBalanceReport {
    pub max_abs: f64,
    pub max_entry: f64,
    /// Largest `|π_i K_ij − π_j K_ji| / max(π_i K_ij, π_j K_ji)` over non-negligible flows.
    pub max_relative: f64,
}

pub fn detailed_balance_violation(k: &TransitionMatrix, pi: &GridDistribution) -> Result<DetailedBalanceReport> {
    if pi.len() != k.size() {
        return Err(invalid("matrix and distribution sizes differ"));
    }
    let p = pi.mass();
    let mut rep = DetailedBalanceReport { max_abs: 0.0, max_entry: 0.0, max_relative: 0.0 };
    for i in 0..k.size() {
        for j in i + 1..k.size() {
            let a = p[i] * k.get(i, j);
            let b = p[j] * k.get(j, i);
            let top = a.max(b);
            rep.max_entry = rep.max_entry.max(top);
            rep.max_abs = rep.max_abs.max((a - b).abs());
            if top > 1e-290 {
                rep.max_relative = rep.max_relative.max((a - b).abs() / top);
            }
        }
    }
    Ok(rep)
}

#[derive(Debug, Clone, Copy)]
pub struct ConductanceOptions {
    pub random_subsets: usize,
    pub seed: u64,
}

impl Default for ConductanceOptions {
    fn default() -> Self {
        Self { random_subsets: 10_000, seed: 0 }
    }
}

/// Minimum flow ratio over the searched cuts; an upper bound on the true conductance.
#[derive(Debug, Clone, Serialize)]
pub struct ConductanceReport {
    pub value: f64,
    pub prefix_value: f64,
    pub family: String,
    pub best_cut: Vec<(usize, usize)>,
}

struct CutEvaluator<'a> {
    k: &'a TransitionMatrix,
    p: &'a [f64],
    cum_mass: Vec<f64>,
    /// Row prefix sums: `c[i * (n + 1) + j] = Σ_{l<j} K_il`.
    c: Vec<f64>,
}

impl<'a> CutEvaluator<'a> {
    fn new(k: &'a TransitionMatrix, p: &'a [f64]) -> Self {
        let n = k.size();
        let mut c = vec![0.0; n * (n + 1)];
        for i in 0..n {
            for j in 0..n {
                c[i * (n + 1) + j + 1] = c[i * (n + 1) + j] + k.get(i, j);
            }
        }
        let mut cum_mass = vec![0.0];
        for m in p {
            cum_mass.push(cum_mass.last().unwrap() + m);
        }
        Self { k, p, cum_mass, c }
    }

    fn row_mass(&self, i: usize, a: usize, b: usize) -> f64 {
        let w = self.k.size() + 1;
        self.c[i * w + b] - self.c[i * w + a]
    }

    /// `(flow out of S, π(S))` for `S` a union of disjoint cell ranges.
    fn evaluate(&self, s: &[(usize, usize)]) -> (f64, f64) {
        let mut flow = 0.0;
        let mut mass = 0.0;
        for &(a, b) in s {
            mass += self.cum_mass[b] - self.cum_mass[a];
            for i in a..b {
                let inside: f64 = s.iter().map(|&(x, y)| self.row_mass(i, x, y)).sum();
                flow += self.p[i] * (self.row_mass(i, 0, self.k.size()) - inside).max(0.0);
            }
        }
        (flow, mass)
    }
}

/// Conductance over all prefix and suffix cuts with `0 < π(S) ≤ ½`, refined by
/// random intervals and unions of two intervals.
pub fn conductance(k: &TransitionMatrix, pi: &GridDistribution, opts: ConductanceOptions) -> Result<ConductanceReport> {
    if pi.len() != k.size() {
        return Err(invalid("matrix and distribution sizes differ"));
    }
    let n = k.size();
    let ev = CutEvaluator::new(k, pi.mass());
    let mut best = f64::INFINITY;
    let mut best_cut = Vec::new();
    let mut consider = |cut: Vec<(usize, usize)>, best: &mut f64| {
        let (flow, mass) = ev.evaluate(&cut);
        if mass > 0.0 && mass <= 0.5 + 1e-12 && flow / mass < *best {
            *best = flow / mass;
            best_cut = cut;
        }
    };
    for t in 1..n {
        consider(vec![(0, t)], &mut best);
        consider(vec![(t, n)], &mut best);
    }
    let prefix_value = best;
    let mut rng = rng::stream(opts.seed, 0);
    for s in 0..opts.random_subsets {
        let mut pick = || {
            let a = rng.random_range(0..n);
            let b = rng.random_range(a + 1..=n);
            (a, b)
        };
        let first = pick();
        let cut = if s % 2 == 0 {
            vec![first]
        } else {
            let second = pick();
            if second.0 >= first.1 {
                vec![first, second]
            } else if second.1 <= first.0 {
                vec![second, first]
            } else {
                vec![(first.0.min(second.0), first.1.max(second.1))]
            }
        };
        consider(cut, &mut best);
    }
    if best.is_infinite() {
        best = 0.0;
    }
    Ok(ConductanceReport {
        value: best,
        prefix_value,
        family: format!("prefix/suffix cuts + {} random intervals and interval pairs", opts.random_subsets),
        best_cut,
    })
}

/// Conductance over all intervals inside `region` with positive mass.
pub fn restricted_conductance_1d(k: &TransitionMatrix, pi: &GridDistribution, region: Range<usize>) -> Result<f64> {
    check_region(pi, &region)?;
    if pi.len() != k.size() {
        return Err(invalid("matrix and distribution sizes differ"));
    }
    let ev = CutEvaluator::new(k, pi.mass());
    let mut best = f64::INFINITY;
    for a in region.clone() {
        for b in a + 1..=region.end {
            let (flow, mass) = ev.evaluate(&[(a, b)]);
            if mass > 0.0 {
                best = best.min(flow / mass);
            }
        }
    }
    if best.is_infinite() {
        return Err(invalid("region carries no mass"));
    }
    Ok(best)
}
