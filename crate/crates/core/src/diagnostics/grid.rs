use std::io::Write;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::targets::{ConstraintSet, Target};

const MASS_TOL: f64 = 1e-12;

/// A normalized mass function on a regular 1D or 2D grid of cells.
///
/// Cells are stored row-major: cell `(i0, i1)` has index `i0 * bins[1] + i1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridDistribution {
    lower: Vec<f64>,
    upper: Vec<f64>,
    bins: Vec<usize>,
    mass: Vec<f64>,
}

fn check_geometry(lower: &[f64], upper: &[f64], bins: &[usize]) -> Result<()> {
    let dims = bins.len();
    if !(1..=2).contains(&dims) || lower.len() != dims || upper.len() != dims {
        return Err(invalid("grids are 1D or 2D with matching bounds and bins"));
    }
    for a in 0..dims {
        if !(lower[a] < upper[a]) || !lower[a].is_finite() || !upper[a].is_finite() {
            return Err(invalid(format!("axis {a}: need finite lower < upper")));
        }
        if bins[a] == 0 {
            return Err(invalid(format!("axis {a}: need at least one bin")));
        }
    }
    Ok(())
}

impl GridDistribution {
    pub fn from_masses(lower: Vec<f64>, upper: Vec<f64>, bins: Vec<usize>, mass: Vec<f64>) -> Result<Self> {
        check_geometry(&lower, &upper, &bins)?;
        if mass.len() != bins.iter().product::<usize>() {
            return Err(invalid("mass length does not match the number of cells"));
        }
        if mass.iter().any(|m| !(*m >= 0.0)) {
            return Err(invalid("masses must be nonnegative"));
        }
        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(invalid(format!("masses sum to {total}, expected 1")));
        }
        Ok(Self { lower, upper, bins, mass })
    }

    /// Normalizes nonnegative weights; fails on all-zero weights.
    pub fn from_weights(lower: Vec<f64>, upper: Vec<f64>, bins: Vec<usize>, weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::EmptySupport("all cell weights are zero".into()));
        }
        let mass = weights.into_iter().map(|w| w / total).collect();
        check_geometry(&lower, &upper, &bins)?;
        Ok(Self { lower, upper, bins, mass })
    }

    pub fn dims(&self) -> usize {
        self.bins.len()
    }

    pub fn bins(&self) -> &[usize] {
        &self.bins
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    pub fn cell_width(&self, axis: usize) -> f64 {
        (self.upper[axis] - self.lower[axis]) / self.bins[axis] as f64
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dims()).map(|a| self.cell_width(a)).product()
    }

    fn axis_indices(&self, cell: usize) -> (usize, usize) {
        if self.dims() == 1 {
            (cell, 0)
        } else {
            (cell / self.bins[1], cell % self.bins[1])
        }
    }

    pub fn midpoint(&self, cell: usize) -> Vec<f64> {
        let (i0, i1) = self.axis_indices(cell);
        let mut m = vec![self.lower[0] + (i0 as f64 + 0.5) * self.cell_width(0)];
        if self.dims() == 2 {
            m.push(self.lower[1] + (i1 as f64 + 0.5) * self.cell_width(1));
        }
        m
    }

    /// 1D cell edges `lower = e_0 < e_1 < ... < e_n = upper`.
    pub fn edges(&self) -> Vec<f64> {
        let h = self.cell_width(0);
        (0..=self.bins[0]).map(|k| self.lower[0] + k as f64 * h).collect()
    }

    /// Cell containing `x`; the upper boundary belongs to the last cell.
    pub fn cell_of(&self, x: &[f64]) -> Option<usize> {
        if x.len() < self.dims() {
            return None;
        }
        let mut idx = [0usize; 2];
        for a in 0..self.dims() {
            let v = x[a];
            if !(v >= self.lower[a] && v <= self.upper[a]) {
                return None;
            }
            let k = ((v - self.lower[a]) / self.cell_width(a)).floor() as usize;
            idx[a] = k.min(self.bins[a] - 1);
        }
        Some(if self.dims() == 1 { idx[0] } else { idx[0] * self.bins[1] + idx[1] })
    }

    pub fn same_geometry(&self, other: &Self) -> bool {
        self.lower == other.lower && self.upper == other.upper && self.bins == other.bins
    }

    /// Mass carried by cells touching the outer boundary of the grid.
    pub fn boundary_mass(&self) -> f64 {
        (0..self.len())
            .filter(|&c| {
                let (i0, i1) = self.axis_indices(c);
                i0 == 0 || i0 + 1 == self.bins[0] || (self.dims() == 2 && (i1 == 0 || i1 + 1 == self.bins[1]))
            })
            .map(|c| self.mass[c])
            .sum()
    }

    /// Same geometry, masses replaced by `mass` restricted to `keep` and renormalized.
    pub fn restricted(&self, keep: impl Fn(&[f64]) -> bool) -> Result<Self> {
        let w = (0..self.len()).map(|c| if keep(&self.midpoint(c)) { self.mass[c] } else { 0.0 }).collect();
        Self::from_weights(self.lower.clone(), self.upper.clone(), self.bins.clone(), w)
    }

    /// Sums cell masses into a coarser grid; `bins` must divide the current bin counts.
    pub fn coarsen(&self, bins: &[usize]) -> Result<Self> {
        if bins.len() != self.dims() || bins.iter().zip(&self.bins).any(|(c, f)| *c == 0 || f % c != 0) {
            return Err(invalid("coarse bin counts must divide the fine bin counts"));
        }
        let mut mass = vec![0.0; bins.iter().product()];
        for c in 0..self.len() {
            let (i0, i1) = self.axis_indices(c);
            let k0 = i0 / (self.bins[0] / bins[0]);
            let idx = if self.dims() == 1 { k0 } else { k0 * bins[1] + i1 / (self.bins[1] / bins[1]) };
            mass[idx] += self.mass[c];
        }
        Ok(Self { lower: self.lower.clone(), upper: self.upper.clone(), bins: bins.to_vec(), mass })
    }

    /// Draws a cell by mass, then a point uniformly inside it.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut cell = self.len() - 1;
        for (c, m) in self.mass.iter().enumerate() {
            acc += m;
            if u < acc && *m > 0.0 {
                cell = c;
                break;
            }
        }
        while self.mass[cell] == 0.0 && cell > 0 {
            cell -= 1;
        }
        let mid = self.midpoint(cell);
        (0..self.dims()).map(|a| mid[a] + (rng.random::<f64>() - 0.5) * self.cell_width(a)).collect()
    }

    /// Marginal cumulative mass to the left of each 1D edge.
    pub fn cumulative(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len() + 1);
        let mut acc = 0.0;
        out.push(0.0);
        for m in &self.mass {
            acc += m;
            out.push(acc);
        }
        out
    }

    /// CSV with columns `cell,midpoint_0[,midpoint_1],mass`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["cell".to_string()];
        header.extend((0..self.dims()).map(|a| format!("midpoint_{a}")));
        header.push("mass".into());
        w.write_record(&header)?;
        for c in 0..self.len() {
            let mut row = vec![c.to_string()];
            row.extend(self.midpoint(c).iter().map(|m| format!("{m:?}")));
            row.push(format!("{:?}", self.mass[c]));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

/// `π ∝ exp(-U) 1_S` by midpoint quadrature on the grid.
pub fn grid_truth(
    target: &dyn Target,
    lower: &[f64],
    upper: &[f64],
    bins: &[usize],
    constraint: Option<&ConstraintSet>,
) -> Result<GridDistribution> {
    check_geometry(lower, upper, bins)?;
    if bins.iter().any(|b| *b < 2) {
        return Err(invalid("grid truth needs at least 2 bins per axis"));
    }
    if target.dim() != bins.len() {
        return Err(invalid(format!("target dimension {} does not match grid dimension {}", target.dim(), bins.len())));
    }
    let shell = GridDistribution {
        lower: lower.to_vec(),
        upper: upper.to_vec(),
        bins: bins.to_vec(),
        mass: vec![0.0; bins.iter().product()],
    };
    let log_w: Vec<f64> = (0..shell.len())
        .map(|c| {
            let x = shell.midpoint(c);
            if constraint.is_none_or(|s| s.contains(&x)) {
                -target.potential(&x)
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    let top = log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return Err(Error::EmptySupport("no grid cell has positive target mass".into()));
    }
    let w = log_w.iter().map(|l| (l - top).exp()).collect();
    let g = GridDistribution::from_weights(shell.lower, shell.upper, shell.bins, w)?;
    let edge = g.boundary_mass();
    if edge > 1e-6 {
        log::warn!("grid truncation: boundary cells carry {edge:.3e} of the mass");
    }
    Ok(g)
}

/// Normalized bin counts plus the number of samples that fell outside.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub distribution: GridDistribution,
    pub in_bounds: usize,
    pub out_of_bounds: usize,
}

pub fn histogram<I, S>(samples: I, lower: &[f64], upper: &[f64], bins: &[usize]) -> Result<Histogram>
where
    I: IntoIterator<Item = S>,
    S: AsRef<[f64]>,
{
    check_geometry(lower, upper, bins)?;
    let shell = GridDistribution {
        lower: lower.to_vec(),
        upper: upper.to_vec(),
        bins: bins.to_vec(),
        mass: vec![0.0; bins.iter().product()],
    };
    let mut counts = vec![0u64; shell.len()];
    let mut out_of_bounds = 0;
    for s in samples {
        match shell.cell_of(s.as_ref()) {
            Some(c) => counts[c] += 1,
            None => out_of_bounds += 1,
        }
    }
    let in_bounds: u64 = counts.iter().sum();
    if in_bounds == 0 {
        return Err(Error::EmptySupport("no samples inside the histogram bounds".into()));
    }
    let mass = counts.iter().map(|c| *c as f64 / in_bounds as f64).collect();
    Ok(Histogram { distribution: GridDistribution { mass, ..shell }, in_bounds: in_bounds as usize, out_of_bounds })
}

/// `½ Σ |p − q|` on a shared grid.
pub fn tv_distance(p: &GridDistribution, q: &GridDistribution) -> Result<f64> {
    if !p.same_geometry(q) {
        return Err(invalid("TV distance needs identical grid geometry"));
    }
    let tv = 0.5 * p.mass.iter().zip(&q.mass).map(|(a, b)| (a - b).abs()).sum::<f64>();
    Ok(tv.clamp(0.0, 1.0))
}
