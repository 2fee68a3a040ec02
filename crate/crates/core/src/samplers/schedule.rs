use crate::diagnostics::GridDistribution;
use crate::error::{invalid, Result};

/// `[log log(1/a)]^{-1}` clamped to `(0, 1]`; equals 1 whenever the double
/// logarithm is undefined or below 1.
fn loglog_factor(tail_rate: Option<f64>) -> f64 {
    let Some(a) = tail_rate else { return 1.0 };
    if !(a > 0.0) {
        return 1.0;
    }
    let l = (1.0 / a).ln();
    if l <= 1.0 {
        return 1.0;
    }
    (1.0 / l.ln().max(1.0)).min(1.0)
}

/// Step size `c · min(C3^{-1/3} d^{-1/6}, d^{-1/3}, C4^{-1/4}) · min(1, M^{-1/2}) · [log log(1/a)]^{-1}`.
///
/// A zero `C3` or `C4` drops its term from the minimum.
pub fn theorem1_step_size(c3: f64, c4: f64, m: f64, d: usize, tail_rate: Option<f64>, safety: f64) -> Result<f64> {
    if !(m > 0.0) || d == 0 || !(safety > 0.0) || c3 < 0.0 || c4 < 0.0 {
        return Err(invalid(format!(
            "theorem-1 step size needs M > 0, d ≥ 1, safety > 0, C3, C4 ≥ 0 (got M={m}, d={d}, safety={safety}, C3={c3}, C4={c4})"
        )));
    }
    let df = d as f64;
    let mut term = df.powf(-1.0 / 3.0);
    if c3 > 0.0 {
        term = term.min(c3.powf(-1.0 / 3.0) * df.powf(-1.0 / 6.0));
    }
    if c4 > 0.0 {
        term = term.min(c4.powf(-0.25));
    }
    Ok(safety * term * m.powf(-0.5).min(1.0) * loglog_factor(tail_rate))
}

/// The alternative radius-based schedule
/// `c · min(C3^{-1/3} R^{-1/3}, R^{-2/3}, C4^{-1/4}) · min(M^{-1/2}, 1) · α^{-1}`.
pub fn section7_step_size(c3: f64, c4: f64, radius: f64, m: f64, alpha: f64, safety: f64) -> Result<f64> {
    if !(radius > 0.0 && m > 0.0 && alpha > 0.0 && safety > 0.0) || c3 < 0.0 || c4 < 0.0 {
        return Err(invalid("section-7 step size needs positive R, M, alpha, safety"));
    }
    let mut term = radius.powf(-2.0 / 3.0);
    if c3 > 0.0 {
        term = term.min((c3 * radius).powf(-1.0 / 3.0));
    }
    if c4 > 0.0 {
        term = term.min(c4.powf(-0.25));
    }
    Ok(safety * term * m.powf(-0.5).min(1.0) / alpha)
}

/// `max_cell μ0(cell) / π(cell)`; infinite when the start puts mass where the
/// target has none.
pub fn warmness_on_grid(start: &GridDistribution, target: &GridDistribution) -> Result<f64> {
    if !start.same_geometry(target) {
        return Err(invalid("start and target grids differ in geometry"));
    }
    let mut beta = 0.0f64;
    for (mu, pi) in start.mass().iter().zip(target.mass()) {
        if *mu > 0.0 {
            if *pi <= 0.0 {
                return Ok(f64::INFINITY);
            }
            beta = beta.max(mu / pi);
        }
    }
    Ok(beta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theorem1_examples() {
        let eta = theorem1_step_size(0.0, 0.0, 1.0, 8, None, 1.0).unwrap();
        assert!((eta - 0.5).abs() < 1e-15);
        let eta = theorem1_step_size(1.0, 0.0, 1.0, 64, None, 1.0).unwrap();
        assert!((eta - 0.25).abs() < 1e-15);
        let a = theorem1_step_size(1.0, 2.0, 1.0, 10, None, 1.0).unwrap();
        let b = theorem1_step_size(1.0, 2.0, 4.0, 10, None, 1.0).unwrap();
        assert!((a / b - 2.0).abs() < 1e-12);
        assert!(theorem1_step_size(0.0, 0.0, 0.0, 1, None, 1.0).is_err());
    }

    #[test]
    fn loglog_clamp() {
        assert_eq!(loglog_factor(None), 1.0);
        assert_eq!(loglog_factor(Some(5.0)), 1.0);
        assert_eq!(loglog_factor(Some(0.1)), 1.0);
        let a = (-(3f64.exp())).exp(); // log(1/a) = e^3, log log = 3
        assert!((loglog_factor(Some(a)) - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn warmness_examples() {
        let pi = GridDistribution::from_masses(vec![0.0], vec![1.0], vec![2], vec![0.5, 0.5]).unwrap();
        let mu = GridDistribution::from_masses(vec![0.0], vec![1.0], vec![2], vec![1.0, 0.0]).unwrap();
        assert_eq!(warmness_on_grid(&pi, &pi).unwrap(), 1.0);
        assert_eq!(warmness_on_grid(&mu, &pi).unwrap(), 2.0);
        let hole = GridDistribution::from_masses(vec![0.0], vec![1.0], vec![2], vec![0.0, 1.0]).unwrap();
        assert_eq!(warmness_on_grid(&mu, &hole).unwrap(), f64::INFINITY);
    }
}
