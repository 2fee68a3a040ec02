//! Small dense-vector helpers on `&[f64]`.

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

pub fn norm(a: &[f64]) -> f64 {
    norm_sq(a).sqrt()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn scaled(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

/// `a + s * b`
pub fn axpy(a: &[f64], s: f64, b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + s * y).collect()
}

pub fn non_finite_coords(a: &[f64]) -> Vec<usize> {
    a.iter().enumerate().filter(|(_, v)| !v.is_finite()).map(|(i, _)| i).collect()
}

/// Angle in radians between two nonzero vectors.
pub fn angle(a: &[f64], b: &[f64]) -> f64 {
    let c = dot(a, b) / (norm(a) * norm(b));
    c.clamp(-1.0, 1.0).acos()
}

/// `max_i |col_i . u|` and `sqrt(sum_i (col_i . u)^2)` for a set of directions.
pub fn projection_norms(directions: &[Vec<f64>], u: &[f64]) -> (f64, f64) {
    let mut inf = 0.0f64;
    let mut sq = 0.0;
    for col in directions {
        let p = dot(col, u);
        inf = inf.max(p.abs());
        sq += p * p;
    }
    (inf, sq.sqrt())
}

/// Standard basis e_1..e_d, used as bad directions when a target declares none.
pub fn identity_columns(d: usize) -> Vec<Vec<f64>> {
    (0..d)
        .map(|i| {
            let mut e = vec![0.0; d];
            e[i] = 1.0;
            e
        })
        .collect()
}
