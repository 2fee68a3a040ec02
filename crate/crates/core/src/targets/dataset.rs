use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng;
use crate::vector::{dot, norm};

const UNIT_TOL: f64 = 1e-12;

/// Unit-norm feature columns with binary responses.
///
/// Responses may be coded 0/1 (regression) or ±1 (classifier); targets read
/// any positive response as the positive class.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<Vec<f64>>,
    responses: Vec<f64>,
    meta: DatasetMeta,
}

/// JSON sidecar stored next to the dataset CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub d: usize,
    pub r: usize,
    pub q0: f64,
    pub seed: Option<u64>,
    pub theta_star: Option<Vec<f64>>,
}

impl Dataset {
    pub fn new(d: usize, features: Vec<Vec<f64>>, responses: Vec<f64>) -> Result<Self> {
        let r = features.len();
        Self::with_meta(features, responses, DatasetMeta { d, r, q0: 1.0, seed: None, theta_star: None })
    }

    pub fn with_meta(features: Vec<Vec<f64>>, responses: Vec<f64>, meta: DatasetMeta) -> Result<Self> {
        if meta.d == 0 {
            return Err(invalid("dataset dimension must be at least 1"));
        }
        if responses.len() != features.len() {
            return Err(invalid(format!("{} responses for {} feature columns", responses.len(), features.len())));
        }
        for (i, col) in features.iter().enumerate() {
            if col.len() != meta.d {
                return Err(invalid(format!("feature column {i} has length {}, expected {}", col.len(), meta.d)));
            }
            let n = norm(col);
            if !n.is_finite() || (n - 1.0).abs() > UNIT_TOL {
                return Err(invalid(format!("feature column {i} has norm {n}, expected 1")));
            }
        }
        if let Some(y) = responses.iter().find(|y| !(**y == 0.0 || **y == 1.0 || **y == -1.0)) {
            return Err(invalid(format!("response {y} is not binary")));
        }
        if !(meta.q0 > 0.0 && meta.q0 <= 1.0) {
            return Err(invalid(format!("q0 = {} outside (0, 1]", meta.q0)));
        }
        let meta = DatasetMeta { r: features.len(), ..meta };
        Ok(Self { features, responses, meta })
    }

    pub fn dim(&self) -> usize {
        self.meta.d
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn features(&self) -> &[Vec<f64>] {
        &self.features
    }

    pub fn responses(&self) -> &[f64] {
        &self.responses
    }

    pub fn meta(&self) -> &DatasetMeta {
        &self.meta
    }

    pub fn theta_star(&self) -> Option<&[f64]> {
        self.meta.theta_star.as_deref()
    }

    /// ±1 label for datum `i`.
    pub fn sign_label(&self, i: usize) -> f64 {
        if self.responses[i] > 0.0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Writes `feature_0..feature_{d-1},response` rows and a JSON sidecar
    /// next to `path` (same stem, `.json` extension).
    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header: Vec<String> = (0..self.dim()).map(|j| format!("feature_{j}")).collect();
        header.push("response".into());
        w.write_record(&header)?;
        for (col, y) in self.features.iter().zip(&self.responses) {
            let mut row: Vec<String> = col.iter().map(|v| format!("{v:?}")).collect();
            row.push(format!("{y:?}"));
            w.write_record(&row)?;
        }
        w.flush()?;
        let mut f = File::create(sidecar_path(path))?;
        f.write_all(serde_json::to_string_pretty(&self.meta)?.as_bytes())?;
        f.write_all(b"\n")?;
        Ok(())
    }

    /// Reads a dataset CSV; the sidecar is used when present.
    pub fn load_csv(path: &Path) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path)?;
        let headers = rdr.headers()?.clone();
        let d =
            headers.len().checked_sub(1).filter(|d| *d >= 1).ok_or_else(|| {
                invalid(format!("{}: expected feature columns and a response column", path.display()))
            })?;
        for (j, h) in headers.iter().take(d).enumerate() {
            if h != format!("feature_{j}") {
                return Err(invalid(format!("{}: unexpected header {h:?}", path.display())));
            }
        }
        if &headers[d] != "response" {
            return Err(invalid(format!("{}: last column must be `response`", path.display())));
        }
        let mut features = Vec::new();
        let mut responses = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let parse = |s: &str| {
                s.trim().parse::<f64>().map_err(|e| invalid(format!("{}: bad number {s:?}: {e}", path.display())))
            };
            let col = rec.iter().take(d).map(parse).collect::<Result<Vec<_>>>()?;
            features.push(col);
            responses.push(parse(&rec[d])?);
        }
        let side = sidecar_path(path);
        let meta = if side.exists() {
            let meta: DatasetMeta = serde_json::from_reader(File::open(&side)?)?;
            if meta.d != d || meta.r != features.len() {
                return Err(invalid(format!(
                    "sidecar {} says d={}, r={} but csv has d={d}, r={}",
                    side.display(),
                    meta.d,
                    meta.r,
                    features.len()
                )));
            }
            meta
        } else {
            DatasetMeta { d, r: features.len(), q0: 1.0, seed: None, theta_star: None }
        };
        Dataset::with_meta(features, responses, meta)
    }
}

fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

/// Uniform point on the unit sphere in `R^d`.
pub(crate) fn uniform_on_sphere<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Vec<f64> {
    loop {
        let g = rng::standard_normal_vec(rng, d);
        let n = norm(&g);
        if n >= 1e-12 {
            return g.into_iter().map(|v| v / n).collect();
        }
    }
}

/// Features uniform on the sphere; label `sign(xᵀθ*)` with probability
/// `(1 + q(x)) / 2`, flipped otherwise, where `q(x) = min(1, q0 |xᵀθ*|)`.
pub fn sample_sphere_dataset(d: usize, r: usize, theta_star: &[f64], q0: f64, seed: u64) -> Result<Dataset> {
    if theta_star.len() != d {
        return Err(invalid(format!("theta_star has length {}, expected {d}", theta_star.len())));
    }
    if (norm(theta_star) - 1.0).abs() > 1e-9 {
        return Err(invalid("theta_star must be a unit vector"));
    }
    if !(q0 > 0.0 && q0 <= 1.0) {
        return Err(invalid(format!("q0 = {q0} outside (0, 1]")));
    }
    let mut rng = rng::stream(seed, 0);
    let mut features = Vec::with_capacity(r);
    let mut responses = Vec::with_capacity(r);
    for _ in 0..r {
        let x = uniform_on_sphere(&mut rng, d);
        let y = draw_label(&mut rng, &x, theta_star, q0);
        features.push(x);
        responses.push(y);
    }
    Dataset::with_meta(
        features,
        responses,
        DatasetMeta { d, r, q0, seed: Some(seed), theta_star: Some(theta_star.to_vec()) },
    )
    .map_err(|e| match e {
        Error::InvalidArgument(m) => invalid(format!("generated dataset invalid: {m}")),
        other => other,
    })
}

pub(crate) fn draw_label<R: Rng + ?Sized>(rng: &mut R, x: &[f64], theta_star: &[f64], q0: f64) -> f64 {
    let s = dot(x, theta_star);
    let truth = if s >= 0.0 { 1.0 } else { -1.0 };
    let q = (q0 * s.abs()).min(1.0);
    let u: f64 = rng.random();
    if u < 0.5 * (1.0 + q) {
        truth
    } else {
        -truth
    }
}
