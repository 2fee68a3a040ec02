//! Versioned experiment spec files.
//!
//! A spec is a TOML document. The first key must be `version = 1`. Every
//! problem found while reading it is reported, not just the first.

use std::path::{Path, PathBuf};

use toml::{Table, Value};

use crate::error::{Error, Result};
use crate::samplers::SamplerKind;

pub const SPEC_VERSION: i64 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    File(PathBuf),
    /// Sphere dataset with `θ* = e₁`.
    Generate {
        d: usize,
        r: usize,
        q0: f64,
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum TargetSpec {
    Gaussian { d: usize, precision: Vec<f64> },
    Logistic { data: DataSource, prior: f64 },
    Sigmoid { data: DataSource, prior: f64 },
    ZeroOne { d: usize, r: usize, q0: f64, epsilon: f64, c1: f64, data_seed: u64 },
}

impl TargetSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            TargetSpec::Gaussian { .. } => "gaussian",
            TargetSpec::Logistic { .. } => "logistic",
            TargetSpec::Sigmoid { .. } => "sigmoid",
            TargetSpec::ZeroOne { .. } => "zero_one",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerSpec {
    pub kind: SamplerKind,
    pub lazy: bool,
    pub init: Option<Vec<f64>>,
    /// `(inner, outer)` radii of the annulus constraint.
    pub annulus: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScheduleSpec {
    Fixed { eta: f64 },
    Theorem1 { safety: f64 },
    Sweep { etas: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub enum DiagnosticSpec {
    AcceptanceStats,
    TvVsTruth {
        lower: Vec<f64>,
        upper: Vec<f64>,
        bins: Vec<usize>,
        burn_in: usize,
    },
    EnergyScaling {
        etas: Vec<f64>,
        samples: usize,
    },
    Regularity {
        points: usize,
        dirs: usize,
    },
    /// Angle to `θ*` and zero-one risk gap on `draws` fresh data points.
    Minimizer {
        draws: usize,
    },
    /// First iteration within `angle` of `θ*`, or within `radius` of `center`.
    HittingTime {
        angle: Option<f64>,
        center: Option<Vec<f64>>,
        radius: Option<f64>,
    },
}

impl DiagnosticSpec {
    pub fn name(&self) -> &'static str {
        match self {
            DiagnosticSpec::AcceptanceStats => "acceptance_stats",
            DiagnosticSpec::TvVsTruth { .. } => "tv_vs_truth",
            DiagnosticSpec::EnergyScaling { .. } => "energy_scaling",
            DiagnosticSpec::Regularity { .. } => "regularity",
            DiagnosticSpec::Minimizer { .. } => "minimizer",
            DiagnosticSpec::HittingTime { .. } => "hitting_time",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub name: String,
    pub seed: u64,
    pub iterations: usize,
    pub replicas: usize,
    pub record_every: usize,
    pub output: Option<PathBuf>,
    pub target: TargetSpec,
    pub sampler: SamplerSpec,
    pub schedule: ScheduleSpec,
    pub diagnostics: Vec<DiagnosticSpec>,
}

impl ExperimentSpec {
    /// Gaussian, MALA, fixed step size, no diagnostics.
    pub fn gaussian(name: &str, d: usize, eta: f64, iterations: usize, replicas: usize, seed: u64) -> Self {
        Self {
            name: name.into(),
            seed,
            iterations,
            replicas,
            record_every: 1,
            output: None,
            target: TargetSpec::Gaussian { d, precision: vec![1.0; d] },
            sampler: SamplerSpec { kind: SamplerKind::Mala, lazy: false, init: None, annulus: None },
            schedule: ScheduleSpec::Fixed { eta },
            diagnostics: vec![],
        }
    }

    /// Target dimension; 0 when it is only known after loading a dataset file.
    pub fn dim(&self) -> usize {
        dim_of(&self.target)
    }
}

struct Reader {
    errors: Vec<String>,
}

fn type_name(v: &Value) -> &'static str {
    v.type_str()
}

fn as_f64(v: &Value) -> Option<f64> {
    match v {
        Value::Float(f) => Some(*f),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

fn as_u64(v: &Value) -> Option<u64> {
    v.as_integer().and_then(|i| u64::try_from(i).ok())
}

/// TOML integers are signed, so seeds above `i64::MAX` travel as decimal strings.
fn as_seed(v: &Value) -> Option<u64> {
    as_u64(v).or_else(|| v.as_str().and_then(|s| s.parse().ok()))
}

fn as_usize(v: &Value) -> Option<usize> {
    v.as_integer().and_then(|i| usize::try_from(i).ok())
}

fn as_f64_vec(v: &Value) -> Option<Vec<f64>> {
    v.as_array()?.iter().map(as_f64).collect()
}

fn as_usize_vec(v: &Value) -> Option<Vec<usize>> {
    v.as_array()?.iter().map(as_usize).collect()
}

impl Reader {
    fn err(&mut self, msg: String) {
        self.errors.push(msg);
    }

    fn get<T>(&mut self, t: &Table, path: &str, key: &str, what: &str, conv: fn(&Value) -> Option<T>) -> Option<T> {
        let v = t.get(key)?;
        let out = conv(v);
        if out.is_none() {
            self.err(format!("{path}{key}: expected {what}, found {}", type_name(v)));
        }
        out
    }

    fn req<T>(&mut self, t: &Table, path: &str, key: &str, what: &str, conv: fn(&Value) -> Option<T>) -> Option<T> {
        if !t.contains_key(key) {
            self.err(format!("{path}{key}: missing required field"));
            return None;
        }
        self.get(t, path, key, what, conv)
    }

    fn positive(&mut self, path: &str, key: &str, v: Option<f64>) -> Option<f64> {
        match v {
            Some(x) if !(x > 0.0 && x.is_finite()) => {
                self.err(format!("{path}{key}: must be positive, got {x}"));
                None
            }
            other => other,
        }
    }

    fn at_least_one(&mut self, path: &str, key: &str, v: Option<usize>) -> Option<usize> {
        match v {
            Some(0) => {
                self.err(format!("{path}{key}: must be at least 1"));
                None
            }
            other => other,
        }
    }

    fn unknown_keys(&mut self, t: &Table, path: &str, allowed: &[&str]) {
        for k in t.keys() {
            if !allowed.contains(&k.as_str()) {
                self.err(format!("{path}{k}: unknown field"));
            }
        }
    }

    fn table<'a>(&mut self, t: &'a Table, key: &str) -> Option<&'a Table> {
        match t.get(key) {
            None => {
                self.err(format!("{key}: missing required section"));
                None
            }
            Some(Value::Table(s)) => Some(s),
            Some(v) => {
                self.err(format!("{key}: expected a section, found {}", type_name(v)));
                None
            }
        }
    }

    fn data_source(&mut self, t: &Table, path: &str) -> Option<DataSource> {
        match (t.get("dataset"), t.get("generate")) {
            (Some(_), Some(_)) => {
                self.err(format!("{path}: give either dataset or generate, not both"));
                None
            }
            (Some(_), None) => {
                self.get(t, path, "dataset", "a file path", |v| v.as_str().map(PathBuf::from)).map(DataSource::File)
            }
            (None, Some(Value::Table(g))) => {
                let p = format!("{path}generate.");
                self.unknown_keys(g, &p, &["d", "r", "q0", "seed"]);
                let d = self.req(g, &p, "d", "an integer", as_usize);
                let d = self.at_least_one(&p, "d", d);
                let r = self.req(g, &p, "r", "an integer", as_usize);
                let q0 = self.req(g, &p, "q0", "a number", as_f64);
                let q0 = self.positive(&p, "q0", q0);
                let seed = self.get(g, &p, "seed", "a nonnegative integer", as_seed).unwrap_or(0);
                Some(DataSource::Generate { d: d?, r: r?, q0: q0?, seed })
            }
            (None, Some(v)) => {
                self.err(format!("{path}generate: expected a table, found {}", type_name(v)));
                None
            }
            (None, None) => {
                self.err(format!("{path}: missing dataset or generate"));
                None
            }
        }
    }

    fn target(&mut self, t: &Table) -> Option<TargetSpec> {
        let p = "target.";
        let kind = self.req(t, p, "kind", "a string", |v| v.as_str().map(str::to_string))?;
        match kind.as_str() {
            "gaussian" => {
                self.unknown_keys(t, p, &["kind", "d", "precision"]);
                let d = self.req(t, p, "d", "an integer", as_usize);
                let d = self.at_least_one(p, "d", d)?;
                let precision = self.get(t, p, "precision", "an array of numbers", as_f64_vec).unwrap_or(vec![1.0; d]);
                if precision.len() != d {
                    self.err(format!("target.precision: expected {d} entries, found {}", precision.len()));
                }
                if precision.iter().any(|l| !(*l > 0.0)) {
                    self.err("target.precision: entries must be positive".into());
                }
                Some(TargetSpec::Gaussian { d, precision })
            }
            "logistic" | "sigmoid" => {
                self.unknown_keys(t, p, &["kind", "dataset", "generate", "prior"]);
                let data = self.data_source(t, p);
                let prior = self.get(t, p, "prior", "a number", as_f64).unwrap_or(1.0);
                if !(prior >= 0.0) {
                    self.err(format!("target.prior: must be nonnegative, got {prior}"));
                }
                let data = data?;
                Some(if kind == "logistic" {
                    TargetSpec::Logistic { data, prior }
                } else {
                    TargetSpec::Sigmoid { data, prior }
                })
            }
            "zero_one" => {
                self.unknown_keys(t, p, &["kind", "d", "r", "q0", "epsilon", "c1", "data_seed"]);
                let d = self.req(t, p, "d", "an integer", as_usize);
                let d = self.at_least_one(p, "d", d);
                let r = self.req(t, p, "r", "an integer", as_usize);
                let r = self.at_least_one(p, "r", r);
                let q0 = self.req(t, p, "q0", "a number", as_f64);
                let q0 = self.positive(p, "q0", q0);
                let epsilon = self.req(t, p, "epsilon", "a number", as_f64);
                let epsilon = self.positive(p, "epsilon", epsilon);
                let c1 = self.req(t, p, "c1", "a number", as_f64);
                let c1 = self.positive(p, "c1", c1);
                let data_seed = self.get(t, p, "data_seed", "a nonnegative integer", as_seed).unwrap_or(0);
                Some(TargetSpec::ZeroOne { d: d?, r: r?, q0: q0?, epsilon: epsilon?, c1: c1?, data_seed })
            }
            other => {
                self.err(format!(
                    "target.kind: unknown target '{other}' (expected gaussian, logistic, sigmoid, zero_one)"
                ));
                None
            }
        }
    }

    fn sampler(&mut self, t: &Table) -> Option<SamplerSpec> {
        let p = "sampler.";
        self.unknown_keys(t, p, &["kind", "lazy", "init", "annulus"]);
        let kind = self.req(t, p, "kind", "a string", |v| v.as_str().map(str::to_string));
        let lazy = self.get(t, p, "lazy", "a boolean", Value::as_bool).unwrap_or(false);
        let init = self.get(t, p, "init", "an array of numbers", as_f64_vec);
        let annulus = self.get(t, p, "annulus", "an array of two numbers", as_f64_vec);
        let annulus = match annulus {
            Some(a) if a.len() == 2 && 0.0 <= a[0] && a[0] < a[1] => Some((a[0], a[1])),
            Some(_) => {
                self.err("sampler.annulus: expected [inner, outer] with 0 ≤ inner < outer".into());
                None
            }
            None => None,
        };
        let kind = match kind?.as_str() {
            "mala" => SamplerKind::Mala,
            "rwm" => SamplerKind::Rwm,
            "constrained_mala" => SamplerKind::ConstrainedMala,
            other => {
                self.err(format!("sampler.kind: unknown sampler '{other}' (expected mala, rwm, constrained_mala)"));
                return None;
            }
        };
        Some(SamplerSpec { kind, lazy, init, annulus })
    }

    fn schedule(&mut self, t: &Table) -> Option<ScheduleSpec> {
        let p = "schedule.";
        let kind = self.req(t, p, "kind", "a string", |v| v.as_str().map(str::to_string))?;
        match kind.as_str() {
            "fixed" => {
                self.unknown_keys(t, p, &["kind", "eta"]);
                let eta = self.req(t, p, "eta", "a number", as_f64);
                Some(ScheduleSpec::Fixed { eta: self.positive(p, "eta", eta)? })
            }
            "theorem1" => {
                self.unknown_keys(t, p, &["kind", "safety"]);
                let safety = self.get(t, p, "safety", "a number", as_f64).or(Some(1.0));
                Some(ScheduleSpec::Theorem1 { safety: self.positive(p, "safety", safety)? })
            }
            "sweep" => {
                self.unknown_keys(t, p, &["kind", "etas"]);
                let etas = self.req(t, p, "etas", "an array of numbers", as_f64_vec)?;
                if etas.is_empty() {
                    self.err("schedule.etas: must be non-empty".into());
                    return None;
                }
                if let Some(bad) = etas.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
                    self.err(format!("schedule.etas: every eta must be positive, got {bad}"));
                    return None;
                }
                Some(ScheduleSpec::Sweep { etas })
            }
            other => {
                self.err(format!("schedule.kind: unknown schedule '{other}' (expected fixed, theorem1, sweep)"));
                None
            }
        }
    }

    fn diagnostic(&mut self, t: &Table, i: usize) -> Option<DiagnosticSpec> {
        let p = format!("diagnostics[{i}].");
        let p = p.as_str();
        let kind = self.req(t, p, "kind", "a string", |v| v.as_str().map(str::to_string))?;
        match kind.as_str() {
            "acceptance_stats" => {
                self.unknown_keys(t, p, &["kind"]);
                Some(DiagnosticSpec::AcceptanceStats)
            }
            "tv_vs_truth" => {
                self.unknown_keys(t, p, &["kind", "lower", "upper", "bins", "burn_in"]);
                let lower = self.req(t, p, "lower", "an array of numbers", as_f64_vec);
                let upper = self.req(t, p, "upper", "an array of numbers", as_f64_vec);
                let bins = self.req(t, p, "bins", "an array of integers", as_usize_vec);
                let burn_in = self.get(t, p, "burn_in", "an integer", as_usize).unwrap_or(0);
                let (lower, upper, bins) = (lower?, upper?, bins?);
                if !(1..=2).contains(&bins.len()) || lower.len() != bins.len() || upper.len() != bins.len() {
                    self.err(format!("{p}bins: grids are 1D or 2D with matching lower/upper"));
                    return None;
                }
                Some(DiagnosticSpec::TvVsTruth { lower, upper, bins, burn_in })
            }
            "energy_scaling" => {
                self.unknown_keys(t, p, &["kind", "etas", "samples"]);
                let etas = self
                    .get(t, p, "etas", "an array of numbers", as_f64_vec)
                    .unwrap_or(vec![0.025, 0.05, 0.1, 0.2, 0.4]);
                let samples = self.get(t, p, "samples", "an integer", as_usize).or(Some(2000));
                let samples = self.at_least_one(p, "samples", samples)?;
                Some(DiagnosticSpec::EnergyScaling { etas, samples })
            }
            "regularity" => {
                self.unknown_keys(t, p, &["kind", "points", "dirs"]);
                let points = self.get(t, p, "points", "an integer", as_usize).or(Some(50));
                let dirs = self.get(t, p, "dirs", "an integer", as_usize).or(Some(20));
                let points = self.at_least_one(p, "points", points);
                let dirs = self.at_least_one(p, "dirs", dirs);
                Some(DiagnosticSpec::Regularity { points: points?, dirs: dirs? })
            }
            "minimizer" => {
                self.unknown_keys(t, p, &["kind", "draws"]);
                let draws = self.get(t, p, "draws", "an integer", as_usize).or(Some(100_000));
                Some(DiagnosticSpec::Minimizer { draws: self.at_least_one(p, "draws", draws)? })
            }
            "hitting_time" => {
                self.unknown_keys(t, p, &["kind", "angle", "center", "radius"]);
                let angle = self.get(t, p, "angle", "a number", as_f64);
                let center = self.get(t, p, "center", "an array of numbers", as_f64_vec);
                let radius = self.get(t, p, "radius", "a number", as_f64);
                if angle.is_none() && (center.is_none() || radius.is_none()) {
                    self.err(format!("{p}: give angle, or center and radius"));
                    return None;
                }
                Some(DiagnosticSpec::HittingTime { angle, center, radius })
            }
            other => {
                self.err(format!(
                    "{p}kind: unknown diagnostic '{other}' (expected acceptance_stats, tv_vs_truth, energy_scaling, regularity, minimizer, hitting_time)"
                ));
                None
            }
        }
    }
}

/// Parses and validates a spec document, collecting every validation error.
pub fn parse_spec(text: &str) -> Result<ExperimentSpec> {
    let doc: Table = text.parse().map_err(|e: toml::de::Error| Error::Validation(vec![format!("syntax: {e}")]))?;
    let mut r = Reader { errors: Vec::new() };
    r.unknown_keys(
        &doc,
        "",
        &[
            "version",
            "name",
            "seed",
            "iterations",
            "replicas",
            "record_every",
            "output",
            "target",
            "sampler",
            "schedule",
            "diagnostics",
        ],
    );
    match doc.get("version").and_then(Value::as_integer) {
        Some(SPEC_VERSION) => {}
        Some(v) => r.err(format!("version: unsupported spec version {v} (expected {SPEC_VERSION})")),
        None => r.err("version: missing required field".into()),
    }
    let name = r.req(&doc, "", "name", "a string", |v| v.as_str().map(str::to_string));
    let seed = r.get(&doc, "", "seed", "a nonnegative integer", as_seed).unwrap_or(0);
    let iterations = r.req(&doc, "", "iterations", "an integer", as_usize);
    let iterations = r.at_least_one("", "iterations", iterations);
    let replicas = r.get(&doc, "", "replicas", "an integer", as_usize).or(Some(1));
    let replicas = r.at_least_one("", "replicas", replicas);
    let record_every = r.get(&doc, "", "record_every", "an integer", as_usize).or(Some(1));
    let record_every = r.at_least_one("", "record_every", record_every);
    let output = r.get(&doc, "", "output", "a path", |v| v.as_str().map(PathBuf::from));
    let target = r.table(&doc, "target").and_then(|t| r.target(t));
    let sampler = r.table(&doc, "sampler").and_then(|t| r.sampler(t));
    let schedule = r.table(&doc, "schedule").and_then(|t| r.schedule(t));
    let mut diagnostics = Vec::new();
    match doc.get("diagnostics") {
        None => {}
        Some(Value::Array(items)) => {
            for (i, item) in items.iter().enumerate() {
                match item {
                    Value::Table(t) => diagnostics.extend(r.diagnostic(t, i)),
                    other => r.err(format!("diagnostics[{i}]: expected a table, found {}", type_name(other))),
                }
            }
        }
        Some(other) => r.err(format!("diagnostics: expected an array of tables, found {}", type_name(other))),
    }

    if let (Some(t), Some(s)) = (&target, &sampler) {
        if let (Some(init), d) = (&s.init, dim_of(t)) {
            if d != 0 && init.len() != d {
                r.err(format!("sampler.init: expected {d} entries, found {}", init.len()));
            }
        }
        if s.kind == SamplerKind::ConstrainedMala && s.annulus.is_none() && !matches!(t, TargetSpec::ZeroOne { .. }) {
            r.err("sampler.annulus: constrained_mala needs an annulus unless the target is zero_one".into());
        }
    }
    if !r.errors.is_empty() {
        return Err(Error::Validation(r.errors));
    }
    Ok(ExperimentSpec {
        name: name.unwrap_or_default(),
        seed,
        iterations: iterations.unwrap_or(1),
        replicas: replicas.unwrap_or(1),
        record_every: record_every.unwrap_or(1),
        output,
        target: target.expect("validated"),
        sampler: sampler.expect("validated"),
        schedule: schedule.expect("validated"),
        diagnostics,
    })
}

fn dim_of(t: &TargetSpec) -> usize {
    match t {
        TargetSpec::Gaussian { d, .. } | TargetSpec::ZeroOne { d, .. } => *d,
        TargetSpec::Logistic { data, .. } | TargetSpec::Sigmoid { data, .. } => match data {
            DataSource::Generate { d, .. } => *d,
            DataSource::File(_) => 0,
        },
    }
}

/// Reads a spec file; relative dataset paths resolve against the file's directory and must exist.
pub fn load_spec(path: &Path) -> Result<ExperimentSpec> {
    let text = std::fs::read_to_string(path)?;
    let mut spec = parse_spec(&text)?;
    let base = path.parent().unwrap_or(Path::new("."));
    if let TargetSpec::Logistic { data: DataSource::File(f), .. }
    | TargetSpec::Sigmoid { data: DataSource::File(f), .. } = &mut spec.target
    {
        if f.is_relative() {
            *f = base.join(&*f);
        }
        if !f.exists() {
            return Err(Error::Validation(vec![format!("target.dataset: file {} does not exist", f.display())]));
        }
    }
    Ok(spec)
}

fn floats(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|x| Value::Float(*x)).collect())
}

fn ints(v: &[usize]) -> Value {
    Value::Array(v.iter().map(|x| Value::Integer(*x as i64)).collect())
}

fn int(x: u64) -> Value {
    Value::Integer(x as i64)
}

fn seed_value(x: u64) -> Value {
    i64::try_from(x).map_or_else(|_| Value::String(x.to_string()), Value::Integer)
}

/// Inverse of [`parse_spec`].
pub fn serialize_spec(spec: &ExperimentSpec) -> String {
    let mut doc = Table::new();
    doc.insert("version".into(), Value::Integer(SPEC_VERSION));
    doc.insert("name".into(), Value::String(spec.name.clone()));
    doc.insert("seed".into(), seed_value(spec.seed));
    doc.insert("iterations".into(), int(spec.iterations as u64));
    doc.insert("replicas".into(), int(spec.replicas as u64));
    doc.insert("record_every".into(), int(spec.record_every as u64));
    if let Some(o) = &spec.output {
        doc.insert("output".into(), Value::String(o.display().to_string()));
    }

    let mut t = Table::new();
    t.insert("kind".into(), Value::String(spec.target.kind().into()));
    match &spec.target {
        TargetSpec::Gaussian { d, precision } => {
            t.insert("d".into(), int(*d as u64));
            t.insert("precision".into(), floats(precision));
        }
        TargetSpec::Logistic { data, prior } | TargetSpec::Sigmoid { data, prior } => {
            match data {
                DataSource::File(f) => {
                    t.insert("dataset".into(), Value::String(f.display().to_string()));
                }
                DataSource::Generate { d, r, q0, seed } => {
                    let mut g = Table::new();
                    g.insert("d".into(), int(*d as u64));
                    g.insert("r".into(), int(*r as u64));
                    g.insert("q0".into(), Value::Float(*q0));
                    g.insert("seed".into(), seed_value(*seed));
                    t.insert("generate".into(), Value::Table(g));
                }
            }
            t.insert("prior".into(), Value::Float(*prior));
        }
        TargetSpec::ZeroOne { d, r, q0, epsilon, c1, data_seed } => {
            t.insert("d".into(), int(*d as u64));
            t.insert("r".into(), int(*r as u64));
            t.insert("q0".into(), Value::Float(*q0));
            t.insert("epsilon".into(), Value::Float(*epsilon));
            t.insert("c1".into(), Value::Float(*c1));
            t.insert("data_seed".into(), seed_value(*data_seed));
        }
    }
    doc.insert("target".into(), Value::Table(t));

    let mut s = Table::new();
    let kind = match spec.sampler.kind {
        SamplerKind::Mala => "mala",
        SamplerKind::Rwm => "rwm",
        SamplerKind::ConstrainedMala => "constrained_mala",
    };
    s.insert("kind".into(), Value::String(kind.into()));
    s.insert("lazy".into(), Value::Boolean(spec.sampler.lazy));
    if let Some(init) = &spec.sampler.init {
        s.insert("init".into(), floats(init));
    }
    if let Some((a, b)) = spec.sampler.annulus {
        s.insert("annulus".into(), floats(&[a, b]));
    }
    doc.insert("sampler".into(), Value::Table(s));

    let mut sc = Table::new();
    match &spec.schedule {
        ScheduleSpec::Fixed { eta } => {
            sc.insert("kind".into(), Value::String("fixed".into()));
            sc.insert("eta".into(), Value::Float(*eta));
        }
        ScheduleSpec::Theorem1 { safety } => {
            sc.insert("kind".into(), Value::String("theorem1".into()));
            sc.insert("safety".into(), Value::Float(*safety));
        }
        ScheduleSpec::Sweep { etas } => {
            sc.insert("kind".into(), Value::String("sweep".into()));
            sc.insert("etas".into(), floats(etas));
        }
    }
    doc.insert("schedule".into(), Value::Table(sc));

    let diags = spec
        .diagnostics
        .iter()
        .map(|d| {
            let mut t = Table::new();
            t.insert("kind".into(), Value::String(d.name().into()));
            match d {
                DiagnosticSpec::AcceptanceStats => {}
                DiagnosticSpec::TvVsTruth { lower, upper, bins, burn_in } => {
                    t.insert("lower".into(), floats(lower));
                    t.insert("upper".into(), floats(upper));
                    t.insert("bins".into(), ints(bins));
                    t.insert("burn_in".into(), int(*burn_in as u64));
                }
                DiagnosticSpec::EnergyScaling { etas, samples } => {
                    t.insert("etas".into(), floats(etas));
                    t.insert("samples".into(), int(*samples as u64));
                }
                DiagnosticSpec::Regularity { points, dirs } => {
                    t.insert("points".into(), int(*points as u64));
                    t.insert("dirs".into(), int(*dirs as u64));
                }
                DiagnosticSpec::Minimizer { draws } => {
                    t.insert("draws".into(), int(*draws as u64));
                }
                DiagnosticSpec::HittingTime { angle, center, radius } => {
                    if let Some(a) = angle {
                        t.insert("angle".into(), Value::Float(*a));
                    }
                    if let Some(c) = center {
                        t.insert("center".into(), floats(c));
                    }
                    if let Some(r) = radius {
                        t.insert("radius".into(), Value::Float(*r));
                    }
                }
            }
            Value::Table(t)
        })
        .collect();
    doc.insert("diagnostics".into(), Value::Array(diags));
    toml::to_string(&doc).expect("spec tables always serialize")
}
