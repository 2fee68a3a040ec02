use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::chain::{ChainTrace, StepRecord};
use crate::error::{invalid, Result};

/// JSON metadata written next to a trace CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub sampler: String,
    pub target: String,
    pub step_size: f64,
    pub iterations: usize,
    pub seed: u64,
    pub stream: u64,
    pub lazy: bool,
    pub constraint: Option<String>,
    pub record_every: usize,
    pub gradient_evals: u64,
    pub function_evals: u64,
    pub argmin_index: usize,
    pub best_potential: f64,
    pub wall_time_secs: Option<f64>,
}

impl TraceMeta {
    pub fn from_trace(trace: &ChainTrace, wall_time_secs: Option<f64>) -> Self {
        let c = &trace.config;
        Self {
            sampler: trace.kind.name().into(),
            target: trace.target_label.clone(),
            step_size: c.step_size,
            iterations: c.iterations,
            seed: c.seed,
            stream: c.stream,
            lazy: c.lazy,
            constraint: c.constraint.as_ref().map(|s| s.description().to_string()),
            record_every: c.record_every,
            gradient_evals: trace.gradient_evals,
            function_evals: trace.function_evals,
            argmin_index: trace.argmin_index,
            best_potential: trace.best_potential,
            wall_time_secs,
        }
    }
}

/// Writes `i,accepted,energy_error,log_accept,potential,x_0..x_{d-1}` rows to
/// `csv_path` and the metadata to the same stem with a `.json` extension.
pub fn write_trace(trace: &ChainTrace, csv_path: &Path, wall_time_secs: Option<f64>) -> Result<()> {
    let d = trace.records.first().map_or(0, |r| r.state.len());
    let mut w = csv::Writer::from_path(csv_path)?;
    let mut header: Vec<String> =
        ["i", "accepted", "energy_error", "log_accept", "potential"].iter().map(|s| s.to_string()).collect();
    header.extend((0..d).map(|j| format!("x_{j}")));
    w.write_record(&header)?;
    for r in &trace.records {
        let mut row = vec![
            r.index.to_string(),
            u8::from(r.accepted).to_string(),
            format!("{:?}", r.energy_error),
            format!("{:?}", r.log_accept_prob),
            format!("{:?}", r.potential),
        ];
        row.extend(r.state.iter().map(|x| format!("{x:?}")));
        w.write_record(&row)?;
    }
    w.flush()?;
    let meta = TraceMeta::from_trace(trace, wall_time_secs);
    let mut f = File::create(csv_path.with_extension("json"))?;
    f.write_all(serde_json::to_string_pretty(&meta)?.as_bytes())?;
    f.write_all(b"\n")?;
    Ok(())
}

/// Reads a trace CSV back into records. Lazy steps and proposals are not
/// stored in the file: `proposed` is set to the state and `lazy` to false.
pub fn read_trace_csv(path: &Path) -> Result<Vec<StepRecord>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let headers = rdr.headers()?.clone();
    let expected = ["i", "accepted", "energy_error", "log_accept", "potential"];
    if headers.len() < expected.len() || headers.iter().zip(expected).any(|(h, e)| h != e) {
        return Err(invalid(format!("{}: not a trace csv", path.display())));
    }
    let num = |s: &str| s.trim().parse::<f64>().map_err(|e| invalid(format!("bad number {s:?}: {e}")));
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let index = rec[0].trim().parse::<usize>().map_err(|e| invalid(format!("bad index: {e}")))?;
        let state = rec.iter().skip(5).map(num).collect::<Result<Vec<_>>>()?;
        out.push(StepRecord {
            index,
            proposed: state.clone(),
            state,
            accepted: &rec[1] == "1",
            energy_error: num(&rec[2])?,
            log_accept_prob: num(&rec[3])?,
            potential: num(&rec[4])?,
            lazy: false,
            in_constraint: None,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samplers::{run_mala, ChainConfig};
    use crate::targets::Gaussian;

    #[test]
    fn trace_csv_round_trip() {
        let g = Gaussian::standard(2);
        let t = run_mala(&g, &ChainConfig::new(0.7, 50, 3), &[0.1, 0.2]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("trace.csv");
        write_trace(&t, &p, Some(0.5)).unwrap();
        let back = read_trace_csv(&p).unwrap();
        assert_eq!(back.len(), t.records.len());
        for (a, b) in back.iter().zip(&t.records) {
            assert_eq!(a.state, b.state);
            assert_eq!(a.energy_error, b.energy_error);
            assert_eq!(a.accepted, b.accepted);
        }
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("i,accepted,energy_error,log_accept,potential,x_0,x_1\n"));
        let meta: TraceMeta =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("trace.json")).unwrap()).unwrap();
        assert_eq!(meta.gradient_evals, 100);
    }
}
