//! On-disk formats. Every CSV has a header row; reals are written in fixed
//! notation with six decimals.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use uc_core::fitness::TracePoint;
use uc_core::model::{CommitmentMatrix, CostBreakdown, DispatchMatrix, UCInstance};

/// Writes through a temporary sibling and renames, so readers never see a
/// half-written file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("")
    ));
    {
        let mut f =
            fs::File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn csv_bytes(header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    Ok(w.into_inner().map_err(|e| e.into_error())?)
}

pub fn fixed(x: f64) -> String {
    // Avoid printing "-0.000000".
    let s = format!("{x:.6}");
    if s.trim_start_matches('-')
        .chars()
        .all(|c| c == '0' || c == '.')
    {
        "0.000000".to_string()
    } else {
        s
    }
}

fn unit_header(instance: &UCInstance) -> Vec<String> {
    std::iter::once("hour".to_string())
        .chain(instance.units.iter().map(|u| u.id.clone()))
        .collect()
}

/// `hour,<unit ids>` with one 0/1 row per hour (hours are 1-based).
pub fn schedule_csv(instance: &UCInstance, c: &CommitmentMatrix) -> Result<Vec<u8>> {
    let rows = (0..c.n_hours()).map(|t| {
        std::iter::once((t + 1).to_string())
            .chain((0..c.n_units()).map(|i| u8::from(c.get(i, t)).to_string()))
            .collect()
    });
    csv_bytes(&unit_header(instance), rows)
}

pub fn read_schedule(instance: &UCInstance, path: &Path) -> Result<CommitmentMatrix> {
    let mut r = csv::Reader::from_path(path)
        .with_context(|| format!("reading schedule {}", path.display()))?;
    let header: Vec<String> = r.headers()?.iter().map(|s| s.trim().to_string()).collect();
    let expected = unit_header(instance);
    if header.len() != expected.len() {
        bail!(
            "{}: {} unit columns, instance has {} units",
            path.display(),
            header.len().saturating_sub(1),
            instance.n_units()
        );
    }
    if header[1..] != expected[1..] {
        bail!(
            "{}: unit columns {:?} do not match instance units {:?}",
            path.display(),
            &header[1..],
            &expected[1..]
        );
    }
    let mut rows = vec![Vec::new(); instance.n_units()];
    for (line, record) in r.records().enumerate() {
        let record = record?;
        for (i, cell) in record.iter().skip(1).enumerate() {
            let bit = match cell.trim() {
                "0" => 0u8,
                "1" => 1u8,
                other => bail!(
                    "{}: row {}: cell {other:?} is not 0 or 1",
                    path.display(),
                    line + 1
                ),
            };
            rows[i].push(bit);
        }
    }
    let hours = rows.first().map_or(0, Vec::len);
    if hours != instance.n_hours() {
        bail!(
            "{}: {hours} hours, instance has {}",
            path.display(),
            instance.n_hours()
        );
    }
    Ok(CommitmentMatrix::from_rows(&rows))
}

pub fn dispatch_csv(instance: &UCInstance, d: &DispatchMatrix) -> Result<Vec<u8>> {
    let rows = (0..d.n_hours()).map(|t| {
        std::iter::once((t + 1).to_string())
            .chain(d.power.iter().map(|row| fixed(row[t])))
            .collect()
    });
    csv_bytes(&unit_header(instance), rows)
}

pub fn trace_csv(trace: &[TracePoint]) -> Result<Vec<u8>> {
    let header = ["generation", "evaluations", "best_cost"].map(String::from);
    let rows = trace.iter().map(|p| {
        vec![
            p.generation.to_string(),
            p.evaluations.to_string(),
            fixed(p.best_fitness),
        ]
    });
    csv_bytes(&header, rows)
}

pub fn read_trace(path: &Path) -> Result<Vec<TracePoint>> {
    let mut r = csv::Reader::from_path(path)
        .with_context(|| format!("reading trace {}", path.display()))?;
    let mut out = Vec::new();
    for record in r.records() {
        let record = record?;
        out.push(TracePoint {
            generation: record[0].parse()?,
            evaluations: record[1].parse()?,
            best_fitness: record[2].parse()?,
        });
    }
    Ok(out)
}

/// Contents of `cost.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostFile {
    #[serde(flatten)]
    pub cost: CostBreakdown,
    pub feasible: bool,
}

pub fn cost_json(cost: &CostBreakdown, feasible: bool) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(&CostFile {
        cost: *cost,
        feasible,
    })?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// One row of `runs.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub algorithm: String,
    pub seed: u64,
    pub best_cost: f64,
    pub feasible: bool,
    pub evaluations_used: u64,
    pub wall_time: f64,
    pub trace_path: PathBuf,
}

pub const RUNS_HEADER: [&str; 7] = [
    "algorithm",
    "seed",
    "best_cost",
    "feasible",
    "evaluations_used",
    "wall_time",
    "trace_path",
];

pub fn runs_csv(records: &[RunRecord]) -> Result<Vec<u8>> {
    let rows = records.iter().map(|r| {
        vec![
            r.algorithm.clone(),
            r.seed.to_string(),
            fixed(r.best_cost),
            r.feasible.to_string(),
            r.evaluations_used.to_string(),
            fixed(r.wall_time),
            r.trace_path.display().to_string(),
        ]
    });
    csv_bytes(&RUNS_HEADER.map(String::from), rows)
}

pub fn read_runs(path: &Path) -> Result<Vec<RunRecord>> {
    let mut r =
        csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    r.deserialize()
        .map(|row| row.map_err(anyhow::Error::from))
        .collect()
}

/// One row of `summary.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub algorithm: String,
    pub runs: usize,
    pub best: f64,
    pub worst: f64,
    pub median: f64,
    pub mean: f64,
    pub feasible_rate: f64,
}

impl SummaryRow {
    /// Order statistics over the best costs of `records`.
    pub fn from_records(algorithm: &str, records: &[&RunRecord]) -> Self {
        let mut costs: Vec<f64> = records.iter().map(|r| r.best_cost).collect();
        costs.sort_by(f64::total_cmp);
        let n = costs.len();
        let median = if n % 2 == 1 {
            costs[n / 2]
        } else {
            (costs[n / 2 - 1] + costs[n / 2]) / 2.0
        };
        Self {
            algorithm: algorithm.to_string(),
            runs: n,
            best: costs[0],
            worst: costs[n - 1],
            median,
            mean: costs.iter().sum::<f64>() / n as f64,
            feasible_rate: records.iter().filter(|r| r.feasible).count() as f64 / n as f64,
        }
    }
}

pub fn summary_csv(rows: &[SummaryRow]) -> Result<Vec<u8>> {
    let header = [
        "algorithm",
        "runs",
        "best",
        "worst",
        "median",
        "mean",
        "feasible_rate",
    ]
    .map(String::from);
    let rows = rows.iter().map(|r| {
        vec![
            r.algorithm.clone(),
            r.runs.to_string(),
            fixed(r.best),
            fixed(r.worst),
            fixed(r.median),
            fixed(r.mean),
            fixed(r.feasible_rate),
        ]
    });
    csv_bytes(&header, rows)
}

pub fn read_summary(path: &Path) -> Result<Vec<SummaryRow>> {
    let mut r =
        csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    r.deserialize()
        .map(|row| row.map_err(anyhow::Error::from))
        .collect()
}
