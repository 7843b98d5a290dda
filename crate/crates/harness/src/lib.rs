//! Benchmark harness around `uc-core`: solve, compare, enumerate and check
//! unit-commitment instances, writing plot-ready CSV/JSON.
//!
//! Every command returns a [`Status`]; callers map it to the process exit
//! code (0 feasible, 2 infeasible). Errors map to exit code 1.

pub mod output;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use uc_core::baselines::{ga_run, pso_run, GaParams, PsoParams};
use uc_core::fitness::{EvaluatedSchedule, RunOutcome, StopReason, TracePoint};
use uc_core::gamom::{self, GamomParams};
use uc_core::model::{
    validate_instance, CommitmentMatrix, CostBreakdown, UCInstance, ViolationReport,
};
use uc_core::oracle::enumerate_optimal;
use uc_core::{dispatch::dispatch_schedule, model::evaluate};

use output::{write_atomic, RunRecord, SummaryRow};

/// Environment variable consulted for the output directory when `--out` is
/// not given.
pub const OUT_DIR_ENV: &str = "UC_OUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Feasible,
    Infeasible,
}

impl Status {
    pub fn from_feasible(feasible: bool) -> Self {
        if feasible {
            Status::Feasible
        } else {
            Status::Infeasible
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Status::Feasible => 0,
            Status::Infeasible => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Gamom,
    Ga,
    Pso,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Gamom, Algorithm::Ga, Algorithm::Pso];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Gamom => "gamom",
            Algorithm::Ga => "ga",
            Algorithm::Pso => "pso",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gamom" => Ok(Algorithm::Gamom),
            "ga" => Ok(Algorithm::Ga),
            "pso" => Ok(Algorithm::Pso),
            other => bail!("unknown algorithm {other:?} (expected gamom, ga or pso)"),
        }
    }
}

/// Parameters for all three optimizers.
///
/// A parameter file is either this sectioned form
/// (`{"gamom": {...}, "ga": {...}, "pso": {...}}`, any section optional) or
/// the bare parameter object of the algorithm being run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverParams {
    pub gamom: GamomParams,
    pub ga: GaParams,
    pub pso: PsoParams,
}

impl SolverParams {
    pub fn load(path: &Path, algo: Option<Algorithm>) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading parameter file {}", path.display()))?;
        if let Ok(p) = serde_json::from_str::<SolverParams>(&text) {
            return Ok(p);
        }
        let mut p = SolverParams::default();
        let bare = || format!("parsing parameter file {}", path.display());
        match algo {
            Some(Algorithm::Gamom) => p.gamom = serde_json::from_str(&text).with_context(bare)?,
            Some(Algorithm::Ga) => p.ga = serde_json::from_str(&text).with_context(bare)?,
            Some(Algorithm::Pso) => p.pso = serde_json::from_str(&text).with_context(bare)?,
            None => {
                serde_json::from_str::<SolverParams>(&text).with_context(bare)?;
            }
        }
        Ok(p)
    }

    /// Overrides the seed and, when given, the evaluation budget. A budget
    /// lifts the generation cap so runs end on budget or stagnation.
    pub fn with_run(&self, seed: Option<u64>, budget: Option<u64>) -> Self {
        let mut p = self.clone();
        if let Some(seed) = seed {
            p.gamom.seed = seed;
            p.ga.seed = seed;
            p.pso.seed = seed;
        }
        if let Some(budget) = budget {
            p.gamom.max_evaluations = Some(budget);
            p.gamom.max_generations = u32::MAX;
            p.ga.max_evaluations = Some(budget);
            p.ga.max_generations = u32::MAX;
            p.pso.max_evaluations = Some(budget);
            p.pso.max_iterations = u32::MAX;
        }
        p
    }

    pub fn solve(&self, instance: &UCInstance, algo: Algorithm) -> Result<RunOutcome> {
        let out = match algo {
            Algorithm::Gamom => gamom::run(instance, &self.gamom),
            Algorithm::Ga => ga_run(instance, &self.ga),
            Algorithm::Pso => pso_run(instance, &self.pso),
        };
        out.with_context(|| format!("invalid {algo} parameters"))
    }
}

/// Loads an instance and rejects it if validation reports errors.
pub fn load_instance(path: &Path) -> Result<UCInstance> {
    let instance =
        UCInstance::load(path).with_context(|| format!("loading instance {}", path.display()))?;
    let diags = validate_instance(&instance);
    for d in diags.iter().filter(|d| !d.is_error()) {
        log::warn!("{}: {d}", path.display());
    }
    let errors: Vec<String> = diags
        .iter()
        .filter(|d| d.is_error())
        .map(|d| d.to_string())
        .collect();
    if !errors.is_empty() {
        bail!(
            "{}: invalid instance:\n  {}",
            path.display(),
            errors.join("\n  ")
        );
    }
    Ok(instance)
}

/// Resolves the output directory: explicit flag, then [`OUT_DIR_ENV`], then
/// `./out`.
pub fn resolve_out_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))
}

/// Metadata written next to a solution as `run.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunInfo {
    pub algorithm: String,
    pub instance: PathBuf,
    pub seed: Option<u64>,
    pub evaluations: u64,
    pub generations: u32,
    pub stop: Option<StopReason>,
    pub wall_time: f64,
    pub feasible: bool,
    pub fitness: f64,
}

fn write_solution(
    dir: &Path,
    instance: &UCInstance,
    best: &EvaluatedSchedule,
    trace: &[TracePoint],
    info: &RunInfo,
) -> Result<()> {
    ensure_dir(dir)?;
    write_atomic(
        &dir.join("schedule.csv"),
        &output::schedule_csv(instance, &best.commitment)?,
    )?;
    write_atomic(
        &dir.join("dispatch.csv"),
        &output::dispatch_csv(instance, &best.dispatch)?,
    )?;
    write_atomic(
        &dir.join("cost.json"),
        &output::cost_json(&best.cost, best.is_feasible())?,
    )?;
    write_atomic(&dir.join("trace.csv"), &output::trace_csv(trace)?)?;
    let mut meta = serde_json::to_vec_pretty(info)?;
    meta.push(b'\n');
    write_atomic(&dir.join("run.json"), &meta)?;
    Ok(())
}

pub struct RunArgs {
    pub instance: PathBuf,
    pub algo: Algorithm,
    pub params: Option<PathBuf>,
    pub seed: Option<u64>,
    pub budget: Option<u64>,
    pub out_dir: PathBuf,
}

pub fn cmd_run(args: &RunArgs) -> Result<Status> {
    let instance = load_instance(&args.instance)?;
    let params = match &args.params {
        Some(p) => SolverParams::load(p, Some(args.algo))?,
        None => SolverParams::default(),
    }
    .with_run(args.seed, args.budget);

    let started = Instant::now();
    let out = params.solve(&instance, args.algo)?;
    let wall_time = started.elapsed().as_secs_f64();
    let info = RunInfo {
        algorithm: args.algo.name().into(),
        instance: args.instance.clone(),
        seed: Some(match args.algo {
            Algorithm::Gamom => params.gamom.seed,
            Algorithm::Ga => params.ga.seed,
            Algorithm::Pso => params.pso.seed,
        }),
        evaluations: out.evaluations,
        generations: out.generations,
        stop: Some(out.stop),
        wall_time,
        feasible: out.best.is_feasible(),
        fitness: out.best.fitness,
    };
    write_solution(&args.out_dir, &instance, &out.best, &out.trace, &info)?;
    log::info!(
        "{}: cost {:.2}, feasible {}, {} evaluations, stopped on {:?}",
        args.algo,
        out.best.fitness,
        out.best.is_feasible(),
        out.evaluations,
        out.stop
    );
    Ok(Status::from_feasible(out.best.is_feasible()))
}

pub fn cmd_oracle(instance_path: &Path, out_dir: &Path) -> Result<Status> {
    let instance = load_instance(instance_path)?;
    let started = Instant::now();
    let result = enumerate_optimal(&instance)?;
    let wall_time = started.elapsed().as_secs_f64();
    if result.infeasible_only {
        log::warn!("no commitment is feasible; reporting the least-penalty schedule");
    }
    let trace = [TracePoint {
        generation: 0,
        evaluations: result.evaluated,
        best_fitness: result.best.fitness,
    }];
    let info = RunInfo {
        algorithm: "oracle".into(),
        instance: instance_path.to_path_buf(),
        seed: None,
        evaluations: result.evaluated,
        generations: 0,
        stop: None,
        wall_time,
        feasible: result.best.is_feasible(),
        fitness: result.best.fitness,
    };
    write_solution(out_dir, &instance, &result.best, &trace, &info)?;
    Ok(Status::from_feasible(result.best.is_feasible()))
}

/// What `check` found for a given commitment.
#[derive(Debug, Clone)]
pub struct CheckResult {
    pub cost: CostBreakdown,
    pub report: ViolationReport,
}

impl CheckResult {
    pub fn feasible(&self) -> bool {
        self.report.is_feasible()
    }
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use uc_core::model::ConstraintKind;
        writeln!(f, "fuel      {:>16.2}", self.cost.fuel)?;
        writeln!(f, "startup   {:>16.2}", self.cost.startup)?;
        writeln!(f, "shutdown  {:>16.2}", self.cost.shutdown)?;
        writeln!(f, "penalty   {:>16.2}", self.cost.penalty)?;
        writeln!(f, "total     {:>16.2}", self.cost.total)?;
        if self.feasible() {
            return writeln!(f, "feasible: no constraint violations");
        }
        writeln!(f, "infeasible: {} violations", self.report.count())?;
        for kind in ConstraintKind::ALL {
            for v in self.report.list(kind) {
                let unit = v
                    .unit
                    .map_or_else(|| "-".to_string(), |u| (u + 1).to_string());
                writeln!(
                    f,
                    "  {:<12} unit {:>3}  hour {:>3}  magnitude {:.6}",
                    kind.name(),
                    unit,
                    v.hour + 1,
                    v.magnitude
                )?;
            }
        }
        Ok(())
    }
}

pub fn check_schedule(instance: &UCInstance, commitment: &CommitmentMatrix) -> Result<CheckResult> {
    let dispatch = dispatch_schedule(instance, commitment)?;
    let (cost, report) = evaluate(instance, commitment, &dispatch)?;
    Ok(CheckResult { cost, report })
}

/// Dispatches and checks a schedule file; writes `cost.json` to `out_dir`
/// when one is given.
pub fn cmd_check(
    instance_path: &Path,
    schedule_path: &Path,
    out_dir: Option<&Path>,
) -> Result<(Status, CheckResult)> {
    let instance = load_instance(instance_path)?;
    let commitment = output::read_schedule(&instance, schedule_path)?;
    let result = check_schedule(&instance, &commitment)?;
    if let Some(dir) = out_dir {
        ensure_dir(dir)?;
        write_atomic(
            &dir.join("cost.json"),
            &output::cost_json(&result.cost, result.feasible())?,
        )?;
    }
    Ok((Status::from_feasible(result.feasible()), result))
}

/// Prints validation diagnostics; errors make the command fail.
pub fn cmd_validate(instance_path: &Path) -> Result<Vec<String>> {
    let instance = UCInstance::load(instance_path)
        .with_context(|| format!("loading instance {}", instance_path.display()))?;
    let diags = validate_instance(&instance);
    let lines: Vec<String> = diags.iter().map(|d| d.to_string()).collect();
    if diags.iter().any(|d| d.is_error()) {
        bail!(
            "{}: invalid instance:\n  {}",
            instance_path.display(),
            lines.join("\n  ")
        );
    }
    Ok(lines)
}

pub struct CompareArgs {
    pub instance: PathBuf,
    pub algos: Vec<Algorithm>,
    pub seeds: u64,
    pub budget: u64,
    pub params: Option<PathBuf>,
    pub with_oracle: bool,
    pub out_dir: PathBuf,
}

/// Everything `compare` produced, as written to disk.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub records: Vec<RunRecord>,
    pub summary: Vec<SummaryRow>,
    pub oracle: Option<f64>,
}

/// Runs every algorithm on seeds `1..=seeds` with the same evaluation budget.
///
/// Writes `runs.csv`, `summary.csv` and `traces/<algo>_seed<k>.csv`. With
/// `with_oracle` the instance is also enumerated, an `oracle` summary row is
/// added, and any algorithm beating it is reported as an error.
pub fn cmd_compare(args: &CompareArgs) -> Result<(Status, Comparison)> {
    if args.seeds == 0 {
        bail!("--seeds must be at least 1");
    }
    if args.algos.is_empty() {
        bail!("no algorithms selected");
    }
    let instance = load_instance(&args.instance)?;
    let base = match &args.params {
        Some(p) => SolverParams::load(p, None)?,
        None => SolverParams::default(),
    };
    let traces = args.out_dir.join("traces");
    ensure_dir(&traces)?;

    let cells: Vec<(Algorithm, u64)> = args
        .algos
        .iter()
        .flat_map(|&a| (1..=args.seeds).map(move |s| (a, s)))
        .collect();
    let records: Vec<RunRecord> = cells
        .par_iter()
        .map(|&(algo, seed)| -> Result<RunRecord> {
            let params = base.with_run(Some(seed), Some(args.budget));
            let started = Instant::now();
            let out = params.solve(&instance, algo)?;
            let wall_time = started.elapsed().as_secs_f64();
            let trace_path = traces.join(format!("{algo}_seed{seed}.csv"));
            write_atomic(&trace_path, &output::trace_csv(&out.trace)?)?;
            log::info!(
                "{algo} seed {seed}: {:.2} after {} evaluations",
                out.best.fitness,
                out.evaluations
            );
            Ok(RunRecord {
                algorithm: algo.name().into(),
                seed,
                // Rounded as written so the summary is reproducible from runs.csv.
                best_cost: output::fixed(out.best.fitness).parse()?,
                feasible: out.best.is_feasible(),
                evaluations_used: out.evaluations,
                wall_time,
                trace_path,
            })
        })
        .collect::<Result<_>>()?;

    let mut summary: Vec<SummaryRow> = args
        .algos
        .iter()
        .map(|a| {
            let mine: Vec<&RunRecord> =
                records.iter().filter(|r| r.algorithm == a.name()).collect();
            SummaryRow::from_records(a.name(), &mine)
        })
        .collect();

    let mut oracle = None;
    if args.with_oracle {
        let result = enumerate_optimal(&instance)?;
        let best: f64 = output::fixed(result.best.fitness).parse()?;
        summary.push(SummaryRow {
            algorithm: "oracle".into(),
            runs: 1,
            best,
            worst: best,
            median: best,
            mean: best,
            feasible_rate: if result.best.is_feasible() { 1.0 } else { 0.0 },
        });
        oracle = Some(result.best.fitness);
    }

    write_atomic(&args.out_dir.join("runs.csv"), &output::runs_csv(&records)?)?;
    write_atomic(
        &args.out_dir.join("summary.csv"),
        &output::summary_csv(&summary)?,
    )?;

    if let Some(o) = oracle {
        if let Some(r) = records
            .iter()
            .find(|r| r.best_cost < o - 1e-6 * o.abs().max(1.0))
        {
            bail!(
                "{} seed {} reports {:.6}, below the enumerated optimum {o:.6}",
                r.algorithm,
                r.seed,
                r.best_cost
            );
        }
    }
    let all_feasible = records.iter().all(|r| r.feasible);
    Ok((
        Status::from_feasible(all_feasible),
        Comparison {
            records,
            summary,
            oracle,
        },
    ))
}
