use std::fs::{self, File};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::compare::{ComparisonReport, ComparisonSummary};
use super::runlog::RunLog;
use crate::error::{Error, Result};
use crate::optimizers::{AlgorithmKind, EvaluatedIndividual};

/// One line of `convergence_<alg>_<run>.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub generation: u64,
    pub avg_fitness: f64,
    pub best_fitness: f64,
    pub mean_pairwise_distance: f64,
    pub duplicate_count: usize,
    pub design_evals: u64,
    pub sim_runs: u64,
    pub partial: bool,
}

/// One line of a history or final-population CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct IndividualRow {
    pub algorithm: AlgorithmKind,
    pub generation: u64,
    pub index: usize,
    pub genome: Vec<f64>,
    pub fitness: f64,
}

pub fn convergence_path(dir: &Path, algorithm: AlgorithmKind, run: usize) -> PathBuf {
    dir.join(format!("convergence_{algorithm}_{run}.csv"))
}

pub fn history_path(dir: &Path, algorithm: AlgorithmKind, run: usize) -> PathBuf {
    dir.join(format!("history_{algorithm}_{run}.csv"))
}

pub fn final_population_path(dir: &Path, algorithm: AlgorithmKind, run: usize) -> PathBuf {
    dir.join(format!("final_population_{algorithm}_{run}.csv"))
}

/// `Debug` formatting of `f64` is the shortest text that parses back to
/// the same bits.
fn num(x: f64) -> String {
    format!("{x:?}")
}

fn writer(path: &Path) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn write_individuals(path: &Path, log: &RunLog, rows: &[EvaluatedIndividual]) -> Result<()> {
    let mut w = writer(path)?;
    let mut header = vec!["algorithm".to_string(), "generation".into(), "index".into()];
    header.extend(log.space.dimensions().iter().map(|d| d.name.clone()));
    header.push("fitness".into());
    w.write_record(&header)?;
    for e in rows {
        let mut rec = vec![log.algorithm.to_string(), e.generation.to_string(), e.index.to_string()];
        rec.extend(e.genome.values().iter().map(|&v| num(v)));
        rec.push(num(e.value()));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes the convergence, history and final-population CSVs of one run.
pub fn export_run(log: &RunLog, dir: &Path, run: usize) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let conv = convergence_path(dir, log.algorithm, run);
    let mut w = writer(&conv)?;
    // Serializing no rows would leave the file without a header.
    w.write_record([
        "generation",
        "avg_fitness",
        "best_fitness",
        "mean_pairwise_distance",
        "duplicate_count",
        "design_evals",
        "sim_runs",
        "partial",
    ])?;
    for g in &log.generations {
        w.write_record([
            g.generation.to_string(),
            num(g.avg_fitness),
            num(g.best_fitness),
            num(g.diversity.mean_pairwise_distance),
            g.diversity.duplicate_count.to_string(),
            g.design_evals.to_string(),
            g.sim_runs.to_string(),
            g.partial.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(&conv, e))?;

    let hist = history_path(dir, log.algorithm, run);
    write_individuals(&hist, log, &log.history)?;
    let fin = final_population_path(dir, log.algorithm, run);
    write_individuals(&fin, log, &log.final_population)?;
    Ok(vec![conv, hist, fin])
}

/// Contents of `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub objective: String,
    pub master_seed: u64,
    pub budget_design_evals: u64,
    pub replicates: usize,
    pub summary: ComparisonSummary,
    pub files: Vec<String>,
}

/// Writes every run's CSVs plus `report.json`; returns the report path.
pub fn export_report(report: &ComparisonReport, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();
    for pair in &report.runs {
        for outcome in pair.outcomes.values() {
            for p in export_run(&outcome.log, dir, pair.run)? {
                files.push(p.file_name().expect("file path").to_string_lossy().into_owned());
            }
        }
    }
    let out = ReportFile {
        objective: report.objective.clone(),
        master_seed: report.master_seed,
        budget_design_evals: report.budget_design_evals,
        replicates: report.replicates,
        summary: report.summary.clone(),
        files,
    };
    let path = dir.join("report.json");
    let text = serde_json::to_string_pretty(&out)?;
    fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

fn reader(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Reader::from_reader(file))
}

pub fn read_convergence(path: &Path) -> Result<Vec<ConvergenceRow>> {
    let mut r = reader(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

fn parse<T: std::str::FromStr>(field: &str, path: &Path) -> Result<T> {
    field.parse().map_err(|_| Error::Config(format!("{}: cannot parse `{field}`", path.display())))
}

/// Reads a history or final-population CSV back.
pub fn read_individuals(path: &Path) -> Result<Vec<IndividualRow>> {
    let mut r = reader(path)?;
    let width = r.headers()?.len();
    if width < 4 {
        return Err(Error::Config(format!("{}: too few columns", path.display())));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let genome = (3..width - 1).map(|i| parse(&rec[i], path)).collect::<Result<Vec<f64>>>()?;
        rows.push(IndividualRow {
            algorithm: rec[0].parse()?,
            generation: parse(&rec[1], path)?,
            index: parse(&rec[2], path)?,
            genome,
            fitness: parse(&rec[width - 1], path)?,
        });
    }
    Ok(rows)
}

pub fn read_report(path: &Path) -> Result<ReportFile> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Per-step trace of one surrogate replicate: `t, live_cells, released_cargo`.
pub fn write_trace(trace: &[crate::biorobots::TracePoint], path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["t", "live_cells", "released_cargo"])?;
    for p in trace {
        w.write_record([num(p.t), p.live_cells.to_string(), p.released_cargo.to_string()])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
