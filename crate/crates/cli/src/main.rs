use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dedrug::biorobots::{run_replicate, DesignParams, Preset, Scenario};
use dedrug::harness::{export_report, optimize, write_trace, Budget, BudgetUnit, ComparisonReport, ExperimentConfig};
use dedrug::optimizers::{run, Algorithm, AlgorithmKind, DeConfig, GaConfig, RandomSearchConfig};
use dedrug::{Error, Genome, ObjectiveSpec, RngStream};

#[derive(Parser)]
#[command(name = "dedrug", version, about = "Differential evolution vs. steady-state GA on a drug-delivery surrogate")]
struct Cli {
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ExperimentArgs {
    /// JSON experiment config; defaults to the reference DE vs GA study on the surrogate.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Budget per algorithm and run, in `--budget-unit` units.
    #[arg(long)]
    budget: Option<u64>,
    #[arg(long, value_name = "design|sim")]
    budget_unit: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_name = "desk|full")]
    preset: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one algorithm once.
    Optimize {
        #[command(flatten)]
        exp: ExperimentArgs,
        #[arg(long, default_value = "de", value_name = "de|ga|random_search")]
        algorithm: String,
    },
    /// Paired comparison of the enabled algorithms from shared initial populations.
    Compare {
        #[command(flatten)]
        exp: ExperimentArgs,
    },
    /// One surrogate replicate with a per-step trace.
    Sim {
        #[arg(long, default_value = "desk", value_name = "desk|full")]
        preset: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Six comma-separated design values; defaults to the centre of the box.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        design: Option<Vec<f64>>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// DE, GA and random search on 6-D sphere and Rastrigin.
    Bench {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 5)]
        seeds: u64,
        /// Design evaluations per run.
        #[arg(long, default_value_t = 200)]
        budget: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Failure {
    Config(String),
    Evaluator(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_evaluator_failure() {
            Failure::Evaluator(e.to_string())
        } else {
            Failure::Config(e.to_string())
        }
    }
}

fn load_experiment(args: &ExperimentArgs) -> Result<ExperimentConfig, Failure> {
    let preset = args.preset.as_deref().map(str::parse::<Preset>).transpose()?;
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::reference_study(preset.unwrap_or_default()),
    };
    if let Some(p) = preset {
        cfg.set_preset(p)?;
    }
    if let Some(seed) = args.seed {
        cfg.master_seed = seed;
    }
    if let Some(unit) = &args.budget_unit {
        cfg.budget.unit = unit.parse::<BudgetUnit>()?;
    }
    if let Some(max) = args.budget {
        cfg.budget = Budget { unit: cfg.budget.unit, max };
    }
    if let Some(out) = &args.out {
        cfg.output_dir = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn finish(report: &ComparisonReport, dir: &Path) -> Result<(), Failure> {
    let path = export_report(report, dir)?;
    let s = &report.summary;
    for r in &s.runs {
        let bests: Vec<String> = r
            .algorithms
            .iter()
            .map(|(k, a)| match (a.best_fitness, &a.error) {
                (_, Some(e)) => format!("{k}=failed ({e})"),
                (Some(b), None) => format!("{k}={b}"),
                (None, None) => format!("{k}=n/a"),
            })
            .collect();
        let winner = r.winner.map_or("none".to_string(), |w| w.to_string());
        println!("run {}: {} winner={winner}", r.run, bests.join(" "));
    }
    println!("wrote {}", path.display());
    if s.invalid_runs > 0 {
        return Err(Failure::Evaluator(format!("{} of {} runs failed", s.invalid_runs, s.runs.len())));
    }
    Ok(())
}

fn sim(preset: &str, seed: u64, design: Option<Vec<f64>>, out: &Path) -> Result<(), Failure> {
    let scenario = Scenario::preset(preset.parse()?);
    scenario.validate()?;
    let design = match design {
        Some(v) => DesignParams::from_genome(&Genome::new(v))?,
        None => DesignParams::mid_box(),
    };
    let outcome = run_replicate(&design, &scenario, &RngStream::new(seed), true)?;
    std::fs::create_dir_all(out).map_err(|e| Failure::Config(format!("{}: {e}", out.display())))?;
    write_trace(&outcome.trace, &out.join("sim_trace.csv"))?;
    let summary = serde_json::to_string_pretty(&outcome.summary).expect("summary serializes");
    let path = out.join("sim_summary.json");
    std::fs::write(&path, format!("{summary}\n")).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    println!("{summary}");
    Ok(())
}

fn bench(seed: u64, seeds: u64, budget: u64, out: Option<&Path>) -> Result<(), Failure> {
    let algorithms = [
        Algorithm::De(DeConfig::default()),
        Algorithm::Ga(GaConfig::default()),
        Algorithm::RandomSearch(RandomSearchConfig::default()),
    ];
    let mut table = serde_json::Map::new();
    for spec in [ObjectiveSpec::sphere(6)?, ObjectiveSpec::rastrigin(6)?] {
        let mut row = serde_json::Map::new();
        for alg in &algorithms {
            let mut bests = Vec::new();
            for s in seed..seed + seeds {
                let log = run(alg, &spec, budget, &RngStream::new(s), None).map_err(|f| Failure::from(f.error))?;
                bests.push(log.best_fitness().unwrap_or(f64::NAN));
            }
            bests.sort_by(|a, b| a.total_cmp(b));
            let median = bests[bests.len() / 2];
            println!("{:<10} {:<14} median best {median}", spec.name(), alg.kind());
            row.insert(alg.kind().to_string(), serde_json::json!({ "median_best": median, "bests": bests }));
        }
        table.insert(spec.name().to_string(), row.into());
    }
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).map_err(|e| Failure::Config(format!("{}: {e}", dir.display())))?;
        let path = dir.join("bench.json");
        let text = serde_json::to_string_pretty(&table).expect("table serializes");
        std::fs::write(&path, text + "\n").map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::Optimize { exp, algorithm } => {
            let cfg = load_experiment(&exp)?;
            let kind: AlgorithmKind = algorithm.parse()?;
            finish(&optimize(&cfg, kind)?, &cfg.output_dir)
        }
        Command::Compare { exp } => {
            let cfg = load_experiment(&exp)?;
            finish(&dedrug::compare(&cfg)?, &cfg.output_dir)
        }
        Command::Sim { preset, seed, design, out } => sim(&preset, seed, design, &out),
        Command::Bench { seed, seeds, budget, out } => bench(seed, seeds.max(1), budget, out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cli.jobs.unwrap_or(0)).build();
    let pool = match pool {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker threads: {e}");
            return ExitCode::from(1);
        }
    };
    match pool.install(|| dispatch(cli.command)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Evaluator(m)) => {
            eprintln!("evaluator failure: {m}");
            ExitCode::from(2)
        }
    }
}
