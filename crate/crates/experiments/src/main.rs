//! `dcd` — batch CLI for the distributed community-detection pipeline.
//!
//! Subcommands: `generate` (sample a block-model graph to disk), `detect`
//! (run the pipeline on an edge list), `evaluate` (score a saved run against
//! ground truth), `scenario` (config-driven sweeps emitting CSV tables).
//! Every subcommand reads a flat `key = value` config; see the repository
//! README for the key reference. Errors print a single `ERROR <message>`
//! line on stderr and exit nonzero.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dcd_core::io::{
    load_edge_list, load_labels, load_result_labels, plan_from_manifest, read_manifest,
    save_edge_list, save_labels, Indexing,
};
use dcd_core::metrics::{relative_density, EvalReport, CSV_HEADER};
use dcd_core::sbm::{make_connectivity, sample_sbm};
use dcd_core::{Engine, Error, Result, SbmParams};

use dcd_experiments::{
    build_file_spec, build_scenario, resolve_seed, run_file, run_grid, summarize, write_outputs,
};
use dcd_experiments::{Config, ScenarioPlan};

#[derive(Parser)]
#[command(
    name = "dcd",
    version,
    about = "Distributed spectral community detection: graph generation, detection runs, evaluation, scenario sweeps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a stochastic block model and write edges.txt / labels.txt.
    Generate(CommonArgs),
    /// Run distributed detection on an edge list; write run artifacts.
    Detect(CommonArgs),
    /// Score a saved run against ground-truth labels; write report.csv.
    Evaluate(CommonArgs),
    /// Run a scenario sweep from a config; write CSV tables.
    Scenario(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Flat `key = value` config file.
    #[arg(long)]
    config: PathBuf,
    /// Master seed; overrides the config's `seed` key.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker execution engine.
    #[arg(long, default_value_t = Engine::Sequential)]
    engine: Engine,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ERROR {e}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(args) => generate(&args),
        Command::Detect(args) => detect(&args),
        Command::Evaluate(args) => evaluate(&args),
        Command::Scenario(args) => scenario(&args),
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::File {
        path: dir.display().to_string(),
        source: e,
    })
}

fn generate(args: &CommonArgs) -> Result<()> {
    let mut cfg = Config::load(&args.config)?;
    let n: usize = cfg.require("n")?;
    let k: usize = cfg.require("k")?;
    let nu: f64 = cfg.or_default("nu", 0.2)?;
    let lambda: f64 = cfg.or_default("lambda", 0.5)?;
    let block_sizes = cfg.optional_list::<usize>("block_sizes")?;
    let seed = resolve_seed(&mut cfg, args.seed)?;
    cfg.finish()?;

    let b = make_connectivity(nu, lambda, k)?;
    let sizes = match block_sizes {
        Some(sizes) => {
            if sizes.len() != k {
                return Err(Error::InvalidParameter(format!(
                    "block_sizes has {} entries but k = {k}",
                    sizes.len()
                )));
            }
            sizes
        }
        None => SbmParams::even_blocks(n, k),
    };
    let params = SbmParams::new(n, sizes, b)?;
    let (graph, truth) = sample_sbm(&params, seed);

    ensure_dir(&args.out)?;
    let edges_path = args.out.join("edges.txt");
    let labels_path = args.out.join("labels.txt");
    save_edge_list(&graph, &edges_path)?;
    save_labels(&truth, &labels_path)?;
    println!(
        "generated n={} k={k} nu={nu} lambda={lambda} seed={seed}: {} edges",
        graph.num_nodes(),
        graph.num_edges()
    );
    println!("wrote {}", edges_path.display());
    println!("wrote {}", labels_path.display());
    Ok(())
}

fn detect(args: &CommonArgs) -> Result<()> {
    let mut cfg = Config::load(&args.config)?;
    let spec = build_file_spec(&mut cfg, args.seed)?;
    let summary = run_file(&spec, args.engine, &args.out)?;
    println!(
        "detected communities for {} nodes ({} pilots, {} workers, k={})",
        summary.num_nodes, summary.num_pilots, spec.workers, spec.k
    );
    match summary.rate {
        Some(rate) => println!("misclustering rate {rate}"),
        None => println!("no ground-truth labels given; skipping evaluation"),
    }
    println!("wrote run artifacts to {}", args.out.display());
    Ok(())
}

fn evaluate(args: &CommonArgs) -> Result<()> {
    let mut cfg = Config::load(&args.config)?;
    let edges = PathBuf::from(cfg.require::<String>("edges")?);
    let labels_path = PathBuf::from(cfg.require::<String>("labels")?);
    let run_dir = PathBuf::from(cfg.require::<String>("run")?);
    let indexing: Indexing = cfg.or_default("indexing", Indexing::ZeroBased)?;
    cfg.finish()?;

    let loaded = load_edge_list(&edges, indexing)?;
    let (truth, _) = load_labels(&labels_path, &loaded.node_ids)?;
    let est = load_result_labels(&run_dir.join("labels.csv"))?;
    let manifest = read_manifest(&run_dir.join("manifest.txt"))?;
    let (plan, k, _seed) = plan_from_manifest(&manifest)?;
    let n = loaded.graph.num_nodes();
    if est.len() != n || plan.num_nodes() != n {
        return Err(Error::InvalidParameter(format!(
            "run has {} labels over a {}-node plan, but the edge list has {n} nodes",
            est.len(),
            plan.num_nodes()
        )));
    }
    if truth.num_blocks() > k {
        return Err(Error::InvalidParameter(format!(
            "label file has {} distinct labels but the run used k = {k}",
            truth.num_blocks()
        )));
    }
    let red = relative_density(&loaded.graph, truth.labels())?;
    let report = EvalReport::from_labels(&est, k, &plan, &truth, None, Some(red))?;

    ensure_dir(&args.out)?;
    let report_path = args.out.join("report.csv");
    fs::write(&report_path, format!("{CSV_HEADER}\n{}\n", report.csv_row())).map_err(|e| {
        Error::File {
            path: report_path.display().to_string(),
            source: e,
        }
    })?;
    println!("misclustering rate {}", report.misclustering_rate);
    println!("wrote {}", report_path.display());
    Ok(())
}

fn scenario(args: &CommonArgs) -> Result<()> {
    let mut cfg = Config::load(&args.config)?;
    match build_scenario(&mut cfg, args.seed)? {
        ScenarioPlan::File(spec) => {
            let summary = run_file(&spec, args.engine, &args.out)?;
            match summary.rate {
                Some(rate) => println!("file run: misclustering rate {rate}"),
                None => println!("file run complete (no labels, no evaluation)"),
            }
            println!("wrote run artifacts to {}", args.out.display());
        }
        ScenarioPlan::Grid(scenario) => {
            println!(
                "scenario {} with {} grid points x {} reps (seed {})",
                scenario.kind.name(),
                scenario.points.len(),
                scenario.reps,
                scenario.seed
            );
            let outcomes = run_grid(&scenario, args.engine, |outcome| {
                match (&outcome.error, summarize(outcome)) {
                    (Some(message), _) => {
                        println!("point {}: ERROR {message}", outcome.point.name);
                    }
                    (None, Some(stats)) => {
                        let lee = match stats.median_lee {
                            Some(v) => format!(" median lee {v:.4}"),
                            None => String::new(),
                        };
                        println!(
                            "point {}: median rate {:.4}{lee} ({} reps)",
                            outcome.point.name,
                            stats.median_rate,
                            outcome.reps.len()
                        );
                    }
                    (None, None) => println!("point {}: no repetitions", outcome.point.name),
                }
            });
            write_outputs(&args.out, &outcomes)?;
            println!(
                "wrote runs.csv, summary.csv, plot.csv, timings.csv to {}",
                args.out.display()
            );
        }
    }
    Ok(())
}
