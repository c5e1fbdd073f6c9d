//! Scenario orchestration: expand a config into a grid of run recipes,
//! execute seeded repetitions, aggregate, and write CSV tables.
//!
//! Seeds form a tree so every number in the output is reproducible from the
//! single master seed: each grid point derives a root from its seed channel,
//! each repetition derives from that root, and the pipeline stages (graph
//! sampling, pilot selection, partitioning, detection, baseline) each get a
//! tagged child of the repetition seed. Points that share a channel (the
//! baseline-comparison pair) therefore see identical graphs.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use ndarray::Array2;

use dcd_core::io::{load_edge_list, load_labels, save_result, Indexing};
use dcd_core::master::{sample_pilots, PilotPolicy};
use dcd_core::metrics::{lee, misclustering_rate, relative_density, EvalReport};
use dcd_core::population::embed_population;
use dcd_core::protocol::{plan_partition, run_detection_with, PhaseTimings, RunOptions};
use dcd_core::sbm::{make_connectivity, sample_sbm, unbalanced_proportions};
use dcd_core::sc::spectral_cluster;
use dcd_core::seeding::{derive, tags};
use dcd_core::{
    ClusteringResult, Engine, Error, GroundTruth, PartitionMode, Result, SbmParams,
};

use crate::config::Config;
use crate::stats::{median, quartiles};

/// Which algorithm a grid point runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algo {
    /// The master/worker pipeline.
    Distributed,
    /// Full-graph spectral clustering on one machine.
    FullBaseline,
}

/// How a grid point distributes non-pilot nodes over workers.
#[derive(Debug, Clone, Copy)]
pub enum Partition {
    Even,
    /// Block-skewed worker loads with the given skew strength.
    Unbalanced { alpha: f64 },
}

/// One cell of a scenario grid: a complete, self-describing run recipe.
#[derive(Debug, Clone)]
pub struct GridPoint {
    /// Unique within the scenario; the `point` CSV column. Never contains
    /// commas.
    pub name: String,
    /// Plot grouping; the `series` CSV column.
    pub series: String,
    /// Plot x coordinate.
    pub x: f64,
    /// Seed channel: points sharing a channel see identical graphs.
    pub channel: u64,
    pub n: usize,
    pub k: usize,
    pub nu: f64,
    pub lambda: f64,
    pub l: usize,
    pub workers: usize,
    pub partition: Partition,
    pub algo: Algo,
    /// Keep worker embeddings and score them against the population
    /// embedding (the log-estimation error).
    pub compute_lee: bool,
}

/// Measurements from one repetition of a grid point.
#[derive(Debug, Clone)]
pub struct RepOutcome {
    pub rate: f64,
    pub lee: Option<f64>,
    pub red: f64,
    /// Largest per-worker unbalance statistic; absent for the baseline,
    /// which has no partition.
    pub alpha_max: Option<f64>,
    /// Per-phase wall times; absent for the baseline.
    pub phases: Option<PhaseTimings>,
    pub total_s: f64,
}

/// A grid point's collected repetitions, or the error that stopped it.
#[derive(Debug, Clone)]
pub struct PointOutcome {
    pub point: GridPoint,
    /// Repetitions completed before any error.
    pub reps: Vec<RepOutcome>,
    pub error: Option<String>,
}

/// The scenario kinds the harness knows how to expand.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    PilotSweep,
    SignalSweep,
    UnbalanceSweep,
    ScCompare,
    FileRun,
}

impl ScenarioKind {
    pub fn name(&self) -> &'static str {
        match self {
            ScenarioKind::PilotSweep => "pilot_sweep",
            ScenarioKind::SignalSweep => "signal_sweep",
            ScenarioKind::UnbalanceSweep => "unbalance_sweep",
            ScenarioKind::ScCompare => "sc_compare",
            ScenarioKind::FileRun => "file_run",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "pilot_sweep" => ScenarioKind::PilotSweep,
            "signal_sweep" => ScenarioKind::SignalSweep,
            "unbalance_sweep" => ScenarioKind::UnbalanceSweep,
            "sc_compare" => ScenarioKind::ScCompare,
            "file_run" => ScenarioKind::FileRun,
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown scenario '{other}' (expected pilot_sweep, signal_sweep, \
                     unbalance_sweep, sc_compare, or file_run)"
                )))
            }
        })
    }
}

/// A fully-expanded grid scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub kind: ScenarioKind,
    pub points: Vec<GridPoint>,
    pub reps: usize,
    pub seed: u64,
}

/// A single detection run on an on-disk graph.
#[derive(Debug, Clone)]
pub struct FileRunSpec {
    pub edges: PathBuf,
    pub labels: Option<PathBuf>,
    pub indexing: Indexing,
    pub k: usize,
    pub pilots: PilotCount,
    pub workers: usize,
    pub policy: Option<PilotPolicy>,
    /// Skewed partition strength; requires labels.
    pub alpha: Option<f64>,
    pub seed: u64,
}

/// Pilot-set size, either absolute or as a fraction of the node count.
#[derive(Debug, Clone, Copy)]
pub enum PilotCount {
    Count(usize),
    Fraction(f64),
}

impl PilotCount {
    pub fn resolve(&self, n: usize) -> usize {
        match *self {
            PilotCount::Count(l) => l,
            PilotCount::Fraction(r) => (r * n as f64).round() as usize,
        }
    }
}

/// What a config file describes: a grid sweep or a single file run.
#[derive(Debug, Clone)]
pub enum ScenarioPlan {
    Grid(Scenario),
    File(FileRunSpec),
}

fn parse_policy(s: &str) -> Result<PilotPolicy> {
    match s {
        "stratified" => Ok(PilotPolicy::Stratified),
        "uniform" => Ok(PilotPolicy::Uniform),
        other => Err(Error::InvalidParameter(format!(
            "unknown pilot_policy '{other}' (expected 'stratified' or 'uniform')"
        ))),
    }
}

/// Reads `l` or `r` (exactly one) from the config.
fn pilot_count(cfg: &mut Config) -> Result<PilotCount> {
    let l = cfg.optional::<usize>("l")?;
    let r = cfg.optional::<f64>("r")?;
    match (l, r) {
        (Some(l), None) => Ok(PilotCount::Count(l)),
        (None, Some(r)) => Ok(PilotCount::Fraction(r)),
        (None, None) => Err(Error::InvalidParameter(
            "config needs 'l' (pilot count) or 'r' (pilot fraction)".into(),
        )),
        (Some(_), Some(_)) => Err(Error::InvalidParameter(
            "config sets both 'l' and 'r'; pick one".into(),
        )),
    }
}

/// Seed precedence: explicit override (the CLI `--seed`), then the config's
/// `seed` key, then 0. The key is consumed either way so a config carrying
/// `seed` stays valid under an override.
pub fn resolve_seed(cfg: &mut Config, seed_override: Option<u64>) -> Result<u64> {
    let config_seed = cfg.optional::<u64>("seed")?;
    Ok(seed_override.or(config_seed).unwrap_or(0))
}

/// Parses the file-run keys (everything except `scenario`) from a config.
/// This is also the `detect` subcommand's config schema.
pub fn build_file_spec(cfg: &mut Config, seed_override: Option<u64>) -> Result<FileRunSpec> {
    let seed = resolve_seed(cfg, seed_override)?;
    let spec = FileRunSpec {
        edges: PathBuf::from(cfg.require::<String>("edges")?),
        labels: cfg.optional::<String>("labels")?.map(PathBuf::from),
        indexing: cfg.or_default("indexing", Indexing::ZeroBased)?,
        k: cfg.require("k")?,
        pilots: pilot_count(cfg)?,
        workers: cfg.or_default("workers", 5)?,
        policy: match cfg.get("pilot_policy") {
            Some(s) => Some(parse_policy(&s)?),
            None => None,
        },
        alpha: cfg.optional("alpha")?,
        seed,
    };
    cfg.finish()?;
    Ok(spec)
}

/// Expands a config into a runnable scenario. `seed_override` (the CLI
/// `--seed`) wins over the config's `seed` key; both default to 0.
pub fn build_scenario(cfg: &mut Config, seed_override: Option<u64>) -> Result<ScenarioPlan> {
    let kind = ScenarioKind::parse(&cfg.require::<String>("scenario")?)?;
    if kind == ScenarioKind::FileRun {
        return Ok(ScenarioPlan::File(build_file_spec(cfg, seed_override)?));
    }
    let seed = resolve_seed(cfg, seed_override)?;

    let reps = cfg.or_default::<usize>("reps", 20)?;
    if reps == 0 {
        return Err(Error::InvalidParameter("reps must be at least 1".into()));
    }
    let n = cfg.or_default::<usize>("n", 2000)?;
    let k = cfg.or_default::<usize>("k", 3)?;
    let nu = cfg.or_default("nu", 0.2)?;
    let lambda = cfg.or_default("lambda", 0.5)?;
    let workers = cfg.or_default::<usize>("workers", 5)?;
    let base = GridPoint {
        name: String::new(),
        series: String::new(),
        x: 0.0,
        channel: 0,
        n,
        k,
        nu,
        lambda,
        l: 0,
        workers,
        partition: Partition::Even,
        algo: Algo::Distributed,
        compute_lee: false,
    };

    let points = match kind {
        ScenarioKind::PilotSweep => {
            let compute_lee = cfg.flag("lee")?;
            let l_values: Vec<(f64, usize, String)> = match (
                cfg.optional_list::<f64>("r_grid")?,
                cfg.optional_list::<usize>("l_grid")?,
            ) {
                (Some(rs), None) => rs
                    .into_iter()
                    .map(|r| {
                        let l = (r * n as f64).round() as usize;
                        (r, l, format!("r={r}"))
                    })
                    .collect(),
                (None, Some(ls)) => ls
                    .into_iter()
                    .map(|l| (l as f64, l, format!("l={l}")))
                    .collect(),
                (None, None) => {
                    return Err(Error::InvalidParameter(
                        "pilot_sweep needs 'r_grid' or 'l_grid'".into(),
                    ))
                }
                (Some(_), Some(_)) => {
                    return Err(Error::InvalidParameter(
                        "pilot_sweep sets both 'r_grid' and 'l_grid'; pick one".into(),
                    ))
                }
            };
            l_values
                .into_iter()
                .enumerate()
                .map(|(i, (x, l, name))| GridPoint {
                    name,
                    series: format!("k={k}"),
                    x,
                    channel: i as u64,
                    l,
                    compute_lee,
                    ..base.clone()
                })
                .collect()
        }
        ScenarioKind::SignalSweep => {
            let l = cfg.require::<usize>("l")?;
            let lambda_grid = cfg.optional_list::<f64>("lambda_grid")?;
            let nu_grid = cfg.optional_list::<f64>("nu_grid")?;
            if lambda_grid.is_none() && nu_grid.is_none() {
                return Err(Error::InvalidParameter(
                    "signal_sweep needs 'lambda_grid' and/or 'nu_grid'".into(),
                ));
            }
            let mut points = Vec::new();
            let mut channel = 0u64;
            for lam in lambda_grid.unwrap_or_default() {
                points.push(GridPoint {
                    name: format!("lambda={lam}"),
                    series: "lambda-sweep".into(),
                    x: lam,
                    channel,
                    l,
                    lambda: lam,
                    ..base.clone()
                });
                channel += 1;
            }
            for v in nu_grid.unwrap_or_default() {
                points.push(GridPoint {
                    name: format!("nu={v}"),
                    series: "nu-sweep".into(),
                    x: v,
                    channel,
                    l,
                    nu: v,
                    ..base.clone()
                });
                channel += 1;
            }
            points
        }
        ScenarioKind::UnbalanceSweep => {
            let l = cfg.require::<usize>("l")?;
            let k_grid = cfg
                .optional_list::<usize>("k_grid")?
                .unwrap_or_else(|| vec![k]);
            let alpha_grid = cfg.require_list::<f64>("alpha_grid")?;
            let mut points = Vec::new();
            for (ki, &kk) in k_grid.iter().enumerate() {
                for &alpha in &alpha_grid {
                    // All skew levels of one k share a seed channel, so rep
                    // i compares partitions of the same sampled graph: the
                    // master-side error cancels out of the comparison and
                    // the skew effect is isolated (common random numbers).
                    points.push(GridPoint {
                        name: format!("k={kk} alpha={alpha}"),
                        series: format!("k={kk}"),
                        x: alpha,
                        channel: ki as u64,
                        k: kk,
                        l,
                        partition: Partition::Unbalanced { alpha },
                        ..base.clone()
                    });
                }
            }
            points
        }
        ScenarioKind::ScCompare => {
            let pilots = pilot_count(cfg)?;
            let l = pilots.resolve(n);
            let x = match pilots {
                PilotCount::Fraction(r) => r,
                PilotCount::Count(l) => l as f64,
            };
            vec![
                GridPoint {
                    name: "dcd".into(),
                    series: "dcd".into(),
                    x,
                    channel: 0,
                    l,
                    ..base.clone()
                },
                GridPoint {
                    name: "sc".into(),
                    series: "sc".into(),
                    x,
                    channel: 0,
                    l,
                    algo: Algo::FullBaseline,
                    ..base.clone()
                },
            ]
        }
        ScenarioKind::FileRun => unreachable!("handled above"),
    };
    cfg.finish()?;
    Ok(ScenarioPlan::Grid(Scenario {
        kind,
        points,
        reps,
        seed,
    }))
}

/// Mean log-estimation error across workers: each worker's singular vectors
/// against the population embedding of its own sample, Procrustes-aligned.
fn mean_worker_lee(
    result: &ClusteringResult,
    truth: &GroundTruth,
    b: &Array2<f64>,
) -> Result<f64> {
    let embeddings = result.worker_embeddings.as_ref().ok_or_else(|| {
        Error::InvalidParameter("estimation error requested but embeddings were not kept".into())
    })?;
    let pilot_labels: Vec<usize> = result
        .plan
        .pilot
        .indices()
        .iter()
        .map(|&i| truth.labels()[i])
        .collect();
    let mut total = 0.0;
    for (m, estimate) in embeddings.iter().enumerate() {
        let mut labels_sub = pilot_labels.clone();
        labels_sub.extend(
            result.plan.worker_assignments[m]
                .iter()
                .map(|&i| truth.labels()[i]),
        );
        let population = embed_population(&labels_sub, &pilot_labels, b)?;
        total += lee(estimate, &population)?;
    }
    Ok(total / embeddings.len() as f64)
}

fn run_rep(point: &GridPoint, rep_seed: u64, engine: Engine) -> Result<RepOutcome> {
    let b = make_connectivity(point.nu, point.lambda, point.k)?;
    let params = SbmParams::new(
        point.n,
        SbmParams::even_blocks(point.n, point.k),
        b.clone(),
    )?;
    let (graph, truth) = sample_sbm(&params, derive(rep_seed, tags::SAMPLE_GRAPH));
    let red = relative_density(&graph, truth.labels())?;
    match point.algo {
        Algo::FullBaseline => {
            let start = Instant::now();
            let baseline = spectral_cluster(&graph, point.k, derive(rep_seed, tags::BASELINE))?;
            let total_s = start.elapsed().as_secs_f64();
            let (rate, _) = misclustering_rate(&baseline.labels, truth.labels(), point.k)?;
            Ok(RepOutcome {
                rate,
                lee: None,
                red,
                alpha_max: None,
                phases: None,
                total_s,
            })
        }
        Algo::Distributed => {
            let pilots = sample_pilots(
                point.n,
                point.l,
                PilotPolicy::Stratified,
                Some(&truth),
                derive(rep_seed, tags::PILOTS),
            )?;
            let mode = match point.partition {
                Partition::Even => PartitionMode::Even,
                Partition::Unbalanced { alpha } => PartitionMode::Proportions(
                    unbalanced_proportions(point.k, point.workers, alpha)?,
                ),
            };
            let plan = plan_partition(
                point.n,
                &pilots,
                point.workers,
                mode,
                Some(&truth),
                derive(rep_seed, tags::PARTITION),
            )?;
            let result = run_detection_with(
                &graph,
                point.k,
                &plan,
                engine,
                derive(rep_seed, tags::DETECT),
                RunOptions {
                    keep_embeddings: point.compute_lee,
                },
            )?;
            let lee_value = if point.compute_lee {
                Some(mean_worker_lee(&result, &truth, &b)?)
            } else {
                None
            };
            let report = EvalReport::from_run(&result, &truth, lee_value, Some(red))?;
            let alpha_max = report.alpha.iter().copied().fold(0.0, f64::max);
            Ok(RepOutcome {
                rate: report.misclustering_rate,
                lee: report.lee,
                red,
                alpha_max: Some(alpha_max),
                phases: Some(result.timings),
                total_s: result.timings.total_s(),
            })
        }
    }
}

/// Runs every repetition of one grid point; the first error aborts the
/// point and is recorded in the outcome.
pub fn run_point(
    point: &GridPoint,
    reps: usize,
    master_seed: u64,
    engine: Engine,
) -> PointOutcome {
    let root = derive(master_seed, tags::REP_BASE + point.channel);
    let mut collected = Vec::with_capacity(reps);
    for rep in 0..reps {
        match run_rep(point, derive(root, rep as u64), engine) {
            Ok(outcome) => collected.push(outcome),
            Err(e) => {
                return PointOutcome {
                    point: point.clone(),
                    reps: collected,
                    error: Some(format!("rep {rep}: {e}")),
                }
            }
        }
    }
    PointOutcome {
        point: point.clone(),
        reps: collected,
        error: None,
    }
}

/// Runs a whole grid in point order, reporting each finished point through
/// `on_point`. Point errors are captured in their outcome; the grid
/// continues.
pub fn run_grid(
    scenario: &Scenario,
    engine: Engine,
    mut on_point: impl FnMut(&PointOutcome),
) -> Vec<PointOutcome> {
    scenario
        .points
        .iter()
        .map(|point| {
            let outcome = run_point(point, scenario.reps, scenario.seed, engine);
            on_point(&outcome);
            outcome
        })
        .collect()
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Sanitizes an error message for a CSV cell.
fn csv_safe(message: &str) -> String {
    message.replace(['\n', '\r'], " ").replace(',', ";")
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::File {
        path: path.display().to_string(),
        source: e,
    })
}

/// Median rate/LEE/total summaries for one point, when it has data.
#[derive(Debug, Clone, Copy)]
pub struct PointSummary {
    pub median_rate: f64,
    pub q1_rate: f64,
    pub q3_rate: f64,
    pub median_lee: Option<f64>,
    pub median_total_s: f64,
}

/// Aggregates a point's repetitions; `None` when no repetition finished.
pub fn summarize(outcome: &PointOutcome) -> Option<PointSummary> {
    if outcome.reps.is_empty() {
        return None;
    }
    let rates: Vec<f64> = outcome.reps.iter().map(|r| r.rate).collect();
    let (q1_rate, median_rate, q3_rate) = quartiles(&rates);
    let lees: Vec<f64> = outcome.reps.iter().filter_map(|r| r.lee).collect();
    let totals: Vec<f64> = outcome.reps.iter().map(|r| r.total_s).collect();
    Some(PointSummary {
        median_rate,
        q1_rate,
        q3_rate,
        median_lee: if lees.len() == outcome.reps.len() {
            Some(median(&lees))
        } else {
            None
        },
        median_total_s: median(&totals),
    })
}

/// Writes the scenario tables into `dir`:
///
/// - `runs.csv` — one row per finished repetition;
/// - `summary.csv` — one row per grid point (status `ok` or `error`);
/// - `plot.csv` — `(x, y, series)` rows: median rate per point, plus
///   `(ln l, median estimation error, "<series>:lee")` rows where tracked;
/// - `timings.csv` — per-repetition wall times, kept apart from the
///   seed-determined tables above because wall time is never reproducible.
pub fn write_outputs(dir: &Path, outcomes: &[PointOutcome]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::File {
        path: dir.display().to_string(),
        source: e,
    })?;

    let mut runs = String::from("point,series,x,rep,rate,lee,red,alpha_max\n");
    for outcome in outcomes {
        let p = &outcome.point;
        for (rep, r) in outcome.reps.iter().enumerate() {
            writeln!(
                runs,
                "{},{},{},{},{},{},{},{}",
                p.name,
                p.series,
                p.x,
                rep,
                r.rate,
                fmt_opt(r.lee),
                r.red,
                fmt_opt(r.alpha_max),
            )
            .expect("string write");
        }
    }
    write_file(&dir.join("runs.csv"), &runs)?;

    let mut timings = String::from("point,rep,extract_s,master_s,workers_s,gather_s,total_s\n");
    for outcome in outcomes {
        for (rep, r) in outcome.reps.iter().enumerate() {
            let phase = |f: fn(&PhaseTimings) -> f64| fmt_opt(r.phases.as_ref().map(f));
            writeln!(
                timings,
                "{},{},{},{},{},{},{}",
                outcome.point.name,
                rep,
                phase(|t| t.extract_s),
                phase(|t| t.master_s),
                phase(|t| t.workers_s),
                phase(|t| t.gather_s),
                r.total_s,
            )
            .expect("string write");
        }
    }
    write_file(&dir.join("timings.csv"), &timings)?;

    let mut summary = String::from(
        "point,series,x,reps,status,median_rate,q1_rate,q3_rate,median_lee,median_total_s,message\n",
    );
    for outcome in outcomes {
        let p = &outcome.point;
        let stats = summarize(outcome);
        let status = if outcome.error.is_some() { "error" } else { "ok" };
        writeln!(
            summary,
            "{},{},{},{},{},{},{},{},{},{},{}",
            p.name,
            p.series,
            p.x,
            outcome.reps.len(),
            status,
            fmt_opt(stats.map(|s| s.median_rate)),
            fmt_opt(stats.map(|s| s.q1_rate)),
            fmt_opt(stats.map(|s| s.q3_rate)),
            fmt_opt(stats.and_then(|s| s.median_lee)),
            fmt_opt(stats.map(|s| s.median_total_s)),
            csv_safe(outcome.error.as_deref().unwrap_or("")),
        )
        .expect("string write");
    }
    write_file(&dir.join("summary.csv"), &summary)?;

    let mut plot = String::from("x,y,series\n");
    for outcome in outcomes {
        let Some(stats) = summarize(outcome) else {
            continue;
        };
        let p = &outcome.point;
        writeln!(plot, "{},{},{}", p.x, stats.median_rate, p.series).expect("string write");
        if let Some(lee_med) = stats.median_lee {
            writeln!(
                plot,
                "{},{},{}:lee",
                (p.l as f64).ln(),
                lee_med,
                p.series
            )
            .expect("string write");
        }
    }
    write_file(&dir.join("plot.csv"), &plot)?;
    Ok(())
}

/// Outcome of a single-file detection run.
#[derive(Debug)]
pub struct FileRunOutput {
    pub num_nodes: usize,
    pub num_pilots: usize,
    /// Mis-clustering rate, when ground-truth labels were supplied.
    pub rate: Option<f64>,
}

/// Runs detection on an on-disk edge list and writes the standard run
/// artifacts (`labels.csv`, `manifest.txt`, and `report.csv` when labels
/// are available) into `dir`.
pub fn run_file(spec: &FileRunSpec, engine: Engine, dir: &Path) -> Result<FileRunOutput> {
    let loaded = load_edge_list(&spec.edges, spec.indexing)?;
    let n = loaded.graph.num_nodes();
    let truth = match &spec.labels {
        None => None,
        Some(path) => {
            let (truth, _dictionary) = load_labels(path, &loaded.node_ids)?;
            if truth.num_blocks() != spec.k {
                return Err(Error::InvalidParameter(format!(
                    "label file has {} distinct labels but k = {}",
                    truth.num_blocks(),
                    spec.k
                )));
            }
            Some(truth)
        }
    };
    let l = spec.pilots.resolve(n);
    let policy = spec.policy.unwrap_or(if truth.is_some() {
        PilotPolicy::Stratified
    } else {
        PilotPolicy::Uniform
    });
    let pilots = sample_pilots(n, l, policy, truth.as_ref(), derive(spec.seed, tags::PILOTS))?;
    let mode = match spec.alpha {
        None => PartitionMode::Even,
        Some(alpha) => {
            PartitionMode::Proportions(unbalanced_proportions(spec.k, spec.workers, alpha)?)
        }
    };
    let plan = plan_partition(
        n,
        &pilots,
        spec.workers,
        mode,
        truth.as_ref(),
        derive(spec.seed, tags::PARTITION),
    )?;
    let result = run_detection_with(
        &loaded.graph,
        spec.k,
        &plan,
        engine,
        derive(spec.seed, tags::DETECT),
        RunOptions::default(),
    )?;
    let report = match &truth {
        None => None,
        Some(truth) => {
            let red = relative_density(&loaded.graph, truth.labels())?;
            Some(EvalReport::from_run(&result, truth, None, Some(red))?)
        }
    };
    save_result(&result, report.as_ref(), dir)?;
    Ok(FileRunOutput {
        num_nodes: n,
        num_pilots: l,
        rate: report.as_ref().map(|r| r.misclustering_rate),
    })
}
