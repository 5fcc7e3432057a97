//! `diffrec`: ingest interaction data, recommend, evaluate and sweep
//! diffusion kernels.
//!
//! Exit codes: 0 success, 1 I/O or corrupt input, 2 bad arguments or unknown
//! entity, 3 partial failure (some sweep points or grid cells failed).

mod config;
mod report;

use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use diffrec::dataset::{index_records, split_indexed};
use diffrec::kernel::initial_resource;
use diffrec::{
    compare_algorithms, dense_transfer_matrix, ingest, recommend, run_grid, run_sweep, Error, Evaluator, Kernel,
    SplitDataset,
};

use config::{Mode, RunArgs, RunConfig};
use report::{metric_summary, ReportWriter};

#[derive(Parser)]
#[command(
    name = "diffrec",
    version,
    about = "Diffusion-based recommendation on bipartite networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Read a raw interaction file, split it and write a split file
    Ingest(RunArgs),
    /// Print the top-L list for one user
    Recommend(RunArgs),
    /// Evaluate one kernel on a split
    Evaluate(RunArgs),
    /// Sweep one family's parameter
    Sweep(RunArgs),
    /// Evaluate the two-exponent kernel over a square grid
    Grid(RunArgs),
    /// Compare families at their optimal parameters
    Compare(RunArgs),
}

struct Failure {
    code: u8,
    messages: Vec<String>,
}

impl Failure {
    fn new(code: u8, msg: impl Into<String>) -> Self {
        Failure {
            code,
            messages: vec![msg.into()],
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Io(_) | Error::Corruption(_) => 1,
            _ => 2,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::new(1, format!("i/o error: {e}"))
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mode, args) = match &cli.command {
        Command::Ingest(a) => (Mode::Ingest, a),
        Command::Recommend(a) => (Mode::Recommend, a),
        Command::Evaluate(a) => (Mode::Evaluate, a),
        Command::Sweep(a) => (Mode::Sweep, a),
        Command::Grid(a) => (Mode::Grid, a),
        Command::Compare(a) => (Mode::Compare, a),
    };
    let outcome = RunConfig::resolve(args, mode)
        .map_err(|messages| Failure { code: 2, messages })
        .and_then(|cfg| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(cfg.workers.unwrap_or(0))
                .build()
                .map_err(|e| Failure::new(1, format!("cannot start worker pool: {e}")))?;
            pool.install(|| run(mode, &cfg))
        });
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            for m in &f.messages {
                eprintln!("error: {m}");
            }
            ExitCode::from(f.code)
        }
    }
}

fn run(mode: Mode, cfg: &RunConfig) -> CmdResult {
    match mode {
        Mode::Ingest => cmd_ingest(cfg),
        Mode::Recommend => cmd_recommend(cfg),
        Mode::Evaluate => cmd_evaluate(cfg),
        Mode::Sweep => cmd_sweep(cfg),
        Mode::Grid => cmd_grid(cfg),
        Mode::Compare => cmd_compare(cfg),
    }
}

/// Split files are JSON objects; anything else is read as raw interactions.
fn is_split_file(path: &Path) -> std::io::Result<bool> {
    let mut head = [0u8; 64];
    let n = File::open(path)?.read(&mut head)?;
    Ok(head[..n].iter().find(|b| !b.is_ascii_whitespace()) == Some(&b'{'))
}

fn load_dataset(cfg: &RunConfig) -> Result<SplitDataset, Failure> {
    if is_split_file(&cfg.input)? {
        return Ok(SplitDataset::load(&cfg.input)?);
    }
    let reader = BufReader::new(File::open(&cfg.input)?);
    let ingested = ingest(reader, &cfg.layout, cfg.threshold)?;
    Ok(split_indexed(index_records(&ingested.records), cfg.ratio, cfg.seed)?)
}

fn cmd_ingest(cfg: &RunConfig) -> CmdResult {
    let reader = BufReader::new(File::open(&cfg.input)?);
    let ingested = ingest(reader, &cfg.layout, cfg.threshold)?;
    let indexed = index_records(&ingested.records);
    let graph = indexed.graph();
    let sparsity = graph.sparsity()?;
    let duplicates = indexed.duplicates;
    let ds = split_indexed(indexed, cfg.ratio, cfg.seed)?;
    let out = cfg.out.as_ref().expect("checked during validation");
    ds.save(out)?;
    let s = ingested.stats;
    println!(
        "users={} objects={} links={} sparsity={:.2e} duplicates={} malformed={} below_threshold={} train={} test={} checksum={}",
        graph.num_users(),
        graph.num_objects(),
        graph.num_links(),
        sparsity,
        duplicates,
        s.malformed,
        s.below_threshold,
        ds.train().num_links(),
        ds.num_test_links(),
        ds.checksum(),
    );
    Ok(())
}

fn cmd_recommend(cfg: &RunConfig) -> CmdResult {
    let ds = load_dataset(cfg)?;
    let raw = cfg.user.as_deref().expect("checked during validation");
    let user = ds
        .id_maps()
        .user_index(raw)
        .ok_or_else(|| Failure::new(2, format!("unknown user '{raw}'")))?;
    let train = ds.train();
    if train.user_degree(user) == 0 {
        return Err(Failure::new(
            2,
            format!("cold start: user '{raw}' has no training links, so no resource can be diffused"),
        ));
    }
    let spec = cfg.kernel_spec().map_err(|e| Failure::new(2, e))?;
    let scores = Kernel::new(train, spec)?.score_user(user)?;
    if train.num_objects() <= cfg.oracle_cap {
        let dense = dense_transfer_matrix(train, spec, cfg.oracle_cap)?.apply(&initial_resource(train, user));
        let worst = dense
            .iter()
            .zip(&scores.scores)
            .map(|(d, s)| (d - s).abs())
            .fold(0.0, f64::max);
        if worst > 1e-9 {
            return Err(Failure::new(
                1,
                format!("scores disagree with the dense oracle by {worst:e}"),
            ));
        }
    }
    let list = recommend(&scores, train, cfg.top_l)?;
    for (rank, &o) in list.items.iter().enumerate() {
        println!("{}\t{}\t{:.6}", rank + 1, ds.id_maps().raw_object(o), scores.scores[o]);
    }
    Ok(())
}

fn cmd_evaluate(cfg: &RunConfig) -> CmdResult {
    let ds = load_dataset(cfg)?;
    let spec = cfg.kernel_spec().map_err(|e| Failure::new(2, e))?;
    let evaluation = Evaluator::new(&ds, cfg.eval_options())?.evaluate(spec)?;
    let curve = evaluation.degree_curve(cfg.bin_log_base);
    let rep = &evaluation.report;

    #[derive(serde::Serialize)]
    struct EvaluateResult<'a> {
        report: &'a diffrec::MetricsReport,
        degree_bins: &'a diffrec::DegreeBinCurve,
    }
    let w = ReportWriter::new("evaluate", cfg, &ds)?;
    w.json(&EvaluateResult {
        report: rep,
        degree_bins: &curve,
    })?;
    w.csv("evaluate.csv", [report::EvaluateRow::from(rep)])?;
    w.csv("degree_bins.csv", report::degree_bin_rows(spec.to_string(), &curve))?;
    println!(
        "kernel={spec} {} users={} links={}",
        metric_summary(rep),
        rep.users_evaluated,
        rep.links_evaluated
    );
    Ok(())
}

fn cmd_sweep(cfg: &RunConfig) -> CmdResult {
    let ds = load_dataset(cfg)?;
    let family = cfg.family().map_err(|e| Failure::new(2, e))?;
    let plan = cfg.sweep_plan(family);
    let sweep = run_sweep(&ds, &plan)?;

    #[derive(serde::Serialize)]
    struct SweepReport<'a> {
        sweep: &'a diffrec::SweepResult,
        optimum: Option<diffrec::SweepPoint>,
    }
    let optimum = diffrec::find_optimal(&sweep.points).ok();
    let w = ReportWriter::new("sweep", cfg, &ds)?;
    w.json(&SweepReport {
        sweep: &sweep,
        optimum: optimum.clone().map(|(param, report)| diffrec::SweepPoint {
            param,
            report: Some(report),
            error: None,
        }),
    })?;
    w.csv("sweep.csv", report::sweep_rows(&sweep))?;

    let failed = sweep.failed_points();
    match &optimum {
        Some((param, rep)) => println!(
            "family={family} optimum {}={param} {} points={} failed={failed}",
            family.parameter_name(),
            metric_summary(rep),
            sweep.points.len()
        ),
        None => println!(
            "family={family} no optimum points={} failed={failed}",
            sweep.points.len()
        ),
    }
    partial(failed, "sweep points")
}

fn cmd_grid(cfg: &RunConfig) -> CmdResult {
    let ds = load_dataset(cfg)?;
    let grid = run_grid(&ds, &cfg.grid_plan())?;
    let w = ReportWriter::new("grid", cfg, &ds)?;
    w.json(&grid)?;
    w.csv("grid.csv", report::grid_rows(&grid))?;

    let cell = |c: &Option<diffrec::experiment::GridCell>| match c {
        Some(c) => format!("a={} b={} value={:.5}", c.a, c.b, c.value.unwrap_or(f64::NAN)),
        None => "none".to_owned(),
    };
    let failed = grid.failed_cells();
    println!(
        "metric={} best {} diagonal {} near_optimal={} cells={} failed={failed}",
        grid.metric.name(),
        cell(&grid.best),
        cell(&grid.best_diagonal),
        grid.near_optimal.len(),
        grid.cells.len()
    );
    partial(failed, "grid cells")
}

fn cmd_compare(cfg: &RunConfig) -> CmdResult {
    let ds = load_dataset(cfg)?;
    let cmp = compare_algorithms(&ds, &cfg.kernels, cfg.compare_step(), cfg.eval_options())?;
    let w = ReportWriter::new("compare", cfg, &ds)?;
    w.json(&cmp)?;
    w.csv("compare.csv", report::compare_rows(&cmp))?;
    for row in &cmp.rows {
        match (&row.report, row.parameter) {
            (Some(rep), Some(p)) => println!(
                "{} {}={p} {}",
                row.family,
                row.family.parameter_name(),
                metric_summary(rep)
            ),
            _ => println!("{} failed: {}", row.family, row.error.as_deref().unwrap_or("unknown")),
        }
    }
    partial(cmp.failed_points(), "sweep points")
}

fn partial(failed: usize, what: &str) -> CmdResult {
    if failed == 0 {
        Ok(())
    } else {
        Err(Failure::new(
            3,
            format!("{failed} {what} failed; see the report for details"),
        ))
    }
}
