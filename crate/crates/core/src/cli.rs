//! The `cfgauss` command line: `cluster`, `sweep`, `scale` and `eval`.
//!
//! Every subcommand loads its dataset once, runs the two phases as often as
//! it needs, and writes either JSON (full precision) or CSV (six significant
//! digits, fixed headers).

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::cf_tree::{CfTree, CfTreeParams, MicroCluster};
use crate::dataio::{self, CsvOptions, Dataset};
use crate::error::{Error, Result};
use crate::gaussian_refine::{self, RefineParams};
use crate::metrics::{self, MetricsSummary};

#[derive(Debug, Parser)]
#[command(
    name = "cfgauss",
    version,
    about = "CF-tree micro-clustering with Gaussian density refinement"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the tree, refine its micro-clusters and write a report.
    Cluster(ClusterArgs),
    /// Micro-cluster counts over a range of diameter thresholds.
    Sweep(SweepArgs),
    /// Wall-clock time on the dataset appended to itself k = 1..K times.
    Scale(ScaleArgs),
    /// Score an existing assignment against the dataset's class labels.
    Eval(EvalArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// Header-less UCI abalone.data: seven continuous features, Rings as label.
    Abalone,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Input CSV file.
    #[arg(long)]
    pub input: PathBuf,
    /// Comma-separated feature columns.
    #[arg(long, value_delimiter = ',')]
    pub features: Option<Vec<String>>,
    /// Class-label column, used for validity metrics.
    #[arg(long)]
    pub label: Option<String>,
    /// The file has no header row.
    #[arg(long)]
    pub no_header: bool,
    /// Comma-separated names for the columns of a header-less file.
    #[arg(long, value_delimiter = ',')]
    pub column_names: Option<Vec<String>>,
    /// Fill in column layout, features and label for a known dataset.
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
}

#[derive(Debug, Clone, Args)]
pub struct AlgoArgs {
    /// Maximum entries per tree node (B).
    #[arg(long, default_value_t = 8)]
    pub branching: usize,
    /// Leaf-entry diameter threshold (T).
    #[arg(long, default_value_t = 0.27)]
    pub threshold: f64,
    /// Normalized-density split threshold.
    #[arg(long, default_value_t = RefineParams::DEFAULT_RHO)]
    pub rho: f64,
    /// Smallest micro-cluster considered for splitting [default: features + 2].
    #[arg(long)]
    pub n_min: Option<usize>,
    /// Covariance ridge relative to the mean variance.
    #[arg(long, default_value_t = RefineParams::DEFAULT_EPSILON_SCALE)]
    pub epsilon_scale: f64,
    /// Skip the density refinement phase.
    #[arg(long)]
    pub no_refine: bool,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output file [default: stdout].
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Args)]
pub struct ClusterArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub algo: AlgoArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub algo: AlgoArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[arg(long, default_value_t = 0.1)]
    pub t_min: f64,
    #[arg(long, default_value_t = 1.0)]
    pub t_max: f64,
    #[arg(long, default_value_t = 0.1)]
    pub t_step: f64,
}

#[derive(Debug, Clone, Args)]
pub struct ScaleArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub algo: AlgoArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Largest replication factor K.
    #[arg(long, default_value_t = 8)]
    pub max_multiple: usize,
    /// Timed runs per multiple; the fastest is reported.
    #[arg(long, default_value_t = 3)]
    pub repeats: usize,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Assignment file: a `cluster` JSON report or a `row,cluster` CSV.
    #[arg(long)]
    pub assignments: PathBuf,
    /// Also write the per-(cluster, class) precision/recall CSV here.
    #[arg(long)]
    pub table_output: Option<PathBuf>,
}

/// Fully resolved settings for one pipeline configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub input: PathBuf,
    pub csv: CsvOptions,
    pub tree: CfTreeParams,
    pub refine: RefineParams,
    pub refine_enabled: bool,
    pub output: Option<PathBuf>,
    pub format: Format,
}

impl InputArgs {
    fn csv_options(&self) -> Result<CsvOptions> {
        let mut opts = match self.preset {
            Some(Preset::Abalone) => CsvOptions::abalone(),
            None => CsvOptions {
                has_header: true,
                ..CsvOptions::default()
            },
        };
        if let Some(f) = &self.features {
            opts.features = f.clone();
        }
        if self.label.is_some() {
            opts.label = self.label.clone();
        }
        if self.no_header {
            opts.has_header = false;
        }
        if self.column_names.is_some() {
            opts.column_names = self.column_names.clone();
        }
        if opts.features.is_empty() {
            return Err(Error::InvalidParameter(
                "--features is required (or use --preset)".into(),
            ));
        }
        if opts.has_header && opts.column_names.is_some() {
            return Err(Error::InvalidParameter(
                "--column-names only applies together with --no-header".into(),
            ));
        }
        Ok(opts)
    }
}

impl RunConfig {
    pub fn new(input: &InputArgs, algo: &AlgoArgs, output: &OutputArgs, default_format: Format) -> Result<Self> {
        let csv = input.csv_options()?;
        let tree = CfTreeParams::new(algo.branching, algo.threshold)?;
        let refine = RefineParams {
            rho: algo.rho,
            n_min: algo.n_min.unwrap_or(csv.features.len() + 2),
            epsilon_scale: algo.epsilon_scale,
        };
        refine.validate()?;
        Ok(Self {
            input: input.input.clone(),
            csv,
            tree,
            refine,
            refine_enabled: !algo.no_refine,
            output: output.output.clone(),
            format: output.format.unwrap_or(default_format),
        })
    }

    pub fn load(&self) -> Result<Dataset> {
        dataio::load_csv(&self.input, &self.csv)
    }

    fn refine_params(&self) -> Option<&RefineParams> {
        self.refine_enabled.then_some(&self.refine)
    }
}

/// Micro-clusters from both phases plus their timings.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub phase1: Vec<MicroCluster>,
    pub phase2: Vec<MicroCluster>,
    pub phase1_ms: f64,
    pub phase2_ms: f64,
}

impl PipelineOutput {
    pub fn wall_ms(&self) -> f64 {
        self.phase1_ms + self.phase2_ms
    }
}

/// Runs phase one and, when `refine` is given, phase two.
pub fn run_pipeline(dataset: &Dataset, tree: &CfTreeParams, refine: Option<&RefineParams>) -> Result<PipelineOutput> {
    let start = Instant::now();
    let built = CfTree::build(*tree, dataset.rows())?;
    let phase1 = built.leaf_micro_clusters();
    let phase1_ms = elapsed_ms(start);

    let start = Instant::now();
    let (phase2, phase2_ms) = match refine {
        Some(p) => {
            let refined = gaussian_refine::refine(&phase1, dataset, p)?;
            (refined, elapsed_ms(start))
        }
        None => (phase1.clone(), 0.0),
    };
    Ok(PipelineOutput {
        phase1,
        phase2,
        phase1_ms,
        phase2_ms,
    })
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// Cluster id per row (clusters numbered in list order).
pub fn assignment_of(clusters: &[MicroCluster], rows: usize) -> Vec<usize> {
    let mut out = vec![usize::MAX; rows];
    for (id, mc) in clusters.iter().enumerate() {
        for &r in &mc.members {
            out[r] = id;
        }
    }
    debug_assert!(out.iter().all(|&c| c != usize::MAX));
    out
}

fn metrics_for(assignment: &[usize], labels: &[usize]) -> Result<MetricsSummary> {
    let table = metrics::build_contingency(assignment.iter().copied().enumerate(), labels)?;
    metrics::summarize(&table)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsEcho {
    pub input: String,
    pub features: Vec<String>,
    pub label: Option<String>,
    pub branching_factor: usize,
    pub threshold: f64,
    pub refine: bool,
    pub rho: f64,
    pub n_min: usize,
    pub epsilon_scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub id: usize,
    pub size: usize,
    pub centroid: Vec<f64>,
    pub radius: f64,
    pub diameter: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub phase1_ms: f64,
    pub phase2_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringReport {
    pub params: ParamsEcho,
    pub rows: usize,
    pub phase1_cluster_count: usize,
    pub phase2_cluster_count: usize,
    pub clusters: Vec<ClusterSummary>,
    /// Final cluster id of every input row, indexed by row.
    pub assignment: Vec<usize>,
    /// Scores of the final clustering, when the input is labeled.
    pub metrics: Option<MetricsSummary>,
    /// Scores of the phase-one clustering, when the input is labeled.
    pub phase1_metrics: Option<MetricsSummary>,
    pub timings: Timings,
}

pub fn cmd_cluster(cfg: &RunConfig) -> Result<ClusteringReport> {
    let dataset = cfg.load()?;
    cluster_report(cfg, &dataset)
}

/// Runs the pipeline on an already-loaded dataset and assembles the report.
pub fn cluster_report(cfg: &RunConfig, dataset: &Dataset) -> Result<ClusteringReport> {
    let out = run_pipeline(dataset, &cfg.tree, cfg.refine_params())?;
    let assignment = assignment_of(&out.phase2, dataset.len());
    let (metrics, phase1_metrics) = match dataset.class_ids() {
        Some(labels) => (
            Some(metrics_for(&assignment, labels)?),
            Some(metrics_for(&assignment_of(&out.phase1, dataset.len()), labels)?),
        ),
        None => (None, None),
    };
    let clusters = out
        .phase2
        .iter()
        .enumerate()
        .map(|(id, mc)| {
            Ok(ClusterSummary {
                id,
                size: mc.len(),
                centroid: mc.cf.centroid()?,
                radius: mc.cf.radius()?,
                diameter: mc.cf.diameter()?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ClusteringReport {
        params: ParamsEcho {
            input: cfg.input.display().to_string(),
            features: cfg.csv.features.clone(),
            label: cfg.csv.label.clone(),
            branching_factor: cfg.tree.branching_factor,
            threshold: cfg.tree.threshold,
            refine: cfg.refine_enabled,
            rho: cfg.refine.rho,
            n_min: cfg.refine.n_min,
            epsilon_scale: cfg.refine.epsilon_scale,
        },
        rows: dataset.len(),
        phase1_cluster_count: out.phase1.len(),
        phase2_cluster_count: out.phase2.len(),
        clusters,
        assignment,
        metrics,
        phase1_metrics,
        timings: Timings {
            phase1_ms: out.phase1_ms,
            phase2_ms: out.phase2_ms,
        },
    })
}

pub fn write_report<W: Write>(report: &ClusteringReport, format: Format, mut w: W) -> io::Result<()> {
    match format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut w, report)?;
            writeln!(w)
        }
        Format::Csv => {
            writeln!(w, "row,cluster")?;
            for (row, cluster) in report.assignment.iter().enumerate() {
                writeln!(w, "{row},{cluster}")?;
            }
            Ok(())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub threshold: f64,
    pub phase1_count: usize,
    pub phase2_count: usize,
    pub ratio: f64,
}

/// Threshold grid `t_min, t_min + t_step, ...` up to `t_max` inclusive.
pub fn threshold_grid(t_min: f64, t_max: f64, t_step: f64) -> Result<Vec<f64>> {
    if !(t_min.is_finite() && t_max.is_finite() && t_step.is_finite()) || t_min <= 0.0 || t_max < t_min || t_step <= 0.0
    {
        return Err(Error::InvalidParameter(format!(
            "threshold range needs 0 < t-min <= t-max and t-step > 0, got {t_min}..{t_max} step {t_step}"
        )));
    }
    let steps = ((t_max - t_min) / t_step + 1e-9).floor() as usize;
    Ok((0..=steps)
        .map(|i| ((t_min + i as f64 * t_step) * 1e12).round() / 1e12)
        .collect())
}

pub fn cmd_sweep(cfg: &RunConfig, dataset: &Dataset, thresholds: &[f64]) -> Result<Vec<SweepRow>> {
    thresholds
        .iter()
        .map(|&t| {
            let tree = CfTreeParams::new(cfg.tree.branching_factor, t)?;
            let out = run_pipeline(dataset, &tree, cfg.refine_params())?;
            Ok(SweepRow {
                threshold: t,
                phase1_count: out.phase1.len(),
                phase2_count: out.phase2.len(),
                ratio: out.phase2.len() as f64 / out.phase1.len().max(1) as f64,
            })
        })
        .collect()
}

pub fn write_sweep<W: Write>(rows: &[SweepRow], format: Format, mut w: W) -> io::Result<()> {
    match format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut w, rows)?;
            writeln!(w)
        }
        Format::Csv => {
            writeln!(w, "threshold,phase1_count,phase2_count,ratio")?;
            for r in rows {
                writeln!(
                    w,
                    "{},{},{},{}",
                    sig6(r.threshold),
                    r.phase1_count,
                    r.phase2_count,
                    sig6(r.ratio)
                )?;
            }
            Ok(())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScaleRow {
    pub multiple: usize,
    pub rows: usize,
    pub wall_ms: f64,
    /// `wall_ms(k) - wall_ms(k - 1)`; absent for the first multiple.
    pub delta_ms: Option<f64>,
}

pub fn cmd_scale(cfg: &RunConfig, dataset: &Dataset, max_multiple: usize, repeats: usize) -> Result<Vec<ScaleRow>> {
    validate_scale(max_multiple, repeats)?;
    // Untimed warm-up: thread pool start-up and first-touch allocation.
    run_pipeline(dataset, &cfg.tree, cfg.refine_params())?;
    let mut rows: Vec<ScaleRow> = Vec::with_capacity(max_multiple);
    for k in 1..=max_multiple {
        let data = dataio::replicate(dataset, k)?;
        let mut best = f64::INFINITY;
        for _ in 0..repeats {
            let out = run_pipeline(&data, &cfg.tree, cfg.refine_params())?;
            best = best.min(out.wall_ms());
        }
        let delta_ms = rows.last().map(|prev| best - prev.wall_ms);
        rows.push(ScaleRow {
            multiple: k,
            rows: data.len(),
            wall_ms: best,
            delta_ms,
        });
    }
    Ok(rows)
}

fn validate_scale(max_multiple: usize, repeats: usize) -> Result<()> {
    if max_multiple < 2 {
        return Err(Error::InvalidParameter(format!(
            "--max-multiple must be >= 2, got {max_multiple}"
        )));
    }
    if repeats < 1 {
        return Err(Error::InvalidParameter("--repeats must be >= 1".into()));
    }
    Ok(())
}

pub fn write_scale<W: Write>(rows: &[ScaleRow], format: Format, mut w: W) -> io::Result<()> {
    match format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut w, rows)?;
            writeln!(w)
        }
        Format::Csv => {
            writeln!(w, "multiple,rows,wall_ms,delta_ms")?;
            for r in rows {
                let delta = r.delta_ms.map(sig6).unwrap_or_default();
                writeln!(w, "{},{},{},{}", r.multiple, r.rows, sig6(r.wall_ms), delta)?;
            }
            Ok(())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairScore {
    pub cluster: usize,
    pub class: String,
    pub count: u64,
    pub precision: f64,
    pub recall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub clusters: usize,
    pub classes: usize,
    pub metrics: MetricsSummary,
    /// Non-empty (cluster, class) cells only.
    pub table: Vec<PairScore>,
}

#[derive(Deserialize)]
struct AssignmentField {
    assignment: Vec<usize>,
}

/// Reads `(row, cluster)` pairs from a JSON report or a `row,cluster` CSV.
pub fn read_assignments(path: &Path) -> Result<Vec<(usize, usize)>> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    if text.trim_start().starts_with('{') {
        let parsed: AssignmentField = serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        return Ok(parsed.assignment.into_iter().enumerate().collect());
    }
    let opts = CsvOptions {
        features: vec!["row".into(), "cluster".into()],
        label: None,
        has_header: true,
        column_names: None,
    };
    let table = dataio::read_csv(text.as_bytes(), path, &opts)?;
    table
        .rows()
        .zip(1u64..)
        .map(|(r, i)| {
            let as_index = |v: f64, column: &str| {
                if v >= 0.0 && v.fract() == 0.0 {
                    Ok(v as usize)
                } else {
                    Err(Error::BadCell {
                        path: path.to_path_buf(),
                        line: i + 1,
                        column: column.into(),
                        value: v.to_string(),
                    })
                }
            };
            Ok((as_index(r[0], "row")?, as_index(r[1], "cluster")?))
        })
        .collect()
}

/// Checks that `pairs` assigns every dataset row exactly once.
pub fn check_coverage(pairs: &[(usize, usize)], rows: usize) -> Result<()> {
    let mut seen = vec![false; rows];
    for &(row, _) in pairs {
        match seen.get_mut(row) {
            None => return Err(Error::UnknownRow { row, rows }),
            Some(true) => return Err(Error::DuplicateAssignment { row }),
            Some(s) => *s = true,
        }
    }
    let missing: Vec<usize> = seen.iter().enumerate().filter(|(_, s)| !**s).map(|(i, _)| i).collect();
    if !missing.is_empty() {
        return Err(Error::MissingAssignments {
            count: missing.len(),
            preview: missing.into_iter().take(10).collect(),
        });
    }
    Ok(())
}

pub fn cmd_eval(pairs: &[(usize, usize)], dataset: &Dataset) -> Result<EvalReport> {
    let labels = dataset.labels().ok_or(Error::NoLabels)?;
    check_coverage(pairs, dataset.len())?;
    let table = metrics::build_contingency(pairs.iter().copied(), &labels.ids)?;
    let pr = metrics::precision_recall(&table)?;
    let summary = metrics::summarize(&table)?;
    let mut cells = Vec::new();
    for (i, row) in table.counts.iter().enumerate() {
        for (j, &count) in row.iter().enumerate() {
            if count > 0 {
                cells.push(PairScore {
                    cluster: table.cluster_ids[i],
                    class: labels.names[table.class_ids[j]].clone(),
                    count,
                    precision: pr.precision[i][j],
                    recall: pr.recall[i][j],
                });
            }
        }
    }
    Ok(EvalReport {
        clusters: table.n_clusters(),
        classes: table.n_classes(),
        metrics: summary,
        table: cells,
    })
}

pub fn write_pair_table<W: Write>(cells: &[PairScore], mut w: W) -> io::Result<()> {
    writeln!(w, "cluster,class,count,precision,recall")?;
    for c in cells {
        writeln!(
            w,
            "{},{},{},{},{}",
            c.cluster,
            c.class,
            c.count,
            sig6(c.precision),
            sig6(c.recall)
        )?;
    }
    Ok(())
}

pub fn write_eval<W: Write>(report: &EvalReport, format: Format, mut w: W) -> io::Result<()> {
    match format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut w, report)?;
            writeln!(w)
        }
        Format::Csv => write_pair_table(&report.table, w),
    }
}

/// Rounds to six significant digits and prints the shortest exact form.
pub fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let rounded: f64 = format!("{x:.5e}").parse().expect("formatted float parses");
    format!("{rounded}")
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|source| Error::Io {
            path: p.to_path_buf(),
            source,
        })?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn emit<F>(path: Option<&Path>, f: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> io::Result<()>,
{
    let mut w = open_output(path)?;
    let io_err = |source| Error::Io {
        path: path.map_or_else(|| PathBuf::from("<stdout>"), Path::to_path_buf),
        source,
    };
    f(&mut w).map_err(io_err)?;
    w.flush().map_err(io_err)
}

/// Parses and executes a command line; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.kind().exit_code()
        }
    }
}

pub fn execute(command: &Command) -> Result<()> {
    match command {
        Command::Cluster(a) => {
            let cfg = RunConfig::new(&a.input, &a.algo, &a.output, Format::Json)?;
            let report = cmd_cluster(&cfg)?;
            emit(cfg.output.as_deref(), |w| write_report(&report, cfg.format, w))
        }
        Command::Sweep(a) => {
            let cfg = RunConfig::new(&a.input, &a.algo, &a.output, Format::Csv)?;
            let grid = threshold_grid(a.t_min, a.t_max, a.t_step)?;
            let dataset = cfg.load()?;
            let rows = cmd_sweep(&cfg, &dataset, &grid)?;
            emit(cfg.output.as_deref(), |w| write_sweep(&rows, cfg.format, w))
        }
        Command::Scale(a) => {
            let cfg = RunConfig::new(&a.input, &a.algo, &a.output, Format::Csv)?;
            validate_scale(a.max_multiple, a.repeats)?;
            let dataset = cfg.load()?;
            let rows = cmd_scale(&cfg, &dataset, a.max_multiple, a.repeats)?;
            emit(cfg.output.as_deref(), |w| write_scale(&rows, cfg.format, w))
        }
        Command::Eval(a) => {
            let opts = a.input.csv_options()?;
            if opts.label.is_none() {
                return Err(Error::InvalidParameter("eval needs --label (or --preset)".into()));
            }
            let format = a.output.format.unwrap_or(Format::Json);
            let dataset = dataio::load_csv(&a.input.input, &opts)?;
            let pairs = read_assignments(&a.assignments)?;
            let report = cmd_eval(&pairs, &dataset)?;
            if let Some(p) = &a.table_output {
                emit(Some(p), |w| write_pair_table(&report.table, w))?;
            }
            emit(a.output.output.as_deref(), |w| write_eval(&report, format, w))
        }
    }
}
