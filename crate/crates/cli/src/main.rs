use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use log::info;

use waterways_core::compositing::{greedy_composite, BBox, CompositeOptions, ManifestProvider};
use waterways_core::evaluation::{
    evaluation_points, hit_rate_from_distances, hit_rates_to_csv, nearest_distances, read_requests, recall_requests,
    recall_to_csv, DistanceSummary, Metric, ReferenceIndex,
};
use waterways_core::features::{assemble_stack, CHANNEL_NAMES};
use waterways_core::geojson::{read_features, read_polylines};
use waterways_core::labels::{burn_vectors, labeled_geometries, weights_from_labels, FcodeWeightTable};
use waterways_core::pipeline::{self, parse_thresholds, PipelineConfig};
use waterways_core::raster::{binarize, read_ascii_grid, write_ascii_grid, GeoGrid};
use waterways_core::stream_order::assign_orders;
use waterways_core::thinning::thin_with_trace;
use waterways_core::vectorize::{read_graph, skeleton_to_graph, write_graph};
use waterways_core::{Error, Result, GRAPH_FORMAT_VERSION, REPORT_FORMAT_VERSION};

const BAND_NAMES: [&str; 4] = ["nir", "red", "green", "blue"];

#[derive(Parser)]
#[command(name = "waterways", about = "Waterway raster post-processing and evaluation")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Only log warnings and errors.
    #[arg(short, long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a cloud-free composite from a scene manifest.
    Composite(CompositeArgs),
    /// Assemble the ten model-input channels.
    Features(FeaturesArgs),
    /// Burn labeled hydrography into label, target and weight grids.
    RasterizeLabels(LabelArgs),
    /// Thin a waterway raster to a one-cell skeleton.
    Thin(ThinArgs),
    /// Trace a skeleton into a waterway graph.
    Vectorize(VectorizeArgs),
    /// Assign stream orders to a waterway graph.
    Order(OrderArgs),
    /// Compare waterways against reference lines.
    Evaluate(EvaluateArgs),
    /// Share of request points near a waterway, per country.
    Recall(RecallArgs),
    /// Thin, vectorize, order and evaluate from a config file.
    Pipeline(PipelineArgs),
}

#[derive(Args)]
struct CompositeArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// lonmin,latmin,lonmax,latmax
    #[arg(long, allow_hyphen_values = true)]
    bbox: String,
    /// Largest acceptable uncovered fraction.
    #[arg(long, default_value_t = 0.01)]
    threshold: f64,
    #[arg(long, default_value_t = 500.0)]
    buffer_m: f64,
    /// Output prefix.
    #[arg(long)]
    out: String,
}

#[derive(Args)]
struct FeaturesArgs {
    /// Transformed NIR, red, green and blue grids.
    #[arg(long, num_args = 4, value_names = ["NIR", "RED", "GREEN", "BLUE"])]
    nrgb: Vec<PathBuf>,
    /// Raw reflectance grids for the spectral indices.
    #[arg(long, num_args = 4, value_names = ["NIR", "RED", "GREEN", "BLUE"])]
    reflectance: Option<Vec<PathBuf>>,
    #[arg(long)]
    dem: PathBuf,
    #[arg(long)]
    out: String,
}

#[derive(Args)]
struct LabelArgs {
    #[arg(long)]
    geojson: PathBuf,
    /// Grid whose extent and cell size the labels take.
    #[arg(long)]
    like: PathBuf,
    /// `type = weight` overrides of the default table.
    #[arg(long)]
    weights: Option<PathBuf>,
    #[arg(long)]
    out: String,
}

#[derive(Args)]
struct ThinArgs {
    #[arg(long)]
    mask: PathBuf,
    #[arg(long)]
    dem: PathBuf,
    #[arg(long, default_value_t = pipeline::DEFAULT_THRESHOLD)]
    threshold: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct VectorizeArgs {
    #[arg(long)]
    skeleton: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct OrderArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    dem: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    candidate: PathBuf,
    #[arg(long)]
    reference: PathBuf,
    /// Hit thresholds in degrees, comma separated.
    #[arg(long, default_value = "0.002")]
    threshold: String,
    #[arg(long)]
    summary_out: Option<PathBuf>,
    /// Hit rates CSV; standard output when omitted.
    #[arg(long)]
    hits_out: Option<PathBuf>,
}

#[derive(Args)]
struct RecallArgs {
    #[arg(long)]
    requests: PathBuf,
    #[arg(long)]
    waterways: PathBuf,
    #[arg(long, default_value_t = 0.002)]
    threshold: f64,
    /// Recall CSV; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PipelineArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    mask: Option<PathBuf>,
    #[arg(long)]
    dem: Option<PathBuf>,
    #[arg(long)]
    reference: Option<PathBuf>,
    #[arg(long)]
    threshold: Option<f64>,
    /// Comma separated hit thresholds in degrees.
    #[arg(long)]
    eval_thresholds: Option<String>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

fn stage(name: &str, start: Instant, counts: &[(&str, usize)]) {
    let mut line = format!("stage={name} wall_ms={}", start.elapsed().as_millis());
    for (k, v) in counts {
        line.push_str(&format!(" {k}={v}"));
    }
    info!("{line}");
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn read_four(paths: &[PathBuf]) -> Result<[GeoGrid<f64>; 4]> {
    let grids: Vec<GeoGrid<f64>> = paths.iter().map(read_ascii_grid).collect::<Result<_>>()?;
    grids
        .try_into()
        .map_err(|_| Error::InvalidArgument("expected exactly four band grids".into()))
}

fn composite(a: &CompositeArgs) -> Result<()> {
    let start = Instant::now();
    let provider = ManifestProvider::open(&a.manifest)?;
    let bbox = BBox::parse(&a.bbox)?;
    let options = CompositeOptions {
        cloud_threshold: a.threshold,
        buffer_m: a.buffer_m,
    };
    let c = greedy_composite(&provider, &bbox, &options)?;
    for (i, name) in BAND_NAMES.iter().enumerate() {
        write_ascii_grid(&c.band_with_nodata(i), format!("{}_{name}.asc", a.out))?;
        write_ascii_grid(&c.reflectance[i], format!("{}_{name}_reflectance.asc", a.out))?;
    }
    write_ascii_grid(&c.coverage, format!("{}_coverage.asc", a.out))?;
    let scenes: String = c.accepted.iter().map(|id| format!("{id}\n")).collect();
    write_text(Path::new(&format!("{}_scenes.txt", a.out)), &scenes)?;
    let uncovered = c.coverage.cells().iter().filter(|&&v| v == 0).count();
    stage(
        "composite",
        start,
        &[("candidates", provider.len()), ("accepted", c.accepted.len()), ("uncovered_cells", uncovered)],
    );
    Ok(())
}

fn features(a: &FeaturesArgs) -> Result<()> {
    let start = Instant::now();
    let nrgb = read_four(&a.nrgb)?;
    let reflectance = a.reflectance.as_deref().map(read_four).transpose()?;
    let dem = read_ascii_grid(&a.dem)?;
    let stack = assemble_stack(&nrgb, reflectance.as_ref(), &dem)?;
    for (name, grid) in CHANNEL_NAMES.iter().zip(&stack.channels) {
        write_ascii_grid(grid, format!("{}_{name}.asc", a.out))?;
    }
    stage("features", start, &[("cells", stack.transform.len()), ("channels", stack.channels.len())]);
    Ok(())
}

fn rasterize_labels(a: &LabelArgs) -> Result<()> {
    let start = Instant::now();
    let table = match &a.weights {
        Some(p) => FcodeWeightTable::read(p)?,
        None => FcodeWeightTable::default(),
    };
    let like: GeoGrid<f64> = read_ascii_grid(&a.like)?;
    let geometries = labeled_geometries(&read_features(&a.geojson)?)?;
    let labels = burn_vectors(&geometries, like.transform(), &table)?;
    let (target, weight) = weights_from_labels(&labels, &table)?;
    write_ascii_grid(&labels, format!("{}_labels.asc", a.out))?;
    write_ascii_grid(&target, format!("{}_target.asc", a.out))?;
    write_ascii_grid(&weight, format!("{}_weight.asc", a.out))?;
    write_text(Path::new(&format!("{}_legend.txt", a.out)), &table.legend())?;
    let labeled = labels.cells().iter().filter(|&&v| v != 0).count();
    stage("rasterize-labels", start, &[("geometries", geometries.len()), ("labeled_cells", labeled)]);
    Ok(())
}

fn thin(a: &ThinArgs) -> Result<()> {
    let start = Instant::now();
    let mask = binarize(&read_ascii_grid(&a.mask)?, a.threshold);
    let dem = read_ascii_grid(&a.dem)?;
    let t = thin_with_trace(&mask, &dem)?;
    write_ascii_grid(&t.skeleton, &a.out)?;
    stage(
        "thin",
        start,
        &[
            ("waterway_cells", mask.count_ones()),
            ("removed", t.removed.len()),
            ("skeleton_cells", t.skeleton.count_ones()),
            ("stable_interior", t.stable_interior),
        ],
    );
    Ok(())
}

fn vectorize(a: &VectorizeArgs) -> Result<()> {
    let start = Instant::now();
    let skeleton: GeoGrid<u8> = read_ascii_grid(&a.skeleton)?;
    let g = skeleton_to_graph(&skeleton)?;
    write_graph(&a.out, &g)?;
    stage(
        "vectorize",
        start,
        &[("skeleton_cells", skeleton.count_ones()), ("segments", g.segments.len()), ("nodes", g.nodes.len())],
    );
    Ok(())
}

fn order(a: &OrderArgs) -> Result<()> {
    let start = Instant::now();
    let g = read_graph(&a.graph)?;
    let dem = read_ascii_grid(&a.dem)?;
    let ordered = assign_orders(&g, &dem)?;
    write_graph(&a.out, &ordered)?;
    let max = ordered.segments.iter().filter_map(|s| s.order).max().unwrap_or(0);
    stage("order", start, &[("segments", ordered.segments.len()), ("max_order", max as usize)]);
    Ok(())
}

fn evaluate(a: &EvaluateArgs) -> Result<()> {
    let start = Instant::now();
    let thresholds = parse_thresholds(&a.threshold)?;
    let graph = read_graph(&a.candidate)?;
    let reference = read_polylines(&a.reference)?;
    let points = evaluation_points(&graph)?;
    if points.is_empty() {
        return Err(Error::Empty(format!("{} yields no evaluation points", a.candidate.display())));
    }
    let bucket = thresholds.iter().copied().fold(f64::MIN, f64::max);
    let index = ReferenceIndex::new(&reference, bucket)?;
    let degrees = nearest_distances(&points, &index, Metric::Degrees)?;
    let rates = thresholds
        .iter()
        .map(|&t| hit_rate_from_distances(&points, &degrees, t))
        .collect::<Result<Vec<_>>>()?;
    let csv = hit_rates_to_csv(&rates);
    match &a.hits_out {
        Some(p) => write_text(p, &csv)?,
        None => print!("{csv}"),
    }
    if let Some(p) = &a.summary_out {
        let meters = nearest_distances(&points, &index, Metric::Meters)?;
        write_text(p, &DistanceSummary::from_distances(&points, &meters).to_csv())?;
    }
    stage("evaluate", start, &[("points", points.len()), ("reference_lines", reference.len())]);
    Ok(())
}

fn recall(a: &RecallArgs) -> Result<()> {
    let start = Instant::now();
    let requests = read_requests(&a.requests)?;
    let waterways = read_polylines(&a.waterways)?;
    let r = recall_requests(&requests, &waterways, a.threshold)?;
    let csv = recall_to_csv(&r);
    match &a.out {
        Some(p) => write_text(p, &csv)?,
        None => print!("{csv}"),
    }
    let captured = r.values().map(|c| c.captured).sum();
    stage("recall", start, &[("requests", requests.len()), ("captured", captured), ("countries", r.len())]);
    Ok(())
}

fn run_pipeline(a: &PipelineArgs) -> Result<()> {
    let start = Instant::now();
    let mut config = PipelineConfig::read(&a.config)?;
    if let Some(p) = &a.mask {
        config.mask = p.clone();
    }
    if let Some(p) = &a.dem {
        config.dem = p.clone();
    }
    if let Some(p) = &a.reference {
        config.reference = p.clone();
    }
    if let Some(t) = a.threshold {
        config.threshold = t;
    }
    if let Some(t) = &a.eval_thresholds {
        config.eval_thresholds = parse_thresholds(t)?;
    }
    if let Some(p) = &a.out_dir {
        config.out_dir = p.clone();
    }
    let reports = pipeline::run(&config)?;
    stage("pipeline", start, &[("stages", reports.len())]);
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Composite(a) => composite(a),
        Command::Features(a) => features(a),
        Command::RasterizeLabels(a) => rasterize_labels(a),
        Command::Thin(a) => thin(a),
        Command::Vectorize(a) => vectorize(a),
        Command::Order(a) => order(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Recall(a) => recall(a),
        Command::Pipeline(a) => run_pipeline(a),
    }
}

fn init_logging(quiet: bool) {
    let level = if quiet { log::LevelFilter::Warn } else { log::LevelFilter::Info };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_env("WATERWAYS_LOG")
        .format(|buf, record| match record.level() {
            log::Level::Info => writeln!(buf, "{}", record.args()),
            level => writeln!(buf, "{}: {}", level.as_str().to_lowercase(), record.args()),
        })
        .target(env_logger::Target::Stderr)
        .init();
}

fn main() -> ExitCode {
    let version: &'static str = Box::leak(
        format!(
            "{} (graph geojson v{GRAPH_FORMAT_VERSION}, report csv v{REPORT_FORMAT_VERSION}, esri ascii grid)",
            env!("CARGO_PKG_VERSION")
        )
        .into_boxed_str(),
    );
    let matches = match Cli::command().version(version).try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    init_logging(cli.quiet);

    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: cannot start {jobs} worker threads: {e}");
            return ExitCode::from(2);
        }
    }

    match std::panic::catch_unwind(|| dispatch(&cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input_error() { 1 } else { 2 })
        }
        Err(_) => ExitCode::from(2),
    }
}
