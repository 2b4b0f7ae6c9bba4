//! Thin, vectorize, order and evaluate in one run.

use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::error::{Error, Result};
use crate::evaluation::{
    evaluation_points, hit_rate_from_distances, hit_rates_to_csv, nearest_distances, DistanceSummary, Metric,
    ReferenceIndex,
};
use crate::geojson::read_polylines;
use crate::kv::KeyValues;
use crate::raster::{binarize, read_ascii_grid, write_ascii_grid, GeoGrid};
use crate::stream_order::assign_orders;
use crate::thinning::thin_with_trace;
use crate::vectorize::{skeleton_to_graph, write_graph};

pub const SKELETON_FILE: &str = "skeleton.asc";
pub const GRAPH_FILE: &str = "waterways.geojson";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const HIT_RATES_FILE: &str = "hit_rates.csv";

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// Probability or binary waterway raster.
    pub mask: PathBuf,
    pub dem: PathBuf,
    /// Reference waterways as GeoJSON.
    pub reference: PathBuf,
    pub threshold: f64,
    /// Hit-rate thresholds in degrees.
    pub eval_thresholds: Vec<f64>,
    pub out_dir: PathBuf,
}

pub const DEFAULT_THRESHOLD: f64 = 0.5;
pub const DEFAULT_EVAL_THRESHOLDS: [f64; 2] = [0.001, 0.002];

pub fn parse_thresholds(s: &str) -> Result<Vec<f64>> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| *v > 0.0 && v.is_finite())
                .ok_or_else(|| Error::InvalidArgument(format!("threshold {:?} is not a positive number", t.trim())))
        })
        .collect::<Result<_>>()?;
    if v.is_empty() {
        return Err(Error::InvalidArgument("no thresholds given".into()));
    }
    Ok(v)
}

impl PipelineConfig {
    /// Reads a `key = value` config. Relative paths resolve against the
    /// config file's directory.
    pub fn from_kv(kv: &KeyValues, base: &Path, context: &str) -> Result<Self> {
        const KEYS: [&str; 6] = ["mask", "dem", "reference", "threshold", "eval_thresholds", "out_dir"];
        if let Some((k, _, line)) = kv.entries.iter().find(|(k, _, _)| !KEYS.contains(&k.as_str())) {
            return Err(Error::parse(context, *line, format!("unknown key {k:?}")));
        }
        let path = |key: &str| -> Result<PathBuf> {
            let v = kv
                .get(key)
                .ok_or_else(|| Error::parse(context, 0, format!("missing required key {key:?}")))?;
            Ok(base.join(v))
        };
        let threshold = match kv.get("threshold") {
            None => DEFAULT_THRESHOLD,
            Some(v) => v
                .parse()
                .ok()
                .filter(|t: &f64| t.is_finite())
                .ok_or_else(|| Error::parse(context, kv.line_of("threshold"), format!("threshold {v:?} is not a number")))?,
        };
        let eval_thresholds = match kv.get("eval_thresholds") {
            None => DEFAULT_EVAL_THRESHOLDS.to_vec(),
            Some(v) => parse_thresholds(v).map_err(|e| Error::parse(context, kv.line_of("eval_thresholds"), e.to_string()))?,
        };
        Ok(PipelineConfig {
            mask: path("mask")?,
            dem: path("dem")?,
            reference: path("reference")?,
            threshold,
            eval_thresholds,
            out_dir: path("out_dir")?,
        })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let kv = KeyValues::read(path)?;
        let base = path.parent().unwrap_or(Path::new(""));
        Self::from_kv(&kv, base, &path.display().to_string())
    }
}

/// Per-stage timing and counts.
#[derive(Debug, Clone, PartialEq)]
pub struct StageReport {
    pub stage: &'static str,
    pub wall_ms: u128,
    pub counts: Vec<(&'static str, usize)>,
}

impl StageReport {
    pub fn log_line(&self) -> String {
        let mut s = format!("stage={} wall_ms={}", self.stage, self.wall_ms);
        for (k, v) in &self.counts {
            s.push_str(&format!(" {k}={v}"));
        }
        s
    }
}

fn timed<T>(
    stage: &'static str,
    reports: &mut Vec<StageReport>,
    f: impl FnOnce() -> Result<(T, Vec<(&'static str, usize)>)>,
) -> Result<T> {
    let start = Instant::now();
    let (value, counts) = f()?;
    let report = StageReport {
        stage,
        wall_ms: start.elapsed().as_millis(),
        counts,
    };
    log::info!("{}", report.log_line());
    reports.push(report);
    Ok(value)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn run(config: &PipelineConfig) -> Result<Vec<StageReport>> {
    let mut reports = Vec::new();
    let out = &config.out_dir;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;

    let (mask, dem) = timed("read", &mut reports, || {
        let probability: GeoGrid<f64> = read_ascii_grid(&config.mask)?;
        let dem: GeoGrid<f64> = read_ascii_grid(&config.dem)?;
        let mask = binarize(&probability, config.threshold);
        let n = mask.count_ones();
        Ok(((mask, dem), vec![("cells", probability.cells().len()), ("waterway_cells", n)]))
    })?;

    let skeleton = timed("thin", &mut reports, || {
        let t = thin_with_trace(&mask, &dem)?;
        write_ascii_grid(&t.skeleton, out.join(SKELETON_FILE))?;
        let counts = vec![
            ("removed", t.removed.len()),
            ("skeleton_cells", t.skeleton.count_ones()),
            ("stable_interior", t.stable_interior),
        ];
        Ok((t.skeleton, counts))
    })?;

    let graph = timed("vectorize", &mut reports, || {
        let g = skeleton_to_graph(&skeleton)?;
        let counts = vec![("segments", g.segments.len()), ("nodes", g.nodes.len())];
        Ok((g, counts))
    })?;

    let graph = timed("order", &mut reports, || {
        let g = assign_orders(&graph, &dem)?;
        write_graph(out.join(GRAPH_FILE), &g)?;
        let max = g.segments.iter().filter_map(|s| s.order).max().unwrap_or(0) as usize;
        Ok((g, vec![("segments", graph.segments.len()), ("max_order", max)]))
    })?;

    timed("evaluate", &mut reports, || {
        let reference = read_polylines(&config.reference)?;
        let points = evaluation_points(&graph)?;
        if points.is_empty() {
            return Err(Error::Empty("the skeleton yields no evaluation points".into()));
        }
        let bucket = config.eval_thresholds.iter().copied().fold(f64::MIN, f64::max);
        let index = ReferenceIndex::new(&reference, bucket)?;
        let degrees = nearest_distances(&points, &index, Metric::Degrees)?;
        let meters = nearest_distances(&points, &index, Metric::Meters)?;
        write_text(&out.join(SUMMARY_FILE), &DistanceSummary::from_distances(&points, &meters).to_csv())?;
        let rates = config
            .eval_thresholds
            .iter()
            .map(|&t| hit_rate_from_distances(&points, &degrees, t))
            .collect::<Result<Vec<_>>>()?;
        write_text(&out.join(HIT_RATES_FILE), &hit_rates_to_csv(&rates))?;
        Ok(((), vec![("points", points.len()), ("reference_lines", reference.len())]))
    })?;
    Ok(reports)
}
