//! Distance of generated waterways to reference data, and recall of
//! request points.

mod index;
mod recall;
mod summary;

pub use index::{meter_scale, point_to_polyline_distance, Metric, ReferenceIndex};
pub use recall::{parse_requests, read_requests, recall_requests, recall_to_csv, CountryRecall, RequestPoint};
pub use summary::{distance_summary, quantile, DistanceStats, DistanceSummary, QUANTILES};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geojson::Coord;
use crate::stream_order::{order_category, OrderCategory};
use crate::vectorize::{inner_points, WaterwayGraph};

/// An evaluation point and the order category of its segment, if ordered.
pub type EvalPoint = (Coord, Option<OrderCategory>);

/// Inner points of every segment, tagged with the segment's category.
pub fn evaluation_points(graph: &WaterwayGraph) -> Result<Vec<EvalPoint>> {
    let mut out = Vec::new();
    for s in &graph.segments {
        let category = s.order.map(|o| order_category(i64::from(o))).transpose()?;
        out.extend(inner_points(s).into_iter().map(|p| (p, category)));
    }
    Ok(out)
}

/// Columns of the per-category reports, `None` being all points.
pub const COLUMNS: [Option<OrderCategory>; 4] =
    [Some(OrderCategory::O1), Some(OrderCategory::O2), Some(OrderCategory::O3Plus), None];

pub fn column_label(column: Option<OrderCategory>) -> &'static str {
    column.map_or("all", OrderCategory::label)
}

fn in_column(point: &EvalPoint, column: Option<OrderCategory>) -> bool {
    column.is_none() || point.1 == column
}

/// Hits and totals for one column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct HitCount {
    pub hits: usize,
    pub total: usize,
}

impl HitCount {
    pub fn rate(&self) -> Option<f64> {
        (self.total > 0).then(|| self.hits as f64 / self.total as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HitRates {
    pub threshold: f64,
    /// In [`COLUMNS`] order.
    pub columns: [HitCount; 4],
}

/// Nearest reference distance in degrees for every point.
pub fn nearest_distances(points: &[EvalPoint], index: &ReferenceIndex, metric: Metric) -> Result<Vec<f64>> {
    points.par_iter().map(|(p, _)| index.nearest(*p, metric)).collect()
}

/// Share of points whose nearest reference is strictly closer than
/// `threshold` degrees.
pub fn hit_rate(points: &[EvalPoint], index: &ReferenceIndex, threshold: f64) -> Result<HitRates> {
    let d = nearest_distances(points, index, Metric::Degrees)?;
    hit_rate_from_distances(points, &d, threshold)
}

pub fn hit_rate_from_distances(points: &[EvalPoint], degrees: &[f64], threshold: f64) -> Result<HitRates> {
    if threshold.is_nan() || threshold <= 0.0 {
        return Err(Error::InvalidArgument(format!("threshold must be positive, got {threshold}")));
    }
    if points.is_empty() {
        return Err(Error::Empty("no evaluation points".into()));
    }
    let mut columns = [HitCount::default(); 4];
    for (point, &d) in points.iter().zip(degrees) {
        for (count, column) in columns.iter_mut().zip(COLUMNS) {
            if in_column(point, column) {
                count.total += 1;
                count.hits += usize::from(d < threshold);
            }
        }
    }
    Ok(HitRates { threshold, columns })
}

/// `threshold,1,2,3,all` rows, rates to four decimals, `NA` for empty columns.
pub fn hit_rates_to_csv(rates: &[HitRates]) -> String {
    let mut out = String::from("threshold");
    for c in COLUMNS {
        out.push(',');
        out.push_str(column_label(c));
    }
    out.push('\n');
    for r in rates {
        out.push_str(&r.threshold.to_string());
        for c in &r.columns {
            out.push(',');
            match c.rate() {
                Some(v) => out.push_str(&format!("{v:.4}")),
                None => out.push_str("NA"),
            }
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts() -> Vec<EvalPoint> {
        vec![
            ((0.0, 0.0005), Some(OrderCategory::O1)),
            ((0.0, 0.0015), Some(OrderCategory::O1)),
            ((0.0, 0.01), Some(OrderCategory::O2)),
            ((0.0, 0.001), None),
        ]
    }

    #[test]
    fn hit_rates_per_column() {
        let idx = ReferenceIndex::new(&[vec![(-1.0, 0.0), (1.0, 0.0)]], 0.002).unwrap();
        let r = hit_rate(&pts(), &idx, 0.001).unwrap();
        assert_eq!(r.columns[0], HitCount { hits: 1, total: 2 });
        assert_eq!(r.columns[1], HitCount { hits: 0, total: 1 });
        assert_eq!(r.columns[2].rate(), None);
        // strict: a point exactly at the threshold misses
        assert_eq!(r.columns[3], HitCount { hits: 1, total: 4 });
        let csv = hit_rates_to_csv(&[r, hit_rate(&pts(), &idx, 0.002).unwrap()]);
        assert_eq!(csv, "threshold,1,2,3,all\n0.001,0.5000,0.0000,NA,0.2500\n0.002,1.0000,0.0000,NA,0.7500\n");
    }

    #[test]
    fn hit_rate_errors() {
        let idx = ReferenceIndex::new(&[vec![(0.0, 0.0)]], 1.0).unwrap();
        assert!(hit_rate(&[], &idx, 0.1).is_err());
        assert!(hit_rate(&pts(), &idx, 0.0).is_err());
        let far = ReferenceIndex::new(&[vec![(5.0, 5.0), (6.0, 5.0)]], 0.002).unwrap();
        assert_eq!(hit_rate(&pts(), &far, 0.002).unwrap().columns[3].hits, 0);
    }

    #[test]
    fn points_follow_segment_orders() {
        let g = WaterwayGraph::from_segments(vec![
            (0, vec![(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)], Some(3)),
            (1, vec![(5.0, 5.0), (5.0, 6.0)], None),
            (2, vec![(9.0, 9.0)], Some(1)),
        ])
        .unwrap();
        assert_eq!(
            evaluation_points(&g).unwrap(),
            vec![((1.0, 0.0), Some(OrderCategory::O3Plus)), ((5.0, 5.5), None)]
        );
    }
}
