use super::{column_label, in_column, nearest_distances, EvalPoint, Metric, ReferenceIndex, COLUMNS};
use crate::error::{Error, Result};

/// Reported quantiles: every 5% from 5% to 95%, then 99%.
pub const QUANTILES: [f64; 20] = [
    0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40, 0.45, 0.50, 0.55, 0.60, 0.65, 0.70, 0.75, 0.80, 0.85, 0.90, 0.95,
    0.99,
];

const QUANTILE_LABELS: [&str; 20] = [
    "5%", "10%", "15%", "20%", "25%", "30%", "35%", "40%", "45%", "50%", "55%", "60%", "65%", "70%", "75%", "80%",
    "85%", "90%", "95%", "99%",
];

/// Quantile of sorted values, interpolating linearly between order statistics.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistanceStats {
    pub count: usize,
    pub mean: f64,
    /// Sample standard deviation; 0 for a single value.
    pub sd: f64,
    pub min: f64,
    /// At [`QUANTILES`].
    pub quantiles: [f64; 20],
    pub max: f64,
}

impl DistanceStats {
    pub fn from_values(mut values: Vec<f64>) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        values.sort_by(f64::total_cmp);
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let sd = if values.len() < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        Some(DistanceStats {
            count: values.len(),
            mean,
            sd,
            min: values[0],
            quantiles: QUANTILES.map(|q| quantile(&values, q)),
            max: values[values.len() - 1],
        })
    }
}

/// Distance statistics in meters per order category and overall.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceSummary {
    /// In [`COLUMNS`] order; `None` when a column has no points.
    pub columns: [Option<DistanceStats>; 4],
}

pub fn distance_summary(points: &[EvalPoint], index: &ReferenceIndex) -> Result<DistanceSummary> {
    if points.is_empty() {
        return Err(Error::Empty("no evaluation points".into()));
    }
    let meters = nearest_distances(points, index, Metric::Meters)?;
    Ok(DistanceSummary::from_distances(points, &meters))
}

impl DistanceSummary {
    pub fn from_distances(points: &[EvalPoint], meters: &[f64]) -> Self {
        let columns = COLUMNS.map(|column| {
            let values = points
                .iter()
                .zip(meters)
                .filter(|(p, _)| in_column(p, column))
                .map(|(_, &d)| d)
                .collect();
            DistanceStats::from_values(values)
        });
        DistanceSummary { columns }
    }

    /// One row per statistic, one column per category; values in meters to
    /// two decimals, `NA` for empty categories.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("stat");
        for c in COLUMNS {
            out.push(',');
            out.push_str(column_label(c));
        }
        out.push('\n');

        let mut row = |label: &str, f: &dyn Fn(&DistanceStats) -> String| {
            out.push_str(label);
            for c in &self.columns {
                out.push(',');
                match c {
                    Some(s) => out.push_str(&f(s)),
                    None => out.push_str("NA"),
                }
            }
            out.push('\n');
        };
        row("Count", &|s| s.count.to_string());
        row("Mean", &|s| format!("{:.2}", s.mean));
        row("SD", &|s| format!("{:.2}", s.sd));
        row("Min", &|s| format!("{:.2}", s.min));
        for (i, label) in QUANTILE_LABELS.iter().enumerate() {
            row(label, &|s| format!("{:.2}", s.quantiles[i]));
        }
        row("Max", &|s| format!("{:.2}", s.max));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream_order::OrderCategory;

    #[test]
    fn uniform_grid_quantiles() {
        let values: Vec<f64> = (0..=100).map(f64::from).collect();
        let s = DistanceStats::from_values(values).unwrap();
        assert_eq!(s.quantiles[9], 50.0);
        assert_eq!(s.quantiles[0], 5.0);
        assert_eq!(s.quantiles[19], 99.0);
        assert_eq!((s.min, s.max, s.mean), (0.0, 100.0, 50.0));
    }

    #[test]
    fn interpolates_between_order_statistics() {
        let s = [1.0, 2.0, 4.0, 8.0];
        assert_eq!(quantile(&s, 0.5), 3.0);
        assert!((quantile(&s, 0.99) - 7.88).abs() < 1e-12);
        assert_eq!(quantile(&[7.0], 0.3), 7.0);
    }

    #[test]
    fn zero_distances_and_layout() {
        let points: Vec<EvalPoint> = vec![((0.0, 0.0), Some(OrderCategory::O1)); 3];
        let summary = DistanceSummary::from_distances(&points, &[0.0; 3]);
        let csv = summary.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 26);
        assert_eq!(lines[0], "stat,1,2,3,all");
        assert_eq!(lines[1], "Count,3,NA,NA,3");
        assert_eq!(lines[5], "5%,0.00,NA,NA,0.00");
        assert_eq!(lines[24], "99%,0.00,NA,NA,0.00");
        assert_eq!(lines[25], "Max,0.00,NA,NA,0.00");
    }

    #[test]
    fn sample_sd() {
        let s = DistanceStats::from_values(vec![2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]).unwrap();
        assert!((s.sd - (32.0f64 / 7.0).sqrt()).abs() < 1e-12);
        assert_eq!(DistanceStats::from_values(vec![3.0]).unwrap().sd, 0.0);
    }
}
