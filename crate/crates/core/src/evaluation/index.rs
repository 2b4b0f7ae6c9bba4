use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::geojson::Coord;
use crate::raster::METERS_PER_DEGREE;

/// Distance from `p` to segment `a`-`b` after scaling longitude by `kx` and
/// latitude by `ky`.
fn segment_distance(p: Coord, a: Coord, b: Coord, kx: f64, ky: f64) -> f64 {
    let (ax, ay) = ((a.0 - p.0) * kx, (a.1 - p.1) * ky);
    let (bx, by) = ((b.0 - p.0) * kx, (b.1 - p.1) * ky);
    let (dx, dy) = (bx - ax, by - ay);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 { (-(ax * dx + ay * dy) / len2).clamp(0.0, 1.0) } else { 0.0 };
    (ax + t * dx).hypot(ay + t * dy)
}

fn polyline_distance(p: Coord, line: &[Coord], kx: f64, ky: f64) -> f64 {
    match line {
        [only] => segment_distance(p, *only, *only, kx, ky),
        _ => line
            .windows(2)
            .map(|w| segment_distance(p, w[0], w[1], kx, ky))
            .fold(f64::INFINITY, f64::min),
    }
}

/// Meters per degree of longitude and latitude at `lat`.
pub fn meter_scale(lat: f64) -> (f64, f64) {
    (lat.to_radians().cos() * METERS_PER_DEGREE, METERS_PER_DEGREE)
}

/// Distance from `p` to a polyline as `(degrees, meters)`. A single-point
/// polyline is treated as that point.
pub fn point_to_polyline_distance(p: Coord, line: &[Coord]) -> Result<(f64, f64)> {
    if line.is_empty() {
        return Err(Error::Empty("polyline has no points".into()));
    }
    let (kx, ky) = meter_scale(p.1);
    Ok((polyline_distance(p, line, 1.0, 1.0), polyline_distance(p, line, kx, ky)))
}

/// Which distance a query minimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Degrees,
    /// Equirectangular meters at the query point's latitude.
    Meters,
}

/// Reference polylines bucketed on a uniform degree grid.
#[derive(Debug, Clone)]
pub struct ReferenceIndex {
    segments: Vec<(Coord, Coord)>,
    bucket_size: f64,
    buckets: HashMap<(i64, i64), Vec<u32>>,
    /// Inclusive bucket extent.
    lo: (i64, i64),
    hi: (i64, i64),
}

/// Rings searched before giving up on the buckets and scanning every segment.
const MAX_RINGS: i64 = 64;

impl ReferenceIndex {
    pub fn new(polylines: &[Vec<Coord>], bucket_size: f64) -> Result<Self> {
        if !(bucket_size > 0.0 && bucket_size.is_finite()) {
            return Err(Error::InvalidArgument(format!("bucket size must be positive, got {bucket_size}")));
        }
        let mut segments = Vec::new();
        for line in polylines {
            match line.as_slice() {
                [] => {}
                [p] => segments.push((*p, *p)),
                _ => segments.extend(line.windows(2).map(|w| (w[0], w[1]))),
            }
        }
        if segments.len() > u32::MAX as usize {
            return Err(Error::InvalidArgument("too many reference segments".into()));
        }
        let bucket = |v: f64| (v / bucket_size).floor() as i64;
        let mut buckets: HashMap<(i64, i64), Vec<u32>> = HashMap::new();
        let mut lo = (i64::MAX, i64::MAX);
        let mut hi = (i64::MIN, i64::MIN);
        for (i, &(a, b)) in segments.iter().enumerate() {
            let (x0, x1) = (bucket(a.0.min(b.0)), bucket(a.0.max(b.0)));
            let (y0, y1) = (bucket(a.1.min(b.1)), bucket(a.1.max(b.1)));
            lo = (lo.0.min(x0), lo.1.min(y0));
            hi = (hi.0.max(x1), hi.1.max(y1));
            for x in x0..=x1 {
                for y in y0..=y1 {
                    buckets.entry((x, y)).or_default().push(i as u32);
                }
            }
        }
        Ok(ReferenceIndex {
            segments,
            bucket_size,
            buckets,
            lo,
            hi,
        })
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn bucket_size(&self) -> f64 {
        self.bucket_size
    }

    fn brute_force(&self, p: Coord, kx: f64, ky: f64) -> f64 {
        self.segments
            .iter()
            .map(|&(a, b)| segment_distance(p, a, b, kx, ky))
            .fold(f64::INFINITY, f64::min)
    }

    /// Exact distance from `p` to the nearest reference segment.
    pub fn nearest(&self, p: Coord, metric: Metric) -> Result<f64> {
        if self.is_empty() {
            return Err(Error::Empty("reference index has no segments".into()));
        }
        let (kx, ky) = match metric {
            Metric::Degrees => (1.0, 1.0),
            Metric::Meters => meter_scale(p.1),
        };
        let b = self.bucket_size;
        let cx = (p.0 / b).floor() as i64;
        let cy = (p.1 / b).floor() as i64;
        // after rings 0..=k every unseen segment lies at least k buckets away
        let scale = kx.min(ky) * b;
        let k_max = (cx - self.lo.0)
            .abs()
            .max((self.hi.0 - cx).abs())
            .max((cy - self.lo.1).abs())
            .max((self.hi.1 - cy).abs());
        let outside = (self.lo.0 - cx).max(cx - self.hi.0).max(self.lo.1 - cy).max(cy - self.hi.1);
        if outside > MAX_RINGS {
            return Ok(self.brute_force(p, kx, ky));
        }

        let mut best = f64::INFINITY;
        for k in 0..=k_max {
            if k > MAX_RINGS {
                return Ok(best.min(self.brute_force(p, kx, ky)));
            }
            let mut visit = |x: i64, y: i64| {
                if x < self.lo.0 || x > self.hi.0 || y < self.lo.1 || y > self.hi.1 {
                    return;
                }
                if let Some(ids) = self.buckets.get(&(x, y)) {
                    for &i in ids {
                        let (a, c) = self.segments[i as usize];
                        best = best.min(segment_distance(p, a, c, kx, ky));
                    }
                }
            };
            if k == 0 {
                visit(cx, cy);
            } else {
                for x in cx - k..=cx + k {
                    visit(x, cy - k);
                    visit(x, cy + k);
                }
                for y in cy - k + 1..cy + k {
                    visit(cx - k, y);
                    visit(cx + k, y);
                }
            }
            if best <= k as f64 * scale {
                break;
            }
        }
        Ok(best)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distance_examples() {
        let line = [(-1.0, 0.0), (1.0, 0.0)];
        assert_eq!(point_to_polyline_distance((0.3, 0.0), &line).unwrap(), (0.0, 0.0));
        let (deg, m) = point_to_polyline_distance((0.0, 0.002), &line).unwrap();
        assert!((deg - 0.002).abs() < 1e-15);
        assert!((m - 222.64).abs() < 1e-9);
        let (deg, _) = point_to_polyline_distance((4.0, 4.0), &line).unwrap();
        assert!((deg - 5.0).abs() < 1e-12);
        assert!(point_to_polyline_distance((0.0, 0.0), &[]).is_err());
        assert_eq!(point_to_polyline_distance((3.0, 4.0), &[(0.0, 0.0)]).unwrap().0, 5.0);
    }

    #[test]
    fn index_matches_scan() {
        let lines = vec![
            vec![(0.0, 0.0), (0.01, 0.005), (0.02, 0.0)],
            vec![(0.5, 0.5), (0.5, 0.51)],
            vec![(-0.2, 0.3)],
        ];
        for bucket in [0.001, 0.002, 0.05, 1.0] {
            let idx = ReferenceIndex::new(&lines, bucket).unwrap();
            for p in [(0.0, 0.001), (0.49, 0.505), (3.0, -2.0), (-0.2, 0.29), (0.015, 0.2)] {
                let want = lines
                    .iter()
                    .map(|l| point_to_polyline_distance(p, l).unwrap())
                    .fold((f64::INFINITY, f64::INFINITY), |a, d| (a.0.min(d.0), a.1.min(d.1)));
                assert_eq!(idx.nearest(p, Metric::Degrees).unwrap(), want.0);
                assert_eq!(idx.nearest(p, Metric::Meters).unwrap(), want.1);
            }
        }
    }

    #[test]
    fn empty_index() {
        let idx = ReferenceIndex::new(&[], 0.002).unwrap();
        assert!(idx.nearest((0.0, 0.0), Metric::Degrees).is_err());
        assert!(ReferenceIndex::new(&[], 0.0).is_err());
    }
}
