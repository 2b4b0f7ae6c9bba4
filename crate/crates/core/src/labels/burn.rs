//! Rasterizing labeled hydrography.
//!
//! Polygons are filled by the even-odd rule evaluated at cell centers, so
//! holes come out right without tracking ring orientation. Lines mark every
//! cell they pass through (supercover). Geometries are burned in list order
//! and later ones overwrite earlier ones.

use super::{FcodeWeightTable, LabelRaster};
use crate::error::{Error, Result};
use crate::geojson::{Coord, Feature, Geometry};
use crate::raster::{GeoGrid, GeoTransform};

/// Feature property holding the water(way) type name.
pub const TYPE_PROPERTY: &str = "fcode_type";

#[derive(Debug, Clone, PartialEq)]
pub enum LabelGeometry {
    Line(Vec<Coord>),
    /// Outer ring followed by any holes.
    Polygon(Vec<Vec<Coord>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledGeometry {
    pub geometry: LabelGeometry,
    pub water_type: String,
}

/// Splits GeoJSON features into burnable parts, keeping feature order.
pub fn labeled_geometries(features: &[Feature]) -> Result<Vec<LabeledGeometry>> {
    let mut out = Vec::new();
    for (i, f) in features.iter().enumerate() {
        let Some(geometry) = &f.geometry else { continue };
        let water_type = f
            .property_str(TYPE_PROPERTY)
            .ok_or_else(|| Error::GeoJson(format!("feature {i} has no string property {TYPE_PROPERTY:?}")))?
            .to_string();
        let mut push = |g: LabelGeometry| {
            out.push(LabeledGeometry {
                geometry: g,
                water_type: water_type.clone(),
            })
        };
        match geometry {
            Geometry::Point(p) => push(LabelGeometry::Line(vec![*p])),
            Geometry::MultiPoint(ps) => ps.iter().for_each(|p| push(LabelGeometry::Line(vec![*p]))),
            Geometry::LineString(l) => push(LabelGeometry::Line(l.clone())),
            Geometry::MultiLineString(ls) => ls.iter().for_each(|l| push(LabelGeometry::Line(l.clone()))),
            Geometry::Polygon(rings) => push(LabelGeometry::Polygon(rings.clone())),
            Geometry::MultiPolygon(ps) => ps.iter().for_each(|p| push(LabelGeometry::Polygon(p.clone()))),
        }
    }
    Ok(out)
}

/// Burns geometries into a label raster on `transform`.
pub fn burn_vectors(
    geometries: &[LabeledGeometry],
    transform: &GeoTransform,
    table: &FcodeWeightTable,
) -> Result<LabelRaster> {
    let labels: Vec<u16> = geometries
        .iter()
        .map(|g| {
            table
                .label_of(&g.water_type)
                .ok_or_else(|| Error::UnknownType(g.water_type.clone()))
        })
        .collect::<Result<_>>()?;

    let mut raster = GeoGrid::filled(*transform, 0u16, None)?;
    for (g, &label) in geometries.iter().zip(&labels) {
        match &g.geometry {
            LabelGeometry::Polygon(rings) => fill_polygon(rings, transform, |r, c| raster.set(r, c, label)),
            LabelGeometry::Line(points) => trace_line(points, transform, |r, c| raster.set(r, c, label)),
        }
    }
    Ok(raster)
}

/// Continuous grid coordinates: x grows east in columns, y grows south in rows.
fn to_grid(t: &GeoTransform, (lon, lat): Coord) -> (f64, f64) {
    ((lon - t.origin_lon) / t.cell_size, (t.origin_lat - lat) / t.cell_size)
}

fn fill_polygon(rings: &[Vec<Coord>], t: &GeoTransform, mut mark: impl FnMut(usize, usize)) {
    let rings: Vec<Vec<(f64, f64)>> = rings
        .iter()
        .map(|ring| ring.iter().map(|&p| to_grid(t, p)).collect())
        .collect();
    let mut xs = Vec::new();
    for r in 0..t.n_rows {
        let y = r as f64 + 0.5;
        xs.clear();
        for ring in &rings {
            let n = ring.len();
            if n < 3 {
                continue;
            }
            for i in 0..n {
                let (x0, y0) = ring[i];
                let (x1, y1) = ring[(i + 1) % n];
                if (y0 > y) != (y1 > y) {
                    xs.push(x0 + (y - y0) * (x1 - x0) / (y1 - y0));
                }
            }
        }
        xs.sort_by(f64::total_cmp);
        // a center at x is inside when an odd number of crossings lie right of it
        for pair in xs.chunks_exact(2) {
            let start = (pair[0] - 0.5).ceil().max(0.0);
            let end = (pair[1] - 0.5).ceil().min(t.n_cols as f64);
            let mut c = start;
            while c < end {
                mark(r, c as usize);
                c += 1.0;
            }
        }
    }
}

fn trace_line(points: &[Coord], t: &GeoTransform, mut mark: impl FnMut(usize, usize)) {
    let mut visit = |x: i64, y: i64| {
        if x >= 0 && y >= 0 && (x as usize) < t.n_cols && (y as usize) < t.n_rows {
            mark(y as usize, x as usize);
        }
    };
    match points {
        [] => {}
        [p] => {
            let (x, y) = to_grid(t, *p);
            visit(x.floor() as i64, y.floor() as i64);
        }
        _ => {
            for w in points.windows(2) {
                let a = to_grid(t, w[0]);
                let b = to_grid(t, w[1]);
                if let Some((a, b)) = clip(a, b, t) {
                    supercover(a, b, &mut visit);
                }
            }
        }
    }
}

/// Clips a segment to the grid extent padded by one cell (Liang-Barsky).
fn clip(a: (f64, f64), b: (f64, f64), t: &GeoTransform) -> Option<((f64, f64), (f64, f64))> {
    let (xmin, ymin, xmax, ymax) = (-1.0, -1.0, t.n_cols as f64 + 1.0, t.n_rows as f64 + 1.0);
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let mut t0 = 0.0f64;
    let mut t1 = 1.0f64;
    for (p, q) in [(-dx, a.0 - xmin), (dx, xmax - a.0), (-dy, a.1 - ymin), (dy, ymax - a.1)] {
        if p == 0.0 {
            if q < 0.0 {
                return None;
            }
        } else {
            let r = q / p;
            if p < 0.0 {
                t0 = t0.max(r);
            } else {
                t1 = t1.min(r);
            }
        }
    }
    if t0 > t1 {
        return None;
    }
    let at = |s: f64| (a.0 + s * dx, a.1 + s * dy);
    Some((if t0 > 0.0 { at(t0) } else { a }, if t1 < 1.0 { at(t1) } else { b }))
}

/// Visits every cell the segment passes through, including both side cells
/// where it crosses exactly through a cell corner.
fn supercover(a: (f64, f64), b: (f64, f64), visit: &mut impl FnMut(i64, i64)) {
    let (mut cx, mut cy) = (a.0.floor() as i64, a.1.floor() as i64);
    let (ex, ey) = (b.0.floor() as i64, b.1.floor() as i64);
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let step_x: i64 = if dx > 0.0 { 1 } else { -1 };
    let step_y: i64 = if dy > 0.0 { 1 } else { -1 };
    let delta_x = if dx != 0.0 { 1.0 / dx.abs() } else { f64::INFINITY };
    let delta_y = if dy != 0.0 { 1.0 / dy.abs() } else { f64::INFINITY };
    let mut max_x = if dx > 0.0 {
        (cx as f64 + 1.0 - a.0) / dx
    } else if dx < 0.0 {
        (a.0 - cx as f64) / -dx
    } else {
        f64::INFINITY
    };
    let mut max_y = if dy > 0.0 {
        (cy as f64 + 1.0 - a.1) / dy
    } else if dy < 0.0 {
        (a.1 - cy as f64) / -dy
    } else {
        f64::INFINITY
    };

    visit(cx, cy);
    let mut steps = (ex - cx).abs() + (ey - cy).abs();
    while steps > 0 {
        if max_x < max_y {
            cx += step_x;
            max_x += delta_x;
            steps -= 1;
        } else if max_y < max_x {
            cy += step_y;
            max_y += delta_y;
            steps -= 1;
        } else {
            visit(cx + step_x, cy);
            visit(cx, cy + step_y);
            cx += step_x;
            cy += step_y;
            max_x += delta_x;
            max_y += delta_y;
            steps -= 2;
        }
        visit(cx, cy);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> GeoTransform {
        GeoTransform::new(0.0, 6.0, 1.0, 6, 6).unwrap()
    }

    fn line(points: &[(f64, f64)], kind: &str) -> LabeledGeometry {
        LabeledGeometry {
            geometry: LabelGeometry::Line(points.to_vec()),
            water_type: kind.into(),
        }
    }

    fn polygon(rings: Vec<Vec<(f64, f64)>>, kind: &str) -> LabeledGeometry {
        LabeledGeometry {
            geometry: LabelGeometry::Polygon(rings),
            water_type: kind.into(),
        }
    }

    fn ones(r: &LabelRaster) -> Vec<(usize, usize)> {
        (0..r.n_rows())
            .flat_map(|i| (0..r.n_cols()).map(move |j| (i, j)))
            .filter(|&(i, j)| r.get(i, j) != 0)
            .collect()
    }

    /// Independent ray-casting point-in-polygon (even-odd).
    fn inside(rings: &[Vec<(f64, f64)>], x: f64, y: f64) -> bool {
        let mut odd = false;
        for ring in rings {
            let mut j = ring.len() - 1;
            for i in 0..ring.len() {
                let (xi, yi) = ring[i];
                let (xj, yj) = ring[j];
                if (yi > y) != (yj > y) && x < (xj - xi) * (y - yi) / (yj - yi) + xi {
                    odd = !odd;
                }
                j = i;
            }
        }
        odd
    }

    #[test]
    fn empty_list_gives_background() {
        let r = burn_vectors(&[], &grid(), &FcodeWeightTable::default()).unwrap();
        assert!(r.cells().iter().all(|&v| v == 0));
    }

    #[test]
    fn horizontal_segment_through_three_centers() {
        let table = FcodeWeightTable::default();
        let r = burn_vectors(&[line(&[(1.5, 3.5), (3.5, 3.5)], "Perennial Streams")], &grid(), &table).unwrap();
        assert_eq!(ones(&r), vec![(2, 1), (2, 2), (2, 3)]);
        assert_eq!(r.get(2, 2), table.label_of("Perennial Streams").unwrap());
    }

    #[test]
    fn square_ring_fills_block() {
        let ring = vec![(1.0, 5.0), (3.0, 5.0), (3.0, 3.0), (1.0, 3.0), (1.0, 5.0)];
        let r = burn_vectors(&[polygon(vec![ring.clone()], "Lake")], &grid(), &FcodeWeightTable::default()).unwrap();
        assert_eq!(ones(&r), vec![(1, 1), (1, 2), (2, 1), (2, 2)]);
    }

    #[test]
    fn polygon_fill_matches_point_in_polygon_oracle() {
        let t = GeoTransform::new(-1.0, 2.0, 0.125, 24, 24).unwrap();
        let outer = vec![(-0.9, 1.9), (1.7, 1.2), (0.4, -0.8), (-0.6, 0.1)];
        let hole = vec![(0.0, 1.0), (0.6, 1.0), (0.3, 0.2)];
        let rings = vec![outer, hole];
        let r = burn_vectors(&[polygon(rings.clone(), "Lake")], &t, &FcodeWeightTable::default()).unwrap();
        for row in 0..24 {
            for col in 0..24 {
                let (lon, lat) = t.pixel_to_geo(row, col);
                assert_eq!(r.get(row, col) != 0, inside(&rings, lon, lat), "cell {row},{col}");
            }
        }
    }

    #[test]
    fn diagonal_through_corners_is_supercover() {
        let r = burn_vectors(&[line(&[(0.5, 5.5), (2.5, 3.5)], "wash")], &grid(), &FcodeWeightTable::default()).unwrap();
        // exact corner crossings add both side cells
        assert_eq!(ones(&r), vec![(0, 0), (0, 1), (1, 0), (1, 1), (1, 2), (2, 1), (2, 2)]);
    }

    #[test]
    fn shallow_line_visits_each_crossed_cell() {
        let r = burn_vectors(&[line(&[(0.2, 5.9), (5.8, 4.2)], "wash")], &grid(), &FcodeWeightTable::default()).unwrap();
        let cells = ones(&r);
        assert_eq!(cells.first(), Some(&(0, 0)));
        assert!(cells.contains(&(1, 5)));
        // 4-connected chain: every consecutive cell shares an edge
        assert_eq!(cells.len(), 7);
    }

    #[test]
    fn later_geometries_overwrite() {
        let table = FcodeWeightTable::default();
        let ring = vec![(0.0, 6.0), (6.0, 6.0), (6.0, 0.0), (0.0, 0.0)];
        let r = burn_vectors(
            &[polygon(vec![ring], "Swamp"), line(&[(0.5, 0.5), (5.5, 0.5)], "canal")],
            &grid(),
            &table,
        )
        .unwrap();
        assert_eq!(r.get(0, 0), table.label_of("Swamp").unwrap());
        assert_eq!(r.get(5, 3), table.label_of("canal").unwrap());
    }

    #[test]
    fn out_of_grid_geometry_is_clipped() {
        let r = burn_vectors(&[line(&[(-100.0, 3.5), (100.0, 3.5)], "wash")], &grid(), &FcodeWeightTable::default()).unwrap();
        assert_eq!(ones(&r).len(), 6);
    }

    #[test]
    fn unknown_type_is_rejected() {
        let err = burn_vectors(&[line(&[(0.5, 0.5)], "ocean")], &grid(), &FcodeWeightTable::default());
        assert!(matches!(err, Err(Error::UnknownType(t)) if t == "ocean"));
    }

    #[test]
    fn translation_invariance() {
        let table = FcodeWeightTable::default();
        let geoms = [
            line(&[(0.3, 5.2), (4.6, 1.1), (5.5, 2.5)], "wash"),
            polygon(vec![vec![(1.2, 4.8), (4.4, 4.1), (2.2, 0.7)]], "Lake"),
        ];
        let base = burn_vectors(&geoms, &grid(), &table).unwrap();
        let (ox, oy) = (17.0, -3.0);
        let shifted_t = GeoTransform::new(ox, 6.0 + oy, 1.0, 6, 6).unwrap();
        let shift = |g: &LabeledGeometry| LabeledGeometry {
            water_type: g.water_type.clone(),
            geometry: match &g.geometry {
                LabelGeometry::Line(ps) => LabelGeometry::Line(ps.iter().map(|&(x, y)| (x + ox, y + oy)).collect()),
                LabelGeometry::Polygon(rs) => LabelGeometry::Polygon(
                    rs.iter().map(|r| r.iter().map(|&(x, y)| (x + ox, y + oy)).collect()).collect(),
                ),
            },
        };
        let moved: Vec<_> = geoms.iter().map(shift).collect();
        assert_eq!(burn_vectors(&moved, &shifted_t, &table).unwrap().cells(), base.cells());
    }
}
