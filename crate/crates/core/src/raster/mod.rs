//! Geo-referenced grids.
//!
//! Every raster in the pipeline is a [`GeoGrid`]: a row-major cell array on a
//! north-up grid whose top-left corner sits at `(origin_lon, origin_lat)`.
//! Row 0 is the northernmost row. Cell sizes are in degrees and uniform in
//! both axes.

mod ascii;

pub use ascii::{parse_ascii_grid, read_ascii_grid, write_ascii_grid, format_ascii_grid};

use std::fmt::{Debug, Display};
use std::str::FromStr;

use crate::error::{Error, Result};

/// Relative slack used when comparing origins and cell sizes of two grids.
const ALIGN_EPS: f64 = 1e-6;

/// Equirectangular scale: meters per degree of latitude (and of longitude at
/// the equator).
pub const METERS_PER_DEGREE: f64 = 111_320.0;

/// A cell value type that can live in a [`GeoGrid`].
pub trait CellValue: Copy + PartialEq + Debug + Display + FromStr + Send + Sync + 'static {
    /// Sentinel written to `NODATA_value` when a grid has none of its own.
    const DEFAULT_NODATA: Self;

    fn is_finite_value(self) -> bool;

    fn to_f64(self) -> f64;
}

macro_rules! integer_cell {
    ($t:ty, $nodata:expr) => {
        impl CellValue for $t {
            const DEFAULT_NODATA: Self = $nodata;

            fn is_finite_value(self) -> bool {
                true
            }

            fn to_f64(self) -> f64 {
                self as f64
            }
        }
    };
}

integer_cell!(u8, 255);
integer_cell!(u16, u16::MAX);
integer_cell!(i32, -9999);

impl CellValue for f64 {
    const DEFAULT_NODATA: Self = -9999.0;

    fn is_finite_value(self) -> bool {
        self.is_finite()
    }

    fn to_f64(self) -> f64 {
        self
    }
}

/// Neighborhood used for adjacency queries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Connectivity {
    Four,
    Eight,
}

impl Connectivity {
    pub fn offsets(self) -> &'static [(isize, isize)] {
        const FOUR: [(isize, isize); 4] = [(-1, 0), (0, -1), (0, 1), (1, 0)];
        const EIGHT: [(isize, isize); 8] = [
            (-1, -1),
            (-1, 0),
            (-1, 1),
            (0, -1),
            (0, 1),
            (1, -1),
            (1, 0),
            (1, 1),
        ];
        match self {
            Connectivity::Four => &FOUR,
            Connectivity::Eight => &EIGHT,
        }
    }
}

/// Placement of a grid on the globe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoTransform {
    /// Longitude of the west edge of column 0.
    pub origin_lon: f64,
    /// Latitude of the north edge of row 0.
    pub origin_lat: f64,
    /// Degrees per cell, both axes.
    pub cell_size: f64,
    pub n_rows: usize,
    pub n_cols: usize,
}

impl GeoTransform {
    pub fn new(origin_lon: f64, origin_lat: f64, cell_size: f64, n_rows: usize, n_cols: usize) -> Result<Self> {
        if !(cell_size > 0.0 && cell_size.is_finite()) {
            return Err(Error::InvalidGrid(format!("cell size must be positive, got {cell_size}")));
        }
        if n_rows == 0 || n_cols == 0 {
            return Err(Error::InvalidGrid(format!("grid must be non-empty, got {n_rows}x{n_cols}")));
        }
        if !origin_lon.is_finite() || !origin_lat.is_finite() {
            return Err(Error::InvalidGrid("origin must be finite".into()));
        }
        Ok(GeoTransform {
            origin_lon,
            origin_lat,
            cell_size,
            n_rows,
            n_cols,
        })
    }

    pub fn len(&self) -> usize {
        self.n_rows * self.n_cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.n_cols + col
    }

    #[inline]
    pub fn row_col(&self, index: usize) -> (usize, usize) {
        (index / self.n_cols, index % self.n_cols)
    }

    pub fn contains(&self, row: usize, col: usize) -> bool {
        row < self.n_rows && col < self.n_cols
    }

    /// Center of cell `(row, col)` as `(lon, lat)`.
    pub fn pixel_to_geo(&self, row: usize, col: usize) -> (f64, f64) {
        (
            self.origin_lon + (col as f64 + 0.5) * self.cell_size,
            self.origin_lat - (row as f64 + 0.5) * self.cell_size,
        )
    }

    /// The cell whose footprint contains `(lon, lat)`, or `None` when the point
    /// falls outside the grid. Footprints are closed on the west/north edges.
    pub fn geo_to_pixel(&self, lon: f64, lat: f64) -> Option<(usize, usize)> {
        let col = ((lon - self.origin_lon) / self.cell_size).floor();
        let row = ((self.origin_lat - lat) / self.cell_size).floor();
        if !(col >= 0.0 && row >= 0.0) {
            return None;
        }
        let (row, col) = (row as usize, col as usize);
        self.contains(row, col).then_some((row, col))
    }

    /// Latitude of the south edge of the last row.
    pub fn south(&self) -> f64 {
        self.origin_lat - self.n_rows as f64 * self.cell_size
    }

    /// Longitude of the east edge of the last column.
    pub fn east(&self) -> f64 {
        self.origin_lon + self.n_cols as f64 * self.cell_size
    }

    pub fn center_lat(&self) -> f64 {
        0.5 * (self.origin_lat + self.south())
    }

    /// True when both transforms describe the same cells.
    pub fn same_grid(&self, other: &GeoTransform) -> bool {
        let tol = ALIGN_EPS * self.cell_size;
        self.n_rows == other.n_rows
            && self.n_cols == other.n_cols
            && (self.cell_size - other.cell_size).abs() <= tol
            && (self.origin_lon - other.origin_lon).abs() <= tol
            && (self.origin_lat - other.origin_lat).abs() <= tol
    }

    pub fn ensure_same_grid(&self, other: &GeoTransform, what: &str) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(Error::Misaligned(format!(
                "{what}: {}x{} grid at ({}, {}) step {} vs {}x{} grid at ({}, {}) step {}",
                self.n_rows,
                self.n_cols,
                self.origin_lon,
                self.origin_lat,
                self.cell_size,
                other.n_rows,
                other.n_cols,
                other.origin_lon,
                other.origin_lat,
                other.cell_size
            )))
        }
    }

    /// In-bounds neighbors of `(row, col)` in a fixed offset order.
    pub fn neighbors(&self, row: usize, col: usize, connectivity: Connectivity) -> Result<Vec<(usize, usize)>> {
        if !self.contains(row, col) {
            return Err(Error::OutOfBounds {
                row,
                col,
                n_rows: self.n_rows,
                n_cols: self.n_cols,
            });
        }
        Ok(self.neighbor_iter(row, col, connectivity).collect())
    }

    /// Like [`neighbors`](Self::neighbors) without the bounds check on the center.
    pub fn neighbor_iter(
        &self,
        row: usize,
        col: usize,
        connectivity: Connectivity,
    ) -> impl Iterator<Item = (usize, usize)> + '_ {
        connectivity.offsets().iter().filter_map(move |&(dr, dc)| {
            let r = row as isize + dr;
            let c = col as isize + dc;
            (r >= 0 && c >= 0 && (r as usize) < self.n_rows && (c as usize) < self.n_cols)
                .then_some((r as usize, c as usize))
        })
    }
}

/// A geo-referenced raster.
#[derive(Debug, Clone, PartialEq)]
pub struct GeoGrid<T> {
    transform: GeoTransform,
    cells: Vec<T>,
    nodata: Option<T>,
}

/// A grid whose cells are strictly 0 or 1.
pub type BinaryMask = GeoGrid<u8>;

impl<T: CellValue> GeoGrid<T> {
    pub fn new(transform: GeoTransform, cells: Vec<T>, nodata: Option<T>) -> Result<Self> {
        if cells.len() != transform.len() {
            return Err(Error::InvalidGrid(format!(
                "expected {} cells for a {}x{} grid, got {}",
                transform.len(),
                transform.n_rows,
                transform.n_cols,
                cells.len()
            )));
        }
        if let Some(nd) = nodata {
            if !nd.is_finite_value() {
                return Err(Error::InvalidGrid("nodata sentinel must be finite".into()));
            }
        }
        if let Some(i) = cells
            .iter()
            .position(|&v| Some(v) != nodata && !v.is_finite_value())
        {
            let (r, c) = transform.row_col(i);
            return Err(Error::InvalidGrid(format!("non-finite value at row {r}, col {c}")));
        }
        Ok(GeoGrid {
            transform,
            cells,
            nodata,
        })
    }

    pub fn filled(transform: GeoTransform, value: T, nodata: Option<T>) -> Result<Self> {
        Self::new(transform, vec![value; transform.len()], nodata)
    }

    pub fn from_fn(
        transform: GeoTransform,
        nodata: Option<T>,
        mut f: impl FnMut(usize, usize) -> T,
    ) -> Result<Self> {
        let mut cells = Vec::with_capacity(transform.len());
        for r in 0..transform.n_rows {
            for c in 0..transform.n_cols {
                cells.push(f(r, c));
            }
        }
        Self::new(transform, cells, nodata)
    }

    pub fn transform(&self) -> &GeoTransform {
        &self.transform
    }

    pub fn n_rows(&self) -> usize {
        self.transform.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.transform.n_cols
    }

    pub fn cells(&self) -> &[T] {
        &self.cells
    }

    pub fn into_cells(self) -> Vec<T> {
        self.cells
    }

    pub fn nodata(&self) -> Option<T> {
        self.nodata
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> T {
        self.cells[self.transform.index(row, col)]
    }

    pub fn is_nodata(&self, value: T) -> bool {
        self.nodata == Some(value)
    }

    /// The cell value, or `None` for nodata.
    #[inline]
    pub fn value(&self, row: usize, col: usize) -> Option<T> {
        let v = self.get(row, col);
        (!self.is_nodata(v)).then_some(v)
    }

    pub fn value_at_index(&self, index: usize) -> Option<T> {
        let v = self.cells[index];
        (!self.is_nodata(v)).then_some(v)
    }

    /// Value of the cell containing `(lon, lat)`; `None` when outside or nodata.
    pub fn sample(&self, lon: f64, lat: f64) -> Option<T> {
        let (r, c) = self.transform.geo_to_pixel(lon, lat)?;
        self.value(r, c)
    }

    pub fn neighbors(&self, row: usize, col: usize, connectivity: Connectivity) -> Result<Vec<(usize, usize)>> {
        self.transform.neighbors(row, col, connectivity)
    }

    /// Applies `f` to valid cells; nodata cells map to `nodata`.
    pub fn map<U: CellValue>(&self, nodata: Option<U>, mut f: impl FnMut(T) -> U) -> Result<GeoGrid<U>> {
        let fill = nodata.unwrap_or(U::DEFAULT_NODATA);
        let cells = self
            .cells
            .iter()
            .map(|&v| if self.is_nodata(v) { fill } else { f(v) })
            .collect();
        GeoGrid::new(self.transform, cells, nodata)
    }

    pub fn with_nodata(mut self, nodata: Option<T>) -> Self {
        self.nodata = nodata;
        self
    }

    pub(crate) fn set(&mut self, row: usize, col: usize, value: T) {
        let i = self.transform.index(row, col);
        self.cells[i] = value;
    }
}

impl GeoGrid<u8> {
    /// Errors unless every cell is 0 or 1.
    pub fn ensure_binary(&self) -> Result<()> {
        match self.cells.iter().position(|&v| v > 1) {
            None => Ok(()),
            Some(i) => {
                let (r, c) = self.transform.row_col(i);
                Err(Error::InvalidGrid(format!(
                    "mask value {} at row {r}, col {c} is not 0 or 1",
                    self.cells[i]
                )))
            }
        }
    }

    pub fn count_ones(&self) -> usize {
        self.cells.iter().filter(|&&v| v == 1).count()
    }
}

/// Thresholds a real-valued raster into a mask: `1` where `value >= threshold`,
/// `0` elsewhere including nodata.
pub fn binarize(grid: &GeoGrid<f64>, threshold: f64) -> BinaryMask {
    let cells = grid
        .cells()
        .iter()
        .map(|&v| u8::from(!grid.is_nodata(v) && v >= threshold))
        .collect();
    GeoGrid {
        transform: *grid.transform(),
        cells,
        nodata: None,
    }
}

fn integral_offset(delta: f64, cell_size: f64, what: &str) -> Result<i64> {
    let steps = delta / cell_size;
    let rounded = steps.round();
    if (steps - rounded).abs() > ALIGN_EPS {
        return Err(Error::Misaligned(format!(
            "{what} offset of {delta} degrees is not a whole number of {cell_size}-degree cells"
        )));
    }
    Ok(rounded as i64)
}

/// Mosaics tiles that share one cell lattice into their bounding grid.
///
/// Overlapping cells must agree wherever both tiles hold data; cells covered
/// by no tile become nodata. The result does not depend on the order of
/// `tiles`.
pub fn merge_tiles<T: CellValue>(tiles: &[GeoGrid<T>]) -> Result<GeoGrid<T>> {
    let first = tiles
        .first()
        .ok_or_else(|| Error::Empty("no tiles to merge".into()))?;
    let base = *first.transform();
    let cs = base.cell_size;

    let nodata = {
        let mut declared = tiles.iter().filter_map(|t| t.nodata());
        let nd = declared.next();
        if let Some(nd) = nd {
            if declared.any(|other| other != nd) {
                return Err(Error::InvalidGrid("tiles declare different nodata sentinels".into()));
            }
        }
        nd.unwrap_or(T::DEFAULT_NODATA)
    };

    let mut placements = Vec::with_capacity(tiles.len());
    for tile in tiles {
        let t = tile.transform();
        if (t.cell_size - cs).abs() > ALIGN_EPS * cs {
            return Err(Error::Misaligned(format!(
                "cell sizes differ ({} vs {})",
                t.cell_size, cs
            )));
        }
        let col_off = integral_offset(t.origin_lon - base.origin_lon, cs, "longitude")?;
        let row_off = integral_offset(base.origin_lat - t.origin_lat, cs, "latitude")?;
        placements.push((row_off, col_off));
    }

    let min_row = placements.iter().map(|p| p.0).min().unwrap_or(0);
    let min_col = placements.iter().map(|p| p.1).min().unwrap_or(0);
    let max_row = tiles
        .iter()
        .zip(&placements)
        .map(|(t, p)| p.0 + t.n_rows() as i64)
        .max()
        .unwrap_or(0);
    let max_col = tiles
        .iter()
        .zip(&placements)
        .map(|(t, p)| p.1 + t.n_cols() as i64)
        .max()
        .unwrap_or(0);

    // Take the origin verbatim from a tile sitting on the corresponding edge so
    // that the output does not depend on which tile came first.
    let origin_lon = tiles
        .iter()
        .zip(&placements)
        .filter(|(_, p)| p.1 == min_col)
        .map(|(t, _)| t.transform().origin_lon)
        .fold(f64::INFINITY, f64::min);
    let origin_lat = tiles
        .iter()
        .zip(&placements)
        .filter(|(_, p)| p.0 == min_row)
        .map(|(t, _)| t.transform().origin_lat)
        .fold(f64::NEG_INFINITY, f64::max);
    let cell_size = tiles
        .iter()
        .map(|t| t.transform().cell_size)
        .fold(f64::INFINITY, f64::min);

    let transform = GeoTransform::new(
        origin_lon,
        origin_lat,
        cell_size,
        (max_row - min_row) as usize,
        (max_col - min_col) as usize,
    )?;
    let mut cells = vec![nodata; transform.len()];
    let mut covered = vec![false; transform.len()];

    for (tile, &(row_off, col_off)) in tiles.iter().zip(&placements) {
        let r0 = (row_off - min_row) as usize;
        let c0 = (col_off - min_col) as usize;
        for r in 0..tile.n_rows() {
            for c in 0..tile.n_cols() {
                let Some(v) = tile.value(r, c) else { continue };
                let i = transform.index(r0 + r, c0 + c);
                if covered[i] {
                    if cells[i] != v {
                        return Err(Error::MergeConflict {
                            row: r0 + r,
                            col: c0 + c,
                        });
                    }
                } else {
                    cells[i] = v;
                    covered[i] = true;
                }
            }
        }
    }

    GeoGrid::new(transform, cells, Some(nodata))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tile(lon: f64, lat: f64, rows: usize, cols: usize, values: &[i32]) -> GeoGrid<i32> {
        let t = GeoTransform::new(lon, lat, 0.5, rows, cols).unwrap();
        GeoGrid::new(t, values.to_vec(), Some(-9999)).unwrap()
    }

    #[test]
    fn transform_rejects_bad_shapes() {
        assert!(GeoTransform::new(0.0, 0.0, 0.0, 1, 1).is_err());
        assert!(GeoTransform::new(0.0, 0.0, 1.0, 0, 1).is_err());
        assert!(GeoTransform::new(f64::NAN, 0.0, 1.0, 1, 1).is_err());
    }

    #[test]
    fn grid_rejects_wrong_length_and_non_finite() {
        let t = GeoTransform::new(0.0, 0.0, 1.0, 2, 2).unwrap();
        assert!(GeoGrid::new(t, vec![0.0; 3], None).is_err());
        assert!(GeoGrid::new(t, vec![0.0, 1.0, f64::NAN, 2.0], None).is_err());
        assert!(GeoGrid::new(t, vec![0.0, 1.0, f64::INFINITY, 2.0], Some(-1.0)).is_err());
    }

    #[test]
    fn center_of_first_cell_maps_back() {
        let t = GeoTransform::new(10.0, 5.0, 0.25, 3, 4).unwrap();
        let (lon, lat) = t.pixel_to_geo(0, 0);
        assert_eq!((lon, lat), (10.125, 4.875));
        assert_eq!(t.geo_to_pixel(lon, lat), Some((0, 0)));
    }

    #[test]
    fn points_outside_are_out_of_bounds() {
        let t = GeoTransform::new(10.0, 5.0, 0.25, 3, 4).unwrap();
        assert_eq!(t.geo_to_pixel(10.0 - 0.25, 4.9), None);
        assert_eq!(t.geo_to_pixel(10.1, 5.1), None);
        assert_eq!(t.geo_to_pixel(t.east() + 1e-9, 4.9), None);
        assert_eq!(t.geo_to_pixel(10.1, t.south() - 1e-9), None);
    }

    #[test]
    fn round_trip_every_cell_of_random_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let t = GeoTransform::new(
                rng.gen_range(-180.0..170.0),
                rng.gen_range(-80.0..80.0),
                rng.gen_range(1e-4..0.5),
                7,
                5,
            )
            .unwrap();
            for r in 0..7 {
                for c in 0..5 {
                    let (lon, lat) = t.pixel_to_geo(r, c);
                    assert_eq!(t.geo_to_pixel(lon, lat), Some((r, c)));
                }
            }
        }
    }

    #[test]
    fn neighbor_counts_on_3x3() {
        let t = GeoTransform::new(0.0, 0.0, 1.0, 3, 3).unwrap();
        let counts: Vec<usize> = (0..9)
            .map(|i| t.neighbors(i / 3, i % 3, Connectivity::Eight).unwrap().len())
            .collect();
        assert_eq!(counts, vec![3, 5, 3, 5, 8, 5, 3, 5, 3]);
        assert_eq!(t.neighbors(1, 1, Connectivity::Four).unwrap().len(), 4);
        assert_eq!(t.neighbors(0, 0, Connectivity::Four).unwrap().len(), 2);
        assert!(!t.neighbors(1, 1, Connectivity::Eight).unwrap().contains(&(1, 1)));
        assert!(matches!(
            t.neighbors(3, 0, Connectivity::Four),
            Err(Error::OutOfBounds { .. })
        ));
    }

    #[test]
    fn merge_single_tile_is_identity() {
        let a = tile(0.0, 1.0, 2, 2, &[1, 2, 3, 4]);
        assert_eq!(merge_tiles(std::slice::from_ref(&a)).unwrap(), a);
    }

    #[test]
    fn merge_adjacent_tiles() {
        let a = tile(0.0, 1.0, 2, 2, &[1, 2, 3, 4]);
        let b = tile(1.0, 1.0, 2, 2, &[5, 6, 7, 8]);
        let m = merge_tiles(&[a, b]).unwrap();
        assert_eq!((m.n_rows(), m.n_cols()), (2, 4));
        assert_eq!(m.cells(), &[1, 2, 5, 6, 3, 4, 7, 8]);
        assert_eq!(m.transform().origin_lon, 0.0);
    }

    #[test]
    fn merge_leaves_gaps_as_nodata() {
        let a = tile(0.0, 1.0, 1, 1, &[1]);
        let b = tile(0.5, 0.5, 1, 1, &[2]);
        let m = merge_tiles(&[b, a]).unwrap();
        assert_eq!(m.cells(), &[1, -9999, -9999, 2]);
        assert_eq!(m.value(0, 1), None);
    }

    #[test]
    fn merge_conflicting_overlap_fails() {
        let a = tile(0.0, 1.0, 2, 2, &[0, 0, 0, 0]);
        let b = tile(0.5, 0.5, 2, 2, &[1, 1, 1, 1]);
        assert!(matches!(
            merge_tiles(&[a, b]),
            Err(Error::MergeConflict { row: 1, col: 1 })
        ));
    }

    #[test]
    fn merge_agreeing_overlap_and_nodata_overlap() {
        let a = tile(0.0, 1.0, 2, 2, &[1, 1, 1, -9999]);
        let b = tile(0.5, 0.5, 2, 2, &[7, 2, 2, 2]);
        let m = merge_tiles(&[a, b]).unwrap();
        assert_eq!(m.cells(), &[1, 1, -9999, 1, 7, 2, -9999, 2, 2]);
    }

    #[test]
    fn merge_rejects_misaligned() {
        let a = tile(0.0, 1.0, 2, 2, &[1, 2, 3, 4]);
        let b = tile(0.3, 1.0, 2, 2, &[1, 2, 3, 4]);
        assert!(matches!(merge_tiles(&[a, b]), Err(Error::Misaligned(_))));
        let c = GeoGrid::new(GeoTransform::new(0.0, 1.0, 0.25, 1, 1).unwrap(), vec![1], None).unwrap();
        let d = tile(0.0, 1.0, 1, 1, &[1]);
        assert!(matches!(merge_tiles(&[c, d]), Err(Error::Misaligned(_))));
        assert!(merge_tiles::<i32>(&[]).is_err());
    }

    #[test]
    fn binarize_treats_nodata_as_background() {
        let t = GeoTransform::new(0.0, 0.0, 1.0, 1, 4).unwrap();
        let g = GeoGrid::new(t, vec![0.49, 0.5, -9999.0, 0.9], Some(-9999.0)).unwrap();
        assert_eq!(binarize(&g, 0.5).cells(), &[0, 1, 0, 1]);
    }
}
