//! Cloud-free imagery composites.
//!
//! Candidate scenes are pulled from a [`TileProvider`] in ascending order of
//! cloud fraction. Each scene is z-scored per band over its clear cells,
//! pushed through [`sigmoid_transform`], and stripped of every cell within
//! the buffer distance of a cloud, shadow or missing pixel. Scenes are then
//! accepted greedily, each time taking the one that leaves the fewest cells
//! without any observation, until the uncovered fraction drops to the
//! threshold. The output is the per-cell mean of the accepted scenes'
//! transformed values.

mod morphology;
mod provider;

pub use morphology::{buffer_invalid, buffer_radius_cells, cell_size_meters, dilate_disc};
pub use provider::{ManifestProvider, MemoryProvider};

use log::{info, warn};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::features::{masked_moments, sigmoid_transform, NODATA};
use crate::raster::{BinaryMask, GeoGrid, GeoTransform};

pub const DEFAULT_CLOUD_THRESHOLD: f64 = 0.01;
pub const DEFAULT_BUFFER_M: f64 = 500.0;

/// One candidate scene: NIR, red, green, blue reflectance plus its invalid mask.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneTile {
    pub id: String,
    pub bands: [GeoGrid<f64>; 4],
    /// 1 where the scene classification flags cloud, shadow or missing data.
    pub mask: BinaryMask,
}

impl SceneTile {
    pub fn new(id: impl Into<String>, bands: [GeoGrid<f64>; 4], mask: BinaryMask) -> Result<Self> {
        let id = id.into();
        mask.ensure_binary()?;
        for band in &bands {
            mask.transform()
                .ensure_same_grid(band.transform(), &format!("tile {id}"))?;
        }
        Ok(SceneTile { id, bands, mask })
    }

    /// Invalid mask extended with cells that are nodata in any band.
    fn invalid_cells(&self) -> BinaryMask {
        let cells = (0..self.mask.cells().len())
            .map(|i| {
                u8::from(self.mask.cells()[i] == 1 || self.bands.iter().any(|b| b.value_at_index(i).is_none()))
            })
            .collect();
        GeoGrid::new(*self.mask.transform(), cells, None).expect("same shape as mask")
    }
}

/// Fraction of cells flagged invalid.
pub fn cloud_fraction(tile: &SceneTile) -> f64 {
    tile.mask.count_ones() as f64 / tile.mask.cells().len() as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct TileInfo {
    pub id: String,
    pub cloud_fraction: f64,
}

/// Source of candidate scenes.
pub trait TileProvider: Sync {
    /// Scenes intersecting `bbox`, ascending by cloud fraction.
    fn candidates(&self, bbox: &BBox) -> Result<Vec<TileInfo>>;

    fn fetch(&self, id: &str) -> Result<SceneTile>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub lon_min: f64,
    pub lat_min: f64,
    pub lon_max: f64,
    pub lat_max: f64,
}

impl BBox {
    pub fn new(lon_min: f64, lat_min: f64, lon_max: f64, lat_max: f64) -> Result<Self> {
        if !(lon_min < lon_max && lat_min < lat_max) {
            return Err(Error::InvalidArgument(format!(
                "bounding box must satisfy min < max, got {lon_min},{lat_min},{lon_max},{lat_max}"
            )));
        }
        Ok(BBox {
            lon_min,
            lat_min,
            lon_max,
            lat_max,
        })
    }

    /// Parses `lonmin,latmin,lonmax,latmax`.
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::InvalidArgument(format!("bad bounding box {s:?}")))?;
        match parts[..] {
            [a, b, c, d] => Self::new(a, b, c, d),
            _ => Err(Error::InvalidArgument(format!(
                "bounding box needs 4 numbers lonmin,latmin,lonmax,latmax, got {s:?}"
            ))),
        }
    }

    pub fn intersects(&self, t: &GeoTransform) -> bool {
        t.origin_lon < self.lon_max && t.east() > self.lon_min && t.south() < self.lat_max && t.origin_lat > self.lat_min
    }

    /// Cells of `lattice` (extended indefinitely) whose centers lie inside the box.
    pub fn grid_on(&self, lattice: &GeoTransform) -> Result<GeoTransform> {
        let cs = lattice.cell_size;
        let eps = 1e-9;
        let c0 = ((self.lon_min - lattice.origin_lon) / cs - 0.5 - eps).ceil();
        let c1 = ((self.lon_max - lattice.origin_lon) / cs - 0.5 + eps).floor();
        let r0 = ((lattice.origin_lat - self.lat_max) / cs - 0.5 - eps).ceil();
        let r1 = ((lattice.origin_lat - self.lat_min) / cs - 0.5 + eps).floor();
        if c1 < c0 || r1 < r0 {
            return Err(Error::InvalidArgument("bounding box contains no cell centers".into()));
        }
        GeoTransform::new(
            lattice.origin_lon + c0 * cs,
            lattice.origin_lat - r0 * cs,
            cs,
            (r1 - r0) as usize + 1,
            (c1 - c0) as usize + 1,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompositeOptions {
    /// Stop once at most this fraction of cells lacks an observation.
    pub cloud_threshold: f64,
    /// Distance around invalid pixels that is also discarded.
    pub buffer_m: f64,
}

impl Default for CompositeOptions {
    fn default() -> Self {
        CompositeOptions {
            cloud_threshold: DEFAULT_CLOUD_THRESHOLD,
            buffer_m: DEFAULT_BUFFER_M,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Composite {
    /// Mean transformed NIR, red, green, blue. Cells without any observation
    /// hold 0 and are flagged in `coverage`.
    pub bands: [GeoGrid<u8>; 4],
    /// Mean raw reflectance over the same contributions; nodata where uncovered.
    pub reflectance: [GeoGrid<f64>; 4],
    /// 1 where at least one accepted scene contributed.
    pub coverage: BinaryMask,
    /// Accepted scene ids in acceptance order.
    pub accepted: Vec<String>,
    /// For each accepted scene, the output cells it contributed to.
    pub contributions: Vec<BinaryMask>,
    pub uncovered_fraction: f64,
}

impl Composite {
    /// A band with uncovered cells set to nodata, widened so that the
    /// sentinel cannot collide with a real 8-bit value.
    pub fn band_with_nodata(&self, band: usize) -> GeoGrid<i32> {
        let b = &self.bands[band];
        let cells = b
            .cells()
            .iter()
            .zip(self.coverage.cells())
            .map(|(&v, &cov)| if cov == 1 { i32::from(v) } else { -9999 })
            .collect();
        GeoGrid::new(*b.transform(), cells, Some(-9999)).expect("same shape")
    }
}

/// A scene ready for compositing, expressed on the output grid.
struct PreparedTile {
    id: String,
    /// Output-grid cells this scene may contribute to.
    usable: Vec<bool>,
    transformed: [Vec<u8>; 4],
    raw: [Vec<f64>; 4],
}

fn prepare(tile: &SceneTile, out: &GeoTransform, buffer_m: f64) -> Result<Option<PreparedTile>> {
    let t = *tile.mask.transform();
    if (t.cell_size - out.cell_size).abs() > 1e-6 * out.cell_size {
        return Err(Error::Misaligned(format!(
            "tile {} has cell size {} but the composite grid uses {}",
            tile.id, t.cell_size, out.cell_size
        )));
    }
    let col_shift = (out.origin_lon - t.origin_lon) / out.cell_size;
    let row_shift = (t.origin_lat - out.origin_lat) / out.cell_size;
    if (col_shift - col_shift.round()).abs() > 1e-6 || (row_shift - row_shift.round()).abs() > 1e-6 {
        return Err(Error::Misaligned(format!("tile {} is not on the composite lattice", tile.id)));
    }
    let (col_shift, row_shift) = (col_shift.round() as i64, row_shift.round() as i64);

    let invalid = tile.invalid_cells();
    let clear = |i: usize| invalid.cells()[i] == 0;

    let mut scaled: Vec<(f64, f64)> = Vec::with_capacity(4);
    for band in &tile.bands {
        match masked_moments(band.cells(), clear) {
            Some((mean, sd, n)) if n >= 2 && sd > 0.0 => scaled.push((mean, sd)),
            _ => {
                warn!("stage=composite tile={} skipped: too few clear cells to normalize", tile.id);
                return Ok(None);
            }
        }
    }

    let buffered = buffer_invalid(&invalid, buffer_m);
    let mut usable = vec![false; out.len()];
    let mut transformed: [Vec<u8>; 4] = std::array::from_fn(|_| vec![0u8; out.len()]);
    let mut raw: [Vec<f64>; 4] = std::array::from_fn(|_| vec![0.0; out.len()]);
    for r in 0..out.n_rows {
        let tr = r as i64 + row_shift;
        if tr < 0 || tr >= t.n_rows as i64 {
            continue;
        }
        for c in 0..out.n_cols {
            let tc = c as i64 + col_shift;
            if tc < 0 || tc >= t.n_cols as i64 {
                continue;
            }
            let (tr, tc) = (tr as usize, tc as usize);
            if buffered.get(tr, tc) == 1 {
                continue;
            }
            let o = out.index(r, c);
            usable[o] = true;
            for (k, band) in tile.bands.iter().enumerate() {
                let v = band.get(tr, tc);
                let (mean, sd) = scaled[k];
                raw[k][o] = v;
                transformed[k][o] = sigmoid_transform((v - mean) / sd);
            }
        }
    }
    Ok(Some(PreparedTile {
        id: tile.id.clone(),
        usable,
        transformed,
        raw,
    }))
}

fn accumulate(out: &GeoTransform, accepted: &[&PreparedTile]) -> Result<Composite> {
    let n = out.len();
    let mut count = vec![0u32; n];
    let mut sum_t = [vec![0u32; n], vec![0u32; n], vec![0u32; n], vec![0u32; n]];
    let mut sum_raw = [vec![0.0f64; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let mut contributions = Vec::with_capacity(accepted.len());
    for tile in accepted {
        for i in 0..n {
            if !tile.usable[i] {
                continue;
            }
            count[i] += 1;
            for k in 0..4 {
                sum_t[k][i] += u32::from(tile.transformed[k][i]);
                sum_raw[k][i] += tile.raw[k][i];
            }
        }
        let cells = tile.usable.iter().map(|&u| u8::from(u)).collect();
        contributions.push(GeoGrid::new(*out, cells, None)?);
    }

    let bands: [GeoGrid<u8>; 4] = std::array::from_fn(|k| {
        let cells = (0..n)
            .map(|i| {
                if count[i] == 0 {
                    0
                } else {
                    (f64::from(sum_t[k][i]) / f64::from(count[i])).round() as u8
                }
            })
            .collect();
        GeoGrid::new(*out, cells, None).expect("shape")
    });
    let reflectance: [GeoGrid<f64>; 4] = std::array::from_fn(|k| {
        let cells = (0..n)
            .map(|i| if count[i] == 0 { NODATA } else { sum_raw[k][i] / f64::from(count[i]) })
            .collect();
        GeoGrid::new(*out, cells, Some(NODATA)).expect("shape")
    });
    let coverage = GeoGrid::new(*out, count.iter().map(|&c| u8::from(c > 0)).collect(), None)?;
    let uncovered = count.iter().filter(|&&c| c == 0).count();

    Ok(Composite {
        bands,
        reflectance,
        coverage,
        accepted: accepted.iter().map(|t| t.id.clone()).collect(),
        contributions,
        uncovered_fraction: uncovered as f64 / n as f64,
    })
}

fn prepare_all(tiles: &[SceneTile], out: &GeoTransform, buffer_m: f64) -> Result<Vec<PreparedTile>> {
    let prepared: Vec<Option<PreparedTile>> = tiles
        .par_iter()
        .map(|t| prepare(t, out, buffer_m))
        .collect::<Result<_>>()?;
    Ok(prepared.into_iter().flatten().collect())
}

/// Mean composite of every given scene on `out`, without greedy selection.
pub fn mean_composite(tiles: &[SceneTile], out: &GeoTransform, buffer_m: f64) -> Result<Composite> {
    if buffer_m < 0.0 {
        return Err(Error::InvalidArgument("buffer must be non-negative".into()));
    }
    let prepared = prepare_all(tiles, out, buffer_m)?;
    accumulate(out, &prepared.iter().collect::<Vec<_>>())
}

/// Builds a cloud-free composite over `bbox` from the provider's scenes.
pub fn greedy_composite(provider: &dyn TileProvider, bbox: &BBox, options: &CompositeOptions) -> Result<Composite> {
    if options.buffer_m < 0.0 {
        return Err(Error::InvalidArgument("buffer must be non-negative".into()));
    }
    if !(0.0..=1.0).contains(&options.cloud_threshold) {
        return Err(Error::InvalidArgument("cloud threshold must lie in [0, 1]".into()));
    }
    let candidates = provider.candidates(bbox)?;
    if candidates.is_empty() {
        return Err(Error::Empty("provider returned no tiles for the bounding box".into()));
    }
    let tiles: Vec<SceneTile> = candidates
        .par_iter()
        .map(|c| provider.fetch(&c.id))
        .collect::<Result<_>>()?;
    let out = bbox.grid_on(tiles[0].mask.transform())?;
    let prepared = prepare_all(&tiles, &out, options.buffer_m)?;

    let n = out.len();
    let mut covered = vec![false; n];
    let mut uncovered = n;
    let mut remaining: Vec<&PreparedTile> = prepared.iter().collect();
    let mut accepted: Vec<&PreparedTile> = Vec::new();

    while accepted.is_empty() || uncovered as f64 / n as f64 > options.cloud_threshold {
        let mut best: Option<(usize, usize)> = None;
        for (k, tile) in remaining.iter().enumerate() {
            let gain = (0..n).filter(|&i| tile.usable[i] && !covered[i]).count();
            // strict comparison keeps the earliest (least cloudy) on ties
            if best.is_none_or(|(_, g)| gain > g) {
                best = Some((k, gain));
            }
        }
        let Some((k, gain)) = best else { break };
        if gain == 0 {
            break;
        }
        let tile = remaining.remove(k);
        for (c, &u) in covered.iter_mut().zip(&tile.usable) {
            *c |= u;
        }
        uncovered -= gain;
        info!(
            "stage=composite accepted={} gain_cells={} uncovered_fraction={:.6}",
            tile.id,
            gain,
            uncovered as f64 / n as f64
        );
        accepted.push(tile);
    }

    accumulate(&out, &accepted)
}
