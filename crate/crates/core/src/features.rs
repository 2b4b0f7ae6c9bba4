//! Model-input feature channels.
//!
//! The input stack has ten channels in a fixed order: the four transformed
//! imagery bands (NIR, red, green, blue), NDVI, NDWI, and four channels
//! derived from elevation.

use crate::error::{Error, Result};
use crate::raster::{CellValue, GeoGrid, GeoTransform};

/// Logistic slope applied to z-scored reflectance before 8-bit quantization.
pub const LOGISTIC_SLOPE: f64 = 0.6;

pub const NODATA: f64 = -9999.0;

/// `round(255 / (1 + exp(-0.6 x)))`, rounding half away from zero.
pub fn sigmoid_transform(x: f64) -> u8 {
    let v = 255.0 / (1.0 + (-LOGISTIC_SLOPE * x).exp());
    // `round` is half-away-from-zero; the clamp only matters for NaN.
    v.round().clamp(0.0, 255.0) as u8
}

/// Population mean and standard deviation of `values` where `valid` holds.
pub(crate) fn masked_moments(values: &[f64], valid: impl Fn(usize) -> bool) -> Option<(f64, f64, usize)> {
    let mut n = 0usize;
    let mut sum = 0.0;
    for (i, &v) in values.iter().enumerate() {
        if valid(i) {
            n += 1;
            sum += v;
        }
    }
    if n == 0 {
        return None;
    }
    let mean = sum / n as f64;
    let mut ss = 0.0;
    for (i, &v) in values.iter().enumerate() {
        if valid(i) {
            ss += (v - mean) * (v - mean);
        }
    }
    Some((mean, (ss / n as f64).sqrt(), n))
}

/// Z-scores the valid cells of a channel (population SD). Nodata is kept.
pub fn normalize_channel(values: &GeoGrid<f64>) -> Result<GeoGrid<f64>> {
    let cells = values.cells();
    let (mean, sd, n) = masked_moments(cells, |i| values.value_at_index(i).is_some())
        .ok_or_else(|| Error::Degenerate("channel has no valid cells".into()))?;
    if n < 2 {
        return Err(Error::Degenerate("channel needs at least two valid cells".into()));
    }
    if sd == 0.0 || !sd.is_finite() {
        return Err(Error::Degenerate("channel is constant".into()));
    }
    values.map(values.nodata(), |v| (v - mean) / sd)
}

fn normalized_difference(a: &GeoGrid<f64>, b: &GeoGrid<f64>, what: &str) -> Result<GeoGrid<f64>> {
    a.transform().ensure_same_grid(b.transform(), what)?;
    let cells = a
        .cells()
        .iter()
        .zip(b.cells())
        .map(|(&x, &y)| {
            if a.is_nodata(x) || b.is_nodata(y) {
                NODATA
            } else if x + y == 0.0 {
                0.0
            } else {
                (x - y) / (x + y)
            }
        })
        .collect();
    GeoGrid::new(*a.transform(), cells, Some(NODATA))
}

/// `(NIR - red) / (NIR + red)`; zero where the denominator vanishes.
pub fn ndvi(nir: &GeoGrid<f64>, red: &GeoGrid<f64>) -> Result<GeoGrid<f64>> {
    normalized_difference(nir, red, "ndvi")
}

/// McFeeters' water index `(green - NIR) / (green + NIR)`.
pub fn ndwi(green: &GeoGrid<f64>, nir: &GeoGrid<f64>) -> Result<GeoGrid<f64>> {
    normalized_difference(green, nir, "ndwi")
}

/// Elevation-derived channels, all in grid units.
#[derive(Debug, Clone, PartialEq)]
pub struct ElevationChannels {
    /// Elevation minus its minimum over valid cells.
    pub shifted: GeoGrid<f64>,
    /// Change per column toward the east.
    pub dx: GeoGrid<f64>,
    /// Change per row toward the north.
    pub dy: GeoGrid<f64>,
    /// `sqrt(dx^2 + dy^2)`.
    pub gradient: GeoGrid<f64>,
}

/// Central difference where both neighbors are valid, one-sided where only one is.
fn difference(center: f64, before: Option<f64>, after: Option<f64>) -> f64 {
    match (before, after) {
        (Some(b), Some(a)) => 0.5 * (a - b),
        (None, Some(a)) => a - center,
        (Some(b), None) => center - b,
        (None, None) => 0.0,
    }
}

pub fn elevation_channels(elevation: &GeoGrid<f64>) -> Result<ElevationChannels> {
    let t = *elevation.transform();
    if t.n_rows < 2 || t.n_cols < 2 {
        return Err(Error::InvalidGrid(format!(
            "elevation needs at least 2x2 cells, got {}x{}",
            t.n_rows, t.n_cols
        )));
    }
    let min = elevation
        .cells()
        .iter()
        .copied()
        .filter(|&v| !elevation.is_nodata(v))
        .fold(f64::INFINITY, f64::min);
    if !min.is_finite() {
        return Err(Error::Degenerate("elevation has no valid cells".into()));
    }

    let at = |r: isize, c: isize| -> Option<f64> {
        if r < 0 || c < 0 || r as usize >= t.n_rows || c as usize >= t.n_cols {
            return None;
        }
        elevation.value(r as usize, c as usize)
    };

    let mut dx = vec![NODATA; t.len()];
    let mut dy = vec![NODATA; t.len()];
    let mut grad = vec![NODATA; t.len()];
    for r in 0..t.n_rows {
        for c in 0..t.n_cols {
            let Some(z) = elevation.value(r, c) else { continue };
            let (ri, ci) = (r as isize, c as isize);
            let gx = difference(z, at(ri, ci - 1), at(ri, ci + 1));
            // Rows grow southward; flip so that dy points north.
            let gy = difference(z, at(ri + 1, ci), at(ri - 1, ci));
            let i = t.index(r, c);
            dx[i] = gx;
            dy[i] = gy;
            grad[i] = gx.hypot(gy);
        }
    }

    Ok(ElevationChannels {
        shifted: elevation.map(Some(NODATA), |v| v - min)?,
        dx: GeoGrid::new(t, dx, Some(NODATA))?,
        dy: GeoGrid::new(t, dy, Some(NODATA))?,
        gradient: GeoGrid::new(t, grad, Some(NODATA))?,
    })
}

/// Nearest-neighbor resample of `source` onto `target`'s cell centers.
///
/// Every target cell center must fall inside `source`.
pub fn resample_nearest<T: CellValue>(source: &GeoGrid<T>, target: &GeoTransform) -> Result<GeoGrid<T>> {
    let st = source.transform();
    let mut cells = Vec::with_capacity(target.len());
    for r in 0..target.n_rows {
        for c in 0..target.n_cols {
            let (lon, lat) = target.pixel_to_geo(r, c);
            let (sr, sc) = st.geo_to_pixel(lon, lat).ok_or_else(|| {
                Error::Misaligned(format!(
                    "cell ({r}, {c}) center ({lon}, {lat}) lies outside the source grid"
                ))
            })?;
            cells.push(source.get(sr, sc));
        }
    }
    GeoGrid::new(*target, cells, source.nodata())
}

/// Channel names in stack order; also the file suffixes used by the CLI.
pub const CHANNEL_NAMES: [&str; 10] = [
    "nir_t", "red_t", "green_t", "blue_t", "ndvi", "ndwi", "elev_shifted", "elev_dx", "elev_dy", "elev_grad",
];

/// The ten-channel model input.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelStack {
    pub transform: GeoTransform,
    pub channels: Vec<GeoGrid<f64>>,
}

impl ChannelStack {
    pub fn channel(&self, name: &str) -> Option<&GeoGrid<f64>> {
        CHANNEL_NAMES
            .iter()
            .position(|&n| n == name)
            .map(|i| &self.channels[i])
    }

    pub fn names(&self) -> &'static [&'static str] {
        &CHANNEL_NAMES
    }
}

/// Builds the stack from transformed NRGB bands and an elevation model.
///
/// `reflectance` supplies raw NRGB bands for the spectral indices; when it is
/// `None` the indices are computed from `nrgb_t` itself. Elevation is
/// resampled to the imagery grid by nearest neighbor and must cover it.
pub fn assemble_stack(
    nrgb_t: &[GeoGrid<f64>; 4],
    reflectance: Option<&[GeoGrid<f64>; 4]>,
    elevation: &GeoGrid<f64>,
) -> Result<ChannelStack> {
    let transform = *nrgb_t[0].transform();
    for (k, band) in nrgb_t.iter().enumerate().skip(1) {
        transform.ensure_same_grid(band.transform(), &format!("band {k}"))?;
    }
    let bands = reflectance.unwrap_or(nrgb_t);
    for band in bands {
        transform.ensure_same_grid(band.transform(), "reflectance band")?;
    }
    let [nir, red, green, _] = bands;

    let dem = resample_nearest(elevation, &transform)?;
    let elev = elevation_channels(&dem)?;

    let mut channels: Vec<GeoGrid<f64>> = nrgb_t.to_vec();
    channels.push(ndvi(nir, red)?);
    channels.push(ndwi(green, nir)?);
    channels.extend([elev.shifted, elev.dx, elev.dy, elev.gradient]);
    Ok(ChannelStack { transform, channels })
}


#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn sigmoid_is_monotone(a in -50.0f64..50.0, b in -50.0f64..50.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(sigmoid_transform(lo) <= sigmoid_transform(hi));
        }

        #[test]
        fn swapping_bands_negates_index(x in 0.01f64..1.0, y in 0.01f64..1.0) {
            let t = GeoTransform::new(0.0, 0.0, 1.0, 1, 1).unwrap();
            let a = GeoGrid::new(t, vec![x], None).unwrap();
            let b = GeoGrid::new(t, vec![y], None).unwrap();
            let v = ndvi(&a, &b).unwrap().get(0, 0);
            prop_assert_eq!(v, -ndvi(&b, &a).unwrap().get(0, 0));
            prop_assert!((-1.0..=1.0).contains(&v));
        }

        #[test]
        fn gradient_dominates_components(z in prop::collection::vec(-100.0f64..100.0, 9)) {
            let t = GeoTransform::new(0.0, 0.0, 1.0, 3, 3).unwrap();
            let e = elevation_channels(&GeoGrid::new(t, z, None).unwrap()).unwrap();
            for i in 0..9 {
                let (gx, gy, g) = (e.dx.cells()[i], e.dy.cells()[i], e.gradient.cells()[i]);
                prop_assert!(g >= gx.abs().max(gy.abs()));
                if gy == 0.0 { prop_assert_eq!(g, gx.abs()); }
            }
        }
    }
}
