use crate::raster::{BinaryMask, GeoGrid, GeoTransform, METERS_PER_DEGREE};

const FAR: f64 = 1e20;

/// Squared Euclidean distance transform of a 1-D sampled function
/// (Felzenszwalb & Huttenlocher lower envelope of parabolas).
fn distance_1d(f: &[f64], out: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    if n == 0 {
        return;
    }
    let mut k = 0usize;
    v[0] = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in 1..n {
        let qf = q as f64;
        let mut s;
        loop {
            let p = v[k] as f64;
            s = ((f[q] + qf * qf) - (f[v[k]] + p * p)) / (2.0 * qf - 2.0 * p);
            // z[0] is -inf, so k never underflows
            if s <= z[k] {
                k -= 1;
            } else {
                break;
            }
        }
        k += 1;
        v[k] = q;
        z[k] = s;
        z[k + 1] = f64::INFINITY;
    }
    k = 0;
    for (q, slot) in out.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let d = q as f64 - v[k] as f64;
        *slot = d * d + f[v[k]];
    }
}

/// Squared distance (in cells) from every cell to the nearest set cell.
pub(crate) fn squared_distance_to_set(mask: &BinaryMask) -> Vec<f64> {
    let (rows, cols) = (mask.n_rows(), mask.n_cols());
    let mut grid: Vec<f64> = mask.cells().iter().map(|&v| if v == 1 { 0.0 } else { FAR }).collect();
    let n = rows.max(cols);
    let mut f = vec![0.0; n];
    let mut out = vec![0.0; n];
    let mut v = vec![0usize; n];
    let mut z = vec![0.0; n + 1];

    for c in 0..cols {
        for r in 0..rows {
            f[r] = grid[r * cols + c];
        }
        distance_1d(&f[..rows], &mut out[..rows], &mut v, &mut z);
        for r in 0..rows {
            grid[r * cols + c] = out[r];
        }
    }
    for r in 0..rows {
        f[..cols].copy_from_slice(&grid[r * cols..(r + 1) * cols]);
        distance_1d(&f[..cols], &mut out[..cols], &mut v, &mut z);
        grid[r * cols..(r + 1) * cols].copy_from_slice(&out[..cols]);
    }
    grid
}

/// Dilates the set cells by a disc of `radius` cells (Euclidean, inclusive).
pub fn dilate_disc(mask: &BinaryMask, radius: usize) -> BinaryMask {
    if radius == 0 {
        return mask.clone();
    }
    let r2 = (radius * radius) as f64;
    let cells = squared_distance_to_set(mask)
        .into_iter()
        .map(|d| u8::from(d <= r2))
        .collect();
    GeoGrid::new(*mask.transform(), cells, None).expect("same shape as input")
}

/// East-west extent of one cell in meters at the grid's central latitude.
///
/// This is the smaller of the two cell dimensions, so a buffer sized from it
/// reaches at least the requested distance in every direction.
pub fn cell_size_meters(transform: &GeoTransform) -> f64 {
    transform.cell_size * METERS_PER_DEGREE * transform.center_lat().to_radians().cos()
}

/// `ceil(radius_m / cell_size_m)`, ignoring floating-point dust above an integer.
pub fn buffer_radius_cells(radius_m: f64, cell_size_m: f64) -> usize {
    if radius_m <= 0.0 {
        return 0;
    }
    (radius_m / cell_size_m - 1e-9).ceil().max(0.0) as usize
}

/// Grows the invalid area of `mask` by `radius_m` meters.
pub fn buffer_invalid(mask: &BinaryMask, radius_m: f64) -> BinaryMask {
    let radius = buffer_radius_cells(radius_m, cell_size_meters(mask.transform()));
    dilate_disc(mask, radius)
}
