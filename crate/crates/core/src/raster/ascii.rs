//! ESRI ASCII Grid reader and writer.
//!
//! ```text
//! ncols         4
//! nrows         3
//! xllcorner     30
//! yllcorner     -1.75
//! cellsize      0.25
//! NODATA_value  -9999
//! 0 1 2 3
//! ...
//! ```
//!
//! Rows run north to south. Values are written with Rust's shortest
//! round-trip decimal formatting, so reading a written grid gives back the
//! same bits.

use std::fmt::Write as _;
use std::path::Path;

use super::{CellValue, GeoGrid, GeoTransform};
use crate::error::{Error, Result};

pub fn read_ascii_grid<T: CellValue>(path: impl AsRef<Path>) -> Result<GeoGrid<T>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_ascii_grid(&text, &path.display().to_string())
}

pub fn write_ascii_grid<T: CellValue>(grid: &GeoGrid<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_ascii_grid(grid)).map_err(|e| Error::io(path, e))
}

pub fn format_ascii_grid<T: CellValue>(grid: &GeoGrid<T>) -> String {
    let t = grid.transform();
    let nodata = grid.nodata().unwrap_or(T::DEFAULT_NODATA);
    let mut out = String::with_capacity(64 + grid.cells().len() * 4);
    let _ = writeln!(out, "ncols         {}", t.n_cols);
    let _ = writeln!(out, "nrows         {}", t.n_rows);
    let _ = writeln!(out, "xllcorner     {}", t.origin_lon);
    let _ = writeln!(out, "yllcorner     {}", t.south());
    let _ = writeln!(out, "cellsize      {}", t.cell_size);
    let _ = writeln!(out, "NODATA_value  {}", nodata);
    for row in grid.cells().chunks(t.n_cols) {
        let mut first = true;
        for v in row {
            if !first {
                out.push(' ');
            }
            first = false;
            let _ = write!(out, "{v}");
        }
        out.push('\n');
    }
    out
}

#[derive(Default)]
struct Header {
    ncols: Option<usize>,
    nrows: Option<usize>,
    xll: Option<(f64, bool)>,
    yll: Option<(f64, bool)>,
    cellsize: Option<f64>,
    nodata: Option<String>,
}

/// Parses grid text; `context` names the source in error messages.
pub fn parse_ascii_grid<T: CellValue>(text: &str, context: &str) -> Result<GeoGrid<T>> {
    let mut header = Header::default();
    let mut lines = text.lines().enumerate().peekable();

    while let Some(&(lineno, line)) = lines.peek() {
        let mut tokens = line.split_whitespace();
        let Some(key) = tokens.next() else {
            lines.next();
            continue;
        };
        if !key.starts_with(|c: char| c.is_ascii_alphabetic()) {
            break;
        }
        let value = tokens
            .next()
            .ok_or_else(|| Error::parse(context, lineno + 1, format!("missing value for {key}")))?;
        let num = |v: &str| {
            v.parse::<f64>()
                .map_err(|_| Error::parse(context, lineno + 1, format!("bad number {v:?} for {key}")))
        };
        let count = |v: &str| {
            v.parse::<usize>()
                .map_err(|_| Error::parse(context, lineno + 1, format!("bad count {v:?} for {key}")))
        };
        match key.to_ascii_lowercase().as_str() {
            "ncols" => header.ncols = Some(count(value)?),
            "nrows" => header.nrows = Some(count(value)?),
            "xllcorner" => header.xll = Some((num(value)?, false)),
            "xllcenter" => header.xll = Some((num(value)?, true)),
            "yllcorner" => header.yll = Some((num(value)?, false)),
            "yllcenter" => header.yll = Some((num(value)?, true)),
            "cellsize" => header.cellsize = Some(num(value)?),
            "nodata_value" => header.nodata = Some(value.to_string()),
            _ => {
                return Err(Error::parse(context, lineno + 1, format!("unexpected header key {key:?}")));
            }
        }
        lines.next();
    }

    let missing = |what: &str| Error::parse(context, 1, format!("header is missing {what}"));
    let ncols = header.ncols.ok_or_else(|| missing("ncols"))?;
    let nrows = header.nrows.ok_or_else(|| missing("nrows"))?;
    let cellsize = header.cellsize.ok_or_else(|| missing("cellsize"))?;
    let (xll, x_center) = header.xll.ok_or_else(|| missing("xllcorner"))?;
    let (yll, y_center) = header.yll.ok_or_else(|| missing("yllcorner"))?;
    let origin_lon = if x_center { xll - 0.5 * cellsize } else { xll };
    let south = if y_center { yll - 0.5 * cellsize } else { yll };
    let origin_lat = south + nrows as f64 * cellsize;
    let transform = GeoTransform::new(origin_lon, origin_lat, cellsize, nrows, ncols)
        .map_err(|e| Error::parse(context, 1, e.to_string()))?;

    let nodata = match header.nodata {
        Some(s) => Some(
            s.parse::<T>()
                .map_err(|_| Error::parse(context, 1, format!("NODATA_value {s:?} does not fit the cell type")))?,
        ),
        None => None,
    };

    let mut cells = Vec::with_capacity(transform.len());
    for (lineno, line) in lines {
        for tok in line.split_whitespace() {
            if cells.len() == transform.len() {
                return Err(Error::parse(context, lineno + 1, "more values than nrows x ncols"));
            }
            let v = tok
                .parse::<T>()
                .map_err(|_| Error::parse(context, lineno + 1, format!("bad cell value {tok:?}")))?;
            cells.push(v);
        }
    }
    if cells.len() != transform.len() {
        return Err(Error::parse(
            context,
            text.lines().count(),
            format!("expected {} values, found {}", transform.len(), cells.len()),
        ));
    }
    GeoGrid::new(transform, cells, nodata).map_err(|e| Error::parse(context, 1, e.to_string()))
}
