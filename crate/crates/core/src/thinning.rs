//! Elevation-prioritized, topology-preserving thinning.
//!
//! Foreground uses 8-connectivity and background 4-connectivity. Every
//! waterway cell is classified from its 3x3 neighborhood:
//!
//! * `Skeleton`: at most one waterway neighbor, or removal would split or
//!   merge the foreground locally;
//! * `Interior`: no background cell 4-adjacent to it, so removal would punch
//!   a hole;
//! * `Removable`: a simple point.
//!
//! Removable cells are taken highest elevation first (row-major index breaks
//! ties), and after each removal only the 8 neighbors are re-classified.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::raster::{BinaryMask, GeoGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellState {
    Skeleton,
    Interior,
    Removable,
}

/// Ring order of the 8 neighbors, clockwise from north.
const RING: [(isize, isize); 8] = [(-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1)];

/// Bit pattern of the foreground ring around `(r, c)`; outside cells are background.
fn ring_bits(cells: &[u8], n_rows: usize, n_cols: usize, r: usize, c: usize) -> u8 {
    let mut bits = 0u8;
    for (k, &(dr, dc)) in RING.iter().enumerate() {
        let rr = r as isize + dr;
        let cc = c as isize + dc;
        if rr >= 0 && cc >= 0 && (rr as usize) < n_rows && (cc as usize) < n_cols && cells[rr as usize * n_cols + cc as usize] == 1
        {
            bits |= 1 << k;
        }
    }
    bits
}

/// Components of the positions in `set` under the given adjacency, counting
/// only components that contain a position accepted by `seed`.
fn ring_components(set: u8, adjacent: impl Fn(usize, usize) -> bool, seed: impl Fn(usize) -> bool) -> u8 {
    let mut seen = 0u8;
    let mut count = 0;
    for start in 0..8 {
        if set & (1 << start) == 0 || seen & (1 << start) != 0 {
            continue;
        }
        let mut stack = vec![start];
        seen |= 1 << start;
        let mut seeded = false;
        while let Some(k) = stack.pop() {
            seeded |= seed(k);
            for j in 0..8 {
                if set & (1 << j) != 0 && seen & (1 << j) == 0 && adjacent(k, j) {
                    seen |= 1 << j;
                    stack.push(j);
                }
            }
        }
        count += u8::from(seeded);
    }
    count
}

fn state_table() -> &'static [CellState; 256] {
    static TABLE: OnceLock<[CellState; 256]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let adj8 = |a: usize, b: usize| {
            let (ra, ca) = RING[a];
            let (rb, cb) = RING[b];
            (ra - rb).abs() <= 1 && (ca - cb).abs() <= 1
        };
        let adj4 = |a: usize, b: usize| {
            let (ra, ca) = RING[a];
            let (rb, cb) = RING[b];
            (ra - rb).abs() + (ca - cb).abs() == 1
        };
        let edge = |k: usize| k.is_multiple_of(2);
        let mut table = [CellState::Skeleton; 256];
        for (bits, state) in table.iter_mut().enumerate() {
            let fg = bits as u8;
            let t8 = ring_components(fg, adj8, |_| true);
            let t4_bg = ring_components(!fg, adj4, edge);
            *state = if fg.count_ones() <= 1 || t8 != 1 {
                CellState::Skeleton
            } else if t4_bg != 1 {
                CellState::Interior
            } else {
                CellState::Removable
            };
        }
        table
    })
}

fn classify_raw(cells: &[u8], n_rows: usize, n_cols: usize, r: usize, c: usize) -> CellState {
    state_table()[ring_bits(cells, n_rows, n_cols, r, c) as usize]
}

/// State of waterway cell `(row, col)`.
pub fn classify_cell(mask: &BinaryMask, row: usize, col: usize) -> Result<CellState> {
    let t = mask.transform();
    if !t.contains(row, col) {
        return Err(Error::OutOfBounds {
            row,
            col,
            n_rows: t.n_rows,
            n_cols: t.n_cols,
        });
    }
    if mask.get(row, col) != 1 {
        return Err(Error::NotWaterway { row, col });
    }
    Ok(classify_raw(mask.cells(), t.n_rows, t.n_cols, row, col))
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    elevation: f64,
    index: usize,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    // higher elevation first, then lower index
    fn cmp(&self, other: &Self) -> Ordering {
        self.elevation
            .total_cmp(&other.elevation)
            .then_with(|| other.index.cmp(&self.index))
    }
}

/// Result of [`thin_with_trace`].
#[derive(Debug, Clone)]
pub struct Thinning {
    pub skeleton: BinaryMask,
    /// Row-major indices in removal order.
    pub removed: Vec<usize>,
    /// Cells left in the `Interior` state when no removable cell remains.
    pub stable_interior: usize,
}

/// Priority used for removal; nodata elevations sort below everything.
pub fn removal_priority(elevation: &GeoGrid<f64>, index: usize) -> f64 {
    elevation.value_at_index(index).unwrap_or(f64::NEG_INFINITY)
}

pub fn thin(mask: &BinaryMask, elevation: &GeoGrid<f64>) -> Result<BinaryMask> {
    Ok(thin_with_trace(mask, elevation)?.skeleton)
}

/// Thins and records the removal sequence.
pub fn thin_with_trace(mask: &BinaryMask, elevation: &GeoGrid<f64>) -> Result<Thinning> {
    mask.transform().ensure_same_grid(elevation.transform(), "mask vs elevation")?;
    mask.ensure_binary()?;
    let (n_rows, n_cols) = (mask.n_rows(), mask.n_cols());
    let mut cells = mask.cells().to_vec();
    let mut queued = vec![false; cells.len()];
    let mut heap = BinaryHeap::new();

    let candidate = |index| Candidate {
        elevation: removal_priority(elevation, index),
        index,
    };

    for i in 0..cells.len() {
        if cells[i] == 1 && classify_raw(&cells, n_rows, n_cols, i / n_cols, i % n_cols) == CellState::Removable {
            queued[i] = true;
            heap.push(candidate(i));
        }
    }

    let mut removed = Vec::new();
    while let Some(Candidate { index, .. }) = heap.pop() {
        queued[index] = false;
        let (r, c) = (index / n_cols, index % n_cols);
        if cells[index] != 1 || classify_raw(&cells, n_rows, n_cols, r, c) != CellState::Removable {
            continue;
        }
        cells[index] = 0;
        removed.push(index);
        for &(dr, dc) in &RING {
            let rr = r as isize + dr;
            let cc = c as isize + dc;
            if rr < 0 || cc < 0 || rr as usize >= n_rows || cc as usize >= n_cols {
                continue;
            }
            let j = rr as usize * n_cols + cc as usize;
            if cells[j] == 1
                && !queued[j]
                && classify_raw(&cells, n_rows, n_cols, rr as usize, cc as usize) == CellState::Removable
            {
                queued[j] = true;
                heap.push(candidate(j));
            }
        }
    }

    let stable_interior = (0..cells.len())
        .filter(|&i| cells[i] == 1 && classify_raw(&cells, n_rows, n_cols, i / n_cols, i % n_cols) == CellState::Interior)
        .count();
    if stable_interior > 0 {
        log::warn!("thinning left {stable_interior} interior cells that never became removable");
    }
    Ok(Thinning {
        skeleton: GeoGrid::new(*mask.transform(), cells, None)?,
        removed,
        stable_interior,
    })
}

/// First 2x2 all-foreground block in row-major order.
pub fn find_block(mask: &BinaryMask) -> Option<(usize, usize)> {
    let (n_rows, n_cols) = (mask.n_rows(), mask.n_cols());
    for r in 0..n_rows.saturating_sub(1) {
        for c in 0..n_cols.saturating_sub(1) {
            if mask.get(r, c) == 1 && mask.get(r, c + 1) == 1 && mask.get(r + 1, c) == 1 && mask.get(r + 1, c + 1) == 1 {
                return Some((r, c));
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::GeoTransform;

    fn grid(rows: &[&str]) -> BinaryMask {
        let t = GeoTransform::new(0.0, 0.0, 1.0, rows.len(), rows[0].len()).unwrap();
        let cells = rows
            .iter()
            .flat_map(|r| r.bytes().map(|b| u8::from(b == b'#')))
            .collect();
        GeoGrid::new(t, cells, None).unwrap()
    }

    fn flat(mask: &BinaryMask) -> GeoGrid<f64> {
        GeoGrid::filled(*mask.transform(), 0.0, None).unwrap()
    }

    #[test]
    fn classification_examples() {
        let single = grid(&["...", ".#.", "..."]);
        assert_eq!(classify_cell(&single, 1, 1).unwrap(), CellState::Skeleton);
        let line = grid(&["###"]);
        assert_eq!(classify_cell(&line, 0, 1).unwrap(), CellState::Skeleton);
        assert_eq!(classify_cell(&line, 0, 0).unwrap(), CellState::Skeleton);
        let block = grid(&["###", "###", "###"]);
        assert_eq!(classify_cell(&block, 1, 1).unwrap(), CellState::Interior);
        assert_eq!(classify_cell(&block, 0, 0).unwrap(), CellState::Removable);
        assert_eq!(classify_cell(&block, 0, 1).unwrap(), CellState::Removable);
        assert!(matches!(classify_cell(&single, 0, 0), Err(Error::NotWaterway { .. })));
        assert!(classify_cell(&single, 3, 0).is_err());
    }

    #[test]
    fn hole_border_is_skeleton() {
        // corners of a ring around one background cell are simple; the
        // remaining diamond still encloses the hole
        let ring = grid(&["###", "#.#", "###"]);
        assert_eq!(classify_cell(&ring, 0, 0).unwrap(), CellState::Removable);
        let out = thin(&ring, &flat(&ring)).unwrap();
        assert_eq!(out.cells(), grid(&[".#.", "#.#", ".#."]).cells());
        for (r, c) in [(0, 1), (1, 0), (1, 2), (2, 1)] {
            assert_eq!(classify_cell(&out, r, c).unwrap(), CellState::Skeleton);
        }
    }

    #[test]
    fn two_by_two_block_follows_elevation() {
        let mask = grid(&["##", "##"]);
        let elev = GeoGrid::new(*mask.transform(), vec![4.0, 3.0, 2.0, 1.0], None).unwrap();
        let t = thin_with_trace(&mask, &elev).unwrap();
        assert_eq!(t.removed, vec![0, 1]);
        assert_eq!(t.skeleton.cells(), &[0, 0, 1, 1]);
    }

    #[test]
    fn lines_are_unchanged() {
        let mask = grid(&["#....", ".#...", "..##.", "....#", "....#"]);
        assert_eq!(thin(&mask, &flat(&mask)).unwrap().cells(), mask.cells());
    }

    #[test]
    fn ribbon_becomes_one_wide() {
        let mask = grid(&["..........", ".########.", ".########.", ".########.", ".........."]);
        let elev = GeoGrid::from_fn(*mask.transform(), None, |r, c| ((r * 7 + c * 3) % 5) as f64).unwrap();
        let out = thin(&mask, &elev).unwrap();
        assert!(find_block(&out).is_none());
        assert!(out.count_ones() >= 8);
        for i in 0..out.cells().len() {
            if out.cells()[i] == 1 {
                let (r, c) = (i / 10, i % 10);
                assert_eq!(classify_cell(&out, r, c).unwrap(), CellState::Skeleton);
            }
        }
    }

    #[test]
    fn ties_break_by_row_major_index() {
        let mask = grid(&["##", "##"]);
        let t = thin_with_trace(&mask, &flat(&mask)).unwrap();
        assert_eq!(t.removed, vec![0, 1]);
    }

    #[test]
    fn misaligned_inputs_fail() {
        let mask = grid(&["##"]);
        let elev = GeoGrid::filled(GeoTransform::new(0.0, 0.0, 1.0, 2, 2).unwrap(), 0.0, None).unwrap();
        assert!(matches!(thin(&mask, &elev), Err(Error::Misaligned(_))));
    }
}
