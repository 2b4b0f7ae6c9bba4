//! Skeleton to waterway graph.
//!
//! Skeleton cells are linked by 8-adjacency. Cells whose degree is not 2 are
//! nodes; chains of degree-2 cells between nodes become segments whose
//! vertices are cell midpoints. A component made only of degree-2 cells is a
//! closed segment anchored at its lowest row-major cell.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::geojson::{Coord, Feature, Geometry};
use crate::raster::{BinaryMask, Connectivity};
use crate::thinning::find_block;

/// Top-level GeoJSON member recording where stream-order elevations come from.
pub const ELEVATION_SAMPLING_KEY: &str = "order_elevation_sampling";
pub const ELEVATION_SAMPLING: &str = "segment endpoints";

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub point: Coord,
    /// Number of segment ends at this node.
    pub degree: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub id: usize,
    pub points: Vec<Coord>,
    pub order: Option<u32>,
    /// Node indices of the first and last point.
    pub start: usize,
    pub end: usize,
}

impl Segment {
    pub fn is_closed(&self) -> bool {
        self.points.len() > 2 && self.points.first() == self.points.last()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct WaterwayGraph {
    pub nodes: Vec<Node>,
    pub segments: Vec<Segment>,
}

fn key(p: Coord) -> (u64, u64) {
    (p.0.to_bits(), p.1.to_bits())
}

impl WaterwayGraph {
    /// Builds the graph from `(id, points, order)` triples. Nodes are the
    /// distinct segment endpoints, north to south then west to east.
    pub fn from_segments(parts: Vec<(usize, Vec<Coord>, Option<u32>)>) -> Result<Self> {
        let mut ends: Vec<Coord> = Vec::new();
        for (id, points, _) in &parts {
            let (Some(&first), Some(&last)) = (points.first(), points.last()) else {
                return Err(Error::InvalidArgument(format!("segment {id} has no points")));
            };
            ends.push(first);
            ends.push(last);
        }
        ends.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.total_cmp(&b.0)));
        ends.dedup_by(|a, b| key(*a) == key(*b));
        let lookup: HashMap<(u64, u64), usize> = ends.iter().enumerate().map(|(i, &p)| (key(p), i)).collect();
        let mut nodes: Vec<Node> = ends.into_iter().map(|point| Node { point, degree: 0 }).collect();

        let mut segments: Vec<Segment> = Vec::with_capacity(parts.len());
        let mut seen_ids = HashMap::new();
        for (id, points, order) in parts {
            if seen_ids.insert(id, ()).is_some() {
                return Err(Error::InvalidArgument(format!("duplicate segment id {id}")));
            }
            let start = lookup[&key(points[0])];
            let end = lookup[&key(points[points.len() - 1])];
            if points.len() >= 2 {
                nodes[start].degree += 1;
                nodes[end].degree += 1;
            }
            segments.push(Segment {
                id,
                points,
                order,
                start,
                end,
            });
        }
        segments.sort_by_key(|s| s.id);
        Ok(WaterwayGraph { nodes, segments })
    }

}

/// Traces a skeleton into segments.
pub fn skeleton_to_graph(skeleton: &BinaryMask) -> Result<WaterwayGraph> {
    skeleton.ensure_binary()?;
    if let Some((row, col)) = find_block(skeleton) {
        return Err(Error::NotSkeleton { row, col });
    }
    let t = *skeleton.transform();
    let (n_rows, n_cols) = (t.n_rows, t.n_cols);
    let cells = skeleton.cells();
    let offsets = Connectivity::Eight.offsets();

    // neighbor index in direction k, if it is a skeleton cell
    let step = |i: usize, k: usize| -> Option<usize> {
        let (dr, dc) = offsets[k];
        let r = (i / n_cols) as isize + dr;
        let c = (i % n_cols) as isize + dc;
        if r < 0 || c < 0 || r as usize >= n_rows || c as usize >= n_cols {
            return None;
        }
        let j = r as usize * n_cols + c as usize;
        (cells[j] == 1).then_some(j)
    };
    let degree: Vec<u8> = (0..cells.len())
        .map(|i| if cells[i] == 1 { (0..8).filter(|&k| step(i, k).is_some()).count() as u8 } else { 0 })
        .collect();

    // bit k set: the edge leaving in direction k is already traced
    let mut used = vec![0u8; cells.len()];
    let mark = |used: &mut [u8], i: usize, k: usize, j: usize| {
        used[i] |= 1 << k;
        used[j] |= 1 << (7 - k);
    };
    let midpoint = |i: usize| t.pixel_to_geo(i / n_cols, i % n_cols);

    let mut parts: Vec<(usize, Vec<Coord>, Option<u32>)> = Vec::new();
    let walk = |used: &mut Vec<u8>, start: usize, k0: usize, parts: &mut Vec<(usize, Vec<Coord>, Option<u32>)>| {
        let mut path = vec![start];
        let mut cur = step(start, k0).expect("traced edge leads to a skeleton cell");
        mark(used, start, k0, cur);
        path.push(cur);
        while degree[cur] == 2 && cur != start {
            let next = (0..8).find_map(|k| {
                let j = step(cur, k)?;
                (used[cur] & (1 << k) == 0).then_some((k, j))
            });
            let Some((k, j)) = next else { break };
            mark(used, cur, k, j);
            cur = j;
            path.push(cur);
        }
        let id = parts.len();
        parts.push((id, path.into_iter().map(midpoint).collect(), None));
    };

    for i in 0..cells.len() {
        if cells[i] != 1 || degree[i] == 2 {
            continue;
        }
        if degree[i] == 0 {
            let id = parts.len();
            parts.push((id, vec![midpoint(i)], None));
            continue;
        }
        for k in 0..8 {
            if step(i, k).is_some() && used[i] & (1 << k) == 0 {
                walk(&mut used, i, k, &mut parts);
            }
        }
    }
    // what is left are closed loops of degree-2 cells
    for i in 0..cells.len() {
        if cells[i] != 1 {
            continue;
        }
        if let Some(k) = (0..8).find(|&k| step(i, k).is_some() && used[i] & (1 << k) == 0) {
            walk(&mut used, i, k, &mut parts);
        }
    }
    WaterwayGraph::from_segments(parts)
}

/// Evaluation points of a segment: interior vertices, the midpoint of a
/// 2-point segment, every distinct vertex of a closed loop, nothing for a
/// single point.
pub fn inner_points(segment: &Segment) -> Vec<Coord> {
    let p = &segment.points;
    match p.len() {
        0 | 1 => Vec::new(),
        2 => vec![(0.5 * (p[0].0 + p[1].0), 0.5 * (p[0].1 + p[1].1))],
        n if segment.is_closed() => p[..n - 1].to_vec(),
        n => p[1..n - 1].to_vec(),
    }
}

fn coord_json(p: &Coord) -> Value {
    json!([p.0, p.1])
}

/// FeatureCollection text with one feature per line, ordered by segment id.
pub fn graph_to_geojson(graph: &WaterwayGraph) -> String {
    let mut out = String::new();
    let _ = write!(
        out,
        "{{\"type\":\"FeatureCollection\",\"{ELEVATION_SAMPLING_KEY}\":\"{ELEVATION_SAMPLING}\",\"features\":["
    );
    for (i, s) in graph.segments.iter().enumerate() {
        let geometry = if s.points.len() == 1 {
            json!({"type": "Point", "coordinates": coord_json(&s.points[0])})
        } else {
            json!({"type": "LineString", "coordinates": s.points.iter().map(coord_json).collect::<Vec<_>>()})
        };
        let order = s.order.map_or(-1, i64::from);
        let feature = json!({
            "type": "Feature",
            "properties": {"segment_id": s.id, "stream_order": order},
            "geometry": geometry,
        });
        out.push_str(if i == 0 { "\n" } else { ",\n" });
        out.push_str(&feature.to_string());
    }
    out.push_str("\n]}\n");
    out
}

pub fn write_graph(path: impl AsRef<Path>, graph: &WaterwayGraph) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, graph_to_geojson(graph)).map_err(|e| Error::io(path, e))
}

/// Rebuilds a graph from features. Missing `segment_id`s fall back to the
/// feature position; `stream_order` of -1 or absent means unassigned.
pub fn graph_from_features(features: &[Feature]) -> Result<WaterwayGraph> {
    let mut parts = Vec::new();
    for (pos, f) in features.iter().enumerate() {
        let id = match f.properties.get("segment_id") {
            None => pos,
            Some(v) => v
                .as_u64()
                .ok_or_else(|| Error::GeoJson(format!("feature {pos}: segment_id must be a non-negative integer")))?
                as usize,
        };
        let order = match f.property_i64("stream_order") {
            None | Some(-1) => None,
            Some(o) if o >= 1 && o <= u32::MAX as i64 => Some(o as u32),
            Some(o) => return Err(Error::InvalidOrder(o)),
        };
        let points = match &f.geometry {
            Some(Geometry::LineString(l)) if !l.is_empty() => l.clone(),
            Some(Geometry::Point(p)) => vec![*p],
            _ => {
                return Err(Error::GeoJson(format!(
                    "feature {pos}: waterway geometry must be a non-empty LineString or a Point"
                )))
            }
        };
        parts.push((id, points, order));
    }
    WaterwayGraph::from_segments(parts)
}

pub fn parse_graph(text: &str) -> Result<WaterwayGraph> {
    graph_from_features(&crate::geojson::parse_features(text)?)
}

pub fn read_graph(path: impl AsRef<Path>) -> Result<WaterwayGraph> {
    graph_from_features(&crate::geojson::read_features(path)?)
}
