//! Elevation-driven Strahler ordering for graphs that need not be trees.
//!
//! Segments are visited from the highest upper endpoint down. A segment's
//! tributaries are the segments already ordered at its upper endpoint: with
//! none it is order 1, when two or more share the largest order `n` it is
//! `n + 1`, otherwise it takes the largest order. Afterwards any segment
//! whose two endpoints both touch other segment ends is raised to at least 2.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::raster::GeoGrid;
use crate::vectorize::{Segment, WaterwayGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OrderCategory {
    O1,
    O2,
    O3Plus,
}

impl OrderCategory {
    pub const ALL: [OrderCategory; 3] = [OrderCategory::O1, OrderCategory::O2, OrderCategory::O3Plus];

    /// Column label used in reports.
    pub fn label(self) -> &'static str {
        match self {
            OrderCategory::O1 => "1",
            OrderCategory::O2 => "2",
            OrderCategory::O3Plus => "3",
        }
    }
}

pub fn order_category(order: i64) -> Result<OrderCategory> {
    match order {
        1 => Ok(OrderCategory::O1),
        2 => Ok(OrderCategory::O2),
        o if o >= 3 => Ok(OrderCategory::O3Plus),
        o => Err(Error::InvalidOrder(o)),
    }
}

/// How each segment received its order.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderTrace {
    /// Segment positions in visiting order.
    pub visit_order: Vec<usize>,
    /// Per segment position: the upper node it was ordered at.
    pub upper_node: Vec<usize>,
    /// Per segment position: positions of the tributaries used.
    pub tributaries: Vec<Vec<usize>>,
    /// Per segment position: order before the two-connected floor.
    pub merged_order: Vec<u32>,
}

/// Elevation under every node, sampled at the node's cell.
pub fn node_elevations(graph: &WaterwayGraph, elevation: &GeoGrid<f64>) -> Result<Vec<f64>> {
    graph
        .nodes
        .iter()
        .map(|n| {
            let (lon, lat) = n.point;
            elevation.sample(lon, lat).ok_or(Error::MissingElevation { lon, lat })
        })
        .collect()
}

pub fn assign_orders(graph: &WaterwayGraph, elevation: &GeoGrid<f64>) -> Result<WaterwayGraph> {
    Ok(assign_orders_traced(graph, &node_elevations(graph, elevation)?)?.0)
}

fn geometry_cmp(a: &Segment, b: &Segment) -> Ordering {
    for (p, q) in a.points.iter().zip(&b.points) {
        let o = p.0.total_cmp(&q.0).then(p.1.total_cmp(&q.1));
        if o != Ordering::Equal {
            return o;
        }
    }
    a.points.len().cmp(&b.points.len())
}

/// Orders segments given one elevation per node.
pub fn assign_orders_traced(graph: &WaterwayGraph, node_elevation: &[f64]) -> Result<(WaterwayGraph, OrderTrace)> {
    if node_elevation.len() != graph.nodes.len() {
        return Err(Error::InvalidArgument(format!(
            "{} node elevations for {} nodes",
            node_elevation.len(),
            graph.nodes.len()
        )));
    }
    if let Some(&e) = node_elevation.iter().find(|e| !e.is_finite()) {
        return Err(Error::InvalidArgument(format!("node elevation {e} is not finite")));
    }
    let segs = &graph.segments;
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); graph.nodes.len()];
    for (i, s) in segs.iter().enumerate() {
        incident[s.start].push(i);
        if s.end != s.start {
            incident[s.end].push(i);
        }
    }

    let ends = |s: &Segment| {
        let (a, b) = (node_elevation[s.start], node_elevation[s.end]);
        match a.total_cmp(&b) {
            Ordering::Greater => (s.start, s.end),
            Ordering::Less => (s.end, s.start),
            Ordering::Equal => (s.start.min(s.end), s.start.max(s.end)),
        }
    };
    let upper: Vec<usize> = segs.iter().map(|s| ends(s).0).collect();

    let mut visit_order: Vec<usize> = (0..segs.len()).collect();
    visit_order.sort_by(|&i, &j| {
        let (ui, li) = ends(&segs[i]);
        let (uj, lj) = ends(&segs[j]);
        node_elevation[uj]
            .total_cmp(&node_elevation[ui])
            .then(node_elevation[lj].total_cmp(&node_elevation[li]))
            .then_with(|| geometry_cmp(&segs[i], &segs[j]))
            .then(segs[i].id.cmp(&segs[j].id))
    });

    let mut order: Vec<Option<u32>> = vec![None; segs.len()];
    let mut tributaries = vec![Vec::new(); segs.len()];
    for &i in &visit_order {
        let tribs: Vec<usize> = incident[upper[i]]
            .iter()
            .copied()
            .filter(|&j| j != i && order[j].is_some())
            .collect();
        let merged = match tribs.iter().filter_map(|&j| order[j]).max() {
            None => 1,
            Some(n) if tribs.iter().filter(|&&j| order[j] == Some(n)).count() >= 2 => n + 1,
            Some(n) => n,
        };
        order[i] = Some(merged);
        tributaries[i] = tribs;
    }

    let merged_order: Vec<u32> = order.iter().map(|o| o.unwrap_or(1)).collect();
    let mut out = graph.clone();
    for (i, s) in out.segments.iter_mut().enumerate() {
        let connected = graph.nodes[s.start].degree >= 2 && graph.nodes[s.end].degree >= 2;
        s.order = Some(if connected { merged_order[i].max(2) } else { merged_order[i] });
    }
    Ok((
        out,
        OrderTrace {
            visit_order,
            upper_node: upper,
            tributaries,
            merged_order,
        },
    ))
}
