//! Tracing thinned masks into graphs and back.

use std::collections::BTreeMap;

use proptest::prelude::*;
use waterways_core::raster::{GeoGrid, GeoTransform};
use waterways_core::thinning::{find_block, thin};
use waterways_core::vectorize::{graph_to_geojson, inner_points, parse_graph, skeleton_to_graph};

fn skeleton(rows: usize, cols: usize, cells: Vec<u8>, elev: Vec<f64>) -> Option<GeoGrid<u8>> {
    let t = GeoTransform::new(0.0, rows as f64, 1.0, rows, cols).unwrap();
    let out = thin(&GeoGrid::new(t, cells, None).unwrap(), &GeoGrid::new(t, elev, None).unwrap()).unwrap();
    find_block(&out).is_none().then_some(out)
}

fn instance() -> impl Strategy<Value = (usize, usize, Vec<u8>, Vec<f64>)> {
    (2usize..16, 2usize..16).prop_flat_map(|(r, c)| {
        (
            Just(r),
            Just(c),
            prop::collection::vec(prop::bool::weighted(0.5).prop_map(u8::from), r * c),
            prop::collection::vec(0.0f64..100.0, r * c),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn covers_every_cell((rows, cols, cells, elev) in instance()) {
        let Some(skel) = skeleton(rows, cols, cells, elev) else { return Ok(()) };
        let g = skeleton_to_graph(&skel).unwrap();
        let mut covered = vec![0u8; rows * cols];
        for s in &g.segments {
            for &(x, y) in &s.points {
                let (r, c) = ((rows as f64 - y - 0.5) as usize, (x - 0.5) as usize);
                covered[r * cols + c] = 1;
            }
            for w in s.points.windows(2) {
                prop_assert!((w[0].0 - w[1].0).abs() <= 1.0 && (w[0].1 - w[1].1).abs() <= 1.0);
                prop_assert!(w[0] != w[1]);
            }
        }
        prop_assert_eq!(&covered[..], skel.cells());
        // node degrees sum to twice the number of multi-point segments
        let ends: usize = g.nodes.iter().map(|n| n.degree).sum();
        prop_assert_eq!(ends, 2 * g.segments.iter().filter(|s| s.points.len() >= 2).count());
    }

    #[test]
    fn geojson_round_trip((rows, cols, cells, elev) in instance()) {
        let Some(skel) = skeleton(rows, cols, cells, elev) else { return Ok(()) };
        let g = skeleton_to_graph(&skel).unwrap();
        let text = graph_to_geojson(&g);
        let back = parse_graph(&text).unwrap();
        prop_assert_eq!(&back, &g);
        prop_assert_eq!(graph_to_geojson(&back), text);
    }

    #[test]
    fn inner_points_drop_only_the_ends((rows, cols, cells, elev) in instance()) {
        let Some(skel) = skeleton(rows, cols, cells, elev) else { return Ok(()) };
        let g = skeleton_to_graph(&skel).unwrap();
        for s in &g.segments {
            let inner = inner_points(s);
            let n = s.points.len();
            let want = match n {
                1 => 0,
                2 => 1,
                _ if s.is_closed() => n - 1,
                _ => n - 2,
            };
            prop_assert_eq!(inner.len(), want);
        }
    }
}

#[test]
fn y_shape_has_three_segments() {
    let rows = ["#...#", ".#.#.", "..#..", "..#..", "..#.."];
    let cells: Vec<u8> = rows.iter().flat_map(|r| r.bytes().map(|b| u8::from(b == b'#'))).collect();
    let t = GeoTransform::new(0.0, 5.0, 1.0, 5, 5).unwrap();
    let g = skeleton_to_graph(&GeoGrid::new(t, cells, None).unwrap()).unwrap();
    assert_eq!(g.segments.len(), 3);
    let mut degrees: BTreeMap<usize, usize> = BTreeMap::new();
    for n in &g.nodes {
        *degrees.entry(n.degree).or_default() += 1;
    }
    assert_eq!(degrees, BTreeMap::from([(1, 3), (3, 1)]));
}
