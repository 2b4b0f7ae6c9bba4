//! Stream order on random downhill trees against the textbook recursion.

use proptest::prelude::*;
use waterways_core::stream_order::assign_orders_traced;
use waterways_core::vectorize::WaterwayGraph;

/// Parent of each non-root node; children always have larger indices.
fn tree() -> impl Strategy<Value = Vec<usize>> {
    (2usize..40).prop_flat_map(|n| {
        (1..n).map(|v| (0..v).boxed()).collect::<Vec<_>>()
    })
}

fn strahler(v: usize, children: &[Vec<usize>]) -> u32 {
    let k: Vec<u32> = children[v].iter().map(|&c| strahler(c, children)).collect();
    match k.iter().max() {
        None => 1,
        Some(&m) if k.iter().filter(|&&x| x == m).count() >= 2 => m + 1,
        Some(&m) => m,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn trees_follow_classical_order(parents in tree(), flips in prop::collection::vec(any::<bool>(), 40)) {
        let n = parents.len() + 1;
        let mut children = vec![Vec::new(); n];
        for (i, &p) in parents.iter().enumerate() {
            children[p].push(i + 1);
        }
        // elevation is the node index, so every child sits above its parent
        let point = |v: usize| (v as f64, (v * 7 % 11) as f64);
        let parts = parents
            .iter()
            .enumerate()
            .map(|(i, &p)| {
                let (a, b) = if flips[i % flips.len()] { (i + 1, p) } else { (p, i + 1) };
                (i, vec![point(a), point(b)], None)
            })
            .collect();
        let g = WaterwayGraph::from_segments(parts).unwrap();
        let elev: Vec<f64> = g.nodes.iter().map(|nd| nd.point.0).collect();
        let (out, trace) = assign_orders_traced(&g, &elev).unwrap();
        for s in &out.segments {
            let child = s.id + 1;
            let mut want = strahler(child, &children);
            // the floor applies where both ends join other segments
            let parent = parents[s.id];
            let parent_deg = children[parent].len() + usize::from(parent != 0);
            let child_deg = children[child].len() + 1;
            if parent_deg >= 2 && child_deg >= 2 {
                want = want.max(2);
            }
            prop_assert_eq!(s.order, Some(want), "segment {}", s.id);
        }
        // merge rule at every junction, as traced
        for (i, tribs) in trace.tributaries.iter().enumerate() {
            let orders: Vec<u32> = tribs.iter().map(|&j| trace.merged_order[j]).collect();
            let max = orders.iter().copied().max();
            let want = match max {
                None => 1,
                Some(m) if orders.iter().filter(|&&o| o == m).count() >= 2 => m + 1,
                Some(m) => m,
            };
            prop_assert_eq!(trace.merged_order[i], want);
        }
    }
}
