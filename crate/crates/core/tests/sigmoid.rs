//! The 8-bit logistic transform against a high-precision oracle table.

use proptest::prelude::*;
use waterways_core::features::sigmoid_transform;

fn oracle() -> Vec<u8> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/sigmoid_oracle.txt");
    std::fs::read_to_string(path).unwrap().lines().map(|l| l.parse().unwrap()).collect()
}

#[test]
fn matches_oracle_on_the_whole_grid() {
    let want = oracle();
    assert_eq!(want.len(), 10_001);
    for (i, &w) in want.iter().enumerate() {
        let x = (i as f64 - 5000.0) / 500.0;
        assert_eq!(sigmoid_transform(x), w, "x = {x}");
    }
}

#[test]
fn fixed_points() {
    assert_eq!(sigmoid_transform(0.0), 128);
    assert_eq!(sigmoid_transform(-1e9), 0);
    assert_eq!(sigmoid_transform(1e9), 255);
    assert_eq!(sigmoid_transform(f64::INFINITY), 255);
    assert_eq!(sigmoid_transform(f64::NEG_INFINITY), 0);
}

proptest! {
    #[test]
    fn monotone(a in -50.0f64..50.0, b in -50.0f64..50.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(sigmoid_transform(lo) <= sigmoid_transform(hi));
    }

    #[test]
    fn near_symmetric(x in -20.0f64..20.0) {
        let s = u16::from(sigmoid_transform(x)) + u16::from(sigmoid_transform(-x));
        prop_assert!(s == 255 || s == 256, "f({x}) + f(-{x}) = {s}");
    }
}
