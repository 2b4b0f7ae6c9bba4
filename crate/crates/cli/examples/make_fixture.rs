//! Regenerates the synthetic watershed fixture used by the end-to-end tests.
//!
//! ```text
//! cargo run -p waterways-cli --example make_fixture -- crates/cli/tests/fixtures/watershed
//! ```
//!
//! A handful of channels drawn in pixel space give a waterway probability
//! raster (wide enough that thinning has real work to do), a DEM with valleys
//! along the channels falling to the south, and reference lines that follow
//! the channels with a small offset.

use std::fmt::Write as _;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use waterways_core::raster::{write_ascii_grid, GeoGrid, GeoTransform};

const SIZE: usize = 200;
const CELL: f64 = 1.0 / 2048.0;
const ORIGIN: (f64, f64) = (30.0, -1.75);

/// Channels as `(col, row)` vertices, upstream first.
fn channels() -> Vec<Vec<(f64, f64)>> {
    vec![
        vec![(96.0, 4.0), (104.0, 40.0), (98.0, 80.0), (108.0, 120.0), (104.0, 160.0), (110.0, 196.0)],
        vec![(18.0, 26.0), (52.0, 50.0), (98.0, 80.0)],
        vec![(184.0, 16.0), (150.0, 36.0), (102.5, 58.0)],
        vec![(150.0, 36.0), (170.0, 70.0)],
        vec![(24.0, 150.0), (70.0, 146.0), (106.0, 162.0)],
        vec![(176.0, 118.0), (140.0, 124.0), (107.0, 132.0)],
    ]
}

fn segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let t = (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / (dx * dx + dy * dy)).clamp(0.0, 1.0);
    (a.0 + t * dx - p.0).hypot(a.1 + t * dy - p.1)
}

fn nearest_channel(p: (f64, f64), lines: &[Vec<(f64, f64)>]) -> f64 {
    lines
        .iter()
        .flat_map(|l| l.windows(2).map(move |w| segment_distance(p, w[0], w[1])))
        .fold(f64::INFINITY, f64::min)
}

fn round_to(v: f64, decimals: i32) -> f64 {
    let s = 10f64.powi(decimals);
    (v * s).round() / s
}

fn main() {
    let out = PathBuf::from(std::env::args().nth(1).expect("usage: make_fixture <output dir>"));
    std::fs::create_dir_all(&out).expect("create output directory");
    let t = GeoTransform::new(ORIGIN.0, ORIGIN.1, CELL, SIZE, SIZE).unwrap();
    let lines = channels();
    let mut rng = ChaCha8Rng::seed_from_u64(2048);

    let mut probability = Vec::with_capacity(SIZE * SIZE);
    let mut elevation = Vec::with_capacity(SIZE * SIZE);
    for r in 0..SIZE {
        for c in 0..SIZE {
            let p = (c as f64 + 0.5, r as f64 + 0.5);
            let d = nearest_channel(p, &lines);
            let noise: f64 = rng.gen_range(-0.03..0.03);
            let prob = (-(d * d) / (2.0 * 2.2 * 2.2)).exp() + noise;
            probability.push(round_to(prob.clamp(0.0, 1.0), 3));
            let jitter: f64 = rng.gen_range(0.0..0.5);
            elevation.push(round_to(900.0 - 2.0 * r as f64 + 4.0 * d.sqrt() + jitter, 2));
        }
    }
    let probability = GeoGrid::new(t, probability, Some(-9999.0)).unwrap();
    let elevation = GeoGrid::new(t, elevation, Some(-9999.0)).unwrap();
    write_ascii_grid(&probability, out.join("mask.asc")).unwrap();
    write_ascii_grid(&elevation, out.join("dem.asc")).unwrap();

    // reference lines: the channels shifted by a fraction of a cell, minus
    // the last one, plus a stream the model never found
    let mut reference = lines[..lines.len() - 1].to_vec();
    reference.push(vec![(10.0, 190.0), (40.0, 180.0), (60.0, 190.0)]);
    let mut text = String::from("{\"type\":\"FeatureCollection\",\"features\":[\n");
    for (i, line) in reference.iter().enumerate() {
        let coords: Vec<String> = line
            .iter()
            .map(|&(c, r)| {
                let lon = ORIGIN.0 + (c + 0.3) * CELL;
                let lat = ORIGIN.1 - (r + 0.2) * CELL;
                format!("[{lon},{lat}]")
            })
            .collect();
        let sep = if i + 1 == reference.len() { "" } else { "," };
        let _ = writeln!(
            text,
            "{{\"type\":\"Feature\",\"properties\":{{\"name\":\"reference {i}\"}},\"geometry\":{{\"type\":\"LineString\",\"coordinates\":[{}]}}}}{sep}",
            coords.join(",")
        );
    }
    text.push_str("]}\n");
    std::fs::write(out.join("reference.geojson"), text).unwrap();

    // request points: some on channels, some well away from them
    let mut requests = String::from("lon,lat,country,service\n");
    for (i, &(c, r)) in [(100.0, 30.0), (60.0, 52.0), (30.0, 100.0), (106.0, 140.0), (180.0, 180.0), (120.0, 160.0)]
        .iter()
        .enumerate()
    {
        let country = if i % 2 == 0 { "Atlantis" } else { "Lemuria" };
        let service = ["school", "market", "health"][i % 3];
        let _ = writeln!(requests, "{},{},{country},{service}", ORIGIN.0 + c * CELL, ORIGIN.1 - r * CELL);
    }
    std::fs::write(out.join("requests.csv"), requests).unwrap();

    let config = "# synthetic watershed, see examples/make_fixture.rs\n\
                  mask = mask.asc\n\
                  dem = dem.asc\n\
                  reference = reference.geojson\n\
                  threshold = 0.5\n\
                  eval_thresholds = 0.001,0.002\n\
                  out_dir = out\n";
    std::fs::write(out.join("example.cfg"), config).unwrap();
}
