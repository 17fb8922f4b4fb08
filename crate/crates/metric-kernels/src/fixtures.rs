//! Built-in spaces used by the command line tool, tests, and benches.
//!
//! All constructions are deterministic; the random graph is generated from a
//! fixed seed so every build sees byte-identical distances.

use crate::space::FiniteMetricSpace;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::sync::Arc;

/// Two points at distance one.
pub fn two_point() -> Arc<FiniteMetricSpace> {
    Arc::new(
        FiniteMetricSpace::from_distance_matrix(&[vec![0.0, 1.0], vec![1.0, 0.0]])
            .expect("two point space is valid"),
    )
}

/// Three collinear points at unit spacing.
pub fn line3() -> Arc<FiniteMetricSpace> {
    Arc::new(
        FiniteMetricSpace::from_point_cloud(&[vec![0.0], vec![1.0], vec![2.0]])
            .expect("three point line is valid"),
    )
}

/// 200 points equally spaced on a circle with arc-length distance, so the
/// diameter is pi.
pub fn circle200() -> Arc<FiniteMetricSpace> {
    let n = 200usize;
    let step = PI / 100.0;
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let gap = i.abs_diff(j);
                    let hops = gap.min(n - gap);
                    hops as f64 * step
                })
                .collect()
        })
        .collect();
    Arc::new(FiniteMetricSpace::from_distance_matrix(&rows).expect("circle distances are a metric"))
}

/// Angle of each circle point, for defining target functions.
pub fn circle200_angles() -> Vec<f64> {
    (0..200).map(|i| i as f64 * (PI / 100.0)).collect()
}

/// Connected random weighted graph on 50 vertices: a random tree plus 75
/// extra shortcut edges, weights in [0.5, 1.5), shortest-path metric.
pub fn graph50() -> Arc<FiniteMetricSpace> {
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    let mut edges: Vec<(usize, usize, f64)> = Vec::with_capacity(49 + 75);
    for v in 1..50usize {
        let parent = rng.gen_range(0..v);
        edges.push((parent, v, rng.gen_range(0.5..1.5)));
    }
    let mut extras = 0;
    while extras < 75 {
        let u = rng.gen_range(0..50usize);
        let v = rng.gen_range(0..50usize);
        let w = rng.gen_range(0.5..1.5);
        if u != v {
            edges.push((u, v, w));
            extras += 1;
        }
    }
    Arc::new(FiniteMetricSpace::from_graph(&edges).expect("seeded graph is connected"))
}

/// Looks a fixture up by name.
pub fn by_name(name: &str) -> Option<Arc<FiniteMetricSpace>> {
    match name {
        "two_point" => Some(two_point()),
        "line3" => Some(line3()),
        "circle200" => Some(circle200()),
        "graph50" => Some(graph50()),
        _ => None,
    }
}

/// Every fixture with its name, for exhaustive test loops.
pub fn all() -> Vec<(&'static str, Arc<FiniteMetricSpace>)> {
    vec![
        ("two_point", two_point()),
        ("line3", line3()),
        ("circle200", circle200()),
        ("graph50", graph50()),
    ]
}
