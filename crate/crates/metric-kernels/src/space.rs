//! Finite metric spaces backed by a validated distance matrix.
//!
//! A space is at most [`MAX_POINTS`] points. Construction always checks
//! symmetry, a zero diagonal and nonnegativity; the triangle inequality is
//! checked exhaustively for small spaces and on a fixed sample of triples for
//! large ones. Point-cloud and shortest-path constructions satisfy the
//! triangle inequality by construction, so the triple scan is skipped there.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Hard cap on the number of points; quadratic storage beyond this is a
/// configuration mistake, not a workload.
pub const MAX_POINTS: usize = 20_000;

/// Exhaustive triangle validation up to this size, sampled above it.
const FULL_TRIANGLE_LIMIT: usize = 512;
const SAMPLED_TRIPLES: usize = 1_000_000;
const TRIANGLE_SAMPLE_SEED: u64 = 0x7472_6961;

/// Floyd-Warshall below this size, repeated Dijkstra above.
const DENSE_APSP_LIMIT: usize = 1024;

/// Relative slack on checked triangle inequalities, scaled by the diameter.
const TRIANGLE_SLACK: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum SpaceError {
    #[error("distance matrix is not square: row {row} has {found} entries, expected {expected}")]
    NonSquare {
        row: usize,
        found: usize,
        expected: usize,
    },
    #[error("distance d({i},{j}) = {value} is not finite")]
    NonFinite { i: usize, j: usize, value: f64 },
    #[error("asymmetric distances: d({i},{j}) = {forward} but d({j},{i}) = {backward}")]
    Asymmetry {
        i: usize,
        j: usize,
        forward: f64,
        backward: f64,
    },
    #[error("negative distance d({i},{j}) = {value}")]
    NegativeDistance { i: usize, j: usize, value: f64 },
    #[error("nonzero diagonal entry d({i},{i}) = {value}")]
    NonzeroDiagonal { i: usize, value: f64 },
    #[error("triangle inequality violated: d({i},{k}) > d({i},{j}) + d({j},{k})")]
    TriangleViolation { i: usize, j: usize, k: usize },
    #[error("empty input: a space needs at least one point")]
    Empty,
    #[error("point cloud is ragged: point {row} has {found} coordinates, expected {expected}")]
    RaggedInput {
        row: usize,
        found: usize,
        expected: usize,
    },
    #[error("graph is disconnected: no path between nodes {i} and {j}")]
    DisconnectedGraph { i: usize, j: usize },
    #[error("edge ({u},{v}) has nonpositive weight {w}")]
    NonpositiveWeight { u: usize, v: usize, w: f64 },
    #[error("space has {m} points, the supported maximum is {max}")]
    TooManyPoints { m: usize, max: usize },
    #[error("expected {expected} labels, got {found}")]
    LabelCountMismatch { expected: usize, found: usize },
}

/// A finite metric space: points are indices `0..size`, distances live in a
/// row-major matrix. The diameter is cached at construction.
#[derive(Debug, Clone)]
pub struct FiniteMetricSpace {
    size: usize,
    dist: Vec<f64>,
    diameter: f64,
    labels: Option<Vec<String>>,
}

impl FiniteMetricSpace {
    /// Builds a space from an explicit distance matrix and validates all
    /// metric axioms on it.
    pub fn from_distance_matrix(rows: &[Vec<f64>]) -> Result<Self, SpaceError> {
        let m = rows.len();
        if m == 0 {
            return Err(SpaceError::Empty);
        }
        if m > MAX_POINTS {
            return Err(SpaceError::TooManyPoints { m, max: MAX_POINTS });
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != m {
                return Err(SpaceError::NonSquare {
                    row: i,
                    found: row.len(),
                    expected: m,
                });
            }
        }
        let mut dist = Vec::with_capacity(m * m);
        for row in rows {
            dist.extend_from_slice(row);
        }
        Self::from_flat_checked(m, dist, true)
    }

    /// Euclidean distances of a point cloud. The triangle inequality holds by
    /// construction and is not re-checked.
    pub fn from_point_cloud(points: &[Vec<f64>]) -> Result<Self, SpaceError> {
        let m = points.len();
        if m == 0 {
            return Err(SpaceError::Empty);
        }
        if m > MAX_POINTS {
            return Err(SpaceError::TooManyPoints { m, max: MAX_POINTS });
        }
        let dim = points[0].len();
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(SpaceError::RaggedInput {
                    row: i,
                    found: p.len(),
                    expected: dim,
                });
            }
            for (j, &c) in p.iter().enumerate() {
                if !c.is_finite() {
                    return Err(SpaceError::NonFinite { i, j, value: c });
                }
            }
        }
        let mut dist = vec![0.0; m * m];
        for i in 0..m {
            for j in (i + 1)..m {
                let d = points[i]
                    .iter()
                    .zip(&points[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                dist[i * m + j] = d;
                dist[j * m + i] = d;
            }
        }
        Self::from_flat_checked(m, dist, false)
    }

    /// All-pairs shortest-path metric of an undirected weighted graph. Node
    /// count is inferred as `max node index + 1`; parallel edges keep the
    /// lightest weight and self-loops are ignored.
    pub fn from_graph(edges: &[(usize, usize, f64)]) -> Result<Self, SpaceError> {
        if edges.is_empty() {
            return Err(SpaceError::Empty);
        }
        let mut m = 0usize;
        for &(u, v, w) in edges {
            if !(w > 0.0) || !w.is_finite() {
                return Err(SpaceError::NonpositiveWeight { u, v, w });
            }
            m = m.max(u + 1).max(v + 1);
        }
        if m > MAX_POINTS {
            return Err(SpaceError::TooManyPoints { m, max: MAX_POINTS });
        }
        let dist = if m <= DENSE_APSP_LIMIT {
            apsp_floyd_warshall(m, edges)
        } else {
            apsp_dijkstra(m, edges)
        };
        for i in 0..m {
            for j in 0..m {
                if !dist[i * m + j].is_finite() {
                    return Err(SpaceError::DisconnectedGraph { i, j });
                }
            }
        }
        Self::from_flat_checked(m, dist, false)
    }

    fn from_flat_checked(
        m: usize,
        dist: Vec<f64>,
        check_triangle: bool,
    ) -> Result<Self, SpaceError> {
        let mut diameter = 0.0f64;
        for i in 0..m {
            let dii = dist[i * m + i];
            if dii != 0.0 {
                return Err(SpaceError::NonzeroDiagonal { i, value: dii });
            }
            for j in 0..m {
                let d = dist[i * m + j];
                if !d.is_finite() {
                    return Err(SpaceError::NonFinite { i, j, value: d });
                }
                if d < 0.0 {
                    return Err(SpaceError::NegativeDistance { i, j, value: d });
                }
                let back = dist[j * m + i];
                if d != back {
                    return Err(SpaceError::Asymmetry {
                        i,
                        j,
                        forward: d,
                        backward: back,
                    });
                }
                diameter = diameter.max(d);
            }
        }
        let space = FiniteMetricSpace {
            size: m,
            dist,
            diameter,
            labels: None,
        };
        if check_triangle {
            space.check_triangle()?;
        }
        Ok(space)
    }

    fn check_triangle(&self) -> Result<(), SpaceError> {
        let slack = TRIANGLE_SLACK * self.diameter;
        let m = self.size;
        if m <= FULL_TRIANGLE_LIMIT {
            for i in 0..m {
                for j in (i + 1)..m {
                    for k in (j + 1)..m {
                        self.check_triple(i, j, k, slack)?;
                    }
                }
            }
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(TRIANGLE_SAMPLE_SEED);
            for _ in 0..SAMPLED_TRIPLES {
                let i = rng.gen_range(0..m);
                let j = rng.gen_range(0..m);
                let k = rng.gen_range(0..m);
                self.check_triple(i, j, k, slack)?;
            }
        }
        Ok(())
    }

    /// Checks all three orientations of one triple.
    fn check_triple(&self, i: usize, j: usize, k: usize, slack: f64) -> Result<(), SpaceError> {
        let m = self.size;
        let d = |a: usize, b: usize| self.dist[a * m + b];
        if d(i, k) > d(i, j) + d(j, k) + slack {
            return Err(SpaceError::TriangleViolation { i, j, k });
        }
        if d(i, j) > d(i, k) + d(k, j) + slack {
            return Err(SpaceError::TriangleViolation { i, j: k, k: j });
        }
        if d(j, k) > d(j, i) + d(i, k) + slack {
            return Err(SpaceError::TriangleViolation { i: j, j: i, k });
        }
        Ok(())
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Largest pairwise distance; 0 only for a single point or all-duplicate
    /// spaces.
    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.size + j]
    }

    /// Row `i` of the distance matrix.
    #[inline]
    pub fn distances_from(&self, i: usize) -> &[f64] {
        &self.dist[i * self.size..(i + 1) * self.size]
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self, SpaceError> {
        if labels.len() != self.size {
            return Err(SpaceError::LabelCountMismatch {
                expected: self.size,
                found: labels.len(),
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    /// Smallest strictly positive pairwise distance, if any.
    pub fn min_positive_distance(&self) -> Option<f64> {
        let mut best = f64::INFINITY;
        for i in 0..self.size {
            for j in (i + 1)..self.size {
                let d = self.dist(i, j);
                if d > 0.0 && d < best {
                    best = d;
                }
            }
        }
        best.is_finite().then_some(best)
    }
}

fn adjacency(m: usize, edges: &[(usize, usize, f64)]) -> Vec<Vec<(usize, f64)>> {
    let mut adj = vec![Vec::new(); m];
    for &(u, v, w) in edges {
        if u == v {
            continue;
        }
        adj[u].push((v, w));
        adj[v].push((u, w));
    }
    adj
}

fn apsp_floyd_warshall(m: usize, edges: &[(usize, usize, f64)]) -> Vec<f64> {
    let mut d = vec![f64::INFINITY; m * m];
    for i in 0..m {
        d[i * m + i] = 0.0;
    }
    for &(u, v, w) in edges {
        if u == v {
            continue;
        }
        if w < d[u * m + v] {
            d[u * m + v] = w;
            d[v * m + u] = w;
        }
    }
    for k in 0..m {
        for i in 0..m {
            let dik = d[i * m + k];
            if !dik.is_finite() {
                continue;
            }
            for j in 0..m {
                let via = dik + d[k * m + j];
                if via < d[i * m + j] {
                    d[i * m + j] = via;
                }
            }
        }
    }
    d
}

fn apsp_dijkstra(m: usize, edges: &[(usize, usize, f64)]) -> Vec<f64> {
    use std::cmp::Ordering;
    use std::collections::BinaryHeap;

    #[derive(PartialEq)]
    struct Entry(f64, usize);
    impl Eq for Entry {}
    impl PartialOrd for Entry {
        fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
            Some(self.cmp(other))
        }
    }
    impl Ord for Entry {
        fn cmp(&self, other: &Self) -> Ordering {
            // reversed so the heap pops the smallest distance first
            other.0.total_cmp(&self.0)
        }
    }

    let adj = adjacency(m, edges);
    let mut d = vec![f64::INFINITY; m * m];
    for src in 0..m {
        let row = &mut d[src * m..(src + 1) * m];
        row[src] = 0.0;
        let mut heap = BinaryHeap::new();
        heap.push(Entry(0.0, src));
        while let Some(Entry(du, u)) = heap.pop() {
            if du > row[u] {
                continue;
            }
            for &(v, w) in &adj[u] {
                let cand = du + w;
                if cand < row[v] {
                    row[v] = cand;
                    heap.push(Entry(cand, v));
                }
            }
        }
    }
    d
}
