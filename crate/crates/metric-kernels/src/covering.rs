//! Coverings of a finite metric space by closed balls around chosen centers.
//!
//! Both constructions walk the same farthest-point traversal: starting from a
//! seed point, the next center is always the point farthest from the current
//! center set. The traversal order does not depend on the radius, so
//! shrinking `eta` can only extend the center list, never reorder it.

use crate::space::FiniteMetricSpace;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Numerical slack when re-checking the covering property.
pub const COVER_SLACK: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum CoveringError {
    #[error("eta = {eta} is outside (0, {diameter}]")]
    EtaOutOfRange { eta: f64, diameter: f64 },
    #[error("budget J = {j} is outside 1..={m}")]
    BudgetOutOfRange { j: usize, m: usize },
    #[error("space has no positive pairwise distance, no covering with eta > 0 exists")]
    DegenerateSpace,
    #[error("start index {start} is out of range for {m} points")]
    StartOutOfRange { start: usize, m: usize },
}

/// A covering: ordered distinct center indices, the ball radius `eta`, and
/// for every point the position (into `centers`) of its region's center.
///
/// Regions partition the space: a point belongs to the first center in
/// selection order that attains its minimal center distance, so every center
/// sits in its own region.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Covering {
    centers: Vec<usize>,
    eta: f64,
    region_of: Vec<usize>,
}

impl Covering {
    pub fn centers(&self) -> &[usize] {
        &self.centers
    }

    pub fn center_count(&self) -> usize {
        self.centers.len()
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Position into `centers` of the region owning point `x`.
    pub fn region_of(&self, x: usize) -> usize {
        self.region_of[x]
    }

    pub fn regions(&self) -> &[usize] {
        &self.region_of
    }

    pub fn point_count(&self) -> usize {
        self.region_of.len()
    }

    /// Point indices of region `j`, ascending.
    pub fn region_points(&self, j: usize) -> Vec<usize> {
        self.region_of
            .iter()
            .enumerate()
            .filter_map(|(i, &r)| (r == j).then_some(i))
            .collect()
    }

    /// Largest distance from any point to its nearest center.
    pub fn achieved_radius(&self, space: &FiniteMetricSpace) -> f64 {
        (0..space.size())
            .map(|i| {
                self.centers
                    .iter()
                    .map(|&c| space.dist(i, c))
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    }
}

/// Farthest-point traversal from `start`: returns the visit order and, for
/// each prefix length, the coverage radius it achieves. Stops early once the
/// radius hits zero (remaining points duplicate a center).
fn farthest_point_order(space: &FiniteMetricSpace, start: usize) -> (Vec<usize>, Vec<f64>) {
    let m = space.size();
    let mut order = Vec::new();
    let mut radii = Vec::new();
    let mut nearest = vec![f64::INFINITY; m];
    let mut current = start;
    loop {
        order.push(current);
        let row = space.distances_from(current);
        let mut far_idx = 0usize;
        let mut far_dist = -1.0f64;
        for i in 0..m {
            if row[i] < nearest[i] {
                nearest[i] = row[i];
            }
            // strict comparison keeps the smallest index on ties
            if nearest[i] > far_dist {
                far_dist = nearest[i];
                far_idx = i;
            }
        }
        radii.push(far_dist);
        if far_dist <= 0.0 || order.len() == m {
            break;
        }
        current = far_idx;
    }
    (order, radii)
}

fn assign_regions(space: &FiniteMetricSpace, centers: &[usize]) -> Vec<usize> {
    (0..space.size())
        .map(|i| {
            let mut best = 0usize;
            let mut best_d = f64::INFINITY;
            for (j, &c) in centers.iter().enumerate() {
                let d = space.dist(i, c);
                if d < best_d {
                    best_d = d;
                    best = j;
                }
            }
            best
        })
        .collect()
}

/// Greedy covering at radius `eta`, seeded at point 0.
pub fn greedy_cover(space: &FiniteMetricSpace, eta: f64) -> Result<Covering, CoveringError> {
    greedy_cover_from(space, eta, 0)
}

/// Greedy covering at radius `eta` from an arbitrary start point.
pub fn greedy_cover_from(
    space: &FiniteMetricSpace,
    eta: f64,
    start: usize,
) -> Result<Covering, CoveringError> {
    if start >= space.size() {
        return Err(CoveringError::StartOutOfRange {
            start,
            m: space.size(),
        });
    }
    if !(eta > 0.0) || eta > space.diameter() || !eta.is_finite() {
        return Err(CoveringError::EtaOutOfRange {
            eta,
            diameter: space.diameter(),
        });
    }
    let (order, radii) = farthest_point_order(space, start);
    let needed = radii
        .iter()
        .position(|&r| r <= eta)
        .map(|p| p + 1)
        .unwrap_or(order.len());
    let centers = order[..needed].to_vec();
    let region_of = assign_regions(space, &centers);
    Ok(Covering {
        centers,
        eta,
        region_of,
    })
}

/// Covering with exactly `j` centers (fewer only if the space runs out of
/// distinct points); `eta` is the achieved radius, bumped to the smallest
/// positive pairwise distance when the centers cover exactly.
pub fn cover_with_budget(space: &FiniteMetricSpace, j: usize) -> Result<Covering, CoveringError> {
    let m = space.size();
    if j == 0 || j > m {
        return Err(CoveringError::BudgetOutOfRange { j, m });
    }
    let (order, radii) = farthest_point_order(space, 0);
    let take = j.min(order.len());
    let centers = order[..take].to_vec();
    let mut eta = radii[take - 1];
    if eta <= 0.0 {
        eta = space
            .min_positive_distance()
            .ok_or(CoveringError::DegenerateSpace)?;
    }
    let region_of = assign_regions(space, &centers);
    Ok(Covering {
        centers,
        eta,
        region_of,
    })
}
