//! Distance-profile embeddings into weighted coordinate sequences.
//!
//! A space embeds into l2 through `phi(x)_n = c_phi * d(x, x_n) / q^n` over a
//! basis enumeration `(x_n)`, and into `R^J` through the center profile
//! `phi_hat(x)_j = d(x, y_j) / sqrt(J)` of a covering. The bridge between the
//! two is a linear isometry built from a greedy split of the geometric series
//! `sum q^(-n)` into `J` balanced parts. Everything here works on finite
//! prefixes and reports rigorous interval enclosures for the omitted tails.

use crate::covering::Covering;
use crate::space::FiniteMetricSpace;
use crate::util::kahan_sum;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default l2 tail mass target used when choosing prefix lengths.
pub const TAIL_EPSILON: f64 = 1e-10;

/// Inner sums switch to compensated summation past this length.
pub(crate) const KAHAN_THRESHOLD: usize = 10_000;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("q = {q} is outside the admissible interval (1, {upper}) for J = {j}")]
    QOutOfRange { q: f64, j: usize, upper: f64 },
    #[error("prefix length N = {n} is below the minimum {min}")]
    NOutOfRange { n: usize, min: usize },
    #[error("configuration mismatch: {0}")]
    ConfigMismatch(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("point index {index} is out of range for {size} points")]
    IndexOutOfRange { index: usize, size: usize },
    #[error("certified half-width needs a prefix of {needed} entries, cap is {cap}")]
    InsufficientPrefix { needed: usize, cap: usize },
    #[error("invalid split weights: {0}")]
    BadWeights(String),
}

/// Shared constants of one embedding setup.
///
/// `c_phi = sqrt(q^2 - 1) / q` makes `phi` 1-Lipschitz with unit l2 mass per
/// unit distance; `c_b = sqrt(J (q^2 - 1)) / q` makes the series isometry
/// unitary. The identity `c_b / sqrt(J) = c_phi` is what lets the two feature
/// maps share coordinates, so it is asserted here once.
#[derive(Debug, Clone, Copy)]
pub struct EmbeddingConfig {
    q: f64,
    j: usize,
    n: usize,
    c_phi: f64,
    c_b: f64,
}

impl EmbeddingConfig {
    /// For use with a `j`-center covering: `q` must stay below
    /// `sqrt(1 + 1/(j-1))` so the squared series still splits into `j` parts.
    /// With `j = 1` any `q > 1` works.
    pub fn new(q: f64, j: usize, n: usize) -> Result<Self, EmbeddingError> {
        if j == 0 {
            return Err(EmbeddingError::ConfigMismatch(
                "need at least one region".into(),
            ));
        }
        if n == 0 {
            return Err(EmbeddingError::NOutOfRange { n, min: 1 });
        }
        let upper = q_upper_limit(j);
        if !(q > 1.0) || q >= upper || !q.is_finite() {
            return Err(EmbeddingError::QOutOfRange { q, j, upper });
        }
        let c_phi = (q * q - 1.0).sqrt() / q;
        let c_b = (j as f64 * (q * q - 1.0)).sqrt() / q;
        assert!(
            (c_b / (j as f64).sqrt() - c_phi).abs() <= 1e-12 * c_phi,
            "isometry and embedding scales drifted apart"
        );
        Ok(EmbeddingConfig { q, j, n, c_phi, c_b })
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn regions(&self) -> usize {
        self.j
    }

    pub fn prefix_len(&self) -> usize {
        self.n
    }

    pub fn c_phi(&self) -> f64 {
        self.c_phi
    }

    pub fn c_b(&self) -> f64 {
        self.c_b
    }
}

/// Largest admissible `q` for `j` regions (exclusive).
pub fn q_upper_limit(j: usize) -> f64 {
    if j >= 2 {
        (1.0 + 1.0 / (j as f64 - 1.0)).sqrt()
    } else {
        f64::INFINITY
    }
}

/// A safe default strictly inside the admissible interval.
pub fn auto_q(j: usize) -> f64 {
    if j >= 2 {
        (1.0 + 0.5 / (j as f64 - 1.0)).sqrt()
    } else {
        2.0
    }
}

/// Prefix length that pushes the omitted l2 tail mass `D^2 q^(-2N)` below
/// [`TAIL_EPSILON`].
pub fn default_prefix_len(diameter: f64, q: f64) -> usize {
    prefix_len_for_tail(diameter * diameter, q, TAIL_EPSILON)
}

/// Smallest `N` with `mass * q^(-2N) < target`.
pub fn prefix_len_for_tail(mass: f64, q: f64, target: f64) -> usize {
    if mass <= 0.0 || target <= 0.0 || !(q > 1.0) {
        return 1;
    }
    let n = ((mass / target).ln() / (2.0 * q.ln())).ceil();
    if n.is_finite() && n >= 1.0 {
        n as usize + 1
    } else {
        1
    }
}

/// Greedy split of the series `sum_n q^(-n)` into parts with prescribed
/// shares. `assignment[n]` is the part that received the term `q^(-n)`.
#[derive(Debug, Clone)]
pub struct SplitAssignment {
    assignment: Vec<usize>,
    partial_sums: Vec<f64>,
    targets: Vec<f64>,
    q: f64,
}

impl SplitAssignment {
    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn partial_sums(&self) -> &[f64] {
        &self.partial_sums
    }

    /// Limit value of each part: `lambda_j * q / (q - 1)`.
    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn q(&self) -> f64 {
        self.q
    }
}

/// Assigns each term `q^(-n)`, `n < n_terms`, to the first part whose running
/// sum stays strictly below its target after taking the term. Feasible for
/// every step whenever `1 < q < 1 + 1/(j-1)` and the shares are a positive
/// probability vector, which is validated up front.
///
/// The strict walk is reproduced exactly in f64 while the terms stay above
/// the rounding resolution of the running sums. Past that depth the strict
/// comparison goes blind and terms go to the widest remaining gap, matching
/// the exact walk up to rounding-level overshoot.
pub fn split_series(
    j: usize,
    q: f64,
    lambdas: &[f64],
    n_terms: usize,
) -> Result<SplitAssignment, EmbeddingError> {
    if j < 2 {
        return Err(EmbeddingError::ConfigMismatch(
            "split needs at least two parts".into(),
        ));
    }
    if lambdas.len() != j {
        return Err(EmbeddingError::DimensionMismatch {
            expected: j,
            found: lambdas.len(),
        });
    }
    for &l in lambdas {
        if !(l > 0.0) || !(l < 1.0) {
            return Err(EmbeddingError::BadWeights(format!(
                "shares must lie in (0, 1), got {l}"
            )));
        }
    }
    let total = kahan_sum(lambdas.iter().copied());
    if (total - 1.0).abs() > 1e-12 {
        return Err(EmbeddingError::BadWeights(format!(
            "shares must sum to 1, got {total}"
        )));
    }
    let upper = 1.0 + 1.0 / (j as f64 - 1.0);
    if !(q > 1.0) || q >= upper || !q.is_finite() {
        return Err(EmbeddingError::QOutOfRange { q, j, upper });
    }

    let s = q / (q - 1.0);
    let targets: Vec<f64> = lambdas.iter().map(|&l| l * s).collect();
    let mut partial_sums = vec![0.0f64; j];
    let mut assignment = Vec::with_capacity(n_terms);
    for step in 0..n_terms {
        let term = q.powi(-(step as i32));
        let part = match (0..j).find(|&p| partial_sums[p] + term < targets[p]) {
            Some(p) => p,
            None => {
                // The exact walk always has room: the remaining gaps sum to
                // the series tail, which exceeds j times the current term.
                // Once the term falls below the rounding resolution of the
                // running sums the strict comparison goes blind, so place
                // the term where the widest gap sits; any overshoot stays at
                // rounding level.
                (0..j)
                    .map(|p| (p, targets[p] - partial_sums[p]))
                    .max_by(|a, b| a.1.total_cmp(&b.1))
                    .map(|(p, _)| p)
                    .expect("parts are nonempty")
            }
        };
        partial_sums[part] += term;
        assignment.push(part);
    }
    Ok(SplitAssignment {
        assignment,
        partial_sums,
        targets,
        q,
    })
}

/// Region sequence adapted to a covering: the split of the squared series
/// `sum q^(-2n)` into equal shares, one per region. For a single region the
/// sequence is constant.
pub fn adapted_assignment(
    covering: &Covering,
    q: f64,
    n_terms: usize,
) -> Result<Vec<usize>, EmbeddingError> {
    let j = covering.center_count();
    let upper = q_upper_limit(j);
    if !(q > 1.0) || q >= upper || !q.is_finite() {
        return Err(EmbeddingError::QOutOfRange { q, j, upper });
    }
    if j == 1 {
        return Ok(vec![0; n_terms]);
    }
    let shares = vec![1.0 / j as f64; j];
    Ok(split_series(j, q * q, &shares, n_terms)?.assignment)
}

/// A materialized basis enumeration prefix: `points[n]` is the point playing
/// the role of `x_n`.
#[derive(Debug, Clone)]
pub struct BasisPrefix {
    points: Vec<usize>,
}

impl BasisPrefix {
    /// Plain cyclic enumeration `x_n = n mod m`.
    pub fn cyclic(m: usize, len: usize) -> Self {
        BasisPrefix {
            points: (0..len).map(|n| n % m).collect(),
        }
    }

    /// Adapted enumeration: slot `n` takes the next point of region
    /// `beta[n]`, cycling through each region's points in index order.
    pub fn adapted(covering: &Covering, beta: &[usize]) -> Result<Self, EmbeddingError> {
        let j = covering.center_count();
        let region_points: Vec<Vec<usize>> = (0..j).map(|r| covering.region_points(r)).collect();
        let mut cursors = vec![0usize; j];
        let mut points = Vec::with_capacity(beta.len());
        for &r in beta {
            if r >= j {
                return Err(EmbeddingError::IndexOutOfRange { index: r, size: j });
            }
            let pts = &region_points[r];
            if pts.is_empty() {
                return Err(EmbeddingError::ConfigMismatch(format!(
                    "region {r} is empty"
                )));
            }
            points.push(pts[cursors[r] % pts.len()]);
            cursors[r] += 1;
        }
        Ok(BasisPrefix { points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, n: usize) -> usize {
        self.points[n]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.points
    }
}

/// Center distance profile `phi_hat(x) = (d(x, y_j) / sqrt(J))_j`.
pub fn phi_hat(
    space: &FiniteMetricSpace,
    covering: &Covering,
    x: usize,
) -> Result<Vec<f64>, EmbeddingError> {
    if x >= space.size() {
        return Err(EmbeddingError::IndexOutOfRange {
            index: x,
            size: space.size(),
        });
    }
    let norm = (covering.center_count() as f64).sqrt();
    Ok(covering
        .centers()
        .iter()
        .map(|&c| space.dist(x, c) / norm)
        .collect())
}

/// First `config.prefix_len()` coordinates of the profile embedding
/// `phi(x)_n = c_phi * d(x, x_n) / q^n`.
pub fn phi_prefix(
    space: &FiniteMetricSpace,
    basis: &BasisPrefix,
    config: &EmbeddingConfig,
    x: usize,
) -> Result<Vec<f64>, EmbeddingError> {
    if x >= space.size() {
        return Err(EmbeddingError::IndexOutOfRange {
            index: x,
            size: space.size(),
        });
    }
    let n = config.prefix_len();
    if basis.len() < n {
        return Err(EmbeddingError::DimensionMismatch {
            expected: n,
            found: basis.len(),
        });
    }
    let q = config.q();
    Ok((0..n)
        .map(|k| config.c_phi() * space.dist(x, basis.point(k)) * q.powi(-(k as i32)))
        .collect())
}

/// Truncated embedding: the same coordinates as [`phi_prefix`], kept as an
/// `N`-dimensional feature map in its own right. Requires `N >= 2`.
pub fn phi_truncated(
    space: &FiniteMetricSpace,
    basis: &BasisPrefix,
    config: &EmbeddingConfig,
    x: usize,
) -> Result<Vec<f64>, EmbeddingError> {
    if config.prefix_len() < 2 {
        return Err(EmbeddingError::NOutOfRange {
            n: config.prefix_len(),
            min: 2,
        });
    }
    phi_prefix(space, basis, config, x)
}

/// Prefix of the series isometry `B(u)_n = c_b * u[beta[n]] / q^n`.
pub fn apply_isometry_prefix(
    u: &[f64],
    beta: &[usize],
    config: &EmbeddingConfig,
) -> Result<Vec<f64>, EmbeddingError> {
    if u.len() != config.regions() {
        return Err(EmbeddingError::DimensionMismatch {
            expected: config.regions(),
            found: u.len(),
        });
    }
    let n = config.prefix_len();
    if beta.len() < n {
        return Err(EmbeddingError::DimensionMismatch {
            expected: n,
            found: beta.len(),
        });
    }
    let q = config.q();
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let r = beta[k];
        if r >= u.len() {
            return Err(EmbeddingError::IndexOutOfRange {
                index: r,
                size: u.len(),
            });
        }
        out.push(config.c_b() * u[r] * q.powi(-(k as i32)));
    }
    Ok(out)
}

/// A value together with a rigorous symmetric error bar: the true quantity
/// lies in `[value - half_width, value + half_width]`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct BoundedValue {
    pub value: f64,
    pub half_width: f64,
}

impl BoundedValue {
    pub fn exact(value: f64) -> Self {
        BoundedValue {
            value,
            half_width: 0.0,
        }
    }

    pub fn lower(&self) -> f64 {
        self.value - self.half_width
    }

    pub fn upper(&self) -> f64 {
        self.value + self.half_width
    }
}

/// The three coordinate sequences diagnostics compare. All of them share the
/// per-entry envelope `|a_n| <= c_phi * D * q^(-n)`, which is what makes one
/// tail constant work for every pairing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SequenceKind {
    /// `phi(x)`: the full profile over the basis enumeration.
    Profile,
    /// `B(phi_hat(x))`: the center profile lifted through the isometry.
    CoveredProfile,
    /// `B_t(phi_t(x))`: the truncated profile padded with zeros after `len`.
    TruncatedProfile { len: usize },
}

/// Workspace holding one embedding setup: space, constants, basis prefix and
/// (in covering mode) the region sequence. All sequence evaluations and
/// certified inner products run through here so that mixed-configuration
/// comparisons are impossible by construction.
pub struct SequenceContext<'a> {
    space: &'a FiniteMetricSpace,
    config: EmbeddingConfig,
    basis: BasisPrefix,
    covering: Option<&'a Covering>,
    beta: Option<Vec<usize>>,
    pow: Vec<f64>,
}

impl<'a> SequenceContext<'a> {
    /// Covering mode: adapted region sequence and adapted basis.
    pub fn for_covering(
        space: &'a FiniteMetricSpace,
        covering: &'a Covering,
        q: f64,
        prefix_len: usize,
    ) -> Result<Self, EmbeddingError> {
        if covering.point_count() != space.size() {
            return Err(EmbeddingError::ConfigMismatch(format!(
                "covering indexes {} points, space has {}",
                covering.point_count(),
                space.size()
            )));
        }
        let config = EmbeddingConfig::new(q, covering.center_count(), prefix_len)?;
        let beta = adapted_assignment(covering, q, prefix_len)?;
        let basis = BasisPrefix::adapted(covering, &beta)?;
        let pow = powers(q, prefix_len);
        Ok(SequenceContext {
            space,
            config,
            basis,
            covering: Some(covering),
            beta: Some(beta),
            pow,
        })
    }

    /// Truncation mode: plain cyclic basis, no covering.
    pub fn for_truncation(
        space: &'a FiniteMetricSpace,
        q: f64,
        prefix_len: usize,
    ) -> Result<Self, EmbeddingError> {
        let config = EmbeddingConfig::new(q, 1, prefix_len)?;
        let basis = BasisPrefix::cyclic(space.size(), prefix_len);
        let pow = powers(q, prefix_len);
        Ok(SequenceContext {
            space,
            config,
            basis,
            covering: None,
            beta: None,
            pow,
        })
    }

    pub fn config(&self) -> &EmbeddingConfig {
        &self.config
    }

    pub fn basis(&self) -> &BasisPrefix {
        &self.basis
    }

    pub fn beta(&self) -> Option<&[usize]> {
        self.beta.as_deref()
    }

    fn check_point(&self, x: usize) -> Result<(), EmbeddingError> {
        if x >= self.space.size() {
            return Err(EmbeddingError::IndexOutOfRange {
                index: x,
                size: self.space.size(),
            });
        }
        Ok(())
    }

    /// Materializes the first `prefix_len` coordinates of a sequence.
    pub fn prefix(&self, kind: SequenceKind, x: usize) -> Result<Vec<f64>, EmbeddingError> {
        self.check_point(x)?;
        let n = self.config.prefix_len();
        let c = self.config.c_phi();
        match kind {
            SequenceKind::Profile => Ok((0..n)
                .map(|k| c * self.space.dist(x, self.basis.point(k)) * self.pow[k])
                .collect()),
            SequenceKind::CoveredProfile => {
                let covering = self.covering.ok_or_else(|| {
                    EmbeddingError::ConfigMismatch(
                        "covered profile requested in truncation mode".into(),
                    )
                })?;
                let beta = self.beta.as_ref().expect("covering mode carries beta");
                // c_b * phi_hat(x)[beta[n]] / q^n collapses to
                // c_phi * d(x, y_beta(n)) / q^n
                Ok((0..n)
                    .map(|k| c * self.space.dist(x, covering.centers()[beta[k]]) * self.pow[k])
                    .collect())
            }
            SequenceKind::TruncatedProfile { len } => Ok((0..n)
                .map(|k| {
                    if k < len {
                        c * self.space.dist(x, self.basis.point(k)) * self.pow[k]
                    } else {
                        0.0
                    }
                })
                .collect()),
        }
    }

    /// l2 tail mass bound for any sequence pairing past the prefix.
    pub fn tail_half_width(&self) -> f64 {
        let d = self.space.diameter();
        let n = self.config.prefix_len();
        d * d * self.config.q().powi(-2 * n as i32)
    }

    /// Certified inner product: the prefix dot product with a half-width
    /// covering everything past the prefix. Every sequence entry is bounded
    /// by `c_phi * D * q^(-n)`, so each omitted product term is at most
    /// `c_phi^2 D^2 q^(-2n)`, and those sum to exactly `D^2 q^(-2N)`.
    pub fn inner_product_bounded(
        &self,
        kind_a: SequenceKind,
        x: usize,
        kind_b: SequenceKind,
        y: usize,
    ) -> Result<BoundedValue, EmbeddingError> {
        let a = self.prefix(kind_a, x)?;
        let b = self.prefix(kind_b, y)?;
        let value = if a.len() > KAHAN_THRESHOLD {
            kahan_sum(a.iter().zip(&b).map(|(p, q)| p * q))
        } else {
            a.iter().zip(&b).map(|(p, q)| p * q).sum()
        };
        Ok(BoundedValue {
            value,
            half_width: self.tail_half_width(),
        })
    }

    /// Certified `||phi(x) - other(x)||^2`. The prefix part is summed
    /// exactly; the tail uses the sharp per-entry envelope of the specific
    /// difference: covering differences are bounded by `c_phi eta q^(-n)`
    /// via the region property, truncation differences by the diameter
    /// envelope starting at the truncation point.
    pub fn gap_sq(&self, other: SequenceKind, x: usize) -> Result<BoundedValue, EmbeddingError> {
        if other == SequenceKind::Profile {
            return Err(EmbeddingError::ConfigMismatch(
                "gap of the profile against itself is identically zero".into(),
            ));
        }
        let a = self.prefix(SequenceKind::Profile, x)?;
        let b = self.prefix(other, x)?;
        let n = self.config.prefix_len();
        let sq = |(p, q): (&f64, &f64)| (p - q) * (p - q);
        let prefix_mass = if n > KAHAN_THRESHOLD {
            kahan_sum(a.iter().zip(&b).map(sq))
        } else {
            a.iter().zip(&b).map(sq).sum()
        };
        let q = self.config.q();
        let tail = match other {
            SequenceKind::CoveredProfile => {
                let eta = self.covering.expect("checked by prefix").eta();
                eta * eta * q.powi(-2 * n as i32)
            }
            SequenceKind::TruncatedProfile { len } => {
                let d = self.space.diameter();
                let start = n.max(len);
                d * d * q.powi(-2 * start as i32)
            }
            SequenceKind::Profile => unreachable!(),
        };
        Ok(BoundedValue {
            value: prefix_mass + tail / 2.0,
            half_width: tail / 2.0,
        })
    }
}

fn powers(q: f64, len: usize) -> Vec<f64> {
    (0..len).map(|n| q.powi(-(n as i32))).collect()
}
