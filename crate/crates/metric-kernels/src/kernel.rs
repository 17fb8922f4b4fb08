//! Kernel models: a scalar profile composed with a feature geometry.
//!
//! Covering mode evaluates the scalar profile on center-profile inner
//! products or squared distances in `R^J`; truncation mode does the same on
//! the first `N` coordinates of the profile embedding. Both admit a uniform
//! approximation radius `rho` against the untruncated kernel, and both expose
//! certified per-point diagnostics whose intervals account for every omitted
//! coordinate.
//!
//! Gram rows are independent, so construction is data-parallel when the
//! `parallel` feature is enabled; `gram_sequential` and
//! `certify_all_sequential` keep the single-threaded path callable for
//! benchmarks and for builds without the feature.

use crate::covering::Covering;
use crate::embedding::{
    prefix_len_for_tail, q_upper_limit, BoundedValue, EmbeddingError, SequenceContext,
    SequenceKind,
};
use crate::scalar::{ScalarError, ScalarKernel, ScalarKernelSpec};
use crate::space::FiniteMetricSpace;
use crate::util::kahan_sum;
use nalgebra::DMatrix;
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::Serialize;
use std::sync::{Arc, OnceLock};
use thiserror::Error;

/// Eigenvalue tolerance scale: a Gram matrix passes when its smallest
/// eigenvalue is at least `-PSD_TOL_SCALE * max(1, max diagonal)`.
pub const PSD_TOL_SCALE: f64 = 1e-8;

/// Certified diagnostics shrink interval half-widths below this target.
pub const CERT_HALF_WIDTH_TARGET: f64 = 1e-8;

/// Slack added on top of `rho^2` when judging a certified interval.
pub const CERT_SLACK: f64 = 1e-6;

const KAHAN_THRESHOLD: usize = 10_000;

#[derive(Debug, Error)]
pub enum KernelError {
    #[error(transparent)]
    Scalar(#[from] ScalarError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error("matrix is not symmetric at ({i},{j})")]
    NonSymmetricInput { i: usize, j: usize },
    #[error("subset of points must be nonempty")]
    EmptySubset,
    #[error("space has zero diameter, kernel construction needs distinct points")]
    DegenerateSpace,
    #[error("point index {index} is out of range for {size} points")]
    IndexOutOfRange { index: usize, size: usize },
    #[error("configuration mismatch: {0}")]
    ConfigMismatch(String),
}

/// Feature geometry the scalar profile is composed with.
#[derive(Debug)]
pub enum KernelMode {
    Covering { covering: Covering, q: f64 },
    Truncation { q: f64, len: usize },
}

/// A fully validated kernel on a finite metric space.
#[derive(Debug)]
pub struct KernelModel {
    space: Arc<FiniteMetricSpace>,
    scalar: ScalarKernel,
    mode: KernelMode,
    c_kprime: f64,
    rho: f64,
    /// truncation only: `c_phi^2 q^(-2m)` per kept coordinate
    trunc_weights: Vec<f64>,
}

impl KernelModel {
    /// Covering-mode kernel. `q` governs the diagnostic embedding and must be
    /// admissible for the covering's region count.
    pub fn new_covering(
        space: Arc<FiniteMetricSpace>,
        spec: &ScalarKernelSpec,
        covering: Covering,
        q: f64,
    ) -> Result<Self, KernelError> {
        if covering.point_count() != space.size() {
            return Err(KernelError::ConfigMismatch(format!(
                "covering indexes {} points, space has {}",
                covering.point_count(),
                space.size()
            )));
        }
        let d = space.diameter();
        if d <= 0.0 {
            return Err(KernelError::DegenerateSpace);
        }
        let j = covering.center_count();
        let upper = q_upper_limit(j);
        if !(q > 1.0) || q >= upper || !q.is_finite() {
            return Err(KernelError::Embedding(EmbeddingError::QOutOfRange {
                q,
                j,
                upper,
            }));
        }
        let scalar = ScalarKernel::from_spec(spec, 4.0 * d * d)?;
        let c_kprime = scalar.derivative_bound()?;
        let eta = covering.eta();
        let rho = if scalar.is_radial() {
            eta * (2.0 * c_kprime).sqrt()
        } else {
            eta.sqrt() * (2.0 * d * c_kprime).sqrt()
        };
        Ok(KernelModel {
            space,
            scalar,
            mode: KernelMode::Covering { covering, q },
            c_kprime,
            rho,
            trunc_weights: Vec::new(),
        })
    }

    /// Truncation-mode kernel over the plain cyclic basis, keeping `len`
    /// coordinates (`len >= 2`).
    pub fn new_truncation(
        space: Arc<FiniteMetricSpace>,
        spec: &ScalarKernelSpec,
        q: f64,
        len: usize,
    ) -> Result<Self, KernelError> {
        let d = space.diameter();
        if d <= 0.0 {
            return Err(KernelError::DegenerateSpace);
        }
        if len < 2 {
            return Err(KernelError::Embedding(EmbeddingError::NOutOfRange {
                n: len,
                min: 2,
            }));
        }
        if !(q > 1.0) || !q.is_finite() {
            return Err(KernelError::Embedding(EmbeddingError::QOutOfRange {
                q,
                j: 1,
                upper: f64::INFINITY,
            }));
        }
        let scalar = ScalarKernel::from_spec(spec, 4.0 * d * d)?;
        let c_kprime = scalar.derivative_bound()?;
        let decay = q.powi(-(len as i32));
        let rho = if scalar.is_radial() {
            decay * d * (2.0 * c_kprime).sqrt()
        } else {
            decay.sqrt() * d * (2.0 * c_kprime).sqrt()
        };
        let c_phi_sq = (q * q - 1.0) / (q * q);
        let trunc_weights = (0..len)
            .map(|m| c_phi_sq * q.powi(-2 * m as i32))
            .collect();
        Ok(KernelModel {
            space,
            scalar,
            mode: KernelMode::Truncation { q, len },
            c_kprime,
            rho,
            trunc_weights,
        })
    }

    pub fn space(&self) -> &FiniteMetricSpace {
        &self.space
    }

    pub fn scalar(&self) -> &ScalarKernel {
        &self.scalar
    }

    pub fn mode(&self) -> &KernelMode {
        &self.mode
    }

    pub fn mode_name(&self) -> &'static str {
        match self.mode {
            KernelMode::Covering { .. } => "covering",
            KernelMode::Truncation { .. } => "truncation",
        }
    }

    pub fn covering(&self) -> Option<&Covering> {
        match &self.mode {
            KernelMode::Covering { covering, .. } => Some(covering),
            KernelMode::Truncation { .. } => None,
        }
    }

    pub fn q(&self) -> f64 {
        match self.mode {
            KernelMode::Covering { q, .. } | KernelMode::Truncation { q, .. } => q,
        }
    }

    /// Largest slope of the scalar profile over its argument range.
    pub fn derivative_bound(&self) -> f64 {
        self.c_kprime
    }

    /// Uniform approximation radius against the untruncated kernel.
    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn rho_sq(&self) -> f64 {
        self.rho * self.rho
    }

    fn check_point(&self, x: usize) -> Result<(), KernelError> {
        if x >= self.space.size() {
            return Err(KernelError::IndexOutOfRange {
                index: x,
                size: self.space.size(),
            });
        }
        Ok(())
    }

    /// Feature-space inner product fed to Taylor profiles.
    fn feature_inner(&self, x: usize, y: usize) -> f64 {
        match &self.mode {
            KernelMode::Covering { covering, .. } => {
                let centers = covering.centers();
                let terms = centers
                    .iter()
                    .map(|&c| self.space.dist(x, c) * self.space.dist(y, c));
                let sum = if centers.len() > KAHAN_THRESHOLD {
                    kahan_sum(terms)
                } else {
                    terms.sum()
                };
                sum / centers.len() as f64
            }
            KernelMode::Truncation { .. } => {
                let m = self.space.size();
                // parenthesized so evaluation is bitwise symmetric in x, y
                let terms = self
                    .trunc_weights
                    .iter()
                    .enumerate()
                    .map(|(k, &w)| w * (self.space.dist(x, k % m) * self.space.dist(y, k % m)));
                if self.trunc_weights.len() > KAHAN_THRESHOLD {
                    kahan_sum(terms)
                } else {
                    terms.sum()
                }
            }
        }
    }

    /// Feature-space squared distance fed to mixture profiles.
    fn feature_dist_sq(&self, x: usize, y: usize) -> f64 {
        match &self.mode {
            KernelMode::Covering { covering, .. } => {
                let centers = covering.centers();
                let terms = centers.iter().map(|&c| {
                    let diff = self.space.dist(x, c) - self.space.dist(y, c);
                    diff * diff
                });
                let sum = if centers.len() > KAHAN_THRESHOLD {
                    kahan_sum(terms)
                } else {
                    terms.sum()
                };
                sum / centers.len() as f64
            }
            KernelMode::Truncation { .. } => {
                let m = self.space.size();
                let terms = self.trunc_weights.iter().enumerate().map(|(k, &w)| {
                    let diff = self.space.dist(x, k % m) - self.space.dist(y, k % m);
                    w * diff * diff
                });
                if self.trunc_weights.len() > KAHAN_THRESHOLD {
                    kahan_sum(terms)
                } else {
                    terms.sum()
                }
            }
        }
    }

    /// Kernel value between two points.
    pub fn evaluate(&self, x: usize, y: usize) -> Result<f64, KernelError> {
        self.check_point(x)?;
        self.check_point(y)?;
        let t = if self.scalar.is_radial() {
            self.feature_dist_sq(x, y)
        } else {
            self.feature_inner(x, y)
        };
        // feature arguments never leave [0, D^2], well inside the domain
        debug_assert!(t.abs() <= 4.0 * self.space.diameter().powi(2) + 1e-9);
        Ok(self.scalar.eval(t)?)
    }

    fn gram_rows_sequential(&self, subset: &[usize]) -> Result<Vec<Vec<f64>>, KernelError> {
        (0..subset.len())
            .map(|a| self.gram_row(subset, a))
            .collect()
    }

    #[cfg(feature = "parallel")]
    fn gram_rows_parallel(&self, subset: &[usize]) -> Result<Vec<Vec<f64>>, KernelError> {
        (0..subset.len())
            .into_par_iter()
            .map(|a| self.gram_row(subset, a))
            .collect()
    }

    /// Upper-triangle row `a..` of the Gram matrix on `subset`.
    fn gram_row(&self, subset: &[usize], a: usize) -> Result<Vec<f64>, KernelError> {
        let i = subset[a];
        (a..subset.len())
            .map(|b| self.evaluate(i, subset[b]))
            .collect()
    }

    fn assemble_gram(n: usize, rows: Vec<Vec<f64>>) -> GramMatrix {
        let mut mat = DMatrix::zeros(n, n);
        for (a, row) in rows.into_iter().enumerate() {
            for (off, v) in row.into_iter().enumerate() {
                let b = a + off;
                mat[(a, b)] = v;
                mat[(b, a)] = v;
            }
        }
        GramMatrix {
            mat,
            min_eig: OnceLock::new(),
        }
    }

    fn check_subset(&self, subset: &[usize]) -> Result<(), KernelError> {
        if subset.is_empty() {
            return Err(KernelError::EmptySubset);
        }
        for &i in subset {
            self.check_point(i)?;
        }
        Ok(())
    }

    /// Gram matrix on a subset of points. Uses all threads when built with
    /// the `parallel` feature; results do not depend on evaluation order.
    pub fn gram(&self, subset: &[usize]) -> Result<GramMatrix, KernelError> {
        self.check_subset(subset)?;
        #[cfg(feature = "parallel")]
        let rows = self.gram_rows_parallel(subset)?;
        #[cfg(not(feature = "parallel"))]
        let rows = self.gram_rows_sequential(subset)?;
        Ok(Self::assemble_gram(subset.len(), rows))
    }

    /// Single-threaded Gram construction, kept public as the comparison
    /// baseline.
    pub fn gram_sequential(&self, subset: &[usize]) -> Result<GramMatrix, KernelError> {
        self.check_subset(subset)?;
        let rows = self.gram_rows_sequential(subset)?;
        Ok(Self::assemble_gram(subset.len(), rows))
    }

    fn sequence_context(&self, prefix: usize) -> Result<SequenceContext<'_>, KernelError> {
        match &self.mode {
            KernelMode::Covering { covering, q } => {
                Ok(SequenceContext::for_covering(&self.space, covering, *q, prefix)?)
            }
            KernelMode::Truncation { q, .. } => {
                Ok(SequenceContext::for_truncation(&self.space, *q, prefix)?)
            }
        }
    }

    /// Prefix length at which the propagated interval half-width drops below
    /// [`CERT_HALF_WIDTH_TARGET`].
    fn cert_prefix_len(&self, cap: usize) -> Result<usize, KernelError> {
        let d = self.space.diameter();
        // three inner products enter with weights 1, 2, 1; the mixture case
        // additionally doubles through 2 K(g)
        let combos = if self.scalar.is_radial() { 8.0 } else { 4.0 };
        let mass = combos * self.c_kprime * d * d;
        let needed = prefix_len_for_tail(mass, self.q(), CERT_HALF_WIDTH_TARGET).max(2);
        if needed > cap {
            return Err(KernelError::Embedding(EmbeddingError::InsufficientPrefix {
                needed,
                cap,
            }));
        }
        Ok(needed)
    }

    fn approximant_kind(&self) -> SequenceKind {
        match self.mode {
            KernelMode::Covering { .. } => SequenceKind::CoveredProfile,
            KernelMode::Truncation { len, .. } => SequenceKind::TruncatedProfile { len },
        }
    }

    fn feature_distance_sq_in(
        &self,
        ctx: &SequenceContext<'_>,
        x: usize,
    ) -> Result<BoundedValue, KernelError> {
        let other = self.approximant_kind();
        let phi = SequenceKind::Profile;
        let aa = ctx.inner_product_bounded(phi, x, phi, x)?;
        let ab = ctx.inner_product_bounded(phi, x, other, x)?;
        let bb = ctx.inner_product_bounded(other, x, other, x)?;
        let c = self.c_kprime;
        match &self.scalar {
            ScalarKernel::Taylor(k) => {
                let value = k.eval(aa.value)? - 2.0 * k.eval(ab.value)? + k.eval(bb.value)?;
                let half_width = c * (aa.half_width + 2.0 * ab.half_width + bb.half_width);
                Ok(BoundedValue { value, half_width })
            }
            ScalarKernel::Radial(k) => {
                // ||u - v||^2 through bilinearity, then K on the interval
                let g = aa.value - 2.0 * ab.value + bb.value;
                let g_width = aa.half_width + 2.0 * ab.half_width + bb.half_width;
                let value = 2.0 * k.value_at_zero() - 2.0 * k.eval(g.max(0.0))?;
                Ok(BoundedValue {
                    value,
                    half_width: 2.0 * c * g_width,
                })
            }
        }
    }

    /// Certified squared feature distance between the exact and approximate
    /// feature maps at point `x`. The prefix grows until the half-width meets
    /// the certification target, or fails with `InsufficientPrefix` past
    /// `prefix_cap`.
    pub fn feature_distance_sq(
        &self,
        x: usize,
        prefix_cap: usize,
    ) -> Result<BoundedValue, KernelError> {
        self.check_point(x)?;
        let prefix = self.cert_prefix_len(prefix_cap)?;
        let ctx = self.sequence_context(prefix)?;
        self.feature_distance_sq_in(&ctx, x)
    }

    /// Certifies every point of the space against `rho^2`.
    pub fn certify_all(&self, prefix_cap: usize) -> Result<CertifyReport, KernelError> {
        let prefix = self.cert_prefix_len(prefix_cap)?;
        let ctx = self.sequence_context(prefix)?;
        #[cfg(feature = "parallel")]
        let records: Vec<CertRecord> = (0..self.space.size())
            .into_par_iter()
            .map(|x| self.cert_record(&ctx, x))
            .collect::<Result<_, _>>()?;
        #[cfg(not(feature = "parallel"))]
        let records: Vec<CertRecord> = (0..self.space.size())
            .map(|x| self.cert_record(&ctx, x))
            .collect::<Result<_, _>>()?;
        Ok(self.summarize(prefix, records))
    }

    /// Single-threaded variant of [`certify_all`].
    pub fn certify_all_sequential(&self, prefix_cap: usize) -> Result<CertifyReport, KernelError> {
        let prefix = self.cert_prefix_len(prefix_cap)?;
        let ctx = self.sequence_context(prefix)?;
        let records: Vec<CertRecord> = (0..self.space.size())
            .map(|x| self.cert_record(&ctx, x))
            .collect::<Result<_, _>>()?;
        Ok(self.summarize(prefix, records))
    }

    fn cert_record(&self, ctx: &SequenceContext<'_>, x: usize) -> Result<CertRecord, KernelError> {
        let bv = self.feature_distance_sq_in(ctx, x)?;
        let rho_sq = self.rho_sq();
        let lo = bv.lower().max(0.0);
        let hi = bv.upper();
        Ok(CertRecord {
            point: x,
            interval: [lo, hi],
            rho_sq,
            pass: hi <= rho_sq + CERT_SLACK,
        })
    }

    fn summarize(&self, prefix: usize, points: Vec<CertRecord>) -> CertifyReport {
        let all_pass = points.iter().all(|r| r.pass);
        CertifyReport {
            mode: self.mode_name().to_string(),
            rho: self.rho,
            rho_sq: self.rho_sq(),
            prefix_len: prefix,
            all_pass,
            points,
        }
    }
}

/// Per-point certification outcome: the certified interval for the squared
/// feature distance and the bound it is compared against.
#[derive(Debug, Clone, Serialize)]
pub struct CertRecord {
    pub point: usize,
    pub interval: [f64; 2],
    pub rho_sq: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CertifyReport {
    pub mode: String,
    pub rho: f64,
    pub rho_sq: f64,
    pub prefix_len: usize,
    pub all_pass: bool,
    pub points: Vec<CertRecord>,
}

/// Symmetric kernel matrix with a lazily computed smallest eigenvalue.
#[derive(Debug)]
pub struct GramMatrix {
    mat: DMatrix<f64>,
    min_eig: OnceLock<f64>,
}

impl GramMatrix {
    /// Wraps an externally supplied matrix, insisting on exact symmetry.
    pub fn from_matrix(mat: DMatrix<f64>) -> Result<Self, KernelError> {
        if !mat.is_square() {
            return Err(KernelError::NonSymmetricInput { i: 0, j: 0 });
        }
        for i in 0..mat.nrows() {
            for j in (i + 1)..mat.ncols() {
                if mat[(i, j)] != mat[(j, i)] {
                    return Err(KernelError::NonSymmetricInput { i, j });
                }
            }
        }
        Ok(GramMatrix {
            mat,
            min_eig: OnceLock::new(),
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, KernelError> {
        let n = rows.len();
        for row in rows {
            if row.len() != n {
                return Err(KernelError::NonSymmetricInput { i: 0, j: 0 });
            }
        }
        let mat = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        Self::from_matrix(mat)
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.mat[(i, j)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    pub fn max_diagonal(&self) -> f64 {
        (0..self.dim()).map(|i| self.mat[(i, i)]).fold(0.0, f64::max)
    }

    /// Smallest eigenvalue, computed once and cached.
    pub fn min_eigenvalue(&self) -> f64 {
        *self.min_eig.get_or_init(|| {
            self.mat
                .symmetric_eigenvalues()
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min)
        })
    }
}

/// Positive semidefiniteness verdict at the scale-aware tolerance.
#[derive(Debug, Clone, Serialize)]
pub struct PsdReport {
    pub dim: usize,
    pub min_eigenvalue: f64,
    pub max_diagonal: f64,
    pub tolerance: f64,
    pub pass: bool,
}

pub fn psd_check(gram: &GramMatrix) -> PsdReport {
    let max_diag = gram.max_diagonal();
    let tolerance = PSD_TOL_SCALE * max_diag.max(1.0);
    let min_eigenvalue = gram.min_eigenvalue();
    PsdReport {
        dim: gram.dim(),
        min_eigenvalue,
        max_diagonal: max_diag,
        tolerance,
        pass: min_eigenvalue >= -tolerance,
    }
}
