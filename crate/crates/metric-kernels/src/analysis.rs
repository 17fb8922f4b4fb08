//! Measure-level and regression diagnostics on top of a kernel model.
//!
//! Includes empirical measures with mean-embedding inner products, the
//! induced maximum mean discrepancy, ridge regression in the kernel's
//! feature space, and a resolution sweep that tracks how regression error
//! responds to finer coverings or longer truncation prefixes.

use crate::covering::greedy_cover;
use crate::embedding::{auto_q, q_upper_limit};
use crate::kernel::{KernelError, KernelModel};
use crate::scalar::ScalarKernelSpec;
use crate::space::FiniteMetricSpace;
use crate::util::format_sig9;
use nalgebra::DVector;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::sync::Arc;
use thiserror::Error;

/// Radicands more negative than this indicate a real defect rather than
/// rounding, so they are reported instead of clamped.
pub const MMD_RADICAND_FLOOR: f64 = -1e-10;

const WEIGHT_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Covering(#[from] crate::covering::CoveringError),
    #[error("invalid measure: {0}")]
    BadMeasure(String),
    #[error("measure references point {index}, space has {size} points")]
    MeasureSpaceMismatch { index: usize, size: usize },
    #[error("squared discrepancy evaluated to {value}, below the rounding floor")]
    NegativeRadicand { value: f64 },
    #[error("ridge system is not positive definite, factorization failed")]
    SolveFailure,
    #[error("expected {expected} target values, found {found}")]
    TargetLengthMismatch { expected: usize, found: usize },
    #[error("ridge must be a positive finite number, got {ridge}")]
    InvalidRidge { ridge: f64 },
    #[error("sweep grid is empty")]
    EmptyGrid,
}

/// Finitely supported probability measure given by point indices and
/// matching weights.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMeasure {
    support: Vec<usize>,
    weights: Vec<f64>,
}

impl EmpiricalMeasure {
    pub fn new(support: Vec<usize>, weights: Vec<f64>) -> Result<Self, AnalysisError> {
        if support.is_empty() {
            return Err(AnalysisError::BadMeasure("support is empty".into()));
        }
        if support.len() != weights.len() {
            return Err(AnalysisError::BadMeasure(format!(
                "support has {} points but {} weights",
                support.len(),
                weights.len()
            )));
        }
        for (k, &w) in weights.iter().enumerate() {
            if !w.is_finite() || w < 0.0 {
                return Err(AnalysisError::BadMeasure(format!(
                    "weight {k} is {w}, weights must be finite and nonnegative"
                )));
            }
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(AnalysisError::BadMeasure(format!(
                "weights sum to {total}, expected 1"
            )));
        }
        Ok(EmpiricalMeasure { support, weights })
    }

    /// Unit mass at a single point.
    pub fn dirac(x: usize) -> Self {
        EmpiricalMeasure {
            support: vec![x],
            weights: vec![1.0],
        }
    }

    /// Equal weights over the given points.
    pub fn uniform(points: &[usize]) -> Result<Self, AnalysisError> {
        if points.is_empty() {
            return Err(AnalysisError::BadMeasure("support is empty".into()));
        }
        let w = 1.0 / points.len() as f64;
        let weights = vec![w; points.len()];
        // uniform weights are exact up to one rounding, renormalize the last
        let mut m = EmpiricalMeasure {
            support: points.to_vec(),
            weights,
        };
        let head: f64 = m.weights[..m.weights.len() - 1].iter().sum();
        let last = m.weights.len() - 1;
        m.weights[last] = 1.0 - head;
        m
            .weights
            .iter()
            .all(|&w| w >= 0.0)
            .then_some(m)
            .ok_or_else(|| AnalysisError::BadMeasure("uniform weights underflowed".into()))
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

fn check_measure(model: &KernelModel, m: &EmpiricalMeasure) -> Result<(), AnalysisError> {
    let size = model.space().size();
    for &x in m.support() {
        if x >= size {
            return Err(AnalysisError::MeasureSpaceMismatch { index: x, size });
        }
    }
    Ok(())
}

/// Inner product of the mean embeddings of two measures under the model's
/// kernel.
pub fn mean_embedding_inner(
    model: &KernelModel,
    mu: &EmpiricalMeasure,
    nu: &EmpiricalMeasure,
) -> Result<f64, AnalysisError> {
    check_measure(model, mu)?;
    check_measure(model, nu)?;
    let mut total = 0.0;
    for (&x, &wx) in mu.support.iter().zip(&mu.weights) {
        for (&y, &wy) in nu.support.iter().zip(&nu.weights) {
            total += wx * wy * model.evaluate(x, y)?;
        }
    }
    Ok(total)
}

/// Squared norm of a measure's mean embedding.
pub fn mean_embedding_norm_sq(
    model: &KernelModel,
    mu: &EmpiricalMeasure,
) -> Result<f64, AnalysisError> {
    mean_embedding_inner(model, mu, mu)
}

// Orders measure arguments so symmetric quantities accumulate in one fixed
// order regardless of which side the caller passed them on.
fn swap_arguments(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure) -> bool {
    match mu.support.cmp(&nu.support) {
        std::cmp::Ordering::Less => false,
        std::cmp::Ordering::Greater => true,
        std::cmp::Ordering::Equal => {
            mu.weights
                .iter()
                .map(|w| w.to_bits())
                .cmp(nu.weights.iter().map(|w| w.to_bits()))
                == std::cmp::Ordering::Greater
        }
    }
}

/// Maximum mean discrepancy between two measures. A mildly negative squared
/// value from rounding is clamped to zero; anything below the floor is an
/// error. Bitwise symmetric in its arguments: the cross term is evaluated in
/// a canonical order and the norms are combined commutatively.
pub fn mmd(
    model: &KernelModel,
    mu: &EmpiricalMeasure,
    nu: &EmpiricalMeasure,
) -> Result<f64, AnalysisError> {
    let mm = mean_embedding_inner(model, mu, mu)?;
    let nn = mean_embedding_inner(model, nu, nu)?;
    let (lhs, rhs) = if swap_arguments(mu, nu) {
        (nu, mu)
    } else {
        (mu, nu)
    };
    let cross = mean_embedding_inner(model, lhs, rhs)?;
    let radicand = (mm + nn) - 2.0 * cross;
    if radicand < MMD_RADICAND_FLOOR {
        return Err(AnalysisError::NegativeRadicand { value: radicand });
    }
    Ok(radicand.max(0.0).sqrt())
}

/// Ridge regression solution over a training subset.
#[derive(Debug, Clone)]
pub struct KrrFit {
    train: Vec<usize>,
    coeffs: Vec<f64>,
    ridge: f64,
    norm_sq: f64,
}

impl KrrFit {
    pub fn train_points(&self) -> &[usize] {
        &self.train
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    /// Squared feature-space norm of the fitted function.
    pub fn norm_sq(&self) -> f64 {
        self.norm_sq
    }

    /// Sup norm of the training residual. The normal equations force the
    /// residual at each training point to equal `-ridge` times its
    /// coefficient, so this is exact given the solve.
    pub fn train_residual_inf(&self) -> f64 {
        self.ridge * self.coeffs.iter().fold(0.0f64, |m, &c| m.max(c.abs()))
    }

    /// Predicted value at any point of the space.
    pub fn predict(&self, model: &KernelModel, x: usize) -> Result<f64, AnalysisError> {
        let mut total = 0.0;
        for (&t, &c) in self.train.iter().zip(&self.coeffs) {
            total += c * model.evaluate(x, t)?;
        }
        Ok(total)
    }
}

/// Solves `(G + ridge I) c = y` on the training subset by Cholesky
/// factorization.
pub fn krr_fit(
    model: &KernelModel,
    train: &[usize],
    targets: &[f64],
    ridge: f64,
) -> Result<KrrFit, AnalysisError> {
    if !(ridge > 0.0) || !ridge.is_finite() {
        return Err(AnalysisError::InvalidRidge { ridge });
    }
    if targets.len() != train.len() {
        return Err(AnalysisError::TargetLengthMismatch {
            expected: train.len(),
            found: targets.len(),
        });
    }
    let gram = model.gram(train)?;
    let n = gram.dim();
    let mut system = gram.matrix().clone();
    for i in 0..n {
        system[(i, i)] += ridge;
    }
    let chol = system.cholesky().ok_or(AnalysisError::SolveFailure)?;
    let y = DVector::from_column_slice(targets);
    let c = chol.solve(&y);
    let norm_sq = (c.transpose() * gram.matrix() * &c)[(0, 0)].max(0.0);
    Ok(KrrFit {
        train: train.to_vec(),
        coeffs: c.iter().copied().collect(),
        ridge,
        norm_sq,
    })
}

/// Resolution axis of a sweep: covering radii or truncation prefix lengths.
#[derive(Debug, Clone)]
pub enum SweepGrid {
    Eta(Vec<f64>),
    TruncationLen(Vec<usize>),
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub param: f64,
    pub j: usize,
    pub rho: f64,
    pub train_err: f64,
    pub sup_err: f64,
    pub krr_norm: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepMeta {
    pub space_id: String,
    pub kernel_spec: ScalarKernelSpec,
    pub mode: String,
    pub q: Option<f64>,
    pub ridge: f64,
    pub seed: u64,
    pub train_size: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub meta: SweepMeta,
}

impl SweepReport {
    /// CSV body with one row per grid value, ascending in the parameter.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("param,J,rho,train_err,sup_err,krr_norm\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                format_sig9(r.param),
                r.j,
                format_sig9(r.rho),
                format_sig9(r.train_err),
                format_sig9(r.sup_err),
                format_sig9(r.krr_norm),
            ));
        }
        out
    }

    pub fn meta_json(&self) -> String {
        serde_json::to_string_pretty(&self.meta).expect("sweep metadata serializes")
    }
}

/// Runs ridge regression at each resolution in the grid and reports training
/// and out-of-sample sup errors against the target function.
///
/// Half of the points, chosen by one seeded shuffle, form the training set.
/// In covering mode `q` is honored when admissible for the resulting region
/// count; otherwise an admissible value is chosen automatically. Rows come
/// back sorted ascending in the grid parameter.
#[allow(clippy::too_many_arguments)]
pub fn approximation_sweep(
    space: &Arc<FiniteMetricSpace>,
    spec: &ScalarKernelSpec,
    grid: &SweepGrid,
    targets: &[f64],
    q: Option<f64>,
    ridge: f64,
    seed: u64,
    space_id: &str,
) -> Result<SweepReport, AnalysisError> {
    let m = space.size();
    if targets.len() != m {
        return Err(AnalysisError::TargetLengthMismatch {
            expected: m,
            found: targets.len(),
        });
    }
    let empty = match grid {
        SweepGrid::Eta(v) => v.is_empty(),
        SweepGrid::TruncationLen(v) => v.is_empty(),
    };
    if empty {
        return Err(AnalysisError::EmptyGrid);
    }

    let mut order: Vec<usize> = (0..m).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let mut train: Vec<usize> = order[..m.div_ceil(2)].to_vec();
    train.sort_unstable();
    let train_targets: Vec<f64> = train.iter().map(|&i| targets[i]).collect();

    let mut rows = Vec::new();
    match grid {
        SweepGrid::Eta(etas) => {
            let mut etas = etas.clone();
            etas.sort_by(|a, b| a.total_cmp(b));
            for &eta in &etas {
                let covering = greedy_cover(space, eta)?;
                let j = covering.center_count();
                let q_used = match q {
                    Some(v) if v > 1.0 && v < q_upper_limit(j) => v,
                    _ => auto_q(j),
                };
                let model = KernelModel::new_covering(space.clone(), spec, covering, q_used)?;
                rows.push(sweep_row(
                    &model,
                    eta,
                    j,
                    &train,
                    &train_targets,
                    targets,
                    ridge,
                )?);
            }
        }
        SweepGrid::TruncationLen(lens) => {
            let mut lens = lens.clone();
            lens.sort_unstable();
            for &len in &lens {
                let model =
                    KernelModel::new_truncation(space.clone(), spec, q.unwrap_or(2.0), len)?;
                rows.push(sweep_row(
                    &model,
                    len as f64,
                    len,
                    &train,
                    &train_targets,
                    targets,
                    ridge,
                )?);
            }
        }
    }

    Ok(SweepReport {
        rows,
        meta: SweepMeta {
            space_id: space_id.to_string(),
            kernel_spec: spec.clone(),
            mode: match grid {
                SweepGrid::Eta(_) => "covering".into(),
                SweepGrid::TruncationLen(_) => "truncation".into(),
            },
            q,
            ridge,
            seed,
            train_size: train.len(),
        },
    })
}

fn sweep_row(
    model: &KernelModel,
    param: f64,
    j: usize,
    train: &[usize],
    train_targets: &[f64],
    targets: &[f64],
    ridge: f64,
) -> Result<SweepRow, AnalysisError> {
    let fit = krr_fit(model, train, train_targets, ridge)?;
    let mut train_err = 0.0f64;
    for (&i, &y) in train.iter().zip(train_targets) {
        train_err = train_err.max((fit.predict(model, i)? - y).abs());
    }
    let mut sup_err = 0.0f64;
    for (i, &y) in targets.iter().enumerate() {
        sup_err = sup_err.max((fit.predict(model, i)? - y).abs());
    }
    Ok(SweepRow {
        param,
        j,
        rho: model.rho(),
        train_err,
        sup_err,
        krr_norm: fit.norm_sq().sqrt(),
    })
}
