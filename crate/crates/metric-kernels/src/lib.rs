//! Kernel methods on finite metric spaces with certified approximation
//! error.
//!
//! The pipeline: validate a finite metric space ([`space`]), pick
//! representative centers by farthest-point traversal ([`covering`]), embed
//! points through geometrically weighted distance profiles ([`embedding`]),
//! and compose a positive scalar profile with the resulting feature geometry
//! to get a positive semidefinite kernel that is cheap to evaluate
//! ([`scalar`], [`kernel`]). Every approximation step carries an explicit
//! uniform error radius, and per-point interval certificates bound the
//! feature-space distortion rigorously, including all omitted coordinates.
//! On top sit measure embeddings, maximum mean discrepancy, ridge
//! regression, and resolution sweeps ([`analysis`]).
//!
//! Gram assembly and certification are data-parallel under the `parallel`
//! feature (on by default); sequential fallbacks stay available for
//! benchmarking and minimal builds.

pub mod analysis;
pub mod covering;
pub mod embedding;
pub mod fixtures;
pub mod io;
pub mod kernel;
pub mod scalar;
pub mod space;
pub mod util;

pub use analysis::{
    approximation_sweep, krr_fit, mean_embedding_inner, mean_embedding_norm_sq, mmd,
    AnalysisError, EmpiricalMeasure, KrrFit, SweepGrid, SweepReport,
};
pub use covering::{cover_with_budget, greedy_cover, Covering, CoveringError};
pub use embedding::{BoundedValue, EmbeddingConfig, EmbeddingError, SequenceContext, SequenceKind};
pub use kernel::{
    psd_check, CertifyReport, GramMatrix, KernelError, KernelMode, KernelModel, PsdReport,
};
pub use scalar::{ScalarError, ScalarKernel, ScalarKernelSpec, TaylorKind};
pub use space::{FiniteMetricSpace, SpaceError};
