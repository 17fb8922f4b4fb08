//! Scalar kernel profiles applied on top of feature geometry.
//!
//! Two families are supported. Taylor profiles `K(t) = sum a_n t^n` with all
//! `a_n > 0` are evaluated at inner products; mixture profiles
//! `K(t) = sum w_i exp(-s_i t)` are evaluated at squared distances. Series
//! evaluation stops only once a rigorous geometric majorant of the remaining
//! tail drops below `1e-14 * (1 + |partial sum|)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

const TAIL_REL: f64 = 1e-14;
const MAX_TERMS: usize = 100_000;

#[derive(Debug, Error)]
pub enum ScalarError {
    #[error("argument t = {t} exceeds the convergence bound {bound}")]
    DomainExceeded { t: f64, bound: f64 },
    #[error("series diverges: |ratio * t| = {ratio} must stay below 1 on [-{bound}, {bound}]")]
    DivergentSeries { ratio: f64, bound: f64 },
    #[error("mixture profile takes squared distances, got negative argument t = {t}")]
    NegativeArgument { t: f64 },
    #[error("scale must be positive and finite, got {scale}")]
    NonpositiveScale { scale: f64 },
    #[error("ratio must be positive and finite, got {ratio}")]
    NonpositiveRatio { ratio: f64 },
    #[error("custom coefficient list must be nonempty")]
    EmptyCoefficients,
    #[error("coefficient a_{index} = {value} must be strictly positive and finite")]
    NonpositiveCoefficient { index: usize, value: f64 },
    #[error("atom list must be nonempty")]
    EmptyAtoms,
    #[error("atom {index} has nonpositive weight {w}")]
    NonpositiveWeight { index: usize, w: f64 },
    #[error("atom {index} has negative decay rate {s}")]
    NegativeDecay { index: usize, s: f64 },
    #[error("at least one atom must have a strictly positive decay rate")]
    NoPositiveAtom,
    #[error("convergence bound must be positive and finite, got {bound}")]
    InvalidDomainBound { bound: f64 },
    #[error("series failed to reach the tail target within {0} terms")]
    NoConvergence(usize),
}

/// Declarative kernel description as it appears in JSON inputs.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ScalarKernelSpec {
    Taylor {
        #[serde(flatten)]
        kind: TaylorKind,
    },
    Radial {
        atoms: Vec<(f64, f64)>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TaylorKind {
    /// `a_n = scale^n / n!`, so `K(t) = exp(scale * t)`.
    Exponential { scale: f64 },
    /// `a_n = ratio^n`, so `K(t) = 1 / (1 - ratio * t)`; needs `ratio * t < 1`.
    Geometric { ratio: f64 },
    /// Finite positive coefficient list `a_0..a_d`.
    Custom { coeffs: Vec<f64> },
}

/// Validated Taylor profile together with the interval `[-T, T]` on which it
/// is guaranteed to converge.
#[derive(Debug, Clone)]
pub struct TaylorKernel {
    kind: TaylorKind,
    domain_bound: f64,
}

impl TaylorKernel {
    pub fn new(kind: TaylorKind, domain_bound: f64) -> Result<Self, ScalarError> {
        if !(domain_bound > 0.0) || !domain_bound.is_finite() {
            return Err(ScalarError::InvalidDomainBound {
                bound: domain_bound,
            });
        }
        match &kind {
            TaylorKind::Exponential { scale } => {
                if !(*scale > 0.0) || !scale.is_finite() {
                    return Err(ScalarError::NonpositiveScale { scale: *scale });
                }
            }
            TaylorKind::Geometric { ratio } => {
                if !(*ratio > 0.0) || !ratio.is_finite() {
                    return Err(ScalarError::NonpositiveRatio { ratio: *ratio });
                }
                if ratio * domain_bound >= 1.0 {
                    return Err(ScalarError::DivergentSeries {
                        ratio: ratio * domain_bound,
                        bound: domain_bound,
                    });
                }
            }
            TaylorKind::Custom { coeffs } => {
                if coeffs.is_empty() {
                    return Err(ScalarError::EmptyCoefficients);
                }
                for (index, &value) in coeffs.iter().enumerate() {
                    if !(value > 0.0) || !value.is_finite() {
                        return Err(ScalarError::NonpositiveCoefficient { index, value });
                    }
                }
            }
        }
        Ok(TaylorKernel { kind, domain_bound })
    }

    pub fn domain_bound(&self) -> f64 {
        self.domain_bound
    }

    pub fn kind(&self) -> &TaylorKind {
        &self.kind
    }

    pub fn eval(&self, t: f64) -> Result<f64, ScalarError> {
        if !t.is_finite() || t.abs() > self.domain_bound * (1.0 + 1e-12) {
            return Err(ScalarError::DomainExceeded {
                t,
                bound: self.domain_bound,
            });
        }
        match &self.kind {
            TaylorKind::Exponential { scale } => exp_series(scale * t),
            TaylorKind::Geometric { ratio } => {
                let x = ratio * t;
                if x.abs() >= 1.0 {
                    return Err(ScalarError::DivergentSeries {
                        ratio: x.abs(),
                        bound: self.domain_bound,
                    });
                }
                geometric_series(x)
            }
            TaylorKind::Custom { coeffs } => Ok(horner(coeffs, t)),
        }
    }

    /// `sum n * a_n * T^(n-1)`: the largest `|K'|` can get on `[-T, T]`,
    /// attained at `T` because every coefficient is positive.
    pub fn derivative_bound(&self) -> Result<f64, ScalarError> {
        let t = self.domain_bound;
        match &self.kind {
            TaylorKind::Exponential { scale } => {
                // terms n * s^n t^(n-1) / n! = s * (s t)^(n-1) / (n-1)!
                Ok(scale * exp_series(scale * t)?)
            }
            TaylorKind::Geometric { ratio } => {
                let x = ratio * t;
                let mut sum = 0.0;
                let mut pow = 1.0; // x^(n-1)
                for n in 1..=MAX_TERMS {
                    let term = n as f64 * ratio * pow;
                    sum += term;
                    pow *= x;
                    // terms grow by (n+1)/n * x; for n >= current the ratio
                    // is at most r below, so a geometric majorant applies
                    let r = (n as f64 + 1.0) / n as f64 * x;
                    if r < 1.0 {
                        let next = (n as f64 + 1.0) * ratio * pow;
                        if next / (1.0 - r) <= TAIL_REL * (1.0 + sum) {
                            return Ok(sum);
                        }
                    }
                }
                Err(ScalarError::NoConvergence(MAX_TERMS))
            }
            TaylorKind::Custom { coeffs } => Ok(coeffs
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (n, &a)| acc * t + n as f64 * a)),
        }
    }

    /// `K(0) = a_0`.
    pub fn value_at_zero(&self) -> f64 {
        match &self.kind {
            TaylorKind::Exponential { .. } | TaylorKind::Geometric { .. } => 1.0,
            TaylorKind::Custom { coeffs } => coeffs[0],
        }
    }
}

/// Validated mixture profile `K(t) = sum w_i exp(-s_i t)` over finitely many
/// atoms `(s_i, w_i)`.
#[derive(Debug, Clone)]
pub struct RadialKernel {
    atoms: Vec<(f64, f64)>,
}

impl RadialKernel {
    pub fn new(atoms: Vec<(f64, f64)>) -> Result<Self, ScalarError> {
        if atoms.is_empty() {
            return Err(ScalarError::EmptyAtoms);
        }
        let mut any_positive = false;
        for (index, &(s, w)) in atoms.iter().enumerate() {
            if !(w > 0.0) || !w.is_finite() {
                return Err(ScalarError::NonpositiveWeight { index, w });
            }
            if s < 0.0 || !s.is_finite() {
                return Err(ScalarError::NegativeDecay { index, s });
            }
            any_positive |= s > 0.0;
        }
        if !any_positive {
            return Err(ScalarError::NoPositiveAtom);
        }
        Ok(RadialKernel { atoms })
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn eval(&self, t: f64) -> Result<f64, ScalarError> {
        if t < 0.0 || !t.is_finite() {
            return Err(ScalarError::NegativeArgument { t });
        }
        Ok(self.atoms.iter().map(|&(s, w)| w * (-s * t).exp()).sum())
    }

    /// `|K'|` peaks at t = 0 where it equals the decay-weighted mass.
    pub fn derivative_bound(&self) -> f64 {
        self.atoms.iter().map(|&(s, w)| w * s).sum()
    }

    /// `K(0)`: the total mass.
    pub fn value_at_zero(&self) -> f64 {
        self.atoms.iter().map(|&(_, w)| w).sum()
    }
}

/// A validated scalar profile of either family.
#[derive(Debug, Clone)]
pub enum ScalarKernel {
    Taylor(TaylorKernel),
    Radial(RadialKernel),
}

impl ScalarKernel {
    /// Validates a declarative spec. `domain_bound` is the largest inner
    /// product magnitude the Taylor family must handle; mixtures ignore it.
    pub fn from_spec(spec: &ScalarKernelSpec, domain_bound: f64) -> Result<Self, ScalarError> {
        match spec {
            ScalarKernelSpec::Taylor { kind } => Ok(ScalarKernel::Taylor(TaylorKernel::new(
                kind.clone(),
                domain_bound,
            )?)),
            ScalarKernelSpec::Radial { atoms } => {
                Ok(ScalarKernel::Radial(RadialKernel::new(atoms.clone())?))
            }
        }
    }

    pub fn is_radial(&self) -> bool {
        matches!(self, ScalarKernel::Radial(_))
    }

    pub fn eval(&self, t: f64) -> Result<f64, ScalarError> {
        match self {
            ScalarKernel::Taylor(k) => k.eval(t),
            ScalarKernel::Radial(k) => k.eval(t),
        }
    }

    pub fn derivative_bound(&self) -> Result<f64, ScalarError> {
        match self {
            ScalarKernel::Taylor(k) => k.derivative_bound(),
            ScalarKernel::Radial(k) => Ok(k.derivative_bound()),
        }
    }

    pub fn value_at_zero(&self) -> f64 {
        match self {
            ScalarKernel::Taylor(k) => k.value_at_zero(),
            ScalarKernel::Radial(k) => k.value_at_zero(),
        }
    }
}

fn horner(coeffs: &[f64], t: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * t + c)
}

/// `sum x^n / n!` with a geometric tail majorant.
fn exp_series(x: f64) -> Result<f64, ScalarError> {
    let ax = x.abs();
    let mut term = 1.0f64;
    let mut sum = 1.0f64;
    for n in 1..=MAX_TERMS {
        term *= x / n as f64;
        sum += term;
        let next = term.abs() * ax / (n as f64 + 1.0);
        let r = ax / (n as f64 + 2.0);
        if r < 1.0 && next / (1.0 - r) <= TAIL_REL * (1.0 + sum.abs()) {
            return Ok(sum);
        }
    }
    Err(ScalarError::NoConvergence(MAX_TERMS))
}

/// `sum x^n` for `|x| < 1`.
fn geometric_series(x: f64) -> Result<f64, ScalarError> {
    let ax = x.abs();
    let mut term = 1.0f64;
    let mut sum = 1.0f64;
    for _ in 1..=MAX_TERMS {
        term *= x;
        sum += term;
        let tail = term.abs() * ax / (1.0 - ax);
        if tail <= TAIL_REL * (1.0 + sum.abs()) {
            return Ok(sum);
        }
    }
    Err(ScalarError::NoConvergence(MAX_TERMS))
}
