use serde::Serialize;

use super::direction::Direction;
use super::matrix::{Matrix2, Matrix4, Support};
use super::state::spin_projector;
use crate::scalar::Real;
use crate::{Error, Result};

/// Tensor factor of the two-qubit system.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Subsystem {
    First,
    Second,
}

impl Subsystem {
    pub fn index(self) -> u8 {
        match self {
            Subsystem::First => 1,
            Subsystem::Second => 2,
        }
    }
}

/// Discrete observable given by its spectrum and the matching spectral projectors.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectiveObservable<T> {
    outcomes: Vec<T>,
    projectors: Vec<Matrix4<T>>,
    label: String,
    support: Support,
}

impl<T: Real> ProjectiveObservable<T> {
    /// Checks distinct outcomes, Hermitian idempotent projectors, pairwise
    /// orthogonality and completeness.
    pub fn new(outcomes: Vec<T>, projectors: Vec<Matrix4<T>>, label: impl Into<String>) -> Result<Self> {
        let label = label.into();
        let tol = T::identity_tol();
        let bad = |msg: String| Err(Error::InvalidObservable(format!("'{label}': {msg}")));
        if outcomes.is_empty() || outcomes.len() != projectors.len() {
            return bad(format!("{} outcomes for {} projectors", outcomes.len(), projectors.len()));
        }
        for (i, a) in outcomes.iter().enumerate() {
            if !a.is_finite() {
                return bad(format!("outcome {a} is not finite"));
            }
            if outcomes[..i].iter().any(|b| (*a - *b).abs() <= tol) {
                return bad(format!("outcome {a} is repeated"));
            }
        }
        let mut sum = Matrix4::zero();
        for (i, p) in projectors.iter().enumerate() {
            if !p.is_hermitian(tol) {
                return bad(format!("projector {i} is not Hermitian"));
            }
            if (*p * *p).max_abs_diff(p) > tol {
                return bad(format!("projector {i} is not idempotent"));
            }
            for (j, q) in projectors[..i].iter().enumerate() {
                if (*p * *q).max_abs_diff(&Matrix4::zero()) > tol {
                    return bad(format!("projectors {j} and {i} are not orthogonal"));
                }
            }
            sum = sum + *p;
        }
        if sum.max_abs_diff(&Matrix4::identity()) > tol {
            return bad("projectors do not sum to the identity".to_string());
        }
        let support = combined_support(&projectors, tol);
        Ok(Self { outcomes, projectors, label, support })
    }

    /// Spin along `direction` on one qubit: outcomes `(+1, -1)` with projectors
    /// `(I ± σ·n)/2` on that qubit and the identity on the other.
    pub fn spin(direction: &Direction<T>, subsystem: Subsystem) -> Self {
        let id = Matrix2::identity();
        let lift = |p: Matrix2<T>| match subsystem {
            Subsystem::First => p.kron(&id),
            Subsystem::Second => id.kron(&p),
        };
        let plus = lift(spin_projector(direction, T::one()));
        let minus = lift(spin_projector(direction, -T::one()));
        let label = format!("spin{}[{},{},{}]", subsystem.index(), direction.x(), direction.y(), direction.z());
        let support = match subsystem {
            Subsystem::First => Support::First,
            Subsystem::Second => Support::Second,
        };
        Self { outcomes: vec![T::one(), -T::one()], projectors: vec![plus, minus], label, support }
    }

    pub fn outcomes(&self) -> &[T] {
        &self.outcomes
    }

    pub fn projectors(&self) -> &[Matrix4<T>] {
        &self.projectors
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Tensor factor the observable acts on, if it is local.
    pub fn subsystem(&self) -> Option<Subsystem> {
        match self.support {
            Support::First => Some(Subsystem::First),
            Support::Second => Some(Subsystem::Second),
            Support::Trivial | Support::Joint => None,
        }
    }

    pub fn support(&self) -> Support {
        self.support
    }

    pub fn outcome_index(&self, outcome: T) -> Result<usize> {
        self.outcomes
            .iter()
            .position(|a| (*a - outcome).abs() <= T::identity_tol())
            .ok_or_else(|| Error::UnknownOutcome { outcome: outcome.as_f64(), observable: self.label.clone() })
    }

    pub fn projector_for(&self, outcome: T) -> Result<&Matrix4<T>> {
        Ok(&self.projectors[self.outcome_index(outcome)?])
    }

    /// True when every pair of spectral projectors commutes.
    pub fn compatible_with(&self, other: &Self) -> bool {
        let tol = T::identity_tol();
        self.projectors.iter().all(|p| other.projectors.iter().all(|q| p.commutes_with(q, tol)))
    }
}

fn combined_support<T: Real>(projectors: &[Matrix4<T>], tol: T) -> Support {
    let mut acc = Support::Trivial;
    for p in projectors {
        acc = match (acc, p.support(tol)) {
            (_, Support::Joint) | (Support::Joint, _) => Support::Joint,
            (a, Support::Trivial) => a,
            (Support::Trivial, s) => s,
            (a, s) if a == s => a,
            _ => Support::Joint,
        };
    }
    acc
}
