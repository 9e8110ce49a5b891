//! Discrete microstate mixtures.
//!
//! Works over any ordered field with a conversion from `f64` literals, so the
//! arithmetic can be checked exactly with rationals.

use std::fmt::Debug;

use num_traits::{FromPrimitive, Num, ToPrimitive};
use serde::Serialize;

use crate::{Error, Result};

/// Scalar for exact or floating mixture arithmetic.
pub trait ProbabilityField: Clone + Num + PartialOrd + FromPrimitive + ToPrimitive + Debug {}

impl<T: Clone + Num + PartialOrd + FromPrimitive + ToPrimitive + Debug> ProbabilityField for T {}

const WEIGHT_TOL: f64 = 1e-12;
const MIN_DETECTION: f64 = 1e-14;

fn lit<T: ProbabilityField>(v: f64) -> T {
    T::from_f64(v).unwrap_or_else(T::zero)
}

fn in_unit<T: ProbabilityField>(v: &T) -> bool {
    *v >= T::zero() && *v <= T::one()
}

fn check_weights<T: ProbabilityField>(weights: &[T]) -> Result<()> {
    if weights.is_empty() {
        return Err(Error::InvalidInput("ensemble has no microstates".to_string()));
    }
    if !weights.iter().all(in_unit) {
        return Err(Error::InvalidInput("microstate weights must lie in [0, 1]".to_string()));
    }
    let total = weights.iter().cloned().fold(T::zero(), |a, b| a + b);
    let dev = if total > T::one() { total.clone() - T::one() } else { T::one() - total.clone() };
    if dev > lit(WEIGHT_TOL) {
        return Err(Error::InvalidInput(format!("microstate weights sum to {total:?}")));
    }
    Ok(())
}

/// Microstates of a macroscopic state together with, for one macroscopic
/// property, each microstate's detection probability and whether it carries the
/// corresponding microscopic property.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MicrostateEnsemble<T> {
    weights: Vec<T>,
    detection: Vec<T>,
    possession: Vec<bool>,
}

impl<T: ProbabilityField> MicrostateEnsemble<T> {
    pub fn new(weights: Vec<T>, detection: Vec<T>, possession: Vec<bool>) -> Result<Self> {
        if weights.len() != detection.len() || weights.len() != possession.len() {
            return Err(Error::InvalidInput(format!(
                "ensemble lengths differ: {} weights, {} detection, {} possession",
                weights.len(),
                detection.len(),
                possession.len()
            )));
        }
        check_weights(&weights)?;
        if !detection.iter().all(in_unit) {
            return Err(Error::InvalidInput("microstate detection probabilities must lie in [0, 1]".to_string()));
        }
        Ok(Self { weights, detection, possession })
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn detection(&self) -> &[T] {
        &self.detection
    }

    pub fn possession(&self) -> &[bool] {
        &self.possession
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MixtureProbabilities<T> {
    /// Probability of being detected and showing the property: `Σ wᵢ dᵢ fᵢ`.
    pub joint: T,
    /// Probability of being detected: `Σ wᵢ dᵢ`.
    pub detection: T,
    /// `joint / detection`, the probability among detected objects.
    pub conditional: T,
}

/// Ensemble-level probabilities. Fails with [`Error::UndefinedConditional`]
/// when the detection probability is below `1e-14`.
pub fn mixture_probabilities<T: ProbabilityField>(ensemble: &MicrostateEnsemble<T>) -> Result<MixtureProbabilities<T>> {
    let mut joint = T::zero();
    let mut detection = T::zero();
    for ((w, d), has) in ensemble.weights.iter().zip(&ensemble.detection).zip(&ensemble.possession) {
        let wd = w.clone() * d.clone();
        if *has {
            joint = joint + wd.clone();
        }
        detection = detection + wd;
    }
    if detection < lit(MIN_DETECTION) {
        return Err(Error::UndefinedConditional(detection.to_f64().unwrap_or(f64::NAN)));
    }
    let conditional = joint.clone() / detection.clone();
    Ok(MixtureProbabilities { joint, detection, conditional })
}

/// `Σₙ aₙ P(fₙ)` for a family of microscopic properties `fₙ`, where
/// `P(fₙ) = Σᵢ wᵢ [microstate i possesses fₙ]`.
///
/// `possession[n][i]` says whether microstate `i` possesses `fₙ`; every
/// microstate must possess exactly one member of the family.
pub fn micro_observable_expectation<T: ProbabilityField>(
    weights: &[T],
    possession: &[Vec<bool>],
    outcomes: &[T],
) -> Result<T> {
    check_weights(weights)?;
    if possession.len() != outcomes.len() {
        return Err(Error::InvalidInput(format!(
            "{} property indicators for {} outcomes",
            possession.len(),
            outcomes.len()
        )));
    }
    if possession.iter().any(|row| row.len() != weights.len()) {
        return Err(Error::InvalidInput("indicator rows must cover every microstate".to_string()));
    }
    for i in 0..weights.len() {
        let count = possession.iter().filter(|row| row[i]).count();
        if count != 1 {
            return Err(Error::InvalidInput(format!(
                "microstate {i} possesses {count} properties of the family, expected exactly 1"
            )));
        }
    }
    let mut acc = T::zero();
    for (a, row) in outcomes.iter().zip(possession) {
        let p = weights.iter().zip(row).filter(|(_, has)| **has).fold(T::zero(), |s, (w, _)| s + w.clone());
        acc = acc + a.clone() * p;
    }
    Ok(acc)
}
