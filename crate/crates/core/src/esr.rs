//! Absolute (all-objects) probabilities built from conditional quantum
//! probabilities and detection probabilities.
//!
//! Every observable is extended by a no-registration outcome `a₀`. An outcome
//! `aₙ ≠ a₀` is obtained with probability `pᵈ · P(aₙ)`, where `P(aₙ)` is the
//! Born-rule probability (the conditional probability over detected objects) and
//! `pᵈ` the detection probability of the observable in the state; `a₀` takes the
//! remaining `1 - pᵈ`.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::quantum::{
    joint_probabilities, luders_update, outcome_probabilities, quantum_expectation, quantum_expectation_product,
    DensityState, ProjectiveObservable,
};
use crate::scalar::{check_probability, clamp_unit, Real};
use crate::{Error, Result};

/// Projective observable with an adjoined no-registration outcome.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneralizedObservable<T> {
    base: ProjectiveObservable<T>,
    no_registration: T,
}

impl<T: Real> GeneralizedObservable<T> {
    /// Uses `a₀ = 0`. Fails if `0` already belongs to the spectrum.
    pub fn new(base: ProjectiveObservable<T>) -> Result<Self> {
        Self::with_no_registration_outcome(base, T::zero())
    }

    pub fn with_no_registration_outcome(base: ProjectiveObservable<T>, a0: T) -> Result<Self> {
        if !a0.is_finite() {
            return Err(Error::InvalidObservable(format!("no-registration outcome {a0}")));
        }
        if base.outcome_index(a0).is_ok() {
            return Err(Error::InvalidObservable(format!(
                "no-registration outcome {a0} collides with the spectrum of '{}'",
                base.label()
            )));
        }
        Ok(Self { base, no_registration: a0 })
    }

    pub fn base(&self) -> &ProjectiveObservable<T> {
        &self.base
    }

    pub fn no_registration_outcome(&self) -> T {
        self.no_registration
    }

    pub fn label(&self) -> &str {
        self.base.label()
    }

    /// `{a₀} ∪ {a₁, a₂, …}`, no-registration outcome first.
    pub fn spectrum(&self) -> Vec<T> {
        std::iter::once(self.no_registration).chain(self.base.outcomes().iter().copied()).collect()
    }
}

/// Detection probabilities per (state label, observable label), scaled by an
/// apparatus factor.
///
/// The probability depends on the observable, never on which of its outcomes is
/// obtained. A uniform default, when set, answers every lookup without an entry.
#[derive(Clone, Debug, PartialEq)]
pub struct DetectionModel<T> {
    entries: BTreeMap<(String, String), T>,
    default: Option<T>,
    apparatus_factor: T,
}

impl<T: Real> Default for DetectionModel<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> DetectionModel<T> {
    /// Empty model: every lookup fails until entries are inserted.
    pub fn new() -> Self {
        Self { entries: BTreeMap::new(), default: None, apparatus_factor: T::one() }
    }

    /// Same detection probability for every state and observable.
    pub fn uniform(p: T) -> Result<Self> {
        let p = check_probability(p, "detection probability")?;
        Ok(Self { default: Some(p), ..Self::new() })
    }

    pub fn with_apparatus_factor(mut self, k: T) -> Result<Self> {
        self.apparatus_factor = check_probability(k, "apparatus factor")?;
        Ok(self)
    }

    pub fn insert(&mut self, state: impl Into<String>, observable: impl Into<String>, p: T) -> Result<()> {
        let p = check_probability(p, "detection probability")?;
        self.entries.insert((state.into(), observable.into()), p);
        Ok(())
    }

    pub fn with_entry(mut self, state: impl Into<String>, observable: impl Into<String>, p: T) -> Result<Self> {
        self.insert(state, observable, p)?;
        Ok(self)
    }

    pub fn apparatus_factor(&self) -> T {
        self.apparatus_factor
    }

    pub fn default_probability(&self) -> Option<T> {
        self.default
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty() && self.default.is_none()
    }

    /// Stored value, before the apparatus factor.
    pub fn stored(&self, state: &str, observable: &str) -> Option<T> {
        self.entries.get(&(state.to_string(), observable.to_string())).copied().or(self.default)
    }

    /// Effective detection probability: stored value times the apparatus factor.
    pub fn probability(&self, state: &str, observable: &str) -> Result<T> {
        self.stored(state, observable)
            .map(|p| clamp_unit(p * self.apparatus_factor))
            .ok_or_else(|| Error::MissingDetection { state: state.to_string(), observable: observable.to_string() })
    }

    pub fn for_observable(&self, state: &DensityState<T>, obs: &GeneralizedObservable<T>) -> Result<T> {
        self.probability(state.label(), obs.label())
    }
}

/// One outcome of a generalized observable.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Outcome<T> {
    Registered(T),
    NoRegistration(T),
}

impl<T: Copy> Outcome<T> {
    pub fn value(&self) -> T {
        match *self {
            Outcome::Registered(v) | Outcome::NoRegistration(v) => v,
        }
    }

    pub fn is_registered(&self) -> bool {
        matches!(self, Outcome::Registered(_))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum DistributionKind {
    Single,
    Sequential,
}

/// Entry of an absolute distribution: `probability = detection × conditional`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DistributionEntry<T> {
    pub first: Outcome<T>,
    pub second: Option<Outcome<T>>,
    /// Born-rule (or caller-supplied) probability among the relevant subensemble.
    pub conditional: T,
    /// Weight contributed by detection and no-registration events.
    pub detection: T,
    pub probability: T,
}

impl<T: Real> DistributionEntry<T> {
    fn product_value(&self) -> T {
        self.first.value() * self.second.map_or(T::one(), |o| o.value())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OutcomeDistribution<T> {
    kind: DistributionKind,
    entries: Vec<DistributionEntry<T>>,
}

impl<T: Real> OutcomeDistribution<T> {
    pub fn kind(&self) -> DistributionKind {
        self.kind
    }

    pub fn entries(&self) -> &[DistributionEntry<T>] {
        &self.entries
    }

    pub fn total(&self) -> T {
        self.entries.iter().map(|e| e.probability).sum()
    }

    /// Mean of the outcome (single) or of the outcome product (sequential),
    /// no-registration values included.
    pub fn mean(&self) -> T {
        self.entries.iter().map(|e| e.product_value() * e.probability).sum()
    }

    /// Probability of a single outcome value.
    pub fn probability_of(&self, value: T) -> Option<T> {
        let tol = T::identity_tol();
        self.entries
            .iter()
            .find(|e| e.second.is_none() && (e.first.value() - value).abs() <= tol)
            .map(|e| e.probability)
    }

    /// Probability of an ordered outcome pair.
    pub fn probability_of_pair(&self, first: T, second: T) -> Option<T> {
        let tol = T::identity_tol();
        self.entries
            .iter()
            .find(|e| {
                (e.first.value() - first).abs() <= tol && e.second.is_some_and(|s| (s.value() - second).abs() <= tol)
            })
            .map(|e| e.probability)
    }
}

/// `Pᵗ = Pᵈ · P`: probability of being detected and showing the property.
pub fn joint_detection_probability<T: Real>(conditional: T, detection: T) -> Result<T> {
    let c = check_probability(conditional, "conditional probability")?;
    let d = check_probability(detection, "detection probability")?;
    Ok(d * c)
}

fn entry<T: Real>(
    first: Outcome<T>,
    second: Option<Outcome<T>>,
    conditional: T,
    detection: T,
) -> Result<DistributionEntry<T>> {
    Ok(DistributionEntry {
        first,
        second,
        conditional,
        detection,
        probability: joint_detection_probability(conditional, detection)?,
    })
}

/// Absolute distribution of one generalized observable:
/// `Pᵗ(aₙ) = pᵈ P(aₙ)` and `Pᵗ(a₀) = 1 - pᵈ`.
pub fn outcome_distribution<T: Real>(
    state: &DensityState<T>,
    obs: &GeneralizedObservable<T>,
    det: &DetectionModel<T>,
) -> Result<OutcomeDistribution<T>> {
    let pd = det.for_observable(state, obs)?;
    let mut entries = Vec::with_capacity(obs.base().outcomes().len() + 1);
    for (a, p) in obs.base().outcomes().iter().zip(outcome_probabilities(state, obs.base())) {
        entries.push(entry(Outcome::Registered(*a), None, p, pd)?);
    }
    entries.push(entry(Outcome::NoRegistration(obs.no_registration_outcome()), None, T::one(), T::one() - pd)?);
    Ok(OutcomeDistribution { kind: DistributionKind::Single, entries })
}

/// Expectation over all objects and over detected objects only.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GeneralizedExpectation<T> {
    /// `a₀(1 - pᵈ) + pᵈ ⟨A⟩`.
    pub absolute: T,
    /// `⟨A⟩ = Σ aₙ P(aₙ)`, the standard quantum expectation value.
    pub conditional: T,
}

pub fn generalized_expectation<T: Real>(
    state: &DensityState<T>,
    obs: &GeneralizedObservable<T>,
    det: &DetectionModel<T>,
) -> Result<GeneralizedExpectation<T>> {
    let pd = det.for_observable(state, obs)?;
    let conditional = quantum_expectation(state, obs.base());
    Ok(GeneralizedExpectation {
        absolute: expectation_from_parts(conditional, pd, obs.no_registration_outcome()),
        conditional,
    })
}

/// `a₀(1 - pᵈ) + pᵈ · conditional`; reduces to `pᵈ · conditional` for `a₀ = 0`.
pub fn expectation_from_parts<T: Real>(conditional: T, detection: T, a0: T) -> T {
    if a0 == T::zero() {
        detection * conditional
    } else {
        a0 * (T::one() - detection) + detection * conditional
    }
}

/// Caller-supplied probabilities for a sequential measurement that the quantum
/// rules leave open.
#[derive(Clone, Debug, PartialEq)]
pub struct SequentialDetection<T> {
    /// Detection probability of the first observable in the initial state.
    pub first: T,
    /// Detection probability of the second observable after each registered
    /// outcome of the first, in spectrum order.
    pub second_after_outcome: Vec<T>,
    /// Detection probability of the second observable after no registration.
    pub second_after_none: T,
    /// Conditional distribution of the second observable's outcomes after no
    /// registration, in spectrum order.
    pub conditional_after_none: Vec<T>,
}

/// Joint distribution of a sequential measurement of `first` then `second` in
/// full generality: the state after a registered outcome follows the Lüders rule,
/// everything else is supplied by the caller.
///
/// Entry order: `(aₙ, b_p)`, `(aₙ, b₀)`, `(a₀, b_p)`, `(a₀, b₀)`.
pub fn sequential_distribution_general<T: Real>(
    state: &DensityState<T>,
    first: &GeneralizedObservable<T>,
    second: &GeneralizedObservable<T>,
    det: &SequentialDetection<T>,
) -> Result<OutcomeDistribution<T>> {
    let n_a = first.base().outcomes().len();
    let n_b = second.base().outcomes().len();
    if det.second_after_outcome.len() != n_a {
        return Err(Error::InvalidInput(format!(
            "expected {n_a} detection probabilities after registered outcomes, got {}",
            det.second_after_outcome.len()
        )));
    }
    if det.conditional_after_none.len() != n_b {
        return Err(Error::InvalidInput(format!(
            "expected {n_b} conditional probabilities after no registration, got {}",
            det.conditional_after_none.len()
        )));
    }
    let cond_none = det
        .conditional_after_none
        .iter()
        .map(|p| check_probability(*p, "conditional probability after no registration"))
        .collect::<Result<Vec<T>>>()?;
    let sum: T = cond_none.iter().copied().sum();
    if (sum - T::one()).abs() > T::identity_tol() {
        return Err(Error::InvalidInput(format!("conditional distribution after no registration sums to {sum}")));
    }
    let pd_a = check_probability(det.first, "detection probability")?;
    let pd_b_none = check_probability(det.second_after_none, "detection probability")?;

    let a0 = Outcome::NoRegistration(first.no_registration_outcome());
    let b0 = Outcome::NoRegistration(second.no_registration_outcome());
    let pa = outcome_probabilities(state, first.base());
    let mut registered = Vec::with_capacity(n_a * n_b);
    let mut a_only = Vec::with_capacity(n_a);
    for (n, (&a, &p_a)) in first.base().outcomes().iter().zip(&pa).enumerate() {
        let pd_b = check_probability(det.second_after_outcome[n], "detection probability")?;
        // Conditional second-outcome probabilities in the updated state; an
        // impossible first outcome contributes nothing.
        let pb_after = if p_a > T::zero_branch() {
            let updated = luders_update(state, &first.base().projectors()[n])?;
            outcome_probabilities(&updated, second.base())
        } else {
            vec![T::zero(); n_b]
        };
        for (&b, &p_b) in second.base().outcomes().iter().zip(&pb_after) {
            registered.push(entry(
                Outcome::Registered(a),
                Some(Outcome::Registered(b)),
                clamp_unit(p_a * p_b),
                pd_a * pd_b,
            )?);
        }
        a_only.push(entry(Outcome::Registered(a), Some(b0), p_a, pd_a * (T::one() - pd_b))?);
    }
    let mut entries = registered;
    entries.extend(a_only);
    for (&b, &p_b) in second.base().outcomes().iter().zip(&cond_none) {
        entries.push(entry(a0, Some(Outcome::Registered(b)), p_b, (T::one() - pd_a) * pd_b_none)?);
    }
    entries.push(entry(a0, Some(b0), T::one(), (T::one() - pd_a) * (T::one() - pd_b_none))?);
    Ok(OutcomeDistribution { kind: DistributionKind::Sequential, entries })
}

fn ensure_bipartite<T: Real>(a: &GeneralizedObservable<T>, b: &GeneralizedObservable<T>) -> Result<()> {
    match (a.base().subsystem(), b.base().subsystem()) {
        (Some(x), Some(y)) if x != y => Ok(()),
        _ => Err(Error::SameSubsystem(a.label().to_string(), b.label().to_string())),
    }
}

/// Joint distribution for observables on the two far-apart subsystems, assuming
/// an undetected object keeps its state and the second detection probability is
/// unaffected by the first measurement. Only the two detection probabilities
/// remain free:
///
/// * `Pᵗ(aₙ, b_p) = pᵈ_A pᵈ_B P(aₙ, b_p)`
/// * `Pᵗ(aₙ, b₀) = pᵈ_A (1 - pᵈ_B) P(aₙ)`
/// * `Pᵗ(a₀, b_p) = (1 - pᵈ_A) pᵈ_B P(b_p)`
/// * `Pᵗ(a₀, b₀) = (1 - pᵈ_A)(1 - pᵈ_B)`
pub fn sequential_distribution_factored<T: Real>(
    state: &DensityState<T>,
    first: &GeneralizedObservable<T>,
    second: &GeneralizedObservable<T>,
    det: &DetectionModel<T>,
) -> Result<OutcomeDistribution<T>> {
    ensure_bipartite(first, second)?;
    let pd_a = det.for_observable(state, first)?;
    let pd_b = det.for_observable(state, second)?;
    let joint = joint_probabilities(state, first.base(), second.base())?;
    let pa = outcome_probabilities(state, first.base());
    let pb = outcome_probabilities(state, second.base());
    let a0 = Outcome::NoRegistration(first.no_registration_outcome());
    let b0 = Outcome::NoRegistration(second.no_registration_outcome());
    let (qa, qb) = (T::one() - pd_a, T::one() - pd_b);

    let mut entries = Vec::new();
    for (&a, row) in first.base().outcomes().iter().zip(&joint) {
        for (&b, &p) in second.base().outcomes().iter().zip(row) {
            entries.push(entry(Outcome::Registered(a), Some(Outcome::Registered(b)), p, pd_a * pd_b)?);
        }
    }
    for (&a, &p) in first.base().outcomes().iter().zip(&pa) {
        entries.push(entry(Outcome::Registered(a), Some(b0), p, pd_a * qb)?);
    }
    for (&b, &p) in second.base().outcomes().iter().zip(&pb) {
        entries.push(entry(a0, Some(Outcome::Registered(b)), p, qa * pd_b)?);
    }
    entries.push(entry(a0, Some(b0), T::one(), qa * qb)?);
    Ok(OutcomeDistribution { kind: DistributionKind::Sequential, entries })
}

/// Generalized correlation function of two far-apart observables.
///
/// With `a₀ = b₀ = 0` this is `pᵈ_A pᵈ_B ⟨AB⟩`; otherwise the no-registration
/// terms are added explicitly.
pub fn generalized_correlation<T: Real>(
    state: &DensityState<T>,
    first: &GeneralizedObservable<T>,
    second: &GeneralizedObservable<T>,
    det: &DetectionModel<T>,
) -> Result<T> {
    ensure_bipartite(first, second)?;
    let pd_a = det.for_observable(state, first)?;
    let pd_b = det.for_observable(state, second)?;
    let product = quantum_expectation_product(state, first.base(), second.base())?;
    let a0 = first.no_registration_outcome();
    let b0 = second.no_registration_outcome();
    let core = pd_a * pd_b * product;
    if a0 == T::zero() && b0 == T::zero() {
        return Ok(core);
    }
    let mean_a = quantum_expectation(state, first.base());
    let mean_b = quantum_expectation(state, second.base());
    let (qa, qb) = (T::one() - pd_a, T::one() - pd_b);
    Ok(core + b0 * pd_a * qb * mean_a + a0 * qa * pd_b * mean_b + a0 * b0 * qa * qb)
}
