//! Standard and detection-weighted CHSH functionals, the detection-probability
//! bound, angle grids and angle optimization.
//!
//! Correlations are always indexed in the order `(a,b), (a,b'), (a',b), (a',b')`
//! and detection probabilities in the order `A(a), A(a'), B(b), B(b')`.

mod grid;
mod optimize;

use serde::Serialize;

use crate::esr::DetectionModel;
use crate::quantum::{quantum_expectation_product, DensityState, Direction, ProjectiveObservable, Subsystem};
use crate::scalar::{check_probability, Real};
use crate::{Error, Result};

pub use grid::{
    angle_scan, correlation_table, grid_angles, grid_max_lhs, min_detection_bound, GridMaximum, MinimumBound, ScanGrid,
    ScanRow,
};
pub use optimize::{optimize_chsh_angles, optimize_chsh_angles_with, ChshOptimum, Objective, SearchBudget};

/// Local-realistic limit of both functionals.
pub const CLASSICAL_LIMIT: f64 = 2.0;

/// Four measurement directions: `a`, `a'` on the first qubit, `b`, `b'` on the second.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChshSetting<T> {
    pub a: Direction<T>,
    pub a_prime: Direction<T>,
    pub b: Direction<T>,
    pub b_prime: Direction<T>,
}

impl<T: Real> ChshSetting<T> {
    pub fn new(a: Direction<T>, a_prime: Direction<T>, b: Direction<T>, b_prime: Direction<T>) -> Self {
        Self { a, a_prime, b, b_prime }
    }

    /// Coplanar directions at the given angles (radians) in the measurement plane,
    /// ordered `a, a', b, b'`.
    pub fn coplanar(angles: [T; 4]) -> Self {
        let [a, ap, b, bp] = angles.map(Direction::in_plane);
        Self::new(a, ap, b, bp)
    }

    pub fn coplanar_degrees(degrees: [T; 4]) -> Self {
        Self::coplanar(degrees.map(|d| d.to_radians()))
    }

    /// `a = 0°, a' = 90°, b = 45°, b' = 135°`, where the singlet reaches `2√2`.
    pub fn tsirelson() -> Self {
        Self::coplanar_degrees([0.0, 90.0, 45.0, 135.0].map(T::lit))
    }

    pub fn directions(&self) -> [Direction<T>; 4] {
        [self.a, self.a_prime, self.b, self.b_prime]
    }

    /// Spin observables `A(a), A(a'), B(b), B(b')`.
    pub fn observables(&self) -> [ProjectiveObservable<T>; 4] {
        [
            ProjectiveObservable::spin(&self.a, Subsystem::First),
            ProjectiveObservable::spin(&self.a_prime, Subsystem::First),
            ProjectiveObservable::spin(&self.b, Subsystem::Second),
            ProjectiveObservable::spin(&self.b_prime, Subsystem::Second),
        ]
    }

    /// `|a·b - a·b'| + |a'·b + a'·b'|`, the singlet's standard CHSH value.
    pub fn dot_denominator(&self) -> T {
        (self.a.dot(&self.b) - self.a.dot(&self.b_prime)).abs()
            + (self.a_prime.dot(&self.b) + self.a_prime.dot(&self.b_prime)).abs()
    }
}

/// CHSH evaluation of one setting in one state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChshReport<T> {
    /// Conditional (quantum) correlations `⟨A(a)B(b)⟩, ⟨A(a)B(b')⟩, ⟨A(a')B(b)⟩, ⟨A(a')B(b')⟩`.
    pub correlations: [T; 4],
    pub standard_lhs: T,
    pub modified_lhs: T,
    /// Effective detection probabilities of `A(a), A(a'), B(b), B(b')`.
    pub detection_probs: [T; 4],
    /// Largest common detection probability compatible with the modified
    /// inequality. Only reported when the four detection probabilities are equal.
    pub bound: Option<T>,
    pub standard_violated: bool,
    pub modified_violated: bool,
}

impl<T: Real> ChshReport<T> {
    /// Builds a report from the four correlations and the four detection probabilities.
    pub fn from_parts(correlations: [T; 4], detection_probs: [T; 4]) -> Result<Self> {
        let standard_lhs = standard_chsh_lhs(correlations)?;
        let modified_lhs = modified_chsh_value(correlations, detection_probs)?;
        let uniform = detection_probs.iter().all(|p| (*p - detection_probs[0]).abs() <= T::identity_tol());
        Ok(Self {
            correlations,
            standard_lhs,
            modified_lhs,
            detection_probs,
            bound: uniform.then(|| bound_from_lhs(standard_lhs)),
            standard_violated: exceeds_limit(standard_lhs),
            modified_violated: exceeds_limit(modified_lhs),
        })
    }

    /// Largest detection product `pᵈ(A)·pᵈ(B)` over the four correlation terms.
    ///
    /// Heuristic diagnostic for asymmetric detection: with equal probabilities it
    /// is `p²`, and `p² ≤ 1/√2` is the singlet's no-violation condition. It is not
    /// a sufficient condition once the probabilities differ.
    pub fn max_detection_product(&self) -> T {
        let [pa, pap, pb, pbp] = self.detection_probs;
        [pa * pb, pa * pbp, pap * pb, pap * pbp].into_iter().fold(T::zero(), T::max)
    }
}

fn exceeds_limit<T: Real>(value: T) -> bool {
    value > T::lit(CLASSICAL_LIMIT) + T::identity_tol()
}

fn check_correlation<T: Real>(e: T) -> Result<T> {
    let tol = T::identity_tol();
    if !e.is_finite() || e.abs() > T::one() + tol {
        return Err(Error::InvalidInput(format!("correlation {e} outside [-1, 1]")));
    }
    Ok(e.max(-T::one()).min(T::one()))
}

/// `|E(a,b) - E(a,b')| + |E(a',b) + E(a',b')|`.
pub fn standard_chsh_lhs<T: Real>(correlations: [T; 4]) -> Result<T> {
    let [ab, abp, apb, apbp] = correlations;
    let (ab, abp, apb, apbp) =
        (check_correlation(ab)?, check_correlation(abp)?, check_correlation(apb)?, check_correlation(apbp)?);
    Ok((ab - abp).abs() + (apb + apbp).abs())
}

/// Detection-weighted functional
/// `|pA(a)[pB(b)E(a,b) - pB(b')E(a,b')]| + |pA(a')[pB(b)E(a',b) + pB(b')E(a',b')]|`.
pub fn modified_chsh_value<T: Real>(correlations: [T; 4], detection: [T; 4]) -> Result<T> {
    let mut e = [T::zero(); 4];
    for (dst, src) in e.iter_mut().zip(correlations) {
        *dst = check_correlation(src)?;
    }
    let mut p = [T::zero(); 4];
    for (dst, src) in p.iter_mut().zip(detection) {
        *dst = check_probability(src, "detection probability")?;
    }
    let [pa, pap, pb, pbp] = p;
    Ok((pa * (pb * e[0] - pbp * e[1])).abs() + (pap * (pb * e[2] + pbp * e[3])).abs())
}

/// Conditional correlations of the four spin pairs in `state`.
pub fn conditional_correlations<T: Real>(setting: &ChshSetting<T>, state: &DensityState<T>) -> Result<[T; 4]> {
    let [a, ap, b, bp] = setting.observables();
    Ok([
        quantum_expectation_product(state, &a, &b)?,
        quantum_expectation_product(state, &a, &bp)?,
        quantum_expectation_product(state, &ap, &b)?,
        quantum_expectation_product(state, &ap, &bp)?,
    ])
}

/// Effective detection probabilities of the four spin observables.
pub fn setting_detection<T: Real>(
    setting: &ChshSetting<T>,
    state: &DensityState<T>,
    det: &DetectionModel<T>,
) -> Result<[T; 4]> {
    let obs = setting.observables();
    let mut out = [T::zero(); 4];
    for (p, o) in out.iter_mut().zip(&obs) {
        *p = det.probability(state.label(), o.label())?;
    }
    Ok(out)
}

/// Full report for one setting: conditional correlations from the quantum
/// rules, detection probabilities from `det`.
pub fn modified_chsh_lhs<T: Real>(
    setting: &ChshSetting<T>,
    state: &DensityState<T>,
    det: &DetectionModel<T>,
) -> Result<ChshReport<T>> {
    let detection = setting_detection(setting, state, det)?;
    ChshReport::from_parts(conditional_correlations(setting, state)?, detection)
}

/// Equality threshold `√(2 / lhs)` of `p² · lhs ≤ 2`, capped at 1. A vanishing
/// `lhs` makes the inequality vacuous and gives 1.
pub fn bound_from_lhs<T: Real>(lhs: T) -> T {
    if lhs < T::lit(1e-14) {
        return T::one();
    }
    (T::lit(CLASSICAL_LIMIT) / lhs).sqrt().min(T::one())
}

/// Largest common detection probability for which the singlet cannot violate the
/// modified inequality at this setting: `√(2 / (|a·b - a·b'| + |a'·b + a'·b'|))`.
pub fn detection_bound<T: Real>(setting: &ChshSetting<T>) -> T {
    bound_from_lhs(setting.dot_denominator())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::random_direction;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::SQRT_2;

    fn singlet() -> DensityState<f64> {
        DensityState::singlet()
    }

    #[test]
    fn standard_lhs_examples() {
        let e = conditional_correlations(&ChshSetting::tsirelson(), &singlet()).unwrap();
        assert!((standard_chsh_lhs(e).unwrap() - 2.0 * SQRT_2).abs() < 1e-12);
        let same = ChshSetting::coplanar_degrees([30.0, 30.0, 30.0, 30.0]);
        let e = conditional_correlations(&same, &singlet()).unwrap();
        assert!((standard_chsh_lhs(e).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(standard_chsh_lhs([0.0; 4]).unwrap(), 0.0);
        assert!(standard_chsh_lhs([1.1, 0.0, 0.0, 0.0]).is_err());
        assert!(standard_chsh_lhs([f64::NAN, 0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn modified_lhs_examples() {
        let t = ChshSetting::tsirelson();
        let r = modified_chsh_lhs(&t, &singlet(), &DetectionModel::uniform(1.0).unwrap()).unwrap();
        assert!((r.modified_lhs - 2.0 * SQRT_2).abs() < 1e-12);
        assert!(r.modified_violated && r.standard_violated);

        let p = 2f64.powf(-0.25);
        let r = modified_chsh_lhs(&t, &singlet(), &DetectionModel::uniform(p).unwrap()).unwrap();
        assert!((r.modified_lhs - 2.0).abs() < 1e-9);
        assert!(!r.modified_violated);
        assert!(r.standard_violated);
        assert!((r.bound.unwrap() - p).abs() < 1e-12);

        let r = modified_chsh_lhs(&t, &singlet(), &DetectionModel::uniform(0.0).unwrap()).unwrap();
        assert_eq!(r.modified_lhs, 0.0);

        assert!(matches!(
            modified_chsh_lhs(&t, &singlet(), &DetectionModel::new()),
            Err(Error::MissingDetection { .. })
        ));
    }

    #[test]
    fn asymmetric_detection_omits_bound() {
        let t = ChshSetting::tsirelson();
        let s = singlet();
        let obs = t.observables();
        let mut det = DetectionModel::uniform(0.9).unwrap();
        det.insert(s.label(), obs[0].label(), 0.7).unwrap();
        let r = modified_chsh_lhs(&t, &s, &det).unwrap();
        assert_eq!(r.detection_probs, [0.7, 0.9, 0.9, 0.9]);
        assert!(r.bound.is_none());
        assert!((r.max_detection_product() - 0.81).abs() < 1e-15);
    }

    #[test]
    fn detection_bound_examples() {
        assert!((detection_bound(&ChshSetting::<f64>::tsirelson()) - 0.84089642).abs() < 1e-8);
        let same = ChshSetting::<f64>::coplanar_degrees([0.0, 0.0, 0.0, 0.0]);
        assert!((detection_bound(&same) - 1.0).abs() < 1e-15);
        // Degenerate denominator: b' = -b and a ⊥ b.
        let z = Direction::<f64>::z_axis();
        let x = Direction::<f64>::x_axis();
        let vac = ChshSetting::new(x, z, z, z.neg());
        assert!(vac.dot_denominator() < 1e-14);
        assert_eq!(detection_bound(&vac), 1.0);
    }

    #[test]
    fn uniform_detection_scales_quadratically() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..100 {
            let setting = ChshSetting::new(
                random_direction(&mut rng),
                random_direction(&mut rng),
                random_direction(&mut rng),
                random_direction(&mut rng),
            );
            let p: f64 = rng.gen();
            let r = modified_chsh_lhs(&setting, &singlet(), &DetectionModel::uniform(p).unwrap()).unwrap();
            assert!((r.modified_lhs - p * p * r.standard_lhs).abs() < 1e-12);
            assert!(r.modified_lhs <= r.standard_lhs + 1e-15);
            let bound = detection_bound(&setting);
            assert!(bound * bound * r.standard_lhs <= 2.0 + 1e-12);
            assert!(bound > 0.0 && bound <= 1.0);
        }
    }
}
