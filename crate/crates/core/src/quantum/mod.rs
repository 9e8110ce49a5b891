//! Two-qubit quantum mechanics: states, spin observables, Born-rule
//! probabilities, product expectation values and Lüders updates.
//!
//! Every function here is a pure computation over immutable values.

mod direction;
mod matrix;
mod observable;
mod state;

use num_traits::Zero;
use rand::Rng;

pub use direction::Direction;
pub use matrix::{Matrix2, Matrix4, Support, C};
pub use observable::{ProjectiveObservable, Subsystem};
pub use state::DensityState;

use crate::scalar::{clamp_unit, Real};
use crate::{Error, Result};

pub fn singlet_state<T: Real>() -> DensityState<T> {
    DensityState::singlet()
}

pub fn spin_observable<T: Real>(direction: &Direction<T>, subsystem: Subsystem) -> ProjectiveObservable<T> {
    ProjectiveObservable::spin(direction, subsystem)
}

/// `Tr[ρ P]` for the projector of `outcome`, clamped to `[0, 1]`.
pub fn born_probability<T: Real>(state: &DensityState<T>, obs: &ProjectiveObservable<T>, outcome: T) -> Result<T> {
    let p = obs.projector_for(outcome)?;
    Ok(clamp_unit(state.matrix().trace_product(p).re))
}

/// Born probabilities for every outcome of `obs`, in spectrum order.
pub fn outcome_probabilities<T: Real>(state: &DensityState<T>, obs: &ProjectiveObservable<T>) -> Vec<T> {
    obs.projectors().iter().map(|p| clamp_unit(state.matrix().trace_product(p).re)).collect()
}

/// `Σ aₙ Tr[ρ Pₙ]`.
pub fn quantum_expectation<T: Real>(state: &DensityState<T>, obs: &ProjectiveObservable<T>) -> T {
    obs.outcomes().iter().zip(outcome_probabilities(state, obs)).map(|(a, p)| *a * p).sum()
}

fn ensure_compatible<T: Real>(a: &ProjectiveObservable<T>, b: &ProjectiveObservable<T>) -> Result<()> {
    if a.compatible_with(b) {
        Ok(())
    } else {
        Err(Error::NonCommuting(a.label().to_string(), b.label().to_string()))
    }
}

/// `Tr[ρ P₁ P₂]` for compatible observables, clamped to `[0, 1]`.
pub fn born_joint_probability<T: Real>(
    state: &DensityState<T>,
    obs1: &ProjectiveObservable<T>,
    out1: T,
    obs2: &ProjectiveObservable<T>,
    out2: T,
) -> Result<T> {
    ensure_compatible(obs1, obs2)?;
    let p1 = obs1.projector_for(out1)?;
    let p2 = obs2.projector_for(out2)?;
    Ok(clamp_unit(state.matrix().trace_product(&(*p1 * *p2)).re))
}

/// Joint Born table `[n][p] = Tr[ρ Pₙ Q_p]` for compatible observables.
pub fn joint_probabilities<T: Real>(
    state: &DensityState<T>,
    obs1: &ProjectiveObservable<T>,
    obs2: &ProjectiveObservable<T>,
) -> Result<Vec<Vec<T>>> {
    ensure_compatible(obs1, obs2)?;
    Ok(obs1
        .projectors()
        .iter()
        .map(|p| obs2.projectors().iter().map(|q| clamp_unit(state.matrix().trace_product(&(*p * *q)).re)).collect())
        .collect())
}

/// `Σ aₙ b_p Tr[ρ Pₙ Q_p]`. For the singlet and spin observables this is `-a·b`.
pub fn quantum_expectation_product<T: Real>(
    state: &DensityState<T>,
    obs1: &ProjectiveObservable<T>,
    obs2: &ProjectiveObservable<T>,
) -> Result<T> {
    let table = joint_probabilities(state, obs1, obs2)?;
    let mut acc = T::zero();
    for (a, row) in obs1.outcomes().iter().zip(&table) {
        for (b, p) in obs2.outcomes().iter().zip(row) {
            acc = acc + *a * *b * *p;
        }
    }
    Ok(acc)
}

/// `PρP / Tr[ρP]`.
///
/// Fails with [`Error::ZeroProbabilityBranch`] when `Tr[ρP]` is below the
/// impossible-branch floor.
pub fn luders_update<T: Real>(state: &DensityState<T>, projector: &Matrix4<T>) -> Result<DensityState<T>> {
    let tol = T::identity_tol();
    if !projector.is_hermitian(tol) || (*projector * *projector).max_abs_diff(projector) > tol {
        return Err(Error::InvalidInput("Lüders update requires a Hermitian idempotent projector".to_string()));
    }
    let weight = state.matrix().trace_product(projector).re;
    if weight.partial_cmp(&T::zero_branch()) != Some(core::cmp::Ordering::Greater) {
        return Err(Error::ZeroProbabilityBranch(weight.as_f64()));
    }
    let updated = (*projector * *state.matrix() * *projector).scale(C::from(T::one() / weight));
    DensityState::from_parts_hermitized(updated, format!("{}|luders", state.label()))
}

/// Probability of `(out1, out2)` when `obs1` is measured first and `obs2` second,
/// using the Lüders-updated state for the second measurement. Works for
/// non-commuting observables.
pub fn sequential_probability<T: Real>(
    state: &DensityState<T>,
    obs1: &ProjectiveObservable<T>,
    out1: T,
    obs2: &ProjectiveObservable<T>,
    out2: T,
) -> Result<T> {
    let first = born_probability(state, obs1, out1)?;
    obs2.outcome_index(out2)?;
    if first <= T::zero_branch() {
        return Ok(T::zero());
    }
    let after = luders_update(state, obs1.projector_for(out1)?)?;
    Ok(clamp_unit(first * born_probability(&after, obs2, out2)?))
}

/// Uniformly distributed direction: `z` uniform in `[-1, 1]`, azimuth uniform.
pub fn random_direction<T: Real, R: Rng + ?Sized>(rng: &mut R) -> Direction<T> {
    let z = T::lit(2.0 * rng.gen::<f64>() - 1.0);
    let phi = T::lit(std::f64::consts::TAU * rng.gen::<f64>());
    Direction::from_polar_unchecked(z, phi)
}

/// Random mixed state of the given rank (1 to 4), built from
/// uniform random amplitudes and mixing weights.
pub fn random_state<T: Real, R: Rng + ?Sized>(rng: &mut R, rank: usize) -> DensityState<T> {
    let rank = rank.clamp(1, 4);
    let mut weights: Vec<f64> = (0..rank).map(|_| rng.gen::<f64>() + 1e-3).collect();
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    let mut m = Matrix4::zero();
    for w in weights {
        let mut v = [C::<f64>::zero(); 4];
        for c in v.iter_mut() {
            *c = C::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
        }
        let n = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        let v: [C<T>; 4] = v.map(|c| C::new(T::lit(c.re / n), T::lit(c.im / n)));
        m = m + Matrix4::outer(&v).scale(C::from(T::lit(w)));
    }
    DensityState::from_parts_hermitized(m, format!("random-rank{rank}"))
        .expect("convex mixture of pure states is a valid density state")
}
