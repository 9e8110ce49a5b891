//! Coplanar angle grids.
//!
//! On a grid of `n` angles the CHSH functional splits into a term depending on
//! `(a, b, b')` and a term depending on `(a', b, b')`, so its maximum over all
//! `n⁴` quadruples is found exactly in `O(n³)` from an `n × n` correlation table.

use rayon::prelude::*;
use serde::Serialize;

use super::{bound_from_lhs, ChshReport, ChshSetting, Objective};
use crate::esr::DetectionModel;
use crate::quantum::{quantum_expectation_product, DensityState, Direction, ProjectiveObservable, Subsystem};
use crate::scalar::{check_probability, Real};
use crate::{Error, Result};

/// Angles `k · step` covering `[0, 2π)`. The step must lie in `(0, π/2]`.
pub fn grid_angles<T: Real>(step: T) -> Result<Vec<T>> {
    let tol = T::identity_tol();
    if !step.is_finite() || step <= T::zero() || step > T::FRAC_PI_2() + tol {
        return Err(Error::InvalidInput(format!("grid step {step} rad must lie in (0, π/2]")));
    }
    let n = ((T::TAU() / step) - T::lit(1e-9)).ceil().to_usize().unwrap_or(0).max(1);
    Ok((0..n).map(|k| T::from_usize(k).unwrap() * step).collect())
}

/// `table[i][j] = ⟨A(θᵢ) B(θⱼ)⟩` for spins in the measurement plane.
pub fn correlation_table<T: Real>(state: &DensityState<T>, angles: &[T]) -> Result<Vec<Vec<T>>> {
    let a_obs: Vec<_> =
        angles.iter().map(|t| ProjectiveObservable::spin(&Direction::in_plane(*t), Subsystem::First)).collect();
    let b_obs: Vec<_> =
        angles.iter().map(|t| ProjectiveObservable::spin(&Direction::in_plane(*t), Subsystem::Second)).collect();
    a_obs.par_iter().map(|a| b_obs.iter().map(|b| quantum_expectation_product(state, a, b)).collect()).collect()
}

/// Best grid quadruple of a CHSH functional.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GridMaximum<T> {
    pub value: T,
    /// `a, a', b, b'` in radians.
    pub angles: [T; 4],
}

impl<T: Real> GridMaximum<T> {
    pub fn setting(&self) -> ChshSetting<T> {
        ChshSetting::coplanar(self.angles)
    }

    pub fn angles_degrees(&self) -> [T; 4] {
        self.angles.map(|a| a.to_degrees())
    }
}

/// Exact maximum over index quadruples of
/// `|pa[i](pb[j] E[i][j] - pb[l] E[i][l])| + |pa[k](pb[j] E[k][j] + pb[l] E[k][l])|`.
///
/// Ties keep the lexicographically first `(j, l, i, k)`.
pub(crate) fn separable_max<T: Real>(e: &[Vec<T>], pd_a: &[T], pd_b: &[T]) -> (T, [usize; 4]) {
    let n = e.len();
    let per_b: Vec<(T, [usize; 4])> = (0..n)
        .into_par_iter()
        .map(|j| {
            let mut best = (T::neg_infinity(), [0; 4]);
            for l in 0..n {
                let (mut f, mut fi) = (T::neg_infinity(), 0);
                let (mut g, mut gi) = (T::neg_infinity(), 0);
                for i in 0..n {
                    let row = &e[i];
                    let diff = (pd_a[i] * (pd_b[j] * row[j] - pd_b[l] * row[l])).abs();
                    if diff > f {
                        f = diff;
                        fi = i;
                    }
                    let sum = (pd_a[i] * (pd_b[j] * row[j] + pd_b[l] * row[l])).abs();
                    if sum > g {
                        g = sum;
                        gi = i;
                    }
                }
                if f + g > best.0 {
                    best = (f + g, [fi, gi, j, l]);
                }
            }
            best
        })
        .collect();
    per_b.into_iter().fold((T::neg_infinity(), [0; 4]), |acc, x| if x.0 > acc.0 { x } else { acc })
}

fn detection_column<T: Real>(
    state: &DensityState<T>,
    det: &DetectionModel<T>,
    angles: &[T],
    subsystem: Subsystem,
) -> Result<Vec<T>> {
    angles
        .iter()
        .map(|t| {
            let obs = ProjectiveObservable::spin(&Direction::in_plane(*t), subsystem);
            det.probability(state.label(), obs.label())
        })
        .collect()
}

/// Exact maximum of the standard or modified functional over all coplanar
/// quadruples on the grid with the given step (radians).
pub fn grid_max_lhs<T: Real>(
    state: &DensityState<T>,
    det: &DetectionModel<T>,
    objective: Objective,
    step: T,
) -> Result<GridMaximum<T>> {
    let angles = grid_angles(step)?;
    let table = correlation_table(state, &angles)?;
    let (pd_a, pd_b) = match objective {
        Objective::Standard => (vec![T::one(); angles.len()], vec![T::one(); angles.len()]),
        Objective::Modified => (
            detection_column(state, det, &angles, Subsystem::First)?,
            detection_column(state, det, &angles, Subsystem::Second)?,
        ),
    };
    let (value, idx) = separable_max(&table, &pd_a, &pd_b);
    Ok(GridMaximum { value, angles: idx.map(|i| angles[i]) })
}

/// Grid minimum of the singlet detection bound: the bound at the quadruple that
/// maximizes `|a·b - a·b'| + |a'·b + a'·b'|`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MinimumBound<T> {
    pub bound: T,
    /// `1 - bound`: least probability of the no-registration outcome.
    pub no_registration_lower_bound: T,
    pub at: GridMaximum<T>,
}

pub fn min_detection_bound<T: Real>(step: T) -> Result<MinimumBound<T>> {
    let angles = grid_angles(step)?;
    let dirs: Vec<_> = angles.iter().map(|t| Direction::in_plane(*t)).collect();
    let table: Vec<Vec<T>> = dirs.iter().map(|a| dirs.iter().map(|b| a.dot(b)).collect()).collect();
    let ones = vec![T::one(); angles.len()];
    let (value, idx) = separable_max(&table, &ones, &ones);
    let bound = bound_from_lhs(value);
    Ok(MinimumBound {
        bound,
        no_registration_lower_bound: T::one() - bound,
        at: GridMaximum { value, angles: idx.map(|i| angles[i]) },
    })
}

/// One row of an angle scan.
#[derive(Clone, Debug, PartialEq)]
pub struct ScanRow<T> {
    /// `a, a', b, b'` in radians.
    pub angles: [T; 4],
    pub report: Result<ChshReport<T>>,
}

impl<T: Real> ScanRow<T> {
    pub fn angles_degrees(&self) -> [T; 4] {
        self.angles.map(|a| a.to_degrees())
    }
}

/// Precomputed tables for enumerating every coplanar quadruple on a grid.
///
/// Row `r` corresponds to indices `(i, k, j, l)` of `(a, a', b, b')` with `a`
/// varying slowest, so row order is fixed by the grid alone.
pub struct ScanGrid<T> {
    angles: Vec<T>,
    table: Vec<Vec<T>>,
    pd_a: Vec<Result<T>>,
    pd_b: Vec<Result<T>>,
    roles: Option<[T; 4]>,
}

impl<T: Real> ScanGrid<T> {
    pub fn new(state: &DensityState<T>, det: &DetectionModel<T>, step: T) -> Result<Self> {
        let angles = grid_angles(step)?;
        let table = correlation_table(state, &angles)?;
        let lookup = |subsystem| {
            angles
                .iter()
                .map(|t| {
                    let obs = ProjectiveObservable::spin(&Direction::in_plane(*t), subsystem);
                    det.probability(state.label(), obs.label())
                })
                .collect::<Vec<_>>()
        };
        let pd_a = lookup(Subsystem::First);
        let pd_b = lookup(Subsystem::Second);
        Ok(Self { angles, table, pd_a, pd_b, roles: None })
    }

    /// Scan with detection probabilities fixed per role `A(a), A(a'), B(b), B(b')`
    /// instead of per direction.
    pub fn with_role_detection(state: &DensityState<T>, detection: [T; 4], step: T) -> Result<Self> {
        for p in detection {
            check_probability(p, "detection probability")?;
        }
        let angles = grid_angles(step)?;
        let table = correlation_table(state, &angles)?;
        Ok(Self { angles, table, pd_a: Vec::new(), pd_b: Vec::new(), roles: Some(detection) })
    }

    pub fn angles(&self) -> &[T] {
        &self.angles
    }

    pub fn len(&self) -> usize {
        self.angles.len().pow(4)
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    pub fn row(&self, index: usize) -> ScanRow<T> {
        let n = self.angles.len();
        let (i, k, j, l) = (index / (n * n * n), (index / (n * n)) % n, (index / n) % n, index % n);
        let e = &self.table;
        let report = (|| {
            if let Some(pd) = self.roles {
                return ChshReport::from_parts([e[i][j], e[i][l], e[k][j], e[k][l]], pd);
            }
            let pd = [self.pd_a[i].clone()?, self.pd_a[k].clone()?, self.pd_b[j].clone()?, self.pd_b[l].clone()?];
            ChshReport::from_parts([e[i][j], e[i][l], e[k][j], e[k][l]], pd)
        })();
        ScanRow { angles: [i, k, j, l].map(|x| self.angles[x]), report }
    }

    pub fn rows(&self) -> impl Iterator<Item = ScanRow<T>> + '_ {
        (0..self.len()).map(move |r| self.row(r))
    }
}

/// Reports for every coplanar quadruple on the grid, in [`ScanGrid`] row order.
/// Detection lookups that fail surface as per-row errors.
pub fn angle_scan<T: Real>(state: &DensityState<T>, det: &DetectionModel<T>, step: T) -> Result<Vec<ScanRow<T>>> {
    let grid = ScanGrid::new(state, det, step)?;
    Ok((0..grid.len()).into_par_iter().map(|r| grid.row(r)).collect())
}
