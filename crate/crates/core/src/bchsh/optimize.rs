//! Measurement-angle search: exact coarse grid, then Nelder–Mead refinement.
//!
//! The functionals contain absolute values, so the refinement is derivative-free.
//! Both stages are deterministic for a fixed budget.

use serde::Serialize;

use super::grid::grid_max_lhs;
use super::{conditional_correlations, modified_chsh_value, setting_detection, standard_chsh_lhs, ChshSetting};
use crate::esr::DetectionModel;
use crate::quantum::DensityState;
use crate::scalar::Real;
use crate::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Objective {
    /// `|E(a,b) - E(a,b')| + |E(a',b) + E(a',b')|` on conditional correlations.
    Standard,
    /// The detection-weighted functional.
    Modified,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchBudget {
    pub grid_step_degrees: f64,
    pub max_iterations: usize,
}

impl Default for SearchBudget {
    fn default() -> Self {
        Self { grid_step_degrees: 10.0, max_iterations: 200 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChshOptimum<T> {
    pub setting: ChshSetting<T>,
    /// `a, a', b, b'` in radians.
    pub angles: [T; 4],
    pub value: T,
    /// Value at the best grid quadruple, before refinement.
    pub grid_value: T,
    pub iterations: usize,
}

fn evaluate<T: Real>(
    state: &DensityState<T>,
    det: &DetectionModel<T>,
    objective: Objective,
    angles: [T; 4],
) -> Result<T> {
    let setting = ChshSetting::coplanar(angles);
    let e = conditional_correlations(&setting, state)?;
    match objective {
        Objective::Standard => standard_chsh_lhs(e),
        Objective::Modified => modified_chsh_value(e, setting_detection(&setting, state, det)?),
    }
}

pub fn optimize_chsh_angles<T: Real>(
    state: &DensityState<T>,
    det: &DetectionModel<T>,
    objective: Objective,
) -> Result<ChshOptimum<T>> {
    optimize_chsh_angles_with(state, det, objective, SearchBudget::default())
}

/// Maximizes the chosen functional over coplanar settings.
///
/// Grid failures (a missing detection entry on the grid) are returned as
/// errors. During refinement a point whose detection probabilities cannot be
/// resolved is treated as worse than any valid point.
pub fn optimize_chsh_angles_with<T: Real>(
    state: &DensityState<T>,
    det: &DetectionModel<T>,
    objective: Objective,
    budget: SearchBudget,
) -> Result<ChshOptimum<T>> {
    let step = T::lit(budget.grid_step_degrees).to_radians();
    let start = grid_max_lhs(state, det, objective, step)?;
    let f = |x: &[T; 4]| evaluate(state, det, objective, *x).unwrap_or(T::neg_infinity());
    let (angles, value, iterations) = nelder_mead_max(f, start.angles, step / T::lit(2.0), budget.max_iterations);
    // The simplex keeps its best vertex, so refinement never loses ground.
    let (angles, value) = if value >= start.value { (angles, value) } else { (start.angles, start.value) };
    Ok(ChshOptimum { setting: ChshSetting::coplanar(angles), angles, value, grid_value: start.value, iterations })
}

/// Nelder–Mead maximization in four dimensions with the standard coefficients
/// (reflection 1, expansion 2, contraction 1/2, shrink 1/2).
fn nelder_mead_max<T: Real, F: Fn(&[T; 4]) -> T>(
    f: F,
    start: [T; 4],
    scale: T,
    max_iterations: usize,
) -> ([T; 4], T, usize) {
    let half = T::lit(0.5);
    let two = T::lit(2.0);
    let mut simplex: Vec<([T; 4], T)> = Vec::with_capacity(5);
    simplex.push((start, f(&start)));
    for d in 0..4 {
        let mut x = start;
        x[d] = x[d] + scale;
        simplex.push((x, f(&x)));
    }
    let combine = |p: &[T; 4], q: &[T; 4], t: T| -> [T; 4] {
        let mut out = [T::zero(); 4];
        for i in 0..4 {
            out[i] = p[i] + t * (q[i] - p[i]);
        }
        out
    };

    let mut iterations = 0;
    while iterations < max_iterations {
        // Descending by value; stable sort keeps the ordering deterministic on ties.
        simplex.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal));
        let spread = simplex[0].1 - simplex[4].1;
        let size = simplex[1..]
            .iter()
            .flat_map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (*a - *b).abs()))
            .fold(T::zero(), T::max);
        if spread.is_finite() && spread <= T::lit(1e-15) && size <= T::lit(1e-10) {
            break;
        }
        iterations += 1;

        let mut centroid = [T::zero(); 4];
        for (x, _) in &simplex[..4] {
            for i in 0..4 {
                centroid[i] = centroid[i] + x[i] / T::lit(4.0);
            }
        }
        let worst = simplex[4];
        let reflected = combine(&centroid, &worst.0, -T::one());
        let fr = f(&reflected);
        if fr > simplex[0].1 {
            let expanded = combine(&centroid, &worst.0, -two);
            let fe = f(&expanded);
            simplex[4] = if fe > fr { (expanded, fe) } else { (reflected, fr) };
            continue;
        }
        if fr > simplex[3].1 {
            simplex[4] = (reflected, fr);
            continue;
        }
        let accepted = if fr > worst.1 {
            let c = combine(&centroid, &reflected, half);
            let fc = f(&c);
            (fc >= fr).then_some((c, fc))
        } else {
            let c = combine(&centroid, &worst.0, half);
            let fc = f(&c);
            (fc > worst.1).then_some((c, fc))
        };
        if let Some(v) = accepted {
            simplex[4] = v;
            continue;
        }
        let best = simplex[0].0;
        for v in simplex.iter_mut().skip(1) {
            let x = combine(&best, &v.0, half);
            *v = (x, f(&x));
        }
    }
    simplex.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal));
    (simplex[0].0, simplex[0].1, iterations)
}
