//! Brute-force reference searches.
//!
//! These are deliberately naive: they evaluate objectives and constraints
//! pointwise and share no algebra with the closed-form or relaxed solvers.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::array::{angular_power_matrix, AngularPowerMatrix};
use crate::{BeamError, CVector};

/// Number of integration steps of [`integration_reference`].
pub const REFERENCE_STEPS: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridOutcome {
    /// Best feasible `(φ, value)`, or `None` when no grid point is feasible.
    pub best: Option<(f64, f64)>,
    pub feasible_count: usize,
    pub resolution: usize,
}

/// Evaluates `objective` on `resolution` equispaced points of `[−π, π)` and
/// keeps the best point that satisfies every constraint exactly.
pub fn grid_search_phi(
    objective: impl Fn(f64) -> f64,
    constraints: &[&dyn Fn(f64) -> bool],
    resolution: usize,
) -> Result<GridOutcome, BeamError> {
    if resolution < 1000 {
        return Err(BeamError::invalid("resolution", "must be at least 1000"));
    }
    let mut best: Option<(f64, f64)> = None;
    let mut feasible_count = 0;
    for i in 0..resolution {
        let phi = -PI + TAU * i as f64 / resolution as f64;
        if !constraints.iter().all(|c| c(phi)) {
            continue;
        }
        feasible_count += 1;
        let v = objective(phi);
        if best.is_none_or(|(_, bv)| v > bv) {
            best = Some((phi, v));
        }
    }
    Ok(GridOutcome {
        best,
        feasible_count,
        resolution,
    })
}

/// Best of `samples` unit vectors drawn uniformly on the complex sphere that
/// satisfy every constraint. Deterministic for a given seed.
pub fn sampled_search_w(
    objective: impl Fn(&CVector) -> f64,
    constraints: &[&dyn Fn(&CVector) -> bool],
    m: usize,
    samples: usize,
    seed: u64,
) -> Result<Option<(CVector, f64)>, BeamError> {
    if m == 0 || samples == 0 {
        return Err(BeamError::invalid("samples", "need a nonzero dimension and sample count"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(CVector, f64)> = None;
    for _ in 0..samples {
        let w = CVector::from_fn(m, |_, _| {
            Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng))
        });
        let n = w.norm();
        if n == 0.0 {
            continue;
        }
        let w = w.unscale(n);
        if !constraints.iter().all(|c| c(&w)) {
            continue;
        }
        let v = objective(&w);
        if best.as_ref().is_none_or(|(_, bv)| v > *bv) {
            best = Some((w, v));
        }
    }
    Ok(best)
}

/// Angular power matrix integrated with [`REFERENCE_STEPS`] steps.
pub fn integration_reference(
    theta_l: f64,
    theta_r: f64,
    m: usize,
) -> Result<AngularPowerMatrix, BeamError> {
    angular_power_matrix(theta_l, theta_r, REFERENCE_STEPS, m)
}
