//! Fixed and scanning subbeams, their phase-coherent combination, and
//! least-squares synthesis against a desired multibeam magnitude pattern.

use std::f64::consts::PI;

use nalgebra::DVector;
use num_complex::Complex64;

use crate::array::{phase_of, response_matrix, steering_unchecked, weighted};
use crate::{BeamError, CMatrix, CVector};

const UNIT_NORM_TOL: f64 = 1e-9;

/// Communication subbeam `w_c`, scanning subbeam `w_s` and power split `ρ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubbeamPair {
    w_c: CVector,
    w_s: CVector,
    rho: f64,
}

impl SubbeamPair {
    pub fn new(w_c: CVector, w_s: CVector, rho: f64) -> Result<Self, BeamError> {
        if w_c.len() != w_s.len() {
            return Err(BeamError::DimensionMismatch {
                expected: w_c.len(),
                found: w_s.len(),
            });
        }
        for w in [&w_c, &w_s] {
            let n = w.norm();
            if (n - 1.0).abs() > UNIT_NORM_TOL {
                return Err(BeamError::NotUnitNorm(n));
            }
        }
        if !(rho > 0.0 && rho < 1.0) {
            return Err(BeamError::InvalidSplit(rho));
        }
        Ok(Self { w_c, w_s, rho })
    }

    pub fn w_c(&self) -> &CVector {
        &self.w_c
    }

    pub fn w_s(&self) -> &CVector {
        &self.w_s
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// `P = √(ρ(1 − ρ))`.
    pub fn p(&self) -> f64 {
        (self.rho * (1.0 - self.rho)).sqrt()
    }

    pub fn num_elements(&self) -> usize {
        self.w_c.len()
    }
}

/// Zero-padded conventional beam: the first `K_s` elements are
/// `conj(a(θ0))/√K_s`, the rest are zero.
pub fn conventional_beam(k_s: usize, m: usize, theta0: f64) -> Result<CVector, BeamError> {
    if k_s == 0 || k_s > m {
        return Err(BeamError::invalid(
            "k_s",
            format!("active elements must be in 1..={m}, got {k_s}"),
        ));
    }
    let a = crate::array::steering_vector(theta0, k_s)?;
    let scale = 1.0 / (k_s as f64).sqrt();
    Ok(CVector::from_fn(m, |i, _| {
        if i < k_s {
            a[i].conj() * scale
        } else {
            Complex64::new(0.0, 0.0)
        }
    }))
}

/// Shifts a beam in the sine domain by `sin δ`: element `m` is multiplied by
/// `exp(−jπ m sin δ)`.
pub fn steer(w: &CVector, delta: f64) -> CVector {
    let shift = steering_unchecked(delta, w.len()).conjugate();
    w.component_mul(&shift)
}

/// `w_t = √ρ w_c + √(1 − ρ) e^{jφ} w_s`. Not normalized.
pub fn combine(pair: &SubbeamPair, phi: f64) -> CVector {
    &pair.w_c * Complex64::new(pair.rho.sqrt(), 0.0)
        + &pair.w_s * Complex64::from_polar((1.0 - pair.rho).sqrt(), phi)
}

/// Desired beam pattern `d_v = D_v p_v` sampled on an angle grid, with the
/// diagonal weighting `D` used by the mismatch metric.
#[derive(Debug, Clone, PartialEq)]
pub struct DesiredPattern {
    grid: Vec<f64>,
    response: CMatrix,
    weights: DVector<f64>,
    magnitudes: DVector<f64>,
    phases: CVector,
}

impl DesiredPattern {
    pub fn new(
        grid: Vec<f64>,
        num_elements: usize,
        weights: DVector<f64>,
        magnitudes: DVector<f64>,
        phases: CVector,
    ) -> Result<Self, BeamError> {
        let response = response_matrix(&grid, num_elements)?;
        let n = grid.len();
        for len in [weights.len(), magnitudes.len(), phases.len()] {
            if len != n {
                return Err(BeamError::DimensionMismatch {
                    expected: n,
                    found: len,
                });
            }
        }
        if weights.iter().chain(magnitudes.iter()).any(|&v| !(v >= 0.0)) {
            return Err(BeamError::invalid(
                "desired pattern",
                "weights and magnitudes must be nonnegative",
            ));
        }
        if phases.iter().any(|p| (p.norm() - 1.0).abs() > 1e-9) {
            return Err(BeamError::invalid("phases", "entries must have unit modulus"));
        }
        Ok(Self {
            grid,
            response,
            weights,
            magnitudes,
            phases,
        })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn num_points(&self) -> usize {
        self.grid.len()
    }

    pub fn num_elements(&self) -> usize {
        self.response.ncols()
    }

    /// Array response matrix `A` on the grid.
    pub fn response(&self) -> &CMatrix {
        &self.response
    }

    /// Diagonal of `D`.
    pub fn weights(&self) -> &DVector<f64> {
        &self.weights
    }

    /// Diagonal of `D_v`.
    pub fn magnitudes(&self) -> &DVector<f64> {
        &self.magnitudes
    }

    /// `p_v`.
    pub fn phases(&self) -> &CVector {
        &self.phases
    }

    /// `d_v = D_v p_v`.
    pub fn target(&self) -> CVector {
        CVector::from_fn(self.grid.len(), |n, _| self.phases[n] * self.magnitudes[n])
    }

    /// `D d_v`.
    pub fn weighted_target(&self) -> CVector {
        weighted(&self.weights, &self.target())
    }

    pub fn with_phases(&self, phases: CVector) -> Result<Self, BeamError> {
        if phases.len() != self.grid.len() {
            return Err(BeamError::DimensionMismatch {
                expected: self.grid.len(),
                found: phases.len(),
            });
        }
        if phases.iter().any(|p| (p.norm() - 1.0).abs() > 1e-9) {
            return Err(BeamError::invalid("phases", "entries must have unit modulus"));
        }
        Ok(Self {
            phases,
            ..self.clone()
        })
    }

    /// Phases of `A w`, used by the alternating phase update.
    pub fn phases_of(&self, w: &CVector) -> CVector {
        (&self.response * w).map(phase_of)
    }
}

/// Uniform grid of `n` angles over `[−90°, 90°]`.
pub fn uniform_grid(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n)
            .map(|i| -PI / 2.0 + PI * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Desired multibeam magnitudes
/// `D_v[n] = √(ρ |a(θ_n)ᵀ w_c⁰|² + (1 − ρ) |a(θ_n)ᵀ w_s⁰|²)`.
///
/// Takes the ideal subbeams directly so that single-beam references
/// (`ρ = 1`, or a zero scanning beam) can be expressed. `weights` is the
/// diagonal of `D` and defaults to all ones. Phases start at all ones.
pub fn desired_multibeam(
    w_c0: &CVector,
    w_s0: &CVector,
    rho: f64,
    grid: &[f64],
    weights: Option<&[f64]>,
) -> Result<DesiredPattern, BeamError> {
    if w_c0.len() != w_s0.len() {
        return Err(BeamError::DimensionMismatch {
            expected: w_c0.len(),
            found: w_s0.len(),
        });
    }
    if !(0.0..=1.0).contains(&rho) {
        return Err(BeamError::InvalidSplit(rho));
    }
    let a = response_matrix(grid, w_c0.len())?;
    let pc = &a * w_c0;
    let ps = &a * w_s0;
    let magnitudes = DVector::from_fn(grid.len(), |n, _| {
        (rho * pc[n].norm_sqr() + (1.0 - rho) * ps[n].norm_sqr()).sqrt()
    });
    let weights = match weights {
        Some(w) => DVector::from_row_slice(w),
        None => DVector::from_element(grid.len(), 1.0),
    };
    let phases = CVector::from_element(grid.len(), Complex64::new(1.0, 0.0));
    DesiredPattern::new(grid.to_vec(), w_c0.len(), weights, magnitudes, phases)
}

#[derive(Debug, Clone)]
pub struct IlsOutcome {
    /// Unit-norm synthesized weights.
    pub w: CVector,
    /// `‖D(A w − d_v)‖²` after each least-squares step, for the unscaled
    /// least-squares solution.
    pub objective_history: Vec<f64>,
    /// Desired pattern carrying the phases used in the final step.
    pub desired: DesiredPattern,
}

impl IlsOutcome {
    pub fn iterations(&self) -> usize {
        self.objective_history.len()
    }
}

/// Iterative least squares: alternates the minimum-norm solution of
/// `min_w ‖D(A w − d_v)‖²` with the phase update `p_v = exp(j arg(A w))`.
///
/// Both half-steps minimize the same objective, so it never increases.
/// Stops after `max_iters` least-squares solves, or earlier once the
/// objective improves by less than `1e−10 (1 + value)`.
pub fn ils_synthesize(desired: &DesiredPattern, max_iters: usize) -> Result<IlsOutcome, BeamError> {
    if max_iters == 0 {
        return Err(BeamError::invalid("max_iters", "must be at least 1"));
    }
    let b = CMatrix::from_fn(desired.num_points(), desired.num_elements(), |n, k| {
        desired.response()[(n, k)] * desired.weights()[n]
    });
    let pinv = b
        .clone()
        .pseudo_inverse(1e-12 * b.norm().max(1.0))
        .map_err(|e| BeamError::invalid("response", e))?;

    let mut current = desired.clone();
    let mut history = Vec::with_capacity(max_iters);
    let mut w = CVector::zeros(desired.num_elements());
    for iter in 0..max_iters {
        if iter > 0 {
            current = current.with_phases(current.phases_of(&w))?;
        }
        let target = current.weighted_target();
        let next = &pinv * &target;
        let value = (&b * &next - &target).norm_squared();
        let stalled = history
            .last()
            .is_some_and(|&prev: &f64| prev - value <= 1e-10 * (1.0 + value));
        w = next;
        history.push(value);
        if stalled {
            break;
        }
    }
    let norm = w.norm();
    if norm == 0.0 {
        return Err(BeamError::ZeroVector);
    }
    Ok(IlsOutcome {
        w: w / Complex64::new(norm, 0.0),
        objective_history: history,
        desired: current,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::{bf_gain, pattern, waveform_mse};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_unit(seed: u64, n: usize) -> CVector {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = CVector::from_fn(n, |_, _| {
            c(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng))
        });
        let norm = v.norm();
        v / c(norm, 0.0)
    }

    #[test]
    fn conventional_beam_examples() {
        let w = conventional_beam(4, 4, 0.0).unwrap();
        assert!(w.iter().all(|z| (z - c(0.5, 0.0)).norm() < 1e-15));
        let w = conventional_beam(2, 4, 0.0).unwrap();
        let s = 1.0 / 2f64.sqrt();
        let expected = [c(s, 0.0), c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0)];
        assert!(w.iter().zip(&expected).all(|(a, b)| (a - b).norm() < 1e-15));
        let w = conventional_beam(12, 16, 0.0).unwrap();
        assert!((bf_gain(0.0, &w).unwrap() - 12.0).abs() < 1e-12);
        assert!((w.norm() - 1.0).abs() < 1e-15);
        assert!(conventional_beam(17, 16, 0.0).is_err());
    }

    #[test]
    fn steer_examples() {
        let w = random_unit(1, 8);
        assert_eq!(steer(&w, 0.0), w);
        let theta1 = 0.37;
        let b = steer(&conventional_beam(16, 16, 0.0).unwrap(), theta1);
        assert!((bf_gain(theta1, &b).unwrap() - 16.0).abs() < 1e-10);
        let grid: Vec<f64> = (0..181).map(|i| (-90.0 + i as f64).to_radians()).collect();
        let best = grid
            .iter()
            .map(|&t| bf_gain(t, &b).unwrap())
            .fold(0.0, f64::max);
        assert!(best <= 16.0 + 1e-9);
    }

    #[test]
    fn steer_shifts_pattern_in_sine_domain() {
        let w = random_unit(2, 10);
        let delta = -0.41;
        let shifted = steer(&w, delta);
        for i in 0..512 {
            let u = -1.0 + 2.0 * i as f64 / 512.0;
            // Pattern of the shifted beam at sine u equals the original at u − sin δ.
            let orig = (0..10)
                .map(|m| w[m] * Complex64::from_polar(1.0, PI * m as f64 * (u - delta.sin())))
                .sum::<Complex64>();
            let new = (0..10)
                .map(|m| shifted[m] * Complex64::from_polar(1.0, PI * m as f64 * u))
                .sum::<Complex64>();
            assert!((orig.norm_sqr() - new.norm_sqr()).abs() < 1e-10);
        }
    }

    #[test]
    fn combine_examples() {
        let wc = random_unit(3, 6);
        let ws = random_unit(4, 6);
        let pair = SubbeamPair::new(wc.clone(), ws.clone(), 0.5).unwrap();
        let expected = (&wc + &ws) / c(2f64.sqrt(), 0.0);
        assert!((combine(&pair, 0.0) - expected).camax() < 1e-15);
        let same = SubbeamPair::new(wc.clone(), wc.clone(), 0.5).unwrap();
        assert!(combine(&same, PI).camax() < 1e-15);
    }

    #[test]
    fn pair_validation() {
        let wc = random_unit(5, 4);
        assert!(SubbeamPair::new(wc.clone(), wc.clone() * c(2.0, 0.0), 0.5).is_err());
        assert!(SubbeamPair::new(wc.clone(), wc.clone(), 1.0).is_err());
        assert!(SubbeamPair::new(wc.clone(), random_unit(6, 5), 0.5).is_err());
    }

    #[test]
    fn desired_single_beam_and_power_split() {
        let grid = uniform_grid(181);
        let wc = conventional_beam(16, 16, 0.0).unwrap();
        let zero = CVector::zeros(16);
        let d = desired_multibeam(&wc, &zero, 1.0, &grid, None).unwrap();
        let p = pattern(&wc, &grid).unwrap();
        for n in 0..grid.len() {
            assert!((d.magnitudes()[n] - p[n].norm()).abs() < 1e-12);
        }
        assert!(d.phases().iter().all(|z| *z == c(1.0, 0.0)));

        // A 30° shift puts each mainlobe on a null of the other beam.
        let delta = 30f64.to_radians();
        let ws = steer(&wc, delta);
        let split = desired_multibeam(&wc, &ws, 0.5, &[0.0, delta], None).unwrap();
        for n in 0..2 {
            let peak = split.magnitudes()[n].powi(2);
            assert!((peak - 8.0).abs() < 1e-10, "peak power {peak}");
        }
    }

    #[test]
    fn desired_is_symmetric_in_subbeams() {
        let grid = uniform_grid(91);
        let wc = random_unit(7, 8);
        let ws = random_unit(8, 8);
        let a = desired_multibeam(&wc, &ws, 0.3, &grid, None).unwrap();
        let b = desired_multibeam(&ws, &wc, 0.7, &grid, None).unwrap();
        assert!((a.magnitudes() - b.magnitudes()).camax() < 1e-12);
    }

    #[test]
    fn ils_recovers_conventional_beam() {
        let grid = uniform_grid(181);
        let wc = conventional_beam(16, 16, 0.2).unwrap();
        let d = desired_multibeam(&wc, &CVector::zeros(16), 1.0, &grid, None).unwrap();
        // From flat phases the fit improves but converges slowly.
        let flat = ils_synthesize(&d, 50).unwrap();
        let h = &flat.objective_history;
        assert!(h[h.len() - 1] < 0.01 * h[0]);
        // From the true phases a single solve is exact.
        let d = d.with_phases(d.phases_of(&wc)).unwrap();
        let out = ils_synthesize(&d, 5).unwrap();
        assert!(waveform_mse(&out.w, &out.desired).unwrap() < 1e-12);
        assert!((out.w.dotc(&wc).norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn ils_single_step_is_pseudo_inverse() {
        let grid = uniform_grid(61);
        let wc = conventional_beam(10, 10, 0.1).unwrap();
        let ws = steer(&conventional_beam(7, 10, 0.0).unwrap(), -0.5);
        let d = desired_multibeam(&wc, &ws, 0.5, &grid, None).unwrap();
        let out = ils_synthesize(&d, 1).unwrap();
        // Normal equations solve as an independent least-squares route.
        let a = d.response();
        let rhs = a.adjoint() * d.target();
        let direct = (a.adjoint() * a).lu().solve(&rhs).unwrap();
        let direct = &direct / c(direct.norm(), 0.0);
        assert!((&out.w - direct).camax() < 1e-8);
        assert_eq!(out.iterations(), 1);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn steer_preserves_norm(seed in any::<u64>(), delta in -1.5f64..1.5) {
            let w = random_unit(seed, 12);
            prop_assert!((steer(&w, delta).norm() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn combine_norm_identity(seed in any::<u64>(), rho in 0.05f64..0.95, phi in -PI..PI) {
            let pair = SubbeamPair::new(random_unit(seed, 6), random_unit(seed ^ 9, 6), rho).unwrap();
            let w = combine(&pair, phi);
            let cross = pair.w_c().dotc(pair.w_s()) * Complex64::from_polar(1.0, phi);
            let expected = 1.0 + 2.0 * pair.p() * cross.re;
            prop_assert!((w.norm_squared() - expected).abs() < 1e-12);
            let rest = &w - pair.w_c() * c(rho.sqrt(), 0.0);
            let scan = pair.w_s() * Complex64::from_polar((1.0 - rho).sqrt(), phi);
            prop_assert!((rest - scan).camax() < 1e-15);
        }

        #[test]
        fn ils_objective_never_increases(seed in any::<u64>()) {
            let grid = uniform_grid(91);
            let wc = random_unit(seed, 8);
            let ws = random_unit(seed ^ 3, 8);
            let d = desired_multibeam(&wc, &ws, 0.5, &grid, None).unwrap();
            let out = ils_synthesize(&d, 10).unwrap();
            for pair in out.objective_history.windows(2) {
                prop_assert!(pair[1] <= pair[0] + 1e-10 * (1.0 + pair[0]));
            }
        }
    }
}
