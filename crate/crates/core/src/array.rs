//! Uniform linear array geometry, channel construction and beam metrics.
//!
//! All angles are radians measured from broadside. Element spacing is half a
//! wavelength, so the phase progression across the aperture is `π sin θ`.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::subbeam::DesiredPattern;
use crate::{BeamError, CMatrix, CVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArrayConfig {
    num_elements: usize,
}

impl ArrayConfig {
    pub fn new(num_elements: usize) -> Result<Self, BeamError> {
        if num_elements < 2 {
            return Err(BeamError::TooFewElements {
                min: 2,
                got: num_elements,
            });
        }
        Ok(Self { num_elements })
    }

    pub fn num_elements(&self) -> usize {
        self.num_elements
    }

    pub fn steering(&self, theta: f64) -> Result<CVector, BeamError> {
        steering_vector(theta, self.num_elements)
    }
}

fn check_angle(theta: f64) -> Result<(), BeamError> {
    if !(-FRAC_PI_2..=FRAC_PI_2).contains(&theta) {
        return Err(BeamError::AngleOutOfRange(theta));
    }
    Ok(())
}

/// `a(θ)` with element `m` equal to `exp(jπ m sin θ)`.
pub fn steering_vector(theta: f64, m: usize) -> Result<CVector, BeamError> {
    if m == 0 {
        return Err(BeamError::TooFewElements { min: 1, got: 0 });
    }
    check_angle(theta)?;
    Ok(steering_unchecked(theta, m))
}

pub(crate) fn steering_unchecked(theta: f64, m: usize) -> CVector {
    let step = PI * theta.sin();
    CVector::from_fn(m, |i, _| Complex64::from_polar(1.0, step * i as f64))
}

/// `N × M` matrix whose rows are `a(θ_n)ᵀ`.
pub fn response_matrix(grid: &[f64], m: usize) -> Result<CMatrix, BeamError> {
    if grid.is_empty() {
        return Err(BeamError::EmptyGrid);
    }
    if m == 0 {
        return Err(BeamError::TooFewElements { min: 1, got: 0 });
    }
    for &t in grid {
        check_angle(t)?;
    }
    Ok(CMatrix::from_fn(grid.len(), m, |n, k| {
        Complex64::from_polar(1.0, PI * grid[n].sin() * k as f64)
    }))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSpec {
    pub gain: Complex64,
    pub aod: f64,
    pub aoa: f64,
}

impl PathSpec {
    pub fn new(gain: Complex64, aod: f64, aoa: f64) -> Result<Self, BeamError> {
        for angle in [aod, aoa] {
            if !(angle > -FRAC_PI_2 && angle < FRAC_PI_2) {
                return Err(BeamError::AngleOutOfRange(angle));
            }
        }
        Ok(Self { gain, aod, aoa })
    }
}

/// Narrowband multipath channel `H = Σ b_ℓ a(θ_r,ℓ) a(θ_t,ℓ)ᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultipathChannel {
    paths: Vec<PathSpec>,
    tx_elements: usize,
    rx_elements: usize,
    matrix: CMatrix,
}

impl MultipathChannel {
    pub fn paths(&self) -> &[PathSpec] {
        &self.paths
    }

    pub fn tx_elements(&self) -> usize {
        self.tx_elements
    }

    pub fn rx_elements(&self) -> usize {
        self.rx_elements
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }
}

pub fn build_channel(
    paths: &[PathSpec],
    tx: usize,
    rx: usize,
) -> Result<MultipathChannel, BeamError> {
    if tx == 0 || rx == 0 {
        return Err(BeamError::TooFewElements {
            min: 1,
            got: tx.min(rx),
        });
    }
    let mut matrix = CMatrix::zeros(rx, tx);
    for p in paths {
        let ar = steering_unchecked(p.aoa, rx);
        let at = steering_unchecked(p.aod, tx);
        matrix += (ar * at.transpose()) * p.gain;
    }
    Ok(MultipathChannel {
        paths: paths.to_vec(),
        tx_elements: tx,
        rx_elements: rx,
        matrix,
    })
}

/// Parameters of the Rician channel generator.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSimConfig {
    pub tx_elements: usize,
    pub rx_elements: usize,
    /// Total number of paths including the line-of-sight one.
    pub num_paths: usize,
    pub los_aod: f64,
    pub los_aoa: f64,
    /// Ratio of LOS power to total NLOS power, in dB.
    pub los_to_nlos_db: f64,
    /// Full width of the window, centered on the LOS angles, from which NLOS
    /// departure and arrival angles are drawn.
    pub angular_spread: f64,
}

impl Default for ChannelSimConfig {
    fn default() -> Self {
        Self {
            tx_elements: 16,
            rx_elements: 16,
            num_paths: 8,
            los_aod: 0.0,
            los_aoa: 0.0,
            los_to_nlos_db: 10.0,
            angular_spread: 14f64.to_radians(),
        }
    }
}

/// Mixes a base seed with a stream index (splitmix64 finalizer), giving
/// per-trial generator seeds that do not depend on evaluation order.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Draws one Rician realization: a unit-gain LOS path plus `L − 1` NLOS paths
/// with circular Gaussian gains whose expected total power is the LOS power
/// divided by the configured ratio.
pub fn sample_rician_channel(
    cfg: &ChannelSimConfig,
    seed: u64,
) -> Result<MultipathChannel, BeamError> {
    if cfg.num_paths < 1 {
        return Err(BeamError::invalid("num_paths", "at least one path is required"));
    }
    if !(cfg.angular_spread >= 0.0) {
        return Err(BeamError::invalid("angular_spread", "must be nonnegative"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut paths = vec![PathSpec::new(
        Complex64::new(1.0, 0.0),
        cfg.los_aod,
        cfg.los_aoa,
    )?];
    let nlos = cfg.num_paths - 1;
    if nlos > 0 {
        let variance = 1.0 / (10f64.powf(cfg.los_to_nlos_db / 10.0) * nlos as f64);
        let sd = (variance / 2.0).sqrt();
        let half = cfg.angular_spread / 2.0;
        let limit = FRAC_PI_2 - 1e-9;
        let window = |center: f64| ((center - half).max(-limit), (center + half).min(limit));
        let (t_lo, t_hi) = window(cfg.los_aod);
        let (r_lo, r_hi) = window(cfg.los_aoa);
        for _ in 0..nlos {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            let aod = uniform(&mut rng, t_lo, t_hi);
            let aoa = uniform(&mut rng, r_lo, r_hi);
            paths.push(PathSpec::new(Complex64::new(re * sd, im * sd), aod, aoa)?);
        }
    }
    build_channel(&paths, cfg.tx_elements, cfg.rx_elements)
}

fn uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.random_range(lo..=hi)
    } else {
        lo
    }
}

fn check_len(expected: usize, found: usize) -> Result<(), BeamError> {
    if expected != found {
        return Err(BeamError::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// Maximal ratio combiner `(H w_t)*`.
pub fn mrc_receive_weights(h: &CMatrix, w_t: &CVector) -> Result<CVector, BeamError> {
    check_len(h.ncols(), w_t.len())?;
    Ok((h * w_t).conjugate())
}

/// `‖H w‖² / ‖w‖²`.
pub fn received_power(h: &CMatrix, w: &CVector) -> Result<f64, BeamError> {
    check_len(h.ncols(), w.len())?;
    let norm = w.norm_squared();
    if norm == 0.0 {
        return Err(BeamError::ZeroVector);
    }
    Ok((h * w).norm_squared() / norm)
}

/// `|a(θ)ᵀ w|² / ‖w‖²`.
pub fn bf_gain(theta: f64, w: &CVector) -> Result<f64, BeamError> {
    let norm = w.norm_squared();
    if norm == 0.0 {
        return Err(BeamError::ZeroVector);
    }
    let a = steering_vector(theta, w.len())?;
    Ok((a.transpose() * w)[0].norm_sqr() / norm)
}

/// Riemann-sum approximation of `∫ a*(θ) a(θ)ᵀ dθ` over a direction range.
#[derive(Debug, Clone, PartialEq)]
pub struct AngularPowerMatrix {
    theta_l: f64,
    theta_r: f64,
    steps: usize,
    matrix: CMatrix,
}

impl AngularPowerMatrix {
    pub fn range(&self) -> (f64, f64) {
        (self.theta_l, self.theta_r)
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// `wᴴ 𝓐 w`, the integrated beam power of `w` over the range.
    pub fn quadratic(&self, w: &CVector) -> f64 {
        w.dotc(&(&self.matrix * w)).re
    }
}

/// Riemann sum over `N_I` steps of width `δ`, sampled at the step
/// midpoints `θ_i = θ_l + (i − ½) δ`, `i = 1..N_I`.
///
/// The matrix is Hermitian Toeplitz, so only one scalar sum per lag is
/// evaluated: entry `(p, q)` is `Σ δ exp(jπ (q − p) sin θ_i)`.
pub fn angular_power_matrix(
    theta_l: f64,
    theta_r: f64,
    n_i: usize,
    m: usize,
) -> Result<AngularPowerMatrix, BeamError> {
    if !(theta_l <= theta_r) {
        return Err(BeamError::InvalidRange {
            lo: theta_l,
            hi: theta_r,
        });
    }
    if n_i == 0 {
        return Err(BeamError::invalid("n_i", "at least one integration step"));
    }
    if m == 0 {
        return Err(BeamError::TooFewElements { min: 1, got: 0 });
    }
    let delta = (theta_r - theta_l) / n_i as f64;
    let sines: Vec<f64> = (0..n_i)
        .map(|i| {
            let t = theta_l + (i as f64 + 0.5) * delta;
            check_angle(t).map(|_| t.sin())
        })
        .collect::<Result<_, _>>()?;
    let lags: Vec<Complex64> = (0..m)
        .map(|k| {
            sines
                .iter()
                .map(|s| Complex64::from_polar(delta, PI * k as f64 * s))
                .sum()
        })
        .collect();
    let matrix = CMatrix::from_fn(m, m, |p, q| {
        if q >= p {
            lags[q - p]
        } else {
            lags[p - q].conj()
        }
    });
    Ok(AngularPowerMatrix {
        theta_l,
        theta_r,
        steps: n_i,
        matrix,
    })
}

/// Complex array factor `a(θ_n)ᵀ w` over a grid.
pub fn pattern(w: &CVector, grid: &[f64]) -> Result<CVector, BeamError> {
    Ok(response_matrix(grid, w.len())? * w)
}

/// Weighted waveform mismatch `‖D(A w − c_s d_v)‖²` at the optimal real
/// scale `c_s = Re{(D d_v)ᴴ D A w} / ‖D d_v‖²`.
///
/// With `D = I` this is `‖A w‖² − Re²{d_vᴴ A w}/‖d_v‖²`. The weight is
/// applied to both terms so the value is always the minimum over `c_s`.
/// When `D d_v` vanishes the scale is zero and the mismatch is `‖D A w‖²`.
pub fn waveform_mse(w: &CVector, desired: &DesiredPattern) -> Result<f64, BeamError> {
    check_len(desired.num_elements(), w.len())?;
    let u = weighted(desired.weights(), &(desired.response() * w));
    Ok(mismatch_given(&u, &desired.weighted_target()))
}

/// Waveform mismatch after replacing the desired phases with those of `A w`,
/// i.e. the best achievable mismatch of `w` against the desired magnitudes.
pub fn magnitude_mismatch(w: &CVector, desired: &DesiredPattern) -> Result<f64, BeamError> {
    check_len(desired.num_elements(), w.len())?;
    let aw = desired.response() * w;
    let target = weighted(
        desired.weights(),
        &CVector::from_fn(aw.len(), |n, _| {
            phase_of(aw[n]) * desired.magnitudes()[n]
        }),
    );
    Ok(mismatch_given(&weighted(desired.weights(), &aw), &target))
}

pub(crate) fn phase_of(z: Complex64) -> Complex64 {
    let r = z.norm();
    if r > 0.0 {
        z / r
    } else {
        Complex64::new(1.0, 0.0)
    }
}

pub(crate) fn weighted(d: &DVector<f64>, v: &CVector) -> CVector {
    CVector::from_fn(v.len(), |n, _| v[n] * d[n])
}

fn mismatch_given(u: &CVector, v: &CVector) -> f64 {
    let vv = v.norm_squared();
    let c = if vv > 0.0 { v.dotc(u).re / vv } else { 0.0 };
    (u - v * Complex64::new(c, 0.0)).norm_squared()
}

/// Real scale `c_s` minimizing the weighted mismatch of `w`.
pub fn optimal_scale(w: &CVector, desired: &DesiredPattern) -> Result<f64, BeamError> {
    check_len(desired.num_elements(), w.len())?;
    let u = weighted(desired.weights(), &(desired.response() * w));
    let v = desired.weighted_target();
    let vv = v.norm_squared();
    Ok(if vv > 0.0 { v.dotc(&u).re / vv } else { 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_6;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn close(a: &CVector, b: &[Complex64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).norm() < tol)
    }

    #[test]
    fn steering_examples() {
        assert!(close(&steering_vector(0.0, 4).unwrap(), &[c(1.0, 0.0); 4], 1e-15));
        assert!(close(
            &steering_vector(FRAC_PI_2, 2).unwrap(),
            &[c(1.0, 0.0), c(-1.0, 0.0)],
            1e-15
        ));
        assert!(close(
            &steering_vector(FRAC_PI_6, 3).unwrap(),
            &[c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0)],
            1e-15
        ));
    }

    #[test]
    fn steering_rejects_bad_input() {
        assert!(steering_vector(0.0, 0).is_err());
        assert!(steering_vector(1.6, 4).is_err());
        assert!(ArrayConfig::new(1).is_err());
    }

    #[test]
    fn channel_examples() {
        let p = PathSpec::new(c(1.0, 0.0), 0.0, 0.0).unwrap();
        let ch = build_channel(&[p], 2, 2).unwrap();
        assert!(ch.matrix().iter().all(|z| (z - c(1.0, 0.0)).norm() < 1e-15));
        let empty = build_channel(&[], 3, 3).unwrap();
        assert_eq!(empty.matrix(), &CMatrix::zeros(3, 3));
        assert!(PathSpec::new(c(1.0, 0.0), FRAC_PI_2, 0.0).is_err());
    }

    #[test]
    fn channel_matches_elementwise_sum() {
        let paths = [
            PathSpec::new(c(0.3, -0.7), 0.4, -0.2).unwrap(),
            PathSpec::new(c(-1.1, 0.2), -0.9, 1.1).unwrap(),
        ];
        let ch = build_channel(&paths, 5, 3).unwrap();
        for r in 0..3 {
            for t in 0..5 {
                let direct: Complex64 = paths
                    .iter()
                    .map(|p| {
                        p.gain
                            * Complex64::from_polar(
                                1.0,
                                PI * (r as f64 * p.aoa.sin() + t as f64 * p.aod.sin()),
                            )
                    })
                    .sum();
                assert!((ch.matrix()[(r, t)] - direct).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn rician_single_path_is_los() {
        let cfg = ChannelSimConfig {
            num_paths: 1,
            ..Default::default()
        };
        let ch = sample_rician_channel(&cfg, 1).unwrap();
        assert_eq!(ch.paths().len(), 1);
        assert_eq!(ch.paths()[0].gain, c(1.0, 0.0));
        let bad = ChannelSimConfig {
            num_paths: 0,
            ..Default::default()
        };
        assert!(sample_rician_channel(&bad, 1).is_err());
    }

    #[test]
    fn rician_is_deterministic_and_windowed() {
        let cfg = ChannelSimConfig::default();
        let a = sample_rician_channel(&cfg, 99).unwrap();
        let b = sample_rician_channel(&cfg, 99).unwrap();
        assert_eq!(a, b);
        let half = cfg.angular_spread / 2.0;
        for p in &a.paths()[1..] {
            assert!(p.aod.abs() <= half && p.aoa.abs() <= half);
        }
    }

    #[test]
    fn rician_power_ratio() {
        let cfg = ChannelSimConfig::default();
        let n = 10_000;
        let total: f64 = (0..n)
            .map(|s| {
                let ch = sample_rician_channel(&cfg, derive_seed(7, s)).unwrap();
                ch.paths()[1..].iter().map(|p| p.gain.norm_sqr()).sum::<f64>()
            })
            .sum();
        let mean = total / n as f64;
        assert!((mean - 0.1).abs() < 0.003, "mean NLOS power {mean}");
    }

    #[test]
    fn mrc_examples() {
        let w = CVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]);
        let out = mrc_receive_weights(&CMatrix::identity(2, 2), &w).unwrap();
        assert!(close(&out, &[c(1.0, 0.0), c(0.0, 0.0)], 1e-15));
        let h = CMatrix::identity(2, 2) * c(0.0, 1.0);
        let ones = CVector::from_element(2, c(1.0, 0.0));
        let out = mrc_receive_weights(&h, &ones).unwrap();
        assert!(close(&out, &[c(0.0, -1.0), c(0.0, -1.0)], 1e-15));
        assert!(mrc_receive_weights(&h, &CVector::zeros(3)).is_err());
    }

    #[test]
    fn received_power_examples() {
        let w = CVector::from_vec(vec![c(0.6, 0.0), c(0.0, 0.8)]);
        assert!((received_power(&CMatrix::identity(2, 2), &w).unwrap() - 1.0).abs() < 1e-15);
        let p = PathSpec::new(c(1.0, 0.0), 0.3, -0.1).unwrap();
        let ch = build_channel(&[p], 2, 2).unwrap();
        let w = steering_vector(0.3, 2).unwrap().conjugate() / Complex64::new(2f64.sqrt(), 0.0);
        assert!((received_power(ch.matrix(), &w).unwrap() - 4.0).abs() < 1e-12);
        assert_eq!(
            received_power(ch.matrix(), &CVector::zeros(2)),
            Err(BeamError::ZeroVector)
        );
    }

    #[test]
    fn bf_gain_examples() {
        let w = CVector::from_element(16, c(0.25, 0.0));
        assert!((bf_gain(0.0, &w).unwrap() - 16.0).abs() < 1e-12);
        let w = CVector::from_vec(vec![c(1.0, 0.0), c(-1.0, 0.0)]);
        assert!(bf_gain(0.0, &w).unwrap() < 1e-30);
    }

    #[test]
    fn angular_matrix_examples() {
        let z = angular_power_matrix(0.2, 0.2, 16, 4).unwrap();
        assert_eq!(z.matrix(), &CMatrix::zeros(4, 4));
        let apm = angular_power_matrix(-0.3, 0.5, 16, 6).unwrap();
        for i in 0..6 {
            assert!((apm.matrix()[(i, i)].re - 0.8).abs() < 1e-12);
            assert!(apm.matrix()[(i, i)].im.abs() < 1e-12);
        }
        assert!(angular_power_matrix(0.5, 0.1, 16, 4).is_err());
    }

    #[test]
    fn angular_matrix_matches_direct_sum() {
        let (lo, hi, n) = (-0.2, 0.35, 7);
        let apm = angular_power_matrix(lo, hi, n, 5).unwrap();
        let delta = (hi - lo) / n as f64;
        let mut direct = CMatrix::zeros(5, 5);
        for i in 0..n {
            let a = steering_vector(lo + (i as f64 + 0.5) * delta, 5).unwrap();
            direct += a.conjugate() * a.transpose() * Complex64::new(delta, 0.0);
        }
        assert!((apm.matrix() - direct).camax() < 1e-13);
    }

    #[test]
    fn pattern_examples() {
        let mut e1 = CVector::zeros(5);
        e1[0] = c(1.0, 0.0);
        let grid = [-1.0, -0.2, 0.0, 0.7];
        assert!(close(&pattern(&e1, &grid).unwrap(), &[c(1.0, 0.0); 4], 1e-15));
        let ones = CVector::from_element(5, c(1.0, 0.0));
        assert!(close(&pattern(&ones, &[0.0]).unwrap(), &[c(5.0, 0.0)], 1e-12));
        assert_eq!(pattern(&ones, &[]), Err(BeamError::EmptyGrid));
    }

    fn random_cvec(seed: u64, n: usize) -> CVector {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        CVector::from_fn(n, |_, _| {
            c(
                StandardNormal.sample(&mut rng),
                StandardNormal.sample(&mut rng),
            )
        })
    }

    #[test]
    fn pattern_matches_per_angle_gain() {
        let w = random_cvec(4, 6);
        let grid: Vec<f64> = (0..9).map(|i| -1.2 + 0.3 * i as f64).collect();
        let p = pattern(&w, &grid).unwrap();
        for (n, &t) in grid.iter().enumerate() {
            let g = bf_gain(t, &w).unwrap() * w.norm_squared();
            assert!((p[n].norm_sqr() - g).abs() < 1e-10 * (1.0 + g));
        }
    }

    proptest! {
        #[test]
        fn steering_has_unit_modulus(theta in -FRAC_PI_2..FRAC_PI_2, m in 1usize..64) {
            let a = steering_vector(theta, m).unwrap();
            for z in a.iter() {
                prop_assert!((z.norm() - 1.0).abs() < 1e-15);
            }
        }

        #[test]
        fn received_power_is_scale_invariant(seed in any::<u64>(), re in -3.0f64..3.0, im in -3.0f64..3.0) {
            prop_assume!(re.abs() + im.abs() > 1e-3);
            let cfg = ChannelSimConfig { tx_elements: 6, rx_elements: 4, ..Default::default() };
            let h = sample_rician_channel(&cfg, seed).unwrap();
            let w = random_cvec(seed, 6);
            let p1 = received_power(h.matrix(), &w).unwrap();
            let p2 = received_power(h.matrix(), &(&w * c(re, im))).unwrap();
            prop_assert!((p1 - p2).abs() <= 1e-10 * p1);
        }

        #[test]
        fn mrc_bounds_any_unit_combiner(seed in any::<u64>()) {
            let cfg = ChannelSimConfig { tx_elements: 5, rx_elements: 4, ..Default::default() };
            let h = sample_rician_channel(&cfg, seed).unwrap();
            let w = random_cvec(seed ^ 1, 5);
            let y = h.matrix() * &w;
            let bound = y.norm_squared();
            let mrc = mrc_receive_weights(h.matrix(), &w).unwrap();
            let mrc_out = (mrc.transpose() * &y)[0].norm_sqr() / mrc.norm_squared();
            prop_assert!((mrc_out - bound).abs() <= 1e-10 * bound);
            for k in 0..20 {
                let u = random_cvec(seed.wrapping_add(k + 2), 4);
                let u = &u / Complex64::new(u.norm(), 0.0);
                prop_assert!((u.transpose() * &y)[0].norm_sqr() <= bound * (1.0 + 1e-12));
            }
        }

        #[test]
        fn angular_matrix_is_hermitian_toeplitz_psd(
            lo in -1.2f64..1.0, width in 0.0f64..0.5, n in 1usize..40, m in 1usize..12
        ) {
            let apm = angular_power_matrix(lo, lo + width, n, m).unwrap();
            let a = apm.matrix();
            prop_assert!((a - a.adjoint()).camax() < 1e-14);
            for p in 1..m {
                for q in 1..m {
                    prop_assert!((a[(p, q)] - a[(p - 1, q - 1)]).norm() < 1e-14);
                }
            }
            let eig = a.clone().symmetric_eigenvalues();
            prop_assert!(eig.min() >= -1e-10);
            for i in 0..m {
                prop_assert!((a[(i, i)].re - width).abs() < 1e-12);
            }
        }
    }
}
