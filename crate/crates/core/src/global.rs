//! Semidefinite-relaxation optimizers for the full transmit weight vector.
//!
//! Complex quadratic forms `wᴴ Q w` are rewritten over the real embedding
//! `w̃ = [Re w; Im w]`, lifted to `W = w̃ w̃ᵀ` and relaxed to a unit-trace PSD
//! program. The waveform term depends on the desired phases, so the program is
//! re-solved inside an alternating loop that updates the phases from the
//! extracted weight vector.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use sdp_ipm::{solve_sdp, Relation, SdpProblem, SdpStatus, Sense, SolverOptions};

use crate::array::{derive_seed, magnitude_mismatch, steering_vector, waveform_mse, AngularPowerMatrix};
use crate::subbeam::DesiredPattern;
use crate::{BeamError, CMatrix, CVector};
use num_complex::Complex64;

/// `[[Re X, −Im X], [Im X, Re X]]`.
pub fn embed_matrix(x: &CMatrix) -> DMatrix<f64> {
    let (r, c) = x.shape();
    DMatrix::from_fn(2 * r, 2 * c, |i, j| {
        let z = x[(i % r, j % c)];
        match (i < r, j < c) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    })
}

/// `[Re v; Im v]`.
pub fn embed_vector(v: &CVector) -> DVector<f64> {
    let n = v.len();
    DVector::from_fn(2 * n, |i, _| if i < n { v[i].re } else { v[i - n].im })
}

/// Inverse of [`embed_vector`], scaled to unit norm.
pub fn real_to_complex(w: &DVector<f64>) -> Result<CVector, BeamError> {
    if !w.len().is_multiple_of(2) || w.is_empty() {
        return Err(BeamError::invalid("w", "real vector must have even, nonzero length"));
    }
    let norm = w.norm();
    if !(norm > 0.0) {
        return Err(BeamError::ZeroVector);
    }
    let m = w.len() / 2;
    Ok(CVector::from_fn(m, |i, _| Complex64::new(w[i], w[i + m]) / norm))
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// Real form of `‖H w‖²`.
pub fn power_quadratic(h: &CMatrix) -> DMatrix<f64> {
    symmetrize(embed_matrix(&(h.adjoint() * h)))
}

/// Real form of `|a(θ)ᵀ w|²`; PSD of rank at most two.
pub fn gain_quadratic(theta: f64, m: usize) -> Result<DMatrix<f64>, BeamError> {
    let a = steering_vector(theta, m)?;
    let row = embed_matrix(&CMatrix::from_row_slice(1, m, a.as_slice()));
    Ok(symmetrize(row.transpose() * row))
}

/// Real form of `wᴴ 𝓐 w`.
pub fn angular_quadratic(apm: &AngularPowerMatrix) -> DMatrix<f64> {
    symmetrize(embed_matrix(apm.matrix()))
}

/// Real form of the waveform mismatch
/// `‖D A w‖² − Re²{d_vᴴ Dᴴ D A w} / ‖D d_v‖²` for the current desired phases.
pub fn waveform_quadratic(desired: &DesiredPattern) -> Result<DMatrix<f64>, BeamError> {
    let d = desired.weights();
    let a = desired.response();
    let da = CMatrix::from_fn(a.nrows(), a.ncols(), |n, k| a[(n, k)] * d[n]);
    let v = embed_vector(&desired.weighted_target());
    let vv = v.norm_squared();
    if !(vv > 0.0) {
        return Err(BeamError::invalid("desired", "weighted desired pattern is zero"));
    }
    let u = embed_matrix(&da);
    let utv = u.transpose() * &v;
    Ok(symmetrize(u.transpose() * &u - &utv * utv.transpose() / vv))
}

/// The four relaxed programs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GlobalKind {
    /// Maximize received power subject to a waveform bound.
    P5,
    /// Minimize waveform mismatch subject to a received-power floor.
    P6,
    /// Maximize gain toward the first sensing direction.
    P7,
    /// Maximize integrated power over the scan range.
    P8,
}

impl GlobalKind {
    pub const ALL: [GlobalKind; 4] = [GlobalKind::P5, GlobalKind::P6, GlobalKind::P7, GlobalKind::P8];

    fn has_waveform_bound(self) -> bool {
        self != GlobalKind::P6
    }

    fn uses_rx_floor(self) -> bool {
        self != GlobalKind::P5
    }
}

/// Problem data. Optional constraints are included only when set.
#[derive(Debug, Clone)]
pub struct GlobalInputs {
    pub h: CMatrix,
    /// Desired magnitudes and weighting; its phases seed the outer loop.
    pub desired: DesiredPattern,
    /// Sensing directions; the first is the objective direction of P7.
    pub sensing_directions: Vec<f64>,
    /// Scan range; the objective of P8.
    pub scan: Option<AngularPowerMatrix>,
    /// Requested waveform bound `ε_w`. `None` omits the constraint.
    pub waveform_bound: Option<f64>,
    /// Received-power floor `C_p P_c`, used by P6, P7 and P8.
    pub rx_floor: Option<f64>,
    /// Optional gain floors `ε_s`, one per sensing direction.
    pub gain_floors: Option<Vec<f64>>,
    /// Optional scan-power floor `ε_p`.
    pub scan_floor: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintTag {
    Waveform,
    RxPower,
    Gain(usize),
    ScanPower,
}

/// A relaxed program together with the meaning of each constraint row.
#[derive(Debug, Clone)]
pub struct BuiltSdp {
    pub problem: SdpProblem,
    pub tags: Vec<ConstraintTag>,
}

fn check_inputs(kind: GlobalKind, inputs: &GlobalInputs) -> Result<usize, BeamError> {
    let m = inputs.desired.num_elements();
    if inputs.h.ncols() != m {
        return Err(BeamError::DimensionMismatch {
            expected: m,
            found: inputs.h.ncols(),
        });
    }
    if kind == GlobalKind::P7 && inputs.sensing_directions.is_empty() {
        return Err(BeamError::invalid("sensing_directions", "P7 needs a sensing direction"));
    }
    if (kind == GlobalKind::P8 || inputs.scan_floor.is_some()) && inputs.scan.is_none() {
        return Err(BeamError::invalid("scan", "a scan range is required"));
    }
    if let Some(scan) = &inputs.scan {
        if scan.matrix().ncols() != m {
            return Err(BeamError::DimensionMismatch {
                expected: m,
                found: scan.matrix().ncols(),
            });
        }
    }
    if let Some(g) = &inputs.gain_floors {
        if g.len() != inputs.sensing_directions.len() {
            return Err(BeamError::invalid("gain_floors", "need one floor per sensing direction"));
        }
    }
    Ok(m)
}

/// Adds every configured constraint except the waveform bound.
fn add_side_constraints(
    kind: GlobalKind,
    inputs: &GlobalInputs,
    problem: &mut SdpProblem,
    tags: &mut Vec<ConstraintTag>,
) -> Result<(), BeamError> {
    let m = inputs.desired.num_elements();
    if kind.uses_rx_floor() {
        if let Some(floor) = inputs.rx_floor {
            problem.add_constraint(power_quadratic(&inputs.h), Relation::GreaterEqual, floor)?;
            tags.push(ConstraintTag::RxPower);
        }
    }
    if let Some(floors) = &inputs.gain_floors {
        for (i, (&theta, &eps)) in inputs.sensing_directions.iter().zip(floors).enumerate() {
            problem.add_constraint(gain_quadratic(theta, m)?, Relation::GreaterEqual, eps)?;
            tags.push(ConstraintTag::Gain(i));
        }
    }
    if let (Some(eps), Some(scan)) = (inputs.scan_floor, &inputs.scan) {
        problem.add_constraint(angular_quadratic(scan), Relation::GreaterEqual, eps)?;
        tags.push(ConstraintTag::ScanPower);
    }
    Ok(())
}

/// Builds the relaxed program of `kind` for the desired phases carried by
/// `desired`, with waveform bound `waveform_bound` where the kind has one.
pub fn build_sdp(
    kind: GlobalKind,
    inputs: &GlobalInputs,
    desired: &DesiredPattern,
    waveform_bound: Option<f64>,
) -> Result<BuiltSdp, BeamError> {
    let m = check_inputs(kind, inputs)?;
    let a_hat = waveform_quadratic(desired)?;
    let mut problem = match kind {
        GlobalKind::P5 => SdpProblem::new(power_quadratic(&inputs.h), Sense::Maximize)?,
        GlobalKind::P6 => SdpProblem::new(a_hat.clone(), Sense::Minimize)?,
        GlobalKind::P7 => {
            SdpProblem::new(gain_quadratic(inputs.sensing_directions[0], m)?, Sense::Maximize)?
        }
        GlobalKind::P8 => SdpProblem::new(
            angular_quadratic(inputs.scan.as_ref().expect("checked")),
            Sense::Maximize,
        )?,
    };
    let mut tags = Vec::new();
    if kind.has_waveform_bound() {
        if let Some(eps) = waveform_bound {
            problem.add_constraint(a_hat, Relation::LessEqual, eps)?;
            tags.push(ConstraintTag::Waveform);
        }
    }
    add_side_constraints(kind, inputs, &mut problem, &mut tags)?;
    Ok(BuiltSdp { problem, tags })
}

/// Leading eigenpair of a relaxed solution.
#[derive(Debug, Clone)]
pub struct Rank1 {
    /// `√λ₁ q₁`.
    pub w: DVector<f64>,
    /// `λ₂ / λ₁`.
    pub rank_ratio: f64,
    /// Set when `λ₁ − λ₂ ≤ 1e−9 λ₁`, so `q₁` is not determined.
    pub ambiguous: bool,
}

pub fn extract_rank1(w: &DMatrix<f64>) -> Result<Rank1, BeamError> {
    if w.nrows() != w.ncols() || w.nrows() == 0 {
        return Err(BeamError::invalid("W", "must be a nonempty square matrix"));
    }
    let eig = SymmetricEigen::new(symmetrize(w.clone()));
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let l1 = eig.eigenvalues[order[0]];
    if !(l1 > 0.0) {
        return Err(BeamError::ZeroMatrix);
    }
    let l2 = order.get(1).map_or(0.0, |&i| eig.eigenvalues[i].max(0.0));
    Ok(Rank1 {
        w: eig.eigenvectors.column(order[0]) * l1.sqrt(),
        rank_ratio: l2 / l1,
        ambiguous: l1 - l2 <= 1e-9 * l1,
    })
}

#[derive(Debug, Clone)]
pub struct GlobalOptions {
    /// Hard cap on outer iterations.
    pub max_iterations: usize,
    /// Stop once the phase-optimal waveform mismatch changes by at most
    /// `tol · max(1, |J|)`.
    pub tol: f64,
    pub solver: SolverOptions,
    /// Rank ratio at or above which randomization replaces the eigenvector.
    pub rank_threshold: f64,
    pub randomization_samples: usize,
    pub seed: u64,
    /// Relative headroom kept above the smallest attainable waveform value
    /// when the requested bound is tighter than that.
    pub floor_margin: f64,
}

impl Default for GlobalOptions {
    fn default() -> Self {
        Self {
            max_iterations: 5,
            tol: 1e-6,
            solver: SolverOptions::default(),
            rank_threshold: 1e-6,
            randomization_samples: 500,
            seed: 0,
            floor_margin: 1e-2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GlobalStatus {
    Optimal,
    /// The program of outer iteration `iteration` (1-based) was infeasible;
    /// the returned weights come from the previous iteration.
    Infeasible { iteration: usize },
    NumericalFailure { iteration: usize },
}

#[derive(Debug, Clone)]
pub struct GlobalSolution {
    /// Unit-norm transmit weights.
    pub w: CVector,
    /// Objective of the kind evaluated at `w`.
    pub objective_value: f64,
    /// Optimal value of the last relaxed program.
    pub sdp_objective: f64,
    /// `‖H w‖²`.
    pub rx_power: f64,
    /// `λ₂ / λ₁` of each relaxed solution.
    pub rank_ratios: Vec<f64>,
    /// Whether each iteration fell back to randomization.
    pub randomized: Vec<bool>,
    /// Phase-optimal waveform mismatch after each iteration.
    pub mismatch_history: Vec<f64>,
    /// Objective of the kind at the weights of each iteration.
    pub objective_history: Vec<f64>,
    /// Waveform bound used in each iteration, if any.
    pub waveform_bounds: Vec<f64>,
    pub iterations: usize,
    /// First iteration whose mismatch change met the tolerance.
    pub converged_at: Option<usize>,
    /// Slack of `w` against each constraint of the last program.
    pub slacks: Vec<(ConstraintTag, f64)>,
    pub status: GlobalStatus,
    /// Desired pattern of the last program.
    pub desired: DesiredPattern,
}

fn quad(q: &DMatrix<f64>, x: &DVector<f64>) -> f64 {
    x.dot(&(q * x))
}

fn slacks_of(built: &BuiltSdp, x: &DVector<f64>) -> Vec<(ConstraintTag, f64)> {
    built
        .tags
        .iter()
        .zip(built.problem.constraints())
        .map(|(&tag, c)| {
            let v = quad(&c.matrix, x);
            let s = match c.relation {
                Relation::LessEqual => c.bound - v,
                Relation::GreaterEqual => v - c.bound,
            };
            (tag, s)
        })
        .collect()
}

fn feasible(built: &BuiltSdp, x: &DVector<f64>) -> bool {
    built
        .tags
        .iter()
        .zip(built.problem.constraints())
        .zip(slacks_of(built, x))
        .all(|((_, c), (_, s))| s >= -1e-9 * (1.0 + c.bound.abs()))
}

/// Picks a unit vector from a relaxed solution: the leading eigenvector when
/// the solution is numerically rank one, otherwise the best feasible of the
/// eigenvector and Gaussian samples drawn with `W` as covariance.
fn round_solution(
    built: &BuiltSdp,
    w: &DMatrix<f64>,
    opts: &GlobalOptions,
    iteration: usize,
) -> Result<(DVector<f64>, f64, bool), BeamError> {
    let r1 = extract_rank1(w)?;
    let principal = r1.w.normalize();
    if r1.rank_ratio < opts.rank_threshold {
        return Ok((principal, r1.rank_ratio, false));
    }
    let eig = SymmetricEigen::new(symmetrize(w.clone()));
    let factor = &eig.eigenvectors
        * DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.max(0.0).sqrt()));
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(opts.seed, iteration as u64));
    let c = built.problem.objective();
    let sign = match built.problem.sense() {
        Sense::Maximize => 1.0,
        Sense::Minimize => -1.0,
    };
    let mut best: Option<(f64, DVector<f64>)> = None;
    let mut consider = |x: DVector<f64>| {
        if feasible(built, &x) {
            let v = sign * quad(c, &x);
            if best.as_ref().is_none_or(|(bv, _)| v > *bv) {
                best = Some((v, x));
            }
        }
    };
    consider(principal.clone());
    for _ in 0..opts.randomization_samples {
        let z = DVector::from_fn(w.nrows(), |_, _| StandardNormal.sample(&mut rng));
        let x = &factor * z;
        let n = x.norm();
        if n > 0.0 {
            consider(x / n);
        }
    }
    Ok((
        best.map_or(principal, |(_, x)| x),
        r1.rank_ratio,
        true,
    ))
}

fn solve_checked(
    problem: &SdpProblem,
    opts: &GlobalOptions,
    iteration: usize,
) -> Result<sdp_ipm::SdpSolution, BeamError> {
    let sol = solve_sdp(problem, &opts.solver);
    match sol.status {
        SdpStatus::Optimal => Ok(sol),
        SdpStatus::Infeasible => Err(BeamError::Infeasible { iteration }),
        SdpStatus::NumericalFailure => Err(BeamError::NumericalFailure {
            iteration,
            detail: sol.detail.unwrap_or_default(),
        }),
    }
}

/// Smallest waveform value reachable under the kind's other constraints.
fn waveform_floor(
    kind: GlobalKind,
    inputs: &GlobalInputs,
    a_hat: &DMatrix<f64>,
    opts: &GlobalOptions,
    iteration: usize,
) -> Result<f64, BeamError> {
    let mut problem = SdpProblem::new(a_hat.clone(), Sense::Minimize)?;
    let mut tags = Vec::new();
    add_side_constraints(kind, inputs, &mut problem, &mut tags)?;
    if tags.is_empty() {
        let eig = SymmetricEigen::new(a_hat.clone());
        return Ok(eig.eigenvalues.min().max(0.0));
    }
    Ok(solve_checked(&problem, opts, iteration)?.objective_value.max(0.0))
}

fn kind_objective(kind: GlobalKind, inputs: &GlobalInputs, desired: &DesiredPattern, w: &CVector) -> f64 {
    match kind {
        GlobalKind::P5 => (&inputs.h * w).norm_squared(),
        GlobalKind::P6 => {
            waveform_mse(w, desired).expect("dimensions checked")
        }
        GlobalKind::P7 => {
            let a = steering_vector(inputs.sensing_directions[0], w.len()).expect("checked");
            a.dot(w).norm_sqr()
        }
        GlobalKind::P8 => inputs.scan.as_ref().expect("checked").quadratic(w),
    }
}

/// Alternating relaxation: solve the relaxed program for the current desired
/// phases, extract a weight vector, replace the phases with those of its
/// pattern, and repeat.
///
/// When the requested waveform bound is below what the other constraints
/// allow for the current phases, the bound actually imposed is
/// `(1 + floor_margin) · floor`, so only the other constraints can make an
/// iteration infeasible.
pub fn sdp_ils(
    kind: GlobalKind,
    inputs: &GlobalInputs,
    opts: &GlobalOptions,
) -> Result<GlobalSolution, BeamError> {
    if opts.max_iterations == 0 {
        return Err(BeamError::invalid("max_iterations", "must be at least 1"));
    }
    check_inputs(kind, inputs)?;
    let mut desired = inputs.desired.clone();
    let mut state: Option<GlobalSolution> = None;
    for iteration in 1..=opts.max_iterations {
        let step = (|| -> Result<_, BeamError> {
            let a_hat = waveform_quadratic(&desired)?;
            let bound = match (kind.has_waveform_bound(), inputs.waveform_bound) {
                (true, Some(target)) => {
                    let floor = waveform_floor(kind, inputs, &a_hat, opts, iteration)?;
                    Some(target.max((1.0 + opts.floor_margin) * floor + 1e-9))
                }
                _ => None,
            };
            let built = build_sdp(kind, inputs, &desired, bound)?;
            let sol = solve_checked(&built.problem, opts, iteration)?;
            let (x, ratio, randomized) = round_solution(&built, &sol.w, opts, iteration)?;
            Ok((built, sol, x, ratio, randomized, bound))
        })();
        let (built, sol, x, ratio, randomized, bound) = match step {
            Ok(v) => v,
            Err(e @ (BeamError::Infeasible { .. } | BeamError::NumericalFailure { .. })) => {
                return match state {
                    Some(mut s) => {
                        s.status = match e {
                            BeamError::Infeasible { .. } => GlobalStatus::Infeasible { iteration },
                            _ => GlobalStatus::NumericalFailure { iteration },
                        };
                        Ok(s)
                    }
                    None => Err(e),
                };
            }
            Err(e) => return Err(e),
        };
        let w = real_to_complex(&x)?;
        let mismatch = magnitude_mismatch(&w, &desired)?;
        let objective_value = kind_objective(kind, inputs, &desired, &w);
        let slacks = slacks_of(&built, &x);
        let mut s = state.take().unwrap_or_else(|| GlobalSolution {
            w: w.clone(),
            objective_value,
            sdp_objective: sol.objective_value,
            rx_power: 0.0,
            rank_ratios: Vec::new(),
            randomized: Vec::new(),
            mismatch_history: Vec::new(),
            objective_history: Vec::new(),
            waveform_bounds: Vec::new(),
            iterations: 0,
            converged_at: None,
            slacks: Vec::new(),
            status: GlobalStatus::Optimal,
            desired: desired.clone(),
        });
        let converged = s.mismatch_history.last().is_some_and(|&prev: &f64| {
            (mismatch - prev).abs() <= opts.tol * mismatch.abs().max(1.0)
        });
        s.rx_power = (&inputs.h * &w).norm_squared();
        s.w = w;
        s.objective_value = objective_value;
        s.sdp_objective = sol.objective_value;
        s.rank_ratios.push(ratio);
        s.randomized.push(randomized);
        s.mismatch_history.push(mismatch);
        s.objective_history.push(objective_value);
        if let Some(b) = bound {
            s.waveform_bounds.push(b);
        }
        s.iterations = iteration;
        s.slacks = slacks;
        s.desired = desired.clone();
        if converged {
            s.converged_at = Some(iteration);
            return Ok(s);
        }
        desired = desired.with_phases(desired.phases_of(&s.w))?;
        state = Some(s);
    }
    Ok(state.expect("at least one iteration ran"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::{angular_power_matrix, build_channel, waveform_mse, PathSpec};
    use crate::subbeam::{conventional_beam, desired_multibeam, ils_synthesize, steer, uniform_grid};
    use proptest::prelude::*;
    use rand::Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_cmat(rng: &mut impl Rng, r: usize, k: usize) -> CMatrix {
        CMatrix::from_fn(r, k, |_, _| {
            c(StandardNormal.sample(rng), StandardNormal.sample(rng))
        })
    }

    fn random_unit(rng: &mut impl Rng, m: usize) -> CVector {
        let w = CVector::from_fn(m, |_, _| c(StandardNormal.sample(rng), StandardNormal.sample(rng)));
        w.unscale(w.norm())
    }

    fn los_inputs(m: usize) -> GlobalInputs {
        let h = build_channel(&[PathSpec::new(c(1.0, 0.0), 0.0, 0.0).unwrap()], m, m)
            .unwrap()
            .matrix()
            .clone();
        let wc = conventional_beam(m, m, 0.0).unwrap();
        let desired =
            desired_multibeam(&wc, &CVector::zeros(m), 1.0, &uniform_grid(91), None).unwrap();
        GlobalInputs {
            h,
            desired,
            sensing_directions: vec![0.3],
            scan: Some(angular_power_matrix(0.25, 0.35, 16, m).unwrap()),
            waveform_bound: None,
            rx_floor: None,
            gain_floors: None,
            scan_floor: None,
        }
    }

    #[test]
    fn embedding_examples() {
        let w = CVector::from_vec(vec![c(1.0, 1.0)]);
        assert_eq!(embed_vector(&w).as_slice(), &[1.0, 1.0]);
        let a = CMatrix::from_element(1, 1, c(0.0, 1.0));
        assert_eq!(embed_matrix(&a), DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]));
        let back = real_to_complex(&DVector::from_vec(vec![1.0, 0.0])).unwrap();
        assert_eq!(back[0], c(1.0, 0.0));
        let back = real_to_complex(&DVector::from_vec(vec![1.0, 1.0]).unscale(2f64.sqrt())).unwrap();
        assert!((back[0] - c(1.0, 1.0) / 2f64.sqrt()).norm() < 1e-15);
        assert!(real_to_complex(&DVector::zeros(4)).is_err());
        assert!(real_to_complex(&DVector::zeros(3)).is_err());
    }

    #[test]
    fn embedding_is_an_isometry_and_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let w = random_unit(&mut rng, 7) * c(2.5, 0.0);
            let e = embed_vector(&w);
            assert!((e.norm() - w.norm()).abs() < 1e-12);
            let back = real_to_complex(&e).unwrap();
            assert!((back.dotc(&w).norm() - w.norm()).abs() < 1e-12);
            let h = random_cmat(&mut rng, 5, 7);
            assert!((embed_matrix(&h) * &e - embed_vector(&(&h * &w))).amax() < 1e-12);
        }
    }

    #[test]
    fn waveform_quadratic_vanishes_on_matched_weights() {
        let m = 8;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w0 = random_unit(&mut rng, m);
        let grid = uniform_grid(61);
        let d = desired_multibeam(&w0, &CVector::zeros(m), 1.0, &grid, None).unwrap();
        let d = d.with_phases(d.phases_of(&w0)).unwrap();
        let q = waveform_quadratic(&d).unwrap();
        let x = embed_vector(&(w0.clone() * c(0.3, 0.0)));
        assert!(quad(&q, &x).abs() < 1e-12);
        let eig = SymmetricEigen::new(q.clone()).eigenvalues;
        assert!(eig.min() >= -1e-10 * eig.max());
        let zero = d.with_phases(CVector::from_element(61, c(1.0, 0.0))).unwrap();
        assert!(waveform_quadratic(&zero).is_ok());
    }

    #[test]
    fn waveform_quadratic_rejects_zero_target() {
        let m = 4;
        let d = desired_multibeam(&CVector::zeros(m), &CVector::zeros(m), 0.5, &uniform_grid(11), None)
            .unwrap();
        assert!(waveform_quadratic(&d).is_err());
    }

    #[test]
    fn unconstrained_p5_finds_dominant_singular_direction() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut inputs = los_inputs(6);
        inputs.h = random_cmat(&mut rng, 6, 6);
        let built = build_sdp(GlobalKind::P5, &inputs, &inputs.desired, None).unwrap();
        assert!(built.tags.is_empty());
        let sol = solve_sdp(&built.problem, &SolverOptions::default());
        assert_eq!(sol.status, SdpStatus::Optimal);
        let w = real_to_complex(&extract_rank1(&sol.w).unwrap().w).unwrap();
        let svd = inputs.h.clone().svd(false, true);
        let top = (0..6).max_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j])).unwrap();
        let v = svd.v_t.unwrap().row(top).adjoint();
        let cos = v.dotc(&w).norm().min(1.0);
        assert!(cos.acos() < 1e-4, "angle {}", cos.acos());
    }

    #[test]
    fn p6_without_power_floor_lower_bounds_ils() {
        let m = 8;
        let wc = conventional_beam(8, m, 0.0).unwrap();
        let ws = steer(&conventional_beam(6, m, 0.0).unwrap(), 0.5);
        let d = desired_multibeam(&wc, &ws, 0.5, &uniform_grid(91), None).unwrap();
        let ils = ils_synthesize(&d, 30).unwrap();
        let mut inputs = los_inputs(m);
        inputs.desired = d;
        inputs.rx_floor = Some(0.0);
        let built = build_sdp(GlobalKind::P6, &inputs, &ils.desired, None).unwrap();
        let sol = solve_sdp(&built.problem, &SolverOptions::default());
        assert_eq!(sol.status, SdpStatus::Optimal);
        let ils_mse = waveform_mse(&ils.w, &ils.desired).unwrap();
        // Solver accuracy is relative to the scale of the objective matrix.
        let tol = 1e-8 * built.problem.objective().norm();
        assert!(sol.objective_value <= ils_mse + tol, "{} > {ils_mse}", sol.objective_value);
    }

    #[test]
    fn gain_quadratic_has_rank_at_most_two() {
        let q = gain_quadratic(0.4, 8).unwrap();
        assert_eq!(q, q.transpose());
        let mut eig: Vec<f64> = SymmetricEigen::new(q).eigenvalues.iter().cloned().collect();
        eig.sort_by(|a, b| b.total_cmp(a));
        assert!(eig[2].abs() < 1e-12 && eig.iter().all(|&l| l > -1e-12));
        assert!((eig[0] - 8.0).abs() < 1e-12);
    }

    #[test]
    fn build_sdp_checks_kind_inputs() {
        let mut inputs = los_inputs(4);
        inputs.sensing_directions.clear();
        assert!(build_sdp(GlobalKind::P7, &inputs, &inputs.desired, None).is_err());
        let mut inputs = los_inputs(4);
        inputs.scan = None;
        assert!(build_sdp(GlobalKind::P8, &inputs, &inputs.desired, None).is_err());
        let mut inputs = los_inputs(4);
        inputs.gain_floors = Some(vec![1.0, 2.0]);
        assert!(build_sdp(GlobalKind::P5, &inputs, &inputs.desired, None).is_err());
        let mut inputs = los_inputs(4);
        inputs.h = CMatrix::zeros(4, 5);
        assert!(build_sdp(GlobalKind::P5, &inputs, &inputs.desired, None).is_err());
    }

    #[test]
    fn build_sdp_constraint_sets() {
        let mut inputs = los_inputs(4);
        inputs.rx_floor = Some(1.0);
        inputs.gain_floors = Some(vec![0.5]);
        inputs.scan_floor = Some(0.01);
        let tags = |k| build_sdp(k, &inputs, &inputs.desired, Some(2.0)).unwrap().tags;
        use ConstraintTag::*;
        assert_eq!(tags(GlobalKind::P5), vec![Waveform, Gain(0), ScanPower]);
        assert_eq!(tags(GlobalKind::P6), vec![RxPower, Gain(0), ScanPower]);
        assert_eq!(tags(GlobalKind::P7), vec![Waveform, RxPower, Gain(0), ScanPower]);
        assert_eq!(tags(GlobalKind::P8), vec![Waveform, RxPower, Gain(0), ScanPower]);
    }

    #[test]
    fn rank1_extraction_examples() {
        let v = DVector::from_vec(vec![0.6, -0.8, 0.0]);
        let r = extract_rank1(&(&v * v.transpose())).unwrap();
        assert!((&r.w - &v).amax() < 1e-12 || (&r.w + &v).amax() < 1e-12);
        assert!(r.rank_ratio < 1e-12 && !r.ambiguous);
        let mut w = DMatrix::zeros(3, 3);
        w[(0, 0)] = 0.5;
        w[(1, 1)] = 0.5;
        let r = extract_rank1(&w).unwrap();
        assert!((r.rank_ratio - 1.0).abs() < 1e-12 && r.ambiguous);
        assert!(extract_rank1(&DMatrix::zeros(3, 3)).is_err());
    }

    #[test]
    fn sdp_ils_recovers_matched_beam() {
        let mut inputs = los_inputs(8);
        inputs.waveform_bound = Some(1e6);
        let sol = sdp_ils(GlobalKind::P5, &inputs, &GlobalOptions::default()).unwrap();
        let wc = conventional_beam(8, 8, 0.0).unwrap();
        let cos = wc.dotc(&sol.w).norm().min(1.0);
        assert!(cos.acos() < 1e-2);
        assert!((sol.w.norm() - 1.0).abs() < 1e-10);
        assert!(sol.slacks.iter().all(|&(_, s)| s >= -1e-6));
        assert_eq!(sol.status, GlobalStatus::Optimal);
    }

    #[test]
    fn sdp_ils_respects_constraints_for_every_kind() {
        let m = 8;
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let wc = conventional_beam(8, m, 0.0).unwrap();
        let ws = steer(&conventional_beam(6, m, 0.0).unwrap(), 0.4);
        let mut inputs = los_inputs(m);
        inputs.h = random_cmat(&mut rng, m, m);
        inputs.desired = desired_multibeam(&wc, &ws, 0.5, &uniform_grid(91), None).unwrap();
        inputs.sensing_directions = vec![0.4];
        inputs.scan = Some(angular_power_matrix(0.35, 0.45, 16, m).unwrap());
        let pc = (&inputs.h * &wc).norm_squared();
        inputs.rx_floor = Some(0.7 * pc);
        inputs.waveform_bound = Some(0.5 * magnitude_mismatch(&wc, &inputs.desired).unwrap());
        for kind in GlobalKind::ALL {
            let sol = sdp_ils(kind, &inputs, &GlobalOptions::default()).unwrap();
            assert_eq!(sol.status, GlobalStatus::Optimal, "{kind:?}");
            assert!(sol.slacks.iter().all(|&(_, s)| s >= -1e-6), "{kind:?} {:?}", sol.slacks);
            assert!((sol.w.norm() - 1.0).abs() < 1e-10);
            if kind != GlobalKind::P5 {
                assert!(sol.rx_power >= 0.7 * pc * (1.0 - 1e-6));
            }
            assert_eq!(sol.rank_ratios.len(), sol.iterations);
            if sol.rank_ratios.last().is_some_and(|&r| r < 1e-8) {
                let rel = (sol.objective_value - sol.sdp_objective).abs() / sol.sdp_objective.abs().max(1e-12);
                assert!(rel < 1e-6, "{kind:?}: {} vs {}", sol.objective_value, sol.sdp_objective);
            }
        }
    }

    #[test]
    fn waveform_bound_is_lifted_to_attainable_floor() {
        let mut inputs = los_inputs(6);
        inputs.waveform_bound = Some(0.0);
        let sol = sdp_ils(GlobalKind::P5, &inputs, &GlobalOptions::default()).unwrap();
        assert_eq!(sol.status, GlobalStatus::Optimal);
        assert!(sol.waveform_bounds.iter().all(|&b| b > 0.0));
    }

    #[test]
    fn randomization_returns_feasible_unit_vector() {
        let mut w = DMatrix::zeros(4, 4);
        w[(0, 0)] = 0.5;
        w[(1, 1)] = 0.5;
        let mut objective = DMatrix::zeros(4, 4);
        objective[(0, 0)] = 1.0;
        let mut con = DMatrix::zeros(4, 4);
        con[(1, 1)] = 1.0;
        let built = BuiltSdp {
            problem: SdpProblem::new(objective, Sense::Maximize)
                .unwrap()
                .with_constraint(con, Relation::GreaterEqual, 0.2)
                .unwrap(),
            tags: vec![ConstraintTag::RxPower],
        };
        let (x, ratio, randomized) = round_solution(&built, &w, &GlobalOptions::default(), 1).unwrap();
        assert!(randomized && (ratio - 1.0).abs() < 1e-12);
        assert!((x.norm() - 1.0).abs() < 1e-12);
        assert!(x[1] * x[1] >= 0.2 - 1e-9);
        assert!(x[0] * x[0] > 0.7);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn real_forms_match_complex_forms(seed in 0u64..10_000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = rng.random_range(2..9);
            let rows = rng.random_range(1..6);
            let h = random_cmat(&mut rng, rows, m);
            let w = random_unit(&mut rng, m) * c(rng.random_range(0.5..2.0), 0.0);
            let x = embed_vector(&w);
            let rel = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1e-12);

            prop_assert!(rel(quad(&power_quadratic(&h), &x), (&h * &w).norm_squared()));

            let theta = rng.random_range(-1.4..1.4);
            let a = steering_vector(theta, m).unwrap();
            prop_assert!(rel(quad(&gain_quadratic(theta, m).unwrap(), &x), a.dot(&w).norm_sqr()));

            let lo = rng.random_range(-1.2..1.0);
            let apm = angular_power_matrix(lo, lo + 0.3, 16, m).unwrap();
            prop_assert!(rel(quad(&angular_quadratic(&apm), &x), apm.quadratic(&w)));

            let w0 = random_unit(&mut rng, m);
            let w1 = random_unit(&mut rng, m);
            let weights: Vec<f64> = (0..41).map(|_| rng.random_range(0.5..2.0)).collect();
            let d = desired_multibeam(&w0, &w1, 0.4, &uniform_grid(41), Some(&weights)).unwrap();
            let d = d.with_phases(d.phases_of(&random_unit(&mut rng, m))).unwrap();
            prop_assert!(rel(quad(&waveform_quadratic(&d).unwrap(), &x), waveform_mse(&w, &d).unwrap()));
        }
    }
}
