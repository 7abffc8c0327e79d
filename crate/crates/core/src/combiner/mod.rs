//! Closed-form optimal combination phases for a subbeam pair.
//!
//! Every quantity optimized or constrained here is a normalized quadratic
//! form of `w_t(φ) = √ρ w_c + √(1 − ρ) e^{jφ} w_s`, which reduces to the
//! one-parameter ratio
//!
//! ```text
//! r(φ) = (n0 + 2P Re{a e^{jφ}}) / (1 + 2P Re{b e^{jφ}}),   b = w_cᴴ w_s,
//! ```
//!
//! with `P = √(ρ(1 − ρ))`. See [`RatioForm`]. Superlevel sets of `r` are
//! single arcs, the full circle, or empty, and `r` has exactly one maximizer
//! per period unless it is constant.

mod cyclic;

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::array::{steering_vector, AngularPowerMatrix};
use crate::subbeam::SubbeamPair;
use crate::{BeamError, CMatrix, CVector};

pub use cyclic::{wrap_angle, CyclicIntervalSet};

const CASE_TOL: f64 = 1e-12;
const DEGENERATE_TOL: f64 = 1e-12;

/// `r(φ) = (n0 + 2P Re{a e^{jφ}}) / (1 + 2P Re{b e^{jφ}})`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioForm {
    pub n0: f64,
    pub a: Complex64,
    pub b: Complex64,
    pub p: f64,
}

/// Maximizer of a [`RatioForm`]. `degenerate` is set when the form is
/// constant in `φ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stationary {
    pub phi: f64,
    pub degenerate: bool,
}

impl RatioForm {
    fn from_parts(pair: &SubbeamPair, qcc: f64, qss: f64, qcs: Complex64) -> Self {
        let rho = pair.rho();
        Self {
            n0: rho * qcc + (1.0 - rho) * qss,
            a: qcs,
            b: pair.w_c().dotc(pair.w_s()),
            p: pair.p(),
        }
    }

    /// Received power `‖H w_t‖² / ‖w_t‖²`.
    pub fn rx_power(pair: &SubbeamPair, h: &CMatrix) -> Result<Self, BeamError> {
        if h.ncols() != pair.num_elements() {
            return Err(BeamError::DimensionMismatch {
                expected: pair.num_elements(),
                found: h.ncols(),
            });
        }
        let uc = h * pair.w_c();
        let us = h * pair.w_s();
        Ok(Self::from_parts(
            pair,
            uc.norm_squared(),
            us.norm_squared(),
            uc.dotc(&us),
        ))
    }

    /// Beamforming gain `|a(θ)ᵀ w_t|² / ‖w_t‖²`.
    pub fn gain(pair: &SubbeamPair, theta: f64) -> Result<Self, BeamError> {
        let a = steering_vector(theta, pair.num_elements())?;
        let gc = a.dot(pair.w_c());
        let gs = a.dot(pair.w_s());
        Ok(Self::from_parts(
            pair,
            gc.norm_sqr(),
            gs.norm_sqr(),
            gc.conj() * gs,
        ))
    }

    /// Integrated beam power `w_tᴴ 𝓐 w_t / ‖w_t‖²` over a direction range.
    pub fn scan_power(pair: &SubbeamPair, apm: &AngularPowerMatrix) -> Result<Self, BeamError> {
        let q = apm.matrix();
        if q.ncols() != pair.num_elements() {
            return Err(BeamError::DimensionMismatch {
                expected: pair.num_elements(),
                found: q.ncols(),
            });
        }
        let qs = q * pair.w_s();
        Ok(Self::from_parts(
            pair,
            apm.quadratic(pair.w_c()),
            pair.w_s().dotc(&qs).re,
            pair.w_c().dotc(&qs),
        ))
    }

    pub fn numerator(&self, phi: f64) -> f64 {
        self.n0 + 2.0 * self.p * (self.a * Complex64::from_polar(1.0, phi)).re
    }

    /// `‖w_t(φ)‖²`.
    pub fn denominator(&self, phi: f64) -> f64 {
        1.0 + 2.0 * self.p * (self.b * Complex64::from_polar(1.0, phi)).re
    }

    pub fn eval(&self, phi: f64) -> f64 {
        self.numerator(phi) / self.denominator(phi)
    }

    /// `{φ : r(φ) ≥ t}`.
    ///
    /// With `B1 = n0/2P` and `B2 = t/2P` the condition becomes
    /// `X1 sin φ + X2 cos φ ≥ B2 − B1`, where `X1 = t·Im b − Im a` and
    /// `X2 = Re a − t·Re b`. Writing the left side as `R sin(φ + σ)` gives the
    /// arc `[μ − σ, π − μ − σ]` with `μ = arcsin((B2 − B1)/R)`, the full
    /// circle when the ratio is below −1, and the empty set above 1.
    pub fn superlevel(&self, t: f64) -> CyclicIntervalSet {
        let x1 = t * self.b.im - self.a.im;
        let x2 = self.a.re - t * self.b.re;
        let rhs = (t - self.n0) / (2.0 * self.p);
        let r = x1.hypot(x2);
        let scale = self.a.norm() + t.abs() * self.b.norm();
        if r <= DEGENERATE_TOL * scale || r == 0.0 {
            return if rhs <= 0.0 {
                CyclicIntervalSet::full()
            } else {
                CyclicIntervalSet::empty()
            };
        }
        let ratio = rhs / r;
        if ratio < -1.0 - CASE_TOL {
            return CyclicIntervalSet::full();
        }
        if ratio > 1.0 + CASE_TOL {
            return CyclicIntervalSet::empty();
        }
        let mu = ratio.clamp(-1.0, 1.0).asin();
        let sigma = x2.atan2(x1);
        CyclicIntervalSet::from_arc(mu - sigma, PI - mu - sigma)
    }

    /// Maximizer of `r` over one period.
    ///
    /// `r′(φ)` has the sign of `X1 sin φ + X2 cos φ − L` with
    /// `X1 = 2P(n0 Re b − Re a)`, `X2 = 2P(n0 Im b − Im a)` and
    /// `L = 4P² Im{a b*}`. With `R sin(φ + σ) = X1 sin φ + X2 cos φ` and
    /// `μ0 = arcsin(L/R)`, `r` increases on `φ + σ ∈ (μ0, π − μ0)` and
    /// decreases on the complement, so the maximum sits at `π − μ0 − σ`.
    ///
    /// A constant form is reported as degenerate; its returned phase then
    /// maximizes the numerator alone (coherent alignment of the two
    /// subbeam contributions), or is zero if that is constant too.
    pub fn maximizer(&self) -> Stationary {
        let two_p = 2.0 * self.p;
        let x1 = two_p * (self.n0 * self.b.re - self.a.re);
        let x2 = two_p * (self.n0 * self.b.im - self.a.im);
        let l = two_p * two_p * (self.a * self.b.conj()).im;
        let r = x1.hypot(x2);
        let scale = two_p * (self.a.norm() + self.n0.abs() * self.b.norm());
        if r <= DEGENERATE_TOL * scale || r == 0.0 {
            let phi = if self.a.norm() > 0.0 {
                wrap_angle(-self.a.arg())
            } else {
                0.0
            };
            return Stationary {
                phi,
                degenerate: true,
            };
        }
        let mu0 = (l / r).clamp(-1.0, 1.0).asin();
        let sigma = x2.atan2(x1);
        Stationary {
            phi: wrap_angle(PI - mu0 - sigma),
            degenerate: false,
        }
    }
}

/// Polar cross terms of a subbeam pair against the problem data.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossTerms {
    /// `w_cᴴ w_s = b1 e^{jβ1}`.
    pub b1: f64,
    pub beta1: f64,
    /// Per direction: `w_cᴴ a*(θ) = b2 e^{jβ2}` and `a(θ)ᵀ w_s = b3 e^{jβ3}`.
    pub directional: Vec<((f64, f64), (f64, f64))>,
    /// `w_cᴴ 𝓐 w_s = b_p e^{jβ_p}`, when a range is given.
    pub power: Option<(f64, f64)>,
    /// `w_cᴴ Hᴴ H w_s = b_g e^{jβ_g}`, when a channel is given.
    pub channel: Option<(f64, f64)>,
}

impl CrossTerms {
    pub fn compute(
        pair: &SubbeamPair,
        h: Option<&CMatrix>,
        thetas: &[f64],
        apm: Option<&AngularPowerMatrix>,
    ) -> Result<Self, BeamError> {
        let (b1, beta1) = pair.w_c().dotc(pair.w_s()).to_polar();
        let directional = thetas
            .iter()
            .map(|&t| {
                let a = steering_vector(t, pair.num_elements())?;
                let c2 = pair.w_c().dotc(&a.conjugate());
                let c3 = a.dot(pair.w_s());
                Ok((c2.to_polar(), c3.to_polar()))
            })
            .collect::<Result<Vec<_>, BeamError>>()?;
        let power = apm
            .map(|apm| RatioForm::scan_power(pair, apm).map(|f| f.a.to_polar()))
            .transpose()?;
        let channel = h
            .map(|h| RatioForm::rx_power(pair, h).map(|f| f.a.to_polar()))
            .transpose()?;
        Ok(Self {
            b1,
            beta1,
            directional,
            power,
            channel,
        })
    }
}

/// Maximizer of the received power `f(φ)`.
pub fn unconstrained_phi_opt(pair: &SubbeamPair, h: &CMatrix) -> Result<Stationary, BeamError> {
    Ok(RatioForm::rx_power(pair, h)?.maximizer())
}

/// Maximizer of the gain toward `θ_s0`.
pub fn phi_smax_gain(pair: &SubbeamPair, theta_s0: f64) -> Result<Stationary, BeamError> {
    Ok(RatioForm::gain(pair, theta_s0)?.maximizer())
}

/// Maximizer of the integrated power over the range of `apm`.
pub fn phi_smax_power(
    pair: &SubbeamPair,
    apm: &AngularPowerMatrix,
) -> Result<Stationary, BeamError> {
    Ok(RatioForm::scan_power(pair, apm)?.maximizer())
}

/// Phase that aligns the two subbeams at `θ`, so they add coherently toward
/// the communication direction without regard to the sensing pattern.
pub fn aligned_phi(pair: &SubbeamPair, theta: f64) -> Result<f64, BeamError> {
    let a = steering_vector(theta, pair.num_elements())?;
    let gc = a.dot(pair.w_c());
    let gs = a.dot(pair.w_s());
    Ok(wrap_angle(gc.arg() - gs.arg()))
}

fn check_fraction(name: &'static str, v: f64) -> Result<(), BeamError> {
    if !(0.0..=1.0).contains(&v) {
        return Err(BeamError::invalid(name, format!("must lie in [0, 1], got {v}")));
    }
    Ok(())
}

fn gain_forms(pair: &SubbeamPair, thetas: &[f64]) -> Result<Vec<RatioForm>, BeamError> {
    thetas.iter().map(|&t| RatioForm::gain(pair, t)).collect()
}

fn gain_threshold(pair: &SubbeamPair, c: f64) -> f64 {
    c * c * (1.0 - pair.rho()) * pair.num_elements() as f64
}

fn gain_set(pair: &SubbeamPair, forms: &[RatioForm], cs: &[f64]) -> CyclicIntervalSet {
    forms
        .iter()
        .zip(cs)
        .fold(CyclicIntervalSet::full(), |acc, (f, &c)| {
            acc.intersect(&f.superlevel(gain_threshold(pair, c)))
        })
}

/// `∩ᵢ {φ : gain(θ_i) ≥ C_i² (1 − ρ) M}`.
pub fn feasible_set_gain(
    pair: &SubbeamPair,
    thetas: &[f64],
    cs: &[f64],
) -> Result<CyclicIntervalSet, BeamError> {
    if thetas.is_empty() || thetas.len() != cs.len() {
        return Err(BeamError::invalid(
            "thetas",
            "need one threshold per direction and at least one direction",
        ));
    }
    for &c in cs {
        check_fraction("c_s", c)?;
    }
    Ok(gain_set(pair, &gain_forms(pair, thetas)?, cs))
}

/// `{φ : scan power ≥ C_sp · w_refᴴ 𝓐 w_ref}` for a unit-norm reference.
pub fn feasible_set_power(
    pair: &SubbeamPair,
    apm: &AngularPowerMatrix,
    c_sp: f64,
    w_ref: &CVector,
) -> Result<CyclicIntervalSet, BeamError> {
    check_fraction("c_sp", c_sp)?;
    let form = RatioForm::scan_power(pair, apm)?;
    Ok(form.superlevel(power_threshold(apm, c_sp, w_ref)?))
}

fn power_threshold(apm: &AngularPowerMatrix, c_sp: f64, w_ref: &CVector) -> Result<f64, BeamError> {
    if w_ref.len() != apm.matrix().ncols() {
        return Err(BeamError::DimensionMismatch {
            expected: apm.matrix().ncols(),
            found: w_ref.len(),
        });
    }
    let n = w_ref.norm();
    if (n - 1.0).abs() > 1e-9 {
        return Err(BeamError::NotUnitNorm(n));
    }
    Ok(c_sp * apm.quadratic(w_ref))
}

/// `{φ : f(φ) ≥ C_p P_c}` with `P_c = ‖H w_c‖²`.
pub fn feasible_set_rxpower(
    pair: &SubbeamPair,
    h: &CMatrix,
    c_p: f64,
) -> Result<CyclicIntervalSet, BeamError> {
    check_fraction("c_p", c_p)?;
    let form = RatioForm::rx_power(pair, h)?;
    Ok(form.superlevel(c_p * (h * pair.w_c()).norm_squared()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CombinerStatus {
    InteriorOptimum,
    BoundaryOptimum,
    /// Optimal over a feasible set obtained by lowering thresholds.
    Relaxed,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Relaxation {
    /// Thresholds in effect after relaxation.
    pub applied: Vec<f64>,
    pub rounds: usize,
    /// Set when no nonempty feasible set was reached.
    pub exhausted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelaxOptions {
    pub enabled: bool,
    pub decay: f64,
    pub max_rounds: usize,
    /// Indices of constraints lowered only after the others are exhausted,
    /// and only when `relax_prioritized` is set.
    pub prioritized: Vec<usize>,
    pub relax_prioritized: bool,
}

impl Default for RelaxOptions {
    fn default() -> Self {
        Self {
            enabled: true,
            decay: 0.95,
            max_rounds: 50,
            prioritized: Vec::new(),
            relax_prioritized: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CombinerSolution {
    pub phi: f64,
    /// Objective at `phi`, on the objective's natural (normalized) scale.
    pub objective_value: f64,
    pub feasible_set: CyclicIntervalSet,
    pub status: CombinerStatus,
    pub relaxation: Option<Relaxation>,
}

/// Lowers thresholds geometrically until `set_for` becomes nonempty.
fn relax_ladder(
    cs: &[f64],
    opts: &RelaxOptions,
    set_for: impl Fn(&[f64]) -> CyclicIntervalSet,
) -> Result<(CyclicIntervalSet, Relaxation), BeamError> {
    if !(opts.decay > 0.0 && opts.decay < 1.0) {
        return Err(BeamError::invalid("decay", "must lie strictly inside (0, 1)"));
    }
    let mut applied = cs.to_vec();
    let set = set_for(&applied);
    if !set.is_empty() {
        return Ok((
            set,
            Relaxation {
                applied,
                rounds: 0,
                exhausted: false,
            },
        ));
    }
    let is_prioritized = |i: usize| opts.prioritized.contains(&i);
    let mut phases = vec![false];
    if opts.relax_prioritized {
        phases.push(true);
    }
    let mut rounds = 0;
    for include_prioritized in phases {
        if !(0..cs.len()).any(|i| include_prioritized || !is_prioritized(i)) {
            continue;
        }
        for _ in 0..opts.max_rounds {
            rounds += 1;
            for (i, c) in applied.iter_mut().enumerate() {
                if include_prioritized || !is_prioritized(i) {
                    *c *= opts.decay;
                }
            }
            let set = set_for(&applied);
            if !set.is_empty() {
                return Ok((
                    set,
                    Relaxation {
                        applied,
                        rounds,
                        exhausted: false,
                    },
                ));
            }
        }
    }
    Ok((
        CyclicIntervalSet::empty(),
        Relaxation {
            applied,
            rounds,
            exhausted: true,
        },
    ))
}

/// Relaxes the gain thresholds `C_i` of an empty intersection.
pub fn relax_gain_constraints(
    pair: &SubbeamPair,
    thetas: &[f64],
    cs: &[f64],
    opts: &RelaxOptions,
) -> Result<(CyclicIntervalSet, Relaxation), BeamError> {
    feasible_set_gain(pair, thetas, cs)?;
    let forms = gain_forms(pair, thetas)?;
    relax_ladder(cs, opts, |c| gain_set(pair, &forms, c))
}

/// Picks `phi_star` when feasible, otherwise the arc endpoint with the largest
/// objective (first one on ties).
fn select(
    objective: &RatioForm,
    set: &CyclicIntervalSet,
    phi_star: f64,
) -> Option<(f64, CombinerStatus)> {
    if set.is_empty() {
        return None;
    }
    if set.contains(phi_star, 0.0) {
        return Some((phi_star, CombinerStatus::InteriorOptimum));
    }
    let mut best: Option<(f64, f64)> = None;
    for phi in set.endpoints() {
        let v = objective.eval(phi);
        if best.is_none_or(|(_, bv)| v > bv) {
            best = Some((phi, v));
        }
    }
    best.map(|(phi, _)| (phi, CombinerStatus::BoundaryOptimum))
}

fn solve_with(
    objective: &RatioForm,
    set: CyclicIntervalSet,
    relaxation: Option<Relaxation>,
    fallback_phi: f64,
) -> CombinerSolution {
    let relaxed = relaxation.as_ref().is_some_and(|r| r.rounds > 0);
    match select(objective, &set, objective.maximizer().phi) {
        Some((phi, status)) => CombinerSolution {
            phi,
            objective_value: objective.eval(phi),
            feasible_set: set,
            status: if relaxed {
                CombinerStatus::Relaxed
            } else {
                status
            },
            relaxation,
        },
        None => CombinerSolution {
            phi: fallback_phi,
            objective_value: objective.eval(fallback_phi),
            feasible_set: set,
            status: CombinerStatus::Infeasible,
            relaxation,
        },
    }
}

/// Maximizes received power subject to minimum gains toward `thetas`.
pub fn solve_p1(
    pair: &SubbeamPair,
    h: &CMatrix,
    thetas: &[f64],
    cs: &[f64],
    relax: &RelaxOptions,
) -> Result<CombinerSolution, BeamError> {
    let f = RatioForm::rx_power(pair, h)?;
    let fallback = f.maximizer().phi;
    let set = feasible_set_gain(pair, thetas, cs)?;
    if !set.is_empty() || !relax.enabled {
        return Ok(solve_with(&f, set, None, fallback));
    }
    let (set, relaxation) = relax_gain_constraints(pair, thetas, cs, relax)?;
    Ok(solve_with(&f, set, Some(relaxation), fallback))
}

/// Maximizes received power subject to a minimum integrated scan power.
pub fn solve_p2(
    pair: &SubbeamPair,
    h: &CMatrix,
    apm: &AngularPowerMatrix,
    c_sp: f64,
    w_ref: &CVector,
    relax: &RelaxOptions,
) -> Result<CombinerSolution, BeamError> {
    let f = RatioForm::rx_power(pair, h)?;
    let fallback = f.maximizer().phi;
    let set = feasible_set_power(pair, apm, c_sp, w_ref)?;
    if !set.is_empty() || !relax.enabled {
        return Ok(solve_with(&f, set, None, fallback));
    }
    let form = RatioForm::scan_power(pair, apm)?;
    let base = apm.quadratic(w_ref);
    let (set, relaxation) = relax_ladder(&[c_sp], relax, |c| form.superlevel(c[0] * base))?;
    Ok(solve_with(&f, set, Some(relaxation), fallback))
}

/// Maximizes the gain toward `θ_s0` subject to `f(φ) ≥ C_p P_c`.
///
/// An empty feasible set yields an infeasible solution whose phase is the
/// received-power maximizer, i.e. the point closest to feasibility.
pub fn solve_p3(
    pair: &SubbeamPair,
    h: &CMatrix,
    theta_s0: f64,
    c_p: f64,
) -> Result<CombinerSolution, BeamError> {
    let g = RatioForm::gain(pair, theta_s0)?;
    let set = feasible_set_rxpower(pair, h, c_p)?;
    let fallback = unconstrained_phi_opt(pair, h)?.phi;
    Ok(solve_with(&g, set, None, fallback))
}

/// Maximizes the integrated scan power subject to `f(φ) ≥ C_p P_c`.
pub fn solve_p4(
    pair: &SubbeamPair,
    h: &CMatrix,
    apm: &AngularPowerMatrix,
    c_p: f64,
) -> Result<CombinerSolution, BeamError> {
    let g = RatioForm::scan_power(pair, apm)?;
    let set = feasible_set_rxpower(pair, h, c_p)?;
    let fallback = unconstrained_phi_opt(pair, h)?.phi;
    Ok(solve_with(&g, set, None, fallback))
}
