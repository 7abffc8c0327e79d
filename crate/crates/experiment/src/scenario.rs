//! One scanning direction of the study: the subbeams, desired pattern and
//! reference weights shared by every trial, and the per-trial evaluation of
//! each method on a channel draw.

use multibeam::array::{
    angular_power_matrix, derive_seed, magnitude_mismatch, received_power, sample_rician_channel,
    AngularPowerMatrix, ChannelSimConfig,
};
use multibeam::combiner::{
    aligned_phi, solve_p1, solve_p2, solve_p3, solve_p4, unconstrained_phi_opt, CombinerSolution,
    CombinerStatus, RelaxOptions,
};
use multibeam::global::{sdp_ils, GlobalInputs, GlobalKind, GlobalOptions, GlobalSolution, GlobalStatus};
use multibeam::subbeam::{
    combine, conventional_beam, desired_multibeam, ils_synthesize, steer, uniform_grid, DesiredPattern,
    SubbeamPair,
};
use multibeam::{BeamError, CMatrix, CVector};
use sdp_ipm::SolverOptions;

use crate::config::{ExperimentConfig, Method};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutcomeStatus {
    Ok,
    /// A combiner whose thresholds had to be lowered.
    Relaxed,
    /// A combiner with an empty feasible set; the reported weights are its
    /// documented fallback.
    Infeasible,
    /// A global solve that stopped on an infeasible or numerically failed
    /// program. Weights, if any, come from the last good iteration.
    Failed,
}

#[derive(Debug, Clone)]
pub struct MethodOutcome {
    pub method: Method,
    /// Unit-norm weights; `None` only when a global solve failed outright.
    pub w: Option<CVector>,
    /// `‖H w‖² / P_c`.
    pub normalized_rx: f64,
    /// Phase-optimal waveform mismatch per grid point.
    pub waveform_mse: f64,
    pub status: OutcomeStatus,
}

/// Everything about a scanning direction that does not depend on the channel.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ExperimentConfig,
    pub theta_s: f64,
    pub pair: SubbeamPair,
    pub desired: DesiredPattern,
    pub scan: AngularPowerMatrix,
    /// Unit-norm least-squares multibeam, the channel-independent reference.
    pub w_ref: CVector,
}

fn unit(w: &CVector) -> CVector {
    w.unscale(w.norm())
}

impl Scenario {
    pub fn new(config: &ExperimentConfig, theta_s_deg: f64) -> Result<Self, BeamError> {
        let a = &config.array;
        let ch = &config.channel;
        let theta_s = theta_s_deg.to_radians();
        let w_c = conventional_beam(a.fixed_active, a.elements, ch.los_aod_deg.to_radians())?;
        let w_s = steer(&conventional_beam(a.scan_active, a.elements, 0.0)?, theta_s);
        let rho = config.combiner.rho;
        let pair = SubbeamPair::new(w_c.clone(), w_s.clone(), rho)?;
        let grid = uniform_grid(config.scan.grid_points);
        let desired = desired_multibeam(&w_c, &w_s, rho, &grid, None)?;
        let half = config.scan.range_deg.to_radians() / 2.0;
        let scan = angular_power_matrix(
            theta_s - half,
            theta_s + half,
            config.scan.integration_steps,
            a.elements,
        )?;
        let w_ref = unit(&ils_synthesize(&desired, config.scan.reference_iterations)?.w);
        Ok(Self {
            config: config.clone(),
            theta_s,
            pair,
            desired,
            scan,
            w_ref,
        })
    }

    pub fn channel_config(&self) -> ChannelSimConfig {
        let ch = &self.config.channel;
        ChannelSimConfig {
            tx_elements: self.config.array.elements,
            rx_elements: self.config.array.elements,
            num_paths: ch.paths,
            los_aod: ch.los_aod_deg.to_radians(),
            los_aoa: ch.los_aoa_deg.to_radians(),
            los_to_nlos_db: ch.los_to_nlos_db,
            angular_spread: ch.angular_spread_deg.to_radians(),
        }
    }

    /// Channel of trial `trial`. Independent of the scanning direction, so
    /// every direction sees the same draws.
    pub fn channel(&self, trial: usize) -> Result<CMatrix, BeamError> {
        let seed = derive_seed(self.config.seed, trial as u64);
        Ok(sample_rician_channel(&self.channel_config(), seed)?.matrix().clone())
    }

    /// Power of the full-array conventional beam toward the LOS direction.
    pub fn normalizer(&self, h: &CMatrix) -> f64 {
        (h * self.pair.w_c()).norm_squared() / self.pair.w_c().norm_squared()
    }

    fn relax(&self) -> RelaxOptions {
        let c = &self.config.combiner;
        RelaxOptions {
            enabled: c.relax,
            decay: c.relax_decay,
            max_rounds: c.relax_rounds,
            ..RelaxOptions::default()
        }
    }

    pub fn solve_combiner(&self, method: Method, h: &CMatrix) -> Result<CombinerSolution, BeamError> {
        let c = &self.config.combiner;
        match method {
            Method::P1 => solve_p1(&self.pair, h, &[self.theta_s], &[c.c_s], &self.relax()),
            Method::P2 => solve_p2(&self.pair, h, &self.scan, c.c_sp, &self.w_ref, &self.relax()),
            Method::P3 => solve_p3(&self.pair, h, self.theta_s, c.c_p),
            Method::P4 => solve_p4(&self.pair, h, &self.scan, c.c_p),
            other => Err(BeamError::InvalidParameter {
                name: "method",
                reason: format!("{other} is not a constrained combiner"),
            }),
        }
    }

    /// Waveform bound of the global methods: a multiple of the mismatch of
    /// the unconstrained combiner on this channel.
    pub fn waveform_bound(&self, h: &CMatrix) -> Result<f64, BeamError> {
        let phi = unconstrained_phi_opt(&self.pair, h)?.phi;
        let w = unit(&combine(&self.pair, phi));
        Ok(self.config.global.waveform_scale * magnitude_mismatch(&w, &self.desired)?)
    }

    pub fn global_inputs(&self, h: &CMatrix) -> Result<GlobalInputs, BeamError> {
        let g = &self.config.global;
        let c = &self.config.combiner;
        let m = self.config.array.elements as f64;
        Ok(GlobalInputs {
            h: h.clone(),
            desired: self.desired.clone(),
            sensing_directions: vec![self.theta_s],
            scan: Some(self.scan.clone()),
            waveform_bound: Some(self.waveform_bound(h)?),
            rx_floor: Some(c.c_p * self.normalizer(h)),
            gain_floors: g
                .gain_constraint
                .then(|| vec![c.c_s * c.c_s * (1.0 - c.rho) * m]),
            scan_floor: g
                .scan_constraint
                .then(|| c.c_sp * self.scan.quadratic(&self.w_ref)),
        })
    }

    pub fn global_options(&self, trial: usize) -> GlobalOptions {
        let g = &self.config.global;
        GlobalOptions {
            max_iterations: g.max_iterations,
            tol: g.convergence_tol,
            solver: SolverOptions {
                tol: g.solver_tol,
                ..SolverOptions::default()
            },
            randomization_samples: g.randomization_samples,
            seed: derive_seed(self.config.seed ^ 0x5eed, trial as u64),
            ..GlobalOptions::default()
        }
    }

    pub fn solve_global(
        &self,
        kind: GlobalKind,
        h: &CMatrix,
        trial: usize,
    ) -> Result<GlobalSolution, BeamError> {
        sdp_ils(kind, &self.global_inputs(h)?, &self.global_options(trial))
    }

    fn outcome(&self, method: Method, h: &CMatrix, w: Option<CVector>, status: OutcomeStatus) -> Result<MethodOutcome, BeamError> {
        let pc = self.normalizer(h);
        let (normalized_rx, waveform_mse) = match &w {
            Some(w) => (
                received_power(h, w)? / pc,
                magnitude_mismatch(w, &self.desired)? / self.desired.num_points() as f64,
            ),
            None => (f64::NAN, f64::NAN),
        };
        Ok(MethodOutcome {
            method,
            w,
            normalized_rx,
            waveform_mse,
            status,
        })
    }

    /// Runs one method on one channel. Solver breakdowns of the global
    /// methods are reported through the status, not as errors.
    pub fn evaluate(&self, method: Method, h: &CMatrix, trial: usize) -> Result<MethodOutcome, BeamError> {
        let by_phi = |phi: f64| Some(unit(&combine(&self.pair, phi)));
        match method {
            Method::M1Ref => {
                let los = self.config.channel.los_aod_deg.to_radians();
                let w = by_phi(aligned_phi(&self.pair, los)?);
                self.outcome(method, h, w, OutcomeStatus::Ok)
            }
            Method::M2Ref => self.outcome(method, h, Some(self.w_ref.clone()), OutcomeStatus::Ok),
            Method::Unconstrained => {
                let w = by_phi(unconstrained_phi_opt(&self.pair, h)?.phi);
                self.outcome(method, h, w, OutcomeStatus::Ok)
            }
            Method::P1 | Method::P2 | Method::P3 | Method::P4 => {
                let sol = self.solve_combiner(method, h)?;
                let status = match sol.status {
                    CombinerStatus::InteriorOptimum | CombinerStatus::BoundaryOptimum => OutcomeStatus::Ok,
                    CombinerStatus::Relaxed => OutcomeStatus::Relaxed,
                    CombinerStatus::Infeasible => OutcomeStatus::Infeasible,
                };
                self.outcome(method, h, by_phi(sol.phi), status)
            }
            Method::P5 | Method::P6 | Method::P7 | Method::P8 => {
                let kind = global_kind(method);
                match self.solve_global(kind, h, trial) {
                    Ok(sol) => {
                        let status = match sol.status {
                            GlobalStatus::Optimal => OutcomeStatus::Ok,
                            _ => OutcomeStatus::Failed,
                        };
                        self.outcome(method, h, Some(sol.w), status)
                    }
                    Err(BeamError::Infeasible { .. } | BeamError::NumericalFailure { .. }) => {
                        self.outcome(method, h, None, OutcomeStatus::Failed)
                    }
                    Err(e) => Err(e),
                }
            }
        }
    }
}

pub fn global_kind(method: Method) -> GlobalKind {
    match method {
        Method::P5 => GlobalKind::P5,
        Method::P6 => GlobalKind::P6,
        Method::P7 => GlobalKind::P7,
        Method::P8 => GlobalKind::P8,
        other => panic!("{other} is not a global method"),
    }
}
