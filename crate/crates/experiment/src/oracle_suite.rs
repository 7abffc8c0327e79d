//! Brute-force certification of the solvers on random instances.
//!
//! Each property draws its own instances from `(seed, instance index)`,
//! evaluates objectives and constraints through small Gram matrices that
//! share no code with the closed-form solvers, and records the worst gap.

use std::f64::consts::PI;

use multibeam::array::{
    angular_power_matrix, derive_seed, steering_vector, waveform_mse, AngularPowerMatrix,
};
use multibeam::combiner::{
    phi_smax_gain, phi_smax_power, solve_p1, solve_p2, solve_p3, solve_p4, unconstrained_phi_opt,
    wrap_angle, CombinerSolution, CombinerStatus, RelaxOptions,
};
use multibeam::global::{
    angular_quadratic, embed_vector, gain_quadratic, power_quadratic, sdp_ils, waveform_quadratic,
    GlobalKind, GlobalOptions, GlobalStatus,
};
use multibeam::oracle::{grid_search_phi, integration_reference, sampled_search_w};
use multibeam::subbeam::DesiredPattern;
use multibeam::{BeamError, CMatrix, CVector};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{ExperimentConfig, Method};
use crate::error::ExperimentError;
use crate::output::CsvTable;
use crate::scenario::Scenario;

/// Test hook that makes the solvers wrong on purpose.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Corruption {
    /// Added to every phase returned by a combiner solver. The global
    /// received power is scaled by `1 − min(|offset|, 1)`.
    pub phase_offset: f64,
}

impl Corruption {
    fn degrade(&self, rx: f64) -> f64 {
        rx * (1.0 - self.phase_offset.abs().min(1.0))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyReport {
    pub name: &'static str,
    pub checks: usize,
    pub failures: usize,
    /// Largest observed violation on the property's own scale; nonpositive
    /// values mean every check held with room to spare.
    pub max_gap: f64,
    pub tolerance: f64,
    pub note: String,
}

impl PropertyReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub properties: Vec<PropertyReport>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.properties.iter().all(PropertyReport::passed)
    }

    pub fn to_csv(&self, cfg: &ExperimentConfig) -> CsvTable {
        let mut t = CsvTable::new(vec!["property", "checks", "failures", "max_gap", "tolerance", "result", "note"]);
        t.stamp("oracle", &cfg.hash(), cfg.seed);
        for p in &self.properties {
            t.push(vec![
                p.name.into(),
                p.checks.into(),
                p.failures.into(),
                p.max_gap.into(),
                p.tolerance.into(),
                if p.passed() { "pass" } else { "fail" }.into(),
                p.note.as_str().into(),
            ]);
        }
        t
    }
}

/// Running worst case of one property.
#[derive(Debug, Clone, Copy)]
struct Tally {
    checks: usize,
    failures: usize,
    max_gap: f64,
}

impl Tally {
    fn new() -> Self {
        Self {
            checks: 0,
            failures: 0,
            max_gap: f64::NEG_INFINITY,
        }
    }

    /// Records a check that passes when `gap <= tol`.
    fn check(&mut self, gap: f64, tol: f64) {
        self.checks += 1;
        if !(gap <= tol) {
            self.failures += 1;
        }
        if gap.is_nan() {
            self.max_gap = f64::NAN;
        } else if !self.max_gap.is_nan() {
            self.max_gap = self.max_gap.max(gap);
        }
    }

    fn fail(&mut self) {
        self.checks += 1;
        self.failures += 1;
    }

    fn merge(mut self, other: Tally) -> Tally {
        self.checks += other.checks;
        self.failures += other.failures;
        self.max_gap = if self.max_gap.is_nan() || other.max_gap.is_nan() {
            f64::NAN
        } else {
            self.max_gap.max(other.max_gap)
        };
        self
    }

    fn report(self, name: &'static str, tolerance: f64, note: String) -> PropertyReport {
        PropertyReport {
            name,
            checks: self.checks,
            failures: self.failures,
            max_gap: if self.checks == 0 { 0.0 } else { self.max_gap },
            tolerance,
            note,
        }
    }
}

/// Runs `f` on every instance index and merges the tallies in index order.
fn over_instances<T: Send>(
    n: usize,
    f: impl Fn(usize) -> Result<T, ExperimentError> + Sync + Send,
) -> Result<Vec<T>, ExperimentError> {
    (0..n).into_par_iter().map(f).collect()
}

/// `cᴴ G c` with `c = [√ρ, √(1−ρ) e^{jφ}]`.
#[derive(Debug, Clone, Copy)]
pub struct Gram2 {
    g: [[Complex64; 2]; 2],
}

impl Gram2 {
    /// Gram matrix of two vectors under the plain inner product.
    pub fn of(u: &CVector, v: &CVector) -> Self {
        let uv = [u, v];
        let g = [0, 1].map(|i| [0, 1].map(|j| uv[i].dotc(uv[j])));
        Self { g }
    }

    pub fn eval(&self, rho: f64, phi: f64) -> f64 {
        let c = [Complex64::new(rho.sqrt(), 0.0), Complex64::from_polar((1.0 - rho).sqrt(), phi)];
        let mut s = Complex64::new(0.0, 0.0);
        for i in 0..2 {
            for j in 0..2 {
                s += c[i].conj() * self.g[i][j] * c[j];
            }
        }
        s.re
    }
}

/// Normalized objectives of one combiner instance, each as a function of φ.
pub struct CombinerForms {
    rho: f64,
    norm: Gram2,
    rx: Gram2,
    gain: Gram2,
    scan: Gram2,
}

impl CombinerForms {
    pub fn new(scenario: &Scenario, h: &CMatrix) -> Result<Self, BeamError> {
        let (wc, ws) = (scenario.pair.w_c(), scenario.pair.w_s());
        let a = steering_vector(scenario.theta_s, wc.len())?;
        let one = |z: Complex64| CVector::from_element(1, z);
        let m = scenario.scan.matrix();
        let scan = Gram2 {
            g: [
                [wc.dotc(&(m * wc)), wc.dotc(&(m * ws))],
                [ws.dotc(&(m * wc)), ws.dotc(&(m * ws))],
            ],
        };
        Ok(Self {
            rho: scenario.pair.rho(),
            norm: Gram2::of(wc, ws),
            rx: Gram2::of(&(h * wc), &(h * ws)),
            gain: Gram2::of(&one(a.dot(wc)), &one(a.dot(ws))),
            scan,
        })
    }

    fn ratio(&self, g: &Gram2, phi: f64) -> f64 {
        g.eval(self.rho, phi) / self.norm.eval(self.rho, phi)
    }

    pub fn rx(&self, phi: f64) -> f64 {
        self.ratio(&self.rx, phi)
    }

    pub fn gain(&self, phi: f64) -> f64 {
        self.ratio(&self.gain, phi)
    }

    pub fn scan(&self, phi: f64) -> f64 {
        self.ratio(&self.scan, phi)
    }
}

fn random_scenario(cfg: &ExperimentConfig, rng: &mut ChaCha8Rng) -> Result<Scenario, BeamError> {
    let theta_deg = rng.random_range(-30.0..30.0);
    Scenario::new(cfg, theta_deg)
}

fn instance_rng(seed: u64, property: u64, index: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(derive_seed(seed, property), index as u64))
}

/// Combiner output with the corruption hook applied.
fn corrupted(mut sol: CombinerSolution, c: Corruption) -> CombinerSolution {
    sol.phi = wrap_angle(sol.phi + c.phase_offset);
    sol
}

/// Every combiner solver versus a dense grid over φ: the solver's objective
/// must reach the best feasible grid value and satisfy its constraints.
pub fn combiner_vs_grid(
    cfg: &ExperimentConfig,
    instances: usize,
    resolution: usize,
    corruption: Corruption,
) -> Result<PropertyReport, ExperimentError> {
    const TOL: f64 = 1e-8;
    let tallies = over_instances(instances, |i| {
        let mut rng = instance_rng(cfg.seed, 1, i);
        let scenario = random_scenario(cfg, &mut rng)?;
        let h = scenario.channel(i)?;
        let forms = CombinerForms::new(&scenario, &h)?;
        let c = &cfg.combiner;
        let m = cfg.array.elements as f64;
        let pc = scenario.normalizer(&h);
        let scan_ref = scenario.scan.quadratic(&scenario.w_ref);
        let mut tally = Tally::new();

        let mut judge = |objective: &dyn Fn(f64) -> f64,
                         constraint: Option<(&dyn Fn(f64) -> f64, f64)>,
                         sol: &CombinerSolution|
         -> Result<(), ExperimentError> {
            let cons: Vec<Box<dyn Fn(f64) -> bool + '_>> = match constraint {
                Some((g, thr)) => vec![Box::new(move |p: f64| g(p) >= thr)],
                None => vec![],
            };
            let refs: Vec<&dyn Fn(f64) -> bool> = cons.iter().map(|b| b.as_ref()).collect();
            let grid = grid_search_phi(objective, &refs, resolution)?;
            match (sol.status, grid.best) {
                (CombinerStatus::Infeasible, None) => tally.check(0.0, TOL),
                (CombinerStatus::Infeasible, Some(_)) | (_, None) => tally.fail(),
                (_, Some((_, best))) => {
                    let value = objective(sol.phi);
                    tally.check((best - value) / best.abs().max(f64::MIN_POSITIVE), TOL);
                    if let Some((g, thr)) = constraint {
                        tally.check((thr - g(sol.phi)) / thr.abs().max(f64::MIN_POSITIVE), TOL);
                    }
                }
            }
            Ok(())
        };

        let relax = RelaxOptions {
            enabled: c.relax,
            decay: c.relax_decay,
            max_rounds: c.relax_rounds,
            ..RelaxOptions::default()
        };
        let applied = |sol: &CombinerSolution, base: f64| {
            sol.relaxation.as_ref().map_or(base, |r| r.applied[0])
        };

        let unc = unconstrained_phi_opt(&scenario.pair, &h)?;
        let unc = CombinerSolution {
            phi: wrap_angle(unc.phi + corruption.phase_offset),
            objective_value: forms.rx(unc.phi),
            feasible_set: multibeam::combiner::CyclicIntervalSet::full(),
            status: CombinerStatus::InteriorOptimum,
            relaxation: None,
        };
        judge(&|p| forms.rx(p), None, &unc)?;

        let p1 = corrupted(solve_p1(&scenario.pair, &h, &[scenario.theta_s], &[c.c_s], &relax)?, corruption);
        let cs = applied(&p1, c.c_s);
        judge(&|p| forms.rx(p), Some((&|p| forms.gain(p), cs * cs * (1.0 - c.rho) * m)), &p1)?;

        let p2 = corrupted(
            solve_p2(&scenario.pair, &h, &scenario.scan, c.c_sp, &scenario.w_ref, &relax)?,
            corruption,
        );
        let csp = applied(&p2, c.c_sp);
        judge(&|p| forms.rx(p), Some((&|p| forms.scan(p), csp * scan_ref)), &p2)?;

        let p3 = corrupted(solve_p3(&scenario.pair, &h, scenario.theta_s, c.c_p)?, corruption);
        judge(&|p| forms.gain(p), Some((&|p| forms.rx(p), c.c_p * pc)), &p3)?;

        let p4 = corrupted(solve_p4(&scenario.pair, &h, &scenario.scan, c.c_p)?, corruption);
        judge(&|p| forms.scan(p), Some((&|p| forms.rx(p), c.c_p * pc)), &p4)?;
        Ok(tally)
    })?;
    let tally = tallies.into_iter().fold(Tally::new(), Tally::merge);
    Ok(tally.report(
        "combiner_vs_grid",
        TOL,
        format!("{instances} instances, {resolution}-point grid, relative gap"),
    ))
}

/// Zero thresholds must return exactly the unconstrained phases.
pub fn vacuous_collapse(cfg: &ExperimentConfig, instances: usize, corruption: Corruption) -> Result<PropertyReport, ExperimentError> {
    const TOL: f64 = 1e-10;
    let tallies = over_instances(instances, |i| {
        let mut rng = instance_rng(cfg.seed, 2, i);
        let s = random_scenario(cfg, &mut rng)?;
        let h = s.channel(i)?;
        let relax = RelaxOptions::default();
        let unc = unconstrained_phi_opt(&s.pair, &h)?.phi;
        let pairs = [
            (solve_p1(&s.pair, &h, &[s.theta_s], &[0.0], &relax)?, unc),
            (solve_p2(&s.pair, &h, &s.scan, 0.0, &s.w_ref, &relax)?, unc),
            (solve_p3(&s.pair, &h, s.theta_s, 0.0)?, phi_smax_gain(&s.pair, s.theta_s)?.phi),
            (solve_p4(&s.pair, &h, &s.scan, 0.0)?, phi_smax_power(&s.pair, &s.scan)?.phi),
        ];
        let mut tally = Tally::new();
        for (sol, expected) in pairs {
            let sol = corrupted(sol, corruption);
            tally.check(wrap_angle(sol.phi - expected).abs(), TOL);
        }
        Ok(tally)
    })?;
    let tally = tallies.into_iter().fold(Tally::new(), Tally::merge);
    Ok(tally.report("vacuous_collapse", TOL, format!("{instances} instances, absolute phase difference")))
}

fn random_cvector(rng: &mut ChaCha8Rng, n: usize) -> CVector {
    CVector::from_fn(n, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

fn quad(q: &DMatrix<f64>, x: &DVector<f64>) -> f64 {
    x.dot(&(q * x))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

/// Real quadratic forms against their complex counterparts.
pub fn real_complex_equivalence(seed: u64, instances: usize) -> Result<PropertyReport, ExperimentError> {
    const TOL: f64 = 1e-9;
    let tallies = over_instances(instances, |i| {
        let mut rng = instance_rng(seed, 3, i);
        let m = rng.random_range(2..=8);
        let n = rng.random_range(3..=24);
        let h = CMatrix::from_fn(rng.random_range(1..=8), m, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let w = random_cvector(&mut rng, m);
        let x = embed_vector(&w);
        let theta = rng.random_range(-1.4..1.4);
        let lo = rng.random_range(-1.2..1.0);
        let apm = angular_power_matrix(lo, lo + rng.random_range(0.0..0.4), 16, m)?;
        let grid: Vec<f64> = (0..n).map(|_| rng.random_range(-PI / 2.0..PI / 2.0)).collect();
        let weights = DVector::from_fn(n, |_, _| rng.random_range(0.1..2.0));
        let mags = DVector::from_fn(n, |_, _| rng.random_range(0.0..3.0));
        let phases = CVector::from_fn(n, |_, _| Complex64::from_polar(1.0, rng.random_range(-PI..PI)));
        let desired = DesiredPattern::new(grid, m, weights, mags, phases)?;

        let a = steering_vector(theta, m)?;
        let mut tally = Tally::new();
        tally.check(rel(quad(&power_quadratic(&h), &x), (&h * &w).norm_squared()), TOL);
        tally.check(rel(quad(&gain_quadratic(theta, m)?, &x), a.dot(&w).norm_sqr()), TOL);
        tally.check(rel(quad(&angular_quadratic(&apm), &x), apm.quadratic(&w)), TOL);
        tally.check(rel(quad(&waveform_quadratic(&desired)?, &x), waveform_mse(&w, &desired)?), TOL);
        Ok(tally)
    })?;
    let tally = tallies.into_iter().fold(Tally::new(), Tally::merge);
    Ok(tally.report(
        "real_complex_equivalence",
        TOL,
        format!("{instances} instances x 4 forms, relative difference"),
    ))
}

/// Coarse angular power matrices against a finely integrated reference.
pub fn integration_accuracy(cfg: &ExperimentConfig, steps: &[usize]) -> Result<PropertyReport, ExperimentError> {
    const TOL: f64 = 1e-3;
    let half = cfg.scan.range_deg.to_radians() / 2.0;
    let m = cfg.array.elements;
    let mut tally = Tally::new();
    for &d in &cfg.scan.directions_deg {
        let t = d.to_radians();
        let reference = integration_reference(t - half, t + half, m)?;
        for &n in steps {
            let coarse: AngularPowerMatrix = angular_power_matrix(t - half, t + half, n, m)?;
            tally.check((coarse.matrix() - reference.matrix()).camax(), TOL);
        }
    }
    Ok(tally.report(
        "integration_accuracy",
        TOL,
        format!("steps {steps:?} at every scanning direction, max entrywise error"),
    ))
}

/// Unit weights of the combiner methods on one instance.
fn combiner_weights(s: &Scenario, h: &CMatrix) -> Result<Vec<CVector>, BeamError> {
    [Method::M1Ref, Method::Unconstrained, Method::P1, Method::P2, Method::P3, Method::P4]
        .into_iter()
        .map(|m| Ok(s.evaluate(m, h, 0)?.w.expect("combiner methods always return weights")))
        .collect()
}

/// The relaxed received-power program must dominate every combiner
/// solution. The waveform bound is set to the largest combiner mismatch
/// under the initial phases and a single outer iteration is run, so every
/// combiner solution is feasible for the program being solved.
pub fn relaxation_dominance(
    cfg: &ExperimentConfig,
    instances: usize,
    corruption: Corruption,
) -> Result<PropertyReport, ExperimentError> {
    const TOL: f64 = 1e-6;
    let tallies = over_instances(instances, |i| {
        let d = cfg.scan.directions_deg[i % cfg.scan.directions_deg.len()];
        let s = Scenario::new(cfg, d)?;
        let h = s.channel(i)?;
        let combiners = combiner_weights(&s, &h)?;
        let mut worst = 0.0f64;
        for w in &combiners {
            worst = worst.max(waveform_mse(w, &s.desired)?);
        }
        let mut inputs = s.global_inputs(&h)?;
        inputs.waveform_bound = Some(worst * (1.0 + 1e-9));
        let opts = GlobalOptions {
            max_iterations: 1,
            ..s.global_options(i)
        };
        let mut tally = Tally::new();
        let sol = match sdp_ils(GlobalKind::P5, &inputs, &opts) {
            Ok(sol) if sol.status == GlobalStatus::Optimal => sol,
            Ok(_) | Err(BeamError::Infeasible { .. } | BeamError::NumericalFailure { .. }) => {
                tally.fail();
                return Ok(tally);
            }
            Err(e) => return Err(e.into()),
        };
        let p5_rx = corruption.degrade(sol.rx_power);
        for w in &combiners {
            let rx = (&h * w).norm_squared();
            tally.check((rx - p5_rx) / rx, TOL);
        }
        Ok(tally)
    })?;
    let tally = tallies.into_iter().fold(Tally::new(), Tally::merge);
    Ok(tally.report(
        "relaxation_dominance",
        TOL,
        format!("{instances} instances x 6 combiner solutions, relative shortfall"),
    ))
}

/// Configuration of the small-array instances of [`sampled_dominance`].
pub fn small_config(cfg: &ExperimentConfig) -> ExperimentConfig {
    let m = cfg.oracle.small_elements;
    let mut small = cfg.clone();
    small.array.elements = m;
    small.array.fixed_active = m;
    small.array.scan_active = m - 1;
    small
}

/// Median waveform mismatch of random unit vectors, a bound that leaves
/// about half of all directions feasible.
fn median_mismatch(desired: &DesiredPattern, m: usize, rng: &mut ChaCha8Rng) -> Result<f64, BeamError> {
    let mut values = Vec::with_capacity(1001);
    for _ in 0..1001 {
        let w = random_cvector(rng, m);
        values.push(waveform_mse(&w.unscale(w.norm()), desired)?);
    }
    values.sort_by(f64::total_cmp);
    Ok(values[500])
}

/// On a small array, the relaxed received-power program must beat the best
/// of many random unit vectors satisfying its constraints. The waveform
/// bound is the median mismatch of random directions and a single outer
/// iteration is run, so the sampled search has feasible points.
pub fn sampled_dominance(
    cfg: &ExperimentConfig,
    instances: usize,
    samples: usize,
    corruption: Corruption,
) -> Result<PropertyReport, ExperimentError> {
    const TOL: f64 = 1e-6;
    let small = small_config(cfg);
    let results = over_instances(instances, |i| {
        let d = small.scan.directions_deg[i % small.scan.directions_deg.len()];
        let s = Scenario::new(&small, d)?;
        let h = s.channel(i)?;
        let m = s.pair.num_elements();
        let mut rng = instance_rng(small.seed, 4, i);
        let mut inputs = s.global_inputs(&h)?;
        let bound = median_mismatch(&s.desired, m, &mut rng)?;
        inputs.waveform_bound = Some(bound);
        let opts = GlobalOptions {
            max_iterations: 1,
            ..s.global_options(i)
        };
        let mut tally = Tally::new();
        let sol = match sdp_ils(GlobalKind::P5, &inputs, &opts) {
            Ok(sol) if sol.status == GlobalStatus::Optimal => sol,
            Ok(_) | Err(BeamError::Infeasible { .. } | BeamError::NumericalFailure { .. }) => {
                tally.fail();
                return Ok((tally, 0));
            }
            Err(e) => return Err(e.into()),
        };
        let bound = *sol.waveform_bounds.last().expect("P5 always carries a waveform bound");
        let feasible = |w: &CVector| waveform_mse(w, &sol.desired).is_ok_and(|v| v <= bound);
        let seed = derive_seed(derive_seed(small.seed, 5), i as u64);
        let best = sampled_search_w(|w| (&h * w).norm_squared(), &[&feasible], m, samples, seed)?;
        match best {
            Some((_, value)) => {
                tally.check(value - corruption.degrade(sol.rx_power), TOL);
                Ok((tally, 1))
            }
            None => Ok((tally, 0)),
        }
    })?;
    let compared: usize = results.iter().map(|r| r.1).sum();
    let tally = results.into_iter().map(|r| r.0).fold(Tally::new(), Tally::merge);
    Ok(tally.report(
        "sampled_dominance",
        TOL,
        format!(
            "{instances} instances at M = {}, {samples} samples, {compared} with feasible samples, absolute shortfall",
            small.array.elements
        ),
    ))
}

/// Every property at the sizes of the `[oracle]` configuration section.
pub fn run_oracle_suite(cfg: &ExperimentConfig, corruption: Corruption) -> Result<SuiteReport, ExperimentError> {
    cfg.validate()?;
    let o = &cfg.oracle;
    Ok(SuiteReport {
        properties: vec![
            combiner_vs_grid(cfg, o.instances, o.grid_resolution, corruption)?,
            vacuous_collapse(cfg, o.instances, corruption)?,
            real_complex_equivalence(cfg.seed, o.instances)?,
            integration_accuracy(cfg, &[12, cfg.scan.integration_steps])?,
            relaxation_dominance(cfg, o.instances, corruption)?,
            sampled_dominance(cfg, o.instances, o.samples, corruption)?,
        ],
    })
}
