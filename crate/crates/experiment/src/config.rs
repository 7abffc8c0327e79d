//! Experiment configuration. Every field has a default reproducing the
//! reference study, so an empty file is a complete configuration.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::ExperimentError;

/// Every optimization method the runner knows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Subbeams aligned toward the LOS direction.
    M1Ref,
    /// Least-squares synthesized multibeam, independent of the channel.
    M2Ref,
    Unconstrained,
    P1,
    P2,
    P3,
    P4,
    P5,
    P6,
    P7,
    P8,
}

impl Method {
    pub const ALL: [Method; 11] = [
        Method::M1Ref,
        Method::M2Ref,
        Method::Unconstrained,
        Method::P1,
        Method::P2,
        Method::P3,
        Method::P4,
        Method::P5,
        Method::P6,
        Method::P7,
        Method::P8,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::M1Ref => "m1-ref",
            Method::M2Ref => "m2-ref",
            Method::Unconstrained => "unconstrained",
            Method::P1 => "p1",
            Method::P2 => "p2",
            Method::P3 => "p3",
            Method::P4 => "p4",
            Method::P5 => "p5",
            Method::P6 => "p6",
            Method::P7 => "p7",
            Method::P8 => "p8",
        }
    }

    pub fn is_global(self) -> bool {
        matches!(self, Method::P5 | Method::P6 | Method::P7 | Method::P8)
    }

    /// Phase-only combinations of the two subbeams under a constraint.
    pub fn is_constrained_combiner(self) -> bool {
        matches!(self, Method::P1 | Method::P2 | Method::P3 | Method::P4)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                let valid: Vec<&str> = Method::ALL.iter().map(|m| m.name()).collect();
                format!("unknown method `{s}`; valid: {}", valid.join(", "))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArrayConfig {
    pub elements: usize,
    /// Active elements of the communication subbeam.
    pub fixed_active: usize,
    /// Active elements of the scanning subbeam.
    pub scan_active: usize,
}

impl Default for ArrayConfig {
    fn default() -> Self {
        Self {
            elements: 16,
            fixed_active: 16,
            scan_active: 12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelConfig {
    pub paths: usize,
    pub los_to_nlos_db: f64,
    pub angular_spread_deg: f64,
    pub los_aod_deg: f64,
    pub los_aoa_deg: f64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            paths: 8,
            los_to_nlos_db: 10.0,
            angular_spread_deg: 14.0,
            los_aod_deg: 0.0,
            los_aoa_deg: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CombinerConfig {
    pub rho: f64,
    pub c_s: f64,
    pub c_sp: f64,
    pub c_p: f64,
    /// Lower empty gain or scan-power thresholds geometrically.
    pub relax: bool,
    pub relax_decay: f64,
    pub relax_rounds: usize,
}

impl Default for CombinerConfig {
    fn default() -> Self {
        Self {
            rho: 0.5,
            c_s: 0.9,
            c_sp: 0.9,
            c_p: 0.725,
            relax: true,
            relax_decay: 0.95,
            relax_rounds: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GlobalConfig {
    pub max_iterations: usize,
    /// Waveform bound as a multiple of the unconstrained combiner's
    /// phase-optimal mismatch.
    pub waveform_scale: f64,
    pub convergence_tol: f64,
    pub solver_tol: f64,
    /// Add the gain floor `C_s² (1 − ρ) M` toward the scan direction.
    pub gain_constraint: bool,
    /// Add the scan-power floor `C_sp · w_refᴴ 𝓐 w_ref`.
    pub scan_constraint: bool,
    pub randomization_samples: usize,
}

impl Default for GlobalConfig {
    fn default() -> Self {
        Self {
            max_iterations: 5,
            waveform_scale: 0.75,
            convergence_tol: 1e-6,
            solver_tol: 1e-8,
            gain_constraint: false,
            scan_constraint: false,
            randomization_samples: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanConfig {
    pub directions_deg: Vec<f64>,
    pub range_deg: f64,
    pub integration_steps: usize,
    /// Angle grid of the desired pattern.
    pub grid_points: usize,
    /// Iterations of the least-squares reference synthesis.
    pub reference_iterations: usize,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            directions_deg: vec![-24.36, -18.21, -12.27, -6.45, 5.02, 10.81, 16.71, 22.80],
            range_deg: 8.59,
            integration_steps: 16,
            grid_points: 181,
            reference_iterations: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PatternConfig {
    pub direction_deg: f64,
    pub methods: Vec<Method>,
    /// Angle grid of the emitted pattern.
    pub points: usize,
}

impl Default for PatternConfig {
    fn default() -> Self {
        Self {
            direction_deg: 5.01,
            methods: Method::ALL.to_vec(),
            points: 721,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepParameter {
    Cs,
    Csp,
    Cp,
}

impl FromStr for SweepParameter {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "cs" => Ok(SweepParameter::Cs),
            "csp" => Ok(SweepParameter::Csp),
            "cp" => Ok(SweepParameter::Cp),
            _ => Err(format!("unknown sweep parameter `{s}`; valid: cs, csp, cp")),
        }
    }
}

impl fmt::Display for SweepParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepParameter::Cs => "cs",
            SweepParameter::Csp => "csp",
            SweepParameter::Cp => "cp",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
    pub direction_deg: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            parameter: SweepParameter::Cs,
            values: (0..=10).map(|i| i as f64 / 10.0).collect(),
            direction_deg: -6.45,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    pub values: Vec<usize>,
    pub direction_deg: f64,
}

impl Default for PathsConfig {
    fn default() -> Self {
        Self {
            values: vec![1, 2, 4, 8, 16],
            direction_deg: -18.21,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    /// Random instances per property.
    pub instances: usize,
    pub grid_resolution: usize,
    /// Random unit vectors per sampled-dominance instance.
    pub samples: usize,
    /// Array size of the sampled-dominance instances.
    pub small_elements: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            instances: 50,
            grid_resolution: 200_000,
            samples: 10_000,
            small_elements: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub trials: usize,
    /// Methods of the `directions`, `sweep` and `paths` runs.
    pub methods: Vec<Method>,
    pub array: ArrayConfig,
    pub channel: ChannelConfig,
    pub combiner: CombinerConfig,
    pub global: GlobalConfig,
    pub scan: ScanConfig,
    pub pattern: PatternConfig,
    pub sweep: SweepConfig,
    pub paths: PathsConfig,
    pub oracle: OracleConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            trials: 200,
            methods: Method::ALL.to_vec(),
            array: ArrayConfig::default(),
            channel: ChannelConfig::default(),
            combiner: CombinerConfig::default(),
            global: GlobalConfig::default(),
            scan: ScanConfig::default(),
            pattern: PatternConfig::default(),
            sweep: SweepConfig::default(),
            paths: PathsConfig::default(),
            oracle: OracleConfig::default(),
        }
    }
}

fn fraction(name: &str, v: f64) -> Result<(), ExperimentError> {
    if !(0.0..=1.0).contains(&v) {
        return Err(ExperimentError::config(format!("{name} must lie in [0, 1], got {v}")));
    }
    Ok(())
}

fn direction(name: &str, deg: f64) -> Result<(), ExperimentError> {
    if !(deg.abs() < 90.0) {
        return Err(ExperimentError::config(format!(
            "{name} must lie strictly inside (-90, 90) degrees, got {deg}"
        )));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ExperimentError> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration is always serializable")
    }

    /// First 16 hex digits of the SHA-256 of the canonical TOML form.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let a = &self.array;
        if a.elements < 2 {
            return Err(ExperimentError::config("array.elements must be at least 2"));
        }
        for (name, k) in [("array.fixed_active", a.fixed_active), ("array.scan_active", a.scan_active)] {
            if k == 0 || k > a.elements {
                return Err(ExperimentError::config(format!("{name} must be in 1..={}", a.elements)));
            }
        }
        if self.trials == 0 {
            return Err(ExperimentError::config("trials must be at least 1"));
        }
        if self.methods.is_empty() || self.pattern.methods.is_empty() {
            return Err(ExperimentError::config("method lists must not be empty"));
        }
        let ch = &self.channel;
        if ch.paths == 0 {
            return Err(ExperimentError::config("channel.paths must be at least 1"));
        }
        if !ch.los_to_nlos_db.is_finite() || !(ch.angular_spread_deg >= 0.0) {
            return Err(ExperimentError::config("channel power ratio and spread must be finite and nonnegative"));
        }
        direction("channel.los_aod_deg", ch.los_aod_deg)?;
        direction("channel.los_aoa_deg", ch.los_aoa_deg)?;
        let c = &self.combiner;
        if !(c.rho > 0.0 && c.rho < 1.0) {
            return Err(ExperimentError::config("combiner.rho must lie strictly inside (0, 1)"));
        }
        fraction("combiner.c_s", c.c_s)?;
        fraction("combiner.c_sp", c.c_sp)?;
        fraction("combiner.c_p", c.c_p)?;
        if !(c.relax_decay > 0.0 && c.relax_decay < 1.0) {
            return Err(ExperimentError::config("combiner.relax_decay must lie strictly inside (0, 1)"));
        }
        let g = &self.global;
        if g.max_iterations == 0 {
            return Err(ExperimentError::config("global.max_iterations must be at least 1"));
        }
        if !(g.waveform_scale > 0.0) || !(g.convergence_tol > 0.0) || !(g.solver_tol > 0.0) {
            return Err(ExperimentError::config("global scale and tolerances must be positive"));
        }
        let s = &self.scan;
        if s.directions_deg.is_empty() {
            return Err(ExperimentError::config("scan.directions_deg must not be empty"));
        }
        for &d in &s.directions_deg {
            direction("scan.directions_deg", d)?;
        }
        direction("pattern.direction_deg", self.pattern.direction_deg)?;
        direction("sweep.direction_deg", self.sweep.direction_deg)?;
        direction("paths.direction_deg", self.paths.direction_deg)?;
        if !(s.range_deg >= 0.0) || s.integration_steps == 0 || s.grid_points < 2 {
            return Err(ExperimentError::config(
                "scan.range_deg must be nonnegative, integration_steps positive, grid_points at least 2",
            ));
        }
        for &d in &s.directions_deg {
            direction("scan range edge", d.abs() + s.range_deg / 2.0)?;
        }
        if self.pattern.points < 2 {
            return Err(ExperimentError::config("pattern.points must be at least 2"));
        }
        for &v in &self.sweep.values {
            fraction("sweep.values", v)?;
        }
        if self.paths.values.contains(&0) {
            return Err(ExperimentError::config("paths.values must be at least 1"));
        }
        let o = &self.oracle;
        if o.instances == 0 || o.grid_resolution < 1000 || o.samples == 0 {
            return Err(ExperimentError::config(
                "oracle.instances and oracle.samples must be positive, grid_resolution at least 1000",
            ));
        }
        if !(2..=4).contains(&o.small_elements) {
            return Err(ExperimentError::config("oracle.small_elements must be in 2..=4"));
        }
        Ok(())
    }
}
