//! Declarative experiment configuration: one TOML file holds a section per
//! experiment plus shared settings; command-line flags override file values.
//! The effective (post-merge) configuration is serialized back to canonical
//! TOML and hashed, and that digest is stamped into every output file so a
//! CSV can always be traced to the exact parameters that produced it.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use thiserror::Error;

/// Matrix-free methods are refused above this register size.
pub const MAX_MATRIX_FREE_ATOMS: usize = 10;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse config file {path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: toml::de::Error,
    },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

/// Which experiment a subcommand selected.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    PairCoherence,
    DipoleEffect,
    Scaling,
    Harvest,
    Couplings,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::PairCoherence => "pair-coherence",
            Experiment::DipoleEffect => "dipole-effect",
            Experiment::Scaling => "scaling",
            Experiment::Harvest => "harvest",
            Experiment::Couplings => "couplings",
        }
    }
}

/// Flag values that override the config file; `None` means "not given".
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub nbar: Option<f64>,
    pub f0: Option<f64>,
    pub n_atoms: Option<usize>,
    pub collisions: Option<usize>,
    pub gtau: Option<f64>,
}

fn default_seed() -> u64 {
    0
}

fn default_workers() -> usize {
    0
}

fn default_out() -> String {
    "results.csv".to_owned()
}

fn default_rtol() -> f64 {
    1e-8
}

fn default_atol() -> f64 {
    1e-10
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    #[serde(default = "default_rtol")]
    pub rtol: f64,
    #[serde(default = "default_atol")]
    pub atol: f64,
}

impl Default for IntegratorSection {
    fn default() -> Self {
        Self {
            rtol: default_rtol(),
            atol: default_atol(),
        }
    }
}

fn default_pc_nbars() -> Vec<f64> {
    vec![0.5, 1.0, 10.0]
}

fn default_t_max() -> f64 {
    5.0
}

fn default_points() -> usize {
    201
}

/// Two-atom coherence-growth sweep: numeric vs analytic curves per n̄.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairCoherenceSection {
    #[serde(default = "default_pc_nbars")]
    pub nbars: Vec<f64>,
    #[serde(default)]
    pub f0_over_gamma0: f64,
    #[serde(default = "default_t_max")]
    pub t_max: f64,
    #[serde(default = "default_points")]
    pub points: usize,
}

impl Default for PairCoherenceSection {
    fn default() -> Self {
        Self {
            nbars: default_pc_nbars(),
            f0_over_gamma0: 0.0,
            t_max: default_t_max(),
            points: default_points(),
        }
    }
}

fn default_de_nbar() -> f64 {
    10.0
}

fn default_de_f0s() -> Vec<f64> {
    vec![0.0, 1.0, 100.0]
}

/// Exchange-interaction sensitivity scan over initial states and f₀.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DipoleEffectSection {
    #[serde(default = "default_de_nbar")]
    pub nbar: f64,
    #[serde(default = "default_de_f0s")]
    pub f0s_over_gamma0: Vec<f64>,
    #[serde(default = "default_t_max")]
    pub t_max: f64,
    #[serde(default = "default_points")]
    pub points: usize,
}

impl Default for DipoleEffectSection {
    fn default() -> Self {
        Self {
            nbar: default_de_nbar(),
            f0s_over_gamma0: default_de_f0s(),
            t_max: default_t_max(),
            points: default_points(),
        }
    }
}

fn default_sc_n_min() -> usize {
    2
}

fn default_sc_n_max() -> usize {
    7
}

fn default_sc_f0() -> f64 {
    1.0
}

fn default_conv_tol() -> f64 {
    1e-8
}

fn default_max_time() -> f64 {
    1e6
}

/// Steady-state coherence as a function of cluster size.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingSection {
    #[serde(default = "default_de_nbar")]
    pub nbar: f64,
    #[serde(default = "default_sc_f0")]
    pub f0_over_gamma0: f64,
    #[serde(default = "default_sc_n_min")]
    pub n_min: usize,
    #[serde(default = "default_sc_n_max")]
    pub n_max: usize,
    #[serde(default = "default_conv_tol")]
    pub conv_tol: f64,
    #[serde(default = "default_max_time")]
    pub max_time: f64,
}

impl Default for ScalingSection {
    fn default() -> Self {
        Self {
            nbar: default_de_nbar(),
            f0_over_gamma0: default_sc_f0(),
            n_min: default_sc_n_min(),
            n_max: default_sc_n_max(),
            conv_tol: default_conv_tol(),
            max_time: default_max_time(),
        }
    }
}

fn default_h_p() -> f64 {
    1.0
}

fn default_h_g() -> f64 {
    1.0
}

fn default_h_tau() -> f64 {
    0.05
}

fn default_h_omega0() -> f64 {
    1.0
}

fn default_h_collisions() -> usize {
    10_000
}

fn default_h_seeds() -> usize {
    32
}

/// An explicit beam pair: diagonal plus the two coherences that matter for
/// the collision model (central a₂₃ and corner a₁₄), each as [re, im].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitPair {
    pub label: String,
    pub diagonal: [f64; 4],
    #[serde(default)]
    pub a23: [f64; 2],
    #[serde(default)]
    pub a14: [f64; 2],
}

/// Collisional harvesting run: thermal pair + coherence-zeroed reference,
/// plus any explicit pairs from the config.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarvestSection {
    #[serde(default = "default_de_nbar")]
    pub nbar: f64,
    #[serde(default = "default_sc_f0")]
    pub f0_over_gamma0: f64,
    #[serde(default = "default_h_p")]
    pub p: f64,
    #[serde(default = "default_h_g")]
    pub g: f64,
    #[serde(default = "default_h_tau")]
    pub tau: f64,
    #[serde(default = "default_h_omega0")]
    pub omega0: f64,
    #[serde(default = "default_h_collisions")]
    pub collisions: usize,
    #[serde(default = "default_h_seeds")]
    pub seeds: usize,
    #[serde(default)]
    pub pairs: Vec<ExplicitPair>,
}

impl Default for HarvestSection {
    fn default() -> Self {
        Self {
            nbar: default_de_nbar(),
            f0_over_gamma0: default_sc_f0(),
            p: default_h_p(),
            g: default_h_g(),
            tau: default_h_tau(),
            omega0: default_h_omega0(),
            collisions: default_h_collisions(),
            seeds: default_h_seeds(),
            pairs: Vec::new(),
        }
    }
}

fn default_xi_min() -> f64 {
    0.01
}

fn default_xi_max() -> f64 {
    100.0
}

fn default_points_per_decade() -> usize {
    10
}

fn default_alphas() -> Vec<f64> {
    // Perpendicular dipole and the magic angle cos²α = 1/3.
    vec![
        std::f64::consts::FRAC_PI_2,
        (1.0 / 3f64.sqrt()).acos(),
    ]
}

/// Pair coupling-coefficient table over separation and dipole angle.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingsSection {
    #[serde(default = "default_xi_min")]
    pub xi_min: f64,
    #[serde(default = "default_xi_max")]
    pub xi_max: f64,
    #[serde(default = "default_points_per_decade")]
    pub points_per_decade: usize,
    #[serde(default = "default_alphas")]
    pub alphas: Vec<f64>,
}

impl Default for CouplingsSection {
    fn default() -> Self {
        Self {
            xi_min: default_xi_min(),
            xi_max: default_xi_max(),
            points_per_decade: default_points_per_decade(),
            alphas: default_alphas(),
        }
    }
}

/// The whole configuration: shared settings plus one section per experiment.
/// Field order here is the canonical serialization order the digest hashes.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Worker threads for sweeps; 0 means "let the pool decide". Not part
    /// of the config digest: it cannot change any emitted value.
    #[serde(default = "default_workers")]
    pub workers: usize,
    /// Output CSV path. Not part of the config digest.
    #[serde(default = "default_out")]
    pub out: String,
    #[serde(default)]
    pub integrator: IntegratorSection,
    #[serde(default)]
    pub pair_coherence: PairCoherenceSection,
    #[serde(default)]
    pub dipole_effect: DipoleEffectSection,
    #[serde(default)]
    pub scaling: ScalingSection,
    #[serde(default)]
    pub harvest: HarvestSection,
    #[serde(default)]
    pub couplings: CouplingsSection,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            seed: default_seed(),
            workers: default_workers(),
            out: default_out(),
            integrator: IntegratorSection::default(),
            pair_coherence: PairCoherenceSection::default(),
            dipole_effect: DipoleEffectSection::default(),
            scaling: ScalingSection::default(),
            harvest: HarvestSection::default(),
            couplings: CouplingsSection::default(),
        }
    }
}

impl Config {
    /// Load from a TOML file, or start from defaults when no file is given.
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|source| ConfigError::Io {
                    path: p.display().to_string(),
                    source,
                })?;
                toml::from_str(&text).map_err(|source| ConfigError::Parse {
                    path: p.display().to_string(),
                    source,
                })
            }
        }
    }

    /// Apply command-line overrides. Flags shared across experiments (like
    /// `--nbar`) are applied to the section the selected experiment reads.
    pub fn apply_overrides(
        &mut self,
        experiment: Experiment,
        ov: &Overrides,
    ) -> Result<(), ConfigError> {
        if let Some(out) = &ov.out {
            self.out = out.display().to_string();
        }
        if let Some(seed) = ov.seed {
            self.seed = seed;
        }
        if let Some(workers) = ov.workers {
            self.workers = workers;
        }
        if let Some(nbar) = ov.nbar {
            match experiment {
                Experiment::PairCoherence => self.pair_coherence.nbars = vec![nbar],
                Experiment::DipoleEffect => self.dipole_effect.nbar = nbar,
                Experiment::Scaling => self.scaling.nbar = nbar,
                Experiment::Harvest => self.harvest.nbar = nbar,
                Experiment::Couplings => {
                    return Err(ConfigError::Invalid(
                        "--nbar has no effect on the couplings table".into(),
                    ))
                }
            }
        }
        if let Some(f0) = ov.f0 {
            match experiment {
                Experiment::PairCoherence => self.pair_coherence.f0_over_gamma0 = f0,
                Experiment::DipoleEffect => self.dipole_effect.f0s_over_gamma0 = vec![f0],
                Experiment::Scaling => self.scaling.f0_over_gamma0 = f0,
                Experiment::Harvest => self.harvest.f0_over_gamma0 = f0,
                Experiment::Couplings => {
                    return Err(ConfigError::Invalid(
                        "--f0 has no effect on the couplings table".into(),
                    ))
                }
            }
        }
        if let Some(n) = ov.n_atoms {
            match experiment {
                Experiment::Scaling => self.scaling.n_max = n,
                Experiment::PairCoherence | Experiment::DipoleEffect if n == 2 => {}
                _ => {
                    return Err(ConfigError::Invalid(format!(
                        "--n-atoms {n} is not applicable to {}",
                        experiment.name()
                    )))
                }
            }
        }
        if let Some(c) = ov.collisions {
            if experiment != Experiment::Harvest {
                return Err(ConfigError::Invalid(
                    "--collisions only applies to harvest".into(),
                ));
            }
            self.harvest.collisions = c;
        }
        if let Some(gtau) = ov.gtau {
            if experiment != Experiment::Harvest {
                return Err(ConfigError::Invalid("--gtau only applies to harvest".into()));
            }
            // Realize the requested product by adjusting the duration.
            self.harvest.tau = gtau / self.harvest.g;
        }
        Ok(())
    }

    /// Validate the section the selected experiment will read.
    pub fn validate(&self, experiment: Experiment) -> Result<(), ConfigError> {
        let check_positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(ConfigError::Invalid(format!("{name} must be positive, got {v}")))
            }
        };
        check_positive("integrator.rtol", self.integrator.rtol)?;
        check_positive("integrator.atol", self.integrator.atol)?;
        match experiment {
            Experiment::PairCoherence => {
                let s = &self.pair_coherence;
                if s.nbars.is_empty() {
                    return Err(ConfigError::Invalid("pair_coherence.nbars is empty".into()));
                }
                for &nbar in &s.nbars {
                    if nbar < 0.0 || !nbar.is_finite() {
                        return Err(ConfigError::Invalid(format!(
                            "pair_coherence.nbars entry {nbar} must be >= 0"
                        )));
                    }
                }
                check_positive("pair_coherence.t_max", s.t_max)?;
                if s.points < 2 {
                    return Err(ConfigError::Invalid("pair_coherence.points must be >= 2".into()));
                }
            }
            Experiment::DipoleEffect => {
                let s = &self.dipole_effect;
                if s.nbar < 0.0 {
                    return Err(ConfigError::Invalid("dipole_effect.nbar must be >= 0".into()));
                }
                if s.f0s_over_gamma0.is_empty() {
                    return Err(ConfigError::Invalid(
                        "dipole_effect.f0s_over_gamma0 is empty".into(),
                    ));
                }
                check_positive("dipole_effect.t_max", s.t_max)?;
                if s.points < 2 {
                    return Err(ConfigError::Invalid("dipole_effect.points must be >= 2".into()));
                }
            }
            Experiment::Scaling => {
                let s = &self.scaling;
                if s.n_min < 2 || s.n_max < s.n_min {
                    return Err(ConfigError::Invalid(format!(
                        "scaling range {}..={} must satisfy 2 <= n_min <= n_max",
                        s.n_min, s.n_max
                    )));
                }
                if s.n_max > MAX_MATRIX_FREE_ATOMS {
                    return Err(ConfigError::Invalid(format!(
                        "scaling.n_max = {} exceeds the matrix-free limit of {} atoms",
                        s.n_max, MAX_MATRIX_FREE_ATOMS
                    )));
                }
                if s.nbar < 0.0 {
                    return Err(ConfigError::Invalid("scaling.nbar must be >= 0".into()));
                }
                check_positive("scaling.conv_tol", s.conv_tol)?;
                check_positive("scaling.max_time", s.max_time)?;
            }
            Experiment::Harvest => {
                let s = &self.harvest;
                if s.nbar < 0.0 {
                    return Err(ConfigError::Invalid("harvest.nbar must be >= 0".into()));
                }
                check_positive("harvest.p", s.p)?;
                check_positive("harvest.g", s.g)?;
                check_positive("harvest.tau", s.tau)?;
                check_positive("harvest.omega0", s.omega0)?;
                if s.collisions == 0 {
                    return Err(ConfigError::Invalid("harvest.collisions must be >= 1".into()));
                }
                if s.seeds == 0 {
                    return Err(ConfigError::Invalid("harvest.seeds must be >= 1".into()));
                }
                for pair in &s.pairs {
                    if pair.label.is_empty()
                        || pair.label.contains(',')
                        || pair.label.contains('\n')
                    {
                        return Err(ConfigError::Invalid(format!(
                            "harvest pair label {:?} must be non-empty and free of commas/newlines",
                            pair.label
                        )));
                    }
                    let sum: f64 = pair.diagonal.iter().sum();
                    if (sum - 1.0).abs() > 1e-9 {
                        return Err(ConfigError::Invalid(format!(
                            "harvest pair '{}': diagonal must sum to 1, got {sum}",
                            pair.label
                        )));
                    }
                    if pair.diagonal.iter().any(|&d| d < 0.0) {
                        return Err(ConfigError::Invalid(format!(
                            "harvest pair '{}': diagonal entries must be >= 0",
                            pair.label
                        )));
                    }
                }
            }
            Experiment::Couplings => {
                let s = &self.couplings;
                check_positive("couplings.xi_min", s.xi_min)?;
                check_positive("couplings.xi_max", s.xi_max)?;
                if s.xi_max <= s.xi_min {
                    return Err(ConfigError::Invalid("couplings.xi_max must exceed xi_min".into()));
                }
                if s.points_per_decade == 0 {
                    return Err(ConfigError::Invalid(
                        "couplings.points_per_decade must be >= 1".into(),
                    ));
                }
                if s.alphas.is_empty() {
                    return Err(ConfigError::Invalid("couplings.alphas is empty".into()));
                }
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical TOML serialization, with the fields that
    /// cannot affect emitted values (output path, worker count) normalized
    /// away, so the digest identifies the data and nothing else.
    pub fn digest(&self) -> String {
        let mut canonical = self.clone();
        canonical.out = String::new();
        canonical.workers = 0;
        let text = toml::to_string(&canonical).expect("config is always serializable");
        let mut hasher = Sha256::new();
        hasher.update(text.as_bytes());
        let digest = hasher.finalize();
        let mut hex = String::with_capacity(64);
        for byte in digest {
            use std::fmt::Write;
            write!(hex, "{byte:02x}").expect("writing to a String cannot fail");
        }
        hex
    }
}
