//! Experiment configuration: a versioned TOML schema with unknown keys
//! rejected and every field validated against the module preconditions
//! before any computation starts.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use polytail::sampler::BodyConfig;
use polytail::simulator::QCase;
use polytail::tailspec::{Monomial, Polynomial, TailSpec};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: u32,
    pub seed: u64,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub polynomial: Option<PolynomialConfig>,
    #[serde(default)]
    pub tail: Option<TailConfig>,
    /// Per-variable tails for the general (non-iid) tail arithmetic.
    #[serde(default)]
    pub variable_tails: Option<Vec<TailConfig>>,
    #[serde(default)]
    pub simulation: Option<SimulationConfig>,
    #[serde(default)]
    pub diagnostics: Option<DiagnosticsConfig>,
    #[serde(default)]
    pub experiment: Option<ExperimentSpec>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct TailConfig {
    pub alpha: f64,
    pub k: f64,
    pub c_plus: f64,
    pub c_minus: f64,
    /// Width fraction of the uniform body support, in (0, 1]; default 1
    /// (uniform on the full (-x0, x0)).
    #[serde(default)]
    pub body_width: Option<f64>,
}

impl TailConfig {
    pub fn to_spec(&self) -> Result<TailSpec, String> {
        TailSpec::new(self.alpha, self.k, self.c_plus, self.c_minus).map_err(|e| e.to_string())
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct TermConfig {
    pub exponents: Vec<f64>,
    pub coefficient: f64,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PolynomialConfig {
    pub arity: usize,
    pub terms: Vec<TermConfig>,
}

impl PolynomialConfig {
    pub fn to_polynomial(&self) -> Result<Polynomial, String> {
        let terms = self
            .terms
            .iter()
            .map(|t| Monomial::new(t.exponents.clone(), t.coefficient))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| e.to_string())?;
        Polynomial::new(self.arity, terms).map_err(|e| e.to_string())
    }
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum QCaseConfig {
    LDep,
    ArithProg,
}

impl From<QCaseConfig> for QCase {
    fn from(q: QCaseConfig) -> QCase {
        match q {
            QCaseConfig::LDep => QCase::LDep,
            QCaseConfig::ArithProg => QCase::ArithProg,
        }
    }
}

fn default_horizon() -> f64 {
    1.0
}

fn default_replicates() -> u64 {
    1
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub qcase: QCaseConfig,
    pub n_list: Vec<u64>,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_replicates")]
    pub replicates: u64,
    /// Block sizes for the block/gap decomposition (l-dependence only).
    #[serde(default)]
    pub k_block_list: Vec<u64>,
    /// Smooth-number truncation levels (arithmetic progressions only).
    #[serde(default)]
    pub q_list: Vec<usize>,
    /// How many replicate paths to export at full grid resolution.
    #[serde(default)]
    pub export_paths: u64,
    /// Draw count for Monte Carlo centering estimates.
    #[serde(default)]
    pub a_n_draws: Option<u64>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct JointJumpConfig {
    pub components: [usize; 2],
    pub delta: f64,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct IncrementDependenceConfig {
    #[serde(default = "default_permutations")]
    pub permutations: u32,
}

fn default_permutations() -> u32 {
    10_000
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsConfig {
    /// Fit (alpha, k, c) to the summand tail from an iid sample of F(X).
    #[serde(default)]
    pub tail_fit: bool,
    /// Sample size for the summand-law diagnostics.
    #[serde(default)]
    pub summand_draws: Option<u64>,
    #[serde(default)]
    pub hill: bool,
    /// Compare the end-value ensemble CF against the predicted limit.
    #[serde(default)]
    pub cf: bool,
    #[serde(default)]
    pub lln: bool,
    #[serde(default)]
    pub increment_dependence: Option<IncrementDependenceConfig>,
    #[serde(default)]
    pub joint_jumps: Option<JointJumpConfig>,
}

/// Specialized experiment kinds; each acceptance criterion is one of these
/// plus parameters, so a single config file reproduces it.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ExperimentSpec {
    /// Empirical product survival vs the equal-index prediction
    /// c z^-alpha (ln z)^(k1+k2+1).
    ProductTailCheck { draws: u64, thresholds: Vec<f64>, tolerance: f64 },
    /// Closed-form monomial indices vs the index calculus over random
    /// monomials, plus fold-order self-consistency of the constants.
    MonomialConsistency { cases: u64, max_arity: usize, max_exponent: u32, max_k: u32 },
    /// The negative-k product diagnostic: z^alpha P{X1 X2 > z}/ln ln z
    /// against 2 c1 c2 alpha.
    LoglogCheck { draws: u64, thresholds: Vec<f64>, c1: f64, c2: f64, alpha: f64, tolerance: f64 },
    /// Coloring validity, factorization bijection and coprime density.
    DecompositionCheck { ells: Vec<u64>, coloring_n: u64, factor_bound: u64, density_tolerance: f64 },
    /// Classical stable limit: KS against the reference sampler and CF
    /// distance against the predicted exponent.
    StableLimitCheck {
        n: u64,
        replicates: u64,
        reference_draws: u64,
        ks_tolerance: f64,
        cf_tolerance: f64,
    },
    /// Cluster constant vs 2^alpha times the single-term constant, the
    /// adjacent joint-jump rate, and the rearrangement bound.
    ClusterCheck {
        n: u64,
        replicates: u64,
        k_blocks: Vec<u64>,
        delta: f64,
        tolerance: f64,
        bound_replicates: u64,
        bound_n: u64,
    },
    /// Increment dependence detection plus null calibration.
    DependenceCheck {
        n: u64,
        replicates: u64,
        permutations: u32,
        level: f64,
        null_meta_replicates: u64,
        null_replicates: u64,
        null_n: u64,
        max_null_rejections: u64,
    },
    /// Monotone decrease of the q-truncation and block-gap sup distances.
    TrendCheck { n: u64, replicates: u64, q_list: Vec<usize>, k_block_list: Vec<u64> },
    /// a_N/b_N decay and the weak law of large numbers for alpha* > 1.
    CenteringCheck { n_list: Vec<u64>, lln_n: u64, lln_replicates: u64 },
    /// Re-runs every listed config's payload at two thread counts and
    /// compares the serialized bytes.
    DeterminismCheck { thread_counts: [usize; 2], configs: Vec<String> },
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, String> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| e.to_string())?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.schema != SCHEMA_VERSION {
            return Err(format!(
                "unsupported schema version {} (expected {SCHEMA_VERSION})",
                self.schema
            ));
        }
        if let Some(t) = &self.tail {
            t.to_spec()?;
            if let Some(w) = t.body_width {
                if !(w > 0.0 && w <= 1.0) {
                    return Err(format!("body_width must lie in (0, 1], got {w}"));
                }
            }
        }
        if let Some(list) = &self.variable_tails {
            for t in list {
                t.to_spec()?;
            }
        }
        if let Some(p) = &self.polynomial {
            p.to_polynomial()?;
        }
        if let Some(s) = &self.simulation {
            if s.n_list.is_empty() {
                return Err("simulation.n_list must be nonempty".into());
            }
            if s.n_list.iter().any(|&n| n < 2) {
                return Err("simulation.n_list entries must be >= 2".into());
            }
            if s.horizon <= 0.0 || !s.horizon.is_finite() {
                return Err("simulation.horizon must be positive".into());
            }
            if s.replicates < 1 {
                return Err("simulation.replicates must be >= 1".into());
            }
            if self.polynomial.is_none() || self.tail.is_none() {
                return Err("simulation requires [polynomial] and [tail]".into());
            }
        }
        if let Some(d) = &self.diagnostics {
            if let Some(j) = &d.joint_jumps {
                if j.delta <= 0.0 {
                    return Err("joint_jumps.delta must be positive".into());
                }
            }
        }
        Ok(())
    }

    /// Default body for samplers built from this config.
    pub fn body(&self) -> BodyConfig {
        BodyConfig::Uniform
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_unknown_keys() {
        let text = r#"
schema = 1
seed = 1
frobnicate = true
"#;
        assert!(ExperimentConfig::from_toml_str(text).is_err());
    }

    #[test]
    fn rejects_invalid_alpha() {
        let text = r#"
schema = 1
seed = 1
[tail]
alpha = 2.5
k = 0.0
c_plus = 1.0
c_minus = 1.0
"#;
        let err = ExperimentConfig::from_toml_str(text).unwrap_err();
        assert!(err.contains("alpha"), "{err}");
    }

    #[test]
    fn parses_minimal_simulation() {
        let text = r#"
schema = 1
seed = 42
[polynomial]
arity = 1
terms = [{ exponents = [1.0], coefficient = 1.0 }]
[tail]
alpha = 1.5
k = 0.0
c_plus = 0.5
c_minus = 0.5
[simulation]
qcase = "l-dep"
n_list = [1000]
replicates = 10
"#;
        let cfg = ExperimentConfig::from_toml_str(text).unwrap();
        assert_eq!(cfg.seed, 42);
        assert_eq!(cfg.simulation.as_ref().unwrap().n_list, vec![1000]);
    }
}
