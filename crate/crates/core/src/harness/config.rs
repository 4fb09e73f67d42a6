//! Experiment configuration: TOML schema, problem catalog lookup, priors,
//! and initial point sampling. CLI flags override file values, which
//! override defaults.

use serde::{Deserialize, Serialize};

use crate::adaptive::{AdaptiveConfig, Enrichment, PointBudget};
use crate::distributions::Proposal;
use crate::domain::DomainSpec;
use crate::error::{Error, Result};
use crate::failure::SaisConfig;
use crate::problems::{
    allen_cahn_1d, burgers_1d, heat_unbounded_1d, poisson_highdim, poisson_peak_2d,
    poisson_two_peak_2d, poisson_unbounded_2d, PdeProblem,
};
use crate::rng::{derive_seed, rng_from};
use crate::training::{TrainConfig, TrainingSet};
use rand::Rng;

fn default_n_seeds() -> usize {
    3
}

fn default_grid_n() -> usize {
    256
}

fn default_pool_size() -> usize {
    10_000
}

fn default_m() -> usize {
    200
}

fn default_pf_samples() -> usize {
    10_000
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RarSection {
    #[serde(default = "default_pool_size")]
    pub pool_size: usize,
    #[serde(default = "default_m")]
    pub m: usize,
}

impl Default for RarSection {
    fn default() -> Self {
        RarSection {
            pool_size: default_pool_size(),
            m: default_m(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UniformSection {
    #[serde(default = "default_m")]
    pub m: usize,
    #[serde(default = "default_pf_samples")]
    pub pf_samples: usize,
}

impl Default for UniformSection {
    fn default() -> Self {
        UniformSection {
            m: default_m(),
            pf_samples: default_pf_samples(),
        }
    }
}

/// The `[adaptive]` section.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdaptiveSection {
    pub eps_r: f64,
    pub eps_p: f64,
    pub max_outer: usize,
    /// "sais" | "rar" | "uniform".
    pub strategy: String,
    #[serde(default)]
    pub sais: SaisConfig,
    #[serde(default)]
    pub rar: RarSection,
    #[serde(default)]
    pub uniform: UniformSection,
}

/// Optional Gaussian prior override (defaults are per problem).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PriorSpec {
    pub mu: Vec<f64>,
    /// Isotropic covariance scale: Sigma = sigma2 * I.
    pub sigma2: f64,
}

/// One experiment: problem, network, budgets, adaptive settings, evaluation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub problem: String,
    /// Spatial dimension for `poisson_highdim`.
    #[serde(default)]
    pub dim: Option<usize>,
    /// Full widths, input through scalar output.
    pub widths: Vec<usize>,
    pub n_collocation: usize,
    pub n_boundary: usize,
    /// Box for the initial collocation draw (defaults per problem).
    #[serde(default)]
    pub init_box: Option<Vec<(f64, f64)>>,
    pub master_seed: u64,
    #[serde(default = "default_n_seeds")]
    pub n_seeds: usize,
    pub output_dir: String,
    pub train: TrainConfig,
    pub adaptive: AdaptiveSection,
    /// Evaluation tensor-grid resolution per axis (2d problems).
    #[serde(default = "default_grid_n")]
    pub grid_n: usize,
    #[serde(default)]
    pub prior: Option<PriorSpec>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        problem_by_id(&self.problem, self.dim)?;
        if self.n_collocation == 0 || self.n_boundary == 0 {
            return Err(Error::config("point counts must be positive"));
        }
        if self.n_seeds == 0 {
            return Err(Error::config("n_seeds must be positive"));
        }
        match self.adaptive.strategy.as_str() {
            "sais" | "rar" | "uniform" => Ok(()),
            other => Err(Error::config(format!("unknown strategy '{other}'"))),
        }
    }

    pub fn build_problem(&self) -> Result<PdeProblem> {
        let p = problem_by_id(&self.problem, self.dim)?;
        if self.widths.first() != Some(&p.dim) {
            return Err(Error::config(format!(
                "network input width {:?} does not match problem dimension {}",
                self.widths.first(),
                p.dim
            )));
        }
        Ok(p)
    }

    /// Enrichment settings for a given strategy name, with an optional
    /// per-round budget override for budget-matched baselines.
    pub fn enrichment_for(
        &self,
        strategy: &str,
        budget: Option<Vec<usize>>,
    ) -> Result<Enrichment> {
        let m_of = |fixed: usize| match &budget {
            Some(b) => PointBudget::PerRound(b.clone()),
            None => PointBudget::Fixed(fixed),
        };
        match strategy {
            "sais" => Ok(Enrichment::Sais(self.adaptive.sais.clone())),
            "rar" => Ok(Enrichment::Rar {
                pool_size: self.adaptive.rar.pool_size,
                m: m_of(self.adaptive.rar.m),
            }),
            "uniform" => Ok(Enrichment::Uniform {
                m: m_of(self.adaptive.uniform.m),
                pf_samples: self.adaptive.uniform.pf_samples,
            }),
            other => Err(Error::config(format!("unknown strategy '{other}'"))),
        }
    }

    /// Assemble the adaptive config for one seed and strategy.
    pub fn adaptive_config(
        &self,
        strategy: &str,
        seed: u64,
        budget: Option<Vec<usize>>,
    ) -> Result<AdaptiveConfig> {
        Ok(AdaptiveConfig {
            eps_r: self.adaptive.eps_r,
            eps_p: self.adaptive.eps_p,
            max_outer: self.adaptive.max_outer,
            enrichment: self.enrichment_for(strategy, budget)?,
            train: self.train.clone(),
            seed,
        })
    }
}

/// Problem catalog lookup.
pub fn problem_by_id(id: &str, dim: Option<usize>) -> Result<PdeProblem> {
    match id {
        "poisson_peak_2d" => Ok(poisson_peak_2d()),
        "poisson_two_peak_2d" => Ok(poisson_two_peak_2d()),
        "poisson_highdim" => Ok(poisson_highdim(dim.unwrap_or(9))),
        "poisson_unbounded_2d" => Ok(poisson_unbounded_2d()),
        "burgers_1d" => Ok(burgers_1d()),
        "heat_unbounded_1d" => Ok(heat_unbounded_1d()),
        "allen_cahn_1d" => Ok(allen_cahn_1d()),
        other => Err(Error::config(format!("unknown problem id '{other}'"))),
    }
}

/// Failure-estimation prior for a problem: uniform on box domains, a
/// (truncated) Gaussian with mu 0, Sigma = 3I on unbounded ones.
pub fn build_prior(
    problem: &PdeProblem,
    spec: Option<&PriorSpec>,
    z_seed: u64,
) -> Result<Proposal> {
    if let Some(s) = spec {
        let d = s.mu.len();
        let mut sigma = vec![0.0; d * d];
        for i in 0..d {
            sigma[i * d + i] = s.sigma2;
        }
        return Proposal::truncated_gaussian(s.mu.clone(), sigma, problem.domain.clone(), z_seed);
    }
    match &problem.domain {
        DomainSpec::Box { .. } => Proposal::uniform_on(&problem.domain),
        _ => {
            let d = problem.dim;
            let mut sigma = vec![0.0; d * d];
            for i in 0..d {
                sigma[i * d + i] = 3.0;
            }
            Proposal::truncated_gaussian(vec![0.0; d], sigma, problem.domain.clone(), z_seed)
        }
    }
}

/// Default initial-collocation sampling box per problem (the unbounded
/// problems start far from their peaks, as in the experiments).
pub fn default_init_box(problem: &PdeProblem) -> Vec<(f64, f64)> {
    match problem.name {
        "poisson_unbounded_2d" => vec![(-2.0, 2.0), (-2.0, 2.0)],
        "heat_unbounded_1d" => vec![(-6.0, 0.0), (0.0, 1.0)],
        _ => problem.domain.bounds().unwrap().to_vec(),
    }
}

/// Seeded initial training set: uniform collocation draw over the init box
/// (rejected against the domain), boundary points from the domain sampler.
pub fn initial_training_set(
    problem: &PdeProblem,
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<TrainingSet> {
    let init_box = cfg
        .init_box
        .clone()
        .unwrap_or_else(|| default_init_box(problem));
    if init_box.len() != problem.dim {
        return Err(Error::config("init_box dimension mismatch"));
    }
    let mut rng = rng_from(derive_seed(seed, &[1]));
    let mut colloc = Vec::with_capacity(cfg.n_collocation);
    let mut attempts = 0usize;
    while colloc.len() < cfg.n_collocation {
        attempts += 1;
        if attempts > 10_000 * cfg.n_collocation {
            return Err(Error::Sampling(
                "initial collocation box barely intersects the domain".into(),
            ));
        }
        let p: Vec<f64> = init_box
            .iter()
            .map(|&(lo, hi)| lo + (hi - lo) * rng.random::<f64>())
            .collect();
        if problem.domain.contains(&p) {
            colloc.push(p);
        }
    }
    let mut brng = rng_from(derive_seed(seed, &[2]));
    let boundary = problem.domain.sample_boundary(cfg.n_boundary, &mut brng)?;
    TrainingSet::new(problem, colloc, boundary)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
problem = "poisson_peak_2d"
widths = [2, 8, 1]
n_collocation = 50
n_boundary = 10
master_seed = 7
output_dir = "out/test"

[train]
steps = 100
lr = 1e-3
lambda = 1.0
history_every = 50

[adaptive]
eps_r = 0.1
eps_p = 0.1
max_outer = 3
strategy = "sais"
"#;

    #[test]
    fn toml_roundtrip_with_defaults() {
        let cfg = ExperimentConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(cfg.n_seeds, 3);
        assert_eq!(cfg.grid_n, 256);
        assert_eq!(cfg.adaptive.sais.n1, 300);
        assert_eq!(cfg.adaptive.rar.pool_size, 10_000);
        let echoed = toml::to_string(&cfg).unwrap();
        let back = ExperimentConfig::from_toml(&echoed).unwrap();
        assert_eq!(back.master_seed, cfg.master_seed);
        assert_eq!(back.adaptive.sais.n1, cfg.adaptive.sais.n1);
    }

    #[test]
    fn unknown_problem_and_strategy_rejected() {
        let bad = MINIMAL.replace("poisson_peak_2d", "laplace_42");
        assert!(ExperimentConfig::from_toml(&bad).is_err());
        let bad = MINIMAL.replace("\"sais\"", "\"dream\"");
        assert!(ExperimentConfig::from_toml(&bad).is_err());
    }

    #[test]
    fn catalog_covers_all_ids() {
        for id in [
            "poisson_peak_2d",
            "poisson_two_peak_2d",
            "poisson_highdim",
            "poisson_unbounded_2d",
            "burgers_1d",
            "heat_unbounded_1d",
            "allen_cahn_1d",
        ] {
            assert!(problem_by_id(id, None).is_ok(), "{id}");
        }
        assert_eq!(problem_by_id("poisson_highdim", Some(5)).unwrap().dim, 5);
    }

    #[test]
    fn priors_match_domains() {
        let peak = poisson_peak_2d();
        match build_prior(&peak, None, 0).unwrap() {
            Proposal::UniformBox { .. } => {}
            other => panic!("expected uniform, got {other:?}"),
        }
        let heat = heat_unbounded_1d();
        match build_prior(&heat, None, 0).unwrap() {
            Proposal::TruncatedGaussian { .. } => {}
            other => panic!("expected truncated Gaussian, got {other:?}"),
        }
    }

    #[test]
    fn initial_sets_respect_domains() {
        let cfg = ExperimentConfig::from_toml(MINIMAL).unwrap();
        let star_cfg = ExperimentConfig {
            problem: "poisson_unbounded_2d".into(),
            ..cfg.clone()
        };
        let p = star_cfg.build_problem().unwrap();
        let ts = initial_training_set(&p, &star_cfg, 3).unwrap();
        assert_eq!(ts.n_collocation(), 50);
        for pt in &ts.collocation {
            assert!(p.domain.contains(pt));
            assert!(pt[0].abs() <= 2.0 && pt[1].abs() <= 2.0);
        }
    }
}
