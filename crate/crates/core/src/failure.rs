//! Limit-state function, failure-probability estimators (plain Monte Carlo,
//! importance sampling, self-adaptive importance sampling), and the SAIS
//! proposal-adaptation loop, including the Gaussian-mixture variant.
//!
//! The limit-state function is `g(x) = Q(x) - eps_r` with `Q(x) = |r(x)|`
//! (or its causally weighted form); the failure region is `{g > 0}` and the
//! failure probability is its prior measure.

use serde::{Deserialize, Serialize};

use crate::distributions::{fit_gmm_em, fit_moments, fit_weighted_center, Proposal};
use crate::domain::DomainSpec;
use crate::error::{Error, Result};
use crate::network::Network;
use crate::problems::PdeProblem;
use crate::rng::derive_seed;
use crate::training::{causal_weights, slab_index, CausalConfig, TrainingSet};

/// IS weights above this flag the estimate rather than fail it.
pub const WEIGHT_WARN_THRESHOLD: f64 = 1e6;

/// Residual tolerance plus the performance function it thresholds.
pub struct LimitState<'a> {
    eps_r: f64,
    q: Box<dyn Fn(&[f64]) -> f64 + Sync + 'a>,
}

impl<'a> LimitState<'a> {
    /// Build from an arbitrary performance function `Q >= 0`.
    pub fn new(eps_r: f64, q: impl Fn(&[f64]) -> f64 + Sync + 'a) -> Result<Self> {
        if !(eps_r > 0.0) {
            return Err(Error::config("residual tolerance must be positive"));
        }
        Ok(LimitState {
            eps_r,
            q: Box::new(q),
        })
    }

    /// The standard PINN limit state: `Q(x) = |r(x; theta)|`.
    pub fn from_network(net: &'a Network, problem: &'a PdeProblem, eps_r: f64) -> Result<Self> {
        Self::new(eps_r, move |x: &[f64]| {
            problem.residual(net, x).map(f64::abs).unwrap_or(f64::NAN)
        })
    }

    pub fn eps_r(&self) -> f64 {
        self.eps_r
    }

    /// g(x) = Q(x) - eps_r; failure where positive.
    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.q)(x) - self.eps_r
    }
}

/// Causal limit state: `Q(x, t) = w_i |r(x, t)|` where `i` is the slab of `t`
/// and the weights come from the current slab losses of the training set.
pub fn causal_limit_state<'a>(
    net: &'a Network,
    problem: &'a PdeProblem,
    ts: &TrainingSet,
    cfg: &CausalConfig,
    eps_r: f64,
) -> Result<LimitState<'a>> {
    let time_index = problem
        .time_index
        .ok_or_else(|| Error::config("causal limit state requires a time coordinate"))?;
    let range = problem.time_range.unwrap_or((0.0, 1.0));
    let n_slabs = cfg.n_slabs;
    if n_slabs < 1 {
        return Err(Error::config("causal limit state needs at least one slab"));
    }

    // Current slab losses from the training set drive the weights.
    let mut sums = vec![0.0; n_slabs];
    let mut counts = vec![0usize; n_slabs];
    for x in &ts.collocation {
        let r = problem.residual(net, x)?;
        let i = slab_index(x[time_index], range, n_slabs);
        sums[i] += r * r;
        counts[i] += 1;
    }
    let losses: Vec<f64> = sums
        .iter()
        .zip(&counts)
        .map(|(&s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
        .collect();
    let weights = causal_weights(&losses, cfg.epsilon)?;

    LimitState::new(eps_r, move |x: &[f64]| {
        let w = weights[slab_index(x[time_index], range, n_slabs)];
        let r = problem.residual(net, x).unwrap_or(f64::NAN);
        w * r.abs()
    })
}

/// Plain Monte Carlo estimate of the failure probability under the prior.
pub fn pf_mc(ls: &LimitState, prior: &Proposal, n: usize, seed: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::config("Monte Carlo estimator needs n >= 1"));
    }
    let draws = prior.sample(n, seed)?;
    let hits = draws.iter().filter(|x| ls.eval(x) > 0.0).count();
    Ok(hits as f64 / n as f64)
}

/// Importance-sampling estimate with diagnostics.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct IsEstimate {
    pub p_hat: f64,
    /// Sample standard error of the weighted indicator mean.
    pub std_error: f64,
    pub max_weight: f64,
    /// Set when any weight exceeded [`WEIGHT_WARN_THRESHOLD`].
    pub weight_warning: bool,
    pub n_failing: usize,
}

fn is_estimate_from_draws(
    ls: &LimitState,
    prior: &Proposal,
    proposal: &Proposal,
    draws: &[Vec<f64>],
) -> Result<(IsEstimate, Vec<Vec<f64>>)> {
    let n = draws.len() as f64;
    let mut terms = Vec::with_capacity(draws.len());
    let mut failing = Vec::new();
    let mut max_weight = 0.0_f64;
    for x in draws {
        if ls.eval(x) > 0.0 {
            let w_prior = prior.density(x);
            let h = proposal.density(x);
            if h <= 0.0 {
                if w_prior > 0.0 {
                    return Err(Error::SupportViolation(x.clone()));
                }
                terms.push(0.0);
                continue;
            }
            let w = w_prior / h;
            max_weight = max_weight.max(w);
            terms.push(w);
            failing.push(x.clone());
        } else {
            terms.push(0.0);
        }
    }
    let p_hat: f64 = terms.iter().sum::<f64>() / n;
    let var = if draws.len() > 1 {
        terms.iter().map(|t| (t - p_hat) * (t - p_hat)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Ok((
        IsEstimate {
            p_hat,
            std_error: (var / n).sqrt(),
            max_weight,
            weight_warning: max_weight > WEIGHT_WARN_THRESHOLD,
            n_failing: failing.len(),
        },
        failing,
    ))
}

/// Importance-sampling estimate of the failure probability: draws from
/// `proposal`, reweights failing draws by `prior/proposal`.
pub fn pf_is(
    ls: &LimitState,
    prior: &Proposal,
    proposal: &Proposal,
    n: usize,
    seed: u64,
) -> Result<IsEstimate> {
    if n == 0 {
        return Err(Error::config("importance sampling needs n >= 1"));
    }
    let draws = proposal.sample(n, seed)?;
    let (est, _) = is_estimate_from_draws(ls, prior, proposal, &draws)?;
    Ok(est)
}

/// Proposal family used by SAIS.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProposalModel {
    TruncatedGaussian,
    Gmm,
}

/// SAIS hyperparameters. Paper defaults: `N1 = 300`, `p0 = 0.1`,
/// `N2 = 1000`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SaisConfig {
    pub n1: usize,
    pub n2: usize,
    pub p0: f64,
    pub max_rounds: usize,
    pub model: ProposalModel,
    /// Mixture size in `Gmm` mode.
    pub gmm_components: usize,
}

impl Default for SaisConfig {
    fn default() -> Self {
        SaisConfig {
            n1: 300,
            n2: 1000,
            p0: 0.1,
            max_rounds: 20,
            model: ProposalModel::TruncatedGaussian,
            gmm_components: 2,
        }
    }
}

impl SaisConfig {
    /// Elite count `N_p = floor(p0 N1)`.
    pub fn n_elite(&self) -> usize {
        (self.p0 * self.n1 as f64).floor() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SaisTermination {
    /// A round produced at least `N_p` failing samples.
    EnoughFailures,
    /// The round budget ran out; the final fit used the top `N_p` anyway.
    MaxRounds,
}

/// Per-round refinement record for the SAIS trace.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SaisRound {
    pub round: usize,
    pub n_eta: usize,
    /// Nominal mean and covariance diagonal of the proposal used this round.
    pub mu: Vec<f64>,
    pub sigma_diag: Vec<f64>,
}

/// Output of one SAIS run.
#[derive(Debug, Clone)]
pub struct SaisResult {
    /// Failure-probability estimate from the final importance sample.
    pub p_hat: f64,
    /// Failing draws among the final `N2`; these become collocation points.
    pub adaptive_points: Vec<Vec<f64>>,
    /// The fitted approximately-optimal proposal.
    pub final_proposal: Proposal,
    pub iterations_used: usize,
    pub terminated_by: SaisTermination,
    pub rounds: Vec<SaisRound>,
    pub estimate: IsEstimate,
}

/// Self-adaptive importance sampling: iteratively refines a truncated
/// Gaussian (or mixture) proposal toward the failure region, then estimates
/// the failure probability by importance sampling from the fitted proposal.
///
/// Each round draws `N1` points from the current proposal and sorts them by
/// limit-state value, descending, ties by draw index. With `N_eta` failing
/// points and elite minimum `N_p = floor(p0 N1)`: if `N_eta < N_p` the
/// proposal is refitted from the top `N_p` points and the loop continues;
/// otherwise the loop stops and the final fit uses all `N_eta` failing
/// points (`N_p` is the minimum fit size, so the fit never uses fewer).
pub fn sais(
    ls: &LimitState,
    prior: &Proposal,
    domain: &DomainSpec,
    cfg: &SaisConfig,
    seed: u64,
) -> Result<SaisResult> {
    if cfg.n1 < 2 || cfg.n2 < 1 {
        return Err(Error::config("SAIS needs N1 >= 2 and N2 >= 1"));
    }
    if !(cfg.p0 > 0.0 && cfg.p0 < 1.0) {
        return Err(Error::config("SAIS needs 0 < p0 < 1"));
    }
    let n_p = cfg.n_elite();
    if n_p == 0 {
        return Err(Error::config(
            "SAIS elite count floor(p0 N1) must be at least 1",
        ));
    }
    if cfg.max_rounds == 0 {
        return Err(Error::config("SAIS needs at least one round"));
    }

    let mut proposal = prior.clone();
    let mut rounds = Vec::new();
    let mut terminated = SaisTermination::MaxRounds;
    let mut elites: Vec<Vec<f64>> = Vec::new();
    let mut iterations = 0;

    for k in 1..=cfg.max_rounds {
        iterations = k;
        let draws = proposal.sample(cfg.n1, derive_seed(seed, &[k as u64, 0]))?;
        let g: Vec<f64> = draws.iter().map(|x| ls.eval(x)).collect();
        let mut order: Vec<usize> = (0..draws.len()).collect();
        // Descending by g, ties by original draw index.
        order.sort_by(|&a, &b| g[b].total_cmp(&g[a]).then(a.cmp(&b)));
        let n_eta = g.iter().filter(|&&v| v > 0.0).count();

        let (mu, sigma_diag) = proposal.mean_and_cov_diag();
        rounds.push(SaisRound {
            round: k,
            n_eta,
            mu,
            sigma_diag,
        });

        if n_eta >= n_p {
            terminated = SaisTermination::EnoughFailures;
            elites = order[..n_eta].iter().map(|&i| draws[i].clone()).collect();
            break;
        }
        elites = order[..n_p].iter().map(|&i| draws[i].clone()).collect();
        if k == cfg.max_rounds {
            break;
        }
        // Refine the intermediate proposal from the elites.
        proposal = match cfg.model {
            ProposalModel::TruncatedGaussian => {
                let (mu, sigma) = fit_moments(&elites)?;
                Proposal::truncated_gaussian(mu, sigma, domain.clone(), derive_seed(seed, &[k as u64, 1]))?
            }
            ProposalModel::Gmm => fit_gmm_em(
                &elites,
                cfg.gmm_components,
                derive_seed(seed, &[k as u64, 2]),
                200,
                1e-8,
            )?
            .into_proposal(Some(domain.clone()), derive_seed(seed, &[k as u64, 1]))?,
        };
    }

    // Final fit of the approximately-optimal proposal from the last round's
    // elite points, then the importance-sampling estimate.
    let final_proposal = match cfg.model {
        ProposalModel::TruncatedGaussian => {
            let (mu_opt, sigma_opt) = fit_weighted_center(&elites, |x| prior.density(x))?;
            Proposal::truncated_gaussian(mu_opt, sigma_opt, domain.clone(), derive_seed(seed, &[0, 3]))?
        }
        ProposalModel::Gmm => fit_gmm_em(
            &elites,
            cfg.gmm_components,
            derive_seed(seed, &[0, 4]),
            200,
            1e-8,
        )?
        .into_proposal(Some(domain.clone()), derive_seed(seed, &[0, 3]))?,
    };

    let draws = final_proposal.sample(cfg.n2, derive_seed(seed, &[0, 5]))?;
    let (estimate, adaptive_points) = is_estimate_from_draws(ls, prior, &final_proposal, &draws)?;

    Ok(SaisResult {
        p_hat: estimate.p_hat,
        adaptive_points,
        final_proposal,
        iterations_used: iterations,
        terminated_by: terminated,
        rounds,
        estimate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square_prior() -> Proposal {
        Proposal::uniform_box(vec![(-1.0, 1.0), (-1.0, 1.0)]).unwrap()
    }

    #[test]
    fn lsf_arithmetic() {
        let ls = LimitState::new(0.1, |_: &[f64]| 0.2).unwrap();
        assert!((ls.eval(&[0.0]) - 0.1).abs() < 1e-15);
        let ls = LimitState::new(0.1, |_: &[f64]| 0.1).unwrap();
        assert_eq!(ls.eval(&[0.0]), 0.0);
        let ls = LimitState::new(0.1, |_: &[f64]| 0.0).unwrap();
        assert_eq!(ls.eval(&[0.0]), -0.1);
        assert!(LimitState::new(0.0, |_: &[f64]| 0.0).is_err());
    }

    #[test]
    fn pf_mc_edge_cases() {
        let prior = unit_square_prior();
        // Residual identically zero: never fails.
        let safe = LimitState::new(0.5, |_: &[f64]| 0.0).unwrap();
        assert_eq!(pf_mc(&safe, &prior, 500, 1).unwrap(), 0.0);
        // Always failing, single draw.
        let fail = LimitState::new(0.5, |_: &[f64]| 1.0).unwrap();
        assert_eq!(pf_mc(&fail, &prior, 1, 1).unwrap(), 1.0);
        assert!(pf_mc(&fail, &prior, 0, 1).is_err());
    }

    #[test]
    fn pf_mc_half_space() {
        let prior = unit_square_prior();
        let ls = LimitState::new(1.0, |x: &[f64]| 1.0 + x[0]).unwrap(); // g = x0
        let n = 4000;
        let p = pf_mc(&ls, &prior, n, 7).unwrap();
        let se = (0.25 / n as f64).sqrt();
        assert!((p - 0.5).abs() < 3.0 * se, "p = {p}");
    }

    #[test]
    fn pf_is_equals_pf_mc_when_proposal_is_prior() {
        let prior = unit_square_prior();
        let ls = LimitState::new(1.0, |x: &[f64]| 1.0 + x[0]).unwrap();
        let mc = pf_mc(&ls, &prior, 1000, 99).unwrap();
        let is = pf_is(&ls, &prior, &prior, 1000, 99).unwrap();
        // Same seed, same draw sequence, unit weights: exactly equal.
        assert_eq!(mc, is.p_hat);
        assert!(!is.weight_warning);
    }

    #[test]
    fn pf_is_normal_tail_matches_closed_form() {
        // Prior N(0,1), failure {x > 1}, proposal N(2,1):
        // P = Phi(-1) = 0.15865525393145707.
        let prior = Proposal::gaussian(vec![0.0], vec![1.0]).unwrap();
        let proposal = Proposal::gaussian(vec![2.0], vec![1.0]).unwrap();
        let ls = LimitState::new(1.0, |x: &[f64]| x[0].max(0.0)).unwrap(); // g > 0 iff x > 1
        let est = pf_is(&ls, &prior, &proposal, 4000, 5).unwrap();
        let exact = 0.15865525393145707;
        assert!(
            (est.p_hat - exact).abs() < 3.0 * est.std_error,
            "p = {} +- {}",
            est.p_hat,
            est.std_error
        );
        // No failing samples: estimate 0.
        let none = LimitState::new(1.0, |_: &[f64]| 0.0).unwrap();
        assert_eq!(pf_is(&none, &prior, &proposal, 100, 5).unwrap().p_hat, 0.0);
    }

    #[test]
    fn sais_config_defaults_match_paper() {
        let cfg = SaisConfig::default();
        assert_eq!(cfg.n1, 300);
        assert_eq!(cfg.n2, 1000);
        assert!((cfg.p0 - 0.1).abs() < 1e-15);
        assert_eq!(cfg.n_elite(), 30);
    }

    #[test]
    fn sais_zero_failure_region_returns_zero() {
        let prior = unit_square_prior();
        let dom = DomainSpec::unit_box(2);
        let ls = LimitState::new(0.1, |_: &[f64]| 0.0).unwrap();
        let cfg = SaisConfig {
            max_rounds: 3,
            ..Default::default()
        };
        let res = sais(&ls, &prior, &dom, &cfg, 11).unwrap();
        assert_eq!(res.p_hat, 0.0);
        assert!(res.adaptive_points.is_empty());
        assert_eq!(res.terminated_by, SaisTermination::MaxRounds);
        assert_eq!(res.iterations_used, 3);
    }

    #[test]
    fn sais_disk_matches_exact_area_ratio() {
        // g = 0.5 - |x - c| on the uniform square: P = pi/16.
        let prior = unit_square_prior();
        let dom = DomainSpec::unit_box(2);
        let ls = LimitState::new(0.5, |x: &[f64]| {
            let d = ((x[0] - 0.5).powi(2) + (x[1] - 0.5).powi(2)).sqrt();
            (1.0 - d).max(0.0)
        })
        .unwrap(); // g = 0.5 - d
        let exact = std::f64::consts::PI / 16.0;
        let cfg = SaisConfig::default();
        let res = sais(&ls, &prior, &dom, &cfg, 21).unwrap();
        assert!(
            (res.p_hat - exact).abs() < 3.0 * res.estimate.std_error,
            "p = {} +- {} vs {exact}",
            res.p_hat,
            res.estimate.std_error
        );
        // Every adaptive point actually fails.
        for p in &res.adaptive_points {
            assert!(ls.eval(p) > 0.0);
        }
        assert_eq!(res.terminated_by, SaisTermination::EnoughFailures);
    }

    #[test]
    fn sais_small_disk_refines_and_targets() {
        // Failure disk of radius 0.15: P ~ 0.0177 < p0, so refinement rounds
        // are required; the in-failure fraction must not decrease.
        let prior = unit_square_prior();
        let dom = DomainSpec::unit_box(2);
        let c = (0.5, 0.5);
        let ls = LimitState::new(0.15, |x: &[f64]| {
            let d = ((x[0] - c.0).powi(2) + (x[1] - c.1).powi(2)).sqrt();
            (0.3 - d).max(0.0)
        })
        .unwrap(); // g = 0.15 - d
        let exact = std::f64::consts::PI * 0.15 * 0.15 / 4.0;

        let mut fractions_by_round: Vec<Vec<f64>> = Vec::new();
        let mut errs = Vec::new();
        for seed in 0..5 {
            let res = sais(&ls, &prior, &dom, &SaisConfig::default(), 100 + seed).unwrap();
            let fr: Vec<f64> = res
                .rounds
                .iter()
                .map(|r| r.n_eta as f64 / 300.0)
                .collect();
            fractions_by_round.push(fr);
            errs.push((res.p_hat - exact).abs() / res.estimate.std_error.max(1e-12));
        }
        // Median over seeds of per-round fractions is non-decreasing.
        let max_rounds = fractions_by_round.iter().map(Vec::len).max().unwrap();
        let mut med = Vec::new();
        for r in 0..max_rounds {
            let mut vals: Vec<f64> = fractions_by_round
                .iter()
                .filter_map(|f| f.get(r).copied())
                .collect();
            vals.sort_by(f64::total_cmp);
            med.push(vals[vals.len() / 2]);
        }
        for w in med.windows(2) {
            assert!(w[1] >= w[0] - 1e-12, "targeting regressed: {med:?}");
        }
        // Majority of seeds within 3 standard errors.
        let ok = errs.iter().filter(|&&e| e < 3.0).count();
        assert!(ok >= 4, "errs {errs:?}");
    }

    #[test]
    fn sais_rejects_bad_config() {
        let prior = unit_square_prior();
        let dom = DomainSpec::unit_box(2);
        let ls = LimitState::new(0.1, |_: &[f64]| 0.0).unwrap();
        let bad = SaisConfig {
            n1: 5,
            p0: 0.1,
            ..Default::default()
        };
        // floor(0.5) = 0 elites.
        assert!(sais(&ls, &prior, &dom, &bad, 0).is_err());
        let bad = SaisConfig {
            p0: 1.5,
            ..Default::default()
        };
        assert!(sais(&ls, &prior, &dom, &bad, 0).is_err());
    }

    #[test]
    fn sais_gmm_covers_two_failure_islands() {
        // Two disks around (+-0.5, +-0.5); the mixture fit should place one
        // component near each.
        let prior = unit_square_prior();
        let dom = DomainSpec::unit_box(2);
        let ls = LimitState::new(0.2, |x: &[f64]| {
            let d1 = ((x[0] - 0.5).powi(2) + (x[1] - 0.5).powi(2)).sqrt();
            let d2 = ((x[0] + 0.5).powi(2) + (x[1] + 0.5).powi(2)).sqrt();
            (0.45 - d1.min(d2)).max(0.0)
        })
        .unwrap(); // failure: within 0.25 of either center
        let cfg = SaisConfig {
            model: ProposalModel::Gmm,
            gmm_components: 2,
            ..Default::default()
        };
        let res = sais(&ls, &prior, &dom, &cfg, 33).unwrap();
        let comps = match &res.final_proposal {
            Proposal::Gmm { components, .. } => components,
            other => panic!("expected mixture, got {other:?}"),
        };
        assert_eq!(comps.len(), 2);
        let mu0 = comps[0].normal.mu();
        let mu1 = comps[1].normal.mu();
        let dist = |m: &[f64], c: (f64, f64)| ((m[0] - c.0).powi(2) + (m[1] - c.1).powi(2)).sqrt();
        let (a, b) = if mu0[0] > 0.0 { (mu0, mu1) } else { (mu1, mu0) };
        assert!(dist(a, (0.5, 0.5)) < 0.25, "{a:?}");
        assert!(dist(b, (-0.5, -0.5)) < 0.25, "{b:?}");
        // Exact probability: two disjoint disks of radius 0.25 in area 4.
        let exact = 2.0 * std::f64::consts::PI * 0.25 * 0.25 / 4.0;
        assert!(
            (res.p_hat - exact).abs() < 4.0 * res.estimate.std_error,
            "p = {} vs {exact}",
            res.p_hat
        );
    }

    #[test]
    fn sais_is_deterministic_per_seed() {
        let prior = unit_square_prior();
        let dom = DomainSpec::unit_box(2);
        let ls = LimitState::new(0.5, |x: &[f64]| {
            let d = ((x[0] - 0.5).powi(2) + (x[1] - 0.5).powi(2)).sqrt();
            (1.0 - d).max(0.0)
        })
        .unwrap();
        let a = sais(&ls, &prior, &dom, &SaisConfig::default(), 5).unwrap();
        let b = sais(&ls, &prior, &dom, &SaisConfig::default(), 5).unwrap();
        assert_eq!(a.p_hat, b.p_hat);
        assert_eq!(a.adaptive_points, b.adaptive_points);
    }

    #[test]
    fn causal_limit_state_weights_late_slabs() {
        use crate::problems::allen_cahn_1d;
        let p = allen_cahn_1d();
        // Constant net u = 2: r = 30 everywhere, so slab losses are [900, ..].
        let mut net = Network::init(&[2, 4, 1], 0).unwrap();
        let n = net.param_count();
        net.params_mut().fill(0.0);
        net.params_mut()[n - 1] = 2.0;
        let colloc = vec![vec![0.0, 0.25], vec![0.0, 0.75]];
        let ts = TrainingSet::new(&p, colloc, vec![vec![0.0, 0.0]]).unwrap();

        // eps = 0: identical to the plain limit state.
        let plain = LimitState::from_network(&net, &p, 0.5).unwrap();
        let causal0 = causal_limit_state(
            &net,
            &p,
            &ts,
            &CausalConfig {
                n_slabs: 2,
                epsilon: 0.0,
            },
            0.5,
        )
        .unwrap();
        for x in [[0.1, 0.2], [0.3, 0.9]] {
            assert_eq!(plain.eval(&x), causal0.eval(&x));
        }

        // Huge accumulated first-slab loss: later times effectively safe.
        let causal = causal_limit_state(
            &net,
            &p,
            &ts,
            &CausalConfig {
                n_slabs: 2,
                epsilon: 1.0,
            },
            0.5,
        )
        .unwrap();
        assert!(causal.eval(&[0.0, 0.25]) > 0.0); // slab 1: weight 1
        assert!(causal.eval(&[0.0, 0.75]) < 0.0); // slab 2: weight exp(-900)

        // Hand-set weights (1, e^-1) with residual 1, eps_r = 0.5:
        // g > 0 in slab 1 (0.5), g < 0 in slab 2 (e^-1 - 0.5 < 0).
        let ls = LimitState::new(0.5, |x: &[f64]| {
            let w = if x[1] < 0.5 { 1.0 } else { (-1.0_f64).exp() };
            w * 1.0
        })
        .unwrap();
        assert!(ls.eval(&[0.0, 0.2]) > 0.0);
        assert!(ls.eval(&[0.0, 0.8]) < 0.0);

        // Missing time coordinate errors.
        let spatial = crate::problems::poisson_peak_2d();
        let ts2 = TrainingSet::new(&spatial, vec![vec![0.0, 0.0]], vec![vec![1.0, 0.0]]).unwrap();
        assert!(causal_limit_state(
            &net,
            &spatial,
            &ts2,
            &CausalConfig {
                n_slabs: 2,
                epsilon: 1.0
            },
            0.5
        )
        .is_err());
    }

    #[test]
    fn pf_estimates_stay_in_bounds() {
        let prior = unit_square_prior();
        for seed in 0..20 {
            let ls = LimitState::new(0.3, move |x: &[f64]| (x[0] * (seed as f64 / 7.0)).abs())
                .unwrap();
            let p = pf_mc(&ls, &prior, 200, seed).unwrap();
            assert!((0.0..=1.0).contains(&p));
            let est = pf_is(&ls, &prior, &prior, 200, seed).unwrap();
            assert!(est.p_hat >= 0.0);
        }
    }
}
