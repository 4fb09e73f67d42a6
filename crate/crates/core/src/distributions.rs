//! Sampleable, density-evaluable probability models: uniform-on-box,
//! multivariate Gaussian, truncated Gaussian restricted to a domain, and
//! Gaussian mixtures with EM fitting.
//!
//! Truncated kinds sample by rejection against the untruncated model and
//! normalize their density by a Monte Carlo estimate of the truncation
//! constant `Z = integral_domain N(x; mu, Sigma) dx` (cached at construction,
//! `N_Z` draws). On unbounded domains `Z = 1` exactly and no estimate is run.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::domain::DomainSpec;
use crate::error::{Error, Result};
use crate::linalg::{cholesky, forward_solve, log_det_from_chol, regularize_spd};
use crate::rng::rng_from;

/// Covariance eigenvalue floor; degenerate fits are lifted to this.
pub const JITTER_FLOOR: f64 = 1e-8;
/// Monte Carlo draws for truncation-constant estimates.
pub const TRUNCATION_MC_SAMPLES: usize = 20_000;
/// Rejection-sampling attempt cap per point.
pub const MAX_REJECTION_ATTEMPTS: usize = 10_000;

const LN_2PI: f64 = 1.837877066409345483560659472811;

/// Multivariate normal with cached Cholesky factor.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "MvNormalData", into = "MvNormalData")]
pub struct MvNormal {
    mu: Vec<f64>,
    sigma: Vec<f64>,
    #[serde(skip)]
    chol: Vec<f64>,
    #[serde(skip)]
    log_det: f64,
}

#[derive(Serialize, Deserialize)]
struct MvNormalData {
    mu: Vec<f64>,
    sigma: Vec<f64>,
}

impl From<MvNormal> for MvNormalData {
    fn from(m: MvNormal) -> Self {
        MvNormalData {
            mu: m.mu,
            sigma: m.sigma,
        }
    }
}

impl TryFrom<MvNormalData> for MvNormal {
    type Error = Error;
    fn try_from(d: MvNormalData) -> Result<Self> {
        MvNormal::new(d.mu, d.sigma)
    }
}

impl MvNormal {
    /// Build from mean and covariance; the covariance is symmetrized and
    /// lifted to the jitter floor, and must then be SPD.
    pub fn new(mu: Vec<f64>, mut sigma: Vec<f64>) -> Result<Self> {
        let d = mu.len();
        if sigma.len() != d * d {
            return Err(Error::Dimension {
                expected: d * d,
                got: sigma.len(),
            });
        }
        regularize_spd(&mut sigma, d, JITTER_FLOOR)?;
        let chol = cholesky(&sigma, d)
            .ok_or_else(|| Error::Linalg("covariance is not positive definite".into()))?;
        let log_det = log_det_from_chol(&chol, d);
        Ok(MvNormal {
            mu,
            sigma,
            chol,
            log_det,
        })
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn log_density(&self, x: &[f64]) -> f64 {
        let d = self.mu.len();
        let diff: Vec<f64> = x.iter().zip(&self.mu).map(|(a, b)| a - b).collect();
        let y = forward_solve(&self.chol, &diff, d);
        let quad: f64 = y.iter().map(|v| v * v).sum();
        -0.5 * (d as f64 * LN_2PI + self.log_det + quad)
    }

    pub fn density(&self, x: &[f64]) -> f64 {
        self.log_density(x).exp()
    }

    pub fn sample_into(&self, rng: &mut ChaCha8Rng, out: &mut Vec<f64>) {
        let d = self.mu.len();
        let z: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        out.clear();
        out.extend_from_slice(&self.mu);
        for i in 0..d {
            for j in 0..=i {
                out[i] += self.chol[i * d + j] * z[j];
            }
        }
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let mut out = Vec::new();
        self.sample_into(rng, &mut out);
        out
    }
}

/// One Gaussian-mixture component.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GmmComponent {
    pub weight: f64,
    pub normal: MvNormal,
}

/// A sampleable, density-evaluable proposal distribution.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Proposal {
    UniformBox {
        bounds: Vec<(f64, f64)>,
    },
    Gaussian {
        normal: MvNormal,
    },
    TruncatedGaussian {
        normal: MvNormal,
        domain: DomainSpec,
        /// MC estimate of the truncation constant and its sample count.
        z: f64,
        n_z: usize,
    },
    Gmm {
        components: Vec<GmmComponent>,
        domain: Option<DomainSpec>,
        z: f64,
        n_z: usize,
    },
}

impl Proposal {
    /// Uniform density over a finite axis-aligned box.
    pub fn uniform_box(bounds: Vec<(f64, f64)>) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::config("uniform box needs at least one dimension"));
        }
        let vol: f64 = bounds.iter().map(|&(lo, hi)| hi - lo).product();
        if !(vol.is_finite() && vol > 0.0) {
            return Err(Error::config(format!(
                "uniform box must have finite positive volume, got bounds {bounds:?}"
            )));
        }
        Ok(Proposal::UniformBox { bounds })
    }

    /// Uniform prior on a box domain.
    pub fn uniform_on(domain: &DomainSpec) -> Result<Self> {
        match domain.bounds() {
            Some(b) => Self::uniform_box(b.to_vec()),
            None => Err(Error::config(
                "uniform prior requires a finite box domain",
            )),
        }
    }

    pub fn gaussian(mu: Vec<f64>, sigma: Vec<f64>) -> Result<Self> {
        Ok(Proposal::Gaussian {
            normal: MvNormal::new(mu, sigma)?,
        })
    }

    /// Gaussian restricted to `domain`. The truncation constant is estimated
    /// once with `TRUNCATION_MC_SAMPLES` draws seeded by `z_seed`; on
    /// unbounded domains it is exactly 1.
    pub fn truncated_gaussian(
        mu: Vec<f64>,
        sigma: Vec<f64>,
        domain: DomainSpec,
        z_seed: u64,
    ) -> Result<Self> {
        let normal = MvNormal::new(mu, sigma)?;
        let (z, n_z) = estimate_truncation(&[(1.0, &normal)], &domain, z_seed)?;
        Ok(Proposal::TruncatedGaussian {
            normal,
            domain,
            z,
            n_z,
        })
    }

    /// Gaussian mixture, optionally restricted to a domain.
    pub fn gmm(
        components: Vec<GmmComponent>,
        domain: Option<DomainSpec>,
        z_seed: u64,
    ) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::config("mixture needs at least one component"));
        }
        let wsum: f64 = components.iter().map(|c| c.weight).sum();
        if (wsum - 1.0).abs() > 1e-9 || components.iter().any(|c| c.weight <= 0.0) {
            return Err(Error::config(format!(
                "mixture weights must be positive and sum to 1, got sum {wsum}"
            )));
        }
        let (z, n_z) = match &domain {
            Some(dom) => {
                let parts: Vec<(f64, &MvNormal)> =
                    components.iter().map(|c| (c.weight, &c.normal)).collect();
                estimate_truncation(&parts, dom, z_seed)?
            }
            None => (1.0, 0),
        };
        Ok(Proposal::Gmm {
            components,
            domain,
            z,
            n_z,
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            Proposal::UniformBox { bounds } => bounds.len(),
            Proposal::Gaussian { normal } => normal.dim(),
            Proposal::TruncatedGaussian { normal, .. } => normal.dim(),
            Proposal::Gmm { components, .. } => components[0].normal.dim(),
        }
    }

    /// Normalized density at `x`; zero outside the declared support.
    pub fn density(&self, x: &[f64]) -> f64 {
        match self {
            Proposal::UniformBox { bounds } => {
                let inside = bounds
                    .iter()
                    .zip(x)
                    .all(|(&(lo, hi), &xi)| xi >= lo && xi <= hi);
                if inside {
                    let vol: f64 = bounds.iter().map(|&(lo, hi)| hi - lo).product();
                    1.0 / vol
                } else {
                    0.0
                }
            }
            Proposal::Gaussian { normal } => normal.density(x),
            Proposal::TruncatedGaussian { normal, domain, z, .. } => {
                if domain.contains(x) {
                    normal.density(x) / z
                } else {
                    0.0
                }
            }
            Proposal::Gmm {
                components,
                domain,
                z,
                ..
            } => {
                if let Some(dom) = domain {
                    if !dom.contains(x) {
                        return 0.0;
                    }
                }
                let mix: f64 = components
                    .iter()
                    .map(|c| c.weight * c.normal.density(x))
                    .sum();
                mix / z
            }
        }
    }

    /// Draw `n` i.i.d. points, deterministically per seed. Truncated kinds
    /// reject against the untruncated model with a per-point attempt cap.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
        let mut rng = rng_from(seed);
        let mut out = Vec::with_capacity(n);
        match self {
            Proposal::UniformBox { bounds } => {
                for _ in 0..n {
                    out.push(
                        bounds
                            .iter()
                            .map(|&(lo, hi)| lo + (hi - lo) * rng.random::<f64>())
                            .collect(),
                    );
                }
            }
            Proposal::Gaussian { normal } => {
                for _ in 0..n {
                    out.push(normal.sample(&mut rng));
                }
            }
            Proposal::TruncatedGaussian { normal, domain, .. } => {
                for _ in 0..n {
                    out.push(rejection_sample(
                        || normal.sample(&mut rng),
                        domain,
                        "truncated Gaussian",
                    )?);
                }
            }
            Proposal::Gmm {
                components,
                domain,
                ..
            } => {
                for _ in 0..n {
                    let draw = |rng: &mut ChaCha8Rng| {
                        let mut pick: f64 = rng.random();
                        let mut idx = components.len() - 1;
                        for (i, c) in components.iter().enumerate() {
                            if pick < c.weight {
                                idx = i;
                                break;
                            }
                            pick -= c.weight;
                        }
                        components[idx].normal.sample(rng)
                    };
                    match domain {
                        Some(dom) => {
                            out.push(rejection_sample(|| draw(&mut rng), dom, "mixture")?)
                        }
                        None => out.push(draw(&mut rng)),
                    }
                }
            }
        }
        Ok(out)
    }

    /// Nominal mean and covariance diagonal, for trace records. Truncated
    /// kinds report their untruncated parameters.
    pub fn mean_and_cov_diag(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Proposal::UniformBox { bounds } => (
                bounds.iter().map(|&(lo, hi)| 0.5 * (lo + hi)).collect(),
                bounds
                    .iter()
                    .map(|&(lo, hi)| (hi - lo) * (hi - lo) / 12.0)
                    .collect(),
            ),
            Proposal::Gaussian { normal } | Proposal::TruncatedGaussian { normal, .. } => {
                let d = normal.dim();
                (
                    normal.mu().to_vec(),
                    (0..d).map(|i| normal.sigma()[i * d + i]).collect(),
                )
            }
            Proposal::Gmm { components, .. } => {
                let d = components[0].normal.dim();
                let mut mean = vec![0.0; d];
                for c in components {
                    for i in 0..d {
                        mean[i] += c.weight * c.normal.mu()[i];
                    }
                }
                let mut var = vec![0.0; d];
                for c in components {
                    for i in 0..d {
                        let mui = c.normal.mu()[i];
                        var[i] += c.weight * (c.normal.sigma()[i * d + i] + mui * mui);
                    }
                }
                for i in 0..d {
                    var[i] -= mean[i] * mean[i];
                }
                (mean, var)
            }
        }
    }
}

fn rejection_sample(
    mut draw: impl FnMut() -> Vec<f64>,
    domain: &DomainSpec,
    what: &str,
) -> Result<Vec<f64>> {
    for _ in 0..MAX_REJECTION_ATTEMPTS {
        let x = draw();
        if domain.contains(&x) {
            return Ok(x);
        }
    }
    Err(Error::Sampling(format!(
        "{what} proposal is ill-matched to the domain: acceptance rate below 1/{MAX_REJECTION_ATTEMPTS}"
    )))
}

/// MC estimate of `integral_domain mixture dx` with its sample count.
fn estimate_truncation(
    parts: &[(f64, &MvNormal)],
    domain: &DomainSpec,
    seed: u64,
) -> Result<(f64, usize)> {
    if matches!(domain, DomainSpec::Unbounded { .. }) {
        return Ok((1.0, 0));
    }
    let mut rng = rng_from(seed);
    let n = TRUNCATION_MC_SAMPLES;
    let mut hits = 0usize;
    let mut buf = Vec::new();
    for _ in 0..n {
        let mut pick: f64 = rng.random();
        let mut idx = parts.len() - 1;
        for (i, &(w, _)) in parts.iter().enumerate() {
            if pick < w {
                idx = i;
                break;
            }
            pick -= w;
        }
        parts[idx].1.sample_into(&mut rng, &mut buf);
        if domain.contains(&buf) {
            hits += 1;
        }
    }
    if hits == 0 {
        return Err(Error::Sampling(
            "truncation constant estimate is zero: proposal mass misses the domain".into(),
        ));
    }
    Ok((hits as f64 / n as f64, n))
}

/// Sample mean and unbiased sample covariance (divisor N-1, outer-product
/// form), covariance lifted to the jitter floor.
pub fn fit_moments(samples: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<f64>)> {
    if samples.len() < 2 {
        return Err(Error::config(format!(
            "moment fit needs at least 2 samples, got {}",
            samples.len()
        )));
    }
    let d = samples[0].len();
    let n = samples.len() as f64;
    let mut mu = vec![0.0; d];
    for s in samples {
        for i in 0..d {
            mu[i] += s[i];
        }
    }
    for m in &mut mu {
        *m /= n;
    }
    let mut sigma = vec![0.0; d * d];
    for s in samples {
        for i in 0..d {
            let di = s[i] - mu[i];
            for j in 0..d {
                sigma[i * d + j] += di * (s[j] - mu[j]);
            }
        }
    }
    for v in &mut sigma {
        *v /= n - 1.0;
    }
    regularize_spd(&mut sigma, d, JITTER_FLOOR)?;
    Ok((mu, sigma))
}

/// Prior-weighted mean with unweighted unbiased covariance about it:
/// `mu = sum x_i w_i / sum w_i`, `sigma = sum (x_i - mu)(x_i - mu)^T / (N-1)`.
pub fn fit_weighted_center(
    samples: &[Vec<f64>],
    prior_density: impl Fn(&[f64]) -> f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if samples.len() < 2 {
        return Err(Error::config(format!(
            "weighted center fit needs at least 2 samples, got {}",
            samples.len()
        )));
    }
    let d = samples[0].len();
    let weights: Vec<f64> = samples.iter().map(|s| prior_density(s)).collect();
    let wsum: f64 = weights.iter().sum();
    if !(wsum > 0.0) {
        return Err(Error::Sampling(
            "all prior densities are zero at the fit samples".into(),
        ));
    }
    let mut mu = vec![0.0; d];
    for (s, &w) in samples.iter().zip(&weights) {
        for i in 0..d {
            mu[i] += w * s[i];
        }
    }
    for m in &mut mu {
        *m /= wsum;
    }
    let mut sigma = vec![0.0; d * d];
    for s in samples {
        for i in 0..d {
            let di = s[i] - mu[i];
            for j in 0..d {
                sigma[i * d + j] += di * (s[j] - mu[j]);
            }
        }
    }
    let n = samples.len() as f64;
    for v in &mut sigma {
        *v /= n - 1.0;
    }
    regularize_spd(&mut sigma, d, JITTER_FLOOR)?;
    Ok((mu, sigma))
}

/// Result of an EM fit: the mixture parameters, the log-likelihood sequence
/// over accepted iterations, and whether any component was pruned.
#[derive(Debug, Clone)]
pub struct GmmFit {
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub covariances: Vec<Vec<f64>>,
    pub log_likelihood: Vec<f64>,
    pub pruned: bool,
}

impl GmmFit {
    /// Package the fit as a proposal, optionally truncated to a domain.
    pub fn into_proposal(self, domain: Option<DomainSpec>, z_seed: u64) -> Result<Proposal> {
        let components = self
            .weights
            .iter()
            .zip(self.means)
            .zip(self.covariances)
            .map(|((&w, mu), sigma)| {
                Ok(GmmComponent {
                    weight: w,
                    normal: MvNormal::new(mu, sigma)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Proposal::gmm(components, domain, z_seed)
    }
}

/// Gaussian-mixture fit by expectation-maximization: k-means++ seeding of the
/// means, responsibility E-step, weighted-moment M-step with the covariance
/// jitter floor. Components whose weight drops below 1e-6 are pruned with
/// renormalization and flagged. Stops when the log-likelihood improves by
/// less than `tol` or after `max_iters`.
pub fn fit_gmm_em(
    samples: &[Vec<f64>],
    n_components: usize,
    seed: u64,
    max_iters: usize,
    tol: f64,
) -> Result<GmmFit> {
    if n_components == 0 {
        return Err(Error::config("mixture needs at least one component"));
    }
    let d = samples.first().map(|s| s.len()).unwrap_or(0);
    if samples.len() < n_components * (d + 1) {
        return Err(Error::config(format!(
            "EM needs at least {} samples for {} components in {}d, got {}",
            n_components * (d + 1),
            n_components,
            d,
            samples.len()
        )));
    }

    let n = samples.len();
    let mut rng = rng_from(seed);

    // k-means++ seeding.
    let mut means: Vec<Vec<f64>> = Vec::with_capacity(n_components);
    let first = (rng.random::<u64>() as usize) % n;
    means.push(samples[first].clone());
    let mut d2: Vec<f64> = samples
        .iter()
        .map(|s| sq_dist(s, &means[0]))
        .collect();
    while means.len() < n_components {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut pick = rng.random::<f64>() * total;
            let mut idx = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if pick < w {
                    idx = i;
                    break;
                }
                pick -= w;
            }
            idx
        } else {
            (rng.random::<u64>() as usize) % n
        };
        means.push(samples[next].clone());
        for (i, s) in samples.iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(s, means.last().unwrap()));
        }
    }

    // Shared initial covariance: global spread of the data.
    let (_, init_cov) = fit_moments(samples)?;
    let mut comps: Vec<(f64, MvNormal)> = means
        .into_iter()
        .map(|mu| {
            Ok((
                1.0 / n_components as f64,
                MvNormal::new(mu, init_cov.clone())?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut resp = vec![0.0; n * n_components];
    let mut ll_trace: Vec<f64> = Vec::new();
    let mut pruned = false;
    let mut accepted = comps.clone();
    let mut just_pruned = false;

    for _iter in 0..max_iters {
        let k = comps.len();
        // E-step with log-sum-exp.
        let mut ll = 0.0_f64;
        for (i, s) in samples.iter().enumerate() {
            let row = &mut resp[i * n_components..i * n_components + k];
            let mut max_log = f64::NEG_INFINITY;
            for (m, (w, normal)) in comps.iter().enumerate() {
                row[m] = w.ln() + normal.log_density(s);
                max_log = max_log.max(row[m]);
            }
            let mut sum = 0.0;
            for r in row.iter_mut() {
                *r = (*r - max_log).exp();
                sum += *r;
            }
            for r in row.iter_mut() {
                *r /= sum;
            }
            ll += max_log + sum.ln();
        }
        if let Some(&prev) = ll_trace.last() {
            // Reject an update that lowered the log-likelihood (the unbiased
            // covariance divisor is not the exact M-step maximizer), unless
            // the drop came from pruning a degenerate component.
            if ll < prev && !just_pruned {
                comps = accepted;
                break;
            }
            if (ll - prev).abs() < tol {
                ll_trace.push(ll);
                break;
            }
        }
        ll_trace.push(ll);
        accepted = comps.clone();
        just_pruned = false;

        // M-step. Covariance divisor (N_m - 1) so a single-component fit
        // reproduces the unbiased moment fit.
        let mut next = Vec::with_capacity(k);
        for m in 0..k {
            let nm: f64 = (0..n).map(|i| resp[i * n_components + m]).sum();
            let mut mu = vec![0.0; d];
            for (i, s) in samples.iter().enumerate() {
                let r = resp[i * n_components + m];
                for j in 0..d {
                    mu[j] += r * s[j];
                }
            }
            for v in &mut mu {
                *v /= nm;
            }
            let mut sigma = vec![0.0; d * d];
            for (i, s) in samples.iter().enumerate() {
                let r = resp[i * n_components + m];
                for a in 0..d {
                    let da = s[a] - mu[a];
                    for b in 0..d {
                        sigma[a * d + b] += r * da * (s[b] - mu[b]);
                    }
                }
            }
            let div = (nm - 1.0).max(1.0);
            for v in &mut sigma {
                *v /= div;
            }
            regularize_spd(&mut sigma, d, JITTER_FLOOR)?;
            next.push((nm / n as f64, MvNormal::new(mu, sigma)?));
        }

        // Prune degenerate components.
        if next.iter().any(|(w, _)| *w < 1e-6) {
            pruned = true;
            just_pruned = true;
            next.retain(|(w, _)| *w >= 1e-6);
            if next.is_empty() {
                return Err(Error::Sampling("all mixture components degenerated".into()));
            }
            let wsum: f64 = next.iter().map(|(w, _)| w).sum();
            for (w, _) in &mut next {
                *w /= wsum;
            }
        }
        comps = next;
    }

    let mut weights: Vec<f64> = comps.iter().map(|(w, _)| *w).collect();
    // Guard against rounding drift in the weight simplex.
    let wsum: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= wsum;
    }
    Ok(GmmFit {
        weights,
        means: comps.iter().map(|(_, nm)| nm.mu().to_vec()).collect(),
        covariances: comps.iter().map(|(_, nm)| nm.sigma().to_vec()).collect(),
        log_likelihood: ll_trace,
        pruned,
    })
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
