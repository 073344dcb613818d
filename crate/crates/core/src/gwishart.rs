//! G-Wishart normalizing constants, marginal likelihoods of banded graphs,
//! the posterior over the bandwidth, and exact posterior sampling.
//!
//! The G-Wishart law `W_G(delta, D)` has density proportional to
//! `det(Omega)^{(delta-2)/2} exp(-tr(D Omega)/2)` on positive definite
//! matrices supported on `G`. For a banded (hence decomposable) graph its
//! normalizing constant factorizes over cliques and separators, each of which
//! is a complete-graph Wishart constant. Everything here stays in the log
//! domain: the gamma factors overflow for sample sizes in the hundreds.

use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::band::BandModel;
use crate::error::{invalid, Error, Result};
use crate::estimators::{PriorSpec, SampleStats};
use crate::matrix::{submatrix, Cholesky, IndexSet, NormKind, SymMatrix};
use crate::scenarios::substream;

/// Largest bandwidth considered by default during selection.
pub const K_MAX_CAP: usize = 50;

/// `log Gamma_d(a) = d(d-1)/4 log(pi) + sum_{i<d} log Gamma(a - i/2)`.
pub fn log_mv_gamma(d: usize, a: f64) -> Result<f64> {
    if d == 0 {
        return Ok(0.0);
    }
    if !(a > (d as f64 - 1.0) / 2.0) {
        return Err(invalid(format!(
            "multivariate gamma of order {d} needs a > {}, got {a}",
            (d as f64 - 1.0) / 2.0
        )));
    }
    let df = d as f64;
    let mut acc = df * (df - 1.0) / 4.0 * std::f64::consts::PI.ln();
    for i in 0..d {
        acc += ln_gamma(a - i as f64 / 2.0);
    }
    Ok(acc)
}

/// Log normalizing constant of the complete-graph G-Wishart of dimension `d`
/// given `log det D`.
fn log_ig_complete_from_logdet(delta: f64, d: usize, log_det: f64) -> Result<f64> {
    if d == 0 {
        return Ok(0.0);
    }
    let df = d as f64;
    let half = (delta + df - 1.0) / 2.0;
    Ok(half * df * std::f64::consts::LN_2 + log_mv_gamma(d, half)? - half * log_det)
}

/// `log I_G(delta, D)` for the complete graph on `dim(D)` vertices.
pub fn log_ig_complete(delta: f64, d: &SymMatrix) -> Result<f64> {
    check_delta(delta)?;
    let log_det = d.cholesky()?.log_det();
    log_ig_complete_from_logdet(delta, d.dim(), log_det)
}

/// `log I_{G^k}(delta, D)`: clique constants minus separator constants.
pub fn log_ig_banded(delta: f64, d: &SymMatrix, k: usize) -> Result<f64> {
    check_delta(delta)?;
    let model = BandModel::new(d.dim(), k)?;
    let mut acc = 0.0;
    for (j, c) in model.cliques().iter().enumerate() {
        let ld = block_log_det(d, c).map_err(|_| Error::CliqueNotPositiveDefinite {
            clique: j + 1,
            first: c.first() + 1,
            last: c.last() + 1,
        })?;
        acc += log_ig_complete_from_logdet(delta, c.len(), ld)?;
    }
    for (m, s) in model.separators().iter().enumerate() {
        let ld = block_log_det(d, s).map_err(|_| Error::SeparatorNotPositiveDefinite {
            separator: m + 2,
            first: s.first() + 1,
            last: s.last() + 1,
        })?;
        acc -= log_ig_complete_from_logdet(delta, s.len(), ld)?;
    }
    Ok(acc)
}

/// `log I_{G^k}(delta, I_p)`, where every determinant is one.
pub fn log_ig_banded_identity(delta: f64, p: usize, k: usize) -> Result<f64> {
    check_delta(delta)?;
    let model = BandModel::new(p, k)?;
    let clique = log_ig_complete_from_logdet(delta, k + 1, 0.0)?;
    let sep = log_ig_complete_from_logdet(delta, k, 0.0)?;
    Ok(model.num_cliques() as f64 * clique - model.num_separators() as f64 * sep)
}

fn block_log_det(d: &SymMatrix, set: &IndexSet) -> Result<f64> {
    Ok(submatrix(d, set)?.cholesky()?.log_det())
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 2.0) || !delta.is_finite() {
        return Err(invalid(format!("G-Wishart degrees of freedom must exceed 2, got {delta}")));
    }
    Ok(())
}

/// `I + n S`, the posterior scale under a `W_G(delta, I)` prior.
pub fn posterior_scale(stats: &SampleStats) -> SymMatrix {
    let n = stats.n_f64();
    let mut d = stats.s.scaled(n);
    for i in 0..d.dim() {
        d.set(i, i, d.get(i, i) + 1.0);
    }
    d
}

/// `log p(X | G^k) = -(np/2) log(2 pi) + log I(delta + n, I + nS) - log I(delta, I)`.
pub fn log_marginal_likelihood(stats: &SampleStats, k: usize, prior: &PriorSpec) -> Result<f64> {
    let scale = posterior_scale(stats);
    log_marginal_with_scale(stats, &scale, k, prior)
}

fn log_marginal_with_scale(
    stats: &SampleStats,
    scale: &SymMatrix,
    k: usize,
    prior: &PriorSpec,
) -> Result<f64> {
    let n = stats.n_f64();
    let p = stats.p() as f64;
    let post = log_ig_banded(prior.delta + n, scale, k)?;
    let base = log_ig_banded_identity(prior.delta, stats.p(), k)?;
    Ok(-0.5 * n * p * (2.0 * std::f64::consts::PI).ln() + post - base)
}

/// Prior weights `rho_k` over candidate bandwidths `0..=k_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PriorOverK {
    /// `rho_k` proportional to `exp(-k^4)`.
    ExpQuartic,
    Uniform,
    /// Explicit positive weights for `k = 0, 1, ..`.
    Custom(Vec<f64>),
}

impl PriorOverK {
    pub fn name(&self) -> &'static str {
        match self {
            PriorOverK::ExpQuartic => "exp-quartic",
            PriorOverK::Uniform => "uniform",
            PriorOverK::Custom(_) => "custom",
        }
    }

    /// Normalized log weights for `k = 0..=k_max`.
    pub fn log_weights(&self, k_max: usize) -> Result<Vec<f64>> {
        let raw: Vec<f64> = match self {
            PriorOverK::ExpQuartic => (0..=k_max).map(|k| -(k as f64).powi(4)).collect(),
            PriorOverK::Uniform => vec![0.0; k_max + 1],
            PriorOverK::Custom(w) => {
                if w.len() < k_max + 1 {
                    return Err(invalid(format!(
                        "custom bandwidth prior has {} weights, need {}",
                        w.len(),
                        k_max + 1
                    )));
                }
                let w = &w[..=k_max];
                if let Some(bad) = w.iter().find(|x| !(**x > 0.0) || !x.is_finite()) {
                    return Err(invalid(format!("bandwidth prior weights must be positive, got {bad}")));
                }
                w.iter().map(|x| x.ln()).collect()
            }
        };
        let lse = log_sum_exp(&raw);
        Ok(raw.into_iter().map(|x| x - lse).collect())
    }
}

impl std::str::FromStr for PriorOverK {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "exp-quartic" => Ok(PriorOverK::ExpQuartic),
            "uniform" => Ok(PriorOverK::Uniform),
            other => Err(invalid(format!("unknown bandwidth prior `{other}`"))),
        }
    }
}

pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Posterior distribution over bandwidths `0..=k_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandPosterior {
    pub k_values: Vec<usize>,
    pub log_marginals: Vec<f64>,
    pub log_prior: Vec<f64>,
    pub log_posterior: Vec<f64>,
    pub posterior: Vec<f64>,
    /// Bandwidth with the largest posterior probability; ties go to the smallest k.
    pub mode: usize,
}

/// `min(p - 1, n - 2, 50)`, floored at zero.
pub fn default_k_max(p: usize, n: usize) -> usize {
    (p - 1).min(n.saturating_sub(2)).min(K_MAX_CAP)
}

pub fn band_posterior(
    stats: &SampleStats,
    prior: &PriorSpec,
    rho: &PriorOverK,
    k_max: usize,
) -> Result<BandPosterior> {
    let p = stats.p();
    if k_max >= p {
        return Err(invalid(format!("k_max = {k_max} must be at most p - 1 = {}", p - 1)));
    }
    let log_prior = rho.log_weights(k_max)?;
    let scale = posterior_scale(stats);
    let log_marginals = (0..=k_max)
        .into_par_iter()
        .map(|k| log_marginal_with_scale(stats, &scale, k, prior))
        .collect::<Result<Vec<f64>>>()?;
    let unnorm: Vec<f64> = log_marginals.iter().zip(&log_prior).map(|(a, b)| a + b).collect();
    let lse = log_sum_exp(&unnorm);
    let log_posterior: Vec<f64> = unnorm.iter().map(|x| x - lse).collect();
    let posterior: Vec<f64> = log_posterior.iter().map(|x| x.exp()).collect();
    let mut mode = 0;
    for (k, lp) in log_posterior.iter().enumerate() {
        if *lp > log_posterior[mode] {
            mode = k;
        }
    }
    Ok(BandPosterior {
        k_values: (0..=k_max).collect(),
        log_marginals,
        log_prior,
        log_posterior,
        posterior,
        mode,
    })
}

/// Per-vertex conditional parameters of the posterior hyper inverse Wishart,
/// shared by all draws.
struct VertexConditional {
    /// First index of the predecessor window (its length is `v - lo`).
    lo: usize,
    /// Cholesky factor of the scale restricted to the predecessors.
    pred_chol: Option<Cholesky>,
    /// Regression mean `D_PP^{-1} D_Pv`.
    mean: Vec<f64>,
    /// Conditional scale `d_vv - D_vP D_PP^{-1} D_Pv`.
    cond: f64,
}

/// Independent draws of `Omega` from the G-Wishart posterior
/// `W_{G^k}(delta + n, I + n S)`.
///
/// The covariance `Sigma` is built on the band one vertex at a time along the
/// perfect order: the conditional variance of vertex `v` given its (at most
/// `k`) predecessors is `cond_v / chi^2_{delta + n + |P_v|}` and the
/// regression coefficients are Gaussian around `D_PP^{-1} D_Pv`. The
/// precision draw is then assembled from clique and separator inverses of
/// `Sigma`. Draw `d` uses stream `d` of `seed`.
pub fn sample_posterior(
    stats: &SampleStats,
    k: usize,
    prior: &PriorSpec,
    draws: usize,
    seed: u64,
) -> Result<Vec<SymMatrix>> {
    if draws == 0 {
        return Err(invalid("number of posterior draws must be at least 1"));
    }
    let model = BandModel::new(stats.p(), k)?;
    let scale = posterior_scale(stats);
    let dof = prior.delta + stats.n_f64();
    let clique_of = |v: usize| if v <= k { 1 } else { v - k + 1 };

    let vertices = (0..model.p())
        .map(|v| {
            let lo = v.saturating_sub(k);
            if lo == v {
                let cond = scale.get(v, v);
                if !(cond > 0.0) {
                    return Err(Error::DegenerateConditional { clique: clique_of(v) });
                }
                return Ok(VertexConditional {
                    lo,
                    pred_chol: None,
                    mean: Vec::new(),
                    cond,
                });
            }
            let preds = IndexSet::contiguous(lo, v - lo);
            let chol = submatrix(&scale, &preds)?
                .cholesky()
                .map_err(|_| Error::DegenerateConditional { clique: clique_of(v) })?;
            let cross: Vec<f64> = (lo..v).map(|m| scale.get(m, v)).collect();
            let mean = chol.solve(&cross);
            let cond = scale.get(v, v) - mean.iter().zip(&cross).map(|(a, b)| a * b).sum::<f64>();
            if !(cond > 0.0) {
                return Err(Error::DegenerateConditional { clique: clique_of(v) });
            }
            Ok(VertexConditional {
                lo,
                pred_chol: Some(chol),
                mean,
                cond,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    (0..draws as u64)
        .into_par_iter()
        .map(|d| {
            let mut rng = substream(seed, d);
            draw_one(&model, &vertices, dof, &mut rng)
        })
        .collect()
}

/// Entrywise average of a set of draws.
pub fn mean_matrix(draws: &[SymMatrix]) -> Result<SymMatrix> {
    let first = draws.first().ok_or_else(|| invalid("no draws to average"))?;
    let mut acc = SymMatrix::zeros(first.dim());
    for d in draws {
        acc = &acc + d;
    }
    Ok(acc.scaled(1.0 / draws.len() as f64))
}

/// Smallest `r` such that a fraction `level` of the draws lie within
/// `norm`-distance `r` of `center` (empirical quantile, upper rank).
pub fn credible_radius(draws: &[SymMatrix], center: &SymMatrix, norm: NormKind, level: f64) -> Result<f64> {
    if draws.is_empty() {
        return Err(invalid("no draws"));
    }
    if !(level > 0.0 && level <= 1.0) {
        return Err(invalid(format!("credible level must lie in (0, 1], got {level}")));
    }
    let mut dist: Vec<f64> = draws.iter().map(|d| (d - center).norm(norm)).collect();
    dist.sort_by(f64::total_cmp);
    let idx = ((level * dist.len() as f64).ceil() as usize).clamp(1, dist.len()) - 1;
    Ok(dist[idx])
}

fn draw_one<R: Rng + ?Sized>(
    model: &BandModel,
    vertices: &[VertexConditional],
    dof: f64,
    rng: &mut R,
) -> Result<SymMatrix> {
    let p = model.p();
    let mut sigma = SymMatrix::zeros(p);
    for (v, vc) in vertices.iter().enumerate() {
        let m = v - vc.lo;
        let chi = ChiSquared::new(dof + m as f64)
            .map_err(|e| invalid(format!("chi-square draw: {e}")))?
            .sample(rng);
        let cond_var = vc.cond / chi;
        let Some(chol) = &vc.pred_chol else {
            sigma.set(v, v, cond_var);
            continue;
        };
        // coefficients ~ N(mean, cond_var * D_PP^{-1}); L^{-T} z has covariance D_PP^{-1}
        let z: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
        let noise = chol.solve_upper(&z);
        let sd = cond_var.sqrt();
        let coef: Vec<f64> = vc.mean.iter().zip(&noise).map(|(mu, e)| mu + sd * e).collect();
        // Sigma_{Pv} = Sigma_PP coef, Sigma_vv = cond_var + coef' Sigma_PP coef
        let mut quad = 0.0;
        for a in 0..m {
            let cov: f64 = (0..m).map(|b| sigma.get(vc.lo + a, vc.lo + b) * coef[b]).sum();
            sigma.set(vc.lo + a, v, cov);
            quad += coef[a] * cov;
        }
        sigma.set(v, v, cond_var + quad);
    }

    let mut omega = SymMatrix::zeros(p);
    for (j, c) in model.cliques().iter().enumerate() {
        let inv = submatrix(&sigma, c)?
            .cholesky()
            .map_err(|_| Error::DegenerateConditional { clique: j + 1 })?
            .inverse();
        omega.add_embedded(1.0, &inv, c);
    }
    for (m, s) in model.separators().iter().enumerate() {
        let inv = submatrix(&sigma, s)?
            .cholesky()
            .map_err(|_| Error::DegenerateConditional { clique: m + 2 })?
            .inverse();
        omega.add_embedded(-1.0, &inv, s);
    }
    Ok(omega)
}
