//! Precision-matrix estimators for the banded graphical model.
//!
//! All of them are clique/separator sums of inverted principal blocks of the
//! sample covariance:
//!
//! ```text
//! Omega = sum_j c_j (block(C_j))^0 - sum_j s_j (block(S_j))^0
//! ```
//!
//! and therefore k-banded by construction. Blocks are inverted independently
//! and accumulated in clique order, so the floating-point result does not
//! depend on evaluation order.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::band::BandModel;
use crate::error::{invalid, Error, Result};
use crate::matrix::{submatrix, IndexSet, SymMatrix};
use crate::scenarios::Observations;

/// Sample size and the uncentred sample covariance `S = n^{-1} sum_i x_i x_i^T`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleStats {
    pub n: usize,
    pub s: SymMatrix,
}

impl SampleStats {
    pub fn new(n: usize, s: SymMatrix) -> Result<Self> {
        if n == 0 {
            return Err(invalid("sample size must be at least 1"));
        }
        Ok(SampleStats { n, s })
    }

    pub fn from_observations(x: &Observations) -> Self {
        let (n, p) = (x.n(), x.p());
        let mut acc = vec![0.0; p * p];
        for i in 0..n {
            let row = x.row(i);
            for a in 0..p {
                let xa = row[a];
                for b in a..p {
                    acc[a * p + b] += xa * row[b];
                }
            }
        }
        let s = SymMatrix::from_fn(p, |a, b| acc[a * p + b] / n as f64);
        SampleStats { n, s }
    }

    pub fn p(&self) -> usize {
        self.s.dim()
    }

    pub fn n_f64(&self) -> f64 {
        self.n as f64
    }
}

/// G-Wishart prior `W_G(delta, I_p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    pub delta: f64,
}

impl PriorSpec {
    pub const DEFAULT_DELTA: f64 = 3.0;

    pub fn new(delta: f64) -> Result<Self> {
        if !(delta > 2.0) || !delta.is_finite() {
            return Err(invalid(format!("prior degrees of freedom must exceed 2, got {delta}")));
        }
        Ok(PriorSpec { delta })
    }
}

impl Default for PriorSpec {
    fn default() -> Self {
        PriorSpec {
            delta: Self::DEFAULT_DELTA,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorKind {
    GraphicalMle,
    /// Posterior mean (squared-error loss).
    BayesFrobenius,
    /// Bayes rule under Stein's loss.
    BayesStein,
    ReferencePrior,
    CholeskyBanding,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 5] = [
        EstimatorKind::GraphicalMle,
        EstimatorKind::BayesFrobenius,
        EstimatorKind::BayesStein,
        EstimatorKind::ReferencePrior,
        EstimatorKind::CholeskyBanding,
    ];

    /// The four columns of the benchmark tables.
    pub const TABLE: [EstimatorKind; 4] = [
        EstimatorKind::GraphicalMle,
        EstimatorKind::BayesFrobenius,
        EstimatorKind::BayesStein,
        EstimatorKind::CholeskyBanding,
    ];

    /// Command-line name.
    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::GraphicalMle => "mle",
            EstimatorKind::BayesFrobenius => "bayes-l2",
            EstimatorKind::BayesStein => "bayes-l1",
            EstimatorKind::ReferencePrior => "ref",
            EstimatorKind::CholeskyBanding => "cholesky",
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mle" => Ok(EstimatorKind::GraphicalMle),
            "bayes-l2" | "bayes-frobenius" => Ok(EstimatorKind::BayesFrobenius),
            "bayes-l1" | "bayes-stein" => Ok(EstimatorKind::BayesStein),
            "ref" | "reference" => Ok(EstimatorKind::ReferencePrior),
            "cholesky" => Ok(EstimatorKind::CholeskyBanding),
            other => Err(invalid(format!("unknown estimator `{other}`"))),
        }
    }
}

/// Runs the estimator `kind` at bandwidth `k`.
pub fn estimate(
    kind: EstimatorKind,
    stats: &SampleStats,
    k: usize,
    prior: &PriorSpec,
) -> Result<SymMatrix> {
    match kind {
        EstimatorKind::GraphicalMle => graphical_mle(stats, k),
        EstimatorKind::BayesFrobenius => bayes_frobenius(stats, k, prior),
        EstimatorKind::BayesStein => bayes_stein(stats, k, prior),
        EstimatorKind::ReferencePrior => reference_prior(stats, k),
        EstimatorKind::CholeskyBanding => cholesky_banding(stats, k),
    }
}

fn block_inverse(s: &SymMatrix, set: &IndexSet) -> Result<SymMatrix> {
    Ok(submatrix(s, set)?.cholesky()?.inverse())
}

/// `(n^{-1} I + S_T)^{-1}`, evaluated as `n (I + n S_T)^{-1}`.
fn regularized_block_inverse(s: &SymMatrix, set: &IndexSet, n: f64) -> Result<SymMatrix> {
    let mut m = submatrix(s, set)?.scaled(n);
    for i in 0..m.dim() {
        m.set(i, i, m.get(i, i) + 1.0);
    }
    Ok(m.cholesky()?.inverse().scaled(n))
}

/// `sum_j (S_{C_j}^{-1})^0` and, separately, each separator inverse.
struct RawBlocks {
    cliques: SymMatrix,
    separators: Vec<(IndexSet, SymMatrix)>,
}

fn raw_blocks(stats: &SampleStats, model: &BandModel) -> Result<RawBlocks> {
    let p = model.p();
    let mut cliques = SymMatrix::zeros(p);
    for (j, c) in model.cliques().iter().enumerate() {
        let inv = block_inverse(&stats.s, c).map_err(|e| clique_error(e, j, c))?;
        cliques.add_embedded(1.0, &inv, c);
    }
    let separators = model
        .separators()
        .into_iter()
        .enumerate()
        .map(|(m, sep)| {
            let inv = block_inverse(&stats.s, &sep).map_err(|e| separator_error(e, m, &sep))?;
            Ok((sep, inv))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RawBlocks { cliques, separators })
}

/// Regularized clique sum and separator sum.
fn regularized_sums(stats: &SampleStats, model: &BandModel) -> Result<(SymMatrix, SymMatrix)> {
    let p = model.p();
    let n = stats.n_f64();
    let mut cliques = SymMatrix::zeros(p);
    for c in model.cliques() {
        cliques.add_embedded(1.0, &regularized_block_inverse(&stats.s, &c, n)?, &c);
    }
    let mut separators = SymMatrix::zeros(p);
    for sep in model.separators() {
        separators.add_embedded(1.0, &regularized_block_inverse(&stats.s, &sep, n)?, &sep);
    }
    Ok((cliques, separators))
}

fn clique_error(e: Error, j: usize, c: &IndexSet) -> Error {
    match e {
        Error::NotPositiveDefinite { .. } => Error::CliqueNotPositiveDefinite {
            clique: j + 1,
            first: c.first() + 1,
            last: c.last() + 1,
        },
        other => other,
    }
}

fn separator_error(e: Error, m: usize, s: &IndexSet) -> Error {
    match e {
        // separators are numbered from 2, like the clique they attach to
        Error::NotPositiveDefinite { .. } => Error::SeparatorNotPositiveDefinite {
            separator: m + 2,
            first: s.first() + 1,
            last: s.last() + 1,
        },
        other => other,
    }
}

fn model_for(stats: &SampleStats, k: usize) -> Result<BandModel> {
    BandModel::new(stats.p(), k)
}

/// Graphical MLE: `sum_j (S_{C_j}^{-1})^0 - sum_j (S_{S_j}^{-1})^0`.
///
/// The result `W` is the unique k-banded matrix with `(W^{-1})_{ij} = S_{ij}`
/// whenever `|i - j| <= k`.
pub fn graphical_mle(stats: &SampleStats, k: usize) -> Result<SymMatrix> {
    let model = model_for(stats, k)?;
    let RawBlocks {
        mut cliques,
        separators,
    } = raw_blocks(stats, &model)?;
    for (sep, inv) in &separators {
        cliques.add_embedded(-1.0, inv, sep);
    }
    Ok(cliques)
}

/// Posterior mean of `Omega` under `W_G(delta, I_p)`:
///
/// `((delta + k + n) / n) [C - S] + n^{-1} S` where `C` and `S` are the clique
/// and separator sums of `(n^{-1} I + S_T)^{-1}`.
pub fn bayes_frobenius(stats: &SampleStats, k: usize, prior: &PriorSpec) -> Result<SymMatrix> {
    let model = model_for(stats, k)?;
    let n = stats.n_f64();
    let (c, s) = regularized_sums(stats, &model)?;
    let factor = (prior.delta + k as f64 + n) / n;
    let mut out = c.scaled(factor);
    out.axpy(1.0 / n - factor, &s);
    Ok(out)
}

/// Bayes estimator under Stein's loss: `((delta + n - 2) / n) [C - S]`.
pub fn bayes_stein(stats: &SampleStats, k: usize, prior: &PriorSpec) -> Result<SymMatrix> {
    let model = model_for(stats, k)?;
    let n = stats.n_f64();
    let (mut c, s) = regularized_sums(stats, &model)?;
    c.axpy(-1.0, &s);
    Ok(c.scaled((prior.delta + n - 2.0) / n))
}

/// Posterior mean under the reference prior.
///
/// Equals the graphical MLE except that separator terms are damped: the
/// first separator by `1 - 2/n` and later ones by `1 - 1/n`.
pub fn reference_prior(stats: &SampleStats, k: usize) -> Result<SymMatrix> {
    let model = model_for(stats, k)?;
    let n = stats.n_f64();
    let c_size = (k + 1) as f64;
    let s_size = k as f64;
    let RawBlocks {
        mut cliques,
        separators,
    } = raw_blocks(stats, &model)?;
    for (m, (sep, inv)) in separators.iter().enumerate() {
        let coef = if m == 0 {
            1.0 - (c_size + c_size - 2.0 * s_size) / n
        } else {
            1.0 - (c_size - s_size) / n
        };
        cliques.add_embedded(-coef, inv, sep);
    }
    Ok(cliques)
}

/// Banded modified-Cholesky estimator.
///
/// Each variable is regressed on its `min(k, i)` immediate predecessors using
/// blocks of `S`; with `T` the unit lower-triangular matrix of negated
/// coefficients and `D` the residual variances, returns `T^T D^{-1} T`.
pub fn cholesky_banding(stats: &SampleStats, k: usize) -> Result<SymMatrix> {
    let p = stats.p();
    if k >= p {
        return Err(invalid(format!("bandwidth k = {k} must be at most p - 1 = {}", p - 1)));
    }
    let s = &stats.s;
    let mut out = SymMatrix::zeros(p);
    for i in 0..p {
        let lo = i.saturating_sub(k);
        let sii = s.get(i, i);
        // row i of T restricted to lo..=i
        let (t, resid) = if lo == i {
            (vec![1.0], sii)
        } else {
            let preds = IndexSet::contiguous(lo, i - lo);
            let chol = submatrix(s, &preds)?
                .cholesky()
                .map_err(|_| Error::SingularRegression { row: i + 1 })?;
            let cross: Vec<f64> = (lo..i).map(|m| s.get(m, i)).collect();
            let coef = chol.solve(&cross);
            let resid = sii - coef.iter().zip(&cross).map(|(a, b)| a * b).sum::<f64>();
            let mut t: Vec<f64> = coef.iter().map(|a| -a).collect();
            t.push(1.0);
            (t, resid)
        };
        if !(resid > 0.0) {
            return Err(Error::SingularRegression { row: i + 1 });
        }
        for (a, ta) in t.iter().enumerate() {
            for (b, tb) in t.iter().enumerate().skip(a) {
                let (r, c) = (lo + a, lo + b);
                out.set(r, c, out.get(r, c) + ta * tb / resid);
            }
        }
    }
    Ok(out)
}
