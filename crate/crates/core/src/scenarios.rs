//! Data-generating models for the simulation study and seeded Gaussian sampling.
//!
//! Randomness comes from ChaCha20 keyed by a 64-bit seed; independent streams
//! (one per replication or per posterior draw) are selected with the ChaCha
//! stream id, so output never depends on how work is scheduled across threads.
//! Standard normals use the ziggurat sampler of `rand_distr::StandardNormal`.

use std::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::matrix::SymMatrix;

/// Stream `stream` of the generator keyed by `seed`.
pub fn substream(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// An `n x p` data matrix, one observation per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Observations {
    n: usize,
    p: usize,
    data: Vec<f64>,
}

impl Observations {
    pub fn new(n: usize, p: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 || p == 0 {
            return Err(invalid("data matrix must have at least one row and one column"));
        }
        if data.len() != n * p {
            return Err(Error::DimensionMismatch {
                expected: n * p,
                found: data.len(),
            });
        }
        Ok(Observations { n, p, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.p..(i + 1) * self.p]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Subtracts the column means in place.
    pub fn center(&mut self) {
        let mut means = vec![0.0; self.p];
        for i in 0..self.n {
            for (m, x) in means.iter_mut().zip(self.row(i)) {
                *m += x;
            }
        }
        means.iter_mut().for_each(|m| *m /= self.n as f64);
        for row in self.data.chunks_mut(self.p) {
            for (x, m) in row.iter_mut().zip(&means) {
                *x -= m;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum ScenarioKind {
    /// Covariance `rho^|i-j|`.
    Ar1 { rho: f64 },
    /// Fixed lag-4 precision stencil.
    Ar4,
    /// Fractional Gaussian noise with Hurst index `hurst`.
    Fgn { hurst: f64 },
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScenarioKind::Ar1 { rho } => write!(f, "ar1(rho={rho})"),
            ScenarioKind::Ar4 => write!(f, "ar4"),
            ScenarioKind::Fgn { hurst } => write!(f, "fgn(hurst={hurst})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub kind: ScenarioKind,
    pub p: usize,
    pub n: usize,
    pub replications: usize,
    pub seed: u64,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        match self.kind {
            ScenarioKind::Ar1 { rho } if !(rho.abs() < 1.0) => {
                return Err(invalid(format!("AR(1) coefficient must satisfy |rho| < 1, got {rho}")))
            }
            ScenarioKind::Fgn { hurst } if !(0.5..=1.0).contains(&hurst) => {
                return Err(invalid(format!("Hurst index must lie in [0.5, 1], got {hurst}")))
            }
            _ => {}
        }
        if self.p == 0 || self.n == 0 {
            return Err(invalid("scenario needs p >= 1 and n >= 1"));
        }
        if self.replications == 0 {
            return Err(invalid("replications must be at least 1"));
        }
        Ok(())
    }
}

pub fn ar1_covariance(p: usize, rho: f64) -> Result<SymMatrix> {
    if !(rho.abs() < 1.0) {
        return Err(invalid(format!("AR(1) coefficient must satisfy |rho| < 1, got {rho}")));
    }
    Ok(SymMatrix::from_fn(p, |i, j| rho.powi((j - i) as i32)))
}

const AR4_STENCIL: [f64; 5] = [1.0, 0.4, 0.2, 0.2, 0.1];

pub fn ar4_precision(p: usize) -> Result<SymMatrix> {
    let omega = SymMatrix::from_fn(p, |i, j| AR4_STENCIL.get(j - i).copied().unwrap_or(0.0));
    omega.cholesky()?;
    Ok(omega)
}

pub fn fgn_covariance(p: usize, hurst: f64) -> Result<SymMatrix> {
    if !(0.5..=1.0).contains(&hurst) {
        return Err(invalid(format!("Hurst index must lie in [0.5, 1], got {hurst}")));
    }
    let two_h = 2.0 * hurst;
    Ok(SymMatrix::from_fn(p, |i, j| {
        let lag = (j - i) as f64;
        0.5 * ((lag + 1.0).powf(two_h) - 2.0 * lag.powf(two_h) + (lag - 1.0).abs().powf(two_h))
    }))
}

/// `n` draws from `N_p(0, sigma)` computed as `L z` with `L = chol(sigma)`.
pub fn sample_mvn_with<R: Rng + ?Sized>(
    sigma: &SymMatrix,
    n: usize,
    rng: &mut R,
) -> Result<Observations> {
    let chol = sigma.cholesky()?;
    let p = sigma.dim();
    let mut data = Vec::with_capacity(n * p);
    let mut z = vec![0.0; p];
    for _ in 0..n {
        z.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
        data.extend(chol.mul_lower(&z));
    }
    Observations::new(n, p, data)
}

pub fn sample_mvn(sigma: &SymMatrix, n: usize, seed: u64) -> Result<Observations> {
    sample_mvn_with(sigma, n, &mut substream(seed, 0))
}

/// True covariance and precision `(sigma, omega)` of a scenario.
pub fn scenario_truth(s: &Scenario) -> Result<(SymMatrix, SymMatrix)> {
    match s.kind {
        ScenarioKind::Ar1 { rho } => {
            let sigma = ar1_covariance(s.p, rho)?;
            let omega = sigma.cholesky()?.inverse();
            Ok((sigma, omega))
        }
        ScenarioKind::Ar4 => {
            let omega = ar4_precision(s.p)?;
            let sigma = omega.cholesky()?.inverse();
            Ok((sigma, omega))
        }
        ScenarioKind::Fgn { hurst } => {
            let sigma = fgn_covariance(s.p, hurst)?;
            let omega = sigma.cholesky()?.inverse();
            Ok((sigma, omega))
        }
    }
}
