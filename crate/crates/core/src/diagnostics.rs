//! Gelman-Rubin potential scale reduction factor over multiple chains,
//! with an F-quantile upper confidence limit and per-iteration traces.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, FisherSnedecor};

/// Post-burn-in draws of one scalar parameter across M >= 2 chains of
/// equal length N >= 10.
#[derive(Clone, Debug)]
pub struct ChainMatrix {
    chains: Vec<Vec<f64>>,
}

impl ChainMatrix {
    pub fn new(chains: Vec<Vec<f64>>) -> Result<Self> {
        if chains.len() < 2 {
            return Err(Error::Config(format!(
                "PSRF needs at least 2 chains, got {}",
                chains.len()
            )));
        }
        let n = chains[0].len();
        if chains.iter().any(|c| c.len() != n) {
            return Err(Error::Config("chains must have equal length".into()));
        }
        if n < 10 {
            return Err(Error::Config(format!("PSRF needs at least 10 draws per chain, got {n}")));
        }
        if chains.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("chain draws".into()));
        }
        Ok(Self { chains })
    }

    pub fn m(&self) -> usize {
        self.chains.len()
    }

    pub fn n(&self) -> usize {
        self.chains[0].len()
    }

    fn prefix(&self, len: usize) -> ChainMatrix {
        ChainMatrix {
            chains: self.chains.iter().map(|c| c[..len].to_vec()).collect(),
        }
    }
}

/// Point estimate and upper 95% confidence limit of the PSRF.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsrfEstimate {
    pub point: f64,
    pub upper: f64,
}

/// PSRF = sqrt(((N-1)/N W + B/N) / W) with B and W the usual
/// between/within mean squares. The upper limit replaces the observed
/// between/within ratio with its 97.5% F quantile, the degrees of
/// freedom of W estimated by moment matching.
pub fn psrf(chains: &ChainMatrix) -> Result<PsrfEstimate> {
    let m = chains.m() as f64;
    let n = chains.n() as f64;
    let means: Vec<f64> = chains
        .chains
        .iter()
        .map(|c| c.iter().sum::<f64>() / n)
        .collect();
    let vars: Vec<f64> = chains
        .chains
        .iter()
        .zip(&means)
        .map(|(c, &mu)| c.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / (n - 1.0))
        .collect();
    let grand = means.iter().sum::<f64>() / m;
    let b = n * means.iter().map(|&x| (x - grand) * (x - grand)).sum::<f64>() / (m - 1.0);
    let w = vars.iter().sum::<f64>() / m;
    if w == 0.0 {
        return Err(Error::DegenerateChains);
    }
    let r2_fixed = (n - 1.0) / n;
    let r2_random = b / (n * w);
    let point = (r2_fixed + r2_random).sqrt();

    // Moment-matched degrees of freedom of W; effectively infinite when
    // the within variances agree exactly.
    let var_w = {
        let mw = vars.iter().sum::<f64>() / m;
        vars.iter().map(|&v| (v - mw) * (v - mw)).sum::<f64>() / (m - 1.0)
    };
    let df_w = if var_w > 0.0 {
        (2.0 * w * w / var_w).min(1e6)
    } else {
        1e6
    };
    let f = FisherSnedecor::new(m - 1.0, df_w)
        .map_err(|e| Error::Config(format!("F({}, {df_w}): {e}", m - 1.0)))?;
    let q = f.inverse_cdf(0.975);
    let upper = (r2_fixed + q * r2_random).sqrt();
    Ok(PsrfEstimate { point, upper })
}

/// One point of a growing-prefix PSRF trace.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub iteration: usize,
    pub psrf: f64,
    pub upper: f64,
}

/// PSRF on growing prefixes, one point per `stride` iterations.
/// Prefixes whose within-chain variance is still zero are skipped; the
/// full-length chains must be non-degenerate.
pub fn psrf_trace(chains: &ChainMatrix, stride: usize) -> Result<Vec<TracePoint>> {
    if stride == 0 {
        return Err(Error::Config("stride must be >= 1".into()));
    }
    // Fail loudly if the full chain is degenerate.
    psrf(chains)?;
    let mut out = Vec::new();
    let mut len = stride;
    while len <= chains.n() {
        if len >= 10 {
            if let Ok(est) = psrf(&chains.prefix(len)) {
                out.push(TracePoint {
                    iteration: len,
                    psrf: est.point,
                    upper: est.upper,
                });
            }
        }
        len += stride;
    }
    Ok(out)
}
