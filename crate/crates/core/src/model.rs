//! Data model shared by all four samplers: datasets, per-gene marginal
//! designs, hyperparameters, chain state, and posterior summaries.

use crate::dist;
use crate::error::{Error, Result};
use crate::rng::RngStream;
use serde::{Deserialize, Serialize};

/// Scale constant of the symmetric-Laplace mixture representation at
/// quantile level 0.5 (xi1 = 0, xi2 = sqrt(8)).
pub const XI2_SQ: f64 = 8.0;

/// Column-major dense matrix; columns are the unit of access everywhere.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let cols = columns.len();
        let rows = columns.first().map_or(0, |c| c.len());
        if columns.iter().any(|c| c.len() != rows) {
            return Err(Error::Config("ragged column lengths".into()));
        }
        let mut data = Vec::with_capacity(rows * cols);
        for c in columns {
            data.extend_from_slice(c);
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.rows + i]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[j * self.rows + i] = v;
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.data.iter()
    }
}

/// A full study dataset: response, environment, clinical and genetic
/// factor matrices, plus the simulation ground truth when known.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Dataset {
    pub y: Vec<f64>,
    pub e: Matrix,
    pub c: Matrix,
    pub x: Matrix,
    pub truth: Option<GroundTruth>,
}

impl Dataset {
    pub fn new(y: Vec<f64>, e: Matrix, c: Matrix, x: Matrix, truth: Option<GroundTruth>) -> Result<Self> {
        let ds = Self { y, e, c, x, truth };
        ds.validate()?;
        Ok(ds)
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn q(&self) -> usize {
        self.e.cols()
    }

    pub fn m(&self) -> usize {
        self.c.cols()
    }

    pub fn p(&self) -> usize {
        self.x.cols()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.y.len();
        if self.e.rows() != n || self.c.rows() != n || self.x.rows() != n {
            return Err(Error::Config(format!(
                "inconsistent row counts: y={n}, E={}, C={}, X={}",
                self.e.rows(),
                self.c.rows(),
                self.x.rows()
            )));
        }
        if n < self.q() + self.m() + 2 {
            return Err(Error::Config(format!(
                "n = {n} too small for q = {}, m = {}: each marginal model must be estimable",
                self.q(),
                self.m()
            )));
        }
        if self.y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("response y".into()));
        }
        for (name, mat) in [("E", &self.e), ("C", &self.c), ("X", &self.x)] {
            if mat.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("matrix {name}")));
            }
        }
        if let Some(t) = &self.truth {
            t.validate(self.p(), self.q())?;
        }
        Ok(())
    }

    /// Center the response and standardize every E, C and X column to
    /// mean 0, variance 1. Near-constant columns are centered only.
    pub fn standardized(&self) -> Dataset {
        let mut out = self.clone();
        let ybar = out.y.iter().sum::<f64>() / out.y.len() as f64;
        out.y.iter_mut().for_each(|v| *v -= ybar);
        for mat in [&mut out.e, &mut out.c, &mut out.x] {
            for j in 0..mat.cols() {
                standardize_column(mat.col_mut(j));
            }
        }
        out
    }
}

fn standardize_column(col: &mut [f64]) {
    let n = col.len() as f64;
    let mean = col.iter().sum::<f64>() / n;
    col.iter_mut().for_each(|v| *v -= mean);
    let sd = (col.iter().map(|v| v * v).sum::<f64>() / n).sqrt();
    if sd > 1e-12 {
        col.iter_mut().for_each(|v| *v /= sd);
    }
}

/// True effect positions and coefficient values recorded at simulation
/// time. Gene and environment indices are 0-based internally.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    /// (gene, coefficient) of each true main effect.
    pub mains: Vec<(usize, f64)>,
    /// (gene, env, coefficient) of each true interaction effect.
    pub interactions: Vec<(usize, usize, f64)>,
    /// Environmental coefficients (all nonzero).
    pub env_coefs: Vec<f64>,
    /// Clinical coefficients (all nonzero).
    pub clin_coefs: Vec<f64>,
}

impl GroundTruth {
    pub fn validate(&self, p: usize, q: usize) -> Result<()> {
        if self.mains.iter().any(|&(g, _)| g >= p) {
            return Err(Error::Config("true main index out of range".into()));
        }
        if self.interactions.iter().any(|&(g, k, _)| g >= p || k >= q) {
            return Err(Error::Config("true interaction index out of range".into()));
        }
        let mut mg: Vec<usize> = self.mains.iter().map(|&(g, _)| g).collect();
        mg.sort_unstable();
        mg.dedup();
        if mg.len() != self.mains.len() {
            return Err(Error::Config("duplicate true main positions".into()));
        }
        let mut ig: Vec<(usize, usize)> = self.interactions.iter().map(|&(g, k, _)| (g, k)).collect();
        ig.sort_unstable();
        ig.dedup();
        if ig.len() != self.interactions.len() {
            return Err(Error::Config("duplicate true interaction positions".into()));
        }
        Ok(())
    }

    pub fn is_true_main(&self, gene: usize) -> bool {
        self.mains.iter().any(|&(g, _)| g == gene)
    }

    pub fn is_true_interaction(&self, gene: usize, env: usize) -> bool {
        self.interactions.iter().any(|&(g, k, _)| g == gene && k == env)
    }
}

/// The per-gene view fed to one sampler: shared y, E, C plus the gene's
/// own column and its interaction columns W (X_j elementwise each E
/// column).
#[derive(Clone, Debug)]
pub struct MarginalDesign<'d> {
    pub y: &'d [f64],
    pub e: &'d Matrix,
    pub c: &'d Matrix,
    pub x: &'d [f64],
    pub w: Matrix,
    pub gene: usize,
}

impl<'d> MarginalDesign<'d> {
    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn q(&self) -> usize {
        self.e.cols()
    }

    pub fn m(&self) -> usize {
        self.c.cols()
    }
}

/// Build the marginal design for gene j.
pub fn build_marginal_design(data: &Dataset, j: usize) -> Result<MarginalDesign<'_>> {
    if j >= data.p() {
        return Err(Error::Config(format!("gene index {j} out of range (p = {})", data.p())));
    }
    let n = data.n();
    let q = data.q();
    let xj = data.x.col(j);
    let mut w = Matrix::zeros(n, q);
    for k in 0..q {
        let ek = data.e.col(k);
        let wk = w.col_mut(k);
        for i in 0..n {
            wk[i] = xj[i] * ek[i];
        }
    }
    Ok(MarginalDesign {
        y: &data.y,
        e: &data.e,
        c: &data.c,
        x: xj,
        w,
        gene: j,
    })
}

/// Fixed prior constants for all four samplers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    // tau ~ Gamma(a, b)
    pub a: f64,
    pub b: f64,
    // phi1^2 ~ Gamma(c1, d1), phi2^2 ~ Gamma(c2, d2)
    pub c1: f64,
    pub d1: f64,
    pub c2: f64,
    pub d2: f64,
    // pi1 ~ Beta(r1, u1), pi2 ~ Beta(r2, u2)
    pub r1: f64,
    pub u1: f64,
    pub r2: f64,
    pub u2: f64,
    // prior variances of alpha_k and gamma_t
    pub alpha0: f64,
    pub gamma0: f64,
    pub blss: GaussHyperparameters,
}

/// Prior constants specific to the Gaussian-likelihood samplers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussHyperparameters {
    pub r_c: f64,
    pub u_c: f64,
    pub r_e: f64,
    pub u_e: f64,
    pub a_c: f64,
    pub b_c: f64,
    pub a_e: f64,
    pub b_e: f64,
    /// sigma^2 ~ Inverse-Gamma(s, h)
    pub s: f64,
    pub h: f64,
    /// Diagonal value of the alpha prior covariance block.
    pub sigma_alpha0: f64,
    /// Diagonal value of the gamma prior covariance block.
    pub sigma_gamma0: f64,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Self {
            a: 1.0,
            b: 1.0,
            c1: 1.0,
            d1: 1.0,
            c2: 1.0,
            d2: 1.0,
            r1: 1.0,
            u1: 1.0,
            r2: 1.0,
            u2: 1.0,
            alpha0: 100.0,
            gamma0: 100.0,
            blss: GaussHyperparameters::default(),
        }
    }
}

impl Default for GaussHyperparameters {
    fn default() -> Self {
        Self {
            r_c: 1.0,
            u_c: 1.0,
            r_e: 1.0,
            u_e: 1.0,
            a_c: 1.0,
            b_c: 1.0,
            a_e: 1.0,
            b_e: 1.0,
            s: 1.0,
            h: 1.0,
            sigma_alpha0: 100.0,
            sigma_gamma0: 100.0,
        }
    }
}

impl Hyperparameters {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("a", self.a),
            ("b", self.b),
            ("c1", self.c1),
            ("d1", self.d1),
            ("c2", self.c2),
            ("d2", self.d2),
            ("r1", self.r1),
            ("u1", self.u1),
            ("r2", self.r2),
            ("u2", self.u2),
            ("alpha0", self.alpha0),
            ("gamma0", self.gamma0),
            ("blss.r_c", self.blss.r_c),
            ("blss.u_c", self.blss.u_c),
            ("blss.r_e", self.blss.r_e),
            ("blss.u_e", self.blss.u_e),
            ("blss.a_c", self.blss.a_c),
            ("blss.b_c", self.blss.b_c),
            ("blss.a_e", self.blss.a_e),
            ("blss.b_e", self.blss.b_e),
            ("blss.s", self.blss.s),
            ("blss.h", self.blss.h),
            ("blss.sigma_alpha0", self.blss.sigma_alpha0),
            ("blss.sigma_gamma0", self.blss.sigma_gamma0),
        ];
        for (name, v) in fields {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Domain(format!("hyperparameter {name} must be > 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// Current values of all sampled quantities for one chain of the
/// Laplace-likelihood samplers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainState {
    pub alpha: Vec<f64>,
    pub gamma: Vec<f64>,
    pub beta: f64,
    pub eta: Vec<f64>,
    pub v: Vec<f64>,
    pub s1: f64,
    pub s2: Vec<f64>,
    pub tau: f64,
    pub phi1_sq: f64,
    pub phi2_sq: f64,
    pub pi1: f64,
    pub pi2: f64,
    /// Fixed at 8 (quantile level 0.5).
    pub xi2_sq: f64,
    /// Explicit spike indicators; never inferred from float equality.
    pub beta_active: bool,
    pub eta_active: Vec<bool>,
}

impl ChainState {
    pub fn check_invariants(&self) -> Result<()> {
        let pos = |name: &str, v: f64| -> Result<()> {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::NonFinite(format!("chain state {name} = {v}")));
            }
            Ok(())
        };
        for (i, &vi) in self.v.iter().enumerate() {
            pos(&format!("v[{i}]"), vi)?;
        }
        pos("s1", self.s1)?;
        for (k, &s) in self.s2.iter().enumerate() {
            pos(&format!("s2[{k}]"), s)?;
        }
        pos("tau", self.tau)?;
        pos("phi1_sq", self.phi1_sq)?;
        pos("phi2_sq", self.phi2_sq)?;
        if !(0.0..=1.0).contains(&self.pi1) || !(0.0..=1.0).contains(&self.pi2) {
            return Err(Error::NonFinite(format!("pi out of [0,1]: ({}, {})", self.pi1, self.pi2)));
        }
        if self.xi2_sq != XI2_SQ {
            return Err(Error::Config(format!("xi2_sq must stay {XI2_SQ}, got {}", self.xi2_sq)));
        }
        Ok(())
    }
}

/// How a chain is started.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitMode {
    /// All-neutral deterministic start: coefficients 0, scales 1, pi 0.5.
    Neutral,
    /// Coefficients drawn N(0, 2^2) for dispersed multi-chain diagnostics.
    Overdispersed,
}

/// Initialize a chain for the Laplace-likelihood samplers.
pub fn init_chain(
    design: &MarginalDesign<'_>,
    _hp: &Hyperparameters,
    mode: InitMode,
    rng: &mut RngStream,
) -> Result<ChainState> {
    let q = design.q();
    let m = design.m();
    let n = design.n();
    let draw = |rng: &mut RngStream| dist::sample_normal(0.0, 4.0, rng);
    let (alpha, gamma, beta, eta) = match mode {
        InitMode::Neutral => (vec![0.0; q], vec![0.0; m], 0.0, vec![0.0; q]),
        InitMode::Overdispersed => {
            let mut alpha = Vec::with_capacity(q);
            for _ in 0..q {
                alpha.push(draw(rng)?);
            }
            let mut gamma = Vec::with_capacity(m);
            for _ in 0..m {
                gamma.push(draw(rng)?);
            }
            let beta = draw(rng)?;
            let mut eta = Vec::with_capacity(q);
            for _ in 0..q {
                eta.push(draw(rng)?);
            }
            (alpha, gamma, beta, eta)
        }
    };
    let beta_active = beta != 0.0;
    let eta_active = eta.iter().map(|&x| x != 0.0).collect();
    Ok(ChainState {
        alpha,
        gamma,
        beta,
        eta,
        v: vec![1.0; n],
        s1: 1.0,
        s2: vec![1.0; q],
        tau: 1.0,
        phi1_sq: 1.0,
        phi2_sq: 1.0,
        pi1: 0.5,
        pi2: 0.5,
        xi2_sq: XI2_SQ,
        beta_active,
        eta_active,
    })
}

/// Which of the four samplers to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MethodId {
    Ladblss,
    Ladbl,
    Blss,
    Bl,
}

impl MethodId {
    pub const ALL: [MethodId; 4] = [MethodId::Ladblss, MethodId::Ladbl, MethodId::Blss, MethodId::Bl];

    /// Whether the method carries spike-and-slab indicators.
    pub fn has_spike(&self) -> bool {
        matches!(self, MethodId::Ladblss | MethodId::Blss)
    }

    pub fn name(&self) -> &'static str {
        match self {
            MethodId::Ladblss => "ladblss",
            MethodId::Ladbl => "ladbl",
            MethodId::Blss => "blss",
            MethodId::Bl => "bl",
        }
    }
}

impl std::fmt::Display for MethodId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for MethodId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ladblss" => Ok(MethodId::Ladblss),
            "ladbl" => Ok(MethodId::Ladbl),
            "blss" => Ok(MethodId::Blss),
            "bl" => Ok(MethodId::Bl),
            other => Err(Error::Config(format!("unknown method '{other}'"))),
        }
    }
}

/// MCMC run length settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GibbsConfig {
    pub n_iter: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub n_chains: usize,
    /// Dispersed starting points for multi-chain convergence runs.
    pub overdispersed_init: bool,
    /// Credible levels at which equal-tailed intervals are retained.
    pub level_grid: Vec<f64>,
}

/// Default credible-level grid: 0.50 to 0.95 in steps of 0.05, plus 0.99.
pub fn default_level_grid() -> Vec<f64> {
    let mut grid: Vec<f64> = (0..10).map(|i| 0.50 + 0.05 * i as f64).collect();
    grid.push(0.99);
    grid
}

impl Default for GibbsConfig {
    fn default() -> Self {
        Self {
            n_iter: 10_000,
            burn_in: 5_000,
            thin: 1,
            n_chains: 1,
            overdispersed_init: false,
            level_grid: default_level_grid(),
        }
    }
}

impl GibbsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.burn_in >= self.n_iter {
            return Err(Error::Config(format!(
                "burn_in ({}) must be < n_iter ({})",
                self.burn_in, self.n_iter
            )));
        }
        if self.thin == 0 {
            return Err(Error::Config("thin must be >= 1".into()));
        }
        if self.n_chains == 0 {
            return Err(Error::Config("n_chains must be >= 1".into()));
        }
        for &l in &self.level_grid {
            if !(0.0 < l && l < 1.0) {
                return Err(Error::Config(format!("credible level {l} outside (0,1)")));
            }
        }
        Ok(())
    }

    /// Retained draws per chain.
    pub fn retained(&self) -> usize {
        (self.n_iter - self.burn_in).div_ceil(self.thin)
    }
}

/// Retained draws and summary statistics for one scalar effect.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectSummary {
    pub draws: Vec<f64>,
    /// Slab-membership indicators; `None` for methods without a spike.
    pub indicators: Option<Vec<bool>>,
    pub median: f64,
    /// Posterior inclusion probability; `None` for methods without a spike.
    pub inclusion: Option<f64>,
    /// Equal-tailed (lower, upper) interval per level of the grid.
    pub intervals: Vec<(f64, (f64, f64))>,
}

impl EffectSummary {
    pub fn from_draws(draws: Vec<f64>, indicators: Option<Vec<bool>>, levels: &[f64]) -> Result<Self> {
        if draws.is_empty() {
            return Err(Error::EmptyDraws("effect summary".into()));
        }
        if let Some(ind) = &indicators {
            if ind.len() != draws.len() {
                return Err(Error::Config("indicator/draw length mismatch".into()));
            }
        }
        let mut sorted = draws.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite draws"));
        let median = quantile_sorted(&sorted, 0.5);
        let intervals = levels
            .iter()
            .map(|&l| {
                (
                    l,
                    (
                        quantile_sorted(&sorted, (1.0 - l) / 2.0),
                        quantile_sorted(&sorted, (1.0 + l) / 2.0),
                    ),
                )
            })
            .collect();
        let inclusion = indicators
            .as_ref()
            .map(|ind| ind.iter().filter(|&&b| b).count() as f64 / ind.len() as f64);
        Ok(Self {
            draws,
            indicators,
            median,
            inclusion,
            intervals,
        })
    }

    /// Fraction of grid levels at which the interval excludes zero;
    /// the identification score for methods without a spike.
    pub fn credible_score(&self) -> f64 {
        if self.intervals.is_empty() {
            return 0.0;
        }
        let hits = self
            .intervals
            .iter()
            .filter(|(_, (lo, hi))| *lo > 0.0 || *hi < 0.0)
            .count();
        hits as f64 / self.intervals.len() as f64
    }

    /// Inclusion probability when available, credible score otherwise.
    pub fn score(&self) -> f64 {
        self.inclusion.unwrap_or_else(|| self.credible_score())
    }

    /// Equal-tailed interval at the requested level (must be on the grid).
    pub fn interval(&self, level: f64) -> Option<(f64, f64)> {
        self.intervals
            .iter()
            .find(|(l, _)| (*l - level).abs() < 1e-12)
            .map(|(_, iv)| *iv)
    }
}

/// Linear-interpolation quantile (R type 7) of a sorted slice.
pub fn quantile_sorted(sorted: &[f64], prob: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * prob;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if lo + 1 >= n {
        sorted[n - 1]
    } else {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    }
}

/// Full posterior output of one gene under one method.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub method: MethodId,
    pub gene: usize,
    pub alpha: Vec<EffectSummary>,
    pub gamma: Vec<EffectSummary>,
    pub beta: EffectSummary,
    pub eta: Vec<EffectSummary>,
    /// Retained draws per chain contributing to this summary.
    pub retained: usize,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamId;
    use approx::assert_abs_diff_eq;

    fn toy_dataset() -> Dataset {
        let y = vec![1.0, 2.0, 3.0, 4.0, 5.0];
        let e = Matrix::from_columns(&[vec![0.5, 1.0, -1.0, 0.0, 2.0], vec![1.0, 1.0, 1.0, 1.0, 1.0]]).unwrap();
        let c = Matrix::from_columns(&[vec![0.1, 0.2, 0.3, 0.4, 0.5]]).unwrap();
        let x = Matrix::from_columns(&[
            vec![0.0, 0.0, 0.0, 0.0, 0.0],
            vec![2.0, 1.0, 0.0, -1.0, 3.0],
        ])
        .unwrap();
        Dataset::new(y, e, c, x, None).unwrap()
    }

    #[test]
    fn marginal_design_zero_column_gives_zero_w() {
        let ds = toy_dataset();
        let d = build_marginal_design(&ds, 0).unwrap();
        assert!(d.w.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn marginal_design_scalar_product() {
        let ds = toy_dataset();
        let d = build_marginal_design(&ds, 1).unwrap();
        // X[0,1] = 2, E[0,0] = 0.5 -> w[0,0] = 1.0
        assert_eq!(d.w.get(0, 0), 1.0);
    }

    #[test]
    fn marginal_design_matches_direct_product() {
        let mut rng = RngStream::new(5, StreamId::new(0, 0, 0));
        let n = 5;
        let rand_col = |rng: &mut RngStream| (0..n).map(|_| rng.uniform() * 2.0 - 1.0).collect::<Vec<_>>();
        let e = Matrix::from_columns(&[rand_col(&mut rng), rand_col(&mut rng)]).unwrap();
        let c = Matrix::from_columns(&[rand_col(&mut rng)]).unwrap();
        let x = Matrix::from_columns(&[rand_col(&mut rng)]).unwrap();
        let y = rand_col(&mut rng);
        let ds = Dataset::new(y, e, c, x, None).unwrap();
        let d = build_marginal_design(&ds, 0).unwrap();
        for k in 0..2 {
            for i in 0..n {
                assert_eq!(d.w.get(i, k), ds.x.get(i, 0) * ds.e.get(i, k));
            }
        }
        assert!(build_marginal_design(&ds, 7).is_err());
    }

    #[test]
    fn design_is_pure() {
        let ds = toy_dataset();
        let a = build_marginal_design(&ds, 1).unwrap();
        let b = build_marginal_design(&ds, 1).unwrap();
        assert_eq!(a.w, b.w);
        assert_eq!(a.x, b.x);
    }

    #[test]
    fn neutral_init_defaults() {
        let ds = toy_dataset();
        let d = build_marginal_design(&ds, 1).unwrap();
        let hp = Hyperparameters::default();
        let mut rng = RngStream::new(1, StreamId::new(0, 0, 0));
        let st = init_chain(&d, &hp, InitMode::Neutral, &mut rng).unwrap();
        assert!(st.v.iter().all(|&v| v == 1.0));
        assert_eq!(st.tau, 1.0);
        assert_eq!(st.s1, 1.0);
        assert!(st.s2.iter().all(|&s| s == 1.0));
        assert_eq!(st.pi1, 0.5);
        assert_eq!(st.pi2, 0.5);
        assert_eq!(st.beta, 0.0);
        assert!(st.alpha.iter().chain(st.eta.iter()).all(|&x| x == 0.0));
        assert!(!st.beta_active);
        st.check_invariants().unwrap();
    }

    #[test]
    fn overdispersed_init_distinct_across_chains() {
        let ds = toy_dataset();
        let d = build_marginal_design(&ds, 1).unwrap();
        let hp = Hyperparameters::default();
        let mut r0 = RngStream::new(1, StreamId::new(0, 0, 0));
        let mut r1 = RngStream::new(1, StreamId::new(0, 0, 1));
        let s0 = init_chain(&d, &hp, InitMode::Overdispersed, &mut r0).unwrap();
        let s1 = init_chain(&d, &hp, InitMode::Overdispersed, &mut r1).unwrap();
        assert_ne!(s0.beta, s1.beta);
        s0.check_invariants().unwrap();
    }

    #[test]
    fn init_is_deterministic_per_stream() {
        let ds = toy_dataset();
        let d = build_marginal_design(&ds, 1).unwrap();
        let hp = Hyperparameters::default();
        let mut a = RngStream::new(9, StreamId::new(0, 3, 1));
        let mut b = RngStream::new(9, StreamId::new(0, 3, 1));
        let sa = init_chain(&d, &hp, InitMode::Overdispersed, &mut a).unwrap();
        let sb = init_chain(&d, &hp, InitMode::Overdispersed, &mut b).unwrap();
        assert_eq!(sa, sb);
    }

    #[test]
    fn chain_state_serialization_round_trips() {
        let ds = toy_dataset();
        let d = build_marginal_design(&ds, 1).unwrap();
        let hp = Hyperparameters::default();
        let mut rng = RngStream::new(2, StreamId::new(0, 0, 0));
        let st = init_chain(&d, &hp, InitMode::Overdispersed, &mut rng).unwrap();
        let json = serde_json::to_string(&st).unwrap();
        let back: ChainState = serde_json::from_str(&json).unwrap();
        assert_eq!(st, back);
    }

    #[test]
    fn standardization_centers_and_scales() {
        let ds = toy_dataset().standardized();
        let n = ds.n() as f64;
        assert_abs_diff_eq!(ds.y.iter().sum::<f64>(), 0.0, epsilon = 1e-12);
        for j in 0..ds.x.cols() {
            let col = ds.x.col(j);
            let mean = col.iter().sum::<f64>() / n;
            assert_abs_diff_eq!(mean, 0.0, epsilon = 1e-12);
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            // first X column is constant zero: centered only
            if j == 1 {
                assert_abs_diff_eq!(var, 1.0, epsilon = 1e-12);
            }
        }
        // constant-1 E column becomes all-zero, not NaN
        assert!(ds.e.col(1).iter().all(|v| v.is_finite()));
    }

    #[test]
    fn effect_summary_statistics() {
        let levels = [0.5, 0.95];
        let s = EffectSummary::from_draws(vec![1.0, 2.0, 3.0, 4.0], None, &levels).unwrap();
        assert_eq!(s.median, 2.5);
        assert_eq!(s.inclusion, None);
        let ind = vec![true, false, true, false];
        let s2 = EffectSummary::from_draws(vec![1.0, 0.0, 3.0, 0.0], Some(ind), &levels).unwrap();
        assert_eq!(s2.inclusion, Some(0.5));
        assert!(EffectSummary::from_draws(vec![], None, &levels).is_err());
    }

    #[test]
    fn gibbs_config_validation() {
        let mut cfg = GibbsConfig::default();
        assert!(cfg.validate().is_ok());
        assert_eq!(cfg.retained(), 5000);
        cfg.burn_in = cfg.n_iter;
        assert!(cfg.validate().is_err());
        let mut cfg2 = GibbsConfig::default();
        cfg2.thin = 0;
        assert!(cfg2.validate().is_err());
    }

    #[test]
    fn hyperparameters_validation() {
        let hp = Hyperparameters::default();
        assert!(hp.validate().is_ok());
        let mut bad = hp.clone();
        bad.alpha0 = 0.0;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn dataset_validation_rejects_bad_shapes() {
        let e = Matrix::from_columns(&[vec![1.0, 2.0]]).unwrap();
        let c = Matrix::from_columns(&[vec![1.0, 2.0]]).unwrap();
        let x = Matrix::from_columns(&[vec![1.0, 2.0]]).unwrap();
        // n = 2 < q + m + 2 = 4
        assert!(Dataset::new(vec![1.0, 2.0], e.clone(), c.clone(), x.clone(), None).is_err());
        let y3 = vec![1.0, 2.0, 3.0];
        assert!(Dataset::new(y3, e, c, x, None).is_err());
    }
}
