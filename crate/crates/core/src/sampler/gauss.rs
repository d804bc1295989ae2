//! Gibbs samplers for the Gaussian-likelihood comparison methods:
//! Bayesian lasso with spike-and-slab priors (BLSS) and plain Bayesian
//! lasso (BL).
//!
//! Both share one update engine. BL is BLSS with the spikes removed, the
//! pi updates dropped, and the flat 1/sigma^2 prior (s = h = 0 in the
//! sigma^2 conditional, everything always active).

use crate::dist;
use crate::error::{Error, Result};
use crate::model::{Hyperparameters, InitMode, MarginalDesign};
use crate::rng::RngStream;
use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

const COEF_CLAMP: f64 = 1e-12;

/// Sampled quantities of one Gaussian-likelihood chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussState {
    pub alpha: Vec<f64>,
    pub gamma: Vec<f64>,
    pub beta: f64,
    pub eta: Vec<f64>,
    pub tau_c2: f64,
    pub tau_e2: Vec<f64>,
    pub lambda_c2: f64,
    pub lambda_e2: f64,
    pub sigma2: f64,
    pub pi_c: f64,
    pub pi_e: f64,
    pub beta_active: bool,
    pub eta_active: Vec<bool>,
}

impl GaussState {
    pub fn init(design: &MarginalDesign<'_>, mode: InitMode, rng: &mut RngStream) -> Result<Self> {
        let q = design.q();
        let m = design.m();
        let (alpha, gamma, beta, eta) = match mode {
            InitMode::Neutral => (vec![0.0; q], vec![0.0; m], 0.0, vec![0.0; q]),
            InitMode::Overdispersed => {
                let draw = |rng: &mut RngStream| dist::sample_normal(0.0, 4.0, rng);
                let alpha = (0..q).map(|_| draw(rng)).collect::<Result<Vec<_>>>()?;
                let gamma = (0..m).map(|_| draw(rng)).collect::<Result<Vec<_>>>()?;
                let beta = draw(rng)?;
                let eta = (0..q).map(|_| draw(rng)).collect::<Result<Vec<_>>>()?;
                (alpha, gamma, beta, eta)
            }
        };
        let beta_active = beta != 0.0;
        let eta_active = eta.iter().map(|&x| x != 0.0).collect();
        Ok(Self {
            alpha,
            gamma,
            beta,
            eta,
            tau_c2: 1.0,
            tau_e2: vec![1.0; q],
            lambda_c2: 1.0,
            lambda_e2: 1.0,
            sigma2: 1.0,
            pi_c: 0.5,
            pi_e: 0.5,
            beta_active,
            eta_active,
        })
    }

    pub fn check_invariants(&self) -> Result<()> {
        for (name, v) in [
            ("tau_c2", self.tau_c2),
            ("lambda_c2", self.lambda_c2),
            ("lambda_e2", self.lambda_e2),
            ("sigma2", self.sigma2),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::NonFinite(format!("gauss state {name} = {v}")));
            }
        }
        for (k, &t) in self.tau_e2.iter().enumerate() {
            if !(t > 0.0) || !t.is_finite() {
                return Err(Error::NonFinite(format!("gauss state tau_e2[{k}] = {t}")));
            }
        }
        Ok(())
    }
}

/// One chain of the Gaussian-likelihood Gibbs sampler.
pub struct GaussGibbs<'d> {
    design: &'d MarginalDesign<'d>,
    hp: &'d Hyperparameters,
    pub state: GaussState,
    resid: Vec<f64>,
    spike: bool,
    /// BL uses the improper 1/sigma^2 prior: s = h = 0.
    improper_sigma: bool,
    ete: DMatrix<f64>,
    ctc: DMatrix<f64>,
    xtx: f64,
    wtw: Vec<f64>,
}

impl<'d> GaussGibbs<'d> {
    pub fn new(
        design: &'d MarginalDesign<'d>,
        hp: &'d Hyperparameters,
        state: GaussState,
        spike: bool,
    ) -> Result<Self> {
        let mut state = state;
        state.check_invariants()?;
        if !spike {
            // No spike: everything is permanently in the slab.
            state.beta_active = true;
            state.eta_active.iter_mut().for_each(|b| *b = true);
        }
        let n = design.n();
        let q = design.q();
        let m = design.m();
        let gram = |cols: &dyn Fn(usize) -> &'d [f64], d: usize| {
            DMatrix::from_fn(d, d, |a, b| {
                let (ca, cb) = (cols(a), cols(b));
                (0..n).map(|i| ca[i] * cb[i]).sum::<f64>()
            })
        };
        let e = design.e;
        let c = design.c;
        let ete = gram(&|j| e.col(j), q);
        let ctc = gram(&|j| c.col(j), m);
        let xtx = design.x.iter().map(|x| x * x).sum::<f64>();
        let wtw = (0..q)
            .map(|k| design.w.col(k).iter().map(|x| x * x).sum::<f64>())
            .collect();
        let mut s = Self {
            design,
            hp,
            state,
            resid: vec![0.0; n],
            spike,
            improper_sigma: !spike,
            ete,
            ctc,
            xtx,
            wtw,
        };
        s.recompute_residuals();
        Ok(s)
    }

    /// BL is the non-spike engine; BLSS the spike one.
    pub fn is_bl(&self) -> bool {
        !self.spike
    }

    pub fn residuals(&self) -> &[f64] {
        &self.resid
    }

    fn recompute_residuals(&mut self) {
        let d = self.design;
        for i in 0..d.n() {
            let mut mu = 0.0;
            for k in 0..d.q() {
                mu += self.state.alpha[k] * d.e.get(i, k);
            }
            for t in 0..d.m() {
                mu += self.state.gamma[t] * d.c.get(i, t);
            }
            mu += self.state.beta * d.x[i];
            for k in 0..d.q() {
                mu += self.state.eta[k] * d.w.get(i, k);
            }
            self.resid[i] = d.y[i] - mu;
        }
    }

    /// Precision matrix, conditional mean and a draw for one coefficient
    /// block with gram matrix `gram`, prior diagonal `prior_diag` and
    /// current values `old`.
    fn block_update(
        &self,
        cols: impl Fn(usize) -> &'d [f64],
        gram: &DMatrix<f64>,
        prior_diag: f64,
        old: &[f64],
        rng: &mut RngStream,
    ) -> Result<Vec<f64>> {
        let d = old.len();
        if d == 0 {
            return Ok(vec![]);
        }
        let n = self.design.n();
        let sigma2 = self.state.sigma2;
        // U^T partial-residual / sigma^2, with partial = resid + U old.
        let mut b = DVector::zeros(d);
        for a in 0..d {
            let ca = cols(a);
            let mut dot = 0.0;
            for i in 0..n {
                dot += ca[i] * self.resid[i];
            }
            for l in 0..d {
                dot += gram[(a, l)] * old[l];
            }
            b[a] = dot / sigma2;
        }
        let mut prec = gram / sigma2;
        for a in 0..d {
            prec[(a, a)] += 1.0 / prior_diag;
        }
        let chol = Cholesky::new(prec).ok_or_else(|| Error::Singular("coefficient block".into()))?;
        let mean = chol.solve(&b);
        // x = mean + L^-T z has covariance prec^-1.
        let mut z = DVector::zeros(d);
        for a in 0..d {
            z[a] = dist::sample_normal(0.0, 1.0, rng)?;
        }
        let l = chol.l();
        let shift = l.transpose().solve_upper_triangular(&z).ok_or_else(|| {
            Error::Singular("coefficient block back-substitution".into())
        })?;
        Ok((0..d).map(|a| mean[a] + shift[a]).collect())
    }

    /// Conditional mean and covariance of the alpha block (for tests and
    /// oracle comparisons).
    pub fn alpha_conditional(&self) -> Result<(Vec<f64>, DMatrix<f64>)> {
        self.block_conditional(|j| self.design.e.col(j), &self.ete, self.hp.blss.sigma_alpha0, &self.state.alpha)
    }

    fn block_conditional(
        &self,
        cols: impl Fn(usize) -> &'d [f64],
        gram: &DMatrix<f64>,
        prior_diag: f64,
        old: &[f64],
    ) -> Result<(Vec<f64>, DMatrix<f64>)> {
        let d = old.len();
        let n = self.design.n();
        let sigma2 = self.state.sigma2;
        let mut b = DVector::zeros(d);
        for a in 0..d {
            let ca = cols(a);
            let mut dot = 0.0;
            for i in 0..n {
                dot += ca[i] * self.resid[i];
            }
            for l in 0..d {
                dot += gram[(a, l)] * old[l];
            }
            b[a] = dot / sigma2;
        }
        let mut prec = gram / sigma2;
        for a in 0..d {
            prec[(a, a)] += 1.0 / prior_diag;
        }
        let cov = prec
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Singular("block covariance".into()))?;
        let mean = &cov * &b;
        Ok((mean.iter().copied().collect(), cov))
    }

    pub fn update_alpha(&mut self, rng: &mut RngStream) -> Result<()> {
        let old = self.state.alpha.clone();
        let new = self.block_update(
            |j| self.design.e.col(j),
            &self.ete,
            self.hp.blss.sigma_alpha0,
            &old,
            rng,
        )?;
        for k in 0..old.len() {
            let delta = old[k] - new[k];
            if delta != 0.0 {
                let col = self.design.e.col(k);
                for i in 0..self.resid.len() {
                    self.resid[i] += col[i] * delta;
                }
            }
        }
        self.state.alpha = new;
        Ok(())
    }

    pub fn update_gamma(&mut self, rng: &mut RngStream) -> Result<()> {
        let old = self.state.gamma.clone();
        let new = self.block_update(
            |j| self.design.c.col(j),
            &self.ctc,
            self.hp.blss.sigma_gamma0,
            &old,
            rng,
        )?;
        for t in 0..old.len() {
            let delta = old[t] - new[t];
            if delta != 0.0 {
                let col = self.design.c.col(t);
                for i in 0..self.resid.len() {
                    self.resid[i] += col[i] * delta;
                }
            }
        }
        self.state.gamma = new;
        Ok(())
    }

    /// Scalar slab conditional for a gene-linked coefficient:
    /// Sigma = 1/(u'u + 1/tau2), mean = Sigma u'rhat, slab variance
    /// sigma^2 Sigma.
    fn scalar_conditional(&self, u: &[f64], uu: f64, tau2: f64, old: f64) -> (f64, f64, f64) {
        let mut t = 0.0;
        for i in 0..u.len() {
            t += u[i] * self.resid[i];
        }
        t += uu * old;
        let cap = 1.0 / (uu + 1.0 / tau2);
        (cap * t, cap, t)
    }

    /// Spike probability for the Gaussian slab, in log space.
    fn gauss_spike_probability(&self, pi: f64, cap: f64, tau2: f64, t: f64) -> f64 {
        if pi <= 0.0 {
            return 0.0;
        }
        if pi >= 1.0 {
            return 1.0;
        }
        let slab_log_odds =
            ((1.0 - pi) / pi).ln() + 0.5 * (cap / tau2).ln() + cap * t * t / (2.0 * self.state.sigma2);
        if slab_log_odds > 0.0 {
            let e = (-slab_log_odds).exp();
            e / (1.0 + e)
        } else {
            1.0 / (1.0 + slab_log_odds.exp())
        }
    }

    pub fn update_beta(&mut self, rng: &mut RngStream) -> Result<()> {
        let old = self.state.beta;
        let (mean, cap, t) = self.scalar_conditional(self.design.x, self.xtx, self.state.tau_c2, old);
        let (new, active) = if self.spike {
            let lc = self.gauss_spike_probability(self.state.pi_c, cap, self.state.tau_c2, t);
            if rng.uniform() < lc {
                (0.0, false)
            } else {
                (dist::sample_normal(mean, self.state.sigma2 * cap, rng)?, true)
            }
        } else {
            (dist::sample_normal(mean, self.state.sigma2 * cap, rng)?, true)
        };
        let delta = old - new;
        if delta != 0.0 {
            for i in 0..self.resid.len() {
                self.resid[i] += self.design.x[i] * delta;
            }
        }
        self.state.beta = new;
        self.state.beta_active = active;
        Ok(())
    }

    pub fn update_eta_at(&mut self, k: usize, rng: &mut RngStream) -> Result<()> {
        let old = self.state.eta[k];
        let u = self.design.w.col(k);
        let (mean, cap, t) = self.scalar_conditional(u, self.wtw[k], self.state.tau_e2[k], old);
        let (new, active) = if self.spike {
            let le = self.gauss_spike_probability(self.state.pi_e, cap, self.state.tau_e2[k], t);
            if rng.uniform() < le {
                (0.0, false)
            } else {
                (dist::sample_normal(mean, self.state.sigma2 * cap, rng)?, true)
            }
        } else {
            (dist::sample_normal(mean, self.state.sigma2 * cap, rng)?, true)
        };
        let delta = old - new;
        if delta != 0.0 {
            for i in 0..self.resid.len() {
                self.resid[i] += u[i] * delta;
            }
        }
        self.state.eta[k] = new;
        self.state.eta_active[k] = active;
        Ok(())
    }

    pub fn update_eta(&mut self, rng: &mut RngStream) -> Result<()> {
        for k in 0..self.design.q() {
            self.update_eta_at(k, rng)?;
        }
        Ok(())
    }

    /// tau_c^2: prior-exponential when beta is spiked, otherwise the
    /// reciprocal of 1/tau_c^2 ~ IG(sqrt(sigma^2 lambda_c^2 / beta^2),
    /// lambda_c^2).
    pub fn update_tau_c2(&mut self, rng: &mut RngStream) -> Result<()> {
        let lam = self.state.lambda_c2;
        self.state.tau_c2 = if self.spike && !self.state.beta_active {
            dist::sample_exponential(lam / 2.0, rng)?
        } else {
            let b = self.state.beta.abs().max(COEF_CLAMP);
            let mu = (self.state.sigma2 * lam).sqrt() / b;
            1.0 / dist::sample_inverse_gaussian(mu, lam, rng)?
        };
        Ok(())
    }

    pub fn update_tau_e2(&mut self, rng: &mut RngStream) -> Result<()> {
        let lam = self.state.lambda_e2;
        for k in 0..self.design.q() {
            self.state.tau_e2[k] = if self.spike && !self.state.eta_active[k] {
                dist::sample_exponential(lam / 2.0, rng)?
            } else {
                let b = self.state.eta[k].abs().max(COEF_CLAMP);
                let mu = (self.state.sigma2 * lam).sqrt() / b;
                1.0 / dist::sample_inverse_gaussian(mu, lam, rng)?
            };
        }
        Ok(())
    }

    pub fn update_lambda(&mut self, rng: &mut RngStream) -> Result<()> {
        let hb = &self.hp.blss;
        self.state.lambda_c2 =
            dist::sample_gamma(hb.a_c + 1.0, self.state.tau_c2 / 2.0 + hb.b_c, rng)?;
        let te_sum: f64 = self.state.tau_e2.iter().sum();
        self.state.lambda_e2 = dist::sample_gamma(
            hb.a_e + self.design.q() as f64,
            te_sum / 2.0 + hb.b_e,
            rng,
        )?;
        Ok(())
    }

    pub fn update_pi(&mut self, rng: &mut RngStream) -> Result<()> {
        if !self.spike {
            return Ok(());
        }
        let hb = &self.hp.blss;
        let ib = if self.state.beta_active { 1.0 } else { 0.0 };
        self.state.pi_c = dist::sample_beta(hb.r_c + 1.0 - ib, hb.u_c + ib, rng)?;
        let act = self.state.eta_active.iter().filter(|&&b| b).count() as f64;
        let q = self.design.q() as f64;
        self.state.pi_e = dist::sample_beta(hb.r_e + q - act, hb.u_e + act, rng)?;
        Ok(())
    }

    /// Shape of the sigma^2 inverse-gamma conditional given the current
    /// activity indicators. Without a spike every coefficient counts.
    pub fn sigma2_shape(&self) -> f64 {
        let s = if self.improper_sigma { 0.0 } else { self.hp.blss.s };
        let (ib, act) = if self.spike {
            let ib = if self.state.beta_active { 1.0 } else { 0.0 };
            let act = self.state.eta_active.iter().filter(|&&b| b).count() as f64;
            (ib, act)
        } else {
            (1.0, self.design.q() as f64)
        };
        s + (self.design.n() as f64 + ib + act) / 2.0
    }

    /// Scale of the sigma^2 inverse-gamma conditional.
    pub fn sigma2_scale(&self) -> f64 {
        let h = if self.improper_sigma { 0.0 } else { self.hp.blss.h };
        let rss: f64 = self.resid.iter().map(|r| r * r).sum();
        let mut penalty = self.state.beta * self.state.beta / self.state.tau_c2;
        for k in 0..self.state.eta.len() {
            penalty += self.state.eta[k] * self.state.eta[k] / self.state.tau_e2[k];
        }
        h + (rss + penalty) / 2.0
    }

    pub fn update_sigma2(&mut self, rng: &mut RngStream) -> Result<()> {
        let shape = self.sigma2_shape();
        let scale = self.sigma2_scale();
        self.state.sigma2 = 1.0 / dist::sample_gamma(shape, scale, rng)?;
        Ok(())
    }

    /// One full sweep: sigma^2 first (the global scale), then blocks,
    /// gene-linked coefficients, and the shrinkage hierarchy.
    pub fn sweep(&mut self, rng: &mut RngStream) -> Result<()> {
        self.update_sigma2(rng)?;
        self.update_alpha(rng)?;
        self.update_gamma(rng)?;
        self.update_beta(rng)?;
        self.update_eta(rng)?;
        self.update_tau_c2(rng)?;
        self.update_tau_e2(rng)?;
        self.update_lambda(rng)?;
        self.update_pi(rng)?;
        Ok(())
    }
}
