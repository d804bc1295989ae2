//! Method-agnostic chain driver: every sampler exposes the same run
//! interface and produces the same [`PosteriorSummary`] shape, so
//! evaluation code never branches on the method.

pub mod gauss;
pub mod lad;

pub use gauss::{GaussGibbs, GaussState};
pub use lad::LadGibbs;

use crate::error::{Error, Result};
use crate::model::{
    init_chain, EffectSummary, GibbsConfig, Hyperparameters, InitMode, MarginalDesign, MethodId,
    PosteriorSummary,
};
use crate::rng::RngStream;

/// Coefficient snapshot recorded once per retained iteration.
struct DrawBuffers {
    alpha: Vec<Vec<f64>>,
    gamma: Vec<Vec<f64>>,
    beta: Vec<f64>,
    eta: Vec<Vec<f64>>,
    beta_ind: Vec<bool>,
    eta_ind: Vec<Vec<bool>>,
}

impl DrawBuffers {
    fn new(q: usize, m: usize, cap: usize) -> Self {
        Self {
            alpha: vec![Vec::with_capacity(cap); q],
            gamma: vec![Vec::with_capacity(cap); m],
            beta: Vec::with_capacity(cap),
            eta: vec![Vec::with_capacity(cap); q],
            beta_ind: Vec::with_capacity(cap),
            eta_ind: vec![Vec::with_capacity(cap); q],
        }
    }

    fn record(
        &mut self,
        alpha: &[f64],
        gamma: &[f64],
        beta: f64,
        eta: &[f64],
        beta_active: bool,
        eta_active: &[bool],
    ) {
        for (buf, &v) in self.alpha.iter_mut().zip(alpha) {
            buf.push(v);
        }
        for (buf, &v) in self.gamma.iter_mut().zip(gamma) {
            buf.push(v);
        }
        self.beta.push(beta);
        for (buf, &v) in self.eta.iter_mut().zip(eta) {
            buf.push(v);
        }
        self.beta_ind.push(beta_active);
        for (buf, &v) in self.eta_ind.iter_mut().zip(eta_active) {
            buf.push(v);
        }
    }

    fn into_summary(
        self,
        method: MethodId,
        gene: usize,
        levels: &[f64],
    ) -> Result<PosteriorSummary> {
        let spike = method.has_spike();
        let retained = self.beta.len();
        let mk = |draws: Vec<f64>, ind: Option<Vec<bool>>| EffectSummary::from_draws(draws, ind, levels);
        let alpha = self
            .alpha
            .into_iter()
            .map(|d| mk(d, None))
            .collect::<Result<Vec<_>>>()?;
        let gamma = self
            .gamma
            .into_iter()
            .map(|d| mk(d, None))
            .collect::<Result<Vec<_>>>()?;
        let beta = mk(self.beta, spike.then_some(self.beta_ind))?;
        let eta = self
            .eta
            .into_iter()
            .zip(self.eta_ind)
            .map(|(d, ind)| mk(d, spike.then_some(ind)))
            .collect::<Result<Vec<_>>>()?;
        Ok(PosteriorSummary {
            method,
            gene,
            alpha,
            gamma,
            beta,
            eta,
            retained,
        })
    }
}

/// Run one chain of the requested method and summarize the retained
/// draws. The stream covers initialization and all sweeps; identical
/// streams reproduce the chain bit-for-bit.
pub fn run_chain(
    method: MethodId,
    design: &MarginalDesign<'_>,
    hp: &Hyperparameters,
    cfg: &GibbsConfig,
    rng: &mut RngStream,
) -> Result<PosteriorSummary> {
    cfg.validate()?;
    hp.validate()?;
    let mode = if cfg.overdispersed_init {
        InitMode::Overdispersed
    } else {
        InitMode::Neutral
    };
    let mut bufs = DrawBuffers::new(design.q(), design.m(), cfg.retained());
    let gene = design.gene;
    let wrap = |iteration: usize| {
        move |e: Error| Error::Sampler {
            gene,
            iteration,
            message: e.to_string(),
        }
    };

    match method {
        MethodId::Ladblss | MethodId::Ladbl => {
            let state = init_chain(design, hp, mode, rng)?;
            let mut s = LadGibbs::new(design, hp, state, method == MethodId::Ladblss)?;
            for it in 0..cfg.n_iter {
                s.sweep(rng).map_err(wrap(it))?;
                if it >= cfg.burn_in && (it - cfg.burn_in) % cfg.thin == 0 {
                    bufs.record(
                        &s.state.alpha,
                        &s.state.gamma,
                        s.state.beta,
                        &s.state.eta,
                        s.state.beta_active,
                        &s.state.eta_active,
                    );
                }
            }
        }
        MethodId::Blss | MethodId::Bl => {
            let state = GaussState::init(design, mode, rng)?;
            let mut s = GaussGibbs::new(design, hp, state, method == MethodId::Blss)?;
            for it in 0..cfg.n_iter {
                s.sweep(rng).map_err(wrap(it))?;
                if it >= cfg.burn_in && (it - cfg.burn_in) % cfg.thin == 0 {
                    bufs.record(
                        &s.state.alpha,
                        &s.state.gamma,
                        s.state.beta,
                        &s.state.eta,
                        s.state.beta_active,
                        &s.state.eta_active,
                    );
                }
            }
        }
    }
    bufs.into_summary(method, gene, &cfg.level_grid)
}

/// Pool the retained draws of several chains of the same gene/method
/// into one summary.
pub fn pool_chains(chains: Vec<PosteriorSummary>) -> Result<PosteriorSummary> {
    let mut iter = chains.into_iter();
    let first = iter
        .next()
        .ok_or_else(|| Error::EmptyDraws("pool_chains".into()))?;
    let mut acc = first;
    for next in iter {
        if next.method != acc.method || next.gene != acc.gene {
            return Err(Error::Config("pooling chains of different runs".into()));
        }
        acc.retained += next.retained;
        merge_effects(&mut acc.alpha, next.alpha);
        merge_effects(&mut acc.gamma, next.gamma);
        merge_effect(&mut acc.beta, next.beta);
        merge_effects(&mut acc.eta, next.eta);
    }
    // Recompute the summary statistics over the pooled draws.
    let levels: Vec<f64> = acc.beta.intervals.iter().map(|(l, _)| *l).collect();
    let rebuild = |e: &EffectSummary| {
        EffectSummary::from_draws(e.draws.clone(), e.indicators.clone(), &levels)
    };
    let alpha = acc.alpha.iter().map(rebuild).collect::<Result<Vec<_>>>()?;
    let gamma = acc.gamma.iter().map(rebuild).collect::<Result<Vec<_>>>()?;
    let beta = rebuild(&acc.beta)?;
    let eta = acc.eta.iter().map(rebuild).collect::<Result<Vec<_>>>()?;
    Ok(PosteriorSummary {
        method: acc.method,
        gene: acc.gene,
        alpha,
        gamma,
        beta,
        eta,
        retained: acc.retained,
    })
}

fn merge_effect(into: &mut EffectSummary, from: EffectSummary) {
    into.draws.extend(from.draws);
    match (&mut into.indicators, from.indicators) {
        (Some(a), Some(b)) => a.extend(b),
        _ => {}
    }
}

fn merge_effects(into: &mut [EffectSummary], from: Vec<EffectSummary>) {
    for (a, b) in into.iter_mut().zip(from) {
        merge_effect(a, b);
    }
}
