//! Whole-panel orchestration: one sampler run per gene across all p
//! genes, data-parallel with deterministic per-gene streams, plus the
//! marginal least-squares prescreen used on real data.

use crate::error::{Error, Result};
use crate::model::{
    build_marginal_design, Dataset, GibbsConfig, Hyperparameters, MethodId, PosteriorSummary,
};
use crate::rng::{RngStream, StreamId};
use crate::sampler::{pool_chains, run_chain};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, StudentsT};

/// Scan-level options beyond the per-chain Gibbs settings.
#[derive(Clone, Debug)]
pub struct ScanOptions {
    pub seed: u64,
    /// Replicate index folded into every stream id, so simulation
    /// studies are reproducible per replicate.
    pub replicate: u64,
    /// Standardize predictors and center the response before fitting.
    pub standardize: bool,
    /// Abort when more than this fraction of genes fail.
    pub max_failure_rate: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            replicate: 0,
            standardize: true,
            max_failure_rate: 0.01,
        }
    }
}

/// Per-gene failure record.
#[derive(Clone, Debug)]
pub struct GeneFailure {
    pub gene: usize,
    pub message: String,
}

/// Scan output: one summary slot per gene (None where that gene
/// failed), failures listed separately.
#[derive(Clone, Debug)]
pub struct ScanOutput {
    pub summaries: Vec<Option<PosteriorSummary>>,
    pub failures: Vec<GeneFailure>,
}

impl ScanOutput {
    pub fn successes(&self) -> impl Iterator<Item = &PosteriorSummary> {
        self.summaries.iter().flatten()
    }
}

/// Fit one gene: `n_chains` chains on streams (seed, replicate, gene,
/// chain), pooled into a single summary.
pub fn fit_gene(
    data: &Dataset,
    gene: usize,
    method: MethodId,
    hp: &Hyperparameters,
    cfg: &GibbsConfig,
    opts: &ScanOptions,
) -> Result<PosteriorSummary> {
    let chains = fit_gene_chains(data, gene, method, hp, cfg, opts)?;
    pool_chains(chains)
}

/// Fit one gene and keep the chains separate (multi-chain diagnostics).
pub fn fit_gene_chains(
    data: &Dataset,
    gene: usize,
    method: MethodId,
    hp: &Hyperparameters,
    cfg: &GibbsConfig,
    opts: &ScanOptions,
) -> Result<Vec<PosteriorSummary>> {
    let design = build_marginal_design(data, gene)?;
    (0..cfg.n_chains)
        .map(|chain| {
            let mut rng = RngStream::new(
                opts.seed,
                StreamId::new(opts.replicate, gene as u64, chain as u64),
            );
            run_chain(method, &design, hp, cfg, &mut rng)
        })
        .collect()
}

/// Run the requested sampler on every gene. Genes are independent
/// tasks; the output is indexed by gene and identical for any thread
/// count. Per-gene failures are recorded and skipped unless their
/// fraction exceeds `opts.max_failure_rate`.
pub fn marginal_scan(
    data: &Dataset,
    method: MethodId,
    hp: &Hyperparameters,
    cfg: &GibbsConfig,
    opts: &ScanOptions,
) -> Result<ScanOutput> {
    cfg.validate()?;
    hp.validate()?;
    data.validate()?;
    let prepared;
    let data = if opts.standardize {
        prepared = data.standardized();
        &prepared
    } else {
        data
    };
    let results: Vec<std::result::Result<PosteriorSummary, GeneFailure>> = (0..data.p())
        .into_par_iter()
        .map(|gene| {
            fit_gene_chains(data, gene, method, hp, cfg, opts)
                .and_then(pool_chains)
                .map_err(|e| GeneFailure {
                    gene,
                    message: e.to_string(),
                })
        })
        .collect();
    assemble_scan(results, data.p(), opts.max_failure_rate)
}

/// Collect per-gene outcomes, enforcing the failure budget.
fn assemble_scan(
    results: Vec<std::result::Result<PosteriorSummary, GeneFailure>>,
    total: usize,
    max_failure_rate: f64,
) -> Result<ScanOutput> {
    let mut summaries = Vec::with_capacity(total);
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(s) => summaries.push(Some(s)),
            Err(f) => {
                summaries.push(None);
                failures.push(f);
            }
        }
    }
    if !failures.is_empty() && failures.len() as f64 > max_failure_rate * total as f64 {
        return Err(Error::ScanFailures {
            failed: failures.len(),
            total,
            first: failures[0].message.clone(),
        });
    }
    Ok(ScanOutput { summaries, failures })
}

/// Prescreen result: kept genes plus per-gene exclusion notes.
#[derive(Clone, Debug)]
pub struct PrescreenResult {
    pub kept: Vec<usize>,
    pub warnings: Vec<GeneFailure>,
}

/// Marginal least-squares prescreen: per gene, fit y on [E C X_j W_j]
/// by OLS and keep the gene when at least `min_hits` of its 1 + q
/// gene-linked coefficients have two-sided t-test p-values below
/// `p_threshold`. Rank-deficient genes are excluded with a warning.
pub fn prescreen(data: &Dataset, p_threshold: f64, min_hits: usize) -> Result<PrescreenResult> {
    if !(0.0 < p_threshold && p_threshold < 1.0) {
        return Err(Error::Config(format!("p threshold {p_threshold} outside (0,1)")));
    }
    let n = data.n();
    let q = data.q();
    let m = data.m();
    let d = q + m + 1 + q;
    if n <= d {
        return Err(Error::Config(format!(
            "prescreen needs n > q + m + 1 + q = {d}, got n = {n}"
        )));
    }
    let df = (n - d) as f64;
    let t_dist = StudentsT::new(0.0, 1.0, df)
        .map_err(|e| Error::Config(format!("t({df}): {e}")))?;

    let per_gene: Vec<std::result::Result<bool, GeneFailure>> = (0..data.p())
        .into_par_iter()
        .map(|gene| {
            let design = build_marginal_design(data, gene).map_err(|e| GeneFailure {
                gene,
                message: e.to_string(),
            })?;
            // Design matrix [E C x W], one row per observation.
            let mut dm = DMatrix::zeros(n, d);
            for k in 0..q {
                let col = design.e.col(k);
                for i in 0..n {
                    dm[(i, k)] = col[i];
                }
            }
            for t in 0..m {
                let col = design.c.col(t);
                for i in 0..n {
                    dm[(i, q + t)] = col[i];
                }
            }
            for i in 0..n {
                dm[(i, q + m)] = design.x[i];
            }
            for k in 0..q {
                let col = design.w.col(k);
                for i in 0..n {
                    dm[(i, q + m + 1 + k)] = col[i];
                }
            }
            let y = DVector::from_column_slice(&data.y);
            let xtx = dm.transpose() * &dm;
            let chol = xtx.cholesky().ok_or_else(|| GeneFailure {
                gene,
                message: "rank-deficient marginal design".into(),
            })?;
            let xty = dm.transpose() * &y;
            let coef = chol.solve(&xty);
            let resid = &y - &dm * &coef;
            let rss: f64 = resid.iter().map(|r| r * r).sum();
            let s2 = rss / df;
            let inv = chol.inverse();
            // t-tests on the gene-linked coefficients only.
            let mut hits = 0usize;
            for idx in (q + m)..d {
                let se = (s2 * inv[(idx, idx)]).sqrt();
                if se == 0.0 {
                    continue;
                }
                let t_stat = coef[idx] / se;
                let p = 2.0 * (1.0 - t_dist.cdf(t_stat.abs()));
                if p < p_threshold {
                    hits += 1;
                }
            }
            Ok(hits >= min_hits)
        })
        .collect();

    let mut kept = Vec::new();
    let mut warnings = Vec::new();
    for (gene, r) in per_gene.into_iter().enumerate() {
        match r {
            Ok(true) => kept.push(gene),
            Ok(false) => {}
            Err(w) => warnings.push(w),
        }
    }
    Ok(PrescreenResult { kept, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::ErrorLaw;
    use crate::simulate::{simulate_dataset, GeneticSetting, SimConfig};

    fn small_cfg() -> GibbsConfig {
        GibbsConfig {
            n_iter: 200,
            burn_in: 100,
            ..GibbsConfig::default()
        }
    }

    fn small_sim(p: usize, seed: u64) -> Dataset {
        let cfg = SimConfig {
            n: 40,
            p,
            q: 2,
            m: 1,
            seed,
            setting: GeneticSetting::Expression,
            error: ErrorLaw::Normal01,
            n_true_main: p.min(2),
            n_true_int: p.min(2),
            ..SimConfig::default()
        };
        simulate_dataset(&cfg, 0).unwrap()
    }

    #[test]
    fn single_gene_scan_equals_direct_run() {
        let ds = small_sim(1, 21);
        let hp = Hyperparameters::default();
        let cfg = small_cfg();
        let opts = ScanOptions::default();
        let scan = marginal_scan(&ds, MethodId::Ladblss, &hp, &cfg, &opts).unwrap();
        // Stream (seed, 0, 0, 0) on the standardized data.
        let std = ds.standardized();
        let design = build_marginal_design(&std, 0).unwrap();
        let mut rng = RngStream::new(0, StreamId::new(0, 0, 0));
        let direct = run_chain(MethodId::Ladblss, &design, &hp, &cfg, &mut rng).unwrap();
        assert_eq!(scan.summaries[0].as_ref().unwrap(), &direct);
    }

    #[test]
    fn scan_is_thread_count_invariant() {
        let ds = small_sim(6, 22);
        let hp = Hyperparameters::default();
        let cfg = small_cfg();
        let opts = ScanOptions::default();
        let run_with = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| marginal_scan(&ds, MethodId::Blss, &hp, &cfg, &opts).unwrap())
        };
        let a = run_with(1);
        let b = run_with(2);
        for (x, y) in a.summaries.iter().zip(b.summaries.iter()) {
            assert_eq!(x, y);
        }
    }

    #[test]
    fn scan_retained_counts() {
        let ds = small_sim(3, 23);
        let hp = Hyperparameters::default();
        let cfg = GibbsConfig {
            n_iter: 150,
            burn_in: 50,
            thin: 2,
            ..GibbsConfig::default()
        };
        let opts = ScanOptions::default();
        for method in MethodId::ALL {
            let scan = marginal_scan(&ds, method, &hp, &cfg, &opts).unwrap();
            for s in scan.successes() {
                assert_eq!(s.retained, cfg.retained());
            }
        }
    }

    #[test]
    fn failure_budget_enforced() {
        let fail = |gene: usize| GeneFailure {
            gene,
            message: "boom".into(),
        };
        let ok_results: Vec<std::result::Result<PosteriorSummary, GeneFailure>> =
            vec![Err(fail(0)), Err(fail(1))];
        // 2 failures of 100 genes > 1%.
        assert!(assemble_scan(ok_results, 100, 0.01).is_err());
        let one: Vec<std::result::Result<PosteriorSummary, GeneFailure>> = vec![Err(fail(0))];
        let out = assemble_scan(one, 100, 0.01).unwrap();
        assert_eq!(out.failures.len(), 1);
        assert!(out.summaries[0].is_none());
    }

    #[test]
    fn prescreen_null_genes_mostly_excluded() {
        // Pure-noise genes: P(kept) = P(>= 2 of 3 p-values < 0.05) for
        // q = 2 (three gene-linked tests). Expected keep rate is small.
        let cfg = SimConfig {
            n: 60,
            p: 200,
            q: 2,
            m: 1,
            seed: 31,
            n_true_main: 0,
            n_true_int: 0,
            ..SimConfig::default()
        };
        let ds = simulate_dataset(&cfg, 0).unwrap();
        let res = prescreen(&ds, 0.05, 2).unwrap();
        // Binomial(3, 0.05) tail beyond 1: about 0.007; allow slack for
        // correlation between the tests.
        let kept_frac = res.kept.len() as f64 / 200.0;
        assert!(kept_frac < 0.06, "kept {kept_frac}");
        assert!(res.warnings.is_empty());
    }

    #[test]
    fn prescreen_keeps_strong_gene_and_vacuous_filter() {
        let cfg = SimConfig {
            n: 200,
            p: 10,
            q: 2,
            m: 1,
            seed: 32,
            n_true_main: 1,
            n_true_int: 0,
            ..SimConfig::default()
        };
        let mut ds = simulate_dataset(&cfg, 0).unwrap();
        // Boost the true main effect to beta = 1 for near-sure power.
        let truth = ds.truth.clone().unwrap();
        let strong_gene = truth.mains[0].0;
        for i in 0..ds.n() {
            ds.y[i] += (1.0 - truth.mains[0].1) * ds.x.get(i, strong_gene);
        }
        let res = prescreen(&ds, 0.05, 1).unwrap();
        assert!(res.kept.contains(&strong_gene), "strong gene must be kept");
        // min_hits = 0 keeps every well-posed gene.
        let all = prescreen(&ds, 0.05, 0).unwrap();
        assert_eq!(all.kept.len(), 10);
    }

    #[test]
    fn prescreen_excludes_rank_deficient_gene() {
        // An all-zero gene column makes [E C x W] exactly singular.
        let mut ds = small_sim(4, 33);
        ds.x.col_mut(2).iter_mut().for_each(|v| *v = 0.0);
        let res = prescreen(&ds, 0.05, 0).unwrap();
        assert!(res.warnings.iter().any(|w| w.gene == 2), "gene 2 must warn");
        assert!(!res.kept.contains(&2));
    }
}
