//! Command-line surface for the marginal Bayesian G-E scan pipeline:
//! simulate, scan, fit, evaluate, diagnose.

use clap::{Args, Parser, Subcommand};
use gxescan::diagnostics::{psrf, psrf_trace, ChainMatrix};
use gxescan::dist::ErrorLaw;
use gxescan::error::Error;
use gxescan::evaluate::{interactions_only, mains_only, roc_auc, roc_points, top_k};
use gxescan::io;
use gxescan::model::{GibbsConfig, Hyperparameters, MethodId, PosteriorSummary};
use gxescan::scan::{fit_gene_chains, marginal_scan, prescreen, ScanOptions};
use gxescan::simulate::{simulate_dataset, GeneticSetting, SimConfig};
use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "gxescan",
    version,
    about = "Robust marginal Bayesian variable selection for gene-environment interaction scans"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset (three genetic settings, five error laws)
    Simulate(SimulateArgs),
    /// Run one sampler over every gene and write long-format results
    Scan(ScanArgs),
    /// Fit a single gene, writing per-chain draw matrices
    Fit(FitArgs),
    /// Compute AUC and top-k identification metrics from scan results
    Evaluate(EvaluateArgs),
    /// Gelman-Rubin PSRF summary and trace from fit draws
    Diagnose(DiagnoseArgs),
    /// Marginal least-squares prescreen: keep genes with enough small p-values
    Prescreen(PrescreenArgs),
}

#[derive(Args)]
struct CommonRunArgs {
    /// Plain key = value config file; explicit flags override it
    #[arg(long)]
    config: Option<PathBuf>,

    /// Master seed
    #[arg(long)]
    seed: Option<u64>,

    /// Worker threads (default: all cores)
    #[arg(long)]
    threads: Option<usize>,

    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: CommonRunArgs,

    /// Genetic setting: 1 = expression, 2 = SNP by quartiles, 3 = SNP with LD
    #[arg(long, default_value = "1")]
    setting: String,

    /// Error law: 1 = N(0,1), 2 = t(2), 3 = LogNormal(0,2), 4/5 = Cauchy mixtures
    #[arg(long, default_value = "1")]
    error: String,

    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    q: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    /// AR(1) correlation of the expression panel
    #[arg(long)]
    rho: Option<f64>,
    /// Minor allele frequency (settings 2-3)
    #[arg(long)]
    maf: Option<f64>,
    /// Pairwise LD correlation (setting 3)
    #[arg(long)]
    ld_r: Option<f64>,
    /// Number of true main effects
    #[arg(long)]
    true_main: Option<usize>,
    /// Number of true interaction effects
    #[arg(long)]
    true_int: Option<usize>,
    /// Lower bound of the genetic effect coefficient distribution
    #[arg(long)]
    gene_coef_lo: Option<f64>,
    /// Upper bound of the genetic effect coefficient distribution
    #[arg(long)]
    gene_coef_hi: Option<f64>,
    /// Replicate index (enters the random stream)
    #[arg(long, default_value_t = 0)]
    replicate: u64,
}

#[derive(Args)]
struct GibbsArgs {
    /// Sampler: ladblss, ladbl, blss or bl
    #[arg(long, default_value = "ladblss")]
    method: String,

    /// Total Gibbs iterations
    #[arg(long)]
    iters: Option<usize>,
    /// Burn-in iterations to discard
    #[arg(long)]
    burnin: Option<usize>,
    /// Keep every thin-th draw
    #[arg(long)]
    thin: Option<usize>,
    /// Chains per gene
    #[arg(long)]
    chains: Option<usize>,
    /// Overdispersed chain starts (for PSRF runs)
    #[arg(long)]
    overdispersed: bool,
}

#[derive(Args)]
struct ScanArgs {
    #[command(flatten)]
    common: CommonRunArgs,
    #[command(flatten)]
    gibbs: GibbsArgs,

    /// Dataset CSV (y, E*, C*, X*)
    #[arg(long)]
    data: PathBuf,
    /// Validate X cells as genotype codes {0,1,2}
    #[arg(long)]
    genotype: bool,
    /// Skip predictor standardization / response centering
    #[arg(long)]
    no_standardize: bool,
    /// Replicate index (enters every random stream)
    #[arg(long, default_value_t = 0)]
    replicate: u64,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    common: CommonRunArgs,
    #[command(flatten)]
    gibbs: GibbsArgs,

    /// Dataset CSV
    #[arg(long)]
    data: PathBuf,
    /// Gene to fit (1-based, matching the X columns)
    #[arg(long)]
    gene: usize,
    #[arg(long)]
    genotype: bool,
    #[arg(long)]
    no_standardize: bool,
    #[arg(long, default_value_t = 0)]
    replicate: u64,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    common: CommonRunArgs,

    /// Scan results CSV
    #[arg(long)]
    scores: PathBuf,
    /// Ground-truth sidecar CSV
    #[arg(long)]
    truth: PathBuf,
    /// Top-k selection size per category
    #[arg(long, default_value_t = 100)]
    topk: usize,
}

#[derive(Args)]
struct DiagnoseArgs {
    #[command(flatten)]
    common: CommonRunArgs,

    /// Directory holding draws_chain_*.csv from `fit`
    #[arg(long)]
    draws: PathBuf,
    /// Trace stride in iterations
    #[arg(long, default_value_t = 100)]
    stride: usize,
}

#[derive(Args)]
struct PrescreenArgs {
    #[command(flatten)]
    common: CommonRunArgs,

    /// Dataset CSV
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    genotype: bool,
    /// Two-sided p-value threshold
    #[arg(long, default_value_t = 0.05)]
    p_threshold: f64,
    /// Minimum gene-linked coefficients below the threshold
    #[arg(long, default_value_t = 2)]
    min_hits: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}

/// Config-file map with typed getters; explicit CLI flags take
/// precedence over it, defaults fill the rest.
struct ConfigMap(BTreeMap<String, String>);

impl ConfigMap {
    fn load(path: &Option<PathBuf>) -> Result<Self, Error> {
        Ok(Self(match path {
            Some(p) => io::load_config(p)?,
            None => BTreeMap::new(),
        }))
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, Error> {
        match self.0.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|_| Error::Config(format!("config key {key}: cannot parse '{raw}'"))),
        }
    }

    /// cli flag, else config key, else default.
    fn resolve<T: std::str::FromStr + Clone>(
        &self,
        cli: Option<T>,
        key: &str,
        default: T,
    ) -> Result<T, Error> {
        Ok(cli.or(self.get(key)?).unwrap_or(default))
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Scan(args) => cmd_scan(args),
        Command::Fit(args) => cmd_fit(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Diagnose(args) => cmd_diagnose(args),
        Command::Prescreen(args) => cmd_prescreen(args),
    }
}

fn ensure_out_dir(dir: &Path) -> Result<(), Error> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.display().to_string(),
        source,
    })
}

fn install_threads(threads: Option<usize>) -> Result<(), Error> {
    if let Some(t) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn kv<K: Display, V: Display>(k: K, v: V) -> (String, String) {
    (k.to_string(), v.to_string())
}

fn gibbs_from(args: &GibbsArgs, cfg: &ConfigMap) -> Result<(MethodId, GibbsConfig), Error> {
    let method: MethodId = cfg
        .resolve(Some(args.method.clone()), "gibbs.method", "ladblss".into())?
        .parse()?;
    let gibbs = GibbsConfig {
        n_iter: cfg.resolve(args.iters, "gibbs.iters", 10_000)?,
        burn_in: cfg.resolve(args.burnin, "gibbs.burnin", 5_000)?,
        thin: cfg.resolve(args.thin, "gibbs.thin", 1)?,
        n_chains: cfg.resolve(args.chains, "gibbs.chains", 1)?,
        overdispersed_init: args.overdispersed
            || cfg.get::<bool>("gibbs.overdispersed")?.unwrap_or(false),
        ..GibbsConfig::default()
    };
    gibbs.validate()?;
    Ok((method, gibbs))
}

fn hyper_from(cfg: &ConfigMap) -> Result<Hyperparameters, Error> {
    let mut hp = Hyperparameters::default();
    macro_rules! read {
        ($key:literal, $field:expr) => {
            if let Some(v) = cfg.get::<f64>($key)? {
                $field = v;
            }
        };
    }
    read!("hyper.a", hp.a);
    read!("hyper.b", hp.b);
    read!("hyper.c1", hp.c1);
    read!("hyper.d1", hp.d1);
    read!("hyper.c2", hp.c2);
    read!("hyper.d2", hp.d2);
    read!("hyper.r1", hp.r1);
    read!("hyper.u1", hp.u1);
    read!("hyper.r2", hp.r2);
    read!("hyper.u2", hp.u2);
    read!("hyper.alpha0", hp.alpha0);
    read!("hyper.gamma0", hp.gamma0);
    read!("hyper.blss.r_c", hp.blss.r_c);
    read!("hyper.blss.u_c", hp.blss.u_c);
    read!("hyper.blss.r_e", hp.blss.r_e);
    read!("hyper.blss.u_e", hp.blss.u_e);
    read!("hyper.blss.a_c", hp.blss.a_c);
    read!("hyper.blss.b_c", hp.blss.b_c);
    read!("hyper.blss.a_e", hp.blss.a_e);
    read!("hyper.blss.b_e", hp.blss.b_e);
    read!("hyper.blss.s", hp.blss.s);
    read!("hyper.blss.h", hp.blss.h);
    read!("hyper.blss.sigma_alpha0", hp.blss.sigma_alpha0);
    read!("hyper.blss.sigma_gamma0", hp.blss.sigma_gamma0);
    hp.validate()?;
    Ok(hp)
}

fn hyper_manifest(hp: &Hyperparameters, entries: &mut Vec<(String, String)>) {
    entries.push(kv("hyper.a", hp.a));
    entries.push(kv("hyper.b", hp.b));
    entries.push(kv("hyper.c1", hp.c1));
    entries.push(kv("hyper.d1", hp.d1));
    entries.push(kv("hyper.c2", hp.c2));
    entries.push(kv("hyper.d2", hp.d2));
    entries.push(kv("hyper.r1", hp.r1));
    entries.push(kv("hyper.u1", hp.u1));
    entries.push(kv("hyper.r2", hp.r2));
    entries.push(kv("hyper.u2", hp.u2));
    entries.push(kv("hyper.alpha0", hp.alpha0));
    entries.push(kv("hyper.gamma0", hp.gamma0));
    entries.push(kv("hyper.blss.r_c", hp.blss.r_c));
    entries.push(kv("hyper.blss.u_c", hp.blss.u_c));
    entries.push(kv("hyper.blss.r_e", hp.blss.r_e));
    entries.push(kv("hyper.blss.u_e", hp.blss.u_e));
    entries.push(kv("hyper.blss.a_c", hp.blss.a_c));
    entries.push(kv("hyper.blss.b_c", hp.blss.b_c));
    entries.push(kv("hyper.blss.a_e", hp.blss.a_e));
    entries.push(kv("hyper.blss.b_e", hp.blss.b_e));
    entries.push(kv("hyper.blss.s", hp.blss.s));
    entries.push(kv("hyper.blss.h", hp.blss.h));
    entries.push(kv("hyper.blss.sigma_alpha0", hp.blss.sigma_alpha0));
    entries.push(kv("hyper.blss.sigma_gamma0", hp.blss.sigma_gamma0));
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), Error> {
    let cfg = ConfigMap::load(&args.common.config)?;
    let setting: GeneticSetting = cfg
        .resolve(Some(args.setting.clone()), "sim.setting", "1".into())?
        .parse()?;
    let error: ErrorLaw = cfg
        .resolve(Some(args.error.clone()), "sim.error", "1".into())?
        .parse()?;
    let sim = SimConfig {
        n: cfg.resolve(args.n, "sim.n", 200)?,
        p: cfg.resolve(args.p, "sim.p", 500)?,
        q: cfg.resolve(args.q, "sim.q", 4)?,
        m: cfg.resolve(args.m, "sim.m", 3)?,
        rho: cfg.resolve(args.rho, "sim.rho", 0.5)?,
        setting,
        error,
        n_true_main: cfg.resolve(args.true_main, "sim.true_main", 8)?,
        n_true_int: cfg.resolve(args.true_int, "sim.true_int", 12)?,
        maf: cfg.resolve(args.maf, "sim.maf", 0.3)?,
        ld_r: cfg.resolve(args.ld_r, "sim.ld_r", 0.6)?,
        gene_coef_lo: cfg.resolve(args.gene_coef_lo, "sim.gene_coef_lo", 0.5)?,
        gene_coef_hi: cfg.resolve(args.gene_coef_hi, "sim.gene_coef_hi", 1.0)?,
        seed: cfg.resolve(args.common.seed, "run.seed", 0)?,
    };
    let ds = simulate_dataset(&sim, args.replicate)?;
    ensure_out_dir(&args.common.out)?;
    let data_path = args.common.out.join("dataset.csv");
    let truth_path = args.common.out.join("truth.csv");
    io::write_dataset(&ds, &data_path)?;
    io::write_truth(ds.truth.as_ref().expect("simulated truth"), &truth_path)?;

    let mut entries = vec![
        kv("command", "simulate"),
        kv("version", env!("CARGO_PKG_VERSION")),
        kv("run.seed", sim.seed),
        kv("sim.replicate", args.replicate),
        kv("sim.setting", sim.setting.index()),
        kv("sim.error", sim.error.index()),
        kv("sim.n", sim.n),
        kv("sim.p", sim.p),
        kv("sim.q", sim.q),
        kv("sim.m", sim.m),
        kv("sim.rho", sim.rho),
        kv("sim.maf", sim.maf),
        kv("sim.ld_r", sim.ld_r),
        kv("sim.true_main", sim.n_true_main),
        kv("sim.true_int", sim.n_true_int),
        kv("sim.gene_coef_lo", sim.gene_coef_lo),
        kv("sim.gene_coef_hi", sim.gene_coef_hi),
        kv("out.dataset", data_path.display()),
        kv("out.truth", truth_path.display()),
    ];
    entries.sort();
    io::write_manifest(&args.common.out.join("manifest.txt"), &entries)?;
    eprintln!(
        "simulated n={} p={} setting={} error={} -> {}",
        sim.n,
        sim.p,
        sim.setting.name(),
        sim.error.name(),
        data_path.display()
    );
    Ok(())
}

fn cmd_scan(args: ScanArgs) -> Result<(), Error> {
    let cfg = ConfigMap::load(&args.common.config)?;
    install_threads(args.common.threads.or(cfg.get::<usize>("run.threads")?))?;
    let (method, gibbs) = gibbs_from(&args.gibbs, &cfg)?;
    let hp = hyper_from(&cfg)?;
    let seed = cfg.resolve(args.common.seed, "run.seed", 0)?;
    let standardize = !args.no_standardize && cfg.get::<bool>("run.standardize")?.unwrap_or(true);
    let opts = ScanOptions {
        seed,
        replicate: args.replicate,
        standardize,
        max_failure_rate: 0.01,
    };
    let ds = io::load_dataset(&args.data, args.genotype)?;
    let t0 = std::time::Instant::now();
    let out = marginal_scan(&ds, method, &hp, &gibbs, &opts)?;
    eprintln!(
        "scan: {} genes, {} failures, {:.1}s",
        ds.p(),
        out.failures.len(),
        t0.elapsed().as_secs_f64()
    );
    ensure_out_dir(&args.common.out)?;
    let results_path = args.common.out.join("results.csv");
    io::write_results(&out.summaries, &results_path)?;
    if !out.failures.is_empty() {
        let lines: Vec<(String, String)> = out
            .failures
            .iter()
            .map(|f| kv(format!("gene.{}", f.gene + 1), &f.message))
            .collect();
        io::write_manifest(&args.common.out.join("failures.txt"), &lines)?;
    }
    let mut entries = vec![
        kv("command", "scan"),
        kv("version", env!("CARGO_PKG_VERSION")),
        kv("data", args.data.display()),
        kv("method", method),
        kv("run.seed", seed),
        kv("run.replicate", args.replicate),
        kv("run.standardize", standardize),
        kv("run.genotype", args.genotype),
        kv("gibbs.iters", gibbs.n_iter),
        kv("gibbs.burnin", gibbs.burn_in),
        kv("gibbs.thin", gibbs.thin),
        kv("gibbs.chains", gibbs.n_chains),
        kv("gibbs.overdispersed", gibbs.overdispersed_init),
        kv("out.results", results_path.display()),
    ];
    hyper_manifest(&hp, &mut entries);
    entries.sort();
    io::write_manifest(&args.common.out.join("manifest.txt"), &entries)?;
    Ok(())
}

fn draw_column_names(summary: &PosteriorSummary) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut names = Vec::new();
    let mut cols: Vec<Vec<f64>> = Vec::new();
    for (k, e) in summary.alpha.iter().enumerate() {
        names.push(format!("alpha{}", k + 1));
        cols.push(e.draws.clone());
    }
    for (t, e) in summary.gamma.iter().enumerate() {
        names.push(format!("gamma{}", t + 1));
        cols.push(e.draws.clone());
    }
    names.push("beta".into());
    cols.push(summary.beta.draws.clone());
    for (k, e) in summary.eta.iter().enumerate() {
        names.push(format!("eta{}", k + 1));
        cols.push(e.draws.clone());
    }
    if let Some(ind) = &summary.beta.indicators {
        names.push("beta_ind".into());
        cols.push(ind.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect());
    }
    for (k, e) in summary.eta.iter().enumerate() {
        if let Some(ind) = &e.indicators {
            names.push(format!("eta{}_ind", k + 1));
            cols.push(ind.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect());
        }
    }
    (names, cols)
}

fn cmd_fit(args: FitArgs) -> Result<(), Error> {
    let cfg = ConfigMap::load(&args.common.config)?;
    install_threads(args.common.threads.or(cfg.get::<usize>("run.threads")?))?;
    let (method, gibbs) = gibbs_from(&args.gibbs, &cfg)?;
    let hp = hyper_from(&cfg)?;
    let seed = cfg.resolve(args.common.seed, "run.seed", 0)?;
    let standardize = !args.no_standardize && cfg.get::<bool>("run.standardize")?.unwrap_or(true);
    if args.gene == 0 {
        return Err(Error::Config("--gene is 1-based; 0 is out of range".into()));
    }
    let gene = args.gene - 1;
    let opts = ScanOptions {
        seed,
        replicate: args.replicate,
        standardize,
        max_failure_rate: 0.0,
    };
    let ds = io::load_dataset(&args.data, args.genotype)?;
    let prepared;
    let data = if standardize {
        prepared = ds.standardized();
        &prepared
    } else {
        &ds
    };
    let chains = fit_gene_chains(data, gene, method, &hp, &gibbs, &opts)?;
    ensure_out_dir(&args.common.out)?;
    for (c, summary) in chains.iter().enumerate() {
        let (names, cols) = draw_column_names(summary);
        io::write_draws(
            &args.common.out.join(format!("draws_chain_{c}.csv")),
            &names,
            &cols,
        )?;
    }
    let pooled = gxescan::sampler::pool_chains(chains)?;
    let results_path = args.common.out.join("results.csv");
    io::write_results(&[Some(pooled)], &results_path)?;
    let mut entries = vec![
        kv("command", "fit"),
        kv("version", env!("CARGO_PKG_VERSION")),
        kv("data", args.data.display()),
        kv("gene", args.gene),
        kv("method", method),
        kv("run.seed", seed),
        kv("run.replicate", args.replicate),
        kv("run.standardize", standardize),
        kv("gibbs.iters", gibbs.n_iter),
        kv("gibbs.burnin", gibbs.burn_in),
        kv("gibbs.thin", gibbs.thin),
        kv("gibbs.chains", gibbs.n_chains),
        kv("gibbs.overdispersed", gibbs.overdispersed_init),
        kv("out.results", results_path.display()),
    ];
    hyper_manifest(&hp, &mut entries);
    entries.sort();
    io::write_manifest(&args.common.out.join("manifest.txt"), &entries)?;
    Ok(())
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<(), Error> {
    let scores = io::load_scores(&args.scores)?;
    let truth = io::load_truth(&args.truth)?;
    ensure_out_dir(&args.common.out)?;

    let mains = mains_only(&scores);
    let ints = interactions_only(&scores);
    let auc_pooled = roc_auc(&scores, &truth)?;
    let auc_main = roc_auc(&mains, &truth)?;
    let auc_int = roc_auc(&ints, &truth)?;
    let k = args.topk.min(mains.len()).min(ints.len());
    let top = top_k(&scores, &truth, k)?;

    let metrics_path = args.common.out.join("metrics.csv");
    {
        use std::io::Write;
        let file = std::fs::File::create(&metrics_path).map_err(|source| Error::Io {
            path: metrics_path.display().to_string(),
            source,
        })?;
        let mut w = std::io::BufWriter::new(file);
        let mut put = |k: &str, v: String| -> Result<(), Error> {
            writeln!(w, "{k},{v}").map_err(|source| Error::Io {
                path: metrics_path.display().to_string(),
                source,
            })
        };
        put("metric", "value".into())?;
        put("auc_pooled", auc_pooled.to_string())?;
        put("auc_main", auc_main.to_string())?;
        put("auc_interaction", auc_int.to_string())?;
        put("topk_k", k.to_string())?;
        put("topk_main", top.mains.to_string())?;
        put("topk_interaction", top.interactions.to_string())?;
        put("topk_total", top.total.to_string())?;
    }

    let roc_path = args.common.out.join("roc.csv");
    {
        use std::io::Write;
        let file = std::fs::File::create(&roc_path).map_err(|source| Error::Io {
            path: roc_path.display().to_string(),
            source,
        })?;
        let mut w = std::io::BufWriter::new(file);
        writeln!(w, "category,cutoff,tpr,fpr").map_err(|source| Error::Io {
            path: roc_path.display().to_string(),
            source,
        })?;
        for (cat, subset) in [("pooled", &scores), ("main", &mains), ("interaction", &ints)] {
            for pt in roc_points(subset, &truth)? {
                writeln!(w, "{cat},{},{},{}", pt.cutoff, pt.tpr, pt.fpr).map_err(|source| {
                    Error::Io {
                        path: roc_path.display().to_string(),
                        source,
                    }
                })?;
            }
        }
    }

    let mut entries = vec![
        kv("command", "evaluate"),
        kv("version", env!("CARGO_PKG_VERSION")),
        kv("scores", args.scores.display()),
        kv("truth", args.truth.display()),
        kv("topk", args.topk),
        kv("out.metrics", metrics_path.display()),
        kv("out.roc", roc_path.display()),
    ];
    entries.sort();
    io::write_manifest(&args.common.out.join("manifest.txt"), &entries)?;
    println!(
        "auc_pooled={auc_pooled:.4} auc_main={auc_main:.4} auc_interaction={auc_int:.4} top{k}={}/{}/{}",
        top.mains, top.interactions, top.total
    );
    Ok(())
}

fn cmd_diagnose(args: DiagnoseArgs) -> Result<(), Error> {
    let mut chain_files: Vec<PathBuf> = std::fs::read_dir(&args.draws)
        .map_err(|source| Error::Io {
            path: args.draws.display().to_string(),
            source,
        })?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("draws_chain_") && n.ends_with(".csv"))
        })
        .collect();
    chain_files.sort();
    if chain_files.len() < 2 {
        return Err(Error::Config(format!(
            "PSRF needs at least 2 chain files in {}, found {}",
            args.draws.display(),
            chain_files.len()
        )));
    }
    let mut names: Vec<String> = Vec::new();
    let mut per_chain: Vec<Vec<Vec<f64>>> = Vec::new();
    for f in &chain_files {
        let (n, cols) = io::load_draws(f)?;
        if names.is_empty() {
            names = n;
        } else if names != n {
            return Err(Error::Config("chain files disagree on parameter columns".into()));
        }
        per_chain.push(cols);
    }

    ensure_out_dir(&args.common.out)?;
    let summary_path = args.common.out.join("psrf_summary.csv");
    let trace_path = args.common.out.join("psrf_trace.csv");
    use std::io::Write;
    let mk = |p: &Path| -> Result<std::io::BufWriter<std::fs::File>, Error> {
        Ok(std::io::BufWriter::new(std::fs::File::create(p).map_err(
            |source| Error::Io {
                path: p.display().to_string(),
                source,
            },
        )?))
    };
    let mut sw = mk(&summary_path)?;
    let mut tw = mk(&trace_path)?;
    let werr = |p: &Path| {
        let p = p.display().to_string();
        move |source: std::io::Error| Error::Io { path: p.clone(), source }
    };
    writeln!(sw, "param,psrf,upper,status").map_err(werr(&summary_path))?;
    writeln!(tw, "param,iteration,psrf,upper").map_err(werr(&trace_path))?;
    for (j, name) in names.iter().enumerate() {
        let chains: Vec<Vec<f64>> = per_chain.iter().map(|c| c[j].clone()).collect();
        let cm = ChainMatrix::new(chains)?;
        match psrf(&cm) {
            Ok(est) => {
                writeln!(sw, "{name},{},{},ok", est.point, est.upper).map_err(werr(&summary_path))?;
                for pt in psrf_trace(&cm, args.stride)? {
                    writeln!(tw, "{name},{},{},{}", pt.iteration, pt.psrf, pt.upper)
                        .map_err(werr(&trace_path))?;
                }
            }
            Err(Error::DegenerateChains) => {
                eprintln!("diagnose: {name} has zero within-chain variance; skipped");
                writeln!(sw, "{name},,,degenerate").map_err(werr(&summary_path))?;
            }
            Err(e) => return Err(e),
        }
    }
    sw.flush().map_err(werr(&summary_path))?;
    tw.flush().map_err(werr(&trace_path))?;

    let mut entries = vec![
        kv("command", "diagnose"),
        kv("version", env!("CARGO_PKG_VERSION")),
        kv("draws", args.draws.display()),
        kv("stride", args.stride),
        kv("chains", chain_files.len()),
        kv("out.summary", summary_path.display()),
        kv("out.trace", trace_path.display()),
    ];
    entries.sort();
    io::write_manifest(&args.common.out.join("manifest.txt"), &entries)?;
    Ok(())
}

fn cmd_prescreen(args: PrescreenArgs) -> Result<(), Error> {
    let ds = io::load_dataset(&args.data, args.genotype)?;
    let res = prescreen(&ds, args.p_threshold, args.min_hits)?;
    ensure_out_dir(&args.common.out)?;
    let kept_path = args.common.out.join("prescreen_kept.csv");
    {
        use std::io::Write;
        let file = std::fs::File::create(&kept_path).map_err(|source| Error::Io {
            path: kept_path.display().to_string(),
            source,
        })?;
        let mut w = std::io::BufWriter::new(file);
        writeln!(w, "gene").map_err(|source| Error::Io {
            path: kept_path.display().to_string(),
            source,
        })?;
        for g in &res.kept {
            writeln!(w, "{}", g + 1).map_err(|source| Error::Io {
                path: kept_path.display().to_string(),
                source,
            })?;
        }
    }
    for wng in &res.warnings {
        eprintln!("prescreen: gene {} excluded: {}", wng.gene + 1, wng.message);
    }
    let mut entries = vec![
        kv("command", "prescreen"),
        kv("version", env!("CARGO_PKG_VERSION")),
        kv("data", args.data.display()),
        kv("p_threshold", args.p_threshold),
        kv("min_hits", args.min_hits),
        kv("kept", res.kept.len()),
        kv("out.kept", kept_path.display()),
    ];
    entries.sort();
    io::write_manifest(&args.common.out.join("manifest.txt"), &entries)?;
    println!("kept {} of {} genes", res.kept.len(), ds.p());
    Ok(())
}
