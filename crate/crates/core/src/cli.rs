//! Command-line front end. `main` only forwards to [`run`].

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::inference::{auc, fdr_curve, select_edges, summarize, SummaryOptions};
use crate::io::{
    export_results, ingest_expression, ingest_scores, read_gene_matrix, read_table, read_trace, write_synthetic,
    write_trace, ExportFormat, IngestOptions, RunManifest, ScoreSource,
};
use crate::model::{CoefficientPrior, Hyperparams, Indicator, ScoreOrientation};
use crate::sampler::{resume_chain, tune, Chain, ChainConfig, Design, Mode, SwapScope};
use crate::simulate::{generate_synthetic, SyntheticSpec};
use crate::verify::{verify, VerifyOptions};

#[derive(Debug, Parser)]
#[command(name = "regnet", version, about = "Bayesian inference of sparse regulatory networks")]
struct Cli {
    /// Suppress warnings on stderr.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic data set with a planted network.
    Simulate(SimulateArgs),
    /// Run MCMC chains and write traces and checkpoints.
    Run(RunArgs),
    /// Summarize the traces of a run and export results.
    Summarize(SummarizeArgs),
    /// Bayesian FDR and edge calls for an inclusion-probability matrix.
    Fdr(FdrArgs),
    /// Pilot runs reporting acceptance rates over proposal grids.
    Tune(TuneArgs),
    /// Check closed forms against numerical oracles on small instances.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 50)]
    genes: usize,
    #[arg(long, default_value_t = 8)]
    regulators: usize,
    #[arg(long, default_value_t = 30)]
    samples: usize,
    #[arg(long, default_value_t = 1.0)]
    edges_per_gene: f64,
    #[arg(long, default_value_t = 1.0)]
    beta_scale: f64,
    #[arg(long, default_value_t = 0.5)]
    noise_sd: f64,
    #[arg(long, default_value_t = 0.8)]
    score_informativeness: f64,
    #[arg(long, default_value_t = 2)]
    score_sources: usize,
    /// Split samples into three time points and plant offsets.
    #[arg(long)]
    time_mode: bool,
    #[arg(long, default_value_t = 0.3)]
    time_fraction: f64,
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Target expression CSV: sample_id,time,<genes...>.
    #[arg(long)]
    targets: Option<PathBuf>,
    /// Regulator expression CSV: sample_id,time,<regulators...>.
    #[arg(long)]
    regulators: Option<PathBuf>,
    /// Score CSV (target,<regulators...>); repeat for several sources.
    #[arg(long = "scores")]
    scores: Vec<PathBuf>,
    /// Score CSV in which lower values mean stronger association.
    #[arg(long = "scores-lower-is-stronger")]
    scores_lower: Vec<PathBuf>,
    #[arg(long)]
    log2_targets: bool,
    #[arg(long)]
    log2_regulators: bool,
    /// Leave regulator columns uncentered.
    #[arg(long)]
    no_center_regulators: bool,
}

impl DataArgs {
    fn paths(&self) -> Result<(&Path, &Path)> {
        match (&self.targets, &self.regulators) {
            (Some(t), Some(r)) => Ok((t, r)),
            _ => Err(invalid("--targets and --regulators are required")),
        }
    }

    fn load(&self) -> Result<(crate::model::ExpressionData, crate::io::ExclusionReport)> {
        let (t, r) = self.paths()?;
        ingest_expression(t, r, &self.ingest())
    }

    fn sources(&self) -> Vec<ScoreSource> {
        let mut out: Vec<ScoreSource> = self.scores.iter().map(ScoreSource::new).collect();
        out.extend(
            self.scores_lower
                .iter()
                .map(|p| ScoreSource { path: p.clone(), orientation: ScoreOrientation::LowerIsStronger }),
        );
        out
    }

    fn ingest(&self) -> IngestOptions {
        IngestOptions {
            log2_targets: self.log2_targets,
            log2_regulators: self.log2_regulators,
            center_regulators: !self.no_center_regulators,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BetaPrior {
    Scaled,
    GammaRate,
}

/// Overrides for prior hyperparameters and proposal constants.
#[derive(Debug, Args)]
struct HyperArgs {
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    d: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    eta_b: Option<f64>,
    #[arg(long)]
    a_tau: Option<f64>,
    #[arg(long)]
    b_tau: Option<f64>,
    #[arg(long)]
    zeta: Option<f64>,
    #[arg(long)]
    phi: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    tau_prop_var: Option<f64>,
    /// σ proposal variance; required by `run` (pick it with `tune`).
    #[arg(long)]
    e_sigma: Option<f64>,
    #[arg(long, value_enum)]
    beta_prior: Option<BetaPrior>,
}

impl HyperArgs {
    fn build(&self) -> Result<Hyperparams> {
        let d = Hyperparams::default();
        let hp = Hyperparams {
            c: self.c.unwrap_or(d.c),
            delta: self.delta.unwrap_or(d.delta),
            d: self.d.unwrap_or(d.d),
            eta: self.eta.unwrap_or(d.eta),
            eta_b: self.eta_b.unwrap_or(d.eta_b),
            a_tau: self.a_tau.unwrap_or(d.a_tau),
            b_tau: self.b_tau.unwrap_or(d.b_tau),
            zeta: self.zeta.unwrap_or(d.zeta),
            phi: self.phi.unwrap_or(d.phi),
            lambda: self.lambda.unwrap_or(d.lambda),
            tau_prop_var: self.tau_prop_var.unwrap_or(d.tau_prop_var),
            e_sigma: self.e_sigma,
            beta_prior: match self.beta_prior {
                Some(BetaPrior::GammaRate) => CoefficientPrior::GammaRate,
                Some(BetaPrior::Scaled) | None => CoefficientPrior::ScaledExponential,
            },
        };
        hp.validate()?;
        Ok(hp)
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ScopeArg {
    Global,
    Row,
}

#[derive(Debug, Args)]
struct ChainArgs {
    #[arg(long, default_value_t = 20_000)]
    iterations: u64,
    #[arg(long, default_value_t = 5_000)]
    burn_in: u64,
    #[arg(long, default_value_t = 1)]
    thinning: u64,
    /// Fit per-time-point offsets (needs samples at time points 2 and 3).
    #[arg(long)]
    time_dependent: bool,
    /// Let offsets be active without their base edge.
    #[arg(long)]
    unconstrained: bool,
    /// Random edges in the starting network (default: one per target).
    #[arg(long)]
    initial_edges: Option<usize>,
    #[arg(long, value_enum, default_value = "global")]
    swap_scope: ScopeArg,
    #[arg(long, default_value_t = 1)]
    moves_per_iter: usize,
    /// Hold τ at its starting value.
    #[arg(long)]
    fix_tau: bool,
    /// Hold σ at its starting value.
    #[arg(long)]
    fix_sigma: bool,
    /// Recheck invariants and the tracked posterior after every iteration.
    #[arg(long)]
    audit: bool,
    #[arg(long, default_value_t = 10_000)]
    checkpoint_every: u64,
}

impl ChainArgs {
    fn build(&self, seed: u64) -> Result<ChainConfig> {
        let cfg = ChainConfig {
            iterations: self.iterations,
            burn_in: self.burn_in,
            thinning: self.thinning,
            mode: if self.time_dependent { Mode::TimeDependent } else { Mode::TimeInvariant },
            constrained: !self.unconstrained,
            seed,
            initial_edges: self.initial_edges,
            swap_scope: match self.swap_scope {
                ScopeArg::Global => SwapScope::Global,
                ScopeArg::Row => SwapScope::Row,
            },
            network_moves_per_iter: self.moves_per_iter,
            update_tau: !self.fix_tau,
            update_sigma: !self.fix_sigma,
            audit: self.audit,
            checkpoint_every: self.checkpoint_every,
            ..ChainConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    hyper: HyperArgs,
    #[command(flatten)]
    chain: ChainArgs,
    #[arg(long, required_unless_present = "resume")]
    seed: Option<u64>,
    #[arg(long, default_value_t = 2)]
    chains: usize,
    /// Output directory for the manifest, traces and checkpoints.
    #[arg(long, required_unless_present = "resume")]
    out: Option<PathBuf>,
    /// Stop every chain at this iteration, leaving a checkpoint to resume from.
    #[arg(long)]
    halt_at: Option<u64>,
    /// Continue the run in this directory from its checkpoints.
    #[arg(long, conflicts_with_all = ["seed", "out", "targets"])]
    resume: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Edges,
    Dot,
    Json,
    Graph,
    Matrix,
}

impl From<FormatArg> for ExportFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Edges => ExportFormat::EdgeList,
            FormatArg::Dot => ExportFormat::Dot,
            FormatArg::Json => ExportFormat::Json,
            FormatArg::Graph => ExportFormat::JsonGraph,
            FormatArg::Matrix => ExportFormat::Matrix,
        }
    }
}

#[derive(Debug, Args)]
struct SummarizeArgs {
    /// Directory written by `run`.
    #[arg(long)]
    run: PathBuf,
    /// Export directory (default: `<run>/summary`).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0.8)]
    cutoff: f64,
    #[arg(long, default_value_t = 0.15)]
    coef_cutoff: f64,
    #[arg(long, default_value_t = 0.1)]
    offset_cutoff: f64,
    #[arg(long, default_value_t = 0.2)]
    negativity_cutoff: f64,
    /// Seed of the coefficient sampler.
    #[arg(long)]
    coef_seed: Option<u64>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "edges,dot,json,graph,matrix")]
    formats: Vec<FormatArg>,
    /// Planted coefficients (target,<regulators...>); nonzero cells are true edges.
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FdrArgs {
    /// Inclusion-probability matrix CSV (target,<regulators...>).
    #[arg(long)]
    p: PathBuf,
    #[arg(long, default_value_t = 0.8)]
    cutoff: f64,
    /// Also print the FDR curve at these cutoffs.
    #[arg(long, value_delimiter = ',')]
    curve: Vec<f64>,
    /// List the selected edges.
    #[arg(long)]
    list: bool,
}

#[derive(Debug, Args)]
struct TuneArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    hyper: HyperArgs,
    #[command(flatten)]
    chain: ChainArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_delimiter = ',', default_value = "0.001,0.01,0.1,1")]
    tau_grid: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0.05,0.2,0.5")]
    e_grid: Vec<f64>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 50)]
    cases: usize,
    #[arg(long, default_value_t = 200_000)]
    chain_iterations: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

struct StderrLogger;

impl log::Log for StderrLogger {
    fn enabled(&self, m: &log::Metadata) -> bool {
        m.level() <= log::Level::Warn
    }
    fn log(&self, r: &log::Record) {
        if self.enabled(r.metadata()) {
            eprintln!("{}: {}", r.level().as_str().to_lowercase(), r.args());
        }
    }
    fn flush(&self) {}
}

static LOGGER: StderrLogger = StderrLogger;

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    if !cli.quiet && log::set_logger(&LOGGER).is_ok() {
        log::set_max_level(log::LevelFilter::Warn);
    }
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Simulate(a) => simulate_cmd(a),
        Command::Run(a) => run_cmd(a),
        Command::Summarize(a) => summarize_cmd(a),
        Command::Fdr(a) => fdr_cmd(a),
        Command::Tune(a) => tune_cmd(a),
        Command::Verify(a) => verify_cmd(a),
    }
}

fn simulate_cmd(a: SimulateArgs) -> Result<()> {
    let spec = SyntheticSpec {
        g: a.genes,
        m: a.regulators,
        n: a.samples,
        edges_per_gene: a.edges_per_gene,
        beta_scale: a.beta_scale,
        noise_sd: a.noise_sd,
        score_informativeness: a.score_informativeness,
        n_score_sources: a.score_sources,
        time_mode: a.time_mode,
        time_fraction: a.time_fraction,
        seed: a.seed,
    };
    let (data, scores, truth) = generate_synthetic(&spec)?;
    let files = write_synthetic(&a.out, &data, &scores, &truth)?;
    std::fs::write(a.out.join("spec.json"), serde_json::to_string_pretty(&spec)? + "\n")?;
    println!("wrote {} samples, {} targets, {} regulators to {}", data.n(), data.g(), data.m(), a.out.display());
    println!("planted edges: {}", truth.r.count());
    println!("truth: {}", files.truth.display());
    Ok(())
}

fn trace_name(i: usize) -> PathBuf {
    PathBuf::from(format!("chain_{i}.trace.json"))
}

fn checkpoint_base(dir: &Path) -> PathBuf {
    dir.join("chain.ckpt")
}

fn checkpoint_file(dir: &Path, i: usize) -> PathBuf {
    dir.join(format!("chain.ckpt.{i}"))
}

/// Runs (or continues) every chain to `halt`, writing traces once finished.
fn drive(chains: Vec<Chain<'_>>, halt: Option<u64>, dir: &Path) -> Result<()> {
    let results: Vec<Result<Option<(usize, crate::sampler::ChainTrace)>>> = chains
        .into_par_iter()
        .enumerate()
        .map(|(i, mut chain)| {
            chain.run_until(halt.unwrap_or(u64::MAX))?;
            Ok(chain.finished().then(|| (i, chain.into_trace())))
        })
        .collect();
    for r in results {
        match r? {
            Some((i, trace)) => {
                write_trace(&dir.join(trace_name(i)), &trace)?;
                let a = trace.acceptance;
                println!(
                    "chain {i}: {} samples; acceptance network {:.3}, tau {:.3}, sigma {:.3}",
                    trace.samples,
                    a.network_rate(),
                    a.tau_rate(),
                    a.sigma_rate()
                );
            }
            None => println!("halted; resume with `regnet run --resume {}`", dir.display()),
        }
    }
    Ok(())
}

fn run_cmd(a: RunArgs) -> Result<()> {
    if let Some(dir) = a.resume {
        let manifest = RunManifest::read(&dir)?;
        let (data, scores) = manifest.load_inputs()?;
        let design = Design::new(&data, manifest.config.mode)?;
        let chains = (0..manifest.chains)
            .map(|i| {
                let mut c = resume_chain(&checkpoint_file(&dir, i), &design, &scores)?;
                c.set_checkpoint_path(checkpoint_file(&dir, i));
                Ok(c)
            })
            .collect::<Result<Vec<_>>>()?;
        return drive(chains, a.halt_at, &dir);
    }
    let data_args = a.data;
    let out = a.out.expect("required by the parser");
    let seed = a.seed.expect("required by the parser");
    if a.chains == 0 {
        return Err(invalid("--chains must be at least 1"));
    }
    let hp = a.hyper.build()?;
    hp.require_e_sigma()?;
    let mut cfg = a.chain.build(seed)?;
    cfg.checkpoint_path = Some(checkpoint_base(&out));
    let (data, report) = data_args.load()?;
    let sources = data_args.sources();
    let scores = ingest_scores(&sources, &data)?;
    if !report.is_empty() {
        println!("excluded {} targets and {} regulators", report.genes.len(), report.regulators.len());
    }
    let design = Design::new(&data, cfg.mode)?;
    std::fs::create_dir_all(&out)?;
    let manifest = RunManifest {
        targets: data_args.paths()?.0.to_path_buf(),
        regulators: data_args.paths()?.1.to_path_buf(),
        scores: sources,
        ingest: data_args.ingest(),
        hyperparams: hp,
        config: cfg.clone(),
        chains: a.chains,
        traces: (0..a.chains).map(trace_name).collect(),
    };
    manifest.write(&out)?;
    std::fs::write(out.join("exclusions.json"), serde_json::to_string_pretty(&report)? + "\n")?;
    let chains = (0..a.chains)
        .map(|i| {
            let mut c = Chain::with_stream(&design, &scores, &hp, &cfg, i as u64)?;
            c.set_checkpoint_path(checkpoint_file(&out, i));
            Ok(c)
        })
        .collect::<Result<Vec<_>>>()?;
    drive(chains, a.halt_at, &out)
}

fn summarize_cmd(a: SummarizeArgs) -> Result<()> {
    let manifest = RunManifest::read(&a.run)?;
    let (data, _) = manifest.load_inputs()?;
    let traces = manifest.traces.iter().map(|t| read_trace(&a.run.join(t))).collect::<Result<Vec<_>>>()?;
    let refs: Vec<_> = traces.iter().collect();
    let mut opts = SummaryOptions {
        cutoff: a.cutoff,
        coef_cutoff: a.coef_cutoff,
        offset_cutoff: a.offset_cutoff,
        negativity_cutoff: a.negativity_cutoff,
        ..SummaryOptions::default()
    };
    if let Some(seed) = a.coef_seed {
        opts.coef.seed = seed;
    }
    let summary = summarize(&data, &refs, &manifest.hyperparams, &opts)?;
    let out = a.out.unwrap_or_else(|| a.run.join("summary"));
    let formats: Vec<ExportFormat> = a.formats.iter().map(|&f| f.into()).collect();
    let written = export_results(&summary, &formats, &out)?;
    println!("{} edges at P ≥ {} (Bayesian FDR {:.1}%)", summary.fdr.selected, opts.cutoff, 100.0 * summary.fdr.fdr);
    println!("aggregate R² {:.4}", summary.r_squared.aggregate);
    if let Some(f) = summary.negative_fraction {
        println!("negative OLS coefficients at P ≥ {}: {:.1}%", opts.negativity_cutoff, 100.0 * f);
    }
    for (i, j, r) in &summary.diagnostics.agreement {
        match r {
            Some(r) => println!("chains {i} and {j}: P correlation {r:.3}"),
            None => println!("chains {i} and {j}: P correlation undefined"),
        }
    }
    if let Some(path) = a.truth {
        let beta = read_gene_matrix(&path, &data.gene_names, &data.regulator_names)?;
        let truth = Indicator::from_fn(data.g(), data.m(), |g, m| beta[(g, m)] != 0.0);
        println!("AUC vs truth {:.4}", auc(&summary.p, &truth)?);
    }
    for p in written {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn fdr_cmd(a: FdrArgs) -> Result<()> {
    let t = read_table(&a.p, false)?;
    let (g, m) = (t.ids.len(), t.columns.len());
    let p = nalgebra::DMatrix::from_fn(g, m, |i, j| t.cells[i][j].unwrap_or(0.0));
    let res = crate::inference::bayesian_fdr(&p, a.cutoff)?;
    println!("cutoff {}: {} edges, Bayesian FDR {:.1}%", a.cutoff, res.selected, 100.0 * res.fdr);
    if !a.curve.is_empty() {
        println!("cutoff\tedges\tfdr");
        for pt in fdr_curve(&p, &a.curve)? {
            println!("{}\t{}\t{}", pt.cutoff, pt.selected, pt.fdr);
        }
    }
    if a.list {
        println!("target\tregulator\tp");
        for e in select_edges(&p, a.cutoff)? {
            println!("{}\t{}\t{}", t.ids[e.g], t.columns[e.m], e.p);
        }
    }
    Ok(())
}

fn tune_cmd(a: TuneArgs) -> Result<()> {
    let hp = a.hyper.build()?;
    let cfg = a.chain.build(a.seed)?;
    let (data, _) = a.data.load()?;
    let scores = ingest_scores(&a.data.sources(), &data)?;
    let rows = tune(&data, &scores, &hp, &cfg, &a.tau_grid, &a.e_grid)?;
    println!("tau_prop_var\te_sigma\ttau_acc\tsigma_acc\tnetwork_acc");
    for r in rows {
        println!(
            "{}\t{}\t{:.3}\t{:.3}\t{:.3}",
            r.tau_prop_var, r.e_sigma, r.tau_acceptance, r.sigma_acceptance, r.network_acceptance
        );
    }
    Ok(())
}

fn verify_cmd(a: VerifyArgs) -> Result<()> {
    let checks = verify(&VerifyOptions { cases: a.cases, chain_iterations: a.chain_iterations, seed: a.seed })?;
    let mut failed = 0;
    for c in &checks {
        println!("{} {} (worst {:.3e}, tolerance {:.0e})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.worst, c.tolerance);
        failed += usize::from(!c.passed);
    }
    if failed > 0 {
        return Err(Error::Audit(format!("{failed} of {} checks failed", checks.len())));
    }
    Ok(())
}
