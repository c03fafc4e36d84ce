use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;

use sempath::config::ExperimentConfig;
use sempath::corpus::{build_vocabulary, corpus_stats, load_corpus, Corpus, ReplacementRules};
use sempath::embeddings::{
    build_cooccurrence, svd_embed, train_cbow, train_skipgram, EmbeddingMatrix, Method,
};
use sempath::metrics::cluster_metrics;
use sempath::ngram::{build_ngram_dataset, nested_subsets, NgramDataset};
use sempath::projection::{pca_2d, write_projection};
use sempath::stats::compare_with_provenance;
use sempath::subset::{select_representative_size, ClusterConfig};
use sempath::validity::{tune_wishart, write_grid_csv};
use sempath::wishart::{wishart_cluster, Clustering, WishartParams};

#[derive(Parser)]
#[command(name = "sempath", about = "N-gram semantic path clustering and corpus comparison")]
struct Cli {
    /// Experiment config file (flat `key = value`).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every random step; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Only print errors.
    #[arg(long, short, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load a directory of .txt files into a tokenized corpus and vocabulary.
    Ingest(IngestArgs),
    /// Train word embeddings.
    Embed(EmbedArgs),
    /// Build the deduplicated n-gram dataset.
    Build(BuildArgs),
    /// Grid-search Wishart parameters by adjusted Calinski-Harabasz.
    Tune(TuneArgs),
    /// Cluster a dataset with fixed parameters.
    Cluster(ClusterArgs),
    /// Pick the smallest representative nested subset.
    Subset(SubsetArgs),
    /// Compare two clusterings metric by metric.
    Compare(CompareArgs),
    /// Export a 2-D PCA projection.
    Project(ProjectArgs),
    /// Print the version.
    Version,
}

#[derive(Args)]
struct IngestArgs {
    dir: PathBuf,
    /// Replacement table, `source<TAB>special`.
    #[arg(long)]
    rules: Option<PathBuf>,
    /// Output directory for corpus.tok, manifest.tsv and vocab.tsv.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    language: Option<String>,
    #[arg(long)]
    min_count: Option<u64>,
}

#[derive(Args)]
struct EmbedArgs {
    corpus: PathBuf,
    #[arg(long)]
    method: Option<String>,
    #[arg(long = "dim", short = 'R')]
    dim: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    negatives: Option<usize>,
    #[arg(long)]
    power_iters: Option<usize>,
    #[arg(long)]
    min_count: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BuildArgs {
    corpus: PathBuf,
    embedding: PathBuf,
    #[arg(long, short)]
    n: Option<usize>,
    #[arg(long)]
    out: PathBuf,
    /// Also write a CSV mirror of the dataset.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct TuneArgs {
    dataset: PathBuf,
    /// Comma-separated k values.
    #[arg(long, value_delimiter = ',')]
    k_grid: Option<Vec<usize>>,
    /// Comma-separated h values.
    #[arg(long, value_delimiter = ',')]
    h_grid: Option<Vec<f64>>,
    #[arg(long = "t", short = 'T')]
    t: Option<f64>,
    #[arg(long)]
    grid_out: PathBuf,
    /// Best parameters as `k = …`/`h = …` lines.
    #[arg(long)]
    best_out: Option<PathBuf>,
    /// Clustering of the best cell.
    #[arg(long)]
    clustering_out: Option<PathBuf>,
}

#[derive(Args)]
struct WishartArgs {
    #[arg(long, short)]
    k: Option<usize>,
    #[arg(long)]
    h: Option<f64>,
}

#[derive(Args)]
struct ClusterArgs {
    dataset: PathBuf,
    #[command(flatten)]
    params: WishartArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SubsetArgs {
    dataset: PathBuf,
    /// Comma-separated, strictly increasing.
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Tune each subset over the config grids instead of fixed k/h.
    #[arg(long)]
    tuned: bool,
    #[command(flatten)]
    params: WishartArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CompareArgs {
    dataset_a: PathBuf,
    clustering_a: PathBuf,
    dataset_b: PathBuf,
    clustering_b: PathBuf,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ProjectArgs {
    dataset: PathBuf,
    clustering: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .filter_level(if cli.quiet {
            log::LevelFilter::Error
        } else {
            log::LevelFilter::Info
        })
        .format_timestamp(None)
        .format_target(false)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring thread pool")?;
    }
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    match cli.command {
        Command::Ingest(a) => ingest(cfg, a),
        Command::Embed(a) => embed(cfg, a),
        Command::Build(a) => build(cfg, a),
        Command::Tune(a) => tune(cfg, a),
        Command::Cluster(a) => cluster(cfg, a),
        Command::Subset(a) => subset(cfg, a),
        Command::Compare(a) => compare(cfg, a),
        Command::Project(a) => project(a),
        Command::Version => {
            println!("sempath {}", env!("CARGO_PKG_VERSION"));
            Ok(())
        }
    }
}

fn override_opt<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn ingest(mut cfg: ExperimentConfig, a: IngestArgs) -> Result<()> {
    override_opt(&mut cfg.language, a.language);
    override_opt(&mut cfg.min_count, a.min_count);
    let rules = match &a.rules {
        Some(p) => ReplacementRules::read_tsv(p)?,
        None => ReplacementRules::default(),
    };
    let corpus = load_corpus(&a.dir, &rules, &cfg.language)?;
    let vocab = build_vocabulary(&corpus, cfg.min_count)?;
    fs::create_dir_all(&a.out).with_context(|| format!("{}", a.out.display()))?;
    corpus.write_tokenized(&a.out.join("corpus.tok"))?;
    vocab.write_tsv(&a.out.join("vocab.tsv"))?;
    let mut manifest = String::from("id\ttokens\n");
    for d in corpus.documents() {
        manifest.push_str(&format!("{}\t{}\n", d.id, d.tokens.len()));
    }
    write(&a.out.join("manifest.tsv"), manifest)?;
    let s = corpus_stats(&corpus);
    println!(
        "texts={} avg_words={} total_words={} vocabulary={}",
        s.documents, s.avg_tokens, s.total_tokens, s.vocabulary_size
    );
    Ok(())
}

fn embed(mut cfg: ExperimentConfig, a: EmbedArgs) -> Result<()> {
    override_opt(&mut cfg.method, a.method);
    override_opt(&mut cfg.dim, a.dim);
    override_opt(&mut cfg.epochs, a.epochs);
    override_opt(&mut cfg.window, a.window);
    override_opt(&mut cfg.negatives, a.negatives);
    override_opt(&mut cfg.power_iters, a.power_iters);
    override_opt(&mut cfg.min_count, a.min_count);
    let method: Method = cfg.method.parse()?;
    let corpus = Corpus::read_tokenized(&a.corpus)?;
    let vocab = build_vocabulary(&corpus, cfg.min_count)?;
    info!("training {method} R={} over {} words", cfg.dim, vocab.len());
    let emb = match method {
        Method::Svd => {
            let m = build_cooccurrence(&corpus, &vocab);
            svd_embed(&m, &vocab, cfg.dim, cfg.power_iters, cfg.seed)?
        }
        Method::Cbow => train_cbow(&corpus, &vocab, &cfg.train_config(), cfg.dim)?,
        Method::SkipGram => train_skipgram(&corpus, &vocab, &cfg.train_config(), cfg.dim)?,
    };
    emb.write_tsv(&a.out)?;
    Ok(())
}

fn build(mut cfg: ExperimentConfig, a: BuildArgs) -> Result<()> {
    override_opt(&mut cfg.n, a.n);
    let corpus = Corpus::read_tokenized(&a.corpus)?;
    let emb = EmbeddingMatrix::read_tsv(&a.embedding)?;
    let ds = build_ngram_dataset(&corpus, &emb, cfg.n)?;
    info!(
        "{} unique points, {} occurrences, dimension {}",
        ds.len(),
        ds.total_occurrences(),
        ds.width()
    );
    ds.write(&a.out)?;
    if let Some(csv) = &a.csv {
        ds.write_csv(csv)?;
    }
    Ok(())
}

fn tune(mut cfg: ExperimentConfig, a: TuneArgs) -> Result<()> {
    override_opt(&mut cfg.k_grid, a.k_grid);
    override_opt(&mut cfg.h_grid, a.h_grid);
    if a.t.is_some() {
        cfg.t = a.t;
    }
    let ds = NgramDataset::read(&a.dataset)?;
    let res = tune_wishart(&ds, &cfg.k_grid, &cfg.h_grid, cfg.t()?)?;
    write_grid_csv(&res.grid, &a.grid_out)?;
    let best = format!("k = {}\nh = {}\n", res.best.k, res.best.h);
    if let Some(p) = &a.best_out {
        write(p, best)?;
    }
    if let Some(p) = &a.clustering_out {
        res.best_clustering.write_csv(p)?;
    }
    println!(
        "best k={} h={} NC={} ch_adj={}",
        res.best.k,
        res.best.h,
        res.best_clustering.n_clusters(),
        res.best_score.ch_adj
    );
    Ok(())
}

fn wishart_params(cfg: &mut ExperimentConfig, a: WishartArgs) -> Result<WishartParams> {
    override_opt(&mut cfg.k, a.k);
    override_opt(&mut cfg.h, a.h);
    Ok(cfg.wishart_params()?)
}

fn cluster(mut cfg: ExperimentConfig, a: ClusterArgs) -> Result<()> {
    let params = wishart_params(&mut cfg, a.params)?;
    let ds = NgramDataset::read(&a.dataset)?;
    let cl = wishart_cluster(&ds, params)?;
    info!("{} clusters, {} noise points", cl.n_clusters(), cl.n_noise());
    cl.write_csv(&a.out)?;
    Ok(())
}

fn subset(mut cfg: ExperimentConfig, a: SubsetArgs) -> Result<()> {
    override_opt(&mut cfg.subset_sizes, a.sizes);
    override_opt(&mut cfg.alpha, a.alpha);
    let params = wishart_params(&mut cfg, a.params)?;
    let cluster_cfg = if a.tuned {
        ClusterConfig::Tuned {
            k_grid: cfg.k_grid.clone(),
            h_grid: cfg.h_grid.clone(),
            t: cfg.t()?,
        }
    } else {
        ClusterConfig::Fixed(params)
    };
    let ds = NgramDataset::read(&a.dataset)?;
    let chain = nested_subsets(&ds, &cfg.subset_sizes, cfg.seed)?;
    let choice = select_representative_size(&chain, &cluster_cfg, cfg.alpha)?;
    write(
        &a.out,
        serde_json::to_string_pretty(&choice).context("serializing subset choice")? + "\n",
    )?;
    println!("size={} points={}", choice.size, choice.points);
    if choice.warning {
        eprintln!("warning: no successive subsets agreed; using the largest size");
    }
    Ok(())
}

fn read_clustering(path: &Path, ds: &NgramDataset) -> Result<Clustering> {
    // parameters are not stored in the file and are not needed downstream
    let cl = Clustering::read_csv(path, WishartParams::new(1, 0.0)?)?;
    if cl.labels.len() != ds.len() {
        bail!(
            "{}: {} labels for a dataset of {} points",
            path.display(),
            cl.labels.len(),
            ds.len()
        );
    }
    Ok(cl)
}

fn compare(mut cfg: ExperimentConfig, a: CompareArgs) -> Result<()> {
    override_opt(&mut cfg.alpha, a.alpha);
    let ds_a = NgramDataset::read(&a.dataset_a)?;
    let ds_b = NgramDataset::read(&a.dataset_b)?;
    let ma = cluster_metrics(&ds_a, &read_clustering(&a.clustering_a, &ds_a)?.labels)?;
    let mb = cluster_metrics(&ds_b, &read_clustering(&a.clustering_b, &ds_b)?.labels)?;
    let report = compare_with_provenance(
        &ma,
        &mb,
        cfg.alpha,
        &a.dataset_a.display().to_string(),
        &a.dataset_b.display().to_string(),
    )?;
    write(&a.out, report.to_json())?;
    if report.low_power {
        eprintln!("warning: low power, a side has fewer than 2 clusters");
    }
    println!("{}", report.summary_line());
    Ok(())
}

fn project(a: ProjectArgs) -> Result<()> {
    let ds = NgramDataset::read(&a.dataset)?;
    let cl = read_clustering(&a.clustering, &ds)?;
    write_projection(&a.out, &pca_2d(&ds)?, &cl.labels)?;
    Ok(())
}

fn write(path: &Path, text: String) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}
