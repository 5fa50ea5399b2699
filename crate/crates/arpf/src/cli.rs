//! Command-line front end: dataset handling, feature computation, bound
//! reports, the scripted experiments, SVM train/cv/eval, and the TCP
//! server/client pair.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on runtime errors.

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use std::path::{Path, PathBuf};

use crate::bounds::{bounds_report, BoundConstants, SignalModel};
use crate::dataset::{load_csv, save_csv, synth_gaussian_mixture, CsvOptions, LabelColumn, MixtureSpread};
use crate::error::{ArpfError, Result};
use crate::experiments::{
    config_hash, run_error_sweep, run_kernel_scatter, run_success_grid, summarize_error_sweep,
    write_error_sweep_csv, write_grid_transitions_csv, write_kernel_scatter_csv,
    write_success_grid_csv, ErrorSweepConfig, KernelScatterConfig, SuccessGridConfig,
};
use crate::features::{
    load_feature_batch, pack_bits, save_feature_batch, FeatureEmbedding, PayloadKind, MapCombo,
};
use crate::net::{serve_forever, transfer_stats, Client, QueryMode, ServerState};
use crate::periodic::PeriodicMap;
use crate::sampling::{FrequencySampler, RandomDraw};
use crate::svm::{
    svm_cross_validate, train_exact, train_on_features, CvConfig, CvMode, EmbeddingRef,
    SolverOptions, SvmModel,
};

#[derive(Parser, Debug)]
#[command(
    name = "arpf",
    version,
    about = "Asymmetric random periodic features: quantized kernel estimates, bounds, SVMs, and a one-bit query protocol"
)]
pub struct Cli {
    /// Base RNG seed; overrides the seed in a config file when given.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output path (a file; some subcommands derive sibling files from it).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// TOML or JSON config file for the experiment subcommands.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct CsvArgs {
    /// Input CSV path.
    #[arg(long)]
    pub input: PathBuf,
    /// Label column, by 0-based index or by header name.
    #[arg(long)]
    pub label_col: Option<String>,
    /// Treat the first row as data, not as a header.
    #[arg(long)]
    pub no_header: bool,
    /// Field delimiter (single byte).
    #[arg(long, default_value = ",")]
    pub delimiter: char,
}

impl CsvArgs {
    fn options(&self) -> CsvOptions {
        CsvOptions {
            delimiter: self.delimiter as u8,
            has_header: !self.no_header,
            label_column: self.label_col.as_deref().map(parse_label_column),
        }
    }

    fn load(&self) -> Result<crate::dataset::Dataset> {
        load_csv(&self.input, &self.options())
    }
}

#[derive(Args, Debug, Clone)]
pub struct SamplerArgs {
    /// Frequency family: gaussian (RBF, scale = sigma) or cauchy (Laplacian
    /// kernel, scale = tau).
    #[arg(long, default_value = "gaussian")]
    pub family: String,
    /// Width parameter of the family.
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
}

impl SamplerArgs {
    fn build(&self, dim: usize) -> Result<FrequencySampler> {
        match self.family.as_str() {
            "gaussian" => FrequencySampler::gaussian_rbf(self.scale, dim),
            "cauchy" => FrequencySampler::cauchy_laplace(self.scale, dim),
            other => Err(ArpfError::InvalidParameter(format!(
                "unknown frequency family '{other}' (expected gaussian or cauchy)"
            ))),
        }
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Embed a CSV dataset into random periodic features (binary output).
    Features {
        #[command(flatten)]
        csv: CsvArgs,
        /// Feature map: cos, q (one-bit quantizer), exp, or cos<k> harmonics.
        #[arg(long, default_value = "cos")]
        map: String,
        /// Number of random features.
        #[arg(long, default_value_t = 1024)]
        m: usize,
        #[command(flatten)]
        sampler: SamplerArgs,
        /// Reuse a saved frequency draw instead of sampling a fresh one.
        #[arg(long)]
        reuse_draw: Option<PathBuf>,
        /// Also save the frequency draw (matrix and dither) to this path.
        #[arg(long)]
        save_draw: Option<PathBuf>,
    },
    /// Print feature-count and failure-probability bounds as JSON.
    Bounds {
        /// Signal model: ball, sparse-ball, or union-of-subspaces.
        #[arg(long, default_value = "ball")]
        signal_model: String,
        /// Ambient dimension d.
        #[arg(long, default_value_t = 16)]
        dim: usize,
        /// Sparsity s (sparse-ball and union-of-subspaces).
        #[arg(long, default_value_t = 2)]
        sparsity: usize,
        /// Number of subspaces S (union-of-subspaces).
        #[arg(long, default_value_t = 10)]
        subspaces: usize,
        /// Model radius.
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        /// Target uniform kernel error ε.
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        /// Covering resolution η for the reported raw entropy number.
        #[arg(long)]
        eta: Option<f64>,
        /// Feature count for the reported pointwise failure probability.
        #[arg(long, default_value_t = 1000)]
        hoeffding_m: u64,
        /// Query-side map (cos, q, exp).
        #[arg(long, default_value = "q")]
        query_map: String,
        /// Support-side map (cos, q, exp).
        #[arg(long, default_value = "cos")]
        support_map: String,
        #[command(flatten)]
        sampler: SamplerArgs,
    },
    /// Estimate-vs-expectation scatter over pairs at swept distances (CSV).
    KernelScatter,
    /// Worst-case estimation error across feature counts (CSV + slope).
    ErrorSweep,
    /// Success rates of uniform ε̄-approximation over (n, m) (CSV + transitions).
    SuccessGrid,
    /// Train a one-vs-rest SVM (exact kernel or on cosine features).
    SvmTrain {
        #[command(flatten)]
        csv: CsvArgs,
        /// Training mode: exact (kernel matrix) or features (linear on z_cos).
        #[arg(long, default_value = "exact")]
        mode: String,
        #[command(flatten)]
        sampler: SamplerArgs,
        /// Box constraint R.
        #[arg(long, default_value_t = 5.0)]
        r: f64,
        /// Feature count (features mode, and the inference recipe in exact mode).
        #[arg(long)]
        m: Option<usize>,
        /// Duality-gap tolerance for the solver.
        #[arg(long, default_value_t = 1e-3)]
        gap_tol: f64,
        /// Epoch cap for the solver.
        #[arg(long, default_value_t = 10_000)]
        max_epochs: usize,
    },
    /// Cross-validate (sigma, R) on a labeled CSV and report the grid.
    SvmCv {
        #[command(flatten)]
        csv: CsvArgs,
        #[arg(long, default_value_t = 5)]
        folds: usize,
        /// Comma-separated sigma grid.
        #[arg(long, default_value = "0.5,1,2,4")]
        sigmas: String,
        /// Comma-separated R grid.
        #[arg(long, default_value = "0.5,5,50")]
        rs: String,
        /// exact or features.
        #[arg(long, default_value = "exact")]
        mode: String,
        /// Feature count (features mode).
        #[arg(long)]
        m: Option<usize>,
    },
    /// Evaluate a saved model on a labeled CSV, exactly or through a combo.
    SvmEval {
        #[command(flatten)]
        csv: CsvArgs,
        /// Saved model JSON.
        #[arg(long)]
        model: PathBuf,
        /// exact, cos-cos, q-cos, cos-q, or q-q.
        #[arg(long, default_value = "exact")]
        combo: String,
        /// Feature count for combo inference when the model has no recipe.
        #[arg(long)]
        m: Option<usize>,
        /// Support-feature file (training-set features) to attach.
        #[arg(long)]
        database: Option<PathBuf>,
    },
    /// Serve a feature database (and optional model) over TCP.
    Serve {
        #[arg(long, default_value = "127.0.0.1:7878")]
        bind: String,
        /// Saved model JSON for classify mode.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Feature database: dense cosine features of the training set.
        #[arg(long)]
        database: PathBuf,
        /// Draw seed the database was embedded with (defaults to the
        /// model's recipe when available).
        #[arg(long)]
        draw_seed: Option<u64>,
    },
    /// Send a one-bit query to a server; prints the reply and byte accounting.
    Query {
        /// Server address, host:port.
        #[arg(long, default_value = "127.0.0.1:7878")]
        addr: String,
        /// similarity or classify.
        #[arg(long, default_value = "similarity")]
        mode: String,
        /// How many similarity hits to request (0 = all).
        #[arg(long, default_value_t = 5)]
        top_k: u32,
        /// CSV with raw query points (embedded locally before sending).
        #[arg(long)]
        input: Option<PathBuf>,
        /// Packed one-bit feature file to query from instead of a CSV.
        #[arg(long)]
        features: Option<PathBuf>,
        /// Row of the input to send.
        #[arg(long, default_value_t = 0)]
        row: usize,
        /// Feature count (raw-CSV input; must match the server).
        #[arg(long)]
        m: Option<usize>,
        #[command(flatten)]
        sampler: SamplerArgs,
        /// Treat the first CSV row as data, not as a header.
        #[arg(long)]
        no_header: bool,
    },
    /// Generate a Gaussian-mixture classification dataset as CSV.
    Synth {
        #[arg(long, default_value_t = 5)]
        classes: usize,
        /// Mixture components per class.
        #[arg(long, default_value_t = 4)]
        components: usize,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        /// Total number of points.
        #[arg(long, default_value_t = 1000)]
        n: usize,
        /// Low end of the class-center box.
        #[arg(long, default_value_t = -10.0, allow_negative_numbers = true)]
        center_lo: f64,
        /// High end of the class-center box.
        #[arg(long, default_value_t = 10.0, allow_negative_numbers = true)]
        center_hi: f64,
        /// Minimum distance between centers of different classes.
        #[arg(long, default_value_t = 3.0)]
        min_separation: f64,
        /// Within-component standard deviation.
        #[arg(long, default_value_t = 0.8)]
        noise: f64,
    },
}

fn parse_label_column(s: &str) -> LabelColumn {
    match s.parse::<usize>() {
        Ok(i) => LabelColumn::Index(i),
        Err(_) => LabelColumn::Name(s.to_string()),
    }
}

fn parse_map(s: &str) -> Result<PeriodicMap> {
    match s {
        "cos" | "cosine" => Ok(PeriodicMap::Cosine { k: 1 }),
        "q" | "quantizer" => Ok(PeriodicMap::UniversalQuantizer),
        "exp" => Ok(PeriodicMap::ComplexExponential),
        other => {
            if let Some(rest) = other.strip_prefix("cos") {
                if let Ok(k) = rest.parse::<u32>() {
                    if k >= 1 {
                        return Ok(PeriodicMap::Cosine { k });
                    }
                }
            }
            Err(ArpfError::InvalidParameter(format!(
                "unknown map '{other}' (expected cos, q, exp, or cos<k>)"
            )))
        }
    }
}

fn parse_f64_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|tok| {
            tok.trim().parse::<f64>().map_err(|_| {
                ArpfError::InvalidParameter(format!("'{tok}' is not a number"))
            })
        })
        .collect()
}

fn load_config_or_default<T: serde::de::DeserializeOwned + Default>(
    path: &Option<PathBuf>,
) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            match p.extension().and_then(|e| e.to_str()) {
                Some("json") => Ok(serde_json::from_str(&text)?),
                _ => toml::from_str(&text).map_err(|e| ArpfError::Toml(e.to_string())),
            }
        }
    }
}

fn out_or(cli_out: &Option<PathBuf>, default: &str) -> PathBuf {
    cli_out.clone().unwrap_or_else(|| PathBuf::from(default))
}

/// Sibling path with a suffix spliced in before the extension.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    let ext = path.extension().and_then(|s| s.to_str()).unwrap_or("csv");
    path.with_file_name(format!("{stem}{suffix}.{ext}"))
}

fn emit_json<T: serde::Serialize>(value: &T, out: &Option<PathBuf>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(path) => {
            std::fs::write(path, text + "\n")?;
        }
        None => println!("{text}"),
    }
    Ok(())
}

/// Parse argv and execute; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(CliFailure::Usage(message)) => {
            eprintln!("usage error: {message}");
            1
        }
        Err(CliFailure::Runtime(err)) => {
            eprintln!("error: {err}");
            2
        }
    }
}

enum CliFailure {
    Usage(String),
    Runtime(ArpfError),
}

impl From<ArpfError> for CliFailure {
    fn from(err: ArpfError) -> Self {
        CliFailure::Runtime(err)
    }
}

fn usage(message: impl Into<String>) -> CliFailure {
    CliFailure::Usage(message.into())
}

fn execute(cli: Cli) -> std::result::Result<(), CliFailure> {
    let seed = cli.seed;
    match cli.command {
        Command::Features {
            ref csv,
            ref map,
            m,
            ref sampler,
            ref reuse_draw,
            ref save_draw,
        } => {
            let data = csv.load()?;
            let map = parse_map(map)?;
            let draw = match reuse_draw {
                Some(path) => RandomDraw::load(path)?,
                None => sampler.build(data.dim())?.draw(m, seed.unwrap_or(0))?,
            };
            if draw.dim() != data.dim() {
                return Err(usage(format!(
                    "draw is for dimension {}, data has dimension {}",
                    draw.dim(),
                    data.dim()
                )));
            }
            if let Some(path) = save_draw {
                draw.save(path)?;
            }
            let embedding = FeatureEmbedding::new(draw, map);
            let rows: Vec<Vec<f64>> = (0..data.len()).map(|i| data.row(i)).collect();
            let batch = embedding.embed_batch(&rows)?;
            let out = out_or(&cli.out, "features.arpv");
            save_feature_batch(&out, &batch)?;
            emit_json(
                &serde_json::json!({
                    "count": batch.len(),
                    "m": embedding.feature_count(),
                    "kind": format!("{:?}", batch.first().map(|v| v.kind()).unwrap_or(PayloadKind::DenseReal)),
                    "out": out,
                }),
                &None,
            )?;
            Ok(())
        }
        Command::Bounds {
            ref signal_model,
            dim,
            sparsity,
            subspaces,
            radius,
            eps,
            eta,
            hoeffding_m,
            ref query_map,
            ref support_map,
            ref sampler,
        } => {
            let model = match signal_model.as_str() {
                "ball" => SignalModel::ball(dim, radius)?,
                "sparse-ball" => SignalModel::sparse_ball(dim, sparsity, radius)?,
                "union-of-subspaces" | "union" => {
                    SignalModel::union_of_subspaces(dim, sparsity, subspaces as u64, radius)?
                }
                other => {
                    return Err(usage(format!(
                        "unknown signal model '{other}' (expected ball, sparse-ball, or union-of-subspaces)"
                    )))
                }
            };
            let sampler = sampler.build(dim)?;
            let report = bounds_report(
                &model,
                &sampler,
                &parse_map(query_map)?,
                &parse_map(support_map)?,
                eps,
                eta.unwrap_or(eps),
                hoeffding_m,
                BoundConstants::default(),
            )?;
            emit_json(&report, &cli.out)?;
            Ok(())
        }
        Command::KernelScatter => {
            let mut config: KernelScatterConfig = load_config_or_default(&cli.config)?;
            if let Some(seed) = seed {
                config.seed = seed;
            }
            let rows = run_kernel_scatter(&config)?;
            let out = out_or(&cli.out, "kernel_scatter.csv");
            write_kernel_scatter_csv(&out, &config, &rows)?;
            println!(
                "{}",
                serde_json::json!({
                    "rows": rows.len(),
                    "out": out,
                    "config_hash": config_hash(&config),
                })
            );
            Ok(())
        }
        Command::ErrorSweep => {
            let mut config: ErrorSweepConfig = load_config_or_default(&cli.config)?;
            if let Some(seed) = seed {
                config.seed = seed;
            }
            let rows = run_error_sweep(&config)?;
            let out = out_or(&cli.out, "error_sweep.csv");
            write_error_sweep_csv(&out, &config, &rows)?;
            let summary = summarize_error_sweep(&rows)?;
            println!(
                "{}",
                serde_json::json!({
                    "rows": rows.len(),
                    "out": out,
                    "log_log_slope": summary.slope,
                    "medians": summary.medians,
                    "config_hash": config_hash(&config),
                })
            );
            Ok(())
        }
        Command::SuccessGrid => {
            let mut config: SuccessGridConfig = load_config_or_default(&cli.config)?;
            if let Some(seed) = seed {
                config.seed = seed;
            }
            let result = run_success_grid(&config)?;
            let out = out_or(&cli.out, "success_grid.csv");
            let transitions_out = sibling(&out, "_transitions");
            write_success_grid_csv(&out, &config, &result)?;
            write_grid_transitions_csv(&transitions_out, &config, &result)?;
            println!(
                "{}",
                serde_json::json!({
                    "rates_out": out,
                    "transitions_out": transitions_out,
                    "config_hash": config_hash(&config),
                })
            );
            Ok(())
        }
        Command::SvmTrain {
            ref csv,
            ref mode,
            ref sampler,
            r,
            m,
            gap_tol,
            max_epochs,
        } => {
            let data = csv.load()?;
            if data.labels.is_none() {
                return Err(usage("training needs labels; pass --label-col"));
            }
            let sampler = sampler.build(data.dim())?;
            let solver = SolverOptions {
                gap_tol,
                max_epochs,
            };
            let model = match mode.as_str() {
                "exact" => {
                    let mut model = train_exact(&data, &sampler, r, solver)?;
                    if let Some(m) = m {
                        model.inference_embedding = Some(EmbeddingRef {
                            sampler: sampler.clone(),
                            map: PeriodicMap::Cosine { k: 1 },
                            m,
                            seed: seed.unwrap_or(0),
                        });
                    }
                    model
                }
                "features" => {
                    let m = m.ok_or_else(|| usage("features mode needs --m"))?;
                    let embedding_ref = EmbeddingRef {
                        sampler: sampler.clone(),
                        map: PeriodicMap::Cosine { k: 1 },
                        m,
                        seed: seed.unwrap_or(0),
                    };
                    let draw = embedding_ref.make_draw()?;
                    let zc = crate::features::embed_real_matrix(
                        &draw,
                        &PeriodicMap::Cosine { k: 1 },
                        &data.rows,
                    )?;
                    train_on_features(
                        &zc,
                        data.labels.as_ref().unwrap(),
                        r,
                        solver,
                        embedding_ref,
                    )?
                }
                other => {
                    return Err(usage(format!(
                        "unknown training mode '{other}' (expected exact or features)"
                    )))
                }
            };
            let out = out_or(&cli.out, "model.json");
            model.save_json(&out)?;
            println!(
                "{}",
                serde_json::json!({
                    "out": out,
                    "classes": model.classes,
                    "support_vectors": model.support_union.len(),
                    "worst_gap": model.worst_gap(),
                })
            );
            Ok(())
        }
        Command::SvmCv {
            ref csv,
            folds,
            ref sigmas,
            ref rs,
            ref mode,
            m,
        } => {
            let data = csv.load()?;
            let mode = match mode.as_str() {
                "exact" => CvMode::Exact,
                "features" => CvMode::Features {
                    m: m.ok_or_else(|| usage("features mode needs --m"))?,
                },
                other => {
                    return Err(usage(format!(
                        "unknown cv mode '{other}' (expected exact or features)"
                    )))
                }
            };
            let config = CvConfig {
                folds,
                sigmas: parse_f64_list(sigmas)?,
                rs: parse_f64_list(rs)?,
                mode,
                seed: seed.unwrap_or(0),
                solver: SolverOptions::default(),
            };
            let report = svm_cross_validate(&data, &config)?;
            emit_json(&report, &cli.out)?;
            Ok(())
        }
        Command::SvmEval {
            ref csv,
            ref model,
            ref combo,
            m,
            ref database,
        } => {
            let data = csv.load()?;
            let labels = data
                .labels
                .clone()
                .ok_or_else(|| usage("evaluation needs labels; pass --label-col"))?;
            let mut model = SvmModel::load_json(model)?;
            let accuracy = if combo == "exact" {
                let mut correct = 0usize;
                for i in 0..data.len() {
                    correct += usize::from(model.predict_exact(&data.row(i))? == labels[i]);
                }
                correct as f64 / data.len() as f64
            } else {
                let combo: MapCombo = combo
                    .parse()
                    .map_err(|e: ArpfError| usage(e.to_string()))?;
                prepare_feature_inference(&mut model, m, seed, database)?;
                let recipe = model
                    .embedding_ref()
                    .ok_or_else(|| {
                        usage("model has no embedding recipe; pass --m (and --seed)")
                    })?
                    .clone();
                let embedding =
                    FeatureEmbedding::new(recipe.make_draw()?, combo.query_map());
                let mut correct = 0usize;
                for i in 0..data.len() {
                    let query = embedding.embed(&data.row(i))?;
                    correct += usize::from(model.predict_with_attached(&query, combo)? == labels[i]);
                }
                correct as f64 / data.len() as f64
            };
            emit_json(
                &serde_json::json!({
                    "combo": combo,
                    "n": data.len(),
                    "accuracy": accuracy,
                }),
                &cli.out,
            )?;
            Ok(())
        }
        Command::Serve {
            ref bind,
            ref model,
            ref database,
            draw_seed,
        } => {
            let db = load_feature_batch(database)?;
            if db.is_empty() {
                return Err(usage("feature database is empty"));
            }
            let m = db[0].len();
            let model = model
                .as_ref()
                .map(|p| SvmModel::load_json(p))
                .transpose()?;
            let seed = draw_seed
                .or(seed)
                .or_else(|| {
                    model
                        .as_ref()
                        .and_then(|mo| mo.embedding_ref())
                        .map(|e| e.seed)
                })
                .ok_or_else(|| {
                    usage("pass --draw-seed (or a model with an embedding recipe)")
                })?;
            let state = ServerState::new(db, model, m as u32, seed)?;
            println!(
                "{}",
                serde_json::json!({
                    "listening": bind,
                    "database_rows": state.database.len(),
                    "m": state.m,
                    "classify": state.model.is_some(),
                })
            );
            serve_forever(bind.as_str(), state)?;
            Ok(())
        }
        Command::Query {
            ref addr,
            ref mode,
            top_k,
            ref input,
            ref features,
            row,
            m,
            ref sampler,
            no_header,
        } => {
            let mode = match mode.as_str() {
                "similarity" => QueryMode::Similarity,
                "classify" => QueryMode::Classify,
                other => {
                    return Err(usage(format!(
                        "unknown mode '{other}' (expected similarity or classify)"
                    )))
                }
            };
            let seed = seed.unwrap_or(0);
            let query = match (features, input) {
                (Some(path), None) => {
                    let batch = load_feature_batch(path)?;
                    let v = batch.get(row).cloned().ok_or_else(|| {
                        usage(format!("row {row} out of range ({} rows)", batch.len()))
                    })?;
                    if v.kind() != PayloadKind::PackedBits {
                        return Err(usage(
                            "remote queries must be packed one-bit features; embed with map=q",
                        ));
                    }
                    v
                }
                (None, Some(path)) => {
                    let m = m.ok_or_else(|| usage("raw-CSV queries need --m"))?;
                    let csv = CsvArgs {
                        input: path.clone(),
                        label_col: None,
                        no_header,
                        delimiter: ',',
                    };
                    let data = csv.load()?;
                    if row >= data.len() {
                        return Err(usage(format!(
                            "row {row} out of range ({} rows)",
                            data.len()
                        )));
                    }
                    let draw = sampler.build(data.dim())?.draw(m, seed)?;
                    let embedding =
                        FeatureEmbedding::new(draw, PeriodicMap::UniversalQuantizer);
                    embedding.embed(&data.row(row))?
                }
                _ => {
                    return Err(usage(
                        "pass exactly one query source: --features or --input",
                    ))
                }
            };
            let m = query.len() as u32;
            let mut client = Client::connect(addr.as_str(), mode, top_k, m, seed)?;
            let stats = transfer_stats(m);
            let reply = match mode {
                QueryMode::Similarity => {
                    let hits = client.query_similarity(&query)?;
                    serde_json::json!({
                        "hits": hits
                            .iter()
                            .map(|(i, s)| serde_json::json!({"index": i, "score": s}))
                            .collect::<Vec<_>>(),
                    })
                }
                QueryMode::Classify => {
                    let label = client.query_class(&query)?;
                    serde_json::json!({ "label": label })
                }
            };
            println!(
                "{}",
                serde_json::json!({
                    "mode": if mode == QueryMode::Similarity { "similarity" } else { "classify" },
                    "reply": reply,
                    "bytes": {
                        "payload": stats.payload_bytes,
                        "frame": stats.frame_bytes,
                        "quantized_features": stats.quantized_feature_bytes,
                        "full_precision_features": stats.full_precision_feature_bytes,
                        "reduction_factor": stats.reduction_factor,
                    },
                })
            );
            Ok(())
        }
        Command::Synth {
            classes,
            components,
            dim,
            n,
            center_lo,
            center_hi,
            min_separation,
            noise,
        } => {
            let spread = MixtureSpread {
                center_lo,
                center_hi,
                min_separation,
                noise,
            };
            let data =
                synth_gaussian_mixture(classes, components, dim, n, seed.unwrap_or(0), spread)?;
            let out = out_or(&cli.out, "synth.csv");
            save_csv(&out, &data)?;
            println!(
                "{}",
                serde_json::json!({
                    "out": out,
                    "n": data.len(),
                    "d": data.dim(),
                    "classes": classes,
                })
            );
            Ok(())
        }
    }
}

/// Make sure a model can serve combo inference: attach support features from
/// a database file, or install an embedding recipe and rebuild them from the
/// stored support rows.
fn prepare_feature_inference(
    model: &mut SvmModel,
    m: Option<usize>,
    seed: Option<u64>,
    database: &Option<PathBuf>,
) -> std::result::Result<(), CliFailure> {
    if model.embedding_ref().is_none() {
        let m = m.ok_or_else(|| usage("model has no embedding recipe; pass --m"))?;
        let sampler = match &model.training_kind {
            crate::svm::TrainingKind::ExactKernel { sampler } => sampler.clone(),
            crate::svm::TrainingKind::LinearOnFeatures { embedding } => {
                embedding.sampler.clone()
            }
        };
        model.inference_embedding = Some(EmbeddingRef {
            sampler,
            map: PeriodicMap::Cosine { k: 1 },
            m,
            seed: seed.unwrap_or(0),
        });
    }
    if model.support_features.is_some() {
        return Ok(());
    }
    match database {
        Some(path) => {
            let db = load_feature_batch(path)?;
            let cos: Vec<_> = model
                .support_union
                .iter()
                .map(|&i| {
                    db.get(i).cloned().ok_or_else(|| {
                        ArpfError::EmbeddingMismatch(format!(
                            "support index {i} is outside the {}-row database",
                            db.len()
                        ))
                    })
                })
                .collect::<Result<_>>()?;
            let support = crate::svm::SupportFeatures::from_cos(cos)?;
            model.attach_support_features(support)?;
        }
        None => {
            model.rebuild_support_features()?;
        }
    }
    Ok(())
}

/// Pack the signs of a dense real vector (used by examples and tests that
/// quantize an existing cosine embedding).
pub fn quantize_dense(features: &crate::features::FeatureVector) -> Result<crate::features::FeatureVector> {
    let signs: Vec<f64> = features
        .dense_entries()
        .iter()
        .map(|c| if c.re >= 0.0 { 1.0 } else { -1.0 })
        .collect();
    pack_bits(&signs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn parse_helpers() {
        assert!(matches!(
            parse_label_column("2"),
            LabelColumn::Index(2)
        ));
        assert!(matches!(
            parse_label_column("label"),
            LabelColumn::Name(_)
        ));
        assert_eq!(parse_map("cos").unwrap(), PeriodicMap::Cosine { k: 1 });
        assert_eq!(parse_map("cos3").unwrap(), PeriodicMap::Cosine { k: 3 });
        assert_eq!(
            parse_map("q").unwrap(),
            PeriodicMap::UniversalQuantizer
        );
        assert_eq!(
            parse_map("exp").unwrap(),
            PeriodicMap::ComplexExponential
        );
        assert!(parse_map("tan").is_err());
        assert_eq!(parse_f64_list("0.5, 1,2").unwrap(), vec![0.5, 1.0, 2.0]);
        assert!(parse_f64_list("0.5,x").is_err());
    }

    #[test]
    fn sibling_path_splices_suffix() {
        assert_eq!(
            sibling(Path::new("/tmp/grid.csv"), "_transitions"),
            PathBuf::from("/tmp/grid_transitions.csv")
        );
    }

    #[test]
    fn help_and_bad_flag_exit_codes() {
        assert_eq!(run(["arpf", "--help"]), 0);
        assert_eq!(run(["arpf", "bounds", "--help"]), 0);
        assert_eq!(run(["arpf", "--definitely-not-a-flag"]), 1);
        assert_eq!(run(["arpf", "no-such-command"]), 1);
    }

    #[test]
    fn synth_features_train_eval_pipeline() {
        let dir = tempdir().unwrap();
        let data_path = dir.path().join("data.csv");
        let model_path = dir.path().join("model.json");
        let features_path = dir.path().join("features.arpv");

        let code = run([
            "arpf",
            "synth",
            "--classes",
            "3",
            "--components",
            "2",
            "--n",
            "120",
            "--seed",
            "9",
            "--out",
            data_path.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
        assert!(data_path.exists());

        let code = run([
            "arpf",
            "features",
            "--input",
            data_path.to_str().unwrap(),
            "--label-col",
            "label",
            "--map",
            "cos",
            "--m",
            "128",
            "--family",
            "gaussian",
            "--scale",
            "2.0",
            "--seed",
            "17",
            "--out",
            features_path.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
        let batch = load_feature_batch(&features_path).unwrap();
        assert_eq!(batch.len(), 120);
        assert_eq!(batch[0].len(), 128);

        let code = run([
            "arpf",
            "svm-train",
            "--input",
            data_path.to_str().unwrap(),
            "--label-col",
            "label",
            "--mode",
            "exact",
            "--family",
            "gaussian",
            "--scale",
            "2.0",
            "--r",
            "5.0",
            "--m",
            "128",
            "--seed",
            "17",
            "--out",
            model_path.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
        let model = SvmModel::load_json(&model_path).unwrap();
        assert_eq!(model.classes.len(), 3);
        assert!(model.embedding_ref().is_some());

        // exact self-evaluation should be strong on an easy mixture
        let code = run([
            "arpf",
            "svm-eval",
            "--input",
            data_path.to_str().unwrap(),
            "--label-col",
            "label",
            "--model",
            model_path.to_str().unwrap(),
            "--combo",
            "exact",
            "--out",
            dir.path().join("eval.json").to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
        let eval: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("eval.json")).unwrap())
                .unwrap();
        assert!(eval["accuracy"].as_f64().unwrap() > 0.9);

        // combo evaluation via the stored recipe (support features rebuilt)
        let code = run([
            "arpf",
            "svm-eval",
            "--input",
            data_path.to_str().unwrap(),
            "--label-col",
            "label",
            "--model",
            model_path.to_str().unwrap(),
            "--combo",
            "q-cos",
            "--out",
            dir.path().join("eval_qc.json").to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
        let eval: serde_json::Value = serde_json::from_str(
            &std::fs::read_to_string(dir.path().join("eval_qc.json")).unwrap(),
        )
        .unwrap();
        assert!(eval["accuracy"].as_f64().unwrap() > 0.7);
    }

    #[test]
    fn missing_labels_is_a_usage_error() {
        let dir = tempdir().unwrap();
        let data_path = dir.path().join("data.csv");
        assert_eq!(
            run([
                "arpf",
                "synth",
                "--n",
                "40",
                "--classes",
                "2",
                "--out",
                data_path.to_str().unwrap()
            ]),
            0
        );
        // no --label-col: training must fail with the usage exit code
        let code = run([
            "arpf",
            "svm-train",
            "--input",
            data_path.to_str().unwrap(),
            "--mode",
            "exact",
        ]);
        assert_eq!(code, 1);
    }

    #[test]
    fn experiment_commands_write_csv_with_config() {
        let dir = tempdir().unwrap();
        let config_path = dir.path().join("scatter.toml");
        std::fs::write(
            &config_path,
            "n_pairs = 40\nm = 64\nseed = 3\nlambda_max = 4.0\n",
        )
        .unwrap();
        let out = dir.path().join("scatter.csv");
        let code = run([
            "arpf",
            "kernel-scatter",
            "--config",
            config_path.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
        let text = std::fs::read_to_string(&out).unwrap();
        assert!(text.starts_with("# config-hash: "));
        // 3 combos × 40 pairs + comment + header
        assert_eq!(text.lines().count(), 2 + 120);
    }
}
