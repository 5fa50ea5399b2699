//! Scripted experiment pipelines emitting CSV: kernel scatter clouds,
//! worst-case-error sweeps over feature counts, success-rate grids against
//! an error threshold, and SVM accuracy-vs-m curves.
//!
//! Every pipeline is a pure function of its config: datasets and draws are
//! derived from the config seed, trials pull independent substreams keyed by
//! trial index, and the emitted CSV is byte-identical across runs. Each CSV
//! starts with a comment line carrying a hash of the full config.

use ndarray::{Array2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::io::Write;
use std::path::Path;

use crate::dataset::{synth_gaussian_mixture, MixtureSpread};
use crate::error::{ArpfError, Result};
use crate::features::MapCombo;
use crate::kernels::{distorted_qq_closed_form, ExpectedKernel};
use crate::periodic::PeriodicMap;
use crate::sampling::{FrequencySampler, RandomDraw, SamplerKind};
use crate::svm::{train_exact, train_on_features, EmbeddingRef, SolverOptions, SvmModel};
use crate::util::{derive_seed, linspace};

/// Hex SHA-256 of a config's canonical JSON; recorded in every CSV so a file
/// can be traced back to the exact configuration that produced it.
pub fn config_hash<T: Serialize>(config: &T) -> String {
    let json = serde_json::to_string(config).expect("config serializes");
    let mut hasher = Sha256::new();
    hasher.update(json.as_bytes());
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn write_csv(
    path: &Path,
    hash: &str,
    header: &[&str],
    rows: impl Iterator<Item = Vec<String>>,
) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "# config-hash: {hash}")?;
    writeln!(out, "{}", header.join(","))?;
    for row in rows {
        writeln!(out, "{}", row.join(","))?;
    }
    out.flush()?;
    Ok(())
}

/// n × d matrix of `std`-scaled standard normal entries.
fn normal_matrix(rng: &mut ChaCha12Rng, n: usize, d: usize, std: f64) -> Array2<f64> {
    Array2::from_shape_fn((n, d), |_| {
        let z: f64 = StandardNormal.sample(rng);
        std * z
    })
}

/// Cosine and quantizer feature matrices from shared phases (rows = points).
fn cos_q_matrices(draw: &RandomDraw, x: &Array2<f64>) -> (Array2<f64>, Array2<f64>) {
    let m = draw.feature_count();
    let scale = 1.0 / (m as f64).sqrt();
    let mut phases = x.dot(&draw.omega);
    for mut row in phases.rows_mut() {
        for (j, v) in row.iter_mut().enumerate() {
            *v += draw.xi[j];
        }
    }
    let zc = phases.mapv(|t| t.cos() * scale);
    let zq = phases.mapv(|t| if t.cos() >= 0.0 { scale } else { -scale });
    (zc, zq)
}

/// `scale(combo) · A Bᵀ`: the rescaled estimate of the combo's kernel for
/// every (query row of `a`, support row of `b`) pair.
fn combo_estimates(a: &Array2<f64>, b: &Array2<f64>, combo: MapCombo) -> Array2<f64> {
    let mut est = a.dot(&b.t());
    let s = combo.scale();
    est.mapv_inplace(|v| s * v);
    est
}

fn query_side<'a>(
    zc: &'a Array2<f64>,
    zq: &'a Array2<f64>,
    combo: MapCombo,
) -> &'a Array2<f64> {
    match combo {
        MapCombo::CosCos | MapCombo::CosQ => zc,
        MapCombo::QCos | MapCombo::QQ => zq,
    }
}

fn support_side<'a>(
    zc: &'a Array2<f64>,
    zq: &'a Array2<f64>,
    combo: MapCombo,
) -> &'a Array2<f64> {
    match combo {
        MapCombo::CosCos | MapCombo::QCos => zc,
        MapCombo::CosQ | MapCombo::QQ => zq,
    }
}

/// Median of a slice (averaging the middle pair for even lengths).
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of empty slice");
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Least-squares slope of y against x (used on log10-transformed data).
pub fn regression_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for &(x, y) in points {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    num / den
}

// ---------------------------------------------------------------------------
// Kernel scatter
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct KernelScatterConfig {
    pub sampler: FrequencySampler,
    /// Number of point pairs; the offsets' lengths sweep `[0, lambda_max]`.
    pub n_pairs: usize,
    pub lambda_max: f64,
    pub m: usize,
    pub seed: u64,
    pub combos: Vec<MapCombo>,
}

impl Default for KernelScatterConfig {
    fn default() -> Self {
        KernelScatterConfig {
            sampler: FrequencySampler::gaussian_rbf(1.0, 5).unwrap(),
            n_pairs: 500,
            lambda_max: 5.0,
            m: 1000,
            seed: 1,
            combos: vec![MapCombo::CosCos, MapCombo::QCos, MapCombo::QQ],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatterRow {
    pub combo: MapCombo,
    pub pair: usize,
    pub lambda: f64,
    pub distance: f64,
    /// Rescaled feature inner product for this pair.
    pub estimate: f64,
    /// The combo's own expected kernel at this distance (distorted for q·q).
    pub expected: f64,
    /// The sampler's analytic kernel at this distance.
    pub analytic: f64,
}

/// The combo's expected kernel on the estimate's scale.
fn combo_expected(sampler: &FrequencySampler, combo: MapCombo, s: f64) -> Result<f64> {
    if combo == MapCombo::QQ {
        if let SamplerKind::GaussianRbf { sigma } = sampler.kind {
            return distorted_qq_closed_form(s, sigma);
        }
    }
    let kernel = ExpectedKernel::new(combo.query_map(), combo.support_map(), sampler.clone());
    Ok(combo.scale() * kernel.at_distance(s)?.re)
}

/// Generate `n_pairs` pairs `(x, x + λu)` with unit `u` and λ swept linearly
/// to `lambda_max`, embed them once, and record every combo's estimate next
/// to its expectation.
pub fn run_kernel_scatter(config: &KernelScatterConfig) -> Result<Vec<ScatterRow>> {
    if config.n_pairs < 2 {
        return Err(ArpfError::InvalidParameter(
            "scatter needs at least two pairs".into(),
        ));
    }
    let d = config.sampler.dim;
    let mut rng = ChaCha12Rng::seed_from_u64(derive_seed(config.seed, 0));
    let x = normal_matrix(&mut rng, config.n_pairs, d, 1.0);
    let lambdas = linspace(0.0, config.lambda_max, config.n_pairs);
    let mut y = Array2::<f64>::zeros((config.n_pairs, d));
    for i in 0..config.n_pairs {
        // unit direction in the sampler's own norm
        let mut u: Vec<f64> = (0..d)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                z
            })
            .collect();
        let norm = config.sampler.norm(&u);
        for v in u.iter_mut() {
            *v /= norm;
        }
        for j in 0..d {
            y[(i, j)] = x[(i, j)] + lambdas[i] * u[j];
        }
    }
    let draw = config.sampler.draw(config.m, derive_seed(config.seed, 1))?;
    let (zc_x, zq_x) = cos_q_matrices(&draw, &x);
    let (zc_y, zq_y) = cos_q_matrices(&draw, &y);
    let mut rows = Vec::with_capacity(config.n_pairs * config.combos.len());
    for &combo in &config.combos {
        let qx = query_side(&zc_x, &zq_x, combo);
        let sy = support_side(&zc_y, &zq_y, combo);
        for i in 0..config.n_pairs {
            let est = combo.scale()
                * qx.row(i)
                    .iter()
                    .zip(sy.row(i).iter())
                    .map(|(a, b)| a * b)
                    .sum::<f64>();
            let diff: Vec<f64> = (0..d).map(|j| x[(i, j)] - y[(i, j)]).collect();
            let s = config.sampler.norm(&diff);
            rows.push(ScatterRow {
                combo,
                pair: i,
                lambda: lambdas[i],
                distance: s,
                estimate: est,
                expected: combo_expected(&config.sampler, combo, s)?,
                analytic: config.sampler.kernel_profile(s),
            });
        }
    }
    Ok(rows)
}

pub fn write_kernel_scatter_csv(
    path: &Path,
    config: &KernelScatterConfig,
    rows: &[ScatterRow],
) -> Result<()> {
    write_csv(
        path,
        &config_hash(config),
        &[
            "combo", "pair", "lambda", "distance", "estimate", "expected", "analytic",
        ],
        rows.iter().map(|r| {
            vec![
                r.combo.tag().to_string(),
                r.pair.to_string(),
                format!("{}", r.lambda),
                format!("{}", r.distance),
                format!("{}", r.estimate),
                format!("{}", r.expected),
                format!("{}", r.analytic),
            ]
        }),
    )
}

// ---------------------------------------------------------------------------
// Worst-case error sweep
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ErrorSweepConfig {
    pub sampler: FrequencySampler,
    /// Dataset size; the sweep maximizes error over all n² ordered pairs.
    pub n: usize,
    /// Standard deviation of the synthetic dataset entries.
    pub data_std: f64,
    pub m_list: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub combo: MapCombo,
}

impl Default for ErrorSweepConfig {
    fn default() -> Self {
        ErrorSweepConfig {
            sampler: FrequencySampler::gaussian_rbf(0.25, 5).unwrap(),
            n: 200,
            data_std: 10.0,
            m_list: vec![100, 200, 400, 800, 1600, 3200],
            trials: 20,
            seed: 1,
            combo: MapCombo::QCos,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub m: usize,
    pub trial: usize,
    pub worst_case_error: f64,
}

/// For each feature count and trial (fresh draw), the maximal deviation of
/// the combo's rescaled estimate from the analytic kernel over all ordered
/// pairs of a fixed dataset.
pub fn run_error_sweep(config: &ErrorSweepConfig) -> Result<Vec<SweepRow>> {
    if config.n == 0 || config.trials == 0 || config.m_list.is_empty() {
        return Err(ArpfError::InvalidParameter(
            "sweep needs n ≥ 1, trials ≥ 1, and a nonempty m list".into(),
        ));
    }
    let d = config.sampler.dim;
    let mut rng = ChaCha12Rng::seed_from_u64(derive_seed(config.seed, 0));
    let x = normal_matrix(&mut rng, config.n, d, config.data_std);
    // analytic kernel over all ordered pairs
    let mut exact = Array2::<f64>::zeros((config.n, config.n));
    for i in 0..config.n {
        for j in 0..config.n {
            let diff: Vec<f64> = (0..d).map(|c| x[(i, c)] - x[(j, c)]).collect();
            exact[(i, j)] = config.sampler.kernel_profile(config.sampler.norm(&diff));
        }
    }
    let jobs: Vec<(usize, usize, usize)> = config
        .m_list
        .iter()
        .enumerate()
        .flat_map(|(mi, &m)| (0..config.trials).map(move |t| (mi, m, t)))
        .collect();
    let mut rows: Vec<SweepRow> = jobs
        .par_iter()
        .map(|&(mi, m, trial)| {
            let draw_seed = derive_seed(config.seed, 1 + (mi * config.trials + trial) as u64);
            let draw = config.sampler.draw(m, draw_seed)?;
            let (zc, zq) = cos_q_matrices(&draw, &x);
            let qx = query_side(&zc, &zq, config.combo);
            let sx = support_side(&zc, &zq, config.combo);
            let est = combo_estimates(qx, sx, config.combo);
            let mut worst = 0.0f64;
            for (e, k) in est.iter().zip(exact.iter()) {
                worst = worst.max((e - k).abs());
            }
            Ok(SweepRow {
                m,
                trial,
                worst_case_error: worst,
            })
        })
        .collect::<Result<_>>()?;
    rows.sort_by_key(|r| (r.m, r.trial));
    Ok(rows)
}

/// Medians per feature count plus the log-log regression slope of median
/// error against m.
#[derive(Debug, Clone, Serialize)]
pub struct SweepSummary {
    pub medians: Vec<(usize, f64)>,
    pub slope: f64,
}

pub fn summarize_error_sweep(rows: &[SweepRow]) -> Result<SweepSummary> {
    let mut ms: Vec<usize> = rows.iter().map(|r| r.m).collect();
    ms.sort_unstable();
    ms.dedup();
    if ms.len() < 2 {
        return Err(ArpfError::DegenerateData(
            "slope needs at least two feature counts".into(),
        ));
    }
    let medians: Vec<(usize, f64)> = ms
        .iter()
        .map(|&m| {
            let errs: Vec<f64> = rows
                .iter()
                .filter(|r| r.m == m)
                .map(|r| r.worst_case_error)
                .collect();
            (m, median(&errs))
        })
        .collect();
    let points: Vec<(f64, f64)> = medians
        .iter()
        .map(|&(m, e)| ((m as f64).log10(), e.log10()))
        .collect();
    Ok(SweepSummary {
        slope: regression_slope(&points),
        medians,
    })
}

pub fn write_error_sweep_csv(
    path: &Path,
    config: &ErrorSweepConfig,
    rows: &[SweepRow],
) -> Result<()> {
    write_csv(
        path,
        &config_hash(config),
        &["m", "trial", "worst_case_error"],
        rows.iter().map(|r| {
            vec![
                r.m.to_string(),
                r.trial.to_string(),
                format!("{}", r.worst_case_error),
            ]
        }),
    )
}

// ---------------------------------------------------------------------------
// Success grid
// ---------------------------------------------------------------------------

/// Which uniform-error event a success-grid curve counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridCurve {
    /// sup |κ̃_{q,cos} − κ| ≤ ε̄
    QCos,
    /// sup |κ̃_{cos,cos} − κ| ≤ ε̄
    CosCos,
    /// sup |κ̃_{q,cos} − κ̃_{cos,cos}| ≤ ε̄ (proximity of the two estimates)
    Proximity,
}

impl GridCurve {
    pub const ALL: [GridCurve; 3] = [GridCurve::QCos, GridCurve::CosCos, GridCurve::Proximity];

    pub fn tag(self) -> &'static str {
        match self {
            GridCurve::QCos => "q_cos",
            GridCurve::CosCos => "cos_cos",
            GridCurve::Proximity => "proximity",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SuccessGridConfig {
    pub sampler: FrequencySampler,
    pub n_list: Vec<usize>,
    pub m_list: Vec<usize>,
    pub data_std: f64,
    pub trials: usize,
    pub eps_bar: f64,
    pub seed: u64,
}

impl Default for SuccessGridConfig {
    fn default() -> Self {
        SuccessGridConfig {
            sampler: FrequencySampler::gaussian_rbf(0.25, 32).unwrap(),
            n_list: vec![10, 50, 250],
            m_list: vec![100, 200, 300, 400, 500, 600, 800, 1000, 1200, 1600],
            data_std: 10.0,
            trials: 20,
            eps_bar: 0.15,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridRateRow {
    pub curve: GridCurve,
    pub n: usize,
    pub m: usize,
    pub success_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridTransitionRow {
    pub curve: GridCurve,
    pub n: usize,
    /// Smallest m in the grid with success rate ≥ 1/2, if any.
    pub m50: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct SuccessGridResult {
    pub rates: Vec<GridRateRow>,
    pub transitions: Vec<GridTransitionRow>,
}

/// Empirical probability, per dataset size and feature count, that the
/// worst-case estimate error stays under the threshold — for the quantized
/// query curve, the full-precision curve, and their mutual proximity.
pub fn run_success_grid(config: &SuccessGridConfig) -> Result<SuccessGridResult> {
    if config.n_list.is_empty() || config.m_list.is_empty() || config.trials == 0 {
        return Err(ArpfError::InvalidParameter(
            "grid needs nonempty n and m lists and trials ≥ 1".into(),
        ));
    }
    let d = config.sampler.dim;
    let mut rates = Vec::new();
    let mut transitions = Vec::new();
    for (ni, &n) in config.n_list.iter().enumerate() {
        let mut rng = ChaCha12Rng::seed_from_u64(derive_seed(config.seed, 1000 + ni as u64));
        let x = normal_matrix(&mut rng, n, d, config.data_std);
        let mut exact = Array2::<f64>::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                let diff: Vec<f64> = (0..d).map(|c| x[(i, c)] - x[(j, c)]).collect();
                exact[(i, j)] = config.sampler.kernel_profile(config.sampler.norm(&diff));
            }
        }
        let jobs: Vec<(usize, usize, usize)> = config
            .m_list
            .iter()
            .enumerate()
            .flat_map(|(mi, &m)| (0..config.trials).map(move |t| (mi, m, t)))
            .collect();
        // per job: does each curve's worst error stay under the threshold?
        let successes: Vec<(usize, [bool; 3])> = jobs
            .par_iter()
            .map(|&(mi, m, trial)| {
                let draw_seed = derive_seed(
                    config.seed,
                    (1 + ni as u64) * 1_000_000 + (mi * config.trials + trial) as u64,
                );
                let draw = config.sampler.draw(m, draw_seed)?;
                let (zc, zq) = cos_q_matrices(&draw, &x);
                let est_qc = combo_estimates(&zq, &zc, MapCombo::QCos);
                let est_cc = combo_estimates(&zc, &zc, MapCombo::CosCos);
                let mut worst_qc = 0.0f64;
                let mut worst_cc = 0.0f64;
                let mut worst_prox = 0.0f64;
                for ((eq, ec), k) in est_qc.iter().zip(est_cc.iter()).zip(exact.iter()) {
                    worst_qc = worst_qc.max((eq - k).abs());
                    worst_cc = worst_cc.max((ec - k).abs());
                    worst_prox = worst_prox.max((eq - ec).abs());
                }
                Ok((
                    mi,
                    [
                        worst_qc <= config.eps_bar,
                        worst_cc <= config.eps_bar,
                        worst_prox <= config.eps_bar,
                    ],
                ))
            })
            .collect::<Result<_>>()?;
        for (mi, &m) in config.m_list.iter().enumerate() {
            let mut counts = [0usize; 3];
            for (jmi, oks) in &successes {
                if *jmi == mi {
                    for (c, ok) in counts.iter_mut().zip(oks.iter()) {
                        *c += usize::from(*ok);
                    }
                }
            }
            for (ci, curve) in GridCurve::ALL.iter().enumerate() {
                rates.push(GridRateRow {
                    curve: *curve,
                    n,
                    m,
                    success_rate: counts[ci] as f64 / config.trials as f64,
                });
            }
        }
        for curve in GridCurve::ALL {
            let m50 = config
                .m_list
                .iter()
                .copied()
                .find(|&m| {
                    rates
                        .iter()
                        .any(|r| r.curve == curve && r.n == n && r.m == m && r.success_rate >= 0.5)
                });
            transitions.push(GridTransitionRow { curve, n, m50 });
        }
    }
    Ok(SuccessGridResult { rates, transitions })
}

pub fn write_success_grid_csv(
    path: &Path,
    config: &SuccessGridConfig,
    result: &SuccessGridResult,
) -> Result<()> {
    write_csv(
        path,
        &config_hash(config),
        &["curve", "n", "m", "success_rate"],
        result.rates.iter().map(|r| {
            vec![
                r.curve.tag().to_string(),
                r.n.to_string(),
                r.m.to_string(),
                format!("{}", r.success_rate),
            ]
        }),
    )
}

pub fn write_grid_transitions_csv(
    path: &Path,
    config: &SuccessGridConfig,
    result: &SuccessGridResult,
) -> Result<()> {
    write_csv(
        path,
        &config_hash(config),
        &["curve", "n", "m50"],
        result.transitions.iter().map(|r| {
            vec![
                r.curve.tag().to_string(),
                r.n.to_string(),
                r.m50.map(|m| m.to_string()).unwrap_or_default(),
            ]
        }),
    )
}

// ---------------------------------------------------------------------------
// SVM accuracy curves
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmCurvesConfig {
    pub classes: usize,
    pub components: usize,
    pub dim: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub sigma: f64,
    pub r: f64,
    pub m_list: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub spread: MixtureSpread,
    pub solver: SolverOptions,
    /// Also train a linear SVM on the features at every (m, trial); turning
    /// this off keeps only the exact-trained model with estimate inference.
    pub train_on_features_too: bool,
}

impl Default for SvmCurvesConfig {
    fn default() -> Self {
        SvmCurvesConfig {
            classes: 5,
            components: 4,
            dim: 2,
            n_train: 800,
            n_test: 200,
            sigma: 2.0,
            r: 5.0,
            m_list: vec![25, 50, 100, 200, 400, 800, 1600],
            trials: 5,
            seed: 1,
            spread: MixtureSpread::default(),
            solver: SolverOptions::default(),
            train_on_features_too: true,
        }
    }
}

/// Which pipeline produced an accuracy row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainingRegime {
    /// Exact-kernel model, exact-kernel inference (the reference; m = 0).
    Reference,
    /// Exact-kernel model, inference through the combo's estimates.
    Exact,
    /// Feature-trained model, inference through the combo's estimates.
    Features,
}

impl TrainingRegime {
    pub fn tag(self) -> &'static str {
        match self {
            TrainingRegime::Reference => "reference",
            TrainingRegime::Exact => "exact",
            TrainingRegime::Features => "features",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmCurveRow {
    pub regime: TrainingRegime,
    pub m: usize,
    /// "exact" for the reference row, otherwise the combo tag.
    pub combo: String,
    pub trial: usize,
    pub accuracy: f64,
}

/// Accuracy of a model on precomputed estimate matrices: row t of `est` is
/// the kernel row of test point t against the model's support union.
fn accuracy_from_estimates(model: &SvmModel, est: &Array2<f64>, truth: &[i64]) -> Result<f64> {
    let mut correct = 0usize;
    for (t, row) in est.axis_iter(Axis(0)).enumerate() {
        let scores = model.scores_from_kernel_row(row.as_slice().unwrap())?;
        correct += usize::from(model.label_from_scores(&scores) == truth[t]);
    }
    Ok(correct as f64 / truth.len() as f64)
}

/// Slice the rows of `z` belonging to the model's support union, in order.
fn union_rows(z: &Array2<f64>, union: &[usize]) -> Array2<f64> {
    Array2::from_shape_fn((union.len(), z.ncols()), |(p, j)| z[(union[p], j)])
}

/// Synthetic-task accuracy curves: one shared mixture dataset, an exact
/// model trained once, then per (m, trial) fresh draws scoring all four
/// combos against the exact model — and optionally a feature-trained model
/// per draw, scored the same way.
pub fn run_svm_curves(config: &SvmCurvesConfig) -> Result<Vec<SvmCurveRow>> {
    let data = synth_gaussian_mixture(
        config.classes,
        config.components,
        config.dim,
        config.n_train + config.n_test,
        derive_seed(config.seed, 0),
        config.spread,
    )?;
    let (train, test) = data.split_at(config.n_train)?;
    let test_labels = test.labels.clone().unwrap();
    let sampler = FrequencySampler::gaussian_rbf(config.sigma, config.dim)?;
    let exact_model = train_exact(&train, &sampler, config.r, config.solver)?;
    let mut exact_correct = 0usize;
    for i in 0..test.len() {
        exact_correct +=
            usize::from(exact_model.predict_exact(&test.row(i))? == test_labels[i]);
    }
    let mut rows = vec![SvmCurveRow {
        regime: TrainingRegime::Reference,
        m: 0,
        combo: "exact".into(),
        trial: 0,
        accuracy: exact_correct as f64 / test.len() as f64,
    }];
    let jobs: Vec<(usize, usize, usize)> = config
        .m_list
        .iter()
        .enumerate()
        .flat_map(|(mi, &m)| (0..config.trials).map(move |t| (mi, m, t)))
        .collect();
    let job_rows: Vec<Vec<SvmCurveRow>> = jobs
        .par_iter()
        .map(|&(mi, m, trial)| {
            let draw_seed =
                derive_seed(config.seed, 10_000 + (mi * config.trials + trial) as u64);
            let draw = sampler.draw(m, draw_seed)?;
            let (zc_tr, zq_tr) = cos_q_matrices(&draw, &train.rows);
            let (zc_te, zq_te) = cos_q_matrices(&draw, &test.rows);
            let mut out = Vec::new();
            // exact-trained model, estimate-based inference
            let union = exact_model.support_union.clone();
            let zc_sup = union_rows(&zc_tr, &union);
            let zq_sup = union_rows(&zq_tr, &union);
            for combo in MapCombo::ALL {
                let q = query_side(&zc_te, &zq_te, combo);
                let s = support_side(&zc_sup, &zq_sup, combo);
                let est = combo_estimates(q, s, combo);
                out.push(SvmCurveRow {
                    regime: TrainingRegime::Exact,
                    m,
                    combo: combo.tag().to_string(),
                    trial,
                    accuracy: accuracy_from_estimates(&exact_model, &est, &test_labels)?,
                });
            }
            if config.train_on_features_too {
                let embedding_ref = EmbeddingRef {
                    sampler: sampler.clone(),
                    map: PeriodicMap::Cosine { k: 1 },
                    m,
                    seed: draw_seed,
                };
                let feature_model = train_on_features(
                    &zc_tr,
                    train.labels.as_ref().unwrap(),
                    config.r,
                    config.solver,
                    embedding_ref,
                )?;
                let union = feature_model.support_union.clone();
                let zc_sup = union_rows(&zc_tr, &union);
                let zq_sup = union_rows(&zq_tr, &union);
                for combo in MapCombo::ALL {
                    let q = query_side(&zc_te, &zq_te, combo);
                    let s = support_side(&zc_sup, &zq_sup, combo);
                    let est = combo_estimates(q, s, combo);
                    out.push(SvmCurveRow {
                        regime: TrainingRegime::Features,
                        m,
                        combo: combo.tag().to_string(),
                        trial,
                        accuracy: accuracy_from_estimates(&feature_model, &est, &test_labels)?,
                    });
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    for mut chunk in job_rows {
        rows.append(&mut chunk);
    }
    rows.sort_by(|a, b| {
        (a.regime.tag(), a.m, &a.combo, a.trial).cmp(&(b.regime.tag(), b.m, &b.combo, b.trial))
    });
    Ok(rows)
}

/// Median accuracy over trials for one (regime, m, combo) cell.
pub fn median_accuracy(
    rows: &[SvmCurveRow],
    regime: TrainingRegime,
    m: usize,
    combo: &str,
) -> Result<f64> {
    let accs: Vec<f64> = rows
        .iter()
        .filter(|r| r.regime == regime && r.m == m && r.combo == combo)
        .map(|r| r.accuracy)
        .collect();
    if accs.is_empty() {
        return Err(ArpfError::DegenerateData(format!(
            "no rows for regime {}, m = {m}, combo {combo}",
            regime.tag()
        )));
    }
    Ok(median(&accs))
}

pub fn write_svm_curves_csv(
    path: &Path,
    config: &SvmCurvesConfig,
    rows: &[SvmCurveRow],
) -> Result<()> {
    write_csv(
        path,
        &config_hash(config),
        &["training", "m", "combo", "trial", "accuracy"],
        rows.iter().map(|r| {
            vec![
                r.regime.tag().to_string(),
                r.m.to_string(),
                r.combo.clone(),
                r.trial.to_string(),
                format!("{}", r.accuracy),
            ]
        }),
    )
}
