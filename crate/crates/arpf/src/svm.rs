//! One-vs-rest soft-margin SVMs over exact kernels or randomized features,
//! with prediction under any query/support feature combination.
//!
//! Training solves the kernel dual by coordinate descent with the bias
//! folded in through a `K + 1` kernel augmentation (the bias becomes
//! `Σ αᵢyᵢ`). A model trained once — exactly or on features — can then be
//! evaluated with full-precision or quantized features on either side, since
//! every combination estimates the same kernel after its fixed rescaling
//! (the fully quantized pair estimates its own distorted kernel instead,
//! which is what degrades its accuracy at small feature counts).

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::dataset::Dataset;
use crate::error::{ArpfError, Result};
use crate::features::{
    pack_bits, rescaled_kernel_estimate, FeatureEmbedding, FeaturePayload, FeatureVector,
    MapCombo,
};
use crate::periodic::PeriodicMap;
use crate::sampling::{FrequencySampler, RandomDraw};

/// Everything needed to regenerate an embedding: the draw is a pure function
/// of `(sampler, m, seed)`, so only the recipe ships with a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingRef {
    pub sampler: FrequencySampler,
    pub map: PeriodicMap,
    pub m: usize,
    pub seed: u64,
}

impl EmbeddingRef {
    pub fn make_draw(&self) -> Result<RandomDraw> {
        self.sampler.draw(self.m, self.seed)
    }

    pub fn make_embedding(&self) -> Result<FeatureEmbedding> {
        Ok(FeatureEmbedding::new(self.make_draw()?, self.map.clone()))
    }

    /// Same generator inputs and feature count (the compatibility check used
    /// before serving a database against a model).
    pub fn matches(&self, other: &EmbeddingRef) -> bool {
        self.sampler == other.sampler && self.m == other.m && self.seed == other.seed
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum TrainingKind {
    /// Dual solved against the sampler's analytic kernel on raw points.
    ExactKernel { sampler: FrequencySampler },
    /// Dual solved against `2⟨φᵢ, φⱼ⟩` on precomputed cosine features.
    LinearOnFeatures { embedding: EmbeddingRef },
}

/// One binary one-vs-rest task's result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassModel {
    pub class: i64,
    /// Indices into the original training set with strictly positive duals.
    pub support_indices: Vec<usize>,
    /// `αᵢ yᵢ` aligned with `support_indices`.
    pub alpha_y: Vec<f64>,
    pub bias: f64,
    /// Duality gap the solver achieved.
    pub gap: f64,
    pub epochs: usize,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SolverOptions {
    pub gap_tol: f64,
    pub max_epochs: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            gap_tol: 1e-3,
            max_epochs: 10_000,
        }
    }
}

/// Cosine features of the support rows plus the sign-quantized view derived
/// from them, so any combo can pick its support-side payload.
#[derive(Debug, Clone)]
pub struct SupportFeatures {
    pub cos: Vec<FeatureVector>,
    pub q: Vec<FeatureVector>,
}

impl SupportFeatures {
    /// Wrap dense cosine features; the quantized view reuses their signs
    /// (`cos(t) ≥ 0` exactly when the scaled entry is `≥ 0`).
    pub fn from_cos(cos: Vec<FeatureVector>) -> Result<Self> {
        let mut q = Vec::with_capacity(cos.len());
        for v in &cos {
            match &v.payload {
                FeaturePayload::DenseReal(entries) => {
                    let signs: Vec<f64> = entries
                        .iter()
                        .map(|&e| if e >= 0.0 { 1.0 } else { -1.0 })
                        .collect();
                    q.push(pack_bits(&signs)?);
                }
                _ => {
                    return Err(ArpfError::PayloadMismatch(
                        "support features must be dense real (cosine) vectors".into(),
                    ))
                }
            }
        }
        Ok(SupportFeatures { cos, q })
    }

    /// Embed raw support rows with a cosine embedding.
    pub fn embed_rows(embedding: &FeatureEmbedding, rows: &Array2<f64>) -> Result<Self> {
        if embedding.map != (PeriodicMap::Cosine { k: 1 }) {
            return Err(ArpfError::PayloadMismatch(
                "support features are built from the cosine map".into(),
            ));
        }
        let row_vecs: Vec<Vec<f64>> = rows.rows().into_iter().map(|r| r.to_vec()).collect();
        Self::from_cos(embedding.embed_batch(&row_vecs)?)
    }

    pub fn len(&self) -> usize {
        self.cos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cos.is_empty()
    }

    fn side_for(&self, combo: MapCombo) -> &[FeatureVector] {
        match combo {
            MapCombo::CosCos | MapCombo::QCos => &self.cos,
            MapCombo::CosQ | MapCombo::QQ => &self.q,
        }
    }
}

/// A trained one-vs-rest classifier.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SvmModel {
    /// Sorted distinct class labels; argmax ties resolve to the earliest.
    pub classes: Vec<i64>,
    pub per_class: Vec<ClassModel>,
    pub training_kind: TrainingKind,
    pub r: f64,
    /// Sorted union of all classes' support indices (original numbering).
    pub support_union: Vec<usize>,
    /// Raw support rows aligned with `support_union`; present when training
    /// saw raw points (exact-kernel training).
    pub support_rows: Option<Array2<f64>>,
    /// Attached for exact-kernel models that will later be served with
    /// feature-based inference.
    pub inference_embedding: Option<EmbeddingRef>,
    /// Cosine features of the union rows; not serialized with the JSON model
    /// (they live in the sidecar feature file) — reattach after loading.
    #[serde(skip)]
    pub support_features: Option<SupportFeatures>,
}

/// Binary decision rule: a score of exactly zero is the positive class.
pub fn binary_label(score: f64) -> f64 {
    if score >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Dual coordinate descent for `max_α Σα − ½ αᵀQα`, `0 ≤ α ≤ R`, with
/// `Q = diag(y)·(K+1)·diag(y)`; cyclic sweeps, stopping on the duality gap.
fn dual_cd(
    kb: &Array2<f64>,
    y: &[f64],
    r: f64,
    options: SolverOptions,
) -> (Vec<f64>, f64, usize) {
    let n = y.len();
    let mut alpha = vec![0.0f64; n];
    // o[i] = Σ_j α_j y_j Kb[i, j], maintained incrementally
    let mut o = vec![0.0f64; n];
    let mut gap = f64::INFINITY;
    let mut epochs = 0;
    for epoch in 0..options.max_epochs {
        for i in 0..n {
            let g = 1.0 - y[i] * o[i];
            if (alpha[i] <= 0.0 && g <= 0.0) || (alpha[i] >= r && g >= 0.0) {
                continue;
            }
            let updated = (alpha[i] + g / kb[(i, i)]).clamp(0.0, r);
            let delta = updated - alpha[i];
            if delta != 0.0 {
                let yi_delta = delta * y[i];
                let row = kb.row(i);
                for (oj, &k) in o.iter_mut().zip(row.iter()) {
                    *oj += yi_delta * k;
                }
                alpha[i] = updated;
            }
        }
        epochs = epoch + 1;
        let mut a_q_a = 0.0;
        let mut slack = 0.0;
        let mut dual_linear = 0.0;
        for i in 0..n {
            a_q_a += alpha[i] * y[i] * o[i];
            slack += (1.0 - y[i] * o[i]).max(0.0);
            dual_linear += alpha[i];
        }
        gap = a_q_a + r * slack - dual_linear;
        if gap <= options.gap_tol {
            break;
        }
    }
    (alpha, gap, epochs)
}

/// Solve every one-vs-rest task against a shared augmented kernel matrix.
fn train_one_vs_rest(
    kb: &Array2<f64>,
    labels: &[i64],
    r: f64,
    options: SolverOptions,
) -> Result<(Vec<i64>, Vec<ClassModel>)> {
    let mut classes: Vec<i64> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(ArpfError::DegenerateData(format!(
            "training needs at least two classes, got {:?}",
            classes
        )));
    }
    if !(r > 0.0) || !r.is_finite() {
        return Err(ArpfError::InvalidParameter(format!(
            "regularization bound must be positive and finite, got {r}"
        )));
    }
    let mut per_class = Vec::with_capacity(classes.len());
    for &c in &classes {
        let y: Vec<f64> = labels
            .iter()
            .map(|&l| if l == c { 1.0 } else { -1.0 })
            .collect();
        let (alpha, gap, epochs) = dual_cd(kb, &y, r, options);
        let bias: f64 = alpha.iter().zip(&y).map(|(a, yi)| a * yi).sum();
        let mut support_indices = Vec::new();
        let mut alpha_y = Vec::new();
        for i in 0..alpha.len() {
            if alpha[i] > 0.0 {
                support_indices.push(i);
                alpha_y.push(alpha[i] * y[i]);
            }
        }
        if support_indices.is_empty() {
            return Err(ArpfError::DegenerateData(format!(
                "class {c} finished training with an empty support set"
            )));
        }
        per_class.push(ClassModel {
            class: c,
            support_indices,
            alpha_y,
            bias,
            gap,
            epochs,
        });
    }
    Ok((classes, per_class))
}

fn support_union(per_class: &[ClassModel]) -> Vec<usize> {
    let mut union: Vec<usize> = per_class
        .iter()
        .flat_map(|cm| cm.support_indices.iter().copied())
        .collect();
    union.sort_unstable();
    union.dedup();
    union
}

/// Train against the sampler's analytic kernel on raw labeled points.
pub fn train_exact(
    data: &Dataset,
    sampler: &FrequencySampler,
    r: f64,
    options: SolverOptions,
) -> Result<SvmModel> {
    let labels = data
        .labels
        .as_ref()
        .ok_or_else(|| ArpfError::DegenerateData("training data has no labels".into()))?;
    if data.dim() != sampler.dim {
        return Err(ArpfError::DimensionMismatch {
            expected: sampler.dim,
            got: data.dim(),
        });
    }
    let n = data.len();
    let mut kb = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        let xi = data.rows.row(i);
        kb[(i, i)] = 2.0; // κ(x, x) = 1 plus the bias augmentation
        for j in (i + 1)..n {
            let xj = data.rows.row(j);
            let diff: Vec<f64> = xi.iter().zip(xj.iter()).map(|(a, b)| a - b).collect();
            let k = sampler.kernel_profile(sampler.norm(&diff)) + 1.0;
            kb[(i, j)] = k;
            kb[(j, i)] = k;
        }
    }
    let (classes, per_class) = train_one_vs_rest(&kb, labels, r, options)?;
    let union = support_union(&per_class);
    let rows = Array2::from_shape_fn((union.len(), data.dim()), |(p, j)| {
        data.rows[(union[p], j)]
    });
    Ok(SvmModel {
        classes,
        per_class,
        training_kind: TrainingKind::ExactKernel {
            sampler: sampler.clone(),
        },
        r,
        support_union: union,
        support_rows: Some(rows),
        inference_embedding: None,
        support_features: None,
    })
}

/// Train a linear SVM on dense cosine features (rows of `features`, one per
/// point, `1/√m` scale already applied), i.e. the kernel `2⟨φᵢ, φⱼ⟩`.
pub fn train_on_features(
    features: &Array2<f64>,
    labels: &[i64],
    r: f64,
    options: SolverOptions,
    embedding: EmbeddingRef,
) -> Result<SvmModel> {
    if features.nrows() != labels.len() {
        return Err(ArpfError::LengthMismatch {
            left: features.nrows(),
            right: labels.len(),
        });
    }
    if features.ncols() != embedding.m {
        return Err(ArpfError::EmbeddingMismatch(format!(
            "feature width {} does not match the embedding's m = {}",
            features.ncols(),
            embedding.m
        )));
    }
    // Kb = 2 Z Zᵀ + 1
    let mut kb = features.dot(&features.t());
    kb.mapv_inplace(|v| 2.0 * v + 1.0);
    let (classes, per_class) = train_one_vs_rest(&kb, labels, r, options)?;
    let union = support_union(&per_class);
    let m = features.ncols();
    let scale = 1.0 / (m as f64).sqrt();
    let cos: Vec<FeatureVector> = union
        .iter()
        .map(|&i| FeatureVector {
            payload: FeaturePayload::DenseReal(features.row(i).to_vec()),
            scale,
        })
        .collect();
    Ok(SvmModel {
        classes,
        per_class,
        training_kind: TrainingKind::LinearOnFeatures {
            embedding: embedding.clone(),
        },
        r,
        support_union: union,
        support_rows: None,
        inference_embedding: Some(embedding),
        support_features: Some(SupportFeatures::from_cos(cos)?),
    })
}

impl SvmModel {
    /// Position of an original training index inside the support union.
    fn union_position(&self, original: usize) -> usize {
        self.support_union
            .binary_search(&original)
            .expect("support index missing from union")
    }

    /// The embedding recipe this model should be evaluated with, if any.
    pub fn embedding_ref(&self) -> Option<&EmbeddingRef> {
        match &self.training_kind {
            TrainingKind::LinearOnFeatures { embedding } => Some(embedding),
            TrainingKind::ExactKernel { .. } => self.inference_embedding.as_ref(),
        }
    }

    /// Per-class scores from precomputed kernel values against the support
    /// union (one value per union member, in union order).
    pub fn scores_from_kernel_row(&self, kernel_row: &[f64]) -> Result<Vec<f64>> {
        if kernel_row.len() != self.support_union.len() {
            return Err(ArpfError::LengthMismatch {
                left: kernel_row.len(),
                right: self.support_union.len(),
            });
        }
        Ok(self
            .per_class
            .iter()
            .map(|cm| {
                let mut s = cm.bias;
                for (idx, ay) in cm.support_indices.iter().zip(&cm.alpha_y) {
                    s += ay * kernel_row[self.union_position(*idx)];
                }
                s
            })
            .collect())
    }

    /// Argmax over per-class scores; ties go to the lowest class index.
    pub fn label_from_scores(&self, scores: &[f64]) -> i64 {
        let mut best = 0usize;
        for (i, &s) in scores.iter().enumerate() {
            if s > scores[best] {
                best = i;
            }
        }
        self.classes[best]
    }

    /// Classify a raw point through the exact analytic kernel.
    pub fn predict_exact(&self, x: &[f64]) -> Result<i64> {
        let TrainingKind::ExactKernel { sampler } = &self.training_kind else {
            return Err(ArpfError::InvalidParameter(
                "exact prediction needs an exact-kernel model".into(),
            ));
        };
        let rows = self.support_rows.as_ref().ok_or_else(|| {
            ArpfError::DegenerateData("model carries no support rows".into())
        })?;
        if x.len() != rows.ncols() {
            return Err(ArpfError::DimensionMismatch {
                expected: rows.ncols(),
                got: x.len(),
            });
        }
        let kernel_row: Vec<f64> = rows
            .rows()
            .into_iter()
            .map(|row| {
                let diff: Vec<f64> = row.iter().zip(x).map(|(a, b)| a - b).collect();
                sampler.kernel_profile(sampler.norm(&diff))
            })
            .collect();
        let scores = self.scores_from_kernel_row(&kernel_row)?;
        Ok(self.label_from_scores(&scores))
    }

    /// Classify from a query feature vector and explicit support features
    /// under a combo; the support side must align with the support union.
    pub fn predict_with_features(
        &self,
        query: &FeatureVector,
        support: &SupportFeatures,
        combo: MapCombo,
    ) -> Result<i64> {
        if support.len() != self.support_union.len() {
            return Err(ArpfError::LengthMismatch {
                left: support.len(),
                right: self.support_union.len(),
            });
        }
        let side = support.side_for(combo);
        let kernel_row: Vec<f64> = side
            .iter()
            .map(|sv| rescaled_kernel_estimate(query, sv, combo))
            .collect::<Result<_>>()?;
        let scores = self.scores_from_kernel_row(&kernel_row)?;
        Ok(self.label_from_scores(&scores))
    }

    /// Classify using the support features attached at training time.
    pub fn predict_with_attached(
        &self,
        query: &FeatureVector,
        combo: MapCombo,
    ) -> Result<i64> {
        let support = self.support_features.as_ref().ok_or_else(|| {
            ArpfError::DegenerateData(
                "model has no attached support features; attach or pass them explicitly".into(),
            )
        })?;
        self.predict_with_features(query, support, combo)
    }

    /// Attach (or replace) support features, validating alignment.
    pub fn attach_support_features(&mut self, support: SupportFeatures) -> Result<()> {
        if support.len() != self.support_union.len() {
            return Err(ArpfError::LengthMismatch {
                left: support.len(),
                right: self.support_union.len(),
            });
        }
        if let Some(m) = self.embedding_ref().map(|e| e.m) {
            if let Some(first) = support.cos.first() {
                if first.len() != m {
                    return Err(ArpfError::EmbeddingMismatch(format!(
                        "support features have m = {}, model expects {}",
                        first.len(),
                        m
                    )));
                }
            }
        }
        self.support_features = Some(support);
        Ok(())
    }

    /// Rebuild support features from the model's embedding recipe and raw
    /// support rows.
    pub fn rebuild_support_features(&mut self) -> Result<()> {
        let embedding = self
            .embedding_ref()
            .ok_or_else(|| {
                ArpfError::DegenerateData("model has no embedding recipe".into())
            })?
            .clone();
        let rows = self
            .support_rows
            .as_ref()
            .ok_or_else(|| ArpfError::DegenerateData("model carries no support rows".into()))?;
        let cos_embedding = FeatureEmbedding::new(
            embedding.make_draw()?,
            PeriodicMap::Cosine { k: 1 },
        );
        let support = SupportFeatures::embed_rows(&cos_embedding, rows)?;
        self.attach_support_features(support)
    }

    pub fn worst_gap(&self) -> f64 {
        self.per_class.iter().map(|c| c.gap).fold(0.0, f64::max)
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        let file = std::io::BufWriter::new(std::fs::File::create(path)?);
        serde_json::to_writer_pretty(file, self)?;
        Ok(())
    }

    pub fn load_json(path: &Path) -> Result<SvmModel> {
        let file = std::io::BufReader::new(std::fs::File::open(path)?);
        let model: SvmModel = serde_json::from_reader(file)?;
        Ok(model)
    }
}

/// Which training regime a cross-validation run tunes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum CvMode {
    Exact,
    Features { m: usize },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CvConfig {
    pub folds: usize,
    pub sigmas: Vec<f64>,
    pub rs: Vec<f64>,
    pub mode: CvMode,
    pub seed: u64,
    pub solver: SolverOptions,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CvCell {
    pub sigma: f64,
    pub r: f64,
    pub mean_accuracy: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CvReport {
    pub mode: CvMode,
    pub folds: usize,
    pub best_sigma: f64,
    pub best_r: f64,
    pub best_accuracy: f64,
    pub table: Vec<CvCell>,
}

/// Deterministic k-fold cross-validation over a (σ, R) grid for one training
/// regime. Folds are taken by row stride (row i belongs to fold i mod k), so
/// shuffled datasets give balanced folds.
pub fn svm_cross_validate(data: &Dataset, cfg: &CvConfig) -> Result<CvReport> {
    if cfg.folds < 2 || cfg.folds > data.len() {
        return Err(ArpfError::InvalidParameter(format!(
            "fold count must be in [2, n], got {}",
            cfg.folds
        )));
    }
    if cfg.sigmas.is_empty() || cfg.rs.is_empty() {
        return Err(ArpfError::InvalidParameter(
            "cross-validation needs nonempty σ and R grids".into(),
        ));
    }
    let labels = data
        .labels
        .as_ref()
        .ok_or_else(|| ArpfError::DegenerateData("cross-validation needs labels".into()))?;
    let n = data.len();
    let d = data.dim();
    let mut table = Vec::new();
    let mut best: Option<CvCell> = None;
    for &sigma in &cfg.sigmas {
        for &r in &cfg.rs {
            let mut correct = 0usize;
            let mut total = 0usize;
            for fold in 0..cfg.folds {
                let train_idx: Vec<usize> = (0..n).filter(|i| i % cfg.folds != fold).collect();
                let test_idx: Vec<usize> = (0..n).filter(|i| i % cfg.folds == fold).collect();
                let train_rows = Array2::from_shape_fn((train_idx.len(), d), |(p, j)| {
                    data.rows[(train_idx[p], j)]
                });
                let train_labels: Vec<i64> = train_idx.iter().map(|&i| labels[i]).collect();
                let train_set = Dataset::new(train_rows, Some(train_labels))?;
                match &cfg.mode {
                    CvMode::Exact => {
                        let sampler = FrequencySampler::gaussian_rbf(sigma, d)?;
                        let model = train_exact(&train_set, &sampler, r, cfg.solver)?;
                        for &i in &test_idx {
                            let predicted = model.predict_exact(&data.row(i))?;
                            correct += usize::from(predicted == labels[i]);
                            total += 1;
                        }
                    }
                    CvMode::Features { m } => {
                        let sampler = FrequencySampler::gaussian_rbf(sigma, d)?;
                        let embedding_ref = EmbeddingRef {
                            sampler: sampler.clone(),
                            map: PeriodicMap::Cosine { k: 1 },
                            m: *m,
                            seed: cfg.seed,
                        };
                        let draw = embedding_ref.make_draw()?;
                        let train_feats = crate::features::embed_real_matrix(
                            &draw,
                            &PeriodicMap::Cosine { k: 1 },
                            &train_set.rows,
                        )?;
                        let model = train_on_features(
                            &train_feats,
                            train_set.labels.as_ref().unwrap(),
                            r,
                            cfg.solver,
                            embedding_ref,
                        )?;
                        let embedding =
                            FeatureEmbedding::new(draw, PeriodicMap::Cosine { k: 1 });
                        for &i in &test_idx {
                            let query = embedding.embed(&data.row(i))?;
                            let predicted =
                                model.predict_with_attached(&query, MapCombo::CosCos)?;
                            correct += usize::from(predicted == labels[i]);
                            total += 1;
                        }
                    }
                }
            }
            let cell = CvCell {
                sigma,
                r,
                mean_accuracy: correct as f64 / total as f64,
            };
            let better = match &best {
                None => true,
                Some(b) => cell.mean_accuracy > b.mean_accuracy,
            };
            if better {
                best = Some(cell.clone());
            }
            table.push(cell);
        }
    }
    let best = best.unwrap();
    Ok(CvReport {
        mode: cfg.mode.clone(),
        folds: cfg.folds,
        best_sigma: best.sigma,
        best_r: best.r,
        best_accuracy: best.mean_accuracy,
        table,
    })
}
