//! Cross-validation folds, classification metrics, the baseline classifier,
//! and the robustness matrix runner.
//!
//! The classifier is a deterministic stand-in for the transfer-learned CNN:
//! images are mean-pooled 150x150 -> 30x30, standardized by train-set
//! statistics, and classified by k-nearest-neighbor voting over the training
//! vectors plus the three class centroids (the centroids act as prototypes,
//! nudging votes toward class centers). k is selected from {1, 5, 15} by
//! validation macro-F1, ties toward larger k; exact vote ties resolve to the
//! lowest class index (AF < Normal < STD).

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::types::{ImageKind, Label, TransformImage, Variant, IMAGE_SIZE, LABELS};

pub const FOLD_COUNT: usize = 5;
const VALIDATION_FRACTION: f64 = 0.05;
const TRAIN_FRACTION: f64 = 0.75;
const MIN_PER_CLASS: usize = 20;
pub const K_GRID: [usize; 3] = [1, 5, 15];

/// One fold's split, ids in deterministic order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<String>,
    pub validation: Vec<String>,
    pub test: Vec<String>,
}

/// Five stratified folds; test sets partition the id universe.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FoldPlan {
    pub seed: u64,
    pub folds: Vec<Fold>,
}

impl FoldPlan {
    pub fn all_ids(&self) -> BTreeSet<&str> {
        self.folds
            .iter()
            .flat_map(|f| f.test.iter().map(|s| s.as_str()))
            .collect()
    }
}

/// Stratified 5-fold split: per class, a seeded shuffle is cut into five
/// test blocks; validation is carved from the rest, sized so train stays
/// within one record of its 75% share.
pub fn make_folds(ids_with_labels: &[(String, Label)], seed: u64) -> Result<FoldPlan> {
    let mut by_class: BTreeMap<Label, Vec<&str>> = BTreeMap::new();
    for (id, label) in ids_with_labels {
        by_class.entry(*label).or_default().push(id);
    }
    for label in LABELS {
        let n = by_class.get(&label).map(|v| v.len()).unwrap_or(0);
        if n < MIN_PER_CLASS {
            return Err(Error::TooFewRecords {
                label: label.to_string(),
                got: n,
                need: MIN_PER_CLASS,
            });
        }
    }

    let mut shuffled: BTreeMap<Label, Vec<&str>> = BTreeMap::new();
    for (label, mut ids) in by_class {
        let mut rng = Rng::substream(seed, label.as_str());
        rng.shuffle(&mut ids);
        shuffled.insert(label, ids);
    }

    // stagger each class's remainder blocks round-robin so the fold test
    // sets come out as equal as possible overall
    let mut block_sizes: BTreeMap<Label, [usize; FOLD_COUNT]> = BTreeMap::new();
    let mut extra_cursor = 0usize;
    for label in LABELS {
        let n = shuffled[&label].len();
        let base = n / FOLD_COUNT;
        let extra = n % FOLD_COUNT;
        let mut sizes = [base; FOLD_COUNT];
        for j in 0..extra {
            sizes[(extra_cursor + j) % FOLD_COUNT] += 1;
        }
        extra_cursor += extra;
        block_sizes.insert(label, sizes);
    }

    let mut folds = Vec::with_capacity(FOLD_COUNT);
    for fold_idx in 0..FOLD_COUNT {
        let mut fold = Fold {
            train: Vec::new(),
            validation: Vec::new(),
            test: Vec::new(),
        };
        for label in LABELS {
            let ids = &shuffled[&label];
            let n = ids.len();
            let sizes = &block_sizes[&label];
            let start: usize = sizes[..fold_idx].iter().sum();
            let end = start + sizes[fold_idx];
            fold.test.extend(ids[start..end].iter().map(|s| s.to_string()));

            // the rest, cyclically after the test block
            let rest: Vec<&str> = ids[end..].iter().chain(ids[..start].iter()).copied().collect();
            let val_n = validation_size(n, end - start);
            fold.validation.extend(rest[..val_n].iter().map(|s| s.to_string()));
            fold.train.extend(rest[val_n..].iter().map(|s| s.to_string()));
        }
        folds.push(fold);
    }
    Ok(FoldPlan { seed, folds })
}

/// Validation count for one class: round(5% of n), nudged so the train share
/// stays within one record of 75% of n.
fn validation_size(n: usize, test_n: usize) -> usize {
    let mut val = (VALIDATION_FRACTION * n as f64).round() as usize;
    let train_target = TRAIN_FRACTION * n as f64;
    loop {
        let train = n - test_n - val;
        if train as f64 - train_target > 1.0 {
            val += 1;
        } else if train_target - train as f64 > 1.0 && val > 1 {
            val -= 1;
        } else {
            return val.max(1);
        }
    }
}

/// 3x3 confusion matrix, rows = true class, columns = predicted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionMatrix {
    pub counts: [[u64; 3]; 3],
}

impl ConfusionMatrix {
    pub fn from_pairs(pairs: &[(Label, Label)]) -> Self {
        let mut cm = ConfusionMatrix::default();
        for &(truth, predicted) in pairs {
            cm.counts[truth.index()][predicted.index()] += 1;
        }
        cm
    }

    pub fn row_sum(&self, class: usize) -> u64 {
        self.counts[class].iter().sum()
    }

    pub fn col_sum(&self, class: usize) -> u64 {
        (0..3).map(|r| self.counts[r][class]).sum()
    }
}

/// Precision, recall, F1 for one class; 0/0 is defined as 0 and flagged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// true when any of the ratios was 0/0
    pub degenerate: bool,
}

pub fn per_class_metrics(cm: &ConfusionMatrix) -> [ClassMetrics; 3] {
    std::array::from_fn(|c| {
        let tp = cm.counts[c][c] as f64;
        let col = cm.col_sum(c) as f64;
        let row = cm.row_sum(c) as f64;
        let mut degenerate = false;
        let precision = if col > 0.0 {
            tp / col
        } else {
            degenerate = true;
            0.0
        };
        let recall = if row > 0.0 {
            tp / row
        } else {
            degenerate = true;
            0.0
        };
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            degenerate = true;
            0.0
        };
        ClassMetrics {
            precision,
            recall,
            f1,
            degenerate,
        }
    })
}

/// Arithmetic mean of the three per-class F1 scores.
pub fn macro_f1(cm: &ConfusionMatrix) -> f64 {
    let metrics = per_class_metrics(cm);
    metrics.iter().map(|m| m.f1).sum::<f64>() / 3.0
}

const POOL: usize = 5;
const FEATURE_SIDE: usize = IMAGE_SIZE / POOL;
pub const FEATURE_DIM: usize = FEATURE_SIDE * FEATURE_SIDE;

/// 5x5 mean pooling down to a 900-dimensional feature vector.
pub fn image_features(image: &TransformImage) -> Vec<f64> {
    let mut out = Vec::with_capacity(FEATURE_DIM);
    for br in 0..FEATURE_SIDE {
        for bc in 0..FEATURE_SIDE {
            let mut acc = 0.0;
            for r in 0..POOL {
                for c in 0..POOL {
                    acc += image.get(br * POOL + r, bc * POOL + c);
                }
            }
            out.push(acc / (POOL * POOL) as f64);
        }
    }
    out
}

/// Deterministic nearest-centroid / k-NN hybrid.
///
/// The class score blends the local k-NN vote share with cosine similarity
/// to the class centroid. The centroid term regularizes: averaged over a
/// training class, per-record noise largely cancels, so a model trained on
/// noisy images still carries a denoised prototype of each class.
#[derive(Debug, Clone)]
pub struct ClassifierModel {
    mean: Vec<f64>,
    std: Vec<f64>,
    /// standardized training vectors
    pool: Vec<Vec<f64>>,
    pool_labels: Vec<Label>,
    centroids: [Vec<f64>; 3],
    pub chosen_k: usize,
    pub degenerate_features: bool,
}

impl ClassifierModel {
    fn standardize(&self, features: &[f64]) -> Vec<f64> {
        features
            .iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }

    /// Indices of the pool sorted by cosine distance to `vector`, ties by
    /// index. Cosine ranks by direction in standardized feature space, which
    /// keeps the ranking stable when noise inflates or deflates magnitudes.
    fn neighbor_order(&self, vector: &[f64]) -> Vec<usize> {
        let vn = norm(vector);
        let mut order: Vec<(f64, usize)> = self
            .pool
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let dot: f64 = p.iter().zip(vector).map(|(a, b)| a * b).sum();
                (1.0 - dot / (norm(p) * vn), i)
            })
            .collect();
        order.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        order.into_iter().map(|(_, i)| i).collect()
    }

    /// Blended class scores; exact ties resolve to the lowest class index.
    fn classify(&self, vector: &[f64], order: &[usize], k: usize) -> Label {
        let mut votes = [0.0f64; 3];
        let take = k.min(order.len());
        for &idx in order.iter().take(take) {
            votes[self.pool_labels[idx].index()] += 1.0 / take as f64;
        }
        let vn = norm(vector);
        let mut best = 0usize;
        let mut best_score = f64::NEG_INFINITY;
        for c in 0..3 {
            let centroid = &self.centroids[c];
            let dot: f64 = centroid.iter().zip(vector).map(|(a, b)| a * b).sum();
            let score = votes[c] + dot / (norm(centroid) * vn);
            if score > best_score {
                best_score = score;
                best = c;
            }
        }
        Label::from_index(best)
    }

    pub fn predict(&self, image: &TransformImage) -> Label {
        self.predict_features(&image_features(image))
    }

    pub fn predict_features(&self, features: &[f64]) -> Label {
        let v = self.standardize(features);
        let order = self.neighbor_order(&v);
        self.classify(&v, &order, self.chosen_k)
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12)
}

/// Fit the baseline classifier; k is chosen on the validation set.
pub fn train_baseline(
    train_images: &[TransformImage],
    train_labels: &[Label],
    val_images: &[TransformImage],
    val_labels: &[Label],
) -> Result<ClassifierModel> {
    let train_features: Vec<Vec<f64>> = train_images.iter().map(image_features).collect();
    let val_features: Vec<Vec<f64>> = val_images.iter().map(image_features).collect();
    train_baseline_features(&train_features, train_labels, &val_features, val_labels)
}

/// Same as `train_baseline` on precomputed feature vectors.
pub fn train_baseline_features(
    train_features: &[Vec<f64>],
    train_labels: &[Label],
    val_features: &[Vec<f64>],
    val_labels: &[Label],
) -> Result<ClassifierModel> {
    if train_features.is_empty() || train_features.len() != train_labels.len() {
        return Err(Error::InvalidArgument(
            "training features and labels must be nonempty and aligned".into(),
        ));
    }
    for label in LABELS {
        if !train_labels.contains(&label) {
            return Err(Error::MissingClass(label.to_string()));
        }
    }

    let dim = train_features[0].len();
    let n = train_features.len() as f64;
    let mut mean = vec![0.0; dim];
    for f in train_features {
        for (m, v) in mean.iter_mut().zip(f) {
            *m += v;
        }
    }
    for m in mean.iter_mut() {
        *m /= n;
    }
    let mut var = vec![0.0; dim];
    for f in train_features {
        for ((s, v), m) in var.iter_mut().zip(f).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    let degenerate_features = var.iter().all(|v| *v / n < 1e-24);
    let std: Vec<f64> = var
        .iter()
        .map(|v| {
            let s = (v / n).sqrt();
            if s > 1e-12 {
                s
            } else {
                1.0
            }
        })
        .collect();

    let standardized: Vec<Vec<f64>> = train_features
        .iter()
        .map(|f| {
            f.iter()
                .zip(mean.iter().zip(&std))
                .map(|(v, (m, s))| (v - m) / s)
                .collect()
        })
        .collect();

    let pool = standardized;
    let pool_labels = train_labels.to_vec();
    let centroids: [Vec<f64>; 3] = std::array::from_fn(|class| {
        let label = Label::from_index(class);
        let members: Vec<&Vec<f64>> = pool
            .iter()
            .zip(&pool_labels)
            .filter(|(_, l)| **l == label)
            .map(|(f, _)| f)
            .collect();
        let mut centroid = vec![0.0; dim];
        for f in &members {
            for (c, v) in centroid.iter_mut().zip(f.iter()) {
                *c += v;
            }
        }
        for c in centroid.iter_mut() {
            *c /= members.len() as f64;
        }
        centroid
    });

    let mut model = ClassifierModel {
        mean,
        std,
        pool,
        pool_labels,
        centroids,
        chosen_k: K_GRID[0],
        degenerate_features,
    };

    // pick k by validation macro-F1, one neighbor ordering per sample
    let mut best_k = K_GRID[0];
    let mut best_f1 = f64::NEG_INFINITY;
    let prepared: Vec<(Vec<f64>, Vec<usize>)> = val_features
        .iter()
        .map(|f| {
            let v = model.standardize(f);
            let order = model.neighbor_order(&v);
            (v, order)
        })
        .collect();
    for &k in &K_GRID {
        let pairs: Vec<(Label, Label)> = prepared
            .iter()
            .zip(val_labels)
            .map(|((v, order), truth)| (*truth, model.classify(v, order, k)))
            .collect();
        let f1 = macro_f1(&ConfusionMatrix::from_pairs(&pairs));
        if f1 >= best_f1 {
            best_f1 = f1;
            best_k = k;
        }
    }
    model.chosen_k = best_k;
    Ok(model)
}

/// The three train/test variations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvalMode {
    /// train, validate, and test within each variant
    Same,
    /// train and validate on clean, test on every variant
    TrainClean,
    /// train and validate on the all-noise variant, test on every variant
    TrainAll,
}

impl EvalMode {
    pub fn as_str(self) -> &'static str {
        match self {
            EvalMode::Same => "same",
            EvalMode::TrainClean => "train-clean",
            EvalMode::TrainAll => "train-all",
        }
    }

    pub fn parse(s: &str) -> Result<EvalMode> {
        match s {
            "same" => Ok(EvalMode::Same),
            "train-clean" => Ok(EvalMode::TrainClean),
            "train-all" => Ok(EvalMode::TrainAll),
            other => Err(Error::InvalidArgument(format!("unknown mode `{other}`"))),
        }
    }
}

/// All images of one (variant, kind) dataset, keyed by record id.
#[derive(Debug, Clone)]
pub struct ImageSet {
    pub variant: Variant,
    pub kind: ImageKind,
    pub images: BTreeMap<String, TransformImage>,
}

/// One robustness-matrix cell aggregated over folds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportCell {
    pub train_variant: Variant,
    pub test_variant: Variant,
    pub kind: ImageKind,
    pub macro_f1_mean: f64,
    pub macro_f1_std: f64,
    pub per_class_f1_mean: [f64; 3],
    pub per_class_f1_std: [f64; 3],
    pub per_fold_macro_f1: Vec<f64>,
    pub chosen_k_per_fold: Vec<usize>,
}

/// The full matrix for one mode.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RobustnessReport {
    pub schema_version: u32,
    pub mode: EvalMode,
    pub fold_seed: u64,
    pub cells: Vec<ReportCell>,
}

pub const REPORT_SCHEMA_VERSION: u32 = 1;

impl RobustnessReport {
    pub fn cell(&self, train: Variant, test: Variant, kind: ImageKind) -> Option<&ReportCell> {
        self.cells
            .iter()
            .find(|c| c.train_variant == train && c.test_variant == test && c.kind == kind)
    }

    /// Aligned text table, image kinds as rows and test variants as columns.
    pub fn render_table(&self) -> String {
        let variants: Vec<Variant> = {
            let mut seen = Vec::new();
            for c in &self.cells {
                if !seen.contains(&c.test_variant) {
                    seen.push(c.test_variant);
                }
            }
            seen
        };
        let mut out = String::new();
        out.push_str(&format!("mode: {}\n", self.mode.as_str()));
        out.push_str(&format!("{:<10}", "image"));
        for v in &variants {
            out.push_str(&format!("{:>14}", v.as_str()));
        }
        out.push('\n');
        for kind in [ImageKind::Attractor, ImageKind::Scalogram] {
            let short = match kind {
                ImageKind::Attractor => "att",
                ImageKind::Scalogram => "scl",
            };
            let mut row = format!("{short:<10}");
            let mut any = false;
            for v in &variants {
                let cell = self.cells.iter().find(|c| c.kind == kind && c.test_variant == *v);
                match cell {
                    Some(c) => {
                        any = true;
                        row.push_str(&format!(
                            "{:>14}",
                            format!("{:.2} ({:.2})", c.macro_f1_mean, c.macro_f1_std)
                        ));
                    }
                    None => row.push_str(&format!("{:>14}", "-")),
                }
            }
            if any {
                out.push_str(&row);
                out.push('\n');
            }
        }
        out
    }
}

fn mean_and_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() > 1 {
        (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, std)
}

/// Run the matrix for one mode over all folds.
///
/// Every dataset must cover the same record ids as the fold plan; test
/// records in each fold are exactly the plan's test ids, so train/test
/// subjects stay disjoint even when train and test variants differ.
pub fn run_matrix(
    plan: &FoldPlan,
    datasets: &[ImageSet],
    labels: &BTreeMap<String, Label>,
    mode: EvalMode,
) -> Result<RobustnessReport> {
    let plan_ids = plan.all_ids();
    for set in datasets {
        let set_ids: BTreeSet<&str> = set.images.keys().map(|s| s.as_str()).collect();
        if set_ids != plan_ids {
            return Err(Error::IdMismatch(format!(
                "dataset {}/{} covers {} ids, fold plan covers {}",
                set.variant,
                set.kind,
                set_ids.len(),
                plan_ids.len()
            )));
        }
    }
    if let Some(id) = plan_ids.iter().find(|id| !labels.contains_key(**id)) {
        return Err(Error::IdMismatch(format!("id {id} has no label")));
    }
    for (f, fold) in plan.folds.iter().enumerate() {
        if let Some(id) = fold
            .train
            .iter()
            .chain(&fold.validation)
            .find(|id| !plan_ids.contains(id.as_str()))
        {
            return Err(Error::IdMismatch(format!(
                "fold {f} references id {id} outside the plan's test universe"
            )));
        }
    }

    let kinds: Vec<ImageKind> = {
        let mut seen = Vec::new();
        for s in datasets {
            if !seen.contains(&s.kind) {
                seen.push(s.kind);
            }
        }
        seen
    };
    let variants: Vec<Variant> = {
        let mut seen = Vec::new();
        for s in datasets {
            if !seen.contains(&s.variant) {
                seen.push(s.variant);
            }
        }
        seen
    };
    let set_for = |variant: Variant, kind: ImageKind| -> Result<&ImageSet> {
        datasets
            .iter()
            .find(|s| s.variant == variant && s.kind == kind)
            .ok_or_else(|| Error::IdMismatch(format!("no dataset for {variant}/{kind}")))
    };

    // precompute features once per dataset
    let features: BTreeMap<(Variant, ImageKind), BTreeMap<&str, Vec<f64>>> = datasets
        .iter()
        .map(|s| {
            let map: BTreeMap<&str, Vec<f64>> = s
                .images
                .iter()
                .map(|(id, img)| (id.as_str(), image_features(img)))
                .collect();
            ((s.variant, s.kind), map)
        })
        .collect();
    let features_of = |variant: Variant,
                       kind: ImageKind,
                       ids: &[String]|
     -> (Vec<Vec<f64>>, Vec<Label>) {
        let map = &features[&(variant, kind)];
        let feats = ids.iter().map(|id| map[id.as_str()].clone()).collect();
        let labs = ids.iter().map(|id| labels[id]).collect();
        (feats, labs)
    };

    // work items: one trained model per (kind, fold, train_variant)
    struct FoldOutcome {
        kind: ImageKind,
        train_variant: Variant,
        test_variant: Variant,
        fold: usize,
        macro_f1: f64,
        class_f1: [f64; 3],
        chosen_k: usize,
    }

    let mut jobs: Vec<(ImageKind, usize, Variant, Vec<Variant>)> = Vec::new();
    for &kind in &kinds {
        for fold in 0..plan.folds.len() {
            match mode {
                EvalMode::Same => {
                    for &v in &variants {
                        jobs.push((kind, fold, v, vec![v]));
                    }
                }
                EvalMode::TrainClean => jobs.push((kind, fold, Variant::Clean, variants.clone())),
                EvalMode::TrainAll => jobs.push((kind, fold, Variant::All, variants.clone())),
            }
        }
    }

    let outcomes: Result<Vec<Vec<FoldOutcome>>> = jobs
        .par_iter()
        .map(|(kind, fold, train_variant, test_variants)| {
            set_for(*train_variant, *kind)?;
            let fold_spec = &plan.folds[*fold];
            let (train_f, train_l) = features_of(*train_variant, *kind, &fold_spec.train);
            let (val_f, val_l) = features_of(*train_variant, *kind, &fold_spec.validation);
            let model = train_baseline_features(&train_f, &train_l, &val_f, &val_l)?;

            let mut results = Vec::with_capacity(test_variants.len());
            for &tv in test_variants {
                set_for(tv, *kind)?;
                let (test_f, test_l) = features_of(tv, *kind, &fold_spec.test);
                let pairs: Vec<(Label, Label)> = test_f
                    .iter()
                    .zip(&test_l)
                    .map(|(f, truth)| (*truth, model.predict_features(f)))
                    .collect();
                let cm = ConfusionMatrix::from_pairs(&pairs);
                let per_class = per_class_metrics(&cm);
                results.push(FoldOutcome {
                    kind: *kind,
                    train_variant: *train_variant,
                    test_variant: tv,
                    fold: *fold,
                    macro_f1: macro_f1(&cm),
                    class_f1: [per_class[0].f1, per_class[1].f1, per_class[2].f1],
                    chosen_k: model.chosen_k,
                });
            }
            Ok(results)
        })
        .collect();

    let mut grouped: BTreeMap<(ImageKind, Variant, Variant), Vec<FoldOutcome>> = BTreeMap::new();
    for outcome in outcomes?.into_iter().flatten() {
        grouped
            .entry((outcome.kind, outcome.train_variant, outcome.test_variant))
            .or_default()
            .push(outcome);
    }

    let mut cells = Vec::with_capacity(grouped.len());
    for ((kind, train_variant, test_variant), mut folds) in grouped {
        folds.sort_by_key(|o| o.fold);
        let macros: Vec<f64> = folds.iter().map(|o| o.macro_f1).collect();
        let (macro_mean, macro_std) = mean_and_std(&macros);
        let mut class_mean = [0.0; 3];
        let mut class_std = [0.0; 3];
        for c in 0..3 {
            let vals: Vec<f64> = folds.iter().map(|o| o.class_f1[c]).collect();
            let (m, s) = mean_and_std(&vals);
            class_mean[c] = m;
            class_std[c] = s;
        }
        cells.push(ReportCell {
            train_variant,
            test_variant,
            kind,
            macro_f1_mean: macro_mean,
            macro_f1_std: macro_std,
            per_class_f1_mean: class_mean,
            per_class_f1_std: class_std,
            per_fold_macro_f1: macros,
            chosen_k_per_fold: folds.iter().map(|o| o.chosen_k).collect(),
        });
    }
    cells.sort_by_key(|c| (c.kind, c.train_variant, c.test_variant));

    Ok(RobustnessReport {
        schema_version: REPORT_SCHEMA_VERSION,
        mode,
        fold_seed: plan.seed,
        cells,
    })
}
