//! Implementations of the `adl` subcommands. Each takes plain parameters and
//! writes its human-readable output to a caller-supplied writer so that it
//! can be driven from tests as well as from the binary.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::eval::{mean_std, EvalReport};
use super::manifest::{stratified_kfold, DatasetManifest};
use super::model_file::{
    encode_features, load_model, save_model, write_atomic, FeatureHeader, FORMAT_VERSION,
};
use crate::classifier::{classify_clip, ClipDecision, Model};
use crate::error::{AdlError, Result};
use crate::features::{clip_features, load_wav, FeatureConfig};
use crate::linalg::Mat;
use crate::trainer::{train, TrainConfig, TrainReport};

/// Patch matrices of every file of a manifest, `[class][file]`.
#[derive(Debug, Clone)]
pub struct DatasetFeatures {
    pub labels: Vec<String>,
    pub clips: Vec<Vec<Mat>>,
    pub sample_rate: Option<u32>,
}

/// Extracts features for every file; all failures are reported together.
pub fn extract_dataset(manifest: &DatasetManifest, cfg: &FeatureConfig) -> Result<DatasetFeatures> {
    cfg.validate()?;
    let jobs: Vec<(usize, &PathBuf)> = manifest
        .classes
        .iter()
        .enumerate()
        .flat_map(|(c, class)| class.files.iter().map(move |f| (c, f)))
        .collect();
    type Extracted<'a> = (usize, &'a PathBuf, Result<(Mat, u32)>);
    let results: Vec<Extracted<'_>> = jobs
        .par_iter()
        .map(|&(c, path)| {
            let r = load_wav(path).and_then(|clip| {
                let sr = clip.sample_rate;
                clip_features(&clip, cfg).map(|m| (m, sr))
            });
            (c, path, r)
        })
        .collect();

    let mut clips: Vec<Vec<Mat>> = vec![Vec::new(); manifest.classes.len()];
    let mut failures = Vec::new();
    let mut rates: Vec<(u32, &PathBuf)> = Vec::new();
    for (c, path, r) in results {
        match r {
            Ok((m, sr)) => {
                rates.push((sr, path));
                clips[c].push(m);
            }
            Err(e) => failures.push(format!("  {}: {e}", path.display())),
        }
    }
    if !failures.is_empty() {
        return Err(AdlError::Dataset(format!(
            "{} file(s) could not be used:\n{}",
            failures.len(),
            failures.join("\n")
        )));
    }
    let sample_rate = rates.first().map(|r| r.0);
    if let Some(sr) = sample_rate {
        let odd: Vec<String> = rates
            .iter()
            .filter(|r| r.0 != sr)
            .map(|r| format!("  {} ({} Hz)", r.1.display(), r.0))
            .collect();
        if !odd.is_empty() {
            return Err(AdlError::Dataset(format!(
                "sample rates differ from {sr} Hz:\n{}",
                odd.join("\n")
            )));
        }
    }
    Ok(DatasetFeatures {
        labels: manifest.labels(),
        clips,
        sample_rate,
    })
}

/// Concatenates the patch columns of several clips.
pub fn pool_patches<'a>(dim: usize, clips: impl IntoIterator<Item = &'a Mat>) -> Result<Mat> {
    let mut data = Vec::new();
    let mut cols = 0;
    for c in clips {
        if c.rows() != dim {
            return Err(AdlError::Shape(format!("patch length {} vs {dim}", c.rows())));
        }
        data.extend_from_slice(c.as_slice());
        cols += c.cols();
    }
    Mat::from_col_major(dim, cols, data)
}

fn train_on(
    features: &DatasetFeatures,
    pick: impl Fn(usize, usize) -> bool,
    train_cfg: &TrainConfig,
    feature_cfg: &FeatureConfig,
) -> Result<(Model, TrainReport)> {
    let dim = feature_cfg.feature_dim();
    let classes = features
        .clips
        .iter()
        .enumerate()
        .map(|(c, clips)| {
            pool_patches(
                dim,
                clips.iter().enumerate().filter(|(f, _)| pick(c, *f)).map(|(_, m)| m),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let training = train(&classes, train_cfg).map_err(|e| relabel(e, &features.labels))?;
    let report = training.report.clone();
    let model = Model::from_training(
        &features.labels,
        training,
        train_cfg,
        feature_cfg.clone(),
        features.sample_rate,
    )?;
    Ok((model, report))
}

fn relabel(err: AdlError, labels: &[String]) -> AdlError {
    match err {
        AdlError::Class { class, source } => {
            let label = class
                .parse::<usize>()
                .ok()
                .and_then(|i| labels.get(i).cloned())
                .unwrap_or(class);
            AdlError::Class { class: label, source }
        }
        other => other,
    }
}

/// Companion path for the training log of a model file.
pub fn report_path(model_path: &Path) -> PathBuf {
    model_path.with_extension("report.csv")
}

#[derive(Debug, Clone)]
pub struct TrainSummary {
    pub model_path: PathBuf,
    pub report_path: PathBuf,
    pub report: TrainReport,
}

/// `adl train`: extract features, pool patches per class, train, save the
/// model and its training log.
pub fn cmd_train(
    data_dir: &Path,
    train_cfg: &TrainConfig,
    feature_cfg: &FeatureConfig,
    out: &Path,
    w: &mut dyn Write,
) -> Result<TrainSummary> {
    train_cfg.validate()?;
    feature_cfg.validate()?;
    let manifest = DatasetManifest::scan(data_dir)?;
    let features = extract_dataset(&manifest, feature_cfg)?;
    let (model, report) = train_on(&features, |_, _| true, train_cfg, feature_cfg)?;

    let rpath = report_path(out);
    let mut log = Vec::new();
    report.write_delimited(&features.labels, &mut log)?;
    let written = save_model(&model, out).and_then(|_| write_atomic(&rpath, &log));
    if let Err(e) = written {
        let _ = fs::remove_file(out);
        let _ = fs::remove_file(&rpath);
        return Err(e);
    }
    writeln!(
        w,
        "trained {} classes ({} atoms, L = {}, rho = {}, {}) in {:.2?}",
        model.num_classes(),
        model.atoms(),
        model.sparsity,
        model.rho,
        train_cfg.algorithm,
        report.wall_time
    )?;
    writeln!(w, "model: {}", out.display())?;
    writeln!(w, "report: {}", rpath.display())?;
    Ok(TrainSummary {
        model_path: out.to_path_buf(),
        report_path: rpath,
        report,
    })
}

fn check_model_features(model: &Model) -> Result<()> {
    let cfg = &model.feature_config;
    if cfg.feature_dim() != model.dim() {
        return Err(AdlError::Shape(format!(
            "model atoms have length {} but its feature config yields {} ({} bins x {} frames)",
            model.dim(),
            cfg.feature_dim(),
            cfg.bins(),
            cfg.window_frames
        )));
    }
    Ok(())
}

/// Patches of one clip under the model's feature settings.
pub fn clip_patches_for_model(model: &Model, path: &Path) -> Result<Mat> {
    check_model_features(model)?;
    let clip = load_wav(path)?;
    if let Some(sr) = model.provenance.sample_rate {
        if sr != clip.sample_rate {
            return Err(AdlError::Dataset(format!(
                "{}: sample rate {} Hz, model was trained on {sr} Hz audio",
                path.display(),
                clip.sample_rate
            )));
        }
    }
    clip_features(&clip, &model.feature_config)
        .map_err(|e| AdlError::Audio(format!("{}: {e}", path.display())))
}

/// `adl classify`: label, votes and summed residual per class.
pub fn cmd_classify(model_path: &Path, wav: &Path, w: &mut dyn Write) -> Result<ClipDecision> {
    let model = load_model(model_path)?;
    let patches = clip_patches_for_model(&model, wav)?;
    let decision = classify_clip(&model, &patches)?;
    writeln!(w, "label: {}", model.label(decision.class))?;
    writeln!(w, "patches: {}", patches.cols())?;
    let width = model.labels().iter().map(String::len).max().unwrap_or(5).max(5);
    writeln!(w, "{:width$}  {:>6}  {:>16}", "class", "votes", "summed_residual")?;
    for (c, label) in model.labels().iter().enumerate() {
        writeln!(
            w,
            "{label:width$}  {:>6}  {:>16.6e}",
            decision.votes[c], decision.summed_residuals[c]
        )?;
    }
    Ok(decision)
}

/// `adl eval`: clip-level accuracy over a directory-per-class test set.
pub fn cmd_eval(
    model_path: &Path,
    test_dir: &Path,
    csv_out: Option<&Path>,
    w: &mut dyn Write,
) -> Result<EvalReport> {
    let model = load_model(model_path)?;
    check_model_features(&model)?;
    let manifest = DatasetManifest::scan_lenient(test_dir)?;
    let mut jobs = Vec::new();
    for class in &manifest.classes {
        match model.class_index(&class.label) {
            None => log::warn!(
                "skipping {}: label {:?} is not in the model",
                test_dir.join(&class.label).display(),
                class.label
            ),
            Some(c) => {
                if class.files.is_empty() {
                    log::warn!("class {:?} has no test files", class.label);
                }
                jobs.extend(class.files.iter().map(|f| (c, f)));
            }
        }
    }
    let outcomes: Vec<Result<usize>> = jobs
        .par_iter()
        .map(|&(_, path)| {
            let patches = clip_patches_for_model(&model, path)?;
            Ok(classify_clip(&model, &patches)?.class)
        })
        .collect();
    let mut report = EvalReport::new(model.labels());
    let mut failures = Vec::new();
    for (&(truth, path), outcome) in jobs.iter().zip(outcomes) {
        match outcome {
            Ok(pred) => report.record(truth, pred),
            Err(e) => failures.push(format!("  {}: {e}", path.display())),
        }
    }
    if !failures.is_empty() {
        return Err(AdlError::Dataset(format!(
            "{} test file(s) failed:\n{}",
            failures.len(),
            failures.join("\n")
        )));
    }
    write!(w, "{report}")?;
    if let Some(p) = csv_out {
        let mut buf = Vec::new();
        report.write_delimited(&mut buf)?;
        write_atomic(p, &buf)?;
    }
    Ok(report)
}

fn evaluate_clips<'a>(
    model: &Model,
    clips: impl IntoIterator<Item = (usize, &'a Mat)>,
) -> Result<EvalReport> {
    let mut report = EvalReport::new(model.labels());
    for (truth, patches) in clips {
        report.record(truth, classify_clip(model, patches)?.class);
    }
    Ok(report)
}

/// One row of the rho grid search.
#[derive(Debug, Clone, PartialEq)]
pub struct GridRow {
    pub rho: f64,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    pub fold_accuracies: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub rows: Vec<GridRow>,
    pub best_rho: f64,
}

pub const DEFAULT_RHO_GRID: [f64; 5] = [1e-5, 1e-4, 1e-3, 1e-2, 1e-1];

/// Stratified cross-validation of each rho; the model is refit on every
/// training split.
pub fn gridsearch_features(
    features: &DatasetFeatures,
    manifest: &DatasetManifest,
    folds: usize,
    rho_grid: &[f64],
    train_cfg: &TrainConfig,
    feature_cfg: &FeatureConfig,
) -> Result<GridResult> {
    if rho_grid.is_empty() {
        return Err(AdlError::InvalidInput("rho grid is empty".into()));
    }
    let assignment = stratified_kfold(manifest, folds, train_cfg.seed)?;
    let mut rows = Vec::with_capacity(rho_grid.len());
    for &rho in rho_grid {
        let cfg = TrainConfig {
            rho,
            ..train_cfg.clone()
        };
        cfg.validate()?;
        let mut fold_accuracies = Vec::with_capacity(folds);
        for fold in 0..folds {
            let (model, _) = train_on(
                features,
                |c, f| assignment.fold_of[c][f] != fold,
                &cfg,
                feature_cfg,
            )?;
            let (_, test) = assignment.split(fold);
            let report = evaluate_clips(&model, test.iter().map(|&(c, f)| (c, &features.clips[c][f])))?;
            fold_accuracies.push(report.accuracy());
        }
        let (mean, std) = mean_std(&fold_accuracies);
        rows.push(GridRow {
            rho,
            mean_accuracy: mean,
            std_accuracy: std,
            fold_accuracies,
        });
    }
    let best = rows
        .iter()
        .fold(&rows[0], |b, r| if r.mean_accuracy > b.mean_accuracy { r } else { b });
    Ok(GridResult {
        best_rho: best.rho,
        rows,
    })
}

/// `adl gridsearch`.
pub fn cmd_gridsearch(
    data_dir: &Path,
    folds: usize,
    rho_grid: &[f64],
    train_cfg: &TrainConfig,
    feature_cfg: &FeatureConfig,
    csv_out: Option<&Path>,
    w: &mut dyn Write,
) -> Result<GridResult> {
    if folds < 2 {
        return Err(AdlError::InvalidInput(format!("need at least 2 folds, got {folds}")));
    }
    let manifest = DatasetManifest::scan(data_dir)?;
    let features = extract_dataset(&manifest, feature_cfg)?;
    let result = gridsearch_features(&features, &manifest, folds, rho_grid, train_cfg, feature_cfg)?;
    let mut csv = Vec::new();
    writeln!(csv, "rho,mean_accuracy,std_accuracy")?;
    writeln!(w, "{:>10}  {:>8}  {:>8}", "rho", "mean", "std")?;
    for r in &result.rows {
        writeln!(csv, "{:e},{:.4},{:.4}", r.rho, r.mean_accuracy, r.std_accuracy)?;
        writeln!(w, "{:>10.0e}  {:>8.2}  {:>8.2}", r.rho, r.mean_accuracy, r.std_accuracy)?;
    }
    writeln!(w, "best rho: {:e}", result.best_rho)?;
    if let Some(p) = csv_out {
        write_atomic(p, &csv)?;
    }
    Ok(result)
}

/// `adl sweep-atoms`: accuracy against atoms per class on a fixed split
/// (fold 0 of a seeded stratified `folds`-way split is held out).
pub fn cmd_sweep_atoms(
    data_dir: &Path,
    atoms_list: &[usize],
    folds: usize,
    train_cfg: &TrainConfig,
    feature_cfg: &FeatureConfig,
    csv_out: Option<&Path>,
    w: &mut dyn Write,
) -> Result<Vec<(usize, f64)>> {
    if atoms_list.is_empty() {
        return Err(AdlError::InvalidInput("atom list is empty".into()));
    }
    if let Some(&k) = atoms_list.iter().find(|&&k| k <= train_cfg.sparsity) {
        return Err(AdlError::InvalidInput(format!(
            "atom count {k} must exceed the sparsity {}",
            train_cfg.sparsity
        )));
    }
    let manifest = DatasetManifest::scan(data_dir)?;
    let features = extract_dataset(&manifest, feature_cfg)?;
    let assignment = stratified_kfold(&manifest, folds, train_cfg.seed)?;
    let (_, test) = assignment.split(0);
    let mut rows = Vec::with_capacity(atoms_list.len());
    for &k in atoms_list {
        let cfg = TrainConfig {
            atoms: k,
            ..train_cfg.clone()
        };
        let (model, _) = train_on(&features, |c, f| assignment.fold_of[c][f] != 0, &cfg, feature_cfg)?;
        let report = evaluate_clips(&model, test.iter().map(|&(c, f)| (c, &features.clips[c][f])))?;
        rows.push((k, report.accuracy()));
    }
    let mut csv = Vec::new();
    writeln!(csv, "atoms,accuracy")?;
    for (k, a) in &rows {
        writeln!(csv, "{k},{a:.4}")?;
    }
    w.write_all(&csv)?;
    if let Some(p) = csv_out {
        write_atomic(p, &csv)?;
    }
    Ok(rows)
}

/// `adl features`: dump the patch matrix of one clip.
pub fn cmd_features(wav: &Path, cfg: &FeatureConfig, out: &Path, w: &mut dyn Write) -> Result<Mat> {
    cfg.validate()?;
    let clip = load_wav(wav)?;
    let patches = clip_features(&clip, cfg)
        .map_err(|e| AdlError::Audio(format!("{}: {e}", wav.display())))?;
    let header = FeatureHeader {
        format_version: FORMAT_VERSION,
        rows: patches.rows(),
        cols: patches.cols(),
        feature_config: cfg.clone(),
        source: wav.display().to_string(),
        sample_rate: clip.sample_rate,
    };
    write_atomic(out, &encode_features(&header, &patches))?;
    writeln!(
        w,
        "{} patches of length {} -> {}",
        patches.cols(),
        patches.rows(),
        out.display()
    )?;
    Ok(patches)
}
