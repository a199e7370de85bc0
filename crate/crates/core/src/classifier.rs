//! Classification by per-class reconstruction error.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dict_update::Dictionary;
use crate::error::{AdlError, Result};
use crate::features::FeatureConfig;
use crate::linalg::Mat;
use crate::sparse_coding::omp_encode;
use crate::trainer::{Algorithm, TrainConfig, Training};

#[derive(Debug, Clone, PartialEq)]
pub struct ClassDictionary {
    pub label: String,
    pub dictionary: Dictionary,
}

/// How a model was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub max_outer_iters: usize,
    pub sweeps: usize,
    pub conv_tol: f64,
    /// Sample rate of the training audio, when trained from audio.
    pub sample_rate: Option<u32>,
}

impl Provenance {
    pub fn from_config(cfg: &TrainConfig, sample_rate: Option<u32>) -> Self {
        Provenance {
            algorithm: cfg.algorithm,
            seed: cfg.seed,
            max_outer_iters: cfg.max_outer_iters,
            sweeps: cfg.sweeps,
            conv_tol: cfg.conv_tol,
            sample_rate,
        }
    }
}

/// Ordered class dictionaries plus everything needed to reproduce the
/// feature pipeline and the encoder at test time.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    classes: Vec<ClassDictionary>,
    pub feature_config: FeatureConfig,
    pub sparsity: usize,
    pub rho: f64,
    pub provenance: Provenance,
}

impl Model {
    pub fn new(
        classes: Vec<ClassDictionary>,
        feature_config: FeatureConfig,
        sparsity: usize,
        rho: f64,
        provenance: Provenance,
    ) -> Result<Self> {
        if classes.len() < 2 {
            return Err(AdlError::InvalidInput(format!(
                "a model needs at least two classes, got {}",
                classes.len()
            )));
        }
        let m = classes[0].dictionary.dim();
        let k = classes[0].dictionary.len();
        let mut seen = HashSet::new();
        for c in &classes {
            if c.dictionary.dim() != m || c.dictionary.len() != k {
                return Err(AdlError::Shape(format!(
                    "class {:?} has a {}x{} dictionary, expected {m}x{k}",
                    c.label,
                    c.dictionary.dim(),
                    c.dictionary.len()
                )));
            }
            if !seen.insert(c.label.as_str()) {
                return Err(AdlError::InvalidInput(format!("duplicate label {:?}", c.label)));
            }
        }
        if sparsity == 0 {
            return Err(AdlError::InvalidInput("sparsity must be at least 1".into()));
        }
        Ok(Model {
            classes,
            feature_config,
            sparsity,
            rho,
            provenance,
        })
    }

    /// Pairs trained dictionaries with their labels.
    pub fn from_training(
        labels: &[String],
        training: Training,
        cfg: &TrainConfig,
        feature_config: FeatureConfig,
        sample_rate: Option<u32>,
    ) -> Result<Self> {
        if labels.len() != training.dictionaries.len() {
            return Err(AdlError::Shape(format!(
                "{} labels for {} dictionaries",
                labels.len(),
                training.dictionaries.len()
            )));
        }
        let classes = labels
            .iter()
            .cloned()
            .zip(training.dictionaries)
            .map(|(label, dictionary)| ClassDictionary { label, dictionary })
            .collect();
        Model::new(
            classes,
            feature_config,
            cfg.sparsity,
            if cfg.algorithm == Algorithm::Reconstructive { 0.0 } else { cfg.rho },
            Provenance::from_config(cfg, sample_rate),
        )
    }

    pub fn classes(&self) -> &[ClassDictionary] {
        &self.classes
    }

    pub fn labels(&self) -> Vec<String> {
        self.classes.iter().map(|c| c.label.clone()).collect()
    }

    pub fn label(&self, class: usize) -> &str {
        &self.classes[class].label
    }

    pub fn class_index(&self, label: &str) -> Option<usize> {
        self.classes.iter().position(|c| c.label == label)
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    /// Feature dimension `m`.
    pub fn dim(&self) -> usize {
        self.classes[0].dictionary.dim()
    }

    /// Atoms per class `k`.
    pub fn atoms(&self) -> usize {
        self.classes[0].dictionary.len()
    }
}

/// Squared residual of `y` against each class dictionary, in model order.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassScores {
    pub residuals: Vec<f64>,
}

impl ClassScores {
    /// Index of the smallest residual; the lowest index wins ties.
    pub fn best(&self) -> usize {
        let mut best = 0;
        for (c, &r) in self.residuals.iter().enumerate() {
            if r < self.residuals[best] {
                best = c;
            }
        }
        best
    }
}

/// Codes `y` over every class dictionary with the model's sparsity.
pub fn score(model: &Model, y: &[f64]) -> Result<ClassScores> {
    if y.len() != model.dim() {
        return Err(AdlError::Shape(format!(
            "feature vector has length {}, model expects {}",
            y.len(),
            model.dim()
        )));
    }
    let residuals = model
        .classes
        .iter()
        .map(|c| {
            let code = omp_encode(&c.dictionary, y, model.sparsity)?;
            Ok(c.dictionary.residual_sq(y, &code))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ClassScores { residuals })
}

/// Class index with the smallest reconstruction residual.
pub fn classify(model: &Model, y: &[f64]) -> Result<usize> {
    Ok(score(model, y)?.best())
}

pub fn classify_label<'m>(model: &'m Model, y: &[f64]) -> Result<&'m str> {
    Ok(model.label(classify(model, y)?))
}

/// Clip-level decision from per-patch votes.
#[derive(Debug, Clone, PartialEq)]
pub struct ClipDecision {
    pub class: usize,
    pub votes: Vec<usize>,
    pub summed_residuals: Vec<f64>,
}

/// Majority vote over the patch columns of `patches`. Ties go to the
/// smaller summed residual, then to the lower class index.
pub fn classify_clip(model: &Model, patches: &Mat) -> Result<ClipDecision> {
    if patches.cols() == 0 {
        return Err(AdlError::InvalidInput("clip has no patches".into()));
    }
    let scores = (0..patches.cols())
        .into_par_iter()
        .map(|p| score(model, patches.col(p)).map_err(|e| e.at_column(p)))
        .collect::<Result<Vec<_>>>()?;
    let c = model.num_classes();
    let mut votes = vec![0usize; c];
    let mut summed = vec![0.0; c];
    for s in &scores {
        votes[s.best()] += 1;
        for (acc, r) in summed.iter_mut().zip(&s.residuals) {
            *acc += r;
        }
    }
    let mut class = 0;
    for j in 1..c {
        let better = votes[j] > votes[class]
            || (votes[j] == votes[class] && summed[j] < summed[class]);
        if better {
            class = j;
        }
    }
    Ok(ClipDecision {
        class,
        votes,
        summed_residuals: summed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{dot, norm};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn model_of(dicts: Vec<Dictionary>, sparsity: usize) -> Model {
        let classes = dicts
            .into_iter()
            .enumerate()
            .map(|(i, dictionary)| ClassDictionary {
                label: format!("c{i}"),
                dictionary,
            })
            .collect();
        Model::new(
            classes,
            FeatureConfig::default(),
            sparsity,
            0.0,
            Provenance::from_config(&TrainConfig::default(), None),
        )
        .unwrap()
    }

    fn planted_pair() -> (Model, Vec<Dictionary>) {
        let mut rng = ChaCha8Rng::seed_from_u64(30);
        let dicts = crate::synthetic::orthogonal_classes(&mut rng, 2, 12, 4).unwrap();
        (model_of(dicts.clone(), 2), dicts)
    }

    #[test]
    fn planted_atom_scores() {
        let (model, dicts) = planted_pair();
        let y = dicts[0].atom(1).to_vec();
        let s = score(&model, &y).unwrap();
        assert!(s.residuals[0] <= 1e-12);
        // orthogonal subspaces: nothing of y projects onto class 1
        assert!((s.residuals[1] - dot(&y, &y)).abs() < 1e-12);
        assert_eq!(classify(&model, &y).unwrap(), 0);
        assert_eq!(classify_label(&model, &y).unwrap(), "c0");
    }

    #[test]
    fn zero_vector_ties_to_first_class() {
        let (model, _) = planted_pair();
        let s = score(&model, &[0.0; 12]).unwrap();
        assert!(s.residuals.iter().all(|&r| r == 0.0));
        assert_eq!(classify(&model, &[0.0; 12]).unwrap(), 0);
    }

    #[test]
    fn residuals_scale_quadratically() {
        let (model, dicts) = planted_pair();
        let mut y: Vec<f64> = dicts[1].atom(0).iter().zip(dicts[0].atom(2)).map(|(a, b)| a + 0.3 * b).collect();
        y[0] += 0.05;
        let s1 = score(&model, &y).unwrap();
        let c = 3.5;
        let scaled: Vec<f64> = y.iter().map(|v| c * v).collect();
        let s2 = score(&model, &scaled).unwrap();
        for (a, b) in s1.residuals.iter().zip(&s2.residuals) {
            assert!((b - c * c * a).abs() <= 1e-10 * b.max(1.0));
        }
        assert_eq!(classify(&model, &y).unwrap(), classify(&model, &scaled).unwrap());
    }

    #[test]
    fn clip_votes() {
        let (model, dicts) = planted_pair();
        let a = dicts[0].atom(0).to_vec();
        let b = dicts[1].atom(0).to_vec();
        let cols = vec![a.clone(), a.clone(), a.clone(), b.clone(), b.clone()];
        let d = classify_clip(&model, &Mat::from_columns(12, &cols).unwrap()).unwrap();
        assert_eq!(d.class, 0);
        assert_eq!(d.votes, vec![3, 2]);

        let unanimous = classify_clip(&model, &Mat::from_columns(12, &[b.clone(), b.clone()]).unwrap()).unwrap();
        assert_eq!(unanimous.class, 1);
        assert_eq!(unanimous.votes, vec![0, 2]);

        assert!(classify_clip(&model, &Mat::zeros(12, 0)).is_err());
    }

    #[test]
    fn clip_vote_tie_uses_summed_residual() {
        let (model, dicts) = planted_pair();
        // two patches per class; class-1 patches carry a loud off-subspace part
        let unit = |v: Vec<f64>| {
            let n = norm(&v);
            v.into_iter().map(|x| x / n).collect::<Vec<_>>()
        };
        let a = dicts[0].atom(0).to_vec();
        let noisy_b: Vec<f64> = dicts[1]
            .atom(0)
            .iter()
            .zip(dicts[1].atom(1))
            .zip(dicts[1].atom(2))
            .map(|((x, y), z)| x + 0.9 * y + 0.8 * z)
            .collect();
        let noisy_b = unit(noisy_b);
        let patches = Mat::from_columns(12, &[a.clone(), a, noisy_b.clone(), noisy_b]).unwrap();
        let d = classify_clip(&model, &patches).unwrap();
        assert_eq!(d.votes, vec![2, 2]);
        assert!(d.summed_residuals[0] < d.summed_residuals[1]);
        assert_eq!(d.class, 0);
    }

    #[test]
    fn model_validation() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let d = crate::synthetic::random_dictionary(&mut rng, 6, 3);
        let prov = Provenance::from_config(&TrainConfig::default(), None);
        let one = vec![ClassDictionary { label: "a".into(), dictionary: d.clone() }];
        assert!(Model::new(one, FeatureConfig::default(), 2, 0.0, prov.clone()).is_err());
        let dup = vec![
            ClassDictionary { label: "a".into(), dictionary: d.clone() },
            ClassDictionary { label: "a".into(), dictionary: d.clone() },
        ];
        assert!(Model::new(dup, FeatureConfig::default(), 2, 0.0, prov.clone()).is_err());
        let other = crate::synthetic::random_dictionary(&mut rng, 7, 3);
        let mixed = vec![
            ClassDictionary { label: "a".into(), dictionary: d },
            ClassDictionary { label: "b".into(), dictionary: other },
        ];
        assert!(Model::new(mixed, FeatureConfig::default(), 2, 0.0, prov).is_err());
    }
}
