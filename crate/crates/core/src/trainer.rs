//! Alternating optimization of the class dictionaries.
//!
//! Every class `i` is trained on its own: sparse-code all the samples the
//! update needs over `D_i`, rebuild the surrogate operands, run the column
//! update, repair dead atoms, and repeat until the per-class objective
//! settles. Three update schedules are offered:
//!
//! * [`Algorithm::Reconstructive`]: own-class term only (`rho` ignored).
//! * [`Algorithm::AdversarialBatch`]: one update per outer iteration with all
//!   off-classes in the cross-reconstruction term.
//! * [`Algorithm::AdversarialMinibatch`]: one update per off-class, in
//!   ascending class order, reusing the codes of the outer iteration.
//!
//! Classes share no mutable state, so they are trained in parallel and the
//! result does not depend on the thread count.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dict_update::{
    bcd_update, build_operands_binary, build_operands_multiclass_batch, objective_value,
    CodedSamples, Dictionary, UpdateOperands,
};
use crate::error::{AdlError, Result};
use crate::linalg::{norm, Mat};
use crate::sparse_coding::{batch_encode, SparseCodeMatrix, DEFAULT_SPARSITY};
use crate::synthetic::random_unit_vec;

/// Dictionary-update schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    #[serde(rename = "recon")]
    Reconstructive,
    #[serde(rename = "adv1")]
    AdversarialBatch,
    #[serde(rename = "adv2")]
    AdversarialMinibatch,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Reconstructive => "recon",
            Algorithm::AdversarialBatch => "adv1",
            Algorithm::AdversarialMinibatch => "adv2",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = AdlError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "recon" => Ok(Algorithm::Reconstructive),
            "adv1" => Ok(Algorithm::AdversarialBatch),
            "adv2" => Ok(Algorithm::AdversarialMinibatch),
            other => Err(AdlError::InvalidInput(format!(
                "unknown algorithm {other:?} (expected recon, adv1 or adv2)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Atoms per class dictionary (`k`).
    pub atoms: usize,
    /// Nonzeros per code (`L`), shared by training and classification.
    pub sparsity: usize,
    /// Weight of the cross-reconstruction term.
    pub rho: f64,
    pub max_outer_iters: usize,
    /// Relative objective change that counts as converged.
    pub conv_tol: f64,
    pub seed: u64,
    pub algorithm: Algorithm,
    /// Coordinate-descent sweeps per dictionary-update call.
    pub sweeps: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            atoms: 32,
            sparsity: DEFAULT_SPARSITY,
            rho: 1e-3,
            max_outer_iters: 30,
            conv_tol: 1e-4,
            seed: 0,
            algorithm: Algorithm::AdversarialMinibatch,
            sweeps: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sparsity == 0 {
            return Err(AdlError::InvalidInput("sparsity must be at least 1".into()));
        }
        if self.sparsity >= self.atoms {
            return Err(AdlError::InvalidInput(format!(
                "sparsity {} must be smaller than the atom count {}",
                self.sparsity, self.atoms
            )));
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(AdlError::InvalidInput(format!("rho {} outside [0, 1]", self.rho)));
        }
        if self.rho > 0.1 {
            log::warn!("rho = {} is above the usual search range (<= 0.1)", self.rho);
        }
        if self.sweeps == 0 {
            return Err(AdlError::InvalidInput("sweeps must be at least 1".into()));
        }
        if self.conv_tol.is_nan() || self.conv_tol < 0.0 {
            return Err(AdlError::InvalidInput("conv_tol must be >= 0".into()));
        }
        Ok(())
    }
}

/// One row of the training log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainRecord {
    pub class: usize,
    /// 1-based outer iteration.
    pub iteration: usize,
    /// Per-class objective after the update (codes of this iteration).
    pub objective: f64,
    pub reinitialized: usize,
}

#[derive(Debug, Clone, Default)]
pub struct TrainReport {
    pub records: Vec<TrainRecord>,
    pub wall_time: Duration,
}

impl TrainReport {
    /// Objective trajectory of one class, in iteration order.
    pub fn trajectory(&self, class: usize) -> Vec<f64> {
        self.records
            .iter()
            .filter(|r| r.class == class)
            .map(|r| r.objective)
            .collect()
    }

    /// Comma-separated rows `iteration,class,objective,reinitialized`.
    pub fn write_delimited<W: std::io::Write>(&self, labels: &[String], mut w: W) -> std::io::Result<()> {
        writeln!(w, "iteration,class,objective,reinitialized")?;
        for r in &self.records {
            let label = labels.get(r.class).map_or_else(|| r.class.to_string(), Clone::clone);
            writeln!(w, "{},{},{:e},{}", r.iteration, label, r.objective, r.reinitialized)?;
        }
        Ok(())
    }
}

/// Learned dictionaries in class order plus the training log.
#[derive(Debug, Clone)]
pub struct Training {
    pub dictionaries: Vec<Dictionary>,
    pub report: TrainReport,
}

/// `|f_t - f_{t-1}| <= tol * (1 + |f_{t-1}|)` on the last two values.
pub fn converged(history: &[f64], conv_tol: f64) -> bool {
    match history {
        [.., prev, last] => (last - prev).abs() <= conv_tol * (1.0 + prev.abs()),
        _ => false,
    }
}

fn class_seed(seed: u64, class: usize) -> u64 {
    seed ^ (class as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// `k` atoms drawn from the columns of `samples` (without replacement when
/// there are at least `k` columns), scaled to unit norm. Zero columns are
/// replaced by random unit vectors.
pub fn init_dictionary(samples: &Mat, atoms: usize, seed: u64) -> Result<Dictionary> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    init_with_rng(samples, atoms, &mut rng)
}

fn init_with_rng(samples: &Mat, atoms: usize, rng: &mut ChaCha8Rng) -> Result<Dictionary> {
    let n = samples.cols();
    if n == 0 {
        return Err(AdlError::InvalidInput("cannot initialize from an empty class".into()));
    }
    if atoms == 0 {
        return Err(AdlError::InvalidInput("atom count must be at least 1".into()));
    }
    let picks: Vec<usize> = if n >= atoms {
        rand::seq::index::sample(rng, n, atoms).into_vec()
    } else {
        (0..atoms).map(|_| rng.random_range(0..n)).collect()
    };
    let m = samples.rows();
    let cols: Vec<Vec<f64>> = picks
        .iter()
        .map(|&i| {
            let c = samples.col(i);
            let nc = norm(c);
            if nc > f64::MIN_POSITIVE {
                c.iter().map(|v| v / nc).collect()
            } else {
                random_unit_vec(rng, m)
            }
        })
        .collect();
    Dictionary::new(Mat::from_columns(m, &cols)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Schedule {
    Reconstructive,
    Batch,
    Minibatch,
}

/// Trains with the schedule selected by `cfg.algorithm`.
pub fn train(classes: &[Mat], cfg: &TrainConfig) -> Result<Training> {
    match cfg.algorithm {
        Algorithm::Reconstructive => train_reconstructive(classes, cfg),
        Algorithm::AdversarialBatch => train_multiclass_alg1(classes, cfg),
        Algorithm::AdversarialMinibatch => train_multiclass_alg2(classes, cfg),
    }
}

/// Two-class adversarial training (`rho = 0` gives plain reconstructive DL).
pub fn train_binary(class_a: &Mat, class_b: &Mat, cfg: &TrainConfig) -> Result<Training> {
    run(&[class_a.clone(), class_b.clone()], cfg, Schedule::Batch)
}

/// Own-class reconstruction only; `cfg.rho` is ignored.
pub fn train_reconstructive(classes: &[Mat], cfg: &TrainConfig) -> Result<Training> {
    run(classes, cfg, Schedule::Reconstructive)
}

/// All off-classes enter a single update per outer iteration.
pub fn train_multiclass_alg1(classes: &[Mat], cfg: &TrainConfig) -> Result<Training> {
    run(classes, cfg, Schedule::Batch)
}

/// One update per off-class, in ascending class order, after a single
/// coding pass per outer iteration.
pub fn train_multiclass_alg2(classes: &[Mat], cfg: &TrainConfig) -> Result<Training> {
    run(classes, cfg, Schedule::Minibatch)
}

fn run(classes: &[Mat], cfg: &TrainConfig, schedule: Schedule) -> Result<Training> {
    cfg.validate()?;
    if classes.len() < 2 {
        return Err(AdlError::InvalidInput(format!(
            "need at least two classes, got {}",
            classes.len()
        )));
    }
    let m = classes[0].rows();
    for (i, c) in classes.iter().enumerate() {
        if c.rows() != m {
            return Err(AdlError::Shape(format!(
                "class {i} has dimension {}, class 0 has {m}",
                c.rows()
            )));
        }
        if c.cols() == 0 {
            return Err(AdlError::InvalidInput(format!("class {i} has no samples")));
        }
    }

    let start = Instant::now();
    let per_class = (0..classes.len())
        .into_par_iter()
        .map(|i| train_class(i, classes, cfg, schedule).map_err(|e| e.in_class(i.to_string())))
        .collect::<Result<Vec<_>>>()?;

    let mut dictionaries = Vec::with_capacity(classes.len());
    let mut records = Vec::new();
    for (d, r) in per_class {
        dictionaries.push(d);
        records.extend(r);
    }
    Ok(Training {
        dictionaries,
        report: TrainReport {
            records,
            wall_time: start.elapsed(),
        },
    })
}

fn train_class(
    i: usize,
    classes: &[Mat],
    cfg: &TrainConfig,
    schedule: Schedule,
) -> Result<(Dictionary, Vec<TrainRecord>)> {
    let own_samples = &classes[i];
    let mut rng = ChaCha8Rng::seed_from_u64(class_seed(cfg.seed, i));
    let mut dict = init_with_rng(own_samples, cfg.atoms, &mut rng)?;
    let adversarial = schedule != Schedule::Reconstructive && cfg.rho > 0.0;
    let rho = if adversarial { cfg.rho } else { 0.0 };
    let off_indices: Vec<usize> = (0..classes.len()).filter(|&j| j != i).collect();

    let mut history = Vec::new();
    let mut records = Vec::new();
    for iteration in 1..=cfg.max_outer_iters {
        let own_codes = batch_encode(&dict, own_samples, cfg.sparsity)?;
        // off-class codes only matter when the adversarial term is active
        let off_codes: Vec<SparseCodeMatrix> = if adversarial {
            off_indices
                .iter()
                .map(|&j| batch_encode(&dict, &classes[j], cfg.sparsity))
                .collect::<Result<_>>()?
        } else {
            Vec::new()
        };
        let own = CodedSamples::new(own_samples, &own_codes);
        let off: Vec<CodedSamples<'_>> = off_codes
            .iter()
            .zip(&off_indices)
            .map(|(codes, &j)| CodedSamples::new(&classes[j], codes))
            .collect();

        let residuals: Vec<f64> = own_codes
            .iter()
            .enumerate()
            .map(|(s, c)| dict.residual_sq(own_samples.col(s), c))
            .collect();

        let mut flagged = vec![false; cfg.atoms];
        let mut apply = |dict: &mut Dictionary, ops: &UpdateOperands| -> Result<()> {
            let out = bcd_update(dict, ops, cfg.sweeps)?;
            for j in out.flagged {
                flagged[j] = true;
            }
            *dict = out.dictionary;
            Ok(())
        };
        match schedule {
            Schedule::Reconstructive => {
                let ops = build_operands_multiclass_batch(own, &[], 0.0)?;
                apply(&mut dict, &ops)?;
            }
            Schedule::Batch => {
                let ops = build_operands_multiclass_batch(own, &off, rho)?;
                apply(&mut dict, &ops)?;
            }
            Schedule::Minibatch => {
                if adversarial {
                    for block in &off {
                        let ops = build_operands_binary(own, *block, rho)?;
                        apply(&mut dict, &ops)?;
                    }
                } else {
                    let ops = build_operands_multiclass_batch(own, &[], 0.0)?;
                    for _ in &off_indices {
                        apply(&mut dict, &ops)?;
                    }
                }
            }
        }

        let dead: Vec<usize> = (0..cfg.atoms).filter(|&j| flagged[j]).collect();
        reinitialize(&mut dict, &dead, own_samples, &residuals, &mut rng);

        let objective = objective_value(&dict, own, &off, rho)?;
        if !objective.is_finite() {
            return Err(AdlError::NonFinite(format!("objective at iteration {iteration}")));
        }
        history.push(objective);
        records.push(TrainRecord {
            class: i,
            iteration,
            objective,
            reinitialized: dead.len(),
        });
        if converged(&history, cfg.conv_tol) {
            break;
        }
    }
    Ok((dict, records))
}

/// Replaces each dead atom with the next worst-reconstructed own sample.
fn reinitialize(
    dict: &mut Dictionary,
    dead: &[usize],
    samples: &Mat,
    residuals: &[f64],
    rng: &mut ChaCha8Rng,
) {
    if dead.is_empty() {
        return;
    }
    let mut order: Vec<usize> = (0..samples.cols()).collect();
    order.sort_by(|&a, &b| residuals[b].total_cmp(&residuals[a]).then(a.cmp(&b)));
    for (n, &atom) in dead.iter().enumerate() {
        let s = samples.col(order[n % order.len()]);
        if norm(s) > f64::MIN_POSITIVE {
            dict.set_atom_normalized(atom, s);
        } else {
            let v = random_unit_vec(rng, samples.rows());
            dict.set_atom_normalized(atom, &v);
        }
    }
}
