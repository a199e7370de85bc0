//! Synthetic data with known structure: planted dictionaries, sparse
//! mixtures with controlled SNR, and small tone-based WAV corpora.

use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dict_update::Dictionary;
use crate::error::{AdlError, Result};
use crate::linalg::{axpy, dot, norm, Mat};

pub fn gaussian_vec<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

/// Gaussian vector scaled to unit norm.
pub fn random_unit_vec<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    loop {
        let mut v = gaussian_vec(rng, n);
        let nv = norm(&v);
        if nv > 1e-12 {
            v.iter_mut().for_each(|x| *x /= nv);
            return v;
        }
    }
}

/// Random dictionary with i.i.d. Gaussian atoms scaled to unit norm.
pub fn random_dictionary<R: Rng + ?Sized>(rng: &mut R, m: usize, k: usize) -> Dictionary {
    let cols: Vec<Vec<f64>> = (0..k).map(|_| random_unit_vec(rng, m)).collect();
    Dictionary::new(Mat::from_columns(m, &cols).expect("consistent shapes"))
        .expect("unit columns")
}

/// Orthonormal `n x n` basis from Gram-Schmidt on a Gaussian matrix.
pub fn random_orthonormal<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Dictionary {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n);
    while basis.len() < n {
        let mut v = gaussian_vec(rng, n);
        for _ in 0..2 {
            for q in &basis {
                let c = dot(q, &v);
                axpy(-c, q, &mut v);
            }
        }
        let nv = norm(&v);
        if nv > 1e-8 {
            v.iter_mut().for_each(|x| *x /= nv);
            basis.push(v);
        }
    }
    Dictionary::new(Mat::from_columns(n, &basis).expect("square")).expect("unit columns")
}

/// `count` samples, each a random `sparsity`-atom combination of `dict`
/// plus white Gaussian noise at `snr_db` (signal-to-noise energy ratio).
///
/// Coefficients are drawn as `±U(0.5, 1.5)` so no selected atom vanishes.
/// `snr_db = None` gives noiseless samples.
pub fn sparse_mixtures<R: Rng + ?Sized>(
    rng: &mut R,
    dict: &Dictionary,
    sparsity: usize,
    count: usize,
    snr_db: Option<f64>,
) -> Mat {
    let (m, k) = (dict.dim(), dict.len());
    let mut cols = Vec::with_capacity(count);
    for _ in 0..count {
        let support = rand::seq::index::sample(rng, k, sparsity.min(k));
        let mut y = vec![0.0; m];
        for j in support.iter() {
            let mag: f64 = rng.random_range(0.5..1.5);
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            axpy(sign * mag, dict.atom(j), &mut y);
        }
        if let Some(snr) = snr_db {
            let signal_power = dot(&y, &y) / m as f64;
            let sigma = (signal_power / 10f64.powf(snr / 10.0)).sqrt();
            for v in y.iter_mut() {
                let e: f64 = StandardNormal.sample(rng);
                *v += sigma * e;
            }
        }
        cols.push(y);
    }
    Mat::from_columns(m, &cols).expect("consistent shapes")
}

/// Train/test split of a planted multi-class problem.
#[derive(Debug, Clone)]
pub struct PlantedProblem {
    pub dictionaries: Vec<Dictionary>,
    pub train: Vec<Mat>,
    pub test: Vec<Mat>,
}

/// Parameters of [`planted_problem`].
#[derive(Debug, Clone)]
pub struct PlantedSpec {
    pub classes: usize,
    pub dim: usize,
    pub atoms: usize,
    pub sparsity: usize,
    pub train_per_class: usize,
    pub test_per_class: usize,
    pub snr_db: Option<f64>,
}

/// One independent random dictionary per class, samples drawn from each.
pub fn planted_problem<R: Rng + ?Sized>(rng: &mut R, spec: &PlantedSpec) -> PlantedProblem {
    let dictionaries: Vec<Dictionary> = (0..spec.classes)
        .map(|_| random_dictionary(rng, spec.dim, spec.atoms))
        .collect();
    let train = dictionaries
        .iter()
        .map(|d| sparse_mixtures(rng, d, spec.sparsity, spec.train_per_class, spec.snr_db))
        .collect();
    let test = dictionaries
        .iter()
        .map(|d| sparse_mixtures(rng, d, spec.sparsity, spec.test_per_class, spec.snr_db))
        .collect();
    PlantedProblem {
        dictionaries,
        train,
        test,
    }
}

/// Classes drawn from mutually orthogonal subspaces: class `c` owns atoms
/// `c * atoms .. (c + 1) * atoms` of a random orthonormal basis of `R^dim`.
pub fn orthogonal_classes<R: Rng + ?Sized>(
    rng: &mut R,
    classes: usize,
    dim: usize,
    atoms: usize,
) -> Result<Vec<Dictionary>> {
    if classes * atoms > dim {
        return Err(AdlError::InvalidInput(format!(
            "{classes} x {atoms} orthogonal atoms do not fit in dimension {dim}"
        )));
    }
    let basis = random_orthonormal(rng, dim);
    (0..classes)
        .map(|c| {
            let cols: Vec<Vec<f64>> = (0..atoms)
                .map(|j| basis.atom(c * atoms + j).to_vec())
                .collect();
            Dictionary::new(Mat::from_columns(dim, &cols)?)
        })
        .collect()
}

/// Tone recipe for one synthetic audio class: a sum of sinusoids.
#[derive(Debug, Clone)]
pub struct ToneClass {
    pub label: String,
    pub frequencies_hz: Vec<f64>,
}

/// Renders a clip of summed sinusoids plus uniform noise, peak-normalized
/// to 0.8.
pub fn tone_clip<R: Rng + ?Sized>(
    rng: &mut R,
    frequencies_hz: &[f64],
    sample_rate: u32,
    seconds: f64,
    noise_level: f64,
) -> Vec<f64> {
    let n = (seconds * sample_rate as f64).round() as usize;
    let phases: Vec<f64> = frequencies_hz
        .iter()
        .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
        .collect();
    // slight per-clip detune so clips are not identical
    let detune: f64 = rng.random_range(0.98..1.02);
    let mut out: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64 / sample_rate as f64;
            let tone: f64 = frequencies_hz
                .iter()
                .zip(&phases)
                .map(|(f, p)| (std::f64::consts::TAU * f * detune * t + p).sin())
                .sum();
            tone + noise_level * rng.random_range(-1.0..1.0)
        })
        .collect();
    let peak = out.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 0.0 {
        out.iter_mut().for_each(|v| *v *= 0.8 / peak);
    }
    out
}

/// Writes mono 16-bit PCM.
pub fn write_wav_i16(path: &Path, samples: &[f64], sample_rate: u32) -> Result<()> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut w = hound::WavWriter::create(path, spec).map_err(|e| AdlError::Audio(e.to_string()))?;
    for &s in samples {
        // same 2^15 scale the reader divides by, clipped to the i16 range
        let q = (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        w.write_sample(q).map_err(|e| AdlError::Audio(e.to_string()))?;
    }
    w.finalize().map_err(|e| AdlError::Audio(e.to_string()))
}

/// Writes a directory-per-class corpus of `clips_per_class` tone clips.
pub fn write_tone_corpus<R: Rng + ?Sized>(
    rng: &mut R,
    root: &Path,
    classes: &[ToneClass],
    clips_per_class: usize,
    sample_rate: u32,
    seconds: f64,
    noise_level: f64,
) -> Result<()> {
    for class in classes {
        let dir = root.join(&class.label);
        std::fs::create_dir_all(&dir)?;
        for i in 0..clips_per_class {
            let clip = tone_clip(rng, &class.frequencies_hz, sample_rate, seconds, noise_level);
            write_wav_i16(&dir.join(format!("clip_{i:03}.wav")), &clip, sample_rate)?;
        }
    }
    Ok(())
}
