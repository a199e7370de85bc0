//! Audio front end: WAV decoding, STFT magnitudes, level scaling, and
//! sliding-window patch extraction.
//!
//! Spectrogram values are column-major by frame (`values[f * bins + b]`), and
//! a patch is the concatenation of `w` consecutive frames in that order.

use std::path::Path;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{AdlError, Result};
use crate::linalg::Mat;

/// Mono audio with samples in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowFn {
    Hann,
    Hamming,
    Rectangular,
}

impl WindowFn {
    /// Periodic window of length `n`.
    pub fn coefficients(self, n: usize) -> Vec<f64> {
        let tau = std::f64::consts::TAU;
        (0..n)
            .map(|i| {
                let x = tau * i as f64 / n as f64;
                match self {
                    WindowFn::Hann => 0.5 - 0.5 * x.cos(),
                    WindowFn::Hamming => 0.54 - 0.46 * x.cos(),
                    WindowFn::Rectangular => 1.0,
                }
            })
            .collect()
    }
}

/// Level scale applied to STFT magnitudes before patching.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    /// `max(0, range + 20 log10(|X| / max|X|))`, so levels span `[0, range]`.
    Db,
    /// `ln(|X| + floor)`.
    Log,
}

/// What the values of a [`Spectrogram`] currently mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumScale {
    Magnitude,
    DbLevel,
    LogMagnitude,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub fft_size: usize,
    pub hop: usize,
    pub window: WindowFn,
    /// Patch width in frames.
    pub window_frames: usize,
    /// Patch start stride in frames.
    pub shift: usize,
    pub scale: Scale,
    pub dynamic_range_db: f64,
    pub log_floor: f64,
    /// Drop frames whose energy is more than this many dB below the loudest
    /// frame of the clip.
    pub trim_silence_db: Option<f64>,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            fft_size: 1024,
            hop: 512,
            window: WindowFn::Hann,
            window_frames: 50,
            shift: 1,
            scale: Scale::Db,
            dynamic_range_db: 120.0,
            log_floor: 1e-10,
            trim_silence_db: None,
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.fft_size < 2 {
            return Err(AdlError::InvalidInput("fft size must be at least 2".into()));
        }
        if self.hop == 0 || self.hop > self.fft_size {
            return Err(AdlError::InvalidInput(format!(
                "hop {} must be in 1..={}",
                self.hop, self.fft_size
            )));
        }
        if self.window_frames == 0 || self.shift == 0 {
            return Err(AdlError::InvalidInput("window frames and shift must be >= 1".into()));
        }
        // written so that NaN fails too
        let positive = |x: f64| x > 0.0;
        if !positive(self.dynamic_range_db) || !positive(self.log_floor) {
            return Err(AdlError::InvalidInput(
                "dynamic range and log floor must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    /// Length of a flattened patch, `bins * window_frames`.
    pub fn feature_dim(&self) -> usize {
        self.bins() * self.window_frames
    }
}

/// Time-frequency matrix, `bins x frames`, column-major by frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub bins: usize,
    pub frames: usize,
    pub values: Vec<f64>,
    pub scale: SpectrumScale,
}

impl Spectrogram {
    pub fn frame(&self, f: usize) -> &[f64] {
        &self.values[f * self.bins..(f + 1) * self.bins]
    }

    pub fn get(&self, bin: usize, frame: usize) -> f64 {
        self.values[frame * self.bins + bin]
    }

    fn map(&self, scale: SpectrumScale, f: impl Fn(f64) -> f64) -> Spectrogram {
        Spectrogram {
            bins: self.bins,
            frames: self.frames,
            values: self.values.iter().map(|&v| f(v)).collect(),
            scale,
        }
    }
}

fn audio_err(path: &Path, e: impl std::fmt::Display) -> AdlError {
    AdlError::Audio(format!("{}: {e}", path.display()))
}

/// Reads a PCM (8/16/24/32-bit integer or 32-bit float) RIFF/WAVE file.
/// Integer samples are divided by `2^(bits-1)`; channels are averaged.
pub fn load_wav(path: &Path) -> Result<AudioClip> {
    let mut reader = hound::WavReader::open(path).map_err(|e| audio_err(path, e))?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    if channels == 0 {
        return Err(audio_err(path, "no channels"));
    }
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Int, bits @ (8 | 16 | 24 | 32)) => {
            let scale = 1.0 / (1u64 << (bits - 1)) as f64;
            reader
                .samples::<i32>()
                .map(|s| s.map(|v| v as f64 * scale))
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| audio_err(path, e))?
        }
        (hound::SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| audio_err(path, e))?,
        (fmt, bits) => {
            return Err(audio_err(path, format!("unsupported sample format {fmt:?} with {bits} bits")))
        }
    };
    if !interleaved.len().is_multiple_of(channels) {
        return Err(audio_err(path, "truncated final frame"));
    }
    let samples: Vec<f64> = interleaved
        .chunks_exact(channels)
        .map(|frame| frame.iter().sum::<f64>() / channels as f64)
        .collect();
    if samples.is_empty() {
        return Err(audio_err(path, "no audio samples"));
    }
    Ok(AudioClip {
        samples,
        sample_rate: spec.sample_rate,
    })
}

/// Magnitude of the non-redundant half spectrum of each windowed frame.
pub fn stft_magnitude(clip: &AudioClip, cfg: &FeatureConfig) -> Result<Spectrogram> {
    cfg.validate()?;
    let n = cfg.fft_size;
    let len = clip.samples.len();
    if len < n {
        return Err(AdlError::InvalidInput(format!(
            "clip too short: {len} samples, need at least {n} for one frame"
        )));
    }
    let frames = (len - n) / cfg.hop + 1;
    let bins = cfg.bins();
    let window = cfg.window.coefficients(n);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
    let mut buf = vec![Complex::new(0.0, 0.0); n];
    let mut scratch = vec![Complex::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let mut values = Vec::with_capacity(bins * frames);
    for f in 0..frames {
        let start = f * cfg.hop;
        for (i, slot) in buf.iter_mut().enumerate() {
            *slot = Complex::new(clip.samples[start + i] * window[i], 0.0);
        }
        fft.process_with_scratch(&mut buf, &mut scratch);
        values.extend(buf[..bins].iter().map(|c| c.norm()));
    }
    Ok(Spectrogram {
        bins,
        frames,
        values,
        scale: SpectrumScale::Magnitude,
    })
}

/// `max(0, range + 20 log10(|X| / max|X|))` with the maximum taken over the
/// whole spectrogram. An all-zero input stays all zero.
pub fn to_db_level(spec: &Spectrogram, dynamic_range_db: f64) -> Spectrogram {
    let peak = spec.values.iter().fold(0.0f64, |m, &v| m.max(v));
    if peak == 0.0 {
        return spec.map(SpectrumScale::DbLevel, |_| 0.0);
    }
    spec.map(SpectrumScale::DbLevel, |v| {
        if v <= 0.0 {
            0.0
        } else {
            (dynamic_range_db + 20.0 * (v / peak).log10()).max(0.0)
        }
    })
}

/// `ln(|X| + floor)`.
pub fn to_log_magnitude(spec: &Spectrogram, floor: f64) -> Spectrogram {
    spec.map(SpectrumScale::LogMagnitude, |v| (v + floor).ln())
}

/// Removes frames whose energy sits more than `threshold_db` below the
/// loudest frame.
pub fn trim_silent_frames(spec: &Spectrogram, threshold_db: f64) -> Spectrogram {
    let energies: Vec<f64> = (0..spec.frames)
        .map(|f| spec.frame(f).iter().map(|v| v * v).sum())
        .collect();
    let peak = energies.iter().fold(0.0f64, |m, &e| m.max(e));
    if peak == 0.0 {
        return spec.clone();
    }
    let floor = peak * 10f64.powf(-threshold_db / 10.0);
    let mut values = Vec::with_capacity(spec.values.len());
    let mut frames = 0;
    for (f, &e) in energies.iter().enumerate() {
        if e >= floor {
            values.extend_from_slice(spec.frame(f));
            frames += 1;
        }
    }
    Spectrogram {
        bins: spec.bins,
        frames,
        values,
        scale: spec.scale,
    }
}

/// Number of patches of width `w` at stride `shift` over `frames` frames.
pub fn patch_count(frames: usize, w: usize, shift: usize) -> usize {
    if frames < w || w == 0 || shift == 0 {
        0
    } else {
        (frames - w) / shift + 1
    }
}

/// Patches starting at frames `0, shift, 2 shift, ...`, one per column.
pub fn extract_patches(spec: &Spectrogram, w: usize, shift: usize) -> Result<Mat> {
    if w == 0 || shift == 0 {
        return Err(AdlError::InvalidInput("window frames and shift must be >= 1".into()));
    }
    if spec.frames < w {
        return Err(AdlError::InvalidInput(format!(
            "clip too short: {} frames, need at least {w} for one patch",
            spec.frames
        )));
    }
    let count = patch_count(spec.frames, w, shift);
    let len = spec.bins * w;
    let mut data = Vec::with_capacity(len * count);
    for p in 0..count {
        let start = p * shift * spec.bins;
        data.extend_from_slice(&spec.values[start..start + len]);
    }
    Mat::from_col_major(len, count, data)
}

/// Inverse of the patch layout: the frames of a flattened patch.
pub fn patch_to_frames(patch: &[f64], bins: usize) -> Vec<Vec<f64>> {
    patch.chunks(bins).map(<[f64]>::to_vec).collect()
}

/// Full pipeline from a clip to its patch matrix.
pub fn clip_features(clip: &AudioClip, cfg: &FeatureConfig) -> Result<Mat> {
    let raw = stft_magnitude(clip, cfg)?;
    let raw = match cfg.trim_silence_db {
        Some(t) => trim_silent_frames(&raw, t),
        None => raw,
    };
    let scaled = match cfg.scale {
        Scale::Db => to_db_level(&raw, cfg.dynamic_range_db),
        Scale::Log => to_log_magnitude(&raw, cfg.log_floor),
    };
    extract_patches(&scaled, cfg.window_frames, cfg.shift)
}
