//! From samples to patches: STFT magnitude, dB level scaling and the
//! frame-major patch layout.
//!
//! cargo run --release --example spectrogram_patches

use adl::features::{extract_patches, patch_to_frames, stft_magnitude, to_db_level, AudioClip, FeatureConfig};
use adl::synthetic::tone_clip;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> adl::Result<()> {
    let sr = 16000;
    let samples = tone_clip(&mut ChaCha8Rng::seed_from_u64(5), &[440.0, 1250.0], sr, 2.0, 0.05);
    let clip = AudioClip { samples, sample_rate: sr };
    let cfg = FeatureConfig::default();

    let spec = stft_magnitude(&clip, &cfg)?;
    let db = to_db_level(&spec, cfg.dynamic_range_db);
    let loudest = (0..db.bins).max_by(|&a, &b| db.get(a, 0).total_cmp(&db.get(b, 0))).unwrap_or(0);
    println!(
        "{} bins x {} frames, loudest bin of frame 0: {loudest} ({:.1} Hz)",
        db.bins,
        db.frames,
        loudest as f64 * sr as f64 / cfg.fft_size as f64
    );

    let patches = extract_patches(&db, cfg.window_frames, cfg.shift)?;
    println!("{} patches of length {} ({} frames each)", patches.cols(), patches.rows(), cfg.window_frames);
    let frames = patch_to_frames(patches.col(3), db.bins);
    assert_eq!(frames[0].as_slice(), db.frame(3 * cfg.shift));
    println!("patch 3 starts at frame {}", 3 * cfg.shift);
    Ok(())
}
