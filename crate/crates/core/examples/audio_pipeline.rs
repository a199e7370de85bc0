//! Train, save, reload and evaluate on a generated directory-per-class WAV
//! corpus, through the same functions the `adl` binary calls.
//!
//! cargo run --release --example audio_pipeline

use adl::cli::commands::{cmd_classify, cmd_eval, cmd_train};
use adl::features::FeatureConfig;
use adl::synthetic::{write_tone_corpus, ToneClass};
use adl::trainer::TrainConfig;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> adl::Result<()> {
    let root = std::env::temp_dir().join("adl_audio_pipeline");
    let (train_dir, test_dir) = (root.join("train"), root.join("test"));
    let classes = [
        ToneClass { label: "hum".into(), frequencies_hz: vec![60.0, 120.0, 180.0] },
        ToneClass { label: "chirp".into(), frequencies_hz: vec![3000.0, 4100.0] },
        ToneClass { label: "chord".into(), frequencies_hz: vec![440.0, 554.4, 659.3] },
    ];
    let _ = std::fs::remove_dir_all(&root);
    write_tone_corpus(&mut ChaCha8Rng::seed_from_u64(1), &train_dir, &classes, 8, 16000, 2.0, 0.2)?;
    write_tone_corpus(&mut ChaCha8Rng::seed_from_u64(2), &test_dir, &classes, 4, 16000, 2.0, 0.2)?;

    let model = root.join("model.adl");
    let mut out = std::io::stdout();
    let cfg = TrainConfig { max_outer_iters: 10, ..TrainConfig::default() };
    cmd_train(&train_dir, &cfg, &FeatureConfig::default(), &model, &mut out)?;
    cmd_classify(&model, &test_dir.join("chord/clip_000.wav"), &mut out)?;
    cmd_eval(&model, &test_dir, None, &mut out)?;
    Ok(())
}
