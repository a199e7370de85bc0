//! Class-specific sparse dictionaries for audio classification.
//!
//! Every class gets its own dictionary. Training can penalize how well a
//! dictionary represents the other classes (weight `rho`), which sharpens the
//! residual comparison used at classification time. The numerical pieces are
//! usable on their own:
//!
//! - [`linalg`]: a column-major matrix, a symmetric Jacobi eigensolver and
//!   least squares on a column subset.
//! - [`sparse_coding`]: orthogonal matching pursuit.
//! - [`dict_update`]: update operands, convexification and the column-wise
//!   unit-norm update.
//! - [`trainer`]: the reconstructive and adversarial training schedules.
//! - [`classifier`]: minimum-residual decisions and per-clip voting.
//! - [`features`]: STFT magnitudes, level scaling and spectrogram patches.
//! - [`cli`]: the `adl` command line, model files and evaluation.
//!
//! ```
//! use adl::linalg::{min_eig_sym, Mat, EIG_TOL};
//!
//! let m = Mat::from_rows(&[&[2.0, 1.0], &[1.0, 2.0]]).unwrap();
//! let eig = min_eig_sym(&m, EIG_TOL).unwrap();
//! assert!((eig.min_eigenvalue - 1.0).abs() < 1e-12);
//! ```

pub mod classifier;
pub mod cli;
pub mod dict_update;
pub mod error;
pub mod features;
pub mod linalg;
pub mod sparse_coding;
pub mod synthetic;
pub mod trainer;

pub use classifier::{classify, classify_clip, Model};
pub use dict_update::Dictionary;
pub use error::{AdlError, Result};
pub use features::{clip_features, FeatureConfig};
pub use linalg::Mat;
pub use sparse_coding::{omp_encode, SparseCode};
pub use trainer::{train, Algorithm, TrainConfig};
