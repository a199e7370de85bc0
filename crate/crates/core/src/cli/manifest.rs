//! Directory-per-class datasets and stratified fold assignment.

use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{AdlError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestClass {
    pub label: String,
    pub files: Vec<PathBuf>,
}

/// `root/<label>/*.wav`, classes and files sorted by name.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub root: PathBuf,
    pub classes: Vec<ManifestClass>,
}

impl DatasetManifest {
    /// Scans a training corpus: at least two classes, each with at least one
    /// WAV file.
    pub fn scan(root: &Path) -> Result<Self> {
        let m = Self::scan_lenient(root)?;
        if m.classes.len() < 2 {
            return Err(AdlError::Dataset(format!(
                "{}: need at least two class directories, found {}",
                root.display(),
                m.classes.len()
            )));
        }
        let empty: Vec<&str> = m
            .classes
            .iter()
            .filter(|c| c.files.is_empty())
            .map(|c| c.label.as_str())
            .collect();
        if !empty.is_empty() {
            return Err(AdlError::Dataset(format!(
                "{}: class directories without WAV files: {}",
                root.display(),
                empty.join(", ")
            )));
        }
        Ok(m)
    }

    /// Scans without the size requirements (used for test sets).
    pub fn scan_lenient(root: &Path) -> Result<Self> {
        let entries = fs::read_dir(root)
            .map_err(|e| AdlError::Dataset(format!("{}: {e}", root.display())))?;
        let mut dirs: Vec<PathBuf> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_dir())
            .collect();
        dirs.sort();
        let mut classes = Vec::with_capacity(dirs.len());
        for dir in dirs {
            let label = dir
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default();
            let mut files: Vec<PathBuf> = fs::read_dir(&dir)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| {
                    p.is_file()
                        && p.extension()
                            .is_some_and(|x| x.to_string_lossy().eq_ignore_ascii_case("wav"))
                })
                .collect();
            files.sort();
            classes.push(ManifestClass { label, files });
        }
        Ok(DatasetManifest {
            root: root.to_path_buf(),
            classes,
        })
    }

    pub fn labels(&self) -> Vec<String> {
        self.classes.iter().map(|c| c.label.clone()).collect()
    }

    pub fn total_files(&self) -> usize {
        self.classes.iter().map(|c| c.files.len()).sum()
    }
}

/// `(class, file)` index pair into a manifest.
pub type FileRef = (usize, usize);

/// `fold_of[class][file]` is the fold that file is held out in.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldAssignment {
    pub folds: usize,
    pub fold_of: Vec<Vec<usize>>,
}

impl FoldAssignment {
    /// `(class, file)` pairs for training and testing on `fold`.
    pub fn split(&self, fold: usize) -> (Vec<FileRef>, Vec<FileRef>) {
        let mut train = Vec::new();
        let mut test = Vec::new();
        for (c, files) in self.fold_of.iter().enumerate() {
            for (f, &k) in files.iter().enumerate() {
                if k == fold {
                    test.push((c, f));
                } else {
                    train.push((c, f));
                }
            }
        }
        (train, test)
    }
}

/// Shuffles each class (seeded) and deals its files round-robin into
/// `folds` folds.
pub fn stratified_kfold(manifest: &DatasetManifest, folds: usize, seed: u64) -> Result<FoldAssignment> {
    if folds < 2 {
        return Err(AdlError::InvalidInput(format!("need at least 2 folds, got {folds}")));
    }
    let mut fold_of = Vec::with_capacity(manifest.classes.len());
    for (c, class) in manifest.classes.iter().enumerate() {
        let n = class.files.len();
        if n < folds {
            return Err(AdlError::Dataset(format!(
                "class {:?} has {n} files, fewer than {folds} folds",
                class.label
            )));
        }
        let mut order: Vec<usize> = (0..n).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(c as u64));
        order.shuffle(&mut rng);
        let mut assignment = vec![0; n];
        for (pos, &file) in order.iter().enumerate() {
            assignment[file] = pos % folds;
        }
        fold_of.push(assignment);
    }
    Ok(FoldAssignment { folds, fold_of })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fake_manifest(sizes: &[usize]) -> DatasetManifest {
        DatasetManifest {
            root: PathBuf::from("/nowhere"),
            classes: sizes
                .iter()
                .enumerate()
                .map(|(c, &n)| ManifestClass {
                    label: format!("c{c}"),
                    files: (0..n).map(|i| PathBuf::from(format!("c{c}/{i}.wav"))).collect(),
                })
                .collect(),
        }
    }

    #[test]
    fn gtzan_shape_gives_ten_per_fold() {
        let m = fake_manifest(&[100; 10]);
        let a = stratified_kfold(&m, 10, 3).unwrap();
        for fold in 0..10 {
            let (train, test) = a.split(fold);
            assert_eq!(test.len(), 100);
            assert_eq!(train.len(), 900);
            for c in 0..10 {
                assert_eq!(test.iter().filter(|(cc, _)| *cc == c).count(), 10);
            }
        }
    }

    #[test]
    fn folds_partition_and_are_deterministic() {
        let m = fake_manifest(&[7, 5, 11]);
        let a = stratified_kfold(&m, 3, 9).unwrap();
        assert_eq!(a, stratified_kfold(&m, 3, 9).unwrap());
        let mut seen = vec![vec![0; 11]; 3];
        for fold in 0..3 {
            for (c, f) in a.split(fold).1 {
                seen[c][f] += 1;
            }
        }
        for (c, n) in [7, 5, 11].iter().enumerate() {
            assert!(seen[c][..*n].iter().all(|&v| v == 1));
        }
        // per-class counts per fold differ by at most one
        for (c, &n) in [7usize, 5, 11].iter().enumerate() {
            for fold in 0..3 {
                let cnt = a.fold_of[c].iter().filter(|&&k| k == fold).count();
                assert!(cnt == n / 3 || cnt == n / 3 + 1);
            }
        }
    }

    #[test]
    fn fold_errors() {
        let m = fake_manifest(&[5, 2]);
        assert!(stratified_kfold(&m, 1, 0).is_err());
        let err = stratified_kfold(&m, 3, 0).unwrap_err();
        assert!(err.to_string().contains("\"c1\""));
    }
}
