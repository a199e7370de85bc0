//! Greedy L0 sparse coding (orthogonal matching pursuit) and a brute-force
//! reference encoder used to check it.

use rayon::prelude::*;

use crate::dict_update::Dictionary;
use crate::error::{AdlError, Result};
use crate::linalg::{least_squares_on_support, norm, Mat};

/// OMP stops early once `||r|| <= STOP_TOL * ||y||`.
pub const STOP_TOL: f64 = 1e-7;
/// Number of nonzero coefficients used for training and testing.
pub const DEFAULT_SPARSITY: usize = 2;

const EXHAUSTIVE_MAX_ATOMS: usize = 24;
const EXHAUSTIVE_MAX_SPARSITY: usize = 3;

/// A length-`k` coefficient vector stored by its nonzero entries.
///
/// `indices` keeps the order in which atoms were selected.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseCode {
    len: usize,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseCode {
    pub fn new(len: usize, indices: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if indices.len() != values.len() {
            return Err(AdlError::Shape(format!(
                "{} indices but {} values",
                indices.len(),
                values.len()
            )));
        }
        let mut seen = vec![false; len];
        for &i in &indices {
            if i >= len {
                return Err(AdlError::InvalidInput(format!("index {i} out of range 0..{len}")));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(AdlError::InvalidInput(format!("index {i} repeated")));
            }
        }
        Ok(SparseCode {
            len,
            indices,
            values,
        })
    }

    pub fn empty(len: usize) -> Self {
        SparseCode {
            len,
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Length of the dense vector (the atom count).
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    pub fn support_sorted(&self) -> Vec<usize> {
        let mut s = self.indices.clone();
        s.sort_unstable();
        s
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.len];
        for (i, v) in self.iter() {
            out[i] = v;
        }
        out
    }
}

/// Codes for a batch of samples, one [`SparseCode`] per column.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseCodeMatrix {
    atoms: usize,
    columns: Vec<SparseCode>,
}

impl SparseCodeMatrix {
    pub fn new(atoms: usize, columns: Vec<SparseCode>) -> Result<Self> {
        if let Some(bad) = columns.iter().position(|c| c.len() != atoms) {
            return Err(AdlError::Shape(format!(
                "code {bad} has length {}, expected {atoms}",
                columns[bad].len()
            )));
        }
        Ok(SparseCodeMatrix { atoms, columns })
    }

    pub fn zeros(atoms: usize, samples: usize) -> Self {
        SparseCodeMatrix {
            atoms,
            columns: vec![SparseCode::empty(atoms); samples],
        }
    }

    pub fn atoms(&self) -> usize {
        self.atoms
    }

    /// Number of samples.
    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn column(&self, j: usize) -> &SparseCode {
        &self.columns[j]
    }

    pub fn iter(&self) -> std::slice::Iter<'_, SparseCode> {
        self.columns.iter()
    }

    /// Dense `k x N` matrix.
    pub fn to_dense(&self) -> Mat {
        let mut out = Mat::zeros(self.atoms.max(1), self.columns.len());
        for (j, code) in self.columns.iter().enumerate() {
            for (i, v) in code.iter() {
                out.set(i, j, v);
            }
        }
        out
    }
}

/// Result of a traced OMP run.
#[derive(Debug, Clone)]
pub struct OmpOutcome {
    pub code: SparseCode,
    /// `||r||` before the first step and after every accepted step.
    pub residual_norms: Vec<f64>,
    pub rank_deficient: bool,
}

impl OmpOutcome {
    pub fn residual_norm(&self) -> f64 {
        *self.residual_norms.last().expect("at least the initial norm")
    }
}

/// Encodes `y` with at most `sparsity` atoms of `dict`.
pub fn omp_encode(dict: &Dictionary, y: &[f64], sparsity: usize) -> Result<SparseCode> {
    omp_encode_traced(dict, y, sparsity, STOP_TOL).map(|o| o.code)
}

/// OMP with the per-step residual history.
///
/// Each step picks the atom with the largest `|d_j^T r|` (lowest index on
/// ties) and refits all selected coefficients by least squares.
pub fn omp_encode_traced(
    dict: &Dictionary,
    y: &[f64],
    sparsity: usize,
    stop_tol: f64,
) -> Result<OmpOutcome> {
    let d = dict.atoms();
    let (m, k) = (d.rows(), d.cols());
    if sparsity == 0 {
        return Err(AdlError::InvalidInput("sparsity must be at least 1".into()));
    }
    if y.len() != m {
        return Err(AdlError::Shape(format!(
            "signal length {} does not match atom length {m}",
            y.len()
        )));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(AdlError::NonFinite("signal contains NaN or Inf".into()));
    }

    let y_norm = norm(y);
    let mut residual = y.to_vec();
    let mut residual_norms = vec![y_norm];
    let mut support: Vec<usize> = Vec::with_capacity(sparsity);
    let mut coefficients = vec![0.0; k];
    let mut rank_deficient = false;

    let max_steps = sparsity.min(k).min(m);
    while support.len() < max_steps {
        let r_norm = *residual_norms.last().unwrap();
        if r_norm <= stop_tol * y_norm || r_norm == 0.0 {
            break;
        }
        let corr = d.tr_matvec(&residual)?;
        let mut best = 0;
        let mut best_abs = -1.0;
        for (j, c) in corr.iter().enumerate() {
            if c.abs() > best_abs {
                best = j;
                best_abs = c.abs();
            }
        }
        if best_abs <= 0.0 || support.contains(&best) {
            break;
        }
        support.push(best);
        let sol = least_squares_on_support(d, y, &support)?;
        rank_deficient |= sol.rank_deficient;
        residual = sol.residual;
        coefficients = sol.coefficients;
        residual_norms.push(norm(&residual));
    }

    let values = support.iter().map(|&j| coefficients[j]).collect();
    Ok(OmpOutcome {
        code: SparseCode {
            len: k,
            indices: support,
            values,
        },
        residual_norms,
        rank_deficient,
    })
}

/// Column-wise OMP over every sample in `y`. Columns may be coded in
/// parallel; the result equals sequential coding.
pub fn batch_encode(dict: &Dictionary, y: &Mat, sparsity: usize) -> Result<SparseCodeMatrix> {
    if y.rows() != dict.dim() {
        return Err(AdlError::Shape(format!(
            "samples have {} rows, atoms have {}",
            y.rows(),
            dict.dim()
        )));
    }
    let columns = (0..y.cols())
        .into_par_iter()
        .map(|j| omp_encode(dict, y.col(j), sparsity).map_err(|e| e.at_column(j)))
        .collect::<Result<Vec<_>>>()?;
    Ok(SparseCodeMatrix {
        atoms: dict.len(),
        columns,
    })
}

/// Globally optimal code of at most `sparsity` atoms, by enumeration.
///
/// Only meant as a test oracle; refuses `k > 24` or `sparsity > 3`.
pub fn exhaustive_encode(dict: &Dictionary, y: &[f64], sparsity: usize) -> Result<SparseCode> {
    let d = dict.atoms();
    let (m, k) = (d.rows(), d.cols());
    if k > EXHAUSTIVE_MAX_ATOMS || sparsity > EXHAUSTIVE_MAX_SPARSITY || sparsity == 0 {
        return Err(AdlError::InvalidInput(format!(
            "exhaustive search limited to k <= {EXHAUSTIVE_MAX_ATOMS} and 1 <= L <= {EXHAUSTIVE_MAX_SPARSITY} (got k = {k}, L = {sparsity})"
        )));
    }
    if y.len() != m {
        return Err(AdlError::Shape(format!(
            "signal length {} does not match atom length {m}",
            y.len()
        )));
    }

    let mut best_code = SparseCode::empty(k);
    let mut best_res = norm(y);
    let mut support = Vec::with_capacity(sparsity);
    for size in 1..=sparsity.min(m).min(k) {
        for_each_subset(k, size, &mut support, &mut |s| {
            let sol = least_squares_on_support(d, y, s)?;
            let r = norm(&sol.residual);
            if r < best_res {
                best_res = r;
                best_code = SparseCode {
                    len: k,
                    indices: s.to_vec(),
                    values: s.iter().map(|&j| sol.coefficients[j]).collect(),
                };
            }
            Ok(())
        })?;
    }
    Ok(best_code)
}

fn for_each_subset(
    n: usize,
    size: usize,
    current: &mut Vec<usize>,
    visit: &mut dyn FnMut(&[usize]) -> Result<()>,
) -> Result<()> {
    if current.len() == size {
        return visit(current);
    }
    let start = current.last().map_or(0, |&l| l + 1);
    let remaining = size - current.len();
    for i in start..=(n - remaining) {
        current.push(i);
        for_each_subset(n, size, current, visit)?;
        current.pop();
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dot;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_dict(rng: &mut ChaCha8Rng, m: usize, k: usize) -> Dictionary {
        let data = (0..m * k).map(|_| rng.random_range(-1.0..1.0)).collect();
        Dictionary::normalized(Mat::from_col_major(m, k, data).unwrap()).unwrap()
    }

    fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    #[test]
    fn exact_atom_is_recovered() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let d = random_dict(&mut rng, 10, 8);
        let y = d.atom(5).to_vec();
        let out = omp_encode_traced(&d, &y, 1, STOP_TOL).unwrap();
        assert_eq!(out.code.indices(), &[5]);
        assert!((out.code.values()[0] - 1.0).abs() < 1e-12);
        assert!(out.residual_norm() < 1e-12);
    }

    #[test]
    fn zero_signal_gives_empty_code() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let d = random_dict(&mut rng, 6, 4);
        let code = omp_encode(&d, &[0.0; 6], 2).unwrap();
        assert!(code.is_empty());
        assert_eq!(code.len(), 4);
    }

    #[test]
    fn orthonormal_picks_largest_inner_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let d = crate::synthetic::random_orthonormal(&mut rng, 8);
        let y = random_vec(&mut rng, 8);
        let corr = d.atoms().tr_matvec(&y).unwrap();
        let mut order: Vec<usize> = (0..8).collect();
        order.sort_by(|&a, &b| corr[b].abs().total_cmp(&corr[a].abs()));
        let code = omp_encode(&d, &y, 2).unwrap();
        assert_eq!(code.indices(), &order[..2]);
        for (i, v) in code.iter() {
            assert!((v - corr[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let d = Dictionary::new(Mat::identity(3)).unwrap();
        let code = omp_encode(&d, &[1.0, 1.0, 1.0], 1).unwrap();
        assert_eq!(code.indices(), &[0]);
    }

    #[test]
    fn sparsity_zero_and_shape_errors() {
        let d = Dictionary::new(Mat::identity(3)).unwrap();
        assert!(omp_encode(&d, &[1.0, 0.0, 0.0], 0).is_err());
        assert!(omp_encode(&d, &[1.0, 0.0], 1).is_err());
        assert!(omp_encode(&d, &[f64::NAN, 0.0, 0.0], 1).is_err());
    }

    #[test]
    fn batch_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let d = random_dict(&mut rng, 8, 16);
        let y = Mat::from_columns(8, &[d.atom(1).to_vec(), d.atom(2).to_vec()]).unwrap();
        let codes = batch_encode(&d, &y, 1).unwrap();
        assert_eq!(codes.column(0).indices(), &[1]);
        assert_eq!(codes.column(1).indices(), &[2]);
        assert!((codes.column(0).values()[0] - 1.0).abs() < 1e-12);

        let empty = batch_encode(&d, &Mat::zeros(8, 0), 2).unwrap();
        assert!(empty.is_empty());

        let cols: Vec<Vec<f64>> = (0..20).map(|_| random_vec(&mut rng, 8)).collect();
        let y = Mat::from_columns(8, &cols).unwrap();
        let batch = batch_encode(&d, &y, 2).unwrap();
        for (j, c) in cols.iter().enumerate() {
            assert_eq!(batch.column(j), &omp_encode(&d, c, 2).unwrap());
        }
    }

    #[test]
    fn batch_error_names_column() {
        let d = Dictionary::new(Mat::identity(2)).unwrap();
        let y = Mat::identity(3);
        assert!(matches!(batch_encode(&d, &y, 1), Err(AdlError::Shape(_))));
        let err = batch_encode(&d, &Mat::identity(2), 0).unwrap_err();
        assert!(matches!(err, AdlError::Column { column: 0, .. }));
    }

    #[test]
    fn exhaustive_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let d = random_dict(&mut rng, 12, 10);
        let y = d.atom(2).to_vec();
        let code = exhaustive_encode(&d, &y, 2).unwrap();
        assert!(code.indices().contains(&2));

        let y: Vec<f64> = d
            .atom(1)
            .iter()
            .zip(d.atom(4))
            .map(|(a, b)| 0.7 * a + 0.3 * b)
            .collect();
        let code = exhaustive_encode(&d, &y, 2).unwrap();
        assert_eq!(code.support_sorted(), vec![1, 4]);
        let r: Vec<f64> = y
            .iter()
            .zip(d.reconstruct(&code))
            .map(|(a, b)| a - b)
            .collect();
        assert!(norm(&r) <= 1e-10);
    }

    #[test]
    fn exhaustive_guard() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let d = random_dict(&mut rng, 30, 25);
        assert!(exhaustive_encode(&d, &random_vec(&mut rng, 30), 2).is_err());
        let d = random_dict(&mut rng, 10, 8);
        assert!(exhaustive_encode(&d, &random_vec(&mut rng, 10), 4).is_err());
    }

    #[test]
    fn residual_is_orthogonal_to_selected_atoms() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let d = random_dict(&mut rng, 20, 30);
        let y = random_vec(&mut rng, 20);
        let code = omp_encode(&d, &y, 3).unwrap();
        let r: Vec<f64> = y.iter().zip(d.reconstruct(&code)).map(|(a, b)| a - b).collect();
        for &j in code.indices() {
            assert!(dot(d.atom(j), &r).abs() < 1e-10);
        }
    }
}
