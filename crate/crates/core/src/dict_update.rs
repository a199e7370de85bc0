//! Dictionary update with the adversarial cross-reconstruction term.
//!
//! With codes fixed, the per-class objective
//!
//! ```text
//! (1/N) ||Y_c - D S_c||_F^2 - (rho/N') ||Y' - D S'||_F^2
//! ```
//!
//! equals `-2 tr(A D^T) + tr(D B D^T)` plus a constant, where
//! `A = (1/N) Y_c S_c^T - (rho/N') Y' S'^T` and `B = (1/N) S_c S_c^T - (rho/N') S' S'^T`.
//! `B` can be indefinite, so it is replaced by `B - lambda_min(B) I`, which is
//! PSD and leaves the objective unchanged up to a constant as long as every
//! atom has unit norm. The column-wise block coordinate descent below then
//! minimizes the shifted surrogate.

use crate::error::{AdlError, Result};
use crate::linalg::{axpy, dot, frob_sq, min_eig_sym, norm, trace_prod, Mat, EIG_TOL};
use crate::sparse_coding::{SparseCode, SparseCodeMatrix};

/// Tolerance on `||d_j|| = 1`.
pub const UNIT_NORM_TOL: f64 = 1e-9;
/// Columns whose shifted diagonal entry is at or below this get no update.
pub const EPS_DIAG: f64 = 1e-10;
/// Update vectors at or below this norm are treated as an unused atom.
pub const EPS_NORM: f64 = 1e-12;

/// `m x k` matrix whose columns (atoms) have unit Euclidean norm.
#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary {
    atoms: Mat,
}

impl Dictionary {
    /// Wraps `atoms`, rejecting columns whose norm is off by more than
    /// [`UNIT_NORM_TOL`].
    pub fn new(atoms: Mat) -> Result<Self> {
        for (j, c) in atoms.columns().enumerate() {
            let n = norm(c);
            if (n - 1.0).abs() > UNIT_NORM_TOL {
                return Err(AdlError::InvalidInput(format!("atom {j} has norm {n}")));
            }
        }
        if atoms.cols() == 0 {
            return Err(AdlError::InvalidInput("dictionary needs at least one atom".into()));
        }
        Ok(Dictionary { atoms })
    }

    /// Scales every column to unit norm. Zero columns are an error.
    pub fn normalized(mut atoms: Mat) -> Result<Self> {
        for j in 0..atoms.cols() {
            let c = atoms.col_mut(j);
            let n = norm(c);
            if n == 0.0 {
                return Err(AdlError::InvalidInput(format!("atom {j} is zero")));
            }
            c.iter_mut().for_each(|v| *v /= n);
        }
        Dictionary::new(atoms)
    }

    pub fn atoms(&self) -> &Mat {
        &self.atoms
    }

    pub fn into_mat(self) -> Mat {
        self.atoms
    }

    /// Feature dimension `m`.
    pub fn dim(&self) -> usize {
        self.atoms.rows()
    }

    /// Atom count `k`.
    pub fn len(&self) -> usize {
        self.atoms.cols()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.cols() == 0
    }

    pub fn atom(&self, j: usize) -> &[f64] {
        self.atoms.col(j)
    }

    /// `D * alpha`
    pub fn reconstruct(&self, code: &SparseCode) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        for (j, v) in code.iter() {
            axpy(v, self.atom(j), &mut out);
        }
        out
    }

    /// `||y - D alpha||^2`
    pub fn residual_sq(&self, y: &[f64], code: &SparseCode) -> f64 {
        y.iter()
            .zip(self.reconstruct(code))
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }

    /// Replaces atom `j` by `v / ||v||`.
    pub(crate) fn set_atom_normalized(&mut self, j: usize, v: &[f64]) {
        let n = norm(v);
        debug_assert!(n > 0.0);
        for (d, x) in self.atoms.col_mut(j).iter_mut().zip(v) {
            *d = x / n;
        }
    }
}

/// Samples of one class together with their codes over the dictionary being
/// updated.
#[derive(Debug, Clone, Copy)]
pub struct CodedSamples<'a> {
    pub signals: &'a Mat,
    pub codes: &'a SparseCodeMatrix,
}

impl<'a> CodedSamples<'a> {
    pub fn new(signals: &'a Mat, codes: &'a SparseCodeMatrix) -> Self {
        CodedSamples { signals, codes }
    }

    fn check(&self, m: usize, k: usize) -> Result<()> {
        if self.signals.cols() != self.codes.len() {
            return Err(AdlError::Shape(format!(
                "{} signals but {} codes",
                self.signals.cols(),
                self.codes.len()
            )));
        }
        if self.signals.rows() != m {
            return Err(AdlError::Shape(format!(
                "signals have {} rows, expected {m}",
                self.signals.rows()
            )));
        }
        if self.codes.atoms() != k {
            return Err(AdlError::Shape(format!(
                "codes have {} atoms, expected {k}",
                self.codes.atoms()
            )));
        }
        Ok(())
    }

    /// `(Y S^T, S S^T)` without normalization.
    fn moments(&self) -> (Mat, Mat) {
        let (m, k) = (self.signals.rows(), self.codes.atoms());
        let mut ys = Mat::zeros(m, k);
        let mut ss = Mat::zeros(k, k);
        for (i, code) in self.codes.iter().enumerate() {
            let y = self.signals.col(i);
            for (a, va) in code.iter() {
                axpy(va, y, ys.col_mut(a));
                for (b, vb) in code.iter() {
                    let cur = ss.get(b, a);
                    ss.set(b, a, cur + va * vb);
                }
            }
        }
        (ys, ss)
    }
}

/// Operands of the dictionary-update surrogate.
#[derive(Debug, Clone)]
pub struct UpdateOperands {
    /// `m x k`
    pub a: Mat,
    /// `k x k`, symmetric
    pub b: Mat,
    /// `b - lambda_min * I`, PSD
    pub b_bar: Mat,
    pub lambda_min: f64,
}

/// Operands for one class against a single off-class batch.
pub fn build_operands_binary(
    own: CodedSamples<'_>,
    off: CodedSamples<'_>,
    rho: f64,
) -> Result<UpdateOperands> {
    build_operands_multiclass_batch(own, &[off], rho)
}

/// Operands for one class against several off-classes, each adversarial term
/// normalized by its own sample count:
/// `A = (1/N_i) Y_i S_i^T - sum_j (rho/N_j) Y_j S_j^T`, likewise for `B`.
///
/// An empty `off` list (or `rho == 0`) yields the purely reconstructive
/// operands.
pub fn build_operands_multiclass_batch(
    own: CodedSamples<'_>,
    off: &[CodedSamples<'_>],
    rho: f64,
) -> Result<UpdateOperands> {
    if !(rho >= 0.0 && rho.is_finite()) {
        return Err(AdlError::InvalidInput(format!("rho must be finite and >= 0, got {rho}")));
    }
    let m = own.signals.rows();
    let k = own.codes.atoms();
    own.check(m, k)?;
    let n_own = own.codes.len();
    if n_own == 0 {
        return Err(AdlError::InvalidInput("own class has no samples".into()));
    }
    for (j, o) in off.iter().enumerate() {
        o.check(m, k).map_err(|e| e.at_column(j))?;
        if rho > 0.0 && o.codes.is_empty() {
            return Err(AdlError::InvalidInput(format!("off-class batch {j} has no samples")));
        }
    }

    let (ys, ss) = own.moments();
    let mut a = ys.scaled(1.0 / n_own as f64);
    let mut b = ss.scaled(1.0 / n_own as f64);
    if rho > 0.0 {
        for o in off {
            let w = rho / o.codes.len() as f64;
            let (ys, ss) = o.moments();
            a = a.sub(&ys.scaled(w))?;
            b = b.sub(&ss.scaled(w))?;
        }
    }
    let b = b.symmetrized()?;
    let lambda_min = min_eig_sym(&b, EIG_TOL)?.min_eigenvalue;
    let b_bar = b.sub(&Mat::identity(k).scaled(lambda_min))?;
    Ok(UpdateOperands {
        a,
        b,
        b_bar,
        lambda_min,
    })
}

/// Output of [`bcd_update`].
#[derive(Debug, Clone)]
pub struct BcdOutcome {
    pub dictionary: Dictionary,
    /// Atoms that received no valid update (vanishing `B_bar[j][j]` or update
    /// vector); they are left as they were and should be re-initialized.
    pub flagged: Vec<usize>,
}

/// Block coordinate descent on `-2 tr(A D^T) + tr(D B_bar D^T)` over unit-norm
/// atoms, warm-started from `dict`.
///
/// For each column `u = d_j + (a_j - D b_j) / B_bar[j][j]`, then
/// `d_j = u / ||u||`. Columns are visited in order and each update sees the
/// columns already refreshed in the same sweep.
pub fn bcd_update(dict: &Dictionary, ops: &UpdateOperands, sweeps: usize) -> Result<BcdOutcome> {
    check_operands(dict, ops)?;
    let (m, k) = (dict.dim(), dict.len());
    let mut d = dict.atoms.clone();
    let mut flagged = vec![false; k];
    let mut u = vec![0.0; m];
    for _ in 0..sweeps {
        for j in 0..k {
            let bjj = ops.b_bar.get(j, j);
            if bjj <= EPS_DIAG {
                flagged[j] = true;
                continue;
            }
            // u = d_j + (a_j - D b_j) / bjj
            u.copy_from_slice(ops.a.col(j));
            for (l, &blj) in ops.b_bar.col(j).iter().enumerate() {
                if blj != 0.0 {
                    axpy(-blj, d.col(l), &mut u);
                }
            }
            for (ui, di) in u.iter_mut().zip(d.col(j)) {
                *ui = di + *ui / bjj;
            }
            let nu = norm(&u);
            if !nu.is_finite() {
                return Err(AdlError::NonFinite(format!("update vector for atom {j}")).at_column(j));
            }
            if nu <= EPS_NORM {
                flagged[j] = true;
                continue;
            }
            for (dst, ui) in d.col_mut(j).iter_mut().zip(&u) {
                *dst = ui / nu;
            }
        }
    }
    Ok(BcdOutcome {
        dictionary: Dictionary { atoms: d },
        flagged: (0..k).filter(|&j| flagged[j]).collect(),
    })
}

fn check_operands(dict: &Dictionary, ops: &UpdateOperands) -> Result<()> {
    let (m, k) = (dict.dim(), dict.len());
    if ops.a.rows() != m || ops.a.cols() != k || ops.b_bar.rows() != k || ops.b_bar.cols() != k {
        return Err(AdlError::Shape(format!(
            "operands A {}x{}, B_bar {}x{} do not fit a {m}x{k} dictionary",
            ops.a.rows(),
            ops.a.cols(),
            ops.b_bar.rows(),
            ops.b_bar.cols()
        )));
    }
    Ok(())
}

fn quadratic_value(dict: &Dictionary, a: &Mat, b: &Mat) -> f64 {
    let d = &dict.atoms;
    let k = d.cols();
    let mut quad = 0.0;
    for j in 0..k {
        for l in 0..k {
            let blj = b.get(l, j);
            if blj != 0.0 {
                quad += blj * dot(d.col(l), d.col(j));
            }
        }
    }
    -2.0 * trace_prod(a, d).expect("shapes checked") + quad
}

/// `-2 tr(A D^T) + tr(D B_bar D^T)`; the constant part of the objective is
/// left out.
pub fn surrogate_value(dict: &Dictionary, ops: &UpdateOperands) -> Result<f64> {
    check_operands(dict, ops)?;
    Ok(quadratic_value(dict, &ops.a, &ops.b_bar))
}

/// Same as [`surrogate_value`] but with the unshifted `B`.
pub fn surrogate_value_unshifted(dict: &Dictionary, ops: &UpdateOperands) -> Result<f64> {
    check_operands(dict, ops)?;
    Ok(quadratic_value(dict, &ops.a, &ops.b))
}

fn residual_energy(dict: &Dictionary, block: &CodedSamples<'_>) -> f64 {
    block
        .codes
        .iter()
        .enumerate()
        .map(|(i, c)| dict.residual_sq(block.signals.col(i), c))
        .sum()
}

/// Full per-class objective with codes fixed:
/// `(1/N) ||Y - D S||^2 - sum_j (rho/N_j) ||Y_j - D S_j||^2`.
pub fn objective_value(
    dict: &Dictionary,
    own: CodedSamples<'_>,
    off: &[CodedSamples<'_>],
    rho: f64,
) -> Result<f64> {
    let (m, k) = (dict.dim(), dict.len());
    own.check(m, k)?;
    if own.codes.is_empty() {
        return Err(AdlError::InvalidInput("own class has no samples".into()));
    }
    let mut value = residual_energy(dict, &own) / own.codes.len() as f64;
    if rho > 0.0 {
        for o in off {
            o.check(m, k)?;
            if !o.codes.is_empty() {
                value -= rho / o.codes.len() as f64 * residual_energy(dict, o);
            }
        }
    }
    Ok(value)
}

/// Binary form of [`objective_value`].
pub fn objective_value_binary(
    dict: &Dictionary,
    own: CodedSamples<'_>,
    off: CodedSamples<'_>,
    rho: f64,
) -> Result<f64> {
    objective_value(dict, own, &[off], rho)
}

/// `||Y - D S||_F^2` through dense products; used by tests as a direct check.
pub fn reconstruction_error(dict: &Dictionary, block: CodedSamples<'_>) -> Result<f64> {
    let recon = dict.atoms.matmul(&block.codes.to_dense())?;
    Ok(frob_sq(&block.signals.sub(&recon)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_dict(rows: &[&[f64]]) -> Dictionary {
        Dictionary::new(Mat::from_rows(rows).unwrap()).unwrap()
    }

    fn ops_from(a: Mat, b_bar: Mat) -> UpdateOperands {
        UpdateOperands {
            a,
            b: b_bar.clone(),
            b_bar,
            lambda_min: 0.0,
        }
    }

    #[test]
    fn fixed_point_when_a_matches() {
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        let data = (0..15).map(|_| rng.random_range(-1.0..1.0)).collect();
        let d = Dictionary::normalized(Mat::from_col_major(5, 3, data).unwrap()).unwrap();
        let ops = ops_from(d.atoms().clone(), Mat::identity(3));
        let out = bcd_update(&d, &ops, 1).unwrap();
        for j in 0..3 {
            for (x, y) in out.dictionary.atom(j).iter().zip(d.atom(j)) {
                assert!((x - y).abs() < 1e-14);
            }
        }
        assert!(out.flagged.is_empty());
    }

    #[test]
    fn hand_computed_single_column() {
        let d = unit_dict(&[&[0.0], &[1.0]]);
        let ops = ops_from(Mat::from_rows(&[&[2.0], &[0.0]]).unwrap(), Mat::identity(1));
        let out = bcd_update(&d, &ops, 1).unwrap();
        assert_eq!(out.dictionary.atom(0), &[1.0, 0.0]);
    }

    #[test]
    fn degenerate_columns_are_flagged_and_kept() {
        let d = unit_dict(&[&[1.0, 0.0], &[0.0, 1.0]]);
        // column 1 has a zero diagonal; column 0 gets a zero update vector
        let a = Mat::zeros(2, 2);
        let b = Mat::from_rows(&[&[1.0, 0.0], &[0.0, 0.0]]).unwrap();
        let ops = UpdateOperands {
            a: a.clone(),
            b: b.clone(),
            b_bar: b,
            lambda_min: 0.0,
        };
        let out = bcd_update(&d, &ops, 1).unwrap();
        assert_eq!(out.flagged, vec![0, 1]);
        assert_eq!(out.dictionary, d);
    }

    #[test]
    fn zero_codes_give_zero_operands() {
        let y = Mat::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]).unwrap();
        let s = SparseCodeMatrix::zeros(3, 2);
        let ops = build_operands_binary(CodedSamples::new(&y, &s), CodedSamples::new(&y, &s), 0.5)
            .unwrap();
        assert_eq!(ops.a.max_abs(), 0.0);
        assert_eq!(ops.b.max_abs(), 0.0);
        assert_eq!(ops.lambda_min, 0.0);
    }

    #[test]
    fn operands_reject_mismatch() {
        let y = Mat::zeros(2, 2);
        let s = SparseCodeMatrix::zeros(3, 3);
        let s2 = SparseCodeMatrix::zeros(3, 2);
        assert!(build_operands_binary(CodedSamples::new(&y, &s), CodedSamples::new(&y, &s2), 0.1)
            .is_err());
        let empty = Mat::zeros(2, 0);
        let s0 = SparseCodeMatrix::zeros(3, 0);
        assert!(build_operands_binary(
            CodedSamples::new(&y, &s2),
            CodedSamples::new(&empty, &s0),
            0.1
        )
        .is_err());
        assert!(build_operands_binary(
            CodedSamples::new(&y, &s2),
            CodedSamples::new(&empty, &s0),
            0.0
        )
        .is_ok());
        assert!(build_operands_binary(CodedSamples::new(&y, &s2), CodedSamples::new(&y, &s2), -1.0)
            .is_err());
    }

    #[test]
    fn surrogate_of_zero_operands_is_zero() {
        let d = unit_dict(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let ops = ops_from(Mat::zeros(2, 2), Mat::zeros(2, 2));
        assert_eq!(surrogate_value(&d, &ops).unwrap(), 0.0);
    }

    #[test]
    fn objective_cancels_for_identical_classes() {
        let d = unit_dict(&[&[1.0, 0.0], &[0.0, 1.0], &[0.0, 0.0]]);
        let y = Mat::from_rows(&[&[1.0, 0.5], &[0.2, 1.0], &[0.3, 0.3]]).unwrap();
        let codes = SparseCodeMatrix::new(
            2,
            vec![
                SparseCode::new(2, vec![0], vec![1.0]).unwrap(),
                SparseCode::new(2, vec![1], vec![1.0]).unwrap(),
            ],
        )
        .unwrap();
        let block = CodedSamples::new(&y, &codes);
        assert_eq!(objective_value_binary(&d, block, block, 1.0).unwrap(), 0.0);
        let own = reconstruction_error(&d, block).unwrap() / 2.0;
        assert!((objective_value_binary(&d, block, block, 0.0).unwrap() - own).abs() < 1e-15);
    }
}
