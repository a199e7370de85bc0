//! Helpers shared by the integration tests: naive dense oracles and random
//! instance generators. Oracles here deliberately avoid the crate's fast
//! paths (sparse moments, Jacobi, CGS2) so they check rather than mirror it.

#![allow(dead_code)]

use adl::dict_update::{CodedSamples, Dictionary};
use adl::linalg::Mat;
use adl::sparse_coding::{SparseCode, SparseCodeMatrix};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn gaussian_mat<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> Mat {
    let data = (0..rows * cols).map(|_| StandardNormal.sample(rng)).collect();
    Mat::from_col_major(rows, cols, data).unwrap()
}

pub fn random_symmetric<R: Rng>(rng: &mut R, n: usize) -> Mat {
    let g = gaussian_mat(rng, n, n);
    let mut data = vec![0.0; n * n];
    for j in 0..n {
        for i in 0..n {
            data[j * n + i] = 0.5 * (g.get(i, j) + g.get(j, i));
        }
    }
    Mat::from_col_major(n, n, data).unwrap()
}

/// Random sparse code matrix with `nnz` nonzeros per column at random rows.
pub fn random_codes<R: Rng>(rng: &mut R, atoms: usize, samples: usize, nnz: usize) -> SparseCodeMatrix {
    let cols = (0..samples)
        .map(|_| {
            let idx = rand::seq::index::sample(rng, atoms, nnz.min(atoms)).into_vec();
            let vals = idx.iter().map(|_| StandardNormal.sample(rng)).collect();
            SparseCode::new(atoms, idx, vals).unwrap()
        })
        .collect();
    SparseCodeMatrix::new(atoms, cols).unwrap()
}

/// `A * B^T` by triple loop.
pub fn naive_abt(a: &Mat, b: &Mat) -> Vec<Vec<f64>> {
    let mut out = vec![vec![0.0; b.rows()]; a.rows()];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            for t in 0..a.cols() {
                *v += a.get(i, t) * b.get(j, t);
            }
        }
    }
    out
}

/// Dense `(1/N) Y S^T` and `(1/N) S S^T` for one block.
pub fn naive_moments(y: &Mat, s: &SparseCodeMatrix) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let sd = s.to_dense();
    let n = s.len() as f64;
    let scale = |m: Vec<Vec<f64>>| -> Vec<Vec<f64>> {
        m.into_iter().map(|r| r.into_iter().map(|v| v / n).collect()).collect()
    };
    (scale(naive_abt(y, &sd)), scale(naive_abt(&sd, &sd)))
}

/// Dense oracle for the operand pair of one class against `off`.
pub fn naive_operands(
    own: (&Mat, &SparseCodeMatrix),
    off: &[(&Mat, &SparseCodeMatrix)],
    rho: f64,
) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let (mut a, mut b) = naive_moments(own.0, own.1);
    for (y, s) in off {
        let (ya, sb) = naive_moments(y, s);
        for (r, rr) in a.iter_mut().zip(&ya) {
            for (v, w) in r.iter_mut().zip(rr) {
                *v -= rho * w;
            }
        }
        for (r, rr) in b.iter_mut().zip(&sb) {
            for (v, w) in r.iter_mut().zip(rr) {
                *v -= rho * w;
            }
        }
    }
    (a, b)
}

pub fn max_entry_diff(m: &Mat, dense: &[Vec<f64>]) -> f64 {
    let mut worst = 0.0f64;
    for (i, row) in dense.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            worst = worst.max((m.get(i, j) - v).abs());
        }
    }
    worst
}

/// `||Y - D S||_F^2` with the reconstruction formed entry by entry.
pub fn naive_residual_energy(d: &Dictionary, y: &Mat, s: &SparseCodeMatrix) -> f64 {
    let sd = s.to_dense();
    let mut total = 0.0;
    for n in 0..y.cols() {
        for i in 0..y.rows() {
            let mut r = y.get(i, n);
            for t in 0..d.len() {
                r -= d.atoms().get(i, t) * sd.get(t, n);
            }
            total += r * r;
        }
    }
    total
}

/// `-2 tr(A D^T) + tr(D M D^T)` summed entry by entry.
pub fn naive_surrogate(d: &Mat, a: &Mat, m: &Mat) -> f64 {
    let (rows, k) = (d.rows(), d.cols());
    let mut lin = 0.0;
    for i in 0..rows {
        for j in 0..k {
            lin += a.get(i, j) * d.get(i, j);
        }
    }
    let mut quad = 0.0;
    for i in 0..rows {
        for p in 0..k {
            for q in 0..k {
                quad += d.get(i, p) * m.get(p, q) * d.get(i, q);
            }
        }
    }
    -2.0 * lin + quad
}

pub fn coded<'a>(y: &'a Mat, s: &'a SparseCodeMatrix) -> CodedSamples<'a> {
    CodedSamples::new(y, s)
}
