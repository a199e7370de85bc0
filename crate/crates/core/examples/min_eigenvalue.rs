//! Smallest eigenpair of a symmetric matrix with the Jacobi solver, and the
//! shift that makes a Gram-difference matrix positive semidefinite.
//!
//! cargo run --example min_eigenvalue

use adl::linalg::{min_eig_sym, Mat, EIG_TOL};

fn main() -> adl::Result<()> {
    let m = Mat::from_rows(&[
        &[4.0, 1.0, 0.5],
        &[1.0, 3.0, -0.2],
        &[0.5, -0.2, 1.0],
    ])?;
    let eig = min_eig_sym(&m, EIG_TOL)?;
    println!("lambda_min = {:.12}", eig.min_eigenvalue);
    println!("eigenvector = {:?}", eig.eigenvector);
    println!("sweeps = {}", eig.iterations_used);

    // an indefinite difference of two Gram matrices, as built by the
    // adversarial update, becomes PSD after subtracting lambda_min * I
    let own = Mat::from_rows(&[&[2.0, 0.3], &[0.3, 1.0]])?;
    let off = Mat::from_rows(&[&[0.5, 0.9], &[0.9, 3.0]])?;
    let b = own.sub(&off)?;
    let shift = min_eig_sym(&b, EIG_TOL)?.min_eigenvalue;
    let b_bar = b.sub(&Mat::identity(2).scaled(shift))?;
    let after = min_eig_sym(&b_bar, EIG_TOL)?.min_eigenvalue;
    println!("B lambda_min = {shift:.6}, shifted lambda_min = {after:.2e}");
    Ok(())
}
