//! Dense symmetric eigenproblems and small solves shared by the solvers.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub fn symmetric_part(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Eigenvalues of a symmetric matrix, ascending.
pub fn sym_eigenvalues(a: &DMatrix<f64>) -> Vec<f64> {
    if a.nrows() == 0 {
        return Vec::new();
    }
    let mut v: Vec<f64> = symmetric_part(a).symmetric_eigen().eigenvalues.iter().copied().collect();
    v.sort_by(|x, y| x.total_cmp(y));
    v
}

/// Eigenvalues of `a x = lambda b x` with `b` symmetric positive definite, ascending.
pub fn generalized_eigenvalues(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<Vec<f64>> {
    let chol = symmetric_part(b)
        .cholesky()
        .ok_or_else(|| Error::Numerical("metric matrix is not positive definite".into()))?;
    let l = chol.l();
    let n = a.nrows();
    // c = l^{-1} a l^{-T}
    let mut y = symmetric_part(a);
    for j in 0..n {
        let mut col = y.column(j).clone_owned();
        if !l.solve_lower_triangular_mut(&mut col) {
            return Err(Error::Numerical("singular metric factor".into()));
        }
        y.set_column(j, &col);
    }
    let mut yt = y.transpose();
    for j in 0..n {
        let mut col = yt.column(j).clone_owned();
        l.solve_lower_triangular_mut(&mut col);
        yt.set_column(j, &col);
    }
    Ok(sym_eigenvalues(&yt))
}

/// Reciprocal condition estimate from the symmetric eigenvalues of an SPD matrix.
pub fn spd_condition(a: &DMatrix<f64>) -> f64 {
    let e = sym_eigenvalues(a);
    match (e.first(), e.last()) {
        (Some(lo), Some(hi)) if *lo > 0.0 => hi / lo,
        _ => f64::INFINITY,
    }
}

/// Solve an SPD system, erroring when the condition number passes `max_cond`.
pub fn solve_spd(a: &DMatrix<f64>, r: &DVector<f64>, max_cond: f64) -> Result<DVector<f64>> {
    if a.nrows() == 0 {
        return Ok(DVector::zeros(0));
    }
    let cond = spd_condition(a);
    if !(cond < max_cond) {
        return Err(Error::Solver(format!("stiffness matrix ill-conditioned (condition estimate {cond:.3e})")));
    }
    let chol = symmetric_part(a)
        .cholesky()
        .ok_or_else(|| Error::Solver("stiffness matrix is not positive definite".into()))?;
    Ok(chol.solve(r))
}
