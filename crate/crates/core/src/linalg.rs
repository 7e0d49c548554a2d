//! Dense linear-algebra helpers shared by the estimators and solvers.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Largest absolute difference between `m[(i, j)]` and `m[(j, i)]`.
pub fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in (j + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// Eigen-decomposition of a symmetric matrix, eigenvalues in ascending order.
pub fn symmetric_eigen(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(order.len(), order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(m.nrows(), order.len());
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// `U diag(f(d)) Uᵀ`.
pub fn spectral_apply(
    values: &DVector<f64>,
    vectors: &DMatrix<f64>,
    f: impl Fn(f64) -> f64,
) -> DMatrix<f64> {
    let mut scaled = vectors.clone();
    for (j, &d) in values.iter().enumerate() {
        scaled.column_mut(j).scale_mut(f(d));
    }
    let mut out = &scaled * vectors.transpose();
    symmetrize(&mut out);
    out
}

pub fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for j in 0..n {
        for i in (j + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

pub fn is_positive_definite(m: &DMatrix<f64>) -> bool {
    m.clone().cholesky().is_some()
}

/// Ordinary least squares through the normal equations. `None` when the
/// design does not have full column rank.
pub fn least_squares(a: &DMatrix<f64>, y: &DVector<f64>) -> Option<DVector<f64>> {
    if a.ncols() == 0 {
        return Some(DVector::zeros(0));
    }
    if a.ncols() > a.nrows() {
        return None;
    }
    let gram = a.transpose() * a;
    let rhs = a.transpose() * y;
    let chol = gram.cholesky()?;
    let sol = chol.solve(&rhs);
    sol.iter().all(|v| v.is_finite()).then_some(sol)
}

/// Ridge regression minimizing `½‖y − Aγ‖² + (μ/2) Σⱼ wⱼ γⱼ²`.
///
/// Columns with `wⱼ = 0` are unpenalized and must have full column rank among
/// themselves. Uses the n×n kernel form when there are more penalized columns
/// than rows.
pub fn ridge(
    a: &DMatrix<f64>,
    y: &DVector<f64>,
    mu: f64,
    weights: &[f64],
) -> Result<DVector<f64>> {
    let n = a.nrows();
    let free: Vec<usize> = (0..a.ncols()).filter(|&j| weights[j] == 0.0).collect();
    let pen: Vec<usize> = (0..a.ncols()).filter(|&j| weights[j] != 0.0).collect();
    if mu <= 0.0 {
        return Err(Error::InvalidInput(format!("ridge penalty must be positive, got {mu}")));
    }

    let u = a.select_columns(&free);
    let mut b = a.select_columns(&pen);
    for (k, &j) in pen.iter().enumerate() {
        b.column_mut(k).scale_mut(1.0 / weights[j].sqrt());
    }

    // Project out the unpenalized columns.
    let project = |m: &DMatrix<f64>| -> Result<DMatrix<f64>> {
        if free.is_empty() {
            return Ok(m.clone());
        }
        let gram = (u.transpose() * &u)
            .cholesky()
            .ok_or_else(|| Error::Singular("unpenalized columns are collinear".into()))?;
        let coef = gram.solve(&(u.transpose() * m));
        Ok(m - &u * coef)
    };
    let c = project(&b)?;
    let qy = project(&DMatrix::from_column_slice(n, 1, y.as_slice()))?.column(0).into_owned();

    let scaled = if pen.len() > n {
        let mut k = &c * c.transpose();
        for i in 0..n {
            k[(i, i)] += mu;
        }
        let chol = k
            .cholesky()
            .ok_or_else(|| Error::Singular("ridge kernel system".into()))?;
        c.transpose() * chol.solve(&qy)
    } else {
        let mut g = c.transpose() * &c;
        for i in 0..pen.len() {
            g[(i, i)] += mu;
        }
        let chol = g
            .cholesky()
            .ok_or_else(|| Error::Singular("ridge normal equations".into()))?;
        chol.solve(&(c.transpose() * &qy))
    };

    let mut out = DVector::zeros(a.ncols());
    for (k, &j) in pen.iter().enumerate() {
        out[j] = scaled[k] / weights[j].sqrt();
    }
    if !free.is_empty() {
        let fitted_pen = a * &out;
        let resid = y - fitted_pen;
        let alpha = least_squares(&u, &resid)
            .ok_or_else(|| Error::Singular("unpenalized columns are collinear".into()))?;
        for (k, &j) in free.iter().enumerate() {
            out[j] = alpha[k];
        }
    }
    Ok(out)
}
