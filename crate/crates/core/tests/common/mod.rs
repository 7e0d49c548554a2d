//! Reference implementations shared by the integration tests. None of them
//! call into the crate's solver or linear-algebra helpers.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix(rng: &mut ChaCha8Rng, n: usize, m: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, m, |_, _| rng.sample::<f64, _>(StandardNormal))
}

pub fn gaussian_vector(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Random correlation matrix `D^{-1/2}(BBᵀ + cI)D^{-1/2}`.
pub fn random_correlation(rng: &mut ChaCha8Rng, p: usize) -> DMatrix<f64> {
    let b = gaussian_matrix(rng, p, p);
    let mut s = &b * b.transpose();
    for j in 0..p {
        s[(j, j)] += 0.5 * p as f64;
    }
    let d: Vec<f64> = (0..p).map(|j| s[(j, j)].sqrt()).collect();
    DMatrix::from_fn(p, p, |i, j| s[(i, j)] / (d[i] * d[j]))
}

pub fn soft(z: f64, t: f64) -> f64 {
    z.signum() * (z.abs() - t).max(0.0)
}

/// Squared spectral norm of `a` via power iteration on `aᵀa`.
pub fn gram_spectral_norm(a: &DMatrix<f64>) -> f64 {
    let m = a.ncols();
    let mut v = DVector::from_element(m, 1.0 / (m as f64).sqrt());
    let mut est = 0.0;
    for _ in 0..2000 {
        let w = a.transpose() * (a * &v);
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        v = w / norm;
        if (norm - est).abs() <= 1e-14 * norm {
            est = norm;
            break;
        }
        est = norm;
    }
    est
}

/// Accelerated proximal gradient with restarts for a smooth least-squares
/// loss `½‖y − Aβ‖² + ½ Σ l2ⱼ βⱼ²` and a caller-supplied proximal map.
pub fn accelerated_prox(
    a: &DMatrix<f64>,
    y: &DVector<f64>,
    l2: &[f64],
    iters: usize,
    prox: impl Fn(&DVector<f64>, f64) -> DVector<f64>,
) -> DVector<f64> {
    let m = a.ncols();
    let lip = gram_spectral_norm(a) + l2.iter().cloned().fold(0.0, f64::max);
    let step = 1.0 / (lip * 1.000_001);
    let mut x = DVector::zeros(m);
    let mut z = x.clone();
    let mut t = 1.0f64;
    for _ in 0..iters {
        let mut grad = a.transpose() * (a * &z - y);
        for j in 0..m {
            grad[j] += l2[j] * z[j];
        }
        let next = prox(&(&z - step * grad), step);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let moved = &next - &x;
        // Restart momentum when it points uphill.
        if (&z - &next).dot(&moved) > 0.0 {
            t = 1.0;
            z = next.clone();
        } else {
            z = &next + ((t - 1.0) / t_next) * &moved;
            t = t_next;
        }
        let change = moved.amax();
        x = next;
        if change < 1e-15 {
            break;
        }
    }
    x
}

/// Weighted elastic net `½‖y − Aβ‖² + Σ l1ⱼ|βⱼ| + ½ Σ l2ⱼ βⱼ²`.
pub fn prox_gradient_lasso(
    a: &DMatrix<f64>,
    y: &DVector<f64>,
    l1: &[f64],
    l2: &[f64],
) -> DVector<f64> {
    accelerated_prox(a, y, l2, 100_000, |v, step| {
        DVector::from_fn(v.len(), |j, _| soft(v[j], step * l1[j]))
    })
}

/// Exact minimizer of `½(u−a)² + ½(v−b)² + l1|u| + l2|v − u|` by enumerating
/// the nine sign patterns of `(u, v − u)`.
pub fn fused_pair_prox(a: f64, b: f64, l1: f64, l2: f64) -> (f64, f64) {
    let obj = |u: f64, v: f64| 0.5 * (u - a).powi(2) + 0.5 * (v - b).powi(2) + l1 * u.abs() + l2 * (v - u).abs();
    let mut best = (0.0, 0.0);
    let mut best_val = obj(0.0, 0.0);
    for s1 in [-1.0, 0.0, 1.0] {
        for s2 in [-1.0, 0.0, 1.0] {
            let (u, v) = match (s1 == 0.0, s2 == 0.0) {
                (true, true) => (0.0, 0.0),
                (true, false) => (0.0, b - l2 * s2),
                (false, true) => {
                    let u = 0.5 * (a + b - l1 * s1);
                    (u, u)
                }
                (false, false) => (a - l1 * s1 + l2 * s2, b - l2 * s2),
            };
            let val = obj(u, v);
            if val < best_val {
                best_val = val;
                best = (u, v);
            }
        }
    }
    best
}

/// Solves `½‖y − Xγ‖² + λ₁‖β₁‖₁ + λ₂‖β₂ − β₁‖₁` directly on the block design
/// with coefficients `(α₁, α₂, β₁, β₂)`.
pub fn prox_gradient_block(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    p: usize,
    lambda1: f64,
    lambda2: f64,
) -> DVector<f64> {
    let zeros = vec![0.0; x.ncols()];
    accelerated_prox(x, y, &zeros, 100_000, |v, step| {
        let mut out = v.clone();
        for j in 0..p {
            let (u, w) = fused_pair_prox(v[2 + j], v[2 + p + j], step * lambda1, step * lambda2);
            out[2 + j] = u;
            out[2 + p + j] = w;
        }
        out
    })
}

/// Gaussian elimination with partial pivoting; solves `a · x = b` column by column.
pub fn gauss_solve(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let mut m = a.clone();
    let mut r = b.clone();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[(i, col)].abs().total_cmp(&m[(j, col)].abs())).unwrap();
        assert!(m[(piv, col)].abs() > 1e-300, "singular system");
        m.swap_rows(col, piv);
        r.swap_rows(col, piv);
        for row in 0..n {
            if row != col {
                let f = m[(row, col)] / m[(col, col)];
                if f != 0.0 {
                    for k in 0..n {
                        m[(row, k)] -= f * m[(col, k)];
                    }
                    for k in 0..r.ncols() {
                        r[(row, k)] -= f * r[(col, k)];
                    }
                }
            }
        }
    }
    for row in 0..n {
        let d = m[(row, row)];
        for k in 0..r.ncols() {
            r[(row, k)] /= d;
        }
    }
    r
}

/// OLS by the normal equations.
pub fn normal_equations(a: &DMatrix<f64>, y: &DVector<f64>) -> DVector<f64> {
    let g = a.transpose() * a;
    let rhs = DMatrix::from_column_slice(a.ncols(), 1, (a.transpose() * y).as_slice());
    gauss_solve(&g, &rhs).column(0).into_owned()
}

/// Cyclic Jacobi eigenvalue iteration; eigenvalues ascending with matching
/// eigenvector columns.
pub fn jacobi_eigen(s: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = s.nrows();
    let mut a = s.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    for _ in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).filter(|(i, j)| i != j).map(|(i, j)| a[(i, j)].powi(2)).sum();
        if off < 1e-26 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[(p, q)].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - sn * akq;
                    a[(k, q)] = sn * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - sn * aqk;
                    a[(q, k)] = sn * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - sn * vkq;
                    v[(k, q)] = sn * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    (values, vectors)
}

/// Pearson correlation by the textbook double loop.
pub fn pearson(data: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, p) = data.shape();
    let mean = |j: usize| (0..n).map(|i| data[(i, j)]).sum::<f64>() / n as f64;
    let means: Vec<f64> = (0..p).map(mean).collect();
    DMatrix::from_fn(p, p, |a, b| {
        let mut sab = 0.0;
        let mut saa = 0.0;
        let mut sbb = 0.0;
        for i in 0..n {
            let da = data[(i, a)] - means[a];
            let db = data[(i, b)] - means[b];
            sab += da * db;
            saa += da * da;
            sbb += db * db;
        }
        sab / (saa * sbb).sqrt()
    })
}

/// `‖Σ_{SᶜS} Σ_{SS}^{-1} s‖_∞` by explicit sub-matrix arithmetic.
pub fn irrepresentable(sigma: &DMatrix<f64>, support: &[usize], signs: &[f64]) -> f64 {
    let p = sigma.nrows();
    let rest: Vec<usize> = (0..p).filter(|j| !support.contains(j)).collect();
    let ss = DMatrix::from_fn(support.len(), support.len(), |i, j| sigma[(support[i], support[j])]);
    let rhs = DMatrix::from_column_slice(signs.len(), 1, signs);
    let w = gauss_solve(&ss, &rhs);
    rest.iter()
        .map(|&r| support.iter().enumerate().map(|(k, &s)| sigma[(r, s)] * w[(k, 0)]).sum::<f64>().abs())
        .fold(0.0, f64::max)
}

pub fn random_trial(rng: &mut ChaCha8Rng, n1: usize, n2: usize, p: usize) -> pplasso::TrialData {
    let n = n1 + n2;
    let x = gaussian_matrix(rng, n, p);
    let beta = gaussian_vector(rng, p);
    let y = &x * beta + gaussian_vector(rng, n);
    let treatment = (0..n).map(|i| if i < n1 { 1 } else { 2 }).collect();
    let names = (0..p).map(|j| format!("b{j}")).collect();
    pplasso::TrialData::new(y, treatment, x, names).unwrap()
}
