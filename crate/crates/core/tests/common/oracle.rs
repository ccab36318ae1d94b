//! Dense reference implementations, independent of the library code.

/// Singular values of a row-major `rows x cols` matrix by one-sided Jacobi
/// rotations, largest first.
pub fn jacobi_singular_values(rows: usize, cols: usize, data: &[f64]) -> Vec<f64> {
    // Work on the columns of A (or of A^T when it is wide).
    let (m, n, at) = if rows >= cols { (rows, cols, false) } else { (cols, rows, true) };
    let mut c: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..m).map(|i| if at { data[j * cols + i] } else { data[i * cols + j] }).collect())
        .collect();
    for _sweep in 0..100 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha: f64 = c[p].iter().map(|x| x * x).sum();
                let beta: f64 = c[q].iter().map(|x| x * x).sum();
                let gamma: f64 = c[p].iter().zip(&c[q]).map(|(x, y)| x * y).sum();
                if gamma.abs() <= 1e-15 * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                for i in 0..m {
                    let (x, y) = (c[p][i], c[q][i]);
                    c[p][i] = cs * x - sn * y;
                    c[q][i] = sn * x + cs * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut s: Vec<f64> = c.iter().map(|col| col.iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Positive PMI computed cell by cell from probability tables; cells whose
/// observed probability falls below the expected one are zero.
pub fn dense_ppmi(rows: usize, cols: usize, counts: &[f64], alpha: f64) -> Vec<f64> {
    let total: f64 = counts.iter().sum();
    let p_row: Vec<f64> = (0..rows).map(|i| (0..cols).map(|j| counts[i * cols + j]).sum::<f64>() / total).collect();
    let col_mass: Vec<f64> = (0..cols)
        .map(|j| (0..rows).map(|i| counts[i * cols + j]).sum::<f64>().powf(alpha))
        .collect();
    let col_total: f64 = col_mass.iter().sum();
    let mut out = vec![0.0; rows * cols];
    for i in 0..rows {
        for j in 0..cols {
            let p = counts[i * cols + j] / total;
            if p == 0.0 {
                continue;
            }
            let ratio = p / (p_row[i] * (col_mass[j] / col_total));
            out[i * cols + j] = if ratio < 1.0 { 0.0 } else { ratio.ln() };
        }
    }
    out
}

/// A random `m x n` matrix (2..=30 each side) with a random share of zeros.
pub fn random_dense(seed: u64) -> (usize, usize, Vec<f64>) {
    use rand::Rng;
    let mut rng = wppmi::seed::rng(seed);
    let (m, n) = (rng.gen_range(2..=30), rng.gen_range(2..=30));
    let density = rng.gen_range(0.15..1.0);
    let data = (0..m * n)
        .map(|_| if rng.gen_bool(density) { rng.gen_range(0.0..5.0) } else { 0.0 })
        .collect();
    (m, n, data)
}

/// Largest entry of `|Q^T Q - I|`.
pub fn orthonormality_error(q: &ndarray::Array2<f64>) -> f64 {
    let g = q.t().dot(q);
    g.indexed_iter()
        .map(|((i, j), v)| (v - if i == j { 1.0 } else { 0.0 }).abs())
        .fold(0.0, f64::max)
}

/// Frobenius norm of `A - U diag(s) V^T`.
pub fn reconstruction_error(m: usize, n: usize, data: &[f64], svd: &wppmi::Svd) -> f64 {
    let a = ndarray::Array2::from_shape_vec((m, n), data.to_vec()).unwrap();
    let approx = (&svd.u * &svd.singular_values).dot(&svd.v.t());
    (&a - &approx).iter().map(|x| x * x).sum::<f64>().sqrt()
}
