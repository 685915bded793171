#![allow(dead_code, clippy::needless_range_loop)]

/// Dense solve by Gaussian elimination with partial pivoting.
pub fn dense_solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut x = b.to_vec();
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| m[i][k].abs().total_cmp(&m[j][k].abs()))
            .unwrap();
        m.swap(k, p);
        x.swap(k, p);
        for i in k + 1..n {
            let f = m[i][k] / m[k][k];
            if f == 0.0 {
                continue;
            }
            for j in k..n {
                m[i][j] -= f * m[k][j];
            }
            x[i] -= f * x[k];
        }
    }
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| m[k][j] * x[j]).sum();
        x[k] = (x[k] - s) / m[k][k];
    }
    x
}

pub fn matmul_t(rows: &[Vec<f64>], weights: &[f64], dim: usize, out: &mut [Vec<f64>], scale: f64) {
    // out += scale · Σ_r w_r · row_rᵀ row_r
    for (row, &w) in rows.iter().zip(weights) {
        for i in 0..dim {
            if row[i] == 0.0 {
                continue;
            }
            for j in 0..dim {
                out[i][j] += scale * w * row[i] * row[j];
            }
        }
    }
}

/// Gram matrix of the batch problem in the natural `[τ; s]` ordering, built
/// from explicit difference-operator rows.
pub fn dense_batch_gram(
    n: usize,
    period: usize,
    p: &[f64],
    q: &[f64],
    l1: f64,
    l2: f64,
    ridge: f64,
) -> Vec<Vec<f64>> {
    let dim = 2 * n;
    let mut a = vec![vec![0.0; dim]; dim];
    let unit = |k: usize| {
        let mut r = vec![0.0; dim];
        r[k] = 1.0;
        r
    };
    let fit: Vec<Vec<f64>> = (0..n)
        .map(|t| {
            let mut r = unit(t);
            r[n + t] = 1.0;
            r
        })
        .collect();
    matmul_t(&fit, &vec![1.0; n], dim, &mut a, 1.0);
    let season: Vec<Vec<f64>> = (period..n)
        .map(|t| {
            let mut r = unit(n + t);
            r[n + t - period] = -1.0;
            r
        })
        .collect();
    matmul_t(&season, &vec![1.0; season.len()], dim, &mut a, 1.0);
    let d1: Vec<Vec<f64>> = (1..n)
        .map(|t| {
            let mut r = unit(t);
            r[t - 1] = -1.0;
            r
        })
        .collect();
    matmul_t(&d1, p, dim, &mut a, l1);
    let d2: Vec<Vec<f64>> = (2..n)
        .map(|t| {
            let mut r = unit(t);
            r[t - 1] = -2.0;
            r[t - 2] = 1.0;
            r
        })
        .collect();
    matmul_t(&d2, q, dim, &mut a, l2);
    for t in 0..n {
        a[n + t][n + t] += ridge;
    }
    a
}

/// Gram matrix of the online window problem in the interleaved
/// `{τ_0, s_0, …}` ordering. `p[j]`/`q[j]` weight the differences ending at `j`.
pub fn dense_online_gram(m: usize, p: &[f64], q: &[f64], l1: f64, l2: f64) -> Vec<Vec<f64>> {
    let dim = 2 * m;
    let mut a = vec![vec![0.0; dim]; dim];
    let row = |pairs: &[(usize, f64)]| {
        let mut r = vec![0.0; dim];
        for &(k, v) in pairs {
            r[k] = v;
        }
        r
    };
    let c1: Vec<Vec<f64>> = (0..m)
        .map(|j| row(&[(2 * j, 1.0), (2 * j + 1, 1.0)]))
        .collect();
    matmul_t(&c1, &vec![1.0; m], dim, &mut a, 1.0);
    let c2: Vec<Vec<f64>> = (0..m).map(|j| row(&[(2 * j + 1, 1.0)])).collect();
    matmul_t(&c2, &vec![1.0; m], dim, &mut a, 1.0);
    let c3: Vec<Vec<f64>> = (1..m)
        .map(|j| row(&[(2 * j, 1.0), (2 * j - 2, -1.0)]))
        .collect();
    matmul_t(&c3, &p[1..m], dim, &mut a, l1);
    if m > 2 {
        let c4: Vec<Vec<f64>> = (2..m)
            .map(|j| row(&[(2 * j, 1.0), (2 * j - 2, -2.0), (2 * j - 4, 1.0)]))
            .collect();
        matmul_t(&c4, &q[2..m], dim, &mut a, l2);
    }
    a
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

pub fn mae(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64
}
