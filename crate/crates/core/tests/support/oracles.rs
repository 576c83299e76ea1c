//! Reference implementations used only by tests. Each one follows the
//! textbook definition directly (explicit loops, explicit covariance, dense
//! solves) and shares no code with the library's computation paths.
#![allow(dead_code, clippy::needless_range_loop)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_rows(rng: &mut ChaCha8Rng, n: usize, d: usize, scale: f64) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..d).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect())
        .collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        s += a[i] * b[i];
    }
    s
}

pub fn cos(a: &[f64], b: &[f64]) -> f64 {
    dot(a, b) / (dot(a, a).sqrt() * dot(b, b).sqrt())
}

/// Mean cosine over all unordered pairs of `ids`, by double loop.
pub fn pairwise_mean(rows: &[Vec<f64>], ids: &[usize]) -> f64 {
    let mut sum = 0.0;
    let mut count = 0usize;
    for a in 0..ids.len() {
        for b in (a + 1)..ids.len() {
            sum += cos(&rows[ids[a]], &rows[ids[b]]);
            count += 1;
        }
    }
    sum / count as f64
}

/// Mean over sense pairs of the mean cross-sense cosine, by triple loop.
pub fn inter_sense(rows: &[Vec<f64>], groups: &[Vec<usize>]) -> f64 {
    let mut total = 0.0;
    let mut pairs = 0usize;
    for a in 0..groups.len() {
        for b in (a + 1)..groups.len() {
            let mut s = 0.0;
            for &i in &groups[a] {
                for &j in &groups[b] {
                    s += cos(&rows[i], &rows[j]);
                }
            }
            total += s / (groups[a].len() * groups[b].len()) as f64;
            pairs += 1;
        }
    }
    total / pairs as f64
}

/// Mean within-sense similarity over senses with >= 2 members minus the
/// inter-sense similarity over all senses.
pub fn delta(rows: &[Vec<f64>], groups: &[Vec<usize>]) -> f64 {
    let eligible: Vec<&Vec<usize>> = groups.iter().filter(|g| g.len() >= 2).collect();
    let mean_sen = eligible.iter().map(|g| pairwise_mean(rows, g)).sum::<f64>() / eligible.len() as f64;
    mean_sen - inter_sense(rows, groups)
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, descending.
pub fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    let frob: f64 = a.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();
    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in 0..n {
                if p != q {
                    off += a[p][q] * a[p][q];
                }
            }
        }
        if off.sqrt() <= 1e-15 * frob || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[p][q] == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    eig.sort_by(|x, y| y.partial_cmp(x).unwrap());
    eig
}

/// Explained-variance ratios from the eigenvalues of the explicitly formed
/// covariance matrix, descending.
pub fn covariance_ratios(rows: &[Vec<f64>]) -> Vec<f64> {
    let n = rows.len();
    let d = rows[0].len();
    let mut mean = vec![0.0; d];
    for r in rows {
        for j in 0..d {
            mean[j] += r[j];
        }
    }
    for m in mean.iter_mut() {
        *m /= n as f64;
    }
    let mut cov = vec![vec![0.0; d]; d];
    for r in rows {
        for a in 0..d {
            for b in 0..d {
                cov[a][b] += (r[a] - mean[a]) * (r[b] - mean[b]);
            }
        }
    }
    for a in 0..d {
        for b in 0..d {
            cov[a][b] /= (n - 1) as f64;
        }
    }
    let trace: f64 = (0..d).map(|i| cov[i][i]).sum();
    jacobi_eigenvalues(cov)
        .into_iter()
        .map(|l| l.max(0.0) / trace)
        .collect()
}

/// Solves A X = B by Gaussian elimination with partial pivoting.
pub fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let n = a.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in (col + 1)..n {
            let f = a[row][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            for k in 0..b[row].len() {
                b[row][k] -= f * b[col][k];
            }
        }
    }
    let m = b[0].len();
    let mut x = vec![vec![0.0; m]; n];
    for row in (0..n).rev() {
        for k in 0..m {
            let mut s = b[row][k];
            for j in (row + 1)..n {
                s -= a[row][j] * x[j][k];
            }
            x[row][k] = s / a[row][row];
        }
    }
    x
}

/// Fixed point of the retrofitting update, from the linear system
/// (sum_j beta_ij + alpha) q_i - sum_j beta_ij q_j = alpha v_i built from an
/// explicit edge list. Nodes without edges keep their anchor.
pub fn retrofit_fixed_point(
    anchor: &[Vec<f64>],
    groups: &[Vec<usize>],
    alpha: f64,
    uniform_beta: bool,
) -> Vec<Vec<f64>> {
    let n = anchor.len();
    let mut edges = Vec::new();
    for g in groups {
        for a in 0..g.len() {
            for b in (a + 1)..g.len() {
                edges.push((g[a], g[b]));
            }
        }
    }
    let mut degree = vec![0usize; n];
    for &(i, j) in &edges {
        degree[i] += 1;
        degree[j] += 1;
    }
    let beta = |i: usize| if uniform_beta { 1.0 } else { 1.0 / degree[i] as f64 };
    let mut a = vec![vec![0.0; n]; n];
    let mut b = vec![vec![0.0; anchor[0].len()]; n];
    for i in 0..n {
        if degree[i] == 0 {
            a[i][i] = 1.0;
            b[i] = anchor[i].clone();
        } else {
            a[i][i] = beta(i) * degree[i] as f64 + alpha;
            b[i] = anchor[i].iter().map(|x| alpha * x).collect();
        }
    }
    for &(i, j) in &edges {
        a[i][j] -= beta(i);
        a[j][i] -= beta(j);
    }
    dense_solve(a, b)
}

/// Splits `0..n` into up to `k` random nonempty disjoint groups, leaving
/// some indices unassigned with probability `p_skip`.
pub fn random_groups(rng: &mut ChaCha8Rng, n: usize, k: usize, p_skip: f64) -> Vec<Vec<usize>> {
    let mut groups = vec![Vec::new(); k];
    for i in 0..n {
        if rng.random::<f64>() < p_skip {
            continue;
        }
        groups[rng.random_range(0..k)].push(i);
    }
    groups.retain(|g| !g.is_empty());
    groups
}
