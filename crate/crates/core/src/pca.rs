//! Principal directions of a mean-centered matrix via thin SVD.

use faer::Mat;
use ndarray::{Array1, Array2, Axis};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Pca {
    pub mean: Array1<f64>,
    /// One principal direction per row, ordered by decreasing variance.
    pub components: Array2<f64>,
    /// Sum of squared projections onto each component (squared singular values).
    pub component_ss: Vec<f64>,
    /// Sum of squares of the centered matrix.
    pub total_ss: f64,
    /// Number of singular values above the rank tolerance.
    pub rank: usize,
}

impl Pca {
    pub fn explained_variance_ratio(&self) -> Vec<f64> {
        self.component_ss.iter().map(|s| s / self.total_ss).collect()
    }
}

pub fn center(data: &Array2<f64>) -> (Array2<f64>, Array1<f64>) {
    let mean = data.mean_axis(Axis(0)).unwrap_or_else(|| Array1::zeros(data.ncols()));
    let centered = data - &mean;
    (centered, mean)
}

/// Fits all `min(n, D)` principal directions of `data`.
///
/// Each direction is oriented so that its largest-magnitude coordinate is
/// positive (first such coordinate on ties).
pub fn fit(data: &Array2<f64>) -> Result<Pca> {
    let (n, d) = data.dim();
    if n < 2 {
        return Err(Error::InsufficientSamples {
            needed: 2,
            available: n,
        });
    }
    if d == 0 {
        return Err(Error::NoVariance);
    }
    let (centered, mean) = center(data);
    let total_ss: f64 = centered.iter().map(|v| v * v).sum();

    let m = Mat::<f64>::from_fn(n, d, |i, j| centered[[i, j]]);
    let svd = m.thin_svd().map_err(|e| Error::NoConvergence(format!("{e:?}")))?;
    let sigma: Vec<f64> = svd.S().column_vector().iter().copied().collect();
    let v = svd.V();

    let mut order: Vec<usize> = (0..sigma.len()).collect();
    order.sort_by(|&a, &b| sigma[b].total_cmp(&sigma[a]).then(a.cmp(&b)));

    let scale = data.iter().map(|v| v * v).sum::<f64>().sqrt();
    let tol = (n.max(d) as f64) * f64::EPSILON * scale;
    let rank = sigma.iter().filter(|&&s| s > tol).count();
    if rank == 0 || total_ss == 0.0 {
        return Err(Error::NoVariance);
    }

    let k = order.len();
    let mut components = Array2::<f64>::zeros((k, d));
    let mut component_ss = Vec::with_capacity(k);
    for (out_row, &src) in order.iter().enumerate() {
        let mut dir: Vec<f64> = (0..d).map(|j| v[(j, src)]).collect();
        let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
        let pivot = dir
            .iter()
            .enumerate()
            .fold(
                (0usize, 0.0f64),
                |best, (i, &x)| if x.abs() > best.1 { (i, x.abs()) } else { best },
            )
            .0;
        let sign = if dir[pivot] < 0.0 { -1.0 } else { 1.0 };
        for x in dir.iter_mut() {
            *x *= sign / norm;
        }
        components.row_mut(out_row).assign(&Array1::from(dir));
        component_ss.push(sigma[src] * sigma[src]);
    }

    Ok(Pca {
        mean,
        components,
        component_ss,
        total_ss,
        rank,
    })
}
