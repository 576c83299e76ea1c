//! Per-layer anisotropy: the random-pair cosine baseline, the PCA
//! explained-variance spectrum and top-2 projections for scatter plots.

use std::collections::{BTreeMap, BTreeSet};
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView1};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Occurrence;
use crate::error::{Error, Result};
use crate::pca;
use crate::store::LayerMatrix;

/// Cosine similarity, clamped to [-1, 1].
pub fn cosine(x: ArrayView1<'_, f64>, y: ArrayView1<'_, f64>) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::InvalidArgument(format!(
            "cosine of vectors with dimensions {} and {}",
            x.len(),
            y.len()
        )));
    }
    let nx = x.dot(&x).sqrt();
    if nx == 0.0 {
        return Err(Error::DegenerateVector { row: 0 });
    }
    let ny = y.dot(&y).sqrt();
    if ny == 0.0 {
        return Err(Error::DegenerateVector { row: 1 });
    }
    Ok((x.dot(&y) / (nx * ny)).clamp(-1.0, 1.0))
}

/// Unit-normalized copy of row `i`.
pub(crate) fn unit_row(layer: &LayerMatrix, i: usize) -> Result<Array1<f64>> {
    let row = layer.row(i);
    let norm = row.dot(&row).sqrt();
    if norm == 0.0 {
        return Err(Error::DegenerateVector { row: i });
    }
    Ok(row.mapv(|v| v / norm))
}

/// How the random-pair baseline draws its pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairingMode {
    /// Sample `k` distinct occurrences and average over all their pairs.
    #[default]
    AllPairs,
    /// Sample `k` independent pairs of distinct occurrences.
    KPairs,
}

impl FromStr for PairingMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.replace('-', "_").as_str() {
            "all_pairs" => Ok(PairingMode::AllPairs),
            "k_pairs" => Ok(PairingMode::KPairs),
            other => Err(format!("unknown pairing mode '{other}' (all-pairs | k-pairs)")),
        }
    }
}

/// Mean cosine between randomly sampled occurrences of one layer.
pub fn random_pair_baseline(layer: &LayerMatrix, k: usize, seed: u64) -> Result<f64> {
    random_pair_baseline_with(layer, k, seed, PairingMode::AllPairs)
}

pub fn random_pair_baseline_with(layer: &LayerMatrix, k: usize, seed: u64, mode: PairingMode) -> Result<f64> {
    let n = layer.rows();
    if k < 2 {
        return Err(Error::InvalidArgument(format!(
            "baseline sample size must be at least 2, got {k}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match mode {
        PairingMode::AllPairs => {
            if k > n {
                return Err(Error::InsufficientSamples {
                    needed: k,
                    available: n,
                });
            }
            let mut picked = rand::seq::index::sample(&mut rng, n, k).into_vec();
            picked.sort_unstable();
            // Sum over unordered pairs of unit vectors: (|sum u|^2 - sum |u|^2) / 2.
            let mut total = Array1::<f64>::zeros(layer.dim());
            let mut self_dots = 0.0;
            for &i in &picked {
                let u = unit_row(layer, i)?;
                self_dots += u.dot(&u);
                total += &u;
            }
            let pair_sum = (total.dot(&total) - self_dots) / 2.0;
            let pairs = (k * (k - 1) / 2) as f64;
            Ok((pair_sum / pairs).clamp(-1.0, 1.0))
        }
        PairingMode::KPairs => {
            if n < 2 {
                return Err(Error::InsufficientSamples {
                    needed: 2,
                    available: n,
                });
            }
            let mut sum = 0.0;
            for _ in 0..k {
                let a = rng.random_range(0..n);
                let mut b = rng.random_range(0..n - 1);
                if b >= a {
                    b += 1;
                }
                sum += cosine(layer.row(a), layer.row(b)).map_err(|e| match e {
                    Error::DegenerateVector { row } => Error::DegenerateVector {
                        row: if row == 0 { a } else { b },
                    },
                    other => other,
                })?;
            }
            Ok(sum / k as f64)
        }
    }
}

/// Explained-variance spectrum and 2D projection of one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaProfile {
    pub explained_variance: Vec<f64>,
    /// n x 2 scores on the top two principal directions.
    pub top2_projection: Array2<f64>,
}

pub fn pca_profile(layer: &LayerMatrix, d_top: usize) -> Result<PcaProfile> {
    let (n, d) = (layer.rows(), layer.dim());
    if n < 2 {
        return Err(Error::InsufficientSamples {
            needed: 2,
            available: n,
        });
    }
    if d_top > n.min(d) {
        return Err(Error::InvalidArgument(format!(
            "d_top = {d_top} exceeds min(n, D) = {}",
            n.min(d)
        )));
    }
    let fit = pca::fit(&layer.data)?;
    let ratios = fit.explained_variance_ratio();
    let (centered, _) = pca::center(&layer.data);
    let mut proj = Array2::<f64>::zeros((n, 2));
    for j in 0..2.min(fit.components.nrows()) {
        let scores = centered.dot(&fit.components.row(j));
        proj.column_mut(j).assign(&scores);
    }
    Ok(PcaProfile {
        explained_variance: ratios[..d_top].to_vec(),
        top2_projection: proj,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnisotropyProfile {
    pub layer: usize,
    pub baseline_b: f64,
    pub sample_size: usize,
    pub seed: u64,
    pub pairing: PairingMode,
    pub explained_variance: Vec<f64>,
    #[serde(skip)]
    pub top2_projection: Array2<f64>,
}

/// Baseline plus PCA spectrum for one layer.
pub fn profile_layer(
    layer: &LayerMatrix,
    k: usize,
    seed: u64,
    mode: PairingMode,
    d_top: usize,
) -> Result<AnisotropyProfile> {
    let baseline_b = random_pair_baseline_with(layer, k, seed, mode)?;
    let pca = pca_profile(layer, d_top)?;
    Ok(AnisotropyProfile {
        layer: layer.layer,
        baseline_b,
        sample_size: k,
        seed,
        pairing: mode,
        explained_variance: pca.explained_variance,
        top2_projection: pca.top2_projection,
    })
}

/// Assigns each occurrence a frequency band from its lemma's rank quantile.
/// Band 0 holds the most frequent lemmas.
pub fn frequency_bands(occs: &[Occurrence], n_bands: usize) -> Result<BTreeMap<usize, usize>> {
    if n_bands < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 bands, got {n_bands}")));
    }
    let n_lemmas = occs.iter().map(|o| o.lemma.as_str()).collect::<BTreeSet<_>>().len();
    Ok(occs
        .iter()
        .map(|o| {
            let band = (o.frequency_rank.saturating_sub(1) * n_bands / n_lemmas.max(1)).min(n_bands - 1);
            (o.occ_id, band)
        })
        .collect())
}
