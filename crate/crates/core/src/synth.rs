//! Reproducible synthetic datasets with known sense structure and injected
//! common directions ("spikes").

use std::collections::BTreeMap;

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::corpus::{assign_frequency_ranks, Occurrence, Pos};
use crate::error::{Error, Result};
use crate::store::{EmbeddingDataset, LayerMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeanLayout {
    /// Sense t sits on basis axis t (needs lemmas * senses_per_lemma <= dim).
    #[default]
    Orthogonal,
    /// Each sense mean is an independent random unit direction.
    Gaussian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Spike {
    pub magnitude: f64,
    /// Unit-normalized on use; a random direction when absent.
    #[serde(default)]
    pub direction: Option<Vec<f64>>,
    /// Standard deviation of a per-row jitter on the magnitude. A constant
    /// offset vanishes under mean-centering; a spread makes the direction
    /// carry variance as well.
    #[serde(default)]
    pub spread: f64,
}

fn default_model_name() -> String {
    "synthetic".to_string()
}
fn one() -> f64 {
    1.0
}
fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    #[serde(default = "default_model_name")]
    pub model_name: String,
    pub dim: usize,
    pub n_layers: usize,
    pub seed: u64,
    pub lemmas: usize,
    pub senses_per_lemma: usize,
    pub occurrences_per_sense: usize,
    #[serde(default)]
    pub means: MeanLayout,
    /// Norm of every sense mean.
    #[serde(default = "one")]
    pub mean_scale: f64,
    /// Per-coordinate standard deviation of the isotropic Gaussian noise.
    #[serde(default)]
    pub noise_std: f64,
    #[serde(default)]
    pub spikes: Vec<Spike>,
    /// Extra unannotated occurrences made of noise and spikes only.
    #[serde(default)]
    pub unannotated: usize,
    /// Shuffle occurrence order so senses are interleaved.
    #[serde(default = "default_true")]
    pub shuffle: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub spec: SynthSpec,
    pub sense_means: BTreeMap<String, Vec<f64>>,
    pub spike_directions: Vec<Vec<f64>>,
}

const STREAM_STRUCTURE: u64 = 0;
const STREAM_SHUFFLE: u64 = 1;
const STREAM_NOISE_BASE: u64 = 16;

fn random_unit(rng: &mut ChaCha8Rng, dim: usize) -> Array1<f64> {
    loop {
        let v: Array1<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let n = v.dot(&v).sqrt();
        if n > 1e-12 {
            return v / n;
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.dim == 0 || self.n_layers == 0 {
            return bad("dim and n_layers must be positive".into());
        }
        if self.senses_per_lemma == 0 || self.occurrences_per_sense == 0 {
            return bad("senses_per_lemma and occurrences_per_sense must be positive".into());
        }
        let total = self.lemmas * self.senses_per_lemma;
        if self.means == MeanLayout::Orthogonal && total > self.dim {
            return bad(format!(
                "{total} orthogonal sense means do not fit in dimension {}",
                self.dim
            ));
        }
        if !(self.noise_std.is_finite() && self.noise_std >= 0.0 && self.mean_scale.is_finite()) {
            return bad("noise_std and mean_scale must be finite, noise_std non-negative".into());
        }
        for s in &self.spikes {
            if !(s.magnitude.is_finite() && s.spread.is_finite() && s.spread >= 0.0) {
                return bad("spike magnitude and spread must be finite, spread non-negative".into());
            }
            if let Some(d) = &s.direction {
                if d.len() != self.dim {
                    return bad(format!("spike direction has {} entries, dim is {}", d.len(), self.dim));
                }
                if d.iter().map(|x| x * x).sum::<f64>() == 0.0 {
                    return bad("spike direction must be nonzero".into());
                }
            }
        }
        Ok(())
    }
}

pub fn sense_key(lemma: &str, sense: usize) -> String {
    format!("{lemma}.n.{:02}", sense + 1)
}

/// Generates the dataset described by `spec`. Values are rounded to `f32`
/// so the in-memory dataset equals what a save/load cycle returns.
pub fn generate(spec: &SynthSpec) -> Result<(EmbeddingDataset, GroundTruth)> {
    spec.validate()?;
    let dim = spec.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(STREAM_STRUCTURE);

    // (lemma, sense key, mean) per sense
    let mut senses = Vec::new();
    for l in 0..spec.lemmas {
        let lemma = format!("lemma{l:03}");
        for s in 0..spec.senses_per_lemma {
            let t = senses.len();
            let dir = match spec.means {
                MeanLayout::Orthogonal => {
                    let mut e = Array1::zeros(dim);
                    e[t] = 1.0;
                    e
                }
                MeanLayout::Gaussian => random_unit(&mut rng, dim),
            };
            senses.push((lemma.clone(), sense_key(&lemma, s), dir * spec.mean_scale));
        }
    }
    let spike_dirs: Vec<Array1<f64>> = spec
        .spikes
        .iter()
        .map(|s| match &s.direction {
            Some(d) => {
                let v = Array1::from(d.clone());
                let n = v.dot(&v).sqrt();
                v / n
            }
            None => random_unit(&mut rng, dim),
        })
        .collect();
    let mut spike_total = Array1::<f64>::zeros(dim);
    for (s, d) in spec.spikes.iter().zip(&spike_dirs) {
        spike_total = spike_total + d * s.magnitude;
    }

    // Row templates: Some(sense index) or None for unannotated filler.
    let mut rows: Vec<Option<usize>> = Vec::new();
    for t in 0..senses.len() {
        rows.extend(std::iter::repeat_n(Some(t), spec.occurrences_per_sense));
    }
    rows.extend(std::iter::repeat_n(None, spec.unannotated));
    if spec.shuffle {
        let mut srng = ChaCha8Rng::seed_from_u64(spec.seed);
        srng.set_stream(STREAM_SHUFFLE);
        rows.shuffle(&mut srng);
    }

    let mut occurrences: Vec<Occurrence> = rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let (lemma, key, pos) = match r {
                Some(t) => (senses[*t].0.clone(), Some(senses[*t].1.clone()), Pos::Noun),
                None => ("filler".to_string(), None, Pos::Other),
            };
            Occurrence {
                occ_id: i,
                corpus_id: "SYN".into(),
                sentence_idx: i,
                token_idx: 0,
                surface: lemma.clone(),
                lemma,
                pos,
                sense_key: key,
                frequency_rank: 0,
            }
        })
        .collect();
    assign_frequency_ranks(&mut occurrences);

    let n = rows.len();
    let mut layers = Vec::with_capacity(spec.n_layers);
    for k in 0..spec.n_layers {
        let mut nrng = ChaCha8Rng::seed_from_u64(spec.seed);
        nrng.set_stream(STREAM_NOISE_BASE + k as u64);
        let mut data = Array2::<f64>::zeros((n, dim));
        for (i, r) in rows.iter().enumerate() {
            let mut row = data.row_mut(i);
            if let Some(t) = r {
                row += &senses[*t].2;
            }
            row += &spike_total;
            for (s, d) in spec.spikes.iter().zip(&spike_dirs) {
                if s.spread > 0.0 {
                    row.scaled_add(s.spread * nrng.sample::<f64, _>(StandardNormal), d);
                }
            }
            if spec.noise_std > 0.0 {
                for x in row.iter_mut() {
                    *x += spec.noise_std * nrng.sample::<f64, _>(StandardNormal);
                }
            }
            row.mapv_inplace(|x| f64::from(x as f32));
        }
        layers.push(LayerMatrix::new(k, data));
    }

    let ds = EmbeddingDataset::new(spec.model_name.clone(), occurrences, layers)?;
    let truth = GroundTruth {
        spec: spec.clone(),
        sense_means: senses.into_iter().map(|(_, k, m)| (k, m.to_vec())).collect(),
        spike_directions: spike_dirs.into_iter().map(|d| d.to_vec()).collect(),
    };
    Ok((ds, truth))
}
