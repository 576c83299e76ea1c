//! On-disk interchange format binding occurrences to per-layer embeddings.
//!
//! A dataset directory holds `manifest.json`, `occurrences.tsv` and one
//! `layer_<k>.f32` file per layer. Layer files are raw row-major
//! little-endian `f32`; row `i` belongs to occurrence `i`. In memory every
//! matrix is held as `f64`, which represents each `f32` exactly, so a
//! load/save cycle reproduces the files byte for byte.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::corpus::{self, Occurrence};
use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const OCCURRENCES_FILE: &str = "occurrences.tsv";
pub const DTYPE_F32LE: &str = "f32le";

pub fn layer_file_name(layer: usize) -> String {
    format!("layer_{layer}.f32")
}

/// Embeddings of every occurrence at one model layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerMatrix {
    pub layer: usize,
    pub data: Array2<f64>,
}

impl LayerMatrix {
    pub fn new(layer: usize, data: Array2<f64>) -> Self {
        LayerMatrix { layer, data }
    }

    /// Builds a layer from row-major `f32` values.
    pub fn from_f32(layer: usize, rows: usize, dim: usize, values: &[f32]) -> Result<Self> {
        if values.len() != rows * dim {
            return Err(Error::Shape(format!(
                "layer {layer}: {} values for a {rows}x{dim} matrix",
                values.len()
            )));
        }
        let data = Array2::from_shape_fn((rows, dim), |(i, j)| f64::from(values[i * dim + j]));
        Ok(LayerMatrix { layer, data })
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn dim(&self) -> usize {
        self.data.ncols()
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.data.row(i)
    }

    /// First non-finite entry, as (row, column).
    pub fn find_non_finite(&self) -> Option<(usize, usize)> {
        self.data
            .indexed_iter()
            .find(|(_, v)| !v.is_finite())
            .map(|(idx, _)| idx)
    }

    /// Row-major little-endian `f32` bytes. Values that overflow `f32` are
    /// reported as non-finite.
    pub fn to_le_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::with_capacity(self.data.len() * 4);
        for ((row, col), &v) in self.data.indexed_iter() {
            let x = v as f32;
            if !x.is_finite() {
                return Err(Error::NonFinite {
                    layer: self.layer,
                    row,
                    col,
                });
            }
            out.extend_from_slice(&x.to_le_bytes());
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub model_name: String,
    pub n_layers: usize,
    pub dim: usize,
    pub n_occurrences: usize,
    pub dtype: String,
    /// Producer-specific provenance (pooling rule, tokenizer, ...), kept verbatim.
    #[serde(flatten)]
    pub extra: BTreeMap<String, serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingDataset {
    pub manifest: Manifest,
    pub occurrences: Vec<Occurrence>,
    pub layers: Vec<LayerMatrix>,
}

impl EmbeddingDataset {
    /// Assembles a dataset and derives its manifest from the shapes given.
    pub fn new(model_name: impl Into<String>, occurrences: Vec<Occurrence>, layers: Vec<LayerMatrix>) -> Result<Self> {
        let dim = layers.first().map_or(0, LayerMatrix::dim);
        let ds = EmbeddingDataset {
            manifest: Manifest {
                model_name: model_name.into(),
                n_layers: layers.len(),
                dim,
                n_occurrences: occurrences.len(),
                dtype: DTYPE_F32LE.to_string(),
                extra: BTreeMap::new(),
            },
            occurrences,
            layers,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn n_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn dim(&self) -> usize {
        self.manifest.dim
    }

    pub fn layer(&self, k: usize) -> &LayerMatrix {
        &self.layers[k]
    }

    /// Checks the manifest against the occurrence table and every matrix.
    pub fn validate(&self) -> Result<()> {
        let m = &self.manifest;
        if m.dtype != DTYPE_F32LE {
            return Err(Error::Shape(format!("unsupported dtype '{}'", m.dtype)));
        }
        if m.n_occurrences != self.occurrences.len() {
            return Err(Error::Shape(format!(
                "manifest declares {} occurrences, table has {}",
                m.n_occurrences,
                self.occurrences.len()
            )));
        }
        if m.n_layers != self.layers.len() {
            return Err(Error::Shape(format!(
                "manifest declares {} layers, dataset has {}",
                m.n_layers,
                self.layers.len()
            )));
        }
        for (i, o) in self.occurrences.iter().enumerate() {
            if o.occ_id != i {
                return Err(Error::Shape(format!("occurrence at row {i} has occ_id {}", o.occ_id)));
            }
        }
        for (k, layer) in self.layers.iter().enumerate() {
            if layer.layer != k {
                return Err(Error::Shape(format!(
                    "layer at position {k} is numbered {}; layers must be 0..{} in order",
                    layer.layer, m.n_layers
                )));
            }
            if layer.rows() != m.n_occurrences || layer.dim() != m.dim {
                return Err(Error::Shape(format!(
                    "layer {k} is {}x{}, manifest expects {}x{}",
                    layer.rows(),
                    layer.dim(),
                    m.n_occurrences,
                    m.dim
                )));
            }
            if let Some((row, col)) = layer.find_non_finite() {
                return Err(Error::NonFinite { layer: k, row, col });
            }
        }
        Ok(())
    }
}

fn write_file(path: PathBuf, bytes: &[u8]) -> Result<()> {
    fs::write(&path, bytes).map_err(|e| Error::io(path, e))
}

pub fn manifest_json(manifest: &Manifest) -> String {
    let mut s = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    s.push('\n');
    s
}

/// Writes the dataset into `dir`, creating it if needed. Existing files of
/// the same name are overwritten.
pub fn save_dataset(ds: &EmbeddingDataset, dir: &Path) -> Result<()> {
    ds.validate()?;
    // Encode every layer before touching the filesystem.
    let encoded: Vec<Vec<u8>> = ds.layers.iter().map(LayerMatrix::to_le_bytes).collect::<Result<_>>()?;
    let mut table = Vec::new();
    corpus::write_tsv(&ds.occurrences, &mut table)?;

    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_file(dir.join(MANIFEST_FILE), manifest_json(&ds.manifest).as_bytes())?;
    write_file(dir.join(OCCURRENCES_FILE), &table)?;
    for (k, bytes) in encoded.iter().enumerate() {
        write_file(dir.join(layer_file_name(k)), bytes)?;
    }
    Ok(())
}

pub fn load_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map_err(|source| Error::Json { path, source })
}

pub fn load_dataset(dir: &Path) -> Result<EmbeddingDataset> {
    let manifest = load_manifest(dir)?;
    if manifest.dtype != DTYPE_F32LE {
        return Err(Error::Shape(format!("unsupported dtype '{}'", manifest.dtype)));
    }
    let occurrences = corpus::load_corpus(&dir.join(OCCURRENCES_FILE), corpus::CorpusFormat::Tsv)?;
    if occurrences.len() != manifest.n_occurrences {
        return Err(Error::Shape(format!(
            "manifest declares {} occurrences, {} has {} rows",
            manifest.n_occurrences,
            OCCURRENCES_FILE,
            occurrences.len()
        )));
    }

    let (n, d) = (manifest.n_occurrences, manifest.dim);
    let expected = (n * d * 4) as u64;
    let mut layers = Vec::with_capacity(manifest.n_layers);
    for k in 0..manifest.n_layers {
        let path = dir.join(layer_file_name(k));
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        if bytes.len() as u64 != expected {
            return Err(Error::Truncated {
                path,
                expected,
                actual: bytes.len() as u64,
            });
        }
        let values: Vec<f32> = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        layers.push(LayerMatrix::from_f32(k, n, d, &values)?);
    }

    let ds = EmbeddingDataset {
        manifest,
        occurrences,
        layers,
    };
    ds.validate()?;
    Ok(ds)
}
