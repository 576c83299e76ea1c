//! Anisotropy measurement, sense-structure metrics and low-anisotropy sense
//! retrofitting for per-layer contextual embeddings.
//!
//! The pipeline works on an [`EmbeddingDataset`]: an occurrence table of
//! sense-annotated tokens plus one dense matrix per model layer.
//!
//! * [`corpus`] loads occurrence tables and selects the multi-sense vocabulary.
//! * [`store`] reads and writes the on-disk dataset format.
//! * [`anisotropy`] measures the random-pair cosine baseline and PCA spectra.
//! * [`metrics`] scores within-sense cohesion and cross-sense similarity.
//! * [`laser`] removes dominant directions and retrofits same-sense occurrences.
//! * [`synth`] builds synthetic datasets with known structure.

pub mod anisotropy;
pub mod corpus;
pub mod error;
pub mod laser;
pub mod metrics;
pub mod pca;
pub mod store;
pub mod synth;

pub use anisotropy::{
    cosine, frequency_bands, pca_profile, profile_layer, random_pair_baseline, random_pair_baseline_with,
    AnisotropyProfile, PairingMode, PcaProfile,
};
pub use corpus::{build_inventory, load_corpus, CorpusFormat, Occurrence, Pos, SenseId, SenseInventory};
pub use error::{Error, Result};
pub use laser::{
    build_sense_graph, laser, remove_top_components, retrofit, BetaScheme, LaserConfig, LaserOutput, SenseGraph,
    UpdateMode,
};
pub use metrics::{
    adjust, inter_sense_similarity, layer_report, sense_similarity, word_delta, MetricsReport, SenSimNormalization,
    SenseScore, WordOutcome, WordScore,
};
pub use store::{load_dataset, save_dataset, EmbeddingDataset, LayerMatrix, Manifest};
