//! Batch commands: analyze, eval, laser, compare, synth, inventory.
//!
//! Every command writes into a fresh output directory that only appears once
//! all files are complete. Primary outputs are deterministic given the inputs
//! and seeds; the timestamp lives only in `run_manifest.json`.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use isosense_core::corpus::{self, CorpusFormat, InventorySummary, Pos};
use isosense_core::metrics::{self, LayerSummary, SenSimNormalization};
use isosense_core::store::{self, EmbeddingDataset, LayerMatrix, OCCURRENCES_FILE};
use isosense_core::synth::{self, SynthSpec};
use isosense_core::{anisotropy, laser, AnisotropyProfile, LaserConfig, PairingMode};
use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{CliError, CliResult};
use crate::manifest::{sha256_hex, OutputDir};

pub const LASER_META_FILE: &str = "laser_meta.json";

fn load(dir: &Path) -> CliResult<EmbeddingDataset> {
    store::load_dataset(dir).map_err(|e| CliError::data(format!("{}: {e}", dir.display())))
}

fn pos_set(pos: &[Pos]) -> CliResult<BTreeSet<Pos>> {
    if pos.is_empty() {
        return Err(CliError::config("POS restriction must not be empty"));
    }
    Ok(pos.iter().copied().collect())
}

/// Sample size actually used on a layer with `n` rows.
fn effective_k(k: usize, n: usize) -> usize {
    k.min(n)
}

fn note_clipped_k(k: usize, n: usize) {
    if k > n {
        eprintln!("note: sample size {k} exceeds {n} occurrences; sampling all {n}");
    }
}

fn layer_baselines(ds: &EmbeddingDataset, k: usize, seed: u64, pairing: PairingMode) -> CliResult<Vec<f64>> {
    let n = ds.manifest.n_occurrences;
    let k = match pairing {
        PairingMode::AllPairs => effective_k(k, n),
        PairingMode::KPairs => k,
    };
    ds.layers
        .par_iter()
        .map(|l| anisotropy::random_pair_baseline_with(l, k, seed, pairing).map_err(CliError::from))
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalyzeOptions {
    pub k: usize,
    pub seed: u64,
    pub d_top: usize,
    pub bands: usize,
    pub pairing: PairingMode,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        AnalyzeOptions {
            k: 1000,
            seed: 0,
            d_top: 10,
            bands: 4,
            pairing: PairingMode::AllPairs,
        }
    }
}

fn fmt_f64(x: f64) -> String {
    x.to_string()
}

fn projection_csv(occ_ids: &[usize], proj: &Array2<f64>, bands: &std::collections::BTreeMap<usize, usize>) -> String {
    let mut out = String::from("occ_id,x,y,band\n");
    for &i in occ_ids {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            i,
            fmt_f64(proj[[i, 0]]),
            fmt_f64(proj[[i, 1]]),
            bands[&i]
        );
    }
    out
}

fn profile_all(ds: &EmbeddingDataset, opts: &AnalyzeOptions) -> CliResult<Vec<AnisotropyProfile>> {
    let n = ds.manifest.n_occurrences;
    let k = match opts.pairing {
        PairingMode::AllPairs => effective_k(opts.k, n),
        PairingMode::KPairs => opts.k,
    };
    let d_top = opts.d_top.min(n.min(ds.dim()));
    ds.layers
        .par_iter()
        .map(|l| anisotropy::profile_layer(l, k, opts.seed, opts.pairing, d_top).map_err(CliError::from))
        .collect()
}

/// Per-layer baseline, explained-variance spectrum and frequency-banded 2D
/// projections.
pub fn cmd_analyze(dataset: &Path, out: &Path, opts: &AnalyzeOptions) -> CliResult<PathBuf> {
    if opts.bands < 2 {
        return Err(CliError::config("--bands must be at least 2"));
    }
    let ds = load(dataset)?;
    if opts.pairing == PairingMode::AllPairs {
        note_clipped_k(opts.k, ds.manifest.n_occurrences);
    }
    if opts.d_top > ds.manifest.n_occurrences.min(ds.dim()) {
        eprintln!(
            "note: d-top {} exceeds min(n, D); reporting {}",
            opts.d_top,
            ds.manifest.n_occurrences.min(ds.dim())
        );
    }
    let profiles = profile_all(&ds, opts)?;
    let bands = anisotropy::frequency_bands(&ds.occurrences, opts.bands)?;
    let ids: Vec<usize> = (0..ds.manifest.n_occurrences).collect();

    let mut dir = OutputDir::create(out)?;
    let mut summary = String::from("layer,baseline_b,sample_size");
    let d_top = profiles.first().map_or(0, |p| p.explained_variance.len());
    for j in 0..d_top {
        let _ = write!(summary, ",ev_{}", j + 1);
    }
    summary.push('\n');
    for p in &profiles {
        dir.write_json(&format!("profile_layer_{}.json", p.layer), p)?;
        dir.write(
            &format!("projection_layer_{}.csv", p.layer),
            projection_csv(&ids, &p.top2_projection, &bands),
        )?;
        let _ = write!(summary, "{},{},{}", p.layer, fmt_f64(p.baseline_b), p.sample_size);
        for r in &p.explained_variance {
            let _ = write!(summary, ",{}", fmt_f64(*r));
        }
        summary.push('\n');
    }
    dir.write_json("profiles.json", &profiles)?;
    dir.write("anisotropy.csv", summary)?;
    dir.commit("analyze", json!(opts), &[dataset])
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalOptions {
    pub k: usize,
    pub seed: u64,
    pub pairing: PairingMode,
    pub pos: Vec<Pos>,
    pub normalization: SenSimNormalization,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            k: 1000,
            seed: 0,
            pairing: PairingMode::AllPairs,
            pos: Pos::CONTENT.to_vec(),
            normalization: SenSimNormalization::PairMean,
        }
    }
}

/// Sense cohesion / separation report, vanilla and baseline-adjusted.
pub fn cmd_eval(dataset: &Path, out: &Path, opts: &EvalOptions) -> CliResult<PathBuf> {
    let restrict = pos_set(&opts.pos)?;
    let ds = load(dataset)?;
    let inventory = corpus::build_inventory(&ds.occurrences, &restrict);
    if inventory.by_sense.is_empty() {
        return Err(CliError::data(format!(
            "{}: no multi-sense lemmas among the annotated occurrences",
            dataset.display()
        )));
    }
    if opts.pairing == PairingMode::AllPairs {
        note_clipped_k(opts.k, ds.manifest.n_occurrences);
    }
    let baselines = layer_baselines(&ds, opts.k, opts.seed, opts.pairing)?;
    let report = metrics::layer_report(&ds, &inventory, &baselines, opts.normalization)?;

    let mut dir = OutputDir::create(out)?;
    dir.write("metrics.csv", report.to_csv())?;
    dir.write_json("metrics.json", &report)?;
    dir.write_json("inventory_summary.json", &inventory.summary())?;
    dir.commit("eval", json!(opts), &[dataset])
}

#[derive(Debug, Clone, Serialize)]
pub struct LaserLayerMeta {
    pub layer: usize,
    pub mean_vector: Vec<f64>,
    pub removed_components: Vec<Vec<f64>>,
    pub convergence: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LaserMeta {
    pub config: LaserConfig,
    pub source_model: String,
    pub graph_nodes: usize,
    pub graph_edges: usize,
    pub layers: Vec<LaserLayerMeta>,
}

pub fn read_laser_config(path: &Path) -> CliResult<LaserConfig> {
    let text = fs::read_to_string(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    let cfg: LaserConfig =
        serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    cfg.validate()
        .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    Ok(cfg)
}

/// Applies component removal and sense retrofitting to every layer and writes
/// the result as a new dataset plus `laser_meta.json`.
pub fn cmd_laser(dataset: &Path, config: &Path, out: &Path) -> CliResult<PathBuf> {
    let cfg = read_laser_config(config)?;
    let ds = load(dataset)?;
    let n = ds.manifest.n_occurrences;
    if n >= 1 && cfg.d_remove > (n - 1).min(ds.dim()) {
        return Err(CliError::config(format!(
            "d_remove = {} exceeds min(n - 1, D) = {}",
            cfg.d_remove,
            (n - 1).min(ds.dim())
        )));
    }
    let inventory = corpus::build_inventory(&ds.occurrences, &cfg.restrict_pos());
    let graph = laser::build_sense_graph(&inventory);

    let outputs: Vec<laser::LaserOutput> = ds
        .layers
        .par_iter()
        .map(|l| laser::laser(l, &inventory, &cfg).map_err(CliError::from))
        .collect::<CliResult<_>>()?;

    let layers: Vec<LayerMatrix> = outputs.iter().map(|o| o.q.clone()).collect();
    let mut result = EmbeddingDataset {
        manifest: ds.manifest.clone(),
        occurrences: ds.occurrences.clone(),
        layers,
    };
    result.manifest.extra.insert("postprocessing".into(), json!("laser"));
    result.manifest.extra.insert("laser_config".into(), json!(cfg));

    let meta = LaserMeta {
        config: cfg.clone(),
        source_model: ds.manifest.model_name.clone(),
        graph_nodes: graph.node_count(),
        graph_edges: graph.edge_count(),
        layers: outputs
            .iter()
            .map(|o| LaserLayerMeta {
                layer: o.q.layer,
                mean_vector: o.mean_vector.to_vec(),
                removed_components: o.removed_components.rows().into_iter().map(|r| r.to_vec()).collect(),
                convergence: o.convergence.clone(),
            })
            .collect(),
    };

    let mut dir = OutputDir::create(out)?;
    store::save_dataset(&result, dir.path()).map_err(|e| match e {
        isosense_core::Error::NonFinite { .. } => CliError::data(e),
        other => CliError::internal(other),
    })?;
    dir.record(store::MANIFEST_FILE);
    dir.record(OCCURRENCES_FILE);
    for k in 0..result.n_layers() {
        dir.record(store::layer_file_name(k));
    }
    dir.write_json(LASER_META_FILE, &meta)?;
    dir.commit("laser", json!(cfg), &[dataset, config])
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompareOptions {
    pub k: usize,
    pub seed: u64,
    pub d_top: usize,
    pub pairing: PairingMode,
    pub pos: Vec<Pos>,
}

impl Default for CompareOptions {
    fn default() -> Self {
        CompareOptions {
            k: 1000,
            seed: 0,
            d_top: 10,
            pairing: PairingMode::AllPairs,
            pos: Pos::CONTENT.to_vec(),
        }
    }
}

fn occurrence_table_bytes(ds: &EmbeddingDataset) -> CliResult<Vec<u8>> {
    let mut buf = Vec::new();
    corpus::write_tsv(&ds.occurrences, &mut buf).map_err(CliError::data)?;
    Ok(buf)
}

fn mismatch_sample(before: &EmbeddingDataset, after: &EmbeddingDataset) -> String {
    let mut lines = Vec::new();
    let n = before.occurrences.len().max(after.occurrences.len());
    for i in 0..n {
        let (a, b) = (before.occurrences.get(i), after.occurrences.get(i));
        let same = match (a, b) {
            (Some(a), Some(b)) => {
                (
                    &a.corpus_id,
                    a.sentence_idx,
                    a.token_idx,
                    &a.lemma,
                    a.pos,
                    &a.sense_key,
                    &a.surface,
                ) == (
                    &b.corpus_id,
                    b.sentence_idx,
                    b.token_idx,
                    &b.lemma,
                    b.pos,
                    &b.sense_key,
                    &b.surface,
                )
            }
            _ => false,
        };
        if !same {
            let show = |o: Option<&corpus::Occurrence>| match o {
                Some(o) => format!(
                    "{}/{}/{} {} {} {}",
                    o.corpus_id,
                    o.sentence_idx,
                    o.token_idx,
                    o.lemma,
                    o.pos,
                    o.sense_key.as_deref().unwrap_or("-")
                ),
                None => "<missing>".to_string(),
            };
            lines.push(format!("  row {i}: before [{}] vs after [{}]", show(a), show(b)));
            if lines.len() == 5 {
                break;
            }
        }
    }
    lines.join("\n")
}

#[derive(Debug, Clone, Serialize)]
pub struct StageLayer {
    pub baseline_b: f64,
    pub explained_variance: Vec<f64>,
    pub summary: LayerSummary,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonRow {
    pub layer: usize,
    pub before: StageLayer,
    pub after: StageLayer,
    pub change_sen_sim_adjusted: Option<f64>,
    pub change_inter_sim_adjusted: Option<f64>,
    pub change_delta: Option<f64>,
}

fn diff(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    Some(b? - a?)
}

fn stage(ds: &EmbeddingDataset, restrict: &BTreeSet<Pos>, opts: &CompareOptions) -> CliResult<Vec<StageLayer>> {
    let inventory = corpus::build_inventory(&ds.occurrences, restrict);
    let profiles = profile_all(
        ds,
        &AnalyzeOptions {
            k: opts.k,
            seed: opts.seed,
            d_top: opts.d_top,
            bands: 2,
            pairing: opts.pairing,
        },
    )?;
    ds.layers
        .par_iter()
        .zip(profiles.par_iter())
        .map(|(layer, p)| {
            let (summary, ..) =
                metrics::evaluate_layer(layer, &inventory, p.baseline_b, SenSimNormalization::PairMean)?;
            Ok(StageLayer {
                baseline_b: p.baseline_b,
                explained_variance: p.explained_variance.clone(),
                summary,
            })
        })
        .collect::<isosense_core::Result<Vec<_>>>()
        .map_err(CliError::from)
}

fn opt_cell(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// Side-by-side per-layer comparison of two datasets over the same
/// occurrence table, plus plot-ready CSVs.
pub fn cmd_compare(before: &Path, after: &Path, out: &Path, opts: &CompareOptions) -> CliResult<PathBuf> {
    let restrict = pos_set(&opts.pos)?;
    let b = load(before)?;
    let a = load(after)?;
    let (tb, ta) = (occurrence_table_bytes(&b)?, occurrence_table_bytes(&a)?);
    let (db, da) = (sha256_hex(&tb), sha256_hex(&ta));
    if db != da {
        return Err(CliError::data(format!(
            "occurrence tables differ (sha256 {db} vs {da}); first differing rows:\n{}",
            mismatch_sample(&b, &a)
        )));
    }
    if b.n_layers() != a.n_layers() {
        return Err(CliError::data(format!(
            "layer counts differ: {} before, {} after",
            b.n_layers(),
            a.n_layers()
        )));
    }
    if opts.pairing == PairingMode::AllPairs {
        note_clipped_k(opts.k, b.manifest.n_occurrences);
    }

    let sb = stage(&b, &restrict, opts)?;
    let sa = stage(&a, &restrict, opts)?;
    let rows: Vec<ComparisonRow> = sb
        .into_iter()
        .zip(sa)
        .enumerate()
        .map(|(layer, (before, after))| ComparisonRow {
            layer,
            change_sen_sim_adjusted: diff(before.summary.sen_sim_adjusted, after.summary.sen_sim_adjusted),
            change_inter_sim_adjusted: diff(before.summary.inter_sim_adjusted, after.summary.inter_sim_adjusted),
            change_delta: diff(before.summary.delta, after.summary.delta),
            before,
            after,
        })
        .collect();

    let mut table = String::from(
        "layer,baseline_before,baseline_after,sen_sim_adj_before,sen_sim_adj_after,\
inter_sim_adj_before,inter_sim_adj_after,delta_before,delta_after,\
change_sen_sim_adj,change_inter_sim_adj,change_delta\n",
    );
    let mut fig_baseline = String::from("layer,stage,baseline_b\n");
    let mut fig_variance = String::from("layer,stage,component,ratio\n");
    let mut fig_sense = String::from("layer,stage,sen_sim_adj,inter_sim_adj,delta\n");
    for r in &rows {
        let _ = writeln!(
            table,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.layer,
            fmt_f64(r.before.baseline_b),
            fmt_f64(r.after.baseline_b),
            opt_cell(r.before.summary.sen_sim_adjusted),
            opt_cell(r.after.summary.sen_sim_adjusted),
            opt_cell(r.before.summary.inter_sim_adjusted),
            opt_cell(r.after.summary.inter_sim_adjusted),
            opt_cell(r.before.summary.delta),
            opt_cell(r.after.summary.delta),
            opt_cell(r.change_sen_sim_adjusted),
            opt_cell(r.change_inter_sim_adjusted),
            opt_cell(r.change_delta),
        );
        for (name, s) in [("before", &r.before), ("after", &r.after)] {
            let _ = writeln!(fig_baseline, "{},{},{}", r.layer, name, fmt_f64(s.baseline_b));
            for (j, ratio) in s.explained_variance.iter().enumerate() {
                let _ = writeln!(fig_variance, "{},{},{},{}", r.layer, name, j + 1, fmt_f64(*ratio));
            }
            let _ = writeln!(
                fig_sense,
                "{},{},{},{},{}",
                r.layer,
                name,
                opt_cell(s.summary.sen_sim_adjusted),
                opt_cell(s.summary.inter_sim_adjusted),
                opt_cell(s.summary.delta)
            );
        }
    }

    let mut dir = OutputDir::create(out)?;
    dir.write("comparison.csv", table)?;
    dir.write_json("comparison.json", &rows)?;
    dir.write("fig_random_baseline.csv", fig_baseline)?;
    dir.write("fig_explained_variance.csv", fig_variance)?;
    dir.write("fig_sense_relatedness.csv", fig_sense)?;
    let mut config = json!(opts);
    config["occurrence_table_sha256"] = json!(db);
    dir.commit("compare", config, &[before, after])
}

/// Generates a synthetic dataset with its ground truth.
pub fn cmd_synth(spec_path: &Path, out: &Path) -> CliResult<PathBuf> {
    let text = fs::read_to_string(spec_path).map_err(|e| CliError::config(format!("{}: {e}", spec_path.display())))?;
    let spec: SynthSpec =
        serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", spec_path.display())))?;
    let (ds, truth) = synth::generate(&spec).map_err(|e| CliError::config(format!("{}: {e}", spec_path.display())))?;

    let mut dir = OutputDir::create(out)?;
    store::save_dataset(&ds, dir.path()).map_err(CliError::internal)?;
    dir.record(store::MANIFEST_FILE);
    dir.record(OCCURRENCES_FILE);
    for k in 0..ds.n_layers() {
        dir.record(store::layer_file_name(k));
    }
    dir.write_json("ground_truth.json", &truth)?;
    dir.commit("synth", json!(spec), &[spec_path])
}

#[derive(Debug, Clone, Serialize)]
pub struct InventoryReport {
    pub occurrences: usize,
    pub annotated: usize,
    pub retained: usize,
    pub summary: InventorySummary,
}

/// Loads a corpus, applies the multi-sense filter and reports per-POS counts
/// as lemma types and as occurrences. Also writes the occurrence table.
pub fn cmd_inventory(corpus_path: &Path, format: CorpusFormat, pos: &[Pos], out: &Path) -> CliResult<PathBuf> {
    let restrict = pos_set(pos)?;
    let occs = corpus::load_corpus(corpus_path, format)
        .map_err(|e| CliError::data(format!("{}: {e}", corpus_path.display())))?;
    let inventory = corpus::build_inventory(&occs, &restrict);
    let report = InventoryReport {
        occurrences: occs.len(),
        annotated: occs.iter().filter(|o| o.sense_key.is_some()).count(),
        retained: inventory.retained_count(),
        summary: inventory.summary(),
    };
    let mut table = Vec::new();
    corpus::write_tsv(&occs, &mut table).map_err(CliError::data)?;

    let mut dir = OutputDir::create(out)?;
    dir.write(OCCURRENCES_FILE, table)?;
    dir.write_json("inventory_summary.json", &report)?;
    let format_name = match format {
        CorpusFormat::Tsv => "tsv",
        CorpusFormat::UfsacXml => "ufsac_xml",
    };
    dir.commit("inventory", json!({"format": format_name, "pos": pos}), &[corpus_path])
}
