//! Sense cohesion and separation scores.
//!
//! * `sense_similarity`: mean cosine over distinct pairs of one sense's occurrences.
//! * `inter_sense_similarity`: for every pair of senses of a lemma, the mean
//!   cross-sense cosine; then the unweighted mean over sense pairs.
//! * adjusted variants subtract the layer's random-pair baseline.
//! * `delta`: mean within-sense similarity minus inter-sense similarity.
//!
//! Pair sums are computed from per-sense sums of unit vectors, which makes a
//! sense with `m` occurrences cost O(mD) rather than O(m^2 D). Occurrence ids
//! are sorted first so that results do not depend on input order.

use std::collections::HashSet;
use std::fmt::Write as _;

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::anisotropy::unit_row;
use crate::corpus::SenseInventory;
use crate::error::{Error, Result};
use crate::store::{EmbeddingDataset, LayerMatrix};

/// Normalization of the within-sense pair sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SenSimNormalization {
    /// Mean over the m(m-1)/2 distinct pairs; always within [-1, 1].
    #[default]
    PairMean,
    /// Sum over the m(m-1) ordered pairs divided by m. Not bounded by 1;
    /// kept only for comparison with the unnormalized formula.
    Literal,
}

struct GroupSum {
    m: usize,
    sum: Array1<f64>,
    self_dot: f64,
}

impl GroupSum {
    fn new(layer: &LayerMatrix, ids: &[usize]) -> Result<Self> {
        let mut sorted = ids.to_vec();
        sorted.sort_unstable();
        let mut sum = Array1::<f64>::zeros(layer.dim());
        let mut self_dot = 0.0;
        for &i in &sorted {
            if i >= layer.rows() {
                return Err(Error::InvalidArgument(format!(
                    "occurrence {i} out of range for a layer with {} rows",
                    layer.rows()
                )));
            }
            let u = unit_row(layer, i)?;
            self_dot += u.dot(&u);
            sum += &u;
        }
        Ok(GroupSum {
            m: sorted.len(),
            sum,
            self_dot,
        })
    }

    /// Sum of cosines over unordered distinct pairs within the group.
    fn pair_sum(&self) -> f64 {
        (self.sum.dot(&self.sum) - self.self_dot) / 2.0
    }

    fn within(&self, norm: SenSimNormalization) -> f64 {
        let m = self.m as f64;
        match norm {
            SenSimNormalization::PairMean => (self.pair_sum() / (m * (m - 1.0) / 2.0)).clamp(-1.0, 1.0),
            SenSimNormalization::Literal => 2.0 * self.pair_sum() / m,
        }
    }

    fn cross_mean(&self, other: &GroupSum) -> f64 {
        (self.sum.dot(&other.sum) / (self.m as f64 * other.m as f64)).clamp(-1.0, 1.0)
    }
}

pub fn sense_similarity(layer: &LayerMatrix, occ_ids: &[usize]) -> Result<f64> {
    sense_similarity_with(layer, occ_ids, SenSimNormalization::PairMean)
}

pub fn sense_similarity_with(layer: &LayerMatrix, occ_ids: &[usize], norm: SenSimNormalization) -> Result<f64> {
    if occ_ids.len() < 2 {
        return Err(Error::InsufficientSamples {
            needed: 2,
            available: occ_ids.len(),
        });
    }
    Ok(GroupSum::new(layer, occ_ids)?.within(norm))
}

fn check_groups(groups: &[&[usize]]) -> Result<()> {
    if groups.len() < 2 {
        return Err(Error::InsufficientSamples {
            needed: 2,
            available: groups.len(),
        });
    }
    let mut seen = HashSet::new();
    for g in groups {
        if g.is_empty() {
            return Err(Error::InvalidArgument("empty sense group".into()));
        }
        for &i in g.iter() {
            if !seen.insert(i) {
                return Err(Error::InvalidArgument(format!(
                    "occurrence {i} appears in two sense groups"
                )));
            }
        }
    }
    Ok(())
}

fn inter_from_sums(sums: &[GroupSum]) -> f64 {
    let mut total = 0.0;
    let mut pairs = 0usize;
    for a in 0..sums.len() {
        for b in (a + 1)..sums.len() {
            total += sums[a].cross_mean(&sums[b]);
            pairs += 1;
        }
    }
    total / pairs as f64
}

pub fn inter_sense_similarity(layer: &LayerMatrix, groups: &[&[usize]]) -> Result<f64> {
    check_groups(groups)?;
    let sums = groups
        .iter()
        .map(|g| GroupSum::new(layer, g))
        .collect::<Result<Vec<_>>>()?;
    Ok(inter_from_sums(&sums))
}

/// Subtracts the layer's random-pair baseline.
pub fn adjust(value: f64, baseline_b: f64) -> f64 {
    value - baseline_b
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SenseScore {
    pub layer: usize,
    pub lemma: String,
    pub sense_key: String,
    pub m: usize,
    pub sen_sim: f64,
    pub sen_sim_adjusted: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordScore {
    pub layer: usize,
    pub lemma: String,
    pub n_senses: usize,
    pub n_occurrences: usize,
    pub inter_sim: f64,
    pub inter_sim_adjusted: f64,
    pub mean_sen_sim: f64,
    pub mean_sen_sim_adjusted: f64,
    pub delta: f64,
    /// Set when `delta` leaves the nominal [-1, 1] range (possible up to +-2).
    pub out_of_nominal_range: bool,
}

impl WordScore {
    /// Delta recomputed from the adjusted values; equals `delta` up to rounding.
    pub fn delta_from_adjusted(&self) -> f64 {
        self.mean_sen_sim_adjusted - self.inter_sim_adjusted
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkipReason {
    /// Fewer than two senses; nothing to separate.
    FewerThanTwoSenses,
    /// No sense has two or more occurrences, so no within-sense pair exists.
    NoEligibleSense,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedWord {
    pub layer: usize,
    pub lemma: String,
    pub reason: SkipReason,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WordEvaluation {
    pub word: WordScore,
    pub senses: Vec<SenseScore>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum WordOutcome {
    Scored(WordEvaluation),
    Skipped(SkippedWord),
}

/// Scores one lemma of the inventory at one layer.
pub fn word_delta(
    layer: &LayerMatrix,
    inventory: &SenseInventory,
    lemma: &str,
    baseline_b: f64,
    norm: SenSimNormalization,
) -> Result<WordOutcome> {
    let senses: Vec<_> = inventory.senses_of(lemma).collect();
    let skip = |reason| {
        Ok(WordOutcome::Skipped(SkippedWord {
            layer: layer.layer,
            lemma: lemma.to_string(),
            reason,
        }))
    };
    if senses.len() < 2 {
        return skip(SkipReason::FewerThanTwoSenses);
    }
    if senses.iter().all(|(_, ids)| ids.len() < 2) {
        return skip(SkipReason::NoEligibleSense);
    }

    let groups: Vec<&[usize]> = senses.iter().map(|(_, ids)| *ids).collect();
    check_groups(&groups)?;
    let sums = groups
        .iter()
        .map(|g| GroupSum::new(layer, g))
        .collect::<Result<Vec<_>>>()?;

    let mut scores = Vec::new();
    for ((id, _), sum) in senses.iter().zip(&sums) {
        if sum.m < 2 {
            continue;
        }
        let sen_sim = sum.within(norm);
        scores.push(SenseScore {
            layer: layer.layer,
            lemma: lemma.to_string(),
            sense_key: id.sense_key.clone(),
            m: sum.m,
            sen_sim,
            sen_sim_adjusted: adjust(sen_sim, baseline_b),
        });
    }
    let mean_sen_sim = scores.iter().map(|s| s.sen_sim).sum::<f64>() / scores.len() as f64;
    let mean_sen_sim_adjusted = scores.iter().map(|s| s.sen_sim_adjusted).sum::<f64>() / scores.len() as f64;
    let inter_sim = inter_from_sums(&sums);
    let delta = mean_sen_sim - inter_sim;
    Ok(WordOutcome::Scored(WordEvaluation {
        word: WordScore {
            layer: layer.layer,
            lemma: lemma.to_string(),
            n_senses: sums.len(),
            n_occurrences: sums.iter().map(|s| s.m).sum(),
            inter_sim,
            inter_sim_adjusted: adjust(inter_sim, baseline_b),
            mean_sen_sim,
            mean_sen_sim_adjusted,
            delta,
            out_of_nominal_range: !(-1.0..=1.0).contains(&delta),
        },
        senses: scores,
    }))
}

/// Aggregate scores of one layer. Each similarity is averaged three ways:
/// over senses / lemmas (macro), per lemma, and weighted by occurrence counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerSummary {
    pub layer: usize,
    pub baseline_b: f64,
    pub n_senses: usize,
    pub n_words: usize,
    pub n_skipped: usize,
    pub n_occurrences: usize,
    /// Mean over senses of within-sense similarity (headline).
    pub sen_sim: Option<f64>,
    pub sen_sim_adjusted: Option<f64>,
    /// Mean over lemmas of each lemma's mean sense similarity.
    pub sen_sim_by_word: Option<f64>,
    pub sen_sim_by_word_adjusted: Option<f64>,
    /// Sense similarities weighted by sense size.
    pub sen_sim_by_occurrence: Option<f64>,
    pub sen_sim_by_occurrence_adjusted: Option<f64>,
    /// Mean over lemmas.
    pub inter_sim: Option<f64>,
    pub inter_sim_adjusted: Option<f64>,
    pub inter_sim_by_occurrence: Option<f64>,
    pub inter_sim_by_occurrence_adjusted: Option<f64>,
    /// Mean over lemmas (headline).
    pub delta: Option<f64>,
    pub delta_by_occurrence: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub layers: Vec<LayerSummary>,
    pub senses: Vec<SenseScore>,
    pub words: Vec<WordScore>,
    pub skipped: Vec<SkippedWord>,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

fn weighted_mean(values: impl Iterator<Item = (f64, usize)>) -> Option<f64> {
    let (sum, w) = values.fold((0.0, 0usize), |(s, w), (v, k)| (s + v * k as f64, w + k));
    (w > 0).then(|| sum / w as f64)
}

/// Layer aggregate plus the per-sense, per-word and skipped rows behind it.
pub type LayerEvaluation = (LayerSummary, Vec<SenseScore>, Vec<WordScore>, Vec<SkippedWord>);

/// Scores every lemma of the inventory at one layer and aggregates.
pub fn evaluate_layer(
    layer: &LayerMatrix,
    inventory: &SenseInventory,
    baseline_b: f64,
    norm: SenSimNormalization,
) -> Result<LayerEvaluation> {
    let mut senses = Vec::new();
    let mut words = Vec::new();
    let mut skipped = Vec::new();
    for lemma in inventory.lemmas() {
        match word_delta(layer, inventory, lemma, baseline_b, norm)? {
            WordOutcome::Scored(eval) => {
                senses.extend(eval.senses);
                words.push(eval.word);
            }
            WordOutcome::Skipped(s) => skipped.push(s),
        }
    }
    let summary = LayerSummary {
        layer: layer.layer,
        baseline_b,
        n_senses: senses.len(),
        n_words: words.len(),
        n_skipped: skipped.len(),
        n_occurrences: words.iter().map(|w| w.n_occurrences).sum(),
        sen_sim: mean(senses.iter().map(|s| s.sen_sim)),
        sen_sim_adjusted: mean(senses.iter().map(|s| s.sen_sim_adjusted)),
        sen_sim_by_word: mean(words.iter().map(|w| w.mean_sen_sim)),
        sen_sim_by_word_adjusted: mean(words.iter().map(|w| w.mean_sen_sim_adjusted)),
        sen_sim_by_occurrence: weighted_mean(senses.iter().map(|s| (s.sen_sim, s.m))),
        sen_sim_by_occurrence_adjusted: weighted_mean(senses.iter().map(|s| (s.sen_sim_adjusted, s.m))),
        inter_sim: mean(words.iter().map(|w| w.inter_sim)),
        inter_sim_adjusted: mean(words.iter().map(|w| w.inter_sim_adjusted)),
        inter_sim_by_occurrence: weighted_mean(words.iter().map(|w| (w.inter_sim, w.n_occurrences))),
        inter_sim_by_occurrence_adjusted: weighted_mean(words.iter().map(|w| (w.inter_sim_adjusted, w.n_occurrences))),
        delta: mean(words.iter().map(|w| w.delta)),
        delta_by_occurrence: weighted_mean(words.iter().map(|w| (w.delta, w.n_occurrences))),
    };
    Ok((summary, senses, words, skipped))
}

/// Per-layer report over a whole dataset. `baselines[k]` is layer k's
/// random-pair baseline.
pub fn layer_report(
    ds: &EmbeddingDataset,
    inventory: &SenseInventory,
    baselines: &[f64],
    norm: SenSimNormalization,
) -> Result<MetricsReport> {
    if baselines.len() != ds.n_layers() {
        return Err(Error::InvalidArgument(format!(
            "{} baselines for {} layers",
            baselines.len(),
            ds.n_layers()
        )));
    }
    let mut report = MetricsReport {
        layers: Vec::new(),
        senses: Vec::new(),
        words: Vec::new(),
        skipped: Vec::new(),
    };
    for (layer, &b) in ds.layers.iter().zip(baselines) {
        let (summary, senses, words, skipped) = evaluate_layer(layer, inventory, b, norm)?;
        report.layers.push(summary);
        report.senses.extend(senses);
        report.words.extend(words);
        report.skipped.extend(skipped);
    }
    Ok(report)
}

pub const REPORT_CSV_HEADER: &str = "layer,scope,key,m,sen_sim,sen_sim_adj,inter_sim,inter_sim_adj,delta";

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn csv_key(key: &str) -> String {
    if key.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", key.replace('"', "\"\""))
    } else {
        key.to_string()
    }
}

impl MetricsReport {
    /// CSV export. Layer-scope rows appear under three keys: `macro`
    /// (sense-averaged similarity, lemma-averaged inter-sense similarity and
    /// delta), `by_word` and `by_occurrence`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(REPORT_CSV_HEADER);
        out.push('\n');
        for l in &self.layers {
            let rows = [
                (
                    "macro",
                    l.sen_sim,
                    l.sen_sim_adjusted,
                    l.inter_sim,
                    l.inter_sim_adjusted,
                    l.delta,
                ),
                (
                    "by_word",
                    l.sen_sim_by_word,
                    l.sen_sim_by_word_adjusted,
                    l.inter_sim,
                    l.inter_sim_adjusted,
                    l.delta,
                ),
                (
                    "by_occurrence",
                    l.sen_sim_by_occurrence,
                    l.sen_sim_by_occurrence_adjusted,
                    l.inter_sim_by_occurrence,
                    l.inter_sim_by_occurrence_adjusted,
                    l.delta_by_occurrence,
                ),
            ];
            for (key, s, sa, i, ia, d) in rows {
                let _ = writeln!(
                    out,
                    "{},layer,{},{},{},{},{},{},{}",
                    l.layer,
                    key,
                    l.n_occurrences,
                    cell(s),
                    cell(sa),
                    cell(i),
                    cell(ia),
                    cell(d)
                );
            }
        }
        for w in &self.words {
            let _ = writeln!(
                out,
                "{},word,{},{},{},{},{},{},{}",
                w.layer,
                csv_key(&w.lemma),
                w.n_occurrences,
                w.mean_sen_sim,
                w.mean_sen_sim_adjusted,
                w.inter_sim,
                w.inter_sim_adjusted,
                w.delta
            );
        }
        for s in &self.senses {
            let _ = writeln!(
                out,
                "{},sense,{},{},{},{},,,",
                s.layer,
                csv_key(&s.sense_key),
                s.m,
                s.sen_sim,
                s.sen_sim_adjusted
            );
        }
        out
    }
}
