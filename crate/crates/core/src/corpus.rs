//! Sense-annotated occurrence tables and the multi-sense vocabulary filter.
//!
//! Two on-disk formats are accepted: a tab-separated table (the interchange
//! format shared with embedding datasets) and UFSAC-style XML, where each
//! `<word>` element may carry `lemma`, `pos` and `wn30_key` attributes.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TSV_HEADER: &str = "corpus_id\tsentence_idx\ttoken_idx\tsurface\tlemma\tpos\tsense_key";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Pos {
    Noun,
    Verb,
    Adj,
    Other,
}

impl Pos {
    pub const CONTENT: [Pos; 3] = [Pos::Noun, Pos::Verb, Pos::Adj];

    pub fn as_str(self) -> &'static str {
        match self {
            Pos::Noun => "NOUN",
            Pos::Verb => "VERB",
            Pos::Adj => "ADJ",
            Pos::Other => "OTHER",
        }
    }

    /// Maps Penn Treebank tags, WordNet single-letter tags and universal tags
    /// onto the four coarse classes. Unknown tags become `Other`.
    pub fn from_tag(tag: &str) -> Pos {
        let t = tag.trim();
        match t {
            "n" | "NOUN" | "PROPN" => return Pos::Noun,
            "v" | "VERB" => return Pos::Verb,
            "a" | "s" | "ADJ" => return Pos::Adj,
            _ => {}
        }
        if t.starts_with("NN") {
            Pos::Noun
        } else if t.starts_with("VB") {
            Pos::Verb
        } else if t.starts_with("JJ") {
            Pos::Adj
        } else {
            Pos::Other
        }
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Pos {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "NOUN" => Ok(Pos::Noun),
            "VERB" => Ok(Pos::Verb),
            "ADJ" => Ok(Pos::Adj),
            "OTHER" => Ok(Pos::Other),
            other => Err(format!("unknown POS '{other}' (expected NOUN, VERB, ADJ or OTHER)")),
        }
    }
}

/// One token instance in a sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Occurrence {
    pub occ_id: usize,
    pub corpus_id: String,
    pub sentence_idx: usize,
    pub token_idx: usize,
    pub surface: String,
    pub lemma: String,
    pub pos: Pos,
    pub sense_key: Option<String>,
    /// Rank of the lemma by frequency in the loaded table, 1 = most frequent.
    pub frequency_rank: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    UfsacXml,
    Tsv,
}

impl FromStr for CorpusFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "tsv" => Ok(CorpusFormat::Tsv),
            "xml" | "ufsac" | "ufsac_xml" => Ok(CorpusFormat::UfsacXml),
            other => Err(format!("unknown corpus format '{other}'")),
        }
    }
}

pub fn load_corpus(path: &Path, format: CorpusFormat) -> Result<Vec<Occurrence>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    match format {
        CorpusFormat::Tsv => parse_tsv(&text),
        CorpusFormat::UfsacXml => {
            let corpus_id = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "corpus".to_string());
            parse_ufsac_xml(&text, &corpus_id)
        }
    }
}

/// Parses the tab-separated occurrence table. Row order defines `occ_id`.
pub fn parse_tsv(text: &str) -> Result<Vec<Occurrence>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        None => return Ok(Vec::new()),
        Some((_, header)) => {
            let header = header.trim_end_matches('\r').trim_start_matches('\u{feff}');
            if header != TSV_HEADER {
                return Err(Error::Parse {
                    line: 1,
                    message: format!("expected header '{}'", TSV_HEADER.replace('\t', "<TAB>")),
                });
            }
        }
    }

    let mut occs = Vec::new();
    let mut seen = HashSet::new();
    for (idx, raw) in lines {
        let line_no = idx + 1;
        let line = raw.trim_end_matches('\r');
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 7 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected 7 tab-separated fields, found {}", fields.len()),
            });
        }
        let parse_idx = |s: &str, what: &str| -> Result<usize> {
            s.parse::<usize>().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("{what} '{s}' is not a non-negative integer"),
            })
        };
        let corpus_id = fields[0];
        if corpus_id.is_empty() {
            return Err(Error::Parse {
                line: line_no,
                message: "empty corpus_id".into(),
            });
        }
        let sentence_idx = parse_idx(fields[1], "sentence_idx")?;
        let token_idx = parse_idx(fields[2], "token_idx")?;
        let lemma = fields[4];
        if lemma.is_empty() {
            return Err(Error::Parse {
                line: line_no,
                message: "empty lemma".into(),
            });
        }
        let pos = fields[5]
            .parse::<Pos>()
            .map_err(|message| Error::Parse { line: line_no, message })?;
        if !seen.insert((corpus_id.to_string(), sentence_idx, token_idx)) {
            return Err(Error::DuplicateOccurrence {
                corpus_id: corpus_id.to_string(),
                sentence_idx,
                token_idx,
                line: line_no,
            });
        }
        occs.push(Occurrence {
            occ_id: occs.len(),
            corpus_id: corpus_id.to_string(),
            sentence_idx,
            token_idx,
            surface: fields[3].to_string(),
            lemma: lemma.to_string(),
            pos,
            sense_key: (!fields[6].is_empty()).then(|| fields[6].to_string()),
            frequency_rank: 0,
        });
    }
    assign_frequency_ranks(&mut occs);
    Ok(occs)
}

/// Parses UFSAC-style XML. Sentences are numbered in document order across the
/// whole file; tokens within each sentence. When `wn30_key` holds several
/// `;`-separated keys the first one is kept.
pub fn parse_ufsac_xml(text: &str, corpus_id: &str) -> Result<Vec<Occurrence>> {
    let mut reader = Reader::from_str(text);
    reader.config_mut().trim_text(true);

    let line_at = |pos: u64| {
        text.as_bytes()[..(pos as usize).min(text.len())]
            .iter()
            .filter(|&&b| b == b'\n')
            .count()
            + 1
    };

    let mut occs = Vec::new();
    let mut sentence: Option<usize> = None;
    let mut n_sentences = 0usize;
    let mut token = 0usize;

    loop {
        let event = reader.read_event().map_err(|e| Error::Parse {
            line: line_at(reader.error_position()),
            message: format!("XML error: {e}"),
        })?;
        match event {
            Event::Start(e) if e.name().as_ref() == b"sentence" => {
                sentence = Some(n_sentences);
                n_sentences += 1;
                token = 0;
            }
            Event::End(e) if e.name().as_ref() == b"sentence" => sentence = None,
            Event::Start(e) | Event::Empty(e) if e.name().as_ref() == b"word" => {
                // Line on which the tag closes.
                let line = line_at(reader.buffer_position().saturating_sub(1));
                let Some(sentence_idx) = sentence else {
                    return Err(Error::Parse {
                        line,
                        message: "<word> outside of <sentence>".into(),
                    });
                };
                let attrs = word_attributes(&e, line)?;
                let surface = attrs.get("surface_form").cloned().unwrap_or_default();
                let lemma = attrs
                    .get("lemma")
                    .filter(|l| !l.is_empty())
                    .cloned()
                    .unwrap_or_else(|| surface.to_lowercase());
                if lemma.is_empty() {
                    return Err(Error::Parse {
                        line,
                        message: "<word> without surface_form or lemma".into(),
                    });
                }
                let pos = attrs.get("pos").map(|p| Pos::from_tag(p)).unwrap_or(Pos::Other);
                let sense_key = attrs
                    .get("wn30_key")
                    .and_then(|k| k.split(';').map(str::trim).find(|k| !k.is_empty()))
                    .map(str::to_string);
                occs.push(Occurrence {
                    occ_id: occs.len(),
                    corpus_id: corpus_id.to_string(),
                    sentence_idx,
                    token_idx: token,
                    surface,
                    lemma,
                    pos,
                    sense_key,
                    frequency_rank: 0,
                });
                token += 1;
            }
            Event::Eof => break,
            _ => {}
        }
    }
    assign_frequency_ranks(&mut occs);
    Ok(occs)
}

fn word_attributes(e: &BytesStart<'_>, line: usize) -> Result<HashMap<String, String>> {
    let mut out = HashMap::new();
    for attr in e.attributes() {
        let attr = attr.map_err(|err| Error::Parse {
            line,
            message: format!("bad attribute: {err}"),
        })?;
        let key = String::from_utf8_lossy(attr.key.as_ref()).into_owned();
        let value = attr
            .unescape_value()
            .map_err(|err| Error::Parse {
                line,
                message: format!("bad attribute value: {err}"),
            })?
            .into_owned();
        out.insert(key, value);
    }
    Ok(out)
}

/// Writes the table in TSV form. Fields containing tabs or line breaks cannot
/// be represented and are rejected.
pub fn write_tsv<W: Write>(occs: &[Occurrence], mut out: W) -> Result<()> {
    let mut buf = String::with_capacity(64 * (occs.len() + 1));
    buf.push_str(TSV_HEADER);
    buf.push('\n');
    for (i, o) in occs.iter().enumerate() {
        if o.occ_id != i {
            return Err(Error::Shape(format!(
                "occurrence at position {i} has occ_id {}; ids must be dense and ordered",
                o.occ_id
            )));
        }
        let key = o.sense_key.as_deref().unwrap_or("");
        for field in [o.corpus_id.as_str(), &o.surface, &o.lemma, key] {
            if field.contains(['\t', '\n', '\r']) {
                return Err(Error::InvalidArgument(format!(
                    "occurrence {i}: field {field:?} contains a tab or line break"
                )));
            }
        }
        buf.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            o.corpus_id, o.sentence_idx, o.token_idx, o.surface, o.lemma, o.pos, key
        ));
    }
    out.write_all(buf.as_bytes())
        .map_err(|e| Error::io("<occurrence table>", e))
}

/// Ranks lemmas by count (descending), ties broken lexicographically.
pub fn assign_frequency_ranks(occs: &mut [Occurrence]) {
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for o in occs.iter() {
        *counts.entry(o.lemma.as_str()).or_default() += 1;
    }
    let mut ordered: Vec<(&str, usize)> = counts.into_iter().collect();
    ordered.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let ranks: HashMap<String, usize> = ordered
        .into_iter()
        .enumerate()
        .map(|(i, (lemma, _))| (lemma.to_string(), i + 1))
        .collect();
    for o in occs.iter_mut() {
        o.frequency_rank = ranks[&o.lemma];
    }
}

/// A sense of a particular lemma. Sense keys are lemma-scoped, so the pair is
/// the grouping key.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SenseId {
    pub lemma: String,
    pub sense_key: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SenseInventory {
    pub by_lemma: BTreeMap<String, BTreeSet<String>>,
    /// Occurrence ids per sense, ascending.
    pub by_sense: BTreeMap<SenseId, Vec<usize>>,
    pub m_counts: BTreeMap<SenseId, usize>,
    pub pos_of_sense: BTreeMap<SenseId, Pos>,
}

/// Per-POS counts of the retained vocabulary, as lemma types and as
/// occurrences.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct InventorySummary {
    pub lemma_types: BTreeMap<Pos, usize>,
    pub occurrences: BTreeMap<Pos, usize>,
    pub senses: usize,
    pub sensim_eligible_senses: usize,
}

impl SenseInventory {
    pub fn lemmas(&self) -> impl Iterator<Item = &str> {
        self.by_lemma.keys().map(String::as_str)
    }

    /// Senses of `lemma` with their occurrence ids, in key order.
    pub fn senses_of<'a>(&'a self, lemma: &'a str) -> impl Iterator<Item = (&'a SenseId, &'a [usize])> + 'a {
        self.by_lemma.get(lemma).into_iter().flat_map(move |keys| {
            keys.iter().map(move |k| {
                let id = SenseId {
                    lemma: lemma.to_string(),
                    sense_key: k.clone(),
                };
                let (id, occs) = self.by_sense.get_key_value(&id).expect("inventory is consistent");
                (id, occs.as_slice())
            })
        })
    }

    /// A sense needs at least two occurrences for within-sense pairs to exist.
    pub fn is_sensim_eligible(&self, sense: &SenseId) -> bool {
        self.m_counts.get(sense).copied().unwrap_or(0) >= 2
    }

    pub fn retained_count(&self) -> usize {
        self.m_counts.values().sum()
    }

    pub fn retained_occ_ids(&self) -> Vec<usize> {
        let mut ids: Vec<usize> = self.by_sense.values().flatten().copied().collect();
        ids.sort_unstable();
        ids
    }

    /// The retained occurrences, in table order.
    pub fn retained<'a>(&self, occs: &'a [Occurrence]) -> Vec<&'a Occurrence> {
        self.retained_occ_ids().into_iter().map(|i| &occs[i]).collect()
    }

    pub fn summary(&self) -> InventorySummary {
        let mut s = InventorySummary::default();
        let mut lemma_pos: BTreeSet<(Pos, &str)> = BTreeSet::new();
        for (sense, &m) in &self.m_counts {
            let pos = self.pos_of_sense[sense];
            *s.occurrences.entry(pos).or_default() += m;
            lemma_pos.insert((pos, sense.lemma.as_str()));
            s.senses += 1;
            if m >= 2 {
                s.sensim_eligible_senses += 1;
            }
        }
        for (pos, _) in lemma_pos {
            *s.lemma_types.entry(pos).or_default() += 1;
        }
        s
    }
}

/// Keeps annotated occurrences whose POS is in `restrict_pos` and whose lemma
/// is observed with at least two distinct senses.
pub fn build_inventory<'a, I>(occs: I, restrict_pos: &BTreeSet<Pos>) -> SenseInventory
where
    I: IntoIterator<Item = &'a Occurrence>,
{
    let mut groups: BTreeMap<SenseId, (Pos, Vec<usize>)> = BTreeMap::new();
    for o in occs {
        let Some(key) = &o.sense_key else { continue };
        if !restrict_pos.contains(&o.pos) {
            continue;
        }
        let id = SenseId {
            lemma: o.lemma.clone(),
            sense_key: key.clone(),
        };
        groups.entry(id).or_insert_with(|| (o.pos, Vec::new())).1.push(o.occ_id);
    }

    let mut by_lemma: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for id in groups.keys() {
        by_lemma
            .entry(id.lemma.clone())
            .or_default()
            .insert(id.sense_key.clone());
    }
    by_lemma.retain(|_, senses| senses.len() >= 2);

    let mut inv = SenseInventory {
        by_lemma,
        ..Default::default()
    };
    for (id, (pos, mut ids)) in groups {
        if !inv.by_lemma.contains_key(&id.lemma) {
            continue;
        }
        ids.sort_unstable();
        inv.m_counts.insert(id.clone(), ids.len());
        inv.pos_of_sense.insert(id.clone(), pos);
        inv.by_sense.insert(id, ids);
    }
    inv
}
