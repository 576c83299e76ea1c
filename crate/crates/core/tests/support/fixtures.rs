//! Builders turning plain rows and index groups into library types.
#![allow(dead_code)]

use std::collections::BTreeSet;

use isosense_core::corpus::assign_frequency_ranks;
use isosense_core::{build_inventory, LayerMatrix, Occurrence, Pos, SenseInventory};
use ndarray::Array2;

pub fn layer(rows: &[Vec<f64>]) -> LayerMatrix {
    let d = rows[0].len();
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    LayerMatrix::new(0, Array2::from_shape_vec((rows.len(), d), flat).unwrap())
}

pub fn rows_of(layer: &LayerMatrix) -> Vec<Vec<f64>> {
    layer.data.rows().into_iter().map(|r| r.to_vec()).collect()
}

/// One lemma `word` whose senses are the given groups; rows outside every
/// group are unannotated filler.
pub fn occurrences(n: usize, groups: &[Vec<usize>]) -> Vec<Occurrence> {
    let mut sense_of = vec![None; n];
    for (s, g) in groups.iter().enumerate() {
        for &i in g {
            sense_of[i] = Some(format!("word.n.{:02}", s + 1));
        }
    }
    let mut occs: Vec<Occurrence> = sense_of
        .into_iter()
        .enumerate()
        .map(|(i, key)| Occurrence {
            occ_id: i,
            corpus_id: "T".into(),
            sentence_idx: i,
            token_idx: 0,
            surface: "word".into(),
            lemma: if key.is_some() { "word".into() } else { "filler".into() },
            pos: if key.is_some() { Pos::Noun } else { Pos::Other },
            sense_key: key,
            frequency_rank: 0,
        })
        .collect();
    assign_frequency_ranks(&mut occs);
    occs
}

pub fn all_pos() -> BTreeSet<Pos> {
    [Pos::Noun, Pos::Verb, Pos::Adj, Pos::Other].into_iter().collect()
}

pub fn inventory(n: usize, groups: &[Vec<usize>]) -> SenseInventory {
    build_inventory(&occurrences(n, groups), &all_pos())
}
