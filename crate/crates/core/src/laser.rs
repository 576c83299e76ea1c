//! Low-anisotropy sense retrofitting.
//!
//! Two stages per layer: mean-center and project out the top `d` principal
//! directions, then pull every annotated occurrence toward the other
//! occurrences of its sense while anchoring it to its own component-removed
//! vector. The sense graph is a clique per sense; cliques are never
//! materialized, neighbor sums come from per-sense running totals.

use std::collections::BTreeSet;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::corpus::{Pos, SenseInventory};
use crate::error::{Error, Result};
use crate::pca;
use crate::store::LayerMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaScheme {
    /// Edge weight 1/degree(i), so the neighbor weights of a node sum to 1.
    #[default]
    InverseDegree,
    /// Every edge weighs 1.
    UniformOne,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateMode {
    /// In-place sweeps in ascending occurrence order.
    #[default]
    GaussSeidel,
    /// Every node of a sweep reads the previous sweep's values.
    Jacobi,
    /// One Jacobi sweep from the component-removed vectors; `iterations` is ignored.
    SinglePass,
}

fn default_d_remove() -> usize {
    1
}
fn default_iterations() -> usize {
    10
}
fn default_alpha() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaserConfig {
    #[serde(default = "default_d_remove")]
    pub d_remove: usize,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    /// Anchor weight on each occurrence's own vector.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub beta_scheme: BetaScheme,
    #[serde(default)]
    pub update_mode: UpdateMode,
    /// Unused by the deterministic pipeline; recorded for provenance.
    #[serde(default)]
    pub seed: u64,
    /// Parts of speech whose occurrences join the sense graph.
    #[serde(default = "default_pos")]
    pub pos: Vec<Pos>,
}

fn default_pos() -> Vec<Pos> {
    Pos::CONTENT.to_vec()
}

impl Default for LaserConfig {
    fn default() -> Self {
        LaserConfig {
            d_remove: default_d_remove(),
            iterations: default_iterations(),
            alpha: default_alpha(),
            beta_scheme: BetaScheme::default(),
            update_mode: UpdateMode::default(),
            seed: 0,
            pos: default_pos(),
        }
    }
}

impl LaserConfig {
    pub fn restrict_pos(&self) -> BTreeSet<Pos> {
        self.pos.iter().copied().collect()
    }

    /// Checks the settings that do not depend on data shape.
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidArgument("iterations must be at least 1".into()));
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "alpha must be a finite non-negative number, got {}",
                self.alpha
            )));
        }
        if self.pos.is_empty() {
            return Err(Error::InvalidArgument("pos restriction must not be empty".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ComponentRemoval {
    pub v_prime: LayerMatrix,
    /// d_remove x D, one removed direction per row.
    pub removed_components: Array2<f64>,
    pub mean_vector: Array1<f64>,
}

/// Centers the layer and projects out its top `d_remove` principal directions.
pub fn remove_top_components(layer: &LayerMatrix, d_remove: usize) -> Result<ComponentRemoval> {
    let (n, d) = (layer.rows(), layer.dim());
    if n < 2 {
        return Err(Error::InsufficientSamples {
            needed: 2,
            available: n,
        });
    }
    let limit = (n - 1).min(d);
    if d_remove > limit {
        return Err(Error::InvalidArgument(format!(
            "d_remove = {d_remove} exceeds min(n - 1, D) = {limit}"
        )));
    }
    let (centered, mean) = pca::center(&layer.data);
    if d_remove == 0 {
        return Ok(ComponentRemoval {
            v_prime: LayerMatrix::new(layer.layer, centered),
            removed_components: Array2::zeros((0, d)),
            mean_vector: mean,
        });
    }

    let fit = match pca::fit(&layer.data) {
        Ok(fit) => fit,
        Err(Error::NoVariance) => {
            return Err(Error::RankDeficient {
                requested: d_remove,
                rank: 0,
            })
        }
        Err(e) => return Err(e),
    };
    if d_remove > fit.rank {
        return Err(Error::RankDeficient {
            requested: d_remove,
            rank: fit.rank,
        });
    }
    let components = fit.components.slice(ndarray::s![..d_remove, ..]).to_owned();
    let coeffs = centered.dot(&components.t());
    let v_prime = &centered - &coeffs.dot(&components);
    Ok(ComponentRemoval {
        v_prime: LayerMatrix::new(layer.layer, v_prime),
        removed_components: components,
        mean_vector: mean,
    })
}

/// Same-sense graph: one clique per sense.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SenseGraph {
    /// Member occurrence ids of each sense, ascending.
    groups: Vec<Vec<usize>>,
    /// (occ_id, group index), ascending by occ_id.
    nodes: Vec<(usize, usize)>,
}

impl SenseGraph {
    /// Builds a graph from explicit sense groups. Groups must be disjoint.
    pub fn from_groups(groups: Vec<Vec<usize>>) -> Result<Self> {
        let mut nodes = Vec::new();
        let mut groups = groups;
        for (g, members) in groups.iter_mut().enumerate() {
            members.sort_unstable();
            nodes.extend(members.iter().map(|&i| (i, g)));
        }
        nodes.sort_unstable();
        if let Some(w) = nodes.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidArgument(format!(
                "occurrence {} belongs to two senses",
                w[0].0
            )));
        }
        Ok(SenseGraph { groups, nodes })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.nodes.iter().map(|&(i, _)| i)
    }

    pub fn edge_count(&self) -> usize {
        self.groups
            .iter()
            .map(|g| g.len() * g.len().saturating_sub(1) / 2)
            .sum()
    }

    /// All edges as (smaller id, larger id). Quadratic in sense size.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.groups.iter().flat_map(|g| {
            g.iter()
                .enumerate()
                .flat_map(move |(a, &i)| g[a + 1..].iter().map(move |&j| (i, j)))
        })
    }

    fn group_index(&self, occ_id: usize) -> Option<usize> {
        self.nodes
            .binary_search_by_key(&occ_id, |&(i, _)| i)
            .ok()
            .map(|k| self.nodes[k].1)
    }

    /// Degree of `occ_id`; 0 for occurrences not in the graph.
    pub fn degree(&self, occ_id: usize) -> usize {
        self.group_index(occ_id).map_or(0, |g| self.groups[g].len() - 1)
    }

    pub fn neighbors(&self, occ_id: usize) -> impl Iterator<Item = usize> + '_ {
        self.group_index(occ_id)
            .into_iter()
            .flat_map(move |g| self.groups[g].iter().copied().filter(move |&j| j != occ_id))
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }
}

pub fn build_sense_graph(inventory: &SenseInventory) -> SenseGraph {
    SenseGraph::from_groups(inventory.by_sense.values().cloned().collect()).expect("inventory senses are disjoint")
}

/// Neighbor weight and normalizer for a node of degree `deg`.
fn weights(cfg: &LaserConfig, deg: usize) -> (f64, f64) {
    let beta = match cfg.beta_scheme {
        BetaScheme::InverseDegree => 1.0 / deg as f64,
        BetaScheme::UniformOne => 1.0,
    };
    (beta, beta * deg as f64 + cfg.alpha)
}

fn check_graph(v_prime: &LayerMatrix, graph: &SenseGraph) -> Result<()> {
    if let Some(&(max, _)) = graph.nodes.last() {
        if max >= v_prime.rows() {
            return Err(Error::InvalidArgument(format!(
                "sense graph references occurrence {max}, layer has {} rows",
                v_prime.rows()
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct RetrofitResult {
    pub q: LayerMatrix,
    /// Largest row displacement of each sweep.
    pub convergence: Vec<f64>,
}

pub fn retrofit(v_prime: &LayerMatrix, graph: &SenseGraph, cfg: &LaserConfig) -> Result<RetrofitResult> {
    cfg.validate()?;
    check_graph(v_prime, graph)?;
    if let Some((row, col)) = v_prime.find_non_finite() {
        return Err(Error::NonFinite {
            layer: v_prime.layer,
            row,
            col,
        });
    }

    let anchor = &v_prime.data;
    let mut q = anchor.clone();
    let sweeps = match cfg.update_mode {
        UpdateMode::SinglePass => 1,
        _ => cfg.iterations,
    };
    let jacobi = cfg.update_mode != UpdateMode::GaussSeidel;
    let mut convergence = Vec::with_capacity(sweeps);

    for _ in 0..sweeps {
        let prev = jacobi.then(|| q.clone());
        let mut sums: Vec<Array1<f64>> = graph
            .groups
            .iter()
            .map(|g| {
                let mut s = Array1::<f64>::zeros(q.ncols());
                for &i in g {
                    s += &q.row(i);
                }
                s
            })
            .collect();
        let mut max_step = 0.0f64;
        for &(i, g) in &graph.nodes {
            let deg = graph.groups[g].len() - 1;
            if deg == 0 {
                continue;
            }
            let (beta, norm) = weights(cfg, deg);
            let source = prev.as_ref().unwrap_or(&q);
            let neighbor_sum = &sums[g] - &source.row(i);
            let new = (neighbor_sum * beta + &anchor.row(i) * cfg.alpha) / norm;
            let step = (&new - &q.row(i)).mapv(|x| x * x).sum().sqrt();
            max_step = max_step.max(step);
            if !jacobi {
                sums[g] += &(&new - &q.row(i));
            }
            q.row_mut(i).assign(&new);
        }
        convergence.push(max_step);
    }
    Ok(RetrofitResult {
        q: LayerMatrix::new(v_prime.layer, q),
        convergence,
    })
}

/// Per-node distance between `q` and one update applied to `q`, in
/// ascending occ_id order. Zero at a fixed point.
pub fn update_residuals(
    q: &LayerMatrix,
    v_prime: &LayerMatrix,
    graph: &SenseGraph,
    cfg: &LaserConfig,
) -> Vec<(usize, f64)> {
    graph
        .nodes
        .iter()
        .map(|&(i, g)| {
            let deg = graph.groups[g].len() - 1;
            if deg == 0 {
                let d = &q.row(i) - &v_prime.row(i);
                return (i, d.dot(&d).sqrt());
            }
            let (beta, norm) = weights(cfg, deg);
            let neighbor_sum = graph.groups[g]
                .iter()
                .filter(|&&j| j != i)
                .fold(Array1::<f64>::zeros(q.dim()), |acc, &j| acc + q.row(j));
            let target = (neighbor_sum * beta + &v_prime.row(i) * cfg.alpha) / norm;
            let d = &q.row(i) - &target;
            (i, d.dot(&d).sqrt())
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct LaserOutput {
    pub v_prime: LayerMatrix,
    pub q: LayerMatrix,
    pub removed_components: Array2<f64>,
    pub mean_vector: Array1<f64>,
    pub convergence: Vec<f64>,
}

/// Component removal followed by retrofitting on one layer.
pub fn laser(layer: &LayerMatrix, inventory: &SenseInventory, cfg: &LaserConfig) -> Result<LaserOutput> {
    cfg.validate()?;
    let removal = remove_top_components(layer, cfg.d_remove)?;
    let graph = build_sense_graph(inventory);
    let RetrofitResult { q, convergence } = retrofit(&removal.v_prime, &graph, cfg)?;
    Ok(LaserOutput {
        v_prime: removal.v_prime,
        q,
        removed_components: removal.removed_components,
        mean_vector: removal.mean_vector,
        convergence,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_inventory, Occurrence};
    use ndarray::{array, Axis};

    fn row_mean(m: &Array2<f64>) -> Array1<f64> {
        m.mean_axis(Axis(0)).unwrap()
    }

    #[test]
    fn zero_removal_is_plain_centering() {
        let data = array![[1.0, 2.0], [3.0, -1.0], [0.5, 0.5]];
        let out = remove_top_components(&LayerMatrix::new(0, data.clone()), 0).unwrap();
        let (centered, mean) = pca::center(&data);
        assert_eq!(out.v_prime.data, centered);
        assert_eq!(out.mean_vector, mean);
        assert_eq!(out.removed_components.nrows(), 0);
    }

    #[test]
    fn rank_one_data_is_removed_completely() {
        let mu = [3.0, -1.0, 0.5, 2.0];
        let u = [0.5, 0.5, -0.5, 0.5];
        let c = [0.3, -1.2, 2.5, 0.0, 1.1];
        let data = Array2::from_shape_fn((5, 4), |(i, j)| mu[j] + c[i] * u[j]);
        let out = remove_top_components(&LayerMatrix::new(0, data), 1).unwrap();
        assert!(out.v_prime.data.iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn removal_beyond_rank_reports_rank() {
        let data = Array2::from_shape_fn((6, 3), |(i, j)| (i as f64) * [1.0, 2.0, 3.0][j]);
        let err = remove_top_components(&LayerMatrix::new(0, data.clone()), 2).unwrap_err();
        assert!(matches!(err, Error::RankDeficient { requested: 2, rank: 1 }), "{err}");
        assert!(remove_top_components(&LayerMatrix::new(0, data), 4).is_err());
    }

    #[test]
    fn removed_directions_are_orthogonal_to_output() {
        let data = Array2::from_shape_fn((12, 5), |(i, j)| ((i * 7 + j * 3) % 11) as f64 + 0.1 * (i * j) as f64);
        let out = remove_top_components(&LayerMatrix::new(0, data), 2).unwrap();
        let dots = out.v_prime.data.dot(&out.removed_components.t());
        assert!(dots.iter().all(|v| v.abs() < 1e-9));
        assert!(row_mean(&out.v_prime.data).iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn triangle_and_isolated_nodes() {
        let g = SenseGraph::from_groups(vec![vec![4, 1, 2], vec![7]]).unwrap();
        assert_eq!(g.edge_count(), 3);
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(1, 2), (1, 4), (2, 4)]);
        assert_eq!(g.degree(1), 2);
        assert_eq!(g.degree(7), 0);
        assert_eq!(g.degree(99), 0);
        assert_eq!(g.neighbors(2).collect::<Vec<_>>(), vec![1, 4]);
    }

    #[test]
    fn clique_edges_from_group_sizes() {
        let g = SenseGraph::from_groups(vec![vec![0, 1], vec![2, 3, 4, 5]]).unwrap();
        assert_eq!(g.edge_count(), 7);
        assert_eq!(g.edges().count(), 7);
        assert!(SenseGraph::from_groups(vec![vec![0, 1], vec![1, 2]]).is_err());
    }

    #[test]
    fn graph_from_inventory_uses_senses() {
        let occs: Vec<Occurrence> = [("w", "a"), ("w", "a"), ("w", "b"), ("w", "a"), ("z", "c")]
            .iter()
            .enumerate()
            .map(|(i, (l, k))| Occurrence {
                occ_id: i,
                corpus_id: "t".into(),
                sentence_idx: i,
                token_idx: 0,
                surface: l.to_string(),
                lemma: l.to_string(),
                pos: Pos::Noun,
                sense_key: Some(k.to_string()),
                frequency_rank: 1,
            })
            .collect();
        let inv = build_inventory(&occs, &Pos::CONTENT.into_iter().collect());
        let g = build_sense_graph(&inv);
        assert_eq!(g.node_count(), 4);
        assert_eq!(g.edge_count(), 3);
        assert_eq!(g.degree(2), 0);
        assert_eq!(g.degree(3), 2);
    }

    #[test]
    fn edgeless_graph_returns_anchor_bit_exact() {
        let v = LayerMatrix::new(0, array![[0.1, -0.7], [1e-300, 3.3]]);
        let g = SenseGraph::from_groups(vec![vec![0], vec![1]]).unwrap();
        for mode in [UpdateMode::GaussSeidel, UpdateMode::Jacobi, UpdateMode::SinglePass] {
            let cfg = LaserConfig {
                update_mode: mode,
                iterations: 7,
                ..Default::default()
            };
            assert_eq!(retrofit(&v, &g, &cfg).unwrap().q, v);
        }
    }

    #[test]
    fn two_node_sense_matches_closed_form() {
        // q_a = (q_b + a) / 2 and q_b = (q_a + b) / 2  =>  q_a = (2a + b) / 3.
        let a = array![1.0, 0.0, 2.0];
        let b = array![0.0, 3.0, -1.0];
        let mut data = Array2::zeros((2, 3));
        data.row_mut(0).assign(&a);
        data.row_mut(1).assign(&b);
        let v = LayerMatrix::new(0, data);
        let g = SenseGraph::from_groups(vec![vec![0, 1]]).unwrap();
        let cfg = LaserConfig {
            beta_scheme: BetaScheme::UniformOne,
            iterations: 100,
            ..Default::default()
        };
        let out = retrofit(&v, &g, &cfg).unwrap();
        let qa = (&a * 2.0 + &b) / 3.0;
        let qb = (&b * 2.0 + &a) / 3.0;
        for j in 0..3 {
            assert!((out.q.data[[0, j]] - qa[j]).abs() < 1e-12);
            assert!((out.q.data[[1, j]] - qb[j]).abs() < 1e-12);
        }
        assert!(out.convergence.last().unwrap() < &1e-12);
    }

    #[test]
    fn single_pass_uses_anchors_for_neighbors() {
        let v = LayerMatrix::new(0, array![[2.0, 0.0], [0.0, 2.0], [4.0, 4.0]]);
        let g = SenseGraph::from_groups(vec![vec![0, 1, 2]]).unwrap();
        let cfg = LaserConfig {
            update_mode: UpdateMode::SinglePass,
            iterations: 50,
            ..Default::default()
        };
        let out = retrofit(&v, &g, &cfg).unwrap();
        assert_eq!(out.convergence.len(), 1);
        // Row 0: (mean of v1, v2 + v0) / 2 = ((2, 3) + (2, 0)) / 2.
        assert_eq!(out.q.data.row(0).to_vec(), vec![2.0, 1.5]);
    }

    #[test]
    fn rejects_bad_config() {
        let v = LayerMatrix::new(0, array![[1.0], [2.0]]);
        let g = SenseGraph::from_groups(vec![vec![0, 1]]).unwrap();
        let bad = [
            LaserConfig {
                iterations: 0,
                ..Default::default()
            },
            LaserConfig {
                alpha: -1.0,
                ..Default::default()
            },
            LaserConfig {
                alpha: f64::NAN,
                ..Default::default()
            },
        ];
        for cfg in bad {
            assert!(retrofit(&v, &g, &cfg).is_err());
        }
        let g = SenseGraph::from_groups(vec![vec![0, 5]]).unwrap();
        assert!(retrofit(&v, &g, &LaserConfig::default()).is_err());
    }

    #[test]
    fn config_json_defaults_and_unknown_keys() {
        let cfg: LaserConfig =
            serde_json::from_str(r#"{"d_remove": 2, "beta_scheme": "uniform_one", "update_mode": "jacobi"}"#).unwrap();
        assert_eq!(cfg.d_remove, 2);
        assert_eq!(cfg.iterations, 10);
        assert_eq!(cfg.alpha, 1.0);
        assert_eq!(cfg.beta_scheme, BetaScheme::UniformOne);
        assert_eq!(cfg.update_mode, UpdateMode::Jacobi);
        assert!(serde_json::from_str::<LaserConfig>(r#"{"d_remov": 2}"#).is_err());
    }
}
