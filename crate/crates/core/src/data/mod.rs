//! Graph and hypergraph data model, dataset bundles, masks, and splits.

mod bundle;
mod mask;
mod sbm;
mod splits;

pub use bundle::{
    load_bundle, load_bundle_with, read_features, save_bundle, write_features_csv,
    write_features_f32, LoadOptions,
};
pub use mask::{generate_mask, BoolMatrix, MaskMode};
pub use sbm::sbm_generate;
pub use splits::make_splits;

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

/// Simple undirected graph with a symmetric 0/1 adjacency matrix,
/// zero diagonal, and each edge stored once as `(lo, hi)`.
#[derive(Debug, Clone)]
pub struct Graph {
    pub n_nodes: usize,
    pub edges: Vec<(usize, usize)>,
    pub adjacency: SparseMatrix,
}

impl Graph {
    /// Builds from an edge list; self-loops are dropped and duplicate
    /// edges collapsed.
    pub fn from_edges(n_nodes: usize, edges: &[(usize, usize)]) -> Result<Graph> {
        let mut cleaned: Vec<(usize, usize)> = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            if a >= n_nodes || b >= n_nodes {
                return Err(Error::IndexOutOfBounds(format!(
                    "edge ({a},{b}) outside graph with {n_nodes} nodes"
                )));
            }
            if a == b {
                continue;
            }
            cleaned.push((a.min(b), a.max(b)));
        }
        cleaned.sort_unstable();
        cleaned.dedup();

        let mut rows = Vec::with_capacity(cleaned.len() * 2);
        let mut cols = Vec::with_capacity(cleaned.len() * 2);
        for &(a, b) in &cleaned {
            rows.push(a);
            cols.push(b);
            rows.push(b);
            cols.push(a);
        }
        let vals = vec![1.0; rows.len()];
        let adjacency = SparseMatrix::from_triplets(&rows, &cols, &vals, (n_nodes, n_nodes))?;
        Ok(Graph {
            n_nodes,
            edges: cleaned,
            adjacency,
        })
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.adjacency.row_iter(v).map(|(c, _)| c)
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency.row_offsets()[v + 1] - self.adjacency.row_offsets()[v]
    }

    /// Connected components by BFS; returns a component id per node.
    pub fn component_ids(&self) -> Vec<usize> {
        let mut comp = vec![usize::MAX; self.n_nodes];
        let mut next = 0;
        let mut queue = std::collections::VecDeque::new();
        for start in 0..self.n_nodes {
            if comp[start] != usize::MAX {
                continue;
            }
            comp[start] = next;
            queue.push_back(start);
            while let Some(u) = queue.pop_front() {
                for v in self.neighbors(u) {
                    if comp[v] == usize::MAX {
                        comp[v] = next;
                        queue.push_back(v);
                    }
                }
            }
            next += 1;
        }
        comp
    }

    /// Nodes of the largest connected component in ascending order
    /// (ties broken by lowest component id).
    pub fn largest_component_nodes(&self) -> Vec<usize> {
        let comp = self.component_ids();
        let n_comp = comp.iter().copied().max().map_or(0, |m| m + 1);
        let mut sizes = vec![0usize; n_comp];
        for &c in &comp {
            sizes[c] += 1;
        }
        let best = (0..n_comp).max_by_key(|&c| (sizes[c], usize::MAX - c));
        match best {
            Some(c) => (0..self.n_nodes).filter(|&v| comp[v] == c).collect(),
            None => Vec::new(),
        }
    }
}

/// Hypergraph as a node-by-hyperedge 0/1 incidence matrix plus one
/// positive weight per hyperedge.
#[derive(Debug, Clone)]
pub struct Hypergraph {
    pub incidence: SparseMatrix,
    pub hyperedge_weights: Vec<f64>,
}

impl Hypergraph {
    /// Validates that no hyperedge is empty and weights are positive.
    pub fn new(incidence: SparseMatrix, hyperedge_weights: Vec<f64>) -> Result<Hypergraph> {
        if hyperedge_weights.len() != incidence.n_cols() {
            return Err(Error::ShapeMismatch(format!(
                "{} hyperedge weights for {} hyperedges",
                hyperedge_weights.len(),
                incidence.n_cols()
            )));
        }
        if let Some(bad) = hyperedge_weights.iter().position(|w| !(*w > 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "hyperedge {bad} has non-positive weight"
            )));
        }
        let mut edge_degree = vec![0usize; incidence.n_cols()];
        for r in 0..incidence.n_rows() {
            for (c, v) in incidence.row_iter(r) {
                if v != 1.0 {
                    return Err(Error::InvalidArgument(format!(
                        "incidence entry ({r},{c}) is {v}, expected 1"
                    )));
                }
                edge_degree[c] += 1;
            }
        }
        if let Some(bad) = edge_degree.iter().position(|&d| d == 0) {
            return Err(Error::DegenerateInput(format!("hyperedge {bad} is empty")));
        }
        Ok(Hypergraph {
            incidence,
            hyperedge_weights,
        })
    }

    /// One size-2 hyperedge per undirected graph edge, unit weights.
    /// Isolated graph nodes end up in no hyperedge.
    pub fn pairwise_from_graph(graph: &Graph) -> Result<Hypergraph> {
        let m = graph.edges.len();
        let mut rows = Vec::with_capacity(2 * m);
        let mut cols = Vec::with_capacity(2 * m);
        for (e, &(a, b)) in graph.edges.iter().enumerate() {
            rows.push(a);
            cols.push(e);
            rows.push(b);
            cols.push(e);
        }
        let vals = vec![1.0; rows.len()];
        let incidence = SparseMatrix::from_triplets(&rows, &cols, &vals, (graph.n_nodes, m))?;
        Hypergraph::new(incidence, vec![1.0; m])
    }

    pub fn n_nodes(&self) -> usize {
        self.incidence.n_rows()
    }

    pub fn n_hyperedges(&self) -> usize {
        self.incidence.n_cols()
    }

    /// Weighted node degrees d(v) = sum_e w(e) h(v,e).
    pub fn node_degrees(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n_nodes()];
        for r in 0..self.n_nodes() {
            for (c, _) in self.incidence.row_iter(r) {
                d[r] += self.hyperedge_weights[c];
            }
        }
        d
    }

    /// Hyperedge degrees delta(e) = number of member nodes.
    pub fn edge_degrees(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n_hyperedges()];
        for r in 0..self.n_nodes() {
            for (c, _) in self.incidence.row_iter(r) {
                d[c] += 1.0;
            }
        }
        d
    }

    /// Nodes with zero weighted degree.
    pub fn isolated_nodes(&self) -> Vec<usize> {
        self.node_degrees()
            .iter()
            .enumerate()
            .filter(|(_, &d)| d == 0.0)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Dense features paired with a known-entry mask. Unknown entries hold 0
/// at rest; known entries are never modified by propagation.
#[derive(Debug, Clone)]
pub struct MaskedFeatures {
    pub features: DenseMatrix,
    pub known: BoolMatrix,
}

impl MaskedFeatures {
    /// Zeroes the unknown entries of `features` so the struct invariant
    /// holds from the start.
    pub fn new(mut features: DenseMatrix, known: BoolMatrix) -> Result<MaskedFeatures> {
        if features.n_rows() != known.n_rows || features.n_cols() != known.n_cols {
            return Err(Error::ShapeMismatch(format!(
                "features {}x{} vs mask {}x{}",
                features.n_rows(),
                features.n_cols(),
                known.n_rows,
                known.n_cols
            )));
        }
        for (v, &k) in features.values_mut().iter_mut().zip(known.values.iter()) {
            if !k {
                *v = 0.0;
            }
        }
        Ok(MaskedFeatures { features, known })
    }

    pub fn n_nodes(&self) -> usize {
        self.features.n_rows()
    }

    pub fn n_channels(&self) -> usize {
        self.features.n_cols()
    }

    pub fn known_fraction(&self) -> f64 {
        if self.known.values.is_empty() {
            return 1.0;
        }
        self.known.values.iter().filter(|&&b| b).count() as f64 / self.known.values.len() as f64
    }
}

/// Node labels plus disjoint train/val/test index sets.
#[derive(Debug, Clone)]
pub struct LabeledSplits {
    pub labels: Vec<usize>,
    pub n_classes: usize,
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl LabeledSplits {
    /// Labels only; split sets start empty and are filled by
    /// [`make_splits`].
    pub fn unsplit(labels: Vec<usize>, n_classes: usize) -> Result<LabeledSplits> {
        validate_labels(&labels, n_classes)?;
        Ok(LabeledSplits {
            labels,
            n_classes,
            train: Vec::new(),
            val: Vec::new(),
            test: Vec::new(),
        })
    }
}

pub(crate) fn validate_labels(labels: &[usize], n_classes: usize) -> Result<()> {
    if n_classes == 0 {
        return Err(Error::InvalidArgument("n_classes is zero".into()));
    }
    let mut seen = vec![false; n_classes];
    for (i, &y) in labels.iter().enumerate() {
        if y >= n_classes {
            return Err(Error::InvalidArgument(format!(
                "label {y} at node {i} outside 0..{n_classes}"
            )));
        }
        seen[y] = true;
    }
    if let Some(missing) = seen.iter().position(|&s| !s) {
        return Err(Error::InvalidArgument(format!(
            "class ids not contiguous: class {missing} has no members"
        )));
    }
    Ok(())
}

/// A named dataset: graph, dense features, and labels with splits.
#[derive(Debug, Clone)]
pub struct DatasetBundle {
    pub name: String,
    pub graph: Graph,
    pub features: DenseMatrix,
    pub splits: LabeledSplits,
}

impl DatasetBundle {
    pub fn n_nodes(&self) -> usize {
        self.graph.n_nodes
    }

    pub fn n_features(&self) -> usize {
        self.features.n_cols()
    }

    pub fn n_classes(&self) -> usize {
        self.splits.n_classes
    }

    /// Consistency check across graph, features, and labels.
    pub fn validate(&self) -> Result<()> {
        if self.features.n_rows() != self.graph.n_nodes {
            return Err(Error::ShapeMismatch(format!(
                "{} feature rows for {} nodes",
                self.features.n_rows(),
                self.graph.n_nodes
            )));
        }
        if self.splits.labels.len() != self.graph.n_nodes {
            return Err(Error::ShapeMismatch(format!(
                "{} labels for {} nodes",
                self.splits.labels.len(),
                self.graph.n_nodes
            )));
        }
        validate_labels(&self.splits.labels, self.splits.n_classes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graph_strips_self_loops_and_duplicates() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 0), (2, 2), (1, 2)]).unwrap();
        assert_eq!(g.edges, vec![(0, 1), (1, 2)]);
        assert_eq!(g.adjacency.nnz(), 4);
        // adjacency is exactly symmetric
        assert_eq!(g.adjacency.transpose(), g.adjacency);
    }

    #[test]
    fn empty_hyperedge_rejected() {
        let incidence =
            SparseMatrix::from_triplets(&[0], &[0], &[1.0], (2, 2)).unwrap();
        assert!(Hypergraph::new(incidence, vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn hypergraph_degrees() {
        // two nodes, one hyperedge {0,1} with weight 2
        let incidence =
            SparseMatrix::from_triplets(&[0, 1], &[0, 0], &[1.0, 1.0], (2, 1)).unwrap();
        let h = Hypergraph::new(incidence, vec![2.0]).unwrap();
        assert_eq!(h.node_degrees(), vec![2.0, 2.0]);
        assert_eq!(h.edge_degrees(), vec![2.0]);
        assert!(h.isolated_nodes().is_empty());
    }

    #[test]
    fn masked_features_zero_unknown_at_rest() {
        let x = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let known = BoolMatrix::from_vec(2, 2, vec![true, false, false, true]).unwrap();
        let mf = MaskedFeatures::new(x, known).unwrap();
        assert_eq!(mf.features.values(), &[1.0, 0.0, 0.0, 4.0]);
    }

    #[test]
    fn non_contiguous_labels_rejected() {
        assert!(validate_labels(&[0, 2, 2], 3).is_err());
        assert!(validate_labels(&[0, 1, 2], 3).is_ok());
    }
}
