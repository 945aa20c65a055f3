//! Feature hypergraph construction and the normalized propagation
//! operator.
//!
//! Each node becomes the centroid of one hyperedge containing itself and
//! its neighbors, either the k nearest nodes in feature space or the
//! graph-adjacent nodes. The propagation operator is
//! `Theta = Dv^-1/2 H W De^-1 H^T Dv^-1/2`, assembled as `M M^T` with
//! `M = Dv^-1/2 H (W De^-1)^1/2` so symmetry is exact and `I - Theta`
//! is positive semi-definite by construction. Rows and columns of
//! isolated nodes are zero under the convention `0^-1/2 := 0`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Graph, Hypergraph, MaskedFeatures};
use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

/// Lower clamp for fused edge values; keeps every stored position
/// connected even when pseudo-labels fully disagree.
pub const VALUE_CLAMP: f64 = 1e-6;

/// Neighborhood rule for hyperedge construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HypergraphMode {
    /// k nearest nodes by Euclidean distance on zero-imputed features.
    Knn { k: usize },
    /// Graph-adjacent nodes.
    Topology,
    /// One size-2 hyperedge per graph edge; reproduces plain pairwise
    /// feature propagation. Handled by [`Hypergraph::pairwise_from_graph`],
    /// not by [`build_feature_hypergraph`].
    PairwiseEdges,
}

/// How pseudo-label agreement is turned into edge values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PseudoLabelWeighting {
    /// Dot product of the two soft pseudo-label rows.
    SoftDot,
    /// 1 when the argmax classes match, the clamp value otherwise.
    HardIndicator,
}

/// Where a propagation operator came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThetaSource {
    FeatureOnly,
    Fused,
}

/// Normalized propagation operator; `Delta = I - theta` is the
/// hypergraph Laplacian.
#[derive(Debug, Clone)]
pub struct PropagationMatrix {
    pub theta: SparseMatrix,
    pub source: ThetaSource,
}

impl PropagationMatrix {
    pub fn n_nodes(&self) -> usize {
        self.theta.n_rows()
    }
}

/// Soft class probabilities per node; every row lies on the simplex.
#[derive(Debug, Clone)]
pub struct PseudoLabelMatrix {
    probs: DenseMatrix,
}

impl PseudoLabelMatrix {
    pub fn new(probs: DenseMatrix) -> Result<PseudoLabelMatrix> {
        for i in 0..probs.n_rows() {
            let row = probs.row(i);
            let sum: f64 = row.iter().sum();
            if row.iter().any(|&p| p < 0.0) || (sum - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidArgument(format!(
                    "pseudo-label row {i} is not on the simplex (sum {sum})"
                )));
            }
        }
        Ok(PseudoLabelMatrix { probs })
    }

    pub fn uniform(n: usize, n_classes: usize) -> PseudoLabelMatrix {
        let p = 1.0 / n_classes as f64;
        PseudoLabelMatrix {
            probs: DenseMatrix::from_vec(n, n_classes, vec![p; n * n_classes])
                .expect("uniform simplex"),
        }
    }

    pub fn probs(&self) -> &DenseMatrix {
        &self.probs
    }

    /// Argmax class per node; ties go to the lower class id.
    pub fn hard_labels(&self) -> Vec<usize> {
        (0..self.probs.n_rows())
            .map(|i| argmax(self.probs.row(i)))
            .collect()
    }
}

pub(crate) fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (j, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = j;
        }
    }
    best
}

/// Builds the feature hypergraph: exactly `n` hyperedges, hyperedge `i`
/// holding node `i` plus its neighbors. Hyperedge weights start at 1.
///
/// Neighbor selection is fully deterministic (distance ties go to the
/// lower node id); the seed parameter is kept for interface stability
/// and does not influence the result.
pub fn build_feature_hypergraph(
    mf: &MaskedFeatures,
    graph: &Graph,
    mode: HypergraphMode,
    _seed: u64,
) -> Result<Hypergraph> {
    let n = mf.n_nodes();
    if n != graph.n_nodes {
        return Err(Error::ShapeMismatch(format!(
            "{} feature rows for a {}-node graph",
            n, graph.n_nodes
        )));
    }
    if n < 2 {
        return Err(Error::InvalidArgument(
            "hypergraph construction needs at least 2 nodes".into(),
        ));
    }

    let neighborhoods: Vec<Vec<usize>> = match mode {
        HypergraphMode::Knn { k } => {
            if k < 1 || k >= n {
                return Err(Error::InvalidArgument(format!(
                    "knn k={k} outside 1..{n}"
                )));
            }
            if mf.known.values.iter().all(|&b| !b) {
                return Err(Error::DegenerateInput(
                    "every feature entry is unknown; feature-space neighbors are meaningless"
                        .into(),
                ));
            }
            (0..n)
                .into_par_iter()
                .map(|i| knn_of(&mf.features, i, k))
                .collect()
        }
        HypergraphMode::Topology => (0..n).map(|i| graph.neighbors(i).collect()).collect(),
        HypergraphMode::PairwiseEdges => {
            return Err(Error::InvalidArgument(
                "pairwise-edges mode is built with Hypergraph::pairwise_from_graph".into(),
            ));
        }
    };

    let mut rows = Vec::new();
    let mut cols = Vec::new();
    for (i, neigh) in neighborhoods.iter().enumerate() {
        rows.push(i);
        cols.push(i);
        for &j in neigh {
            rows.push(j);
            cols.push(i);
        }
    }
    let vals = vec![1.0; rows.len()];
    let incidence = SparseMatrix::from_triplets(&rows, &cols, &vals, (n, n))?;
    Hypergraph::new(incidence, vec![1.0; n])
}

fn knn_of(features: &DenseMatrix, i: usize, k: usize) -> Vec<usize> {
    let query = features.row(i);
    let mut candidates: Vec<(f64, usize)> = (0..features.n_rows())
        .filter(|&j| j != i)
        .map(|j| {
            let row = features.row(j);
            let d2: f64 = query
                .iter()
                .zip(row)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            (d2, j)
        })
        .collect();
    let kth = k.min(candidates.len()) - 1;
    candidates.select_nth_unstable_by(kth, |a, b| {
        a.0.partial_cmp(&b.0).expect("finite distance").then(a.1.cmp(&b.1))
    });
    candidates.truncate(k);
    candidates.into_iter().map(|(_, j)| j).collect()
}

/// Assembles the normalized operator for a hypergraph.
pub fn propagation_matrix(h: &Hypergraph) -> Result<PropagationMatrix> {
    if let Some(bad) = h.hyperedge_weights.iter().position(|&w| w < 0.0) {
        return Err(Error::InvalidArgument(format!(
            "hyperedge {bad} has negative weight"
        )));
    }
    let edge_deg = h.edge_degrees();
    if let Some(bad) = edge_deg.iter().position(|&d| d == 0.0) {
        return Err(Error::DegenerateInput(format!("hyperedge {bad} is empty")));
    }
    let node_deg = h.node_degrees();
    let inv_sqrt_dv: Vec<f64> = node_deg
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 })
        .collect();
    let col_factor: Vec<f64> = h
        .hyperedge_weights
        .iter()
        .zip(&edge_deg)
        .map(|(&w, &de)| (w / de).sqrt())
        .collect();

    let m = h
        .incidence
        .scale_rows(&inv_sqrt_dv)?
        .scale_cols(&col_factor)?;
    let theta = m.spgemm(&m.transpose())?;
    Ok(PropagationMatrix {
        theta,
        source: ThetaSource::FeatureOnly,
    })
}

/// Evaluates pseudo-label agreement at every stored position of
/// `pattern`, clamped below at [`VALUE_CLAMP`]. The output shares
/// `pattern`'s sparsity structure.
pub fn pseudo_label_values(
    pl: &PseudoLabelMatrix,
    pattern: &SparseMatrix,
    weighting: PseudoLabelWeighting,
) -> Result<SparseMatrix> {
    let n = pl.probs.n_rows();
    if pattern.n_rows() != n || pattern.n_cols() != n {
        return Err(Error::ShapeMismatch(format!(
            "pattern {}x{} for {} pseudo-label rows",
            pattern.n_rows(),
            pattern.n_cols(),
            n
        )));
    }
    let hard = match weighting {
        PseudoLabelWeighting::HardIndicator => Some(pl.hard_labels()),
        PseudoLabelWeighting::SoftDot => None,
    };
    let mut out = pattern.clone();
    let mut cursor = 0usize;
    for i in 0..n {
        let row_i = pl.probs.row(i);
        let lo = pattern.row_offsets()[i];
        let hi = pattern.row_offsets()[i + 1];
        for idx in lo..hi {
            let j = pattern.col_indices()[idx];
            let s = match &hard {
                Some(labels) => {
                    if labels[i] == labels[j] {
                        1.0
                    } else {
                        VALUE_CLAMP
                    }
                }
                None => {
                    let row_j = pl.probs.row(j);
                    row_i.iter().zip(row_j).map(|(a, b)| a * b).sum::<f64>()
                }
            };
            out.values_mut()[cursor] = s.max(VALUE_CLAMP);
            cursor += 1;
        }
    }
    Ok(out)
}

/// Fuses the feature operator (indices) with pseudo-label values:
/// entry-wise product, symmetrization, then renormalization by the
/// dominant-eigenvalue estimate so the operator stays non-expansive and
/// keeps its fixed point when the value field is constant. Estimates
/// within 1e-9 of 1 skip the rescale, so all-ones values reproduce the
/// feature operator exactly.
pub fn fuse(theta_f: &PropagationMatrix, values: &SparseMatrix) -> Result<PropagationMatrix> {
    let t = &theta_f.theta;
    if t.n_rows() != values.n_rows()
        || t.n_cols() != values.n_cols()
        || t.row_offsets() != values.row_offsets()
        || t.col_indices() != values.col_indices()
    {
        return Err(Error::PatternMismatch(
            "value matrix does not share the feature operator's pattern".into(),
        ));
    }
    let mut fused = t.clone();
    for (v, &s) in fused.values_mut().iter_mut().zip(values.values()) {
        *v *= s;
    }
    let fused = symmetrize(&fused);

    let est = fused.spectral_radius_est(1024);
    let mut fused = fused;
    if est > 0.0 && (est - 1.0).abs() > 1e-9 {
        let inv = 1.0 / est;
        for v in fused.values_mut() {
            *v *= inv;
        }
    }
    Ok(PropagationMatrix {
        theta: fused,
        source: ThetaSource::Fused,
    })
}

/// (m + m^T) / 2 by merging the two canonical forms row by row.
fn symmetrize(m: &SparseMatrix) -> SparseMatrix {
    let t = m.transpose();
    let n = m.n_rows();
    let mut rows = Vec::with_capacity(2 * m.nnz());
    let mut cols = Vec::with_capacity(2 * m.nnz());
    let mut vals = Vec::with_capacity(2 * m.nnz());
    for r in 0..n {
        for (c, v) in m.row_iter(r) {
            rows.push(r);
            cols.push(c);
            vals.push(0.5 * v);
        }
        for (c, v) in t.row_iter(r) {
            rows.push(r);
            cols.push(c);
            vals.push(0.5 * v);
        }
    }
    SparseMatrix::from_triplets(&rows, &cols, &vals, (n, n)).expect("symmetrize in bounds")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{BoolMatrix, Hypergraph};

    fn masked(features: DenseMatrix) -> MaskedFeatures {
        let known = BoolMatrix::filled(features.n_rows(), features.n_cols(), true);
        MaskedFeatures::new(features, known).unwrap()
    }

    fn hyperedge_members(h: &Hypergraph, e: usize) -> Vec<usize> {
        let mut members = Vec::new();
        for r in 0..h.n_nodes() {
            if h.incidence.row_iter(r).any(|(c, _)| c == e) {
                members.push(r);
            }
        }
        members
    }

    #[test]
    fn knn_collinear_points() {
        // brute-force nearest-neighbor oracle: points 0, 1, 10 on a line
        let x = DenseMatrix::from_vec(3, 1, vec![0.0, 1.0, 10.0]).unwrap();
        let graph = Graph::from_edges(3, &[]).unwrap();
        let h =
            build_feature_hypergraph(&masked(x), &graph, HypergraphMode::Knn { k: 1 }, 0).unwrap();
        assert_eq!(hyperedge_members(&h, 0), vec![0, 1]);
        assert_eq!(hyperedge_members(&h, 1), vec![0, 1]);
        assert_eq!(hyperedge_members(&h, 2), vec![1, 2]);
    }

    #[test]
    fn knn_tie_breaks_to_lower_id() {
        // nodes 1 and 2 both at distance 1 from node 0
        let x = DenseMatrix::from_vec(4, 1, vec![0.0, 1.0, -1.0, 5.0]).unwrap();
        let graph = Graph::from_edges(4, &[]).unwrap();
        let h =
            build_feature_hypergraph(&masked(x), &graph, HypergraphMode::Knn { k: 1 }, 0).unwrap();
        assert_eq!(hyperedge_members(&h, 0), vec![0, 1]);
    }

    #[test]
    fn topology_triangle_full_hyperedges() {
        let graph = Graph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        let x = DenseMatrix::zeros(3, 2);
        let h = build_feature_hypergraph(&masked(x), &graph, HypergraphMode::Topology, 0).unwrap();
        assert_eq!(h.n_hyperedges(), 3);
        for e in 0..3 {
            assert_eq!(hyperedge_members(&h, e), vec![0, 1, 2]);
        }
    }

    #[test]
    fn every_hyperedge_contains_its_centroid() {
        let bundle = crate::data::sbm_generate(&[6, 6], 0.5, 0.2, 3, 1.0, 4).unwrap();
        let mf = masked(bundle.features.clone());
        for mode in [HypergraphMode::Knn { k: 3 }, HypergraphMode::Topology] {
            let h = build_feature_hypergraph(&mf, &bundle.graph, mode, 0).unwrap();
            assert_eq!(h.n_hyperedges(), 12);
            for e in 0..12 {
                assert!(hyperedge_members(&h, e).contains(&e));
            }
        }
    }

    #[test]
    fn all_unknown_features_rejected_in_knn_mode() {
        let x = DenseMatrix::zeros(3, 2);
        let known = BoolMatrix::filled(3, 2, false);
        let mf = MaskedFeatures::new(x, known).unwrap();
        let graph = Graph::from_edges(3, &[(0, 1)]).unwrap();
        let err = build_feature_hypergraph(&mf, &graph, HypergraphMode::Knn { k: 1 }, 0);
        assert!(matches!(err, Err(Error::DegenerateInput(_))));
    }

    #[test]
    fn theta_single_pair_hyperedge() {
        // hand evaluation: d = (1,1), delta = 2, theta = [[.5,.5],[.5,.5]]
        let incidence =
            SparseMatrix::from_triplets(&[0, 1], &[0, 0], &[1.0, 1.0], (2, 1)).unwrap();
        let h = Hypergraph::new(incidence, vec![1.0]).unwrap();
        let theta = propagation_matrix(&h).unwrap().theta.to_dense();
        for (i, j, want) in [(0, 0, 0.5), (0, 1, 0.5), (1, 0, 0.5), (1, 1, 0.5)] {
            assert!((theta.get(i, j) - want).abs() < 1e-15);
        }
    }

    #[test]
    fn theta_single_full_hyperedge_is_uniform() {
        let n = 5;
        let rows: Vec<usize> = (0..n).collect();
        let incidence =
            SparseMatrix::from_triplets(&rows, &vec![0; n], &vec![1.0; n], (n, 1)).unwrap();
        let h = Hypergraph::new(incidence, vec![1.0]).unwrap();
        let theta = propagation_matrix(&h).unwrap().theta.to_dense();
        for i in 0..n {
            for j in 0..n {
                assert!((theta.get(i, j) - 1.0 / n as f64).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn theta_pairwise_matches_dense_formula_oracle() {
        let bundle = crate::data::sbm_generate(&[5, 5], 0.6, 0.3, 2, 1.0, 7).unwrap();
        let h = Hypergraph::pairwise_from_graph(&bundle.graph).unwrap();
        let theta = propagation_matrix(&h).unwrap().theta.to_dense();

        // dense evaluation of Dv^-1/2 H W De^-1 H^T Dv^-1/2
        let hd = h.incidence.to_dense();
        let n = h.n_nodes();
        let m = h.n_hyperedges();
        let dv = h.node_degrees();
        let de = h.edge_degrees();
        let mut want = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for e in 0..m {
                    s += hd.get(i, e) * h.hyperedge_weights[e] / de[e] * hd.get(j, e);
                }
                let di = if dv[i] > 0.0 { dv[i].sqrt() } else { 0.0 };
                let dj = if dv[j] > 0.0 { dv[j].sqrt() } else { 0.0 };
                if di > 0.0 && dj > 0.0 {
                    s /= di * dj;
                } else {
                    s = 0.0;
                }
                want.set(i, j, s);
            }
        }
        assert!(theta.max_abs_diff(&want) <= 1e-12);
    }

    #[test]
    fn theta_isolated_node_rows_are_zero() {
        // node 2 belongs to no hyperedge
        let incidence =
            SparseMatrix::from_triplets(&[0, 1], &[0, 0], &[1.0, 1.0], (3, 1)).unwrap();
        let h = Hypergraph::new(incidence, vec![1.0]).unwrap();
        let theta = propagation_matrix(&h).unwrap().theta;
        assert!(theta.row_iter(2).next().is_none());
    }

    #[test]
    fn negative_weight_rejected() {
        let incidence =
            SparseMatrix::from_triplets(&[0, 1], &[0, 0], &[1.0, 1.0], (2, 1)).unwrap();
        let mut h = Hypergraph::new(incidence, vec![1.0]).unwrap();
        h.hyperedge_weights[0] = -1.0;
        assert!(propagation_matrix(&h).is_err());
    }

    #[test]
    fn theta_row_sums_one_with_unit_weights() {
        let bundle = crate::data::sbm_generate(&[8, 8], 0.4, 0.2, 3, 1.0, 2).unwrap();
        let mf = masked(bundle.features.clone());
        let h =
            build_feature_hypergraph(&mf, &bundle.graph, HypergraphMode::Knn { k: 4 }, 0).unwrap();
        let theta = propagation_matrix(&h).unwrap().theta;
        for r in 0..16 {
            let sum: f64 = theta.row_iter(r).map(|(_, v)| v).sum();
            assert!((sum - 1.0).abs() < 1e-12, "row {r} sums to {sum}");
        }
    }

    fn one_hot(n: usize, c: usize, class_of: impl Fn(usize) -> usize) -> PseudoLabelMatrix {
        let mut probs = DenseMatrix::zeros(n, c);
        for i in 0..n {
            probs.set(i, class_of(i), 1.0);
        }
        PseudoLabelMatrix::new(probs).unwrap()
    }

    #[test]
    fn pseudo_values_one_hot() {
        let pattern =
            SparseMatrix::from_triplets(&[0, 0, 1, 1], &[0, 1, 0, 1], &[1.0; 4], (2, 2)).unwrap();
        // identical classes -> 1
        let same = one_hot(2, 3, |_| 1);
        let v = pseudo_label_values(&same, &pattern, PseudoLabelWeighting::SoftDot).unwrap();
        assert!(v.values().iter().all(|&x| (x - 1.0).abs() < 1e-15));
        // different classes -> clamp
        let diff = one_hot(2, 3, |i| i);
        let v = pseudo_label_values(&diff, &pattern, PseudoLabelWeighting::SoftDot).unwrap();
        assert_eq!(v.row_iter(0).find(|&(c, _)| c == 1).unwrap().1, VALUE_CLAMP);
    }

    #[test]
    fn pseudo_values_uniform_rows() {
        let pattern = SparseMatrix::from_triplets(&[0, 1], &[1, 0], &[1.0; 2], (2, 2)).unwrap();
        let pl = PseudoLabelMatrix::uniform(2, 4);
        let v = pseudo_label_values(&pl, &pattern, PseudoLabelWeighting::SoftDot).unwrap();
        assert!(v.values().iter().all(|&x| (x - 0.25).abs() < 1e-15));
    }

    #[test]
    fn pseudo_values_monotone_in_agreement() {
        let pattern = SparseMatrix::from_triplets(&[0], &[1], &[1.0], (2, 2)).unwrap();
        let mk = |p: f64| {
            PseudoLabelMatrix::new(
                DenseMatrix::from_rows(&[vec![p, 1.0 - p], vec![1.0, 0.0]]).unwrap(),
            )
            .unwrap()
        };
        let low = pseudo_label_values(&mk(0.3), &pattern, PseudoLabelWeighting::SoftDot).unwrap();
        let high = pseudo_label_values(&mk(0.9), &pattern, PseudoLabelWeighting::SoftDot).unwrap();
        assert!(high.values()[0] > low.values()[0]);
    }

    #[test]
    fn fuse_identity_values_is_exact() {
        let bundle = crate::data::sbm_generate(&[6, 6], 0.5, 0.2, 3, 1.0, 11).unwrap();
        let mf = masked(bundle.features.clone());
        let h =
            build_feature_hypergraph(&mf, &bundle.graph, HypergraphMode::Knn { k: 3 }, 0).unwrap();
        let theta = propagation_matrix(&h).unwrap();
        let mut ones = theta.theta.clone();
        ones.values_mut().fill(1.0);
        let fused = fuse(&theta, &ones).unwrap();
        assert_eq!(fused.theta, theta.theta);
        assert_eq!(fused.source, ThetaSource::Fused);
    }

    #[test]
    fn fuse_pattern_mismatch_rejected() {
        let theta = PropagationMatrix {
            theta: SparseMatrix::identity(3),
            source: ThetaSource::FeatureOnly,
        };
        let other = SparseMatrix::from_triplets(&[0], &[1], &[1.0], (3, 3)).unwrap();
        assert!(matches!(
            fuse(&theta, &other),
            Err(Error::PatternMismatch(_))
        ));
    }

    #[test]
    fn fuse_pattern_subset_of_feature_pattern() {
        let bundle = crate::data::sbm_generate(&[5, 5], 0.6, 0.3, 3, 1.0, 13).unwrap();
        let mf = masked(bundle.features.clone());
        let h =
            build_feature_hypergraph(&mf, &bundle.graph, HypergraphMode::Knn { k: 2 }, 0).unwrap();
        let theta = propagation_matrix(&h).unwrap();
        let pl = PseudoLabelMatrix::uniform(10, 2);
        let values =
            pseudo_label_values(&pl, &theta.theta, PseudoLabelWeighting::SoftDot).unwrap();
        let fused = fuse(&theta, &values).unwrap();
        // same pattern positions
        assert_eq!(fused.theta.row_offsets(), theta.theta.row_offsets());
        assert_eq!(fused.theta.col_indices(), theta.theta.col_indices());
    }

    #[test]
    fn fused_operator_stays_symmetric_and_contractive() {
        let bundle = crate::data::sbm_generate(&[8, 8], 0.5, 0.1, 4, 2.0, 21).unwrap();
        let mf = masked(bundle.features.clone());
        let h =
            build_feature_hypergraph(&mf, &bundle.graph, HypergraphMode::Knn { k: 4 }, 0).unwrap();
        let theta = propagation_matrix(&h).unwrap();
        let labels = &bundle.splits.labels;
        let pl = one_hot(16, 2, |i| labels[i]);
        let values =
            pseudo_label_values(&pl, &theta.theta, PseudoLabelWeighting::SoftDot).unwrap();
        let fused = fuse(&theta, &values).unwrap();
        let dense = fused.theta.to_dense();
        assert!(dense.max_abs_diff(&dense.transpose()) <= 1e-12);
        assert!(fused.theta.spectral_radius_est(2048) <= 1.0 + 1e-9);
    }

    #[test]
    fn fuse_true_labels_shrink_cross_clique_entries() {
        // two cliques joined by one bridge; pseudo-labels = true labels
        let mut edges = Vec::new();
        for i in 0..4 {
            for j in (i + 1)..4 {
                edges.push((i, j));
                edges.push((i + 4, j + 4));
            }
        }
        edges.push((0, 4));
        let graph = Graph::from_edges(8, &edges).unwrap();
        let x = DenseMatrix::zeros(8, 2);
        let mf = masked(x);
        let h = build_feature_hypergraph(&mf, &graph, HypergraphMode::Topology, 0).unwrap();
        let theta = propagation_matrix(&h).unwrap();
        let pl = one_hot(8, 2, |i| i / 4);
        let values =
            pseudo_label_values(&pl, &theta.theta, PseudoLabelWeighting::SoftDot).unwrap();
        let fused = fuse(&theta, &values).unwrap();
        let cross = fused.theta.row_iter(0).find(|&(c, _)| c == 4).unwrap().1;
        let intra = fused.theta.row_iter(0).find(|&(c, _)| c == 1).unwrap().1;
        let cross_raw = theta.theta.row_iter(0).find(|&(c, _)| c == 4).unwrap().1;
        let intra_raw = theta.theta.row_iter(0).find(|&(c, _)| c == 1).unwrap().1;
        // relative suppression by roughly the clamp scale
        assert!(cross / intra <= 1e-5 * (cross_raw / intra_raw));
    }
}
