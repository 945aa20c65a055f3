//! Stochastic block model fixtures with Gaussian class-conditional
//! features. Each RNG concern (class means, edges, features) has its own
//! sub-seeded stream so changing one parameter does not reshuffle the
//! others.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::data::{DatasetBundle, Graph, LabeledSplits};
use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::seed::{hash_label, mix};

/// Generates a planted-partition graph: within-block edges with
/// probability `p_in`, cross-block with `p_out`. Node features are
/// `class_separation * u_c + N(0, 1)` per coordinate, where `u_c` is a
/// per-class unit direction. Splits start empty.
pub fn sbm_generate(
    block_sizes: &[usize],
    p_in: f64,
    p_out: f64,
    n_features: usize,
    class_separation: f64,
    seed: u64,
) -> Result<DatasetBundle> {
    for &p in &[p_in, p_out] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidArgument(format!(
                "edge probability {p} outside [0,1]"
            )));
        }
    }
    if block_sizes.is_empty() || block_sizes.iter().any(|&s| s == 0) {
        return Err(Error::InvalidArgument("empty block in block_sizes".into()));
    }
    if n_features == 0 {
        return Err(Error::InvalidArgument("n_features is zero".into()));
    }

    let n_classes = block_sizes.len();
    let n: usize = block_sizes.iter().sum();
    let mut labels = Vec::with_capacity(n);
    for (c, &size) in block_sizes.iter().enumerate() {
        labels.extend(std::iter::repeat(c).take(size));
    }

    // Per-class unit directions.
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut mean_rng = ChaCha8Rng::seed_from_u64(mix(&[seed, hash_label("sbm-means")]));
    let mut means = vec![vec![0.0f64; n_features]; n_classes];
    for mean in means.iter_mut() {
        let mut norm_sq = 0.0;
        for v in mean.iter_mut() {
            *v = normal.sample(&mut mean_rng);
            norm_sq += *v * *v;
        }
        let norm = norm_sq.sqrt();
        if norm > 0.0 {
            for v in mean.iter_mut() {
                *v = *v / norm * class_separation;
            }
        }
    }

    let mut edge_rng = ChaCha8Rng::seed_from_u64(mix(&[seed, hash_label("sbm-edges")]));
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let p = if labels[i] == labels[j] { p_in } else { p_out };
            if edge_rng.gen::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    let graph = Graph::from_edges(n, &edges)?;

    let mut feat_rng = ChaCha8Rng::seed_from_u64(mix(&[seed, hash_label("sbm-features")]));
    let mut values = Vec::with_capacity(n * n_features);
    for &y in &labels {
        for f in 0..n_features {
            values.push(means[y][f] + normal.sample(&mut feat_rng));
        }
    }
    let features = DenseMatrix::from_vec(n, n_features, values)?;

    Ok(DatasetBundle {
        name: "sbm".into(),
        graph,
        features,
        splits: LabeledSplits::unsplit(labels, n_classes)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_cliques_disconnected() {
        let b = sbm_generate(&[4, 4], 1.0, 0.0, 3, 1.0, 0).unwrap();
        assert_eq!(b.graph.n_edges(), 2 * (4 * 3 / 2));
        let comp = b.graph.component_ids();
        assert_eq!(comp[0], comp[3]);
        assert_eq!(comp[4], comp[7]);
        assert_ne!(comp[0], comp[4]);
    }

    #[test]
    fn uniform_density_when_p_in_equals_p_out() {
        let p = 0.2;
        let b = sbm_generate(&[40, 40], p, p, 2, 0.0, 5).unwrap();
        let mut within = 0usize;
        let mut across = 0usize;
        for &(i, j) in &b.graph.edges {
            if b.splits.labels[i] == b.splits.labels[j] {
                within += 1;
            } else {
                across += 1;
            }
        }
        // 3-sigma binomial bounds on each pair population.
        let n_within_pairs = 2.0 * (40.0 * 39.0 / 2.0);
        let n_across_pairs = 40.0 * 40.0;
        let sigma_w = (n_within_pairs * p * (1.0 - p)).sqrt();
        let sigma_a = (n_across_pairs * p * (1.0 - p)).sqrt();
        assert!((within as f64 - n_within_pairs * p).abs() <= 3.0 * sigma_w);
        assert!((across as f64 - n_across_pairs * p).abs() <= 3.0 * sigma_a);
    }

    #[test]
    fn deterministic_in_seed() {
        let a = sbm_generate(&[5, 5], 0.5, 0.1, 4, 1.0, 9).unwrap();
        let b = sbm_generate(&[5, 5], 0.5, 0.1, 4, 1.0, 9).unwrap();
        assert_eq!(a.graph.edges, b.graph.edges);
        assert_eq!(a.features.values(), b.features.values());
    }

    #[test]
    fn zero_separation_means_vanish() {
        let b = sbm_generate(&[30, 30], 0.1, 0.1, 6, 0.0, 2).unwrap();
        // Column means of the two classes should agree within noise.
        let mut m0 = vec![0.0; 6];
        let mut m1 = vec![0.0; 6];
        for i in 0..60 {
            let target = if b.splits.labels[i] == 0 { &mut m0 } else { &mut m1 };
            for f in 0..6 {
                target[f] += b.features.get(i, f) / 30.0;
            }
        }
        for f in 0..6 {
            // means of 30 unit-normal samples: sigma = 1/sqrt(30)
            assert!((m0[f] - m1[f]).abs() < 6.0 / 30.0f64.sqrt());
        }
    }
}
