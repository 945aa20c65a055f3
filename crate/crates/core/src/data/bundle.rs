//! Dataset bundle directory IO.
//!
//! A bundle directory holds:
//!   - `graph.tsv`      one undirected edge per line, `src<TAB>dst`, 0-based
//!   - `features.csv`   n rows of d comma-separated reals, or
//!     `features.f32`   raw row-major little-endian f32 with a
//!     `shape.json` sidecar `{"n":…,"d":…}`
//!   - `labels.csv`     one integer class id per line
//!   - `meta.json`      `{"name":…,"n_nodes":…,"n_features":…,"n_classes":…}`

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{DatasetBundle, Graph, LabeledSplits};
use crate::dense::DenseMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
struct Meta {
    name: String,
    n_nodes: usize,
    n_features: usize,
    n_classes: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct Shape {
    n: usize,
    d: usize,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    /// Restrict the bundle to its largest connected component,
    /// re-indexing nodes in ascending original order.
    pub largest_component: bool,
}

fn load_err(file: &Path, reason: impl Into<String>) -> Error {
    Error::Load {
        file: file.display().to_string(),
        reason: reason.into(),
    }
}

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| load_err(path, e.to_string()))
}

pub fn load_bundle(dir: impl AsRef<Path>) -> Result<DatasetBundle> {
    load_bundle_with(dir, LoadOptions::default())
}

pub fn load_bundle_with(dir: impl AsRef<Path>, opts: LoadOptions) -> Result<DatasetBundle> {
    let dir = dir.as_ref();
    let meta_path = dir.join("meta.json");
    let meta: Meta = serde_json::from_str(&read_to_string(&meta_path)?)
        .map_err(|e| load_err(&meta_path, e.to_string()))?;

    let graph_path = dir.join("graph.tsv");
    let mut edges = Vec::new();
    for (lineno, line) in read_to_string(&graph_path)?.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split('\t');
        let parse = |tok: Option<&str>| -> Result<usize> {
            tok.and_then(|t| t.trim().parse::<usize>().ok())
                .ok_or_else(|| load_err(&graph_path, format!("bad edge on line {}", lineno + 1)))
        };
        let src = parse(parts.next())?;
        let dst = parse(parts.next())?;
        if src >= meta.n_nodes || dst >= meta.n_nodes {
            return Err(load_err(
                &graph_path,
                format!(
                    "edge ({src},{dst}) on line {} exceeds n_nodes {}",
                    lineno + 1,
                    meta.n_nodes
                ),
            ));
        }
        edges.push((src, dst));
    }

    let features = load_features(dir, meta.n_nodes, meta.n_features)?;

    let labels_path = dir.join("labels.csv");
    let mut labels = Vec::new();
    for (lineno, line) in read_to_string(&labels_path)?.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let y: usize = line
            .parse()
            .map_err(|_| load_err(&labels_path, format!("bad label on line {}", lineno + 1)))?;
        labels.push(y);
    }
    if labels.len() != meta.n_nodes {
        return Err(load_err(
            &labels_path,
            format!("{} labels for {} nodes", labels.len(), meta.n_nodes),
        ));
    }
    crate::data::validate_labels(&labels, meta.n_classes)
        .map_err(|e| load_err(&labels_path, e.to_string()))?;

    let graph = Graph::from_edges(meta.n_nodes, &edges)
        .map_err(|e| load_err(&graph_path, e.to_string()))?;

    let mut bundle = DatasetBundle {
        name: meta.name,
        graph,
        features,
        splits: LabeledSplits::unsplit(labels, meta.n_classes)
            .map_err(|e| load_err(&labels_path, e.to_string()))?,
    };

    if opts.largest_component {
        bundle = restrict_to_nodes(&bundle, &bundle.graph.largest_component_nodes())?;
    }
    bundle.validate()?;
    Ok(bundle)
}

fn load_features(dir: &Path, n: usize, d: usize) -> Result<DenseMatrix> {
    let csv_path = dir.join("features.csv");
    if csv_path.exists() {
        let text = read_to_string(&csv_path)?;
        let mut values = Vec::with_capacity(n * d);
        let mut rows = 0usize;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut cols = 0usize;
            for tok in line.split(',') {
                let v: f64 = tok.trim().parse().map_err(|_| {
                    load_err(&csv_path, format!("bad value on line {}", lineno + 1))
                })?;
                values.push(v);
                cols += 1;
            }
            if cols != d {
                return Err(load_err(
                    &csv_path,
                    format!("{} columns on line {}, expected {d}", cols, lineno + 1),
                ));
            }
            rows += 1;
        }
        if rows != n {
            return Err(load_err(
                &csv_path,
                format!("{rows} feature rows, expected {n}"),
            ));
        }
        return DenseMatrix::from_vec(n, d, values).map_err(|e| load_err(&csv_path, e.to_string()));
    }

    let bin_path = dir.join("features.f32");
    if bin_path.exists() {
        let shape_path = dir.join("shape.json");
        let shape: Shape = serde_json::from_str(&read_to_string(&shape_path)?)
            .map_err(|e| load_err(&shape_path, e.to_string()))?;
        if shape.n != n || shape.d != d {
            return Err(load_err(
                &shape_path,
                format!("shape {}x{} disagrees with meta {n}x{d}", shape.n, shape.d),
            ));
        }
        let bytes = fs::read(&bin_path).map_err(|e| load_err(&bin_path, e.to_string()))?;
        if bytes.len() != n * d * 4 {
            return Err(load_err(
                &bin_path,
                format!("{} bytes, expected {}", bytes.len(), n * d * 4),
            ));
        }
        let values: Vec<f64> = bytes
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64)
            .collect();
        return DenseMatrix::from_vec(n, d, values).map_err(|e| load_err(&bin_path, e.to_string()));
    }

    Err(load_err(
        &csv_path,
        "neither features.csv nor features.f32 found",
    ))
}

/// Reads a features file on its own: `.csv`, or `.f32` with a
/// `shape.json` sidecar in the same directory.
pub fn read_features(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    let path = path.as_ref();
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => {
            let text = read_to_string(path)?;
            let mut rows: Vec<Vec<f64>> = Vec::new();
            for (lineno, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() {
                    continue;
                }
                let row: std::result::Result<Vec<f64>, _> =
                    line.split(',').map(|t| t.trim().parse::<f64>()).collect();
                rows.push(row.map_err(|_| {
                    load_err(path, format!("bad value on line {}", lineno + 1))
                })?);
            }
            DenseMatrix::from_rows(&rows).map_err(|e| load_err(path, e.to_string()))
        }
        Some("f32") => {
            let dir = path.parent().unwrap_or_else(|| Path::new("."));
            let shape_path = dir.join("shape.json");
            let shape: Shape = serde_json::from_str(&read_to_string(&shape_path)?)
                .map_err(|e| load_err(&shape_path, e.to_string()))?;
            let bytes = fs::read(path).map_err(|e| load_err(path, e.to_string()))?;
            if bytes.len() != shape.n * shape.d * 4 {
                return Err(load_err(
                    path,
                    format!("{} bytes, expected {}", bytes.len(), shape.n * shape.d * 4),
                ));
            }
            let values: Vec<f64> = bytes
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64)
                .collect();
            DenseMatrix::from_vec(shape.n, shape.d, values)
                .map_err(|e| load_err(path, e.to_string()))
        }
        _ => Err(load_err(path, "expected a .csv or .f32 features file")),
    }
}

pub fn write_features_csv(path: impl AsRef<Path>, features: &DenseMatrix) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for i in 0..features.n_rows() {
        let row = features.row(i);
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&format!("{v}"));
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path.display().to_string(), e))
}

/// Writes `features.f32` plus `shape.json` into `dir`.
pub fn write_features_f32(dir: impl AsRef<Path>, features: &DenseMatrix) -> Result<()> {
    let dir = dir.as_ref();
    let bin_path = dir.join("features.f32");
    let mut bytes = Vec::with_capacity(features.values().len() * 4);
    for &v in features.values() {
        bytes.extend_from_slice(&(v as f32).to_le_bytes());
    }
    fs::write(&bin_path, bytes).map_err(|e| Error::io(bin_path.display().to_string(), e))?;
    let shape_path = dir.join("shape.json");
    let shape = Shape {
        n: features.n_rows(),
        d: features.n_cols(),
    };
    fs::write(&shape_path, serde_json::to_string(&shape).expect("shape json"))
        .map_err(|e| Error::io(shape_path.display().to_string(), e))
}

/// Writes a complete bundle directory (`features.csv` flavor).
pub fn save_bundle(dir: impl AsRef<Path>, bundle: &DatasetBundle) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    bundle.validate()?;

    let graph_path = dir.join("graph.tsv");
    {
        let file =
            fs::File::create(&graph_path).map_err(|e| Error::io(graph_path.display().to_string(), e))?;
        let mut w = std::io::BufWriter::new(file);
        for &(a, b) in &bundle.graph.edges {
            writeln!(w, "{a}\t{b}").map_err(|e| Error::io(graph_path.display().to_string(), e))?;
        }
    }

    write_features_csv(dir.join("features.csv"), &bundle.features)?;

    let labels_path = dir.join("labels.csv");
    let mut labels_text = String::new();
    for &y in &bundle.splits.labels {
        labels_text.push_str(&format!("{y}\n"));
    }
    fs::write(&labels_path, labels_text)
        .map_err(|e| Error::io(labels_path.display().to_string(), e))?;

    let meta = Meta {
        name: bundle.name.clone(),
        n_nodes: bundle.n_nodes(),
        n_features: bundle.n_features(),
        n_classes: bundle.n_classes(),
    };
    let meta_path = dir.join("meta.json");
    fs::write(&meta_path, serde_json::to_string_pretty(&meta).expect("meta json"))
        .map_err(|e| Error::io(meta_path.display().to_string(), e))
}

/// Restricts a bundle to the given node subset (ascending original ids),
/// re-indexing edges, features, and labels.
fn restrict_to_nodes(bundle: &DatasetBundle, keep: &[usize]) -> Result<DatasetBundle> {
    let mut new_id = vec![usize::MAX; bundle.n_nodes()];
    for (new, &old) in keep.iter().enumerate() {
        new_id[old] = new;
    }
    let edges: Vec<(usize, usize)> = bundle
        .graph
        .edges
        .iter()
        .filter(|&&(a, b)| new_id[a] != usize::MAX && new_id[b] != usize::MAX)
        .map(|&(a, b)| (new_id[a], new_id[b]))
        .collect();
    let graph = Graph::from_edges(keep.len(), &edges)?;

    let d = bundle.features.n_cols();
    let mut values = Vec::with_capacity(keep.len() * d);
    for &old in keep {
        values.extend_from_slice(bundle.features.row(old));
    }
    let features = DenseMatrix::from_vec(keep.len(), d, values)?;

    let labels: Vec<usize> = keep.iter().map(|&old| bundle.splits.labels[old]).collect();
    Ok(DatasetBundle {
        name: bundle.name.clone(),
        graph,
        features,
        splits: LabeledSplits::unsplit(labels, bundle.splits.n_classes)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::sbm_generate;

    #[test]
    fn roundtrip_bundle() {
        let dir = tempfile::tempdir().unwrap();
        let bundle = sbm_generate(&[6, 6], 0.8, 0.1, 4, 1.0, 3).unwrap();
        save_bundle(dir.path(), &bundle).unwrap();
        let loaded = load_bundle(dir.path()).unwrap();
        assert_eq!(loaded.n_nodes(), 12);
        assert_eq!(loaded.graph.edges, bundle.graph.edges);
        assert_eq!(loaded.splits.labels, bundle.splits.labels);
        assert!(loaded.features.max_abs_diff(&bundle.features) < 1e-12);
    }

    #[test]
    fn adjacency_symmetric_after_load() {
        let dir = tempfile::tempdir().unwrap();
        let bundle = sbm_generate(&[5, 5], 0.6, 0.2, 3, 1.0, 8).unwrap();
        save_bundle(dir.path(), &bundle).unwrap();
        let loaded = load_bundle(dir.path()).unwrap();
        assert_eq!(loaded.graph.adjacency.transpose(), loaded.graph.adjacency);
    }

    #[test]
    fn label_count_mismatch_names_file() {
        let dir = tempfile::tempdir().unwrap();
        let bundle = sbm_generate(&[4, 4], 0.9, 0.2, 3, 1.0, 1).unwrap();
        save_bundle(dir.path(), &bundle).unwrap();
        std::fs::write(dir.path().join("labels.csv"), "0\n1\n").unwrap();
        let err = load_bundle(dir.path()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("labels.csv"), "message was: {msg}");
    }

    #[test]
    fn missing_features_file_reported() {
        let dir = tempfile::tempdir().unwrap();
        let bundle = sbm_generate(&[4, 4], 0.9, 0.2, 3, 1.0, 1).unwrap();
        save_bundle(dir.path(), &bundle).unwrap();
        std::fs::remove_file(dir.path().join("features.csv")).unwrap();
        assert!(load_bundle(dir.path()).is_err());
    }

    #[test]
    fn f32_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let bundle = sbm_generate(&[4, 4], 0.9, 0.2, 3, 1.0, 1).unwrap();
        save_bundle(dir.path(), &bundle).unwrap();
        std::fs::remove_file(dir.path().join("features.csv")).unwrap();
        write_features_f32(dir.path(), &bundle.features).unwrap();
        let loaded = load_bundle(dir.path()).unwrap();
        // f32 quantization only
        assert!(loaded.features.max_abs_diff(&bundle.features) < 1e-6);
    }

    #[test]
    fn largest_component_extraction() {
        // two components: a triangle and an edge
        let graph = Graph::from_edges(5, &[(0, 1), (1, 2), (0, 2), (3, 4)]).unwrap();
        let features = DenseMatrix::from_vec(5, 1, vec![0.0, 1.0, 2.0, 3.0, 4.0]).unwrap();
        let splits = LabeledSplits::unsplit(vec![0, 1, 0, 1, 0], 2).unwrap();
        let bundle = DatasetBundle {
            name: "toy".into(),
            graph,
            features,
            splits,
        };
        let dir = tempfile::tempdir().unwrap();
        save_bundle(dir.path(), &bundle).unwrap();
        let loaded = load_bundle_with(
            dir.path(),
            LoadOptions {
                largest_component: true,
            },
        )
        .unwrap();
        assert_eq!(loaded.n_nodes(), 3);
        assert_eq!(loaded.graph.n_edges(), 3);
        assert_eq!(loaded.features.values(), &[0.0, 1.0, 2.0]);
    }
}
