//! Two-layer graph convolutional classifier, written from scratch.
//!
//! Used in two roles: generating soft pseudo-labels inside the
//! reconstruction loop, and scoring reconstructions on the downstream
//! node-classification task. Training is a pure function of its inputs
//! and `cfg.seed`: initialization and dropout draw from separate
//! sub-seeded streams, and every matrix product has a fixed accumulation
//! order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Graph, LabeledSplits};
use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::hypergraph::{argmax, PseudoLabelMatrix};
use crate::seed::{hash_label, mix};
use crate::sparse::SparseMatrix;

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

/// Weights of the two layers: `w1` is d x h, `w2` is h x C.
#[derive(Debug, Clone)]
pub struct GcnParams {
    pub w1: DenseMatrix,
    pub w2: DenseMatrix,
}

impl GcnParams {
    /// Glorot-uniform initialization, deterministic in `seed`.
    pub fn glorot(d: usize, hidden: usize, n_classes: usize, seed: u64) -> GcnParams {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut init = |n_in: usize, n_out: usize| {
            let limit = (6.0 / (n_in + n_out) as f64).sqrt();
            let values = (0..n_in * n_out)
                .map(|_| rng.gen_range(-limit..limit))
                .collect();
            DenseMatrix::from_vec(n_in, n_out, values).expect("finite init")
        };
        GcnParams {
            w1: init(d, hidden),
            w2: init(hidden, n_classes),
        }
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.w1.n_rows(), self.w1.n_cols(), self.w2.n_cols())
    }
}

/// Gradients with the same shapes as the parameters.
#[derive(Debug, Clone)]
pub struct GcnGrads {
    pub w1: DenseMatrix,
    pub w2: DenseMatrix,
}

/// Training hyperparameters. The paper fixes the learning rate (0.005)
/// and dropout (0.5); hidden width, epoch budget, patience, and weight
/// decay follow the standard protocol for this classifier and are
/// recorded here rather than hard-coded.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub hidden: usize,
    pub lr: f64,
    pub dropout: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub weight_decay: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            hidden: 16,
            lr: 0.005,
            dropout: 0.5,
            max_epochs: 200,
            patience: 30,
            weight_decay: 5e-4,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lr <= 0.0 {
            return Err(Error::InvalidArgument("lr must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::InvalidArgument("dropout must be in [0,1)".into()));
        }
        if self.patience > self.max_epochs {
            return Err(Error::InvalidArgument(
                "patience exceeds max_epochs".into(),
            ));
        }
        if self.hidden == 0 {
            return Err(Error::InvalidArgument("hidden width is zero".into()));
        }
        Ok(())
    }
}

/// First/second moment accumulators for Adam, one pair per layer.
#[derive(Debug, Clone)]
pub struct AdamState {
    m1: DenseMatrix,
    v1: DenseMatrix,
    m2: DenseMatrix,
    v2: DenseMatrix,
    step: usize,
}

impl AdamState {
    pub fn new(params: &GcnParams) -> AdamState {
        AdamState {
            m1: DenseMatrix::zeros(params.w1.n_rows(), params.w1.n_cols()),
            v1: DenseMatrix::zeros(params.w1.n_rows(), params.w1.n_cols()),
            m2: DenseMatrix::zeros(params.w2.n_rows(), params.w2.n_cols()),
            v2: DenseMatrix::zeros(params.w2.n_rows(), params.w2.n_cols()),
            step: 0,
        }
    }

    pub fn step_count(&self) -> usize {
        self.step
    }

    pub fn update(&mut self, params: &mut GcnParams, grads: &GcnGrads, lr: f64) {
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - ADAM_BETA1.powi(t);
        let bc2 = 1.0 - ADAM_BETA2.powi(t);
        let mut apply = |w: &mut DenseMatrix, m: &mut DenseMatrix, v: &mut DenseMatrix, g: &DenseMatrix| {
            let wv = w.values_mut();
            let mv = m.values_mut();
            let vv = v.values_mut();
            let gv = g.values();
            for i in 0..wv.len() {
                mv[i] = ADAM_BETA1 * mv[i] + (1.0 - ADAM_BETA1) * gv[i];
                vv[i] = ADAM_BETA2 * vv[i] + (1.0 - ADAM_BETA2) * gv[i] * gv[i];
                let m_hat = mv[i] / bc1;
                let v_hat = vv[i] / bc2;
                wv[i] -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
            }
        };
        apply(&mut params.w1, &mut self.m1, &mut self.v1, &grads.w1);
        apply(&mut params.w2, &mut self.m2, &mut self.v2, &grads.w2);
    }
}

/// Symmetric renormalized adjacency with self-loops:
/// `A_hat = D~^-1/2 (A + I) D~^-1/2`.
pub fn normalize_adjacency(graph: &Graph) -> SparseMatrix {
    let n = graph.n_nodes;
    let a = &graph.adjacency;
    let mut rows: Vec<usize> = Vec::with_capacity(a.nnz() + n);
    let mut cols: Vec<usize> = Vec::with_capacity(a.nnz() + n);
    let mut vals: Vec<f64> = Vec::with_capacity(a.nnz() + n);
    for r in 0..n {
        rows.push(r);
        cols.push(r);
        vals.push(1.0);
        for (c, v) in a.row_iter(r) {
            rows.push(r);
            cols.push(c);
            vals.push(v);
        }
    }
    let with_loops =
        SparseMatrix::from_triplets(&rows, &cols, &vals, (n, n)).expect("in-bounds adjacency");
    let inv_sqrt_deg: Vec<f64> = (0..n)
        .map(|r| {
            let deg: f64 = with_loops.row_iter(r).map(|(_, v)| v).sum();
            1.0 / deg.sqrt()
        })
        .collect();
    with_loops
        .scale_rows(&inv_sqrt_deg)
        .and_then(|m| m.scale_cols(&inv_sqrt_deg))
        .expect("scaling vectors sized to n")
}

/// Draws an inverted-dropout multiplier matrix: each entry is 0 with
/// probability `p`, else `1/(1-p)`.
pub fn dropout_mask(n: usize, h: usize, p: f64, rng: &mut ChaCha8Rng) -> DenseMatrix {
    let keep_scale = 1.0 / (1.0 - p);
    let values = (0..n * h)
        .map(|_| if rng.gen::<f64>() < p { 0.0 } else { keep_scale })
        .collect();
    DenseMatrix::from_vec(n, h, values).expect("finite mask")
}

/// Full forward pass: `logits = A_hat relu(A_hat X W1) W2`, with the
/// dropout multiplier applied to the hidden activation when given.
pub fn gcn_forward(
    params: &GcnParams,
    a_hat: &SparseMatrix,
    x: &DenseMatrix,
    dropout: Option<&DenseMatrix>,
) -> Result<DenseMatrix> {
    let z1 = a_hat.spmm(x)?;
    forward_from_z1(params, a_hat, &z1, dropout).map(|f| f.logits)
}

struct ForwardPass {
    h_pre: DenseMatrix,
    hidden_dropped: DenseMatrix,
    z2: DenseMatrix,
    logits: DenseMatrix,
}

fn forward_from_z1(
    params: &GcnParams,
    a_hat: &SparseMatrix,
    z1: &DenseMatrix,
    dropout: Option<&DenseMatrix>,
) -> Result<ForwardPass> {
    let h_pre = z1.matmul(&params.w1)?;
    let hidden = h_pre.map(|v| v.max(0.0));
    let hidden_dropped = match dropout {
        Some(mask) => hidden.hadamard(mask)?,
        None => hidden,
    };
    let z2 = a_hat.spmm(&hidden_dropped)?;
    let logits = z2.matmul(&params.w2)?;
    Ok(ForwardPass {
        h_pre,
        hidden_dropped,
        z2,
        logits,
    })
}

/// Row-wise softmax.
pub fn softmax_rows(logits: &DenseMatrix) -> DenseMatrix {
    let mut out = logits.clone();
    for i in 0..out.n_rows() {
        let row = out.row_mut(i);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    out
}

fn cross_entropy_mean(logits: &DenseMatrix, labels: &[usize], idx: &[usize]) -> f64 {
    let mut total = 0.0;
    for &i in idx {
        let row = logits.row(i);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        total += lse - row[labels[i]];
    }
    total / idx.len() as f64
}

/// Mean softmax cross-entropy over `train_idx` plus
/// `weight_decay/2 * (|W1|^2 + |W2|^2)`, with exact analytic gradients.
pub fn gcn_loss_and_grads(
    params: &GcnParams,
    a_hat: &SparseMatrix,
    x: &DenseMatrix,
    labels: &[usize],
    train_idx: &[usize],
    dropout: Option<&DenseMatrix>,
    weight_decay: f64,
) -> Result<(f64, GcnGrads)> {
    if train_idx.is_empty() {
        return Err(Error::InvalidArgument("empty training index set".into()));
    }
    let z1 = a_hat.spmm(x)?;
    let z1t = z1.transpose();
    loss_and_grads_cached(params, a_hat, &z1t, &z1, labels, train_idx, dropout, weight_decay)
}

#[allow(clippy::too_many_arguments)]
fn loss_and_grads_cached(
    params: &GcnParams,
    a_hat: &SparseMatrix,
    z1t: &DenseMatrix,
    z1: &DenseMatrix,
    labels: &[usize],
    train_idx: &[usize],
    dropout: Option<&DenseMatrix>,
    weight_decay: f64,
) -> Result<(f64, GcnGrads)> {
    let n = z1.n_rows();
    let (_, h, c) = params.dims();
    let pass = forward_from_z1(params, a_hat, z1, dropout)?;

    let loss = cross_entropy_mean(&pass.logits, labels, train_idx)
        + 0.5 * weight_decay * (params.w1.frobenius_sq() + params.w2.frobenius_sq());

    // d(loss)/d(logits): (softmax - onehot)/|T| on train rows, zero
    // elsewhere. Kept dense so shapes stay uniform; only train rows are
    // filled.
    let inv_t = 1.0 / train_idx.len() as f64;
    let mut dlogits = DenseMatrix::zeros(n, c);
    for &i in train_idx {
        let row = pass.logits.row(i);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut exps: Vec<f64> = row.iter().map(|v| (v - max).exp()).collect();
        let sum: f64 = exps.iter().sum();
        for e in exps.iter_mut() {
            *e /= sum;
        }
        let out = dlogits.row_mut(i);
        for j in 0..c {
            out[j] += (exps[j] - if j == labels[i] { 1.0 } else { 0.0 }) * inv_t;
        }
    }

    // dW2 = Z2^T dlogits + wd*W2; only train rows of dlogits are nonzero.
    let mut dw2 = DenseMatrix::zeros(h, c);
    for &i in train_idx {
        let z_row = pass.z2.row(i);
        let g_row = dlogits.row(i);
        for (k, &zv) in z_row.iter().enumerate() {
            if zv == 0.0 {
                continue;
            }
            let out = dw2.row_mut(k);
            for (j, &gv) in g_row.iter().enumerate() {
                out[j] += zv * gv;
            }
        }
    }
    dw2.add_scaled(&params.w2, weight_decay)?;

    // dZ2 = dlogits W2^T; A_hat is symmetric so backprop through the
    // second propagation is another spmm.
    let dz2 = dlogits.matmul(&params.w2.transpose())?;
    let dhidden_dropped = a_hat.spmm(&dz2)?;
    let dhidden = match dropout {
        Some(mask) => dhidden_dropped.hadamard(mask)?,
        None => dhidden_dropped,
    };
    let mut dh_pre = dhidden;
    for (g, &pre) in dh_pre.values_mut().iter_mut().zip(pass.h_pre.values()) {
        if pre <= 0.0 {
            *g = 0.0;
        }
    }
    let mut dw1 = z1t.matmul(&dh_pre)?;
    dw1.add_scaled(&params.w1, weight_decay)?;

    Ok((loss, GcnGrads { w1: dw1, w2: dw2 }))
}

/// Fraction of `idx` where the argmax prediction matches `labels`.
fn argmax_accuracy(logits: &DenseMatrix, labels: &[usize], idx: &[usize]) -> f64 {
    let correct = idx
        .iter()
        .filter(|&&i| argmax(logits.row(i)) == labels[i])
        .count();
    correct as f64 / idx.len() as f64
}

/// Everything training returns: the best checkpoint by validation
/// accuracy, its softmax probabilities for all nodes (dropout off), and
/// the per-epoch validation accuracy curve.
#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub params: GcnParams,
    pub pseudo_labels: PseudoLabelMatrix,
    pub val_curve: Vec<f64>,
}

/// Trains with Adam and early stopping on best validation accuracy
/// (ties broken by lower validation loss).
pub fn train_gcn(
    a_hat: &SparseMatrix,
    x: &DenseMatrix,
    splits: &LabeledSplits,
    cfg: &TrainConfig,
) -> Result<TrainOutput> {
    cfg.validate()?;
    if splits.train.is_empty() || splits.val.is_empty() {
        return Err(Error::InvalidArgument(
            "training requires non-empty train and val splits".into(),
        ));
    }
    let n = x.n_rows();
    let d = x.n_cols();
    let c = splits.n_classes;
    let labels = &splits.labels;

    let mut params = GcnParams::glorot(d, cfg.hidden, c, mix(&[cfg.seed, hash_label("gcn-init")]));
    let mut dropout_rng =
        ChaCha8Rng::seed_from_u64(mix(&[cfg.seed, hash_label("gcn-dropout")]));
    let mut adam = AdamState::new(&params);

    let z1 = a_hat.spmm(x)?;
    let z1t = z1.transpose();

    let mut best_params = params.clone();
    let mut best_acc = f64::NEG_INFINITY;
    let mut best_val_loss = f64::INFINITY;
    let mut epochs_since_best = 0usize;
    let mut val_curve = Vec::with_capacity(cfg.max_epochs);

    for epoch in 0..cfg.max_epochs {
        let mask = if cfg.dropout > 0.0 {
            Some(dropout_mask(n, cfg.hidden, cfg.dropout, &mut dropout_rng))
        } else {
            None
        };
        let (loss, grads) = loss_and_grads_cached(
            &params,
            a_hat,
            &z1t,
            &z1,
            labels,
            &splits.train,
            mask.as_ref(),
            cfg.weight_decay,
        )?;
        if !loss.is_finite() {
            return Err(Error::Divergence(format!(
                "non-finite training loss {loss} at epoch {epoch}"
            )));
        }
        adam.update(&mut params, &grads, cfg.lr);

        // Evaluation-mode forward for validation metrics.
        let eval = forward_from_z1(&params, a_hat, &z1, None)?;
        let val_acc = argmax_accuracy(&eval.logits, labels, &splits.val);
        let val_loss = cross_entropy_mean(&eval.logits, labels, &splits.val);
        val_curve.push(val_acc);

        let improved =
            val_acc > best_acc || (val_acc == best_acc && val_loss < best_val_loss);
        if improved {
            best_acc = val_acc;
            best_val_loss = val_loss;
            best_params = params.clone();
            epochs_since_best = 0;
        } else {
            epochs_since_best += 1;
            if epochs_since_best >= cfg.patience {
                break;
            }
        }
    }

    let logits = gcn_forward(&best_params, a_hat, x, None)?;
    let pseudo_labels = PseudoLabelMatrix::new(softmax_rows(&logits))?;
    Ok(TrainOutput {
        params: best_params,
        pseudo_labels,
        val_curve,
    })
}

/// Argmax class predictions in evaluation mode.
pub fn predict(params: &GcnParams, a_hat: &SparseMatrix, x: &DenseMatrix) -> Result<Vec<usize>> {
    let logits = gcn_forward(params, a_hat, x, None)?;
    Ok((0..logits.n_rows()).map(|i| argmax(logits.row(i))).collect())
}

/// Hidden-layer activations `relu(A_hat X W1)`, used for embedding
/// export.
pub fn gcn_hidden(
    params: &GcnParams,
    a_hat: &SparseMatrix,
    x: &DenseMatrix,
) -> Result<DenseMatrix> {
    let z1 = a_hat.spmm(x)?;
    Ok(z1.matmul(&params.w1)?.map(|v| v.max(0.0)))
}

#[derive(Serialize, Deserialize)]
struct CheckpointHeader {
    d: usize,
    h: usize,
    c: usize,
}

/// Writes parameters as a one-line JSON shape header followed by the
/// flat little-endian f64 payload (w1 rows, then w2 rows).
pub fn save_checkpoint(path: impl AsRef<std::path::Path>, params: &GcnParams) -> Result<()> {
    let path = path.as_ref();
    let (d, h, c) = params.dims();
    let mut bytes = serde_json::to_string(&CheckpointHeader { d, h, c })
        .expect("header json")
        .into_bytes();
    bytes.push(b'\n');
    for &v in params.w1.values().iter().chain(params.w2.values()) {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn load_checkpoint(path: impl AsRef<std::path::Path>) -> Result<GcnParams> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let newline = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::InvalidArgument("checkpoint missing header line".into()))?;
    let header: CheckpointHeader = serde_json::from_slice(&bytes[..newline]).map_err(|e| {
        Error::Json {
            path: path.display().to_string(),
            source: e,
        }
    })?;
    let payload = &bytes[newline + 1..];
    let expected = (header.d * header.h + header.h * header.c) * 8;
    if payload.len() != expected {
        return Err(Error::InvalidArgument(format!(
            "checkpoint payload is {} bytes, expected {expected}",
            payload.len()
        )));
    }
    let mut vals = payload
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().expect("8-byte chunk")));
    let w1_vals: Vec<f64> = vals.by_ref().take(header.d * header.h).collect();
    let w2_vals: Vec<f64> = vals.collect();
    Ok(GcnParams {
        w1: DenseMatrix::from_vec(header.d, header.h, w1_vals)?,
        w2: DenseMatrix::from_vec(header.h, header.c, w2_vals)?,
    })
}
