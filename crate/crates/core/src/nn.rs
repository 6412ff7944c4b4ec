//! From-scratch dense classifier: ReLU hidden layers, softmax head over
//! fidelity bins, categorical cross-entropy, hand-rolled backpropagation,
//! and a Nadam optimizer.
//!
//! Training is a single ordered stream of parameter updates (no
//! intra-batch threading), so a (dataset, config) pair reproduces the same
//! model bit for bit. Matrix products go through ndarray's `dot`.

use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{BinningScheme, Dataset, DatasetRecord};
use crate::error::{Error, Result};
use crate::stategen::RngStream;

pub const MODEL_SCHEMA_VERSION: u32 = 1;
const PROB_FLOOR: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    /// (fan_out, fan_in) weight matrix.
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

/// Dense classifier with ReLU hidden activations and a softmax output.
#[derive(Debug, Clone)]
pub struct MLPModel {
    pub sizes: Vec<usize>,
    pub layers: Vec<Layer>,
    /// Hash of the feature layout this model was trained on.
    pub layout_hash: String,
    pub binning: BinningScheme,
}

impl MLPModel {
    /// Scaled-uniform init: weights in +-sqrt(6/(fan_in+fan_out)), zero
    /// biases.
    pub fn init(
        sizes: &[usize],
        layout_hash: &str,
        binning: BinningScheme,
        rng: &mut rand_chacha::ChaCha8Rng,
    ) -> Self {
        assert!(sizes.len() >= 2, "need input and output layers");
        let layers = sizes
            .windows(2)
            .map(|pair| {
                let (fan_in, fan_out) = (pair[0], pair[1]);
                let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
                let w = Array2::from_shape_fn((fan_out, fan_in), |_| {
                    rng.gen_range(-bound..bound)
                });
                Layer {
                    w,
                    b: Array1::zeros(fan_out),
                }
            })
            .collect();
        MLPModel {
            sizes: sizes.to_vec(),
            layers,
            layout_hash: layout_hash.to_string(),
            binning,
        }
    }

    pub fn input_size(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_size(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    /// Class probabilities for one feature vector.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_size() {
            return Err(Error::ShapeMismatch(format!(
                "input has {} features, model expects {}",
                x.len(),
                self.input_size()
            )));
        }
        let batch = Array2::from_shape_vec((1, x.len()), x.to_vec()).unwrap();
        let (probs, _, _) = self.forward_batch(&batch);
        Ok(probs.row(0).to_vec())
    }

    /// Batched forward pass returning (probabilities, pre-activations,
    /// activations including the input).
    fn forward_batch(
        &self,
        x: &Array2<f64>,
    ) -> (Array2<f64>, Vec<Array2<f64>>, Vec<Array2<f64>>) {
        let mut activations = vec![x.clone()];
        let mut zs = Vec::with_capacity(self.layers.len());
        let mut a = x.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = a.dot(&layer.w.t());
            z += &layer.b;
            zs.push(z.clone());
            if i + 1 < self.layers.len() {
                a = z.mapv(|v| v.max(0.0));
                activations.push(a.clone());
            } else {
                a = softmax_rows(z);
            }
        }
        (a, zs, activations)
    }

    /// Predicted label: argmax probability, ties broken by lowest index.
    pub fn predict_label(&self, x: &[f64]) -> Result<usize> {
        let probs = self.forward(x)?;
        Ok(argmax(&probs))
    }

    /// Predicted fidelity: midpoint of the argmax bin.
    pub fn predict_fidelity(&self, x: &[f64]) -> Result<f64> {
        Ok(self.binning.center(self.predict_label(x)?))
    }
}

fn softmax_rows(mut z: Array2<f64>) -> Array2<f64> {
    for mut row in z.rows_mut() {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
    z
}

pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Categorical cross-entropy of one prediction, floored at 1e-15.
pub fn loss(probs: &[f64], label: usize) -> Result<f64> {
    if label >= probs.len() {
        return Err(Error::LabelOutOfRange {
            label,
            classes: probs.len(),
        });
    }
    Ok(-(probs[label].max(PROB_FLOOR)).ln())
}

/// Per-layer gradients, shapes mirroring the parameters.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub layers: Vec<Layer>,
}

/// Mean cross-entropy loss and its gradients over a batch.
pub fn backward(model: &MLPModel, x: &Array2<f64>, labels: &[usize]) -> Result<(f64, Gradients)> {
    if x.nrows() != labels.len() || x.nrows() == 0 {
        return Err(Error::ShapeMismatch(format!(
            "batch of {} rows with {} labels",
            x.nrows(),
            labels.len()
        )));
    }
    if x.ncols() != model.input_size() {
        return Err(Error::ShapeMismatch(format!(
            "batch has {} features, model expects {}",
            x.ncols(),
            model.input_size()
        )));
    }
    let classes = model.output_size();
    let batch = x.nrows() as f64;
    let (probs, zs, activations) = model.forward_batch(x);

    let mut total_loss = 0.0;
    for (row, &label) in probs.rows().into_iter().zip(labels) {
        if label >= classes {
            return Err(Error::LabelOutOfRange { label, classes });
        }
        total_loss += -(row[label].max(PROB_FLOOR)).ln();
    }
    total_loss /= batch;

    // Output delta: (softmax - onehot) / B.
    let mut delta = probs;
    for (i, &label) in labels.iter().enumerate() {
        delta[(i, label)] -= 1.0;
    }
    delta.mapv_inplace(|v| v / batch);

    let mut grads: Vec<Layer> = Vec::with_capacity(model.layers.len());
    for l in (0..model.layers.len()).rev() {
        let gw = delta.t().dot(&activations[l]);
        let gb = delta.sum_axis(Axis(0));
        grads.push(Layer { w: gw, b: gb });
        if l > 0 {
            let mut back = delta.dot(&model.layers[l].w);
            back.zip_mut_with(&zs[l - 1], |d, z| {
                if *z <= 0.0 {
                    *d = 0.0;
                }
            });
            delta = back;
        }
    }
    grads.reverse();
    Ok((total_loss, Gradients { layers: grads }))
}

/// Optimizer hyperparameters and the training schedule.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps_opt: f64,
    pub hidden: Vec<usize>,
    /// Early stop after this many epochs without a validation improvement.
    pub patience: usize,
    /// Tolerance of the tracked validation accuracy (0.01 = +-1%).
    pub accuracy_tol: f64,
    pub seed: u64,
}

impl TrainConfig {
    /// Desk-scale defaults for small qubit counts.
    pub fn desk(seed: u64) -> Self {
        TrainConfig {
            epochs: 80,
            batch_size: 256,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps_opt: 1e-8,
            hidden: vec![128, 64],
            patience: 15,
            accuracy_tol: 0.01,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.batch_size == 0
            || self.learning_rate <= 0.0
            || !(0.0..1.0).contains(&self.beta1)
            || !(0.0..1.0).contains(&self.beta2)
            || self.eps_opt <= 0.0
        {
            return Err(Error::ShapeMismatch("invalid training config".into()));
        }
        Ok(())
    }
}

/// One published hyperparameter row (full-scale runs, recorded for
/// reference; desk runs use [`TrainConfig::desk`]).
#[derive(Debug, Clone)]
pub struct PaperPreset {
    pub qubits: usize,
    pub state: &'static str,
    /// "probs" for outcome-probability inputs, "paulis" for filtered
    /// Pauli-expectation inputs.
    pub inputs: &'static str,
    pub epochs: usize,
    pub batch_size: usize,
    pub hidden: &'static [usize],
}

/// Hyperparameters of the full-scale reference runs.
pub const PAPER_PRESETS: &[PaperPreset] = &[
    PaperPreset { qubits: 4, state: "general", inputs: "paulis", epochs: 400, batch_size: 8192, hidden: &[5000] },
    PaperPreset { qubits: 5, state: "general", inputs: "paulis", epochs: 500, batch_size: 16384, hidden: &[1000, 300] },
    PaperPreset { qubits: 6, state: "general", inputs: "paulis", epochs: 500, batch_size: 16384, hidden: &[900, 300] },
    PaperPreset { qubits: 2, state: "bell", inputs: "probs", epochs: 200, batch_size: 2048, hidden: &[1000] },
    PaperPreset { qubits: 2, state: "general", inputs: "probs", epochs: 200, batch_size: 2048, hidden: &[3000] },
    PaperPreset { qubits: 3, state: "ghz", inputs: "probs", epochs: 400, batch_size: 4096, hidden: &[1000] },
    PaperPreset { qubits: 4, state: "ghz", inputs: "probs", epochs: 400, batch_size: 8192, hidden: &[3000] },
    PaperPreset { qubits: 5, state: "ghz", inputs: "probs", epochs: 200, batch_size: 16384, hidden: &[1500, 1500] },
    PaperPreset { qubits: 6, state: "ghz", inputs: "probs", epochs: 500, batch_size: 16384, hidden: &[1000, 1000] },
    PaperPreset { qubits: 7, state: "general", inputs: "probs", epochs: 500, batch_size: 16384, hidden: &[1000, 400] },
    PaperPreset { qubits: 8, state: "general", inputs: "probs", epochs: 500, batch_size: 16384, hidden: &[1000, 400] },
];

/// Nadam accumulators, one pair of moment tensors per layer.
#[derive(Debug, Clone)]
pub struct NadamState {
    pub step: u64,
    m: Vec<Layer>,
    v: Vec<Layer>,
}

impl NadamState {
    pub fn new(model: &MLPModel) -> Self {
        let zeros = |l: &Layer| Layer {
            w: Array2::zeros(l.w.dim()),
            b: Array1::zeros(l.b.len()),
        };
        NadamState {
            step: 0,
            m: model.layers.iter().map(zeros).collect(),
            v: model.layers.iter().map(zeros).collect(),
        }
    }
}

fn nadam_update_tensor(
    param: &mut f64,
    g: f64,
    m: &mut f64,
    v: &mut f64,
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    bc1: f64,
    bc2: f64,
) {
    *m = beta1 * *m + (1.0 - beta1) * g;
    *v = beta2 * *v + (1.0 - beta2) * g * g;
    let m_hat = *m / bc1;
    let v_hat = *v / bc2;
    let lookahead = beta1 * m_hat + (1.0 - beta1) * g / bc1;
    *param -= lr * lookahead / (v_hat.sqrt() + eps);
}

/// One Nadam step: biased moments with beta1/beta2, Nesterov-corrected
/// first moment beta1*m_hat + (1-beta1)*g/(1-beta1^t) over sqrt(v_hat)+eps.
pub fn nadam_step(
    state: &mut NadamState,
    model: &mut MLPModel,
    grads: &Gradients,
    config: &TrainConfig,
) {
    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - config.beta1.powi(t);
    let bc2 = 1.0 - config.beta2.powi(t);
    for (l, grad) in grads.layers.iter().enumerate() {
        let (mw, vw) = (&mut state.m[l].w, &mut state.v[l].w);
        for ((p, g), (m, v)) in model.layers[l]
            .w
            .iter_mut()
            .zip(grad.w.iter())
            .zip(mw.iter_mut().zip(vw.iter_mut()))
        {
            nadam_update_tensor(
                p,
                *g,
                m,
                v,
                config.learning_rate,
                config.beta1,
                config.beta2,
                config.eps_opt,
                bc1,
                bc2,
            );
        }
        let (mb, vb) = (&mut state.m[l].b, &mut state.v[l].b);
        for ((p, g), (m, v)) in model.layers[l]
            .b
            .iter_mut()
            .zip(grad.b.iter())
            .zip(mb.iter_mut().zip(vb.iter_mut()))
        {
            nadam_update_tensor(
                p,
                *g,
                m,
                v,
                config.learning_rate,
                config.beta1,
                config.beta2,
                config.eps_opt,
                bc1,
                bc2,
            );
        }
    }
}

/// Feature matrix, labels, and true fidelities extracted from records.
#[derive(Debug, Clone)]
pub struct Examples {
    pub x: Array2<f64>,
    pub labels: Vec<usize>,
    pub fidelities: Vec<f64>,
}

impl Examples {
    pub fn from_records(records: &[&DatasetRecord]) -> Result<Examples> {
        if records.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let width = records[0].features.len();
        if records.iter().any(|r| r.features.len() != width) {
            return Err(Error::ShapeMismatch("ragged feature rows".into()));
        }
        let mut flat = Vec::with_capacity(records.len() * width);
        for r in records {
            flat.extend_from_slice(&r.features);
        }
        Ok(Examples {
            x: Array2::from_shape_vec((records.len(), width), flat).unwrap(),
            labels: records.iter().map(|r| r.label).collect(),
            fidelities: records.iter().map(|r| r.true_fidelity).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_acc_pm: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochStats>,
    pub best_epoch: usize,
    pub best_val_acc: f64,
}

impl TrainHistory {
    /// CSV rows: epoch, loss, val_acc_pm1.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,loss,val_acc_pm1\n");
        for e in &self.epochs {
            out.push_str(&format!(
                "{},{:.16e},{:.16e}\n",
                e.epoch, e.train_loss, e.val_acc_pm
            ));
        }
        out
    }
}

/// Fraction of examples whose predicted-bin midpoint lies within `tol` of
/// the true fidelity.
pub fn accuracy_pm(model: &MLPModel, examples: &Examples, tol: f64) -> f64 {
    debug_assert!(tol >= 0.0);
    let (probs, _, _) = model.forward_batch(&examples.x);
    let mut hits = 0usize;
    for (row, &f) in probs.rows().into_iter().zip(&examples.fidelities) {
        let label = argmax(row.as_slice().unwrap());
        if (model.binning.center(label) - f).abs() <= tol {
            hits += 1;
        }
    }
    hits as f64 / examples.len() as f64
}

/// Mini-batch training with early stopping on validation accuracy.
/// Returns the best-validation model and the per-epoch history.
pub fn train(dataset: &Dataset, config: &TrainConfig) -> Result<(MLPModel, TrainHistory)> {
    config.validate()?;
    let train = Examples::from_records(&dataset.train_records())?;
    let val = Examples::from_records(&dataset.val_records())?;
    train_examples(
        &train,
        &val,
        &dataset.manifest.feature.layout_hash(),
        dataset.manifest.binning.clone(),
        config,
    )
}

/// Training entry point on pre-extracted examples.
pub fn train_examples(
    train: &Examples,
    val: &Examples,
    layout_hash: &str,
    binning: BinningScheme,
    config: &TrainConfig,
) -> Result<(MLPModel, TrainHistory)> {
    config.validate()?;
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let input = train.x.ncols();
    let mut sizes = vec![input];
    sizes.extend(&config.hidden);
    sizes.push(binning.count());

    // Stream 0 initializes parameters, stream 1 shuffles batches.
    let mut init_rng = RngStream::new(config.seed, 0).rng();
    let mut shuffle_rng = RngStream::new(config.seed, 1).rng();
    let mut model = MLPModel::init(&sizes, layout_hash, binning, &mut init_rng);
    let mut opt = NadamState::new(&model);

    let mut best_model = model.clone();
    let mut best_acc = f64::NEG_INFINITY;
    let mut best_epoch = 0;
    let mut since_best = 0usize;
    let mut history = Vec::with_capacity(config.epochs);

    let mut order: Vec<usize> = (0..train.len()).collect();
    for epoch in 0..config.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut epoch_loss = 0.0;
        let mut batches = 0usize;
        for (batch_idx, chunk) in order.chunks(config.batch_size).enumerate() {
            let mut flat = Vec::with_capacity(chunk.len() * input);
            let mut labels = Vec::with_capacity(chunk.len());
            for &i in chunk {
                flat.extend(train.x.row(i).iter());
                labels.push(train.labels[i]);
            }
            let batch = Array2::from_shape_vec((chunk.len(), input), flat).unwrap();
            let (batch_loss, grads) = backward(&model, &batch, &labels)?;
            if !batch_loss.is_finite() {
                return Err(Error::NonFiniteLoss {
                    epoch,
                    batch: batch_idx,
                });
            }
            nadam_step(&mut opt, &mut model, &grads, config);
            epoch_loss += batch_loss;
            batches += 1;
        }
        epoch_loss /= batches.max(1) as f64;

        let val_acc = if val.is_empty() {
            0.0
        } else {
            accuracy_pm(&model, val, config.accuracy_tol)
        };
        history.push(EpochStats {
            epoch,
            train_loss: epoch_loss,
            val_acc_pm: val_acc,
        });
        if val_acc > best_acc {
            best_acc = val_acc;
            best_model = model.clone();
            best_epoch = epoch;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= config.patience {
                break;
            }
        }
    }

    Ok((
        best_model,
        TrainHistory {
            epochs: history,
            best_epoch,
            best_val_acc: best_acc,
        },
    ))
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelFile {
    schema_version: u32,
    sizes: Vec<usize>,
    /// Row-major weights then biases, per layer.
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
    layout_hash: String,
    binning: BinningScheme,
}

/// Write the model as `<path>` (JSON document).
pub fn save_model(model: &MLPModel, path: &std::path::Path) -> Result<()> {
    let file = ModelFile {
        schema_version: MODEL_SCHEMA_VERSION,
        sizes: model.sizes.clone(),
        weights: model
            .layers
            .iter()
            .map(|l| l.w.iter().copied().collect())
            .collect(),
        biases: model
            .layers
            .iter()
            .map(|l| l.b.iter().copied().collect())
            .collect(),
        layout_hash: model.layout_hash.clone(),
        binning: model.binning.clone(),
    };
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, serde_json::to_string(&file)?)?;
    Ok(())
}

/// Load and validate a model file.
pub fn load_model(path: &std::path::Path) -> Result<MLPModel> {
    let text = std::fs::read_to_string(path)?;
    let file: ModelFile = serde_json::from_str(&text).map_err(|e| {
        Error::Io(std::io::Error::new(
            std::io::ErrorKind::InvalidData,
            format!("unreadable model file: {e}"),
        ))
    })?;
    if file.schema_version != MODEL_SCHEMA_VERSION {
        return Err(Error::SchemaMismatch(format!(
            "model schema {} (expected {MODEL_SCHEMA_VERSION})",
            file.schema_version
        )));
    }
    if file.sizes.len() < 2
        || file.weights.len() != file.sizes.len() - 1
        || file.biases.len() != file.sizes.len() - 1
    {
        return Err(Error::SchemaMismatch("inconsistent layer shapes".into()));
    }
    if *file.sizes.last().unwrap() != file.binning.count() {
        return Err(Error::SchemaMismatch(
            "output layer does not match the binning".into(),
        ));
    }
    let mut layers = Vec::with_capacity(file.weights.len());
    for (i, (w, b)) in file.weights.iter().zip(&file.biases).enumerate() {
        let (fan_in, fan_out) = (file.sizes[i], file.sizes[i + 1]);
        if w.len() != fan_in * fan_out || b.len() != fan_out {
            return Err(Error::SchemaMismatch(format!(
                "layer {i} has {} weights, expected {}",
                w.len(),
                fan_in * fan_out
            )));
        }
        if w.iter().chain(b).any(|v| !v.is_finite()) {
            return Err(Error::SchemaMismatch("non-finite parameter".into()));
        }
        layers.push(Layer {
            w: Array2::from_shape_vec((fan_out, fan_in), w.clone()).unwrap(),
            b: Array1::from_vec(b.clone()),
        });
    }
    Ok(MLPModel {
        sizes: file.sizes,
        layers,
        layout_hash: file.layout_hash,
        binning: file.binning,
    })
}
