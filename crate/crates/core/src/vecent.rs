//! Argument classifiers: a closed-boundary context window around each entity,
//! a bidirectional LSTM over its two halves, and a two-layer MLP whose first
//! layer output is reused as the entity's argument embedding.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Entity, Sentence};
use crate::embed::{EmbeddingTable, PAD_TOKEN};
use crate::ndiff::{Bound, Dense, LstmCell, NdError, ParamSet, Sgd, Tape, Tensor, Var};
use crate::rng::seeded;

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error("training setup: {0}")]
    Setup(String),
    #[error(transparent)]
    Nd(#[from] NdError),
}

/// One position of a context window.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Slot {
    Word(String),
    Pad,
}

impl Slot {
    pub fn as_str(&self) -> &str {
        match self {
            Slot::Word(w) => w,
            Slot::Pad => PAD_TOKEN,
        }
    }
}

/// Words around an entity anchor. Both halves have `u + 1` slots and end with
/// the anchor: `left` reads left-to-right up to it, `right` reads
/// right-to-left back to it.
#[derive(Clone, Debug, PartialEq)]
pub struct ContextWindow {
    pub left: Vec<Slot>,
    pub right: Vec<Slot>,
    pub left_vectors: Vec<Vec<f64>>,
    pub right_vectors: Vec<Vec<f64>>,
}

impl ContextWindow {
    pub fn len(&self) -> usize {
        self.left.len()
    }

    pub fn is_empty(&self) -> bool {
        self.left.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.left_vectors.first().map_or(0, Vec::len)
    }

    /// Builds a window from explicit slots.
    pub fn from_slots(left: Vec<Slot>, right: Vec<Slot>, table: &EmbeddingTable) -> Self {
        let embed = |s: &[Slot]| s.iter().map(|x| table.lookup(x.as_str())).collect();
        ContextWindow {
            left_vectors: embed(&left),
            right_vectors: embed(&right),
            left,
            right,
        }
    }

    /// Swaps the two halves.
    pub fn swapped(&self) -> Self {
        ContextWindow {
            left: self.right.clone(),
            right: self.left.clone(),
            left_vectors: self.right_vectors.clone(),
            right_vectors: self.left_vectors.clone(),
        }
    }
}

/// Closed-boundary window of radius `u` around `entity`.
///
/// The anchor is the last token of the entity. Tokens without any letter or
/// digit are skipped when walking outwards; positions past the sentence edge
/// are [`Slot::Pad`].
pub fn build_context(
    sentence: &Sentence,
    entity: &Entity,
    u: usize,
    table: &EmbeddingTable,
) -> Result<ContextWindow, TrainError> {
    if u < 1 {
        return Err(TrainError::Setup("window size must be at least 1".into()));
    }
    let anchor = entity.anchor();
    if anchor >= sentence.tokens.len() {
        return Err(TrainError::Setup(format!(
            "entity {} anchor {} outside sentence {}",
            entity.id, anchor, sentence.id
        )));
    }
    let stream: Vec<usize> = sentence
        .tokens
        .iter()
        .filter(|t| t.index == anchor || t.is_word())
        .map(|t| t.index)
        .collect();
    let p = stream.iter().position(|&i| i == anchor).expect("anchor kept") as isize;
    let at = |pos: isize| -> Slot {
        if pos < 0 || pos as usize >= stream.len() {
            Slot::Pad
        } else {
            Slot::Word(sentence.tokens[stream[pos as usize]].text.clone())
        }
    };
    let u = u as isize;
    let left: Vec<Slot> = (p - u..=p).map(at).collect();
    let right: Vec<Slot> = (p..=p + u).rev().map(at).collect();
    Ok(ContextWindow::from_slots(left, right, table))
}

/// Sizes and regularisation of an argument model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArgShape {
    pub input_dim: usize,
    pub lstm_hidden: usize,
    pub mlp_hidden: usize,
    pub dropout: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArgHyper {
    pub window: usize,
    pub lstm_hidden: usize,
    pub mlp_hidden: usize,
    pub batch: usize,
    pub epochs: usize,
    pub dropout: f64,
    pub learning_rate: f64,
    pub momentum: f64,
    pub oversample_ratio: f64,
}

impl Default for ArgHyper {
    fn default() -> Self {
        ArgHyper {
            window: 10,
            lstm_hidden: 128,
            mlp_hidden: 128,
            batch: 32,
            epochs: 10,
            dropout: 0.2,
            learning_rate: 0.01,
            momentum: 0.9,
            oversample_ratio: 5.0,
        }
    }
}

/// BLSTM + MLP one-vs-all classifier for one argument type.
#[derive(Clone, Debug)]
pub struct ArgumentModel {
    pub arg_type: String,
    pub shape: ArgShape,
    pub params: ParamSet,
    forward_cell: LstmCell,
    backward_cell: LstmCell,
    hidden: Dense,
    output: Dense,
}

/// Outputs of a batched forward pass.
pub struct ArgForward {
    pub probabilities: Var,
    /// First dense layer before its activation.
    pub embedding: Var,
}

impl ArgumentModel {
    pub fn new<R: Rng + ?Sized>(arg_type: &str, shape: ArgShape, rng: &mut R) -> Self {
        let mut params = ParamSet::new();
        let h = shape.lstm_hidden;
        let forward_cell = LstmCell::init(&mut params, "blstm.forward", shape.input_dim, h, rng);
        let backward_cell = LstmCell::init(&mut params, "blstm.backward", shape.input_dim, h, rng);
        let hidden = Dense::init(&mut params, "mlp.hidden", 2 * h, shape.mlp_hidden, rng);
        let output = Dense::init(&mut params, "mlp.output", shape.mlp_hidden, 1, rng);
        ArgumentModel {
            arg_type: arg_type.to_string(),
            shape,
            params,
            forward_cell,
            backward_cell,
            hidden,
            output,
        }
    }

    /// Rebuilds a model around loaded parameters.
    pub fn from_params(
        arg_type: &str,
        dropout: f64,
        params: ParamSet,
    ) -> Result<Self, NdError> {
        let forward_cell = LstmCell::locate(&params, "blstm.forward")?;
        let backward_cell = LstmCell::locate(&params, "blstm.backward")?;
        let hidden = Dense::locate(&params, "mlp.hidden")?;
        let output = Dense::locate(&params, "mlp.output")?;
        if backward_cell.hidden != forward_cell.hidden
            || backward_cell.input_size != forward_cell.input_size
            || hidden.inputs != 2 * forward_cell.hidden
            || output.inputs != hidden.outputs
            || output.outputs != 1
        {
            return Err(NdError::Shape {
                op: "argument model",
                detail: "inconsistent layer sizes".into(),
            });
        }
        Ok(ArgumentModel {
            arg_type: arg_type.to_string(),
            shape: ArgShape {
                input_dim: forward_cell.input_size,
                lstm_hidden: forward_cell.hidden,
                mlp_hidden: hidden.outputs,
                dropout,
            },
            params,
            forward_cell,
            backward_cell,
            hidden,
            output,
        })
    }

    pub fn embedding_dim(&self) -> usize {
        self.shape.mlp_hidden
    }

    fn step_inputs(
        &self,
        tape: &mut Tape,
        windows: &[&ContextWindow],
        pick: impl Fn(&ContextWindow) -> &Vec<Vec<f64>>,
    ) -> Result<Vec<Var>, NdError> {
        let steps = windows.first().map_or(0, |w| pick(w).len());
        let dim = self.shape.input_dim;
        (0..steps)
            .map(|t| {
                let mut data = Vec::with_capacity(windows.len() * dim);
                for w in windows {
                    let seq = pick(w);
                    if seq.len() != steps || seq[t].len() != dim {
                        return Err(NdError::Shape {
                            op: "window",
                            detail: format!(
                                "expected {} steps of width {}, got {} of width {}",
                                steps,
                                dim,
                                seq.len(),
                                seq.get(t).map_or(0, Vec::len)
                            ),
                        });
                    }
                    data.extend_from_slice(&seq[t]);
                }
                Ok(tape.constant(Tensor::new(vec![windows.len(), dim], data)?))
            })
            .collect()
    }

    /// `LSTM_fwd(left) ⊕ LSTM_bwd(right)`, shape `[batch, 2·hidden]`.
    pub fn encode(
        &self,
        tape: &mut Tape,
        bound: &Bound,
        windows: &[&ContextWindow],
    ) -> Result<Var, NdError> {
        let left = self.step_inputs(tape, windows, |w| &w.left_vectors)?;
        let right = self.step_inputs(tape, windows, |w| &w.right_vectors)?;
        let l = self.forward_cell.last(tape, bound, &left)?;
        let r = self.backward_cell.last(tape, bound, &right)?;
        tape.concat(&[l, r])
    }

    /// `Sigmoid(F2(Dropout(Tanh(F1(encode)))))`; dropout only when training.
    pub fn forward<R: Rng + ?Sized>(
        &self,
        tape: &mut Tape,
        bound: &Bound,
        windows: &[&ContextWindow],
        training: bool,
        rng: &mut R,
    ) -> Result<ArgForward, NdError> {
        let enc = self.encode(tape, bound, windows)?;
        let embedding = self.hidden.forward(tape, bound, enc)?;
        let act = tape.tanh(embedding);
        let dropped = tape.dropout(act, self.shape.dropout, training, rng)?;
        let logits = self.output.forward(tape, bound, dropped)?;
        let probabilities = tape.sigmoid(logits);
        Ok(ArgForward {
            probabilities,
            embedding,
        })
    }

    fn infer<T>(
        &self,
        windows: &[&ContextWindow],
        read: impl Fn(&Tape, &ArgForward) -> Vec<T>,
    ) -> Result<Vec<T>, NdError> {
        const CHUNK: usize = 256;
        // inference never draws from the rng
        let mut rng = seeded(0);
        let mut out = Vec::with_capacity(windows.len());
        for chunk in windows.chunks(CHUNK) {
            let mut tape = Tape::new();
            let bound = self.params.bind(&mut tape, false);
            let f = self.forward(&mut tape, &bound, chunk, false, &mut rng)?;
            out.extend(read(&tape, &f));
        }
        Ok(out)
    }

    /// Probability that each window's entity has this argument type.
    pub fn predict(&self, windows: &[&ContextWindow]) -> Result<Vec<f64>, NdError> {
        self.infer(windows, |tape, f| tape.value(f.probabilities).data().to_vec())
    }

    /// Argument embedding `R = F1(BLSTM(x))` for each window.
    pub fn embed(&self, windows: &[&ContextWindow]) -> Result<Vec<Vec<f64>>, NdError> {
        let m = self.shape.mlp_hidden;
        self.infer(windows, |tape, f| {
            tape.value(f.embedding)
                .data()
                .chunks(m)
                .map(<[f64]>::to_vec)
                .collect()
        })
    }
}

/// Encoded BLSTM output for a single window.
pub fn encode(model: &ArgumentModel, window: &ContextWindow) -> Result<Vec<f64>, NdError> {
    let mut tape = Tape::new();
    let bound = model.params.bind(&mut tape, false);
    let v = model.encode(&mut tape, &bound, &[window])?;
    Ok(tape.value(v).data().to_vec())
}

pub fn arg_forward(model: &ArgumentModel, window: &ContextWindow) -> Result<f64, NdError> {
    Ok(model.predict(&[window])?[0])
}

pub fn argument_embedding(model: &ArgumentModel, window: &ContextWindow) -> Result<Vec<f64>, NdError> {
    Ok(model.embed(&[window])?.remove(0))
}

/// Positive-class weight `z = 1 - n/N`.
pub fn class_weight(labels: &[bool]) -> Result<f64, TrainError> {
    let n = labels.iter().filter(|&&y| y).count();
    let total = labels.len();
    if n == 0 || n == total {
        return Err(TrainError::Setup(format!(
            "class weight needs both classes ({} positives of {})",
            n, total
        )));
    }
    Ok(1.0 - n as f64 / total as f64)
}

/// Duplicates randomly chosen minority-class items until
/// `majority / minority <= max_ratio`. Originals keep their order and come
/// first; if either class is empty the input is returned unchanged.
pub fn oversample<T: Clone, R: Rng + ?Sized>(
    items: Vec<T>,
    label: impl Fn(&T) -> bool,
    max_ratio: f64,
    rng: &mut R,
) -> Vec<T> {
    let (pos, neg): (Vec<usize>, Vec<usize>) = (0..items.len()).partition(|&i| label(&items[i]));
    let (minority, majority) = if pos.len() <= neg.len() {
        (pos, neg.len())
    } else {
        (neg, pos.len())
    };
    if minority.is_empty() || max_ratio <= 0.0 {
        return items;
    }
    let needed = (majority as f64 / max_ratio).ceil() as usize;
    if minority.len() >= needed {
        return items;
    }
    let extra: Vec<T> = (0..needed - minority.len())
        .map(|_| items[minority[rng.random_range(0..minority.len())]].clone())
        .collect();
    let mut out = items;
    out.extend(extra);
    out
}

/// One training example for an argument classifier.
#[derive(Clone, Debug)]
pub struct ArgSample {
    pub window: Arc<ContextWindow>,
    pub label: bool,
    /// `(document index, entity id)`.
    pub entity: (usize, String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub loss: f64,
    pub accuracy: f64,
    pub mse: f64,
}

/// CSV with header `epoch,loss,accuracy,mse`.
pub fn epoch_log_csv(log: &[EpochLog]) -> String {
    let mut s = String::from("epoch,loss,accuracy,mse\n");
    for e in log {
        s.push_str(&format!("{},{:.6},{:.6},{:.6}\n", e.epoch, e.loss, e.accuracy, e.mse));
    }
    s
}

pub struct ArgTraining {
    pub model: ArgumentModel,
    pub log: Vec<EpochLog>,
    /// Positive-class weight used in the loss, from the pre-duplication labels.
    pub class_weight: f64,
    /// Number of samples after oversampling.
    pub trained_on: usize,
}

/// Trains a one-vs-all classifier for `arg_type`.
///
/// The class weight comes from `samples` as given; oversampling happens
/// afterwards, and each epoch minimises the batch-averaged weighted
/// cross-entropy with SGD.
pub fn train_argument_model(
    arg_type: &str,
    samples: &[ArgSample],
    hyper: &ArgHyper,
    rng: &mut ChaCha8Rng,
) -> Result<ArgTraining, TrainError> {
    let labels: Vec<bool> = samples.iter().map(|s| s.label).collect();
    let z = class_weight(&labels)?;
    let input_dim = samples[0].window.dim();
    if hyper.batch == 0 {
        return Err(TrainError::Setup("batch size must be positive".into()));
    }
    let shape = ArgShape {
        input_dim,
        lstm_hidden: hyper.lstm_hidden,
        mlp_hidden: hyper.mlp_hidden,
        dropout: hyper.dropout,
    };
    let mut model = ArgumentModel::new(arg_type, shape, rng);
    let train = oversample(samples.to_vec(), |s| s.label, hyper.oversample_ratio, rng);
    let mut sgd = Sgd::new(hyper.learning_rate, hyper.momentum, &model.params)?;
    let mut log = Vec::with_capacity(hyper.epochs);
    let mut order: Vec<usize> = (0..train.len()).collect();

    for epoch in 1..=hyper.epochs {
        order.shuffle(rng);
        let (mut loss_sum, mut correct, mut sq) = (0.0, 0usize, 0.0);
        for batch in order.chunks(hyper.batch) {
            let windows: Vec<&ContextWindow> = batch.iter().map(|&i| &*train[i].window).collect();
            let y: Vec<f64> = batch.iter().map(|&i| f64::from(u8::from(train[i].label))).collect();
            let mut tape = Tape::new();
            let bound = model.params.bind(&mut tape, true);
            let out = model.forward(&mut tape, &bound, &windows, true, rng)?;
            let loss = tape.weighted_bce(&y, out.probabilities, z)?;
            let mean = tape.scale(loss, 1.0 / batch.len() as f64);
            loss_sum += tape.value(loss).data()[0];
            for (p, t) in tape.value(out.probabilities).data().iter().zip(&y) {
                correct += usize::from((*p >= 0.5) == (*t == 1.0));
                sq += (p - t) * (p - t);
            }
            let mut grads = tape.backward(mean)?;
            let g = bound.collect(&mut grads);
            sgd.step(&mut model.params, &g)?;
        }
        let n = train.len() as f64;
        let entry = EpochLog {
            epoch,
            loss: loss_sum / n,
            accuracy: correct as f64 / n,
            mse: sq / n,
        };
        log::debug!("{} epoch {}: {:?}", arg_type, epoch, entry);
        log.push(entry);
    }
    Ok(ArgTraining {
        model,
        log,
        class_weight: z,
        trained_on: train.len(),
    })
}
