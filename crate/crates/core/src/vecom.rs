//! Directed event classifiers over pairs of argument embeddings.
//!
//! For an event type `source -> target` and an ordered candidate pair
//! `(first, second)`, the input is
//! `⟨R_s(first) ⊕ R_t(first), R_t(second) ⊕ R_s(second)⟩`. The two halves
//! are subtracted; the element-wise absolute value of the difference feeds
//! the existence head and the signed difference feeds the direction head.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{AnnotatedDocument, Event};
use crate::ndiff::{Bound, Dense, NdError, ParamSet, Sgd, Tape, Tensor, Var};
use crate::vecent::{oversample, EpochLog, TrainError};

#[derive(Debug, thiserror::Error)]
pub enum VecomError {
    #[error("data: {0}")]
    Data(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Nd(#[from] NdError),
}

/// Ordered pair of distinct entities from one sentence.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CandidatePair {
    pub doc: usize,
    pub sentence: usize,
    pub first: String,
    pub second: String,
}

/// Two-bit label: does an event of the type link the pair, and does it point
/// from `first` to `second`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PairLabel {
    pub exists: bool,
    pub forward: bool,
}

impl PairLabel {
    pub const NONE: PairLabel = PairLabel {
        exists: false,
        forward: false,
    };

    /// Gold label as a hard prediction `(p_exists, p_forward)`.
    pub fn as_prediction(self) -> (f64, f64) {
        (f64::from(u8::from(self.exists)), f64::from(u8::from(self.forward)))
    }
}

/// All `n·(n-1)` ordered pairs of the entities in sentence `sentence` of `doc`.
pub fn gen_candidates(doc: &AnnotatedDocument, doc_index: usize, sentence: usize) -> Vec<CandidatePair> {
    let ents = doc.sentence_entities(sentence);
    let mut pairs = Vec::with_capacity(ents.len() * ents.len().saturating_sub(1));
    for a in &ents {
        for b in &ents {
            if a.id != b.id {
                pairs.push(CandidatePair {
                    doc: doc_index,
                    sentence,
                    first: a.id.clone(),
                    second: b.id.clone(),
                });
            }
        }
    }
    pairs
}

/// Two-bit labels for `pairs` with respect to the gold `events` of `event_type`.
///
/// Exact duplicate gold events collapse; a type linking the same two
/// entities in both directions is rejected.
pub fn label_pairs(
    pairs: &[CandidatePair],
    events: &[Event],
    event_type: &str,
) -> Result<Vec<PairLabel>, VecomError> {
    let mut directed: BTreeSet<(&str, &str)> = BTreeSet::new();
    for e in events.iter().filter(|e| e.event_type == event_type) {
        if directed.contains(&(e.target.as_str(), e.source.as_str())) {
            return Err(VecomError::Data(format!(
                "{} links {} and {} in both directions",
                event_type, e.source, e.target
            )));
        }
        directed.insert((e.source.as_str(), e.target.as_str()));
    }
    Ok(pairs
        .iter()
        .map(|p| {
            let fwd = directed.contains(&(p.first.as_str(), p.second.as_str()));
            let bwd = directed.contains(&(p.second.as_str(), p.first.as_str()));
            PairLabel {
                exists: fwd || bwd,
                forward: fwd,
            }
        })
        .collect())
}

/// Drops the later of two same-type events that link the same entities in
/// opposite directions. Returns the kept events and the number dropped.
pub fn drop_bidirectional(events: &[Event]) -> (Vec<Event>, usize) {
    let mut seen: BTreeSet<(&str, &str, &str)> = BTreeSet::new();
    let mut kept = Vec::with_capacity(events.len());
    let mut dropped = 0;
    for e in events {
        let key = (e.event_type.as_str(), e.source.as_str(), e.target.as_str());
        let rev = (e.event_type.as_str(), e.target.as_str(), e.source.as_str());
        if seen.contains(&rev) {
            dropped += 1;
            continue;
        }
        seen.insert(key);
        kept.push(e.clone());
    }
    (kept, dropped)
}

/// Composed input of one ordered pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairInput {
    /// `R_s(first) ⊕ R_t(first)`
    pub first: Vec<f64>,
    /// `R_t(second) ⊕ R_s(second)`
    pub second: Vec<f64>,
}

impl PairInput {
    /// Builds the input from the four argument embeddings.
    pub fn from_embeddings(
        source_of_first: &[f64],
        target_of_first: &[f64],
        target_of_second: &[f64],
        source_of_second: &[f64],
    ) -> Self {
        PairInput {
            first: [source_of_first, target_of_first].concat(),
            second: [target_of_second, source_of_second].concat(),
        }
    }
}

/// First half minus second half.
pub fn vecom_compose(x: &PairInput) -> Result<Vec<f64>, VecomError> {
    if x.first.len() != x.second.len() {
        return Err(VecomError::Nd(NdError::Shape {
            op: "compose",
            detail: format!("halves of width {} and {}", x.first.len(), x.second.len()),
        }));
    }
    Ok(x.first.iter().zip(&x.second).map(|(a, b)| a - b).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventHyper {
    pub mlp_hidden: usize,
    pub batch: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub oversample_ratio: f64,
}

impl Default for EventHyper {
    fn default() -> Self {
        EventHyper {
            mlp_hidden: 64,
            batch: 32,
            epochs: 10,
            learning_rate: 0.01,
            momentum: 0.9,
            oversample_ratio: 5.0,
        }
    }
}

/// Existence and direction heads for one event type.
#[derive(Clone, Debug)]
pub struct EventModel {
    pub event_type: String,
    pub source: String,
    pub target: String,
    pub params: ParamSet,
    exist_hidden: Dense,
    exist_out: Dense,
    dir_hidden: Dense,
    dir_out: Dense,
}

pub struct EventForward {
    pub exists: Var,
    pub forward: Var,
}

impl EventModel {
    pub fn new<R: Rng + ?Sized>(
        event_type: &str,
        source: &str,
        target: &str,
        input_dim: usize,
        hidden: usize,
        rng: &mut R,
    ) -> Self {
        let mut params = ParamSet::new();
        let exist_hidden = Dense::init(&mut params, "exists.hidden", input_dim, hidden, rng);
        let exist_out = Dense::init(&mut params, "exists.output", hidden, 1, rng);
        let dir_hidden = Dense::init(&mut params, "direction.hidden", input_dim, hidden, rng);
        let dir_out = Dense::init(&mut params, "direction.output", hidden, 1, rng);
        EventModel {
            event_type: event_type.to_string(),
            source: source.to_string(),
            target: target.to_string(),
            params,
            exist_hidden,
            exist_out,
            dir_hidden,
            dir_out,
        }
    }

    pub fn from_params(
        event_type: &str,
        source: &str,
        target: &str,
        params: ParamSet,
    ) -> Result<Self, NdError> {
        let exist_hidden = Dense::locate(&params, "exists.hidden")?;
        let exist_out = Dense::locate(&params, "exists.output")?;
        let dir_hidden = Dense::locate(&params, "direction.hidden")?;
        let dir_out = Dense::locate(&params, "direction.output")?;
        if exist_hidden.inputs != dir_hidden.inputs
            || exist_out.inputs != exist_hidden.outputs
            || dir_out.inputs != dir_hidden.outputs
        {
            return Err(NdError::Shape {
                op: "event model",
                detail: "inconsistent layer sizes".into(),
            });
        }
        Ok(EventModel {
            event_type: event_type.to_string(),
            source: source.to_string(),
            target: target.to_string(),
            params,
            exist_hidden,
            exist_out,
            dir_hidden,
            dir_out,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.exist_hidden.inputs
    }

    /// Heads applied to a composed batch `[n, input_dim]`.
    pub fn heads(&self, tape: &mut Tape, bound: &Bound, composed: Var) -> Result<EventForward, NdError> {
        let magnitude = tape.abs(composed);
        let h = self.exist_hidden.forward(tape, bound, magnitude)?;
        let h = tape.relu(h);
        let e = self.exist_out.forward(tape, bound, h)?;
        let exists = tape.sigmoid(e);

        let h = self.dir_hidden.forward(tape, bound, composed)?;
        let h = tape.relu(h);
        let d = self.dir_out.forward(tape, bound, h)?;
        let forward = tape.sigmoid(d);
        Ok(EventForward { exists, forward })
    }

    /// Subtracts the halves on the tape and applies both heads.
    pub fn forward(
        &self,
        tape: &mut Tape,
        bound: &Bound,
        first: Var,
        second: Var,
    ) -> Result<EventForward, NdError> {
        let composed = tape.sub(first, second)?;
        self.heads(tape, bound, composed)
    }

    fn halves(&self, inputs: &[&PairInput]) -> Result<(Tensor, Tensor), NdError> {
        let d = self.input_dim();
        for x in inputs {
            if x.first.len() != d || x.second.len() != d {
                return Err(NdError::Shape {
                    op: "event input",
                    detail: format!(
                        "expected halves of width {}, got {} and {}",
                        d,
                        x.first.len(),
                        x.second.len()
                    ),
                });
            }
        }
        let a = Tensor::from_rows(&inputs.iter().map(|x| &x.first[..]).collect::<Vec<_>>())?;
        let b = Tensor::from_rows(&inputs.iter().map(|x| &x.second[..]).collect::<Vec<_>>())?;
        Ok((a, b))
    }

    /// `(p_exists, p_forward)` for each input.
    pub fn predict(&self, inputs: &[&PairInput]) -> Result<Vec<(f64, f64)>, NdError> {
        let mut out = Vec::with_capacity(inputs.len());
        for chunk in inputs.chunks(1024) {
            let (a, b) = self.halves(chunk)?;
            let mut tape = Tape::new();
            let bound = self.params.bind(&mut tape, false);
            let (a, b) = (tape.constant(a), tape.constant(b));
            let f = self.forward(&mut tape, &bound, a, b)?;
            let e = tape.value(f.exists).data();
            let d = tape.value(f.forward).data();
            out.extend(e.iter().copied().zip(d.iter().copied()));
        }
        Ok(out)
    }

    /// Heads applied directly to a composed vector.
    pub fn predict_composed(&self, composed: &[f64]) -> Result<(f64, f64), NdError> {
        let mut tape = Tape::new();
        let bound = self.params.bind(&mut tape, false);
        let c = tape.constant(Tensor::row(composed));
        let f = self.heads(&mut tape, &bound, c)?;
        Ok((tape.value(f.exists).data()[0], tape.value(f.forward).data()[0]))
    }
}

pub fn event_forward(model: &EventModel, x: &PairInput) -> Result<(f64, f64), NdError> {
    Ok(model.predict(&[x])?[0])
}

/// Joint loss for a batch: cross-entropy of the existence bit over every pair
/// plus cross-entropy of the direction bit over pairs whose event exists.
pub fn event_loss(
    tape: &mut Tape,
    out: &EventForward,
    labels: &[PairLabel],
) -> Result<Var, NdError> {
    let ones = vec![1.0; labels.len()];
    let y_exists: Vec<f64> = labels.iter().map(|l| f64::from(u8::from(l.exists))).collect();
    let y_forward: Vec<f64> = labels.iter().map(|l| f64::from(u8::from(l.forward))).collect();
    let mask: Vec<f64> = y_exists.clone();
    let le = tape.cross_entropy(&y_exists, out.exists, &ones, &ones)?;
    let ld = tape.cross_entropy(&y_forward, out.forward, &mask, &mask)?;
    tape.add(le, ld)
}

pub struct EventTraining {
    pub model: EventModel,
    pub log: Vec<EpochLog>,
    pub trained_on: usize,
}

/// Trains the two heads for one event type on precomputed pair inputs.
/// Positive (existing) pairs are oversampled to the configured ratio first.
pub fn train_event_model(
    event_type: &str,
    source: &str,
    target: &str,
    samples: &[(PairInput, PairLabel)],
    hyper: &EventHyper,
    rng: &mut ChaCha8Rng,
) -> Result<EventTraining, TrainError> {
    let positives = samples.iter().filter(|(_, l)| l.exists).count();
    if positives == 0 || positives == samples.len() {
        return Err(TrainError::Setup(format!(
            "{}: existence labels need both classes ({} of {})",
            event_type,
            positives,
            samples.len()
        )));
    }
    if hyper.batch == 0 {
        return Err(TrainError::Setup("batch size must be positive".into()));
    }
    let dim = samples[0].0.first.len();
    let mut model = EventModel::new(event_type, source, target, dim, hyper.mlp_hidden, rng);
    let indices: Vec<usize> = (0..samples.len()).collect();
    let train = oversample(indices, |&i| samples[i].1.exists, hyper.oversample_ratio, rng);
    let mut sgd = Sgd::new(hyper.learning_rate, hyper.momentum, &model.params)?;
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut log = Vec::with_capacity(hyper.epochs);

    for epoch in 1..=hyper.epochs {
        order.shuffle(rng);
        let (mut loss_sum, mut correct, mut sq) = (0.0, 0usize, 0.0);
        for batch in order.chunks(hyper.batch) {
            let inputs: Vec<&PairInput> = batch.iter().map(|&i| &samples[train[i]].0).collect();
            let labels: Vec<PairLabel> = batch.iter().map(|&i| samples[train[i]].1).collect();
            let (a, b) = model.halves(&inputs)?;
            let mut tape = Tape::new();
            let bound = model.params.bind(&mut tape, true);
            let (a, b) = (tape.constant(a), tape.constant(b));
            let out = model.forward(&mut tape, &bound, a, b)?;
            let loss = event_loss(&mut tape, &out, &labels)?;
            loss_sum += tape.value(loss).data()[0];
            for (p, l) in tape.value(out.exists).data().iter().zip(&labels) {
                let t = f64::from(u8::from(l.exists));
                correct += usize::from((*p >= 0.5) == l.exists);
                sq += (p - t) * (p - t);
            }
            let mean = tape.scale(loss, 1.0 / batch.len() as f64);
            let mut grads = tape.backward(mean)?;
            let g = bound.collect(&mut grads);
            sgd.step(&mut model.params, &g)?;
        }
        let n = train.len() as f64;
        log.push(EpochLog {
            epoch,
            loss: loss_sum / n,
            accuracy: correct as f64 / n,
            mse: sq / n,
        });
    }
    Ok(EventTraining {
        model,
        log,
        trained_on: train.len(),
    })
}

/// Turns per-pair predictions back into directed events.
///
/// For each unordered pair the ordering with the higher `p_exists` is kept
/// (the earlier one on ties); if that probability reaches `threshold`, the
/// event points `first -> second` when its `p_forward >= 0.5` and
/// `second -> first` otherwise. Events are deduplicated and returned in pair
/// order, numbered `R1, R2, …`.
pub fn decode_events(
    pairs: &[CandidatePair],
    predictions: &[(f64, f64)],
    event_type: &str,
    threshold: f64,
) -> Vec<Event> {
    let mut best: BTreeMap<(usize, usize, &str, &str), usize> = BTreeMap::new();
    let mut first_seen: Vec<(usize, usize, &str, &str)> = Vec::new();
    for (i, p) in pairs.iter().enumerate() {
        let (a, b) = if p.first <= p.second {
            (p.first.as_str(), p.second.as_str())
        } else {
            (p.second.as_str(), p.first.as_str())
        };
        let key = (p.doc, p.sentence, a, b);
        match best.get(&key) {
            Some(&j) if predictions[j].0 >= predictions[i].0 => {}
            Some(_) => {
                best.insert(key, i);
            }
            None => {
                best.insert(key, i);
                first_seen.push(key);
            }
        }
    }
    let mut seen = BTreeSet::new();
    let mut events = Vec::new();
    for key in first_seen {
        let i = best[&key];
        let (p_exists, p_forward) = predictions[i];
        if p_exists < threshold {
            continue;
        }
        let pair = &pairs[i];
        let (source, target) = if p_forward >= 0.5 {
            (&pair.first, &pair.second)
        } else {
            (&pair.second, &pair.first)
        };
        if seen.insert((pair.doc, source.clone(), target.clone())) {
            events.push(Event {
                id: format!("R{}", events.len() + 1),
                event_type: event_type.to_string(),
                source: source.clone(),
                target: target.clone(),
            });
        }
    }
    events
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn pair(a: &str, b: &str) -> CandidatePair {
        CandidatePair {
            doc: 0,
            sentence: 0,
            first: a.into(),
            second: b.into(),
        }
    }

    fn event(ty: &str, s: &str, t: &str) -> Event {
        Event {
            id: String::new(),
            event_type: ty.into(),
            source: s.into(),
            target: t.into(),
        }
    }

    #[test]
    fn two_bit_labels() {
        let pairs = [pair("T1", "T2"), pair("T2", "T1"), pair("T1", "T3")];
        let gold = [event("ActionTarget", "T1", "T2")];
        let l = label_pairs(&pairs, &gold, "ActionTarget").unwrap();
        assert_eq!(l[0], PairLabel { exists: true, forward: true });
        assert_eq!(l[1], PairLabel { exists: true, forward: false });
        assert_eq!(l[2], PairLabel::NONE);
        let l = label_pairs(&pairs, &gold, "Interaction").unwrap();
        assert!(l.iter().all(|x| *x == PairLabel::NONE));
    }

    #[test]
    fn conflicting_directions_are_rejected() {
        let gold = [event("Interaction", "T1", "T2"), event("Interaction", "T2", "T1")];
        assert!(matches!(
            label_pairs(&[pair("T1", "T2")], &gold, "Interaction"),
            Err(VecomError::Data(_))
        ));
        let (kept, dropped) = drop_bidirectional(&gold);
        assert_eq!((kept.len(), dropped), (1, 1));
        // duplicates of one direction are harmless
        let dup = [event("Interaction", "T1", "T2"), event("Interaction", "T1", "T2")];
        assert!(label_pairs(&[pair("T1", "T2")], &dup, "Interaction").is_ok());
    }

    #[test]
    fn compose_cases() {
        let v = vec![0.5, -1.0, 2.0];
        let eq = PairInput { first: v.clone(), second: v.clone() };
        assert_eq!(vecom_compose(&eq).unwrap(), vec![0.0; 3]);
        let z = PairInput { first: v.clone(), second: vec![0.0; 3] };
        assert_eq!(vecom_compose(&z).unwrap(), v);
        let bad = PairInput { first: v, second: vec![0.0; 2] };
        assert!(vecom_compose(&bad).is_err());
    }

    #[test]
    fn existence_is_sign_symmetric_direction_is_not() {
        let mut rng = seeded(12);
        let m = EventModel::new("X", "A", "B", 6, 5, &mut rng);
        let v: Vec<f64> = (0..6).map(|_| rng.random_range(-2.0..2.0)).collect();
        let neg: Vec<f64> = v.iter().map(|x| -x).collect();
        let (e1, d1) = m.predict_composed(&v).unwrap();
        let (e2, d2) = m.predict_composed(&neg).unwrap();
        assert_eq!(e1, e2);
        assert_ne!(d1, d2);
    }

    #[test]
    fn zero_model_is_uninformative() {
        let mut rng = seeded(0);
        let mut m = EventModel::new("X", "A", "B", 4, 3, &mut rng);
        m.params.zero_all();
        let x = PairInput { first: vec![1.0, 2.0, 3.0, 4.0], second: vec![0.0; 4] };
        assert_eq!(event_forward(&m, &x).unwrap(), (0.5, 0.5));
    }

    #[test]
    fn decode_cases() {
        let pairs = [pair("T1", "T2"), pair("T2", "T1"), pair("T2", "T3"), pair("T3", "T2")];
        let preds = [(1.0, 1.0), (1.0, 0.0), (1.0, 0.0), (0.2, 0.9)];
        let ev = decode_events(&pairs, &preds, "Interaction", 0.5);
        let got: Vec<(&str, &str)> = ev.iter().map(|e| (e.source.as_str(), e.target.as_str())).collect();
        assert_eq!(got, [("T1", "T2"), ("T3", "T2")]);
        assert!(decode_events(&pairs, &[(0.4, 1.0); 4], "Interaction", 0.5).is_empty());
        // the more confident ordering decides direction
        let preds = [(0.6, 0.9), (0.9, 0.9), (0.0, 0.0), (0.0, 0.0)];
        let ev = decode_events(&pairs, &preds, "Interaction", 0.5);
        assert_eq!((ev[0].source.as_str(), ev[0].target.as_str()), ("T2", "T1"));
        assert!(decode_events(&pairs, &[(1.0, 1.0); 4], "I", 1.0 + 1e-9).is_empty());
    }
}
