//! End-to-end plumbing: windows for every entity, one-vs-all argument
//! training, candidate pairs with labels, event training and prediction.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, EventRoles, Event};
use crate::embed::EmbeddingTable;
use crate::rng::derived;
use crate::vecent::{build_context, train_argument_model, ArgHyper, ArgSample, ArgTraining, ArgumentModel, ContextWindow, TrainError};
use crate::vecom::{
    decode_events, drop_bidirectional, gen_candidates, label_pairs, train_event_model, CandidatePair,
    EventHyper, EventModel, EventTraining, PairInput, PairLabel, VecomError,
};

/// `(document index, entity id)`.
pub type EntityKey = (usize, String);

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Vecom(#[from] VecomError),
    #[error(transparent)]
    Nd(#[from] crate::ndiff::NdError),
}

/// Windows of every entity in a corpus.
#[derive(Clone, Debug, Default)]
pub struct WindowIndex {
    windows: HashMap<EntityKey, Arc<ContextWindow>>,
}

impl WindowIndex {
    pub fn build(corpus: &Corpus, table: &EmbeddingTable, u: usize) -> Result<Self, TrainError> {
        let per_doc = corpus
            .documents
            .par_iter()
            .enumerate()
            .map(|(d, doc)| {
                doc.entities
                    .values()
                    .map(|e| {
                        let sent = &doc.document.sentences[e.sentence_index];
                        Ok(((d, e.id.clone()), Arc::new(build_context(sent, e, u, table)?)))
                    })
                    .collect::<Result<Vec<_>, TrainError>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(WindowIndex {
            windows: per_doc.into_iter().flatten().collect(),
        })
    }

    pub fn get(&self, doc: usize, id: &str) -> Option<&Arc<ContextWindow>> {
        self.windows.get(&(doc, id.to_string()))
    }

    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }
}

/// Labelled windows for `arg_type` over every entity accepted by `include`,
/// in document then id order.
pub fn argument_samples(
    corpus: &Corpus,
    windows: &WindowIndex,
    arg_type: &str,
    include: &(dyn Fn(usize, &str) -> bool + Sync),
) -> Vec<ArgSample> {
    let mut out = Vec::new();
    for (d, doc) in corpus.documents.iter().enumerate() {
        for e in doc.entities.values() {
            if !include(d, &e.id) {
                continue;
            }
            if let Some(w) = windows.get(d, &e.id) {
                out.push(ArgSample {
                    window: Arc::clone(w),
                    label: e.has_argument_type(arg_type),
                    entity: (d, e.id.clone()),
                });
            }
        }
    }
    out
}

/// Trains one model per argument type in `types`, in parallel. The seed of
/// each model depends only on `seed`, `tag` and the type name.
pub fn train_argument_models(
    corpus: &Corpus,
    windows: &WindowIndex,
    types: &[String],
    hyper: &ArgHyper,
    seed: u64,
    tag: &str,
    include: &(dyn Fn(usize, &str) -> bool + Sync),
) -> Result<BTreeMap<String, ArgTraining>, TrainError> {
    types
        .par_iter()
        .map(|t| {
            let samples = argument_samples(corpus, windows, t, include);
            let mut rng = derived(seed, &format!("{tag}/args/{t}"), 0);
            let trained = train_argument_model(t, &samples, hyper, &mut rng)
                .map_err(|e| TrainError::Setup(format!("argument {t}: {e}")))?;
            Ok((t.clone(), trained))
        })
        .collect()
}

/// Candidate pairs of one event type with their two-bit labels.
#[derive(Clone, Debug)]
pub struct EventSet {
    pub event_type: String,
    pub roles: EventRoles,
    pub pairs: Vec<CandidatePair>,
    pub labels: Vec<PairLabel>,
}

impl EventSet {
    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|l| l.forward).count()
    }
}

/// Gold events of a document usable for pair labelling: intra-sentence ones,
/// with the later of two opposite-direction duplicates dropped.
pub fn usable_events(corpus: &Corpus, doc: usize) -> Vec<Event> {
    let d = &corpus.documents[doc];
    let intra: Vec<Event> = d.intra_sentence_events().cloned().collect();
    let cross = d.events.len() - intra.len();
    if cross > 0 {
        log::info!("{}: {} cross-sentence events left out", d.document.id, cross);
    }
    let (kept, dropped) = drop_bidirectional(&intra);
    if dropped > 0 {
        log::warn!("{}: {} events contradict an earlier direction and were dropped", d.document.id, dropped);
    }
    kept
}

fn typed_ok(corpus: &Corpus, pair: &CandidatePair, roles: &EventRoles) -> bool {
    let doc = &corpus.documents[pair.doc];
    match (doc.entity(&pair.first), doc.entity(&pair.second)) {
        (Some(a), Some(b)) => {
            (a.label == roles.source && b.label == roles.target)
                || (a.label == roles.target && b.label == roles.source)
        }
        _ => false,
    }
}

/// Contiguous runs of pairs from the same document.
pub fn doc_ranges(pairs: &[CandidatePair]) -> Vec<(usize, std::ops::Range<usize>)> {
    let mut out = Vec::new();
    let mut start = 0;
    while start < pairs.len() {
        let d = pairs[start].doc;
        let end = start + pairs[start..].iter().take_while(|p| p.doc == d).count();
        out.push((d, start..end));
        start = end;
    }
    out
}

/// Labelled candidate pairs for every event type of the schema.
///
/// With `typed`, only pairs whose entity labels match the type's two roles
/// are kept.
pub fn event_sets(corpus: &Corpus, typed: bool) -> Result<Vec<EventSet>, VecomError> {
    let mut all_pairs = Vec::new();
    let mut gold = Vec::with_capacity(corpus.documents.len());
    for (d, doc) in corpus.documents.iter().enumerate() {
        for s in 0..doc.document.sentences.len() {
            all_pairs.extend(gen_candidates(doc, d, s));
        }
        gold.push(usable_events(corpus, d));
    }
    let mut sets = Vec::new();
    for (ty, roles) in &corpus.schema.events {
        let pairs: Vec<CandidatePair> = all_pairs
            .iter()
            .filter(|p| !typed || typed_ok(corpus, p, roles))
            .cloned()
            .collect();
        let mut labels = Vec::with_capacity(pairs.len());
        for (d, range) in doc_ranges(&pairs) {
            labels.extend(label_pairs(&pairs[range], &gold[d], ty)?);
        }
        sets.push(EventSet {
            event_type: ty.clone(),
            roles: roles.clone(),
            pairs,
            labels,
        });
    }
    Ok(sets)
}

/// Argument embeddings of entities, keyed by argument type and entity.
#[derive(Clone, Debug, Default)]
pub struct EmbeddingCache {
    vectors: HashMap<(String, EntityKey), Arc<Vec<f64>>>,
}

impl EmbeddingCache {
    /// Embeds every entity in `keys` with every model in `models`.
    pub fn build(
        models: &BTreeMap<String, ArgumentModel>,
        windows: &WindowIndex,
        keys: &[EntityKey],
    ) -> Result<Self, PipelineError> {
        let mut ws = Vec::with_capacity(keys.len());
        for k in keys {
            let w = windows
                .get(k.0, &k.1)
                .ok_or_else(|| VecomError::Data(format!("no window for entity {}", k.1)))?;
            ws.push(&**w);
        }
        let per_model = models
            .par_iter()
            .map(|(t, m)| Ok((t.clone(), m.embed(&ws)?)))
            .collect::<Result<Vec<_>, crate::ndiff::NdError>>()?;
        let mut vectors = HashMap::new();
        for (t, embs) in per_model {
            for (k, v) in keys.iter().zip(embs) {
                vectors.insert((t.clone(), k.clone()), Arc::new(v));
            }
        }
        Ok(EmbeddingCache { vectors })
    }

    pub fn get(&self, arg_type: &str, doc: usize, id: &str) -> Option<&[f64]> {
        self.vectors
            .get(&(arg_type.to_string(), (doc, id.to_string())))
            .map(|v| v.as_slice())
    }

    /// Pair input for `pair` under `roles`.
    pub fn pair_input(&self, pair: &CandidatePair, roles: &EventRoles) -> Result<PairInput, VecomError> {
        let get = |ty: &str, id: &str| {
            self.get(ty, pair.doc, id).ok_or_else(|| {
                VecomError::Config(format!("no {ty} embedding for entity {id}"))
            })
        };
        Ok(PairInput::from_embeddings(
            get(&roles.source, &pair.first)?,
            get(&roles.target, &pair.first)?,
            get(&roles.target, &pair.second)?,
            get(&roles.source, &pair.second)?,
        ))
    }
}

/// Pair input built directly from the two argument models of `roles`.
pub fn pair_input(
    pair: &CandidatePair,
    roles: &EventRoles,
    models: &BTreeMap<String, ArgumentModel>,
    windows: &WindowIndex,
) -> Result<PairInput, PipelineError> {
    let model = |ty: &str| {
        models
            .get(ty)
            .ok_or_else(|| VecomError::Config(format!("missing argument model {ty}")))
    };
    let (s, t) = (model(&roles.source)?, model(&roles.target)?);
    let window = |id: &str| {
        windows
            .get(pair.doc, id)
            .ok_or_else(|| VecomError::Data(format!("no window for entity {id}")))
    };
    let (a, b) = (window(&pair.first)?, window(&pair.second)?);
    let sa = s.embed(&[a])?.remove(0);
    let ta = t.embed(&[a])?.remove(0);
    let tb = t.embed(&[b])?.remove(0);
    let sb = s.embed(&[b])?.remove(0);
    Ok(PairInput::from_embeddings(&sa, &ta, &tb, &sb))
}

/// Distinct entities referenced by `pairs`, sorted.
pub fn pair_entities<'a>(pairs: impl IntoIterator<Item = &'a CandidatePair>) -> Vec<EntityKey> {
    let mut keys: Vec<EntityKey> = pairs
        .into_iter()
        .flat_map(|p| [(p.doc, p.first.clone()), (p.doc, p.second.clone())])
        .collect();
    keys.sort();
    keys.dedup();
    keys
}

/// Trains the event model of `set` on the pairs selected by `indices`.
pub fn train_event_set(
    set: &EventSet,
    indices: &[usize],
    cache: &EmbeddingCache,
    hyper: &EventHyper,
    seed: u64,
    tag: &str,
) -> Result<EventTraining, PipelineError> {
    let samples = indices
        .iter()
        .map(|&i| Ok((cache.pair_input(&set.pairs[i], &set.roles)?, set.labels[i])))
        .collect::<Result<Vec<_>, VecomError>>()?;
    let mut rng = derived(seed, &format!("{tag}/events/{}", set.event_type), 0);
    Ok(train_event_model(
        &set.event_type,
        &set.roles.source,
        &set.roles.target,
        &samples,
        hyper,
        &mut rng,
    )?)
}

/// `(p_exists, p_forward)` for the pairs selected by `indices`.
pub fn score_pairs(
    model: &EventModel,
    set: &EventSet,
    indices: &[usize],
    cache: &EmbeddingCache,
) -> Result<Vec<(f64, f64)>, PipelineError> {
    let inputs = indices
        .iter()
        .map(|&i| cache.pair_input(&set.pairs[i], &set.roles))
        .collect::<Result<Vec<_>, _>>()?;
    let refs: Vec<&PairInput> = inputs.iter().collect();
    Ok(model.predict(&refs)?)
}

/// One line of the per-pair probability dump.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairScore {
    pub document: String,
    pub sentence: String,
    pub event_type: String,
    pub first: String,
    pub second: String,
    pub p_exists: f64,
    pub p_forward: f64,
}

/// TSV with header `document sentence event_type first second p_exists p_forward`.
pub fn pair_scores_tsv(rows: &[PairScore]) -> String {
    let mut s = String::from("document\tsentence\tevent_type\tfirst\tsecond\tp_exists\tp_forward\n");
    for r in rows {
        s.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{:.6}\t{:.6}\n",
            r.document, r.sentence, r.event_type, r.first, r.second, r.p_exists, r.p_forward
        ));
    }
    s
}

#[derive(Clone, Debug, Default)]
pub struct Prediction {
    /// Decoded events per document, numbered from `R1` within each document.
    pub events: Vec<Vec<Event>>,
    pub scores: Vec<PairScore>,
}

/// Scores every candidate pair of `corpus` and decodes events per type.
/// Event types without a model produce no events.
pub fn predict(
    corpus: &Corpus,
    windows: &WindowIndex,
    arg_models: &BTreeMap<String, ArgumentModel>,
    event_models: &BTreeMap<String, EventModel>,
    threshold: f64,
    typed: bool,
) -> Result<Prediction, PipelineError> {
    let sets = event_sets(corpus, typed)?;
    let keys = pair_entities(sets.iter().flat_map(|s| s.pairs.iter()));
    let cache = EmbeddingCache::build(arg_models, windows, &keys)?;
    let mut per_doc: Vec<Vec<Event>> = vec![Vec::new(); corpus.documents.len()];
    let mut scores = Vec::new();
    for set in &sets {
        let Some(model) = event_models.get(&set.event_type) else {
            log::warn!("no model for event type {}", set.event_type);
            continue;
        };
        let all: Vec<usize> = (0..set.pairs.len()).collect();
        let probs = score_pairs(model, set, &all, &cache)?;
        for (p, &(e, f)) in set.pairs.iter().zip(&probs) {
            let doc = &corpus.documents[p.doc].document;
            scores.push(PairScore {
                document: doc.id.clone(),
                sentence: doc.sentences[p.sentence].id.clone(),
                event_type: set.event_type.clone(),
                first: p.first.clone(),
                second: p.second.clone(),
                p_exists: e,
                p_forward: f,
            });
        }
        for (d, range) in doc_ranges(&set.pairs) {
            per_doc[d].extend(decode_events(
                &set.pairs[range.clone()],
                &probs[range],
                &set.event_type,
                threshold,
            ));
        }
    }
    for events in &mut per_doc {
        for (i, e) in events.iter_mut().enumerate() {
            e.id = format!("R{}", i + 1);
        }
    }
    Ok(Prediction {
        events: per_doc,
        scores,
    })
}
