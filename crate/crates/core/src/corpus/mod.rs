//! Standoff-annotated corpora: raw text with `.a1` entity and `.a2` relation
//! files, sentence splitting, tokenization and entity-to-token alignment.

mod schema;
mod standoff;
mod text;

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use schema::{EventRoles, TaskSchema};
pub use standoff::{parse_standoff, write_standoff};
pub use text::{split_sentences, tokenize, Span, Token};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: {message}")]
    Integrity { line: usize, message: String },
    #[error("entity {entity}: {message}")]
    Alignment { entity: String, message: String },
    #[error("schema: {0}")]
    Schema(String),
    #[error("{path}: {source}")]
    InFile {
        path: PathBuf,
        #[source]
        source: Box<CorpusError>,
    },
    #[error("no documents found in {0}")]
    Empty(PathBuf),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CorpusError {
    fn in_file(self, path: &Path) -> Self {
        CorpusError::InFile {
            path: path.to_path_buf(),
            source: Box::new(self),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sentence {
    pub id: String,
    pub span: Span,
    pub tokens: Vec<Token>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
    pub sentences: Vec<Sentence>,
}

impl Document {
    /// Substring at a character span.
    pub fn slice(&self, span: Span) -> String {
        self.text
            .chars()
            .skip(span.start)
            .take(span.end.saturating_sub(span.start))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Entity {
    pub id: String,
    pub label: String,
    /// Covering hull of the annotated fragments.
    pub span: Span,
    pub sentence_index: usize,
    /// Inclusive token range within the sentence.
    pub token_span: (usize, usize),
    /// Set when the span cuts through a token.
    pub partial_token: bool,
    /// Argument roles this entity plays in gold events.
    pub roles: BTreeSet<String>,
}

impl Entity {
    /// Whether this entity is a positive example for argument type `arg`:
    /// it fills that role in some gold event, or its own label is `arg`.
    pub fn has_argument_type(&self, arg: &str) -> bool {
        self.label == arg || self.roles.contains(arg)
    }

    /// Token index used as the window anchor (last token of the span).
    pub fn anchor(&self) -> usize {
        self.token_span.1
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Event {
    pub id: String,
    pub event_type: String,
    pub source: String,
    pub target: String,
}

/// One document with its entities and events, fully cross-linked.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedDocument {
    pub document: Document,
    pub entities: BTreeMap<String, Entity>,
    pub events: Vec<Event>,
}

impl AnnotatedDocument {
    pub fn entity(&self, id: &str) -> Option<&Entity> {
        self.entities.get(id)
    }

    /// Entities of sentence `index`, in text order.
    pub fn sentence_entities(&self, index: usize) -> Vec<&Entity> {
        let mut ents: Vec<&Entity> = self
            .entities
            .values()
            .filter(|e| e.sentence_index == index)
            .collect();
        ents.sort_by(|a, b| (a.span, &a.id).cmp(&(b.span, &b.id)));
        ents
    }

    pub fn is_cross_sentence(&self, event: &Event) -> bool {
        match (self.entity(&event.source), self.entity(&event.target)) {
            (Some(s), Some(t)) => s.sentence_index != t.sentence_index,
            _ => true,
        }
    }

    /// Events whose arguments share a sentence.
    pub fn intra_sentence_events(&self) -> impl Iterator<Item = &Event> {
        self.events.iter().filter(|e| !self.is_cross_sentence(e))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    pub schema: TaskSchema,
    pub documents: Vec<AnnotatedDocument>,
}

/// Entity and event counts laid out per type.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub task: String,
    pub documents: usize,
    pub sentences: usize,
    pub tokens: usize,
    pub entities: usize,
    pub entity_labels: BTreeMap<String, usize>,
    /// Distinct entities per argument type.
    pub arguments: BTreeMap<String, usize>,
    pub events: BTreeMap<String, usize>,
    pub cross_sentence_events: usize,
    pub partial_token_entities: usize,
}

impl Corpus {
    pub fn new(schema: TaskSchema, documents: Vec<AnnotatedDocument>) -> Self {
        Corpus { schema, documents }
    }

    /// Reads every `<stem>.txt` in `dir` with its `<stem>.a1` and optional
    /// `<stem>.a2`. Documents are parsed in parallel and kept in file-name order.
    pub fn load_dir(dir: &Path, schema: &TaskSchema) -> Result<Self, CorpusError> {
        let mut stems: Vec<PathBuf> = std::fs::read_dir(dir)
            .map_err(|e| CorpusError::from(e).in_file(dir))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "txt"))
            .collect();
        stems.sort();
        if stems.is_empty() {
            return Err(CorpusError::Empty(dir.to_path_buf()));
        }
        let documents = stems
            .par_iter()
            .map(|txt| {
                let read_opt = |ext: &str| -> Result<String, CorpusError> {
                    let p = txt.with_extension(ext);
                    if p.exists() {
                        std::fs::read_to_string(&p).map_err(|e| CorpusError::from(e).in_file(&p))
                    } else {
                        Ok(String::new())
                    }
                };
                let text =
                    std::fs::read_to_string(txt).map_err(|e| CorpusError::from(e).in_file(txt))?;
                let a1 = read_opt("a1")?;
                let a2 = read_opt("a2")?;
                let id = txt
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default();
                parse_standoff(&id, &text, &a1, &a2, schema).map_err(|e| e.in_file(txt))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Corpus::new(schema.clone(), documents))
    }

    pub fn stats(&self) -> CorpusStats {
        let mut s = CorpusStats {
            task: self.schema.name.clone(),
            documents: self.documents.len(),
            sentences: 0,
            tokens: 0,
            entities: 0,
            entity_labels: BTreeMap::new(),
            arguments: self
                .schema
                .argument_types()
                .into_iter()
                .map(|a| (a, 0))
                .collect(),
            events: self.schema.events.keys().map(|k| (k.clone(), 0)).collect(),
            cross_sentence_events: 0,
            partial_token_entities: 0,
        };
        for doc in &self.documents {
            s.sentences += doc.document.sentences.len();
            s.tokens += doc.document.sentences.iter().map(|x| x.tokens.len()).sum::<usize>();
            s.entities += doc.entities.len();
            for e in doc.entities.values() {
                *s.entity_labels.entry(e.label.clone()).or_default() += 1;
                for (arg, count) in s.arguments.iter_mut() {
                    if e.has_argument_type(arg) {
                        *count += 1;
                    }
                }
                s.partial_token_entities += usize::from(e.partial_token);
            }
            for ev in &doc.events {
                *s.events.entry(ev.event_type.clone()).or_default() += 1;
                s.cross_sentence_events += usize::from(doc.is_cross_sentence(ev));
            }
        }
        s
    }

    /// Every Token.text equals the document substring at its span, and every
    /// entity's tokens cover its span.
    pub fn check_alignment(&self) -> Result<(), CorpusError> {
        for doc in &self.documents {
            let chars: Vec<char> = doc.document.text.chars().collect();
            for sent in &doc.document.sentences {
                for tok in &sent.tokens {
                    let s: String = chars[tok.span.start..tok.span.end].iter().collect();
                    if s != tok.text {
                        return Err(CorpusError::Alignment {
                            entity: format!("{}:{}", doc.document.id, tok.index),
                            message: format!("token {:?} != text {:?}", tok.text, s),
                        });
                    }
                }
            }
            for e in doc.entities.values() {
                let sent = &doc.document.sentences[e.sentence_index];
                let covered = sent.tokens[e.token_span.0]
                    .span
                    .hull(&sent.tokens[e.token_span.1].span);
                if !covered.contains(&e.span) {
                    return Err(CorpusError::Alignment {
                        entity: e.id.clone(),
                        message: "tokens do not cover the entity span".into(),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Minimal inclusive token range covering `span`, and whether the span cuts
/// through a token.
pub fn align_span(sentence: &Sentence, span: Span) -> Result<((usize, usize), bool), String> {
    if !sentence.span.contains(&span) {
        return Err(format!(
            "span {}..{} crosses sentence {} boundary {}..{}",
            span.start, span.end, sentence.id, sentence.span.start, sentence.span.end
        ));
    }
    let hits: Vec<&Token> = sentence
        .tokens
        .iter()
        .filter(|t| t.span.overlaps(&span))
        .collect();
    let (first, last) = match (hits.first(), hits.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(format!("span {}..{} covers no token", span.start, span.end)),
    };
    let partial = first.span.start < span.start || last.span.end > span.end;
    Ok(((first.index, last.index), partial))
}

/// Fills `token_span` for entities lying in `sentence`.
pub fn align_entities(
    sentence: &Sentence,
    sentence_index: usize,
    entities: &mut [Entity],
) -> Result<(), CorpusError> {
    for e in entities.iter_mut() {
        let (range, partial) = align_span(sentence, e.span).map_err(|message| {
            CorpusError::Alignment {
                entity: e.id.clone(),
                message,
            }
        })?;
        e.sentence_index = sentence_index;
        e.token_span = range;
        e.partial_token = partial;
        if partial {
            log::warn!("entity {} cuts through a token", e.id);
        }
    }
    Ok(())
}
