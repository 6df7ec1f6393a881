//! Generated corpora with planted lexical patterns.
//!
//! `X activates Y` and `Y is activated by X` yield an `Interaction` event
//! `X -> Y`; other connectives yield none. Protein names are fresh random
//! strings, so only the surrounding words carry the signal.

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{parse_standoff, Corpus, CorpusError, TaskSchema};
use crate::rng::seeded;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub sentences: usize,
    pub sentences_per_document: usize,
    /// Chance that a sentence gets a third, unrelated protein.
    pub distractor_rate: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            sentences: 500,
            sentences_per_document: 5,
            distractor_rate: 0.3,
            seed: 7,
        }
    }
}

pub fn schema() -> TaskSchema {
    TaskSchema::new("SYN", [("Interaction", "Agent", "Target")])
}

/// Raw files of one generated document.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthDocument {
    pub id: String,
    pub text: String,
    pub a1: String,
    pub a2: String,
}

const OPENERS: &[&str] = &["", "In these cells,", "Surprisingly,", "We found that", "Under stress,", "As expected,"];
const CLOSERS: &[&str] = &["", "in vitro", "during sporulation", "in vivo", "at low temperature"];
const NEUTRAL: &[&str] = &["and", "or", "binds near", "is unlike"];

fn protein<R: Rng + ?Sized>(rng: &mut R) -> String {
    let mut s = String::new();
    s.push(rng.random_range(b'A'..=b'Z') as char);
    for _ in 0..rng.random_range(2..4) {
        s.push(rng.random_range(b'a'..=b'z') as char);
    }
    s.push(rng.random_range(b'0'..=b'9') as char);
    s
}

struct Builder {
    text: String,
    chars: usize,
    a1: String,
    a2: String,
    entities: usize,
    events: usize,
}

impl Builder {
    fn word(&mut self, w: &str) {
        if !self.text.is_empty() && !self.text.ends_with(' ') {
            self.text.push(' ');
            self.chars += 1;
        }
        self.text.push_str(w);
        self.chars += w.chars().count();
    }

    fn entity(&mut self, name: &str) -> String {
        self.word("");
        self.entities += 1;
        let id = format!("T{}", self.entities);
        let start = self.chars;
        self.text.push_str(name);
        self.chars += name.chars().count();
        let _ = writeln!(self.a1, "{id}\tProtein {start} {}\t{name}", self.chars);
        id
    }

    fn event(&mut self, agent: &str, target: &str) {
        self.events += 1;
        let _ = writeln!(self.a2, "R{}\tInteraction Agent:{agent} Target:{target}", self.events);
    }
}

/// Generates the raw files of a planted-pattern corpus.
pub fn generate(cfg: &SynthConfig) -> Vec<SynthDocument> {
    let mut rng = seeded(cfg.seed);
    let per_doc = cfg.sentences_per_document.max(1);
    let mut docs = Vec::new();
    let mut made = 0;
    while made < cfg.sentences {
        let mut b = Builder {
            text: String::new(),
            chars: 0,
            a1: String::new(),
            a2: String::new(),
            entities: 0,
            events: 0,
        };
        for _ in 0..per_doc.min(cfg.sentences - made) {
            let opener = *OPENERS.choose(&mut rng).expect("openers");
            if !opener.is_empty() {
                b.word(opener);
            }
            let (x, y) = (protein(&mut rng), protein(&mut rng));
            match rng.random_range(0..20) {
                0..=7 => {
                    let a = b.entity(&x);
                    b.word("activates");
                    let t = b.entity(&y);
                    b.event(&a, &t);
                }
                8..=12 => {
                    let t = b.entity(&y);
                    b.word("is activated by");
                    let a = b.entity(&x);
                    b.event(&a, &t);
                }
                _ => {
                    b.entity(&x);
                    b.word(NEUTRAL.choose(&mut rng).expect("neutral"));
                    b.entity(&y);
                }
            }
            if rng.random_bool(cfg.distractor_rate) {
                b.word("but not");
                b.entity(&protein(&mut rng));
            }
            let closer = *CLOSERS.choose(&mut rng).expect("closers");
            if !closer.is_empty() {
                b.word(closer);
            }
            b.text.push('.');
            b.chars += 1;
            b.text.push(' ');
            b.chars += 1;
            made += 1;
        }
        // sentence openers are capitalised; entity names already are
        let text = b.text.trim_end().to_string();
        let text = capitalise_sentences(&text);
        docs.push(SynthDocument {
            id: format!("SYN-{:04}", docs.len() + 1),
            text,
            a1: b.a1,
            a2: b.a2,
        });
    }
    docs
}

fn capitalise_sentences(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut upper = true;
    for c in text.chars() {
        if upper && c.is_alphabetic() {
            out.extend(c.to_uppercase());
            upper = false;
        } else {
            out.push(c);
        }
        if c == '.' {
            upper = true;
        }
    }
    out
}

/// Parses generated files into a corpus.
pub fn corpus(docs: &[SynthDocument]) -> Result<Corpus, CorpusError> {
    let schema = schema();
    let documents = docs
        .iter()
        .map(|d| parse_standoff(&d.id, &d.text, &d.a1, &d.a2, &schema))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Corpus::new(schema, documents))
}

/// Writes `<id>.txt`, `<id>.a1` and `<id>.a2` for each document.
pub fn write_dir(docs: &[SynthDocument], dir: &Path) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    for d in docs {
        std::fs::write(dir.join(format!("{}.txt", d.id)), &d.text)?;
        std::fs::write(dir.join(format!("{}.a1", d.id)), &d.a1)?;
        std::fs::write(dir.join(format!("{}.a2", d.id)), &d.a2)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generated_corpus_parses_with_one_sentence_per_pattern() {
        let cfg = SynthConfig {
            sentences: 40,
            ..SynthConfig::default()
        };
        let docs = generate(&cfg);
        assert_eq!(docs.len(), 8);
        let c = corpus(&docs).unwrap();
        let stats = c.stats();
        assert_eq!(stats.sentences, 40);
        assert_eq!(stats.cross_sentence_events, 0);
        assert!(stats.events["Interaction"] > 10);
        c.check_alignment().unwrap();
        assert_eq!(generate(&cfg), docs);
    }
}
