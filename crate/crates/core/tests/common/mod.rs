#![allow(dead_code)]

use std::path::PathBuf;

use evex::corpus::{Corpus, TaskSchema};

pub fn fixture_dir(task: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(task)
}

pub fn bgi() -> Corpus {
    Corpus::load_dir(&fixture_dir("bgi"), &TaskSchema::bacteria_gene_interactions()).unwrap()
}

pub fn bb() -> Corpus {
    Corpus::load_dir(&fixture_dir("bb"), &TaskSchema::bacteria_biotopes()).unwrap()
}

/// Index of the document with id `id`.
pub fn doc_index(corpus: &Corpus, id: &str) -> usize {
    corpus.documents.iter().position(|d| d.document.id == id).unwrap()
}
