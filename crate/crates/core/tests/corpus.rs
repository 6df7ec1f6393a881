mod common;

use std::collections::BTreeSet;

use evex::corpus::{parse_standoff, tokenize, write_standoff, Corpus, CorpusError, Event, TaskSchema};
use proptest::prelude::*;

use common::{bb, bgi, doc_index, fixture_dir};

#[test]
fn fixture_statistics() {
    let c = bgi();
    let s = c.stats();
    assert_eq!(s.documents, 3);
    assert_eq!(s.sentences, 5);
    assert_eq!(s.entities, 18);
    assert_eq!(s.events["Interaction"], 6);
    assert_eq!(s.events["PromoterOf"], 3);
    assert_eq!(s.events["ActionTarget"], 1);
    assert_eq!(s.cross_sentence_events, 1);
    assert_eq!(s.arguments["Agent"], 5);
    c.check_alignment().unwrap();

    let c = bb();
    let s = c.stats();
    assert_eq!((s.documents, s.sentences, s.entities), (4, 6, 13));
    assert_eq!(s.events["Lives_In"], 8);
    assert_eq!(s.cross_sentence_events, 2);
    assert_eq!(s.arguments["Bacteria"], 5);
    assert_eq!(s.arguments["Location"], 8);
    c.check_alignment().unwrap();
}

#[test]
fn gere_sentence_is_one_sentence_with_all_entities() {
    let c = bgi();
    let d = &c.documents[doc_index(&c, "PMID-GERE-S1")];
    assert_eq!(d.document.sentences.len(), 1);
    assert_eq!(d.sentence_entities(0).len(), 6);
    let t1 = d.entity("T1").unwrap();
    assert_eq!(t1.token_span.1 - t1.token_span.0 + 1, 4);
}

#[test]
fn case_study_tokens_align_with_entities() {
    let c = bgi();
    let d = &c.documents[doc_index(&c, "PMID-10629188-S5")];
    let toks: Vec<&str> = d.document.sentences[0].tokens.iter().map(|t| t.text.as_str()).collect();
    assert!(toks.contains(&"sigma(F)") && toks.contains(&"sigma(G)"));
    for e in d.entities.values() {
        assert_eq!(e.token_span.0, e.token_span.1, "{}", e.id);
        let tok = &d.document.sentences[0].tokens[e.token_span.0];
        assert_eq!(tok.span, e.span);
    }
    let t = tokenize("sigma(F) and sigma(G).");
    let t: Vec<&str> = t.iter().map(|t| t.text.as_str()).collect();
    assert_eq!(t, ["sigma(F)", "and", "sigma(G)", "."]);
}

#[test]
fn discontinuous_entity_takes_hull() {
    let c = bb();
    let d = &c.documents[doc_index(&c, "BB-train-0002")];
    let t4 = d.entity("T4").unwrap();
    assert_eq!(d.document.slice(t4.span), "alveolar macrophages");
    assert!(t4.roles.contains("Location"));
}

#[test]
fn empty_directory_is_an_error() {
    let dir = std::env::temp_dir().join(format!("evex-empty-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let err = Corpus::load_dir(&dir, &TaskSchema::bacteria_biotopes()).unwrap_err();
    assert!(matches!(err, CorpusError::Empty(_)));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn errors_name_the_file() {
    let dir = std::env::temp_dir().join(format!("evex-bad-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    std::fs::write(dir.join("d.txt"), "Alpha binds beta.").unwrap();
    std::fs::write(dir.join("d.a1"), "T1\tProtein 0 5\tAlpha\n").unwrap();
    std::fs::write(dir.join("d.a2"), "R1\tInteraction Agent:T1 Target:T7\n").unwrap();
    let err = Corpus::load_dir(&dir, &TaskSchema::bacteria_gene_interactions()).unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("d.txt") && msg.contains("T7") && msg.contains("line 1"), "{msg}");
    std::fs::remove_dir_all(&dir).unwrap();
}

fn edge_set(events: &[Event]) -> BTreeSet<(String, String, String)> {
    events
        .iter()
        .map(|e| (e.event_type.clone(), e.source.clone(), e.target.clone()))
        .collect()
}

#[test]
fn fixture_events_round_trip() {
    for c in [bgi(), bb()] {
        let dir = fixture_dir(if c.schema.name == "BB" { "bb" } else { "bgi" });
        for d in &c.documents {
            let id = &d.document.id;
            let a1 = std::fs::read_to_string(dir.join(format!("{id}.a1"))).unwrap();
            let written = write_standoff(&d.events, &c.schema).unwrap();
            let again = parse_standoff(id, &d.document.text, &a1, &written, &c.schema).unwrap();
            assert_eq!(edge_set(&again.events), edge_set(&d.events), "{id}");
        }
    }
}

proptest! {
    #[test]
    fn write_then_parse_preserves_typed_edges(
        picks in proptest::collection::vec((0usize..9, 0usize..6, 0usize..6), 0..20)
    ) {
        let c = bgi();
        let d = &c.documents[doc_index(&c, "PMID-GERE-S1")];
        let a1 = std::fs::read_to_string(fixture_dir("bgi").join("PMID-GERE-S1.a1")).unwrap();
        let types: Vec<&String> = c.schema.events.keys().collect();
        let events: Vec<Event> = picks
            .iter()
            .filter(|(_, s, t)| s != t)
            .map(|&(ty, s, t)| Event {
                id: String::new(),
                event_type: types[ty].clone(),
                source: format!("T{}", s + 1),
                target: format!("T{}", t + 1),
            })
            .collect();
        let text = write_standoff(&events, &c.schema).unwrap();
        let parsed = parse_standoff("x", &d.document.text, &a1, &text, &c.schema).unwrap();
        prop_assert_eq!(edge_set(&parsed.events), edge_set(&events));
    }

    #[test]
    fn tokens_match_text(text in "[a-zA-Z0-9 .,()_\\-;:é]{0,60}") {
        let chars: Vec<char> = text.chars().collect();
        let mut last = 0;
        for t in tokenize(&text) {
            prop_assert!(t.span.start >= last);
            let s: String = chars[t.span.start..t.span.end].iter().collect();
            prop_assert_eq!(&s, &t.text);
            prop_assert!(!t.text.chars().any(char::is_whitespace));
            last = t.span.end;
        }
    }
}
