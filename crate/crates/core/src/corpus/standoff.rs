use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use super::text::{split_sentence_chars, tokenize_chars, Span};
use super::{align_span, AnnotatedDocument, CorpusError, Document, Entity, Event, Sentence, TaskSchema};

struct RawEntity {
    id: String,
    label: String,
    fragments: Vec<Span>,
    surface: String,
    line: usize,
}

fn parse_entity_line(line: &str, line_no: usize) -> Result<RawEntity, CorpusError> {
    let err = |message: String| CorpusError::Parse {
        line: line_no,
        message,
    };
    let mut cols = line.splitn(3, '\t');
    let id = cols.next().unwrap_or_default();
    let body = cols
        .next()
        .ok_or_else(|| err(format!("entity {} lacks a type/offset column", id)))?;
    let surface = cols.next().unwrap_or_default().to_string();
    let (label, offsets) = body
        .split_once(' ')
        .ok_or_else(|| err(format!("entity {} lacks offsets", id)))?;
    let mut fragments = Vec::new();
    for frag in offsets.split(';') {
        let mut nums = frag.split_whitespace();
        let parse = |s: Option<&str>| -> Result<usize, CorpusError> {
            s.and_then(|v| v.parse().ok())
                .ok_or_else(|| err(format!("bad offsets {:?} for {}", frag, id)))
        };
        let start = parse(nums.next())?;
        let end = parse(nums.next())?;
        if nums.next().is_some() || end <= start {
            return Err(err(format!("bad offsets {:?} for {}", frag, id)));
        }
        fragments.push(Span::new(start, end));
    }
    Ok(RawEntity {
        id: id.to_string(),
        label: label.to_string(),
        fragments,
        surface,
        line: line_no,
    })
}

struct RawEvent {
    id: String,
    event_type: String,
    args: Vec<(String, String)>,
    line: usize,
}

fn parse_event_line(line: &str, line_no: usize) -> Result<RawEvent, CorpusError> {
    let err = |message: String| CorpusError::Parse {
        line: line_no,
        message,
    };
    let (id, body) = line
        .split_once('\t')
        .ok_or_else(|| err("relation line lacks a tab".into()))?;
    let mut parts = body.split_whitespace();
    let head = parts
        .next()
        .ok_or_else(|| err(format!("{} has no type", id)))?;
    // `Type:Trigger` heads carry a trigger id we do not use
    let event_type = head.split(':').next().unwrap_or(head).to_string();
    let mut args = Vec::new();
    for a in parts {
        let (role, target) = a
            .split_once(':')
            .ok_or_else(|| err(format!("argument {:?} is not Role:Id", a)))?;
        args.push((role.to_string(), target.to_string()));
    }
    if args.len() != 2 {
        return Err(err(format!("{} has {} arguments, expected 2", id, args.len())));
    }
    Ok(RawEvent {
        id: id.to_string(),
        event_type,
        args,
        line: line_no,
    })
}

/// Strips the trailing digits of a role name (`Theme2` -> `Theme`).
fn base_role(role: &str) -> &str {
    role.trim_end_matches(|c: char| c.is_ascii_digit())
}

/// Parses one document from its text and annotation files.
///
/// `T` lines (from either file) are entities; `R` and `E` lines with two
/// `Role:Id` arguments are events. Lines of other kinds (`*`, `A`, `N`, `#`)
/// and events of types outside `schema` are skipped. Discontinuous entity
/// spans are replaced by their covering hull.
pub fn parse_standoff(
    doc_id: &str,
    text: &str,
    entity_lines: &str,
    event_lines: &str,
    schema: &TaskSchema,
) -> Result<AnnotatedDocument, CorpusError> {
    let chars: Vec<char> = text.chars().collect();
    let mut raw_entities = Vec::new();
    let mut raw_events = Vec::new();
    let mut skipped = 0usize;

    // line numbers in the event file continue after the entity file's
    // lines only for messages; each file is numbered from 1
    for (file_lines, is_event_file) in [(entity_lines, false), (event_lines, true)] {
        for (n, line) in file_lines.lines().enumerate() {
            let line_no = n + 1;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            match line.chars().next() {
                Some('T') => raw_entities.push(parse_entity_line(line, line_no)?),
                Some('R') | Some('E') if is_event_file => {
                    raw_events.push(parse_event_line(line, line_no)?)
                }
                Some('*') | Some('A') | Some('M') | Some('N') | Some('#') => skipped += 1,
                _ => {
                    return Err(CorpusError::Parse {
                        line: line_no,
                        message: format!("unrecognised annotation line {:?}", line),
                    })
                }
            }
        }
    }
    if skipped > 0 {
        log::debug!("{}: skipped {} non-entity/non-relation lines", doc_id, skipped);
    }

    let mut hulls = Vec::with_capacity(raw_entities.len());
    for e in &raw_entities {
        let hull = e.fragments.iter().skip(1).fold(e.fragments[0], |h, f| h.hull(f));
        if hull.end > chars.len() {
            return Err(CorpusError::Alignment {
                entity: e.id.clone(),
                message: format!("offset {} beyond text length {}", hull.end, chars.len()),
            });
        }
        let actual = e
            .fragments
            .iter()
            .map(|f| chars[f.start..f.end].iter().collect::<String>())
            .collect::<Vec<_>>()
            .join(" ");
        let normalise = |s: &str| s.split_whitespace().collect::<Vec<_>>().join(" ");
        if !e.surface.is_empty() && normalise(&actual) != normalise(&e.surface) {
            return Err(CorpusError::Alignment {
                entity: e.id.clone(),
                message: format!(
                    "line {}: surface {:?} does not match text {:?}",
                    e.line, e.surface, actual
                ),
            });
        }
        hulls.push(hull);
    }

    let sentence_spans = split_sentence_chars(&chars, &hulls);
    let sentences: Vec<Sentence> = sentence_spans
        .iter()
        .enumerate()
        .map(|(i, span)| Sentence {
            id: format!("{}-S{}", doc_id, i + 1),
            span: *span,
            tokens: tokenize_chars(&chars, span.start, span.end),
        })
        .collect();

    let mut entities = BTreeMap::new();
    for (raw, hull) in raw_entities.into_iter().zip(hulls) {
        let sentence_index = sentences
            .iter()
            .position(|s| s.span.overlaps(&hull))
            .ok_or_else(|| CorpusError::Alignment {
                entity: raw.id.clone(),
                message: "span lies outside every sentence".into(),
            })?;
        let (token_span, partial) =
            align_span(&sentences[sentence_index], hull).map_err(|message| {
                CorpusError::Alignment {
                    entity: raw.id.clone(),
                    message,
                }
            })?;
        if partial {
            log::warn!("{}: entity {} cuts through a token", doc_id, raw.id);
        }
        let entity = Entity {
            id: raw.id.clone(),
            label: raw.label,
            span: hull,
            sentence_index,
            token_span,
            partial_token: partial,
            roles: BTreeSet::new(),
        };
        if entities.insert(raw.id.clone(), entity).is_some() {
            return Err(CorpusError::Integrity {
                line: raw.line,
                message: format!("duplicate entity id {}", raw.id),
            });
        }
    }

    let mut events = Vec::new();
    for raw in raw_events {
        let Some(roles) = schema.roles(&raw.event_type) else {
            log::debug!("{}: ignoring {} of type {}", doc_id, raw.id, raw.event_type);
            continue;
        };
        for (_, id) in &raw.args {
            if !entities.contains_key(id) {
                return Err(CorpusError::Integrity {
                    line: raw.line,
                    message: format!("{} references unknown entity {}", raw.id, id),
                });
            }
        }
        let (a, b) = (&raw.args[0], &raw.args[1]);
        let source_first = if base_role(&a.0) == roles.source && base_role(&b.0) == roles.target {
            true
        } else if base_role(&b.0) == roles.source && base_role(&a.0) == roles.target {
            false
        } else {
            base_role(&b.0) != roles.source
        };
        let (source, target) = if source_first {
            (a.1.clone(), b.1.clone())
        } else {
            (b.1.clone(), a.1.clone())
        };
        if source == target {
            return Err(CorpusError::Integrity {
                line: raw.line,
                message: format!("{} links {} to itself", raw.id, source),
            });
        }
        entities
            .get_mut(&source)
            .expect("checked")
            .roles
            .insert(roles.source.clone());
        entities
            .get_mut(&target)
            .expect("checked")
            .roles
            .insert(roles.target.clone());
        events.push(Event {
            id: raw.id,
            event_type: raw.event_type,
            source,
            target,
        });
    }

    let doc = AnnotatedDocument {
        document: Document {
            id: doc_id.to_string(),
            text: text.to_string(),
            sentences,
        },
        entities,
        events,
    };
    let crossing = doc.events.iter().filter(|e| doc.is_cross_sentence(e)).count();
    if crossing > 0 {
        log::info!("{}: {} cross-sentence events kept but not used for training", doc_id, crossing);
    }
    Ok(doc)
}

/// Relation lines for `events`, numbered `R1, R2, …` in input order, with
/// role names taken from `schema`.
pub fn write_standoff(events: &[Event], schema: &TaskSchema) -> Result<String, CorpusError> {
    let mut out = String::new();
    for (i, e) in events.iter().enumerate() {
        let roles = schema
            .roles(&e.event_type)
            .ok_or_else(|| CorpusError::Schema(format!("unknown event type {}", e.event_type)))?;
        writeln!(
            out,
            "R{}\t{} {}:{} {}:{}",
            i + 1,
            e.event_type,
            roles.source,
            e.source,
            roles.target,
            e.target
        )
        .expect("writing to a String");
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const GERE: &str = "We now report that the purified product of gerE (GerE) is a DNA-binding protein that adheres to the promoters for cotB and cotC.";

    fn gere_a1() -> String {
        let find = |s: &str| GERE.find(s).unwrap();
        [
            ("T1", "Protein", "purified product of gerE"),
            ("T2", "Protein", "GerE"),
            ("T3", "ProteinFamily", "DNA-binding protein"),
            ("T4", "Promoter", "promoters"),
            ("T5", "Gene", "cotB"),
            ("T6", "Gene", "cotC"),
        ]
        .iter()
        .map(|(id, label, s)| {
            // "GerE" occurs inside "(GerE)" after "gerE"
            let start = if *s == "GerE" { GERE.find("(GerE)").unwrap() + 1 } else { find(s) };
            format!("{}\t{} {} {}\t{}\n", id, label, start, start + s.len(), s)
        })
        .collect()
    }

    const GERE_A2: &str = "R1\tPromoterOf Promoter:T4 Gene:T5\nR2\tPromoterOf Promoter:T4 Gene:T6\nR3\tInteraction Agent:T2 Target:T5\nR4\tInteraction Agent:T2 Target:T6\n";

    #[test]
    fn gere_example_parses_six_entities_four_events() {
        let schema = TaskSchema::bacteria_gene_interactions();
        let doc = parse_standoff("gere", GERE, &gere_a1(), GERE_A2, &schema).unwrap();
        assert_eq!(doc.entities.len(), 6);
        assert_eq!(doc.events.len(), 4);
        assert_eq!(doc.document.sentences.len(), 1);
        assert_eq!(doc.entities["T1"].token_span.1 - doc.entities["T1"].token_span.0 + 1, 4);
        assert!(doc.entities["T4"].roles.contains("Promoter"));
        assert!(doc.entities["T5"].roles.contains("Gene"));
        assert!(doc.entities["T5"].roles.contains("Target"));
        assert_eq!(doc.events[0].source, "T4");
    }

    #[test]
    fn empty_event_file() {
        let schema = TaskSchema::bacteria_gene_interactions();
        let doc = parse_standoff("gere", GERE, &gere_a1(), "", &schema).unwrap();
        assert!(doc.events.is_empty());
    }

    #[test]
    fn dangling_reference_names_the_entity() {
        let schema = TaskSchema::bacteria_biotopes();
        let text = "Listeria lives in cheese.";
        let a1 = "T1\tBacteria 0 8\tListeria\nT2\tHabitat 18 24\tcheese\n";
        let err = parse_standoff("d", text, a1, "R1\tLives_In Bacteria:T9 Location:T2\n", &schema)
            .unwrap_err();
        match err {
            CorpusError::Integrity { line, message } => {
                assert_eq!(line, 1);
                assert!(message.contains("T9"));
            }
            other => panic!("unexpected {:?}", other),
        }
    }

    #[test]
    fn malformed_lines_and_surface_mismatch() {
        let schema = TaskSchema::bacteria_biotopes();
        let text = "Listeria lives in cheese.";
        let err = parse_standoff("d", text, "T1\tBacteria 0 x\tListeria\n", "", &schema).unwrap_err();
        assert!(matches!(err, CorpusError::Parse { line: 1, .. }));
        let err = parse_standoff("d", text, "T1\tBacteria 0 8\tSalmonel\n", "", &schema).unwrap_err();
        assert!(matches!(err, CorpusError::Alignment { .. }));
        let err = parse_standoff("d", text, "T1\tBacteria 0 8\tListeria\n", "R1 Lives_In\n", &schema)
            .unwrap_err();
        assert!(matches!(err, CorpusError::Parse { .. }));
    }

    #[test]
    fn discontinuous_span_takes_hull_and_roles_may_be_reversed() {
        let schema = TaskSchema::bacteria_biotopes();
        let text = "Listeria lives in soft and hard cheese.";
        let a1 = "T1\tBacteria 0 8\tListeria\nT2\tHabitat 18 22;32 38\tsoft cheese\n";
        let doc = parse_standoff("d", text, a1, "E1\tLives_In Location:T2 Bacteria:T1\n", &schema)
            .unwrap();
        assert_eq!(doc.entities["T2"].span, Span::new(18, 38));
        assert_eq!(doc.events[0].source, "T1");
        assert_eq!(doc.events[0].target, "T2");
    }

    #[test]
    fn write_lines() {
        let schema = TaskSchema::bacteria_gene_interactions();
        let bb = TaskSchema::bacteria_biotopes();
        let ev = |t: &str, s: &str, g: &str| Event {
            id: String::new(),
            event_type: t.into(),
            source: s.into(),
            target: g.into(),
        };
        assert_eq!(
            write_standoff(&[ev("Lives_In", "T3", "T5")], &bb).unwrap(),
            "R1\tLives_In Bacteria:T3 Location:T5\n"
        );
        assert_eq!(write_standoff(&[], &bb).unwrap(), "");
        let out = write_standoff(
            &[ev("ActionTarget", "T1", "T2"), ev("ActionTarget", "T3", "T2")],
            &schema,
        )
        .unwrap();
        assert_eq!(
            out,
            "R1\tActionTarget Action:T1 Target:T2\nR2\tActionTarget Action:T3 Target:T2\n"
        );
        assert!(matches!(
            write_standoff(&[ev("Nope", "T1", "T2")], &schema),
            Err(CorpusError::Schema(_))
        ));
    }
}
