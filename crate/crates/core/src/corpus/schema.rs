use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

/// Roles of a directed event type: `source -> target`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventRoles {
    pub source: String,
    pub target: String,
}

/// Event types of a task and the argument types they connect.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskSchema {
    pub name: String,
    pub events: BTreeMap<String, EventRoles>,
}

impl TaskSchema {
    pub fn new<'a>(name: &str, events: impl IntoIterator<Item = (&'a str, &'a str, &'a str)>) -> Self {
        TaskSchema {
            name: name.to_string(),
            events: events
                .into_iter()
                .map(|(ty, s, t)| {
                    (
                        ty.to_string(),
                        EventRoles {
                            source: s.to_string(),
                            target: t.to_string(),
                        },
                    )
                })
                .collect(),
        }
    }

    /// Bacteria Gene Interactions (2011): nine event types over eleven
    /// argument types.
    pub fn bacteria_gene_interactions() -> Self {
        TaskSchema::new(
            "BGI",
            [
                ("ActionTarget", "Action", "Target"),
                ("Interaction", "Agent", "Target"),
                ("PromoterDependence", "Promoter", "Protein"),
                ("PromoterOf", "Promoter", "Gene"),
                ("RegulonDependence", "Regulon", "Target"),
                ("RegulonMember", "Regulon", "Member"),
                ("SiteOf", "Site", "Entity"),
                ("TranscriptionBy", "Transcription", "Agent"),
                ("TranscriptionFrom", "Transcription", "Site"),
            ],
        )
    }

    /// Bacteria Biotopes (2016): a single `Lives_In` relation.
    pub fn bacteria_biotopes() -> Self {
        TaskSchema::new("BB", [("Lives_In", "Bacteria", "Location")])
    }

    pub fn builtin(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "bgi" => Some(Self::bacteria_gene_interactions()),
            "bb" => Some(Self::bacteria_biotopes()),
            _ => None,
        }
    }

    pub fn roles(&self, event_type: &str) -> Option<&EventRoles> {
        self.events.get(event_type)
    }

    /// Every argument type mentioned by some event type, sorted.
    pub fn argument_types(&self) -> BTreeSet<String> {
        self.events
            .values()
            .flat_map(|r| [r.source.clone(), r.target.clone()])
            .collect()
    }
}
