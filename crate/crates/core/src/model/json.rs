//! JSON documents for protocols, configurations and traces.
//!
//! State references are by id; pairs are written sorted.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{
    sorted_pair, Config, Event, ModelError, Output, Protocol, RawProtocol, Rule, StateInfo, Trace,
};

pub const SCHEMA_VERSION: u32 = 1;

fn schema_version() -> u32 {
    SCHEMA_VERSION
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolDoc {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    pub name: String,
    pub output_alphabet: Vec<Output>,
    pub states: Vec<StateDoc>,
    pub initial: BTreeMap<String, String>,
    pub transitions: Vec<TransitionDoc>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateDoc {
    pub id: String,
    pub output: Output,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<Value>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitionDoc {
    pub pre: [String; 2],
    pub post: [String; 2],
}

/// `{"<stateId>": count}`.
pub type ConfigDoc = BTreeMap<String, u64>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EventDoc {
    Step { pre: [String; 2], post: [String; 2] },
    Snipe { target: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceDoc {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    pub initial: ConfigDoc,
    pub events: Vec<EventDoc>,
    #[serde(rename = "final")]
    pub final_config: ConfigDoc,
    pub snipes_used: usize,
}

impl Protocol {
    pub fn to_doc(&self) -> ProtocolDoc {
        let name = |q| self.id(q).as_str().to_owned();
        ProtocolDoc {
            schema_version: SCHEMA_VERSION,
            name: self.name().to_owned(),
            output_alphabet: self.output_alphabet().to_vec(),
            states: self
                .states()
                .iter()
                .map(|st| StateDoc {
                    id: st.id.as_str().to_owned(),
                    output: st.output.clone(),
                    meta: st.meta.clone(),
                })
                .collect(),
            initial: self
                .initial()
                .iter()
                .map(|(v, &q)| (v.clone(), name(q)))
                .collect(),
            transitions: self
                .table()
                .into_iter()
                .map(|(pre, post)| TransitionDoc {
                    pre: [name(pre[0]), name(pre[1])],
                    post: [name(post[0]), name(post[1])],
                })
                .collect(),
        }
    }

    pub fn from_doc(doc: &ProtocolDoc) -> Result<Protocol, ModelError> {
        if doc.schema_version != SCHEMA_VERSION {
            return Err(ModelError::SchemaVersion(doc.schema_version));
        }
        let pos: BTreeMap<&str, usize> = doc
            .states
            .iter()
            .enumerate()
            .map(|(i, s)| (s.id.as_str(), i))
            .collect();
        let lookup = |id: &String| {
            pos.get(id.as_str())
                .copied()
                .ok_or_else(|| ModelError::UnknownState(id.clone()))
        };
        let raw = RawProtocol {
            name: doc.name.clone(),
            output_alphabet: Some(doc.output_alphabet.clone()),
            states: doc
                .states
                .iter()
                .map(|s| StateInfo {
                    id: super::StateId::new(s.id.clone()),
                    output: s.output.clone(),
                    meta: s.meta.clone(),
                })
                .collect(),
            initial: doc
                .initial
                .iter()
                .map(|(v, id)| Ok((v.clone(), lookup(id)?)))
                .collect::<Result<_, ModelError>>()?,
            transitions: doc
                .transitions
                .iter()
                .map(|t| {
                    Ok((
                        [lookup(&t.pre[0])?, lookup(&t.pre[1])?],
                        [lookup(&t.post[0])?, lookup(&t.post[1])?],
                    ))
                })
                .collect::<Result<_, ModelError>>()?,
        };
        Protocol::from_raw(raw)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("protocol serializes")
    }

    pub fn from_json(text: &str) -> Result<Protocol, ModelError> {
        let doc: ProtocolDoc =
            serde_json::from_str(text).map_err(|e| ModelError::Json(e.to_string()))?;
        Protocol::from_doc(&doc)
    }

    pub fn config_to_doc(&self, c: &Config) -> ConfigDoc {
        c.entries()
            .iter()
            .map(|&(q, n)| (self.id(q).as_str().to_owned(), n as u64))
            .collect()
    }

    pub fn config_from_doc(&self, doc: &ConfigDoc) -> Result<Config, ModelError> {
        let mut c = Config::new();
        for (id, &n) in doc {
            c.add(self.state(id)?, n);
        }
        Ok(c)
    }

    fn pair_names(&self, p: [super::StateIx; 2]) -> [String; 2] {
        [
            self.id(p[0]).as_str().to_owned(),
            self.id(p[1]).as_str().to_owned(),
        ]
    }

    pub fn event_to_doc(&self, e: &Event) -> EventDoc {
        match e {
            Event::Step(r) => EventDoc::Step {
                pre: self.pair_names(r.pre),
                post: self.pair_names(r.post),
            },
            Event::Snipe(q) => EventDoc::Snipe {
                target: self.id(*q).as_str().to_owned(),
            },
        }
    }

    pub fn event_from_doc(&self, doc: &EventDoc) -> Result<Event, ModelError> {
        Ok(match doc {
            EventDoc::Step { pre, post } => Event::Step(Rule {
                pre: sorted_pair([self.state(&pre[0])?, self.state(&pre[1])?]),
                post: sorted_pair([self.state(&post[0])?, self.state(&post[1])?]),
            }),
            EventDoc::Snipe { target } => Event::Snipe(self.state(target)?),
        })
    }
}

impl Trace {
    pub fn to_doc(&self, p: &Protocol) -> TraceDoc {
        TraceDoc {
            schema_version: SCHEMA_VERSION,
            initial: p.config_to_doc(&self.initial),
            events: self.events.iter().map(|e| p.event_to_doc(e)).collect(),
            final_config: p.config_to_doc(&self.final_config),
            snipes_used: self.snipes_used,
        }
    }

    /// Rebuilds a trace and checks that it replays to its recorded end.
    pub fn from_doc(p: &Protocol, doc: &TraceDoc) -> Result<Trace, ModelError> {
        let trace = Trace {
            initial: p.config_from_doc(&doc.initial)?,
            events: doc
                .events
                .iter()
                .map(|e| p.event_from_doc(e))
                .collect::<Result<_, _>>()?,
            final_config: p.config_from_doc(&doc.final_config)?,
            snipes_used: doc.snipes_used,
        };
        trace.validate(p)?;
        Ok(trace)
    }
}
