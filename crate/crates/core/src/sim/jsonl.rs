use std::io::{self, Write};

use serde_json::json;

use super::{RunReport, TimedEvent};
use crate::model::{apply_event, Event, Protocol};

/// One JSON object per timeline entry:
/// `{"step", "kind": "step"|"snipe"|"silent-skipped", "pre", "post", "config"}`.
/// `config` is the configuration after the entry.
pub fn write_jsonl(p: &Protocol, report: &RunReport, mut out: impl Write) -> io::Result<()> {
    let ids = |pair: [crate::model::StateIx; 2]| [p.id(pair[0]).as_str(), p.id(pair[1]).as_str()];
    let mut config = report.trace.initial.clone();
    for entry in &report.timeline {
        let line = match *entry {
            TimedEvent::Step { step, rule, .. } => {
                config = apply_event(p, &config, Event::Step(rule)).map_err(io::Error::other)?;
                json!({
                    "step": step,
                    "kind": "step",
                    "pre": ids(rule.pre),
                    "post": ids(rule.post),
                    "config": p.config_to_doc(&config),
                })
            }
            TimedEvent::Snipe { step, state, .. } => {
                config = apply_event(p, &config, Event::Snipe(state)).map_err(io::Error::other)?;
                json!({
                    "step": step,
                    "kind": "snipe",
                    "pre": [p.id(state).as_str()],
                    "post": [],
                    "config": p.config_to_doc(&config),
                })
            }
            TimedEvent::Silent { step, pair } => json!({
                "step": step,
                "kind": "silent-skipped",
                "pre": ids(pair),
                "post": ids(pair),
                "config": p.config_to_doc(&config),
            }),
        };
        writeln!(out, "{line}")?;
    }
    Ok(())
}
