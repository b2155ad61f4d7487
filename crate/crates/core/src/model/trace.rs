use super::{Config, ModelError, Protocol, Rule, StateIx};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Event {
    Step(Rule),
    Snipe(StateIx),
}

/// A finite execution prefix, possibly with snipes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trace {
    pub initial: Config,
    pub events: Vec<Event>,
    pub final_config: Config,
    pub snipes_used: usize,
}

impl Trace {
    pub fn start(initial: Config) -> Self {
        Trace {
            final_config: initial.clone(),
            initial,
            events: Vec::new(),
            snipes_used: 0,
        }
    }

    /// Applies `event` to the current final configuration.
    pub fn push(&mut self, p: &Protocol, event: Event) -> Result<(), ModelError> {
        self.final_config = apply_event(p, &self.final_config, event)?;
        if matches!(event, Event::Snipe(_)) {
            self.snipes_used += 1;
        }
        self.events.push(event);
        Ok(())
    }

    /// Re-executes the events from the initial configuration.
    pub fn replay(&self, p: &Protocol) -> Result<Config, ModelError> {
        self.events
            .iter()
            .try_fold(self.initial.clone(), |c, &e| apply_event(p, &c, e))
    }

    /// Replays and checks that the recorded final configuration and snipe
    /// count match.
    pub fn validate(&self, p: &Protocol) -> Result<(), ModelError> {
        let end = self.replay(p)?;
        let snipes = self
            .events
            .iter()
            .filter(|e| matches!(e, Event::Snipe(_)))
            .count();
        if end != self.final_config || snipes != self.snipes_used {
            return Err(ModelError::TraceMismatch);
        }
        Ok(())
    }
}

pub fn apply_event(p: &Protocol, c: &Config, event: Event) -> Result<Config, ModelError> {
    match event {
        Event::Step(rule) => p.apply_step(c, &rule),
        Event::Snipe(q) => c.snipe(q),
    }
}
