use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use super::ledger::meta_level;
use super::{Adversary, AgentLedger, AgentState, Scheduler, SimError, SnipeOrder, Target};
use crate::model::{Config, Event, Input, Output, Protocol, Rule, StateIx, Trace, SCHEMA_VERSION};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunOptions {
    pub max_steps: u64,
    /// Consecutive steps an unchanged consensus must survive.
    pub window: u64,
    /// Keep silent interactions in the timeline.
    pub record_silent: bool,
}

impl RunOptions {
    pub fn new(max_steps: u64, window: u64) -> Self {
        RunOptions {
            max_steps,
            window,
            record_silent: false,
        }
    }
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions::new(100_000, 1_000)
    }
}

/// Heuristic outcome. Stability is only certified by the verifier.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RunVerdict {
    ConvergedTo { output: Output, at_step: u64 },
    NoConsensusWithinBudget,
}

/// One timeline entry. `Step` carries the interacting agents; `Silent`
/// entries appear only with [`RunOptions::record_silent`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TimedEvent {
    Step {
        step: u64,
        rule: Rule,
        agents: [usize; 2],
    },
    Snipe {
        step: u64,
        state: StateIx,
        agent: usize,
    },
    Silent {
        step: u64,
        pair: [StateIx; 2],
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SkippedSnipe {
    pub order: SnipeOrder,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunReport {
    pub trace: Trace,
    pub timeline: Vec<TimedEvent>,
    pub verdict: RunVerdict,
    pub window_used: u64,
    /// Interactions performed, silent ones included.
    pub steps: u64,
    pub snipes_fired: usize,
    pub skipped: Vec<SkippedSnipe>,
}

impl RunReport {
    pub fn converged_to(&self) -> Option<&Output> {
        match &self.verdict {
            RunVerdict::ConvergedTo { output, .. } => Some(output),
            RunVerdict::NoConsensusWithinBudget => None,
        }
    }

    pub fn to_json(&self, p: &Protocol) -> Value {
        let verdict = match &self.verdict {
            RunVerdict::ConvergedTo { output, at_step } => {
                json!({ "kind": "converged_to", "output": output, "at_step": at_step })
            }
            RunVerdict::NoConsensusWithinBudget => json!({ "kind": "no_consensus_within_budget" }),
        };
        let skipped: Vec<Value> = self
            .skipped
            .iter()
            .map(|s| json!({ "order": s.order.to_string(), "reason": s.reason }))
            .collect();
        json!({
            "schema_version": SCHEMA_VERSION,
            "verdict": verdict,
            "heuristic": true,
            "window_used": self.window_used,
            "steps": self.steps,
            "snipes_fired": self.snipes_fired,
            "skipped_snipes": skipped,
            "final": p.config_to_doc(&self.trace.final_config),
            "trace": self.trace.to_doc(p),
        })
    }
}

struct Engine<'a> {
    p: &'a Protocol,
    rng: ChaCha8Rng,
    /// State of every agent ever created, `None` once sniped.
    agents: Vec<Option<StateIx>>,
    /// Ids of live agents, ascending.
    live: Vec<usize>,
    config: Config,
    trace: Trace,
    timeline: Vec<TimedEvent>,
    ledger: Option<AgentLedger>,
    record_silent: bool,
}

impl<'a> Engine<'a> {
    fn new(p: &'a Protocol, a: &Input, seed: u64, instrument: bool) -> Result<Self, SimError> {
        let config = p.input_config(a)?;
        if config.is_empty() {
            return Err(SimError::EmptyInput);
        }
        let mut agents = Vec::new();
        for &(q, n) in config.entries() {
            agents.extend(std::iter::repeat_n(Some(q), n as usize));
        }
        let ledger =
            instrument.then(|| AgentLedger::new(agents.iter().map(|q| q.expect("initial agent"))));
        Ok(Engine {
            p,
            rng: ChaCha8Rng::seed_from_u64(seed),
            live: (0..agents.len()).collect(),
            agents,
            trace: Trace::start(config.clone()),
            config,
            timeline: Vec::new(),
            ledger,
            record_silent: false,
        })
    }

    fn agent_in(&self, q: StateIx) -> Option<usize> {
        self.live
            .iter()
            .copied()
            .find(|&id| self.agents[id] == Some(q))
    }

    fn pick_victim(&mut self, target: &Target) -> Result<usize, String> {
        match target {
            Target::Random => {
                let i = self.rng.gen_range(0..self.live.len() as u64) as usize;
                Ok(self.live[i])
            }
            Target::ByState(id) => {
                let q = self
                    .p
                    .state(id)
                    .map_err(|_| format!("unknown state {id}"))?;
                self.agent_in(q)
                    .ok_or_else(|| format!("state {id} is not populated"))
            }
            Target::MaxMetaLevel => {
                let mut best: Option<(u64, StateIx)> = None;
                for q in self.config.support() {
                    if let Some(level) = meta_level(self.p, q) {
                        if best.is_none_or(|(b, _)| level > b) {
                            best = Some((level, q));
                        }
                    }
                }
                let (_, q) = best.ok_or("no populated state carries a level")?;
                Ok(self.agent_in(q).expect("support state has an agent"))
            }
        }
    }

    fn snipe(&mut self, step: u64, order: &SnipeOrder) -> Result<(), String> {
        if self.live.len() <= 1 {
            return Err("sniping would empty the population".into());
        }
        let id = self.pick_victim(&order.target)?;
        let q = self.agents[id].take().expect("victim is live");
        self.live.retain(|&a| a != id);
        self.config = self.config.snipe(q).expect("victim state populated");
        self.trace
            .push(self.p, Event::Snipe(q))
            .expect("snipe replays");
        self.timeline.push(TimedEvent::Snipe {
            step,
            state: q,
            agent: id,
        });
        if let Some(l) = &mut self.ledger {
            l.record(step, vec![(id, AgentState::Tombstone)]);
        }
        Ok(())
    }

    /// One uniformly random interaction. Returns whether it changed the
    /// configuration.
    fn interact(&mut self, step: u64) -> bool {
        let n = self.live.len() as u64;
        let i = self.rng.gen_range(0..n);
        let mut j = self.rng.gen_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        let (a, b) = (self.live[i as usize], self.live[j as usize]);
        let (qa, qb) = (self.agents[a].expect("live"), self.agents[b].expect("live"));
        let Some(rule) = self.p.rule_for(qa, qb) else {
            if self.record_silent {
                self.timeline.push(TimedEvent::Silent {
                    step,
                    pair: [qa, qb],
                });
            }
            return false;
        };
        let (na, nb) = assign(self.p, qa, qb, rule.post);
        self.agents[a] = Some(na);
        self.agents[b] = Some(nb);
        self.config = self
            .p
            .apply_step(&self.config, &rule)
            .expect("enabled rule");
        self.trace.events.push(Event::Step(rule));
        self.trace.final_config = self.config.clone();
        self.timeline.push(TimedEvent::Step {
            step,
            rule,
            agents: [a, b],
        });
        if let Some(l) = &mut self.ledger {
            let mut changes = Vec::new();
            if na != qa {
                changes.push((a, AgentState::Live(na)));
            }
            if nb != qb {
                changes.push((b, AgentState::Live(nb)));
            }
            l.record(step, changes);
        }
        true
    }

    fn is_terminal(&self) -> bool {
        self.p.enabled_rules(&self.config).is_empty()
    }
}

/// Distributes `post` over the two agents: keep unchanged states and meta
/// levels where possible; otherwise the agent with the smaller state gets
/// the smaller post state.
fn assign(p: &Protocol, qa: StateIx, qb: StateIx, post: [StateIx; 2]) -> (StateIx, StateIx) {
    let score = |x: StateIx, y: StateIx| {
        let keep = |from: StateIx, to: StateIx| {
            if from == to {
                2
            } else if meta_level(p, from).is_some() && meta_level(p, from) == meta_level(p, to) {
                1
            } else {
                0
            }
        };
        keep(qa, x) + keep(qb, y)
    };
    let straight = if qa <= qb {
        (post[0], post[1])
    } else {
        (post[1], post[0])
    };
    let swapped = (straight.1, straight.0);
    if score(swapped.0, swapped.1) > score(straight.0, straight.1) {
        swapped
    } else {
        straight
    }
}

fn simulate(
    p: &Protocol,
    a: &Input,
    sch: Scheduler,
    adv: &Adversary,
    opts: RunOptions,
    instrument: bool,
) -> Result<(RunReport, Option<AgentLedger>), SimError> {
    if opts.window > opts.max_steps {
        return Err(SimError::WindowTooLarge {
            window: opts.window,
            max_steps: opts.max_steps,
        });
    }
    let mut e = Engine::new(p, a, sch.seed, instrument)?;
    e.record_silent = opts.record_silent;
    let mut orders: Vec<SnipeOrder> = adv.schedule.clone();
    orders.sort_by_key(|o| o.at_step);
    let mut next_order = 0;
    let mut fired = 0;
    let mut skipped = Vec::new();
    // step at which the current consensus began
    let mut streak: Option<(Output, u64)> = None;
    let mut step = 0;
    let mut verdict = RunVerdict::NoConsensusWithinBudget;
    let mut last_silent = false;

    loop {
        while next_order < orders.len() && orders[next_order].at_step <= step {
            let order = orders[next_order].clone();
            next_order += 1;
            let result = if fired >= adv.budget {
                Err("budget exhausted".to_owned())
            } else {
                e.snipe(step, &order)
            };
            match result {
                Ok(()) => {
                    fired += 1;
                    streak = None;
                    last_silent = false;
                }
                Err(reason) => skipped.push(SkippedSnipe { order, reason }),
            }
        }
        let pending = next_order < orders.len();
        let consensus = p.consensus_output(&e.config)?.cloned();
        match (&consensus, &streak) {
            (Some(r), Some((s, _))) if r == s => {}
            (Some(r), _) => streak = Some((r.clone(), step)),
            (None, _) => streak = None,
        }
        if !pending {
            let frozen = e.live.len() <= 1 || (last_silent && e.is_terminal());
            if let Some((r, since)) = &streak {
                if frozen || step - since >= opts.window {
                    verdict = RunVerdict::ConvergedTo {
                        output: r.clone(),
                        at_step: *since,
                    };
                    break;
                }
            } else if frozen {
                break;
            }
        }
        if step >= opts.max_steps {
            break;
        }
        if e.live.len() >= 2 {
            last_silent = !e.interact(step);
        }
        step += 1;
    }
    for order in &orders[next_order..] {
        skipped.push(SkippedSnipe {
            order: order.clone(),
            reason: "step budget ended first".into(),
        });
    }
    let report = RunReport {
        trace: e.trace,
        timeline: e.timeline,
        verdict,
        window_used: opts.window,
        steps: step,
        snipes_fired: fired,
        skipped,
    };
    Ok((report, e.ledger))
}

/// Simulates until a consensus survives `window` steps or `max_steps`
/// interactions have been made.
pub fn run(
    p: &Protocol,
    a: &Input,
    sch: Scheduler,
    adv: &Adversary,
    opts: RunOptions,
) -> Result<RunReport, SimError> {
    simulate(p, a, sch, adv, opts, false).map(|(r, _)| r)
}

/// [`run`] plus a per-agent history.
pub fn run_instrumented(
    p: &Protocol,
    a: &Input,
    sch: Scheduler,
    adv: &Adversary,
    opts: RunOptions,
) -> Result<(RunReport, AgentLedger), SimError> {
    simulate(p, a, sch, adv, opts, true)
        .map(|(r, l)| (r, l.expect("instrumented run keeps a ledger")))
}

/// Re-executes a recorded trace and returns its final configuration with
/// the consensus output there, if any.
pub fn replay(p: &Protocol, trace: &Trace) -> Result<(Config, Option<Output>), SimError> {
    trace.validate(p)?;
    let end = trace.replay(p)?;
    let r = if end.is_empty() {
        None
    } else {
        p.consensus_output(&end)?.cloned()
    };
    Ok((end, r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zoo::{pebble, tower};

    fn five() -> Input {
        Input::single("x", 5)
    }

    #[test]
    fn tower_converges_to_one() {
        let p = tower(3).unwrap();
        for seed in 0..20 {
            let r = run(
                &p,
                &five(),
                Scheduler::new(seed),
                &Adversary::none(),
                RunOptions::new(10_000, 200),
            )
            .unwrap();
            assert_eq!(r.converged_to(), Some(&Output::Int(1)), "seed {seed}");
            r.trace.validate(&p).unwrap();
        }
    }

    #[test]
    fn early_snipes_leave_two_agents() {
        let p = tower(3).unwrap();
        let adv = Adversary::scripted(vec![
            Adversary::at(0, Target::Random),
            Adversary::at(0, Target::Random),
            Adversary::at(0, Target::Random),
        ]);
        let r = run(
            &p,
            &five(),
            Scheduler::new(7),
            &adv,
            RunOptions::new(10_000, 200),
        )
        .unwrap();
        assert_eq!(r.snipes_fired, 3);
        assert_eq!(r.converged_to(), Some(&Output::Int(0)));
        assert_eq!(r.trace.final_config.size(), 2);
    }

    #[test]
    fn single_agent_converges_immediately() {
        let p = tower(3).unwrap();
        let r = run(
            &p,
            &Input::single("x", 1),
            Scheduler::new(0),
            &Adversary::none(),
            RunOptions::new(100, 10),
        )
        .unwrap();
        assert_eq!(
            r.verdict,
            RunVerdict::ConvergedTo {
                output: Output::Int(0),
                at_step: 0
            }
        );
        assert_eq!(r.steps, 0);
    }

    #[test]
    fn deterministic_per_seed() {
        let p = tower(4).unwrap();
        let adv = Adversary::scripted(vec![Adversary::at(3, Target::Random)]);
        let go = |seed| {
            run(
                &p,
                &Input::single("x", 6),
                Scheduler::new(seed),
                &adv,
                RunOptions::new(5_000, 100),
            )
            .unwrap()
        };
        assert_eq!(go(11), go(11));
        assert_eq!(
            go(11).to_json(&p).to_string(),
            go(11).to_json(&p).to_string()
        );
        let differs = (0..10).any(|s| go(s).trace != go(11).trace);
        assert!(differs);
    }

    #[test]
    fn skipped_snipes_are_reported() {
        let p = tower(3).unwrap();
        let adv = Adversary {
            schedule: vec![
                Adversary::at(0, Target::ByState("L3".into())),
                Adversary::at(1, Target::ByState("nope".into())),
                Adversary::at(2, Target::Random),
                Adversary::at(3, Target::Random),
            ],
            budget: 1,
        };
        let r = run(
            &p,
            &five(),
            Scheduler::new(1),
            &adv,
            RunOptions::new(10_000, 100),
        )
        .unwrap();
        assert_eq!(r.snipes_fired, 1);
        let reasons: Vec<&str> = r.skipped.iter().map(|s| s.reason.as_str()).collect();
        assert_eq!(reasons.len(), 3);
        assert!(reasons[0].contains("not populated"));
        assert!(reasons[1].contains("unknown state"));
        assert_eq!(reasons[2], "budget exhausted");
    }

    #[test]
    fn max_level_targets_heaviest_pebble() {
        let p = pebble(3).unwrap();
        let adv = Adversary::scripted(vec![Adversary::at(1, Target::MaxMetaLevel)]);
        let r = run(
            &p,
            &Input::single("x", 4),
            Scheduler::new(0),
            &adv,
            RunOptions::new(1_000, 50),
        )
        .unwrap();
        // after one non-silent step some agent holds 2 pebbles
        let sniped = r.timeline.iter().find_map(|e| match e {
            TimedEvent::Snipe { state, .. } => Some(*state),
            _ => None,
        });
        assert_eq!(sniped, Some(p.state("P2").unwrap()));
        assert_eq!(r.converged_to(), Some(&Output::Int(0)));
    }

    #[test]
    fn window_checked() {
        let p = tower(2).unwrap();
        assert!(matches!(
            run(
                &p,
                &five(),
                Scheduler::new(0),
                &Adversary::none(),
                RunOptions::new(10, 11)
            ),
            Err(SimError::WindowTooLarge { .. })
        ));
        assert!(matches!(
            run(
                &p,
                &Input::single("x", 0),
                Scheduler::new(0),
                &Adversary::none(),
                RunOptions::new(10, 1)
            ),
            Err(SimError::EmptyInput)
        ));
    }
}
