//! Operational semantics: configurations, single steps, runs, and the
//! matching relation between sends and receives.
//!
//! A configuration holds one control state and one stack word per process
//! (stack top is the rightmost symbol) plus one word per channel (the head,
//! i.e. the next message to be received, is the leftmost symbol). Sends append
//! on the right and never block; receives consume from the left and block on
//! a mismatch. An action listed in a process's `eps_actions` additionally
//! requires that process's stack to be empty.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Action, MessageId, ProcessId, Rqcp, StateId, SymbolId};

/// A global configuration. Indexed positionally by process and channel ids.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Configuration {
    pub control: Vec<StateId>,
    pub stacks: Vec<Vec<SymbolId>>,
    pub channels: Vec<Vec<MessageId>>,
}

impl Configuration {
    /// The initial configuration: every process in its initial state with an
    /// empty stack, every channel empty.
    pub fn initial(sys: &Rqcp) -> Configuration {
        Configuration {
            control: sys.pushdowns.iter().map(|pd| pd.init).collect(),
            stacks: vec![Vec::new(); sys.process_count()],
            channels: vec![Vec::new(); sys.topology.channel_count()],
        }
    }

    /// Channels currently holding at least one message.
    pub fn nonempty_channels(&self) -> Vec<usize> {
        self.channels
            .iter()
            .enumerate()
            .filter(|(_, w)| !w.is_empty())
            .map(|(i, _)| i)
            .collect()
    }

    /// Shape check against a system: vector lengths and id ranges.
    pub fn well_typed(&self, sys: &Rqcp) -> bool {
        if self.control.len() != sys.process_count()
            || self.stacks.len() != sys.process_count()
            || self.channels.len() != sys.topology.channel_count()
        {
            return false;
        }
        for (i, z) in self.control.iter().enumerate() {
            if z.0 >= sys.pushdowns[i].states.len() {
                return false;
            }
        }
        for (i, u) in self.stacks.iter().enumerate() {
            if u.iter().any(|s| s.0 >= sys.pushdowns[i].stack_alphabet.len()) {
                return false;
            }
        }
        for w in &self.channels {
            if w.iter().any(|m| m.0 >= sys.messages.len()) {
                return false;
            }
        }
        true
    }
}

/// Applies one action of one process to a configuration. Returns `None` when
/// the action is not enabled (guard unsatisfied, stack/channel mismatch, or
/// no matching transition edge is required here — this is the raw effect).
///
/// The `from`/`to` control states are taken from the transition; callers pick
/// a transition and pass its pieces. Determinism: the successor is a pure
/// function of `(config, process, transition)`.
pub fn apply(
    sys: &Rqcp,
    config: &Configuration,
    p: ProcessId,
    from: StateId,
    action: &Action,
    to: StateId,
) -> Option<Configuration> {
    if config.control[p.0] != from {
        return None;
    }
    let pd = sys.pushdown(p);
    if pd.is_eps(action) && !config.stacks[p.0].is_empty() {
        return None;
    }
    let mut next = config.clone();
    next.control[p.0] = to;
    match action {
        Action::Local(_) => {}
        Action::Push(s) => next.stacks[p.0].push(*s),
        Action::Pop(s) => {
            if next.stacks[p.0].last() != Some(s) {
                return None;
            }
            next.stacks[p.0].pop();
        }
        Action::Send { channel, message } => {
            debug_assert_eq!(sys.topology.channel(*channel).src, p);
            next.channels[channel.0].push(*message);
        }
        Action::Recv { channel, message } => {
            debug_assert_eq!(sys.topology.channel(*channel).dst, p);
            if next.channels[channel.0].first() != Some(message) {
                return None;
            }
            next.channels[channel.0].remove(0);
        }
    }
    Some(next)
}

/// All moves enabled in `config`, as `(process, action, successor)` triples,
/// ordered by process id then transition declaration order.
pub fn enabled_moves(
    sys: &Rqcp,
    config: &Configuration,
) -> Vec<(ProcessId, Action, Configuration)> {
    let mut out = Vec::new();
    for p in sys.process_ids() {
        let pd = sys.pushdown(p);
        for (from, action, to) in &pd.transitions {
            if let Some(next) = apply(sys, config, p, *from, action, *to) {
                out.push((p, action.clone(), next));
            }
        }
    }
    out
}

/// One step of a run: which process fired which action, and the
/// configuration reached.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Step {
    pub process: ProcessId,
    pub action: Action,
    pub after: Configuration,
}

/// A run: an initial configuration and a sequence of steps.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Run {
    pub initial: Configuration,
    pub steps: Vec<Step>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RunError {
    #[error("initial configuration is not well typed for this system")]
    MalformedInitial,
    #[error("step {index}: no transition of {process} with this action is enabled")]
    NotEnabled { index: usize, process: ProcessId },
    #[error("step {index}: declared successor differs from the computed one")]
    WrongSuccessor { index: usize },
}

impl Run {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn final_config(&self) -> &Configuration {
        self.steps.last().map(|s| &s.after).unwrap_or(&self.initial)
    }

    /// The configuration before step `i`.
    pub fn config_before(&self, i: usize) -> &Configuration {
        if i == 0 {
            &self.initial
        } else {
            &self.steps[i - 1].after
        }
    }

    /// Replays the run against the system, checking every step is enabled
    /// and produces the declared successor.
    pub fn validate(&self, sys: &Rqcp) -> Result<(), RunError> {
        if !self.initial.well_typed(sys) {
            return Err(RunError::MalformedInitial);
        }
        let mut current = self.initial.clone();
        for (i, step) in self.steps.iter().enumerate() {
            let pd = sys.pushdown(step.process);
            // several transitions may carry the same action; the step is
            // valid when any of them yields the declared successor
            let mut enabled = false;
            let mut matched = None;
            for (from, action, to) in &pd.transitions {
                if action == &step.action {
                    if let Some(next) = apply(sys, &current, step.process, *from, action, *to) {
                        enabled = true;
                        if next == step.after {
                            matched = Some(next);
                            break;
                        }
                    }
                }
            }
            current = match matched {
                Some(next) => next,
                None if enabled => return Err(RunError::WrongSuccessor { index: i }),
                None => return Err(RunError::NotEnabled { index: i, process: step.process }),
            };
        }
        Ok(())
    }

    /// The subsequence of step indices performed by `p`.
    pub fn projection(&self, p: ProcessId) -> Vec<&Step> {
        self.steps.iter().filter(|s| s.process == p).collect()
    }

    /// Rebuilds a run from an initial configuration and a list of
    /// `(process, action)` labels by replaying them. Fails when some label is
    /// not enabled at its position.
    pub fn from_labels(
        sys: &Rqcp,
        initial: Configuration,
        labels: &[(ProcessId, Action)],
    ) -> Result<Run, RunError> {
        let mut steps = Vec::with_capacity(labels.len());
        let mut current = initial.clone();
        for (i, (p, action)) in labels.iter().enumerate() {
            let pd = sys.pushdown(*p);
            let mut found = None;
            for (from, a, to) in &pd.transitions {
                if a == action {
                    if let Some(next) = apply(sys, &current, *p, *from, a, *to) {
                        found = Some(next);
                        break;
                    }
                }
            }
            let next = found.ok_or(RunError::NotEnabled { index: i, process: *p })?;
            steps.push(Step { process: *p, action: action.clone(), after: next.clone() });
            current = next;
        }
        Ok(Run { initial, steps })
    }

    pub fn labels(&self) -> Vec<(ProcessId, Action)> {
        self.steps.iter().map(|s| (s.process, s.action.clone())).collect()
    }
}

impl fmt::Display for Run {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.steps.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{}:{:?}", s.process, s.action)?;
        }
        Ok(())
    }
}

/// Pairs each receive with the send whose message it consumed.
///
/// Step `j` (a receive on channel `c`) matches step `i` (a send on `c`) when
/// the receive consumes exactly the message appended by that send under FIFO
/// order, taking any initial channel content into account: receives first
/// drain the initial content (those receives are unmatched), then pair with
/// sends in order. Returns `(send_index, recv_index)` pairs of 0-based step
/// indices. For a valid run the map from receives to sends is injective and
/// order-preserving per channel.
pub fn matching_pairs(run: &Run) -> Vec<(usize, usize)> {
    let nchan = run.initial.channels.len();
    let mut sends: Vec<Vec<usize>> = vec![Vec::new(); nchan];
    let mut recv_count: Vec<usize> = vec![0; nchan];
    let mut out = Vec::new();
    for (i, step) in run.steps.iter().enumerate() {
        match &step.action {
            Action::Send { channel, .. } => sends[channel.0].push(i),
            Action::Recv { channel, .. } => {
                let c = channel.0;
                let k = recv_count[c];
                recv_count[c] += 1;
                let initial_len = run.initial.channels[c].len();
                if k >= initial_len {
                    let send_pos = k - initial_len;
                    if let Some(&si) = sends[c].get(send_pos) {
                        out.push((si, i));
                    }
                }
            }
            _ => {}
        }
    }
    out.sort_unstable();
    out
}
