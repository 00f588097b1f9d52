//! Static structure of a system of recursive communicating processes.
//!
//! A system couples a set of pushdown processes with a *typed topology*: a
//! directed multigraph of point-to-point FIFO channels in which some
//! (process, channel) endpoints are marked *restricted*. A restricted endpoint
//! may communicate on that channel only while its stack is empty; this is
//! enforced by requiring the corresponding send/receive actions to be
//! empty-stack guarded (members of the process's `eps_actions` set).
//!
//! Everything in this module is deliberately permissive to construct:
//! [`validate_system`] reports structural violations as data instead of
//! panicking, so that malformed inputs (hand-written files, fuzzed systems)
//! can be diagnosed. All analyses in the other modules assume a system that
//! validates cleanly.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Index of a process in its system (declaration order).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ProcessId(pub usize);

/// Index of a channel in its topology (declaration order).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ChannelId(pub usize);

/// Index of a message in the system's message alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MessageId(pub usize);

/// Index of a control state local to one pushdown process.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StateId(pub usize);

/// Index of a stack symbol local to one pushdown process.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SymbolId(pub usize);

impl fmt::Display for ProcessId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p{}", self.0)
    }
}

/// One directed FIFO channel between two distinct processes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Channel {
    pub name: String,
    pub src: ProcessId,
    pub dst: ProcessId,
}

/// A directed channel multigraph together with the set of restricted
/// endpoints. `restricted` holds pairs `(p, c)` meaning process `p` must have
/// an empty stack whenever it communicates on channel `c`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypedTopology {
    pub processes: Vec<String>,
    pub channels: Vec<Channel>,
    pub restricted: BTreeSet<(ProcessId, ChannelId)>,
}

impl TypedTopology {
    pub fn process_count(&self) -> usize {
        self.processes.len()
    }

    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    pub fn process_ids(&self) -> impl Iterator<Item = ProcessId> {
        (0..self.processes.len()).map(ProcessId)
    }

    pub fn channel_ids(&self) -> impl Iterator<Item = ChannelId> {
        (0..self.channels.len()).map(ChannelId)
    }

    pub fn channel(&self, c: ChannelId) -> &Channel {
        &self.channels[c.0]
    }

    pub fn is_restricted(&self, p: ProcessId, c: ChannelId) -> bool {
        self.restricted.contains(&(p, c))
    }

    /// The process at the other end of `c`, seen from `p`. `None` when `p` is
    /// not an endpoint of `c`.
    pub fn peer(&self, p: ProcessId, c: ChannelId) -> Option<ProcessId> {
        let ch = self.channel(c);
        if ch.src == p {
            Some(ch.dst)
        } else if ch.dst == p {
            Some(ch.src)
        } else {
            None
        }
    }

    /// Channels incident to `p`, in either direction.
    pub fn incident(&self, p: ProcessId) -> Vec<ChannelId> {
        self.channel_ids()
            .filter(|&c| {
                let ch = self.channel(c);
                ch.src == p || ch.dst == p
            })
            .collect()
    }

    /// The same topology with every channel direction flipped. Restriction
    /// marks follow their endpoint.
    pub fn reversed(&self) -> TypedTopology {
        TypedTopology {
            processes: self.processes.clone(),
            channels: self
                .channels
                .iter()
                .map(|ch| Channel {
                    name: ch.name.clone(),
                    src: ch.dst,
                    dst: ch.src,
                })
                .collect(),
            restricted: self.restricted.clone(),
        }
    }
}

/// A single transition label.
///
/// `Send`/`Recv` move one message through a channel, `Push`/`Pop` manipulate
/// the process's own stack (top is the rightmost position of the stack word),
/// and `Local` is an internal step with a purely informational label.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Action {
    Send { channel: ChannelId, message: MessageId },
    Recv { channel: ChannelId, message: MessageId },
    Push(SymbolId),
    Pop(SymbolId),
    Local(u32),
}

impl Action {
    pub fn is_stack(&self) -> bool {
        matches!(self, Action::Push(_) | Action::Pop(_))
    }

    pub fn is_comm(&self) -> bool {
        matches!(self, Action::Send { .. } | Action::Recv { .. })
    }

    pub fn channel(&self) -> Option<ChannelId> {
        match self {
            Action::Send { channel, .. } | Action::Recv { channel, .. } => Some(*channel),
            _ => None,
        }
    }
}

/// One pushdown process: control states, a designated initial state, a stack
/// alphabet, a transition relation, and the set of empty-stack guarded
/// actions (`eps_actions`). A transition carrying an action in `eps_actions`
/// may only fire when the process's stack is empty; stack actions may not be
/// guarded.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PushdownProcess {
    pub states: Vec<String>,
    pub init: StateId,
    pub stack_alphabet: Vec<String>,
    pub transitions: Vec<(StateId, Action, StateId)>,
    pub eps_actions: BTreeSet<Action>,
}

impl PushdownProcess {
    /// A one-state process with no transitions and no stack symbols.
    pub fn trivial() -> PushdownProcess {
        PushdownProcess {
            states: vec!["idle".to_string()],
            init: StateId(0),
            stack_alphabet: Vec::new(),
            transitions: Vec::new(),
            eps_actions: BTreeSet::new(),
        }
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    /// Whether firing `action` requires an empty stack.
    pub fn is_eps(&self, action: &Action) -> bool {
        self.eps_actions.contains(action)
    }

    /// Transitions leaving `from`, in declaration order.
    pub fn from(&self, from: StateId) -> impl Iterator<Item = &(StateId, Action, StateId)> {
        self.transitions.iter().filter(move |(z, _, _)| *z == from)
    }
}

/// A complete system: topology, message alphabet, and one pushdown per
/// process. A system whose stack alphabets are all empty is a *finite*
/// system; the general case is *recursive*.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rqcp {
    pub topology: TypedTopology,
    pub messages: Vec<String>,
    pub pushdowns: Vec<PushdownProcess>,
}

impl Rqcp {
    pub fn process_count(&self) -> usize {
        self.topology.process_count()
    }

    pub fn process_ids(&self) -> impl Iterator<Item = ProcessId> {
        (0..self.topology.processes.len()).map(ProcessId)
    }

    pub fn pushdown(&self, p: ProcessId) -> &PushdownProcess {
        &self.pushdowns[p.0]
    }

    /// True when every stack alphabet is empty.
    pub fn is_finite(&self) -> bool {
        self.pushdowns.iter().all(|pd| pd.stack_alphabet.is_empty())
    }

    pub fn process_name(&self, p: ProcessId) -> &str {
        &self.topology.processes[p.0]
    }

    pub fn state_name(&self, p: ProcessId, z: StateId) -> &str {
        &self.pushdowns[p.0].states[z.0]
    }
}

/// A structural defect found by [`validate_system`]. Names are resolved
/// eagerly so violations can be displayed without the system at hand.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    DuplicateProcessName { name: String },
    DuplicateChannelName { name: String },
    DuplicateMessage { name: String },
    DuplicateState { process: String, name: String },
    DuplicateSymbol { process: String, name: String },
    SelfLoopChannel { channel: String },
    ChannelEndpointOutOfRange { channel: String },
    RestrictionNotEndpoint { process: String, channel: String },
    PushdownCountMismatch { processes: usize, pushdowns: usize },
    NoStates { process: String },
    InitOutOfRange { process: String },
    TransitionStateOutOfRange { process: String, index: usize },
    TransitionSymbolOutOfRange { process: String, index: usize },
    TransitionChannelOutOfRange { process: String, index: usize },
    TransitionMessageOutOfRange { process: String, index: usize },
    SendByNonSource { process: String, channel: String, index: usize },
    RecvByNonTarget { process: String, channel: String, index: usize },
    StackActionGuarded { process: String },
    RestrictedCommNotGuarded { process: String, channel: String, index: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            DuplicateProcessName { name } => write!(f, "duplicate process name `{name}`"),
            DuplicateChannelName { name } => write!(f, "duplicate channel name `{name}`"),
            DuplicateMessage { name } => write!(f, "duplicate message `{name}`"),
            DuplicateState { process, name } => {
                write!(f, "process `{process}` declares state `{name}` twice")
            }
            DuplicateSymbol { process, name } => {
                write!(f, "process `{process}` declares stack symbol `{name}` twice")
            }
            SelfLoopChannel { channel } => {
                write!(f, "channel `{channel}` has identical source and destination")
            }
            ChannelEndpointOutOfRange { channel } => {
                write!(f, "channel `{channel}` references an unknown process")
            }
            RestrictionNotEndpoint { process, channel } => write!(
                f,
                "restriction marks `{process}` on channel `{channel}` but it is not an endpoint"
            ),
            PushdownCountMismatch { processes, pushdowns } => write!(
                f,
                "{processes} processes declared but {pushdowns} pushdowns provided"
            ),
            NoStates { process } => write!(f, "process `{process}` has no control states"),
            InitOutOfRange { process } => {
                write!(f, "process `{process}` has an out-of-range initial state")
            }
            TransitionStateOutOfRange { process, index } => {
                write!(f, "process `{process}` transition #{index} references an unknown state")
            }
            TransitionSymbolOutOfRange { process, index } => write!(
                f,
                "process `{process}` transition #{index} references an unknown stack symbol"
            ),
            TransitionChannelOutOfRange { process, index } => write!(
                f,
                "process `{process}` transition #{index} references an unknown channel"
            ),
            TransitionMessageOutOfRange { process, index } => write!(
                f,
                "process `{process}` transition #{index} references an unknown message"
            ),
            SendByNonSource { process, channel, index } => write!(
                f,
                "process `{process}` transition #{index} sends on `{channel}` but is not its source"
            ),
            RecvByNonTarget { process, channel, index } => write!(
                f,
                "process `{process}` transition #{index} receives on `{channel}` but is not its target"
            ),
            StackActionGuarded { process } => write!(
                f,
                "process `{process}` lists a push/pop among its empty-stack guarded actions"
            ),
            RestrictedCommNotGuarded { process, channel, index } => write!(
                f,
                "process `{process}` transition #{index} communicates on restricted channel \
                 `{channel}` without an empty-stack guard"
            ),
        }
    }
}

/// Checks every structural invariant of a system and returns the list of
/// violations, empty when the system is well formed.
pub fn validate_system(sys: &Rqcp) -> Vec<Violation> {
    let mut out = Vec::new();
    let topo = &sys.topology;
    let np = topo.processes.len();

    let mut seen = BTreeSet::new();
    for name in &topo.processes {
        if !seen.insert(name.clone()) {
            out.push(Violation::DuplicateProcessName { name: name.clone() });
        }
    }
    let mut seen = BTreeSet::new();
    for ch in &topo.channels {
        if !seen.insert(ch.name.clone()) {
            out.push(Violation::DuplicateChannelName { name: ch.name.clone() });
        }
        if ch.src.0 >= np || ch.dst.0 >= np {
            out.push(Violation::ChannelEndpointOutOfRange { channel: ch.name.clone() });
        } else if ch.src == ch.dst {
            out.push(Violation::SelfLoopChannel { channel: ch.name.clone() });
        }
    }
    let mut seen = BTreeSet::new();
    for name in &sys.messages {
        if !seen.insert(name.clone()) {
            out.push(Violation::DuplicateMessage { name: name.clone() });
        }
    }
    for &(p, c) in &topo.restricted {
        if p.0 >= np || c.0 >= topo.channels.len() {
            out.push(Violation::RestrictionNotEndpoint {
                process: p.0.to_string(),
                channel: c.0.to_string(),
            });
            continue;
        }
        let ch = topo.channel(c);
        if ch.src != p && ch.dst != p {
            out.push(Violation::RestrictionNotEndpoint {
                process: topo.processes[p.0].clone(),
                channel: ch.name.clone(),
            });
        }
    }

    if sys.pushdowns.len() != np {
        out.push(Violation::PushdownCountMismatch {
            processes: np,
            pushdowns: sys.pushdowns.len(),
        });
        return out;
    }

    for p in sys.process_ids() {
        let pd = sys.pushdown(p);
        let pname = topo.processes[p.0].clone();
        if pd.states.is_empty() {
            out.push(Violation::NoStates { process: pname.clone() });
            continue;
        }
        let mut seen = BTreeSet::new();
        for name in &pd.states {
            if !seen.insert(name.clone()) {
                out.push(Violation::DuplicateState { process: pname.clone(), name: name.clone() });
            }
        }
        let mut seen = BTreeSet::new();
        for name in &pd.stack_alphabet {
            if !seen.insert(name.clone()) {
                out.push(Violation::DuplicateSymbol { process: pname.clone(), name: name.clone() });
            }
        }
        if pd.init.0 >= pd.states.len() {
            out.push(Violation::InitOutOfRange { process: pname.clone() });
        }
        if pd.eps_actions.iter().any(Action::is_stack) {
            out.push(Violation::StackActionGuarded { process: pname.clone() });
        }
        for (i, (from, action, to)) in pd.transitions.iter().enumerate() {
            if from.0 >= pd.states.len() || to.0 >= pd.states.len() {
                out.push(Violation::TransitionStateOutOfRange { process: pname.clone(), index: i });
            }
            match action {
                Action::Push(s) | Action::Pop(s) => {
                    if s.0 >= pd.stack_alphabet.len() {
                        out.push(Violation::TransitionSymbolOutOfRange {
                            process: pname.clone(),
                            index: i,
                        });
                    }
                }
                Action::Send { channel, message } | Action::Recv { channel, message } => {
                    if channel.0 >= topo.channels.len() {
                        out.push(Violation::TransitionChannelOutOfRange {
                            process: pname.clone(),
                            index: i,
                        });
                        continue;
                    }
                    if message.0 >= sys.messages.len() {
                        out.push(Violation::TransitionMessageOutOfRange {
                            process: pname.clone(),
                            index: i,
                        });
                    }
                    let ch = topo.channel(*channel);
                    let is_send = matches!(action, Action::Send { .. });
                    if is_send && ch.src != p {
                        out.push(Violation::SendByNonSource {
                            process: pname.clone(),
                            channel: ch.name.clone(),
                            index: i,
                        });
                    }
                    if !is_send && ch.dst != p {
                        out.push(Violation::RecvByNonTarget {
                            process: pname.clone(),
                            channel: ch.name.clone(),
                            index: i,
                        });
                    }
                    let endpoint_ok = (is_send && ch.src == p) || (!is_send && ch.dst == p);
                    if endpoint_ok
                        && topo.is_restricted(p, *channel)
                        && !pd.eps_actions.contains(action)
                    {
                        out.push(Violation::RestrictedCommNotGuarded {
                            process: pname.clone(),
                            channel: ch.name.clone(),
                            index: i,
                        });
                    }
                }
                Action::Local(_) => {}
            }
        }
    }
    out
}

/// Incremental construction of systems for tests, fixtures, and generators.
///
/// The builder is permissive: it never rejects, so invalid systems (for
/// exercising [`validate_system`]) can be produced on purpose.
#[derive(Debug, Default)]
pub struct SystemBuilder {
    processes: Vec<String>,
    channels: Vec<Channel>,
    restricted: BTreeSet<(ProcessId, ChannelId)>,
    messages: Vec<String>,
    pushdowns: Vec<PushdownProcess>,
}

impl SystemBuilder {
    pub fn new() -> SystemBuilder {
        SystemBuilder::default()
    }

    pub fn process(&mut self, name: &str) -> ProcessId {
        self.processes.push(name.to_string());
        self.pushdowns.push(PushdownProcess {
            states: Vec::new(),
            init: StateId(0),
            stack_alphabet: Vec::new(),
            transitions: Vec::new(),
            eps_actions: BTreeSet::new(),
        });
        ProcessId(self.processes.len() - 1)
    }

    pub fn channel(&mut self, name: &str, src: ProcessId, dst: ProcessId) -> ChannelId {
        self.channels.push(Channel { name: name.to_string(), src, dst });
        ChannelId(self.channels.len() - 1)
    }

    /// Marks `(p, c)` as a restricted endpoint.
    pub fn restrict(&mut self, p: ProcessId, c: ChannelId) {
        self.restricted.insert((p, c));
    }

    pub fn message(&mut self, name: &str) -> MessageId {
        self.messages.push(name.to_string());
        MessageId(self.messages.len() - 1)
    }

    pub fn state(&mut self, p: ProcessId, name: &str) -> StateId {
        let pd = &mut self.pushdowns[p.0];
        pd.states.push(name.to_string());
        StateId(pd.states.len() - 1)
    }

    pub fn init(&mut self, p: ProcessId, z: StateId) {
        self.pushdowns[p.0].init = z;
    }

    pub fn stack_symbol(&mut self, p: ProcessId, name: &str) -> SymbolId {
        let pd = &mut self.pushdowns[p.0];
        pd.stack_alphabet.push(name.to_string());
        SymbolId(pd.stack_alphabet.len() - 1)
    }

    pub fn transition(&mut self, p: ProcessId, from: StateId, action: Action, to: StateId) {
        self.pushdowns[p.0].transitions.push((from, action, to));
    }

    /// Adds `action` to process `p`'s empty-stack guarded set.
    pub fn eps_action(&mut self, p: ProcessId, action: Action) {
        self.pushdowns[p.0].eps_actions.insert(action);
    }

    /// Guards every communication action that touches a restricted endpoint.
    /// Call after all transitions are declared; fixtures and generators use
    /// this to satisfy the typing discipline in one stroke.
    pub fn guard_restricted(&mut self) {
        let restricted = self.restricted.clone();
        for (pi, pd) in self.pushdowns.iter_mut().enumerate() {
            let p = ProcessId(pi);
            let guarded: Vec<Action> = pd
                .transitions
                .iter()
                .filter_map(|(_, a, _)| {
                    a.channel().filter(|&c| restricted.contains(&(p, c))).map(|_| a.clone())
                })
                .collect();
            pd.eps_actions.extend(guarded);
        }
    }

    pub fn build(self) -> Rqcp {
        Rqcp {
            topology: TypedTopology {
                processes: self.processes,
                channels: self.channels,
                restricted: self.restricted,
            },
            messages: self.messages,
            pushdowns: self.pushdowns,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_valid() -> Rqcp {
        let mut b = SystemBuilder::new();
        let p = b.process("p");
        let q = b.process("q");
        let c = b.channel("c", p, q);
        b.restrict(q, c);
        let m = b.message("m");
        let z0 = b.state(p, "z0");
        let z1 = b.state(p, "z1");
        b.init(p, z0);
        let y0 = b.state(q, "y0");
        let y1 = b.state(q, "y1");
        b.init(q, y0);
        b.transition(p, z0, Action::Send { channel: c, message: m }, z1);
        b.transition(q, y0, Action::Recv { channel: c, message: m }, y1);
        b.guard_restricted();
        b.build()
    }

    #[test]
    fn valid_system_has_no_violations() {
        assert!(validate_system(&small_valid()).is_empty());
    }

    #[test]
    fn self_loop_channel_is_reported() {
        let mut b = SystemBuilder::new();
        let p = b.process("p");
        b.channel("c", p, p);
        b.state(p, "z0");
        let sys = b.build();
        let violations = validate_system(&sys);
        assert!(violations
            .iter()
            .any(|v| matches!(v, Violation::SelfLoopChannel { channel } if channel == "c")));
    }

    #[test]
    fn restricted_comm_without_guard_is_reported() {
        let mut b = SystemBuilder::new();
        let p = b.process("p");
        let q = b.process("q");
        let c = b.channel("c", p, q);
        b.restrict(p, c);
        let m = b.message("m");
        let z0 = b.state(p, "z0");
        b.init(p, z0);
        b.state(q, "y0");
        b.transition(p, z0, Action::Send { channel: c, message: m }, z0);
        // deliberately no guard_restricted()
        let sys = b.build();
        let violations = validate_system(&sys);
        assert!(violations.iter().any(|v| matches!(
            v,
            Violation::RestrictedCommNotGuarded { process, channel, .. }
                if process == "p" && channel == "c"
        )));
    }

    #[test]
    fn send_by_non_source_is_reported() {
        let mut b = SystemBuilder::new();
        let p = b.process("p");
        let q = b.process("q");
        let c = b.channel("c", p, q);
        let m = b.message("m");
        let y0 = b.state(q, "y0");
        b.init(q, y0);
        b.state(p, "z0");
        b.transition(q, y0, Action::Send { channel: c, message: m }, y0);
        let sys = b.build();
        let violations = validate_system(&sys);
        assert!(violations
            .iter()
            .any(|v| matches!(v, Violation::SendByNonSource { process, .. } if process == "q")));
    }

    #[test]
    fn guarded_stack_action_is_reported() {
        let mut b = SystemBuilder::new();
        let p = b.process("p");
        let z0 = b.state(p, "z0");
        b.init(p, z0);
        let a = b.stack_symbol(p, "a");
        b.transition(p, z0, Action::Push(a), z0);
        b.eps_action(p, Action::Push(a));
        let sys = b.build();
        let violations = validate_system(&sys);
        assert!(violations
            .iter()
            .any(|v| matches!(v, Violation::StackActionGuarded { process } if process == "p")));
    }

    #[test]
    fn reversed_topology_swaps_endpoints_and_keeps_marks() {
        let sys = small_valid();
        let rev = sys.topology.reversed();
        assert_eq!(rev.channel(ChannelId(0)).src, ProcessId(1));
        assert_eq!(rev.channel(ChannelId(0)).dst, ProcessId(0));
        assert!(rev.is_restricted(ProcessId(1), ChannelId(0)));
        let back = rev.reversed();
        assert_eq!(back, sys.topology);
    }
}
