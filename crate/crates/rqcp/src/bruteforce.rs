//! Explicit-state reference implementations: bounded exploration of the
//! global transition system, eager-run enumeration, run-level predicates
//! (eagerness, well-formedness, well-bracketing), the constructive
//! mutex-to-eager reordering, and bounded-phase run enumeration.
//!
//! Everything here trades scalability for obvious correctness; the analysis
//! modules are tested against these functions on small instances.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};

use thiserror::Error;

use crate::bounded::{process_kinds, PhaseKind};
use crate::model::{Action, ProcessId, Rqcp, StateId};
use crate::mutex;
use crate::runs::{apply, enabled_moves, matching_pairs, Configuration, Run, RunError, Step};

/// Exploration cut-offs. A branch that would exceed a bound is pruned and the
/// result is flagged as truncated, so callers know whether the exploration is
/// conclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bounds {
    /// Maximum number of messages per channel.
    pub max_channel_len: usize,
    /// Maximum stack height per process.
    pub max_stack_depth: usize,
    /// Maximum run length (number of actions from the start configuration).
    pub max_steps: usize,
}

impl Bounds {
    pub fn new(max_channel_len: usize, max_stack_depth: usize, max_steps: usize) -> Bounds {
        Bounds { max_channel_len, max_stack_depth, max_steps }
    }
}

impl Default for Bounds {
    fn default() -> Bounds {
        Bounds::new(4, 4, 12)
    }
}

fn within_bounds(config: &Configuration, bounds: &Bounds) -> bool {
    config.channels.iter().all(|w| w.len() <= bounds.max_channel_len)
        && config.stacks.iter().all(|u| u.len() <= bounds.max_stack_depth)
}

/// Result of a bounded breadth-first exploration. `configs[0]` is the start
/// configuration; discovery order is deterministic.
#[derive(Debug, Clone)]
pub struct Exploration {
    pub configs: Vec<Configuration>,
    /// True when some branch was cut by a bound: the reachable set may be
    /// larger than `configs`.
    pub truncated: bool,
    parents: Vec<Option<(usize, Vec<Step>)>>,
    index: HashMap<Configuration, usize>,
}

impl Exploration {
    pub fn contains(&self, config: &Configuration) -> bool {
        self.index.contains_key(config)
    }

    pub fn position(&self, config: &Configuration) -> Option<usize> {
        self.index.get(config).copied()
    }

    /// Global control vectors of all explored configurations.
    pub fn control_vectors(&self) -> BTreeSet<Vec<StateId>> {
        self.configs.iter().map(|c| c.control.clone()).collect()
    }

    /// Reconstructs a run from the start configuration to `config`, if it was
    /// explored.
    pub fn witness(&self, config: &Configuration) -> Option<Run> {
        let mut at = *self.index.get(config)?;
        let mut chunks: Vec<&Vec<Step>> = Vec::new();
        while let Some((parent, steps)) = &self.parents[at] {
            chunks.push(steps);
            at = *parent;
        }
        let mut steps = Vec::new();
        for chunk in chunks.into_iter().rev() {
            steps.extend(chunk.iter().cloned());
        }
        Some(Run { initial: self.configs[0].clone(), steps })
    }
}

struct Bfs {
    configs: Vec<Configuration>,
    depths: Vec<usize>,
    parents: Vec<Option<(usize, Vec<Step>)>>,
    index: HashMap<Configuration, usize>,
    queue: VecDeque<usize>,
    truncated: bool,
}

impl Bfs {
    fn start(config: Configuration) -> Bfs {
        let mut bfs = Bfs {
            configs: Vec::new(),
            depths: Vec::new(),
            parents: Vec::new(),
            index: HashMap::new(),
            queue: VecDeque::new(),
            truncated: false,
        };
        bfs.configs.push(config.clone());
        bfs.depths.push(0);
        bfs.parents.push(None);
        bfs.index.insert(config, 0);
        bfs.queue.push_back(0);
        bfs
    }

    /// Records an edge to `config`; returns false when the successor was
    /// pruned by a bound (and marks the exploration truncated).
    fn offer(
        &mut self,
        from: usize,
        steps: Vec<Step>,
        config: Configuration,
        depth: usize,
        bounds: &Bounds,
    ) {
        if !within_bounds(&config, bounds) || depth > bounds.max_steps {
            if !self.index.contains_key(&config) {
                self.truncated = true;
            }
            return;
        }
        if self.index.contains_key(&config) {
            return;
        }
        let id = self.configs.len();
        self.configs.push(config.clone());
        self.depths.push(depth);
        self.parents.push(Some((from, steps)));
        self.index.insert(config, id);
        self.queue.push_back(id);
    }

    fn finish(self) -> Exploration {
        Exploration {
            configs: self.configs,
            truncated: self.truncated,
            parents: self.parents,
            index: self.index,
        }
    }
}

/// All configurations reachable from the initial configuration within the
/// bounds, by breadth-first enumeration of single actions.
pub fn explore_bounded(sys: &Rqcp, bounds: &Bounds) -> Exploration {
    explore_from(sys, Configuration::initial(sys), bounds)
}

/// As [`explore_bounded`], from an arbitrary start configuration.
pub fn explore_from(sys: &Rqcp, start: Configuration, bounds: &Bounds) -> Exploration {
    let mut bfs = Bfs::start(start);
    while let Some(at) = bfs.queue.pop_front() {
        let depth = bfs.depths[at];
        let config = bfs.configs[at].clone();
        for (p, action, next) in enabled_moves(sys, &config) {
            let step = Step { process: p, action, after: next.clone() };
            bfs.offer(at, vec![step], next, depth + 1, bounds);
        }
    }
    bfs.finish()
}

/// Configurations reachable by *eager* runs within the bounds.
///
/// Eager runs contain receives only immediately after their matching send,
/// which (from empty initial channels) happens exactly when the channel was
/// empty before the send: a rendezvous. The enumeration therefore steps by
/// local/stack actions, lone sends (committing the message to stay in the
/// channel forever along that branch), and send-receive rendezvous
/// composites on empty channels. Witness runs chain these composites, so
/// they are eager by construction.
pub fn eager_reach_bruteforce(sys: &Rqcp, bounds: &Bounds) -> Exploration {
    let mut bfs = Bfs::start(Configuration::initial(sys));
    while let Some(at) = bfs.queue.pop_front() {
        let depth = bfs.depths[at];
        let config = bfs.configs[at].clone();
        for p in sys.process_ids() {
            let pd = sys.pushdown(p);
            for &(from, ref action, to) in pd.from(config.control[p.0]) {
                if matches!(action, Action::Recv { .. }) {
                    continue;
                }
                let Some(next) = apply(sys, &config, p, from, action, to) else { continue };
                let step = Step { process: p, action: action.clone(), after: next.clone() };
                if let Action::Send { channel: c, message: m } = *action {
                    if config.channels[c.0].is_empty() {
                        // rendezvous: the receiver consumes the message at once
                        let q = sys.topology.channel(c).dst;
                        let qd = sys.pushdown(q);
                        for &(from2, ref action2, to2) in qd.from(next.control[q.0]) {
                            if *action2 != (Action::Recv { channel: c, message: m }) {
                                continue;
                            }
                            let Some(next2) = apply(sys, &next, q, from2, action2, to2) else {
                                continue;
                            };
                            let steps = vec![
                                step.clone(),
                                Step { process: q, action: action2.clone(), after: next2.clone() },
                            ];
                            bfs.offer(at, steps, next2, depth + 2, bounds);
                        }
                    }
                }
                bfs.offer(at, vec![step], next, depth + 1, bounds);
            }
        }
    }
    bfs.finish()
}

/// True iff every receive in the run immediately follows its matching send.
pub fn is_eager_run(run: &Run) -> bool {
    let matched: HashMap<usize, usize> =
        matching_pairs(run).into_iter().map(|(s, r)| (r, s)).collect();
    run.steps.iter().enumerate().all(|(i, step)| match step.action {
        Action::Recv { .. } => matched.get(&i) == Some(&(i.wrapping_sub(1))),
        _ => true,
    })
}

/// True iff the projection of the run's actions on `p`'s stack actions is a
/// Dyck word: pops match pushes exactly, properly nested, nothing left open.
pub fn is_well_formed(run: &Run, p: ProcessId) -> bool {
    segment_well_formed(run, p, 0, run.len())
}

/// [`is_well_formed`] restricted to the half-open step range `lo..hi`.
fn segment_well_formed(run: &Run, p: ProcessId, lo: usize, hi: usize) -> bool {
    let mut stack = Vec::new();
    for step in &run.steps[lo..hi] {
        if step.process != p {
            continue;
        }
        match step.action {
            Action::Push(s) => stack.push(s),
            Action::Pop(s) => {
                if stack.pop() != Some(s) {
                    return false;
                }
            }
            _ => {}
        }
    }
    stack.is_empty()
}

/// Step-index pairs `(push, pop)` of `p`'s stack actions that match within
/// the run. Pops consuming stack content present before the run are
/// unmatched and yield no pair.
fn stack_pairs(run: &Run, p: ProcessId) -> Vec<(usize, usize)> {
    let mut stack: Vec<Option<usize>> = run.initial.stacks[p.0].iter().map(|_| None).collect();
    let mut out = Vec::new();
    for (i, step) in run.steps.iter().enumerate() {
        if step.process != p {
            continue;
        }
        match step.action {
            Action::Push(_) => stack.push(Some(i)),
            Action::Pop(_) => {
                if let Some(Some(j)) = stack.pop() {
                    out.push((j, i));
                }
            }
            _ => {}
        }
    }
    out.sort();
    out
}

/// True iff push/pop actions of all processes nest without crossing:
/// the union projection on stack actions is a Dyck word over per-process
/// symbols, and between nested matching pairs of the same process, every
/// other process's excursions are closed.
pub fn is_well_bracketed(run: &Run) -> bool {
    // condition 1: union projection is a Dyck word
    let mut stack: Vec<(ProcessId, crate::model::SymbolId)> = Vec::new();
    for step in &run.steps {
        match step.action {
            Action::Push(s) => stack.push((step.process, s)),
            Action::Pop(s) => {
                if stack.pop() != Some((step.process, s)) {
                    return false;
                }
            }
            _ => {}
        }
    }
    if !stack.is_empty() {
        return false;
    }
    // condition 2: across nested matching pairs (h,k) ⊃ (i,j) of a process,
    // the bracketing sub-runs leave every other process's stack balanced
    let procs: BTreeSet<ProcessId> = run.steps.iter().map(|s| s.process).collect();
    for &p in &procs {
        let pairs = stack_pairs(run, p);
        for &(h, k) in &pairs {
            for &(i, j) in &pairs {
                if h < i && j < k {
                    for &q in &procs {
                        if q == p {
                            continue;
                        }
                        // sub-runs carry the actions at indices h..=i and j..=k
                        if !segment_well_formed(run, q, h, i + 1)
                            || !segment_well_formed(run, q, j, k + 1)
                        {
                            return false;
                        }
                    }
                }
            }
        }
    }
    true
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ReorderError {
    #[error("run does not replay: {0}")]
    Invalid(#[from] RunError),
    #[error("run must start with all channels empty")]
    NonEmptyInitialChannels,
    #[error("configuration after {step} steps is not mutex")]
    NotMutex { step: usize },
}

type Quad = (ProcessId, StateId, Action, StateId);

/// Reorders a mutex run into an order-equivalent eager run: same per-process
/// action sequences, same send/receive matching, same final configuration.
///
/// The construction peels actions off the back. If some process's final
/// action is a local action, a stack action, or an unmatched send, it is
/// scheduled last (smallest process index on ties). Otherwise every acting
/// process ends with a matched communication; following each process's final
/// channel to its other endpoint traces a cycle, and the mutex property
/// forces the latest-moving process on that cycle to end with a receive
/// whose matching send is the other endpoint's final action — that pair is
/// scheduled last as a rendezvous. Recursing on the remainder yields the
/// eager run.
pub fn reorder_mutex_to_eager(sys: &Rqcp, run: &Run, weak: bool) -> Result<Run, ReorderError> {
    run.validate(sys)?;
    if run.initial.channels.iter().any(|w| !w.is_empty()) {
        return Err(ReorderError::NonEmptyInitialChannels);
    }
    let relation = mutex::mutex_relation(&sys.topology, weak);
    for i in 0..=run.len() {
        if !mutex::is_mutex_config_with(&relation, run.config_before(i)) {
            return Err(ReorderError::NotMutex { step: i });
        }
    }
    let quads: Vec<Quad> = run
        .steps
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let before = run.config_before(i);
            (s.process, before.control[s.process.0], s.action.clone(), s.after.control[s.process.0])
        })
        .collect();
    let ordered = peel(sys, &run.initial, quads);
    let out = replay_quads(sys, run.initial.clone(), &ordered)
        .expect("reordered mutex run must replay");
    debug_assert!(is_eager_run(&out));
    Ok(out)
}

fn replay_quads(sys: &Rqcp, initial: Configuration, quads: &[Quad]) -> Option<Run> {
    let mut current = initial.clone();
    let mut steps = Vec::with_capacity(quads.len());
    for &(p, from, ref action, to) in quads {
        let next = apply(sys, &current, p, from, action, to)?;
        steps.push(Step { process: p, action: action.clone(), after: next.clone() });
        current = next;
    }
    Some(Run { initial, steps })
}

fn peel(sys: &Rqcp, initial: &Configuration, mut quads: Vec<Quad>) -> Vec<Quad> {
    if quads.is_empty() {
        return quads;
    }
    let run = replay_quads(sys, initial.clone(), &quads).expect("peel input must replay");
    let matched_sends: HashSet<usize> = matching_pairs(&run).into_iter().map(|(s, _)| s).collect();
    let pairs: HashMap<usize, usize> = matching_pairs(&run).into_iter().collect();

    // final action index of each acting process
    let mut last: HashMap<ProcessId, usize> = HashMap::new();
    for (i, &(p, ..)) in quads.iter().enumerate() {
        last.insert(p, i);
    }

    // schedulable tail: a local/stack action or an unmatched send
    let mut candidates: Vec<(ProcessId, usize)> = last
        .iter()
        .filter(|&(_, &i)| match quads[i].2 {
            Action::Send { .. } => !matched_sends.contains(&i),
            Action::Recv { .. } => false,
            _ => true,
        })
        .map(|(&p, &i)| (p, i))
        .collect();
    candidates.sort();
    if let Some(&(_, i)) = candidates.first() {
        let tail = quads.remove(i);
        let mut out = peel(sys, initial, quads);
        out.push(tail);
        return out;
    }

    // every acting process ends with a matched communication: walk the
    // last-peer map until a process repeats, giving a cycle of channels
    let peer = |p: ProcessId| -> ProcessId {
        let c = quads[last[&p]].2.channel().expect("matched communication has a channel");
        sys.topology.peer(p, c).expect("channel endpoint")
    };
    let start = *last.keys().min().expect("nonempty run has acting processes");
    let mut walk = vec![start];
    let cycle: Vec<ProcessId> = loop {
        let next = peer(*walk.last().expect("walk nonempty"));
        if let Some(pos) = walk.iter().position(|&q| q == next) {
            break walk[pos..].to_vec();
        }
        walk.push(next);
    };
    // rotate so the latest-moving process on the cycle comes first
    let latest = cycle
        .iter()
        .enumerate()
        .max_by_key(|(_, q)| last[q])
        .map(|(i, _)| i)
        .expect("cycle nonempty");
    let p0 = cycle[latest];
    let p1 = peer(p0);
    let (i0, i1) = (last[&p0], last[&p1]);
    // the mutex property forces p0's final action to be a receive matched by
    // p1's final send on the same channel
    assert!(
        matches!(quads[i0].2, Action::Recv { .. }) && pairs.get(&i1) == Some(&i0),
        "mutex invariant violated while peeling",
    );
    let recv = quads.remove(i0.max(i1));
    let send = quads.remove(i0.min(i1));
    debug_assert!(matches!(send.2, Action::Send { .. }));
    let mut out = peel(sys, initial, quads);
    out.push(send);
    out.push(recv);
    out
}

/// Outcome of the bounded-phase brute-force search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KphaseOutcome {
    pub reachable: bool,
    /// True when some branch was cut by a bound.
    pub truncated: bool,
}

/// Searches for a within-bounds run reaching the target control vector that
/// splits into at most `k` single-process segments, each of whose
/// communication fits some mux/demux phase kind (communication-free segments
/// fit vacuously).
///
/// Segments are closed greedily: since extending a segment only shrinks the
/// set of kinds it can still assume, maximal segments minimise the segment
/// count of any fixed action sequence, so greedy segmentation finds a ≤ k
/// split whenever one exists.
pub fn kphase_reach_bruteforce(
    sys: &Rqcp,
    target: &[StateId],
    k: usize,
    bounds: &Bounds,
) -> KphaseOutcome {
    let topo = &sys.topology;
    let kinds: Vec<Vec<PhaseKind>> =
        sys.process_ids().map(|p| process_kinds(topo, p)).collect();

    type SegState = (Configuration, usize, Option<(ProcessId, BTreeSet<PhaseKind>)>);
    let initial = Configuration::initial(sys);
    if initial.control == target {
        return KphaseOutcome { reachable: true, truncated: false };
    }
    let mut truncated = false;
    let start: SegState = (initial, 0, None);
    let mut seen: HashSet<SegState> = [start.clone()].into_iter().collect();
    let mut queue: VecDeque<(SegState, usize)> = [(start, 0)].into();

    while let Some(((config, closed, active), depth)) = queue.pop_front() {
        if depth == bounds.max_steps {
            if !enabled_moves(sys, &config).is_empty() {
                truncated = true;
            }
            continue;
        }
        for (p, action, next) in enabled_moves(sys, &config) {
            if !within_bounds(&next, bounds) {
                truncated = true;
                continue;
            }
            let fresh = || -> BTreeSet<PhaseKind> {
                kinds[p.0].iter().filter(|kind| kind.allows(topo, p, &action)).cloned().collect()
            };
            let (closed2, survivors) = match &active {
                Some((q, set)) if *q == p => {
                    let kept: BTreeSet<PhaseKind> =
                        set.iter().filter(|kind| kind.allows(topo, p, &action)).cloned().collect();
                    if kept.is_empty() {
                        (closed + 1, fresh())
                    } else {
                        (closed, kept)
                    }
                }
                Some(_) => (closed + 1, fresh()),
                None => (closed, fresh()),
            };
            if survivors.is_empty() {
                // the action fits no phase kind at all: the run cannot be
                // segmented, with any budget
                continue;
            }
            if closed2 + 1 > k {
                continue;
            }
            if next.control == target {
                return KphaseOutcome { reachable: true, truncated };
            }
            let state: SegState = (next, closed2, Some((p, survivors)));
            if seen.insert(state.clone()) {
                queue.push_back((state, depth + 1));
            }
        }
    }
    KphaseOutcome { reachable: false, truncated }
}
