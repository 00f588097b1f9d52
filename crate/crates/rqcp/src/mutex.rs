//! The mutex property for finite systems: in every reachable configuration,
//! each simple undirected cycle of the topology has at most one nonempty
//! channel.
//!
//! Mutex systems matter because their runs reorder into eager runs, so the
//! eager analyses are exact for them. The check explores the abstraction of
//! eager runs for finite processes — (control vector, set of nonempty
//! channels) — which is exact because along an eager run a nonempty channel
//! never admits another receive, making channel *contents* behaviorally
//! irrelevant. A violation, if any, is witnessed by an abstract
//! configuration together with an enabled send that would make two
//! co-cyclic channels simultaneously nonempty; the minimal-counterexample
//! argument (the prefix of a shortest violating run is mutex, hence
//! order-equivalent to an eager run) makes this complete.

use std::collections::{BTreeSet, HashMap, VecDeque};

use thiserror::Error;

use crate::eager::finite_eager_successors;
use crate::model::{Action, ChannelId, MessageId, ProcessId, Rqcp, StateId, TypedTopology};
use crate::runs::Configuration;
use crate::topology::{co_cycle_relation, cycle_adjacency_relation, is_polyforest, ChannelRelation};

/// The channel relation whose pairs must never be simultaneously nonempty.
///
/// The strong property uses co-cyclicity (at most one nonempty channel per
/// cycle); the weak variant only constrains channels *adjacent* on a common
/// cycle, which is still enough for the reordering into eager runs.
pub fn mutex_relation(topo: &TypedTopology, weak: bool) -> ChannelRelation {
    if weak {
        cycle_adjacency_relation(topo)
    } else {
        co_cycle_relation(topo)
    }
}

/// Checks a configuration against a precomputed mutex relation.
pub fn is_mutex_config_with(relation: &ChannelRelation, config: &Configuration) -> bool {
    let nonempty: Vec<ChannelId> =
        config.nonempty_channels().into_iter().map(ChannelId).collect();
    is_mutex_set(relation, &nonempty)
}

/// Checks a set of nonempty channels against a precomputed mutex relation:
/// no two *distinct* related channels may both be present.
pub fn is_mutex_set(relation: &ChannelRelation, nonempty: &[ChannelId]) -> bool {
    for (i, &a) in nonempty.iter().enumerate() {
        for &b in &nonempty[i + 1..] {
            if relation.related(a, b) {
                return false;
            }
        }
    }
    true
}

/// True iff the configuration has at most one nonempty channel on every
/// simple undirected cycle (or, weakly, no two adjacent cycle channels
/// nonempty).
pub fn is_mutex_config(topo: &TypedTopology, config: &Configuration, weak: bool) -> bool {
    is_mutex_config_with(&mutex_relation(topo, weak), config)
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MutexInputError {
    #[error("process {0} has a stack alphabet; the mutex check handles finite processes only")]
    NotFinite(usize),
}

/// An enabled send whose execution would put two related channels
/// simultaneously nonempty.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SendViolation {
    pub process: ProcessId,
    pub channel: ChannelId,
    pub message: MessageId,
    /// The already-nonempty channel related to `channel`.
    pub clashes_with: ChannelId,
}

/// An abstract reachable configuration plus the send that breaks mutual
/// exclusion from it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MutexWitness {
    /// Control vector of the violating abstract configuration.
    pub control: Vec<StateId>,
    /// Channels nonempty in it.
    pub nonempty: BTreeSet<ChannelId>,
    /// The offending send; `None` when the configuration itself already
    /// violates the property.
    pub send: Option<SendViolation>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MutexVerdict {
    Mutex,
    NotMutex(MutexWitness),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MutexReport {
    pub verdict: MutexVerdict,
    /// Abstract configurations explored; zero when the polyforest
    /// short-circuit applies.
    pub states_explored: usize,
}

/// Decides the mutex property of a finite system.
///
/// Polyforest topologies are vacuously mutex and short-circuit without
/// exploration. Otherwise the (control vector, nonempty set) abstraction of
/// eager runs is explored exhaustively; the system is not mutex iff from
/// some explored abstract configuration a syntactically enabled send would
/// make two related channels simultaneously nonempty.
pub fn check_mutex(sys: &Rqcp, weak: bool) -> Result<MutexReport, MutexInputError> {
    if let Some(p) = sys.pushdowns.iter().position(|pd| !pd.stack_alphabet.is_empty()) {
        return Err(MutexInputError::NotFinite(p));
    }
    if is_polyforest(&sys.topology) {
        return Ok(MutexReport { verdict: MutexVerdict::Mutex, states_explored: 0 });
    }
    let relation = mutex_relation(&sys.topology, weak);

    let init: (Vec<StateId>, BTreeSet<ChannelId>) =
        (sys.pushdowns.iter().map(|pd| pd.init).collect(), BTreeSet::new());
    let mut seen: HashMap<(Vec<StateId>, BTreeSet<ChannelId>), ()> = HashMap::new();
    seen.insert(init.clone(), ());
    let mut queue = VecDeque::from([init]);
    let mut explored = 0usize;

    while let Some((control, nonempty)) = queue.pop_front() {
        explored += 1;
        let nonempty_vec: Vec<ChannelId> = nonempty.iter().cloned().collect();
        if !is_mutex_set(&relation, &nonempty_vec) {
            return Ok(MutexReport {
                verdict: MutexVerdict::NotMutex(MutexWitness {
                    control,
                    nonempty,
                    send: None,
                }),
                states_explored: explored,
            });
        }
        // a violation manifests as an enabled send making a related pair
        // both-nonempty
        for (p, pd) in sys.pushdowns.iter().enumerate() {
            for &(_, ref action, _) in pd.from(control[p]) {
                let Action::Send { channel: c, message: m } = *action else { continue };
                if nonempty.contains(&c) {
                    continue; // already nonempty: adds nothing new
                }
                for &d in &nonempty_vec {
                    if d != c && relation.related(c, d) {
                        return Ok(MutexReport {
                            verdict: MutexVerdict::NotMutex(MutexWitness {
                                control,
                                nonempty,
                                send: Some(SendViolation {
                                    process: ProcessId(p),
                                    channel: c,
                                    message: m,
                                    clashes_with: d,
                                }),
                            }),
                            states_explored: explored,
                        });
                    }
                }
            }
        }
        for (control2, nonempty2) in finite_eager_successors(sys, &control, &nonempty) {
            let key = (control2, nonempty2);
            if !seen.contains_key(&key) {
                seen.insert(key.clone(), ());
                queue.push_back(key);
            }
        }
    }
    Ok(MutexReport { verdict: MutexVerdict::Mutex, states_explored: explored })
}
