//! Seeded random instances for differential testing.
//!
//! Every generator takes a caller-owned RNG so test failures replay from a
//! reported seed. Sizes are kept small enough for the brute-force oracles
//! to stay conclusive most of the time.

use rand::Rng;

use crate::bounded::{process_kinds, MdSequence, Phase};
use crate::model::{
    validate_system, Action, ChannelId, MessageId, ProcessId, PushdownProcess, Rqcp, StateId,
    SymbolId, TypedTopology,
};
use crate::topology::is_converging;

/// Size limits for [`random_system`].
#[derive(Debug, Clone, Copy)]
pub struct GenLimits {
    pub max_processes: usize,
    pub max_channels: usize,
    pub max_states: usize,
    pub max_symbols: usize,
    pub max_messages: usize,
    pub max_transitions: usize,
}

impl Default for GenLimits {
    fn default() -> GenLimits {
        GenLimits {
            max_processes: 3,
            max_channels: 3,
            max_states: 4,
            max_symbols: 2,
            max_messages: 2,
            max_transitions: 6,
        }
    }
}

/// How channel restriction marks are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RestrictionStyle {
    /// Each endpoint restricted independently with probability 1/2.
    Free,
    /// Exactly one endpoint of every channel is restricted.
    OneEnd,
}

/// A random validated system within `limits`. Restricted communications are
/// empty-stack guarded; some local actions are guarded too; stack actions
/// never are.
pub fn random_system<R: Rng>(rng: &mut R, limits: &GenLimits, style: RestrictionStyle) -> Rqcp {
    let n_procs = rng.gen_range(1..=limits.max_processes);
    let n_chans = if n_procs < 2 { 0 } else { rng.gen_range(0..=limits.max_channels) };
    let n_msgs = rng.gen_range(1..=limits.max_messages);

    let processes: Vec<String> = (0..n_procs).map(|i| format!("p{i}")).collect();
    let mut channels = Vec::with_capacity(n_chans);
    let mut restricted = std::collections::BTreeSet::new();
    for i in 0..n_chans {
        let src = ProcessId(rng.gen_range(0..n_procs));
        let mut dst = ProcessId(rng.gen_range(0..n_procs - 1));
        if dst.0 >= src.0 {
            dst.0 += 1;
        }
        let c = ChannelId(i);
        match style {
            RestrictionStyle::Free => {
                if rng.gen_bool(0.5) {
                    restricted.insert((src, c));
                }
                if rng.gen_bool(0.5) {
                    restricted.insert((dst, c));
                }
            }
            RestrictionStyle::OneEnd => {
                restricted.insert((if rng.gen_bool(0.5) { src } else { dst }, c));
            }
        }
        channels.push(crate::model::Channel { name: format!("c{i}"), src, dst });
    }
    let topology = TypedTopology { processes, channels, restricted };

    let messages: Vec<String> = (0..n_msgs).map(|i| format!("m{i}")).collect();
    let mut pushdowns = Vec::with_capacity(n_procs);
    for p in 0..n_procs {
        let p = ProcessId(p);
        let n_states = rng.gen_range(1..=limits.max_states);
        let n_syms = rng.gen_range(0..=limits.max_symbols);
        let outgoing: Vec<ChannelId> =
            topology.channel_ids().filter(|&c| topology.channel(c).src == p).collect();
        let incoming: Vec<ChannelId> =
            topology.channel_ids().filter(|&c| topology.channel(c).dst == p).collect();
        let mut transitions = Vec::new();
        let n_trans = rng.gen_range(0..=limits.max_transitions);
        for _ in 0..n_trans {
            let from = StateId(rng.gen_range(0..n_states));
            let to = StateId(rng.gen_range(0..n_states));
            let roll = rng.gen_range(0u32..100);
            let action = if roll < 40 || (n_syms == 0 && outgoing.is_empty() && incoming.is_empty())
            {
                Action::Local(rng.gen_range(0..3))
            } else if roll < 70 && n_syms > 0 {
                let s = SymbolId(rng.gen_range(0..n_syms));
                if rng.gen_bool(0.5) {
                    Action::Push(s)
                } else {
                    Action::Pop(s)
                }
            } else if roll < 85 && !outgoing.is_empty() {
                Action::Send {
                    channel: outgoing[rng.gen_range(0..outgoing.len())],
                    message: MessageId(rng.gen_range(0..n_msgs)),
                }
            } else if !incoming.is_empty() {
                Action::Recv {
                    channel: incoming[rng.gen_range(0..incoming.len())],
                    message: MessageId(rng.gen_range(0..n_msgs)),
                }
            } else {
                Action::Local(rng.gen_range(0..3))
            };
            transitions.push((from, action, to));
        }
        // guards: every restricted communication, plus some local actions
        let mut eps_actions = std::collections::BTreeSet::new();
        for (_, action, _) in &transitions {
            match action {
                Action::Send { channel, .. } | Action::Recv { channel, .. } => {
                    if topology.is_restricted(p, *channel) || rng.gen_bool(0.15) {
                        eps_actions.insert(action.clone());
                    }
                }
                Action::Local(_) => {
                    if rng.gen_bool(0.25) {
                        eps_actions.insert(action.clone());
                    }
                }
                _ => {}
            }
        }
        pushdowns.push(PushdownProcess {
            states: (0..n_states).map(|i| format!("s{i}")).collect(),
            init: StateId(rng.gen_range(0..n_states)),
            stack_alphabet: (0..n_syms).map(|i| format!("a{i}")).collect(),
            transitions,
            eps_actions,
        });
    }
    let sys = Rqcp { topology, messages, pushdowns };
    debug_assert!(validate_system(&sys).is_empty(), "{:?}", validate_system(&sys));
    sys
}

/// A random validated system on a non-converging typed topology: convergence
/// witnesses are repaired by restricting the offending path end, and guards
/// are re-synchronized afterwards.
pub fn random_nonconverging_rqcp<R: Rng>(rng: &mut R) -> Rqcp {
    let mut sys = random_system(rng, &GenLimits::default(), RestrictionStyle::Free);
    while let Some(path) = is_converging(&sys.topology) {
        let (c, _) = path.hops[0];
        sys.topology.restricted.insert((path.start, c));
    }
    // newly restricted endpoints need their communications guarded
    for p in 0..sys.pushdowns.len() {
        let mut guards = Vec::new();
        for (_, action, _) in &sys.pushdowns[p].transitions {
            if let Some(c) = action.channel() {
                if sys.topology.is_restricted(ProcessId(p), c) {
                    guards.push(action.clone());
                }
            }
        }
        sys.pushdowns[p].eps_actions.extend(guards);
    }
    debug_assert!(validate_system(&sys).is_empty());
    sys
}

/// A random validated finite system (no stacks at all).
pub fn random_finite_qcp<R: Rng>(rng: &mut R) -> Rqcp {
    let limits = GenLimits { max_symbols: 0, ..GenLimits::default() };
    random_system(rng, &limits, RestrictionStyle::Free)
}

/// A random standalone pushdown over locals and stack actions, some locals
/// guarded; for exercising saturation against bounded search.
pub fn random_pushdown<R: Rng>(rng: &mut R) -> PushdownProcess {
    let n_states = rng.gen_range(1..=5);
    let n_syms = rng.gen_range(1..=2);
    let n_trans = rng.gen_range(0..=8);
    let mut transitions = Vec::new();
    let mut eps_actions = std::collections::BTreeSet::new();
    for _ in 0..n_trans {
        let from = StateId(rng.gen_range(0..n_states));
        let to = StateId(rng.gen_range(0..n_states));
        let roll = rng.gen_range(0u32..100);
        let action = if roll < 40 {
            let l = rng.gen_range(0..3);
            if rng.gen_bool(0.3) {
                eps_actions.insert(Action::Local(l));
            }
            Action::Local(l)
        } else {
            let s = SymbolId(rng.gen_range(0..n_syms));
            if rng.gen_bool(0.5) {
                Action::Push(s)
            } else {
                Action::Pop(s)
            }
        };
        transitions.push((from, action, to));
    }
    PushdownProcess {
        states: (0..n_states).map(|i| format!("s{i}")).collect(),
        init: StateId(rng.gen_range(0..n_states)),
        stack_alphabet: (0..n_syms).map(|i| format!("a{i}")).collect(),
        transitions,
        eps_actions,
    }
}

/// A random validated md-sequence: two processes, channels restricted at
/// exactly one end, at most three phases whose pushdowns respect their
/// kinds, shared stack alphabets, guard consistency, and the guard on
/// restricted communications.
pub fn random_md_sequence<R: Rng>(rng: &mut R) -> MdSequence {
    let n_procs = 2;
    let n_chans = rng.gen_range(1..=2);
    let processes: Vec<String> = (0..n_procs).map(|i| format!("p{i}")).collect();
    let mut channels = Vec::new();
    let mut restricted = std::collections::BTreeSet::new();
    for i in 0..n_chans {
        let src = ProcessId(rng.gen_range(0..n_procs));
        let dst = ProcessId(1 - src.0);
        let c = ChannelId(i);
        restricted.insert((if rng.gen_bool(0.5) { src } else { dst }, c));
        channels.push(crate::model::Channel { name: format!("c{i}"), src, dst });
    }
    let topology = TypedTopology { processes, channels, restricted };
    let n_msgs = rng.gen_range(1..=2);
    let messages: Vec<String> = (0..n_msgs).map(|i| format!("m{i}")).collect();

    // per-process stack alphabet, fixed across phases
    let alphabets: Vec<Vec<String>> = (0..n_procs)
        .map(|_| (0..rng.gen_range(0..=1)).map(|i| format!("a{i}")).collect())
        .collect();
    // guard status per (process, action), fixed on first use
    let mut guards: std::collections::BTreeMap<(usize, Action), bool> =
        std::collections::BTreeMap::new();

    let k = rng.gen_range(1..=3);
    let mut phases = Vec::with_capacity(k);
    for _ in 0..k {
        let p = ProcessId(rng.gen_range(0..n_procs));
        let kinds = process_kinds(&topology, p);
        let kind = kinds[rng.gen_range(0..kinds.len())];
        let n_states = rng.gen_range(1..=3);
        let n_syms = alphabets[p.0].len();
        let candidates: Vec<Action> = {
            let mut out = vec![Action::Local(0), Action::Local(1)];
            for s in 0..n_syms {
                out.push(Action::Push(SymbolId(s)));
                out.push(Action::Pop(SymbolId(s)));
            }
            for c in topology.channel_ids() {
                for m in 0..n_msgs {
                    let send = Action::Send { channel: c, message: MessageId(m) };
                    let recv = Action::Recv { channel: c, message: MessageId(m) };
                    if topology.channel(c).src == p && kind.allows(&topology, p, &send) {
                        out.push(send);
                    }
                    if topology.channel(c).dst == p && kind.allows(&topology, p, &recv) {
                        out.push(recv);
                    }
                }
            }
            out
        };
        let mut transitions = Vec::new();
        let mut eps_actions = std::collections::BTreeSet::new();
        for _ in 0..rng.gen_range(0..=4) {
            let from = StateId(rng.gen_range(0..n_states));
            let to = StateId(rng.gen_range(0..n_states));
            let action = candidates[rng.gen_range(0..candidates.len())].clone();
            let guarded = *guards.entry((p.0, action.clone())).or_insert_with(|| {
                if action.is_stack() {
                    false
                } else if action.channel().is_some_and(|c| topology.is_restricted(p, c)) {
                    true
                } else {
                    rng.gen_bool(0.3)
                }
            });
            if guarded {
                eps_actions.insert(action.clone());
            }
            transitions.push((from, action, to));
        }
        phases.push(Phase {
            process: p,
            pushdown: PushdownProcess {
                states: (0..n_states).map(|i| format!("s{i}")).collect(),
                init: StateId(rng.gen_range(0..n_states)),
                stack_alphabet: alphabets[p.0].clone(),
                transitions,
                eps_actions,
            },
            final_state: StateId(rng.gen_range(0..n_states)),
            kind,
        });
    }
    let seq = MdSequence { topology, messages, phases };
    debug_assert_eq!(seq.validate(), Ok(()));
    seq
}

/// A random validated system suitable for the phase-bounded driver: two
/// processes, every channel restricted at exactly one end, small state
/// spaces and at most one stack symbol per process.
pub fn random_driver_system<R: Rng>(rng: &mut R) -> Rqcp {
    let limits = GenLimits {
        max_processes: 2,
        max_channels: 2,
        max_states: 3,
        max_symbols: 1,
        max_transitions: 5,
        ..GenLimits::default()
    };
    loop {
        let sys = random_system(rng, &limits, RestrictionStyle::OneEnd);
        // the driver needs at least one channel to be interesting, and two
        // processes so phases alternate
        if sys.process_count() == 2 && sys.topology.channel_count() >= 1 {
            return sys;
        }
    }
}

/// A uniformly random control-state target vector for `sys`.
pub fn random_target<R: Rng>(rng: &mut R, sys: &Rqcp) -> Vec<StateId> {
    sys.pushdowns.iter().map(|pd| StateId(rng.gen_range(0..pd.state_count()))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generated_systems_validate_and_are_nonconverging() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let sys = random_nonconverging_rqcp(&mut rng);
            assert!(validate_system(&sys).is_empty());
            assert!(is_converging(&sys.topology).is_none());
        }
    }

    #[test]
    fn generated_finite_systems_have_no_stacks() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..100 {
            let sys = random_finite_qcp(&mut rng);
            assert!(validate_system(&sys).is_empty());
            assert!(sys.pushdowns.iter().all(|pd| pd.stack_alphabet.is_empty()));
        }
    }

    #[test]
    fn generated_md_sequences_validate() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let seq = random_md_sequence(&mut rng);
            assert_eq!(seq.validate(), Ok(()));
            assert!(seq.phases.len() <= 3);
        }
    }

    #[test]
    fn generated_driver_systems_restrict_exactly_one_end() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..100 {
            let sys = random_driver_system(&mut rng);
            assert!(validate_system(&sys).is_empty());
            for c in sys.topology.channel_ids() {
                let ch = sys.topology.channel(c);
                let marks = usize::from(sys.topology.is_restricted(ch.src, c))
                    + usize::from(sys.topology.is_restricted(ch.dst, c));
                assert_eq!(marks, 1);
            }
        }
    }

    #[test]
    fn generation_is_deterministic_per_seed() {
        let a = random_nonconverging_rqcp(&mut ChaCha8Rng::seed_from_u64(42));
        let b = random_nonconverging_rqcp(&mut ChaCha8Rng::seed_from_u64(42));
        assert_eq!(a, b);
    }
}
