//! Reachability for a single pushdown process via automaton saturation.
//!
//! Sets of configurations `(state, stack)` are represented by a finite
//! automaton whose states include the pushdown's control states: the
//! automaton accepts `(z, u)` when it accepts the stack word `u` read
//! top-first starting from `z`. [`saturate`] computes the representation of
//! the forward reachability set (`post*`) of an initial set by adding
//! transitions until closure:
//!
//! * `z --push γ--> z'` contributes the automaton edge `z' -γ-> z`;
//! * `z --local--> z'` contributes the silent edge `z' -ε-> z`;
//! * `z --pop γ--> z'` contributes `z' -ε-> q` for every `q` with
//!   `z -γ-> q` (silent closure included);
//! * an empty-stack guarded local `z --l--> z'` contributes, once the empty
//!   stack word is accepted from `z`, a silent edge from `z'` to a fresh
//!   accepting sink, making `(z', ε)` accepted.
//!
//! The guard rule re-fires as acceptance grows, so guarded transitions are
//! re-examined until a fixpoint. Communication actions are rejected: callers
//! strip them or refuse the input.
//!
//! The worklist keeps the edge set closed under silent-edge composition
//! (`a -ε-> b -γ-> c` materializes `a -γ-> c`, and silent edges are
//! transitively closed), so rule applicability is a direct lookup.

use std::collections::{BTreeSet, HashSet, VecDeque};

use thiserror::Error;

use crate::model::{Action, PushdownProcess, StateId, SymbolId};

/// Finite automaton over stack symbols representing a set of pushdown
/// configurations. States `0..control_count` are the pushdown's control
/// states; higher indices are auxiliary. Words are read top-first.
#[derive(Debug, Clone)]
pub struct PAutomaton {
    pub control_count: usize,
    pub state_count: usize,
    pub transitions: BTreeSet<(usize, SymbolId, usize)>,
    pub eps: BTreeSet<(usize, usize)>,
    pub accepting: BTreeSet<usize>,
}

impl PAutomaton {
    /// An automaton accepting exactly the single configuration `(z, ε)`.
    pub fn empty_stack_at(control_count: usize, z: StateId) -> PAutomaton {
        let sink = control_count;
        let mut eps = BTreeSet::new();
        eps.insert((z.0, sink));
        PAutomaton {
            control_count,
            state_count: control_count + 1,
            transitions: BTreeSet::new(),
            eps,
            accepting: [sink].into_iter().collect(),
        }
    }

    fn eps_closure(&self, from: usize) -> BTreeSet<usize> {
        let mut seen: BTreeSet<usize> = [from].into_iter().collect();
        let mut queue = vec![from];
        while let Some(a) = queue.pop() {
            for &(x, y) in self.eps.range((a, 0)..(a + 1, 0)) {
                debug_assert_eq!(x, a);
                if seen.insert(y) {
                    queue.push(y);
                }
            }
        }
        seen
    }

    /// Membership test: is `(z, stack)` in the represented set? The stack is
    /// given bottom-to-top and read in reverse.
    pub fn accepts(&self, z: StateId, stack: &[SymbolId]) -> bool {
        let mut current = self.eps_closure(z.0);
        for sym in stack.iter().rev() {
            let mut next = BTreeSet::new();
            for &a in &current {
                for &(x, s, y) in self.transitions.range((a, SymbolId(0), 0)..(a + 1, SymbolId(0), 0))
                {
                    debug_assert_eq!(x, a);
                    if s == *sym {
                        next.extend(self.eps_closure(y));
                    }
                }
            }
            if next.is_empty() {
                return false;
            }
            current = next;
        }
        current.iter().any(|a| self.accepting.contains(a))
    }

    /// Control states from which at least one stack word is accepted.
    pub fn nonempty_language_states(&self) -> BTreeSet<StateId> {
        // a state accepts something iff it can reach an accepting state over
        // any mix of edges
        let mut reach_accepting: HashSet<usize> = self.accepting.iter().cloned().collect();
        // backward closure over all edges
        let mut changed = true;
        while changed {
            changed = false;
            for &(a, b) in &self.eps {
                if reach_accepting.contains(&b) && reach_accepting.insert(a) {
                    changed = true;
                }
            }
            for &(a, _, b) in &self.transitions {
                if reach_accepting.contains(&b) && reach_accepting.insert(a) {
                    changed = true;
                }
            }
        }
        (0..self.control_count)
            .filter(|i| reach_accepting.contains(i))
            .map(StateId)
            .collect()
    }

    /// Control states accepting the empty stack word.
    pub fn empty_stack_states(&self) -> BTreeSet<StateId> {
        (0..self.control_count)
            .map(StateId)
            .filter(|&z| self.accepts(z, &[]))
            .collect()
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SaturateError {
    #[error("pushdown has communication actions; strip them before saturating")]
    CommunicationAction,
    #[error("initial automaton has a transition into a control state")]
    EdgeIntoControlState,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum Edge {
    Sym(usize, SymbolId, usize),
    Eps(usize, usize),
}

/// Saturates `initial` into a representation of all configurations reachable
/// from the represented set under `pd`'s stack and local transitions.
pub fn saturate(pd: &PushdownProcess, initial: &PAutomaton) -> Result<PAutomaton, SaturateError> {
    if pd.transitions.iter().any(|(_, a, _)| a.is_comm()) {
        return Err(SaturateError::CommunicationAction);
    }
    // soundness requires the caller's automaton to have no edges into
    // control states; rule-added edges may.
    if initial
        .transitions
        .iter()
        .map(|&(_, _, b)| b)
        .chain(initial.eps.iter().map(|&(_, b)| b))
        .any(|b| b < initial.control_count)
    {
        return Err(SaturateError::EdgeIntoControlState);
    }

    let mut aut = initial.clone();
    let sink = aut.state_count;
    aut.state_count += 1;
    aut.accepting.insert(sink);

    // index rules by kind
    let mut push_rules: Vec<(usize, SymbolId, usize)> = Vec::new();
    let mut pop_rules: Vec<Vec<(SymbolId, usize)>> = vec![Vec::new(); pd.state_count()];
    let mut local_rules: Vec<(usize, usize)> = Vec::new();
    let mut guarded_rules: Vec<Vec<usize>> = vec![Vec::new(); pd.state_count()];
    for (from, action, to) in &pd.transitions {
        match action {
            Action::Push(s) => push_rules.push((from.0, *s, to.0)),
            Action::Pop(s) => pop_rules[from.0].push((*s, to.0)),
            Action::Local(_) => {
                if pd.is_eps(action) {
                    guarded_rules[from.0].push(to.0);
                } else {
                    local_rules.push((from.0, to.0));
                }
            }
            _ => unreachable!("communication actions rejected above"),
        }
    }

    let mut trans: HashSet<(usize, SymbolId, usize)> = aut.transitions.iter().cloned().collect();
    let mut eps: HashSet<(usize, usize)> = aut.eps.iter().cloned().collect();
    let mut trans_fwd: Vec<Vec<(SymbolId, usize)>> = vec![Vec::new(); aut.state_count];
    let mut eps_fwd: Vec<Vec<usize>> = vec![Vec::new(); aut.state_count];
    let mut eps_bwd: Vec<Vec<usize>> = vec![Vec::new(); aut.state_count];
    let mut queue: VecDeque<Edge> = VecDeque::new();

    for &(a, s, b) in trans.iter() {
        trans_fwd[a].push((s, b));
        queue.push_back(Edge::Sym(a, s, b));
    }
    for &(a, b) in eps.iter() {
        eps_fwd[a].push(b);
        eps_bwd[b].push(a);
        queue.push_back(Edge::Eps(a, b));
    }

    // unconditional rule edges
    let mut pending: Vec<Edge> = Vec::new();
    for &(z, s, z2) in &push_rules {
        pending.push(Edge::Sym(z2, s, z));
    }
    for &(z, z2) in &local_rules {
        pending.push(Edge::Eps(z2, z));
    }

    let accepts_empty = |eps_fwd: &Vec<Vec<usize>>, accepting: &BTreeSet<usize>, z: usize| {
        accepting.contains(&z) || eps_fwd[z].iter().any(|t| accepting.contains(t))
    };

    loop {
        for e in pending.drain(..) {
            match e {
                Edge::Sym(a, s, b) => {
                    if trans.insert((a, s, b)) {
                        trans_fwd[a].push((s, b));
                        queue.push_back(Edge::Sym(a, s, b));
                    }
                }
                Edge::Eps(a, b) => {
                    if a != b && eps.insert((a, b)) {
                        eps_fwd[a].push(b);
                        eps_bwd[b].push(a);
                        queue.push_back(Edge::Eps(a, b));
                    }
                }
            }
        }
        let Some(edge) = queue.pop_front() else { break };
        match edge {
            Edge::Sym(a, s, b) => {
                // pop rules fire on materialized symbol edges from their source
                if a < pd.state_count() {
                    for &(sym, z2) in &pop_rules[a] {
                        if sym == s {
                            pending.push(Edge::Eps(z2, b));
                        }
                    }
                }
                // left-compose with silent edges into a
                for i in 0..eps_bwd[a].len() {
                    let x = eps_bwd[a][i];
                    pending.push(Edge::Sym(x, s, b));
                }
            }
            Edge::Eps(a, b) => {
                // transitive closure
                for i in 0..eps_fwd[b].len() {
                    let c = eps_fwd[b][i];
                    pending.push(Edge::Eps(a, c));
                }
                for i in 0..eps_bwd[a].len() {
                    let x = eps_bwd[a][i];
                    pending.push(Edge::Eps(x, b));
                }
                // compose with symbol edges out of b
                for i in 0..trans_fwd[b].len() {
                    let (s, c) = trans_fwd[b][i];
                    pending.push(Edge::Sym(a, s, c));
                }
                // guarded locals from a, now that (a, ε) may be accepted
                if a < pd.state_count()
                    && !guarded_rules[a].is_empty()
                    && accepts_empty(&eps_fwd, &aut.accepting, a)
                {
                    for &z2 in &guarded_rules[a] {
                        pending.push(Edge::Eps(z2, sink));
                    }
                }
            }
        }
        if queue.is_empty() && pending.is_empty() {
            // final sweep for guarded rules on states that accept ε via
            // edges processed before their guard target became accepting
            for z in 0..pd.state_count() {
                if !guarded_rules[z].is_empty() && accepts_empty(&eps_fwd, &aut.accepting, z) {
                    for &z2 in &guarded_rules[z] {
                        let e = (z2, sink);
                        if e.0 != e.1 && !eps.contains(&e) {
                            pending.push(Edge::Eps(e.0, e.1));
                        }
                    }
                }
            }
            if pending.is_empty() {
                break;
            }
        }
    }

    aut.transitions = trans.into_iter().collect();
    aut.eps = eps.into_iter().collect();
    Ok(aut)
}

/// Control states reachable from `(from, ε)`, regardless of stack content.
pub fn control_reachable(
    pd: &PushdownProcess,
    from: StateId,
) -> Result<BTreeSet<StateId>, SaturateError> {
    let aut = saturate(pd, &PAutomaton::empty_stack_at(pd.state_count(), from))?;
    Ok(aut.nonempty_language_states())
}

/// Control states `z'` such that `(from, ε)` reaches `(z', ε)`.
pub fn empty_to_empty(
    pd: &PushdownProcess,
    from: StateId,
) -> Result<BTreeSet<StateId>, SaturateError> {
    let aut = saturate(pd, &PAutomaton::empty_stack_at(pd.state_count(), from))?;
    Ok(aut.empty_stack_states())
}

/// The relation of empty-stack to empty-stack reachability over all control
/// state pairs. Reflexive (the empty run) and transitively closed (runs
/// compose).
pub fn empty_pairs(pd: &PushdownProcess) -> Result<BTreeSet<(StateId, StateId)>, SaturateError> {
    let mut out = BTreeSet::new();
    for z in 0..pd.state_count() {
        for z2 in empty_to_empty(pd, StateId(z))? {
            out.insert((StateId(z), z2));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SystemBuilder;

    fn pushdown(build: impl FnOnce(&mut SystemBuilder, crate::model::ProcessId)) -> PushdownProcess {
        let mut b = SystemBuilder::new();
        let p = b.process("p");
        build(&mut b, p);
        b.build().pushdowns.remove(0)
    }

    /// z0 --push a--> z1 --pop a--> z2
    fn push_pop_chain() -> PushdownProcess {
        pushdown(|b, p| {
            let z0 = b.state(p, "z0");
            let z1 = b.state(p, "z1");
            let z2 = b.state(p, "z2");
            b.init(p, z0);
            let a = b.stack_symbol(p, "a");
            b.transition(p, z0, Action::Push(a), z1);
            b.transition(p, z1, Action::Pop(a), z2);
        })
    }

    #[test]
    fn chain_reaches_all_states_and_empties() {
        let pd = push_pop_chain();
        let reach = control_reachable(&pd, StateId(0)).unwrap();
        assert_eq!(reach, [StateId(0), StateId(1), StateId(2)].into_iter().collect());
        let aut = saturate(&pd, &PAutomaton::empty_stack_at(3, StateId(0))).unwrap();
        assert!(aut.accepts(StateId(0), &[]));
        assert!(aut.accepts(StateId(1), &[SymbolId(0)]));
        assert!(!aut.accepts(StateId(1), &[]));
        assert!(aut.accepts(StateId(2), &[]));
        assert!(!aut.accepts(StateId(2), &[SymbolId(0)]));
    }

    #[test]
    fn push_loop_accepts_all_heights() {
        // z0 --push a--> z0, z0 --pop a--> z1
        let pd = pushdown(|b, p| {
            let z0 = b.state(p, "z0");
            let z1 = b.state(p, "z1");
            b.init(p, z0);
            let a = b.stack_symbol(p, "a");
            b.transition(p, z0, Action::Push(a), z0);
            b.transition(p, z0, Action::Pop(a), z1);
        });
        let aut = saturate(&pd, &PAutomaton::empty_stack_at(2, StateId(0))).unwrap();
        for h in 0..6 {
            let stack = vec![SymbolId(0); h];
            assert!(aut.accepts(StateId(0), &stack), "z0 with height {h}");
            assert!(aut.accepts(StateId(1), &stack), "z1 with height {h}");
        }
    }

    #[test]
    fn guarded_local_fires_only_at_empty_stack() {
        // z0 --push a--> z1 --pop a--> z2 --guarded local--> z3,
        // plus z1 --guarded local--> z4 (never fires: stack nonempty at z1)
        let pd = pushdown(|b, p| {
            let z0 = b.state(p, "z0");
            let z1 = b.state(p, "z1");
            let z2 = b.state(p, "z2");
            let z3 = b.state(p, "z3");
            let z4 = b.state(p, "z4");
            b.init(p, z0);
            let a = b.stack_symbol(p, "a");
            b.transition(p, z0, Action::Push(a), z1);
            b.transition(p, z1, Action::Pop(a), z2);
            b.transition(p, z2, Action::Local(0), z3);
            b.transition(p, z1, Action::Local(1), z4);
            b.eps_action(p, Action::Local(0));
            b.eps_action(p, Action::Local(1));
        });
        let reach = control_reachable(&pd, StateId(0)).unwrap();
        assert!(reach.contains(&StateId(3)));
        assert!(!reach.contains(&StateId(4)));
    }

    #[test]
    fn empty_pairs_is_reflexive_and_transitive() {
        // z0 -> z1 -> z2 via balanced excursions, z2 -> z0 never
        let pd = pushdown(|b, p| {
            let z0 = b.state(p, "z0");
            let z1 = b.state(p, "z1");
            let z2 = b.state(p, "z2");
            b.init(p, z0);
            let a = b.stack_symbol(p, "a");
            let mid01 = b.state(p, "m01");
            b.transition(p, z0, Action::Push(a), mid01);
            b.transition(p, mid01, Action::Pop(a), z1);
            b.transition(p, z1, Action::Local(0), z2);
        });
        let pairs = empty_pairs(&pd).unwrap();
        for z in 0..4 {
            assert!(pairs.contains(&(StateId(z), StateId(z))), "reflexive at {z}");
        }
        assert!(pairs.contains(&(StateId(0), StateId(1))));
        assert!(pairs.contains(&(StateId(1), StateId(2))));
        assert!(pairs.contains(&(StateId(0), StateId(2))), "transitive");
        assert!(!pairs.contains(&(StateId(2), StateId(0))));
        // closure property on the whole relation
        for &(a, b2) in &pairs {
            for &(c, d) in &pairs {
                if b2 == c {
                    assert!(pairs.contains(&(a, d)));
                }
            }
        }
    }

    #[test]
    fn unbalanced_push_never_empties() {
        // z0 --push a--> z1 (no pop): z1 never has empty stack
        let pd = pushdown(|b, p| {
            let z0 = b.state(p, "z0");
            let z1 = b.state(p, "z1");
            b.init(p, z0);
            let a = b.stack_symbol(p, "a");
            b.transition(p, z0, Action::Push(a), z1);
        });
        let pairs = empty_pairs(&pd).unwrap();
        assert!(!pairs.contains(&(StateId(0), StateId(1))));
        let reach = control_reachable(&pd, StateId(0)).unwrap();
        assert!(reach.contains(&StateId(1)));
    }

    #[test]
    fn communication_actions_are_rejected() {
        let mut b = SystemBuilder::new();
        let p = b.process("p");
        let q = b.process("q");
        let c = b.channel("c", p, q);
        let m = b.message("m");
        let z0 = b.state(p, "z0");
        b.init(p, z0);
        b.transition(p, z0, Action::Send { channel: c, message: m }, z0);
        let pd = b.build().pushdowns.remove(0);
        assert_eq!(
            saturate(&pd, &PAutomaton::empty_stack_at(1, StateId(0))),
            Err(SaturateError::CommunicationAction)
        );
    }

    #[test]
    fn pop_through_guard_chain() {
        // guarded local z0 -> z1 (enabled at start), then push/pop cycle back
        // to empty enabling another guarded local at z3
        let pd = pushdown(|b, p| {
            let z0 = b.state(p, "z0");
            let z1 = b.state(p, "z1");
            let z2 = b.state(p, "z2");
            let z3 = b.state(p, "z3");
            let z4 = b.state(p, "z4");
            b.init(p, z0);
            let a = b.stack_symbol(p, "a");
            b.transition(p, z0, Action::Local(0), z1);
            b.eps_action(p, Action::Local(0));
            b.transition(p, z1, Action::Push(a), z2);
            b.transition(p, z2, Action::Pop(a), z3);
            b.transition(p, z3, Action::Local(1), z4);
            b.eps_action(p, Action::Local(1));
        });
        let pairs = empty_pairs(&pd).unwrap();
        assert!(pairs.contains(&(StateId(0), StateId(4))));
    }
}

impl PartialEq for PAutomaton {
    fn eq(&self, other: &Self) -> bool {
        self.control_count == other.control_count
            && self.transitions == other.transitions
            && self.eps == other.eps
            && self.accepting == other.accepting
    }
}
impl Eq for PAutomaton {}
